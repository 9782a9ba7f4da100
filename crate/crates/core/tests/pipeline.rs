//! End-to-end properties through the public API: mesh → forward → DtN → norms.

use std::sync::{Arc, OnceLock};

use eitlab_core::dtn::{boundary_arc, difference_norm, dtn_matrix, local_dtn};
use eitlab_core::forward::{assemble, solve_dirichlet, Admittivity};
use eitlab_core::geometry::{build_partition, Rect};
use eitlab_core::mesh::{generate_mesh, Mesh};
use eitlab_core::Complex64;
use proptest::prelude::*;

fn mesh() -> Arc<Mesh> {
    static MESH: OnceLock<Arc<Mesh>> = OnceLock::new();
    MESH.get_or_init(|| {
        let p = build_partition(3, Rect::unit(), false).unwrap();
        Arc::new(generate_mesh(&p, 1.0 / 16.0).unwrap())
    })
    .clone()
}

fn gamma() -> impl Strategy<Value = Complex64> {
    (0.5..3.0f64, -1.5..1.5f64).prop_map(|(re, im)| Complex64::new(re, im))
}

fn admittivity() -> impl Strategy<Value = Admittivity> {
    prop::collection::vec(gamma(), 3).prop_map(|v| Admittivity::new(v, 4.0).unwrap())
}

#[test]
fn mesh_text_roundtrip_keeps_hash() {
    let m = mesh();
    let back = Mesh::from_text(&m.to_text()).unwrap();
    assert_eq!(back.hash(), m.hash());
    assert_eq!(back.node_count(), m.node_count());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn dtn_is_complex_symmetric_and_kills_constants(a in admittivity()) {
        let d = dtn_matrix(mesh(), &a).unwrap();
        let scale = d.matrix.iter().map(|v| v.norm()).fold(0.0, f64::max);
        prop_assert!(d.symmetry_defect() <= 1e-12 * scale);
        prop_assert!(d.constant_defect() <= 1e-10 * scale);
    }

    #[test]
    fn dtn_scales_with_a_constant_factor(a in admittivity(), s in (0.5..1.5f64, -0.3..0.3f64)) {
        let s = Complex64::new(s.0, s.1);
        let scaled: Vec<Complex64> = a.values().iter().map(|g| g * s).collect();
        let b = Admittivity::new(scaled, 8.0);
        prop_assume!(b.is_ok());
        let b = b.unwrap();
        let (da, db) = (dtn_matrix(mesh(), &a).unwrap(), dtn_matrix(mesh(), &b).unwrap());
        let worst = (&db.matrix - da.matrix.map(|v| v * s)).iter().map(|v| v.norm()).fold(0.0, f64::max);
        prop_assert!(worst <= 1e-10, "{worst}");
    }

    #[test]
    fn difference_norm_is_a_metric_on_maps(a in admittivity(), b in admittivity()) {
        let (da, db) = (dtn_matrix(mesh(), &a).unwrap(), dtn_matrix(mesh(), &b).unwrap());
        let ab = difference_norm(&da, &db).unwrap();
        let ba = difference_norm(&db, &da).unwrap();
        prop_assert!((ab - ba).abs() <= 1e-12 * ab.max(1.0));
        prop_assert!(difference_norm(&da, &da).unwrap() == 0.0);
    }

    #[test]
    fn local_norm_is_bounded_by_global(a in admittivity(), b in admittivity()) {
        let m = mesh();
        let arc = boundary_arc(&m, |p| p[1] == 0.0);
        let (da, db) = (dtn_matrix(m.clone(), &a).unwrap(), dtn_matrix(m, &b).unwrap());
        let global = difference_norm(&da, &db).unwrap();
        let local = difference_norm(&local_dtn(&da, &arc).unwrap(), &local_dtn(&db, &arc).unwrap()).unwrap();
        prop_assert!(local <= global * (1.0 + 1e-10), "{local} > {global}");
    }

    #[test]
    fn energy_flux_matches_dtn_quadratic_form(a in admittivity(), seed in 0u64..1000) {
        let m = mesh();
        let sys = assemble(m.clone(), &a).unwrap();
        let f: Vec<Complex64> = (0..m.boundary_count())
            .map(|i| Complex64::new(((i as u64 * 7919 + seed) % 13) as f64 / 13.0, ((i as u64 + seed) % 5) as f64 / 5.0))
            .collect();
        let u = solve_dirichlet(&sys, &f).unwrap();
        let d = dtn_matrix(m.clone(), &a).unwrap();
        let lf: Complex64 = f.iter().zip(d.matrix.row_iter()).map(|(fi, row)| {
            fi * row.iter().zip(&f).map(|(r, fj)| r * fj).sum::<Complex64>()
        }).sum();
        let energy: Complex64 = m.triangles.iter().enumerate().map(|(t, tri)| {
            let k = m.element_stiffness(t);
            let mut e = Complex64::new(0.0, 0.0);
            for (i, &p) in tri.nodes.iter().enumerate() {
                for (j, &q) in tri.nodes.iter().enumerate() {
                    e += u.values[p] * k[i][j] * u.values[q];
                }
            }
            a.gamma(tri.region) * e
        }).sum();
        prop_assert!((lf - energy).norm() <= 1e-9 * energy.norm().max(1.0), "{lf} vs {energy}");
    }
}
