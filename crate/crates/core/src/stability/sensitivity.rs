//! Sensitivity of `γ ↦ Λ_γ` for piecewise-constant admittivities.
//!
//! The stiffness is affine in each `γ_j`, so `∂Λ/∂γ_j = Eᵀ K^{(j)} E` with `E`
//! the discrete harmonic extensions and `K^{(j)}` the unit-coefficient
//! stiffness of region `j`. The map is holomorphic in `γ`, hence the
//! Jacobian is complex-linear.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;

use crate::dtn::{dtn_from_system, harmonic_extensions, DtNMap, GramWeight};
use crate::forward::{assemble, region_stiffness, Admittivity, StiffnessSystem};
use crate::mesh::Mesh;
use crate::{Error, Result};

/// Relative threshold below which the smallest singular value counts as zero.
pub const RANK_TOLERANCE: f64 = 1e-12;

/// Full nodal harmonic extensions, one column per boundary hat (trace order).
pub fn extension_matrix(sys: &StiffnessSystem) -> Result<DMatrix<Complex64>> {
    let ext = harmonic_extensions(sys)?;
    let nb = sys.boundary_count();
    let mut u = DMatrix::zeros(sys.mesh.node_count(), nb);
    for (q, x) in ext.iter().enumerate() {
        for (k, &n) in sys.interior.iter().enumerate() {
            u[(n, q)] = x[k];
        }
        u[(sys.mesh.boundary_nodes[q], q)] = Complex64::new(1.0, 0.0);
    }
    Ok(u)
}

/// `∂Λ/∂γ_j` for `j = 1…N`.
pub fn dtn_derivatives(sys: &StiffnessSystem) -> Result<Vec<DMatrix<Complex64>>> {
    let u = extension_matrix(sys)?;
    let regions = sys.admittivity.len();
    (1..=regions)
        .into_par_iter()
        .map(|j| {
            let k = region_stiffness(&sys.mesh, j);
            let mut ku = DMatrix::<Complex64>::zeros(u.nrows(), u.ncols());
            for r in 0..k.nrows {
                for (c, v) in k.row(r) {
                    for q in 0..u.ncols() {
                        ku[(r, q)] += u[(c, q)] * v;
                    }
                }
            }
            Ok(u.transpose() * ku)
        })
        .collect()
}

/// Weighted Jacobian with its singular structure.
#[derive(Debug, Clone)]
pub struct Sensitivity {
    /// `∂Λ/∂γ_j` in the hat basis.
    pub derivatives: Vec<DMatrix<Complex64>>,
    /// Column `j` is `vec(L⁻¹ ∂Λ/∂γ_j L⁻ᵀ) / √nb`.
    pub weighted: DMatrix<Complex64>,
    pub singular_values: Vec<f64>,
    /// Left singular vector of `σ_min` (length `nb²`).
    pub left_min: DVector<Complex64>,
    /// Right singular vector of `σ_min` (length `N`).
    pub right_min: DVector<Complex64>,
    pub boundary_dim: usize,
}

impl Sensitivity {
    pub fn sigma_min(&self) -> f64 {
        *self.singular_values.last().expect("at least one region")
    }

    pub fn sigma_max(&self) -> f64 {
        self.singular_values[0]
    }

    /// `1/σ_min`, the local Lipschitz constant in the weighted metric.
    pub fn lipschitz_estimate(&self) -> f64 {
        1.0 / self.sigma_min()
    }

    pub fn condition(&self) -> f64 {
        self.sigma_max() / self.sigma_min()
    }
}

/// `vec(L⁻¹ X L⁻ᵀ) / √nb`, column-major.
pub fn weighted_vec(w: &GramWeight, x: &DMatrix<Complex64>) -> DVector<Complex64> {
    let z = w.whiten(x);
    let s = 1.0 / (w.dim() as f64).sqrt();
    DVector::from_iterator(z.len(), z.iter().map(|v| v * s))
}

/// Inverse of [`weighted_vec`]: the hat-basis matrix `√nb · L Z Lᵀ`.
pub fn unweighted_matrix(gram_half: &DMatrix<f64>, v: &DVector<Complex64>) -> Result<DMatrix<Complex64>> {
    let nb = gram_half.nrows();
    if v.len() != nb * nb {
        return Err(Error::DimensionMismatch(format!("vector of length {} for a {nb}x{nb} matrix", v.len())));
    }
    let l = nalgebra::Cholesky::new(gram_half.clone())
        .ok_or_else(|| Error::NotPositiveDefinite("H^1/2 Gram matrix".into()))?
        .l()
        .map(|x| Complex64::new(x, 0.0));
    let z = DMatrix::from_column_slice(nb, nb, v.as_slice());
    Ok(&l * z * l.transpose() * Complex64::new((nb as f64).sqrt(), 0.0))
}

/// Jacobian, weighted SVD and rank check at the admittivity of `sys`.
pub fn sensitivity_from_system(sys: &StiffnessSystem, gram_half: &DMatrix<f64>) -> Result<Sensitivity> {
    let derivatives = dtn_derivatives(sys)?;
    let w = GramWeight::new(gram_half)?;
    let nb = w.dim();
    let cols: Vec<DVector<Complex64>> = derivatives.iter().map(|d| weighted_vec(&w, d)).collect();
    let weighted = DMatrix::from_columns(&cols);
    let svd = weighted.clone().svd(true, true);
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let singular_values: Vec<f64> = order.iter().map(|&i| svd.singular_values[i]).collect();
    let imin = *order.last().expect("at least one region");
    let (smin, smax) = (singular_values[singular_values.len() - 1], singular_values[0]);
    if !(smin > RANK_TOLERANCE * smax) {
        return Err(Error::RankDeficient(format!(
            "σ_min = {smin:.3e}, σ_max = {smax:.3e}; the mesh may be too coarse to resolve every region"
        )));
    }
    let u = svd.u.expect("requested");
    let vt = svd.v_t.expect("requested");
    Ok(Sensitivity {
        derivatives,
        weighted,
        singular_values,
        left_min: u.column(imin).into_owned(),
        right_min: vt.row(imin).adjoint(),
        boundary_dim: nb,
    })
}

/// Jacobian of the DtN map at `a`, weighted in the `H^{1/2}` Gram metric.
pub fn sensitivity_jacobian(mesh: Arc<Mesh>, a: &Admittivity) -> Result<Sensitivity> {
    let sys = assemble(mesh, a)?;
    let d: DtNMap = dtn_from_system(&sys)?;
    sensitivity_from_system(&sys, &d.gram_half)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dtn::dtn_matrix;
    use crate::geometry::{build_partition, Rect};
    use crate::mesh::{disk_mesh, generate_mesh};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn disk_column_is_unit_dtn() {
        let mesh = Arc::new(disk_mesh([0.0, 0.0], 1.0, 0.25).unwrap());
        let a = Admittivity::constant(c(2.0, 0.5), 1, 10.0).unwrap();
        let s = sensitivity_jacobian(mesh.clone(), &a).unwrap();
        let l1 = dtn_matrix(mesh, &Admittivity::constant(c(1.0, 0.0), 1, 10.0).unwrap()).unwrap();
        let err = (&s.derivatives[0] - &l1.matrix).norm() / l1.matrix.norm();
        assert!(err < 1e-10, "{err}");
    }

    #[test]
    fn matches_central_differences() {
        let p = build_partition(3, Rect::unit(), false).unwrap();
        let mesh = Arc::new(generate_mesh(&p, 1.0 / 12.0).unwrap());
        let g = vec![c(1.0, 0.2), c(1.5, -0.3), c(0.8, 0.1)];
        let a = Admittivity::new(g.clone(), 10.0).unwrap();
        let s = sensitivity_jacobian(mesh.clone(), &a).unwrap();
        let step = 1e-5;
        for j in 0..3 {
            for dir in [c(1.0, 0.0), c(0.0, 1.0)] {
                let mut gp = g.clone();
                let mut gm = g.clone();
                gp[j] += dir * step;
                gm[j] -= dir * step;
                let lp = dtn_matrix(mesh.clone(), &Admittivity::new(gp, 10.0).unwrap()).unwrap();
                let lm = dtn_matrix(mesh.clone(), &Admittivity::new(gm, 10.0).unwrap()).unwrap();
                let fd = (lp.matrix - lm.matrix) / Complex64::new(2.0 * step, 0.0);
                let an = &s.derivatives[j] * dir;
                let err = (&an - &fd).norm() / an.norm();
                assert!(err < 1e-6, "region {} dir {dir}: {err}", j + 1);
            }
        }
    }

    #[test]
    fn weighted_vec_roundtrip() {
        let p = build_partition(2, Rect::unit(), false).unwrap();
        let mesh = Arc::new(generate_mesh(&p, 0.25).unwrap());
        let d = dtn_matrix(mesh, &Admittivity::new(vec![c(1.0, 0.0), c(2.0, 1.0)], 10.0).unwrap()).unwrap();
        let w = GramWeight::new(&d.gram_half).unwrap();
        let v = weighted_vec(&w, &d.matrix);
        let back = unweighted_matrix(&d.gram_half, &v).unwrap();
        assert!((back - &d.matrix).norm() < 1e-10 * d.matrix.norm());
        assert!((v.norm() - w.frobenius(&d.matrix)).abs() < 1e-12 * v.norm());
    }

    #[test]
    fn singular_values_sorted_and_positive() {
        let p = build_partition(4, Rect::unit(), false).unwrap();
        let mesh = Arc::new(generate_mesh(&p, 1.0 / 8.0).unwrap());
        let a = Admittivity::new(vec![c(1.0, 0.0), c(1.0, 0.5), c(2.0, 0.0), c(1.5, 0.0)], 10.0).unwrap();
        let s = sensitivity_jacobian(mesh, &a).unwrap();
        assert_eq!(s.singular_values.len(), 4);
        assert!(s.singular_values.windows(2).all(|w| w[0] >= w[1]));
        assert!(s.sigma_min() > 0.0);
        let img = &s.weighted * &s.right_min;
        assert!((img.norm() - s.sigma_min()).abs() < 1e-10 * s.sigma_max());
    }

    #[test]
    fn sigma_min_stable_under_refinement() {
        let p = build_partition(4, Rect::unit(), false).unwrap();
        let a = Admittivity::new(vec![c(1.0, 0.0), c(1.0, 0.5), c(2.0, 0.0), c(1.5, 0.0)], 10.0).unwrap();
        let sigma = |h: f64| {
            let mesh = Arc::new(generate_mesh(&p, h).unwrap());
            sensitivity_jacobian(mesh, &a).unwrap().sigma_min()
        };
        let (coarse, fine) = (sigma(1.0 / 16.0), sigma(1.0 / 32.0));
        assert!(coarse > 0.0);
        assert!((fine / coarse - 1.0).abs() <= 0.1, "{coarse} vs {fine}");
    }
}
