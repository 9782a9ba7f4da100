//! Discrete Dirichlet-to-Neumann maps and boundary fractional norms.
//!
//! `Λ` is the Schur complement of the stiffness onto the boundary nodes,
//! expressed in the boundary hat basis (trace order). Fractional norms on
//! the boundary loop come from the boundary mass `M` and the 1D
//! Laplace–Beltrami stiffness `B` via `W_s = M V (I + D)^s V⁻¹`, where
//! `B V = M V D`.

use std::io::Write;
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::forward::{assemble, Admittivity, StiffnessSystem};
use crate::linalg::CsrMatrix;
use crate::mesh::Mesh;
use crate::{Error, Point, Result};

/// A DtN matrix together with the boundary Gram structure it is measured in.
#[derive(Debug, Clone)]
pub struct DtNMap {
    pub matrix: DMatrix<Complex64>,
    pub mass: DMatrix<f64>,
    pub lb_stiffness: DMatrix<f64>,
    pub gram_half: DMatrix<f64>,
    /// Mesh node ids of the rows, in trace order.
    pub boundary_nodes: Vec<usize>,
    pub mesh_hash: String,
}

impl DtNMap {
    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// `max |Λ − Λᵀ|` over entries.
    pub fn symmetry_defect(&self) -> f64 {
        let n = self.dim();
        let mut d = 0.0f64;
        for i in 0..n {
            for j in 0..i {
                d = d.max((self.matrix[(i, j)] - self.matrix[(j, i)]).norm());
            }
        }
        d
    }

    /// `‖Λ 1‖_∞`.
    pub fn constant_defect(&self) -> f64 {
        self.matrix
            .row_iter()
            .map(|r| r.iter().sum::<Complex64>().norm())
            .fold(0.0, f64::max)
    }

    /// Eigenvalues of `Re Λ v = μ M v`, ascending.
    pub fn spectrum(&self) -> Result<Vec<f64>> {
        let li = cholesky_l(&self.mass, "boundary mass matrix")?
            .try_inverse()
            .ok_or_else(|| Error::NotPositiveDefinite("boundary mass matrix".into()))?;
        let s = &li * self.matrix.map(|v| v.re) * li.transpose();
        let mut e: Vec<f64> = nalgebra::SymmetricEigen::new(0.5 * (&s + s.transpose()))
            .eigenvalues
            .iter()
            .copied()
            .collect();
        e.sort_by(f64::total_cmp);
        Ok(e)
    }

    /// Dense matrix CSV: one row per boundary node, `re_q,im_q` pairs per column.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "# mesh_sha256={}", self.mesh_hash)?;
        let n = self.dim();
        let mut w = csv_writer(out);
        let header: Vec<String> = (0..n)
            .flat_map(|q| [format!("re_{q}"), format!("im_{q}")])
            .collect();
        w.write_record(&header)?;
        for p in 0..n {
            let row: Vec<String> = (0..n)
                .flat_map(|q| {
                    let v = self.matrix[(p, q)];
                    [v.re.to_string(), v.im.to_string()]
                })
                .collect();
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }
}

fn csv_writer<W: Write>(out: W) -> csv::Writer<W> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out)
}

/// Writes a real dense matrix as CSV with columns `c_0, c_1, …`.
pub fn write_real_csv<W: Write>(m: &DMatrix<f64>, mesh_hash: &str, mut out: W) -> Result<()> {
    writeln!(out, "# mesh_sha256={mesh_hash}")?;
    let mut w = csv_writer(out);
    w.write_record((0..m.ncols()).map(|q| format!("c_{q}")))?;
    for r in m.row_iter() {
        w.write_record(r.iter().map(|v| v.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

/// `K_IBᵀ x`, i.e. `K_BI x` by complex symmetry.
fn k_bi_mul(k_ib: &CsrMatrix<Complex64>, x: &[Complex64]) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); k_ib.ncols];
    for (i, xi) in x.iter().enumerate() {
        for (p, v) in k_ib.row(i) {
            out[p] += v * xi;
        }
    }
    out
}

/// Interior parts of the discrete harmonic extensions of every boundary hat
/// function, one vector per boundary node in trace order.
pub fn harmonic_extensions(sys: &StiffnessSystem) -> Result<Vec<Vec<Complex64>>> {
    sys.factorization()?;
    let nb = sys.boundary_count();
    (0..nb)
        .into_par_iter()
        .map(|q| {
            let mut e = vec![Complex64::new(0.0, 0.0); nb];
            e[q] = Complex64::new(1.0, 0.0);
            sys.solve_interior(&e, None).map(|(x, _)| x)
        })
        .collect()
}

/// `Λ f = K_BB f − K_BI K_II⁻¹ K_IB f`.
pub fn dtn_action(sys: &StiffnessSystem, f: &[Complex64]) -> Result<Vec<Complex64>> {
    let (ui, _) = sys.solve_interior(f, None)?;
    let mut out = sys.k_bb.mul_vec(f);
    for (o, v) in out.iter_mut().zip(k_bi_mul(&sys.k_ib, &ui)) {
        *o += v;
    }
    Ok(out)
}

/// Dense Schur complement from an assembled system.
pub fn dtn_from_system(sys: &StiffnessSystem) -> Result<DtNMap> {
    let ext = harmonic_extensions(sys)?;
    let mut matrix = sys.k_bb.to_dense();
    for (q, x) in ext.iter().enumerate() {
        for (p, v) in k_bi_mul(&sys.k_ib, x).into_iter().enumerate() {
            matrix[(p, q)] += v;
        }
    }
    let (mass, lb_stiffness) = boundary_matrices(&sys.mesh);
    let gram_half = h_half_gram(&mass, &lb_stiffness, 0.5)?;
    Ok(DtNMap {
        matrix,
        mass,
        lb_stiffness,
        gram_half,
        boundary_nodes: sys.mesh.boundary_nodes.clone(),
        mesh_hash: sys.mesh.hash(),
    })
}

/// Assembles the stiffness for `a` on `mesh` and returns its DtN map.
pub fn dtn_matrix(mesh: Arc<Mesh>, a: &Admittivity) -> Result<DtNMap> {
    dtn_from_system(&assemble(mesh, a)?)
}

/// Boundary mass `M` and Laplace–Beltrami stiffness `B` in trace order.
pub fn boundary_matrices(mesh: &Mesh) -> (DMatrix<f64>, DMatrix<f64>) {
    let nb = mesh.boundary_count();
    let pos = mesh.boundary_position();
    let mut m = DMatrix::zeros(nb, nb);
    let mut b = DMatrix::zeros(nb, nb);
    for e in &mesh.boundary_edges {
        let (p, q) = (pos[e[0]].expect("boundary"), pos[e[1]].expect("boundary"));
        let a = mesh.nodes[e[0]];
        let c = mesh.nodes[e[1]];
        let len = (a[0] - c[0]).hypot(a[1] - c[1]);
        m[(p, p)] += len / 3.0;
        m[(q, q)] += len / 3.0;
        m[(p, q)] += len / 6.0;
        m[(q, p)] += len / 6.0;
        b[(p, p)] += 1.0 / len;
        b[(q, q)] += 1.0 / len;
        b[(p, q)] -= 1.0 / len;
        b[(q, p)] -= 1.0 / len;
    }
    (m, b)
}

fn cholesky_l(m: &DMatrix<f64>, what: &str) -> Result<DMatrix<f64>> {
    nalgebra::Cholesky::new(m.clone())
        .map(|c| c.l())
        .ok_or_else(|| Error::NotPositiveDefinite(what.to_string()))
}

/// `W_s = M V (I + D)^s V⁻¹` for `B V = M V D`, computed as `L Q (I+D)^s Qᵀ Lᵀ`
/// with `M = L Lᵀ` and `L⁻¹ B L⁻ᵀ = Q D Qᵀ`.
pub fn h_half_gram(m: &DMatrix<f64>, b: &DMatrix<f64>, s: f64) -> Result<DMatrix<f64>> {
    if !(-1.0..=1.0).contains(&s) {
        return Err(Error::InvalidArgument(format!("exponent s = {s} outside [-1, 1]")));
    }
    if s == 0.0 {
        return Ok(m.clone());
    }
    let l = cholesky_l(m, "boundary mass matrix")?;
    let li = l
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::NotPositiveDefinite("boundary mass matrix".into()))?;
    let c = &li * b * li.transpose();
    let c = 0.5 * (&c + c.transpose());
    let eig = nalgebra::SymmetricEigen::try_new(c, 1e-14, 10_000)
        .ok_or_else(|| Error::SolverBreakdown("boundary eigenproblem did not converge".into()))?;
    let scale = eig.eigenvalues.map(|d| (1.0 + d.max(0.0)).powf(s));
    let lq = &l * &eig.eigenvectors;
    let mut scaled = lq.clone();
    for (j, mut col) in scaled.column_iter_mut().enumerate() {
        col *= scale[j];
    }
    let w = &scaled * lq.transpose();
    Ok(0.5 * (&w + w.transpose()))
}

/// Whitening `X ↦ L⁻¹ X L⁻ᵀ` for a Gram matrix `W = L Lᵀ`.
#[derive(Debug, Clone)]
pub struct GramWeight {
    l: DMatrix<Complex64>,
}

impl GramWeight {
    pub fn new(w: &DMatrix<f64>) -> Result<Self> {
        let l = cholesky_l(w, "H^1/2 Gram matrix")?;
        Ok(Self {
            l: l.map(|v| Complex64::new(v, 0.0)),
        })
    }

    pub fn dim(&self) -> usize {
        self.l.nrows()
    }

    pub fn whiten(&self, x: &DMatrix<Complex64>) -> DMatrix<Complex64> {
        let y = self
            .l
            .solve_lower_triangular(x)
            .expect("Cholesky factor has a positive diagonal");
        self.l
            .solve_lower_triangular(&y.transpose())
            .expect("Cholesky factor has a positive diagonal")
            .transpose()
    }

    /// Largest singular value of the whitened matrix.
    pub fn operator_norm(&self, x: &DMatrix<Complex64>) -> f64 {
        let z = self.whiten(x);
        if z.iter().all(|v| *v == Complex64::new(0.0, 0.0)) {
            return 0.0;
        }
        z.singular_values().max()
    }

    /// `‖L⁻¹ X L⁻ᵀ‖_F / √n`.
    pub fn frobenius(&self, x: &DMatrix<Complex64>) -> f64 {
        self.whiten(x).norm() / (self.dim() as f64).sqrt()
    }
}

/// `sup |ψᵀ Δ f| / (‖f‖_{1/2} ‖ψ‖_{1/2})`, the largest singular value of `L⁻¹ Δ L⁻ᵀ`.
pub fn operator_norm(delta: &DMatrix<Complex64>, w_half: &DMatrix<f64>) -> Result<f64> {
    if delta.nrows() != w_half.nrows() || delta.ncols() != w_half.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "difference is {}x{}, Gram is {}x{}",
            delta.nrows(),
            delta.ncols(),
            w_half.nrows(),
            w_half.ncols()
        )));
    }
    Ok(GramWeight::new(w_half)?.operator_norm(delta))
}

/// `‖Λ₁ − Λ₂‖` for two maps on the same mesh, measured with the first map's Gram.
pub fn difference_norm(a: &DtNMap, b: &DtNMap) -> Result<f64> {
    if a.mesh_hash != b.mesh_hash {
        return Err(Error::MismatchedMesh);
    }
    operator_norm(&(&a.matrix - &b.matrix), &a.gram_half)
}

/// Operator norm restricted to the `modes` smoothest boundary modes (lowest
/// eigenvalues of `B v = d M v`) for both arguments. Grid-scale P1 modes are
/// excluded, which is where the discrete DtN departs from the continuum one.
pub fn band_limited_norm(
    delta: &DMatrix<Complex64>,
    mass: &DMatrix<f64>,
    lb: &DMatrix<f64>,
    modes: usize,
) -> Result<f64> {
    let nb = mass.nrows();
    if delta.nrows() != nb || lb.nrows() != nb || modes == 0 || modes > nb {
        return Err(Error::DimensionMismatch(format!(
            "band of {modes} modes on a {nb}-node boundary with a {}x{} difference",
            delta.nrows(),
            delta.ncols()
        )));
    }
    let l = cholesky_l(mass, "boundary mass matrix")?;
    let li = l
        .try_inverse()
        .ok_or_else(|| Error::NotPositiveDefinite("boundary mass matrix".into()))?;
    let c = &li * lb * li.transpose();
    let eig = nalgebra::SymmetricEigen::try_new(0.5 * (&c + c.transpose()), 1e-14, 10_000)
        .ok_or_else(|| Error::SolverBreakdown("boundary eigenproblem did not converge".into()))?;
    let mut order: Vec<usize> = (0..nb).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let basis = li.transpose() * &eig.eigenvectors;
    let v = DMatrix::from_fn(nb, modes, |i, k| {
        let j = order[k];
        Complex64::new(basis[(i, j)] / (1.0 + eig.eigenvalues[j].max(0.0)).powf(0.25), 0.0)
    });
    let z = v.transpose() * delta * &v;
    if z.iter().all(|x| *x == Complex64::new(0.0, 0.0)) {
        return Ok(0.0);
    }
    Ok(z.singular_values().max())
}

fn principal<T: nalgebra::Scalar + Copy>(m: &DMatrix<T>, idx: &[usize]) -> DMatrix<T> {
    DMatrix::from_fn(idx.len(), idx.len(), |i, j| m[(idx[i], idx[j])])
}

/// Local map on a contiguous boundary arc (trace positions, in order).
///
/// Keeps the arc minus its two endpoints, so the retained hat functions are
/// supported in the arc; the full loop is kept whole. The Gram is the
/// principal submatrix of the global one.
pub fn local_dtn(d: &DtNMap, arc: &[usize]) -> Result<DtNMap> {
    let nb = d.dim();
    if arc.iter().any(|&p| p >= nb) {
        return Err(Error::InvalidArgument(format!(
            "arc position out of range (boundary has {nb} nodes)"
        )));
    }
    let kept: Vec<usize> = if arc.len() == nb {
        arc.to_vec()
    } else if arc.len() > 2 {
        arc[1..arc.len() - 1].to_vec()
    } else {
        Vec::new()
    };
    if kept.is_empty() {
        return Err(Error::EmptySubset(format!(
            "arc of {} nodes has no interior nodes",
            arc.len()
        )));
    }
    Ok(DtNMap {
        matrix: principal(&d.matrix, &kept),
        mass: principal(&d.mass, &kept),
        lb_stiffness: principal(&d.lb_stiffness, &kept),
        gram_half: principal(&d.gram_half, &kept),
        boundary_nodes: kept.iter().map(|&p| d.boundary_nodes[p]).collect(),
        mesh_hash: d.mesh_hash.clone(),
    })
}

/// Trace positions of the boundary nodes satisfying `pred`, rotated so that
/// a contiguous arc is returned in order.
pub fn boundary_arc(mesh: &Mesh, pred: impl Fn(Point) -> bool) -> Vec<usize> {
    let nb = mesh.boundary_count();
    let hit: Vec<bool> = mesh.boundary_nodes.iter().map(|&n| pred(mesh.nodes[n])).collect();
    let Some(start) = (0..nb).find(|&p| !hit[p]) else {
        return (0..nb).collect();
    };
    (1..=nb)
        .map(|k| (start + k) % nb)
        .filter(|&p| hit[p])
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_partition, Rect};
    use crate::mesh::{disk_mesh, generate_mesh};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn strips(n: usize, h: f64) -> Arc<Mesh> {
        let p = build_partition(n, Rect::unit(), false).unwrap();
        Arc::new(generate_mesh(&p, h).unwrap())
    }

    #[test]
    fn kernel_and_symmetry() {
        let m = strips(2, 1.0 / 8.0);
        let a = Admittivity::new(vec![c(1.0, 0.5), c(2.0, -0.3)], 3.0).unwrap();
        let d = dtn_matrix(m.clone(), &a).unwrap();
        assert!(d.constant_defect() < 1e-10);
        assert!(d.symmetry_defect() < 1e-12);
        // Action agrees with the dense matrix.
        let f = m.trace_of(|p| c(p[0] * p[0], p[1]));
        let sys = assemble(m.clone(), &a).unwrap();
        let lf = dtn_action(&sys, &f).unwrap();
        let dense = &d.matrix * nalgebra::DVector::from_vec(f.clone());
        for (x, y) in lf.iter().zip(dense.iter()) {
            assert!((x - y).norm() < 1e-10);
        }
    }

    #[test]
    fn real_admittivity_gives_real_symmetric_map() {
        let m = strips(3, 1.0 / 6.0);
        let a = Admittivity::new(vec![c(1.0, 0.0), c(2.0, 0.0), c(0.5, 0.0)], 3.0).unwrap();
        let d = dtn_matrix(m, &a).unwrap();
        assert!(d.matrix.iter().all(|v| v.im == 0.0));
        assert!(d.symmetry_defect() < 1e-12);
    }

    #[test]
    fn energy_matches_bilinear_form() {
        // fᵀ Λ g equals Σ γ ∇u_f · ∇u_g.
        let m = strips(2, 1.0 / 8.0);
        let a = Admittivity::new(vec![c(1.0, 1.0), c(2.0, 0.0)], 3.0).unwrap();
        let d = dtn_matrix(m.clone(), &a).unwrap();
        let sys = assemble(m.clone(), &a).unwrap();
        let f = m.trace_of(|p| c(p[0], 0.0));
        let g = m.trace_of(|p| c(p[1] * p[0], 1.0));
        let uf = crate::forward::solve_dirichlet(&sys, &f).unwrap();
        let ug = crate::forward::solve_dirichlet(&sys, &g).unwrap();
        let lhs = uf.energy_pairing(&ug.values);
        let rhs = (nalgebra::DVector::from_vec(g).transpose() * &d.matrix * nalgebra::DVector::from_vec(f))[(0, 0)];
        assert!((lhs - rhs).norm() < 1e-10 * lhs.norm());
    }

    #[test]
    fn gram_endpoints() {
        let m = disk_mesh([0.0, 0.0], 1.0, 0.25).unwrap();
        let (mass, b) = boundary_matrices(&m);
        let w0 = h_half_gram(&mass, &b, 0.0).unwrap();
        assert_eq!(w0, mass);
        let w1 = h_half_gram(&mass, &b, 1.0).unwrap();
        assert!((&w1 - (&mass + &b)).amax() < 1e-12);
        let wh = h_half_gram(&mass, &b, 0.5).unwrap();
        // W_{1/2} M⁻¹ W_{1/2} = W_1.
        let sq = &wh * mass.clone().try_inverse().unwrap() * &wh;
        assert!((&sq - &w1).amax() < 1e-10);
        assert!(h_half_gram(&mass, &b, 1.5).is_err());
    }

    #[test]
    fn fourier_mode_norms_on_circle() {
        let m = disk_mesh([0.0, 0.0], 1.0, 1.0 / 32.0).unwrap();
        let (mass, b) = boundary_matrices(&m);
        let wh = h_half_gram(&mass, &b, 0.5).unwrap().map(|v| c(v, 0.0));
        for k in 1..=8 {
            let f = nalgebra::DVector::from_vec(m.trace_of(|p| Complex64::from_polar(1.0, k as f64 * p[1].atan2(p[0]))));
            let n2 = (f.adjoint() * &wh * &f)[(0, 0)].re;
            let expect = 2.0 * std::f64::consts::PI * (1.0 + (k * k) as f64).sqrt();
            assert!((n2 / expect - 1.0).abs() < 0.05, "k={k} {n2} {expect}");
        }
    }

    #[test]
    fn disk_spectrum_coarse() {
        let m = Arc::new(disk_mesh([0.0, 0.0], 1.0, 1.0 / 16.0).unwrap());
        let a = Admittivity::new(vec![c(1.0, 0.0)], 1.0).unwrap();
        let d = dtn_matrix(m, &a).unwrap();
        let eig = d.spectrum().unwrap();
        assert!(eig[0].abs() < 1e-8);
        for k in 1..=4 {
            for e in [eig[2 * k - 1], eig[2 * k]] {
                assert!((e / k as f64 - 1.0).abs() < 0.03, "k={k} {e}");
            }
        }
    }

    #[test]
    fn operator_norm_of_constant_difference() {
        let m = Arc::new(disk_mesh([0.0, 0.0], 1.0, 1.0 / 16.0).unwrap());
        let d1 = dtn_matrix(m.clone(), &Admittivity::new(vec![c(1.0, 0.0)], 3.0).unwrap()).unwrap();
        let d2 = dtn_matrix(m.clone(), &Admittivity::new(vec![c(2.0, 0.0)], 3.0).unwrap()).unwrap();
        let n12 = difference_norm(&d1, &d2).unwrap();
        assert!(n12 >= 0.9, "{n12}");
        assert_eq!(difference_norm(&d1, &d1).unwrap(), 0.0);
        // Homogeneity.
        let d3 = dtn_matrix(m.clone(), &Admittivity::new(vec![c(3.0, 0.0)], 7.0).unwrap()).unwrap();
        let n13 = difference_norm(&d1, &d3).unwrap();
        assert!((n13 / n12 - 2.0).abs() < 1e-10);
    }

    #[test]
    fn local_map_restriction() {
        let m = strips(2, 1.0 / 8.0);
        let d1 = dtn_matrix(m.clone(), &Admittivity::new(vec![c(1.0, 0.0), c(2.0, 0.0)], 3.0).unwrap()).unwrap();
        let d2 = dtn_matrix(m.clone(), &Admittivity::new(vec![c(1.5, 0.2), c(2.0, 0.0)], 3.0).unwrap()).unwrap();
        let all: Vec<usize> = (0..d1.dim()).collect();
        let full = local_dtn(&d1, &all).unwrap();
        assert_eq!(full.matrix, d1.matrix);
        let bottom = boundary_arc(&m, |p| p[1] == 0.0);
        assert_eq!(bottom.len(), 9);
        assert!(bottom.windows(2).all(|w| w[1] == w[0] + 1));
        let l1 = local_dtn(&d1, &bottom).unwrap();
        let l2 = local_dtn(&d2, &bottom).unwrap();
        assert_eq!(l1.dim(), 7);
        let local = difference_norm(&l1, &l2).unwrap();
        let global = difference_norm(&d1, &d2).unwrap();
        assert!(local > 0.0 && local <= global * (1.0 + 1e-12));
        assert!(matches!(local_dtn(&d1, &bottom[..2]), Err(Error::EmptySubset(_))));
    }

    #[test]
    fn arc_wraps_around_start() {
        let m = strips(1, 0.25);
        // Left edge passes through trace position 0 (bottom-left corner).
        let left = boundary_arc(&m, |p| p[0] == 0.0);
        assert_eq!(left.len(), 5);
        let ys: Vec<f64> = left.iter().map(|&q| m.nodes[m.boundary_nodes[q]][1]).collect();
        assert!(ys.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn csv_has_hash_header() {
        let m = strips(1, 0.5);
        let d = dtn_matrix(m.clone(), &Admittivity::new(vec![c(1.0, 0.0)], 1.0).unwrap()).unwrap();
        let mut buf = Vec::new();
        d.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with(&format!("# mesh_sha256={}\nre_0,im_0,", m.hash())));
        assert_eq!(text.lines().count(), 2 + d.dim());
    }
}
