//! Singular solutions `G(·, y) = Γ_l(·, y) + w(·, y)` and the probes built on them.
//!
//! `Γ_l` is the two-phase fundamental solution for the flat interface
//! between a pair of adjacent strips; the corrector `w` is one FEM solve of
//! `−div(γ∇w) = div(γ̃∇Γ_l)` with `w = −Γ_l` on the boundary, where
//! `γ̃ = γ − γ_l 1_{below} − γ_{l+1} 1_{above}` vanishes on the pair. The
//! load uses exact `∇Γ_l` at quadrature points; `γ̃` is zero near `y`, so no
//! singular quadrature is needed.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::forward::{solve_dirichlet, FieldSolution, StiffnessSystem};
use crate::fundsol::{laplace_gamma, laplace_gamma_grad, two_phase_gamma, two_phase_gamma_grad, TwoPhaseCoeffs};
use crate::geometry::Partition;
use crate::mesh::Mesh;
use crate::quadrature::{gauss_legendre, integrate_triangle, Adaptive, Clip};
use crate::{Error, Point, Result};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// `G(·, y)` for one source point.
#[derive(Debug, Clone)]
pub struct SingularSolution {
    pub y: Point,
    /// Height of the interface line used by `Γ_l`.
    pub plane: f64,
    pub coeffs: TwoPhaseCoeffs,
    /// Interface index `l+1` of the pair, when built from a partition.
    pub link: Option<usize>,
    pub corrector: FieldSolution,
}

fn shift(x: Point, plane: f64) -> [f64; 2] {
    [x[0], x[1] - plane]
}

/// `Γ_l`, `∇Γ_l` for the pair `(below, above)` across the line `y = plane`.
struct TwoPhase {
    y: [f64; 2],
    plane: f64,
    coeffs: TwoPhaseCoeffs,
}

impl TwoPhase {
    fn value(&self, x: Point) -> Result<Complex64> {
        two_phase_gamma(&shift(x, self.plane), &self.y, &self.coeffs)
    }

    fn gradient(&self, x: Point) -> Result<[Complex64; 2]> {
        two_phase_gamma_grad(&shift(x, self.plane), &self.y, &self.coeffs)
    }
}

fn adaptive_near(points: &[Point]) -> Adaptive {
    Adaptive {
        max_depth: 10,
        singular: points.to_vec(),
        ratio: 0.5,
    }
}

/// Builds `G(·, y)` with `Γ_l` for coefficients `gamma_below` under and
/// `gamma_above` over the line at height `plane`.
pub fn green_with_plane(
    sys: &StiffnessSystem,
    y: Point,
    plane: f64,
    gamma_below: Complex64,
    gamma_above: Complex64,
) -> Result<SingularSolution> {
    if y[1] == plane {
        return Err(Error::Placement(format!("source {y:?} lies on the interface line")));
    }
    let mesh = &sys.mesh;
    let coeffs = TwoPhaseCoeffs::new(gamma_above, gamma_below)?;
    let tp = TwoPhase {
        y: shift(y, plane),
        plane,
        coeffs,
    };
    let opts = adaptive_near(&[y]);
    let mut load = vec![ZERO; sys.interior.len()];
    for (t, tri) in mesh.triangles.iter().enumerate() {
        let c = mesh.centroid(t);
        let reference = if c[1] > plane { gamma_above } else { gamma_below };
        let gt = sys.admittivity.gamma(tri.region) - reference;
        if gt == ZERO {
            continue;
        }
        let v = mesh.vertices(t);
        let comp = |d: usize| -> Complex64 {
            integrate_triangle(&v, &Clip::All, &opts, &|x| tp.gradient(x).map_or(ZERO, |g| g[d]))
        };
        let integral = [comp(0), comp(1)];
        let grads = mesh.hat_gradients(t);
        for a in 0..3 {
            if let Some(i) = sys.interior_index[tri.nodes[a]] {
                load[i] -= gt * (integral[0] * grads[a][0] + integral[1] * grads[a][1]);
            }
        }
    }
    let f = mesh
        .boundary_nodes
        .iter()
        .map(|&n| tp.value(mesh.nodes[n]).map(|v| -v))
        .collect::<Result<Vec<_>>>()?;
    let (ui, residual) = sys.solve_interior(&f, Some(&load))?;
    let corrector = FieldSolution::new(
        mesh.clone(),
        sys.admittivity.clone(),
        sys.scatter(&f, &ui),
        f,
        residual,
    );
    Ok(SingularSolution {
        y,
        plane,
        coeffs,
        link: None,
        corrector,
    })
}

/// Checks that `y` may carry a singular solution for interface `link`:
/// it lies in the middle third in `x`, in one of the two adjacent regions,
/// off the interface, and at distance at least `r0/6` from every other region.
pub fn check_placement(p: &Partition, y: Point, link: usize) -> Result<(usize, usize)> {
    let s = p
        .interface(link)
        .ok_or_else(|| Error::Placement(format!("no interface Σ_{link}")))?;
    let lower = s.lower.ok_or_else(|| {
        Error::Placement(format!(
            "Σ_{link} lies on the outer boundary; a region below it requires the extension"
        ))
    })?;
    let lo = p.region(lower).expect("interface regions exist").bounds;
    let up = p.region(s.upper).expect("interface regions exist").bounds;
    let w = p.domain.width();
    let (xa, xb) = (p.domain.x0 + w / 3.0, p.domain.x1 - w / 3.0);
    let margin = p.r0 / 6.0;
    if y[0] < xa || y[0] > xb {
        return Err(Error::Placement(format!(
            "source {y:?} is outside the middle third [{xa}, {xb}] of the domain"
        )));
    }
    if y[1] == s.height {
        return Err(Error::Placement(format!("source {y:?} lies on Σ_{link}")));
    }
    let below_ok = lower == 0 || y[1] >= lo.y0 + margin;
    let above_ok = s.upper == p.strip_count() || y[1] <= up.y1 - margin;
    if y[1] < lo.y0 || y[1] > up.y1 || !below_ok || !above_ok {
        return Err(Error::Placement(format!(
            "source {y:?} must lie in D_{lower} ∪ D_{} at distance ≥ r0/6 = {margin} from other regions",
            s.upper
        )));
    }
    if p.interfaces.iter().any(|i| i.height == y[1]) {
        return Err(Error::Placement(format!("source {y:?} lies on an interface")));
    }
    Ok((lower, s.upper))
}

/// `G(·, y)` for a source near interface `Σ_{link}` of a strip partition.
pub fn green_correction(p: &Partition, sys: &StiffnessSystem, y: Point, link: usize) -> Result<SingularSolution> {
    let (lower, upper) = check_placement(p, y, link)?;
    if sys.admittivity.len() < upper {
        return Err(Error::Tagging {
            triangle: 0,
            region: upper,
            available: sys.admittivity.len(),
        });
    }
    let a = &sys.admittivity;
    let plane = p.interface(link).expect("checked").height;
    let mut g = green_with_plane(sys, y, plane, a.gamma(lower), a.gamma(upper))?;
    g.link = Some(link);
    Ok(g)
}

impl SingularSolution {
    fn two_phase(&self) -> TwoPhase {
        TwoPhase {
            y: shift(self.y, self.plane),
            plane: self.plane,
            coeffs: self.coeffs,
        }
    }

    pub fn mesh(&self) -> &Arc<Mesh> {
        &self.corrector.mesh
    }

    /// `Γ_l(x, y)`.
    pub fn gamma_l(&self, x: Point) -> Result<Complex64> {
        self.two_phase().value(x)
    }

    pub fn gamma_l_grad(&self, x: Point) -> Result<[Complex64; 2]> {
        self.two_phase().gradient(x)
    }

    fn locate(&self, x: Point) -> Result<usize> {
        self.corrector
            .locator()
            .locate(self.mesh(), x)
            .map(|(t, _)| t)
            .ok_or_else(|| Error::Geometry(format!("point {x:?} is outside the mesh")))
    }

    /// `G(x, y)`.
    pub fn value(&self, x: Point) -> Result<Complex64> {
        let t = self.locate(x)?;
        self.value_on(t, x)
    }

    /// `∇_x G(x, y)`.
    pub fn gradient(&self, x: Point) -> Result<[Complex64; 2]> {
        let t = self.locate(x)?;
        self.gradient_on(t, x)
    }

    pub fn value_on(&self, t: usize, x: Point) -> Result<Complex64> {
        Ok(self.gamma_l(x)? + self.corrector.value_on(t, x))
    }

    pub fn gradient_on(&self, t: usize, x: Point) -> Result<[Complex64; 2]> {
        let g = self.gamma_l_grad(x)?;
        let w = self.corrector.gradient(t);
        Ok([g[0] + w[0], g[1] + w[1]])
    }

    /// `‖G(·, y)‖_{H¹(Ω ∖ B_r(y))}`.
    pub fn h1_norm_outside(&self, r: f64) -> f64 {
        let mesh = self.mesh();
        let clip = Clip::Outside {
            center: self.y,
            radius: r,
        };
        let opts = adaptive_near(&[self.y]);
        let mut acc = 0.0;
        for t in 0..mesh.triangles.len() {
            let v = mesh.vertices(t);
            acc += integrate_triangle(&v, &clip, &opts, &|x| {
                let val = self.value_on(t, x).map_or(0.0, |v| v.norm_sqr());
                let g = self.gradient_on(t, x).map_or([ZERO; 2], |g| g);
                val + g[0].norm_sqr() + g[1].norm_sqr()
            });
        }
        acc.sqrt()
    }

    /// `‖w‖_{H¹(Ω)}` of the corrector.
    pub fn corrector_h1_norm(&self) -> f64 {
        let mesh = self.mesh();
        let mut acc = 0.0;
        for t in 0..mesh.triangles.len() {
            let v = mesh.vertices(t);
            let g = self.corrector.gradient(t);
            let gg = g[0].norm_sqr() + g[1].norm_sqr();
            acc += integrate_triangle(&v, &Clip::All, &Adaptive { max_depth: 0, ..Default::default() }, &|x| {
                self.corrector.value_on(t, x).norm_sqr() + gg
            });
        }
        acc.sqrt()
    }
}

/// One row of the asymptotics table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AsymptoticsRow {
    pub r: f64,
    /// `|G(x̄, ȳ) − 2/(γ_l+γ_{l+1}) Γ(x̄, ȳ)|`.
    pub deviation: f64,
    /// `|∇_x G(x̄, ȳ) − 2/(γ_l+γ_{l+1}) ∇_x Γ(x̄, ȳ)|`.
    pub grad_deviation: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AsymptoticsReport {
    pub rows: Vec<AsymptoticsRow>,
    /// Least-squares slope of `ln deviation` against `ln r`.
    pub slope: f64,
    pub grad_slope: f64,
    /// No blow-up: both slopes are at least `−0.1`.
    pub bounded: bool,
}

/// Slope of the least-squares line through `(ln x, ln y)`, skipping `y = 0`;
/// zero when fewer than two points remain.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> f64 {
    let pts: Vec<(f64, f64)> = x
        .iter()
        .zip(y)
        .filter(|(_, &v)| v > 0.0)
        .map(|(&a, &b)| (a.ln(), b.ln()))
        .collect();
    if pts.len() < 2 {
        return 0.0;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

/// Slope threshold below which a deviation sequence counts as blowing up.
pub const BLOW_UP_SLOPE: f64 = -0.1;

/// Largest radius accepted by [`asymptotics_check`], in units of `r0`. Both
/// probe points then stay at distance `≥ 3r0/4` from the other strips.
pub const ASYMPTOTICS_MAX_RADIUS: f64 = 0.25;

/// Deviations of `G` from `2/(γ_l+γ_{l+1}) Γ` at `ȳ = P − rν`, `x̄ = P + rν`
/// around the marked point `P` of `Σ_{link}`.
pub fn asymptotics_check(
    p: &Partition,
    sys: &StiffnessSystem,
    link: usize,
    radii: &[f64],
) -> Result<AsymptoticsReport> {
    let s = p
        .interface(link)
        .ok_or_else(|| Error::Placement(format!("no interface Σ_{link}")))?;
    let rmax = ASYMPTOTICS_MAX_RADIUS * p.r0;
    if let Some(r) = radii.iter().find(|&&r| !(r > 0.0 && r <= rmax)) {
        return Err(Error::Range(format!("radius {r} outside (0, r0/4 = {rmax}]")));
    }
    let pt = s.marked;
    let nu = s.normal();
    let rows = radii
        .par_iter()
        .map(|&r| {
            let yb = [pt[0] - r * nu[0], pt[1] - r * nu[1]];
            let xb = [pt[0] + r * nu[0], pt[1] + r * nu[1]];
            let g = green_correction(p, sys, yb, link)?;
            let cross = g.coeffs.cross();
            let dev = (g.value(xb)? - cross * laplace_gamma(&xb, &yb)?).norm();
            let gg = g.gradient(xb)?;
            let lg = laplace_gamma_grad(&xb, &yb)?;
            let gdev = ((gg[0] - cross * lg[0]).norm_sqr() + (gg[1] - cross * lg[1]).norm_sqr()).sqrt();
            Ok(AsymptoticsRow {
                r,
                deviation: dev,
                grad_deviation: gdev,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let rs: Vec<f64> = rows.iter().map(|r| r.r).collect();
    let slope = loglog_slope(&rs, &rows.iter().map(|r| r.deviation).collect::<Vec<_>>());
    let grad_slope = loglog_slope(&rs, &rows.iter().map(|r| r.grad_deviation).collect::<Vec<_>>());
    Ok(AsymptoticsReport {
        rows,
        slope,
        grad_slope,
        bounded: slope >= BLOW_UP_SLOPE && grad_slope >= BLOW_UP_SLOPE,
    })
}

/// `|Γ_{γ,δ}(x̄, ȳ) − 2/(γ+δ) Γ(x̄, ȳ)|` in free space; `x̄`, `ȳ` on opposite sides.
pub fn free_space_deviation(c: &TwoPhaseCoeffs, x: Point, y: Point) -> Result<f64> {
    Ok((two_phase_gamma(&x, &y, c)? - c.cross() * laplace_gamma(&x, &y)?).norm())
}

fn same_mesh(a: &Arc<Mesh>, b: &Arc<Mesh>) -> bool {
    Arc::ptr_eq(a, b) || a.hash() == b.hash()
}

/// `S_k(y, z) = ∫_{U_k} (γ¹ − γ²) ∇G₁(·, y) · ∇G₂(·, z)` (bilinear).
pub fn s_k_evaluate(
    p: &Partition,
    g1: &SingularSolution,
    g2: &SingularSolution,
    k: usize,
) -> Result<Complex64> {
    if !same_mesh(g1.mesh(), g2.mesh()) {
        return Err(Error::MismatchedMesh);
    }
    let mesh = g1.mesh();
    let a1 = &g1.corrector.admittivity;
    let a2 = &g2.corrector.admittivity;
    let opts = adaptive_near(&[g1.y, g2.y]);
    let mut acc = ZERO;
    for (t, tri) in mesh.triangles.iter().enumerate() {
        if !p.in_unexplored(k, tri.region) {
            continue;
        }
        let dg = a1.gamma(tri.region) - a2.gamma(tri.region);
        if dg == ZERO {
            continue;
        }
        let v = mesh.vertices(t);
        let integral: Complex64 = integrate_triangle(&v, &Clip::All, &opts, &|x| {
            match (g1.gradient_on(t, x), g2.gradient_on(t, x)) {
                (Ok(a), Ok(b)) => a[0] * b[0] + a[1] * b[1],
                _ => ZERO,
            }
        });
        acc += dg * integral;
    }
    Ok(acc)
}

/// Interior and boundary sides of the discrete Alessandrini identity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IdentityPair {
    /// `Σ_T (γ¹ − γ²) ∇u₁ · ∇u₂ |T|`.
    pub lhs: Complex64,
    /// `f₁ᵀ (Λ₁ − Λ₂) f₂`.
    pub rhs: Complex64,
}

impl IdentityPair {
    /// `|lhs − rhs| / |lhs|` (absolute gap when `lhs = 0`).
    pub fn relative_gap(&self) -> f64 {
        let gap = (self.lhs - self.rhs).norm();
        if self.lhs.norm() > 0.0 {
            gap / self.lhs.norm()
        } else {
            gap
        }
    }
}

/// Both sides of `∫(γ¹−γ²)∇u₁·∇u₂ = ⟨(Λ₁−Λ₂)f₂, f₁⟩` on one mesh, with
/// `u_i` solving the problem for `γ^{(i)}` with datum `f_i`.
pub fn alessandrini_pair(
    sys1: &StiffnessSystem,
    sys2: &StiffnessSystem,
    f1: &[Complex64],
    f2: &[Complex64],
) -> Result<IdentityPair> {
    if !same_mesh(&sys1.mesh, &sys2.mesh) {
        return Err(Error::MismatchedMesh);
    }
    let u1 = solve_dirichlet(sys1, f1)?;
    let u2 = solve_dirichlet(sys2, f2)?;
    let mesh = &sys1.mesh;
    let mut lhs = ZERO;
    for (t, tri) in mesh.triangles.iter().enumerate() {
        let dg = sys1.admittivity.gamma(tri.region) - sys2.admittivity.gamma(tri.region);
        if dg == ZERO {
            continue;
        }
        let a = u1.gradient(t);
        let b = u2.gradient(t);
        lhs += dg * mesh.area(t) * (a[0] * b[0] + a[1] * b[1]);
    }
    let l1 = crate::dtn::dtn_action(sys1, f2)?;
    let l2 = crate::dtn::dtn_action(sys2, f2)?;
    let rhs = f1
        .iter()
        .zip(l1.iter().zip(&l2))
        .map(|(f, (a, b))| f * (a - b))
        .sum();
    Ok(IdentityPair { lhs, rhs })
}

/// One row of the three-dimensional probe-rate table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateRow {
    pub r: f64,
    pub abs_s: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RateReport {
    pub rows: Vec<RateRow>,
    pub slope: f64,
}

/// Geometrically graded breakpoints on `[0, len]` refined towards 0 at scale `a`.
fn graded(len: f64, a: f64) -> Vec<f64> {
    let mut pts = vec![0.0];
    let mut x = a / 64.0;
    while x < len {
        pts.push(x);
        x *= 2.0;
    }
    pts.push(len);
    pts
}

fn gauss_panels(breaks: &[f64], nodes: &[f64], weights: &[f64], mut f: impl FnMut(f64) -> f64) -> f64 {
    let mut acc = 0.0;
    for w in breaks.windows(2) {
        let (a, b) = (w[0], w[1]);
        let half = 0.5 * (b - a);
        for (x, wt) in nodes.iter().zip(weights) {
            acc += half * wt * f(a + half * (1.0 + x));
        }
    }
    acc
}

/// `∫_{B_ρ₀(0) ∩ {x₃>0}} (γ₊¹ − γ₊²) ∇Γ_l¹(x, y) · ∇Γ_l²(x, y) dx` in three
/// dimensions with `y = (0, 0, −r)` below the interface, by axisymmetric
/// tensor Gauss quadrature on graded panels.
pub fn half_space_s_integral(c1: &TwoPhaseCoeffs, c2: &TwoPhaseCoeffs, rho0: f64, r: f64) -> Result<Complex64> {
    if !(r > 0.0 && rho0 > 0.0) {
        return Err(Error::InvalidArgument(format!("need r, ρ₀ > 0, got r = {r}, ρ₀ = {rho0}")));
    }
    let (gx, gw) = gauss_legendre(12);
    let y = [0.0, 0.0, -r];
    let mut re = 0.0;
    let mut im = 0.0;
    for part in 0..2 {
        let v = gauss_panels(&graded(rho0, r), &gx, &gw, |z| {
            let rmax = (rho0 * rho0 - z * z).max(0.0).sqrt();
            gauss_panels(&graded(rmax, z + r), &gx, &gw, |rho| {
                let x = [rho, 0.0, z.max(f64::MIN_POSITIVE)];
                let a = two_phase_gamma_grad(&x, &y, c1).unwrap_or([ZERO; 3]);
                let b = two_phase_gamma_grad(&x, &y, c2).unwrap_or([ZERO; 3]);
                let d = a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
                2.0 * PI * rho * if part == 0 { d.re } else { d.im }
            })
        });
        if part == 0 {
            re = v;
        } else {
            im = v;
        }
    }
    Ok((c1.gamma_plus - c2.gamma_plus) * Complex64::new(re, im))
}

/// `|S|` of [`half_space_s_integral`] over `radii` with its log–log slope.
pub fn s_rate_3d(c1: &TwoPhaseCoeffs, c2: &TwoPhaseCoeffs, rho0: f64, radii: &[f64]) -> Result<RateReport> {
    let rows = radii
        .iter()
        .map(|&r| {
            Ok(RateRow {
                r,
                abs_s: half_space_s_integral(c1, c2, rho0, r)?.norm(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let slope = loglog_slope(
        &rows.iter().map(|r| r.r).collect::<Vec<_>>(),
        &rows.iter().map(|r| r.abs_s).collect::<Vec<_>>(),
    );
    Ok(RateReport { rows, slope })
}

/// `S_{k−1}(y_r, y_r)` at `y_r = P_k − rν` for each radius.
pub fn diagonal_probe(
    p: &Partition,
    sys1: &StiffnessSystem,
    sys2: &StiffnessSystem,
    k: usize,
    radii: &[f64],
) -> Result<Vec<Complex64>> {
    let s = p
        .interface(k)
        .ok_or_else(|| Error::Placement(format!("no interface Σ_{k}")))?;
    radii
        .par_iter()
        .map(|&r| {
            let y = [s.marked[0], s.marked[1] - r];
            let g1 = green_correction(p, sys1, y, k)?;
            let g2 = green_correction(p, sys2, y, k)?;
            s_k_evaluate(p, &g1, &g2, k - 1)
        })
        .collect()
}
