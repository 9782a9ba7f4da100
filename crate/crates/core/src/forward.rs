//! P1 finite elements for `div(γ∇u) = 0` with piecewise-constant complex `γ`.
//!
//! The stiffness matrix is `Σ_T γ(T) K_T` with exact real element matrices
//! `K_T`, so it is complex-symmetric (equal to its plain transpose). Dirichlet
//! problems are reduced to the interior unknowns and solved with an envelope
//! `LDLᵀ` factorisation that is computed once per system and cached.

use std::io::Write;
use std::sync::{Arc, OnceLock};

use num_complex::Complex64;
use rayon::prelude::*;

use crate::geometry::Partition;
use crate::linalg::{relative_residual, CsrMatrix, EnvelopeLdlt, EnvelopeLu};
use crate::mesh::{Mesh, PointLocator};
use crate::quadrature::{integrate_triangle, point_triangle_distance, Adaptive, Clip};
use crate::{Error, Point, Result};

/// Interior residual accepted from a direct solve.
pub const SOLVE_TOLERANCE: f64 = 1e-10;

/// Piecewise-constant admittivity `γ = Σ γ_j 1_{D_j}` with ellipticity bound `λ`.
///
/// Region 0, when present in a mesh, is the extension strip where `γ = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct Admittivity {
    values: Vec<Complex64>,
    lambda: f64,
}

impl Admittivity {
    /// Validates `Re γ_j ≥ 1/λ` and `|γ_j| ≤ λ` for every region.
    pub fn new(values: Vec<Complex64>, lambda: f64) -> Result<Self> {
        if !(lambda >= 1.0) || !lambda.is_finite() {
            return Err(Error::Ellipticity {
                region: 0,
                msg: format!("bound λ = {lambda} must be a finite number ≥ 1"),
            });
        }
        if values.is_empty() {
            return Err(Error::InvalidArgument("admittivity needs at least one region".into()));
        }
        for (i, g) in values.iter().enumerate() {
            check_ellipticity(i + 1, *g, lambda)?;
        }
        Ok(Self { values, lambda })
    }

    pub fn constant(gamma: Complex64, regions: usize, lambda: f64) -> Result<Self> {
        Self::new(vec![gamma; regions], lambda)
    }

    /// `γ` on region `j`; region 0 is the extension with `γ = 1`.
    pub fn gamma(&self, region: usize) -> Complex64 {
        if region == 0 {
            Complex64::new(1.0, 0.0)
        } else {
            self.values[region - 1]
        }
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// Number of regions `N`.
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// `σ = Re γ` and `ε = Im γ` on region `j`.
    pub fn sigma_epsilon(&self, region: usize) -> (f64, f64) {
        let g = self.gamma(region);
        (g.re, g.im)
    }

    /// `max_j |γ_j − other_j|`.
    pub fn max_difference(&self, other: &Admittivity) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

pub fn check_ellipticity(region: usize, g: Complex64, lambda: f64) -> Result<()> {
    if !(g.re >= 1.0 / lambda) {
        return Err(Error::Ellipticity {
            region,
            msg: format!(
                "ellipticity bound violated: Re γ_{region} = {} < 1/λ = {}",
                g.re,
                1.0 / lambda
            ),
        });
    }
    if !(g.norm() <= lambda) {
        return Err(Error::Ellipticity {
            region,
            msg: format!(
                "ellipticity bound violated: |γ_{region}| = {} > λ = {lambda}",
                g.norm()
            ),
        });
    }
    Ok(())
}

/// Assembled stiffness together with the interior/boundary splitting.
#[derive(Debug)]
pub struct StiffnessSystem {
    pub mesh: Arc<Mesh>,
    pub admittivity: Admittivity,
    pub matrix: CsrMatrix<Complex64>,
    /// Interior node ids in elimination order.
    pub interior: Vec<usize>,
    /// `interior_index[node]` is the position of `node` among interior unknowns.
    pub interior_index: Vec<Option<usize>>,
    pub k_ii: CsrMatrix<Complex64>,
    /// Interior rows, boundary columns in trace order.
    pub k_ib: CsrMatrix<Complex64>,
    pub k_bb: CsrMatrix<Complex64>,
    factor: OnceLock<std::result::Result<EnvelopeLdlt<Complex64>, String>>,
}

/// Real P1 stiffness restricted to triangles of `region`, on all mesh nodes.
pub fn region_stiffness(mesh: &Mesh, region: usize) -> CsrMatrix<f64> {
    let n = mesh.node_count();
    let mut trip = Vec::new();
    for (t, tri) in mesh.triangles.iter().enumerate() {
        if tri.region != region {
            continue;
        }
        let k = mesh.element_stiffness(t);
        for a in 0..3 {
            for b in 0..3 {
                trip.push((tri.nodes[a], tri.nodes[b], k[a][b]));
            }
        }
    }
    CsrMatrix::from_triplets(n, n, trip)
}

fn check_tags(mesh: &Mesh, a: &Admittivity) -> Result<()> {
    for (t, tri) in mesh.triangles.iter().enumerate() {
        if tri.region > a.len() {
            return Err(Error::Tagging {
                triangle: t,
                region: tri.region,
                available: a.len(),
            });
        }
    }
    Ok(())
}

/// Assembles `Σ_T γ(T) K_T` and splits it into interior/boundary blocks.
pub fn assemble(mesh: Arc<Mesh>, a: &Admittivity) -> Result<StiffnessSystem> {
    check_tags(&mesh, a)?;
    let n = mesh.node_count();
    let mut trip = Vec::with_capacity(9 * mesh.triangles.len());
    for (t, tri) in mesh.triangles.iter().enumerate() {
        let g = a.gamma(tri.region);
        let k = mesh.element_stiffness(t);
        for i in 0..3 {
            for j in 0..3 {
                trip.push((tri.nodes[i], tri.nodes[j], g * k[i][j]));
            }
        }
    }
    let matrix = CsrMatrix::from_triplets(n, n, trip);
    let on_boundary = mesh.boundary_position();
    let interior: Vec<usize> = (0..n).filter(|&i| on_boundary[i].is_none()).collect();
    let mut interior_index = vec![None; n];
    for (k, &i) in interior.iter().enumerate() {
        interior_index[i] = Some(k);
    }
    let boundary = &mesh.boundary_nodes;
    let k_ii = matrix.select(&interior, &interior);
    let k_ib = matrix.select(&interior, boundary);
    let k_bb = matrix.select(boundary, boundary);
    Ok(StiffnessSystem {
        admittivity: a.clone(),
        matrix,
        interior,
        interior_index,
        k_ii,
        k_ib,
        k_bb,
        factor: OnceLock::new(),
        mesh,
    })
}

impl StiffnessSystem {
    pub fn factorization(&self) -> Result<&EnvelopeLdlt<Complex64>> {
        self.factor
            .get_or_init(|| EnvelopeLdlt::factor(&self.k_ii).map_err(|e| e.to_string()))
            .as_ref()
            .map_err(|msg| Error::SolverBreakdown(msg.clone()))
    }

    pub fn boundary_count(&self) -> usize {
        self.mesh.boundary_count()
    }

    /// Interior values solving `K_II u_I = load − K_IB f`, with the relative residual.
    pub fn solve_interior(
        &self,
        boundary: &[Complex64],
        load: Option<&[Complex64]>,
    ) -> Result<(Vec<Complex64>, f64)> {
        if boundary.len() != self.boundary_count() {
            return Err(Error::DimensionMismatch(format!(
                "boundary datum has {} entries, mesh has {} boundary nodes",
                boundary.len(),
                self.boundary_count()
            )));
        }
        let mut rhs: Vec<Complex64> = self.k_ib.mul_vec(boundary).iter().map(|v| -v).collect();
        if let Some(load) = load {
            for (r, l) in rhs.iter_mut().zip(load) {
                *r += l;
            }
        }
        let fac = self.factorization()?;
        let x = fac.solve(&rhs);
        let res = relative_residual(&self.k_ii, &x, &rhs);
        if !(res <= SOLVE_TOLERANCE) {
            return Err(Error::SolverBreakdown(format!(
                "relative residual {res:.3e} exceeds {SOLVE_TOLERANCE:.0e}; pivot ratio {:.3e}",
                fac.pivot_ratio()
            )));
        }
        Ok((x, res))
    }

    /// Full nodal vector from boundary and interior parts.
    pub fn scatter(&self, boundary: &[Complex64], interior: &[Complex64]) -> Vec<Complex64> {
        let mut u = vec![Complex64::new(0.0, 0.0); self.mesh.node_count()];
        for (k, &n) in self.mesh.boundary_nodes.iter().enumerate() {
            u[n] = boundary[k];
        }
        for (k, &n) in self.interior.iter().enumerate() {
            u[n] = interior[k];
        }
        u
    }
}

/// Complex nodal field of one Dirichlet problem.
#[derive(Debug, Clone)]
pub struct FieldSolution {
    pub mesh: Arc<Mesh>,
    pub admittivity: Admittivity,
    pub values: Vec<Complex64>,
    /// Boundary datum in trace order.
    pub boundary_data: Vec<Complex64>,
    /// Relative residual of the interior system.
    pub residual: f64,
    locator: OnceLock<PointLocator>,
}

/// Solves `div(γ∇u) = 0`, `u = f` on the boundary.
pub fn solve_dirichlet(system: &StiffnessSystem, f: &[Complex64]) -> Result<FieldSolution> {
    let (ui, residual) = system.solve_interior(f, None)?;
    Ok(FieldSolution::new(
        system.mesh.clone(),
        system.admittivity.clone(),
        system.scatter(f, &ui),
        f.to_vec(),
        residual,
    ))
}

impl FieldSolution {
    pub fn new(
        mesh: Arc<Mesh>,
        admittivity: Admittivity,
        values: Vec<Complex64>,
        boundary_data: Vec<Complex64>,
        residual: f64,
    ) -> Self {
        Self {
            mesh,
            admittivity,
            values,
            boundary_data,
            residual,
            locator: OnceLock::new(),
        }
    }

    pub fn locator(&self) -> &PointLocator {
        self.locator.get_or_init(|| PointLocator::new(&self.mesh))
    }

    /// Constant gradient on triangle `t`.
    pub fn gradient(&self, t: usize) -> [Complex64; 2] {
        let g = self.mesh.hat_gradients(t);
        let n = self.mesh.triangles[t].nodes;
        let mut out = [Complex64::new(0.0, 0.0); 2];
        for a in 0..3 {
            for d in 0..2 {
                out[d] += self.values[n[a]] * g[a][d];
            }
        }
        out
    }

    /// P1 interpolant at `p`; `None` outside the mesh.
    pub fn value_at(&self, p: Point) -> Option<Complex64> {
        let (t, l) = self.locator().locate(&self.mesh, p)?;
        let n = self.mesh.triangles[t].nodes;
        Some(self.values[n[0]] * l[0] + self.values[n[1]] * l[1] + self.values[n[2]] * l[2])
    }

    /// Gradient at `p` (of the containing triangle); `None` outside the mesh.
    pub fn gradient_at(&self, p: Point) -> Option<[Complex64; 2]> {
        let (t, _) = self.locator().locate(&self.mesh, p)?;
        Some(self.gradient(t))
    }

    /// Value on triangle `t` at barycentric point `l`.
    pub fn value_on(&self, t: usize, p: Point) -> Complex64 {
        let v = self.mesh.vertices(t);
        let l = crate::mesh::barycentric(&v, p);
        let n = self.mesh.triangles[t].nodes;
        self.values[n[0]] * l[0] + self.values[n[1]] * l[1] + self.values[n[2]] * l[2]
    }

    /// `Σ_T γ(T) ∇u · ∇φ` for the nodal vector `phi` (bilinear, no conjugation).
    pub fn energy_pairing(&self, phi: &[Complex64]) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for t in 0..self.mesh.triangles.len() {
            let g = self.admittivity.gamma(self.mesh.triangles[t].region);
            let k = self.mesh.element_stiffness(t);
            let n = self.mesh.triangles[t].nodes;
            for a in 0..3 {
                for b in 0..3 {
                    acc += g * k[a][b] * self.values[n[b]] * phi[n[a]];
                }
            }
        }
        acc
    }

    /// Writes `node_index,x,y,re_u,im_u`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
        w.write_record(["node_index", "x", "y", "re_u", "im_u"])?;
        for (i, (p, u)) in self.mesh.nodes.iter().zip(&self.values).enumerate() {
            w.write_record([
                i.to_string(),
                p[0].to_string(),
                p[1].to_string(),
                u.re.to_string(),
                u.im.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Coefficients `c_{lj}^{hk}` of the equivalent real 2×2 system for `(Re u, Im u)`:
/// `c = σ δ_hk δ_lj − ε δ_hk (δ_l1 δ_j2 − δ_l2 δ_j1)`, indexed `[l][j][h][k]`.
pub fn real_system_tensor(gamma: Complex64) -> [[[[f64; 2]; 2]; 2]; 2] {
    let (sigma, eps) = (gamma.re, gamma.im);
    let mut c = [[[[0.0; 2]; 2]; 2]; 2];
    for l in 0..2 {
        for j in 0..2 {
            for h in 0..2 {
                let k = h;
                let delta_lj = if l == j { 1.0 } else { 0.0 };
                let skew = match (l, j) {
                    (0, 1) => 1.0,
                    (1, 0) => -1.0,
                    _ => 0.0,
                };
                c[l][j][h][k] = sigma * delta_lj - eps * skew;
            }
        }
    }
    c
}

/// `c_{lj}^{hk} ξ_l^h ξ_j^k` for `ξ` indexed `[component][direction]`.
pub fn tensor_quadratic_form(c: &[[[[f64; 2]; 2]; 2]; 2], xi: &[[f64; 2]; 2]) -> f64 {
    let mut s = 0.0;
    for l in 0..2 {
        for j in 0..2 {
            for h in 0..2 {
                for k in 0..2 {
                    s += c[l][j][h][k] * xi[l][h] * xi[j][k];
                }
            }
        }
    }
    s
}

/// Solves the real system `∂_h(c_{lj}^{hk} ∂_k u_j) = 0` for `(Re u, Im u)`
/// and recombines it into a complex field.
pub fn solve_real_system(mesh: Arc<Mesh>, a: &Admittivity, f: &[Complex64]) -> Result<FieldSolution> {
    check_tags(&mesh, a)?;
    if f.len() != mesh.boundary_count() {
        return Err(Error::DimensionMismatch(format!(
            "boundary datum has {} entries, mesh has {} boundary nodes",
            f.len(),
            mesh.boundary_count()
        )));
    }
    let n = mesh.node_count();
    let on_boundary = mesh.boundary_position();
    let interior: Vec<usize> = (0..n).filter(|&i| on_boundary[i].is_none()).collect();
    let mut idx = vec![None; n];
    for (k, &i) in interior.iter().enumerate() {
        idx[i] = Some(k);
    }
    // Unknowns interleaved: 2k is Re u, 2k+1 is Im u at interior node k.
    let size = 2 * interior.len();
    let mut trip = Vec::new();
    let mut rhs = vec![0.0; size];
    for (t, tri) in mesh.triangles.iter().enumerate() {
        let c = real_system_tensor(a.gamma(tri.region));
        let g = mesh.hat_gradients(t);
        let area = mesh.area(t);
        for (p, &np) in tri.nodes.iter().enumerate() {
            let Some(row) = idx[np] else { continue };
            for (q, &nq) in tri.nodes.iter().enumerate() {
                for l in 0..2 {
                    for j in 0..2 {
                        let mut v = 0.0;
                        for h in 0..2 {
                            for k in 0..2 {
                                v += c[l][j][h][k] * g[p][h] * g[q][k];
                            }
                        }
                        v *= area;
                        match idx[nq] {
                            Some(col) => trip.push((2 * row + l, 2 * col + j, v)),
                            None => {
                                let fb = f[on_boundary[nq].expect("boundary node")];
                                let comp = if j == 0 { fb.re } else { fb.im };
                                rhs[2 * row + l] -= v * comp;
                            }
                        }
                    }
                }
            }
        }
    }
    let mat = CsrMatrix::from_triplets(size, size, trip);
    let x = EnvelopeLu::factor(&mat)?.solve(&rhs);
    let residual = relative_residual(&mat, &x, &rhs);
    if !(residual <= SOLVE_TOLERANCE) {
        return Err(Error::SolverBreakdown(format!(
            "real system residual {residual:.3e} exceeds {SOLVE_TOLERANCE:.0e}"
        )));
    }
    let mut values = vec![Complex64::new(0.0, 0.0); n];
    for (k, &node) in mesh.boundary_nodes.iter().enumerate() {
        values[node] = f[k];
    }
    for (k, &node) in interior.iter().enumerate() {
        values[node] = Complex64::new(x[2 * k], x[2 * k + 1]);
    }
    Ok(FieldSolution::new(mesh, a.clone(), values, f.to_vec(), residual))
}

/// Subdivision depth for clipped ball integrals.
const BALL_DEPTH: u32 = 7;

/// `(R−ρ)² ∫_{B_ρ}|∇u|² / ∫_{B_R}|u|²`, the quantity bounded by the
/// Caccioppoli inequality. Returns 0 when `u` vanishes on `B_R`.
pub fn caccioppoli_ratio(u: &FieldSolution, x0: Point, rho: f64, big_r: f64) -> Result<f64> {
    if !(rho > 0.0 && rho < big_r) {
        return Err(Error::InvalidArgument(format!(
            "need 0 < ρ < R, got ρ = {rho}, R = {big_r}"
        )));
    }
    let mesh = &u.mesh;
    let samples = 720;
    for k in 0..samples {
        let t = 2.0 * std::f64::consts::PI * k as f64 / samples as f64;
        let p = [x0[0] + big_r * t.cos(), x0[1] + big_r * t.sin()];
        if u.locator().locate(mesh, p).is_none() {
            return Err(Error::Geometry(format!(
                "ball of radius {big_r} around {x0:?} is not contained in the domain"
            )));
        }
    }
    let touching: Vec<usize> = (0..mesh.triangles.len())
        .filter(|&t| point_triangle_distance(&mesh.vertices(t), x0) < big_r)
        .collect();
    let region = mesh.triangles[touching[0]].region;
    if touching.iter().any(|&t| mesh.triangles[t].region != region) {
        return Err(Error::Geometry(format!(
            "ball of radius {big_r} around {x0:?} crosses a region interface"
        )));
    }
    let opts = Adaptive {
        max_depth: BALL_DEPTH,
        ..Default::default()
    };
    let inner = Clip::Inside { center: x0, radius: rho };
    let outer = Clip::Inside {
        center: x0,
        radius: big_r,
    };
    let mut grad2 = 0.0;
    let mut val2 = 0.0;
    for &t in &touching {
        let v = mesh.vertices(t);
        let g = u.gradient(t);
        let gg = g[0].norm_sqr() + g[1].norm_sqr();
        grad2 += integrate_triangle(&v, &inner, &opts, &|_| gg);
        val2 += integrate_triangle(&v, &outer, &opts, &|p| u.value_on(t, p).norm_sqr());
    }
    if val2 == 0.0 {
        return Ok(0.0);
    }
    Ok((big_r - rho).powi(2) * grad2 / val2)
}

/// Concentric balls `B_ρ(center) ⊂ B_R(center)` for a Caccioppoli check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CaccioppoliBall {
    pub center: Point,
    pub rho: f64,
    pub big_r: f64,
}

/// One ball per strip, centred in it, with `R = 0.4 r0` and `ρ = R/2`.
pub fn strip_balls(p: &Partition) -> Vec<CaccioppoliBall> {
    p.regions
        .iter()
        .filter(|r| r.index >= 1)
        .map(|r| {
            let b = r.bounds;
            let big_r = 0.4 * p.r0;
            CaccioppoliBall {
                center: [0.5 * (b.x0 + b.x1), 0.5 * (b.y0 + b.y1)],
                rho: 0.5 * big_r,
                big_r,
            }
        })
        .collect()
}

/// Trace of the plane wave `exp(i(k·x + φ))`.
pub fn plane_wave_trace(mesh: &Mesh, k: [f64; 2], phase: f64) -> Vec<Complex64> {
    mesh.trace_of(|x| Complex64::new(0.0, k[0] * x[0] + k[1] * x[1] + phase).exp())
}

#[derive(Debug, Clone, PartialEq)]
pub struct CaccioppoliSuite {
    /// `ratios[d][b]` for datum `d` and ball `b`.
    pub ratios: Vec<Vec<f64>>,
    pub max_ratio: f64,
}

/// Caccioppoli ratios of the solutions for every datum on every ball.
pub fn caccioppoli_suite(
    sys: &StiffnessSystem,
    data: &[Vec<Complex64>],
    balls: &[CaccioppoliBall],
) -> Result<CaccioppoliSuite> {
    let ratios = data
        .par_iter()
        .map(|f| {
            let u = solve_dirichlet(sys, f)?;
            balls
                .iter()
                .map(|b| caccioppoli_ratio(&u, b.center, b.rho, b.big_r))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let max_ratio = ratios.iter().flatten().copied().fold(0.0, f64::max);
    Ok(CaccioppoliSuite { ratios, max_ratio })
}
