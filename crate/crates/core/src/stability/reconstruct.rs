//! Projected Gauss–Newton inversion of `γ ↦ Λ_γ` over the `N` complex
//! region values, with the misfit measured in the weighted Frobenius norm
//! `‖L⁻¹ (Λ_γ − Λ_target) L⁻ᵀ‖_F / √nb`.

use std::io::Write;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use super::sensitivity::{sensitivity_from_system, unweighted_matrix, weighted_vec, Sensitivity};
use crate::dtn::{dtn_from_system, dtn_matrix, DtNMap, GramWeight};
use crate::forward::{assemble, Admittivity, StiffnessSystem};
use crate::mesh::Mesh;
use crate::singular::loglog_slope;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussNewtonOptions {
    pub max_iter: usize,
    /// Stop once the misfit is at or below this value.
    pub misfit_tol: f64,
    /// Stop once `‖Δγ‖_∞ ≤ step_tol · max(1, ‖γ‖_∞)`.
    pub step_tol: f64,
    /// Step halvings tried before giving up on a search direction.
    pub max_halvings: usize,
}

impl Default for GaussNewtonOptions {
    fn default() -> Self {
        Self {
            max_iter: 30,
            misfit_tol: 1e-12,
            step_tol: 1e-12,
            max_halvings: 12,
        }
    }
}

/// One row of the iterate history.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationRecord {
    pub iter: usize,
    pub misfit: f64,
    /// `max_j |γ_j − γ_j^true|` when the truth is known.
    pub err_inf: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct Reconstruction {
    pub admittivity: Admittivity,
    pub history: Vec<IterationRecord>,
    pub converged: bool,
}

impl Reconstruction {
    /// Gauss–Newton steps taken.
    pub fn iterations(&self) -> usize {
        self.history.last().map_or(0, |r| r.iter)
    }

    pub fn final_misfit(&self) -> f64 {
        self.history.last().map_or(f64::NAN, |r| r.misfit)
    }

    /// History CSV `iter,misfit,err_inf`; `err_inf` is empty without a truth.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
        w.write_record(["iter", "misfit", "err_inf"])?;
        for r in &self.history {
            w.write_record([
                r.iter.to_string(),
                format!("{:e}", r.misfit),
                r.err_inf.map(|e| format!("{e:e}")).unwrap_or_default(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Nearest admissible value: clamp `Re γ ≥ 1/λ`, then pull `|γ|` down to `λ`.
pub fn project(g: Complex64, lambda: f64) -> Complex64 {
    let lo = 1.0 / lambda;
    let mut z = Complex64::new(g.re.max(lo), g.im);
    if z.norm() > lambda {
        z *= lambda / z.norm();
        if z.re < lo {
            z = Complex64::new(lo, (lambda * lambda - lo * lo).sqrt().copysign(z.im));
        }
    }
    z
}

fn project_all(values: &[Complex64], lambda: f64) -> Result<Admittivity> {
    Admittivity::new(values.iter().map(|&g| project(g, lambda)).collect(), lambda)
}

struct State {
    a: Admittivity,
    sys: StiffnessSystem,
    residual: DVector<Complex64>,
}

impl State {
    fn new(mesh: &Arc<Mesh>, a: Admittivity, target: &DMatrix<Complex64>, w: &GramWeight) -> Result<Self> {
        let sys = assemble(mesh.clone(), &a)?;
        let d = dtn_from_system(&sys)?;
        let residual = weighted_vec(w, &(d.matrix - target));
        Ok(Self { a, sys, residual })
    }

    fn misfit(&self) -> f64 {
        self.residual.norm()
    }
}

/// Minimises the weighted DtN misfit over the region values of `guess`.
///
/// Infeasible guesses are projected. When `truth` is given the history
/// records `‖γ − γ^true‖_∞`.
pub fn gauss_newton_reconstruct(
    target: &DtNMap,
    mesh: Arc<Mesh>,
    guess: &Admittivity,
    truth: Option<&Admittivity>,
    opts: &GaussNewtonOptions,
) -> Result<Reconstruction> {
    if target.mesh_hash != mesh.hash() {
        return Err(Error::MismatchedMesh);
    }
    if let Some(t) = truth {
        if t.len() != guess.len() {
            return Err(Error::DimensionMismatch(format!("truth has {} regions, guess {}", t.len(), guess.len())));
        }
    }
    let lambda = guess.lambda();
    let w = GramWeight::new(&target.gram_half)?;
    let err = |a: &Admittivity| truth.map(|t| a.max_difference(t));
    let mut state = State::new(&mesh, project_all(guess.values(), lambda)?, &target.matrix, &w)?;
    let mut history = vec![IterationRecord {
        iter: 0,
        misfit: state.misfit(),
        err_inf: err(&state.a),
    }];
    let mut converged = state.misfit() <= opts.misfit_tol;
    let mut iter = 0;
    while !converged && iter < opts.max_iter {
        iter += 1;
        let sens = sensitivity_from_system(&state.sys, &target.gram_half)?;
        let rhs = -&state.residual;
        let step = sens
            .weighted
            .clone()
            .svd(true, true)
            .solve(&rhs, 0.0)
            .map_err(|e| Error::SolverBreakdown(e.to_string()))?;
        let scale = state.a.values().iter().map(|g| g.norm()).fold(1.0, f64::max);
        let mut alpha = 1.0;
        let mut accepted = None;
        for _ in 0..=opts.max_halvings {
            let trial: Vec<Complex64> = state
                .a
                .values()
                .iter()
                .zip(step.iter())
                .map(|(g, d)| g + d * alpha)
                .collect();
            let next = State::new(&mesh, project_all(&trial, lambda)?, &target.matrix, &w)?;
            if next.misfit() < state.misfit() {
                accepted = Some(next);
                break;
            }
            alpha *= 0.5;
        }
        let Some(next) = accepted else {
            // No descent along the Gauss–Newton direction: a stationary point.
            converged = step.camax() <= opts.step_tol.sqrt() * scale;
            break;
        };
        let moved = next.a.max_difference(&state.a);
        state = next;
        history.push(IterationRecord {
            iter,
            misfit: state.misfit(),
            err_inf: err(&state.a),
        });
        converged = state.misfit() <= opts.misfit_tol || moved <= opts.step_tol * scale;
    }
    Ok(Reconstruction {
        admittivity: state.a,
        history,
        converged,
    })
}

/// Perturbation of weighted norm `η` along the least-observable direction:
/// the left singular vector of `σ_min`.
pub fn worst_case_noise(target: &DtNMap, sens: &Sensitivity, eta: f64) -> Result<DMatrix<Complex64>> {
    let v = &sens.left_min * Complex64::new(eta, 0.0);
    unweighted_matrix(&target.gram_half, &v)
}

/// Complex-symmetric Gaussian perturbation of weighted norm `η`.
pub fn random_noise(target: &DtNMap, eta: f64, rng: &mut ChaCha8Rng) -> Result<DMatrix<Complex64>> {
    let nb = target.dim();
    let mut z = DMatrix::<Complex64>::zeros(nb, nb);
    for j in 0..nb {
        for i in 0..=j {
            let re: f64 = StandardNormal.sample(rng);
            let im: f64 = StandardNormal.sample(rng);
            z[(i, j)] = Complex64::new(re, im);
            z[(j, i)] = z[(i, j)];
        }
    }
    let v = DVector::from_column_slice(z.as_slice());
    let v = &v * Complex64::new(eta / v.norm(), 0.0);
    unweighted_matrix(&target.gram_half, &v)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoiseKind {
    WorstCase,
    Random,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NoiseTrial {
    pub eta: f64,
    pub err_inf: f64,
    pub misfit: f64,
    pub iterations: usize,
    pub converged: bool,
}

impl NoiseTrial {
    /// Empirical constant `‖γ − γ^true‖_∞ / η`.
    pub fn constant(&self) -> f64 {
        self.err_inf / self.eta
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NoiseSweep {
    pub trials: Vec<NoiseTrial>,
    /// Log–log slope of error against `η`.
    pub slope: f64,
    /// `1/σ_min` at the truth.
    pub predicted_constant: f64,
    pub max_constant: f64,
}

/// Reconstructs from `Λ_true + noise(η)` for each level, starting at `guess`.
/// Levels run in parallel; random noise for level `i` uses stream `i` of `seed`.
pub fn noise_sweep(
    mesh: Arc<Mesh>,
    truth: &Admittivity,
    guess: &Admittivity,
    etas: &[f64],
    kind: NoiseKind,
    seed: u64,
    opts: &GaussNewtonOptions,
) -> Result<NoiseSweep> {
    if etas.iter().any(|&e| !(e > 0.0)) {
        return Err(Error::InvalidArgument("noise levels must be positive".into()));
    }
    let sys = assemble(mesh.clone(), truth)?;
    let clean = dtn_from_system(&sys)?;
    let sens = sensitivity_from_system(&sys, &clean.gram_half)?;
    let trials = etas
        .par_iter()
        .enumerate()
        .map(|(i, &eta)| {
            let noise = match kind {
                NoiseKind::WorstCase => worst_case_noise(&clean, &sens, eta)?,
                NoiseKind::Random => {
                    let mut rng = ChaCha8Rng::seed_from_u64(seed);
                    rng.set_stream(i as u64);
                    random_noise(&clean, eta, &mut rng)?
                }
            };
            let mut target = clean.clone();
            target.matrix += noise;
            let r = gauss_newton_reconstruct(&target, mesh.clone(), guess, Some(truth), opts)?;
            Ok(NoiseTrial {
                eta,
                err_inf: r.admittivity.max_difference(truth),
                misfit: r.final_misfit(),
                iterations: r.iterations(),
                converged: r.converged,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let x: Vec<f64> = trials.iter().map(|t| t.eta).collect();
    let y: Vec<f64> = trials.iter().map(|t| t.err_inf).collect();
    Ok(NoiseSweep {
        slope: loglog_slope(&x, &y),
        predicted_constant: sens.lipschitz_estimate(),
        max_constant: trials.iter().map(NoiseTrial::constant).fold(0.0, f64::max),
        trials,
    })
}

/// Noiseless synthetic target for `truth` on `mesh`.
pub fn synthetic_target(mesh: Arc<Mesh>, truth: &Admittivity) -> Result<DtNMap> {
    dtn_matrix(mesh, truth)
}
