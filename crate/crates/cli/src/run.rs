//! Experiment dispatch and artifact writing.

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use eitlab_core::dtn::{boundary_arc, difference_norm, dtn_matrix, local_dtn, write_real_csv, DtNMap};
use eitlab_core::forward::{
    assemble, caccioppoli_suite, plane_wave_trace, solve_dirichlet, solve_real_system, strip_balls, Admittivity,
};
use eitlab_core::fundsol::TwoPhaseCoeffs;
use eitlab_core::mesh::Mesh;
use eitlab_core::singular::{alessandrini_pair, asymptotics_check, s_rate_3d};
use eitlab_core::stability::reconstruct::{noise_sweep, synthetic_target, NoiseKind};
use eitlab_core::stability::sweep::{max_ratio_by_regions, write_sweep_csv};
use eitlab_core::stability::{
    constant_bound, delta_recursion, gauss_newton_reconstruct, stability_sweep, three_sphere_ratio, ConstantTracker,
    DataSupport, GaussNewtonOptions, HarmonicPolynomial,
};
use eitlab_core::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::config::{to_complex, DomainSpec, Experiment, Formulation, NoiseModel, Scenario, Support, TraceSpec};
use crate::error::{NumericFailure, ValidationError};

/// Relative gap accepted by the identity check.
const IDENTITY_TOLERANCE: f64 = 1e-10;

/// What an experiment produced.
#[derive(Debug, Default)]
pub struct Outcome {
    pub outputs: Vec<String>,
    pub mesh_hash: Option<String>,
    pub summary: Value,
    /// Set when a numerical check missed its tolerance; artifacts are still written.
    pub failure: Option<String>,
}

struct Artifacts<'a> {
    dir: &'a Path,
    outputs: Vec<String>,
}

impl Artifacts<'_> {
    fn file(&mut self, name: &str) -> Result<BufWriter<File>> {
        let path = self.dir.join(name);
        self.outputs.push(name.to_string());
        Ok(BufWriter::new(File::create(&path).with_context(|| format!("creating {}", path.display()))?))
    }

    fn table(&mut self, name: &str, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<()> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(self.file(name)?);
        w.write_record(header)?;
        for r in rows {
            w.write_record(&r)?;
        }
        w.flush()?;
        Ok(())
    }
}

fn num(v: f64) -> String {
    format!("{v:e}")
}

fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

fn required<T>(v: Option<std::result::Result<T, ValidationError>>, field: &str) -> Result<T> {
    Ok(v.ok_or_else(|| ValidationError::new(format!("{field}: missing")))??)
}

fn bottom_arc(s: &Scenario, mesh: &Mesh) -> Vec<usize> {
    let y0 = match &s.domain {
        Some(DomainSpec::Strips { rect, .. }) => rect[1],
        _ => unreachable!("validated: bottom support needs strips"),
    };
    boundary_arc(mesh, |x| (x[1] - y0).abs() <= 1e-12)
}

fn restrict(d: DtNMap, arc: Option<&[usize]>) -> Result<DtNMap> {
    Ok(match arc {
        Some(a) => local_dtn(&d, a)?,
        None => d,
    })
}

fn trace(spec: &TraceSpec, mesh: &Mesh, rng: &mut ChaCha8Rng) -> Vec<Complex64> {
    match spec {
        TraceSpec::Linear { coeffs, offset } => {
            let b = to_complex(*offset);
            mesh.trace_of(|x| Complex64::new(coeffs[0] * x[0] + coeffs[1] * x[1], 0.0) + b)
        }
        TraceSpec::PlaneWave { k, phase } => plane_wave_trace(mesh, *k, *phase),
        TraceSpec::Random => random_trace(mesh.boundary_count(), rng),
    }
}

fn random_trace(n: usize, rng: &mut ChaCha8Rng) -> Vec<Complex64> {
    (0..n)
        .map(|_| Complex64::new(rng.random_range(-1.0..=1.0), rng.random_range(-1.0..=1.0)))
        .collect()
}

/// Runs the scenario's experiment, writing artifacts into `dir`.
pub fn run_experiment(s: &Scenario, dir: &Path) -> Result<Outcome> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut art = Artifacts { dir, outputs: Vec::new() };
    let mut rng = ChaCha8Rng::seed_from_u64(s.seed);
    let mut out = Outcome::default();
    let mesh = match &s.experiment {
        Experiment::SRate { .. } | Experiment::ConstantBound { .. } | Experiment::ThreeSphere { .. } => None,
        _ => Some(s.build_mesh()?),
    };
    out.mesh_hash = mesh.as_ref().map(|m| m.hash());

    out.summary = match &s.experiment {
        Experiment::Forward { trace: spec, formulation } => {
            let mesh = mesh.expect("meshed experiment");
            let a = required(s.first(), "admittivity.values")?;
            let f = trace(spec, &mesh, &mut rng);
            let u = match formulation {
                Formulation::Complex => solve_dirichlet(&assemble(mesh.clone(), &a)?, &f)?,
                Formulation::Real => solve_real_system(mesh.clone(), &a, &f)?,
            };
            u.write_csv(art.file("solution.csv")?)?;
            json!({ "nodes": mesh.node_count(), "triangles": mesh.triangles.len(), "residual": u.residual })
        }
        Experiment::DtnNorm { support } => {
            let mesh = mesh.expect("meshed experiment");
            let (a, b) = (required(s.first(), "admittivity.values")?, required(s.second(), "admittivity.second")?);
            let arc = (*support == Support::Bottom).then(|| bottom_arc(s, &mesh));
            let d1 = restrict(dtn_matrix(mesh.clone(), &a)?, arc.as_deref())?;
            let d2 = restrict(dtn_matrix(mesh.clone(), &b)?, arc.as_deref())?;
            d1.write_csv(art.file("dtn.csv")?)?;
            write_real_csv(&d1.mass, &d1.mesh_hash, art.file("boundary_mass.csv")?)?;
            write_real_csv(&d1.lb_stiffness, &d1.mesh_hash, art.file("boundary_stiffness.csv")?)?;
            let e = a.max_difference(&b);
            let eps = difference_norm(&d1, &d2)?;
            let ratio = (eps > 0.0).then(|| e / eps);
            art.table("norm.csv", &["E", "eps", "ratio"], [vec![num(e), num(eps), opt(ratio)]])?;
            json!({
                "boundary_nodes": d1.dim(),
                "symmetry_defect": d1.symmetry_defect(),
                "E": e, "eps": eps, "ratio": ratio,
            })
        }
        Experiment::IdentityCheck { traces } => {
            let mesh = mesh.expect("meshed experiment");
            let s1 = assemble(mesh.clone(), &required(s.first(), "admittivity.values")?)?;
            let s2 = assemble(mesh.clone(), &required(s.second(), "admittivity.second")?)?;
            let nb = mesh.boundary_count();
            let mut rows = Vec::new();
            let mut worst = 0.0f64;
            for _ in 0..*traces {
                let f1 = random_trace(nb, &mut rng);
                let f2 = random_trace(nb, &mut rng);
                let p = alessandrini_pair(&s1, &s2, &f1, &f2)?;
                worst = worst.max(p.relative_gap());
                rows.push(vec![num(p.lhs.re), num(p.lhs.im), num(p.rhs.re), num(p.rhs.im), num(p.relative_gap())]);
            }
            art.table("identity.csv", &["lhs_re", "lhs_im", "rhs_re", "rhs_im", "rel_err"], rows)?;
            if worst > IDENTITY_TOLERANCE {
                out.failure = Some(format!("identity gap {worst:.3e} exceeds {IDENTITY_TOLERANCE:e}"));
            }
            json!({ "traces": traces, "max_rel_err": worst })
        }
        Experiment::Asymptotics { link, radii } => {
            let mesh = mesh.expect("meshed experiment");
            let p = s.partition()?.expect("validated: strips");
            let sys = assemble(mesh, &required(s.first(), "admittivity.values")?)?;
            let r: Vec<f64> = radii.iter().map(|q| q * p.r0).collect();
            let rep = asymptotics_check(&p, &sys, *link, &r)?;
            art.table(
                "asymptotics.csv",
                &["r", "deviation", "grad_deviation"],
                rep.rows.iter().map(|w| vec![num(w.r), num(w.deviation), num(w.grad_deviation)]),
            )?;
            if !rep.bounded {
                out.failure = Some(format!("deviation grows as r → 0 (slopes {:.3}, {:.3})", rep.slope, rep.grad_slope));
            }
            json!({ "slope": rep.slope, "grad_slope": rep.grad_slope, "bounded": rep.bounded })
        }
        Experiment::SRate { gamma_plus_1, gamma_plus_2, gamma_minus, rho0, radii } => {
            let gm = to_complex(*gamma_minus);
            let c1 = TwoPhaseCoeffs::new(to_complex(*gamma_plus_1), gm)?;
            let c2 = TwoPhaseCoeffs::new(to_complex(*gamma_plus_2), gm)?;
            let rep = s_rate_3d(&c1, &c2, *rho0, radii)?;
            art.table(
                "s_rate.csv",
                &["r", "abs_S", "fit_slope"],
                rep.rows.iter().map(|w| vec![num(w.r), num(w.abs_s), num(rep.slope)]),
            )?;
            json!({ "slope": rep.slope })
        }
        Experiment::Reconstruct { guess, noise_levels, noise, max_iter } => {
            let mesh = mesh.expect("meshed experiment");
            let truth = required(s.first(), "admittivity.values")?;
            let guess = match guess {
                Some(g) => s.admittivity_from("experiment.guess", g, truth.lambda())?,
                None => Admittivity::constant(Complex64::new(1.0, 0.0), truth.len(), truth.lambda())?,
            };
            let opts = GaussNewtonOptions { max_iter: *max_iter, ..Default::default() };
            let target = synthetic_target(mesh.clone(), &truth)?;
            let r = gauss_newton_reconstruct(&target, mesh.clone(), &guess, Some(&truth), &opts)?;
            r.write_csv(art.file("reconstruction.csv")?)?;
            let kind = match noise {
                NoiseModel::WorstCase => NoiseKind::WorstCase,
                NoiseModel::Random => NoiseKind::Random,
            };
            let sweep = noise_sweep(mesh, &truth, &guess, noise_levels, kind, s.seed, &opts)?;
            art.table(
                "noise.csv",
                &["eta", "err_inf", "misfit", "iterations", "converged", "constant"],
                sweep.trials.iter().map(|t| {
                    vec![num(t.eta), num(t.err_inf), num(t.misfit), t.iterations.to_string(), t.converged.to_string(), num(t.constant())]
                }),
            )?;
            if !r.converged {
                out.failure = Some(format!("no convergence in {} iterations, final misfit {:.3e}", r.iterations(), r.final_misfit()));
            }
            json!({
                "converged": r.converged,
                "iterations": r.iterations(),
                "final_misfit": r.final_misfit(),
                "err_inf": r.admittivity.max_difference(&truth),
                "recovered": r.admittivity.values().iter().map(|g| [g.re, g.im]).collect::<Vec<_>>(),
                "noise_slope": sweep.slope,
                "predicted_constant": sweep.predicted_constant,
                "max_empirical_constant": sweep.max_constant,
            })
        }
        Experiment::ConstantBound { n, c_base, regions, recursion } => {
            let t = ConstantTracker::basic(*n, *c_base)?;
            let mut rows = Vec::new();
            for &k in regions {
                let b = constant_bound(k, &t)?;
                rows.push(vec![k.to_string(), opt(b.log10()), opt(b.log10_log10()), b.ln_bound.to_string()]);
            }
            art.table("constant_bound.csv", &["N", "log10_bound", "log10_log10_bound", "ln_bound"], rows)?;
            if let Some(r) = recursion {
                let d = delta_recursion(r.eps, r.e, *c_base, r.chain, *n)?;
                art.table(
                    "recursion.csv",
                    &["k", "delta", "closed_form"],
                    d.deltas.iter().zip(&d.closed_form).enumerate().map(|(k, (a, b))| vec![k.to_string(), num(*a), num(*b)]),
                )?;
            }
            json!({ "n": n, "c_base": c_base, "tau": t.tau, "n1": t.n1, "delta1": t.delta1 })
        }
        Experiment::Sweep { pairs, depth, support } => {
            let mesh = mesh.expect("meshed experiment");
            let lambda = s.lambda();
            let mut list = Vec::new();
            for (i, p) in pairs.iter().enumerate() {
                list.push((
                    s.admittivity_from(&format!("experiment.pairs[{i}].first"), &p.first, lambda)?,
                    s.admittivity_from(&format!("experiment.pairs[{i}].second"), &p.second, lambda)?,
                ));
            }
            if let Some(d) = depth {
                let n = mesh.max_region();
                let bg = vec![d.background; n];
                for k in 0..n {
                    let mut v = bg.clone();
                    v[k] = d.perturbed;
                    list.push((
                        s.admittivity_from("experiment.depth.background", &bg, lambda)?,
                        s.admittivity_from("experiment.depth.perturbed", &v, lambda)?,
                    ));
                }
            }
            let data = match support {
                Support::Full => DataSupport::Full,
                Support::Bottom => DataSupport::Local(bottom_arc(s, &mesh)),
            };
            let records = stability_sweep(mesh, &list, &data)?;
            write_sweep_csv(&records, art.file("sweep.csv")?)?;
            let by_n: serde_json::Map<String, Value> =
                max_ratio_by_regions(&records).into_iter().map(|(k, v)| (k.to_string(), json!(v))).collect();
            json!({ "pairs": records.len(), "max_ratio_by_N": by_n })
        }
        Experiment::ThreeSphere { samples, max_degree, r } => {
            let mut rows = Vec::new();
            let mut max = 0.0f64;
            let mut skipped = 0;
            for i in 0..*samples {
                let u = HarmonicPolynomial::random([0.0, 0.0], *max_degree, &mut rng);
                let q = three_sphere_ratio(&u, *r)?;
                match q {
                    Some(v) => max = max.max(v),
                    None => skipped += 1,
                }
                rows.push(vec![i.to_string(), u.degree().to_string(), opt(q)]);
            }
            art.table("three_sphere.csv", &["sample", "degree", "ratio"], rows)?;
            json!({ "samples": samples, "skipped": skipped, "max_ratio": max })
        }
        Experiment::Caccioppoli { waves } => {
            let mesh = mesh.expect("meshed experiment");
            let p = s.partition()?.expect("validated: strips");
            let balls = strip_balls(&p);
            let data: Vec<_> = waves.iter().map(|&k| plane_wave_trace(&mesh, k, 0.0)).collect();
            let suite = caccioppoli_suite(&assemble(mesh, &required(s.first(), "admittivity.values")?)?, &data, &balls)?;
            let mut rows = Vec::new();
            for (d, ratios) in suite.ratios.iter().enumerate() {
                for (b, q) in ratios.iter().enumerate() {
                    let ball = &balls[b];
                    rows.push(vec![
                        d.to_string(),
                        b.to_string(),
                        num(waves[d][0]),
                        num(waves[d][1]),
                        num(ball.center[0]),
                        num(ball.center[1]),
                        num(ball.rho),
                        num(ball.big_r),
                        num(*q),
                    ]);
                }
            }
            art.table("caccioppoli.csv", &["datum", "ball", "kx", "ky", "center_x", "center_y", "rho", "R", "ratio"], rows)?;
            json!({ "max_ratio": suite.max_ratio })
        }
    };
    out.outputs = art.outputs;
    Ok(out)
}

/// Output directory: `--out`, then the config's `output`, then `./eitlab-out`.
pub fn output_dir(cli: Option<PathBuf>, s: &Scenario) -> PathBuf {
    cli.or_else(|| s.output.clone()).unwrap_or_else(|| PathBuf::from("eitlab-out"))
}

/// Writes `manifest.json` next to the artifacts.
pub fn write_manifest(dir: &Path, s: &Scenario, out: &Outcome, wall_time: f64) -> Result<()> {
    let manifest = json!({
        "tool": env!("CARGO_PKG_NAME"),
        "version": env!("CARGO_PKG_VERSION"),
        "experiment": s.experiment.name(),
        "seed": s.seed,
        "config": serde_json::to_value(s)?,
        "mesh_sha256": out.mesh_hash,
        "outputs": out.outputs,
        "summary": out.summary,
        "status": if out.failure.is_some() { "numeric-failure" } else { "ok" },
        "failure": out.failure,
        "wall_time_s": wall_time,
    });
    let path = dir.join("manifest.json");
    fs::write(&path, serde_json::to_string_pretty(&manifest)? + "\n").with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

/// Numeric failure recorded in the outcome, as an error.
pub fn check(out: &Outcome) -> Result<()> {
    match &out.failure {
        Some(msg) => Err(NumericFailure(msg.clone()).into()),
        None => Ok(()),
    }
}
