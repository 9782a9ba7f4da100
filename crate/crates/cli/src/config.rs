//! Scenario files: TOML, versioned, unknown keys rejected.

use std::path::PathBuf;
use std::sync::Arc;

use eitlab_core::forward::Admittivity;
use eitlab_core::geometry::{build_partition, Partition, Rect};
use eitlab_core::mesh::{disk_mesh, generate_mesh, Mesh};
use eitlab_core::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::ValidationError;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub version: u32,
    #[serde(default)]
    pub seed: u64,
    /// Output directory; `--out` takes precedence.
    pub output: Option<PathBuf>,
    pub domain: Option<DomainSpec>,
    pub mesh: Option<MeshSpec>,
    pub admittivity: Option<AdmittivitySpec>,
    pub experiment: Experiment,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum DomainSpec {
    Strips {
        strips: usize,
        #[serde(default = "unit_rect")]
        rect: [f64; 4],
        #[serde(default)]
        with_extension: bool,
    },
    Disk {
        #[serde(default)]
        center: [f64; 2],
        #[serde(default = "one")]
        radius: f64,
    },
}

fn unit_rect() -> [f64; 4] {
    [0.0, 0.0, 1.0, 1.0]
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeshSpec {
    pub h: f64,
}

/// Complex numbers are written as `[re, im]`.
pub type ComplexSpec = [f64; 2];

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdmittivitySpec {
    pub lambda: f64,
    pub values: Vec<ComplexSpec>,
    /// Second admittivity for pairwise experiments.
    pub second: Option<Vec<ComplexSpec>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Formulation {
    Complex,
    Real,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum TraceSpec {
    /// `f(x) = a₀ x₁ + a₁ x₂ + b`.
    Linear {
        coeffs: [f64; 2],
        #[serde(default)]
        offset: ComplexSpec,
    },
    /// `f(x) = exp(i(k·x + φ))`.
    PlaneWave {
        k: [f64; 2],
        #[serde(default)]
        phase: f64,
    },
    /// Independent uniform nodal values in `[−1, 1] + i[−1, 1]`.
    Random,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Support {
    Full,
    /// The boundary arc on the bottom edge of the strip domain.
    Bottom,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NoiseModel {
    WorstCase,
    Random,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairSpec {
    pub first: Vec<ComplexSpec>,
    pub second: Vec<ComplexSpec>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DepthSpec {
    /// Background value on every strip.
    pub background: ComplexSpec,
    /// Value placed on strip `k` in pair `k`.
    pub perturbed: ComplexSpec,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Experiment {
    Forward {
        trace: TraceSpec,
        #[serde(default = "complex")]
        formulation: Formulation,
    },
    DtnNorm {
        #[serde(default = "full")]
        support: Support,
    },
    IdentityCheck {
        #[serde(default = "three")]
        traces: usize,
    },
    Asymptotics {
        link: usize,
        /// Radii in units of `r0`.
        #[serde(default = "dyadic_radii")]
        radii: Vec<f64>,
    },
    SRate {
        gamma_plus_1: ComplexSpec,
        gamma_plus_2: ComplexSpec,
        gamma_minus: ComplexSpec,
        #[serde(default = "one")]
        rho0: f64,
        #[serde(default = "rate_radii")]
        radii: Vec<f64>,
    },
    Reconstruct {
        guess: Option<Vec<ComplexSpec>>,
        #[serde(default = "noise_levels")]
        noise_levels: Vec<f64>,
        #[serde(default = "worst_case")]
        noise: NoiseModel,
        #[serde(default = "max_iter")]
        max_iter: usize,
    },
    ConstantBound {
        #[serde(default = "three")]
        n: usize,
        #[serde(default = "one")]
        c_base: f64,
        #[serde(default = "region_counts")]
        regions: Vec<usize>,
        /// `(ε, E, M)` for an optional `δ_k` recursion table.
        recursion: Option<RecursionSpec>,
    },
    Sweep {
        #[serde(default)]
        pairs: Vec<PairSpec>,
        depth: Option<DepthSpec>,
        #[serde(default = "full")]
        support: Support,
    },
    ThreeSphere {
        #[serde(default = "two_hundred")]
        samples: usize,
        #[serde(default = "six")]
        max_degree: usize,
        #[serde(default = "one")]
        r: f64,
    },
    Caccioppoli {
        #[serde(default = "default_waves")]
        waves: Vec<[f64; 2]>,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RecursionSpec {
    pub eps: f64,
    pub e: f64,
    pub chain: usize,
}

fn complex() -> Formulation {
    Formulation::Complex
}
fn full() -> Support {
    Support::Full
}
fn three() -> usize {
    3
}
fn six() -> usize {
    6
}
fn two_hundred() -> usize {
    200
}
fn max_iter() -> usize {
    30
}
fn worst_case() -> NoiseModel {
    NoiseModel::WorstCase
}
fn dyadic_radii() -> Vec<f64> {
    (2..=6).map(|k| 0.5f64.powi(k)).collect()
}
fn rate_radii() -> Vec<f64> {
    (3..=7).map(|k| 0.5f64.powi(k)).collect()
}
fn noise_levels() -> Vec<f64> {
    vec![1e-4, 1e-3, 1e-2]
}
fn region_counts() -> Vec<usize> {
    (1..=6).collect()
}
fn default_waves() -> Vec<[f64; 2]> {
    vec![[3.0, 1.0], [-2.0, 4.0], [5.0, -5.0], [0.5, 0.0]]
}

impl Experiment {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Forward { .. } => "forward",
            Self::DtnNorm { .. } => "dtn-norm",
            Self::IdentityCheck { .. } => "identity-check",
            Self::Asymptotics { .. } => "asymptotics",
            Self::SRate { .. } => "s-rate",
            Self::Reconstruct { .. } => "reconstruct",
            Self::ConstantBound { .. } => "constant-bound",
            Self::Sweep { .. } => "sweep",
            Self::ThreeSphere { .. } => "three-sphere",
            Self::Caccioppoli { .. } => "caccioppoli",
        }
    }
}

pub fn to_complex(v: ComplexSpec) -> Complex64 {
    Complex64::new(v[0], v[1])
}

fn invalid(field: &str, msg: impl std::fmt::Display) -> ValidationError {
    ValidationError::new(format!("{field}: {msg}"))
}

/// Parses and validates a scenario file's contents.
pub fn parse(text: &str) -> Result<Scenario, ValidationError> {
    let s: Scenario = toml::from_str(text).map_err(|e| ValidationError::new(e.to_string()))?;
    s.validate()?;
    Ok(s)
}

impl Scenario {
    /// Checks every field that does not need the mesh.
    pub fn validate(&self) -> Result<(), ValidationError> {
        if self.version != SCHEMA_VERSION {
            return Err(invalid("version", format!("unsupported schema version {} (expected {SCHEMA_VERSION})", self.version)));
        }
        if let Some(m) = &self.mesh {
            if !(m.h > 0.0 && m.h.is_finite()) {
                return Err(invalid("mesh.h", format!("must be positive, got {}", m.h)));
            }
        }
        if let Some(a) = &self.admittivity {
            self.admittivity_from("admittivity.values", &a.values, a.lambda)?;
            if let Some(second) = &a.second {
                self.admittivity_from("admittivity.second", second, a.lambda)?;
            }
        }
        if let Some(d) = &self.domain {
            self.partition_of(d)?;
        }
        let needs_mesh = !matches!(
            self.experiment,
            Experiment::SRate { .. } | Experiment::ConstantBound { .. } | Experiment::ThreeSphere { .. }
        );
        if needs_mesh {
            for (present, field) in [
                (self.domain.is_some(), "domain"),
                (self.mesh.is_some(), "mesh"),
                (self.admittivity.is_some(), "admittivity"),
            ] {
                if !present {
                    return Err(invalid(field, format!("required by the {} experiment", self.experiment.name())));
                }
            }
        }
        let strips = matches!(self.domain, Some(DomainSpec::Strips { .. }));
        if let Experiment::DtnNorm { support } | Experiment::Sweep { support, .. } = &self.experiment {
            if *support == Support::Bottom && !strips {
                return Err(invalid("experiment.support", "\"bottom\" needs a strips domain"));
            }
        }
        match &self.experiment {
            Experiment::DtnNorm { .. } => {
                if self.second().is_none() {
                    return Err(invalid("admittivity.second", "required by the dtn-norm experiment"));
                }
            }
            Experiment::IdentityCheck { traces } => {
                if *traces == 0 {
                    return Err(invalid("experiment.traces", "must be at least 1"));
                }
                if self.second().is_none() {
                    return Err(invalid("admittivity.second", "required by the identity-check experiment"));
                }
            }
            Experiment::Asymptotics { link, radii } => {
                if !strips {
                    return Err(invalid("domain", "asymptotics needs a strips domain"));
                }
                if *link < 2 {
                    return Err(invalid("experiment.link", "must name an interior interface (≥ 2)"));
                }
                positive_list("experiment.radii", radii)?;
                if let Some(r) = radii.iter().find(|&&r| r > 0.25) {
                    return Err(invalid("experiment.radii", format!("radius {r} r0 exceeds r0/4")));
                }
            }
            Experiment::SRate { gamma_plus_1, gamma_plus_2, gamma_minus, rho0, radii } => {
                for (f, v) in [
                    ("experiment.gamma_plus_1", gamma_plus_1),
                    ("experiment.gamma_plus_2", gamma_plus_2),
                    ("experiment.gamma_minus", gamma_minus),
                ] {
                    if !(v[0] > 0.0) {
                        return Err(invalid(f, "real part must be positive"));
                    }
                }
                if !(*rho0 > 0.0) {
                    return Err(invalid("experiment.rho0", "must be positive"));
                }
                positive_list("experiment.radii", radii)?;
            }
            Experiment::Reconstruct { guess, noise_levels, max_iter, .. } => {
                positive_list("experiment.noise_levels", noise_levels)?;
                if *max_iter == 0 {
                    return Err(invalid("experiment.max_iter", "must be at least 1"));
                }
                if let (Some(g), Some(a)) = (guess, &self.admittivity) {
                    if g.len() != a.values.len() {
                        return Err(invalid("experiment.guess", format!("has {} regions, admittivity has {}", g.len(), a.values.len())));
                    }
                }
            }
            Experiment::ConstantBound { n, c_base, regions, recursion } => {
                if *n < 3 {
                    return Err(invalid("experiment.n", format!("dimension {n} unsupported (need n ≥ 3)")));
                }
                if !(*c_base > 0.0) {
                    return Err(invalid("experiment.c_base", "must be positive"));
                }
                if regions.is_empty() || regions.contains(&0) {
                    return Err(invalid("experiment.regions", "must be a non-empty list of counts ≥ 1"));
                }
                if let Some(r) = recursion {
                    if !(r.eps >= 0.0 && r.e >= 0.0) {
                        return Err(invalid("experiment.recursion", "need eps, e ≥ 0"));
                    }
                }
            }
            Experiment::Sweep { pairs, depth, .. } => {
                if pairs.is_empty() && depth.is_none() {
                    return Err(invalid("experiment", "sweep needs `pairs` or `depth`"));
                }
                let lambda = self.lambda();
                for (i, p) in pairs.iter().enumerate() {
                    self.admittivity_from(&format!("experiment.pairs[{i}].first"), &p.first, lambda)?;
                    self.admittivity_from(&format!("experiment.pairs[{i}].second"), &p.second, lambda)?;
                }
                if let Some(d) = depth {
                    let n = self.region_count().unwrap_or(1);
                    self.admittivity_from("experiment.depth.background", &vec![d.background; n], lambda)?;
                    self.admittivity_from("experiment.depth.perturbed", &vec![d.perturbed; n], lambda)?;
                }
            }
            Experiment::ThreeSphere { samples, max_degree, r } => {
                if *samples == 0 || *max_degree == 0 {
                    return Err(invalid("experiment", "samples and max_degree must be at least 1"));
                }
                if !(*r > 0.0) {
                    return Err(invalid("experiment.r", "must be positive"));
                }
            }
            Experiment::Caccioppoli { waves } => {
                if !strips {
                    return Err(invalid("domain", "caccioppoli needs a strips domain"));
                }
                if waves.is_empty() {
                    return Err(invalid("experiment.waves", "must not be empty"));
                }
            }
            Experiment::Forward { .. } => {}
        }
        Ok(())
    }

    pub fn lambda(&self) -> f64 {
        self.admittivity.as_ref().map_or(10.0, |a| a.lambda)
    }

    fn region_count(&self) -> Option<usize> {
        match self.domain.as_ref()? {
            DomainSpec::Strips { strips, .. } => Some(*strips),
            DomainSpec::Disk { .. } => Some(1),
        }
    }

    pub fn admittivity_from(&self, field: &str, values: &[ComplexSpec], lambda: f64) -> Result<Admittivity, ValidationError> {
        if let Some(n) = self.region_count() {
            if values.len() != n {
                return Err(invalid(field, format!("has {} values, the domain has {n} regions", values.len())));
            }
        }
        Admittivity::new(values.iter().copied().map(to_complex).collect(), lambda).map_err(|e| {
            invalid(field, format!("{e} (ellipticity bound Re γ ≥ 1/λ, |γ| ≤ λ)"))
        })
    }

    pub fn first(&self) -> Option<Result<Admittivity, ValidationError>> {
        let a = self.admittivity.as_ref()?;
        Some(self.admittivity_from("admittivity.values", &a.values, a.lambda))
    }

    pub fn second(&self) -> Option<Result<Admittivity, ValidationError>> {
        let a = self.admittivity.as_ref()?;
        let s = a.second.as_ref()?;
        Some(self.admittivity_from("admittivity.second", s, a.lambda))
    }

    fn partition_of(&self, d: &DomainSpec) -> Result<Option<Partition>, ValidationError> {
        match d {
            DomainSpec::Strips { strips, rect, with_extension } => {
                let r = Rect::new(rect[0], rect[1], rect[2], rect[3]);
                build_partition(*strips, r, *with_extension)
                    .map(Some)
                    .map_err(|e| invalid("domain", e))
            }
            DomainSpec::Disk { radius, .. } => {
                if !(*radius > 0.0) {
                    return Err(invalid("domain.radius", "must be positive"));
                }
                Ok(None)
            }
        }
    }

    /// Strip partition, if the domain is one.
    pub fn partition(&self) -> Result<Option<Partition>, ValidationError> {
        match &self.domain {
            Some(d) => self.partition_of(d),
            None => Ok(None),
        }
    }

    pub fn build_mesh(&self) -> Result<Arc<Mesh>, ValidationError> {
        let d = self.domain.as_ref().ok_or_else(|| invalid("domain", "missing"))?;
        let h = self.mesh.as_ref().ok_or_else(|| invalid("mesh", "missing"))?.h;
        let m = match d {
            DomainSpec::Strips { .. } => {
                let p = self.partition_of(d)?.expect("strips partition");
                generate_mesh(&p, h)
            }
            DomainSpec::Disk { center, radius } => disk_mesh(*center, *radius, h),
        };
        m.map(Arc::new).map_err(|e| invalid("mesh.h", e))
    }
}

fn positive_list(field: &str, v: &[f64]) -> Result<(), ValidationError> {
    if v.is_empty() {
        return Err(invalid(field, "must not be empty"));
    }
    match v.iter().find(|&&x| !(x > 0.0 && x.is_finite())) {
        Some(x) => Err(invalid(field, format!("entries must be positive, got {x}"))),
        None => Ok(()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const STRIPS: &str = r#"
version = 1
[domain]
kind = "strips"
strips = 3
[mesh]
h = 0.0625
[admittivity]
lambda = 4.0
values = [[1.0, 0.0], [1.0, 0.0], [1.0, 0.0]]
"#;

    fn with(experiment: &str) -> Result<Scenario, ValidationError> {
        parse(&format!("{STRIPS}[experiment]\n{experiment}\n"))
    }

    fn err(experiment: &str) -> String {
        with(experiment).unwrap_err().to_string()
    }

    #[test]
    fn defaults_are_filled_in() {
        let s = with("kind = \"identity-check\"").err().unwrap().to_string();
        assert!(s.contains("admittivity.second"), "{s}");

        let s = parse("version = 1\n[experiment]\nkind = \"three-sphere\"\n").unwrap();
        assert_eq!(s.seed, 0);
        match s.experiment {
            Experiment::ThreeSphere { samples, max_degree, r } => assert_eq!((samples, max_degree, r), (200, 6, 1.0)),
            _ => unreachable!(),
        }
        let s = with("kind = \"asymptotics\"\nlink = 2").unwrap();
        match s.experiment {
            Experiment::Asymptotics { radii, .. } => assert_eq!(radii, [0.25, 0.125, 0.0625, 0.03125, 0.015625]),
            _ => unreachable!(),
        }
    }

    #[test]
    fn sweep_checks_pairs_and_depth() {
        assert!(err("kind = \"sweep\"").contains("`pairs` or `depth`"));
        let e = err("kind = \"sweep\"\ndepth = { background = [1.0, 0.0], perturbed = [9.0, 0.0] }");
        assert!(e.contains("experiment.depth.perturbed"), "{e}");
        let e = err("kind = \"sweep\"\npairs = [{ first = [[1.0, 0.0]], second = [[1.0, 0.0], [1.0, 0.0], [1.0, 0.0]] }]");
        assert!(e.contains("experiment.pairs[0].first"), "{e}");
        assert!(with("kind = \"sweep\"\nsupport = \"bottom\"\ndepth = { background = [1.0, 0.0], perturbed = [2.0, 0.0] }").is_ok());
    }

    #[test]
    fn bottom_support_needs_strips() {
        let disk = "version = 1\n[domain]\nkind = \"disk\"\n[mesh]\nh = 0.25\n[admittivity]\nlambda = 4.0\nvalues = [[1.0, 0.0]]\nsecond = [[2.0, 0.0]]\n";
        for exp in [
            "kind = \"dtn-norm\"\nsupport = \"bottom\"",
            "kind = \"sweep\"\nsupport = \"bottom\"\npairs = [{ first = [[1.0, 0.0]], second = [[2.0, 0.0]] }]",
        ] {
            let e = parse(&format!("{disk}[experiment]\n{exp}\n")).unwrap_err().to_string();
            assert!(e.contains("strips domain"), "{e}");
        }
        assert!(parse(&format!("{disk}[experiment]\nkind = \"dtn-norm\"\n")).is_ok());
    }

    #[test]
    fn per_experiment_ranges() {
        assert!(err("kind = \"asymptotics\"\nlink = 1").contains("interior interface"));
        assert!(err("kind = \"asymptotics\"\nlink = 2\nradii = [0.5]").contains("exceeds r0/4"));
        assert!(err("kind = \"constant-bound\"\nn = 2").contains("n ≥ 3"));
        assert!(err("kind = \"reconstruct\"\nnoise_levels = [-1.0]").contains("noise_levels"));
        assert!(err("kind = \"reconstruct\"\nguess = [[1.0, 0.0]]").contains("experiment.guess"));
        assert!(err("kind = \"three-sphere\"\nr = 0.0").contains("experiment.r"));
        assert!(err("kind = \"caccioppoli\"\nwaves = []").contains("waves"));
    }

    #[test]
    fn region_count_must_match_domain() {
        let text = STRIPS.replace("[[1.0, 0.0], [1.0, 0.0], [1.0, 0.0]]", "[[1.0, 0.0]]");
        let e = parse(&format!("{text}[experiment]\nkind = \"forward\"\ntrace = {{ kind = \"random\" }}\n")).unwrap_err();
        assert!(e.to_string().contains("admittivity.values"), "{e}");
    }
}
