//! Static experiment catalog for `eitlab list`.

use serde::Serialize;

#[derive(Debug, Clone, Serialize)]
pub struct Parameter {
    pub name: &'static str,
    #[serde(rename = "type")]
    pub ty: &'static str,
    pub default: Option<&'static str>,
    pub description: &'static str,
}

#[derive(Debug, Clone, Serialize)]
pub struct Entry {
    pub kind: &'static str,
    pub summary: &'static str,
    /// The property of the model the experiment exercises.
    pub anchor: &'static str,
    pub needs: &'static [&'static str],
    pub outputs: &'static [&'static str],
    pub parameters: Vec<Parameter>,
}

const fn p(name: &'static str, ty: &'static str, default: Option<&'static str>, description: &'static str) -> Parameter {
    Parameter { name, ty, default, description }
}

const MESHED: &[&str] = &["domain", "mesh", "admittivity"];

pub fn catalog() -> Vec<Entry> {
    vec![
        Entry {
            kind: "forward",
            summary: "Solve the Dirichlet problem for one boundary trace",
            anchor: "forward problem div(γ∇u) = 0 with complex piecewise-constant γ",
            needs: MESHED,
            outputs: &["solution.csv"],
            parameters: vec![
                p("trace", "table {kind = linear|plane-wave|random, ...}", None, "boundary datum"),
                p("formulation", "complex|real", Some("complex"), "complex scalar system or real 2x2 system"),
            ],
        },
        Entry {
            kind: "dtn-norm",
            summary: "DtN matrix of the first admittivity and the norm of the difference to the second",
            anchor: "Dirichlet-to-Neumann map and its H^1/2 -> H^-1/2 operator norm",
            needs: MESHED,
            outputs: &["dtn.csv", "boundary_mass.csv", "boundary_stiffness.csv", "norm.csv"],
            parameters: vec![p("support", "full|bottom", Some("full"), "boundary data used (bottom: local map on the bottom edge)")],
        },
        Entry {
            kind: "identity-check",
            summary: "Both sides of the interior/boundary identity for random traces",
            anchor: "Alessandrini identity ∫(γ1−γ2)∇u1·∇u2 = <(Λ1−Λ2)f2, f1>",
            needs: MESHED,
            outputs: &["identity.csv"],
            parameters: vec![p("traces", "integer", Some("3"), "number of random trace pairs")],
        },
        Entry {
            kind: "asymptotics",
            summary: "Deviation of the singular solution from the scaled fundamental solution near an interface",
            anchor: "singular-solution asymptotics near a flat interface",
            needs: MESHED,
            outputs: &["asymptotics.csv"],
            parameters: vec![
                p("link", "integer", None, "interface index (≥ 2)"),
                p("radii", "list of reals (units of r0)", Some("[2^-2, ..., 2^-6]"), "distances of the probe points from the interface"),
            ],
        },
        Entry {
            kind: "s-rate",
            summary: "Half-space probe integral in three dimensions and its log-log rate",
            anchor: "probe blow-up rate r^(2−n) for a coefficient jump",
            needs: &[],
            outputs: &["s_rate.csv"],
            parameters: vec![
                p("gamma_plus_1", "[re, im]", None, "upper value, first medium"),
                p("gamma_plus_2", "[re, im]", None, "upper value, second medium"),
                p("gamma_minus", "[re, im]", None, "common lower value"),
                p("rho0", "real", Some("1.0"), "integration radius"),
                p("radii", "list of reals", Some("[2^-3, ..., 2^-7]"), "source depths"),
            ],
        },
        Entry {
            kind: "reconstruct",
            summary: "Projected Gauss-Newton recovery of the region values from a synthetic DtN map",
            anchor: "Lipschitz stability of the finite-dimensional inverse problem",
            needs: MESHED,
            outputs: &["reconstruction.csv", "noise.csv"],
            parameters: vec![
                p("guess", "list of [re, im]", Some("all ones"), "starting admittivity"),
                p("noise_levels", "list of reals", Some("[1e-4, 1e-3, 1e-2]"), "weighted noise norms"),
                p("noise", "worst-case|random", Some("worst-case"), "noise direction"),
                p("max_iter", "integer", Some("30"), "Gauss-Newton iteration cap"),
            ],
        },
        Entry {
            kind: "constant-bound",
            summary: "Theoretical stability constant in log space and the δ_k recursion",
            anchor: "modulus ω(t) = |ln t|^(−(n−2)/4) and the bound 1/(2 ω_N^-1(1/(2(C+1)^N)))",
            needs: &[],
            outputs: &["constant_bound.csv", "recursion.csv"],
            parameters: vec![
                p("n", "integer ≥ 3", Some("3"), "space dimension"),
                p("c_base", "real", Some("1.0"), "base constant C"),
                p("regions", "list of integers", Some("[1, ..., 6]"), "region counts N"),
                p("recursion", "table {eps, e, chain}", None, "optional δ_k table"),
            ],
        },
        Entry {
            kind: "sweep",
            summary: "E = max|γ1−γ2| against ε = ||Λ1−Λ2|| over admittivity pairs",
            anchor: "Lipschitz stability estimate ||γ1−γ2|| ≤ C ||Λ1−Λ2||",
            needs: MESHED,
            outputs: &["sweep.csv"],
            parameters: vec![
                p("pairs", "list of {first, second}", Some("[]"), "explicit pairs"),
                p("depth", "table {background, perturbed}", None, "one pair per strip with the perturbation on that strip"),
                p("support", "full|bottom", Some("full"), "boundary data used"),
            ],
        },
        Entry {
            kind: "three-sphere",
            summary: "Empirical three-sphere constant for random harmonic polynomials",
            anchor: "three-sphere inequality with exponent τ = ln(4/3)/ln 4",
            needs: &[],
            outputs: &["three_sphere.csv"],
            parameters: vec![
                p("samples", "integer", Some("200"), "number of random polynomials"),
                p("max_degree", "integer", Some("6"), "largest degree"),
                p("r", "real", Some("1.0"), "base radius"),
            ],
        },
        Entry {
            kind: "caccioppoli",
            summary: "Caccioppoli ratios for plane-wave data on one ball per strip",
            anchor: "Caccioppoli inequality (R−ρ)² ∫_{B_ρ}|∇u|² ≤ C ∫_{B_R}|u|²",
            needs: MESHED,
            outputs: &["caccioppoli.csv"],
            parameters: vec![p("waves", "list of [kx, ky]", Some("4 fixed waves"), "plane-wave vectors of the data")],
        },
    ]
}

/// Human-readable listing.
pub fn render(entries: &[Entry]) -> String {
    let mut out = String::new();
    for e in entries {
        out.push_str(&format!("{}\n  {}\n  property: {}\n", e.kind, e.summary, e.anchor));
        if !e.needs.is_empty() {
            out.push_str(&format!("  needs: {}\n", e.needs.join(", ")));
        }
        out.push_str(&format!("  outputs: {}\n", e.outputs.join(", ")));
        for p in &e.parameters {
            let d = p.default.map(|d| format!(" (default {d})")).unwrap_or_default();
            out.push_str(&format!("  - {}: {}{d}: {}\n", p.name, p.ty, p.description));
        }
        out.push('\n');
    }
    out
}
