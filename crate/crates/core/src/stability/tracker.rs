//! Constant bookkeeping for the chain argument: `δ_k` recursion and the final
//! Lipschitz bound `1 / (2 ω_N⁻¹(1/(2(C+1)^N)))`, evaluated in log space.

use std::cmp::Ordering;
use std::f64::consts::{LN_10, LN_2, PI};
use std::fmt;

use super::modulus::{omega_cap, omega_iterate, omega_or_zero};
use crate::{Error, Result};

/// Three-sphere exponent `τ = ln(4/3) / ln 4`, so that `4^{1−τ} = 3`.
pub fn tau() -> f64 {
    (4.0f64 / 3.0).ln() / 4.0f64.ln()
}

/// Radius-dependent exponent `ln((3r₁−r)/(3r₁−2r)) / ln((3r₁−r)/r₁)` for `0 < r < r₁`.
pub fn tau_r(r1: f64, r: f64) -> Result<f64> {
    if !(r > 0.0 && r < r1) {
        return Err(Error::Range(format!("τ_r needs 0 < r < r₁, got r = {r}, r₁ = {r1}")));
    }
    Ok(((3.0 * r1 - r) / (3.0 * r1 - 2.0 * r)).ln() / ((3.0 * r1 - r) / r1).ln())
}

/// Volume of the unit ball in `n` dimensions.
pub fn unit_ball_volume(n: usize) -> f64 {
    let h = n as f64 / 2.0;
    PI.powf(h) / gamma_fn(h + 1.0)
}

fn gamma_fn(x: f64) -> f64 {
    // x is a positive integer or half-integer here.
    if (x - 0.5).abs() < 1e-12 {
        PI.sqrt()
    } else if (x - 1.0).abs() < 1e-12 {
        1.0
    } else {
        (x - 1.0) * gamma_fn(x - 1.0)
    }
}

/// Inputs of the constant calculus. `C`, `N1`, `δ1` are not quantified by
/// the theory and are explicit knobs.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstantTracker {
    pub n: usize,
    pub c_base: f64,
    pub n1: f64,
    pub delta1: f64,
    pub tau: f64,
    pub tau_r: f64,
    pub r1: f64,
    pub r0: f64,
}

impl ConstantTracker {
    /// Defaults: `N1 = |Ω| / (c_n r₁ⁿ) + 1` with `c_n` the unit-ball volume,
    /// `δ1 = 1/2`, `τ_r` at radius `r`.
    pub fn new(n: usize, c_base: f64, domain_measure: f64, r0: f64, r1: f64, r: f64) -> Result<Self> {
        omega_cap(n)?;
        if !(c_base > 0.0) {
            return Err(Error::InvalidArgument(format!("base constant C = {c_base} must be positive")));
        }
        if !(r1 > 0.0 && r0 > 0.0 && domain_measure > 0.0) {
            return Err(Error::InvalidArgument("radii and domain measure must be positive".into()));
        }
        let t = Self {
            n,
            c_base,
            n1: domain_measure / (unit_ball_volume(n) * r1.powi(n as i32)) + 1.0,
            delta1: 0.5,
            tau: tau(),
            tau_r: tau_r(r1, r)?,
            r1,
            r0,
        };
        t.validate()?;
        Ok(t)
    }

    /// Tracker that only carries `n` and `C` (enough for the final bound).
    pub fn basic(n: usize, c_base: f64) -> Result<Self> {
        Self::new(n, c_base, 1.0, 1.0, 0.5, 0.25)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("τ", self.tau), ("δ1", self.delta1), ("τ_r", self.tau_r)] {
            if !(v > 0.0 && v < 1.0) {
                return Err(Error::InvalidArgument(format!("{name} = {v} must lie in (0, 1)")));
            }
        }
        if !(self.n1 >= 1.0) {
            return Err(Error::InvalidArgument(format!("N1 = {} must be at least 1", self.n1)));
        }
        Ok(())
    }

    /// `μ = τ^{(k+1)N1} δ1^{k+1} τ_r`.
    pub fn mu(&self, k: usize) -> f64 {
        let k1 = (k + 1) as f64;
        self.tau.powf(k1 * self.n1) * self.delta1.powf(k1) * self.tau_r
    }
}

/// Iterated exponential `exp^height(top)`. Canonical when `height = 0`, or
/// `height ≥ 1` with `top ∈ (ln 700, 700]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tower {
    pub height: u32,
    pub top: f64,
}

const EXP_LIMIT: f64 = 700.0;

impl Tower {
    pub fn value(v: f64) -> Self {
        Self { height: 0, top: v }.canonical()
    }

    fn canonical(mut self) -> Self {
        while self.height == 0 && self.top > EXP_LIMIT {
            self = Self {
                height: 1,
                top: self.top.ln(),
            };
        }
        while self.height > 0 && self.top <= EXP_LIMIT.ln() {
            self = Self {
                height: self.height - 1,
                top: self.top.exp(),
            };
        }
        self
    }

    /// `exp(self)`.
    pub fn exp(self) -> Self {
        if self.height == 0 && self.top <= EXP_LIMIT {
            Self::value(self.top.exp())
        } else {
            Self {
                height: self.height + 1,
                top: self.top,
            }
            .canonical()
        }
    }

    /// `c · self` for `c > 0`; exact up to double rounding at every height.
    pub fn scale(self, c: f64) -> Self {
        match self.height {
            0 => Self::value(self.top * c),
            1 => Self {
                height: 1,
                top: self.top + c.ln(),
            }
            .canonical(),
            // exp(exp(x)) · c = exp(exp(x) + ln c) and ln c is below one ulp of exp(x).
            _ => self,
        }
    }

    /// `self − d` for `0 ≤ d ≪ self`; exact at height 0, unchanged above.
    pub fn minus(self, d: f64) -> Self {
        if self.height == 0 {
            Self::value(self.top - d)
        } else {
            self
        }
    }

    /// Finite `f64` value when representable.
    pub fn as_f64(self) -> Option<f64> {
        (self.height == 0).then_some(self.top)
    }
}

impl PartialOrd for Tower {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        match self.height.cmp(&other.height) {
            Ordering::Equal => self.top.partial_cmp(&other.top),
            o => Some(o),
        }
    }
}

impl fmt::Display for Tower {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.height == 0 {
            write!(f, "{}", self.top)
        } else {
            write!(f, "exp^{}({})", self.height, self.top)
        }
    }
}

/// The final bound, stored as `ln bound`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LipschitzBound {
    pub ln_bound: Tower,
}

impl LipschitzBound {
    /// `log10` of the bound when it fits in an `f64`.
    pub fn log10(&self) -> Option<f64> {
        self.ln_bound.as_f64().map(|v| v / LN_10)
    }

    /// The bound itself when it fits in an `f64`.
    pub fn value(&self) -> Option<f64> {
        self.ln_bound
            .as_f64()
            .map(f64::exp)
            .filter(|v| v.is_finite())
    }

    /// `log10 log10 bound`, finite for any representable tower of height ≤ 1.
    pub fn log10_log10(&self) -> Option<f64> {
        let l = self.ln_bound;
        match l.height {
            0 => (l.top > 0.0).then(|| (l.top / LN_10).log10()),
            1 => Some((l.top - LN_10.ln()) / LN_10),
            _ => None,
        }
    }
}

impl fmt::Display for LipschitzBound {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.log10() {
            Some(v) => write!(f, "10^{v:.4}"),
            None => write!(f, "exp({})", self.ln_bound),
        }
    }
}

/// `1 / (2 ω_N⁻¹(1/(2(C+1)^N)))` in log space.
///
/// With `L₀ = −ln y`, `y = 1/(2(C+1)^N)`, each inverse step maps
/// `L ↦ exp(4L/(n−2))`, and `ln bound = L_N − ln 2`.
pub fn constant_bound(regions: usize, tracker: &ConstantTracker) -> Result<LipschitzBound> {
    if regions == 0 {
        return Err(Error::InvalidArgument("region count must be at least 1".into()));
    }
    let n = tracker.n;
    let cap = omega_cap(n)?;
    let c = tracker.c_base;
    let ln_y = -LN_2 - regions as f64 * c.ln_1p();
    if !(ln_y < cap.ln()) {
        return Err(Error::Range(format!(
            "1/(2(C+1)^N) = {} is outside the invertible branch (0, {cap}) of ω",
            ln_y.exp()
        )));
    }
    let a = 4.0 / (n as f64 - 2.0);
    let mut l = Tower::value(-ln_y);
    for _ in 0..regions {
        l = l.scale(a).exp();
    }
    Ok(LipschitzBound {
        ln_bound: l.minus(LN_2),
    })
}

/// Output of [`delta_recursion`].
#[derive(Debug, Clone, PartialEq)]
pub struct DeltaRecursion {
    /// `δ_0 = 0, δ_1, …, δ_M` iterated with equality.
    pub deltas: Vec<f64>,
    /// `(C+1)^k (E+ε) ω_k(ε/(ε+E))` for `k = 0…M`.
    pub closed_form: Vec<f64>,
}

impl DeltaRecursion {
    /// `(C+1)^M (E+ε) ω_M(ε/(ε+E))`.
    pub fn final_bound(&self) -> f64 {
        *self.closed_form.last().expect("non-empty")
    }
}

/// Iterates `δ_k = C (ε+δ_{k−1}+E) ω((ε+δ_{k−1})/(ε+δ_{k−1}+E))` from `δ_0 = 0`.
pub fn delta_recursion(eps: f64, e: f64, c: f64, m: usize, n: usize) -> Result<DeltaRecursion> {
    omega_cap(n)?;
    if !(eps >= 0.0 && e >= 0.0) || !eps.is_finite() || !e.is_finite() {
        return Err(Error::InvalidArgument(format!("need ε, E ≥ 0, got ε = {eps}, E = {e}")));
    }
    if !(c > 0.0) {
        return Err(Error::InvalidArgument(format!("base constant C = {c} must be positive")));
    }
    let mut deltas = vec![0.0];
    let mut closed_form = vec![e + eps];
    if eps == 0.0 && e == 0.0 {
        return Ok(DeltaRecursion {
            deltas: vec![0.0; m + 1],
            closed_form: vec![0.0; m + 1],
        });
    }
    let ratio = eps / (eps + e);
    for k in 1..=m {
        let prev = deltas[k - 1];
        let s = eps + prev + e;
        deltas.push(c * s * omega_or_zero((eps + prev) / s, n)?);
        closed_form.push((c + 1.0).powi(k as i32) * (e + eps) * omega_iterate(ratio, k, n)?);
    }
    Ok(DeltaRecursion { deltas, closed_form })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn tau_identity() {
        assert!((4f64.powf(1.0 - tau()) - 3.0).abs() < 1e-12);
        let t = tau_r(1.0, 0.5).unwrap();
        assert!(t > 0.0 && t < 1.0);
        assert!(tau_r(1.0, 1.0).is_err());
    }

    #[test]
    fn ball_volumes() {
        assert!((unit_ball_volume(2) - PI).abs() < 1e-14);
        assert!((unit_ball_volume(3) - 4.0 * PI / 3.0).abs() < 1e-14);
    }

    #[test]
    fn tracker_defaults() {
        let t = ConstantTracker::new(3, 1.0, 1.0, 1.0, 0.25, 0.1).unwrap();
        let expect = 1.0 / (4.0 * PI / 3.0 * 0.25f64.powi(3)) + 1.0;
        assert!((t.n1 - expect).abs() < 1e-12);
        assert_eq!(t.delta1, 0.5);
        for k in 0..4 {
            let mu = t.mu(k);
            assert!(mu > 0.0 && mu < 1.0);
        }
        assert!(ConstantTracker::new(2, 1.0, 1.0, 1.0, 0.25, 0.1).is_err());
    }

    #[test]
    fn single_region_closed_form() {
        let b = constant_bound(1, &ConstantTracker::basic(3, 1.0).unwrap()).unwrap();
        let expect = (256.0 - LN_2) / LN_10;
        assert!((b.log10().unwrap() - expect).abs() < 1e-10);
        assert!((b.log10().unwrap() - 110.88).abs() < 0.01);
    }

    #[test]
    fn small_c_limit() {
        let b = constant_bound(1, &ConstantTracker::basic(3, 1e-12).unwrap()).unwrap();
        // 1/(2 ω⁻¹(1/2)) = e^16 / 2.
        assert!((b.value().unwrap() / (16f64.exp() / 2.0) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn bound_grows_with_regions() {
        let t = ConstantTracker::basic(3, 1.0).unwrap();
        let bounds: Vec<Tower> = (1..=6).map(|n| constant_bound(n, &t).unwrap().ln_bound).collect();
        for w in bounds.windows(2) {
            assert!(w[1] > w[0], "{} !> {}", w[1], w[0]);
            assert!(w[1] >= w[0].scale(2.0));
        }
    }

    #[test]
    fn tower_arithmetic() {
        let t = Tower::value(800.0);
        assert_eq!(t.height, 1);
        assert!((t.top - 800f64.ln()).abs() < 1e-12);
        assert_eq!(Tower::value(5.0).exp(), Tower::value(5f64.exp()));
        let big = Tower::value(300.0).exp().exp();
        assert_eq!(big.height, 2);
        assert!(big > Tower::value(1e300));
        let s = Tower { height: 1, top: 10.0 }.scale(3.0);
        assert!((s.top - (10.0 + 3f64.ln())).abs() < 1e-12);
    }

    #[test]
    fn recursion_edge_cases() {
        let r = delta_recursion(0.0, 1.0, 2.0, 4, 3).unwrap();
        assert!(r.deltas.iter().all(|&d| d == 0.0));
        assert_eq!(r.final_bound(), 0.0);
        let z = delta_recursion(0.0, 0.0, 2.0, 3, 3).unwrap();
        assert_eq!(z.deltas, vec![0.0; 4]);
        // E = 0: δ_k + ε ≤ (C+1)^k ε.
        let (eps, c) = (1e-3, 2.0);
        let r = delta_recursion(eps, 0.0, c, 5, 3).unwrap();
        for (k, d) in r.deltas.iter().enumerate() {
            assert!(d + eps <= (c + 1.0).powi(k as i32) * eps * (1.0 + 1e-12));
        }
        assert!(r.deltas.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn closed_form_is_not_an_equality() {
        // Saturated ω (ε ≳ E): the recursion exceeds the closed form.
        let r = delta_recursion(1.0, 0.1, 1.0, 1, 3).unwrap();
        assert!(r.deltas[1] + 1.0 > r.closed_form[1]);
    }

    proptest! {
        // Unsaturated regime ε ≤ e^{−n} E: the closed form majorises δ_k + ε.
        #[test]
        fn closed_form_majorises(lc in -3.0f64..2.0, le in -6.0f64..3.0, lr in -12.0f64..0.0, n in 3usize..6) {
            let c = 10f64.powf(lc);
            let e = 10f64.powf(le);
            let eps = e * (-(n as f64)).exp() * 10f64.powf(lr);
            let r = delta_recursion(eps, e, c, 8, n).unwrap();
            for k in 0..=8 {
                prop_assert!(r.deltas[k] + eps <= r.closed_form[k] * (1.0 + 1e-12));
            }
        }

        #[test]
        fn final_bound_monotone(le in -6.0f64..2.0, lr in -10.0f64..1.0, lc in -2.0f64..1.0, m in 1usize..5, bump in 1.0f64..3.0) {
            let e = 10f64.powf(le);
            let eps = e * 10f64.powf(lr);
            let c = 10f64.powf(lc);
            let f = |eps: f64, e: f64, c: f64, m: usize| delta_recursion(eps, e, c, m, 3).unwrap().final_bound();
            let base = f(eps, e, c, m);
            let tol = 1.0 + 1e-12;
            prop_assert!(f(eps * bump, e, c, m) * tol >= base);
            prop_assert!(f(eps, e * bump, c, m) * tol >= base);
            prop_assert!(f(eps, e, c * bump, m) * tol >= base);
            prop_assert!(f(eps, e, c, m + 1) * tol >= base);
        }
    }
}
