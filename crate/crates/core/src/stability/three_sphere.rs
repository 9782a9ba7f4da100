//! Empirical three-sphere constant for planar harmonic polynomials on
//! radii `r, 3r, 4r`.

use std::f64::consts::TAU as TWO_PI;

use rand::Rng;

use super::tracker::tau;
use crate::{Error, Point, Result};

const CIRCLE_SAMPLES: usize = 4096;

/// `u = a_0 + Σ_m (a_m Re z^m + b_m Im z^m)` with `z = x − center`.
#[derive(Debug, Clone, PartialEq)]
pub struct HarmonicPolynomial {
    pub center: Point,
    /// `(a_m, b_m)` for `m = 0…deg`; `b_0` is ignored.
    pub coeffs: Vec<(f64, f64)>,
}

impl HarmonicPolynomial {
    pub fn new(center: Point, coeffs: Vec<(f64, f64)>) -> Self {
        Self { center, coeffs }
    }

    /// `Re (z − center)^m`.
    pub fn monomial(center: Point, m: usize) -> Self {
        let mut coeffs = vec![(0.0, 0.0); m + 1];
        coeffs[m].0 = 1.0;
        Self { center, coeffs }
    }

    /// Coefficients drawn uniformly from `[−1, 1]` with random degree in `1..=max_degree`.
    pub fn random<R: Rng + ?Sized>(center: Point, max_degree: usize, rng: &mut R) -> Self {
        let deg = rng.random_range(1..=max_degree.max(1));
        let coeffs = (0..=deg)
            .map(|_| (rng.random_range(-1.0..=1.0), rng.random_range(-1.0..=1.0)))
            .collect();
        Self { center, coeffs }
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    /// Value at polar offset `(ρ, θ)` from the center.
    pub fn eval_polar(&self, rho: f64, theta: f64) -> f64 {
        let mut v = self.coeffs.first().map_or(0.0, |c| c.0);
        let mut rm = 1.0;
        for (m, &(a, b)) in self.coeffs.iter().enumerate().skip(1) {
            rm *= rho;
            let (s, c) = (m as f64 * theta).sin_cos();
            v += rm * (a * c + b * s);
        }
        v
    }

    pub fn eval(&self, x: Point) -> f64 {
        let (dx, dy) = (x[0] - self.center[0], x[1] - self.center[1]);
        self.eval_polar(dx.hypot(dy), dy.atan2(dx))
    }

    /// `sup_{B_ρ} |u|`, attained on the circle. Grid sampling refined by golden-section search.
    pub fn sup_on_circle(&self, rho: f64) -> f64 {
        let f = |t: f64| self.eval_polar(rho, t).abs();
        let step = TWO_PI / CIRCLE_SAMPLES as f64;
        let (mut best_i, mut best) = (0, f(0.0));
        for i in 1..CIRCLE_SAMPLES {
            let v = f(i as f64 * step);
            if v > best {
                best = v;
                best_i = i;
            }
        }
        let phi = (5f64.sqrt() - 1.0) / 2.0;
        let (mut a, mut b) = ((best_i as f64 - 1.0) * step, (best_i as f64 + 1.0) * step);
        for _ in 0..60 {
            let c = b - phi * (b - a);
            let d = a + phi * (b - a);
            if f(c) > f(d) {
                b = d;
            } else {
                a = c;
            }
        }
        best.max(f(0.5 * (a + b)))
    }
}

/// `sup_{B_3r}|u| / (sup_{B_r}|u|^τ sup_{B_4r}|u|^{1−τ})`; `None` when `u ≡ 0` on `B_r`.
pub fn three_sphere_ratio(u: &HarmonicPolynomial, r: f64) -> Result<Option<f64>> {
    if !(r > 0.0) {
        return Err(Error::Range(format!("base radius must be positive, got {r}")));
    }
    let t = tau();
    let (s1, s3, s4) = (u.sup_on_circle(r), u.sup_on_circle(3.0 * r), u.sup_on_circle(4.0 * r));
    if s1 == 0.0 || s4 == 0.0 {
        return Ok(None);
    }
    Ok(Some(s3 / (s1.powf(t) * s4.powf(1.0 - t))))
}

/// Result of [`three_sphere_suite`].
#[derive(Debug, Clone, PartialEq)]
pub struct ThreeSphereSuite {
    pub ratios: Vec<f64>,
    pub skipped: usize,
    pub max_ratio: f64,
}

/// Ratios for `samples` random polynomials of degree `≤ max_degree`.
pub fn three_sphere_suite<R: Rng + ?Sized>(samples: usize, max_degree: usize, r: f64, rng: &mut R) -> Result<ThreeSphereSuite> {
    let mut ratios = Vec::with_capacity(samples);
    let mut skipped = 0;
    for _ in 0..samples {
        let u = HarmonicPolynomial::random([0.0, 0.0], max_degree, rng);
        match three_sphere_ratio(&u, r)? {
            Some(q) => ratios.push(q),
            None => skipped += 1,
        }
    }
    let max_ratio = ratios.iter().copied().fold(0.0, f64::max);
    Ok(ThreeSphereSuite { ratios, skipped, max_ratio })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn monomials_are_extremal() {
        for m in 0..8 {
            let u = HarmonicPolynomial::monomial([0.3, -0.2], m);
            let q = three_sphere_ratio(&u, 0.7).unwrap().unwrap();
            assert!((q - 1.0).abs() < 1e-12, "m = {m}: {q}");
        }
    }

    #[test]
    fn zero_is_skipped() {
        let u = HarmonicPolynomial::new([0.0, 0.0], vec![(0.0, 0.0); 3]);
        assert_eq!(three_sphere_ratio(&u, 1.0).unwrap(), None);
        assert!(three_sphere_ratio(&u, 0.0).is_err());
    }

    #[test]
    fn sup_matches_closed_form() {
        // u = x² − y² + 2xy = √2 ρ² cos(2θ − π/4).
        let u = HarmonicPolynomial::new([0.0, 0.0], vec![(0.0, 0.0), (0.0, 0.0), (1.0, 1.0)]);
        assert!((u.sup_on_circle(2.0) - 4.0 * 2f64.sqrt()).abs() < 1e-12);
        assert!((u.eval([1.0, 1.0]) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn random_suite_bounded() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let s = three_sphere_suite(200, 6, 1.0, &mut rng).unwrap();
        assert_eq!(s.ratios.len() + s.skipped, 200);
        assert!(s.max_ratio <= 1.5, "{}", s.max_ratio);
    }
}
