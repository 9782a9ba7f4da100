//! Fundamental solutions in two and three dimensions.
//!
//! `Γ` is normalised with the sphere surface area so that `−ΔΓ(·, y) = δ_y`.
//! The two-phase solution handles `div((δ·1_{x_n<0} + γ·1_{x_n>0})∇·)` by
//! reflection across the interface `{x_n = 0}`:
//!
//! ```text
//! x_n > 0, y_n > 0 :  Γ/γ + s Γ(x, y*)
//! x_n y_n < 0      :  (1/γ + s) Γ = 2/(γ+δ) Γ
//! x_n < 0, y_n < 0 :  Γ/δ + t Γ(x, y*)
//! ```
//!
//! with `s = (γ−δ)/(γ(γ+δ))` and `t = (δ−γ)/(δ(γ+δ))`; the denominator of
//! `t` is the one that makes the normal flux continuous.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::{Error, Result};

fn check_dim<const D: usize>() -> Result<()> {
    if D == 2 || D == 3 {
        Ok(())
    } else {
        Err(Error::UnsupportedDimension(D))
    }
}

fn diff<const D: usize>(x: &[f64; D], y: &[f64; D]) -> [f64; D] {
    std::array::from_fn(|i| x[i] - y[i])
}

fn norm<const D: usize>(v: &[f64; D]) -> f64 {
    v.iter().map(|c| c * c).sum::<f64>().sqrt()
}

/// Laplace fundamental solution: `−ln|x−y|/(2π)` in 2D, `1/(4π|x−y|)` in 3D.
pub fn laplace_gamma<const D: usize>(x: &[f64; D], y: &[f64; D]) -> Result<f64> {
    check_dim::<D>()?;
    let r = norm(&diff(x, y));
    if r == 0.0 {
        return Err(Error::SingularPoint);
    }
    Ok(if D == 2 {
        -r.ln() / (2.0 * PI)
    } else {
        1.0 / (4.0 * PI * r)
    })
}

/// `∇_x Γ(x, y)`.
pub fn laplace_gamma_grad<const D: usize>(x: &[f64; D], y: &[f64; D]) -> Result<[f64; D]> {
    check_dim::<D>()?;
    let d = diff(x, y);
    let r = norm(&d);
    if r == 0.0 {
        return Err(Error::SingularPoint);
    }
    let c = if D == 2 {
        -1.0 / (2.0 * PI * r * r)
    } else {
        -1.0 / (4.0 * PI * r * r * r)
    };
    Ok(d.map(|v| c * v))
}

/// Coefficients of the two-phase fundamental solution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoPhaseCoeffs {
    /// Coefficient on `{x_n > 0}`.
    pub gamma_plus: Complex64,
    /// Coefficient on `{x_n < 0}`.
    pub gamma_minus: Complex64,
    pub s: Complex64,
    pub t: Complex64,
}

impl TwoPhaseCoeffs {
    pub fn new(gamma_plus: Complex64, gamma_minus: Complex64) -> Result<Self> {
        let sum = gamma_plus + gamma_minus;
        if gamma_plus.norm() == 0.0 || gamma_minus.norm() == 0.0 || sum.norm() == 0.0 {
            return Err(Error::InvalidArgument(format!(
                "two-phase coefficients need γ, δ, γ+δ nonzero (γ = {gamma_plus}, δ = {gamma_minus})"
            )));
        }
        Ok(Self {
            gamma_plus,
            gamma_minus,
            s: (gamma_plus - gamma_minus) / (gamma_plus * sum),
            t: (gamma_minus - gamma_plus) / (gamma_minus * sum),
        })
    }

    /// Coefficient of `Γ` on the cross-interface branch, `2/(γ+δ)`.
    pub fn cross(&self) -> Complex64 {
        if self.gamma_plus == self.gamma_minus {
            return 1.0 / self.gamma_plus;
        }
        2.0 / (self.gamma_plus + self.gamma_minus)
    }

    pub fn coefficient(&self, side: Side) -> Complex64 {
        match side {
            Side::Upper => self.gamma_plus,
            Side::Lower => self.gamma_minus,
        }
    }
}

/// Half-space relative to the interface `{x_n = 0}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Upper,
    Lower,
}

impl Side {
    /// Side of a point; points on the interface count as upper.
    pub fn of<const D: usize>(p: &[f64; D]) -> Self {
        if p[D - 1] < 0.0 {
            Side::Lower
        } else {
            Side::Upper
        }
    }
}

fn reflect<const D: usize>(y: &[f64; D]) -> [f64; D] {
    let mut r = *y;
    r[D - 1] = -r[D - 1];
    r
}

/// Branch value of `Γ_{γ,δ}(x, y)` assuming `x` lies on `side` (used for one-sided limits).
pub fn two_phase_branch<const D: usize>(
    x: &[f64; D],
    y: &[f64; D],
    c: &TwoPhaseCoeffs,
    side: Side,
) -> Result<Complex64> {
    let ys = Side::of(y);
    let g = laplace_gamma(x, y)?;
    Ok(match (side, ys) {
        (Side::Upper, Side::Upper) => (1.0 / c.gamma_plus) * g + c.s * laplace_gamma(x, &reflect(y))?,
        (Side::Lower, Side::Lower) => (1.0 / c.gamma_minus) * g + c.t * laplace_gamma(x, &reflect(y))?,
        _ => c.cross() * g,
    })
}

/// Branch gradient `∇_x Γ_{γ,δ}(x, y)` assuming `x` lies on `side`.
pub fn two_phase_branch_grad<const D: usize>(
    x: &[f64; D],
    y: &[f64; D],
    c: &TwoPhaseCoeffs,
    side: Side,
) -> Result<[Complex64; D]> {
    let ys = Side::of(y);
    let g = laplace_gamma_grad(x, y)?;
    let combine = |a: Complex64, b: Complex64, gs: [f64; D]| -> [Complex64; D] {
        std::array::from_fn(|i| a * g[i] + b * gs[i])
    };
    Ok(match (side, ys) {
        (Side::Upper, Side::Upper) => combine(
            1.0 / c.gamma_plus,
            c.s,
            laplace_gamma_grad(x, &reflect(y))?,
        ),
        (Side::Lower, Side::Lower) => combine(
            1.0 / c.gamma_minus,
            c.t,
            laplace_gamma_grad(x, &reflect(y))?,
        ),
        _ => g.map(|v| c.cross() * v),
    })
}

/// `Γ_{γ,δ}(x, y)`. On the interface both adjacent branches agree, so
/// `x_n = 0` is evaluated on the side of `y`.
pub fn two_phase_gamma<const D: usize>(
    x: &[f64; D],
    y: &[f64; D],
    c: &TwoPhaseCoeffs,
) -> Result<Complex64> {
    let side = if x[D - 1] == 0.0 { Side::of(y) } else { Side::of(x) };
    two_phase_branch(x, y, c, side)
}

/// `∇_x Γ_{γ,δ}(x, y)`; on the interface the gradient of `y`'s side is returned.
pub fn two_phase_gamma_grad<const D: usize>(
    x: &[f64; D],
    y: &[f64; D],
    c: &TwoPhaseCoeffs,
) -> Result<[Complex64; D]> {
    let side = if x[D - 1] == 0.0 { Side::of(y) } else { Side::of(x) };
    two_phase_branch_grad(x, y, c, side)
}

/// Largest value jump and flux jump `|γ ∂_n u⁺ − δ ∂_n u⁻|` over interface samples.
pub fn transmission_residual<const D: usize>(
    c: &TwoPhaseCoeffs,
    y: &[f64; D],
    samples: &[[f64; D]],
) -> Result<(f64, f64)> {
    if y[D - 1] == 0.0 {
        return Err(Error::InvalidArgument("source lies on the interface".into()));
    }
    let mut value_jump = 0.0f64;
    let mut flux_jump = 0.0f64;
    for x in samples {
        if x[D - 1] != 0.0 {
            return Err(Error::InvalidArgument(format!(
                "sample {x:?} is not on the interface"
            )));
        }
        let up = two_phase_branch(x, y, c, Side::Upper)?;
        let lo = two_phase_branch(x, y, c, Side::Lower)?;
        value_jump = value_jump.max((up - lo).norm());
        let gu = two_phase_branch_grad(x, y, c, Side::Upper)?;
        let gl = two_phase_branch_grad(x, y, c, Side::Lower)?;
        let flux = c.gamma_plus * gu[D - 1] - c.gamma_minus * gl[D - 1];
        flux_jump = flux_jump.max(flux.norm());
    }
    Ok((value_jump, flux_jump))
}
