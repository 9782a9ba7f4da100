//! The logarithmic modulus `ω(t) = |ln t|^{−(n−2)/4}` (capped) and its compositions.

use crate::{Error, Result};

fn check_dim(n: usize) -> Result<f64> {
    if n < 3 {
        return Err(Error::UnsupportedDimension(n));
    }
    Ok((n as f64 - 2.0) / 4.0)
}

/// `n^{−(n−2)/4}`, the constant branch and supremum of `ω`.
pub fn omega_cap(n: usize) -> Result<f64> {
    let p = check_dim(n)?;
    Ok((n as f64).powf(-p))
}

/// `ω(t) = |ln t|^{−(n−2)/4}` for `0 < t ≤ e^{−n}`, `n^{−(n−2)/4}` above.
pub fn omega(t: f64, n: usize) -> Result<f64> {
    let p = check_dim(n)?;
    if !(t > 0.0) {
        return Err(Error::Range(format!("ω needs t > 0, got {t}")));
    }
    if t <= (-(n as f64)).exp() {
        Ok((-t.ln()).powf(-p))
    } else {
        Ok((n as f64).powf(-p))
    }
}

/// `ω` extended by `ω(0) = 0`, for recursions that reach zero data.
pub fn omega_or_zero(t: f64, n: usize) -> Result<f64> {
    if t == 0.0 {
        check_dim(n)?;
        Ok(0.0)
    } else {
        omega(t, n)
    }
}

/// Inverse of `ω` on its increasing branch: `exp(−y^{−4/(n−2)})` for `0 < y < n^{−(n−2)/4}`.
pub fn omega_inverse(y: f64, n: usize) -> Result<f64> {
    let p = check_dim(n)?;
    let cap = (n as f64).powf(-p);
    if !(y > 0.0 && y < cap) {
        return Err(Error::Range(format!(
            "ω⁻¹ is defined on (0, {cap}) for n = {n}, got {y}"
        )));
    }
    Ok((-y.powf(-1.0 / p)).exp())
}

/// `ω_k = ω ∘ … ∘ ω` (`k` times); `ω_0` is the identity.
pub fn omega_iterate(t: f64, k: usize, n: usize) -> Result<f64> {
    let mut v = t;
    for _ in 0..k {
        v = omega_or_zero(v, n)?;
    }
    Ok(v)
}
