//! Spherical Bessel functions of the first and second kind for real argument.

use crate::error::{Error, Result};

/// `j_0(x), …, j_nmax(x)` by downward (Miller) recurrence, normalized with
/// `Σ (2n+1) j_n² = 1`.
pub fn spherical_jn(nmax: usize, x: f64) -> Result<Vec<f64>> {
    if !(x > 0.0 && x.is_finite()) {
        return Err(Error::InvalidInput(format!("spherical Bessel argument must be positive, got {x}")));
    }
    let start = nmax.max(x.ceil() as usize) + 40 + (x.sqrt() * 4.0) as usize;
    let mut j = vec![0.0; start + 2];
    j[start] = 1.0;
    for n in (1..=start).rev() {
        j[n - 1] = (2 * n + 1) as f64 / x * j[n] - j[n + 1];
        if j[n - 1].abs() > 1e150 {
            for v in &mut j[n - 1..] {
                *v *= 1e-150;
            }
        }
    }
    let sum: f64 = j.iter().enumerate().map(|(n, v)| (2 * n + 1) as f64 * v * v).sum();
    let scale = 1.0 / sum.sqrt();
    // Fix the overall sign with j_0 = sin x / x where that is well conditioned.
    let j0 = x.sin() / x;
    let sign = if j0.abs() > 1e-3 {
        (j0 * j[0]).signum()
    } else {
        let j1 = x.sin() / (x * x) - x.cos() / x;
        (j1 * j[1]).signum()
    };
    j.truncate(nmax + 1);
    for v in &mut j {
        *v *= scale * sign;
    }
    Ok(j)
}

/// `y_0(x), …, y_nmax(x)` by upward recurrence.
pub fn spherical_yn(nmax: usize, x: f64) -> Result<Vec<f64>> {
    if !(x > 0.0 && x.is_finite()) {
        return Err(Error::InvalidInput(format!("spherical Bessel argument must be positive, got {x}")));
    }
    let mut y = Vec::with_capacity(nmax + 1);
    y.push(-x.cos() / x);
    if nmax >= 1 {
        y.push(-x.cos() / (x * x) - x.sin() / x);
    }
    for n in 1..nmax {
        let next = (2 * n + 1) as f64 / x * y[n] - y[n - 1];
        if !next.is_finite() {
            return Err(Error::BesselOverflow { order: n + 1, argument: x });
        }
        y.push(next);
    }
    Ok(y)
}
