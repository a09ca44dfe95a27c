//! Helmholtz and Yukawa fundamental solutions, their gradients and the
//! smooth difference kernel `G_κ − G_{iκ′}`.

use crate::error::{Error, Result};
use crate::geom::{CVec3, Vec3};
use num_complex::Complex64;
use std::f64::consts::PI;

const FOUR_PI: f64 = 4.0 * PI;

/// Physical wavenumber `kappa` and the imaginary-axis parameter `kappa_prime`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Wavenumber {
    pub kappa: f64,
    pub kappa_prime: f64,
}

impl Wavenumber {
    pub fn new(kappa: f64, kappa_prime: f64) -> Result<Self> {
        if !(kappa > 0.0 && kappa.is_finite() && kappa_prime > 0.0 && kappa_prime.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "wavenumbers must be positive and finite (kappa={kappa}, kappa_prime={kappa_prime})"
            )));
        }
        Ok(Self { kappa, kappa_prime })
    }
}

/// Nonzero real coupling parameter η.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CouplingParameter(f64);

impl CouplingParameter {
    pub fn new(eta: f64) -> Result<Self> {
        if eta == 0.0 || !eta.is_finite() {
            return Err(Error::InvalidInput(format!("coupling parameter must be nonzero and finite, got {eta}")));
        }
        Ok(Self(eta))
    }

    pub fn eta(self) -> f64 {
        self.0
    }
}

/// `exp(iσ r) / (4π r)` for a complex wavenumber σ.
pub fn green(sigma: Complex64, x: Vec3, y: Vec3) -> Result<Complex64> {
    let r = (x - y).norm();
    if r == 0.0 {
        return Err(Error::Singularity);
    }
    Ok((Complex64::i() * sigma * r).exp() / (FOUR_PI * r))
}

/// `∇_x G_σ(x, y) = G_σ (iσ − 1/r) (x − y)/r`.
pub fn green_gradient_x(sigma: Complex64, x: Vec3, y: Vec3) -> Result<CVec3> {
    let d = x - y;
    let r = d.norm();
    if r == 0.0 {
        return Err(Error::Singularity);
    }
    let g = (Complex64::i() * sigma * r).exp() / (FOUR_PI * r);
    let f = g * (Complex64::i() * sigma - 1.0 / r) / r;
    Ok(d.to_complex().scale(f))
}

/// Yukawa kernel `exp(−κ′ r)/(4π r)`.
#[inline]
pub fn yukawa(kappa_prime: f64, r: f64) -> f64 {
    (-kappa_prime * r).exp() / (FOUR_PI * r)
}

/// Scalar `h` with `∇_x G_{iκ′} = h (x − y)`.
#[inline]
pub fn yukawa_grad_factor(kappa_prime: f64, r: f64) -> f64 {
    -(-kappa_prime * r).exp() * (kappa_prime * r + 1.0) / (FOUR_PI * r * r * r)
}

/// Helmholtz kernel `exp(iκ r)/(4π r)` for real κ.
#[inline]
pub fn helmholtz(kappa: f64, r: f64) -> Complex64 {
    let (s, c) = (kappa * r).sin_cos();
    Complex64::new(c, s) / (FOUR_PI * r)
}

/// Scalar `h` with `∇_x G_κ = h (x − y)`.
#[inline]
pub fn helmholtz_grad_factor(kappa: f64, r: f64) -> Complex64 {
    let (s, c) = (kappa * r).sin_cos();
    Complex64::new(c, s) * Complex64::new(-1.0, kappa * r) / (FOUR_PI * r * r * r)
}

/// `G_κ − G_{iκ′}` as a function of the distance, stable down to r = 0.
#[inline]
pub fn difference(kappa: f64, kappa_prime: f64, r: f64) -> Complex64 {
    let scale = kappa.max(kappa_prime);
    if r * scale < 1e-6 {
        let k2 = kappa * kappa + kappa_prime * kappa_prime;
        let third = Complex64::new(kappa_prime.powi(3), -kappa.powi(3));
        return (Complex64::new(kappa_prime, kappa) - 0.5 * k2 * r + third * (r * r / 6.0)) / FOUR_PI;
    }
    let (s, _) = (kappa * r).sin_cos();
    let half = (0.5 * kappa * r).sin();
    let num = Complex64::new(-2.0 * half * half - (-kappa_prime * r).exp_m1(), s);
    num / (FOUR_PI * r)
}

/// `e^z (z − 1) + 1`, accurate for small |z|.
#[inline]
fn g_aux(z: Complex64) -> Complex64 {
    if z.norm() < 0.5 {
        // Σ_{n≥2} (n−1) zⁿ / n!
        let mut term = z; // zⁿ/n! at n = 1
        let mut sum = Complex64::new(0.0, 0.0);
        for n in 2..30 {
            term = term * z / n as f64;
            let add = term * (n - 1) as f64;
            sum += add;
            if add.norm() < 1e-18 * sum.norm() {
                break;
            }
        }
        sum
    } else {
        z.exp() * (z - 1.0) + 1.0
    }
}

/// Scalar `h` with `∇_x (G_κ − G_{iκ′}) = h (x − y)`; zero at r = 0.
#[inline]
pub fn difference_grad_factor(kappa: f64, kappa_prime: f64, r: f64) -> Complex64 {
    if r == 0.0 {
        return Complex64::new(0.0, 0.0);
    }
    let a = g_aux(Complex64::new(0.0, kappa * r));
    let b = g_aux(Complex64::new(-kappa_prime * r, 0.0));
    (a - b) / (FOUR_PI * r * r * r)
}

/// `G_κ(x,y) − G_{iκ′}(x,y)`, defined at x = y by its limit.
pub fn green_difference(kappa: f64, kappa_prime: f64, x: Vec3, y: Vec3) -> Complex64 {
    difference(kappa, kappa_prime, (x - y).norm())
}

/// `∇_x (G_κ − G_{iκ′})(x, y)`.
pub fn green_difference_gradient_x(kappa: f64, kappa_prime: f64, x: Vec3, y: Vec3) -> CVec3 {
    let d = x - y;
    d.to_complex().scale(difference_grad_factor(kappa, kappa_prime, d.norm()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn helmholtz_value_at_unit_distance() {
        let g = green(c(1.0, 0.0), Vec3::ZERO, Vec3::new(1.0, 0.0, 0.0)).unwrap();
        // e^{i}/(4π) = (cos 1 + i sin 1)/(4π)
        assert!((g.re - 0.042995).abs() < 1e-5 && (g.im - 0.066961).abs() < 1e-5);
        assert!((g.re - 1f64.cos() / FOUR_PI).abs() < 1e-16);
    }

    #[test]
    fn yukawa_is_real_positive_decaying() {
        let mut prev = f64::INFINITY;
        for k in 1..50 {
            let r = 0.1 * k as f64;
            let g = green(c(0.0, 2.0), Vec3::ZERO, Vec3::new(0.0, r, 0.0)).unwrap();
            assert_eq!(g.im, 0.0);
            assert!(g.re > 0.0 && g.re < prev);
            assert!((g.re - yukawa(2.0, r)).abs() < 1e-15 * g.re);
            prev = g.re;
        }
    }

    #[test]
    fn coincident_points_rejected() {
        assert!(green(c(1.0, 0.0), Vec3::ZERO, Vec3::ZERO).is_err());
        assert!(green_gradient_x(c(1.0, 0.0), Vec3::ZERO, Vec3::ZERO).is_err());
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let sigma = c(2.0, 0.0);
        let x = Vec3::new(0.3, 0.1, 0.2);
        let y = Vec3::new(0.0, -0.2, 0.0);
        let x = y + (x - y).normalized() * 0.5;
        let grad = green_gradient_x(sigma, x, y).unwrap();
        let h = 1e-5;
        for i in 0..3 {
            let mut e = [0.0; 3];
            e[i] = h;
            let fd = (green(sigma, x + Vec3(e), y).unwrap() - green(sigma, x - Vec3(e), y).unwrap()) / (2.0 * h);
            assert!((fd - grad.0[i]).norm() < 1e-7);
        }
    }

    #[test]
    fn gradient_factor_helpers_agree() {
        let x = Vec3::new(0.4, 0.2, -0.1);
        let y = Vec3::new(-0.3, 0.5, 0.2);
        let r = (x - y).norm();
        let g = green_gradient_x(c(1.7, 0.0), x, y).unwrap();
        let h = (x - y).to_complex().scale(helmholtz_grad_factor(1.7, r));
        assert!((g - h).norm() < 1e-15);
        let g = green_gradient_x(c(0.0, 1.3), x, y).unwrap();
        assert!(g.im().norm() == 0.0);
        let h = (x - y) * yukawa_grad_factor(1.3, r);
        assert!((g.re() - h).norm() < 1e-15);
    }

    #[test]
    fn difference_limit_and_value() {
        let lim = difference(1.3, 0.7, 0.0);
        assert!((lim - c(0.7, 1.3) / FOUR_PI).norm() < 1e-16);
        let near = difference(1.3, 0.7, 1e-8);
        assert!((near - lim).norm() < 1e-7 * lim.norm());
        let v = green_difference(1.0, 1.0, Vec3::ZERO, Vec3::new(0.0, 0.0, 1.0));
        let exact = (c(0.0, 1.0).exp() - (-1f64).exp()) / FOUR_PI;
        assert!((v - exact).norm() < 1e-15);
        assert!((v.re - 0.013725).abs() < 1e-5 && (v.im - 0.066961).abs() < 1e-5);
    }

    #[test]
    fn difference_branches_agree_at_threshold() {
        let (k, kp) = (4.4934, 2.0);
        let r = 1e-6 / k;
        let taylor = difference(k, kp, r * (1.0 - 1e-9));
        let direct = difference(k, kp, r * (1.0 + 1e-9));
        assert!((taylor - direct).norm() < 1e-12 * taylor.norm());
    }

    #[test]
    fn difference_gradient_matches_components() {
        let (k, kp) = (2.0, 3.0);
        for r in [1e-4, 1e-2, 0.3, 2.0] {
            let x = Vec3::new(r, 0.0, 0.0);
            let gk = green_gradient_x(c(k, 0.0), x, Vec3::ZERO).unwrap();
            let direct = gk - green_gradient_x(c(0.0, kp), x, Vec3::ZERO).unwrap();
            let stable = green_difference_gradient_x(k, kp, x, Vec3::ZERO);
            // The direct difference cancels catastrophically; allow for its rounding error.
            let tol = 1e-14 * gk.norm() + 1e-12 * stable.norm();
            assert!((direct - stable).norm() < tol, "r={r}");
        }
    }

    proptest! {
        #[test]
        fn reciprocity(ax in -2.0f64..2.0, ay in -2.0f64..2.0, az in -2.0f64..2.0,
                       bx in -2.0f64..2.0, by in -2.0f64..2.0, bz in -2.0f64..2.0, k in 0.1f64..6.0) {
            let a = Vec3::new(ax, ay, az);
            let b = Vec3::new(bx, by, bz);
            prop_assume!((a - b).norm() > 1e-6);
            prop_assert_eq!(green(c(k, 0.0), a, b).unwrap(), green(c(k, 0.0), b, a).unwrap());
            let ga = green_gradient_x(c(k, 0.0), a, b).unwrap();
            let gb = green_gradient_x(c(k, 0.0), b, a).unwrap();
            prop_assert!((ga + gb).norm() <= 1e-14 * ga.norm());
        }

        #[test]
        fn difference_is_bounded_near_zero(k in 0.05f64..8.0, kp in 0.05f64..8.0, t in 0.0f64..1.0) {
            let r = t * 0.1 / k.max(kp);
            let lim = difference(k, kp, 0.0).norm();
            prop_assert!(difference(k, kp, r).norm() <= 10.0 * lim);
        }
    }
}
