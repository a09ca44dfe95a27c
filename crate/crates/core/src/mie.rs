//! Series solution for an `x̂`-polarized, `ẑ`-travelling plane wave
//! scattered by a perfectly conducting sphere centred at the origin.
//!
//! `e_s = Σ_n E_n (i a_n N_e1n − b_n M_o1n)` with `E_n = iⁿ (2n+1)/(n(n+1))`,
//! `a_n = ψ_n′(κa)/ξ_n′(κa)` and `b_n = ψ_n(κa)/ξ_n(κa)` (Riccati–Bessel
//! functions), and the outgoing vector spherical harmonics built on
//! `h_n⁽¹⁾`. Since `curl M = κ N` and `curl N = κ M`, the curl comes for free.

use crate::bessel::{spherical_jn, spherical_yn};
use crate::error::{Error, Result};
use crate::geom::{CVec3, Vec3};
use crate::potentials::FieldSample;
use num_complex::Complex64;

#[derive(Clone, Debug)]
pub struct MieSolution {
    pub kappa: f64,
    pub radius: f64,
    pub n_terms: usize,
    /// `a_n`, `b_n` for `n = 1..=n_terms` (index `n − 1`).
    pub a: Vec<Complex64>,
    pub b: Vec<Complex64>,
    pub amplitude: Complex64,
}

/// Truncation order `⌈x + 4 x^{1/3} + 10⌉` for size parameter `x = κa`.
pub fn default_terms(size_parameter: f64) -> usize {
    (size_parameter + 4.0 * size_parameter.cbrt() + 10.0).ceil() as usize
}

pub fn build_mie(kappa: f64, radius: f64) -> Result<MieSolution> {
    build_mie_with_terms(kappa, radius, default_terms(kappa * radius))
}

pub fn build_mie_with_terms(kappa: f64, radius: f64, n_terms: usize) -> Result<MieSolution> {
    if !(kappa > 0.0 && radius > 0.0 && kappa.is_finite() && radius.is_finite()) {
        return Err(Error::InvalidInput("wavenumber and radius must be positive".into()));
    }
    let x = kappa * radius;
    if x >= 50.0 {
        return Err(Error::InvalidInput(format!("size parameter κa = {x} outside the supported range (< 50)")));
    }
    if n_terms < 1 {
        return Err(Error::InvalidInput("need at least one term".into()));
    }
    let j = spherical_jn(n_terms, x)?;
    let y = spherical_yn(n_terms, x)?;
    let mut a = Vec::with_capacity(n_terms);
    let mut b = Vec::with_capacity(n_terms);
    for n in 1..=n_terms {
        let nf = n as f64;
        let h = Complex64::new(j[n], y[n]);
        let hm = Complex64::new(j[n - 1], y[n - 1]);
        let psi = x * j[n];
        let dpsi = x * j[n - 1] - nf * j[n];
        let xi = h * x;
        let dxi = hm * x - h * nf;
        let an = dpsi / dxi;
        let bn = psi / xi;
        if !(an.is_finite() && bn.is_finite()) {
            return Err(Error::BesselOverflow { order: n, argument: x });
        }
        a.push(an);
        b.push(bn);
    }
    Ok(MieSolution { kappa, radius, n_terms, a, b, amplitude: Complex64::new(1.0, 0.0) })
}

impl MieSolution {
    pub fn with_amplitude(mut self, amplitude: Complex64) -> Self {
        self.amplitude = amplitude;
        self
    }

    /// Scattered field and curl at one point with `|x| ≥ radius`.
    pub fn field(&self, p: Vec3) -> Result<FieldSample> {
        let r = p.norm();
        if r < self.radius * (1.0 - 1e-12) {
            return Err(Error::InvalidInput(format!("point {p:?} lies inside the sphere")));
        }
        let k = self.kappa;
        let rho = k * r;
        let cos_t = (p.z() / r).clamp(-1.0, 1.0);
        let sin_t = (1.0 - cos_t * cos_t).max(0.0).sqrt();
        let phi = p.y().atan2(p.x());
        let (sin_p, cos_p) = phi.sin_cos();
        let er = Vec3::new(sin_t * cos_p, sin_t * sin_p, cos_t);
        let et = Vec3::new(cos_t * cos_p, cos_t * sin_p, -sin_t);
        let ep = Vec3::new(-sin_p, cos_p, 0.0);

        let nmax = self.n_terms;
        let j = spherical_jn(nmax, rho)?;
        let y = spherical_yn(nmax, rho)?;
        let i = Complex64::new(0.0, 1.0);
        let mut e = [Complex64::new(0.0, 0.0); 3]; // (r, θ, φ) components
        let mut c = [Complex64::new(0.0, 0.0); 3];
        let (mut pi_prev, mut pi) = (0.0, 1.0);
        let mut i_pow = Complex64::new(1.0, 0.0);
        for n in 1..=nmax {
            let nf = n as f64;
            if n > 1 {
                let next = ((2.0 * nf - 1.0) * cos_t * pi - nf * pi_prev) / (nf - 1.0);
                pi_prev = pi;
                pi = next;
            }
            let tau = nf * cos_t * pi - (nf + 1.0) * pi_prev;
            i_pow *= i;
            let en = i_pow * ((2.0 * nf + 1.0) / (nf * (nf + 1.0)));
            let z = Complex64::new(j[n], y[n]);
            let zm = Complex64::new(j[n - 1], y[n - 1]);
            let dz = (zm * rho - z * nf) / rho; // (ρ z_n)′/ρ
            let zr = z * (nf * (nf + 1.0) / rho);
            // Vector harmonics in (r, θ, φ).
            let m_o = [Complex64::new(0.0, 0.0), z * (cos_p * pi), z * (-sin_p * tau)];
            let m_e = [Complex64::new(0.0, 0.0), z * (-sin_p * pi), z * (-cos_p * tau)];
            let n_e = [zr * (cos_p * sin_t * pi), dz * (cos_p * tau), dz * (-sin_p * pi)];
            let n_o = [zr * (sin_p * sin_t * pi), dz * (sin_p * tau), dz * (cos_p * pi)];
            let an = self.a[n - 1];
            let bn = self.b[n - 1];
            for q in 0..3 {
                e[q] += en * (i * an * n_e[q] - bn * m_o[q]);
                c[q] += en * k * (i * an * m_e[q] - bn * n_o[q]);
            }
        }
        let to_xyz = |v: [Complex64; 3]| -> CVec3 {
            let mut out = CVec3::ZERO;
            for d in 0..3 {
                out.0[d] = (v[0] * er.0[d] + v[1] * et.0[d] + v[2] * ep.0[d]) * self.amplitude;
            }
            out
        };
        Ok(FieldSample { point: p, e: to_xyz(e), curl_e: to_xyz(c) })
    }
}

pub fn eval_mie(sol: &MieSolution, points: &[Vec3]) -> Result<Vec<FieldSample>> {
    points.iter().map(|&p| sol.field(p)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cfie::PlaneWave;

    fn fib(n: usize, r: f64) -> Vec<Vec3> {
        let g = std::f64::consts::PI * (3.0 - 5f64.sqrt());
        (0..n)
            .map(|i| {
                let z = 1.0 - (2.0 * i as f64 + 1.0) / n as f64;
                let s = (1.0 - z * z).sqrt();
                let t = g * i as f64;
                Vec3::new(s * t.cos(), s * t.sin(), z) * r
            })
            .collect()
    }

    #[test]
    fn tangential_total_field_vanishes_on_the_sphere() {
        for &k in &[0.5, 2.0, 4.4934, 9.0] {
            let sol = build_mie(k, 1.0).unwrap();
            let w = PlaneWave::standard(k).unwrap();
            for p in fib(200, 1.0) {
                let s = sol.field(p).unwrap();
                let (ei, _) = w.field(p);
                let t = (s.e + ei).cross_real(p);
                assert!(t.norm() < 1e-8, "k={k}: residual {}", t.norm());
            }
        }
    }

    #[test]
    fn truncation_is_converged() {
        let s1 = build_mie(4.4934, 1.0).unwrap();
        let s2 = build_mie_with_terms(4.4934, 1.0, s1.n_terms + 10).unwrap();
        for p in fib(50, 2.0) {
            let a = s1.field(p).unwrap();
            let b = s2.field(p).unwrap();
            assert!((a.e - b.e).norm() < 1e-10 && (a.curl_e - b.curl_e).norm() < 1e-10);
        }
    }

    #[test]
    fn mirror_parities() {
        let sol = build_mie(3.0, 1.0).unwrap();
        let p = Vec3::new(0.7, 1.1, -1.3);
        let f = sol.field(p).unwrap().e;
        let fy = sol.field(Vec3::new(p.x(), -p.y(), p.z())).unwrap().e;
        let fx = sol.field(Vec3::new(-p.x(), p.y(), p.z())).unwrap().e;
        for (d, s) in [1.0, -1.0, 1.0].iter().enumerate() {
            assert!((fy.0[d] - f.0[d] * *s).norm() < 1e-10);
        }
        for (d, s) in [1.0, -1.0, -1.0].iter().enumerate() {
            assert!((fx.0[d] - f.0[d] * *s).norm() < 1e-10);
        }
    }

    #[test]
    fn rayleigh_scaling() {
        // Close to the sphere the scattered field tends to the static
        // perturbation, so the κ² law is checked in the radiating zone.
        let q = Vec3::new(0.0, 3e3, 4e3);
        let f1 = build_mie(0.01, 1.0).unwrap().field(q).unwrap().e.norm();
        let f2 = build_mie(0.02, 1.0).unwrap().field(q).unwrap().e.norm();
        assert!((f2 / f1 / 4.0 - 1.0).abs() < 0.1, "ratio {}", f2 / f1);
    }

    #[test]
    fn radiation_condition() {
        let sol = build_mie(2.0, 1.0).unwrap();
        let mut prev = f64::INFINITY;
        for r in [10.0, 100.0, 1000.0] {
            let d = Vec3::new(0.48, 0.6, 0.64);
            let s = sol.field(d * r).unwrap();
            let res = s.curl_e.cross_real(d) + (s.e.cross_real(d) * Complex64::new(0.0, 2.0)).cross_real(d);
            let v = r * res.norm();
            assert!(v < prev);
            prev = v;
        }
        assert!(prev < 1e-2);
    }

    #[test]
    fn interior_points_and_zero_amplitude() {
        let sol = build_mie(1.0, 1.0).unwrap();
        assert!(sol.field(Vec3::new(0.1, 0.0, 0.0)).is_err());
        let z = sol.with_amplitude(Complex64::new(0.0, 0.0));
        assert_eq!(z.field(Vec3::new(0.0, 0.0, 2.0)).unwrap().e.norm(), 0.0);
    }
}
