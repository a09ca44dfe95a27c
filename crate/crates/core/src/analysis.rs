//! Condition numbers, the averaged pointwise field error, evaluation points,
//! resonance tables and sweep records.

use crate::cfie::{assemble_rhs, CfieSystem, DiscreteSpaces, GramFactor, PlaneWave};
use crate::error::{Error, Result};
use crate::geom::Vec3;
use crate::linalg::{norm, real_matvec};
use crate::mesh::TriangleMesh;
use crate::operators::{assemble_dual_blocks, assemble_gram, assemble_pairing, to_complex, ComplexDenseMatrix, QuadratureOptions};
use crate::potentials::FieldSample;
use faer::Mat;
use num_complex::Complex64;
use std::io::Write;
use std::sync::Arc;

/// `|λ|_max / |λ|_min` from a dense eigenvalue computation.
///
/// Returns `f64::INFINITY` when the smallest modulus is below 1e-300.
pub fn condition_number(m: &ComplexDenseMatrix) -> Result<f64> {
    if m.nrows() != m.ncols() || m.nrows() == 0 {
        return Err(Error::InvalidInput(format!("condition number needs a nonempty square matrix, got {}×{}", m.nrows(), m.ncols())));
    }
    let ev = m.eigenvalues().map_err(|e| Error::Eigen(format!("{e:?}")))?;
    let (lo, hi) = ev.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), z| {
        let a = z.norm();
        (lo.min(a), hi.max(a))
    });
    if !hi.is_finite() || !lo.is_finite() {
        return Err(Error::Eigen("non-finite eigenvalues".into()));
    }
    if lo < 1e-300 {
        return Ok(f64::INFINITY);
    }
    Ok(hi / lo)
}

/// Condition number of `G⁻ᵀ L`.
pub fn preconditioned_cond(sys: &CfieSystem) -> Result<f64> {
    condition_number(&sys.preconditioned_operator())
}

/// `G⁻ᵀ L(η) = B₀ + iη B₁`, precomputed for fast sweeps over η.
pub struct PreconditionedFamily {
    b0: ComplexDenseMatrix,
    b1: ComplexDenseMatrix,
}

impl PreconditionedFamily {
    pub fn new(sys: &CfieSystem) -> Self {
        let gf = &sys.gram_factor;
        let x = gf.solve_real(&sys.s);
        let y = to_complex(&gf.solve_real(&sys.k));
        // B₀ = G⁻ᵀ (P X + C Y), B₁ = G⁻ᵀ E X.
        let px = &sys.primal.p * &x;
        let cy = &sys.primal.c_delta * &y;
        let b0 = Mat::from_fn(px.nrows(), px.ncols(), |i, j| cy[(i, j)] + px[(i, j)]);
        drop((px, cy, y));
        let b0 = gf.solve_transpose_complex(&b0);
        let b1 = gf.solve_transpose_complex(&(&sys.primal.efie * &to_complex(&x)));
        Self { b0, b1 }
    }

    pub fn operator(&self, eta: f64) -> ComplexDenseMatrix {
        let ieta = Complex64::new(0.0, eta);
        Mat::from_fn(self.b0.nrows(), self.b0.ncols(), |i, j| self.b0[(i, j)] + ieta * self.b1[(i, j)])
    }

    pub fn cond(&self, eta: f64) -> Result<f64> {
        condition_number(&self.operator(eta))
    }
}

/// Relative residuals of the discrete Calderón identity
/// `(−½Id + C)(½Id + C) = κ′² S²` for the Yukawa operators.
///
/// The outer factors are tested and trialled on RT0, the inner ones on BC;
/// the mixed Gram matrix between the two carries the inverse of the
/// identity. `frobenius` is the matrix residual, `smooth` the residual
/// applied to the projected tangential trace of a plane wave.
#[derive(Clone, Copy, Debug)]
pub struct CalderonResidual {
    pub dofs: usize,
    pub frobenius: f64,
    pub smooth: f64,
}

pub fn calderon_residual(mesh: Arc<TriangleMesh>, kappa_prime: f64, opts: &QuadratureOptions) -> Result<CalderonResidual> {
    let spaces = DiscreteSpaces::new(mesh)?;
    let (rt, bc) = (&spaces.rt0, &spaces.bc);
    let gf = GramFactor::new(&assemble_gram(bc, &spaces.rt0_refined)?)?;
    let outer = assemble_dual_blocks(kappa_prime, rt, opts)?;
    let inner = assemble_dual_blocks(kappa_prime, bc, opts)?;
    let (pu, pv) = (assemble_pairing(rt, rt)?, assemble_pairing(bc, bc)?);
    let n = pu.nrows();
    let left = Mat::from_fn(n, n, |i, j| outer.c[(i, j)] - 0.5 * pu[(i, j)]);
    let right = Mat::from_fn(n, n, |i, j| inner.c[(i, j)] + 0.5 * pv[(i, j)]);
    let k2 = kappa_prime * kappa_prime;

    let lhs = &left * gf.solve_real(&right);
    let rhs = (&outer.s * gf.solve_real(&inner.s)) * k2;
    let frobenius = (&lhs - &rhs).norm_l2() / rhs.norm_l2();

    // Coefficients of the BC function whose pairing with RT0 reproduces that of the trace.
    let wave = PlaneWave::standard(1.0)?;
    let x = gf.solve_transpose(&assemble_rhs(&wave, rt, 6)?);
    let l = real_matvec(&left, &gf.solve(&real_matvec(&right, &x)));
    let r: Vec<Complex64> = real_matvec(&outer.s, &gf.solve(&real_matvec(&inner.s, &x))).iter().map(|z| z * k2).collect();
    let d: Vec<Complex64> = l.iter().zip(&r).map(|(a, b)| a - b).collect();
    Ok(CalderonResidual { dofs: n, frobenius, smooth: norm(&d) / norm(&r) })
}

/// `(1/N) Σ_i (|e_h − e|² + |curl e_h − curl e|²)^{1/2}`.
pub fn avg_pointwise_error(numeric: &[FieldSample], exact: &[FieldSample]) -> Result<f64> {
    if numeric.len() != exact.len() || numeric.is_empty() {
        return Err(Error::InvalidInput(format!("sample lists differ or are empty ({} vs {})", numeric.len(), exact.len())));
    }
    let mut sum = 0.0;
    for (a, b) in numeric.iter().zip(exact) {
        if (a.point - b.point).norm() > 1e-12 * (1.0 + a.point.norm()) {
            return Err(Error::InvalidInput("samples are not at the same points".into()));
        }
        sum += ((a.e - b.e).norm().powi(2) + (a.curl_e - b.curl_e).norm().powi(2)).sqrt();
    }
    Ok(sum / numeric.len() as f64)
}

/// Fibonacci lattice of `n` points on the sphere of given radius.
pub fn eval_points_sphere(n: usize, radius: f64) -> Vec<Vec3> {
    let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    (0..n)
        .map(|i| {
            let z = 1.0 - (2.0 * i as f64 + 1.0) / n as f64;
            let s = (1.0 - z * z).max(0.0).sqrt();
            let t = golden * i as f64;
            Vec3::new(s * t.cos(), s * t.sin(), z) * radius
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Geometry {
    Sphere,
    Cube,
}

impl Geometry {
    pub fn tag(self) -> &'static str {
        match self {
            Geometry::Sphere => "sphere",
            Geometry::Cube => "cube",
        }
    }
}

/// Interior resonant wavenumbers of the unit sphere (tabulated) or the unit
/// cube (`π √(l² + m² + n²)` with at most one index zero) up to `cutoff`.
pub fn resonance_table(geometry: Geometry, cutoff: f64) -> Vec<f64> {
    match geometry {
        Geometry::Sphere => [2.7437, 3.8702, 4.4934].into_iter().filter(|&k| k <= cutoff).collect(),
        Geometry::Cube => {
            let max = (cutoff / std::f64::consts::PI).ceil() as u32 + 1;
            let mut sums: Vec<u32> = Vec::new();
            for l in 0..=max {
                for m in 0..=max {
                    for n in 0..=max {
                        let zeros = [l, m, n].iter().filter(|&&v| v == 0).count();
                        if zeros <= 1 {
                            sums.push(l * l + m * m + n * n);
                        }
                    }
                }
            }
            sums.sort_unstable();
            sums.dedup();
            sums.into_iter()
                .map(|s| std::f64::consts::PI * (s as f64).sqrt())
                .filter(|&k| k <= cutoff)
                .collect()
        }
    }
}

/// One row of a sweep CSV.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SweepRecord {
    pub geom: String,
    pub h: f64,
    pub kappa: f64,
    pub kappa_prime: f64,
    pub eta: f64,
    pub cond_cfie: Option<f64>,
    pub cond_efie: Option<f64>,
    pub iters_cfie: Option<usize>,
    pub iters_efie: Option<usize>,
    pub err_h: Option<f64>,
}

pub const SWEEP_CSV_HEADER: &str = "geom,h,kappa,kappa_prime,eta,cond_cfie,cond_efie,iters_cfie,iters_efie,err_h";

impl SweepRecord {
    pub fn csv_row(&self) -> String {
        fn f(v: Option<f64>) -> String {
            v.map(|x| format!("{x:.12e}")).unwrap_or_default()
        }
        fn u(v: Option<usize>) -> String {
            v.map(|x| x.to_string()).unwrap_or_default()
        }
        format!(
            "{},{:.12e},{:.12e},{:.12e},{:.12e},{},{},{},{},{}",
            self.geom,
            self.h,
            self.kappa,
            self.kappa_prime,
            self.eta,
            f(self.cond_cfie),
            f(self.cond_efie),
            u(self.iters_cfie),
            u(self.iters_efie),
            f(self.err_h)
        )
    }
}

pub fn write_sweep_csv<W: Write>(records: &[SweepRecord], mut w: W) -> Result<()> {
    writeln!(w, "{SWEEP_CSV_HEADER}")?;
    for r in records {
        writeln!(w, "{}", r.csv_row())?;
    }
    Ok(())
}

/// Empirical convergence order between two (h, error) pairs.
pub fn empirical_order(h_coarse: f64, e_coarse: f64, h_fine: f64, e_fine: f64) -> f64 {
    (e_coarse / e_fine).ln() / (h_coarse / h_fine).ln()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::CVec3;

    #[test]
    fn calderon_residual_shrinks_on_refinement() {
        let q = QuadratureOptions::default();
        let r: Vec<_> = [2, 3]
            .iter()
            .map(|&f| calderon_residual(Arc::new(crate::mesh::icosphere(1.0, f).unwrap()), 1.0, &q).unwrap())
            .collect();
        assert!(r[1].smooth < 0.6 * r[0].smooth && r[0].smooth < 0.05, "{r:?}");
        assert!(r.iter().all(|c| c.frobenius.is_finite()));
    }

    #[test]
    fn condition_of_simple_matrices() {
        let id = Mat::<Complex64>::identity(4, 4);
        assert!((condition_number(&id).unwrap() - 1.0).abs() < 1e-14);
        let d = Mat::from_fn(2, 2, |i, j| if i == j { Complex64::new([1.0, 10.0][i], 0.0) } else { Complex64::new(0.0, 0.0) });
        assert!((condition_number(&d).unwrap() - 10.0).abs() < 1e-12);
        let z = Mat::<Complex64>::zeros(3, 3);
        assert_eq!(condition_number(&z).unwrap(), f64::INFINITY);
        let scaled = &d * faer::Scale(Complex64::new(-3.0, 2.0));
        assert!((condition_number(&scaled).unwrap() - 10.0).abs() < 1e-10 * 10.0);
    }

    #[test]
    fn error_metric_formula() {
        let p = Vec3::new(1.0, 0.0, 0.0);
        let zero = FieldSample { point: p, e: CVec3::ZERO, curl_e: CVec3::ZERO };
        let one = FieldSample { point: p, e: CVec3([Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0)]), curl_e: CVec3::ZERO };
        assert_eq!(avg_pointwise_error(&[zero], &[zero]).unwrap(), 0.0);
        assert_eq!(avg_pointwise_error(&[one], &[zero]).unwrap(), 1.0);
        let two = FieldSample { e: one.e * 2.0, ..one };
        assert_eq!(avg_pointwise_error(&[two], &[zero]).unwrap(), 2.0);
        assert_eq!(avg_pointwise_error(&[zero], &[one]).unwrap(), avg_pointwise_error(&[one], &[zero]).unwrap());
        assert!(avg_pointwise_error(&[one, one], &[zero]).is_err());
    }

    #[test]
    fn fibonacci_points() {
        let p = eval_points_sphere(5000, 2.0);
        assert!(p.iter().all(|x| (x.norm() - 2.0).abs() < 1e-12));
        let mean = p.iter().fold(Vec3::ZERO, |a, &b| a + b) * (1.0 / 5000.0);
        assert!(mean.norm() < 0.02);
        assert_eq!(p, eval_points_sphere(5000, 2.0));
    }

    #[test]
    fn resonances() {
        assert!(resonance_table(Geometry::Sphere, 10.0).contains(&4.4934));
        let c = resonance_table(Geometry::Cube, 10.0);
        assert!((c[0] - 4.4429).abs() < 1e-4);
        assert!((c[1] - 5.4414).abs() < 1e-4);
    }

    #[test]
    fn csv_rows_leave_missing_values_empty() {
        let r = SweepRecord { geom: "sphere".into(), h: 0.1, kappa: 1.0, kappa_prime: 1.0, eta: -1.0, cond_cfie: Some(3.0), ..Default::default() };
        let row = r.csv_row();
        assert_eq!(row.split(',').count(), 10);
        assert!(row.ends_with(",,,,"));
    }
}
