//! The block CFIE system, its Schur-complement operator and the plane-wave
//! right-hand side.
//!
//! Unknowns: `ξ` in the Buffa–Christiansen space, `φ, ψ` in RT0. The block
//! rows read
//!
//! ```text
//! (M + Z) φ + C ψ = b,    G φ = S ξ,    G ψ = K ξ,
//! ```
//!
//! and eliminating `φ, ψ` gives `L ξ = b` with `L = (M+Z) G⁻¹ S + C G⁻¹ K`.

use crate::error::{Error, Result};
use crate::geom::{CVec3, Vec3};
use crate::kernels::{CouplingParameter, Wavenumber};
use crate::linalg::{self, gmres, GmresOutcome};
use crate::mesh::{barycentric_refine, TriangleMesh};
use crate::operators::{
    assemble_dual_blocks, assemble_gram, assemble_pairing, assemble_primal_blocks, ComplexDenseMatrix,
    PrimalBlocks, QuadratureOptions, RealDenseMatrix,
};
use crate::quadrature::gauss_triangle_rule;
use crate::spaces::{build_bc_space, build_rt0_space, refine_rt0, BasisSpace, SpaceKind};
use faer::linalg::solvers::{PartialPivLu, Solve};
use faer::Mat;
use num_complex::Complex64;
use std::sync::Arc;

/// Incident field `e^in(x) = amplitude · p · exp(iκ d·x)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PlaneWave {
    pub polarization: Vec3,
    pub direction: Vec3,
    pub kappa: f64,
    pub amplitude: Complex64,
}

impl PlaneWave {
    pub fn new(polarization: Vec3, direction: Vec3, kappa: f64) -> Result<Self> {
        let ok_unit = |v: Vec3| (v.norm() - 1.0).abs() < 1e-12;
        if !ok_unit(polarization) || !ok_unit(direction) {
            return Err(Error::InvalidInput("polarization and direction must be unit vectors".into()));
        }
        if polarization.dot(direction).abs() > 1e-12 {
            return Err(Error::InvalidInput("polarization must be orthogonal to the direction".into()));
        }
        if !(kappa > 0.0 && kappa.is_finite()) {
            return Err(Error::InvalidInput(format!("wavenumber must be positive, got {kappa}")));
        }
        Ok(Self { polarization, direction, kappa, amplitude: Complex64::new(1.0, 0.0) })
    }

    /// `x̂`-polarized wave travelling along `ẑ`.
    pub fn standard(kappa: f64) -> Result<Self> {
        Self::new(Vec3::new(1.0, 0.0, 0.0), Vec3::new(0.0, 0.0, 1.0), kappa)
    }

    pub fn with_amplitude(mut self, amplitude: Complex64) -> Self {
        self.amplitude = amplitude;
        self
    }

    /// Field and its curl at `x`.
    pub fn field(&self, x: Vec3) -> (CVec3, CVec3) {
        let phase = self.amplitude * Complex64::new(0.0, self.kappa * self.direction.dot(x)).exp();
        let e = self.polarization.to_complex().scale(phase);
        let curl = self
            .direction
            .cross(self.polarization)
            .to_complex()
            .scale(phase * Complex64::new(0.0, self.kappa));
        (e, curl)
    }
}

/// `b_m = −∫ (u_m × n)·(e^in × n)` for the RT0 functions `u_m`.
pub fn assemble_rhs(wave: &PlaneWave, rt0: &BasisSpace, rule_order: usize) -> Result<Vec<Complex64>> {
    let rule = gauss_triangle_rule(rule_order)?;
    let mesh = rt0.mesh();
    let mut b = vec![Complex64::new(0.0, 0.0); rt0.dof_count()];
    for t in 0..mesh.num_triangles() {
        let c = mesh.centroid(t);
        let n = mesh.normal(t);
        for (x, w) in rule.physical(mesh.triangle_vertices(t)) {
            let (e, _) = wave.field(x);
            let exn = e.cross_real(n);
            for p in rt0.pieces_on(t) {
                let uxn = p.value(x, c).cross(n);
                let v: Complex64 = (0..3).map(|i| exn.0[i] * uxn.0[i]).sum();
                b[p.dof] -= v * w;
            }
        }
    }
    Ok(b)
}

/// LU factorization of the (real) Gram matrix, applied to complex data.
pub struct GramFactor {
    lu: PartialPivLu<f64>,
    n: usize,
}

impl GramFactor {
    pub fn new(g: &RealDenseMatrix) -> Result<Self> {
        let n = g.nrows();
        let lu = g.partial_piv_lu();
        let u = lu.U();
        let mut lo = f64::INFINITY;
        let mut hi: f64 = 0.0;
        for i in 0..n {
            let d = u[(i, i)].abs();
            lo = lo.min(d);
            hi = hi.max(d);
        }
        if !(lo > 1e-13 * hi) {
            return Err(Error::Singular(format!("Gram matrix pivot ratio {:.3e}", lo / hi)));
        }
        Ok(Self { lu, n })
    }

    fn split(v: &[Complex64]) -> Mat<f64> {
        Mat::from_fn(v.len(), 2, |i, j| if j == 0 { v[i].re } else { v[i].im })
    }

    fn join(m: &Mat<f64>) -> Vec<Complex64> {
        (0..m.nrows()).map(|i| Complex64::new(m[(i, 0)], m[(i, 1)])).collect()
    }

    /// `G⁻¹ v`.
    pub fn solve(&self, v: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(v.len(), self.n);
        Self::join(&self.lu.solve(&Self::split(v)))
    }

    /// `G⁻ᵀ v`.
    pub fn solve_transpose(&self, v: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(v.len(), self.n);
        Self::join(&self.lu.solve_transpose(&Self::split(v)))
    }

    pub fn solve_real(&self, m: &RealDenseMatrix) -> RealDenseMatrix {
        self.lu.solve(m)
    }

    pub fn solve_transpose_real(&self, m: &RealDenseMatrix) -> RealDenseMatrix {
        self.lu.solve_transpose(m)
    }

    /// `G⁻ᵀ X` for complex `X`, via its real and imaginary parts.
    pub fn solve_transpose_complex(&self, x: &ComplexDenseMatrix) -> ComplexDenseMatrix {
        let re = self.lu.solve_transpose(Mat::from_fn(x.nrows(), x.ncols(), |i, j| x[(i, j)].re));
        let im = self.lu.solve_transpose(Mat::from_fn(x.nrows(), x.ncols(), |i, j| x[(i, j)].im));
        Mat::from_fn(x.nrows(), x.ncols(), |i, j| Complex64::new(re[(i, j)], im[(i, j)]))
    }
}

/// Spaces on one surface: RT0, its refinement and the BC space.
pub struct DiscreteSpaces {
    pub rt0: Arc<BasisSpace>,
    pub rt0_refined: Arc<BasisSpace>,
    pub bc: Arc<BasisSpace>,
}

impl DiscreteSpaces {
    pub fn new(mesh: Arc<TriangleMesh>) -> Result<Self> {
        let refined = barycentric_refine(&mesh)?;
        let rt0 = build_rt0_space(mesh);
        let rt0_refined = refine_rt0(&rt0, &refined)?;
        let bc = build_bc_space(&refined)?;
        Ok(Self { rt0: Arc::new(rt0), rt0_refined: Arc::new(rt0_refined), bc: Arc::new(bc) })
    }

    pub fn dof_count(&self) -> usize {
        self.rt0.dof_count()
    }
}

/// Assembled block system.
pub struct CfieSystem {
    pub wavenumber: Wavenumber,
    eta: f64,
    pub spaces: DiscreteSpaces,
    /// η-independent primal matrices (see [`PrimalBlocks`]).
    pub primal: PrimalBlocks,
    /// `M + Z = P + iη E`.
    mz: ComplexDenseMatrix,
    /// Yukawa EFIE matrix on BC.
    pub s: RealDenseMatrix,
    /// `½ G̃ + C_{iκ′}` on BC.
    pub k: RealDenseMatrix,
    /// BC × RT0 Gram matrix.
    pub gram: RealDenseMatrix,
    pub gram_factor: GramFactor,
}

/// Solution triple and solver diagnostics.
#[derive(Clone, Debug)]
pub struct CfieSolution {
    pub xi: Vec<Complex64>,
    pub phi: Vec<Complex64>,
    pub psi: Vec<Complex64>,
    pub iterations: usize,
    pub history: Vec<f64>,
    /// Relative residual of all three block rows.
    pub block_residual: f64,
}

impl CfieSystem {
    pub fn assemble(mesh: Arc<TriangleMesh>, wavenumber: Wavenumber, eta: f64, opts: &QuadratureOptions) -> Result<Self> {
        Self::from_spaces(DiscreteSpaces::new(mesh)?, wavenumber, eta, opts)
    }

    pub fn from_spaces(spaces: DiscreteSpaces, wavenumber: Wavenumber, eta: f64, opts: &QuadratureOptions) -> Result<Self> {
        let eta = CouplingParameter::new(eta)?.eta();
        let Wavenumber { kappa, kappa_prime } = wavenumber;
        let primal = assemble_primal_blocks(kappa, kappa_prime, &spaces.rt0, opts)?;
        let dual = assemble_dual_blocks(kappa_prime, &spaces.bc, opts)?;
        let gt = assemble_pairing(&spaces.bc, &spaces.bc)?;
        let k = Mat::from_fn(gt.nrows(), gt.ncols(), |i, j| 0.5 * gt[(i, j)] + dual.c[(i, j)]);
        drop(gt);
        let gram = assemble_gram(&spaces.bc, &spaces.rt0_refined)?;
        let gram_factor = GramFactor::new(&gram)?;
        let mz = primal.m_plus_z(eta);
        Ok(Self { wavenumber, eta, spaces, primal, mz, s: dual.s, k, gram, gram_factor })
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    /// Change the coupling parameter without reassembly.
    pub fn set_eta(&mut self, eta: f64) -> Result<()> {
        self.eta = CouplingParameter::new(eta)?.eta();
        self.mz = self.primal.m_plus_z(eta);
        Ok(())
    }

    pub fn dof_count(&self) -> usize {
        self.s.nrows()
    }

    pub fn m(&self) -> ComplexDenseMatrix {
        self.primal.m(self.eta)
    }

    pub fn z(&self) -> ComplexDenseMatrix {
        self.primal.z(self.eta)
    }

    pub fn m_plus_z(&self) -> &ComplexDenseMatrix {
        &self.mz
    }

    pub fn c_delta(&self) -> &ComplexDenseMatrix {
        &self.primal.c_delta
    }

    /// `φ = G⁻¹ S ξ` and `ψ = G⁻¹ K ξ`.
    pub fn auxiliary(&self, xi: &[Complex64]) -> (Vec<Complex64>, Vec<Complex64>) {
        let phi = self.gram_factor.solve(&linalg::real_matvec(&self.s, xi));
        let psi = self.gram_factor.solve(&linalg::real_matvec(&self.k, xi));
        (phi, psi)
    }

    /// `L ξ` without forming `L`.
    pub fn schur_apply(&self, xi: &[Complex64]) -> Vec<Complex64> {
        let (phi, psi) = self.auxiliary(xi);
        let mut y = linalg::matvec(&self.mz, &phi);
        for (yi, zi) in y.iter_mut().zip(linalg::matvec(&self.primal.c_delta, &psi)) {
            *yi += zi;
        }
        y
    }

    /// Dense `L = (M+Z) G⁻¹ S + C G⁻¹ K`.
    pub fn densify_schur(&self) -> ComplexDenseMatrix {
        let x = crate::operators::to_complex(&self.gram_factor.solve_real(&self.s));
        let y = crate::operators::to_complex(&self.gram_factor.solve_real(&self.k));
        &(&self.mz * &x) + &(&self.primal.c_delta * &y)
    }

    /// Dense `G⁻ᵀ L`.
    pub fn preconditioned_operator(&self) -> ComplexDenseMatrix {
        self.gram_factor.solve_transpose_complex(&self.densify_schur())
    }

    /// Solve by GMRES on `L G⁻ᵀ` (right preconditioning), then recover `φ, ψ`.
    pub fn solve(&self, b: &[Complex64], tol: f64, max_iter: usize, x0: Option<&[Complex64]>) -> Result<CfieSolution> {
        if b.len() != self.dof_count() {
            return Err(Error::InvalidInput(format!("rhs length {} ≠ {}", b.len(), self.dof_count())));
        }
        // Initial guess is given for ξ; the preconditioned variable is Gᵀ ξ.
        let y0 = x0.map(|x| {
            let g = crate::operators::to_complex(&self.gram);
            let gt = g.transpose().to_owned();
            linalg::matvec(&gt, x)
        });
        let out = gmres(
            |v| self.schur_apply(&self.gram_factor.solve_transpose(v)),
            None::<fn(&[Complex64]) -> Vec<Complex64>>,
            b,
            y0.as_deref(),
            tol,
            max_iter,
        );
        let GmresOutcome { x: y, iterations, history } = out?;
        let xi = self.gram_factor.solve_transpose(&y);
        let (phi, psi) = self.auxiliary(&xi);
        let block_residual = self.block_residual(b, &xi, &phi, &psi);
        Ok(CfieSolution { xi, phi, psi, iterations, history, block_residual })
    }

    /// `‖(r₁, r₂, r₃)‖ / ‖b‖` over the three block rows.
    pub fn block_residual(&self, b: &[Complex64], xi: &[Complex64], phi: &[Complex64], psi: &[Complex64]) -> f64 {
        let mut sq = 0.0;
        let r1 = linalg::matvec(&self.mz, phi);
        let r1c = linalg::matvec(&self.primal.c_delta, psi);
        for i in 0..b.len() {
            sq += (r1[i] + r1c[i] - b[i]).norm_sqr();
        }
        let gphi = linalg::real_matvec(&self.gram, phi);
        let sxi = linalg::real_matvec(&self.s, xi);
        let gpsi = linalg::real_matvec(&self.gram, psi);
        let kxi = linalg::real_matvec(&self.k, xi);
        for i in 0..b.len() {
            sq += (gphi[i] - sxi[i]).norm_sqr() + (gpsi[i] - kxi[i]).norm_sqr();
        }
        let bn = linalg::norm(b);
        if bn == 0.0 {
            sq.sqrt()
        } else {
            sq.sqrt() / bn
        }
    }
}

/// Plain EFIE with the Helmholtz kernel on RT0, for comparison.
pub struct EfieReference {
    pub matrix: ComplexDenseMatrix,
}

impl EfieReference {
    pub fn solve(&self, b: &[Complex64], tol: f64, max_iter: usize) -> Result<GmresOutcome> {
        gmres(|v| linalg::matvec(&self.matrix, v), None::<fn(&[Complex64]) -> Vec<Complex64>>, b, None, tol, max_iter)
    }
}

pub fn build_efie_reference(kappa: f64, rt0: &BasisSpace, opts: &QuadratureOptions) -> Result<EfieReference> {
    if rt0.kind() != SpaceKind::Rt0 {
        return Err(Error::InvalidInput("EFIE reference needs the RT0 space".into()));
    }
    let matrix = crate::operators::assemble_s(crate::operators::Sigma::Real(kappa), rt0, rt0, opts)?;
    Ok(EfieReference { matrix })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::sphere_level;

    fn small_system() -> CfieSystem {
        let mesh = Arc::new(sphere_level(1.0, 1).unwrap());
        let k = 2.0;
        CfieSystem::assemble(mesh, Wavenumber::new(k, k).unwrap(), -k * k, &QuadratureOptions::default()).unwrap()
    }

    #[test]
    fn schur_matches_dense_operator_and_is_linear() {
        let sys = small_system();
        let n = sys.dof_count();
        let l = sys.densify_schur();
        let x1: Vec<Complex64> = (0..n).map(|i| Complex64::new((i as f64 * 0.37).sin(), (i as f64 * 0.11).cos())).collect();
        let x2: Vec<Complex64> = (0..n).map(|i| Complex64::new(1.0 / (1.0 + i as f64), -0.5)).collect();
        let a = linalg::matvec(&l, &x1);
        let b = sys.schur_apply(&x1);
        let diff: Vec<_> = a.iter().zip(&b).map(|(p, q)| p - q).collect();
        assert!(linalg::norm(&diff) <= 1e-11 * linalg::norm(&a));
        let (al, be) = (Complex64::new(0.3, -1.2), Complex64::new(2.0, 0.5));
        let comb: Vec<_> = x1.iter().zip(&x2).map(|(p, q)| al * p + be * q).collect();
        let lhs = sys.schur_apply(&comb);
        let r1 = sys.schur_apply(&x1);
        let r2 = sys.schur_apply(&x2);
        let rhs: Vec<_> = r1.iter().zip(&r2).map(|(p, q)| al * p + be * q).collect();
        let d: Vec<_> = lhs.iter().zip(&rhs).map(|(p, q)| p - q).collect();
        assert!(linalg::norm(&d) <= 1e-12 * linalg::norm(&lhs));
        assert!(sys.schur_apply(&vec![Complex64::new(0.0, 0.0); n]).iter().all(|z| z.norm() == 0.0));
    }

    #[test]
    fn solve_satisfies_block_rows_and_is_unique() {
        let sys = small_system();
        let b = assemble_rhs(&PlaneWave::standard(2.0).unwrap(), &sys.spaces.rt0, 5).unwrap();
        let tol = 1e-10;
        let s1 = sys.solve(&b, tol, 500, None).unwrap();
        assert!(s1.block_residual <= 10.0 * tol, "{}", s1.block_residual);
        let guess: Vec<Complex64> = (0..b.len()).map(|i| Complex64::new(i as f64, 1.0)).collect();
        let s2 = sys.solve(&b, tol, 500, Some(&guess)).unwrap();
        let d: Vec<_> = s1.xi.iter().zip(&s2.xi).map(|(p, q)| p - q).collect();
        assert!(linalg::norm(&d) <= 100.0 * tol * linalg::norm(&s1.xi));
        let zero = sys.solve(&vec![Complex64::new(0.0, 0.0); b.len()], tol, 10, None).unwrap();
        assert_eq!(zero.iterations, 0);
    }

    #[test]
    fn zero_amplitude_wave_has_zero_rhs() {
        let mesh = Arc::new(sphere_level(1.0, 0).unwrap());
        let rt = build_rt0_space(mesh);
        let w = PlaneWave::standard(1.0).unwrap().with_amplitude(Complex64::new(0.0, 0.0));
        assert!(assemble_rhs(&w, &rt, 5).unwrap().iter().all(|z| z.norm() == 0.0));
    }

    #[test]
    fn plane_wave_curl_matches_finite_differences() {
        let w = PlaneWave::new(Vec3::new(0.0, 1.0, 0.0), Vec3::new(1.0, 0.0, 0.0), 1.7).unwrap();
        let x = Vec3::new(0.3, -0.2, 0.9);
        let h = 1e-5;
        let d = |i: usize, j: usize| {
            let mut e = [0.0; 3];
            e[j] = h;
            let ep = Vec3(e);
            (w.field(x + ep).0 .0[i] - w.field(x - ep).0 .0[i]) / (2.0 * h)
        };
        let curl = [d(2, 1) - d(1, 2), d(0, 2) - d(2, 0), d(1, 0) - d(0, 1)];
        let (e, c) = w.field(x);
        assert!((e.norm() - 1.0).abs() < 1e-14);
        for i in 0..3 {
            assert!((curl[i] - c.0[i]).norm() < 1e-7);
        }
        let (e0, _) = w.field(Vec3::new(0.0, 0.0, 0.0));
        assert_eq!(e0.0[1], Complex64::new(1.0, 0.0));
    }
}
