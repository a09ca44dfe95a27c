//! Galerkin matrices of the single-layer, double-layer and pairing forms.
//!
//! All boundary-integral matrices are produced by one assembly engine that
//! accumulates kernel moments per triangle pair and scatters them to the
//! affine basis pieces living on the two triangles. Several kernel channels
//! (e.g. Yukawa and Helmholtz-minus-Yukawa) are integrated in one sweep and
//! combined linearly into the requested output matrices.

use crate::error::{Error, Result};
use crate::geom::Vec3;
use crate::kernels;
use crate::quadrature::{classify_pair, gauss_triangle_rule, permute, PairCase, PairRule};
use crate::spaces::{BasisSpace, Piece, SpaceKind};
use faer::Mat;
use num_complex::Complex64;
use rayon::prelude::*;
use std::io::{Read, Write};
use std::ops::{Add, AddAssign, Mul, Sub};

/// Dense complex matrix (column-major storage, row/column indexing).
pub type ComplexDenseMatrix = Mat<Complex64>;
/// Dense real matrix.
pub type RealDenseMatrix = Mat<f64>;

/// Field scalars the engine accumulates in.
pub trait Scalar:
    Copy
    + Send
    + Sync
    + Default
    + Add<Output = Self>
    + Sub<Output = Self>
    + AddAssign
    + Mul<Output = Self>
    + Mul<f64, Output = Self>
    + 'static
{
    fn to_complex(self) -> Complex64;
}

impl Scalar for f64 {
    fn to_complex(self) -> Complex64 {
        Complex64::new(self, 0.0)
    }
}

impl Scalar for Complex64 {
    fn to_complex(self) -> Complex64 {
        self
    }
}

/// A family of translation-invariant kernels integrated together.
///
/// `eval(r)` returns `S` single-layer kernel values `k(r)` and `D` gradient
/// factors `h(r)` with `∇_x k = h (x − y)`.
pub trait PairKernel<const S: usize, const D: usize>: Sync {
    type T: Scalar;
    fn eval(&self, r: f64) -> ([Self::T; S], [Self::T; D]);
    /// Largest wavenumber-like scale; drives quadrature order upgrades.
    fn scale(&self) -> f64;
    /// Distance beyond which every channel is negligible (exponential decay).
    fn cutoff(&self) -> Option<f64> {
        None
    }
}

/// Yukawa kernel `G_{iκ′}` (real).
pub struct YukawaKernel {
    pub kappa_prime: f64,
}

impl PairKernel<1, 1> for YukawaKernel {
    type T = f64;
    #[inline]
    fn eval(&self, r: f64) -> ([f64; 1], [f64; 1]) {
        let e = (-self.kappa_prime * r).exp() / (4.0 * std::f64::consts::PI * r);
        ([e], [-e * (self.kappa_prime * r + 1.0) / (r * r)])
    }
    fn scale(&self) -> f64 {
        self.kappa_prime
    }
    fn cutoff(&self) -> Option<f64> {
        Some(40.0 / self.kappa_prime)
    }
}

/// Helmholtz kernel `G_κ` for real κ.
pub struct HelmholtzKernel {
    pub kappa: f64,
}

impl PairKernel<1, 1> for HelmholtzKernel {
    type T = Complex64;
    #[inline]
    fn eval(&self, r: f64) -> ([Complex64; 1], [Complex64; 1]) {
        ([kernels::helmholtz(self.kappa, r)], [kernels::helmholtz_grad_factor(self.kappa, r)])
    }
    fn scale(&self) -> f64 {
        self.kappa
    }
}

/// Channels `[G_{iκ′}, G_κ − G_{iκ′}]` and gradient of the difference.
pub struct CoarseKernel {
    pub kappa: f64,
    pub kappa_prime: f64,
}

impl PairKernel<2, 1> for CoarseKernel {
    type T = Complex64;
    #[inline]
    fn eval(&self, r: f64) -> ([Complex64; 2], [Complex64; 1]) {
        let y = kernels::yukawa(self.kappa_prime, r);
        (
            [Complex64::new(y, 0.0), kernels::difference(self.kappa, self.kappa_prime, r)],
            [kernels::difference_grad_factor(self.kappa, self.kappa_prime, r)],
        )
    }
    fn scale(&self) -> f64 {
        self.kappa.max(self.kappa_prime)
    }
}

/// Difference kernel alone: `G_κ − G_{iκ′}` and its gradient.
pub struct DifferenceKernel {
    pub kappa: f64,
    pub kappa_prime: f64,
}

impl PairKernel<1, 1> for DifferenceKernel {
    type T = Complex64;
    #[inline]
    fn eval(&self, r: f64) -> ([Complex64; 1], [Complex64; 1]) {
        (
            [kernels::difference(self.kappa, self.kappa_prime, r)],
            [kernels::difference_grad_factor(self.kappa, self.kappa_prime, r)],
        )
    }
    fn scale(&self) -> f64 {
        self.kappa.max(self.kappa_prime)
    }
}

/// Output matrix as a combination of the per-channel forms:
/// `Σ_c a[c]·A_c + v[c]·V_c + Σ_d c[d]·C_d` where `A` is the vector
/// single layer, `V` the divergence single layer and `C` the double layer.
#[derive(Clone, Copy, Debug)]
pub struct Combination<T, const S: usize, const D: usize> {
    pub a: [T; S],
    pub v: [T; S],
    pub c: [T; D],
}

/// Quadrature settings for matrix assembly.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadratureOptions {
    /// Gauss points per direction for touching triangle pairs.
    pub singular_order: usize,
    /// Degree of the triangle rule used for nearby, non-touching pairs.
    pub regular_order: usize,
    /// Pairs with centroid distance / diameter above this use a 3-point rule.
    pub mid_ratio: f64,
    /// Pairs with centroid distance / diameter above this use the centroid rule.
    pub far_ratio: f64,
}

impl Default for QuadratureOptions {
    fn default() -> Self {
        Self { singular_order: 4, regular_order: 3, mid_ratio: 2.5, far_ratio: 6.0 }
    }
}

impl QuadratureOptions {
    /// Every pair integrated with the given orders, no distance grading.
    pub fn uniform(singular_order: usize, regular_order: usize) -> Self {
        Self { singular_order, regular_order, mid_ratio: f64::INFINITY, far_ratio: f64::INFINITY }
    }

    pub fn validate(&self) -> Result<()> {
        if !(1..=12).contains(&self.singular_order) || !(1..=10).contains(&self.regular_order) {
            return Err(Error::InvalidInput(format!(
                "quadrature orders out of range: singular {} (1..=12), regular {} (1..=10)",
                self.singular_order, self.regular_order
            )));
        }
        if !(self.far_ratio >= self.mid_ratio) || !(self.mid_ratio > 0.0) {
            return Err(Error::InvalidInput("need 0 < mid_ratio ≤ far_ratio".into()));
        }
        Ok(())
    }
}

/// Quadrature points relative to the triangle centroid, with weights.
type LocalRule = Vec<(Vec3, f64)>;

struct TriangleCache {
    near: Vec<LocalRule>,
    near_boosted: Vec<LocalRule>,
    mid: Vec<LocalRule>,
}

impl TriangleCache {
    fn new(space: &BasisSpace, opts: &QuadratureOptions) -> Result<Self> {
        let mesh = space.mesh();
        let near_rule = gauss_triangle_rule(opts.regular_order)?;
        let boosted_rule = gauss_triangle_rule((opts.regular_order + 2).min(10))?;
        let mid_rule = gauss_triangle_rule(2)?;
        let local = |rule: &crate::quadrature::TriangleRule, t: usize| -> LocalRule {
            let c = mesh.centroid(t);
            rule.physical(mesh.triangle_vertices(t)).into_iter().map(|(x, w)| (x - c, w)).collect()
        };
        let n = mesh.num_triangles();
        Ok(Self {
            near: (0..n).map(|t| local(&near_rule, t)).collect(),
            near_boosted: (0..n).map(|t| local(&boosted_rule, t)).collect(),
            mid: (0..n).map(|t| local(&mid_rule, t)).collect(),
        })
    }
}

/// Kernel moments of one channel over a triangle pair (coordinates relative
/// to the two centroids).
#[derive(Clone, Copy, Default)]
struct SlMoments<T> {
    i0: T,
    ix: [T; 3],
    iy: [T; 3],
    ixy: T,
}

#[derive(Clone, Copy, Default)]
struct DlMoments<T> {
    q0: T,
    q1: [T; 3],
    q2: [T; 3],
    q3: [T; 3],
}

fn dot3<T: Scalar>(a: &[T; 3], b: Vec3) -> T {
    a[0] * b.0[0] + a[1] * b.0[1] + a[2] * b.0[2]
}

/// Singular-order increment for steep or oscillatory kernels.
fn order_boost(scale_times_diam: f64) -> usize {
    if scale_times_diam <= 2.0 {
        0
    } else if scale_times_diam <= 4.0 {
        1
    } else if scale_times_diam <= 8.0 {
        2
    } else {
        3
    }
}

struct SingularRules {
    rules: Vec<[PairRule; 3]>, // indexed by boost
}

impl SingularRules {
    fn new(order: usize) -> Result<Self> {
        let mut rules = Vec::new();
        for b in 0..4 {
            let o = order + b;
            rules.push([
                PairRule::new(PairCase::Identical, o)?,
                PairRule::new(PairCase::CommonEdge, o)?,
                PairRule::new(PairCase::CommonVertex, o)?,
            ]);
        }
        Ok(Self { rules })
    }

    fn get(&self, case: PairCase, boost: usize) -> &PairRule {
        let r = &self.rules[boost];
        match case {
            PairCase::Identical => &r[0],
            PairCase::CommonEdge => &r[1],
            _ => &r[2],
        }
    }
}

/// Assemble matrices on `space × space` for a kernel family.
///
/// The returned matrices are symmetric by construction: only pairs `t ≤ s`
/// are integrated and the transpose is added.
pub fn assemble_engine<K, const S: usize, const D: usize>(
    kernel: &K,
    space: &BasisSpace,
    outputs: &[Combination<K::T, S, D>],
    opts: &QuadratureOptions,
) -> Result<Vec<Mat<K::T>>>
where
    K: PairKernel<S, D>,
{
    opts.validate()?;
    let mesh = space.mesh();
    let n = space.dof_count();
    let nt = mesh.num_triangles();
    let no = outputs.len();
    let cache = TriangleCache::new(space, opts)?;
    let singular = SingularRules::new(opts.singular_order)?;
    let scale = kernel.scale();
    let cutoff = kernel.cutoff().unwrap_or(f64::INFINITY);
    let has_dl = outputs.iter().any(|o| o.c.iter().any(|c| c.to_complex().norm() != 0.0));
    let has_sl = outputs
        .iter()
        .any(|o| o.a.iter().chain(o.v.iter()).any(|c| c.to_complex().norm() != 0.0));

    // Row-major accumulators P (upper pairs); full = P + Pᵀ.
    let mut acc: Vec<Vec<K::T>> = (0..no).map(|_| vec![K::T::default(); n * n]).collect();

    let chunk = 32usize;
    let mut start = 0;
    while start < nt {
        let end = (start + chunk).min(nt);
        let blocks: Vec<Result<(usize, Vec<Vec<K::T>>)>> = (start..end)
            .into_par_iter()
            .map(|t| {
                let pt = space.pieces_on(t);
                let mut block: Vec<Vec<K::T>> = (0..no).map(|_| vec![K::T::default(); pt.len() * n]).collect();
                for s in t..nt {
                    let ps = space.pieces_on(s);
                    if ps.is_empty() || pt.is_empty() {
                        continue;
                    }
                    let ct = mesh.centroid(t);
                    let cs = mesh.centroid(s);
                    let dist = (ct - cs).norm();
                    let diam = mesh.diameter(t).max(mesh.diameter(s));
                    if dist - diam > cutoff {
                        continue;
                    }
                    let half = if s == t { 0.5 } else { 1.0 };
                    let align = classify_pair(mesh.triangles()[t], mesh.triangles()[s]);
                    let ratio = dist / diam;
                    if align.case == PairCase::Disjoint && ratio > opts.far_ratio {
                        far_pair::<K, S, D>(kernel, outputs, pt, ps, ct - cs, mesh.area(t) * mesh.area(s) * half, &mut block, n);
                        continue;
                    }
                    let mut sl = [SlMoments::<K::T>::default(); S];
                    let mut dl = [DlMoments::<K::T>::default(); D];
                    let mut add = |xl: Vec3, yl: Vec3, w: f64| {
                        let d = (ct - cs) + (xl - yl);
                        let r = d.norm();
                        let (kv, hv) = kernel.eval(r);
                        if has_sl {
                            let xy = xl.dot(yl);
                            for c in 0..S {
                                let kw = kv[c] * w;
                                let m = &mut sl[c];
                                m.i0 += kw;
                                m.ixy += kw * xy;
                                for i in 0..3 {
                                    m.ix[i] += kw * xl.0[i];
                                    m.iy[i] += kw * yl.0[i];
                                }
                            }
                        }
                        if has_dl {
                            let xd = xl.cross(d);
                            let dy = d.cross(yl);
                            let q0 = xl.dot(dy);
                            for c in 0..D {
                                let hw = hv[c] * w;
                                let m = &mut dl[c];
                                m.q0 += hw * q0;
                                for i in 0..3 {
                                    m.q1[i] += hw * xd.0[i];
                                    m.q2[i] += hw * dy.0[i];
                                    m.q3[i] += hw * d.0[i];
                                }
                            }
                        }
                    };
                    match align.case {
                        PairCase::Disjoint => {
                            let boosted = scale * diam > 2.0;
                            let (rt, rs) = if ratio > opts.mid_ratio {
                                (&cache.mid[t], &cache.mid[s])
                            } else if boosted {
                                (&cache.near_boosted[t], &cache.near_boosted[s])
                            } else {
                                (&cache.near[t], &cache.near[s])
                            };
                            for &(xl, wx) in rt {
                                for &(yl, wy) in rs {
                                    add(xl, yl, wx * wy * half);
                                }
                            }
                        }
                        case => {
                            let boost = order_boost(scale * diam);
                            let rule = singular.get(case, boost);
                            let tt = permute(mesh.triangle_vertices(t), align.perm1);
                            let ts = permute(mesh.triangle_vertices(s), align.perm2);
                            for (x, y, w) in rule.physical(tt, ts) {
                                add(x - ct, y - cs, w * half);
                            }
                            if case == PairCase::Identical {
                                // Coplanar: the double-layer integrand vanishes identically.
                                dl = [DlMoments::default(); D];
                            }
                        }
                    }
                    scatter::<K::T, S, D>(outputs, &sl, &dl, pt, ps, &mut block, n);
                }
                Ok((t, block))
            })
            .collect();
        for b in blocks {
            let (t, block) = b?;
            for (i, p) in space.pieces_on(t).iter().enumerate() {
                for o in 0..no {
                    let dst = &mut acc[o][p.dof * n..(p.dof + 1) * n];
                    let src = &block[o][i * n..(i + 1) * n];
                    for (d, s) in dst.iter_mut().zip(src) {
                        *d += *s;
                    }
                }
            }
        }
        start = end;
    }

    let mut out = Vec::with_capacity(no);
    for a in acc.into_iter() {
        let m = Mat::from_fn(n, n, |i, j| a[i * n + j] + a[j * n + i]);
        drop(a);
        out.push(m);
    }
    Ok(out)
}

#[allow(clippy::too_many_arguments)]
#[inline]
fn far_pair<K, const S: usize, const D: usize>(
    kernel: &K,
    outputs: &[Combination<K::T, S, D>],
    pt: &[Piece],
    ps: &[Piece],
    d: Vec3,
    w: f64,
    block: &mut [Vec<K::T>],
    n: usize,
) where
    K: PairKernel<S, D>,
{
    // Centroid rule: basis values at the centroids are −β.
    let (kv, hv) = kernel.eval(d.norm());
    for (o, comb) in outputs.iter().enumerate() {
        let mut ka = K::T::default();
        let mut kvv = K::T::default();
        for c in 0..S {
            ka += comb.a[c] * kv[c];
            kvv += comb.v[c] * kv[c];
        }
        let mut kc = K::T::default();
        for c in 0..D {
            kc += comb.c[c] * hv[c];
        }
        let (ka, kvv, kc) = (ka * w, kvv * (4.0 * w), kc * w);
        let row = &mut block[o];
        for (i, pm) in pt.iter().enumerate() {
            for pn in ps {
                let bb = pm.beta.dot(pn.beta);
                let aa = pm.alpha * pn.alpha;
                let trip = pm.beta.dot(d.cross(pn.beta));
                row[i * n + pn.dof] += ka * bb + kvv * aa + kc * trip;
            }
        }
    }
}

#[inline]
fn scatter<T: Scalar, const S: usize, const D: usize>(
    outputs: &[Combination<T, S, D>],
    sl: &[SlMoments<T>; S],
    dl: &[DlMoments<T>; D],
    pt: &[Piece],
    ps: &[Piece],
    block: &mut [Vec<T>],
    n: usize,
) {
    for (o, comb) in outputs.iter().enumerate() {
        // Combine channel moments for this output.
        let mut a = SlMoments::<T>::default();
        let mut v0 = T::default();
        for c in 0..S {
            let (ca, cv) = (comb.a[c], comb.v[c]);
            a.i0 += ca * sl[c].i0;
            a.ixy += ca * sl[c].ixy;
            for i in 0..3 {
                a.ix[i] += ca * sl[c].ix[i];
                a.iy[i] += ca * sl[c].iy[i];
            }
            v0 += cv * sl[c].i0;
        }
        let mut q = DlMoments::<T>::default();
        for c in 0..D {
            let cc = comb.c[c];
            q.q0 += cc * dl[c].q0;
            for i in 0..3 {
                q.q1[i] += cc * dl[c].q1[i];
                q.q2[i] += cc * dl[c].q2[i];
                q.q3[i] += cc * dl[c].q3[i];
            }
        }
        let row = &mut block[o];
        for (i, pm) in pt.iter().enumerate() {
            let am = pm.alpha;
            let bm = pm.beta;
            let bm_iy = dot3(&a.iy, bm);
            let bm_q2 = dot3(&q.q2, bm);
            for pn in ps {
                let an = pn.alpha;
                let bn = pn.beta;
                let sl_val = a.ixy * (am * an) - dot3(&a.ix, bn) * am - bm_iy * an + a.i0 * bm.dot(bn) + v0 * (4.0 * am * an);
                let dl_val = q.q0 * (am * an) - dot3(&q.q1, bn) * am - bm_q2 * an + dot3(&q.q3, bn.cross(bm));
                row[i * n + pn.dof] += sl_val + dl_val;
            }
        }
    }
}

/// Wavenumber of a kernel `G_σ`: real (Helmholtz) or purely imaginary (Yukawa).
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Sigma {
    /// σ = κ > 0.
    Real(f64),
    /// σ = iκ′ with κ′ > 0.
    Imaginary(f64),
}

impl Sigma {
    pub fn squared(self) -> f64 {
        match self {
            Sigma::Real(k) => k * k,
            Sigma::Imaginary(k) => -k * k,
        }
    }

    fn validate(self) -> Result<()> {
        let v = match self {
            Sigma::Real(k) | Sigma::Imaginary(k) => k,
        };
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::InvalidInput(format!("wavenumber must be positive, got {v}")));
        }
        Ok(())
    }
}

fn single<const S: usize, const D: usize, T: Scalar>(a: T, v: T, c: T) -> [Combination<T, S, D>; 1] {
    [Combination { a: [a; S], v: [v; S], c: [c; D] }]
}

/// Assemble a `(A, V, C)` combination for σ on one space, returned as complex.
fn assemble_sigma(sigma: Sigma, space: &BasisSpace, a: f64, v: f64, c: f64, opts: &QuadratureOptions) -> Result<ComplexDenseMatrix> {
    sigma.validate()?;
    match sigma {
        Sigma::Imaginary(kp) => {
            let m = assemble_engine(&YukawaKernel { kappa_prime: kp }, space, &single::<1, 1, f64>(a, v, c), opts)?;
            Ok(to_complex(&m[0]))
        }
        Sigma::Real(k) => {
            let comb = single::<1, 1, Complex64>(a.into(), v.into(), c.into());
            Ok(assemble_engine(&HelmholtzKernel { kappa: k }, space, &comb, opts)?.remove(0))
        }
    }
}

fn same_space(test: &BasisSpace, trial: &BasisSpace) -> Result<()> {
    if !std::ptr::eq(test, trial) {
        return Err(Error::InvalidInput(
            "boundary-integral assembly supports identical test and trial spaces only".into(),
        ));
    }
    Ok(())
}

/// `∬ G_σ(x,y) f_m(x)·f_n(y)`.
pub fn assemble_vector_single_layer(sigma: Sigma, test: &BasisSpace, trial: &BasisSpace, opts: &QuadratureOptions) -> Result<ComplexDenseMatrix> {
    same_space(test, trial)?;
    assemble_sigma(sigma, test, 1.0, 0.0, 0.0, opts)
}

/// `∬ G_σ(x,y) div f_m(x) div f_n(y)`.
pub fn assemble_scalar_single_layer(sigma: Sigma, test: &BasisSpace, trial: &BasisSpace, opts: &QuadratureOptions) -> Result<ComplexDenseMatrix> {
    same_space(test, trial)?;
    assemble_sigma(sigma, test, 0.0, 1.0, 0.0, opts)
}

/// Weak single-layer (EFIE) operator `A − V/σ²`.
///
/// For σ = iκ′ this is `A + V/κ′²`, symmetric positive definite.
pub fn assemble_s(sigma: Sigma, test: &BasisSpace, trial: &BasisSpace, opts: &QuadratureOptions) -> Result<ComplexDenseMatrix> {
    same_space(test, trial)?;
    sigma.validate()?;
    assemble_sigma(sigma, test, 1.0, -1.0 / sigma.squared(), 0.0, opts)
}

/// Weak double-layer operator `p.v. ∬ f_m(x)·(∇_x G_σ(x,y) × f_n(y))`.
pub fn assemble_c(sigma: Sigma, test: &BasisSpace, trial: &BasisSpace, opts: &QuadratureOptions) -> Result<ComplexDenseMatrix> {
    same_space(test, trial)?;
    assemble_sigma(sigma, test, 0.0, 0.0, 1.0, opts)
}

/// Double layer with the difference kernel `∇_x (G_κ − G_{iκ′})`.
pub fn assemble_c_delta(kappa: f64, kappa_prime: f64, rt0: &BasisSpace, opts: &QuadratureOptions) -> Result<ComplexDenseMatrix> {
    crate::kernels::Wavenumber::new(kappa, kappa_prime)?;
    let comb = single::<1, 1, Complex64>(0.0.into(), 0.0.into(), 1.0.into());
    Ok(assemble_engine(&DifferenceKernel { kappa, kappa_prime }, rt0, &comb, opts)?.remove(0))
}

/// `M = (κ′² + iη) A_{iκ′} + (1 − iη/κ²) V_{iκ′}` on RT0.
pub fn assemble_m(kappa: f64, kappa_prime: f64, eta: f64, rt0: &BasisSpace, opts: &QuadratureOptions) -> Result<ComplexDenseMatrix> {
    crate::kernels::Wavenumber::new(kappa, kappa_prime)?;
    crate::kernels::CouplingParameter::new(eta)?;
    let [p, q] = yukawa_pair(kappa, kappa_prime, rt0, opts)?;
    Ok(combine_m(&p, &q, eta))
}

/// `Z = iη (δA − δV/κ²)` on RT0, δ denoting the kernel `G_κ − G_{iκ′}`.
pub fn assemble_z(kappa: f64, kappa_prime: f64, eta: f64, rt0: &BasisSpace, opts: &QuadratureOptions) -> Result<ComplexDenseMatrix> {
    crate::kernels::Wavenumber::new(kappa, kappa_prime)?;
    crate::kernels::CouplingParameter::new(eta)?;
    let w = -1.0 / (kappa * kappa);
    let comb = single::<1, 1, Complex64>(Complex64::new(0.0, eta), Complex64::new(0.0, eta * w), 0.0.into());
    Ok(assemble_engine(&DifferenceKernel { kappa, kappa_prime }, rt0, &comb, opts)?.remove(0))
}

fn yukawa_pair(kappa: f64, kappa_prime: f64, rt0: &BasisSpace, opts: &QuadratureOptions) -> Result<[RealDenseMatrix; 2]> {
    let k2 = kappa * kappa;
    let outs = [
        Combination { a: [kappa_prime * kappa_prime], v: [1.0], c: [0.0] },
        Combination { a: [1.0], v: [-1.0 / k2], c: [0.0] },
    ];
    let mut m = assemble_engine(&YukawaKernel { kappa_prime }, rt0, &outs, opts)?;
    let q = m.pop().expect("two outputs");
    let p = m.pop().expect("two outputs");
    Ok([p, q])
}

/// `M = P + iη Q` from `P = κ′²A + V` and `Q = A − V/κ²` (Yukawa kernel).
pub fn combine_m(p: &RealDenseMatrix, q: &RealDenseMatrix, eta: f64) -> ComplexDenseMatrix {
    Mat::from_fn(p.nrows(), p.ncols(), |i, j| Complex64::new(p[(i, j)], eta * q[(i, j)]))
}

/// All primal-space matrices needed by the system, from one assembly sweep.
pub struct PrimalBlocks {
    /// `κ′² A_{iκ′} + V_{iκ′}` (real, SPD): the η-independent part of M.
    pub p: RealDenseMatrix,
    /// `A_{iκ′} − V_{iκ′}/κ²` (real): M = P + iη Q.
    pub q: RealDenseMatrix,
    /// EFIE matrix `A_κ − V_κ/κ²`; M + Z = P + iη E.
    pub efie: ComplexDenseMatrix,
    /// Difference double layer `δC`.
    pub c_delta: ComplexDenseMatrix,
}

impl PrimalBlocks {
    pub fn m(&self, eta: f64) -> ComplexDenseMatrix {
        combine_m(&self.p, &self.q, eta)
    }

    pub fn z(&self, eta: f64) -> ComplexDenseMatrix {
        let i_eta = Complex64::new(0.0, eta);
        Mat::from_fn(self.p.nrows(), self.p.ncols(), |i, j| i_eta * (self.efie[(i, j)] - self.q[(i, j)]))
    }

    /// `M + Z = P + iη E`.
    pub fn m_plus_z(&self, eta: f64) -> ComplexDenseMatrix {
        let i_eta = Complex64::new(0.0, eta);
        Mat::from_fn(self.p.nrows(), self.p.ncols(), |i, j| self.p[(i, j)] + i_eta * self.efie[(i, j)])
    }
}

pub fn assemble_primal_blocks(kappa: f64, kappa_prime: f64, rt0: &BasisSpace, opts: &QuadratureOptions) -> Result<PrimalBlocks> {
    crate::kernels::Wavenumber::new(kappa, kappa_prime)?;
    if rt0.kind() != SpaceKind::Rt0 {
        return Err(Error::InvalidInput("primal blocks need the RT0 space".into()));
    }
    let z = Complex64::new(0.0, 0.0);
    let one = Complex64::new(1.0, 0.0);
    let w = Complex64::new(-1.0 / (kappa * kappa), 0.0);
    let outs = [
        Combination { a: [Complex64::new(kappa_prime * kappa_prime, 0.0), z], v: [one, z], c: [z] },
        Combination { a: [one, z], v: [w, z], c: [z] },
        Combination { a: [one, one], v: [w, w], c: [z] },
        Combination { a: [z, z], v: [z, z], c: [one] },
    ];
    let mut m = assemble_engine(&CoarseKernel { kappa, kappa_prime }, rt0, &outs, opts)?;
    let c_delta = m.pop().expect("four outputs");
    let efie = m.pop().expect("four outputs");
    let q = real_part(&m.pop().expect("four outputs"));
    let p = real_part(&m.pop().expect("four outputs"));
    Ok(PrimalBlocks { p, q, efie, c_delta })
}

/// Dual-space (BC) Yukawa matrices `S = A + V/κ′²` and `C`.
pub struct DualBlocks {
    pub s: RealDenseMatrix,
    pub c: RealDenseMatrix,
}

pub fn assemble_dual_blocks(kappa_prime: f64, bc: &BasisSpace, opts: &QuadratureOptions) -> Result<DualBlocks> {
    Sigma::Imaginary(kappa_prime).validate()?;
    let outs = [
        Combination { a: [1.0], v: [1.0 / (kappa_prime * kappa_prime)], c: [0.0] },
        Combination { a: [0.0], v: [0.0], c: [1.0] },
    ];
    let mut m = assemble_engine(&YukawaKernel { kappa_prime }, bc, &outs, opts)?;
    let c = m.pop().expect("two outputs");
    let s = m.pop().expect("two outputs");
    Ok(DualBlocks { s, c })
}

/// `K = ½ G̃ + C_{iκ′}` on the BC space.
pub fn assemble_k(kappa_prime: f64, bc: &BasisSpace, opts: &QuadratureOptions) -> Result<RealDenseMatrix> {
    let d = assemble_dual_blocks(kappa_prime, bc, opts)?;
    let g = assemble_pairing(bc, bc)?;
    Ok(Mat::from_fn(d.c.nrows(), d.c.ncols(), |i, j| 0.5 * g[(i, j)] + d.c[(i, j)]))
}

/// Pairing matrix `∫ (v_m × n)·u_n` between two spaces on the same mesh.
///
/// Use [`crate::spaces::refine_rt0`] to bring RT0 functions onto the
/// refinement before pairing them with BC functions.
pub fn assemble_pairing(test: &BasisSpace, trial: &BasisSpace) -> Result<RealDenseMatrix> {
    let mesh = test.mesh();
    if mesh.num_triangles() != trial.mesh().num_triangles() {
        return Err(Error::InvalidInput("pairing needs both spaces on the same mesh".into()));
    }
    // Degree-2 rule integrates the bilinear integrand exactly.
    let rule = gauss_triangle_rule(2)?;
    let mut g = Mat::<f64>::zeros(test.dof_count(), trial.dof_count());
    for t in 0..mesh.num_triangles() {
        let c = mesh.centroid(t);
        let n = mesh.normal(t);
        let pts = rule.physical(mesh.triangle_vertices(t));
        for pm in test.pieces_on(t) {
            for pn in trial.pieces_on(t) {
                let v: f64 = pts
                    .iter()
                    .map(|&(x, w)| w * pm.value(x, c).cross(n).dot(pn.value(x, c)))
                    .sum();
                g[(pm.dof, pn.dof)] += v;
            }
        }
    }
    Ok(g)
}

/// Gram matrix `[G]_{mn} = ∫ (v_m × n)·u_n` of BC test and RT0 trial functions.
pub fn assemble_gram(bc: &BasisSpace, rt0_refined: &BasisSpace) -> Result<RealDenseMatrix> {
    if bc.kind() != SpaceKind::BuffaChristiansen || rt0_refined.kind() != SpaceKind::Rt0Refined {
        return Err(Error::InvalidInput("Gram matrix needs a BC test space and a refined RT0 trial space".into()));
    }
    assemble_pairing(bc, rt0_refined)
}

pub fn to_complex(m: &RealDenseMatrix) -> ComplexDenseMatrix {
    Mat::from_fn(m.nrows(), m.ncols(), |i, j| Complex64::new(m[(i, j)], 0.0))
}

pub fn real_part(m: &ComplexDenseMatrix) -> RealDenseMatrix {
    Mat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)].re)
}

/// Largest imaginary part in absolute value.
pub fn max_imag(m: &ComplexDenseMatrix) -> f64 {
    let mut v: f64 = 0.0;
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            v = v.max(m[(i, j)].im.abs());
        }
    }
    v
}

/// `‖X − Xᵀ‖_F / ‖X‖_F`.
pub fn relative_asymmetry(m: &ComplexDenseMatrix) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            num += (m[(i, j)] - m[(j, i)]).norm_sqr();
            den += m[(i, j)].norm_sqr();
        }
    }
    (num / den).sqrt()
}

const MATRIX_MAGIC: &[u8; 8] = b"CFIEMAT1";

/// Write a matrix as: magic, rows (u64), cols (u64), then row-major
/// interleaved real/imaginary f64 values, all little-endian.
pub fn write_matrix<W: Write>(m: &ComplexDenseMatrix, mut w: W) -> Result<()> {
    w.write_all(MATRIX_MAGIC)?;
    w.write_all(&(m.nrows() as u64).to_le_bytes())?;
    w.write_all(&(m.ncols() as u64).to_le_bytes())?;
    let mut buf = Vec::with_capacity(16 * m.ncols());
    for i in 0..m.nrows() {
        buf.clear();
        for j in 0..m.ncols() {
            buf.extend_from_slice(&m[(i, j)].re.to_le_bytes());
            buf.extend_from_slice(&m[(i, j)].im.to_le_bytes());
        }
        w.write_all(&buf)?;
    }
    Ok(())
}

/// Read a matrix written by [`write_matrix`].
pub fn read_matrix<R: Read>(mut r: R) -> Result<ComplexDenseMatrix> {
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != MATRIX_MAGIC {
        return Err(Error::Parse("not a matrix dump (bad magic)".into()));
    }
    let mut b8 = [0u8; 8];
    r.read_exact(&mut b8)?;
    let rows = u64::from_le_bytes(b8) as usize;
    r.read_exact(&mut b8)?;
    let cols = u64::from_le_bytes(b8) as usize;
    let mut m = Mat::<Complex64>::zeros(rows, cols);
    for i in 0..rows {
        for j in 0..cols {
            r.read_exact(&mut b8)?;
            let re = f64::from_le_bytes(b8);
            r.read_exact(&mut b8)?;
            let im = f64::from_le_bytes(b8);
            m[(i, j)] = Complex64::new(re, im);
        }
    }
    Ok(m)
}
