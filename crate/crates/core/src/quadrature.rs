//! Triangle rules and regularizing rules for double integrals over triangle pairs.
//!
//! Reference triangle coordinates `(s, t)` denote the point
//! `P0 + s (P1 − P0) + t (P2 − P0)`, i.e. barycentric `(1 − s − t, s, t)`.

use crate::error::{Error, Result};
use crate::geom::Vec3;
use num_complex::Complex64;

/// Quadrature rule on the reference triangle (weights sum to 1/2).
#[derive(Clone, Debug)]
pub struct TriangleRule {
    pub points: Vec<[f64; 2]>,
    pub weights: Vec<f64>,
}

impl TriangleRule {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Barycentric coordinates of point `i`.
    pub fn barycentric(&self, i: usize) -> [f64; 3] {
        let [s, t] = self.points[i];
        [1.0 - s - t, s, t]
    }

    /// Physical points and weights (including the Jacobian 2A) on a triangle.
    pub fn physical(&self, tri: [Vec3; 3]) -> Vec<(Vec3, f64)> {
        let [a, b, c] = tri;
        let jac = (b - a).cross(c - a).norm();
        self.points
            .iter()
            .zip(&self.weights)
            .map(|(&[s, t], &w)| (a + (b - a) * s + (c - a) * t, w * jac))
            .collect()
    }

    fn from_orbits(orbits: &[(f64, &[[f64; 3]])]) -> Self {
        // Expand each barycentric generator into its symmetry orbit.
        let mut points = Vec::new();
        let mut weights = Vec::new();
        for &(w, gens) in orbits {
            for g in gens {
                for p in orbit(*g) {
                    points.push([p[1], p[2]]);
                    weights.push(0.5 * w);
                }
            }
        }
        Self { points, weights }
    }
}

fn orbit(g: [f64; 3]) -> Vec<[f64; 3]> {
    let perms = [[0, 1, 2], [1, 2, 0], [2, 0, 1], [0, 2, 1], [2, 1, 0], [1, 0, 2]];
    let mut out: Vec<[f64; 3]> = Vec::new();
    for p in perms {
        let q = [g[p[0]], g[p[1]], g[p[2]]];
        if !out.iter().any(|o| (0..3).all(|i| (o[i] - q[i]).abs() < 1e-15)) {
            out.push(q);
        }
    }
    out
}

/// Symmetric rule on the reference triangle exact for polynomials of total
/// degree `order` (1..=10), with positive weights.
pub fn gauss_triangle_rule(order: usize) -> Result<TriangleRule> {
    match order {
        1 => Ok(TriangleRule::from_orbits(&[(1.0, &[[1.0 / 3.0; 3]])])),
        2 => Ok(TriangleRule::from_orbits(&[(1.0 / 3.0, &[[2.0 / 3.0, 1.0 / 6.0, 1.0 / 6.0]])])),
        3 | 4 => Ok(TriangleRule::from_orbits(&[
            (0.223381589678011, &[[0.108103018168070, 0.445948490915965, 0.445948490915965]]),
            (0.109951743655322, &[[0.816847572980459, 0.091576213509771, 0.091576213509771]]),
        ])),
        5 => Ok(TriangleRule::from_orbits(&[
            (0.225, &[[1.0 / 3.0; 3]]),
            (0.132394152788506, &[[0.059715871789770, 0.470142064105115, 0.470142064105115]]),
            (0.125939180544827, &[[0.797426985353087, 0.101286507323456, 0.101286507323456]]),
        ])),
        6..=10 => Ok(symmetrized_collapsed_rule(order)),
        _ => Err(Error::Quadrature(format!("unsupported triangle rule order {order}"))),
    }
}

/// Collapsed tensor Gauss rule, averaged over the six vertex permutations.
fn symmetrized_collapsed_rule(degree: usize) -> TriangleRule {
    let n = (degree + 3) / 2;
    let (x, w) = gauss_legendre(n);
    let mut points = Vec::new();
    let mut weights = Vec::new();
    let perms = [[0, 1, 2], [1, 2, 0], [2, 0, 1], [0, 2, 1], [2, 1, 0], [1, 0, 2]];
    for i in 0..n {
        for j in 0..n {
            let s = x[i];
            let t = (1.0 - x[i]) * x[j];
            let wt = w[i] * w[j] * (1.0 - x[i]);
            let b = [1.0 - s - t, s, t];
            for p in perms {
                points.push([b[p[1]], b[p[2]]]);
                weights.push(wt / 6.0);
            }
        }
    }
    TriangleRule { points, weights }
}

/// Gauss–Legendre nodes and weights on [0, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "Gauss-Legendre needs at least one point");
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n {
        // Newton iteration on P_n starting from the Chebyshev-like guess.
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[n - 1 - i] = 0.5 * (1.0 + z);
        w[n - 1 - i] = 1.0 / ((1.0 - z * z) * dp * dp);
    }
    (x, w)
}

/// Relative position of two triangles.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum PairCase {
    Identical,
    CommonEdge,
    CommonVertex,
    Disjoint,
}

/// Classification plus vertex permutations that put the shared vertices first
/// (in matching positions) in both triangles.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PairAlignment {
    pub case: PairCase,
    pub perm1: [usize; 3],
    pub perm2: [usize; 3],
}

fn alignment_from_matches(matches: &[(usize, usize)]) -> PairAlignment {
    let complete = |shared: &[usize]| -> [usize; 3] {
        let mut p = [0; 3];
        p[..shared.len()].copy_from_slice(shared);
        let mut k = shared.len();
        for i in 0..3 {
            if !shared.contains(&i) {
                p[k] = i;
                k += 1;
            }
        }
        p
    };
    let s1: Vec<usize> = matches.iter().map(|m| m.0).collect();
    let s2: Vec<usize> = matches.iter().map(|m| m.1).collect();
    let case = match matches.len() {
        3 => PairCase::Identical,
        2 => PairCase::CommonEdge,
        1 => PairCase::CommonVertex,
        _ => PairCase::Disjoint,
    };
    PairAlignment { case, perm1: complete(&s1), perm2: complete(&s2) }
}

/// Classify two triangles of the same mesh by their vertex indices.
///
/// Shared vertices are ordered by ascending global index so the alignment
/// does not depend on which triangle comes first.
pub fn classify_pair(a: [usize; 3], b: [usize; 3]) -> PairAlignment {
    let mut matches: Vec<(usize, usize, usize)> = Vec::with_capacity(3);
    for i in 0..3 {
        for j in 0..3 {
            if a[i] == b[j] {
                matches.push((a[i], i, j));
            }
        }
    }
    matches.sort_unstable();
    let m: Vec<(usize, usize)> = matches.iter().map(|&(_, i, j)| (i, j)).collect();
    alignment_from_matches(&m)
}

/// Classify two triangles by coordinates (for pairs across different meshes).
pub fn classify_pair_coords(a: [Vec3; 3], b: [Vec3; 3]) -> Result<PairAlignment> {
    let diam = a
        .iter()
        .chain(b.iter())
        .flat_map(|p| a.iter().chain(b.iter()).map(move |q| (*p - *q).norm()))
        .fold(0.0, f64::max);
    let tol = 1e-12 * diam.max(f64::MIN_POSITIVE);
    let mut matches: Vec<(usize, usize)> = Vec::new();
    for i in 0..3 {
        let hits: Vec<usize> = (0..3).filter(|&j| (a[i] - b[j]).norm() <= tol).collect();
        if hits.len() > 1 {
            return Err(Error::Quadrature("vertex matches several vertices of the other triangle".into()));
        }
        if let Some(&j) = hits.first() {
            if matches.iter().any(|m| m.1 == j) {
                return Err(Error::Quadrature("inconsistent vertex matching between triangles".into()));
            }
            matches.push((i, j));
        }
    }
    matches.sort_by(|x, y| a[x.0].0.partial_cmp(&a[y.0].0).unwrap_or(std::cmp::Ordering::Equal));
    Ok(alignment_from_matches(&matches))
}

/// Nodes of a rule over a triangle pair: reference coordinates on each
/// (aligned) triangle and a weight; weights sum to 1/4.
#[derive(Clone, Debug)]
pub struct PairRule {
    pub case: PairCase,
    pub nodes: Vec<([f64; 2], [f64; 2], f64)>,
}

impl PairRule {
    /// Build the rule for a case with `order` Gauss points per direction.
    pub fn new(case: PairCase, order: usize) -> Result<Self> {
        if order == 0 || order > 40 {
            return Err(Error::Quadrature(format!("unsupported pair rule order {order}")));
        }
        let (g, gw) = gauss_legendre(order);
        let mut nodes = Vec::new();
        // Sauter–Schwab reference triangle {0 ≤ x2 ≤ x1 ≤ 1}; convert to (s,t) = (x1 − x2, x2).
        let st = |p: (f64, f64)| [p.0 - p.1, p.1];
        match case {
            PairCase::Disjoint => {
                let tri = collapsed_rule(order);
                for (p, w) in tri.points.iter().zip(&tri.weights) {
                    for (q, v) in tri.points.iter().zip(&tri.weights) {
                        nodes.push((*p, *q, w * v));
                    }
                }
            }
            PairCase::Identical => {
                for a in 0..order {
                    for b in 0..order {
                        for c in 0..order {
                            for d in 0..order {
                                let (xi, e1, e2, e3) = (g[a], g[b], g[c], g[d]);
                                let w = gw[a] * gw[b] * gw[c] * gw[d] * xi.powi(3) * e1 * e1 * e2;
                                let maps = [
                                    ((xi, xi * (1.0 - e1 + e1 * e2)), (xi * (1.0 - e1 * e2 * e3), xi * (1.0 - e1))),
                                    ((xi, xi * e1 * (1.0 - e2 + e2 * e3)), (xi * (1.0 - e1 * e2), xi * e1 * (1.0 - e2))),
                                    ((xi * (1.0 - e1 * e2 * e3), xi * e1 * (1.0 - e2 * e3)), (xi, xi * e1 * (1.0 - e2))),
                                ];
                                for (x, y) in maps {
                                    nodes.push((st(x), st(y), w));
                                    nodes.push((st(y), st(x), w));
                                }
                            }
                        }
                    }
                }
            }
            PairCase::CommonEdge => {
                for a in 0..order {
                    for b in 0..order {
                        for c in 0..order {
                            for d in 0..order {
                                let (xi, e1, e2, e3) = (g[a], g[b], g[c], g[d]);
                                let w0 = gw[a] * gw[b] * gw[c] * gw[d] * xi.powi(3) * e1 * e1;
                                let w = w0 * e2;
                                nodes.push((st((xi, xi * e1 * e3)), st((xi * (1.0 - e1 * e2), xi * e1 * (1.0 - e2))), w0));
                                nodes.push((st((xi, xi * e1)), st((xi * (1.0 - e1 * e2 * e3), xi * e1 * e2 * (1.0 - e3))), w));
                                nodes.push((st((xi * (1.0 - e1 * e2), xi * e1 * (1.0 - e2))), st((xi, xi * e1 * e2 * e3)), w));
                                nodes.push((st((xi * (1.0 - e1 * e2 * e3), xi * e1 * e2 * (1.0 - e3))), st((xi, xi * e1)), w));
                                nodes.push((st((xi * (1.0 - e1 * e2 * e3), xi * e1 * (1.0 - e2 * e3))), st((xi, xi * e1 * e2)), w));
                            }
                        }
                    }
                }
            }
            PairCase::CommonVertex => {
                for a in 0..order {
                    for b in 0..order {
                        for c in 0..order {
                            for d in 0..order {
                                let (xi, e1, e2, e3) = (g[a], g[b], g[c], g[d]);
                                let w = gw[a] * gw[b] * gw[c] * gw[d] * xi.powi(3) * e2;
                                let x = (xi, xi * e1);
                                let y = (xi * e2, xi * e2 * e3);
                                nodes.push((st(x), st(y), w));
                                nodes.push((st(y), st(x), w));
                            }
                        }
                    }
                }
            }
        }
        Ok(Self { case, nodes })
    }

    /// Physical node pairs `(x, y, w)` on aligned triangles; `w` includes both Jacobians.
    pub fn physical(&self, t1: [Vec3; 3], t2: [Vec3; 3]) -> Vec<(Vec3, Vec3, f64)> {
        let jac = (t1[1] - t1[0]).cross(t1[2] - t1[0]).norm() * (t2[1] - t2[0]).cross(t2[2] - t2[0]).norm();
        let map = |t: &[Vec3; 3], [s, u]: [f64; 2]| t[0] + (t[1] - t[0]) * s + (t[2] - t[0]) * u;
        self.nodes
            .iter()
            .map(|&(p, q, w)| (map(&t1, p), map(&t2, q), w * jac))
            .collect()
    }
}

/// Collapsed (Duffy) tensor rule with `n` points per direction.
fn collapsed_rule(n: usize) -> TriangleRule {
    let (x, w) = gauss_legendre(n);
    let mut points = Vec::with_capacity(n * n);
    let mut weights = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            points.push([x[i], (1.0 - x[i]) * x[j]]);
            weights.push(w[i] * w[j] * (1.0 - x[i]));
        }
    }
    TriangleRule { points, weights }
}

/// Reorder triangle vertices by a permutation.
pub fn permute(t: [Vec3; 3], p: [usize; 3]) -> [Vec3; 3] {
    [t[p[0]], t[p[1]], t[p[2]]]
}

/// `∬_{T1×T2} kernel(x, y) dy dx` with the rule matching the pair `case`.
///
/// `order` is the number of Gauss points per integration direction. The
/// result is averaged with the rule applied to the swapped pair, which makes
/// it exactly symmetric under `(T1, T2, k) ↔ (T2, T1, k̃)`.
pub fn integrate_pair<F>(kernel: F, t1: [Vec3; 3], t2: [Vec3; 3], case: PairCase, order: usize) -> Result<Complex64>
where
    F: Fn(Vec3, Vec3) -> Complex64,
{
    let align = classify_pair_coords(t1, t2)?;
    if align.case != case {
        return Err(Error::Quadrature(format!("pair is {:?}, not {case:?}", align.case)));
    }
    let rule = PairRule::new(case, order)?;
    let a1 = permute(t1, align.perm1);
    let a2 = permute(t2, align.perm2);
    let mut forward = Complex64::new(0.0, 0.0);
    for (x, y, w) in rule.physical(a1, a2) {
        forward += kernel(x, y) * w;
    }
    let mut backward = Complex64::new(0.0, 0.0);
    for (y, x, w) in rule.physical(a2, a1) {
        backward += kernel(x, y) * w;
    }
    let v = 0.5 * (forward + backward);
    if !v.re.is_finite() || !v.im.is_finite() {
        return Err(Error::Quadrature("non-finite kernel evaluation".into()));
    }
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn factorial(n: u32) -> f64 {
        (1..=n).map(f64::from).product()
    }

    /// ∫ s^a t^b over the reference triangle = a! b! / (a + b + 2)!.
    fn monomial(a: u32, b: u32) -> f64 {
        factorial(a) * factorial(b) / factorial(a + b + 2)
    }

    #[test]
    fn centroid_rule() {
        let r = gauss_triangle_rule(1).unwrap();
        assert_eq!(r.len(), 1);
        assert!((r.points[0][0] - 1.0 / 3.0).abs() < 1e-15);
        assert!((r.weights[0] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn rules_are_exact_and_positive() {
        for order in 1..=10 {
            let r = gauss_triangle_rule(order).unwrap();
            assert!(r.weights.iter().all(|&w| w > 0.0));
            for a in 0..=order as u32 {
                for b in 0..=(order as u32 - a) {
                    let q: f64 = r
                        .points
                        .iter()
                        .zip(&r.weights)
                        .map(|(p, w)| w * p[0].powi(a as i32) * p[1].powi(b as i32))
                        .sum();
                    assert!((q - monomial(a, b)).abs() < 1e-13, "order {order}, s^{a} t^{b}: {q}");
                }
            }
        }
    }

    #[test]
    fn rules_are_symmetric() {
        for order in 1..=10 {
            let r = gauss_triangle_rule(order).unwrap();
            // Swapping two barycentric coordinates maps the rule onto itself.
            for (p, w) in r.points.iter().zip(&r.weights) {
                let q = [p[1], p[0]];
                let found = r
                    .points
                    .iter()
                    .zip(&r.weights)
                    .any(|(x, v)| (x[0] - q[0]).abs() < 1e-12 && (x[1] - q[1]).abs() < 1e-12 && (v - w).abs() < 1e-14);
                assert!(found, "order {order}");
            }
        }
    }

    #[test]
    fn x2y_integral() {
        for order in 3..=10 {
            let r = gauss_triangle_rule(order).unwrap();
            let q: f64 = r.points.iter().zip(&r.weights).map(|(p, w)| w * p[0] * p[0] * p[1]).sum();
            assert!((q - 1.0 / 60.0).abs() < 1e-14);
        }
    }

    #[test]
    fn unsupported_orders() {
        assert!(gauss_triangle_rule(0).is_err());
        assert!(gauss_triangle_rule(11).is_err());
    }

    #[test]
    fn gauss_legendre_exactness() {
        for n in 1..12 {
            let (x, w) = gauss_legendre(n);
            for k in 0..2 * n {
                let q: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(k as i32)).sum();
                assert!((q - 1.0 / (k as f64 + 1.0)).abs() < 1e-14, "n={n} k={k}");
            }
        }
    }

    #[test]
    fn pair_weights_sum_to_quarter() {
        for case in [PairCase::Identical, PairCase::CommonEdge, PairCase::CommonVertex, PairCase::Disjoint] {
            for order in 2..6 {
                let r = PairRule::new(case, order).unwrap();
                let s: f64 = r.nodes.iter().map(|n| n.2).sum();
                assert!((s - 0.25).abs() < 1e-14, "{case:?} {order}");
                for (p, q, _) in &r.nodes {
                    for c in [p, q] {
                        assert!(c[0] >= -1e-15 && c[1] >= -1e-15 && c[0] + c[1] <= 1.0 + 1e-15);
                    }
                }
            }
        }
    }

    #[test]
    fn classification() {
        assert_eq!(classify_pair([0, 1, 2], [2, 0, 1]).case, PairCase::Identical);
        assert_eq!(classify_pair([0, 1, 2], [1, 0, 3]).case, PairCase::CommonEdge);
        assert_eq!(classify_pair([0, 1, 2], [5, 4, 2]).case, PairCase::CommonVertex);
        assert_eq!(classify_pair([0, 1, 2], [3, 4, 5]).case, PairCase::Disjoint);
        let a = classify_pair([7, 3, 9], [3, 12, 7]);
        assert_eq!([7, 3, 9][a.perm1[0]], [3, 12, 7][a.perm2[0]]);
        assert_eq!([7, 3, 9][a.perm1[1]], [3, 12, 7][a.perm2[1]]);
    }
}
