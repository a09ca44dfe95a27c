//! Raviart–Thomas (RWG) functions on the primal mesh and Buffa–Christiansen
//! functions on its barycentric refinement.
//!
//! Every basis function is affine on each triangle of its support. On a
//! triangle with centroid `c` it is stored as `f(x) = α (x − c) − β`, so its
//! surface divergence there is the constant `2α`.

use crate::error::{Error, Result};
use crate::geom::{CVec3, Vec3};
use crate::mesh::{RefinedMesh, TriangleMesh};
use num_complex::Complex64;
use std::collections::HashMap;
use std::sync::Arc;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SpaceKind {
    /// Lowest-order Raviart–Thomas on the primal mesh.
    Rt0,
    /// Lowest-order Raviart–Thomas functions of the primal mesh, restricted
    /// to the triangles of its barycentric refinement.
    Rt0Refined,
    /// Buffa–Christiansen functions on the barycentric refinement.
    BuffaChristiansen,
}

/// Restriction of one basis function to one triangle.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Piece {
    pub dof: usize,
    pub alpha: f64,
    pub beta: Vec3,
}

impl Piece {
    #[inline]
    pub fn value(&self, x: Vec3, centroid: Vec3) -> Vec3 {
        (x - centroid) * self.alpha - self.beta
    }

    #[inline]
    pub fn divergence(&self) -> f64 {
        2.0 * self.alpha
    }
}

/// A finite-dimensional space of div-conforming tangential fields.
#[derive(Clone, Debug)]
pub struct BasisSpace {
    kind: SpaceKind,
    mesh: Arc<TriangleMesh>,
    dof_count: usize,
    offsets: Vec<usize>,
    pieces: Vec<Piece>,
    supports: Vec<Vec<usize>>,
    orientation: Vec<[usize; 2]>,
}

impl BasisSpace {
    fn from_triangle_pieces(
        kind: SpaceKind,
        mesh: Arc<TriangleMesh>,
        dof_count: usize,
        per_triangle: Vec<Vec<Piece>>,
        orientation: Vec<[usize; 2]>,
    ) -> Self {
        let mut offsets = Vec::with_capacity(per_triangle.len() + 1);
        let mut pieces = Vec::new();
        let mut supports = vec![Vec::new(); dof_count];
        offsets.push(0);
        for (t, list) in per_triangle.into_iter().enumerate() {
            for p in list {
                supports[p.dof].push(t);
                pieces.push(p);
            }
            offsets.push(pieces.len());
        }
        Self { kind, mesh, dof_count, offsets, pieces, supports, orientation }
    }

    pub fn kind(&self) -> SpaceKind {
        self.kind
    }

    /// Mesh the pieces live on (primal for RT0, refined for the others).
    pub fn mesh(&self) -> &TriangleMesh {
        &self.mesh
    }

    pub fn mesh_arc(&self) -> Arc<TriangleMesh> {
        self.mesh.clone()
    }

    pub fn dof_count(&self) -> usize {
        self.dof_count
    }

    /// All basis pieces living on triangle `t`.
    #[inline]
    pub fn pieces_on(&self, t: usize) -> &[Piece] {
        &self.pieces[self.offsets[t]..self.offsets[t + 1]]
    }

    /// Triangles on which basis function `dof` is nonzero.
    pub fn support(&self, dof: usize) -> &[usize] {
        &self.supports[dof]
    }

    /// Reference primal edge `(a, b)`, `a < b`, of each DOF.
    pub fn orientation(&self, dof: usize) -> [usize; 2] {
        self.orientation[dof]
    }

    /// Largest number of pieces on a single triangle.
    pub fn max_pieces_per_triangle(&self) -> usize {
        self.offsets.windows(2).map(|w| w[1] - w[0]).max().unwrap_or(0)
    }
}

/// One RWG function per primal edge, `±(ℓ/2A)(x − p_opp)`, flowing from the
/// edge's plus triangle into its minus triangle.
pub fn build_rt0_space(mesh: Arc<TriangleMesh>) -> BasisSpace {
    let mut per_triangle: Vec<Vec<Piece>> = vec![Vec::with_capacity(3); mesh.num_triangles()];
    for t in 0..mesh.num_triangles() {
        let verts = mesh.triangle_vertices(t);
        let c = mesh.centroid(t);
        for i in 0..3 {
            let e = mesh.triangle_edges()[t][i];
            let sign = mesh.triangle_edge_signs()[t][i];
            let alpha = sign * mesh.edge_length(e) / (2.0 * mesh.area(t));
            per_triangle[t].push(Piece { dof: e, alpha, beta: (verts[i] - c) * alpha });
        }
    }
    let orientation = mesh.edges().to_vec();
    let n = mesh.num_edges();
    BasisSpace::from_triangle_pieces(SpaceKind::Rt0, mesh, n, per_triangle, orientation)
}

/// Restrict primal RT0 functions to the fine triangles of a refinement.
pub fn refine_rt0(rt0: &BasisSpace, refined: &RefinedMesh) -> Result<BasisSpace> {
    if rt0.kind != SpaceKind::Rt0 || rt0.mesh().num_triangles() != refined.base.num_triangles() {
        return Err(Error::InvalidInput("refine_rt0 needs an RT0 space on the refinement's base mesh".into()));
    }
    let fine = Arc::new(refined.fine.clone());
    let per_triangle = (0..fine.num_triangles())
        .map(|f| {
            let (t, _) = refined.parent_map[f];
            let shift = fine.centroid(f) - rt0.mesh().centroid(t);
            rt0.pieces_on(t)
                .iter()
                .map(|p| Piece { dof: p.dof, alpha: p.alpha, beta: p.beta - shift * p.alpha })
                .collect()
        })
        .collect();
    Ok(BasisSpace::from_triangle_pieces(
        SpaceKind::Rt0Refined,
        fine,
        rt0.dof_count,
        per_triangle,
        rt0.orientation.clone(),
    ))
}

/// Accumulates fine-mesh RWG contributions of one BC function.
struct FluxBuilder<'a> {
    fine: &'a TriangleMesh,
    acc: HashMap<usize, (f64, Vec3)>,
}

impl FluxBuilder<'_> {
    /// Add a flux `flux` across the fine edge `{p, q}` from triangle `src` into `dst`.
    fn add(&mut self, flux: f64, src: usize, dst: usize, p: usize, q: usize) {
        for (t, s) in [(src, 1.0), (dst, -1.0)] {
            let tri = self.fine.triangles()[t];
            let k = (0..3).find(|&k| tri[k] != p && tri[k] != q).expect("edge not in triangle");
            let alpha = s * flux / (2.0 * self.fine.area(t));
            let beta = (self.fine.vertices()[tri[k]] - self.fine.centroid(t)) * alpha;
            let e = self.acc.entry(t).or_insert((0.0, Vec3::ZERO));
            e.0 += alpha;
            e.1 += beta;
        }
    }
}

/// Buffa–Christiansen functions: one per primal edge, supported on the fine
/// triangles around both endpoints. Each carries unit flux across the dual
/// edge and distributes the matching divergence uniformly over both vertex
/// cells (positive in the source cell, negative in the sink cell).
pub fn build_bc_space(refined: &RefinedMesh) -> Result<BasisSpace> {
    let base = &refined.base;
    let fine = &refined.fine;
    let nv = base.num_vertices();

    // Fine triangles around each primal vertex, keyed by the next vertex in counter-clockwise order.
    let mut star: Vec<HashMap<usize, (usize, usize)>> = vec![HashMap::new(); nv];
    for (f, tri) in fine.triangles().iter().enumerate() {
        for k in 0..3 {
            if tri[k] < nv {
                star[tri[k]].insert(tri[(k + 1) % 3], (f, tri[(k + 2) % 3]));
            }
        }
    }
    // Fine edge → its two triangles.
    let mut fine_edge: HashMap<(usize, usize), [usize; 2]> = HashMap::new();
    for (e, &[a, b]) in fine.edges().iter().enumerate() {
        fine_edge.insert((a, b), fine.edge_triangles()[e]);
    }
    let other_side = |p: usize, q: usize, t: usize| -> usize {
        let pair = fine_edge[&(p.min(q), p.max(q))];
        if pair[0] == t {
            pair[1]
        } else {
            pair[0]
        }
    };

    // Walk counter-clockwise around vertex v starting at the fine vertex `start`.
    let walk = |v: usize, start: usize| -> Result<Vec<(usize, usize, usize)>> {
        let mut out = Vec::new();
        let mut u = start;
        loop {
            let &(f, w) = star[v]
                .get(&u)
                .ok_or_else(|| Error::InvalidMesh(format!("broken vertex star at {v}")))?;
            out.push((f, u, w));
            u = w;
            if u == start {
                break;
            }
            if out.len() > star[v].len() {
                return Err(Error::InvalidMesh(format!("vertex star at {v} does not close")));
            }
        }
        Ok(out)
    };

    let ne = base.num_edges();
    let mut per_triangle: Vec<Vec<Piece>> = vec![Vec::new(); fine.num_triangles()];
    for e in 0..ne {
        let [a, b] = base.edges()[e];
        let tp = base.edge_triangles()[e][0];
        let tri = base.triangles()[tp];
        let plus_has_ab = (0..3).any(|k| tri[k] == a && tri[(k + 1) % 3] == b);
        // With the plus triangle to the left of source→sink the function
        // approximates n × (RWG of e).
        let (source, sink) = if plus_has_ab { (a, b) } else { (b, a) };
        let mid = refined.edge_midpoint_vertex(e);
        let mut builder = FluxBuilder { fine, acc: HashMap::new() };

        for (v, sign) in [(source, 1.0), (sink, -1.0)] {
            let ring = walk(v, mid)?;
            let k2 = ring.len();
            let k = k2 as f64 / 2.0;
            for i in 1..k2 {
                let x = sign * (i as f64 - k) / (2.0 * k);
                let (prev, _, _) = ring[i - 1];
                let (cur, u, _) = ring[i];
                builder.add(x, prev, cur, v, u);
            }
            if sign > 0.0 {
                // Half of the unit flux leaves through each half of the dual edge.
                let (f0, u0, u1) = ring[0];
                builder.add(0.5, f0, other_side(u0, u1, f0), u0, u1);
                let (fl, ul, ul1) = ring[k2 - 1];
                builder.add(0.5, fl, other_side(ul, ul1, fl), ul, ul1);
            }
        }
        let mut touched: Vec<_> = builder.acc.into_iter().collect();
        touched.sort_by_key(|x| x.0);
        for (t, (alpha, beta)) in touched {
            per_triangle[t].push(Piece { dof: e, alpha, beta });
        }
    }
    let orientation = base.edges().to_vec();
    Ok(BasisSpace::from_triangle_pieces(
        SpaceKind::BuffaChristiansen,
        Arc::new(fine.clone()),
        ne,
        per_triangle,
        orientation,
    ))
}

/// Value and surface divergence of basis function `dof` at the point with
/// barycentric coordinates `bary` on `triangle`. Outside the support the zero
/// vector and zero divergence are returned.
pub fn evaluate_basis(space: &BasisSpace, dof: usize, triangle: usize, bary: [f64; 3]) -> (Vec3, f64) {
    let mesh = space.mesh();
    let [a, b, c] = mesh.triangle_vertices(triangle);
    let x = a * bary[0] + b * bary[1] + c * bary[2];
    space
        .pieces_on(triangle)
        .iter()
        .find(|p| p.dof == dof)
        .map(|p| (p.value(x, mesh.centroid(triangle)), p.divergence()))
        .unwrap_or((Vec3::ZERO, 0.0))
}

/// Unit in-plane normal of edge `e` pointing out of triangle `t`.
pub fn edge_conormal(mesh: &TriangleMesh, e: usize, t: usize) -> Vec3 {
    let [a, b] = mesh.edges()[e];
    let (pa, pb) = (mesh.vertices()[a], mesh.vertices()[b]);
    let tri = mesh.triangles()[t];
    let opp = tri.iter().copied().find(|&v| v != a && v != b).expect("edge not in triangle");
    let tan = (pb - pa).normalized();
    let d = pa - mesh.vertices()[opp];
    (d - tan * d.dot(tan)).normalized()
}

/// Mean normal flux `(1/ℓ) ∫_e f · ν ds` across primal edge `e`, with `ν`
/// pointing from its plus into its minus triangle; `f` is evaluated on the
/// plus side.
pub fn rt0_dof_functional(mesh: &TriangleMesh, e: usize, f: impl Fn(Vec3) -> Vec3) -> f64 {
    let [a, b] = mesh.edges()[e];
    let (pa, pb) = (mesh.vertices()[a], mesh.vertices()[b]);
    let nu = edge_conormal(mesh, e, mesh.edge_triangles()[e][0]);
    // Two-point Gauss is exact for affine fields.
    let g = 0.5 / 3f64.sqrt();
    [0.5 - g, 0.5 + g].iter().map(|&s| 0.5 * f(pa + (pb - pa) * s).dot(nu)).sum()
}

/// A coefficient vector over a basis space.
#[derive(Clone, Debug)]
pub struct SurfaceDensity {
    pub space: Arc<BasisSpace>,
    pub coefficients: Vec<Complex64>,
}

impl SurfaceDensity {
    pub fn new(space: Arc<BasisSpace>, coefficients: Vec<Complex64>) -> Result<Self> {
        if coefficients.len() != space.dof_count() {
            return Err(Error::InvalidInput(format!(
                "density has {} coefficients, space has {} DOFs",
                coefficients.len(),
                space.dof_count()
            )));
        }
        Ok(Self { space, coefficients })
    }

    pub fn zeros(space: Arc<BasisSpace>) -> Self {
        let n = space.dof_count();
        Self { space, coefficients: vec![Complex64::new(0.0, 0.0); n] }
    }

    /// Field value and surface divergence at a point `x` of `triangle`.
    pub fn evaluate(&self, triangle: usize, x: Vec3) -> (CVec3, Complex64) {
        let c = self.space.mesh().centroid(triangle);
        let mut v = CVec3::ZERO;
        let mut div = Complex64::new(0.0, 0.0);
        for p in self.space.pieces_on(triangle) {
            let coef = self.coefficients[p.dof];
            let f = p.value(x, c);
            for i in 0..3 {
                v.0[i] += coef * f.0[i];
            }
            div += coef * p.divergence();
        }
        (v, div)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{barycentric_refine, make_cube_mesh, sphere_level};

    fn unit_right_triangle_mesh() -> TriangleMesh {
        // Tetrahedron containing the unit right triangle (0,0,0),(1,0,0),(0,1,0) as a face.
        let v = vec![
            Vec3::new(0.0, 0.0, 0.0),
            Vec3::new(1.0, 0.0, 0.0),
            Vec3::new(0.0, 1.0, 0.0),
            Vec3::new(0.0, 0.0, 1.0),
        ];
        TriangleMesh::new(v, vec![[0, 2, 1], [0, 1, 3], [1, 2, 3], [0, 3, 2]]).unwrap()
    }

    #[test]
    fn hypotenuse_divergence() {
        let m = Arc::new(unit_right_triangle_mesh());
        let s = build_rt0_space(m.clone());
        let e = m.edges().iter().position(|&e| e == [1, 2]).unwrap();
        let p = s.pieces_on(0).iter().find(|p| p.dof == e).unwrap();
        assert!((p.divergence().abs() - 2.0 * 2f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn rt0_duality_and_value_at_opposite_vertex() {
        let m = Arc::new(make_cube_mesh(1.0, 0.75).unwrap());
        let s = build_rt0_space(m.clone());
        for e in 0..m.num_edges() {
            for t in m.edge_triangles()[e] {
                for p in s.pieces_on(t) {
                    let tri = m.triangles()[t];
                    let centroid = m.centroid(t);
                    let value = |x: Vec3| p.value(x, centroid);
                    // The functional only sees the plus side; use it when t is the plus triangle.
                    if t == m.edge_triangles()[e][0] {
                        let d = rt0_dof_functional(&m, e, value);
                        let expected = if p.dof == e { 1.0 } else { 0.0 };
                        assert!((d - expected).abs() < 1e-12);
                    }
                    let k = m.triangle_edges()[t].iter().position(|&x| x == p.dof).unwrap();
                    assert!(value(m.vertices()[tri[k]]).norm() < 1e-14);
                }
            }
        }
    }

    #[test]
    fn rt0_reproduces_constants() {
        let m = Arc::new(sphere_level(1.0, 1).unwrap());
        let s = build_rt0_space(m.clone());
        let c0 = Vec3::new(0.3, -0.7, 0.5);
        for t in 0..m.num_triangles() {
            let n = m.normal(t);
            let c = c0 - n * c0.dot(n);
            let mut sum = Vec3::ZERO;
            for p in s.pieces_on(t) {
                let e = p.dof;
                let sign = if m.edge_triangles()[e][0] == t { 1.0 } else { -1.0 };
                let coef = sign * c.dot(edge_conormal(&m, e, t));
                sum += p.value(m.centroid(t), m.centroid(t)) * coef;
            }
            assert!((sum - c).norm() < 1e-12);
        }
    }

    #[test]
    fn basis_values_are_tangential() {
        let m = Arc::new(sphere_level(1.0, 1).unwrap());
        let r = barycentric_refine(&m).unwrap();
        for space in [build_rt0_space(m.clone()), build_bc_space(&r).unwrap()] {
            let mesh = space.mesh();
            for t in 0..mesh.num_triangles() {
                for p in space.pieces_on(t) {
                    let (v, d1) = evaluate_basis(&space, p.dof, t, [0.2, 0.3, 0.5]);
                    let (_, d2) = evaluate_basis(&space, p.dof, t, [0.6, 0.1, 0.3]);
                    assert!(v.dot(mesh.normal(t)).abs() < 1e-13 * (1.0 + v.norm()));
                    assert_eq!(d1, d2);
                }
            }
            // Outside the support the value is zero.
            let (v, d) = evaluate_basis(&space, 0, mesh.num_triangles() - 1, [0.3; 3]);
            if !space.support(0).contains(&(mesh.num_triangles() - 1)) {
                assert_eq!((v, d), (Vec3::ZERO, 0.0));
            }
        }
    }

    fn check_normal_continuity(space: &BasisSpace) {
        let mesh = space.mesh();
        for e in 0..mesh.num_edges() {
            let [t1, t2] = mesh.edge_triangles()[e];
            let [a, b] = mesh.edges()[e];
            let mid = (mesh.vertices()[a] + mesh.vertices()[b]) * 0.5;
            // Flux density out of t1 seen from both sides (each in its own plane).
            let side = |t: usize, sign: f64| -> HashMap<usize, f64> {
                let nu = edge_conormal(mesh, e, t);
                space.pieces_on(t).iter().map(|p| (p.dof, sign * p.value(mid, mesh.centroid(t)).dot(nu))).collect()
            };
            let (s1, s2) = (side(t1, 1.0), side(t2, -1.0));
            for dof in s1.keys().chain(s2.keys()) {
                let v1 = s1.get(dof).copied().unwrap_or(0.0);
                let v2 = s2.get(dof).copied().unwrap_or(0.0);
                assert!((v1 - v2).abs() < 1e-12 * (1.0 + v1.abs()), "edge {e} dof {dof}: {v1} vs {v2}");
            }
        }
    }

    #[test]
    fn normal_continuity() {
        let m = Arc::new(make_cube_mesh(1.0, 0.75).unwrap());
        let r = barycentric_refine(&m).unwrap();
        check_normal_continuity(&build_rt0_space(m.clone()));
        check_normal_continuity(&build_bc_space(&r).unwrap());
        let s = Arc::new(sphere_level(1.0, 1).unwrap());
        let rs = barycentric_refine(&s).unwrap();
        check_normal_continuity(&build_bc_space(&rs).unwrap());
    }

    #[test]
    fn bc_dimension_and_zero_mean_divergence() {
        let m = Arc::new(make_cube_mesh(1.0, 1.5).unwrap());
        let r = barycentric_refine(&m).unwrap();
        let bc = build_bc_space(&r).unwrap();
        assert_eq!(bc.dof_count(), 18);
        let s = Arc::new(sphere_level(1.0, 2).unwrap());
        let rs = barycentric_refine(&s).unwrap();
        for space in [bc, build_bc_space(&rs).unwrap()] {
            let mut total = vec![0.0; space.dof_count()];
            for t in 0..space.mesh().num_triangles() {
                for p in space.pieces_on(t) {
                    total[p.dof] += p.divergence() * space.mesh().area(t);
                }
            }
            assert!(total.iter().all(|x| x.abs() < 1e-12), "{total:?}");
        }
    }

    #[test]
    fn bc_flux_through_dual_edge_is_one() {
        let m = Arc::new(sphere_level(1.0, 1).unwrap());
        let r = barycentric_refine(&m).unwrap();
        let bc = build_bc_space(&r).unwrap();
        let nv = m.num_vertices();
        // Outflow of the source cell through its boundary equals the integrated divergence there.
        for e in 0..m.num_edges() {
            let mut pos = 0.0;
            for &t in bc.support(e) {
                let v = r.fine.triangles()[t].iter().copied().find(|&v| v < nv).unwrap();
                let p = bc.pieces_on(t).iter().find(|p| p.dof == e).unwrap();
                if p.divergence() > 0.0 {
                    pos += p.divergence() * r.fine.area(t);
                    assert!(m.edges()[e].contains(&v));
                }
            }
            assert!((pos - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn density_length_checked() {
        let m = Arc::new(sphere_level(1.0, 0).unwrap());
        let s = Arc::new(build_rt0_space(m));
        assert!(SurfaceDensity::new(s.clone(), vec![Complex64::new(0.0, 0.0); 3]).is_err());
        let d = SurfaceDensity::zeros(s);
        let (v, div) = d.evaluate(0, Vec3::new(0.0, 0.0, 1.0));
        assert_eq!(v.norm(), 0.0);
        assert_eq!(div.norm(), 0.0);
    }
}
