//! Closed triangulated surfaces: generators, connectivity and barycentric refinement.

use crate::error::{Error, Result};
use crate::geom::Vec3;
use std::collections::HashMap;
use std::io::{BufRead, Write};

/// Triangles with area below this are rejected.
pub const MIN_TRIANGLE_AREA: f64 = 1e-14;

/// A closed, consistently oriented, flat-triangle surface mesh.
///
/// Each edge is stored with ascending vertex indices. Its `plus` triangle is
/// the adjacent triangle with the lower index; RT0 fluxes are counted positive
/// from `plus` to `minus`.
#[derive(Clone, Debug)]
pub struct TriangleMesh {
    vertices: Vec<Vec3>,
    triangles: Vec<[usize; 3]>,
    edges: Vec<[usize; 2]>,
    edge_triangles: Vec<[usize; 2]>,
    triangle_edges: Vec<[usize; 3]>,
    triangle_edge_signs: Vec<[f64; 3]>,
    normals: Vec<Vec3>,
    areas: Vec<f64>,
    centroids: Vec<Vec3>,
    diameters: Vec<f64>,
}

impl TriangleMesh {
    /// Build connectivity and validate a closed, consistently oriented surface.
    pub fn new(vertices: Vec<Vec3>, triangles: Vec<[usize; 3]>) -> Result<Self> {
        if triangles.is_empty() {
            return Err(Error::InvalidMesh("no triangles".into()));
        }
        let nv = vertices.len();
        let mut normals = Vec::with_capacity(triangles.len());
        let mut areas = Vec::with_capacity(triangles.len());
        let mut centroids = Vec::with_capacity(triangles.len());
        let mut diameters = Vec::with_capacity(triangles.len());
        for (t, tri) in triangles.iter().enumerate() {
            if tri.iter().any(|&v| v >= nv) {
                return Err(Error::InvalidMesh(format!("triangle {t} references a missing vertex")));
            }
            let [a, b, c] = tri.map(|v| vertices[v]);
            let cr = (b - a).cross(c - a);
            let area = 0.5 * cr.norm();
            if !(area > MIN_TRIANGLE_AREA) {
                return Err(Error::InvalidMesh(format!("triangle {t} is degenerate (area {area:e})")));
            }
            normals.push(cr * (0.5 / area));
            areas.push(area);
            centroids.push((a + b + c) * (1.0 / 3.0));
            diameters.push((b - a).norm().max((c - b).norm()).max((a - c).norm()));
        }

        // directed edge -> triangle
        let mut directed: HashMap<(usize, usize), usize> = HashMap::with_capacity(3 * triangles.len());
        for (t, tri) in triangles.iter().enumerate() {
            for i in 0..3 {
                let key = (tri[(i + 1) % 3], tri[(i + 2) % 3]);
                if directed.insert(key, t).is_some() {
                    return Err(Error::InvalidMesh(format!(
                        "directed edge {key:?} used twice: inconsistent orientation or non-manifold"
                    )));
                }
            }
        }

        let mut edge_index: HashMap<(usize, usize), usize> = HashMap::with_capacity(directed.len() / 2);
        let mut edges = Vec::new();
        let mut edge_triangles = Vec::new();
        let mut triangle_edges = vec![[0usize; 3]; triangles.len()];
        let mut triangle_edge_signs = vec![[0.0f64; 3]; triangles.len()];
        for (t, tri) in triangles.iter().enumerate() {
            for i in 0..3 {
                let (p, q) = (tri[(i + 1) % 3], tri[(i + 2) % 3]);
                let key = (p.min(q), p.max(q));
                let e = match edge_index.get(&key) {
                    Some(&e) => e,
                    None => {
                        let other = *directed.get(&(q, p)).ok_or_else(|| {
                            Error::InvalidMesh(format!("edge {key:?} has only one incident triangle"))
                        })?;
                        let e = edges.len();
                        edges.push([key.0, key.1]);
                        edge_triangles.push([t.min(other), t.max(other)]);
                        edge_index.insert(key, e);
                        e
                    }
                };
                triangle_edges[t][i] = e;
                triangle_edge_signs[t][i] = if edge_triangles[e][0] == t { 1.0 } else { -1.0 };
            }
        }

        Ok(Self {
            vertices,
            triangles,
            edges,
            edge_triangles,
            triangle_edges,
            triangle_edge_signs,
            normals,
            areas,
            centroids,
            diameters,
        })
    }

    pub fn vertices(&self) -> &[Vec3] {
        &self.vertices
    }
    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }
    pub fn edges(&self) -> &[[usize; 2]] {
        &self.edges
    }
    /// `[plus, minus]` triangles of each edge (plus = lower triangle index).
    pub fn edge_triangles(&self) -> &[[usize; 2]] {
        &self.edge_triangles
    }
    /// Local edge `i` of a triangle is the edge opposite its local vertex `i`.
    pub fn triangle_edges(&self) -> &[[usize; 3]] {
        &self.triangle_edges
    }
    /// +1 where the triangle is the plus side of the local edge, −1 otherwise.
    pub fn triangle_edge_signs(&self) -> &[[f64; 3]] {
        &self.triangle_edge_signs
    }
    pub fn normal(&self, t: usize) -> Vec3 {
        self.normals[t]
    }
    pub fn area(&self, t: usize) -> f64 {
        self.areas[t]
    }
    pub fn centroid(&self, t: usize) -> Vec3 {
        self.centroids[t]
    }
    pub fn diameter(&self, t: usize) -> f64 {
        self.diameters[t]
    }
    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }
    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }
    pub fn num_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn triangle_vertices(&self, t: usize) -> [Vec3; 3] {
        self.triangles[t].map(|v| self.vertices[v])
    }

    pub fn total_area(&self) -> f64 {
        self.areas.iter().sum()
    }

    pub fn euler_characteristic(&self) -> i64 {
        self.num_vertices() as i64 - self.num_edges() as i64 + self.num_triangles() as i64
    }

    pub fn edge_length(&self, e: usize) -> f64 {
        let [a, b] = self.edges[e];
        (self.vertices[a] - self.vertices[b]).norm()
    }

    /// Map a point given in barycentric coordinates `(1−s−t, s, t)` to R³.
    pub fn point(&self, tri: usize, s: f64, t: f64) -> Vec3 {
        let [a, b, c] = self.triangle_vertices(tri);
        a + (b - a) * s + (c - a) * t
    }

    /// Check that every normal points away from `center`.
    pub fn check_outward(&self, center: Vec3) -> Result<()> {
        for t in 0..self.num_triangles() {
            if self.normals[t].dot(self.centroids[t] - center) <= 0.0 {
                return Err(Error::InvalidMesh(format!("triangle {t} is oriented inward")));
            }
        }
        Ok(())
    }

    /// Apply a map to all vertex positions (connectivity is kept).
    pub fn map_vertices(&self, f: impl Fn(Vec3) -> Vec3) -> Result<Self> {
        Self::new(self.vertices.iter().map(|&v| f(v)).collect(), self.triangles.clone())
    }

    /// Euclidean distance from `p` to the surface.
    pub fn distance_to(&self, p: Vec3) -> f64 {
        (0..self.num_triangles())
            .map(|t| {
                let [a, b, c] = self.triangle_vertices(t);
                point_triangle_distance(p, a, b, c)
            })
            .fold(f64::INFINITY, f64::min)
    }

    /// Write the mesh in OFF text format.
    pub fn write_off<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "OFF")?;
        writeln!(w, "{} {} {}", self.num_vertices(), self.num_triangles(), self.num_edges())?;
        for v in &self.vertices {
            writeln!(w, "{:.17e} {:.17e} {:.17e}", v.x(), v.y(), v.z())?;
        }
        for t in &self.triangles {
            writeln!(w, "3 {} {} {}", t[0], t[1], t[2])?;
        }
        Ok(())
    }

    /// Read a mesh in OFF text format (triangles only).
    pub fn read_off<R: BufRead>(r: R) -> Result<Self> {
        let mut tokens = Vec::new();
        for line in r.lines() {
            let line = line?;
            let line = line.split('#').next().unwrap_or("");
            tokens.extend(line.split_whitespace().map(str::to_owned));
        }
        let mut it = tokens.into_iter();
        let parse_err = |what: &str| Error::Parse(format!("OFF: bad or missing {what}"));
        if it.next().as_deref() != Some("OFF") {
            return Err(parse_err("header"));
        }
        let next_usize = |what: &str, it: &mut std::vec::IntoIter<String>| -> Result<usize> {
            it.next().and_then(|s| s.parse().ok()).ok_or_else(|| parse_err(what))
        };
        let nv = next_usize("vertex count", &mut it)?;
        let nt = next_usize("face count", &mut it)?;
        let _ = next_usize("edge count", &mut it)?;
        let mut vertices = Vec::with_capacity(nv);
        for _ in 0..nv {
            let mut c = [0.0; 3];
            for x in &mut c {
                *x = it.next().and_then(|s| s.parse().ok()).ok_or_else(|| parse_err("coordinate"))?;
            }
            vertices.push(Vec3(c));
        }
        let mut triangles = Vec::with_capacity(nt);
        for _ in 0..nt {
            if next_usize("face size", &mut it)? != 3 {
                return Err(Error::Parse("OFF: only triangular faces are supported".into()));
            }
            let mut f = [0usize; 3];
            for x in &mut f {
                *x = next_usize("face index", &mut it)?;
            }
            triangles.push(f);
        }
        Self::new(vertices, triangles)
    }
}

/// Longest edge of the mesh.
pub fn meshwidth(mesh: &TriangleMesh) -> f64 {
    (0..mesh.num_edges()).map(|e| mesh.edge_length(e)).fold(0.0, f64::max)
}

fn point_triangle_distance(p: Vec3, a: Vec3, b: Vec3, c: Vec3) -> f64 {
    // Project onto the plane; if the projection is inside, use the plane distance.
    let n = (b - a).cross(c - a);
    let nn = n.norm_sq();
    let d = (p - a).dot(n) / nn;
    let q = p - n * d;
    let inside = [(a, b), (b, c), (c, a)]
        .iter()
        .all(|&(u, v)| (v - u).cross(q - u).dot(n) >= 0.0);
    if inside {
        return (p - q).norm();
    }
    [(a, b), (b, c), (c, a)]
        .iter()
        .map(|&(u, v)| {
            let e = v - u;
            let s = ((p - u).dot(e) / e.norm_sq()).clamp(0.0, 1.0);
            (p - (u + e * s)).norm()
        })
        .fold(f64::INFINITY, f64::min)
}

/// Orient a triangle so that its normal points away from `center`.
fn orient_outward(tri: [usize; 3], vertices: &[Vec3], center: Vec3) -> [usize; 3] {
    let [a, b, c] = tri.map(|v| vertices[v]);
    let n = (b - a).cross(c - a);
    if n.dot((a + b + c) * (1.0 / 3.0) - center) >= 0.0 {
        tri
    } else {
        [tri[0], tri[2], tri[1]]
    }
}

/// Axis-aligned cube centered at the origin with `n × n` squares per face,
/// `n = ceil(edge·√2 / h_target)`, each square cut into two triangles.
pub fn make_cube_mesh(edge_length: f64, h_target: f64) -> Result<TriangleMesh> {
    if !(edge_length > 0.0) || !(h_target > 0.0) || !edge_length.is_finite() {
        return Err(Error::InvalidInput("cube edge length and h must be positive".into()));
    }
    let n = ((edge_length * 2f64.sqrt() / h_target) - 1e-9).ceil().max(1.0) as usize;
    cube_grid(edge_length, n)
}

/// Cube with an explicit number of subdivisions per edge.
pub fn cube_grid(edge_length: f64, n: usize) -> Result<TriangleMesh> {
    if n == 0 || !(edge_length > 0.0) {
        return Err(Error::InvalidInput("cube grid needs n ≥ 1 and positive edge".into()));
    }
    let mut index: HashMap<[usize; 3], usize> = HashMap::new();
    let mut vertices = Vec::new();
    let mut triangles = Vec::new();
    let mut vid = |p: [usize; 3], vertices: &mut Vec<Vec3>| -> usize {
        *index.entry(p).or_insert_with(|| {
            let c = p.map(|i| (i as f64 / n as f64 - 0.5) * edge_length);
            vertices.push(Vec3(c));
            vertices.len() - 1
        })
    };
    for axis in 0..3 {
        let (u_ax, v_ax) = ((axis + 1) % 3, (axis + 2) % 3);
        for side in [0, n] {
            for i in 0..n {
                for j in 0..n {
                    let corner = |di: usize, dj: usize| {
                        let mut p = [0; 3];
                        p[axis] = side;
                        p[u_ax] = i + di;
                        p[v_ax] = j + dj;
                        p
                    };
                    let q = [corner(0, 0), corner(1, 0), corner(1, 1), corner(0, 1)]
                        .map(|p| vid(p, &mut vertices));
                    triangles.push([q[0], q[1], q[2]]);
                    triangles.push([q[0], q[2], q[3]]);
                }
            }
        }
    }
    let triangles = triangles
        .into_iter()
        .map(|t| orient_outward(t, &vertices, Vec3::ZERO))
        .collect();
    TriangleMesh::new(vertices, triangles)
}

/// Regular icosahedron inscribed in the unit sphere.
fn icosahedron() -> (Vec<Vec3>, Vec<[usize; 3]>) {
    let phi = (1.0 + 5f64.sqrt()) / 2.0;
    let mut v = Vec::new();
    for &s1 in &[-1.0, 1.0] {
        for &s2 in &[-1.0, 1.0] {
            v.push(Vec3::new(0.0, s1, s2 * phi));
            v.push(Vec3::new(s1, s2 * phi, 0.0));
            v.push(Vec3::new(s2 * phi, 0.0, s1));
        }
    }
    let v: Vec<Vec3> = v.into_iter().map(Vec3::normalized).collect();
    let mut emin = f64::INFINITY;
    for i in 0..12 {
        for j in i + 1..12 {
            emin = emin.min((v[i] - v[j]).norm());
        }
    }
    let adj = |i: usize, j: usize| ((v[i] - v[j]).norm() - emin).abs() < 1e-9;
    let mut faces = Vec::new();
    for i in 0..12 {
        for j in i + 1..12 {
            for k in j + 1..12 {
                if adj(i, j) && adj(j, k) && adj(i, k) {
                    faces.push(orient_outward([i, j, k], &v, Vec3::ZERO));
                }
            }
        }
    }
    (v, faces)
}

/// Geodesic sphere: every icosahedron face is split into `frequency²`
/// triangles and the new vertices are projected onto the sphere.
pub fn icosphere(radius: f64, frequency: usize) -> Result<TriangleMesh> {
    if !(radius > 0.0) || frequency == 0 {
        return Err(Error::InvalidInput("icosphere needs radius > 0 and frequency ≥ 1".into()));
    }
    let n = frequency;
    let (base, faces) = icosahedron();
    let mut index: HashMap<Vec<(usize, usize)>, usize> = HashMap::new();
    let mut vertices = Vec::new();
    let mut triangles = Vec::new();
    for f in &faces {
        let mut grid = vec![vec![0usize; n + 1]; n + 1];
        for i in 0..=n {
            for j in 0..=n - i {
                let w = [n - i - j, i, j];
                let mut key: Vec<(usize, usize)> =
                    (0..3).filter(|&k| w[k] > 0).map(|k| (f[k], w[k])).collect();
                key.sort_unstable();
                let id = *index.entry(key).or_insert_with(|| {
                    let p = (base[f[0]] * w[0] as f64 + base[f[1]] * w[1] as f64 + base[f[2]] * w[2] as f64)
                        * (1.0 / n as f64);
                    vertices.push(p.normalized() * radius);
                    vertices.len() - 1
                });
                grid[i][j] = id;
            }
        }
        for i in 0..n {
            for j in 0..n - i {
                triangles.push([grid[i][j], grid[i + 1][j], grid[i][j + 1]]);
                if i + j + 1 < n {
                    triangles.push([grid[i + 1][j], grid[i + 1][j + 1], grid[i][j + 1]]);
                }
            }
        }
    }
    TriangleMesh::new(vertices, triangles)
}

/// Geodesic sphere with the smallest subdivision frequency whose meshwidth is ≤ `h_target`.
pub fn make_sphere_mesh(radius: f64, h_target: f64) -> Result<TriangleMesh> {
    if !(radius > 0.0) || !(h_target > 0.0) {
        return Err(Error::InvalidInput("sphere radius and h must be positive".into()));
    }
    // Edge lengths shrink roughly like 1.05·radius/n.
    let mut n = ((0.9 * radius / h_target).floor() as usize).max(1);
    loop {
        let mesh = icosphere(radius, n)?;
        if meshwidth(&mesh) <= h_target {
            return Ok(mesh);
        }
        n += 1;
        if n > 2000 {
            return Err(Error::InvalidInput("h_target too small for sphere generator".into()));
        }
    }
}

/// Sphere obtained after `level` recursive midpoint subdivisions of the icosahedron.
pub fn sphere_level(radius: f64, level: u32) -> Result<TriangleMesh> {
    icosphere(radius, 1usize << level)
}

/// Barycentric refinement of a mesh together with the parent relation.
#[derive(Clone, Debug)]
pub struct RefinedMesh {
    pub base: TriangleMesh,
    pub fine: TriangleMesh,
    /// For each fine triangle: (base triangle, child index 0..5).
    pub parent_map: Vec<(usize, usize)>,
}

impl RefinedMesh {
    /// Fine vertex sitting at the midpoint of base edge `e`.
    pub fn edge_midpoint_vertex(&self, e: usize) -> usize {
        self.base.num_vertices() + e
    }

    /// Fine vertex sitting at the barycenter of base triangle `t`.
    pub fn barycenter_vertex(&self, t: usize) -> usize {
        self.base.num_vertices() + self.base.num_edges() + t
    }

    /// Fine triangles of base triangle `t` (six consecutive indices).
    pub fn children(&self, t: usize) -> std::ops::Range<usize> {
        6 * t..6 * t + 6
    }
}

/// Split each triangle into six by its medians.
///
/// Fine vertices are ordered: base vertices, edge midpoints, barycenters.
/// Children of base triangle `(p0,p1,p2)` are, in order,
/// `(p0,m2,c) (m2,p1,c) (p1,m0,c) (m0,p2,c) (p2,m1,c) (m1,p0,c)` where `m_i`
/// is the midpoint of the edge opposite `p_i`.
pub fn barycentric_refine(mesh: &TriangleMesh) -> Result<RefinedMesh> {
    let nv = mesh.num_vertices();
    let ne = mesh.num_edges();
    let mut vertices = mesh.vertices().to_vec();
    for &[a, b] in mesh.edges() {
        vertices.push((mesh.vertices()[a] + mesh.vertices()[b]) * 0.5);
    }
    for t in 0..mesh.num_triangles() {
        vertices.push(mesh.centroid(t));
    }
    let mut triangles = Vec::with_capacity(6 * mesh.num_triangles());
    let mut parent_map = Vec::with_capacity(6 * mesh.num_triangles());
    for (t, &[p0, p1, p2]) in mesh.triangles().iter().enumerate() {
        let [e0, e1, e2] = mesh.triangle_edges()[t];
        let (m0, m1, m2) = (nv + e0, nv + e1, nv + e2);
        let c = nv + ne + t;
        let kids = [[p0, m2, c], [m2, p1, c], [p1, m0, c], [m0, p2, c], [p2, m1, c], [m1, p0, c]];
        for (k, tri) in kids.into_iter().enumerate() {
            triangles.push(tri);
            parent_map.push((t, k));
        }
    }
    let fine = TriangleMesh::new(vertices, triangles)?;
    Ok(RefinedMesh { base: mesh.clone(), fine, parent_map })
}
