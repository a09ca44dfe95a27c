//! Scattered field and its curl at points off the surface.
//!
//! With `φ, ψ` from a CFIE solve the scattered field is
//! `e = iη Ψ_SL(φ) + Ψ_DL(ψ)` and `curl e = iη Ψ_DL(φ) + κ² Ψ_SL(ψ)`, where
//!
//! ```text
//! Ψ_SL(u)(x) = ∫ G_κ(x,y) u(y) dy + κ⁻² ∇_x ∫ G_κ(x,y) div u(y) dy
//! Ψ_DL(u)(x) = ∫ ∇_x G_κ(x,y) × u(y) dy
//! ```

use crate::cfie::PlaneWave;
use crate::error::{Error, Result};
use crate::geom::{CVec3, Vec3};
use crate::mesh::meshwidth;
use crate::quadrature::gauss_triangle_rule;
use crate::spaces::SurfaceDensity;
use num_complex::Complex64;
use rayon::prelude::*;
use std::io::Write;

/// Field and curl at one point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FieldSample {
    pub point: Vec3,
    pub e: CVec3,
    pub curl_e: CVec3,
}

/// Points closer to the surface than this fraction of the meshwidth are rejected.
pub const MIN_RELATIVE_DISTANCE: f64 = 0.01;
/// Quadrature degree used on (sub)triangles.
const RULE_DEGREE: usize = 5;
/// Subdivide while the point is closer than this many sub-triangle diameters.
const NEAR_FACTOR: f64 = 3.0;
const MAX_DEPTH: usize = 8;

/// `(Ψ_SL u, Ψ_DL u)` of densities at points, for wavenumber κ.
///
/// Returns, for each point, one pair per density.
pub fn layer_potentials(densities: &[&SurfaceDensity], kappa: f64, points: &[Vec3]) -> Result<Vec<Vec<(CVec3, CVec3)>>> {
    if densities.is_empty() {
        return Ok(vec![Vec::new(); points.len()]);
    }
    let space = &densities[0].space;
    for d in densities {
        if !std::sync::Arc::ptr_eq(&d.space, space) {
            return Err(Error::InvalidInput("densities must share one space".into()));
        }
    }
    let mesh = space.mesh();
    let hmin = MIN_RELATIVE_DISTANCE * meshwidth(mesh);
    let rule = gauss_triangle_rule(RULE_DEGREE)?;
    let bary: Vec<([f64; 3], f64)> = (0..rule.len()).map(|i| (rule.barycentric(i), rule.weights[i])).collect();

    points
        .par_iter()
        .map(|&x| {
            let dist = mesh.distance_to(x);
            if dist < hmin {
                return Err(Error::NearSurface { point: [x.x(), x.y(), x.z()], distance: dist });
            }
            let mut acc = vec![(CVec3::ZERO, CVec3::ZERO, CVec3::ZERO); densities.len()];
            for t in 0..mesh.num_triangles() {
                let tri = mesh.triangle_vertices(t);
                integrate_triangle(densities, t, tri, x, kappa, &bary, 0, &mut acc);
            }
            let k2 = kappa * kappa;
            Ok(acc
                .into_iter()
                .map(|(a, gv, dl)| (a + gv * (1.0 / k2), dl))
                .collect())
        })
        .collect()
}

/// Accumulates `∫ G u`, `∇∫ G div u` and `∫ ∇G × u` over one (sub)triangle.
#[allow(clippy::too_many_arguments)]
fn integrate_triangle(
    densities: &[&SurfaceDensity],
    t: usize,
    tri: [Vec3; 3],
    x: Vec3,
    kappa: f64,
    bary: &[([f64; 3], f64)],
    depth: usize,
    acc: &mut [(CVec3, CVec3, CVec3)],
) {
    let [a, b, c] = tri;
    let diam = (a - b).norm().max((b - c).norm()).max((c - a).norm());
    let cen = (a + b + c) * (1.0 / 3.0);
    let near = (x - cen).norm() - diam < NEAR_FACTOR * diam;
    if near && depth < MAX_DEPTH {
        let (ab, bc, ca) = ((a + b) * 0.5, (b + c) * 0.5, (c + a) * 0.5);
        for sub in [[a, ab, ca], [ab, b, bc], [ca, bc, c], [ab, bc, ca]] {
            integrate_triangle(densities, t, sub, x, kappa, bary, depth + 1, acc);
        }
        return;
    }
    let jac = (b - a).cross(c - a).norm();
    for &(l, w) in bary {
        let y = a * l[0] + b * l[1] + c * l[2];
        let d = x - y;
        let r = d.norm();
        let g = Complex64::new(0.0, kappa * r).exp() / (4.0 * std::f64::consts::PI * r);
        let hfac = g * Complex64::new(-1.0 / r, kappa) / r;
        let grad = d.to_complex().scale(hfac);
        let ww = w * jac;
        for (dens, slot) in densities.iter().zip(acc.iter_mut()) {
            let (u, div) = dens.evaluate(t, y);
            slot.0 += u * (g * ww);
            slot.1 += grad * (div * ww);
            slot.2 += grad.cross(u) * ww;
        }
    }
}

/// Scattered field from the CFIE auxiliary densities.
pub fn eval_scattered(phi: &SurfaceDensity, psi: &SurfaceDensity, kappa: f64, eta: f64, points: &[Vec3]) -> Result<Vec<FieldSample>> {
    let pots = layer_potentials(&[phi, psi], kappa, points)?;
    let ieta = Complex64::new(0.0, eta);
    let k2 = Complex64::new(kappa * kappa, 0.0);
    Ok(points
        .iter()
        .zip(pots)
        .map(|(&p, v)| {
            let (sl_phi, dl_phi) = v[0];
            let (sl_psi, dl_psi) = v[1];
            FieldSample { point: p, e: sl_phi * ieta + dl_psi, curl_e: dl_phi * ieta + sl_psi * k2 }
        })
        .collect())
}

pub fn eval_incident(wave: &PlaneWave, points: &[Vec3]) -> Vec<FieldSample> {
    points
        .iter()
        .map(|&p| {
            let (e, curl_e) = wave.field(p);
            FieldSample { point: p, e, curl_e }
        })
        .collect()
}

pub const FIELD_CSV_HEADER: &str = "x,y,z,Re(ex),Im(ex),Re(ey),Im(ey),Re(ez),Im(ez),Re(curl_ex),Im(curl_ex),Re(curl_ey),Im(curl_ey),Re(curl_ez),Im(curl_ez)";

pub fn write_field_csv<W: Write>(samples: &[FieldSample], mut w: W) -> Result<()> {
    writeln!(w, "{FIELD_CSV_HEADER}")?;
    for s in samples {
        let mut row = vec![s.point.x(), s.point.y(), s.point.z()];
        for v in [s.e, s.curl_e] {
            for c in v.0 {
                row.push(c.re);
                row.push(c.im);
            }
        }
        let line: Vec<String> = row.iter().map(|v| format!("{v:.17e}")).collect();
        writeln!(w, "{}", line.join(","))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::sphere_level;
    use crate::spaces::build_rt0_space;
    use std::sync::Arc;

    fn densities() -> (SurfaceDensity, SurfaceDensity) {
        let mesh = Arc::new(sphere_level(1.0, 1).unwrap());
        let rt = Arc::new(build_rt0_space(mesh));
        let n = rt.dof_count();
        let a = (0..n).map(|i| Complex64::new((i as f64 * 0.7).sin(), 0.3 * (i as f64).cos())).collect();
        let b = (0..n).map(|i| Complex64::new(0.2, (i as f64 * 1.3).sin())).collect();
        (SurfaceDensity::new(rt.clone(), a).unwrap(), SurfaceDensity::new(rt, b).unwrap())
    }

    fn fd_curl(f: &dyn Fn(Vec3) -> CVec3, x: Vec3, h: f64) -> CVec3 {
        let d = |i: usize, j: usize| {
            let mut e = [0.0; 3];
            e[j] = h;
            (f(x + Vec3(e)).0[i] - f(x - Vec3(e)).0[i]) / (2.0 * h)
        };
        CVec3([d(2, 1) - d(1, 2), d(0, 2) - d(2, 0), d(1, 0) - d(0, 1)])
    }

    #[test]
    fn zero_density_gives_zero_field() {
        let (a, _) = densities();
        let z = SurfaceDensity::zeros(a.space.clone());
        let s = eval_scattered(&z, &z, 1.0, -1.0, &[Vec3::new(0.0, 0.0, 3.0)]).unwrap();
        assert_eq!(s[0].e.norm(), 0.0);
        assert_eq!(s[0].curl_e.norm(), 0.0);
    }

    #[test]
    fn field_is_divergence_free_and_curl_is_consistent() {
        let (phi, psi) = densities();
        let (k, eta) = (1.5, -2.25);
        let field = |x: Vec3| eval_scattered(&phi, &psi, k, eta, &[x]).unwrap()[0];
        let x = Vec3::new(0.4, -1.1, 1.3);
        let h = 1e-4;
        let mut div = Complex64::new(0.0, 0.0);
        for j in 0..3 {
            let mut e = [0.0; 3];
            e[j] = h;
            div += (field(x + Vec3(e)).e.0[j] - field(x - Vec3(e)).e.0[j]) / (2.0 * h);
        }
        let s = field(x);
        assert!(div.norm() < 1e-6 * k * s.e.norm(), "div {div}");
        let curl = fd_curl(&|p| field(p).e, x, h);
        assert!((curl - s.curl_e).norm() < 1e-6 * s.curl_e.norm());
        // curl curl e − κ² e = 0 with the analytic curl differentiated once more.
        let cc = fd_curl(&|p| field(p).curl_e, x, h);
        assert!((cc - s.e * (k * k)).norm() < 1e-4 * (k * k) * s.e.norm());
    }

    #[test]
    fn far_field_decays_like_one_over_r() {
        let (phi, psi) = densities();
        let pts: Vec<Vec3> = [10.0, 20.0, 40.0].iter().map(|&r| Vec3::new(0.0, 0.6, 0.8) * r).collect();
        let s = eval_scattered(&phi, &psi, 2.0, -4.0, &pts).unwrap();
        let rs: Vec<f64> = s.iter().zip([10.0, 20.0, 40.0]).map(|(v, r)| v.e.norm() * r).collect();
        assert!(rs[2] < 1.1 * rs[1] && rs[1] < 1.1 * rs[0] && rs[2] > 0.0, "{rs:?}");
    }

    #[test]
    fn near_surface_points_are_rejected() {
        let (phi, psi) = densities();
        let v = phi.space.mesh().vertices()[0];
        assert!(matches!(eval_scattered(&phi, &psi, 1.0, 1.0, &[v * 1.0000001]), Err(Error::NearSurface { .. })));
    }

    #[test]
    fn incident_field_at_origin_and_csv_header() {
        let w = PlaneWave::standard(3.0).unwrap();
        let s = eval_incident(&w, &[Vec3::new(0.0, 0.0, 0.0), Vec3::new(1.0, 2.0, 3.0)]);
        assert_eq!(s[0].e.0[0], Complex64::new(1.0, 0.0));
        assert!((s[1].e.norm() - 1.0).abs() < 1e-14);
        let mut buf = Vec::new();
        write_field_csv(&s, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 3);
        assert_eq!(text.lines().next().unwrap().split(',').count(), 15);
    }
}
