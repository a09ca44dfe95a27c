//! Regularized quadrature of a weakly singular integral over triangle pairs.

use cfie::geom::Vec3;
use cfie::quadrature::{integrate_pair, PairCase};
use num_complex::Complex64;
use std::f64::consts::PI;

fn main() -> cfie::Result<()> {
    let kernel = |x: Vec3, y: Vec3| Complex64::new(1.0 / (4.0 * PI * (x - y).norm()), 0.0);
    let t = [Vec3::new(0.0, 0.0, 0.0), Vec3::new(1.0, 0.0, 0.0), Vec3::new(0.0, 1.0, 0.0)];
    let shared_edge = [Vec3::new(1.0, 0.0, 0.0), Vec3::new(0.0, 1.0, 0.0), Vec3::new(1.0, 1.0, 0.2)];
    let shared_vertex = [Vec3::new(0.0, 0.0, 0.0), Vec3::new(-1.0, 0.0, 0.1), Vec3::new(0.0, -1.0, 0.0)];
    for order in [2, 4, 6, 8, 10] {
        let a = integrate_pair(kernel, t, t, PairCase::Identical, order)?.re;
        let b = integrate_pair(kernel, t, shared_edge, PairCase::CommonEdge, order)?.re;
        let c = integrate_pair(kernel, t, shared_vertex, PairCase::CommonVertex, order)?.re;
        println!("order {order:2}: identical {a:.14}  edge {b:.14}  vertex {c:.14}");
    }
    Ok(())
}
