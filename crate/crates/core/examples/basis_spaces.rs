//! RT0 functions on a mesh and Buffa–Christiansen functions on its barycentric refinement.

use cfie::mesh::{barycentric_refine, make_sphere_mesh};
use cfie::spaces::{build_bc_space, build_rt0_space, evaluate_basis};
use std::sync::Arc;

fn main() -> cfie::Result<()> {
    let mesh = Arc::new(make_sphere_mesh(1.0, 0.45)?);
    let refined = barycentric_refine(&mesh)?;
    let rt = build_rt0_space(mesh.clone());
    let bc = build_bc_space(&refined)?;
    println!("RT0: {} functions, BC: {} functions", rt.dof_count(), bc.dof_count());
    println!("BC function 0 lives on {} fine triangles", bc.support(0).len());

    let t = rt.support(0)[0];
    let (v, div) = evaluate_basis(&rt, 0, t, [1.0 / 3.0; 3]);
    println!("RT0 function 0 at the centroid of triangle {t}: {v:?}, divergence {div:.4}");

    // Every BC function has zero mean divergence.
    let worst = (0..bc.dof_count())
        .map(|d| bc.support(d).iter().map(|&t| evaluate_basis(&bc, d, t, [0.3; 3]).1 * bc.mesh().area(t)).sum::<f64>().abs())
        .fold(0.0, f64::max);
    println!("max |mean divergence| over BC functions: {worst:.1e}");
    Ok(())
}
