//! Condition numbers of the preconditioned CFIE against the plain EFIE,
//! and the discrete Calderón residual, on a coarse sphere.

use cfie::analysis::{calderon_residual, condition_number, preconditioned_cond};
use cfie::cfie::{build_efie_reference, CfieSystem};
use cfie::kernels::Wavenumber;
use cfie::mesh::make_sphere_mesh;
use cfie::operators::QuadratureOptions;
use std::sync::Arc;

fn main() -> cfie::Result<()> {
    let q = QuadratureOptions::default();
    let mesh = Arc::new(make_sphere_mesh(1.0, 0.45)?);
    for kappa in [0.05, 1.0, 2.7437, 3.2] {
        let sys = CfieSystem::assemble(mesh.clone(), Wavenumber::new(kappa, kappa)?, -kappa * kappa, &q)?;
        let efie = build_efie_reference(kappa, &sys.spaces.rt0, &q)?;
        println!(
            "kappa={kappa:6.4}: cond CFIE {:7.3}, cond EFIE {:10.1}",
            preconditioned_cond(&sys)?,
            condition_number(&efie.matrix)?
        );
    }
    for h in [0.45, 0.3] {
        let r = calderon_residual(Arc::new(make_sphere_mesh(1.0, h)?), 1.0, &q)?;
        println!("Calderon residual at N={}: {:.3e} on smooth data, {:.3} in matrix norm", r.dofs, r.smooth, r.frobenius);
    }
    Ok(())
}
