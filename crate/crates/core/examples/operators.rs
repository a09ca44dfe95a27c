//! Assemble the Galerkin blocks of the preconditioned system and inspect them.

use cfie::cfie::CfieSystem;
use cfie::kernels::Wavenumber;
use cfie::mesh::make_sphere_mesh;
use cfie::operators::{relative_asymmetry, to_complex, write_matrix, QuadratureOptions};
use faer::Side;
use std::sync::Arc;

fn main() -> cfie::Result<()> {
    let mesh = Arc::new(make_sphere_mesh(1.0, 0.45)?);
    let kappa = 2.0;
    let sys = CfieSystem::assemble(mesh, Wavenumber::new(kappa, kappa)?, -kappa * kappa, &QuadratureOptions::default())?;
    let n = sys.dof_count();
    println!("{n} unknowns per block");
    let lam = sys.s.self_adjoint_eigenvalues(Side::Lower).expect("eigenvalues");
    println!("Yukawa EFIE on BC: asymmetry {:.1e}, eigenvalues in [{:.3e}, {:.3e}]", relative_asymmetry(&to_complex(&sys.s)), lam[0], lam[n - 1]);
    println!("|M|_F = {:.4e}, |Z|_F = {:.4e}, |C|_F = {:.4e}", sys.m().norm_l2(), sys.z().norm_l2(), sys.c_delta().norm_l2());
    let path = std::env::temp_dir().join("M.bin");
    write_matrix(&sys.m(), std::io::BufWriter::new(std::fs::File::create(&path)?))?;
    println!("wrote {}", path.display());
    Ok(())
}
