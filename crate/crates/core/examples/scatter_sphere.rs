//! Plane-wave scattering by the unit sphere at an interior resonance,
//! compared with the Mie series.

use cfie::analysis::{avg_pointwise_error, eval_points_sphere};
use cfie::cfie::{assemble_rhs, CfieSystem, PlaneWave};
use cfie::kernels::Wavenumber;
use cfie::mesh::{make_sphere_mesh, meshwidth};
use cfie::mie::{build_mie, eval_mie};
use cfie::operators::QuadratureOptions;
use cfie::potentials::eval_scattered;
use cfie::spaces::SurfaceDensity;
use std::sync::Arc;

fn main() -> cfie::Result<()> {
    let kappa = 4.4934;
    let eta = -kappa * kappa;
    let points = eval_points_sphere(500, 2.0);
    let exact = eval_mie(&build_mie(kappa, 1.0)?, &points)?;
    let wave = PlaneWave::standard(kappa)?;
    for h in [0.45, 0.3] {
        let mesh = Arc::new(make_sphere_mesh(1.0, h)?);
        let width = meshwidth(&mesh);
        let sys = CfieSystem::assemble(mesh, Wavenumber::new(kappa, kappa)?, eta, &QuadratureOptions::default())?;
        let b = assemble_rhs(&wave, &sys.spaces.rt0, 5)?;
        let sol = sys.solve(&b, 1e-8, 500, None)?;
        let phi = SurfaceDensity::new(sys.spaces.rt0.clone(), sol.phi)?;
        let psi = SurfaceDensity::new(sys.spaces.rt0.clone(), sol.psi)?;
        let numeric = eval_scattered(&phi, &psi, kappa, eta, &points)?;
        println!(
            "h={width:.3} N={}: {} GMRES iterations, block residual {:.1e}, field error {:.3e}",
            sys.dof_count(),
            sol.iterations,
            sol.block_residual,
            avg_pointwise_error(&numeric, &exact)?
        );
    }
    Ok(())
}
