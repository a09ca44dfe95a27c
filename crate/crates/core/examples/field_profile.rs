//! Scattered field along a line through a cube, written as CSV.

use cfie::cfie::{assemble_rhs, CfieSystem, PlaneWave};
use cfie::geom::Vec3;
use cfie::kernels::Wavenumber;
use cfie::mesh::make_cube_mesh;
use cfie::operators::QuadratureOptions;
use cfie::potentials::{eval_scattered, write_field_csv};
use cfie::spaces::SurfaceDensity;
use std::sync::Arc;

fn main() -> cfie::Result<()> {
    let (kappa, eta) = (3.0, -9.0);
    // Unit cube centred at the origin; sample the z axis outside it.
    let mesh = Arc::new(make_cube_mesh(1.0, 0.3)?);
    let sys = CfieSystem::assemble(mesh, Wavenumber::new(kappa, kappa)?, eta, &QuadratureOptions::default())?;
    let b = assemble_rhs(&PlaneWave::standard(kappa)?, &sys.spaces.rt0, 5)?;
    let sol = sys.solve(&b, 1e-8, 500, None)?;
    let phi = SurfaceDensity::new(sys.spaces.rt0.clone(), sol.phi)?;
    let psi = SurfaceDensity::new(sys.spaces.rt0.clone(), sol.psi)?;
    let points: Vec<Vec3> = (0..40)
        .map(|i| -2.0 + 4.0 * i as f64 / 39.0)
        .filter(|z: &f64| z.abs() > 0.6)
        .map(|z| Vec3::new(0.0, 0.0, z))
        .collect();
    let samples = eval_scattered(&phi, &psi, kappa, eta, &points)?;
    write_field_csv(&samples, std::io::stdout().lock())?;
    Ok(())
}
