//! The Mie series for a perfectly conducting sphere and its boundary condition.

use cfie::analysis::eval_points_sphere;
use cfie::cfie::PlaneWave;
use cfie::mie::build_mie;

fn main() -> cfie::Result<()> {
    for kappa in [0.1, 1.0, 2.7437, 4.4934, 10.0] {
        let sol = build_mie(kappa, 1.0)?;
        let wave = PlaneWave::standard(kappa)?;
        let mut worst = 0.0f64;
        for p in eval_points_sphere(200, 1.0) {
            let (e_in, _) = wave.field(p);
            worst = worst.max((sol.field(p)?.e + e_in).cross_real(p).norm());
        }
        let far = sol.field(cfie::geom::Vec3::new(0.0, 0.0, 50.0))?;
        println!("kappa={kappa:7.4}: {:2} terms, max |(e_s+e_in) x n| = {worst:.1e}, |e_s| at 50 m = {:.3e}", sol.n_terms, far.e.norm());
    }
    Ok(())
}
