//! Helmholtz and Yukawa Green's functions and the smooth difference kernel.

use cfie::geom::Vec3;
use cfie::kernels::{green, green_difference};
use num_complex::Complex64;

fn main() -> cfie::Result<()> {
    let (kappa, kappa_prime) = (2.0, 2.0);
    let x = Vec3::new(0.0, 0.0, 0.0);
    println!("{:>8} {:>24} {:>12} {:>24}", "r", "G_k", "G_ik'", "G_k - G_ik'");
    for r in [1e-6, 1e-3, 0.1, 0.5, 1.0, 2.0] {
        let y = Vec3::new(r, 0.0, 0.0);
        let gk = green(Complex64::new(kappa, 0.0), x, y)?;
        let gy = green(Complex64::new(0.0, kappa_prime), x, y)?;
        let d = green_difference(kappa, kappa_prime, x, y);
        println!("{r:8.0e} {:>11.4e}{:+.4e}i {:12.4e} {:>11.4e}{:+.4e}i", gk.re, gk.im, gy.re, d.re, d.im);
    }
    println!("the difference stays bounded as r -> 0: {:?}", green_difference(kappa, kappa_prime, x, x));
    Ok(())
}
