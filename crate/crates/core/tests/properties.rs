//! Randomized invariants of the solver building blocks.

use cfie::analysis::condition_number;
use cfie::cfie::{assemble_rhs, CfieSystem, PlaneWave};
use cfie::geom::Vec3;
use cfie::kernels::Wavenumber;
use cfie::linalg::{gmres, matvec, norm};
use cfie::mesh::icosphere;
use cfie::operators::{read_matrix, write_matrix, QuadratureOptions};
use faer::Mat;
use num_complex::Complex64;
use proptest::prelude::*;
use std::sync::{Arc, OnceLock};

fn small_system() -> &'static CfieSystem {
    static SYS: OnceLock<CfieSystem> = OnceLock::new();
    SYS.get_or_init(|| {
        let mesh = Arc::new(icosphere(1.0, 1).unwrap());
        CfieSystem::assemble(mesh, Wavenumber::new(2.0, 2.0).unwrap(), -4.0, &QuadratureOptions::default()).unwrap()
    })
}

fn complex_vec(len: usize) -> impl Strategy<Value = Vec<Complex64>> {
    prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0).prop_map(|(a, b)| Complex64::new(a, b)), len)
}

fn dist(a: &[Complex64], b: &[Complex64]) -> f64 {
    let d: Vec<Complex64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    norm(&d)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn schur_operator_is_linear(x in complex_vec(30), y in complex_vec(30), re in -2.0f64..2.0, im in -2.0f64..2.0) {
        let sys = small_system();
        let a = Complex64::new(re, im);
        let combo: Vec<Complex64> = x.iter().zip(&y).map(|(p, q)| a * p + q).collect();
        let lhs = sys.schur_apply(&combo);
        let rhs: Vec<Complex64> = sys.schur_apply(&x).iter().zip(sys.schur_apply(&y)).map(|(p, q)| a * p + q).collect();
        prop_assert!(dist(&lhs, &rhs) <= 1e-12 * (norm(&rhs) + 1e-300));
    }

    #[test]
    fn gmres_solves_diagonally_dominant_systems(n in 2usize..40, seed in complex_vec(40 * 40), b in complex_vec(40)) {
        let a = Mat::from_fn(n, n, |i, j| {
            let off = seed[i * 40 + j] * (0.5 / n as f64);
            if i == j { off + Complex64::new(2.0, 0.5) } else { off }
        });
        let b = &b[..n];
        prop_assume!(norm(b) > 1e-3);
        let out = gmres(|v| matvec(&a, v), None::<fn(&[Complex64]) -> Vec<Complex64>>, b, None, 1e-10, 200).unwrap();
        prop_assert!(dist(&matvec(&a, &out.x), b) <= 1e-9 * norm(b));
        prop_assert!(out.iterations <= n);
    }

    #[test]
    fn matrix_dump_roundtrips(rows in 0usize..6, cols in 0usize..6, vals in complex_vec(36)) {
        let m = Mat::from_fn(rows, cols, |i, j| vals[i * 6 + j]);
        let mut buf = Vec::new();
        write_matrix(&m, &mut buf).unwrap();
        let back = read_matrix(std::io::Cursor::new(buf)).unwrap();
        prop_assert_eq!(back, m);
    }

    #[test]
    fn condition_number_is_scale_invariant(vals in complex_vec(16), s in 0.1f64..10.0, phase in 0.0f64..std::f64::consts::TAU) {
        let m = Mat::from_fn(4, 4, |i, j| vals[i * 4 + j] + if i == j { Complex64::new(3.0, 0.0) } else { Complex64::new(0.0, 0.0) });
        let c = Complex64::from_polar(s, phase);
        let scaled = Mat::from_fn(4, 4, |i, j| m[(i, j)] * c);
        let (c1, c2) = (condition_number(&m).unwrap(), condition_number(&scaled).unwrap());
        prop_assert!((c1 - c2).abs() <= 1e-9 * c1);
        prop_assert!(c1 >= 1.0 - 1e-12);
    }

    #[test]
    fn rhs_is_linear_in_amplitude(re in -3.0f64..3.0, im in -3.0f64..3.0, theta in 0.0f64..std::f64::consts::PI) {
        let sys = small_system();
        let dir = Vec3::new(theta.sin(), 0.0, theta.cos());
        let pol = Vec3::new(0.0, 1.0, 0.0);
        let wave = PlaneWave::new(pol, dir, 2.0).unwrap();
        let a = Complex64::new(re, im);
        let b1 = assemble_rhs(&wave, &sys.spaces.rt0, 5).unwrap();
        let b2 = assemble_rhs(&wave.with_amplitude(a), &sys.spaces.rt0, 5).unwrap();
        let scaled: Vec<Complex64> = b1.iter().map(|z| a * z).collect();
        prop_assert!(dist(&b2, &scaled) <= 1e-13 * (norm(&scaled) + 1e-300));
    }
}

#[test]
fn solution_is_linear_in_the_incident_amplitude() {
    let sys = small_system();
    let wave = PlaneWave::standard(2.0).unwrap();
    let b = assemble_rhs(&wave, &sys.spaces.rt0, 5).unwrap();
    let a = Complex64::new(0.3, -1.7);
    let b2: Vec<Complex64> = b.iter().map(|z| a * z).collect();
    let s1 = sys.solve(&b, 1e-12, 200, None).unwrap();
    let s2 = sys.solve(&b2, 1e-12, 200, None).unwrap();
    let scaled: Vec<Complex64> = s1.phi.iter().map(|z| a * z).collect();
    assert!(dist(&s2.phi, &scaled) < 1e-9 * norm(&scaled));
}
