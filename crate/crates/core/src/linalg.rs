//! Dense helpers and a full (unrestarted) GMRES.

use crate::error::{Error, Result};
use faer::Mat;
use num_complex::Complex64;

pub fn norm(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Conjugated inner product `Σ conj(a_i) b_i`.
pub fn dotc(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub fn matvec(m: &Mat<Complex64>, x: &[Complex64]) -> Vec<Complex64> {
    assert_eq!(m.ncols(), x.len(), "matvec dimension mismatch");
    let mut y = vec![Complex64::new(0.0, 0.0); m.nrows()];
    for (j, &xj) in x.iter().enumerate() {
        if xj == Complex64::new(0.0, 0.0) {
            continue;
        }
        let col = m.col(j);
        for (i, yi) in y.iter_mut().enumerate() {
            *yi += col[i] * xj;
        }
    }
    y
}

pub fn real_matvec(m: &Mat<f64>, x: &[Complex64]) -> Vec<Complex64> {
    assert_eq!(m.ncols(), x.len(), "matvec dimension mismatch");
    let mut y = vec![Complex64::new(0.0, 0.0); m.nrows()];
    for (j, &xj) in x.iter().enumerate() {
        let col = m.col(j);
        for (i, yi) in y.iter_mut().enumerate() {
            *yi += xj * col[i];
        }
    }
    y
}

pub fn column(v: &[Complex64]) -> Mat<Complex64> {
    Mat::from_fn(v.len(), 1, |i, _| v[i])
}

pub fn column_to_vec(m: &Mat<Complex64>) -> Vec<Complex64> {
    (0..m.nrows()).map(|i| m[(i, 0)]).collect()
}

/// Result of a GMRES run.
#[derive(Clone, Debug)]
pub struct GmresOutcome {
    pub x: Vec<Complex64>,
    pub iterations: usize,
    /// Relative residual after each iteration, starting with the initial one.
    pub history: Vec<f64>,
}

/// Full GMRES for `A x = b`, optionally right-preconditioned: the Krylov
/// space is built for `A P` and `x = x0 + P y`, so the monitored residual is
/// the true residual `‖b − A x‖ / ‖b‖`.
///
/// Fails with [`Error::NotConverged`] after `max_iter` iterations.
pub fn gmres<A, P>(
    mut apply: A,
    mut precond: Option<P>,
    b: &[Complex64],
    x0: Option<&[Complex64]>,
    tol: f64,
    max_iter: usize,
) -> Result<GmresOutcome>
where
    A: FnMut(&[Complex64]) -> Vec<Complex64>,
    P: FnMut(&[Complex64]) -> Vec<Complex64>,
{
    if !(tol > 0.0 && tol < 1.0) {
        return Err(Error::InvalidInput(format!("GMRES tolerance must lie in (0,1), got {tol}")));
    }
    let n = b.len();
    let zero = Complex64::new(0.0, 0.0);
    let bnorm = norm(b);
    let mut x: Vec<Complex64> = match x0 {
        Some(v) if v.len() == n => v.to_vec(),
        Some(v) => return Err(Error::InvalidInput(format!("initial guess length {} ≠ {n}", v.len()))),
        None => vec![zero; n],
    };
    if bnorm == 0.0 {
        return Ok(GmresOutcome { x: vec![zero; n], iterations: 0, history: vec![0.0] });
    }
    let mut r = apply(&x);
    for (ri, bi) in r.iter_mut().zip(b) {
        *ri = *bi - *ri;
    }
    let beta = norm(&r);
    let mut history = vec![beta / bnorm];
    if beta / bnorm <= tol {
        return Ok(GmresOutcome { x, iterations: 0, history });
    }
    let m = max_iter.min(n.max(1));
    let mut basis: Vec<Vec<Complex64>> = Vec::with_capacity(m + 1);
    basis.push(r.iter().map(|v| v / beta).collect());
    // Hessenberg columns after Givens rotations (upper triangular R).
    let mut rcols: Vec<Vec<Complex64>> = Vec::with_capacity(m);
    let mut rot: Vec<(f64, Complex64)> = Vec::with_capacity(m);
    let mut g = vec![Complex64::new(beta, 0.0)];
    let mut k = 0;
    while k < m {
        let z = match precond.as_mut() {
            Some(p) => p(&basis[k]),
            None => basis[k].clone(),
        };
        let mut w = apply(&z);
        let mut h = vec![zero; k + 2];
        // Modified Gram-Schmidt with one reorthogonalization pass.
        for _ in 0..2 {
            for (i, vi) in basis.iter().enumerate() {
                let c = dotc(vi, &w);
                h[i] += c;
                for (wj, vj) in w.iter_mut().zip(vi) {
                    *wj -= c * vj;
                }
            }
        }
        let hn = norm(&w);
        h[k + 1] = Complex64::new(hn, 0.0);
        for (i, &(c, s)) in rot.iter().enumerate() {
            let (a, bb) = (h[i], h[i + 1]);
            h[i] = a * c + s * bb;
            h[i + 1] = -s.conj() * a + bb * c;
        }
        let (a, bb) = (h[k], h[k + 1]);
        let denom = (a.norm_sqr() + bb.norm_sqr()).sqrt();
        let (c, s) = if denom == 0.0 {
            (1.0, zero)
        } else if a.norm() == 0.0 {
            (0.0, (bb / denom).conj() * Complex64::new(1.0, 0.0))
        } else {
            let c = a.norm() / denom;
            let s = (a / a.norm()) * bb.conj() / denom;
            (c, s)
        };
        h[k] = a * c + s * bb;
        h[k + 1] = zero;
        rot.push((c, s));
        let gk = g[k];
        g[k] = gk * c;
        g.push(-s.conj() * gk);
        h.truncate(k + 1);
        rcols.push(h);
        k += 1;
        let res = g[k].norm() / bnorm;
        history.push(res);
        if res <= tol || hn == 0.0 {
            break;
        }
        basis.push(w.iter().map(|v| v / hn).collect());
    }
    // Back substitution R y = g.
    let mut y = vec![zero; k];
    for i in (0..k).rev() {
        let mut s = g[i];
        for j in i + 1..k {
            s -= rcols[j][i] * y[j];
        }
        y[i] = s / rcols[i][i];
    }
    let mut u = vec![zero; n];
    for (j, yj) in y.iter().enumerate() {
        for (ui, vi) in u.iter_mut().zip(&basis[j]) {
            *ui += yj * vi;
        }
    }
    let dx = match precond.as_mut() {
        Some(p) => p(&u),
        None => u,
    };
    for (xi, di) in x.iter_mut().zip(&dx) {
        *xi += di;
    }
    let final_res = *history.last().expect("nonempty history");
    if final_res > tol {
        return Err(Error::NotConverged { iterations: k, final_residual: final_res, history });
    }
    Ok(GmresOutcome { x, iterations: k, history })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn test_matrix(n: usize) -> Mat<Complex64> {
        Mat::from_fn(n, n, |i, j| {
            let d = if i == j { 4.0 } else { 0.0 };
            Complex64::new(d + ((i * 31 + j * 17) % 7) as f64 / 10.0, ((i + 2 * j) % 5) as f64 / 10.0 - 0.2)
        })
    }

    #[test]
    fn solves_small_system_exactly_in_n_steps() {
        let a = test_matrix(12);
        let b: Vec<Complex64> = (0..12).map(|i| Complex64::new(i as f64, 1.0)).collect();
        let out = gmres(|x| matvec(&a, x), None::<fn(&[Complex64]) -> Vec<Complex64>>, &b, None, 1e-12, 100).unwrap();
        assert!(out.iterations <= 12);
        let r = matvec(&a, &out.x);
        let res: Vec<_> = r.iter().zip(&b).map(|(p, q)| p - q).collect();
        assert!(norm(&res) <= 1e-11 * norm(&b));
    }

    #[test]
    fn right_preconditioner_keeps_true_residual() {
        let a = test_matrix(20);
        let d: Vec<f64> = (0..20).map(|i| 1.0 / a[(i, i)].norm()).collect();
        let b: Vec<Complex64> = (0..20).map(|i| Complex64::new(1.0, i as f64 * 0.1)).collect();
        let p = |v: &[Complex64]| v.iter().zip(&d).map(|(x, s)| x * s).collect::<Vec<_>>();
        let out = gmres(|x| matvec(&a, x), Some(p), &b, None, 1e-10, 100).unwrap();
        let r = matvec(&a, &out.x);
        let res: Vec<_> = r.iter().zip(&b).map(|(p, q)| p - q).collect();
        assert!(norm(&res) <= 1.5e-10 * norm(&b));
        assert!(out.history.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12)));
    }

    #[test]
    fn zero_rhs_gives_zero_solution() {
        let a = test_matrix(5);
        let b = vec![Complex64::new(0.0, 0.0); 5];
        let out = gmres(|x| matvec(&a, x), None::<fn(&[Complex64]) -> Vec<Complex64>>, &b, None, 1e-8, 10).unwrap();
        assert_eq!(out.iterations, 0);
        assert!(out.x.iter().all(|z| *z == Complex64::new(0.0, 0.0)));
    }

    #[test]
    fn reports_non_convergence_with_history() {
        let a = test_matrix(30);
        let b: Vec<Complex64> = (0..30).map(|i| Complex64::new((i % 3) as f64, 0.0)).collect();
        match gmres(|x| matvec(&a, x), None::<fn(&[Complex64]) -> Vec<Complex64>>, &b, None, 1e-14, 2) {
            Err(Error::NotConverged { iterations, history, .. }) => {
                assert_eq!(iterations, 2);
                assert_eq!(history.len(), 3);
            }
            other => panic!("expected non-convergence, got {other:?}"),
        }
    }
}
