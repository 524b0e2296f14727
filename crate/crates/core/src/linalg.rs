//! Shared dense-vector solvers: conjugate gradients for SPD operators and
//! power iteration for symmetric operator norms.

use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    crate::math::sqrt(dot(a, a))
}

pub fn axpy(y: &mut [f64], alpha: f64, x: &[f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// Outcome of a CG solve.
#[derive(Clone, Debug)]
pub struct CgResult {
    pub x: Vec<f64>,
    pub iterations: usize,
    pub rel_residual: f64,
    pub converged: bool,
}

/// Conjugate gradients for a symmetric positive (semi)definite operator,
/// starting from zero, run until `||r|| <= rtol * ||b||`.
///
/// Residual norms are nonincreasing on an SPD system; the caller decides
/// whether a non-converged result is an error.
pub fn cg_solve<F>(mut apply: F, b: &[f64], rtol: f64, max_iter: usize) -> CgResult
where
    F: FnMut(&[f64]) -> Vec<f64>,
{
    let n = b.len();
    let b_norm = norm(b);
    if b_norm == 0.0 {
        return CgResult {
            x: vec![0.0; n],
            iterations: 0,
            rel_residual: 0.0,
            converged: true,
        };
    }
    let mut x = vec![0.0; n];
    let mut r = b.to_vec();
    let mut p = r.clone();
    let mut rs = dot(&r, &r);
    let target = rtol * b_norm;
    let mut iterations = 0;
    while iterations < max_iter {
        let ap = apply(&p);
        let pap = dot(&p, &ap);
        if pap <= 0.0 {
            // Operator is only semidefinite along p; stop at the best iterate.
            break;
        }
        let alpha = rs / pap;
        axpy(&mut x, alpha, &p);
        axpy(&mut r, -alpha, &ap);
        iterations += 1;
        let rs_new = dot(&r, &r);
        if crate::math::sqrt(rs_new) <= target {
            rs = rs_new;
            break;
        }
        let beta = rs_new / rs;
        rs = rs_new;
        for i in 0..n {
            p[i] = r[i] + beta * p[i];
        }
    }
    let rel = crate::math::sqrt(rs) / b_norm;
    CgResult {
        x,
        iterations,
        rel_residual: rel,
        converged: rel <= rtol,
    }
}

/// Largest-magnitude eigenvalue of a symmetric operator by power iteration
/// with a seeded start vector. Deterministic for a fixed seed.
pub fn power_iteration<F>(mut apply: F, n: usize, iters: usize, seed: u64) -> f64
where
    F: FnMut(&[f64]) -> Vec<f64>,
{
    if n == 0 {
        return 0.0;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v: Vec<f64> = (0..n).map(|_| rng.random::<f64>() - 0.5).collect();
    let nv = norm(&v);
    for vi in v.iter_mut() {
        *vi /= nv;
    }
    let mut lambda = 0.0;
    for _ in 0..iters {
        let w = apply(&v);
        let nw = norm(&w);
        if nw == 0.0 {
            return 0.0;
        }
        lambda = dot(&v, &w);
        for (vi, wi) in v.iter_mut().zip(&w) {
            *vi = wi / nw;
        }
    }
    lambda.abs()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cg_solves_diagonal_system() {
        let d = [2.0, 3.0, 4.0];
        let b = [2.0, 6.0, 12.0];
        let res = cg_solve(
            |v| v.iter().zip(d).map(|(vi, di)| vi * di).collect(),
            &b,
            1e-12,
            50,
        );
        assert!(res.converged);
        for (xi, ei) in res.x.iter().zip([1.0, 2.0, 3.0]) {
            assert!((xi - ei).abs() < 1e-10);
        }
    }

    #[test]
    fn cg_zero_rhs_returns_zero() {
        let res = cg_solve(|v| v.to_vec(), &[0.0; 5], 1e-10, 10);
        assert!(res.converged);
        assert!(res.x.iter().all(|&x| x == 0.0));
        assert_eq!(res.iterations, 0);
    }

    #[test]
    fn power_iteration_finds_dominant_eigenvalue() {
        let d = [-5.0, 1.0, 2.0];
        let lam = power_iteration(
            |v| v.iter().zip(d).map(|(vi, di)| vi * di).collect(),
            3,
            200,
            7,
        );
        assert!((lam - 5.0).abs() < 1e-8);
    }

    #[test]
    fn power_iteration_is_deterministic() {
        let apply = |v: &[f64]| v.iter().map(|x| 2.0 * x).collect::<Vec<_>>();
        let a = power_iteration(apply, 8, 50, 42);
        let b = power_iteration(apply, 8, 50, 42);
        assert_eq!(a, b);
    }
}
