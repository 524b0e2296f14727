//! Dirichlet Poisson solve and the solenoidal decomposition.

use alloc::vec;
use alloc::vec::Vec;

use super::{divergence, gradient, CovectorField, FieldError, Grid, ScalarField, SolverConfig};
use crate::linalg;

/// Restricts a full-grid scalar to the interior DOF vector.
fn restrict(grid: &Grid, s: &ScalarField) -> Vec<f64> {
    grid.interior_nodes()
        .iter()
        .map(|&n| s.values[n as usize])
        .collect()
}

/// Extends an interior DOF vector by zeros (Dirichlet band and exterior).
fn extend(grid: &alloc::sync::Arc<Grid>, x: &[f64]) -> ScalarField {
    let mut s = ScalarField::zeros(grid.clone());
    for (k, &n) in grid.interior_nodes().iter().enumerate() {
        s.values[n as usize] = x[k];
    }
    s
}

/// Solves `div(grad(phi)) = rhs` on the interior nodes with zero Dirichlet
/// values on the boundary band, by conjugate gradients on the (negated,
/// SPD) composed operator.
///
/// The operator is exactly the one the decomposition uses, so the resulting
/// projection is orthogonal to machine precision rather than to truncation
/// order.
pub fn poisson_dirichlet(rhs: &ScalarField, cfg: &SolverConfig) -> Result<ScalarField, FieldError> {
    let grid = rhs.grid.clone();
    let b: Vec<f64> = restrict(&grid, rhs).iter().map(|v| -v).collect();
    let apply = |x: &[f64]| -> Vec<f64> {
        let full = extend(&grid, x);
        let lap = super::laplacian(&full);
        grid.interior_nodes()
            .iter()
            .map(|&n| -lap.values[n as usize])
            .collect()
    };
    let res = linalg::cg_solve(apply, &b, cfg.tol, cfg.max_iter);
    if !res.converged {
        return Err(FieldError::NoConvergence {
            iterations: res.iterations,
            rel_residual: res.rel_residual,
        });
    }
    Ok(extend(&grid, &res.x))
}

/// Splits `f = f_s + grad(phi)` with `phi` vanishing on the mask boundary
/// and `div(f_s) = 0` on interior nodes: `phi` solves the Dirichlet problem
/// for `div f`, and `f_s = f - grad(phi)`.
pub fn solenoidal_decompose(
    f: &CovectorField,
    cfg: &SolverConfig,
) -> Result<(CovectorField, ScalarField), FieldError> {
    let phi = poisson_dirichlet(&divergence(f), cfg)?;
    let fs = f.scaled_sub(&gradient(&phi), 1.0);
    Ok((fs, phi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::synth::{bump, bump_gradient, bump_laplacian};
    use crate::fields::{laplacian, Grid, NodeKind, Pair};
    use crate::geometry::Domain;
    use crate::Vec2;
    use alloc::sync::Arc;
    use nalgebra::{DMatrix, DVector};

    fn grid(n: usize) -> Arc<Grid> {
        Grid::for_m(&Domain::default(), n).unwrap()
    }

    #[test]
    fn zero_rhs_gives_zero_solution() {
        let g = grid(16);
        let rhs = ScalarField::zeros(g);
        let phi = poisson_dirichlet(&rhs, &SolverConfig::default()).unwrap();
        assert!(phi.values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn matches_analytic_bump_at_second_order() {
        // rhs = Laplacian of the bump, computed analytically; the solve
        // must return the bump up to O(spacing^2).
        let dom = Domain::default();
        let c = Vec2::new(0.1, -0.05);
        let r = 0.7;
        let err_at = |n: usize| {
            let g = Grid::for_m(&dom, n).unwrap();
            let rhs = ScalarField::from_fn(g.clone(), |p| bump_laplacian(c, r, p));
            let phi = poisson_dirichlet(&rhs, &SolverConfig::default()).unwrap();
            let exact = ScalarField::from_fn(g.clone(), |p| bump(c, r, p));
            let mut diff = phi.clone();
            for i in 0..diff.values.len() {
                diff.values[i] -= exact.values[i];
            }
            diff.norm_l2() / exact.norm_l2()
        };
        let coarse = err_at(24);
        let fine = err_at(48);
        assert!(fine < 0.02, "fine relative error {fine}");
        assert!(coarse / fine > 3.0, "convergence ratio {}", coarse / fine);
    }

    #[test]
    fn dense_solve_oracle_and_maximum_principle() {
        // Direct dense solve of the same operator on a small grid, plus the
        // sign prediction of the discrete maximum principle for a positive
        // point source.
        let g = grid(8);
        let interior = g.interior_nodes();
        let m = interior.len();
        let mut a = DMatrix::<f64>::zeros(m, m);
        for k in 0..m {
            let mut e = vec![0.0; m];
            e[k] = 1.0;
            let full = extend(&g, &e);
            let lap = laplacian(&full);
            for (r, &n) in interior.iter().enumerate() {
                a[(r, k)] = lap.values[n as usize];
            }
        }
        // Delta-like source at one interior node.
        let mut rhs = ScalarField::zeros(g.clone());
        let src = interior[m / 2] as usize;
        rhs.values[src] = 1.0;
        let b = DVector::from_iterator(m, interior.iter().map(|&n| rhs.values[n as usize]));
        let dense = a.lu().solve(&b).expect("dense solve");
        let cg = poisson_dirichlet(&rhs, &SolverConfig::default()).unwrap();
        for (k, &n) in interior.iter().enumerate() {
            assert!((cg.values[n as usize] - dense[k]).abs() < 1e-8);
        }
        // Laplacian phi = rhs > 0 at the source implies phi < 0 there.
        assert!(cg.values[src] < 0.0);
    }

    #[test]
    fn decompose_recovers_pure_potential() {
        let g = grid(32);
        let c = Vec2::new(-0.1, 0.2);
        let r = 0.6;
        // f = grad(psi) with the *discrete* gradient: phi must equal psi to
        // solver tolerance and f_s must vanish.
        let psi = ScalarField::from_fn(g.clone(), |p| bump(c, r, p));
        let f = gradient(&psi);
        let (fs, phi) = solenoidal_decompose(&f, &SolverConfig::default()).unwrap();
        let mut diff = phi.clone();
        for i in 0..diff.values.len() {
            diff.values[i] -= psi.values[i];
        }
        assert!(diff.norm_l2() <= 1e-8 * psi.norm_l2());
        assert!(fs.norm_l2() <= 1e-8 * f.norm_l2());
    }

    #[test]
    fn decompose_keeps_solenoidal_fields() {
        // Curl of a bump stream function: divergence-free with zero normal
        // trace, so f_s = f and phi = 0 up to discretization.
        let g = grid(32);
        let c = Vec2::new(0.15, 0.0);
        let r = 0.6;
        let f = CovectorField::from_fn(g.clone(), |p| bump_gradient(c, r, p).perp());
        let (fs, phi) = solenoidal_decompose(&f, &SolverConfig::default()).unwrap();
        assert!(phi.norm_l2() <= 2e-2 * f.norm_l2(), "phi {}", phi.norm_l2());
        let dev = fs.scaled_sub(&f, 1.0).norm_l2();
        assert!(dev <= 2e-2 * f.norm_l2());
    }

    #[test]
    fn decomposition_is_idempotent_and_orthogonal() {
        let g = grid(32);
        let f = CovectorField::from_fn(g.clone(), |p| {
            Vec2::new(
                crate::math::sin(3.0 * p.y) + p.x * p.x,
                crate::math::cos(2.0 * p.x) - p.y,
            )
        });
        let cfg = SolverConfig::default();
        let (fs, phi) = solenoidal_decompose(&f, &cfg).unwrap();
        // Re-decomposing the solenoidal part returns a negligible potential.
        let (_, phi2) = solenoidal_decompose(&fs, &cfg).unwrap();
        assert!(phi2.norm_l2() <= 1e-6 * fs.norm_l2(), "phi2 {}", phi2.norm_l2());
        // Orthogonality against an arbitrary interior test potential.
        let psi = ScalarField::from_fn(g.clone(), |p| bump(Vec2::new(0.2, 0.1), 0.5, p) * p.y);
        let dpsi = gradient(&psi);
        let ip = fs.dot(&dpsi).abs();
        assert!(ip <= 1e-6 * fs.norm_l2() * dpsi.norm_l2(), "overlap {ip}");
        // Pythagoras for the splitting.
        let dphi = gradient(&phi);
        let lhs = f.dot(&f);
        let rhs = fs.dot(&fs) + dphi.dot(&dphi);
        assert!((lhs - rhs).abs() <= 1e-8 * lhs);
    }

    #[test]
    fn decompose_on_m1_mask_shares_the_code_path() {
        let dom = Domain::default();
        let g = Grid::for_m1(&dom, 32).unwrap();
        let psi = ScalarField::from_fn(g.clone(), |p| bump(Vec2::ZERO, 1.1, p));
        let f = gradient(&psi);
        let (fs, _) = solenoidal_decompose(&f, &SolverConfig::default()).unwrap();
        assert!(fs.norm_l2() <= 1e-8 * f.norm_l2());
    }

    #[test]
    fn pair_norm_is_l2_of_both_components() {
        let g = grid(16);
        let f = CovectorField::from_fn(g.clone(), |_| Vec2::new(1.0, 0.0));
        let phi = ScalarField::from_fn(g.clone(), |_| 2.0);
        let pair = Pair::new(f.clone(), phi.clone());
        let expect = crate::math::sqrt(f.dot(&f) + phi.dot(&phi));
        assert!((pair.norm_l2() - expect).abs() < 1e-14);
        // Interior nodes carry the mask flag they were built with.
        assert!(g
            .interior_nodes()
            .iter()
            .all(|&n| g.kind(n as usize) == NodeKind::Interior));
    }
}
