//! Analytic bump profiles and seeded random smooth fields for experiments.

use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{CovectorField, Grid, NodeKind, ScalarField};
use crate::math;
use crate::Vec2;

/// Compactly supported C^2 bump: `(1 - |x - c|^2 / r^2)^3` inside radius
/// `r`, zero outside.
pub fn bump(center: Vec2, radius: f64, p: Vec2) -> f64 {
    let u = (p - center).norm_sq() / (radius * radius);
    if u >= 1.0 {
        0.0
    } else {
        let s = 1.0 - u;
        s * s * s
    }
}

/// Analytic gradient of [`bump`].
pub fn bump_gradient(center: Vec2, radius: f64, p: Vec2) -> Vec2 {
    let d = p - center;
    let r2 = radius * radius;
    let u = d.norm_sq() / r2;
    if u >= 1.0 {
        Vec2::ZERO
    } else {
        let s = 1.0 - u;
        d * (-6.0 * s * s / r2)
    }
}

/// Analytic Laplacian of [`bump`].
pub fn bump_laplacian(center: Vec2, radius: f64, p: Vec2) -> f64 {
    let d = p - center;
    let r2 = radius * radius;
    let u = d.norm_sq() / r2;
    if u >= 1.0 {
        0.0
    } else {
        let s = 1.0 - u;
        // div( -6 s^2 / r^2 * d ) = -12 s^2 / r^2 + 24 s u / r^2.
        (-12.0 * s * s + 24.0 * s * u) / r2
    }
}

/// Gaussian profile and its gradient, for smooth perturbation directions.
pub fn gaussian(center: Vec2, sigma: f64, p: Vec2) -> f64 {
    let d = p - center;
    math::exp(-d.norm_sq() / (2.0 * sigma * sigma))
}

pub fn gaussian_gradient(center: Vec2, sigma: f64, p: Vec2) -> Vec2 {
    let d = p - center;
    d * (-gaussian(center, sigma, p) / (sigma * sigma))
}

fn standard_normals(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let u1: f64 = 1.0 - rng.random::<f64>();
        let u2: f64 = rng.random();
        let r = math::sqrt(-2.0 * math::ln(u1));
        let a = 2.0 * core::f64::consts::PI * u2;
        out.push(r * math::cos(a));
        if out.len() < n {
            out.push(r * math::sin(a));
        }
    }
    out
}

/// Separable Gaussian blur with standard deviation `sigma_nodes` (in node
/// units), truncated at three sigmas.
fn blur(grid: &Grid, values: &mut Vec<f64>, sigma_nodes: f64) {
    let radius = (3.0 * sigma_nodes) as usize + 1;
    let mut kernel = Vec::with_capacity(2 * radius + 1);
    let mut total = 0.0;
    for k in 0..=2 * radius {
        let d = k as f64 - radius as f64;
        let w = math::exp(-d * d / (2.0 * sigma_nodes * sigma_nodes));
        kernel.push(w);
        total += w;
    }
    for w in kernel.iter_mut() {
        *w /= total;
    }
    let nps = grid.nodes_per_side;
    let mut tmp = vec![0.0; values.len()];
    // Horizontal pass.
    for j in 0..nps {
        for i in 0..nps {
            let mut acc = 0.0;
            for (k, w) in kernel.iter().enumerate() {
                let ii = i as isize + k as isize - radius as isize;
                if ii >= 0 && (ii as usize) < nps {
                    acc += w * values[grid.node_index(ii as usize, j)];
                }
            }
            tmp[grid.node_index(i, j)] = acc;
        }
    }
    // Vertical pass.
    for j in 0..nps {
        for i in 0..nps {
            let mut acc = 0.0;
            for (k, w) in kernel.iter().enumerate() {
                let jj = j as isize + k as isize - radius as isize;
                if jj >= 0 && (jj as usize) < nps {
                    acc += w * tmp[grid.node_index(i, jj as usize)];
                }
            }
            values[grid.node_index(i, j)] = acc;
        }
    }
}

/// Envelope forcing interior support: a wide bump over the mask disk.
fn envelope(grid: &Grid, p: Vec2) -> f64 {
    bump(grid.center, grid.mask_radius * 0.95, p)
}

/// Seeded random smooth scalar field: white noise low-passed by a Gaussian
/// kernel, tapered to vanish at the mask boundary, unit L2 norm.
/// Deterministic for a fixed seed and grid.
pub fn smooth_random_scalar(grid: Arc<Grid>, seed: u64, smooth_sigma: f64) -> ScalarField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut values = standard_normals(&mut rng, grid.n_nodes());
    blur(&grid, &mut values, smooth_sigma / grid.spacing);
    let nps = grid.nodes_per_side;
    for j in 0..nps {
        for i in 0..nps {
            let idx = grid.node_index(i, j);
            if grid.kind(idx) != NodeKind::Interior {
                values[idx] = 0.0;
            } else {
                values[idx] *= envelope(&grid, grid.node_pos(i, j));
            }
        }
    }
    let mut out = ScalarField { grid, values };
    let n = out.norm_l2();
    if n > 0.0 {
        for v in out.values.iter_mut() {
            *v /= n;
        }
    }
    out
}

/// Seeded random smooth covector field; see [`smooth_random_scalar`].
pub fn smooth_random_covector(grid: Arc<Grid>, seed: u64, smooth_sigma: f64) -> CovectorField {
    let a = smooth_random_scalar(grid.clone(), seed.wrapping_mul(2).wrapping_add(1), smooth_sigma);
    let b = smooth_random_scalar(grid.clone(), seed.wrapping_mul(2).wrapping_add(2), smooth_sigma);
    let mut out = CovectorField {
        grid,
        f1: a.values,
        f2: b.values,
    };
    let n = out.norm_l2();
    if n > 0.0 {
        for i in 0..out.f1.len() {
            out.f1[i] /= n;
            out.f2[i] /= n;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::gradient;
    use crate::geometry::Domain;

    #[test]
    fn bump_gradient_matches_finite_differences() {
        let c = Vec2::new(0.1, -0.2);
        let r = 0.8;
        let p = Vec2::new(0.3, 0.25);
        let h = 1e-6;
        let gx = (bump(c, r, p + Vec2::new(h, 0.0)) - bump(c, r, p - Vec2::new(h, 0.0))) / (2.0 * h);
        let gy = (bump(c, r, p + Vec2::new(0.0, h)) - bump(c, r, p - Vec2::new(0.0, h))) / (2.0 * h);
        let g = bump_gradient(c, r, p);
        assert!((g.x - gx).abs() < 1e-8);
        assert!((g.y - gy).abs() < 1e-8);
    }

    #[test]
    fn bump_laplacian_matches_finite_differences() {
        let c = Vec2::ZERO;
        let r = 0.9;
        let p = Vec2::new(0.2, -0.35);
        let h = 1e-4;
        let fd = (bump(c, r, p + Vec2::new(h, 0.0))
            + bump(c, r, p - Vec2::new(h, 0.0))
            + bump(c, r, p + Vec2::new(0.0, h))
            + bump(c, r, p - Vec2::new(0.0, h))
            - 4.0 * bump(c, r, p))
            / (h * h);
        assert!((bump_laplacian(c, r, p) - fd).abs() < 1e-6);
    }

    #[test]
    fn discrete_gradient_of_sampled_bump_converges() {
        // Sup error of the centered gradient against the analytic one
        // shrinks at second order.
        let dom = Domain::default();
        let c = Vec2::new(0.05, 0.1);
        let r = 0.7;
        let sup_err = |n: usize| {
            let g = Grid::for_m(&dom, n).unwrap();
            let phi = ScalarField::from_fn(g.clone(), |p| bump(c, r, p));
            let d = gradient(&phi);
            let mut worst = 0.0f64;
            for &node in g.interior_nodes() {
                let idx = node as usize;
                let nps = g.nodes_per_side;
                let p = g.node_pos(idx % nps, idx / nps);
                let exact = bump_gradient(c, r, p);
                worst = worst.max((Vec2::new(d.f1[idx], d.f2[idx]) - exact).norm());
            }
            worst
        };
        let coarse = sup_err(32);
        let fine = sup_err(64);
        assert!(coarse / fine > 3.0, "ratio {}", coarse / fine);
    }

    #[test]
    fn random_fields_are_deterministic_and_interior() {
        let g = Grid::for_m(&Domain::default(), 24).unwrap();
        let a = smooth_random_covector(g.clone(), 42, 0.1);
        let b = smooth_random_covector(g.clone(), 42, 0.1);
        assert_eq!(a.f1, b.f1);
        assert_eq!(a.f2, b.f2);
        assert!((a.norm_l2() - 1.0).abs() < 1e-12);
        for idx in 0..g.n_nodes() {
            if g.kind(idx) != NodeKind::Interior {
                assert_eq!(a.f1[idx], 0.0);
            }
        }
    }
}
