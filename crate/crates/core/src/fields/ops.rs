//! Centered difference operators.
//!
//! Both `gradient` and `divergence` apply the centered second-order stencil
//! at every node, treating values beyond the grid edge as zero, and then
//! clear exterior nodes. With this convention the two operators are exact
//! negative adjoints under the plain node-sum inner product whenever the
//! scalar argument vanishes outside the interior set (summation by parts
//! telescopes with no boundary remainder). The Poisson solve composes them,
//! so the solenoidal decomposition is an exact L2 orthogonal projection
//! rather than one up to truncation error.

use super::{CovectorField, NodeKind, ScalarField};

/// Centered gradient `d phi = (∂1 phi, ∂2 phi)`.
pub fn gradient(phi: &ScalarField) -> CovectorField {
    let grid = &phi.grid;
    let nps = grid.nodes_per_side;
    let inv2h = 1.0 / (2.0 * grid.spacing);
    let mut out = CovectorField::zeros(phi.grid.clone());
    for j in 0..nps {
        for i in 0..nps {
            let idx = grid.node_index(i, j);
            if grid.kind(idx) == NodeKind::Exterior {
                continue;
            }
            let xp = if i + 1 < nps {
                phi.values[grid.node_index(i + 1, j)]
            } else {
                0.0
            };
            let xm = if i > 0 {
                phi.values[grid.node_index(i - 1, j)]
            } else {
                0.0
            };
            let yp = if j + 1 < nps {
                phi.values[grid.node_index(i, j + 1)]
            } else {
                0.0
            };
            let ym = if j > 0 {
                phi.values[grid.node_index(i, j - 1)]
            } else {
                0.0
            };
            out.f1[idx] = (xp - xm) * inv2h;
            out.f2[idx] = (yp - ym) * inv2h;
        }
    }
    out
}

/// Centered divergence `delta f = ∂1 f1 + ∂2 f2` (Euclidean reference
/// metric).
pub fn divergence(f: &CovectorField) -> ScalarField {
    let grid = &f.grid;
    let nps = grid.nodes_per_side;
    let inv2h = 1.0 / (2.0 * grid.spacing);
    let mut out = ScalarField::zeros(f.grid.clone());
    for j in 0..nps {
        for i in 0..nps {
            let idx = grid.node_index(i, j);
            if grid.kind(idx) == NodeKind::Exterior {
                continue;
            }
            let xp = if i + 1 < nps {
                f.f1[grid.node_index(i + 1, j)]
            } else {
                0.0
            };
            let xm = if i > 0 {
                f.f1[grid.node_index(i - 1, j)]
            } else {
                0.0
            };
            let yp = if j + 1 < nps {
                f.f2[grid.node_index(i, j + 1)]
            } else {
                0.0
            };
            let ym = if j > 0 {
                f.f2[grid.node_index(i, j - 1)]
            } else {
                0.0
            };
            out.values[idx] = (xp - xm) * inv2h + (yp - ym) * inv2h;
        }
    }
    out
}

/// The composition `divergence(gradient(phi))` — the Laplacian the Poisson
/// solver inverts.
pub fn laplacian(phi: &ScalarField) -> ScalarField {
    divergence(&gradient(phi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{Grid, NodeKind};
    use crate::geometry::Domain;
    use crate::Vec2;

    fn grid(n: usize) -> alloc::sync::Arc<Grid> {
        Grid::for_m(&Domain::default(), n).unwrap()
    }

    #[test]
    fn gradient_of_constant_is_zero() {
        let g = grid(16);
        let phi = ScalarField::from_fn(g, |_| 3.5);
        let d = gradient(&phi);
        // Away from the support edge the differences cancel exactly.
        for &node in d.grid.interior_nodes() {
            let idx = node as usize;
            let nps = d.grid.nodes_per_side;
            let (i, j) = (idx % nps, idx / nps);
            let all_in = [(i + 1, j), (i - 1, j), (i, j + 1), (i, j - 1)]
                .iter()
                .all(|&(a, b)| d.grid.kind(d.grid.node_index(a, b)) != NodeKind::Exterior);
            if all_in {
                assert_eq!(d.f1[idx], 0.0);
                assert_eq!(d.f2[idx], 0.0);
            }
        }
    }

    #[test]
    fn gradient_exact_for_linear() {
        let g = grid(20);
        let phi = ScalarField::from_fn(g, |p| p.x);
        let d = gradient(&phi);
        // Interior nodes one full stencil away from the band.
        let idx = d.grid.node_index(10, 10);
        assert!((d.f1[idx] - 1.0).abs() < 1e-12);
        assert!(d.f2[idx].abs() < 1e-12);
    }

    #[test]
    fn divergence_of_harmonic_gradient_vanishes() {
        // psi = x*y is harmonic; d(psi) = (y, x) has zero divergence, and
        // the centered stencil reproduces that exactly for bilinear data.
        let g = grid(16);
        let f = CovectorField::from_fn(g, |p| Vec2::new(p.y, p.x));
        let div = divergence(&f);
        let idx = div.grid.node_index(8, 8);
        assert!(div.values[idx].abs() < 1e-12);
    }

    #[test]
    fn divergence_of_radial_field_is_two() {
        let g = grid(24);
        let f = CovectorField::from_fn(g.clone(), |p| p);
        let div = divergence(&f);
        // Check at interior nodes whose full stencil avoids the masked edge.
        let nps = g.nodes_per_side;
        let mut checked = 0;
        for j in 2..nps - 2 {
            for i in 2..nps - 2 {
                let idx = g.node_index(i, j);
                let r = (g.node_pos(i, j) - g.center).norm();
                if r < g.mask_radius - 2.5 * g.spacing {
                    assert!((div.values[idx] - 2.0).abs() < 1e-10);
                    checked += 1;
                }
            }
        }
        assert!(checked > 50);
    }

    #[test]
    fn divergence_free_by_construction() {
        let g = grid(24);
        let f = CovectorField::from_fn(g.clone(), |p| Vec2::new(crate::math::sin(p.y), 0.0));
        let div = divergence(&f);
        for j in 2..g.nodes_per_side - 2 {
            for i in 2..g.nodes_per_side - 2 {
                let idx = g.node_index(i, j);
                let r = (g.node_pos(i, j) - g.center).norm();
                if r < g.mask_radius - 2.5 * g.spacing {
                    assert!(div.values[idx].abs() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn discrete_duality_is_exact_for_interior_scalars() {
        // <grad phi, f> + <phi, div f> = 0 to machine precision when phi is
        // supported on interior nodes.
        let g = grid(20);
        let phi = ScalarField::from_fn(g.clone(), |p| {
            let r2 = p.norm_sq();
            if r2 < 0.49 {
                (0.49 - r2) * p.x
            } else {
                0.0
            }
        });
        let f = CovectorField::from_fn(g, |p| Vec2::new(p.y * p.y, p.x + 0.3));
        let lhs = gradient(&phi).dot(&f) + phi.dot(&divergence(&f));
        let scale = phi.norm_l2() * f.norm_l2();
        assert!(lhs.abs() <= 1e-13 * scale.max(1.0), "duality defect {lhs}");
    }
}
