//! Packed-DOF bases for the analytic kernel families used in null-space
//! overlap diagnostics.

use alloc::vec;
use alloc::vec::Vec;

use super::ReconstructError;
use crate::fields::{
    divergence, gradient, poisson_dirichlet, CovectorField, ScalarField, SolverConfig,
};
use crate::linalg;
use crate::transform::RayOperator;
use crate::weights::CovRule;

/// Modified Gram-Schmidt with two passes; drops numerically dependent
/// vectors.
pub fn orthonormalize(mut cols: Vec<Vec<f64>>) -> Vec<Vec<f64>> {
    let mut out: Vec<Vec<f64>> = Vec::with_capacity(cols.len());
    for v in cols.iter_mut() {
        for _ in 0..2 {
            for q in &out {
                let ip = linalg::dot(q, v);
                linalg::axpy(v, -ip, q);
            }
        }
        let n = linalg::norm(v);
        if n > 1e-10 {
            v.iter_mut().for_each(|x| *x /= n);
            out.push(core::mem::take(v));
        }
    }
    out
}

/// Orthonormal basis of the gauge family `{[d psi, 0]} ∪ {[0, phi]}` over
/// all interior node functions — the analytic kernel of the pair transform
/// under a constant weight.
pub fn gauge_family(op: &RayOperator) -> Vec<Vec<f64>> {
    let grid = &op.grid;
    let m_s = op.n_support();
    let m_i = op.n_interior();
    let n = op.n_pair_dofs();
    let mut cols = Vec::with_capacity(2 * m_i);
    for &node in grid.interior_nodes() {
        let mut psi = ScalarField::zeros(grid.clone());
        psi.values[node as usize] = 1.0;
        let d = gradient(&psi);
        let mut col = vec![0.0; n];
        for (k, &sn) in grid.support_nodes().iter().enumerate() {
            col[k] = d.f1[sn as usize];
            col[k + m_s] = d.f2[sn as usize];
        }
        cols.push(col);
    }
    for k in 0..m_i {
        let mut col = vec![0.0; n];
        col[2 * m_s + k] = 1.0;
        cols.push(col);
    }
    orthonormalize(cols)
}

/// Orthonormal basis of the solenoidal representatives of the constructed
/// kernel family for the weight built from `h`.
///
/// The raw kernel pairs are `[psi h + d psi, 0]`; moving the gauge content
/// into the phi slot gives the equivalent solenoidal pairs
/// `[P(psi h), L^{-1} div(psi h) + psi]`, one per interior node function
/// `psi` (the map is linear in `psi`, so node indicators span the family).
pub fn constructed_family_solenoidal(
    op: &RayOperator,
    h: &CovRule,
    poisson: &SolverConfig,
) -> Result<Vec<Vec<f64>>, ReconstructError> {
    let grid = &op.grid;
    let m_s = op.n_support();
    let n = op.n_pair_dofs();
    let nps = grid.nodes_per_side;
    let mut cols = Vec::with_capacity(op.n_interior());
    for &node in grid.interior_nodes() {
        let idx = node as usize;
        let pos = grid.node_pos(idx % nps, idx / nps);
        // g = psi * h for the node indicator psi.
        let mut g = CovectorField::zeros(grid.clone());
        let hv = h(pos);
        g.f1[idx] = hv.x;
        g.f2[idx] = hv.y;
        let chi_g = poisson_dirichlet(&divergence(&g), poisson)?;
        let dchi = gradient(&chi_g);
        let mut col = vec![0.0; n];
        for (k, &sn) in grid.support_nodes().iter().enumerate() {
            let s = sn as usize;
            col[k] = g.f1[s] - dchi.f1[s];
            col[k + m_s] = g.f2[s] - dchi.f2[s];
        }
        for (k, &inode) in grid.interior_nodes().iter().enumerate() {
            let v = chi_g.values[inode as usize] + if inode == node { 1.0 } else { 0.0 };
            col[2 * m_s + k] = v;
        }
        cols.push(col);
    }
    Ok(orthonormalize(cols))
}
