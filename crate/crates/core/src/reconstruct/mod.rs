//! Null-space and stability analysis of the discretized transform, CG
//! reconstruction of solenoidal pairs, and perturbation studies.
//!
//! Spectral quantities are computed from the SVD of `M^{1/2} A` (the dense
//! pair-transform matrix with rows scaled by the square root of the fan
//! measure), normalized by the node cell area so that singular values
//! approximate those of the continuous operator between the grid and fan L2
//! structures and stay comparable across resolutions.

mod families;
mod perturb;
mod solve;

pub use families::{constructed_family_solenoidal, gauge_family, orthonormalize};
pub use perturb::{perturbation_study, PerturbationEntry, PerturbationReport};
pub use solve::{project_solenoidal_pair, reconstruct, ReconstructConfig, ReconstructionResult};

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use nalgebra::DMatrix;

use crate::fields::{FieldError, Grid, NodeKind};
use crate::linalg;
use crate::math;
use crate::transform::{RayOperator, TransformError};

/// Relative threshold for counting machine-level null directions.
///
/// Exact zero columns (e.g. the phi block under a constant weight) land many
/// orders below this; consistent discretizations of analytically nonzero
/// directions land many orders above.
pub const TAU_RANK: f64 = 1e-8;

/// Relative threshold separating "degenerate" systems from elliptic ones.
///
/// Continuous kernel elements (the constructed family under an
/// econd-solution weight) appear discretely as solenoidal singular values
/// near `4e-5 sigma_max` on a 16-cell grid with a 64x24 fan, while the
/// solenoidal minimum of the attenuated system sits near `4e-3 sigma_max`
/// at the same scale and stays within a factor 2 of that as grid and fan
/// refine together. The geometric midpoint `5e-4` separates the two regimes
/// with roughly an order of magnitude on either side.
///
/// The fan must refine along with the grid for these levels to hold: the
/// transform smooths by one order, so a fixed ray budget under-resolves
/// finer grids and drags the solenoidal minimum of elliptic systems toward
/// the noise floor.
pub const DEGENERACY_RATIO: f64 = 5e-4;

/// Errors from the analysis and reconstruction layer.
#[derive(Clone, Debug, PartialEq)]
pub enum ReconstructError {
    /// Spectral analysis needs the dense representation.
    TooLarge { dofs: usize, limit: usize },
    /// CG did not reach the requested residual within the iteration budget.
    NoConvergence {
        iterations: usize,
        rel_residual: f64,
    },
    /// The solenoidal minimum sits at the null-space floor: the system has
    /// no meaningful stability constant.
    Degenerate {
        sigma_min_solenoidal: f64,
        sigma_max: f64,
    },
    Transform(TransformError),
    Field(FieldError),
}

impl fmt::Display for ReconstructError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ReconstructError::TooLarge { dofs, limit } => {
                write!(f, "spectral analysis of {dofs} DOFs exceeds limit {limit}")
            }
            ReconstructError::NoConvergence {
                iterations,
                rel_residual,
            } => write!(
                f,
                "CG stalled after {iterations} iterations at residual {rel_residual:.3e}"
            ),
            ReconstructError::Degenerate {
                sigma_min_solenoidal,
                sigma_max,
            } => write!(
                f,
                "system degenerate: sigma_min_solenoidal {sigma_min_solenoidal:.3e} vs sigma_max {sigma_max:.3e}"
            ),
            ReconstructError::Transform(e) => write!(f, "{e}"),
            ReconstructError::Field(e) => write!(f, "{e}"),
        }
    }
}

impl core::error::Error for ReconstructError {}

impl From<TransformError> for ReconstructError {
    fn from(e: TransformError) -> Self {
        match e {
            TransformError::TooLarge { dofs, limit } => ReconstructError::TooLarge { dofs, limit },
            other => ReconstructError::Transform(other),
        }
    }
}

impl From<FieldError> for ReconstructError {
    fn from(e: FieldError) -> Self {
        ReconstructError::Field(e)
    }
}

/// SVD-based summary of the discrete system.
#[derive(Clone, Debug)]
pub struct SpectralReport {
    /// All singular values, descending, normalized to the grid/fan L2
    /// structures.
    pub singular_values: Vec<f64>,
    pub sigma_max: f64,
    /// Smallest singular value over raw pairs. Near zero for every weight:
    /// gauge pairs `[d chi, -chi]` are analytic kernel elements.
    pub sigma_min_raw: f64,
    /// Smallest singular value restricted to solenoidal pairs
    /// (`div f = 0` on interior nodes, `phi` free).
    pub sigma_min_solenoidal: f64,
    /// Number of singular values at or below `TAU_RANK * sigma_max`.
    pub null_dim: usize,
    /// Right singular vectors (packed pair DOF layout) for the machine-level
    /// null space.
    pub null_basis: Vec<Vec<f64>>,
    /// Right singular vectors at or below `DEGENERACY_RATIO * sigma_max`;
    /// spans the directions indistinguishable from kernel at quadrature
    /// accuracy.
    pub near_null_basis: Vec<Vec<f64>>,
    /// The solenoidal pair (packed DOFs) realizing `sigma_min_solenoidal`:
    /// the witness direction behind a Degenerate verdict.
    pub sol_min_vector: Vec<f64>,
    pub tau_rank: f64,
    pub degeneracy_ratio: f64,
    pub n_pair_dofs: usize,
}

/// Full SVD of the measure-weighted dense matrix, with the solenoidal
/// restriction computed against an orthonormal basis of
/// `{div f = 0} ⊕ phi`.
pub fn spectral_analysis(
    op: &RayOperator,
    dense_limit: usize,
) -> Result<SpectralReport, ReconstructError> {
    let b = op.assemble_weighted_dense(dense_limit)?;
    let scale = 1.0 / math::sqrt(op.grid.cell_area());
    let svd = b.clone().svd(false, true);
    let v_t = svd.v_t.as_ref().expect("right singular vectors");
    let mut sv: Vec<f64> = svd.singular_values.iter().map(|s| s * scale).collect();
    // nalgebra returns descending order; keep a defensive sort.
    sv.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let sigma_max = sv.first().copied().unwrap_or(0.0);
    let sigma_min_raw = sv.last().copied().unwrap_or(0.0);

    let mut null_basis = Vec::new();
    let mut near_null_basis = Vec::new();
    for (k, s) in svd.singular_values.iter().enumerate() {
        let s_n = s * scale;
        if s_n <= DEGENERACY_RATIO * sigma_max {
            let row: Vec<f64> = v_t.row(k).iter().copied().collect();
            if s_n <= TAU_RANK * sigma_max {
                null_basis.push(row.clone());
            }
            near_null_basis.push(row);
        }
    }
    let null_dim = null_basis.len();

    let q = solenoidal_basis(&op.grid)?;
    let m_s = op.n_support();
    let m_i = op.n_interior();
    let b_sol = restrict_to_solenoidal(&b, &q, m_s, m_i);
    let svd_sol = b_sol.svd(false, true);
    let vt_sol = svd_sol.v_t.as_ref().expect("solenoidal right vectors");
    let mut min_k = 0;
    let mut sigma_min_solenoidal = f64::INFINITY;
    for (k, &s) in svd_sol.singular_values.iter().enumerate() {
        if s * scale < sigma_min_solenoidal {
            sigma_min_solenoidal = s * scale;
            min_k = k;
        }
    }
    // Map the reduced minimizer back to pair DOF coordinates.
    let k_f = q.ncols();
    let mut sol_min_vector = vec![0.0f64; op.n_pair_dofs()];
    if vt_sol.nrows() > 0 {
        let v = vt_sol.row(min_k);
        for c in 0..k_f {
            let w = v[c];
            if w != 0.0 {
                for i in 0..2 * m_s {
                    sol_min_vector[i] += q[(i, c)] * w;
                }
            }
        }
        for j in 0..m_i {
            sol_min_vector[2 * m_s + j] = v[k_f + j];
        }
    }

    Ok(SpectralReport {
        singular_values: sv,
        sigma_max,
        sigma_min_raw,
        sigma_min_solenoidal,
        null_dim,
        null_basis,
        near_null_basis,
        sol_min_vector,
        tau_rank: TAU_RANK,
        degeneracy_ratio: DEGENERACY_RATIO,
        n_pair_dofs: op.n_pair_dofs(),
    })
}

/// Discrete stability constant `1 / sigma_min_solenoidal` (an L2 surrogate
/// for the paper-level estimate; the H1 norm of the smoothing normal
/// operator is replaced by the discrete L2 norm).
///
/// Errors with [`ReconstructError::Degenerate`] when the solenoidal minimum
/// sits at the quadrature noise floor (`DEGENERACY_RATIO * sigma_max`),
/// which is how continuous non-injectivity manifests at a fixed resolution.
pub fn stability_constant(report: &SpectralReport) -> Result<f64, ReconstructError> {
    if report.sigma_min_solenoidal <= report.degeneracy_ratio * report.sigma_max {
        return Err(ReconstructError::Degenerate {
            sigma_min_solenoidal: report.sigma_min_solenoidal,
            sigma_max: report.sigma_max,
        });
    }
    Ok(1.0 / report.sigma_min_solenoidal)
}

/// Orthonormal basis (columns) of the divergence-free subspace of the
/// f-block: kernel of the centered divergence evaluated at interior nodes.
fn solenoidal_basis(grid: &Grid) -> Result<DMatrix<f64>, ReconstructError> {
    let m_s = grid.support_nodes().len();
    let interior = grid.interior_nodes();
    let m_i = interior.len();
    let nps = grid.nodes_per_side;
    let inv2h = 1.0 / (2.0 * grid.spacing);
    // Divergence matrix: interior rows, 2 m_s columns (f1 | f2).
    let mut d = DMatrix::<f64>::zeros(m_i, 2 * m_s);
    for (r, &node) in interior.iter().enumerate() {
        let idx = node as usize;
        let (i, j) = (idx % nps, idx / nps);
        let mut add = |ii: isize, jj: isize, col_block: usize, w: f64| {
            if ii < 0 || jj < 0 || ii as usize >= nps || jj as usize >= nps {
                return;
            }
            let n = grid.node_index(ii as usize, jj as usize);
            if grid.kind(n) == NodeKind::Exterior {
                return;
            }
            if let Some(si) = grid.support_index(n) {
                d[(r, col_block * m_s + si)] += w;
            }
        };
        add(i as isize + 1, j as isize, 0, inv2h);
        add(i as isize - 1, j as isize, 0, -inv2h);
        add(i as isize, j as isize + 1, 1, inv2h);
        add(i as isize, j as isize - 1, 1, -inv2h);
    }
    // Kernel of D: the thin SVD only spans the row space, so combine its
    // small-singular-value right vectors with an orthonormal completion of
    // the remaining coordinates.
    let svd = d.svd(false, true);
    let v_t = svd.v_t.as_ref().expect("kernel vectors");
    let smax = svd.singular_values.iter().fold(0.0f64, |a, &s| a.max(s));
    let thin = v_t.nrows();
    let mut q: Vec<Vec<f64>> = Vec::with_capacity(2 * m_s);
    let mut kernel: Vec<Vec<f64>> = Vec::new();
    for k in 0..thin {
        let row: Vec<f64> = v_t.row(k).iter().copied().collect();
        if svd.singular_values[k] <= 1e-10 * smax.max(1.0) {
            kernel.push(row.clone());
        }
        q.push(row);
    }
    if 2 * m_s > thin {
        let mut e = vec![0.0f64; 2 * m_s];
        for coord in 0..2 * m_s {
            if q.len() == 2 * m_s {
                break;
            }
            e.iter_mut().for_each(|x| *x = 0.0);
            e[coord] = 1.0;
            // Two rounds of Gram-Schmidt against everything accepted so far.
            for _ in 0..2 {
                for row in &q {
                    let ip = linalg::dot(row, &e);
                    linalg::axpy(&mut e, -ip, row);
                }
            }
            let n = linalg::norm(&e);
            if n > 1e-8 {
                e.iter_mut().for_each(|x| *x /= n);
                kernel.push(e.clone());
                q.push(e.clone());
            }
        }
    }
    let mut basis = DMatrix::<f64>::zeros(2 * m_s, kernel.len());
    for (c, vec_k) in kernel.iter().enumerate() {
        for i in 0..2 * m_s {
            basis[(i, c)] = vec_k[i];
        }
    }
    Ok(basis)
}

/// `B` restricted to `{div f = 0} ⊕ phi`: `[B_f Q_f | B_phi]`.
fn restrict_to_solenoidal(
    b: &DMatrix<f64>,
    q_f: &DMatrix<f64>,
    m_s: usize,
    m_i: usize,
) -> DMatrix<f64> {
    let rows = b.nrows();
    let b_f = b.columns(0, 2 * m_s);
    let bf_q = &b_f * q_f;
    let mut out = DMatrix::<f64>::zeros(rows, q_f.ncols() + m_i);
    out.columns_mut(0, q_f.ncols()).copy_from(&bf_q);
    out.columns_mut(q_f.ncols(), m_i)
        .copy_from(&b.columns(2 * m_s, m_i));
    out
}

/// Projection overlap of a vector onto the span of an orthonormal family
/// (right singular vectors are orthonormal): `|proj(target)| / |target|`.
pub fn subspace_overlap(orthonormal: &[Vec<f64>], target: &[f64]) -> f64 {
    let n = linalg::norm(target);
    if n == 0.0 || orthonormal.is_empty() {
        return 0.0;
    }
    let mut acc = 0.0;
    for v in orthonormal {
        let ip = linalg::dot(v, target) / n;
        acc += ip * ip;
    }
    math::sqrt(acc.min(1.0))
}
