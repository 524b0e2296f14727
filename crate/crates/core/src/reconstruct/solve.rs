//! Projected conjugate-gradient reconstruction of solenoidal pairs.

use alloc::string::String;
use alloc::vec::Vec;

use super::ReconstructError;
use crate::fields::{solenoidal_decompose, CovectorField, Pair, ScalarField, SolverConfig};
use crate::linalg;
use crate::transform::{RayOperator, Sinogram};
use crate::weights::{elliptic_margin, EllipticCheckConfig};

/// Parameters for the normal-equation solve.
#[derive(Clone, Copy, Debug)]
pub struct ReconstructConfig {
    /// Relative residual target for CG on `N p = I* s`.
    pub tol: f64,
    pub max_iter: usize,
    /// Run a coarse elliptic-margin check first and attach a warning when
    /// the weight fails it (reconstruction proceeds regardless).
    pub check_elliptic: bool,
    /// Inner Poisson solve controlling the solenoidal projection.
    pub poisson: SolverConfig,
}

impl Default for ReconstructConfig {
    fn default() -> Self {
        ReconstructConfig {
            tol: 1e-6,
            max_iter: 500,
            check_elliptic: true,
            poisson: SolverConfig::default(),
        }
    }
}

/// Recovered solenoidal pair with solver statistics and, when ground truth
/// was supplied, relative L2 errors.
#[derive(Clone, Debug)]
pub struct ReconstructionResult {
    pub fs: CovectorField,
    pub phi: ScalarField,
    pub iterations: usize,
    pub residual: f64,
    pub rel_err_fs: Option<f64>,
    pub rel_err_phi: Option<f64>,
    pub warning: Option<String>,
}

/// Projection onto solenoidal pairs: the f-component loses its potential
/// part, phi is untouched.
pub fn project_solenoidal_pair(p: &Pair, cfg: &SolverConfig) -> Result<Pair, ReconstructError> {
    let (fs, _) = solenoidal_decompose(&p.f, cfg)?;
    Ok(Pair::new(fs, p.phi.clone()))
}

/// Solves `N p = I* s` by conjugate gradients restricted to the solenoidal
/// pair subspace (every operator application is re-projected), returning
/// `p = [f_s, phi]`.
///
/// When `truth` is supplied, the result carries relative L2 errors of both
/// components against it.
pub fn reconstruct(
    op: &RayOperator,
    sino: &Sinogram,
    cfg: &ReconstructConfig,
    truth: Option<(&CovectorField, &ScalarField)>,
) -> Result<ReconstructionResult, ReconstructError> {
    let mut warning = None;
    if cfg.check_elliptic {
        let check = EllipticCheckConfig {
            n_x: 8,
            n_theta: 12,
            ..Default::default()
        };
        match elliptic_margin(
            op.weight(),
            op.generator(),
            op.domain(),
            &check,
            op.trace_config(),
        ) {
            Ok(rep) if !rep.verdict => {
                warning = Some(alloc::format!(
                    "weight fails the elliptic condition (margin {:.3e}); the normal operator is \
                     degenerate on part of the solenoidal subspace and the recovered pair is a \
                     least-squares representative",
                    rep.min_margin
                ));
            }
            Ok(_) => {}
            Err(e) => {
                warning = Some(alloc::format!("elliptic check failed to run: {e}"));
            }
        }
    }

    let rhs_pair = project_solenoidal_pair(&op.adjoint(sino), &cfg.poisson)?;
    let rhs = op.pack(&rhs_pair);

    // Projected normal operator P N P on packed DOF vectors. A Poisson
    // failure inside the projection is recorded and aborts after the solve.
    let mut inner_error: Option<ReconstructError> = None;
    let apply = |x: &[f64]| -> Vec<f64> {
        if inner_error.is_some() {
            return x.to_vec();
        }
        match apply_projected_normal(op, x, &cfg.poisson) {
            Ok(y) => y,
            Err(e) => {
                inner_error = Some(e);
                x.to_vec()
            }
        }
    };
    let res = linalg::cg_solve(apply, &rhs, cfg.tol, cfg.max_iter);
    if let Some(e) = inner_error {
        return Err(e);
    }
    if !res.converged {
        return Err(ReconstructError::NoConvergence {
            iterations: res.iterations,
            rel_residual: res.rel_residual,
        });
    }
    let pair = op.unpack(&res.x);
    let (rel_err_fs, rel_err_phi) = match truth {
        Some((fs_true, phi_true)) => {
            let ef = pair.f.scaled_sub(fs_true, 1.0).norm_l2() / fs_true.norm_l2().max(1e-300);
            let mut dphi = pair.phi.clone();
            for (v, t) in dphi.values.iter_mut().zip(&phi_true.values) {
                *v -= t;
            }
            let ep = dphi.norm_l2() / phi_true.norm_l2().max(1e-300);
            (Some(ef), Some(ep))
        }
        None => (None, None),
    };
    Ok(ReconstructionResult {
        fs: pair.f,
        phi: pair.phi,
        iterations: res.iterations,
        residual: res.rel_residual,
        rel_err_fs,
        rel_err_phi,
        warning,
    })
}

fn apply_projected_normal(
    op: &RayOperator,
    x: &[f64],
    poisson: &SolverConfig,
) -> Result<Vec<f64>, ReconstructError> {
    let p_in = project_solenoidal_pair(&op.unpack(x), poisson)?;
    let np = op.normal(&p_in);
    let p_out = project_solenoidal_pair(&np, poisson)?;
    Ok(op.pack(&p_out))
}
