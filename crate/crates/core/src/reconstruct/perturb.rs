//! Sensitivity of the normal operator to smooth perturbations of the
//! system: operator-norm differences per perturbation size, and the raw ODE
//! deviation of the traced curves.

use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;

use super::ReconstructError;
use crate::fields::Grid;
use crate::geometry::{trace_curve, CurveGenerator, Domain, Fan, GeometryError, TraceConfig};
use crate::linalg;
use crate::transform::RayOperator;
use crate::weights::Weight;
use crate::Vec2;

/// One perturbation size and its measured responses.
#[derive(Clone, Copy, Debug)]
pub struct PerturbationEntry {
    pub delta: f64,
    /// Power-iteration estimate of the spectral norm of `N - N~`.
    pub op_norm_diff: f64,
    /// `op_norm_diff / delta`; flat across deltas means the difference is
    /// linear in the perturbation size.
    pub ratio: f64,
    /// Sup over sampled fan curves and shared time steps of the position
    /// deviation between the base and perturbed trajectories.
    pub endpoint_dev: f64,
    pub endpoint_ratio: f64,
}

/// Outcome of a perturbation sweep.
#[derive(Clone, Debug)]
pub struct PerturbationReport {
    pub entries: Vec<PerturbationEntry>,
    pub base_generator: String,
    pub base_weight: String,
    /// Sup norms of the perturbation direction and its first three
    /// derivative tensors over `M`, so a unit delta measures an actual C^3
    /// distance.
    pub direction_c3: [f64; 4],
}

/// Builds the base and perturbed operators for each `delta` and measures the
/// operator-norm difference of the normal operators (seeded power iteration
/// on `N - N~`) together with the trajectory deviation of a fan subsample.
///
/// `perturbed` maps a delta to the perturbed `(generator, weight)`;
/// `direction` is the scalar profile scaled by delta inside it, used only
/// for the C^3 norm report.
pub fn perturbation_study(
    base_gen: &CurveGenerator,
    base_weight: &Weight,
    dom: &Domain,
    fan: Arc<Fan>,
    grid: Arc<Grid>,
    trace_cfg: &TraceConfig,
    perturbed: &dyn Fn(f64) -> (CurveGenerator, Weight),
    deltas: &[f64],
    direction: Option<&dyn Fn(Vec2) -> f64>,
    power_iters: usize,
    seed: u64,
) -> Result<PerturbationReport, ReconstructError> {
    let base_op = RayOperator::build(base_gen, base_weight, dom, fan.clone(), grid.clone(), trace_cfg)?;
    let n = base_op.n_pair_dofs();
    let mut entries = Vec::with_capacity(deltas.len());
    for &delta in deltas {
        let (gen_d, w_d) = perturbed(delta);
        let op_d = RayOperator::build(&gen_d, &w_d, dom, fan.clone(), grid.clone(), trace_cfg)?;
        let diff = |x: &[f64]| -> Vec<f64> {
            let a = base_op.normal_packed(x);
            let b = op_d.normal_packed(x);
            a.iter().zip(b).map(|(u, v)| u - v).collect()
        };
        let op_norm_diff = linalg::power_iteration(diff, n, power_iters, seed);
        let endpoint_dev = trajectory_deviation(base_gen, &gen_d, dom, &fan, trace_cfg)?;
        entries.push(PerturbationEntry {
            delta,
            op_norm_diff,
            ratio: if delta > 0.0 { op_norm_diff / delta } else { 0.0 },
            endpoint_dev,
            endpoint_ratio: if delta > 0.0 { endpoint_dev / delta } else { 0.0 },
        });
    }
    let direction_c3 = match direction {
        Some(q) => direction_c3_norms(q, dom),
        None => [0.0; 4],
    };
    Ok(PerturbationReport {
        entries,
        base_generator: String::from(base_gen.label()),
        base_weight: String::from(base_weight.label()),
        direction_c3,
    })
}

/// Sup over a fan subsample of the state-wise position deviation between
/// base and perturbed traces (shared regular time grid; trapped curves in
/// either system are skipped).
fn trajectory_deviation(
    base: &CurveGenerator,
    pert: &CurveGenerator,
    dom: &Domain,
    fan: &Fan,
    cfg: &TraceConfig,
) -> Result<f64, ReconstructError> {
    let stride = (fan.len() / 24).max(1);
    let mut worst = 0.0f64;
    for entry in fan.entries.iter().step_by(stride) {
        let a = match trace_curve(base, dom, entry.point, entry.dir, cfg) {
            Ok(c) => c,
            Err(GeometryError::NonTermination { .. }) => continue,
            Err(e) => return Err(ReconstructError::Transform(e.into())),
        };
        let b = match trace_curve(pert, dom, entry.point, entry.dir, cfg) {
            Ok(c) => c,
            Err(GeometryError::NonTermination { .. }) => continue,
            Err(e) => return Err(ReconstructError::Transform(e.into())),
        };
        let n = a.len().min(b.len()).saturating_sub(1);
        for k in 0..n {
            worst = worst.max((a.states[k].pos - b.states[k].pos).norm());
        }
    }
    Ok(worst)
}

/// Numerical sup norms of `q` and its first three derivative tensors over a
/// dense sample of `M`, by nested central differences.
fn direction_c3_norms(q: &dyn Fn(Vec2) -> f64, dom: &Domain) -> [f64; 4] {
    let h = 1e-3 * dom.radius_m;
    let d1 = |p: Vec2, e: Vec2| (q(p + e * h) - q(p - e * h)) / (2.0 * h);
    let ex = Vec2::new(1.0, 0.0);
    let ey = Vec2::new(0.0, 1.0);
    let d2 = |p: Vec2, e1: Vec2, e2: Vec2| {
        (d1(p + e2 * h, e1) - d1(p - e2 * h, e1)) / (2.0 * h)
    };
    let d3 = |p: Vec2, e1: Vec2, e2: Vec2, e3: Vec2| {
        (d2(p + e3 * h, e1, e2) - d2(p - e3 * h, e1, e2)) / (2.0 * h)
    };
    let mut sup = [0.0f64; 4];
    let n = 24;
    for i in 0..n {
        for j in 0..n {
            let p = dom.center
                + Vec2::new(
                    (2.0 * (i as f64 + 0.5) / n as f64 - 1.0) * dom.radius_m,
                    (2.0 * (j as f64 + 0.5) / n as f64 - 1.0) * dom.radius_m,
                );
            if (p - dom.center).norm() > dom.radius_m {
                continue;
            }
            sup[0] = sup[0].max(q(p).abs());
            sup[1] = sup[1].max(crate::math::hypot(d1(p, ex), d1(p, ey)));
            for e1 in [ex, ey] {
                for e2 in [ex, ey] {
                    sup[2] = sup[2].max(d2(p, e1, e2).abs());
                    for e3 in [ex, ey] {
                        sup[3] = sup[3].max(d3(p, e1, e2, e3).abs());
                    }
                }
            }
        }
    }
    sup
}
