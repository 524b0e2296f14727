//! Conjugate-point diagnostics: finite-difference Jacobians of the
//! forward exponential map `(t, theta) -> exp_x(t, theta)`.

use super::{trace_curve, Curve, CurveGenerator, Domain, GeometryError, TraceConfig};
use crate::vec2::cross;
use crate::Vec2;

/// Sweep result. `min_scaled_det` is `|det D exp| / t` minimized over all
/// sampled `(x, t, theta)`; the `1/t` factor removes the polar degeneracy at
/// `t = 0` so that straight-line families score exactly 1. A positive
/// minimum means no conjugate points were detected; values near zero (or
/// trapped samples) flag a simplicity failure.
#[derive(Clone, Copy, Debug)]
pub struct SimplicityReport {
    pub min_scaled_det: f64,
    pub argmin_x: Vec2,
    pub argmin_t: f64,
    pub argmin_dir: Vec2,
    /// Samples whose traces exceeded the arc budget (trapped curves).
    /// Nonzero counts already indicate the family is not simple on `M1`.
    pub n_trapped: usize,
    pub n_evaluated: usize,
}

const FD_ANGLE: f64 = 1e-4;

/// Sweeps `n_samples` base points and directions over `M`, tracing each
/// curve to its exit and differentiating the exponential map in the angle
/// by central differences.
///
/// Trapped traces are counted in `n_trapped` rather than aborting the sweep,
/// so strong fields produce a report instead of an error; generator
/// evaluation failures still propagate.
pub fn simplicity_report(
    gen: &CurveGenerator,
    dom: &Domain,
    cfg: &TraceConfig,
    n_samples: usize,
) -> Result<SimplicityReport, GeometryError> {
    let n_samples = n_samples.max(1);
    let mut report = SimplicityReport {
        min_scaled_det: f64::INFINITY,
        argmin_x: dom.center,
        argmin_t: 0.0,
        argmin_dir: Vec2::new(1.0, 0.0),
        n_trapped: 0,
        n_evaluated: 0,
    };

    // Golden-angle sunflower over M paired with a rotating direction.
    let golden = core::f64::consts::PI * (3.0 - crate::math::sqrt(5.0));
    for i in 0..n_samples {
        let frac = (i as f64 + 0.5) / n_samples as f64;
        let r = dom.radius_m * crate::math::sqrt(frac);
        let x = dom.center + Vec2::from_angle(golden * i as f64) * r;
        let phi = golden * (i as f64) * 7.0 + 0.123;
        match sample_min_det(gen, dom, cfg, x, phi)? {
            Some((det, t, dir)) => {
                report.n_evaluated += 1;
                if det < report.min_scaled_det {
                    report.min_scaled_det = det;
                    report.argmin_x = x;
                    report.argmin_t = t;
                    report.argmin_dir = dir;
                }
            }
            None => report.n_trapped += 1,
        }
    }
    Ok(report)
}

/// Minimum scaled determinant along one curve, or `None` if any of the three
/// traces is trapped.
fn sample_min_det(
    gen: &CurveGenerator,
    dom: &Domain,
    cfg: &TraceConfig,
    x: Vec2,
    phi: f64,
) -> Result<Option<(f64, f64, Vec2)>, GeometryError> {
    let run = |angle: f64| -> Result<Option<Curve>, GeometryError> {
        match trace_curve(gen, dom, x, Vec2::from_angle(angle), cfg) {
            Ok(c) => Ok(Some(c)),
            Err(GeometryError::NonTermination { .. }) => Ok(None),
            Err(e) => Err(e),
        }
    };
    let (center, plus, minus) = match (run(phi)?, run(phi + FD_ANGLE)?, run(phi - FD_ANGLE)?) {
        (Some(a), Some(b), Some(c)) => (a, b, c),
        _ => return Ok(None),
    };

    // Regular states share the fixed time grid; drop each curve's bisected
    // exit state.
    let n = center
        .len()
        .min(plus.len())
        .min(minus.len())
        .saturating_sub(1);
    let mut best: Option<(f64, f64, Vec2)> = None;
    for k in 1..n {
        let s = center.states[k];
        let dpos = (plus.states[k].pos - minus.states[k].pos) / (2.0 * FD_ANGLE);
        let det = cross(s.vel, dpos).abs() / s.t;
        if best.map(|(d, _, _)| det < d).unwrap_or(true) {
            best = Some((det, s.t, Vec2::from_angle(phi)));
        }
    }
    // Curves that exit before completing one regular step carry no usable
    // determinant sample; treat them as evaluated with the polar limit
    // lambda^2.
    Ok(Some(best.unwrap_or((
        {
            let lam = gen.lambda_unit(x, Vec2::from_angle(phi));
            lam * lam
        },
        0.0,
        Vec2::from_angle(phi),
    ))))
}
