//! Fixed-step RK4 tracing of family curves with bisection exit refinement.

use alloc::vec;
use alloc::vec::Vec;

use super::{CurveGenerator, Domain, GeometryError};
use crate::Vec2;

/// Tracing parameters. `step` is the RK4 step in curve time; exits are
/// refined until the endpoint sits within `boundary_tol` of `∂M1`.
#[derive(Clone, Copy, Debug)]
pub struct TraceConfig {
    pub step: f64,
    pub boundary_tol: f64,
    /// Arc-length budget; exceeding it reports a trapped curve.
    pub max_length: f64,
    /// Polyline-Hausdorff tolerance for the trace-reversal consistency
    /// check. At the default step the bound is dominated by chord sag
    /// (`~ curvature * step^2 / 8`), not by the RK4 error.
    pub reversal_tol: f64,
}

impl TraceConfig {
    /// Defaults for a domain: `step = diameter(M1)/256`, tight boundary
    /// tolerance, arc budget of 16 diameters.
    pub fn for_domain(dom: &Domain) -> Self {
        let d = dom.diameter_m1();
        TraceConfig {
            step: d / 256.0,
            boundary_tol: 1e-12,
            max_length: 16.0 * d,
            reversal_tol: 2e-5,
        }
    }

    pub fn with_step(mut self, step: f64) -> Self {
        self.step = step;
        self
    }
}

/// One sample of a traced curve: time, position, velocity.
#[derive(Clone, Copy, Debug)]
pub struct CurveState {
    pub t: f64,
    pub pos: Vec2,
    pub vel: Vec2,
}

/// A traced trajectory across `M1`, sampled at the RK4 steps plus the
/// bisected exit state. Endpoints lie on `∂M1` within the boundary
/// tolerance.
#[derive(Clone, Debug)]
pub struct Curve {
    pub states: Vec<CurveState>,
    /// Cumulative chordal arc length per state.
    pub arc: Vec<f64>,
    /// Boundary entry point and unit inflow direction.
    pub entry: (Vec2, Vec2),
    pub exit_time: f64,
    /// True when the first state realizes the maximal backward extension
    /// (i.e. lies on `∂M1`). Cumulative weight constructions require this.
    pub starts_on_boundary: bool,
}

impl Curve {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    /// Tangent entries produce a two-state curve with `exit_time = 0`.
    pub fn is_degenerate(&self) -> bool {
        self.exit_time == 0.0
    }

    pub fn total_arc(&self) -> f64 {
        *self.arc.last().unwrap_or(&0.0)
    }

    /// Max over states of `| |v| - lambda(x, v/|v|) |`; zero for an exact
    /// solution of a flow-consistent family.
    pub fn speed_defect(&self, gen: &CurveGenerator) -> f64 {
        let mut worst = 0.0f64;
        for s in &self.states {
            let lam = gen.lambda_unit(s.pos, s.vel.unit());
            worst = worst.max((s.vel.norm() - lam).abs());
        }
        worst
    }
}

/// One classical RK4 step of `(x' , v') = (v, G(x, v))`.
pub(crate) fn rk4_step(gen: &CurveGenerator, x: Vec2, v: Vec2, h: f64) -> (Vec2, Vec2) {
    let k1x = v;
    let k1v = gen.accel(x, v);
    let k2x = v + k1v * (h / 2.0);
    let k2v = gen.accel(x + k1x * (h / 2.0), v + k1v * (h / 2.0));
    let k3x = v + k2v * (h / 2.0);
    let k3v = gen.accel(x + k2x * (h / 2.0), v + k2v * (h / 2.0));
    let k4x = v + k3v * h;
    let k4v = gen.accel(x + k3x * h, v + k3v * h);
    let x1 = x + (k1x + k2x * 2.0 + k3x * 2.0 + k4x) * (h / 6.0);
    let v1 = v + (k1v + k2v * 2.0 + k3v * 2.0 + k4v) * (h / 6.0);
    (x1, v1)
}

/// Traces the family curve from `(x, theta)` forward until it exits `M1`.
///
/// `theta` must be a unit vector; the initial velocity is
/// `lambda(x, theta) * theta`. The exit state is refined by bisecting the
/// final RK4 step until the endpoint sits on `∂M1` within
/// `cfg.boundary_tol`. Entries tangent to the boundary (or pointing
/// outward from it) yield a degenerate two-state curve with `exit_time = 0`.
///
/// Errors: [`GeometryError::NonTermination`] once the arc length exceeds
/// `cfg.max_length` (a trapped curve), [`GeometryError::StepFailure`] if the
/// generator produces non-finite values.
pub fn trace_curve(
    gen: &CurveGenerator,
    dom: &Domain,
    x: Vec2,
    theta: Vec2,
    cfg: &TraceConfig,
) -> Result<Curve, GeometryError> {
    let theta = theta.unit();
    if theta == Vec2::ZERO {
        return Err(GeometryError::Invalid(alloc::string::String::from(
            "zero direction",
        )));
    }
    if dom.boundary_defect(x) > 1e-9 * dom.radius_m1 {
        return Err(GeometryError::OutsideDomain { at: x });
    }

    let v0 = gen.velocity(x, theta);
    if !v0.is_finite() || v0 == Vec2::ZERO {
        return Err(GeometryError::StepFailure { at: x });
    }

    let start = CurveState {
        t: 0.0,
        pos: x,
        vel: v0,
    };

    // Tangent or outward start on the boundary: degenerate curve.
    let radial = x - dom.center;
    if dom.boundary_defect(x) >= -1e-9 * dom.radius_m1 && radial.dot(v0) >= 0.0 {
        return Ok(Curve {
            states: vec![start, start],
            arc: vec![0.0, 0.0],
            entry: (x, theta),
            exit_time: 0.0,
            starts_on_boundary: true,
        });
    }

    let h = cfg.step;
    let max_steps = ((cfg.max_length / h) * 8.0) as usize + 64;
    let mut states = Vec::with_capacity(256);
    let mut arc = Vec::with_capacity(256);
    states.push(start);
    arc.push(0.0);

    let mut cur = start;
    for _ in 0..max_steps {
        let (xn, vn) = rk4_step(gen, cur.pos, cur.vel, h);
        if !xn.is_finite() || !vn.is_finite() {
            return Err(GeometryError::StepFailure { at: cur.pos });
        }
        if dom.boundary_defect(xn) > 0.0 {
            // Exited during this step: bisect the step size.
            let exit = bisect_exit(gen, dom, &cur, h, cfg.boundary_tol);
            let last_arc = arc.last().copied().unwrap_or(0.0);
            arc.push(last_arc + (exit.pos - cur.pos).norm());
            states.push(exit);
            let entry = (x, theta);
            return Ok(Curve {
                exit_time: exit.t,
                states,
                arc,
                entry,
                starts_on_boundary: true,
            });
        }
        let next = CurveState {
            t: cur.t + h,
            pos: xn,
            vel: vn,
        };
        let last_arc = arc.last().copied().unwrap_or(0.0);
        let total = last_arc + (xn - cur.pos).norm();
        if total > cfg.max_length {
            return Err(GeometryError::NonTermination { arc_length: total });
        }
        arc.push(total);
        states.push(next);
        cur = next;
    }
    Err(GeometryError::NonTermination {
        arc_length: *arc.last().unwrap_or(&0.0),
    })
}

/// Bisect the step size `alpha` in `(0, h]` from `from` until the stepped
/// position lands on `∂M1` within `tol`.
fn bisect_exit(
    gen: &CurveGenerator,
    dom: &Domain,
    from: &CurveState,
    h: f64,
    tol: f64,
) -> CurveState {
    let mut lo = 0.0;
    let mut hi = h;
    let mut best = rk4_step(gen, from.pos, from.vel, h);
    let mut best_alpha = h;
    for _ in 0..128 {
        let mid = 0.5 * (lo + hi);
        let (xm, vm) = rk4_step(gen, from.pos, from.vel, mid);
        let d = dom.boundary_defect(xm);
        if d.abs() <= tol {
            best = (xm, vm);
            best_alpha = mid;
            break;
        }
        if d < 0.0 {
            lo = mid;
        } else {
            hi = mid;
            best = (xm, vm);
            best_alpha = mid;
        }
        if hi - lo <= f64::EPSILON * h {
            break;
        }
    }
    CurveState {
        t: from.t + best_alpha,
        pos: best.0,
        vel: best.1,
    }
}

/// Traces the full maximal curve through an interior point `(y, omega)`,
/// backward to its boundary entry and forward to its exit.
///
/// Returns the curve (time zero at the entry point, matching the boundary
/// parametrization) together with the index of the state realizing `(y,
/// omega)`.
pub fn trace_through(
    gen: &CurveGenerator,
    dom: &Domain,
    y: Vec2,
    omega: Vec2,
    cfg: &TraceConfig,
) -> Result<(Curve, usize), GeometryError> {
    let omega = omega.unit();
    let rev = gen.reversed();
    let back = trace_curve(&rev, dom, y, -omega, cfg)?;
    let fwd = trace_curve(gen, dom, y, omega, cfg)?;

    let tau_b = back.exit_time;
    let n_b = back.states.len();
    let mut states = Vec::with_capacity(n_b + fwd.states.len());
    // Backward states reversed: reversed-system state (s, p, u) is the
    // original at time tau_b - s with velocity -u.
    for i in (1..n_b).rev() {
        let s = back.states[i];
        states.push(CurveState {
            t: tau_b - s.t,
            pos: s.pos,
            vel: -s.vel,
        });
    }
    let anchor = states.len();
    for s in &fwd.states {
        states.push(CurveState {
            t: tau_b + s.t,
            pos: s.pos,
            vel: s.vel,
        });
    }

    let mut arc = Vec::with_capacity(states.len());
    arc.push(0.0);
    for i in 1..states.len() {
        let prev = arc[i - 1];
        arc.push(prev + (states[i].pos - states[i - 1].pos).norm());
    }

    let entry_state = states[0];
    let entry = (entry_state.pos, entry_state.vel.unit());
    let exit_time = tau_b + fwd.exit_time;
    Ok((
        Curve {
            states,
            arc,
            entry,
            exit_time,
            starts_on_boundary: true,
        },
        anchor,
    ))
}

/// Symmetric Hausdorff distance between two polylines (vertices measured
/// against the opposite polyline's segments). Traces sampled at offset
/// parameters along the same geometric curve compare at the chord-sag
/// level `~ curvature * step^2 / 8` instead of at the sample spacing.
pub fn hausdorff_distance(a: &[Vec2], b: &[Vec2]) -> f64 {
    fn point_to_segment_sq(p: Vec2, s0: Vec2, s1: Vec2) -> f64 {
        let d = s1 - s0;
        let len_sq = d.norm_sq();
        let t = if len_sq == 0.0 {
            0.0
        } else {
            ((p - s0).dot(d) / len_sq).clamp(0.0, 1.0)
        };
        (p - (s0 + d * t)).norm_sq()
    }
    fn one_sided(a: &[Vec2], b: &[Vec2]) -> f64 {
        let mut worst = 0.0f64;
        for p in a {
            let mut best = f64::INFINITY;
            if b.len() == 1 {
                best = (*p - b[0]).norm_sq();
            }
            for w in b.windows(2) {
                best = best.min(point_to_segment_sq(*p, w[0], w[1]));
            }
            worst = worst.max(best);
        }
        crate::math::sqrt(worst)
    }
    one_sided(a, b).max(one_sided(b, a))
}
