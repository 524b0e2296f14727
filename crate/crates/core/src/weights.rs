//! Weight functions on the flow: the attenuated weight, weights constructed
//! from a covector field, tabulated rules, flow log-derivatives, and the
//! 2D elliptic-condition margin.

use alloc::format;
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::geometry::{trace_through, Curve, CurveGenerator, Domain, GeometryError, TraceConfig};
use crate::math;
use crate::Vec2;

/// Direction-dependent pointwise rule `(x, xi) -> value`, evaluated at the
/// actual curve velocity `xi`.
pub type DirRule = Arc<dyn Fn(Vec2, Vec2) -> f64 + Send + Sync>;

/// Covector-field rule `x -> h(x)`.
pub type CovRule = Arc<dyn Fn(Vec2) -> Vec2 + Send + Sync>;

/// The supported weight families.
#[derive(Clone)]
pub enum WeightKind {
    Constant(f64),
    /// `w = scale * exp(-∫ sigma)` cumulated along each curve from its
    /// boundary entry; satisfies `G log w = -sigma` exactly.
    Attenuated { sigma: DirRule, scale: f64 },
    /// The explicit solution of `G log w = h_j xi^j`: `w = w0 * exp(∫ h·γ')`
    /// along each curve. Pairs `[psi h + d psi, 0]` are annihilated by the
    /// pair transform under this weight.
    FromCovector { h: CovRule, w0: f64 },
    /// Arbitrary pointwise rule, optionally with an analytic flow
    /// log-derivative.
    Tabulated {
        value: DirRule,
        glog: Option<DirRule>,
    },
}

/// A weight plus an optional override for the zeroth-order coefficient
/// `alpha` of the pair transform (the default is `alpha = -G w`).
#[derive(Clone)]
pub struct Weight {
    pub kind: WeightKind,
    pub alpha_override: Option<DirRule>,
    label: String,
}

impl Weight {
    pub fn constant(c: f64) -> Self {
        Weight {
            kind: WeightKind::Constant(c),
            alpha_override: None,
            label: format!("constant({c})"),
        }
    }

    pub fn attenuated(sigma: DirRule, label: &str) -> Self {
        Weight {
            kind: WeightKind::Attenuated { sigma, scale: 1.0 },
            alpha_override: None,
            label: format!("attenuated({label})"),
        }
    }

    pub fn attenuated_const(sigma0: f64) -> Self {
        Self::attenuated(Arc::new(move |_, _| sigma0), &format!("sigma={sigma0}"))
    }

    /// Anisotropic attenuation `sigma(x, xi) = m11 u1^2 + 2 m12 u1 u2 +
    /// m22 u2^2` with `u = xi/|xi|`.
    pub fn attenuated_quadratic(m11: f64, m12: f64, m22: f64) -> Self {
        Self::attenuated(
            Arc::new(move |_, xi: Vec2| {
                let u = xi.unit();
                m11 * u.x * u.x + 2.0 * m12 * u.x * u.y + m22 * u.y * u.y
            }),
            &format!("sigma_q=[{m11},{m12},{m22}]"),
        )
    }

    pub fn from_covector(h: CovRule, w0: f64, label: &str) -> Self {
        Weight {
            kind: WeightKind::FromCovector { h, w0 },
            alpha_override: None,
            label: format!("from_covector({label},w0={w0})"),
        }
    }

    pub fn tabulated(value: DirRule, glog: Option<DirRule>, label: &str) -> Self {
        Weight {
            kind: WeightKind::Tabulated { value, glog },
            alpha_override: None,
            label: format!("tabulated({label})"),
        }
    }

    /// Replace `alpha = -G w` by a user rule (the transform stays linear in
    /// the pair; only the zeroth-order coefficient changes).
    pub fn with_alpha_override(mut self, alpha: DirRule) -> Self {
        self.alpha_override = Some(alpha);
        self.label = format!("{}+alpha_override", self.label);
        self
    }

    /// The weight multiplied by a positive constant. Leaves every flow
    /// log-derivative (and hence the elliptic margin) untouched.
    pub fn scaled(&self, c: f64) -> Self {
        let kind = match &self.kind {
            WeightKind::Constant(c0) => WeightKind::Constant(c0 * c),
            WeightKind::Attenuated { sigma, scale } => WeightKind::Attenuated {
                sigma: sigma.clone(),
                scale: scale * c,
            },
            WeightKind::FromCovector { h, w0 } => WeightKind::FromCovector {
                h: h.clone(),
                w0: w0 * c,
            },
            WeightKind::Tabulated { value, glog } => {
                let value = value.clone();
                WeightKind::Tabulated {
                    value: Arc::new(move |x, xi| c * value(x, xi)),
                    glog: glog.clone(),
                }
            }
        };
        Weight {
            kind,
            alpha_override: self.alpha_override.clone(),
            label: format!("{}*{c}", self.label),
        }
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// Analytic flow log-derivative at a phase point, when the kind admits
    /// one.
    fn glog_analytic(&self, x: Vec2, xi: Vec2) -> Option<f64> {
        match &self.kind {
            WeightKind::Constant(_) => Some(0.0),
            WeightKind::Attenuated { sigma, .. } => Some(-sigma(x, xi)),
            WeightKind::FromCovector { h, .. } => Some(h(x).dot(xi)),
            WeightKind::Tabulated { glog, .. } => glog.as_ref().map(|g| g(x, xi)),
        }
    }

    fn has_analytic_glog(&self) -> bool {
        !matches!(&self.kind, WeightKind::Tabulated { glog: None, .. })
    }
}

impl fmt::Debug for Weight {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Weight({})", self.label)
    }
}

/// Errors from weight evaluation.
#[derive(Clone, Debug, PartialEq)]
pub enum WeightError {
    /// Cumulative constructions need curves traced from their boundary
    /// entry; a fragment would shift the integral's base point.
    CurveNotMaximal,
    /// `|w| < 1e-14` somewhere a logarithm is needed.
    ZeroWeight { at: Vec2 },
    Trace(GeometryError),
}

impl fmt::Display for WeightError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            WeightError::CurveNotMaximal => {
                write!(f, "curve does not start on the M1 boundary")
            }
            WeightError::ZeroWeight { at } => {
                write!(f, "weight vanishes near ({}, {})", at.x, at.y)
            }
            WeightError::Trace(e) => write!(f, "trace failure: {e}"),
        }
    }
}

impl core::error::Error for WeightError {}

impl From<GeometryError> for WeightError {
    fn from(e: GeometryError) -> Self {
        WeightError::Trace(e)
    }
}

const ZERO_WEIGHT_TOL: f64 = 1e-14;

/// Cumulative trapezoid of `integrand(pos, vel)` along the curve states;
/// entry value zero.
fn cumulative_trapezoid(curve: &Curve, integrand: impl Fn(Vec2, Vec2) -> f64) -> Vec<f64> {
    let n = curve.len();
    let mut out = Vec::with_capacity(n);
    let mut acc = 0.0;
    let mut prev_val = 0.0;
    for (k, s) in curve.states.iter().enumerate() {
        let val = integrand(s.pos, s.vel);
        if k > 0 {
            let dt = s.t - curve.states[k - 1].t;
            acc += 0.5 * dt * (val + prev_val);
        }
        out.push(acc);
        prev_val = val;
    }
    out
}

/// Weight values at every curve state.
///
/// Attenuated and constructed weights cumulate their defining integral from
/// the curve's entry point (which realizes the maximal backward extension),
/// so the curve must start on `∂M1`.
pub fn weight_along(w: &Weight, curve: &Curve) -> Result<Vec<f64>, WeightError> {
    let n = curve.len();
    match &w.kind {
        WeightKind::Constant(c) => Ok(vec![*c; n]),
        WeightKind::Tabulated { value, .. } => Ok(curve
            .states
            .iter()
            .map(|s| value(s.pos, s.vel))
            .collect()),
        WeightKind::Attenuated { sigma, scale } => {
            if !curve.starts_on_boundary {
                return Err(WeightError::CurveNotMaximal);
            }
            let integral = cumulative_trapezoid(curve, |p, v| sigma(p, v));
            Ok(integral.iter().map(|i| scale * math::exp(-i)).collect())
        }
        WeightKind::FromCovector { h, w0 } => {
            if !curve.starts_on_boundary {
                return Err(WeightError::CurveNotMaximal);
            }
            let integral = cumulative_trapezoid(curve, |p, v| h(p).dot(v));
            Ok(integral.iter().map(|i| w0 * math::exp(*i)).collect())
        }
    }
}

/// Per-state flow derivative `G log w` along a traced curve.
///
/// The attenuated kind returns `-sigma` analytically; all other kinds take
/// centered finite differences of `log w` in the curve parameter (one-sided
/// at the ends). Fails with [`WeightError::ZeroWeight`] where the logarithm
/// is undefined.
pub fn flow_log_derivative(w: &Weight, curve: &Curve) -> Result<Vec<f64>, WeightError> {
    let n = curve.len();
    if let WeightKind::Attenuated { sigma, .. } = &w.kind {
        return Ok(curve.states.iter().map(|s| -sigma(s.pos, s.vel)).collect());
    }
    if let WeightKind::Constant(c) = &w.kind {
        if c.abs() < ZERO_WEIGHT_TOL {
            return Err(WeightError::ZeroWeight {
                at: curve.entry.0,
            });
        }
        return Ok(vec![0.0; n]);
    }
    let values = weight_along(w, curve)?;
    let mut logs = Vec::with_capacity(n);
    for (v, s) in values.iter().zip(&curve.states) {
        if v.abs() < ZERO_WEIGHT_TOL {
            return Err(WeightError::ZeroWeight { at: s.pos });
        }
        logs.push(math::ln(v.abs()));
    }
    let t = |k: usize| curve.states[k].t;
    let mut out = vec![0.0; n];
    for k in 0..n {
        let (a, b) = if k == 0 {
            (0, 1.min(n - 1))
        } else if k == n - 1 {
            (n - 2, n - 1)
        } else {
            (k - 1, k + 1)
        };
        let dt = t(b) - t(a);
        out[k] = if dt > 0.0 { (logs[b] - logs[a]) / dt } else { 0.0 };
    }
    Ok(out)
}

/// Per-state `alpha = -G w = -w * (G log w)`, or the user override when one
/// is installed. Analytic flow derivatives are used where the kind admits
/// them; otherwise the finite-difference path of [`flow_log_derivative`].
pub fn alpha_of(w: &Weight, curve: &Curve) -> Result<Vec<f64>, WeightError> {
    if let Some(rule) = &w.alpha_override {
        return Ok(curve.states.iter().map(|s| rule(s.pos, s.vel)).collect());
    }
    if let WeightKind::Constant(_) = &w.kind {
        return Ok(vec![0.0; curve.len()]);
    }
    let values = weight_along(w, curve)?;
    let glog: Vec<f64> = if w.has_analytic_glog() {
        curve
            .states
            .iter()
            .map(|s| w.glog_analytic(s.pos, s.vel).unwrap())
            .collect()
    } else {
        flow_log_derivative(w, curve)?
    };
    Ok(values
        .iter()
        .zip(&glog)
        .map(|(wv, g)| -wv * g)
        .collect())
}

/// Pointwise weight value at a phase point `(x, theta)`, `theta` unit.
/// Nonlocal kinds trace the maximal curve through the point.
pub fn weight_value_at(
    w: &Weight,
    gen: &CurveGenerator,
    dom: &Domain,
    x: Vec2,
    theta: Vec2,
    cfg: &TraceConfig,
) -> Result<f64, WeightError> {
    match &w.kind {
        WeightKind::Constant(c) => Ok(*c),
        WeightKind::Tabulated { value, .. } => Ok(value(x, gen.velocity(x, theta))),
        WeightKind::Attenuated { .. } | WeightKind::FromCovector { .. } => {
            let (curve, anchor) = trace_through(gen, dom, x, theta, cfg)?;
            let values = weight_along(w, &curve)?;
            Ok(values[anchor])
        }
    }
}

/// Pointwise `G log w` at `(x, theta)`, `theta` unit: analytic where the
/// kind admits it, otherwise a centered difference along a short two-sided
/// trace through the point (step = trace step).
pub fn glog_at(
    w: &Weight,
    gen: &CurveGenerator,
    x: Vec2,
    theta: Vec2,
    cfg: &TraceConfig,
) -> Result<f64, WeightError> {
    let xi = gen.velocity(x, theta);
    if let Some(g) = w.glog_analytic(x, xi) {
        return Ok(g);
    }
    let value = match &w.kind {
        WeightKind::Tabulated { value, .. } => value,
        _ => unreachable!("non-tabulated kinds have analytic derivatives"),
    };
    let h = cfg.step;
    let (xp, vp) = crate::geometry::rk4_step(gen, x, xi, h);
    let rev = gen.reversed();
    let (xm, vm) = crate::geometry::rk4_step(&rev, x, -xi, h);
    if !xp.is_finite() || !xm.is_finite() {
        return Err(WeightError::Trace(GeometryError::StepFailure { at: x }));
    }
    // Reversed-system state maps back to (pos, -vel) at time -h.
    let wp = value(xp, vp);
    let wm = value(xm, -vm);
    if wp.abs() < ZERO_WEIGHT_TOL || wm.abs() < ZERO_WEIGHT_TOL {
        return Err(WeightError::ZeroWeight { at: x });
    }
    Ok((math::ln(wp.abs()) - math::ln(wm.abs())) / (2.0 * h))
}

/// Pointwise `alpha` at `(x, theta)`; traces backward for nonlocal weights.
pub fn alpha_at(
    w: &Weight,
    gen: &CurveGenerator,
    dom: &Domain,
    x: Vec2,
    theta: Vec2,
    cfg: &TraceConfig,
) -> Result<f64, WeightError> {
    let xi = gen.velocity(x, theta);
    if let Some(rule) = &w.alpha_override {
        return Ok(rule(x, xi));
    }
    if let WeightKind::Constant(_) = &w.kind {
        return Ok(0.0);
    }
    let wv = weight_value_at(w, gen, dom, x, theta, cfg)?;
    let g = glog_at(w, gen, x, theta, cfg)?;
    Ok(-wv * g)
}

/// Sampling plan for the elliptic-condition check.
#[derive(Clone, Copy, Debug)]
pub struct EllipticCheckConfig {
    /// Spatial samples over `M` (at least 8).
    pub n_x: usize,
    /// Direction samples per point (at least 8).
    pub n_theta: usize,
    /// Pass verdict requires `min margin > threshold`.
    pub threshold: f64,
    /// Optional direction-cone restriction `(center angle, half width)`.
    /// In two dimensions any proper cone fails the elliptic condition
    /// outright; the knob exists for condition-(U)-style diagnostics.
    pub cone: Option<(f64, f64)>,
}

impl Default for EllipticCheckConfig {
    fn default() -> Self {
        EllipticCheckConfig {
            n_x: 32,
            n_theta: 32,
            threshold: 1e-6,
            cone: None,
        }
    }
}

/// Why an elliptic check failed.
#[derive(Clone, Debug, PartialEq)]
pub enum EllipticFailCause {
    /// Margin at or below threshold: `G log w` is (numerically) odd in the
    /// direction variable.
    BelowThreshold,
    /// Weight vanishes on the sample set.
    ZeroWeight { at: Vec2 },
    /// A proper direction cone cannot satisfy the 2D elliptic condition;
    /// the check requires the full direction circle.
    ConeNotFull,
}

/// Result of the elliptic-condition sweep.
#[derive(Clone, Debug)]
pub struct EllipticReport {
    /// Minimum over samples of
    /// `|G log w(x, l+ th) + (l+/l-) G log w(x, -l- th)|`,
    /// the negation of the 2D failure identity.
    pub min_margin: f64,
    pub argmin: (Vec2, Vec2),
    pub verdict: bool,
    pub cause: Option<EllipticFailCause>,
    pub threshold: f64,
    pub n_samples: usize,
}

/// Sweeps sample phase points and measures how far `G log w` is from an odd
/// function of direction — the 2D form of the elliptic condition. Verdict
/// passes when the minimum margin exceeds the configured threshold.
pub fn elliptic_margin(
    w: &Weight,
    gen: &CurveGenerator,
    dom: &Domain,
    cfg: &EllipticCheckConfig,
    trace_cfg: &TraceConfig,
) -> Result<EllipticReport, WeightError> {
    let n_x = cfg.n_x.max(8);
    let n_theta = cfg.n_theta.max(8);

    let (angle0, half_width, cone_full) = match cfg.cone {
        None => (0.0, core::f64::consts::PI, true),
        Some((c, hw)) => (c, hw, hw >= core::f64::consts::PI - 1e-12),
    };

    let mut min_margin = f64::INFINITY;
    let mut argmin = (dom.center, Vec2::new(1.0, 0.0));
    let golden = core::f64::consts::PI * (3.0 - math::sqrt(5.0));
    for i in 0..n_x {
        let frac = (i as f64 + 0.5) / n_x as f64;
        let r = dom.radius_m * 0.98 * math::sqrt(frac);
        let x = dom.center + Vec2::from_angle(golden * i as f64) * r;
        for j in 0..n_theta {
            let a = angle0 - half_width + 2.0 * half_width * (j as f64 + 0.5) / n_theta as f64;
            let theta = Vec2::from_angle(a);
            // Nonvanishing precondition on the sample (local kinds only;
            // exponential kinds are positive by construction).
            let local_value = match &w.kind {
                WeightKind::Constant(c) => Some(*c),
                WeightKind::Tabulated { value, .. } => Some(value(x, gen.velocity(x, theta))),
                _ => None,
            };
            if let Some(v) = local_value {
                if v.abs() < ZERO_WEIGHT_TOL {
                    return Ok(EllipticReport {
                        min_margin: 0.0,
                        argmin: (x, theta),
                        verdict: false,
                        cause: Some(EllipticFailCause::ZeroWeight { at: x }),
                        threshold: cfg.threshold,
                        n_samples: n_x * n_theta,
                    });
                }
            }
            let g_plus = glog_at(w, gen, x, theta, trace_cfg)?;
            let g_minus = glog_at(w, gen, x, -theta, trace_cfg)?;
            let ratio = gen.lambda_unit(x, theta) / gen.lambda_unit(x, -theta);
            let margin = (g_plus + ratio * g_minus).abs();
            if margin < min_margin {
                min_margin = margin;
                argmin = (x, theta);
            }
        }
    }

    if !cone_full {
        return Ok(EllipticReport {
            min_margin,
            argmin,
            verdict: false,
            cause: Some(EllipticFailCause::ConeNotFull),
            threshold: cfg.threshold,
            n_samples: n_x * n_theta,
        });
    }
    let verdict = min_margin > cfg.threshold;
    Ok(EllipticReport {
        min_margin,
        argmin,
        verdict,
        cause: (!verdict).then_some(EllipticFailCause::BelowThreshold),
        threshold: cfg.threshold,
        n_samples: n_x * n_theta,
    })
}
