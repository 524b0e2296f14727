//! Domains, curve generators, ODE tracing, inflow fans, and simplicity
//! diagnostics.
//!
//! The working geometry is a disk `M` strictly inside a larger disk `M1`.
//! Curves solve the second-order system `x'' = G(x, x')` with initial speed
//! `lambda(x, theta)` and are traced until they exit `M1`. The set of curves
//! launched from the inflow boundary of `M1` is parametrized by a [`Fan`].

mod fan;
mod generator;
mod simplicity;
mod trace;

pub use fan::{make_fan, Fan, FanEntry};
pub use generator::{
    AccelRule, CurveGenerator, GeneratorKind, ScalarGradRule, ScalarRule, SpeedRule,
};
pub use simplicity::{simplicity_report, SimplicityReport};
pub use trace::{hausdorff_distance, trace_curve, trace_through, Curve, CurveState, TraceConfig};

pub(crate) use trace::rk4_step;

use alloc::string::String;
use core::fmt;

use crate::Vec2;

/// The disk `M` (support of the unknown fields) inside the tracing disk `M1`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Domain {
    pub radius_m: f64,
    pub radius_m1: f64,
    pub center: Vec2,
}

impl Domain {
    /// Requires `0 < radius_m < radius_m1` so that `M` sits strictly inside
    /// `M1`.
    pub fn new(radius_m: f64, radius_m1: f64) -> Result<Self, GeometryError> {
        if !(radius_m > 0.0 && radius_m < radius_m1 && radius_m1.is_finite()) {
            return Err(GeometryError::InvalidDomain);
        }
        Ok(Domain {
            radius_m,
            radius_m1,
            center: Vec2::ZERO,
        })
    }

    pub fn with_center(mut self, center: Vec2) -> Self {
        self.center = center;
        self
    }

    pub fn diameter_m1(&self) -> f64 {
        2.0 * self.radius_m1
    }

    /// Outer unit normal of `∂M1` at (or radially beyond) `p`.
    pub fn outward_normal(&self, p: Vec2) -> Vec2 {
        (p - self.center).unit()
    }

    /// Signed distance to `∂M1`; negative inside.
    pub fn boundary_defect(&self, p: Vec2) -> f64 {
        (p - self.center).norm() - self.radius_m1
    }

    pub fn contains_m1(&self, p: Vec2, tol: f64) -> bool {
        self.boundary_defect(p) <= tol
    }
}

impl Default for Domain {
    /// Unit disk inside a disk of radius 1.25, centered at the origin.
    fn default() -> Self {
        Domain {
            radius_m: 1.0,
            radius_m1: 1.25,
            center: Vec2::ZERO,
        }
    }
}

/// Errors from geometry operations.
#[derive(Clone, Debug, PartialEq)]
pub enum GeometryError {
    /// Domain radii must satisfy `0 < radius_m < radius_m1`.
    InvalidDomain,
    /// A traced curve exceeded the configured arc-length budget without
    /// exiting `M1`; the curve is (numerically) trapped.
    NonTermination { arc_length: f64 },
    /// The generator produced a non-finite acceleration or state.
    StepFailure { at: Vec2 },
    /// Trace start point lies outside the closure of `M1`.
    OutsideDomain { at: Vec2 },
    /// Fan sampling needs `n_points >= 4` and `n_dirs >= 2`.
    BadFanCounts { n_points: usize, n_dirs: usize },
    /// Free-form invariant violation (non-unit direction, bad speed, ...).
    Invalid(String),
}

impl fmt::Display for GeometryError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GeometryError::InvalidDomain => {
                write!(f, "domain radii must satisfy 0 < radius_m < radius_m1")
            }
            GeometryError::NonTermination { arc_length } => write!(
                f,
                "curve exceeded max arc length {arc_length} without exiting M1 (trapped?)"
            ),
            GeometryError::StepFailure { at } => {
                write!(f, "generator evaluation failed near ({}, {})", at.x, at.y)
            }
            GeometryError::OutsideDomain { at } => {
                write!(f, "trace start ({}, {}) outside M1", at.x, at.y)
            }
            GeometryError::BadFanCounts { n_points, n_dirs } => write!(
                f,
                "fan needs n_points >= 4 and n_dirs >= 2, got {n_points} x {n_dirs}"
            ),
            GeometryError::Invalid(msg) => write!(f, "{msg}"),
        }
    }
}

impl core::error::Error for GeometryError {}
