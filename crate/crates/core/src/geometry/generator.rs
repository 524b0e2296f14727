//! Curve generators: the pair `(G, lambda)` defining a curve family.

use alloc::format;
use alloc::string::String;
use alloc::sync::Arc;

use crate::Vec2;

/// Pointwise scalar rule, e.g. a magnetic field strength `b(x)`.
pub type ScalarRule = Arc<dyn Fn(Vec2) -> f64 + Send + Sync>;

/// Scalar rule returning `(value, gradient)`, used for conformal factors
/// whose Christoffel terms are computed analytically.
pub type ScalarGradRule = Arc<dyn Fn(Vec2) -> (f64, Vec2) + Send + Sync>;

/// Acceleration rule `G(x, v)` for custom generators.
pub type AccelRule = Arc<dyn Fn(Vec2, Vec2) -> Vec2 + Send + Sync>;

/// Initial-speed rule `lambda(x, theta)` on unit directions.
pub type SpeedRule = Arc<dyn Fn(Vec2, Vec2) -> f64 + Send + Sync>;

/// The built-in generator families plus an escape hatch for custom systems.
#[derive(Clone)]
pub enum GeneratorKind {
    /// `G = 0`: straight lines.
    StraightLine,
    /// Geodesics of the conformal metric `c(x)^2 * (dx^2 + dy^2)`.
    ConformalGeodesic { c: ScalarGradRule },
    /// Lorentz-type force `G(x, v) = b(x) * Jv` with `J` the 90-degree
    /// rotation; `<G, v> = 0`, so the flow preserves `|v|`.
    Magnetic { b: ScalarRule },
    /// User-supplied system. `lambda` is evaluated on unit directions and
    /// must be flow-consistent: `|v(t)| = lambda(x(t), v(t)/|v(t)|)` along
    /// every curve of the family.
    Custom { accel: AccelRule, lambda: SpeedRule },
}

/// A curve family: generator kind, overall speed factor, and whether the
/// induced boundary-to-interior change of variables has unit Jacobian
/// (true for all built-in kinds).
#[derive(Clone)]
pub struct CurveGenerator {
    pub kind: GeneratorKind,
    /// Constant factor multiplying `lambda`; flow-consistent for every
    /// built-in kind. Used for speed-profile perturbation studies.
    pub speed: f64,
    pub measure_preserving: bool,
    label: String,
}

impl CurveGenerator {
    pub fn straight() -> Self {
        CurveGenerator {
            kind: GeneratorKind::StraightLine,
            speed: 1.0,
            measure_preserving: true,
            label: String::from("straight"),
        }
    }

    pub fn magnetic(b: ScalarRule, label: &str) -> Self {
        CurveGenerator {
            kind: GeneratorKind::Magnetic { b },
            speed: 1.0,
            measure_preserving: true,
            label: format!("magnetic({label})"),
        }
    }

    pub fn magnetic_const(b: f64) -> Self {
        Self::magnetic(Arc::new(move |_| b), &format!("b={b}"))
    }

    /// Conformal factor `c` must be positive on `M1`; the rule returns
    /// `(c, grad c)`.
    pub fn conformal(c: ScalarGradRule, label: &str) -> Self {
        CurveGenerator {
            kind: GeneratorKind::ConformalGeodesic { c },
            speed: 1.0,
            measure_preserving: true,
            label: format!("conformal({label})"),
        }
    }

    /// Conformal factor `c(x) = 1 + eps * exp(-|x - x0|^2 / (2 sigma^2))`.
    pub fn conformal_gaussian(eps: f64, x0: Vec2, sigma: f64) -> Self {
        let rule: ScalarGradRule = Arc::new(move |x: Vec2| {
            let d = x - x0;
            let q = crate::math::exp(-d.norm_sq() / (2.0 * sigma * sigma));
            let c = 1.0 + eps * q;
            let grad = d * (-eps * q / (sigma * sigma));
            (c, grad)
        });
        Self::conformal(rule, &format!("eps={eps},sigma={sigma}"))
    }

    pub fn custom(accel: AccelRule, lambda: SpeedRule, label: &str) -> Self {
        CurveGenerator {
            kind: GeneratorKind::Custom { accel, lambda },
            speed: 1.0,
            measure_preserving: false,
            label: format!("custom({label})"),
        }
    }

    pub fn with_speed(mut self, speed: f64) -> Self {
        self.speed = speed;
        self
    }

    pub fn with_measure_preserving(mut self, flag: bool) -> Self {
        self.measure_preserving = flag;
        self
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// Acceleration `G(x, v)`.
    pub fn accel(&self, x: Vec2, v: Vec2) -> Vec2 {
        match &self.kind {
            GeneratorKind::StraightLine => Vec2::ZERO,
            GeneratorKind::Magnetic { b } => v.perp() * b(x),
            GeneratorKind::ConformalGeodesic { c } => {
                // Geodesic equation of c^2 * euclidean; with phi = log c:
                // x'' = -2 <grad phi, v> v + |v|^2 grad phi.
                let (cv, grad_c) = c(x);
                let grad_phi = grad_c / cv;
                grad_phi * v.norm_sq() - v * (2.0 * grad_phi.dot(v))
            }
            GeneratorKind::Custom { accel, .. } => accel(x, v),
        }
    }

    /// Initial speed `lambda(x, theta)` for a unit direction `theta`.
    ///
    /// Built-in values: 1 for straight lines and magnetic systems (the flow
    /// preserves `|v|`), `1 / c(x)` for conformal geodesics (the flow
    /// preserves the conformal energy, so the euclidean speed is `1/c`
    /// pointwise). All are scaled by the `speed` factor.
    pub fn lambda_unit(&self, x: Vec2, theta: Vec2) -> f64 {
        let base = match &self.kind {
            GeneratorKind::StraightLine | GeneratorKind::Magnetic { .. } => 1.0,
            GeneratorKind::ConformalGeodesic { c } => 1.0 / c(x).0,
            GeneratorKind::Custom { lambda, .. } => lambda(x, theta),
        };
        self.speed * base
    }

    /// `lambda` extended to nonzero vectors by homogeneity of order -1:
    /// `lambda(x, xi) = lambda_unit(x, xi/|xi|) / |xi|`.
    pub fn lambda(&self, x: Vec2, xi: Vec2) -> f64 {
        let n = xi.norm();
        self.lambda_unit(x, xi / n) / n
    }

    /// Velocity of the family curve through `(x, theta)`, `theta` unit.
    pub fn velocity(&self, x: Vec2, theta: Vec2) -> Vec2 {
        theta * self.lambda_unit(x, theta)
    }

    /// The time-reversed system: if `t -> (x(t), v(t))` solves the original
    /// system, `s -> (x(-s), -v(-s))` solves the reversed one. Used for
    /// backward extension of curves.
    pub fn reversed(&self) -> Self {
        let kind = match &self.kind {
            GeneratorKind::StraightLine => GeneratorKind::StraightLine,
            GeneratorKind::Magnetic { b } => {
                let b = b.clone();
                GeneratorKind::Magnetic {
                    b: Arc::new(move |x| -b(x)),
                }
            }
            // G is even in v for geodesic-type generators.
            GeneratorKind::ConformalGeodesic { c } => {
                GeneratorKind::ConformalGeodesic { c: c.clone() }
            }
            GeneratorKind::Custom { accel, lambda } => {
                let a = accel.clone();
                let l = lambda.clone();
                GeneratorKind::Custom {
                    accel: Arc::new(move |x, v| a(x, -v)),
                    lambda: Arc::new(move |x, th| l(x, -th)),
                }
            }
        };
        CurveGenerator {
            kind,
            speed: self.speed,
            measure_preserving: self.measure_preserving,
            label: self.label.clone(),
        }
    }
}

impl core::fmt::Debug for CurveGenerator {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        write!(f, "CurveGenerator({})", self.label)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lambda_extension_is_exactly_homogeneous() {
        let gen = CurveGenerator::conformal_gaussian(0.2, Vec2::new(0.1, -0.2), 0.5);
        let x = Vec2::new(0.3, 0.4);
        let theta = Vec2::from_angle(1.1);
        for s in [0.25, 1.0, 3.5] {
            let xi = theta * s;
            let expect = gen.lambda_unit(x, theta) / s;
            assert_eq!(gen.lambda(x, xi), expect);
        }
    }

    #[test]
    fn magnetic_accel_is_normal_to_velocity() {
        let gen = CurveGenerator::magnetic_const(2.0);
        let v = Vec2::new(0.6, -0.8);
        let g = gen.accel(Vec2::new(0.1, 0.1), v);
        assert!(g.dot(v).abs() < 1e-15);
        assert!((g.norm() - 2.0 * v.norm()).abs() < 1e-15);
    }

    #[test]
    fn reversed_magnetic_flips_field() {
        let gen = CurveGenerator::magnetic_const(1.5);
        let rev = gen.reversed();
        let x = Vec2::new(0.2, 0.0);
        let v = Vec2::new(0.0, 1.0);
        assert_eq!(rev.accel(x, v), -gen.accel(x, v));
    }

    #[test]
    fn conformal_accel_points_toward_larger_c_at_normal_incidence() {
        // c grows along +x; a ray moving along +y must bend toward +x.
        let c: ScalarGradRule = Arc::new(|x: Vec2| (1.0 + 0.1 * x.x, Vec2::new(0.1, 0.0)));
        let gen = CurveGenerator::conformal(c, "linear");
        let a = gen.accel(Vec2::ZERO, Vec2::new(0.0, 1.0));
        assert!(a.x > 0.0 && a.y.abs() < 1e-15);
    }
}
