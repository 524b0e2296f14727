//! Principal symbol of the normal operator at a point and frequency.
//!
//! In 2D the symbol quadratic form reduces to a sum over the two unit
//! directions orthogonal to the frequency covector. Restricted to the
//! solenoidal-pair subspace at that frequency, its smallest eigenvalue is
//! the pointwise ellipticity certificate: positive exactly when the weight
//! passes the 2D elliptic condition there.

use crate::geometry::{CurveGenerator, Domain, TraceConfig};
use crate::math;
use crate::weights::{alpha_at, weight_value_at, Weight};
use crate::Vec2;

use super::TransformError;

/// The 3x3 symbol form, its restriction to the solenoidal subspace, and the
/// restricted minimal eigenvalue.
#[derive(Clone, Copy, Debug)]
pub struct SymbolReport {
    /// Sum over the two orthogonal directions of `v v^T` with
    /// `v = (lambda w theta_1, lambda w theta_2, alpha)`.
    pub matrix: [[f64; 3]; 3],
    /// Restriction to `{f . xi = 0} ⊕ R phi`, in the basis
    /// `(eta, 0), (0, 1)` with `eta` the unit vector orthogonal to `xi`.
    pub restricted: [[f64; 2]; 2],
    pub min_eig_restricted: f64,
    /// The two probe directions were `±theta_plus`.
    pub theta_plus: Vec2,
}

/// Evaluates the symbol form at `(x, xi)`.
///
/// Requires a measure-preserving generator (unit boundary-to-interior
/// Jacobian); nonlocal weights are evaluated by tracing the maximal curve
/// through each probe direction.
pub fn principal_symbol(
    x: Vec2,
    xi: Vec2,
    weight: &Weight,
    gen: &CurveGenerator,
    dom: &Domain,
    trace_cfg: &TraceConfig,
) -> Result<SymbolReport, TransformError> {
    if !gen.measure_preserving {
        return Err(TransformError::NotMeasurePreserving);
    }
    if xi.norm_sq() == 0.0 {
        return Err(TransformError::Geometry(
            crate::geometry::GeometryError::Invalid(alloc::string::String::from(
                "zero frequency covector",
            )),
        ));
    }
    let eta = xi.unit().perp();
    let mut matrix = [[0.0f64; 3]; 3];
    for theta in [eta, -eta] {
        let lam = gen.lambda_unit(x, theta);
        let w = weight_value_at(weight, gen, dom, x, theta, trace_cfg)?;
        let a = alpha_at(weight, gen, dom, x, theta, trace_cfg)?;
        let v = [lam * w * theta.x, lam * w * theta.y, a];
        for i in 0..3 {
            for j in 0..3 {
                matrix[i][j] += v[i] * v[j];
            }
        }
    }
    // Restrict to span{(eta, 0), (0, 0, 1)}.
    let u1 = [eta.x, eta.y, 0.0];
    let quad = |a: &[f64; 3], b: &[f64; 3]| -> f64 {
        let mut s = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                s += a[i] * matrix[i][j] * b[j];
            }
        }
        s
    };
    let u2 = [0.0, 0.0, 1.0];
    let restricted = [[quad(&u1, &u1), quad(&u1, &u2)], [quad(&u2, &u1), quad(&u2, &u2)]];
    let tr = restricted[0][0] + restricted[1][1];
    let half_gap = math::sqrt(
        0.25 * (restricted[0][0] - restricted[1][1]) * (restricted[0][0] - restricted[1][1])
            + restricted[0][1] * restricted[0][1],
    );
    let min_eig_restricted = 0.5 * tr - half_gap;
    Ok(SymbolReport {
        matrix,
        restricted,
        min_eig_restricted,
        theta_plus: eta,
    })
}
