//! Discretization of the inflow boundary of `M1`: entry points, inward
//! directions, and quadrature weights.

use alloc::sync::Arc;
use alloc::vec::Vec;

use super::{Domain, GeometryError};
use crate::math;
use crate::Vec2;

/// One curve launch: boundary point, unit inflow direction, and the measure
/// weight `mu = <theta, -nu> * ds_x * ds_theta`.
#[derive(Clone, Copy, Debug)]
pub struct FanEntry {
    pub point: Vec2,
    pub dir: Vec2,
    pub mu: f64,
}

/// The sampled inflow fan parametrizing the curve family.
#[derive(Clone, Debug)]
pub struct Fan {
    pub entries: Vec<FanEntry>,
    pub n_points: usize,
    pub n_dirs: usize,
}

impl Fan {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn total_measure(&self) -> f64 {
        self.entries.iter().map(|e| e.mu).sum()
    }

    pub fn into_shared(self) -> Arc<Fan> {
        Arc::new(self)
    }
}

/// Samples `n_points` boundary points uniformly on `∂M1` and, for each,
/// `n_dirs` directions at the midpoints of a uniform partition of the open
/// inflow half-circle.
///
/// The weight of an entry at inflow angle `alpha` (measured from the
/// tangent) is `sin(alpha) * (2 pi R1 / n_points) * (pi / n_dirs)`; the sum
/// over the fan converges to `2 * 2 pi R1` as the counts grow. Midpoint
/// sampling keeps every direction strictly inflow, so tangent entries never
/// occur.
pub fn make_fan(dom: &Domain, n_points: usize, n_dirs: usize) -> Result<Fan, GeometryError> {
    if n_points < 4 || n_dirs < 2 {
        return Err(GeometryError::BadFanCounts { n_points, n_dirs });
    }
    let r1 = dom.radius_m1;
    let ds_x = 2.0 * core::f64::consts::PI * r1 / n_points as f64;
    let ds_th = core::f64::consts::PI / n_dirs as f64;
    let mut entries = Vec::with_capacity(n_points * n_dirs);
    for i in 0..n_points {
        let beta = 2.0 * core::f64::consts::PI * i as f64 / n_points as f64;
        let point = dom.center + Vec2::from_angle(beta) * r1;
        for j in 0..n_dirs {
            let alpha = core::f64::consts::PI * (j as f64 + 0.5) / n_dirs as f64;
            let dir = Vec2::from_angle(beta + core::f64::consts::FRAC_PI_2 + alpha);
            let mu = math::sin(alpha) * ds_x * ds_th;
            entries.push(FanEntry { point, dir, mu });
        }
    }
    Ok(Fan {
        entries,
        n_points,
        n_dirs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_fan_counts_and_positivity() {
        let dom = Domain::default();
        let fan = make_fan(&dom, 4, 2).unwrap();
        assert_eq!(fan.len(), 8);
        assert!(fan.entries.iter().all(|e| e.mu > 0.0));
    }

    #[test]
    fn rejects_tiny_fans() {
        let dom = Domain::default();
        assert!(make_fan(&dom, 3, 2).is_err());
        assert!(make_fan(&dom, 4, 1).is_err());
    }

    #[test]
    fn directions_strictly_inflow() {
        let dom = Domain::default();
        let fan = make_fan(&dom, 16, 8).unwrap();
        for e in &fan.entries {
            let nu = dom.outward_normal(e.point);
            assert!(nu.dot(e.dir) < -1e-12);
            assert!((e.dir.norm() - 1.0).abs() < 1e-14);
            assert!(dom.boundary_defect(e.point).abs() < 1e-13);
        }
    }

    #[test]
    fn total_measure_converges_to_closed_form() {
        // Integral of sin(alpha) over the half circle is 2 per boundary
        // point, so the limit is 2 * (2 pi R1).
        let dom = Domain::default();
        let exact = 4.0 * core::f64::consts::PI * dom.radius_m1;
        let coarse = make_fan(&dom, 8, 4).unwrap().total_measure();
        let fine = make_fan(&dom, 64, 64).unwrap().total_measure();
        assert!((fine - exact).abs() < (coarse - exact).abs());
        assert!((fine - exact).abs() / exact < 1e-3);
    }
}
