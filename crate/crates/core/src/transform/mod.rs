//! The weighted Doppler transform: forward map over a fan of curves, the
//! measure-weighted adjoint, the normal operator, and a dense oracle.
//!
//! [`RayOperator`] traces every fan curve once and caches, per curve, the
//! sparse row of quadrature-times-interpolation coefficients over the pair
//! degrees of freedom. Forward application is a dot product against a row;
//! the adjoint scatters with the same coefficients weighted by the fan
//! measure and divided by the node cell area. The discrete adjoint identity
//! `<I p, s>_mu = <p, I* s>_grid` therefore holds to machine precision, and
//! the normal operator `N = I* I` is symmetric positive semidefinite by
//! construction.

mod symbol;

pub use symbol::{principal_symbol, SymbolReport};

use alloc::format;
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use nalgebra::DMatrix;

use crate::fields::{CovectorField, Grid, Pair, ScalarField};
use crate::geometry::{trace_curve, CurveGenerator, Domain, Fan, GeometryError, TraceConfig};
use crate::math;
use crate::weights::{alpha_of, weight_along, Weight, WeightError};

/// Transform values indexed by the fan, with provenance of the system that
/// produced them.
#[derive(Clone, Debug)]
pub struct Sinogram {
    pub values: Vec<f64>,
    pub fan: Arc<Fan>,
    pub provenance: Provenance,
}

/// Identities of the generator, weight, and grid behind a sinogram.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Provenance {
    pub generator: String,
    pub weight: String,
    pub grid: String,
}

impl Sinogram {
    /// Measure-weighted L2 norm `sqrt(sum mu_e v_e^2)`.
    pub fn norm_mu(&self) -> f64 {
        math::sqrt(self.dot_mu(self))
    }

    pub fn dot_mu(&self, other: &Sinogram) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .zip(&self.fan.entries)
            .map(|((a, b), e)| e.mu * a * b)
            .sum()
    }
}

/// Errors from transform construction and application.
#[derive(Clone, Debug, PartialEq)]
pub enum TransformError {
    /// Dense assembly refused: pair DOF count exceeds the limit.
    TooLarge { dofs: usize, limit: usize },
    /// The principal-symbol formula assumes a unit boundary-to-interior
    /// Jacobian, which is only guaranteed for measure-preserving systems.
    NotMeasurePreserving,
    Geometry(GeometryError),
    Weight(WeightError),
}

impl fmt::Display for TransformError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TransformError::TooLarge { dofs, limit } => {
                write!(f, "dense assembly of {dofs} DOFs exceeds limit {limit}")
            }
            TransformError::NotMeasurePreserving => write!(
                f,
                "principal symbol requires a measure-preserving generator (unit Jacobian)"
            ),
            TransformError::Geometry(e) => write!(f, "{e}"),
            TransformError::Weight(e) => write!(f, "{e}"),
        }
    }
}

impl core::error::Error for TransformError {}

impl From<GeometryError> for TransformError {
    fn from(e: GeometryError) -> Self {
        TransformError::Geometry(e)
    }
}

impl From<WeightError> for TransformError {
    fn from(e: WeightError) -> Self {
        TransformError::Weight(e)
    }
}

/// One sparse row: pair-DOF indices (sorted) and coefficients.
#[derive(Clone, Debug, Default)]
struct Row {
    idx: Vec<u32>,
    coef: Vec<f64>,
}

/// The discretized pair transform for one `(generator, weight, fan, grid)`
/// system, with cached quadrature rows.
///
/// Pair DOFs are ordered `f1` over support nodes, then `f2` over support
/// nodes, then `phi` over interior nodes.
pub struct RayOperator {
    pub grid: Arc<Grid>,
    pub fan: Arc<Fan>,
    rows: Vec<Row>,
    generator: CurveGenerator,
    weight: Weight,
    domain: Domain,
    trace_cfg: TraceConfig,
}

impl RayOperator {
    /// Traces every fan curve and accumulates its quadrature row. Curve and
    /// weight failures propagate.
    pub fn build(
        gen: &CurveGenerator,
        weight: &Weight,
        dom: &Domain,
        fan: Arc<Fan>,
        grid: Arc<Grid>,
        trace_cfg: &TraceConfig,
    ) -> Result<RayOperator, TransformError> {
        let m_s = grid.support_nodes().len();
        let mut rows = Vec::with_capacity(fan.len());
        let mut scratch: Vec<(u32, f64)> = Vec::new();
        for entry in &fan.entries {
            let curve = trace_curve(gen, dom, entry.point, entry.dir, trace_cfg)?;
            if curve.is_degenerate() || curve.len() < 2 {
                rows.push(Row::default());
                continue;
            }
            let wvals = weight_along(weight, &curve)?;
            let avals = alpha_of(weight, &curve)?;
            scratch.clear();
            let n = curve.len();
            for k in 0..n {
                let s = &curve.states[k];
                let dt_prev = if k > 0 { s.t - curve.states[k - 1].t } else { 0.0 };
                let dt_next = if k + 1 < n {
                    curve.states[k + 1].t - s.t
                } else {
                    0.0
                };
                let c = 0.5 * (dt_prev + dt_next);
                let Some((nodes, wts)) = grid.stencil(s.pos) else {
                    continue;
                };
                let c1 = c * wvals[k] * s.vel.x;
                let c2 = c * wvals[k] * s.vel.y;
                let ca = c * avals[k];
                for t in 0..4 {
                    let node = nodes[t];
                    let wt = wts[t];
                    if wt == 0.0 {
                        continue;
                    }
                    if let Some(si) = grid.support_index(node) {
                        scratch.push((si as u32, c1 * wt));
                        scratch.push(((si + m_s) as u32, c2 * wt));
                    }
                    if ca != 0.0 {
                        if let Some(ii) = grid.interior_index(node) {
                            scratch.push(((2 * m_s + ii) as u32, ca * wt));
                        }
                    }
                }
            }
            rows.push(consolidate(&mut scratch));
        }
        Ok(RayOperator {
            grid,
            fan,
            rows,
            generator: gen.clone(),
            weight: weight.clone(),
            domain: *dom,
            trace_cfg: *trace_cfg,
        })
    }

    pub fn generator(&self) -> &CurveGenerator {
        &self.generator
    }

    pub fn weight(&self) -> &Weight {
        &self.weight
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn trace_config(&self) -> &TraceConfig {
        &self.trace_cfg
    }

    pub fn n_support(&self) -> usize {
        self.grid.support_nodes().len()
    }

    pub fn n_interior(&self) -> usize {
        self.grid.interior_nodes().len()
    }

    /// Total pair DOFs: `2 * support + interior`.
    pub fn n_pair_dofs(&self) -> usize {
        2 * self.n_support() + self.n_interior()
    }

    pub fn provenance(&self) -> Provenance {
        Provenance {
            generator: String::from(self.generator.label()),
            weight: String::from(self.weight.label()),
            grid: self.grid.describe(),
        }
    }

    /// Packs a pair into the DOF vector (f1 | f2 | phi).
    pub fn pack(&self, p: &Pair) -> Vec<f64> {
        assert!(*p.f.grid == *self.grid, "pair grid mismatch");
        let m_s = self.n_support();
        let mut x = vec![0.0; self.n_pair_dofs()];
        for (k, &node) in self.grid.support_nodes().iter().enumerate() {
            x[k] = p.f.f1[node as usize];
            x[k + m_s] = p.f.f2[node as usize];
        }
        for (k, &node) in self.grid.interior_nodes().iter().enumerate() {
            x[2 * m_s + k] = p.phi.values[node as usize];
        }
        x
    }

    /// Expands a DOF vector back into a pair.
    pub fn unpack(&self, x: &[f64]) -> Pair {
        let m_s = self.n_support();
        let mut f = CovectorField::zeros(self.grid.clone());
        let mut phi = ScalarField::zeros(self.grid.clone());
        for (k, &node) in self.grid.support_nodes().iter().enumerate() {
            f.f1[node as usize] = x[k];
            f.f2[node as usize] = x[k + m_s];
        }
        for (k, &node) in self.grid.interior_nodes().iter().enumerate() {
            phi.values[node as usize] = x[2 * m_s + k];
        }
        Pair::new(f, phi)
    }

    fn apply_rows(&self, x: &[f64]) -> Vec<f64> {
        self.rows
            .iter()
            .map(|row| {
                row.idx
                    .iter()
                    .zip(&row.coef)
                    .map(|(&i, &c)| c * x[i as usize])
                    .sum()
            })
            .collect()
    }

    fn sinogram(&self, values: Vec<f64>) -> Sinogram {
        Sinogram {
            values,
            fan: self.fan.clone(),
            provenance: self.provenance(),
        }
    }

    /// `I[f, phi]`: per curve, the quadrature of `w f_j v^j + alpha phi`.
    pub fn forward_pair(&self, p: &Pair) -> Sinogram {
        let x = self.pack(p);
        self.sinogram(self.apply_rows(&x))
    }

    /// `I_w f`, the transform of a covector field (pair with `phi = 0`).
    pub fn forward_covector(&self, f: &CovectorField) -> Sinogram {
        self.forward_pair(&Pair::from_covector(f.clone()))
    }

    /// Exact transpose of the discrete forward map, weighted by the fan
    /// measure and divided by the node cell area, so that
    /// `<I p, s>_mu = <p, I* s>_grid` holds to machine precision.
    pub fn adjoint(&self, s: &Sinogram) -> Pair {
        assert_eq!(s.values.len(), self.rows.len(), "sinogram/fan mismatch");
        let area = self.grid.cell_area();
        let mut y = vec![0.0; self.n_pair_dofs()];
        for ((row, val), entry) in self.rows.iter().zip(&s.values).zip(&self.fan.entries) {
            let scale = entry.mu * val / area;
            if scale == 0.0 {
                continue;
            }
            for (&i, &c) in row.idx.iter().zip(&row.coef) {
                y[i as usize] += scale * c;
            }
        }
        self.unpack(&y)
    }

    /// The normal operator `N p = I*(I p)`.
    pub fn normal(&self, p: &Pair) -> Pair {
        self.adjoint(&self.forward_pair(p))
    }

    /// `N` on packed DOF vectors, for iterative solvers.
    pub fn normal_packed(&self, x: &[f64]) -> Vec<f64> {
        let s = self.apply_rows(x);
        let area = self.grid.cell_area();
        let mut y = vec![0.0; self.n_pair_dofs()];
        for ((row, val), entry) in self.rows.iter().zip(&s).zip(&self.fan.entries) {
            let scale = entry.mu * val / area;
            if scale == 0.0 {
                continue;
            }
            for (&i, &c) in row.idx.iter().zip(&row.coef) {
                y[i as usize] += scale * c;
            }
        }
        y
    }

    /// The explicit matrix of the pair transform (rows = fan entries,
    /// columns = pair DOFs), built from the cached rows.
    pub fn assemble_dense(&self, limit: usize) -> Result<DMatrix<f64>, TransformError> {
        let dofs = self.n_pair_dofs();
        if dofs > limit {
            return Err(TransformError::TooLarge { dofs, limit });
        }
        let mut a = DMatrix::<f64>::zeros(self.rows.len(), dofs);
        for (r, row) in self.rows.iter().enumerate() {
            for (&i, &c) in row.idx.iter().zip(&row.coef) {
                a[(r, i as usize)] = c;
            }
        }
        Ok(a)
    }

    /// `M^{1/2} A`: the dense matrix with rows scaled by `sqrt(mu)`, whose
    /// singular values (after the cell-area normalization) approximate those
    /// of the continuous transform between the grid and fan L2 structures.
    pub fn assemble_weighted_dense(&self, limit: usize) -> Result<DMatrix<f64>, TransformError> {
        let mut a = self.assemble_dense(limit)?;
        for (r, entry) in self.fan.entries.iter().enumerate() {
            let s = math::sqrt(entry.mu);
            for c in 0..a.ncols() {
                a[(r, c)] *= s;
            }
        }
        Ok(a)
    }

    pub fn fan_measures(&self) -> Vec<f64> {
        self.fan.entries.iter().map(|e| e.mu).collect()
    }
}

impl fmt::Debug for RayOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "RayOperator({} curves, {} DOFs, {:?})",
            self.rows.len(),
            self.n_pair_dofs(),
            self.provenance()
        )
    }
}

/// Sorts and merges duplicate indices in a scratch accumulation.
fn consolidate(scratch: &mut Vec<(u32, f64)>) -> Row {
    scratch.sort_unstable_by_key(|(i, _)| *i);
    let mut idx = Vec::with_capacity(scratch.len() / 4);
    let mut coef = Vec::with_capacity(scratch.len() / 4);
    for &(i, c) in scratch.iter() {
        if idx.last() == Some(&i) {
            *coef.last_mut().unwrap() += c;
        } else {
            idx.push(i);
            coef.push(c);
        }
    }
    Row { idx, coef }
}

/// One-shot forward transform of a covector field; builds the operator
/// internally. Prefer [`RayOperator::build`] when applying repeatedly.
pub fn forward(
    f: &CovectorField,
    weight: &Weight,
    gen: &CurveGenerator,
    dom: &Domain,
    fan: Arc<Fan>,
    trace_cfg: &TraceConfig,
) -> Result<Sinogram, TransformError> {
    let op = RayOperator::build(gen, weight, dom, fan, f.grid.clone(), trace_cfg)?;
    Ok(op.forward_covector(f))
}

/// One-shot pair transform.
pub fn pair_forward(
    p: &Pair,
    weight: &Weight,
    gen: &CurveGenerator,
    dom: &Domain,
    fan: Arc<Fan>,
    trace_cfg: &TraceConfig,
) -> Result<Sinogram, TransformError> {
    let op = RayOperator::build(gen, weight, dom, fan, p.f.grid.clone(), trace_cfg)?;
    Ok(op.forward_pair(p))
}

/// One-shot adjoint.
pub fn adjoint(
    s: &Sinogram,
    weight: &Weight,
    gen: &CurveGenerator,
    dom: &Domain,
    grid: Arc<Grid>,
    trace_cfg: &TraceConfig,
) -> Result<Pair, TransformError> {
    let op = RayOperator::build(gen, weight, dom, s.fan.clone(), grid, trace_cfg)?;
    Ok(op.adjoint(s))
}

/// One-shot normal operator application.
pub fn normal(
    p: &Pair,
    weight: &Weight,
    gen: &CurveGenerator,
    dom: &Domain,
    fan: Arc<Fan>,
    trace_cfg: &TraceConfig,
) -> Result<Pair, TransformError> {
    let op = RayOperator::build(gen, weight, dom, fan, p.f.grid.clone(), trace_cfg)?;
    Ok(op.normal(p))
}

#[cfg(test)]
mod tests;
