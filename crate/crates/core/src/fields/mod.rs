//! Grid-sampled scalar and covector fields on the disk, first-order
//! difference operators, the Dirichlet Poisson solve, and the solenoidal
//! decomposition.
//!
//! A [`Grid`] covers the bounding square of `M1` with uniform nodes and
//! classifies each node against a mask circle (usually `∂M`): strictly
//! interior, boundary band (within half a spacing of the circle), or
//! exterior. Fields are zero at exterior nodes; Dirichlet conditions pin the
//! band. The discrete gradient and divergence are centered everywhere and
//! are exact negative adjoints of each other, which makes the solenoidal
//! decomposition an exact orthogonal projection (see `ops`).

mod ops;
mod poisson;
pub mod synth;

pub use ops::{divergence, gradient, laplacian};
pub use poisson::{poisson_dirichlet, solenoidal_decompose};

use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::geometry::Domain;
use crate::math;
use crate::Vec2;

/// Node classification against the mask circle.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NodeKind {
    /// Strictly inside: `r < mask_radius - spacing/2`. Carries degrees of
    /// freedom.
    Interior,
    /// Within half a spacing of the mask circle; Dirichlet zeros for
    /// potentials, admissible support for covector components.
    Band,
    Exterior,
}

/// Uniform node grid over the bounding square of `M1`, with a radial mask.
#[derive(Debug)]
pub struct Grid {
    pub n_cells: usize,
    pub nodes_per_side: usize,
    pub spacing: f64,
    /// Position of node `(0, 0)`.
    pub origin: Vec2,
    pub center: Vec2,
    pub mask_radius: f64,
    mask: Vec<NodeKind>,
    interior: Vec<u32>,
    support: Vec<u32>,
    node_to_interior: Vec<i32>,
    node_to_support: Vec<i32>,
}

impl Grid {
    /// Grid with `n_cells` cells per side covering `[-R1, R1]^2` around the
    /// domain center, masked by `mask_radius`.
    pub fn new(dom: &Domain, n_cells: usize, mask_radius: f64) -> Result<Arc<Grid>, FieldError> {
        if n_cells < 4 {
            return Err(FieldError::BadGrid(String::from(
                "grid needs at least 4 cells per side",
            )));
        }
        if !(mask_radius > 0.0 && mask_radius <= dom.radius_m1) {
            return Err(FieldError::BadGrid(String::from(
                "mask radius must lie in (0, radius_m1]",
            )));
        }
        let nodes_per_side = n_cells + 1;
        let spacing = dom.diameter_m1() / n_cells as f64;
        let origin = dom.center - Vec2::new(dom.radius_m1, dom.radius_m1);
        let n_nodes = nodes_per_side * nodes_per_side;

        let mut mask = vec![NodeKind::Exterior; n_nodes];
        let mut interior = Vec::new();
        let mut support = Vec::new();
        let mut node_to_interior = vec![-1i32; n_nodes];
        let mut node_to_support = vec![-1i32; n_nodes];
        for j in 0..nodes_per_side {
            for i in 0..nodes_per_side {
                let idx = j * nodes_per_side + i;
                let p = origin + Vec2::new(i as f64, j as f64) * spacing;
                let r = (p - dom.center).norm();
                let kind = if r < mask_radius - 0.5 * spacing {
                    NodeKind::Interior
                } else if r <= mask_radius + 0.5 * spacing {
                    NodeKind::Band
                } else {
                    NodeKind::Exterior
                };
                mask[idx] = kind;
                if kind == NodeKind::Interior {
                    node_to_interior[idx] = interior.len() as i32;
                    interior.push(idx as u32);
                }
                if kind != NodeKind::Exterior {
                    node_to_support[idx] = support.len() as i32;
                    support.push(idx as u32);
                }
            }
        }
        Ok(Arc::new(Grid {
            n_cells,
            nodes_per_side,
            spacing,
            origin,
            center: dom.center,
            mask_radius,
            mask,
            interior,
            support,
            node_to_interior,
            node_to_support,
        }))
    }

    /// Grid masked by `∂M` — the usual choice for transform targets.
    pub fn for_m(dom: &Domain, n_cells: usize) -> Result<Arc<Grid>, FieldError> {
        Grid::new(dom, n_cells, dom.radius_m)
    }

    /// Grid masked by `∂M1`, for decompositions of zero-extended fields.
    pub fn for_m1(dom: &Domain, n_cells: usize) -> Result<Arc<Grid>, FieldError> {
        Grid::new(dom, n_cells, dom.radius_m1)
    }

    #[inline]
    pub fn n_nodes(&self) -> usize {
        self.nodes_per_side * self.nodes_per_side
    }

    #[inline]
    pub fn node_index(&self, i: usize, j: usize) -> usize {
        j * self.nodes_per_side + i
    }

    #[inline]
    pub fn node_pos(&self, i: usize, j: usize) -> Vec2 {
        self.origin + Vec2::new(i as f64, j as f64) * self.spacing
    }

    #[inline]
    pub fn kind(&self, idx: usize) -> NodeKind {
        self.mask[idx]
    }

    #[inline]
    pub fn cell_area(&self) -> f64 {
        self.spacing * self.spacing
    }

    /// Node ids of interior nodes, in row-major order.
    pub fn interior_nodes(&self) -> &[u32] {
        &self.interior
    }

    /// Node ids of interior plus band nodes, in row-major order.
    pub fn support_nodes(&self) -> &[u32] {
        &self.support
    }

    #[inline]
    pub fn interior_index(&self, node: usize) -> Option<usize> {
        let v = self.node_to_interior[node];
        (v >= 0).then(|| v as usize)
    }

    #[inline]
    pub fn support_index(&self, node: usize) -> Option<usize> {
        let v = self.node_to_support[node];
        (v >= 0).then(|| v as usize)
    }

    /// Bilinear interpolation stencil at `p`: four node ids and weights.
    /// Points outside the grid square return `None`; points on the edge are
    /// clamped into the last cell.
    pub fn stencil(&self, p: Vec2) -> Option<([usize; 4], [f64; 4])> {
        let gx = (p.x - self.origin.x) / self.spacing;
        let gy = (p.y - self.origin.y) / self.spacing;
        let edge = self.n_cells as f64;
        let pad = 1e-9;
        if gx < -pad || gy < -pad || gx > edge + pad || gy > edge + pad {
            return None;
        }
        let mut i0 = math::floor(gx) as isize;
        let mut j0 = math::floor(gy) as isize;
        i0 = i0.clamp(0, self.n_cells as isize - 1);
        j0 = j0.clamp(0, self.n_cells as isize - 1);
        let fx = (gx - i0 as f64).clamp(0.0, 1.0);
        let fy = (gy - j0 as f64).clamp(0.0, 1.0);
        let (i0, j0) = (i0 as usize, j0 as usize);
        let n00 = self.node_index(i0, j0);
        let n10 = self.node_index(i0 + 1, j0);
        let n01 = self.node_index(i0, j0 + 1);
        let n11 = self.node_index(i0 + 1, j0 + 1);
        let w = [
            (1.0 - fx) * (1.0 - fy),
            fx * (1.0 - fy),
            (1.0 - fx) * fy,
            fx * fy,
        ];
        Some(([n00, n10, n01, n11], w))
    }

    /// Short identity string for provenance records.
    pub fn describe(&self) -> String {
        alloc::format!(
            "grid(n={},spacing={:.6},mask_r={})",
            self.n_cells,
            self.spacing,
            self.mask_radius
        )
    }
}

impl PartialEq for Grid {
    fn eq(&self, other: &Self) -> bool {
        self.n_cells == other.n_cells
            && self.spacing == other.spacing
            && self.origin == other.origin
            && self.mask_radius == other.mask_radius
    }
}

/// Scalar field sampled at grid nodes; zero at exterior nodes.
#[derive(Clone, Debug)]
pub struct ScalarField {
    pub grid: Arc<Grid>,
    pub values: Vec<f64>,
}

impl ScalarField {
    pub fn zeros(grid: Arc<Grid>) -> Self {
        let n = grid.n_nodes();
        ScalarField {
            grid,
            values: vec![0.0; n],
        }
    }

    /// Samples `f` at interior and band nodes; exterior nodes stay zero.
    pub fn from_fn(grid: Arc<Grid>, f: impl Fn(Vec2) -> f64) -> Self {
        let mut out = Self::zeros(grid);
        let nps = out.grid.nodes_per_side;
        for j in 0..nps {
            for i in 0..nps {
                let idx = out.grid.node_index(i, j);
                if out.grid.kind(idx) != NodeKind::Exterior {
                    out.values[idx] = f(out.grid.node_pos(i, j));
                }
            }
        }
        out
    }

    pub fn dot(&self, other: &ScalarField) -> f64 {
        debug_assert!(self.grid == other.grid);
        self.grid.cell_area() * crate::linalg::dot(&self.values, &other.values)
    }

    pub fn norm_l2(&self) -> f64 {
        math::sqrt(self.dot(self))
    }

    /// Bilinear interpolation; zero outside the grid.
    pub fn interp(&self, p: Vec2) -> f64 {
        match self.grid.stencil(p) {
            Some((nodes, w)) => (0..4).map(|k| w[k] * self.values[nodes[k]]).sum(),
            None => 0.0,
        }
    }
}

/// Covector field `(f1, f2)` sampled at grid nodes; zero at exterior nodes.
#[derive(Clone, Debug)]
pub struct CovectorField {
    pub grid: Arc<Grid>,
    pub f1: Vec<f64>,
    pub f2: Vec<f64>,
}

impl CovectorField {
    pub fn zeros(grid: Arc<Grid>) -> Self {
        let n = grid.n_nodes();
        CovectorField {
            grid,
            f1: vec![0.0; n],
            f2: vec![0.0; n],
        }
    }

    pub fn from_fn(grid: Arc<Grid>, f: impl Fn(Vec2) -> Vec2) -> Self {
        let mut out = Self::zeros(grid);
        let nps = out.grid.nodes_per_side;
        for j in 0..nps {
            for i in 0..nps {
                let idx = out.grid.node_index(i, j);
                if out.grid.kind(idx) != NodeKind::Exterior {
                    let v = f(out.grid.node_pos(i, j));
                    out.f1[idx] = v.x;
                    out.f2[idx] = v.y;
                }
            }
        }
        out
    }

    pub fn dot(&self, other: &CovectorField) -> f64 {
        debug_assert!(self.grid == other.grid);
        self.grid.cell_area()
            * (crate::linalg::dot(&self.f1, &other.f1) + crate::linalg::dot(&self.f2, &other.f2))
    }

    pub fn norm_l2(&self) -> f64 {
        math::sqrt(self.dot(self))
    }

    pub fn interp(&self, p: Vec2) -> Vec2 {
        match self.grid.stencil(p) {
            Some((nodes, w)) => {
                let mut v = Vec2::ZERO;
                for k in 0..4 {
                    v.x += w[k] * self.f1[nodes[k]];
                    v.y += w[k] * self.f2[nodes[k]];
                }
                v
            }
            None => Vec2::ZERO,
        }
    }

    pub fn scaled_sub(&self, other: &CovectorField, s: f64) -> CovectorField {
        debug_assert!(self.grid == other.grid);
        let mut out = self.clone();
        for i in 0..out.f1.len() {
            out.f1[i] -= s * other.f1[i];
            out.f2[i] -= s * other.f2[i];
        }
        out
    }
}

/// The pair `[f, phi]` acted on by the pair transform and normal operator.
#[derive(Clone, Debug)]
pub struct Pair {
    pub f: CovectorField,
    pub phi: ScalarField,
}

impl Pair {
    /// Both components must live on the same grid.
    pub fn new(f: CovectorField, phi: ScalarField) -> Self {
        assert!(f.grid == phi.grid, "pair components on different grids");
        Pair { f, phi }
    }

    pub fn zeros(grid: Arc<Grid>) -> Self {
        Pair {
            f: CovectorField::zeros(grid.clone()),
            phi: ScalarField::zeros(grid),
        }
    }

    pub fn from_covector(f: CovectorField) -> Self {
        let phi = ScalarField::zeros(f.grid.clone());
        Pair { f, phi }
    }

    pub fn dot(&self, other: &Pair) -> f64 {
        self.f.dot(&other.f) + self.phi.dot(&other.phi)
    }

    pub fn norm_l2(&self) -> f64 {
        math::sqrt(self.dot(self))
    }
}

/// Linear-solver parameters for the Poisson and reconstruction solves.
#[derive(Clone, Copy, Debug)]
pub struct SolverConfig {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            tol: 1e-10,
            max_iter: 10_000,
        }
    }
}

/// Errors from field operations.
#[derive(Clone, Debug, PartialEq)]
pub enum FieldError {
    BadGrid(String),
    /// The CG solve did not reach the requested residual.
    NoConvergence {
        iterations: usize,
        rel_residual: f64,
    },
}

impl fmt::Display for FieldError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FieldError::BadGrid(msg) => write!(f, "invalid grid: {msg}"),
            FieldError::NoConvergence {
                iterations,
                rel_residual,
            } => write!(
                f,
                "CG stalled after {iterations} iterations at relative residual {rel_residual:.3e}"
            ),
        }
    }
}

impl core::error::Error for FieldError {}
