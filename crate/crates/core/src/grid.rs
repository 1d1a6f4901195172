//! Staggered 1D mesh: nodes, midpoints and the quadrature weights used by
//! the energy inner product.

use serde::{Deserialize, Serialize};

use crate::error::GridError;

/// Uniform staggered grid on `[0, L]` with `N` cells.
///
/// Nodes sit at `x_j = j h` (j = 0..N) and midpoints at `x_{j+1/2} = (j+1/2) h`.
/// Node quadrature is the trapezoid rule (`h/2` at the endpoints, `h` inside),
/// midpoint quadrature is `h` per cell; both weight sets sum to `L` exactly.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Grid {
    pub length: f64,
    pub cells: usize,
    pub spacing: f64,
    pub nodes: Vec<f64>,
    pub midpoints: Vec<f64>,
    pub node_weights: Vec<f64>,
    pub midpoint_weights: Vec<f64>,
}

/// Build a staggered grid with `cells >= 4` on a domain of positive length.
pub fn build_grid(length: f64, cells: usize) -> Result<Grid, GridError> {
    if !(length > 0.0) || !length.is_finite() {
        return Err(GridError::NonPositiveLength(length));
    }
    if cells < 4 {
        return Err(GridError::TooFewCells(cells));
    }
    let h = length / cells as f64;
    let nodes: Vec<f64> = (0..=cells).map(|j| j as f64 * h).collect();
    let midpoints: Vec<f64> = (0..cells).map(|j| (j as f64 + 0.5) * h).collect();
    let mut node_weights = vec![h; cells + 1];
    node_weights[0] = 0.5 * h;
    node_weights[cells] = 0.5 * h;
    let midpoint_weights = vec![h; cells];
    Ok(Grid {
        length,
        cells,
        spacing: h,
        nodes,
        midpoints,
        node_weights,
        midpoint_weights,
    })
}

impl Grid {
    /// Interior nodes `x_1 .. x_{N-1}` (the Dirichlet-eliminated unknowns).
    pub fn interior_nodes(&self) -> &[f64] {
        &self.nodes[1..self.cells]
    }
}
