//! Logarithmic midpoint grids on `[e^{−R}, e^{R}]` and Nyström discretisation.

use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::Matrix;

/// Open midpoint grid, uniform in `x = ln t`.
///
/// Node `i` (0-based) sits at `x_i = −R + (i + ½)h` with `h = 2R/N`; the weight
/// is the Jacobian `h·t_i`. Nodes are placed so that `x_{N−1−i} = −x_i`
/// exactly, hence no node at `t = 1` and exactly `N/2` nodes on each side.
#[derive(Debug, Clone, Serialize)]
pub struct Grid {
    half_width: f64,
    step: f64,
    #[serde(skip)]
    log_nodes: Vec<f64>,
    #[serde(skip)]
    nodes: Vec<f64>,
    #[serde(skip)]
    weights: Vec<f64>,
}

impl PartialEq for Grid {
    fn eq(&self, other: &Self) -> bool {
        self.half_width == other.half_width && self.nodes.len() == other.nodes.len()
    }
}

/// Build the log grid with half-width `r` and `n` nodes.
pub fn make_grid(r: f64, n: usize) -> Result<Grid> {
    if !(r > 0.0) || !r.is_finite() {
        return Err(Error::domain("make_grid", format!("half-width must be positive, got {r}")));
    }
    if n == 0 || n % 2 != 0 {
        return Err(Error::OddNodeCount(n));
    }
    let step = 2.0 * r / n as f64;
    let half = n / 2;
    let mut log_nodes = vec![0.0; n];
    for i in 0..half {
        let x = -r + (i as f64 + 0.5) * step;
        log_nodes[i] = x;
        log_nodes[n - 1 - i] = -x;
    }
    let nodes: Vec<f64> = log_nodes.iter().map(|x| x.exp()).collect();
    let weights = nodes.iter().map(|t| step * t).collect();
    Ok(Grid {
        half_width: r,
        step,
        log_nodes,
        nodes,
        weights,
    })
}

impl Grid {
    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn log_nodes(&self) -> &[f64] {
        &self.log_nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Index of the node mirrored through `t ↦ 1/t`.
    #[inline]
    pub fn mirror(&self, i: usize) -> usize {
        self.len() - 1 - i
    }

    /// Indices of nodes in (0, 1).
    pub fn lower_indices(&self) -> std::ops::Range<usize> {
        0..self.len() / 2
    }

    /// Indices of nodes in (1, ∞).
    pub fn upper_indices(&self) -> std::ops::Range<usize> {
        self.len() / 2..self.len()
    }

    fn sqrt_weights(&self) -> Vec<f64> {
        self.weights.iter().map(|w| w.sqrt()).collect()
    }
}

/// Dense Nyström matrix of some operator expression, or a block of one.
///
/// `rows` and `cols` map matrix indices back to grid node indices; a full
/// matrix has both equal to `0..N`.
#[derive(Debug, Clone)]
pub struct OperatorMatrix {
    grid: Arc<Grid>,
    rows: Vec<usize>,
    cols: Vec<usize>,
    entries: Matrix,
    provenance: String,
}

impl OperatorMatrix {
    pub fn full(grid: Arc<Grid>, entries: Matrix, provenance: impl Into<String>) -> Result<Self> {
        let n = grid.len();
        if entries.rows() != n || entries.cols() != n {
            return Err(Error::Shape(format!(
                "{}x{} entries for a grid of {n} nodes",
                entries.rows(),
                entries.cols()
            )));
        }
        Ok(OperatorMatrix {
            grid,
            rows: (0..n).collect(),
            cols: (0..n).collect(),
            entries,
            provenance: provenance.into(),
        })
    }

    pub(crate) fn block(
        grid: Arc<Grid>,
        rows: Vec<usize>,
        cols: Vec<usize>,
        entries: Matrix,
        provenance: String,
    ) -> Self {
        debug_assert_eq!(entries.rows(), rows.len());
        debug_assert_eq!(entries.cols(), cols.len());
        OperatorMatrix {
            grid,
            rows,
            cols,
            entries,
            provenance,
        }
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn entries(&self) -> &Matrix {
        &self.entries
    }

    pub fn into_entries(self) -> Matrix {
        self.entries
    }

    pub fn provenance(&self) -> &str {
        &self.provenance
    }

    pub fn row_indices(&self) -> &[usize] {
        &self.rows
    }

    pub fn col_indices(&self) -> &[usize] {
        &self.cols
    }

    pub fn is_full(&self) -> bool {
        self.rows.len() == self.grid.len() && self.cols.len() == self.grid.len()
    }

    /// True for a square block whose row and column index maps coincide.
    pub fn is_diagonal_block(&self) -> bool {
        self.rows == self.cols
    }

    pub fn dim(&self) -> (usize, usize) {
        (self.entries.rows(), self.entries.cols())
    }

    pub fn same_grid(&self, other: &OperatorMatrix) -> bool {
        *self.grid == *other.grid
    }
}

/// Nyström matrix `sqrt(w_i w_j) K(t_i, t_j)` of a symmetric kernel. Only the
/// upper triangle is evaluated; the lower one is mirrored, so the result is
/// exactly symmetric.
pub fn nystrom<K>(kernel: K, grid: &Arc<Grid>, provenance: impl Into<String>) -> Result<OperatorMatrix>
where
    K: Fn(f64, f64) -> f64 + Sync,
{
    let n = grid.len();
    let t = grid.nodes();
    let sw = grid.sqrt_weights();
    let upper: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            (i..n)
                .map(|j| {
                    let k = kernel(t[i], t[j]);
                    if k.is_finite() {
                        Ok(sw[i] * sw[j] * k)
                    } else {
                        Err(Error::KernelEvaluation {
                            s: t[i],
                            t: t[j],
                            value: k,
                        })
                    }
                })
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<_>>()?;
    let mut m = Matrix::zeros(n, n);
    for (i, row) in upper.iter().enumerate() {
        for (off, &v) in row.iter().enumerate() {
            let j = i + off;
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    OperatorMatrix::full(Arc::clone(grid), m, provenance)
}

/// Rectangular Nyström matrix `sqrt(w_i w'_j) K(t_i, t'_j)` between two grids
/// with the same step. Used to compose operators through an intermediate
/// variable that ranges over a wider window than the outer grid.
pub fn nystrom_between<K>(kernel: K, rows: &Grid, cols: &Grid) -> Result<Matrix>
where
    K: Fn(f64, f64) -> f64 + Sync,
{
    let (tr, tc) = (rows.nodes(), cols.nodes());
    let (wr, wc) = (rows.sqrt_weights(), cols.sqrt_weights());
    let data: Vec<Vec<f64>> = (0..tr.len())
        .into_par_iter()
        .map(|i| {
            (0..tc.len())
                .map(|j| {
                    let k = kernel(tr[i], tc[j]);
                    if k.is_finite() {
                        Ok(wr[i] * wc[j] * k)
                    } else {
                        Err(Error::KernelEvaluation {
                            s: tr[i],
                            t: tc[j],
                            value: k,
                        })
                    }
                })
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<_>>()?;
    Ok(Matrix::from_vec(tr.len(), tc.len(), data.concat()))
}

/// `Σ w_i f(t_i)`, the log-trapezoid approximation of `∫ f(t) dt` over
/// `[e^{−R}, e^{R}]`.
pub fn quad_integral(f: impl Fn(f64) -> f64, grid: &Grid) -> Result<f64> {
    let mut sum = 0.0;
    for (&t, &w) in grid.nodes().iter().zip(grid.weights()) {
        let v = f(t);
        if !v.is_finite() {
            return Err(Error::domain("quad_integral", format!("integrand is {v} at t={t}")));
        }
        sum += w * v;
    }
    Ok(sum)
}
