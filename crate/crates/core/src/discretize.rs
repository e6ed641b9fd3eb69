//! Matrices of the operator expressions built from `A_α`, `L_α`, weighted
//! Hankel operators, the half-line projections and the changes of variables.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::{self, KernelSpec, ModelKernel, SymmetricKernel, WeightSpec};
use crate::linalg::Matrix;
use crate::quadrature::{make_grid, nystrom, nystrom_between, Grid, OperatorMatrix};
use crate::specfun::{self, Alpha};

/// Half-line selected by a projection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    /// (0, 1)
    Zero,
    /// (1, ∞)
    Infinity,
}

impl Side {
    pub fn other(self) -> Side {
        match self {
            Side::Zero => Side::Infinity,
            Side::Infinity => Side::Zero,
        }
    }

    pub fn tag(self) -> &'static str {
        match self {
            Side::Zero => "0",
            Side::Infinity => "inf",
        }
    }
}

/// Characteristic function of (0,1) or (1,∞) on a grid, as an index set.
#[derive(Debug, Clone)]
pub struct ProjectionMask {
    grid: Arc<Grid>,
    side: Side,
    indices: Vec<usize>,
}

impl ProjectionMask {
    pub fn new(grid: &Arc<Grid>, side: Side) -> Self {
        let indices = match side {
            Side::Zero => grid.lower_indices().collect(),
            Side::Infinity => grid.upper_indices().collect(),
        };
        ProjectionMask {
            grid: Arc::clone(grid),
            side,
            indices,
        }
    }

    pub fn side(&self) -> Side {
        self.side
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    /// The mask as a 0/1 vector over all grid nodes.
    pub fn indicator(&self) -> Vec<f64> {
        let mut d = vec![0.0; self.grid.len()];
        for &i in &self.indices {
            d[i] = 1.0;
        }
        d
    }
}

/// Both masks of a grid, `(zero, infinity)`.
pub fn masks(grid: &Arc<Grid>) -> (ProjectionMask, ProjectionMask) {
    (ProjectionMask::new(grid, Side::Zero), ProjectionMask::new(grid, Side::Infinity))
}

fn assemble_kernel(kernel: &SymmetricKernel, grid: &Arc<Grid>) -> Result<OperatorMatrix> {
    nystrom(kernel.as_fn(), grid, kernel.label())
}

pub fn assemble_a(alpha: Alpha, grid: &Arc<Grid>) -> Result<OperatorMatrix> {
    assemble_kernel(&kernels::kernel_a(alpha), grid)
}

pub fn assemble_l(alpha: Alpha, grid: &Arc<Grid>) -> Result<OperatorMatrix> {
    assemble_kernel(&kernels::kernel_l(alpha), grid)
}

pub fn assemble_wha(a: &KernelSpec, w: &WeightSpec, grid: &Arc<Grid>) -> Result<OperatorMatrix> {
    assemble_kernel(&kernels::weighted_hankel_kernel(a, w)?, grid)
}

/// Nyström matrix of `t^α φ(t+s) s^α`.
pub fn assemble_model_hankel(which: ModelKernel, alpha: Alpha, grid: &Arc<Grid>) -> Result<OperatorMatrix> {
    assemble_kernel(&kernels::model_hankel_kernel(which, alpha), grid)
}

fn positions(map: &[usize], wanted: &[usize]) -> Option<Vec<usize>> {
    wanted.iter().map(|i| map.iter().position(|j| j == i)).collect()
}

/// Rows of `left` by columns of `right`. Works on full matrices and on blocks
/// that contain the requested indices.
pub fn project(m: &OperatorMatrix, left: &ProjectionMask, right: &ProjectionMask) -> Result<OperatorMatrix> {
    if *left.grid != **m.grid() || *right.grid != **m.grid() {
        return Err(Error::GridMismatch);
    }
    let rows = positions(m.row_indices(), left.indices())
        .ok_or_else(|| Error::Shape("row mask is not contained in the block".into()))?;
    let cols = positions(m.col_indices(), right.indices())
        .ok_or_else(|| Error::Shape("column mask is not contained in the block".into()))?;
    let entries = m.entries().select(&rows, &cols);
    Ok(OperatorMatrix::block(
        Arc::clone(m.grid()),
        left.indices().to_vec(),
        right.indices().to_vec(),
        entries,
        format!("1_{} [{}] 1_{}", left.side.tag(), m.provenance(), right.side.tag()),
    ))
}

/// Conjugation by `(Uf)(t) = f(1/t)/t`: on the log grid both indices are
/// reversed through the mirror `i ↦ N−1−i`.
pub fn inversion_conjugate(m: &OperatorMatrix) -> OperatorMatrix {
    let grid = m.grid();
    let rows: Vec<usize> = m.row_indices().iter().rev().map(|&i| grid.mirror(i)).collect();
    let cols: Vec<usize> = m.col_indices().iter().rev().map(|&j| grid.mirror(j)).collect();
    let e = m.entries();
    let (r, c) = (e.rows(), e.cols());
    let entries = Matrix::from_fn(r, c, |p, q| e[(r - 1 - p, c - 1 - q)]);
    OperatorMatrix::block(Arc::clone(grid), rows, cols, entries, format!("U [{}] U*", m.provenance()))
}

/// `diag(u(t_rows)) · M · diag(v(t_cols))`.
pub fn multiply(m: &OperatorMatrix, u: impl Fn(f64) -> f64, v: impl Fn(f64) -> f64) -> Result<OperatorMatrix> {
    let t = m.grid().nodes();
    let left: Vec<f64> = m.row_indices().iter().map(|&i| u(t[i])).collect();
    let right: Vec<f64> = m.col_indices().iter().map(|&j| v(t[j])).collect();
    let entries = m.entries().scale_rows_cols(&left, &right)?;
    Ok(OperatorMatrix::block(
        Arc::clone(m.grid()),
        m.row_indices().to_vec(),
        m.col_indices().to_vec(),
        entries,
        format!("u [{}] v", m.provenance()),
    ))
}

/// Product of two operator matrices on the same grid; the column map of `a`
/// must equal the row map of `b`.
pub fn compose(a: &OperatorMatrix, b: &OperatorMatrix) -> Result<OperatorMatrix> {
    if !a.same_grid(b) {
        return Err(Error::GridMismatch);
    }
    if a.col_indices() != b.row_indices() {
        return Err(Error::Shape("inner index maps differ".into()));
    }
    let entries = a.entries().matmul(b.entries())?;
    Ok(OperatorMatrix::block(
        Arc::clone(a.grid()),
        a.row_indices().to_vec(),
        b.col_indices().to_vec(),
        entries,
        format!("[{}][{}]", a.provenance(), b.provenance()),
    ))
}

/// `M · 1_side · M'` for full matrices `M`, `M'`.
pub fn compose_through_mask(a: &OperatorMatrix, mask: &ProjectionMask, b: &OperatorMatrix) -> Result<OperatorMatrix> {
    if !a.is_full() || !b.is_full() {
        return Err(Error::Shape("compose_through_mask expects full matrices".into()));
    }
    let all: Vec<usize> = (0..a.grid().len()).collect();
    let left = a.entries().select(&all, mask.indices());
    let right = b.entries().select(mask.indices(), &all);
    let entries = left.matmul(&right)?;
    OperatorMatrix::full(
        Arc::clone(a.grid()),
        entries,
        format!("[{}] 1_{} [{}]", a.provenance(), mask.side.tag(), b.provenance()),
    )
}

/// The grid with the same step extended by `pad` (rounded to whole steps) on
/// both ends of the log window.
pub fn padded_grid(grid: &Grid, pad: f64) -> Result<Grid> {
    let extra = (pad / grid.step()).round() as usize;
    let n = grid.len() + 2 * extra;
    make_grid(grid.half_width() + extra as f64 * grid.step(), n)
}

/// Which part of the intermediate variable a padded composition integrates over.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Intermediate {
    All,
    Only(Side),
}

/// `∫ K₁(s,u) K₂(u,t) du` on the outer grid, with the intermediate variable
/// discretised on `padded_grid(grid, pad)` and optionally restricted to a
/// half-line. The outer truncation is unchanged.
pub fn compose_padded(
    left: &SymmetricKernel,
    right: &SymmetricKernel,
    grid: &Arc<Grid>,
    pad: f64,
    through: Intermediate,
) -> Result<OperatorMatrix> {
    let mid = padded_grid(grid, pad)?;
    let keep: Vec<usize> = match through {
        Intermediate::All => (0..mid.len()).collect(),
        Intermediate::Only(Side::Zero) => mid.lower_indices().collect(),
        Intermediate::Only(Side::Infinity) => mid.upper_indices().collect(),
    };
    let lm = nystrom_between(left.as_fn(), grid, &mid)?;
    let rm = nystrom_between(right.as_fn(), &mid, grid)?;
    let all: Vec<usize> = (0..grid.len()).collect();
    let entries = lm.select(&all, &keep).matmul(&rm.select(&keep, &all))?;
    let tag = match through {
        Intermediate::All => "",
        Intermediate::Only(s) => s.tag(),
    };
    OperatorMatrix::full(
        Arc::clone(grid),
        entries,
        format!("[{}] 1{tag}(pad {pad}) [{}]", left.label(), right.label()),
    )
}

/// Grid indices of one side, ordered by increasing `|ln t|`.
pub fn pushforward_order(grid: &Grid, side: Side) -> Vec<usize> {
    match side {
        Side::Infinity => grid.upper_indices().collect(),
        Side::Zero => grid.lower_indices().rev().collect(),
    }
}

/// Diagonal of the discrete change of variables `t = e^{±y}`, `y > 0`, from
/// Nyström coordinates `sqrt(w_i) f(t_i)` to `sqrt(h) (U_± f)(y_k)`, where
/// `(U_± f)(y) = e^{±y/2} f(e^{±y})`. Entry k belongs to node
/// `pushforward_order(grid, side)[k]`.
pub fn pushforward_similarity(grid: &Grid, side: Side) -> Vec<f64> {
    let h = grid.step();
    pushforward_order(grid, side)
        .into_iter()
        .map(|i| {
            let y = grid.log_nodes()[i].abs();
            let jac = match side {
                Side::Infinity => (y / 2.0).exp(),
                Side::Zero => (-y / 2.0).exp(),
            };
            h.sqrt() * jac / grid.weights()[i].sqrt()
        })
        .collect()
}

/// Apply the change of variables to a diagonal block of one side: reorder to
/// pushforward order and conjugate by the diagonal similarity.
pub fn transform_block(block: &OperatorMatrix, side: Side) -> Result<OperatorMatrix> {
    let grid = block.grid();
    let order = pushforward_order(grid, side);
    let pos = positions(block.row_indices(), &order)
        .filter(|_| block.is_diagonal_block() && block.row_indices().len() == order.len())
        .ok_or_else(|| Error::Shape("transform_block expects the full diagonal block of one side".into()))?;
    let d = pushforward_similarity(grid, side);
    let e = block.entries();
    let entries = Matrix::from_fn(order.len(), order.len(), |p, q| d[p] * e[(pos[p], pos[q])] * d[q]);
    Ok(OperatorMatrix::block(
        Arc::clone(grid),
        order.clone(),
        order,
        entries,
        format!("U{} [{}] U{}*", side.tag(), block.provenance(), side.tag()),
    ))
}

/// Nyström matrix of the Hankel operator `H(ψ₊)` (side = infinity) or `H(ψ₋)`
/// (side = zero) on `L²(0, ∞)`, assembled directly on the points
/// `y_k = |ln t_i|` of one side with uniform weights `h`. The kernels carry the
/// normalisation `1/sqrt(Γ(1+2α))` of `L_α`.
pub fn log_pushforward_hankel(side: Side, alpha: Alpha, grid: &Arc<Grid>) -> Result<OperatorMatrix> {
    let order = pushforward_order(grid, side);
    let y: Vec<f64> = order.iter().map(|&i| grid.log_nodes()[i].abs()).collect();
    let h = grid.step();
    let norm = 1.0 / specfun::gamma(alpha.order())?.sqrt();
    let psi = |u: f64| match side {
        Side::Infinity => specfun::psi_plus(alpha, u),
        Side::Zero => specfun::psi_minus(alpha, u),
    };
    let n = y.len();
    let mut entries = Matrix::zeros(n, n);
    for p in 0..n {
        for q in p..n {
            let v = h * norm * psi(y[p] + y[q]);
            entries[(p, q)] = v;
            entries[(q, p)] = v;
        }
    }
    let name = match side {
        Side::Infinity => "psi_plus",
        Side::Zero => "psi_minus",
    };
    Ok(OperatorMatrix::block(
        Arc::clone(grid),
        order.clone(),
        order,
        entries,
        format!("H({name})[alpha={}]", alpha.value()),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::{rational_test_family, FamilyParams};
    use crate::linalg::{op_norm, singular_values, sym_eigenvalues};

    fn al(v: f64) -> Alpha {
        Alpha::new(v).unwrap()
    }

    fn grid(r: f64, n: usize) -> Arc<Grid> {
        Arc::new(make_grid(r, n).unwrap())
    }

    #[test]
    fn masks_partition_the_grid() {
        let g = grid(3.0, 40);
        let (z, i) = masks(&g);
        assert_eq!(z.indices().len(), 20);
        assert_eq!(i.indices().len(), 20);
        let mut all: Vec<usize> = z.indices().iter().chain(i.indices()).cloned().collect();
        all.sort();
        assert_eq!(all, (0..40).collect::<Vec<_>>());
        assert!(z.indices().iter().all(|&k| g.nodes()[k] < 1.0));
        assert_eq!(z.indicator().iter().sum::<f64>(), 20.0);
    }

    #[test]
    fn assemble_a_matches_family_and_is_persymmetric() {
        let g = grid(6.0, 120);
        let a = assemble_a(al(0.0), &g).unwrap();
        let (fa, fw) = rational_test_family(al(0.0), FamilyParams::MODEL);
        let w = assemble_wha(&fa, &fw, &g).unwrap();
        let e = a.entries();
        let diff = e.sub(w.entries()).unwrap();
        for i in 0..120 {
            for j in 0..120 {
                assert!(diff[(i, j)].abs() <= 1e-14 * e[(i, j)].abs());
            }
        }
        let u = inversion_conjugate(&a);
        assert!(u.entries().sub(e).unwrap().max_abs() <= 1e-13 * e.max_abs());
        assert!(u.is_full());

        let tiny = assemble_a(al(0.3), &grid(1.0, 2)).unwrap();
        let t = tiny.entries();
        assert!((t[(0, 0)] - t[(1, 1)]).abs() <= 1e-15 * t[(0, 0)]);
    }

    #[test]
    fn inversion_conjugate_is_an_involution_and_moves_l() {
        let g = grid(4.0, 60);
        let l = assemble_l(al(0.0), &g).unwrap();
        let twice = inversion_conjugate(&inversion_conjugate(&l));
        assert_eq!(twice.entries(), l.entries());
        assert_eq!(twice.row_indices(), l.row_indices());
        let once = inversion_conjugate(&l);
        assert!(once.entries().sub(l.entries()).unwrap().max_abs() > 0.1 * l.entries().max_abs());
    }

    #[test]
    fn block_similarity_is_exact() {
        for a in [-0.25, 0.0, 0.5, 1.0] {
            let g = grid(6.0, 200);
            let m = assemble_a(al(a), &g).unwrap();
            let (z, i) = masks(&g);
            let b0 = project(&m, &z, &z).unwrap();
            let bi = project(&m, &i, &i).unwrap();
            assert_eq!(b0.dim(), (100, 100));
            // the reversal of the infinity block is entrywise the zero block
            let flipped = inversion_conjugate(&bi);
            assert_eq!(flipped.row_indices(), b0.row_indices());
            let e0 = sym_eigenvalues(b0.entries()).unwrap();
            let ei = sym_eigenvalues(bi.entries()).unwrap();
            let scale = op_norm(m.entries()).unwrap();
            let d = e0.iter().zip(&ei).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
            assert!(d <= 1e-11 * scale, "alpha={a}: {d}");
        }
    }

    #[test]
    fn projection_of_zero_and_errors() {
        let g = grid(2.0, 20);
        let zero = OperatorMatrix::full(Arc::clone(&g), Matrix::zeros(20, 20), "0").unwrap();
        let (z, i) = masks(&g);
        let p = project(&zero, &z, &i).unwrap();
        assert_eq!(p.entries().max_abs(), 0.0);
        assert!(!p.is_diagonal_block());
        let other = grid(2.0, 40);
        let (oz, _) = masks(&other);
        assert!(matches!(project(&zero, &oz, &z), Err(Error::GridMismatch)));
        // projecting a block onto the other side fails
        assert!(project(&p, &i, &i).is_err());
        // and onto its own rows works
        assert_eq!(project(&p, &z, &i).unwrap().entries(), p.entries());
    }

    #[test]
    fn split_identity_entrywise() {
        for a in [-0.25, 0.0, 0.5, 1.0] {
            let g = grid(6.0, 120);
            let alpha = al(a);
            let p0 = assemble_model_hankel(ModelKernel::Phi0, alpha, &g).unwrap();
            let pi = assemble_model_hankel(ModelKernel::PhiInf, alpha, &g).unwrap();
            let am = assemble_a(alpha, &g).unwrap();
            let sum = p0.entries().add(pi.entries()).unwrap();
            let d = sum.sub(am.entries()).unwrap().max_abs();
            assert!(d <= 1e-12 * am.entries().max_abs(), "alpha={a}: {d}");
            // positive until Q(1+2α, s+t) underflows
            let t = g.nodes();
            for i in 0..t.len() {
                for j in 0..t.len() {
                    let v = p0.entries()[(i, j)];
                    assert!(v >= 0.0);
                    if t[i] + t[j] < 500.0 {
                        assert!(v > 0.0);
                    }
                }
            }
        }
    }

    #[test]
    fn pushforward_matches_projected_l() {
        for a in [0.0, 0.5, 1.0] {
            let alpha = al(a);
            let g = grid(8.0, 400);
            let l = assemble_l(alpha, &g).unwrap();
            for side in [Side::Infinity, Side::Zero] {
                let m = ProjectionMask::new(&g, side);
                let block = project(&l, &m, &m).unwrap();
                let moved = transform_block(&block, side).unwrap();
                let direct = log_pushforward_hankel(side, alpha, &g).unwrap();
                let scale = direct.entries().max_abs();
                let d = moved.entries().sub(direct.entries()).unwrap().max_abs();
                assert!(d <= 1e-13 * scale, "alpha={a} {side:?}: {d}");
                let e1 = sym_eigenvalues(block.entries()).unwrap();
                let e2 = sym_eigenvalues(direct.entries()).unwrap();
                let ed = e1.iter().zip(&e2).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
                assert!(ed <= 1e-8, "alpha={a} {side:?}: {ed}");
            }
            // the similarity is the identity on matching grids
            for side in [Side::Infinity, Side::Zero] {
                assert!(pushforward_similarity(&g, side).iter().all(|d| (d - 1.0).abs() < 1e-12));
            }
        }
    }

    #[test]
    fn pushforward_needs_gamma_normalisation() {
        // at alpha = 1 the factor 1/sqrt(Γ(3)) is not 1
        let alpha = al(1.0);
        let g = grid(6.0, 200);
        let l = assemble_l(alpha, &g).unwrap();
        let m = ProjectionMask::new(&g, Side::Infinity);
        let block = project(&l, &m, &m).unwrap();
        let direct = log_pushforward_hankel(Side::Infinity, alpha, &g).unwrap();
        let y = g.log_nodes()[g.upper_indices().start];
        let bare = g.step() * specfun::psi_plus(alpha, 2.0 * y);
        assert!((direct.entries()[(0, 0)] * 2f64.sqrt() - bare).abs() <= 1e-14 * bare);
        let top_block = *sym_eigenvalues(block.entries()).unwrap().last().unwrap();
        let top_direct = *sym_eigenvalues(direct.entries()).unwrap().last().unwrap();
        assert!((top_block - top_direct).abs() < 1e-10);
    }

    #[test]
    fn psi_blocks_decay_fast() {
        let g = grid(8.0, 400);
        for side in [Side::Zero, Side::Infinity] {
            let h = log_pushforward_hankel(side, al(0.0), &g).unwrap();
            let sv = singular_values(h.entries()).unwrap();
            assert!(sv.values[10] / sv.values[0] < 1e-6, "{side:?}");
        }
        let h = log_pushforward_hankel(Side::Infinity, al(0.0), &grid(1.0, 2)).unwrap();
        // step 1, y = 1/2: entry ψ₊(1) = e^{1/2 − e}
        let u: f64 = 1.0;
        let want = (0.5 * u - u.exp()).exp();
        assert!((h.entries()[(0, 0)] - want).abs() < 1e-14 * want);
    }

    #[test]
    fn l_block_singular_values_decay() {
        let g = grid(8.0, 400);
        let l = assemble_l(al(0.0), &g).unwrap();
        let (z, _) = masks(&g);
        let sv = singular_values(project(&l, &z, &z).unwrap().entries()).unwrap();
        assert!(sv.values[9] / sv.values[0] < 1e-6);
    }

    #[test]
    fn padded_composition_recovers_factorisation() {
        let alpha = al(0.5);
        let g = grid(6.0, 200);
        let a = assemble_a(alpha, &g).unwrap();
        let l = kernels::kernel_l(alpha);
        let l2 = compose_padded(&l, &l, &g, 16.0, Intermediate::All).unwrap();
        let rel = op_norm(&l2.entries().sub(a.entries()).unwrap()).unwrap() / op_norm(a.entries()).unwrap();
        assert!(rel < 1e-10, "{rel}");
        // through one half-line it is the phi0 model operator; the cut at u = 1
        // drops the rule to second order
        let half = compose_padded(&l, &l, &g, 16.0, Intermediate::Only(Side::Infinity)).unwrap();
        let p0 = assemble_model_hankel(ModelKernel::Phi0, alpha, &g).unwrap();
        let d = half.entries().sub(p0.entries()).unwrap().max_abs();
        assert!(d < 1e-4 * p0.entries().max_abs(), "{d}");
    }

    #[test]
    fn compose_checks_index_maps() {
        let g = grid(2.0, 20);
        let l = assemble_l(al(0.0), &g).unwrap();
        let (z, i) = masks(&g);
        let a = project(&l, &z, &i).unwrap();
        let b = project(&l, &i, &z).unwrap();
        let c = compose(&a, &b).unwrap();
        assert_eq!(c.dim(), (10, 10));
        assert!(compose(&a, &a).is_err());
        let full = compose_through_mask(&l, &i, &l).unwrap();
        let blk = project(&full, &z, &z).unwrap();
        assert!(blk.entries().sub(c.entries()).unwrap().max_abs() < 1e-15);
        assert_eq!(padded_grid(&g, 1.0).unwrap().len(), 30);
    }
}
