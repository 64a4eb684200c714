//! Hierarchical off-diagonal low-rank (HODLR) matrices.
//!
//! A symmetric `n × n` matrix is split into a `⌈n/2⌉ / ⌊n/2⌋` 2×2 block
//! layout. Diagonal blocks recurse until they are no larger than
//! `min_block`; off-diagonal blocks are stored as `u · vᵀ` with the rank
//! chosen per block so that the Frobenius error stays below `epsilon`.

mod compress;
mod inverse;

use std::fmt::Write as _;

use faer::{Mat, MatMut, MatRef};

pub use compress::low_rank_approx;
pub use inverse::hodlr_inverse;

use crate::error::{Error, Result};
use crate::linalg::{gemm, gemm_acc, DenseMatrix};
use crate::par;

/// Tunables for compression and inversion.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HodlrConfig {
    /// Per-block absolute Frobenius tolerance.
    pub epsilon: f64,
    /// Diagonal blocks at or below this size are stored densely.
    pub min_block: usize,
    /// Upper bound on any off-diagonal rank; `None` means `min(m, p)`.
    pub rank_cap: Option<usize>,
}

impl HodlrConfig {
    pub fn new(epsilon: f64, min_block: usize) -> Result<Self> {
        let cfg = Self {
            epsilon,
            min_block,
            rank_cap: None,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_rank_cap(mut self, cap: usize) -> Self {
        self.rank_cap = Some(cap);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "epsilon must be positive, got {}",
                self.epsilon
            )));
        }
        if self.min_block < 2 {
            return Err(Error::InvalidInput(format!(
                "min_block must be at least 2, got {}",
                self.min_block
            )));
        }
        Ok(())
    }
}

impl Default for HodlrConfig {
    fn default() -> Self {
        Self {
            epsilon: 1e-6,
            min_block: 64,
            rank_cap: None,
        }
    }
}

/// An `m × p` block stored as `u · vᵀ`.
///
/// Blocks inside a [`HodlrMatrix`] (`b12`) always have orthonormal `v`; `u`
/// has orthogonal columns unless the block is square at full rank.
#[derive(Clone, Debug, PartialEq)]
pub struct LowRankBlock {
    pub u: DenseMatrix,
    pub v: DenseMatrix,
    /// Frobenius residual recorded when the block was compressed.
    pub residual: f64,
}

impl LowRankBlock {
    pub(crate) fn zero(m: usize, p: usize, residual: f64) -> Self {
        Self {
            u: DenseMatrix::zeros(m, 0),
            v: DenseMatrix::zeros(p, 0),
            residual,
        }
    }

    pub(crate) fn from_factors(u: DenseMatrix, v: DenseMatrix, residual: f64) -> Self {
        debug_assert_eq!(u.cols(), v.cols());
        Self { u, v, residual }
    }

    pub fn rank(&self) -> usize {
        self.u.cols()
    }

    pub fn rows(&self) -> usize {
        self.u.rows()
    }

    pub fn cols(&self) -> usize {
        self.v.rows()
    }

    /// The factorization of the transposed block (`v · uᵀ`).
    pub fn transposed(&self) -> Self {
        Self {
            u: self.v.clone(),
            v: self.u.clone(),
            residual: self.residual,
        }
    }

    pub fn to_dense(&self) -> DenseMatrix {
        if self.rank() == 0 {
            return DenseMatrix::zeros(self.rows(), self.cols());
        }
        DenseMatrix::from_faer(gemm(self.u.as_faer(), self.v.as_faer().transpose()).as_ref())
    }

    /// `out += u · (vᵀ · x)`
    fn apply_acc(&self, x: MatRef<'_, f64>, out: MatMut<'_, f64>) {
        if self.rank() == 0 {
            return;
        }
        let t = gemm(self.v.as_faer().transpose(), x);
        gemm_acc(out, self.u.as_faer(), t.as_ref(), 1.0);
    }
}

#[derive(Clone, Debug)]
pub enum HodlrNode {
    Leaf(DenseMatrix),
    Branch {
        a11: Box<HodlrMatrix>,
        a22: Box<HodlrMatrix>,
        b12: LowRankBlock,
        b21: LowRankBlock,
    },
}

/// Recursive HODLR representation of a symmetric matrix.
#[derive(Clone, Debug)]
pub struct HodlrMatrix {
    size: usize,
    /// Height of this node: 0 for leaves, `1 + max(child levels)` otherwise.
    level: usize,
    node: HodlrNode,
}

/// Location and rank of one off-diagonal block, as reported by
/// [`HodlrMatrix::blocks`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BlockInfo {
    /// Distance from the root (root = 0).
    pub depth: usize,
    pub row: usize,
    pub col: usize,
    pub rows: usize,
    pub cols: usize,
    pub rank: usize,
    pub residual: f64,
}

impl HodlrMatrix {
    pub(crate) fn leaf(d: DenseMatrix) -> Self {
        Self {
            size: d.rows(),
            level: 0,
            node: HodlrNode::Leaf(d),
        }
    }

    pub(crate) fn branch(a11: HodlrMatrix, a22: HodlrMatrix, b12: LowRankBlock) -> Self {
        let b21 = b12.transposed();
        Self {
            size: a11.size + a22.size,
            level: 1 + a11.level.max(a22.level),
            node: HodlrNode::Branch {
                a11: Box::new(a11),
                a22: Box::new(a22),
                b12,
                b21,
            },
        }
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn level(&self) -> usize {
        self.level
    }

    /// Number of halvings between the root and the deepest leaf.
    pub fn depth(&self) -> usize {
        self.level
    }

    pub fn node(&self) -> &HodlrNode {
        &self.node
    }

    pub fn is_leaf(&self) -> bool {
        matches!(self.node, HodlrNode::Leaf(_))
    }

    pub fn max_rank(&self) -> usize {
        self.blocks().iter().map(|b| b.rank).max().unwrap_or(0)
    }

    /// Largest dense leaf dimension.
    pub fn max_leaf(&self) -> usize {
        match &self.node {
            HodlrNode::Leaf(d) => d.rows(),
            HodlrNode::Branch { a11, a22, .. } => a11.max_leaf().max(a22.max_leaf()),
        }
    }

    /// Upper off-diagonal blocks in pre-order.
    pub fn blocks(&self) -> Vec<BlockInfo> {
        let mut out = Vec::new();
        self.collect_blocks(0, 0, &mut out);
        out
    }

    fn collect_blocks(&self, depth: usize, offset: usize, out: &mut Vec<BlockInfo>) {
        if let HodlrNode::Branch { a11, a22, b12, .. } = &self.node {
            out.push(BlockInfo {
                depth,
                row: offset,
                col: offset + a11.size,
                rows: b12.rows(),
                cols: b12.cols(),
                rank: b12.rank(),
                residual: b12.residual,
            });
            a11.collect_blocks(depth + 1, offset, out);
            a22.collect_blocks(depth + 1, offset + a11.size, out);
        }
    }

    /// Line-oriented dump of the block tree for inspection.
    pub fn dump_tree(&self) -> String {
        let mut s = String::from("#depth\trow\tcol\trows\tcols\trank\tresidual\n");
        for b in self.blocks() {
            let _ = writeln!(
                s,
                "{}\t{}\t{}\t{}\t{}\t{}\t{:.3e}",
                b.depth, b.row, b.col, b.rows, b.cols, b.rank, b.residual
            );
        }
        s
    }

    /// Materializes the represented matrix.
    pub fn to_dense(&self) -> DenseMatrix {
        let mut out = DenseMatrix::zeros(self.size, self.size);
        self.write_dense(0, &mut out);
        out
    }

    fn write_dense(&self, offset: usize, out: &mut DenseMatrix) {
        match &self.node {
            HodlrNode::Leaf(d) => out.set_block(offset, offset, d),
            HodlrNode::Branch { a11, a22, b12, b21 } => {
                let n1 = a11.size;
                a11.write_dense(offset, out);
                a22.write_dense(offset + n1, out);
                out.set_block(offset, offset + n1, &b12.to_dense());
                out.set_block(offset + n1, offset, &b21.to_dense());
            }
        }
    }

    /// `H · x` without forming any off-diagonal block.
    pub fn matvec(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.size {
            return Err(Error::DimensionMismatch(format!(
                "vector of length {} against HODLR matrix of size {}",
                x.len(),
                self.size
            )));
        }
        let xm = MatRef::from_column_major_slice(x, x.len(), 1);
        let out = self.apply_faer(xm);
        Ok((0..self.size).map(|i| out[(i, 0)]).collect())
    }

    /// `H · X` for an `n × c` block of right-hand sides.
    pub fn apply(&self, x: &DenseMatrix) -> Result<DenseMatrix> {
        if x.rows() != self.size {
            return Err(Error::DimensionMismatch(format!(
                "{} rows against HODLR matrix of size {}",
                x.rows(),
                self.size
            )));
        }
        Ok(DenseMatrix::from_faer(self.apply_faer(x.as_faer()).as_ref()))
    }

    pub(crate) fn apply_faer(&self, x: MatRef<'_, f64>) -> Mat<f64> {
        let mut out = Mat::<f64>::zeros(self.size, x.ncols());
        self.apply_acc(x, out.as_mut());
        out
    }

    /// `out += H · x`
    fn apply_acc(&self, x: MatRef<'_, f64>, out: MatMut<'_, f64>) {
        match &self.node {
            HodlrNode::Leaf(d) => gemm_acc(out, d.as_faer(), x, 1.0),
            HodlrNode::Branch { a11, a22, b12, b21 } => {
                let n1 = a11.size;
                let (x1, x2) = x.split_at_row(n1);
                let (mut o1, mut o2) = out.split_at_row_mut(n1);
                par::join(
                    || {
                        a11.apply_acc(x1, o1.as_mut());
                        b12.apply_acc(x2, o1.as_mut());
                    },
                    || {
                        a22.apply_acc(x2, o2.as_mut());
                        b21.apply_acc(x1, o2.as_mut());
                    },
                );
            }
        }
    }
}

/// Compresses a symmetric dense matrix into HODLR form.
pub fn build_hodlr(m: &DenseMatrix, cfg: &HodlrConfig) -> Result<HodlrMatrix> {
    cfg.validate()?;
    check_symmetric_source(m)?;
    build_rec(m, 0, m.rows(), cfg)
}

pub(crate) fn check_symmetric_source(m: &DenseMatrix) -> Result<()> {
    if !m.is_square() {
        return Err(Error::InvalidInput(format!(
            "expected a square matrix, got {}x{}",
            m.rows(),
            m.cols()
        )));
    }
    // One sweep for finiteness and scale.
    let (finite, max_abs) =
        m.as_slice().iter().fold((true, 0.0f64), |(f, a), v| (f & v.is_finite(), a.max(v.abs())));
    if !finite {
        return Err(Error::InvalidInput("matrix contains non-finite entries".into()));
    }
    if !m.is_symmetric(1e-12 * max_abs.max(1.0)) {
        return Err(Error::InvalidInput("matrix is not symmetric".into()));
    }
    Ok(())
}

fn build_rec(m: &DenseMatrix, offset: usize, n: usize, cfg: &HodlrConfig) -> Result<HodlrMatrix> {
    if n <= cfg.min_block {
        return Ok(HodlrMatrix::leaf(m.block(offset, offset, n, n)));
    }
    let n1 = n.div_ceil(2);
    let n2 = n - n1;
    let ((a11, a22), b12) = par::join(
        || {
            par::join(
                || build_rec(m, offset, n1, cfg),
                || build_rec(m, offset + n1, n2, cfg),
            )
        },
        || {
            let view = m.as_faer().submatrix(offset, offset + n1, n1, n2);
            compress::compress_view(view, cfg.epsilon, cfg.rank_cap)
        },
    );
    Ok(HodlrMatrix::branch(a11?, a22?, b12?))
}

pub fn to_dense(h: &HodlrMatrix) -> DenseMatrix {
    h.to_dense()
}

pub fn hodlr_matvec(h: &HodlrMatrix, x: &[f64]) -> Result<Vec<f64>> {
    h.matvec(x)
}

/// `‖to_dense(h) − m‖_F`
pub fn frobenius_error(h: &HodlrMatrix, m: &DenseMatrix) -> Result<f64> {
    if m.rows() != h.size() || m.cols() != h.size() {
        return Err(Error::DimensionMismatch(format!(
            "HODLR size {} against {}x{} matrix",
            h.size(),
            m.rows(),
            m.cols()
        )));
    }
    let d = h.to_dense();
    Ok(d
        .as_slice()
        .iter()
        .zip(m.as_slice())
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(eps: f64, s: usize) -> HodlrConfig {
        HodlrConfig::new(eps, s).unwrap()
    }

    #[test]
    fn config_validation() {
        assert!(HodlrConfig::new(0.0, 4).is_err());
        assert!(HodlrConfig::new(1e-6, 1).is_err());
        assert!(HodlrConfig::new(f64::NAN, 4).is_err());
        assert!(HodlrConfig::new(1e-6, 2).is_ok());
    }

    #[test]
    fn identity_has_rank_zero_offdiagonals() {
        let h = build_hodlr(&DenseMatrix::identity(8), &cfg(1e-8, 2)).unwrap();
        assert_eq!(h.depth(), 2);
        assert!(h.blocks().iter().all(|b| b.rank == 0));
        assert_eq!(h.blocks().len(), 3);
        assert_eq!(h.to_dense(), DenseMatrix::identity(8));
        fn leaves_are_identity(h: &HodlrMatrix) {
            match h.node() {
                HodlrNode::Leaf(d) => assert_eq!(d, &DenseMatrix::identity(2)),
                HodlrNode::Branch { a11, a22, .. } => {
                    leaves_are_identity(a11);
                    leaves_are_identity(a22);
                }
            }
        }
        leaves_are_identity(&h);
    }

    #[test]
    fn leaf_passthrough() {
        let d = DenseMatrix::new(3, 3, vec![2., 1., 0., 1., 2., 1., 0., 1., 2.]).unwrap();
        let h = build_hodlr(&d, &cfg(1e-8, 4)).unwrap();
        assert!(h.is_leaf());
        assert_eq!(h.to_dense(), d);
    }

    #[test]
    fn odd_sizes_split_ceil_floor() {
        let m = DenseMatrix::identity(7);
        let h = build_hodlr(&m, &cfg(1e-8, 2)).unwrap();
        match h.node() {
            HodlrNode::Branch { a11, a22, .. } => {
                assert_eq!(a11.size(), 4);
                assert_eq!(a22.size(), 3);
            }
            _ => panic!("expected a branch"),
        }
        assert!(h.max_leaf() <= 2);
        assert_eq!(h.to_dense(), m);
    }

    #[test]
    fn rejects_bad_sources() {
        let ns = DenseMatrix::zeros(3, 4);
        assert!(matches!(build_hodlr(&ns, &cfg(1e-6, 2)), Err(Error::InvalidInput(_))));
        let mut asym = DenseMatrix::identity(4);
        asym[(0, 3)] = 1.0;
        assert!(matches!(build_hodlr(&asym, &cfg(1e-6, 2)), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn matvec_identity_and_zero() {
        let h = build_hodlr(&DenseMatrix::identity(10), &cfg(1e-8, 2)).unwrap();
        let x: Vec<f64> = (0..10).map(|i| i as f64 - 3.5).collect();
        assert_eq!(h.matvec(&x).unwrap(), x);
        assert_eq!(h.matvec(&[0.0; 10]).unwrap(), vec![0.0; 10]);
        assert!(matches!(h.matvec(&[1.0; 9]), Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn frobenius_error_basics() {
        let m = DenseMatrix::from_fn(6, 6, |i, j| 1.0 / (1.0 + i as f64 + j as f64));
        let h = build_hodlr(&m, &cfg(1e-12, 2)).unwrap();
        assert!(frobenius_error(&h, &m).unwrap() < 1e-12);

        let zero = build_hodlr(&DenseMatrix::zeros(4, 4), &cfg(1e-8, 2)).unwrap();
        let mut single = DenseMatrix::zeros(4, 4);
        single[(1, 3)] = -2.5;
        assert_eq!(frobenius_error(&zero, &single).unwrap(), 2.5);
        assert!(frobenius_error(&zero, &DenseMatrix::zeros(3, 3)).is_err());
    }

    #[test]
    fn dump_lists_every_block() {
        let h = build_hodlr(&DenseMatrix::identity(16), &cfg(1e-8, 4)).unwrap();
        let dump = h.dump_tree();
        assert_eq!(dump.lines().count(), 1 + 3);
        assert!(dump.lines().nth(1).unwrap().starts_with("0\t0\t8\t8\t8\t0"));
    }
}
