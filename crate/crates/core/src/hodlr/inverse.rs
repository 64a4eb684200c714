//! Recursive block inversion of symmetric positive-definite HODLR matrices.
//!
//! For `M = [[M11, U Vᵀ], [V Uᵀ, M22]]`:
//!
//! ```text
//! F   = M11⁻¹ U
//! S   = M22 − V (Uᵀ F) Vᵀ            Schur complement, a low-rank update
//! G   = S⁻¹ V
//! M⁻¹ = [[M11⁻¹ + F (Vᵀ G) Fᵀ,  −F Gᵀ],
//!        [−G Fᵀ,                 S⁻¹ ]]
//! ```
//!
//! Both diagonal-block corrections are symmetric low-rank updates of a HODLR
//! matrix, applied with per-block recompression, so the result never leaves
//! HODLR form.
//!
//! Truncating the Schur complement at `epsilon` is a backward error on `M`.
//! Truncating blocks of the inverse is a forward error, which the parent
//! level amplifies by up to `‖M‖²` when it forms `Uᵀ M11⁻¹ U`. Inverse-side
//! recompression therefore runs at `epsilon / ‖M‖₂²`, which turns it back
//! into a backward error of at most `epsilon`.

use faer::{Mat, MatRef};

use super::compress::{recompress, update_block};
use super::{build_hodlr, HodlrConfig, HodlrMatrix, HodlrNode};
use crate::error::{Error, Result};
use crate::linalg::{gemm, gemm_acc, spd_inverse, DenseMatrix};
use crate::par;

/// Approximate inverse of a dense symmetric positive-definite matrix, returned
/// in HODLR form.
pub fn hodlr_inverse(m: &DenseMatrix, cfg: &HodlrConfig) -> Result<HodlrMatrix> {
    let h = build_hodlr(m, cfg)?;
    h.inverse(cfg)
}

impl HodlrMatrix {
    /// Inverts an already compressed symmetric positive-definite matrix.
    pub fn inverse(&self, cfg: &HodlrConfig) -> Result<HodlrMatrix> {
        cfg.validate()?;
        let norm = self.spectral_norm_estimate();
        let inv_cfg = HodlrConfig {
            epsilon: cfg.epsilon / norm.powi(2).max(1.0),
            ..*cfg
        };
        invert(self, 0, cfg, &inv_cfg)
    }

    /// Upper estimate of `‖H‖₂` for symmetric `H` by power iteration, inflated
    /// by a safety factor because the iteration approaches from below.
    fn spectral_norm_estimate(&self) -> f64 {
        let n = self.size;
        let mut x = Mat::<f64>::from_fn(n, 1, |i, _| 1.0 + (i % 7) as f64 / 7.0);
        let mut lambda = 0.0;
        for _ in 0..POWER_STEPS {
            let scale = x.norm_l2();
            if scale == 0.0 || !scale.is_finite() {
                break;
            }
            x = Mat::from_fn(n, 1, |i, _| x[(i, 0)] / scale);
            let y = self.apply_faer(x.as_ref());
            lambda = y.norm_l2();
            x = y;
        }
        NORM_SAFETY * lambda
    }

    /// In-place `H ← H + W · C · Wᵀ` for a symmetric `k × k` core `C`.
    pub(crate) fn low_rank_update(
        &mut self,
        w: MatRef<'_, f64>,
        core: MatRef<'_, f64>,
        cfg: &HodlrConfig,
    ) -> Result<()> {
        debug_assert_eq!(w.nrows(), self.size);
        if w.ncols() == 0 {
            return Ok(());
        }
        match &mut self.node {
            HodlrNode::Leaf(d) => {
                let wc = gemm(w, core);
                gemm_acc(d.as_faer_mut(), wc.as_ref(), w.transpose(), 1.0);
                d.symmetrize();
                Ok(())
            }
            HodlrNode::Branch { a11, a22, b12, b21 } => {
                let n1 = a11.size;
                let (w1, w2) = w.split_at_row(n1);
                let (r1, (r2, r3)) = par::join(
                    || {
                        let w1c = gemm(w1, core);
                        update_block(b12, w1c.as_ref(), w2, cfg.epsilon, cfg.rank_cap)
                    },
                    || {
                        par::join(
                            || a11.low_rank_update(w1, core, cfg),
                            || a22.low_rank_update(w2, core, cfg),
                        )
                    },
                );
                r2?;
                r3?;
                *b12 = r1?;
                *b21 = b12.transposed();
                Ok(())
            }
        }
    }
}

const POWER_STEPS: usize = 16;
const NORM_SAFETY: f64 = 2.0;

/// `cfg` governs the Schur complement, `inv_cfg` the blocks of the inverse.
fn invert(h: &HodlrMatrix, offset: usize, cfg: &HodlrConfig, inv_cfg: &HodlrConfig) -> Result<HodlrMatrix> {
    match &h.node {
        HodlrNode::Leaf(d) => spd_inverse(d)
            .map(HodlrMatrix::leaf)
            .ok_or(Error::NumericalSingularity {
                offset,
                size: d.rows(),
            }),
        HodlrNode::Branch { a11, a22, b12, .. } => {
            let n1 = a11.size;
            let x11 = invert(a11, offset, cfg, inv_cfg)?;
            if b12.rank() == 0 {
                let x22 = invert(a22, offset + n1, cfg, inv_cfg)?;
                return Ok(HodlrMatrix::branch(x11, x22, b12.clone()));
            }
            let u = b12.u.as_faer();
            let v = b12.v.as_faer();

            let f = x11.apply_faer(u);
            let mut d = gemm(u.transpose(), f.as_ref());
            symmetrize_scaled(&mut d, -1.0);
            let mut schur = (**a22).clone();
            schur.low_rank_update(v, d.as_ref(), cfg)?;
            let x22 = invert(&schur, offset + n1, cfg, inv_cfg)?;

            let g = x22.apply_faer(v);
            let mut e = gemm(v.transpose(), g.as_ref());
            symmetrize_scaled(&mut e, 1.0);

            let neg_f = Mat::from_fn(f.nrows(), f.ncols(), |i, j| -f[(i, j)]);
            let (z12, z11) = par::join(
                || recompress(neg_f.as_ref(), g.as_ref(), inv_cfg.epsilon, inv_cfg.rank_cap),
                || {
                    let mut z11 = x11;
                    z11.low_rank_update(f.as_ref(), e.as_ref(), inv_cfg).map(|_| z11)
                },
            );
            Ok(HodlrMatrix::branch(z11?, x22, z12?))
        }
    }
}

fn symmetrize_scaled(m: &mut Mat<f64>, alpha: f64) {
    let k = m.nrows();
    for i in 0..k {
        m[(i, i)] *= alpha;
        for j in 0..i {
            let avg = 0.5 * alpha * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = avg;
            m[(j, i)] = avg;
        }
    }
}
