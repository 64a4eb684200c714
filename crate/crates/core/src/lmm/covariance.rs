use super::gsm::Gsm;
use crate::error::{Error, Result};
use crate::hodlr::{hodlr_inverse, HodlrConfig, HodlrMatrix};
use crate::linalg::DenseMatrix;

/// Anything that can apply `Σ⁻¹` to a block of vectors. The association code
/// is written against this so the HODLR solve and the dense reference run
/// the exact same pipeline.
pub trait CovarianceInverse: Sync {
    fn size(&self) -> usize;

    /// `Σ⁻¹ · x` for an `n × c` block.
    fn apply(&self, x: &DenseMatrix) -> DenseMatrix;
}

/// HODLR form of `(λ K + I)⁻¹`, built once and shared read-only.
#[derive(Clone, Debug)]
pub struct CovarianceSolve {
    pub sigma_inv: HodlrMatrix,
    pub lambda_used: f64,
    pub epsilon_used: f64,
}

impl CovarianceInverse for CovarianceSolve {
    fn size(&self) -> usize {
        self.sigma_inv.size()
    }

    fn apply(&self, x: &DenseMatrix) -> DenseMatrix {
        self.sigma_inv
            .apply(x)
            .expect("caller checked the row count against the covariance size")
    }
}

pub fn build_covariance_solve(k: &Gsm, lam: f64, cfg: &HodlrConfig) -> Result<CovarianceSolve> {
    if !(lam >= 0.0 && lam.is_finite()) {
        return Err(Error::InvalidInput(format!("lambda must be finite and >= 0, got {lam}")));
    }
    let sigma = k.covariance(lam);
    let sigma_inv = hodlr_inverse(&sigma, cfg)?;
    Ok(CovarianceSolve {
        sigma_inv,
        lambda_used: lam,
        epsilon_used: cfg.epsilon,
    })
}
