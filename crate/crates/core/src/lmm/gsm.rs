use super::genotype::StandardizedGenotypes;
use crate::error::{Error, Result};
use crate::linalg::{gemm, DenseMatrix};

/// Genetic similarity matrix `K = X Xᵀ / n`.
#[derive(Clone, Debug)]
pub struct Gsm {
    pub k: DenseMatrix,
}

impl Gsm {
    pub fn n(&self) -> usize {
        self.k.rows()
    }

    /// `λ K + I`
    pub fn covariance(&self, lambda: f64) -> DenseMatrix {
        let mut s = self.k.clone();
        s.scale_in_place(lambda);
        s.add_to_diagonal(1.0);
        s
    }
}

pub fn compute_gsm(x: &StandardizedGenotypes) -> Result<Gsm> {
    let n = x.n();
    if n == 0 || x.retained_count() == 0 {
        return Err(Error::InvalidInput("GSM needs a nonempty genotype matrix".into()));
    }
    let xf = x.x.as_faer();
    let prod = gemm(xf, xf.transpose());
    let inv_n = 1.0 / n as f64;
    let mut k = DenseMatrix::from_fn(n, n, |i, j| prod[(i, j)] * inv_n);
    k.symmetrize();
    Ok(Gsm { k })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn wrap(x: DenseMatrix) -> StandardizedGenotypes {
        let p = x.cols();
        StandardizedGenotypes {
            x,
            col_means: vec![0.0; p],
            col_sds: vec![1.0; p],
            retained: (0..p).collect(),
            dropped_monomorphic: vec![],
            total_snps: p,
        }
    }

    #[test]
    fn zero_genotypes_give_zero_gsm() {
        let k = compute_gsm(&wrap(DenseMatrix::zeros(5, 3))).unwrap();
        assert_eq!(k.k, DenseMatrix::zeros(5, 5));
    }

    #[test]
    fn single_snp_is_outer_product() {
        let x = [1.0, -2.0, 0.5, 0.5];
        let k = compute_gsm(&wrap(DenseMatrix::column_vector(&x))).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                assert!((k.k[(i, j)] - x[i] * x[j] / 4.0).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn covariance_adds_identity() {
        let k = compute_gsm(&wrap(DenseMatrix::column_vector(&[1.0, -1.0]))).unwrap();
        let s = k.covariance(2.0);
        assert_eq!(s.as_slice(), &[2.0, -1.0, -1.0, 2.0]);
    }
}
