//! Dense O(n³) reference implementations used to check the HODLR pipeline.

use faer::linalg::solvers::Solve;
use faer::{Mat, Side};

use crate::error::{Error, Result};
use crate::linalg::{cholesky_lower, dot, spd_inverse, DenseMatrix};
use crate::lmm::{associate, prepare_scan, CovarianceInverse, GenotypeMatrix, Gsm, ScanResult};
use crate::par;

/// Cholesky factorization of an SPD matrix with its log-determinant.
#[derive(Clone, Debug)]
pub struct DenseSolve {
    /// Lower-triangular `L` with `L Lᵀ = A`.
    pub chol: DenseMatrix,
    pub logdet: f64,
}

impl DenseSolve {
    pub fn new(m: &DenseMatrix) -> Result<Self> {
        require_square(m)?;
        let chol = cholesky_lower(m).ok_or(Error::FactorizationFailure)?;
        let logdet = 2.0 * chol.diagonal().iter().map(|d| d.ln()).sum::<f64>();
        if !logdet.is_finite() {
            return Err(Error::FactorizationFailure);
        }
        Ok(Self { chol, logdet })
    }
}

fn require_square(m: &DenseMatrix) -> Result<()> {
    if m.is_square() {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("expected a square matrix, got {}x{}", m.rows(), m.cols())))
    }
}

pub fn dense_spd_inverse(m: &DenseMatrix) -> Result<DenseMatrix> {
    require_square(m)?;
    spd_inverse(m).ok_or(Error::FactorizationFailure)
}

/// Explicit dense `Σ⁻¹`, usable anywhere the HODLR solve is.
#[derive(Clone, Debug)]
pub struct DenseCovarianceInverse {
    pub inv: DenseMatrix,
}

impl DenseCovarianceInverse {
    pub fn from_covariance(sigma: &DenseMatrix) -> Result<Self> {
        Ok(Self {
            inv: dense_spd_inverse(sigma)?,
        })
    }
}

impl CovarianceInverse for DenseCovarianceInverse {
    fn size(&self) -> usize {
        self.inv.rows()
    }

    fn apply(&self, x: &DenseMatrix) -> DenseMatrix {
        self.inv.matmul(x).expect("row count checked by caller")
    }
}

/// Exhaustive minimization of `Σ_{i≠j} (y_i y_j − h² K_ij)²` over
/// `h² ∈ {0, step, 2·step, …, 1}`.
pub fn pcgc_grid_search(y_std: &[f64], k: &Gsm, step: f64) -> Result<f64> {
    if y_std.len() != k.n() {
        return Err(Error::DimensionMismatch(format!(
            "phenotype length {} against GSM of size {}",
            y_std.len(),
            k.n()
        )));
    }
    if !(step > 0.0 && step <= 1.0) {
        return Err(Error::InvalidInput(format!("grid step {step} outside (0, 1]")));
    }
    let points = (1.0 / step).round() as usize;
    let objective: Vec<f64> = par::map_range(points + 1, |g| {
        let h2 = (g as f64 * step).min(1.0);
        pcgc_objective(y_std, k, h2)
    });
    let best = objective
        .iter()
        .enumerate()
        .fold((0, f64::INFINITY), |acc, (g, &v)| if v < acc.1 { (g, v) } else { acc })
        .0;
    Ok((best as f64 * step).min(1.0))
}

/// `Σ_{i≠j} (y_i y_j − h² K_ij)²`
pub fn pcgc_objective(y: &[f64], k: &Gsm, h2: f64) -> f64 {
    let n = y.len();
    let mut total = 0.0;
    for i in 0..n {
        let row = k.k.row(i);
        for j in 0..n {
            if i != j {
                let r = y[i] * y[j] - h2 * row[j];
                total += r * r;
            }
        }
    }
    total
}

/// The association pipeline with a dense Cholesky inverse in place of the
/// HODLR solve, at a given heritability.
pub fn dense_scan(
    g: &GenotypeMatrix,
    y: &[f64],
    covariates: Option<&DenseMatrix>,
    h2: f64,
) -> Result<ScanResult> {
    let prepared = prepare_scan(g, y, covariates, Some(h2))?;
    let sigma = prepared.gsm.covariance(prepared.heritability.lambda);
    let solve = DenseCovarianceInverse::from_covariance(&sigma)?;
    associate(&prepared, g.snp_ids(), y, covariates, &solve)
}

/// `KL(N(mu1, s1) ‖ N(mu2, s2))`.
pub fn gaussian_kl(mu1: &[f64], s1: &DenseMatrix, mu2: &[f64], s2: &DenseMatrix) -> Result<f64> {
    let n = mu1.len();
    if mu2.len() != n || s1.rows() != n || s2.rows() != n || !s1.is_square() || !s2.is_square() {
        return Err(Error::DimensionMismatch("Gaussian parameters disagree in size".into()));
    }
    let d1 = DenseSolve::new(s1)?;
    let d2 = DenseSolve::new(s2)?;
    let llt2 = s2.as_faer().llt(Side::Lower).map_err(|_| Error::FactorizationFailure)?;
    let s2inv_s1 = llt2.solve(s1.as_faer());
    let trace: f64 = (0..n).map(|i| s2inv_s1[(i, i)]).sum();
    let diff: Vec<f64> = mu2.iter().zip(mu1).map(|(a, b)| a - b).collect();
    let dm = Mat::<f64>::from_fn(n, 1, |i, _| diff[i]);
    let sol = llt2.solve(dm.as_ref());
    let maha = dot(&diff, &(0..n).map(|i| sol[(i, 0)]).collect::<Vec<_>>());
    Ok(0.5 * (trace + maha - n as f64 + d2.logdet - d1.logdet))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inverse_examples() {
        let d = dense_spd_inverse(&DenseMatrix::from_diagonal(&[4.0; 3])).unwrap();
        assert_eq!(d, DenseMatrix::from_diagonal(&[0.25; 3]));
        assert_eq!(dense_spd_inverse(&DenseMatrix::identity(5)).unwrap(), DenseMatrix::identity(5));
        let m = DenseMatrix::new(2, 2, vec![2., 1., 1., 2.]).unwrap();
        let inv = dense_spd_inverse(&m).unwrap();
        let expect = DenseMatrix::new(2, 2, vec![2. / 3., -1. / 3., -1. / 3., 2. / 3.]).unwrap();
        assert!(inv.max_abs_diff(&expect) < 1e-15);
        let bad = DenseMatrix::new(2, 2, vec![0., 1., 1., 0.]).unwrap();
        assert!(matches!(dense_spd_inverse(&bad), Err(Error::FactorizationFailure)));
    }

    #[test]
    fn dense_solve_logdet() {
        let m = DenseMatrix::new(2, 2, vec![4., 2., 2., 3.]).unwrap();
        let s = DenseSolve::new(&m).unwrap();
        assert!((s.logdet - 8f64.ln()).abs() < 1e-14);
        let rec = s.chol.matmul(&s.chol.transpose()).unwrap();
        assert!(rec.max_abs_diff(&m) < 1e-14);
    }

    #[test]
    fn kl_examples() {
        let i2 = DenseMatrix::identity(2);
        assert!(gaussian_kl(&[0.3, -1.0], &i2, &[0.3, -1.0], &i2).unwrap().abs() < 1e-10);
        let kl = gaussian_kl(&[0.0, 0.0], &i2, &[1.0, 2.0], &i2).unwrap();
        assert!((kl - 2.5).abs() < 1e-14);
        let two = DenseMatrix::from_diagonal(&[2.0, 2.0]);
        let kl = gaussian_kl(&[0.0, 0.0], &i2, &[0.0, 0.0], &two).unwrap();
        assert!((kl - (2f64.ln() - 0.5)).abs() < 1e-14);
        assert!((kl - 0.19314718).abs() < 1e-8);
        let bad = DenseMatrix::from_diagonal(&[1.0, -1.0]);
        assert!(gaussian_kl(&[0.0, 0.0], &bad, &[0.0, 0.0], &i2).is_err());
    }

    #[test]
    fn grid_search_endpoints() {
        let y = [1.0, -0.5, 2.0, 0.25];
        let exact = Gsm {
            k: DenseMatrix::from_fn(4, 4, |i, j| if i == j { 1.0 } else { y[i] * y[j] }),
        };
        assert_eq!(pcgc_grid_search(&y, &exact, 1e-4).unwrap(), 1.0);
        let alt = [1.0, -1.0, 1.0, -1.0];
        let zero = Gsm {
            k: DenseMatrix::from_fn(4, 4, |i, j| match i.abs_diff(j) {
                0 => 1.0,
                1 => 0.25,
                2 => 0.375,
                _ => 0.0,
            }),
        };
        assert_eq!(pcgc_grid_search(&alt, &zero, 1e-4).unwrap(), 0.0);
    }
}
