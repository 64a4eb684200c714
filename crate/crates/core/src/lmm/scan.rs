use std::time::{Duration, Instant};

use super::covariance::{build_covariance_solve, CovarianceInverse};
use super::genotype::{standardize_genotypes, standardize_phenotype, GenotypeMatrix, StandardizedGenotypes};
use super::gls::fit_columns;
use super::gsm::{compute_gsm, Gsm};
use super::pcgc::{pcgc_heritability, HeritabilityEstimate};
use super::wald::{chi2_1_neg_log10_sf, wald_test};
use crate::error::{Error, Result};
use crate::hodlr::HodlrConfig;
use crate::linalg::DenseMatrix;
use crate::par;

/// SNP columns pushed through `Σ⁻¹` per task. Fixed so that the arithmetic
/// does not depend on the worker count.
const APPLY_CHUNK: usize = 32;

#[derive(Clone, Debug, PartialEq)]
pub struct AssociationRecord {
    pub snp_id: String,
    /// Effect per standard deviation of the standardized genotype.
    pub beta: f64,
    pub stderr: f64,
    pub sigma_e2: f64,
    pub wald_chisq: f64,
    pub p_value: f64,
}

impl AssociationRecord {
    /// `−log₁₀ p`, computed from the statistic so it stays finite even when
    /// `p` underflows.
    pub fn neg_log10_p(&self) -> f64 {
        chi2_1_neg_log10_sf(self.wald_chisq)
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct PhaseTimings {
    pub standardize: Duration,
    pub gsm: Duration,
    pub heritability: Duration,
    pub inverse: Duration,
    pub association: Duration,
}

#[derive(Clone, Debug)]
pub struct ScanResult {
    /// One record per retained SNP, in input order.
    pub records: Vec<AssociationRecord>,
    /// Original indices of monomorphic SNPs that were not tested.
    pub dropped: Vec<usize>,
    pub heritability: HeritabilityEstimate,
    pub n: usize,
    pub timings: PhaseTimings,
}

impl ScanResult {
    /// p-values indexed by original SNP, with 1 for untested (monomorphic)
    /// SNPs.
    pub fn p_values_by_snp(&self) -> Vec<f64> {
        let total = self.records.len() + self.dropped.len();
        let mut out = vec![1.0; total];
        let mut dropped = self.dropped.iter().peekable();
        let mut records = self.records.iter();
        for (j, slot) in out.iter_mut().enumerate() {
            if dropped.peek() == Some(&&j) {
                dropped.next();
            } else if let Some(r) = records.next() {
                *slot = r.p_value;
            }
        }
        out
    }
}

/// The covariance-independent front half of a scan.
#[derive(Clone, Debug)]
pub struct PreparedScan {
    pub genotypes: StandardizedGenotypes,
    pub gsm: Gsm,
    pub heritability: HeritabilityEstimate,
    pub timings: PhaseTimings,
}

/// Standardizes genotypes, builds `K`, and estimates (or accepts) `h²`.
pub fn prepare_scan(
    g: &GenotypeMatrix,
    y: &[f64],
    covariates: Option<&DenseMatrix>,
    h2_override: Option<f64>,
) -> Result<PreparedScan> {
    let n = g.n();
    if y.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "{} phenotype values for {n} individuals",
            y.len()
        )));
    }
    let c = 1 + covariates.map_or(0, |m| m.cols());
    if let Some(cov) = covariates {
        if cov.rows() != n {
            return Err(Error::DimensionMismatch(format!(
                "{} covariate rows for {n} individuals",
                cov.rows()
            )));
        }
    }
    if n <= c + 2 {
        return Err(Error::InsufficientDof { n, params: c + 1 });
    }
    let mut timings = PhaseTimings::default();

    let t = Instant::now();
    let genotypes = standardize_genotypes(g)?;
    let y_std = standardize_phenotype(y)?;
    timings.standardize = t.elapsed();

    let t = Instant::now();
    let gsm = compute_gsm(&genotypes)?;
    timings.gsm = t.elapsed();

    let t = Instant::now();
    let heritability = match h2_override {
        Some(h2) => HeritabilityEstimate::from_h2(h2)?,
        None => pcgc_heritability(&y_std, &gsm)?,
    };
    timings.heritability = t.elapsed();

    Ok(PreparedScan {
        genotypes,
        gsm,
        heritability,
        timings,
    })
}

/// Full pipeline with the HODLR covariance solve.
pub fn scan(
    g: &GenotypeMatrix,
    y: &[f64],
    covariates: Option<&DenseMatrix>,
    cfg: &HodlrConfig,
    h2_override: Option<f64>,
) -> Result<ScanResult> {
    let prepared = prepare_scan(g, y, covariates, h2_override)?;
    let t = Instant::now();
    let solve = build_covariance_solve(&prepared.gsm, prepared.heritability.lambda, cfg)?;
    let inverse_time = t.elapsed();
    let mut result = associate(&prepared, g.snp_ids(), y, covariates, &solve)?;
    result.timings.inverse = inverse_time;
    Ok(result)
}

/// Per-SNP GLS, REML variance, and Wald test against a prepared scan and any
/// covariance inverse.
pub fn associate<C: CovarianceInverse + ?Sized>(
    prepared: &PreparedScan,
    snp_ids: &[String],
    y: &[f64],
    covariates: Option<&DenseMatrix>,
    solve: &C,
) -> Result<ScanResult> {
    let t = Instant::now();
    let x = &prepared.genotypes;
    let n = x.n();
    if solve.size() != n || y.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "covariance of size {} for {n} individuals",
            solve.size()
        )));
    }
    let n_cov = covariates.map_or(0, |m| m.cols());
    let q = n_cov + 2;

    // Shared columns: intercept, covariates, phenotype.
    let shared = DenseMatrix::from_fn(n, n_cov + 2, |i, j| match j {
        0 => 1.0,
        j if j <= n_cov => covariates.expect("n_cov > 0")[(i, j - 1)],
        _ => y[i],
    });
    let shared_applied = solve.apply(&shared);
    let fixed_cols: Vec<Vec<f64>> = (0..=n_cov).map(|j| shared.column(j)).collect();
    let fixed_scols: Vec<Vec<f64>> = (0..=n_cov).map(|j| shared_applied.column(j)).collect();
    let sy = shared_applied.column(n_cov + 1);

    let p = x.retained_count();
    let chunks = p.div_ceil(APPLY_CHUNK);
    let applied: Vec<Vec<Vec<f64>>> = par::map_range(chunks, |c| {
        let start = c * APPLY_CHUNK;
        let width = APPLY_CHUNK.min(p - start);
        let block = x.x.block(0, start, n, width);
        let out = solve.apply(&block);
        (0..width).map(|j| out.column(j)).collect()
    });
    let snp_scols: Vec<Vec<f64>> = applied.into_iter().flatten().collect();

    let records: Vec<Result<AssociationRecord>> = par::map_range(p, |j| {
        let snp_id = &snp_ids[x.retained[j]];
        let col = x.x.column(j);
        let mut cols: Vec<&[f64]> = fixed_cols.iter().map(Vec::as_slice).collect();
        let mut scols: Vec<&[f64]> = fixed_scols.iter().map(Vec::as_slice).collect();
        cols.push(&col);
        scols.push(&snp_scols[j]);
        test_one(&cols, &scols, y, &sy, n, q).map_err(|e| e.with_snp(snp_id)).map(
            |(beta, stderr, sigma_e2, wald_chisq, p_value)| AssociationRecord {
                snp_id: snp_id.clone(),
                beta,
                stderr,
                sigma_e2,
                wald_chisq,
                p_value,
            },
        )
    });
    let records = records.into_iter().collect::<Result<Vec<_>>>()?;

    let mut timings = prepared.timings;
    timings.association = t.elapsed();
    Ok(ScanResult {
        records,
        dropped: x.dropped_monomorphic.clone(),
        heritability: prepared.heritability,
        n,
        timings,
    })
}

fn test_one(
    cols: &[&[f64]],
    scols: &[&[f64]],
    y: &[f64],
    sy: &[f64],
    n: usize,
    q: usize,
) -> Result<(f64, f64, f64, f64, f64)> {
    let fit = fit_columns(cols, scols, sy)?;
    // Σ⁻¹ r = Σ⁻¹ y − Σ_a β_a Σ⁻¹ x_a by linearity.
    let mut quad = 0.0;
    for i in 0..n {
        let mut r = y[i];
        let mut sr = sy[i];
        for a in 0..q {
            r -= fit.beta[a] * cols[a][i];
            sr -= fit.beta[a] * scols[a][i];
        }
        quad += r * sr;
    }
    let sigma_e2 = quad / (n - q) as f64;
    let var = sigma_e2 * fit.inv_normal[(q - 1, q - 1)];
    let beta = fit.beta[q - 1];
    let (chisq, p) = wald_test(beta, var)?;
    Ok((beta, var.sqrt(), sigma_e2, chisq, p))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_fixture() -> (GenotypeMatrix, Vec<f64>) {
        let n = 12;
        let p = 3;
        let entries: Vec<u8> = (0..n * p).map(|k| ((k * 7 + k / 5) % 3) as u8).collect();
        let g = GenotypeMatrix::new(n, p, GenotypeMatrix::default_ids(p), entries).unwrap();
        let y: Vec<f64> = (0..n).map(|i| (i as f64 * 0.37).sin() + 0.1 * i as f64).collect();
        (g, y)
    }

    #[test]
    fn record_per_retained_snp_in_order() {
        let (g, y) = small_fixture();
        let res = scan(&g, &y, None, &HodlrConfig::new(1e-10, 4).unwrap(), Some(0.3)).unwrap();
        assert_eq!(res.records.len(), 3);
        let ids: Vec<_> = res.records.iter().map(|r| r.snp_id.as_str()).collect();
        assert_eq!(ids, ["snp_1", "snp_2", "snp_3"]);
        for r in &res.records {
            assert!(r.p_value > 0.0 && r.p_value <= 1.0);
            assert!((r.wald_chisq - (r.beta / r.stderr).powi(2)).abs() < 1e-10 * r.wald_chisq.max(1.0));
        }
    }

    #[test]
    fn dimension_errors() {
        let (g, y) = small_fixture();
        let cfg = HodlrConfig::default();
        assert!(matches!(scan(&g, &y[1..], None, &cfg, None), Err(Error::DimensionMismatch(_))));
        let cov = DenseMatrix::zeros(5, 1);
        assert!(matches!(scan(&g, &y, Some(&cov), &cfg, None), Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn collinear_covariate_reports_snp() {
        let (g, y) = small_fixture();
        let cov = DenseMatrix::from_fn(12, 1, |_, _| 2.0);
        match scan(&g, &y, Some(&cov), &HodlrConfig::new(1e-10, 4).unwrap(), Some(0.0)) {
            Err(Error::Snp { snp_id, source }) => {
                assert_eq!(snp_id, "snp_1");
                assert!(matches!(*source, Error::SingularDesign));
            }
            other => panic!("unexpected {other:?}"),
        }
    }
}
