//! Synthetic data for accuracy and power studies: bi-allelic genotypes,
//! spike-and-slab phenotypes, and the MAE / AUC metrics used to score them.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;
use crate::lmm::{GenotypeMatrix, StandardizedGenotypes};

/// After this many empty causal draws one SNP is forced causal.
pub const MAX_CAUSAL_RESAMPLES: usize = 1000;

/// Seed of the canonical 64 × 100 fixture used throughout the test suites.
pub const CANONICAL_SEED: u64 = 20_220_905;
pub const CANONICAL_N: usize = 64;
pub const CANONICAL_P: usize = 100;

/// The canonical genotype fixture: 64 individuals, 100 SNPs, allele
/// probability 0.5, seeded with [`CANONICAL_SEED`].
pub fn canonical_genotypes() -> GenotypeMatrix {
    simulate_genotypes(&GenoSimConfig::new(CANONICAL_N, CANONICAL_P, CANONICAL_SEED))
        .expect("canonical configuration is valid")
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GenoSimConfig {
    pub n: usize,
    pub p: usize,
    /// Per-allele probability; 0.5 gives heterozygosity 0.5.
    pub allele_prob: f64,
    pub seed: u64,
}

impl GenoSimConfig {
    pub fn new(n: usize, p: usize, seed: u64) -> Self {
        Self {
            n,
            p,
            allele_prob: 0.5,
            seed,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.n < 2 || self.p < 1 {
            return Err(Error::InvalidInput(format!(
                "need n >= 2 and p >= 1, got n = {}, p = {}",
                self.n, self.p
            )));
        }
        if !(0.0..=1.0).contains(&self.allele_prob) {
            return Err(Error::InvalidInput(format!(
                "allele probability {} outside [0, 1]",
                self.allele_prob
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhenoSimConfig {
    pub h2: f64,
    /// Probability that a SNP carries a nonzero effect.
    pub pi2: f64,
    pub seed: u64,
}

impl PhenoSimConfig {
    pub fn new(h2: f64, seed: u64) -> Self {
        Self {
            h2,
            pi2: 0.05,
            seed,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimTruth {
    /// Original SNP indices with nonzero effects, ascending.
    pub causal_indices: Vec<usize>,
    /// Effect per SNP (zero off the causal set), indexed by original SNP.
    pub effects: Vec<f64>,
    pub genetic_variance: f64,
    pub noise_variance: f64,
    /// Number of extra effect draws needed to get at least one causal SNP.
    pub resample_attempts: usize,
    /// True when the resampling budget ran out and one SNP was forced causal.
    pub forced_causal: bool,
}

/// Each genotype is the sum of two independent Bernoulli(`allele_prob`)
/// alleles.
pub fn simulate_genotypes(cfg: &GenoSimConfig) -> Result<GenotypeMatrix> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let q = cfg.allele_prob;
    let entries: Vec<u8> = (0..cfg.n * cfg.p)
        .map(|_| rng.random_bool(q) as u8 + rng.random_bool(q) as u8)
        .collect();
    GenotypeMatrix::new(cfg.n, cfg.p, GenotypeMatrix::default_ids(cfg.p), entries)
}

/// `y = W u + ε` with `u_j ~ (1 − π₂) δ₀ + π₂ N(0, 1)` over the standardized
/// columns and `ε ~ N(0, var(Wu) / λ)`, `λ = h² / (1 − h²)`.
pub fn simulate_phenotype(
    x: &StandardizedGenotypes,
    cfg: &PhenoSimConfig,
) -> Result<(Vec<f64>, SimTruth)> {
    if !(cfg.h2 > 0.0 && cfg.h2 < 1.0) {
        return Err(Error::InvalidInput(format!("h2 must lie in (0, 1), got {}", cfg.h2)));
    }
    if !(0.0..=1.0).contains(&cfg.pi2) {
        return Err(Error::InvalidInput(format!("pi2 must lie in [0, 1], got {}", cfg.pi2)));
    }
    let (n, p) = (x.n(), x.retained_count());
    if n == 0 || p == 0 {
        return Err(Error::InvalidInput("empty genotype matrix".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

    let mut u = vec![0.0; p];
    let mut attempts = 0;
    let mut forced = false;
    loop {
        for uj in u.iter_mut() {
            *uj = if rng.random_bool(cfg.pi2) {
                rng.sample(StandardNormal)
            } else {
                0.0
            };
        }
        if u.iter().any(|&v| v != 0.0) {
            break;
        }
        if attempts == MAX_CAUSAL_RESAMPLES {
            let j = rng.random_range(0..p);
            u[j] = rng.sample(StandardNormal);
            forced = true;
            break;
        }
        attempts += 1;
    }

    let genetic: Vec<f64> = (0..n)
        .map(|i| {
            let row = x.x.row(i);
            row.iter().zip(&u).filter(|(_, &b)| b != 0.0).map(|(a, b)| a * b).sum()
        })
        .collect();
    let mean = genetic.iter().sum::<f64>() / n as f64;
    let genetic_variance =
        genetic.iter().map(|g| (g - mean) * (g - mean)).sum::<f64>() / (n.max(2) - 1) as f64;
    let lambda = cfg.h2 / (1.0 - cfg.h2);
    let noise_variance = genetic_variance / lambda;
    let sd = noise_variance.sqrt();
    let y = genetic
        .iter()
        .map(|g| g + sd * rng.sample::<f64, _>(StandardNormal))
        .collect();

    let mut effects = vec![0.0; x.total_snps];
    let mut causal = Vec::new();
    for (j, &uj) in u.iter().enumerate() {
        if uj != 0.0 {
            effects[x.retained[j]] = uj;
            causal.push(x.retained[j]);
        }
    }
    Ok((
        y,
        SimTruth {
            causal_indices: causal,
            effects,
            genetic_variance,
            noise_variance,
            resample_attempts: attempts,
            forced_causal: forced,
        },
    ))
}

pub fn mean_absolute_error(a: &DenseMatrix, b: &DenseMatrix) -> Result<f64> {
    if a.rows() != b.rows() || a.cols() != b.cols() {
        return Err(Error::DimensionMismatch(format!(
            "{}x{} against {}x{}",
            a.rows(),
            a.cols(),
            b.rows(),
            b.cols()
        )));
    }
    let len = a.as_slice().len();
    if len == 0 {
        return Ok(0.0);
    }
    let total: f64 = a.as_slice().iter().zip(b.as_slice()).map(|(x, y)| (x - y).abs()).sum();
    Ok(total / len as f64)
}

/// Area under the ROC curve traced by sweeping the significance level over
/// `{0, Δα, 2Δα, …, 1}` and calling `p < α` a hit.
pub fn auc_power(p_values: &[f64], truth: &SimTruth, delta_alpha: f64) -> Result<f64> {
    if !(delta_alpha > 0.0 && delta_alpha <= 1.0) {
        return Err(Error::InvalidInput(format!("delta_alpha {delta_alpha} outside (0, 1]")));
    }
    let total = p_values.len();
    let mut is_causal = vec![false; total];
    for &j in &truth.causal_indices {
        if j >= total {
            return Err(Error::InvalidInput(format!(
                "causal index {j} out of range for {total} p-values"
            )));
        }
        is_causal[j] = true;
    }
    let mut pos: Vec<f64> = Vec::new();
    let mut neg: Vec<f64> = Vec::new();
    for (&p, &c) in p_values.iter().zip(&is_causal) {
        if p.is_nan() {
            return Err(Error::InvalidInput("NaN p-value".into()));
        }
        if c {
            pos.push(p)
        } else {
            neg.push(p)
        }
    }
    if pos.is_empty() {
        return Err(Error::UndefinedAuc("no causal SNPs"));
    }
    if neg.is_empty() {
        return Err(Error::UndefinedAuc("no non-causal SNPs"));
    }
    pos.sort_by(f64::total_cmp);
    neg.sort_by(f64::total_cmp);
    let below = |v: &[f64], a: f64| v.partition_point(|&p| p < a) as f64;

    let steps = (1.0 / delta_alpha).round() as usize;
    let mut curve = Vec::with_capacity(steps + 3);
    curve.push((0.0, 0.0));
    for i in 0..=steps {
        let alpha = (i as f64 * delta_alpha).min(1.0);
        curve.push((
            below(&neg, alpha) / neg.len() as f64,
            below(&pos, alpha) / pos.len() as f64,
        ));
    }
    curve.push((1.0, 1.0));
    curve.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    let area = curve
        .windows(2)
        .map(|w| (w[1].0 - w[0].0) * 0.5 * (w[0].1 + w[1].1))
        .sum::<f64>();
    Ok(area.clamp(0.0, 1.0))
}
