//! Timing helpers for the HODLR-versus-dense scaling study.

use std::time::Instant;

use crate::error::{Error, Result};
use crate::hodlr::{hodlr_inverse, HodlrConfig};
use crate::linalg::DenseMatrix;
use crate::lmm::{compute_gsm, standardize_genotypes, HeritabilityEstimate};
use crate::oracle::dense_spd_inverse;
use crate::simgen::{simulate_genotypes, GenoSimConfig};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    Hodlr,
    Dense,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Hodlr => "hodlr",
            Method::Dense => "dense",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Timing {
    pub method: Method,
    pub n: usize,
    pub median_seconds: f64,
}

/// `Σ = λK + I` for `n` simulated individuals over `p` SNPs.
pub fn simulated_covariance(n: usize, p: usize, h2: f64, seed: u64) -> Result<DenseMatrix> {
    let g = simulate_genotypes(&GenoSimConfig::new(n, p, seed))?;
    let x = standardize_genotypes(&g)?;
    let lambda = HeritabilityEstimate::from_h2(h2)?.lambda;
    Ok(compute_gsm(&x)?.covariance(lambda))
}

/// Median wall time of `repeats` runs of `f`.
pub fn median_seconds<F: FnMut() -> Result<()>>(repeats: usize, mut f: F) -> Result<f64> {
    let mut times = Vec::with_capacity(repeats.max(1));
    for _ in 0..repeats.max(1) {
        let t = Instant::now();
        f()?;
        times.push(t.elapsed().as_secs_f64());
    }
    times.sort_by(f64::total_cmp);
    let m = times.len();
    Ok(if m % 2 == 1 {
        times[m / 2]
    } else {
        0.5 * (times[m / 2 - 1] + times[m / 2])
    })
}

/// Times both inverses on simulated covariances for every `n` in `grid`.
pub fn run_scaling(
    grid: &[usize],
    p: usize,
    repeats: usize,
    cfg: &HodlrConfig,
    seed: u64,
) -> Result<Vec<Timing>> {
    let mut out = Vec::with_capacity(2 * grid.len());
    for &n in grid {
        let sigma = simulated_covariance(n, p, 0.5, seed)?;
        let hodlr = median_seconds(repeats, || hodlr_inverse(&sigma, cfg).map(drop))?;
        let dense = median_seconds(repeats, || dense_spd_inverse(&sigma).map(drop))?;
        out.push(Timing {
            method: Method::Hodlr,
            n,
            median_seconds: hodlr,
        });
        out.push(Timing {
            method: Method::Dense,
            n,
            median_seconds: dense,
        });
    }
    Ok(out)
}

/// Least-squares slope of `ln t` against `ln n`.
pub fn loglog_slope(points: &[(usize, f64)]) -> Result<f64> {
    if points.len() < 2 || points.iter().any(|&(n, t)| n == 0 || !(t > 0.0)) {
        return Err(Error::InvalidInput(
            "slope needs at least two points with positive n and time".into(),
        ));
    }
    let xs: Vec<f64> = points.iter().map(|&(n, _)| (n as f64).ln()).collect();
    let ys: Vec<f64> = points.iter().map(|&(_, t)| t.ln()).collect();
    let m = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / m;
    let my = ys.iter().sum::<f64>() / m;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidInput("slope needs at least two distinct n".into()));
    }
    Ok(sxy / sxx)
}

/// Slope per method from a timing table.
pub fn slope_for(timings: &[Timing], method: Method) -> Result<f64> {
    let pts: Vec<(usize, f64)> = timings
        .iter()
        .filter(|t| t.method == method)
        .map(|t| (t.n, t.median_seconds))
        .collect();
    loglog_slope(&pts)
}
