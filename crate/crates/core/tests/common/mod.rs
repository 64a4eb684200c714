//! Independent reference computations for the integration suites. Nothing in
//! here calls into the crate's numerical code; fixtures are built through the
//! public API only.
#![allow(dead_code)]

use hlmm_core::linalg::DenseMatrix;
use hlmm_core::lmm::{compute_gsm, standardize_genotypes, GenotypeMatrix, Gsm, StandardizedGenotypes};
use hlmm_core::simgen::{canonical_genotypes, simulate_genotypes, GenoSimConfig};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn to_na(m: &DenseMatrix) -> DMatrix<f64> {
    DMatrix::from_row_slice(m.rows(), m.cols(), m.as_slice())
}

pub fn from_na(m: &DMatrix<f64>) -> DenseMatrix {
    DenseMatrix::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
}

pub fn na_inverse(m: &DenseMatrix) -> DMatrix<f64> {
    to_na(m).cholesky().expect("SPD fixture").inverse()
}

pub fn mae(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).abs().sum() / (a.nrows() * a.ncols()) as f64
}

pub fn uniform_matrix(rows: usize, cols: usize, seed: u64) -> DenseMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    DenseMatrix::from_fn(rows, cols, |_, _| rng.random_range(-1.0..1.0))
}

pub fn uniform_vec(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
}

pub struct Fixture {
    pub g: GenotypeMatrix,
    pub x: StandardizedGenotypes,
    pub k: Gsm,
}

impl Fixture {
    pub fn new(g: GenotypeMatrix) -> Self {
        let x = standardize_genotypes(&g).unwrap();
        let k = compute_gsm(&x).unwrap();
        Self { g, x, k }
    }

    pub fn canonical() -> Self {
        Self::new(canonical_genotypes())
    }

    pub fn simulated(n: usize, p: usize, seed: u64) -> Self {
        Self::new(simulate_genotypes(&GenoSimConfig::new(n, p, seed)).unwrap())
    }

    pub fn sigma(&self, h2: f64) -> DenseMatrix {
        self.k.covariance(h2 / (1.0 - h2))
    }
}

/// Dense GLS reference: `(β, (XᵀΣ⁻¹X)⁻¹, σₑ²)` with `σₑ² = rᵀΣ⁻¹r / (n − q)`.
pub struct GlsOracle {
    pub beta: DVector<f64>,
    pub inv_normal: DMatrix<f64>,
    pub sigma_e2: f64,
}

pub fn gls_oracle(design: &DMatrix<f64>, sigma_inv: &DMatrix<f64>, y: &[f64]) -> GlsOracle {
    let y = DVector::from_column_slice(y);
    let xt_si = design.transpose() * sigma_inv;
    let normal = &xt_si * design;
    let inv_normal = normal.clone().try_inverse().expect("full-rank design");
    let beta = &inv_normal * (&xt_si * &y);
    let r = &y - design * &beta;
    let sigma_e2 = (r.transpose() * sigma_inv * &r)[(0, 0)] / (design.nrows() - design.ncols()) as f64;
    GlsOracle {
        beta,
        inv_normal,
        sigma_e2,
    }
}

/// Design `[1 | covariates | column]`.
pub fn design_with(column: &[f64], covariates: Option<&DenseMatrix>) -> DMatrix<f64> {
    let n = column.len();
    let c = covariates.map_or(0, |m| m.cols());
    DMatrix::from_fn(n, c + 2, |i, j| match j {
        0 => 1.0,
        j if j <= c => covariates.unwrap()[(i, j - 1)],
        _ => column[i],
    })
}

/// `erfc` by its Maclaurin series; cancellation limits it to small `z`.
pub fn erfc_series(z: f64) -> f64 {
    let mut sum = 0.0;
    let mut term = z;
    let mut n = 0.0;
    while term.abs() > 1e-18 {
        sum += term / (2.0 * n + 1.0);
        n += 1.0;
        term *= -z * z / n;
    }
    1.0 - 2.0 / std::f64::consts::PI.sqrt() * sum
}

/// `erfc(z) = 2/√π ∫_z^∞ e^{−t²} dt` by composite Simpson over `[z, z + 12]`,
/// with the integrand factored as `e^{−z²} e^{−(t²−z²)}` so large `z` keeps
/// full relative precision.
pub fn erfc_quadrature(z: f64) -> f64 {
    let m = 40_000;
    let h = 12.0 / m as f64;
    let f = |t: f64| (-(t - z) * (t + z)).exp();
    let mut s = f(z) + f(z + 12.0);
    for k in 1..m {
        s += if k % 2 == 1 { 4.0 } else { 2.0 } * f(z + k as f64 * h);
    }
    2.0 / std::f64::consts::PI.sqrt() * (-z * z).exp() * s * h / 3.0
}

pub fn erfc_oracle(z: f64) -> f64 {
    if z < 1.0 {
        erfc_series(z)
    } else {
        erfc_quadrature(z)
    }
}

pub fn chi2_sf_oracle(x: f64) -> f64 {
    erfc_oracle((x / 2.0).sqrt())
}

pub fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}
