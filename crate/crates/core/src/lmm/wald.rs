use libm::erfc;

use crate::error::{Error, Result};

/// Above this statistic the tail is evaluated in log space.
const LOG_DOMAIN_THRESHOLD: f64 = 200.0;
const CF_TERMS: usize = 80;

/// Wald statistic `β² / var(β)` and its chi-square(1) upper-tail p-value.
pub fn wald_test(beta: f64, var_beta: f64) -> Result<(f64, f64)> {
    if !(var_beta > 0.0 && var_beta.is_finite()) {
        return Err(Error::InvalidVariance(var_beta));
    }
    let chisq = beta * beta / var_beta;
    Ok((chisq, chi2_1_sf(chisq)))
}

/// `P(χ²₁ > x)`, never rounded down to zero.
pub fn chi2_1_sf(x: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    if x <= LOG_DOMAIN_THRESHOLD {
        erfc((0.5 * x).sqrt())
    } else {
        chi2_1_ln_sf(x).exp().max(f64::MIN_POSITIVE)
    }
}

/// `ln P(χ²₁ > x)`.
pub fn chi2_1_ln_sf(x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x <= LOG_DOMAIN_THRESHOLD {
        return erfc((0.5 * x).sqrt()).ln();
    }
    ln_erfc_large((0.5 * x).sqrt())
}

/// `−log₁₀ P(χ²₁ > x)`.
pub fn chi2_1_neg_log10_sf(x: f64) -> f64 {
    -chi2_1_ln_sf(x) / std::f64::consts::LN_10
}

/// `ln erfc(z)` for large `z` from the Laplace continued fraction
/// `erfc z = e^{−z²}/√π · 1/(z + ½/(z + 1/(z + 3⁄2/(z + …))))`.
fn ln_erfc_large(z: f64) -> f64 {
    let mut t = z;
    for k in (1..=CF_TERMS).rev() {
        t = z + (k as f64 * 0.5) / t;
    }
    -z * z - 0.5 * std::f64::consts::PI.ln() - t.ln()
}
