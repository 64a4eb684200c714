use super::gsm::Gsm;
use crate::error::{Error, Result};

/// Upper clip for heritability; keeps `λ = h²/(1−h²)` finite.
pub const H2_MAX: f64 = 0.99;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HeritabilityEstimate {
    pub h2: f64,
    pub lambda: f64,
}

impl HeritabilityEstimate {
    /// Any `h² ∈ [0, 1)`; used for overrides, so it is not clipped.
    pub fn from_h2(h2: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&h2) {
            return Err(Error::InvalidInput(format!("heritability must lie in [0, 1), got {h2}")));
        }
        Ok(Self {
            h2,
            lambda: h2 / (1.0 - h2),
        })
    }
}

/// Off-diagonal sums `(Σ_{i≠j} y_i y_j K_ij, Σ_{i≠j} K_ij²)`.
fn offdiag_moments(y: &[f64], k: &Gsm) -> (f64, f64) {
    let n = y.len();
    let mut num = 0.0;
    let mut den = 0.0;
    for i in 0..n {
        let row = k.k.row(i);
        for j in 0..n {
            if i != j {
                num += y[i] * y[j] * row[j];
                den += row[j] * row[j];
            }
        }
    }
    (num, den)
}

/// Moment estimator of heritability from off-diagonal phenotype products
/// regressed on off-diagonal GSM entries, clipped to `[0, H2_MAX]`.
pub fn pcgc_heritability(y_std: &[f64], k: &Gsm) -> Result<HeritabilityEstimate> {
    if y_std.len() != k.n() {
        return Err(Error::DimensionMismatch(format!(
            "phenotype length {} against GSM of size {}",
            y_std.len(),
            k.n()
        )));
    }
    let (num, den) = offdiag_moments(y_std, k);
    if den == 0.0 {
        return Err(Error::UnidentifiableHeritability);
    }
    let h2 = (num / den).clamp(0.0, H2_MAX);
    Ok(HeritabilityEstimate {
        h2,
        lambda: h2 / (1.0 - h2),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::DenseMatrix;

    #[test]
    fn exact_fit_clips_to_max() {
        let y = [1.0, -0.5, 2.0, 0.25];
        let k = Gsm {
            k: DenseMatrix::from_fn(4, 4, |i, j| if i == j { 1.0 } else { y[i] * y[j] }),
        };
        let est = pcgc_heritability(&y, &k).unwrap();
        assert_eq!(est.h2, H2_MAX);
        assert_eq!(est.lambda, H2_MAX / (1.0 - H2_MAX));
    }

    #[test]
    fn orthogonal_numerator_gives_zero() {
        // distance-1 pairs contribute 6 × (−1) × 0.25, distance-2 pairs 4 × 0.375
        let y = [1.0, -1.0, 1.0, -1.0];
        let k = Gsm {
            k: DenseMatrix::from_fn(4, 4, |i, j| match i.abs_diff(j) {
                0 => 1.0,
                1 => 0.25,
                2 => 0.375,
                _ => 0.0,
            }),
        };
        let est = pcgc_heritability(&y, &k).unwrap();
        assert_eq!(est.h2, 0.0);
        assert_eq!(est.lambda, 0.0);
    }

    #[test]
    fn diagonal_gsm_is_unidentifiable() {
        let k = Gsm {
            k: DenseMatrix::identity(3),
        };
        assert!(matches!(
            pcgc_heritability(&[1.0, 0.0, -1.0], &k),
            Err(Error::UnidentifiableHeritability)
        ));
        assert!(pcgc_heritability(&[1.0, 0.0], &k).is_err());
    }

    #[test]
    fn override_range() {
        assert!(HeritabilityEstimate::from_h2(1.0).is_err());
        assert!(HeritabilityEstimate::from_h2(-0.1).is_err());
        let e = HeritabilityEstimate::from_h2(0.5).unwrap();
        assert_eq!(e.lambda, 1.0);
    }
}
