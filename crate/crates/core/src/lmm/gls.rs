use super::covariance::CovarianceInverse;
use crate::error::{Error, Result};
use crate::linalg::{dot, DenseMatrix};

/// Relative pivot floor below which the normal matrix counts as singular.
const PIVOT_FLOOR: f64 = 1e-10;

/// Generalized least-squares fit.
#[derive(Clone, Debug)]
pub struct GlsFit {
    pub beta: Vec<f64>,
    /// `(Xᵀ Σ⁻¹ X)⁻¹`
    pub inv_normal: DenseMatrix,
}

/// `β = (Xᵀ Σ⁻¹ X)⁻¹ Xᵀ Σ⁻¹ y`, applying `Σ⁻¹` once per design column and
/// once to `y`.
pub fn gls_beta<C: CovarianceInverse + ?Sized>(
    design: &DenseMatrix,
    solve: &C,
    y: &[f64],
) -> Result<GlsFit> {
    let n = design.rows();
    if y.len() != n || solve.size() != n {
        return Err(Error::DimensionMismatch(format!(
            "design has {n} rows, phenotype {} entries, covariance size {}",
            y.len(),
            solve.size()
        )));
    }
    let q = design.cols();
    let stacked = DenseMatrix::from_fn(n, q + 1, |i, j| if j < q { design[(i, j)] } else { y[i] });
    let applied = solve.apply(&stacked);
    let cols: Vec<Vec<f64>> = (0..q).map(|j| design.column(j)).collect();
    let scols: Vec<Vec<f64>> = (0..q).map(|j| applied.column(j)).collect();
    let sy = applied.column(q);
    fit_columns(
        &cols.iter().map(Vec::as_slice).collect::<Vec<_>>(),
        &scols.iter().map(Vec::as_slice).collect::<Vec<_>>(),
        &sy,
    )
}

/// GLS from precomputed products: `cols[a]` are design columns, `scols[a]`
/// the matching `Σ⁻¹` columns and `sy = Σ⁻¹ y`.
pub(crate) fn fit_columns(cols: &[&[f64]], scols: &[&[f64]], sy: &[f64]) -> Result<GlsFit> {
    let q = cols.len();
    let mut a = DenseMatrix::zeros(q, q);
    for r in 0..q {
        for c in 0..q {
            a[(r, c)] = dot(cols[r], scols[c]);
        }
    }
    a.symmetrize();
    let rhs: Vec<f64> = cols.iter().map(|c| dot(c, sy)).collect();
    let inv_normal = small_spd_inverse(&a).ok_or(Error::SingularDesign)?;
    let beta = inv_normal.matvec(&rhs)?;
    Ok(GlsFit { beta, inv_normal })
}

/// Cholesky-based inverse for the tiny normal matrices; rejects pivots that
/// collapse relative to the diagonal.
fn small_spd_inverse(a: &DenseMatrix) -> Option<DenseMatrix> {
    let q = a.rows();
    let mut l = DenseMatrix::zeros(q, q);
    for j in 0..q {
        let mut d = a[(j, j)];
        for k in 0..j {
            d -= l[(j, k)] * l[(j, k)];
        }
        if !(d > PIVOT_FLOOR * a[(j, j)].abs()) || d <= 0.0 {
            return None;
        }
        let ljj = d.sqrt();
        l[(j, j)] = ljj;
        for i in j + 1..q {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / ljj;
        }
    }
    // L⁻¹ by forward substitution, then A⁻¹ = L⁻ᵀ L⁻¹.
    let mut linv = DenseMatrix::zeros(q, q);
    for c in 0..q {
        for i in c..q {
            let mut s = if i == c { 1.0 } else { 0.0 };
            for k in c..i {
                s -= l[(i, k)] * linv[(k, c)];
            }
            linv[(i, c)] = s / l[(i, i)];
        }
    }
    let mut inv = DenseMatrix::zeros(q, q);
    for i in 0..q {
        for j in 0..=i {
            let s: f64 = (i..q).map(|k| linv[(k, i)] * linv[(k, j)]).sum();
            inv[(i, j)] = s;
            inv[(j, i)] = s;
        }
    }
    Some(inv)
}

/// Closed-form REML residual variance `rᵀ Σ⁻¹ r / (n − c − 1)` with
/// `r = y − X β`; `c` counts the intercept and covariates.
pub fn reml_sigma_e<C: CovarianceInverse + ?Sized>(
    y: &[f64],
    design: &DenseMatrix,
    beta: &[f64],
    solve: &C,
    c: usize,
) -> Result<f64> {
    let n = design.rows();
    if n <= c + 1 {
        return Err(Error::InsufficientDof { n, params: c + 1 });
    }
    if y.len() != n || beta.len() != design.cols() || solve.size() != n {
        return Err(Error::DimensionMismatch(
            "residual variance inputs disagree in size".into(),
        ));
    }
    let fitted = design.matvec(beta)?;
    let r: Vec<f64> = y.iter().zip(&fitted).map(|(a, b)| a - b).collect();
    let sr = solve.apply(&DenseMatrix::column_vector(&r));
    Ok(dot(&r, sr.as_slice()) / (n - c - 1) as f64)
}
