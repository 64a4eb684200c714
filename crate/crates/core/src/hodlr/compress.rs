//! Adaptive-rank compression of off-diagonal blocks.
//!
//! Small blocks get a direct thin SVD. Larger ones first try adaptive cross
//! approximation, then a randomized range finder. Both produce candidate
//! factors whose residual `τ` against the block is computed exactly, then a
//! thin SVD of the small core and truncation at the smallest `k` whose tail
//! fits in what `τ` leaves of `ε` (in quadrature when the residual is
//! orthogonal to the kept range, additively otherwise). The heuristics only
//! decide cost, never accuracy.

use faer::{Mat, MatRef};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::LowRankBlock;
use crate::error::{Error, Result};
use crate::linalg::{frobenius, gemm, thin_qr, thin_svd, DenseMatrix};

/// Blocks whose smaller side is at most this are factored by a direct SVD.
const DIRECT_SVD_LIMIT: usize = 64;
/// Range-finder stopping tolerance as a fraction of ε.
const RANGE_TOL_FRACTION: f64 = 1e-2;
const INITIAL_SAMPLES: usize = 32;
/// Cross approximation gives up beyond `min(m, p) / 2` terms.
const ACA_MAX_RANK_DIVISOR: usize = 2;
/// Cross approximation stops once a new term is this small relative to the
/// range tolerance.
const ACA_STOP_FRACTION: f64 = 1e-2;
const ACA_ZERO_ROW_PROBES: usize = 8;

/// Compresses `block` into `u · vᵀ` with `‖u·vᵀ − block‖_F < epsilon` using
/// the smallest rank that achieves it (optionally capped).
pub fn low_rank_approx(
    block: &DenseMatrix,
    epsilon: f64,
    rank_cap: Option<usize>,
) -> Result<LowRankBlock> {
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::InvalidInput(format!("epsilon must be positive, got {epsilon}")));
    }
    if block.as_slice().iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("block contains non-finite entries".into()));
    }
    compress_view(block.as_faer(), epsilon, rank_cap)
}

pub(crate) fn compress_view(
    b: MatRef<'_, f64>,
    epsilon: f64,
    rank_cap: Option<usize>,
) -> Result<LowRankBlock> {
    let (m, p) = (b.nrows(), b.ncols());
    let total = frobenius(b);
    if m == 0 || p == 0 || total < epsilon {
        return Ok(LowRankBlock::zero(m, p, total));
    }
    if m.min(p) <= DIRECT_SVD_LIMIT {
        return direct(b, epsilon, rank_cap);
    }

    match cross_approximation(b, epsilon, rank_cap)? {
        Some(block) => Ok(block),
        None => range_finder(b, epsilon, rank_cap),
    }
}

/// Adaptive randomized range finder with doubling sample counts; falls back
/// to a direct SVD once the basis would exceed half the block.
fn range_finder(b: MatRef<'_, f64>, epsilon: f64, rank_cap: Option<usize>) -> Result<LowRankBlock> {
    let (m, p) = (b.nrows(), b.ncols());
    let full = m.min(p);
    let mut rng = ChaCha8Rng::seed_from_u64(((m as u64) << 32) ^ p as u64);
    let mut q = Mat::<f64>::zeros(m, 0);
    let mut samples = INITIAL_SAMPLES;
    loop {
        let omega = Mat::<f64>::from_fn(p, samples, |_, _| rng.sample(StandardNormal));
        let y = gemm(b, omega.as_ref());
        let stacked = hcat(q.as_ref(), y.as_ref());
        let prev = q.ncols();
        let (basis, r) = thin_qr(stacked.as_ref());
        q = basis;

        // While every new sample still adds an independent direction the
        // range has not been exhausted, so the exact residual (the costly
        // part of a round) can wait.
        let exhausted = (prev..r.ncols().min(r.nrows()))
            .any(|i| r[(i, i)].abs() <= RANGE_TOL_FRACTION * epsilon);
        if !exhausted {
            if 2 * (q.ncols() + q.ncols()) > full {
                return direct(b, epsilon, rank_cap);
            }
            samples = q.ncols();
            continue;
        }

        let c = gemm(q.transpose(), b);
        let tau = residual_norm(b, q.as_ref(), c.as_ref());

        if tau < RANGE_TOL_FRACTION * epsilon {
            let (uc, s, vc) = thin_svd(c.as_ref())?;
            let basis = gemm(q.as_ref(), uc.as_ref());
            return truncate(basis.as_ref(), &s, vc.as_ref(), tau, epsilon, rank_cap);
        }
        if 2 * (q.ncols() + samples) > full {
            return direct(b, epsilon, rank_cap);
        }
        samples = q.ncols();
    }
}

/// Candidate factors from adaptive cross approximation with partial
/// pivoting, accepted only if the exactly computed residual clears the range
/// tolerance. Costs one `m × p × k` product instead of several sketching
/// passes; `None` hands the block to the randomized range finder.
fn cross_approximation(
    b: MatRef<'_, f64>,
    epsilon: f64,
    rank_cap: Option<usize>,
) -> Result<Option<LowRankBlock>> {
    let (m, p) = (b.nrows(), b.ncols());
    let max_rank = m.min(p) / ACA_MAX_RANK_DIVISOR;
    let stop = ACA_STOP_FRACTION * RANGE_TOL_FRACTION * epsilon;
    let mut us: Vec<Vec<f64>> = Vec::new();
    let mut vs: Vec<Vec<f64>> = Vec::new();
    let mut used = vec![false; m];
    let mut i = 0;
    let mut misses = 0;
    loop {
        if us.len() == max_rank {
            return Ok(None);
        }
        used[i] = true;
        let mut row: Vec<f64> = (0..p).map(|j| b[(i, j)]).collect();
        for (u, v) in us.iter().zip(&vs) {
            let ui = u[i];
            row.iter_mut().zip(v).for_each(|(r, vj)| *r -= ui * vj);
        }
        let (j, pivot) = argmax_abs(&row, None);
        if pivot == 0.0 {
            // A zero residual row says nothing about the others; probe a
            // few more before concluding the block is exhausted.
            misses += 1;
            match (0..m).find(|&r| !used[r]) {
                Some(next) if misses < ACA_ZERO_ROW_PROBES => {
                    i = next;
                    continue;
                }
                _ => break,
            }
        }
        let mut col: Vec<f64> = (0..m).map(|r| b[(r, j)]).collect();
        for (u, v) in us.iter().zip(&vs) {
            let vj = v[j];
            col.iter_mut().zip(u).for_each(|(c, ur)| *c -= ur * vj);
        }
        let inv = 1.0 / row[j];
        row.iter_mut().for_each(|r| *r *= inv);
        let size = norm(&col) * norm(&row);
        us.push(col);
        vs.push(row);
        if size < stop {
            break;
        }
        match argmax_abs(us.last().expect("just pushed"), Some(&used)) {
            (next, v) if v > 0.0 => i = next,
            _ => break,
        }
    }

    let k = us.len();
    let u = Mat::<f64>::from_fn(m, k, |r, c| us[c][r]);
    let v = Mat::<f64>::from_fn(p, k, |r, c| vs[c][r]);
    let tau = residual_norm(b, u.as_ref(), v.transpose());
    if tau >= RANGE_TOL_FRACTION * epsilon {
        return Ok(None);
    }
    factored(u.as_ref(), v.as_ref(), tau, epsilon, rank_cap).map(Some)
}

/// Columns per tile of [`residual_norm`]; keeps the working tile in cache.
const RESIDUAL_TILE: usize = 128;

/// Exact `‖b − l·r‖_F`, formed one column tile at a time.
fn residual_norm(b: MatRef<'_, f64>, l: MatRef<'_, f64>, r: MatRef<'_, f64>) -> f64 {
    let (m, p) = (b.nrows(), b.ncols());
    let mut tile = Mat::<f64>::zeros(m, RESIDUAL_TILE.min(p));
    let mut acc = 0.0;
    let mut j = 0;
    while j < p {
        let w = RESIDUAL_TILE.min(p - j);
        let mut t = tile.as_mut().subcols_mut(0, w);
        t.copy_from(b.subcols(j, w));
        crate::linalg::gemm_acc(t.as_mut(), l, r.subcols(j, w), -1.0);
        let f = frobenius(t.as_ref());
        acc += f * f;
        j += w;
    }
    acc.sqrt()
}

fn argmax_abs(x: &[f64], skip: Option<&[bool]>) -> (usize, f64) {
    let mut best = (0, 0.0);
    for (i, &v) in x.iter().enumerate() {
        if skip.is_some_and(|s| s[i]) {
            continue;
        }
        if v.abs() > best.1 {
            best = (i, v.abs());
        }
    }
    best
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Re-compresses an already factored block `u · vᵀ` (e.g. after appending
/// update columns) to tolerance `epsilon`.
pub(crate) fn recompress(
    u: MatRef<'_, f64>,
    v: MatRef<'_, f64>,
    epsilon: f64,
    rank_cap: Option<usize>,
) -> Result<LowRankBlock> {
    factored(u, v, 0.0, epsilon, rank_cap)
}

/// QR of both factors, SVD of the small core, truncation on top of an
/// already incurred error of at most `base`.
fn factored(
    u: MatRef<'_, f64>,
    v: MatRef<'_, f64>,
    base: f64,
    epsilon: f64,
    rank_cap: Option<usize>,
) -> Result<LowRankBlock> {
    let (m, p, r) = (u.nrows(), v.nrows(), u.ncols());
    if r == 0 || m == 0 || p == 0 {
        return Ok(LowRankBlock::zero(m, p, base));
    }
    let (qu, ru) = thin_qr(u);
    let (qv, rv) = thin_qr(v);
    let core = gemm(ru.as_ref(), rv.transpose());
    let (uc, s, vc) = thin_svd(core.as_ref())?;
    let left = gemm(qu.as_ref(), uc.as_ref());
    let right = gemm(qv.as_ref(), vc.as_ref());
    truncate_beyond(left.as_ref(), &s, right.as_ref(), base, epsilon, rank_cap)
}

/// Recompresses `b + a·wᵀ` where `b` came out of [`truncate`], so its `u` has
/// orthogonal columns and its `v` orthonormal ones.
///
/// `a` and `w` are split into components inside and orthogonal to those
/// bases. An orthogonal remainder is discarded outright when its contribution
/// is provably below a small fraction of `epsilon`; the bound is charged
/// against the tolerance. When the update lives in the span of the block
/// (common for covariance-type matrices) this avoids both thin QRs and
/// shrinks the core SVD to the current rank.
pub(crate) fn update_block(
    b: &LowRankBlock,
    a: MatRef<'_, f64>,
    w: MatRef<'_, f64>,
    epsilon: f64,
    rank_cap: Option<usize>,
) -> Result<LowRankBlock> {
    let (u, v) = (b.u.as_faer(), b.v.as_faer());
    let (m, p, r) = (u.nrows(), v.nrows(), u.ncols());
    if r == m && r == p {
        // Square block at full rank: `v` is orthogonal, so the update folds
        // exactly into `u` and there is nothing to truncate.
        let mut u_new = u.to_owned();
        let proj = gemm(w.transpose(), v);
        crate::linalg::gemm_acc(u_new.as_mut(), a, proj.as_ref(), 1.0);
        return Ok(LowRankBlock::from_factors(
            DenseMatrix::from_faer(u_new.as_ref()),
            b.v.clone(),
            b.residual,
        ));
    }
    let norms: Vec<f64> = (0..r).map(|j| frobenius(u.col(j).as_mat())).collect();
    if r == 0 || norms.iter().any(|&s| !(s > 0.0)) {
        let uu = hcat(u, a);
        let vv = hcat(v, w);
        return recompress(uu.as_ref(), vv.as_ref(), epsilon, rank_cap);
    }
    let qu = Mat::<f64>::from_fn(m, r, |i, j| u[(i, j)] / norms[j]);
    let (mut pa, mut a_perp) = project_out(qu.as_ref(), a);
    let (mut pw, mut w_perp) = project_out(v, w);

    let budget = 0.5 * RANGE_TOL_FRACTION * epsilon;
    let drop_a = frobenius(a_perp.as_ref()) * frobenius(w) <= budget;
    let drop_w = frobenius(a) * frobenius(w_perp.as_ref()) <= budget;
    let mut base = 0.0;
    if drop_a {
        base += frobenius(a_perp.as_ref()) * frobenius(w);
    }
    if drop_w {
        base += frobenius(a) * frobenius(w_perp.as_ref());
    }

    // An extended basis wider than the block cannot be orthonormal; such
    // blocks are small, so factor them directly.
    if (!drop_a && r + a.ncols() > m) || (!drop_w && r + w.ncols() > p) {
        let mut dense = gemm(u, v.transpose());
        crate::linalg::gemm_acc(dense.as_mut(), a, w.transpose(), 1.0);
        return direct(dense.as_ref(), epsilon, rank_cap);
    }
    if !drop_a {
        reorthogonalize(qu.as_ref(), &mut pa, &mut a_perp);
    }
    if !drop_w {
        reorthogonalize(v, &mut pw, &mut w_perp);
    }
    let (left_basis, left_coef) = extend_basis(qu, pa, a_perp, drop_a);
    let (right_basis, right_coef) = extend_basis(v.to_owned(), pw, w_perp, drop_w);
    let mut core = Mat::<f64>::zeros(left_coef.nrows(), right_coef.nrows());
    for (j, &s) in norms.iter().enumerate() {
        core[(j, j)] = s;
    }
    crate::linalg::gemm_acc(core.as_mut(), left_coef.as_ref(), right_coef.transpose(), 1.0);

    let (uc, s, vc) = thin_svd(core.as_ref())?;
    let left = gemm(left_basis.as_ref(), uc.as_ref());
    let right = gemm(right_basis.as_ref(), vc.as_ref());
    truncate_beyond(left.as_ref(), &s, right.as_ref(), base, epsilon, rank_cap)
}

/// Truncation when an error of at most `base` has already been committed in
/// a direction not orthogonal to the kept part: the tail must fit in
/// `epsilon − base`.
fn truncate_beyond(
    left: MatRef<'_, f64>,
    s: &[f64],
    right: MatRef<'_, f64>,
    base: f64,
    epsilon: f64,
    rank_cap: Option<usize>,
) -> Result<LowRankBlock> {
    let mut out = truncate(left, s, right, 0.0, epsilon - base, rank_cap).map_err(|e| match e {
        Error::ToleranceUnreachable {
            rank_cap, residual, ..
        } => Error::ToleranceUnreachable {
            epsilon,
            rank_cap,
            residual: residual + base,
        },
        e => e,
    })?;
    out.residual += base;
    Ok(out)
}

/// `x = q·c + x⊥` after one Gram-Schmidt pass. The split is exact whatever
/// the orthogonality of `x⊥`, which is all a dropped remainder needs.
fn project_out(q: MatRef<'_, f64>, x: MatRef<'_, f64>) -> (Mat<f64>, Mat<f64>) {
    let coef = gemm(q.transpose(), x);
    let mut perp = x.to_owned();
    crate::linalg::gemm_acc(perp.as_mut(), q, coef.as_ref(), -1.0);
    (coef, perp)
}

/// Second Gram-Schmidt pass, needed before `x⊥` extends the basis.
fn reorthogonalize(q: MatRef<'_, f64>, coef: &mut Mat<f64>, perp: &mut Mat<f64>) {
    let again = gemm(q.transpose(), perp.as_ref());
    crate::linalg::gemm_acc(perp.as_mut(), q, again.as_ref(), -1.0);
    *coef += &again;
}

/// Basis `[q | Q⊥]` and coordinates `[c; R⊥]` of `q·c + perp`, or just
/// `(q, c)` when the remainder is dropped.
fn extend_basis(q: Mat<f64>, coef: Mat<f64>, perp: Mat<f64>, drop: bool) -> (Mat<f64>, Mat<f64>) {
    if drop || perp.ncols() == 0 {
        return (q, coef);
    }
    let (qp, rp) = thin_qr(perp.as_ref());
    let basis = hcat(q.as_ref(), qp.as_ref());
    let (r, k) = (coef.nrows(), rp.nrows());
    let stacked = Mat::from_fn(r + k, coef.ncols(), |i, j| {
        if i < r {
            coef[(i, j)]
        } else {
            rp[(i - r, j)]
        }
    });
    (basis, stacked)
}

fn direct(b: MatRef<'_, f64>, epsilon: f64, rank_cap: Option<usize>) -> Result<LowRankBlock> {
    let (u, s, v) = thin_svd(b)?;
    truncate(u.as_ref(), &s, v.as_ref(), 0.0, epsilon, rank_cap)
}

/// Smallest `k` with `base² + Σ_{i≥k} s_i² < ε²`, or `None` if even keeping
/// every value fails.
pub(crate) fn truncation_rank(s: &[f64], base: f64, epsilon: f64) -> Option<usize> {
    let eps2 = epsilon * epsilon;
    let mut tail = vec![0.0; s.len() + 1];
    for i in (0..s.len()).rev() {
        tail[i] = tail[i + 1] + s[i] * s[i];
    }
    (0..=s.len()).find(|&k| base * base + tail[k] < eps2)
}

fn truncate(
    left: MatRef<'_, f64>,
    s: &[f64],
    right: MatRef<'_, f64>,
    base: f64,
    epsilon: f64,
    rank_cap: Option<usize>,
) -> Result<LowRankBlock> {
    let residual_at = |k: usize| {
        (base * base + s[k..].iter().map(|x| x * x).sum::<f64>()).sqrt()
    };
    let k = truncation_rank(s, base, epsilon).ok_or(Error::ToleranceUnreachable {
        epsilon,
        rank_cap: s.len(),
        residual: residual_at(s.len()),
    })?;
    if let Some(cap) = rank_cap {
        if k > cap {
            return Err(Error::ToleranceUnreachable {
                epsilon,
                rank_cap: cap,
                residual: residual_at(cap.min(s.len())),
            });
        }
    }
    let u = DenseMatrix::from_fn(left.nrows(), k, |i, j| left[(i, j)] * s[j]);
    let v = DenseMatrix::from_fn(right.nrows(), k, |i, j| right[(i, j)]);
    Ok(LowRankBlock::from_factors(u, v, residual_at(k)))
}

fn hcat(a: MatRef<'_, f64>, b: MatRef<'_, f64>) -> Mat<f64> {
    let ca = a.ncols();
    Mat::from_fn(a.nrows(), ca + b.ncols(), |i, j| {
        if j < ca {
            a[(i, j)]
        } else {
            b[(i, j - ca)]
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn truncation_rank_picks_smallest() {
        let s = [3.0, 1.0, 0.1, 0.01];
        // tail after k=2 is sqrt(0.0101) ≈ 0.1005
        assert_eq!(truncation_rank(&s, 0.0, 0.2), Some(2));
        assert_eq!(truncation_rank(&s, 0.0, 0.1), Some(3));
        assert_eq!(truncation_rank(&s, 0.0, 1e-9), Some(4));
        assert_eq!(truncation_rank(&s, 1.0, 0.5), None);
        assert_eq!(truncation_rank(&s, 0.0, 10.0), Some(0));
    }

    #[test]
    fn zero_block_is_rank_zero() {
        let z = DenseMatrix::zeros(5, 7);
        let lr = low_rank_approx(&z, 1e-3, None).unwrap();
        assert_eq!(lr.rank(), 0);
        assert_eq!(lr.u.rows(), 5);
        assert_eq!(lr.v.rows(), 7);
    }

    #[test]
    fn rejects_bad_epsilon() {
        let z = DenseMatrix::identity(3);
        assert!(matches!(low_rank_approx(&z, 0.0, None), Err(Error::InvalidInput(_))));
        assert!(matches!(low_rank_approx(&z, -1.0, None), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn rank_cap_violation_reports_residual() {
        let m = DenseMatrix::from_diagonal(&[1.0, 1.0, 1.0]);
        match low_rank_approx(&m, 1e-6, Some(1)) {
            Err(Error::ToleranceUnreachable { rank_cap, residual, .. }) => {
                assert_eq!(rank_cap, 1);
                assert!((residual - 2f64.sqrt()).abs() < 1e-12);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    fn gaussian(rows: usize, cols: usize, seed: u64) -> DenseMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        DenseMatrix::from_fn(rows, cols, |_, _| rng.sample(StandardNormal))
    }

    fn product(a: &DenseMatrix, b: &DenseMatrix) -> DenseMatrix {
        a.matmul(&b.transpose()).unwrap()
    }

    #[test]
    fn range_finder_recovers_exact_low_rank() {
        let m = product(&gaussian(200, 7, 9), &gaussian(150, 7, 10));
        let lr = range_finder(m.as_faer(), 1e-8, None).unwrap();
        assert_eq!(lr.rank(), 7);
        let err = lr.to_dense().max_abs_diff(&m);
        assert!(err < 1e-10, "err {err}");
    }

    #[test]
    fn cross_approximation_accepts_low_rank_and_declines_full_rank() {
        let m = product(&gaussian(200, 7, 9), &gaussian(150, 7, 10));
        let lr = cross_approximation(m.as_faer(), 1e-8, None).unwrap().unwrap();
        assert_eq!(lr.rank(), 7);
        assert!(lr.to_dense().max_abs_diff(&m) < 1e-10);
        let noise = gaussian(100, 100, 3);
        assert!(cross_approximation(noise.as_faer(), 1e-8, None).unwrap().is_none());
        let lr = low_rank_approx(&noise, 1e-8, None).unwrap();
        assert_eq!(lr.rank(), 100);
    }

    fn updated(b: &DenseMatrix, a: &DenseMatrix, w: &DenseMatrix) -> DenseMatrix {
        let aw = product(a, w);
        DenseMatrix::from_fn(b.rows(), b.cols(), |i, j| b[(i, j)] + aw[(i, j)])
    }

    #[test]
    fn update_inside_span_keeps_rank() {
        let (x, y) = (gaussian(60, 5, 1), gaussian(50, 5, 2));
        let m = product(&x, &y);
        let blk = low_rank_approx(&m, 1e-10, None).unwrap();
        let a = x.matmul(&gaussian(5, 3, 3)).unwrap();
        let w = y.matmul(&gaussian(5, 3, 4)).unwrap();
        let out = update_block(&blk, a.as_faer(), w.as_faer(), 1e-10, None).unwrap();
        assert_eq!(out.rank(), 5);
        assert!(out.to_dense().max_abs_diff(&updated(&m, &a, &w)) < 1e-10);
    }

    #[test]
    fn update_outside_span_grows_rank() {
        let (x, y) = (gaussian(60, 5, 1), gaussian(50, 5, 2));
        let m = product(&x, &y);
        let blk = low_rank_approx(&m, 1e-10, None).unwrap();
        let (a, w) = (gaussian(60, 2, 5), gaussian(50, 2, 6));
        let out = update_block(&blk, a.as_faer(), w.as_faer(), 1e-10, None).unwrap();
        assert_eq!(out.rank(), 7);
        assert!(out.to_dense().max_abs_diff(&updated(&m, &a, &w)) < 1e-10);
    }

    #[test]
    fn update_of_full_rank_square_block_is_exact() {
        let m = gaussian(8, 8, 7);
        let blk = low_rank_approx(&m, 1e-12, None).unwrap();
        assert_eq!(blk.rank(), 8);
        let (a, w) = (gaussian(8, 3, 8), gaussian(8, 3, 9));
        let out = update_block(&blk, a.as_faer(), w.as_faer(), 1e-12, None).unwrap();
        assert_eq!(out.rank(), 8);
        assert!(out.to_dense().max_abs_diff(&updated(&m, &a, &w)) < 1e-12);
    }

    #[test]
    fn update_wider_than_block_truncates_exactly() {
        // Target with singular values 2^-i; the block before the update is
        // full rank, so block rank plus update width exceeds its size.
        let (m, p) = (20, 16);
        let (qu, _) = thin_qr(gaussian(m, p, 11).as_faer());
        let (qv, _) = thin_qr(gaussian(p, p, 12).as_faer());
        let target = DenseMatrix::from_fn(m, p, |i, j| {
            (0..p).map(|k| qu[(i, k)] * qv[(j, k)] * 0.5f64.powi(k as i32)).sum()
        });
        let (a, w) = (gaussian(m, 6, 13), gaussian(p, 6, 14));
        let aw = product(&a, &w);
        let before = DenseMatrix::from_fn(m, p, |i, j| target[(i, j)] - aw[(i, j)]);
        let blk = low_rank_approx(&before, 1e-13, None).unwrap();
        assert_eq!(blk.rank(), p);

        let eps = 1e-3;
        let out = update_block(&blk, a.as_faer(), w.as_faer(), eps, None).unwrap();
        let tail = |k: i32| (k..p as i32).map(|i| 0.25f64.powi(i)).sum::<f64>().sqrt();
        let expect = (0..=p as i32).find(|&k| tail(k) < eps).unwrap() as usize;
        assert_eq!(out.rank(), expect);
        let got = out.to_dense();
        let err = DenseMatrix::from_fn(m, p, |i, j| got[(i, j)] - target[(i, j)]).frobenius_norm();
        assert!(err < eps, "err {err}");
        let vtv = out.v.transpose().matmul(&out.v).unwrap();
        assert!(vtv.max_abs_diff(&DenseMatrix::identity(expect)) < 1e-12);
    }

    #[test]
    fn recompress_merges_redundant_columns() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let u = DenseMatrix::from_fn(40, 3, |_, _| rng.sample(StandardNormal));
        let v = DenseMatrix::from_fn(30, 3, |_, _| rng.sample(StandardNormal));
        // [u u] [v v]ᵀ == 2 u vᵀ, rank 3.
        let uu = hcat(u.as_faer(), u.as_faer());
        let vv = hcat(v.as_faer(), v.as_faer());
        let lr = recompress(uu.as_ref(), vv.as_ref(), 1e-10, None).unwrap();
        assert_eq!(lr.rank(), 3);
        let mut target = u.matmul(&v.transpose()).unwrap();
        target.scale_in_place(2.0);
        assert!(lr.to_dense().max_abs_diff(&target) < 1e-12);
    }
}
