//! Dense factorization kernels: Householder QR with column pivoting, thin SVD
//! (Householder QR followed by one-sided Jacobi), pseudoinverse solves, the
//! spectral condition number, and a partial-pivoting LU for small square
//! systems.

use crate::error::{Error, Result};
use crate::mat::Mat;
use crate::scalar::{dot, hypot, norm2, Real};

/// Partial or complete QR factorization with greedy column pivoting.
///
/// `pivots` are 0-based column indices of the input in selection order.
#[derive(Clone, Debug)]
pub struct PivotedQrFactor<T> {
    pub pivots: Vec<usize>,
    /// `|r_ii|`, one per pivot. Entries past the row count of the input are zero.
    pub rdiag: Vec<T>,
    /// Orthonormal factor, `n_rows × k` with `k = min(p, n_rows)`.
    pub q: Mat<T>,
    /// Upper-trapezoidal factor, `k × n_cols`, columns ordered as `perm`.
    pub r_upper: Mat<T>,
    /// Full column permutation: the pivots followed by the unselected columns
    /// in ascending order.
    pub perm: Vec<usize>,
}

/// Thin singular value decomposition with singular values sorted descending.
#[derive(Clone, Debug)]
pub struct SvdFactor<T> {
    /// Left singular vectors, `n × k`.
    pub modes: Mat<T>,
    pub sigmas: Vec<T>,
    /// Right singular vectors, `m × k`.
    pub right: Mat<T>,
}

impl<T: Real> SvdFactor<T> {
    /// `modes · diag(sigmas) · rightᵀ`.
    pub fn reconstruct(&self) -> Mat<T> {
        let mut us = self.modes.clone();
        us.scale_cols(&self.sigmas);
        us.matmul(&self.right.transpose())
    }

    pub fn rank(&self) -> usize {
        self.sigmas.len()
    }
}

pub(crate) fn ensure_finite<T: Real>(m: &Mat<T>) -> Result<()> {
    match m.first_non_finite() {
        Some((row, col)) => Err(Error::NonFiniteValue { row, col }),
        None => Ok(()),
    }
}

pub(crate) fn ensure_finite_vec<T: Real>(v: &[T]) -> Result<()> {
    match v.iter().position(|x| !x.is_finite()) {
        Some(row) => Err(Error::NonFiniteValue { row, col: 0 }),
        None => Ok(()),
    }
}

/// Elementary reflector `H = I − tau·v·vᵀ` with `v[0] = 1` such that
/// `H·x = beta·e₁`. Returns `(tau, beta)` and overwrites `x[1..]` with `v[1..]`.
fn householder<T: Real>(x: &mut [T]) -> (T, T) {
    let alpha = x[0];
    let xnorm = norm2(&x[1..]);
    if xnorm == T::zero() {
        return (T::zero(), alpha);
    }
    let mut beta = hypot(alpha, xnorm);
    if alpha >= T::zero() {
        beta = -beta;
    }
    let tau = (beta - alpha) / beta;
    let scale = T::one() / (alpha - beta);
    x[1..].iter_mut().for_each(|v| *v *= scale);
    (tau, beta)
}

/// Applies `I − tau·v·vᵀ` (with implicit `v[0] = 1`) to `y`.
#[inline]
fn apply_reflector<T: Real>(v_tail: &[T], tau: T, y: &mut [T]) {
    if tau == T::zero() {
        return;
    }
    let w = tau * (y[0] + dot(v_tail, &y[1..]));
    y[0] -= w;
    for (yi, vi) in y[1..].iter_mut().zip(v_tail) {
        *yi -= w * *vi;
    }
}

/// Greedy QR factorization with column pivoting, stopped after `p` pivots.
///
/// At each step the remaining column of largest residual 2-norm is selected
/// (lowest column index on exact ties), a Householder reflector zeroes it
/// below the diagonal, and the reflector is applied to every remaining
/// column. Residual column norms are downdated and recomputed from scratch
/// once cancellation would make the downdate unreliable.
///
/// Rank deficiency is not an error: exhausted columns yield `rdiag` entries of
/// zero and selection continues by index.
pub fn qr_pivot<T: Real>(b: &Mat<T>, p: usize) -> Result<PivotedQrFactor<T>> {
    ensure_finite(b)?;
    let (nr, nc) = b.shape();
    if p == 0 || p > nc {
        return Err(Error::invalid(format!(
            "pivot count {p} outside 1..={nc}"
        )));
    }
    let mut a = b.clone();
    let mut norms: Vec<T> = (0..nc).map(|j| a.col_norm(j)).collect();
    let mut ref_norms = norms.clone();
    let mut taken = vec![false; nc];
    let mut pivots = Vec::with_capacity(p);
    let mut rdiag = Vec::with_capacity(p);
    let mut reflectors: Vec<(Vec<T>, T)> = Vec::new();
    let recompute_ratio = T::epsilon().sqrt();

    for k in 0..p {
        let mut best: Option<usize> = None;
        for j in (0..nc).filter(|&j| !taken[j]) {
            match best {
                Some(bj) if norms[j] <= norms[bj] => {}
                _ => best = Some(j),
            }
        }
        let piv = best.expect("p <= n_cols leaves a candidate");
        taken[piv] = true;
        pivots.push(piv);

        if k >= nr {
            rdiag.push(T::zero());
            continue;
        }

        let (tau, beta) = {
            let col = &mut a.col_mut(piv)[k..];
            householder(col)
        };
        let v_tail: Vec<T> = a.col(piv)[k + 1..].to_vec();
        {
            let col = a.col_mut(piv);
            col[k] = beta;
            col[k + 1..].iter_mut().for_each(|v| *v = T::zero());
        }
        rdiag.push(beta.abs());

        for j in 0..nc {
            if taken[j] {
                continue;
            }
            let col = a.col_mut(j);
            apply_reflector(&v_tail, tau, &mut col[k..]);
            if norms[j] == T::zero() {
                continue;
            }
            let t = col[k].abs() / norms[j];
            let t = ((T::one() + t) * (T::one() - t)).max(T::zero());
            let ratio = t * (norms[j] / ref_norms[j]).powi(2);
            if ratio <= recompute_ratio {
                norms[j] = norm2(&col[k + 1..]);
                ref_norms[j] = norms[j];
            } else {
                norms[j] = norms[j] * t.sqrt();
            }
        }
        reflectors.push((v_tail, tau));
    }

    let k = reflectors.len();
    let mut perm = pivots.clone();
    perm.extend((0..nc).filter(|&j| !taken[j]));
    let r_upper = Mat::from_fn(k, nc, |i, c| {
        let src = perm[c];
        if c < k && i > c {
            T::zero()
        } else {
            a[(i, src)]
        }
    });

    let mut q = Mat::zeros(nr, k);
    for j in 0..k {
        q[(j, j)] = T::one();
    }
    for (step, (v_tail, tau)) in reflectors.iter().enumerate().rev() {
        for j in 0..k {
            apply_reflector(v_tail, *tau, &mut q.col_mut(j)[step..]);
        }
    }

    Ok(PivotedQrFactor {
        pivots,
        rdiag,
        q,
        r_upper,
        perm,
    })
}

/// Unpivoted Householder QR of a tall matrix; returns the reflectors and
/// the square upper-triangular factor.
fn householder_qr<T: Real>(x: &Mat<T>) -> (Vec<(Vec<T>, T)>, Mat<T>) {
    let (n, m) = x.shape();
    debug_assert!(n >= m);
    let mut a = x.clone();
    let mut reflectors = Vec::with_capacity(m);
    for k in 0..m {
        let (tau, beta) = householder(&mut a.col_mut(k)[k..]);
        let v_tail: Vec<T> = a.col(k)[k + 1..].to_vec();
        a[(k, k)] = beta;
        for j in k + 1..m {
            apply_reflector(&v_tail, tau, &mut a.col_mut(j)[k..]);
        }
        reflectors.push((v_tail, tau));
    }
    let r = Mat::from_fn(m, m, |i, j| if i <= j { a[(i, j)] } else { T::zero() });
    (reflectors, r)
}

/// One-sided (Hestenes) Jacobi on the columns of `a`, accumulating the
/// rotations into `v`. On return the columns of `a` are mutually orthogonal.
fn one_sided_jacobi<T: Real>(a: &mut Mat<T>, v: &mut Mat<T>) {
    let m = a.cols();
    let tol = T::epsilon() * T::from_count(a.rows().max(1)).sqrt();
    let scale = a.frobenius_norm();
    let negligible = (T::from_count(m.max(1)) * T::epsilon() * scale).powi(2);
    for _sweep in 0..80 {
        let mut rotated = false;
        for i in 0..m {
            for j in i + 1..m {
                let (alpha, beta, gamma) = {
                    let (ai, aj) = (a.col(i), a.col(j));
                    (dot(ai, ai), dot(aj, aj), dot(ai, aj))
                };
                if alpha <= negligible || beta <= negligible {
                    continue;
                }
                if gamma.abs() <= tol * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (gamma + gamma);
                let t = zeta.signum() / (zeta.abs() + (T::one() + zeta * zeta).sqrt());
                let c = T::one() / (T::one() + t * t).sqrt();
                let s = c * t;
                for mat in [&mut *a, &mut *v] {
                    let (ci, cj) = mat.col_pair_mut(i, j);
                    for (x, y) in ci.iter_mut().zip(cj.iter_mut()) {
                        let (xi, yj) = (*x, *y);
                        *x = c * xi - s * yj;
                        *y = s * xi + c * yj;
                    }
                }
            }
        }
        if !rotated {
            break;
        }
    }
}

/// Replaces the columns of `u` flagged in `fill` with unit vectors orthogonal
/// to every other column, by Gram–Schmidt on canonical vectors.
fn complete_orthonormal<T: Real>(u: &mut Mat<T>, fill: &[bool]) {
    let (n, k) = u.shape();
    for j in 0..k {
        if !fill[j] {
            continue;
        }
        let mut best: Option<(T, Vec<T>)> = None;
        for e in 0..n {
            let mut cand = vec![T::zero(); n];
            cand[e] = T::one();
            for _ in 0..2 {
                for other in 0..k {
                    if other == j || (fill[other] && other > j) {
                        continue;
                    }
                    let proj = dot(u.col(other), &cand);
                    for (c, o) in cand.iter_mut().zip(u.col(other)) {
                        *c -= proj * *o;
                    }
                }
            }
            let nrm = norm2(&cand);
            if best.as_ref().map_or(true, |(b, _)| nrm > *b) {
                best = Some((nrm, cand));
            }
            if nrm > T::lit(0.5) {
                break;
            }
        }
        let (nrm, cand) = best.expect("n >= k leaves a complement direction");
        for (dst, c) in u.col_mut(j).iter_mut().zip(cand) {
            *dst = c / nrm;
        }
    }
}

/// Full thin SVD of an `n × m` matrix, `k = min(n, m)` triplets.
///
/// Each left singular vector is signed so its largest-magnitude entry is
/// nonnegative; the right vector is flipped alongside.
pub fn svd<T: Real>(x: &Mat<T>) -> Result<SvdFactor<T>> {
    ensure_finite(x)?;
    let (n, m) = x.shape();
    if n == 0 || m == 0 {
        return Err(Error::EmptyMatrix { rows: n, cols: m });
    }
    if n < m {
        let t = svd(&x.transpose())?;
        let mut out = SvdFactor {
            modes: t.right,
            sigmas: t.sigmas,
            right: t.modes,
        };
        fix_signs(&mut out);
        return Ok(out);
    }

    let (reflectors, mut core) = householder_qr(x);
    let mut v = Mat::identity(m);
    one_sided_jacobi(&mut core, &mut v);

    let mut sig: Vec<T> = (0..m).map(|j| core.col_norm(j)).collect();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| sig[b].partial_cmp(&sig[a]).unwrap().then(a.cmp(&b)));
    let core = core.select_cols(&order);
    let v = v.select_cols(&order);
    sig = order.iter().map(|&j| sig[j]).collect();

    let cutoff = T::from_count(m) * T::epsilon() * x.frobenius_norm();
    let fill: Vec<bool> = sig.iter().map(|s| !(*s > cutoff)).collect();
    let mut u_core = core;
    for (j, s) in sig.iter().enumerate() {
        if !fill[j] {
            let inv = T::one() / *s;
            u_core.col_mut(j).iter_mut().for_each(|e| *e *= inv);
        }
    }
    if fill.iter().any(|f| *f) {
        complete_orthonormal(&mut u_core, &fill);
    }

    // Lift back through the Householder reflectors: U = Q·[U_core; 0].
    let mut modes = Mat::zeros(n, m);
    for j in 0..m {
        modes.col_mut(j)[..m].copy_from_slice(u_core.col(j));
    }
    for (k, (v_tail, tau)) in reflectors.iter().enumerate().rev() {
        for j in 0..m {
            apply_reflector(v_tail, *tau, &mut modes.col_mut(j)[k..]);
        }
    }

    let mut out = SvdFactor {
        modes,
        sigmas: sig,
        right: v,
    };
    fix_signs(&mut out);
    Ok(out)
}

fn fix_signs<T: Real>(f: &mut SvdFactor<T>) {
    for j in 0..f.sigmas.len() {
        let col = f.modes.col(j);
        let mut arg = 0;
        for (i, v) in col.iter().enumerate() {
            if v.abs() > col[arg].abs() {
                arg = i;
            }
        }
        if col[arg] < T::zero() {
            f.modes.col_mut(j).iter_mut().for_each(|e| *e = -*e);
            f.right.col_mut(j).iter_mut().for_each(|e| *e = -*e);
        }
    }
}

/// Leading `r` singular triplets of `x`.
pub fn truncated_svd<T: Real>(x: &Mat<T>, r: usize) -> Result<SvdFactor<T>> {
    ensure_finite(x)?;
    let k = x.rows().min(x.cols());
    if r == 0 || r > k {
        return Err(Error::invalid(format!("rank {r} outside 1..={k}")));
    }
    let full = svd(x)?;
    Ok(SvdFactor {
        modes: full.modes.leading_cols(r),
        sigmas: full.sigmas[..r].to_vec(),
        right: full.right.leading_cols(r),
    })
}

/// Singular values only, descending.
pub fn singular_values<T: Real>(x: &Mat<T>) -> Result<Vec<T>> {
    Ok(svd(x)?.sigmas)
}

/// Minimum-norm least-squares solution of `theta · a ≈ y` through the SVD.
/// Singular values below `max(p, r)·ε·σ_max` are treated as zero.
pub fn least_squares_pinv<T: Real>(theta: &Mat<T>, y: &[T]) -> Result<Vec<T>> {
    ensure_finite(theta)?;
    ensure_finite_vec(y)?;
    let (p, r) = theta.shape();
    if y.len() != p {
        return Err(Error::dims(format!(
            "measurement length {} but theta has {p} rows",
            y.len()
        )));
    }
    if p == 0 || r == 0 {
        return Err(Error::EmptyMatrix { rows: p, cols: r });
    }
    let f = svd(theta)?;
    let smax = f.sigmas[0];
    let cut = T::from_count(p.max(r)) * T::epsilon() * smax;
    let mut a = vec![T::zero(); r];
    for (j, s) in f.sigmas.iter().enumerate() {
        if !(*s > cut) {
            continue;
        }
        let w = dot(f.modes.col(j), y) / *s;
        for (ai, vi) in a.iter_mut().zip(f.right.col(j)) {
            *ai += w * *vi;
        }
    }
    Ok(a)
}

/// Spectral condition number `σ_max / σ_min`; `+∞` once `σ_min` falls below
/// `1e−300·σ_max`.
pub fn condition_number<T: Real>(theta: &Mat<T>) -> Result<T> {
    ensure_finite(theta)?;
    let s = singular_values(theta)?;
    let smax = s[0];
    if smax == T::zero() {
        return Err(Error::invalid("condition number of an all-zero matrix"));
    }
    let smin = *s.last().unwrap();
    if !(smin > T::lit(1e-300) * smax) {
        return Ok(T::infinity());
    }
    Ok(smax / smin)
}

/// LU factorization with partial pivoting of a square matrix.
struct Lu<T> {
    lu: Mat<T>,
    perm: Vec<usize>,
    sign: T,
}

fn lu<T: Real>(a: &Mat<T>) -> Result<Lu<T>> {
    let n = a.rows();
    if a.cols() != n {
        return Err(Error::dims(format!("LU of non-square {}x{}", n, a.cols())));
    }
    let tiny = T::from_count(n.max(1)) * T::epsilon() * a.max_abs();
    let mut lu = a.clone();
    let mut perm: Vec<usize> = (0..n).collect();
    let mut sign = T::one();
    for k in 0..n {
        let mut piv = k;
        for i in k + 1..n {
            if lu[(i, k)].abs() > lu[(piv, k)].abs() {
                piv = i;
            }
        }
        if !(lu[(piv, k)].abs() > tiny) {
            return Err(Error::Singular);
        }
        if piv != k {
            for j in 0..n {
                let t = lu[(k, j)];
                lu[(k, j)] = lu[(piv, j)];
                lu[(piv, j)] = t;
            }
            perm.swap(k, piv);
            sign = -sign;
        }
        let d = lu[(k, k)];
        for i in k + 1..n {
            let l = lu[(i, k)] / d;
            lu[(i, k)] = l;
            for j in k + 1..n {
                let u = lu[(k, j)];
                lu[(i, j)] -= l * u;
            }
        }
    }
    Ok(Lu { lu, perm, sign })
}

/// Solves a square system by LU with partial pivoting. Fails with
/// [`Error::Singular`] when a pivot falls below `n·ε·max|A|`.
pub fn lu_solve<T: Real>(a: &Mat<T>, b: &[T]) -> Result<Vec<T>> {
    ensure_finite(a)?;
    ensure_finite_vec(b)?;
    if b.len() != a.rows() {
        return Err(Error::dims("right-hand side length disagrees with matrix"));
    }
    let f = lu(a)?;
    let n = b.len();
    let mut x: Vec<T> = f.perm.iter().map(|&i| b[i]).collect();
    for i in 0..n {
        for k in 0..i {
            let l = f.lu[(i, k)];
            let xk = x[k];
            x[i] -= l * xk;
        }
    }
    for i in (0..n).rev() {
        for k in i + 1..n {
            let u = f.lu[(i, k)];
            let xk = x[k];
            x[i] -= u * xk;
        }
        x[i] /= f.lu[(i, i)];
    }
    Ok(x)
}

/// Determinant of a square matrix; exactly zero when LU detects singularity.
pub fn determinant<T: Real>(a: &Mat<T>) -> Result<T> {
    ensure_finite(a)?;
    match lu(a) {
        Ok(f) => Ok((0..a.rows()).fold(f.sign, |acc, i| acc * f.lu[(i, i)])),
        Err(Error::Singular) => Ok(T::zero()),
        Err(e) => Err(e),
    }
}
