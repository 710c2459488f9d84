//! Tailored bases: POD modes trained from snapshots, and monomial
//! (Vandermonde) bases on a grid in `[0, 1]`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::factor::{ensure_finite, ensure_finite_vec, svd};
use crate::mat::Mat;
use crate::matrixio::SnapshotMatrix;
use crate::scalar::Real;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BasisSource {
    Pod,
    Vandermonde,
}

/// A rank-`r` basis `Ψ_r` (`n × r`). POD bases carry orthonormal modes and
/// strictly positive singular values; Vandermonde bases carry neither.
#[derive(Clone, Debug, PartialEq)]
pub struct TailoredBasis<T> {
    pub modes: Mat<T>,
    pub sigmas: Vec<T>,
    pub mean: Option<Vec<T>>,
    pub source: BasisSource,
}

impl<T: Real> TailoredBasis<T> {
    /// Assembles a basis from stored parts, checking its invariants.
    pub fn from_parts(
        modes: Mat<T>,
        sigmas: Vec<T>,
        mean: Option<Vec<T>>,
        source: BasisSource,
    ) -> Result<Self> {
        ensure_finite(&modes)?;
        let (n, r) = modes.shape();
        if n == 0 || r == 0 {
            return Err(Error::EmptyMatrix { rows: n, cols: r });
        }
        if r > n {
            return Err(Error::dims(format!("basis rank {r} exceeds dimension {n}")));
        }
        if let Some(m) = &mean {
            ensure_finite_vec(m)?;
            if m.len() != n {
                return Err(Error::dims(format!("mean length {} != {n}", m.len())));
            }
        }
        if source == BasisSource::Pod {
            if sigmas.len() != r {
                return Err(Error::dims(format!("{} sigmas for rank {r}", sigmas.len())));
            }
            if sigmas.iter().any(|s| !(*s > T::zero())) {
                return Err(Error::invalid("POD singular values must be strictly positive"));
            }
            if sigmas.windows(2).any(|w| w[1] > w[0]) {
                return Err(Error::invalid("POD singular values must be non-increasing"));
            }
            let tol = T::lit(1e-10).max(T::epsilon() * T::lit(1e3));
            if modes.orthonormality_defect() > tol {
                return Err(Error::invalid("POD modes are not orthonormal"));
            }
        }
        Ok(Self {
            modes,
            sigmas,
            mean,
            source,
        })
    }

    pub fn n(&self) -> usize {
        self.modes.rows()
    }

    pub fn r(&self) -> usize {
        self.modes.cols()
    }

    /// Leading `r` modes.
    pub fn truncate(&self, r: usize) -> Result<Self> {
        if r == 0 || r > self.r() {
            return Err(Error::RankInfeasible(format!(
                "cannot truncate rank-{} basis to {r}",
                self.r()
            )));
        }
        Ok(Self {
            modes: self.modes.leading_cols(r),
            sigmas: self.sigmas.iter().take(r).copied().collect(),
            mean: self.mean.clone(),
            source: self.source,
        })
    }
}

/// How many POD modes to keep.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum RankSpec {
    Fixed(usize),
    /// Smallest `r` whose cumulative singular-value sum reaches this fraction.
    Energy(f64),
    /// Optimal hard threshold for unknown noise level.
    Auto,
}

impl FromStr for RankSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::invalid(format!("rank spec '{s}': expected fixed:N, energy:F or auto"));
        if s == "auto" {
            return Ok(Self::Auto);
        }
        let (kind, value) = s.split_once(':').ok_or_else(bad)?;
        match kind {
            "fixed" => value.parse().map(Self::Fixed).map_err(|_| bad()),
            "energy" => value.parse().map(Self::Energy).map_err(|_| bad()),
            _ => Err(bad()),
        }
    }
}

impl fmt::Display for RankSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Fixed(r) => write!(f, "fixed:{r}"),
            Self::Energy(e) => write!(f, "energy:{e}"),
            Self::Auto => f.write_str("auto"),
        }
    }
}

/// Outcome of the hard-threshold rank rule.
#[derive(Clone, Debug, PartialEq)]
pub struct ThresholdRank<T> {
    pub rank: usize,
    pub beta: T,
    pub omega: T,
    pub median: T,
    pub tau: T,
    /// No singular value exceeded the threshold; the rank was floored at 1.
    pub floored: bool,
}

/// `ω(β) = 0.56β³ − 0.95β² + 1.82β + 1.43`, the unknown-noise threshold
/// coefficient for aspect ratio `β ∈ (0, 1]`.
pub fn omega_unknown_noise<T: Real>(beta: T) -> T {
    ((T::lit(0.56) * beta - T::lit(0.95)) * beta + T::lit(1.82)) * beta + T::lit(1.43)
}

fn median<T: Real>(sorted_desc: &[T]) -> T {
    let k = sorted_desc.len();
    if k % 2 == 1 {
        sorted_desc[k / 2]
    } else {
        (sorted_desc[k / 2 - 1] + sorted_desc[k / 2]) / T::lit(2.0)
    }
}

/// Counts singular values above `ω(β)·median(σ)`, `β = min(n,m)/max(n,m)`.
///
/// The spectrum must be complete (`min(n, m)` values) because the median is
/// taken over all of it.
pub fn hard_threshold_rank<T: Real>(sigmas: &[T], n: usize, m: usize) -> Result<ThresholdRank<T>> {
    if sigmas.is_empty() {
        return Err(Error::invalid("empty singular value list"));
    }
    ensure_finite_vec(sigmas)?;
    if sigmas.windows(2).any(|w| w[1] > w[0]) {
        return Err(Error::invalid("singular values must be non-increasing"));
    }
    if sigmas.len() != n.min(m) {
        return Err(Error::Refused(format!(
            "hard threshold needs the full spectrum of {} values, got {}",
            n.min(m),
            sigmas.len()
        )));
    }
    let beta = T::from_count(n.min(m)) / T::from_count(n.max(m));
    let omega = omega_unknown_noise(beta);
    let med = median(sigmas);
    let tau = omega * med;
    let count = sigmas.iter().filter(|s| **s > tau).count();
    Ok(ThresholdRank {
        rank: count.max(1),
        beta,
        omega,
        median: med,
        tau,
        floored: count == 0,
    })
}

/// Full outcome of POD training.
#[derive(Clone, Debug)]
pub struct PodFit<T> {
    pub basis: TailoredBasis<T>,
    /// Complete singular spectrum of the (centered) data.
    pub spectrum: Vec<T>,
    pub threshold: Option<ThresholdRank<T>>,
}

/// Row-wise mean over snapshots.
pub fn snapshot_mean<T: Real>(x: &Mat<T>) -> Vec<T> {
    let m = T::from_count(x.cols());
    let mut mean = vec![T::zero(); x.rows()];
    for j in 0..x.cols() {
        for (acc, v) in mean.iter_mut().zip(x.col(j)) {
            *acc += *v;
        }
    }
    mean.iter_mut().for_each(|v| *v /= m);
    mean
}

pub fn fit_pod<T: Real>(
    snapshots: &SnapshotMatrix<T>,
    rank: RankSpec,
    mean_subtract: bool,
) -> Result<TailoredBasis<T>> {
    Ok(fit_pod_detailed(snapshots, rank, mean_subtract)?.basis)
}

/// POD by thin SVD of the (optionally mean-subtracted) snapshot matrix.
pub fn fit_pod_detailed<T: Real>(
    snapshots: &SnapshotMatrix<T>,
    rank: RankSpec,
    mean_subtract: bool,
) -> Result<PodFit<T>> {
    snapshots.validate()?;
    let raw = &snapshots.values;
    let (n, m) = raw.shape();
    if rank == RankSpec::Auto && m < 2 {
        return Err(Error::RankInfeasible("auto rank needs at least 2 snapshots".into()));
    }

    let mut x = raw.clone();
    let mean = if mean_subtract {
        let mean = snapshot_mean(raw);
        for j in 0..m {
            for (v, mu) in x.col_mut(j).iter_mut().zip(&mean) {
                *v -= *mu;
            }
        }
        Some(mean)
    } else {
        None
    };

    let full = svd(&x)?;
    let degenerate_tol = T::from_count(n) * T::from_count(m) * T::epsilon() * raw.max_abs();
    let numerical_rank = full.sigmas.iter().filter(|s| **s > degenerate_tol).count();
    if numerical_rank == 0 {
        return Err(if mean_subtract {
            Error::DegenerateAfterCentering
        } else {
            Error::RankInfeasible("snapshot matrix is numerically zero".into())
        });
    }

    let mut threshold = None;
    let r = match rank {
        RankSpec::Fixed(r) => {
            if r == 0 || r > n.min(m) {
                return Err(Error::RankInfeasible(format!("rank {r} outside 1..={}", n.min(m))));
            }
            if r > numerical_rank {
                return Err(Error::RankInfeasible(format!(
                    "rank {r} exceeds numerical rank {numerical_rank}"
                )));
            }
            r
        }
        RankSpec::Energy(f) => {
            if !(f > 0.0 && f <= 1.0) {
                return Err(Error::RankInfeasible(format!("energy fraction {f} not in (0, 1]")));
            }
            let total: T = full.sigmas.iter().copied().sum();
            let target = T::lit(f) * total;
            let mut cum = T::zero();
            let mut r = full.sigmas.len();
            for (i, s) in full.sigmas.iter().enumerate() {
                cum += *s;
                if cum >= target {
                    r = i + 1;
                    break;
                }
            }
            r.min(numerical_rank)
        }
        RankSpec::Auto => {
            let t = hard_threshold_rank(&full.sigmas, n, m)?;
            let r = t.rank.min(numerical_rank);
            threshold = Some(t);
            r
        }
    };

    let basis = TailoredBasis {
        modes: full.modes.leading_cols(r),
        sigmas: full.sigmas[..r].to_vec(),
        mean,
        source: BasisSource::Pod,
    };
    Ok(PodFit {
        basis,
        spectrum: full.sigmas,
        threshold,
    })
}

/// `a = Ψ_rᵀ (x − mean)`, valid for orthonormal (POD) bases only.
pub fn project_coefficients<T: Real>(basis: &TailoredBasis<T>, x: &[T]) -> Result<Vec<T>> {
    if basis.source != BasisSource::Pod {
        return Err(Error::invalid(
            "orthogonal projection requires an orthonormal (POD) basis",
        ));
    }
    if x.len() != basis.n() {
        return Err(Error::dims(format!("state length {} != {}", x.len(), basis.n())));
    }
    ensure_finite_vec(x)?;
    Ok(match &basis.mean {
        Some(mean) => {
            let centered: Vec<T> = x.iter().zip(mean).map(|(a, b)| *a - *b).collect();
            basis.modes.tr_matvec(&centered)
        }
        None => basis.modes.tr_matvec(x),
    })
}

/// `mean + Ψ_r a`.
pub fn synthesize<T: Real>(basis: &TailoredBasis<T>, coeffs: &[T]) -> Vec<T> {
    let mut x = basis.modes.matvec(coeffs);
    if let Some(mean) = &basis.mean {
        x.iter_mut().zip(mean).for_each(|(v, m)| *v += *m);
    }
    x
}

/// Monomial basis `[1 | x | x² | … | x^{r−1}]` on a strictly increasing grid in `[0, 1]`.
pub fn vandermonde_basis<T: Real>(grid: &[T], r: usize) -> Result<TailoredBasis<T>> {
    ensure_finite_vec(grid)?;
    let n = grid.len();
    if r == 0 || r > n {
        return Err(Error::invalid(format!("degree count {r} outside 1..={n}")));
    }
    if grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::invalid("grid must be strictly increasing"));
    }
    if grid[0] < T::zero() || grid[n - 1] > T::one() {
        return Err(Error::invalid("grid must lie in [0, 1]"));
    }
    let modes = Mat::from_fn(n, r, |i, k| grid[i].powi(k as i32));
    Ok(TailoredBasis {
        modes,
        sigmas: Vec::new(),
        mean: None,
        source: BasisSource::Vandermonde,
    })
}

/// `n` equispaced points covering `[0, 1]` including both ends.
pub fn unit_grid<T: Real>(n: usize) -> Vec<T> {
    match n {
        0 => Vec::new(),
        1 => vec![T::zero()],
        _ => {
            let h = T::from_count(n - 1);
            (0..n).map(|i| T::from_count(i) / h).collect()
        }
    }
}
