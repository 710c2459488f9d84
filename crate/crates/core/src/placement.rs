//! Sensor selection: greedy QR pivoting (interpolating and oversampled),
//! DEIM, seeded random draws, exhaustive search, and the experiment-design
//! criteria used to score a selection.

use std::fmt;
use std::str::FromStr;

use rand::Rng;

use crate::basis::{BasisSource, TailoredBasis};
use crate::error::{Error, Result};
use crate::factor::{lu_solve, qr_pivot, singular_values, PivotedQrFactor};
use crate::mat::Mat;
use crate::matrixio::{PlacementMethod, SensorSetRecord};
use crate::rng::{seeded, RNG_LABEL};
use crate::scalar::Real;

/// Largest state dimension for which the `n × n` product `Ψ_r Ψ_rᵀ` is formed.
pub const OVERSAMPLE_MAX_N: usize = 20_000;

/// Largest number of subsets [`brute_force_optimal`] will enumerate.
pub const BRUTE_FORCE_LIMIT: u64 = 1_000_000;

/// Score of a selection `Θ = CΨ_r`, with `M = ΘᵀΘ`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlacementCriterion {
    /// `log |det M|`, maximized.
    DOptimal,
    /// `trace M`, maximized.
    AOptimal,
    /// `σ_min(M)`, maximized.
    EOptimal,
    /// `κ(Θ)`, minimized.
    Condition,
}

impl PlacementCriterion {
    pub const ALL: [Self; 4] = [Self::DOptimal, Self::AOptimal, Self::EOptimal, Self::Condition];

    pub fn minimizes(self) -> bool {
        self == Self::Condition
    }

    fn needs_full_column_rank(self) -> bool {
        matches!(self, Self::DOptimal | Self::EOptimal)
    }
}

impl FromStr for PlacementCriterion {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "d" | "d_optimal" => Ok(Self::DOptimal),
            "a" | "a_optimal" => Ok(Self::AOptimal),
            "e" | "e_optimal" => Ok(Self::EOptimal),
            "cond" | "condition" => Ok(Self::Condition),
            _ => Err(Error::invalid(format!("unknown criterion '{s}' (d|a|e|cond)"))),
        }
    }
}

impl fmt::Display for PlacementCriterion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::DOptimal => "d_optimal",
            Self::AOptimal => "a_optimal",
            Self::EOptimal => "e_optimal",
            Self::Condition => "condition",
        })
    }
}

fn check_modes_nonzero<T: Real>(basis: &TailoredBasis<T>) -> Result<()> {
    for j in 0..basis.r() {
        if basis.modes.col(j).iter().all(|v| *v == T::zero()) {
            return Err(Error::DegenerateBasis(j + 1));
        }
    }
    Ok(())
}

/// Pivoted QR factor behind a QR selection: of `Ψ_rᵀ` when `p = r`, of
/// `Ψ_r Ψ_rᵀ` when `p > r`. The first `p` pivots are the sensors.
pub fn qr_sensor_factor<T: Real>(
    basis: &TailoredBasis<T>,
    p: usize,
) -> Result<(PivotedQrFactor<T>, PlacementMethod)> {
    let (n, r) = (basis.n(), basis.r());
    if p < r {
        return Err(Error::invalid(format!("p = {p} sensors for a rank-{r} basis")));
    }
    if p > n {
        return Err(Error::invalid(format!("p = {p} exceeds state dimension {n}")));
    }
    check_modes_nonzero(basis)?;
    if p == r {
        Ok((qr_pivot(&basis.modes.transpose(), p)?, PlacementMethod::Qr))
    } else {
        if n > OVERSAMPLE_MAX_N {
            return Err(Error::Refused(format!(
                "oversampled placement forms an {n}x{n} matrix; downsample the candidate \
                 locations to at most {OVERSAMPLE_MAX_N}"
            )));
        }
        let gram = basis.modes.matmul(&basis.modes.transpose());
        Ok((qr_pivot(&gram, p)?, PlacementMethod::QrOversampled))
    }
}

/// Greedy QR sensor placement for `p ≥ r` sensors.
pub fn select_qr_sensors<T: Real>(basis: &TailoredBasis<T>, p: usize) -> Result<SensorSetRecord> {
    let (f, method) = qr_sensor_factor(basis, p)?;
    Ok(SensorSetRecord::new(f.pivots, basis.n(), method, basis.r()))
}

fn argmax_abs<T: Real>(v: &[T]) -> (usize, T) {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if x.abs() > v[best].abs() {
            best = i;
        }
    }
    (best, v[best].abs())
}

/// DEIM: each sensor sits at the largest-magnitude entry of the residual left
/// after interpolating the next mode from the previously chosen sensors.
pub fn select_deim_sensors<T: Real>(basis: &TailoredBasis<T>) -> Result<SensorSetRecord> {
    if basis.source != BasisSource::Pod {
        return Err(Error::invalid("DEIM requires a POD basis"));
    }
    check_modes_nonzero(basis)?;
    let r = basis.r();
    let modes = &basis.modes;
    let mut gamma = vec![argmax_abs(modes.col(0)).0];
    for k in 1..r {
        let prev = modes.leading_cols(k);
        let theta = prev.select_rows(&gamma);
        let rhs: Vec<T> = gamma.iter().map(|&g| modes[(g, k)]).collect();
        let c = lu_solve(&theta, &rhs).map_err(|e| match e {
            Error::Singular => Error::DegenerateInterpolant { step: k + 1 },
            other => other,
        })?;
        let fit = prev.matvec(&c);
        let residual: Vec<T> = modes.col(k).iter().zip(&fit).map(|(a, b)| *a - *b).collect();
        let (idx, mag) = argmax_abs(&residual);
        if mag == T::zero() || gamma.contains(&idx) {
            return Err(Error::DegenerateInterpolant { step: k + 1 });
        }
        gamma.push(idx);
    }
    Ok(SensorSetRecord::new(gamma, basis.n(), PlacementMethod::Deim, r))
}

/// `p` distinct indices drawn uniformly without replacement (partial
/// Fisher–Yates on a seeded ChaCha8 stream), in draw order.
///
/// The record's `r` is set to `p`; callers placing against a basis overwrite it.
pub fn select_random_sensors(n: usize, p: usize, seed: u64) -> Result<SensorSetRecord> {
    if p == 0 || p > n {
        return Err(Error::invalid(format!("cannot draw {p} sensors from {n} locations")));
    }
    let mut rng = seeded(seed);
    let mut pool: Vec<usize> = (0..n).collect();
    for i in 0..p {
        let j = rng.random_range(i..n);
        pool.swap(i, j);
    }
    pool.truncate(p);
    let mut rec = SensorSetRecord::new(pool, n, PlacementMethod::Random, p);
    rec.seed = Some(seed);
    rec.rng = Some(RNG_LABEL.into());
    Ok(rec)
}

/// `Θ = CΨ_r`: the rows of the modes at the sensor locations.
pub fn measurement_matrix<T: Real>(
    basis: &TailoredBasis<T>,
    sensors: &SensorSetRecord,
) -> Result<Mat<T>> {
    if sensors.n != basis.n() {
        return Err(Error::dims(format!(
            "sensor set is for n = {} but basis has n = {}",
            sensors.n,
            basis.n()
        )));
    }
    sensors.validate()?;
    Ok(basis.modes.select_rows(&sensors.indices))
}

/// Criterion value of a measurement matrix `Θ`.
///
/// `d`: `log det ΘᵀΘ` (`−∞` when singular); `a`: `trace ΘᵀΘ`; `e`:
/// `σ_min(ΘᵀΘ)`; condition: `κ(Θ)` (`+∞` when singular).
pub fn criterion_value<T: Real>(theta: &Mat<T>, criterion: PlacementCriterion) -> Result<T> {
    let (p, r) = theta.shape();
    if criterion.needs_full_column_rank() && p < r {
        return Err(Error::dims(format!("{criterion} needs p >= r, got p = {p}, r = {r}")));
    }
    if criterion == PlacementCriterion::AOptimal {
        return Ok(theta.as_slice().iter().map(|v| *v * *v).sum());
    }
    let s = singular_values(theta)?;
    let smax = s[0];
    let smin = *s.last().unwrap();
    let singular = !(smin > T::from_count(p.max(r)) * T::epsilon() * smax);
    Ok(match criterion {
        PlacementCriterion::DOptimal => {
            if singular {
                T::neg_infinity()
            } else {
                s.iter().map(|v| v.ln()).sum::<T>() * T::lit(2.0)
            }
        }
        PlacementCriterion::EOptimal => {
            if p < r {
                T::zero()
            } else {
                smin * smin
            }
        }
        PlacementCriterion::Condition => {
            if smax == T::zero() || !(smin > T::lit(1e-300) * smax) {
                T::infinity()
            } else {
                smax / smin
            }
        }
        PlacementCriterion::AOptimal => unreachable!(),
    })
}

pub fn evaluate_criterion<T: Real>(
    basis: &TailoredBasis<T>,
    sensors: &SensorSetRecord,
    criterion: PlacementCriterion,
) -> Result<T> {
    let theta = measurement_matrix(basis, sensors)?;
    criterion_value(&theta, criterion)
}

/// `C(n, p)`, saturating.
pub fn binomial(n: usize, p: usize) -> u64 {
    if p > n {
        return 0;
    }
    let p = p.min(n - p);
    let mut acc: u128 = 1;
    for i in 0..p {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
        if acc > u64::MAX as u128 {
            return u64::MAX;
        }
    }
    acc as u64
}

fn better<T: Real>(candidate: T, incumbent: T, minimize: bool) -> bool {
    if minimize {
        candidate < incumbent
    } else {
        candidate > incumbent
    }
}

/// Exhaustive search over all `p`-subsets in lexicographic order; ties keep
/// the lexicographically smallest subset.
pub fn brute_force_optimal<T: Real>(
    basis: &TailoredBasis<T>,
    p: usize,
    criterion: PlacementCriterion,
) -> Result<SensorSetRecord> {
    let (n, r) = (basis.n(), basis.r());
    if p == 0 || p > n {
        return Err(Error::invalid(format!("p = {p} outside 1..={n}")));
    }
    if basis.source == BasisSource::Pod && criterion != PlacementCriterion::Condition && p < r {
        return Err(Error::invalid(format!("{criterion} search needs p >= r = {r}")));
    }
    let count = binomial(n, p);
    if count > BRUTE_FORCE_LIMIT {
        return Err(Error::CombinatorialGuard {
            n,
            p,
            limit: BRUTE_FORCE_LIMIT,
        });
    }
    let minimize = criterion.minimizes();
    let mut subset: Vec<usize> = (0..p).collect();
    let mut best: Option<(T, Vec<usize>)> = None;
    loop {
        let theta = basis.modes.select_rows(&subset);
        let value = criterion_value(&theta, criterion)?;
        let take = match &best {
            None => true,
            Some((b, _)) => better(value, *b, minimize),
        };
        if take {
            best = Some((value, subset.clone()));
        }
        // Next combination in lexicographic order.
        let mut i = p;
        loop {
            if i == 0 {
                let (_, indices) = best.expect("at least one subset");
                return Ok(SensorSetRecord::new(indices, n, PlacementMethod::BruteForce, r));
            }
            i -= 1;
            if subset[i] < n - p + i {
                subset[i] += 1;
                for k in i + 1..p {
                    subset[k] = subset[k - 1] + 1;
                }
                break;
            }
        }
    }
}
