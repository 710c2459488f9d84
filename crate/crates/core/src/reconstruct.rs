//! Gappy reconstruction from point measurements, sensor-noise modelling, and
//! the benchmark sweeps built on top of them.
//!
//! Error metric used throughout: relative 2-norm error per snapshot,
//! `‖x − x̂‖₂ / ‖x‖₂`, aggregated over a test set by mean and sample standard
//! deviation.

use std::fmt;
use std::str::FromStr;

use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::basis::{fit_pod, synthesize, unit_grid, vandermonde_basis, RankSpec, TailoredBasis};
use crate::error::{Error, Result};
use crate::factor::{
    condition_number, ensure_finite_vec, least_squares_pinv, lu_solve, singular_values,
};
use crate::mat::Mat;
use crate::matrixio::{SensorSetRecord, SnapshotMatrix};
use crate::placement::{
    measurement_matrix, select_deim_sensors, select_qr_sensors, select_random_sensors,
};
use crate::rng::{derive_seed, seeded};
use crate::scalar::{norm2, Real};

pub const ERROR_METRIC: &str =
    "relative 2-norm error per snapshot ||x - x_hat||_2 / ||x||_2; mean and sample std over the test set";

#[derive(Clone, Debug)]
pub struct ReconstructionResult<T> {
    pub coeffs: Vec<T>,
    pub state: Vec<T>,
    pub rel_error: Option<T>,
    pub kappa: T,
    pub sensors: SensorSetRecord,
}

/// I.i.d. zero-mean Gaussian sensor noise with standard deviation `eta`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct NoiseModel {
    pub eta: f64,
    pub seed: u64,
}

impl NoiseModel {
    pub fn new(eta: f64, seed: u64) -> Result<Self> {
        if !(eta >= 0.0) || !eta.is_finite() {
            return Err(Error::invalid(format!("noise level {eta} must be finite and >= 0")));
        }
        Ok(Self { eta, seed })
    }
}

/// `‖x − x̂‖ / ‖x‖`; the absolute error when `x = 0`.
pub fn relative_error<T: Real>(truth: &[T], estimate: &[T]) -> T {
    let diff: Vec<T> = truth.iter().zip(estimate).map(|(a, b)| *a - *b).collect();
    let num = norm2(&diff);
    let den = norm2(truth);
    if den == T::zero() {
        num
    } else {
        num / den
    }
}

/// Estimates basis coefficients from `p ≥ r` point measurements by
/// least squares on `Θ = CΨ_r`, and lifts them back to the full state.
///
/// When the basis stores a mean, `y` holds raw measurements and the mean's
/// sensor entries are removed before the solve.
pub fn gappy_reconstruct<T: Real>(
    basis: &TailoredBasis<T>,
    sensors: &SensorSetRecord,
    y: &[T],
    truth: Option<&[T]>,
) -> Result<ReconstructionResult<T>> {
    let (n, r) = (basis.n(), basis.r());
    let p = sensors.p();
    if p < r {
        return Err(Error::invalid(format!("{p} sensors cannot resolve {r} modes")));
    }
    if y.len() != p {
        return Err(Error::dims(format!("{} measurements for {p} sensors", y.len())));
    }
    ensure_finite_vec(y)?;
    if let Some(t) = truth {
        if t.len() != n {
            return Err(Error::dims(format!("truth length {} != {n}", t.len())));
        }
        ensure_finite_vec(t)?;
    }
    let theta = measurement_matrix(basis, sensors)?;
    let sv = singular_values(&theta)?;
    let (smax, smin) = (sv[0], *sv.last().unwrap());
    let rank_deficient = !(smin > T::from_count(p.max(r)) * T::epsilon() * smax);
    if p == r && rank_deficient {
        return Err(Error::SingularInterpolant);
    }
    let kappa = if smax == T::zero() || !(smin > T::lit(1e-300) * smax) {
        T::infinity()
    } else {
        smax / smin
    };

    let centered: Vec<T> = match &basis.mean {
        Some(mean) => y
            .iter()
            .zip(&sensors.indices)
            .map(|(v, &i)| *v - mean[i])
            .collect(),
        None => y.to_vec(),
    };
    let coeffs = least_squares_pinv(&theta, &centered)?;
    let state = synthesize(basis, &coeffs);
    let rel_error = truth.map(|t| relative_error(t, &state));
    Ok(ReconstructionResult {
        coeffs,
        state,
        rel_error,
        kappa,
        sensors: sensors.clone(),
    })
}

/// `y + ξ`, `ξ ~ N(0, η²)` i.i.d. from the model's seeded stream. `η = 0`
/// returns `y` unchanged.
pub fn add_measurement_noise<T: Real>(y: &[T], model: &NoiseModel) -> Result<Vec<T>> {
    ensure_finite_vec(y)?;
    if model.eta == 0.0 {
        return Ok(y.to_vec());
    }
    let mut rng = seeded(model.seed);
    Ok(y.iter()
        .map(|v| {
            let z: f64 = StandardNormal.sample(&mut rng);
            *v + T::lit(model.eta * z)
        })
        .collect())
}

/// Monte-Carlo check of the estimator covariance `η²(ΘᵀΘ)⁻¹`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CovarianceReport {
    pub eta: f64,
    pub trials: usize,
    pub empirical_cov_trace: f64,
    pub predicted_trace: f64,
    /// Empirical over predicted; 1 by convention when `η = 0`.
    pub ratio: f64,
}

/// Measures `y = Θa₀ + ξ` repeatedly, estimates `â` by least squares, and
/// compares the trace of the empirical covariance of `â − a₀` (known zero
/// mean) with `η²·trace((ΘᵀΘ)⁻¹)`.
pub fn coefficient_covariance_theta<T: Real>(
    theta: &Mat<T>,
    eta: f64,
    trials: usize,
    seed: u64,
) -> Result<CovarianceReport> {
    let (p, r) = theta.shape();
    if p < r {
        return Err(Error::invalid(format!("{p} sensors cannot resolve {r} modes")));
    }
    if trials == 0 {
        return Err(Error::invalid("at least one trial is required"));
    }
    NoiseModel::new(eta, seed)?;
    let gram = theta.tr_matmul(theta);
    let mut predicted = 0.0;
    for k in 0..r {
        let mut e = vec![T::zero(); r];
        e[k] = T::one();
        let col = lu_solve(&gram, &e).map_err(|_| Error::Singular)?;
        predicted += col[k].as_f64();
    }
    predicted *= eta * eta;

    if eta == 0.0 {
        return Ok(CovarianceReport {
            eta,
            trials,
            empirical_cov_trace: 0.0,
            predicted_trace: 0.0,
            ratio: 1.0,
        });
    }

    let mut rng = seeded(derive_seed(seed, 0));
    let a0: Vec<T> = (0..r)
        .map(|_| T::lit(StandardNormal.sample(&mut rng)))
        .collect();
    let clean = theta.matvec(&a0);
    let mut sum_sq = 0.0;
    for t in 0..trials {
        let noisy = add_measurement_noise(&clean, &NoiseModel { eta, seed: derive_seed(seed, 1 + t as u64) })?;
        let est = least_squares_pinv(theta, &noisy)?;
        sum_sq += est
            .iter()
            .zip(&a0)
            .map(|(a, b)| (*a - *b).as_f64().powi(2))
            .sum::<f64>();
    }
    let empirical = sum_sq / trials as f64;
    Ok(CovarianceReport {
        eta,
        trials,
        empirical_cov_trace: empirical,
        predicted_trace: predicted,
        ratio: empirical / predicted,
    })
}

pub fn coefficient_covariance_check<T: Real>(
    basis: &TailoredBasis<T>,
    sensors: &SensorSetRecord,
    eta: f64,
    trials: usize,
    seed: u64,
) -> Result<CovarianceReport> {
    let theta = measurement_matrix(basis, sensors)?;
    coefficient_covariance_theta(&theta, eta, trials, seed)
}

/// Placement used by a rank sweep.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepMethod {
    Qr,
    Deim,
    Random,
    /// Full-state projection `Ψ_rΨ_rᵀx`: the noiseless floor.
    PodProjection,
}

impl FromStr for SweepMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "qr" => Ok(Self::Qr),
            "deim" => Ok(Self::Deim),
            "random" => Ok(Self::Random),
            "pod" | "pod_projection" => Ok(Self::PodProjection),
            _ => Err(Error::invalid(format!("unknown sweep method '{s}' (qr|deim|random|pod)"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PRule {
    PEqualsR,
    PEquals2R,
}

impl PRule {
    pub fn sensors_for(self, r: usize) -> usize {
        match self {
            Self::PEqualsR => r,
            Self::PEquals2R => 2 * r,
        }
    }
}

impl FromStr for PRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "r" | "p=r" | "p_equals_r" => Ok(Self::PEqualsR),
            "2r" | "p=2r" | "p_equals_2r" => Ok(Self::PEquals2R),
            _ => Err(Error::invalid(format!("unknown p rule '{s}' (r|2r)"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SweepOptions {
    pub mean_subtract: bool,
    pub seed: u64,
}

impl Default for SweepOptions {
    fn default() -> Self {
        Self {
            mean_subtract: true,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RankRow {
    pub r: usize,
    pub p: usize,
    pub mean_rel_error: f64,
    pub std_rel_error: f64,
}

fn mean_std(errors: &[f64]) -> (f64, f64) {
    let k = errors.len() as f64;
    let mean = errors.iter().sum::<f64>() / k;
    if errors.len() < 2 {
        return (mean, 0.0);
    }
    let var = errors.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / (k - 1.0);
    (mean, var.sqrt())
}

fn check_pair<T: Real>(train: &SnapshotMatrix<T>, test: &SnapshotMatrix<T>) -> Result<()> {
    train.validate()?;
    test.validate()?;
    if train.rows() != test.rows() {
        return Err(Error::dims(format!(
            "train has n = {} but test has n = {}",
            train.rows(),
            test.rows()
        )));
    }
    Ok(())
}

fn place<T: Real>(
    basis: &TailoredBasis<T>,
    method: SweepMethod,
    p: usize,
    seed: u64,
) -> Result<Option<SensorSetRecord>> {
    Ok(match method {
        SweepMethod::Qr => Some(select_qr_sensors(basis, p)?),
        SweepMethod::Deim => {
            if p != basis.r() {
                return Err(Error::invalid("DEIM places exactly r sensors"));
            }
            Some(select_deim_sensors(basis)?)
        }
        SweepMethod::Random => {
            let mut s = select_random_sensors(basis.n(), p, seed)?;
            s.r = basis.r();
            Some(s)
        }
        SweepMethod::PodProjection => None,
    })
}

/// Full-state POD approximation `mean + Ψ_rΨ_rᵀ(x − mean)` of (possibly noisy) `x`.
fn pod_projection<T: Real>(basis: &TailoredBasis<T>, x: &[T]) -> Vec<T> {
    let centered: Vec<T> = match &basis.mean {
        Some(m) => x.iter().zip(m).map(|(a, b)| *a - *b).collect(),
        None => x.to_vec(),
    };
    synthesize(basis, &basis.modes.tr_matvec(&centered))
}

/// Reconstruction error of each test snapshot for one placement, with
/// optional measurement noise.
fn snapshot_errors<T: Real>(
    basis: &TailoredBasis<T>,
    sensors: Option<&SensorSetRecord>,
    test: &SnapshotMatrix<T>,
    noise: Option<(f64, u64)>,
) -> Result<Vec<f64>> {
    let mut errors = Vec::with_capacity(test.cols());
    for j in 0..test.cols() {
        let x = test.values.col(j);
        let measured: Vec<T> = match sensors {
            Some(s) => s.indices.iter().map(|&i| x[i]).collect(),
            None => x.to_vec(),
        };
        let y = match noise {
            Some((eta, seed)) => {
                add_measurement_noise(&measured, &NoiseModel { eta, seed: derive_seed(seed, j as u64) })?
            }
            None => measured,
        };
        let estimate = match sensors {
            Some(s) => gappy_reconstruct(basis, s, &y, None)?.state,
            None => pod_projection(basis, &y),
        };
        errors.push(relative_error(x, &estimate).as_f64());
    }
    Ok(errors)
}

/// Reconstruction error against POD rank: for each `r`, train a rank-`r`
/// POD basis, place sensors, and reconstruct every test snapshot.
pub fn sweep_rank<T: Real>(
    train: &SnapshotMatrix<T>,
    test: &SnapshotMatrix<T>,
    method: SweepMethod,
    r_values: &[usize],
    p_rule: PRule,
    options: &SweepOptions,
) -> Result<Vec<RankRow>> {
    check_pair(train, test)?;
    if r_values.is_empty() {
        return Err(Error::invalid("no ranks to sweep"));
    }
    let r_max = *r_values.iter().max().unwrap();
    let full = fit_pod(train, RankSpec::Fixed(r_max), options.mean_subtract)?;
    let mut rows = Vec::with_capacity(r_values.len());
    for &r in r_values {
        let basis = full.truncate(r)?;
        let p = match method {
            SweepMethod::PodProjection => basis.n(),
            _ => p_rule.sensors_for(r),
        };
        let sensors = place(&basis, method, p, derive_seed(options.seed, r as u64))?;
        let errors = snapshot_errors(&basis, sensors.as_ref(), test, None)?;
        let (mean, std) = mean_std(&errors);
        rows.push(RankRow {
            r,
            p,
            mean_rel_error: mean,
            std_rel_error: std,
        });
    }
    Ok(rows)
}

/// Placement used by a noise sweep.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseMethod {
    /// QR pivots, `p = r`.
    Qr,
    /// Oversampled QR pivots, `p = 2r`.
    Qr2r,
    Deim,
    PodProjection,
}

impl NoiseMethod {
    pub const ALL: [Self; 4] = [Self::Qr, Self::Qr2r, Self::Deim, Self::PodProjection];

    fn as_sweep(self) -> (SweepMethod, PRule) {
        match self {
            Self::Qr => (SweepMethod::Qr, PRule::PEqualsR),
            Self::Qr2r => (SweepMethod::Qr, PRule::PEquals2R),
            Self::Deim => (SweepMethod::Deim, PRule::PEqualsR),
            Self::PodProjection => (SweepMethod::PodProjection, PRule::PEqualsR),
        }
    }
}

impl FromStr for NoiseMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "qr" => Ok(Self::Qr),
            "qr2r" | "qr_2r" => Ok(Self::Qr2r),
            "deim" => Ok(Self::Deim),
            "pod" | "pod_projection" => Ok(Self::PodProjection),
            _ => Err(Error::invalid(format!("unknown noise-sweep method '{s}' (qr|qr2r|deim|pod)"))),
        }
    }
}

impl fmt::Display for NoiseMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Qr => "qr",
            Self::Qr2r => "qr_2r",
            Self::Deim => "deim",
            Self::PodProjection => "pod_projection",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NoiseRow {
    pub method: NoiseMethod,
    pub r: usize,
    pub p: usize,
    pub eta: f64,
    pub mean_rel_error: f64,
}

/// Reconstruction error against sensor noise level at a fixed rank `r`.
///
/// Noise touches test measurements only. Snapshot `j` at noise level index
/// `e` draws from the same stream for every method, so a `p = r` draw is a
/// prefix of the `p = 2r` draw. The POD projection baseline observes the
/// whole (noisy) state.
pub fn sweep_noise<T: Real>(
    train: &SnapshotMatrix<T>,
    test: &SnapshotMatrix<T>,
    methods: &[NoiseMethod],
    r: usize,
    eta_values: &[f64],
    options: &SweepOptions,
) -> Result<Vec<NoiseRow>> {
    check_pair(train, test)?;
    for &eta in eta_values {
        NoiseModel::new(eta, 0)?;
    }
    let basis = fit_pod(train, RankSpec::Fixed(r), options.mean_subtract)?;
    let mut rows = Vec::with_capacity(methods.len() * eta_values.len());
    for &method in methods {
        let (sweep, rule) = method.as_sweep();
        let p = match sweep {
            SweepMethod::PodProjection => basis.n(),
            _ => rule.sensors_for(r),
        };
        let sensors = place(&basis, sweep, p, options.seed)?;
        for (e, &eta) in eta_values.iter().enumerate() {
            let noise = (eta > 0.0).then(|| (eta, derive_seed(options.seed, 1000 + e as u64)));
            let errors = snapshot_errors(&basis, sensors.as_ref(), test, noise)?;
            rows.push(NoiseRow {
                method,
                r,
                p,
                eta,
                mean_rel_error: mean_std(&errors).0,
            });
        }
    }
    Ok(rows)
}

/// Whether each method's error is non-decreasing in `η` up to a relative
/// Monte-Carlo slack (`0.05` = 5%).
pub fn noise_rows_monotone(rows: &[NoiseRow], slack: f64) -> bool {
    let mut methods: Vec<NoiseMethod> = rows.iter().map(|r| r.method).collect();
    methods.dedup();
    methods.iter().all(|m| {
        let mut series: Vec<&NoiseRow> = rows.iter().filter(|r| r.method == *m).collect();
        series.sort_by(|a, b| a.eta.partial_cmp(&b.eta).unwrap());
        series
            .windows(2)
            .all(|w| w[1].mean_rel_error >= w[0].mean_rel_error * (1.0 - slack))
    })
}

/// How snapshots are divided into training and test sets.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum SplitRule {
    /// Leading snapshots train, trailing snapshots test.
    Chronological,
    /// Every `k`-th snapshot (`k−1, 2k−1, …`, 0-based) goes to test.
    Interleave { k: usize },
    /// Seeded shuffle, then a chronological cut.
    Random { seed: u64 },
}

impl FromStr for SplitRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::invalid(format!("split '{s}': expected chrono, interleave:K or random:SEED"));
        if s == "chrono" || s == "chronological" {
            return Ok(Self::Chronological);
        }
        let (kind, value) = s.split_once(':').ok_or_else(bad)?;
        match kind {
            "interleave" => {
                let k: usize = value.parse().map_err(|_| bad())?;
                if k < 2 {
                    return Err(Error::invalid("interleave period must be at least 2"));
                }
                Ok(Self::Interleave { k })
            }
            "random" => Ok(Self::Random {
                seed: value.parse().map_err(|_| bad())?,
            }),
            _ => Err(bad()),
        }
    }
}

/// Splits columns into `(train, test)`. `test_fraction` applies to the
/// chronological and random rules.
pub fn split_snapshots<T: Real>(
    snaps: &SnapshotMatrix<T>,
    rule: SplitRule,
    test_fraction: f64,
) -> Result<(SnapshotMatrix<T>, SnapshotMatrix<T>)> {
    let m = snaps.cols();
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::invalid(format!("test fraction {test_fraction} not in (0, 1)")));
    }
    let (train_idx, test_idx): (Vec<usize>, Vec<usize>) = match rule {
        SplitRule::Chronological | SplitRule::Random { .. } => {
            let mut order: Vec<usize> = (0..m).collect();
            if let SplitRule::Random { seed } = rule {
                use rand::seq::SliceRandom;
                order.shuffle(&mut seeded(seed));
            }
            let n_test = ((m as f64) * test_fraction).round() as usize;
            let cut = m - n_test.clamp(1, m.saturating_sub(1).max(1));
            let (a, b) = order.split_at(cut);
            (a.to_vec(), b.to_vec())
        }
        SplitRule::Interleave { k } => (0..m).partition(|j| j % k != k - 1),
    };
    if train_idx.is_empty() || test_idx.is_empty() {
        return Err(Error::invalid(format!("split of {m} snapshots leaves an empty side")));
    }
    Ok((snaps.select_snapshots(&train_idx)?, snaps.select_snapshots(&test_idx)?))
}

/// Interpolation of `|x² − 1/2|` on `[0, 1]` through QR-pivot nodes versus
/// equispaced nodes in the monomial basis.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FeketeReport {
    pub degree: usize,
    pub grid: usize,
    /// 1-based grid indices of the QR-selected nodes.
    pub qr_points: Vec<usize>,
    pub equispaced_points: Vec<usize>,
    pub qr_sup_error: f64,
    pub equispaced_sup_error: f64,
    pub qr_kappa: f64,
    pub equispaced_kappa: f64,
}

pub fn fekete_target(x: f64) -> f64 {
    (x * x - 0.5).abs()
}

pub fn fekete_comparison(degree: usize, grid_n: usize) -> Result<FeketeReport> {
    let r = degree + 1;
    if grid_n < r {
        return Err(Error::invalid(format!("grid of {grid_n} points cannot carry degree {degree}")));
    }
    let grid = unit_grid::<f64>(grid_n);
    let basis = vandermonde_basis(&grid, r)?;
    let f: Vec<f64> = grid.iter().map(|&x| fekete_target(x)).collect();

    let interpolate = |sensors: &SensorSetRecord| -> Result<(f64, f64)> {
        let y: Vec<f64> = sensors.indices.iter().map(|&i| f[i]).collect();
        // Square interpolation: pivoted LU keeps the node residual small even
        // when Θ is far too ill-conditioned for the gappy singularity guard.
        let theta = measurement_matrix(&basis, sensors)?;
        let coeffs = match lu_solve(&theta, &y) {
            Err(Error::Singular) => least_squares_pinv(&theta, &y)?,
            other => other?,
        };
        let state = synthesize(&basis, &coeffs);
        let sup = f
            .iter()
            .zip(&state)
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        Ok((sup, condition_number(&theta)?))
    };

    let qr = select_qr_sensors(&basis, r)?;
    let (qr_sup, qr_kappa) = interpolate(&qr)?;

    let equi_idx: Vec<usize> = if degree == 0 {
        vec![0]
    } else {
        (0..r)
            .map(|i| ((i * (grid_n - 1)) as f64 / degree as f64).round() as usize)
            .collect()
    };
    let equi = SensorSetRecord::new(
        equi_idx,
        grid_n,
        crate::matrixio::PlacementMethod::BruteForce,
        r,
    );
    let (eq_sup, eq_kappa) = interpolate(&equi)?;

    Ok(FeketeReport {
        degree,
        grid: grid_n,
        qr_points: qr.indices.iter().map(|i| i + 1).collect(),
        equispaced_points: equi.indices.iter().map(|i| i + 1).collect(),
        qr_sup_error: qr_sup,
        equispaced_sup_error: eq_sup,
        qr_kappa,
        equispaced_kappa: eq_kappa,
    })
}
