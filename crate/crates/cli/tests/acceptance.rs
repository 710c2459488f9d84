//! Acceptance suite. Each criterion prints one PASS/FAIL line; the process
//! exits non-zero if any criterion fails.
//!
//! Run alone with `cargo test -p sparse-sensing-cli --test acceptance`.

use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use sparse_sensing::basis::{fit_pod, hard_threshold_rank, BasisSource, RankSpec, TailoredBasis};
use sparse_sensing::csrecover::{basic_solution, three_tone_demo, SamplingScheme};
use sparse_sensing::factor::{condition_number, qr_pivot, singular_values};
use sparse_sensing::matrixio::save_matrix_auto;
use sparse_sensing::placement::{
    brute_force_optimal, evaluate_criterion, measurement_matrix, qr_sensor_factor,
    select_qr_sensors, select_random_sensors, PlacementCriterion,
};
use sparse_sensing::reconstruct::{
    add_measurement_noise, coefficient_covariance_theta, fekete_comparison, gappy_reconstruct,
    NoiseModel,
};
use sparse_sensing::rng::derive_seed;
use sparse_sensing::{Matrix, Snapshots};

// ---------------------------------------------------------------- oracles

fn gaussian(rows: usize, cols: usize, seed: u64) -> Matrix {
    let mut g = ChaCha8Rng::seed_from_u64(seed);
    Matrix::from_fn(rows, cols, |_, _| StandardNormal.sample(&mut g))
}

fn gaussian_vec(n: usize, seed: u64) -> Vec<f64> {
    gaussian(n, 1, seed).into_vec()
}

/// Orthonormal columns by twice-iterated modified Gram-Schmidt.
fn orthonormal(rows: usize, cols: usize, seed: u64) -> Matrix {
    let a = gaussian(rows, cols, seed);
    let mut q: Vec<Vec<f64>> = Vec::with_capacity(cols);
    for j in 0..cols {
        let mut v = a.col(j).to_vec();
        for _ in 0..2 {
            for u in &q {
                let d: f64 = u.iter().zip(&v).map(|(x, y)| x * y).sum();
                v.iter_mut().zip(u).for_each(|(vi, ui)| *vi -= d * ui);
            }
        }
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        v.iter_mut().for_each(|x| *x /= n);
        q.push(v);
    }
    Matrix::from_cols(&q)
}

/// `(sign, log|det|)` by Gaussian elimination with partial pivoting.
fn log_det_oracle(a: &Matrix) -> (f64, f64) {
    let n = a.rows();
    let mut m: Vec<Vec<f64>> = (0..n).map(|i| a.row(i)).collect();
    let (mut sign, mut log) = (1.0, 0.0);
    for k in 0..n {
        let piv = (k..n).max_by(|&x, &y| m[x][k].abs().total_cmp(&m[y][k].abs())).unwrap();
        if m[piv][k] == 0.0 {
            return (0.0, f64::NEG_INFINITY);
        }
        if piv != k {
            m.swap(piv, k);
            sign = -sign;
        }
        sign *= m[k][k].signum();
        log += m[k][k].abs().ln();
        for i in k + 1..n {
            let l = m[i][k] / m[k][k];
            for j in k..n {
                m[i][j] -= l * m[k][j];
            }
        }
    }
    (sign, log)
}

fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs())
}

fn rel_l2(truth: &[f64], est: &[f64]) -> f64 {
    let num: f64 = truth.iter().zip(est).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
    num / truth.iter().map(|a| a * a).sum::<f64>().sqrt()
}

fn pod_basis(modes: Matrix) -> TailoredBasis<f64> {
    let r = modes.cols();
    let sigmas = (0..r).map(|i| (r - i) as f64).collect();
    TailoredBasis::from_parts(modes, sigmas, None, BasisSource::Pod).unwrap()
}

/// Columns `Σ_i σ_i g_ij u_i` for a fixed orthonormal `U`, `g` standard normal.
fn spectral_snapshots(u: &Matrix, sigmas: &[f64], m: usize, seed: u64) -> Matrix {
    let mut g = gaussian(sigmas.len(), m, seed);
    for j in 0..m {
        for (i, s) in sigmas.iter().enumerate() {
            g[(i, j)] *= s;
        }
    }
    u.matmul(&g)
}

// ---------------------------------------------------------------- criteria

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn ac1_qr_laws() -> Outcome {
    let mut monotone = true;
    let mut dominant = true;
    let mut worst_det = 0.0f64;
    for seed in 0..100u64 {
        let b = gaussian(200, 50, seed);
        let qr = qr_pivot(&b, 50).unwrap();
        monotone &= qr.rdiag.windows(2).all(|w| w[1] <= w[0]);
        let r = &qr.r_upper;
        for i in 0..r.rows() {
            let rii = r[(i, i)].powi(2);
            for k in i..r.cols() {
                let tail: f64 = (i..=k.min(r.rows() - 1)).map(|j| r[(j, k)].powi(2)).sum();
                dominant &= rii >= tail * (1.0 - 1e-12);
            }
        }

        let sq = gaussian(50, 50, 10_000 + seed);
        let qr = qr_pivot(&sq, 50).unwrap();
        let log_prod: f64 = qr.rdiag.iter().map(|d| d.ln()).sum();
        let (_, log_det) = log_det_oracle(&sq);
        worst_det = worst_det.max((log_prod - log_det).exp_m1().abs());
    }
    outcome(
        monotone && dominant && worst_det <= 1e-10,
        format!("monotone={monotone} dominance={dominant} max rel |det| err={worst_det:.2e}"),
    )
}

fn ac2_volume_identity() -> Outcome {
    let mut worst = 0.0f64;
    for seed in 0..100u64 {
        let basis = pod_basis(orthonormal(200, 10, seed));
        let (qr, _) = qr_sensor_factor(&basis, 10).unwrap();
        let sensors = select_qr_sensors(&basis, 10).unwrap();
        let theta = measurement_matrix(&basis, &sensors).unwrap();
        let prod: f64 = qr.rdiag[..10].iter().product();
        let (_, log_det) = log_det_oracle(&theta);
        worst = worst.max(rel_err(log_det.exp(), prod));
    }
    outcome(worst <= 1e-10, format!("max rel err={worst:.2e}"))
}

fn ac3_brute_force() -> Outcome {
    let mut wins = 0;
    let mut ratios = Vec::new();
    for trial in 0..100u64 {
        let basis = pod_basis(orthonormal(12, 3, 500 + trial));
        let d = |s: &sparse_sensing::matrixio::SensorSetRecord| {
            evaluate_criterion(&basis, s, PlacementCriterion::DOptimal).unwrap()
        };
        let qr = d(&select_qr_sensors(&basis, 3).unwrap());
        let mut draws: Vec<f64> = (0..1000u64)
            .map(|k| d(&select_random_sensors(12, 3, derive_seed(trial, k)).unwrap()))
            .collect();
        draws.sort_by(f64::total_cmp);
        let median = 0.5 * (draws[499] + draws[500]);
        wins += (qr >= median) as usize;
        let best = d(&brute_force_optimal(&basis, 3, PlacementCriterion::DOptimal).unwrap());
        ratios.push((qr - best).exp());
    }
    let mean = ratios.iter().sum::<f64>() / ratios.len() as f64;
    let min = ratios.iter().copied().fold(f64::INFINITY, f64::min);
    outcome(
        wins == 100,
        format!("qr >= median in {wins}/100; det(QR)/det(opt) mean={mean:.4} min={min:.4}"),
    )
}

fn ac4_exact_recovery() -> Outcome {
    let u = orthonormal(1000, 10, 4);
    let sigmas: Vec<f64> = (1..=10).map(|i| 10.0 / i as f64).collect();
    let train = Snapshots::new(spectral_snapshots(&u, &sigmas, 200, 41)).unwrap();
    let test = spectral_snapshots(&u, &sigmas, 20, 42);
    let basis = fit_pod(&train, RankSpec::Fixed(10), false).unwrap();
    let sensors = select_qr_sensors(&basis, 10).unwrap();
    let errs: Vec<f64> = (0..test.cols())
        .map(|j| {
            let x = test.col(j);
            let y: Vec<f64> = sensors.indices.iter().map(|&i| x[i]).collect();
            let rec = gappy_reconstruct(&basis, &sensors, &y, None).unwrap();
            rel_l2(x, &rec.state)
        })
        .collect();
    let mean = errs.iter().sum::<f64>() / errs.len() as f64;
    outcome(mean <= 1e-8, format!("mean rel err={mean:.2e}"))
}

fn ac5_noise_variance() -> Outcome {
    let theta = gaussian(20, 5, 2024);
    let rep = coefficient_covariance_theta(&theta, 0.1, 10_000, 7).unwrap();
    // Independent closed form: trace((ΘᵀΘ)⁻¹) = Σ 1/σ_i².
    let s = singular_values(&theta).unwrap();
    let closed = 0.01 * s.iter().map(|v| 1.0 / (v * v)).sum::<f64>();
    let ratio = rep.empirical_cov_trace / closed;
    outcome(
        (0.9..=1.1).contains(&ratio) && rel_err(rep.predicted_trace, closed) < 1e-9,
        format!("empirical/predicted={ratio:.4}"),
    )
}

fn ac6_oversampling() -> Outcome {
    let (n, r, modes, eta) = (200, 20, 100, 0.01);
    let sigmas: Vec<f64> = (1..=modes).map(|i| 1.0 / i as f64).collect();
    let mut good = 0;
    let mut gains = Vec::new();
    for run in 0..100u64 {
        let u = orthonormal(n, modes, 7000 + run);
        let train = Snapshots::new(spectral_snapshots(&u, &sigmas, 150, 8000 + run)).unwrap();
        let test = spectral_snapshots(&u, &sigmas, 30, 9000 + run);
        let basis = fit_pod(&train, RankSpec::Fixed(r), false).unwrap();
        let mut stats = Vec::new();
        for p in [r, 2 * r] {
            let sensors = select_qr_sensors(&basis, p).unwrap();
            let kappa = condition_number(&measurement_matrix(&basis, &sensors).unwrap()).unwrap();
            let mut total = 0.0;
            for j in 0..test.cols() {
                let x = test.col(j);
                let clean: Vec<f64> = sensors.indices.iter().map(|&i| x[i]).collect();
                let noise = NoiseModel::new(eta, derive_seed(run, j as u64)).unwrap();
                let y = add_measurement_noise(&clean, &noise).unwrap();
                total += rel_l2(x, &gappy_reconstruct(&basis, &sensors, &y, None).unwrap().state);
            }
            stats.push((kappa, total / test.cols() as f64));
        }
        let ((k1, e1), (k2, e2)) = (stats[0], stats[1]);
        good += (k2 < k1 && e2 < e1) as usize;
        gains.push(e1 / e2);
    }
    let mean_gain = gains.iter().sum::<f64>() / gains.len() as f64;
    outcome(
        good >= 95,
        format!("p=2r better in {good}/100; mean error ratio p=r/p=2r={mean_gain:.2}"),
    )
}

fn ac7_three_tone() -> Outcome {
    let mut hits = 0;
    let mut aliased = 0;
    for seed in 0..100 {
        hits += three_tone_demo(4096, 256, seed, SamplingScheme::Random, 6).unwrap().matched as usize;
        aliased += !three_tone_demo(4096, 256, seed, SamplingScheme::Equispaced, 6).unwrap().matched as usize;
    }
    outcome(
        hits >= 95 && aliased >= 95,
        format!("random recovers {hits}/100; equispaced fails {aliased}/100"),
    )
}

fn ac8_fekete() -> Outcome {
    let rep = fekete_comparison(30, 1000).unwrap();
    outcome(
        rep.qr_sup_error <= rep.equispaced_sup_error / 10.0 && rep.equispaced_sup_error > 1.0,
        format!("sup err qr={:.3e} equispaced={:.3e}", rep.qr_sup_error, rep.equispaced_sup_error),
    )
}

fn ac9_rank_selection() -> Outcome {
    let (n, m, r, noise) = (200, 200, 10, 0.01);
    let edge = noise * ((n as f64).sqrt() + (m as f64).sqrt());
    let sigmas: Vec<f64> = (0..r).map(|i| 50.0 * edge * (2.0 - i as f64 / r as f64)).collect();
    let mut hits = 0;
    for seed in 0..100u64 {
        let u = orthonormal(n, r, seed);
        let v = orthonormal(m, r, seed + 100_000);
        let mut us = u.clone();
        us.scale_cols(&sigmas);
        let mut x = us.matmul(&v.transpose());
        let e = gaussian(n, m, seed + 200_000);
        x.as_mut_slice().iter_mut().zip(e.as_slice()).for_each(|(a, b)| *a += noise * b);
        let s = singular_values(&x).unwrap();
        hits += (hard_threshold_rank(&s, n, m).unwrap().rank == r) as usize;
    }
    outcome(hits >= 95, format!("rank 10 recovered {hits}/100"))
}

fn ac10_hierarchy() -> Outcome {
    let basis = pod_basis(orthonormal(500, 15, 10));
    let sets: Vec<Vec<usize>> = (15..=40).map(|p| select_qr_sensors(&basis, p).unwrap().indices).collect();
    let nested = sets
        .windows(2)
        .all(|w| w[1].len() == w[0].len() + 1 && w[1][..w[0].len()] == w[0][..]);
    outcome(nested, format!("p=15..40 nested={nested}"))
}

fn ac11_basic_support() -> Outcome {
    let theta = gaussian(64, 512, 11);
    let first = basic_solution(&theta, &gaussian_vec(64, 0)).unwrap().support;
    let same = (1..20u64).all(|k| basic_solution(&theta, &gaussian_vec(64, k)).unwrap().support == first);
    outcome(same && first.len() == 64, format!("identical support across 20 y: {same}"))
}

fn ssense(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_ssense")).args(args).output().unwrap()
}

fn ac12_cli_determinism() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let p = |name: &str| d.join(name).to_str().unwrap().to_string();
    let u = orthonormal(120, 6, 12);
    let x = spectral_snapshots(&u, &[6.0, 5.0, 4.0, 3.0, 2.0, 1.0], 60, 13);
    save_matrix_auto(&x, Path::new(&p("x.ssp"))).unwrap();
    let ok = |o: std::process::Output| o.status.success();
    if !ok(ssense(&["train", "--input", &p("x.ssp"), "--rank", "fixed:6", "--out", &p("basis"), "--no-timestamp"])) {
        return outcome(false, "train failed");
    }

    let place = ["place", "--basis", &p("basis"), "--p", "9", "--method", "qr", "--out", &p("s.json"), "--no-timestamp"];
    let sweep = [
        "sweep-rank", "--input", &p("x.ssp"), "--split", "interleave:4", "--ranks", "2:6",
        "--methods", "qr,random", "--seed", "5", "--out", &p("sweep.csv"), "--no-timestamp",
    ];
    let files = ["s.json", "sweep.csv", "sweep.json"];
    let mut golden = Vec::new();
    for round in 0..2 {
        if !ok(ssense(&place)) || !ok(ssense(&sweep)) {
            return outcome(false, format!("command failed in round {round}"));
        }
        let snapshot: Vec<Vec<u8>> = files.iter().map(|f| std::fs::read(d.join(f)).unwrap()).collect();
        if round == 0 {
            golden = snapshot;
        } else if snapshot != golden {
            return outcome(false, "outputs differ between runs");
        }
    }
    outcome(true, format!("{} files byte-identical across two runs", files.len()))
}

fn main() {
    let criteria: [(&str, &str, Duration, fn() -> Outcome); 12] = [
        ("AC1", "QR factor laws", Duration::from_secs(10), ac1_qr_laws),
        ("AC2", "volume identity at selection", Duration::from_secs(5), ac2_volume_identity),
        ("AC3", "brute-force comparison", Duration::from_secs(30), ac3_brute_force),
        ("AC4", "exact recovery", Duration::from_secs(5), ac4_exact_recovery),
        ("AC5", "noise-variance law", Duration::from_secs(10), ac5_noise_variance),
        ("AC6", "oversampling benefit", Duration::from_secs(60), ac6_oversampling),
        ("AC7", "three-tone recovery", Duration::from_secs(60), ac7_three_tone),
        ("AC8", "Fekete interpolation", Duration::from_secs(5), ac8_fekete),
        ("AC9", "rank auto-selection", Duration::from_secs(30), ac9_rank_selection),
        ("AC10", "pivot hierarchy", Duration::from_secs(10), ac10_hierarchy),
        ("AC11", "basic-solution support invariance", Duration::from_secs(2), ac11_basic_support),
        ("AC12", "CLI determinism", Duration::from_secs(10), ac12_cli_determinism),
    ];
    let mut failed = 0;
    for (id, name, budget, run) in criteria {
        let start = Instant::now();
        let out = run();
        let took = start.elapsed();
        let in_time = took <= budget;
        let pass = out.pass && in_time;
        failed += !pass as usize;
        println!(
            "{id:<5} {:<4} {name}: {} [{:.2}s / {}s{}]",
            if pass { "PASS" } else { "FAIL" },
            out.detail,
            took.as_secs_f64(),
            budget.as_secs(),
            if in_time { "" } else { ", over budget" },
        );
    }
    println!("acceptance: {} of 12 criteria passed", 12 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
