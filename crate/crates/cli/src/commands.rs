use std::path::{Path, PathBuf};

use serde_json::{json, Value};
use sparse_sensing::basis::{fit_pod_detailed, BasisSource, RankSpec};
use sparse_sensing::csrecover::{
    incoherence, three_tone_demo, IncoherenceBasis, SamplingScheme,
};
use sparse_sensing::factor::condition_number;
use sparse_sensing::matrixio::{
    encode_table, load_basis, load_matrix_auto, load_sensors, save_basis, save_matrix_auto,
    to_json_pretty, write_json, write_text, PlacementMethod, Provenance, SensorSetRecord,
};
use sparse_sensing::placement::{
    brute_force_optimal, criterion_value, measurement_matrix, select_deim_sensors,
    select_qr_sensors, select_random_sensors, PlacementCriterion,
};
use sparse_sensing::reconstruct::{
    add_measurement_noise, fekete_comparison, gappy_reconstruct, noise_rows_monotone,
    split_snapshots, sweep_noise, sweep_rank, NoiseMethod, NoiseModel, PRule, SplitRule,
    SweepMethod, SweepOptions, ERROR_METRIC,
};
use sparse_sensing::rng::{derive_seed, RNG_LABEL};
use sparse_sensing::{Error, Matrix, Result, Snapshots};

use crate::cli::*;

/// Run-wide context shared by every command.
pub struct Ctx {
    pub argv: Vec<String>,
    pub timestamp: bool,
}

impl Ctx {
    fn provenance(&self, seed: Option<u64>) -> Provenance {
        Provenance::new(self.argv.clone(), seed, self.timestamp)
    }
}

fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}

fn emit(value: &Value, out: Option<&Path>) -> Result<()> {
    match out {
        Some(path) => write_json(value, path),
        None => {
            print!("{}", to_json_pretty(value));
            Ok(())
        }
    }
}

fn report_path(out: &Path) -> Result<PathBuf> {
    let report = out.with_extension("json");
    if report == out {
        return Err(invalid(format!(
            "--out {} would collide with its JSON report",
            out.display()
        )));
    }
    Ok(report)
}

fn fmt_f64(v: f64) -> String {
    format!("{v}")
}

/// `1,2,5:8` → `[1, 2, 5, 6, 7, 8]`.
pub fn parse_usize_list(s: &str) -> Result<Vec<usize>> {
    let bad = || invalid(format!("cannot parse list '{s}'"));
    let mut out = Vec::new();
    for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        match part.split_once(':') {
            Some((a, b)) => {
                let (a, b): (usize, usize) = (a.parse().map_err(|_| bad())?, b.parse().map_err(|_| bad())?);
                if a > b {
                    return Err(bad());
                }
                out.extend(a..=b);
            }
            None => out.push(part.parse().map_err(|_| bad())?),
        }
    }
    if out.is_empty() {
        return Err(bad());
    }
    Ok(out)
}

pub fn parse_f64_list(s: &str) -> Result<Vec<f64>> {
    let out: Vec<f64> = s
        .split(',')
        .map(str::trim)
        .filter(|p| !p.is_empty())
        .map(|p| p.parse::<f64>().map_err(|_| invalid(format!("cannot parse number '{p}'"))))
        .collect::<Result<_>>()?;
    if out.is_empty() {
        return Err(invalid("empty list"));
    }
    Ok(out)
}

fn one_based(indices: &[usize]) -> Vec<usize> {
    indices.iter().map(|i| i + 1).collect()
}

pub fn train(ctx: &Ctx, a: &TrainArgs) -> Result<()> {
    let rank: RankSpec = a.rank.parse()?;
    let snaps = load_matrix_auto(&a.input)?;
    let fit = fit_pod_detailed(&snaps, rank, a.mean.enabled())?;
    let prov = ctx.provenance(None);
    save_basis(&fit.basis, &a.out, Some(prov.clone()))?;
    let threshold = fit.threshold.as_ref().map(|t| {
        json!({
            "rank": t.rank,
            "beta": t.beta,
            "omega": t.omega,
            "median_sigma": t.median,
            "tau": t.tau,
            "floored": t.floored,
        })
    });
    let report = json!({
        "provenance": prov,
        "input": a.input.display().to_string(),
        "n": snaps.rows(),
        "m": snaps.cols(),
        "rank_spec": rank.to_string(),
        "r": fit.basis.r(),
        "mean_subtract": a.mean.enabled(),
        "spectrum": fit.spectrum,
        "threshold": threshold,
    });
    write_json(&report, &a.out.join("train_report.json"))?;
    println!("trained rank-{} basis on {}x{} snapshots", fit.basis.r(), snaps.rows(), snaps.cols());
    Ok(())
}

pub fn place(ctx: &Ctx, a: &PlaceArgs) -> Result<()> {
    let basis = load_basis(&a.basis)?;
    let p = a.p.unwrap_or(basis.r());
    let mut record = match a.method.as_str() {
        "qr" => select_qr_sensors(&basis, p)?,
        "deim" => {
            if p != basis.r() {
                return Err(invalid(format!("DEIM places exactly r = {} sensors", basis.r())));
            }
            select_deim_sensors(&basis)?
        }
        "random" => {
            let mut s = select_random_sensors(basis.n(), p, a.seed)?;
            s.r = basis.r();
            s
        }
        "brute" | "brute_force" => {
            let criterion: PlacementCriterion = a.criterion.parse()?;
            brute_force_optimal(&basis, p, criterion)?
        }
        other => return Err(invalid(format!("unknown method '{other}' (qr|deim|random|brute)"))),
    };
    let seed = (record.method == PlacementMethod::Random).then_some(a.seed);
    record.provenance = Some(ctx.provenance(seed));
    let text = record.to_json()?;
    match &a.out {
        Some(path) => {
            write_text(&text, path)?;
            println!("placed {} sensors ({:?}) -> {}", record.p(), record.method, path.display());
        }
        None => print!("{text}"),
    }
    Ok(())
}

pub fn reconstruct(ctx: &Ctx, a: &ReconstructArgs) -> Result<()> {
    let basis = load_basis(&a.basis)?;
    let sensors = load_sensors(&a.sensors)?;
    NoiseModel::new(a.eta, a.seed)?;
    let truth = a.truth.as_deref().map(load_matrix_auto).transpose()?;
    let clean = match (&a.measurements, &truth) {
        (Some(path), _) => load_matrix_auto(path)?.values,
        (None, Some(t)) => t.values.select_rows(&sensors.indices),
        (None, None) => return Err(invalid("need --measurements or --truth")),
    };
    if clean.rows() != sensors.p() {
        return Err(Error::DimensionMismatch(format!(
            "measurements have {} rows for {} sensors",
            clean.rows(),
            sensors.p()
        )));
    }
    if let Some(t) = &truth {
        if t.cols() != clean.cols() || t.rows() != basis.n() {
            return Err(Error::DimensionMismatch(format!(
                "truth is {}x{}, expected {}x{}",
                t.rows(),
                t.cols(),
                basis.n(),
                clean.cols()
            )));
        }
    }

    let k = clean.cols();
    let mut states = Matrix::zeros(basis.n(), k);
    let mut errors = Vec::new();
    let mut kappa = f64::NAN;
    for j in 0..k {
        let y = add_measurement_noise(
            clean.col(j),
            &NoiseModel { eta: a.eta, seed: derive_seed(a.seed, j as u64) },
        )?;
        let rec = gappy_reconstruct(&basis, &sensors, &y, truth.as_ref().map(|t| t.values.col(j)))?;
        states.col_mut(j).copy_from_slice(&rec.state);
        kappa = rec.kappa;
        if let Some(e) = rec.rel_error {
            errors.push(e);
        }
    }
    save_matrix_auto(&states, &a.out)?;
    let mean_error = (!errors.is_empty()).then(|| errors.iter().sum::<f64>() / errors.len() as f64);
    let report = json!({
        "provenance": ctx.provenance(Some(a.seed)),
        "error_metric": ERROR_METRIC,
        "n": basis.n(),
        "r": basis.r(),
        "p": sensors.p(),
        "snapshots": k,
        "eta": a.eta,
        "rng": RNG_LABEL,
        "kappa": kappa,
        "rel_errors": errors,
        "mean_rel_error": mean_error,
        "states": a.out.display().to_string(),
    });
    write_json(&report, &report_path(&a.out)?)?;
    match mean_error {
        Some(e) => println!("reconstructed {k} states, mean relative error {e:.6e}"),
        None => println!("reconstructed {k} states"),
    }
    Ok(())
}

fn load_split(d: &DataArgs) -> Result<(Snapshots, Snapshots, Value)> {
    match (&d.input, &d.train, &d.test) {
        (Some(input), _, _) => {
            let rule: SplitRule = d.split.parse()?;
            let snaps = load_matrix_auto(input)?;
            let (train, test) = split_snapshots(&snaps, rule, d.test_fraction)?;
            let desc = json!({
                "input": input.display().to_string(),
                "rule": rule,
                "test_fraction": d.test_fraction,
                "train_snapshots": train.cols(),
                "test_snapshots": test.cols(),
            });
            Ok((train, test, desc))
        }
        (None, Some(train), Some(test)) => {
            let desc = json!({
                "train": train.display().to_string(),
                "test": test.display().to_string(),
            });
            Ok((load_matrix_auto(train)?, load_matrix_auto(test)?, desc))
        }
        _ => Err(invalid("need --input, or both --train and --test")),
    }
}

pub fn sweep_rank_cmd(ctx: &Ctx, a: &SweepRankArgs) -> Result<()> {
    let (train, test, split) = load_split(&a.data)?;
    let ranks = parse_usize_list(&a.ranks)?;
    let p_rule: PRule = a.p_rule.parse()?;
    let listed = a.methods.clone().unwrap_or_else(|| match p_rule {
        PRule::PEqualsR => "qr,deim,random".into(),
        PRule::PEquals2R => "qr,random".into(),
    });
    let mut methods: Vec<SweepMethod> = listed
        .split(',')
        .map(str::trim)
        .filter(|m| !m.is_empty())
        .map(str::parse)
        .collect::<Result<_>>()?;
    methods.retain(|m| *m != SweepMethod::PodProjection);
    methods.push(SweepMethod::PodProjection);
    let opts = SweepOptions { mean_subtract: a.mean.enabled(), seed: a.seed };

    let mut rows = Vec::new();
    let mut json_rows = Vec::new();
    for method in &methods {
        for row in sweep_rank(&train, &test, *method, &ranks, p_rule, &opts)? {
            let name = serde_json::to_value(method).unwrap();
            let name = name.as_str().unwrap().to_string();
            rows.push(vec![
                name.clone(),
                row.r.to_string(),
                row.p.to_string(),
                fmt_f64(row.mean_rel_error),
                fmt_f64(row.std_rel_error),
            ]);
            json_rows.push(json!({ "method": name, "row": row }));
        }
    }
    let csv = encode_table(&["method", "r", "p", "mean_rel_error", "std_rel_error"], &rows);
    write_text(&csv, &a.out)?;
    let report = json!({
        "provenance": ctx.provenance(Some(a.seed)),
        "error_metric": ERROR_METRIC,
        "split": split,
        "methods": methods,
        "p_rule": p_rule,
        "ranks": ranks,
        "mean_subtract": a.mean.enabled(),
        "rng": RNG_LABEL,
        "rows": json_rows,
    });
    write_json(&report, &report_path(&a.out)?)?;
    println!("wrote {} rows to {}", rows.len(), a.out.display());
    Ok(())
}

pub fn sweep_noise_cmd(ctx: &Ctx, a: &SweepNoiseArgs) -> Result<()> {
    let (train, test, split) = load_split(&a.data)?;
    let etas = parse_f64_list(&a.etas)?;
    let mut methods: Vec<NoiseMethod> = a
        .methods
        .split(',')
        .map(str::trim)
        .filter(|m| !m.is_empty())
        .map(str::parse)
        .collect::<Result<_>>()?;
    methods.retain(|m| *m != NoiseMethod::PodProjection);
    methods.push(NoiseMethod::PodProjection);
    let opts = SweepOptions { mean_subtract: a.mean.enabled(), seed: a.seed };
    let rows = sweep_noise(&train, &test, &methods, a.rank, &etas, &opts)?;
    let monotone = noise_rows_monotone(&rows, 0.05);
    if !monotone {
        eprintln!("ssense: warning: error is not non-decreasing in eta within 5% for some method");
    }
    let table: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![
                r.method.to_string(),
                r.r.to_string(),
                r.p.to_string(),
                fmt_f64(r.eta),
                fmt_f64(r.mean_rel_error),
            ]
        })
        .collect();
    write_text(&encode_table(&["method", "r", "p", "eta", "mean_rel_error"], &table), &a.out)?;
    let report = json!({
        "provenance": ctx.provenance(Some(a.seed)),
        "error_metric": ERROR_METRIC,
        "split": split,
        "rank": a.rank,
        "etas": etas,
        "methods": methods,
        "mean_subtract": a.mean.enabled(),
        "rng": RNG_LABEL,
        "monotone_within_5pct": monotone,
        "rows": rows,
    });
    write_json(&report, &report_path(&a.out)?)?;
    println!("wrote {} rows to {}", rows.len(), a.out.display());
    Ok(())
}

pub fn cs_demo(ctx: &Ctx, a: &CsDemoArgs) -> Result<()> {
    let sampling = match a.sampling.as_str() {
        "random" => SamplingScheme::Random,
        "equispaced" | "even" => SamplingScheme::Equispaced,
        other => return Err(invalid(format!("unknown sampling '{other}' (random|equispaced)"))),
    };
    let report = three_tone_demo(a.n, a.p, a.seed, sampling, a.k_max)?;
    let mut value = serde_json::to_value(&report).unwrap();
    value["provenance"] = serde_json::to_value(ctx.provenance(Some(a.seed))).unwrap();
    value["rng"] = json!(RNG_LABEL);
    emit(&value, a.out.as_deref())
}

pub fn fekete(ctx: &Ctx, a: &FeketeArgs) -> Result<()> {
    let report = fekete_comparison(a.degree, a.grid)?;
    let mut value = serde_json::to_value(&report).unwrap();
    value["provenance"] = serde_json::to_value(ctx.provenance(None)).unwrap();
    value["target"] = json!("|x^2 - 1/2| on [0, 1]");
    emit(&value, a.out.as_deref())
}

pub fn eval(ctx: &Ctx, a: &EvalArgs) -> Result<()> {
    let basis = load_basis(&a.basis)?;
    let sensors: SensorSetRecord = load_sensors(&a.sensors)?;
    let theta = measurement_matrix(&basis, &sensors)?;
    let mut criteria = serde_json::Map::new();
    for c in PlacementCriterion::ALL {
        let value = match criterion_value(&theta, c) {
            Ok(v) => json!(v),
            Err(e) => json!({ "error": e.to_string() }),
        };
        criteria.insert(c.to_string(), value);
    }
    let mu = match basis.source {
        BasisSource::Pod => Some(incoherence(&sensors, IncoherenceBasis::Tailored(&basis))?),
        BasisSource::Vandermonde => None,
    };
    let report = json!({
        "provenance": ctx.provenance(sensors.seed),
        "n": basis.n(),
        "r": basis.r(),
        "p": sensors.p(),
        "method": sensors.method,
        "indices": one_based(&sensors.indices),
        "kappa": condition_number(&theta)?,
        "criteria": criteria,
        "incoherence": mu,
    });
    emit(&report, a.out.as_deref())
}
