use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use bnp_core::analysis::{
    binom_poisson_lower_constant, bondesson_tfa_bound, dp_fsd_two_sample_gap, fsd_convergence, growth_function,
    growth_function_lower, lecam_upper, tsb_dp_bound, tv_binom_poisson, PartitionComposition,
};
use bnp_core::approximations::{AifaConfig, WeightDistribution, WidthRule};
use bnp_core::inference::{
    generate_synthetic, predictive_log_likelihood, run_chain, ChainConfig, LinearGaussianModel, Matrix, PriorKind,
    SyntheticConfig,
};
use bnp_core::marginals::{
    check_condition_1_with, simulate_allocation, AllocationSource, ConditionConstants, ExpFamilyModel, HistoryGrid,
};
use bnp_core::measures::RateMeasureSpec;
use bnp_core::rng::{split, StreamRng};
use bnp_core::stats::{mean, slope, standard_error, variance};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::config::Experiment;
use crate::error::RunError;
use crate::output::{real, OutputDir, Table};

/// Failed checks; empty when the run passed.
pub type Failures = Vec<String>;

fn replicates<T: Send>(
    exp: &Experiment,
    f: impl Fn(u64, &mut StreamRng) -> Result<T, RunError> + Sync,
) -> Result<Vec<T>, RunError> {
    (0..exp.replicates as u64)
        .into_par_iter()
        .map(|r| f(r, &mut split(exp.seed, r)))
        .collect()
}

fn moments(xs: &[f64]) -> serde_json::Value {
    json!({
        "mean": mean(xs),
        "variance": if xs.len() > 1 { variance(xs) } else { 0.0 },
        "standard_error": if xs.len() > 1 { standard_error(xs) } else { 0.0 },
    })
}

// sample-prior

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SamplePrior {
    distribution: WeightDistribution,
    /// Replicates whose weights go to `weights.csv`; all when absent.
    #[serde(default)]
    csv_replicates: Option<usize>,
}

pub fn sample_prior(exp: &Experiment, out: &mut OutputDir) -> Result<Failures, RunError> {
    let cfg: SamplePrior = exp.payload()?;
    let sampler = cfg.distribution.prepare()?;
    let keep = cfg.csv_replicates.unwrap_or(exp.replicates);
    let draws = replicates(exp, |_, rng| {
        let w = sampler.sample(rng);
        let active = w.iter().filter(|&&t| rng.random::<f64>() < t).count();
        Ok((w, active))
    })?;

    let mut table = Table::new(&["replicate", "atom_index", "weight"]);
    for (r, (w, _)) in draws.iter().enumerate().take(keep) {
        for (i, t) in w.iter().enumerate() {
            table.row([r.to_string(), i.to_string(), real(*t)]);
        }
    }
    out.csv("weights.csv", table)?;

    let mass: Vec<f64> = draws.iter().map(|(w, _)| w.iter().sum()).collect();
    let first: Vec<f64> = draws.iter().map(|(w, _)| w.first().copied().unwrap_or(0.0)).collect();
    let atoms: Vec<f64> = draws.iter().map(|(w, _)| w.len() as f64).collect();
    let active: Vec<f64> = draws.iter().map(|(_, a)| *a as f64).collect();
    out.json(
        "summary.json",
        &json!({
            "distribution": cfg.distribution,
            "replicates": exp.replicates,
            "atoms": moments(&atoms),
            "total_mass": moments(&mass),
            "first_weight": moments(&first),
            "active_features": moments(&active),
        }),
    )?;
    Ok(Vec::new())
}

// marginal-sim

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct MarginalSim {
    model: ExpFamilyModel,
    #[serde(rename = "N")]
    rows: usize,
    process: AllocationSource,
}

pub fn marginal_sim(exp: &Experiment, out: &mut OutputDir) -> Result<Failures, RunError> {
    let cfg: MarginalSim = exp.payload()?;
    let allocs = replicates(exp, |_, rng| Ok(simulate_allocation(&cfg.model, cfg.rows, cfg.process, rng)?))?;
    let mut table = Table::new(&["replicate", "row", "col", "count"]);
    for (r, a) in allocs.iter().enumerate() {
        for (row, col, count) in a.triplets() {
            table.row([r.to_string(), row.to_string(), col.to_string(), count.to_string()]);
        }
    }
    out.csv("allocations.csv", table)?;
    let columns: Vec<f64> = allocs.iter().map(|a| a.n_columns() as f64).collect();
    out.json(
        "summary.json",
        &json!({
            "model": cfg.model,
            "N": cfg.rows,
            "process": cfg.process,
            "replicates": exp.replicates,
            "columns": moments(&columns),
            "target_expected_columns": cfg.model.expected_atoms(cfg.rows as u64),
        }),
    )?;
    Ok(Vec::new())
}

// check-conditions

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct CheckConditions {
    model: ExpFamilyModel,
    #[serde(default = "preset")]
    constants: ConditionConstants,
    n_max: u64,
    #[serde(rename = "K")]
    ks: Vec<usize>,
    #[serde(default)]
    grid: HistoryGrid,
}

fn preset() -> ConditionConstants {
    ConditionConstants::Preset
}

pub fn check_conditions(exp: &Experiment, out: &mut OutputDir) -> Result<Failures, RunError> {
    let cfg: CheckConditions = exp.payload()?;
    let report = check_condition_1_with(&cfg.model, &cfg.constants, cfg.n_max, &cfg.ks, &cfg.grid)?;
    out.json(
        "condition_report.json",
        &json!({
            "model": cfg.model,
            "constants": cfg.constants,
            "n_max": cfg.n_max,
            "K": cfg.ks,
            "grid": cfg.grid,
            "report": report,
        }),
    )?;
    Ok(report
        .inequalities
        .iter()
        .filter(|r| !r.pass)
        .map(|r| format!("inequality {:?} fails at n={} K={} (slack {})", r.inequality, r.n_worst, r.k, r.slack))
        .collect())
}

// bounds-table

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct BoundsTable {
    gamma: f64,
    #[serde(default = "one_u64")]
    k_min: u64,
    k_max: u64,
    #[serde(rename = "N", default = "one_u64")]
    n: u64,
    #[serde(default = "one_f64")]
    alpha: f64,
}

fn one_u64() -> u64 {
    1
}

fn one_usize() -> usize {
    1
}

fn ten_usize() -> usize {
    10
}

fn one_f64() -> f64 {
    1.0
}

pub fn bounds_table(exp: &Experiment, out: &mut OutputDir) -> Result<Failures, RunError> {
    let cfg: BoundsTable = exp.payload()?;
    if cfg.k_min == 0 || cfg.k_min > cfg.k_max {
        return Err(RunError::Config(format!("need 1 <= k_min <= k_max, got {}..{}", cfg.k_min, cfg.k_max)));
    }
    let mut table = Table::new(&["name", "N", "K", "gamma", "alpha", "value"]);
    let (n, g, a) = (cfg.n.to_string(), real(cfg.gamma), real(cfg.alpha));
    let c = binom_poisson_lower_constant(cfg.gamma)?;
    table.row(["binom_poisson_lower_constant", "", "", &g, "", &real(c)]);
    table.row(["growth_function", &n, "", "", &a, &real(growth_function(cfg.n, cfg.alpha)?)]);
    table.row(["growth_function_lower", &n, "", "", &a, &real(growth_function_lower(cfg.n, cfg.alpha)?)]);

    let mut failures = Vec::new();
    let mut sandwich = Vec::new();
    for k in cfg.k_min..=cfg.k_max {
        let ks = k.to_string();
        let kf = k as f64;
        let q = (cfg.gamma / kf) / (1.0 + cfg.gamma / kf);
        let tv = tv_binom_poisson(k, cfg.gamma)?;
        let upper = lecam_upper(k, q)?;
        let lower = c * upper;
        table.row(["tv_binom_poisson", "", &ks, &g, "", &real(tv.value)]);
        table.row(["binom_poisson_lower", "", &ks, &g, "", &real(lower)]);
        table.row(["lecam_upper", "", &ks, &g, "", &real(upper)]);
        table.row(["bondesson_tfa_bound", &n, &ks, &g, &a, &real(bondesson_tfa_bound(cfg.n, k, cfg.gamma, cfg.alpha)?)]);
        table.row(["tsb_dp_bound", &n, &ks, "", &a, &real(tsb_dp_bound(cfg.n, k, cfg.alpha)?)]);
        table.row(["dp_fsd_two_sample_gap", "", &ks, "", &a, &real(dp_fsd_two_sample_gap(cfg.alpha, k)?)]);
        let holds = lower <= tv.lower && tv.value <= upper;
        if !holds {
            failures.push(format!("K={k}: {lower} <= {} <= {upper} violated", tv.value));
        }
        sandwich.push(json!({"K": k, "lower": lower, "tv": tv.value, "tv_lower": tv.lower, "upper": upper, "holds": holds}));
    }
    out.csv("bounds.csv", table)?;
    out.json(
        "summary.json",
        &json!({"gamma": cfg.gamma, "lower_constant": c, "sandwich": sandwich, "failures": failures}),
    )?;
    Ok(failures)
}

// eppf-convergence

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct EppfConvergence {
    alpha: f64,
    #[serde(rename = "N")]
    n: usize,
    #[serde(rename = "K")]
    ks: Vec<usize>,
}

/// Allowed distance of each log-log slope from -1.
const SLOPE_TOLERANCE: f64 = 0.3;

pub fn eppf_convergence(exp: &Experiment, out: &mut OutputDir) -> Result<Failures, RunError> {
    let cfg: EppfConvergence = exp.payload()?;
    let gaps = fsd_convergence(cfg.alpha, cfg.n, &cfg.ks)?;
    let mut table = Table::new(&["K", "composition", "p_K", "p_target", "abs_gap"]);
    for g in &gaps {
        table.row([g.k.to_string(), g.composition.clone(), real(g.p_k), real(g.p_target), real(g.abs_gap)]);
    }
    out.csv("eppf_convergence.csv", table)?;

    let mut failures = Vec::new();
    let mut slopes = BTreeMap::new();
    let lx: Vec<f64> = cfg.ks.iter().map(|&k| (k as f64).ln()).collect();
    for comp in PartitionComposition::all(cfg.n) {
        let name = comp.to_string();
        let row: Vec<f64> = gaps.iter().filter(|g| g.composition == name).map(|g| g.abs_gap).collect();
        if row.len() < 2 || row.iter().any(|&g| g <= 0.0) {
            continue;
        }
        if !row.windows(2).all(|w| w[1] < w[0]) {
            failures.push(format!("{name}: gap does not decrease in K"));
        }
        let s = slope(&lx, &row.iter().map(|g| g.ln()).collect::<Vec<_>>());
        if (s + 1.0).abs() > SLOPE_TOLERANCE {
            failures.push(format!("{name}: log-log slope {s} outside -1 ± {SLOPE_TOLERANCE}"));
        }
        slopes.insert(name, s);
    }
    out.json(
        "summary.json",
        &json!({"alpha": cfg.alpha, "N": cfg.n, "K": cfg.ks, "slopes": slopes, "failures": failures}),
    )?;
    Ok(failures)
}

// gibbs-run

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct GibbsRun {
    model: LinearGaussianModel,
    prior_kind: PriorKind,
    sweeps: usize,
    burnin: usize,
    #[serde(default = "one_usize")]
    thin: usize,
    #[serde(default = "ten_usize")]
    impute_sweeps: usize,
    data_path: PathBuf,
    #[serde(default)]
    heldout_path: Option<PathBuf>,
}

/// Reads a dense matrix stored as `row,dim,value` triplets.
pub fn read_matrix(path: &Path) -> Result<Matrix, RunError> {
    let text = fs::read_to_string(path).map_err(|e| RunError::io(path, e))?;
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let header = reader.headers().map_err(|e| RunError::io(path, e))?.clone();
    if header.iter().collect::<Vec<_>>() != ["row", "dim", "value"] {
        return Err(RunError::Data(format!("{}: expected header row,dim,value", path.display())));
    }
    let mut cells = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record = record.map_err(|e| RunError::io(path, e))?;
        let bad = |what: &str| RunError::Data(format!("{}: line {}: bad {what}", path.display(), line + 2));
        let row: usize = record[0].trim().parse().map_err(|_| bad("row"))?;
        let dim: usize = record[1].trim().parse().map_err(|_| bad("dim"))?;
        let value: f64 = record[2].trim().parse().map_err(|_| bad("value"))?;
        if !value.is_finite() {
            return Err(bad("value"));
        }
        cells.push((row, dim, value));
    }
    let rows = cells.iter().map(|c| c.0 + 1).max().unwrap_or(0);
    let cols = cells.iter().map(|c| c.1 + 1).max().unwrap_or(0);
    if rows * cols != cells.len() {
        return Err(RunError::Data(format!("{}: {} cells do not fill a {rows}x{cols} matrix", path.display(), cells.len())));
    }
    let mut data = vec![f64::NAN; rows * cols];
    for (r, d, v) in cells {
        let slot = &mut data[r * cols + d];
        if !slot.is_nan() {
            return Err(RunError::Data(format!("{}: cell ({r}, {d}) repeated", path.display())));
        }
        *slot = v;
    }
    Ok(Matrix::from_vec(rows, cols, data)?)
}

pub fn gibbs_run(exp: &Experiment, out: &mut OutputDir) -> Result<Failures, RunError> {
    let cfg: GibbsRun = exp.payload()?;
    let chain_cfg = ChainConfig {
        sweeps: cfg.sweeps,
        burnin: cfg.burnin,
        thin: cfg.thin,
        impute_sweeps: cfg.impute_sweeps,
    };
    let data = read_matrix(&exp.resolve(&cfg.data_path))?;
    let heldout = cfg.heldout_path.as_ref().map(|p| read_matrix(&exp.resolve(p))).transpose()?;
    let chains = replicates(exp, |_, rng| {
        Ok(run_chain(&cfg.model, cfg.prior_kind, &data, heldout.as_ref(), chain_cfg, rng)?)
    })?;
    let mut summaries = Vec::new();
    for (c, chain) in chains.iter().enumerate() {
        let mut table = Table::new(&["sweep", "stat_name", "value"]);
        for row in &chain.trace {
            for (name, value) in row.stats() {
                table.row([row.sweep.to_string(), name.to_string(), real(value)]);
            }
        }
        out.csv(&format!("chain_{c}_trace.csv"), table)?;
        out.json(&format!("chain_{c}_checkpoint.json"), &chain.final_state)?;
        let score = match &heldout {
            Some(h) => Some(predictive_log_likelihood(&chain.samples, h)?),
            None => None,
        };
        summaries.push(json!({
            "chain": c,
            "mean_active_per_row": chain.mean_active_per_row,
            "kept_samples": chain.samples.len(),
            "heldout_log_likelihood": score,
        }));
    }
    out.json(
        "summary.json",
        &json!({"model": cfg.model, "prior_kind": cfg.prior_kind, "chain": chain_cfg, "chains": summaries}),
    )?;
    Ok(Vec::new())
}

// compare-ifa

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct CompareIfa {
    gamma: f64,
    discount: f64,
    #[serde(rename = "K")]
    k: usize,
    #[serde(default = "default_offsets")]
    offsets: Vec<f64>,
    #[serde(default = "default_widths")]
    widths: Vec<WidthRule>,
}

fn default_offsets() -> Vec<f64> {
    vec![0.1, 1.0]
}

fn default_widths() -> Vec<WidthRule> {
    vec![WidthRule::InverseK, WidthRule::InverseSqrtK]
}

/// Relative distance from the rate-measure mean allowed for each method.
const TARGET_TOLERANCE: f64 = 0.1;
/// Largest relative change allowed across indicator settings.
const SENSITIVITY_LIMIT: f64 = 0.05;

#[derive(Serialize)]
struct MethodResult {
    method: String,
    a: Option<f64>,
    width: Option<WidthRule>,
    active_per_row: f64,
    standard_error: f64,
}

pub fn compare_ifa(exp: &Experiment, out: &mut OutputDir) -> Result<Failures, RunError> {
    let cfg: CompareIfa = exp.payload()?;
    let spec = RateMeasureSpec::beta_process(cfg.gamma, 0.0, cfg.discount)?;
    let base = AifaConfig::new(spec, cfg.k)?;
    let mut methods: Vec<(String, Option<(f64, WidthRule)>, WeightDistribution)> = vec![
        ("aifa".into(), Some((base.a, base.width)), WeightDistribution::AifaNumeric(base)),
        (
            "bfry".into(),
            None,
            WeightDistribution::Bfry {
                gamma: cfg.gamma,
                discount: cfg.discount,
                k: cfg.k,
            },
        ),
    ];
    for &a in &cfg.offsets {
        for &width in &cfg.widths {
            let c = base.with_offset(a)?.with_width(width)?;
            methods.push(("aifa_grid".into(), Some((a, width)), WeightDistribution::AifaNumeric(c)));
        }
    }

    let mut results = Vec::new();
    for (method, setting, dist) in methods {
        let sampler = dist.prepare()?;
        // common random numbers across methods
        let counts = replicates(exp, |_, rng| {
            let w = sampler.sample(rng);
            Ok(w.iter().filter(|&&t| rng.random::<f64>() < t).count() as f64)
        })?;
        results.push(MethodResult {
            method,
            a: setting.map(|s| s.0),
            width: setting.map(|s| s.1),
            active_per_row: mean(&counts),
            standard_error: if counts.len() > 1 { standard_error(&counts) } else { 0.0 },
        });
    }

    let mut table = Table::new(&["method", "a", "width", "active_per_row", "standard_error"]);
    for r in &results {
        table.row([
            r.method.clone(),
            r.a.map(real).unwrap_or_default(),
            r.width.map(width_label).unwrap_or_default(),
            real(r.active_per_row),
            real(r.standard_error),
        ]);
    }
    out.csv("compare_ifa.csv", table)?;

    let mut failures = Vec::new();
    let target = cfg.gamma;
    for r in results.iter().take(2) {
        let rel = (r.active_per_row - target).abs() / target;
        if rel > TARGET_TOLERANCE {
            failures.push(format!("{}: {} is {rel} from {target}", r.method, r.active_per_row));
        }
    }
    let reference = results[0].active_per_row;
    let spread = results[2..]
        .iter()
        .map(|r| (r.active_per_row - reference).abs() / reference)
        .fold(0.0, f64::max);
    if spread >= SENSITIVITY_LIMIT {
        failures.push(format!("indicator sensitivity {spread} reaches {SENSITIVITY_LIMIT}"));
    }
    out.json(
        "summary.json",
        &json!({"target": target, "results": results, "sensitivity": spread, "failures": failures}),
    )?;
    Ok(failures)
}

fn width_label(w: WidthRule) -> String {
    match w {
        WidthRule::InverseK => "inverse_k".into(),
        WidthRule::InverseSqrtK => "inverse_sqrt_k".into(),
        WidthRule::Power { scale, exponent } => format!("power({},{})", real(scale), real(exponent)),
    }
}

// synth-data

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SynthData {
    #[serde(rename = "N")]
    n: usize,
    #[serde(rename = "D")]
    d: usize,
    features: usize,
    feature_probability: f64,
    #[serde(default = "one_f64")]
    feature_sd: f64,
    #[serde(default = "one_f64")]
    weight_sd: f64,
    noise_sd: f64,
    /// Extra rows written to `heldout.csv`.
    #[serde(default)]
    heldout: usize,
}

fn matrix_table(m: &Matrix, rows: std::ops::Range<usize>) -> Table {
    let mut table = Table::new(&["row", "dim", "value"]);
    for (i, n) in rows.enumerate() {
        for (d, v) in m.row(n).iter().enumerate() {
            table.row([i.to_string(), d.to_string(), real(*v)]);
        }
    }
    table
}

pub fn synth_data(exp: &Experiment, out: &mut OutputDir) -> Result<Failures, RunError> {
    let cfg: SynthData = exp.payload()?;
    if exp.replicates != 1 {
        return Err(RunError::Config("synth-data writes a single data set; set replicates to 1".into()));
    }
    let train = cfg.n;
    let total = SyntheticConfig {
        n: train + cfg.heldout,
        d: cfg.d,
        features: cfg.features,
        feature_probability: cfg.feature_probability,
        feature_sd: cfg.feature_sd,
        weight_sd: cfg.weight_sd,
        noise_sd: cfg.noise_sd,
    };
    let data = generate_synthetic(&total, &mut split(exp.seed, 0))?;
    out.csv("data.csv", matrix_table(&data.y, 0..train))?;
    if cfg.heldout > 0 {
        out.csv("heldout.csv", matrix_table(&data.y, train..total.n))?;
    }
    out.json(
        "truth.json",
        &json!({
            "config": SyntheticConfig { n: train, ..total },
            "heldout": cfg.heldout,
            "active_per_row": data.active_per_row(),
            "features": data.features,
            "x": data.x,
            "w": data.w,
        }),
    )?;
    Ok(Vec::new())
}
