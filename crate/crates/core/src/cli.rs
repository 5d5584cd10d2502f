//! Command-line front end: argument parsing, dispatch, artifact and manifest output.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::cache::{cache_key, EigenCache};
use crate::eigen::EigenForm;
use crate::error::{LabError, Result};
use crate::lfunc::{friable_approx_check, log_ratio_diagnostic};
use crate::moments::{harmonic_moment, harmonic_weights, large_sum_search, petersson_check};
use crate::rho2::{bruijn_ratio, decay_profile, rho2_at_two, Rho2Table};
use crate::satotate::{exact_moment, mc_moment, restricted_vs_full_moment, TUPLE_BUDGET};
use crate::sums::{first_sign_change, friable_decay_scan, hx_sum, partial_sum_profile, positivity_witness_check};

pub const CACHE_ENV: &str = "HECKELAB_CACHE_DIR";

/// Tolerance for Petersson averages and the weight total.
pub const PETERSSON_TOL: f64 = 0.02;
pub const WEIGHT_TOTAL_TOL: f64 = 0.05;
/// Residual tolerance for the `rho_2` table.
pub const RHO2_RESIDUAL_TOL: f64 = 1e-8;
/// Number of standard errors accepted in Monte Carlo comparisons.
pub const MC_SIGMAS: f64 = 4.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Parser, Serialize)]
#[command(name = "heckelab", version, about = "Hecke eigenvalue sums, friable sums and random-model moments")]
pub struct RunConfig {
    /// Output directory
    #[arg(long, global = true, default_value = "heckelab-out")]
    #[serde(skip)]
    pub out: PathBuf,
    /// Eigenvalue cache directory
    #[arg(long, global = true, env = CACHE_ENV, default_value = ".heckelab-cache")]
    #[serde(skip)]
    pub cache_dir: PathBuf,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Worker threads (defaults to the number of CPUs)
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// Seed for stochastic subcommands
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Subcommand, Serialize)]
#[serde(tag = "name", rename_all = "lowercase")]
pub enum Command {
    /// Build or load eigenvalue tables
    Eigen(EigenArgs),
    /// Partial sums, first sign changes and the h_x comparison
    Sums(SumsArgs),
    /// Friable divisor sums over an (x, u) grid
    Friable(FriableArgs),
    /// rho_2 table and Bruijn ratios
    Rho2(Rho2Args),
    /// Random-model moments by Monte Carlo
    Montecarlo(MonteCarloArgs),
    /// Harmonic moments against the random model
    Moments(MomentsArgs),
    /// Weighted averages of lambda_f(n)
    Petersson(PeterssonArgs),
    /// Friable approximation of partial sums and L-values
    Lfun(LfunArgs),
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct EigenArgs {
    #[arg(long, value_delimiter = ',', required = true)]
    pub k: Vec<u32>,
    /// Prime bound P
    #[arg(long, default_value_t = 1000)]
    pub primes: u64,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SumsArgs {
    #[arg(long, value_delimiter = ',', required = true)]
    pub k: Vec<u32>,
    /// Largest x
    #[arg(long, default_value_t = 1000.0)]
    pub x: f64,
    /// Number of profile points
    #[arg(long, default_value_t = 40)]
    pub points: usize,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct FriableArgs {
    #[arg(long, value_delimiter = ',', default_value = "1000000")]
    pub x: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_value = "1,2,3,4")]
    pub u: Vec<f64>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct Rho2Args {
    #[arg(long, default_value_t = 10.0)]
    pub umax: f64,
    #[arg(long, default_value_t = 1e-4)]
    pub step: f64,
    /// Emit every n-th grid node
    #[arg(long, default_value_t = 100)]
    pub every: usize,
    /// (x, y) pairs as x:y for Bruijn ratios
    #[arg(long, value_delimiter = ',', default_value = "1000000:1000")]
    pub bruijn: Vec<String>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct MonteCarloArgs {
    #[arg(long)]
    pub x: f64,
    #[arg(long, default_value_t = 1)]
    pub ell: u32,
    /// Number of samples
    #[arg(long, default_value_t = 1_000_000)]
    pub n: u64,
    /// Also compare with the y-friable restricted moment
    #[arg(long)]
    pub y: Option<f64>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct MomentsArgs {
    #[arg(long, value_delimiter = ',', required = true)]
    pub k: Vec<u32>,
    /// Truncation prime bound for L(1, Sym^2 f)
    #[arg(long, default_value_t = 100_000)]
    pub primes: u64,
    #[arg(long, default_value_t = 2.0)]
    pub x: f64,
    #[arg(long, default_value_t = 1)]
    pub ell: u32,
    /// Threshold on |S_f(x)| / Psi(x, y; tau) counted in the large-sum search
    #[arg(long, default_value_t = 0.5)]
    pub threshold: f64,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct PeterssonArgs {
    #[arg(long, value_delimiter = ',', required = true)]
    pub k: Vec<u32>,
    #[arg(long, default_value_t = 100_000)]
    pub primes: u64,
    /// Largest n
    #[arg(long, default_value_t = 4)]
    pub n: u64,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct LfunArgs {
    #[arg(long, default_value_t = 12)]
    pub k: u32,
    /// Form index within the weight (all forms when absent)
    #[arg(long)]
    pub form: Option<usize>,
    #[arg(long, value_delimiter = ',', default_value = "10000")]
    pub x: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_value = "100,316.22776601683796,1000")]
    pub y: Vec<f64>,
    /// Real part of s for the log-ratio diagnostic
    #[arg(long, default_value_t = 1.2)]
    pub sigma: f64,
    #[arg(long, default_value_t = 0.0)]
    pub t: f64,
    /// Terms of the truncated series
    #[arg(long, default_value_t = 100_000)]
    pub terms: u64,
}

/// One named pass/fail assertion in a report.
#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
}

impl Check {
    fn new(name: impl Into<String>, passed: bool) -> Self {
        Self {
            name: name.into(),
            passed,
        }
    }
}

/// Tabular part of an artifact.
#[derive(Debug, Clone, Default)]
pub struct Table {
    pub headers: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    fn new(headers: &[&'static str]) -> Self {
        Self {
            headers: headers.to_vec(),
            rows: Vec::new(),
        }
    }

    fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.headers.len());
        self.rows.push(row);
    }
}

/// Shortest round-trip decimal form.
pub fn num(v: f64) -> String {
    if v.is_finite() {
        serde_json::to_string(&v).expect("finite float")
    } else {
        format!("{v}")
    }
}

#[derive(Debug)]
pub struct Outcome {
    pub report: Value,
    pub table: Option<Table>,
    pub checks: Vec<Check>,
    pub cache_keys: Vec<String>,
}

impl Outcome {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

struct Context {
    cache: EigenCache,
    cache_keys: Vec<String>,
}

impl Context {
    fn forms(&mut self, k: u32, bound: u64) -> Result<Vec<EigenForm>> {
        let (forms, outcome) = self.cache.load_or_compute(k, bound)?;
        if let crate::cache::CacheOutcome::Recomputed { path, reason } = &outcome {
            eprintln!("warning: recomputed {} ({reason})", path.display());
        }
        self.cache_keys.push(cache_key(k, bound));
        Ok(forms)
    }
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(LabError::InvalidArgument(msg()))
    }
}

fn validate(cfg: &RunConfig) -> Result<()> {
    if let Some(w) = cfg.workers {
        ensure(w >= 1, || "workers must be at least 1".into())?;
    }
    match &cfg.command {
        Command::Eigen(a) => {
            ensure(!a.k.is_empty(), || "no weights given".into())?;
            ensure(a.primes >= 2, || "prime bound must be at least 2".into())
        }
        Command::Sums(a) => {
            ensure(a.x >= 2.0 && a.x <= 1e7, || format!("x = {} outside [2, 1e7]", a.x))?;
            ensure(a.points >= 1, || "need at least one profile point".into())
        }
        Command::Friable(a) => {
            ensure(a.x.iter().all(|&x| (10.0..=1e9).contains(&x)), || "x must lie in [10, 1e9]".into())?;
            ensure(a.u.iter().all(|&u| u >= 1.0), || "u must be at least 1".into())
        }
        Command::Rho2(a) => {
            ensure(a.every >= 1, || "--every must be at least 1".into())?;
            ensure(a.umax <= 50.0, || "umax above 50".into())
        }
        Command::Montecarlo(a) => {
            ensure(cfg.seed.is_some(), || "montecarlo requires --seed".into())?;
            ensure(a.n >= 2, || "need at least 2 samples".into())?;
            if let Some(y) = a.y {
                ensure(y >= 1.0, || "y must be at least 1".into())?;
            }
            Ok(())
        }
        Command::Moments(a) => {
            ensure(a.x >= 1.0, || "x must be at least 1".into())?;
            ensure(a.primes >= 4, || "prime bound must be at least 4".into())
        }
        Command::Petersson(a) => {
            ensure(a.n >= 1, || "n must be at least 1".into())?;
            ensure(a.primes >= 4, || "prime bound must be at least 4".into())
        }
        Command::Lfun(a) => {
            ensure(!a.x.is_empty() && !a.y.is_empty(), || "empty grid".into())?;
            ensure(a.terms >= 2, || "need at least 2 terms".into())
        }
    }
}

/// Geometric grid of integers in `[1, x]`, deduplicated.
fn profile_points(x: f64, points: usize) -> Vec<u64> {
    let mut out: Vec<u64> = (1..=points)
        .map(|i| x.powf(i as f64 / points as f64).floor() as u64)
        .filter(|&n| n >= 1)
        .collect();
    out.dedup();
    out
}

fn run_eigen(ctx: &mut Context, a: &EigenArgs) -> Result<Outcome> {
    let mut table = Table::new(&["k", "form", "p", "lambda", "angle"]);
    let mut weights = Vec::new();
    for &k in &a.k {
        let forms = ctx.forms(k, a.primes)?;
        let mut per_form = Vec::new();
        for f in &forms {
            for (p, l) in f.lambdas() {
                table.push(vec![k.to_string(), f.index().to_string(), p.to_string(), num(l), num(f.angle_p(p)?)]);
            }
            per_form.push(json!({
                "index": f.index(),
                "exact_coefficients": f.has_exact_coefficients(),
                "lambda": f.lambdas().map(|(p, l)| json!([p, l])).collect::<Vec<_>>(),
            }));
        }
        weights.push(json!({ "weight": k, "dimension": forms.len(), "forms": per_form }));
    }
    Ok(Outcome {
        report: json!({ "prime_bound": a.primes, "weights": weights }),
        table: Some(table),
        checks: Vec::new(),
        cache_keys: Vec::new(),
    })
}

fn run_sums(ctx: &mut Context, a: &SumsArgs) -> Result<Outcome> {
    let limit = a.x.floor() as u64;
    let bound = limit.max(2);
    let points = profile_points(a.x, a.points);
    let mut table = Table::new(&["k", "form", "x", "S", "S_over_xlogx"]);
    let mut reports = Vec::new();
    let mut checks = Vec::new();
    for &k in &a.k {
        for f in ctx.forms(k, bound)? {
            let profile = partial_sum_profile(&f, limit)?;
            let n_f = first_sign_change(&f, limit)?;
            for &n in &points {
                let s = profile[n as usize];
                let norm = if n > 1 { s / (n as f64 * (n as f64).ln()) } else { f64::NAN };
                table.push(vec![k.to_string(), f.index().to_string(), n.to_string(), num(s), num(norm)]);
            }
            // the comparison with h_x only says something below the first sign change
            let witness_x = n_f.map_or(limit, |n| n - 1);
            let witness = if witness_x >= 1 {
                let w = positivity_witness_check(&f, witness_x as f64)?;
                checks.push(Check::new(format!("witness k={k} form={}", f.index()), w.holds));
                Some(w)
            } else {
                None
            };
            reports.push(json!({
                "weight": k,
                "form": f.index(),
                "first_sign_change": n_f,
                "sum_at_x": profile[limit as usize],
                "witness": witness,
            }));
        }
    }
    let hx = hx_sum(a.x)?;
    Ok(Outcome {
        report: json!({ "x": a.x, "forms": reports, "hx_sum": hx }),
        table: Some(table),
        checks,
        cache_keys: Vec::new(),
    })
}

fn run_friable(a: &FriableArgs) -> Result<Outcome> {
    let grid: Vec<(f64, f64)> = a
        .x
        .iter()
        .flat_map(|&x| a.u.iter().map(move |&u| (x, x.powf(1.0 / u))))
        .collect();
    let scan = friable_decay_scan(&grid)?;
    let mut table = Table::new(&["x", "y", "u", "psi", "normalized", "bound_ratio"]);
    for r in &scan.rows {
        table.push(vec![num(r.x), num(r.y), num(r.u), num(r.psi), num(r.normalized), num(r.bound_ratio)]);
    }
    let checks = vec![
        Check::new("bounded", scan.bounded),
        Check::new("non_explosive", scan.non_explosive),
    ];
    Ok(Outcome {
        report: serde_json::to_value(&scan)?,
        table: Some(table),
        checks,
        cache_keys: Vec::new(),
    })
}

fn parse_pair(s: &str) -> Result<(f64, f64)> {
    let bad = || LabError::InvalidArgument(format!("expected x:y, got {s:?}"));
    let (x, y) = s.split_once(':').ok_or_else(bad)?;
    Ok((x.trim().parse().map_err(|_| bad())?, y.trim().parse().map_err(|_| bad())?))
}

fn run_rho2(a: &Rho2Args) -> Result<Outcome> {
    let table_data = Rho2Table::build(a.umax, a.step)?;
    let mut table = Table::new(&["u", "rho2"]);
    for (u, v) in table_data.nodes().step_by(a.every) {
        table.push(vec![num(u), num(v)]);
    }
    let residual = table_data.residual(a.umax);
    let profile = decay_profile(&table_data)?;
    let mut bruijn = Vec::new();
    for s in &a.bruijn {
        let (x, y) = parse_pair(s)?;
        bruijn.push(json!({ "x": x, "y": y, "ratio": bruijn_ratio(&table_data, x, y)? }));
    }
    let mut checks = vec![
        Check::new("residual", residual.max_abs <= RHO2_RESIDUAL_TOL),
        Check::new("positive", table_data.min_positive_part() > 0.0),
    ];
    let at_two = (a.umax >= 2.0).then(|| table_data.value(2.0)).transpose()?;
    if let Some(v) = at_two {
        checks.push(Check::new("closed_form_at_2", (v - rho2_at_two()).abs() <= 1e-6));
    }
    Ok(Outcome {
        report: json!({
            "step": table_data.step(),
            "umax": a.umax,
            "rho2_at_2": at_two,
            "residual": residual,
            "decay_profile": profile,
            "bruijn": bruijn,
        }),
        table: Some(table),
        checks,
        cache_keys: Vec::new(),
    })
}

fn run_montecarlo(a: &MonteCarloArgs, seed: u64) -> Result<Outcome> {
    let est = mc_moment(a.x, a.ell, a.n, seed)?;
    let exact = if a.x.floor().powi(2 * a.ell as i32) <= TUPLE_BUDGET {
        Some(exact_moment(a.x, a.ell)?)
    } else {
        None
    };
    let mut checks = Vec::new();
    if let Some(e) = exact {
        checks.push(Check::new("agrees_with_exact", est.agrees_with(e as f64, MC_SIGMAS)));
    }
    let restricted = a
        .y
        .map(|y| restricted_vs_full_moment(a.x, y, a.ell, a.n, seed))
        .transpose()?;
    if let Some(r) = &restricted {
        checks.push(Check::new("full_at_least_restricted", r.ordered));
    }
    let mut table = Table::new(&["x", "ell", "samples", "seed", "mean", "stderr", "exact"]);
    table.push(vec![
        num(a.x),
        a.ell.to_string(),
        est.samples.to_string(),
        seed.to_string(),
        num(est.mean),
        num(est.stderr),
        exact.map_or_else(String::new, |e| e.to_string()),
    ]);
    Ok(Outcome {
        report: json!({
            "estimate": est,
            "exact": exact.map(|e| e.to_string()),
            "restricted": restricted,
        }),
        table: Some(table),
        checks,
        cache_keys: Vec::new(),
    })
}

fn run_moments(ctx: &mut Context, a: &MomentsArgs) -> Result<Outcome> {
    let mut reports = Vec::new();
    let mut table = Table::new(&["k", "form", "omega", "sym2_l1", "S_f_x"]);
    for &k in &a.k {
        let forms = ctx.forms(k, a.primes.max(a.x.floor() as u64))?;
        let w = harmonic_weights(&forms, a.primes)?;
        let m = harmonic_moment(&forms, &w, a.x, a.ell)?;
        let search = large_sum_search(&forms, a.x, a.threshold)?;
        for (fw, row) in w.forms.iter().zip(&search.rows) {
            table.push(vec![k.to_string(), fw.index.to_string(), num(fw.omega), num(fw.sym2.value), num(row.sum)]);
        }
        reports.push(json!({ "weight": k, "weights": w, "moment": m, "large_sums": search }));
    }
    Ok(Outcome {
        report: json!({ "x": a.x, "ell": a.ell, "p_trunc": a.primes, "weights": reports }),
        table: Some(table),
        checks: Vec::new(),
        cache_keys: Vec::new(),
    })
}

fn run_petersson(ctx: &mut Context, a: &PeterssonArgs) -> Result<Outcome> {
    let mut table = Table::new(&["k", "n", "average", "delta", "deviation", "in_range"]);
    let mut checks = Vec::new();
    let mut totals = Vec::new();
    for &k in &a.k {
        let forms = ctx.forms(k, a.primes.max(a.n))?;
        let w = harmonic_weights(&forms, a.primes)?;
        checks.push(Check::new(
            format!("weight_total k={k}"),
            (w.total - 1.0).abs() <= WEIGHT_TOTAL_TOL,
        ));
        totals.push(json!({ "weight": k, "total": w.total, "p_trunc": a.primes }));
        for n in 1..=a.n {
            let r = petersson_check(&forms, &w, n)?;
            if r.in_range {
                checks.push(Check::new(format!("average k={k} n={n}"), r.deviation.abs() <= PETERSSON_TOL));
            }
            table.push(vec![
                k.to_string(),
                n.to_string(),
                num(r.average),
                num(r.delta),
                num(r.deviation),
                r.in_range.to_string(),
            ]);
        }
    }
    Ok(Outcome {
        report: json!({ "totals": totals, "tolerance": PETERSSON_TOL }),
        table: Some(table),
        checks,
        cache_keys: Vec::new(),
    })
}

fn run_lfun(ctx: &mut Context, a: &LfunArgs) -> Result<Outcome> {
    let x_max = a.x.iter().fold(0.0f64, |m, &x| m.max(x)).floor() as u64;
    let y_max = a.y.iter().fold(0.0f64, |m, &y| m.max(y)).floor() as u64;
    let forms = ctx.forms(a.k, x_max.max(a.terms).max(y_max).max(2))?;
    let selected: Vec<&EigenForm> = match a.form {
        Some(i) => vec![forms
            .get(i)
            .ok_or_else(|| LabError::InvalidArgument(format!("weight {} has no form {i}", a.k)))?],
        None => forms.iter().collect(),
    };
    let grid: Vec<(f64, f64)> = a.x.iter().flat_map(|&x| a.y.iter().map(move |&y| (x, y))).collect();
    let s = Complex64::new(a.sigma, a.t);
    let mut table = Table::new(&["form", "x", "y", "S", "Psi_lambda", "D", "normalized_residual"]);
    let mut checks = Vec::new();
    let mut reports = Vec::new();
    for f in selected {
        let r = friable_approx_check(f, &grid)?;
        for row in &r.rows {
            table.push(vec![
                f.index().to_string(),
                num(row.x),
                num(row.y),
                num(row.s),
                num(row.psi_lambda),
                num(row.d),
                num(row.normalized_residual),
            ]);
        }
        checks.push(Check::new(format!("bounded form={}", f.index()), r.bounded));
        let logs = a
            .y
            .iter()
            .map(|&y| log_ratio_diagnostic(f, s, y, a.terms))
            .collect::<Result<Vec<_>>>()?;
        reports.push(json!({ "form": f.index(), "approximation": r, "log_ratio": logs }));
    }
    Ok(Outcome {
        report: json!({ "weight": a.k, "forms": reports }),
        table: Some(table),
        checks,
        cache_keys: Vec::new(),
    })
}

fn command_name(cmd: &Command) -> &'static str {
    match cmd {
        Command::Eigen(_) => "eigen",
        Command::Sums(_) => "sums",
        Command::Friable(_) => "friable",
        Command::Rho2(_) => "rho2",
        Command::Montecarlo(_) => "montecarlo",
        Command::Moments(_) => "moments",
        Command::Petersson(_) => "petersson",
        Command::Lfun(_) => "lfun",
    }
}

/// Run one subcommand and return its results without writing anything.
pub fn execute(cfg: &RunConfig) -> Result<Outcome> {
    validate(cfg)?;
    let mut ctx = Context {
        cache: EigenCache::new(&cfg.cache_dir)?,
        cache_keys: Vec::new(),
    };
    let mut outcome = match &cfg.command {
        Command::Eigen(a) => run_eigen(&mut ctx, a)?,
        Command::Sums(a) => run_sums(&mut ctx, a)?,
        Command::Friable(a) => run_friable(a)?,
        Command::Rho2(a) => run_rho2(a)?,
        Command::Montecarlo(a) => run_montecarlo(a, cfg.seed.expect("validated"))?,
        Command::Moments(a) => run_moments(&mut ctx, a)?,
        Command::Petersson(a) => run_petersson(&mut ctx, a)?,
        Command::Lfun(a) => run_lfun(&mut ctx, a)?,
    };
    outcome.cache_keys = ctx.cache_keys;
    Ok(outcome)
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn write_csv(path: &Path, table: &Table) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| LabError::Io(std::io::Error::other(e));
    w.write_record(&table.headers).map_err(io)?;
    for row in &table.rows {
        w.write_record(row).map_err(io)?;
    }
    let bytes = w.into_inner().map_err(|e| LabError::Io(std::io::Error::other(e.to_string())))?;
    fs::write(path, &bytes)?;
    Ok(bytes)
}

#[derive(Debug, Serialize)]
struct ArtifactEntry {
    file: String,
    sha256: String,
}

/// Write the artifacts of `outcome` and `manifest.json` under `cfg.out`.
pub fn write_outputs(cfg: &RunConfig, outcome: &Outcome) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(&cfg.out)?;
    let name = command_name(&cfg.command);
    let config = serde_json::to_value(cfg)?;
    let config_text = serde_json::to_string(&config)?;
    let config_hash = sha256_hex(config_text.as_bytes());
    let mut artifacts = Vec::new();
    let mut written = Vec::new();

    let mut report = json!({
        "command": name,
        "config_hash": config_hash,
        "checks": outcome.checks,
        "passed": outcome.passed(),
        "result": outcome.report,
    });
    if cfg.format == Format::Json {
        if let Some(t) = &outcome.table {
            let rows: Vec<Value> = t
                .rows
                .iter()
                .map(|r| {
                    Value::Object(
                        t.headers
                            .iter()
                            .zip(r)
                            .map(|(h, v)| (h.to_string(), Value::String(v.clone())))
                            .collect(),
                    )
                })
                .collect();
            report["table"] = Value::Array(rows);
        }
    } else if let Some(t) = &outcome.table {
        let file = format!("{name}.csv");
        let path = cfg.out.join(&file);
        let bytes = write_csv(&path, t)?;
        artifacts.push(ArtifactEntry {
            file,
            sha256: sha256_hex(&bytes),
        });
        written.push(path);
    }
    let file = format!("{name}.json");
    let path = cfg.out.join(&file);
    let text = serde_json::to_string_pretty(&report)? + "\n";
    fs::write(&path, &text)?;
    artifacts.push(ArtifactEntry {
        file,
        sha256: sha256_hex(text.as_bytes()),
    });
    written.push(path);

    let mut keys = outcome.cache_keys.clone();
    keys.sort();
    keys.dedup();
    let manifest = json!({
        "tool": "heckelab",
        "version": env!("CARGO_PKG_VERSION"),
        "command": name,
        "config": config,
        "config_hash": config_hash,
        "cache_keys": keys,
        "artifacts": artifacts,
    });
    let path = cfg.out.join("manifest.json");
    fs::write(&path, serde_json::to_string_pretty(&manifest)? + "\n")?;
    written.push(path);
    Ok(written)
}

/// Exit codes: 0 success, 1 invalid input or runtime error, 2 failed check.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cfg = match RunConfig::try_parse_from(args) {
        Ok(cfg) => cfg,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    if let Some(w) = cfg.workers {
        // a pool may already exist when called twice in one process
        let _ = rayon::ThreadPoolBuilder::new().num_threads(w).build_global();
    }
    let outcome = match execute(&cfg) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e}");
            return 1;
        }
    };
    if let Err(e) = write_outputs(&cfg, &outcome) {
        eprintln!("error: {e}");
        return 1;
    }
    for c in outcome.checks.iter().filter(|c| !c.passed) {
        eprintln!("check failed: {}", c.name);
    }
    if outcome.passed() {
        0
    } else {
        2
    }
}
