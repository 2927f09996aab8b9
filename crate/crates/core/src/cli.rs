//! Command-line front end.
//!
//! Exit codes: 0 success, 1 computation failure, 2 usage error. Errors are
//! written to stderr as `{"error": {"kind": ..., "message": ...}}`.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::{json, Value};

use crate::data::{load_csv, MediatorKind, RoleSpec};
use crate::error::{Error, Result};
use crate::estimators::{Effect, EffectEstimates, EstimatorConfig, MethodId};
use crate::formula::true_effects;
use crate::inference::{estimate_with_intervals, interval_table, BootstrapPlan};
use crate::scenario::{parse_overrides, ScenarioSpec, PREVALENCE_BAND};
use crate::simulation::{
    export_results, read_results_csv, run_scenario, truth_of, write_results_csv, MetricsRecord,
    ResultFormat, SimulationPlan, METRICS_HEADER,
};

pub const THREADS_ENV: &str = "MEDMEDIATE_THREADS";

#[derive(Debug, Parser)]
#[command(name = "medmediate", version, about = "Mediation analysis with multiple correlated mediators")]
pub struct Cli {
    /// Worker threads (default: MEDMEDIATE_THREADS or all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Estimate effects on a CSV dataset.
    Analyze(AnalyzeArgs),
    /// Run simulation scenarios and write metrics.
    Simulate(SimulateArgs),
    /// Print the true effects of a scenario.
    Truth(TruthArgs),
    /// Summarize metrics files into a wide table.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub outcome: String,
    #[arg(long)]
    pub exposure: String,
    /// NAME:KIND pairs, KIND one of binary, continuous.
    #[arg(long, value_delimiter = ',', required = true)]
    pub mediators: Vec<String>,
    #[arg(long, value_delimiter = ',')]
    pub covariates: Vec<String>,
    /// Comma-separated method names, or `all` for every method applicable
    /// to the data.
    #[arg(long, default_value = "all")]
    pub methods: String,
    #[arg(long, default_value_t = 200)]
    pub boot: usize,
    #[arg(long, default_value_t = 1000)]
    pub draws: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Add the M1*M2 term for methods that allow it.
    #[arg(long)]
    pub interaction: bool,
    /// Write the JSON results here.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Print JSON instead of a table.
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Comma-separated scenario ids, or `all`.
    #[arg(long, conflicts_with = "spec", required_unless_present = "spec")]
    pub scenario: Option<String>,
    /// JSON scenario override file.
    #[arg(long)]
    pub spec: Option<PathBuf>,
    #[arg(long, default_value_t = 1000)]
    pub replicates: usize,
    #[arg(long, default_value_t = 1000)]
    pub n: usize,
    #[arg(long, default_value = "all")]
    pub methods: String,
    /// Bootstrap resamples; 0 skips the bootstrap.
    #[arg(long, default_value_t = 200)]
    pub boot: usize,
    #[arg(long, default_value_t = 1000)]
    pub draws: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct TruthArgs {
    #[arg(long, conflicts_with = "spec", required_unless_present = "spec")]
    pub scenario: Option<u32>,
    #[arg(long)]
    pub spec: Option<PathBuf>,
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Metrics directories or files (repeatable).
    #[arg(long = "in", required = true)]
    pub inputs: Vec<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

/// A failure with its exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub kind: String,
    pub message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Failure {
            code: 2,
            kind: "usage".into(),
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::UnknownScenario(_) => 2,
            _ => 1,
        };
        Failure {
            code,
            kind: e.kind().into(),
            message: e.to_string(),
        }
    }
}

fn print_failure(f: &Failure) {
    let payload = json!({"error": {"kind": f.kind, "message": f.message}});
    eprintln!("{payload}");
}

/// Parses arguments, runs the command and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return 0;
            }
            print_failure(&Failure::usage(e.to_string().trim().to_string()));
            return 2;
        }
    };
    let mut stdout = std::io::stdout();
    match execute(cli, &mut stdout) {
        Ok(()) => 0,
        Err(f) => {
            print_failure(&f);
            f.code
        }
    }
}

fn thread_count(flag: Option<usize>) -> std::result::Result<Option<usize>, Failure> {
    if let Some(n) = flag {
        return Ok(Some(n));
    }
    match std::env::var(THREADS_ENV) {
        Ok(v) if !v.trim().is_empty() => v
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| Failure::usage(format!("{THREADS_ENV} must be a positive integer, got '{v}'"))),
        _ => Ok(None),
    }
}

/// Runs a parsed command, writing user-facing output to `out`.
pub fn execute(cli: Cli, out: &mut (dyn Write + Send)) -> std::result::Result<(), Failure> {
    let threads = thread_count(cli.threads)?;
    if threads == Some(0) {
        return Err(Failure::usage("thread count must be positive"));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.unwrap_or(0))
        .build()
        .map_err(|e| Failure::usage(e.to_string()))?;
    pool.install(|| match cli.command {
        Command::Analyze(a) => cmd_analyze(a, out),
        Command::Simulate(a) => cmd_simulate(a, out),
        Command::Truth(a) => cmd_truth(a, out),
        Command::Report(a) => cmd_report(a, out),
    })
}

fn io_fail(e: std::io::Error) -> Failure {
    Failure::from(Error::Io(e))
}

fn parse_methods(list: &str) -> std::result::Result<Option<Vec<MethodId>>, Failure> {
    if list.trim().eq_ignore_ascii_case("all") {
        return Ok(None);
    }
    let mut methods = Vec::new();
    for item in list.split(',').filter(|s| !s.trim().is_empty()) {
        let m: MethodId = item.parse().map_err(|e: Error| Failure::usage(e.to_string()))?;
        if !methods.contains(&m) {
            methods.push(m);
        }
    }
    if methods.is_empty() {
        return Err(Failure::usage("no methods given"));
    }
    Ok(Some(methods))
}

fn parse_mediators(items: &[String]) -> std::result::Result<Vec<(String, MediatorKind)>, Failure> {
    items
        .iter()
        .map(|item| {
            let (name, kind) = item
                .rsplit_once(':')
                .ok_or_else(|| Failure::usage(format!("mediator '{item}' must be NAME:KIND")))?;
            let kind: MediatorKind = kind.parse().map_err(|_| {
                Failure::usage(format!("unknown mediator kind '{kind}' (use binary or continuous)"))
            })?;
            Ok((name.to_string(), kind))
        })
        .collect()
}

#[derive(Serialize)]
struct EffectRow {
    estimate: f64,
    lower: Option<f64>,
    upper: Option<f64>,
    width: Option<f64>,
}

fn effect_rows(est: &EffectEstimates) -> BTreeMap<&'static str, EffectRow> {
    interval_table(est)
        .into_iter()
        .map(|(e, v, iv)| {
            (
                e.as_str(),
                EffectRow {
                    estimate: v,
                    lower: iv.map(|i| i.lower),
                    upper: iv.map(|i| i.upper),
                    width: iv.map(|i| i.width()),
                },
            )
        })
        .collect()
}

/// `1.152 (1.064–1.251) 0.187`, the estimate / interval / width triplet.
pub fn format_triplet(estimate: f64, lower: f64, upper: f64) -> String {
    format!("{estimate:.3} ({lower:.3}–{upper:.3}) {:.3}", upper - lower)
}

fn cmd_analyze(a: AnalyzeArgs, out: &mut (dyn Write + Send)) -> std::result::Result<(), Failure> {
    let mediators = parse_mediators(&a.mediators)?;
    let requested = parse_methods(&a.methods)?;
    let roles = RoleSpec {
        outcome: a.outcome.clone(),
        exposure: a.exposure.clone(),
        mediators,
        covariates: a.covariates.clone(),
    };
    let ds = load_csv(&a.data, &roles).map_err(Error::from)?;
    let k = ds.n_mediators();
    let methods: Vec<MethodId> = match requested {
        Some(m) => {
            if let Some(bad) = m.iter().find(|m| !m.accepts(k)) {
                return Err(Error::MediatorCount {
                    method: bad.as_str(),
                    expected: 2,
                    found: k,
                }
                .into());
            }
            m
        }
        None => MethodId::ALL.into_iter().filter(|m| m.accepts(k)).collect(),
    };
    let plan = (a.boot > 0).then(|| BootstrapPlan::new(a.boot, a.seed));
    let mut results = BTreeMap::new();
    let mut estimates = Vec::new();
    for m in &methods {
        let mut cfg = EstimatorConfig::new(*m).draws(a.draws).seed(a.seed);
        cfg.include_interaction = a.interaction && m.capabilities().interaction_supported;
        let est = estimate_with_intervals(&ds, &cfg, plan.as_ref())?;
        results.insert(m.as_str(), effect_rows(&est));
        estimates.push(est);
    }
    let payload = json!({
        "n_rows": ds.n_rows(),
        "dropped_rows": ds.dropped_rows(),
        "seed": a.seed,
        "bootstrap_resamples": a.boot,
        "methods": results,
    });
    let text = serde_json::to_string_pretty(&payload).map_err(Error::from)?;
    if let Some(path) = &a.out {
        fs::write(path, format!("{text}\n")).map_err(io_fail)?;
    }
    if a.json {
        writeln!(out, "{text}").map_err(io_fail)?;
    } else {
        writeln!(out, "n = {} ({} rows dropped)", ds.n_rows(), ds.dropped_rows()).map_err(io_fail)?;
        for est in &estimates {
            writeln!(out, "{}", est.method).map_err(io_fail)?;
            for (e, v, iv) in interval_table(est) {
                let line = match iv {
                    Some(i) => format_triplet(v, i.lower, i.upper),
                    None => format!("{v:.3}"),
                };
                writeln!(out, "  {:<4} {line}", e.as_str()).map_err(io_fail)?;
            }
        }
    }
    Ok(())
}

fn load_specs(scenario: Option<&str>, spec: Option<&Path>) -> std::result::Result<Vec<ScenarioSpec>, Failure> {
    if let Some(path) = spec {
        let text = fs::read_to_string(path).map_err(io_fail)?;
        return Ok(parse_overrides(&text)?);
    }
    let ids = scenario.ok_or_else(|| Failure::usage("either --scenario or --spec is required"))?;
    if ids.trim().eq_ignore_ascii_case("all") {
        return Ok(ScenarioSpec::grid());
    }
    ids.split(',')
        .map(|s| {
            let id: u32 = s
                .trim()
                .parse()
                .map_err(|_| Failure::usage(format!("invalid scenario id '{s}'")))?;
            Ok(ScenarioSpec::table(id)?)
        })
        .collect()
}

fn cmd_simulate(a: SimulateArgs, out: &mut (dyn Write + Send)) -> std::result::Result<(), Failure> {
    let specs = load_specs(a.scenario.as_deref(), a.spec.as_deref())?;
    let methods = parse_methods(&a.methods)?.unwrap_or_else(|| MethodId::ALL.to_vec());
    if a.replicates == 0 || a.n == 0 {
        return Err(Failure::usage("--replicates and --n must be positive"));
    }
    let mut plan = SimulationPlan::new(a.replicates, a.n, methods.clone(), a.seed);
    plan.draws = a.draws;
    plan.bootstrap = (a.boot > 0).then(|| BootstrapPlan::new(a.boot, a.seed));
    if let Some(b) = &plan.bootstrap {
        b.validate()?;
    }
    fs::create_dir_all(&a.out).map_err(io_fail)?;

    let mut records: Vec<MetricsRecord> = Vec::new();
    let mut scenarios = Vec::new();
    for spec in &specs {
        let run = run_scenario(spec, &plan)?;
        let (lo, hi) = PREVALENCE_BAND;
        if run.prevalence < lo || run.prevalence > hi {
            eprintln!(
                "warning: scenario {} outcome prevalence {:.4} lies outside [{lo}, {hi}]",
                spec.id, run.prevalence
            );
        }
        writeln!(
            out,
            "scenario {}: prevalence {:.4}, {} records",
            spec.id,
            run.prevalence,
            run.records.len()
        )
        .map_err(io_fail)?;
        let truth: BTreeMap<&str, f64> = Effect::ALL.iter().map(|e| (e.as_str(), truth_of(&run.truth, *e))).collect();
        scenarios.push(json!({
            "spec": spec,
            "beta0": spec.beta0(),
            "prevalence": run.prevalence,
            "truth": truth,
            "truth_abs_error": run.truth.estimated_abs_error,
            "failed_replicates": run.failures.iter().map(|(m, n)| (m.as_str(), *n)).collect::<BTreeMap<_, _>>(),
        }));
        records.extend(run.records);
    }
    export_results(&records, a.out.join("metrics.csv"), ResultFormat::Csv)?;
    export_results(&records, a.out.join("metrics.json"), ResultFormat::Json)?;
    let metadata = json!({
        "tool": "medmediate",
        "version": env!("CARGO_PKG_VERSION"),
        "seed": a.seed,
        "replicates": a.replicates,
        "n": a.n,
        "bootstrap_resamples": a.boot,
        "draws": a.draws,
        "methods": methods.iter().map(|m| m.as_str()).collect::<Vec<_>>(),
        "scenarios": scenarios,
    });
    let text = serde_json::to_string_pretty(&metadata).map_err(Error::from)?;
    fs::write(a.out.join("metadata.json"), format!("{text}\n")).map_err(io_fail)?;
    Ok(())
}

fn cmd_truth(a: TruthArgs, out: &mut (dyn Write + Send)) -> std::result::Result<(), Failure> {
    let scenario = a.scenario.map(|id| id.to_string());
    let specs = load_specs(scenario.as_deref(), a.spec.as_deref())?;
    let mut all = Vec::new();
    for spec in &specs {
        let t = true_effects(spec)?;
        let prevalence = spec.prevalence()?;
        if a.json {
            all.push(json!({
                "scenario": spec.id,
                "TE": t.te, "DE": t.de, "IE": t.ie, "IE1": t.ie1, "IE2": t.ie2,
                "estimated_abs_error": t.estimated_abs_error,
                "prevalence": prevalence,
            }));
        } else {
            writeln!(out, "scenario {} (prevalence {prevalence:.4})", spec.id).map_err(io_fail)?;
            for (name, v) in [("TE", t.te), ("DE", t.de), ("IE", t.ie), ("IE1", t.ie1), ("IE2", t.ie2)] {
                writeln!(out, "  {name:<4} {v:.10}").map_err(io_fail)?;
            }
            writeln!(out, "  integration error <= {:.2e}", t.estimated_abs_error).map_err(io_fail)?;
        }
    }
    if a.json {
        let v = if all.len() == 1 { all.pop().unwrap() } else { Value::Array(all) };
        writeln!(out, "{}", serde_json::to_string_pretty(&v).map_err(Error::from)?).map_err(io_fail)?;
    }
    Ok(())
}

fn collect_metric_files(inputs: &[PathBuf]) -> std::result::Result<Vec<PathBuf>, Failure> {
    let mut files = Vec::new();
    for p in inputs {
        if p.is_dir() {
            let mut entries: Vec<PathBuf> = fs::read_dir(p)
                .map_err(io_fail)?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| p.extension().is_some_and(|x| x == "csv"))
                .collect();
            entries.sort();
            for e in entries {
                let head = fs::read_to_string(&e).map_err(io_fail)?;
                if head.lines().next() == Some(METRICS_HEADER.join(",").as_str()) {
                    files.push(e);
                }
            }
        } else if p.is_file() {
            files.push(p.clone());
        } else {
            return Err(io_fail(std::io::Error::new(
                std::io::ErrorKind::NotFound,
                format!("{} does not exist", p.display()),
            )));
        }
    }
    if files.is_empty() {
        return Err(Failure::from(Error::Config("no metrics files found".into())));
    }
    Ok(files)
}

const REPORT_METRICS: [&str; 6] = ["truth", "percent_bias", "mse", "coverage", "mean_width", "n_used"];

fn cmd_report(a: ReportArgs, out: &mut (dyn Write + Send)) -> std::result::Result<(), Failure> {
    let files = collect_metric_files(&a.inputs)?;
    let mut merged: BTreeMap<(u32, MethodId, Effect), MetricsRecord> = BTreeMap::new();
    for f in &files {
        let file = fs::File::open(f).map_err(io_fail)?;
        for r in read_results_csv(file)? {
            let key = (r.scenario, r.method, r.effect);
            match merged.get(&key) {
                Some(prev) if *prev != r => {
                    return Err(Error::DuplicateResults {
                        scenario: r.scenario,
                        method: r.method.to_string(),
                        effect: r.effect.to_string(),
                    }
                    .into())
                }
                Some(_) => {}
                None => {
                    merged.insert(key, r);
                }
            }
        }
    }
    let mut rows: BTreeMap<(u32, MethodId), BTreeMap<Effect, &MetricsRecord>> = BTreeMap::new();
    for ((s, m, e), r) in &merged {
        rows.entry((*s, *m)).or_default().insert(*e, r);
    }

    let mut w = csv::Writer::from_path(&a.out).map_err(Error::from)?;
    let mut header = vec!["scenario".to_string(), "method".to_string()];
    for e in Effect::ALL {
        for m in REPORT_METRICS {
            header.push(format!("{}_{m}", e.as_str()));
        }
    }
    w.write_record(&header).map_err(Error::from)?;
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    for ((s, m), effects) in &rows {
        let mut rec = vec![s.to_string(), m.to_string()];
        for e in Effect::ALL {
            match effects.get(&e) {
                Some(r) => rec.extend([
                    r.truth.to_string(),
                    r.percent_bias.to_string(),
                    r.mse.to_string(),
                    opt(r.coverage),
                    opt(r.mean_width),
                    r.n_used.to_string(),
                ]),
                None => rec.extend(std::iter::repeat_n(String::new(), REPORT_METRICS.len())),
            }
        }
        w.write_record(&rec).map_err(Error::from)?;
    }
    w.flush().map_err(io_fail)?;

    let meta = json!({
        "rows": rows.len(),
        "inputs": files.iter().map(|f| f.display().to_string()).collect::<Vec<_>>(),
        "reference_lines": {
            "percent_bias": [-10.0, 10.0],
            "coverage": 0.95,
        },
    });
    let meta_path = PathBuf::from(format!("{}.meta.json", a.out.display()));
    fs::write(&meta_path, format!("{}\n", serde_json::to_string_pretty(&meta).map_err(Error::from)?))
        .map_err(io_fail)?;
    writeln!(out, "{} rows written to {}", rows.len(), a.out.display()).map_err(io_fail)?;
    Ok(())
}

/// Writes metrics CSV to a string, for tests and examples.
pub fn metrics_csv_string(records: &[MetricsRecord]) -> Result<String> {
    let mut buf = Vec::new();
    write_results_csv(records, &mut buf)?;
    Ok(String::from_utf8(buf).expect("utf-8"))
}
