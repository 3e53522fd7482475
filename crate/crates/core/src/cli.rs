//! Command-line driver: `simulate`, `track`, `evaluate` and `compare`.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::eval::{evaluate_sequence, radar_times, summarize, EvalConfig, SequenceMetrics, Summary};
use crate::io::{self, Header, STREAM_FORMAT, TRACKS_FORMAT, TRUTH_FORMAT};
use crate::pipeline::{run_case, run_tracker, simulate, Simulation, TrackerConfig, Variant};

#[derive(Debug, Parser)]
#[command(name = "ctxtrack", version, about = "Context-aware radar/lidar multi-target tracking")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate a scenario; writes stream.jsonl and truth.jsonl.
    Simulate(SimulateArgs),
    /// Run one tracker variant over a scan stream.
    Track(TrackArgs),
    /// Score tracker output against ground truth at radar scan times.
    Evaluate(EvaluateArgs),
    /// Run every variant over several scenarios and seeds and print the comparison table.
    Compare(CompareArgs),
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub scenario: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// TOML run configuration.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TrackArgs {
    /// Scan stream written by `simulate`.
    #[arg(long)]
    pub stream: PathBuf,
    #[arg(long)]
    pub variant: Option<Variant>,
    /// Tracks file; defaults to tracks-<variant>.jsonl beside the stream.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// Tracks file; repeat together with --truth and --stream to evaluate several runs.
    #[arg(long, required = true)]
    pub tracks: Vec<PathBuf>,
    #[arg(long, required = true)]
    pub truth: Vec<PathBuf>,
    #[arg(long, required = true)]
    pub stream: Vec<PathBuf>,
    /// Also write the report as JSON lines.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    /// A count (`10` means seeds 0..10), a range (`5..15`) or a list (`1,4,9`).
    #[arg(long)]
    pub seeds: Option<String>,
    /// Scenario names, comma separated or repeated.
    #[arg(long, value_delimiter = ',')]
    pub scenario: Vec<String>,
    /// Worker threads; defaults to all cores.
    #[arg(long)]
    pub jobs: Option<usize>,
    /// Output directory; per-run results are cached under runs/ so an
    /// interrupted comparison resumes where it stopped.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub config: Option<PathBuf>,
}

/// Parses the process arguments, runs the command, and maps failure to a
/// one-line diagnostic and a nonzero exit code.
pub fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command, &mut std::io::stdout()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("ctxtrack: error: {}", one_line(&e.to_string()));
            ExitCode::FAILURE
        }
    }
}

fn one_line(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

pub fn run(command: Command, stdout: &mut dyn std::io::Write) -> Result<()> {
    let text = match command {
        Command::Simulate(a) => cmd_simulate(&a)?,
        Command::Track(a) => cmd_track(&a)?,
        Command::Evaluate(a) => cmd_evaluate(&a)?,
        Command::Compare(a) => cmd_compare(&a)?,
    };
    stdout.write_all(text.as_bytes())?;
    Ok(())
}

fn load_config(path: &Option<PathBuf>) -> Result<RunConfig> {
    match path {
        Some(p) => RunConfig::load(p),
        None => Ok(RunConfig::default()),
    }
}

pub fn cmd_simulate(a: &SimulateArgs) -> Result<String> {
    let cfg = load_config(&a.config)?;
    let scenario = a.scenario.clone().unwrap_or(cfg.scenario);
    let seed = a.seed.unwrap_or(cfg.seed);
    let out = a.out.clone().unwrap_or(cfg.out);
    let sim = simulate(&scenario, seed)?;
    let header = |format| Header {
        scenario: Some(scenario.clone()),
        seed: Some(seed),
        ..Header::new(format)
    };
    let stream = out.join("stream.jsonl");
    let truth = out.join("truth.jsonl");
    io::write_stream(&stream, &header(STREAM_FORMAT), &sim.stream)?;
    io::write_truth(&truth, &header(TRUTH_FORMAT), &sim.truth)?;
    Ok(format!(
        "wrote {} ({} scans) and {} ({} objects)\n",
        stream.display(),
        sim.stream.len(),
        truth.display(),
        sim.truth.len()
    ))
}

pub fn cmd_track(a: &TrackArgs) -> Result<String> {
    let cfg = load_config(&a.config)?;
    let variant = a.variant.unwrap_or(cfg.variant);
    let (header, stream) = io::read_stream(&a.stream)?;
    let outputs = run_tracker(&stream, variant, &cfg.tracker)?;
    let out = a.out.clone().unwrap_or_else(|| {
        a.stream
            .with_file_name(format!("tracks-{}.jsonl", variant.name()))
    });
    let header = Header {
        variant: Some(variant.name().to_string()),
        ..Header { format: TRACKS_FORMAT.into(), ..header }
    };
    io::write_tracks(&out, &header, &outputs)?;
    Ok(format!("wrote {} ({} scan outputs)\n", out.display(), outputs.len()))
}

/// One metrics line of an evaluation report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportLine {
    pub scope: String,
    #[serde(flatten)]
    pub summary: Summary,
}

pub fn cmd_evaluate(a: &EvaluateArgs) -> Result<String> {
    if a.tracks.len() != a.truth.len() || a.tracks.len() != a.stream.len() {
        return Err(Error::InvalidConfig(
            "--tracks, --truth and --stream must be given the same number of times".into(),
        ));
    }
    let cfg = load_config(&a.config)?;
    let mut groups: Vec<(String, Vec<SequenceMetrics>)> = Vec::new();
    for (k, ((tracks, truth), stream)) in a.tracks.iter().zip(&a.truth).zip(&a.stream).enumerate() {
        let (truth_header, truth) = io::read_truth(truth)?;
        let (stream_header, stream) = io::read_stream(stream)?;
        let (_, outputs) = io::read_tracks(tracks)?;
        let metrics = evaluate_sequence(&truth, &outputs, &radar_times(&stream), &cfg.eval)?;
        let scope = truth_header
            .scenario
            .or(stream_header.scenario)
            .unwrap_or_else(|| format!("run{}", k + 1));
        match groups.iter_mut().find(|(s, _)| *s == scope) {
            Some((_, g)) => g.push(metrics),
            None => groups.push((scope, vec![metrics])),
        }
    }
    let mut lines: Vec<ReportLine> = Vec::new();
    lines.push(ReportLine {
        scope: "combined".into(),
        summary: summarize(groups.iter().flat_map(|(_, g)| g))?,
    });
    for (scope, g) in &groups {
        lines.push(ReportLine {
            scope: scope.clone(),
            summary: summarize(g)?,
        });
    }
    if let Some(out) = &a.out {
        let mut text = String::new();
        for l in &lines {
            text.push_str(&serde_json::to_string(l).map_err(|e| Error::InvalidConfig(e.to_string()))?);
            text.push('\n');
        }
        std::fs::write(out, text).map_err(|source| Error::File {
            path: out.clone(),
            source,
        })?;
    }
    let mut t = format!(
        "{:<12} {:>9} {:>7} {:>7} {:>9} {:>12} {:>9} {:>9} {:>6}\n",
        "scope", "HOTA (%)", "DetA", "AssA", "GOSPA", "localization", "missed", "false", "steps"
    );
    for l in &lines {
        let s = &l.summary;
        let _ = writeln!(
            t,
            "{:<12} {:>9.2} {:>7.4} {:>7.4} {:>9.3} {:>12.2} {:>9.2} {:>9.2} {:>6}",
            l.scope, s.hota, s.deta, s.assa, s.gospa_rms, s.localization, s.missed, s.false_, s.steps
        );
    }
    Ok(t)
}

/// Parses `10`, `5..15` or `1,4,9`.
pub fn parse_seeds(s: &str) -> Result<Vec<u64>> {
    let bad = || Error::InvalidConfig(format!("cannot read seeds from `{s}`"));
    let num = |t: &str| t.trim().parse::<u64>().map_err(|_| bad());
    let seeds: Vec<u64> = if let Some((a, b)) = s.split_once("..") {
        (num(a)?..num(b)?).collect()
    } else if s.contains(',') {
        s.split(',').map(num).collect::<Result<_>>()?
    } else {
        (0..num(s)?).collect()
    };
    if seeds.is_empty() {
        return Err(bad());
    }
    Ok(seeds)
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct RunKey {
    pub scenario: String,
    pub seed: u64,
    pub variant: Variant,
}

impl RunKey {
    fn file_name(&self) -> String {
        format!("{}-{}-{}.json", self.scenario, self.seed, self.variant.name())
    }
}

#[derive(Serialize, Deserialize)]
struct CachedRun {
    tracker: TrackerConfig,
    eval: EvalConfig,
    metrics: SequenceMetrics,
}

/// Runs every (scenario, seed, variant) combination, reusing cached results
/// in `cache` whose configuration matches. Results follow the order of `keys`.
pub fn run_all(
    keys: &[RunKey],
    tracker: &TrackerConfig,
    eval: &EvalConfig,
    jobs: Option<usize>,
    cache: Option<&Path>,
) -> Result<Vec<SequenceMetrics>> {
    if let Some(dir) = cache {
        std::fs::create_dir_all(dir).map_err(|source| Error::File {
            path: dir.to_path_buf(),
            source,
        })?;
    }
    let cached = |k: &RunKey| -> Option<SequenceMetrics> {
        let run: CachedRun = io::read_json(&cache?.join(k.file_name())).ok()?;
        (run.tracker == *tracker && run.eval == *eval).then_some(run.metrics)
    };
    let work = || -> Result<Vec<SequenceMetrics>> {
        let mut pairs: Vec<(String, u64)> = keys.iter().map(|k| (k.scenario.clone(), k.seed)).collect();
        pairs.sort();
        pairs.dedup();
        let needed: Vec<&(String, u64)> = pairs
            .iter()
            .filter(|(s, seed)| keys.iter().any(|k| k.scenario == *s && k.seed == *seed && cached(k).is_none()))
            .collect();
        let sims: Vec<Simulation> = needed.par_iter().map(|(s, seed)| simulate(s, *seed)).collect::<Result<_>>()?;
        keys.par_iter()
            .map(|k| {
                if let Some(m) = cached(k) {
                    return Ok(m);
                }
                let sim = sims
                    .iter()
                    .find(|s| s.scenario == k.scenario && s.seed == k.seed)
                    .expect("simulated above");
                let metrics = run_case(sim, k.variant, tracker, eval)?;
                if let Some(dir) = cache {
                    let run = CachedRun {
                        tracker: *tracker,
                        eval: eval.clone(),
                        metrics,
                    };
                    io::write_json_atomic(&dir.join(k.file_name()), &run)?;
                    return Ok(run.metrics);
                }
                Ok(metrics)
            })
            .collect()
    };
    match jobs {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::InvalidConfig(e.to_string()))?
            .install(work),
        None => work(),
    }
}

/// Per-seed summaries for one variant.
#[derive(Clone, Debug, PartialEq)]
pub struct ComparisonRow {
    pub variant: Variant,
    /// Both scenarios pooled per seed.
    pub combined: Vec<Summary>,
    /// Indexed like `Comparison::scenarios`, then by seed.
    pub per_scenario: Vec<Vec<Summary>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Comparison {
    pub scenarios: Vec<String>,
    pub seeds: Vec<u64>,
    /// In table order.
    pub rows: Vec<ComparisonRow>,
}

/// Mean and sample standard deviation.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

pub fn compare(
    scenarios: &[String],
    seeds: &[u64],
    tracker: &TrackerConfig,
    eval: &EvalConfig,
    jobs: Option<usize>,
    cache: Option<&Path>,
) -> Result<Comparison> {
    let keys: Vec<RunKey> = Variant::ALL
        .iter()
        .flat_map(|v| {
            scenarios.iter().flat_map(move |s| {
                seeds.iter().map(move |seed| RunKey {
                    scenario: s.clone(),
                    seed: *seed,
                    variant: *v,
                })
            })
        })
        .collect();
    let results = run_all(&keys, tracker, eval, jobs, cache)?;
    let get = |v: Variant, s: &str, seed: u64| {
        let i = keys
            .iter()
            .position(|k| k.variant == v && k.scenario == s && k.seed == seed)
            .expect("every combination was run");
        &results[i]
    };
    let rows = Variant::ALL
        .iter()
        .map(|&v| {
            let combined = seeds
                .iter()
                .map(|&seed| summarize(scenarios.iter().map(|s| get(v, s, seed))))
                .collect::<Result<_>>()?;
            let per_scenario = scenarios
                .iter()
                .map(|s| seeds.iter().map(|&seed| summarize([get(v, s, seed)])).collect::<Result<_>>())
                .collect::<Result<_>>()?;
            Ok(ComparisonRow {
                variant: v,
                combined,
                per_scenario,
            })
        })
        .collect::<Result<_>>()?;
    Ok(Comparison {
        scenarios: scenarios.to_vec(),
        seeds: seeds.to_vec(),
        rows,
    })
}

impl Comparison {
    pub fn row(&self, variant: Variant) -> &ComparisonRow {
        self.rows.iter().find(|r| r.variant == variant).expect("all variants present")
    }

    /// Fixed-width table, mean ± std over seeds.
    pub fn table(&self) -> String {
        let cell = |xs: &[Summary], f: fn(&Summary) -> f64| {
            let (m, s) = mean_std(&xs.iter().map(f).collect::<Vec<_>>());
            format!("{m:6.2} ± {s:5.2}")
        };
        let mut columns = vec!["Combined".to_string()];
        columns.extend(self.scenarios.iter().map(|s| format!("Scenario {s}")));
        let mut t = format!("{:<22}", "");
        for c in &columns {
            let _ = write!(t, " | {c:^29}");
        }
        t.push('\n');
        let _ = write!(t, "{:<22}", "Method");
        for _ in &columns {
            let _ = write!(t, " | {:>14} {:>14}", "HOTA (%)", "GOSPA");
        }
        t.push('\n');
        t.push_str(&"-".repeat(22 + columns.len() * 32));
        t.push('\n');
        for r in &self.rows {
            let _ = write!(t, "{:<22}", r.variant.name());
            for xs in std::iter::once(&r.combined).chain(&r.per_scenario) {
                let _ = write!(t, " | {} {}", cell(xs, |s| s.hota), cell(xs, |s| s.gospa_rms));
            }
            t.push('\n');
        }
        let _ = writeln!(t, "mean ± std over {} seeds", self.seeds.len());
        t
    }
}

/// Summary-file line: one variant, one column.
#[derive(Serialize)]
struct SummaryLine<'a> {
    variant: &'a str,
    scope: &'a str,
    seeds: usize,
    hota_mean: f64,
    hota_std: f64,
    gospa_mean: f64,
    gospa_std: f64,
}

pub fn cmd_compare(a: &CompareArgs) -> Result<String> {
    let cfg = load_config(&a.config)?;
    let seeds = match &a.seeds {
        Some(s) => parse_seeds(s)?,
        None => (0..cfg.seeds).collect(),
    };
    let scenarios = if a.scenario.is_empty() { cfg.scenarios.clone() } else { a.scenario.clone() };
    for s in &scenarios {
        crate::sim::scenario_by_name(s, 0)?;
    }
    let out = a.out.clone().unwrap_or(cfg.out.clone());
    let comparison = compare(&scenarios, &seeds, &cfg.tracker, &cfg.eval, a.jobs, Some(&out.join("runs")))?;

    let mut lines = String::new();
    for r in &comparison.rows {
        let scopes = std::iter::once(("combined", &r.combined)).chain(
            comparison
                .scenarios
                .iter()
                .map(|s| s.as_str())
                .zip(&r.per_scenario),
        );
        for (scope, xs) in scopes {
            let (hota_mean, hota_std) = mean_std(&xs.iter().map(|s| s.hota).collect::<Vec<_>>());
            let (gospa_mean, gospa_std) = mean_std(&xs.iter().map(|s| s.gospa_rms).collect::<Vec<_>>());
            let line = SummaryLine {
                variant: r.variant.name(),
                scope,
                seeds: xs.len(),
                hota_mean,
                hota_std,
                gospa_mean,
                gospa_std,
            };
            lines.push_str(&serde_json::to_string(&line).map_err(|e| Error::InvalidConfig(e.to_string()))?);
            lines.push('\n');
        }
    }
    let table = comparison.table();
    for (name, text) in [("summary.jsonl", &lines), ("table.txt", &table)] {
        let path = out.join(name);
        std::fs::write(&path, text).map_err(|source| Error::File { path, source })?;
    }
    Ok(table)
}
