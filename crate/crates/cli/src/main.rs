//! `ccflow`: run contracting curvature flows, parameter sweeps and
//! speed-function certifications from the command line.
//!
//! Exit codes for `run`: 0 when the flow terminates in an expected state
//! (converged, reached the origin, ratio blow-up, time exhausted), 2 on
//! lost convexity or numerical failure, 1 on configuration errors.

mod config;

use anyhow::{anyhow, bail, Context, Result};
use ccflow_core::curvature::{check_condition, CurvatureFunction, SamplePlan};
use ccflow_core::diagnostics::{
    check_bounds, convergence_verdict, fit_decay_rate, VerdictTolerances, DECAY_FLOOR,
};
use ccflow_core::flow::{run, FlowConfig, RunOutput};
use ccflow_core::scenarios::{preset_catalogue, InitialSpec, PRESET_NAMES};
use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

#[derive(Parser)]
#[command(
    name = "ccflow",
    version,
    about = "Numerical laboratory for contracting curvature flows of convex hypersurfaces"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate a single flow and write CSV, snapshot and report artifacts
    Run(RunArgs),
    /// Run a one-axis parameter sweep of independent flows
    Sweep(SweepArgs),
    /// Certify a curvature function against the standing conditions
    Check(CheckArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Catalogued experiment (thm1-radial, thm1-support,
    /// thm1-critical-radial, thm4-gauss-blend, counterexample,
    /// sphere-oracle, barrier-oracle)
    #[arg(long, conflicts_with = "config")]
    preset: Option<String>,
    /// Path to a key-value run configuration
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Recorded in the manifest; runs themselves are deterministic
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Override the snapshot interval (flow time)
    #[arg(long)]
    snapshot_every: Option<f64>,
}

#[derive(Args)]
struct SweepArgs {
    /// Template experiment; cells override one field
    #[arg(long, conflicts_with = "config")]
    preset: Option<String>,
    #[arg(long)]
    config: Option<PathBuf>,
    /// Axis spec: `alpha=[1.5:0.5:3.0]` (inclusive range) or
    /// `alpha=1.5,2.0,2.5` (list); keys: alpha, beta, safety, t_max,
    /// resolution, record_every
    #[arg(long)]
    axis: String,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Concurrent cells (results are independent of this)
    #[arg(long, default_value_t = 1)]
    parallel: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    snapshot_every: Option<f64>,
}

#[derive(Args)]
struct CheckArgs {
    /// Curvature function expression, e.g. "blend(gauss-root,arithmetic-mean,0.5)"
    f_spec: String,
    /// Number of principal curvatures
    #[arg(short = 'n', long = "dimension", default_value_t = 2)]
    dimension: usize,
    #[arg(long, default_value_t = 1000)]
    samples: usize,
    #[arg(long, default_value_t = 0x5eed_cafe)]
    seed: u64,
}

fn main() {
    let cli = Cli::parse();
    let code = match cli.command {
        Command::Run(args) => cmd_run(&args),
        Command::Sweep(args) => cmd_sweep(&args),
        Command::Check(args) => cmd_check(&args),
    };
    std::process::exit(code);
}

fn unix_now() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

fn resolve_experiment(
    preset: &Option<String>,
    config: &Option<PathBuf>,
) -> Result<(FlowConfig, InitialSpec, String)> {
    match (preset, config) {
        (Some(name), None) => {
            let p = preset_catalogue(name).map_err(|e| {
                anyhow!("{e}; known presets: {}", PRESET_NAMES.join(", "))
            })?;
            Ok((p.config, p.initial, format!("preset:{name}")))
        }
        (None, Some(path)) => {
            let text = fs::read_to_string(path)
                .with_context(|| format!("cannot read config '{}'", path.display()))?;
            let (cfg, initial) = config::parse_config(&text)?;
            Ok((cfg, initial, format!("config:{}", path.display())))
        }
        _ => bail!("exactly one of --preset or --config is required"),
    }
}

struct RunSummary {
    name: String,
    stop_label: String,
    t_final: f64,
    final_ratio: f64,
    final_grad: f64,
    gamma_grad: f64,
    r_squared_grad: f64,
}

const SUMMARY_HEADER: &str = "name,alpha,beta,speed_kind,parametrization,normalized,f_spec,n,resolution,stop_reason,t_final,final_ratio,final_grad_ratio,gamma_grad,r_squared_grad";

fn summary_row(cfg: &FlowConfig, s: &RunSummary) -> String {
    format!(
        "{},{},{},{},{},{},{},{},{},{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
        s.name,
        cfg.alpha,
        cfg.beta,
        cfg.speed_kind.as_str(),
        cfg.parametrization.as_str(),
        cfg.normalized,
        cfg.f_spec,
        cfg.n,
        cfg.resolution,
        s.stop_label,
        s.t_final,
        s.final_ratio,
        s.final_grad,
        s.gamma_grad,
        s.r_squared_grad,
    )
}

fn summarize(name: &str, output: &RunOutput) -> RunSummary {
    let last = output.series.last().expect("runs always record");
    let grad_fit = output
        .series
        .clip_above("grad_ratio_max", DECAY_FLOOR)
        .ok()
        .filter(|s| s.len() >= 4)
        .and_then(|s| fit_decay_rate(&s, "grad_ratio_max", 0.5).ok());
    RunSummary {
        name: name.to_string(),
        stop_label: output.stop.label().to_string(),
        t_final: output.final_state.t,
        final_ratio: last.ratio,
        final_grad: last.grad_ratio_max,
        gamma_grad: grad_fit.map_or(f64::NAN, |f| f.gamma),
        r_squared_grad: grad_fit.map_or(f64::NAN, |f| f.r_squared),
    }
}

#[allow(clippy::too_many_arguments)]
fn write_run_artifacts(
    dir: &Path,
    source: &str,
    seed: u64,
    cfg: &FlowConfig,
    initial: &InitialSpec,
    output: &RunOutput,
    started: u64,
    name: &str,
) -> Result<RunSummary> {
    fs::create_dir_all(dir)?;
    let ts_path = dir.join("timeseries.csv");
    fs::write(&ts_path, output.series.to_csv())?;

    let snap_dir = dir.join("snapshots");
    fs::create_dir_all(&snap_dir)?;
    for (idx, (t, profile)) in output.snapshots.iter().enumerate() {
        let path = snap_dir.join(format!("snap_{idx:04}_t{t:.6}.txt"));
        fs::write(path, profile.snapshot(*t))?;
    }

    fs::write(dir.join("config.txt"), config::write_config(cfg, initial))?;

    let summary = summarize(name, output);
    let verdict = convergence_verdict(&output.series, &VerdictTolerances::default());
    let bounds = check_bounds(&output.series, cfg);
    let last = output.series.last().unwrap();
    let mut report = String::new();
    report.push_str(&format!("stop_reason: {}\n", output.stop.label()));
    report.push_str(&format!("stop_detail: {}\n", output.stop));
    report.push_str(&format!("t_final: {:.12e}\n", output.final_state.t));
    report.push_str(&format!("final_ratio: {:.12e}\n", last.ratio));
    report.push_str(&format!("final_grad_ratio: {:.12e}\n", last.grad_ratio_max));
    report.push_str(&format!("final_r_min: {:.12e}\n", last.r_min));
    report.push_str(&format!("final_r_max: {:.12e}\n", last.r_max));
    report.push_str(&format!("records: {}\n", output.series.len()));
    report.push_str(&format!("snapshots: {}\n", output.snapshots.len()));
    report.push_str(&verdict.to_string());
    report.push_str(&bounds.to_string());
    fs::write(dir.join("report.txt"), report)?;

    let ended = unix_now();
    let mut manifest = String::new();
    manifest.push_str(&format!("source = {source}\n"));
    manifest.push_str(&format!("seed = {seed}\n"));
    manifest.push_str(&format!("version = {}\n", env!("CARGO_PKG_VERSION")));
    manifest.push_str(&format!("start_unix = {started}\n"));
    manifest.push_str(&format!("end_unix = {ended}\n"));
    manifest.push_str(&format!("stop_reason = {}\n", output.stop.label()));
    manifest.push_str(&format!("stop_detail = {}\n", output.stop));
    manifest.push_str(&format!("timeseries = {}\n", ts_path.display()));
    manifest.push_str(&format!("snapshots = {}\n", snap_dir.display()));
    manifest.push_str(&format!("report = {}\n", dir.join("report.txt").display()));
    manifest.push_str(&format!("config = {}\n", dir.join("config.txt").display()));
    fs::write(dir.join("manifest.txt"), manifest)?;

    // machine-readable row appended to the run index
    let index = dir.join("index.csv");
    let mut text = if index.exists() {
        fs::read_to_string(&index)?
    } else {
        format!("{SUMMARY_HEADER}\n")
    };
    text.push_str(&summary_row(cfg, &summary));
    text.push('\n');
    fs::write(&index, text)?;
    Ok(summary)
}

fn cmd_run(args: &RunArgs) -> i32 {
    let started = unix_now();
    let setup = (|| -> Result<(FlowConfig, InitialSpec, String)> {
        let (mut cfg, initial, source) = resolve_experiment(&args.preset, &args.config)?;
        if let Some(s) = args.snapshot_every {
            cfg.snapshot_every = Some(s);
        }
        cfg.validate().map_err(|e| anyhow!("{e}"))?;
        Ok((cfg, initial, source))
    })();
    let (cfg, initial, source) = match setup {
        Ok(v) => v,
        Err(e) => {
            eprintln!("error: {e:#}");
            return 1;
        }
    };
    let profile = match initial.build(cfg.n, cfg.resolution, cfg.parametrization.profile_kind()) {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            return 1;
        }
    };
    let output = match run(&cfg, &profile) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e}");
            return 1;
        }
    };
    let name = args
        .preset
        .clone()
        .unwrap_or_else(|| "run".to_string());
    match write_run_artifacts(
        &args.out, &source, args.seed, &cfg, &initial, &output, started, &name,
    ) {
        Ok(summary) => {
            println!(
                "{name}: {} (t = {:.4}, ratio = {:.6}, outputs in {})",
                output.stop,
                summary.t_final,
                summary.final_ratio,
                args.out.display()
            );
            if output.stop.is_expected() {
                0
            } else {
                2
            }
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            1
        }
    }
}

fn parse_axis(spec: &str) -> Result<(String, Vec<f64>)> {
    let (key, rhs) = spec
        .split_once('=')
        .ok_or_else(|| anyhow!("axis must look like 'alpha=[1.5:0.5:3.0]' or 'alpha=1.5,2'"))?;
    let key = key.trim().to_string();
    let rhs = rhs.trim();
    let values: Vec<f64> = if let Some(inner) = rhs.strip_prefix('[').and_then(|r| r.strip_suffix(']')) {
        let parts: Vec<&str> = inner.split(':').collect();
        if parts.len() != 3 {
            bail!("range axis must be [start:step:stop]");
        }
        let start: f64 = parts[0].trim().parse().context("axis start")?;
        let step: f64 = parts[1].trim().parse().context("axis step")?;
        let stop: f64 = parts[2].trim().parse().context("axis stop")?;
        // NaN steps must fail this check too
        #[allow(clippy::neg_cmp_op_on_partial_ord)]
        if !(step > 0.0) || stop < start {
            bail!("range axis needs step > 0 and stop >= start");
        }
        let mut values = Vec::new();
        let mut v = start;
        while v <= stop + 1e-9 * step {
            values.push(v);
            v += step;
        }
        values
    } else {
        rhs.split(',')
            .filter(|s| !s.trim().is_empty())
            .map(|s| s.trim().parse::<f64>().context("axis value"))
            .collect::<Result<_>>()?
    };
    if values.is_empty() {
        bail!("axis has no values");
    }
    if values.iter().any(|v| !v.is_finite()) {
        bail!("axis values must be finite");
    }
    Ok((key, values))
}

fn apply_axis(cfg: &mut FlowConfig, key: &str, value: f64) -> Result<()> {
    match key {
        "alpha" => cfg.alpha = value,
        "beta" => cfg.beta = value,
        "safety" => cfg.safety = value,
        "t_max" => cfg.t_max = value,
        "resolution" => {
            if value.fract() != 0.0 || value < 1.0 {
                bail!("resolution axis values must be positive integers");
            }
            cfg.resolution = value as usize;
        }
        "record_every" => {
            if value.fract() != 0.0 || value < 1.0 {
                bail!("record_every axis values must be positive integers");
            }
            cfg.record_every = value as usize;
        }
        other => bail!("unknown axis key '{other}'"),
    }
    Ok(())
}

fn cmd_sweep(args: &SweepArgs) -> i32 {
    let setup = (|| -> Result<(FlowConfig, InitialSpec, String, String, Vec<f64>)> {
        let (mut cfg, initial, source) = resolve_experiment(&args.preset, &args.config)?;
        if let Some(s) = args.snapshot_every {
            cfg.snapshot_every = Some(s);
        }
        let (key, values) = parse_axis(&args.axis)?;
        Ok((cfg, initial, source, key, values))
    })();
    let (template, initial, source, key, values) = match setup {
        Ok(v) => v,
        Err(e) => {
            eprintln!("error: {e:#}");
            return 1;
        }
    };

    let cells: Vec<(usize, f64)> = values.iter().cloned().enumerate().collect();
    let pool = match rayon::ThreadPoolBuilder::new()
        .num_threads(args.parallel.max(1))
        .build()
    {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            return 1;
        }
    };
    if let Err(e) = fs::create_dir_all(&args.out) {
        eprintln!("error: cannot create {}: {e}", args.out.display());
        return 1;
    }

    let results: Vec<(String, FlowConfig, Result<RunSummary, String>)> = pool.install(|| {
        cells
            .par_iter()
            .map(|&(idx, value)| {
                let cell_name = format!("cell_{idx:03}_{key}_{value}");
                let mut cfg = template.clone();
                let cell = (|| -> Result<RunSummary, String> {
                    apply_axis(&mut cfg, &key, value).map_err(|e| e.to_string())?;
                    cfg.validate().map_err(|e| e.to_string())?;
                    let profile = initial
                        .build(cfg.n, cfg.resolution, cfg.parametrization.profile_kind())
                        .map_err(|e| e.to_string())?;
                    let started = unix_now();
                    let output = run(&cfg, &profile).map_err(|e| e.to_string())?;
                    write_run_artifacts(
                        &args.out.join(&cell_name),
                        &format!("{source} [{key} = {value}]"),
                        args.seed,
                        &cfg,
                        &initial,
                        &output,
                        started,
                        &cell_name,
                    )
                    .map_err(|e| e.to_string())
                })();
                (cell_name, cfg, cell)
            })
            .collect()
    });

    // single-threaded summary in cell order
    let mut summary = format!("{SUMMARY_HEADER}\n");
    let mut failures = 0usize;
    for (cell_name, cfg, outcome) in &results {
        match outcome {
            Ok(s) => {
                summary.push_str(&summary_row(cfg, s));
                summary.push('\n');
                println!("{cell_name}: {} (t = {:.4})", s.stop_label, s.t_final);
            }
            Err(e) => {
                failures += 1;
                summary.push_str(&format!(
                    "{},{},{},,,,,,,error,,,,,\n",
                    cell_name, cfg.alpha, cfg.beta
                ));
                eprintln!("{cell_name}: error: {e}");
            }
        }
    }
    if let Err(e) = fs::write(args.out.join("summary.csv"), summary) {
        eprintln!("error: cannot write summary: {e}");
        return 1;
    }
    println!(
        "sweep complete: {} cells, {failures} errors, summary in {}",
        results.len(),
        args.out.join("summary.csv").display()
    );
    0
}

fn cmd_check(args: &CheckArgs) -> i32 {
    let f = match CurvatureFunction::parse(&args.f_spec, args.dimension) {
        Ok(f) => f,
        Err(e) => {
            eprintln!("error: {e}");
            return 1;
        }
    };
    if args.samples == 0 {
        eprintln!("error: --samples must be at least 1");
        return 1;
    }
    let plan = SamplePlan {
        count: args.samples,
        seed: args.seed,
        ..SamplePlan::default()
    };
    let report = check_condition(&f, &plan);
    println!(
        "checking {} in dimension {} ({} samples, seed {})",
        f, args.dimension, args.samples, args.seed
    );
    print!("{report}");
    if report.all_pass() {
        println!("verdict: PASS");
        0
    } else {
        println!("verdict: FAIL");
        1
    }
}
