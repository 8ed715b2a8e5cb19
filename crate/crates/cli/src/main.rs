//! Command-line entry point wiring the library: simulate, estimate, test,
//! table and hedge subcommands with reproducible seeds.
//!
//! Every flag can also be supplied through `--config file.json` (a flat JSON
//! object keyed by the long flag names); explicit command-line flags win.
//! Every output file embeds the resolved configuration, so runs are
//! self-describing.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use spotcorr::experiments::{self, McGrid};
use spotcorr::longrun::{HacConfig, Kernel};
use spotcorr::market_data::{
    self, load_pair, log_increments, previous_tick_resample, read_panel_csv, write_panel_csv,
    LogPricePanel,
};
use spotcorr::pipeline::{run_monthly, run_tests, EstimationConfig, MethodSelection, TestRunConfig};
use spotcorr::simulation::{simulate_paths, SimConfig};
use spotcorr::spot::{BlockSpec, ThresholdMode, TruncationConfig};

#[derive(Parser)]
#[command(
    name = "spotcorr",
    about = "Diurnal spot correlation curves and tests from high-frequency price panels",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a bivariate jump-diffusion log-price panel.
    Simulate(SimulateArgs),
    /// Estimate diurnal covariance and correlation curves from a panel.
    Estimate(EstimateArgs),
    /// Run the diurnal-correlation tests (whole sample or monthly batches).
    Test(TestArgs),
    /// Monte Carlo rejection tables over a simulation grid.
    Table(TableArgs),
    /// Minimum-variance hedge ratios and the adaptive-vs-daily variance ratio.
    Hedge(HedgeArgs),
}

/// Flat JSON config: values fill in flags the user did not pass.
fn load_config(path: &Option<PathBuf>) -> Result<serde_json::Value> {
    match path {
        None => Ok(serde_json::Value::Null),
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .with_context(|| format!("reading config {}", p.display()))?;
            Ok(serde_json::from_str(&text)?)
        }
    }
}

fn cfg_f64(cfg: &serde_json::Value, key: &str) -> Option<f64> {
    cfg.get(key).and_then(|v| v.as_f64())
}

fn cfg_u64(cfg: &serde_json::Value, key: &str) -> Option<u64> {
    cfg.get(key).and_then(|v| v.as_u64())
}

fn cfg_str(cfg: &serde_json::Value, key: &str) -> Option<String> {
    cfg.get(key).and_then(|v| v.as_str()).map(|s| s.to_string())
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    /// Intraday intervals per day.
    #[arg(long)]
    n: Option<usize>,
    /// Number of trading days.
    #[arg(long = "T")]
    t_days: Option<usize>,
    /// Diurnal correlation intercept; slope is 2(1-a).
    #[arg(long)]
    a: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Fine Euler steps per day (default 23400).
    #[arg(long)]
    steps_per_day: Option<usize>,
    /// Jump intensity per day per asset (default 0.2; 0 disables jumps).
    #[arg(long)]
    jump_intensity: Option<f64>,
    /// First synthetic date label (ISO); weekends are skipped.
    #[arg(long)]
    start_date: Option<String>,
    /// Output panel CSV.
    #[arg(long, alias = "out")]
    output: Option<PathBuf>,
    /// Optional CSV with the latent volatility and correlation paths.
    #[arg(long)]
    latent_out: Option<PathBuf>,
}

fn run_simulate(args: SimulateArgs) -> Result<()> {
    let cfg = load_config(&args.config)?;
    let n = args.n.or(cfg_u64(&cfg, "n").map(|v| v as usize)).unwrap_or(78);
    let t_days = args
        .t_days
        .or(cfg_u64(&cfg, "T").map(|v| v as usize))
        .unwrap_or(21);
    let a = args.a.or(cfg_f64(&cfg, "a")).unwrap_or(1.0);
    let seed = args.seed.or(cfg_u64(&cfg, "seed")).unwrap_or(1);
    let output = args
        .output
        .or(cfg_str(&cfg, "output").map(PathBuf::from))
        .context("--output is required")?;

    let mut sim = SimConfig::new(n, t_days, a, seed);
    if let Some(steps) = args.steps_per_day.or(cfg_u64(&cfg, "steps-per-day").map(|v| v as usize)) {
        sim.steps_per_day = steps;
    }
    if let Some(ji) = args.jump_intensity.or(cfg_f64(&cfg, "jump-intensity")) {
        sim.jumps.intensity = ji;
    }
    sim.record_latent = args.latent_out.is_some();

    let mut out = simulate_paths(&sim)?;
    let start_date = args
        .start_date
        .or(cfg_str(&cfg, "start-date"))
        .unwrap_or_else(|| "2020-01-01".to_string());
    out.panel.dates = market_data::synthetic_weekdays(&start_date, t_days);

    let meta = serde_json::json!({
        "command": "simulate",
        "sim": &sim,
        "start_date": start_date,
    });
    write_panel_csv(&out.panel, &output, &meta)?;
    if let Some(latent_path) = &args.latent_out {
        out.write_latent_csv(latent_path, &meta)?;
    }
    println!(
        "wrote {} ({} days x {} intervals, a = {}, seed = {})",
        output.display(),
        t_days,
        n,
        a,
        seed
    );
    Ok(())
}

#[derive(Args)]
struct InputArgs {
    /// Panel CSV (written by `simulate`) or a tick-data manifest JSON.
    #[arg(long)]
    input: Option<PathBuf>,
    /// Grid size for previous-tick resampling of tick-data input.
    #[arg(long)]
    n: Option<usize>,
}

/// Load a panel from either a gridded CSV or a tick manifest (.json).
fn load_panel(input: &Path, n: Option<usize>) -> Result<LogPricePanel> {
    let is_manifest = input
        .extension()
        .map(|e| e.eq_ignore_ascii_case("json"))
        .unwrap_or(false);
    if is_manifest {
        let n = n.context("--n is required when resampling tick data")?;
        let (series, rep_x, rep_y, unpaired) = load_pair(input)?;
        let (panel, resample) = previous_tick_resample(&series, n)?;
        for (name, rep) in [("x", &rep_x), ("y", &rep_y)] {
            if rep.rows_dropped_out_of_order + rep.rows_dropped_bad_price > 0 {
                eprintln!(
                    "asset {name}: dropped {} out-of-order and {} bad-price rows",
                    rep.rows_dropped_out_of_order, rep.rows_dropped_bad_price
                );
            }
        }
        if !unpaired.is_empty() {
            eprintln!("dropped {} unpaired days", unpaired.len());
        }
        if !resample.days_dropped_no_opening_tick.is_empty() {
            eprintln!(
                "dropped {} days without an opening tick",
                resample.days_dropped_no_opening_tick.len()
            );
        }
        Ok(panel)
    } else {
        Ok(read_panel_csv(input)?)
    }
}

#[derive(Args)]
struct EstimateArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    input: InputArgs,
    /// Increments per block.
    #[arg(long)]
    kn: Option<usize>,
    /// Truncation scale.
    #[arg(long)]
    q: Option<f64>,
    /// Truncation exponent in (0, 1/2).
    #[arg(long)]
    varpi: Option<f64>,
    /// Threshold convention.
    #[arg(long, value_parser = parse_mode)]
    mode: Option<ThresholdMode>,
    /// Output CSV for the diurnal curves.
    #[arg(long, alias = "out")]
    output: Option<PathBuf>,
    /// Optional CSV with the per-day block covariance panel.
    #[arg(long)]
    blocks_out: Option<PathBuf>,
}

fn parse_mode(s: &str) -> std::result::Result<ThresholdMode, String> {
    match s {
        "simulation" => Ok(ThresholdMode::Simulation),
        "theory" => Ok(ThresholdMode::Theory),
        "off" => Ok(ThresholdMode::Off),
        other => Err(format!("unknown mode '{other}' (simulation|theory|off)")),
    }
}

fn parse_kernel(s: &str) -> std::result::Result<Kernel, String> {
    match s {
        "parzen" => Ok(Kernel::Parzen),
        "bartlett" => Ok(Kernel::Bartlett),
        other => Err(format!("unknown kernel '{other}' (parzen|bartlett)")),
    }
}

#[allow(clippy::too_many_arguments)]
fn estimation_config(
    kn: Option<usize>,
    q: Option<f64>,
    varpi: Option<f64>,
    mode: Option<ThresholdMode>,
    kernel: Option<Kernel>,
    lags: Option<usize>,
    cfg: &serde_json::Value,
    panel_n: usize,
) -> Result<EstimationConfig> {
    let kn = kn
        .or(cfg_u64(cfg, "kn").map(|v| v as usize))
        .context("--kn is required")?;
    let block = BlockSpec::new(panel_n, kn)?;
    let mut trunc = TruncationConfig::default();
    if let Some(q) = q.or(cfg_f64(cfg, "q")) {
        trunc.q = q;
    }
    if let Some(v) = varpi.or(cfg_f64(cfg, "varpi")) {
        trunc.varpi = v;
    }
    if let Some(mode) = mode {
        trunc.mode = mode;
    } else if let Some(m) = cfg_str(cfg, "mode") {
        trunc.mode = parse_mode(&m).map_err(anyhow::Error::msg)?;
    }
    let mut hac = HacConfig::default();
    if let Some(k) = kernel {
        hac.kernel = k;
    } else if let Some(k) = cfg_str(cfg, "kernel") {
        hac.kernel = parse_kernel(&k).map_err(anyhow::Error::msg)?;
    }
    hac.lags = lags.or(cfg_u64(cfg, "lags").map(|v| v as usize));
    Ok(EstimationConfig { block, trunc, hac })
}

fn run_estimate(args: EstimateArgs) -> Result<()> {
    let cfg = load_config(&args.config)?;
    let input = args
        .input
        .input
        .clone()
        .or(cfg_str(&cfg, "input").map(PathBuf::from))
        .context("--input is required")?;
    let output = args
        .output
        .or(cfg_str(&cfg, "output").map(PathBuf::from))
        .context("--output is required")?;
    let n = args.input.n.or(cfg_u64(&cfg, "n").map(|v| v as usize));
    let panel = load_panel(&input, n)?;
    let est_cfg = estimation_config(
        args.kn, args.q, args.varpi, args.mode, None, None, &cfg, panel.n,
    )?;
    let inc = log_increments(&panel);
    let est = spotcorr::pipeline::estimate(&inc, &est_cfg)?;

    let meta = serde_json::json!({
        "command": "estimate",
        "input": input.display().to_string(),
        "estimation": &est_cfg,
        "t_days": panel.days(),
    });
    est.curves.write_csv(&output, &meta)?;
    if let Some(blocks_path) = &args.blocks_out {
        est.spot.write_csv(blocks_path, &meta)?;
    }
    println!(
        "wrote {} ({} blocks, {} excluded, rho_bar_sc = {:.4})",
        output.display(),
        est.curves.spec.m,
        est.curves.excluded_count(),
        est.curves.rho_bar_sc
    );
    Ok(())
}

#[derive(Args)]
struct TestArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    input: InputArgs,
    #[arg(long)]
    kn: Option<usize>,
    /// pivotal | nonpivotal | both | univariate-x | univariate-y
    #[arg(long, value_parser = parse_method)]
    method: Option<MethodSelection>,
    /// Significance level; repeatable.
    #[arg(long)]
    alpha: Vec<f64>,
    /// Null-distribution draws for the nonpivotal test.
    #[arg(long)]
    draws: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_parser = parse_kernel)]
    kernel: Option<Kernel>,
    /// HAC lag length; defaults to floor(T^(1/3)).
    #[arg(long)]
    lags: Option<usize>,
    #[arg(long)]
    q: Option<f64>,
    #[arg(long)]
    varpi: Option<f64>,
    #[arg(long, value_parser = parse_mode)]
    mode: Option<ThresholdMode>,
    /// Run the tests per calendar month instead of on the whole sample.
    #[arg(long)]
    monthly: bool,
    /// Skip months with fewer days than this (monthly mode).
    #[arg(long)]
    min_days: Option<usize>,
    /// Additionally test at the Bonferroni family levels alpha/#months.
    #[arg(long)]
    bonferroni: bool,
    /// Output JSON-lines report file.
    #[arg(long, alias = "out")]
    output: Option<PathBuf>,
    /// Summary CSV aggregating monthly batches.
    #[arg(long)]
    summary: Option<PathBuf>,
    /// Export the covariance kernel matrix to CSV (whole-sample runs).
    #[arg(long)]
    kernel_out: Option<PathBuf>,
    /// Export the per-block long-run matrices to CSV (whole-sample runs).
    #[arg(long)]
    gamma_out: Option<PathBuf>,
}

fn parse_method(s: &str) -> std::result::Result<MethodSelection, String> {
    match s {
        "pivotal" => Ok(MethodSelection::Pivotal),
        "nonpivotal" => Ok(MethodSelection::Nonpivotal),
        "both" => Ok(MethodSelection::Both),
        "univariate-x" => Ok(MethodSelection::UnivariateX),
        "univariate-y" => Ok(MethodSelection::UnivariateY),
        other => Err(format!(
            "unknown method '{other}' (pivotal|nonpivotal|both|univariate-x|univariate-y)"
        )),
    }
}

fn run_test(args: TestArgs) -> Result<()> {
    let cfg = load_config(&args.config)?;
    let input = args
        .input
        .input
        .clone()
        .or(cfg_str(&cfg, "input").map(PathBuf::from))
        .context("--input is required")?;
    let n = args.input.n.or(cfg_u64(&cfg, "n").map(|v| v as usize));
    let panel = load_panel(&input, n)?;
    let est = estimation_config(
        args.kn,
        args.q,
        args.varpi,
        args.mode,
        args.kernel,
        args.lags,
        &cfg,
        panel.n,
    )?;
    let mut alphas = args.alpha.clone();
    if alphas.is_empty() {
        if let Some(arr) = cfg.get("alpha").and_then(|v| v.as_array()) {
            alphas = arr.iter().filter_map(|v| v.as_f64()).collect();
        }
    }
    if alphas.is_empty() {
        alphas = vec![0.05];
    }
    for &a in &alphas {
        if !(0.0..1.0).contains(&a) || a == 0.0 {
            bail!("alpha {a} outside (0, 1)");
        }
    }
    let run_cfg = TestRunConfig {
        est,
        methods: args.method.unwrap_or(MethodSelection::Both),
        alphas,
        draws: args.draws.or(cfg_u64(&cfg, "draws").map(|v| v as usize)).unwrap_or(9_999),
        seed: args.seed.or(cfg_u64(&cfg, "seed")).unwrap_or(1),
    };

    let mut lines: Vec<String> = Vec::new();
    let mut summary_rows: Vec<String> = Vec::new();
    if args.monthly {
        let min_days = args
            .min_days
            .or(cfg_u64(&cfg, "min-days").map(|v| v as usize))
            .unwrap_or(5);
        let outcomes = run_monthly(&panel, &run_cfg, min_days, args.bonferroni)?;
        for outcome in &outcomes {
            if let Some(reason) = &outcome.skipped {
                summary_rows.push(format!(
                    "{},{},skipped,,,,,,,\"{}\"",
                    outcome.month, outcome.t_days, reason
                ));
                continue;
            }
            for (i, r) in outcome.reports.iter().enumerate() {
                let mut line = serde_json::to_value(r)?;
                line["month"] = serde_json::json!(outcome.month);
                lines.push(serde_json::to_string(&line)?);
                let bon = outcome.bonferroni_reports.get(i);
                summary_rows.push(format!(
                    "{},{},{},{},{:.6},{:.6},{:.6},{},{},{},",
                    outcome.month,
                    outcome.t_days,
                    r.method,
                    r.alpha,
                    r.statistic,
                    r.critical_value,
                    r.p_value,
                    r.reject as u8,
                    bon.map(|b| b.alpha.to_string()).unwrap_or_default(),
                    bon.map(|b| (b.reject as u8).to_string()).unwrap_or_default(),
                ));
            }
            println!(
                "{} ({} days): {}",
                outcome.month,
                outcome.t_days,
                outcome
                    .reports
                    .iter()
                    .map(|r| format!(
                        "{}@{}: {} (stat {:.3})",
                        r.method,
                        r.alpha,
                        if r.reject { "reject" } else { "keep" },
                        r.statistic
                    ))
                    .collect::<Vec<_>>()
                    .join("; ")
            );
        }
    } else {
        let (reports, artifacts) = run_tests(&panel, &run_cfg)?;
        for r in &reports {
            lines.push(serde_json::to_string(r)?);
            println!(
                "{} at alpha = {}: statistic {:.4}, critical {:.4}, p {:.4} -> {}",
                r.method,
                r.alpha,
                r.statistic,
                r.critical_value,
                r.p_value,
                if r.reject { "REJECT" } else { "no rejection" }
            );
        }
        let taus: Vec<f64> = artifacts
            .included
            .iter()
            .map(|&j| run_cfg.est.block.tau(j))
            .collect();
        let meta = serde_json::json!({
            "command": "test",
            "input": input.display().to_string(),
            "config": &run_cfg,
        });
        if let Some(path) = &args.gamma_out {
            spotcorr::longrun::write_longrun_csv(&artifacts.longrun, &taus, path, &meta)?;
            println!("wrote {}", path.display());
        }
        if let Some(path) = &args.kernel_out {
            let kernel = artifacts
                .kernel
                .as_ref()
                .context("kernel export needs the nonpivotal test to run")?;
            spotcorr::longrun::write_kernel_csv(kernel, &taus, path, &meta)?;
            println!("wrote {}", path.display());
        }
    }

    if let Some(out) = &args.output {
        std::fs::write(out, lines.join("\n") + "\n")?;
        println!("wrote {}", out.display());
    }
    if let Some(summary) = &args.summary {
        let header =
            "month,t_days,method,alpha,statistic,critical_value,p_value,reject,bonferroni_alpha,bonferroni_reject,note";
        std::fs::write(summary, format!("{header}\n{}\n", summary_rows.join("\n")))?;
        println!("wrote {}", summary.display());
    }
    Ok(())
}

#[derive(Args)]
struct TableArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    /// Preset grid: table1-panelA/B/C (nonpivotal) or table2-panelA/B/C
    /// (pivotal) over the full cell menu.
    #[arg(long)]
    preset: Option<String>,
    /// Cell rows as n,kn (repeatable), e.g. --cell 78,26.
    #[arg(long, value_parser = parse_cell)]
    cell: Vec<(usize, usize)>,
    #[arg(long = "T")]
    t_days: Vec<usize>,
    /// Diurnal correlation intercept; repeatable.
    #[arg(long)]
    a: Vec<f64>,
    #[arg(long)]
    alpha: Vec<f64>,
    #[arg(long)]
    reps: Option<usize>,
    #[arg(long)]
    draws: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_parser = parse_method)]
    method: Option<MethodSelection>,
    #[arg(long)]
    steps_per_day: Option<usize>,
    #[arg(long, alias = "out")]
    output: Option<PathBuf>,
    /// Also render the panel-layout text table to this path.
    #[arg(long)]
    text_out: Option<PathBuf>,
}

fn parse_cell(s: &str) -> std::result::Result<(usize, usize), String> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 2 {
        return Err("expected n,kn".into());
    }
    let n = parts[0].trim().parse().map_err(|_| "bad n")?;
    let kn = parts[1].trim().parse().map_err(|_| "bad kn")?;
    Ok((n, kn))
}

fn run_table(args: TableArgs) -> Result<()> {
    let cfg = load_config(&args.config)?;
    let mut cells = args.cell.clone();
    let mut t_values = args.t_days.clone();
    let mut methods = args.method;
    if let Some(preset) = args.preset.as_deref() {
        let (m, t) = match preset {
            "table1-panelA" => (MethodSelection::Nonpivotal, 5),
            "table1-panelB" => (MethodSelection::Nonpivotal, 21),
            "table1-panelC" => (MethodSelection::Nonpivotal, 66),
            "table2-panelA" => (MethodSelection::Pivotal, 5),
            "table2-panelB" => (MethodSelection::Pivotal, 21),
            "table2-panelC" => (MethodSelection::Pivotal, 66),
            other => bail!("unknown preset '{other}'"),
        };
        if cells.is_empty() {
            cells = experiments::CELL_MENU.to_vec();
        }
        if t_values.is_empty() {
            t_values = vec![t];
        }
        methods.get_or_insert(m);
    }
    if cells.is_empty() {
        bail!("no cells: pass --preset or at least one --cell n,kn");
    }
    if t_values.is_empty() {
        t_values = vec![21];
    }
    let mut intercepts = args.a.clone();
    if intercepts.is_empty() {
        intercepts = vec![1.0, 0.95, 0.90, 0.85, 0.80];
    }
    let mut alphas = args.alpha.clone();
    if alphas.is_empty() {
        alphas = vec![0.10, 0.05, 0.01];
    }
    let grid = McGrid {
        cells,
        t_values,
        intercepts,
        alphas,
        reps: args.reps.or(cfg_u64(&cfg, "reps").map(|v| v as usize)).unwrap_or(1_000),
        draws: args.draws.or(cfg_u64(&cfg, "draws").map(|v| v as usize)).unwrap_or(9_999),
        seed: args.seed.or(cfg_u64(&cfg, "seed")).unwrap_or(1),
        methods: methods.unwrap_or(MethodSelection::Both),
        steps_per_day: args
            .steps_per_day
            .or(cfg_u64(&cfg, "steps-per-day").map(|v| v as usize))
            .unwrap_or(4_680),
    };
    let table = experiments::rejection_table(&grid)?;
    let text = table.render_text();
    print!("{text}");
    if let Some(out) = &args.output {
        table.write_csv(out)?;
        println!("wrote {}", out.display());
    }
    if let Some(tout) = &args.text_out {
        std::fs::write(tout, text)?;
        println!("wrote {}", tout.display());
    }
    Ok(())
}

#[derive(Args)]
struct HedgeArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    input: InputArgs,
    /// Output CSV with the per-bin hedge series.
    #[arg(long, alias = "out")]
    output: Option<PathBuf>,
}

fn run_hedge(args: HedgeArgs) -> Result<()> {
    let cfg = load_config(&args.config)?;
    let input = args
        .input
        .input
        .clone()
        .or(cfg_str(&cfg, "input").map(PathBuf::from))
        .context("--input is required")?;
    let n = args.input.n.or(cfg_u64(&cfg, "n").map(|v| v as usize));
    let panel = load_panel(&input, n)?;
    let series = experiments::hedge_ratios(&panel)?;
    let ratio = series.variance_ratio()?;
    println!(
        "variance ratio var(dX - phi dY) / var(dX - phi_bar dY) = {ratio:.4} over {} valid bins",
        series.bins.iter().filter(|b| b.valid).count()
    );
    if let Some(out) = &args.output {
        let meta = serde_json::json!({
            "command": "hedge",
            "input": input.display().to_string(),
            "variance_ratio": ratio,
        });
        series.write_csv(out, &meta)?;
        println!("wrote {}", out.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate(args) => run_simulate(args),
        Command::Estimate(args) => run_estimate(args),
        Command::Test(args) => run_test(args),
        Command::Table(args) => run_table(args),
        Command::Hedge(args) => run_hedge(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}
