//! `hysrd`: runs scenarios and experiment suites for reaction-diffusion
//! systems with distributed relay hysteresis.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use hysteresis_rd::dsl::{builtin_bacteria_model, load_model, BacteriaParams, ModelSpec};
use hysteresis_rd::experiments::{compare_solvers, converge, perturb, validate};
use hysteresis_rd::io::{fmt_num, parse_relay_input, read_file, relay_trace_csv, snapshot_csv, snapshot_name, time_series_csv, to_json, write_file};
use hysteresis_rd::relay::{relay_trace, Configuration};
use hysteresis_rd::scenario::Scenario;
use hysteresis_rd::solver::run_with_observer;

#[derive(Parser)]
#[command(name = "hysrd", version, about = "Reaction-diffusion systems with spatially distributed relay hysteresis")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Scenario file (TOML).
    #[arg(long)]
    scenario: Option<PathBuf>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Seed for randomized experiments.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Suppress the summary on stdout.
    #[arg(long)]
    quiet: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate a scenario; writes the time series, snapshots and JSON report.
    Run {
        #[command(flatten)]
        common: Common,
    },
    /// Rerun from perturbed initial data and tabulate the differences.
    Perturb {
        #[command(flatten)]
        common: Common,
        /// Perturbation sizes (default: the scenario's list).
        #[arg(long, value_delimiter = ',')]
        eps: Option<Vec<f64>>,
    },
    /// Successive (h, dt)-halvings.
    Converge {
        #[command(flatten)]
        common: Common,
        /// Number of grid levels (at least 3; default: the scenario's value).
        #[arg(long)]
        levels: Option<usize>,
    },
    /// Splitting against Picard on the same grid.
    CompareSolvers {
        #[command(flatten)]
        common: Common,
    },
    /// Sampling checks of the structural conditions of a model.
    Validate {
        #[command(flatten)]
        common: Common,
        /// Model file (TOML); defaults to the scenario's model or the built-in bacteria model.
        #[arg(long)]
        model: Option<PathBuf>,
        /// Hölder exponent for the branch check.
        #[arg(long)]
        sigma: Option<f64>,
        #[arg(long)]
        samples: Option<usize>,
    },
    /// Drive a single relay with an input CSV of rows `t, u1..uk`.
    RelayTrace {
        #[command(flatten)]
        common: Common,
        /// Model file providing thresholds and branches.
        #[arg(long)]
        model: Option<PathBuf>,
        /// Input CSV.
        #[arg(long)]
        input: PathBuf,
        /// Initial configuration (+1 or -1) used between the thresholds.
        #[arg(long, default_value_t = -1, allow_negative_numbers = true)]
        zeta0: i64,
    },
}

type Failure = String;

fn load_scenario(c: &Common) -> Result<Scenario, Failure> {
    match &c.scenario {
        Some(p) => Scenario::load(p).map_err(|e| e.to_string()),
        None => Ok(Scenario::reference()),
    }
}

fn model_for(c: &Common, model: &Option<PathBuf>) -> Result<ModelSpec, Failure> {
    match (model, &c.scenario) {
        (Some(p), _) => load_model(p).map_err(|e| e.to_string()),
        (None, Some(_)) => Ok(load_scenario(c)?.model),
        (None, None) => builtin_bacteria_model(&BacteriaParams::default()).map_err(|e| e.to_string()),
    }
}

fn write(out: &Path, name: &str, text: &str) -> Result<PathBuf, Failure> {
    let path = out.join(name);
    write_file(&path, text).map_err(|e| e.to_string())?;
    Ok(path)
}

fn say(c: &Common, msg: impl AsRef<str>) {
    if !c.quiet {
        println!("{}", msg.as_ref());
    }
}

fn cmd_run(c: &Common) -> Result<u8, Failure> {
    let s = load_scenario(c)?;
    let init = s.initial_data().map_err(|e| e.to_string())?;
    let eps = 1e-9 * s.config.dt.max(1.0);
    let mut pending: Vec<f64> = s.snapshot_times.clone();
    pending.sort_by(f64::total_cmp);
    let mut snapshots = Vec::new();
    let (_, report) = run_with_observer(&s.model, &init, s.t_end, &s.config, |st| {
        while pending.first().is_some_and(|t| st.t >= t - eps) {
            let t = pending.remove(0);
            snapshots.push((t, snapshot_csv(st)));
        }
    })
    .map_err(|e| e.to_string())?;
    write(&c.out, &s.output.time_series, &time_series_csv(&report))?;
    for (t, text) in &snapshots {
        write(&c.out, &snapshot_name(&s.output.snapshot, *t), text)?;
    }
    write(&c.out, &s.output.report, &to_json(&report).map_err(|e| e.to_string())?)?;
    let mut msg = format!("{}: {} after {} steps", s.name, report.status.label(), report.rows.len() - 1);
    if let Some(t) = report.status.t_star() {
        let _ = write!(msg, ", t* = {t}");
    }
    if let Some(last) = report.rows.last() {
        let _ = write!(msg, ", b(T) = {}", last.b);
    }
    say(c, msg);
    Ok(report.status.exit_code() as u8)
}

fn cmd_perturb(c: &Common, eps: &Option<Vec<f64>>) -> Result<u8, Failure> {
    let s = load_scenario(c)?;
    let list = eps.clone().unwrap_or_else(|| s.experiments.perturb_eps.clone());
    let table = perturb(&s, &list, c.seed).map_err(|e| e.to_string())?;
    let mut csv = String::from("eps,u_diff,b_diff,v_diff,status\n");
    for r in &table.rows {
        let cell = |x: Option<f64>| x.map(fmt_num).unwrap_or_default();
        let _ = writeln!(csv, "{},{},{},{},{}", fmt_num(r.eps), cell(r.u_diff), cell(r.b_diff), cell(r.v_diff), if r.failed.is_some() { "failed" } else { &r.status });
    }
    write(&c.out, "perturb.csv", &csv)?;
    write(&c.out, "perturb.json", &to_json(&table).map_err(|e| e.to_string())?)?;
    say(c, csv.trim_end());
    Ok(0)
}

fn cmd_converge(c: &Common, levels: Option<usize>) -> Result<u8, Failure> {
    let s = load_scenario(c)?;
    let table = converge(&s, levels.unwrap_or(s.experiments.converge_levels)).map_err(|e| e.to_string())?;
    let mut csv = String::from("level,n,dt,status,u_diff,b_diff,ratio\n");
    for (i, l) in table.levels.iter().enumerate() {
        let at = |v: &Vec<f64>, j: Option<usize>| j.and_then(|j| v.get(j)).map(|x| fmt_num(*x)).unwrap_or_default();
        let prev = i.checked_sub(1);
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{},{}",
            l.level,
            l.n,
            fmt_num(l.dt),
            l.status,
            at(&table.u_diffs, prev),
            at(&table.b_diffs, prev),
            at(&table.ratios, i.checked_sub(2)),
        );
    }
    write(&c.out, "converge.csv", &csv)?;
    write(&c.out, "converge.json", &to_json(&table).map_err(|e| e.to_string())?)?;
    say(c, csv.trim_end());
    Ok(0)
}

fn cmd_compare(c: &Common) -> Result<u8, Failure> {
    let s = load_scenario(c)?;
    let r = compare_solvers(&s).map_err(|e| e.to_string())?;
    write(&c.out, "compare.json", &to_json(&r).map_err(|e| e.to_string())?)?;
    say(
        c,
        format!(
            "splitting {} / picard {} (max {} iterations): sup|du| = {:?}, sup|dv| = {:?}, sup|db| = {:?}",
            r.splitting_status, r.picard_status, r.max_iterations, r.u_diff, r.v_diff, r.b_diff
        ),
    );
    if let Some(e) = &r.error {
        say(c, format!("picard: {e}"));
    }
    Ok(0)
}

fn cmd_validate(c: &Common, model: &Option<PathBuf>, sigma: Option<f64>, samples: Option<usize>) -> Result<u8, Failure> {
    let settings = match &c.scenario {
        Some(_) => load_scenario(c)?.experiments,
        None => Default::default(),
    };
    let spec = model_for(c, model)?;
    let summary = validate(&spec, sigma.unwrap_or(settings.holder_sigma), samples.unwrap_or(settings.validate_samples));
    write(&c.out, "validation.json", &to_json(&summary).map_err(|e| e.to_string())?)?;
    for cond in &summary.conditions {
        say(c, format!("{:<18} {:?}", cond.condition, cond.status).to_lowercase());
        for ch in &cond.checks {
            say(c, format!("  {:<24} {:<5} {}", ch.name, format!("{:?}", ch.status).to_lowercase(), ch.detail));
        }
    }
    Ok(0)
}

fn cmd_relay_trace(c: &Common, model: &Option<PathBuf>, input: &Path, zeta0: i64) -> Result<u8, Failure> {
    let spec = model_for(c, model)?;
    let zeta0 = Configuration::from_sign(zeta0).ok_or_else(|| format!("--zeta0 must be +1 or -1, got {zeta0}"))?;
    let text = read_file(input).map_err(|e| e.to_string())?;
    let samples = parse_relay_input(&text, spec.k).map_err(|e| format!("{}: {e}", input.display()))?;
    let trace = relay_trace(&spec.thresholds, &spec.branches, zeta0, &samples).map_err(|e| e.to_string())?;
    let path = write(&c.out, "relay_trace.csv", &relay_trace_csv(&trace, spec.m))?;
    say(c, format!("{} samples -> {}", trace.len(), path.display()));
    Ok(0)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let quiet = match &cli.command {
        Command::Run { common }
        | Command::Perturb { common, .. }
        | Command::Converge { common, .. }
        | Command::CompareSolvers { common }
        | Command::Validate { common, .. }
        | Command::RelayTrace { common, .. } => common.quiet,
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(if quiet { "error" } else { "warn" })).init();
    let result = match &cli.command {
        Command::Run { common } => cmd_run(common),
        Command::Perturb { common, eps } => cmd_perturb(common, eps),
        Command::Converge { common, levels } => cmd_converge(common, *levels),
        Command::CompareSolvers { common } => cmd_compare(common),
        Command::Validate {
            common,
            model,
            sigma,
            samples,
        } => cmd_validate(common, model, *sigma, *samples),
        Command::RelayTrace { common, model, input, zeta0 } => cmd_relay_trace(common, model, input, *zeta0),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
