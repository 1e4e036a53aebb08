//! The `multibell` command line.
//!
//! Exit codes: 0 success, 2 usage or domain error, 3 capacity error,
//! 4 numerical non-convergence.

use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use crate::bounds::{
    amgm_cap, classical_bound_additive, classical_interior_search, classical_vertex_bound_multiplicative, fd_max,
    fd_ratio, InteriorConfig, FD_RATIO_ASYMPTOTE, MAX_INTERIOR_N,
};
use crate::experiment::{
    efficiency_scan, quantization_bias_scan, run_experiment, CountingMode, NoiseModel, SamplingMode, UndetectedPolicy,
};
use crate::functionals::BellResult;
use crate::io::{fmt_f64, load_strategy, save_strategy, Document, Format, OutputHeader, Table};
use crate::quantum::TwoQubitState;
use crate::richer::{alice_pair_with_overlap, bob_scan, ellipse_axes, ellipse_boundary, ri_psd_check};
use crate::rng::DEFAULT_SEED;
use crate::strategies::{
    evaluate_strategy, optimize_from, optimize_settings, saturating_strategy, OptimizeConfig, Strategy,
};
use crate::{Error, Result};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_CAPACITY: i32 = 3;
pub const EXIT_NONCONVERGENCE: i32 = 4;

#[derive(Debug, Parser)]
#[command(
    name = "multibell",
    version,
    about = "Multiplicative Bell inequalities: bounds, strategies and simulated experiments"
)]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct GlobalArgs {
    #[arg(long, global = true, value_enum, default_value = "csv")]
    pub format: Format,
    /// Write to this file instead of stdout.
    #[arg(long, short = 'o', global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads; results do not depend on it.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[arg(long, global = true, env = "MULTIBELL_SEED", default_value_t = DEFAULT_SEED)]
    pub seed: u64,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Settings reaching n! on the singlet.
    Saturate {
        #[arg(short, value_parser = clap::value_parser!(u64).range(2..))]
        n: u64,
        #[arg(long, default_value = "singlet")]
        state: String,
        /// Also save the strategy file here.
        #[arg(long)]
        strategy_out: Option<PathBuf>,
    },
    /// Classical bounds on B_n and B'_n.
    Classical {
        #[arg(short, value_parser = clap::value_parser!(u64).range(2..))]
        n: u64,
        /// Also search mixtures of deterministic strategies.
        #[arg(long)]
        interior: bool,
        #[arg(long, default_value_t = 200)]
        restarts: usize,
    },
    /// Fully deterministic family and its ratio to n!.
    Fd {
        #[arg(long, default_value_t = 255, value_parser = clap::value_parser!(u64).range(2..))]
        max_n: u64,
    },
    /// Numerical optimum of B_n over settings.
    Optimize {
        #[arg(short, value_parser = clap::value_parser!(u64).range(2..))]
        n: u64,
        #[arg(long, default_value = "singlet")]
        state: String,
        #[arg(long, default_value_t = 50)]
        restarts: usize,
        /// Start from this strategy file instead of random settings.
        #[arg(long)]
        from: Option<PathBuf>,
        #[arg(long)]
        strategy_out: Option<PathBuf>,
    },
    /// Simulated coincidence-count experiment.
    Mc(McArgs),
    /// B_n against detector efficiency.
    Effscan {
        #[command(flatten)]
        mc: McArgs,
        /// Comma-separated efficiencies in (0, 1].
        #[arg(long, value_delimiter = ',', default_value = "1,0.95,0.9,0.85,0.8,0.75,0.7")]
        etas: Vec<f64>,
    },
    /// Random Bob settings against a fixed Alice pair: CHSH and B_2 vs their bounds.
    Rich(RichArgs),
    /// Correlation vectors against the PSD ellipse.
    Ellipse {
        #[command(flatten)]
        rich: RichArgs,
        /// Boundary polyline vertices.
        #[arg(long, default_value_t = 360)]
        points: usize,
    },
    /// Correlator bias from waveplate quantization.
    Bias {
        #[arg(long, default_value_t = 1.0)]
        step: f64,
        #[arg(long, default_value_t = 360)]
        points: usize,
    },
}

#[derive(Debug, Clone, Args)]
pub struct McArgs {
    #[arg(short, value_parser = clap::value_parser!(u64).range(2..), default_value_t = 2)]
    pub n: u64,
    /// `singlet`, `mixed` or `werner:P`.
    #[arg(long, default_value = "singlet")]
    pub state: String,
    /// Settings file; defaults to the saturating construction.
    #[arg(long)]
    pub strategy: Option<PathBuf>,
    #[arg(long, default_value_t = 100_000)]
    pub pairs: u64,
    #[arg(long, default_value_t = 0.0)]
    pub waveplate_step: f64,
    #[arg(long, default_value_t = 1.0)]
    pub eta_a: f64,
    #[arg(long, default_value_t = 1.0)]
    pub eta_b: f64,
    #[arg(long, value_enum, default_value = "discard")]
    pub policy: PolicyArg,
    /// Independent Poisson counts per channel.
    #[arg(long)]
    pub poisson: bool,
    /// Exact probabilities, no sampling.
    #[arg(long)]
    pub analytic: bool,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum PolicyArg {
    Discard,
    AssignPlusOne,
}

#[derive(Debug, Clone, Args)]
pub struct RichArgs {
    /// Overlap a0 . a1 of Alice's settings.
    #[arg(long, allow_hyphen_values = true)]
    pub eta: f64,
    #[arg(long, default_value_t = 5000)]
    pub trials: usize,
    #[arg(long, default_value = "singlet")]
    pub state: String,
}

/// `singlet`, `mixed`, or `werner:P`.
pub fn parse_state(spec: &str) -> Result<TwoQubitState> {
    let spec = spec.trim();
    match spec {
        "singlet" => Ok(TwoQubitState::singlet()),
        "mixed" => Ok(TwoQubitState::maximally_mixed()),
        _ => {
            let p = spec
                .strip_prefix("werner:")
                .ok_or_else(|| Error::domain(format!("unknown state '{spec}' (singlet, mixed, werner:P)")))?;
            let p: f64 = p
                .parse()
                .map_err(|_| Error::domain(format!("bad visibility in '{spec}'")))?;
            TwoQubitState::werner(p)
        }
    }
}

pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Capacity(_) => EXIT_CAPACITY,
        Error::NonConvergence(_) => EXIT_NONCONVERGENCE,
        _ => EXIT_USAGE,
    }
}

/// Rendered output plus the exit status it implies.
pub struct Outcome {
    pub text: String,
    pub status: i32,
}

fn bell_json(b: &BellResult) -> Value {
    json!({ "n": b.n, "value": b.value, "factors": b.factors, "kind": b.kind })
}

fn strategy_table(s: &Strategy, factors: &[f64]) -> Table {
    let mut t = Table::new(&[
        "setting", "alice_x", "alice_y", "alice_z", "bob_x", "bob_y", "bob_z", "factor",
    ]);
    for (k, ((a, b), f)) in s.alice.iter().zip(&s.bob).zip(factors).enumerate() {
        let mut row = vec![(k + 1).to_string()];
        row.extend(a.to_array().iter().chain(b.to_array().iter()).map(|x| fmt_f64(*x)));
        row.push(fmt_f64(*f));
        t.push(row);
    }
    t
}

fn noise_from(args: &McArgs) -> NoiseModel {
    NoiseModel {
        werner_p: 1.0,
        waveplate_step_deg: args.waveplate_step,
        eta_det_a: args.eta_a,
        eta_det_b: args.eta_b,
        undetected_policy: match args.policy {
            PolicyArg::Discard => UndetectedPolicy::Discard,
            PolicyArg::AssignPlusOne => UndetectedPolicy::AssignPlusOne,
        },
        counting: if args.poisson {
            CountingMode::Poisson
        } else {
            CountingMode::Multinomial
        },
    }
}

fn mc_config(args: &McArgs) -> Value {
    json!({
        "n": args.n,
        "state": args.state,
        "strategy": args.strategy.as_ref().map(|p| p.display().to_string()),
        "pairs": args.pairs,
        "waveplate_step": args.waveplate_step,
        "eta_a": args.eta_a,
        "eta_b": args.eta_b,
        "policy": format!("{:?}", args.policy).to_lowercase(),
        "poisson": args.poisson,
        "analytic": args.analytic,
    })
}

fn mc_strategy(args: &McArgs) -> Result<Strategy> {
    match &args.strategy {
        Some(path) => {
            let s = load_strategy(path)?;
            if s.n() as u64 != args.n {
                return Err(Error::domain(format!(
                    "strategy file has n = {}, command asked for {}",
                    s.n(),
                    args.n
                )));
            }
            Ok(s)
        }
        None => saturating_strategy(args.n as usize),
    }
}

fn mode(args: &McArgs) -> SamplingMode {
    if args.analytic {
        SamplingMode::Analytic
    } else {
        SamplingMode::Sampled
    }
}

fn cmd_saturate(n: usize, state_spec: &str, out: Option<&PathBuf>, seed: u64) -> Result<(Document, i32)> {
    let state = parse_state(state_spec)?;
    let strategy = saturating_strategy(n)?;
    let result = evaluate_strategy(&strategy, &state)?;
    if let Some(path) = out {
        save_strategy(path, &strategy)?;
    }
    let target: f64 = (1..=n).map(|k| k as f64).product();
    let status = if state_spec.trim() == "singlet" && result.value < 0.999 * target {
        EXIT_NONCONVERGENCE
    } else {
        EXIT_OK
    };
    let header = OutputHeader::new("saturate", Some(seed), json!({ "n": n, "state": state_spec }));
    let summary = json!({ "value": result.value, "n_factorial": target });
    Ok((
        Document {
            header,
            table: strategy_table(&strategy, &result.factors),
            summary: summary.clone(),
            json_body: Some(json!({ "strategy": strategy, "result": bell_json(&result), "value": result.value })),
        },
        status,
    ))
}

fn cmd_classical(n: usize, interior: bool, restarts: usize, seed: u64) -> Result<(Document, i32)> {
    let additive = classical_bound_additive(n)?;
    let vertex = classical_vertex_bound_multiplicative(n)?;
    let cap = amgm_cap(n)?;
    let interior = if interior {
        if n > MAX_INTERIOR_N {
            return Err(Error::Capacity(format!(
                "interior search supports n <= {MAX_INTERIOR_N}, got {n}"
            )));
        }
        Some(classical_interior_search(
            n,
            &InteriorConfig {
                restarts,
                seed,
                ..Default::default()
            },
        )?)
    } else {
        None
    };
    let mut t = Table::new(&["n", "additive", "vertex", "amgm_cap", "interior"]);
    t.push(vec![
        n.to_string(),
        additive.value.to_string(),
        vertex.value.to_string(),
        fmt_f64(cap),
        interior.as_ref().map(|r| fmt_f64(r.best)).unwrap_or_default(),
    ]);
    let header = OutputHeader::new(
        "classical",
        Some(seed),
        json!({ "n": n, "interior": interior.is_some(), "restarts": restarts }),
    );
    let body = json!({
        "n": n,
        "additive": additive,
        "vertex": vertex,
        "amgm_cap": cap,
        "interior": interior,
    });
    Ok((
        Document {
            header,
            table: t,
            summary: Value::Null,
            json_body: Some(body),
        },
        EXIT_OK,
    ))
}

fn cmd_fd(max_n: usize) -> Result<(Document, i32)> {
    let mut t = Table::new(&["n", "i_c", "fd", "ln_fd", "ratio"]);
    for n in 2..=max_n {
        let fd = fd_max(n)?;
        let exact = fd
            .exact
            .as_ref()
            .map(|e| e.to_string())
            .unwrap_or_else(|| fmt_f64(fd.to_f64()));
        t.push(vec![
            n.to_string(),
            fd.i_c.to_string(),
            exact,
            fmt_f64(fd.log.log_magnitude),
            fmt_f64(fd_ratio(n)?),
        ]);
    }
    let header = OutputHeader::new("fd", None, json!({ "max_n": max_n }))
        .with_meta(json!({ "ratio_asymptote": FD_RATIO_ASYMPTOTE, "asymptote_expr": "sqrt(pi/(2e))" }));
    Ok((
        Document {
            header,
            table: t,
            summary: Value::Null,
            json_body: None,
        },
        EXIT_OK,
    ))
}

fn cmd_optimize(
    n: usize,
    state_spec: &str,
    restarts: usize,
    from: Option<&PathBuf>,
    out: Option<&PathBuf>,
    seed: u64,
) -> Result<(Document, i32)> {
    let state = parse_state(state_spec)?;
    let cfg = OptimizeConfig {
        restarts,
        seed,
        ..Default::default()
    };
    let outcome = match from {
        Some(path) => {
            let start = load_strategy(path)?;
            if start.n() != n {
                return Err(Error::domain(format!(
                    "strategy file has n = {}, command asked for {n}",
                    start.n()
                )));
            }
            optimize_from(&start, &state, &cfg)?
        }
        None => optimize_settings(n, &state, &cfg)?,
    };
    if let Some(path) = out {
        save_strategy(path, &outcome.strategy)?;
    }
    let result = evaluate_strategy(&outcome.strategy, &state)?;
    let status = if outcome.converged {
        EXIT_OK
    } else {
        EXIT_NONCONVERGENCE
    };
    let header = OutputHeader::new(
        "optimize",
        Some(seed),
        json!({ "n": n, "state": state_spec, "restarts": restarts }),
    );
    let summary = json!({ "value": outcome.value, "converged": outcome.converged, "iterations": outcome.iterations });
    Ok((
        Document {
            header,
            table: strategy_table(&outcome.strategy, &result.factors),
            summary: summary.clone(),
            json_body: Some(
                json!({ "strategy": outcome.strategy, "result": bell_json(&result), "optimizer": summary }),
            ),
        },
        status,
    ))
}

fn cmd_mc(args: &McArgs, seed: u64) -> Result<(Document, i32)> {
    let state = parse_state(&args.state)?;
    let strategy = mc_strategy(args)?;
    let report = run_experiment(&strategy, &state, args.pairs, &noise_from(args), seed, mode(args))?;
    let mut t = Table::new(&["i", "j", "n_pp", "n_pm", "n_mp", "n_mm", "correlator", "stderr"]);
    for s in &report.settings {
        let counts = s
            .counts
            .map(|c| [c.n_pp, c.n_pm, c.n_mp, c.n_mm].map(|x| x.to_string()).to_vec())
            .unwrap_or_else(|| vec![String::new(); 4]);
        let mut row = vec![(s.i + 1).to_string(), (s.j + 1).to_string()];
        row.extend(counts);
        row.push(fmt_f64(s.correlator));
        row.push(fmt_f64(s.stderr));
        t.push(row);
    }
    let summary = json!({
        "b_n": report.bell.value,
        "stderr": report.bell_stderr,
        "systematic": report.bell_systematic,
        "classical_bound": report.classical_bound,
        "violated": report.violated,
    });
    let header = OutputHeader::new("mc", Some(seed), mc_config(args));
    Ok((
        Document {
            header,
            table: t,
            summary,
            json_body: Some(serde_json::to_value(&report)?),
        },
        EXIT_OK,
    ))
}

fn cmd_effscan(args: &McArgs, etas: &[f64], seed: u64) -> Result<(Document, i32)> {
    let state = parse_state(&args.state)?;
    let strategy = mc_strategy(args)?;
    let points = efficiency_scan(&strategy, &state, etas, &noise_from(args), args.pairs, seed, mode(args))?;
    let mut t = Table::new(&["eta", "b_n", "stderr", "violated"]);
    for p in &points {
        t.push(vec![
            fmt_f64(p.eta),
            fmt_f64(p.value),
            fmt_f64(p.stderr),
            p.violated.map(|v| v.to_string()).unwrap_or_default(),
        ]);
    }
    let mut config = mc_config(args);
    config["etas"] = json!(etas);
    let header = OutputHeader::new("effscan", Some(seed), config);
    Ok((
        Document {
            header,
            table: t,
            summary: Value::Null,
            json_body: None,
        },
        EXIT_OK,
    ))
}

fn cmd_rich(args: &RichArgs, seed: u64) -> Result<(Document, i32)> {
    let state = parse_state(&args.state)?;
    let scan = bob_scan(&state, alice_pair_with_overlap(args.eta)?, args.trials, seed)?;
    let mut t = Table::new(&["trial", "chsh", "b2", "chsh_bound", "b2_bound"]);
    for r in &scan.trials {
        t.push(vec![
            r.trial.to_string(),
            fmt_f64(r.chsh),
            fmt_f64(r.b2),
            fmt_f64(scan.chsh_bound),
            fmt_f64(scan.b2_bound),
        ]);
    }
    let summary = json!({
        "eta_a": [scan.eta_a.re, scan.eta_a.im],
        "maxent": scan.maxent,
        "max_abs_chsh": scan.max_abs_chsh,
        "chsh_bound": scan.chsh_bound,
        "max_abs_b2": scan.max_abs_b2,
        "b2_bound": scan.b2_bound,
        "within_bounds": scan.max_abs_chsh <= scan.chsh_bound + 1e-9 && scan.max_abs_b2 <= scan.b2_bound + 1e-9,
    });
    let header = OutputHeader::new(
        "rich",
        Some(seed),
        json!({ "eta": args.eta, "trials": args.trials, "state": args.state }),
    );
    Ok((
        Document {
            header,
            table: t,
            summary,
            json_body: None,
        },
        EXIT_OK,
    ))
}

fn cmd_ellipse(args: &RichArgs, points: usize, seed: u64) -> Result<(Document, i32)> {
    let state = parse_state(&args.state)?;
    let axes = ellipse_axes(args.eta)?;
    let scan = bob_scan(&state, alice_pair_with_overlap(args.eta)?, args.trials, seed)?;
    let mut t = Table::new(&["trial", "side", "index", "rho_0", "rho_1", "eta", "inside_psd"]);
    let eta_re = fmt_f64(scan.eta_a.re);
    for (k, v) in ellipse_boundary(scan.eta_a.re, points)?.iter().enumerate() {
        let inside = ri_psd_check(*v, scan.eta_a);
        t.push(vec![
            String::new(),
            "boundary".into(),
            k.to_string(),
            fmt_f64(v[0]),
            fmt_f64(v[1]),
            eta_re.clone(),
            inside.to_string(),
        ]);
    }
    for r in &scan.trials {
        for s in &r.samples {
            let side = format!("{:?}", s.side).to_lowercase();
            t.push(vec![
                r.trial.to_string(),
                side,
                s.index.to_string(),
                fmt_f64(s.rho_vec[0]),
                fmt_f64(s.rho_vec[1]),
                fmt_f64(s.eta.re),
                s.inside_psd.to_string(),
            ]);
        }
    }
    let summary = json!({
        "samples": scan.trials.len() * 4,
        "outside_psd": scan.psd_failures,
        "psd_semi_axes": axes.psd_semi_axes,
        "paper_axes": axes.paper_axes,
    });
    let header = OutputHeader::new(
        "ellipse",
        Some(seed),
        json!({ "eta": args.eta, "trials": args.trials, "state": args.state, "points": points }),
    );
    Ok((
        Document {
            header,
            table: t,
            summary,
            json_body: None,
        },
        EXIT_OK,
    ))
}

fn cmd_bias(step: f64, points: usize) -> Result<(Document, i32)> {
    let scan = quantization_bias_scan(step, points)?;
    let mut t = Table::new(&["target_deg", "alice_error_deg", "bob_error_deg", "bias"]);
    for p in &scan.points {
        t.push(vec![
            fmt_f64(p.target_deg),
            fmt_f64(p.alice_error_deg),
            fmt_f64(p.bob_error_deg),
            fmt_f64(p.bias),
        ]);
    }
    let summary = json!({ "max_bias": scan.max_bias, "mean_bias": scan.mean_bias, "bound": scan.bound });
    let header = OutputHeader::new("bias", None, json!({ "step": step, "points": points }));
    Ok((
        Document {
            header,
            table: t,
            summary,
            json_body: None,
        },
        EXIT_OK,
    ))
}

fn dispatch(cli: &Cli) -> Result<(Document, i32)> {
    let seed = cli.global.seed;
    match &cli.command {
        Command::Saturate { n, state, strategy_out } => cmd_saturate(*n as usize, state, strategy_out.as_ref(), seed),
        Command::Classical { n, interior, restarts } => cmd_classical(*n as usize, *interior, *restarts, seed),
        Command::Fd { max_n } => cmd_fd(*max_n as usize),
        Command::Optimize {
            n,
            state,
            restarts,
            from,
            strategy_out,
        } => cmd_optimize(
            *n as usize,
            state,
            *restarts,
            from.as_ref(),
            strategy_out.as_ref(),
            seed,
        ),
        Command::Mc(args) => cmd_mc(args, seed),
        Command::Effscan { mc, etas } => cmd_effscan(mc, etas, seed),
        Command::Rich(args) => cmd_rich(args, seed),
        Command::Ellipse { rich, points } => cmd_ellipse(rich, *points, seed),
        Command::Bias { step, points } => cmd_bias(*step, *points),
    }
}

/// Runs a parsed command and renders its output.
pub fn execute(cli: &Cli) -> Result<Outcome> {
    let run = || -> Result<Outcome> {
        let (doc, status) = dispatch(cli)?;
        Ok(Outcome {
            text: doc.render(cli.global.format)?,
            status,
        })
    };
    match cli.global.threads {
        Some(k) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(k.max(1))
                .build()
                .map_err(|e| Error::domain(format!("thread pool: {e}")))?;
            pool.install(run)
        }
        None => run(),
    }
}

/// Entry point used by the binary; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match execute(&cli) {
        Ok(outcome) => {
            let written = match &cli.global.out {
                Some(path) => std::fs::write(path, &outcome.text).map_err(Error::from),
                None => std::io::stdout()
                    .write_all(outcome.text.as_bytes())
                    .map_err(Error::from),
            };
            match written {
                Ok(()) => outcome.status,
                Err(e) => {
                    eprintln!("error: {e}");
                    EXIT_USAGE
                }
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(args: &[&str]) -> (Result<Outcome>, Cli) {
        let cli = Cli::try_parse_from(std::iter::once("multibell").chain(args.iter().copied())).unwrap();
        (execute(&cli), cli)
    }

    #[test]
    fn parses_states() {
        assert!(parse_state("singlet").is_ok());
        assert!(parse_state("werner:0.5").is_ok());
        assert!(matches!(parse_state("werner:1.5"), Err(Error::Domain(_))));
        assert!(parse_state("ghz").is_err());
    }

    #[test]
    fn usage_errors_exit_two() {
        assert_eq!(main_with_args(["multibell", "saturate", "-n", "1"]), EXIT_USAGE);
        assert_eq!(
            main_with_args(["multibell", "rich", "--eta", "1.5", "--trials", "3"]),
            EXIT_USAGE
        );
    }

    #[test]
    fn capacity_exit_three() {
        let (r, _) = run(&["classical", "-n", "13"]);
        assert_eq!(exit_code(&r.err().unwrap()), EXIT_CAPACITY);
        let (r, _) = run(&["classical", "-n", "7", "--interior"]);
        assert_eq!(exit_code(&r.err().unwrap()), EXIT_CAPACITY);
    }

    #[test]
    fn saturate_json_value() {
        let (r, _) = run(&["--format", "json", "saturate", "-n", "3"]);
        let v: Value = serde_json::from_str(&r.unwrap().text).unwrap();
        assert!((v["data"]["value"].as_f64().unwrap() - 6.0).abs() < 1e-9);
        let (r, _) = run(&["--format", "json", "saturate", "-n", "2", "--state", "werner:0.97"]);
        let v: Value = serde_json::from_str(&r.unwrap().text).unwrap();
        assert!((v["data"]["value"].as_f64().unwrap() - 1.8818).abs() < 1e-4);
    }

    #[test]
    fn seed_flag_reaches_header() {
        let (r, cli) = run(&["--seed", "42", "mc", "-n", "2", "--pairs", "100"]);
        assert_eq!(cli.global.seed, 42);
        let text = r.unwrap().text;
        let header: Value = serde_json::from_str(&text.lines().next().unwrap()[2..]).unwrap();
        assert_eq!(header["seed"], 42);
        assert_eq!(header["config"]["pairs"], 100);
    }
}
