//! Command-line front end.
//!
//! Exit codes: 0 success, 1 invalid input or arguments, 2 an optimization did
//! not converge (the report is still written), 3 a verification suite failed.
//! All quantities are in nats unless a flag says otherwise.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use crate::bounds::{bound_from_exponent, default_s_grid, lemma1_bound, ConverseEngine};
use crate::channel::{CqChannel, Prior};
use crate::error::{Error, Result};
use crate::info::{check_s, e0};
use crate::io::{csv, format_number, load_channel, load_codebook, write_atomic};
use crate::optimizer::{capacity, min_e0_over_prior, OptimizerConfig};
use crate::verify::{self, EnsembleConfig, VerdictReport};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 1;
pub const EXIT_NOT_CONVERGED: i32 = 2;
pub const EXIT_VERIFY_FAILED: i32 = 3;

const SLOPE_STEP: f64 = 1e-4;

#[derive(Debug, Parser)]
#[command(name = "cqconverse", version, about = "Strong-converse bounds for classical-quantum channels")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Capacity, optimal prior and its optimality residual.
    Capacity {
        #[command(flatten)]
        channel: ChannelArg,
        #[command(flatten)]
        opt: OptimizerArgs,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// E₀(s) over an s grid, for a fixed prior or minimized over priors.
    E0Curve {
        #[command(flatten)]
        channel: ChannelArg,
        /// "optimal", "uniform", or comma-separated probabilities.
        #[arg(long, default_value = "optimal")]
        prior: String,
        /// s values as a:b:step within (−1, 0].
        #[arg(long, allow_hyphen_values = true)]
        s_grid: Option<String>,
        #[command(flatten)]
        opt: OptimizerArgs,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Strong-converse exponent sup_s [−sR + min_π E₀(s, π)] per rate.
    Exponent {
        #[command(flatten)]
        channel: ChannelArg,
        /// A single rate (nats per symbol unless --bits).
        #[arg(long, conflicts_with = "rate_grid")]
        rate: Option<f64>,
        /// Rates as a:b:step.
        #[arg(long)]
        rate_grid: Option<String>,
        /// Rates are given in bits per symbol.
        #[arg(long)]
        bits: bool,
        /// s values as a:b:step within (−1, 0].
        #[arg(long, allow_hyphen_values = true)]
        s_grid: Option<String>,
        /// Also report the error lower bound at this block length.
        #[arg(long)]
        block_length: Option<usize>,
        #[command(flatten)]
        opt: OptimizerArgs,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Per-codebook error lower bound for one or more β.
    Bound {
        #[command(flatten)]
        channel: ChannelArg,
        /// Codebook JSON file (1-based letters).
        #[arg(long)]
        codebook: PathBuf,
        #[arg(long, conflicts_with = "beta_grid")]
        beta: Option<f64>,
        /// β values as a:b:step within (0, 1]; default 0.1:1:0.1.
        #[arg(long)]
        beta_grid: Option<String>,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Randomized inequality checks.
    Verify {
        /// Suite name or "all".
        #[arg(long, default_value = "all")]
        suite: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Trials per suite; each suite has its own default.
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long, default_value_t = 6)]
        max_dim: usize,
        /// Run the single trial with this per-trial seed and print its margin.
        #[arg(long)]
        replay: Option<u64>,
        #[command(flatten)]
        out: OutputArgs,
    },
}

#[derive(Debug, Args)]
pub struct ChannelArg {
    /// Channel JSON file.
    #[arg(long)]
    pub channel: PathBuf,
}

#[derive(Debug, Args)]
pub struct OptimizerArgs {
    #[arg(long, default_value_t = OptimizerConfig::default().max_iters)]
    pub max_iters: usize,
    #[arg(long, default_value_t = OptimizerConfig::default().tol)]
    pub tol: f64,
    #[arg(long, default_value_t = OptimizerConfig::default().kkt_tol)]
    pub kkt_tol: f64,
    #[arg(long, default_value_t = OptimizerConfig::default().grid_res)]
    pub grid_res: usize,
}

impl OptimizerArgs {
    fn config(&self) -> Result<OptimizerConfig> {
        let cfg = OptimizerConfig {
            max_iters: self.max_iters,
            tol: self.tol,
            kkt_tol: self.kkt_tol,
            grid_res: self.grid_res,
            record_path: false,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Args)]
pub struct OutputArgs {
    /// Output file (written atomically); standard output if omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

/// Expands `a:b:step` (or a single number) into grid points. Points are
/// rounded to 12 significant digits so `-0.95:0:0.05` ends exactly at 0.
pub fn parse_grid(arg: &str) -> Result<Vec<f64>> {
    let num = |s: &str| -> Result<f64> {
        s.trim()
            .parse::<f64>()
            .ok()
            .filter(|x| x.is_finite())
            .ok_or_else(|| Error::input(format!("bad number {s:?} in grid {arg:?}")))
    };
    let parts: Vec<&str> = arg.split(':').collect();
    match parts.as_slice() {
        [x] => Ok(vec![num(x)?]),
        [a, b, step] => {
            let (a, b, step) = (num(a)?, num(b)?, num(step)?);
            if !(step > 0.0) || b < a {
                return Err(Error::input(format!("grid {arg:?} needs a <= b and step > 0")));
            }
            let count = ((b - a) / step + 1e-9).floor() as usize + 1;
            if count > 1_000_000 {
                return Err(Error::input(format!("grid {arg:?} has too many points")));
            }
            let scale = a.abs().max(b.abs()).max(step);
            Ok((0..count)
                .map(|k| {
                    let v: f64 = format_number(a + k as f64 * step).parse().expect("formatted number");
                    if v.abs() < 1e-12 * scale {
                        0.0
                    } else {
                        v.min(b)
                    }
                })
                .collect())
        }
        _ => Err(Error::input(format!("grid {arg:?} must be a number or a:b:step"))),
    }
}

fn parse_prior(arg: &str, ch: &CqChannel) -> Result<Option<Prior>> {
    match arg {
        "optimal" => Ok(None),
        "uniform" => Ok(Some(Prior::uniform(ch.alphabet_size()))),
        list => {
            let probs = list
                .split(',')
                .map(|s| {
                    s.trim()
                        .parse::<f64>()
                        .map_err(|_| Error::input(format!("bad prior entry {s:?}")))
                })
                .collect::<Result<Vec<_>>>()?;
            if probs.len() != ch.alphabet_size() {
                return Err(Error::DimensionMismatch {
                    expected: ch.alphabet_size(),
                    found: probs.len(),
                });
            }
            Ok(Some(Prior::new(probs)?))
        }
    }
}

struct Output {
    text: String,
    code: i32,
}

fn emit(out: &OutputArgs, output: &Output) -> Result<()> {
    match &out.out {
        Some(path) => write_atomic(path, output.text.as_bytes()),
        None => {
            print!("{}", output.text);
            Ok(())
        }
    }
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report serializes");
    s.push('\n');
    s
}

fn converged_code(ok: bool) -> i32 {
    if ok {
        EXIT_OK
    } else {
        EXIT_NOT_CONVERGED
    }
}

fn cmd_capacity(channel: &ChannelArg, opt: &OptimizerArgs, format: Format) -> Result<Output> {
    let ch = load_channel(&channel.channel)?;
    let r = capacity(&ch, &opt.config()?)?;
    let bits = r.value / 2f64.ln();
    let text = match format {
        Format::Json => to_json(&json!({
            "capacity_nats": r.value,
            "capacity_bits": bits,
            "prior": r.pi_star,
            "kkt_residual": r.kkt_residual,
            "iterations": r.iterations,
            "converged": r.converged,
        })),
        Format::Csv => {
            let mut header = vec![
                "capacity_nats".to_string(),
                "capacity_bits".into(),
                "kkt_residual".into(),
                "iterations".into(),
                "converged".into(),
            ];
            header.extend((1..=ch.alphabet_size()).map(|i| format!("pi_{i}")));
            let mut row = vec![
                format_number(r.value),
                format_number(bits),
                format_number(r.kkt_residual),
                r.iterations.to_string(),
                r.converged.to_string(),
            ];
            row.extend(r.pi_star.probs().iter().map(|&p| format_number(p)));
            let header: Vec<&str> = header.iter().map(String::as_str).collect();
            csv(&header, &[row])
        }
    };
    Ok(Output {
        text,
        code: converged_code(r.converged),
    })
}

#[derive(Serialize)]
struct E0Row {
    s: f64,
    e0: f64,
    slope_estimate: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    prior: Option<Prior>,
}

fn cmd_e0_curve(
    channel: &ChannelArg,
    prior: &str,
    s_grid: Option<&str>,
    opt: &OptimizerArgs,
    format: Format,
) -> Result<Output> {
    let ch = load_channel(&channel.channel)?;
    let prior = parse_prior(prior, &ch)?;
    let grid = match s_grid {
        Some(arg) => parse_grid(arg)?,
        None => default_s_grid(),
    };
    for &s in &grid {
        check_s(s)?;
    }
    let cfg = opt.config()?;
    let mut all_converged = true;
    // value (and optimal prior) at one s
    let mut eval = |s: f64| -> Result<(f64, Option<Prior>)> {
        match &prior {
            Some(p) => Ok((e0(&ch, p, s)?.value, None)),
            None => {
                let o = min_e0_over_prior(&ch, s, &cfg)?;
                all_converged &= o.inner.converged;
                Ok((o.value, Some(o.inner.pi_star)))
            }
        }
    };
    let mut rows = Vec::with_capacity(grid.len());
    for &s in &grid {
        let (value, pi) = eval(s)?;
        let (lo, hi) = if s + SLOPE_STEP <= 0.0 {
            (s - SLOPE_STEP, s + SLOPE_STEP)
        } else {
            (s - 2.0 * SLOPE_STEP, s)
        };
        let lo = lo.max(-1.0 + SLOPE_STEP / 2.0);
        let f_hi = if hi == s { value } else { eval(hi)?.0 };
        let slope = (f_hi - eval(lo)?.0) / (hi - lo);
        rows.push(E0Row {
            s,
            e0: value,
            slope_estimate: slope,
            prior: pi,
        });
    }
    let text = match format {
        Format::Json => to_json(&rows),
        Format::Csv => csv(
            &["s", "e0", "slope_estimate"],
            &rows
                .iter()
                .map(|r| vec![format_number(r.s), format_number(r.e0), format_number(r.slope_estimate)])
                .collect::<Vec<_>>(),
        ),
    };
    Ok(Output {
        text,
        code: converged_code(all_converged),
    })
}

#[allow(clippy::too_many_arguments)]
fn cmd_exponent(
    channel: &ChannelArg,
    rate: Option<f64>,
    rate_grid: Option<&str>,
    bits: bool,
    s_grid: Option<&str>,
    block_length: Option<usize>,
    opt: &OptimizerArgs,
    format: Format,
) -> Result<Output> {
    let ch = load_channel(&channel.channel)?;
    let mut rates = match (rate, rate_grid) {
        (Some(r), None) => vec![r],
        (None, Some(arg)) => parse_grid(arg)?,
        _ => return Err(Error::input("give --rate or --rate-grid")),
    };
    if bits {
        rates.iter_mut().for_each(|r| *r *= 2f64.ln());
    }
    let grid = match s_grid {
        Some(arg) => parse_grid(arg)?,
        None => default_s_grid(),
    };
    if block_length == Some(0) {
        return Err(Error::input("block length must be positive"));
    }
    let engine = ConverseEngine::new(ch, opt.config()?)?;
    let curve = engine.exponent_curve(&rates, &grid)?;
    let bounds: Option<Vec<f64>> =
        block_length.map(|n| curve.exponents.iter().map(|&e| bound_from_exponent(n, e).value).collect());
    let text = match format {
        Format::Json => match &bounds {
            Some(b) => to_json(&json!({
                "rate_grid": curve.rate_grid,
                "exponents": curve.exponents,
                "s_argmax": curve.s_argmax,
                "block_length": block_length,
                "bounds": b,
            })),
            None => to_json(&curve),
        },
        Format::Csv => {
            let mut header = vec!["rate", "exponent", "s_star"];
            if bounds.is_some() {
                header.push("bound");
            }
            let rows: Vec<Vec<String>> = (0..rates.len())
                .map(|k| {
                    let mut row = vec![
                        format_number(curve.rate_grid[k]),
                        format_number(curve.exponents[k]),
                        format_number(curve.s_argmax[k]),
                    ];
                    if let Some(b) = &bounds {
                        row.push(format_number(b[k]));
                    }
                    row
                })
                .collect();
            csv(&header, &rows)
        }
    };
    Ok(Output { text, code: EXIT_OK })
}

fn cmd_bound(
    channel: &ChannelArg,
    codebook: &std::path::Path,
    beta: Option<f64>,
    beta_grid: Option<&str>,
    format: Format,
) -> Result<Output> {
    let ch = load_channel(&channel.channel)?;
    let cb = load_codebook(codebook)?;
    let betas = match (beta, beta_grid) {
        (Some(b), _) => vec![b],
        (None, Some(arg)) => parse_grid(arg)?,
        (None, None) => parse_grid("0.1:1:0.1")?,
    };
    #[derive(Serialize)]
    struct Row {
        beta: f64,
        bound: f64,
        vacuous: bool,
    }
    let rows = betas
        .iter()
        .map(|&beta| {
            let b = lemma1_bound(&ch, &cb, beta)?;
            Ok(Row {
                beta,
                bound: b.value,
                vacuous: b.vacuous,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let text = match format {
        Format::Json => to_json(&rows),
        Format::Csv => csv(
            &["beta", "bound", "vacuous"],
            &rows
                .iter()
                .map(|r| vec![format_number(r.beta), format_number(r.bound), r.vacuous.to_string()])
                .collect::<Vec<_>>(),
        ),
    };
    Ok(Output { text, code: EXIT_OK })
}

fn verdict_rows(reports: &[VerdictReport]) -> Vec<Vec<String>> {
    reports
        .iter()
        .map(|r| {
            vec![
                r.suite.clone(),
                r.trials.to_string(),
                format_number(r.worst_violation),
                format_number(r.tolerance),
                r.passed.to_string(),
                r.failing_seeds.iter().map(u64::to_string).collect::<Vec<_>>().join(" "),
            ]
        })
        .collect()
}

fn cmd_verify(
    suite: &str,
    seed: u64,
    trials: Option<usize>,
    max_dim: usize,
    replay: Option<u64>,
    format: Format,
) -> Result<Output> {
    let cfg = EnsembleConfig {
        trials,
        seed,
        max_dim,
        ..Default::default()
    };
    if let Some(trial) = replay {
        if suite == "all" {
            return Err(Error::input("--replay needs a single --suite"));
        }
        let margin = verify::run_trial(suite, trial, &cfg)?;
        let tol = verify::run_suite(suite, &EnsembleConfig { trials: Some(1), ..cfg })?.tolerance;
        let passed = margin >= -tol;
        let text = match format {
            Format::Json => to_json(&json!({ "suite": suite, "seed": trial, "margin": margin, "passed": passed })),
            Format::Csv => csv(
                &["suite", "seed", "margin", "passed"],
                &[vec![suite.to_string(), trial.to_string(), format_number(margin), passed.to_string()]],
            ),
        };
        return Ok(Output {
            text,
            code: if passed { EXIT_OK } else { EXIT_VERIFY_FAILED },
        });
    }
    let reports = if suite == "all" {
        verify::run_all(&cfg)?
    } else {
        vec![verify::run_suite(suite, &cfg)?]
    };
    let passed = reports.iter().all(|r| r.passed);
    let text = match format {
        Format::Json if suite == "all" => to_json(&reports),
        Format::Json => to_json(&reports[0]),
        Format::Csv => csv(
            &["suite", "trials", "worst_violation", "tolerance", "passed", "failing_seeds"],
            &verdict_rows(&reports),
        ),
    };
    Ok(Output {
        text,
        code: if passed { EXIT_OK } else { EXIT_VERIFY_FAILED },
    })
}

fn exit_code_for(err: &Error) -> i32 {
    match err {
        Error::NotConverged { .. } | Error::OptimizerNotConverged { .. } => EXIT_NOT_CONVERGED,
        _ => EXIT_INPUT,
    }
}

pub fn run(cli: Cli) -> i32 {
    let (result, out) = match &cli.command {
        Command::Capacity { channel, opt, out } => {
            (cmd_capacity(channel, opt, out.format.unwrap_or(Format::Csv)), out)
        }
        Command::E0Curve {
            channel,
            prior,
            s_grid,
            opt,
            out,
        } => (
            cmd_e0_curve(channel, prior, s_grid.as_deref(), opt, out.format.unwrap_or(Format::Csv)),
            out,
        ),
        Command::Exponent {
            channel,
            rate,
            rate_grid,
            bits,
            s_grid,
            block_length,
            opt,
            out,
        } => (
            cmd_exponent(
                channel,
                *rate,
                rate_grid.as_deref(),
                *bits,
                s_grid.as_deref(),
                *block_length,
                opt,
                out.format.unwrap_or(Format::Csv),
            ),
            out,
        ),
        Command::Bound {
            channel,
            codebook,
            beta,
            beta_grid,
            out,
        } => (
            cmd_bound(channel, codebook, *beta, beta_grid.as_deref(), out.format.unwrap_or(Format::Csv)),
            out,
        ),
        Command::Verify {
            suite,
            seed,
            trials,
            max_dim,
            replay,
            out,
        } => (
            cmd_verify(suite, *seed, *trials, *max_dim, *replay, out.format.unwrap_or(Format::Json)),
            out,
        ),
    };
    match result.and_then(|output| emit(out, &output).map(|_| output.code)) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code_for(&e)
        }
    }
}

/// Parses arguments and runs; argument errors exit with code 1.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => run(cli),
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
            let _ = e.print();
            code
        }
    }
}
