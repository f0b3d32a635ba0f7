//! Command-line surface: simulate paths, sample spectral windows, evaluate
//! limit functionals and run verification suites from a JSON config.
//!
//! Exit codes: 0 success, 1 failed verification, 2 usage or config error,
//! 3 runtime failure (rejection exhaustion, I/O, degenerate estimates).

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path as FsPath, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use crate::config::{preset, Model, ModelConfig};
use crate::error::{Error, Result};
use crate::mc::{par_chunks, stream_rng};
use crate::simulate::write_path_csv;
use crate::spectral::SpectralWindow;
use crate::summaries::{
    extremal_index, extremogram_limit, joint_survival_limit, ma_real_specials, tail_dependence,
    EventSpec, ExtremalMode, LinearFunctional, Pairing,
};
use crate::verify::{run_suite, Suite};

/// Environment variable that overrides the configured seed.
pub const SEED_ENV: &str = "HEAVYTAIL_SEED";

/// RNG stream of the `spectral` command.
const SPECTRAL_STREAM: u64 = 11;
/// RNG stream of the `summarize` command.
const SUMMARIZE_STREAM: u64 = 12;

#[derive(Debug, Parser)]
#[command(
    name = "heavytail",
    version,
    about = "Regularly varying linear processes: sampling, summaries, verification"
)]
pub struct Cli {
    /// Worker threads (default: machine parallelism).
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate a path and write it as CSV with a `.meta.json` sidecar.
    Simulate {
        /// Config file, or `preset:NAME` for a built-in preset.
        #[arg(long)]
        config: String,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        length: Option<usize>,
    },
    /// Sample spectral tail windows `Θ_{-s..t}`.
    Spectral {
        #[arg(long)]
        config: String,
        #[arg(long)]
        n: usize,
        #[arg(long, num_args = 2, value_names = ["S", "T"])]
        window: Vec<usize>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Evaluate a limit functional and write a JSON record.
    Summarize {
        /// Not needed for `ma-specials`.
        #[arg(long)]
        config: Option<String>,
        #[arg(long)]
        stat: Stat,
        /// Lag for `tail-dep` and `extremogram`.
        #[arg(long, default_value_t = 1)]
        lag: i64,
        /// `tail-dep` pairing: `norm`, `norm*W` or `dual[b1,...]`.
        #[arg(long, default_value = "norm")]
        pairing: String,
        /// `joint-survival` term `OFFSET:PAIRING`, repeatable.
        #[arg(long = "term")]
        terms: Vec<String>,
        /// `extremogram` events, e.g. `norm>1` and `dual[1,0]>0.5`.
        #[arg(long, default_value = "norm>1")]
        event_a: String,
        #[arg(long, default_value = "norm>1")]
        event_b: String,
        /// `extremal-index` mode: `norm` or `dual[b1,...]`.
        #[arg(long, default_value = "norm")]
        mode: String,
        /// `extremal-index` horizon (default: the process extent).
        #[arg(long)]
        horizon: Option<usize>,
        /// `ma-specials` coefficients, comma separated.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        a: Vec<f64>,
        #[arg(long)]
        alpha: Option<f64>,
        /// `ma-specials` weight `Pr(Θ^Z = +1)`.
        #[arg(long, default_value_t = 0.5)]
        p: f64,
        /// Monte Carlo draws (default: `mc.n_samples`).
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a verification suite and write the JSON report.
    Verify {
        #[arg(long)]
        config: String,
        #[arg(long)]
        suite: SuiteArg,
        #[arg(long)]
        report: PathBuf,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Stat {
    JointSurvival,
    TailDep,
    Extremogram,
    ExtremalIndex,
    MaSpecials,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum SuiteArg {
    TimeChange,
    Mixture,
    BigJump,
    EmpiricalVsClosed,
    LimitMeasure,
    All,
}

impl From<SuiteArg> for Suite {
    fn from(s: SuiteArg) -> Self {
        match s {
            SuiteArg::TimeChange => Suite::TimeChange,
            SuiteArg::Mixture => Suite::Mixture,
            SuiteArg::BigJump => Suite::BigJump,
            SuiteArg::EmpiricalVsClosed => Suite::EmpiricalVsClosed,
            SuiteArg::LimitMeasure => Suite::LimitMeasure,
            SuiteArg::All => Suite::All,
        }
    }
}

/// Outcome of a command that ran to completion.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Success,
    Failed,
}

/// Exit code for an error.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_)
        | Error::Parse { .. }
        | Error::Json(_)
        | Error::Structural(_)
        | Error::Domain(_) => 2,
        _ => 3,
    }
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
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let outcome = match cli.workers {
        Some(k) => match rayon::ThreadPoolBuilder::new().num_threads(k).build() {
            Ok(pool) => pool.install(|| execute(cli.command)),
            Err(e) => Err(Error::Config(format!("cannot start {k} workers: {e}"))),
        },
        None => execute(cli.command),
    };
    match outcome {
        Ok(Outcome::Success) => 0,
        Ok(Outcome::Failed) => 1,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

/// Reads a config file, or a built-in preset for `preset:NAME`, and applies
/// the seed override from the environment.
pub fn load_config(source: &str) -> Result<ModelConfig> {
    let text = match source.strip_prefix("preset:") {
        Some(name) => preset(name)
            .ok_or_else(|| Error::Config(format!("unknown preset `{name}`")))?
            .to_string(),
        None => std::fs::read_to_string(source)
            .map_err(|e| Error::Config(format!("cannot read `{source}`: {e}")))?,
    };
    let mut cfg = ModelConfig::parse(&text)?;
    if let Ok(v) = std::env::var(SEED_ENV) {
        cfg.seed = v.trim().parse().map_err(|_| {
            Error::Config(format!(
                "{SEED_ENV}=`{v}` is not an unsigned 64-bit integer"
            ))
        })?;
    }
    Ok(cfg)
}

fn create(path: &FsPath) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

fn execute(cmd: Command) -> Result<Outcome> {
    match cmd {
        Command::Simulate {
            config,
            out,
            seed,
            length,
        } => cmd_simulate(&config, &out, seed, length),
        Command::Spectral {
            config,
            n,
            window,
            out,
        } => cmd_spectral(&config, n, window[0], window[1], &out),
        Command::Summarize {
            config,
            stat,
            lag,
            pairing,
            terms,
            event_a,
            event_b,
            mode,
            horizon,
            a,
            alpha,
            p,
            n,
            out,
        } => {
            let value = match stat {
                Stat::MaSpecials => {
                    let alpha = match (alpha, &config) {
                        (Some(a), _) => a,
                        (None, Some(c)) => load_config(c)?.alpha,
                        (None, None) => {
                            return Err(Error::Config(
                                "ma-specials needs --alpha or --config".into(),
                            ))
                        }
                    };
                    if a.is_empty() {
                        return Err(Error::Config("ma-specials needs --a".into()));
                    }
                    serde_json::to_value(ma_real_specials(&a, alpha, p)?)?
                }
                _ => {
                    let config = config.ok_or_else(|| {
                        Error::Config(format!("--config is required for {stat:?}"))
                    })?;
                    let model = load_config(&config)?.build()?;
                    let args = SummaryArgs {
                        lag,
                        pairing,
                        terms,
                        event_a,
                        event_b,
                        mode,
                        horizon,
                    };
                    summarize(&model, stat, &args, n)?
                }
            };
            let text = serde_json::to_string_pretty(&value)?;
            match out {
                Some(path) => {
                    let mut w = create(&path)?;
                    writeln!(w, "{text}")?;
                    w.flush()?;
                }
                None => println!("{text}"),
            }
            Ok(Outcome::Success)
        }
        Command::Verify {
            config,
            suite,
            report,
        } => cmd_verify(&config, suite.into(), &report),
    }
}

pub fn cmd_simulate(
    config: &str,
    out: &FsPath,
    seed: Option<u64>,
    length: Option<usize>,
) -> Result<Outcome> {
    let mut cfg = load_config(config)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    if let Some(l) = length {
        cfg.path.length = l;
    }
    let model = cfg.build()?;
    let path = model.simulate(&model.path_config())?;
    let mut w = create(out)?;
    write_path_csv(&path, &mut w)?;
    w.flush()?;

    let meta = json!({"meta": path.meta, "config": cfg});
    let mut sidecar = out.as_os_str().to_owned();
    sidecar.push(".meta.json");
    let mut m = create(FsPath::new(&sidecar))?;
    writeln!(m, "{}", serde_json::to_string_pretty(&meta)?)?;
    m.flush()?;
    Ok(Outcome::Success)
}

pub fn cmd_spectral(config: &str, n: usize, s: usize, t: usize, out: &FsPath) -> Result<Outcome> {
    let model = load_config(config)?.build()?;
    let mut rng = stream_rng(model.seed(), SPECTRAL_STREAM);
    let sampler = model.window_sampler(&mut rng)?;
    let consts = model.base_sampler(&mut rng)?.constants().clone();
    let parts = par_chunks(n, &mut rng, |r, m| -> Result<Vec<SpectralWindow>> {
        (0..m).map(|_| sampler.sample(s, t, r)).collect()
    });
    let windows: Vec<SpectralWindow> = parts
        .into_iter()
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .flatten()
        .collect();

    let mut w = create(out)?;
    if !windows.is_empty() {
        let dim = sampler.space().dim();
        write!(w, "sample,offset")?;
        for i in 0..dim {
            write!(w, ",x{i}")?;
        }
        writeln!(w, ",origin")?;
        for (k, win) in windows.iter().enumerate() {
            for (j, v) in win.values.iter().enumerate() {
                write!(w, "{k},{}", j as i64 - s as i64)?;
                for x in v {
                    write!(w, ",{x:?}")?;
                }
                writeln!(w, ",{}", win.origin)?;
            }
        }
    }
    w.flush()?;

    let trials: u64 = windows.iter().map(|w| w.trials).sum();
    let rate = if trials > 0 {
        n as f64 / trials as f64
    } else {
        f64::NAN
    };
    println!("samples {n}, proposals {trials}, acceptance rate {rate:.6}");
    if n > 0 {
        println!("origin,frequency,p,stderr");
        let p_se = consts.p_stderr();
        for (j, p) in consts.p.iter().enumerate() {
            let origin = consts.start + j as i64;
            let hits = windows.iter().filter(|w| w.origin == origin).count();
            let se = (p * (1.0 - p) / n as f64 + p_se[j] * p_se[j]).sqrt();
            println!("{origin},{:.6},{p:.6},{se:.6}", hits as f64 / n as f64);
        }
    }
    Ok(Outcome::Success)
}

/// Parameters of the Monte Carlo summaries.
#[derive(Debug, Clone)]
pub struct SummaryArgs {
    pub lag: i64,
    pub pairing: String,
    pub terms: Vec<String>,
    pub event_a: String,
    pub event_b: String,
    pub mode: String,
    pub horizon: Option<usize>,
}

/// Parses `norm`, `norm*W` or `dual[b1,...]`.
pub fn parse_pairing(s: &str) -> Result<Pairing> {
    let s = s.trim();
    if s == "norm" {
        return Ok(Pairing::Norm(1.0));
    }
    if let Some(w) = s.strip_prefix("norm*") {
        let w: f64 = w
            .trim()
            .parse()
            .map_err(|_| Error::Config(format!("bad norm weight in `{s}`")))?;
        return Ok(Pairing::Norm(w));
    }
    Ok(Pairing::Dual(parse_dual(s)?))
}

fn parse_dual(s: &str) -> Result<LinearFunctional> {
    let inner = s
        .strip_prefix("dual[")
        .and_then(|r| r.strip_suffix(']'))
        .ok_or_else(|| Error::Config(format!("expected `norm` or `dual[b1,...]`, got `{s}`")))?;
    let coeffs = inner
        .split(',')
        .map(|c| c.trim().parse::<f64>())
        .collect::<std::result::Result<Vec<_>, _>>()
        .map_err(|_| Error::Config(format!("bad coefficient in `{s}`")))?;
    LinearFunctional::new(coeffs, s)
}

fn parse_term(s: &str) -> Result<(i64, Pairing)> {
    let (off, pairing) = s
        .split_once(':')
        .ok_or_else(|| Error::Config(format!("term `{s}` should read OFFSET:PAIRING")))?;
    let off = off
        .trim()
        .parse()
        .map_err(|_| Error::Config(format!("bad offset in term `{s}`")))?;
    Ok((off, parse_pairing(pairing)?))
}

/// Evaluates a Monte Carlo summary of `model` as a JSON record.
pub fn summarize(
    model: &Model,
    stat: Stat,
    args: &SummaryArgs,
    n: Option<usize>,
) -> Result<serde_json::Value> {
    let mut rng = stream_rng(model.seed(), SUMMARIZE_STREAM);
    let n = n.unwrap_or(model.n_samples());
    let sampler = model.window_sampler(&mut rng)?;
    let sampler = sampler.as_ref();
    let result = match stat {
        Stat::JointSurvival => {
            let terms = if args.terms.is_empty() {
                vec![(0, Pairing::Norm(1.0))]
            } else {
                args.terms
                    .iter()
                    .map(|t| parse_term(t))
                    .collect::<Result<Vec<_>>>()?
            };
            joint_survival_limit(sampler, &terms, n, &mut rng)?
        }
        Stat::TailDep => tail_dependence(
            sampler,
            args.lag,
            &parse_pairing(&args.pairing)?,
            n,
            &mut rng,
        )?,
        Stat::Extremogram => {
            let a: EventSpec = args.event_a.parse()?;
            let b: EventSpec = args.event_b.parse()?;
            extremogram_limit(sampler, &a, &b, args.lag, n, &mut rng)?
        }
        Stat::ExtremalIndex => {
            let mode = if args.mode.trim() == "norm" {
                ExtremalMode::Norm
            } else {
                ExtremalMode::Functional(parse_dual(args.mode.trim())?)
            };
            let horizon = args.horizon.unwrap_or(sampler.extent());
            extremal_index(sampler, &mode, horizon, n, &mut rng)?
        }
        Stat::MaSpecials => unreachable!("handled without a model"),
    };
    Ok(serde_json::to_value(result)?)
}

pub fn cmd_verify(config: &str, suite: Suite, report: &FsPath) -> Result<Outcome> {
    let model = load_config(config)?.build()?;
    let rep = run_suite(&model, suite)?;
    let mut w = create(report)?;
    writeln!(w, "{}", rep.to_json())?;
    w.flush()?;
    for c in &rep.checks {
        println!(
            "{} {}: estimate {:.6}, target {:.6}, stderr {:.2e}",
            if c.pass { "PASS" } else { "FAIL" },
            c.name,
            c.estimate,
            c.target,
            c.stderr
        );
    }
    Ok(if rep.pass {
        Outcome::Success
    } else {
        Outcome::Failed
    })
}
