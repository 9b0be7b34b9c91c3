//! Command-line front end: argument parsing, config merging and output files.
//!
//! Every command prints its JSON result on standard output. With `--out`
//! the same JSON, the tabular CSV and a `manifest.json` are written to the
//! directory as well.

mod manifest;
pub mod phase;

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::analysis::{analyze, default_n_max};
use crate::chain::{chain_from_json, ChainSpec};
use crate::criticality::{mu_of_alpha, offspring_pmf};
use crate::error::{Error, Result};
use crate::simulation::{
    run_trials, sample_offspring_counts, SimConfig, SurvivalEstimate, DEFAULT_BIRTH_CAP, DEFAULT_MAX_STEPS,
    DEFAULT_TIME_HORIZON,
};
use crate::tail::TailFamily;

pub use manifest::RunManifest;
use phase::{phase_sweep, PhaseSpec};

const DEFAULT_TRIALS: u64 = 10_000;
const DEFAULT_GRID_STEPS: usize = 11;
const DEFAULT_SAMPLES: u64 = 100_000;

#[derive(Debug, Parser)]
#[command(name = "homing", version, about = "Survival of a branching walk that reproduces on returns to its origin")]
pub struct Cli {
    /// JSON file with default values; explicit flags take precedence.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,

    #[command(flatten)]
    pub common: CommonArgs,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Default, Args)]
pub struct CommonArgs {
    /// Chain as inline JSON or a path to a JSON file.
    #[arg(long, global = true, value_name = "JSON|PATH")]
    pub chain: Option<String>,
    #[arg(long, global = true)]
    pub n_max: Option<usize>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// Directory for CSV, JSON and manifest files.
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TailChoice {
    Auto,
    PowerLaw,
    Geometric,
}

impl TailChoice {
    fn family(self) -> Option<TailFamily> {
        match self {
            TailChoice::Auto => None,
            TailChoice::PowerLaw => Some(TailFamily::PowerLaw),
            TailChoice::Geometric => Some(TailFamily::Geometric),
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Return and first-return series with tail fit and beta.
    Returns {
        #[arg(long, value_enum)]
        tail: Option<TailChoice>,
    },
    /// Critical death parameter.
    AlphaC,
    /// Monte Carlo survival of the population.
    Simulate {
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long)]
        trials: Option<u64>,
        #[arg(long)]
        birth_cap: Option<u64>,
        #[arg(long)]
        max_steps: Option<u64>,
        #[arg(long)]
        horizon: Option<u64>,
        /// Also write one JSON line per trial to `trials.jsonl` under `--out`.
        #[arg(long)]
        emit_trials: bool,
    },
    /// (p, alpha) phase diagram of the biased walk on the integers.
    Phase {
        #[arg(long, value_parser = parse_range, value_name = "LO:HI")]
        p_range: Option<(f64, f64)>,
        #[arg(long, value_parser = parse_range, value_name = "LO:HI")]
        alpha_range: Option<(f64, f64)>,
        /// Points per axis.
        #[arg(long)]
        grid_steps: Option<usize>,
        #[arg(long)]
        p_steps: Option<usize>,
        #[arg(long)]
        alpha_steps: Option<usize>,
        /// Monte Carlo trials per cell; 0 skips simulation.
        #[arg(long)]
        trials_per_cell: Option<u64>,
        #[arg(long)]
        birth_cap: Option<u64>,
    },
    /// Empirical offspring law against the geometric law.
    Offspring {
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long)]
        samples: Option<u64>,
        #[arg(long)]
        max_steps: Option<u64>,
    },
}

fn parse_range(s: &str) -> std::result::Result<(f64, f64), String> {
    let (lo, hi) = s.split_once(':').ok_or_else(|| format!("expected LO:HI, got {s:?}"))?;
    let num = |t: &str| t.trim().parse::<f64>().map_err(|e| format!("{t:?}: {e}"));
    Ok((num(lo)?, num(hi)?))
}

/// Values read from `--config`.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub chain: Option<serde_json::Value>,
    pub n_max: Option<usize>,
    pub seed: Option<u64>,
    pub workers: Option<usize>,
    pub out: Option<PathBuf>,
    pub tail: Option<TailChoice>,
    pub alpha: Option<f64>,
    pub trials: Option<u64>,
    pub birth_cap: Option<u64>,
    pub max_steps: Option<u64>,
    pub horizon: Option<u64>,
    pub emit_trials: Option<bool>,
    pub p_range: Option<[f64; 2]>,
    pub alpha_range: Option<[f64; 2]>,
    pub grid_steps: Option<usize>,
    pub p_steps: Option<usize>,
    pub alpha_steps: Option<usize>,
    pub trials_per_cell: Option<u64>,
    pub samples: Option<u64>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self> {
        Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
    }
}

/// Result of one command: the JSON for standard output and files for `--out`.
#[derive(Debug)]
pub struct Report {
    pub json: String,
    pub files: Vec<(String, Vec<u8>)>,
}

fn resolve_chain(arg: Option<&str>, config: Option<&serde_json::Value>) -> Result<ChainSpec> {
    match (arg, config) {
        (Some(text), _) => load_chain(text),
        (None, Some(serde_json::Value::String(text))) => load_chain(text),
        (None, Some(value)) => Ok(serde_json::from_value(value.clone())?),
        (None, None) => Err(Error::InvalidParameter("--chain is required".into())),
    }
}

fn load_chain(text: &str) -> Result<ChainSpec> {
    if text.trim_start().starts_with('{') {
        chain_from_json(text)
    } else {
        chain_from_json(&fs::read_to_string(text)?)
    }
}

fn default_workers() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

fn to_json<T: Serialize>(v: &T) -> Result<String> {
    Ok(serde_json::to_string_pretty(v)?)
}

#[derive(Serialize)]
struct OffspringRow {
    j: u64,
    count: u64,
    empirical: f64,
    geometric: f64,
}

#[derive(Serialize)]
struct OffspringReport {
    chain: ChainSpec,
    alpha: f64,
    /// `F(alpha)` from the first-return series.
    b: f64,
    samples: u64,
    censored: u64,
    mean: f64,
    geometric_mean: f64,
    tv_distance: f64,
    histogram: Vec<OffspringRow>,
}

/// Runs a parsed command line. `argv` is recorded in the manifest.
pub fn run(cli: Cli, argv: &[String]) -> Result<Report> {
    let cfg = match &cli.config {
        Some(path) => ConfigFile::load(path)?,
        None => ConfigFile::default(),
    };
    let common = &cli.common;
    let out = common.out.clone().or(cfg.out.clone());
    let seed = common.seed.or(cfg.seed);
    let workers = common.workers.or(cfg.workers).unwrap_or_else(default_workers);
    if workers == 0 {
        return Err(Error::InvalidParameter("--workers must be at least 1".into()));
    }
    let chain_arg = common.chain.as_deref();
    let need_seed = || seed.ok_or_else(|| Error::InvalidParameter("--seed is required".into()));

    let mut chain_used = None;
    let mut n_max_used = None;
    let report = match &cli.command {
        Command::Returns { tail } => {
            let chain = resolve_chain(chain_arg, cfg.chain.as_ref())?;
            let n_max = common.n_max.or(cfg.n_max).unwrap_or_else(|| default_n_max(&chain));
            let family = tail.or(cfg.tail).unwrap_or(TailChoice::Auto).family();
            log::info!("return series of {} steps", n_max);
            let a = analyze(&chain, n_max, family)?;
            let json = to_json(&a.summary())?;
            let mut csv = Vec::new();
            a.series.write_csv(&mut csv)?;
            chain_used = Some(chain);
            n_max_used = Some(n_max);
            Report { files: vec![("returns.csv".into(), csv), ("returns.json".into(), with_newline(&json))], json }
        }
        Command::AlphaC => {
            let chain = resolve_chain(chain_arg, cfg.chain.as_ref())?;
            let n_max = common.n_max.or(cfg.n_max).unwrap_or_else(|| default_n_max(&chain));
            let a = analyze(&chain, n_max, None)?;
            let json = to_json(&a.criticality()?)?;
            chain_used = Some(chain);
            n_max_used = Some(n_max);
            Report { files: vec![("alpha_c.json".into(), with_newline(&json))], json }
        }
        Command::Simulate { alpha, trials, birth_cap, max_steps, horizon, emit_trials } => {
            let chain = resolve_chain(chain_arg, cfg.chain.as_ref())?;
            let alpha = alpha.or(cfg.alpha).ok_or_else(|| Error::InvalidParameter("--alpha is required".into()))?;
            let config = SimConfig::new(chain.clone(), alpha, trials.or(cfg.trials).unwrap_or(DEFAULT_TRIALS), need_seed()?)?
                .with_birth_cap(birth_cap.or(cfg.birth_cap).unwrap_or(DEFAULT_BIRTH_CAP))
                .with_max_steps(max_steps.or(cfg.max_steps).unwrap_or(DEFAULT_MAX_STEPS))
                .with_time_horizon(horizon.or(cfg.horizon).unwrap_or(DEFAULT_TIME_HORIZON))
                .with_workers(workers);
            let emit = *emit_trials || cfg.emit_trials.unwrap_or(false);
            if emit && out.is_none() {
                return Err(Error::InvalidParameter("--emit-trials needs --out".into()));
            }
            log::info!("{} trials on {} workers", config.trials, workers);
            let outcomes = run_trials(&config)?;
            let estimate = SurvivalEstimate::from_outcomes(&outcomes, config.birth_cap);
            let json = to_json(&estimate)?;
            let mut files = vec![("survival.json".into(), with_newline(&json))];
            if emit {
                let mut lines = Vec::new();
                for o in &outcomes {
                    lines.extend(serde_json::to_vec(o)?);
                    lines.push(b'\n');
                }
                files.push(("trials.jsonl".into(), lines));
            }
            chain_used = Some(chain);
            Report { json, files }
        }
        Command::Phase { p_range, alpha_range, grid_steps, p_steps, alpha_steps, trials_per_cell, birth_cap } => {
            let steps = grid_steps.or(cfg.grid_steps).unwrap_or(DEFAULT_GRID_STEPS);
            let pair = |a: Option<(f64, f64)>, c: Option<[f64; 2]>, d| a.or(c.map(|[l, h]| (l, h))).unwrap_or(d);
            let mut spec = PhaseSpec::new(pair(*p_range, cfg.p_range, (0.05, 0.95)), pair(*alpha_range, cfg.alpha_range, (0.5, 1.0)), steps);
            spec.p_steps = p_steps.or(cfg.p_steps).unwrap_or(steps);
            spec.alpha_steps = alpha_steps.or(cfg.alpha_steps).unwrap_or(steps);
            spec.n_max = common.n_max.or(cfg.n_max).unwrap_or(spec.n_max);
            spec.trials_per_cell = trials_per_cell.or(cfg.trials_per_cell).unwrap_or(0);
            spec.birth_cap = birth_cap.or(cfg.birth_cap).unwrap_or(DEFAULT_BIRTH_CAP);
            spec.seed = seed;
            spec.workers = workers;
            if spec.trials_per_cell > 0 {
                need_seed()?;
            }
            log::info!("phase grid {} x {}", spec.p_steps, spec.alpha_steps);
            let grid = phase_sweep(&spec)?;
            let json = to_json(&grid)?;
            let mut csv = Vec::new();
            grid.write_csv(&mut csv)?;
            n_max_used = Some(spec.n_max);
            Report { files: vec![("phase.csv".into(), csv), ("phase.json".into(), with_newline(&json))], json }
        }
        Command::Offspring { alpha, samples, max_steps } => {
            let chain = resolve_chain(chain_arg, cfg.chain.as_ref())?;
            let alpha = alpha.or(cfg.alpha).ok_or_else(|| Error::InvalidParameter("--alpha is required".into()))?;
            let samples = samples.or(cfg.samples).unwrap_or(DEFAULT_SAMPLES);
            let max_steps = max_steps.or(cfg.max_steps).unwrap_or(DEFAULT_MAX_STEPS);
            let n_max = common.n_max.or(cfg.n_max).unwrap_or_else(|| default_n_max(&chain));
            let a = analyze(&chain, n_max, None)?;
            let b = mu_of_alpha(&a.series, &a.tail_p, alpha)?
                .first_return_gf
                .ok_or(Error::MissingFirstReturns)?;
            log::info!("{samples} offspring samples, b = {b}");
            let hist = sample_offspring_counts(&chain, alpha, samples, need_seed()?, max_steps)?;
            let histogram = hist
                .counts
                .iter()
                .map(|(&j, &count)| {
                    Ok(OffspringRow { j, count, empirical: count as f64 / samples as f64, geometric: offspring_pmf(b, j)? })
                })
                .collect::<Result<Vec<_>>>()?;
            let report = OffspringReport {
                chain: chain.clone(),
                alpha,
                b,
                samples,
                censored: hist.censored,
                mean: hist.mean(),
                geometric_mean: b / (1.0 - b),
                tv_distance: hist.tv_distance_geometric(b)?,
                histogram,
            };
            let json = to_json(&report)?;
            let mut csv = Vec::new();
            hist.write_csv(&mut csv)?;
            chain_used = Some(chain);
            n_max_used = Some(n_max);
            Report { files: vec![("offspring.csv".into(), csv), ("offspring.json".into(), with_newline(&json))], json }
        }
    };

    if let Some(dir) = out {
        fs::create_dir_all(&dir)?;
        for (name, bytes) in &report.files {
            fs::write(dir.join(name), bytes)?;
        }
        let manifest = RunManifest::new(argv, chain_used, n_max_used, seed, &report.files);
        fs::write(dir.join("manifest.json"), with_newline(&to_json(&manifest)?))?;
        log::info!("wrote {} files to {}", report.files.len() + 1, dir.display());
    }
    Ok(report)
}

fn with_newline(s: &str) -> Vec<u8> {
    let mut v = s.as_bytes().to_vec();
    v.push(b'\n');
    v
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(args: &[&str]) -> Cli {
        Cli::try_parse_from(std::iter::once("homing").chain(args.iter().copied())).unwrap()
    }

    #[test]
    fn ranges_parse() {
        assert_eq!(parse_range("0.1:0.9").unwrap(), (0.1, 0.9));
        assert!(parse_range("0.1").is_err());
        assert!(parse_range("a:b").is_err());
    }

    #[test]
    fn flags_after_subcommand() {
        let cli = parse(&["alpha-c", "--chain", r#"{"kind":"biased_walk_z","p":0.5}"#, "--n-max", "100"]);
        assert_eq!(cli.common.n_max, Some(100));
        assert!(matches!(cli.command, Command::AlphaC));
    }

    #[test]
    fn alpha_c_report() {
        let cli = parse(&["alpha-c", "--chain", r#"{"kind":"biased_walk_z","p":0.5}"#, "--n-max", "2000"]);
        let r = run(cli, &[]).unwrap();
        let v: serde_json::Value = serde_json::from_str(&r.json).unwrap();
        let ac = v["alpha_c"].as_f64().unwrap();
        assert!((ac - 3f64.sqrt() / 2.0).abs() < 1e-4);
    }

    #[test]
    fn simulate_requires_seed_and_alpha() {
        let chain = r#"{"kind":"biased_walk_z","p":0.5}"#;
        let e = run(parse(&["simulate", "--chain", chain, "--alpha", "0.5"]), &[]).unwrap_err();
        assert_eq!(e.exit_code(), 2);
        let e = run(parse(&["simulate", "--chain", chain, "--seed", "1"]), &[]).unwrap_err();
        assert_eq!(e.exit_code(), 2);
    }

    #[test]
    fn config_values_fill_missing_flags() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cfg.json");
        fs::write(&path, r#"{"chain": {"kind":"finite","rows":[[1.0]],"origin":0}, "alpha": 0.5, "seed": 3, "trials": 50, "alpha_range": [0.1, 0.2]}"#).unwrap();
        let cfg = path.to_str().unwrap();
        let r = run(parse(&["--config", cfg, "simulate", "--trials", "20"]), &[]).unwrap();
        let v: serde_json::Value = serde_json::from_str(&r.json).unwrap();
        assert_eq!(v["trials"], 20);
        assert!(ConfigFile::load(&path).is_ok());
        fs::write(&path, r#"{"bogus": 1}"#).unwrap();
        assert!(ConfigFile::load(&path).is_err());
    }
}
