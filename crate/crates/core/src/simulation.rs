//! Monte Carlo simulation of the branching walk.
//!
//! Each individual starts at the origin. Before every step it dies with
//! probability `1 - alpha`; otherwise it moves according to the chain, and
//! each arrival at the origin gives birth to a new individual there.
//!
//! Populations are simulated in genealogy order: a queue of unborn-yet-to-run
//! individuals is drained one individual at a time. Survival of this
//! genealogy is the same event as survival of the population in real time,
//! and since every newborn starts at the origin the queue is just a counter.

use std::collections::BTreeMap;
use std::io::Write;

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::chain::ChainSpec;
use crate::criticality::offspring_pmf;
use crate::error::{Error, Result};
use crate::stream::{substream, DOMAIN_OFFSPRING, DOMAIN_POPULATION};

pub const DEFAULT_BIRTH_CAP: u64 = 10_000;
pub const DEFAULT_MAX_STEPS: u64 = 1_000_000;
pub const DEFAULT_TIME_HORIZON: u64 = 10_000_000_000;

/// Two-sided 95% normal quantile.
const Z95: f64 = 1.959_963_984_540_054;

#[derive(Clone, Debug, Serialize)]
pub struct SimConfig {
    pub chain: ChainSpec,
    pub alpha: f64,
    pub trials: u64,
    pub max_steps_per_individual: u64,
    /// Total births at which a trial is declared surviving.
    pub birth_cap: u64,
    /// Cumulative steps across a trial before it is censored.
    pub time_horizon: u64,
    pub seed: u64,
    #[serde(skip)]
    pub workers: usize,
}

impl SimConfig {
    pub fn new(chain: ChainSpec, alpha: f64, trials: u64, seed: u64) -> Result<Self> {
        let cfg = SimConfig {
            chain,
            alpha,
            trials,
            max_steps_per_individual: DEFAULT_MAX_STEPS,
            birth_cap: DEFAULT_BIRTH_CAP,
            time_horizon: DEFAULT_TIME_HORIZON,
            seed,
            workers: std::thread::available_parallelism().map_or(1, |n| n.get()),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_birth_cap(mut self, cap: u64) -> Self {
        self.birth_cap = cap;
        self
    }

    pub fn with_max_steps(mut self, steps: u64) -> Self {
        self.max_steps_per_individual = steps;
        self
    }

    pub fn with_time_horizon(mut self, steps: u64) -> Self {
        self.time_horizon = steps;
        self
    }

    pub fn with_workers(mut self, workers: usize) -> Self {
        self.workers = workers;
        self
    }

    pub fn validate(&self) -> Result<()> {
        check_alpha(self.alpha)?;
        let positive = [
            ("trials", self.trials),
            ("birth_cap", self.birth_cap),
            ("max_steps_per_individual", self.max_steps_per_individual),
            ("time_horizon", self.time_horizon),
            ("workers", self.workers as u64),
        ];
        for (name, v) in positive {
            if v == 0 {
                return Err(Error::InvalidParameter(format!("{name} must be at least 1")));
            }
        }
        Ok(())
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha <= 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("alpha = {alpha} is not in (0, 1]")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct IndividualRun {
    pub returns: u64,
    pub steps: u64,
    /// Still alive when the step limit was reached.
    pub censored: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Stop {
    Died,
    StepLimit,
    ReturnLimit,
}

fn walk<R: Rng + ?Sized>(
    chain: &ChainSpec,
    alpha: f64,
    max_steps: u64,
    max_returns: u64,
    rng: &mut R,
) -> (u64, u64, Stop) {
    match *chain {
        // same draws as the general path, on a bare integer position
        ChainSpec::BiasedWalkZ { p } => {
            let up = alpha * p;
            walk_with(0i64, alpha, max_steps, max_returns, rng, |x, u| *x += if u < up { 1 } else { -1 })
        }
        _ => walk_with(chain.origin(), alpha, max_steps, max_returns, rng, |s, u| {
            *s = chain.step_from_uniform(s, u / alpha)
        }),
    }
}

fn walk_with<S: Copy + PartialEq, R: Rng + ?Sized>(
    origin: S,
    alpha: f64,
    max_steps: u64,
    max_returns: u64,
    rng: &mut R,
    mut step: impl FnMut(&mut S, f64),
) -> (u64, u64, Stop) {
    let mut state = origin;
    let mut returns = 0;
    let mut steps = 0;
    if max_returns == 0 {
        return (0, 0, Stop::ReturnLimit);
    }
    loop {
        if steps >= max_steps {
            return (returns, steps, Stop::StepLimit);
        }
        // one draw decides death (u >= alpha) and the move (u < alpha)
        let u: f64 = rng.random();
        if u >= alpha {
            return (returns, steps, Stop::Died);
        }
        step(&mut state, u);
        steps += 1;
        if state == origin {
            returns += 1;
            if returns >= max_returns {
                return (returns, steps, Stop::ReturnLimit);
            }
        }
    }
}

/// Runs one individual from the origin until death or `max_steps`.
pub fn run_individual<R: Rng + ?Sized>(
    chain: &ChainSpec,
    alpha: f64,
    max_steps: u64,
    rng: &mut R,
) -> Result<IndividualRun> {
    check_alpha(alpha)?;
    let (returns, steps, stop) = walk(chain, alpha, max_steps, u64::MAX, rng);
    Ok(IndividualRun { returns, steps, censored: stop == Stop::StepLimit })
}

/// Empirical law of the number of children of one individual.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct OffspringHistogram {
    pub counts: BTreeMap<u64, u64>,
    pub samples: u64,
    /// Individuals cut off by the step limit; their partial counts are included.
    pub censored: u64,
}

impl OffspringHistogram {
    pub fn mean(&self) -> f64 {
        self.counts.iter().map(|(j, c)| (*j * *c) as f64).sum::<f64>() / self.samples as f64
    }

    /// Total-variation distance to the geometric law `(1 - b) b^j`.
    pub fn tv_distance_geometric(&self, b: f64) -> Result<f64> {
        let n = self.samples as f64;
        let top = self.counts.keys().next_back().copied().unwrap_or(0);
        let mut dist = 0.0;
        for j in 0..=top {
            let emp = self.counts.get(&j).copied().unwrap_or(0) as f64 / n;
            dist += (emp - offspring_pmf(b, j)?).abs();
        }
        // geometric mass beyond the largest observed count
        dist += b.powf(top as f64 + 1.0);
        Ok(0.5 * dist)
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "j,count")?;
        for (j, c) in &self.counts {
            writeln!(w, "{j},{c}")?;
        }
        Ok(())
    }
}

/// Draws `n` independent individuals and tabulates their return counts.
pub fn sample_offspring_counts(
    chain: &ChainSpec,
    alpha: f64,
    n: u64,
    seed: u64,
    max_steps: u64,
) -> Result<OffspringHistogram> {
    check_alpha(alpha)?;
    if n == 0 {
        return Err(Error::InvalidParameter("need at least one sample".into()));
    }
    let mut hist = OffspringHistogram { samples: n, ..Default::default() };
    for i in 0..n {
        let mut rng = substream(seed, DOMAIN_OFFSPRING, 0, i);
        let run = run_individual(chain, alpha, max_steps, &mut rng)?;
        *hist.counts.entry(run.returns).or_default() += 1;
        hist.censored += u64::from(run.censored);
    }
    Ok(hist)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum TrialStatus {
    Extinct { at_step: u64 },
    SurvivedByCap,
    CensoredAtHorizon { alive_count: u64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct TrialOutcome {
    pub trial: u64,
    #[serde(flatten)]
    pub status: TrialStatus,
    #[serde(rename = "births")]
    pub total_births: u64,
    /// Largest genealogy queue, counting the individual being run.
    #[serde(rename = "peak_pop")]
    pub peak_population: u64,
    #[serde(rename = "steps")]
    pub steps_executed: u64,
}

/// One trial; a pure function of `(config, trial_index)`.
pub fn simulate_population(config: &SimConfig, trial_index: u64) -> TrialOutcome {
    let mut pending: u64 = 1;
    let mut births: u64 = 0;
    let mut steps: u64 = 0;
    let mut peak: u64 = 1;
    let mut individual: u64 = 0;
    let done = |status, births, peak, steps| TrialOutcome {
        trial: trial_index,
        status,
        total_births: births,
        peak_population: peak,
        steps_executed: steps,
    };
    while pending > 0 {
        pending -= 1;
        let mut rng = substream(config.seed, DOMAIN_POPULATION, trial_index, individual);
        individual += 1;
        let step_budget = config.max_steps_per_individual.min(config.time_horizon - steps);
        let (returns, used, stop) =
            walk(&config.chain, config.alpha, step_budget, config.birth_cap - births, &mut rng);
        steps += used;
        births += returns;
        pending += returns;
        peak = peak.max(pending + 1);
        match stop {
            Stop::ReturnLimit => return done(TrialStatus::SurvivedByCap, births, peak, steps),
            // still alive: either the horizon or this individual's own limit
            Stop::StepLimit => {
                return done(
                    TrialStatus::CensoredAtHorizon { alive_count: pending + 1 },
                    births,
                    peak,
                    steps,
                )
            }
            Stop::Died => {}
        }
    }
    done(TrialStatus::Extinct { at_step: steps }, births, peak, steps)
}

/// Runs every trial on a pool of `config.workers` threads, in trial order.
pub fn run_trials(config: &SimConfig) -> Result<Vec<TrialOutcome>> {
    config.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.workers)
        .build()
        .map_err(|e| Error::InvalidParameter(format!("worker pool: {e}")))?;
    Ok(pool.install(|| {
        (0..config.trials)
            .into_par_iter()
            .map(|t| simulate_population(config, t))
            .collect()
    }))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SurvivalEstimate {
    pub trials: u64,
    pub survived: u64,
    pub extinct: u64,
    pub censored: u64,
    pub survived_fraction: f64,
    pub censored_fraction: f64,
    /// Wilson score interval at 95% for `survived_fraction`.
    pub wilson_interval: [f64; 2],
    pub birth_cap: u64,
}

impl SurvivalEstimate {
    pub fn from_outcomes(outcomes: &[TrialOutcome], birth_cap: u64) -> Self {
        let mut survived = 0;
        let mut extinct = 0;
        let mut censored = 0;
        for o in outcomes {
            match o.status {
                TrialStatus::SurvivedByCap => survived += 1,
                TrialStatus::Extinct { .. } => extinct += 1,
                TrialStatus::CensoredAtHorizon { .. } => censored += 1,
            }
        }
        let n = outcomes.len() as u64;
        SurvivalEstimate {
            trials: n,
            survived,
            extinct,
            censored,
            survived_fraction: survived as f64 / n as f64,
            censored_fraction: censored as f64 / n as f64,
            wilson_interval: wilson_interval(survived, n),
            birth_cap,
        }
    }

    pub fn half_width(&self) -> f64 {
        0.5 * (self.wilson_interval[1] - self.wilson_interval[0])
    }
}

pub fn wilson_interval(successes: u64, n: u64) -> [f64; 2] {
    let n = n as f64;
    let phat = successes as f64 / n;
    let z2 = Z95 * Z95;
    let denom = 1.0 + z2 / n;
    let centre = (phat + z2 / (2.0 * n)) / denom;
    let half = Z95 * (phat * (1.0 - phat) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    let lo = if successes == 0 { 0.0 } else { (centre - half).max(0.0) };
    let hi = if successes as f64 == n { 1.0 } else { (centre + half).min(1.0) };
    [lo, hi]
}

pub fn estimate_survival(config: &SimConfig) -> Result<SurvivalEstimate> {
    Ok(SurvivalEstimate::from_outcomes(&run_trials(config)?, config.birth_cap))
}
