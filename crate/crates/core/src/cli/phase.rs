//! (p, alpha) phase diagram for the walk on the integers.

use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use crate::analysis::{analyze, default_n_max};
use crate::chain::make_biased_walk;
use crate::criticality::{mu_of_alpha, Regime};
use crate::error::{Error, Result};
use crate::render::{ext_real, sig17};
use crate::simulation::{estimate_survival, SimConfig, SurvivalEstimate, DEFAULT_BIRTH_CAP};
use crate::stream::derive_seed;

#[derive(Clone, Debug)]
pub struct PhaseSpec {
    pub p_range: (f64, f64),
    pub alpha_range: (f64, f64),
    pub p_steps: usize,
    pub alpha_steps: usize,
    pub n_max: usize,
    /// Monte Carlo trials per cell; 0 skips simulation.
    pub trials_per_cell: u64,
    pub seed: Option<u64>,
    pub birth_cap: u64,
    pub workers: usize,
}

impl PhaseSpec {
    pub fn new(p_range: (f64, f64), alpha_range: (f64, f64), steps: usize) -> Self {
        PhaseSpec {
            p_range,
            alpha_range,
            p_steps: steps,
            alpha_steps: steps,
            n_max: default_n_max(&crate::chain::ChainSpec::BiasedWalkZ { p: 0.5 }),
            trials_per_cell: 0,
            seed: None,
            birth_cap: DEFAULT_BIRTH_CAP,
            workers: 1,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct PhaseCell {
    pub p: f64,
    pub alpha: f64,
    pub beta: f64,
    pub regime: Regime,
    pub marginal: bool,
    pub alpha_c: Option<f64>,
    #[serde(serialize_with = "ext_real")]
    pub mu: f64,
    /// `alpha > alpha_c` in the transition regime.
    pub survival_possible: bool,
    pub mc_survival: Option<SurvivalEstimate>,
}

#[derive(Clone, Debug, Serialize)]
pub struct PhaseGrid {
    pub p_values: Vec<f64>,
    pub alpha_values: Vec<f64>,
    /// `cells[i][j]` is `(p_values[i], alpha_values[j])`.
    pub cells: Vec<Vec<PhaseCell>>,
}

/// Evenly spaced points, snapped to 12 decimals so that grid values such as
/// 0.25 are represented exactly.
pub fn grid(range: (f64, f64), steps: usize) -> Vec<f64> {
    let (lo, hi) = range;
    (0..steps)
        .map(|i| {
            let x = lo + (hi - lo) * i as f64 / (steps - 1) as f64;
            (x * 1e12).round() / 1e12
        })
        .collect()
}

pub fn phase_sweep(spec: &PhaseSpec) -> Result<PhaseGrid> {
    for (name, (lo, hi)) in [("p", spec.p_range), ("alpha", spec.alpha_range)] {
        if !(0.0..=1.0).contains(&lo) || !(0.0..=1.0).contains(&hi) || lo > hi {
            return Err(Error::InvalidParameter(format!("{name} range [{lo}, {hi}] is not inside [0, 1]")));
        }
    }
    if spec.p_steps < 2 || spec.alpha_steps < 2 {
        return Err(Error::InvalidParameter("grid needs at least 2 steps per axis".into()));
    }
    if spec.trials_per_cell > 0 && spec.seed.is_none() {
        return Err(Error::InvalidParameter("simulated cells need a seed".into()));
    }
    let p_values = grid(spec.p_range, spec.p_steps);
    let alpha_values = grid(spec.alpha_range, spec.alpha_steps);

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(spec.workers.max(1))
        .build()
        .map_err(|e| Error::InvalidParameter(format!("worker pool: {e}")))?;
    let rows: Result<Vec<Vec<PhaseCell>>> = pool.install(|| {
        p_values
            .par_iter()
            .map(|&p| analytic_row(p, &alpha_values, spec.n_max))
            .collect()
    });
    let mut cells = rows?;

    if spec.trials_per_cell > 0 {
        let seed = spec.seed.unwrap_or_default();
        for (i, row) in cells.iter_mut().enumerate() {
            for (j, cell) in row.iter_mut().enumerate() {
                if cell.alpha == 0.0 {
                    continue;
                }
                let cfg = SimConfig::new(
                    make_biased_walk(cell.p)?,
                    cell.alpha,
                    spec.trials_per_cell,
                    derive_seed(seed, (i * alpha_values.len() + j) as u64),
                )?
                .with_birth_cap(spec.birth_cap)
                .with_workers(spec.workers.max(1));
                cell.mc_survival = Some(estimate_survival(&cfg)?);
            }
        }
    }
    Ok(PhaseGrid { p_values, alpha_values, cells })
}

fn analytic_row(p: f64, alphas: &[f64], n_max: usize) -> Result<Vec<PhaseCell>> {
    let chain = make_biased_walk(p)?;
    let a = analyze(&chain, n_max, None)?;
    let report = a.criticality()?;
    alphas
        .iter()
        .map(|&alpha| {
            let mu = if alpha == 0.0 { 0.0 } else { mu_of_alpha(&a.series, &a.tail_p, alpha)?.mu };
            Ok(PhaseCell {
                p,
                alpha,
                beta: a.beta.value,
                regime: report.regime,
                marginal: report.marginal,
                alpha_c: report.alpha_c,
                mu,
                survival_possible: report.alpha_c.is_some_and(|ac| alpha > ac),
                mc_survival: None,
            })
        })
        .collect()
}

impl PhaseGrid {
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(
            w,
            "p,alpha,beta,regime,marginal,alpha_c,mu,survival_possible,mc_survived_fraction,mc_lo,mc_hi"
        )?;
        let opt = |x: Option<f64>| x.map(sig17).unwrap_or_default();
        for c in self.cells.iter().flatten() {
            let regime = match c.regime {
                Regime::NoSurvival => "no_survival",
                Regime::Transition => "transition",
            };
            writeln!(
                w,
                "{},{},{},{regime},{},{},{},{},{},{},{}",
                sig17(c.p),
                sig17(c.alpha),
                sig17(c.beta),
                c.marginal,
                opt(c.alpha_c),
                sig17(c.mu),
                c.survival_possible,
                opt(c.mc_survival.map(|m| m.survived_fraction)),
                opt(c.mc_survival.map(|m| m.wilson_interval[0])),
                opt(c.mc_survival.map(|m| m.wilson_interval[1])),
            )?;
        }
        Ok(())
    }
}
