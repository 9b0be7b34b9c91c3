//! Return-probability series `p[n] = P_O(X_n = O)` and first-return series `f[n]`.
//!
//! `p` comes from an exact dynamic program over the distribution of the
//! chain started at `O`; no mass is ever pruned. `f` follows from the renewal
//! identity `p[n] = sum_{k=1..n} f[k] p[n-k]`.

use std::io::Write;

use serde::Serialize;

use crate::chain::ChainSpec;
use crate::error::{Error, Result};
use crate::render::{ext_real, opt_ext_real, sig17};
use crate::tail::{require_target, SeriesTarget, TailKind, TailModel};

/// Largest lattice box (entries) the dynamic program will allocate.
pub const LATTICE_BUDGET: u128 = 100_000_000;

/// Allowed drift of total probability mass per step.
pub const MASS_TOL: f64 = 1e-9;

/// Negative first-return values above this are rounding noise and clamp silently.
pub const CLAMP_SILENT: f64 = 1e-12;

/// Negative first-return values below this mean the input series is inconsistent.
pub const CLAMP_LIMIT: f64 = 1e-9;

#[derive(Clone, Debug)]
pub struct ReturnSeries {
    chain: ChainSpec,
    p: Vec<f64>,
    // empty until first_return_inversion; otherwise f[0] = 0
    f: Vec<f64>,
}

impl ReturnSeries {
    /// Wraps externally computed return probabilities.
    pub fn from_return_probabilities(chain: ChainSpec, p: Vec<f64>) -> Result<Self> {
        if p.len() < 2 || p[0] != 1.0 {
            return Err(Error::InvalidParameter("series needs p[0] = 1 and n_max >= 1".into()));
        }
        if let Some(n) = p.iter().position(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::InvalidParameter(format!("p[{n}] = {} is not a probability", p[n])));
        }
        Ok(ReturnSeries { chain, p, f: Vec::new() })
    }

    pub fn chain(&self) -> &ChainSpec {
        &self.chain
    }

    pub fn n_max(&self) -> usize {
        self.p.len() - 1
    }

    pub fn p(&self) -> &[f64] {
        &self.p
    }

    /// First-return probabilities, indexed like `p` with `f[0] = 0`.
    pub fn f(&self) -> Option<&[f64]> {
        (!self.f.is_empty()).then_some(&self.f[..])
    }

    /// 2 when every odd-step return probability is zero, else 1.
    pub fn period(&self) -> usize {
        if self.p.iter().skip(1).step_by(2).all(|&v| v == 0.0) {
            2
        } else {
            1
        }
    }

    /// Writes `n,p_n,f_n` rows at 17 significant digits.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "n,p_n,f_n")?;
        for (n, p) in self.p.iter().enumerate() {
            let f = self.f.get(n).map(|&v| sig17(v)).unwrap_or_default();
            writeln!(w, "{n},{},{f}", sig17(*p))?;
        }
        Ok(())
    }
}

/// Exact `p[0..=n_max]` by evolving the point mass at the origin.
pub fn return_probabilities_dp(chain: &ChainSpec, n_max: usize) -> Result<ReturnSeries> {
    if n_max < 1 {
        return Err(Error::InvalidParameter("n_max must be at least 1".into()));
    }
    let p = match chain {
        ChainSpec::BiasedWalkZ { p } => Lattice::new(vec![*p], vec![1.0 - p], n_max)?.run(n_max)?,
        ChainSpec::SimpleWalkZd { d } => {
            let w = 1.0 / (2 * d) as f64;
            Lattice::new(vec![w; *d], vec![w; *d], n_max)?.run(n_max)?
        }
        ChainSpec::Finite(fc) => {
            let rows = fc.rows();
            let k = rows.len();
            let mut cur = vec![0.0; k];
            let mut next = vec![0.0; k];
            cur[fc.origin()] = 1.0;
            let mut p = Vec::with_capacity(n_max + 1);
            p.push(1.0);
            for step in 1..=n_max {
                next.iter_mut().for_each(|v| *v = 0.0);
                for (i, row) in rows.iter().enumerate() {
                    let m = cur[i];
                    if m == 0.0 {
                        continue;
                    }
                    for (j, &w) in row.iter().enumerate() {
                        next[j] += m * w;
                    }
                }
                check_mass(step, next.iter().sum())?;
                std::mem::swap(&mut cur, &mut next);
                p.push(cur[fc.origin()]);
            }
            p
        }
    };
    Ok(ReturnSeries { chain: chain.clone(), p, f: Vec::new() })
}

fn check_mass(step: usize, mass: f64) -> Result<()> {
    if (mass - 1.0).abs() > MASS_TOL {
        Err(Error::MassNotConserved { step, mass })
    } else {
        Ok(())
    }
}

/// Nearest-neighbour walk on a d-dimensional box large enough that nothing
/// reachable in `n_max` steps touches its boundary.
struct Lattice {
    up: Vec<f64>,
    down: Vec<f64>,
    half: i64,
    strides: Vec<usize>,
    len: usize,
}

impl Lattice {
    fn new(up: Vec<f64>, down: Vec<f64>, n_max: usize) -> Result<Self> {
        let d = up.len();
        let half = n_max as i64 + 1;
        let side = 2 * half as u128 + 1;
        let entries = side.checked_pow(d as u32).unwrap_or(u128::MAX);
        if entries > LATTICE_BUDGET {
            return Err(Error::BudgetExceeded { entries, limit: LATTICE_BUDGET });
        }
        let side = side as usize;
        let strides = (0..d).map(|a| side.pow((d - 1 - a) as u32)).collect();
        Ok(Lattice { up, down, half, strides, len: entries as usize })
    }

    fn origin(&self) -> usize {
        self.strides.iter().map(|s| s * self.half as usize).sum()
    }

    fn run(&self, n_max: usize) -> Result<Vec<f64>> {
        // after step n the mass lives on the L1 ball of radius n, on sites
        // whose coordinate sum has the parity of n; each buffer only ever
        // holds one parity, so stale entries are always overwritten
        let mut cur = vec![0.0; self.len];
        let mut next = vec![0.0; self.len];
        let o = self.origin();
        cur[o] = 1.0;
        let mut p = Vec::with_capacity(n_max + 1);
        p.push(1.0);
        for n in 1..=n_max {
            let mass = self.sweep(0, 0, n as i64, &cur, &mut next);
            check_mass(n, mass)?;
            std::mem::swap(&mut cur, &mut next);
            p.push(cur[o]);
        }
        Ok(p)
    }

    fn sweep(&self, level: usize, base: usize, radius: i64, cur: &[f64], next: &mut [f64]) -> f64 {
        let d = self.strides.len();
        let mut mass = 0.0;
        if level + 1 == d {
            let mut z = -radius;
            while z <= radius {
                let idx = base + (z + self.half) as usize;
                let mut v = 0.0;
                for a in 0..d {
                    let s = self.strides[a];
                    v += self.up[a] * cur[idx - s] + self.down[a] * cur[idx + s];
                }
                next[idx] = v;
                mass += v;
                z += 2;
            }
        } else {
            let s = self.strides[level];
            for x in -radius..=radius {
                let b = base + (x + self.half) as usize * s;
                mass += self.sweep(level + 1, b, radius - x.abs(), cur, next);
            }
        }
        mass
    }
}

/// Fills `f` from `p` by the renewal recursion, O(n_max^2).
pub fn first_return_inversion(mut series: ReturnSeries) -> Result<ReturnSeries> {
    let p = &series.p;
    let n_max = p.len() - 1;
    let mut f = vec![0.0; n_max + 1];
    for n in 1..=n_max {
        let conv: f64 = (1..n).map(|k| f[k] * p[n - k]).sum();
        let mut v = p[n] - conv;
        if v < 0.0 {
            if v < -CLAMP_LIMIT {
                return Err(Error::NegativeFirstReturn { n, value: v });
            }
            if v < -CLAMP_SILENT {
                log::warn!("clamping f[{n}] = {v:e} to zero");
            }
            v = 0.0;
        }
        f[n] = v;
    }
    series.f = f;
    Ok(series)
}

/// `|P_N(alpha) (1 - F_N(alpha)) - 1|` for the truncated generating functions.
pub fn renewal_residual(series: &ReturnSeries, alpha: f64) -> Result<f64> {
    let f = series.f().ok_or(Error::MissingFirstReturns)?;
    let gf = |c: &[f64]| c.iter().rev().fold(0.0, |acc, &v| acc * alpha + v);
    Ok((gf(series.p()) * (1.0 - gf(f)) - 1.0).abs())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BetaMethod {
    ExactFormula,
    SeriesTail,
    FiniteChain,
}

/// Estimate of the probability of ever returning to the origin.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BetaEstimate {
    pub lower_bound: f64,
    pub value: f64,
    pub uncertainty: f64,
    pub method: BetaMethod,
}

impl BetaEstimate {
    /// From the closed form when the chain has one.
    pub fn exact(chain: &ChainSpec) -> Option<Self> {
        chain.exact_return_beta().map(|b| BetaEstimate {
            lower_bound: b,
            value: b,
            // the formula is exact; leave room for its floating-point evaluation
            uncertainty: 4.0 * f64::EPSILON,
            method: BetaMethod::ExactFormula,
        })
    }
}

/// `beta` as the partial sum of `f` plus the fitted first-return tail.
pub fn beta_from_f(series: &ReturnSeries, tail: &TailModel) -> Result<BetaEstimate> {
    let f = series.f().ok_or(Error::MissingFirstReturns)?;
    require_target(tail, SeriesTarget::FirstReturns)?;
    let lower = f.iter().sum::<f64>().min(1.0);
    if series.chain().is_finite() {
        return Ok(BetaEstimate {
            lower_bound: lower,
            value: 1.0,
            uncertainty: 0.0,
            method: BetaMethod::FiniteChain,
        });
    }
    let value = (lower + tail.tail_mass).min(1.0);
    // beta always lies in [lower, 1]
    let hard = (value - lower).max(1.0 - value);
    let uncertainty = if tail.is_none() { hard } else { tail.uncertainty.min(hard) };
    Ok(BetaEstimate { lower_bound: lower, value, uncertainty, method: BetaMethod::SeriesTail })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Recurrence {
    Recurrent,
    Transient,
    Inconclusive,
}

/// Green sum `G = sum_{n >= 0} p[n]` with its recurrence verdict.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GreenSum {
    #[serde(rename = "G", serialize_with = "ext_real")]
    pub g: f64,
    #[serde(serialize_with = "ext_real")]
    pub uncertainty: f64,
    pub verdict: Recurrence,
    /// `1 - 1/G`, reported for transient verdicts.
    #[serde(serialize_with = "opt_ext_real")]
    pub beta_cross_check: Option<f64>,
    #[serde(serialize_with = "opt_ext_real")]
    pub beta_cross_check_uncertainty: Option<f64>,
}

/// Transient verdicts need the tail uncertainty below this fraction of `G`.
pub const GREEN_RELATIVE_TOL: f64 = 0.1;

pub fn green_sum(series: &ReturnSeries, tail: &TailModel) -> Result<GreenSum> {
    require_target(tail, SeriesTarget::Returns)?;
    let partial: f64 = series.p().iter().sum();
    let recurrent = GreenSum {
        g: f64::INFINITY,
        uncertainty: 0.0,
        verdict: Recurrence::Recurrent,
        beta_cross_check: None,
        beta_cross_check_uncertainty: None,
    };
    let divergent = match tail.kind {
        TailKind::PowerLaw { exponent, .. } => exponent <= 1.0,
        TailKind::Geometric { ratio, .. } => ratio >= 1.0,
        TailKind::None => false,
    };
    if series.chain().is_finite() || divergent {
        return Ok(recurrent);
    }
    let (g, uncertainty) = if tail.is_none() {
        let n = series.n_max();
        if series.p()[n / 2 + 1..].iter().all(|&v| v == 0.0) {
            (partial, 0.0)
        } else {
            (partial, f64::INFINITY)
        }
    } else {
        (partial + tail.tail_mass, tail.uncertainty)
    };
    if uncertainty < GREEN_RELATIVE_TOL * g {
        Ok(GreenSum {
            g,
            uncertainty,
            verdict: Recurrence::Transient,
            beta_cross_check: Some(1.0 - 1.0 / g),
            beta_cross_check_uncertainty: Some(uncertainty / (g * g)),
        })
    } else {
        Ok(GreenSum {
            g,
            uncertainty,
            verdict: Recurrence::Inconclusive,
            beta_cross_check: None,
            beta_cross_check_uncertainty: None,
        })
    }
}

/// Abel sums `sum_{n>=1} alpha^n p[n]` over a ladder of `alpha` in (0, 1).
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AbelTable {
    pub rows: Vec<(f64, f64)>,
    /// `sum_{n>=1} p[n]` plus the tail mass; infinite for recurrent chains.
    #[serde(serialize_with = "ext_real")]
    pub bound: f64,
    pub monotone: bool,
    pub bounded: bool,
}

pub fn abel_consistency(series: &ReturnSeries, alphas: &[f64], tail: &TailModel) -> Result<AbelTable> {
    require_target(tail, SeriesTarget::Returns)?;
    if let Some(a) = alphas.iter().find(|a| !(**a > 0.0 && **a < 1.0)) {
        return Err(Error::InvalidParameter(format!("alpha = {a} is not in (0, 1)")));
    }
    let p = series.p();
    let rows: Vec<(f64, f64)> = alphas
        .iter()
        .map(|&a| (a, p[1..].iter().rev().fold(0.0, |acc, &v| (acc + v) * a)))
        .collect();
    let bound = match green_sum(series, tail)? {
        GreenSum { verdict: Recurrence::Recurrent, .. } => f64::INFINITY,
        _ => p[1..].iter().sum::<f64>() + tail.tail_mass,
    };
    let mut sorted = rows.clone();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
    let monotone = sorted.windows(2).all(|w| w[0].1 <= w[1].1);
    let bounded = rows.iter().all(|r| r.1 <= bound);
    Ok(AbelTable { rows, bound, monotone, bounded })
}
