//! Tail models for truncated return and first-return series.
//!
//! A series is known exactly up to `n_max`. Its remainder is estimated by
//! fitting one of two log-linear families to a window of the known terms and
//! summing the fitted model beyond `n_max`:
//!
//! * power law, `v[period * m] ~ C * m^(-gamma)`, fitted on log-log points;
//! * geometric, `v[period * m] ~ C * r^m`, fitted on log-linear points.
//!
//! `period` is 2 when every odd-index return probability vanishes (bipartite
//! lattices) and 1 otherwise; the fit only sees the terms that can be nonzero.

use std::ops::RangeInclusive;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::render::ext_real;
use crate::series::ReturnSeries;

/// Fewest fitted terms accepted by [`fit_tail`].
pub const MIN_FIT_POINTS: usize = 8;

/// Relative model-error floor added to every fitted tail mass.
pub const MODEL_ERROR_FLOOR: f64 = 0.05;

// values below this are treated as underflowed when choosing a fit window
const TINY: f64 = 1e-250;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SeriesTarget {
    /// The n-step return probabilities `p[n]`.
    Returns,
    /// The first-return probabilities `f[n]`.
    FirstReturns,
}

impl SeriesTarget {
    fn name(self) -> &'static str {
        match self {
            SeriesTarget::Returns => "returns",
            SeriesTarget::FirstReturns => "first_returns",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TailFamily {
    PowerLaw,
    Geometric,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TailKind {
    None,
    PowerLaw { exponent: f64, coefficient: f64 },
    Geometric { ratio: f64, coefficient: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TailModel {
    #[serde(flatten)]
    pub kind: TailKind,
    pub target: SeriesTarget,
    pub period: usize,
    pub fit_window: Option<[usize; 2]>,
    pub n_max: usize,
    /// Estimated sum of the series beyond `n_max`.
    #[serde(serialize_with = "ext_real")]
    pub tail_mass: f64,
    /// RMS residual of the log-space fit.
    pub quality: f64,
    /// Heuristic error bound on `tail_mass`.
    #[serde(serialize_with = "ext_real")]
    pub uncertainty: f64,
}

impl TailModel {
    pub fn none(target: SeriesTarget, n_max: usize, period: usize) -> Self {
        TailModel {
            kind: TailKind::None,
            target,
            period,
            fit_window: None,
            n_max,
            tail_mass: 0.0,
            quality: 0.0,
            uncertainty: 0.0,
        }
    }

    pub fn is_none(&self) -> bool {
        matches!(self.kind, TailKind::None)
    }

    /// Fitted value at reduced index `m` (series index `period * m`).
    fn term(&self, m: f64) -> f64 {
        match self.kind {
            TailKind::None => 0.0,
            TailKind::PowerLaw { exponent, coefficient } => coefficient * m.powf(-exponent),
            TailKind::Geometric { ratio, coefficient } => coefficient * ratio.powf(m),
        }
    }

    /// Last reduced index covered by the data.
    fn last_known(&self) -> u64 {
        (self.n_max / self.period) as u64
    }

    /// `sum_{n > n_max} alpha^n v[n]` under the fitted model, for `0 < alpha <= 1`.
    pub fn discounted_mass(&self, alpha: f64) -> f64 {
        if alpha >= 1.0 {
            return self.tail_mass;
        }
        let x = alpha.powi(self.period as i32);
        let first = self.last_known() + 1;
        match self.kind {
            TailKind::None => 0.0,
            TailKind::Geometric { ratio, coefficient } => {
                let q = ratio * x;
                if q >= 1.0 {
                    f64::INFINITY
                } else {
                    coefficient * q.powf(first as f64) / (1.0 - q)
                }
            }
            TailKind::PowerLaw { exponent, .. } => {
                const MAX_TERMS: u64 = 10_000_000;
                let mut acc = 0.0;
                let mut weight = x.powf(first as f64);
                let mut m = first;
                while m < first + MAX_TERMS {
                    let t = weight * self.term(m as f64);
                    acc += t;
                    if t <= 1e-17 * acc || t == 0.0 {
                        return acc;
                    }
                    weight *= x;
                    m += 1;
                }
                // beyond the cap, bound the discount by its value at the cap
                if exponent > 1.0 {
                    acc + weight * self.term(1.0) * power_tail_sum(m, exponent)
                } else {
                    acc + weight * self.term(m as f64) / (1.0 - x)
                }
            }
        }
    }
}

/// `sum_{m >= start} m^(-gamma)` for `gamma > 1` and `start >= 1`.
///
/// The first few terms are summed directly, the rest by Euler-Maclaurin with
/// three Bernoulli corrections (relative error well below 1e-12 once the
/// integral starts at 64 or more).
pub fn power_tail_sum(start: u64, gamma: f64) -> f64 {
    if gamma <= 1.0 {
        return f64::INFINITY;
    }
    let start = start.max(1);
    let direct_until = start.max(64);
    let mut acc = 0.0;
    for m in start..direct_until {
        acc += (m as f64).powf(-gamma);
    }
    let a = direct_until as f64;
    let g = gamma;
    let f = a.powf(-g);
    acc + a.powf(1.0 - g) / (g - 1.0) + f / 2.0 + g * f / (12.0 * a)
        - g * (g + 1.0) * (g + 2.0) * f / (720.0 * a.powi(3))
        + g * (g + 1.0) * (g + 2.0) * (g + 3.0) * (g + 4.0) * f / (30240.0 * a.powi(5))
}

struct LineFit {
    slope: f64,
    intercept: f64,
    rms: f64,
}

fn least_squares(xs: &[f64], ys: &[f64]) -> LineFit {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rms = (xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum::<f64>()
        / n)
        .sqrt();
    LineFit { slope, intercept, rms }
}

fn fit_kind(family: TailFamily, points: &[(f64, f64)]) -> (TailKind, f64) {
    let xs: Vec<f64> = points
        .iter()
        .map(|(m, _)| match family {
            TailFamily::PowerLaw => m.ln(),
            TailFamily::Geometric => *m,
        })
        .collect();
    let ys: Vec<f64> = points.iter().map(|(_, v)| v.ln()).collect();
    let line = least_squares(&xs, &ys);
    let coefficient = line.intercept.exp();
    let kind = match family {
        TailFamily::PowerLaw => TailKind::PowerLaw { exponent: -line.slope, coefficient },
        TailFamily::Geometric => TailKind::Geometric { ratio: line.slope.exp(), coefficient },
    };
    (kind, line.rms)
}

fn mass_beyond(kind: TailKind, first: u64) -> f64 {
    match kind {
        TailKind::None => 0.0,
        TailKind::PowerLaw { exponent, coefficient } => coefficient * power_tail_sum(first, exponent),
        TailKind::Geometric { ratio, coefficient } => {
            if ratio >= 1.0 {
                f64::INFINITY
            } else {
                coefficient * ratio.powf(first as f64) / (1.0 - ratio)
            }
        }
    }
}

fn target_values(series: &ReturnSeries, target: SeriesTarget) -> Result<&[f64]> {
    match target {
        SeriesTarget::Returns => Ok(series.p()),
        SeriesTarget::FirstReturns => series.f().ok_or(Error::MissingFirstReturns),
    }
}

/// Fits a tail model to `target` over the series indices in `window`.
pub fn fit_tail(
    series: &ReturnSeries,
    target: SeriesTarget,
    family: TailFamily,
    window: RangeInclusive<usize>,
) -> Result<TailModel> {
    let values = target_values(series, target)?;
    let n_max = series.n_max();
    let (lo, hi) = (*window.start(), *window.end());
    if lo < 1 || hi > n_max || lo > hi {
        return Err(Error::InvalidParameter(format!(
            "fit window [{lo}, {hi}] is not inside 1..={n_max}"
        )));
    }
    let period = series.period();
    let indices: Vec<usize> = (lo..=hi).filter(|n| n % period == 0).collect();
    if indices.len() < MIN_FIT_POINTS {
        return Err(Error::InsufficientData { found: indices.len(), needed: MIN_FIT_POINTS });
    }
    if indices.iter().any(|&n| values[n] <= 0.0 || !values[n].is_finite()) {
        return Err(Error::DegenerateFit);
    }
    let points: Vec<(f64, f64)> =
        indices.iter().map(|&n| ((n / period) as f64, values[n])).collect();

    let first = (n_max / period) as u64 + 1;
    let (kind, quality) = fit_kind(family, &points);
    let tail_mass = mass_beyond(kind, first);

    // refit on the upper half of the window; the disagreement measures how far
    // the asymptotic regime is from settled
    let upper = &points[points.len() / 2..];
    let spread = if upper.len() >= 4 {
        let (k2, _) = fit_kind(family, upper);
        let m2 = mass_beyond(k2, first);
        if tail_mass.is_infinite() || m2.is_infinite() {
            f64::INFINITY
        } else {
            (tail_mass - m2).abs()
        }
    } else {
        0.0
    };

    Ok(TailModel {
        kind,
        target,
        period,
        fit_window: Some([lo, hi]),
        n_max,
        tail_mass,
        quality,
        uncertainty: spread + MODEL_ERROR_FLOOR * tail_mass,
    })
}

/// Upper half of the range of indices whose values have not underflowed.
pub fn auto_window(series: &ReturnSeries, target: SeriesTarget) -> Option<RangeInclusive<usize>> {
    let values = target_values(series, target).ok()?;
    let period = series.period();
    let last = (1..values.len())
        .rev()
        .find(|&n| n % period == 0 && values[n] > TINY)?;
    let start = (last / 2).max(1);
    let count = (start..=last).filter(|n| n % period == 0).count();
    (count >= MIN_FIT_POINTS).then_some(start..=last)
}

/// Picks the better-fitting family over [`auto_window`].
///
/// Finite chains, and series where no window can be fitted, get
/// [`TailKind::None`].
pub fn fit_tail_auto(series: &ReturnSeries, target: SeriesTarget) -> TailModel {
    let none = TailModel::none(target, series.n_max(), series.period());
    if series.chain().is_finite() {
        return none;
    }
    let Some(window) = auto_window(series, target) else {
        return none;
    };
    [TailFamily::PowerLaw, TailFamily::Geometric]
        .into_iter()
        .filter_map(|fam| fit_tail(series, target, fam, window.clone()).ok())
        .min_by(|a, b| a.quality.total_cmp(&b.quality))
        .unwrap_or(none)
}

pub(crate) fn require_target(tail: &TailModel, expected: SeriesTarget) -> Result<()> {
    if tail.target == expected || tail.is_none() {
        Ok(())
    } else {
        Err(Error::TailTargetMismatch { found: tail.target.name(), expected: expected.name() })
    }
}
