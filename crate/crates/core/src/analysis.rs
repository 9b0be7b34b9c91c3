//! One-call analysis of a chain: series, tails, beta and Green sum.

use serde::Serialize;

use crate::chain::ChainSpec;
use crate::criticality::{criticality_report, CriticalityReport};
use crate::error::Result;
use crate::series::{
    beta_from_f, first_return_inversion, green_sum, return_probabilities_dp, BetaEstimate, GreenSum,
    ReturnSeries,
};
use crate::tail::{auto_window, fit_tail, fit_tail_auto, SeriesTarget, TailFamily, TailModel};

/// Series length used when the caller does not choose one.
pub fn default_n_max(chain: &ChainSpec) -> usize {
    match chain.dimension() {
        Some(1) | None => 2000,
        Some(2) => 400,
        Some(3) => 60,
        Some(_) => 40,
    }
}

#[derive(Clone, Debug)]
pub struct ChainAnalysis {
    pub series: ReturnSeries,
    pub tail_p: TailModel,
    pub tail_f: TailModel,
    /// Estimate from the first-return series and its tail.
    pub beta_series: BetaEstimate,
    /// Closed form when known, otherwise `beta_series`.
    pub beta: BetaEstimate,
    pub green: GreenSum,
}

/// Runs the dynamic program, inverts, fits both tails and estimates beta.
///
/// `family` forces the tail family for both series; `None` picks the better fit.
pub fn analyze(chain: &ChainSpec, n_max: usize, family: Option<TailFamily>) -> Result<ChainAnalysis> {
    let series = first_return_inversion(return_probabilities_dp(chain, n_max)?)?;
    let fit = |target| match family {
        None => fit_tail_auto(&series, target),
        Some(fam) => auto_window(&series, target)
            .filter(|_| !chain.is_finite())
            .and_then(|w| fit_tail(&series, target, fam, w).ok())
            .unwrap_or_else(|| TailModel::none(target, series.n_max(), series.period())),
    };
    let tail_p = fit(SeriesTarget::Returns);
    let tail_f = fit(SeriesTarget::FirstReturns);
    let beta_series = beta_from_f(&series, &tail_f)?;
    let beta = BetaEstimate::exact(chain).unwrap_or(beta_series);
    let green = green_sum(&series, &tail_p)?;
    Ok(ChainAnalysis { series, tail_p, tail_f, beta_series, beta, green })
}

impl ChainAnalysis {
    pub fn criticality(&self) -> Result<CriticalityReport> {
        criticality_report(&self.series, &self.tail_p, &self.beta)
    }

    pub fn summary(&self) -> SeriesSummary {
        SeriesSummary {
            chain: self.series.chain().clone(),
            n_max: self.series.n_max(),
            beta: self.beta_series,
            exact_beta: self.series.chain().exact_return_beta(),
            green: self.green,
            tail_f: self.tail_f.clone(),
            tail_p: self.tail_p.clone(),
        }
    }
}

/// JSON sidecar of a series export.
#[derive(Clone, Debug, Serialize)]
pub struct SeriesSummary {
    pub chain: ChainSpec,
    pub n_max: usize,
    #[serde(flatten)]
    pub beta: BetaEstimate,
    pub exact_beta: Option<f64>,
    #[serde(flatten)]
    pub green: GreenSum,
    pub tail_f: TailModel,
    pub tail_p: TailModel,
}
