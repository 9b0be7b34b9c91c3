//! Survival of a branching Markov chain that reproduces on returns to its origin.
//!
//! An individual walks on a chain started at the origin. Before each step it
//! dies with probability `1 - alpha`; every visit to the origin produces one
//! child, which starts its own walk there. With `beta` the probability of
//! ever returning, the population can survive iff `beta > 1/2`, and then
//! exactly for `alpha` above a critical `alpha_c`.
//!
//! The crate computes return series exactly, fits their tails, solves for
//! `alpha_c`, and checks the picture by reproducible Monte Carlo.
//!
//! ```
//! use homing::{analyze, make_biased_walk};
//!
//! let walk = make_biased_walk(0.5).unwrap();
//! let a = analyze(&walk, 2000, None).unwrap();
//! let alpha_c = a.criticality().unwrap().alpha_c.unwrap();
//! assert!((alpha_c - 3f64.sqrt() / 2.0).abs() < 1e-4);
//! ```

pub mod analysis;
pub mod chain;
pub mod cli;
pub mod criticality;
pub mod error;
pub mod render;
pub mod series;
pub mod simulation;
pub mod stream;
pub mod tail;

pub use analysis::{analyze, default_n_max, ChainAnalysis, SeriesSummary};
pub use chain::{chain_from_json, make_biased_walk, make_finite, make_simple_walk, ChainSpec, State};
pub use cli::phase::{phase_sweep, PhaseCell, PhaseGrid, PhaseSpec};
pub use criticality::{
    alpha_critical, classify, criticality_report, extinction_probability, mu_at_one, mu_of_alpha, offspring_pmf,
    CriticalityReport, Regime,
};
pub use error::{Error, Result};
pub use series::{
    abel_consistency, beta_from_f, first_return_inversion, green_sum, renewal_residual, return_probabilities_dp,
    BetaEstimate, GreenSum, Recurrence, ReturnSeries,
};
pub use simulation::{estimate_survival, run_trials, sample_offspring_counts, SimConfig, SurvivalEstimate};
pub use tail::{fit_tail, fit_tail_auto, SeriesTarget, TailFamily, TailModel};
