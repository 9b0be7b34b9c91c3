//! Mean offspring `mu(alpha)`, the survival dichotomy and the critical death parameter.
//!
//! An individual dies before each step with probability `1 - alpha` and gives
//! birth on every return to the origin. Counting children per individual
//! gives a Galton-Watson genealogy whose mean is
//! `mu(alpha) = sum_{n>=1} alpha^n p[n]`. Each return before death is an
//! independent trial with success probability `F(alpha) = sum_n alpha^n f[n]`,
//! so the offspring law is geometric with parameter `b = F(alpha)`:
//! `P(j children) = (1 - b) b^j`, and `mu = b / (1 - b)`.
//!
//! The population survives with positive probability iff `mu(alpha) > 1`.
//! Since `mu` is increasing with `mu(1) = beta / (1 - beta)`, this happens
//! for some `alpha` iff `beta > 1/2`, and then exactly for `alpha > alpha_c`
//! where `mu(alpha_c) = 1`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::render::{ext_real, opt_ext_real};
use crate::series::{BetaEstimate, ReturnSeries};
use crate::tail::{require_target, SeriesTarget, TailModel};

/// Lower end of the initial bisection bracket.
pub const ALPHA_FLOOR: f64 = 1e-6;

/// Bisection stops once the bracket is narrower than this.
pub const BISECTION_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GenFunEval {
    pub alpha: f64,
    #[serde(serialize_with = "ext_real")]
    pub mu: f64,
    /// `F(alpha)`, when the first-return series is available.
    pub first_return_gf: Option<f64>,
    /// Bound on the truncation and rounding error carried by `mu` and by
    /// `F / (1 - F)`.
    #[serde(serialize_with = "ext_real")]
    pub truncation_bound: f64,
}

fn horner_from_one(coeffs: &[f64], alpha: f64) -> f64 {
    coeffs[1..].iter().rev().fold(0.0, |acc, &v| (acc + v) * alpha)
}

/// Evaluates `mu(alpha)` from the series and its `p` tail model.
///
/// At `alpha = 1` on a recurrent chain the result is `+inf`.
pub fn mu_of_alpha(series: &ReturnSeries, tail: &TailModel, alpha: f64) -> Result<GenFunEval> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::InvalidParameter(format!("alpha = {alpha} is not in (0, 1]")));
    }
    require_target(tail, SeriesTarget::Returns)?;
    let p = series.p();
    let n_max = series.n_max();
    let partial = horner_from_one(p, alpha);
    let rounding = n_max as f64 * f64::EPSILON;

    let (mu, mut bound) = if alpha == 1.0 {
        let tail_settled = p[n_max / 2 + 1..].iter().all(|&v| v == 0.0);
        if series.chain().is_finite() || tail.tail_mass.is_infinite() {
            (f64::INFINITY, 0.0)
        } else if tail.is_none() {
            (partial, if tail_settled { 0.0 } else { f64::INFINITY })
        } else {
            (partial + tail.tail_mass, tail.uncertainty)
        }
    } else {
        let extrapolated = tail.discounted_mass(alpha);
        // p[n] <= 1 bounds the true remainder by alpha^(N+1) / (1 - alpha)
        let hard = alpha.powf(n_max as f64 + 1.0) / (1.0 - alpha);
        let mut b = hard.max(extrapolated);
        if !tail.is_none() && tail.tail_mass.is_finite() {
            b = b.min(tail.uncertainty);
        }
        (partial + extrapolated, b)
    };
    if mu.is_finite() {
        bound += rounding * mu;
    }

    let first_return_gf = series.f().map(|f| {
        let fsum = horner_from_one(f, alpha);
        let missing = (1.0 - f.iter().sum::<f64>()).max(0.0);
        let f_bound = alpha.powf(n_max as f64 + 1.0) * missing + rounding;
        if fsum < 1.0 {
            bound += f_bound / (1.0 - fsum).powi(2);
        }
        fsum
    });

    Ok(GenFunEval { alpha, mu, first_return_gf, truncation_bound: bound })
}

/// `mu(1) = beta / (1 - beta)`, infinite at `beta = 1`.
pub fn mu_at_one(beta: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&beta) {
        return Err(Error::InvalidParameter(format!("beta = {beta} is not a probability")));
    }
    Ok(if beta == 1.0 { f64::INFINITY } else { beta / (1.0 - beta) })
}

fn check_offspring_parameter(b: f64) -> Result<()> {
    if b == 1.0 {
        Err(Error::ImproperOffspringLaw(b))
    } else if !(0.0..1.0).contains(&b) {
        Err(Error::InvalidParameter(format!("b = {b} is not in [0, 1)")))
    } else {
        Ok(())
    }
}

/// Geometric offspring law `(1 - b) b^j`.
pub fn offspring_pmf(b: f64, j: u64) -> Result<f64> {
    check_offspring_parameter(b)?;
    Ok((1.0 - b) * b.powf(j as f64))
}

/// Smallest fixed point of `s -> (1 - b) / (1 - b s)` on [0, 1].
pub fn extinction_probability(b: f64) -> Result<f64> {
    check_offspring_parameter(b)?;
    Ok(if b <= 0.5 { 1.0 } else { (1.0 - b) / b })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    /// Extinction for every `alpha`.
    NoSurvival,
    /// Survival possible exactly for `alpha > alpha_c`.
    Transition,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Classification {
    pub regime: Regime,
    /// `1/2` lies within the uncertainty of `beta`.
    pub marginal: bool,
}

pub fn classify(beta: &BetaEstimate) -> Classification {
    let regime = if beta.value > 0.5 { Regime::Transition } else { Regime::NoSurvival };
    Classification { regime, marginal: (beta.value - 0.5).abs() <= beta.uncertainty }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CriticalityReport {
    pub beta: BetaEstimate,
    #[serde(serialize_with = "ext_real")]
    pub mu_at_one: f64,
    pub regime: Regime,
    pub marginal: bool,
    pub alpha_c: Option<f64>,
    pub bracket: Option<[f64; 2]>,
    pub bracket_width: Option<f64>,
    /// `truncation_bound` of `mu` at the reported `alpha_c`.
    #[serde(serialize_with = "opt_ext_real")]
    pub truncation_bound: Option<f64>,
    /// Outcome at `alpha = alpha_c` itself.
    pub at_alpha_c: &'static str,
}

/// Finds `alpha_c` with `mu(alpha_c) = 1` by bisection on `[ALPHA_FLOOR, 1]`.
pub fn alpha_critical(
    series: &ReturnSeries,
    tail: &TailModel,
    beta: &BetaEstimate,
) -> Result<CriticalityReport> {
    let class = classify(beta);
    if class.regime != Regime::Transition {
        return Err(Error::NotSupercritical(beta.value));
    }
    let top = mu_at_one(beta.value)?;
    if top <= 1.0 {
        return Err(Error::BracketFailure(top));
    }
    let mut lo = ALPHA_FLOOR;
    let mut hi = 1.0;
    let bottom = mu_of_alpha(series, tail, lo)?.mu;
    if bottom > 1.0 {
        return Err(Error::InvalidParameter(format!(
            "mu({ALPHA_FLOOR}) = {bottom} already exceeds 1"
        )));
    }
    while hi - lo > BISECTION_TOL {
        let mid = 0.5 * (lo + hi);
        // mu = 1 is extinction, so ties move the lower end
        if mu_of_alpha(series, tail, mid)?.mu > 1.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let alpha_c = 0.5 * (lo + hi);
    let at = mu_of_alpha(series, tail, alpha_c)?;
    Ok(CriticalityReport {
        beta: *beta,
        mu_at_one: top,
        regime: class.regime,
        marginal: class.marginal,
        alpha_c: Some(alpha_c),
        bracket: Some([lo, hi]),
        bracket_width: Some(hi - lo),
        truncation_bound: Some(at.truncation_bound),
        at_alpha_c: "extinction",
    })
}

/// Report for either regime: no `alpha_c` when survival is impossible.
pub fn criticality_report(
    series: &ReturnSeries,
    tail: &TailModel,
    beta: &BetaEstimate,
) -> Result<CriticalityReport> {
    let class = classify(beta);
    match class.regime {
        Regime::Transition => alpha_critical(series, tail, beta),
        Regime::NoSurvival => Ok(CriticalityReport {
            beta: *beta,
            mu_at_one: mu_at_one(beta.value)?,
            regime: class.regime,
            marginal: class.marginal,
            alpha_c: None,
            bracket: None,
            bracket_width: None,
            truncation_bound: None,
            at_alpha_c: "extinction",
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::{make_biased_walk, make_finite, make_simple_walk, ChainSpec};
    use crate::series::{beta_from_f, first_return_inversion, return_probabilities_dp, BetaMethod};
    use crate::tail::fit_tail_auto;
    use proptest::prelude::*;

    struct Setup {
        series: ReturnSeries,
        tail: TailModel,
    }

    fn setup(chain: ChainSpec, n_max: usize) -> Setup {
        let series = first_return_inversion(return_probabilities_dp(&chain, n_max).unwrap()).unwrap();
        let tail = fit_tail_auto(&series, SeriesTarget::Returns);
        Setup { series, tail }
    }

    fn exact_beta(s: &Setup) -> BetaEstimate {
        BetaEstimate::exact(s.series.chain()).unwrap()
    }

    /// (1 - 4pq a^2)^(-1/2) - 1, the closed-form generating function.
    fn mu_closed_form(p: f64, a: f64) -> f64 {
        (1.0 - 4.0 * p * (1.0 - p) * a * a).powf(-0.5) - 1.0
    }

    fn self_loop() -> ChainSpec {
        make_finite(vec![vec![1.0]], 0).unwrap()
    }

    fn flip_flop() -> ChainSpec {
        make_finite(vec![vec![0.0, 1.0], vec![1.0, 0.0]], 0).unwrap()
    }

    #[test]
    fn mu_examples() {
        let s = setup(self_loop(), 2000);
        assert!((mu_of_alpha(&s.series, &s.tail, 0.5).unwrap().mu - 1.0).abs() < 1e-14);
        assert!(mu_of_alpha(&s.series, &s.tail, 1.0).unwrap().mu.is_infinite());

        let s = setup(make_biased_walk(0.5).unwrap(), 2000);
        let e = mu_of_alpha(&s.series, &s.tail, 0.8).unwrap();
        assert!((e.mu - 2.0 / 3.0).abs() < 1e-6);
        assert!((e.mu - mu_closed_form(0.5, 0.8)).abs() < 1e-12);
        assert!(mu_of_alpha(&s.series, &s.tail, 1.0).unwrap().mu.is_infinite());

        let s = setup(make_biased_walk(0.3).unwrap(), 2000);
        let e = mu_of_alpha(&s.series, &s.tail, 1.0).unwrap();
        assert!((e.mu - 1.5).abs() < 1e-4);
        assert!(e.mu.is_finite());

        assert!(mu_of_alpha(&s.series, &s.tail, 0.0).is_err());
        assert!(mu_of_alpha(&s.series, &s.tail, 1.1).is_err());
    }

    #[test]
    fn mu_at_one_examples() {
        assert_eq!(mu_at_one(0.5).unwrap(), 1.0);
        assert!((mu_at_one(0.6).unwrap() - 1.5).abs() < 1e-15);
        assert!(mu_at_one(1.0).unwrap().is_infinite());
        assert!(mu_at_one(1.5).is_err());
    }

    #[test]
    fn offspring_examples() {
        assert_eq!(offspring_pmf(0.5, 0).unwrap(), 0.5);
        assert_eq!(offspring_pmf(0.5, 2).unwrap(), 0.125);
        assert_eq!(offspring_pmf(0.0, 0).unwrap(), 1.0);
        assert_eq!(offspring_pmf(0.0, 3).unwrap(), 0.0);
        assert!(matches!(offspring_pmf(1.0, 0), Err(Error::ImproperOffspringLaw(_))));
        assert!(offspring_pmf(-0.1, 0).is_err());
    }

    #[test]
    fn extinction_examples() {
        assert_eq!(extinction_probability(0.4).unwrap(), 1.0);
        assert_eq!(extinction_probability(0.5).unwrap(), 1.0);
        // root in (0, 1) of b s^2 - s + (1 - b) = 0 by the quadratic formula
        let b: f64 = 0.687755;
        let oracle = (1.0 - (1.0 - 4.0 * b * (1.0 - b)).sqrt()) / (2.0 * b);
        assert!((oracle - 0.454006).abs() < 1e-6);
        assert!((extinction_probability(b).unwrap() - oracle).abs() < 1e-12);
        assert!(extinction_probability(1.0).is_err());
    }

    #[test]
    fn classify_examples() {
        let c = classify(&BetaEstimate::exact(&make_biased_walk(0.25).unwrap()).unwrap());
        assert_eq!(c.regime, Regime::NoSurvival);
        assert!(c.marginal);
        let c = classify(&BetaEstimate::exact(&make_biased_walk(0.5).unwrap()).unwrap());
        assert_eq!(c, Classification { regime: Regime::Transition, marginal: false });

        let s = setup(make_simple_walk(3).unwrap(), 60);
        let tf = fit_tail_auto(&s.series, SeriesTarget::FirstReturns);
        let b = beta_from_f(&s.series, &tf).unwrap();
        assert_eq!(b.method, BetaMethod::SeriesTail);
        assert_eq!(classify(&b), Classification { regime: Regime::NoSurvival, marginal: false });
    }

    #[test]
    fn alpha_c_examples() {
        let s = setup(self_loop(), 2000);
        let r = alpha_critical(&s.series, &s.tail, &exact_beta(&s)).unwrap();
        assert!((r.alpha_c.unwrap() - 0.5).abs() < 1e-9);
        assert!(r.bracket_width.unwrap() < BISECTION_TOL);
        assert!(r.mu_at_one.is_infinite());

        let s = setup(flip_flop(), 2000);
        let r = alpha_critical(&s.series, &s.tail, &exact_beta(&s)).unwrap();
        assert!((r.alpha_c.unwrap() - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-9);

        let s = setup(make_biased_walk(0.5).unwrap(), 2000);
        let r = alpha_critical(&s.series, &s.tail, &exact_beta(&s)).unwrap();
        assert!((r.alpha_c.unwrap() - 3f64.sqrt() / 2.0).abs() < 1e-4);
        let [lo, hi] = r.bracket.unwrap();
        assert!(mu_of_alpha(&s.series, &s.tail, lo).unwrap().mu <= 1.0);
        assert!(mu_of_alpha(&s.series, &s.tail, hi).unwrap().mu > 1.0);
    }

    #[test]
    fn alpha_c_refuses_subcritical() {
        let s = setup(make_biased_walk(0.2).unwrap(), 500);
        let b = exact_beta(&s);
        assert!(matches!(alpha_critical(&s.series, &s.tail, &b), Err(Error::NotSupercritical(_))));
        let r = criticality_report(&s.series, &s.tail, &b).unwrap();
        assert_eq!(r.regime, Regime::NoSurvival);
        assert!(r.alpha_c.is_none());
        assert!(r.mu_at_one <= 1.0);
    }

    #[test]
    fn report_json_shape() {
        let s = setup(self_loop(), 100);
        let r = alpha_critical(&s.series, &s.tail, &exact_beta(&s)).unwrap();
        let v: serde_json::Value = serde_json::to_value(&r).unwrap();
        assert_eq!(v["mu_at_one"], "inf");
        assert_eq!(v["regime"], "transition");
        assert_eq!(v["marginal"], false);
        assert_eq!(v["beta"]["method"], "exact_formula");
        assert!(v["bracket"].as_array().unwrap().len() == 2);
    }

    #[test]
    fn alpha_c_symmetry_and_ordering() {
        let ac = |p: f64| {
            let s = setup(make_biased_walk(p).unwrap(), 2000);
            alpha_critical(&s.series, &s.tail, &exact_beta(&s)).unwrap().alpha_c.unwrap()
        };
        for p in [0.3, 0.4, 0.45] {
            assert!((ac(p) - ac(1.0 - p)).abs() < 1e-6);
            assert!((ac(p) - (3.0 / (16.0 * p * (1.0 - p))).sqrt()).abs() < 1e-6);
        }
        assert!(ac(0.5) < ac(0.6) && ac(0.6) < ac(0.7));
    }

    #[test]
    fn offspring_pmf_normalized_with_mean() {
        for b in [0.1, 0.5, 0.9] {
            let total: f64 = (0..=10_000).map(|j| offspring_pmf(b, j).unwrap()).sum::<f64>()
                + b.powi(10_001);
            assert!((total - 1.0).abs() < 1e-12);
            let mean: f64 = (0..=10_000).map(|j| j as f64 * offspring_pmf(b, j).unwrap()).sum();
            assert!((mean - b / (1.0 - b)).abs() < 1e-9);
        }
    }

    #[test]
    fn renewal_consistency_of_mu_and_f() {
        for chain in [
            make_biased_walk(0.5).unwrap(),
            make_biased_walk(0.3).unwrap(),
            make_simple_walk(2).unwrap(),
            make_simple_walk(3).unwrap(),
            flip_flop(),
        ] {
            let n_max = match chain.dimension() {
                Some(2) => 200,
                Some(3) => 60,
                _ => 2000,
            };
            let s = setup(chain, n_max);
            for k in 1..=9 {
                let e = mu_of_alpha(&s.series, &s.tail, k as f64 / 10.0).unwrap();
                let f = e.first_return_gf.unwrap();
                if f < 1.0 - 1e-6 {
                    let gap = (e.mu - f / (1.0 - f)).abs();
                    assert!(gap <= 10.0 * e.truncation_bound, "alpha {k}/10: {gap} vs {}", e.truncation_bound);
                }
            }
        }
    }

    proptest! {
        #[test]
        fn dichotomy_is_algebraic(beta in 0.0f64..1.0) {
            let class = classify(&BetaEstimate {
                lower_bound: beta, value: beta, uncertainty: 0.0, method: BetaMethod::ExactFormula,
            });
            prop_assert_eq!(class.regime == Regime::Transition, mu_at_one(beta).unwrap() > 1.0);
        }

        #[test]
        fn extinction_is_smallest_fixed_point(b in 0.0f64..0.999) {
            let q = extinction_probability(b).unwrap();
            let g = |s: f64| (1.0 - b) / (1.0 - b * s);
            prop_assert!((g(q) - q).abs() < 1e-12);
            if b > 0.5 {
                let slope = b * (1.0 - b) / (1.0 - b * q).powi(2);
                prop_assert!(slope <= 1.0 + 1e-12);
                prop_assert!(q < 1.0);
            }
        }

        #[test]
        fn mu_monotone(p in 0.05f64..0.95, a in 0.01f64..0.99, b in 0.01f64..0.99) {
            let s = setup(make_biased_walk(p).unwrap(), 300);
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            let m1 = mu_of_alpha(&s.series, &s.tail, lo).unwrap().mu;
            let m2 = mu_of_alpha(&s.series, &s.tail, hi).unwrap().mu;
            prop_assert!(m1 <= m2);
            if lo < hi {
                prop_assert!(m1 < m2);
            }
        }
    }
}
