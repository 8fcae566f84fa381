//! Rare-path probability estimation and speed-normalized rate comparison.
//!
//! Tail probabilities of scaled snapshots are estimated three ways:
//!
//! * **direct** — indicator Monte Carlo on the scaled process;
//! * **tilted** — importance sampling under the exponential change of
//!   measure with the tilt solving `Λ'(λ*) = c·S(t)`, reweighted by the
//!   exact likelihood ratio `exp(−λ*·X_t + Λ(λ*))` (endpoint events only:
//!   the cumulant provides a terminal change of measure, not a path-space
//!   one);
//! * **exact** — the closed-form Gaussian tail for pure-diffusion specs.
//!
//! The speed-normalized empirical rate `(h(t)/S(t)²)·log p` is compared
//! against the variational prediction `−inf I` for the event.

use rayon::prelude::*;
use serde::Serialize;

use crate::characteristics::{ProcessSpec, ScalingFn};
use crate::error::{Error, Result};
use crate::grid::GridFunction;
use crate::ratefn::{self, RateParams};
use crate::sampler::{mix_seed, sample_path_on_grid, sample_terminals};
use crate::stats::{normal_sf, pairwise_sum};

/// Knot count used for sup-norm events (ball events use the center's grid).
pub const DEFAULT_EVENT_KNOTS: usize = 64;

const Z_95: f64 = 1.959963984540054;

/// Rare event for the scaled snapshot `g = X(t·)/S(t)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum EventSpec {
    /// `{ g(1) ≥ c }`
    Endpoint { c: f64 },
    /// `{ sup_s |g(s)| ≥ c }`, `c > 0`
    SupAbs { c: f64 },
    /// `{ ‖g − center‖∞ ≤ delta }`, `delta > 0`
    Ball { center: GridFunction, delta: f64 },
}

impl EventSpec {
    fn validate(&self) -> Result<()> {
        match self {
            EventSpec::Endpoint { c } => {
                if !c.is_finite() {
                    return Err(Error::InvalidArgument("endpoint level must be finite".into()));
                }
            }
            EventSpec::SupAbs { c } => {
                if !(c > &0.0) {
                    return Err(Error::InvalidArgument(format!(
                        "sup event needs c > 0, got {c}"
                    )));
                }
            }
            EventSpec::Ball { delta, .. } => {
                if !(delta > &0.0) {
                    return Err(Error::InvalidArgument(format!(
                        "ball event needs δ > 0, got {delta}"
                    )));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Direct,
    Tilted,
    Exact,
}

/// A rare-event probability estimate with its normalized rate.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TailEstimate {
    pub probability: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub method: Method,
    pub n_reps: u64,
    /// `(h(t)/S(t)²)·log probability`; absent when the estimate is 0.
    pub empirical_rate: Option<f64>,
    /// Effective sample size of the importance weights (tilted only).
    pub ess: Option<f64>,
    /// Direct estimate observed no hits; `ci_high` is the one-sided 95%
    /// Clopper–Pearson upper bound.
    pub zero_hits: bool,
}

/// Solves `Λ'(λ*) = target` for the exponential tilt by safeguarded Newton
/// iteration with a bisection fallback.
pub fn tilt_parameter(spec: &ProcessSpec, t: f64, target: f64) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::InvalidArgument(format!("t must be > 0, got {t}")));
    }
    if target == 0.0 {
        return Ok(0.0);
    }
    if spec.variance(0.0, t)? == 0.0 {
        return Err(Error::Domain(
            "degenerate spec: the attainable mean range is {0}".into(),
        ));
    }
    // solve well below the 1e-10 contract so the returned λ is accurate to
    // near machine precision for closed-form cumulants
    let tol = 1e-13 * target.abs().max(1.0);
    // bracket [lo, hi] with Λ'(lo) ≤ target ≤ Λ'(hi) (mirrored when target < 0)
    let sign = target.signum();
    let mut hi = sign;
    loop {
        match spec.cumulant_mean(hi, 0.0, t) {
            Ok(m) if sign * m >= sign * target => break,
            Ok(_) => {
                hi *= 2.0;
                if hi.abs() > 1e9 {
                    return Err(Error::Domain(format!(
                        "target mean {target} is outside the attainable range"
                    )));
                }
            }
            Err(Error::Saturation { .. }) => {
                return Err(Error::Domain(format!(
                    "target mean {target} is not attainable before exponential overflow"
                )));
            }
            Err(e) => return Err(e),
        }
    }
    let (mut lo, mut hi) = if sign > 0.0 { (0.0, hi) } else { (hi, 0.0) };
    let mut lambda = 0.5 * (lo + hi);
    for _ in 0..200 {
        let m = spec.cumulant_mean(lambda, 0.0, t)?;
        if (m - target).abs() <= tol {
            return Ok(lambda);
        }
        if m < target {
            lo = lambda;
        } else {
            hi = lambda;
        }
        // bracket collapse: quadrature noise in Λ' can stall the residual
        // test before the contract tolerance; λ itself is converged then
        if hi - lo <= 4.0 * f64::EPSILON * lambda.abs().max(1.0) {
            return Ok(0.5 * (lo + hi));
        }
        let curv = spec.cumulant_curvature(lambda, 0.0, t)?;
        let newton = lambda - (m - target) / curv;
        lambda = if newton.is_finite() && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
    }
    Err(Error::NonConvergence(format!(
        "tilt solve stalled at λ = {lambda} for target {target}"
    )))
}

/// Estimates `P(event)` for the scaled snapshot at time `t`.
pub fn tail_probability(
    spec: &ProcessSpec,
    scaling: &ScalingFn,
    t: f64,
    event: &EventSpec,
    method: Method,
    n_reps: u64,
    seed: u64,
) -> Result<TailEstimate> {
    event.validate()?;
    if !(t > 0.0) {
        return Err(Error::InvalidArgument(format!("t must be > 0, got {t}")));
    }
    match method {
        Method::Exact => exact_tail(spec, scaling, t, event),
        Method::Direct => direct_tail(spec, scaling, t, event, n_reps, seed),
        Method::Tilted => tilted_tail(spec, scaling, t, event, n_reps, seed),
    }
}

fn rate_of(p: f64, scaling: &ScalingFn, t: f64) -> Option<f64> {
    (p > 0.0).then(|| p.ln() / scaling.speed(t))
}

fn exact_tail(
    spec: &ProcessSpec,
    scaling: &ScalingFn,
    t: f64,
    event: &EventSpec,
) -> Result<TailEstimate> {
    let EventSpec::Endpoint { c } = event else {
        return Err(Error::InvalidArgument(
            "exact tails are available for endpoint events only".into(),
        ));
    };
    if spec.kernel.is_some() {
        return Err(Error::InvalidArgument(
            "exact tails are available for pure-diffusion specs only".into(),
        ));
    }
    let var = spec.variance(0.0, t)?;
    let threshold = c * scaling.value(t);
    let p = if var == 0.0 {
        if threshold <= 0.0 {
            1.0
        } else {
            0.0
        }
    } else {
        normal_sf(threshold / var.sqrt())
    };
    Ok(TailEstimate {
        probability: p,
        ci_low: p,
        ci_high: p,
        method: Method::Exact,
        n_reps: 0,
        empirical_rate: rate_of(p, scaling, t),
        ess: None,
        zero_hits: false,
    })
}

/// Wilson 95% score interval.
fn wilson_interval(hits: u64, n: u64) -> (f64, f64) {
    let nf = n as f64;
    let p = hits as f64 / nf;
    let z2 = Z_95 * Z_95;
    let denom = 1.0 + z2 / nf;
    let center = (p + z2 / (2.0 * nf)) / denom;
    let half = Z_95 * (p * (1.0 - p) / nf + z2 / (4.0 * nf * nf)).sqrt() / denom;
    ((center - half).max(0.0), (center + half).min(1.0))
}

fn direct_tail(
    spec: &ProcessSpec,
    scaling: &ScalingFn,
    t: f64,
    event: &EventSpec,
    n_reps: u64,
    seed: u64,
) -> Result<TailEstimate> {
    if n_reps == 0 {
        return Err(Error::InvalidArgument("n_reps must be ≥ 1".into()));
    }
    let s_t = scaling.value(t);
    let hits: u64 = match event {
        EventSpec::Endpoint { c } => {
            let threshold = c * s_t;
            sample_terminals(spec, t, n_reps, seed, 0.0)?
                .iter()
                .filter(|x| **x >= threshold)
                .count() as u64
        }
        EventSpec::SupAbs { .. } | EventSpec::Ball { .. } => {
            let m = match event {
                EventSpec::Ball { center, .. } => center.segments(),
                _ => DEFAULT_EVENT_KNOTS,
            };
            let times: Vec<f64> = (0..=m).map(|j| j as f64 / m as f64 * t).collect();
            let indicators: Vec<bool> = (0..n_reps)
                .into_par_iter()
                .map(|i| -> Result<bool> {
                    let path = sample_path_on_grid(spec, times.clone(), mix_seed(seed, i))?;
                    Ok(match event {
                        EventSpec::SupAbs { c } => path
                            .values()
                            .iter()
                            .any(|x| x.abs() >= c * s_t),
                        EventSpec::Ball { center, delta } => path
                            .values()
                            .iter()
                            .enumerate()
                            .all(|(j, x)| (x / s_t - center.values()[j]).abs() <= *delta),
                        EventSpec::Endpoint { .. } => unreachable!(),
                    })
                })
                .collect::<Result<_>>()?;
            indicators.iter().filter(|b| **b).count() as u64
        }
    };
    let p = hits as f64 / n_reps as f64;
    let zero_hits = hits == 0;
    let (ci_low, ci_high) = if zero_hits {
        // one-sided 95% Clopper–Pearson upper bound for 0 successes
        (0.0, 1.0 - 0.05f64.powf(1.0 / n_reps as f64))
    } else {
        wilson_interval(hits, n_reps)
    };
    Ok(TailEstimate {
        probability: p,
        ci_low,
        ci_high,
        method: Method::Direct,
        n_reps,
        empirical_rate: rate_of(p, scaling, t),
        ess: None,
        zero_hits,
    })
}

fn tilted_tail(
    spec: &ProcessSpec,
    scaling: &ScalingFn,
    t: f64,
    event: &EventSpec,
    n_reps: u64,
    seed: u64,
) -> Result<TailEstimate> {
    let EventSpec::Endpoint { c } = event else {
        return Err(Error::InvalidArgument(
            "tilting targets the terminal mean; only endpoint events are supported".into(),
        ));
    };
    if n_reps < 2 {
        return Err(Error::InvalidArgument("n_reps must be ≥ 2".into()));
    }
    let threshold = c * scaling.value(t);
    let lambda = tilt_parameter(spec, t, threshold)?;
    let log_norm = spec.cumulant(lambda, 0.0, t)?;
    let terminals = sample_terminals(spec, t, n_reps, seed, lambda)?;
    let weights: Vec<f64> = terminals
        .iter()
        .map(|x| (-lambda * x + log_norm).exp())
        .collect();
    let contribs: Vec<f64> = terminals
        .iter()
        .zip(&weights)
        .map(|(x, w)| if *x >= threshold { *w } else { 0.0 })
        .collect();
    let n = n_reps as f64;
    let p = pairwise_sum(&contribs) / n;
    let centered: Vec<f64> = contribs.iter().map(|v| (v - p) * (v - p)).collect();
    let se = (pairwise_sum(&centered) / (n * (n - 1.0))).sqrt();
    let sum_w = pairwise_sum(&weights);
    let sum_w2 = pairwise_sum(&weights.iter().map(|w| w * w).collect::<Vec<_>>());
    let ess = if sum_w2 > 0.0 { sum_w * sum_w / sum_w2 } else { 0.0 };
    Ok(TailEstimate {
        probability: p,
        ci_low: (p - Z_95 * se).max(0.0),
        ci_high: (p + Z_95 * se).min(1.0),
        method: Method::Tilted,
        n_reps,
        empirical_rate: rate_of(p, scaling, t),
        ess: Some(ess),
        zero_hits: p == 0.0,
    })
}

/// Sample mean and standard error of the likelihood weight
/// `exp(−λ·X_t + Λ(λ))` under the λ-tilted law (1 in expectation).
pub fn likelihood_weight_mean(
    spec: &ProcessSpec,
    t: f64,
    lambda: f64,
    n_reps: u64,
    seed: u64,
) -> Result<(f64, f64)> {
    if n_reps < 2 {
        return Err(Error::InvalidArgument("n_reps must be ≥ 2".into()));
    }
    let log_norm = spec.cumulant(lambda, 0.0, t)?;
    let weights: Vec<f64> = sample_terminals(spec, t, n_reps, seed, lambda)?
        .iter()
        .map(|x| (-lambda * x + log_norm).exp())
        .collect();
    let n = n_reps as f64;
    let mean = pairwise_sum(&weights) / n;
    let centered: Vec<f64> = weights.iter().map(|w| (w - mean) * (w - mean)).collect();
    let se = (pairwise_sum(&centered) / (n * (n - 1.0))).sqrt();
    Ok((mean, se))
}

/// Theoretical rate for the event and the gap of an estimate against it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RateGap {
    /// `−inf_{f ∈ event} I(f)` (signed; the MDP predicts the empirical rate
    /// approaches this value).
    pub theoretical_rate: f64,
    /// `empirical_rate − theoretical_rate`; absent for zero-probability
    /// estimates.
    pub gap: Option<f64>,
}

pub fn rate_gap(estimate: &TailEstimate, event: &EventSpec, params: &RateParams) -> Result<RateGap> {
    let infimum = match event {
        EventSpec::Endpoint { c } => {
            if *c <= 0.0 {
                0.0
            } else {
                ratefn::sublevel_ball_infima(*c, 2.0, params)?.endpoint
            }
        }
        EventSpec::SupAbs { c } => ratefn::sublevel_ball_infima(*c, 2.0, params)?.sup_set,
        EventSpec::Ball { center, delta } => ratefn::inf_rate_over_ball(center, *delta, params)?.0,
    };
    let theoretical_rate = -infimum;
    Ok(RateGap {
        theoretical_rate,
        gap: estimate.empirical_rate.map(|e| e - theoretical_rate),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn brownian_scaling() -> ScalingFn {
        ScalingFn::power(1.0, 0.75).unwrap()
    }

    #[test]
    fn tilt_is_linear_for_brownian() {
        let spec = ProcessSpec::brownian();
        let t = 10.0;
        for target in [-3.0, 0.5, 7.0] {
            let lambda = tilt_parameter(&spec, t, target).unwrap();
            assert_relative_eq!(lambda, target / t, max_relative = 1e-10);
        }
        assert_eq!(tilt_parameter(&spec, 10.0, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn tilt_matches_asinh_for_compound_poisson() {
        let rate = 2.0;
        let spec = ProcessSpec::compound_poisson_pm1(rate);
        let t = 3.0;
        for target in [0.25, 1.0, 10.0, -4.0] {
            let lambda = tilt_parameter(&spec, t, target).unwrap();
            let exact = (target / (rate * t)).asinh();
            assert_relative_eq!(lambda, exact, epsilon = 1e-12);
        }
    }

    #[test]
    fn tilt_rejects_degenerate_spec() {
        let null = ProcessSpec::new("null", None, None).unwrap();
        assert!(matches!(
            tilt_parameter(&null, 1.0, 1.0),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn exact_median_is_half() {
        let spec = ProcessSpec::brownian();
        let est = tail_probability(
            &spec,
            &brownian_scaling(),
            100.0,
            &EventSpec::Endpoint { c: 0.0 },
            Method::Exact,
            0,
            0,
        )
        .unwrap();
        assert_relative_eq!(est.probability, 0.5);
    }

    #[test]
    fn exact_rare_tail_reference_value() {
        // t = 10⁴, S = t^{3/4}: threshold/√t = 10 ⇒ p = Φ̄(10)
        let spec = ProcessSpec::brownian();
        let scaling = brownian_scaling();
        let est = tail_probability(
            &spec,
            &scaling,
            1e4,
            &EventSpec::Endpoint { c: 1.0 },
            Method::Exact,
            0,
            0,
        )
        .unwrap();
        assert_relative_eq!(est.probability, 7.619853024160527e-24, max_relative = 1e-9);
        // empirical rate = 1e-2 · log Φ̄(10) ≈ −0.5323
        assert_relative_eq!(est.empirical_rate.unwrap(), -0.53231, epsilon = 1e-4);
    }

    #[test]
    fn null_spec_unreachable_event() {
        let null = ProcessSpec::new("null", None, None).unwrap();
        let est = tail_probability(
            &null,
            &brownian_scaling(),
            10.0,
            &EventSpec::Endpoint { c: 1.0 },
            Method::Direct,
            200,
            9,
        )
        .unwrap();
        assert_eq!(est.probability, 0.0);
        assert!(est.zero_hits);
        assert!(est.empirical_rate.is_none());
        assert!(est.ci_high > 0.0 && est.ci_high < 0.02);
    }

    #[test]
    fn tilted_and_direct_agree_on_estimable_event() {
        // p ≈ Φ̄(3.162) ≈ 7.9e-4 ≥ 10⁻³ scale: both estimators see hits
        let spec = ProcessSpec::brownian();
        let scaling = brownian_scaling();
        let t = 100.0;
        let event = EventSpec::Endpoint { c: 1.0 };
        let exact = tail_probability(&spec, &scaling, t, &event, Method::Exact, 0, 0).unwrap();
        let direct =
            tail_probability(&spec, &scaling, t, &event, Method::Direct, 200_000, 21).unwrap();
        let tilted =
            tail_probability(&spec, &scaling, t, &event, Method::Tilted, 50_000, 22).unwrap();
        assert!(direct.ci_low <= tilted.ci_high && tilted.ci_low <= direct.ci_high);
        assert!(tilted.ci_low <= exact.probability && exact.probability <= tilted.ci_high);
        assert!(tilted.ess.unwrap() >= 1.0);
    }

    #[test]
    fn tilted_agrees_for_jump_spec() {
        let spec = ProcessSpec::compound_poisson_pm1(1.0);
        let scaling = brownian_scaling();
        let t = 64.0;
        let event = EventSpec::Endpoint { c: 0.8 };
        let direct =
            tail_probability(&spec, &scaling, t, &event, Method::Direct, 200_000, 5).unwrap();
        let tilted =
            tail_probability(&spec, &scaling, t, &event, Method::Tilted, 50_000, 6).unwrap();
        assert!(
            direct.ci_low <= tilted.ci_high && tilted.ci_low <= direct.ci_high,
            "direct [{}, {}] vs tilted [{}, {}]",
            direct.ci_low,
            direct.ci_high,
            tilted.ci_low,
            tilted.ci_high
        );
    }

    #[test]
    fn likelihood_weight_unbiased_at_moderate_tilt() {
        for spec in [ProcessSpec::brownian(), ProcessSpec::compound_poisson_pm1(2.0)] {
            let t = 25.0;
            let sd = spec.variance(0.0, t).unwrap().sqrt();
            let lambda = 1.0 / sd; // unit-lognormal scale tilt
            let (mean, se) = likelihood_weight_mean(&spec, t, lambda, 100_000, 31).unwrap();
            assert!(
                (mean - 1.0).abs() <= 4.0 * se,
                "{}: mean {mean} se {se}",
                spec.label
            );
        }
    }

    #[test]
    fn tilting_rejects_path_events() {
        let spec = ProcessSpec::brownian();
        let err = tail_probability(
            &spec,
            &brownian_scaling(),
            10.0,
            &EventSpec::SupAbs { c: 1.0 },
            Method::Tilted,
            100,
            1,
        );
        assert!(matches!(err, Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn rate_gap_endpoint_reference() {
        let params = RateParams::standard();
        let spec = ProcessSpec::brownian();
        let scaling = brownian_scaling();
        let event = EventSpec::Endpoint { c: 1.0 };
        let est = tail_probability(&spec, &scaling, 1e4, &event, Method::Exact, 0, 0).unwrap();
        let gap = rate_gap(&est, &event, &params).unwrap();
        assert_relative_eq!(gap.theoretical_rate, -0.5);
        assert_relative_eq!(gap.gap.unwrap(), -0.03231, epsilon = 1e-4);
    }

    #[test]
    fn rate_gap_ball_with_large_delta() {
        let params = RateParams::standard();
        let spec = ProcessSpec::brownian();
        let scaling = brownian_scaling();
        let event = EventSpec::Ball {
            center: GridFunction::zero(8),
            delta: 5.0,
        };
        let est = tail_probability(&spec, &scaling, 100.0, &event, Method::Direct, 2000, 3).unwrap();
        assert!(est.probability > 0.999);
        let gap = rate_gap(&est, &event, &params).unwrap();
        assert_eq!(gap.theoretical_rate, 0.0);
        assert!(gap.gap.unwrap().abs() < 1e-3);
    }

    #[test]
    fn zero_probability_gap_is_flagged() {
        let params = RateParams::standard();
        let null = ProcessSpec::new("null", None, None).unwrap();
        let event = EventSpec::Endpoint { c: 1.0 };
        let est = tail_probability(
            &null,
            &brownian_scaling(),
            10.0,
            &event,
            Method::Direct,
            100,
            4,
        )
        .unwrap();
        let gap = rate_gap(&est, &event, &params).unwrap();
        assert!(gap.gap.is_none());
    }

    #[test]
    fn mdp_rate_trend_toward_prediction() {
        // exact Brownian tails: empirical rate climbs toward −c²/2 = −0.5
        let spec = ProcessSpec::brownian();
        let scaling = brownian_scaling();
        let event = EventSpec::Endpoint { c: 1.0 };
        let mut rates = Vec::new();
        for t in [1e2, 1e4, 1e6] {
            let est = tail_probability(&spec, &scaling, t, &event, Method::Exact, 0, 0).unwrap();
            rates.push(est.empirical_rate.unwrap());
        }
        assert!(rates[0] < rates[1] && rates[1] < rates[2] && rates[2] < -0.5);
        // upper-bound direction with the prefactor tolerance
        for (t, rate) in [1e2, 1e4, 1e6].into_iter().zip(&rates) {
            let x = scaling.value(t) / t.sqrt();
            let tol = 2.0 * x.ln() / scaling.speed(t);
            assert!(*rate <= -0.5 + tol.abs());
        }
    }
}
