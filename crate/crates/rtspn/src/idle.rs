//! Expected forced idle time per frame.
//!
//! A work-conserving server restricted to a task subset `S` must idle once
//! every arrived job of `S` in the current frame has completed. With
//! exponential processing times the busy period for a fixed arrival set
//! `A` is hypoexponential, and the expected idle time `E[(T − Σ_{n∈A}
//! t_n)^+]` has a closed form for pairwise-distinct rates:
//!
//! `T − Σᵢ (Cᵢ/λᵢ)(1 − e^{−λᵢT})` with `Cᵢ = Π_{j≠i} λⱼ/(λⱼ − λᵢ)`.
//!
//! `E[I_S]` is the mixture of that quantity over the arrival subset
//! distribution restricted to `S`. A seeded Monte Carlo estimator serves
//! as an independent oracle and as the fallback when rates are too close
//! for the alternating sum.

use crate::model::{ModelError, SystemSpec, TaskId, TaskSet};
use crate::rng::SimRng;
use crate::stats::SampleStats;

use thiserror::Error;

/// Relative rate separation below which the closed form is refused.
pub const EPSILON_RATE: f64 = 1e-9;

/// Rate lists longer than this are evaluated in log-space with sign
/// tracking; the direct coefficient product is fine below it.
const LOG_SPACE_THRESHOLD: usize = 8;

/// Clamping the alternating sum by more than this fraction of `T` is
/// reported as a numerical warning.
const CLAMP_WARN_FRACTION: f64 = 1e-8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum IdleError {
    #[error("rates {0} and {1} are closer than the supported separation")]
    NearEqualRates(f64, f64),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// How an idle-time value was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Analytic,
    MonteCarlo { samples: u64 },
}

/// An estimate of `E[I_S]`, always within `[0, T]`. Analytic estimates
/// carry zero standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IdleEstimate {
    pub value: f64,
    pub std_error: f64,
    pub method: Method,
}

/// `E[(T − X)^+]` where `X` is the sum of independent exponentials with
/// the given rates. The empty sum gives `T`.
///
/// Preconditions (asserted): all rates positive, `T` positive. Rates
/// within [`EPSILON_RATE`] relative separation are rejected; the caller
/// falls back to [`idle_time_monte_carlo`] or perturbs.
pub fn residual_deficit(rates: &[f64], frame_length: f64) -> Result<f64, IdleError> {
    assert!(
        frame_length.is_finite() && frame_length > 0.0,
        "frame length must be positive"
    );
    for &r in rates {
        assert!(r.is_finite() && r > 0.0, "rates must be positive");
    }
    if rates.is_empty() {
        return Ok(frame_length);
    }
    for (i, &a) in rates.iter().enumerate() {
        for &b in &rates[i + 1..] {
            if (a - b).abs() <= EPSILON_RATE * a.max(b) {
                return Err(IdleError::NearEqualRates(a, b));
            }
        }
    }
    let sum = if rates.len() > LOG_SPACE_THRESHOLD {
        weighted_terms_log_space(rates, frame_length)
    } else {
        weighted_terms_direct(rates, frame_length)
    };
    Ok(clamp_with_warning(frame_length - sum, frame_length))
}

/// `Σᵢ (Cᵢ/λᵢ)(1 − e^{−λᵢT})` by direct coefficient products.
fn weighted_terms_direct(rates: &[f64], t: f64) -> f64 {
    let mut sum = 0.0;
    for (i, &li) in rates.iter().enumerate() {
        let mut coeff = 1.0;
        for (j, &lj) in rates.iter().enumerate() {
            if j != i {
                coeff *= lj / (lj - li);
            }
        }
        sum += coeff / li * -(-li * t).exp_m1();
    }
    sum
}

/// Same sum with log-magnitude accumulation and sign tracking, scaled by
/// the largest term to avoid overflow in the coefficient products.
fn weighted_terms_log_space(rates: &[f64], t: f64) -> f64 {
    let mut log_terms = Vec::with_capacity(rates.len());
    let mut signs = Vec::with_capacity(rates.len());
    for (i, &li) in rates.iter().enumerate() {
        let mut log_coeff = 0.0;
        let mut sign = 1.0f64;
        for (j, &lj) in rates.iter().enumerate() {
            if j != i {
                log_coeff += lj.ln() - (lj - li).abs().ln();
                if lj < li {
                    sign = -sign;
                }
            }
        }
        let one_minus_exp = -(-li * t).exp_m1();
        log_terms.push(log_coeff - li.ln() + one_minus_exp.ln());
        signs.push(sign);
    }
    let scale = log_terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !scale.is_finite() {
        return 0.0;
    }
    // Compensated summation of the scaled alternating terms.
    let mut acc = 0.0;
    let mut comp = 0.0;
    for (lt, sign) in log_terms.iter().zip(&signs) {
        let term = sign * (lt - scale).exp();
        let y = term - comp;
        let t2 = acc + y;
        comp = (t2 - acc) - y;
        acc = t2;
    }
    acc * scale.exp()
}

fn clamp_with_warning(value: f64, t: f64) -> f64 {
    let clamped = value.clamp(0.0, t);
    if (clamped - value).abs() > CLAMP_WARN_FRACTION * t {
        log::warn!(
            "idle-time sum {value} clamped to {clamped}; alternating-sum \
             cancellation exceeded {CLAMP_WARN_FRACTION} of the frame"
        );
    }
    clamped
}

/// Arrival subsets restricted to `S` with their probabilities and the
/// rate lists of the arrived tasks, in canonical subset order.
fn restricted_arrivals(
    subset: &TaskSet,
    spec: &SystemSpec,
) -> Result<Vec<(f64, Vec<f64>)>, IdleError> {
    let mut ids: Vec<TaskId> = Vec::with_capacity(subset.len());
    for &t in subset {
        if spec.task(t).is_none() {
            return Err(IdleError::Model(ModelError::UnknownTask(t)));
        }
        ids.push(t);
    }
    let dist = spec.arrivals.subset_distribution(&ids).map_err(IdleError::Model)?;
    Ok(dist
        .into_iter()
        .map(|(arrived, prob)| {
            let rates = arrived
                .iter()
                .map(|t| spec.task(*t).expect("members checked").rate)
                .collect();
            (prob, rates)
        })
        .collect())
}

/// Analytic `E[I_S]`: the arrival-subset mixture of [`residual_deficit`].
pub fn idle_time_expected(subset: &TaskSet, spec: &SystemSpec) -> Result<IdleEstimate, IdleError> {
    let mut value = 0.0;
    for (prob, rates) in restricted_arrivals(subset, spec)? {
        value += prob * residual_deficit(&rates, spec.frame_length)?;
    }
    Ok(IdleEstimate {
        value: value.clamp(0.0, spec.frame_length),
        std_error: 0.0,
        method: Method::Analytic,
    })
}

/// Monte Carlo `E[I_S]`: sample the arrival set, then each arrived task's
/// processing time. Deterministic for a fixed seed.
pub fn idle_time_monte_carlo(
    subset: &TaskSet,
    spec: &SystemSpec,
    samples: u64,
    seed: u64,
) -> Result<IdleEstimate, IdleError> {
    assert!(samples >= 1, "need at least one sample");
    let arrivals = restricted_arrivals(subset, spec)?;
    let mut cumulative = Vec::with_capacity(arrivals.len());
    let mut acc = 0.0;
    for (prob, _) in &arrivals {
        acc += prob;
        cumulative.push(acc);
    }
    let mut rng = SimRng::new(seed);
    let mut stats = SampleStats::default();
    for _ in 0..samples {
        let which = rng.categorical(&cumulative);
        let busy: f64 = arrivals[which].1.iter().map(|&rate| rng.exp(rate)).sum();
        stats.push((spec.frame_length - busy).max(0.0));
    }
    Ok(IdleEstimate {
        value: stats.mean(),
        std_error: stats.std_error(),
        method: Method::MonteCarlo { samples },
    })
}

/// `E[I_S]` by the closed form, falling back to Monte Carlo when rates
/// are too close to separate.
pub fn idle_time(
    subset: &TaskSet,
    spec: &SystemSpec,
    fallback_samples: u64,
    fallback_seed: u64,
) -> Result<IdleEstimate, IdleError> {
    match idle_time_expected(subset, spec) {
        Ok(est) => Ok(est),
        Err(IdleError::NearEqualRates(..)) => {
            idle_time_monte_carlo(subset, spec, fallback_samples, fallback_seed)
        }
        Err(other) => Err(other),
    }
}
