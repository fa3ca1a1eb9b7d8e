//! Exact binomial probabilities by pmf summation.
//!
//! Terms are generated with the multiplicative recurrence
//! `pmf(i+1) = pmf(i) * theta/(1-theta) * (k-i)/(i+1)` starting from the mode
//! with an unnormalized weight of one, walking outward in both directions
//! until the weights underflow. The normalizing constant is the sum of all
//! weights, so no factorials, powers or log-gamma values are ever formed and
//! nothing underflows for `k` up to [`MAX_TRIALS`].

use thiserror::Error;

/// Largest number of trials accepted by the evaluators.
pub const MAX_TRIALS: u64 = 10_000;

/// Weights below this are treated as zero; the walk away from the mode stops.
const NEGLIGIBLE: f64 = 1e-300;

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum BinomialError {
    #[error("success probability {0} is outside [0, 1]")]
    InvalidProbability(f64),
    #[error("threshold {m} is outside [0, {max}]")]
    InvalidThreshold { m: i64, max: u64 },
    #[error("{0} trials exceeds the supported maximum of {MAX_TRIALS}")]
    TooManyTrials(u64),
}

fn check(k: u64, theta: f64) -> Result<(), BinomialError> {
    if !(0.0..=1.0).contains(&theta) {
        return Err(BinomialError::InvalidProbability(theta));
    }
    if k > MAX_TRIALS {
        return Err(BinomialError::TooManyTrials(k));
    }
    Ok(())
}

/// Accumulated weights of one pass over the distribution.
struct Pass {
    total: f64,
    /// Sum of weights on the side of `m` that does not contain the mode.
    tail: f64,
    /// Weight at the queried point.
    at: f64,
}

/// Walks the whole support once. `tail` collects `i >= m` when `m` lies above
/// the mode and `i < m` otherwise, so the returned tail is always the small one.
fn pass(k: u64, theta: f64, m: u64, at: u64) -> (Pass, bool) {
    let mode = libm::floor(((k + 1) as f64) * theta).min(k as f64) as u64;
    let upper = m > mode;
    let ratio = theta / (1.0 - theta);
    let mut acc = Pass {
        total: 1.0,
        tail: 0.0,
        at: if at == mode { 1.0 } else { 0.0 },
    };

    let mut w = 1.0;
    for i in mode..k {
        w *= ratio * ((k - i) as f64) / ((i + 1) as f64);
        if w < NEGLIGIBLE {
            break;
        }
        acc.total += w;
        if upper && i + 1 >= m {
            acc.tail += w;
        }
        if i + 1 == at {
            acc.at = w;
        }
    }

    let mut w = 1.0;
    for i in (1..=mode).rev() {
        w *= ((i as f64) / ((k - i + 1) as f64)) / ratio;
        if w < NEGLIGIBLE {
            break;
        }
        acc.total += w;
        if !upper && i - 1 < m {
            acc.tail += w;
        }
        if i - 1 == at {
            acc.at = w;
        }
    }
    (acc, upper)
}

/// `P(Bin(k, theta) >= m)`.
pub fn tail_geq(k: u64, theta: f64, m: i64) -> Result<f64, BinomialError> {
    check(k, theta)?;
    if m < 0 || m as u64 > k + 1 {
        return Err(BinomialError::InvalidThreshold { m, max: k + 1 });
    }
    let m = m as u64;
    if m == 0 {
        return Ok(1.0);
    }
    if m > k {
        return Ok(0.0);
    }
    if theta == 0.0 {
        return Ok(0.0);
    }
    if theta == 1.0 {
        return Ok(1.0);
    }
    let (acc, upper) = pass(k, theta, m, u64::MAX);
    let small = acc.tail / acc.total;
    Ok(if upper { small } else { 1.0 - small })
}

/// `P(Bin(k, theta) = i)`; zero for `i > k`.
pub fn pmf(k: u64, theta: f64, i: u64) -> Result<f64, BinomialError> {
    check(k, theta)?;
    if i > k {
        return Ok(0.0);
    }
    if theta == 0.0 {
        return Ok(if i == 0 { 1.0 } else { 0.0 });
    }
    if theta == 1.0 {
        return Ok(if i == k { 1.0 } else { 0.0 });
    }
    let (acc, _) = pass(k, theta, 0, i);
    Ok(acc.at / acc.total)
}
