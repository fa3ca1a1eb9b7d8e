//! Mean-field maps of the biased majority processes.
//!
//! For odd `k` the edge-bias map is `F(x) = P(Bin(k, (1-p)x) >= (k+1)/2)` and
//! the node-bias map is `F^(x) = (1-p) P(Bin(k, x) >= (k+1)/2)`; the two are
//! related by `F^(x) = (1-p) F(x/(1-p))`. Iterating either map from the
//! initial R-probability gives the per-node R-probability on the infinite
//! tree. The nontrivial fixed points `phi- < phi+` exist only below the
//! critical bias `p*_k`; the node-bias fixed points are the edge-bias ones
//! scaled by `1-p`, and `p*_k` is shared.

use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use thiserror::Error;

use crate::binomial::{self, BinomialError, MAX_TRIALS};
use crate::bisect::{bisect_predicate, bisect_root};

/// Default solver tolerance.
pub const DEFAULT_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum MeanFieldError {
    #[error("bias p = {0} is outside [0, 1]")]
    InvalidBias(f64),
    #[error("sample size must be at least 1")]
    ZeroSampleSize,
    #[error("sample size {0} exceeds the supported maximum of {MAX_TRIALS}")]
    SampleSizeTooLarge(u32),
    #[error("sample size {0} is even; use the even-k evaluator")]
    EvenSampleSize(u32),
    #[error("sample size {0} is odd; use the odd-k evaluator")]
    OddSampleSize(u32),
    #[error("argument {0} is outside [0, 1]")]
    OutOfDomain(f64),
    #[error("initial fraction q = {0} must lie in (1/2, 1]")]
    InvalidInitialFraction(f64),
    #[error("tolerance {0} must be positive")]
    InvalidTolerance(f64),
    #[error("k = 1 (voter) has no nontrivial critical bias")]
    NoCriticalBias,
    #[error("k = 1 with p = 0 is the identity map; every point is fixed")]
    IdentityMap,
    #[error(transparent)]
    Binomial(#[from] BinomialError),
}

/// Where the adversarial bias acts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum BiasMode {
    /// Each transmitted R state is read as B with probability `p`.
    #[cfg_attr(feature = "serde", serde(rename = "edge"))]
    EdgeBias,
    /// Each node adopts B outright with probability `p` every round.
    #[cfg_attr(feature = "serde", serde(rename = "node"))]
    NodeBias,
}

impl BiasMode {
    pub fn as_str(self) -> &'static str {
        match self {
            BiasMode::EdgeBias => "edge",
            BiasMode::NodeBias => "node",
        }
    }
}

impl fmt::Display for BiasMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for BiasMode {
    type Err = alloc::string::String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "edge" => Ok(BiasMode::EdgeBias),
            "node" => Ok(BiasMode::NodeBias),
            other => Err(alloc::format!("unknown bias mode `{other}` (expected edge or node)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MeanFieldParams {
    pub k: u32,
    pub p: f64,
    pub mode: BiasMode,
}

impl MeanFieldParams {
    pub fn new(k: u32, p: f64, mode: BiasMode) -> Result<Self, MeanFieldError> {
        let params = MeanFieldParams { k, p, mode };
        params.validate()?;
        Ok(params)
    }

    pub fn edge(k: u32, p: f64) -> Result<Self, MeanFieldError> {
        Self::new(k, p, BiasMode::EdgeBias)
    }

    pub fn node(k: u32, p: f64) -> Result<Self, MeanFieldError> {
        Self::new(k, p, BiasMode::NodeBias)
    }

    pub fn validate(&self) -> Result<(), MeanFieldError> {
        if self.k == 0 {
            return Err(MeanFieldError::ZeroSampleSize);
        }
        if u64::from(self.k) > MAX_TRIALS {
            return Err(MeanFieldError::SampleSizeTooLarge(self.k));
        }
        if !(0.0..=1.0).contains(&self.p) {
            return Err(MeanFieldError::InvalidBias(self.p));
        }
        Ok(())
    }

    /// One step of the mean-field recursion for any `k`, routing even sample
    /// sizes through [`eval_f_even`].
    pub fn map(&self, x: f64) -> Result<f64, MeanFieldError> {
        if self.k % 2 == 1 {
            eval_f(self, x)
        } else {
            eval_f_even(self, x)
        }
    }

    /// The equivalent odd sample size (`k - 1` for even `k`).
    pub fn odd_equivalent(&self) -> MeanFieldParams {
        MeanFieldParams {
            k: if self.k % 2 == 0 { self.k - 1 } else { self.k },
            ..*self
        }
    }

    /// `1/(2(1-p))`: the edge-bias inflection point (above 1 for `p > 1/2`).
    pub fn inflection(&self) -> f64 {
        match self.mode {
            BiasMode::EdgeBias => 0.5 / (1.0 - self.p),
            BiasMode::NodeBias => 0.5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Regime {
    /// Two nontrivial fixed points `phi- < phi+`.
    Subcritical,
    /// The two nontrivial fixed points coincide (within tolerance).
    Critical,
    /// Zero is the only fixed point.
    Supercritical,
}

impl Regime {
    pub fn as_str(self) -> &'static str {
        match self {
            Regime::Subcritical => "subcritical",
            Regime::Critical => "critical",
            Regime::Supercritical => "supercritical",
        }
    }

    pub fn has_nontrivial_root(self) -> bool {
        self != Regime::Supercritical
    }
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FixedPointSet {
    pub regime: Regime,
    pub phi_minus: Option<f64>,
    pub phi_plus: Option<f64>,
    /// Abscissa in the concave region where the derivative equals one.
    pub mu: Option<f64>,
    pub trivial_root: f64,
}

impl FixedPointSet {
    fn supercritical(mu: Option<f64>) -> Self {
        FixedPointSet {
            regime: Regime::Supercritical,
            phi_minus: None,
            phi_plus: None,
            mu,
            trivial_root: 0.0,
        }
    }

    /// All roots of `F(x) = x` in ascending order, without repetition.
    pub fn roots(&self) -> Vec<f64> {
        let mut roots = alloc::vec![self.trivial_root];
        match self.regime {
            Regime::Subcritical => {
                roots.extend(self.phi_minus);
                roots.extend(self.phi_plus);
            }
            Regime::Critical => roots.extend(self.phi_minus),
            Regime::Supercritical => {}
        }
        roots
    }

    fn scaled(self, factor: f64) -> Self {
        FixedPointSet {
            phi_minus: self.phi_minus.map(|v| v * factor),
            phi_plus: self.phi_plus.map(|v| v * factor),
            mu: self.mu.map(|v| v * factor),
            ..self
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CriticalValues {
    pub p_star_k: f64,
    pub p_star_kq: Option<f64>,
    pub k: u32,
    pub q: Option<f64>,
    pub tolerance: f64,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Trajectory {
    pub q0: f64,
    pub values: Vec<f64>,
    pub params: MeanFieldParams,
}

impl Trajectory {
    pub fn last(&self) -> f64 {
        *self.values.last().expect("trajectory holds q0")
    }
}

fn check_x(x: f64) -> Result<(), MeanFieldError> {
    if (0.0..=1.0).contains(&x) {
        Ok(())
    } else {
        Err(MeanFieldError::OutOfDomain(x))
    }
}

fn require_odd(params: &MeanFieldParams) -> Result<(), MeanFieldError> {
    params.validate()?;
    if params.k % 2 == 0 {
        Err(MeanFieldError::EvenSampleSize(params.k))
    } else {
        Ok(())
    }
}

/// Success probability fed to the binomial and the outer factor.
fn split(params: &MeanFieldParams, x: f64) -> (f64, f64) {
    let keep = 1.0 - params.p;
    match params.mode {
        BiasMode::EdgeBias => ((keep * x).min(1.0), 1.0),
        BiasMode::NodeBias => (x, keep),
    }
}

/// `F_{p,k}(x)` (edge bias) or `F^_{p,k}(x)` (node bias) for odd `k`.
pub fn eval_f(params: &MeanFieldParams, x: f64) -> Result<f64, MeanFieldError> {
    require_odd(params)?;
    check_x(x)?;
    let k = u64::from(params.k);
    let (theta, factor) = split(params, x);
    Ok(factor * binomial::tail_geq(k, theta, ((k + 1) / 2) as i64)?)
}

/// The even-`k` map: strict majority plus half the tie probability.
pub fn eval_f_even(params: &MeanFieldParams, x: f64) -> Result<f64, MeanFieldError> {
    params.validate()?;
    if params.k % 2 == 1 {
        return Err(MeanFieldError::OddSampleSize(params.k));
    }
    check_x(x)?;
    let k = u64::from(params.k);
    let half = k / 2;
    let (theta, factor) = split(params, x);
    let above = binomial::tail_geq(k, theta, (half + 1) as i64)?;
    let tie = binomial::pmf(k, theta, half)?;
    Ok(factor * (above + 0.5 * tie))
}

/// First derivative in `x`, `k(1-p) P(Bin(k-1, theta) = (k-1)/2)`.
pub fn eval_df(params: &MeanFieldParams, x: f64) -> Result<f64, MeanFieldError> {
    require_odd(params)?;
    check_x(x)?;
    let k = u64::from(params.k);
    let (theta, _) = split(params, x);
    let centre = binomial::pmf(k - 1, theta, (k - 1) / 2)?;
    Ok((k as f64) * (1.0 - params.p) * centre)
}

/// Second derivative in `x`. Identically zero for `k = 1`.
///
/// With `u = (1-p)x` the edge-bias value is
/// `2k(k-2)(1-p)^2 P(Bin(k-3, u) = (k-3)/2)(1-2u)`, positive exactly below the
/// inflection point `1/(2(1-p))`. The node-bias value carries a single `(1-p)`
/// factor and changes sign at `1/2`.
pub fn eval_d2f(params: &MeanFieldParams, x: f64) -> Result<f64, MeanFieldError> {
    require_odd(params)?;
    check_x(x)?;
    if params.k == 1 {
        return Ok(0.0);
    }
    let k = u64::from(params.k);
    let keep = 1.0 - params.p;
    let (theta, chain) = match params.mode {
        BiasMode::EdgeBias => ((keep * x).min(1.0), keep * keep),
        BiasMode::NodeBias => (x, keep),
    };
    let centre = binomial::pmf(k - 3, theta, (k - 3) / 2)?;
    let coeff = 2.0 * (k as f64) * ((k - 2) as f64);
    Ok(coeff * chain * centre * (1.0 - 2.0 * theta))
}

fn check_tol(tol: f64) -> Result<(), MeanFieldError> {
    if tol > 0.0 && tol.is_finite() {
        Ok(())
    } else {
        Err(MeanFieldError::InvalidTolerance(tol))
    }
}

/// Edge-bias fixed points; see [`fixed_points`].
fn edge_fixed_points(k: u32, p: f64, tol: f64) -> Result<FixedPointSet, MeanFieldError> {
    if p >= 0.5 {
        return Ok(FixedPointSet::supercritical(None));
    }
    if k == 1 {
        return if p == 0.0 {
            Err(MeanFieldError::IdentityMap)
        } else {
            Ok(FixedPointSet::supercritical(None))
        };
    }
    let params = MeanFieldParams::edge(k, p)?;
    let f = |x: f64| eval_f(&params, x).expect("validated");
    let df = |x: f64| eval_df(&params, x).expect("validated");
    let psi = |x: f64| f(x) - x;

    // F is concave on [lo, 1], so F' decreases there and psi peaks at mu.
    let lo = params.inflection();
    let (mu, interior) = if df(lo) <= 1.0 {
        (lo, false)
    } else if df(1.0) >= 1.0 {
        (1.0, false)
    } else {
        (bisect_root(lo, 1.0, |x| df(x) - 1.0), true)
    };
    let gap = psi(mu);
    let tangency = interior.then_some(mu);

    if gap > tol {
        let phi_minus = bisect_root(lo, mu, psi);
        let phi_plus = bisect_root(mu, 1.0, psi);
        Ok(FixedPointSet {
            regime: Regime::Subcritical,
            phi_minus: Some(phi_minus),
            phi_plus: Some(phi_plus),
            mu: tangency,
            trivial_root: 0.0,
        })
    } else if gap.abs() <= tol {
        Ok(FixedPointSet {
            regime: Regime::Critical,
            phi_minus: Some(mu),
            phi_plus: Some(mu),
            mu: Some(mu),
            trivial_root: 0.0,
        })
    } else {
        Ok(FixedPointSet::supercritical(tangency))
    }
}

/// All solutions of `F(x) = x` on `[0, 1]` and the regime they imply.
///
/// Nontrivial roots are only searched above the inflection point: the map
/// lies below the diagonal on the convex part. The node-bias roots are the
/// edge-bias roots scaled by `1-p`.
pub fn fixed_points(params: &MeanFieldParams, tol: f64) -> Result<FixedPointSet, MeanFieldError> {
    require_odd(params)?;
    check_tol(tol)?;
    let edge = edge_fixed_points(params.k, params.p, tol)?;
    Ok(match params.mode {
        BiasMode::EdgeBias => edge,
        BiasMode::NodeBias => edge.scaled(1.0 - params.p),
    })
}

/// Fixed points for `k = 3` (edge bias) from the quadratic
/// `2(1-p)^3 x^2 - 3(1-p)^2 x + 1 = 0`; the discriminant `(1-p)^3 (1-9p)`
/// decides the regime.
pub fn closed_form_k3(p: f64) -> FixedPointSet {
    let a = 1.0 - p;
    if !(0.0..1.0).contains(&p) {
        return FixedPointSet::supercritical(None);
    }
    let a2 = a * a;
    let a3 = a2 * a;
    // F'(x) = 6 a^2 x (1 - a x) = 1, larger root.
    let mu_disc = 36.0 * a2 * a2 - 24.0 * a3;
    let mu = (mu_disc >= 0.0).then(|| (6.0 * a2 + libm::sqrt(mu_disc)) / (12.0 * a3));
    let disc = a3 * (1.0 - 9.0 * p);
    if disc < 0.0 {
        FixedPointSet::supercritical(mu)
    } else if disc == 0.0 {
        let phi = 3.0 * a2 / (4.0 * a3);
        FixedPointSet {
            regime: Regime::Critical,
            phi_minus: Some(phi),
            phi_plus: Some(phi),
            mu: Some(phi),
            trivial_root: 0.0,
        }
    } else {
        let root = libm::sqrt(disc);
        FixedPointSet {
            regime: Regime::Subcritical,
            phi_minus: Some((3.0 * a2 - root) / (4.0 * a3)),
            phi_plus: Some((3.0 * a2 + root) / (4.0 * a3)),
            mu,
            trivial_root: 0.0,
        }
    }
}

fn require_critical_k(k: u32) -> Result<(), MeanFieldError> {
    if k == 1 {
        return Err(MeanFieldError::NoCriticalBias);
    }
    require_odd(&MeanFieldParams {
        k,
        p: 0.0,
        mode: BiasMode::EdgeBias,
    })
}

fn has_nontrivial_root(k: u32, p: f64, tol: f64) -> bool {
    edge_fixed_points(k, p, tol)
        .map(|fp| fp.regime.has_nontrivial_root())
        .unwrap_or(false)
}

/// Largest bias admitting a nontrivial fixed point, to within `tol`.
///
/// The returned value is the last bisection point still found subcritical or
/// critical, so `fixed_points` at the returned bias reports a nontrivial root.
pub fn critical_bias_k(k: u32, tol: f64) -> Result<CriticalValues, MeanFieldError> {
    require_critical_k(k)?;
    check_tol(tol)?;
    let mut lo = 1.0 / 9.0;
    if !has_nontrivial_root(k, lo, tol) {
        lo = 0.0;
    }
    let (p_star, _) = bisect_predicate(lo, 0.5, tol, |p| has_nontrivial_root(k, p, tol));
    Ok(CriticalValues {
        p_star_k: p_star,
        p_star_kq: None,
        k,
        q: None,
        tolerance: tol,
    })
}

/// Critical bias under Bernoulli(`q`) initialization: the largest
/// `p <= p*_k` whose unstable fixed point `phi-` does not exceed `q`.
pub fn critical_bias_kq(k: u32, q: f64, tol: f64) -> Result<CriticalValues, MeanFieldError> {
    if !(q > 0.5 && q <= 1.0) {
        return Err(MeanFieldError::InvalidInitialFraction(q));
    }
    let mut values = critical_bias_k(k, tol)?;
    let below = |p: f64| {
        edge_fixed_points(k, p, tol)
            .ok()
            .and_then(|fp| fp.phi_minus)
            .is_some_and(|phi| phi <= q)
    };
    let p_kq = if below(values.p_star_k) {
        values.p_star_k
    } else {
        bisect_predicate(0.0, values.p_star_k, tol, below).0
    };
    values.p_star_kq = Some(p_kq);
    values.q = Some(q);
    Ok(values)
}

/// `q_0 = q0`, `q_{t+1} = F(q_t)` for `rounds` steps (any `k`).
pub fn trajectory(
    params: &MeanFieldParams,
    q0: f64,
    rounds: usize,
) -> Result<Trajectory, MeanFieldError> {
    params.validate()?;
    check_x(q0)?;
    let mut values = Vec::with_capacity(rounds + 1);
    values.push(q0);
    let mut q = q0;
    for _ in 0..rounds {
        q = params.map(q)?;
        values.push(q);
    }
    Ok(Trajectory {
        q0,
        values,
        params: *params,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn edge(k: u32, p: f64) -> MeanFieldParams {
        MeanFieldParams::edge(k, p).unwrap()
    }

    fn node(k: u32, p: f64) -> MeanFieldParams {
        MeanFieldParams::node(k, p).unwrap()
    }

    #[test]
    fn k3_critical_point_is_fixed() {
        let v = eval_f(&edge(3, 1.0 / 9.0), 27.0 / 32.0).unwrap();
        assert!((v - 0.84375).abs() < 1e-15);
    }

    #[test]
    fn half_at_inflection() {
        for k in [1, 3, 5, 11, 51] {
            for p in [0.0, 0.1, 0.25, 0.49] {
                let params = edge(k, p);
                let v = eval_f(&params, params.inflection()).unwrap();
                assert!((v - 0.5).abs() < 1e-15, "k={k} p={p} v={v}");
            }
        }
    }

    #[test]
    fn node_bias_symmetry_value() {
        let v = eval_f(&node(3, 0.2), 0.5).unwrap();
        assert!((v - 0.4).abs() < 1e-15);
    }

    #[test]
    fn anchors() {
        for k in [1, 3, 7] {
            for p in [0.01, 0.3, 0.99] {
                for params in [edge(k, p), node(k, p)] {
                    assert_eq!(eval_f(&params, 0.0).unwrap(), 0.0);
                    assert!(eval_f(&params, 1.0).unwrap() < 1.0);
                }
            }
        }
    }

    #[test]
    fn even_examples() {
        let v = eval_f_even(&edge(4, 0.0), 0.5).unwrap();
        assert!((v - 0.5).abs() < 1e-15);
        let v = eval_f_even(&edge(4, 1.0 / 9.0), 27.0 / 32.0).unwrap();
        assert!((v - 27.0 / 32.0).abs() < 1e-14);
        assert_eq!(eval_f_even(&node(2, 1.0), 1.0).unwrap(), 0.0);
    }

    #[test]
    fn parity_is_enforced() {
        assert_eq!(
            eval_f(&edge(4, 0.1), 0.5),
            Err(MeanFieldError::EvenSampleSize(4))
        );
        assert_eq!(
            eval_f_even(&edge(3, 0.1), 0.5),
            Err(MeanFieldError::OddSampleSize(3))
        );
        assert_eq!(
            eval_df(&edge(2, 0.1), 0.5),
            Err(MeanFieldError::EvenSampleSize(2))
        );
        assert_eq!(
            eval_f(&edge(3, 0.1), 1.5),
            Err(MeanFieldError::OutOfDomain(1.5))
        );
        assert_eq!(
            MeanFieldParams::edge(3, -0.1),
            Err(MeanFieldError::InvalidBias(-0.1))
        );
        assert_eq!(
            MeanFieldParams::edge(0, 0.1),
            Err(MeanFieldError::ZeroSampleSize)
        );
    }

    #[test]
    fn derivative_examples() {
        assert!((eval_df(&edge(3, 0.0), 0.5).unwrap() - 1.5).abs() < 1e-15);
        assert_eq!(eval_df(&edge(3, 1.0), 0.7).unwrap(), 0.0);
        // 5 * 0.9 * C(4,2) * 0.54^2 * 0.46^2
        let want = 5.0 * 0.9 * 6.0 * 0.54f64.powi(2) * 0.46f64.powi(2);
        assert!((eval_df(&edge(5, 0.1), 0.6).unwrap() - want).abs() < 1e-14);
    }

    #[test]
    fn second_derivative_examples() {
        let p = 0.2;
        let at = edge(3, p).inflection();
        assert!(eval_d2f(&edge(3, p), at).unwrap().abs() < 1e-15);
        assert!((eval_d2f(&edge(3, 0.0), 0.25).unwrap() - 3.0).abs() < 1e-14);
        assert!((eval_d2f(&edge(3, 0.0), 0.75).unwrap() + 3.0).abs() < 1e-14);
        assert_eq!(eval_d2f(&edge(1, 0.3), 0.4).unwrap(), 0.0);
    }

    #[test]
    fn second_derivative_k3_closed_form() {
        // F = 3a^2 x^2 - 2a^3 x^3  =>  F'' = 6a^2 (1 - 2ax).
        for p in [0.05, 0.2, 0.4] {
            let a: f64 = 1.0 - p;
            for x in [0.1, 0.5, 0.9] {
                let want = 6.0 * a * a * (1.0 - 2.0 * a * x);
                let got = eval_d2f(&edge(3, p), x).unwrap();
                assert!((got - want).abs() < 1e-13, "p={p} x={x} {got} {want}");
            }
        }
    }

    #[test]
    fn fixed_points_k3() {
        let fp = fixed_points(&edge(3, 1.0 / 9.0), DEFAULT_TOL).unwrap();
        assert_eq!(fp.regime, Regime::Critical);
        assert!((fp.phi_minus.unwrap() - 27.0 / 32.0).abs() < 1e-9);

        let fp = fixed_points(&edge(3, 0.0), DEFAULT_TOL).unwrap();
        assert_eq!(fp.regime, Regime::Subcritical);
        assert!((fp.phi_minus.unwrap() - 0.5).abs() < 1e-12);
        assert!((fp.phi_plus.unwrap() - 1.0).abs() < 1e-12);

        let fp = fixed_points(&edge(3, 0.05), DEFAULT_TOL).unwrap();
        assert!((fp.phi_minus.unwrap() - 0.589_240_549_933_504_7).abs() < 1e-12);
        assert!((fp.phi_plus.unwrap() - 0.989_706_818_487_547_9).abs() < 1e-12);
        let mu = fp.mu.unwrap();
        assert!(fp.phi_minus.unwrap() < mu && mu < fp.phi_plus.unwrap());

        let fp = fixed_points(&edge(3, 0.3), DEFAULT_TOL).unwrap();
        assert_eq!(fp.regime, Regime::Supercritical);
        assert_eq!(fp.roots(), alloc::vec![0.0]);
    }

    #[test]
    fn fixed_points_node_bias_scale() {
        let e = fixed_points(&edge(3, 0.05), DEFAULT_TOL).unwrap();
        let n = fixed_points(&node(3, 0.05), DEFAULT_TOL).unwrap();
        assert!((n.phi_plus.unwrap() - 0.95 * e.phi_plus.unwrap()).abs() < 1e-15);
        assert!((n.phi_plus.unwrap() - 0.940_221_477_563_170_5).abs() < 1e-12);
        assert!((n.phi_minus.unwrap() - 0.95 * e.phi_minus.unwrap()).abs() < 1e-15);
        let params = node(3, 0.05);
        for phi in [n.phi_minus.unwrap(), n.phi_plus.unwrap()] {
            assert!((eval_f(&params, phi).unwrap() - phi).abs() < 1e-10);
            assert!(phi > 0.5 && phi <= 0.95);
        }
    }

    #[test]
    fn large_bias_is_supercritical() {
        for p in [0.5, 0.7, 1.0] {
            let fp = fixed_points(&edge(101, p), DEFAULT_TOL).unwrap();
            assert_eq!(fp.regime, Regime::Supercritical);
        }
    }

    #[test]
    fn voter_fixed_points() {
        assert_eq!(
            fixed_points(&edge(1, 0.0), DEFAULT_TOL),
            Err(MeanFieldError::IdentityMap)
        );
        let fp = fixed_points(&edge(1, 0.2), DEFAULT_TOL).unwrap();
        assert_eq!(fp.regime, Regime::Supercritical);
        assert_eq!(critical_bias_k(1, DEFAULT_TOL), Err(MeanFieldError::NoCriticalBias));
    }

    #[test]
    fn closed_form_examples() {
        let fp = closed_form_k3(1.0 / 9.0);
        assert_eq!(fp.regime, Regime::Critical);
        assert_eq!(fp.phi_minus, Some(27.0 / 32.0));
        assert_eq!(closed_form_k3(0.2).regime, Regime::Supercritical);
        let fp = closed_form_k3(0.0);
        assert_eq!(fp.phi_minus, Some(0.5));
        assert_eq!(fp.phi_plus, Some(1.0));
        assert_eq!(closed_form_k3(1.0).regime, Regime::Supercritical);
    }

    #[test]
    fn solver_matches_closed_form_on_grid() {
        for i in 0..=11 {
            let p = i as f64 / 100.0;
            let solved = fixed_points(&edge(3, p), DEFAULT_TOL).unwrap();
            let exact = closed_form_k3(p);
            assert_eq!(solved.regime, exact.regime, "p={p}");
            for (a, b) in [
                (solved.phi_minus, exact.phi_minus),
                (solved.phi_plus, exact.phi_plus),
                (solved.mu, exact.mu),
            ] {
                assert!((a.unwrap() - b.unwrap()).abs() < 1e-9, "p={p}");
            }
        }
    }

    #[test]
    fn critical_k3() {
        let cv = critical_bias_k(3, DEFAULT_TOL).unwrap();
        assert!((cv.p_star_k - 1.0 / 9.0).abs() < 1e-9);
        assert_eq!(
            critical_bias_k(4, DEFAULT_TOL),
            Err(MeanFieldError::EvenSampleSize(4))
        );
    }

    #[test]
    fn critical_kq() {
        let q1 = critical_bias_kq(3, 1.0, DEFAULT_TOL).unwrap();
        assert_eq!(q1.p_star_kq, Some(q1.p_star_k));

        // Independent: invert the closed-form phi- by bisection on p.
        let (lo, _) = bisect_predicate(0.0, 1.0 / 9.0, 1e-14, |p| {
            closed_form_k3(p).phi_minus.is_some_and(|v| v <= 0.6)
        });
        let q06 = critical_bias_kq(3, 0.6, DEFAULT_TOL).unwrap();
        assert!((q06.p_star_kq.unwrap() - lo).abs() < 1e-9);
        assert!((lo - 0.054_885_128_579_552_94).abs() < 1e-12);

        let q051 = critical_bias_kq(3, 0.51, DEFAULT_TOL).unwrap();
        assert!(q051.p_star_kq.unwrap() < q06.p_star_kq.unwrap());
        assert_eq!(
            critical_bias_kq(3, 0.5, DEFAULT_TOL),
            Err(MeanFieldError::InvalidInitialFraction(0.5))
        );
    }

    #[test]
    fn trajectory_examples() {
        let t = trajectory(&edge(3, 0.05), 1.0, 1).unwrap();
        assert!((t.values[1] - 0.99275).abs() < 1e-15);

        let t = trajectory(&edge(3, 0.05), 1.0, 200).unwrap();
        assert!((t.last() - 0.989_706_818_487_547_9).abs() < 1e-9);

        let t = trajectory(&edge(3, 0.2), 1.0, 200).unwrap();
        assert!(t.last() < 1e-6);

        let t = trajectory(&edge(4, 0.05), 1.0, 0).unwrap();
        assert_eq!(t.values, alloc::vec![1.0]);
    }
}
