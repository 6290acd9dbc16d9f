//! Risk ratio, odds ratio, complementary log ratio and the generalized ratio
//! WR(λ) = W_λ(p1) / W_λ(p0), together with the discrepancy
//! B(λ) = max{RR / WR(λ), WR(λ) / RR}.
//!
//! With `a = −log(1 − p0)` and `b = −log(1 − p1)` the generalized ratio is
//! `expm1(λ b) / expm1(λ a)`, which is how [`wr`] evaluates it. WR overstates
//! RR whenever p0 < p1 and understates it whenever p1 < p0, and B(λ) is
//! strictly increasing in λ, so the complementary log ratio (λ = 0) is the
//! member of the family closest to the risk ratio.

use crate::error::DomainError;
use crate::link_family::{neg_log_complement, Probability, TransformParam};

/// Outcome risks without (`p0`) and with (`p1`) exposure.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RiskPair {
    p0: Probability,
    p1: Probability,
}

impl RiskPair {
    pub fn new(p0: f64, p1: f64) -> Result<Self, DomainError> {
        Ok(RiskPair {
            p0: Probability::new(p0)?,
            p1: Probability::new(p1)?,
        })
    }

    pub fn from_probabilities(p0: Probability, p1: Probability) -> Self {
        RiskPair { p0, p1 }
    }

    #[inline]
    pub fn p0(&self) -> f64 {
        self.p0.value()
    }

    #[inline]
    pub fn p1(&self) -> f64 {
        self.p1.value()
    }

    /// Exchanges the exposed and unexposed risks.
    pub fn swapped(&self) -> Self {
        RiskPair {
            p0: self.p1,
            p1: self.p0,
        }
    }
}

/// p1 / p0
pub fn risk_ratio(pair: &RiskPair) -> f64 {
    pair.p1() / pair.p0()
}

/// (p1 / (1 − p1)) / (p0 / (1 − p0))
pub fn odds_ratio(pair: &RiskPair) -> f64 {
    let (p0, p1) = (pair.p0(), pair.p1());
    (p1 * (1.0 - p0)) / (p0 * (1.0 - p1))
}

/// log(1 − p1) / log(1 − p0)
pub fn complementary_log_ratio(pair: &RiskPair) -> f64 {
    (-pair.p1()).ln_1p() / (-pair.p0()).ln_1p()
}

/// WR(λ) = W_λ(p1) / W_λ(p0).
pub fn wr(pair: &RiskPair, lambda: TransformParam) -> f64 {
    let a = neg_log_complement(pair.p0());
    let b = neg_log_complement(pair.p1());
    let lambda = lambda.value();
    if lambda == 0.0 {
        b / a
    } else {
        (lambda * b).exp_m1() / (lambda * a).exp_m1()
    }
}

/// B(λ) = max{RR / WR(λ), WR(λ) / RR}; at least 1, and exactly 1 when p0 = p1.
pub fn discrepancy_b(pair: &RiskPair, lambda: TransformParam) -> f64 {
    let rr = risk_ratio(pair);
    let w = wr(pair, lambda);
    (rr / w).max(w / rr)
}

/// Which side of the risk ratio WR(λ) falls on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Approximation {
    /// WR(λ) > RR; expected whenever p0 < p1.
    Over,
    /// WR(λ) < RR; expected whenever p1 < p0.
    Under,
    /// p0 = p1 (or the two ratios tie in floating point).
    Equal,
}

impl Approximation {
    /// The branch the sign law predicts from the ordering of the risks alone.
    pub fn expected(pair: &RiskPair) -> Self {
        match pair.p0().partial_cmp(&pair.p1()) {
            Some(std::cmp::Ordering::Less) => Approximation::Over,
            Some(std::cmp::Ordering::Greater) => Approximation::Under,
            _ => Approximation::Equal,
        }
    }
}

pub fn lemma1_branch(pair: &RiskPair, lambda: TransformParam) -> Approximation {
    if pair.p0() == pair.p1() {
        return Approximation::Equal;
    }
    let rr = risk_ratio(pair);
    let w = wr(pair, lambda);
    if w > rr {
        Approximation::Over
    } else if w < rr {
        Approximation::Under
    } else {
        Approximation::Equal
    }
}

/// Steps of B(λ) more negative than this count as decreases.
pub const DECREASE_SLACK: f64 = 1e-13;
/// At least one step of B(λ) must exceed this for the increase to count as strict.
pub const STRICT_GAP: f64 = 1e-10;
/// Below this |p1 − p0| the pair is too close to separate B(λ) from a constant
/// in double precision, so only the no-decrease half of the check applies.
pub const TIE_BAND: f64 = 1e-6;

/// Number of ways B(λ) fails to be strictly increasing along `lambdas`
/// (ascending): each step that decreases by more than [`DECREASE_SLACK`], plus
/// one if no step rises by more than [`STRICT_GAP`] while `|p1 − p0| > TIE_BAND`.
/// For `p0 = p1` every value must equal 1 instead.
pub fn monotonicity_violations(pair: &RiskPair, lambdas: &[TransformParam]) -> usize {
    let b: Vec<f64> = lambdas.iter().map(|&l| discrepancy_b(pair, l)).collect();
    if pair.p0() == pair.p1() {
        return b.iter().filter(|&&v| v != 1.0).count();
    }
    let steps: Vec<f64> = b.windows(2).map(|w| w[1] - w[0]).collect();
    let mut violations = steps
        .iter()
        .filter(|&&d| d.is_nan() || d <= -DECREASE_SLACK)
        .count();
    let separable = (pair.p1() - pair.p0()).abs() > TIE_BAND;
    if separable && !steps.is_empty() && !steps.iter().any(|&d| d > STRICT_GAP) {
        violations += 1;
    }
    violations
}

/// Below this argument [`h_function`] returns its limit 1.
pub const H_SMALL_ARGUMENT: f64 = 1e-12;

/// h(x) = x eˣ / (eˣ − 1), evaluated as x / (−expm1(−x)). Strictly increasing on x > 0.
pub fn h_function(x: f64) -> Result<f64, DomainError> {
    if x.is_nan() || x <= 0.0 {
        return Err(DomainError::NonPositiveArgument(x));
    }
    if x < H_SMALL_ARGUMENT {
        return Ok(1.0);
    }
    Ok(x / -(-x).exp_m1())
}

/// WR(λ) and B(λ) at one λ.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LambdaMeasure {
    pub lambda: TransformParam,
    pub wr: f64,
    pub b: f64,
}

/// Every measure for one risk pair.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasureReport {
    pub pair: RiskPair,
    pub rr: f64,
    pub or: f64,
    pub clr: f64,
    /// One entry per requested λ, in the order requested.
    pub by_lambda: Vec<LambdaMeasure>,
}

impl MeasureReport {
    pub fn new(pair: RiskPair, lambdas: &[TransformParam]) -> Self {
        MeasureReport {
            pair,
            rr: risk_ratio(&pair),
            or: odds_ratio(&pair),
            clr: complementary_log_ratio(&pair),
            by_lambda: lambdas
                .iter()
                .map(|&lambda| LambdaMeasure {
                    lambda,
                    wr: wr(&pair, lambda),
                    b: discrepancy_b(&pair, lambda),
                })
                .collect(),
        }
    }
}
