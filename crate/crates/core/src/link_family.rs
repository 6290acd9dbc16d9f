//! The Aranda-Ordaz transformation family
//!
//! ```text
//! W_λ(θ) = ((1 − θ)^(−λ) − 1) / λ     0 < λ ≤ 1
//! W_0(θ) = −log(1 − θ)
//! ```
//!
//! and the binary-GLM link `η = log W_λ(θ)` built on it. λ = 1 gives the odds
//! `θ / (1 − θ)` (logit link) and λ = 0 gives `−log(1 − θ)` (complementary
//! log-log link).
//!
//! Everything is evaluated through `a = −log1p(−θ)` and `expm1(λ a) / λ`, which
//! stays accurate as λ → 0 where the textbook form cancels catastrophically.

use crate::error::DomainError;

/// Clamp applied to fitted means inside IRLS and to [`inverse_link`].
pub const MEAN_EPSILON: f64 = 1e-12;

/// The transformation parameter λ ∈ [0, 1].
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct TransformParam(f64);

impl TransformParam {
    /// λ = 1, the logistic model.
    pub const LOGIT: TransformParam = TransformParam(1.0);
    /// λ = 0, the complementary log-log model.
    pub const CLOGLOG: TransformParam = TransformParam(0.0);

    pub fn new(lambda: f64) -> Result<Self, DomainError> {
        if (0.0..=1.0).contains(&lambda) {
            // normalise -0.0 so that the λ = 0 branch is taken
            Ok(TransformParam(if lambda == 0.0 { 0.0 } else { lambda }))
        } else {
            Err(DomainError::Lambda(lambda))
        }
    }

    #[inline]
    pub fn value(self) -> f64 {
        self.0
    }

    /// `steps + 1` evenly spaced values from 0 to 1 inclusive.
    pub fn even_grid(steps: usize) -> Vec<TransformParam> {
        let steps = steps.max(1);
        (0..=steps)
            .map(|i| TransformParam(i as f64 / steps as f64))
            .collect()
    }
}

impl std::fmt::Display for TransformParam {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        self.0.fmt(f)
    }
}

/// A probability strictly inside (0, 1).
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Probability(f64);

impl Probability {
    pub fn new(value: f64) -> Result<Self, DomainError> {
        if value > 0.0 && value < 1.0 {
            Ok(Probability(value))
        } else {
            Err(DomainError::Probability(value))
        }
    }

    /// Clamps into `[MEAN_EPSILON, 1 − MEAN_EPSILON]`. NaN maps to 1/2.
    pub fn clamped(value: f64) -> Self {
        if value.is_nan() {
            return Probability(0.5);
        }
        Probability(value.clamp(MEAN_EPSILON, 1.0 - MEAN_EPSILON))
    }

    #[inline]
    pub fn value(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for Probability {
    type Error = DomainError;

    fn try_from(value: f64) -> Result<Self, Self::Error> {
        Probability::new(value)
    }
}

/// `−log(1 − θ)`, the λ = 0 member and the common exponent of every member.
#[inline]
pub(crate) fn neg_log_complement(theta: f64) -> f64 {
    -(-theta).ln_1p()
}

/// `expm1(λ a) / λ`, with the exact limit `a` at λ = 0.
#[inline]
pub(crate) fn scaled_expm1(a: f64, lambda: f64) -> f64 {
    if lambda == 0.0 {
        a
    } else {
        (lambda * a).exp_m1() / lambda
    }
}

/// W_λ(θ). Always positive.
pub fn w_transform(theta: Probability, lambda: TransformParam) -> f64 {
    scaled_expm1(neg_log_complement(theta.value()), lambda.value())
}

/// Inverse of [`w_transform`]: `θ = 1 − (1 + λw)^(−1/λ)`, or `1 − e^(−w)` at λ = 0.
pub fn w_inverse(w: f64, lambda: TransformParam) -> Result<Probability, DomainError> {
    if !(w > 0.0 && w.is_finite()) {
        return Err(DomainError::NonPositive(w));
    }
    let theta = -(-neg_log_complement_of_w(w, lambda.value())).exp_m1();
    Probability::new(theta).map_err(|_| DomainError::Saturated(w))
}

/// `a = log1p(λ w) / λ`, i.e. `−log(1 − θ)` recovered from `w`.
#[inline]
fn neg_log_complement_of_w(w: f64, lambda: f64) -> f64 {
    if lambda == 0.0 {
        w
    } else {
        (lambda * w).ln_1p() / lambda
    }
}

/// The GLM link `η = log W_λ(θ)`; strictly increasing in θ.
pub fn link(theta: Probability, lambda: TransformParam) -> f64 {
    w_transform(theta, lambda).ln()
}

/// `θ = 1 − (1 + λ e^η)^(−1/λ)` (λ > 0) or `1 − exp(−e^η)` (λ = 0), clamped
/// into `[MEAN_EPSILON, 1 − MEAN_EPSILON]`. λ = 1 is the logistic sigmoid.
pub fn inverse_link(eta: f64, lambda: TransformParam) -> Probability {
    Probability::clamped(inverse_link_unclamped(eta, lambda.value()))
}

#[inline]
pub(crate) fn inverse_link_unclamped(eta: f64, lambda: f64) -> f64 {
    let a = neg_log_complement_of_w(eta.exp(), lambda);
    -(-a).exp_m1()
}

/// dθ/dη = e^η (1 + λ e^η)^(−1/λ − 1), or e^η exp(−e^η) at λ = 0.
pub fn dmu_deta(eta: f64, lambda: TransformParam) -> f64 {
    let lambda = lambda.value();
    let w = eta.exp();
    let log_d = if lambda == 0.0 {
        eta - w
    } else {
        eta - (1.0 / lambda + 1.0) * (lambda * w).ln_1p()
    };
    log_d.exp()
}
