//! Risk-ratio approximation with the Aranda-Ordaz link family.
//!
//! * [`link_family`]: the transform W_λ, its inverse, and the GLM link `log W_λ`.
//! * [`effect_measures`]: RR, OR, CLR, WR(λ) and the discrepancy B(λ).
//! * [`glm`]: Fisher-scoring fits of binary GLMs for any λ in [0, 1].
//! * [`harness`]: approximation curves, Monte Carlo studies and grid sweeps.

pub mod effect_measures;
pub mod error;
pub mod glm;
pub mod harness;
pub mod link_family;
mod wls;

pub use effect_measures::{
    complementary_log_ratio, discrepancy_b, h_function, lemma1_branch, odds_ratio, risk_ratio, wr,
    Approximation, MeasureReport, RiskPair,
};
pub use error::{DataError, DomainError, GlmError, HarnessError, Stall};
pub use glm::{deviance, fit, wald_interval, Dataset, FitOptions, GlmFit};
pub use link_family::{
    dmu_deta, inverse_link, link, w_inverse, w_transform, Probability, TransformParam,
};
