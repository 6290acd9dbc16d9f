//! Binary-outcome GLMs with link `η = log W_λ(θ)`, fitted by Fisher scoring
//! (iteratively reweighted least squares).
//!
//! The linear predictor is `β0 + β1·exposure + Σ βj·covariate_j`, so
//! `exp(β1)` estimates WR(λ) for the exposure: the odds ratio at λ = 1 and the
//! complementary log ratio at λ = 0.

use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{DataError, GlmError, Stall};
use crate::link_family::{dmu_deta, inverse_link, link, Probability, TransformParam, MEAN_EPSILON};
use crate::wls::{Matrix, PivotedQr};

pub const INTERCEPT_NAME: &str = "(Intercept)";

/// Coefficients larger than this in magnitude at convergence raise a separation warning.
pub const SEPARATION_THRESHOLD: f64 = 30.0;

/// Maximum number of step halvings per iteration.
pub const MAX_HALVINGS: usize = 20;

/// Binary outcome, binary exposure, and optional real covariates.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    outcome: Vec<f64>,
    exposure: Option<Vec<f64>>,
    exposure_name: String,
    covariates: Vec<Vec<f64>>,
    covariate_names: Vec<String>,
    weights: Option<Vec<f64>>,
}

fn check_binary(column: &str, values: &[f64]) -> Result<(), DataError> {
    for (row, &value) in values.iter().enumerate() {
        if value != 0.0 && value != 1.0 {
            return Err(DataError::NonBinary {
                column: column.to_string(),
                row,
                value,
            });
        }
    }
    Ok(())
}

impl Dataset {
    pub fn new(outcome: Vec<f64>, exposure: Vec<f64>) -> Result<Self, DataError> {
        let mut data = Dataset::intercept_only(outcome)?;
        data.check_length("exposure", exposure.len())?;
        check_binary("exposure", &exposure)?;
        data.exposure = Some(exposure);
        Ok(data)
    }

    /// A dataset without an exposure column; fits estimate the intercept only.
    pub fn intercept_only(outcome: Vec<f64>) -> Result<Self, DataError> {
        if outcome.is_empty() {
            return Err(DataError::Empty);
        }
        check_binary("outcome", &outcome)?;
        Ok(Dataset {
            outcome,
            exposure: None,
            exposure_name: "exposure".to_string(),
            covariates: Vec::new(),
            covariate_names: Vec::new(),
            weights: None,
        })
    }

    /// Grouped form of a two-arm study: `events0` of `n0` unexposed and
    /// `events1` of `n1` exposed subjects, stored as four weighted rows.
    pub fn two_group(events0: u64, n0: u64, events1: u64, n1: u64) -> Result<Self, DataError> {
        for (row, (e, n)) in [(events0, n0), (events1, n1)].into_iter().enumerate() {
            if e > n {
                return Err(DataError::BadWeight {
                    row,
                    value: (n as f64) - (e as f64),
                });
            }
        }
        Dataset::new(vec![1.0, 0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0, 1.0])?.with_frequency_weights(
            vec![
                events0 as f64,
                (n0 - events0) as f64,
                events1 as f64,
                (n1 - events1) as f64,
            ],
        )
    }

    fn check_length(&self, column: &str, found: usize) -> Result<(), DataError> {
        if found != self.outcome.len() {
            return Err(DataError::LengthMismatch {
                column: column.to_string(),
                expected: self.outcome.len(),
                found,
            });
        }
        Ok(())
    }

    pub fn with_exposure_name(mut self, name: impl Into<String>) -> Self {
        self.exposure_name = name.into();
        self
    }

    pub fn with_covariate(
        mut self,
        name: impl Into<String>,
        values: Vec<f64>,
    ) -> Result<Self, DataError> {
        let name = name.into();
        self.check_length(&name, values.len())?;
        if let Some(row) = values.iter().position(|v| !v.is_finite()) {
            return Err(DataError::NonFinite { column: name, row });
        }
        self.covariates.push(values);
        self.covariate_names.push(name);
        Ok(self)
    }

    /// Each row counts `weight` times in the likelihood.
    pub fn with_frequency_weights(mut self, weights: Vec<f64>) -> Result<Self, DataError> {
        self.check_length("weights", weights.len())?;
        if let Some((row, &value)) = weights
            .iter()
            .enumerate()
            .find(|(_, w)| !(w.is_finite() && **w >= 0.0))
        {
            return Err(DataError::BadWeight { row, value });
        }
        self.weights = Some(weights);
        Ok(self)
    }

    pub fn n_rows(&self) -> usize {
        self.outcome.len()
    }

    pub fn outcome(&self) -> &[f64] {
        &self.outcome
    }

    pub fn exposure(&self) -> Option<&[f64]> {
        self.exposure.as_deref()
    }

    pub fn covariate(&self, j: usize) -> &[f64] {
        &self.covariates[j]
    }

    pub fn n_covariates(&self) -> usize {
        self.covariates.len()
    }

    pub fn weights(&self) -> Option<&[f64]> {
        self.weights.as_deref()
    }

    /// Names of the model terms in coefficient order.
    pub fn term_names(&self) -> Vec<String> {
        let mut names = vec![INTERCEPT_NAME.to_string()];
        if self.exposure.is_some() {
            names.push(self.exposure_name.clone());
        }
        names.extend(self.covariate_names.iter().cloned());
        names
    }

    fn design(&self) -> Matrix {
        let ones = vec![1.0; self.n_rows()];
        let mut columns: Vec<&[f64]> = vec![&ones];
        if let Some(e) = &self.exposure {
            columns.push(e);
        }
        columns.extend(self.covariates.iter().map(Vec::as_slice));
        Matrix::from_columns(self.n_rows(), &columns)
    }

    fn prior_weights(&self) -> Vec<f64> {
        self.weights
            .clone()
            .unwrap_or_else(|| vec![1.0; self.n_rows()])
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    pub max_iter: usize,
    pub tol: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            max_iter: 100,
            tol: 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum FitWarning {
    /// A coefficient diverged past [`SEPARATION_THRESHOLD`], which usually
    /// means the outcome is perfectly predicted by some term.
    Separation { term: String, value: f64 },
}

impl std::fmt::Display for FitWarning {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            FitWarning::Separation { term, value } => write!(
                f,
                "possible separation: coefficient of `{term}` is {value} (|beta| > {SEPARATION_THRESHOLD})"
            ),
        }
    }
}

/// A fitted model for one λ.
#[derive(Debug, Clone, PartialEq)]
pub struct GlmFit {
    pub lambda: TransformParam,
    pub terms: Vec<String>,
    /// Intercept, then exposure (when present), then covariates.
    pub coefficients: Vec<f64>,
    pub standard_errors: Vec<f64>,
    pub deviance: f64,
    /// Deviance at the start and after every accepted step.
    pub deviance_history: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// Clamped into `[MEAN_EPSILON, 1 − MEAN_EPSILON]`.
    pub fitted_means: Vec<Probability>,
    pub warnings: Vec<FitWarning>,
}

impl GlmFit {
    /// `exp(β_j)` for every coefficient.
    pub fn exp_coefficients(&self) -> Vec<f64> {
        self.coefficients.iter().map(|b| b.exp()).collect()
    }
}

/// Bernoulli deviance `−2 Σ [y log μ + (1 − y) log(1 − μ)]`; μ is clamped first.
pub fn deviance(y: &[f64], mu: &[f64]) -> f64 {
    weighted_deviance(y, mu, None)
}

fn weighted_deviance(y: &[f64], mu: &[f64], weights: Option<&[f64]>) -> f64 {
    let mut total = 0.0;
    for (i, (&yi, &mi)) in y.iter().zip(mu).enumerate() {
        let w = weights.map_or(1.0, |w| w[i]);
        if w == 0.0 {
            continue;
        }
        let m = Probability::clamped(mi).value();
        let ll = yi * m.ln() + (1.0 - yi) * (-m).ln_1p();
        total -= 2.0 * w * ll;
    }
    total.max(0.0)
}

struct State {
    beta: Vec<f64>,
    eta: Vec<f64>,
    mu: Vec<f64>,
    deviance: f64,
}

impl State {
    fn at(beta: Vec<f64>, x: &Matrix, y: &[f64], pw: &[f64], lambda: TransformParam) -> State {
        let eta = x.mul_vec(&beta);
        let mu: Vec<f64> = eta
            .iter()
            .map(|&e| inverse_link(e, lambda).value())
            .collect();
        let deviance = weighted_deviance(y, &mu, Some(pw));
        State {
            beta,
            eta,
            mu,
            deviance,
        }
    }
}

/// Row scales `sqrt(w_i)` of the Fisher-scoring weighted design.
fn fisher_scales(state: &State, pw: &[f64], lambda: TransformParam) -> Vec<f64> {
    state
        .eta
        .iter()
        .zip(&state.mu)
        .zip(pw)
        .map(|((&e, &m), &w)| (w / (m * (1.0 - m))).sqrt() * dmu_deta(e, lambda))
        .collect()
}

/// Maximum-likelihood fit of `y ~ Bernoulli(inverse_link(x·β, λ))`.
///
/// Each step solves the weighted least-squares problem with weights
/// `(dμ/dη)² / (μ(1 − μ))` and working response `η + (y − μ) / (dμ/dη)`,
/// written in increment form so that a vanishing `dμ/dη` never divides.
/// Steps that raise the deviance are halved up to [`MAX_HALVINGS`] times.
/// Convergence needs `|D_t − D_{t−1}| / (|D_t| + 0.1) < tol` together with
/// `|Δβ_j| ≤ tol · (|β_j| + 0.1)` for every coefficient; the second test is
/// skipped once some fitted mean is pinned at the clamp.
pub fn fit(
    data: &Dataset,
    lambda: TransformParam,
    options: &FitOptions,
) -> Result<GlmFit, GlmError> {
    let x = data.design();
    let y = data.outcome();
    let pw = data.prior_weights();
    let p = x.cols;

    let rank =
        PivotedQr::new(&x.scale_rows(&pw.iter().map(|w| w.sqrt()).collect::<Vec<_>>())).rank();
    if rank < p {
        return Err(GlmError::RankDeficient { rank, columns: p });
    }

    let total_w: f64 = pw.iter().sum();
    let ybar = y.iter().zip(&pw).map(|(a, b)| a * b).sum::<f64>() / total_w;
    let mut beta = vec![0.0; p];
    beta[0] = link(Probability::new(ybar.clamp(0.01, 0.99)).unwrap(), lambda);

    let mut state = State::at(beta, &x, y, &pw, lambda);
    let mut history = vec![state.deviance];
    let mut iterations = 0;
    let mut stall = Some(Stall::MaxIterations);

    while iterations < options.max_iter {
        iterations += 1;
        let scales = fisher_scales(&state, &pw, lambda);
        let rhs: Vec<f64> = y
            .iter()
            .zip(&state.mu)
            .zip(&pw)
            .map(|((&yi, &m), &w)| (w / (m * (1.0 - m))).sqrt() * (yi - m))
            .collect();
        let qr = PivotedQr::new(&x.scale_rows(&scales));
        let rank = qr.rank();
        if rank < p {
            return Err(GlmError::RankDeficient { rank, columns: p });
        }
        let delta = qr.solve(&rhs);

        // rounding noise in the deviance sum must not trigger halving at the optimum
        let slack = 1e-12 * (state.deviance.abs() + 0.1);
        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..=MAX_HALVINGS {
            let trial: Vec<f64> = state
                .beta
                .iter()
                .zip(&delta)
                .map(|(b, d)| b + step * d)
                .collect();
            let next = State::at(trial, &x, y, &pw, lambda);
            if next.deviance.is_finite() && next.deviance <= state.deviance + slack {
                accepted = Some(next);
                break;
            }
            step *= 0.5;
        }
        let Some(next) = accepted else {
            stall = Some(Stall::StepHalving);
            break;
        };

        let change = (next.deviance - state.deviance).abs() / (next.deviance.abs() + 0.1);
        let settled = next
            .beta
            .iter()
            .zip(&state.beta)
            .all(|(b, prev)| (b - prev).abs() <= options.tol * (b.abs() + 0.1));
        let pinned = next
            .mu
            .iter()
            .any(|&m| m <= MEAN_EPSILON || m >= 1.0 - MEAN_EPSILON);
        state = next;
        history.push(state.deviance);
        // The deviance is flat near the optimum and only pins β to about
        // sqrt(tol), so the coefficients must also have stopped moving, except
        // when means sit on the clamp and separated terms drift freely.
        if change < options.tol && (settled || pinned) {
            stall = None;
            break;
        }
    }

    let qr = PivotedQr::new(&x.scale_rows(&fisher_scales(&state, &pw, lambda)));
    let standard_errors = if qr.rank() == p {
        let cov = qr.unscaled_covariance();
        (0..p).map(|j| cov[j * p + j].max(0.0).sqrt()).collect()
    } else {
        vec![f64::INFINITY; p]
    };

    let terms = data.term_names();
    let warnings = terms
        .iter()
        .zip(&state.beta)
        .filter(|(_, b)| b.abs() > SEPARATION_THRESHOLD)
        .map(|(t, &b)| FitWarning::Separation {
            term: t.clone(),
            value: b,
        })
        .collect();

    let fit = GlmFit {
        lambda,
        terms,
        coefficients: state.beta,
        standard_errors,
        deviance: state.deviance,
        deviance_history: history,
        iterations,
        converged: stall.is_none(),
        fitted_means: state.mu.into_iter().map(Probability::clamped).collect(),
        warnings,
    };
    match stall {
        None => Ok(fit),
        Some(reason) => Err(GlmError::NotConverged {
            fit: Box::new(fit),
            reason,
        }),
    }
}

/// Score vector `Xᵀ[w (y − μ) (dμ/dη) / (μ(1 − μ))]` at the fitted coefficients.
pub fn score(data: &Dataset, fit: &GlmFit) -> Vec<f64> {
    let x = data.design();
    let eta = x.mul_vec(&fit.coefficients);
    let pw = data.prior_weights();
    let u: Vec<f64> = eta
        .iter()
        .zip(data.outcome())
        .zip(&pw)
        .map(|((&e, &yi), &w)| {
            let m = inverse_link(e, fit.lambda).value();
            w * (yi - m) * dmu_deta(e, fit.lambda) / (m * (1.0 - m))
        })
        .collect();
    x.tr_mul_vec(&u)
}

/// Two-sided standard normal quantile for a confidence level.
pub fn normal_quantile(level: f64) -> Result<f64, GlmError> {
    if !(level > 0.0 && level < 1.0) {
        return Err(GlmError::Level(level));
    }
    let std_normal = Normal::new(0.0, 1.0).expect("standard normal");
    Ok(std_normal.inverse_cdf(0.5 + level / 2.0))
}

/// Wald interval `exp(β_j ± z·SE_j)` on the exponentiated scale.
pub fn wald_interval(fit: &GlmFit, coef_index: usize, level: f64) -> Result<(f64, f64), GlmError> {
    if !fit.converged {
        return Err(GlmError::UnconvergedFit);
    }
    let len = fit.coefficients.len();
    if coef_index >= len {
        return Err(GlmError::CoefficientIndex {
            index: coef_index,
            len,
        });
    }
    let z = normal_quantile(level)?;
    let (b, se) = (
        fit.coefficients[coef_index],
        fit.standard_errors[coef_index],
    );
    Ok(((b - z * se).exp(), (b + z * se).exp()))
}
