//! Curve generation, Monte Carlo bias studies, and grid sweeps over the
//! effect measures.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;

use crate::effect_measures::{
    discrepancy_b, lemma1_branch, monotonicity_violations, wr, Approximation, RiskPair,
};
use crate::error::HarnessError;
use crate::glm::{fit, Dataset, FitOptions};
use crate::link_family::{Probability, TransformParam};

/// Default prevalence spacing for curves.
pub const DEFAULT_CURVE_STEP: f64 = 0.01;
/// Default λ grid is `0, 0.1, …, 1`.
pub const DEFAULT_LAMBDA_STEPS: usize = 10;
pub const MIN_GROUP_SIZE: u64 = 10;

pub fn default_lambdas() -> Vec<TransformParam> {
    TransformParam::even_grid(DEFAULT_LAMBDA_STEPS)
}

/// `step, 2·step, …` strictly below 1. When `1/step` is an integer the points
/// are computed as `k / (1/step)` so they land on the nearest doubles.
pub fn unit_grid(step: f64) -> Vec<f64> {
    if !(step > 0.0 && step < 1.0) {
        return Vec::new();
    }
    let inv = 1.0 / step;
    let divisions = inv.round();
    if (inv - divisions).abs() < 1e-9 {
        let m = divisions as usize;
        (1..m).map(|k| k as f64 / divisions).collect()
    } else {
        (1..)
            .map(|k| k as f64 * step)
            .take_while(|&p| p < 1.0)
            .collect()
    }
}

fn check_rr(rr: f64) -> Result<(), HarnessError> {
    if rr > 0.0 && rr.is_finite() {
        Ok(())
    } else {
        Err(HarnessError::RiskRatio(rr))
    }
}

fn sorted_lambdas(lambdas: &[TransformParam]) -> Result<Vec<TransformParam>, HarnessError> {
    if lambdas.is_empty() {
        return Err(HarnessError::Spec("at least one lambda is required".into()));
    }
    let mut out = lambdas.to_vec();
    out.sort_by(|a, b| a.value().total_cmp(&b.value()));
    out.dedup();
    Ok(out)
}

/// A fixed risk ratio traced across unexposed-risk values `p0`, with
/// `p1 = rr · p0`.
#[derive(Debug, Clone, PartialEq)]
pub struct CurveSpec {
    rr: f64,
    prevalence: Vec<Probability>,
    lambdas: Vec<TransformParam>,
    excluded: usize,
}

impl CurveSpec {
    /// Drops grid points with `rr · p0 ≥ 1` (see [`CurveSpec::excluded`]).
    pub fn new(
        rr: f64,
        prevalence_grid: &[f64],
        lambdas: &[TransformParam],
    ) -> Result<Self, HarnessError> {
        check_rr(rr)?;
        let lambdas = sorted_lambdas(lambdas)?;
        let mut prevalence = Vec::with_capacity(prevalence_grid.len());
        let mut excluded = 0;
        for &p0 in prevalence_grid {
            let p0 = Probability::new(p0)?;
            if rr * p0.value() < 1.0 {
                prevalence.push(p0);
            } else {
                excluded += 1;
            }
        }
        if prevalence.is_empty() {
            return Err(HarnessError::EmptyGrid { rr });
        }
        prevalence.sort_by(|a, b| a.value().total_cmp(&b.value()));
        Ok(CurveSpec {
            rr,
            prevalence,
            lambdas,
            excluded,
        })
    }

    pub fn with_step(rr: f64, step: f64, lambdas: &[TransformParam]) -> Result<Self, HarnessError> {
        if !(step > 0.0 && step < 1.0) {
            return Err(HarnessError::Spec(format!(
                "prevalence step must lie in (0,1), got {step}"
            )));
        }
        CurveSpec::new(rr, &unit_grid(step), lambdas)
    }

    pub fn rr(&self) -> f64 {
        self.rr
    }

    pub fn prevalence(&self) -> &[Probability] {
        &self.prevalence
    }

    pub fn lambdas(&self) -> &[TransformParam] {
        &self.lambdas
    }

    /// Grid points dropped because `rr · p0 ≥ 1`.
    pub fn excluded(&self) -> usize {
        self.excluded
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurveRow {
    pub p0: f64,
    pub p1: f64,
    pub lambda: f64,
    pub wr: f64,
    pub b: f64,
}

/// WR(λ) and B(λ) along the curve, ordered by (λ, p0).
pub fn generate_curve(spec: &CurveSpec) -> Vec<CurveRow> {
    let mut rows = Vec::with_capacity(spec.lambdas.len() * spec.prevalence.len());
    for &lambda in &spec.lambdas {
        for &p0 in &spec.prevalence {
            let p1 = spec.rr * p0.value();
            let pair = RiskPair::new(p0.value(), p1).expect("admissible by construction");
            rows.push(CurveRow {
                p0: p0.value(),
                p1,
                lambda: lambda.value(),
                wr: wr(&pair, lambda),
                b: discrepancy_b(&pair, lambda),
            });
        }
    }
    rows
}

/// A two-arm Monte Carlo study.
#[derive(Debug, Clone, PartialEq)]
pub struct SimSpec {
    n_per_group: u64,
    pair: RiskPair,
    rr: f64,
    lambdas: Vec<TransformParam>,
    replications: usize,
    seed: u64,
    options: FitOptions,
}

impl SimSpec {
    pub fn new(
        n_per_group: u64,
        p0: f64,
        rr: f64,
        lambdas: &[TransformParam],
        replications: usize,
        seed: u64,
    ) -> Result<Self, HarnessError> {
        if n_per_group < MIN_GROUP_SIZE {
            return Err(HarnessError::Spec(format!(
                "n per group must be at least {MIN_GROUP_SIZE}, got {n_per_group}"
            )));
        }
        if replications == 0 {
            return Err(HarnessError::Spec("replications must be at least 1".into()));
        }
        check_rr(rr)?;
        let p0 = Probability::new(p0)?;
        let p1 = rr * p0.value();
        if p1 >= 1.0 {
            return Err(HarnessError::ExposedRisk(p1));
        }
        Ok(SimSpec {
            n_per_group,
            pair: RiskPair::new(p0.value(), p1)?,
            rr,
            lambdas: sorted_lambdas(lambdas)?,
            replications,
            seed,
            options: FitOptions::default(),
        })
    }

    pub fn with_fit_options(mut self, options: FitOptions) -> Self {
        self.options = options;
        self
    }

    pub fn pair(&self) -> &RiskPair {
        &self.pair
    }

    pub fn n_per_group(&self) -> u64 {
        self.n_per_group
    }

    pub fn rr(&self) -> f64 {
        self.rr
    }

    pub fn lambdas(&self) -> &[TransformParam] {
        &self.lambdas
    }

    pub fn replications(&self) -> usize {
        self.replications
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }
}

/// Aggregated estimates of `exp(β1)` for one λ.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimRow {
    pub lambda: f64,
    /// Replications that produced a converged fit.
    pub replications_used: usize,
    pub mean_exp_beta1: f64,
    pub sd_exp_beta1: f64,
    /// Monte Carlo standard error of the mean, `sd / sqrt(replications_used)`.
    pub mc_se: f64,
    pub true_wr: f64,
    pub mean_bias_vs_rr: f64,
    pub fit_failures: usize,
}

/// Generator for replication `index`: ChaCha8 keyed by `seed`, on stream `index`.
pub fn replication_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Row-level two-arm sample: `n_per_group` Bernoulli(p0) outcomes with
/// exposure 0 followed by `n_per_group` Bernoulli(p1) outcomes with exposure 1.
pub fn sample_two_group<R: Rng>(n_per_group: usize, pair: &RiskPair, rng: &mut R) -> Dataset {
    let mut outcome = Vec::with_capacity(2 * n_per_group);
    let mut exposure = Vec::with_capacity(2 * n_per_group);
    for (risk, arm) in [(pair.p0(), 0.0), (pair.p1(), 1.0)] {
        for _ in 0..n_per_group {
            outcome.push(if rng.random::<f64>() < risk { 1.0 } else { 0.0 });
            exposure.push(arm);
        }
    }
    Dataset::new(outcome, exposure).expect("binary by construction")
}

/// One replication: `None` when either arm has 0 or n events, otherwise
/// `exp(β1)` per λ (or `None` where the fit failed).
fn replicate(spec: &SimSpec, index: u64) -> Option<Vec<Option<f64>>> {
    let mut rng = replication_rng(spec.seed, index);
    let n = spec.n_per_group;
    let events0 = Binomial::new(n, spec.pair.p0()).ok()?.sample(&mut rng);
    let events1 = Binomial::new(n, spec.pair.p1()).ok()?.sample(&mut rng);
    if [events0, events1].iter().any(|&e| e == 0 || e == n) {
        return None;
    }
    let data = Dataset::two_group(events0, n, events1, n).ok()?;
    Some(
        spec.lambdas
            .iter()
            .map(|&l| {
                fit(&data, l, &spec.options)
                    .ok()
                    .filter(|f| f.converged)
                    .map(|f| f.coefficients[1].exp())
            })
            .collect(),
    )
}

/// Runs every replication (in parallel on the current rayon pool) and
/// aggregates in replication order, so the output does not depend on the
/// number of threads.
///
/// Arm event counts are drawn as Binomial(n, p), the exact law of a sum of n
/// Bernoulli(p) outcomes, and each replication is fitted on the grouped data.
pub fn run_simulation(spec: &SimSpec) -> Result<Vec<SimRow>, HarnessError> {
    let results: Vec<Option<Vec<Option<f64>>>> = (0..spec.replications as u64)
        .into_par_iter()
        .map(|i| replicate(spec, i))
        .collect();

    spec.lambdas
        .iter()
        .enumerate()
        .map(|(j, &lambda)| {
            let values: Vec<f64> = results
                .iter()
                .filter_map(|r| r.as_ref().and_then(|v| v[j]))
                .collect();
            let used = values.len();
            if used == 0 {
                return Err(HarnessError::AllReplicationsFailed {
                    lambda: lambda.value(),
                });
            }
            let mean = values.iter().sum::<f64>() / used as f64;
            let sd = if used > 1 {
                (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (used - 1) as f64).sqrt()
            } else {
                0.0
            };
            Ok(SimRow {
                lambda: lambda.value(),
                replications_used: used,
                mean_exp_beta1: mean,
                sd_exp_beta1: sd,
                mc_se: sd / (used as f64).sqrt(),
                true_wr: wr(&spec.pair, lambda),
                mean_bias_vs_rr: mean - spec.rr,
                fit_failures: spec.replications - used,
            })
        })
        .collect()
}

/// Location and value of the largest B(1) seen by a sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WorstCase {
    pub p0: f64,
    pub p1: f64,
    pub lambda: f64,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepReport {
    pub grid_step: f64,
    pub lambda_steps: usize,
    pub pairs_checked: usize,
    /// (pair, λ) combinations on the wrong side of RR.
    pub lemma1_violations: usize,
    /// Counted by [`monotonicity_violations`] per pair.
    pub monotonicity_violations: usize,
    /// Pairs with B(0) ≥ B(1).
    pub corollary_violations: usize,
    pub worst_case: Option<WorstCase>,
}

impl SweepReport {
    pub fn total_violations(&self) -> usize {
        self.lemma1_violations + self.monotonicity_violations + self.corollary_violations
    }
}

/// Checks the sign law, the strict increase of B(λ), and B(0) < B(1) for every
/// `p0 ≠ p1` on the grid `grid_step, 2·grid_step, …` and λ on an even grid of
/// `lambda_steps + 1` points.
pub fn verify_sweep(grid_step: f64, lambda_steps: usize) -> Result<SweepReport, HarnessError> {
    if !(grid_step > 0.0 && grid_step <= 0.1) {
        return Err(HarnessError::Spec(format!(
            "grid step must lie in (0, 0.1], got {grid_step}"
        )));
    }
    if lambda_steps < 2 {
        return Err(HarnessError::Spec(format!(
            "lambda steps must be at least 2, got {lambda_steps}"
        )));
    }
    let grid = unit_grid(grid_step);
    let lambdas = TransformParam::even_grid(lambda_steps);
    let (lambda_lo, lambda_hi) = (lambdas[0], lambdas[lambdas.len() - 1]);

    let mut report = SweepReport {
        grid_step,
        lambda_steps,
        pairs_checked: 0,
        lemma1_violations: 0,
        monotonicity_violations: 0,
        corollary_violations: 0,
        worst_case: None,
    };
    for &p0 in &grid {
        for &p1 in &grid {
            if p0 == p1 {
                continue;
            }
            let pair = RiskPair::new(p0, p1)?;
            report.pairs_checked += 1;

            let expected = Approximation::expected(&pair);
            report.lemma1_violations += lambdas
                .iter()
                .filter(|&&l| lemma1_branch(&pair, l) != expected)
                .count();
            report.monotonicity_violations += monotonicity_violations(&pair, &lambdas);

            let b_lo = discrepancy_b(&pair, lambda_lo);
            let b_hi = discrepancy_b(&pair, lambda_hi);
            if b_lo.partial_cmp(&b_hi) != Some(std::cmp::Ordering::Less) {
                report.corollary_violations += 1;
            }
            if report.worst_case.is_none_or(|w| b_hi > w.value) {
                report.worst_case = Some(WorstCase {
                    p0,
                    p1,
                    lambda: lambda_hi.value(),
                    value: b_hi,
                });
            }
        }
    }
    Ok(report)
}
