//! Acceptance suite: one `[PASS]` / `[FAIL]` line per criterion, then a
//! single assertion that nothing failed.

use std::io::Write;
use std::process::{Command, Output};
use std::time::{Duration, Instant};

use aordaz::harness::replication_rng;
use aordaz::{
    complementary_log_ratio, fit, h_function, odds_ratio, w_transform, wr, Dataset, FitOptions,
    GlmFit, Probability, RiskPair, TransformParam,
};
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

type Verdict = Result<String, String>;
type Criterion = (&'static str, fn() -> Verdict);

fn lam(x: f64) -> TransformParam {
    TransformParam::new(x).unwrap()
}

fn prob(x: f64) -> Probability {
    Probability::new(x).unwrap()
}

fn aordaz(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_aordaz"))
        .args(args)
        .output()
        .expect("binary runs")
}

/// Named numeric columns of a CSV document.
fn csv_columns(out: &Output, names: &[&str]) -> Result<Vec<Vec<f64>>, String> {
    let mut reader = csv::Reader::from_reader(out.stdout.as_slice());
    let header = reader.headers().map_err(|e| e.to_string())?.clone();
    let idx: Vec<usize> = names
        .iter()
        .map(|n| {
            header
                .iter()
                .position(|h| h == *n)
                .ok_or(format!("missing column {n}"))
        })
        .collect::<Result<_, _>>()?;
    let mut cols = vec![Vec::new(); names.len()];
    for record in reader.records() {
        let record = record.map_err(|e| e.to_string())?;
        for (c, &i) in cols.iter_mut().zip(&idx) {
            c.push(record[i].parse::<f64>().map_err(|e| e.to_string())?);
        }
    }
    Ok(cols)
}

fn check(ok: bool, detail: String) -> Verdict {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn unification_identities() -> Verdict {
    let (mut or_gap, mut clr_gap) = (0.0f64, 0.0f64);
    for i in 1..=99 {
        for j in 1..=99 {
            let pair = RiskPair::new(i as f64 / 100.0, j as f64 / 100.0).unwrap();
            let or = odds_ratio(&pair);
            let clr = complementary_log_ratio(&pair);
            or_gap = or_gap.max((wr(&pair, lam(1.0)) - or).abs() / or);
            clr_gap = clr_gap.max((wr(&pair, lam(0.0)) - clr).abs() / clr);
        }
    }
    check(
        or_gap <= 1e-12 && clr_gap <= 1e-12,
        format!(
            "max relative gap WR(1) vs OR {or_gap:.2e}, WR(0) vs CLR {clr_gap:.2e} (limit 1e-12)"
        ),
    )
}

fn monotonicity_sweep() -> Verdict {
    let start = Instant::now();
    let out = aordaz(&["verify", "--grid-step", "0.01", "--lambda-steps", "100"]);
    let elapsed = start.elapsed();
    let cols = csv_columns(
        &out,
        &[
            "pairs_checked",
            "lemma1_violations",
            "monotonicity_violations",
            "corollary_violations",
        ],
    )?;
    let [pairs, lemma, mono, corollary] = [cols[0][0], cols[1][0], cols[2][0], cols[3][0]];
    check(
        out.status.code() == Some(0)
            && pairs == 9702.0
            && lemma + mono + corollary == 0.0
            && elapsed < Duration::from_secs(10),
        format!(
            "{pairs} pairs: sign-law {lemma}, monotonicity {mono}, B(0)<B(1) {corollary} violations in {:.2}s (limit 10s)",
            elapsed.as_secs_f64()
        ),
    )
}

fn lambda_continuity() -> Verdict {
    let mut worst = 0.0f64;
    for k in 1..1000 {
        let theta = prob(k as f64 / 1000.0);
        let w0 = w_transform(theta, lam(0.0));
        let w = w_transform(theta, lam(1e-8));
        worst = worst.max((w - w0).abs() / w0);
    }
    check(
        worst < 1e-6,
        format!("max relative gap W_1e-8 vs W_0 {worst:.2e} (limit 1e-6)"),
    )
}

fn convexity_and_h() -> Verdict {
    let thetas: Vec<f64> = (0..50).map(|k| 0.01 + 0.02 * k as f64).collect();
    let ts: Vec<f64> = (1..10).map(|k| k as f64 / 10.0).collect();
    let mut worst_excess = f64::NEG_INFINITY;
    let mut checked = 0usize;
    for l in [0.0, 0.25, 0.5, 0.75, 1.0] {
        let w = |x: f64| w_transform(prob(x), lam(l));
        for &t1 in &thetas {
            for &t2 in &thetas {
                for &t in &ts {
                    let lhs = w(t * t1 + (1.0 - t) * t2);
                    let rhs = t * w(t1) + (1.0 - t) * w(t2);
                    worst_excess = worst_excess.max(lhs - rhs);
                    checked += 1;
                }
            }
        }
    }
    let n = 10_000;
    let (lo, hi) = (1e-8f64.ln(), 50f64.ln());
    let h: Vec<f64> = (0..=n)
        .map(|i| h_function((lo + (hi - lo) * i as f64 / n as f64).exp()).unwrap())
        .collect();
    let h_increasing = h.windows(2).all(|w| w[0] < w[1]);
    check(
        worst_excess <= 1e-12 && h_increasing,
        format!(
            "{checked} convexity triples, max excess {worst_excess:.2e} (limit 1e-12); h strictly increasing on {} log-spaced points: {h_increasing}",
            n + 1
        ),
    )
}

fn curve_ordering() -> Verdict {
    let mut details = Vec::new();
    let mut ok = true;
    for (rr, above) in [(1.25, true), (0.5, false)] {
        let out = aordaz(&["curve", "--rr", &rr.to_string(), "--lambdas", "0,0.5,1"]);
        if !out.status.success() {
            return Err(format!(
                "curve --rr {rr} exited with {:?}",
                out.status.code()
            ));
        }
        let cols = csv_columns(&out, &["p0", "lambda", "wr"])?;
        let points = cols[0].len() / 3;
        let (clr, mid, or) = (
            &cols[2][..points],
            &cols[2][points..2 * points],
            &cols[2][2 * points..],
        );
        let layout = (0..points).all(|i| {
            cols[1][i] == 0.0
                && cols[1][points + i] == 0.5
                && cols[1][2 * points + i] == 1.0
                && cols[0][i] == cols[0][points + i]
                && cols[0][i] == cols[0][2 * points + i]
        });
        let admissible = cols[0].iter().all(|&p0| rr * p0 < 1.0);
        let bad = (0..points)
            .filter(|&i| {
                if above {
                    !(rr < clr[i] && clr[i] < mid[i] && mid[i] < or[i])
                } else {
                    !(or[i] < mid[i] && mid[i] < clr[i] && clr[i] < rr)
                }
            })
            .count();
        ok &= layout && admissible && bad == 0;
        let order = if above {
            "RR < CLR < WR(0.5) < OR"
        } else {
            "OR < WR(0.5) < CLR < RR"
        };
        details.push(format!("rr={rr}: {order} fails at {bad}/{points} p0"));
    }
    check(ok, details.join("; "))
}

fn random_two_group(index: u64) -> (Dataset, RiskPair) {
    let mut rng = replication_rng(5_150, index);
    loop {
        let n = [rng.random_range(20..400), rng.random_range(20..400)];
        let p = [rng.random_range(0.05..0.95), rng.random_range(0.05..0.95)];
        let mut y = Vec::new();
        let mut a = Vec::new();
        let mut events = [0usize; 2];
        for arm in 0..2 {
            for _ in 0..n[arm] {
                let event = rng.random::<f64>() < p[arm];
                events[arm] += usize::from(event);
                y.push(if event { 1.0 } else { 0.0 });
                a.push(arm as f64);
            }
        }
        if (0..2).all(|arm| events[arm] > 0 && events[arm] < n[arm]) {
            let pair = RiskPair::new(
                events[0] as f64 / n[0] as f64,
                events[1] as f64 / n[1] as f64,
            )
            .unwrap();
            return (Dataset::new(y, a).unwrap(), pair);
        }
    }
}

fn saturation_identity() -> Verdict {
    let mut worst = 0.0f64;
    for i in 0..20 {
        let (data, pair) = random_two_group(i);
        for l in [0.0, 0.25, 0.5, 0.75, 1.0] {
            let f = fit(&data, lam(l), &FitOptions::default())
                .map_err(|e| format!("dataset {i}: {e}"))?;
            let plug_in = wr(&pair, lam(l));
            worst = worst.max((f.coefficients[1].exp() - plug_in).abs() / plug_in);
        }
    }
    check(
        worst <= 1e-8,
        format!("20 datasets x 5 lambdas, max relative gap exp(beta1) vs plug-in WR {worst:.2e} (limit 1e-8)"),
    )
}

/// n = 200: exposure ~ Bernoulli(1/2), z1 ~ N(0,1), z2 ~ U(-2, 2), logistic outcome.
fn oracle_rows() -> (Vec<f64>, Vec<f64>, Vec<f64>, Vec<f64>) {
    let mut rng = replication_rng(20_240_601, 0);
    let truth = [-0.4, 0.7, 0.5, -0.8];
    let (mut y, mut a, mut z1, mut z2) = (vec![], vec![], vec![], vec![]);
    for _ in 0..200 {
        let exposed = if rng.random::<f64>() < 0.5 { 1.0 } else { 0.0 };
        let c1: f64 = rng.sample(StandardNormal);
        let c2 = 4.0 * rng.random::<f64>() - 2.0;
        let eta = truth[0] + truth[1] * exposed + truth[2] * c1 + truth[3] * c2;
        let p = 1.0 / (1.0 + (-eta).exp());
        y.push(if rng.random::<f64>() < p { 1.0 } else { 0.0 });
        a.push(exposed);
        z1.push(c1);
        z2.push(c2);
    }
    (y, a, z1, z2)
}

/// Newton-Raphson on the logistic log-likelihood via the normal equations.
fn newton_logistic(x: &DMatrix<f64>, y: &DVector<f64>) -> DVector<f64> {
    let mut beta = DVector::zeros(x.ncols());
    for _ in 0..100 {
        let p = (x * &beta).map(|e| 1.0 / (1.0 + (-e).exp()));
        let grad = x.transpose() * (y - &p);
        let mut xw = x.clone();
        for (i, mut row) in xw.row_iter_mut().enumerate() {
            row *= p[i] * (1.0 - p[i]);
        }
        let step = (x.transpose() * xw)
            .lu()
            .solve(&grad)
            .expect("nonsingular Hessian");
        beta += &step;
        if step.amax() < 1e-15 {
            break;
        }
    }
    beta
}

/// Score vector from closed-form inverse link and derivative.
fn score_norm(x: &DMatrix<f64>, y: &[f64], f: &GlmFit) -> f64 {
    let lambda = f.lambda.value();
    let eta = x * DVector::from_column_slice(&f.coefficients);
    let u = DVector::from_fn(y.len(), |i, _| {
        let e = eta[i].exp();
        let (mu, d) = if lambda == 0.0 {
            let s = (-e).exp();
            (1.0 - s, e * s)
        } else {
            let base = 1.0 + lambda * e;
            (
                1.0 - base.powf(-1.0 / lambda),
                e * base.powf(-1.0 / lambda - 1.0),
            )
        };
        (y[i] - mu) * d / (mu * (1.0 - mu))
    });
    (x.transpose() * u).norm()
}

fn irls_oracle() -> Verdict {
    let (y, a, z1, z2) = oracle_rows();
    let n = y.len();
    let x = DMatrix::from_fn(n, 4, |i, j| [1.0, a[i], z1[i], z2[i]][j]);
    let oracle = newton_logistic(&x, &DVector::from_column_slice(&y));
    let data = Dataset::new(y.clone(), a)
        .and_then(|d| d.with_covariate("z1", z1))
        .and_then(|d| d.with_covariate("z2", z2))
        .unwrap();
    let logit = fit(&data, lam(1.0), &FitOptions::default()).map_err(|e| e.to_string())?;
    let coef_gap = (0..4)
        .map(|j| (logit.coefficients[j] - oracle[j]).abs())
        .fold(0.0, f64::max);
    let mut worst_score = 0.0f64;
    for l in [0.0, 0.25, 0.5, 0.75, 1.0] {
        let f = fit(&data, lam(l), &FitOptions::default()).map_err(|e| e.to_string())?;
        worst_score = worst_score.max(score_norm(&x, &y, &f));
    }
    check(
        coef_gap < 1e-6 && worst_score < 1e-6,
        format!("max |beta - Newton| {coef_gap:.2e} (limit 1e-6); max score norm over 5 lambdas {worst_score:.2e} (limit 1e-6)"),
    )
}

fn simulation_consistency() -> Verdict {
    let start = Instant::now();
    let base = [
        "simulate", "--n", "10000", "--p0", "0.4", "--reps", "500", "--seed", "42",
    ];
    let mut args = base.to_vec();
    args.extend(["--rr", "1.25", "--lambdas", "0,1"]);
    let out = aordaz(&args);
    if !out.status.success() {
        return Err(format!("simulate exited with {:?}", out.status.code()));
    }
    let cols = csv_columns(&out, &["lambda", "mean_exp_beta1", "mc_se"])?;
    let targets = [(0.0, 0.5f64.ln() / 0.6f64.ln()), (1.0, 1.5)];
    let mut ok = true;
    let mut details = Vec::new();
    for (row, (l, target)) in targets.iter().enumerate() {
        let z = (cols[1][row] - target) / cols[2][row];
        ok &= cols[0][row] == *l && z.abs() <= 3.0;
        details.push(format!(
            "lambda={l}: mean {:.5} vs {target:.5} ({z:+.2} MC SE)",
            cols[1][row]
        ));
    }

    let mut null_args = base.to_vec();
    null_args.extend(["--rr", "1"]);
    let null = aordaz(&null_args);
    if !null.status.success() {
        return Err(format!(
            "null simulate exited with {:?}",
            null.status.code()
        ));
    }
    let cols = csv_columns(&null, &["mean_exp_beta1", "mc_se"])?;
    let worst_null = cols[0]
        .iter()
        .zip(&cols[1])
        .map(|(m, se)| ((m - 1.0) / se).abs())
        .fold(0.0, f64::max);
    ok &= cols[0].len() == 11 && worst_null <= 3.0;
    details.push(format!(
        "null run worst {worst_null:.2} MC SE over {} lambdas",
        cols[0].len()
    ));

    let elapsed = start.elapsed();
    ok &= elapsed < Duration::from_secs(30);
    details.push(format!("{:.2}s (limit 30s)", elapsed.as_secs_f64()));
    check(ok, details.join("; "))
}

fn determinism() -> Verdict {
    let base = [
        "simulate",
        "--n",
        "10000",
        "--p0",
        "0.4",
        "--rr",
        "1.25",
        "--lambdas",
        "0,1",
        "--reps",
        "500",
        "--seed",
        "42",
    ];
    let runs: Vec<(&str, Output)> = [None, Some("1"), Some("4"), None]
        .into_iter()
        .map(|threads| {
            let mut args = base.to_vec();
            if let Some(t) = threads {
                args.extend(["--threads", t]);
            }
            (threads.unwrap_or("default"), aordaz(&args))
        })
        .collect();
    let first = &runs[0].1;
    let identical = first.status.success()
        && !first.stdout.is_empty()
        && runs
            .iter()
            .all(|(_, o)| o.status.success() && o.stdout == first.stdout);
    let labels: Vec<&str> = runs.iter().map(|(l, _)| *l).collect();
    check(
        identical,
        format!(
            "{} simulate runs (threads: {}) byte-identical: {identical}",
            runs.len(),
            labels.join(", ")
        ),
    )
}

#[test]
fn acceptance() {
    let criteria: [Criterion; 9] = [
        (
            "unification identities on the 99x99 grid",
            unification_identities,
        ),
        (
            "sign law, strict increase of B and B(0) < B(1) sweep",
            monotonicity_sweep,
        ),
        ("lambda -> 0 continuity", lambda_continuity),
        ("convexity of W and monotone h", convexity_and_h),
        ("fixed-RR curve ordering", curve_ordering),
        ("two-group saturation identity", saturation_identity),
        (
            "IRLS vs Newton oracle and score at convergence",
            irls_oracle,
        ),
        ("simulation consistency", simulation_consistency),
        ("simulation determinism across thread counts", determinism),
    ];
    let mut failed = Vec::new();
    let mut stdout = std::io::stdout();
    for (i, (name, run)) in criteria.iter().enumerate() {
        let n = i + 1;
        let (tag, detail) = match run() {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failed.push(n);
                ("FAIL", d)
            }
        };
        writeln!(stdout, "[{tag}] criterion {n}: {name}: {detail}").unwrap();
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
