use std::fs::File;
use std::io::{self, Read};
use std::path::Path;

use aordaz::glm::normal_quantile;
use aordaz::harness::{generate_curve, run_simulation, verify_sweep, CurveSpec, SimSpec};
use aordaz::{
    fit, DataError, Dataset, FitOptions, GlmError, MeasureReport, RiskPair, TransformParam,
};

use crate::args::{CurveArgs, FitArgs, MeasuresArgs, SimulateArgs, VerifyArgs};
use crate::error::{exit, CliError};
use crate::output::Table;

/// What a command produced: a table to print, plus an error to report after
/// printing it (non-converged fits, failed verification).
pub struct Outcome {
    pub table: Table,
    pub notes: Vec<String>,
    pub failure: Option<CliError>,
}

impl From<Table> for Outcome {
    fn from(table: Table) -> Self {
        Outcome {
            table,
            notes: Vec::new(),
            failure: None,
        }
    }
}

pub fn parse_lambda(flag: &str, text: &str) -> Result<TransformParam, CliError> {
    let text = text.trim();
    let value = match text {
        "cloglog" => 0.0,
        "logit" => 1.0,
        _ => text
            .parse::<f64>()
            .map_err(|_| CliError::flag(flag, format!("`{text}` is not a number")))?,
    };
    TransformParam::new(value).map_err(|e| CliError::flag(flag, e))
}

pub fn parse_lambda_list(flag: &str, text: &str) -> Result<Vec<TransformParam>, CliError> {
    text.split(',').map(|t| parse_lambda(flag, t)).collect()
}

fn check_probability(flag: &str, value: f64) -> Result<f64, CliError> {
    if value > 0.0 && value < 1.0 {
        Ok(value)
    } else {
        Err(CliError::flag(
            flag,
            format!("{flag} must lie strictly inside (0,1), got {value}"),
        ))
    }
}

fn check_rr(value: f64) -> Result<f64, CliError> {
    if value > 0.0 && value.is_finite() {
        Ok(value)
    } else {
        Err(CliError::flag(
            "rr",
            format!("rr must be positive and finite, got {value}"),
        ))
    }
}

pub fn measures(args: &MeasuresArgs) -> Result<Outcome, CliError> {
    let p0 = check_probability("p0", args.p0)?;
    let p1 = check_probability("p1", args.p1)?;
    let lambdas = parse_lambda_list("lambdas", &args.lambdas)?;
    let pair = RiskPair::new(p0, p1).map_err(|e| CliError::usage(e.to_string()))?;
    let report = MeasureReport::new(pair, &lambdas);
    Ok(Table::new()
        .scalar("p0", p0)
        .scalar("p1", p1)
        .scalar("rr", report.rr)
        .scalar("or", report.or)
        .scalar("clr", report.clr)
        .column("lambda", report.by_lambda.iter().map(|m| m.lambda.value()))
        .column("wr", report.by_lambda.iter().map(|m| m.wr))
        .column("b", report.by_lambda.iter().map(|m| m.b))
        .into())
}

pub fn curve(args: &CurveArgs) -> Result<Outcome, CliError> {
    let rr = check_rr(args.rr)?;
    let lambdas = parse_lambda_list("lambdas", &args.lambdas)?;
    if !(args.step > 0.0 && args.step < 1.0) {
        return Err(CliError::flag(
            "step",
            format!("step must lie in (0,1), got {}", args.step),
        ));
    }
    let spec = CurveSpec::with_step(rr, args.step, &lambdas)?;
    let rows = generate_curve(&spec);
    let mut notes = Vec::new();
    if spec.excluded() > 0 {
        notes.push(format!(
            "note: {} grid points with rr * p0 >= 1 excluded",
            spec.excluded()
        ));
    }
    let table = Table::new()
        .extra("rr", rr)
        .extra("step", args.step)
        .extra("excluded", spec.excluded())
        .column("p0", rows.iter().map(|r| r.p0))
        .column("p1", rows.iter().map(|r| r.p1))
        .column("lambda", rows.iter().map(|r| r.lambda))
        .column("wr", rows.iter().map(|r| r.wr))
        .column("b", rows.iter().map(|r| r.b));
    Ok(Outcome {
        table,
        notes,
        failure: None,
    })
}

fn read_input(path: &Path) -> Result<String, CliError> {
    let mut text = String::new();
    let result = if path.as_os_str() == "-" {
        io::stdin().read_to_string(&mut text)
    } else {
        File::open(path).and_then(|mut f| f.read_to_string(&mut text))
    };
    result.map_err(|e| CliError::flag("input", format!("cannot read {}: {e}", path.display())))?;
    Ok(text)
}

/// Reads the named columns of a CSV document as numbers.
fn read_columns(text: &str, names: &[&str]) -> Result<Vec<Vec<f64>>, CliError> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let header = reader
        .headers()
        .map_err(|e| CliError::flag("input", format!("malformed CSV header: {e}")))?
        .clone();
    let indices = names
        .iter()
        .map(|name| {
            header.iter().position(|h| h == *name).ok_or_else(|| {
                CliError::flag("input", format!("column `{name}` not found in header"))
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    let mut columns = vec![Vec::new(); names.len()];
    for (row, record) in reader.records().enumerate() {
        let line = row + 2;
        let record = record
            .map_err(|e| CliError::flag("input", format!("malformed CSV at line {line}: {e}")))?;
        for ((col, &idx), name) in columns.iter_mut().zip(&indices).zip(names) {
            let cell = record.get(idx).unwrap_or("");
            let value = cell.parse::<f64>().map_err(|_| {
                CliError::flag(
                    "input",
                    format!("line {line} column `{name}`: `{cell}` is not a number"),
                )
            })?;
            col.push(value);
        }
    }
    Ok(columns)
}

pub fn fit_csv(args: &FitArgs) -> Result<Outcome, CliError> {
    let lambda = parse_lambda("lambda", &args.lambda)?;
    if !(args.tol > 0.0 && args.tol.is_finite()) {
        return Err(CliError::flag(
            "tol",
            format!("tolerance must be positive, got {}", args.tol),
        ));
    }
    if args.max_iter == 0 {
        return Err(CliError::flag(
            "max-iter",
            "iteration limit must be at least 1",
        ));
    }
    let z = normal_quantile(args.level).map_err(|e| CliError::flag("level", e))?;

    let mut names = vec![args.outcome.as_str(), args.exposure.as_str()];
    names.extend(args.covariates.iter().map(String::as_str));
    let mut columns = read_columns(&read_input(&args.input)?, &names)?.into_iter();
    let outcome = columns.next().expect("outcome column");
    let exposure = columns.next().expect("exposure column");
    // the library names columns by role; report them by their CSV names
    let data_error = |e: DataError| {
        CliError::flag(
            "input",
            e.to_string()
                .replace("column `outcome`", &format!("column `{}`", args.outcome))
                .replace("column `exposure`", &format!("column `{}`", args.exposure)),
        )
    };
    let mut data = Dataset::new(outcome, exposure)
        .map_err(data_error)?
        .with_exposure_name(&args.exposure);
    for (name, values) in args.covariates.iter().zip(columns) {
        data = data.with_covariate(name, values).map_err(data_error)?;
    }
    let options = FitOptions {
        max_iter: args.max_iter,
        tol: args.tol,
    };
    let (result, failure) = match fit(&data, lambda, &options) {
        Ok(f) => (f, None),
        Err(GlmError::NotConverged { fit, reason }) => {
            let message = format!(
                "IRLS did not converge after {} iterations: {reason}",
                fit.iterations
            );
            (
                *fit,
                Some(CliError {
                    code: exit::NOT_CONVERGED,
                    message,
                }),
            )
        }
        Err(GlmError::Data(e)) => return Err(data_error(e)),
        Err(e) => return Err(e.into()),
    };

    let interval = |j: usize| -> (f64, f64) {
        if result.converged {
            let (b, se) = (result.coefficients[j], result.standard_errors[j]);
            ((b - z * se).exp(), (b + z * se).exp())
        } else {
            (f64::NAN, f64::NAN)
        }
    };
    let intervals: Vec<(f64, f64)> = (0..result.coefficients.len()).map(interval).collect();
    let table = Table::new()
        .scalar("lambda", lambda.value())
        .scalar("deviance", result.deviance)
        .scalar("iterations", result.iterations)
        .scalar("converged", result.converged)
        .scalar("level", args.level)
        .extra("n", data.n_rows())
        .column("term", result.terms.iter().map(String::as_str))
        .column("estimate", result.coefficients.iter().copied())
        .column("std_error", result.standard_errors.iter().copied())
        .column("exp_estimate", result.exp_coefficients())
        .column("ci_lower", intervals.iter().map(|c| c.0))
        .column("ci_upper", intervals.iter().map(|c| c.1));
    Ok(Outcome {
        table,
        notes: result
            .warnings
            .iter()
            .map(|w| format!("warning: {w}"))
            .collect(),
        failure,
    })
}

pub fn simulate(args: &SimulateArgs) -> Result<Outcome, CliError> {
    let p0 = check_probability("p0", args.p0)?;
    let rr = check_rr(args.rr)?;
    let lambdas = parse_lambda_list("lambdas", &args.lambdas)?;
    if args.reps == 0 {
        return Err(CliError::flag("reps", "replications must be at least 1"));
    }
    let spec = SimSpec::new(args.n, p0, rr, &lambdas, args.reps, args.seed)?;
    let rows = match args.threads {
        None => run_simulation(&spec)?,
        Some(0) => return Err(CliError::flag("threads", "thread count must be at least 1")),
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .map_err(|e| CliError::flag("threads", e))?
            .install(|| run_simulation(&spec))?,
    };
    let pair = spec.pair();
    Ok(Table::new()
        .extra("n", args.n)
        .extra("p0", pair.p0())
        .extra("p1", pair.p1())
        .extra("rr", rr)
        .extra("reps", args.reps)
        .extra("seed", args.seed)
        .column("lambda", rows.iter().map(|r| r.lambda))
        .column(
            "replications_used",
            rows.iter().map(|r| r.replications_used),
        )
        .column("mean_exp_beta1", rows.iter().map(|r| r.mean_exp_beta1))
        .column("sd_exp_beta1", rows.iter().map(|r| r.sd_exp_beta1))
        .column("mc_se", rows.iter().map(|r| r.mc_se))
        .column("true_wr", rows.iter().map(|r| r.true_wr))
        .column("mean_bias_vs_rr", rows.iter().map(|r| r.mean_bias_vs_rr))
        .column("fit_failures", rows.iter().map(|r| r.fit_failures))
        .into())
}

pub fn verify(args: &VerifyArgs) -> Result<Outcome, CliError> {
    if !(args.grid_step > 0.0 && args.grid_step <= 0.1) {
        return Err(CliError::flag(
            "grid-step",
            format!("grid step must lie in (0, 0.1], got {}", args.grid_step),
        ));
    }
    if args.lambda_steps < 2 {
        return Err(CliError::flag(
            "lambda-steps",
            format!("lambda steps must be at least 2, got {}", args.lambda_steps),
        ));
    }
    let report = verify_sweep(args.grid_step, args.lambda_steps)?;
    let worst = report.worst_case;
    let total = report.total_violations();
    let table = Table::new()
        .scalar("grid_step", report.grid_step)
        .scalar("lambda_steps", report.lambda_steps)
        .scalar("pairs_checked", report.pairs_checked)
        .scalar("lemma1_violations", report.lemma1_violations)
        .scalar("monotonicity_violations", report.monotonicity_violations)
        .scalar("corollary_violations", report.corollary_violations)
        .scalar("total_violations", total)
        .scalar("worst_p0", worst.map_or(f64::NAN, |w| w.p0))
        .scalar("worst_p1", worst.map_or(f64::NAN, |w| w.p1))
        .scalar("worst_lambda", worst.map_or(f64::NAN, |w| w.lambda))
        .scalar("worst_b", worst.map_or(f64::NAN, |w| w.value));
    let failure = (total > 0).then(|| CliError {
        code: exit::VERIFY_FAILED,
        message: format!("verification found {total} violations"),
    });
    Ok(Outcome {
        table,
        notes: Vec::new(),
        failure,
    })
}
