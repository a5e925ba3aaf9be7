use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use airyproc::dist::{evaluate_point, joint_cdf, logdet_gradient, Route};
use airyproc::DistributionResult;
use airyproc::{CdfOptions, ThresholdVector, TimeGrid};

use crate::args::{CommonArgs, F2Args, Format, Lattice, PointArgs, MAX_SWEEP_POINTS};
use crate::error::{CliError, EXIT_DEGENERATE, EXIT_VALIDATION};
use crate::output::{open_sink, write_json, write_rows_csv, Row};
use crate::validate::{run_suite, write_report_csv};

/// Everything `joint` reports about one point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointRecord {
    pub tau: Vec<f64>,
    pub xi: Vec<f64>,
    pub result: DistributionResult,
    pub gradient: Vec<f64>,
}

fn time_grid(tau: &[f64]) -> Result<TimeGrid, CliError> {
    Ok(TimeGrid::new(tau.to_vec())?)
}

fn check_dims(tau: &[f64], xi: &Lattice) -> Result<(), CliError> {
    if tau.len() != xi.dim() {
        return Err(CliError::usage(format!(
            "{} times but {} threshold coordinates",
            tau.len(),
            xi.dim()
        )));
    }
    Ok(())
}

fn options(route: Route, nodes: usize) -> CdfOptions {
    CdfOptions::default().with_route(route).with_nodes(nodes)
}

pub fn joint(args: &PointArgs) -> Result<(), CliError> {
    check_dims(&args.tau.0, &args.xi)?;
    let tau = time_grid(&args.tau.0)?;
    let xi = args
        .xi
        .single()
        .ok_or_else(|| CliError::usage("joint takes a single point; use sweep for lattices"))?;
    let thresholds = ThresholdVector::new(xi.clone())?;
    let opts = options(args.route.into(), args.common.nodes);
    let result = joint_cdf(&tau, &thresholds, &opts)?;
    let gradient = logdet_gradient(&tau, &thresholds, opts.nystrom)?;
    let record = JointRecord {
        tau: args.tau.0.clone(),
        xi: xi.clone(),
        result,
        gradient,
    };
    let sink = open_sink(args.common.out_path.as_deref(), args.common.overwrite)?;
    match args.common.output {
        Format::Json => write_json(sink, &record),
        Format::Csv => {
            let row = Row {
                xi,
                value: Some(record.result.value),
                gradient: Some(record.gradient.clone()),
                residual: Some(record.result.residual),
                status: status_of(&record.result),
            };
            write_rows_csv(sink, record.tau.len(), &[row])
        }
    }
}

fn status_of(r: &DistributionResult) -> String {
    match &r.grid.fallback {
        None => "ok".into(),
        Some(why) => format!("ok (fredholm fallback: {why})"),
    }
}

fn sweep_row(tau: &TimeGrid, xi: Vec<f64>, route: Route, nodes: usize) -> Row {
    let eval = || -> Result<Row, CliError> {
        let thresholds = ThresholdVector::new(xi.clone())?;
        let opts = options(route, nodes);
        let point = evaluate_point(tau, &thresholds, opts.nystrom)?;
        let (value, residual, status) = match route {
            Route::Fredholm => (point.value, 0.0, "ok".to_string()),
            _ => {
                let r = joint_cdf(tau, &thresholds, &opts)?;
                (r.value, r.residual, status_of(&r))
            }
        };
        Ok(Row {
            xi: xi.clone(),
            value: Some(value),
            gradient: Some(point.gradient),
            residual: Some(residual),
            status,
        })
    };
    eval().unwrap_or_else(|e| Row {
        xi: xi.clone(),
        value: None,
        gradient: None,
        residual: None,
        status: format!("failed: {e}"),
    })
}

fn run_sweep(
    tau_values: &[f64],
    lattice: &Lattice,
    route: Route,
    common: &CommonArgs,
) -> Result<(), CliError> {
    check_dims(tau_values, lattice)?;
    let tau = time_grid(tau_values)?;
    let size = lattice.size();
    if size > MAX_SWEEP_POINTS {
        return Err(CliError::usage(format!(
            "lattice has {size} points; the limit is {MAX_SWEEP_POINTS}"
        )));
    }
    let rows: Vec<Row> = lattice
        .points()
        .into_par_iter()
        .map(|xi| sweep_row(&tau, xi, route, common.nodes))
        .collect();
    let sink = open_sink(common.out_path.as_deref(), common.overwrite)?;
    match common.output {
        Format::Json => write_json(sink, &rows)?,
        Format::Csv => write_rows_csv(sink, tau_values.len(), &rows)?,
    }
    if rows.iter().any(Row::is_ok) {
        Ok(())
    } else {
        Err(CliError {
            code: EXIT_DEGENERATE,
            message: "every lattice point failed".into(),
        })
    }
}

pub fn sweep(args: &PointArgs) -> Result<(), CliError> {
    run_sweep(&args.tau.0, &args.xi, args.route.into(), &args.common)
}

pub fn f2(args: &F2Args) -> Result<(), CliError> {
    run_sweep(&[0.0], &args.xi, args.route.into(), &args.common)
}

pub fn validate(args: &CommonArgs) -> Result<(), CliError> {
    let report = run_suite(args.nodes);
    let sink = open_sink(args.out_path.as_deref(), args.overwrite)?;
    match args.output {
        Format::Json => write_json(sink, &report)?,
        Format::Csv => write_report_csv(sink, &report)?,
    }
    if report.passed {
        Ok(())
    } else {
        let failed: Vec<&str> = report
            .checks
            .iter()
            .filter(|c| !c.pass)
            .map(|c| c.name.as_str())
            .collect();
        Err(CliError {
            code: EXIT_VALIDATION,
            message: format!("failed checks: {}", failed.join("; ")),
        })
    }
}
