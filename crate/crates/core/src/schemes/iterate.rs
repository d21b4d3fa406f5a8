//! The generic iterate driver `q_{i+1} = W q_i + s` shared by every scheme,
//! and the coefficient-stored variant for re-evaluating a series at many
//! expansion parameters.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::field::Field;
use crate::operator::LinearOp;

use super::IterationReport;

pub(crate) struct DriveOutcome {
    pub iterate: Field,
    pub iterations: usize,
    pub residual_history: Vec<f64>,
    pub converged: bool,
}

/// Run the iteration, keeping only the current iterate. `step` maps the
/// current iterate to the next one (operator application plus source);
/// `residual` judges the current iterate. Non-finite values abort with a
/// divergence error naming the scheme and iteration index.
pub(crate) fn drive(
    scheme: &str,
    q0: Field,
    tolerance: f64,
    max_iter: usize,
    mut step: impl FnMut(&Field) -> Result<Field>,
    mut residual: impl FnMut(&Field) -> Result<f64>,
) -> Result<DriveOutcome> {
    let mut history = Vec::new();
    let mut q = q0;
    let mut i = 0usize;
    loop {
        let r = residual(&q)?;
        if !r.is_finite() {
            return Err(Error::Divergence {
                scheme: scheme.to_string(),
                iteration: i,
            });
        }
        history.push(r);
        if r <= tolerance {
            return Ok(DriveOutcome {
                iterate: q,
                iterations: i,
                residual_history: history,
                converged: true,
            });
        }
        if i == max_iter {
            return Ok(DriveOutcome {
                iterate: q,
                iterations: max_iter,
                residual_history: history,
                converged: false,
            });
        }
        let next = step(&q)?;
        if !next.is_finite() {
            return Err(Error::Divergence {
                scheme: scheme.to_string(),
                iteration: i + 1,
            });
        }
        q = next;
        i += 1;
    }
}

/// Least-squares slope of the log residual over the trailing half of the
/// history, exponentiated to a contraction factor. Needs at least six
/// usable (positive, finite) points, else reports 0 with `fitted = false`.
pub(crate) fn fit_measured_rate(history: &[f64]) -> (f64, bool) {
    let start = history.len() / 2;
    let points: Vec<(f64, f64)> = history
        .iter()
        .enumerate()
        .skip(start)
        .filter(|&(_, &r)| r.is_finite() && r > 0.0)
        .map(|(i, &r)| (i as f64, r.ln()))
        .collect();
    if points.len() < 6 {
        return (0.0, false);
    }
    let n = points.len() as f64;
    let sx: f64 = points.iter().map(|p| p.0).sum();
    let sy: f64 = points.iter().map(|p| p.1).sum();
    let sxx: f64 = points.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = points.iter().map(|p| p.0 * p.1).sum();
    let denom = n * sxx - sx * sx;
    if denom == 0.0 {
        return (0.0, false);
    }
    let slope = (n * sxy - sx * sy) / denom;
    (slope.exp(), true)
}

pub(crate) fn report_from_outcome(
    outcome: &DriveOutcome,
    theoretical_rate: f64,
    warnings: Vec<String>,
) -> IterationReport {
    let (measured_rate, rate_fitted) = fit_measured_rate(&outcome.residual_history);
    IterationReport {
        iterations: outcome.iterations,
        residual_history: outcome.residual_history.clone(),
        measured_rate,
        rate_fitted,
        theoretical_rate,
        converged: outcome.converged,
        warnings,
    }
}

/// Iterate `q_{i+1} = W q_i + s`, `q_0 = s`, until the fixed-point residual
/// `|W q + s - q| / |s|` drops below the tolerance, then return `C0 q`.
/// Only the current iterate is retained.
pub fn iterate_generic(
    w: &dyn LinearOp,
    c0: &dyn LinearOp,
    s: &Field,
    tolerance: f64,
    max_iter: usize,
) -> Result<(Field, IterationReport)> {
    if !(tolerance > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "tolerance must be positive, got {tolerance}"
        )));
    }
    if max_iter == 0 {
        return Err(Error::InvalidParameter(
            "max_iter must be at least 1".into(),
        ));
    }
    let s_norm = s.norm();
    if s_norm == 0.0 {
        return Ok((
            c0.apply(s),
            IterationReport {
                iterations: 0,
                residual_history: vec![0.0],
                measured_rate: 0.0,
                rate_fitted: false,
                theoretical_rate: 0.0,
                converged: true,
                warnings: vec![],
            },
        ));
    }
    let outcome = drive(
        "generic",
        s.clone(),
        tolerance,
        max_iter,
        |q| {
            let mut next = w.apply(q);
            next.axpy(Complex64::new(1.0, 0.0), s);
            Ok(next)
        },
        |q| {
            let mut fp = w.apply(q);
            fp.axpy(Complex64::new(1.0, 0.0), s);
            Ok(fp.sub(q).norm() / s_norm)
        },
    )?;
    let report = report_from_outcome(&outcome, 0.0, vec![]);
    Ok((c0.apply(&outcome.iterate), report))
}

/// Store the series coefficients `q_0 = s`, `q_{i+1} = W q_i` up to order n.
pub fn series_coefficients(w: &dyn LinearOp, s: &Field, n: usize) -> Vec<Field> {
    let mut coeffs = Vec::with_capacity(n + 1);
    coeffs.push(s.clone());
    for i in 0..n {
        let next = w.apply(&coeffs[i]);
        coeffs.push(next);
    }
    coeffs
}

/// Evaluate the stored series `sum_j c^j q_j` at expansion parameter `c`
/// (any scheme prefactor is applied by the caller).
pub fn evaluate_series(coeffs: &[Field], c: Complex64) -> Field {
    let first = coeffs
        .first()
        .expect("series needs at least the zeroth coefficient");
    let mut acc = Field::zeros(first.geometry().clone(), first.components());
    let mut power = Complex64::new(1.0, 0.0);
    for q in coeffs {
        acc.axpy(power, q);
        power *= c;
    }
    acc
}
