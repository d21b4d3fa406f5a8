//! The plain power-series scheme: reference medium z2, iterate
//! `W = (1 - z1/z2) G1 chi1`, start field `s / z2`. Converges when the
//! contrast ratio keeps `r0 = |1 - z1/z2|` below one.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::field::Field;
use crate::projection::apply_gamma1;

use super::iterate::{drive, report_from_outcome};
use super::{
    backward_residual, trivial_solve, IterationReport, ResolventScheme, SchemeKind, SolveConfig,
};

pub struct NeumannScheme;

impl ResolventScheme for NeumannScheme {
    fn kind(&self) -> SchemeKind {
        SchemeKind::Neumann
    }

    fn theoretical_rate(&self, config: &SolveConfig) -> Result<f64> {
        let medium = &config.medium;
        if medium.z2().norm() == 0.0 {
            return Err(Error::InvalidParameter("plain series needs z2 != 0".into()));
        }
        Ok((Complex64::new(1.0, 0.0) - medium.contrast()).norm())
    }

    fn solve(&self, config: &SolveConfig, source: &Field) -> Result<(Field, IterationReport)> {
        config.validate()?;
        let medium = &config.medium;
        let s_proj = apply_gamma1(source)?;
        let rate = if medium.is_homogeneous() {
            0.0
        } else {
            self.theoretical_rate(config)?
        };
        if let Some(done) = trivial_solve(config, &s_proj, rate)? {
            return Ok(done);
        }

        let mut warnings = Vec::new();
        if rate >= 1.0 {
            warnings.push(format!(
                "plain-series rate r0 = {rate:.6} >= 1; the expansion is not guaranteed to converge"
            ));
        }

        let ratio = Complex64::new(1.0, 0.0) - medium.contrast();
        let zero = Complex64::new(0.0, 0.0);
        let s_norm = s_proj.norm();
        let start = s_proj.scaled(Complex64::new(1.0, 0.0) / medium.z2());

        let outcome = drive(
            self.name(),
            start.clone(),
            config.tolerance,
            config.max_iter,
            |q| {
                let masked = medium.apply_phase_scalars(q, ratio, zero)?;
                let mut next = apply_gamma1(&masked)?;
                next.axpy(Complex64::new(1.0, 0.0), &start);
                Ok(next)
            },
            |q| backward_residual(medium, q, &s_proj, s_norm),
        )?;
        let report = report_from_outcome(&outcome, rate, warnings);
        Ok((outcome.iterate, report))
    }
}
