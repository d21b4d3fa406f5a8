//! The midpoint-shifted scheme: reference medium `z0' = z0 - c` with
//! `c = (b+ + b-)/2 = 1/2` by default, iterate `W = G1 (chi1 - c I)/z0'`,
//! start field `s / (z0' (z2 - z1))`. Halves the plain scheme's spectral
//! radius and, unlike the accelerated schemes, can converge for negative
//! real contrast. The converged solution is independent of the admissible
//! shift; only the rate changes.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::field::Field;
use crate::projection::apply_gamma1;

use super::iterate::{drive, report_from_outcome};
use super::{
    backward_residual, trivial_solve, IterationReport, ResolventScheme, SchemeKind, SolveConfig,
};

pub struct ShiftedScheme;

struct ShiftParams {
    shift: f64,
    z0_prime: Complex64,
    rate: f64,
}

fn params(config: &SolveConfig) -> Result<ShiftParams> {
    let medium = &config.medium;
    let z0 = medium
        .z0()
        .ok_or_else(|| Error::InvalidParameter("shifted scheme parameters need z1 != z2".into()))?;
    let shift = config.shift.unwrap_or(0.5);
    let z0_prime = z0 - shift;
    if z0_prime.norm() < 1e-300 {
        return Err(Error::InvalidParameter(format!(
            "shifted reference vanishes: z0 = {z0} equals the shift {shift} \
             (for the default shift this is the z1 = -z2 degeneracy)"
        )));
    }
    // operator bounds are (0, 1), so the shifted spectral radius is
    // max(|c|, |1 - c|) and the rate max(|c|, |1-c|)/|z0 - c|
    let rate = shift.abs().max((1.0 - shift).abs()) / z0_prime.norm();
    Ok(ShiftParams {
        shift,
        z0_prime,
        rate,
    })
}

impl ResolventScheme for ShiftedScheme {
    fn kind(&self) -> SchemeKind {
        SchemeKind::Shifted
    }

    fn theoretical_rate(&self, config: &SolveConfig) -> Result<f64> {
        if config.medium.is_homogeneous() {
            return Ok(0.0);
        }
        Ok(params(config)?.rate)
    }

    fn solve(&self, config: &SolveConfig, source: &Field) -> Result<(Field, IterationReport)> {
        config.validate()?;
        let medium = &config.medium;
        let s_proj = apply_gamma1(source)?;
        if medium.is_homogeneous() {
            if let Some(done) = trivial_solve(config, &s_proj, 0.0)? {
                return Ok(done);
            }
        }
        let p = params(config)?;
        if let Some(done) = trivial_solve(config, &s_proj, p.rate)? {
            return Ok(done);
        }

        let mut warnings = Vec::new();
        if p.rate >= 1.0 {
            warnings.push(format!(
                "shifted-series rate r1 = {:.6} >= 1 at shift c = {}; not guaranteed to converge",
                p.rate, p.shift
            ));
        }

        // W = G1 (chi - c I)/z0' folded into per-phase scalars
        let v1 = (Complex64::new(1.0 - p.shift, 0.0)) / p.z0_prime;
        let v2 = (Complex64::new(-p.shift, 0.0)) / p.z0_prime;
        let s_norm = s_proj.norm();
        let start =
            s_proj.scaled(Complex64::new(1.0, 0.0) / (p.z0_prime * (medium.z2() - medium.z1())));

        let outcome = drive(
            self.name(),
            start.clone(),
            config.tolerance,
            config.max_iter,
            |q| {
                let masked = medium.apply_phase_scalars(q, v1, v2)?;
                let mut next = apply_gamma1(&masked)?;
                next.axpy(Complex64::new(1.0, 0.0), &start);
                Ok(next)
            },
            |q| backward_residual(medium, q, &s_proj, s_norm),
        )?;
        let report = report_from_outcome(&outcome, p.rate, warnings);
        Ok((outcome.iterate, report))
    }
}
