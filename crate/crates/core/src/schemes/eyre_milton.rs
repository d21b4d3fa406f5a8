//! The accelerated scheme: iterate built from the two reflections
//! `(2 chi1 - I)` and `(I - 2 G1)` scaled by
//! `v = (sqrt(z1/z2) - 1)/(sqrt(z1/z2) + 1)`, with the pointwise real-space
//! prefactor `2 (L + z0' I)^{-1}`, `z0' = z2 sqrt(z1/z2)`.
//!
//! Both reflections are isometric involutions, so the iterate operator has
//! norm exactly `|v|` and the contraction is global, not just asymptotic.
//! Principal square roots throughout: for negative real contrast the map
//! puts `|v|` on the unit circle and the scheme cannot converge (the
//! shifted scheme may; see its module).

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::field::Field;
use crate::media::TwoPhaseMedium;
use crate::operator::LinearOp;
use crate::projection::{apply_gamma1, reflect_gamma1};

use super::iterate::{drive, report_from_outcome};
use super::{
    backward_residual, trivial_solve, IterationReport, ResolventScheme, SchemeKind, SolveConfig,
};

pub struct EyreMiltonScheme;

pub(crate) struct AcceleratedParams {
    pub v: Complex64,
    /// Pointwise prefactor value on phase 1: `2/(z1 + z0')`.
    pub pre1: Complex64,
    /// Pointwise prefactor value on phase 2: `2/(z2 + z0')`.
    pub pre2: Complex64,
}

pub(crate) fn accelerated_params(medium: &TwoPhaseMedium) -> Result<AcceleratedParams> {
    let (z1, z2) = (medium.z1(), medium.z2());
    if z1.norm() == 0.0 || z2.norm() == 0.0 {
        return Err(Error::InvalidParameter(
            "accelerated scheme needs nonzero moduli in both phases".into(),
        ));
    }
    let w = (z1 / z2).sqrt();
    let v = (w - 1.0) / (w + 1.0);
    let z0_prime = z2 * w;
    let d1 = z1 + z0_prime;
    let d2 = z2 + z0_prime;
    let scale = z1.norm().max(z2.norm());
    if d1.norm() < 1e-14 * scale || d2.norm() < 1e-14 * scale {
        return Err(Error::InvalidParameter(
            "accelerated prefactor (L + z0' I) is singular in one phase".into(),
        ));
    }
    Ok(AcceleratedParams {
        v,
        pre1: Complex64::new(2.0, 0.0) / d1,
        pre2: Complex64::new(2.0, 0.0) / d2,
    })
}

impl ResolventScheme for EyreMiltonScheme {
    fn kind(&self) -> SchemeKind {
        SchemeKind::EyreMilton
    }

    fn theoretical_rate(&self, config: &SolveConfig) -> Result<f64> {
        if config.medium.is_homogeneous() {
            return Ok(0.0);
        }
        Ok(accelerated_params(&config.medium)?.v.norm())
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
        let p = accelerated_params(medium)?;
        let rate = p.v.norm();
        if let Some(done) = trivial_solve(config, &s_proj, rate)? {
            return Ok(done);
        }

        let mut warnings = Vec::new();
        if rate >= 1.0 - 1e-12 {
            warnings.push(format!(
                "accelerated rate |v| = {rate:.6} is not below 1 (negative real contrast \
                 puts the square-root singularities on the iteration path)"
            ));
        }

        let s_norm = s_proj.norm();
        let finish = |q: &Field| -> Result<Field> {
            let pre = medium.apply_phase_scalars(q, p.pre1, p.pre2)?;
            apply_gamma1(&pre)
        };

        let outcome = drive(
            self.name(),
            s_proj.clone(),
            config.tolerance,
            config.max_iter,
            |q| {
                let flipped = medium.reflect_chi(q)?;
                let mut next = reflect_gamma1(&flipped)?;
                next.scale(p.v);
                next.axpy(Complex64::new(1.0, 0.0), &s_proj);
                Ok(next)
            },
            |q| {
                let candidate = finish(q)?;
                backward_residual(medium, &candidate, &s_proj, s_norm)
            },
        )?;
        let solution = finish(&outcome.iterate)?;
        let report = report_from_outcome(&outcome, rate, warnings);
        Ok((solution, report))
    }
}

/// The composed reflection `(2 chi1 - I)(I - 2 G1)`, the operator whose
/// powers the accelerated series walks through. Each factor is a Hermitian
/// isometric involution, so the product is unitary with norm one.
pub struct PhaseGammaReflector<'a> {
    medium: &'a TwoPhaseMedium,
}

impl<'a> PhaseGammaReflector<'a> {
    pub fn new(medium: &'a TwoPhaseMedium) -> Self {
        Self { medium }
    }
}

impl LinearOp for PhaseGammaReflector<'_> {
    fn apply(&self, field: &Field) -> Field {
        let g = reflect_gamma1(field).expect("reflector shape checked by caller");
        self.medium
            .reflect_chi(&g)
            .expect("reflector shape checked by caller")
    }

    fn apply_adjoint(&self, field: &Field) -> Option<Field> {
        let x = self
            .medium
            .reflect_chi(field)
            .expect("reflector shape checked by caller");
        Some(reflect_gamma1(&x).expect("reflector shape checked by caller"))
    }
}
