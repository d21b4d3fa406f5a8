//! The spectral-substitution scheme: embeds the problem into a triple-field
//! system through the non-selfadjoint projection `P = p (x) p`, turning
//! spectrum bounds `[a-, a+]` on the composite operator into a transformed
//! two-phase problem whose accelerated iterate contracts at
//! `|v| = |(w - 1)/(w + 1)|`, `w = sqrt(z1_/z2_)` — smaller than the plain
//! accelerated rate whenever the bounds are tighter than [0, 1].
//!
//! The augmented iterate is `W = v (I - 2 G1_)(2 Lambda - I)` with
//! `G1_ = diag(G1, I, 0)` and `Lambda(x) = chi1(x) p (x) p` across the
//! three slots; the prefactor `2 (L_ + w I)^{-1}` uses the closed form
//! `(c I + d Lambda)^{-1} = (1/c)(I - d/(c + d) Lambda)`. Slot 0 of the
//! converged triple is the solution; slot 2 vanishes at convergence.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::field::{Field, GridGeometry};
use crate::media::TwoPhaseMedium;
use crate::operator::LinearOp;
use crate::projection::{apply_gamma1, reflect_gamma1};
use crate::rates::{bounds_to_interval, map_chain, substitution_params, SubstitutionParams};
use crate::spectral::SpectralBounds;

use super::iterate::{drive, report_from_outcome};
use super::{
    backward_residual, trivial_solve, IterationReport, ResolventScheme, SchemeKind, SolveConfig,
};

const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Width below which a spectral interval is treated as the degenerate
/// single-point case (one-step analytic solve, v = 0).
const DEGENERATE_WIDTH: f64 = 1e-12;

/// Three stacked d-component fields (slots 0, 1, 2) on one grid.
#[derive(Debug, Clone, PartialEq)]
pub struct AugmentedField {
    field: Field,
    slot_components: usize,
}

impl AugmentedField {
    /// Embed a base field as slot 0 with zero companion slots.
    pub fn embed(base: &Field) -> Self {
        let d = base.components();
        let mut field = Field::zeros(base.geometry().clone(), 3 * d);
        let n = base.geometry().total_cells();
        field.values_mut()[..d * n].copy_from_slice(base.values());
        Self {
            field,
            slot_components: d,
        }
    }

    pub fn from_field(field: Field) -> Result<Self> {
        if field.components() % 3 != 0 {
            return Err(Error::ShapeMismatch(format!(
                "augmented fields need 3k components, got {}",
                field.components()
            )));
        }
        let slot_components = field.components() / 3;
        Ok(Self {
            field,
            slot_components,
        })
    }

    pub fn field(&self) -> &Field {
        &self.field
    }

    pub fn slot_components(&self) -> usize {
        self.slot_components
    }

    /// Copy out one of the three stacked fields.
    pub fn slot(&self, index: usize) -> Field {
        assert!(index < 3);
        let d = self.slot_components;
        let n = self.field.geometry().total_cells();
        let mut out = Field::zeros(self.field.geometry().clone(), d);
        out.values_mut()
            .copy_from_slice(&self.field.values()[index * d * n..(index + 1) * d * n]);
        out
    }
}

/// `Lambda f` with `Lambda(x) = chi1(x) p (x) p` acting on the slot index.
fn lambda_apply(medium: &TwoPhaseMedium, p: &[Complex64; 3], f: &Field, d: usize) -> Field {
    let n = medium.geometry().total_cells();
    let mut out = Field::zeros(f.geometry().clone(), f.components());
    let src = f.values();
    let dst = out.values_mut();
    for (cell, &chi) in medium.indicator().iter().enumerate() {
        if chi == 0 {
            continue;
        }
        for c in 0..d {
            let mut sigma = Complex64::new(0.0, 0.0);
            for (j, pj) in p.iter().enumerate() {
                sigma += pj * src[(j * d + c) * n + cell];
            }
            for (i, pi) in p.iter().enumerate() {
                dst[(i * d + c) * n + cell] = pi * sigma;
            }
        }
    }
    out
}

/// `(2 Lambda - I) f`.
fn reflect_lambda(medium: &TwoPhaseMedium, p: &[Complex64; 3], f: &Field, d: usize) -> Field {
    let mut out = lambda_apply(medium, p, f, d);
    out.scale(Complex64::new(2.0, 0.0));
    out.axpy(Complex64::new(-1.0, 0.0), f);
    out
}

/// `(I - 2 G1_) f` with `G1_ = diag(G1, I, 0)`: slot 0 is reflected through
/// the gradient subspace, slot 1 negated, slot 2 kept.
fn reflect_gamma_augmented(f: &Field, d: usize) -> Result<Field> {
    let geometry = f.geometry().clone();
    let n = geometry.total_cells();
    let mut slot0 = Field::zeros(geometry.clone(), d);
    slot0.values_mut().copy_from_slice(&f.values()[..d * n]);
    let reflected = reflect_gamma1(&slot0)?;
    let mut out = f.clone();
    out.values_mut()[..d * n].copy_from_slice(reflected.values());
    for v in &mut out.values_mut()[d * n..2 * d * n] {
        *v = -*v;
    }
    Ok(out)
}

/// Transformed-problem constants for one medium/bounds pair.
struct SubstitutionSetup {
    p: [Complex64; 3],
    v: Complex64,
    /// `(z1_ - 1)/(w + z1_)` in the prefactor closed form.
    pre_coeff: Complex64,
    /// `2/(1 + w)` overall prefactor scale.
    pre_scale: Complex64,
}

fn setup(medium: &TwoPhaseMedium, params: &SubstitutionParams) -> Result<SubstitutionSetup> {
    let t = medium.contrast();
    let point = map_chain(t, params.alpha, params.beta)?;
    let w = point.w;
    if w.norm() < 1e-14 {
        return Err(Error::InvalidParameter(
            "contrast sits at the singular edge of the spectral interval (w = 0)".into(),
        ));
    }
    let denom = w + point.underline;
    let denom1 = ONE + w;
    if denom.norm() < 1e-14 || denom1.norm() < 1e-14 {
        return Err(Error::InvalidParameter(
            "transformed prefactor (L_ + w I) is singular".into(),
        ));
    }
    Ok(SubstitutionSetup {
        p: params.p(),
        v: point.v,
        pre_coeff: (point.underline - ONE) / denom,
        pre_scale: Complex64::new(2.0, 0.0) / denom1,
    })
}

impl SubstitutionSetup {
    /// `2 (L_ + w I)^{-1} f` via the projection closed form.
    fn prefactor(&self, medium: &TwoPhaseMedium, f: &Field, d: usize) -> Field {
        let mut out = f.clone();
        let corr = lambda_apply(medium, &self.p, f, d);
        out.axpy(-self.pre_coeff, &corr);
        out.scale(self.pre_scale);
        out
    }
}

pub struct SpectralSubstitutionScheme;

impl SpectralSubstitutionScheme {
    fn interval(config: &SolveConfig) -> Result<SpectralBounds> {
        config.bounds.ok_or_else(|| {
            Error::InvalidParameter(
                "the spectral scheme needs spectrum bounds in the solve configuration".into(),
            )
        })
    }

    /// Full solve exposing the converged augmented triple (slot 2 of the
    /// result vanishes to solver tolerance).
    pub fn solve_augmented(
        &self,
        config: &SolveConfig,
        source: &Field,
    ) -> Result<(AugmentedField, Field, IterationReport)> {
        config.validate()?;
        let medium = &config.medium;
        let bounds = Self::interval(config)?;
        let s_proj = apply_gamma1(source)?;
        let d = s_proj.components();

        if medium.is_homogeneous() || bounds.width() < DEGENERATE_WIDTH || s_proj.norm() == 0.0 {
            let (solution, report) = self.solve_short(config, &bounds, &s_proj)?;
            return Ok((AugmentedField::embed(&solution), solution, report));
        }

        let z0 = medium.z0().expect("non-homogeneous medium has z0");
        let (alpha, beta) = bounds_to_interval(bounds.a_minus, bounds.a_plus)?;
        let params = substitution_params(alpha, beta)?;
        let su = setup(medium, &params)?;
        let rate = su.v.norm();

        let mut warnings = Vec::new();
        if rate >= 1.0 - 1e-12 {
            warnings.push(format!(
                "substitution rate |v| = {rate:.6} is not below 1; the contrast maps onto \
                 or outside the unit circle for the given bounds"
            ));
        }

        let z_scale = ONE / (medium.z2() - medium.z1());
        let s_norm = s_proj.norm();
        let start = AugmentedField::embed(&s_proj.scaled(ONE / z0));
        let finish = |q: &Field| -> Result<(AugmentedField, Field)> {
            let pre = su.prefactor(medium, q, d);
            let triple = AugmentedField::from_field(pre)?;
            let solution = apply_gamma1(&triple.slot(0))?.scaled(z_scale);
            Ok((triple, solution))
        };

        let outcome = drive(
            self.name(),
            start.field().clone(),
            config.tolerance,
            config.max_iter,
            |q| {
                let flipped = reflect_lambda(medium, &su.p, q, d);
                let mut next = reflect_gamma_augmented(&flipped, d)?;
                next.scale(su.v);
                next.axpy(ONE, start.field());
                Ok(next)
            },
            |q| {
                let (_, candidate) = finish(q)?;
                backward_residual(medium, &candidate, &s_proj, s_norm)
            },
        )?;
        let (triple, solution) = finish(&outcome.iterate)?;
        let report = report_from_outcome(&outcome, rate, warnings);
        Ok((triple, solution, report))
    }

    /// One-step paths: zero source, homogeneous medium, or a degenerate
    /// (single-point) spectral interval, where the resolvent is the scalar
    /// `1/(z0 - a)` on the whole subspace.
    fn solve_short(
        &self,
        config: &SolveConfig,
        bounds: &SpectralBounds,
        s_proj: &Field,
    ) -> Result<(Field, IterationReport)> {
        if let Some(done) = trivial_solve(config, s_proj, 0.0)? {
            return Ok(done);
        }
        let medium = &config.medium;
        let z0 = medium.z0().expect("non-homogeneous medium has z0");
        let a = Complex64::new(0.5 * (bounds.a_minus + bounds.a_plus), 0.0);
        if (z0 - a).norm() < 1e-12 * z0.norm().max(1.0) {
            return Err(Error::SingularResolvent { z0, nearest: a.re });
        }
        let solution = s_proj.scaled(ONE / ((z0 - a) * (medium.z2() - medium.z1())));
        let r = backward_residual(medium, &solution, s_proj, s_proj.norm())?;
        Ok((
            solution,
            IterationReport {
                iterations: 0,
                residual_history: vec![r],
                measured_rate: 0.0,
                rate_fitted: false,
                theoretical_rate: 0.0,
                converged: r <= config.tolerance,
                warnings: vec![],
            },
        ))
    }
}

impl ResolventScheme for SpectralSubstitutionScheme {
    fn kind(&self) -> SchemeKind {
        SchemeKind::Spectral
    }

    fn theoretical_rate(&self, config: &SolveConfig) -> Result<f64> {
        let medium = &config.medium;
        let bounds = Self::interval(config)?;
        if medium.is_homogeneous() || bounds.width() < DEGENERATE_WIDTH {
            return Ok(0.0);
        }
        let (alpha, beta) = bounds_to_interval(bounds.a_minus, bounds.a_plus)?;
        Ok(map_chain(medium.contrast(), alpha, beta)?.v.norm())
    }

    fn solve(&self, config: &SolveConfig, source: &Field) -> Result<(Field, IterationReport)> {
        let (_, solution, report) = self.solve_augmented(config, source)?;
        Ok((solution, report))
    }
}

/// The composed reflection `(2 Lambda - I)(I - 2 G1_)` on augmented fields.
/// With substitution parameters from the exact spectrum endpoints its norm
/// is one even though `Lambda` itself has norm above one; with estimated
/// bounds the norm exceeds one and the series' convergence radius shrinks.
pub struct SubstitutionReflector<'a> {
    medium: &'a TwoPhaseMedium,
    p: [Complex64; 3],
    slot_components: usize,
}

impl<'a> SubstitutionReflector<'a> {
    pub fn new(medium: &'a TwoPhaseMedium, params: &SubstitutionParams) -> Self {
        Self {
            medium,
            p: params.p(),
            slot_components: medium.geometry().dim(),
        }
    }

    pub fn geometry(&self) -> &GridGeometry {
        self.medium.geometry()
    }

    pub fn components(&self) -> usize {
        3 * self.slot_components
    }
}

impl LinearOp for SubstitutionReflector<'_> {
    fn apply(&self, field: &Field) -> Field {
        let d = self.slot_components;
        let g = reflect_gamma_augmented(field, d).expect("reflector shape checked by caller");
        reflect_lambda(self.medium, &self.p, &g, d)
    }

    fn apply_adjoint(&self, field: &Field) -> Option<Field> {
        let d = self.slot_components;
        let p_conj = [self.p[0].conj(), self.p[1].conj(), self.p[2].conj()];
        let l = reflect_lambda(self.medium, &p_conj, field, d);
        Some(reflect_gamma_augmented(&l, d).expect("reflector shape checked by caller"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schemes::EyreMiltonScheme;
    use crate::spectral::{dense_assemble, BoundsProvenance};

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn geom(dims: &[usize]) -> GridGeometry {
        GridGeometry::new(dims).unwrap()
    }

    fn bounds(a_minus: f64, a_plus: f64) -> SpectralBounds {
        SpectralBounds::checked(a_minus, a_plus, BoundsProvenance::Manual, 0).unwrap()
    }

    #[test]
    fn needs_bounds() {
        let m = TwoPhaseMedium::laminate(geom(&[2]), 0, 0.5, c(1.0), c(2.0)).unwrap();
        let cfg = SolveConfig::new(m, SchemeKind::Spectral);
        let s = Field::random(geom(&[2]), 1, 1);
        assert!(SpectralSubstitutionScheme.solve(&cfg, &s).is_err());
    }

    #[test]
    fn degenerate_interval_one_step() {
        // 2-cell laminate: exact spectrum {1/2}; z1 = 1, z2 = 2 gives (2/3)s
        let m = TwoPhaseMedium::laminate(geom(&[2]), 0, 0.5, c(1.0), c(2.0)).unwrap();
        let cfg = SolveConfig::new(m, SchemeKind::Spectral)
            .with_tolerance(1e-10)
            .with_bounds(bounds(0.5, 0.5));
        let mut s = Field::zeros(geom(&[2]), 1);
        s.set(0, 0, c(1.0));
        s.set(0, 1, c(-1.0));
        let (x, report) = SpectralSubstitutionScheme.solve(&cfg, &s).unwrap();
        assert!(report.converged);
        assert_eq!(report.iterations, 0);
        assert_eq!(report.theoretical_rate, 0.0);
        assert!(x.sub(&s.scaled(c(2.0 / 3.0))).norm() < 1e-10);
    }

    #[test]
    fn full_interval_degenerates_to_accelerated_scheme() {
        let g = geom(&[8, 8]);
        let m = TwoPhaseMedium::random(g.clone(), 0.5, 51, c(1.0), c(2.0)).unwrap();
        let s = Field::random(g, 2, 52);
        let spectral_cfg = SolveConfig::new(m.clone(), SchemeKind::Spectral)
            .with_tolerance(1e-12)
            .with_bounds(bounds(0.0, 1.0));
        let (x_sub, r_sub) = SpectralSubstitutionScheme.solve(&spectral_cfg, &s).unwrap();
        let em_cfg = SolveConfig::new(m, SchemeKind::EyreMilton).with_tolerance(1e-12);
        let (x_em, r_em) = EyreMiltonScheme.solve(&em_cfg, &s).unwrap();
        assert!(r_sub.converged && r_em.converged);
        assert!((r_sub.theoretical_rate - r_em.theoretical_rate).abs() < 1e-14);
        assert!(x_sub.sub(&x_em).norm() < 1e-10 * x_em.norm());
    }

    #[test]
    fn exact_bounds_match_dense_oracle_and_beat_accelerated_rate() {
        let g = geom(&[8, 8]);
        let m = TwoPhaseMedium::random(g.clone(), 0.5, 61, c(1.0), c(4.0)).unwrap();
        let op = dense_assemble(&m).unwrap();
        let exact = op.bounds().unwrap();
        assert!(exact.width() > 1e-6);
        let s = apply_gamma1(&Field::random(g, 2, 62)).unwrap();
        let cfg = SolveConfig::new(m.clone(), SchemeKind::Spectral)
            .with_tolerance(1e-12)
            .with_bounds(exact);
        let (x, report) = SpectralSubstitutionScheme.solve(&cfg, &s).unwrap();
        assert!(report.converged);
        let oracle = op.solve_model(&m, &s).unwrap();
        assert!(x.sub(&oracle).norm() < 1e-9 * oracle.norm());

        let em_cfg = SolveConfig::new(m, SchemeKind::EyreMilton);
        let em_rate = EyreMiltonScheme.theoretical_rate(&em_cfg).unwrap();
        assert!(report.theoretical_rate < em_rate);
    }

    #[test]
    fn converged_triple_has_vanishing_third_slot() {
        let g = geom(&[8, 8]);
        let m = TwoPhaseMedium::random(g.clone(), 0.5, 71, c(1.0), c(4.0)).unwrap();
        let exact = dense_assemble(&m).unwrap().bounds().unwrap();
        let s = apply_gamma1(&Field::random(g, 2, 72)).unwrap();
        let cfg = SolveConfig::new(m, SchemeKind::Spectral)
            .with_tolerance(1e-11)
            .with_bounds(exact);
        let (triple, solution, report) = SpectralSubstitutionScheme
            .solve_augmented(&cfg, &s)
            .unwrap();
        assert!(report.converged);
        // the E-part of slot 2 vanishes to solver tolerance
        let slot2 = apply_gamma1(&triple.slot(2)).unwrap();
        assert!(slot2.norm() < 100.0 * cfg.tolerance * solution.norm().max(1.0));
    }

    #[test]
    fn homogeneous_medium_ignores_bounds() {
        let g = geom(&[4]);
        let m = TwoPhaseMedium::random(g.clone(), 0.5, 3, c(2.0), c(2.0)).unwrap();
        let cfg = SolveConfig::new(m, SchemeKind::Spectral).with_bounds(bounds(0.2, 0.8));
        let s = Field::random(g, 1, 4);
        let (x, report) = SpectralSubstitutionScheme.solve(&cfg, &s).unwrap();
        assert!(report.converged);
        assert_eq!(report.theoretical_rate, 0.0);
        let expected = apply_gamma1(&s).unwrap().scaled(c(0.5));
        assert!(x.sub(&expected).norm() < 1e-13);
    }

    #[test]
    fn augmented_embedding_round_trip() {
        let base = Field::random(geom(&[4, 4]), 2, 5);
        let triple = AugmentedField::embed(&base);
        assert_eq!(triple.field().components(), 6);
        assert_eq!(triple.slot(0), base);
        assert_eq!(triple.slot(1).norm(), 0.0);
        assert_eq!(triple.slot(2).norm(), 0.0);
        assert!(AugmentedField::from_field(Field::zeros(geom(&[4, 4]), 4)).is_err());
    }
}
