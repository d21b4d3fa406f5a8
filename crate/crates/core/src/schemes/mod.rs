//! The four resolvent iteration schemes behind a common trait and runtime
//! registry, the generic iterate driver, coefficient-stored series
//! evaluation, effective-tensor assembly, and contour-integral functional
//! calculus.
//!
//! Every scheme computes the same object: the action of the model-problem
//! inverse `E = (G1 L G1)^{-1} s` on the gradient subspace, with
//! `L = z1 chi1 + z2 chi2`. Sources are projected onto the subspace before
//! iterating, and every scheme is judged by the same backward residual
//! `|G1 L E - s| / |s|` (equal to `|(z0 G1 - A) x - s| / |s|` for the
//! resolvent-normalized iterate `x = (z2 - z1) E`).

mod effective;
mod eyre_milton;
mod funcalc;
mod iterate;
mod neumann;
mod shifted;
mod spectral_sub;

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::Field;
use crate::media::TwoPhaseMedium;
use crate::projection::apply_gamma1;
use crate::spectral::SpectralBounds;

pub use effective::effective_tensor;
pub use eyre_milton::{EyreMiltonScheme, PhaseGammaReflector};
pub use funcalc::{function_of_operator, ContourOptions};
pub use iterate::{evaluate_series, iterate_generic, series_coefficients};
pub use neumann::NeumannScheme;
pub use shifted::ShiftedScheme;
pub use spectral_sub::{AugmentedField, SpectralSubstitutionScheme, SubstitutionReflector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SchemeKind {
    Neumann,
    Shifted,
    EyreMilton,
    Spectral,
}

impl SchemeKind {
    pub const ALL: [SchemeKind; 4] = [
        SchemeKind::Neumann,
        SchemeKind::Shifted,
        SchemeKind::EyreMilton,
        SchemeKind::Spectral,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            SchemeKind::Neumann => "neumann",
            SchemeKind::Shifted => "shifted",
            SchemeKind::EyreMilton => "eyre_milton",
            SchemeKind::Spectral => "spectral",
        }
    }
}

impl fmt::Display for SchemeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SchemeKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SchemeKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| {
                Error::InvalidParameter(format!(
                    "unknown scheme {s:?}; known schemes: {}",
                    SchemeKind::ALL.map(|k| k.as_str()).join(", ")
                ))
            })
    }
}

/// Everything a solve needs besides the source field.
#[derive(Debug, Clone)]
pub struct SolveConfig {
    pub medium: TwoPhaseMedium,
    pub scheme: SchemeKind,
    /// Backward-residual convergence threshold.
    pub tolerance: f64,
    pub max_iter: usize,
    /// Required by the spectral scheme, ignored by the others.
    pub bounds: Option<SpectralBounds>,
    /// Optional reference shift for the shifted scheme (default 1/2, the
    /// midpoint of the operator bounds). Any admissible shift yields the
    /// same converged solution.
    pub shift: Option<f64>,
}

impl SolveConfig {
    pub fn new(medium: TwoPhaseMedium, scheme: SchemeKind) -> Self {
        Self {
            medium,
            scheme,
            tolerance: 1e-10,
            max_iter: 10_000,
            bounds: None,
            shift: None,
        }
    }

    pub fn with_tolerance(mut self, tolerance: f64) -> Self {
        self.tolerance = tolerance;
        self
    }

    pub fn with_max_iter(mut self, max_iter: usize) -> Self {
        self.max_iter = max_iter;
        self
    }

    pub fn with_bounds(mut self, bounds: SpectralBounds) -> Self {
        self.bounds = Some(bounds);
        self
    }

    pub fn with_shift(mut self, shift: f64) -> Self {
        self.shift = Some(shift);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tolerance > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "tolerance must be positive, got {}",
                self.tolerance
            )));
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidParameter(
                "max_iter must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// Outcome of one iterative solve.
#[derive(Debug, Clone, Serialize)]
pub struct IterationReport {
    pub iterations: usize,
    /// Backward residual of iterate i at entry i; length `iterations + 1`.
    pub residual_history: Vec<f64>,
    /// Least-squares contraction factor fitted on the trailing half of the
    /// log-residual history; 0 with `rate_fitted = false` when fewer than
    /// six usable points exist.
    pub measured_rate: f64,
    pub rate_fitted: bool,
    pub theoretical_rate: f64,
    pub converged: bool,
    pub warnings: Vec<String>,
}

impl IterationReport {
    pub fn final_residual(&self) -> f64 {
        *self.residual_history.last().unwrap_or(&0.0)
    }

    /// Per-iteration log: `iter,residual,contraction_estimate` (the ratio
    /// of consecutive residuals, blank on the first row).
    pub fn residual_csv(&self) -> String {
        let mut out = String::from("iter,residual,contraction_estimate\n");
        let mut prev: Option<f64> = None;
        for (i, &r) in self.residual_history.iter().enumerate() {
            let contraction = match prev {
                Some(p) if p > 0.0 && r.is_finite() => format!("{:.16e}", r / p),
                _ => String::new(),
            };
            out.push_str(&format!("{i},{r:.16e},{contraction}\n"));
            prev = Some(r);
        }
        out
    }
}

/// A resolvent iteration scheme selectable at runtime.
pub trait ResolventScheme: Sync {
    fn kind(&self) -> SchemeKind;

    fn name(&self) -> &'static str {
        self.kind().as_str()
    }

    /// Upper bound on the asymptotic contraction for this configuration.
    fn theoretical_rate(&self, config: &SolveConfig) -> Result<f64>;

    /// Apply the model-problem inverse to a source. The source is projected
    /// onto the gradient subspace first; the returned field lies in it.
    fn solve(&self, config: &SolveConfig, source: &Field) -> Result<(Field, IterationReport)>;
}

static NEUMANN: NeumannScheme = NeumannScheme;
static SHIFTED: ShiftedScheme = ShiftedScheme;
static EYRE_MILTON: EyreMiltonScheme = EyreMiltonScheme;
static SPECTRAL: SpectralSubstitutionScheme = SpectralSubstitutionScheme;

static REGISTRY: [&dyn ResolventScheme; 4] = [&NEUMANN, &SHIFTED, &EYRE_MILTON, &SPECTRAL];

/// All registered schemes.
pub fn registry() -> &'static [&'static dyn ResolventScheme] {
    &REGISTRY
}

/// Look a scheme up by its registered name.
pub fn lookup(name: &str) -> Option<&'static dyn ResolventScheme> {
    registry().iter().copied().find(|s| s.name() == name)
}

pub fn scheme_for(kind: SchemeKind) -> &'static dyn ResolventScheme {
    registry()
        .iter()
        .copied()
        .find(|s| s.kind() == kind)
        .expect("every scheme kind is registered")
}

/// Dispatch a solve through the registry.
pub fn solve(config: &SolveConfig, source: &Field) -> Result<(Field, IterationReport)> {
    scheme_for(config.scheme).solve(config, source)
}

/// Backward residual `|G1 L x - s| / |s|` of a candidate solution.
pub fn backward_residual(
    medium: &TwoPhaseMedium,
    candidate: &Field,
    source: &Field,
    source_norm: f64,
) -> Result<f64> {
    let lx = medium.apply_l(candidate)?;
    let mut r = apply_gamma1(&lx)?;
    r.axpy(Complex64::new(-1.0, 0.0), source);
    Ok(r.norm() / source_norm)
}

/// Shared fast paths: zero source and homogeneous media solve exactly.
/// Returns `None` when the full iteration is needed.
pub(crate) fn trivial_solve(
    config: &SolveConfig,
    s_proj: &Field,
    theoretical_rate: f64,
) -> Result<Option<(Field, IterationReport)>> {
    let medium = &config.medium;
    if s_proj.norm() == 0.0 {
        let solution = Field::zeros(s_proj.geometry().clone(), s_proj.components());
        return Ok(Some((
            solution,
            IterationReport {
                iterations: 0,
                residual_history: vec![0.0],
                measured_rate: 0.0,
                rate_fitted: false,
                theoretical_rate,
                converged: true,
                warnings: vec![],
            },
        )));
    }
    if medium.is_homogeneous() {
        if medium.z2().norm() == 0.0 {
            return Err(Error::InvalidParameter(
                "homogeneous medium with zero modulus has no resolvent".into(),
            ));
        }
        let solution = s_proj.scaled(Complex64::new(1.0, 0.0) / medium.z2());
        let r = backward_residual(medium, &solution, s_proj, s_proj.norm())?;
        return Ok(Some((
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
        )));
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::GridGeometry;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn registry_names_round_trip() {
        for kind in SchemeKind::ALL {
            let scheme = scheme_for(kind);
            assert_eq!(scheme.kind(), kind);
            assert_eq!(
                lookup(kind.as_str()).map(|s| s.kind()),
                Some(kind),
                "{kind} not registered"
            );
            assert_eq!(kind.as_str().parse::<SchemeKind>().unwrap(), kind);
        }
        assert!(lookup("gauss_seidel").is_none());
        assert!("gauss_seidel".parse::<SchemeKind>().is_err());
    }

    #[test]
    fn config_validation() {
        let g = GridGeometry::new(&[2]).unwrap();
        let m = TwoPhaseMedium::laminate(g, 0, 0.5, c(1.0), c(2.0)).unwrap();
        let cfg = SolveConfig::new(m.clone(), SchemeKind::Neumann).with_tolerance(0.0);
        assert!(cfg.validate().is_err());
        let cfg = SolveConfig::new(m, SchemeKind::Neumann).with_max_iter(0);
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn registry_entries_are_shareable_across_threads() {
        fn assert_sync<T: Sync + ?Sized>(_: &T) {}
        for scheme in registry() {
            assert_sync(*scheme);
        }
        let g = GridGeometry::new(&[2]).unwrap();
        let m = TwoPhaseMedium::laminate(g, 0, 0.5, c(1.0), c(2.0)).unwrap();
        assert_sync(&m);
        assert_sync(&Field::zeros(m.geometry().clone(), 1));
    }

    #[test]
    fn residual_csv_shape() {
        let report = IterationReport {
            iterations: 2,
            residual_history: vec![1.0, 0.5, 0.25],
            measured_rate: 0.5,
            rate_fitted: false,
            theoretical_rate: 0.5,
            converged: true,
            warnings: vec![],
        };
        let csv = report.residual_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 4);
        assert_eq!(lines[0], "iter,residual,contraction_estimate");
        assert!(lines[1].starts_with("0,"));
        assert!(lines[1].ends_with(','));
        assert!(lines[2].contains("5.0000000000000000e-1"));
    }
}
