//! Strict run-configuration schema: unknown keys are rejected, and every
//! cross-field requirement is validated with the offending key path before
//! any computation starts.

use std::fs::File;
use std::io::BufReader;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use resolvent_core::field::{Field, GridGeometry};
use resolvent_core::media::TwoPhaseMedium;
use resolvent_core::projection::apply_gamma1;
use resolvent_core::schemes::{SchemeKind, SolveConfig};
use resolvent_core::spectral::{
    dense_assemble, power_method_extremes, BoundsProvenance, SpectralBounds,
};

#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "invalid config: {}", self.0)
    }
}

impl std::error::Error for ConfigError {}

fn bad(path: &str, what: impl std::fmt::Display) -> ConfigError {
    ConfigError(format!("{path}: {what}"))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub geometry: Vec<usize>,
    pub microstructure: MicrostructureSpec,
    /// Complex moduli as [re, im] pairs.
    pub z1: [f64; 2],
    pub z2: [f64; 2],
    pub scheme: String,
    #[serde(default)]
    pub bounds: Option<BoundsSpec>,
    pub tolerance: f64,
    pub max_iter: usize,
    pub seed: u64,
    pub source: SourceSpec,
    /// Optional reference shift for the shifted scheme.
    #[serde(default)]
    pub shift: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MicrostructureSpec {
    #[serde(rename = "type")]
    pub kind: String,
    #[serde(default)]
    pub axis: Option<usize>,
    #[serde(default)]
    pub f1: Option<f64>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub radius_fraction: Option<f64>,
    #[serde(default)]
    pub path: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundsSpec {
    pub mode: String,
    #[serde(default)]
    pub a_minus: Option<f64>,
    #[serde(default)]
    pub a_plus: Option<f64>,
    #[serde(default)]
    pub power_iterations: Option<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceSpec {
    #[serde(rename = "type")]
    pub kind: String,
    #[serde(default)]
    pub axis: Option<usize>,
    #[serde(default)]
    pub path: Option<String>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let file = File::open(path)
            .map_err(|e| ConfigError(format!("cannot open {}: {e}", path.display())))?;
        let config: RunConfig = serde_json::from_reader(BufReader::new(file))
            .map_err(|e| ConfigError(format!("{}: {e}", path.display())))?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.geometry.is_empty() || self.geometry.len() > 3 {
            return Err(bad("geometry", "needs 1 to 3 axis lengths"));
        }
        if self.geometry.iter().any(|&n| n < 2) {
            return Err(bad("geometry", "each axis needs at least 2 cells"));
        }
        if !(self.tolerance > 0.0) {
            return Err(bad("tolerance", "must be positive"));
        }
        if self.max_iter == 0 {
            return Err(bad("max_iter", "must be at least 1"));
        }
        self.scheme_kind()?;
        self.microstructure.validate()?;
        if let Some(b) = &self.bounds {
            b.validate()?;
        }
        self.source.validate()?;
        Ok(())
    }

    pub fn scheme_kind(&self) -> Result<SchemeKind, ConfigError> {
        self.scheme
            .parse()
            .map_err(|e| bad("scheme", format!("{e}")))
    }

    pub fn z1c(&self) -> Complex64 {
        Complex64::new(self.z1[0], self.z1[1])
    }

    pub fn z2c(&self) -> Complex64 {
        Complex64::new(self.z2[0], self.z2[1])
    }

    pub fn build_geometry(&self) -> Result<GridGeometry, ConfigError> {
        GridGeometry::new(&self.geometry).map_err(|e| bad("geometry", e))
    }

    pub fn build_medium(&self) -> Result<TwoPhaseMedium, ConfigError> {
        let geometry = self.build_geometry()?;
        self.microstructure
            .build(geometry, self.z1c(), self.z2c(), self.seed)
    }

    pub fn build_source(&self, medium: &TwoPhaseMedium) -> Result<Field, ConfigError> {
        self.source.build(medium, self.seed)
    }

    /// Resolve the bounds specification, running the power method or the
    /// dense oracle when asked to.
    pub fn build_bounds(
        &self,
        medium: &TwoPhaseMedium,
    ) -> Result<Option<SpectralBounds>, ConfigError> {
        let Some(spec) = &self.bounds else {
            return Ok(None);
        };
        spec.resolve(medium, self.seed)
    }

    pub fn build_solve_config(&self) -> Result<SolveConfig, ConfigError> {
        let medium = self.build_medium()?;
        let bounds = self.build_bounds(&medium)?;
        let mut config = SolveConfig::new(medium, self.scheme_kind()?)
            .with_tolerance(self.tolerance)
            .with_max_iter(self.max_iter);
        config.bounds = bounds;
        config.shift = self.shift;
        if config.scheme == SchemeKind::Spectral && config.bounds.is_none() {
            return Err(bad(
                "bounds",
                "the spectral scheme needs bounds (mode manual, power, or exact)",
            ));
        }
        Ok(config)
    }
}

impl MicrostructureSpec {
    fn validate(&self) -> Result<(), ConfigError> {
        match self.kind.as_str() {
            "laminate" => {
                if self.axis.is_none() || self.f1.is_none() {
                    return Err(bad("microstructure", "laminate needs axis and f1"));
                }
            }
            "random" => {
                if self.f1.is_none() {
                    return Err(bad("microstructure.f1", "required for type random"));
                }
            }
            "disk" => {
                if self.radius_fraction.is_none() {
                    return Err(bad(
                        "microstructure.radius_fraction",
                        "required for type disk",
                    ));
                }
            }
            "file" => {
                if self.path.is_none() {
                    return Err(bad("microstructure.path", "required for type file"));
                }
            }
            other => {
                return Err(bad(
                    "microstructure.type",
                    format!("unknown type {other:?} (laminate, random, disk, file)"),
                ))
            }
        }
        Ok(())
    }

    fn build(
        &self,
        geometry: GridGeometry,
        z1: Complex64,
        z2: Complex64,
        run_seed: u64,
    ) -> Result<TwoPhaseMedium, ConfigError> {
        let made = match self.kind.as_str() {
            "laminate" => TwoPhaseMedium::laminate(
                geometry,
                self.axis.expect("validated"),
                self.f1.expect("validated"),
                z1,
                z2,
            ),
            "random" => TwoPhaseMedium::random(
                geometry,
                self.f1.expect("validated"),
                self.seed.unwrap_or(run_seed),
                z1,
                z2,
            ),
            "disk" => {
                TwoPhaseMedium::disk(geometry, self.radius_fraction.expect("validated"), z1, z2)
            }
            "file" => {
                let path = self.path.as_ref().expect("validated");
                let file = File::open(path)
                    .map_err(|e| bad("microstructure.path", format!("{path}: {e}")))?;
                let medium = TwoPhaseMedium::read_indicator(BufReader::new(file), z1, z2)
                    .map_err(|e| bad("microstructure.path", e))?;
                if medium.geometry() != &geometry {
                    return Err(bad(
                        "microstructure.path",
                        "indicator grid does not match geometry",
                    ));
                }
                return Ok(medium);
            }
            _ => unreachable!("validated"),
        };
        made.map_err(|e| bad("microstructure", e))
    }
}

impl BoundsSpec {
    fn validate(&self) -> Result<(), ConfigError> {
        match self.mode.as_str() {
            "none" | "power" | "exact" => Ok(()),
            "manual" => {
                if self.a_minus.is_none() || self.a_plus.is_none() {
                    Err(bad("bounds", "manual mode needs a_minus and a_plus"))
                } else {
                    Ok(())
                }
            }
            other => Err(bad(
                "bounds.mode",
                format!("unknown mode {other:?} (none, manual, power, exact)"),
            )),
        }
    }

    fn resolve(
        &self,
        medium: &TwoPhaseMedium,
        seed: u64,
    ) -> Result<Option<SpectralBounds>, ConfigError> {
        match self.mode.as_str() {
            "none" => Ok(None),
            "manual" => SpectralBounds::checked(
                self.a_minus.expect("validated"),
                self.a_plus.expect("validated"),
                BoundsProvenance::Manual,
                0,
            )
            .map(Some)
            .map_err(|e| bad("bounds", e)),
            "power" => {
                let iters = self.power_iterations.unwrap_or(500);
                power_method_extremes(medium, iters, seed)
                    .map(Some)
                    .map_err(|e| bad("bounds", e))
            }
            "exact" => {
                let op = dense_assemble(medium).map_err(|e| bad("bounds", e))?;
                op.bounds().map(Some).map_err(|e| bad("bounds", e))
            }
            _ => unreachable!("validated"),
        }
    }
}

impl SourceSpec {
    fn validate(&self) -> Result<(), ConfigError> {
        match self.kind.as_str() {
            "uniform" => {
                if self.axis.is_none() {
                    Err(bad("source.axis", "required for type uniform"))
                } else {
                    Ok(())
                }
            }
            "random" => Ok(()),
            "file" => {
                if self.path.is_none() {
                    Err(bad("source.path", "required for type file"))
                } else {
                    Ok(())
                }
            }
            other => Err(bad(
                "source.type",
                format!("unknown type {other:?} (uniform, random, file)"),
            )),
        }
    }

    /// Sources live on the gradient subspace: the uniform type is the
    /// projected indicator field of a unit applied field along the axis,
    /// random is a projected seeded field, file is projected after reading.
    fn build(&self, medium: &TwoPhaseMedium, seed: u64) -> Result<Field, ConfigError> {
        let d = medium.geometry().dim();
        let raw = match self.kind.as_str() {
            "uniform" => {
                let axis = self.axis.expect("validated");
                if axis >= d {
                    return Err(bad("source.axis", format!("axis {axis} out of range")));
                }
                let mut unit = vec![Complex64::new(0.0, 0.0); d];
                unit[axis] = Complex64::new(1.0, 0.0);
                let e0 = Field::constant(medium.geometry().clone(), &unit);
                medium.apply_chi(&e0).map_err(|e| bad("source", e))?
            }
            "random" => Field::random(medium.geometry().clone(), d, seed),
            "file" => {
                let path = self.path.as_ref().expect("validated");
                let file =
                    File::open(path).map_err(|e| bad("source.path", format!("{path}: {e}")))?;
                let field =
                    Field::read_text(BufReader::new(file)).map_err(|e| bad("source.path", e))?;
                if field.geometry() != medium.geometry() || field.components() != d {
                    return Err(bad("source.path", "field shape does not match geometry"));
                }
                field
            }
            _ => unreachable!("validated"),
        };
        apply_gamma1(&raw).map_err(|e| bad("source", e))
    }
}
