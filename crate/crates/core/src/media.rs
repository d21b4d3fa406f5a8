//! Two-phase microstructures and the real-space local operators built from
//! them: indicator multiplication, the phase-modulus map
//! `L(x) = z1 chi1 + z2 chi2`, and the composite operator `A = G1 chi1 G1`.

use std::io::{self, BufRead, Write};

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::field::{Field, GridGeometry};
use crate::projection::apply_gamma1;

/// Indicator grid plus the two complex phase moduli.
///
/// The phase-2 indicator is always the complement, so `chi1 + chi2 = 1`
/// holds at every cell by construction.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoPhaseMedium {
    geometry: GridGeometry,
    indicator: Vec<u8>,
    z1: Complex64,
    z2: Complex64,
}

impl TwoPhaseMedium {
    pub fn new(
        geometry: GridGeometry,
        indicator: Vec<u8>,
        z1: Complex64,
        z2: Complex64,
    ) -> Result<Self> {
        if indicator.len() != geometry.total_cells() {
            return Err(Error::ShapeMismatch(format!(
                "indicator has {} cells, geometry has {}",
                indicator.len(),
                geometry.total_cells()
            )));
        }
        if indicator.iter().any(|&v| v > 1) {
            return Err(Error::InvalidParameter(
                "indicator values must be 0 or 1".into(),
            ));
        }
        Ok(Self {
            geometry,
            indicator,
            z1,
            z2,
        })
    }

    /// Phase-1 slabs stacked along `axis`, total fraction the nearest
    /// integer number of layers to `f1 * n_axis`.
    pub fn laminate(
        geometry: GridGeometry,
        axis: usize,
        f1: f64,
        z1: Complex64,
        z2: Complex64,
    ) -> Result<Self> {
        if axis >= geometry.dim() {
            return Err(Error::InvalidParameter(format!(
                "laminate axis {axis} out of range for dimension {}",
                geometry.dim()
            )));
        }
        check_fraction(f1)?;
        let n_axis = geometry.cells()[axis];
        let layers = (f1 * n_axis as f64).round() as usize;
        let trailing: usize = geometry.cells()[axis + 1..].iter().product();
        let mut indicator = vec![0u8; geometry.total_cells()];
        for (cell, v) in indicator.iter_mut().enumerate() {
            let along = (cell / trailing) % n_axis;
            *v = u8::from(along < layers);
        }
        Self::new(geometry, indicator, z1, z2)
    }

    /// Independent per-cell Bernoulli indicator, seed-reproducible.
    pub fn random(
        geometry: GridGeometry,
        f1: f64,
        seed: u64,
        z1: Complex64,
        z2: Complex64,
    ) -> Result<Self> {
        check_fraction(f1)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let indicator = (0..geometry.total_cells())
            .map(|_| u8::from(rng.gen::<f64>() < f1))
            .collect();
        Self::new(geometry, indicator, z1, z2)
    }

    /// Centered ball of the given radius (fraction of the unit cell edge).
    pub fn disk(
        geometry: GridGeometry,
        radius_fraction: f64,
        z1: Complex64,
        z2: Complex64,
    ) -> Result<Self> {
        if !(radius_fraction > 0.0 && radius_fraction < 0.5) {
            return Err(Error::InvalidParameter(format!(
                "radius fraction must lie in (0, 0.5), got {radius_fraction}"
            )));
        }
        let d = geometry.dim();
        let dims = geometry.cells().to_vec();
        let r2 = radius_fraction * radius_fraction;
        let mut indicator = vec![0u8; geometry.total_cells()];
        for (cell, v) in indicator.iter_mut().enumerate() {
            let mut rest = cell;
            let mut dist2 = 0.0;
            for axis in (0..d).rev() {
                let n = dims[axis];
                let coord = rest % n;
                rest /= n;
                let x = (coord as f64 + 0.5) / n as f64 - 0.5;
                dist2 += x * x;
            }
            *v = u8::from(dist2 <= r2);
        }
        Self::new(geometry, indicator, z1, z2)
    }

    pub fn geometry(&self) -> &GridGeometry {
        &self.geometry
    }

    pub fn indicator(&self) -> &[u8] {
        &self.indicator
    }

    pub fn z1(&self) -> Complex64 {
        self.z1
    }

    pub fn z2(&self) -> Complex64 {
        self.z2
    }

    /// Same microstructure, different moduli.
    pub fn with_moduli(&self, z1: Complex64, z2: Complex64) -> Self {
        Self {
            geometry: self.geometry.clone(),
            indicator: self.indicator.clone(),
            z1,
            z2,
        }
    }

    pub fn volume_fraction(&self) -> f64 {
        self.indicator.iter().map(|&v| v as f64).sum::<f64>() / self.indicator.len() as f64
    }

    pub fn contrast(&self) -> Complex64 {
        self.z1 / self.z2
    }

    pub fn is_homogeneous(&self) -> bool {
        self.z1 == self.z2
    }

    /// Reference parameter z0 = z2/(z2 - z1); undefined for equal moduli.
    pub fn z0(&self) -> Option<Complex64> {
        if self.is_homogeneous() {
            None
        } else {
            Some(self.z2 / (self.z2 - self.z1))
        }
    }

    fn check_geometry(&self, field: &Field) -> Result<()> {
        if field.geometry() != &self.geometry {
            return Err(Error::ShapeMismatch(
                "field geometry differs from medium geometry".into(),
            ));
        }
        Ok(())
    }

    /// Pointwise multiplication by `v1 chi1 + v2 chi2`.
    pub fn apply_phase_scalars(
        &self,
        field: &Field,
        v1: Complex64,
        v2: Complex64,
    ) -> Result<Field> {
        self.check_geometry(field)?;
        Ok(self.pointwise(field, |chi| if chi { v1 } else { v2 }))
    }

    /// Pointwise multiplication by the phase-1 indicator.
    pub fn apply_chi(&self, field: &Field) -> Result<Field> {
        self.apply_phase_scalars(field, Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0))
    }

    /// Pointwise multiplication by `L(x) = z1 chi1 + z2 chi2`.
    pub fn apply_l(&self, field: &Field) -> Result<Field> {
        self.apply_phase_scalars(field, self.z1, self.z2)
    }

    /// Pointwise multiplication by the phase reflection `2 chi1 - 1`.
    pub fn reflect_chi(&self, field: &Field) -> Result<Field> {
        self.apply_phase_scalars(field, Complex64::new(1.0, 0.0), Complex64::new(-1.0, 0.0))
    }

    /// The composite operator `A = G1 chi1 G1`, all components matrix-free.
    pub fn apply_a(&self, field: &Field) -> Result<Field> {
        self.check_geometry(field)?;
        let projected = apply_gamma1(field)?;
        let masked = self.apply_chi(&projected)?;
        apply_gamma1(&masked)
    }

    fn pointwise(&self, field: &Field, f: impl Fn(bool) -> Complex64) -> Field {
        let n = self.geometry.total_cells();
        let mut out = field.clone();
        let data = out.values_mut();
        for comp in 0..field.components() {
            for (cell, &chi) in self.indicator.iter().enumerate() {
                data[comp * n + cell] *= f(chi == 1);
            }
        }
        out
    }

    /// Indicator file layout: header "d n1 ... nd", then row-major 0/1
    /// values, whitespace-separated. Round trips bit-exactly.
    pub fn write_indicator<W: Write>(&self, mut w: W) -> io::Result<()> {
        write!(w, "{}", self.geometry.dim())?;
        for n in self.geometry.cells() {
            write!(w, " {n}")?;
        }
        writeln!(w)?;
        let dims = self.geometry.cells();
        let row: usize = dims[dims.len() - 1];
        for chunk in self.indicator.chunks(row) {
            let line: Vec<String> = chunk.iter().map(|v| v.to_string()).collect();
            writeln!(w, "{}", line.join(" "))?;
        }
        Ok(())
    }

    pub fn read_indicator<R: BufRead>(mut r: R, z1: Complex64, z2: Complex64) -> Result<Self> {
        let mut text = String::new();
        r.read_to_string(&mut text)?;
        let mut tokens = text.split_whitespace();
        let dim: usize = tokens
            .next()
            .ok_or_else(|| Error::Parse("missing dimension".into()))?
            .parse()
            .map_err(|e| Error::Parse(format!("bad dimension: {e}")))?;
        let mut dims = Vec::with_capacity(dim);
        for _ in 0..dim {
            let n: usize = tokens
                .next()
                .ok_or_else(|| Error::Parse("missing axis length".into()))?
                .parse()
                .map_err(|e| Error::Parse(format!("bad axis length: {e}")))?;
            dims.push(n);
        }
        let geometry = GridGeometry::new(&dims)?;
        let mut indicator = Vec::with_capacity(geometry.total_cells());
        for tok in tokens {
            match tok {
                "0" => indicator.push(0),
                "1" => indicator.push(1),
                other => {
                    return Err(Error::Parse(format!(
                        "indicator entries must be 0 or 1, got {other:?}"
                    )))
                }
            }
        }
        Self::new(geometry, indicator, z1, z2)
    }
}

fn check_fraction(f1: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&f1) {
        return Err(Error::InvalidParameter(format!(
            "volume fraction must lie in [0,1], got {f1}"
        )));
    }
    Ok(())
}
