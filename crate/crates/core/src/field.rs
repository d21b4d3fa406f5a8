//! Complex vector fields on periodic grids, their transforms, inner products
//! and norms.
//!
//! Fields are stored as a dense complex array of shape `(c, n_1, ..., n_d)`
//! in row-major order (component index slowest). The discrete inner product
//! carries a `1/N` cell-volume factor so that it approximates the unit-cell
//! integral, and the unit cell always has volume one.

use std::cell::RefCell;
use std::io::{self, BufRead, Write};

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rustfft::FftPlanner;

use crate::error::{Error, Result};

pub const MAX_DIM: usize = 3;

/// Periodic grid shape: up to three axes, at least two cells per axis.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GridGeometry {
    dims: Vec<usize>,
}

impl GridGeometry {
    pub fn new(dims: &[usize]) -> Result<Self> {
        if dims.is_empty() || dims.len() > MAX_DIM {
            return Err(Error::InvalidParameter(format!(
                "grid dimension must be 1..={MAX_DIM}, got {}",
                dims.len()
            )));
        }
        if let Some(&n) = dims.iter().find(|&&n| n < 2) {
            return Err(Error::InvalidParameter(format!(
                "each axis needs at least 2 cells, got {n}"
            )));
        }
        Ok(Self {
            dims: dims.to_vec(),
        })
    }

    pub fn dim(&self) -> usize {
        self.dims.len()
    }

    pub fn cells(&self) -> &[usize] {
        &self.dims
    }

    pub fn total_cells(&self) -> usize {
        self.dims.iter().product()
    }

    /// Row-major linear index of a cell.
    pub fn cell_index(&self, coords: &[usize]) -> usize {
        debug_assert_eq!(coords.len(), self.dims.len());
        let mut idx = 0;
        for (c, n) in coords.iter().zip(&self.dims) {
            debug_assert!(c < n);
            idx = idx * n + c;
        }
        idx
    }

    /// Signed integer frequency for `index` on an axis of length `n`,
    /// following the convention k in (-n/2, n/2].
    pub fn signed_freq(index: usize, n: usize) -> i64 {
        if index <= n / 2 {
            index as i64
        } else {
            index as i64 - n as i64
        }
    }

    /// Decode a linear cell index into the signed frequency vector.
    pub fn freq_vector(&self, mut cell: usize, out: &mut [i64]) {
        for axis in (0..self.dims.len()).rev() {
            let n = self.dims[axis];
            out[axis] = Self::signed_freq(cell % n, n);
            cell /= n;
        }
    }
}

/// Complex field with `components` components per cell.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    geometry: GridGeometry,
    components: usize,
    data: Vec<Complex64>,
}

impl Field {
    pub fn zeros(geometry: GridGeometry, components: usize) -> Self {
        assert!(components >= 1, "fields need at least one component");
        let len = components * geometry.total_cells();
        Self {
            geometry,
            components,
            data: vec![Complex64::new(0.0, 0.0); len],
        }
    }

    /// Field with a uniform per-component value.
    pub fn constant(geometry: GridGeometry, values: &[Complex64]) -> Self {
        let mut f = Self::zeros(geometry, values.len());
        let n = f.geometry.total_cells();
        for (c, &v) in values.iter().enumerate() {
            f.data[c * n..(c + 1) * n].fill(v);
        }
        f
    }

    pub fn from_values(
        geometry: GridGeometry,
        components: usize,
        data: Vec<Complex64>,
    ) -> Result<Self> {
        if data.len() != components * geometry.total_cells() {
            return Err(Error::ShapeMismatch(format!(
                "value array has {} entries, geometry x components needs {}",
                data.len(),
                components * geometry.total_cells()
            )));
        }
        Ok(Self {
            geometry,
            components,
            data,
        })
    }

    /// Seed-reproducible random field, entries uniform in [-1,1] x i[-1,1].
    pub fn random(geometry: GridGeometry, components: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut f = Self::zeros(geometry, components);
        for v in &mut f.data {
            let re: f64 = rng.gen::<f64>() * 2.0 - 1.0;
            let im: f64 = rng.gen::<f64>() * 2.0 - 1.0;
            *v = Complex64::new(re, im);
        }
        f
    }

    pub fn geometry(&self) -> &GridGeometry {
        &self.geometry
    }

    pub fn components(&self) -> usize {
        self.components
    }

    pub fn values(&self) -> &[Complex64] {
        &self.data
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    pub fn at(&self, component: usize, cell: usize) -> Complex64 {
        self.data[component * self.geometry.total_cells() + cell]
    }

    pub fn set(&mut self, component: usize, cell: usize, value: Complex64) {
        let n = self.geometry.total_cells();
        self.data[component * n + cell] = value;
    }

    pub fn same_shape(&self, other: &Field) -> bool {
        self.geometry == other.geometry && self.components == other.components
    }

    /// Discrete inner product `(F,G) = (1/N) sum conj(F) . G`.
    pub fn inner_product(&self, other: &Field) -> Result<Complex64> {
        if !self.same_shape(other) {
            return Err(Error::ShapeMismatch(format!(
                "inner product needs matching fields: {:?} x {} vs {:?} x {}",
                self.geometry.cells(),
                self.components,
                other.geometry.cells(),
                other.components
            )));
        }
        let mut acc = Complex64::new(0.0, 0.0);
        for (a, b) in self.data.iter().zip(&other.data) {
            acc += a.conj() * b;
        }
        Ok(acc / self.geometry.total_cells() as f64)
    }

    pub fn norm(&self) -> f64 {
        let sum: f64 = self.data.iter().map(|v| v.norm_sqr()).sum();
        (sum / self.geometry.total_cells() as f64).sqrt()
    }

    pub fn scale(&mut self, a: Complex64) {
        for v in &mut self.data {
            *v *= a;
        }
    }

    pub fn scaled(&self, a: Complex64) -> Field {
        let mut out = self.clone();
        out.scale(a);
        out
    }

    /// self += a * x
    pub fn axpy(&mut self, a: Complex64, x: &Field) {
        debug_assert!(self.same_shape(x));
        for (v, u) in self.data.iter_mut().zip(&x.data) {
            *v += a * u;
        }
    }

    pub fn add(&self, other: &Field) -> Field {
        let mut out = self.clone();
        out.axpy(Complex64::new(1.0, 0.0), other);
        out
    }

    pub fn sub(&self, other: &Field) -> Field {
        let mut out = self.clone();
        out.axpy(Complex64::new(-1.0, 0.0), other);
        out
    }

    pub fn is_finite(&self) -> bool {
        self.data
            .iter()
            .all(|v| v.re.is_finite() && v.im.is_finite())
    }

    /// Portable text layout: header "c d n1 ... nd", then row-major "re im"
    /// pairs, whitespace-separated.
    pub fn write_text<W: Write>(&self, mut w: W) -> io::Result<()> {
        write!(w, "{} {}", self.components, self.geometry.dim())?;
        for n in self.geometry.cells() {
            write!(w, " {n}")?;
        }
        writeln!(w)?;
        for v in &self.data {
            writeln!(w, "{:e} {:e}", v.re, v.im)?;
        }
        Ok(())
    }

    pub fn read_text<R: BufRead>(mut r: R) -> Result<Self> {
        let mut text = String::new();
        r.read_to_string(&mut text)?;
        let mut tokens = text.split_whitespace();
        let mut next_usize = |what: &str| -> Result<usize> {
            tokens
                .next()
                .ok_or_else(|| Error::Parse(format!("missing {what}")))?
                .parse()
                .map_err(|e| Error::Parse(format!("bad {what}: {e}")))
        };
        let components = next_usize("component count")?;
        let dim = next_usize("dimension")?;
        if dim == 0 || dim > MAX_DIM {
            return Err(Error::Parse(format!("bad dimension {dim}")));
        }
        let mut dims = Vec::with_capacity(dim);
        for _ in 0..dim {
            dims.push(next_usize("axis length")?);
        }
        let geometry = GridGeometry::new(&dims)?;
        let len = components * geometry.total_cells();
        let mut data = Vec::with_capacity(len);
        let mut rest = text.split_whitespace().skip(2 + dim);
        for _ in 0..len {
            let re: f64 = rest
                .next()
                .ok_or_else(|| Error::Parse("missing real part".into()))?
                .parse()
                .map_err(|e| Error::Parse(format!("bad real part: {e}")))?;
            let im: f64 = rest
                .next()
                .ok_or_else(|| Error::Parse("missing imaginary part".into()))?
                .parse()
                .map_err(|e| Error::Parse(format!("bad imaginary part: {e}")))?;
            data.push(Complex64::new(re, im));
        }
        if rest.next().is_some() {
            return Err(Error::Parse("trailing data after field values".into()));
        }
        Field::from_values(geometry, components, data)
    }
}

/// Fourier coefficients of a [`Field`] under the unnormalized forward DFT.
#[derive(Debug, Clone)]
pub struct SpectralField {
    geometry: GridGeometry,
    components: usize,
    data: Vec<Complex64>,
}

impl SpectralField {
    pub fn geometry(&self) -> &GridGeometry {
        &self.geometry
    }

    pub fn components(&self) -> usize {
        self.components
    }

    pub fn values(&self) -> &[Complex64] {
        &self.data
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    pub fn at(&self, component: usize, cell: usize) -> Complex64 {
        self.data[component * self.geometry.total_cells() + cell]
    }

    /// Spectral-domain energy matching `Field::norm` squared under the
    /// chosen normalization (Parseval: `|F|^2 = (1/N^2) sum |Fhat|^2`).
    pub fn energy(&self) -> f64 {
        let n = self.geometry.total_cells() as f64;
        self.data.iter().map(|v| v.norm_sqr()).sum::<f64>() / (n * n)
    }
}

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn transform_axes(data: &mut [Complex64], dims: &[usize], components: usize, inverse: bool) {
    let n_total: usize = dims.iter().product();
    PLANNER.with(|planner| {
        let mut planner = planner.borrow_mut();
        for comp in 0..components {
            let slice = &mut data[comp * n_total..(comp + 1) * n_total];
            for (axis, &n) in dims.iter().enumerate() {
                let fft = if inverse {
                    planner.plan_fft_inverse(n)
                } else {
                    planner.plan_fft_forward(n)
                };
                let stride: usize = dims[axis + 1..].iter().product();
                let block = n * stride;
                let mut line = vec![Complex64::new(0.0, 0.0); n];
                let mut base = 0;
                while base < n_total {
                    for offset in 0..stride {
                        for (i, v) in line.iter_mut().enumerate() {
                            *v = slice[base + offset + i * stride];
                        }
                        fft.process(&mut line);
                        for (i, v) in line.iter().enumerate() {
                            slice[base + offset + i * stride] = *v;
                        }
                    }
                    base += block;
                }
            }
        }
    });
    if inverse {
        let scale = 1.0 / n_total as f64;
        for v in data.iter_mut() {
            *v *= scale;
        }
    }
}

pub fn fft_forward(field: &Field) -> SpectralField {
    let mut data = field.data.clone();
    transform_axes(&mut data, field.geometry.cells(), field.components, false);
    SpectralField {
        geometry: field.geometry.clone(),
        components: field.components,
        data,
    }
}

pub fn fft_inverse(spectral: &SpectralField) -> Field {
    let mut data = spectral.data.clone();
    transform_axes(
        &mut data,
        spectral.geometry.cells(),
        spectral.components,
        true,
    );
    Field {
        geometry: spectral.geometry.clone(),
        components: spectral.components,
        data,
    }
}
