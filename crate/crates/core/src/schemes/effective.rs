//! Effective-tensor assembly: one periodic cell problem per applied unit
//! field, solved through whichever scheme is selected, columns given by the
//! averaged flux.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::field::Field;
use crate::media::TwoPhaseMedium;
use crate::projection::apply_gamma1;

use super::{scheme_for, SchemeKind, SolveConfig};

/// Effective tensor of the medium under the selected scheme: for each
/// applied mean field `E0 = e_j`, solve for the fluctuation
/// `e = (z2 - z1) R G1(chi1 E0)` and average the flux `L (E0 + e)`.
/// Each scheme's own reference medium does the preconditioning.
pub fn effective_tensor(
    medium: &TwoPhaseMedium,
    scheme: SchemeKind,
    tolerance: f64,
) -> Result<DMatrix<Complex64>> {
    let d = medium.geometry().dim();
    let n = medium.geometry().total_cells();
    let scheme_impl = scheme_for(scheme);
    let mut config = SolveConfig::new(medium.clone(), scheme)
        .with_tolerance(tolerance)
        .with_max_iter(200_000);
    if scheme == SchemeKind::Spectral && config.bounds.is_none() {
        // conservative default; callers wanting tighter bounds solve directly
        config.bounds = Some(crate::spectral::SpectralBounds::checked(
            0.0,
            1.0,
            crate::spectral::BoundsProvenance::Manual,
            0,
        )?);
    }

    let mut tensor = DMatrix::<Complex64>::zeros(d, d);
    for j in 0..d {
        let mut unit = vec![Complex64::new(0.0, 0.0); d];
        unit[j] = Complex64::new(1.0, 0.0);
        let e0 = Field::constant(medium.geometry().clone(), &unit);
        let source = apply_gamma1(&medium.apply_chi(&e0)?)?;
        let (fluct_raw, report) = scheme_impl.solve(&config, &source)?;
        if !report.converged {
            return Err(Error::NonConvergent {
                scheme: scheme_impl.name().to_string(),
                residual: report.final_residual(),
            });
        }
        let mut total = e0;
        total.axpy(medium.z2() - medium.z1(), &fluct_raw);
        let flux = medium.apply_l(&total)?;
        for i in 0..d {
            let mean: Complex64 =
                flux.values()[i * n..(i + 1) * n].iter().sum::<Complex64>() / n as f64;
            tensor[(i, j)] = mean;
        }
    }
    Ok(tensor)
}
