//! Scalar convergence-rate theory: the q-factor, the three scheme rates,
//! spectral-interval substitution parameters, the conformal map chain
//! `t -> z1_/z2_ -> w -> v`, coercivity bounds, and contour-atlas tables.
//!
//! `beta = f64::INFINITY` is a first-class value handled through the
//! analytic limits, so the unconstrained (accelerated-scheme) case stays
//! exact.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};

const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Spectral bounds `b- <= B <= b+` together with the resolvent parameter.
#[derive(Debug, Clone, Copy)]
pub struct BoundsBox {
    pub b_minus: f64,
    pub b_plus: f64,
    pub z0: Complex64,
}

impl BoundsBox {
    pub fn new(b_minus: f64, b_plus: f64, z0: Complex64) -> Result<Self> {
        if b_minus > b_plus {
            return Err(Error::InvalidParameter(format!(
                "bounds must be ordered, got [{b_minus}, {b_plus}]"
            )));
        }
        Ok(Self {
            b_minus,
            b_plus,
            z0,
        })
    }
}

/// `q = (z0 - b+)/(z0 - b-)`. The shifted and accelerated rates are
/// invariant under `q -> 1/q`.
pub fn q_factor(bounds: &BoundsBox) -> Result<Complex64> {
    let denom = bounds.z0 - bounds.b_minus;
    if denom.norm() == 0.0 {
        return Err(Error::InvalidParameter(
            "q-factor undefined: z0 equals the lower bound".into(),
        ));
    }
    Ok((bounds.z0 - bounds.b_plus) / denom)
}

/// Plain-series rate `r0 = max(|b-|, |b+|) / |z0|`.
pub fn rate_neumann(bounds: &BoundsBox) -> Result<f64> {
    if bounds.z0.norm() == 0.0 {
        return Err(Error::InvalidParameter(
            "plain-series rate undefined at z0 = 0".into(),
        ));
    }
    Ok(bounds.b_minus.abs().max(bounds.b_plus.abs()) / bounds.z0.norm())
}

/// Midpoint-shifted rate `r1 = |(q - 1)/(q + 1)|`.
pub fn rate_shifted(bounds: &BoundsBox) -> Result<f64> {
    let q = q_factor(bounds)?;
    Ok(mobius_rate(q))
}

/// Accelerated rate `r2 = |(sqrt(q) - 1)/(sqrt(q) + 1)|`, principal root.
pub fn rate_accelerated(bounds: &BoundsBox) -> Result<f64> {
    let q = q_factor(bounds)?;
    Ok(mobius_rate(q.sqrt()))
}

fn mobius_rate(q: Complex64) -> f64 {
    let denom = q + ONE;
    if denom.norm() == 0.0 {
        return f64::INFINITY;
    }
    ((q - ONE) / denom).norm()
}

/// A bounds box mapped onto the unit interval, with the affine data to
/// undo the map: `B_tilde = (B - shift I)/scale`, `z0_tilde = (z0 - shift)/scale`.
#[derive(Debug, Clone, Copy)]
pub struct RescaledBounds {
    pub shift: f64,
    pub scale: f64,
    pub rescaled: BoundsBox,
}

/// Rescale a bounded selfadjoint operator's bounds box so the spectrum
/// lands in [0, 1]: `shift = b-`, `scale = b+ - b-`. This is the
/// normalization that leaves the q-factor (hence every rate) invariant;
/// the half-width/midpoint variant would land on [-1, 1] instead.
pub fn rescale_to_unit(bounds: &BoundsBox) -> Result<RescaledBounds> {
    let scale = bounds.b_plus - bounds.b_minus;
    if scale == 0.0 {
        return Err(Error::DegenerateInterval);
    }
    let shift = bounds.b_minus;
    let z0 = (bounds.z0 - shift) / scale;
    Ok(RescaledBounds {
        shift,
        scale,
        rescaled: BoundsBox::new(0.0, 1.0, z0)?,
    })
}

/// Convert spectrum bounds on the composite operator into the singular
/// interval `[-beta, -alpha]` on the contrast axis:
/// `alpha = 1/a+ - 1`, `beta = 1/a- - 1` (`a- = 0` maps to `beta = inf`).
pub fn bounds_to_interval(a_minus: f64, a_plus: f64) -> Result<(f64, f64)> {
    if !(0.0..=1.0).contains(&a_minus) || !(0.0..=1.0).contains(&a_plus) || a_minus > a_plus {
        return Err(Error::InvalidParameter(format!(
            "spectral bounds must satisfy 0 <= a- <= a+ <= 1, got [{a_minus}, {a_plus}]"
        )));
    }
    if a_plus == 0.0 {
        return Err(Error::InvalidParameter(
            "upper spectral bound must be positive".into(),
        ));
    }
    let alpha = 1.0 / a_plus - 1.0;
    let beta = if a_minus == 0.0 {
        f64::INFINITY
    } else {
        1.0 / a_minus - 1.0
    };
    Ok((alpha, beta))
}

fn check_interval(alpha: f64, beta: f64) -> Result<()> {
    if !(alpha >= 0.0) || !alpha.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "alpha must be finite and nonnegative, got {alpha}"
        )));
    }
    if !(beta >= alpha) {
        return Err(Error::InvalidParameter(format!(
            "beta must satisfy beta >= alpha, got alpha = {alpha}, beta = {beta}"
        )));
    }
    Ok(())
}

/// Parameters of the non-selfadjoint projection `P = p (x) p` used by the
/// spectral-substitution scheme. `p2_sq <= 0` whenever `beta > alpha`, so
/// the p-values returned by [`SubstitutionParams::p`] are complex.
#[derive(Debug, Clone, Copy)]
pub struct SubstitutionParams {
    pub alpha: f64,
    pub beta: f64,
    pub p1_sq: Complex64,
    pub p2_sq: Complex64,
    pub p3_sq: Complex64,
}

impl SubstitutionParams {
    /// Principal square roots of the three squared components.
    pub fn p(&self) -> [Complex64; 3] {
        [self.p1_sq.sqrt(), self.p2_sq.sqrt(), self.p3_sq.sqrt()]
    }

    /// The transformed contrast `z1_/z2_` evaluated through the projection
    /// parameters (the route independent of the closed form in
    /// [`map_chain`]): `1 + (t - 1)/(p1^2 - p2^2 (t - 1))` at `z2 = 1`.
    pub fn underline_ratio(&self, t: Complex64) -> Complex64 {
        ONE + (t - ONE) / (self.p1_sq - self.p2_sq * (t - ONE))
    }
}

/// Projection parameters from the singular interval:
/// `p1^2 = [1/(1+alpha) - 1/(1+beta)]^{-1}`,
/// `p2^2 = [1 - (1+beta)/(1+alpha)]^{-1}`, `p3^2 = 1 - p1^2 - p2^2`.
pub fn substitution_params(alpha: f64, beta: f64) -> Result<SubstitutionParams> {
    check_interval(alpha, beta)?;
    if alpha == beta {
        return Err(Error::DegenerateInterval);
    }
    let (p1_sq, p2_sq) = if beta.is_infinite() {
        (1.0 + alpha, 0.0)
    } else {
        let p1 = 1.0 / (1.0 / (1.0 + alpha) - 1.0 / (1.0 + beta));
        let p2 = 1.0 / (1.0 - (1.0 + beta) / (1.0 + alpha));
        (p1, p2)
    };
    let p3_sq = 1.0 - p1_sq - p2_sq;
    Ok(SubstitutionParams {
        alpha,
        beta,
        p1_sq: Complex64::new(p1_sq, 0.0),
        p2_sq: Complex64::new(p2_sq, 0.0),
        p3_sq: Complex64::new(p3_sq, 0.0),
    })
}

/// One evaluation of the conformal map chain at contrast `t`.
#[derive(Debug, Clone, Copy)]
pub struct RatePoint {
    pub t: Complex64,
    /// Model-problem q-factor (`b- = 0`, `b+ = 1` gives `q = t`).
    pub q: Complex64,
    pub r0: f64,
    pub r1: f64,
    pub r2: f64,
    /// Transformed contrast `z1_/z2_`.
    pub underline: Complex64,
    pub w: Complex64,
    pub v: Complex64,
}

/// The chain `t -> z1_/z2_ -> w = sqrt(z1_/z2_) -> v = (w-1)/(w+1)`,
/// with `z1_/z2_ = (t+alpha)(1+beta) / ((t+beta)(1+alpha))`.
/// `|v|` is the predicted asymptotic contraction of the substitution
/// scheme; `|v| < 1` exactly when the scheme converges at `t`.
pub fn map_chain(t: Complex64, alpha: f64, beta: f64) -> Result<RatePoint> {
    check_interval(alpha, beta)?;
    let underline = if beta.is_infinite() {
        (t + alpha) / (1.0 + alpha)
    } else {
        let denom = (t + beta) * (1.0 + alpha);
        if denom.norm() == 0.0 {
            return Err(Error::MapPole { t });
        }
        (t + alpha) * (1.0 + beta) / denom
    };
    let w = underline.sqrt();
    let v = (w - ONE) / (w + ONE);
    let sqrt_t = t.sqrt();
    Ok(RatePoint {
        t,
        q: t,
        r0: (ONE - t).norm(),
        r1: mobius_rate(t),
        r2: mobius_rate(sqrt_t),
        underline,
        w,
        v,
    })
}

/// Coercivity constants for the non-Hermitian convergence guarantee.
/// Distinct from the spectral-interval `alpha`, `beta`.
#[derive(Debug, Clone, Copy)]
pub struct CoercivityData {
    pub coercivity_alpha: f64,
    pub norm_beta: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct CoercivityEstimate {
    /// The contraction bound `sqrt(1 - (alpha/beta)^2) < 1`.
    pub rate: f64,
    /// The prescribed reference parameter `z0' = beta^2/alpha`.
    pub z0_prime: f64,
}

pub fn coercivity_rate(data: &CoercivityData) -> Result<CoercivityEstimate> {
    if !(data.coercivity_alpha > 0.0) || data.norm_beta < data.coercivity_alpha {
        return Err(Error::InvalidParameter(format!(
            "coercivity constants need beta >= alpha > 0, got alpha = {}, beta = {}",
            data.coercivity_alpha, data.norm_beta
        )));
    }
    let ratio = data.coercivity_alpha / data.norm_beta;
    Ok(CoercivityEstimate {
        rate: (1.0 - ratio * ratio).sqrt(),
        z0_prime: data.norm_beta * data.norm_beta / data.coercivity_alpha,
    })
}

/// Rectangular sampling window in the complex contrast plane.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct AtlasWindow {
    pub re_min: f64,
    pub re_max: f64,
    pub im_min: f64,
    pub im_max: f64,
}

impl AtlasWindow {
    pub fn new(re_min: f64, re_max: f64, im_min: f64, im_max: f64) -> Result<Self> {
        if re_min >= re_max || im_min >= im_max {
            return Err(Error::InvalidParameter(
                "atlas window must have positive extent on both axes".into(),
            ));
        }
        Ok(Self {
            re_min,
            re_max,
            im_min,
            im_max,
        })
    }
}

#[derive(Debug, Clone, Copy)]
pub struct AtlasSample {
    pub t: Complex64,
    pub w: Complex64,
    pub v: Complex64,
    pub abs_v: f64,
    /// Iteration-count contour level `-1/log(|v|/r0)`; `None` outside the
    /// convergence region (`|v| >= r0`).
    pub minus_inv_log: Option<f64>,
    pub pole: bool,
}

#[derive(Debug, Clone)]
pub struct ContourAtlas {
    pub alpha: f64,
    pub beta: f64,
    /// Convergence radius used for the contour levels: 1 for exact bounds,
    /// `min(|v|)` over the images of the true interval endpoints when the
    /// bounds are only estimates.
    pub r0: f64,
    pub resolution: usize,
    pub samples: Vec<AtlasSample>,
}

/// Sample the map chain over a window. `true_interval`, when given, holds
/// the actual singular interval `(alpha_true, beta_true)`; its endpoint
/// images shrink the convergence radius and rescale the contour levels.
pub fn contour_atlas(
    alpha: f64,
    beta: f64,
    window: &AtlasWindow,
    resolution: usize,
    true_interval: Option<(f64, f64)>,
) -> Result<ContourAtlas> {
    check_interval(alpha, beta)?;
    if resolution < 2 {
        return Err(Error::InvalidParameter(
            "atlas needs resolution >= 2 per axis".into(),
        ));
    }
    let r0 = match true_interval {
        None => 1.0,
        Some((at, bt)) => {
            check_interval(at, bt)?;
            let left = endpoint_image(alpha, beta, bt);
            let right = endpoint_image(alpha, beta, at);
            left.min(right).min(1.0)
        }
    };
    let mut samples = Vec::with_capacity(resolution * resolution);
    for i in 0..resolution {
        let im =
            window.im_min + (window.im_max - window.im_min) * i as f64 / (resolution - 1) as f64;
        for j in 0..resolution {
            let re = window.re_min
                + (window.re_max - window.re_min) * j as f64 / (resolution - 1) as f64;
            let t = Complex64::new(re, im);
            match map_chain(t, alpha, beta) {
                Ok(point) => {
                    let abs_v = point.v.norm();
                    let minus_inv_log = if abs_v < r0 {
                        Some(-1.0 / (abs_v / r0).ln())
                    } else {
                        None
                    };
                    samples.push(AtlasSample {
                        t,
                        w: point.w,
                        v: point.v,
                        abs_v,
                        minus_inv_log,
                        pole: false,
                    });
                }
                Err(Error::MapPole { .. }) => samples.push(AtlasSample {
                    t,
                    w: Complex64::new(0.0, 0.0),
                    v: Complex64::new(0.0, 0.0),
                    abs_v: f64::INFINITY,
                    minus_inv_log: None,
                    pole: true,
                }),
                Err(e) => return Err(e),
            }
        }
    }
    Ok(ContourAtlas {
        alpha,
        beta,
        r0,
        resolution,
        samples,
    })
}

/// `|v|` at the image of a true-interval endpoint `t = -tau` under the
/// estimated map; `tau = inf` uses the analytic limit.
fn endpoint_image(alpha: f64, beta: f64, tau: f64) -> f64 {
    if tau.is_infinite() {
        if beta.is_infinite() {
            return 1.0;
        }
        let w = Complex64::new((1.0 + beta) / (1.0 + alpha), 0.0).sqrt();
        return ((w - ONE) / (w + ONE)).norm();
    }
    match map_chain(Complex64::new(-tau, 0.0), alpha, beta) {
        Ok(point) => point.v.norm(),
        Err(_) => 1.0,
    }
}

impl ContourAtlas {
    /// CSV with IEEE-double round-trip formatting (17 significant digits);
    /// the contour-level column is blank outside the convergence region,
    /// and pole cells are flagged instead of carrying values.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("re_t,im_t,abs_v,minus_inv_log_v,re_w,im_w,re_v,im_v,pole\n");
        for s in &self.samples {
            let level = s.minus_inv_log.map(fmt17).unwrap_or_default();
            if s.pole {
                out.push_str(&format!("{},{},,,,,,,1\n", fmt17(s.t.re), fmt17(s.t.im)));
            } else {
                out.push_str(&format!(
                    "{},{},{},{},{},{},{},{},0\n",
                    fmt17(s.t.re),
                    fmt17(s.t.im),
                    fmt17(s.abs_v),
                    level,
                    fmt17(s.w.re),
                    fmt17(s.w.im),
                    fmt17(s.v.re),
                    fmt17(s.v.im)
                ));
            }
        }
        out
    }

    /// Sample closest to a given contrast value.
    pub fn nearest(&self, t: Complex64) -> &AtlasSample {
        self.samples
            .iter()
            .min_by(|a, b| {
                (a.t - t)
                    .norm()
                    .partial_cmp(&(b.t - t).norm())
                    .expect("finite grid distances")
            })
            .expect("atlas is never empty")
    }
}

fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}
