//! Matrix-free resolvent solvers for periodic two-phase media.
//!
//! The library computes the action of resolvents `(z0 G1 - A)^{-1}` with
//! `A = G1 B G1`, where `G1` is a projection acting locally in Fourier
//! space and `B` acts locally in real space, specialized to the two-phase
//! conductivity model `B = chi1 I`, `z0 = z2/(z2 - z1)`. Four iteration
//! schemes of increasing convergence speed are provided behind a common
//! trait and runtime registry, together with the scalar rate theory that
//! predicts their contraction factors, a dense brute-force oracle, power
//! method spectral-bound estimation, effective-tensor assembly, and a
//! contour-integral functional calculus.

pub mod error;
pub mod field;
pub mod media;
pub mod operator;
pub mod projection;
pub mod rates;
pub mod schemes;
pub mod spectral;

pub use error::{Error, Result};
pub use field::{fft_forward, fft_inverse, Field, GridGeometry, SpectralField};
pub use media::TwoPhaseMedium;
pub use operator::LinearOp;
pub use schemes::{IterationReport, ResolventScheme, SchemeKind, SolveConfig};
pub use spectral::{BoundsProvenance, DenseOperator, SpectralBounds};
