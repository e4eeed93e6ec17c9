//! Recovery of point scatterers from far-field acoustic measurements.
//!
//! The crate is `no_std` (it needs `alloc`) and contains the numerical core:
//!
//! * [`specialfn`]: Bessel functions of integer and half-integer order, `Y0`, `Y1`, the
//!   Hankel function `H0(1)` and a few Gamma values.
//! * [`scatter`]: Green functions, the Foldy-Lax system, Foldy and Born far fields and the
//!   normalized measurement operators.
//! * [`bounds`]: linearization-error bounds and empirical error sweeps.
//! * [`sampling`]: uniform frequency sampling in the ball of radius `2κ` and the matching
//!   incident/observation direction pairs.
//! * [`blasso`]: the linear step, a BLASSO problem solved by sliding Frank-Wolfe.
//! * [`refine`]: the nonlinear step, local descent of the Foldy-model objective.
//! * [`kernel`]: diagnostics of the autocorrelation kernel of the sampling law.
//! * [`matching`]: assignment-based comparison of discrete measures.
//!
//! File formats, configuration and the command line live in the `pointscat` crate.

#![no_std]
#![forbid(unsafe_code)]
// `num_traits::Float` supplies float methods without std; it goes unused whenever a
// dependent crate turns std on through feature unification.
#![allow(unused_imports)]

extern crate alloc;

pub mod blasso;
pub mod bounds;
mod error;
pub mod geometry;
pub mod kernel;
pub mod linalg;
pub mod matching;
mod optimize;
pub mod refine;
pub mod sampling;
pub mod scatter;
pub mod specialfn;

pub use crate::error::{Error, Result};
pub use crate::geometry::{BoxDomain, Dim, Point};
pub use num_complex::Complex64;
