//! Dynamics of a unidirectional ring of Stuart-Landau oscillators with one
//! shortcut: spectra, Hopf branches, rotating waves and their stability.

// `!(x > 0.0)` rejects NaN alongside non-positive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod assign;
pub mod error;
pub mod floquet;
pub mod hopf;
pub mod linalg;
pub mod ode;
pub mod orbits;
pub mod par;
pub mod ring;
pub mod simulate;
pub mod spectral;
pub mod studies;

pub use error::{Error, Result};
pub use ring::{InhomRingParams, RingParams, RingState, System};
