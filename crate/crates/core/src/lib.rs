//! Inverse scattering for the modified NLS equation with non-zero boundary conditions.
//!
//! The crate covers direct scattering of sampled fields, discrete-spectrum search,
//! the partial transmission function T(z), reflectionless N-soliton construction,
//! a pseudo-spectral evolver and the soliton-region asymptotics harness.

pub mod config;
pub mod error;
pub mod evolver;
pub mod field;
pub mod harness;
pub mod linalg;
pub mod params;
pub mod quadrature;
pub mod scattering;
pub mod soliton;
pub mod spectral_plane;
pub mod spectrum;
pub mod tfunc;

pub use error::{Error, Result};
pub use field::{FieldSnapshot, Grid};
pub use params::ProblemParams;
