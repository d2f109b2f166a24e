//! Numerical toolkit for surface-current Biot-Savart problems on toroidal
//! coil winding surfaces: forward maps, Tikhonov sweeps, and explicit
//! construction of the operator's kernel via layer potentials.

pub mod basis;
pub mod biot_savart;
pub mod error;
pub mod experiments;
pub mod geometry;
pub mod kernel;
pub mod layer;
pub mod probes;
pub mod spectral;
pub mod targets;
pub mod tikhonov;
pub mod vec3;
pub mod volume;

pub use error::{Error, Result};
pub use vec3::Vec3;
