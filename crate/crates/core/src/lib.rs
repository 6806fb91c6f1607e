pub mod airy;
pub mod bessel;
pub mod dynamo;
pub mod error;
pub mod herbst;
pub mod interp;
pub mod numerics;
pub mod sweep;

pub use error::{Result, SpectralError};
pub use num_complex::{self, Complex64};
