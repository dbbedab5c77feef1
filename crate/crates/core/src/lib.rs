//! Closed-form spectral data, optimal constants and numerical oracles for
//! weighted fast diffusion and the associated Caffarelli-Kohn-Nirenberg
//! inequalities.

pub mod constants;
pub mod error;
pub mod gamma;
pub mod params;
pub mod pde;
pub mod quad;
pub mod quadform;
pub mod radial;
pub mod sl_oracle;
pub mod spectral;
mod tridiag;

pub use error::{Error, Result};
pub use params::{derive, validate, Derived, Parameters};
pub use spectral::{classify_region, spectral_report, Region, SpectralReport};
