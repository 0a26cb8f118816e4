//! Grids, transforms, dealiasing and pointwise products on the torus [0, 2π)³.

mod fft;
pub mod field;
pub mod grid;
pub mod pointwise;

pub use field::{
    PhysicalField, PhysicalScalarField, PhysicalVectorField, SpectralField, SpectralScalarField, SpectralVectorField,
};
pub use grid::{Grid, BOX_VOLUME};
pub use pointwise::{advective_product, pointwise_cross, pointwise_dot};
