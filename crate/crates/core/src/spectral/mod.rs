//! Wavevector lattice, spectral scalar fields, Fourier projectors and norms,
//! and transforms between the physical and Fourier representations.

mod field;
mod grid;
mod transform;

pub use field::SpectralField;
pub use grid::WaveGrid;
pub use transform::{to_physical, to_spectral, Fft2, PhysicalField};
