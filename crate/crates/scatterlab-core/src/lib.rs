//! Numerical laboratory for energy propagation in scattering-style deep
//! feature extractors over finite abelian groups.
//!
//! The crate provides, bottom to top:
//!
//! - [`group`]: finite abelian groups `Z_{n1} x ... x Z_{nk}`, their duals,
//!   unitary Fourier analysis ([`fourier`]) and sumset arithmetic on dual
//!   subsets;
//! - [`frames`]: construction and auditing of Parseval convolution frames
//!   (one low-pass output filter plus a high-pass family) via the
//!   Littlewood-Paley condition;
//! - [`extractor`]: a generic layered feature extractor (convolution filters
//!   or explicit matrices, nonexpansive pointwise nonlinearities), path-wise
//!   propagation, and per-layer energy ledgers;
//! - [`bounds`]: theoretical energy-decay curves (spectral-support,
//!   covering-number, and eigenvector-witness routes) and certification of
//!   measured ledgers against them;
//! - [`fileio`]: plain-text formats for signals, filter banks, and matrices.

pub mod bounds;
pub mod error;
pub mod extractor;
pub mod fileio;
pub mod fourier;
pub mod frames;
pub mod group;
pub mod signal;
pub mod sums;

pub use error::{Error, Result};
pub use fourier::{convolve, convolve_spectral, fourier, inverse_fourier};
pub use frames::{build_ideal_partition_bank, build_random_bank, FilterBank, FrameAudit, FrameMode};
pub use group::{DualElement, FrequencySet, GroupElement, GroupSpec};
pub use signal::{Signal, SpectralSignal};

pub use num_complex::Complex64;
