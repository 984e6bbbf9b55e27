//! Zakharov-Shabat spectral problem with periodic potential.

pub mod eigen;
pub mod gaps;
pub mod spectrum;
pub mod transfer;

pub use eigen::{eigenpair, gradient_pairing, lambda_gradient, product_identity_check, EigenPair};
pub use gaps::{gaps, partial_sums, spectral_deviation, Deviation, Gap};
pub use spectrum::{
    locate_spectrum, slope_threshold, BoundaryKind, Classification, LocateOptions, SpectralPoint, Spectrum,
};
pub use transfer::{discriminant, transfer_matrix, TransferMatrix, ZsSolver};
