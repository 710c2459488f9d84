//! Sparse point-sensor placement for reconstructing high-dimensional states
//! from a handful of measurements.
//!
//! A low-rank tailored basis is trained from snapshot data (POD) or built
//! analytically (monomial Vandermonde). Sensors are chosen greedily by QR with
//! column pivoting, either one per mode (`p = r`) or oversampled (`p > r`)
//! through the pivoted factorization of `Ψ_r Ψ_rᵀ`. The crate also ships the
//! baselines used to judge a placement: DEIM, seeded random draws, exhaustive
//! search under D/A/E-optimal or condition-number criteria, and compressed
//! sensing in a DCT basis with orthogonal matching pursuit.
//!
//! Numerical kernels are generic over [`Real`] (`f32`, `f64`); the aliases
//! below fix the scalar to `f64`, which is what the file formats store.
//!
//! ```
//! use sparse_sensing::{basis, placement, reconstruct, Matrix};
//!
//! // Three snapshots living in a two-dimensional subspace of R^4.
//! let x = Matrix::from_cols(&[
//!     [1.0, 0.0, 2.0, 1.0],
//!     [0.0, 1.0, 1.0, 0.0],
//!     [1.0, 1.0, 3.0, 1.0],
//! ]);
//! let snaps = sparse_sensing::Snapshots::new(x).unwrap();
//! let basis = basis::fit_pod(&snaps, basis::RankSpec::Fixed(2), false).unwrap();
//! let sensors = placement::select_qr_sensors(&basis, 2).unwrap();
//!
//! let truth = [2.0, 1.0, 5.0, 2.0];
//! let y: Vec<f64> = sensors.indices.iter().map(|&i| truth[i]).collect();
//! let rec = reconstruct::gappy_reconstruct(&basis, &sensors, &y, Some(&truth)).unwrap();
//! assert!(rec.rel_error.unwrap() < 1e-12);
//! ```

pub mod basis;
pub mod csrecover;
pub mod error;
pub mod factor;
pub mod mat;
pub mod matrixio;
pub mod placement;
pub mod rng;
pub mod reconstruct;
pub mod scalar;

pub use error::{Error, ErrorClass, Result};
pub use mat::Mat;
pub use scalar::Real;

pub type Matrix = mat::Mat<f64>;
pub type Snapshots = matrixio::SnapshotMatrix<f64>;
pub type Basis = basis::TailoredBasis<f64>;
pub type QrFactor = factor::PivotedQrFactor<f64>;
pub type Svd = factor::SvdFactor<f64>;
pub type Reconstruction = reconstruct::ReconstructionResult<f64>;
pub type Sparse = csrecover::SparseSolution<f64>;
