//! Channel estimation for an OFDM uplink with a digital-twin prior.
//!
//! A single-antenna user transmits OFDM symbols to an `N_rx`-element base
//! station array. The base station knows, from an electromagnetic digital
//! twin of the environment, the angles and delays of the strongest few
//! propagation paths. Those paths span a spatial and a temporal subspace;
//! projecting the per-pilot least-squares estimate onto both subspaces
//! removes most of the noise while keeping most of the channel.
//!
//! The crate is organised bottom-up:
//!
//! * [`scenario`]: configuration, validation, pilot patterns, SNR mapping.
//! * [`propagation`]: synthetic multipath environment, array and frequency responses.
//! * [`channel`]: fading draws, channel assembly, exact covariance, noisy uplink.
//! * [`priors`]: subspace bases and projectors (twin prior and batch-ML).
//! * [`estimators`]: LS, projection, delay-domain denoising, interpolation.
//! * [`metrics`]: NMSE (empirical and analytic), genie-aided SE, ECDFs.
//! * [`harness`]: Monte Carlo experiments, CSV/SVG output, invariant suite.
//!
//! Conventions used throughout:
//!
//! * `vec{·}` stacks columns, so `vec{A·B·C} = (Cᵀ ⊗ A)·vec{B}`.
//! * The forward DFT is unnormalised with a negative exponent,
//!   `F[k, n] = exp(-j·2π·k·n/N)`.

pub mod channel;
pub mod error;
pub mod estimators;
pub mod harness;
pub mod linalg;
pub mod metrics;
pub mod priors;
pub mod propagation;
pub mod rng;
pub mod scenario;

pub use error::{Error, Result};

/// Complex sample type used everywhere in the crate.
pub type C64 = nalgebra::Complex<f64>;
/// Dense complex matrix.
pub type CMatrix = nalgebra::DMatrix<C64>;
/// Dense complex column vector.
pub type CVector = nalgebra::DVector<C64>;

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
