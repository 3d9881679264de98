//! Fractional reaction-diffusion dynamics for depth-map restoration.
//!
//! The crate is organised bottom-up:
//!
//! - [`field`]: the [`DepthField`] grid, Neumann padding, directional
//!   differences and evaluation metrics (MAE, RMSE, ratio-threshold accuracy).
//! - [`fractional`]: Gamma function, L1 weights of the Caputo derivative, the
//!   memory correction and the single fractional refinement step.
//! - [`diffusion`]: Perona-Malik divergence term, conductance functions and
//!   the reaction (fidelity) term.
//! - [`contconv`]: continuous convolution through repeated integrals and sparse
//!   Dirac-delta kernels, plus the linear patch-integral decomposition.
//! - [`filters`]: classical filters used to build the initial state.
//! - [`pipeline`]: the restoration loop with its order schedule and guards.
//! - [`synth`]: synthetic scenes, degradation and benchmarking.
//! - [`io`]: PFM and 16-bit PGM depth files.
//! - [`cli`]: the `fracrd` command-line front end.
//!
//! Depths are in millimetres and fields are stored row-major throughout.

pub mod cli;
pub mod config;
pub mod contconv;
pub mod diffusion;
mod error;
pub mod field;
pub mod filters;
pub mod fractional;
pub mod io;
pub mod pipeline;
pub mod synth;

pub use contconv::{DiracKernel, Impulse, PatchCoefficients};
pub use diffusion::{Conductance, ConductanceSpec};
pub use error::{Error, Result};
pub use field::{DepthField, Metrics, DEFAULT_THRESHOLDS};
pub use fractional::FractionalState;
pub use pipeline::{AlphaSchedule, InitBuilder, NanPolicy, RestorationConfig, RestorationTrace};
pub use synth::{DegradationSpec, SceneKind, SceneSpec};
