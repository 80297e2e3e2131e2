//! Neumann-series matrix inversion for massive MIMO zero-forcing.
//!
//! Channels are i.i.d. Rayleigh (`CN(0, 1)` entries), `H` is `M x K` with
//! `M` base-station antennas and `K` single-antenna users, and the Gram
//! matrix `G = H^H H` is split as `D + E` (diagonal plus hollow part).

// `!(x > 0.0)` is used on purpose to reject NaN along with non-positives.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod channel;
pub mod error;
pub mod linalg;
pub mod montecarlo;
pub mod neumann;
pub mod report;
pub mod stats;

pub use channel::{gram, sample_channel, trial_rng, ChannelMatrix, GramMatrix};
pub use error::{Error, Result};
pub use linalg::ComplexMatrix;
pub use montecarlo::{run_experiment, ExperimentKind, ExperimentSpec, RunOptions};
pub use report::{Report, Rows};

pub use num_complex::Complex64;
