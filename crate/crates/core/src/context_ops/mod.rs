//! Frame selection and embedding selection kernels.
//!
//! Everything here is a pure function over [`EmbeddingGrid`]s and
//! [`FrameSequence`]s. Spatial operators act on one frame's `n × n × d`
//! feature map; temporal operators act along the frame axis. Sampling
//! copies values, pooling averages them over windows and divides by the
//! true number of cells in each window.

mod grid;
pub mod interchange;
mod select;
mod spatial;
mod temporal;

pub use grid::{EmbeddingGrid, FrameSequence, VisualContext};
pub use select::{apply_selection, SelectionSpec, SpatialMode, TemporalMode};
pub use spatial::{
    sample_grid, spatial_mean_pool, token_count_for_stride, uniform_sample_indices,
};
pub use temporal::{pool3d, temporal_groups, temporal_mean_pool, uniform_sample_frames};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OpError {
    #[error("invalid stride {stride} for grid side {side} (need 1 <= p <= n)")]
    InvalidStride { stride: usize, side: usize },
    #[error("invalid count {count} (need 1 <= k <= {max})")]
    InvalidCount { count: usize, max: usize },
    #[error("invalid input: {0}")]
    InvalidInput(String),
}
