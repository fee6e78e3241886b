//! Planning how a video model spends its visual context window.
//!
//! * [`context_ops`]: frame and token selection over encoder embedding grids.
//! * [`scaling_fit`]: loss-law fitting with damped least squares.
//! * [`allocator`]: closed-form and integer frame/token allocation under a window.
//! * [`harness`]: loss logs, score tables, synthetic data and the CLI commands.

pub mod allocator;
pub mod context_ops;
pub mod harness;
pub mod scaling_fit;
