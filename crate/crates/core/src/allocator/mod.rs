//! Splitting a visual context window between frames and tokens per frame.
//!
//! Given a fitted [`JointParams`] law and a window of `L` tokens, this module
//! computes the closed-form real-valued allocation, enumerates the integer
//! configurations that fit the window, and ranks them by predicted loss.

mod closed_form;
mod feasible;

pub use closed_form::{boundary_minimizer, closed_form_opt, kkt_check, relaxed_grid_search};
pub use feasible::{
    allocate, enumerate_feasible, grid_search_opt, plan, round_half_up, snap_to_feasible,
    AllocationResult, FeasibleConfig, PlanRow, TokenSet, DEFAULT_MAX_FRAMES,
};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scaling_fit::JointParams;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AllocError {
    #[error("closed form undefined: {condition}")]
    FormulaDomain { condition: &'static str },
    #[error("{what} must be positive, got {value}")]
    Domain { what: &'static str, value: f64 },
    #[error("no feasible configuration within a window of {window} tokens")]
    NoSolution { window: u64 },
    #[error("invalid token set: {0}")]
    InvalidTokenSet(String),
    #[error("budget window must be >= 1")]
    InvalidBudget,
}

/// Maximum visual context window `L`, in tokens.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Budget(u64);

impl Budget {
    pub fn new(window: u64) -> Result<Self, AllocError> {
        if window == 0 {
            return Err(AllocError::InvalidBudget);
        }
        Ok(Self(window))
    }

    pub fn window(self) -> u64 {
        self.0
    }
}

fn loss_at(params: &JointParams, tokens: f64, frames: f64) -> f64 {
    params.c_m * tokens.powf(-params.alpha) + params.c_t * frames.powf(-params.beta) + params.floor
}
