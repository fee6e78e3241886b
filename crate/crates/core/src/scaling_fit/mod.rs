//! Scaling-law families and their least-squares fits.
//!
//! Three families are supported: a one-axis power law over tokens or
//! frames, a one-axis line, and the additive two-axis law over
//! (tokens, frames). Positive parameters are fitted on a log scale so the
//! optimizer never leaves the valid domain.

mod fit;
mod laws;
mod lm;
mod metrics;

pub use fit::{fit, refine, FitOptions, LocalRun};
pub use laws::{JointParams, LinearParams, PowerLawParams};
pub use metrics::{mse, r_squared, zero_variance};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FitError {
    #[error("{what} must be positive and finite, got {value}")]
    Domain { what: &'static str, value: f64 },
    #[error("underdetermined fit: {samples} samples for {params} parameters")]
    Underdetermined { samples: usize, params: usize },
    #[error("invalid data: {0}")]
    InvalidData(String),
}

/// One trained configuration and its measured loss.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossSample {
    pub frames: u32,
    pub tokens: u32,
    pub loss: f64,
}

impl LossSample {
    pub fn new(frames: u32, tokens: u32, loss: f64) -> Result<Self, FitError> {
        let s = Self { frames, tokens, loss };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<(), FitError> {
        if self.frames == 0 || self.tokens == 0 {
            return Err(FitError::InvalidData(format!(
                "frames and tokens must be >= 1, got ({}, {})",
                self.frames, self.tokens
            )));
        }
        if !(self.loss.is_finite() && self.loss > 0.0) {
            return Err(FitError::InvalidData(format!(
                "loss must be finite and positive, got {}",
                self.loss
            )));
        }
        Ok(())
    }
}

/// Which coordinate a one-axis law is a function of.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    Tokens,
    Frames,
}

impl Axis {
    pub fn of(self, s: &LossSample) -> f64 {
        match self {
            Axis::Tokens => f64::from(s.tokens),
            Axis::Frames => f64::from(s.frames),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Family {
    #[serde(rename = "power-m")]
    PowerTokens,
    #[serde(rename = "power-t")]
    PowerFrames,
    #[serde(rename = "linear-m")]
    LinearTokens,
    #[serde(rename = "linear-t")]
    LinearFrames,
    #[serde(rename = "joint")]
    Joint,
}

impl Family {
    pub fn n_params(self) -> usize {
        match self {
            Family::PowerTokens | Family::PowerFrames => 3,
            Family::LinearTokens | Family::LinearFrames => 2,
            Family::Joint => 5,
        }
    }

    /// `None` for the two-axis law.
    pub fn axis(self) -> Option<Axis> {
        match self {
            Family::PowerTokens | Family::LinearTokens => Some(Axis::Tokens),
            Family::PowerFrames | Family::LinearFrames => Some(Axis::Frames),
            Family::Joint => None,
        }
    }

    /// Short kind name: `power1d`, `linear1d` or `joint2d`.
    pub fn kind(self) -> &'static str {
        match self {
            Family::PowerTokens | Family::PowerFrames => "power1d",
            Family::LinearTokens | Family::LinearFrames => "linear1d",
            Family::Joint => "joint2d",
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Family::PowerTokens => "power-m",
            Family::PowerFrames => "power-t",
            Family::LinearTokens => "linear-m",
            Family::LinearFrames => "linear-t",
            Family::Joint => "joint",
        }
    }
}

impl std::str::FromStr for Family {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "power-m" => Family::PowerTokens,
            "power-t" => Family::PowerFrames,
            "linear-m" => Family::LinearTokens,
            "linear-t" => Family::LinearFrames,
            "joint" => Family::Joint,
            other => return Err(format!("unknown family `{other}`")),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum FittedParams {
    Power(PowerLawParams),
    Linear(LinearParams),
    Joint(JointParams),
}

impl FittedParams {
    /// Prediction for a sample; `axis` selects the coordinate of one-axis laws.
    pub fn predict(&self, axis: Option<Axis>, s: &LossSample) -> f64 {
        let axis = axis.unwrap_or(Axis::Tokens);
        match self {
            // Sample coordinates are >= 1, so the domain checks cannot fail.
            FittedParams::Power(p) => p.eval(axis.of(s)).unwrap_or(f64::NAN),
            FittedParams::Linear(p) => p.eval(axis.of(s)),
            FittedParams::Joint(p) => p
                .eval(f64::from(s.tokens), f64::from(s.frames))
                .unwrap_or(f64::NAN),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub family: Family,
    pub params: FittedParams,
    pub r_squared: f64,
    pub mse: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Observed losses were all identical; R² follows the zero-variance convention.
    pub zero_variance: bool,
    /// Predicted − observed, in sample order.
    pub residuals: Vec<f64>,
}
