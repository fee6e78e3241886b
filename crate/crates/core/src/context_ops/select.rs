use serde::{Deserialize, Serialize};

use super::{
    pool3d, sample_grid, spatial_mean_pool, temporal_mean_pool, uniform_sample_frames,
    FrameSequence, OpError, VisualContext,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SpatialMode {
    /// Keep a uniform `k × k` subset of cells.
    Sample,
    /// `p × p` mean pooling with stride `p`.
    Pool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TemporalMode {
    Sample,
    Pool,
    Pool3d,
}

/// How to turn a video's frames into a visual context.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SelectionSpec {
    pub spatial_mode: SpatialMode,
    /// `k` (samples per side) or `p` (pooling stride), depending on `spatial_mode`.
    pub spatial_param: usize,
    pub temporal_mode: TemporalMode,
    pub target_frames: usize,
    pub max_frames: usize,
}

impl SelectionSpec {
    pub fn validate(&self, side: usize) -> Result<(), OpError> {
        if self.spatial_param == 0 || self.spatial_param > side {
            return Err(match self.spatial_mode {
                SpatialMode::Pool => OpError::InvalidStride {
                    stride: self.spatial_param,
                    side,
                },
                SpatialMode::Sample => OpError::InvalidCount {
                    count: self.spatial_param,
                    max: side,
                },
            });
        }
        if self.target_frames == 0 || self.target_frames > self.max_frames {
            return Err(OpError::InvalidCount {
                count: self.target_frames,
                max: self.max_frames,
            });
        }
        Ok(())
    }
}

fn spatial(seq: &FrameSequence, mode: SpatialMode, param: usize) -> Result<FrameSequence, OpError> {
    let frames = seq
        .frames()
        .iter()
        .map(|f| match mode {
            SpatialMode::Sample => sample_grid(f, param),
            SpatialMode::Pool => spatial_mean_pool(f, param),
        })
        .collect::<Result<Vec<_>, _>>()?;
    FrameSequence::new(frames)
}

/// Applies the frame-level then embedding-level operators described by `spec`.
///
/// Pooling modes first sample `max_frames` frames uniformly from the source,
/// then pool down to `target_frames`. The frame count is capped at what the
/// source provides.
pub fn apply_selection(source: &FrameSequence, spec: &SelectionSpec) -> Result<VisualContext, OpError> {
    spec.validate(source.side())?;
    let out = match spec.temporal_mode {
        TemporalMode::Sample => {
            let frames = uniform_sample_frames(source, spec.target_frames)?;
            spatial(&frames, spec.spatial_mode, spec.spatial_param)?
        }
        TemporalMode::Pool => {
            let base = uniform_sample_frames(source, spec.max_frames)?;
            let target = spec.target_frames.min(base.len());
            let reduced = spatial(&base, spec.spatial_mode, spec.spatial_param)?;
            temporal_mean_pool(&reduced, target)?
        }
        TemporalMode::Pool3d => {
            let base = uniform_sample_frames(source, spec.max_frames)?;
            let target = spec.target_frames.min(base.len());
            match spec.spatial_mode {
                SpatialMode::Pool => return pool3d(&base, spec.spatial_param, target),
                // 1x1 spatial windows: the joint pool reduces to a temporal pool.
                SpatialMode::Sample => {
                    let reduced = spatial(&base, SpatialMode::Sample, spec.spatial_param)?;
                    temporal_mean_pool(&reduced, target)?
                }
            }
        }
    };
    Ok(VisualContext::from_frames(out))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::context_ops::EmbeddingGrid;

    fn video(frames: usize, side: usize) -> FrameSequence {
        FrameSequence::new(
            (0..frames)
                .map(|t| EmbeddingGrid::from_fn(side, 2, |r, c, k| (t + r * side + c + k) as f64).unwrap())
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn pool_to_32_by_49() {
        let src = video(128, 27);
        let spec = SelectionSpec {
            spatial_mode: SpatialMode::Pool,
            spatial_param: 4,
            temporal_mode: TemporalMode::Pool,
            target_frames: 32,
            max_frames: 128,
        };
        let ctx = apply_selection(&src, &spec).unwrap();
        assert_eq!((ctx.frames_out, ctx.tokens_per_frame, ctx.total_tokens()), (32, 49, 1568));

        let joint = apply_selection(&src, &SelectionSpec { temporal_mode: TemporalMode::Pool3d, ..spec }).unwrap();
        assert_eq!(joint.total_tokens(), 1568);
    }

    #[test]
    fn identity_composition() {
        let src = video(32, 27);
        let spec = SelectionSpec {
            spatial_mode: SpatialMode::Sample,
            spatial_param: 27,
            temporal_mode: TemporalMode::Sample,
            target_frames: 32,
            max_frames: 32,
        };
        let ctx = apply_selection(&src, &spec).unwrap();
        assert_eq!(ctx.tokens_per_frame, 729);
        assert_eq!(ctx.to_frames(), src);
    }

    #[test]
    fn invalid_specs() {
        let src = video(4, 5);
        let mut spec = SelectionSpec {
            spatial_mode: SpatialMode::Pool,
            spatial_param: 6,
            temporal_mode: TemporalMode::Sample,
            target_frames: 2,
            max_frames: 4,
        };
        assert!(matches!(apply_selection(&src, &spec), Err(OpError::InvalidStride { .. })));
        spec.spatial_param = 2;
        spec.target_frames = 5;
        assert!(matches!(apply_selection(&src, &spec), Err(OpError::InvalidCount { .. })));
    }

    #[test]
    fn pooling_caps_at_available_frames() {
        let src = video(4, 3);
        let spec = SelectionSpec {
            spatial_mode: SpatialMode::Pool,
            spatial_param: 3,
            temporal_mode: TemporalMode::Pool,
            target_frames: 8,
            max_frames: 16,
        };
        assert_eq!(apply_selection(&src, &spec).unwrap().frames_out, 4);
    }
}
