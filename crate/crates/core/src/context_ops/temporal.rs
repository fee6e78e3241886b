use std::ops::Range;

use super::spatial::{uniform_sample_indices, windows};
use super::{EmbeddingGrid, FrameSequence, OpError, VisualContext};

/// Uniformly samples `target` frames, or returns every frame when the source
/// is already that short. Frames are never duplicated.
pub fn uniform_sample_frames(
    source: &FrameSequence,
    target: usize,
) -> Result<FrameSequence, OpError> {
    if target == 0 {
        return Err(OpError::InvalidCount { count: 0, max: source.len() });
    }
    if source.len() <= target {
        return Ok(source.clone());
    }
    let idx = uniform_sample_indices(source.len(), target)?;
    let frames = idx.into_iter().map(|i| source.frames()[i].clone()).collect();
    Ok(FrameSequence::from_frames_unchecked(frames))
}

/// Splits `len` frames into `groups` contiguous groups of `⌈len/groups⌉` or
/// `⌊len/groups⌋` frames, larger groups first.
pub fn temporal_groups(len: usize, groups: usize) -> Result<Vec<Range<usize>>, OpError> {
    if groups == 0 || groups > len {
        return Err(OpError::InvalidCount { count: groups, max: len });
    }
    let base = len / groups;
    let extra = len % groups;
    let mut out = Vec::with_capacity(groups);
    let mut start = 0;
    for g in 0..groups {
        let size = base + usize::from(g < extra);
        out.push(start..start + size);
        start += size;
    }
    Ok(out)
}

/// Mean-pools the frame axis down to `target` frames.
pub fn temporal_mean_pool(
    source: &FrameSequence,
    target: usize,
) -> Result<FrameSequence, OpError> {
    let groups = temporal_groups(source.len(), target)?;
    if target == source.len() {
        return Ok(source.clone());
    }
    let (side, dim) = (source.side(), source.dim());
    let frames = groups
        .into_iter()
        .map(|g| {
            let count = g.len() as f64;
            let mut acc = vec![0.0; side * side * dim];
            for f in &source.frames()[g] {
                for (a, v) in acc.iter_mut().zip(f.data()) {
                    *a += v;
                }
            }
            acc.iter_mut().for_each(|a| *a /= count);
            EmbeddingGrid::from_parts_unchecked(side, dim, acc)
        })
        .collect();
    Ok(FrameSequence::from_frames_unchecked(frames))
}

/// Joint spatio-temporal mean pooling: every output cell averages a
/// temporal group × `p × p` spatial window in one pass.
pub fn pool3d(
    source: &FrameSequence,
    stride: usize,
    target: usize,
) -> Result<VisualContext, OpError> {
    let side = source.side();
    let dim = source.dim();
    if stride == 0 || stride > side {
        return Err(OpError::InvalidStride { stride, side });
    }
    let groups = temporal_groups(source.len(), target)?;
    let out_side = side.div_ceil(stride);
    let mut data = Vec::with_capacity(target * out_side * out_side * dim);
    let mut acc = vec![0.0; dim];
    for g in groups {
        let frames = &source.frames()[g];
        for rows in windows(side, stride) {
            for cols in windows(side, stride) {
                acc.iter_mut().for_each(|a| *a = 0.0);
                for f in frames {
                    for r in rows.clone() {
                        for c in cols.clone() {
                            for (a, v) in acc.iter_mut().zip(f.cell(r, c)) {
                                *a += v;
                            }
                        }
                    }
                }
                let count = (frames.len() * rows.len() * cols.len()) as f64;
                data.extend(acc.iter().map(|a| a / count));
            }
        }
    }
    Ok(VisualContext {
        frames_out: target,
        tokens_per_frame: out_side * out_side,
        dim,
        data,
    })
}
