use super::OpError;

/// One frame's `side × side × dim` feature map, stored row-major
/// (row, column, channel).
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingGrid {
    side: usize,
    dim: usize,
    data: Vec<f64>,
}

impl EmbeddingGrid {
    pub fn new(side: usize, dim: usize, data: Vec<f64>) -> Result<Self, OpError> {
        if side == 0 || dim == 0 {
            return Err(OpError::InvalidInput(format!(
                "grid side and dim must be positive, got side={side} dim={dim}"
            )));
        }
        if data.len() != side * side * dim {
            return Err(OpError::InvalidInput(format!(
                "grid data has {} values, expected {side}x{side}x{dim} = {}",
                data.len(),
                side * side * dim
            )));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(OpError::InvalidInput(format!(
                "non-finite value at flat index {pos}"
            )));
        }
        Ok(Self { side, dim, data })
    }

    /// Builds a grid from a function of `(row, col, channel)`.
    pub fn from_fn(
        side: usize,
        dim: usize,
        mut f: impl FnMut(usize, usize, usize) -> f64,
    ) -> Result<Self, OpError> {
        let mut data = Vec::with_capacity(side * side * dim);
        for r in 0..side {
            for c in 0..side {
                for k in 0..dim {
                    data.push(f(r, c, k));
                }
            }
        }
        Self::new(side, dim, data)
    }

    pub fn constant(side: usize, dim: usize, value: f64) -> Result<Self, OpError> {
        Self::new(side, dim, vec![value; side * side * dim])
    }

    pub fn side(&self) -> usize {
        self.side
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of embeddings (tokens) in the grid.
    pub fn tokens(&self) -> usize {
        self.side * self.side
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    /// The `dim`-long embedding at `(row, col)`.
    pub fn cell(&self, row: usize, col: usize) -> &[f64] {
        let start = (row * self.side + col) * self.dim;
        &self.data[start..start + self.dim]
    }

    pub fn get(&self, row: usize, col: usize, channel: usize) -> f64 {
        self.cell(row, col)[channel]
    }

    pub(crate) fn from_parts_unchecked(side: usize, dim: usize, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), side * side * dim);
        Self { side, dim, data }
    }
}

/// An ordered, non-empty list of frames sharing one grid shape.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameSequence {
    frames: Vec<EmbeddingGrid>,
}

impl FrameSequence {
    pub fn new(frames: Vec<EmbeddingGrid>) -> Result<Self, OpError> {
        let first = frames
            .first()
            .ok_or_else(|| OpError::InvalidInput("frame sequence is empty".into()))?;
        let (side, dim) = (first.side, first.dim);
        if let Some(i) = frames.iter().position(|g| g.side != side || g.dim != dim) {
            return Err(OpError::InvalidInput(format!(
                "frame {i} has shape {}x{}x{}, expected {side}x{side}x{dim}",
                frames[i].side, frames[i].side, frames[i].dim
            )));
        }
        Ok(Self { frames })
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn side(&self) -> usize {
        self.frames[0].side
    }

    pub fn dim(&self) -> usize {
        self.frames[0].dim
    }

    pub fn frames(&self) -> &[EmbeddingGrid] {
        &self.frames
    }

    pub fn into_frames(self) -> Vec<EmbeddingGrid> {
        self.frames
    }

    pub(crate) fn from_frames_unchecked(frames: Vec<EmbeddingGrid>) -> Self {
        debug_assert!(!frames.is_empty());
        Self { frames }
    }
}

/// The tokens handed to the language model: `frames_out × tokens_per_frame`
/// embeddings of width `dim`.
#[derive(Debug, Clone, PartialEq)]
pub struct VisualContext {
    pub frames_out: usize,
    pub tokens_per_frame: usize,
    pub dim: usize,
    pub data: Vec<f64>,
}

impl VisualContext {
    pub fn from_frames(seq: FrameSequence) -> Self {
        let frames_out = seq.len();
        let tokens_per_frame = seq.side() * seq.side();
        let dim = seq.dim();
        let mut data = Vec::with_capacity(frames_out * tokens_per_frame * dim);
        for f in seq.frames {
            data.extend_from_slice(&f.data);
        }
        Self {
            frames_out,
            tokens_per_frame,
            dim,
            data,
        }
    }

    pub fn total_tokens(&self) -> usize {
        self.frames_out * self.tokens_per_frame
    }

    /// Grid side of each output frame; `tokens_per_frame` is always a perfect square.
    pub fn side(&self) -> usize {
        let s = (self.tokens_per_frame as f64).sqrt().round() as usize;
        debug_assert_eq!(s * s, self.tokens_per_frame);
        s
    }

    pub fn to_frames(&self) -> FrameSequence {
        let side = self.side();
        let stride = self.tokens_per_frame * self.dim;
        let frames = self
            .data
            .chunks_exact(stride)
            .map(|chunk| EmbeddingGrid::from_parts_unchecked(side, self.dim, chunk.to_vec()))
            .collect();
        FrameSequence::from_frames_unchecked(frames)
    }
}
