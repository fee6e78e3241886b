//! Plain-text tensor fixtures.
//!
//! A header line `n d T` (grid side, embedding width, frame count) followed by
//! `T·n·n·d` whitespace-separated reals in (frame, row, col, channel) order.
//! The writer puts one embedding per line and prints floats in shortest
//! round-trip form, so `read(write(x)) == x` bit for bit.

use std::fmt::Write as _;
use std::io::{self, BufRead, Write};

use thiserror::Error;

use super::{EmbeddingGrid, FrameSequence, OpError};

#[derive(Debug, Error)]
pub enum InterchangeError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Shape(#[from] OpError),
    #[error(transparent)]
    Io(#[from] io::Error),
}

fn parse_err(line: usize, message: impl Into<String>) -> InterchangeError {
    InterchangeError::Parse {
        line,
        message: message.into(),
    }
}

pub fn read_frames(reader: impl BufRead) -> Result<FrameSequence, InterchangeError> {
    let mut lines = reader.lines().enumerate();
    let (header_no, header) = loop {
        match lines.next() {
            Some((i, line)) => {
                let line = line?;
                if !line.trim().is_empty() {
                    break (i + 1, line);
                }
            }
            None => return Err(parse_err(1, "missing header line `n d T`")),
        }
    };
    let dims: Vec<usize> = header
        .split_whitespace()
        .map(|t| t.parse::<usize>())
        .collect::<Result<_, _>>()
        .map_err(|e| parse_err(header_no, format!("bad header `{header}`: {e}")))?;
    let [side, dim, frames] = dims[..] else {
        return Err(parse_err(header_no, format!("header needs 3 integers, got `{header}`")));
    };
    if side == 0 || dim == 0 || frames == 0 {
        return Err(parse_err(header_no, "header values must be positive"));
    }
    let per_frame = side * side * dim;
    let expected = per_frame * frames;
    let mut values = Vec::with_capacity(expected);
    let mut last_line = header_no;
    for (i, line) in lines {
        let line = line?;
        last_line = i + 1;
        for tok in line.split_whitespace() {
            let v: f64 = tok
                .parse()
                .map_err(|_| parse_err(i + 1, format!("not a number: `{tok}`")))?;
            if !v.is_finite() {
                return Err(parse_err(i + 1, format!("non-finite value `{tok}`")));
            }
            if values.len() == expected {
                return Err(parse_err(i + 1, format!("more than {expected} values")));
            }
            values.push(v);
        }
    }
    if values.len() != expected {
        return Err(parse_err(
            last_line,
            format!("expected {expected} values, found {}", values.len()),
        ));
    }
    let grids = values
        .chunks_exact(per_frame)
        .map(|c| EmbeddingGrid::new(side, dim, c.to_vec()))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(FrameSequence::new(grids)?)
}

pub fn write_frames(mut writer: impl Write, seq: &FrameSequence) -> io::Result<()> {
    writer.write_all(to_string(seq).as_bytes())
}

pub fn to_string(seq: &FrameSequence) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{} {} {}", seq.side(), seq.dim(), seq.len());
    for f in seq.frames() {
        for emb in f.data().chunks_exact(f.dim()) {
            let mut first = true;
            for v in emb {
                if !first {
                    out.push(' ');
                }
                first = false;
                let _ = write!(out, "{v}");
            }
            out.push('\n');
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reads_small_fixture() {
        let text = "2 1 2\n1 2\n3 4\n5 6 7 8\n";
        let seq = read_frames(text.as_bytes()).unwrap();
        assert_eq!(seq.len(), 2);
        assert_eq!(seq.frames()[1].data(), &[5.0, 6.0, 7.0, 8.0]);
    }

    #[test]
    fn writes_then_reads_back_exactly() {
        let g = EmbeddingGrid::from_fn(3, 2, |r, c, k| 0.1 * r as f64 - 1.0 / (1.0 + c as f64 + k as f64)).unwrap();
        let seq = FrameSequence::new(vec![g.clone(), g]).unwrap();
        let text = to_string(&seq);
        let back = read_frames(text.as_bytes()).unwrap();
        assert_eq!(back, seq);
        assert_eq!(to_string(&back), text);
    }

    #[test]
    fn reports_line_numbers() {
        let err = read_frames("1 1 2\n0.5\nabc\n".as_bytes()).unwrap_err();
        assert!(matches!(err, InterchangeError::Parse { line: 3, .. }), "{err}");
        let err = read_frames("1 1 2\n0.5\n".as_bytes()).unwrap_err();
        assert!(err.to_string().contains("expected 2 values"));
        let err = read_frames("1 1\n".as_bytes()).unwrap_err();
        assert!(matches!(err, InterchangeError::Parse { line: 1, .. }));
    }
}
