use super::{EmbeddingGrid, OpError};

fn check_stride(side: usize, stride: usize) -> Result<(), OpError> {
    if stride == 0 || stride > side {
        return Err(OpError::InvalidStride { stride, side });
    }
    Ok(())
}

/// Tokens per frame after `p × p` mean pooling with stride `p` on an `n × n` grid.
pub fn token_count_for_stride(side: usize, stride: usize) -> Result<usize, OpError> {
    check_stride(side, stride)?;
    let out = side.div_ceil(stride);
    Ok(out * out)
}

/// Window-center indices `⌊(2i+1)·n / 2k⌋` for `i in 0..k`.
///
/// Strictly increasing, symmetric about the center, identity when `k == n`.
pub fn uniform_sample_indices(n: usize, k: usize) -> Result<Vec<usize>, OpError> {
    if k == 0 || k > n {
        return Err(OpError::InvalidCount { count: k, max: n });
    }
    Ok((0..k).map(|i| (2 * i + 1) * n / (2 * k)).collect())
}

/// Keeps a `k × k` uniform subset of the grid's cells.
pub fn sample_grid(grid: &EmbeddingGrid, k: usize) -> Result<EmbeddingGrid, OpError> {
    let idx = uniform_sample_indices(grid.side(), k)?;
    let dim = grid.dim();
    let mut data = Vec::with_capacity(k * k * dim);
    for &r in &idx {
        for &c in &idx {
            data.extend_from_slice(grid.cell(r, c));
        }
    }
    Ok(EmbeddingGrid::from_parts_unchecked(k, dim, data))
}

/// Row (or column) ranges of the pooling windows along one axis.
pub(crate) fn windows(side: usize, stride: usize) -> impl Iterator<Item = std::ops::Range<usize>> {
    (0..side.div_ceil(stride)).map(move |a| a * stride..((a + 1) * stride).min(side))
}

/// `p × p` mean pooling with stride `p`. Edge windows that run past the grid
/// average only their in-bounds cells.
pub fn spatial_mean_pool(grid: &EmbeddingGrid, stride: usize) -> Result<EmbeddingGrid, OpError> {
    check_stride(grid.side(), stride)?;
    let out_side = grid.side().div_ceil(stride);
    let dim = grid.dim();
    let mut data = Vec::with_capacity(out_side * out_side * dim);
    let mut acc = vec![0.0; dim];
    for rows in windows(grid.side(), stride) {
        for cols in windows(grid.side(), stride) {
            acc.iter_mut().for_each(|a| *a = 0.0);
            for r in rows.clone() {
                for c in cols.clone() {
                    for (a, v) in acc.iter_mut().zip(grid.cell(r, c)) {
                        *a += v;
                    }
                }
            }
            let count = (rows.len() * cols.len()) as f64;
            data.extend(acc.iter().map(|a| a / count));
        }
    }
    Ok(EmbeddingGrid::from_parts_unchecked(out_side, dim, data))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn token_counts_for_published_strides() {
        let strides = [2, 3, 4, 5, 6, 7, 9, 14, 27];
        let counts: Vec<_> = strides
            .iter()
            .map(|&p| token_count_for_stride(27, p).unwrap())
            .collect();
        assert_eq!(counts, vec![196, 81, 49, 36, 25, 16, 9, 4, 1]);
        assert_eq!(token_count_for_stride(27, 1).unwrap(), 729);
    }

    #[test]
    fn stride_out_of_range() {
        assert_eq!(
            token_count_for_stride(27, 0),
            Err(OpError::InvalidStride { stride: 0, side: 27 })
        );
        assert!(token_count_for_stride(27, 28).is_err());
        let g = EmbeddingGrid::constant(4, 1, 1.0).unwrap();
        assert!(spatial_mean_pool(&g, 5).is_err());
    }

    #[test]
    fn sample_indices_examples() {
        assert_eq!(uniform_sample_indices(27, 27).unwrap(), (0..27).collect::<Vec<_>>());
        assert_eq!(uniform_sample_indices(27, 1).unwrap(), vec![13]);
        assert_eq!(uniform_sample_indices(4, 2).unwrap(), vec![1, 3]);
        assert!(uniform_sample_indices(4, 0).is_err());
        assert!(uniform_sample_indices(4, 5).is_err());
    }

    // Brute-force oracle: the center of window i of width n/k lies at
    // (i + 1/2)·n/k; the sampled index is the cell containing that point.
    #[test]
    fn sample_indices_match_window_centers() {
        for n in 1..=40usize {
            for k in 1..=n {
                let got = uniform_sample_indices(n, k).unwrap();
                for (i, &idx) in got.iter().enumerate() {
                    let center = (i as f64 + 0.5) * n as f64 / k as f64;
                    let cell = (0..n)
                        .find(|&j| (j as f64) <= center + 1e-9 && center + 1e-9 < (j + 1) as f64)
                        .unwrap();
                    assert_eq!(idx, cell, "n={n} k={k} i={i}");
                }
                assert!(got.windows(2).all(|w| w[0] < w[1]));
                // symmetric: idx_i + idx_{k-1-i} is n-1 or n-1 ± rounding
                for i in 0..k {
                    let s = got[i] + got[k - 1 - i];
                    assert!(s + 1 >= n && s <= n, "n={n} k={k} sum={s}");
                }
            }
        }
    }

    #[test]
    fn sample_grid_reads_index_positions() {
        let g = EmbeddingGrid::from_fn(27, 1, |r, c, _| (r * 27 + c) as f64).unwrap();
        let s = sample_grid(&g, 3).unwrap();
        // ⌊(2i+1)·27/6⌋ = 4, 13, 22
        let idx = [4usize, 13, 22];
        assert_eq!(s.side(), 3);
        for (a, &r) in idx.iter().enumerate() {
            for (b, &c) in idx.iter().enumerate() {
                assert_eq!(s.get(a, b, 0), (r * 27 + c) as f64);
            }
        }
        assert_eq!(sample_grid(&g, 27).unwrap(), g);
    }

    #[test]
    fn pool_small_cases() {
        let g = EmbeddingGrid::new(2, 1, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let p = spatial_mean_pool(&g, 2).unwrap();
        assert_eq!(p.data(), &[2.5]);

        let g = EmbeddingGrid::constant(27, 3, 0.7).unwrap();
        let p = spatial_mean_pool(&g, 4).unwrap();
        assert_eq!(p.side(), 7);
        assert!(p.data().iter().all(|&v| ((v - 0.7) / 0.7).abs() < 1e-12));
    }

    #[test]
    fn partial_windows_divide_by_true_count() {
        // 3x3 grid, stride 2: windows {0,1} and {2}
        let g = EmbeddingGrid::from_fn(3, 1, |r, c, _| (r * 3 + c) as f64).unwrap();
        let p = spatial_mean_pool(&g, 2).unwrap();
        assert_eq!(p.side(), 2);
        assert_eq!(p.get(0, 0, 0), (0.0 + 1.0 + 3.0 + 4.0) / 4.0);
        assert_eq!(p.get(0, 1, 0), (2.0 + 5.0) / 2.0);
        assert_eq!(p.get(1, 0, 0), (6.0 + 7.0) / 2.0);
        assert_eq!(p.get(1, 1, 0), 8.0);
    }
}
