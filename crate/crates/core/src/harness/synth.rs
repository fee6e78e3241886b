//! Synthetic loss surfaces drawn from a known joint law.

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::{HarnessError, LossLog};
use crate::scaling_fit::{JointParams, LossSample};

/// Token sweep at 32 frames: every pooled size of a 27×27 grid.
pub fn token_sweep() -> Vec<(u32, u32)> {
    [1, 4, 9, 16, 25, 36, 49, 81, 196].iter().map(|&m| (32, m)).collect()
}

/// Frame sweep at 49 tokens per frame.
pub fn frame_sweep() -> Vec<(u32, u32)> {
    [1, 8, 16, 32, 64, 96, 128].iter().map(|&t| (t, 49)).collect()
}

/// The 25 trained configurations: the token sweep, an eight-point frame
/// sweep at 49 tokens, and a 2×4 block varying both. `(32, 49)` appears in
/// both sweeps.
pub fn joint_grid() -> Vec<(u32, u32)> {
    let mut grid = token_sweep();
    grid.extend([1, 8, 16, 32, 48, 64, 96, 128].iter().map(|&t| (t, 49)));
    for m in [25, 81] {
        grid.extend([48, 64, 80, 96].iter().map(|&t| (t, m)));
    }
    grid
}

/// Losses from `params` at each `(frames, tokens)` config plus Gaussian noise
/// of standard deviation `sigma`, drawn from a ChaCha8 stream seeded by `seed`.
/// With `sigma = 0` the losses are the law's values exactly.
pub fn generate_synthetic(
    params: &JointParams,
    configs: &[(u32, u32)],
    sigma: f64,
    seed: u64,
) -> Result<LossLog, HarnessError> {
    if configs.is_empty() {
        return Err(HarnessError::Validation("no configurations to generate".into()));
    }
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(HarnessError::Validation(format!("sigma must be >= 0, got {sigma}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, sigma).expect("sigma checked above");
    let mut rows = Vec::with_capacity(configs.len());
    for &(frames, tokens) in configs {
        let clean = params.eval(f64::from(tokens), f64::from(frames))?;
        let loss = if sigma == 0.0 { clean } else { clean + noise.sample(&mut rng) };
        rows.push(LossSample::new(frames, tokens, loss)?);
    }
    let mut metadata = BTreeMap::new();
    metadata.insert("source".to_string(), "synthetic".to_string());
    metadata.insert("seed".to_string(), seed.to_string());
    metadata.insert("sigma".to_string(), sigma.to_string());
    metadata.insert(
        "params".to_string(),
        format!(
            "{},{},{},{},{}",
            params.c_m, params.alpha, params.c_t, params.beta, params.floor
        ),
    );
    LossLog::new(rows, metadata, true)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn published() -> JointParams {
        JointParams::new(0.25, 0.26, 0.13, 0.21, 0.50).unwrap()
    }

    #[test]
    fn grid_sizes() {
        assert_eq!(token_sweep().len(), 9);
        assert_eq!(frame_sweep().len(), 7);
        let g = joint_grid();
        assert_eq!(g.len(), 25);
        assert_eq!(g.iter().filter(|&&c| c == (32, 49)).count(), 2);
    }

    #[test]
    fn noiseless_is_exact() {
        let log = generate_synthetic(&published(), &[(120, 49)], 0.0, 7).unwrap();
        let direct = 0.25 * 49f64.powf(-0.26) + 0.13 * 120f64.powf(-0.21) + 0.5;
        assert_eq!(log.rows[0].loss, direct);
    }

    #[test]
    fn seeded_noise_is_reproducible() {
        let a = generate_synthetic(&published(), &joint_grid(), 0.005, 42).unwrap();
        let b = generate_synthetic(&published(), &joint_grid(), 0.005, 42).unwrap();
        assert_eq!(a.to_csv(), b.to_csv());
        let c = generate_synthetic(&published(), &joint_grid(), 0.005, 43).unwrap();
        assert_ne!(a.to_csv(), c.to_csv());
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(generate_synthetic(&published(), &[], 0.0, 0).is_err());
        assert!(generate_synthetic(&published(), &[(1, 1)], -1.0, 0).is_err());
    }
}
