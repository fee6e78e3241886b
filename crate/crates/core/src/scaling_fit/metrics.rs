use super::{FitError, LossSample};

fn ss_res(samples: &[LossSample], model: &impl Fn(&LossSample) -> f64) -> f64 {
    samples
        .iter()
        .map(|s| {
            let r = model(s) - s.loss;
            r * r
        })
        .sum()
}

/// Whether every observed loss is bit-identical, i.e. the total sum of squares is zero.
pub fn zero_variance(samples: &[LossSample]) -> bool {
    samples.windows(2).all(|w| w[0].loss == w[1].loss)
}

/// Coefficient of determination `1 - SS_res / SS_tot`.
///
/// When the observations have zero variance the ratio is undefined; the
/// value is then 1 for an exact fit and 0 otherwise.
pub fn r_squared(
    samples: &[LossSample],
    model: impl Fn(&LossSample) -> f64,
) -> Result<f64, FitError> {
    if samples.len() < 2 {
        return Err(FitError::InvalidData(format!(
            "R² needs at least 2 samples, got {}",
            samples.len()
        )));
    }
    let res = ss_res(samples, &model);
    if zero_variance(samples) {
        return Ok(if res == 0.0 { 1.0 } else { 0.0 });
    }
    let mean = samples.iter().map(|s| s.loss).sum::<f64>() / samples.len() as f64;
    let tot: f64 = samples.iter().map(|s| (s.loss - mean).powi(2)).sum();
    Ok(1.0 - res / tot)
}

/// Mean squared residual.
pub fn mse(samples: &[LossSample], model: impl Fn(&LossSample) -> f64) -> Result<f64, FitError> {
    if samples.is_empty() {
        return Err(FitError::InvalidData("MSE needs at least 1 sample".into()));
    }
    Ok(ss_res(samples, &model) / samples.len() as f64)
}
