use super::{loss_at, AllocError, Budget};
use crate::scaling_fit::JointParams;

fn check_exponents(params: &JointParams) -> Result<(), AllocError> {
    if params.alpha >= 1.0 {
        return Err(AllocError::FormulaDomain { condition: "alpha must be < 1" });
    }
    if params.beta >= 1.0 {
        return Err(AllocError::FormulaDomain { condition: "beta must be < 1" });
    }
    if params.alpha + params.beta >= 2.0 {
        return Err(AllocError::FormulaDomain { condition: "alpha + beta must be < 2" });
    }
    Ok(())
}

/// Closed-form allocation `(T_opt, M_opt)` for a window of `L` tokens:
///
/// ```text
/// r     = (beta·c_t) / (alpha·c_m)
/// T_opt = (L / r^(1/(1-alpha)))^((1-alpha)/(2-beta-alpha))
/// M_opt = r^(1/(1-alpha)) · T_opt^((1-beta)/(1-alpha))
/// ```
///
/// The product `T_opt·M_opt` equals `L`. Evaluated in log space.
///
/// This point satisfies `M²·∂L/∂M = T²·∂L/∂T`, which is not the stationarity
/// condition of the law on `T·M = L` unless `T = M`; see [`boundary_minimizer`]
/// for the exact constrained minimizer.
pub fn closed_form_opt(params: &JointParams, budget: Budget) -> Result<(f64, f64), AllocError> {
    check_exponents(params)?;
    let (a, b) = (params.alpha, params.beta);
    let ln_r = (b * params.c_t).ln() - (a * params.c_m).ln();
    let ln_rk = ln_r / (1.0 - a);
    let ln_t = (1.0 - a) / (2.0 - b - a) * ((budget.window() as f64).ln() - ln_rk);
    let ln_m = ln_rk + (1.0 - b) / (1.0 - a) * ln_t;
    Ok((ln_t.exp(), ln_m.exp()))
}

/// Exact minimizer of the joint law on the boundary `T·M = L`.
///
/// Setting the derivative of `c_m·(L/T)^(-alpha) + c_t·T^(-beta)` to zero gives
/// `T^(alpha+beta) = r·L^alpha` with `r = (beta·c_t)/(alpha·c_m)`, and `M = L/T`.
/// Defined for every positive `alpha`, `beta`.
pub fn boundary_minimizer(params: &JointParams, budget: Budget) -> (f64, f64) {
    let (a, b) = (params.alpha, params.beta);
    let l = budget.window() as f64;
    let ln_r = (b * params.c_t).ln() - (a * params.c_m).ln();
    let t = ((ln_r + a * l.ln()) / (a + b)).exp();
    (t, l / t)
}

/// Relative mismatch between `M·∂L/∂M` and `T·∂L/∂T`. Zero at a stationary
/// point of the law restricted to `T·M = const`.
pub fn kkt_check(params: &JointParams, frames: f64, tokens: f64) -> Result<f64, AllocError> {
    if !(frames > 0.0) {
        return Err(AllocError::Domain { what: "frames", value: frames });
    }
    if !(tokens > 0.0) {
        return Err(AllocError::Domain { what: "tokens", value: tokens });
    }
    let dm = -params.alpha * params.c_m * tokens.powf(-params.alpha - 1.0);
    let dt = -params.beta * params.c_t * frames.powf(-params.beta - 1.0);
    let (x, y) = (tokens * dm, frames * dt);
    let denom = x.abs().max(y.abs());
    if denom == 0.0 {
        return Ok(0.0);
    }
    Ok((x - y).abs() / denom)
}

/// Real-valued grid search along `T·M = L` for `T ∈ [1, L]`.
///
/// The law decreases in both coordinates, so the constrained minimum lies on
/// the boundary. The grid is refined around the incumbent by factors of 10
/// until the spacing reaches `final_step`. Returns `(T, M)`.
pub fn relaxed_grid_search(params: &JointParams, budget: Budget, final_step: f64) -> (f64, f64) {
    let l = budget.window() as f64;
    let f = |t: f64| loss_at(params, l / t, t);
    let mut lo = 1.0f64;
    let mut hi = l;
    let mut step = 10f64.powf((l.log10() - 2.0).floor()).max(final_step);
    let mut best = lo;
    loop {
        let n = ((hi - lo) / step).floor() as usize;
        let mut best_val = f64::INFINITY;
        for i in 0..=n {
            let t = lo + i as f64 * step;
            let v = f(t);
            if v < best_val {
                best_val = v;
                best = t;
            }
        }
        if step <= final_step {
            break;
        }
        lo = (best - step).max(1.0);
        hi = (best + step).min(l);
        step = (step / 10.0).max(final_step);
    }
    (best, l / best)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn published() -> JointParams {
        JointParams::new(0.25, 0.26, 0.13, 0.21, 0.50).unwrap()
    }

    #[test]
    fn published_window_6000() {
        let (t, m) = closed_form_opt(&published(), Budget::new(6000).unwrap()).unwrap();
        assert!((t - 118.46318952668518).abs() < 1e-9, "{t}");
        assert!((m - 50.64864473067755).abs() < 1e-9, "{m}");
        assert!((t * m / 6000.0 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn published_window_126000() {
        let (t, m) = closed_form_opt(&published(), Budget::new(126_000).unwrap()).unwrap();
        assert!((t - 516.52).abs() < 0.01 && (m - 243.94).abs() < 0.01, "{t} {m}");
    }

    #[test]
    fn symmetric_split() {
        let p = JointParams::new(0.3, 0.4, 0.3, 0.4, 0.1).unwrap();
        let (t, m) = closed_form_opt(&p, Budget::new(400).unwrap()).unwrap();
        assert!((t - 20.0).abs() < 1e-9 && (m - 20.0).abs() < 1e-9);
        assert!(kkt_check(&p, t, m).unwrap() < 1e-12);
        let (bt, bm) = boundary_minimizer(&p, Budget::new(400).unwrap());
        assert!((bt - 20.0).abs() < 1e-9 && (bm - 20.0).abs() < 1e-9);
    }

    #[test]
    fn domain_errors() {
        let b = Budget::new(100).unwrap();
        let p = JointParams::new(0.3, 1.0, 0.3, 0.4, 0.1).unwrap();
        assert_eq!(
            closed_form_opt(&p, b),
            Err(AllocError::FormulaDomain { condition: "alpha must be < 1" })
        );
        let p = JointParams::new(0.3, 0.5, 0.3, 1.5, 0.1).unwrap();
        assert!(matches!(closed_form_opt(&p, b), Err(AllocError::FormulaDomain { .. })));
        assert!(kkt_check(&published(), 0.0, 4.0).is_err());
    }

    #[test]
    fn boundary_minimizer_is_stationary() {
        let p = published();
        let b = Budget::new(6000).unwrap();
        let (t, m) = boundary_minimizer(&p, b);
        assert!(kkt_check(&p, t, m).unwrap() < 1e-12);
        // T^(α+β) = r·L^α with r = 0.42: T ≈ 19.4
        assert!((t - 19.4).abs() < 0.1, "{t}");
        let (gt, _) = relaxed_grid_search(&p, b, 0.1);
        assert!((gt - t).abs() <= 0.1);
    }

    #[test]
    fn non_optimal_point_has_large_residual() {
        assert!(kkt_check(&published(), 8.0, 729.0).unwrap() > 1e-3);
    }
}
