//! Damped least squares (Levenberg-Marquardt) for small dense problems.
//!
//! Damping follows Nielsen's update rule; the damping term is scaled by the
//! running maximum of the diagonal of `JᵀJ` so the step is invariant to
//! parameter units.

use nalgebra::{DMatrix, DVector};

pub(crate) trait LeastSquares: Sync {
    fn n_params(&self) -> usize;
    fn n_residuals(&self) -> usize;
    /// Fills `out` with model − observed. Returns false if any entry is not
    /// finite or `u` is outside the representable domain.
    fn residuals(&self, u: &[f64], out: &mut [f64]) -> bool;
    /// Row-major Jacobian of the residuals w.r.t. `u`.
    fn jacobian(&self, u: &[f64], out: &mut DMatrix<f64>);
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct LmConfig {
    pub max_iterations: usize,
    pub tolerance: f64,
}

#[derive(Debug, Clone)]
pub(crate) struct LmOutcome {
    pub params: Vec<f64>,
    /// Sum of squared residuals at `params`.
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Objective after the start and after each accepted step.
    pub trace: Vec<f64>,
}

fn sum_sq(r: &[f64]) -> f64 {
    r.iter().map(|v| v * v).sum()
}

/// Runs one local minimization from `start`. `None` if the start itself is not finite.
pub(crate) fn minimize(problem: &impl LeastSquares, start: &[f64], cfg: LmConfig) -> Option<LmOutcome> {
    let n = problem.n_params();
    let m = problem.n_residuals();
    let mut u = start.to_vec();
    let mut r = vec![0.0; m];
    if !problem.residuals(&u, &mut r) {
        return None;
    }
    let mut f = sum_sq(&r);
    let mut trace = vec![f];
    let mut jac = DMatrix::zeros(m, n);
    let mut scale = vec![0.0f64; n];
    let mut mu = 1e-3;
    let mut nu = 2.0;
    let mut u_new = vec![0.0; n];
    let mut r_new = vec![0.0; m];
    let mut iterations = 0;
    let mut converged = false;
    let mut need_jacobian = true;
    let mut a = DMatrix::zeros(n, n);
    let mut g = DVector::zeros(n);

    while iterations < cfg.max_iterations {
        iterations += 1;
        if f == 0.0 {
            converged = true;
            break;
        }
        if need_jacobian {
            problem.jacobian(&u, &mut jac);
            a = jac.transpose() * &jac;
            g = jac.transpose() * DVector::from_column_slice(&r);
            for (j, s) in scale.iter_mut().enumerate() {
                *s = s.max(a[(j, j)]);
            }
            need_jacobian = false;
        }
        if g.amax() == 0.0 {
            converged = true;
            break;
        }
        let mut damped = a.clone();
        for (j, &s) in scale.iter().enumerate() {
            damped[(j, j)] += mu * if s > 0.0 { s } else { 1.0 };
        }
        let Some(chol) = damped.cholesky() else {
            mu *= nu;
            nu *= 2.0;
            continue;
        };
        let h = chol.solve(&(-&g));
        let u_norm = u.iter().map(|v| v * v).sum::<f64>().sqrt();
        if h.norm() <= cfg.tolerance * (u_norm + cfg.tolerance) {
            converged = true;
            break;
        }
        for j in 0..n {
            u_new[j] = u[j] + h[j];
        }
        let finite = problem.residuals(&u_new, &mut r_new);
        let f_new = if finite { sum_sq(&r_new) } else { f64::INFINITY };
        if f_new < f {
            let mut dh = h.clone();
            for (j, &s) in scale.iter().enumerate() {
                dh[j] *= mu * if s > 0.0 { s } else { 1.0 };
            }
            let predicted = h.dot(&(dh - &g));
            let rho = (f - f_new) / predicted;
            mu *= (1.0 - (2.0 * rho - 1.0).powi(3)).max(1.0 / 3.0);
            nu = 2.0;
            let rel = (f - f_new) / f;
            std::mem::swap(&mut u, &mut u_new);
            std::mem::swap(&mut r, &mut r_new);
            f = f_new;
            trace.push(f);
            need_jacobian = true;
            if rel < cfg.tolerance {
                converged = true;
                break;
            }
        } else {
            mu *= nu;
            nu *= 2.0;
            if !mu.is_finite() {
                break;
            }
        }
    }
    Some(LmOutcome {
        params: u,
        objective: f,
        iterations,
        converged,
        trace,
    })
}
