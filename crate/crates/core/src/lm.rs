//! Damped Gauss–Newton (Levenberg–Marquardt) for small dense problems.

use nalgebra::{DMatrix, DVector};

/// A residual vector with an analytic Jacobian.
pub trait LeastSquaresProblem {
    fn residuals(&self, x: &DVector<f64>) -> DVector<f64>;

    /// `∂ residual_i / ∂ x_j`, one row per residual.
    fn jacobian(&self, x: &DVector<f64>) -> DMatrix<f64>;
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LmConfig {
    pub max_iterations: usize,
    /// Stop when the infinity norm of `Jᵀr` falls below this.
    pub gradient_tol: f64,
    /// Stop when an accepted step is this small relative to `x`.
    pub step_tol: f64,
    pub initial_lambda: f64,
}

impl Default for LmConfig {
    fn default() -> Self {
        Self {
            max_iterations: 200,
            gradient_tol: 1e-10,
            step_tol: 1e-10,
            initial_lambda: 1e-3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    SmallGradient,
    SmallStep,
    /// No damping level reduces the cost any further.
    Stalled,
    MaxIterations,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LmReport {
    pub x: DVector<f64>,
    /// `½‖r‖²` at `x`.
    pub cost: f64,
    pub gradient_norm: f64,
    pub iterations: usize,
    pub termination: Termination,
}

impl LmReport {
    pub fn converged(&self) -> bool {
        !matches!(self.termination, Termination::MaxIterations)
    }
}

fn half_sq(r: &DVector<f64>) -> f64 {
    0.5 * r.norm_squared()
}

pub fn minimize<P: LeastSquaresProblem>(problem: &P, x0: DVector<f64>, config: &LmConfig) -> LmReport {
    let mut x = x0;
    let mut r = problem.residuals(&x);
    let mut cost = half_sq(&r);
    let mut lambda = config.initial_lambda;
    let mut jac = problem.jacobian(&x);
    let mut grad = jac.tr_mul(&r);

    for iter in 0..config.max_iterations {
        let gnorm = grad.amax();
        if gnorm < config.gradient_tol {
            return LmReport {
                x,
                cost,
                gradient_norm: gnorm,
                iterations: iter,
                termination: Termination::SmallGradient,
            };
        }

        let jtj = jac.tr_mul(&jac);
        let mut accepted = false;
        while lambda < 1e16 {
            let mut damped = jtj.clone();
            for i in 0..damped.nrows() {
                damped[(i, i)] += lambda * jtj[(i, i)].max(1e-12);
            }
            let Some(chol) = damped.cholesky() else {
                lambda *= 10.0;
                continue;
            };
            let step = -chol.solve(&grad);
            let trial = &x + &step;
            let r_trial = problem.residuals(&trial);
            let c_trial = half_sq(&r_trial);
            if c_trial.is_finite() && c_trial < cost {
                let small = step.norm() <= config.step_tol * (x.norm() + config.step_tol);
                x = trial;
                r = r_trial;
                cost = c_trial;
                lambda = (lambda * 0.1).max(1e-15);
                jac = problem.jacobian(&x);
                grad = jac.tr_mul(&r);
                accepted = true;
                if small {
                    return LmReport {
                        x,
                        cost,
                        gradient_norm: grad.amax(),
                        iterations: iter + 1,
                        termination: Termination::SmallStep,
                    };
                }
                break;
            }
            lambda *= 10.0;
        }
        if !accepted {
            return LmReport {
                x,
                cost,
                gradient_norm: gnorm,
                iterations: iter + 1,
                termination: Termination::Stalled,
            };
        }
    }
    LmReport {
        gradient_norm: grad.amax(),
        x,
        cost,
        iterations: config.max_iterations,
        termination: Termination::MaxIterations,
    }
}
