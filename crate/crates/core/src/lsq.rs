//! Damped nonlinear least squares (Levenberg-Marquardt).

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct LmOptions {
    pub max_iterations: usize,
    /// Stop when the relative cost decrease falls below this.
    pub ftol: f64,
    /// Stop when the relative step falls below this.
    pub xtol: f64,
    pub initial_damping: f64,
}

impl Default for LmOptions {
    fn default() -> Self {
        Self {
            max_iterations: 500,
            ftol: 1e-15,
            xtol: 1e-14,
            initial_damping: 1e-3,
        }
    }
}

#[derive(Debug, Clone)]
pub struct LmResult {
    pub params: Vec<f64>,
    /// Sum of squared residuals at `params`.
    pub cost: f64,
    pub iterations: usize,
}

fn cost_of(r: &DVector<f64>) -> f64 {
    r.norm_squared()
}

/// Central-difference Jacobian of `residuals` at `x`.
fn jacobian<F>(residuals: &F, x: &[f64], m: usize) -> Result<DMatrix<f64>>
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    let mut jac = DMatrix::zeros(m, x.len());
    let mut xp = x.to_vec();
    for k in 0..x.len() {
        let h = 1e-6 * x[k].abs().max(1e-3);
        xp[k] = x[k] + h;
        let rp = residuals(&xp);
        xp[k] = x[k] - h;
        let rm = residuals(&xp);
        xp[k] = x[k];
        for i in 0..m {
            let d = (rp[i] - rm[i]) / (2.0 * h);
            if !d.is_finite() {
                return Err(Error::Numerical(format!(
                    "non-finite Jacobian entry for parameter {k}"
                )));
            }
            jac[(i, k)] = d;
        }
    }
    Ok(jac)
}

/// Minimizes `sum residuals(x)^2` starting from `x0`.
pub fn levenberg_marquardt<F>(residuals: F, x0: &[f64], opts: &LmOptions) -> Result<LmResult>
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    let mut x = x0.to_vec();
    let mut r = DVector::from_vec(residuals(&x));
    let m = r.len();
    if m < x.len() {
        return Err(Error::invalid(format!(
            "{m} residuals cannot determine {} parameters",
            x.len()
        )));
    }
    let mut cost = cost_of(&r);
    if !cost.is_finite() {
        return Err(Error::Numerical(
            "residuals are not finite at the starting point".into(),
        ));
    }
    let mut mu = opts.initial_damping;
    for iteration in 0..opts.max_iterations {
        let jac = jacobian(&residuals, &x, m)?;
        let jtj = jac.transpose() * &jac;
        let jtr = jac.transpose() * &r;
        let mut improved = false;
        while mu < 1e16 {
            let mut a = jtj.clone();
            for k in 0..x.len() {
                a[(k, k)] += mu * jtj[(k, k)].max(1e-300);
            }
            let Some(step) = a.cholesky().map(|c| c.solve(&(-&jtr))) else {
                mu *= 10.0;
                continue;
            };
            let trial: Vec<f64> = x.iter().zip(step.iter()).map(|(a, b)| a + b).collect();
            let r_trial = DVector::from_vec(residuals(&trial));
            let c_trial = cost_of(&r_trial);
            if c_trial.is_finite() && c_trial <= cost {
                let rel_step = step.norm() / (DVector::from_vec(x.clone()).norm() + opts.xtol);
                let rel_drop = (cost - c_trial) / cost.max(f64::MIN_POSITIVE);
                x = trial;
                r = r_trial;
                cost = c_trial;
                mu = (mu / 3.0).max(1e-15);
                if rel_drop < opts.ftol || rel_step < opts.xtol || cost == 0.0 {
                    return Ok(LmResult {
                        params: x,
                        cost,
                        iterations: iteration + 1,
                    });
                }
                improved = true;
                break;
            }
            mu *= 4.0;
        }
        if !improved {
            // No damping level reduces the cost: a (local) minimum to working precision.
            return Ok(LmResult {
                params: x,
                cost,
                iterations: iteration + 1,
            });
        }
    }
    Err(Error::Numerical(format!(
        "least-squares fit did not converge in {} iterations (cost {cost:e})",
        opts.max_iterations
    )))
}
