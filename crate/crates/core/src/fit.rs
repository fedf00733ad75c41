//! Bounded-iteration Levenberg–Marquardt least squares.
//!
//! The normal equations are accumulated column by column so problems with a
//! few parameters and hundreds of thousands of residuals (whole camera
//! frames) stay cheap. Parameter covariance is reported as `s²·(JᵀJ)⁻¹` with
//! `s²` the residual variance at the optimum.

use crate::error::{Result, SsmError};
use nalgebra::{DMatrix, DVector};

/// A least-squares problem `min ½ Σ rᵢ(p)²`.
pub trait LeastSquares {
    /// Residuals at `p`, or `None` when `p` is outside the model's domain.
    fn residuals(&self, p: &[f64]) -> Option<Vec<f64>>;

    /// Jacobian columns `∂r/∂p_j`. The default uses finite differences.
    fn jacobian(&self, p: &[f64], r: &[f64], cfg: &LmConfig) -> Option<Vec<Vec<f64>>> {
        finite_difference_jacobian(self, p, r, cfg)
    }

    /// Floor on the magnitude used to size the finite-difference step for
    /// parameter `j`, so parameters near zero still get a sensible step.
    fn fd_scale(&self, _j: usize) -> f64 {
        1e-8
    }
}

#[derive(Debug, Clone, Copy)]
pub struct LmConfig {
    pub max_iterations: usize,
    /// Stop when an accepted step reduces the cost by less than this fraction.
    pub ftol: f64,
    /// Stop when the relative step length drops below this.
    pub xtol: f64,
    /// Relative finite-difference step.
    pub fd_step: f64,
    /// Central instead of forward differences.
    pub central: bool,
    pub initial_lambda: f64,
}

impl Default for LmConfig {
    fn default() -> Self {
        LmConfig {
            max_iterations: 200,
            ftol: 1e-12,
            xtol: 1e-10,
            fd_step: 1e-6,
            central: false,
            initial_lambda: 1e-3,
        }
    }
}

#[derive(Debug, Clone)]
pub struct LmReport {
    pub params: Vec<f64>,
    /// ½ Σ r² at `params`.
    pub cost: f64,
    pub iterations: usize,
    pub n_residuals: usize,
    pub residual_rms: f64,
    /// `s²·(JᵀJ)⁻¹`; `None` when JᵀJ is singular.
    pub covariance: Option<DMatrix<f64>>,
}

impl LmReport {
    pub fn std_errors(&self) -> Vec<f64> {
        match &self.covariance {
            Some(c) => (0..self.params.len()).map(|i| c[(i, i)].max(0.0).sqrt()).collect(),
            None => vec![f64::NAN; self.params.len()],
        }
    }
}

pub fn finite_difference_jacobian<P: LeastSquares + ?Sized>(
    problem: &P,
    p: &[f64],
    r: &[f64],
    cfg: &LmConfig,
) -> Option<Vec<Vec<f64>>> {
    let mut cols = Vec::with_capacity(p.len());
    let mut q = p.to_vec();
    for j in 0..p.len() {
        let h = cfg.fd_step * p[j].abs().max(problem.fd_scale(j));
        q[j] = p[j] + h;
        let rp = problem.residuals(&q)?;
        let col = if cfg.central {
            q[j] = p[j] - h;
            let rm = problem.residuals(&q)?;
            rp.iter().zip(&rm).map(|(a, b)| (a - b) / (2.0 * h)).collect()
        } else {
            rp.iter().zip(r).map(|(a, b)| (a - b) / h).collect()
        };
        q[j] = p[j];
        cols.push(col);
    }
    Some(cols)
}

fn half_sum_sq(r: &[f64]) -> f64 {
    0.5 * r.iter().map(|x| x * x).sum::<f64>()
}

fn normal_equations(cols: &[Vec<f64>], r: &[f64]) -> (DMatrix<f64>, DVector<f64>) {
    let n = cols.len();
    let mut jtj = DMatrix::zeros(n, n);
    let mut jtr = DVector::zeros(n);
    for a in 0..n {
        for b in a..n {
            let v: f64 = cols[a].iter().zip(&cols[b]).map(|(x, y)| x * y).sum();
            jtj[(a, b)] = v;
            jtj[(b, a)] = v;
        }
        jtr[a] = cols[a].iter().zip(r).map(|(x, y)| x * y).sum();
    }
    (jtj, jtr)
}

/// Minimise starting at `p0`.
///
/// Returns [`SsmError::FitFailed`] carrying the best parameters seen when the
/// iteration budget runs out or the residuals become undefined at `p0`.
pub fn levenberg_marquardt<P: LeastSquares + ?Sized>(problem: &P, p0: &[f64], cfg: &LmConfig) -> Result<LmReport> {
    let n = p0.len();
    let mut p = p0.to_vec();
    let mut r = problem
        .residuals(&p)
        .ok_or_else(|| SsmError::fit("residuals undefined at the initial guess"))?;
    if r.len() < n {
        return Err(SsmError::fit(format!("{} residuals for {n} parameters", r.len())));
    }
    let mut cost = half_sum_sq(&r);
    if !cost.is_finite() {
        return Err(SsmError::fit("non-finite cost at the initial guess"));
    }
    let mut lambda = cfg.initial_lambda;
    let mut converged = false;
    let mut iterations = 0;

    let fail = |reason: String, best: &[f64]| SsmError::FitFailed {
        reason,
        best: Some(best.to_vec()),
    };

    'outer: while iterations < cfg.max_iterations {
        iterations += 1;
        let cols = problem
            .jacobian(&p, &r, cfg)
            .ok_or_else(|| fail("jacobian undefined".into(), &p))?;
        let (jtj, jtr) = normal_equations(&cols, &r);
        if jtr.iter().all(|g| g.abs() == 0.0) {
            converged = true;
            break;
        }

        loop {
            let mut a = jtj.clone();
            for i in 0..n {
                a[(i, i)] += lambda * jtj[(i, i)].max(1e-30);
            }
            let step = match a.cholesky() {
                Some(ch) => ch.solve(&(-&jtr)),
                None => {
                    lambda *= 10.0;
                    if lambda > 1e16 {
                        return Err(fail("damped normal matrix not positive definite".into(), &p));
                    }
                    continue;
                }
            };
            let trial: Vec<f64> = p.iter().zip(step.iter()).map(|(a, b)| a + b).collect();
            let accepted = problem.residuals(&trial).and_then(|rt| {
                let ct = half_sum_sq(&rt);
                (ct.is_finite() && ct <= cost).then_some((rt, ct))
            });
            match accepted {
                Some((rt, ct)) => {
                    let rel_drop = (cost - ct) / cost.max(f64::MIN_POSITIVE);
                    let pnorm = p.iter().map(|x| x * x).sum::<f64>().sqrt();
                    let snorm = step.norm();
                    p = trial;
                    r = rt;
                    cost = ct;
                    lambda = (lambda / 10.0).max(1e-15);
                    if rel_drop < cfg.ftol || snorm <= cfg.xtol * (pnorm + cfg.xtol) || cost == 0.0 {
                        converged = true;
                        break 'outer;
                    }
                    break;
                }
                None => {
                    lambda *= 10.0;
                    if lambda > 1e16 {
                        // No downhill step exists at any damping: a stationary point.
                        converged = true;
                        break 'outer;
                    }
                }
            }
        }
    }

    if !converged {
        return Err(fail(format!("no convergence after {iterations} iterations"), &p));
    }

    let m = r.len();
    let dof = (m - n).max(1) as f64;
    let s2 = 2.0 * cost / dof;
    let covariance = problem.jacobian(&p, &r, cfg).and_then(|cols| {
        let (jtj, _) = normal_equations(&cols, &r);
        jtj.try_inverse().map(|inv| inv * s2)
    });
    Ok(LmReport {
        params: p,
        cost,
        iterations,
        n_residuals: m,
        residual_rms: (2.0 * cost / m as f64).sqrt(),
        covariance,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Exp {
        t: Vec<f64>,
        y: Vec<f64>,
    }

    impl LeastSquares for Exp {
        fn residuals(&self, p: &[f64]) -> Option<Vec<f64>> {
            Some(self.t.iter().zip(&self.y).map(|(t, y)| p[0] * (-p[1] * t).exp() - y).collect())
        }
    }

    #[test]
    fn recovers_exponential_decay() {
        let t: Vec<f64> = (0..40).map(|i| i as f64 * 0.1).collect();
        let y = t.iter().map(|t| 2.5 * (-1.3 * t).exp()).collect();
        let rep = levenberg_marquardt(&Exp { t, y }, &[1.0, 0.5], &LmConfig::default()).unwrap();
        assert!((rep.params[0] - 2.5).abs() < 1e-8);
        assert!((rep.params[1] - 1.3).abs() < 1e-8);
    }

    #[test]
    fn iteration_budget_reports_best_so_far() {
        let t: Vec<f64> = (0..40).map(|i| i as f64 * 0.1).collect();
        let y = t.iter().map(|t| 2.5 * (-1.3 * t).exp()).collect();
        let cfg = LmConfig {
            max_iterations: 1,
            ..LmConfig::default()
        };
        match levenberg_marquardt(&Exp { t, y }, &[1.0, 0.5], &cfg) {
            Err(SsmError::FitFailed { best: Some(b), .. }) => assert_eq!(b.len(), 2),
            other => panic!("expected fit failure, got {other:?}"),
        }
    }
}
