//! Batch principal components pursuit baseline: nuclear norm plus weighted
//! l1, solved with an inexact augmented Lagrangian scheme (singular value
//! thresholding for the low-rank block, soft thresholding for the sparse
//! block).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mat::{thin_svd, Mat};

/// Solver settings for the batch program.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PcpConfig {
    /// Relative feasibility tolerance on `||M - L - S||_F / ||M||_F`.
    pub tol: f64,
    /// Tolerance on the scaled iterate movement `mu ||S - S_prev||_F /
    /// ||M||_F`; the penalty only grows while the movement is below this,
    /// which keeps the split evolving instead of freezing at a feasible
    /// non-optimal point.
    pub tol_dual: f64,
    pub max_iters: usize,
    /// Penalty growth factor.
    pub mu_growth: f64,
}

impl Default for PcpConfig {
    fn default() -> Self {
        PcpConfig {
            tol: 1e-7,
            tol_dual: 1e-5,
            max_iters: 1000,
            mu_growth: 1.5,
        }
    }
}

/// Output of a batch solve.
#[derive(Debug, Clone)]
pub struct PcpSolution {
    pub l: Mat,
    pub s: Mat,
    pub iterations: usize,
    pub primal_residual: f64,
    pub converged: bool,
}

/// The customary sparsity weight `1 / sqrt(max(n, t))`.
pub fn default_lambda(rows: usize, cols: usize) -> f64 {
    1.0 / (rows.max(cols) as f64).sqrt()
}

/// Shrink the singular values of `a` by `tau`.
fn svt(a: &Mat, tau: f64) -> Result<Mat> {
    let (u, s, v) = thin_svd(a)?;
    let mut out = Mat::zeros(a.rows(), a.cols());
    for (k, &sk) in s.iter().enumerate() {
        if sk > tau {
            let w = sk - tau;
            let uk = u.col(k);
            let vk = v.col(k);
            for i in 0..a.rows() {
                let f = w * uk[i];
                if f == 0.0 {
                    continue;
                }
                for j in 0..a.cols() {
                    out[(i, j)] += f * vk[j];
                }
            }
        }
    }
    Ok(out)
}

fn soft(a: &Mat, tau: f64) -> Mat {
    Mat::from_fn(a.rows(), a.cols(), |i, j| {
        let v = a[(i, j)];
        if v > tau {
            v - tau
        } else if v < -tau {
            v + tau
        } else {
            0.0
        }
    })
}

/// Minimize `||L||_* + lambda ||S||_1` subject to `L + S = M`.
///
/// Deterministic; a converged solution satisfies
/// `||M - L - S||_F <= tol * ||M||_F`.
pub fn solve_pcp(m: &Mat, lambda: f64, cfg: &PcpConfig) -> Result<PcpSolution> {
    if m.rows() == 0 || m.cols() == 0 {
        return Err(Error::InvalidConfig("empty measurement matrix".into()));
    }
    if lambda <= 0.0 {
        return Err(Error::InvalidConfig("lambda must be positive".into()));
    }
    let norm_f = m.frobenius_norm();
    if norm_f == 0.0 {
        return Ok(PcpSolution {
            l: Mat::zeros(m.rows(), m.cols()),
            s: Mat::zeros(m.rows(), m.cols()),
            iterations: 0,
            primal_residual: 0.0,
            converged: true,
        });
    }
    let norm_2 = crate::mat::spectral_norm_impl(m);
    let norm_inf = m.max_abs();
    // dual scaling and penalty schedule of the inexact ALM scheme
    let j_scale = norm_2.max(norm_inf / lambda);
    let mut y = m.scale(1.0 / j_scale);
    let mut mu = 1.25 / norm_2;
    let mu_bar = mu * 1e7;
    let mut l = Mat::zeros(m.rows(), m.cols());
    let mut s = Mat::zeros(m.rows(), m.cols());
    let mut iterations = 0;
    let mut residual = f64::INFINITY;
    let mut converged = false;

    while iterations < cfg.max_iters {
        iterations += 1;
        let work = m.sub(&s).add(&y.scale(1.0 / mu));
        l = svt(&work, 1.0 / mu)?;
        let work = m.sub(&l).add(&y.scale(1.0 / mu));
        let s_prev = s;
        s = soft(&work, lambda / mu);
        let gap = m.sub(&l).sub(&s);
        y = y.add(&gap.scale(mu));
        residual = gap.frobenius_norm() / norm_f;
        let movement = mu * s.sub(&s_prev).frobenius_norm() / norm_f;
        if residual <= cfg.tol && movement <= cfg.tol_dual {
            converged = true;
            break;
        }
        if movement <= cfg.tol_dual {
            mu = (mu * cfg.mu_growth).min(mu_bar);
        }
    }
    Ok(PcpSolution {
        l,
        s,
        iterations,
        primal_residual: residual,
        converged,
    })
}

/// `||L||_* + lambda ||S||_1`, the objective of the batch program.
pub fn pcp_objective(l: &Mat, s: &Mat, lambda: f64) -> Result<f64> {
    let (_, sv, _) = thin_svd(l)?;
    let nuclear: f64 = sv.iter().sum();
    let l1: f64 = (0..s.rows())
        .map(|i| s.row(i).iter().map(|v| v.abs()).sum::<f64>())
        .sum();
    Ok(nuclear + lambda * l1)
}
