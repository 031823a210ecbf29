//! The online recovery loop: per-frame projected sparse recovery plus the
//! scheduled projection-PCA updates that fold newly appeared subspace
//! directions into the running estimate.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{top_r_evd, BasisMatrix};
use crate::mat::Mat;
use crate::sparse_recovery::{estimate_support, ls_refit, solve_bpdn, BpdnConfig, ProjectedOperator};

/// Algorithm knobs. Change times are inputs; no change detection is done.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReprocsParams {
    /// Residual-ball radius for the l1 program.
    pub xi: f64,
    /// Support threshold.
    pub omega: f64,
    /// Frames per projection-PCA window.
    pub alpha: usize,
    /// Number of projection-PCA steps per change.
    pub k_steps: usize,
    /// Known subspace change times, strictly increasing.
    pub t_change: Vec<usize>,
    /// Initial rank.
    pub r0: usize,
    /// Directions added per change.
    pub c: usize,
    /// Settings for the inner l1 solver.
    #[serde(default)]
    pub bpdn: BpdnConfig,
    /// Optional AR compensation: when the correlation coefficient is known,
    /// the update windows collect `L_t - b L_{t-1}` instead of `L_t`.
    #[serde(default)]
    pub ar_coefficient: Option<f64>,
}

impl ReprocsParams {
    /// Check the hard invariants; returns human-readable warnings for the
    /// soft ones (change spacing shorter than the `K alpha` update horizon).
    pub fn validate(&self) -> Result<Vec<String>> {
        if self.alpha == 0 || self.k_steps == 0 {
            return Err(Error::InvalidConfig(
                "alpha and k_steps must be at least 1".into(),
            ));
        }
        if !(self.xi > 0.0) || !(self.omega > 0.0) {
            return Err(Error::InvalidConfig("xi and omega must be positive".into()));
        }
        let mut warnings = Vec::new();
        for w in self.t_change.windows(2) {
            if w[1] <= w[0] {
                return Err(Error::InvalidConfig(
                    "change times must be strictly increasing".into(),
                ));
            }
            if w[1] - w[0] < self.k_steps * self.alpha {
                warnings.push(format!(
                    "changes at {} and {} are closer than K*alpha = {} frames; \
                     the later updates of the first change will never fire",
                    w[0],
                    w[1],
                    self.k_steps * self.alpha
                ));
            }
        }
        Ok(warnings)
    }
}

/// Per-frame output.
#[derive(Debug, Clone)]
pub struct FrameEstimate {
    pub s_hat: Vec<f64>,
    pub l_hat: Vec<f64>,
    pub t_hat: Vec<usize>,
    /// Projected measurement fed to the sparse solver.
    pub y: Vec<f64>,
    /// False when the l1 solve hit its iteration cap or the refit fell back
    /// to the thresholded solver output.
    pub converged: bool,
}

/// Evolving estimate state. Single-owner; frames must arrive with strictly
/// increasing times.
#[derive(Debug, Clone)]
pub struct ReprocsState {
    p_star: BasisMatrix,
    p_new: BasisMatrix,
    j: usize,
    k: usize,
    buffer: Vec<Vec<f64>>,
    prev_lhat: Option<Vec<f64>>,
    t_last: Option<usize>,
}

impl ReprocsState {
    /// Settled part of the estimate.
    pub fn p_star(&self) -> &BasisMatrix {
        &self.p_star
    }

    /// In-progress estimate of the latest addition (may be empty).
    pub fn p_new(&self) -> &BasisMatrix {
        &self.p_new
    }

    /// Index of the change currently being tracked (1-based).
    pub fn change_index(&self) -> usize {
        self.j
    }

    /// Projection-PCA step due next (1-based).
    pub fn step_index(&self) -> usize {
        self.k
    }

    /// Full current estimate `[P_star P_new]`.
    pub fn current_basis(&self) -> Result<BasisMatrix> {
        if self.p_new.is_empty() {
            Ok(self.p_star.clone())
        } else {
            self.p_star.concat(&self.p_new)
        }
    }

    /// The measurement projector `I - P_star P_star' - P_new P_new'`.
    pub fn projector(&self) -> Result<ProjectedOperator> {
        Ok(ProjectedOperator::new(self.current_basis()?))
    }
}

/// Basis of the top-`r` eigenvectors of `(1/a) (I-PP')D ((I-PP')D)'`.
///
/// With an empty `P` this is ordinary PCA of the columns of `D`. Fails when
/// the retained eigenvalues carry no energy (all below 1e-12), which means
/// the columns were already inside the projected-out subspace.
pub fn proj_pca(d: &Mat, p: &BasisMatrix, r: usize) -> Result<BasisMatrix> {
    if d.cols() == 0 {
        return Err(Error::InvalidConfig("projection-PCA of no columns".into()));
    }
    if r > d.rows() {
        return Err(Error::DimensionMismatch(format!(
            "rank {} above dimension {}",
            r,
            d.rows()
        )));
    }
    if r == 0 {
        return Ok(BasisMatrix::empty(d.rows()));
    }
    let cols: Vec<Vec<f64>> = (0..d.cols()).map(|j| p.project_out(&d.col(j))).collect();
    let dproj = Mat::from_cols(&cols);
    let cov = dproj.gram_t().scale(1.0 / d.cols() as f64);
    let eig = top_r_evd(&cov, r)?;
    if eig.values.iter().all(|&v| v < 1e-12) {
        return Err(Error::DegenerateProjection(eig.values[0]));
    }
    Ok(eig.vectors)
}

/// Build the initial state from an outlier-free training block
/// (`n x t_train`, one column per frame).
pub fn init(training: &Mat, r0: usize) -> Result<ReprocsState> {
    if training.cols() < r0 {
        return Err(Error::InvalidConfig(format!(
            "training length {} below the initial rank {}",
            training.cols(),
            r0
        )));
    }
    let p0 = if r0 == 0 {
        BasisMatrix::empty(training.rows())
    } else {
        proj_pca(training, &BasisMatrix::empty(training.rows()), r0)?
    };
    Ok(ReprocsState {
        p_star: p0,
        p_new: BasisMatrix::empty(training.rows()),
        j: 1,
        k: 1,
        buffer: Vec::new(),
        prev_lhat: None,
        t_last: None,
    })
}

impl ReprocsState {
    /// Process one measurement frame at time `t` and run any scheduled
    /// subspace update.
    ///
    /// A failed inner solve does not abort the stream: the frame comes back
    /// flagged, with the best feasible iterate (solver) or the thresholded
    /// solver output (refit) standing in.
    pub fn process_frame(
        &mut self,
        m_t: &[f64],
        t: usize,
        params: &ReprocsParams,
    ) -> Result<FrameEstimate> {
        if let Some(prev) = self.t_last {
            if t <= prev {
                return Err(Error::InvalidConfig(format!(
                    "frame times must increase: got {t} after {prev}"
                )));
            }
        }
        let phi = self.projector()?;
        if m_t.len() != phi.n() {
            return Err(Error::DimensionMismatch(format!(
                "frame length {} vs dimension {}",
                m_t.len(),
                phi.n()
            )));
        }

        let y = phi.apply(m_t);
        let sol = solve_bpdn(&phi, &y, params.xi, &params.bpdn)?;
        let mut converged = sol.converged;
        let t_hat = estimate_support(&sol.x_hat, params.omega);
        let s_hat = match ls_refit(&phi, &y, &t_hat) {
            Ok(s) => s,
            Err(Error::IllConditionedSupport(_)) | Err(Error::InvalidConfig(_)) => {
                converged = false;
                let mut s = vec![0.0; m_t.len()];
                for &i in &t_hat {
                    s[i] = sol.x_hat[i];
                }
                s
            }
            Err(e) => return Err(e),
        };
        let l_hat: Vec<f64> = m_t.iter().zip(&s_hat).map(|(m, s)| m - s).collect();

        // Window bookkeeping and the scheduled update.
        if self.j <= params.t_change.len() {
            let t_j = params.t_change[self.j - 1];
            if t >= t_j && self.k <= params.k_steps {
                if (t - t_j) % params.alpha == 0 {
                    self.buffer.clear();
                }
                let entry = match (params.ar_coefficient, &self.prev_lhat) {
                    (Some(b), Some(prev)) => {
                        l_hat.iter().zip(prev).map(|(cur, pv)| cur - b * pv).collect()
                    }
                    _ => l_hat.clone(),
                };
                self.buffer.push(entry);
                if t + 1 == t_j + self.k * params.alpha {
                    let window = Mat::from_cols(&self.buffer);
                    self.p_new = proj_pca(&window, &self.p_star, params.c)?;
                    self.buffer.clear();
                    let finished = self.k == params.k_steps;
                    self.k += 1;
                    if finished {
                        self.p_star = self.p_star.concat(&self.p_new)?;
                        self.p_new = BasisMatrix::empty(self.p_star.n());
                        self.j += 1;
                        self.k = 1;
                    }
                }
            }
        }

        self.prev_lhat = Some(l_hat.clone());
        self.t_last = Some(t);
        Ok(FrameEstimate {
            s_hat,
            l_hat,
            t_hat,
            y,
            converged,
        })
    }
}
