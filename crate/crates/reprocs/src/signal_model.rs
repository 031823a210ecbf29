//! Synthetic generator for the low-rank-plus-sparse measurement stream:
//! a nested subspace schedule with orthogonal additions at known change
//! times, AR(1)-correlated coefficients with bounded innovations, and a
//! cyclically drifting sparse-outlier support.

use std::io::Write;
use std::path::Path;

use rand::prelude::*;
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{orthonormalize, BasisMatrix};
use crate::mat::Mat;

/// Full generative description of a stream.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelConfig {
    /// Ambient dimension.
    pub n: usize,
    /// Initial subspace rank.
    pub r0: usize,
    /// Directions added per change.
    pub c: usize,
    /// Change times, strictly increasing, all beyond `t_train`.
    pub t_change: Vec<usize>,
    /// Outlier-free training prefix length.
    pub t_train: usize,
    /// Stream length.
    pub total_t: usize,
    /// AR coefficient in `[0, 1)`.
    pub b: f64,
    /// Amplitude bound for settled coefficients.
    pub gamma_star: f64,
    /// Initial amplitude for newly added directions.
    pub gamma_new: f64,
    /// Per-interval amplitude growth factor, `> 1`.
    pub v: f64,
    /// Eigenvalue range for settled coefficient variances.
    pub lambda_minus: f64,
    pub lambda_plus: f64,
    /// Outlier sparsity per frame.
    pub s: usize,
    /// Outlier magnitude range.
    pub s_min: f64,
    pub s_max: f64,
    /// Frames between one-index support shifts.
    pub support_dwell: usize,
    /// Frames per step of the new-direction amplitude schedule.
    pub gamma_interval: usize,
    /// RNG seed; the stream is a pure function of the config.
    pub seed: u64,
}

impl ModelConfig {
    pub fn j_changes(&self) -> usize {
        self.t_change.len()
    }

    pub fn r_max(&self) -> usize {
        self.r0 + self.j_changes() * self.c
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::InvalidConfig(msg));
        if self.n == 0 || self.total_t == 0 {
            return fail("n and total_t must be positive".into());
        }
        if self.r_max() > self.n {
            return fail(format!(
                "r0 + J*c = {} exceeds the ambient dimension {}",
                self.r_max(),
                self.n
            ));
        }
        if !(0.0..1.0).contains(&self.b) {
            return fail(format!("b = {} not in [0, 1)", self.b));
        }
        if !(self.lambda_minus > 0.0 && self.lambda_minus <= self.lambda_plus) {
            return fail("need 0 < lambda_minus <= lambda_plus".into());
        }
        if self.s > 0 && !(self.s_min > 0.0 && self.s_min <= self.s_max) {
            return fail("need 0 < s_min <= s_max".into());
        }
        if self.s > self.n {
            return fail(format!("sparsity {} exceeds dimension {}", self.s, self.n));
        }
        if self.v <= 1.0 {
            return fail(format!("v = {} must exceed 1", self.v));
        }
        if self.support_dwell == 0 || self.gamma_interval == 0 {
            return fail("support_dwell and gamma_interval must be positive".into());
        }
        let mut prev = self.t_train;
        for &tj in &self.t_change {
            if tj <= prev {
                return fail(format!(
                    "change times must be strictly increasing and beyond t_train, got {tj}"
                ));
            }
            prev = tj;
        }
        if self.t_train > self.total_t {
            return fail("t_train cannot exceed the stream length".into());
        }
        // Settled innovations are uniform with variance (1-b^2) lambda_d and
        // must respect the (1-b) gamma_star amplitude bound.
        let widest = (3.0 * (1.0 - self.b * self.b) * self.lambda_plus).sqrt();
        if widest > (1.0 - self.b) * self.gamma_star * (1.0 + 1e-12) {
            return fail(format!(
                "gamma_star = {} too small for lambda_plus = {}: need at least {}",
                self.gamma_star,
                self.lambda_plus,
                widest / (1.0 - self.b)
            ));
        }
        Ok(())
    }
}

/// Amplitude schedule for newly added directions during the `k`-th interval
/// after a change: `min(v^(k-1) gamma_new, gamma_star)`.
pub fn gamma_new_k(k: usize, v: f64, gamma_new: f64, gamma_star: f64) -> f64 {
    assert!(k >= 1, "interval index starts at 1");
    assert!(v > 1.0, "growth factor must exceed 1");
    (v.powi(k as i32 - 1) * gamma_new).min(gamma_star)
}

/// Realized stream: bases, coefficients, and per-frame vectors. Frame `t`
/// (1-based) lives at index `t - 1`.
#[derive(Debug, Clone)]
pub struct GroundTruth {
    /// Nested bases `P_0 .. P_J`.
    pub bases: Vec<BasisMatrix>,
    /// Coefficient vectors; `a[t-1]` has the rank current at frame `t`.
    pub a: Vec<Vec<f64>>,
    /// Sparse outlier frames (full-length vectors).
    pub s_frames: Vec<Vec<f64>>,
    /// Outlier supports (sorted index sets).
    pub supports: Vec<Vec<usize>>,
    /// Dense frames `L_t`.
    pub l_frames: Vec<Vec<f64>>,
    /// Observed frames `M_t = L_t + S_t`.
    pub m_frames: Vec<Vec<f64>>,
    config: ModelConfig,
}

impl GroundTruth {
    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    /// Basis in force at frame `t` (1-based).
    pub fn basis_at(&self, t: usize) -> &BasisMatrix {
        let j = self
            .config
            .t_change
            .iter()
            .filter(|&&tj| tj <= t)
            .count();
        &self.bases[j]
    }

    /// Training block `[L_1 .. L_t_train]` as an `n x t_train` matrix.
    pub fn training_block(&self) -> Mat {
        Mat::from_cols(&self.l_frames[..self.config.t_train])
    }

    /// Dump the stream as CSV files (`m.csv`, `l.csv`, `s.csv`,
    /// `supports.csv`) under `dir`. Each row starts with the frame time;
    /// supports list the sorted indices.
    pub fn dump_csv(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::Io {
            path: dir.display().to_string(),
            source: e,
        })?;
        let write_frames = |name: &str, frames: &[Vec<f64>]| -> Result<()> {
            let path = dir.join(name);
            let mut out = Vec::new();
            for (i, f) in frames.iter().enumerate() {
                let mut line = format!("{}", i + 1);
                for v in f {
                    line.push(',');
                    line.push_str(&format!("{v}"));
                }
                line.push('\n');
                out.extend_from_slice(line.as_bytes());
            }
            std::fs::File::create(&path)
                .and_then(|mut fh| fh.write_all(&out))
                .map_err(|e| Error::Io {
                    path: path.display().to_string(),
                    source: e,
                })
        };
        write_frames("m.csv", &self.m_frames)?;
        write_frames("l.csv", &self.l_frames)?;
        write_frames("s.csv", &self.s_frames)?;
        let path = dir.join("supports.csv");
        let mut out = Vec::new();
        for (i, t) in self.supports.iter().enumerate() {
            let mut line = format!("{}", i + 1);
            for idx in t {
                line.push(',');
                line.push_str(&idx.to_string());
            }
            line.push('\n');
            out.extend_from_slice(line.as_bytes());
        }
        std::fs::File::create(&path)
            .and_then(|mut fh| fh.write_all(&out))
            .map_err(|e| Error::Io {
                path: path.display().to_string(),
                source: e,
            })
    }
}

/// Per-direction innovation spread at frame `t`.
///
/// Settled directions draw uniformly with variance `(1 - b^2) lambda_d`
/// where `lambda_d` interpolates linearly between `lambda_plus` and
/// `lambda_minus` across directions. A direction still in its new phase
/// draws with full spread `(1 - b) gamma_new_k`.
struct DirectionPlan {
    /// Birth frame (0 for the initial block, else the change time).
    birth: usize,
    /// Frame at which the direction settles (the next change, or never).
    settle: usize,
    /// Half-width of the settled uniform innovation.
    settled_half_width: f64,
}

fn build_plans(cfg: &ModelConfig) -> Vec<DirectionPlan> {
    let r_max = cfg.r_max();
    let lam = |d: usize| {
        if r_max <= 1 {
            cfg.lambda_plus
        } else {
            cfg.lambda_plus
                + (cfg.lambda_minus - cfg.lambda_plus) * d as f64 / (r_max - 1) as f64
        }
    };
    let mut plans = Vec::with_capacity(r_max);
    for d in 0..r_max {
        let (birth, settle) = if d < cfg.r0 {
            (0, 0)
        } else {
            let j = (d - cfg.r0) / cfg.c; // which change added it
            let birth = cfg.t_change[j];
            let settle = cfg
                .t_change
                .get(j + 1)
                .copied()
                .unwrap_or(usize::MAX);
            (birth, settle)
        };
        plans.push(DirectionPlan {
            birth,
            settle,
            settled_half_width: (3.0 * (1.0 - cfg.b * cfg.b) * lam(d)).sqrt(),
        });
    }
    plans
}

/// Generate a stream. Pure in the config (the seed included): the same
/// config reproduces the same stream bit for bit.
pub fn gen_model(cfg: &ModelConfig) -> Result<GroundTruth> {
    cfg.validate()?;
    let mut rng = ChaCha12Rng::seed_from_u64(cfg.seed);
    let n = cfg.n;

    // Bases: initial block, then per-change orthogonal additions.
    let gaussian = |rng: &mut ChaCha12Rng, rows: usize, cols: usize| {
        Mat::from_fn(rows, cols, |_, _| rng.sample(StandardNormal))
    };
    let p0 = orthonormalize(&gaussian(&mut rng, n, cfg.r0), 1e-10);
    let mut bases = vec![p0];
    for _ in 0..cfg.j_changes() {
        let prev = bases.last().unwrap().clone();
        let raw = gaussian(&mut rng, n, cfg.c);
        let deflated =
            Mat::from_cols(&(0..cfg.c).map(|j| prev.project_out(&raw.col(j))).collect::<Vec<_>>());
        let p_new = orthonormalize(&deflated, 1e-10);
        bases.push(prev.concat(&p_new)?);
    }
    let all_cols: Vec<Vec<f64>> = (0..cfg.r_max())
        .map(|d| bases.last().unwrap().col(d))
        .collect();

    let plans = build_plans(cfg);
    let r_max = cfg.r_max();

    // Innovation half-width for direction d at frame t.
    let half_width = |d: usize, t: usize| -> f64 {
        let plan = &plans[d];
        if t < plan.birth {
            0.0
        } else if plan.birth == 0 || t >= plan.settle {
            plan.settled_half_width
        } else {
            let k = 1 + (t - plan.birth) / cfg.gamma_interval;
            (1.0 - cfg.b) * gamma_new_k(k, cfg.v, cfg.gamma_new, cfg.gamma_star)
        }
    };

    // Approximate stationary start for the initial block.
    let mut coeff = vec![0.0_f64; r_max];
    for _ in 0..200 {
        for (d, plan) in plans.iter().enumerate() {
            if plan.birth == 0 {
                let w = plan.settled_half_width;
                coeff[d] = cfg.b * coeff[d] + rng.gen_range(-w..=w);
            }
        }
    }

    let mut a = Vec::with_capacity(cfg.total_t);
    let mut l_frames = Vec::with_capacity(cfg.total_t);
    let mut s_frames = Vec::with_capacity(cfg.total_t);
    let mut m_frames = Vec::with_capacity(cfg.total_t);
    let mut supports = Vec::with_capacity(cfg.total_t);

    for t in 1..=cfg.total_t {
        let rank = cfg.r0
            + cfg.t_change.iter().filter(|&&tj| tj <= t).count() * cfg.c;
        for d in 0..rank {
            let w = half_width(d, t);
            let innov = if w > 0.0 { rng.gen_range(-w..=w) } else { 0.0 };
            coeff[d] = cfg.b * coeff[d] + innov;
        }
        let at = coeff[..rank].to_vec();
        let mut l = vec![0.0_f64; n];
        for (d, &ad) in at.iter().enumerate() {
            crate::mat::axpy(&mut l, ad, &all_cols[d]);
        }

        let mut s_vec = vec![0.0_f64; n];
        let mut support = Vec::new();
        if cfg.s > 0 && t > cfg.t_train {
            let shift = (t - cfg.t_train) / cfg.support_dwell;
            support = (0..cfg.s).map(|i| (i + shift) % n).collect();
            support.sort_unstable();
            support.dedup();
            for &i in &support {
                let mag = rng.gen_range(cfg.s_min..=cfg.s_max);
                let sign = if rng.gen::<bool>() { 1.0 } else { -1.0 };
                s_vec[i] = sign * mag;
            }
        }
        let m: Vec<f64> = l.iter().zip(&s_vec).map(|(x, y)| x + y).collect();

        a.push(at);
        l_frames.push(l);
        s_frames.push(s_vec);
        m_frames.push(m);
        supports.push(support);
    }

    Ok(GroundTruth {
        bases,
        a,
        s_frames,
        supports,
        l_frames,
        m_frames,
        config: cfg.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::subspace_error;
    use crate::mat::{dot, norm2, norm_inf};

    fn small_config() -> ModelConfig {
        ModelConfig {
            n: 20,
            r0: 3,
            c: 1,
            t_change: vec![60],
            t_train: 20,
            total_t: 120,
            b: 0.5,
            gamma_star: 4.3,
            gamma_new: 0.2,
            v: 1.1,
            lambda_minus: 1.0,
            lambda_plus: 2.0,
            s: 2,
            s_min: 2.0,
            s_max: 3.0,
            support_dwell: 10,
            gamma_interval: 20,
            seed: 7,
        }
    }

    #[test]
    fn gamma_schedule() {
        assert_eq!(gamma_new_k(1, 1.1, 0.7, 5.0), 0.7);
        assert!((gamma_new_k(3, 1.1, 1.0, 1.2) - 1.2).abs() < 1e-12);
        assert!((gamma_new_k(4, 1.2, 1.0, 1e6) - 1.728).abs() < 1e-12);
    }

    #[test]
    fn generated_invariants() {
        let cfg = small_config();
        let gt = gen_model(&cfg).unwrap();
        // orthogonal addition
        let p0 = &gt.bases[0];
        let p1 = &gt.bases[1];
        for jcol in cfg.r0..p1.r() {
            let col = p1.col(jcol);
            for i in 0..p0.r() {
                assert!(dot(&p0.col(i), &col).abs() <= 1e-10);
            }
        }
        for t in 1..=cfg.total_t {
            let idx = t - 1;
            // L = P a exactly
            let pt = gt.basis_at(t);
            let lt = pt.lift(&gt.a[idx]);
            for (x, y) in lt.iter().zip(&gt.l_frames[idx]) {
                assert_eq!(x, y);
            }
            // M = L + S exactly
            for i in 0..cfg.n {
                assert_eq!(gt.m_frames[idx][i], gt.l_frames[idx][i] + gt.s_frames[idx][i]);
            }
            if t > cfg.t_train {
                assert_eq!(gt.supports[idx].len(), cfg.s);
                for &i in &gt.supports[idx] {
                    assert!(gt.s_frames[idx][i].abs() >= cfg.s_min - 1e-12);
                    assert!(gt.s_frames[idx][i].abs() <= cfg.s_max + 1e-12);
                }
            } else {
                assert!(gt.supports[idx].is_empty());
                assert_eq!(norm2(&gt.s_frames[idx]), 0.0);
            }
        }
    }

    #[test]
    fn support_schedule_blocks() {
        let cfg = small_config();
        let gt = gen_model(&cfg).unwrap();
        for t in (cfg.t_train + 1)..=cfg.total_t {
            for tp in (cfg.t_train + 1)..=cfg.total_t {
                let same_block = (t - cfg.t_train) / cfg.support_dwell
                    == (tp - cfg.t_train) / cfg.support_dwell;
                if same_block {
                    assert_eq!(gt.supports[t - 1], gt.supports[tp - 1]);
                }
            }
        }
    }

    #[test]
    fn innovations_bounded() {
        let cfg = small_config();
        let gt = gen_model(&cfg).unwrap();
        let bound = (1.0 - cfg.b) * cfg.gamma_star;
        for t in 2..=cfg.total_t {
            let prev = &gt.a[t - 2];
            let cur = &gt.a[t - 1];
            let nu: Vec<f64> = cur
                .iter()
                .enumerate()
                .map(|(d, &x)| x - cfg.b * prev.get(d).copied().unwrap_or(0.0))
                .collect();
            assert!(norm_inf(&nu) <= bound + 1e-12, "t={t}");
        }
    }

    #[test]
    fn zero_sparsity_means_clean_stream() {
        let mut cfg = small_config();
        cfg.s = 0;
        let gt = gen_model(&cfg).unwrap();
        for t in 0..cfg.total_t {
            assert_eq!(gt.m_frames[t], gt.l_frames[t]);
        }
    }

    #[test]
    fn b_zero_is_white() {
        let mut cfg = small_config();
        cfg.b = 0.0;
        cfg.t_change = vec![];
        cfg.total_t = 10_000;
        cfg.t_train = 10;
        cfg.s = 0;
        let gt = gen_model(&cfg).unwrap();
        for d in 0..cfg.r0 {
            let xs: Vec<f64> = gt.a.iter().map(|a| a[d]).collect();
            let m = xs.iter().sum::<f64>() / xs.len() as f64;
            let var = xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / xs.len() as f64;
            let lag: f64 = xs
                .windows(2)
                .map(|w| (w[0] - m) * (w[1] - m))
                .sum::<f64>()
                / (xs.len() - 1) as f64;
            assert!(
                (lag / var).abs() <= 0.05,
                "lag-1 autocorrelation {} too large",
                lag / var
            );
        }
    }

    #[test]
    fn stationary_covariance_in_range() {
        let mut cfg = small_config();
        cfg.t_change = vec![];
        cfg.total_t = 10_000;
        cfg.t_train = 10;
        cfg.s = 0;
        let gt = gen_model(&cfg).unwrap();
        // diagonal sample variances of a_t within [0.5 lambda-, 2 lambda+]
        for d in 0..cfg.r0 {
            let xs: Vec<f64> = gt.a.iter().map(|a| a[d]).collect();
            let m = xs.iter().sum::<f64>() / xs.len() as f64;
            let var = xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / xs.len() as f64;
            assert!(var >= 0.5 * cfg.lambda_minus && var <= 2.0 * cfg.lambda_plus);
        }
    }

    #[test]
    fn replay_is_bit_exact() {
        let cfg = small_config();
        let g1 = gen_model(&cfg).unwrap();
        let g2 = gen_model(&cfg).unwrap();
        assert_eq!(g1.m_frames, g2.m_frames);
        assert_eq!(g1.supports, g2.supports);
    }

    #[test]
    fn section5_shape_accepted() {
        let cfg = ModelConfig {
            n: 200,
            r0: 12,
            c: 2,
            t_change: vec![281, 1781],
            t_train: 40,
            total_t: 2000,
            b: 0.5,
            gamma_star: 4.3,
            gamma_new: 0.06,
            v: 1.1,
            lambda_minus: 1.0,
            lambda_plus: 2.0,
            s: 7,
            s_min: 2.0,
            s_max: 3.0,
            support_dwell: 50,
            gamma_interval: 120,
            seed: 1,
        };
        let gt = gen_model(&cfg).unwrap();
        assert_eq!(gt.m_frames.len(), 2000);
        assert_eq!(gt.bases[2].r(), 16);
        // training block has the full initial rank
        let q = orthonormalize(&gt.training_block(), 1e-8);
        assert_eq!(q.r(), 12);
        assert!(subspace_error(&q, &gt.bases[0]).unwrap() <= 1e-8);
    }

    #[test]
    fn invalid_configs_rejected() {
        let mut cfg = small_config();
        cfg.t_change = vec![60, 50];
        assert!(gen_model(&cfg).is_err());
        let mut cfg = small_config();
        cfg.b = 1.0;
        assert!(gen_model(&cfg).is_err());
        let mut cfg = small_config();
        cfg.gamma_star = 0.1; // too small for lambda_plus
        assert!(gen_model(&cfg).is_err());
        let mut cfg = small_config();
        cfg.r0 = 30; // r_max > n
        assert!(gen_model(&cfg).is_err());
    }
}
