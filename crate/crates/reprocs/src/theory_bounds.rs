//! Evaluation of the tracking guarantee quantities: the per-step
//! high-probability envelope recursion for the unestimated fraction of a
//! newly added subspace, restricted-isometry and least-squares conditioning
//! bounds for the projected sparse-recovery matrix, and the closed-form
//! parameter formulas (number of update steps, residual threshold, minimum
//! update-interval length).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Inputs of the bound calculator.
///
/// `f = lambda_plus / lambda_minus` and `g = lambda_new_plus /
/// lambda_new_minus` are the condition-number style ratios of the coefficient
/// covariances; `eta` bounds the squared-amplitude to peak-variance ratio of
/// the innovations. The `kappa_*` and `phi_*` fields are the denseness and
/// conditioning constants the guarantee assumes; their defaults are the
/// canonical values.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BoundParams {
    pub r: usize,
    pub c: usize,
    pub j_changes: usize,
    pub zeta: f64,
    pub b: f64,
    pub f: f64,
    pub g: f64,
    pub eta: f64,
    pub gamma_star: f64,
    pub gamma_new: f64,
    pub v: f64,
    pub lambda_minus: f64,
    pub lambda_plus: f64,
    pub lambda_new_minus: f64,
    pub lambda_new_plus: f64,
    #[serde(default = "default_kappa_2s_star")]
    pub kappa_2s_star_plus: f64,
    #[serde(default = "default_kappa_small")]
    pub kappa_2s_new_plus: f64,
    #[serde(default = "default_kappa_small")]
    pub kappa_s_plus: f64,
    #[serde(default = "default_kappa_small")]
    pub kappa_tilde_2s_plus: f64,
    #[serde(default = "default_phi_plus")]
    pub phi_plus: f64,
    #[serde(default = "default_phi0_plus")]
    pub phi0_plus: f64,
    /// Update-interval length used inside the recursion; `None` means the
    /// infinite-interval limit.
    #[serde(default)]
    pub alpha: Option<u64>,
}

fn default_kappa_2s_star() -> f64 {
    0.3
}
fn default_kappa_small() -> f64 {
    0.15
}
fn default_phi_plus() -> f64 {
    1.1735
}
fn default_phi0_plus() -> f64 {
    1.1111
}

impl BoundParams {
    /// The canonical constants of the main guarantee: `b = 0.4`,
    /// `c zeta = 1e-4`, unit rank/count so the saturated plug-in products
    /// come out at `zeta_* = 1e-4` and `zeta_* f = zeta_* r f = 1.5e-4`.
    pub fn theorem_defaults() -> Self {
        BoundParams {
            r: 1,
            c: 1,
            j_changes: 1,
            zeta: 1e-4,
            b: 0.4,
            f: 1.5,
            g: std::f64::consts::SQRT_2,
            eta: 1.7,
            gamma_star: 1.0,
            gamma_new: 1.0,
            v: 1.2,
            lambda_minus: 1.0,
            lambda_plus: 1.5,
            lambda_new_minus: 1.0,
            lambda_new_plus: std::f64::consts::SQRT_2,
            kappa_2s_star_plus: 0.3,
            kappa_2s_new_plus: 0.15,
            kappa_s_plus: 0.15,
            kappa_tilde_2s_plus: 0.15,
            phi_plus: 1.1735,
            phi0_plus: 1.1111,
            alpha: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.b) {
            return Err(Error::InvalidConfig(format!("b = {} not in [0, 1)", self.b)));
        }
        if self.zeta <= 0.0 {
            return Err(Error::InvalidConfig("zeta must be positive".into()));
        }
        if self.f < 1.0 || self.g < 1.0 {
            return Err(Error::InvalidConfig("f and g must be at least 1".into()));
        }
        if self.eta <= 0.0 {
            return Err(Error::InvalidConfig("eta must be positive".into()));
        }
        for (name, k) in [
            ("kappa_2s_star_plus", self.kappa_2s_star_plus),
            ("kappa_2s_new_plus", self.kappa_2s_new_plus),
            ("kappa_s_plus", self.kappa_s_plus),
            ("kappa_tilde_2s_plus", self.kappa_tilde_2s_plus),
        ] {
            if !(0.0..1.0).contains(&k) || k == 0.0 {
                return Err(Error::InvalidConfig(format!("{name} = {k} not in (0, 1)")));
            }
        }
        Ok(())
    }

    /// `c * zeta`, the accuracy target per new direction.
    pub fn c_zeta(&self) -> f64 {
        self.c as f64 * self.zeta
    }

    /// `zeta_*^+ = r zeta`.
    pub fn zeta_star_plus(&self) -> f64 {
        self.r as f64 * self.zeta
    }

    /// Amplitude/variance ratio from the model quantities (the alternative
    /// to supplying `eta` directly).
    pub fn eta_from_model(&self, k_max: usize) -> f64 {
        let c = self.c as f64;
        let mut best = c * self.gamma_star * self.gamma_star / self.lambda_plus;
        for k in 1..=k_max.max(1) {
            let gnk = gamma_new_k_value(k, self.v, self.gamma_new, self.gamma_star);
            best = best.max(c * gnk * gnk / self.lambda_new_plus);
        }
        best
    }
}

fn gamma_new_k_value(k: usize, v: f64, gamma_new: f64, gamma_star: f64) -> f64 {
    (v.powi(k as i32 - 1) * gamma_new).min(gamma_star)
}

/// Output of the per-step envelope recursion.
#[derive(Debug, Clone, Serialize)]
pub struct ZetaSequence {
    /// `zeta_0^+ .. zeta_K^+`; `zeta_0^+ = 1`.
    pub values: Vec<f64>,
    /// Per-step lower bound on the smallest signal eigenvalue (one entry per
    /// step `k = 1..K`).
    pub b_ak: Vec<f64>,
    /// Per-step upper bound on the orthogonal block.
    pub b_ak_perp: Vec<f64>,
    /// Per-step upper bound on the perturbation norm.
    pub b_h: Vec<f64>,
    /// Whether `zeta_k^+ <= 0.6^k + 0.15 c zeta` held at every computed step.
    pub envelope_ok: bool,
}

/// Number of update steps needed to reach accuracy `zeta` per new
/// direction: the ceiling of `log(0.85 c zeta) / log 0.6`.
pub fn k_of_zeta(c: usize, zeta: f64) -> Result<usize> {
    let arg = 0.85 * c as f64 * zeta;
    if arg <= 0.0 || arg >= 1.0 {
        return Err(Error::BoundDomain(format!(
            "0.85 * c * zeta = {arg} must lie in (0, 1)"
        )));
    }
    let x = arg.ln() / 0.6_f64.ln();
    // Snap to the integer when the quotient is one up to rounding noise, so
    // exact powers of 0.6 do not tip over the ceiling.
    let snapped = if (x - x.round()).abs() < 1e-9 { x.round() } else { x.ceil() };
    Ok(snapped as usize)
}

/// Residual threshold for the projected sparse-recovery step:
/// `sqrt(c) gamma_new + sqrt(zeta) (sqrt(r) + sqrt(c))`.
pub fn xi0(c: usize, r: usize, zeta: f64, gamma_new: f64) -> f64 {
    let (c, r) = (c as f64, r as f64);
    c.sqrt() * gamma_new + zeta.sqrt() * (r.sqrt() + c.sqrt())
}

/// Minimum interval length for which the additive-step guarantee holds.
/// Natural logarithms throughout.
pub fn alpha_add(
    k: usize,
    j: usize,
    n: usize,
    zeta: f64,
    lambda_minus: f64,
    gamma_new: f64,
    gamma_star: f64,
) -> f64 {
    let logs = (61.0 * k as f64 * j as f64).ln() + 11.0 * (n as f64).ln();
    let amp = (1.2_f64.powi(4 * k as i32) * gamma_new.powi(4)).min(gamma_star.powi(4));
    (logs * 8.0 * 192.0 * 192.0 * amp / (zeta * zeta * lambda_minus * lambda_minus)).ceil()
}

/// One step of the envelope recursion, `zeta_prev -> zeta_k`.
///
/// Everything is normalized by the smallest new-direction eigenvalue, with
/// the saturated worst-case products `zsp = zeta_*^+`, `zsf = zeta_*^+ f`,
/// `zsrf = zeta_*^+ r f` supplied by the caller. The term profile keeps the
/// dominant contributions of the published bound expressions (the ones its
/// printed step values derive from); the first step after a change has no
/// carry-over from the previous interval, so its cross-interval terms are
/// dropped and the surviving previous-interval amplitude enters damped by
/// `v^2`.
#[allow(clippy::too_many_arguments)]
fn f_inc(
    zeta_prev: f64,
    phi: f64,
    first_step: bool,
    czeta: f64,
    zsp: f64,
    zsf: f64,
    zsrf: f64,
    kappa: f64,
    b: f64,
    eta: f64,
    g: f64,
    v: f64,
    alpha: Option<u64>,
) -> (f64, f64, f64, f64) {
    let b2 = b * b;
    let big_b = match alpha {
        None => b2 / (1.0 - b2),
        Some(a) => b2 * (1.0 - b.powi(2 * a as i32)) / (1.0 - b2),
    };
    let damp = match alpha {
        None => b2 / (100.0 * (1.0 - b2)),
        Some(a) => (b2 - b.powi(2 * a as i32 + 2)) / (100.0 * (1.0 - b2)),
    };
    let beta = big_b * eta;
    let s = (1.0 - zsp * zsp).sqrt();

    let b_ak = (1.0 - zsp * zsp) * (1.0 - damp) - 2.0 * beta * zsrf;
    let b_ak_perp = zsp * zsf + 2.0 * beta * zsp * zsrf;

    let zk = zeta_prev;
    let quad = phi * phi * (kappa * zk) * (kappa * zk) * g;
    let carry_quad = if first_step {
        0.0
    } else {
        beta * g * (phi * kappa * zk) * (phi * kappa * zk)
    };
    let carry6 = if first_step { beta / (v * v) } else { beta };
    let lin6 = 2.0 * phi * (0.15 * czeta).max(zk) * (kappa * kappa / s) * g * (1.0 + carry6);
    let lin9 = if first_step {
        zk * phi * kappa * g
    } else {
        zk * phi * kappa * g * (1.0 + beta)
    };
    let dust = 4.0 * beta * zsrf * phi * kappa / s + 2.0 * beta * zsrf * zk * kappa * phi * phi;

    let b_h = quad + carry_quad + lin6 + lin9 + dust;
    let num = b_h + 0.125 * czeta;
    let den = b_ak - b_ak_perp - b_h - 0.25 * czeta;
    (num / den, b_ak, b_ak_perp, b_h)
}

/// Run the envelope recursion for `k = 1..=k_steps` starting from
/// `zeta_0^+ = 1`.
///
/// The first step uses the looser conditioning constant `phi0_plus`; later
/// steps use `phi_plus`. Fails if a step's denominator is not positive
/// (the positivity condition of the exponential-decay lemma).
pub fn zeta_plus_seq(p: &BoundParams, k_steps: usize) -> Result<ZetaSequence> {
    p.validate()?;
    let czeta = p.c_zeta();
    let zsp = p.zeta_star_plus();
    let zsf = zsp * p.f;
    let zsrf = zsp * p.r as f64 * p.f;
    let mut values = vec![1.0];
    let mut b_ak = Vec::with_capacity(k_steps);
    let mut b_ak_perp = Vec::with_capacity(k_steps);
    let mut b_h = Vec::with_capacity(k_steps);
    for k in 1..=k_steps {
        let phi = if k == 1 { p.phi0_plus } else { p.phi_plus };
        let (next, ak, akp, h) = f_inc(
            values[k - 1],
            phi,
            k == 1,
            czeta,
            zsp,
            zsf,
            zsrf,
            p.kappa_s_plus,
            p.b,
            p.eta,
            p.g,
            p.v,
            p.alpha,
        );
        let den = ak - akp - h - 0.25 * czeta;
        if den <= 0.0 {
            return Err(Error::BoundDomain(format!(
                "denominator {den:.3e} not positive at step {k}; the decay \
                 condition b_Ak - b_Ak_perp - b_H - 0.25 c zeta lambda^- > 0 fails"
            )));
        }
        b_ak.push(ak);
        b_ak_perp.push(akp);
        b_h.push(h);
        values.push(next);
    }
    let envelope_ok = values
        .iter()
        .enumerate()
        .all(|(k, &z)| z <= 0.6_f64.powi(k as i32) + 0.15 * czeta);
    Ok(ZetaSequence {
        values,
        b_ak,
        b_ak_perp,
        b_h,
        envelope_ok,
    })
}

/// Restricted-isometry and conditioning bounds for the projected
/// sparse-recovery matrix.
#[derive(Debug, Clone, Serialize)]
pub struct RicPhiBounds {
    /// Bound on `delta_2s` right after a change (no new-direction estimate).
    pub delta2s_phi0_bound: f64,
    /// Bound on `delta_2s` once a partial new-direction estimate exists.
    pub delta2s_phik_bound: f64,
    /// Bound on the Gram-inverse norm `1 / (1 - delta)`.
    pub phi_bound: f64,
}

/// Evaluate the restricted-isometry bounds `kappa_{2s,*}^2 + 2 zeta_*`,
/// the same plus `(kappa_{2s,new} + kappa~_{2s} zeta_{k-1} + zeta_*)^2`,
/// and the resulting conditioning bound.
pub fn ric_phi_bounds(
    p: &BoundParams,
    zeta_star_plus: f64,
    zeta_km1_plus: f64,
) -> Result<RicPhiBounds> {
    let d0 = p.kappa_2s_star_plus * p.kappa_2s_star_plus + 2.0 * zeta_star_plus;
    let cross = p.kappa_2s_new_plus + p.kappa_tilde_2s_plus * zeta_km1_plus + zeta_star_plus;
    let dk = d0 + cross * cross;
    if dk >= 1.0 {
        return Err(Error::BoundDomain(format!(
            "RIC bound vacuous: delta_2s bound {dk:.4} is not below 1"
        )));
    }
    Ok(RicPhiBounds {
        delta2s_phi0_bound: d0,
        delta2s_phik_bound: dk,
        phi_bound: 1.0 / (1.0 - dk),
    })
}

/// One evaluated plug-in inequality.
#[derive(Debug, Clone, Serialize)]
pub struct FactItem {
    pub index: usize,
    pub description: String,
    /// Worst left-hand value encountered (over `k` for the step-indexed
    /// items).
    pub lhs: f64,
    /// The bound it must stay below.
    pub bound: f64,
    pub pass: bool,
}

/// The eight plug-in inequalities evaluated.
#[derive(Debug, Clone, Serialize)]
pub struct FactReport {
    pub items: Vec<FactItem>,
    pub all_pass: bool,
}

/// Evaluate the eight plug-in constants used by the guarantee under the
/// accuracy cap `zeta <= min(1e-4 / r^2, 1.5e-4 / (r^2 f), 1 / (r^3
/// gamma_star^2))` with `r = r0 + (J - 1) c`. The step-indexed items (6-8)
/// are checked for `k = 1..=k_max` using the envelope recursion with the
/// canonical constants.
#[allow(clippy::too_many_arguments)]
pub fn fact_constants(
    r0: usize,
    j: usize,
    c: usize,
    zeta: f64,
    gamma_star: f64,
    gamma_new: f64,
    f: f64,
    k_max: usize,
) -> Result<FactReport> {
    let r = (r0 + j.saturating_sub(1) * c) as f64;
    let cap = (1e-4 / (r * r))
        .min(1.5e-4 / (r * r * f))
        .min(1.0 / (r * r * r * gamma_star * gamma_star));
    if zeta > cap {
        return Err(Error::BoundDomain(format!(
            "zeta = {zeta:.3e} violates the accuracy cap {cap:.3e} \
             (min of 1e-4/r^2, 1.5e-4/(r^2 f), 1/(r^3 gamma_star^2))"
        )));
    }
    let czeta = c as f64 * zeta;
    let zsp = r * zeta;
    let sqrt_zeta = zeta.sqrt();

    // Recursion values for the step-indexed items.
    let mut p = BoundParams::theorem_defaults();
    p.zeta = czeta / p.c as f64;
    let seq = zeta_plus_seq(&p, k_max.max(1))?;

    let mut items = Vec::with_capacity(8);
    let mut push = |index: usize, description: &str, lhs: f64, bound: f64| {
        items.push(FactItem {
            index,
            description: description.to_string(),
            lhs,
            bound,
            pass: lhs <= bound + 1e-15,
        });
    };

    push(1, "zeta * gamma_star <= sqrt(zeta)", zeta * gamma_star, sqrt_zeta);
    push(2, "zeta_*^+ <= 1e-4", zsp, 1e-4);
    push(
        3,
        "zeta_*^+ gamma_star^2 <= 1",
        zsp * gamma_star * gamma_star,
        1.0,
    );
    push(
        4,
        "zeta_*^+ gamma_star <= sqrt(zeta)",
        zsp * gamma_star,
        sqrt_zeta,
    );
    push(5, "zeta_*^+ f <= 1.5e-4", zsp * f, 1.5e-4);

    let mut worst6 = (0.0_f64, 0.0_f64); // (lhs - bound) margin tracking
    let mut worst7 = (0.0_f64, 0.0_f64);
    let mut worst8 = (0.0_f64, 0.0_f64);
    let mut init = true;
    for k in 1..=k_max.max(1) {
        let zkm1 = seq.values[k - 1];
        let env = 0.6_f64.powi(k as i32 - 1) + 0.15 * czeta;
        let gnk = gamma_new_k_value(k, 1.2, gamma_new, gamma_star);
        let lhs7 = zkm1 * gnk;
        let bound7 = 0.72_f64.powi(k as i32 - 1) * gamma_new + 0.15 * sqrt_zeta;
        let lhs8 = zkm1 * gnk * gnk;
        let bound8 = 0.864_f64.powi(k as i32 - 1) * gamma_new * gamma_new + 0.15;
        if init || (zkm1 - env) > (worst6.0 - worst6.1) {
            worst6 = (zkm1, env);
        }
        if init || (lhs7 - bound7) > (worst7.0 - worst7.1) {
            worst7 = (lhs7, bound7);
        }
        if init || (lhs8 - bound8) > (worst8.0 - worst8.1) {
            worst8 = (lhs8, bound8);
        }
        init = false;
    }
    push(
        6,
        "zeta_{k-1}^+ <= 0.6^{k-1} + 0.15 c zeta",
        worst6.0,
        worst6.1,
    );
    push(
        7,
        "zeta_{k-1}^+ gamma_new_k <= 0.72^{k-1} gamma_new + 0.15 sqrt(zeta)",
        worst7.0,
        worst7.1,
    );
    push(
        8,
        "zeta_{k-1}^+ gamma_new_k^2 <= 0.864^{k-1} gamma_new^2 + 0.15",
        worst8.0,
        worst8.1,
    );

    let all_pass = items.iter().all(|i| i.pass);
    Ok(FactReport { items, all_pass })
}
