//! Track a changing subspace through a sparse-outlier stream.
//!
//! Generates one synthetic stream with two subspace changes, runs the
//! online recovery loop, and prints how the subspace error falls across
//! the scheduled projection-PCA updates after each change, together with
//! the support-recovery and sparse-error statistics.

use reprocs::linalg::subspace_error;
use reprocs::mat::{norm2, Mat};
use reprocs::signal_model::{gen_model, ModelConfig};
use reprocs::sparse_recovery::BpdnConfig;
use reprocs::subspace_tracking::{init, ReprocsParams};

fn main() -> reprocs::Result<()> {
    let model = ModelConfig {
        n: 200,
        r0: 12,
        c: 2,
        t_change: vec![281, 1781],
        t_train: 40,
        total_t: 3181,
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
        seed: 2024,
    };
    let params = ReprocsParams {
        xi: 0.09,
        omega: 1.0,
        alpha: 120,
        k_steps: 10,
        t_change: model.t_change.clone(),
        r0: model.r0,
        c: model.c,
        bpdn: BpdnConfig::default(),
        ar_coefficient: None,
    };

    let start = std::time::Instant::now();
    let gt = gen_model(&model)?;
    let training = Mat::from_cols(&gt.m_frames[..model.t_train]);
    let mut state = init(&training, model.r0)?;
    println!(
        "initial subspace error: {:.3e}",
        subspace_error(state.p_star(), &gt.bases[0])?
    );

    let mut exact = 0usize;
    let mut frames = 0usize;
    let mut worst_rel = 0.0_f64;
    let mut se_at: Vec<(usize, f64)> = Vec::new();
    for t in (model.t_train + 1)..=model.total_t {
        let est = state.process_frame(&gt.m_frames[t - 1], t, &params)?;
        frames += 1;
        if est.t_hat == gt.supports[t - 1] {
            exact += 1;
        }
        let diff: Vec<f64> = est
            .s_hat
            .iter()
            .zip(&gt.s_frames[t - 1])
            .map(|(a, b)| a - b)
            .collect();
        let rel = norm2(&diff) / norm2(&gt.s_frames[t - 1]);
        worst_rel = worst_rel.max(rel);
        // sample the subspace error at the update boundaries
        for &tj in &model.t_change {
            if t >= tj && (t - tj) % params.alpha == 0 {
                let se = subspace_error(&state.current_basis()?, gt.basis_at(t))?;
                se_at.push((t, se));
            }
        }
    }

    for &tj in &model.t_change {
        println!("change at t = {tj}:");
        for (t, se) in se_at.iter().filter(|(t, _)| {
            *t >= tj && *t <= tj + params.k_steps * params.alpha
        }) {
            println!("  t = {t:>5}  updates done = {:>2}  SE = {se:.3e}", (t - tj) / params.alpha);
        }
    }
    println!(
        "exact support recovery: {exact}/{frames} = {:.2}%",
        100.0 * exact as f64 / frames as f64
    );
    println!("worst normalized sparse error: {worst_rel:.3e}");
    println!("elapsed: {:.1?}", start.elapsed());
    Ok(())
}
