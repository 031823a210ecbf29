//! Recover a sparse vector from a projected measurement: l1 solve within a
//! residual ball, support thresholding, and the least-squares refit.
//!
//! The projector removes a perfectly flat one-dimensional subspace, the
//! configuration with the smallest possible restricted-isometry constant
//! at this size (delta_2s = 2s/n), so the recovery bound applies.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use reprocs::linalg::{orthonormalize, ric_projector_with_cap};
use reprocs::mat::{norm2, Mat};
use reprocs::sparse_recovery::{
    estimate_support, ls_refit, solve_bpdn, BpdnConfig, ProjectedOperator,
};

fn main() -> reprocs::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let n = 40;
    let s = 3;

    // flat random-sign column: every entry has magnitude 1/sqrt(n)
    let flat = Mat::from_fn(n, 1, |_, _| if rng.gen::<bool>() { 1.0 } else { -1.0 });
    let basis = orthonormalize(&flat, 1e-10);
    let phi = ProjectedOperator::new(basis.clone());
    let delta = ric_projector_with_cap(&basis, 2 * s, 4_000_000)?;
    println!("delta_2s(phi) = {delta:.6} (enumerated over all subsets)");

    // sparse truth and a noisy projected measurement
    let mut x = vec![0.0; n];
    for &i in &[4usize, 17, 31] {
        x[i] = rng.gen_range(2.0..3.0) * if rng.gen::<bool>() { 1.0 } else { -1.0 };
    }
    let xi = 0.1;
    let mut noise: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let nn = norm2(&noise);
    for v in noise.iter_mut() {
        *v *= xi / nn;
    }
    let y: Vec<f64> = phi.apply(&x).iter().zip(&noise).map(|(a, b)| a + b).collect();

    let sol = solve_bpdn(&phi, &y, xi, &BpdnConfig::default())?;
    let err: f64 = sol
        .x_hat
        .iter()
        .zip(&x)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt();
    println!(
        "l1 solve: {} iterations, residual {:.4}, error {err:.4} (bound 7 xi = {:.4})",
        sol.iterations,
        sol.residual_norm,
        7.0 * xi
    );

    let t_hat = estimate_support(&sol.x_hat, 7.0 * xi);
    println!("thresholded support: {t_hat:?} (truth [4, 17, 31])");

    let s_hat = ls_refit(&phi, &y, &t_hat)?;
    let refit_err: f64 = s_hat
        .iter()
        .zip(&x)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt();
    println!("refit error: {refit_err:.4}");
    Ok(())
}
