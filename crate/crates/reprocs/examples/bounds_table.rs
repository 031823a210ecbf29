//! Print the guarantee quantities for the canonical constants: the number
//! of update steps, the residual threshold, the minimum interval length,
//! the per-step decay envelope, the restricted-isometry bounds, and the
//! plug-in checks.

use reprocs::theory_bounds::{
    alpha_add, fact_constants, k_of_zeta, ric_phi_bounds, xi0, zeta_plus_seq, BoundParams,
};

fn main() -> reprocs::Result<()> {
    let params = BoundParams::theorem_defaults();
    let k = k_of_zeta(params.c, params.zeta)?;
    println!("accuracy target zeta = {:e}, c = {}", params.zeta, params.c);
    println!("K(zeta)    = {k}");
    println!(
        "xi0        = {:.6}",
        xi0(params.c, params.r, params.zeta, params.gamma_new)
    );
    println!(
        "alpha_add  = {:.4e}   (n = 200)",
        alpha_add(
            k,
            params.j_changes,
            200,
            params.zeta,
            params.lambda_minus,
            params.gamma_new,
            params.gamma_star
        )
    );

    let seq = zeta_plus_seq(&params, k)?;
    println!("\ndecay sequence (envelope ok: {}):", seq.envelope_ok);
    println!("{:>4} {:>12} {:>12}", "k", "zeta_k+", "0.6^k+0.15cz");
    for (i, z) in seq.values.iter().enumerate() {
        let env = 0.6_f64.powi(i as i32) + 0.15 * params.c_zeta();
        println!("{i:>4} {z:>12.6} {env:>12.6}");
    }

    let ric = ric_phi_bounds(&params, params.zeta_star_plus(), seq.values[1])?;
    println!("\nrestricted-isometry bounds:");
    println!("  delta_2s(phi_0) <= {:.4}", ric.delta2s_phi0_bound);
    println!("  delta_2s(phi_k) <= {:.4}", ric.delta2s_phik_bound);
    println!("  phi             <= {:.4}", ric.phi_bound);

    let fact = fact_constants(
        params.r,
        params.j_changes,
        params.c,
        params.zeta,
        params.gamma_star,
        params.gamma_new,
        params.f,
        k.min(18),
    )?;
    println!("\nplug-in checks (all pass: {}):", fact.all_pass);
    for item in &fact.items {
        println!(
            "  [{}] {:<62} {}",
            item.index,
            item.description,
            if item.pass { "ok" } else { "FAIL" }
        );
    }
    Ok(())
}
