//! Thin command-line front end: `run` drives a Monte-Carlo experiment from
//! a JSON config, `bounds` prints the guarantee quantities for a parameter
//! file, `gen` dumps a synthetic stream for replay.
//!
//! Exit codes: 0 on success, 1 on a configuration error, 2 on a runtime
//! failure.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use reprocs::error::Error;
use reprocs::metrics_io::{run_experiment, write_records, ExperimentConfig, OutputFormat};
use reprocs::signal_model::{gen_model, ModelConfig};
use reprocs::theory_bounds::{
    alpha_add, fact_constants, k_of_zeta, ric_phi_bounds, xi0, zeta_plus_seq, BoundParams,
};

#[derive(Parser)]
#[command(name = "reprocs", about = "Online robust PCA: experiments, bounds, stream generation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum CliFormat {
    Csv,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum BoundsFormat {
    Text,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Run a Monte-Carlo experiment described by a JSON config.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Override the trial count.
        #[arg(long)]
        trials: Option<usize>,
        /// Override the base seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Override the output format.
        #[arg(long, value_enum)]
        format: Option<CliFormat>,
        /// Override the output path.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evaluate the guarantee quantities for a parameter file.
    Bounds {
        #[arg(long)]
        params: PathBuf,
        /// Steps of the decay sequence to print (default: the derived K).
        #[arg(long)]
        k: Option<usize>,
        /// Ambient dimension used by the interval-length formula.
        #[arg(long, default_value_t = 200)]
        n: usize,
        #[arg(long, value_enum, default_value = "text")]
        format: BoundsFormat,
    },
    /// Generate a stream and dump it as CSV files for replay.
    Gen {
        #[arg(long)]
        config: PathBuf,
        /// Output directory for m.csv / l.csv / s.csv / supports.csv.
        #[arg(long)]
        out: PathBuf,
    },
}

fn load_json<T: serde::de::DeserializeOwned>(path: &PathBuf) -> Result<T, Error> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.display().to_string(),
        source: e,
    })?;
    Ok(serde_json::from_str(&text)?)
}

fn cmd_run(
    config: PathBuf,
    trials: Option<usize>,
    seed: Option<u64>,
    format: Option<CliFormat>,
    out: Option<PathBuf>,
) -> Result<(), (u8, Error)> {
    let mut cfg: ExperimentConfig = load_json(&config).map_err(|e| (1, e))?;
    if let Some(t) = trials {
        cfg.trials = t;
    }
    if let Some(s) = seed {
        cfg.model.seed = s;
    }
    if let Some(f) = format {
        cfg.output_format = match f {
            CliFormat::Csv => OutputFormat::Csv,
            CliFormat::Json => OutputFormat::Json,
        };
    }
    if let Some(o) = out {
        cfg.output_path = Some(o.display().to_string());
    }
    cfg.validate().map_err(|e| (1, e))?;
    let params = cfg.resolve_params().map_err(|e| (1, e))?;
    for warning in params.validate().map_err(|e| (1, e))? {
        eprintln!("warning: {warning}");
    }

    let result = run_experiment(&cfg).map_err(|e| (2, e))?;
    eprintln!(
        "{} trials, {} frames, {} failures",
        cfg.trials, result.aggregate.frames, result.failures
    );
    eprintln!(
        "mean normalized sparse error {:.6}, mean subspace error {:.6}, exact-support rate {:.4}",
        result.aggregate.mean_s_err_rel, result.aggregate.mean_se, result.aggregate.support_exact_rate
    );
    for cp in &result.pcp {
        eprintln!(
            "pcp checkpoint trial {} t {}: sparse rel err {:.6}, dense rel err {:.6}",
            cp.trial, cp.t, cp.s_err_rel, cp.l_err_rel
        );
    }
    match &cfg.output_path {
        Some(path) => {
            write_records(&result, std::path::Path::new(path), cfg.output_format)
                .map_err(|e| (2, e))?;
            eprintln!("records written to {path}");
        }
        None => {
            // no sink named: records go to stdout in the chosen format
            match cfg.output_format {
                OutputFormat::Csv => print!("{}", reprocs::metrics_io::records_to_csv(&result)),
                OutputFormat::Json => {
                    println!("{}", serde_json::to_string_pretty(&result).map_err(|e| (2, e.into()))?)
                }
            }
        }
    }
    Ok(())
}

fn cmd_bounds(
    params_path: PathBuf,
    k: Option<usize>,
    n: usize,
    format: BoundsFormat,
) -> Result<(), (u8, Error)> {
    let params: BoundParams = load_json(&params_path).map_err(|e| (1, e))?;
    params.validate().map_err(|e| (1, e))?;

    let k_steps = match k {
        Some(k) => k,
        None => k_of_zeta(params.c, params.zeta).map_err(|e| (1, e))?,
    };
    let xi = xi0(params.c, params.r, params.zeta, params.gamma_new);
    let alpha = alpha_add(
        k_steps,
        params.j_changes.max(1),
        n,
        params.zeta,
        params.lambda_minus,
        params.gamma_new,
        params.gamma_star,
    );
    let seq = zeta_plus_seq(&params, k_steps).map_err(|e| (2, e))?;
    let ric = ric_phi_bounds(&params, params.zeta_star_plus(), seq.values[1.min(seq.values.len() - 1)])
        .map_err(|e| (2, e))?;
    let fact = fact_constants(
        params.r,
        params.j_changes.max(1),
        params.c,
        params.zeta,
        params.gamma_star,
        params.gamma_new,
        params.f,
        k_steps.min(18),
    );

    match format {
        BoundsFormat::Json => {
            let fact_json = match &fact {
                Ok(rep) => serde_json::to_value(rep).map_err(|e| (2, e.into()))?,
                Err(e) => serde_json::json!({ "error": e.to_string() }),
            };
            let doc = serde_json::json!({
                "k": k_steps,
                "xi0": xi,
                "alpha_add": alpha,
                "zeta_seq": seq,
                "ric_phi": ric,
                "fact_checks": fact_json,
            });
            println!("{}", serde_json::to_string_pretty(&doc).map_err(|e| (2, e.into()))?);
        }
        BoundsFormat::Text => {
            println!("K          = {k_steps}");
            println!("xi0        = {xi:.6}");
            println!("alpha_add  = {alpha:.4e}");
            println!(
                "ric bounds: delta(phi_0) = {:.4}  delta(phi_k) = {:.4}  phi = {:.4}",
                ric.delta2s_phi0_bound, ric.delta2s_phik_bound, ric.phi_bound
            );
            println!("zeta_k+ sequence (envelope ok: {}):", seq.envelope_ok);
            for (i, z) in seq.values.iter().enumerate() {
                println!("  k = {i:>3}   zeta_k+ = {z:.6}");
            }
            match &fact {
                Ok(rep) => {
                    println!("plug-in checks (all pass: {}):", rep.all_pass);
                    for item in &rep.items {
                        println!(
                            "  [{}] {:<62} lhs = {:.6e}  bound = {:.6e}  {}",
                            item.index,
                            item.description,
                            item.lhs,
                            item.bound,
                            if item.pass { "ok" } else { "FAIL" }
                        );
                    }
                }
                Err(e) => println!("plug-in checks unavailable: {e}"),
            }
        }
    }
    Ok(())
}

fn cmd_gen(config: PathBuf, out: PathBuf) -> Result<(), (u8, Error)> {
    let cfg: ModelConfig = load_json(&config).map_err(|e| (1, e))?;
    cfg.validate().map_err(|e| (1, e))?;
    let gt = gen_model(&cfg).map_err(|e| (2, e))?;
    gt.dump_csv(&out).map_err(|e| (2, e))?;
    eprintln!(
        "wrote {} frames (dimension {}) to {}",
        cfg.total_t,
        cfg.n,
        out.display()
    );
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Run {
            config,
            trials,
            seed,
            format,
            out,
        } => cmd_run(config, trials, seed, format, out),
        Command::Bounds { params, k, n, format } => cmd_bounds(params, k, n, format),
        Command::Gen { config, out } => cmd_gen(config, out),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err((code, e)) => {
            eprintln!("error: {e}");
            ExitCode::from(code)
        }
    }
}
