//! The full command-line pipeline driven from code: simulate, fit-csn,
//! infer, predict and diagnose, all under one output directory.
//!
//! ```text
//! cargo run --release --example pipeline [out_dir]
//! ```
//!
//! Each stage writes `manifest.toml`; its `[config]` table can be passed
//! back with `--config` to repeat the stage.

use std::path::PathBuf;

use powerbayes::cli::{self, DiagnoseConfig, FitCsnConfig, InferConfig, PredictConfig, SimulateConfig};

fn main() -> powerbayes::Result<()> {
    let out = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "pipeline-out".into()));

    let sim = cli::cmd_simulate(&SimulateConfig { seed: 7, ..Default::default() }, &out.join("simulate"))?;
    println!("simulate: {} recorded events, true total {}", sim.n_obs, sim.total_true);
    let data = out.join("simulate").join(&sim.dataset);

    let fit = cli::cmd_fit_csn(
        &FitCsnConfig { data: data.clone(), bootstrap: 100, gof: 100, ..Default::default() },
        &out.join("fit"),
    )?;
    for s in &fit.sides {
        println!("fit-csn {}: xmin {} alpha {:.3} p {:?}", s.side, s.xmin_hat, s.alpha_hat, s.p_value);
    }

    let infer = InferConfig {
        data,
        iterations: 110_000,
        burn_in: 10_000,
        thin: 10,
        pilot: 20_000,
        ..Default::default()
    };
    let run = cli::cmd_infer(&infer, &out.join("infer"))?;
    println!("infer: {} draws, acceptance {:.3}", run.chains[0].n_draws, run.chains[0].acceptance_rate);

    let pred = cli::cmd_predict(
        &PredictConfig { run: out.join("infer"), ..Default::default() },
        &out.join("predict"),
    )?;
    for t in &pred.thresholds {
        println!("predict {}: x_{} = {}", t.side, t.level, t.x);
    }

    cli::cmd_diagnose(&DiagnoseConfig { run: out.join("infer") }, &out.join("diagnose"))?;
    println!("outputs under {}", out.display());
    Ok(())
}
