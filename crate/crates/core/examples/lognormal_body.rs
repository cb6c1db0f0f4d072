//! Refit the simulation study with a discrete log-normal body and compare
//! the heaping estimate with the power-law fit.
//!
//! ```text
//! cargo run --release --example lognormal_body [iterations] [seed]
//! ```

use powerbayes::data::{generate_simulation_study, SimulationConfig};
use powerbayes::error_model::ObservationVariant;
use powerbayes::inference::{summarize, tune_and_run, BodyKind, McmcConfig, Model, PriorConfig};

fn main() -> powerbayes::Result<()> {
    let mut args = std::env::args().skip(1);
    let iterations: usize = args.next().and_then(|a| a.parse().ok()).unwrap_or(200_000);
    let seed: u64 = args.next().and_then(|a| a.parse().ok()).unwrap_or(1);

    let truth = SimulationConfig::default();
    let study = generate_simulation_study(&truth, &mut powerbayes::rng::stream(seed, 0))?;
    let p_name = format!("p_{}", truth.side.tag());
    for body in [BodyKind::PowerLaw, BodyKind::LogNormal] {
        let model = Model::from_dataset(&study.dataset, body, ObservationVariant::ExponentialLinear, PriorConfig::default())?;
        let config = McmcConfig {
            iterations,
            burn_in: iterations / 11,
            thin: (iterations / 11_000).max(1),
            seed,
            ..Default::default()
        };
        let (_, sample) = tune_and_run(&model, &config, 50_000)?;
        println!("{body:?} (acceptance {:.3})", sample.acceptance_rate);
        for name in &sample.names {
            let s = summarize(&sample.column(name).unwrap(), 0.95)?;
            let mark = if *name == p_name { "  <-" } else { "" };
            println!("  {name:>9}: {:.4} [{:.4}, {:.4}]{mark}", s.mean, s.lo, s.hi);
        }
    }
    Ok(())
}
