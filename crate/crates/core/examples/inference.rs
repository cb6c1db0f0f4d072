//! Bayesian fit of the simulation study: pilot tuning, then the main chain.
//!
//! ```text
//! cargo run --release --example inference [iterations] [seed]
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
    let model = Model::from_dataset(
        &study.dataset,
        BodyKind::PowerLaw,
        ObservationVariant::ExponentialLinear,
        PriorConfig::default(),
    )?;
    let config = McmcConfig {
        iterations,
        burn_in: iterations / 11,
        thin: (iterations / 11_000).max(1),
        seed,
        ..Default::default()
    };
    let (tune, sample) = tune_and_run(&model, &config, 50_000)?;
    println!(
        "pilot acceptance {:.3}, main acceptance {:.3}, {} draws",
        tune.pilot_acceptance,
        sample.acceptance_rate,
        sample.draws.len()
    );
    let truths = [truth.alpha, truth.lambda, truth.mu, truth.p];
    for ((j, name), t) in sample.names.iter().enumerate().zip(truths) {
        let s = summarize(&sample.column(name).unwrap(), 0.95)?;
        println!(
            "{name:>9}: mean {:.5}  95% [{:.5}, {:.5}]  true {t}  covered {}  ess {:.0}",
            s.mean,
            s.lo,
            s.hi,
            s.contains(t),
            sample.ess[j].unwrap_or(f64::NAN)
        );
    }
    Ok(())
}
