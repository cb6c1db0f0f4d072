//! Posterior predictive n_true, total severity and the recording threshold.
//!
//! ```text
//! cargo run --release --example predictive [iterations] [seed]
//! ```

use powerbayes::data::{generate_simulation_study, SimulationConfig};
use powerbayes::error_model::ObservationVariant;
use powerbayes::inference::{tune_and_run, BodyKind, McmcConfig, Model, PriorConfig};
use powerbayes::predictive::{predictive_totals, summarize_predictions, x_threshold};

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
    let (_, sample) = tune_and_run(&model, &config, 50_000)?;

    let preds = predictive_totals(&sample.draws, &study.dataset, seed)?;
    for row in summarize_predictions(&preds, 0.95)? {
        let s = row.summary;
        println!(
            "{:>12} {}: mean {:.0}  median {:.0}  95% [{:.0}, {:.0}]",
            row.quantity, row.side, s.mean, s.median, s.lo, s.hi
        );
    }
    println!("truth: n_true {}  total {}", truth.n_true, study.total_true());
    println!("x_0.95 = {}", x_threshold(&sample.draws, truth.side, 0.95)?);
    Ok(())
}
