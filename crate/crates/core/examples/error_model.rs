//! Missingness, counting noise and heaping applied to a power-law sample,
//! and the observation variants side by side.
//!
//! ```text
//! cargo run --release --example error_model
//! ```

use powerbayes::distributions::{powerlaw_sample, PowerLaw, PowerLawParams};
use powerbayes::error_model::{
    corrupt_dataset, heap_target, marginal_z_given_x_log, observation_normalizer, ObservationModel,
    ObservationVariant,
};

fn main() -> powerbayes::Result<()> {
    let variants = [
        ObservationModel::exponential_linear(0.007, 0.05)?,
        ObservationModel::new(ObservationVariant::ExponentialQuadratic, 0.007, 0.05, 1e-3)?,
        ObservationModel::new(ObservationVariant::Logistic, 0.0, 0.05, 0.0)?,
    ];
    let body = PowerLaw::new(2.2, 1)?;
    println!("{:>24} {:>8} {:>8} {:>8} {:>8}", "variant", "w=1", "w=10", "w=100", "q");
    for m in &variants {
        println!(
            "{:>24} {:8.4} {:8.4} {:8.4} {:8.4}",
            format!("{:?}", m.variant),
            m.probability(1)?,
            m.probability(10)?,
            m.probability(100)?,
            observation_normalizer(&body, m)?
        );
    }

    println!("\nheap targets: {:?}", (1..=13).map(heap_target).collect::<Vec<_>>());
    println!("Pr(z = 10 | x = 9, p = 0.19) = {:.5}", marginal_z_given_x_log(10, 9, 0.19)?.exp());

    let w = powerlaw_sample(PowerLawParams::new(2.2, 1)?, 20_000, 3)?;
    let mut rng = powerbayes::rng::stream(3, 1);
    let c = corrupt_dataset(&w, &variants[0], 0.19, &mut rng)?;
    let heaped = c.records.iter().filter(|r| r.observed != r.noisy_count).count();
    println!(
        "\n20000 events: {} recorded, {heaped} heaped, true total {}, recorded total {}",
        c.records.len(),
        c.total_true,
        c.total_observed
    );
    Ok(())
}
