//! Sampling from the severity and noise distributions.
//!
//! ```text
//! cargo run --release --example distributions
//! ```

use powerbayes::distributions::{powerlaw_sample, DiscreteLogNormal, PowerLawParams, TruncatedPoisson};

fn main() -> powerbayes::Result<()> {
    let draws = powerlaw_sample(PowerLawParams::new(2.2, 1)?, 20_000, 1)?;
    let mut sorted = draws.clone();
    sorted.sort_unstable();
    println!("20000 power-law draws (alpha 2.2)");
    println!("  sum {}  median {}  max {}", draws.iter().sum::<u64>(), sorted[10_000], sorted[19_999]);

    let mut rng = powerbayes::rng::stream(1, 0);
    let ln = DiscreteLogNormal::new(1.0, 1.2)?;
    let xs: Vec<u64> = (0..10).map(|_| ln.sample(&mut rng)).collect();
    println!("discrete log-normal (1.0, 1.2): {xs:?}");

    let tp = TruncatedPoisson::new(3.0)?;
    print!("truncated Poisson(3) pmf:");
    for y in 1..=6 {
        print!(" {:.4}", tp.ln_pmf(y)?.exp());
    }
    println!();
    Ok(())
}
