//! Frequentist tail fit: KS scan for xmin, bootstrap spread and a
//! goodness-of-fit p-value.
//!
//! ```text
//! cargo run --release --example csn_fit [n] [seed]
//! ```

use powerbayes::csn::{bootstrap_uncertainty, estimate_xmin, gof_pvalue};
use powerbayes::distributions::{powerlaw_sample, PowerLawParams};
use powerbayes::inference::diagnostics::{mean, variance};

fn main() -> powerbayes::Result<()> {
    let mut args = std::env::args().skip(1);
    let n: usize = args.next().and_then(|a| a.parse().ok()).unwrap_or(2000);
    let seed: u64 = args.next().and_then(|a| a.parse().ok()).unwrap_or(1);

    let data = powerlaw_sample(PowerLawParams::new(2.5, 1)?, n, seed)?;
    let fit = estimate_xmin(&data, None)?;
    println!(
        "xmin_hat {}  alpha_hat {:.4}  D {:.4}  n_tail {}",
        fit.xmin_hat, fit.alpha_hat, fit.ks_distance, fit.n_tail
    );

    let boot = bootstrap_uncertainty(&data, 200, seed)?;
    let xs: Vec<f64> = boot.successes().map(|f| f.xmin_hat as f64).collect();
    let al: Vec<f64> = boot.successes().map(|f| f.alpha_hat).collect();
    println!(
        "bootstrap (200): xmin {:.2} +/- {:.2}, alpha {:.3} +/- {:.3}, {} failed",
        mean(&xs),
        variance(&xs).sqrt(),
        mean(&al),
        variance(&al).sqrt(),
        boot.failures()
    );

    let p = gof_pvalue(&data, &fit, 200, seed)?;
    println!("goodness of fit p = {p:.3}");
    Ok(())
}
