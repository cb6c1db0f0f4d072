//! Hurwitz zeta values and the power-law normalising constant.
//!
//! ```text
//! cargo run --release --example zeta
//! ```

use powerbayes::distributions::PowerLaw;
use powerbayes::special::{hurwitz_zeta, log_hurwitz_zeta};

fn main() -> powerbayes::Result<()> {
    let pi2_6 = std::f64::consts::PI.powi(2) / 6.0;
    let z = hurwitz_zeta(2.0, 1)?;
    println!("zeta(2, 1)   = {z:.15}  (pi^2/6 = {pi2_6:.15})");
    println!("zeta(3, 2)   = {:.15}", hurwitz_zeta(3.0, 2)?);
    println!("ln zeta(2.2) = {:.15}", log_hurwitz_zeta(2.2, 1)?);

    println!("\n alpha  xmin        zeta");
    for alpha in [1.5, 2.0, 2.5, 3.0] {
        for xmin in [1, 10, 100] {
            println!("{alpha:6.2} {xmin:5} {:12.9e}", hurwitz_zeta(alpha, xmin)?);
        }
    }

    let pl = PowerLaw::new(2.2, 1)?;
    println!("\npower law alpha = 2.2");
    for w in [1, 2, 5, 10, 100, 1000] {
        println!("  pmf({w:4}) = {:.6e}  cdf = {:.6}", pl.pmf(w)?, pl.cdf(w)?);
    }
    Ok(())
}
