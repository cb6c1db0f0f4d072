//! Generate a synthetic dataset with known parameters and write it out.
//!
//! ```text
//! cargo run --release --example simulation_study [seed] [out_dir]
//! ```

use powerbayes::data::{self, generate_simulation_study, SimulationConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let seed: u64 = args.next().and_then(|a| a.parse().ok()).unwrap_or(1);
    let config = SimulationConfig::default();
    let mut rng = powerbayes::rng::stream(seed, 0);
    let study = generate_simulation_study(&config, &mut rng)?;

    let side = config.side;
    println!("{config:?}");
    println!(
        "n_obs {}  true total {}  recorded total {}",
        study.dataset.n_obs(side),
        study.total_true(),
        study.total_observed()
    );
    let table = data::frequency_table(&study.dataset, 10);
    println!("recorded counts 1..=10: {:?}", table.side(side));

    if let Some(dir) = args.next() {
        let dir = std::path::Path::new(&dir);
        std::fs::create_dir_all(dir)?;
        data::save_csv(&study.dataset, dir.join("data.csv"))?;
        let f = std::fs::File::create(dir.join("ground_truth.csv"))?;
        data::write_ground_truth(&study.ground_truth, f)?;
        println!("wrote {}", dir.display());
    }
    Ok(())
}
