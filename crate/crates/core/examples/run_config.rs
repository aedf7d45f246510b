//! Runs an experiment config and prints its rows.
//!
//! `cargo run --release --example run_config -- configs/e1_rayleigh.json`

use gammalab::experiments::{self, ExperimentConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = std::env::args()
        .nth(1)
        .unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/configs/e1_rayleigh.json").to_string());
    let cfg = ExperimentConfig::load(path.as_ref())?;
    let report = experiments::run(&cfg)?;
    let m = &report.metadata;
    println!("{} {} ({})", m.experiment, m.name, m.theorem);
    for r in &report.rows {
        println!(
            "h = {:>6}  value {:.8e}  reference {:.8e}  rel. error {:.3e}",
            r.h, r.value, r.reference, r.rel_error
        );
    }
    if let Some(rate) = report.fitted_rate {
        println!("fitted rate {rate:.4}");
    }
    for note in &m.notes {
        println!("note: {note}");
    }
    Ok(())
}
