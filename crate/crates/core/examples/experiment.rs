//! Runs all three presets into a temporary work directory and prints the
//! headline numbers.
//!
//! ```text
//! cargo run --release --example experiment
//! ```

use splithygiene::experiment::{run_experiment, Preset, RunConfig};

fn main() {
    let dir = std::env::temp_dir().join("splithygiene-example");
    let config = RunConfig {
        workdir: dir.clone(),
        ..RunConfig::default()
    };
    for preset in [Preset::Exp1, Preset::Exp2, Preset::Exp3] {
        let report = run_experiment(preset, &config).expect("preset runs");
        println!("{} ({} rows)", preset.as_str(), report.rows.len());
        for r in report
            .rows
            .iter()
            .filter(|r| r.stat != "stdev" && (r.rng_seed == "1" || r.stat == "mean"))
        {
            let fraction = if r.fraction.is_empty() {
                String::new()
            } else {
                format!(" @{}", r.fraction)
            };
            println!(
                "  {:9} {:22} {:5}{fraction:7} {:>8.3} ({})",
                r.scheme, r.metric, r.split, r.value, r.stat
            );
        }
    }
    println!("outputs under {}", dir.display());
}
