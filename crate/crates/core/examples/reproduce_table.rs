//! Run the benign and adversarial lock presets with every default algorithm and
//! print median relative success with the interquartile range.
//!
//! `cargo run --release --example reproduce_table -- [scale]`; output goes
//! under `$OBSRL_OUTPUT_DIR` (default `results`).

use obsrl::harness::{default_output_root, run_preset, ExperimentConfig, Preset};

fn main() -> obsrl::Result<()> {
    let scale: f64 = match std::env::args().nth(1) {
        Some(s) => s.parse().map_err(|_| obsrl::Error::Config(format!("bad scale {s:?}")))?,
        None => 1.0,
    };
    let root = default_output_root();
    println!("{:<18} {:<28} {:<28} {:<28}", "preset", "foobar", "forward only", "psdp-reset");
    for preset in [Preset::LockBenign, Preset::LockAdversarial] {
        let mut config = ExperimentConfig::new(preset);
        config.scale = scale;
        let report = run_preset(&config, &root)?;
        let cell = |phase: &str, metric: &str| {
            report
                .summary
                .iter()
                .find(|r| r.phase == phase && r.step == 0 && r.metric == metric)
                .map(|r| format!("{:.3} ({:.3}, {:.3})", r.median, r.q25, r.q75))
                .unwrap_or_else(|| "-".into())
        };
        println!(
            "{:<18} {:<28} {:<28} {:<28}",
            preset.name(),
            cell("foobar", "relative_success"),
            cell("foobar", "forward_relative_success"),
            cell("psdp-reset", "relative_success")
        );
        println!("  summary {}", report.dir.join("summary.csv").display());
    }
    Ok(())
}
