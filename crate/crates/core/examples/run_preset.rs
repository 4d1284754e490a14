//! Drive the experiment runner from a JSON config, as the command-line tool does.
//!
//! cargo run --release --example run_preset -- [preset] [out-dir]

use nvnmr::experiment::{run_experiment, validate_config, ExperimentConfig};

fn main() -> nvnmr::Result<()> {
    let mut args = std::env::args().skip(1);
    let preset = args.next().unwrap_or_else(|| "fig4_amplification".into());
    let out = args.next().unwrap_or_else(|| std::env::temp_dir().join("nvnmr-run").display().to_string());
    let cfg = ExperimentConfig::from_json(&format!(
        r#"{{ "preset": "{preset}", "seed": 11, "output": {{ "dir": {out:?} }} }}"#
    ))?;
    let report = validate_config(&cfg);
    println!("warnings: {:?}", report.warnings);
    let bundle = run_experiment(&cfg)?;
    for f in &bundle.files {
        println!("wrote {}", f.display());
    }
    println!("{}", serde_json::to_string_pretty(&bundle.summary.results)?);
    Ok(())
}
