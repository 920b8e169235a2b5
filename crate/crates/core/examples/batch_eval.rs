//! Generates one fixture per template, evaluates them in parallel and
//! prints the CSV report.
//!
//! `cargo run --example batch_eval -- [OUT_DIR]`

use std::fs;
use std::path::PathBuf;

use refer_engine::batch;
use refer_engine::config::Config;
use refer_engine::mock_fixtures::{self, FixtureTemplate};

fn main() -> anyhow::Result<()> {
    let root = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(|| std::env::temp_dir().join("batch_eval"));
    let cfg = Config::default();
    let mut manifest = String::new();
    for (seed, template) in FixtureTemplate::ALL.into_iter().enumerate() {
        let fixture = mock_fixtures::generate(template, seed as u64, &cfg)?;
        let dir = root.join("fixtures").join(template.as_str());
        let paths = mock_fixtures::write_fixture(&fixture, &dir)?;
        let line = fs::read_to_string(&paths.manifest)?;
        let mut entry: serde_json::Value = serde_json::from_str(line.trim())?;
        for key in ["video", "gt", "mock_scenario"] {
            let rel = format!("fixtures/{}/{}", template.as_str(), entry[key].as_str().unwrap_or_default());
            entry[key] = rel.into();
        }
        manifest.push_str(&format!("{entry}\n"));
    }
    let manifest_path = root.join("manifest.jsonl");
    fs::write(&manifest_path, manifest)?;

    let report = batch::run_batch(&manifest_path, &cfg, &root.join("out"), 4)?;
    print!("{}", report.to_csv());
    println!("\nreports in {}", root.join("out").display());
    Ok(())
}
