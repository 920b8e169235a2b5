//! One full session on a synthetic clip whose scripted backend first
//! proposes the wrong keyframe, then writes masks, overlays and transcripts.
//!
//! `cargo run --example session -- [OUT_DIR]`

use std::path::PathBuf;
use std::sync::Arc;

use refer_engine::backend::mock::MockBackend;
use refer_engine::config::Config;
use refer_engine::metrics;
use refer_engine::mock_fixtures::{self, FixtureTemplate};
use refer_engine::orchestrator;

fn main() -> anyhow::Result<()> {
    let out = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(|| std::env::temp_dir().join("session"));
    let mut cfg = Config::default();
    cfg.layout.debug_dump = true;
    let fixture = mock_fixtures::generate(FixtureTemplate::KeyframeCorrection, 7, &cfg)?;
    println!("query: {}", fixture.query);

    let backend = Arc::new(MockBackend::new(fixture.scenario.clone())?);
    let mut result = orchestrator::run_session(&fixture.clip, &fixture.query, &cfg, backend)
        .map_err(|f| anyhow::anyhow!("{}", f.error))?;

    for r in &result.log.rounds {
        let sel = r.selection.as_ref().map(|s| format!("{:?} keyframe {}", s.selected, s.keyframe_index));
        let verdict = |c: &Option<refer_engine::reflection::ReflectionChain>| {
            c.as_ref().map(|c| format!("{:?}", c.verdict)).unwrap_or_else(|| "-".into())
        };
        println!(
            "round {}: selection {} existence {} consistency {}",
            r.round,
            sel.unwrap_or_default(),
            verdict(&r.existence),
            verdict(&r.consistency)
        );
    }
    let eval = metrics::evaluate(&result.masklets, &fixture.gt, None)?;
    println!("status {:?}, {} rounds, J {:.3} F {:.3} J&F {:.3}", result.status, result.rounds_used, eval.j, eval.f, eval.jf);

    orchestrator::write_session_outputs(&mut result, &fixture.clip, &out, true)?;
    println!("outputs in {}", out.display());
    Ok(())
}
