//! Prints the question chains behind an attribute-consistency correction.

use std::sync::Arc;

use refer_engine::backend::mock::MockBackend;
use refer_engine::config::Config;
use refer_engine::mock_fixtures::{self, FixtureTemplate};
use refer_engine::orchestrator;

fn main() -> anyhow::Result<()> {
    let cfg = Config::default();
    let fixture = mock_fixtures::generate(FixtureTemplate::ConsistencyCorrection, 3, &cfg)?;
    println!("query: {}\n", fixture.query);
    let backend = Arc::new(MockBackend::new(fixture.scenario.clone())?);
    let result = orchestrator::run_session(&fixture.clip, &fixture.query, &cfg, backend)
        .map_err(|f| anyhow::anyhow!("{}", f.error))?;

    for r in &result.log.rounds {
        let exprs: Vec<&str> = r.expressions.iter().map(|e| e.expression.as_str()).collect();
        println!("round {} expressions {:?}", r.round, exprs);
    }
    println!();
    for chain in result.log.reflection_log().chains {
        println!("round {} {:?}: {:?}", chain.round, chain.stage, chain.verdict);
        for qa in &chain.entries {
            let mark = if qa.passed { "ok " } else { "BAD" };
            println!("  [{mark}] {} -> {}", qa.question, qa.answer);
        }
        if !chain.feedback.is_empty() {
            println!("  feedback: {}", chain.feedback);
        }
    }
    println!("\nfinal status {:?} after {} rounds", result.status, result.rounds_used);
    Ok(())
}
