#![allow(dead_code)]

use std::sync::Arc;

use refer_engine::backend::mock::{MockBackend, MockCall, MockEntry, MockScenario};
use refer_engine::backend::protocol::AgentRole;
use refer_engine::config::Config;
use refer_engine::metrics::{self, EvalResult};
use refer_engine::mock_fixtures::{self, Fixture, FixtureTemplate};
use refer_engine::orchestrator::{self, SessionResult};

/// Defaults with small canvas cells and no retry back-off.
pub fn test_config() -> Config {
    let mut c = Config::default();
    c.layout.cell_w = 64;
    c.layout.cell_h = 64;
    c.backends.retry_backoff_ms = 0;
    c
}

pub fn fixture(template: FixtureTemplate, seed: u64) -> Fixture {
    mock_fixtures::generate(template, seed, &test_config()).expect("fixture generates")
}

pub fn run_with(fixture: &Fixture, scenario: MockScenario, cfg: &Config) -> (SessionResult, Arc<MockBackend>) {
    let mock = Arc::new(MockBackend::new(scenario).expect("valid scenario"));
    let result = orchestrator::run_session(&fixture.clip, &fixture.query, cfg, mock.clone())
        .unwrap_or_else(|f| panic!("session failed: {}", f.error));
    (result, mock)
}

pub fn run(fixture: &Fixture, cfg: &Config) -> (SessionResult, Arc<MockBackend>) {
    run_with(fixture, fixture.scenario.clone(), cfg)
}

pub fn score(fixture: &Fixture, result: &SessionResult) -> EvalResult {
    metrics::evaluate(&result.masklets, &fixture.gt, None).expect("evaluation")
}

pub fn calls_with(calls: &[MockCall], role: AgentRole, round: u32) -> Vec<&MockCall> {
    calls.iter().filter(|c| c.role == role && c.round == round).collect()
}

pub fn segment_calls(calls: &[MockCall]) -> usize {
    calls.iter().filter(|c| c.tag == "segment").count()
}

/// Replaces any entry with the same key, then appends `entry`.
pub fn override_entry(mut scenario: MockScenario, entry: MockEntry) -> MockScenario {
    scenario.entries.retain(|e| e.key != entry.key);
    scenario.with_entry(entry)
}
