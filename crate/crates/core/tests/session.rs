mod common;

use serde_json::json;

use refer_engine::backend::mock::{MatchKey, MockEntry};
use refer_engine::backend::protocol::{AgentRole, ResponseTag};
use refer_engine::mock_fixtures::FixtureTemplate;
use refer_engine::orchestrator::{self, SessionStatus, REFLECTION_LOG_FILE, SESSION_LOG_FILE};
use refer_engine::reflection::ReflectionLog;
use refer_engine::Error;

use common::*;

#[test]
fn multi_target_query_yields_one_masklet_per_target() {
    let f = fixture(FixtureTemplate::MultiTarget, 4);
    let (r, _) = run(&f, &test_config());
    assert!(r.accepted);
    assert_eq!(r.masklets.len(), 2);
    let e = score(&f, &r);
    assert_eq!(e.jf, 1.0);
    assert!(e.per_target.iter().all(|t| t.pred_target_id.is_some()));
}

#[test]
fn empty_intent_triggers_another_round_on_the_same_frames() {
    let f = fixture(FixtureTemplate::SingleTarget, 0);
    let s = override_entry(f.scenario.clone(), MockEntry::reply(
        MatchKey::chat(ResponseTag::Expressions).role(AgentRole::IntentAnalyst).round(1),
        json!({"expressions": ["  "]}),
    ));
    let (r, mock) = run_with(&f, s, &test_config());
    assert_eq!(r.rounds_used, 2);
    assert!(r.accepted);
    assert!(r.log.rounds[0].notes.iter().any(|n| n.contains("no target expressions")));
    assert!(r.log.rounds[1].selection_reused);
    let calls = mock.calls();
    let fb = r.log.rounds[1].consistency_feedback_in.clone().unwrap();
    assert!(calls_with(&calls, AgentRole::IntentAnalyst, 2)[0].user_text.contains(&fb));
    assert!(calls_with(&calls, AgentRole::Grounder, 1).is_empty());
}

#[test]
fn persistent_empty_intent_returns_empty_result_without_segmenting() {
    let f = fixture(FixtureTemplate::SingleTarget, 0);
    let s = override_entry(f.scenario.clone(), MockEntry::reply(
        MatchKey::chat(ResponseTag::Expressions).role(AgentRole::IntentAnalyst).round(1),
        json!({"expressions": []}),
    ));
    let mut cfg = test_config();
    cfg.reflection.max_turn = 1;
    let (r, mock) = run_with(&f, s, &cfg);
    assert_eq!(r.rounds_used, 1);
    assert!(r.masklets.is_empty());
    assert!(!r.accepted);
    assert_eq!(segment_calls(&mock.calls()), 0);
}

#[test]
fn degenerate_boxes_drop_targets_and_retry() {
    let f = fixture(FixtureTemplate::SingleTarget, 3);
    let s = override_entry(f.scenario.clone(), MockEntry::reply(
        MatchKey::chat(ResponseTag::Box).role(AgentRole::Grounder).target(0).round(1),
        json!({"box": [0.5, 0.5, 0.5, 0.5]}),
    ));
    let (r, _) = run_with(&f, s, &test_config());
    assert_eq!(r.rounds_used, 2);
    let g1 = r.log.rounds[0].grounding.as_ref().unwrap();
    assert!(g1.targets.is_empty());
    assert_eq!(g1.failures.len(), 1);
    assert_eq!(score(&f, &r).jf, 1.0);
}

#[test]
fn transport_failures_are_absorbed_by_retries() {
    let f = fixture(FixtureTemplate::SingleTarget, 1);
    let mut s = f.scenario.clone();
    for e in &mut s.entries {
        if e.key.tag == "similarity" {
            e.transport_failures = 2;
        }
    }
    let (r, _) = run_with(&f, s, &test_config());
    assert!(r.accepted);
    let ex = r.log.exchanges.iter().find(|e| e.role == AgentRole::FrameSimilarity).unwrap();
    assert_eq!(ex.retries, 2);
}

#[test]
fn unparseable_reply_aborts_with_partial_transcript() {
    let f = fixture(FixtureTemplate::SingleTarget, 1);
    let s = override_entry(f.scenario.clone(), MockEntry::reply(
        MatchKey::chat(ResponseTag::Questions).role(AgentRole::ExistenceQuestioner).round(1),
        "I would rather not answer",
    ));
    let mock = std::sync::Arc::new(refer_engine::backend::mock::MockBackend::new(s).unwrap());
    let failure = orchestrator::run_session(&f.clip, &f.query, &test_config(), mock).unwrap_err();
    match &failure.error {
        Error::BackendParse { raw, attempts, .. } => {
            assert_eq!(raw, "I would rather not answer");
            assert_eq!(*attempts, 3);
        }
        other => panic!("unexpected {other}"),
    }
    assert_eq!(failure.log.rounds.len(), 1);
    assert!(!failure.log.rounds[0].expressions.is_empty());
    assert!(failure.log.exchanges.iter().any(|e| !e.ok));
}

#[test]
fn attributes_are_decomposed_once_per_session() {
    let f = fixture(FixtureTemplate::ConsistencyCorrection, 2);
    let (r, mock) = run(&f, &test_config());
    assert_eq!(r.rounds_used, 2);
    let n = mock.calls().iter().filter(|c| c.role == AgentRole::AttributeDecomposer).count();
    assert_eq!(n, 1);
}

#[test]
fn expression_revisions_track_rewrites() {
    let f = fixture(FixtureTemplate::ConsistencyCorrection, 0);
    let (r, _) = run(&f, &test_config());
    assert_eq!(r.log.rounds[0].expressions[0].revision, 0);
    assert_eq!(r.log.rounds[1].expressions[0].revision, 1);
}

#[test]
fn sessions_are_deterministic() {
    let f = fixture(FixtureTemplate::KeyframeCorrection, 5);
    let (a, _) = run(&f, &test_config());
    let (b, _) = run(&f, &test_config());
    assert_eq!(serde_json::to_string(&a.log).unwrap(), serde_json::to_string(&b.log).unwrap());
    assert_eq!(a.masklets, b.masklets);
}

#[test]
fn outputs_and_reflection_log_round_trip() {
    let f = fixture(FixtureTemplate::KeyframeCorrection, 0);
    let (mut r, _) = run(&f, &test_config());
    let dir = tempfile::tempdir().unwrap();
    orchestrator::write_session_outputs(&mut r, &f.clip, dir.path(), true).unwrap();
    assert_eq!(r.transcript_path.as_deref(), Some(dir.path().join(SESSION_LOG_FILE).as_path()));
    let log: ReflectionLog =
        serde_json::from_slice(&std::fs::read(dir.path().join(REFLECTION_LOG_FILE)).unwrap()).unwrap();
    assert_eq!(log.schema, "reflection-log/1");
    // round 1: existence only; round 2: existence and consistency
    assert_eq!(log.chains.len(), 3);
    assert!(!log.chains[0].passed());
    let back: orchestrator::SessionLog =
        serde_json::from_slice(&std::fs::read(dir.path().join(SESSION_LOG_FILE)).unwrap()).unwrap();
    assert_eq!(back.status, SessionStatus::Accepted);
    assert_eq!(back.rounds.len(), 2);
    let rle = refer_engine::video_io::read_rle_json(&dir.path().join("rle/masklets.json")).unwrap();
    assert_eq!(rle, r.masklets);
    assert_eq!(std::fs::read_dir(dir.path().join("overlays")).unwrap().count(), f.clip.len());
}
