//! Acceptance suite: one PASS/FAIL line per criterion, each under a pinned
//! wall-clock limit.

mod common;

use std::collections::HashSet;
use std::time::{Duration, Instant};

use image::{Rgb, RgbImage};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use refer_engine::backend::mock::{MatchKey, MockEntry, MockScenario};
use refer_engine::backend::protocol::AgentRole;
use refer_engine::backend::{BackendClient, RetryPolicy};
use refer_engine::config::{Config, LayoutMode, MergeMode};
use refer_engine::focus_layout;
use refer_engine::frame_selection::{self, FrameScore};
use refer_engine::metrics;
use refer_engine::mock_fixtures::{Fixture, FixtureTemplate};
use refer_engine::orchestrator::SessionStatus;
use refer_engine::prompts::PromptSet;
use refer_engine::reflection;
use refer_engine::video_io::{Mask, Masklet, VideoClip};
use refer_engine::StageContext;

use common::*;

type Check = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

const ALPHA: f64 = 0.3;
const BETA: f64 = 0.7;

fn fusion_exactness() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..10_000 {
        let (c, m): (f64, f64) = (rng.random(), rng.random());
        let got = frame_selection::fuse(ALPHA, BETA, c, m);
        let want = 0.3 * c + 0.7 * m;
        ensure(got.to_bits() == want.to_bits(), || format!("fuse({c}, {m}) = {got}, expected {want}"))?;
    }
    for trial in 0..500 {
        let n = rng.random_range(1..=20);
        let k = rng.random_range(1..=n);
        let cands: Vec<FrameScore> = (0..n)
            .map(|i| {
                // coarse grid to force ties
                let c = rng.random_range(0..5) as f64 / 4.0;
                let m = rng.random_range(0..5) as f64 / 4.0;
                FrameScore {
                    frame_index: i * 3,
                    raw_clip: c,
                    s_clip: c,
                    s_mllm: m,
                    s_fused: 0.0,
                }
            })
            .collect();
        let sel = frame_selection::fuse_and_pick(&cands, k, ALPHA, BETA, 1).map_err(|e| e.to_string())?;
        let mut oracle: Vec<(f64, usize)> = cands.iter().map(|c| (0.3 * c.s_clip + 0.7 * c.s_mllm, c.frame_index)).collect();
        oracle.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap().then(a.1.cmp(&b.1)));
        let mut top: Vec<usize> = oracle.iter().take(k).map(|x| x.1).collect();
        top.sort_unstable();
        ensure(sel.selected == top, || format!("trial {trial}: selected {:?}, oracle {top:?}", sel.selected))?;
        ensure(sel.keyframe_index == oracle[0].1, || {
            format!("trial {trial}: keyframe {}, oracle {}", sel.keyframe_index, oracle[0].1)
        })?;
    }
    Ok("10000 pairs bit-exact, 500 rankings match".into())
}

fn oracle_segments(t: usize, n: usize) -> Vec<(usize, usize)> {
    let m = n.min(t);
    let mut out = Vec::new();
    let mut start = 0;
    for i in 0..m {
        let len = t / m + usize::from(i < t % m);
        out.push((start, start + len));
        start += len;
    }
    out
}

fn coarse_selection() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let n = 10;
    for trial in 0..400 {
        let t = rng.random_range(1..=200);
        let sims: Vec<f64> = (0..t).map(|_| rng.random_range(0..8) as f64 / 8.0).collect();
        let picks = frame_selection::coarse_pick(&sims, n);
        let segs = oracle_segments(t, n);
        ensure(picks.len() == segs.len(), || format!("trial {trial}: {} picks for {} segments", picks.len(), segs.len()))?;
        for (&p, &(a, b)) in picks.iter().zip(&segs) {
            let mut best = a;
            for i in a..b {
                if sims[i] > sims[best] {
                    best = i;
                }
            }
            ensure(p == best, || format!("trial {trial}: segment {a}..{b} picked {p}, oracle {best}"))?;
        }
    }
    // same property through the backend path with scripted per-frame similarities
    let prompts = PromptSet::builtin();
    for trial in 0..12 {
        let t = rng.random_range(1..=200);
        let frames: Vec<RgbImage> = (0..t)
            .map(|i| RgbImage::from_pixel(4, 4, Rgb([(i % 256) as u8, (i / 256) as u8, 7])))
            .collect();
        let clip = VideoClip::new(frames, "coarse").map_err(|e| e.to_string())?;
        let sims: Vec<f64> = (0..t).map(|_| rng.random_range(0..8) as f64 / 8.0).collect();
        let map = clip
            .frames()
            .iter()
            .zip(&sims)
            .map(|(f, s)| {
                let h = refer_engine::backend::protocol::WireImage::encode(f).unwrap().hash().unwrap();
                (h, serde_json::json!(s))
            })
            .collect();
        let scenario = MockScenario::new().with_entry(MockEntry::per_image(MatchKey::similarity(), map, None));
        let backend = std::sync::Arc::new(refer_engine::backend::mock::MockBackend::new(scenario).unwrap());
        let client = BackendClient::new(backend, RetryPolicy::no_backoff());
        let cfg = Config::default();
        let ctx = StageContext {
            client: &client,
            prompts: &prompts,
            config: &cfg,
            clip: &clip,
            query: "q",
        };
        let got: Vec<usize> = frame_selection::coarse_select(&ctx, n)
            .map_err(|e| e.to_string())?
            .into_iter()
            .map(|(i, _)| i)
            .collect();
        let want = frame_selection::coarse_pick(&sims, n);
        ensure(got == want, || format!("backend trial {trial}: {got:?} vs {want:?}"))?;
    }
    Ok("400 direct + 12 backend trials match the oracle".into())
}

fn layout_suite() -> Check {
    let t = 40;
    let frames: Vec<RgbImage> = (0..t)
        .map(|i| RgbImage::from_fn(96, 64, |x, y| Rgb([(i * 6) as u8, (x * 2) as u8, (y * 3) as u8])))
        .collect();
    let clip = VideoClip::new(frames, "layout").map_err(|e| e.to_string())?;
    let selected = [4usize, 12, 20, 28, 36];
    for (w, h) in [(64u32, 64u32), (48, 32)] {
        for p in 1..=5 {
            let key = selected[p - 1];
            let plan = focus_layout::plan_layout(&selected, key, t).map_err(|e| e.to_string())?;
            ensure(plan.extras.is_empty() == (p % 2 == 1), || format!("p={p}: extras {:?}", plan.extras))?;
            let canvas = focus_layout::compose(&clip, &plan, w, h, true).map_err(|e| e.to_string())?;
            ensure(canvas.slots.len() == selected.len() + plan.extras.len(), || format!("p={p}: slot count"))?;
            ensure(canvas.height == 2 * h, || format!("p={p}: canvas height {}", canvas.height))?;
            let ks = canvas.keyframe_slot();
            ensure(ks.frame_index == key && ks.rect.width() == 2 * w && ks.rect.height() == 2 * h, || {
                format!("p={p}: keyframe slot {:?}", ks.rect)
            })?;
            for (i, a) in canvas.slots.iter().enumerate() {
                ensure(a.rect.x1 <= canvas.width && a.rect.y1 <= canvas.height, || format!("p={p}: slot outside canvas"))?;
                for b in &canvas.slots[i + 1..] {
                    ensure(!a.rect.overlaps(&b.rect), || format!("p={p}: {:?} overlaps {:?}", a.rect, b.rect))?;
                }
            }
            let mut reading: Vec<_> = canvas.slots.iter().map(|s| (s.rect.x0, s.rect.y0, s.frame_index)).collect();
            reading.sort_unstable();
            ensure(reading.windows(2).all(|w| w[0].2 < w[1].2), || format!("p={p}: reading order {reading:?}"))?;
            let again = focus_layout::compose(&clip, &plan, w, h, true).map_err(|e| e.to_string())?;
            ensure(again.image.as_raw() == canvas.image.as_raw(), || format!("p={p}: recomposition differs"))?;
            let all: HashSet<usize> = canvas.slots.iter().map(|s| s.frame_index).collect();
            ensure(all.len() == canvas.slots.len(), || format!("p={p}: duplicate frame in layout"))?;
        }
    }
    Ok("p=1..5 at two cell shapes".into())
}

fn threshold_table() -> Check {
    let mut rows = 0;
    for count in 0..=12usize {
        for inc in 0..=count {
            let want = if count <= 1 { inc == 0 } else { inc * 100 <= 30 * count };
            let got = reflection::consistency_passes(count, inc, 0.30);
            ensure(got == want, || format!("{inc}/{count}: got {got}, expected {want}"))?;
            rows += 1;
        }
    }
    ensure(reflection::consistency_passes(10, 3, 0.30), || "3/10 must pass".into())?;
    ensure(!reflection::consistency_passes(10, 4, 0.30), || "4/10 must fail".into())?;
    Ok(format!("{rows} rows, 3/10 pass, 4/10 fail"))
}

fn always_fail(mut s: MockScenario, role: AgentRole) -> MockScenario {
    let failing = s
        .entries
        .iter()
        .position(|e| e.key.role == Some(role) && e.key.round == Some(1))
        .expect("round-1 failing entry");
    s.entries.retain(|e| !(e.key.role == Some(role) && e.key.round.is_none()));
    let i = s.entries.iter().position(|e| e.key.role == Some(role)).unwrap_or(failing);
    s.entries[i].key.round = None;
    s
}

fn orchestrator_loop() -> Check {
    let cfg = test_config();
    // (a) all-pass: one round, identical to a reflection-free run
    let f = fixture(FixtureTemplate::SingleTarget, 0);
    let (r, mock) = run(&f, &cfg);
    ensure(r.rounds_used == 1 && r.status == SessionStatus::Accepted, || format!("(a) rounds {} {:?}", r.rounds_used, r.status))?;
    let mut off = cfg.clone();
    off.reflection.existence = false;
    off.reflection.consistency = false;
    let (plain, _) = run(&f, &off);
    ensure(plain.masklets == r.masklets && plain.keyframe_index() == r.keyframe_index(), || "(a) differs from reflection-free run".into())?;
    ensure(segment_calls(&mock.calls()) == 1, || "(a) segment calls".into())?;

    // (b) existence fails then passes
    let f = fixture(FixtureTemplate::KeyframeCorrection, 0);
    let (r, mock) = run(&f, &cfg);
    let calls = mock.calls();
    ensure(r.rounds_used == 2 && r.accepted, || format!("(b) rounds {} accepted {}", r.rounds_used, r.accepted))?;
    let k1 = r.log.rounds[0].keyframe_index();
    let k2 = r.log.rounds[1].keyframe_index();
    ensure(k1 != k2, || format!("(b) keyframe unchanged {k1:?}"))?;
    let feedback = r.log.rounds[0].existence.as_ref().map(|c| c.feedback.clone()).unwrap_or_default();
    let scorer = calls_with(&calls, AgentRole::FrameScorer, 2);
    ensure(!feedback.is_empty() && scorer.len() == 1 && scorer[0].user_text.contains(&feedback), || {
        "(b) round-2 selection prompt lacks round-1 feedback".into()
    })?;
    ensure(!calls_with(&calls, AgentRole::FrameScorer, 1)[0].user_text.contains(&feedback), || "(b) feedback leaked into round 1".into())?;

    // (c) always failing, max_turn = 4, for either stage
    for (template, role) in [
        (FixtureTemplate::ConsistencyCorrection, AgentRole::ConsistencyResponder),
        (FixtureTemplate::KeyframeCorrection, AgentRole::ExistenceResponder),
    ] {
        let f = fixture(template, 0);
        let (r, mock) = run_with(&f, always_fail(f.scenario.clone(), role), &cfg);
        let calls = mock.calls();
        ensure(r.rounds_used == 4 && r.status == SessionStatus::Exhausted && !r.accepted, || {
            format!("(c) {template}: rounds {} {:?}", r.rounds_used, r.status)
        })?;
        ensure(segment_calls(&calls) == 1 && !r.masklets.is_empty(), || format!("(c) {template}: segmentation not emitted"))?;
        ensure(calls.iter().all(|c| c.round <= 4), || format!("(c) {template}: call beyond round 4"))?;
        // existence is decided before any grounding of the same round
        for round in 1..=4 {
            let pos = |role: AgentRole| calls.iter().position(|c| c.round == round && c.role == role);
            if let (Some(e), Some(g)) = (pos(AgentRole::ExistenceResponder), pos(AgentRole::Grounder)) {
                ensure(e < g, || format!("(c) {template}: round {round} grounded before existence verdict"))?;
            }
        }
    }

    // (d) max_turn = 0
    let mut zero = cfg.clone();
    zero.reflection.max_turn = 0;
    let f = fixture(FixtureTemplate::KeyframeCorrection, 0);
    let (r, mock) = run(&f, &zero);
    let reflective = mock.calls().iter().filter(|c| c.role.is_reflection()).count();
    ensure(r.rounds_used == 1 && reflective == 0, || format!("(d) rounds {} reflection calls {reflective}", r.rounds_used))?;
    Ok("(a)-(d) hold".into())
}

fn brute_boundary(m: &Mask) -> Vec<(i64, i64)> {
    let (w, h) = (m.width() as i64, m.height() as i64);
    let at = |x: i64, y: i64| x >= 0 && y >= 0 && x < w && y < h && m.get(x as u32, y as u32);
    let mut v = Vec::new();
    for y in 0..h {
        for x in 0..w {
            if at(x, y) && !(at(x - 1, y) && at(x + 1, y) && at(x, y - 1) && at(x, y + 1)) {
                v.push((x, y));
            }
        }
    }
    v
}

fn brute_f(a: &Mask, b: &Mask, tol: u32) -> f64 {
    let (pa, pb) = (brute_boundary(a), brute_boundary(b));
    if pa.is_empty() && pb.is_empty() {
        return 1.0;
    }
    if pa.is_empty() || pb.is_empty() {
        return 0.0;
    }
    let t2 = (tol as i64).pow(2);
    let hit = |p: &(i64, i64), set: &[(i64, i64)]| set.iter().any(|q| (p.0 - q.0).pow(2) + (p.1 - q.1).pow(2) <= t2);
    let prec = pa.iter().filter(|p| hit(p, &pb)).count() as f64 / pa.len() as f64;
    let rec = pb.iter().filter(|p| hit(p, &pa)).count() as f64 / pb.len() as f64;
    if prec + rec == 0.0 {
        0.0
    } else {
        2.0 * prec * rec / (prec + rec)
    }
}

fn random_mask(rng: &mut ChaCha8Rng, w: u32, h: u32) -> Mask {
    let density: f64 = rng.random();
    Mask::from_fn(w, h, |_, _| rng.random_bool(density))
}

fn metrics_oracle() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for trial in 0..1000 {
        let (w, h) = (rng.random_range(1..=16), rng.random_range(1..=16));
        let a = random_mask(&mut rng, w, h);
        let b = random_mask(&mut rng, w, h);
        let inter = a.data().iter().zip(b.data()).filter(|(x, y)| **x && **y).count();
        let union = a.data().iter().zip(b.data()).filter(|(x, y)| **x || **y).count();
        let j_want = if union == 0 { 1.0 } else { inter as f64 / union as f64 };
        let j = metrics::frame_iou(&a, &b);
        ensure(j == j_want, || format!("trial {trial}: J {j} vs {j_want}"))?;
        let tol = rng.random_range(0..=3);
        let f = metrics::frame_f(&a, &b, tol);
        let f_want = brute_f(&a, &b, tol);
        ensure((f - f_want).abs() <= 1e-9, || format!("trial {trial}: F {f} vs {f_want}"))?;
        ensure(metrics::frame_iou(&a, &a) == 1.0 && metrics::frame_f(&a, &a, tol) == 1.0, || format!("trial {trial}: identity"))?;
        let inv = Mask::from_fn(w, h, |x, y| !a.get(x, y));
        ensure(metrics::frame_iou(&a, &inv) == 0.0, || format!("trial {trial}: disjoint"))?;
    }
    for trial in 0..50 {
        let (w, h) = (16, 16);
        let gts: Vec<Masklet> = (0..3)
            .map(|id| Masklet {
                target_id: id,
                masks: (0..2)
                    .map(|_| {
                        let (x0, y0) = (rng.random_range(0..10), rng.random_range(0..10));
                        Mask::from_fn(w, h, |x, y| x >= x0 && x < x0 + 6 && y >= y0 && y < y0 + 6)
                    })
                    .collect(),
            })
            .collect();
        let mut preds: Vec<Masklet> = gts
            .iter()
            .map(|g| Masklet {
                target_id: g.target_id + 10,
                masks: g.masks.iter().map(|m| Mask::from_fn(w, h, |x, y| m.get(x, y) ^ rng.random_bool(0.05))).collect(),
            })
            .collect();
        let base = metrics::evaluate(&preds, &gts, Some(1)).map_err(|e| e.to_string())?;
        for _ in 0..5 {
            preds.shuffle(&mut rng);
            let r = metrics::evaluate(&preds, &gts, Some(1)).map_err(|e| e.to_string())?;
            ensure(r.j == base.j && (r.f - base.f).abs() < 1e-12, || format!("assignment trial {trial}: not permutation invariant"))?;
        }
    }
    Ok("1000 pairs + 50 multi-target permutations".into())
}

fn end_to_end() -> Check {
    let cfg = test_config();
    let mut worst: f64 = 1.0;
    for seed in 0..3 {
        for template in [FixtureTemplate::SingleTarget, FixtureTemplate::MultiTarget] {
            let f = fixture(template, seed);
            let (r, _) = run_from_disk(&f, &cfg)?;
            let jf = score(&f, &r).jf;
            worst = worst.min(jf);
            ensure(jf >= 0.99 && r.accepted, || format!("{template} seed {seed}: J&F {jf}"))?;
        }
        let f = fixture(FixtureTemplate::KeyframeCorrection, seed);
        let (r, mock) = run_from_disk(&f, &cfg)?;
        let calls = mock.calls();
        let jf = score(&f, &r).jf;
        worst = worst.min(jf);
        ensure(r.rounds_used <= 2 && jf >= 0.99, || format!("keyframe_correction seed {seed}: rounds {} J&F {jf}", r.rounds_used))?;
        let fb = &r.log.rounds[0].existence.as_ref().ok_or("no existence chain")?.feedback;
        ensure(calls_with(&calls, AgentRole::FrameScorer, 2).iter().any(|c| c.user_text.contains(fb.as_str())), || {
            "existence feedback did not reach frame selection".into()
        })?;
        ensure(calls_with(&calls, AgentRole::IntentAnalyst, 2).iter().all(|c| !c.user_text.contains(fb.as_str())), || {
            "existence feedback routed to intent analysis".into()
        })?;
        ensure(r.keyframe_index() == Some(f.keyframes.1), || "keyframe not promoted".into())?;

        let f = fixture(FixtureTemplate::ConsistencyCorrection, seed);
        let (r, mock) = run_from_disk(&f, &cfg)?;
        let calls = mock.calls();
        let jf = score(&f, &r).jf;
        worst = worst.min(jf);
        ensure(r.rounds_used <= 2 && jf >= 0.99, || format!("consistency_correction seed {seed}: rounds {} J&F {jf}", r.rounds_used))?;
        let fb = &r.log.rounds[0].consistency.as_ref().ok_or("no consistency chain")?.feedback;
        ensure(fb.contains("color is specified as"), || format!("report lacks the attribute: {fb}"))?;
        ensure(calls_with(&calls, AgentRole::IntentAnalyst, 2).iter().any(|c| c.user_text.contains(fb.as_str())), || {
            "consistency feedback did not reach intent analysis".into()
        })?;
        ensure(calls_with(&calls, AgentRole::FrameScorer, 2).is_empty(), || "frames re-selected after a consistency failure".into())?;
    }
    Ok(format!("12 sessions, min J&F {worst:.4}"))
}

/// Writes the fixture, reloads the clip from PNGs and runs on the stored scenario.
fn run_from_disk(
    f: &Fixture,
    cfg: &Config,
) -> Result<(refer_engine::orchestrator::SessionResult, std::sync::Arc<refer_engine::backend::mock::MockBackend>), String> {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let paths = refer_engine::mock_fixtures::write_fixture(f, dir.path()).map_err(|e| e.to_string())?;
    let clip = refer_engine::video_io::load_clip(&paths.frames, None).map_err(|e| e.to_string())?;
    let mock = std::sync::Arc::new(refer_engine::backend::mock::MockBackend::load(&paths.scenario).map_err(|e| e.to_string())?);
    let r = refer_engine::orchestrator::run_session(&clip, &f.query, cfg, mock.clone()).map_err(|e| e.to_string())?;
    Ok((r, mock))
}

fn ablation_surface() -> Check {
    let base = test_config();
    let mut variants: Vec<(String, Config)> = Vec::new();
    for (name, ex, co) in [("stage1_off", false, true), ("stage2_off", true, false), ("both_off", false, false)] {
        let mut c = base.clone();
        c.reflection.existence = ex;
        c.reflection.consistency = co;
        variants.push((name.into(), c));
    }
    for m in [0, 2, 4, 6] {
        let mut c = base.clone();
        c.reflection.max_turn = m;
        variants.push((format!("max_turn_{m}"), c));
    }
    for merge in [MergeMode::None, MergeMode::SelectIntent, MergeMode::IntentGround, MergeMode::All] {
        let mut c = base.clone();
        c.pipeline.merge = merge;
        variants.push((format!("merge_{}", serde_json::to_value(merge).unwrap().as_str().unwrap()), c));
    }
    for mode in [LayoutMode::DynamicFocus, LayoutMode::SingleKeyframe, LayoutMode::UniformGrid] {
        let mut c = base.clone();
        c.layout.mode = mode;
        variants.push((format!("layout_{mode:?}"), c));
    }
    let mut runs = 0;
    for template in [FixtureTemplate::MultiTarget, FixtureTemplate::KeyframeCorrection, FixtureTemplate::ConsistencyCorrection] {
        let f = fixture(template, 1);
        for (name, cfg) in &variants {
            let (r, mock) = run(&f, cfg);
            let calls = mock.calls();
            let log = serde_json::to_value(&r.log).map_err(|e| e.to_string())?;
            let echoed: Config = serde_json::from_value(log["config"].clone()).map_err(|e| format!("{name}: {e}"))?;
            let mut expected = cfg.clone();
            expected.backends.bearer_token = None;
            ensure(echoed == expected, || format!("{template}/{name}: transcript config differs"))?;
            ensure(log["rounds"].as_array().map(|a| a.len()) == Some(r.rounds_used as usize), || format!("{template}/{name}: rounds"))?;
            ensure(r.rounds_used <= cfg.reflection.max_turn.max(1), || format!("{template}/{name}: {} rounds", r.rounds_used))?;
            ensure(segment_calls(&calls) == 1, || format!("{template}/{name}: segment calls"))?;
            let has = |role: AgentRole| calls.iter().any(|c| c.role == role);
            let turns = cfg.reflection.max_turn > 0;
            ensure(has(AgentRole::ExistenceQuestioner) == (turns && cfg.reflection.existence), || format!("{template}/{name}: existence calls"))?;
            let merged_role = match cfg.pipeline.merge {
                MergeMode::None => None,
                MergeMode::SelectIntent => Some(AgentRole::MergedSelectIntent),
                MergeMode::IntentGround => Some(AgentRole::MergedIntentGround),
                MergeMode::All => Some(AgentRole::MergedAll),
            };
            if let Some(role) = merged_role {
                ensure(has(role), || format!("{template}/{name}: merged call missing"))?;
            }
            let canvas = r.final_round().canvas.as_ref().ok_or("no canvas")?;
            if cfg.layout.mode == LayoutMode::SingleKeyframe {
                ensure(canvas.slots.len() == 1 && canvas.width == 2 * cfg.layout.cell_w, || format!("{template}/{name}: canvas"))?;
            }
            if cfg.layout.mode == LayoutMode::UniformGrid {
                ensure(canvas.slots.iter().all(|s| s.rect.width() == cfg.layout.cell_w), || format!("{template}/{name}: grid"))?;
            }
            let reflective = cfg.reflection.max_turn >= 2 && cfg.reflection.existence && cfg.reflection.consistency;
            if reflective {
                let jf = score(&f, &r).jf;
                ensure(jf >= 0.99, || format!("{template}/{name}: J&F {jf}"))?;
            }
            runs += 1;
        }
    }
    Ok(format!("{runs} runs over {} variants", variants.len()))
}

type Criterion = (&'static str, Duration, fn() -> Check);

fn main() {
    let criteria: [Criterion; 8] = [
        ("fusion exactness and ranking", Duration::from_secs(1), fusion_exactness),
        ("coarse selection property", Duration::from_secs(5), coarse_selection),
        ("layout suite", Duration::from_secs(5), layout_suite),
        ("consistency threshold table", Duration::from_secs(1), threshold_table),
        ("orchestrator loop", Duration::from_secs(10), orchestrator_loop),
        ("metrics oracle", Duration::from_secs(30), metrics_oracle),
        ("end-to-end desk scale", Duration::from_secs(60), end_to_end),
        ("ablation surface", Duration::from_secs(60), ablation_surface),
    ];
    let mut failed = 0;
    for (name, limit, check) in criteria {
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(check).unwrap_or_else(|_| Err("panicked".into()));
        let took = start.elapsed();
        match outcome {
            Ok(detail) if took <= limit => {
                println!("PASS {name} ({:.2}s <= {:.0}s): {detail}", took.as_secs_f64(), limit.as_secs_f64())
            }
            Ok(detail) => {
                failed += 1;
                println!("FAIL {name} ({:.2}s > {:.0}s): {detail}", took.as_secs_f64(), limit.as_secs_f64())
            }
            Err(why) => {
                failed += 1;
                println!("FAIL {name} ({:.2}s): {why}", took.as_secs_f64())
            }
        }
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
    println!("all acceptance criteria passed");
}
