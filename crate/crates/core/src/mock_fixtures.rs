//! Synthetic clips of moving coloured shapes with ground truth and a matching
//! scripted backend scenario.
//!
//! Templates:
//! - `single_target`: one target among distractors; every check passes.
//! - `multi_target`: two targets referred to by one query.
//! - `keyframe_correction`: round 1 picks a keyframe the existence check
//!   rejects, naming a better context frame that round 2 promotes.
//! - `consistency_correction`: round 1 grounds a same-shaped distractor of
//!   the wrong colour; the consistency report fixes it in round 2.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use image::{Rgb, RgbImage};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::backend::mock::{MatchKey, MockEntry, MockScenario};
use crate::backend::protocol::{AgentRole, ResponseTag, WireImage};
use crate::config::Config;
use crate::error::{Error, Result};
use crate::frame_selection::{self, CandidatePool};
use crate::geometry::NormBox;
use crate::orchestrator::write_json;
use crate::video_io::{self, Mask, MaskFormat, Masklet, MaskletDocument, VideoClip};

pub const FIXTURE_FRAMES: usize = 20;
pub const FIXTURE_WIDTH: u32 = 160;
pub const FIXTURE_HEIGHT: u32 = 96;
pub const SCENARIO_FILE: &str = "scenario.json";
pub const MANIFEST_FILE: &str = "manifest.jsonl";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FixtureTemplate {
    SingleTarget,
    MultiTarget,
    KeyframeCorrection,
    ConsistencyCorrection,
}

impl FixtureTemplate {
    pub const ALL: [FixtureTemplate; 4] = [
        FixtureTemplate::SingleTarget,
        FixtureTemplate::MultiTarget,
        FixtureTemplate::KeyframeCorrection,
        FixtureTemplate::ConsistencyCorrection,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            FixtureTemplate::SingleTarget => "single_target",
            FixtureTemplate::MultiTarget => "multi_target",
            FixtureTemplate::KeyframeCorrection => "keyframe_correction",
            FixtureTemplate::ConsistencyCorrection => "consistency_correction",
        }
    }
}

impl fmt::Display for FixtureTemplate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FixtureTemplate {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|t| t.as_str() == s)
            .ok_or_else(|| Error::InvalidInput(format!("unknown fixture template `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NamedColor {
    pub name: &'static str,
    pub rgb: [u8; 3],
}

pub const PALETTE: [NamedColor; 6] = [
    NamedColor { name: "red", rgb: [220, 40, 40] },
    NamedColor { name: "green", rgb: [40, 180, 60] },
    NamedColor { name: "blue", rgb: [40, 80, 225] },
    NamedColor { name: "yellow", rgb: [235, 210, 40] },
    NamedColor { name: "magenta", rgb: [210, 50, 200] },
    NamedColor { name: "cyan", rgb: [40, 210, 215] },
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ShapeKind {
    Rectangle,
    Circle,
}

impl ShapeKind {
    pub fn name(&self) -> &'static str {
        match self {
            ShapeKind::Rectangle => "rectangle",
            ShapeKind::Circle => "circle",
        }
    }
}

/// A shape moving at constant velocity; `target_id` marks query targets.
#[derive(Debug, Clone, PartialEq)]
pub struct ShapeSpec {
    pub kind: ShapeKind,
    pub color: NamedColor,
    pub start: (f64, f64),
    pub velocity: (f64, f64),
    pub half_w: f64,
    pub half_h: f64,
    pub target_id: Option<usize>,
}

impl ShapeSpec {
    pub fn center(&self, t: usize) -> (f64, f64) {
        (self.start.0 + self.velocity.0 * t as f64, self.start.1 + self.velocity.1 * t as f64)
    }

    pub fn covers(&self, t: usize, x: u32, y: u32) -> bool {
        let (cx, cy) = self.center(t);
        let (dx, dy) = (x as f64 + 0.5 - cx, y as f64 + 0.5 - cy);
        match self.kind {
            ShapeKind::Rectangle => dx.abs() <= self.half_w && dy.abs() <= self.half_h,
            ShapeKind::Circle => (dx / self.half_w).powi(2) + (dy / self.half_h).powi(2) <= 1.0,
        }
    }

    pub fn description(&self) -> String {
        format!("the {} {}", self.color.name, self.kind.name())
    }
}

/// Shapes drawn in order over a gradient background; later shapes win.
#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    pub width: u32,
    pub height: u32,
    pub frames: usize,
    pub shapes: Vec<ShapeSpec>,
}

impl Scene {
    /// Frames and one visible-pixel masklet per target, ordered by target id.
    pub fn render(&self) -> (Vec<RgbImage>, Vec<Masklet>) {
        let mut target_ids: Vec<usize> = self.shapes.iter().filter_map(|s| s.target_id).collect();
        target_ids.sort_unstable();
        let mut gt: Vec<Masklet> = target_ids
            .iter()
            .map(|&id| Masklet::empty(id, self.frames, self.width, self.height))
            .collect();
        let mut frames = Vec::with_capacity(self.frames);
        for t in 0..self.frames {
            let mut img = RgbImage::from_fn(self.width, self.height, |x, y| {
                Rgb([
                    (30 + x * 40 / self.width) as u8,
                    (35 + y * 30 / self.height) as u8,
                    (50 + t % 200) as u8,
                ])
            });
            let mut owner: Vec<Option<usize>> = vec![None; (self.width * self.height) as usize];
            for shape in &self.shapes {
                for y in 0..self.height {
                    for x in 0..self.width {
                        if shape.covers(t, x, y) {
                            img.put_pixel(x, y, Rgb(shape.color.rgb));
                            owner[(y * self.width + x) as usize] = shape.target_id;
                        }
                    }
                }
            }
            for (i, o) in owner.iter().enumerate() {
                if let Some(id) = o {
                    let slot = target_ids.iter().position(|t| t == id).expect("known target");
                    let (x, y) = (i as u32 % self.width, i as u32 / self.width);
                    gt[slot].masks[t].set(x, y, true);
                }
            }
            frames.push(img);
        }
        (frames, gt)
    }
}

/// A generated clip, its ground truth and the scenario that scripts it.
#[derive(Debug, Clone)]
pub struct Fixture {
    pub template: FixtureTemplate,
    pub seed: u64,
    pub query: String,
    pub scene: Scene,
    pub clip: VideoClip,
    pub gt: Vec<Masklet>,
    pub scenario: MockScenario,
    /// Keyframe the default pipeline settles on in round 1 and in later rounds.
    pub keyframes: (usize, usize),
    /// Rounds a reflection-enabled run needs to pass both checks.
    pub expected_rounds: u32,
}

fn pick_colors(rng: &mut ChaCha8Rng, n: usize) -> Vec<NamedColor> {
    let mut p = PALETTE.to_vec();
    p.shuffle(rng);
    p.truncate(n);
    p
}

fn build_scene(template: FixtureTemplate, rng: &mut ChaCha8Rng) -> Scene {
    let colors = pick_colors(rng, 3);
    let kinds = [ShapeKind::Circle, ShapeKind::Rectangle];
    let mut specs: Vec<(ShapeKind, NamedColor, Option<usize>)> = match template {
        FixtureTemplate::SingleTarget | FixtureTemplate::KeyframeCorrection => vec![
            (kinds[rng.random_range(0..2)], colors[0], Some(0)),
            (kinds[rng.random_range(0..2)], colors[1], None),
            (kinds[rng.random_range(0..2)], colors[2], None),
        ],
        FixtureTemplate::MultiTarget => vec![
            (ShapeKind::Circle, colors[0], Some(0)),
            (ShapeKind::Rectangle, colors[1], Some(1)),
            (kinds[rng.random_range(0..2)], colors[2], None),
        ],
        FixtureTemplate::ConsistencyCorrection => {
            let kind = kinds[rng.random_range(0..2)];
            let other = if kind == ShapeKind::Circle { ShapeKind::Rectangle } else { ShapeKind::Circle };
            vec![(kind, colors[0], Some(0)), (kind, colors[1], None), (other, colors[2], None)]
        }
    };
    specs.shuffle(rng);
    let lanes = specs.len() as f64;
    let lane_w = FIXTURE_WIDTH as f64 / lanes;
    let shapes = specs
        .into_iter()
        .enumerate()
        .map(|(lane, (kind, color, target_id))| {
            let half = rng.random_range(9.0..13.0);
            let vx: f64 = if rng.random_bool(0.5) { 0.4 } else { -0.4 };
            let vy: f64 = if rng.random_bool(0.5) { 1.5 } else { -1.5 };
            let travel_y = vy.abs() * (FIXTURE_FRAMES - 1) as f64;
            let lo = half + 2.0;
            let hi = FIXTURE_HEIGHT as f64 - half - 2.0 - travel_y;
            let y0 = rng.random_range(lo..hi.max(lo + 1.0));
            let start_y = if vy > 0.0 { y0 } else { y0 + travel_y };
            let cx = lane_w * (lane as f64 + 0.5) - vx * (FIXTURE_FRAMES - 1) as f64 / 2.0;
            ShapeSpec {
                kind,
                color,
                start: (cx, start_y),
                velocity: (vx, vy),
                half_w: half,
                half_h: if kind == ShapeKind::Rectangle { half * 0.7 } else { half },
                target_id,
            }
        })
        .collect();
    Scene {
        width: FIXTURE_WIDTH,
        height: FIXTURE_HEIGHT,
        frames: FIXTURE_FRAMES,
        shapes,
    }
}

fn hashes(clip: &VideoClip) -> Result<Vec<String>> {
    clip.frames().iter().map(|f| WireImage::encode(f)?.hash()).collect()
}

fn box_value(b: Option<NormBox>) -> Result<Value> {
    let b = b.ok_or_else(|| Error::Scenario("target invisible in a frame".into()))?;
    Ok(serde_json::to_value(b)?)
}

fn targets_of(scene: &Scene) -> Vec<&ShapeSpec> {
    let mut t: Vec<&ShapeSpec> = scene.shapes.iter().filter(|s| s.target_id.is_some()).collect();
    t.sort_by_key(|s| s.target_id);
    t
}

fn existence_questions() -> Value {
    json!({"questions": [
        {"kind": "visibility", "question": "Is the object described by the expressions visible in the keyframe?"},
        {"kind": "completeness", "question": "Is the whole object shown in the keyframe without heavy occlusion?"},
        {"kind": "optimality", "question": "Does any context frame show the object better than the keyframe?"}
    ]})
}

fn existence_pass() -> Value {
    json!({"answers": [
        {"answer": "yes", "explanation": "The described object is clearly visible."},
        {"answer": "yes", "explanation": "The object is fully inside the frame."},
        {"answer": "no", "explanation": "The keyframe is the clearest view."}
    ]})
}

fn color_choices(gold: NamedColor, extra: NamedColor) -> Vec<&'static str> {
    let mut c = vec![gold.name, extra.name];
    for p in PALETTE {
        if c.len() == 3 {
            break;
        }
        if !c.contains(&p.name) {
            c.push(p.name);
        }
    }
    c.sort_unstable();
    c
}

/// Fine-score table (0-100) per frame index.
type ScoreMap = BTreeMap<usize, f64>;

fn simulate_keyframe(pool: &CandidatePool, scores: &ScoreMap, config: &Config) -> Result<(usize, Vec<usize>)> {
    let raw: Vec<f64> = pool.frame_indices.iter().map(|i| scores[i]).collect();
    let scaled = frame_selection::scale_mllm_scores(&raw).map_err(Error::Scenario)?;
    let s = &config.selection;
    let sel = frame_selection::fuse_and_pick(&pool.with_mllm(&scaled)?, s.k, s.alpha, s.beta, 1)?;
    Ok((sel.keyframe_index, sel.selected))
}

fn per_image_scores(hashes: &[String], scores: &ScoreMap) -> BTreeMap<String, Value> {
    scores.iter().map(|(&i, &s)| (hashes[i].clone(), json!(s))).collect()
}

fn pool_scores(pool: &CandidatePool, scores: &ScoreMap) -> Vec<f64> {
    pool.frame_indices.iter().map(|i| scores[i]).collect()
}

/// Generates a fixture. Frame scores are scripted so that the pipeline
/// configured by `config.selection` reaches the template's keyframes; the
/// pipeline is simulated to confirm it.
pub fn generate(template: FixtureTemplate, seed: u64, config: &Config) -> Result<Fixture> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let scene = build_scene(template, &mut rng);
    let (frames, gt) = scene.render();
    let clip = VideoClip::new(frames, format!("{template}_{seed}"))?;
    let hashes = hashes(&clip)?;
    let t = clip.len();

    let sims: Vec<f64> = (0..t).map(|_| (rng.random_range(200..800) as f64) / 1000.0).collect();
    let picks = frame_selection::coarse_pick(&sims, config.selection.n);
    let pool = CandidatePool::from_raw(picks.iter().map(|&i| (i, sims[i])).collect())?;
    let best_clip = pool
        .frame_indices
        .iter()
        .zip(&pool.s_clip)
        .fold((pool.frame_indices[0], f64::NEG_INFINITY), |acc, (&i, &s)| if s > acc.1 { (i, s) } else { acc })
        .0;

    let mut base: ScoreMap = pool.frame_indices.iter().map(|&i| (i, rng.random_range(10..=40) as f64)).collect();
    base.insert(best_clip, 100.0);
    let first = base.clone();
    let mut later = base.clone();
    let mut better = None;
    if template == FixtureTemplate::KeyframeCorrection {
        if pool.len() < 2 {
            return Err(Error::Scenario("keyframe correction needs at least two candidates".into()));
        }
        let b = *pool
            .frame_indices
            .iter()
            .filter(|&&i| i != best_clip)
            .max_by_key(|&&i| (i.abs_diff(best_clip), std::cmp::Reverse(i)))
            .expect("two candidates");
        let mut r1 = base.clone();
        r1.insert(b, 90.0);
        later.insert(best_clip, 20.0);
        later.insert(b, 100.0);
        better = Some((b, r1));
    }
    let round1_scores = better.as_ref().map(|(_, r1)| r1.clone()).unwrap_or(first);
    let (kf1, sel1) = simulate_keyframe(&pool, &round1_scores, config)?;
    let (kf2, _) = simulate_keyframe(&pool, &later, config)?;
    if kf1 != best_clip {
        return Err(Error::Scenario(format!("round 1 settles on {kf1}, expected {best_clip}")));
    }
    if let Some((b, _)) = &better {
        if kf2 != *b {
            return Err(Error::Scenario(format!("round 2 settles on {kf2}, expected {b}")));
        }
        if !sel1.contains(b) {
            log::warn!("better frame {b} is not a round-1 context frame");
        }
    }

    let targets = targets_of(&scene);
    let query = match template {
        FixtureTemplate::MultiTarget => format!("{} and {}", targets[0].description(), targets[1].description()),
        _ => targets[0].description(),
    };
    let distractor = scene
        .shapes
        .iter()
        .find(|s| s.target_id.is_none() && s.kind == targets[0].kind)
        .cloned();
    let expressions: Vec<String> = targets.iter().map(|s| s.description()).collect();
    let vague: Vec<String> = match template {
        FixtureTemplate::ConsistencyCorrection => vec![format!("the {}", targets[0].kind.name())],
        _ => expressions.clone(),
    };

    let box_at = |target: usize, frame: usize| box_value(gt[target].masks[frame].bounding_box());
    let distractor_mask = |frame: usize| -> Option<NormBox> {
        let d = distractor.as_ref()?;
        Mask::from_fn(scene.width, scene.height, |x, y| d.covers(frame, x, y)).bounding_box()
    };

    let mut s = MockScenario::new();
    s.template = Some(template.to_string());
    s.seed = Some(seed);
    s.query = Some(query.clone());
    s.gt = Some(MaskletDocument::from_masklets(clip.width(), clip.height(), t, &gt));

    let sim_map: BTreeMap<String, Value> = hashes.iter().zip(&sims).map(|(h, &v)| (h.clone(), json!(v))).collect();
    s.entries.push(MockEntry::per_image(MatchKey::similarity(), sim_map, None));

    let scored = MatchKey::chat(ResponseTag::FrameScores).role(AgentRole::FrameScorer);
    s.entries.push(MockEntry::per_image(scored.clone(), per_image_scores(&hashes, &later), None));
    s.entries.push(MockEntry::per_image(scored.round(1), per_image_scores(&hashes, &round1_scores), None));

    let intent = MatchKey::chat(ResponseTag::Expressions).role(AgentRole::IntentAnalyst);
    s.entries.push(MockEntry::reply(intent.clone(), json!({"expressions": expressions})));
    s.entries.push(MockEntry::reply(intent.round(1), json!({"expressions": vague})));

    for (ti, _) in targets.iter().enumerate() {
        let map = (0..t).map(|f| Ok((hashes[f].clone(), box_at(ti, f)?))).collect::<Result<_>>()?;
        let key = MatchKey::chat(ResponseTag::Box).role(AgentRole::Grounder).target(ti);
        s.entries.push(MockEntry::per_image(key.clone(), map, None));
        if template == FixtureTemplate::ConsistencyCorrection {
            let map = (0..t)
                .map(|f| Ok((hashes[f].clone(), box_value(distractor_mask(f))?)))
                .collect::<Result<_>>()?;
            s.entries.push(MockEntry::per_image(key.round(1), map, None));
        }
    }

    s.entries.push(MockEntry::reply(
        MatchKey::chat(ResponseTag::Questions).role(AgentRole::ExistenceQuestioner),
        existence_questions(),
    ));
    let ex_answers = MatchKey::chat(ResponseTag::QaAnswers).role(AgentRole::ExistenceResponder);
    s.entries.push(MockEntry::reply(ex_answers.clone(), existence_pass()));
    if let Some((b, _)) = &better {
        s.entries.push(MockEntry::reply(
            ex_answers.round(1),
            json!({"answers": [
                {"answer": "no", "explanation": format!("In keyframe #{kf1} {} is blurred and hard to recognize.", targets[0].description())},
                {"answer": "yes", "explanation": "The object is inside the frame."},
                {"answer": "yes", "explanation": format!("Frame {b} shows the object much more clearly."), "better_frame": b}
            ]}),
        ));
    }

    s.entries.push(MockEntry::reply(
        MatchKey::chat(ResponseTag::Attributes).role(AgentRole::AttributeDecomposer),
        json!({"attributes": [{"attribute": "color", "level": "low"}, {"attribute": "shape", "level": "low"}]}),
    ));
    let spare = PALETTE
        .into_iter()
        .find(|p| targets.iter().all(|t| t.color != *p))
        .expect("palette larger than target count");
    let wrong = distractor.as_ref().map(|d| d.color).unwrap_or(spare);
    let mut questions = Vec::new();
    let mut right_answers = Vec::new();
    let mut wrong_answers = Vec::new();
    for (ti, spec) in targets.iter().enumerate() {
        let extra = if ti == 0 { wrong } else { spare };
        questions.push(json!({
            "target_id": ti, "attribute": "color",
            "question": format!("What is the color of object {ti}?"),
            "choices": color_choices(spec.color, extra), "gold": spec.color.name
        }));
        questions.push(json!({
            "target_id": ti, "attribute": "shape",
            "question": format!("What is the shape of object {ti}?"),
            "choices": ["circle", "rectangle"], "gold": spec.kind.name()
        }));
        right_answers.push(json!({"answer": spec.color.name, "explanation": format!("Object {ti} is {}.", spec.color.name)}));
        right_answers.push(json!({"answer": spec.kind.name(), "explanation": format!("Object {ti} is a {}.", spec.kind.name())}));
        let seen = if ti == 0 { wrong.name } else { spec.color.name };
        wrong_answers.push(json!({"answer": seen, "explanation": format!("Object {ti} is {seen}.")}));
        wrong_answers.push(json!({"answer": spec.kind.name(), "explanation": format!("Object {ti} is a {}.", spec.kind.name())}));
    }
    s.entries.push(MockEntry::reply(
        MatchKey::chat(ResponseTag::Questions).role(AgentRole::ConsistencyQuestioner),
        json!({"questions": questions}),
    ));
    let co_answers = MatchKey::chat(ResponseTag::QaAnswers).role(AgentRole::ConsistencyResponder);
    s.entries.push(MockEntry::reply(co_answers.clone(), json!({"answers": right_answers})));
    if template == FixtureTemplate::ConsistencyCorrection {
        s.entries.push(MockEntry::reply(co_answers.round(1), json!({"answers": wrong_answers})));
    }

    let targets_json = |exprs: &[String], keyframe: usize, round1: bool| -> Result<Value> {
        let mut out = Vec::new();
        for (ti, e) in exprs.iter().enumerate() {
            let b = if round1 && template == FixtureTemplate::ConsistencyCorrection && ti == 0 {
                box_value(distractor_mask(keyframe))?
            } else {
                box_at(ti, keyframe)?
            };
            out.push(json!({"expression": e, "box": b}));
        }
        Ok(Value::Array(out))
    };
    let merged = [
        (ResponseTag::ScoresAndExpressions, AgentRole::MergedSelectIntent),
        (ResponseTag::ExpressionsAndBoxes, AgentRole::MergedIntentGround),
        (ResponseTag::ScoresAndTargets, AgentRole::MergedAll),
    ];
    for (tag, role) in merged {
        for round1 in [false, true] {
            let (scores, kf, exprs) = if round1 {
                (&round1_scores, kf1, &vague)
            } else {
                (&later, kf2, &expressions)
            };
            let reply = match tag {
                ResponseTag::ScoresAndExpressions => {
                    json!({"scores": pool_scores(&pool, scores), "expressions": exprs})
                }
                ResponseTag::ExpressionsAndBoxes => json!({"targets": targets_json(exprs, kf, round1)?}),
                _ => json!({"scores": pool_scores(&pool, scores), "targets": targets_json(exprs, kf, round1)?}),
            };
            let key = MatchKey::chat(tag).role(role);
            s.entries.push(MockEntry::reply(if round1 { key.round(1) } else { key }, reply));
        }
    }
    s.validate()?;

    let expected_rounds = match template {
        FixtureTemplate::SingleTarget | FixtureTemplate::MultiTarget => 1,
        _ => 2,
    };
    Ok(Fixture {
        template,
        seed,
        query,
        scene,
        clip,
        gt,
        scenario: s,
        keyframes: (kf1, kf2),
        expected_rounds,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixturePaths {
    pub frames: PathBuf,
    pub gt: PathBuf,
    pub scenario: PathBuf,
    pub manifest: PathBuf,
}

/// Writes `frames/`, `gt/target_<id>/`, `scenario.json` and a one-line
/// `manifest.jsonl` with paths relative to `out_dir`.
pub fn write_fixture(fixture: &Fixture, out_dir: &Path) -> Result<FixturePaths> {
    let frames = out_dir.join("frames");
    fs::create_dir_all(&frames).map_err(|e| Error::io(&frames, e))?;
    for (i, f) in fixture.clip.frames().iter().enumerate() {
        f.save(frames.join(format!("{i:05}.png")))?;
    }
    let gt = out_dir.join("gt");
    video_io::write_masklets(&fixture.clip, &fixture.gt, &gt, MaskFormat::PngPerFrame)?;
    let scenario = out_dir.join(SCENARIO_FILE);
    fixture.scenario.save(&scenario)?;
    let manifest = out_dir.join(MANIFEST_FILE);
    let line = json!({
        "id": format!("{}_{}", fixture.template, fixture.seed),
        "video": "frames",
        "query": fixture.query,
        "gt": "gt",
        "mock_scenario": SCENARIO_FILE,
    });
    fs::write(&manifest, format!("{line}\n")).map_err(|e| Error::io(&manifest, e))?;
    write_json(&out_dir.join("fixture.json"), &json!({
        "template": fixture.template,
        "seed": fixture.seed,
        "query": fixture.query,
        "keyframes": [fixture.keyframes.0, fixture.keyframes.1],
        "expected_rounds": fixture.expected_rounds,
    }))?;
    Ok(FixturePaths {
        frames,
        gt,
        scenario,
        manifest,
    })
}
