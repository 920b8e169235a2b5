//! Engine configuration, loadable from TOML or JSON.

use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::backend::{HttpBackend, MockBackend, ModelBackend, RetryPolicy};
use crate::error::{Error, Result};

pub const MIN_CELL_SIDE: u32 = 32;

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub input: InputConfig,
    pub selection: SelectionConfig,
    pub layout: LayoutConfig,
    pub agents: AgentsConfig,
    pub reflection: ReflectionConfig,
    pub pipeline: PipelineConfig,
    pub metrics: MetricsConfig,
    pub backends: BackendsConfig,
    /// Directory of prompt template overrides (`<name>.txt`).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub prompts_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InputConfig {
    /// Uniformly subsample longer clips down to this many frames.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_frames: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SelectionConfig {
    pub n: usize,
    pub k: usize,
    pub alpha: f64,
    pub beta: f64,
    /// Images per similarity request.
    pub similarity_batch: usize,
}

impl Default for SelectionConfig {
    fn default() -> Self {
        Self {
            n: 10,
            k: 5,
            alpha: 0.3,
            beta: 0.7,
            similarity_batch: 32,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LayoutMode {
    /// Large keyframe block with context frames in small slots.
    #[default]
    DynamicFocus,
    /// The keyframe alone.
    SingleKeyframe,
    /// All selected frames at equal size.
    UniformGrid,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LayoutConfig {
    pub mode: LayoutMode,
    pub cell_w: u32,
    pub cell_h: u32,
    pub label_frames: bool,
    /// Write every composed canvas as PNG next to the session outputs.
    pub debug_dump: bool,
}

impl Default for LayoutConfig {
    fn default() -> Self {
        Self {
            mode: LayoutMode::DynamicFocus,
            cell_w: 224,
            cell_h: 224,
            label_frames: true,
            debug_dump: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AgentsConfig {
    pub max_targets: usize,
}

impl Default for AgentsConfig {
    fn default() -> Self {
        Self { max_targets: 8 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReflectionConfig {
    pub existence: bool,
    pub consistency: bool,
    pub max_turn: u32,
    pub consistency_threshold: f64,
}

impl Default for ReflectionConfig {
    fn default() -> Self {
        Self {
            existence: true,
            consistency: true,
            max_turn: 4,
            consistency_threshold: 0.30,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum MergeMode {
    #[default]
    #[serde(rename = "none")]
    None,
    #[serde(rename = "select+intent")]
    SelectIntent,
    #[serde(rename = "intent+ground")]
    IntentGround,
    #[serde(rename = "all")]
    All,
}

impl MergeMode {
    pub fn merges_selection(&self) -> bool {
        matches!(self, MergeMode::SelectIntent | MergeMode::All)
    }

    pub fn merges_grounding(&self) -> bool {
        matches!(self, MergeMode::IntentGround | MergeMode::All)
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub merge: MergeMode,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MetricsConfig {
    /// Boundary match tolerance in pixels; defaults to 0.8% of the diagonal.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub boundary_tolerance: Option<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BackendsConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub chat_url: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub similarity_url: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub segment_url: Option<String>,
    /// Scripted backend; takes precedence over the URLs.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mock_scenario: Option<PathBuf>,
    #[serde(skip_serializing)]
    pub bearer_token: Option<String>,
    /// Per-request timeout in seconds.
    pub timeout: f64,
    pub retry_attempts: u32,
    pub retry_backoff_ms: u64,
}

impl Default for BackendsConfig {
    fn default() -> Self {
        Self {
            chat_url: None,
            similarity_url: None,
            segment_url: None,
            mock_scenario: None,
            bearer_token: None,
            timeout: 120.0,
            retry_attempts: 3,
            retry_backoff_ms: 500,
        }
    }
}

impl BackendsConfig {
    pub fn retry_policy(&self) -> RetryPolicy {
        RetryPolicy {
            attempts: self.retry_attempts,
            backoff_base: Duration::from_millis(self.retry_backoff_ms),
        }
    }

    pub fn has_http(&self) -> bool {
        self.chat_url.is_some() || self.similarity_url.is_some() || self.segment_url.is_some()
    }

    pub fn http_backend(&self) -> HttpBackend {
        let mut b = HttpBackend::new(Duration::from_secs_f64(self.timeout));
        if let Some(u) = &self.chat_url {
            b = b.chat_url(u);
        }
        if let Some(u) = &self.similarity_url {
            b = b.similarity_url(u);
        }
        if let Some(u) = &self.segment_url {
            b = b.segment_url(u);
        }
        if let Some(t) = &self.bearer_token {
            b = b.bearer_token(t);
        }
        b
    }

    /// The configured backend: the mock scenario if set, otherwise HTTP.
    pub fn connect(&self) -> Result<Arc<dyn ModelBackend>> {
        if let Some(p) = &self.mock_scenario {
            return Ok(Arc::new(MockBackend::load(p)?));
        }
        if self.has_http() {
            return Ok(Arc::new(self.http_backend()));
        }
        Err(Error::Config(
            "no backend configured: set backends.mock_scenario or backend URLs".into(),
        ))
    }
}

impl Config {
    /// Loads a `.json` file as JSON and anything else as TOML. Relative paths
    /// inside the file resolve against the file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let is_json = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"));
        let mut cfg: Config = if is_json {
            serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?
        } else {
            toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?
        };
        if let Some(base) = path.parent() {
            cfg.resolve_paths(base);
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        if let Some(p) = self.backends.mock_scenario.as_mut() {
            fix(p);
        }
        if let Some(p) = self.prompts_dir.as_mut() {
            fix(p);
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        let s = &self.selection;
        if s.n == 0 {
            return bad("selection.n must be at least 1".into());
        }
        if s.k == 0 {
            return bad("selection.k must be at least 1".into());
        }
        if s.similarity_batch == 0 {
            return bad("selection.similarity_batch must be at least 1".into());
        }
        for (name, v) in [("alpha", s.alpha), ("beta", s.beta)] {
            if !v.is_finite() || v < 0.0 {
                return bad(format!("selection.{name} must be a finite non-negative number, got {v}"));
            }
        }
        if s.alpha + s.beta > 1.0 + 1e-12 {
            return bad(format!("selection.alpha + selection.beta must not exceed 1, got {}", s.alpha + s.beta));
        }
        let l = &self.layout;
        if l.cell_w < MIN_CELL_SIDE || l.cell_h < MIN_CELL_SIDE {
            return bad(format!(
                "layout cell {}x{} is below the {MIN_CELL_SIDE}px minimum",
                l.cell_w, l.cell_h
            ));
        }
        if self.agents.max_targets == 0 {
            return bad("agents.max_targets must be at least 1".into());
        }
        let t = self.reflection.consistency_threshold;
        if !(0.0..=1.0).contains(&t) {
            return bad(format!("reflection.consistency_threshold must lie in [0, 1], got {t}"));
        }
        let b = &self.backends;
        if b.retry_attempts == 0 {
            return bad("backends.retry_attempts must be at least 1".into());
        }
        if !b.timeout.is_finite() || b.timeout <= 0.0 {
            return bad("backends.timeout must be positive".into());
        }
        if self.input.max_frames == Some(0) {
            return bad("input.max_frames must be at least 1".into());
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_match_published_settings() {
        let c = Config::default();
        assert_eq!((c.selection.n, c.selection.k), (10, 5));
        assert_eq!((c.selection.alpha, c.selection.beta), (0.3, 0.7));
        assert_eq!(c.reflection.max_turn, 4);
        assert_eq!(c.reflection.consistency_threshold, 0.30);
        assert_eq!(c.agents.max_targets, 8);
        assert_eq!((c.layout.cell_w, c.layout.cell_h), (224, 224));
        assert_eq!(c.pipeline.merge, MergeMode::None);
        c.validate().unwrap();
    }

    #[test]
    fn toml_and_json_agree() {
        let t: Config = toml::from_str(
            r#"
            [selection]
            k = 3
            [pipeline]
            merge = "intent+ground"
            [layout]
            mode = "uniform_grid"
            "#,
        )
        .unwrap();
        let j: Config = serde_json::from_str(
            r#"{"selection":{"k":3},"pipeline":{"merge":"intent+ground"},"layout":{"mode":"uniform_grid"}}"#,
        )
        .unwrap();
        assert_eq!(t, j);
        assert_eq!(t.selection.n, 10);
        assert_eq!(t.pipeline.merge, MergeMode::IntentGround);
        assert_eq!(t.layout.mode, LayoutMode::UniformGrid);
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(toml::from_str::<Config>("[selection]\nkk = 3").is_err());
    }

    #[test]
    fn validation_errors() {
        let mut c = Config::default();
        c.selection.k = 0;
        assert!(c.validate().is_err());
        let mut c = Config::default();
        c.selection.alpha = 0.5;
        c.selection.beta = 0.6;
        assert!(c.validate().is_err());
        let mut c = Config::default();
        c.layout.cell_h = 31;
        assert!(c.validate().is_err());
        let mut c = Config::default();
        c.reflection.consistency_threshold = 1.5;
        assert!(c.validate().is_err());
    }

    #[test]
    fn relative_paths_resolve_against_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("engine.toml");
        std::fs::write(&path, "[backends]\nmock_scenario = \"s.json\"\n").unwrap();
        let c = Config::load(&path).unwrap();
        assert_eq!(c.backends.mock_scenario.unwrap(), dir.path().join("s.json"));
    }

    #[test]
    fn no_backend_is_a_config_error() {
        assert!(matches!(BackendsConfig::default().connect(), Err(Error::Config(_))));
    }
}
