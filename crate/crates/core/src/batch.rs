//! Concurrent evaluation over a manifest of samples, resumable through a
//! ledger of completed sample ids.

use std::collections::{HashMap, HashSet};
use std::fs::{self, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::backend::mock::MockBackend;
use crate::backend::ModelBackend;
use crate::config::Config;
use crate::error::{Error, Result};
use crate::metrics;
use crate::orchestrator::{self, write_json, SessionStatus};
use crate::video_io;

pub const BATCH_REPORT_SCHEMA: &str = "batch-report/1";
pub const LEDGER_FILE: &str = "completed.jsonl";
pub const REPORT_JSON: &str = "report.json";
pub const REPORT_CSV: &str = "report.csv";

/// One manifest line. Relative paths resolve against the manifest's directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestEntry {
    pub id: String,
    pub video: PathBuf,
    pub query: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gt: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mock_scenario: Option<PathBuf>,
}

fn resolve_path(base: &Path, p: &Path) -> PathBuf {
    if p.is_relative() {
        base.join(p)
    } else {
        p.to_path_buf()
    }
}

/// Reads a JSON-lines manifest; blank lines are skipped, ids must be unique
/// and usable as directory names.
pub fn load_manifest(path: &Path) -> Result<Vec<ManifestEntry>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let base = path.parent().unwrap_or(Path::new(""));
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let mut e: ManifestEntry = serde_json::from_str(line)
            .map_err(|err| Error::InvalidInput(format!("{} line {}: {err}", path.display(), n + 1)))?;
        if e.id.is_empty() || e.id.contains(['/', '\\']) || e.id == "." || e.id == ".." {
            return Err(Error::InvalidInput(format!("line {}: invalid sample id `{}`", n + 1, e.id)));
        }
        if !seen.insert(e.id.clone()) {
            return Err(Error::InvalidInput(format!("line {}: duplicate sample id `{}`", n + 1, e.id)));
        }
        e.video = resolve_path(base, &e.video);
        e.gt = e.gt.map(|p| resolve_path(base, &p));
        e.mock_scenario = e.mock_scenario.map(|p| resolve_path(base, &p));
        out.push(e);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SampleStatus {
    Accepted,
    Exhausted,
    Error,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleReport {
    pub id: String,
    pub status: SampleStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rounds_used: Option<u32>,
    pub accepted: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub keyframe_index: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub j: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub jf: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    /// Taken from the ledger of an earlier run.
    #[serde(default)]
    pub resumed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchReport {
    pub schema: String,
    pub samples: Vec<SampleReport>,
    pub completed: usize,
    pub errors: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mean_j: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mean_f: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mean_jf: Option<f64>,
}

impl BatchReport {
    fn from_samples(samples: Vec<SampleReport>) -> Self {
        let scored: Vec<&SampleReport> = samples.iter().filter(|s| s.jf.is_some()).collect();
        let mean = |f: fn(&SampleReport) -> Option<f64>| {
            (!scored.is_empty()).then(|| scored.iter().filter_map(|s| f(s)).sum::<f64>() / scored.len() as f64)
        };
        Self {
            schema: BATCH_REPORT_SCHEMA.to_string(),
            completed: samples.iter().filter(|s| s.status != SampleStatus::Error).count(),
            errors: samples.iter().filter(|s| s.status == SampleStatus::Error).count(),
            mean_j: mean(|s| s.j),
            mean_f: mean(|s| s.f),
            mean_jf: mean(|s| s.jf),
            samples,
        }
    }

    /// CSV with one row per sample and a closing mean row.
    pub fn to_csv(&self) -> String {
        let num = |v: Option<f64>| v.map(|x| format!("{x:.6}")).unwrap_or_default();
        let mut out = String::from("id,status,rounds,accepted,J,F,J&F\n");
        for s in &self.samples {
            let status = match s.status {
                SampleStatus::Accepted => "accepted",
                SampleStatus::Exhausted => "exhausted",
                SampleStatus::Error => "error",
            };
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                csv_field(&s.id),
                status,
                s.rounds_used.map(|r| r.to_string()).unwrap_or_default(),
                s.accepted,
                num(s.j),
                num(s.f),
                num(s.jf)
            ));
        }
        out.push_str(&format!(
            "mean,,,,{},{},{}\n",
            num(self.mean_j),
            num(self.mean_f),
            num(self.mean_jf)
        ));
        out
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn read_ledger(path: &Path) -> Result<HashMap<String, SampleReport>> {
    if !path.exists() {
        return Ok(HashMap::new());
    }
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut done = HashMap::new();
    for line in text.lines().filter(|l| !l.trim().is_empty()) {
        match serde_json::from_str::<SampleReport>(line) {
            Ok(r) => {
                done.insert(r.id.clone(), r);
            }
            Err(e) => log::warn!("ignoring unreadable ledger line in {}: {e}", path.display()),
        }
    }
    Ok(done)
}

struct Ledger {
    path: PathBuf,
    file: Mutex<fs::File>,
}

impl Ledger {
    fn open(path: PathBuf) -> Result<Self> {
        let file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(&path)
            .map_err(|e| Error::io(&path, e))?;
        Ok(Self {
            path,
            file: Mutex::new(file),
        })
    }

    fn append(&self, report: &SampleReport) -> Result<()> {
        let mut line = serde_json::to_string(report)?;
        line.push('\n');
        let mut f = self.file.lock().expect("ledger lock poisoned");
        f.write_all(line.as_bytes())
            .and_then(|_| f.flush())
            .map_err(|e| Error::io(&self.path, e))
    }
}

fn run_sample(
    entry: &ManifestEntry,
    config: &Config,
    shared: Option<&Arc<dyn ModelBackend>>,
    out_dir: &Path,
) -> SampleReport {
    let mut report = SampleReport {
        id: entry.id.clone(),
        status: SampleStatus::Error,
        rounds_used: None,
        accepted: false,
        keyframe_index: None,
        j: None,
        f: None,
        jf: None,
        error: None,
        resumed: false,
    };
    let sample_dir = out_dir.join("samples").join(&entry.id);
    match try_sample(entry, config, shared, &sample_dir, &mut report) {
        Ok(()) => {}
        Err(e) => {
            log::error!("sample {} failed: {e}", entry.id);
            report.status = SampleStatus::Error;
            report.error = Some(e.to_string());
        }
    }
    report
}

fn try_sample(
    entry: &ManifestEntry,
    config: &Config,
    shared: Option<&Arc<dyn ModelBackend>>,
    sample_dir: &Path,
    report: &mut SampleReport,
) -> Result<()> {
    let backend: Arc<dyn ModelBackend> = match (&entry.mock_scenario, shared) {
        (Some(p), _) => Arc::new(MockBackend::load(p)?),
        (None, Some(b)) => Arc::clone(b),
        (None, None) => {
            return Err(Error::Config(
                "sample has no mock_scenario and no shared backend is configured".into(),
            ))
        }
    };
    let clip = video_io::load_clip(&entry.video, config.input.max_frames)?;
    fs::create_dir_all(sample_dir).map_err(|e| Error::io(sample_dir, e))?;
    let mut result = match orchestrator::run_session(&clip, &entry.query, config, backend) {
        Ok(r) => r,
        Err(failure) => {
            failure.log.save(&sample_dir.join(orchestrator::SESSION_LOG_FILE))?;
            return Err(failure.error);
        }
    };
    orchestrator::write_session_outputs(&mut result, &clip, sample_dir, true)?;
    report.status = match result.status {
        SessionStatus::Accepted => SampleStatus::Accepted,
        _ => SampleStatus::Exhausted,
    };
    report.rounds_used = Some(result.rounds_used);
    report.accepted = result.accepted;
    report.keyframe_index = result.keyframe_index();
    if let Some(gt_dir) = &entry.gt {
        let gts = video_io::load_gt_masklets(gt_dir, Some(clip.source_indices()))?;
        let eval = metrics::evaluate(&result.masklets, &gts, config.metrics.boundary_tolerance)?;
        write_json(&sample_dir.join("metrics.json"), &eval)?;
        report.j = Some(eval.j);
        report.f = Some(eval.f);
        report.jf = Some(eval.jf);
    }
    Ok(())
}

/// Runs every manifest sample not already in the ledger with at most
/// `parallelism` sessions in flight. Samples naming a mock scenario use it;
/// the others share the backend from `config`. Per-sample failures become
/// error rows and are not ledgered, so a rerun retries them.
pub fn run_batch(manifest: &Path, config: &Config, out_dir: &Path, parallelism: usize) -> Result<BatchReport> {
    let entries = load_manifest(manifest)?;
    let shared = if config.backends.mock_scenario.is_some() || config.backends.has_http() {
        Some(config.backends.connect()?)
    } else {
        None
    };
    run_entries(&entries, config, shared, out_dir, parallelism)
}

/// [`run_batch`] over already-loaded entries and an explicit shared backend.
pub fn run_entries(
    entries: &[ManifestEntry],
    config: &Config,
    shared: Option<Arc<dyn ModelBackend>>,
    out_dir: &Path,
    parallelism: usize,
) -> Result<BatchReport> {
    config.validate()?;
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let ledger_path = out_dir.join(LEDGER_FILE);
    let done = read_ledger(&ledger_path)?;
    let ledger = Ledger::open(ledger_path)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(parallelism.max(1))
        .build()
        .map_err(|e| Error::InvalidInput(format!("cannot build worker pool: {e}")))?;
    let samples: Vec<Result<SampleReport>> = pool.install(|| {
        entries
            .par_iter()
            .map(|entry| {
                if let Some(prev) = done.get(&entry.id) {
                    log::info!("skipping completed sample {}", entry.id);
                    return Ok(SampleReport {
                        resumed: true,
                        ..prev.clone()
                    });
                }
                let report = run_sample(entry, config, shared.as_ref(), out_dir);
                if report.status != SampleStatus::Error {
                    ledger.append(&report)?;
                }
                Ok(report)
            })
            .collect()
    });
    let report = BatchReport::from_samples(samples.into_iter().collect::<Result<_>>()?);
    write_json(&out_dir.join(REPORT_JSON), &report)?;
    let csv = out_dir.join(REPORT_CSV);
    fs::write(&csv, report.to_csv()).map_err(|e| Error::io(&csv, e))?;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn manifest_paths_resolve_and_ids_are_checked() {
        let dir = tempfile::tempdir().unwrap();
        let m = dir.path().join("m.jsonl");
        fs::write(
            &m,
            "{\"id\":\"a\",\"video\":\"v/a\",\"query\":\"q\",\"gt\":\"/abs/gt\"}\n\n{\"id\":\"b\",\"video\":\"v/b\",\"query\":\"q\"}\n",
        )
        .unwrap();
        let e = load_manifest(&m).unwrap();
        assert_eq!(e.len(), 2);
        assert_eq!(e[0].video, dir.path().join("v/a"));
        assert_eq!(e[0].gt.as_deref(), Some(Path::new("/abs/gt")));

        fs::write(&m, "{\"id\":\"a\",\"video\":\"x\",\"query\":\"q\"}\n{\"id\":\"a\",\"video\":\"y\",\"query\":\"q\"}\n").unwrap();
        assert!(load_manifest(&m).is_err());
        fs::write(&m, "{\"id\":\"../x\",\"video\":\"x\",\"query\":\"q\"}\n").unwrap();
        assert!(load_manifest(&m).is_err());
        fs::write(&m, "{\"id\":\"x\",\"video\":\"x\"}\n").unwrap();
        assert!(load_manifest(&m).is_err());
    }

    #[test]
    fn csv_has_mean_row_and_quotes() {
        let s = |id: &str, jf: Option<f64>| SampleReport {
            id: id.into(),
            status: if jf.is_some() { SampleStatus::Accepted } else { SampleStatus::Error },
            rounds_used: jf.map(|_| 1),
            accepted: jf.is_some(),
            keyframe_index: None,
            j: jf,
            f: jf,
            jf,
            error: None,
            resumed: false,
        };
        let r = BatchReport::from_samples(vec![s("a,b", Some(1.0)), s("c", Some(0.5)), s("d", None)]);
        assert_eq!(r.mean_jf, Some(0.75));
        assert_eq!((r.completed, r.errors), (2, 1));
        let csv = r.to_csv();
        assert!(csv.contains("\"a,b\",accepted,1,true,1.000000"));
        assert!(csv.trim_end().ends_with("mean,,,,0.750000,0.750000,0.750000"));
    }
}
