//! Run directories: spec, verdict, time series, events, snapshots and a
//! checksummed manifest.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use chrono::{SecondsFormat, Utc};
use mcflab_core::fmt::{canonical, canonical_opt};
use mcflab_core::scenarios::{calibration, run_scenario, ScenarioOutcome, ScenarioSpec, Verdict, MONITOR_IDS};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

pub const MANIFEST: &str = "manifest.json";
pub const SPEC: &str = "spec.json";
pub const VERDICT: &str = "verdict.json";
pub const TIMESERIES: &str = "timeseries.csv";
pub const EVENTS: &str = "events.ndjson";
pub const SNAPSHOTS: &str = "snapshots";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Pass,
    Fail,
    Error,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FileEntry {
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MemberSummary {
    pub label: String,
    pub end: String,
    pub steps: u64,
    pub records: usize,
    pub extinction_time: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    /// SHA-256 of the bytes of `spec.json`.
    pub spec_sha256: String,
    pub scenario: String,
    pub seed: u64,
    pub resolution: usize,
    pub started_at: String,
    pub finished_at: String,
    pub status: RunStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    /// Label of the member whose records are in `snapshots/`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub primary_member: Option<String>,
    pub members: Vec<MemberSummary>,
    /// The spec with every default filled in.
    pub config: Value,
    /// Default constants used where the spec leaves them unset.
    pub calibration: BTreeMap<String, f64>,
    pub timeseries_columns: Vec<String>,
    /// Every file of the run directory except the manifest, sorted by path.
    pub files: Vec<FileEntry>,
}

impl RunManifest {
    pub fn read(dir: &Path) -> CliResult<Self> {
        let path = dir.join(MANIFEST);
        let text = fs::read_to_string(&path).map_err(CliError::io(&path))?;
        serde_json::from_str(&text).map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))
    }

    /// Inventory entries whose file is missing or differs from its checksum.
    pub fn gaps(&self, dir: &Path) -> Vec<String> {
        let mut gaps = Vec::new();
        for f in &self.files {
            match fs::read(dir.join(&f.path)) {
                Err(_) => gaps.push(format!("{}: missing", f.path)),
                Ok(bytes) if sha256_hex(&bytes) != f.sha256 => gaps.push(format!("{}: checksum mismatch", f.path)),
                Ok(_) => {}
            }
        }
        gaps
    }

    pub fn lists(&self, path: &str) -> bool {
        self.files.iter().any(|f| f.path == path)
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Overrides applied to a spec before validation.
#[derive(Clone, Copy, Debug, Default)]
pub struct SpecOverrides {
    pub seed: Option<u64>,
    pub resolution: Option<usize>,
}

impl SpecOverrides {
    pub fn apply(&self, spec: &mut ScenarioSpec) {
        if let Some(s) = self.seed {
            spec.seed = s;
        }
        if let Some(r) = self.resolution {
            spec.resolution = r;
        }
    }
}

pub fn load_spec(path: &Path, overrides: SpecOverrides) -> CliResult<ScenarioSpec> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    let mut spec = ScenarioSpec::from_json(&text)
        .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    overrides.apply(&mut spec);
    spec.validate()?;
    Ok(spec)
}

/// Errors unless `dir` is absent or an empty directory.
pub fn ensure_fresh(dir: &Path) -> CliResult<()> {
    match fs::read_dir(dir) {
        Ok(mut entries) => {
            if entries.next().is_some() {
                return Err(CliError::Usage(format!(
                    "output directory {} exists and is not empty",
                    dir.display()
                )));
            }
            Ok(())
        }
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(()),
        Err(e) if e.kind() == std::io::ErrorKind::NotADirectory => Err(CliError::Usage(format!(
            "output path {} is not a directory",
            dir.display()
        ))),
        Err(e) => Err(CliError::io(dir)(e)),
    }
}

fn now() -> String {
    Utc::now().to_rfc3339_opts(SecondsFormat::Millis, true)
}

/// Runs `spec` into `dir` and returns the verdict. Scenario configuration
/// errors leave nothing behind; runtime errors still produce a directory
/// with the spec, an error event and the manifest.
pub fn execute(spec: &ScenarioSpec, dir: &Path) -> CliResult<Verdict> {
    ensure_fresh(dir)?;
    let started_at = now();
    let result = run_scenario(spec);
    if let Err(e @ mcflab_core::Error::Config { .. }) = result {
        return Err(e.into());
    }
    let mut writer = DirWriter::create(dir)?;
    writer.write(SPEC, spec.to_canonical_json().as_bytes())?;
    let spec_sha256 = writer.files[0].sha256.clone();
    let mut manifest = RunManifest {
        tool: env!("CARGO_PKG_NAME").to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        spec_sha256,
        scenario: spec.params.id().to_string(),
        seed: spec.seed,
        resolution: spec.resolution,
        started_at,
        finished_at: String::new(),
        status: RunStatus::Error,
        error: None,
        primary_member: None,
        members: Vec::new(),
        config: serde_json::to_value(spec).expect("specs serialize"),
        calibration: calibration_table(),
        timeseries_columns: Vec::new(),
        files: Vec::new(),
    };
    let outcome = match result {
        Ok(o) => o,
        Err(e) => {
            let event = json!({"member": null, "step": null, "t": null, "kind": "error", "detail": e.to_string()});
            writer.write(EVENTS, format!("{event}\n").as_bytes())?;
            manifest.error = Some(e.to_string());
            writer.finish(manifest)?;
            return Err(e.into());
        }
    };
    let (columns, table) = timeseries_csv(&outcome);
    writer.write(VERDICT, verdict_json(&outcome.verdict).as_bytes())?;
    writer.write(TIMESERIES, table.as_bytes())?;
    writer.write(EVENTS, events_ndjson(&outcome).as_bytes())?;
    let primary = &outcome.members[outcome.primary];
    for (i, r) in primary.trace.records.iter().enumerate() {
        writer.write(&format!("{SNAPSHOTS}/{i:04}.json"), r.surface.to_json().as_bytes())?;
    }
    manifest.status = if outcome.verdict.pass { RunStatus::Pass } else { RunStatus::Fail };
    manifest.primary_member = Some(primary.label.clone());
    manifest.members = outcome
        .members
        .iter()
        .map(|m| MemberSummary {
            label: m.label.clone(),
            end: serde_json::to_value(m.trace.end).expect("serializes").as_str().unwrap_or_default().to_string(),
            steps: m.trace.steps,
            records: m.trace.records.len(),
            extinction_time: m.trace.extinction_time(),
        })
        .collect();
    manifest.timeseries_columns = columns;
    writer.finish(manifest)?;
    Ok(outcome.verdict)
}

fn calibration_table() -> BTreeMap<String, f64> {
    BTreeMap::from([
        ("height_c_hat".to_string(), calibration::HEIGHT_C_HAT),
        ("curvature_c_hat".to_string(), calibration::CURVATURE_C_HAT),
        ("become_c_hat".to_string(), calibration::BECOME_C_HAT),
        ("bounded_c_hat".to_string(), calibration::BOUNDED_C_HAT),
    ])
}

fn verdict_json(v: &Verdict) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("verdicts serialize");
    s.push('\n');
    s
}

struct DirWriter {
    dir: PathBuf,
    files: Vec<FileEntry>,
}

impl DirWriter {
    fn create(dir: &Path) -> CliResult<Self> {
        fs::create_dir_all(dir).map_err(CliError::io(dir))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            files: Vec::new(),
        })
    }

    fn write(&mut self, rel: &str, bytes: &[u8]) -> CliResult<()> {
        let path = self.dir.join(rel);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(CliError::io(parent))?;
        }
        fs::write(&path, bytes).map_err(CliError::io(&path))?;
        self.files.push(FileEntry {
            path: rel.to_string(),
            sha256: sha256_hex(bytes),
            bytes: bytes.len() as u64,
        });
        Ok(())
    }

    fn finish(mut self, mut manifest: RunManifest) -> CliResult<()> {
        self.files.sort_by(|a, b| a.path.cmp(&b.path));
        manifest.files = self.files;
        manifest.finished_at = now();
        let mut text = serde_json::to_string_pretty(&manifest).expect("manifests serialize");
        text.push('\n');
        let path = self.dir.join(MANIFEST);
        fs::write(&path, text).map_err(CliError::io(&path))
    }
}

const STAT_COLUMNS: [&str; 8] = ["member", "step", "t", "measure", "length", "area", "max_grad", "max_curv"];

/// One row per record of every member. Monitor margins get a
/// `margin_<id>` column for each monitor that reported; skipped checks
/// leave the cell empty.
pub fn timeseries_csv(outcome: &ScenarioOutcome) -> (Vec<String>, String) {
    let present: Vec<&str> = MONITOR_IDS
        .iter()
        .copied()
        .filter(|id| outcome.members.iter().any(|m| m.trace.reports().any(|r| r.monitor == *id)))
        .collect();
    let mut columns: Vec<String> = STAT_COLUMNS.iter().map(|c| c.to_string()).collect();
    columns.extend(present.iter().map(|id| format!("margin_{id}")));
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(&columns).expect("in-memory write");
    for m in &outcome.members {
        for r in &m.trace.records {
            let length = r.surface.as_curve().map(|c| c.length());
            let mut row = vec![
                m.label.clone(),
                r.step.to_string(),
                canonical(r.t),
                canonical(r.stats.measure),
                canonical_opt(length),
                canonical_opt(r.stats.area),
                canonical_opt(r.stats.max_grad),
                canonical(r.stats.max_curv),
            ];
            for id in &present {
                let margin = r
                    .reports
                    .iter()
                    .filter(|p| p.monitor == *id && p.skipped.is_none())
                    .map(|p| p.margin)
                    .reduce(f64::min);
                row.push(canonical_opt(margin));
            }
            w.write_record(&row).expect("in-memory write");
        }
    }
    let bytes = w.into_inner().expect("in-memory flush");
    (columns, String::from_utf8(bytes).expect("csv of utf-8 cells"))
}

#[derive(Serialize)]
struct EventLine<'a> {
    member: &'a str,
    step: u64,
    t: f64,
    kind: mcflab_core::flow::EventKind,
    detail: &'a str,
}

pub fn events_ndjson(outcome: &ScenarioOutcome) -> String {
    let mut out = String::new();
    for m in &outcome.members {
        for e in &m.trace.events {
            let line = EventLine {
                member: &m.label,
                step: e.step,
                t: e.t,
                kind: e.kind,
                detail: &e.detail,
            };
            out.push_str(&serde_json::to_string(&line).expect("events serialize"));
            out.push('\n');
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use mcflab_core::scenarios::ScenarioSpec;

    fn plane() -> ScenarioSpec {
        ScenarioSpec::from_json(r#"{"version": 1, "seed": 4, "resolution": 32, "params": {"scenario": "plane"}}"#)
            .unwrap()
    }

    #[test]
    fn sha256_of_empty_input() {
        assert_eq!(
            sha256_hex(b""),
            "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855"
        );
    }

    #[test]
    fn overrides_replace_seed_and_resolution() {
        let mut s = plane();
        SpecOverrides { seed: None, resolution: Some(48) }.apply(&mut s);
        assert_eq!((s.seed, s.resolution), (4, 48));
        SpecOverrides { seed: Some(9), resolution: None }.apply(&mut s);
        assert_eq!((s.seed, s.resolution), (9, 48));
    }

    #[test]
    fn fresh_directories() {
        let tmp = tempfile::TempDir::new().unwrap();
        assert!(ensure_fresh(&tmp.path().join("absent")).is_ok());
        assert!(ensure_fresh(tmp.path()).is_ok());
        fs::write(tmp.path().join("x"), "1").unwrap();
        assert_eq!(ensure_fresh(tmp.path()).unwrap_err().exit_code(), 2);
        assert_eq!(ensure_fresh(&tmp.path().join("x")).unwrap_err().exit_code(), 2);
    }

    #[test]
    fn timeseries_has_a_row_per_record() {
        let outcome = run_scenario(&plane()).unwrap();
        let (columns, table) = timeseries_csv(&outcome);
        assert_eq!(&columns[..3], ["member", "step", "t"]);
        assert!(columns.iter().any(|c| c == "margin_phi"));
        let lines: Vec<&str> = table.lines().collect();
        assert_eq!(lines[0], columns.join(","));
        assert_eq!(lines.len(), 1 + outcome.members[0].trace.records.len());
        // graphs have no length or area
        assert!(lines[1].starts_with("plane,0,0,") && lines[1].contains(",,,"));
        assert_eq!(timeseries_csv(&outcome).1, table);
    }

    #[test]
    fn manifest_gaps() {
        let tmp = tempfile::TempDir::new().unwrap();
        let spec = plane();
        let dir = tmp.path().join("run");
        execute(&spec, &dir).unwrap();
        let m = RunManifest::read(&dir).unwrap();
        assert!(m.gaps(&dir).is_empty());
        assert!(m.lists(SPEC) && m.lists(TIMESERIES) && !m.lists(MANIFEST));
        fs::write(dir.join(EVENTS), "{}\n").unwrap();
        assert_eq!(m.gaps(&dir), vec![format!("{EVENTS}: checksum mismatch")]);
    }
}
