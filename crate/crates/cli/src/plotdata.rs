//! Plot-ready CSV tables derived from a verified run directory.

use std::fs;
use std::path::Path;

use clap::ValueEnum;
use mcflab_core::fmt::canonical;
use mcflab_core::geometry::Surface;
use mcflab_core::scenarios::{square_envelope, ScenarioSpec};

use crate::error::{CliError, CliResult};
use crate::rundir::{RunManifest, SNAPSHOTS, SPEC, TIMESERIES};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum PlotKind {
    /// Vertex lists of every snapshot: `snapshot,t,index,x0,..`.
    Surfaces,
    /// Monitor margins in long format: `member,step,t,monitor,margin`.
    Margins,
    /// Inner and outer envelopes of a shrinking square run.
    Envelope,
}

/// Reads the manifest of `dir` and checks every listed file against its
/// checksum, plus the presence of `required`.
pub fn verify(dir: &Path, required: &[&str]) -> CliResult<RunManifest> {
    let manifest = match RunManifest::read(dir) {
        Ok(m) => m,
        Err(CliError::Io { .. }) => {
            return Err(CliError::Incomplete {
                dir: dir.to_path_buf(),
                gaps: vec!["manifest.json: missing".into()],
            })
        }
        Err(e) => return Err(e),
    };
    let mut gaps = manifest.gaps(dir);
    gaps.extend(
        required
            .iter()
            .filter(|r| !manifest.lists(r))
            .map(|r| format!("{r}: not in manifest")),
    );
    if gaps.is_empty() {
        Ok(manifest)
    } else {
        Err(CliError::Incomplete {
            dir: dir.to_path_buf(),
            gaps,
        })
    }
}

pub fn plotdata(dir: &Path, kind: PlotKind) -> CliResult<String> {
    let required: &[&str] = match kind {
        PlotKind::Surfaces => &[SPEC],
        PlotKind::Margins => &[TIMESERIES],
        PlotKind::Envelope => &[SPEC],
    };
    let manifest = verify(dir, required)?;
    match kind {
        PlotKind::Surfaces => surfaces(dir, &manifest),
        PlotKind::Margins => margins(dir),
        PlotKind::Envelope => envelope(dir, &manifest),
    }
}

fn read(dir: &Path, rel: &str) -> CliResult<String> {
    let path = dir.join(rel);
    fs::read_to_string(&path).map_err(CliError::io(path))
}

fn snapshots(dir: &Path, manifest: &RunManifest) -> CliResult<Vec<(String, Surface)>> {
    let prefix = format!("{SNAPSHOTS}/");
    manifest
        .files
        .iter()
        .filter_map(|f| f.path.strip_prefix(&prefix).map(|name| (name, &f.path)))
        .map(|(name, path)| {
            let surface = Surface::from_json(&read(dir, path)?)
                .map_err(|e| CliError::Runtime(format!("{path}: {e}")))?;
            Ok((name.trim_end_matches(".json").to_string(), surface))
        })
        .collect()
}

fn writer() -> csv::Writer<Vec<u8>> {
    csv::Writer::from_writer(Vec::new())
}

fn finish(w: csv::Writer<Vec<u8>>) -> String {
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv of utf-8 cells")
}

fn surfaces(dir: &Path, manifest: &RunManifest) -> CliResult<String> {
    let snaps = snapshots(dir, manifest)?;
    let ambient = snaps
        .iter()
        .map(|(_, s)| match s {
            Surface::Graph(g) => g.dim() + 1,
            Surface::Curve(_) => 2,
        })
        .max()
        .unwrap_or(2);
    let mut w = writer();
    let mut header = vec!["snapshot".to_string(), "t".into(), "index".into()];
    header.extend((0..ambient).map(|k| format!("x{k}")));
    w.write_record(&header).expect("in-memory write");
    for (name, s) in &snaps {
        let t = canonical(s.time());
        let points: Vec<Vec<f64>> = match s {
            Surface::Graph(g) => g
                .active_nodes()
                .map(|i| {
                    let mut p = g.node_position(i);
                    p.push(g.values()[i]);
                    p
                })
                .collect(),
            Surface::Curve(c) => c.vertices().iter().map(|v| v.to_vec()).collect(),
        };
        for (i, p) in points.iter().enumerate() {
            let mut row = vec![name.clone(), t.clone(), i.to_string()];
            row.extend((0..ambient).map(|k| p.get(k).map_or(String::new(), |x| canonical(*x))));
            w.write_record(&row).expect("in-memory write");
        }
    }
    Ok(finish(w))
}

fn margins(dir: &Path) -> CliResult<String> {
    let text = read(dir, TIMESERIES)?;
    let bad = |e: csv::Error| CliError::Runtime(format!("{TIMESERIES}: {e}"));
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let header = r.headers().map_err(bad)?.clone();
    let column = |name: &str| header.iter().position(|h| h == name);
    let (Some(member), Some(step), Some(t)) = (column("member"), column("step"), column("t")) else {
        return Err(CliError::Runtime(format!("{TIMESERIES}: missing member/step/t columns")));
    };
    let monitors: Vec<(usize, &str)> = header
        .iter()
        .enumerate()
        .filter_map(|(i, h)| h.strip_prefix("margin_").map(|id| (i, id)))
        .collect();
    let mut w = writer();
    w.write_record(["member", "step", "t", "monitor", "margin"]).expect("in-memory write");
    for rec in r.records() {
        let rec = rec.map_err(bad)?;
        for &(i, id) in &monitors {
            let cell = &rec[i];
            if !cell.is_empty() {
                w.write_record([&rec[member], &rec[step], &rec[t], id, cell]).expect("in-memory write");
            }
        }
    }
    Ok(finish(w))
}

fn envelope(dir: &Path, manifest: &RunManifest) -> CliResult<String> {
    let spec = ScenarioSpec::from_json(&read(dir, SPEC)?).map_err(|e| CliError::Runtime(format!("{SPEC}: {e}")))?;
    let mcflab_core::scenarios::ScenarioParams::ShrinkingSquare { epsilon } = spec.params else {
        return Err(CliError::Usage(format!(
            "envelope data exists only for shrinking_square runs, not {}",
            manifest.scenario
        )));
    };
    let snaps = snapshots(dir, manifest)?;
    let r0 = snaps
        .first()
        .and_then(|(_, s)| s.as_curve())
        .map(|c| square_envelope(0.0, c, epsilon)[4]);
    let mut w = writer();
    w.write_record(["t", "R", "r", "min_dist_to_inner", "max_dist_to_center", "R_comparison"])
        .expect("in-memory write");
    for (_, s) in &snaps {
        let Some(c) = s.as_curve() else { continue };
        if s.time() >= 0.5 {
            break;
        }
        let [t, r, big_r, near, far] = square_envelope(s.time(), c, epsilon);
        let cmp = r0.map_or(f64::NAN, |r0| (r0 * r0 - 2.0 * t).max(0.0).sqrt());
        let row = [t, big_r, r, near - r, far, cmp].map(canonical);
        w.write_record(&row).expect("in-memory write");
    }
    Ok(finish(w))
}
