use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use mcflab::plotdata::{plotdata, PlotKind};
use mcflab::rundir::{sha256_hex, RunManifest};
use mcflab::run_cli;
use tempfile::TempDir;

const PLANE: &str = r#"{"version": 1, "seed": 1, "resolution": 64, "params": {"scenario": "plane", "slope": 0.5}}"#;
const FLAT: &str = r#"{"version": 1, "seed": 1, "resolution": 64, "params": {"scenario": "flat_stay_graphical", "l": 0.05}}"#;
const SQUARE: &str = r#"{"version": 1, "seed": 1, "resolution": 256, "params": {"scenario": "shrinking_square", "epsilon": 0.1}}"#;

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

fn cli(args: &[&str]) -> i32 {
    run_cli(std::iter::once("mcflab").chain(args.iter().copied()))
}

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_mcflab"))
}

fn run(spec: &Path, out: &Path) -> i32 {
    cli(&["run", "--spec", spec.to_str().unwrap(), "--out", out.to_str().unwrap()])
}

fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let mut r = csv::Reader::from_path(path).unwrap();
    let header = r.headers().unwrap().iter().map(String::from).collect();
    let rows = r.records().map(|x| x.unwrap().iter().map(String::from).collect()).collect();
    (header, rows)
}

fn files_under(dir: &Path) -> Vec<String> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.push(p.strip_prefix(dir).unwrap().to_string_lossy().replace('\\', "/"));
            }
        }
    }
    out.sort();
    out
}

#[test]
fn plane_run_passes_and_manifest_matches_disk() {
    let tmp = TempDir::new().unwrap();
    let spec = write(tmp.path(), "plane.json", PLANE);
    let out = tmp.path().join("run");
    assert_eq!(run(&spec, &out), 0);

    let m = RunManifest::read(&out).unwrap();
    assert!(m.gaps(&out).is_empty());
    assert_eq!(m.spec_sha256, sha256_hex(&fs::read(out.join("spec.json")).unwrap()));
    let listed: Vec<String> = m.files.iter().map(|f| f.path.clone()).collect();
    let mut on_disk = files_under(&out);
    on_disk.retain(|p| p != "manifest.json");
    assert_eq!(listed, on_disk);
    assert_eq!(m.scenario, "plane");
    assert_eq!(m.members.len(), 1);

    let verdict: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("verdict.json")).unwrap()).unwrap();
    assert_eq!(verdict["pass"], true);
    let (header, rows) = read_csv(&out.join("timeseries.csv"));
    assert_eq!(header, m.timeseries_columns);
    assert_eq!(rows.len(), m.members[0].records);
    assert_eq!(listed.iter().filter(|p| p.starts_with("snapshots/")).count(), rows.len());
}

#[test]
fn written_spec_is_canonical_and_carries_overrides() {
    let tmp = TempDir::new().unwrap();
    let spec = write(tmp.path(), "plane.json", PLANE);
    let out = tmp.path().join("run");
    let code = cli(&[
        "run",
        "--spec",
        spec.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--seed-override",
        "9",
        "--resolution-override",
        "32",
    ]);
    assert_eq!(code, 0);
    let text = fs::read_to_string(out.join("spec.json")).unwrap();
    let parsed = mcflab_core::scenarios::ScenarioSpec::from_json(&text).unwrap();
    assert_eq!((parsed.seed, parsed.resolution), (9, 32));
    assert_eq!(parsed.to_canonical_json(), text);
}

#[test]
fn negative_radius_is_a_validation_error_naming_the_field() {
    let tmp = TempDir::new().unwrap();
    let spec = write(
        tmp.path(),
        "bad.json",
        r#"{"version": 1, "seed": 1, "resolution": 64, "params": {"scenario": "circle", "radius": -1}}"#,
    );
    let out = tmp.path().join("run");
    let o = bin().args(["run", "--spec"]).arg(&spec).arg("--out").arg(&out).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("params.radius"));
    assert!(!out.exists());
}

#[test]
fn malformed_spec_reports_line_and_column() {
    let tmp = TempDir::new().unwrap();
    let spec = write(tmp.path(), "bad.json", "{\n  \"version\": 1,\n  \"seed\": oops\n}");
    let o = bin().args(["run", "--spec"]).arg(&spec).arg("--out").arg(tmp.path().join("run")).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("line 3"), "{err}");
}

#[test]
fn unknown_scenario_field_is_rejected() {
    let tmp = TempDir::new().unwrap();
    let spec = write(
        tmp.path(),
        "bad.json",
        r#"{"version": 1, "seed": 1, "resolution": 64, "params": {"scenario": "plane", "tilt": 1}}"#,
    );
    assert_eq!(run(&spec, &tmp.path().join("run")), 2);
}

#[test]
fn refuses_non_empty_output_directory() {
    let tmp = TempDir::new().unwrap();
    let spec = write(tmp.path(), "plane.json", PLANE);
    let out = tmp.path().join("run");
    fs::create_dir(&out).unwrap();
    fs::write(out.join("keep.txt"), "x").unwrap();
    assert_eq!(run(&spec, &out), 2);
    assert_eq!(fs::read_to_string(out.join("keep.txt")).unwrap(), "x");
}

#[test]
fn scenario_precondition_failure_exits_2_without_output() {
    let tmp = TempDir::new().unwrap();
    let spec = write(
        tmp.path(),
        "ramp.json",
        r#"{"version": 1, "seed": 1, "resolution": 64, "params": {"scenario": "bounded_curvature", "lipschitz": 3}}"#,
    );
    let out = tmp.path().join("run");
    assert_eq!(run(&spec, &out), 2);
    assert!(!out.exists());
}

#[test]
fn default_output_root_comes_from_the_environment() {
    let tmp = TempDir::new().unwrap();
    let spec = write(tmp.path(), "plane.json", PLANE);
    let root = tmp.path().join("root");
    let o = bin().args(["run", "--spec"]).arg(&spec).env("MCFLAB_OUT", &root).output().unwrap();
    assert_eq!(o.status.code(), Some(0));
    assert!(root.join("plane_1").join("manifest.json").is_file());
}

#[test]
fn help_documents_flags_and_environment() {
    for sub in ["run", "sweep"] {
        let o = bin().args([sub, "--help"]).output().unwrap();
        assert_eq!(o.status.code(), Some(0));
        let text = String::from_utf8_lossy(&o.stdout);
        for flag in ["--spec", "--out", "--seed-override", "--resolution-override", "MCFLAB_OUT"] {
            assert!(text.contains(flag), "{sub} --help lacks {flag}");
        }
    }
    let o = bin().args(["sweep", "--help"]).output().unwrap();
    assert!(String::from_utf8_lossy(&o.stdout).contains("--parallelism"));
}

#[test]
fn square_run_has_strictly_decreasing_length() {
    let tmp = TempDir::new().unwrap();
    let spec = write(tmp.path(), "square.json", SQUARE);
    let out = tmp.path().join("run");
    assert_eq!(run(&spec, &out), 0);
    let (header, rows) = read_csv(&out.join("timeseries.csv"));
    let col = header.iter().position(|h| h == "length").unwrap();
    let lengths: Vec<f64> = rows.iter().map(|r| r[col].parse().unwrap()).collect();
    assert!(lengths.len() > 10);
    assert!(lengths.windows(2).all(|w| w[1] < w[0]));

    let env = plotdata(&out, PlotKind::Envelope).unwrap();
    let mut lines = env.lines();
    assert!(lines.next().unwrap().starts_with("t,R,r,min_dist_to_inner,max_dist_to_center"));
    let rows: Vec<Vec<f64>> = lines.map(|l| l.split(',').map(|c| c.parse().unwrap()).collect()).collect();
    assert!(!rows.is_empty());
    assert!(rows.iter().all(|r| r[0] < 0.5 && r[3] >= -1e-6));
}

#[test]
fn flat_run_margins_are_nonnegative() {
    let tmp = TempDir::new().unwrap();
    let spec = write(tmp.path(), "flat.json", FLAT);
    let out = tmp.path().join("run");
    assert_eq!(run(&spec, &out), 0);
    let table = plotdata(&out, PlotKind::Margins).unwrap();
    let mut lines = table.lines();
    assert_eq!(lines.next(), Some("member,step,t,monitor,margin"));
    let margins: Vec<f64> = lines.map(|l| l.rsplit(',').next().unwrap().parse().unwrap()).collect();
    assert!(!margins.is_empty());
    assert!(margins.iter().all(|m| *m >= 0.0), "{margins:?}");
}

#[test]
fn surfaces_list_every_snapshot() {
    let tmp = TempDir::new().unwrap();
    let spec = write(tmp.path(), "plane.json", PLANE);
    let out = tmp.path().join("run");
    assert_eq!(run(&spec, &out), 0);
    let table = plotdata(&out, PlotKind::Surfaces).unwrap();
    let mut lines = table.lines();
    assert_eq!(lines.next(), Some("snapshot,t,index,x0,x1"));
    let snaps: std::collections::BTreeSet<&str> = lines.map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(snaps.len(), RunManifest::read(&out).unwrap().members[0].records);
}

#[test]
fn plotdata_exit_codes() {
    let tmp = TempDir::new().unwrap();
    let spec = write(tmp.path(), "plane.json", PLANE);
    let out = tmp.path().join("run");
    assert_eq!(run(&spec, &out), 0);
    let dir = out.to_str().unwrap();
    let target = tmp.path().join("m.csv");
    assert_eq!(cli(&["plotdata", "--run", dir, "--kind", "margins", "--out", target.to_str().unwrap()]), 0);
    assert!(fs::read_to_string(&target).unwrap().starts_with("member,step,t,monitor,margin\n"));
    assert_eq!(cli(&["plotdata", "--run", dir, "--kind", "histogram"]), 2);
    assert_eq!(cli(&["plotdata", "--run", dir, "--kind", "envelope"]), 2);

    fs::write(out.join("verdict.json"), "{}").unwrap();
    fs::remove_file(out.join("snapshots/0003.json")).unwrap();
    let o = bin().args(["plotdata", "--run", dir, "--kind", "margins"]).output().unwrap();
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("verdict.json: checksum mismatch"), "{err}");
    assert!(err.contains("snapshots/0003.json: missing"), "{err}");

    fs::remove_file(out.join("manifest.json")).unwrap();
    assert_eq!(cli(&["plotdata", "--run", dir, "--kind", "surfaces"]), 1);
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(cli(&[]), 2);
    assert_eq!(cli(&["launch"]), 2);
    assert_eq!(cli(&["run"]), 2);
    assert_eq!(cli(&["sweep", "--spec", "x.json", "--parallelism", "0"]), 2);
    assert_eq!(cli(&["run", "--spec", "/nonexistent/spec.json"]), 2);
    assert_eq!(cli(&["--version"]), 0);
}

fn sweep(spec: &Path, out: &Path, parallelism: usize) -> i32 {
    cli(&[
        "sweep",
        "--spec",
        spec.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--parallelism",
        &parallelism.to_string(),
    ])
}

#[test]
fn one_point_grid_matches_a_plain_run() {
    let tmp = TempDir::new().unwrap();
    let spec = write(tmp.path(), "plane.json", PLANE);
    let grid = write(
        tmp.path(),
        "grid.json",
        &format!(r#"{{"version": 1, "base": {PLANE}, "grid": {{"seed": [1]}}}}"#),
    );
    let single = tmp.path().join("single");
    let swept = tmp.path().join("sweep");
    assert_eq!(run(&spec, &single), 0);
    assert_eq!(sweep(&grid, &swept, 1), 0);
    let member = swept.join("runs/run_0000");
    let a = RunManifest::read(&single).unwrap();
    let b = RunManifest::read(&member).unwrap();
    assert_eq!(a.files, b.files);
    assert_eq!(a.config, b.config);
    assert_eq!(files_under(&single), files_under(&member));
    let (header, rows) = read_csv(&swept.join("sweep.csv"));
    assert_eq!(&header[..3], ["run", "seed", "pass"]);
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0][2], "true");
}

#[test]
fn failing_points_are_recorded_and_the_sweep_continues() {
    let tmp = TempDir::new().unwrap();
    let grid = write(
        tmp.path(),
        "grid.json",
        &format!(
            r#"{{"version": 1, "base": {PLANE}, "grid": {{"params": [
                {{"scenario": "plane"}},
                {{"scenario": "bounded_curvature", "lipschitz": 3}},
                {{"scenario": "plane", "dimension": 2}}
            ]}}}}"#
        ),
    );
    let out = tmp.path().join("sweep");
    assert_eq!(sweep(&grid, &out, 2), 1);
    let (header, rows) = read_csv(&out.join("sweep.csv"));
    let pass = header.iter().position(|h| h == "pass").unwrap();
    let error = header.iter().position(|h| h == "error").unwrap();
    assert_eq!(rows.len(), 3);
    let passes: Vec<&str> = rows.iter().map(|r| r[pass].as_str()).collect();
    assert_eq!(passes, ["true", "false", "true"]);
    assert!(rows[1][error].contains("params.kappa_tilt"));
    assert!(out.join("runs/run_0002/manifest.json").is_file());
}

#[test]
fn empty_grid_is_an_empty_table() {
    let tmp = TempDir::new().unwrap();
    let grid = write(
        tmp.path(),
        "grid.json",
        &format!(r#"{{"version": 1, "base": {PLANE}, "grid": {{"params.slope": []}}}}"#),
    );
    let out = tmp.path().join("sweep");
    assert_eq!(sweep(&grid, &out, 1), 0);
    assert_eq!(fs::read_to_string(out.join("sweep.csv")).unwrap(), "run,pass,error\n");
}

#[test]
fn invalid_grid_point_is_a_usage_error() {
    let tmp = TempDir::new().unwrap();
    let grid = write(
        tmp.path(),
        "grid.json",
        &format!(r#"{{"version": 1, "base": {PLANE}, "grid": {{"resolution": [64, 2]}}}}"#),
    );
    let out = tmp.path().join("sweep");
    assert_eq!(sweep(&grid, &out, 1), 2);
    assert!(!out.exists());
}

#[test]
fn kappa_grid_has_three_rows_independent_of_parallelism() {
    let tmp = TempDir::new().unwrap();
    let grid = write(
        tmp.path(),
        "grid.json",
        r#"{"version": 1,
            "base": {"version": 1, "seed": 3, "resolution": 64, "params": {"scenario": "stay_graphical", "lipschitz": 1, "family_size": 4}},
            "grid": {"params.lipschitz": [0.5, 1, 2]}}"#,
    );
    let one = tmp.path().join("p1");
    let four = tmp.path().join("p4");
    assert_eq!(sweep(&grid, &one, 1), 0);
    assert_eq!(sweep(&grid, &four, 4), 0);
    let table = fs::read(one.join("sweep.csv")).unwrap();
    assert_eq!(table, fs::read(four.join("sweep.csv")).unwrap());
    let (header, rows) = read_csv(&one.join("sweep.csv"));
    assert_eq!(rows.len(), 3);
    assert!(header.iter().any(|h| h == "kappa_hat"));
    for run in ["run_0000", "run_0001", "run_0002"] {
        let a = fs::read(one.join("runs").join(run).join("timeseries.csv")).unwrap();
        let b = fs::read(four.join("runs").join(run).join("timeseries.csv")).unwrap();
        assert_eq!(a, b);
    }
}
