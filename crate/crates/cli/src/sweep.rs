//! Parameter sweeps: one run directory per grid point plus `sweep.csv`.

use std::fs;
use std::path::Path;

use mcflab_core::scenarios::{sweep_csv, SweepRow, SweepSpec};
use rayon::prelude::*;

use crate::error::{CliError, CliResult};
use crate::rundir::{ensure_fresh, execute, SpecOverrides};

pub const SWEEP_CSV: &str = "sweep.csv";
pub const SWEEP_SPEC: &str = "sweep.json";

/// Runs every grid point of the sweep at `spec_path` into `out/runs/run_NNNN`
/// on `parallelism` threads. Failed or erroring runs are recorded in their
/// row. Returns the rows, sorted by run.
pub fn run_sweep(spec_path: &Path, out: &Path, parallelism: usize, overrides: SpecOverrides) -> CliResult<Vec<SweepRow>> {
    if parallelism == 0 {
        return Err(CliError::Usage("--parallelism must be at least 1".into()));
    }
    let text = fs::read_to_string(spec_path).map_err(|e| CliError::Usage(format!("{}: {e}", spec_path.display())))?;
    let sweep = SweepSpec::from_json(&text).map_err(|e| CliError::Usage(format!("{}: {e}", spec_path.display())))?;
    let mut points = sweep.expand()?;
    for (_, spec) in &mut points {
        overrides.apply(spec);
        spec.validate()?;
    }
    ensure_fresh(out)?;
    fs::create_dir_all(out).map_err(CliError::io(out))?;
    let copy = out.join(SWEEP_SPEC);
    fs::write(&copy, &text).map_err(CliError::io(&copy))?;

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(parallelism)
        .build()
        .map_err(|e| CliError::Runtime(format!("thread pool: {e}")))?;
    let rows: Vec<SweepRow> = pool.install(|| {
        points
            .into_par_iter()
            .enumerate()
            .map(|(run, (assignment, spec))| {
                let dir = out.join("runs").join(format!("run_{run:04}"));
                let (verdict, error) = match execute(&spec, &dir) {
                    Ok(v) => (Some(v), None),
                    Err(e) => (None, Some(e.to_string())),
                };
                SweepRow {
                    run,
                    assignment,
                    verdict,
                    error,
                }
            })
            .collect()
    });
    let table = out.join(SWEEP_CSV);
    fs::write(&table, sweep_csv(&rows)).map_err(CliError::io(&table))?;
    Ok(rows)
}

pub fn all_pass(rows: &[SweepRow]) -> bool {
    rows.iter().all(|r| r.verdict.as_ref().is_some_and(|v| v.pass))
}

#[cfg(test)]
mod tests {
    use super::*;
    use mcflab_core::scenarios::Verdict;
    use std::collections::BTreeMap;

    fn row(run: usize, pass: Option<bool>) -> SweepRow {
        SweepRow {
            run,
            assignment: BTreeMap::new(),
            verdict: pass.map(|p| {
                let mut v = Verdict::new("plane");
                v.pass = p;
                v
            }),
            error: pass.is_none().then(|| "boom".to_string()),
        }
    }

    #[test]
    fn all_pass_needs_every_verdict() {
        assert!(all_pass(&[]));
        assert!(all_pass(&[row(0, Some(true)), row(1, Some(true))]));
        assert!(!all_pass(&[row(0, Some(true)), row(1, Some(false))]));
        assert!(!all_pass(&[row(0, Some(true)), row(1, None)]));
    }

    #[test]
    fn zero_parallelism_is_rejected() {
        let tmp = tempfile::TempDir::new().unwrap();
        let err = run_sweep(&tmp.path().join("s.json"), tmp.path(), 0, SpecOverrides::default()).unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }
}
