//! Cartesian parameter grids over a base spec and their result table.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::spec::{ScenarioSpec, Verdict, SPEC_VERSION};
use crate::{Error, Result};

/// `{"version": 1, "base": <scenario spec>, "grid": {"params.l": [..]}}`;
/// grid keys are dotted paths into the base spec.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub version: u32,
    pub base: Value,
    #[serde(default)]
    pub grid: BTreeMap<String, Vec<Value>>,
}

/// One grid point: its axis values and the resolved spec.
pub type GridPoint = (BTreeMap<String, Value>, ScenarioSpec);

impl SweepSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        let s: SweepSpec =
            serde_json::from_str(text).map_err(|e| Error::config("sweep", e.to_string()))?;
        if s.version != SPEC_VERSION {
            return Err(Error::config("version", "unsupported sweep version, expected 1"));
        }
        Ok(s)
    }

    /// Every grid point in lexicographic axis order (last axis fastest). A
    /// grid without axes, or with an empty axis, has no points.
    pub fn expand(&self) -> Result<Vec<GridPoint>> {
        if self.grid.is_empty() || self.grid.values().any(Vec::is_empty) {
            return Ok(Vec::new());
        }
        let axes: Vec<(&String, &Vec<Value>)> = self.grid.iter().collect();
        let total: usize = axes.iter().map(|(_, v)| v.len()).product();
        let mut out = Vec::with_capacity(total);
        for mut k in 0..total {
            let mut idx = vec![0; axes.len()];
            for a in (0..axes.len()).rev() {
                idx[a] = k % axes[a].1.len();
                k /= axes[a].1.len();
            }
            let mut doc = self.base.clone();
            let mut assignment = BTreeMap::new();
            for (a, (path, values)) in axes.iter().enumerate() {
                let value = values[idx[a]].clone();
                set_path(&mut doc, path, value.clone())?;
                assignment.insert((*path).clone(), value);
            }
            let spec: ScenarioSpec = serde_json::from_value(doc)
                .map_err(|e| Error::config(format!("grid point {}", out.len()), e.to_string()))?;
            spec.validate()?;
            out.push((assignment, spec));
        }
        Ok(out)
    }
}

fn set_path(doc: &mut Value, path: &str, value: Value) -> Result<()> {
    let mut cur = doc;
    let parts: Vec<&str> = path.split('.').collect();
    for (i, p) in parts.iter().enumerate() {
        let obj = cur
            .as_object_mut()
            .ok_or_else(|| Error::config(format!("grid.{path}"), "path does not name an object field"))?;
        if i + 1 == parts.len() {
            obj.insert((*p).to_string(), value);
            return Ok(());
        }
        cur = obj.entry((*p).to_string()).or_insert_with(|| Value::Object(Default::default()));
    }
    Err(Error::config("grid", "empty path"))
}

/// Result of one grid point; `verdict` is `None` when the run errored.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub run: usize,
    pub assignment: BTreeMap<String, Value>,
    pub verdict: Option<Verdict>,
    pub error: Option<String>,
}

fn cell(v: &Value) -> String {
    match v {
        Value::Number(n) => n.as_f64().map_or_else(|| n.to_string(), crate::fmt::canonical),
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

fn quote(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Tidy CSV, one row per run sorted by run id: axis columns, `pass`, the
/// union of measured keys, then `error`.
pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut rows: Vec<&SweepRow> = rows.iter().collect();
    rows.sort_by_key(|r| r.run);
    let axes: BTreeSet<&String> = rows.iter().flat_map(|r| r.assignment.keys()).collect();
    let keys: BTreeSet<&String> = rows
        .iter()
        .filter_map(|r| r.verdict.as_ref())
        .flat_map(|v| v.measured.keys())
        .collect();
    let mut header = vec!["run".to_string()];
    header.extend(axes.iter().map(|a| quote(a)));
    header.push("pass".into());
    header.extend(keys.iter().map(|k| quote(k)));
    header.push("error".into());
    let mut out = header.join(",");
    out.push('\n');
    for r in rows {
        let mut line = vec![format!("run_{:04}", r.run)];
        line.extend(axes.iter().map(|a| r.assignment.get(*a).map_or(String::new(), |v| quote(&cell(v)))));
        line.push(r.verdict.as_ref().is_some_and(|v| v.pass).to_string());
        line.extend(keys.iter().map(|k| {
            r.verdict
                .as_ref()
                .and_then(|v| v.measured.get(*k))
                .map_or(String::new(), |x| crate::fmt::canonical(*x))
        }));
        line.push(quote(r.error.as_deref().unwrap_or("")));
        out.push_str(&line.join(","));
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = r#"{"version":1,"seed":1,"resolution":64,"params":{"scenario":"stay_graphical","lipschitz":1}}"#;

    fn sweep(grid: &str) -> SweepSpec {
        SweepSpec::from_json(&format!(r#"{{"version":1,"base":{BASE},"grid":{grid}}}"#)).unwrap()
    }

    #[test]
    fn cartesian_product_in_order() {
        let pts = sweep(r#"{"params.lipschitz":[0.5,1,2],"seed":[1,2]}"#).expand().unwrap();
        assert_eq!(pts.len(), 6);
        let got: Vec<(f64, u64)> = pts
            .iter()
            .map(|(_, s)| match s.params {
                crate::scenarios::ScenarioParams::StayGraphical { lipschitz, .. } => (lipschitz, s.seed),
                _ => unreachable!(),
            })
            .collect();
        assert_eq!(got, vec![(0.5, 1), (0.5, 2), (1.0, 1), (1.0, 2), (2.0, 1), (2.0, 2)]);
    }

    #[test]
    fn empty_grids_have_no_points() {
        assert!(sweep("{}").expand().unwrap().is_empty());
        assert!(sweep(r#"{"seed":[]}"#).expand().unwrap().is_empty());
        assert_eq!(sweep(r#"{"seed":[9]}"#).expand().unwrap().len(), 1);
    }

    #[test]
    fn invalid_points_are_config_errors() {
        assert!(sweep(r#"{"params.lipschitz":[9]}"#).expand().is_err());
        assert!(sweep(r#"{"seed.x":[1]}"#).expand().is_err());
    }

    #[test]
    fn csv_is_sorted_and_tidy() {
        let mut v = Verdict::new("stay_graphical");
        v.measure("kappa_hat", 0.1);
        let row = |run, x: f64, verdict: Option<Verdict>| SweepRow {
            run,
            assignment: [("params.lipschitz".to_string(), serde_json::json!(x))].into(),
            verdict,
            error: None,
        };
        let rows = vec![
            row(1, 2.0, None),
            row(0, 0.5, Some(v)),
        ];
        let csv = sweep_csv(&rows);
        assert_eq!(
            csv,
            "run,params.lipschitz,pass,kappa_hat,error\nrun_0000,0.5,true,0.1,\nrun_0001,2,false,,\n"
        );
        assert_eq!(sweep_csv(&[]), "run,pass,error\n");
    }
}
