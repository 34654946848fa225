//! Curve CSVs, a JSON summary and a gnuplot data file.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use actsearch_core::EngineKind;

use crate::error::{config, io, Result};
use crate::experiment::{RecallCurve, Summary};

pub const CURVES_FILE: &str = "curves.json";
pub const SUMMARY_FILE: &str = "summary.json";
pub const GNUPLOT_FILE: &str = "curves.dat";

/// `iter,recall,ideal,random` with one row per iteration.
pub fn curve_csv(c: &RecallCurve) -> String {
    let mut s = String::from("iter,recall,ideal,random\n");
    for t in 0..c.len() {
        let _ = writeln!(s, "{},{},{},{}", t + 1, c.found[t], c.ideal[t], c.random_expect[t]);
    }
    s
}

fn by_engine(curves: &[RecallCurve]) -> BTreeMap<String, Vec<RecallCurve>> {
    let mut m: BTreeMap<String, Vec<RecallCurve>> = BTreeMap::new();
    for c in curves {
        m.entry(c.engine.to_string()).or_default().push(c.clone());
    }
    m
}

pub fn summaries(curves: &[RecallCurve]) -> Result<Vec<Summary>> {
    if curves.is_empty() {
        return Err(config("no curves to report"));
    }
    by_engine(curves).values().map(|v| Summary::from_curves(v)).collect()
}

/// One summary line: `las  10 runs  T/2=20: 19.80 ± 0.42  T=40: 38.90 ± 1.10`.
pub fn format_summary(s: &Summary) -> String {
    format!(
        "{:<5} {} runs  T/2={}: {:.2} ± {:.2}  T={}: {:.2} ± {:.2}  (ideal {}, random {:.2})",
        s.engine.to_string(),
        s.runs,
        s.mid.iteration,
        s.mid.mean,
        s.mid.std,
        s.last.iteration,
        s.last.mean,
        s.last.std,
        s.last.ideal,
        s.last.random_expect,
    )
}

/// Gnuplot data: one block per engine separated by two blank lines, with
/// columns `iter mean std ideal random`.
pub fn gnuplot_data(curves: &[RecallCurve]) -> Result<String> {
    let mut s = String::new();
    for (engine, group) in by_engine(curves) {
        Summary::from_curves(&group)?;
        let _ = writeln!(s, "# engine {engine}, {} runs\n# iter mean std ideal random", group.len());
        let k = group.len() as f64;
        for t in 1..=group[0].len() {
            let vals: Vec<f64> = group.iter().map(|c| c.recall_at(t) as f64).collect();
            let mean = vals.iter().sum::<f64>() / k;
            let std = if group.len() > 1 {
                (vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (k - 1.0)).sqrt()
            } else {
                0.0
            };
            let _ = writeln!(
                s,
                "{t} {mean} {std} {} {}",
                group[0].ideal[t - 1],
                group[0].random_expect[t - 1]
            );
        }
        s.push_str("\n\n");
    }
    Ok(s)
}

fn write(path: PathBuf, body: &str, out: &mut Vec<PathBuf>) -> Result<()> {
    fs::write(&path, body).map_err(io(&path))?;
    out.push(path);
    Ok(())
}

/// Writes every artifact under `dir` and returns the paths written.
pub fn emit_report(curves: &[RecallCurve], dir: &Path) -> Result<Vec<PathBuf>> {
    let summary = summaries(curves)?;
    fs::create_dir_all(dir).map_err(io(dir))?;
    let mut out = Vec::new();
    for c in curves {
        let name = format!("curve_{}_seed{}.csv", c.engine, c.seed);
        write(dir.join(name), &curve_csv(c), &mut out)?;
    }
    write(dir.join(SUMMARY_FILE), &serde_json::to_string_pretty(&summary)?, &mut out)?;
    write(dir.join(CURVES_FILE), &serde_json::to_string(curves)?, &mut out)?;
    write(dir.join(GNUPLOT_FILE), &gnuplot_data(curves)?, &mut out)?;
    Ok(out)
}

pub fn load_curves(path: &Path) -> Result<Vec<RecallCurve>> {
    let text = fs::read_to_string(path).map_err(io(path))?;
    Ok(serde_json::from_str(&text)?)
}

/// Engines present, in report order.
pub fn engines(curves: &[RecallCurve]) -> Vec<EngineKind> {
    let mut v: Vec<EngineKind> = curves.iter().map(|c| c.engine).collect();
    v.sort_by_key(|e| e.to_string());
    v.dedup();
    v
}
