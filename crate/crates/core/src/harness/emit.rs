//! Result persistence: summary tables (CSV/JSON) and long-format plot data.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::error::{OtError, Result};
use crate::harness::{BenchCell, ComparisonSeries, RunRecord};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EmitFormat {
    Csv,
    Json,
}

impl std::str::FromStr for EmitFormat {
    type Err = OtError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(EmitFormat::Csv),
            "json" => Ok(EmitFormat::Json),
            other => Err(OtError::Domain(format!(
                "unknown format '{other}' (expected csv or json)"
            ))),
        }
    }
}

pub const RECORDS_CSV_HEADER: &str = "instance_kind,seed,n,fg_fraction,algorithm,eta,eps,\
eps_prime,iterations,oracle_calls,wall_seconds,final_d,final_cost,oracle_value,status,generator";

fn csv_field(s: &str) -> String {
    if s.contains(',') || s.contains('"') || s.contains('\n') {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn opt_u64(v: Option<u64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn opt_f64(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Stable-column-order CSV of the summary records.
pub fn records_csv(records: &[RunRecord]) -> String {
    let mut out = String::from(RECORDS_CSV_HEADER);
    out.push('\n');
    for r in records {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            csv_field(&r.instance_kind),
            opt_u64(r.seed),
            r.n,
            opt_f64(r.fg_fraction),
            csv_field(&r.algorithm),
            opt_f64(r.eta),
            opt_f64(r.eps),
            opt_f64(r.eps_prime),
            r.iterations,
            r.oracle_calls,
            r.wall_seconds,
            opt_f64(r.final_d),
            opt_f64(r.final_cost),
            opt_f64(r.oracle_value),
            csv_field(&r.status),
            csv_field(&r.generator),
        );
    }
    out
}

pub fn records_json(records: &[RunRecord]) -> Result<String> {
    serde_json::to_string_pretty(records).map_err(|e| OtError::Parse {
        offset: 0,
        message: e.to_string(),
    })
}

fn series_csv(cells: &[BenchCell]) -> String {
    let mut out = String::from("instance_kind,seed,algorithm,eta,eps,update_count,d\n");
    for cell in cells {
        let r = &cell.record;
        for p in &cell.series {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{}",
                csv_field(&r.instance_kind),
                opt_u64(r.seed),
                csv_field(&r.algorithm),
                opt_f64(r.eta),
                opt_f64(r.eps),
                p.update_count,
                p.d,
            );
        }
    }
    out
}

/// Competitive-ratio min/median/max per method pair at matched update
/// counts, pooled over the seeds of one instance family and grid value.
fn ratios_csv(cells: &[BenchCell]) -> String {
    // group key: (instance_kind, eta-or-eps tag) → method → seed → cell
    type Key = (String, String);
    type BySeed<'a> = BTreeMap<Option<u64>, &'a BenchCell>;
    let mut by_group: BTreeMap<Key, BTreeMap<String, BySeed>> = BTreeMap::new();
    for cell in cells {
        if cell.series.is_empty() {
            continue;
        }
        let r = &cell.record;
        let grid_tag = format!("eta={};eps={}", opt_f64(r.eta), opt_f64(r.eps));
        by_group
            .entry((r.instance_kind.clone(), grid_tag))
            .or_default()
            .entry(r.algorithm.clone())
            .or_default()
            .insert(r.seed, cell);
    }
    let mut out = String::from(
        "instance_kind,eta,eps,method_a,method_b,ratio_min,ratio_median,ratio_max,count\n",
    );
    for ((kind, _), methods) in &by_group {
        let names: Vec<&String> = methods.keys().collect();
        for (ai, a) in names.iter().enumerate() {
            for b in names.iter().skip(ai + 1) {
                // pool same-seed run pairs only
                let mut cmp = ComparisonSeries::new();
                for (seed, ca) in &methods[*a] {
                    if let Some(cb) = methods[*b].get(seed) {
                        cmp.add_aligned(&ca.series, &cb.series);
                    }
                }
                if let Some(stats) = cmp.stats() {
                    let rec = methods[*a].values().next().unwrap();
                    let _ = writeln!(
                        out,
                        "{},{},{},{},{},{},{},{},{}",
                        csv_field(kind),
                        opt_f64(rec.record.eta),
                        opt_f64(rec.record.eps),
                        csv_field(a),
                        csv_field(b),
                        stats.min,
                        stats.median,
                        stats.max,
                        stats.count,
                    );
                }
            }
        }
    }
    out
}

fn write_file(path: &Path, body: &str) -> Result<()> {
    std::fs::write(path, body).map_err(|e| OtError::io(path, e))
}

/// Writes the summary table and, when `plotdata` is set, the long-format
/// series and ratio-summary files. Returns the written paths.
pub fn emit_outputs(
    cells: &[BenchCell],
    out_dir: impl AsRef<Path>,
    format: EmitFormat,
    plotdata: bool,
) -> Result<Vec<PathBuf>> {
    if cells.is_empty() {
        return Err(OtError::Domain("emit_outputs: no records".into()));
    }
    let out_dir = out_dir.as_ref();
    std::fs::create_dir_all(out_dir).map_err(|e| OtError::io(out_dir, e))?;
    let records: Vec<RunRecord> = cells.iter().map(|c| c.record.clone()).collect();
    let mut written = Vec::new();
    match format {
        EmitFormat::Csv => {
            let path = out_dir.join("records.csv");
            write_file(&path, &records_csv(&records))?;
            written.push(path);
        }
        EmitFormat::Json => {
            let path = out_dir.join("records.json");
            write_file(&path, &records_json(&records)?)?;
            written.push(path);
        }
    }
    if plotdata {
        let series_path = out_dir.join("series.csv");
        write_file(&series_path, &series_csv(cells))?;
        written.push(series_path);
        let ratios_path = out_dir.join("ratios.csv");
        write_file(&ratios_path, &ratios_csv(cells))?;
        written.push(ratios_path);
    }
    Ok(written)
}
