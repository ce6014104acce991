use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use crate::run::{BenchRecord, Summary};
use crate::{BenchError, Result};

pub const CSV_HEADER: &str = "vector_index,delta_used,arnoldi_iters,lu_count,wall_time_s,residual_norm,cumulative_time_s";

/// Header, one row per record, then the summary as `# key = value` lines.
/// Floats use the shortest representation that parses back exactly.
pub fn write_csv<W: Write>(mut out: W, records: &[BenchRecord], summary: Option<&Summary>) -> Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for r in records {
        writeln!(
            out,
            "{},{:?},{},{},{:?},{:?},{:?}",
            r.vector_index, r.delta_used, r.arnoldi_iters, r.lu_count, r.wall_time_s, r.residual_norm, r.cumulative_time_s
        )?;
    }
    if let Some(s) = summary {
        for (k, v) in s.pairs() {
            writeln!(out, "# {k} = {v}")?;
        }
    }
    out.flush()?;
    Ok(())
}

pub fn emit_csv(records: &[BenchRecord], summary: &Summary, path: &Path) -> Result<()> {
    let file = std::fs::File::create(path)?;
    write_csv(std::io::BufWriter::new(file), records, Some(summary))
}

/// Parses records and the `#` summary lines written by [`write_csv`].
pub fn parse_csv(text: &str) -> Result<(Vec<BenchRecord>, BTreeMap<String, String>)> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == CSV_HEADER => {}
        _ => {
            return Err(BenchError::Csv {
                line: 1,
                msg: "missing or unexpected header".into(),
            })
        }
    }
    let mut records = Vec::new();
    let mut summary = BTreeMap::new();
    for (idx, line) in lines {
        let lineno = idx + 1;
        let err = |msg: String| BenchError::Csv { line: lineno, msg };
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(comment) = line.strip_prefix('#') {
            if let Some((k, v)) = comment.split_once('=') {
                summary.insert(k.trim().to_string(), v.trim().to_string());
            }
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 7 {
            return Err(err(format!("expected 7 fields, found {}", f.len())));
        }
        let int = |s: &str| s.parse::<usize>().map_err(|_| err(format!("bad integer {s:?}")));
        let real = |s: &str| s.parse::<f64>().map_err(|_| err(format!("bad number {s:?}")));
        records.push(BenchRecord {
            vector_index: int(f[0])?,
            delta_used: real(f[1])?,
            arnoldi_iters: int(f[2])?,
            lu_count: int(f[3])?,
            wall_time_s: real(f[4])?,
            residual_norm: real(f[5])?,
            cumulative_time_s: real(f[6])?,
        });
    }
    Ok((records, summary))
}
