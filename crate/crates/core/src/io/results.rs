//! Result sets and run reports.
//!
//! Result CSV columns: `left_id`, `right_id`, every left local as
//! `<left>.<column>`, every right local as `<right>.<column>`, then one column
//! per aggregate named after its AGG clause. Values use the shortest decimal
//! form that reads back to the same `f64`.

use std::io::{Read, Write};

use crate::algo::RunReport;
use crate::error::{AsjqError, Result};
use crate::model::{ColumnRole, JoinedTuple, ValidatedQuery};

/// Header of the result CSV for `q`.
pub fn result_header(q: &ValidatedQuery) -> Vec<String> {
    let spec = q.spec();
    let mut header = vec!["left_id".to_string(), "right_id".to_string()];
    for s in [&spec.left, &spec.right] {
        for c in &s.columns {
            if matches!(c.role, ColumnRole::Local { .. }) {
                header.push(format!("{}.{}", s.name, c.name));
            }
        }
    }
    let mut aggs = spec.aggregates.clone();
    aggs.sort_by_key(|a| a.slot);
    header.extend(aggs.into_iter().map(|a| a.name));
    header
}

/// Writes the result set in the order given.
pub fn write_results<W: Write>(writer: W, q: &ValidatedQuery, tuples: &[JoinedTuple]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(result_header(q))?;
    for t in tuples {
        let mut row = vec![t.left.to_string(), t.right.to_string()];
        row.extend(t.values.iter().map(f64::to_string));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a file written by [`write_results`].
pub fn read_results<R: Read>(reader: R) -> Result<Vec<JoinedTuple>> {
    let bad = |m: String| AsjqError::Load { path: "results".into(), message: m };
    let mut rdr = csv::Reader::from_reader(reader);
    let mut out = Vec::new();
    for record in rdr.records() {
        let record = record?;
        let num = |i: usize| -> Result<&str> {
            record.get(i).ok_or_else(|| bad(format!("row has only {} fields", record.len())))
        };
        let left = num(0)?.parse().map_err(|e| bad(format!("left_id: {e}")))?;
        let right = num(1)?.parse().map_err(|e| bad(format!("right_id: {e}")))?;
        let values = record
            .iter()
            .skip(2)
            .map(|f| f.parse::<f64>().map_err(|e| bad(format!("`{f}`: {e}"))))
            .collect::<Result<Vec<_>>>()?;
        out.push(JoinedTuple { left, right, values });
    }
    Ok(out)
}

/// Writes a run report as pretty-printed JSON.
pub fn write_report<W: Write>(mut writer: W, report: &RunReport) -> Result<()> {
    serde_json::to_writer_pretty(&mut writer, report)?;
    writeln!(writer)?;
    Ok(())
}
