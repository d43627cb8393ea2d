//! CSV relations.
//!
//! The first row is the header. Fields are decimal numbers or `HH:MM` times,
//! which are stored as minutes since midnight. A column named `id` that the
//! schema does not use supplies row ids; otherwise rows are numbered from 0.

use std::collections::HashMap;
use std::io::{Read, Write};
use std::path::Path;

use crate::error::{AsjqError, Result};
use crate::model::{Relation, RelationSchema, SourceTuple};

/// Parses one field: a finite decimal, or `H:MM` / `HH:MM`.
pub fn parse_value(field: &str) -> std::result::Result<f64, String> {
    let s = field.trim();
    if let Some((h, m)) = s.split_once(':') {
        let hours: u32 = h.parse().map_err(|_| format!("invalid time `{s}`"))?;
        let minutes: u32 = m.parse().map_err(|_| format!("invalid time `{s}`"))?;
        if m.len() != 2 || minutes >= 60 {
            return Err(format!("invalid time `{s}`"));
        }
        return Ok(f64::from(hours * 60 + minutes));
    }
    match s.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(format!("`{s}` is not a finite number")),
    }
}

/// Reads a relation for `schema` from CSV text. `origin` names the source in
/// error messages.
pub fn read_relation<R: Read>(reader: R, schema: &RelationSchema, origin: &str) -> Result<Relation> {
    let fail = |message: String| AsjqError::Load { path: origin.to_string(), message };
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let header: Vec<String> =
        rdr.headers()?.iter().map(|h| h.trim().to_string()).collect();
    let mut index = HashMap::new();
    for (i, h) in header.iter().enumerate() {
        if index.insert(h.as_str(), i).is_some() {
            return Err(fail(format!("duplicate header column `{h}`")));
        }
    }
    let missing: Vec<&str> = schema
        .columns
        .iter()
        .map(|c| c.name.as_str())
        .filter(|n| !index.contains_key(n))
        .collect();
    if !missing.is_empty() {
        return Err(fail(format!("missing column(s): {}", missing.join(", "))));
    }
    let cols: Vec<usize> = schema.columns.iter().map(|c| index[c.name.as_str()]).collect();
    let id_col = match schema.column_index("id") {
        None => index.get("id").copied(),
        Some(_) => None,
    };

    let mut tuples = Vec::new();
    for (ordinal, record) in rdr.records().enumerate() {
        let record = record.map_err(|e| fail(e.to_string()))?;
        let line = record.position().map_or(ordinal + 2, |p| p.line() as usize);
        let field = |i: usize| -> Result<f64> {
            parse_value(&record[i])
                .map_err(|m| fail(format!("line {line}, column `{}`: {m}", header[i])))
        };
        let id = match id_col {
            Some(i) => {
                let v = field(i)?;
                if v < 0.0 || v.fract() != 0.0 || v > u64::MAX as f64 {
                    return Err(fail(format!("line {line}: id `{}` is not a row id", &record[i])));
                }
                v as u64
            }
            None => ordinal as u64,
        };
        let values = cols.iter().map(|&i| field(i)).collect::<Result<Vec<_>>>()?;
        tuples.push(SourceTuple::new(id, values));
    }
    Relation::new(schema.clone(), tuples).map_err(|e| fail(e.to_string()))
}

/// Loads the CSV file at `path` for `schema`.
pub fn load_relation(path: impl AsRef<Path>, schema: &RelationSchema) -> Result<Relation> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| AsjqError::Load {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    read_relation(file, schema, &path.display().to_string())
}

/// Writes a relation with an `id` column followed by the schema columns.
pub fn write_relation<W: Write>(writer: W, relation: &Relation) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec!["id".to_string()];
    header.extend(relation.schema.columns.iter().map(|c| c.name.clone()));
    w.write_record(&header)?;
    for t in relation.tuples() {
        let mut row = vec![t.id.to_string()];
        row.extend(t.values.iter().map(f64::to_string));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Column, Preference};

    fn schema() -> RelationSchema {
        RelationSchema::new(
            "A",
            vec![Column::join("arr", 0), Column::aggregate("cost", 0, Preference::Min)],
        )
    }

    #[test]
    fn times_and_ids() {
        let text = "id,arr,cost,extra\n11,08:40,162,x\n12,9:00,166.5,y\n";
        let rel = read_relation(text.as_bytes(), &schema(), "mem").unwrap();
        assert_eq!(rel.tuples()[0], SourceTuple::new(11, vec![520.0, 162.0]));
        assert_eq!(rel.tuples()[1], SourceTuple::new(12, vec![540.0, 166.5]));
    }

    #[test]
    fn ordinal_ids_and_empty() {
        let rel = read_relation("cost,arr\n1,2\n3,4\n".as_bytes(), &schema(), "mem").unwrap();
        assert_eq!(rel.ids(&[0, 1]), vec![0, 1]);
        assert_eq!(rel.tuples()[1].values, vec![4.0, 3.0]);
        let empty = read_relation("arr,cost\n".as_bytes(), &schema(), "mem").unwrap();
        assert!(empty.is_empty());
    }

    #[test]
    fn load_errors() {
        let e = read_relation("arr\n1\n".as_bytes(), &schema(), "f.csv").unwrap_err();
        assert!(e.to_string().contains("missing column(s): cost"), "{e}");
        let e = read_relation("arr,cost,arr\n1,2,3\n".as_bytes(), &schema(), "f.csv").unwrap_err();
        assert!(e.to_string().contains("duplicate header"), "{e}");
        let e = read_relation("arr,cost\n1,2\n3,abc\n".as_bytes(), &schema(), "f.csv").unwrap_err();
        assert!(e.to_string().contains("line 3, column `cost`"), "{e}");
        let e = read_relation("arr,cost\n1,2,3\n".as_bytes(), &schema(), "f.csv").unwrap_err();
        assert!(e.to_string().starts_with("f.csv"), "{e}");
        assert!(parse_value("7:75").is_err());
        assert!(parse_value("inf").is_err());
    }

    #[test]
    fn write_then_read() {
        let rel = read_relation("id,arr,cost\n3,0.1,1e-9\n1,2,-0.5\n".as_bytes(), &schema(), "m")
            .unwrap();
        let mut buf = Vec::new();
        write_relation(&mut buf, &rel).unwrap();
        let back = read_relation(buf.as_slice(), &schema(), "m").unwrap();
        assert_eq!(back.tuples(), rel.tuples());
    }
}
