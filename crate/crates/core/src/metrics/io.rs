//! Predictions file reader.
//!
//! ```text
//! id,true_dr,p_dr_0,...,p_dr_{k-1}[,true_dme,p_dme_0,...,p_dme_{m-1}]
//! ```

use std::io::Read;
use std::path::Path;

use super::PredictionRecord;
use crate::dataset::DatasetSchema;
use crate::{Error, Result};

fn expected_header(schema: &DatasetSchema, with_dme: bool) -> Vec<String> {
    let mut h = vec!["id".to_string(), "true_dr".to_string()];
    h.extend((0..schema.dr_classes).map(|i| format!("p_dr_{i}")));
    if with_dme {
        if let Some(m) = schema.dme_classes {
            h.push("true_dme".to_string());
            h.extend((0..m).map(|i| format!("p_dme_{i}")));
        }
    }
    h
}

/// Parses a predictions file. DME columns are optional even for schemas that
/// grade DME; without them the records are DR-only.
pub fn parse_predictions(
    reader: impl Read,
    schema: &DatasetSchema,
) -> Result<Vec<PredictionRecord>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(reader);
    let header: Vec<String> = rdr
        .headers()
        .map_err(|e| Error::Parse {
            line: Some(1),
            message: e.to_string(),
        })?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    let dr_only = expected_header(schema, false);
    let with_dme = expected_header(schema, true);
    let has_dme = if header == with_dme && schema.has_dme() {
        true
    } else if header == dr_only {
        false
    } else {
        return Err(Error::Parse {
            line: Some(1),
            message: format!(
                "header does not match schema '{}': expected '{}'",
                schema.name,
                with_dme.join(",")
            ),
        });
    };

    let k = schema.dr_classes;
    let mut out = Vec::new();
    let mut seen = std::collections::HashSet::new();
    for row in rdr.records() {
        let row = row.map_err(|e| Error::Parse {
            line: e.position().map(|p| p.line() as usize),
            message: e.to_string(),
        })?;
        let line = row.position().map(|p| p.line() as usize);
        let bad = |message: String| Error::Parse { line, message };
        let int = |i: usize| -> Result<usize> {
            let raw = row.get(i).unwrap_or("").trim();
            raw.parse().map_err(|_| {
                bad(format!(
                    "column '{}' is not a class label: '{raw}'",
                    header[i]
                ))
            })
        };
        let float = |i: usize| -> Result<f64> {
            let raw = row.get(i).unwrap_or("").trim();
            raw.parse()
                .map_err(|_| bad(format!("column '{}' is not a number: '{raw}'", header[i])))
        };
        let id = row.get(0).unwrap_or("").trim().to_string();
        if id.is_empty() {
            return Err(bad("empty id".to_string()));
        }
        if !seen.insert(id.clone()) {
            return Err(bad(format!("duplicate id '{id}'")));
        }
        let true_dr = int(1)?;
        let prob_dr = (2..2 + k).map(float).collect::<Result<Vec<_>>>()?;
        let dme = if has_dme {
            let m = schema.dme_classes.unwrap_or(0);
            let base = 2 + k;
            let t = int(base)?;
            let p = (base + 1..base + 1 + m)
                .map(float)
                .collect::<Result<Vec<_>>>()?;
            Some((t, p))
        } else {
            None
        };
        let rec = PredictionRecord::new(id, true_dr, prob_dr, dme).map_err(|e| match e {
            Error::Validation(m) => bad(m),
            other => other,
        })?;
        out.push(rec);
    }
    Ok(out)
}

pub fn load_predictions(
    path: impl AsRef<Path>,
    schema: &DatasetSchema,
) -> Result<Vec<PredictionRecord>> {
    let path = path.as_ref();
    let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    parse_predictions(f, schema)
}
