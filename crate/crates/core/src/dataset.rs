//! Grade manifests for Messidor, IDRiD and DeepDRiD shaped datasets.
//!
//! A manifest is a UTF-8, comma-delimited file with a header row:
//!
//! ```text
//! id,image_path,dr_grade,dme_grade,split
//! img001,images/img001.jpg,3,2,TRAIN
//! ```
//!
//! `dme_grade` is present exactly when the schema grades DME. `split` is the
//! literal `TRAIN` or `TEST`.

use std::collections::HashSet;
use std::fmt;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetSchema {
    pub name: String,
    pub dr_classes: usize,
    pub dme_classes: Option<usize>,
}

impl DatasetSchema {
    /// DR 0-3, DME 0-2.
    pub fn messidor() -> Self {
        DatasetSchema {
            name: "messidor".into(),
            dr_classes: 4,
            dme_classes: Some(3),
        }
    }

    /// DR 0-4, DME 0-2.
    pub fn idrid() -> Self {
        DatasetSchema {
            name: "idrid".into(),
            dr_classes: 5,
            dme_classes: Some(3),
        }
    }

    /// DR 0-4, no DME grading.
    pub fn deepdrid() -> Self {
        DatasetSchema {
            name: "deepdrid".into(),
            dr_classes: 5,
            dme_classes: None,
        }
    }

    pub fn custom(name: &str, dr_classes: usize, dme_classes: Option<usize>) -> Result<Self> {
        if dr_classes < 2 {
            return Err(Error::Schema(format!(
                "a schema needs at least 2 DR classes, got {dr_classes}"
            )));
        }
        if let Some(m) = dme_classes {
            if m < 2 {
                return Err(Error::Schema(format!(
                    "a schema needs at least 2 DME classes, got {m}"
                )));
            }
        }
        Ok(DatasetSchema {
            name: name.to_string(),
            dr_classes,
            dme_classes,
        })
    }

    pub fn has_dme(&self) -> bool {
        self.dme_classes.is_some()
    }
}

/// Accepts `messidor`, `idrid`, `deepdrid`, `custom:<dr>` and `custom:<dr>:<dme>`.
impl FromStr for DatasetSchema {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "messidor" => return Ok(Self::messidor()),
            "idrid" => return Ok(Self::idrid()),
            "deepdrid" => return Ok(Self::deepdrid()),
            _ => {}
        }
        let parts: Vec<&str> = s.split(':').collect();
        let num = |t: &str| {
            t.parse::<usize>()
                .map_err(|_| Error::Schema(format!("bad class count '{t}' in schema '{s}'")))
        };
        match parts.as_slice() {
            ["custom", dr] => Self::custom(s, num(dr)?, None),
            ["custom", dr, dme] => Self::custom(s, num(dr)?, Some(num(dme)?)),
            _ => Err(Error::Schema(format!(
                "unknown schema '{s}' (expected messidor, idrid, deepdrid or custom:<dr>[:<dme>])"
            ))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Split {
    #[serde(rename = "TRAIN")]
    Train,
    #[serde(rename = "TEST")]
    Test,
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Split::Train => "TRAIN",
            Split::Test => "TEST",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestRecord {
    pub id: String,
    /// As written in the manifest; see [`ManifestRecord::resolved_path`].
    pub image_path: PathBuf,
    pub dr_grade: usize,
    pub dme_grade: Option<usize>,
    pub split: Split,
}

impl ManifestRecord {
    /// Resolves a relative `image_path` against the manifest's directory.
    pub fn resolved_path(&self, manifest_dir: &Path) -> PathBuf {
        if self.image_path.is_absolute() {
            self.image_path.clone()
        } else {
            manifest_dir.join(&self.image_path)
        }
    }
}

const REQUIRED: [&str; 4] = ["id", "image_path", "dr_grade", "split"];

struct Columns {
    id: usize,
    path: usize,
    dr: usize,
    dme: Option<usize>,
    split: usize,
}

fn columns(headers: &csv::StringRecord, schema: &DatasetSchema) -> Result<Columns> {
    let find = |name: &str| headers.iter().position(|h| h.trim() == name);
    for h in headers.iter() {
        let h = h.trim();
        if !REQUIRED.contains(&h) && h != "dme_grade" {
            return Err(Error::Schema(format!("unexpected manifest column '{h}'")));
        }
    }
    let req = |name: &str| {
        find(name).ok_or_else(|| Error::Schema(format!("manifest is missing the '{name}' column")))
    };
    let dme = find("dme_grade");
    match (schema.has_dme(), dme) {
        (true, None) => {
            return Err(Error::Schema(format!(
                "schema '{}' grades DME but the manifest has no dme_grade column",
                schema.name
            )))
        }
        (false, Some(_)) => {
            return Err(Error::Schema(format!(
                "schema '{}' has no DME grading but the manifest has a dme_grade column",
                schema.name
            )))
        }
        _ => {}
    }
    Ok(Columns {
        id: req("id")?,
        path: req("image_path")?,
        dr: req("dr_grade")?,
        dme,
        split: req("split")?,
    })
}

fn parse_grade(raw: &str, classes: usize, what: &str, line: u64) -> Result<usize> {
    let g: i64 = raw
        .trim()
        .parse()
        .map_err(|_| Error::Validation(format!("line {line}: {what} '{raw}' is not an integer")))?;
    if g < 0 || g as usize >= classes {
        return Err(Error::Validation(format!(
            "line {line}: {what} {g} outside 0..={}",
            classes - 1
        )));
    }
    Ok(g as usize)
}

/// Parses and validates a manifest from any reader.
pub fn parse_manifest(reader: impl Read, schema: &DatasetSchema) -> Result<Vec<ManifestRecord>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| Error::Parse {
            line: Some(1),
            message: e.to_string(),
        })?
        .clone();
    let cols = columns(&headers, schema)?;

    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for row in rdr.records() {
        let row = row.map_err(|e| Error::Parse {
            line: e.position().map(|p| p.line() as usize),
            message: e.to_string(),
        })?;
        let line = row.position().map_or(0, |p| p.line());
        let field = |i: usize| row.get(i).unwrap_or("").trim();

        let id = field(cols.id).to_string();
        if id.is_empty() {
            return Err(Error::Validation(format!("line {line}: empty id")));
        }
        if !seen.insert(id.clone()) {
            return Err(Error::Validation(format!(
                "line {line}: duplicate id '{id}'"
            )));
        }
        let image_path = PathBuf::from(field(cols.path));
        if image_path.as_os_str().is_empty() {
            return Err(Error::Validation(format!("line {line}: empty image_path")));
        }
        let dr_grade = parse_grade(field(cols.dr), schema.dr_classes, "dr_grade", line)?;
        let dme_grade = match (cols.dme, schema.dme_classes) {
            (Some(i), Some(m)) => Some(parse_grade(field(i), m, "dme_grade", line)?),
            _ => None,
        };
        let split = match field(cols.split) {
            "TRAIN" => Split::Train,
            "TEST" => Split::Test,
            other => {
                return Err(Error::Validation(format!(
                    "line {line}: split must be TRAIN or TEST, got '{other}'"
                )))
            }
        };
        out.push(ManifestRecord {
            id,
            image_path,
            dr_grade,
            dme_grade,
            split,
        });
    }
    Ok(out)
}

pub fn load_manifest(
    path: impl AsRef<Path>,
    schema: &DatasetSchema,
) -> Result<Vec<ManifestRecord>> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    parse_manifest(file, schema)
}

/// Writes records in manifest format; `dme_grade` is emitted when the schema grades DME.
pub fn write_manifest(
    records: &[ManifestRecord],
    schema: &DatasetSchema,
    writer: impl Write,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let wrap = |e: csv::Error| Error::contract(format!("manifest write failed: {e}"));
    if schema.has_dme() {
        w.write_record(["id", "image_path", "dr_grade", "dme_grade", "split"])
            .map_err(wrap)?;
    } else {
        w.write_record(REQUIRED).map_err(wrap)?;
    }
    for r in records {
        let path = r.image_path.to_string_lossy();
        let dr = r.dr_grade.to_string();
        let split = r.split.to_string();
        if schema.has_dme() {
            let dme = r.dme_grade.map(|g| g.to_string()).unwrap_or_default();
            w.write_record([r.id.as_str(), &path, &dr, &dme, &split])
                .map_err(wrap)?;
        } else {
            w.write_record([r.id.as_str(), &path, &dr, &split])
                .map_err(wrap)?;
        }
    }
    w.flush()
        .map_err(|e| Error::contract(format!("manifest write failed: {e}")))
}

/// Reads only `id` and `image_path` from a manifest, ignoring grade columns.
/// Relative paths are resolved against the manifest's directory.
pub fn load_image_list(path: impl AsRef<Path>) -> Result<Vec<(String, PathBuf)>> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let base = path.parent().unwrap_or(Path::new("."));
    let mut rdr = csv::Reader::from_reader(file);
    let headers = rdr
        .headers()
        .map_err(|e| Error::Parse {
            line: Some(1),
            message: e.to_string(),
        })?
        .clone();
    let pos = |name: &str| {
        headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| Error::Schema(format!("manifest is missing the '{name}' column")))
    };
    let (id_col, path_col) = (pos("id")?, pos("image_path")?);
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for row in rdr.records() {
        let row = row.map_err(|e| Error::Parse {
            line: e.position().map(|p| p.line() as usize),
            message: e.to_string(),
        })?;
        let line = row.position().map_or(0, |p| p.line());
        let id = row.get(id_col).unwrap_or("").trim().to_string();
        if id.is_empty() {
            return Err(Error::Validation(format!("line {line}: empty id")));
        }
        if !seen.insert(id.clone()) {
            return Err(Error::Validation(format!(
                "line {line}: duplicate id '{id}'"
            )));
        }
        let p = PathBuf::from(row.get(path_col).unwrap_or("").trim());
        let p = if p.is_absolute() { p } else { base.join(p) };
        out.push((id, p));
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SplitStats {
    pub count: usize,
    /// Share of all records, in percent.
    pub percent: f64,
    pub dr_histogram: Vec<usize>,
    pub dme_histogram: Option<Vec<usize>>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SplitReport {
    pub total: usize,
    pub train: SplitStats,
    pub test: SplitStats,
    pub warnings: Vec<String>,
}

/// Per-split counts and grade histograms.
pub fn split_summary(records: &[ManifestRecord], schema: &DatasetSchema) -> SplitReport {
    let total = records.len();
    let stats = |split: Split| {
        let mut dr = vec![0; schema.dr_classes];
        let mut dme = schema.dme_classes.map(|m| vec![0; m]);
        let mut count = 0;
        for r in records.iter().filter(|r| r.split == split) {
            count += 1;
            if let Some(h) = dr.get_mut(r.dr_grade) {
                *h += 1;
            }
            if let (Some(hist), Some(g)) = (dme.as_mut(), r.dme_grade) {
                if let Some(h) = hist.get_mut(g) {
                    *h += 1;
                }
            }
        }
        SplitStats {
            count,
            percent: if total == 0 {
                0.0
            } else {
                100.0 * count as f64 / total as f64
            },
            dr_histogram: dr,
            dme_histogram: dme,
        }
    };
    let (train, test) = (stats(Split::Train), stats(Split::Test));
    let mut warnings = Vec::new();
    if train.count == 0 {
        warnings.push("TRAIN split is empty".to_string());
    }
    if test.count == 0 {
        warnings.push("TEST split is empty".to_string());
    }
    SplitReport {
        total,
        train,
        test,
        warnings,
    }
}

impl fmt::Display for SplitReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "total  {}", self.total)?;
        for (name, s) in [("TRAIN", &self.train), ("TEST", &self.test)] {
            write!(
                f,
                "{name:<6} {:>5} {:>6.2}%  dr {:?}",
                s.count, s.percent, s.dr_histogram
            )?;
            if let Some(h) = &s.dme_histogram {
                write!(f, "  dme {h:?}")?;
            }
            writeln!(f)?;
        }
        for w in &self.warnings {
            writeln!(f, "warning: {w}")?;
        }
        Ok(())
    }
}
