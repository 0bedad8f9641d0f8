//! Plain-text tensor fixtures.
//!
//! A file holds one or more named tensors. Each starts with a header line
//! `tensor <name> <dim>...` followed by the values, row-major, separated by
//! any whitespace. Lines starting with `#` are comments.
//!
//! ```text
//! # channel MLP for C = 2, r = 1
//! tensor cw.w1 2 2
//! 0.5 -1.0
//! 0.25 0.0
//! ```

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use super::tensor::{Matrix, Tensor3};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct NamedTensor {
    pub name: String,
    pub shape: Vec<usize>,
    pub values: Vec<f64>,
}

pub fn parse_tensor_text(text: &str) -> Result<Vec<NamedTensor>> {
    let mut out: Vec<NamedTensor> = Vec::new();
    let mut expected = 0usize;
    let parse_err = |line: usize, message: String| Error::Parse {
        line: Some(line),
        message,
    };
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut words = line.split_whitespace();
        if line.starts_with("tensor") {
            if let Some(prev) = out.last() {
                if prev.values.len() != expected {
                    return Err(parse_err(
                        line_no,
                        format!(
                            "tensor '{}' has {} values, expected {expected}",
                            prev.name,
                            prev.values.len()
                        ),
                    ));
                }
            }
            words.next();
            let name = words
                .next()
                .ok_or_else(|| parse_err(line_no, "tensor header without a name".into()))?
                .to_string();
            let shape = words
                .map(|w| {
                    w.parse::<usize>()
                        .ok()
                        .filter(|&d| d > 0)
                        .ok_or_else(|| parse_err(line_no, format!("bad dimension '{w}'")))
                })
                .collect::<Result<Vec<_>>>()?;
            if shape.is_empty() {
                return Err(parse_err(line_no, format!("tensor '{name}' has no shape")));
            }
            if out.iter().any(|t| t.name == name) {
                return Err(parse_err(line_no, format!("duplicate tensor '{name}'")));
            }
            expected = shape.iter().product();
            out.push(NamedTensor {
                name,
                shape,
                values: Vec::with_capacity(expected),
            });
        } else {
            let current = out
                .last_mut()
                .ok_or_else(|| parse_err(line_no, "values before any tensor header".into()))?;
            for w in words {
                let v: f64 = w
                    .parse()
                    .ok()
                    .filter(|v: &f64| v.is_finite())
                    .ok_or_else(|| parse_err(line_no, format!("bad value '{w}'")))?;
                current.values.push(v);
            }
        }
    }
    if let Some(prev) = out.last() {
        if prev.values.len() != expected {
            return Err(Error::Parse {
                line: None,
                message: format!(
                    "tensor '{}' has {} values, expected {expected}",
                    prev.name,
                    prev.values.len()
                ),
            });
        }
    }
    Ok(out)
}

/// Renders tensors so that [`parse_tensor_text`] reads them back exactly;
/// the last dimension is one line.
pub fn write_tensor_text(tensors: &[NamedTensor]) -> String {
    let mut s = String::new();
    for t in tensors {
        let dims: Vec<String> = t.shape.iter().map(|d| d.to_string()).collect();
        let _ = writeln!(s, "tensor {} {}", t.name, dims.join(" "));
        let row = *t.shape.last().unwrap_or(&1);
        for chunk in t.values.chunks(row.max(1)) {
            let vals: Vec<String> = chunk.iter().map(|v| format!("{v:?}")).collect();
            let _ = writeln!(s, "{}", vals.join(" "));
        }
    }
    s
}

/// Name-indexed collection of fixture tensors.
#[derive(Clone, Debug, Default)]
pub struct TensorSet {
    tensors: BTreeMap<String, NamedTensor>,
}

impl TensorSet {
    pub fn parse(text: &str) -> Result<Self> {
        Ok(TensorSet {
            tensors: parse_tensor_text(text)?
                .into_iter()
                .map(|t| (t.name.clone(), t))
                .collect(),
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn get(&self, name: &str) -> Result<&NamedTensor> {
        self.tensors
            .get(name)
            .ok_or_else(|| Error::contract(format!("fixture has no tensor '{name}'")))
    }

    pub fn vector(&self, name: &str) -> Result<Vec<f64>> {
        let t = self.get(name)?;
        if t.shape.len() != 1 {
            return Err(Error::contract(format!("'{name}' is not a vector")));
        }
        Ok(t.values.clone())
    }

    pub fn matrix(&self, name: &str) -> Result<Matrix> {
        let t = self.get(name)?;
        match t.shape.as_slice() {
            [r, c] => Matrix::new(*r, *c, t.values.clone()),
            _ => Err(Error::contract(format!("'{name}' is not a matrix"))),
        }
    }

    pub fn tensor3(&self, name: &str) -> Result<Tensor3> {
        let t = self.get(name)?;
        match t.shape.as_slice() {
            [c, h, w] => Tensor3::new(*c, *h, *w, t.values.clone()),
            _ => Err(Error::contract(format!("'{name}' is not a 3-d tensor"))),
        }
    }
}

impl Tensor3 {
    pub fn to_named(&self, name: &str) -> NamedTensor {
        let (c, h, w) = self.shape();
        NamedTensor {
            name: name.to_string(),
            shape: vec![c, h, w],
            values: self.data().to_vec(),
        }
    }
}
