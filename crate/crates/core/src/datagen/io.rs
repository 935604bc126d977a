//! LIBSVM and CSV text formats.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use crate::data::{Label, LabeledDataset, LabeledSample};
use crate::error::{Error, Result};

/// Numeric label values mapped to each class.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelMap {
    pub positive: Vec<f64>,
    pub negative: Vec<f64>,
}

impl Default for LabelMap {
    /// `+1` and `1` are positive; `-1`, `0` and `2` are negative.
    fn default() -> Self {
        Self { positive: vec![1.0], negative: vec![-1.0, 0.0, 2.0] }
    }
}

impl LabelMap {
    pub fn map(&self, value: f64) -> Option<Label> {
        if self.positive.contains(&value) {
            Some(Label::Positive)
        } else if self.negative.contains(&value) {
            Some(Label::Negative)
        } else {
            None
        }
    }
}

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::ParseError { line, message: message.into() }
}

pub fn parse_libsvm(text: &str) -> Result<LabeledDataset> {
    parse_libsvm_with(text, &LabelMap::default())
}

/// Parses `<label> <index>:<value> ...` lines with 1-based, strictly increasing indices.
///
/// Absent indices are zero and the dimension is the largest index seen. Blank lines and
/// anything after `#` are ignored.
pub fn parse_libsvm_with(text: &str, labels: &LabelMap) -> Result<LabeledDataset> {
    let mut rows: Vec<(Label, Vec<(usize, f64)>)> = Vec::new();
    let mut dim = 0usize;
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let mut tokens = content.split_whitespace();
        let label_tok = tokens.next().unwrap_or("");
        let value: f64 = label_tok
            .parse()
            .map_err(|_| parse_err(line_no, format!("bad label '{label_tok}'")))?;
        let label = labels
            .map(value)
            .ok_or_else(|| parse_err(line_no, format!("label '{label_tok}' is not in the label map")))?;
        let mut entries = Vec::new();
        let mut last = 0usize;
        for tok in tokens {
            let (idx, val) = tok
                .split_once(':')
                .ok_or_else(|| parse_err(line_no, format!("expected index:value, got '{tok}'")))?;
            let idx: usize = idx.parse().map_err(|_| parse_err(line_no, format!("bad index '{idx}'")))?;
            let val: f64 = val.parse().map_err(|_| parse_err(line_no, format!("bad value '{val}'")))?;
            if idx == 0 || idx <= last {
                return Err(parse_err(line_no, format!("index {idx} is not 1-based and strictly increasing")));
            }
            if !val.is_finite() {
                return Err(parse_err(line_no, format!("non-finite value '{tok}'")));
            }
            last = idx;
            entries.push((idx, val));
        }
        dim = dim.max(last);
        rows.push((label, entries));
    }
    if rows.is_empty() {
        return Err(Error::EmptyFile);
    }
    let samples = rows
        .into_iter()
        .map(|(label, entries)| {
            let mut features = vec![0.0; dim];
            for (idx, val) in entries {
                features[idx - 1] = val;
            }
            LabeledSample { features, label }
        })
        .collect();
    Ok(LabeledDataset { samples, dim })
}

/// Writes labels as `+1` / `-1` and nonzero entries; the last index is always written so the
/// dimension survives a round trip.
pub fn serialize_libsvm(data: &LabeledDataset) -> String {
    let mut out = String::new();
    for s in &data.samples {
        out.push_str(match s.label {
            Label::Positive => "+1",
            Label::Negative => "-1",
        });
        for (j, &v) in s.features.iter().enumerate() {
            if v != 0.0 || j + 1 == s.features.len() {
                let _ = write!(out, " {}:{}", j + 1, v);
            }
        }
        out.push('\n');
    }
    out
}

/// Parses a numeric CSV whose `label_column` (0-based) holds at most two distinct values.
///
/// The larger label value becomes the positive class. A column holding one value maps to
/// positive when that value is positive.
pub fn parse_csv(text: &str, label_column: usize, has_header: bool) -> Result<LabeledDataset> {
    let mut rows: Vec<(usize, Vec<f64>)> = Vec::new();
    let mut width: Option<usize> = None;
    let mut header_pending = has_header;
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let content = raw.trim();
        if content.is_empty() {
            continue;
        }
        if header_pending {
            header_pending = false;
            continue;
        }
        let fields: Vec<&str> = content.split(',').map(str::trim).collect();
        match width {
            None => width = Some(fields.len()),
            Some(w) if w != fields.len() => {
                return Err(Error::RaggedRows { line: line_no, expected: w, found: fields.len() });
            }
            _ => {}
        }
        let values = fields
            .iter()
            .map(|f| {
                f.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| parse_err(line_no, format!("bad number '{f}'")))
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push((line_no, values));
    }
    let Some(width) = width else {
        return Err(Error::EmptyFile);
    };
    if label_column >= width {
        return Err(Error::OutOfRange(format!("label column {label_column} outside {width} columns")));
    }
    let distinct: BTreeSet<u64> = rows.iter().map(|(_, r)| r[label_column].to_bits()).collect();
    let mut values: Vec<f64> = distinct.into_iter().map(f64::from_bits).collect();
    values.sort_by(f64::total_cmp);
    values.dedup();
    if values.len() > 2 {
        return Err(Error::NonBinaryLabels(values.len()));
    }
    let positive_value = if values.len() == 2 { values[1] } else if values[0] > 0.0 { values[0] } else { f64::NAN };
    let samples = rows
        .into_iter()
        .map(|(_, mut r)| {
            let y = r.remove(label_column);
            let label = if y == positive_value { Label::Positive } else { Label::Negative };
            LabeledSample { features: r, label }
        })
        .collect();
    Ok(LabeledDataset { samples, dim: width - 1 })
}
