use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::GestureLabel;

/// One recognizer's answer for one instance. `predicted_label` is `None`
/// when the recognizer rejected the instance.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IdentificationRecord {
    pub instance_id: String,
    pub true_label: GestureLabel,
    pub predicted_label: Option<GestureLabel>,
    pub recognizer_id: String,
}

impl IdentificationRecord {
    pub fn is_correct(&self) -> bool {
        self.predicted_label.as_ref() == Some(&self.true_label)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecognizerResult {
    pub recognizer_id: String,
    pub records: Vec<IdentificationRecord>,
}

impl RecognizerResult {
    pub fn new(recognizer_id: impl Into<String>, records: Vec<IdentificationRecord>) -> Self {
        RecognizerResult {
            recognizer_id: recognizer_id.into(),
            records,
        }
    }

    pub fn correct(&self) -> impl Iterator<Item = &IdentificationRecord> {
        self.records.iter().filter(|r| r.is_correct())
    }

    pub fn incorrect(&self) -> impl Iterator<Item = &IdentificationRecord> {
        self.records.iter().filter(|r| !r.is_correct())
    }

    /// Keeps only records whose instance id satisfies `keep`.
    pub fn restricted(&self, mut keep: impl FnMut(&str) -> bool) -> Self {
        RecognizerResult {
            recognizer_id: self.recognizer_id.clone(),
            records: self.records.iter().filter(|r| keep(&r.instance_id)).cloned().collect(),
        }
    }
}

#[derive(Serialize, Deserialize)]
struct Row {
    instance_id: String,
    true_label: String,
    predicted_label: String,
    recognizer_id: String,
}

/// Writes `instance_id,true_label,predicted_label,recognizer_id` rows; a
/// rejection is an empty predicted label.
pub fn write_records(path: &Path, records: &[IdentificationRecord]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in records {
        w.serialize(Row {
            instance_id: r.instance_id.clone(),
            true_label: r.true_label.name.clone(),
            predicted_label: r.predicted_label.as_ref().map(|l| l.name.clone()).unwrap_or_default(),
            recognizer_id: r.recognizer_id.clone(),
        })?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Reads records, resolving label names against `labels`. Records from
/// several recognizers may share a file.
pub fn read_records(path: &Path, labels: &[GestureLabel]) -> Result<Vec<IdentificationRecord>> {
    let mut rd = csv::Reader::from_path(path)?;
    let lookup = |name: &str, line: usize| -> Result<GestureLabel> {
        labels
            .iter()
            .find(|l| l.name == name)
            .cloned()
            .ok_or_else(|| Error::Parse {
                path: path.to_path_buf(),
                line,
                message: format!("unknown gesture label `{name}`"),
            })
    };
    let mut out = Vec::new();
    for (i, row) in rd.deserialize::<Row>().enumerate() {
        // header is line 1
        let line = i + 2;
        let row = row.map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line,
            message: e.to_string(),
        })?;
        let predicted_label = if row.predicted_label.is_empty() {
            None
        } else {
            Some(lookup(&row.predicted_label, line)?)
        };
        out.push(IdentificationRecord {
            instance_id: row.instance_id,
            true_label: lookup(&row.true_label, line)?,
            predicted_label,
            recognizer_id: row.recognizer_id,
        });
    }
    Ok(out)
}

/// Gesture names used in a records file, in order of first appearance.
pub fn read_label_names(path: &Path) -> Result<Vec<String>> {
    let mut rd = csv::Reader::from_path(path)?;
    let mut names: Vec<String> = Vec::new();
    for (i, row) in rd.deserialize::<Row>().enumerate() {
        let row = row.map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: i + 2,
            message: e.to_string(),
        })?;
        for n in [row.true_label, row.predicted_label] {
            if !n.is_empty() && !names.contains(&n) {
                names.push(n);
            }
        }
    }
    Ok(names)
}
