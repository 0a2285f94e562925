use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{coherency, RecognizerResult, Scope};
use crate::error::{Error, Result};
use crate::types::GestureLabel;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GestureRow {
    pub label: GestureLabel,
    /// One entry per machine, in report order.
    pub coherency: Vec<f64>,
    pub mean: f64,
}

/// Per-gesture and lexicon-level coherency of several machines against one
/// reference recognizer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoherencyReport {
    pub reference: String,
    pub machines: Vec<String>,
    pub gestures: Vec<GestureRow>,
    /// Coherency over all reference records.
    pub pooled: Vec<f64>,
    pub pooled_mean: f64,
    /// Unweighted mean of the per-gesture values.
    pub class_mean: Vec<f64>,
    pub class_mean_mean: f64,
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

pub fn coherency_report(
    machines: &[RecognizerResult],
    human: &RecognizerResult,
    labels: &[GestureLabel],
) -> Result<CoherencyReport> {
    if machines.is_empty() || labels.is_empty() {
        return Err(Error::invalid("coherency report needs machines and labels"));
    }
    let mut gestures = Vec::with_capacity(labels.len());
    for l in labels {
        let coherency = machines
            .iter()
            .map(|m| coherency(m, human, Scope::Class(l)))
            .collect::<Result<Vec<_>>>()?;
        gestures.push(GestureRow {
            label: l.clone(),
            mean: mean(&coherency),
            coherency,
        });
    }
    let pooled = machines
        .iter()
        .map(|m| coherency(m, human, Scope::All))
        .collect::<Result<Vec<_>>>()?;
    let class_mean: Vec<f64> = (0..machines.len())
        .map(|k| mean(&gestures.iter().map(|g| g.coherency[k]).collect::<Vec<_>>()))
        .collect();
    Ok(CoherencyReport {
        reference: human.recognizer_id.clone(),
        machines: machines.iter().map(|m| m.recognizer_id.clone()).collect(),
        gestures,
        pooled_mean: mean(&pooled),
        pooled,
        class_mean_mean: mean(&class_mean),
        class_mean,
    })
}

impl CoherencyReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// One row per gesture, one column per machine plus the mean, then the
    /// two lexicon rows.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("gesture");
        for m in &self.machines {
            let _ = write!(s, ",{m}");
        }
        s.push_str(",mean\n");
        let mut row = |name: &str, vals: &[f64], m: f64| {
            s.push_str(&csv_field(name));
            for v in vals {
                let _ = write!(s, ",{v:.6}");
            }
            let _ = writeln!(s, ",{m:.6}");
        };
        for g in &self.gestures {
            row(&g.label.name, &g.coherency, g.mean);
        }
        row("lexicon (pooled)", &self.pooled, self.pooled_mean);
        row("lexicon (class mean)", &self.class_mean, self.class_mean_mean);
        s
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Pooled coherency of every machine against every other, row `i` taking
/// machine `i` as the reference. Used when no human labels are available.
pub fn coherency_matrix(machines: &[RecognizerResult]) -> Result<Vec<Vec<f64>>> {
    machines
        .iter()
        .map(|reference| {
            machines
                .iter()
                .map(|m| coherency(m, reference, Scope::All))
                .collect::<Result<Vec<_>>>()
        })
        .collect()
}
