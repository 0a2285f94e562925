//! Recognition metrics over identification records.
//!
//! Coherency between a machine and a reference recognizer (normally the
//! human raters) is
//!
//! ```text
//! gamma = (|C ∩ C_h| + |I ∩ I_h|) / (|C_h| + |I_h|)
//! ```
//!
//! where `C`/`I` are the correctly/incorrectly identified instances. Two
//! misidentifications agree whatever wrong labels were chosen. When the
//! reference holds several records per instance (several raters), each
//! reference record is compared with the machine's single record for that
//! instance, which reduces to the formula above when ids are unique.

mod records;
mod report;
mod svg;

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

pub use records::{read_label_names, read_records, write_records, IdentificationRecord, RecognizerResult};
pub use report::{coherency_matrix, coherency_report, CoherencyReport, GestureRow};
pub use svg::confusion_svg;

use crate::error::{Error, Result};
use crate::types::GestureLabel;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub labels: Vec<GestureLabel>,
    /// Row-major `N x N`; rows are true labels, columns predictions.
    pub counts: Vec<u64>,
    /// Rejected (unlabeled) predictions per true label.
    pub rejected: Vec<u64>,
}

impl ConfusionMatrix {
    pub fn new(labels: &[GestureLabel]) -> Self {
        let n = labels.len();
        ConfusionMatrix {
            labels: labels.to_vec(),
            counts: vec![0; n * n],
            rejected: vec![0; n],
        }
    }

    pub fn n(&self) -> usize {
        self.labels.len()
    }

    pub fn get(&self, truth: usize, predicted: usize) -> u64 {
        self.counts[truth * self.n() + predicted]
    }

    pub fn trace(&self) -> u64 {
        (0..self.n()).map(|i| self.get(i, i)).sum()
    }

    /// All records, rejections included.
    pub fn total(&self) -> u64 {
        self.counts.iter().sum::<u64>() + self.rejected.iter().sum::<u64>()
    }

    pub fn row(&self, truth: usize) -> &[u64] {
        &self.counts[truth * self.n()..(truth + 1) * self.n()]
    }

    /// Element-wise sum of matrices over the same labels.
    pub fn merge(&mut self, other: &ConfusionMatrix) -> Result<()> {
        if self.labels != other.labels {
            return Err(Error::invalid("cannot merge confusion matrices over different labels"));
        }
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        for (a, b) in self.rejected.iter_mut().zip(&other.rejected) {
            *a += b;
        }
        Ok(())
    }
}

fn position(labels: &[GestureLabel], l: &GestureLabel) -> Result<usize> {
    labels
        .iter()
        .position(|x| x == l)
        .ok_or_else(|| Error::invalid(format!("label `{}` is not in the lexicon", l.name)))
}

pub fn confusion(records: &[IdentificationRecord], labels: &[GestureLabel]) -> Result<ConfusionMatrix> {
    let mut cm = ConfusionMatrix::new(labels);
    let n = labels.len();
    for r in records {
        let t = position(labels, &r.true_label)?;
        match &r.predicted_label {
            Some(p) => cm.counts[t * n + position(labels, p)?] += 1,
            None => cm.rejected[t] += 1,
        }
    }
    Ok(cm)
}

/// Trace over total.
pub fn accuracy(cm: &ConfusionMatrix) -> Result<f64> {
    let total = cm.total();
    if total == 0 {
        return Err(Error::invalid("accuracy of an empty confusion matrix"));
    }
    Ok(cm.trace() as f64 / total as f64)
}

/// `[|C|(|C|-1) + |I|(|I|-1)] / [(|C|+|I|)(|C|+|I|-1)]`.
pub fn agreement_index(r: &RecognizerResult) -> Result<f64> {
    let c = r.correct().count() as u64;
    let i = r.incorrect().count() as u64;
    let n = c + i;
    if n < 2 {
        return Err(Error::invalid("agreement index needs at least two records"));
    }
    Ok((c * (c - c.min(1)) + i * (i - i.min(1))) as f64 / (n * (n - 1)) as f64)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Scope<'a> {
    All,
    Class(&'a GestureLabel),
}

impl Scope<'_> {
    fn admits(&self, r: &IdentificationRecord) -> bool {
        match self {
            Scope::All => true,
            Scope::Class(l) => &r.true_label == *l,
        }
    }
}

pub fn coherency(machine: &RecognizerResult, human: &RecognizerResult, scope: Scope<'_>) -> Result<f64> {
    let human_in: Vec<&IdentificationRecord> = human.records.iter().filter(|r| scope.admits(r)).collect();
    if human_in.is_empty() {
        return Err(Error::invalid(format!(
            "no reference records in scope {scope:?} for `{}`",
            human.recognizer_id
        )));
    }
    let mut machine_by_id: BTreeMap<&str, &IdentificationRecord> = BTreeMap::new();
    for r in machine.records.iter().filter(|r| scope.admits(r)) {
        if machine_by_id.insert(&r.instance_id, r).is_some() {
            return Err(Error::invalid(format!(
                "`{}` has several records for instance `{}`",
                machine.recognizer_id, r.instance_id
            )));
        }
    }
    let human_ids: BTreeSet<&str> = human_in.iter().map(|r| r.instance_id.as_str()).collect();
    let machine_ids: BTreeSet<&str> = machine_by_id.keys().copied().collect();
    if human_ids != machine_ids {
        let missing = human_ids
            .symmetric_difference(&machine_ids)
            .next()
            .copied()
            .unwrap_or("");
        return Err(Error::invalid(format!(
            "`{}` and `{}` cover different instances (e.g. `{missing}`)",
            machine.recognizer_id, human.recognizer_id
        )));
    }
    let mut agree = 0usize;
    for h in &human_in {
        let m = machine_by_id[h.instance_id.as_str()];
        if m.true_label != h.true_label {
            return Err(Error::invalid(format!(
                "instance `{}` has conflicting true labels",
                h.instance_id
            )));
        }
        if m.is_correct() == h.is_correct() {
            agree += 1;
        }
    }
    Ok(agree as f64 / human_in.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn labels(n: usize) -> Vec<GestureLabel> {
        (1..=n).map(|i| GestureLabel::new(format!("g{i}"), i)).collect()
    }

    fn rec(id: &str, t: &GestureLabel, p: &GestureLabel, who: &str) -> IdentificationRecord {
        IdentificationRecord {
            instance_id: id.into(),
            true_label: t.clone(),
            predicted_label: Some(p.clone()),
            recognizer_id: who.into(),
        }
    }

    /// `correct[i]` decides whether record `i` is right; wrong ones pick the
    /// next label.
    fn result(who: &str, correct: &[bool], ls: &[GestureLabel]) -> RecognizerResult {
        let records = correct
            .iter()
            .enumerate()
            .map(|(i, &ok)| {
                let t = &ls[i % ls.len()];
                let p = if ok { t } else { &ls[(i + 1) % ls.len()] };
                rec(&format!("i{i:03}"), t, p, who)
            })
            .collect();
        RecognizerResult::new(who, records)
    }

    #[test]
    fn all_correct_is_diagonal() {
        let ls = labels(3);
        let r = result("m", &[true; 9], &ls);
        let cm = confusion(&r.records, &ls).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(cm.get(i, j), if i == j { 3 } else { 0 });
            }
        }
        assert_eq!(accuracy(&cm).unwrap(), 1.0);
    }

    #[test]
    fn single_record_single_cell() {
        let ls = labels(4);
        let cm = confusion(&[rec("a", &ls[2], &ls[0], "m")], &ls).unwrap();
        assert_eq!(cm.counts.iter().filter(|&&c| c > 0).count(), 1);
        assert_eq!(cm.get(2, 0), 1);
        assert_eq!(accuracy(&cm).unwrap(), 0.0);
    }

    #[test]
    fn accuracy_of_empty_matrix_is_an_error() {
        assert!(accuracy(&ConfusionMatrix::new(&labels(2))).is_err());
    }

    #[test]
    fn rejections_count_against_accuracy() {
        let ls = labels(2);
        let mut r = rec("a", &ls[0], &ls[0], "m");
        let cm = confusion(
            &[r.clone(), {
                r.predicted_label = None;
                r.instance_id = "b".into();
                r
            }],
            &ls,
        )
        .unwrap();
        assert_eq!(cm.total(), 2);
        assert_eq!(accuracy(&cm).unwrap(), 0.5);
    }

    #[test]
    fn agreement_index_examples() {
        let ls = labels(4);
        assert_eq!(agreement_index(&result("m", &[true; 20], &ls)).unwrap(), 1.0);
        let mut v = vec![true; 18];
        v.extend([false; 2]);
        assert_eq!(agreement_index(&result("m", &v, &ls)).unwrap(), 308.0 / 380.0);
        let mut v = vec![true; 10];
        v.extend([false; 10]);
        assert_eq!(agreement_index(&result("m", &v, &ls)).unwrap(), 180.0 / 380.0);
        assert!(agreement_index(&result("m", &[true], &ls)).is_err());
    }

    #[test]
    fn coherency_examples() {
        let ls = labels(4);
        let mut human = vec![true; 16];
        human.extend([false; 4]);
        let h = result("human", &human, &ls);
        assert_eq!(coherency(&h, &h, Scope::All).unwrap(), 1.0);

        // correct on 15 of the 16 human-correct, incorrect on 3 of 4 human-incorrect
        let mut m = vec![true; 15];
        m.push(false);
        m.extend([false, false, false, true]);
        assert_eq!(coherency(&result("m", &m, &ls), &h, Scope::All).unwrap(), 0.9);

        let flipped: Vec<bool> = human.iter().map(|b| !b).collect();
        assert_eq!(coherency(&result("m", &flipped, &ls), &h, Scope::All).unwrap(), 0.0);
    }

    #[test]
    fn coherency_errors() {
        let ls = labels(2);
        let h = result("h", &[true, true, false], &ls);
        let m = result("m", &[true, true], &ls);
        assert!(coherency(&m, &h, Scope::All).is_err());
        let other = GestureLabel::new("zz", 9);
        assert!(coherency(&h, &h, Scope::Class(&other)).is_err());
    }
}
