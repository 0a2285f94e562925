//! JSON interchange for labeled instances, synthetic samples and gists.
//!
//! One document per instance:
//!
//! ```json
//! {"id": "Shoot-01", "label": {"name": "Shoot", "index": 1}, "effector_count": 2,
//!  "frames": [[0.0, [x, y, z], [x, y, z]], ...]}
//! ```
//!
//! Synthetic samples add a `provenance` object.

use std::fs;
use std::path::{Path, PathBuf};

use serde::de::{self, SeqAccess, Visitor};
use serde::ser::SerializeSeq;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::gist::GestureGist;
use crate::synthesis::{Provenance, SyntheticSample};
use crate::types::{GestureLabel, LabeledInstance, Point3, Trajectory};

#[derive(Debug, Clone, PartialEq)]
struct FrameDoc {
    t: f64,
    points: Vec<Point3>,
}

impl Serialize for FrameDoc {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(1 + self.points.len()))?;
        seq.serialize_element(&self.t)?;
        for p in &self.points {
            seq.serialize_element(p)?;
        }
        seq.end()
    }
}

impl<'de> Deserialize<'de> for FrameDoc {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        struct FrameVisitor;
        impl<'de> Visitor<'de> for FrameVisitor {
            type Value = FrameDoc;
            fn expecting(&self, f: &mut std::fmt::Formatter) -> std::fmt::Result {
                f.write_str("[t, [x, y, z], ...]")
            }
            fn visit_seq<A: SeqAccess<'de>>(self, mut seq: A) -> std::result::Result<FrameDoc, A::Error> {
                let t: f64 = seq
                    .next_element()?
                    .ok_or_else(|| de::Error::custom("frame is missing its timestamp"))?;
                let mut points = Vec::new();
                while let Some(p) = seq.next_element::<Point3>()? {
                    points.push(p);
                }
                Ok(FrameDoc { t, points })
            }
        }
        d.deserialize_seq(FrameVisitor)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct InstanceDoc {
    id: String,
    label: GestureLabel,
    effector_count: usize,
    frames: Vec<FrameDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    provenance: Option<Provenance>,
}

impl InstanceDoc {
    fn new(id: &str, label: &GestureLabel, t: &Trajectory, provenance: Option<Provenance>) -> Self {
        InstanceDoc {
            id: id.to_string(),
            label: label.clone(),
            effector_count: t.effector_count(),
            frames: (0..t.len())
                .map(|k| FrameDoc {
                    t: t.times()[k],
                    points: t.frame(k).to_vec(),
                })
                .collect(),
            provenance,
        }
    }

    fn trajectory(&self) -> Result<Trajectory> {
        let e = self.effector_count;
        if let Some(k) = self.frames.iter().position(|f| f.points.len() != e) {
            return Err(Error::invalid(format!(
                "instance `{}` frame {k} has {} points, expected {e}",
                self.id,
                self.frames[k].points.len()
            )));
        }
        let times = self.frames.iter().map(|f| f.t).collect();
        let points = self.frames.iter().flat_map(|f| f.points.iter().copied()).collect();
        Trajectory::new(e, times, points)
    }
}

pub fn instance_to_json(inst: &LabeledInstance) -> Result<String> {
    Ok(serde_json::to_string(&InstanceDoc::new(
        &inst.id,
        &inst.label,
        &inst.trajectory,
        None,
    ))?)
}

pub fn instance_from_json(s: &str) -> Result<LabeledInstance> {
    let doc: InstanceDoc = serde_json::from_str(s)?;
    Ok(LabeledInstance {
        trajectory: doc.trajectory()?,
        id: doc.id,
        label: doc.label,
    })
}

pub fn sample_id(s: &SyntheticSample) -> String {
    format!("{}-{:04}", file_safe(&s.label.name), s.provenance.sample_index)
}

pub fn sample_to_json(s: &SyntheticSample) -> Result<String> {
    Ok(serde_json::to_string(&InstanceDoc::new(
        &sample_id(s),
        &s.label,
        &s.trajectory,
        Some(s.provenance.clone()),
    ))?)
}

pub fn sample_from_json(s: &str) -> Result<SyntheticSample> {
    let doc: InstanceDoc = serde_json::from_str(s)?;
    let trajectory = doc.trajectory()?;
    let provenance = doc
        .provenance
        .ok_or_else(|| Error::invalid(format!("sample `{}` has no provenance block", doc.id)))?;
    Ok(SyntheticSample {
        trajectory,
        label: doc.label,
        provenance,
    })
}

/// Replaces characters that are awkward in file names.
pub fn file_safe(name: &str) -> String {
    name.chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '-' || c == '_' {
                c
            } else {
                '_'
            }
        })
        .collect()
}

fn json_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    files.sort();
    Ok(files)
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

fn read_file(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

/// Writes one `<id>.json` per instance.
pub fn write_instances(dir: &Path, instances: &[LabeledInstance]) -> Result<()> {
    ensure_dir(dir)?;
    for inst in instances {
        write_file(
            &dir.join(format!("{}.json", file_safe(&inst.id))),
            &instance_to_json(inst)?,
        )?;
    }
    Ok(())
}

/// Reads every `*.json` instance in `dir`, ordered by file name.
pub fn read_instances(dir: &Path) -> Result<Vec<LabeledInstance>> {
    json_files(dir)?
        .iter()
        .map(|p| instance_from_json(&read_file(p)?))
        .collect()
}

pub fn write_samples(dir: &Path, samples: &[SyntheticSample]) -> Result<()> {
    ensure_dir(dir)?;
    for s in samples {
        write_file(&dir.join(format!("{}.json", sample_id(s))), &sample_to_json(s)?)?;
    }
    Ok(())
}

/// Reads samples ordered by (label index, sample index).
pub fn read_samples(dir: &Path) -> Result<Vec<SyntheticSample>> {
    let mut out: Vec<SyntheticSample> = json_files(dir)?
        .iter()
        .map(|p| sample_from_json(&read_file(p)?))
        .collect::<Result<_>>()?;
    out.sort_by_key(|s| (s.label.index, s.provenance.sample_index));
    Ok(out)
}

pub fn write_gists(dir: &Path, gists: &[GestureGist]) -> Result<()> {
    ensure_dir(dir)?;
    for g in gists {
        write_file(
            &dir.join(format!("{}.json", file_safe(&g.id()))),
            &serde_json::to_string_pretty(g)?,
        )?;
    }
    Ok(())
}

/// Reads gists ordered by label index.
pub fn read_gists(dir: &Path) -> Result<Vec<GestureGist>> {
    let mut out: Vec<GestureGist> = json_files(dir)?
        .iter()
        .map(|p| -> Result<GestureGist> {
            let g: GestureGist = serde_json::from_str(&read_file(p)?)?;
            g.validate()?;
            Ok(g)
        })
        .collect::<Result<_>>()?;
    out.sort_by_key(|g| g.source_label.index);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn frames_have_the_documented_shape() {
        let t = Trajectory::new(
            2,
            vec![0.0, 0.5, 1.0, 1.5],
            (0..8).map(|i| Point3::new(i as f64, 0.0, 1.0)).collect(),
        )
        .unwrap();
        let inst = LabeledInstance {
            id: "a".into(),
            trajectory: t,
            label: GestureLabel::new("Shoot", 1),
        };
        let v: serde_json::Value = serde_json::from_str(&instance_to_json(&inst).unwrap()).unwrap();
        assert_eq!(v["effector_count"], 2);
        assert_eq!(
            v["frames"][1],
            serde_json::json!([0.5, [2.0, 0.0, 1.0], [3.0, 0.0, 1.0]])
        );
        assert_eq!(v["label"]["name"], "Shoot");
    }

    #[test]
    fn mismatched_frame_width_is_rejected() {
        let s = r#"{"id":"x","label":{"name":"a","index":1},"effector_count":2,
            "frames":[[0,[0,0,0]],[1,[0,0,0]],[2,[0,0,0]],[3,[0,0,0]]]}"#;
        assert!(instance_from_json(s).is_err());
    }

    proptest! {
        #[test]
        fn instance_round_trip(
            pts in prop::collection::vec((-1e3f64..1e3, -1e3f64..1e3, -1e3f64..1e3), 8..40),
        ) {
            let n = pts.len() / 2;
            let pts: Vec<Point3> = pts[..2 * n].iter().map(|&(x, y, z)| Point3::new(x, y, z)).collect();
            let times = (0..n).map(|i| i as f64 * 0.1 + 1e-3).collect();
            let inst = LabeledInstance {
                id: "r".into(),
                trajectory: Trajectory::new(2, times, pts).unwrap(),
                label: GestureLabel::new("Throw", 2),
            };
            let back = instance_from_json(&instance_to_json(&inst).unwrap()).unwrap();
            prop_assert_eq!(back, inst);
        }
    }
}
