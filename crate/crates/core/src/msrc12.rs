//! MSRC-12 skeleton ingestion.
//!
//! Skeleton files hold one whitespace-separated frame per line: a timestamp
//! followed by `joints x values_per_joint` numbers, the first three of each
//! joint block being x, y, z. Tagstream files hold `timestamp;label` lines
//! (an optional non-numeric header line is skipped). Each in-lexicon tag
//! yields one instance cut from a time window around it.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::{labels_from_names, LabeledInstance, Point3, Trajectory, MIN_FRAMES};

/// The upper-limb subset used by default.
pub const DEFAULT_LEXICON: [&str; 8] = [
    "Shoot",
    "Throw",
    "Change Weapon",
    "Goggles",
    "Start",
    "Next",
    "Wind Up",
    "Tempo",
];

/// Kinect skeleton indices of the left and right hand.
pub const HAND_JOINTS: [usize; 2] = [7, 11];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ColumnLayout {
    pub joints: usize,
    pub values_per_joint: usize,
    /// Multiplier taking skeleton timestamps to seconds.
    pub time_scale: f64,
    /// Multiplier taking tagstream timestamps to seconds.
    pub tag_time_scale: f64,
}

impl Default for ColumnLayout {
    fn default() -> Self {
        ColumnLayout {
            joints: 20,
            values_per_joint: 4,
            time_scale: 1.0,
            tag_time_scale: 1.0,
        }
    }
}

impl ColumnLayout {
    pub fn columns(&self) -> usize {
        1 + self.joints * self.values_per_joint
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IngestOptions {
    pub layout: ColumnLayout,
    pub joint_selection: Vec<usize>,
    /// Seconds kept before and after each tag.
    pub window_before: f64,
    pub window_after: f64,
    pub lexicon: Vec<String>,
    /// Maps raw tag labels to lexicon names; unmapped tags are used verbatim.
    pub aliases: BTreeMap<String, String>,
}

impl Default for IngestOptions {
    fn default() -> Self {
        IngestOptions {
            layout: ColumnLayout::default(),
            joint_selection: HAND_JOINTS.to_vec(),
            window_before: 1.0,
            window_after: 1.0,
            lexicon: DEFAULT_LEXICON.iter().map(|s| s.to_string()).collect(),
            aliases: BTreeMap::new(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Ingested {
    pub instances: Vec<LabeledInstance>,
    /// Tags whose label is outside the lexicon.
    pub skipped_labels: usize,
    /// In-lexicon tags whose window held too few frames.
    pub skipped_windows: usize,
    /// Frames dropped for non-finite values or non-increasing timestamps.
    pub dropped_frames: usize,
}

struct Frame {
    t: f64,
    points: Vec<Point3>,
}

pub fn load_msrc12(skeleton_file: &Path, tagstream_file: &Path, opts: &IngestOptions) -> Result<Ingested> {
    let skeleton = fs::read_to_string(skeleton_file).map_err(|e| Error::io(skeleton_file, e))?;
    let tags = fs::read_to_string(tagstream_file).map_err(|e| Error::io(tagstream_file, e))?;
    let stem = skeleton_file
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "msrc12".into());
    ingest(&skeleton, &tags, &stem, opts, skeleton_file, tagstream_file)
}

fn ingest(
    skeleton: &str,
    tags: &str,
    stem: &str,
    opts: &IngestOptions,
    skeleton_path: &Path,
    tag_path: &Path,
) -> Result<Ingested> {
    let layout = &opts.layout;
    if layout.values_per_joint < 3 {
        return Err(Error::invalid("layout needs at least 3 values per joint"));
    }
    if let Some(j) = opts.joint_selection.iter().find(|&&j| j >= layout.joints) {
        return Err(Error::invalid(format!(
            "joint index {j} outside layout of {} joints",
            layout.joints
        )));
    }
    if !(1..=2).contains(&opts.joint_selection.len()) {
        return Err(Error::invalid("select one or two joints"));
    }
    let labels = labels_from_names(&opts.lexicon)?;

    let mut out = Ingested::default();
    let mut frames: Vec<Frame> = Vec::new();
    let columns = layout.columns();
    for (lineno, line) in skeleton.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let parse_err = |message: String| Error::Parse {
            path: skeleton_path.to_path_buf(),
            line: lineno + 1,
            message,
        };
        let values: Vec<f64> = line
            .split_whitespace()
            .map(|tok| tok.parse::<f64>().map_err(|_| parse_err(format!("bad number `{tok}`"))))
            .collect::<Result<_>>()?;
        if values.len() != columns {
            return Err(parse_err(format!("expected {columns} columns, found {}", values.len())));
        }
        let t = values[0] * layout.time_scale;
        let points: Vec<Point3> = opts
            .joint_selection
            .iter()
            .map(|&j| {
                let base = 1 + j * layout.values_per_joint;
                Point3::new(values[base], values[base + 1], values[base + 2])
            })
            .collect();
        let increasing = frames.last().is_none_or(|f| t > f.t);
        if !t.is_finite() || points.iter().any(|p| !p.is_finite()) || !increasing {
            out.dropped_frames += 1;
            continue;
        }
        frames.push(Frame { t, points });
    }

    let mut event = 0usize;
    for (lineno, line) in tags.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let (ts, raw_label) = line.split_once(';').ok_or_else(|| Error::Parse {
            path: tag_path.to_path_buf(),
            line: lineno + 1,
            message: "expected `timestamp;label`".into(),
        })?;
        let tag_time = match ts.trim().parse::<f64>() {
            Ok(v) => v * layout.tag_time_scale,
            Err(_) if lineno == 0 => continue,
            Err(_) => {
                return Err(Error::Parse {
                    path: tag_path.to_path_buf(),
                    line: lineno + 1,
                    message: format!("bad timestamp `{}`", ts.trim()),
                })
            }
        };
        event += 1;
        let raw_label = raw_label.trim();
        let name = opts.aliases.get(raw_label).map(String::as_str).unwrap_or(raw_label);
        let Some(label) = labels.iter().find(|l| l.name == name) else {
            out.skipped_labels += 1;
            continue;
        };
        let (lo, hi) = (tag_time - opts.window_before, tag_time + opts.window_after);
        let window: Vec<&Frame> = frames.iter().filter(|f| f.t >= lo && f.t <= hi).collect();
        if window.len() < MIN_FRAMES {
            out.skipped_windows += 1;
            continue;
        }
        out.instances.push(LabeledInstance {
            id: format!("{stem}-{event:03}"),
            trajectory: window_trajectory(&window, opts.joint_selection.len())?,
            label: label.clone(),
        });
    }
    if out.skipped_labels > 0 {
        log::warn!("{stem}: skipped {} tags outside the lexicon", out.skipped_labels);
    }
    Ok(out)
}

fn window_trajectory(window: &[&Frame], effectors: usize) -> Result<Trajectory> {
    let times = window.iter().map(|f| f.t).collect();
    let points = window.iter().flat_map(|f| f.points.iter().copied()).collect();
    Trajectory::new(effectors, times, points)
}
