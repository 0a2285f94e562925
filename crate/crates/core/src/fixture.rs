//! Bundled test fixtures.
//!
//! * A procedural two-hand lexicon of eight upper-limb gestures named after
//!   the MSRC-12 classes. Each gesture is a chain of keyframes joined by
//!   cosine-eased segments, so hands pause briefly at every keyframe. Every
//!   instance jitters keyframes, segment durations and adds tremor.
//! * A human-rating record set shaped like a small user study: two
//!   instances per class, ten raters each, 148 of 160 answers correct. It is
//!   synthetic and labeled as such in every record.
//! * A tiny skeleton + tagstream pair in the MSRC-12 text layout.

use std::f64::consts::PI;
use std::fmt::Write as _;

use crate::dataset::file_safe;
use crate::error::Result;
use crate::metrics::IdentificationRecord;
use crate::msrc12::{DEFAULT_LEXICON, HAND_JOINTS};
use crate::rng::{Domain, KeyedRng};
use crate::types::{labels_from_names, GestureLabel, LabeledInstance, Lexicon, Point3, Trajectory};

pub const FIXTURE_RATE: f64 = 30.0;
pub const HUMAN_FIXTURE_ID: &str = "human-synthetic-fixture";
pub const HUMAN_INSTANCES_PER_CLASS: usize = 2;
pub const HUMAN_RATERS: usize = 10;

const KEYFRAME_JITTER: f64 = 0.015;
const DURATION_JITTER: f64 = 0.1;
const TREMOR: f64 = 0.002;

const REST_L: Point3 = Point3::new(-0.2, -0.45, 0.1);
const REST_R: Point3 = Point3::new(0.2, -0.45, 0.1);

/// Segment duration (s) and the left/right hand positions it ends at.
type Key = (f64, Point3, Point3);

const fn p(x: f64, y: f64, z: f64) -> Point3 {
    Point3::new(x, y, z)
}

fn keyframes(class: usize) -> Vec<Key> {
    let mut k: Vec<Key> = vec![(0.0, REST_L, REST_R)];
    match class {
        // Shoot: both hands forward, recoil, back
        0 => k.extend([
            (0.6, p(-0.05, 0.1, 0.5), p(0.05, 0.1, 0.5)),
            (0.25, p(-0.05, 0.22, 0.45), p(0.05, 0.22, 0.45)),
            (0.3, p(-0.05, 0.1, 0.5), p(0.05, 0.1, 0.5)),
        ]),
        // Throw: right hand back over the shoulder, then forward high
        1 => k.extend([
            (0.5, p(-0.2, -0.4, 0.1), p(0.3, 0.35, -0.2)),
            (0.35, REST_L, p(0.1, 0.25, 0.55)),
        ]),
        // Change Weapon: right hand reaches over the left shoulder
        2 => k.extend([(0.5, REST_L, p(-0.15, 0.3, -0.05)), (0.5, REST_L, p(0.3, -0.1, 0.25))]),
        // Goggles: both hands to the eyes
        3 => k.extend([
            (0.6, p(-0.07, 0.45, 0.12), p(0.07, 0.45, 0.12)),
            (0.5, p(-0.07, 0.47, 0.16), p(0.07, 0.47, 0.16)),
        ]),
        // Start: both arms raise and open
        4 => k.extend([
            (0.5, p(-0.2, 0.1, 0.3), p(0.2, 0.1, 0.3)),
            (0.5, p(-0.5, 0.55, 0.1), p(0.5, 0.55, 0.1)),
        ]),
        // Next: right hand pushes out and swipes across
        5 => k.extend([(0.5, REST_L, p(0.4, 0.05, 0.4)), (0.4, REST_L, p(-0.25, 0.05, 0.4))]),
        // Wind Up: two circles in the sagittal plane
        6 => {
            let (r, yc, zc) = (0.15, 0.1, 0.35);
            for q in 0..=8 {
                let a = PI / 2.0 * q as f64;
                let (y, z) = (yc - r * a.cos(), zc + r * a.sin());
                k.push((if q == 0 { 0.5 } else { 0.2 }, p(-0.15, y, z), p(0.15, y, z)));
            }
        }
        // Tempo: two beats with both hands
        _ => {
            let up = (p(-0.2, 0.2, 0.3), p(0.2, 0.2, 0.3));
            let down = (p(-0.2, 0.0, 0.3), p(0.2, 0.0, 0.3));
            k.extend([
                (0.5, up.0, up.1),
                (0.25, down.0, down.1),
                (0.25, up.0, up.1),
                (0.25, down.0, down.1),
            ]);
        }
    }
    k.push((0.6, REST_L, REST_R));
    k
}

pub fn fixture_labels() -> Vec<GestureLabel> {
    labels_from_names(&DEFAULT_LEXICON).expect("fixture names are unique")
}

/// Instance `instance` of fixture class `class` (0-based). Keyed by
/// `(seed, class, instance)`; `noisy = false` gives the canonical shape.
pub fn fixture_gesture(class: usize, instance: u64, seed: u64, noisy: bool) -> Result<Trajectory> {
    let gain = if noisy { 1.0 } else { 0.0 };
    let mut rng = KeyedRng::new(Domain::Fixture, seed, class as u64, instance);
    let mut keys = keyframes(class % DEFAULT_LEXICON.len());
    let last = keys.len() - 1;
    for (i, key) in keys.iter_mut().enumerate() {
        key.0 *= 1.0 + gain * rng.uniform_range(-DURATION_JITTER, DURATION_JITTER);
        // the rest pose at both ends stays put
        if i != 0 && i != last {
            for pt in [&mut key.1, &mut key.2] {
                *pt = *pt + Point3::new(rng.normal(), rng.normal(), rng.normal()) * (gain * KEYFRAME_JITTER);
            }
        }
    }
    let total: f64 = keys.iter().map(|k| k.0).sum();
    let frames = (total * FIXTURE_RATE).round() as usize + 1;
    let mut times = Vec::with_capacity(frames);
    let mut tracks = vec![Vec::with_capacity(frames), Vec::with_capacity(frames)];
    let mut seg = 1;
    let mut seg_start = 0.0;
    for f in 0..frames {
        let t = (f as f64 / FIXTURE_RATE).min(total);
        while seg < last && t > seg_start + keys[seg].0 {
            seg_start += keys[seg].0;
            seg += 1;
        }
        let s = ((t - seg_start) / keys[seg].0).clamp(0.0, 1.0);
        let ease = 0.5 - 0.5 * (PI * s).cos();
        let (a, b) = (&keys[seg - 1], &keys[seg]);
        times.push(t);
        tracks[0].push(a.1.lerp(&b.1, ease) + tremor(&mut rng, gain));
        tracks[1].push(a.2.lerp(&b.2, ease) + tremor(&mut rng, gain));
    }
    // the last frame may collapse onto the previous one after rounding
    if times.len() >= 2 && times[times.len() - 1] <= times[times.len() - 2] {
        times.pop();
        tracks[0].pop();
        tracks[1].pop();
    }
    Trajectory::from_tracks(times, &tracks)
}

fn tremor(rng: &mut KeyedRng, gain: f64) -> Point3 {
    Point3::new(rng.normal(), rng.normal(), rng.normal()) * (gain * TREMOR)
}

/// One noisy example per class, instance 0.
pub fn fixture_lexicon(seed: u64) -> Result<Lexicon> {
    let labels = fixture_labels();
    let seeds = (0..labels.len())
        .map(|c| fixture_gesture(c, 0, seed, true))
        .collect::<Result<Vec<_>>>()?;
    Lexicon::new(labels, seeds)
}

/// Held-out instances `1..=per_class` of every class, ids `{Class}-{k:02}`.
pub fn fixture_instances(seed: u64, per_class: usize) -> Result<Vec<LabeledInstance>> {
    let mut out = Vec::new();
    for (c, label) in fixture_labels().into_iter().enumerate() {
        for k in 1..=per_class {
            out.push(LabeledInstance {
                id: format!("{}-{k:02}", file_safe(&label.name)),
                trajectory: fixture_gesture(c, k as u64, seed, true)?,
                label: label.clone(),
            });
        }
    }
    Ok(out)
}

/// Wrong answers in the human fixture: (class, instance, rater, answer).
const HUMAN_ERRORS: [(usize, usize, usize, usize); 12] = [
    (0, 1, 1, 1),
    (0, 1, 2, 2),
    (0, 1, 3, 3),
    (0, 2, 4, 5),
    (0, 2, 5, 1),
    (0, 2, 6, 3),
    (1, 1, 7, 0),
    (2, 1, 2, 3),
    (2, 2, 9, 1),
    (3, 2, 5, 2),
    (4, 1, 3, 6),
    (4, 2, 8, 7),
];

/// 8 classes x 2 instances x 10 raters. Rater `r` is recorded as
/// `human-synthetic-fixture-rNN`.
pub fn human_fixture_records() -> Vec<IdentificationRecord> {
    let labels = fixture_labels();
    let mut out = Vec::new();
    for (c, label) in labels.iter().enumerate() {
        for i in 1..=HUMAN_INSTANCES_PER_CLASS {
            for r in 1..=HUMAN_RATERS {
                let answer = HUMAN_ERRORS
                    .iter()
                    .find(|e| e.0 == c && e.1 == i && e.2 == r)
                    .map_or(c, |e| e.3);
                out.push(IdentificationRecord {
                    instance_id: format!("{}-{i:02}", file_safe(&label.name)),
                    true_label: label.clone(),
                    predicted_label: Some(labels[answer].clone()),
                    recognizer_id: format!("{HUMAN_FIXTURE_ID}-r{r:02}"),
                });
            }
        }
    }
    out
}

/// A skeleton file (30 Hz, 20 joints x 4 values) holding three gestures
/// of 3 s each, and its tagstream. The last tag is outside the lexicon.
pub fn msrc12_sample(seed: u64) -> Result<(String, String)> {
    let plan = [(0usize, "Shoot"), (3, "Goggles"), (usize::MAX, "Bow")];
    let mut skel = String::new();
    let mut tags = String::from("XQPCTick;Tag\n");
    let per_gesture = 90;
    for (g, (class, name)) in plan.iter().enumerate() {
        let t = if *class == usize::MAX {
            None
        } else {
            Some(fixture_gesture(*class, 0, seed, true)?)
        };
        for f in 0..per_gesture {
            let time = (g * per_gesture + f) as f64 / FIXTURE_RATE;
            let hands = match &t {
                Some(t) => t.sample_at(t.start_time() + f as f64 / FIXTURE_RATE * t.duration() / 3.0),
                None => vec![REST_L, REST_R],
            };
            let _ = write!(skel, "{time:.6}");
            for j in 0..20 {
                let q = match HAND_JOINTS.iter().position(|&h| h == j) {
                    Some(e) => hands[e],
                    None => p(0.0, 0.5 - 0.05 * j as f64, 0.0),
                };
                let _ = write!(skel, " {:.6} {:.6} {:.6} 1", q.x, q.y, q.z);
            }
            skel.push('\n');
        }
        let _ = writeln!(
            tags,
            "{:.6};{name}",
            (g * per_gesture) as f64 / FIXTURE_RATE + 1.5 + 1.0 / 60.0
        );
    }
    Ok((skel, tags))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::{read_records, RecognizerResult};

    #[test]
    fn gestures_are_deterministic_and_distinct() {
        let a = fixture_gesture(2, 5, 1, true).unwrap();
        assert_eq!(a, fixture_gesture(2, 5, 1, true).unwrap());
        assert_ne!(a, fixture_gesture(2, 6, 1, true).unwrap());
        for c in 0..8 {
            let t = fixture_gesture(c, 0, 0, false).unwrap();
            assert_eq!(t.effector_count(), 2);
            assert!(t.len() > 40, "{c}: {}", t.len());
            assert!(t.point(0, 0).distance(&REST_L) < 1e-12);
        }
    }

    #[test]
    fn human_fixture_shape() {
        let recs = human_fixture_records();
        assert_eq!(recs.len(), 160);
        let r = RecognizerResult::new(HUMAN_FIXTURE_ID, recs.clone());
        assert_eq!(r.correct().count(), 148);
        let shoot_wrong: Vec<_> = r.incorrect().filter(|x| x.true_label.index == 1).collect();
        assert_eq!(shoot_wrong.len(), 6);
        let confused: std::collections::BTreeSet<_> = shoot_wrong
            .iter()
            .map(|x| x.predicted_label.clone().unwrap().name)
            .collect();
        assert_eq!(confused.len(), 4);
    }

    #[test]
    fn shipped_human_fixture_matches_generator() {
        let path = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/human_labels.csv");
        assert_eq!(read_records(&path, &fixture_labels()).unwrap(), human_fixture_records());
    }
}
