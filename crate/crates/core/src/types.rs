use std::collections::HashSet;
use std::ops::{Add, AddAssign, Mul, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Minimum number of frames in a trajectory.
pub const MIN_FRAMES: usize = 4;

/// A point in the world frame, meters.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(from = "[f64; 3]", into = "[f64; 3]")]
pub struct Point3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Point3 {
    pub const ZERO: Point3 = Point3 { x: 0.0, y: 0.0, z: 0.0 };

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Point3 { x, y, z }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    pub fn dot(&self, o: &Point3) -> f64 {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    pub fn cross(&self, o: &Point3) -> Point3 {
        Point3::new(
            self.y * o.z - self.z * o.y,
            self.z * o.x - self.x * o.z,
            self.x * o.y - self.y * o.x,
        )
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn distance(&self, o: &Point3) -> f64 {
        (*self - *o).norm()
    }

    /// Linear interpolation, exact at `s == 0`.
    pub fn lerp(&self, o: &Point3, s: f64) -> Point3 {
        *self + (*o - *self) * s
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    pub fn axis(&self, i: usize) -> f64 {
        match i {
            0 => self.x,
            1 => self.y,
            2 => self.z,
            _ => panic!("axis index {i} out of range"),
        }
    }

    pub fn component_min(&self, o: &Point3) -> Point3 {
        Point3::new(self.x.min(o.x), self.y.min(o.y), self.z.min(o.z))
    }

    pub fn component_max(&self, o: &Point3) -> Point3 {
        Point3::new(self.x.max(o.x), self.y.max(o.y), self.z.max(o.z))
    }
}

impl From<[f64; 3]> for Point3 {
    fn from(a: [f64; 3]) -> Self {
        Point3::new(a[0], a[1], a[2])
    }
}

impl From<Point3> for [f64; 3] {
    fn from(p: Point3) -> Self {
        p.to_array()
    }
}

impl Add for Point3 {
    type Output = Point3;
    fn add(self, o: Point3) -> Point3 {
        Point3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl AddAssign for Point3 {
    fn add_assign(&mut self, o: Point3) {
        *self = *self + o;
    }
}

impl Sub for Point3 {
    type Output = Point3;
    fn sub(self, o: Point3) -> Point3 {
        Point3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Mul<f64> for Point3 {
    type Output = Point3;
    fn mul(self, s: f64) -> Point3 {
        Point3::new(self.x * s, self.y * s, self.z * s)
    }
}

/// Time-stamped sequence of per-effector 3D points.
///
/// Points are stored frame-major: frame `k` owns
/// `points[k * effectors .. (k + 1) * effectors]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    effectors: usize,
    times: Vec<f64>,
    points: Vec<Point3>,
}

impl Trajectory {
    pub fn new(effectors: usize, times: Vec<f64>, points: Vec<Point3>) -> Result<Self> {
        if !(1..=2).contains(&effectors) {
            return Err(Error::invalid(format!(
                "effector count must be 1 or 2, got {effectors}"
            )));
        }
        if times.len() < MIN_FRAMES {
            return Err(Error::invalid(format!(
                "trajectory needs at least {MIN_FRAMES} frames, got {}",
                times.len()
            )));
        }
        if points.len() != times.len() * effectors {
            return Err(Error::invalid(format!(
                "expected {} points for {} frames x {} effectors, got {}",
                times.len() * effectors,
                times.len(),
                effectors,
                points.len()
            )));
        }
        if let Some(i) = times.iter().position(|t| !t.is_finite()) {
            return Err(Error::invalid(format!("non-finite timestamp at frame {i}")));
        }
        if let Some(i) = times.windows(2).position(|w| w[1] <= w[0]) {
            return Err(Error::invalid(format!(
                "timestamps not strictly increasing at frame {}",
                i + 1
            )));
        }
        if let Some(i) = points.iter().position(|p| !p.is_finite()) {
            return Err(Error::invalid(format!("non-finite point at frame {}", i / effectors)));
        }
        Ok(Trajectory {
            effectors,
            times,
            points,
        })
    }

    /// Builds a trajectory from one track per effector sharing `times`.
    pub fn from_tracks(times: Vec<f64>, tracks: &[Vec<Point3>]) -> Result<Self> {
        let effectors = tracks.len();
        if tracks.iter().any(|t| t.len() != times.len()) {
            return Err(Error::invalid("track lengths differ from timestamp count"));
        }
        let mut points = Vec::with_capacity(times.len() * effectors);
        for k in 0..times.len() {
            for track in tracks {
                points.push(track[k]);
            }
        }
        Trajectory::new(effectors, times, points)
    }

    pub fn effector_count(&self) -> usize {
        self.effectors
    }

    /// Number of frames, `h`.
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn points(&self) -> &[Point3] {
        &self.points
    }

    pub fn frame(&self, k: usize) -> &[Point3] {
        &self.points[k * self.effectors..(k + 1) * self.effectors]
    }

    pub fn point(&self, frame: usize, effector: usize) -> Point3 {
        self.points[frame * self.effectors + effector]
    }

    pub fn track(&self, effector: usize) -> Vec<Point3> {
        (0..self.len()).map(|k| self.point(k, effector)).collect()
    }

    pub fn start_time(&self) -> f64 {
        self.times[0]
    }

    pub fn end_time(&self) -> f64 {
        self.times[self.times.len() - 1]
    }

    pub fn duration(&self) -> f64 {
        self.end_time() - self.start_time()
    }

    /// Axis-aligned bounding box over all effectors.
    pub fn bounds(&self) -> (Point3, Point3) {
        let first = self.points[0];
        self.points
            .iter()
            .fold((first, first), |(lo, hi), p| (lo.component_min(p), hi.component_max(p)))
    }

    pub fn bbox_diagonal(&self) -> f64 {
        let (lo, hi) = self.bounds();
        (hi - lo).norm()
    }

    /// Applies `f` to every point, keeping timestamps.
    pub fn map_points(&self, f: impl Fn(Point3) -> Point3) -> Trajectory {
        Trajectory {
            effectors: self.effectors,
            times: self.times.clone(),
            points: self.points.iter().map(|&p| f(p)).collect(),
        }
    }

    /// Replaces timestamps; they must stay strictly increasing.
    pub fn with_times(&self, times: Vec<f64>) -> Result<Trajectory> {
        Trajectory::new(self.effectors, times, self.points.clone())
    }

    /// Interpolated per-effector positions at time `t`, clamped to the
    /// trajectory's time span.
    pub fn sample_at(&self, t: f64) -> Vec<Point3> {
        let n = self.len();
        if t <= self.times[0] {
            return self.frame(0).to_vec();
        }
        if t >= self.times[n - 1] {
            return self.frame(n - 1).to_vec();
        }
        let hi = self.times.partition_point(|&x| x <= t);
        let lo = hi - 1;
        let s = (t - self.times[lo]) / (self.times[hi] - self.times[lo]);
        self.frame(lo)
            .iter()
            .zip(self.frame(hi))
            .map(|(a, b)| a.lerp(b, s))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct GestureLabel {
    pub name: String,
    /// 1-based position in the lexicon.
    pub index: usize,
}

impl GestureLabel {
    pub fn new(name: impl Into<String>, index: usize) -> Self {
        GestureLabel {
            name: name.into(),
            index,
        }
    }
}

/// Builds labels `1..=N` from class names, rejecting duplicates.
pub fn labels_from_names<S: AsRef<str>>(names: &[S]) -> Result<Vec<GestureLabel>> {
    let mut seen = HashSet::new();
    names
        .iter()
        .enumerate()
        .map(|(i, n)| {
            let n = n.as_ref();
            if !seen.insert(n.to_string()) {
                return Err(Error::invalid(format!("duplicate gesture name `{n}`")));
            }
            Ok(GestureLabel::new(n, i + 1))
        })
        .collect()
}

/// Closed set of gesture classes, each with its single observed seed.
#[derive(Debug, Clone)]
pub struct Lexicon {
    labels: Vec<GestureLabel>,
    seeds: Vec<Trajectory>,
}

impl Lexicon {
    pub fn new(labels: Vec<GestureLabel>, seeds: Vec<Trajectory>) -> Result<Self> {
        if labels.len() < 2 {
            return Err(Error::invalid("lexicon needs at least 2 classes"));
        }
        if labels.len() != seeds.len() {
            return Err(Error::invalid(format!(
                "{} labels but {} seeds",
                labels.len(),
                seeds.len()
            )));
        }
        let mut names = HashSet::new();
        for (i, l) in labels.iter().enumerate() {
            if !names.insert(&l.name) {
                return Err(Error::invalid(format!("duplicate gesture name `{}`", l.name)));
            }
            if l.index != i + 1 {
                return Err(Error::invalid(format!(
                    "label `{}` has index {}, expected {}",
                    l.name,
                    l.index,
                    i + 1
                )));
            }
        }
        Ok(Lexicon { labels, seeds })
    }

    pub fn labels(&self) -> &[GestureLabel] {
        &self.labels
    }

    pub fn seeds(&self) -> &[Trajectory] {
        &self.seeds
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn label_by_name(&self, name: &str) -> Option<&GestureLabel> {
        self.labels.iter().find(|l| l.name == name)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledInstance {
    pub id: String,
    pub trajectory: Trajectory,
    pub label: GestureLabel,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(n: usize) -> Trajectory {
        let times = (0..n).map(|i| i as f64).collect();
        let pts = (0..n).map(|i| Point3::new(i as f64, 0.0, 0.0)).collect();
        Trajectory::new(1, times, pts).unwrap()
    }

    #[test]
    fn rejects_short_and_unordered() {
        let p = vec![Point3::ZERO; 3];
        assert!(Trajectory::new(1, vec![0.0, 1.0, 2.0], p).is_err());
        let p = vec![Point3::ZERO; 4];
        assert!(Trajectory::new(1, vec![0.0, 1.0, 1.0, 2.0], p.clone()).is_err());
        assert!(Trajectory::new(3, vec![0.0, 1.0, 2.0, 3.0], p).is_err());
    }

    #[test]
    fn rejects_non_finite_points() {
        let mut p = vec![Point3::ZERO; 4];
        p[2].y = f64::NAN;
        assert!(Trajectory::new(1, vec![0.0, 1.0, 2.0, 3.0], p).is_err());
    }

    #[test]
    fn sample_at_interpolates_and_clamps() {
        let t = line(5);
        assert_eq!(t.sample_at(1.5)[0], Point3::new(1.5, 0.0, 0.0));
        assert_eq!(t.sample_at(-1.0)[0], Point3::ZERO);
        assert_eq!(t.sample_at(9.0)[0], Point3::new(4.0, 0.0, 0.0));
    }

    #[test]
    fn lexicon_invariants() {
        let labels = labels_from_names(&["a", "b"]).unwrap();
        assert!(Lexicon::new(labels.clone(), vec![line(4)]).is_err());
        assert!(Lexicon::new(labels[..1].to_vec(), vec![line(4)]).is_err());
        assert!(labels_from_names(&["a", "a"]).is_err());
        let lex = Lexicon::new(labels, vec![line(4), line(5)]).unwrap();
        assert_eq!(lex.label_by_name("b").unwrap().index, 2);
    }

    #[test]
    fn point_serializes_as_array() {
        let s = serde_json::to_string(&Point3::new(1.0, 2.5, -3.0)).unwrap();
        assert_eq!(s, "[1.0,2.5,-3.0]");
    }
}
