//! Gist extraction: reduce a trajectory of `h` frames to `l < h` salient
//! placeholders per effector.
//!
//! Salient points are interior local minima of speed and local maxima of
//! discrete curvature whose topographic prominence exceeds a fraction of the
//! signal's range. Candidates closer than a minimum time separation to each
//! other (or to an endpoint) are merged, keeping the more prominent one. The
//! two endpoints are always kept. Each placeholder carries the per-axis
//! variance of the trajectory inside a time window around it.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::{GestureLabel, Point3, Trajectory, MIN_FRAMES};

/// Relative speed range below which a track counts as constant-speed.
const FLAT_SPEED: f64 = 1e-9;
/// Turning angles below this (radians) count as straight.
const FLAT_ANGLE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GistParams {
    /// Minimum prominence as a fraction of the signal range.
    pub prominence: f64,
    /// Minimum separation between placeholders, fraction of duration.
    pub min_separation: f64,
    /// Half-width of the variance window, fraction of duration.
    pub variance_window: f64,
    pub variance_gain: f64,
    /// Frames the seed is resampled to before extraction.
    pub resample_frames: usize,
}

impl Default for GistParams {
    fn default() -> Self {
        GistParams {
            prominence: 0.2,
            min_separation: 0.1,
            variance_window: 0.05,
            variance_gain: 1.0,
            resample_frames: 100,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Placeholder {
    pub position: Point3,
    /// Axis-aligned variance, m².
    pub variance: [f64; 3],
    /// Normalized time in `[0, 1]`.
    pub time_fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GestureGist {
    pub source_label: GestureLabel,
    /// One ordered placeholder list per effector.
    pub effectors: Vec<Vec<Placeholder>>,
    /// Frame count `h` of the source trajectory.
    pub source_frames: usize,
    /// Duration of the source trajectory, seconds.
    pub duration: f64,
}

impl GestureGist {
    /// Largest per-effector placeholder count.
    pub fn l(&self) -> usize {
        self.effectors.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn effector_count(&self) -> usize {
        self.effectors.len()
    }

    pub fn id(&self) -> String {
        format!("gist-{}", self.source_label.name)
    }

    pub fn validate(&self) -> Result<()> {
        if self.effectors.is_empty() || self.effectors.len() > 2 {
            return Err(Error::invalid("gist must have 1 or 2 effectors"));
        }
        if !(self.duration > 0.0) {
            return Err(Error::invalid("gist duration must be positive"));
        }
        for track in &self.effectors {
            if track.len() < 2 || track.len() >= self.source_frames {
                return Err(Error::invalid(format!(
                    "gist has {} placeholders for h = {}",
                    track.len(),
                    self.source_frames
                )));
            }
            if track[0].time_fraction != 0.0 || track[track.len() - 1].time_fraction != 1.0 {
                return Err(Error::invalid("gist must start at 0 and end at 1"));
            }
            if track.windows(2).any(|w| w[1].time_fraction <= w[0].time_fraction) {
                return Err(Error::invalid("placeholder times not increasing"));
            }
            for p in track {
                if !p.position.is_finite() || p.variance.iter().any(|v| !(*v >= 0.0)) {
                    return Err(Error::invalid("placeholder has invalid position or variance"));
                }
            }
        }
        Ok(())
    }
}

pub fn extract_gist(t: &Trajectory, label: &GestureLabel, params: &GistParams) -> Result<GestureGist> {
    let h = t.len();
    if h < MIN_FRAMES {
        return Err(Error::invalid(format!(
            "gist extraction needs h >= {MIN_FRAMES}, got {h}"
        )));
    }
    let duration = t.duration();
    let taus: Vec<f64> = t.times().iter().map(|&x| (x - t.start_time()) / duration).collect();
    let effectors = (0..t.effector_count())
        .map(|e| extract_track(&t.track(e), &taus, params))
        .collect();
    Ok(GestureGist {
        source_label: label.clone(),
        effectors,
        source_frames: h,
        duration,
    })
}

fn extract_track(track: &[Point3], taus: &[f64], params: &GistParams) -> Vec<Placeholder> {
    let h = track.len();
    let speed = speeds(track, taus);
    let curvature = curvatures(track);

    let mut candidates: Vec<(f64, usize)> = Vec::new();
    let s_max = speed.iter().cloned().fold(0.0, f64::max);
    let s_min = speed.iter().cloned().fold(f64::INFINITY, f64::min);
    let s_range = s_max - s_min;
    if s_range > FLAT_SPEED * s_max.max(f64::MIN_POSITIVE) {
        let neg: Vec<f64> = speed.iter().map(|s| -s).collect();
        for (k, prom) in peak_prominences(&neg) {
            let score = prom / s_range;
            if score >= params.prominence {
                candidates.push((score, k));
            }
        }
    }
    let k_max = curvature.iter().cloned().fold(0.0, f64::max);
    let k_min = curvature.iter().cloned().fold(f64::INFINITY, f64::min);
    let k_range = k_max - k_min;
    if k_range > 0.0 {
        for (k, prom) in peak_prominences(&curvature) {
            let score = prom / k_range;
            if score >= params.prominence {
                candidates.push((score, k));
            }
        }
    }

    // Most prominent first; index breaks ties so the order is total.
    candidates.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    let mut chosen: Vec<usize> = vec![0, h - 1];
    let max_interior = h - 3;
    for (_, k) in candidates {
        if chosen.len() - 2 >= max_interior {
            break;
        }
        let far_enough = chosen
            .iter()
            .all(|&c| (taus[c] - taus[k]).abs() >= params.min_separation);
        if far_enough {
            chosen.push(k);
        }
    }
    chosen.sort_unstable();

    chosen
        .into_iter()
        .map(|k| Placeholder {
            position: track[k],
            variance: local_variance(track, taus, k, params.variance_window, params.variance_gain),
            time_fraction: taus[k],
        })
        .collect()
}

/// Per-frame speed by central differences, one-sided at the ends.
fn speeds(track: &[Point3], taus: &[f64]) -> Vec<f64> {
    let h = track.len();
    (0..h)
        .map(|k| {
            let (a, b) = (k.saturating_sub(1), (k + 1).min(h - 1));
            track[b].distance(&track[a]) / (taus[b] - taus[a])
        })
        .collect()
}

/// Turning angle per unit length at each interior vertex; zero at endpoints
/// and wherever an adjacent segment has zero length.
fn curvatures(track: &[Point3]) -> Vec<f64> {
    let h = track.len();
    let mut out = vec![0.0; h];
    for k in 1..h - 1 {
        let a = track[k] - track[k - 1];
        let b = track[k + 1] - track[k];
        let (la, lb) = (a.norm(), b.norm());
        if la == 0.0 || lb == 0.0 {
            continue;
        }
        let angle = a.cross(&b).norm().atan2(a.dot(&b));
        if angle > FLAT_ANGLE {
            out[k] = angle / (0.5 * (la + lb));
        }
    }
    out
}

/// Interior local maxima with their topographic prominence. Plateaus report
/// their first index.
fn peak_prominences(x: &[f64]) -> Vec<(usize, f64)> {
    let n = x.len();
    let mut out = Vec::new();
    let mut k = 1;
    while k + 1 < n {
        if x[k] > x[k - 1] {
            let mut end = k;
            while end + 1 < n && x[end + 1] == x[k] {
                end += 1;
            }
            if end + 1 < n && x[end + 1] < x[k] {
                let mut left_min = x[k];
                let mut i = k;
                while i > 0 {
                    i -= 1;
                    if x[i] > x[k] {
                        break;
                    }
                    left_min = left_min.min(x[i]);
                }
                let mut right_min = x[k];
                let mut j = end;
                while j + 1 < n {
                    j += 1;
                    if x[j] > x[k] {
                        break;
                    }
                    right_min = right_min.min(x[j]);
                }
                out.push((k, x[k] - left_min.max(right_min)));
            }
            k = end + 1;
        } else {
            k += 1;
        }
    }
    out
}

fn local_variance(track: &[Point3], taus: &[f64], k: usize, window: f64, gain: f64) -> [f64; 3] {
    let near: Vec<&Point3> = track
        .iter()
        .zip(taus)
        .filter(|(_, &tau)| (tau - taus[k]).abs() <= window)
        .map(|(p, _)| p)
        .collect();
    let n = near.len() as f64;
    let mean = near.iter().fold(Point3::ZERO, |a, &&p| a + p) * (1.0 / n);
    let mut var = [0.0; 3];
    for p in &near {
        let d = **p - mean;
        var[0] += d.x * d.x;
        var[1] += d.y * d.y;
        var[2] += d.z * d.z;
    }
    var.map(|v| gain * v / n)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn label() -> GestureLabel {
        GestureLabel::new("g", 1)
    }

    fn polyline(vertices: &[Point3], n: usize) -> Trajectory {
        // Constant-speed sampling by arc length.
        let seg: Vec<f64> = vertices.windows(2).map(|w| w[0].distance(&w[1])).collect();
        let total: f64 = seg.iter().sum();
        let pts = (0..n)
            .map(|i| {
                let mut s = total * i as f64 / (n - 1) as f64;
                for (j, len) in seg.iter().enumerate() {
                    if s <= *len || j == seg.len() - 1 {
                        return vertices[j].lerp(&vertices[j + 1], (s / len).min(1.0));
                    }
                    s -= len;
                }
                unreachable!()
            })
            .collect();
        let times = (0..n).map(|i| i as f64 / (n - 1) as f64).collect();
        Trajectory::new(1, times, pts).unwrap()
    }

    #[test]
    fn straight_line_yields_endpoints_only() {
        let t = polyline(&[Point3::ZERO, Point3::new(1.0, 2.0, 3.0)], 50);
        let g = extract_gist(&t, &label(), &GistParams::default()).unwrap();
        assert_eq!(g.l(), 2);
        assert_eq!(g.effectors[0][0].position, t.point(0, 0));
        assert_eq!(g.effectors[0][1].position, t.point(49, 0));
    }

    /// Independent scan: the vertex with the sharpest turn on the sampled
    /// polyline, found by comparing unit direction vectors.
    fn sharpest_turn(t: &Trajectory) -> usize {
        let tr = t.track(0);
        (1..tr.len() - 1)
            .max_by(|&i, &j| {
                let turn = |k: usize| {
                    let a = tr[k] - tr[k - 1];
                    let b = tr[k + 1] - tr[k];
                    1.0 - a.dot(&b) / (a.norm() * b.norm())
                };
                turn(i).partial_cmp(&turn(j)).unwrap()
            })
            .unwrap()
    }

    #[test]
    fn v_shape_keeps_apex() {
        let apex = Point3::new(1.0, 1.0, 0.0);
        let t = polyline(&[Point3::ZERO, apex, Point3::new(2.0, 0.0, 0.0)], 41);
        let k = sharpest_turn(&t);
        assert_eq!(t.point(k, 0), apex);
        let g = extract_gist(&t, &label(), &GistParams::default()).unwrap();
        assert_eq!(g.l(), 3);
        assert!(g.effectors[0][1].position.distance(&apex) < 1e-12);
        assert!((g.effectors[0][1].time_fraction - 0.5).abs() < 1e-12);
    }

    #[test]
    fn stationary_yields_endpoints() {
        let times = (0..10).map(|i| i as f64).collect();
        let t = Trajectory::new(1, times, vec![Point3::new(1.0, 1.0, 1.0); 10]).unwrap();
        let g = extract_gist(&t, &label(), &GistParams::default()).unwrap();
        assert_eq!(g.l(), 2);
        assert_eq!(g.effectors[0][0].variance, [0.0; 3]);
    }

    #[test]
    fn minimum_length_respects_l_below_h() {
        let pts = vec![
            Point3::ZERO,
            Point3::new(1.0, 0.0, 0.0),
            Point3::new(1.0, 1.0, 0.0),
            Point3::new(0.0, 1.0, 0.0),
        ];
        let t = Trajectory::new(1, vec![0.0, 1.0, 2.0, 3.0], pts).unwrap();
        let g = extract_gist(
            &t,
            &label(),
            &GistParams {
                min_separation: 0.0,
                ..Default::default()
            },
        )
        .unwrap();
        assert!(g.l() < 4);
        g.validate().unwrap();
    }

    #[test]
    fn prominence_of_simple_peaks() {
        // the higher peak bottoms out at the larger of the two flanking minima
        let p = peak_prominences(&[0.0, 3.0, 1.0, 2.0, 0.5]);
        assert_eq!(p, vec![(1, 2.5), (3, 1.0)]);
    }

    #[test]
    fn variance_gain_scales() {
        let t = polyline(
            &[Point3::ZERO, Point3::new(1.0, 1.0, 0.0), Point3::new(2.0, 0.0, 0.0)],
            41,
        );
        let g1 = extract_gist(&t, &label(), &GistParams::default()).unwrap();
        let g2 = extract_gist(
            &t,
            &label(),
            &GistParams {
                variance_gain: 2.0,
                ..Default::default()
            },
        )
        .unwrap();
        for (a, b) in g1.effectors[0].iter().zip(&g2.effectors[0]) {
            for ax in 0..3 {
                assert!((2.0 * a.variance[ax] - b.variance[ax]).abs() < 1e-15);
            }
        }
        assert!(g1.effectors[0][1].variance[0] > 0.0);
    }
}
