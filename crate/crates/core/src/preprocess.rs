//! Fixed-length resampling and frame alignment.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::{Point3, Trajectory};

/// Bounding-box diagonals below this are treated as a stationary trajectory.
const DEGENERATE_DIAGONAL: f64 = 1e-12;

/// Resamples `t` to exactly `n` frames at uniform spacing over its time span
/// by linear interpolation. Both endpoints are copied verbatim.
pub fn resample(t: &Trajectory, n: usize) -> Result<Trajectory> {
    if n < 2 {
        return Err(Error::invalid(format!("resample needs n >= 2, got {n}")));
    }
    let e = t.effector_count();
    let h = t.len();
    let (t0, t1) = (t.start_time(), t.end_time());
    let times_in = t.times();

    let mut times = Vec::with_capacity(n);
    let mut points = Vec::with_capacity(n * e);
    let mut seg = 0usize;
    for k in 0..n {
        if k == n - 1 {
            times.push(t1);
            points.extend_from_slice(t.frame(h - 1));
            break;
        }
        let tau = t0 + (t1 - t0) * (k as f64 / (n - 1) as f64);
        while seg + 2 < h && times_in[seg + 1] <= tau {
            seg += 1;
        }
        let s = ((tau - times_in[seg]) / (times_in[seg + 1] - times_in[seg])).clamp(0.0, 1.0);
        times.push(tau);
        for (a, b) in t.frame(seg).iter().zip(t.frame(seg + 1)) {
            points.push(a.lerp(b, s));
        }
    }
    Trajectory::new(e, times, points)
}

/// Centroid shift and uniform scale mapping a trajectory into the unit frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalizationTransform {
    pub centroid: Point3,
    pub scale: f64,
    /// Set when every point coincided; `scale` is then left at 1.
    pub degenerate: bool,
}

impl NormalizationTransform {
    pub fn identity() -> Self {
        NormalizationTransform {
            centroid: Point3::ZERO,
            scale: 1.0,
            degenerate: false,
        }
    }

    pub fn apply_point(&self, p: Point3) -> Point3 {
        (p - self.centroid) * self.scale
    }

    pub fn invert_point(&self, p: Point3) -> Point3 {
        p * (1.0 / self.scale) + self.centroid
    }

    pub fn apply(&self, t: &Trajectory) -> Trajectory {
        t.map_points(|p| self.apply_point(p))
    }

    pub fn invert(&self, t: &Trajectory) -> Trajectory {
        t.map_points(|p| self.invert_point(p))
    }
}

/// Centers the trajectory's centroid (over all effectors and frames) at the
/// origin and scales its bounding-box diagonal to 1.
pub fn normalize(t: &Trajectory) -> (Trajectory, NormalizationTransform) {
    let pts = t.points();
    let sum = pts.iter().fold(Point3::ZERO, |acc, &p| acc + p);
    let centroid = sum * (1.0 / pts.len() as f64);
    let diag = t.bbox_diagonal();
    let degenerate = diag < DEGENERATE_DIAGONAL;
    let tf = NormalizationTransform {
        centroid,
        scale: if degenerate { 1.0 } else { 1.0 / diag },
        degenerate,
    };
    (tf.apply(t), tf)
}
