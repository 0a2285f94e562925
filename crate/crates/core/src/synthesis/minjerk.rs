use crate::types::Point3;

/// Minimum-jerk blend `10s³ − 15s⁴ + 6s⁵`: zero velocity and acceleration
/// at both ends of the segment.
pub fn min_jerk_blend(s: f64) -> f64 {
    let s = s.clamp(0.0, 1.0);
    s * s * s * (10.0 + s * (-15.0 + 6.0 * s))
}

/// Piecewise quintic path through time-stamped knots.
#[derive(Debug, Clone, PartialEq)]
pub struct MinJerkPath {
    knots: Vec<(f64, Point3)>,
}

impl MinJerkPath {
    /// `knots` must have strictly increasing times; at least two.
    pub fn new(knots: Vec<(f64, Point3)>) -> Self {
        debug_assert!(knots.len() >= 2);
        debug_assert!(knots.windows(2).all(|w| w[1].0 > w[0].0));
        MinJerkPath { knots }
    }

    pub fn knots(&self) -> &[(f64, Point3)] {
        &self.knots
    }

    /// Position at time `tau`, clamped to the knot span. Exact at knots.
    pub fn eval(&self, tau: f64) -> Point3 {
        let n = self.knots.len();
        if tau <= self.knots[0].0 {
            return self.knots[0].1;
        }
        if tau >= self.knots[n - 1].0 {
            return self.knots[n - 1].1;
        }
        let hi = self.knots.partition_point(|k| k.0 <= tau);
        let (t0, a) = self.knots[hi - 1];
        let (t1, b) = self.knots[hi];
        a.lerp(&b, min_jerk_blend((tau - t0) / (t1 - t0)))
    }
}
