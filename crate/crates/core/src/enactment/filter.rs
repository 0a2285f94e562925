use std::f64::consts::TAU;

use super::Workspace;
use crate::error::{Error, Result};
use crate::types::{Point3, Trajectory};

/// Two cascaded first-order smoothers, one pass over `x`.
fn cascade(x: &mut [f64], alphas: &[f64]) {
    for _ in 0..2 {
        let mut y = x[0];
        for (k, v) in x.iter_mut().enumerate().skip(1) {
            y += alphas[k - 1] * (*v - y);
            *v = y;
        }
    }
}

/// Critically damped second-order low-pass run forward and backward (zero
/// phase), then per-axis speeds clamped to the workspace limits by
/// stretching the offending frame intervals.
///
/// The smoothing coefficient per interval is `1 - exp(-2 pi fc dt)`, so
/// irregular sampling is handled; the forward-backward pass places the
/// -3 dB point below `cutoff_hz`.
pub fn actuator_filter(t: &Trajectory, w: &Workspace, cutoff_hz: f64) -> Result<Trajectory> {
    if !(cutoff_hz > 0.0) {
        return Err(Error::invalid("actuator cutoff must be positive"));
    }
    w.validate()?;
    let h = t.len();
    let e = t.effector_count();
    let times = t.times();
    let alphas: Vec<f64> = times
        .windows(2)
        .map(|p| 1.0 - (-TAU * cutoff_hz * (p[1] - p[0])).exp())
        .collect();
    let rev_alphas: Vec<f64> = alphas.iter().rev().copied().collect();

    let mut tracks: Vec<Vec<Point3>> = (0..e).map(|j| t.track(j)).collect();
    for track in &mut tracks {
        for axis in 0..3 {
            let mut x: Vec<f64> = track.iter().map(|p| p.axis(axis)).collect();
            cascade(&mut x, &alphas);
            x.reverse();
            cascade(&mut x, &rev_alphas);
            x.reverse();
            for (p, v) in track.iter_mut().zip(x) {
                *p = Point3::from({
                    let mut a = p.to_array();
                    a[axis] = v;
                    a
                });
            }
        }
    }

    let mut new_times = Vec::with_capacity(h);
    new_times.push(times[0]);
    for k in 1..h {
        let mut dt = times[k] - times[k - 1];
        for track in &tracks {
            let d = track[k] - track[k - 1];
            for axis in 0..3 {
                dt = dt.max(d.axis(axis).abs() / w.velocity_limit.axis(axis));
            }
        }
        new_times.push(new_times[k - 1] + dt);
    }
    Trajectory::from_tracks(new_times, &tracks)
}
