//! Simulated robot enactment and marker-based re-extraction.
//!
//! A trajectory is placed in the robot workspace by a similarity transform,
//! smoothed by a model of the actuators, rendered as colored markers into
//! synthetic RGB-D frames and recovered by threshold, morphology and blob
//! centroid detection. The camera frame coincides with the workspace frame:
//! camera at the origin looking along `+z`.

mod camera;
mod detect;
mod filter;

use serde::{Deserialize, Serialize};

pub use camera::{render_frames, write_frameset, CameraModel, FrameSet};
pub use detect::{detect_trajectory, detect_with, DetectParams, Detection};
pub use filter::actuator_filter;

use crate::error::{Error, Result};
use crate::preprocess::resample;
use crate::types::{Point3, Trajectory, MIN_FRAMES};

/// Fraction of each workspace side left free, split evenly between both ends.
const MARGIN: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Workspace {
    pub min: Point3,
    pub max: Point3,
    /// Per-axis speed limit, m/s.
    pub velocity_limit: Point3,
}

impl Default for Workspace {
    fn default() -> Self {
        Workspace {
            min: Point3::new(-0.6, -0.6, 1.8),
            max: Point3::new(0.6, 0.6, 2.4),
            velocity_limit: Point3::new(3.0, 3.0, 3.0),
        }
    }
}

impl Workspace {
    pub fn validate(&self) -> Result<()> {
        for i in 0..3 {
            if !(self.max.axis(i) > self.min.axis(i)) {
                return Err(Error::invalid("workspace box is empty"));
            }
            if !(self.velocity_limit.axis(i) > 0.0) {
                return Err(Error::invalid("workspace velocity limits must be positive"));
            }
        }
        Ok(())
    }

    pub fn center(&self) -> Point3 {
        (self.min + self.max) * 0.5
    }

    pub fn diagonal(&self) -> f64 {
        (self.max - self.min).norm()
    }
}

/// `p -> scale * p + translation`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Similarity {
    pub scale: f64,
    pub translation: Point3,
}

impl Similarity {
    pub fn apply_point(&self, p: Point3) -> Point3 {
        p * self.scale + self.translation
    }

    pub fn invert_point(&self, p: Point3) -> Point3 {
        (p - self.translation) * (1.0 / self.scale)
    }

    pub fn apply(&self, t: &Trajectory) -> Trajectory {
        t.map_points(|p| self.apply_point(p))
    }

    pub fn invert(&self, t: &Trajectory) -> Trajectory {
        t.map_points(|p| self.invert_point(p))
    }
}

/// Largest uniform scale fitting `t`'s bounding box into the workspace with
/// the margin, centered. A stationary `t` is only translated.
pub fn workspace_mapping(t: &Trajectory, w: &Workspace) -> Result<Similarity> {
    w.validate()?;
    let (lo, hi) = t.bounds();
    let extent = hi - lo;
    let mut scale = f64::INFINITY;
    for i in 0..3 {
        let e = extent.axis(i);
        if e > 1e-12 {
            scale = scale.min((1.0 - MARGIN) * (w.max.axis(i) - w.min.axis(i)) / e);
        }
    }
    if !scale.is_finite() {
        scale = 1.0;
    }
    let center = (lo + hi) * 0.5;
    Ok(Similarity {
        scale,
        translation: w.center() - center * scale,
    })
}

pub fn map_to_workspace(t: &Trajectory, w: &Workspace) -> Result<Trajectory> {
    Ok(workspace_mapping(t, w)?.apply(t))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EnactConfig {
    pub workspace: Workspace,
    pub camera: CameraModel,
    /// Trajectories are resampled to this rate before filtering, Hz.
    pub control_rate: f64,
    pub cutoff_hz: f64,
    pub marker_radius_px: u32,
    pub detect: DetectParams,
    pub seed: u64,
}

impl Default for EnactConfig {
    fn default() -> Self {
        EnactConfig {
            workspace: Workspace::default(),
            camera: CameraModel::default(),
            control_rate: 100.0,
            cutoff_hz: 8.0,
            marker_radius_px: 4,
            detect: DetectParams::default(),
            seed: 0,
        }
    }
}

impl EnactConfig {
    /// Same pipeline without depth noise.
    pub fn noiseless(mut self) -> Self {
        self.camera.depth_noise = 0.0;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.workspace.validate()?;
        self.camera.validate()?;
        if !(self.control_rate > 0.0) || !(self.cutoff_hz > 0.0) {
            return Err(Error::invalid("control rate and cutoff must be positive"));
        }
        if self.marker_radius_px == 0 {
            return Err(Error::invalid("marker radius must be at least one pixel"));
        }
        Ok(())
    }
}

/// Every intermediate of one enactment. Positions up to `detected` are in
/// the workspace frame; `output` is back in the input's frame.
#[derive(Debug, Clone)]
pub struct EnactDetails {
    pub mapping: Similarity,
    pub mapped: Trajectory,
    /// Control-rate frame times before velocity clamping; `filtered`
    /// holds the same frames at the stretched times.
    pub control_times: Vec<f64>,
    pub filtered: Trajectory,
    pub frames: FrameSet,
    pub detection: Detection,
    pub output: Trajectory,
}

impl EnactDetails {
    /// Maps a time on the executed (possibly slowed) clock back to the
    /// commanded clock.
    pub fn commanded_time(&self, t: f64) -> f64 {
        let ft = self.filtered.times();
        let n = ft.len();
        if t <= ft[0] {
            return self.control_times[0];
        }
        if t >= ft[n - 1] {
            return self.control_times[n - 1];
        }
        let hi = ft.partition_point(|&x| x <= t);
        let lo = hi - 1;
        let s = (t - ft[lo]) / (ft[hi] - ft[lo]);
        self.control_times[lo] + s * (self.control_times[hi] - self.control_times[lo])
    }

    /// RMSE in the workspace frame between each detected point and the
    /// commanded position at the same commanded time. Slowing down to
    /// respect the speed limit changes timing only, so it costs nothing
    /// here.
    pub fn round_trip_rmse(&self) -> f64 {
        let det = &self.detection.trajectory;
        let mut sum = 0.0;
        for k in 0..det.len() {
            let want = self.mapped.sample_at(self.commanded_time(det.times()[k]));
            for (p, q) in want.iter().zip(det.frame(k)) {
                let d = p.distance(q);
                sum += d * d;
            }
        }
        (sum / (det.len() * det.effector_count()) as f64).sqrt()
    }
}

/// Runs the full channel. `stream` selects the depth-noise stream so
/// different instances under one config get independent noise.
pub fn enact(t: &Trajectory, cfg: &EnactConfig, stream: u64) -> Result<Trajectory> {
    Ok(enact_detailed(t, cfg, stream)?.output)
}

pub fn enact_detailed(t: &Trajectory, cfg: &EnactConfig, stream: u64) -> Result<EnactDetails> {
    cfg.validate()?;
    let mapping = workspace_mapping(t, &cfg.workspace)?;
    let mapped = mapping.apply(t);
    let n = ((t.duration() * cfg.control_rate).round() as usize + 1).max(MIN_FRAMES);
    let control = resample(&mapped, n)?;
    let filtered = actuator_filter(&control, &cfg.workspace, cfg.cutoff_hz)?;
    let control_times = control.times().to_vec();
    let frames = render_frames(&filtered, &cfg.camera, cfg.marker_radius_px, cfg.seed, stream)?;
    let detection = detect_with(
        &frames,
        &cfg.camera,
        &DetectParams {
            effectors: Some(t.effector_count()),
            ..cfg.detect
        },
    )?;
    let output = mapping.invert(&detection.trajectory);
    Ok(EnactDetails {
        mapping,
        mapped,
        control_times,
        filtered,
        frames,
        detection,
        output,
    })
}

/// Root-mean-square point distance between two trajectories with the same
/// effector count, compared at matching fractions of their time spans on
/// `b`'s frames.
pub fn trajectory_rmse(a: &Trajectory, b: &Trajectory) -> Result<f64> {
    if a.effector_count() != b.effector_count() {
        return Err(Error::invalid("effector counts differ"));
    }
    let (a0, ad) = (a.start_time(), a.duration());
    let (b0, bd) = (b.start_time(), b.duration());
    let mut sum = 0.0;
    for k in 0..b.len() {
        let frac = (b.times()[k] - b0) / bd;
        let pa = a.sample_at(a0 + frac * ad);
        for (p, q) in pa.iter().zip(b.frame(k)) {
            let d = p.distance(q);
            sum += d * d;
        }
    }
    Ok((sum / (b.len() * b.effector_count()) as f64).sqrt())
}
