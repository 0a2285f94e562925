use std::io::Write as _;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{Domain, KeyedRng};
use crate::types::{Point3, Trajectory, MIN_FRAMES};

/// Pinhole RGB-D camera at the workspace origin looking along `+z`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CameraModel {
    pub width: usize,
    pub height: usize,
    pub focal: f64,
    pub cx: f64,
    pub cy: f64,
    /// Standard deviation of additive depth noise under the markers, m.
    pub depth_noise: f64,
    pub frame_rate: f64,
    /// Depth reported where no marker is seen, m.
    pub far_depth: f64,
}

impl Default for CameraModel {
    fn default() -> Self {
        CameraModel {
            width: 128,
            height: 128,
            focal: 120.0,
            cx: 64.0,
            cy: 64.0,
            depth_noise: 0.01,
            frame_rate: 30.0,
            far_depth: 10.0,
        }
    }
}

pub(crate) const BACKGROUND: u8 = 128;
pub(crate) const MARKER_COLORS: [[u8; 3]; 2] = [[255, 0, 0], [0, 255, 0]];

impl CameraModel {
    pub fn validate(&self) -> Result<()> {
        if self.width == 0 || self.height == 0 || !(self.focal > 0.0) || !(self.frame_rate > 0.0) {
            return Err(Error::invalid(
                "camera needs positive size, focal length and frame rate",
            ));
        }
        if !(self.depth_noise >= 0.0) {
            return Err(Error::invalid("depth noise must be non-negative"));
        }
        Ok(())
    }

    /// Pixel coordinates of `p`; `None` when `p` is not in front.
    pub fn project(&self, p: Point3) -> Option<(f64, f64)> {
        (p.z > 0.0).then(|| (self.cx + self.focal * p.x / p.z, self.cy + self.focal * p.y / p.z))
    }

    pub fn back_project(&self, u: f64, v: f64, z: f64) -> Point3 {
        Point3::new((u - self.cx) * z / self.focal, (v - self.cy) * z / self.focal, z)
    }
}

/// Rendered frames. Images are row-major, RGB interleaved.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameSet {
    pub width: usize,
    pub height: usize,
    pub times: Vec<f64>,
    pub rgb: Vec<Vec<u8>>,
    pub depth: Vec<Vec<f64>>,
}

impl FrameSet {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

/// Renders `t` at the camera frame rate: `round(duration * rate) + 1`
/// uniformly spaced frames (at least the trajectory minimum). Effector 0
/// is a red disc, effector 1 green; nearer markers cover farther ones.
pub fn render_frames(t: &Trajectory, cam: &CameraModel, radius_px: u32, seed: u64, stream: u64) -> Result<FrameSet> {
    cam.validate()?;
    let n = ((t.duration() * cam.frame_rate).round() as usize + 1).max(MIN_FRAMES);
    let t0 = t.start_time();
    let times: Vec<f64> = (0..n)
        .map(|k| {
            if k == n - 1 {
                t.end_time()
            } else {
                t0 + t.duration() * k as f64 / (n - 1) as f64
            }
        })
        .collect();
    let frames: Vec<(Vec<u8>, Vec<f64>)> = times
        .par_iter()
        .enumerate()
        .map(|(k, &time)| {
            let pts = t.sample_at(time);
            if pts.iter().any(|p| p.z <= 0.0) {
                return Err(Error::BehindCamera { frame: k });
            }
            let mut rng = KeyedRng::new(Domain::DepthNoise, seed, stream, k as u64);
            Ok(render_one(cam, &pts, radius_px, &mut rng))
        })
        .collect::<Result<_>>()?;
    let (rgb, depth) = frames.into_iter().unzip();
    Ok(FrameSet {
        width: cam.width,
        height: cam.height,
        times,
        rgb,
        depth,
    })
}

fn render_one(cam: &CameraModel, pts: &[Point3], radius_px: u32, rng: &mut KeyedRng) -> (Vec<u8>, Vec<f64>) {
    let (w, h) = (cam.width, cam.height);
    let mut rgb = vec![BACKGROUND; w * h * 3];
    let mut depth = vec![cam.far_depth; w * h];
    let mut order: Vec<usize> = (0..pts.len()).collect();
    order.sort_by(|&a, &b| pts[b].z.total_cmp(&pts[a].z));
    let r = radius_px as f64;
    for j in order {
        let p = pts[j];
        let (u, v) = cam.project(p).expect("checked in front of camera");
        let x_lo = (u - r).ceil().max(0.0) as usize;
        let y_lo = (v - r).ceil().max(0.0) as usize;
        let x_hi = (u + r).floor().min(w as f64 - 1.0);
        let y_hi = (v + r).floor().min(h as f64 - 1.0);
        if x_hi < 0.0 || y_hi < 0.0 {
            continue;
        }
        for y in y_lo..=y_hi as usize {
            for x in x_lo..=x_hi as usize {
                let (dx, dy) = (x as f64 - u, y as f64 - v);
                if dx * dx + dy * dy <= r * r {
                    let i = y * w + x;
                    rgb[3 * i..3 * i + 3].copy_from_slice(&MARKER_COLORS[j.min(1)]);
                    depth[i] = if cam.depth_noise > 0.0 {
                        p.z + cam.depth_noise * rng.normal()
                    } else {
                        p.z
                    };
                }
            }
        }
    }
    (rgb, depth)
}

/// Dumps each frame as `frame_NNNN.ppm` (binary RGB) plus
/// `frame_NNNN.pfm` (32-bit float depth).
pub fn write_frameset(dir: &Path, f: &FrameSet) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    for k in 0..f.len() {
        let ppm = dir.join(format!("frame_{k:04}.ppm"));
        let mut bytes = format!("P6\n{} {}\n255\n", f.width, f.height).into_bytes();
        bytes.extend_from_slice(&f.rgb[k]);
        std::fs::write(&ppm, bytes).map_err(|e| Error::io(&ppm, e))?;

        let pfm = dir.join(format!("frame_{k:04}.pfm"));
        let mut out = std::io::BufWriter::new(std::fs::File::create(&pfm).map_err(|e| Error::io(&pfm, e))?);
        let mut bytes = format!("Pf\n{} {}\n-1.0\n", f.width, f.height).into_bytes();
        // PFM stores rows bottom to top
        for row in f.depth[k].chunks(f.width).rev() {
            for &d in row {
                bytes.extend_from_slice(&(d as f32).to_le_bytes());
            }
        }
        out.write_all(&bytes).map_err(|e| Error::io(&pfm, e))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn still(p: Point3, duration: f64) -> Trajectory {
        let times = (0..4).map(|k| k as f64 * duration / 3.0).collect();
        Trajectory::new(1, times, vec![p; 4]).unwrap()
    }

    fn noiseless() -> CameraModel {
        CameraModel {
            depth_noise: 0.0,
            ..Default::default()
        }
    }

    #[test]
    fn disc_at_principal_point() {
        let f = render_frames(&still(Point3::new(0.0, 0.0, 1.0), 1.0), &noiseless(), 4, 0, 0).unwrap();
        let i = 64 * 128 + 64;
        assert_eq!(&f.rgb[0][3 * i..3 * i + 3], &[255, 0, 0]);
        assert_eq!(f.depth[0][i], 1.0);
        // the ring just outside the radius stays background
        let j = 64 * 128 + 69;
        assert_eq!(&f.rgb[0][3 * j..3 * j + 3], &[128, 128, 128]);
        assert_eq!(f.depth[0][j], 10.0);
    }

    #[test]
    fn frame_count_follows_duration() {
        let cam = noiseless();
        for d in [1.0, 2.5, 3.02] {
            let f = render_frames(&still(Point3::new(0.0, 0.0, 2.0), d), &cam, 4, 0, 0).unwrap();
            assert_eq!(f.len(), (d * 30.0_f64).round() as usize + 1);
            assert_eq!(f.rgb.len(), f.depth.len());
        }
    }

    #[test]
    fn behind_camera_names_frame() {
        let times = vec![0.0, 0.1, 0.2, 0.3];
        let pts = vec![
            Point3::new(0.0, 0.0, 1.0),
            Point3::new(0.0, 0.0, 1.0),
            Point3::new(0.0, 0.0, -1.0),
            Point3::new(0.0, 0.0, -1.0),
        ];
        let t = Trajectory::new(1, times, pts).unwrap();
        let err = render_frames(&t, &noiseless(), 4, 0, 0).unwrap_err();
        assert!(matches!(err, Error::BehindCamera { frame } if frame > 0));
    }

    #[test]
    fn noise_is_seeded() {
        let t = still(Point3::new(0.1, 0.0, 2.0), 1.0);
        let cam = CameraModel::default();
        let a = render_frames(&t, &cam, 4, 3, 1).unwrap();
        assert_eq!(a, render_frames(&t, &cam, 4, 3, 1).unwrap());
        assert_ne!(a.depth, render_frames(&t, &cam, 4, 3, 2).unwrap().depth);
    }

    #[test]
    fn dump_writes_pairs() {
        let f = render_frames(&still(Point3::new(0.0, 0.0, 1.0), 0.1), &noiseless(), 3, 0, 0).unwrap();
        let dir = tempfile::tempdir().unwrap();
        write_frameset(dir.path(), &f).unwrap();
        let ppm = std::fs::read(dir.path().join("frame_0000.ppm")).unwrap();
        assert!(ppm.starts_with(b"P6\n128 128\n255\n"));
        assert_eq!(ppm.len(), 15 + 128 * 128 * 3);
        let pfm = std::fs::read(dir.path().join("frame_0000.pfm")).unwrap();
        assert_eq!(pfm.len(), "Pf\n128 128\n-1.0\n".len() + 128 * 128 * 4);
    }
}
