use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::camera::{CameraModel, FrameSet};
use crate::error::{Error, Result};
use crate::types::{Point3, Trajectory};

const COLOR_NAMES: [&str; 2] = ["red", "green"];

/// A pixel belongs to marker `c` when channel `c` is at least `on_min`
/// and both other channels are at most `off_max`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct DetectParams {
    pub on_min: u8,
    pub off_max: u8,
    /// Markers to look for; `None` infers one or two from the frames.
    pub effectors: Option<usize>,
}

impl Default for DetectParams {
    fn default() -> Self {
        DetectParams {
            on_min: 200,
            off_max: 80,
            effectors: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Detection {
    /// Back-projected marker positions at the frame times.
    pub trajectory: Trajectory,
    /// Pixel centroid per frame and effector, `None` where gap-filled.
    pub centroids: Vec<Vec<Option<(f64, f64)>>>,
}

impl Detection {
    pub fn gap_count(&self, effector: usize) -> usize {
        self.centroids.iter().filter(|c| c[effector].is_none()).count()
    }
}

pub fn detect_trajectory(f: &FrameSet, cam: &CameraModel) -> Result<Trajectory> {
    Ok(detect_with(f, cam, &DetectParams::default())?.trajectory)
}

pub fn detect_with(f: &FrameSet, cam: &CameraModel, params: &DetectParams) -> Result<Detection> {
    if f.is_empty() {
        return Err(Error::invalid("no frames to detect markers in"));
    }
    if f.rgb.len() != f.len() || f.depth.len() != f.len() {
        return Err(Error::invalid("frame set has mismatched RGB, depth and time counts"));
    }
    let per_frame: Vec<[Option<Blob>; 2]> = (0..f.len())
        .into_par_iter()
        .map(|k| [0, 1].map(|c| find_marker(f, k, c, params)))
        .collect();

    let effectors = match params.effectors {
        Some(e @ 1..=2) => e,
        Some(e) => return Err(Error::invalid(format!("cannot track {e} markers"))),
        None if per_frame.iter().any(|b| b[1].is_some()) => 2,
        None => 1,
    };

    let n = f.len();
    let mut tracks = Vec::with_capacity(effectors);
    let mut centroids = vec![vec![None; effectors]; n];
    for c in 0..effectors {
        let mut seen: Vec<Option<Point3>> = vec![None; n];
        for k in 0..n {
            if let Some(b) = &per_frame[k][c] {
                let z = f.depth[k][b.depth_pixel];
                seen[k] = Some(cam.back_project(b.u, b.v, z));
                centroids[k][c] = Some((b.u, b.v));
            }
        }
        let missing = seen.iter().filter(|p| p.is_none()).count();
        if 2 * missing > n {
            return Err(Error::DetectionFailure {
                color: COLOR_NAMES[c],
                missing,
                total: n,
            });
        }
        tracks.push(fill_gaps(&f.times, &seen));
    }
    Ok(Detection {
        trajectory: Trajectory::from_tracks(f.times.clone(), &tracks)?,
        centroids,
    })
}

/// Linear interpolation in time over gaps, nearest value at the ends.
fn fill_gaps(times: &[f64], seen: &[Option<Point3>]) -> Vec<Point3> {
    let known: Vec<usize> = (0..seen.len()).filter(|&k| seen[k].is_some()).collect();
    (0..seen.len())
        .map(|k| {
            if let Some(p) = seen[k] {
                return p;
            }
            let after = known.partition_point(|&i| i < k);
            match (after.checked_sub(1).map(|i| known[i]), known.get(after)) {
                (Some(a), Some(&b)) => {
                    let s = (times[k] - times[a]) / (times[b] - times[a]);
                    seen[a].unwrap().lerp(&seen[b].unwrap(), s)
                }
                (Some(a), None) => seen[a].unwrap(),
                (None, Some(&b)) => seen[b].unwrap(),
                (None, None) => unreachable!("at least half the frames are detected"),
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy)]
struct Blob {
    u: f64,
    v: f64,
    depth_pixel: usize,
}

fn find_marker(f: &FrameSet, k: usize, c: usize, p: &DetectParams) -> Option<Blob> {
    let (w, h) = (f.width, f.height);
    let rgb = &f.rgb[k];
    let mask: Vec<bool> = rgb
        .chunks_exact(3)
        .map(|px| {
            (0..3).all(|ch| {
                if ch == c {
                    px[ch] >= p.on_min
                } else {
                    px[ch] <= p.off_max
                }
            })
        })
        .collect();
    let mask = close(&open(&mask, w, h), w, h);
    let comp = largest_component(&mask, w, h)?;

    let (mut su, mut sv, mut sw) = (0.0, 0.0, 0.0);
    for &i in &comp {
        let weight = rgb[3 * i + c] as f64;
        su += weight * (i % w) as f64;
        sv += weight * (i / w) as f64;
        sw += weight;
    }
    let (u, v) = (su / sw, sv / sw);
    let (ru, rv) = (u.round() as usize, v.round() as usize);
    let at = rv * w + ru;
    // the rounded centroid can fall outside a non-convex blob
    let depth_pixel = if comp.contains(&at) {
        at
    } else {
        *comp
            .iter()
            .min_by(|&&a, &&b| {
                let d = |i: usize| ((i % w) as f64 - u).powi(2) + ((i / w) as f64 - v).powi(2);
                d(a).total_cmp(&d(b))
            })
            .expect("components are nonempty")
    };
    Some(Blob { u, v, depth_pixel })
}

/// 3x3 min (erode) or max (dilate) filter, separably; outside pixels count
/// as background.
fn filter3(mask: &[bool], w: usize, h: usize, erode: bool) -> Vec<bool> {
    let pick = |a: bool, b: bool| if erode { a && b } else { a || b };
    let get = |m: &[bool], x: isize, y: isize| {
        if x < 0 || y < 0 || x >= w as isize || y >= h as isize {
            false
        } else {
            m[y as usize * w + x as usize]
        }
    };
    let mut tmp = vec![false; w * h];
    for y in 0..h as isize {
        for x in 0..w as isize {
            tmp[y as usize * w + x as usize] = pick(pick(get(mask, x - 1, y), get(mask, x, y)), get(mask, x + 1, y));
        }
    }
    let mut out = vec![false; w * h];
    for y in 0..h as isize {
        for x in 0..w as isize {
            out[y as usize * w + x as usize] = pick(pick(get(&tmp, x, y - 1), get(&tmp, x, y)), get(&tmp, x, y + 1));
        }
    }
    out
}

pub(crate) fn open(mask: &[bool], w: usize, h: usize) -> Vec<bool> {
    filter3(&filter3(mask, w, h, true), w, h, false)
}

pub(crate) fn close(mask: &[bool], w: usize, h: usize) -> Vec<bool> {
    filter3(&filter3(mask, w, h, false), w, h, true)
}

/// Pixel indices of the largest 8-connected component; ties go to the
/// component found first in raster order.
pub(crate) fn largest_component(mask: &[bool], w: usize, h: usize) -> Option<Vec<usize>> {
    let mut seen = vec![false; w * h];
    let mut best: Option<Vec<usize>> = None;
    let mut stack = Vec::new();
    for start in 0..w * h {
        if !mask[start] || seen[start] {
            continue;
        }
        seen[start] = true;
        stack.push(start);
        let mut comp = Vec::new();
        while let Some(i) = stack.pop() {
            comp.push(i);
            let (x, y) = ((i % w) as isize, (i / w) as isize);
            for dy in -1..=1 {
                for dx in -1..=1 {
                    let (nx, ny) = (x + dx, y + dy);
                    if nx < 0 || ny < 0 || nx >= w as isize || ny >= h as isize {
                        continue;
                    }
                    let j = ny as usize * w + nx as usize;
                    if mask[j] && !seen[j] {
                        seen[j] = true;
                        stack.push(j);
                    }
                }
            }
        }
        if best.as_ref().is_none_or(|b| comp.len() > b.len()) {
            best = Some(comp);
        }
    }
    best.map(|mut c| {
        c.sort_unstable();
        c
    })
}
