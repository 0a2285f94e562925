use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::preprocess::{normalize, resample};
use crate::types::{Point3, Trajectory};

/// Row-major sequence of per-frame feature vectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSequence {
    dim: usize,
    data: Vec<f64>,
}

impl FeatureSequence {
    pub fn new(dim: usize, data: Vec<f64>) -> Result<Self> {
        if dim == 0 || data.len() % dim != 0 {
            return Err(Error::invalid(format!(
                "{} values do not split into rows of {dim}",
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("non-finite feature value"));
        }
        Ok(FeatureSequence { dim, data })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.dim)
    }

    /// All rows concatenated.
    pub fn flat(&self) -> &[f64] {
        &self.data
    }
}

/// Positions of every effector followed by their first differences,
/// zero at frame 0. Differences are scaled by `h - 1` so they read as
/// velocity per unit normalized duration.
pub fn encode(t: &Trajectory) -> FeatureSequence {
    let tracks: Vec<Vec<Point3>> = (0..t.effector_count()).map(|e| t.track(e)).collect();
    encode_tracks(&tracks)
}

pub(crate) fn encode_tracks(tracks: &[Vec<Point3>]) -> FeatureSequence {
    let h = tracks[0].len();
    let dim = 6 * tracks.len();
    let rate = h.saturating_sub(1).max(1) as f64;
    let mut data = Vec::with_capacity(h * dim);
    for k in 0..h {
        for tr in tracks {
            data.extend_from_slice(&tr[k].to_array());
        }
        for tr in tracks {
            let v = if k == 0 {
                Point3::ZERO
            } else {
                (tr[k] - tr[k - 1]) * rate
            };
            data.extend_from_slice(&v.to_array());
        }
    }
    FeatureSequence { dim, data }
}

/// Normalization, fixed-length resampling and encoding shared by training
/// and classification.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Preprocessor {
    pub frames: usize,
}

impl Preprocessor {
    pub fn apply(&self, t: &Trajectory) -> Result<FeatureSequence> {
        let (n, _) = normalize(t);
        Ok(encode(&resample(&n, self.frames)?))
    }
}
