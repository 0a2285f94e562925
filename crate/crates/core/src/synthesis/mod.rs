//! Artificial sample generation from a gist.
//!
//! A sample is drawn by perturbing every placeholder position with zero-mean
//! Gaussian noise (per-axis variance = placeholder variance x gain),
//! jittering interior placeholder times without reordering them, and
//! reconstructing a smooth path through the perturbed placeholders with
//! minimum-jerk segments. The path is then sampled at a jittered length.
//!
//! Randomness is keyed by `(rng_seed, label index, sample index)`; draws are
//! consumed in a fixed order: length, then positions (effector, placeholder,
//! axis), then interior times (effector, placeholder).

mod minjerk;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use minjerk::{min_jerk_blend, MinJerkPath};

use crate::error::{Error, Result};
use crate::gist::GestureGist;
use crate::preprocess::{normalize, resample};
use crate::rng::{Domain, KeyedRng};
use crate::types::{GestureLabel, Lexicon, Point3, Trajectory, MIN_FRAMES};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthesisParams {
    /// Samples per class, seed included.
    pub m_des: usize,
    pub spatial_noise_gain: f64,
    /// Interior placeholder times move by at most this fraction of the
    /// smaller neighboring gap.
    pub temporal_jitter: f64,
    pub length_jitter: f64,
    pub base_length: usize,
    pub rng_seed: u64,
}

impl Default for SynthesisParams {
    fn default() -> Self {
        SynthesisParams {
            m_des: 20,
            spatial_noise_gain: 1.0,
            temporal_jitter: 0.1,
            length_jitter: 0.1,
            base_length: 40,
            rng_seed: 0,
        }
    }
}

impl SynthesisParams {
    /// All noise sources switched off.
    pub fn noiseless(self) -> Self {
        SynthesisParams {
            spatial_noise_gain: 0.0,
            temporal_jitter: 0.0,
            length_jitter: 0.0,
            ..self
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.m_des < 1 {
            return Err(Error::invalid("m_des must be at least 1"));
        }
        if self.base_length < MIN_FRAMES {
            return Err(Error::invalid(format!("base_length must be at least {MIN_FRAMES}")));
        }
        if !(self.spatial_noise_gain >= 0.0) {
            return Err(Error::invalid("spatial_noise_gain must be non-negative"));
        }
        for (name, v) in [
            ("temporal_jitter", self.temporal_jitter),
            ("length_jitter", self.length_jitter),
        ] {
            if !(0.0..0.5).contains(&v) {
                return Err(Error::invalid(format!("{name} must lie in [0, 0.5), got {v}")));
            }
        }
        Ok(())
    }

    /// Inclusive bounds on output length.
    pub fn length_bounds(&self) -> (usize, usize) {
        let b = self.base_length as f64;
        let lo = (b * (1.0 - self.length_jitter)).round() as usize;
        let hi = (b * (1.0 + self.length_jitter)).round() as usize;
        (lo.max(MIN_FRAMES), hi.max(MIN_FRAMES))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub gist_id: String,
    pub sample_index: usize,
    pub rng_seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSample {
    pub trajectory: Trajectory,
    pub label: GestureLabel,
    pub provenance: Provenance,
}

/// The random part of one sample: perturbed paths and the output length.
#[derive(Debug, Clone)]
pub struct Perturbation {
    pub paths: Vec<MinJerkPath>,
    pub frames: usize,
}

pub fn perturb(g: &GestureGist, params: &SynthesisParams, sample_index: usize) -> Perturbation {
    let mut rng = KeyedRng::new(
        Domain::Synthesis,
        params.rng_seed,
        g.source_label.index as u64,
        sample_index as u64,
    );
    let u = rng.uniform_range(-params.length_jitter, params.length_jitter);
    let frames = ((params.base_length as f64 * (1.0 + u)).round() as usize).max(MIN_FRAMES);

    let positions: Vec<Vec<Point3>> = g
        .effectors
        .iter()
        .map(|track| {
            track
                .iter()
                .map(|p| {
                    let mut d = [0.0; 3];
                    for (ax, v) in d.iter_mut().enumerate() {
                        let sd = (p.variance[ax] * params.spatial_noise_gain).sqrt();
                        *v = sd * rng.normal();
                    }
                    p.position + Point3::from(d)
                })
                .collect()
        })
        .collect();

    let paths = g
        .effectors
        .iter()
        .zip(positions)
        .map(|(track, pos)| {
            let n = track.len();
            let mut knots = Vec::with_capacity(n);
            for q in 0..n {
                let tau = track[q].time_fraction;
                let tau = if q == 0 || q == n - 1 {
                    tau
                } else {
                    let gap = (tau - track[q - 1].time_fraction).min(track[q + 1].time_fraction - tau);
                    tau + rng.uniform_range(-1.0, 1.0) * params.temporal_jitter * gap
                };
                knots.push((tau, pos[q]));
            }
            MinJerkPath::new(knots)
        })
        .collect();
    Perturbation { paths, frames }
}

pub fn synthesize_one(g: &GestureGist, params: &SynthesisParams, sample_index: usize) -> Result<SyntheticSample> {
    if sample_index < 1 {
        return Err(Error::invalid("sample_index starts at 1"));
    }
    let Perturbation { paths, frames } = perturb(g, params, sample_index);
    let taus: Vec<f64> = (0..frames).map(|k| k as f64 / (frames - 1) as f64).collect();
    let times = taus.iter().map(|tau| tau * g.duration).collect();
    let tracks: Vec<Vec<Point3>> = paths
        .iter()
        .map(|p| taus.iter().map(|&tau| p.eval(tau)).collect())
        .collect();
    Ok(SyntheticSample {
        trajectory: Trajectory::from_tracks(times, &tracks)?,
        label: g.source_label.clone(),
        provenance: Provenance {
            gist_id: g.id(),
            sample_index,
            rng_seed: params.rng_seed,
        },
    })
}

/// Normalizes a raw observation, shifts it to start at time 0 and resamples
/// it to `frames`. Gists and seed samples both go through this.
pub fn prepare_seed(t: &Trajectory, frames: usize) -> Result<Trajectory> {
    let (n, _) = normalize(t);
    let t0 = n.start_time();
    let shifted = n.with_times(n.times().iter().map(|x| x - t0).collect())?;
    resample(&shifted, frames)
}

/// `m_des` samples per class: the prepared seed as sample 1, synthetic
/// samples 2..=m_des. Ordered by label, then sample index.
pub fn generate_dataset(
    lex: &Lexicon,
    gists: &[GestureGist],
    params: &SynthesisParams,
) -> Result<Vec<SyntheticSample>> {
    params.validate()?;
    let mut per_label = Vec::with_capacity(lex.len());
    for (label, seed) in lex.labels().iter().zip(lex.seeds()) {
        let gist = gists
            .iter()
            .find(|g| &g.source_label == label)
            .ok_or_else(|| Error::invalid(format!("no gist for label `{}`", label.name)))?;
        gist.validate()?;
        per_label.push((label, seed, gist));
    }
    let jobs: Vec<_> = per_label
        .iter()
        .flat_map(|&(label, seed, gist)| (1..=params.m_des).map(move |k| (label, seed, gist, k)))
        .collect();
    jobs.par_iter()
        .map(|&(label, seed, gist, k)| {
            if k == 1 {
                Ok(SyntheticSample {
                    trajectory: prepare_seed(seed, params.base_length)?,
                    label: label.clone(),
                    provenance: Provenance {
                        gist_id: gist.id(),
                        sample_index: 1,
                        rng_seed: params.rng_seed,
                    },
                })
            } else {
                synthesize_one(gist, params, k)
            }
        })
        .collect()
}
