//! Dynamic time warping with the symmetric match/insert/delete step pattern.

use serde::{Deserialize, Serialize};

use super::features::FeatureSequence;

/// DTW distance between sequences of lengths `n` and `m` under `cost(i, j)`.
///
/// `band` restricts cells to `|i - j| <= w`, with `w` widened to `|n - m|`
/// so the end cell stays reachable. Each cell's cost is counted once along
/// the path.
pub fn dtw_with(n: usize, m: usize, band: Option<usize>, cost: impl Fn(usize, usize) -> f64) -> f64 {
    if n == 0 || m == 0 {
        return if n == m { 0.0 } else { f64::INFINITY };
    }
    let w = band.map(|w| w.max(n.abs_diff(m)));
    let mut prev = vec![f64::INFINITY; m + 1];
    let mut cur = vec![f64::INFINITY; m + 1];
    prev[0] = 0.0;
    for i in 1..=n {
        cur.fill(f64::INFINITY);
        let (lo, hi) = match w {
            Some(w) => (i.saturating_sub(w).max(1), (i + w).min(m)),
            None => (1, m),
        };
        for j in lo..=hi {
            let best = prev[j - 1].min(prev[j]).min(cur[j - 1]);
            cur[j] = cost(i - 1, j - 1) + best;
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[m]
}

pub fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// DTW with Euclidean local cost between feature rows.
pub fn dtw(a: &FeatureSequence, b: &FeatureSequence, band: Option<usize>) -> f64 {
    dtw_with(a.len(), b.len(), band, |i, j| euclidean(a.row(i), b.row(j)))
}

/// Sakoe-Chiba band as a fraction of the longer sequence.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Band(pub Option<f64>);

impl Band {
    pub fn width(&self, n: usize, m: usize) -> Option<usize> {
        self.0.map(|f| (f * n.max(m) as f64).ceil() as usize)
    }
}
