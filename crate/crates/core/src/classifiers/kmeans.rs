//! k-means vector quantization codebook (k-means++ seeding, Lloyd updates).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{Domain, KeyedRng};

const MAX_ITER: usize = 100;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Codebook {
    dim: usize,
    centroids: Vec<f64>,
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

impl Codebook {
    /// Fits `k` codewords to `points`. Empty clusters are re-seeded from
    /// the point farthest from its current codeword.
    pub fn fit(points: &[&[f64]], k: usize, seed: u64) -> Result<Self> {
        if points.is_empty() || k == 0 {
            return Err(Error::invalid("codebook needs points and k >= 1"));
        }
        let dim = points[0].len();
        if points.iter().any(|p| p.len() != dim) {
            return Err(Error::invalid("codebook points differ in dimension"));
        }
        let mut rng = KeyedRng::new(Domain::KMeans, seed, k as u64, points.len() as u64);

        let mut centroids: Vec<f64> = Vec::with_capacity(k * dim);
        centroids.extend_from_slice(points[rng.below(points.len())]);
        let mut d2: Vec<f64> = points.iter().map(|p| sq_dist(p, &centroids[..dim])).collect();
        for _ in 1..k {
            let total: f64 = d2.iter().sum();
            let pick = if total > 0.0 {
                let mut r = rng.uniform() * total;
                let mut idx = points.len() - 1;
                for (i, d) in d2.iter().enumerate() {
                    if r < *d {
                        idx = i;
                        break;
                    }
                    r -= d;
                }
                idx
            } else {
                rng.below(points.len())
            };
            centroids.extend_from_slice(points[pick]);
            let c = &centroids[centroids.len() - dim..];
            for (d, p) in d2.iter_mut().zip(points) {
                *d = d.min(sq_dist(p, c));
            }
        }

        let mut book = Codebook { dim, centroids };
        let mut assign = vec![usize::MAX; points.len()];
        for _ in 0..MAX_ITER {
            let mut changed = false;
            for (a, p) in assign.iter_mut().zip(points) {
                let q = book.quantize(p);
                if *a != q {
                    *a = q;
                    changed = true;
                }
            }
            if !changed {
                break;
            }
            let mut sums = vec![0.0; k * dim];
            let mut counts = vec![0usize; k];
            for (&a, p) in assign.iter().zip(points) {
                counts[a] += 1;
                for (s, v) in sums[a * dim..(a + 1) * dim].iter_mut().zip(p.iter()) {
                    *s += v;
                }
            }
            for c in 0..k {
                if counts[c] > 0 {
                    for j in 0..dim {
                        book.centroids[c * dim + j] = sums[c * dim + j] / counts[c] as f64;
                    }
                }
            }
            for c in (0..k).filter(|&c| counts[c] == 0) {
                let far = (0..points.len())
                    .max_by(|&i, &j| {
                        let di = sq_dist(points[i], book.codeword(assign[i]));
                        let dj = sq_dist(points[j], book.codeword(assign[j]));
                        di.total_cmp(&dj).then(j.cmp(&i))
                    })
                    .unwrap();
                book.centroids[c * dim..(c + 1) * dim].copy_from_slice(points[far]);
                assign[far] = c;
            }
        }
        Ok(book)
    }

    pub fn len(&self) -> usize {
        self.centroids.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.centroids.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn codeword(&self, i: usize) -> &[f64] {
        &self.centroids[i * self.dim..(i + 1) * self.dim]
    }

    /// Nearest codeword; ties go to the lowest index.
    pub fn quantize(&self, x: &[f64]) -> usize {
        let mut best = (f64::INFINITY, 0);
        for i in 0..self.len() {
            let d = sq_dist(x, self.codeword(i));
            if d < best.0 {
                best = (d, i);
            }
        }
        best.1
    }
}
