//! Linear-chain conditional random field over sparse binary observation
//! features.
//!
//! Score of a labeling `y` of a sequence `x`:
//! `sum_t sum_{f in x_t} W[y_t, f] + S[y_0] + sum_t T[y_{t-1}, y_t]`.
//! Training maximizes `sum log p(y|x) - l2/2 |w|^2` by gradient ascent with
//! an Armijo backtracking line search. Inference is Viterbi.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Active feature ids per position.
pub type Observation = Vec<Vec<usize>>;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CrfTrainConfig {
    pub l2: f64,
    pub max_iter: usize,
    /// Stop once the relative objective gain drops below this.
    pub rel_tol: f64,
}

impl Default for CrfTrainConfig {
    fn default() -> Self {
        CrfTrainConfig {
            l2: 1.0,
            max_iter: 500,
            rel_tol: 1e-9,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearChainCrf {
    labels: usize,
    features: usize,
    /// `[emission (labels x features) | transition (labels x labels) | start (labels)]`
    weights: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    pub objective_history: Vec<f64>,
    pub iterations: usize,
}

impl LinearChainCrf {
    pub fn new(labels: usize, features: usize) -> Self {
        LinearChainCrf {
            labels,
            features,
            weights: vec![0.0; labels * features + labels * labels + labels],
        }
    }

    pub fn labels(&self) -> usize {
        self.labels
    }

    pub fn features(&self) -> usize {
        self.features
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn set_weights(&mut self, w: Vec<f64>) {
        assert_eq!(w.len(), self.weights.len());
        self.weights = w;
    }

    fn emit_w(&self, w: &[f64], y: usize, f: usize) -> f64 {
        w[y * self.features + f]
    }

    fn trans_off(&self) -> usize {
        self.labels * self.features
    }

    fn start_off(&self) -> usize {
        self.labels * self.features + self.labels * self.labels
    }

    fn check(&self, x: &Observation, y: Option<&[usize]>) -> Result<()> {
        if x.is_empty() {
            return Err(Error::invalid("CRF sequence is empty"));
        }
        if x.iter().flatten().any(|&f| f >= self.features) {
            return Err(Error::invalid("CRF feature id out of range"));
        }
        if let Some(y) = y {
            if y.len() != x.len() || y.iter().any(|&l| l >= self.labels) {
                return Err(Error::invalid("CRF labeling does not match its sequence"));
            }
        }
        Ok(())
    }

    /// Per-position label scores (`T x labels`).
    fn node_scores(&self, w: &[f64], x: &Observation) -> Vec<f64> {
        let l = self.labels;
        let mut s = vec![0.0; x.len() * l];
        for (t, feats) in x.iter().enumerate() {
            for y in 0..l {
                s[t * l + y] = feats.iter().map(|&f| self.emit_w(w, y, f)).sum();
            }
        }
        s
    }

    /// Unnormalized score of a labeling.
    pub fn score(&self, x: &Observation, y: &[usize]) -> f64 {
        let w = &self.weights;
        let l = self.labels;
        let mut s = w[self.start_off() + y[0]];
        for (t, feats) in x.iter().enumerate() {
            s += feats.iter().map(|&f| self.emit_w(w, y[t], f)).sum::<f64>();
            if t > 0 {
                s += w[self.trans_off() + y[t - 1] * l + y[t]];
            }
        }
        s
    }

    /// Scaled forward pass in probability space. Returns normalized alphas,
    /// log scale factors and the potentials used.
    fn forward(&self, w: &[f64], x: &Observation) -> Forward {
        let l = self.labels;
        let t_len = x.len();
        let node = self.node_scores(w, x);
        // Shift each position by its max so exp never overflows.
        let mut node_pot = vec![0.0; t_len * l];
        let mut log_shift = 0.0;
        for t in 0..t_len {
            let row = &node[t * l..(t + 1) * l];
            let mx = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            log_shift += mx;
            for y in 0..l {
                node_pot[t * l + y] = (row[y] - mx).exp();
            }
        }
        let trans_off = self.trans_off();
        let trans_pot: Vec<f64> = w[trans_off..trans_off + l * l].iter().map(|v| v.exp()).collect();
        let start_off = self.start_off();
        let start_pot: Vec<f64> = w[start_off..start_off + l].iter().map(|v| v.exp()).collect();

        let mut alpha = vec![0.0; t_len * l];
        let mut log_scale = vec![0.0; t_len];
        for t in 0..t_len {
            let mut sum = 0.0;
            for y in 0..l {
                let inc = if t == 0 {
                    start_pot[y]
                } else {
                    (0..l).map(|p| alpha[(t - 1) * l + p] * trans_pot[p * l + y]).sum()
                };
                let a = inc * node_pot[t * l + y];
                alpha[t * l + y] = a;
                sum += a;
            }
            for a in &mut alpha[t * l..(t + 1) * l] {
                *a /= sum;
            }
            log_scale[t] = sum.ln();
        }
        Forward {
            alpha,
            scale: log_scale.iter().map(|s| s.exp()).collect(),
            log_z: log_scale.iter().sum::<f64>() + log_shift,
            node_pot,
            trans_pot,
        }
    }

    pub fn log_partition(&self, x: &Observation) -> f64 {
        self.forward(&self.weights, x).log_z
    }

    pub fn log_likelihood(&self, x: &Observation, y: &[usize]) -> f64 {
        self.score(x, y) - self.log_partition(x)
    }

    /// Regularized objective `sum log p(y|x) - l2/2 |w|^2` at `w`.
    fn objective_at(&self, w: &[f64], data: &[(Observation, Vec<usize>)], l2: f64) -> f64 {
        let probe = LinearChainCrf {
            labels: self.labels,
            features: self.features,
            weights: w.to_vec(),
        };
        let ll: f64 = data
            .iter()
            .map(|(x, y)| probe.score(x, y) - probe.forward(w, x).log_z)
            .sum();
        ll - 0.5 * l2 * w.iter().map(|v| v * v).sum::<f64>()
    }

    pub fn objective(&self, data: &[(Observation, Vec<usize>)], l2: f64) -> f64 {
        self.objective_at(&self.weights, data, l2)
    }

    /// Objective and its gradient at the current weights.
    pub fn objective_and_gradient(&self, data: &[(Observation, Vec<usize>)], l2: f64) -> (f64, Vec<f64>) {
        let w = &self.weights;
        let l = self.labels;
        let trans_off = self.trans_off();
        let start_off = self.start_off();
        let mut grad: Vec<f64> = w.iter().map(|v| -l2 * v).collect();
        let mut obj = -0.5 * l2 * w.iter().map(|v| v * v).sum::<f64>();

        for (x, y) in data {
            let fw = self.forward(w, x);
            obj += self.score(x, y) - fw.log_z;
            let t_len = x.len();

            // empirical counts
            grad[start_off + y[0]] += 1.0;
            for (t, feats) in x.iter().enumerate() {
                for &f in feats {
                    grad[y[t] * self.features + f] += 1.0;
                }
                if t > 0 {
                    grad[trans_off + y[t - 1] * l + y[t]] += 1.0;
                }
            }

            // backward, scaled with the forward factors
            let mut beta = vec![0.0; t_len * l];
            for b in &mut beta[(t_len - 1) * l..] {
                *b = 1.0;
            }
            for t in (0..t_len - 1).rev() {
                for p in 0..l {
                    let mut s = 0.0;
                    for q in 0..l {
                        s += fw.trans_pot[p * l + q] * fw.node_pot[(t + 1) * l + q] * beta[(t + 1) * l + q];
                    }
                    beta[t * l + p] = s / fw.scale[t + 1];
                }
            }

            // expected counts
            for (t, feats) in x.iter().enumerate() {
                for yv in 0..l {
                    let marg = fw.alpha[t * l + yv] * beta[t * l + yv];
                    if t == 0 {
                        grad[start_off + yv] -= marg;
                    }
                    for &f in feats {
                        grad[yv * self.features + f] -= marg;
                    }
                }
                if t > 0 {
                    for p in 0..l {
                        let a = fw.alpha[(t - 1) * l + p];
                        for q in 0..l {
                            let m =
                                a * fw.trans_pot[p * l + q] * fw.node_pot[t * l + q] * beta[t * l + q] / fw.scale[t];
                            grad[trans_off + p * l + q] -= m;
                        }
                    }
                }
            }
        }
        (obj, grad)
    }

    /// Gradient ascent with Armijo backtracking. The trial step starts at
    /// twice the last accepted one.
    pub fn train(&mut self, data: &[(Observation, Vec<usize>)], cfg: &CrfTrainConfig) -> Result<TrainReport> {
        if data.is_empty() {
            return Err(Error::invalid("CRF training needs data"));
        }
        for (x, y) in data {
            self.check(x, Some(y))?;
        }
        let mut history = Vec::new();
        let mut step: f64 = 1.0;
        let mut iterations = 0;
        let (mut obj, mut grad) = self.objective_and_gradient(data, cfg.l2);
        history.push(obj);
        while iterations < cfg.max_iter {
            let g2: f64 = grad.iter().map(|g| g * g).sum();
            if g2 == 0.0 {
                break;
            }
            step = (step * 2.0).min(1e6);
            let mut accepted = None;
            for _ in 0..60 {
                let trial: Vec<f64> = self.weights.iter().zip(&grad).map(|(w, g)| w + step * g).collect();
                let trial_obj = self.objective_at(&trial, data, cfg.l2);
                if trial_obj >= obj + 1e-4 * step * g2 {
                    accepted = Some((trial, trial_obj));
                    break;
                }
                step *= 0.5;
            }
            let Some((w, new_obj)) = accepted else { break };
            iterations += 1;
            self.weights = w;
            let gain = new_obj - obj;
            let (o, g) = self.objective_and_gradient(data, cfg.l2);
            obj = o;
            grad = g;
            history.push(obj);
            if gain <= cfg.rel_tol * obj.abs().max(1.0) {
                break;
            }
        }
        Ok(TrainReport {
            objective_history: history,
            iterations,
        })
    }

    /// Highest-scoring labeling and its score. Ties prefer lower labels.
    pub fn viterbi(&self, x: &Observation) -> Result<(Vec<usize>, f64)> {
        self.check(x, None)?;
        let w = &self.weights;
        let l = self.labels;
        let t_len = x.len();
        let node = self.node_scores(w, x);
        let trans = &w[self.trans_off()..self.trans_off() + l * l];
        let start = &w[self.start_off()..self.start_off() + l];
        let mut delta: Vec<f64> = (0..l).map(|y| start[y] + node[y]).collect();
        let mut back = vec![0usize; t_len * l];
        for t in 1..t_len {
            let mut next = vec![0.0; l];
            for q in 0..l {
                let mut best = (f64::NEG_INFINITY, 0);
                for p in 0..l {
                    let v = delta[p] + trans[p * l + q];
                    if v > best.0 {
                        best = (v, p);
                    }
                }
                next[q] = best.0 + node[t * l + q];
                back[t * l + q] = best.1;
            }
            delta = next;
        }
        let mut best = (f64::NEG_INFINITY, 0);
        for (y, &v) in delta.iter().enumerate() {
            if v > best.0 {
                best = (v, y);
            }
        }
        let mut path = vec![0; t_len];
        path[t_len - 1] = best.1;
        for t in (1..t_len).rev() {
            path[t - 1] = back[t * l + path[t]];
        }
        Ok((path, best.0))
    }
}

struct Forward {
    alpha: Vec<f64>,
    scale: Vec<f64>,
    log_z: f64,
    node_pot: Vec<f64>,
    trans_pot: Vec<f64>,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy() -> (LinearChainCrf, Vec<(Observation, Vec<usize>)>) {
        let mut crf = LinearChainCrf::new(2, 3);
        let w: Vec<f64> = (0..crf.weights().len())
            .map(|i| ((i * 7 % 5) as f64 - 2.0) * 0.3)
            .collect();
        crf.set_weights(w);
        let data = vec![
            (vec![vec![0], vec![1, 2], vec![2]], vec![0, 1, 1]),
            (vec![vec![1], vec![0], vec![0, 2], vec![1]], vec![1, 0, 0, 1]),
        ];
        (crf, data)
    }

    #[test]
    fn zero_weights_give_uniform_distribution() {
        let crf = LinearChainCrf::new(3, 4);
        let x: Observation = vec![vec![0], vec![1, 3], vec![2], vec![3], vec![0]];
        let ll = crf.log_likelihood(&x, &[0, 2, 1, 1, 0]);
        assert!((ll + 5.0 * 3f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn partition_matches_enumeration() {
        let (crf, data) = toy();
        let x = &data[0].0;
        let mut z = 0.0;
        for code in 0..8usize {
            let y = [code & 1, (code >> 1) & 1, (code >> 2) & 1];
            z += crf.score(x, &y).exp();
        }
        assert!((crf.log_partition(x) - z.ln()).abs() < 1e-12);
    }

    #[test]
    fn viterbi_matches_enumeration() {
        let (crf, data) = toy();
        let x = &data[1].0;
        let mut best = (f64::NEG_INFINITY, vec![]);
        for code in 0..16usize {
            let y: Vec<usize> = (0..4).map(|i| (code >> i) & 1).collect();
            let s = crf.score(x, &y);
            if s > best.0 {
                best = (s, y);
            }
        }
        let (path, score) = crf.viterbi(x).unwrap();
        assert_eq!(path, best.1);
        assert!((score - best.0).abs() < 1e-12);
    }

    #[test]
    fn training_increases_objective() {
        let (_, data) = toy();
        let mut crf = LinearChainCrf::new(2, 3);
        let rep = crf.train(&data, &CrfTrainConfig::default()).unwrap();
        for w in rep.objective_history.windows(2) {
            assert!(w[1] >= w[0]);
        }
    }
}
