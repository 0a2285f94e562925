//! Discrete-emission hidden Markov models trained by Baum-Welch.
//!
//! Forward and backward passes are scaled per time step, so likelihoods of
//! long sequences stay representable. Structural zeros (transitions a
//! left-to-right topology forbids) stay zero; every other probability is
//! kept at or above a floor by a constrained M-step, which projects the
//! expected counts onto `{p : p_k >= floor, sum p = 1}` exactly. Because
//! the previous parameters are always feasible, EM's monotone likelihood
//! guarantee survives the floor.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BaumWelchConfig {
    pub max_iter: usize,
    /// Stop once the log-likelihood gain falls below this; negative values
    /// disable early stopping.
    pub tol: f64,
    pub floor: f64,
}

impl Default for BaumWelchConfig {
    fn default() -> Self {
        BaumWelchConfig {
            max_iter: 200,
            tol: 1e-6,
            floor: 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteHmm {
    states: usize,
    symbols: usize,
    initial: Vec<f64>,
    /// Row-major `states x states`.
    transition: Vec<f64>,
    /// Row-major `states x symbols`.
    emission: Vec<f64>,
    /// Allowed initial states / transitions; false entries are fixed at 0.
    initial_mask: Vec<bool>,
    transition_mask: Vec<bool>,
}

impl DiscreteHmm {
    pub fn new(initial: Vec<f64>, transition: Vec<f64>, emission: Vec<f64>) -> Result<Self> {
        let states = initial.len();
        if states == 0 || transition.len() != states * states || emission.len() % states != 0 {
            return Err(Error::invalid("inconsistent HMM parameter shapes"));
        }
        let symbols = emission.len() / states;
        let hmm = DiscreteHmm {
            states,
            symbols,
            initial_mask: initial.iter().map(|&p| p > 0.0).collect(),
            transition_mask: transition.iter().map(|&p| p > 0.0).collect(),
            initial,
            transition,
            emission,
        };
        hmm.check_stochastic(1e-9)?;
        Ok(hmm)
    }

    /// Left-to-right model initialized by cutting every sequence into
    /// `states` equal segments and counting, then projected onto the floor.
    pub fn left_to_right(states: usize, symbols: usize, sequences: &[Vec<usize>], floor: f64) -> Result<Self> {
        if states == 0 || symbols == 0 {
            return Err(Error::invalid("HMM needs at least one state and symbol"));
        }
        if sequences.is_empty() || sequences.iter().any(|s| s.is_empty()) {
            return Err(Error::invalid("HMM training needs non-empty sequences"));
        }
        let mut initial_mask = vec![false; states];
        initial_mask[0] = true;
        let mut transition_mask = vec![false; states * states];
        for i in 0..states {
            transition_mask[i * states + i] = true;
            if i + 1 < states {
                transition_mask[i * states + i + 1] = true;
            }
        }
        let mut trans_counts = vec![0.0; states * states];
        let mut emit_counts = vec![0.0; states * symbols];
        for seq in sequences {
            let t_len = seq.len();
            let state_of = |t: usize| (t * states / t_len).min(states - 1);
            for (t, &o) in seq.iter().enumerate() {
                if o >= symbols {
                    return Err(Error::invalid(format!("symbol {o} outside alphabet of {symbols}")));
                }
                let s = state_of(t);
                emit_counts[s * symbols + o] += 1.0;
                if t + 1 < t_len {
                    trans_counts[s * states + state_of(t + 1)] += 1.0;
                }
            }
        }
        let mut hmm = DiscreteHmm {
            states,
            symbols,
            initial: vec![0.0; states],
            transition: vec![0.0; states * states],
            emission: vec![0.0; states * symbols],
            initial_mask,
            transition_mask,
        };
        let mut init_counts = vec![0.0; states];
        init_counts[0] = 1.0;
        hmm.m_step(&init_counts, &trans_counts, &emit_counts, floor);
        Ok(hmm)
    }

    pub fn states(&self) -> usize {
        self.states
    }

    pub fn symbols(&self) -> usize {
        self.symbols
    }

    pub fn initial(&self) -> &[f64] {
        &self.initial
    }

    pub fn transition(&self, i: usize, j: usize) -> f64 {
        self.transition[i * self.states + j]
    }

    pub fn emission(&self, i: usize, o: usize) -> f64 {
        self.emission[i * self.symbols + o]
    }

    /// Rows of every stochastic matrix sum to 1 within `tol`.
    pub fn check_stochastic(&self, tol: f64) -> Result<()> {
        let rows = std::iter::once(self.initial.as_slice())
            .chain(self.transition.chunks(self.states))
            .chain(self.emission.chunks(self.symbols));
        for row in rows {
            let s: f64 = row.iter().sum();
            if (s - 1.0).abs() > tol || row.iter().any(|p| !(*p >= 0.0)) {
                return Err(Error::invalid(format!("HMM row sums to {s}")));
            }
        }
        Ok(())
    }

    /// Smallest probability among entries that are not structural zeros.
    pub fn min_free_probability(&self) -> f64 {
        let free_init = self
            .initial
            .iter()
            .zip(&self.initial_mask)
            .filter(|(_, m)| **m)
            .map(|(p, _)| *p);
        let free_trans = self
            .transition
            .iter()
            .zip(&self.transition_mask)
            .filter(|(_, m)| **m)
            .map(|(p, _)| *p);
        free_init
            .chain(free_trans)
            .chain(self.emission.iter().copied())
            .fold(f64::INFINITY, f64::min)
    }

    /// Scaled forward pass: normalized alphas (`T x states`) and the
    /// per-step scale factors whose logs sum to the log-likelihood.
    fn forward(&self, obs: &[usize]) -> (Vec<f64>, Vec<f64>) {
        let n = self.states;
        let mut alpha = vec![0.0; obs.len() * n];
        let mut scale = vec![0.0; obs.len()];
        for (t, &o) in obs.iter().enumerate() {
            let mut sum = 0.0;
            for j in 0..n {
                let incoming = if t == 0 {
                    self.initial[j]
                } else {
                    let prev = &alpha[(t - 1) * n..t * n];
                    (0..n).map(|i| prev[i] * self.transition[i * n + j]).sum()
                };
                let a = incoming * self.emission[j * self.symbols + o];
                alpha[t * n + j] = a;
                sum += a;
            }
            scale[t] = sum;
            if sum > 0.0 {
                for a in &mut alpha[t * n..(t + 1) * n] {
                    *a /= sum;
                }
            }
        }
        (alpha, scale)
    }

    fn backward(&self, obs: &[usize], scale: &[f64]) -> Vec<f64> {
        let n = self.states;
        let t_len = obs.len();
        let mut beta = vec![0.0; t_len * n];
        for b in &mut beta[(t_len - 1) * n..] {
            *b = 1.0;
        }
        for t in (0..t_len - 1).rev() {
            let o = obs[t + 1];
            for i in 0..n {
                let mut s = 0.0;
                for j in 0..n {
                    s += self.transition[i * n + j] * self.emission[j * self.symbols + o] * beta[(t + 1) * n + j];
                }
                beta[t * n + i] = s / scale[t + 1];
            }
        }
        beta
    }

    /// Natural-log likelihood of `obs`; `-inf` for impossible sequences.
    pub fn log_likelihood(&self, obs: &[usize]) -> f64 {
        if obs.iter().any(|&o| o >= self.symbols) {
            return f64::NEG_INFINITY;
        }
        let (_, scale) = self.forward(obs);
        scale.iter().map(|c| c.ln()).sum()
    }

    /// Runs Baum-Welch in place. Returns the total log-likelihood of the
    /// data under the parameters at the start of each iteration, plus the
    /// final one.
    pub fn baum_welch(&mut self, sequences: &[Vec<usize>], cfg: &BaumWelchConfig) -> Result<Vec<f64>> {
        if sequences.iter().flatten().any(|&o| o >= self.symbols) {
            return Err(Error::invalid("observation outside the HMM alphabet"));
        }
        let n = self.states;
        let m = self.symbols;
        let mut history = Vec::with_capacity(cfg.max_iter + 1);
        for _ in 0..cfg.max_iter {
            let mut init_c = vec![0.0; n];
            let mut trans_c = vec![0.0; n * n];
            let mut emit_c = vec![0.0; n * m];
            let mut total = 0.0;
            for obs in sequences.iter().filter(|s| !s.is_empty()) {
                let (alpha, scale) = self.forward(obs);
                total += scale.iter().map(|c| c.ln()).sum::<f64>();
                let beta = self.backward(obs, &scale);
                for (t, &o) in obs.iter().enumerate() {
                    for i in 0..n {
                        let gamma = alpha[t * n + i] * beta[t * n + i];
                        if t == 0 {
                            init_c[i] += gamma;
                        }
                        emit_c[i * m + o] += gamma;
                    }
                    if t + 1 < obs.len() {
                        let o1 = obs[t + 1];
                        for i in 0..n {
                            let a = alpha[t * n + i];
                            if a == 0.0 {
                                continue;
                            }
                            for j in 0..n {
                                trans_c[i * n + j] +=
                                    a * self.transition[i * n + j] * self.emission[j * m + o1] * beta[(t + 1) * n + j]
                                        / scale[t + 1];
                            }
                        }
                    }
                }
            }
            let gain = history.last().map(|&prev: &f64| total - prev);
            history.push(total);
            if let Some(g) = gain {
                if cfg.tol >= 0.0 && g < cfg.tol {
                    return Ok(history);
                }
            }
            self.m_step(&init_c, &trans_c, &emit_c, cfg.floor);
        }
        history.push(sequences.iter().map(|s| self.log_likelihood(s)).sum());
        Ok(history)
    }

    fn m_step(&mut self, init_c: &[f64], trans_c: &[f64], emit_c: &[f64], floor: f64) {
        let n = self.states;
        let m = self.symbols;
        project_row(init_c, &self.initial_mask, floor, &mut self.initial);
        for i in 0..n {
            project_row(
                &trans_c[i * n..(i + 1) * n],
                &self.transition_mask[i * n..(i + 1) * n],
                floor,
                &mut self.transition[i * n..(i + 1) * n],
            );
        }
        let all = vec![true; m];
        for i in 0..n {
            project_row(
                &emit_c[i * m..(i + 1) * m],
                &all,
                floor,
                &mut self.emission[i * m..(i + 1) * m],
            );
        }
    }
}

/// Maximizes `sum c_k ln p_k` over `{p_k >= floor on allowed k, p_k = 0
/// elsewhere, sum p = 1}`: `p_k = max(floor, c_k / lambda)` with `lambda`
/// found by growing the floored set until it is stable.
fn project_row(counts: &[f64], allowed: &[bool], floor: f64, out: &mut [f64]) {
    let free: Vec<usize> = (0..counts.len()).filter(|&k| allowed[k]).collect();
    let floor = floor.min(1.0 / free.len() as f64);
    let mut floored = vec![false; counts.len()];
    loop {
        let n_floored = free.iter().filter(|&&k| floored[k]).count();
        let mass = 1.0 - n_floored as f64 * floor;
        let active: Vec<usize> = free.iter().copied().filter(|&k| !floored[k]).collect();
        let sum: f64 = active.iter().map(|&k| counts[k]).sum();
        out.fill(0.0);
        for &k in &free {
            if floored[k] {
                out[k] = floor;
            }
        }
        for &k in &active {
            out[k] = if sum > 0.0 {
                mass * counts[k] / sum
            } else {
                mass / active.len() as f64
            };
        }
        let mut grew = false;
        for &k in &active {
            if out[k] < floor {
                floored[k] = true;
                grew = true;
            }
        }
        if !grew {
            break;
        }
    }
}
