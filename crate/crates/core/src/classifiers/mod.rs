//! The four gesture classifiers behind one train/classify contract.
//!
//! Every model stores the [`Preprocessor`] used at training time, so
//! classification applies the same normalization, resampling and encoding.
//!
//! * HMM: one 5-state left-to-right discrete HMM per class over a shared
//!   k-means codebook; the class with the highest log-likelihood wins.
//! * SVM: one-vs-all RBF machines on flattened fixed-length sequences; the
//!   largest decision value wins.
//! * CRF: a single linear-chain CRF over BIO labels, with zero-motion `O`
//!   padding around each gesture; the majority class of the Viterbi path's
//!   non-`O` labels wins, and an all-`O` path is a rejection.
//! * DTW: 1-nearest-neighbor over stored templates.

pub mod crf;
pub mod dtw;
pub mod features;
pub mod hmm;
pub mod kmeans;
pub mod svm;

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use features::{encode, FeatureSequence, Preprocessor};

use crate::error::{Error, Result};
use crate::types::{GestureLabel, Trajectory};
use crf::{CrfTrainConfig, LinearChainCrf, Observation};
use dtw::Band;
use hmm::{BaumWelchConfig, DiscreteHmm};
use kmeans::Codebook;
use svm::{BinarySvm, SmoConfig};

pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    Hmm,
    Svm,
    Crf,
    Dtw,
}

impl Variant {
    pub const ALL: [Variant; 4] = [Variant::Hmm, Variant::Svm, Variant::Crf, Variant::Dtw];

    pub fn name(&self) -> &'static str {
        match self {
            Variant::Hmm => "hmm",
            Variant::Svm => "svm",
            Variant::Crf => "crf",
            Variant::Dtw => "dtw",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "hmm" => Ok(Variant::Hmm),
            "svm" => Ok(Variant::Svm),
            "crf" => Ok(Variant::Crf),
            "dtw" => Ok(Variant::Dtw),
            other => Err(Error::invalid(format!("unknown classifier `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HmmConfig {
    pub states: usize,
    pub baum_welch: BaumWelchConfig,
}

impl Default for HmmConfig {
    fn default() -> Self {
        HmmConfig {
            states: 5,
            baum_welch: BaumWelchConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SvmConfig {
    pub c: f64,
    /// RBF bandwidth; `None` means `1 / d` for input dimension `d`.
    pub gamma: Option<f64>,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SvmConfig {
    fn default() -> Self {
        SvmConfig {
            c: 10.0,
            gamma: None,
            tol: 1e-3,
            max_iter: 1_000_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CrfConfig {
    pub train: CrfTrainConfig,
    /// Zero-motion `O` frames added before and after each gesture.
    pub padding: usize,
}

impl Default for CrfConfig {
    fn default() -> Self {
        CrfConfig {
            train: CrfTrainConfig::default(),
            padding: 5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DtwConfig {
    /// Sakoe-Chiba band as a fraction of sequence length; `None` disables it.
    pub band: Option<f64>,
    pub medoid_only: bool,
}

impl Default for DtwConfig {
    fn default() -> Self {
        DtwConfig {
            band: Some(0.2),
            medoid_only: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ClassifierConfig {
    /// Frames every sequence is resampled to before encoding.
    pub frames: usize,
    pub codebook_size: usize,
    pub seed: u64,
    pub hmm: HmmConfig,
    pub svm: SvmConfig,
    pub crf: CrfConfig,
    pub dtw: DtwConfig,
}

impl Default for ClassifierConfig {
    fn default() -> Self {
        ClassifierConfig {
            frames: 40,
            codebook_size: 32,
            seed: 0,
            hmm: HmmConfig::default(),
            svm: SvmConfig::default(),
            crf: CrfConfig::default(),
            dtw: DtwConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HmmModel {
    pub codebook: Codebook,
    pub hmms: Vec<DiscreteHmm>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmModel {
    pub input_dim: usize,
    pub machines: Vec<BinarySvm>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrfModel {
    pub codebook: Codebook,
    pub crf: LinearChainCrf,
    pub padding: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DtwModel {
    /// `(class position, template)`.
    pub templates: Vec<(usize, FeatureSequence)>,
    pub band: Band,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "lowercase")]
pub enum ModelParams {
    Hmm(HmmModel),
    Svm(SvmModel),
    Crf(CrfModel),
    Dtw(DtwModel),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub labels: Vec<GestureLabel>,
    pub preprocess: Preprocessor,
    pub config: ClassifierConfig,
    pub params: ModelParams,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub label: GestureLabel,
    pub score: f64,
    /// One score per lexicon class, in label order.
    pub scores: Vec<f64>,
}

/// Index of the maximum; ties go to the lowest index.
pub fn argmax(scores: &[f64]) -> usize {
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate() {
        if s > scores[best] {
            best = i;
        }
    }
    best
}

#[derive(Serialize, Deserialize)]
struct ModelDoc {
    format_version: u32,
    model: TrainedModel,
}

impl TrainedModel {
    pub fn variant(&self) -> Variant {
        match self.params {
            ModelParams::Hmm(_) => Variant::Hmm,
            ModelParams::Svm(_) => Variant::Svm,
            ModelParams::Crf(_) => Variant::Crf,
            ModelParams::Dtw(_) => Variant::Dtw,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&ModelDoc {
            format_version: MODEL_FORMAT_VERSION,
            model: self.clone(),
        })?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let doc: ModelDoc = serde_json::from_str(s)?;
        if doc.format_version != MODEL_FORMAT_VERSION {
            return Err(Error::invalid(format!(
                "model format version {} is not supported",
                doc.format_version
            )));
        }
        Ok(doc.model)
    }

    pub fn classify(&self, t: &Trajectory) -> Result<Prediction> {
        let seq = self.preprocess.apply(t)?;
        self.classify_features(&seq)
    }

    pub fn classify_features(&self, seq: &FeatureSequence) -> Result<Prediction> {
        let n = self.labels.len();
        let (scores, score) = match &self.params {
            ModelParams::Hmm(m) => {
                check_dim(seq, m.codebook.dim())?;
                let obs: Vec<usize> = seq.rows().map(|r| m.codebook.quantize(r)).collect();
                let s: Vec<f64> = m.hmms.iter().map(|h| h.log_likelihood(&obs)).collect();
                let best = s[argmax(&s)];
                (s, best)
            }
            ModelParams::Svm(m) => {
                let flat = seq.flat();
                if flat.len() != m.input_dim {
                    return Err(Error::invalid(format!(
                        "flattened input has {} values, model expects {}",
                        flat.len(),
                        m.input_dim
                    )));
                }
                let s: Vec<f64> = m.machines.iter().map(|svm| svm.decision(flat)).collect();
                let best = s[argmax(&s)];
                (s, best)
            }
            ModelParams::Crf(m) => {
                check_dim(seq, m.codebook.dim())?;
                let codes = crf_codes(&m.codebook, seq, m.padding);
                let (path, path_score) = m.crf.viterbi(&crf_observation(&codes, m.codebook.len()))?;
                let mut counts = vec![0.0; n];
                for &y in &path {
                    if y > 0 {
                        counts[(y - 1) / 2] += 1.0;
                    }
                }
                if counts.iter().all(|&c| c == 0.0) {
                    return Err(Error::Rejected);
                }
                (counts, path_score)
            }
            ModelParams::Dtw(m) => {
                let mut best = vec![f64::INFINITY; n];
                for (class, tpl) in &m.templates {
                    check_dim(seq, tpl.dim())?;
                    let d = dtw::dtw(seq, tpl, m.band.width(seq.len(), tpl.len()));
                    if d < best[*class] {
                        best[*class] = d;
                    }
                }
                let s: Vec<f64> = best.iter().map(|d| -d).collect();
                let top = s[argmax(&s)];
                (s, top)
            }
        };
        if scores.len() != n {
            return Err(Error::invalid("model produced the wrong number of class scores"));
        }
        Ok(Prediction {
            label: self.labels[argmax(&scores)].clone(),
            score,
            scores,
        })
    }
}

fn check_dim(seq: &FeatureSequence, dim: usize) -> Result<()> {
    if seq.dim() != dim {
        return Err(Error::invalid(format!(
            "feature dimension {} does not match model dimension {dim}",
            seq.dim()
        )));
    }
    Ok(())
}

/// Trains `variant` on `(trajectory, label)` pairs. Every label must have
/// at least one example.
pub fn train(
    variant: Variant,
    data: &[(Trajectory, GestureLabel)],
    labels: &[GestureLabel],
    cfg: &ClassifierConfig,
) -> Result<TrainedModel> {
    let preprocess = Preprocessor { frames: cfg.frames };
    let mut encoded = Vec::with_capacity(data.len());
    for (t, l) in data {
        let class = labels
            .iter()
            .position(|x| x == l)
            .ok_or_else(|| Error::invalid(format!("label `{}` not in the model's label set", l.name)))?;
        encoded.push((preprocess.apply(t)?, class));
    }
    let params = train_features(variant, &encoded, labels.len(), cfg)?;
    Ok(TrainedModel {
        labels: labels.to_vec(),
        preprocess,
        config: cfg.clone(),
        params,
    })
}

/// Variant dispatch on already-encoded sequences.
pub fn train_features(
    variant: Variant,
    data: &[(FeatureSequence, usize)],
    classes: usize,
    cfg: &ClassifierConfig,
) -> Result<ModelParams> {
    if classes < 2 {
        return Err(Error::invalid("need at least two classes"));
    }
    for c in 0..classes {
        if !data.iter().any(|(_, k)| *k == c) {
            return Err(Error::invalid(format!("class {} has no training sequence", c + 1)));
        }
    }
    if let Some((_, k)) = data.iter().find(|(_, k)| *k >= classes) {
        return Err(Error::invalid(format!("class position {k} out of range")));
    }
    Ok(match variant {
        Variant::Hmm => ModelParams::Hmm(train_hmm(data, classes, cfg)?),
        Variant::Svm => ModelParams::Svm(train_svm(data, classes, cfg)?),
        Variant::Crf => ModelParams::Crf(train_crf(data, classes, cfg)?),
        Variant::Dtw => ModelParams::Dtw(train_dtw(data, classes, cfg)?),
    })
}

fn fit_codebook(data: &[(FeatureSequence, usize)], cfg: &ClassifierConfig) -> Result<Codebook> {
    let rows: Vec<&[f64]> = data.iter().flat_map(|(s, _)| s.rows()).collect();
    Codebook::fit(&rows, cfg.codebook_size, cfg.seed)
}

pub fn train_hmm(data: &[(FeatureSequence, usize)], classes: usize, cfg: &ClassifierConfig) -> Result<HmmModel> {
    let codebook = fit_codebook(data, cfg)?;
    let hmms = (0..classes)
        .into_par_iter()
        .map(|c| {
            let seqs: Vec<Vec<usize>> = data
                .iter()
                .filter(|(_, k)| *k == c)
                .map(|(s, _)| s.rows().map(|r| codebook.quantize(r)).collect())
                .collect();
            let mut hmm = DiscreteHmm::left_to_right(cfg.hmm.states, codebook.len(), &seqs, cfg.hmm.baum_welch.floor)?;
            hmm.baum_welch(&seqs, &cfg.hmm.baum_welch)?;
            Ok(hmm)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(HmmModel { codebook, hmms })
}

pub fn train_svm(data: &[(FeatureSequence, usize)], classes: usize, cfg: &ClassifierConfig) -> Result<SvmModel> {
    let x: Vec<Vec<f64>> = data.iter().map(|(s, _)| s.flat().to_vec()).collect();
    let d = x[0].len();
    if x.iter().any(|v| v.len() != d) {
        return Err(Error::invalid("SVM inputs must share one flattened length"));
    }
    let smo = SmoConfig {
        c: cfg.svm.c,
        gamma: cfg.svm.gamma.unwrap_or(1.0 / d as f64),
        tol: cfg.svm.tol,
        max_iter: cfg.svm.max_iter,
    };
    let machines = (0..classes)
        .into_par_iter()
        .map(|c| {
            let y: Vec<f64> = data.iter().map(|(_, k)| if *k == c { 1.0 } else { -1.0 }).collect();
            svm::train(&x, &y, &smo).map(|(m, _)| m)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SvmModel { input_dim: d, machines })
}

/// Label id layout: 0 = `O`, `1 + 2c` = `B-c`, `2 + 2c` = `I-c`.
pub fn bio_label_count(classes: usize) -> usize {
    1 + 2 * classes
}

/// Codewords of a gesture with `padding` zero-motion frames on each side.
fn crf_codes(codebook: &Codebook, seq: &FeatureSequence, padding: usize) -> Vec<usize> {
    let dim = seq.dim();
    let half = dim / 2;
    let still = |row: &[f64]| -> usize {
        let mut v = row.to_vec();
        for x in &mut v[half..] {
            *x = 0.0;
        }
        codebook.quantize(&v)
    };
    let first = still(seq.row(0));
    let last = still(seq.row(seq.len() - 1));
    let mut codes = vec![first; padding];
    codes.extend(seq.rows().map(|r| codebook.quantize(r)));
    codes.extend(std::iter::repeat_n(last, padding));
    codes
}

/// Unigram codeword features `[0, k)` and bigram features
/// `k + prev * k + cur`, with `prev = k` marking the sequence start.
fn crf_observation(codes: &[usize], k: usize) -> Observation {
    codes
        .iter()
        .enumerate()
        .map(|(t, &c)| {
            let prev = if t == 0 { k } else { codes[t - 1] };
            vec![c, k + prev * k + c]
        })
        .collect()
}

pub fn train_crf(data: &[(FeatureSequence, usize)], classes: usize, cfg: &ClassifierConfig) -> Result<CrfModel> {
    let codebook = fit_codebook(data, cfg)?;
    let k = codebook.len();
    let pad = cfg.crf.padding;
    let examples: Vec<(Observation, Vec<usize>)> = data
        .iter()
        .map(|(s, c)| {
            let codes = crf_codes(&codebook, s, pad);
            let mut y = vec![0usize; pad];
            y.push(1 + 2 * c);
            y.extend(std::iter::repeat_n(2 + 2 * c, s.len() - 1));
            y.extend(std::iter::repeat_n(0, pad));
            (crf_observation(&codes, k), y)
        })
        .collect();
    let mut crf = LinearChainCrf::new(bio_label_count(classes), k + (k + 1) * k);
    crf.train(&examples, &cfg.crf.train)?;
    Ok(CrfModel {
        codebook,
        crf,
        padding: pad,
    })
}

pub fn train_dtw(data: &[(FeatureSequence, usize)], classes: usize, cfg: &ClassifierConfig) -> Result<DtwModel> {
    let band = Band(cfg.dtw.band);
    let templates = if cfg.dtw.medoid_only {
        (0..classes)
            .into_par_iter()
            .map(|c| {
                let members: Vec<&FeatureSequence> = data.iter().filter(|(_, k)| *k == c).map(|(s, _)| s).collect();
                let cost = |i: usize| -> f64 {
                    members
                        .iter()
                        .map(|o| dtw::dtw(members[i], o, band.width(members[i].len(), o.len())))
                        .sum()
                };
                let costs: Vec<f64> = (0..members.len()).map(cost).collect();
                let neg: Vec<f64> = costs.iter().map(|c| -c).collect();
                (c, members[argmax(&neg)].clone())
            })
            .collect()
    } else {
        data.iter().map(|(s, c)| (*c, s.clone())).collect::<Vec<_>>()
    };
    if templates.is_empty() {
        return Err(Error::invalid("DTW template store is empty"));
    }
    Ok(DtwModel { templates, band })
}
