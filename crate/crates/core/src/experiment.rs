//! Config-driven end-to-end runs.
//!
//! One run loads a lexicon (bundled fixture or MSRC-12 files), extracts a
//! gist per class, and then for every replicate synthesizes a training
//! set, trains the selected classifiers, builds a test set (optionally
//! passed through enactment), classifies it and scores the results.
//! Replicate 1 uses the global seed; later replicates derive theirs from
//! it. Coherency is computed on replicate 1 against the human labels when
//! given, else between machines.
//!
//! Outputs under `output_dir`: `report.json`, `records/repNN/<clf>.csv`,
//! `matrices/<clf>.svg` (pooled over replicates) and `tables/*.csv`.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::classifiers::{self, ClassifierConfig, TrainedModel, Variant};
use crate::dataset::{file_safe, write_gists, write_samples};
use crate::enactment::{enact, EnactConfig};
use crate::error::{Error, Result};
use crate::fixture::{fixture_instances, fixture_lexicon};
use crate::gist::{extract_gist, GestureGist, GistParams};
use crate::metrics::{
    accuracy, agreement_index, coherency_matrix, coherency_report, confusion, confusion_svg, read_records,
    write_records, CoherencyReport, ConfusionMatrix, IdentificationRecord, RecognizerResult,
};
use crate::msrc12::{load_msrc12, IngestOptions, DEFAULT_LEXICON};
use crate::rng::{derive_seed, Domain};
use crate::synthesis::{generate_dataset, synthesize_one, SynthesisParams};
use crate::types::{labels_from_names, GestureLabel, LabeledInstance, Lexicon, Trajectory};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Msrc12Pair {
    pub skeleton: PathBuf,
    pub tagstream: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum DatasetSource {
    /// The bundled procedural lexicon; `seed` picks its instances.
    Fixture {
        #[serde(default)]
        seed: u64,
    },
    Msrc12 {
        files: Vec<Msrc12Pair>,
        #[serde(default)]
        ingest: IngestOptions,
    },
}

impl Default for DatasetSource {
    fn default() -> Self {
        DatasetSource::Fixture { seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "lowercase")]
pub enum SeedSelection {
    /// The first loaded instance of each class.
    #[default]
    First,
    /// Class name to instance id.
    Ids { ids: BTreeMap<String, String> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TestSource {
    /// Fresh synthetic samples from an independent seed stream.
    #[default]
    Synthetic,
    /// Real instances other than the class seeds.
    Heldout,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TestSetSpec {
    pub source: TestSource,
    pub count_per_class: usize,
}

impl Default for TestSetSpec {
    fn default() -> Self {
        TestSetSpec {
            source: TestSource::Synthetic,
            count_per_class: 20,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EnactmentSpec {
    pub enabled: bool,
    #[serde(flatten)]
    pub config: EnactConfig,
}

impl Default for EnactmentSpec {
    fn default() -> Self {
        EnactmentSpec {
            enabled: true,
            config: EnactConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub output_dir: PathBuf,
    pub replicates: usize,
    pub dataset: DatasetSource,
    /// Class names in lexicon order; empty means the default eight.
    pub lexicon: Vec<String>,
    pub seed_selection: SeedSelection,
    pub gist: GistParams,
    pub synthesis: SynthesisParams,
    pub classifiers: Vec<Variant>,
    pub classifier: ClassifierConfig,
    pub enactment: EnactmentSpec,
    pub test_set: TestSetSpec,
    pub human_labels: Option<PathBuf>,
    /// Also write gists and replicate-1 training samples.
    pub write_intermediates: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            seed: 0,
            output_dir: PathBuf::from("out"),
            replicates: 20,
            dataset: DatasetSource::default(),
            lexicon: Vec::new(),
            seed_selection: SeedSelection::First,
            gist: GistParams::default(),
            synthesis: SynthesisParams::default(),
            classifiers: Variant::ALL.to_vec(),
            classifier: ClassifierConfig::default(),
            enactment: EnactmentSpec::default(),
            test_set: TestSetSpec::default(),
            human_labels: None,
            write_intermediates: false,
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(s: &str) -> Result<Self> {
        toml::from_str(s).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let s = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&s)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if self.classifiers.is_empty() {
            return bad("select at least one classifier");
        }
        if self.replicates < 1 {
            return bad("replicates must be at least 1");
        }
        if self.test_set.count_per_class < 1 {
            return bad("test_set.count_per_class must be at least 1");
        }
        let unique: BTreeSet<_> = self.classifiers.iter().collect();
        if unique.len() != self.classifiers.len() {
            return bad("classifiers are listed more than once");
        }
        self.synthesis.validate().map_err(|e| Error::Config(e.to_string()))?;
        if self.enactment.enabled {
            self.enactment
                .config
                .validate()
                .map_err(|e| Error::Config(e.to_string()))?;
        }
        Ok(())
    }

    /// Hex SHA-256 of the canonical JSON form of the config. The output
    /// directory is left out: it does not affect results.
    pub fn hash(&self) -> Result<String> {
        let json = serde_json::to_string(&ExperimentConfig {
            output_dir: PathBuf::new(),
            ..self.clone()
        })?;
        Ok(hex::encode(Sha256::digest(json.as_bytes())))
    }

    pub fn replicate_seed(&self, replicate: usize) -> u64 {
        if replicate <= 1 {
            self.seed
        } else {
            derive_seed(Domain::Replicate, self.seed, replicate as u64)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub config_sha256: String,
    pub seed: u64,
    pub replicate_seeds: Vec<u64>,
    pub version: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicateMetrics {
    pub replicate: usize,
    pub seed: u64,
    pub accuracy: f64,
    pub agreement_index: f64,
    pub confusion: ConfusionMatrix,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifierReport {
    pub classifier: Variant,
    pub replicates: Vec<ReplicateMetrics>,
    pub pooled_confusion: ConfusionMatrix,
    pub pooled_accuracy: f64,
    pub mean_accuracy: f64,
    pub pooled_agreement_index: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MachineCoherency {
    pub machines: Vec<String>,
    /// Row `i` takes machine `i` as the reference.
    pub matrix: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub provenance: Provenance,
    pub labels: Vec<GestureLabel>,
    pub test_instances_per_replicate: usize,
    pub classifiers: Vec<ClassifierReport>,
    /// Mean of the classifiers' pooled accuracies.
    pub mean_accuracy: f64,
    pub coherency: Option<CoherencyReport>,
    pub machine_coherency: Option<MachineCoherency>,
}

impl ExperimentReport {
    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn classifier(&self, v: Variant) -> Option<&ClassifierReport> {
        self.classifiers.iter().find(|c| c.classifier == v)
    }
}

/// Everything a run computes, before anything is written.
#[derive(Debug, Clone)]
pub struct RunOutputs {
    pub report: ExperimentReport,
    pub gists: Vec<GestureGist>,
    /// `records[replicate - 1][classifier]`, classifiers in config order.
    pub records: Vec<Vec<Vec<IdentificationRecord>>>,
    pub first_training_set: Vec<crate::synthesis::SyntheticSample>,
}

/// Loaded lexicon plus every instance that could serve as held-out data.
#[derive(Debug, Clone)]
pub struct LoadedData {
    pub lexicon: Lexicon,
    pub seed_ids: Vec<String>,
    pub pool: Vec<LabeledInstance>,
}

pub fn load_data(cfg: &ExperimentConfig) -> Result<LoadedData> {
    let names: Vec<String> = if cfg.lexicon.is_empty() {
        DEFAULT_LEXICON.iter().map(|s| s.to_string()).collect()
    } else {
        cfg.lexicon.clone()
    };
    let labels = labels_from_names(&names).map_err(|e| Error::Config(e.to_string()))?;
    let instances: Vec<LabeledInstance> = match &cfg.dataset {
        DatasetSource::Fixture { seed } => {
            let known: Vec<&str> = DEFAULT_LEXICON.to_vec();
            if let Some(n) = names.iter().find(|n| !known.contains(&n.as_str())) {
                return Err(Error::Config(format!("`{n}` is not a fixture gesture")));
            }
            let lex = fixture_lexicon(*seed)?;
            let mut all: Vec<LabeledInstance> = lex
                .labels()
                .iter()
                .zip(lex.seeds())
                .map(|(l, t)| LabeledInstance {
                    id: format!("{}-seed", file_safe(&l.name)),
                    trajectory: t.clone(),
                    label: l.clone(),
                })
                .collect();
            if cfg.test_set.source == TestSource::Heldout {
                all.extend(fixture_instances(*seed, cfg.test_set.count_per_class)?);
            }
            all
        }
        DatasetSource::Msrc12 { files, ingest } => {
            let opts = IngestOptions {
                lexicon: names.clone(),
                ..ingest.clone()
            };
            let mut all = Vec::new();
            for pair in files {
                all.extend(load_msrc12(&pair.skeleton, &pair.tagstream, &opts)?.instances);
            }
            all
        }
    };

    // relabel against the configured lexicon order
    let mut pool = Vec::new();
    for mut inst in instances {
        if let Some(l) = labels.iter().find(|l| l.name == inst.label.name) {
            inst.label = l.clone();
            pool.push(inst);
        }
    }
    let mut seeds = Vec::with_capacity(labels.len());
    let mut seed_ids = Vec::with_capacity(labels.len());
    for l in &labels {
        let chosen = match &cfg.seed_selection {
            SeedSelection::First => pool.iter().find(|i| &i.label == l),
            SeedSelection::Ids { ids } => {
                let id = ids
                    .get(&l.name)
                    .ok_or_else(|| Error::Config(format!("no seed id given for `{}`", l.name)))?;
                pool.iter().find(|i| &i.id == id && &i.label == l)
            }
        }
        .ok_or_else(|| Error::invalid(format!("no instance available as seed for `{}`", l.name)))?;
        seeds.push(chosen.trajectory.clone());
        seed_ids.push(chosen.id.clone());
    }
    pool.retain(|i| !seed_ids.contains(&i.id));
    Ok(LoadedData {
        lexicon: Lexicon::new(labels, seeds)?,
        seed_ids,
        pool,
    })
}

pub fn extract_gists(lex: &Lexicon, params: &GistParams) -> Result<Vec<GestureGist>> {
    lex.labels()
        .par_iter()
        .zip(lex.seeds())
        .map(|(l, t)| extract_gist(t, l, params))
        .collect()
}

/// Test instances for one replicate, ids `{Class}-{k:02}`, before
/// enactment.
pub fn build_test_set(
    cfg: &ExperimentConfig,
    data: &LoadedData,
    gists: &[GestureGist],
    replicate_seed: u64,
) -> Result<Vec<LabeledInstance>> {
    let n = cfg.test_set.count_per_class;
    match cfg.test_set.source {
        TestSource::Synthetic => {
            let params = SynthesisParams {
                rng_seed: derive_seed(Domain::TestSet, replicate_seed, 0),
                ..cfg.synthesis.clone()
            };
            let jobs: Vec<(&GestureGist, usize)> = gists.iter().flat_map(|g| (1..=n).map(move |k| (g, k))).collect();
            jobs.par_iter()
                .map(|&(g, k)| {
                    let s = synthesize_one(g, &params, k)?;
                    Ok(LabeledInstance {
                        id: format!("{}-{k:02}", file_safe(&g.source_label.name)),
                        trajectory: s.trajectory,
                        label: s.label,
                    })
                })
                .collect()
        }
        TestSource::Heldout => {
            let mut out = Vec::new();
            for l in data.lexicon.labels() {
                let of_class: Vec<&LabeledInstance> = data.pool.iter().filter(|i| &i.label == l).take(n).collect();
                if of_class.len() < n {
                    return Err(Error::invalid(format!(
                        "only {} held-out instances of `{}`, {n} requested",
                        of_class.len(),
                        l.name
                    )));
                }
                out.extend(of_class.into_iter().cloned());
            }
            Ok(out)
        }
    }
}

fn classify_all(
    model: &TrainedModel,
    tests: &[(String, Trajectory, GestureLabel)],
) -> Result<Vec<IdentificationRecord>> {
    tests
        .par_iter()
        .map(|(id, t, label)| {
            let predicted = match model.classify(t) {
                Ok(p) => Some(p.label),
                Err(Error::Rejected) => None,
                Err(e) => return Err(e),
            };
            Ok(IdentificationRecord {
                instance_id: id.clone(),
                true_label: label.clone(),
                predicted_label: predicted,
                recognizer_id: model.variant().name().to_string(),
            })
        })
        .collect()
}

struct ReplicateRun {
    records: Vec<Vec<IdentificationRecord>>,
    training: Vec<crate::synthesis::SyntheticSample>,
}

fn run_replicate(
    cfg: &ExperimentConfig,
    data: &LoadedData,
    gists: &[GestureGist],
    replicate: usize,
) -> Result<ReplicateRun> {
    let seed = cfg.replicate_seed(replicate);
    let params = SynthesisParams {
        rng_seed: seed,
        ..cfg.synthesis.clone()
    };
    let training = generate_dataset(&data.lexicon, gists, &params).map_err(|e| e.in_stage("synthesize"))?;
    let pairs: Vec<(Trajectory, GestureLabel)> = training
        .iter()
        .map(|s| (s.trajectory.clone(), s.label.clone()))
        .collect();
    let ccfg = ClassifierConfig {
        seed,
        ..cfg.classifier.clone()
    };
    let labels = data.lexicon.labels();
    let models: Vec<TrainedModel> = cfg
        .classifiers
        .par_iter()
        .map(|&v| classifiers::train(v, &pairs, labels, &ccfg))
        .collect::<Result<_>>()
        .map_err(|e| e.in_stage("train"))?;

    let tests = build_test_set(cfg, data, gists, seed).map_err(|e| e.in_stage("test-set"))?;
    let tests: Vec<(String, Trajectory, GestureLabel)> = if cfg.enactment.enabled {
        let ecfg = EnactConfig {
            seed,
            ..cfg.enactment.config.clone()
        };
        tests
            .par_iter()
            .enumerate()
            .map(|(i, inst)| {
                Ok((
                    inst.id.clone(),
                    enact(&inst.trajectory, &ecfg, i as u64)?,
                    inst.label.clone(),
                ))
            })
            .collect::<Result<_>>()
            .map_err(|e: Error| e.in_stage("enact"))?
    } else {
        tests.into_iter().map(|i| (i.id, i.trajectory, i.label)).collect()
    };

    let records = models
        .iter()
        .map(|m| classify_all(m, &tests))
        .collect::<Result<Vec<_>>>()
        .map_err(|e| e.in_stage("classify"))?;
    Ok(ReplicateRun { records, training })
}

/// Runs every stage in memory. Nothing is written.
pub fn compute_experiment(cfg: &ExperimentConfig) -> Result<RunOutputs> {
    cfg.validate()?;
    let data = load_data(cfg).map_err(|e| e.in_stage("load"))?;
    let gists = extract_gists(&data.lexicon, &cfg.gist).map_err(|e| e.in_stage("gist"))?;
    let runs: Vec<ReplicateRun> = (1..=cfg.replicates)
        .into_par_iter()
        .map(|r| run_replicate(cfg, &data, &gists, r))
        .collect::<Result<_>>()?;

    let human = match &cfg.human_labels {
        Some(path) => Some(read_records(path, data.lexicon.labels()).map_err(|e| e.in_stage("metrics"))?),
        None => None,
    };
    let report = build_report(cfg, data.lexicon.labels(), &runs, human).map_err(|e| e.in_stage("metrics"))?;
    let mut runs = runs.into_iter();
    let first = runs.next().expect("at least one replicate");
    let mut records = vec![first.records];
    records.extend(runs.map(|r| r.records));
    Ok(RunOutputs {
        report,
        gists,
        records,
        first_training_set: first.training,
    })
}

fn build_report(
    cfg: &ExperimentConfig,
    labels: &[GestureLabel],
    runs: &[ReplicateRun],
    human: Option<Vec<IdentificationRecord>>,
) -> Result<ExperimentReport> {
    let mut classifiers_out = Vec::with_capacity(cfg.classifiers.len());
    for (c, &variant) in cfg.classifiers.iter().enumerate() {
        let mut reps = Vec::with_capacity(runs.len());
        let mut pooled = ConfusionMatrix::new(labels);
        let mut all = Vec::new();
        for (r, run) in runs.iter().enumerate() {
            let recs = &run.records[c];
            let cm = confusion(recs, labels)?;
            pooled.merge(&cm)?;
            all.extend(recs.iter().cloned());
            reps.push(ReplicateMetrics {
                replicate: r + 1,
                seed: cfg.replicate_seed(r + 1),
                accuracy: accuracy(&cm)?,
                agreement_index: agreement_index(&RecognizerResult::new(variant.name(), recs.clone()))?,
                confusion: cm,
            });
        }
        classifiers_out.push(ClassifierReport {
            classifier: variant,
            mean_accuracy: reps.iter().map(|r| r.accuracy).sum::<f64>() / reps.len() as f64,
            pooled_accuracy: accuracy(&pooled)?,
            pooled_agreement_index: agreement_index(&RecognizerResult::new(variant.name(), all))?,
            replicates: reps,
            pooled_confusion: pooled,
        });
    }
    let mean_accuracy = classifiers_out.iter().map(|c| c.pooled_accuracy).sum::<f64>() / classifiers_out.len() as f64;

    let machines: Vec<RecognizerResult> = cfg
        .classifiers
        .iter()
        .zip(&runs[0].records)
        .map(|(v, recs)| RecognizerResult::new(v.name(), recs.clone()))
        .collect();
    let (coherency, machine_coherency) = match human {
        Some(h) => {
            let ids: BTreeSet<String> = h.iter().map(|r| r.instance_id.clone()).collect();
            let human = RecognizerResult::new(crate::fixture::HUMAN_FIXTURE_ID, h);
            let restricted: Vec<RecognizerResult> =
                machines.iter().map(|m| m.restricted(|id| ids.contains(id))).collect();
            (Some(coherency_report(&restricted, &human, labels)?), None)
        }
        None => (
            None,
            Some(MachineCoherency {
                machines: machines.iter().map(|m| m.recognizer_id.clone()).collect(),
                matrix: coherency_matrix(&machines)?,
            }),
        ),
    };

    Ok(ExperimentReport {
        provenance: Provenance {
            config_sha256: cfg.hash()?,
            seed: cfg.seed,
            replicate_seeds: (1..=cfg.replicates).map(|r| cfg.replicate_seed(r)).collect(),
            version: VERSION.to_string(),
        },
        labels: labels.to_vec(),
        test_instances_per_replicate: runs[0].records[0].len(),
        classifiers: classifiers_out,
        mean_accuracy,
        coherency,
        machine_coherency,
    })
}

/// Paths a run writes directly under the output directory.
const OUTPUT_ENTRIES: [&str; 6] = ["report.json", "records", "matrices", "tables", "gists", "training"];

/// Writes all outputs. On failure, everything this run created is removed.
pub fn write_outputs(cfg: &ExperimentConfig, out: &RunOutputs) -> Result<()> {
    let dir = &cfg.output_dir;
    let existed: Vec<bool> = OUTPUT_ENTRIES.iter().map(|e| dir.join(e).exists()).collect();
    let result = write_all(cfg, out);
    if result.is_err() {
        for (entry, existed) in OUTPUT_ENTRIES.iter().zip(existed) {
            if !existed {
                let p = dir.join(entry);
                let _ = if p.is_dir() {
                    std::fs::remove_dir_all(&p)
                } else {
                    std::fs::remove_file(&p)
                };
            }
        }
    }
    result.map_err(|e| e.in_stage("write"))
}

fn mkdir(p: &Path) -> Result<()> {
    std::fs::create_dir_all(p).map_err(|e| Error::io(p, e))
}

fn write_file(p: &Path, contents: &str) -> Result<()> {
    std::fs::write(p, contents).map_err(|e| Error::io(p, e))
}

fn write_all(cfg: &ExperimentConfig, out: &RunOutputs) -> Result<()> {
    let dir = &cfg.output_dir;
    mkdir(dir)?;
    for (r, per_clf) in out.records.iter().enumerate() {
        let rep_dir = dir.join("records").join(format!("rep{:02}", r + 1));
        mkdir(&rep_dir)?;
        for (v, recs) in cfg.classifiers.iter().zip(per_clf) {
            write_records(&rep_dir.join(format!("{}.csv", v.name())), recs)?;
        }
    }
    write_report_artifacts(&out.report, dir)?;
    if cfg.write_intermediates {
        write_gists(&dir.join("gists"), &out.gists)?;
        write_samples(&dir.join("training").join("rep01"), &out.first_training_set)?;
    }
    write_file(&dir.join("report.json"), &out.report.to_json()?)
}

/// `matrices/*.svg` and `tables/*.csv` from a report alone.
pub fn write_report_artifacts(report: &ExperimentReport, dir: &Path) -> Result<()> {
    let matrices = dir.join("matrices");
    let tables = dir.join("tables");
    mkdir(&matrices)?;
    mkdir(&tables)?;
    let mut acc = String::from("classifier,replicate,seed,accuracy,agreement_index\n");
    for c in &report.classifiers {
        write_file(
            &matrices.join(format!("{}.svg", c.classifier.name())),
            &confusion_svg(&c.pooled_confusion, &format!("{} (pooled)", c.classifier.name())),
        )?;
        for r in &c.replicates {
            acc.push_str(&format!(
                "{},{},{},{:.6},{:.6}\n",
                c.classifier.name(),
                r.replicate,
                r.seed,
                r.accuracy,
                r.agreement_index
            ));
        }
        acc.push_str(&format!(
            "{},pooled,,{:.6},{:.6}\n",
            c.classifier.name(),
            c.pooled_accuracy,
            c.pooled_agreement_index
        ));
    }
    write_file(&tables.join("accuracy.csv"), &acc)?;
    if let Some(coh) = &report.coherency {
        write_file(&tables.join("coherency.csv"), &coh.to_csv())?;
    }
    if let Some(mc) = &report.machine_coherency {
        let mut s = format!("reference,{}\n", mc.machines.join(","));
        for (name, row) in mc.machines.iter().zip(&mc.matrix) {
            s.push_str(name);
            for v in row {
                s.push_str(&format!(",{v:.6}"));
            }
            s.push('\n');
        }
        write_file(&tables.join("machine_coherency.csv"), &s)?;
    }
    Ok(())
}

/// Computes and writes a full run.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let out = compute_experiment(cfg)?;
    write_outputs(cfg, &out)?;
    Ok(out.report)
}
