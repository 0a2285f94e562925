//! `oneshot`: staged and end-to-end runs of the one-shot gesture toolkit.
//!
//! Every stage reads and writes the shared file formats (instance, sample
//! and gist JSON, record CSV, model JSON), so stages compose through the
//! filesystem. Exit codes: 0 success, 2 usage, 3 config, 4 data, 5 compute.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::info;

use oneshot_core::classifiers::{self, ClassifierConfig, TrainedModel, Variant};
use oneshot_core::dataset::{read_gists, read_instances, read_samples, write_gists, write_instances, write_samples};
use oneshot_core::enactment::{enact_detailed, write_frameset, EnactConfig};
use oneshot_core::experiment::{
    compute_experiment, write_outputs, write_report_artifacts, ExperimentConfig, ExperimentReport,
};
use oneshot_core::fixture::fixture_lexicon;
use oneshot_core::metrics::{
    accuracy, agreement_index, coherency_report, confusion, confusion_svg, read_label_names, read_records,
    write_records, IdentificationRecord, RecognizerResult,
};
use oneshot_core::msrc12::{load_msrc12, IngestOptions};
use oneshot_core::synthesis::{generate_dataset, SynthesisParams};
use oneshot_core::types::{labels_from_names, GestureLabel, LabeledInstance, Lexicon};
use oneshot_core::{extract_gist, Error, GistParams, Result};

#[derive(Parser)]
#[command(name = "oneshot", version, about = "One-shot gesture learning toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Cut labeled instances out of MSRC-12 files, or write the bundled fixture seeds.
    Ingest(IngestArgs),
    /// Extract one gist per class from the first instance of each class.
    Gist(GistArgs),
    /// Generate a synthetic training set from gists.
    Synth(SynthArgs),
    /// Train one classifier on a synthetic training set.
    Train(TrainArgs),
    /// Classify instances with a trained model and write records.
    Classify(ClassifyArgs),
    /// Pass instances through simulated enactment and re-extraction.
    Enact(EnactArgs),
    /// Confusion matrices, accuracy, agreement index and coherency from records.
    Metrics(MetricsArgs),
    /// Full pipeline from a config file.
    Run(RunArgs),
    /// Regenerate tables and heatmaps from a report.
    RenderReport(RenderArgs),
}

fn split_names(s: &str) -> Vec<String> {
    s.split(',')
        .map(|x| x.trim().to_string())
        .filter(|x| !x.is_empty())
        .collect()
}

#[derive(Args)]
struct IngestArgs {
    #[arg(long, required_unless_present = "fixture", requires = "tagstream")]
    skeleton: Option<PathBuf>,
    #[arg(long)]
    tagstream: Option<PathBuf>,
    /// Write the bundled fixture's class seeds instead of reading files.
    #[arg(long, conflicts_with = "skeleton")]
    fixture: bool,
    #[arg(long, default_value_t = 0)]
    fixture_seed: u64,
    #[arg(long)]
    window_before: Option<f64>,
    #[arg(long)]
    window_after: Option<f64>,
    /// Comma-separated class names.
    #[arg(long)]
    lexicon: Option<String>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct GistArgs {
    #[arg(long)]
    instances: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    prominence: Option<f64>,
    #[arg(long)]
    min_separation: Option<f64>,
    #[arg(long)]
    variance_gain: Option<f64>,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long)]
    gists: PathBuf,
    /// Instances holding the class seeds (sample 1 of every class).
    #[arg(long)]
    instances: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    m_des: Option<usize>,
    #[arg(long)]
    spatial_noise_gain: Option<f64>,
    #[arg(long)]
    temporal_jitter: Option<f64>,
    #[arg(long)]
    length_jitter: Option<f64>,
    #[arg(long)]
    base_length: Option<usize>,
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    dataset: PathBuf,
    #[arg(long)]
    classifier: Variant,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    frames: Option<usize>,
    #[arg(long)]
    codebook_size: Option<usize>,
}

#[derive(Args)]
struct ClassifyArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    instances: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Defaults to the classifier name.
    #[arg(long)]
    recognizer_id: Option<String>,
}

#[derive(Args)]
struct EnactArgs {
    #[arg(long)]
    instances: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    depth_noise: Option<f64>,
    #[arg(long)]
    cutoff: Option<f64>,
    /// Also dump rendered frames (PPM + PFM) per instance here.
    #[arg(long)]
    dump_frames: Option<PathBuf>,
}

#[derive(Args)]
struct MetricsArgs {
    /// Record CSVs; several recognizers may share one file.
    #[arg(long, required = true, num_args = 1..)]
    records: Vec<PathBuf>,
    /// Human reference records for coherency.
    #[arg(long)]
    human: Option<PathBuf>,
    /// Comma-separated class names; defaults to the names found in the records.
    #[arg(long)]
    lexicon: Option<String>,
    /// Write summary.json and heatmaps here; otherwise print the summary.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    replicates: Option<usize>,
    #[arg(long)]
    human: Option<PathBuf>,
    #[arg(long)]
    no_enact: bool,
    /// Override any config key, e.g. `--set synthesis.m_des=10`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Args)]
struct RenderArgs {
    #[arg(long)]
    report: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Ingest(a) => ingest(a),
        Command::Gist(a) => gist(a),
        Command::Synth(a) => synth(a),
        Command::Train(a) => train(a),
        Command::Classify(a) => classify(a),
        Command::Enact(a) => enact_cmd(a),
        Command::Metrics(a) => metrics(a),
        Command::Run(a) => run(a),
        Command::RenderReport(a) => render_report(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) => 3,
        Error::Io { .. }
        | Error::Parse { .. }
        | Error::Json(_)
        | Error::Csv(_)
        | Error::DetectionFailure { .. }
        | Error::BehindCamera { .. } => 4,
        Error::Stage { stage: "load", source } if matches!(**source, Error::InvalidArgument(_)) => 4,
        Error::Stage { source, .. } => exit_code(source),
        _ => 5,
    }
}

fn write_text(path: &Path, s: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    std::fs::write(path, s).map_err(|e| Error::io(path, e))
}

fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn ingest(a: IngestArgs) -> Result<()> {
    let instances: Vec<LabeledInstance> = if a.fixture {
        let lex = fixture_lexicon(a.fixture_seed)?;
        let wanted = a.lexicon.as_deref().map(split_names);
        lex.labels()
            .iter()
            .zip(lex.seeds())
            .filter(|(l, _)| wanted.as_ref().is_none_or(|w| w.contains(&l.name)))
            .map(|(l, t)| LabeledInstance {
                id: format!("{}-seed", oneshot_core::dataset::file_safe(&l.name)),
                trajectory: t.clone(),
                label: l.clone(),
            })
            .collect()
    } else {
        let mut opts = IngestOptions::default();
        if let Some(v) = a.window_before {
            opts.window_before = v;
        }
        if let Some(v) = a.window_after {
            opts.window_after = v;
        }
        if let Some(l) = &a.lexicon {
            opts.lexicon = split_names(l);
        }
        let (skel, tags) = (
            a.skeleton.expect("required by clap"),
            a.tagstream.expect("required by clap"),
        );
        let got = load_msrc12(&skel, &tags, &opts)?;
        info!(
            "{} instances, {} tags outside the lexicon, {} short windows, {} frames dropped",
            got.instances.len(),
            got.skipped_labels,
            got.skipped_windows,
            got.dropped_frames
        );
        got.instances
    };
    write_instances(&a.out, &instances)?;
    println!("wrote {} instances to {}", instances.len(), a.out.display());
    Ok(())
}

/// Lexicon from instance files: labels ordered by index, first instance of
/// each label (in file-name order) as its seed.
fn lexicon_from_instances(dir: &Path) -> Result<Lexicon> {
    let instances = read_instances(dir)?;
    let mut by_index: BTreeMap<usize, &LabeledInstance> = BTreeMap::new();
    for inst in &instances {
        by_index.entry(inst.label.index).or_insert(inst);
    }
    let labels = by_index.values().map(|i| i.label.clone()).collect();
    let seeds = by_index.values().map(|i| i.trajectory.clone()).collect();
    Lexicon::new(labels, seeds)
}

fn gist(a: GistArgs) -> Result<()> {
    let lex = lexicon_from_instances(&a.instances)?;
    let mut params = GistParams::default();
    if let Some(v) = a.prominence {
        params.prominence = v;
    }
    if let Some(v) = a.min_separation {
        params.min_separation = v;
    }
    if let Some(v) = a.variance_gain {
        params.variance_gain = v;
    }
    let gists = lex
        .labels()
        .iter()
        .zip(lex.seeds())
        .map(|(l, t)| extract_gist(t, l, &params))
        .collect::<Result<Vec<_>>>()?;
    write_gists(&a.out, &gists)?;
    for g in &gists {
        println!("{}: {} placeholders", g.source_label.name, g.l());
    }
    Ok(())
}

fn synth(a: SynthArgs) -> Result<()> {
    let lex = lexicon_from_instances(&a.instances)?;
    let gists = read_gists(&a.gists)?;
    let mut params = SynthesisParams {
        rng_seed: a.seed,
        ..Default::default()
    };
    if let Some(v) = a.m_des {
        params.m_des = v;
    }
    if let Some(v) = a.spatial_noise_gain {
        params.spatial_noise_gain = v;
    }
    if let Some(v) = a.temporal_jitter {
        params.temporal_jitter = v;
    }
    if let Some(v) = a.length_jitter {
        params.length_jitter = v;
    }
    if let Some(v) = a.base_length {
        params.base_length = v;
    }
    let samples = generate_dataset(&lex, &gists, &params)?;
    write_samples(&a.out, &samples)?;
    println!("wrote {} samples to {}", samples.len(), a.out.display());
    Ok(())
}

fn labels_of<'a>(it: impl Iterator<Item = &'a GestureLabel>) -> Vec<GestureLabel> {
    let mut by_index: BTreeMap<usize, GestureLabel> = BTreeMap::new();
    for l in it {
        by_index.entry(l.index).or_insert_with(|| l.clone());
    }
    by_index.into_values().collect()
}

fn train(a: TrainArgs) -> Result<()> {
    let samples = read_samples(&a.dataset)?;
    let labels = labels_of(samples.iter().map(|s| &s.label));
    let pairs: Vec<_> = samples.into_iter().map(|s| (s.trajectory, s.label)).collect();
    let mut cfg = ClassifierConfig {
        seed: a.seed,
        ..Default::default()
    };
    if let Some(v) = a.frames {
        cfg.frames = v;
    }
    if let Some(v) = a.codebook_size {
        cfg.codebook_size = v;
    }
    let model = classifiers::train(a.classifier, &pairs, &labels, &cfg)?;
    write_text(&a.out, &model.to_json()?)?;
    println!("trained {} on {} sequences", a.classifier, pairs.len());
    Ok(())
}

fn classify(a: ClassifyArgs) -> Result<()> {
    let model = TrainedModel::from_json(&read_text(&a.model)?)?;
    let who = a.recognizer_id.unwrap_or_else(|| model.variant().name().to_string());
    let mut records = Vec::new();
    for inst in read_instances(&a.instances)? {
        let predicted = match model.classify(&inst.trajectory) {
            Ok(p) => Some(p.label),
            Err(Error::Rejected) => None,
            Err(e) => return Err(e),
        };
        records.push(IdentificationRecord {
            instance_id: inst.id,
            true_label: inst.label,
            predicted_label: predicted,
            recognizer_id: who.clone(),
        });
    }
    if let Some(dir) = a.out.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    write_records(&a.out, &records)?;
    let correct = records.iter().filter(|r| r.is_correct()).count();
    println!("{correct}/{} correct", records.len());
    Ok(())
}

fn enact_cmd(a: EnactArgs) -> Result<()> {
    let mut cfg = EnactConfig {
        seed: a.seed,
        ..Default::default()
    };
    if let Some(v) = a.depth_noise {
        cfg.camera.depth_noise = v;
    }
    if let Some(v) = a.cutoff {
        cfg.cutoff_hz = v;
    }
    let mut out = Vec::new();
    for (i, inst) in read_instances(&a.instances)?.into_iter().enumerate() {
        let d = enact_detailed(&inst.trajectory, &cfg, i as u64)?;
        if let Some(dir) = &a.dump_frames {
            write_frameset(&dir.join(oneshot_core::dataset::file_safe(&inst.id)), &d.frames)?;
        }
        out.push(LabeledInstance {
            trajectory: d.output,
            ..inst
        });
    }
    write_instances(&a.out, &out)?;
    println!("enacted {} instances", out.len());
    Ok(())
}

#[derive(serde::Serialize)]
struct RecognizerSummary {
    recognizer_id: String,
    records: usize,
    accuracy: f64,
    agreement_index: Option<f64>,
    confusion: oneshot_core::metrics::ConfusionMatrix,
}

#[derive(serde::Serialize)]
struct MetricsSummary {
    recognizers: Vec<RecognizerSummary>,
    coherency: Option<oneshot_core::metrics::CoherencyReport>,
}

fn metrics(a: MetricsArgs) -> Result<()> {
    let names = match &a.lexicon {
        Some(l) => split_names(l),
        None => {
            let mut names: Vec<String> = Vec::new();
            for p in a.human.iter().chain(&a.records) {
                for n in read_label_names(p)? {
                    if !names.contains(&n) {
                        names.push(n);
                    }
                }
            }
            names
        }
    };
    let labels = labels_from_names(&names)?;
    let mut grouped: BTreeMap<String, Vec<IdentificationRecord>> = BTreeMap::new();
    let mut order = Vec::new();
    for p in &a.records {
        for r in read_records(p, &labels)? {
            if !grouped.contains_key(&r.recognizer_id) {
                order.push(r.recognizer_id.clone());
            }
            grouped.entry(r.recognizer_id.clone()).or_default().push(r);
        }
    }
    let machines: Vec<RecognizerResult> = order
        .iter()
        .map(|id| RecognizerResult::new(id.clone(), grouped.remove(id).unwrap_or_default()))
        .collect();
    let mut recognizers = Vec::new();
    for m in &machines {
        let cm = confusion(&m.records, &labels)?;
        recognizers.push(RecognizerSummary {
            recognizer_id: m.recognizer_id.clone(),
            records: m.records.len(),
            accuracy: accuracy(&cm)?,
            agreement_index: agreement_index(m).ok(),
            confusion: cm,
        });
    }
    let coherency = match &a.human {
        Some(path) => {
            let h = read_records(path, &labels)?;
            let ids: std::collections::BTreeSet<String> = h.iter().map(|r| r.instance_id.clone()).collect();
            let human = RecognizerResult::new("human", h);
            let restricted: Vec<_> = machines.iter().map(|m| m.restricted(|id| ids.contains(id))).collect();
            Some(coherency_report(&restricted, &human, &labels)?)
        }
        None => None,
    };
    let summary = MetricsSummary { recognizers, coherency };
    let json = serde_json::to_string_pretty(&summary)? + "\n";
    match &a.out {
        Some(dir) => {
            write_text(&dir.join("summary.json"), &json)?;
            for r in &summary.recognizers {
                let name = oneshot_core::dataset::file_safe(&r.recognizer_id);
                write_text(
                    &dir.join(format!("{name}.svg")),
                    &confusion_svg(&r.confusion, &r.recognizer_id),
                )?;
            }
            if let Some(c) = &summary.coherency {
                write_text(&dir.join("coherency.csv"), &c.to_csv())?;
            }
        }
        None => print!("{json}"),
    }
    for r in &summary.recognizers {
        eprintln!(
            "{}: accuracy {:.4} over {} records",
            r.recognizer_id, r.accuracy, r.records
        );
    }
    Ok(())
}

/// Sets `a.b.c = value` in a TOML table; `value` is parsed as TOML and
/// falls back to a plain string.
fn apply_override(table: &mut toml::Table, spec: &str) -> Result<()> {
    let (key, raw) = spec
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("override `{spec}` is not KEY=VALUE")))?;
    let value = toml::from_str::<toml::Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()));
    let parts: Vec<&str> = key.trim().split('.').collect();
    let mut cur = table;
    for part in &parts[..parts.len() - 1] {
        cur = cur
            .entry(part.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()))
            .as_table_mut()
            .ok_or_else(|| Error::Config(format!("`{part}` in `{key}` is not a table")))?;
    }
    cur.insert(parts[parts.len() - 1].to_string(), value);
    Ok(())
}

fn run(a: RunArgs) -> Result<()> {
    let mut table: toml::Table = match &a.config {
        Some(p) => toml::from_str(&read_text(p)?).map_err(|e| Error::Config(format!("{}: {e}", p.display())))?,
        None => toml::Table::new(),
    };
    for o in &a.overrides {
        apply_override(&mut table, o)?;
    }
    let mut cfg: ExperimentConfig = table
        .try_into()
        .map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
    cfg.seed = a.seed;
    if let Some(o) = a.out {
        cfg.output_dir = o;
    }
    if let Some(r) = a.replicates {
        cfg.replicates = r;
    }
    if let Some(h) = a.human {
        cfg.human_labels = Some(h);
    }
    if a.no_enact {
        cfg.enactment.enabled = false;
    }
    let out = compute_experiment(&cfg)?;
    write_outputs(&cfg, &out)?;
    for c in &out.report.classifiers {
        println!(
            "{}: pooled accuracy {:.4}, agreement index {:.4}",
            c.classifier, c.pooled_accuracy, c.pooled_agreement_index
        );
    }
    println!("report written to {}", cfg.output_dir.join("report.json").display());
    Ok(())
}

fn render_report(a: RenderArgs) -> Result<()> {
    let report = ExperimentReport::from_json(&read_text(&a.report)?)?;
    write_report_artifacts(&report, &a.out)?;
    println!(
        "rendered {} classifiers to {}",
        report.classifiers.len(),
        a.out.display()
    );
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overrides_nest_and_parse() {
        let mut t = toml::Table::new();
        apply_override(&mut t, "synthesis.m_des=7").unwrap();
        apply_override(&mut t, "classifiers=[\"dtw\"]").unwrap();
        apply_override(&mut t, "output_dir=some/where").unwrap();
        let cfg: ExperimentConfig = t.try_into().unwrap();
        assert_eq!(cfg.synthesis.m_des, 7);
        assert_eq!(cfg.classifiers, vec![Variant::Dtw]);
        assert_eq!(cfg.output_dir, PathBuf::from("some/where"));
        assert!(apply_override(&mut toml::Table::new(), "nokey").is_err());
    }

    #[test]
    fn exit_codes_by_category() {
        assert_eq!(exit_code(&Error::Config("x".into())), 3);
        assert_eq!(exit_code(&Error::Rejected), 5);
        let io = Error::io("f", std::io::Error::from(std::io::ErrorKind::NotFound));
        assert_eq!(exit_code(&io), 4);
    }
}
