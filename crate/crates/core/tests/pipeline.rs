use std::path::PathBuf;

use oneshot_core::classifiers::{self, ClassifierConfig, TrainedModel, Variant};
use oneshot_core::enactment::{enact, EnactConfig};
use oneshot_core::experiment::{compute_experiment, ExperimentConfig, TestSetSpec};
use oneshot_core::fixture::{fixture_instances, fixture_labels, fixture_lexicon, human_fixture_records};
use oneshot_core::metrics::{read_records, RecognizerResult};
use oneshot_core::msrc12::{load_msrc12, IngestOptions};
use oneshot_core::synthesis::{generate_dataset, SynthesisParams};
use oneshot_core::{extract_gist, GistParams, Trajectory};

fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures")
}

fn small_training_set(m_des: usize) -> Vec<(Trajectory, oneshot_core::GestureLabel)> {
    let lex = fixture_lexicon(0).unwrap();
    let gists: Vec<_> = lex
        .labels()
        .iter()
        .zip(lex.seeds())
        .map(|(l, t)| extract_gist(t, l, &GistParams::default()).unwrap())
        .collect();
    let params = SynthesisParams {
        m_des,
        rng_seed: 4,
        ..Default::default()
    };
    generate_dataset(&lex, &gists, &params)
        .unwrap()
        .into_iter()
        .map(|s| (s.trajectory, s.label))
        .collect()
}

#[test]
fn models_survive_json_round_trip() {
    let pairs = small_training_set(4);
    let labels = fixture_labels();
    let probes = fixture_instances(9, 1).unwrap();
    let cfg = ClassifierConfig {
        seed: 4,
        ..Default::default()
    };
    for v in Variant::ALL {
        let model = classifiers::train(v, &pairs, &labels, &cfg).unwrap();
        let back = TrainedModel::from_json(&model.to_json().unwrap()).unwrap();
        assert_eq!(back.variant(), v);
        for p in &probes {
            let a = model.classify(&p.trajectory).map(|x| x.label);
            let b = back.classify(&p.trajectory).map(|x| x.label);
            assert_eq!(a.ok(), b.ok(), "{v} changed its answer after a round trip");
        }
    }
}

#[test]
fn bundled_msrc12_sample_ingests() {
    let dir = fixtures().join("msrc12");
    let got = load_msrc12(
        &dir.join("sample.csv"),
        &dir.join("sample.tagstream"),
        &IngestOptions::default(),
    )
    .unwrap();
    let names: Vec<&str> = got.instances.iter().map(|i| i.label.name.as_str()).collect();
    assert_eq!(names, ["Shoot", "Goggles"]);
    assert_eq!(got.skipped_labels, 1);
    for inst in &got.instances {
        assert_eq!(inst.trajectory.effector_count(), 2);
        // one second either side of the tag at 30 Hz
        assert!(
            (inst.trajectory.duration() - 2.0).abs() < 0.05,
            "{}",
            inst.trajectory.duration()
        );
    }
}

#[test]
fn shipped_human_labels_match_generator() {
    let recs = read_records(&fixtures().join("human_labels.csv"), &fixture_labels()).unwrap();
    assert_eq!(recs, human_fixture_records());
    let r = RecognizerResult::new("human", recs);
    assert_eq!(r.correct().count(), 148);
}

/// DTW over frames with the mean effector distance as cost.
fn frame_dtw(a: &Trajectory, b: &Trajectory) -> f64 {
    let e = a.effector_count();
    oneshot_core::classifiers::dtw::dtw_with(a.len(), b.len(), None, |i, j| {
        (0..e).map(|k| a.point(i, k).distance(&b.point(j, k))).sum::<f64>() / e as f64
    })
}

#[test]
fn enactment_keeps_gestures_apart() {
    let lex = fixture_lexicon(0).unwrap();
    let cfg = EnactConfig::default();
    for (i, seed) in lex.seeds().iter().enumerate() {
        let out = enact(seed, &cfg, i as u64).unwrap();
        let own = frame_dtw(seed, &out);
        for (j, other) in lex.seeds().iter().enumerate() {
            if j != i {
                assert!(
                    own < frame_dtw(other, &out),
                    "{} looks like {}",
                    lex.labels()[i].name,
                    lex.labels()[j].name
                );
            }
        }
    }
}

#[test]
fn heldout_test_set_uses_real_instances() {
    let mut cfg = ExperimentConfig {
        replicates: 1,
        classifiers: vec![Variant::Dtw],
        test_set: TestSetSpec {
            source: oneshot_core::experiment::TestSource::Heldout,
            count_per_class: 2,
        },
        ..Default::default()
    };
    cfg.synthesis.m_des = 4;
    cfg.enactment.enabled = false;
    let out = compute_experiment(&cfg).unwrap();
    assert_eq!(out.report.test_instances_per_replicate, 16);
    assert!(out.report.classifiers[0].pooled_accuracy >= 0.75);

    // the MSRC-12 sample has one instance per class, all used as seeds
    let dir = fixtures().join("msrc12");
    cfg.dataset = oneshot_core::experiment::DatasetSource::Msrc12 {
        files: vec![oneshot_core::experiment::Msrc12Pair {
            skeleton: dir.join("sample.csv"),
            tagstream: dir.join("sample.tagstream"),
        }],
        ingest: IngestOptions::default(),
    };
    cfg.lexicon = vec!["Shoot".into(), "Goggles".into()];
    let err = compute_experiment(&cfg).unwrap_err().to_string();
    assert!(err.contains("held-out"), "{err}");
}

#[test]
fn shipped_config_parses() {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs/desk.toml");
    let cfg = ExperimentConfig::load(&path).unwrap();
    cfg.validate().unwrap();
    assert_eq!(cfg.test_set.count_per_class, 16);
    assert_eq!(cfg.classifiers, Variant::ALL.to_vec());
    assert!(cfg.enactment.enabled);
}
