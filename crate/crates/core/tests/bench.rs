use floornav::bench::{
    hypothesis_report, load_records, run_experiment, success_rate, write_records, DifficultyFilter, ExperimentConfig,
    GroupKey, MapSpec, ReportOptions, TrialRecord,
};
use floornav::floorplan::{BridgeSpec, Difficulty, LabelingScheme};
use floornav::grammar::Outcome;
use floornav::vlm::{BackendConfig, ErrorRecord};

fn map1_config(backend: BackendConfig) -> ExperimentConfig {
    ExperimentConfig {
        maps: vec![MapSpec::new("fixture:original_map_1")],
        tasks_per_map: 3,
        trials_per_task: 4,
        backend,
        workers: Some(3),
        seed: 11,
        ..ExperimentConfig::default()
    }
}

#[test]
fn oracle_backend_always_succeeds() {
    let records = run_experiment(map1_config(BackendConfig::mock_oracle())).unwrap();
    assert_eq!(records.len(), 12);
    assert!(records.iter().all(|r| r.correct && r.minimal && r.outcome == Some(Outcome::Correct)));
    assert!(records.iter().all(|r| r.difficulty == Difficulty::Hard));
    let rows = success_rate(&records, &[GroupKey::MapLabel]);
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0].rate, Some(1.0));
}

#[test]
fn runs_are_deterministic_across_worker_counts() {
    let mut a = map1_config(BackendConfig::mock_noisy(5, 0.4));
    a.workers = Some(1);
    let mut b = a.clone();
    b.workers = Some(6);
    assert_eq!(run_experiment(a).unwrap(), run_experiment(b).unwrap());
}

#[test]
fn interrupted_run_resumes_to_the_same_records() {
    let dir = tempfile::tempdir().unwrap();
    let mut base = map1_config(BackendConfig::mock_noisy(9, 0.3));
    base.maps.push(MapSpec {
        labeling: Some(LabelingScheme::Dense),
        ..MapSpec::new("fixture:original_map_2")
    });
    let uninterrupted = run_experiment(base.clone()).unwrap();

    let records = dir.path().join("records.jsonl");
    let mut partial = base.clone();
    partial.records = Some(records.clone());
    partial.max_trials = Some(7);
    assert_eq!(run_experiment(partial.clone()).unwrap().len(), 7);
    // Simulate a crash mid-write.
    let mut text = std::fs::read_to_string(&records).unwrap();
    text.push_str("{\"map_label\": \"trunc");
    std::fs::write(&records, text).unwrap();
    partial.max_trials = Some(5);
    assert_eq!(run_experiment(partial.clone()).unwrap().len(), 12);
    partial.max_trials = None;
    let resumed = run_experiment(partial).unwrap();
    assert_eq!(resumed, uninterrupted);
    let on_disk = load_records(&records).unwrap();
    assert_eq!(on_disk.len(), uninterrupted.len());
    assert_eq!(on_disk, uninterrupted, "file keeps job order across resumes");
}

#[test]
fn infrastructure_failures_are_excluded_and_retried() {
    let dir = tempfile::tempdir().unwrap();
    let script = dir.path().join("script.json");
    std::fs::write(&script, "{}").unwrap();
    let mut config = map1_config(BackendConfig::mock_scripted(&script));
    config.trials_per_task = 1;
    config.records = Some(dir.path().join("r.jsonl"));
    let records = run_experiment(config.clone()).unwrap();
    assert!(records.iter().all(TrialRecord::is_infrastructure_failure));
    let rows = success_rate(&records, &[GroupKey::MapLabel]);
    assert_eq!((rows[0].graded, rows[0].infrastructure_failures, rows[0].rate), (0, 3, None));

    // Once a working backend is configured the failed trials run again.
    config.backend = BackendConfig::mock_oracle();
    let again = run_experiment(config).unwrap();
    assert!(again.iter().all(|r| r.correct && r.backend_id == "mock_oracle"));
}

#[test]
fn doubled_maps_sample_cross_copy_tasks() {
    let config = ExperimentConfig {
        maps: vec![MapSpec {
            double: Some(BridgeSpec::new("Degagement", "Terrasse Couverte")),
            difficulties: Some(vec![DifficultyFilter::Easy, DifficultyFilter::Hard]),
            ..MapSpec::new("fixture:original_map_1")
        }],
        tasks_per_map: 4,
        trials_per_task: 1,
        ..ExperimentConfig::default()
    };
    let records = run_experiment(config).unwrap();
    assert_eq!(records.len(), 8);
    assert!(records.iter().all(|r| r.doubled && r.correct && r.base_map_id != r.map_id));
    assert_eq!(records.iter().filter(|r| r.difficulty == Difficulty::Easy).count(), 4);
}

#[test]
fn too_many_tasks_reports_what_is_available() {
    let mut config = map1_config(BackendConfig::mock_oracle());
    config.maps = vec![MapSpec::new("fixture:two_room")];
    let err = run_experiment(config).unwrap_err().to_string();
    assert!(err.contains("0 available"), "{err}");
}

fn synthetic(label: &str, doubled: bool, labeling: LabelingScheme, difficulty: Difficulty, correct: usize, n: usize) -> Vec<TrialRecord> {
    (0..n)
        .map(|i| TrialRecord {
            map_label: label.into(),
            map_id: if doubled { format!("{label}_doubled") } else { label.into() },
            base_map_id: "m".into(),
            doubled,
            labeling,
            difficulty,
            start_room: "R1".into(),
            goal_room: format!("R{}", i % 5 + 2),
            trial: i as u32,
            backend_id: "mock_oracle".into(),
            prompt_hash: "00".into(),
            transcript: String::new(),
            outcome: Some(if i < correct { Outcome::Correct } else { Outcome::InfeasibleAction }),
            correct: i < correct,
            failing_index: (i >= correct).then_some(1),
            plan_len: Some(3),
            minimal: i < correct,
            connectivity: None,
            infrastructure_failure: None,
        })
        .collect()
}

fn synthetic_records() -> Vec<TrialRecord> {
    use Difficulty::*;
    use LabelingScheme::*;
    let mut r = Vec::new();
    r.extend(synthetic("orig", false, Sparse, Hard, 48, 50));
    r.extend(synthetic("dbl", true, Sparse, Hard, 30, 50));
    r.extend(synthetic("dbl", true, Sparse, Easy, 45, 50));
    r.extend(synthetic("dense", false, Dense, Hard, 9, 10));
    let mut broken = synthetic("orig", false, Sparse, Hard, 0, 2);
    for (i, b) in broken.iter_mut().enumerate() {
        b.trial = 100 + i as u32;
        b.outcome = None;
        b.infrastructure_failure = Some(ErrorRecord {
            kind: "timeout".into(),
            message: "timed out".into(),
        });
    }
    r.extend(broken);
    r
}

#[test]
fn report_matches_reference_statistics() {
    let records = synthetic_records();
    let report = hypothesis_report(&records, &ReportOptions::default());
    assert_eq!(report.total_trials, 162);
    assert_eq!(report.infrastructure_failures, 2);
    // Unfiltered, the dense map joins the undoubled arm.
    assert_eq!(report.hypotheses[0].pooled.as_ref().unwrap().a.graded, 60);

    let sparse_only = ReportOptions {
        size_and_difficulty_labeling: Some(LabelingScheme::Sparse),
        ..ReportOptions::default()
    };
    let report = hypothesis_report(&records, &sparse_only);
    let h1 = &report.hypotheses[0];
    let pooled = h1.pooled.as_ref().unwrap();
    assert_eq!((pooled.a.correct, pooled.a.graded), (48, 50));
    assert_eq!(pooled.a.rate, Some(0.96));
    let t = pooled.welch.unwrap();
    // scipy.stats.ttest_ind(equal_var=False) on the same 0/1 vectors.
    assert!((t.t - 4.7760176745470915).abs() < 1e-9);
    assert!((t.degrees_of_freedom - 64.28861154446176).abs() < 1e-9);
    assert!((t.p_two_sided - 1.0742440848294147e-05).abs() < 1e-9);
    assert!(h1.significant);
    assert!(report.hypotheses[1].significant);
    // The sparse arm of the label-density comparison is "orig".
    let h3 = &report.hypotheses[2];
    assert!(h3.available);
    assert_eq!(h3.pooled.as_ref().unwrap().a.graded, 10);
}

#[test]
fn missing_arm_is_reported_unavailable() {
    let records = synthetic("orig", false, LabelingScheme::Sparse, Difficulty::Hard, 5, 10);
    let report = hypothesis_report(&records, &ReportOptions::default());
    let h2 = &report.hypotheses[1];
    assert!(!h2.available && !h2.significant);
    assert!(h2.reason.as_ref().unwrap().contains("easy"));
    assert!(report.to_csv().contains("unavailable"));
    assert!(report.to_svg(h2).contains("unavailable"));
}

#[test]
fn report_outputs_are_stable() {
    let records = synthetic_records();
    let report = hypothesis_report(&records, &ReportOptions::default());
    let mut shuffled = records.clone();
    shuffled.reverse();
    assert_eq!(hypothesis_report(&shuffled, &ReportOptions::default()), report);

    let dir = tempfile::tempdir().unwrap();
    let files = report.write_to(dir.path()).unwrap();
    assert_eq!(files.len(), 5);
    let golden = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden/report.csv");
    let csv = report.to_csv();
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        std::fs::write(&golden, &csv).unwrap();
    }
    assert_eq!(csv, std::fs::read_to_string(golden).unwrap());

    let path = dir.path().join("records.jsonl");
    write_records(&path, &records).unwrap();
    assert_eq!(load_records(&path).unwrap(), records);
}

#[test]
fn same_config_gives_byte_identical_report() {
    let config = ExperimentConfig {
        maps: vec![
            MapSpec::new("fixture:original_map_1"),
            MapSpec {
                double: Some(BridgeSpec::new("Degagement", "Terrasse Couverte")),
                ..MapSpec::new("fixture:original_map_1")
            },
        ],
        tasks_per_map: 3,
        trials_per_task: 5,
        backend: BackendConfig::mock_noisy(21, 0.25),
        seed: 21,
        ..ExperimentConfig::default()
    };
    let report = |c: ExperimentConfig| {
        let r = hypothesis_report(&run_experiment(c).unwrap(), &ReportOptions::default());
        (r.to_json(), r.to_csv(), r.to_svg(&r.hypotheses[0]))
    };
    assert_eq!(report(config.clone()), report(config));
}
