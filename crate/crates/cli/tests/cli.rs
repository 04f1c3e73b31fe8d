use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use clap::CommandFactory;
use floornav_cli::{Cli, DISPATCH};
use serde_json::Value;

const REFERENCE_ROUTE: &str = "ApproachDoor(D8)
OpenDoor(D8)
GoThrough(D8)
ApproachDoor(D7)
OpenDoor(D7)
GoThrough(D7)
ApproachDoor(D4)
OpenDoor(D4)
GoThrough(D4)
";

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/fixtures").join(name)
}

fn floornav(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_floornav"))
        .args(args)
        .env_remove("RUST_LOG")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn json(o: &Output) -> Value {
    serde_json::from_str(stdout(o).trim()).unwrap()
}

fn map1() -> String {
    fixture("original_map_1.json").display().to_string()
}

#[test]
fn oracle_prints_reference_route() {
    let m = map1();
    let o = floornav(&["oracle", "--map", &m, "--start", "Terrasse Couverte", "--goal", "Chambre 1"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(stdout(&o), REFERENCE_ROUTE);

    let o = floornav(&["oracle", "--map", &m, "--start", "Terrasse Couverte", "--goal", "Chambre 1", "--format", "json"]);
    let v = json(&o);
    assert_eq!(v["plan"].as_array().unwrap().len(), 9);
    assert_eq!(v["plan"][8], serde_json::json!({"action": "GoThrough", "target": "D4"}));
}

#[test]
fn distant_door_is_infeasible() {
    let dir = tempfile::tempdir().unwrap();
    let plan = dir.path().join("plan.txt");
    std::fs::write(&plan, "ApproachDoor(D4)\nOpenDoor(D4)\nGoThrough(D4)\n").unwrap();
    let o = floornav(&[
        "validate-plan", "--map", &map1(), "--start", "Terrasse Couverte", "--goal", "Chambre 1", "--plan",
        plan.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(1));
    let v = json(&o);
    assert_eq!(v["outcome"], "infeasible_action");
    assert_eq!(v["failing_index"], 0);
}

#[test]
fn reference_route_validates_and_simulates() {
    let dir = tempfile::tempdir().unwrap();
    let plan = dir.path().join("plan.txt");
    std::fs::write(&plan, REFERENCE_ROUTE).unwrap();
    let p = plan.to_str().unwrap();
    let task = ["--map", "fixture:original_map_1", "--start", "Terrasse Couverte", "--goal", "Chambre 1", "--plan", p];
    let o = floornav(&[&["validate-plan"][..], &task].concat());
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(json(&o)["outcome"], "correct");
    let o = floornav(&[&["simulate"][..], &task].concat());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let log = json(&o);
    assert_eq!(log["outcome"], "success");
    assert_eq!(log["records"].as_array().unwrap().len(), 9);

    std::fs::write(&plan, "GoThrough(D8)").unwrap();
    let o = floornav(&[&["simulate"][..], &task].concat());
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(json(&o)["outcome"], "door_closed");
}

#[test]
fn identical_samples_give_zero_t() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    std::fs::write(&a, "correct\n1\n0\n1\n1\n0\n1\n").unwrap();
    let o = floornav(&["stats", "ttest", "--a", a.to_str().unwrap(), "--b", a.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v = json(&o);
    assert_eq!(v["welch"]["t"], 0.0);
    assert_eq!(v["welch"]["p_two_sided"], 1.0);
    assert_eq!(v["z"]["z"], 0.0);
}

#[test]
fn usage_errors_exit_with_two() {
    assert_eq!(floornav(&["oracle", "--bogus"]).status.code(), Some(2));
    assert_eq!(floornav(&["nonsense"]).status.code(), Some(2));
    assert_eq!(floornav(&["classify", "--map", "fixture:two_room"]).status.code(), Some(2));
    let o = floornav(&["oracle", "--map", "fixture:nope", "--start", "a", "--goal", "b"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("unknown fixture"));
}

fn leaves(cmd: &clap::Command, prefix: &str, out: &mut BTreeSet<String>) {
    for sub in cmd.get_subcommands() {
        let name = if prefix.is_empty() {
            sub.get_name().to_string()
        } else {
            format!("{prefix} {}", sub.get_name())
        };
        assert!(sub.get_about().is_some(), "`{name}` has no help text");
        if sub.has_subcommands() {
            leaves(sub, &name, out);
        } else {
            out.insert(name);
        }
    }
}

#[test]
fn dispatch_table_covers_every_operation_once() {
    let mut commands = BTreeSet::new();
    leaves(&Cli::command(), "", &mut commands);
    let table: BTreeSet<String> = DISPATCH.iter().map(|(c, _)| c.to_string()).collect();
    assert_eq!(commands, table);
    assert_eq!(table.len(), 15);

    let operations = [
        "FloorPlan::load", "build_connectivity", "room_hop_distance", "classify_task", "oracle_plan", "double_map",
        "apply_labeling", "parse_plan_json", "parse_plan_lines", "validate_plan", "grade_connectivity",
        "serialize_plan", "build_prompt", "query", "mock_noisy_respond", "rasterize", "astar", "approach_pose",
        "execute", "sample_tasks", "run_experiment", "success_rate", "welch_t_test", "hypothesis_report",
        "render_png",
    ];
    let mut seen: Vec<&str> = DISPATCH.iter().flat_map(|(_, ops)| ops.iter().copied()).collect();
    seen.sort_unstable();
    let mut expected = operations.to_vec();
    expected.sort_unstable();
    assert_eq!(seen, expected, "each operation belongs to exactly one subcommand");
}

#[test]
fn seeded_mocks_give_identical_stdout() {
    let q = [
        "query", "--map", "fixture:original_map_1", "--start", "Terrasse Couverte", "--goal", "Chambre 1", "--backend",
        "mock-noisy", "--seed", "7", "--p-error", "0.5", "--trial", "2",
    ];
    let a = floornav(&q);
    assert!(a.status.code().is_some_and(|c| c <= 1));
    assert_eq!(a.stdout, floornav(&q).stdout);
    assert!(json(&a)["response_text"].is_string());

    let b = [
        "bench", "run", "--map", "fixture:original_map_1", "--map", "fixture:original_map_2", "--backend",
        "mock-noisy", "--seed", "12", "--p-error", "0.3", "--tasks", "2", "--trials", "5",
    ];
    let first = floornav(&b);
    assert_eq!(first.status.code(), Some(0), "{}", String::from_utf8_lossy(&first.stderr));
    assert_eq!(first.stdout, floornav(&b).stdout);
    assert_eq!(stdout(&first).lines().count(), 2);
}

#[test]
fn bench_run_then_report() {
    let dir = tempfile::tempdir().unwrap();
    let records = dir.path().join("records.jsonl");
    let report = dir.path().join("report");
    let o = floornav(&[
        "bench", "run", "--map", "fixture:original_map_1", "--backend", "mock-oracle", "--tasks", "2", "--trials", "3",
        "--records", records.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(json(&o)["rate"], 1.0);
    assert_eq!(std::fs::read_to_string(&records).unwrap().lines().count(), 6);

    let o = floornav(&["bench", "report", "--records", records.to_str().unwrap(), "--out", report.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v = json(&o);
    assert_eq!(v["total_trials"], 6);
    assert_eq!(v["hypotheses"][0]["available"], false);
    for f in ["report.json", "report.csv", "h1.svg", "h2.svg", "h3.svg"] {
        assert!(report.join(f).exists(), "{f}");
    }
}

#[test]
fn map_commands() {
    let dir = tempfile::tempdir().unwrap();
    let o = floornav(&["map", "validate", "--map", &map1()]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(json(&o)["rooms"], 9);

    let broken = dir.path().join("broken.json");
    std::fs::write(&broken, "{\"map_id\": 3}").unwrap();
    let o = floornav(&["map", "validate", "--map", broken.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(json(&o)["valid"], false);

    let doubled = dir.path().join("doubled.json");
    let o = floornav(&[
        "transform", "double", "--map", &map1(), "--left", "Degagement", "--right", "Terrasse Couverte", "--out",
        doubled.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!((json(&o)["rooms"].clone(), json(&o)["doors"].clone()), (18.into(), 19.into()));
    let o = floornav(&["graph", "--map", doubled.to_str().unwrap()]);
    let g = json(&o);
    assert!(g["edges"].as_array().unwrap().iter().any(|e| e["door_id"] == "D10"));

    let o = floornav(&["transform", "relabel", "--map", &map1(), "--scheme", "dense"]);
    let dense = json(&o);
    assert!(dense["labels"].as_array().unwrap().len() > 9);

    let pgm = dir.path().join("g.pgm");
    let o = floornav(&["rasterize", "--map", &map1(), "--out", pgm.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert!(std::fs::read(&pgm).unwrap().starts_with(b"P5\n"));
    assert_eq!(json(&o)["components"], 1);

    let png = dir.path().join("m.png");
    let o = floornav(&["render", "--map", &map1(), "--out", png.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert!(std::fs::read(&png).unwrap().starts_with(b"\x89PNG"));
}

#[test]
fn classify_and_grade() {
    let o = floornav(&["classify", "--map", &map1(), "--start", "Terrasse Couverte", "--goal", "Chambre 1"]);
    let v = json(&o);
    assert_eq!((v["hops"].clone(), v["class"].clone()), (3.into(), "hard".into()));

    let dir = tempfile::tempdir().unwrap();
    let claims = dir.path().join("claims.txt");
    std::fs::write(&claims, "D8: Terrasse Couverte <-> Sejour\nD99: Sejour <-> Cuisine\n").unwrap();
    let o = floornav(&["graph", "--map", &map1(), "--grade", claims.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(json(&o)["claimed"], 2);
}

#[test]
fn prompt_names_the_rooms() {
    let o = floornav(&[
        "prompt", "--map", &map1(), "--start", "Terrasse Couverte", "--goal", "Chambre 1", "--template",
        "draft-persona",
    ]);
    let v = json(&o);
    let text = v["text"].as_str().unwrap();
    assert!(text.contains("Terrasse Couverte") && text.contains("Chambre 1"));
    assert_eq!(v["hash"].as_str().unwrap().len(), 64);
}

#[test]
fn replay_without_cache_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cache = dir.path().to_str().unwrap();
    let o = floornav(&[
        "query", "--map", "fixture:two_room", "--start", "A", "--goal", "B", "--backend", "http-chat", "--endpoint",
        "http://127.0.0.1:9/", "--model", "m", "--credential-env", "FLOORNAV_UNSET_VAR", "--cache-dir", cache,
        "--replay",
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("replay"));
}

#[test]
fn shipped_configs_load() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut n = 0;
    for entry in std::fs::read_dir(&dir).unwrap() {
        let path = entry.unwrap().path();
        let config = floornav::bench::ExperimentConfig::load(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        config.validate().unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        if config.backend.kind.is_mock() {
            floornav::bench::Experiment::prepare(config).unwrap();
        }
        n += 1;
    }
    assert!(n >= 5);
}
