use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_dh-shadow"))
}

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../data")
        .join(name)
}

fn scratch(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("dh-shadow-cli-{tag}-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn run(args: &[&str], out: &Path) -> Output {
    bin()
        .args(args)
        .arg("--output-dir")
        .arg(out)
        .output()
        .unwrap()
}

fn write_input(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

#[test]
fn flow_rank_one_trivial_is_zero() {
    let out = scratch("flow1");
    let input = data("rank1_trivial.json");
    let o = run(
        &[
            "flow",
            "--input",
            input.to_str().unwrap(),
            "--path",
            "0,0:1,0",
            "--samples",
            "5",
        ],
        &out,
    );
    assert_eq!(o.status.code(), Some(0));
    let csv = std::fs::read_to_string(out.join("flow.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().skip(1).collect();
    assert_eq!(rows.len(), 5);
    for row in rows {
        let f: Vec<&str> = row.split(',').collect();
        assert_eq!(&f[4..], ["0", "0", "0"]);
    }
}

#[test]
fn flow_empty_grid_is_header_only() {
    let out = scratch("flow0");
    let input = data("rank2_model.json");
    let o = run(&["flow", "--input", input.to_str().unwrap()], &out);
    assert_eq!(o.status.code(), Some(0));
    let csv = std::fs::read_to_string(out.join("flow.csv")).unwrap();
    assert_eq!(csv, "re_lambda,im_lambda,puncture,kms_index,p,re_e,im_e\n");
}

#[test]
fn flow_model_curves_meet_at_one() {
    let out = scratch("flow2");
    let input = data("rank2_model.json");
    let o = run(
        &[
            "flow",
            "--input",
            input.to_str().unwrap(),
            "--path",
            "0,0:1,0",
            "--samples",
            "11",
        ],
        &out,
    );
    assert_eq!(o.status.code(), Some(0));
    let csv = std::fs::read_to_string(out.join("flow.csv")).unwrap();
    let at_one: Vec<Vec<f64>> = csv
        .lines()
        .skip(1)
        .filter(|r| r.starts_with("1,0,"))
        .map(|r| r.split(',').skip(4).map(|x| x.parse().unwrap()).collect())
        .collect();
    assert_eq!(at_one.len(), 2);
    // e₁ − e₂ = nλ at the collision point λ = 1 (here n = −2).
    let diff = (at_one[0][1] - at_one[1][1], at_one[0][2] - at_one[1][2]);
    assert!((diff.0 - diff.0.round()).abs() < 1e-12 && diff.1.abs() < 1e-12);
}

#[test]
fn schema_and_hypothesis_exit_codes() {
    let out = scratch("codes");
    let schema = write_input(
        &out,
        "bad.json",
        "{\n  \"rank\": 2,\n  \"punctures\": 3\n}\n",
    );
    let o = run(&["flow", "--input", schema.to_str().unwrap()], &out);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line"));

    let dup = write_input(
        &out,
        "dup.json",
        r#"{"rank": 2, "punctures": [{"label": "t", "spectrum": [{"a": -0.5, "alpha": [1.0, 0.0]}, {"a": -0.5, "alpha": [1.0, 0.0]}]}]}"#,
    );
    let o = run(&["walls", "--input", dup.to_str().unwrap()], &out);
    assert_eq!(o.status.code(), Some(3));

    let level = write_input(
        &out,
        "level.json",
        r#"{"rank": 1, "punctures": [{"label": "t", "spectrum": [{"a": 0.5, "alpha": [0.0, 0.0]}]}]}"#,
    );
    let o = run(&["walls", "--input", level.to_str().unwrap()], &out);
    assert_eq!(o.status.code(), Some(2));

    let o = run(&["walls", "--input", "/nonexistent/shadow.json"], &out);
    assert_eq!(o.status.code(), Some(2));
    let o = run(
        &[
            "walls",
            "--input",
            data("rank2_model.json").to_str().unwrap(),
            "--region",
            "2:1",
        ],
        &out,
    );
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn walls_model_contains_unit_points() {
    let out = scratch("walls");
    let input = data("rank2_model.json");
    let o = run(
        &[
            "walls",
            "--input",
            input.to_str().unwrap(),
            "--region",
            "0.1:3",
        ],
        &out,
    );
    assert_eq!(o.status.code(), Some(0));
    let csv = std::fs::read_to_string(out.join("delta.csv")).unwrap();
    let points: Vec<(f64, f64)> = csv
        .lines()
        .skip(1)
        .map(|r| {
            let f: Vec<&str> = r.split(',').collect();
            (f[0].parse().unwrap(), f[1].parse().unwrap())
        })
        .collect();
    for (re, im) in [(1.0, 0.0), (-1.0, 0.0), (0.0, 1.0), (0.0, -1.0)] {
        assert!(points
            .iter()
            .any(|p| (p.0 - re).abs() < 1e-9 && (p.1 - im).abs() < 1e-9));
    }
    let walls = std::fs::read_to_string(out.join("walls.csv")).unwrap();
    assert!(walls.starts_with("curve_id,re,im,puncture,i,j,m\n"));
    assert!(walls.lines().count() > 1);
}

#[test]
fn section_writes_samples_and_transitions() {
    let out = scratch("section");
    let input = data("rank2_model.json");
    let o = run(
        &[
            "section",
            "--input",
            input.to_str().unwrap(),
            "--path",
            "0.5,0.5:-0.5,0.5",
        ],
        &out,
    );
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let csv = std::fs::read_to_string(out.join("section.csv")).unwrap();
    assert!(csv.starts_with(
        "sample_id,re_lambda,im_lambda,puncture,slot,kms_index,rep_shift,p,re_e,im_e\n"
    ));
    let t: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("transitions.json")).unwrap())
            .unwrap();
    assert_eq!(t.as_array().unwrap().len(), 1);

    let o = run(
        &[
            "section",
            "--input",
            input.to_str().unwrap(),
            "--path",
            "0.5,0:1.5,0",
        ],
        &out,
    );
    assert_eq!(o.status.code(), Some(4));
}

#[test]
fn twistor_profile_example() {
    let out = scratch("twistor");
    let o = run(
        &["twistor", "--profile", "1,1,1", "--degree", "2", "--json"],
        &out,
    );
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let last = &v["tables"][2]["entries"];
    let dims: Vec<&str> = last
        .as_array()
        .unwrap()
        .iter()
        .map(|e| e["dim"].as_str().unwrap())
        .collect();
    assert_eq!(dims, ["1", "1", "2", "1", "1"]);
    assert!(std::fs::read_to_string(out.join("twistor.txt"))
        .unwrap()
        .contains("degree 2"));

    let o = run(&["twistor", "--profile", "0,0,0", "--degree", "2"], &out);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn orbit_and_betti() {
    let out = scratch("orbit");
    let model = data("rank2_model.json");
    let o = run(
        &[
            "orbit",
            "--input",
            model.to_str().unwrap(),
            "--lambda",
            "0.3,0.4",
            "--length",
            "1",
        ],
        &out,
    );
    assert_eq!(o.status.code(), Some(0));
    let csv = std::fs::read_to_string(out.join("orbit.csv")).unwrap();
    assert!(csv.lines().nth(1).unwrap().starts_with("0,id,"));

    let system = data("rank2_diagonal_system.json");
    let o = run(
        &[
            "betti",
            "--input",
            system.to_str().unwrap(),
            "--sigma",
            "t:2,1",
            "--json",
        ],
        &out,
    );
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["commutant_dimension"], 2);
    assert!(v["surgered"].is_object());

    let o = run(
        &[
            "betti",
            "--input",
            model.to_str().unwrap(),
            "--lambda",
            "0.6,0.8",
            "--json",
        ],
        &out,
    );
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["betti_shadow"]["t"].as_array().unwrap().len(), 2);
}

#[test]
fn check_groupoid_passes_and_json_reports() {
    let out = scratch("check");
    let o = run(&["check", "--suite", "groupoid"], &out);
    assert_eq!(o.status.code(), Some(0));
    let o = run(&["check", "--suite", "twistor", "--json"], &out);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["pass"], true);
    let o = run(&["check", "--suite", "bogus"], &out);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn config_file_and_flag_precedence() {
    let out = scratch("config");
    let cfg = write_input(&out, "cfg.json", r#"{"seed": 99, "eps_eq": 1e-9}"#);
    let o = run(
        &["check", "--suite", "kms", "--config", cfg.to_str().unwrap()],
        &out,
    );
    assert!(String::from_utf8_lossy(&o.stdout).contains("seed=99"));
    let o = run(
        &[
            "check",
            "--suite",
            "kms",
            "--config",
            cfg.to_str().unwrap(),
            "--seed",
            "5",
        ],
        &out,
    );
    assert!(String::from_utf8_lossy(&o.stdout).contains("seed=5"));
    let bad = write_input(&out, "bad.json", r#"{"grid_resolution": 1}"#);
    let o = run(
        &["check", "--suite", "kms", "--config", bad.to_str().unwrap()],
        &out,
    );
    assert_eq!(o.status.code(), Some(2));
}
