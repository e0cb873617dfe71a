//! End-to-end tests of the `psb` binary: row-count contracts, JSON
//! summaries, determinism, exit codes and fixture round-trips.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn fixture(name: &str) -> PathBuf {
    let mut p = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    p.pop();
    p.pop();
    p.push("fixtures");
    p.push(name);
    p
}

fn psb(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_psb"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn tmpdir(tag: &str) -> PathBuf {
    let d = std::env::temp_dir().join(format!("psb-cli-{tag}-{}", std::process::id()));
    std::fs::create_dir_all(&d).unwrap();
    d
}

#[test]
fn simulate_emits_the_requested_number_of_rows() {
    let dir = tmpdir("simulate");
    let cfg = fixture("n3.json");
    let out = psb(
        &["simulate", "-c", cfg.to_str().unwrap(), "-n", "1000", "-o", "sim.csv"],
        &dir,
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.join("sim.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "step,facet,x1,x2,x3,flight_time");
    assert_eq!(lines.len(), 1001); // header + 1000 rows
    let summary: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(summary["steps_completed"], 1000);
}

#[test]
fn lyapunov_reports_ln2_for_n3() {
    let dir = tmpdir("lyap");
    let cfg = fixture("n3.json");
    let out = psb(&["lyapunov", "-c", cfg.to_str().unwrap(), "-n", "100000"], &dir);
    assert!(out.status.success());
    let summary: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let exp = summary["exponents"][0].as_f64().unwrap();
    assert!((exp - 2f64.ln()).abs() < 1e-3, "exponent {exp}");
}

#[test]
fn chaos_cert_fails_on_the_contraction_triangle_with_exit_zero() {
    let dir = tmpdir("cert");
    let cfg = fixture("contraction_triangle.json");
    let out = psb(&["chaos-cert", "-c", cfg.to_str().unwrap()], &dir);
    assert!(out.status.success());
    let summary: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(summary["passes"], false);
    let failing: Vec<&serde_json::Value> = summary["vertices"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|v| v["passes"] == false)
        .collect();
    assert_eq!(failing.len(), 2);
}

#[test]
fn identical_config_and_seed_give_byte_identical_outputs() {
    let dir_a = tmpdir("det-a");
    let dir_b = tmpdir("det-b");
    let cfg = fixture("n3.json");
    for (args, name) in [
        (vec!["simulate", "-n", "500"], "simulate.csv"),
        (vec!["measure", "-n", "2000"], "measure.csv"),
        (vec!["orbits", "-n", "50"], "orbits.csv"),
    ] {
        let mut full = args.clone();
        let c = cfg.to_str().unwrap();
        full.extend_from_slice(&["-c", c, "--seed", "11"]);
        let oa = psb(&full, &dir_a);
        let ob = psb(&full, &dir_b);
        assert!(oa.status.success() && ob.status.success());
        assert_eq!(oa.stdout, ob.stdout, "stdout differs for {name}");
        let fa = std::fs::read(dir_a.join(name)).unwrap();
        let fb = std::fs::read(dir_b.join(name)).unwrap();
        assert_eq!(fa, fb, "csv differs for {name}");
    }
}

#[test]
fn missing_config_exits_2() {
    let dir = tmpdir("miss");
    let out = psb(&["simulate", "-c", "nope.json"], &dir);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn malformed_config_exits_2() {
    let dir = tmpdir("malformed");
    let bad = dir.join("bad.json");
    std::fs::write(&bad, "{not json").unwrap();
    let out = psb(&["simulate", "-c", bad.to_str().unwrap()], &dir);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn wrong_model_kind_exits_2() {
    let dir = tmpdir("kind");
    let cfg = fixture("server_triangle_cyclic.json");
    let out = psb(&["simulate", "-c", cfg.to_str().unwrap()], &dir);
    assert_eq!(out.status.code(), Some(2));
    let cfg = fixture("n3.json");
    let out = psb(&["server", "-c", cfg.to_str().unwrap()], &dir);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn degenerate_start_exits_3() {
    let dir = tmpdir("degenerate");
    // start on the symmetric tie: the orbit terminates immediately
    let text = std::fs::read_to_string(fixture("n3.json")).unwrap();
    let mut cfg: serde_json::Value = serde_json::from_str(&text).unwrap();
    cfg["run"]["initial"] = serde_json::json!({"facet": 0, "point": [0.0, 0.5, 0.5]});
    let path = dir.join("tie.json");
    std::fs::write(&path, serde_json::to_string(&cfg).unwrap()).unwrap();
    let out = psb(&["simulate", "-c", path.to_str().unwrap(), "-n", "10"], &dir);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn every_fixture_round_trips() {
    let dir = fixture("");
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().map(|e| e != "json").unwrap_or(true) {
            continue;
        }
        let text = std::fs::read_to_string(&path).unwrap();
        let cfg = psb::config::parse_config(&text)
            .unwrap_or_else(|e| panic!("{} failed: {e}", path.display()));
        let re = serde_json::to_string_pretty(&cfg).unwrap();
        let back = psb::config::parse_config(&re).unwrap();
        assert_eq!(cfg, back, "{} does not round trip", path.display());
    }
}

#[test]
fn generator_reproduces_the_committed_fixtures() {
    let dir = tmpdir("gen");
    let out = Command::new(env!("CARGO_BIN_EXE_gen_fixtures"))
        .arg(&dir)
        .output()
        .expect("generator runs");
    assert!(out.status.success());
    let committed = fixture("");
    for entry in std::fs::read_dir(&dir).unwrap() {
        let path = entry.unwrap().path();
        let name = path.file_name().unwrap();
        let a = std::fs::read(&path).unwrap();
        let b = std::fs::read(committed.join(name)).unwrap_or_else(|_| {
            panic!("fixture {} missing from the repo", name.to_string_lossy())
        });
        assert_eq!(a, b, "{} drifted from the generator", name.to_string_lossy());
    }
}

#[test]
fn discretize_reports_packet_period() {
    let dir = tmpdir("disc");
    let cfg = fixture("square_packet.json");
    let out = psb(&["discretize", "-c", cfg.to_str().unwrap(), "-n", "40"], &dir);
    assert!(out.status.success());
    let summary: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(summary["period"], 8);
}

#[test]
fn coupling_contracts_for_the_stochastic_server() {
    let dir = tmpdir("coupling");
    let cfg = fixture("server_triangle_stochastic.json");
    let out = psb(
        &["coupling", "-c", cfg.to_str().unwrap(), "-n", "80", "--seed", "3"],
        &dir,
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let summary: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let fd = summary["final_distance"].as_f64().unwrap();
    assert!(fd < 1e-8, "final distance {fd}");
}
