use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use circuit_ot::circuit::CircuitBuilder;
use circuit_ot::gen::{generate_pair, GenSpec, ImageBuffer, LeafKind};
use circuit_ot::leaf::LeafDistribution::{Bernoulli, Gaussian};
use circuit_ot::Dataset;
use tempfile::TempDir;

fn cli(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_circuit-ot")).args(args).output().expect("binary runs")
}

fn stdout_value(out: &Output, key: &str) -> f64 {
    let text = String::from_utf8_lossy(&out.stdout);
    text.lines()
        .find_map(|l| l.split_once(" ").filter(|(k, _)| *k == key).map(|(_, v)| v.trim().parse().unwrap()))
        .unwrap_or_else(|| panic!("no `{key}` line in {text}"))
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn pair(dir: &TempDir, v: usize, k: usize, kind: LeafKind) -> (PathBuf, PathBuf) {
    let (p, q, _) = generate_pair(&GenSpec::new(v, k, kind, 5)).unwrap();
    let (pp, qp) = (dir.path().join("p.json"), dir.path().join("q.json"));
    p.save(&pp).unwrap();
    q.save(&qp).unwrap();
    (pp, qp)
}

#[test]
fn same_circuit_is_at_distance_zero() {
    let dir = TempDir::new().unwrap();
    let (p, _) = pair(&dir, 4, 2, LeafKind::Bernoulli);
    let out = cli(&["cw", s(&p), s(&p)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(stdout_value(&out, "cw_p^p").abs() < 1e-12);
}

#[test]
fn coupling_output_comes_with_a_manifest() {
    let dir = TempDir::new().unwrap();
    let (p, q) = pair(&dir, 3, 2, LeafKind::Gaussian);
    let coupling = dir.path().join("coupling.json");
    let out = cli(&["cw", s(&p), s(&q), "--p-order", "2", "--out-coupling", s(&coupling)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let d2 = stdout_value(&out, "cw_p^p");
    assert!((stdout_value(&out, "cw_p") - d2.sqrt()).abs() < 1e-12);
    assert!(coupling.exists());
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("coupling.json.manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["subcommand"], "cw");
    assert_eq!(manifest["inputs"].as_array().unwrap().len(), 2);
}

#[test]
fn incompatible_pair_exits_with_2() {
    let dir = TempDir::new().unwrap();
    let leaf = || Bernoulli { p: 0.5 };
    let mut b = CircuitBuilder::new();
    let (x0, x1, x2) = (b.input(0, leaf()), b.input(1, leaf()), b.input(2, leaf()));
    let left = b.product(vec![x0, x1]);
    b.product(vec![left, x2]);
    let p = b.finish(3).unwrap();
    let mut b = CircuitBuilder::new();
    let (x0, x1, x2) = (b.input(0, leaf()), b.input(1, leaf()), b.input(2, leaf()));
    let right = b.product(vec![x1, x2]);
    b.product(vec![x0, right]);
    let q = b.finish(3).unwrap();
    let (pp, qp) = (dir.path().join("p.json"), dir.path().join("q.json"));
    p.save(&pp).unwrap();
    q.save(&qp).unwrap();
    let out = cli(&["cw", s(&pp), s(&qp)]);
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error["));
}

#[test]
fn malformed_circuit_exits_with_3() {
    let dir = TempDir::new().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{ not json").unwrap();
    let out = cli(&["cw", s(&bad), s(&bad)]);
    assert_eq!(out.status.code(), Some(3));
    let missing = dir.path().join("missing.json");
    assert_eq!(cli(&["cw", s(&missing), s(&missing)]).status.code(), Some(3));
}

#[test]
fn bench_is_deterministic_and_marks_infeasible_cells() {
    let dir = TempDir::new().unwrap();
    let run = |name: &str, extra: &[&str]| {
        let path = dir.path().join(name);
        let mut args = vec!["bench", "--v-grid", "3", "--k-grid", "2", "--reps", "2", "--seed", "7", "--out", s(&path)];
        args.extend_from_slice(extra);
        let out = cli(&args);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        let mut reader = csv::Reader::from_path(&path).unwrap();
        let header: Vec<String> = reader.headers().unwrap().iter().map(String::from).collect();
        let rows: Vec<Vec<String>> =
            reader.records().map(|r| r.unwrap().iter().map(String::from).collect()).collect();
        (header, rows)
    };
    let (header, a) = run("a.csv", &[]);
    let (_, b) = run("b.csv", &["--threads", "1"]);
    assert_eq!(a.len(), 2);
    let col = |name: &str| header.iter().position(|h| h == name).unwrap();
    let values = |rows: &[Vec<String>]| -> Vec<Vec<String>> {
        rows.iter().map(|r| ["pair_id", "seed", "cw", "mw", "w_exact", "sinkhorn"].map(|c| r[col(c)].clone()).to_vec()).collect()
    };
    assert_eq!(values(&a), values(&b));
    for row in &a {
        let cw: f64 = row[col("cw")].parse().unwrap();
        let exact: f64 = row[col("w_exact")].parse().unwrap();
        assert!(exact <= cw + 1e-9);
    }
    let (_, capped) = run("c.csv", &["--max-support", "4", "--max-components", "2"]);
    assert!(capped.iter().all(|r| r[col("w_exact")] == "infeasible" && r[col("mw")] == "infeasible"));
    assert!(dir.path().join("a.csv.manifest.json").exists());
}

#[test]
fn learn_writes_circuit_and_trace() {
    let dir = TempDir::new().unwrap();
    let mut b = CircuitBuilder::new();
    let g = b.input(0, Gaussian { mu: 0.0, sigma: 1.0 });
    let h = b.input(0, Gaussian { mu: 1.0, sigma: 1.0 });
    b.sum(vec![g, h], vec![0.5, 0.5]);
    let structure = dir.path().join("s.json");
    b.finish(1).unwrap().save(&structure).unwrap();
    let data = dir.path().join("d.csv");
    Dataset::new(1, vec![-5.0, -4.0, -6.0, 5.0, 4.0, 6.0]).unwrap().write_csv(&data).unwrap();

    for method in ["wm", "wm-stochastic", "em"] {
        let (out_path, trace) = (dir.path().join(format!("{method}.json")), dir.path().join(format!("{method}.csv")));
        let out = cli(&["learn", s(&data), s(&structure), "--method", method, "--iters", "5", "--out", s(&out_path), "--trace", s(&trace)]);
        assert!(out.status.success(), "{method}: {}", String::from_utf8_lossy(&out.stderr));
        assert!(stdout_value(&out, "bpd").is_finite());
        let text = std::fs::read_to_string(&trace).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("iteration,ecw,bpd,wall_time"));
        assert!(lines.count() >= 2, "{method}: initial state plus at least one step");
        assert!(circuit_ot::Circuit::load(&out_path).is_ok());
    }

    let zero = dir.path().join("zero.json");
    let out = cli(&["learn", s(&data), s(&structure), "--iters", "0", "--out", s(&zero)]);
    assert!(out.status.success());
    // No steps: the parameters are written back unchanged.
    let before = circuit_ot::Circuit::load(&structure).unwrap();
    let after = circuit_ot::Circuit::load(&zero).unwrap();
    assert_eq!(before.nodes(), after.nodes());
}

#[test]
fn learn_rejects_mismatched_columns() {
    let dir = TempDir::new().unwrap();
    let (p, _) = pair(&dir, 3, 2, LeafKind::Gaussian);
    let data = dir.path().join("d.csv");
    Dataset::new(2, vec![0.0, 1.0]).unwrap().write_csv(&data).unwrap();
    let out = cli(&["learn", s(&data), s(&p), "--out", s(&dir.path().join("o.json"))]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn color_transfer_at_zero_keeps_the_image() {
    let dir = TempDir::new().unwrap();
    let pixels: Vec<u8> = (0..64u32).flat_map(|i| [(i * 4) as u8, 100, (255 - i * 3) as u8]).collect();
    let src = ImageBuffer::new(8, 8, pixels).unwrap();
    let (sp, dp, op) = (dir.path().join("s.ppm"), dir.path().join("d.ppm"), dir.path().join("o.ppm"));
    src.save(&sp).unwrap();
    ImageBuffer::filled(4, 4, [0, 0, 255]).save(&dp).unwrap();
    let out = cli(&["color-transfer", s(&sp), s(&dp), "--t", "0", "--components", "2", "--out", s(&op)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let result = ImageBuffer::load(&op).unwrap();
    let worst = result.pixels().iter().zip(src.pixels()).map(|(a, b)| a.abs_diff(*b)).max().unwrap();
    assert!(worst <= 1, "worst channel error {worst}");
}
