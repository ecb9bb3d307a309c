use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use capacity_cli::spec_file::load_channel;
use capacity_cli::trace::HEADER;
use tempfile::TempDir;

const DBSC: &str =
    "# two-input, three-output symmetric channel\ntype: matrix\nrows:\n0.7 0.2 0.1\n0.1 0.2 0.7\n";

fn capacity(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_capacity"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let path = dir.path().join(name);
    fs::write(&path, text).unwrap();
    path
}

fn s(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn trace_rows(path: &Path) -> Vec<Vec<String>> {
    let text = fs::read_to_string(path).unwrap();
    assert!(!text.contains('\r'));
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some(HEADER));
    lines
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

fn iterations_reported(stdout: &[u8]) -> usize {
    let text = String::from_utf8_lossy(stdout);
    let before = text.split(" iterations").next().unwrap();
    before.rsplit(' ').next().unwrap().parse().unwrap()
}

#[test]
fn run_classical_on_dbsc() {
    let dir = TempDir::new().unwrap();
    let spec = write(&dir, "dbsc.txt", DBSC);
    let trace = dir.path().join("classical.csv");
    let out = capacity(&[
        "run",
        s(&spec),
        "--variant",
        "classical",
        "--tolerance",
        "1e-11",
        "--stop",
        "increment",
        "--prior",
        "0.3,0.7",
        "--output",
        s(&trace),
    ]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("nats") && stdout.contains("bits") && stdout.contains("converged"));
    let rows = trace_rows(&trace);
    assert_eq!(rows.len(), iterations_reported(&out.stdout));
    assert!((15..=25).contains(&rows.len()), "{} rows", rows.len());
    assert!(rows.iter().all(|r| r.len() == 9));
    // classical gap column never grows
    let gaps: Vec<f64> = rows.iter().map(|r| r[5].parse().unwrap()).collect();
    assert!(gaps.windows(2).all(|w| w[1] <= w[0] + 1e-15));
}

#[test]
fn run_each_variant_writes_one_row_per_iteration() {
    let dir = TempDir::new().unwrap();
    let spec = write(&dir, "dbsc.txt", DBSC);
    for variant in ["classical", "matz", "proximal"] {
        let trace = dir.path().join(format!("{variant}.csv"));
        let out = capacity(&[
            "run",
            s(&spec),
            "--variant",
            variant,
            "--prior",
            "0.3,0.7",
            "--output",
            s(&trace),
        ]);
        assert_eq!(out.status.code(), Some(0));
        assert_eq!(trace_rows(&trace).len(), iterations_reported(&out.stdout));
    }
}

#[test]
fn run_exit_codes() {
    let dir = TempDir::new().unwrap();
    let good = write(&dir, "dbsc.txt", DBSC);
    let bad = write(&dir, "bad.txt", "type: matrix\nrows:\n0.7 0.2 zero\n");
    let trace = dir.path().join("t.csv");
    let t = s(&trace);

    assert_eq!(
        capacity(&["run", s(&bad), "--output", t]).status.code(),
        Some(2)
    );
    assert_eq!(
        capacity(&["run", "/nonexistent/spec.txt", "--output", t])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        capacity(&["run", s(&good), "--variant", "newton", "--output", t])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        capacity(&["run", s(&good), "--prior", "1,0", "--output", t])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        capacity(&["run", s(&good), "--tolerance", "-1", "--output", t])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        capacity(&["run", s(&good), "--stop", "never", "--output", t])
            .status
            .code(),
        Some(2)
    );

    let capped = capacity(&[
        "run",
        s(&good),
        "--variant",
        "classical",
        "--max-iter",
        "3",
        "--prior",
        "0.3,0.7",
        "--output",
        t,
    ]);
    assert_eq!(capped.status.code(), Some(1));
    assert_eq!(trace_rows(&trace).len(), 3);
}

#[test]
fn run_accepts_lambda_flags() {
    let dir = TempDir::new().unwrap();
    let spec = write(&dir, "dbsc.txt", DBSC);
    let trace = dir.path().join("t.csv");
    let out = capacity(&[
        "run",
        s(&spec),
        "--variant",
        "matz",
        "--lambda",
        "0.7",
        "--prior",
        "0.3,0.7",
        "--output",
        s(&trace),
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert!(trace_rows(&trace)
        .iter()
        .all(|r| r[6].parse::<f64>().unwrap() == 0.7));

    let out = capacity(&[
        "run",
        s(&spec),
        "--variant",
        "proximal",
        "--lambda-range",
        "0.5,2",
        "--prior",
        "0.3,0.7",
        "--output",
        s(&trace),
    ]);
    assert_eq!(out.status.code(), Some(0));
    for row in trace_rows(&trace) {
        let lambda: f64 = row[6].parse().unwrap();
        assert!((0.5..=2.0).contains(&lambda), "lambda {lambda}");
    }
    let out = capacity(&[
        "run",
        s(&spec),
        "--variant",
        "proximal",
        "--lambda-range",
        "2,1",
        "--output",
        s(&trace),
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn compare_writes_traces_and_summary() {
    let dir = TempDir::new().unwrap();
    let spec = write(&dir, "dbsc.txt", DBSC);
    let out_dir = dir.path().join("cmp");
    let out = capacity(&[
        "compare",
        s(&spec),
        "--prior",
        "0.3,0.7",
        "--output",
        s(&out_dir),
    ]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stdout)
    );

    let summary = fs::read_to_string(out_dir.join("summary.csv")).unwrap();
    let mut lines = summary.lines();
    assert_eq!(
        lines.next(),
        Some("variant,capacity_nats,capacity_bits,iterations,termination,wall_clock_seconds")
    );
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 3);
    let mut iterations = Vec::new();
    for row in &rows {
        let rows_in_trace = trace_rows(&out_dir.join(format!("{}.csv", row[0]))).len();
        let count: usize = row[3].parse().unwrap();
        assert_eq!(rows_in_trace, count);
        assert_eq!(row[4], "converged");
        iterations.push(count);
    }
    let caps: Vec<f64> = rows.iter().map(|r| r[1].parse().unwrap()).collect();
    assert!(caps.iter().all(|c| (c - caps[0]).abs() <= 1e-9));
    // matz and proximal both beat classical here
    assert!(
        iterations[1] <= iterations[0] && iterations[2] <= iterations[0],
        "{iterations:?}"
    );
}

#[test]
fn compare_useless_channel() {
    let dir = TempDir::new().unwrap();
    let spec = write(&dir, "bsc.txt", "type: bsc\nepsilon: 0.5\n");
    let out_dir = dir.path().join("cmp");
    let out = capacity(&["compare", s(&spec), "--output", s(&out_dir)]);
    assert_eq!(out.status.code(), Some(0));
    let summary = fs::read_to_string(out_dir.join("summary.csv")).unwrap();
    for row in summary.lines().skip(1) {
        let fields: Vec<&str> = row.split(',').collect();
        assert!(fields[1].parse::<f64>().unwrap().abs() < 1e-11);
        assert!(fields[3].parse::<usize>().unwrap() <= 2);
    }
}

#[test]
fn compare_bernoulli_gaussian_ordering() {
    let dir = TempDir::new().unwrap();
    let spec = write(
        &dir,
        "bg.txt",
        "type: bernoulli_gaussian\np_impulse: 0.3\nsigma_b: 0.01\nsigma_g: 1\ninput_levels: 10\noutput_levels: 40\n",
    );
    let out_dir = dir.path().join("cmp");
    let out = capacity(&["compare", s(&spec), "--output", s(&out_dir)]);
    assert_eq!(out.status.code(), Some(0));
    let summary = fs::read_to_string(out_dir.join("summary.csv")).unwrap();
    let counts: Vec<usize> = summary
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(3).unwrap().parse().unwrap())
        .collect();
    assert!(counts[2] <= counts[1], "{counts:?}");
}

#[test]
fn compare_reports_disagreement_when_a_variant_stops_early() {
    let dir = TempDir::new().unwrap();
    let spec = write(&dir, "dbsc.txt", DBSC);
    let out_dir = dir.path().join("cmp");
    let out = capacity(&[
        "compare",
        s(&spec),
        "--max-iter",
        "2",
        "--prior",
        "0.3,0.7",
        "--output",
        s(&out_dir),
    ]);
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn verify_exit_codes() {
    let ok = capacity(&["verify", "--samples", "1", "--seed", "7"]);
    assert_eq!(ok.status.code(), Some(0));
    let stdout = String::from_utf8_lossy(&ok.stdout);
    assert_eq!(stdout.lines().count(), 6);
    assert!(stdout
        .lines()
        .all(|l| l.contains("PASS") && l.contains("samples=1")));

    assert_eq!(
        capacity(&["verify", "--samples", "0"]).status.code(),
        Some(2)
    );
    assert_eq!(
        capacity(&["verify", "--samples", "50", "--seed", "42"])
            .status
            .code(),
        Some(0)
    );
}

#[test]
fn spec_dump_round_trips() {
    let dir = TempDir::new().unwrap();
    let spec = write(
        &dir,
        "bg.txt",
        "type: bernoulli_gaussian\np_impulse: 0.3\nsigma_b: 0.01\nsigma_g: 1\n",
    );
    let out = capacity(&["spec-dump", s(&spec)]);
    assert_eq!(out.status.code(), Some(0));
    let dumped = String::from_utf8(out.stdout).unwrap();
    let original = load_channel(&fs::read_to_string(&spec).unwrap()).unwrap();
    let reparsed = load_channel(&dumped).unwrap();
    let bits = |m: &capacity_core::TransitionMatrix| -> Vec<u64> {
        m.to_rows()
            .into_iter()
            .flatten()
            .map(f64::to_bits)
            .collect()
    };
    assert_eq!(bits(&original), bits(&reparsed));

    let file = dir.path().join("dump.txt");
    assert_eq!(
        capacity(&["spec-dump", s(&spec), "--output", s(&file)])
            .status
            .code(),
        Some(0)
    );
    assert_eq!(fs::read_to_string(&file).unwrap(), dumped);
    let again = capacity(&["spec-dump", s(&file)]);
    assert_eq!(String::from_utf8(again.stdout).unwrap(), dumped);

    assert_eq!(
        capacity(&["spec-dump", "/nonexistent"]).status.code(),
        Some(2)
    );
}
