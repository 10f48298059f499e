use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_movclust");
const SYNTH: &str = "n=60,c=3,dims=4:5,sep=10,seed=2";

fn movclust(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().unwrap()
}

fn ok(args: &[&str]) -> String {
    let out = movclust(args);
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn value(text: &str, key: &str) -> f64 {
    text.lines()
        .find_map(|l| l.strip_prefix(&format!("{key}=")))
        .unwrap_or_else(|| panic!("no {key} in {text}"))
        .parse()
        .unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn cluster_writes_labels_and_finite_metrics() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let stdout = ok(&["cluster", "--synth", SYNTH, "--out", p(&out)]);
    let labels = fs::read_to_string(out.join("trial_000/labels.txt")).unwrap();
    assert_eq!(labels.lines().count(), 60);
    for key in ["acc_mean", "nmi_mean", "consensus_ratio_mean"] {
        assert!(value(&stdout, key).is_finite());
    }
    let json: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("metrics.json")).unwrap()).unwrap();
    assert!(json.is_object());
    let iters = fs::read_to_string(out.join("trial_000/iterations.csv")).unwrap();
    assert!(iters.lines().count() >= 2);
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let args = |o: &Path| {
        vec![
            "cluster".to_string(),
            "--synth".into(),
            SYNTH.into(),
            "--noise-frac".into(),
            "0.2".into(),
            "--trials".into(),
            "2".into(),
            "--seed".into(),
            "7".into(),
            "--out".into(),
            p(o).into(),
        ]
    };
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for o in [&a, &b] {
        let v = args(o);
        ok(&v.iter().map(String::as_str).collect::<Vec<_>>());
    }
    for f in [
        "trials.csv",
        "metrics.txt",
        "trial_000/labels.txt",
        "trial_001/affinity.csv",
        "trial_001/iterations.csv",
    ] {
        assert_eq!(
            fs::read(a.join(f)).unwrap(),
            fs::read(b.join(f)).unwrap(),
            "{f}"
        );
    }
}

#[test]
fn single_cell_sweep_matches_cluster() {
    let dir = tempfile::tempdir().unwrap();
    let common = ["--synth", SYNTH, "--noise-frac", "0.2", "--seed", "3"];
    let mut cluster = vec!["cluster", "--lambda2", "0.35", "--beta", "0.5"];
    cluster.extend(common);
    let cout = dir.path().join("cluster");
    cluster.extend(["--out", p(&cout)]);
    let c = ok(&cluster);
    let out = dir.path().join("sweep");
    let mut sweep = vec![
        "sweep",
        "--lambda2-grid",
        "0.35",
        "--beta-grid",
        "0.5",
        "--out",
        p(&out),
    ];
    sweep.extend(common);
    ok(&sweep);
    let csv = fs::read_to_string(out.join("sweep.csv")).unwrap();
    let row: Vec<f64> = csv
        .lines()
        .nth(1)
        .unwrap()
        .split(',')
        .map(|x| x.parse().unwrap())
        .collect();
    assert!((row[2] - value(&c, "acc_mean")).abs() < 1e-12);
    assert!((row[4] - value(&c, "nmi_mean")).abs() < 1e-12);
}

fn write_affinity(path: &Path, n: usize, f: impl Fn(usize, usize) -> f64) {
    let text: String = (0..n)
        .map(|i| {
            let row: Vec<String> = (0..n).map(|j| f(i, j).to_string()).collect();
            row.join(",") + "\n"
        })
        .collect();
    fs::write(path, text).unwrap();
}

fn write_labels(path: &Path, labels: &[usize]) {
    let text: String = labels.iter().map(|l| format!("{l}\n")).collect();
    fs::write(path, text).unwrap();
}

fn pgm_pixels(bytes: &[u8], n: usize) -> &[u8] {
    &bytes[bytes.len() - n * n..]
}

#[test]
fn affinity_figure_renders_blocks() {
    let dir = tempfile::tempdir().unwrap();
    let (aff, lab, out) = (
        dir.path().join("w.csv"),
        dir.path().join("l.txt"),
        dir.path().join("fig"),
    );
    // interleaved labels; the figure must regroup them into blocks
    let labels: Vec<usize> = (0..12).map(|i| i % 3).collect();
    write_affinity(
        &aff,
        12,
        |i, j| if labels[i] == labels[j] { 1.0 } else { 0.0 },
    );
    write_labels(&lab, &labels);
    let stdout = ok(&[
        "affinity-figure",
        "--affinity",
        p(&aff),
        "--labels",
        p(&lab),
        "--out",
        p(&out),
    ]);
    assert!(value(&stdout, "intra_brightness") >= 3.0 * value(&stdout, "inter_brightness"));
    let bytes = fs::read(out.join("affinity.pgm")).unwrap();
    assert!(bytes.starts_with(b"P5"));
    let px = pgm_pixels(&bytes, 12);
    for i in 0..12 {
        for j in 0..12 {
            if i / 4 != j / 4 {
                assert!(px[i * 12 + j] <= 5);
            }
        }
    }
}

#[test]
fn constant_affinity_is_mid_gray() {
    let dir = tempfile::tempdir().unwrap();
    let (aff, lab, out) = (
        dir.path().join("w.csv"),
        dir.path().join("l.txt"),
        dir.path().join("fig"),
    );
    write_affinity(&aff, 5, |_, _| 0.3);
    write_labels(&lab, &[0, 1, 0, 1, 0]);
    ok(&[
        "affinity-figure",
        "--affinity",
        p(&aff),
        "--labels",
        p(&lab),
        "--out",
        p(&out),
    ]);
    let bytes = fs::read(out.join("affinity.pgm")).unwrap();
    assert!(pgm_pixels(&bytes, 5).iter().all(|&v| v == 128));
}

#[test]
fn affinity_figure_rejects_size_mismatch() {
    let dir = tempfile::tempdir().unwrap();
    let (aff, lab) = (dir.path().join("w.csv"), dir.path().join("l.txt"));
    write_affinity(&aff, 4, |_, _| 1.0);
    write_labels(&lab, &[0, 1, 0]);
    let out = movclust(&[
        "affinity-figure",
        "--affinity",
        p(&aff),
        "--labels",
        p(&lab),
        "--out",
        p(&dir.path().join("f")),
    ]);
    assert!(!out.status.success());
}

#[test]
fn synth_then_baseline_and_evaluate() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    let manifest = ok(&[
        "synth",
        "--n",
        "40",
        "--clusters",
        "2",
        "--dims",
        "6",
        "--sep",
        "12",
        "--out",
        p(&data),
    ]);
    let manifest = manifest.trim();
    assert!(Path::new(manifest).exists());

    let out = dir.path().join("base");
    let stdout = ok(&["baseline", "--dataset", manifest, "--out", p(&out)]);
    assert!(value(&stdout, "acc_mean") >= 0.9);

    let pred = out.join("trial_000/labels.txt");
    let truth = data.join("labels.txt");
    let scores = ok(&["evaluate", "--pred", p(&pred), "--truth", p(&truth)]);
    assert!((value(&scores, "acc") - value(&stdout, "acc_mean")).abs() < 1e-12);
    assert!((0.0..=1.0).contains(&value(&scores, "nmi")));
}

#[test]
fn bad_inputs_exit_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    fs::write(&blocker, "x").unwrap();
    let missing = dir.path().join("nope.toml");
    let out = dir.path().join("out");
    for args in [
        vec!["cluster", "--dataset", p(&missing), "--out", p(&out)],
        vec!["cluster", "--synth", SYNTH, "--out", p(&blocker)],
        vec![
            "cluster",
            "--synth",
            SYNTH,
            "--trials",
            "0",
            "--out",
            p(&out),
        ],
        vec![
            "cluster",
            "--synth",
            "n=5,c=9,dims=3,sep=1",
            "--out",
            p(&out),
        ],
    ] {
        let out = movclust(&args);
        assert!(!out.status.success(), "{args:?}");
        assert!(!out.stderr.is_empty());
    }
}

#[test]
fn numerical_failure_keeps_the_iteration_log() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("div");
    let res = movclust(&[
        "cluster",
        "--synth",
        SYNTH,
        "--mu0",
        "1e300",
        "--mu-max",
        "1e300",
        "--rho",
        "10",
        "--out",
        p(&out),
    ]);
    assert!(!res.status.success());
    assert!(out.join("trial_000/iterations.csv").exists());
}

#[test]
fn checkpoint_has_a_magic_header() {
    let dir = tempfile::tempdir().unwrap();
    let ck = dir.path().join("state.bin");
    let out = dir.path().join("out");
    ok(&[
        "cluster",
        "--synth",
        SYNTH,
        "--max-iters",
        "2",
        "--checkpoint",
        p(&ck),
        "--out",
        p(&out),
    ]);
    assert!(fs::read(&ck).unwrap().starts_with(b"MOVCLUST1"));
}
