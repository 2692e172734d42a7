use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use blindsharp::fleet::{read_rows, RowClass};
use blindsharp::io::{load_grayscale, write_raster};
use blindsharp::kernel::Kernel;
use blindsharp::sharpness::{QualityClass, SharpnessReport};
use blindsharp::synth::{cartoon_scene, synthesize};
use serde_json::Value;
use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_blindsharp"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn scene(dir: &Path, name: &str, kernel: &Kernel, seed: u64) -> PathBuf {
    scene_sized(dir, name, kernel, seed, 128)
}

fn scene_sized(dir: &Path, name: &str, kernel: &Kernel, seed: u64, size: usize) -> PathBuf {
    let truth = cartoon_scene(size, size, seed);
    let v = synthesize(&truth, kernel, 0.004, seed + 1).unwrap();
    let path = dir.join(name);
    write_raster(&path, &v).unwrap();
    path
}

/// Thresholds low enough in scale for a 15 px kernel to reach Discard.
fn strict_config(dir: &Path) -> PathBuf {
    let path = dir.join("strict.toml");
    std::fs::write(
        &path,
        "[thresholds.ortho]\ndiscard = 0.2\nsharp = 0.5\n[thresholds.basic]\ndiscard = 0.2\nsharp = 0.5\n",
    )
    .unwrap();
    path
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn score_sharp_scene() {
    let dir = TempDir::new().unwrap();
    let img = scene_sized(dir.path(), "sharp.png", &Kernel::delta(15), 1, 256);
    let kpath = dir.path().join("k.txt");
    let out = run(&[
        "score",
        s(&img),
        "--satellite-id",
        "1003",
        "--acquired",
        "2018-07-01",
        "--kernel-out",
        s(&kpath),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    let report: SharpnessReport = serde_json::from_str(&text).unwrap();
    assert_eq!(report.class, QualityClass::Sharp);
    assert_eq!(report.satellite_id, "1003");
    assert_eq!(report.image_id, "sharp");
    assert!(report.score >= 0.8, "score {}", report.score);
    assert!(kpath.exists() && dir.path().join("k.png").exists());

    // re-serializing the parsed report gives the same JSON value
    let first: Value = serde_json::from_str(&text).unwrap();
    let again: Value = serde_json::to_value(&report).unwrap();
    assert_eq!(first, again);
}

#[test]
fn score_heavy_blur_is_discard() {
    let dir = TempDir::new().unwrap();
    let img = scene(dir.path(), "blurry.tif", &Kernel::gaussian(15, 4.0), 2);
    let cfg = strict_config(dir.path());
    let out = run(&["--config", s(&cfg), "score", s(&img), "--product", "ortho"]);
    assert_eq!(code(&out), 2, "{}", String::from_utf8_lossy(&out.stderr));
    let report: SharpnessReport = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report.class, QualityClass::Discard);
}

#[test]
fn score_missing_file_fails() {
    let out = run(&["score", "/nonexistent/image.png"]);
    assert_eq!(code(&out), 1);
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("error") && err.contains("image.png"), "{err}");
    assert!(out.stdout.is_empty());
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(code(&run(&["score"])), 1);
    assert_eq!(code(&run(&["frobnicate"])), 1);
    assert_eq!(
        code(&run(&["--parallelism", "0", "report", "a.csv", "b.json"])),
        1
    );
    assert_eq!(code(&run(&["--help"])), 0);
}

#[test]
fn score_respects_crop() {
    let dir = TempDir::new().unwrap();
    let img = scene(dir.path(), "sharp.png", &Kernel::delta(15), 3);
    let out = run(&["--crop", "0,0,200,200", "score", s(&img)]);
    assert_eq!(code(&out), 1);
    let out = run(&["--crop", "16,16,96,96", "score", s(&img)]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn deblur_refuses_discard_without_force() {
    let dir = TempDir::new().unwrap();
    let img = scene(dir.path(), "blurry.png", &Kernel::gaussian(15, 4.0), 4);
    let cfg = strict_config(dir.path());
    let out_path = dir.path().join("out.png");
    let out = run(&["--config", s(&cfg), "deblur", s(&img), s(&out_path)]);
    assert_eq!(code(&out), 2);
    assert!(!out_path.exists());
    let report: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["refused"], true);
}

#[test]
fn deblur_sharp_input_with_force_is_near_identity() {
    let dir = TempDir::new().unwrap();
    let img = scene(dir.path(), "sharp.png", &Kernel::delta(15), 5);
    let out_path = dir.path().join("out.png");
    let out = run(&["deblur", s(&img), s(&out_path), "--force"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let before = load_grayscale(&img).unwrap();
    let after = load_grayscale(&out_path).unwrap();
    assert!(after.rmse(&before) <= 0.02, "rmse {}", after.rmse(&before));
}

#[test]
fn deblur_raises_sharpness() {
    let dir = TempDir::new().unwrap();
    let img = scene(dir.path(), "motion.png", &Kernel::motion(15, 7.0, 45.0), 6);
    let out_path = dir.path().join("restored.tif");
    let out = run(&["deblur", s(&img), s(&out_path)]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let report: Value = serde_json::from_slice(&out.stdout).unwrap();
    let before = report["score_before"].as_f64().unwrap();
    let after = report["score_after"].as_f64().unwrap();
    assert!(after > before, "{before} -> {after}");
    assert!(out_path.exists());
}

fn write_manifest(dir: &Path, names: &[&str]) -> PathBuf {
    let entries: Vec<Value> = names
        .iter()
        .enumerate()
        .map(|(i, n)| {
            serde_json::json!({
                "path": n,
                "satellite_id": format!("sat{}", i % 2),
                "product": if i % 3 == 0 { "basic" } else { "ortho" },
                "acquired": format!("2018-05-{:02}", i + 1),
            })
        })
        .collect();
    let path = dir.join("manifest.json");
    std::fs::write(&path, serde_json::json!({ "entries": entries }).to_string()).unwrap();
    path
}

#[test]
fn batch_keeps_manifest_order_and_survives_corrupt_file() {
    let dir = TempDir::new().unwrap();
    scene(dir.path(), "c.png", &Kernel::gaussian(15, 1.0), 7);
    scene(dir.path(), "a.png", &Kernel::delta(15), 8);
    std::fs::write(dir.path().join("broken.png"), b"\x89PNG truncated").unwrap();
    let manifest = write_manifest(dir.path(), &["c.png", "broken.png", "a.png"]);
    let csv_path = dir.path().join("records.csv");
    let out = run(&["--parallelism", "3", "batch", s(&manifest), s(&csv_path)]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let rows = read_rows(std::fs::File::open(&csv_path).unwrap()).unwrap();
    let ids: Vec<_> = rows.iter().map(|r| r.image_id.as_str()).collect();
    assert_eq!(ids, ["c", "broken", "a"]);
    assert_eq!(rows[1].class, RowClass::Error);
    assert!(rows[1].score.is_none());
    assert!(rows[0].score.is_some() && rows[2].score.is_some());
    assert!(rows[2].score > rows[0].score);
}

#[test]
fn batch_output_independent_of_parallelism() {
    let dir = TempDir::new().unwrap();
    let names: Vec<String> = (0..4).map(|i| format!("img{i}.png")).collect();
    for (i, n) in names.iter().enumerate() {
        scene(
            dir.path(),
            n,
            &Kernel::gaussian(15, 0.5 + i as f64 * 0.5),
            20 + i as u64,
        );
    }
    let refs: Vec<&str> = names.iter().map(String::as_str).collect();
    let manifest = write_manifest(dir.path(), &refs);
    let one = dir.path().join("one.csv");
    let eight = dir.path().join("eight.csv");
    assert_eq!(
        code(&run(&[
            "--parallelism",
            "1",
            "batch",
            s(&manifest),
            s(&one)
        ])),
        0
    );
    assert_eq!(
        code(&run(&[
            "--parallelism",
            "8",
            "batch",
            s(&manifest),
            s(&eight)
        ])),
        0
    );
    assert_eq!(std::fs::read(&one).unwrap(), std::fs::read(&eight).unwrap());
}

#[test]
fn batch_with_unreadable_manifest_fails() {
    let dir = TempDir::new().unwrap();
    let bad = dir.path().join("m.json");
    std::fs::write(&bad, "{not json").unwrap();
    assert_eq!(
        code(&run(&["batch", s(&bad), s(&dir.path().join("o.csv"))])),
        1
    );
    assert_eq!(
        code(&run(&[
            "batch",
            "/nonexistent.json",
            s(&dir.path().join("o.csv"))
        ])),
        1
    );
}

fn write_records(path: &Path, groups: &[(&str, usize, f64, f64)]) {
    let mut text = String::from("image_id,satellite_id,product,score,class,acquired\n");
    for &(sat, n, mean, spread) in groups {
        for i in 0..n {
            // evenly spread, zero-mean offsets with standard deviation near `spread`
            let t = (i as f64 + 0.5) / n as f64 - 0.5;
            let score = mean + spread * t * 12f64.sqrt();
            text.push_str(&format!(
                "{sat}-{i},{sat},ortho,{score},deblurrable,2018-03-04\n"
            ));
        }
    }
    text.push_str("lost,s0,ortho,,error,2018-03-04\n");
    std::fs::write(path, text).unwrap();
}

#[test]
fn report_three_satellite_fleet() {
    let dir = TempDir::new().unwrap();
    let csv_path = dir.path().join("records.csv");
    write_records(
        &csv_path,
        &[
            ("s2", 60, 0.032, 0.001),
            ("s0", 60, 0.028, 0.001),
            ("s1", 60, 0.030, 0.001),
        ],
    );
    let json_path = dir.path().join("summary.json");
    let out = run(&["report", s(&csv_path), s(&json_path)]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let summary: Value =
        serde_json::from_str(&std::fs::read_to_string(&json_path).unwrap()).unwrap();
    let ortho = &summary["products"][0];
    assert_eq!(ortho["product"], "ortho");
    let ids: Vec<_> = ortho["per_satellite"]
        .as_array()
        .unwrap()
        .iter()
        .map(|s| s["satellite_id"].as_str().unwrap())
        .collect();
    assert_eq!(ids, ["s0", "s1", "s2"]);
    assert!(ortho["anova"]["p_value"].as_f64().unwrap() < 0.001);
    assert_eq!(ortho["anova"]["df_between"], 2);
    assert_eq!(ortho["anova"]["df_within"], 177);

    let hist = std::fs::read_to_string(dir.path().join("summary_ortho_histogram.csv")).unwrap();
    let mut lines = hist.lines();
    assert_eq!(lines.next(), Some("edge,count"));
    let total: usize = lines
        .map(|l| l.split(',').nth(1).unwrap().parse::<usize>().unwrap())
        .sum();
    assert_eq!(total, 180);
}

#[test]
fn report_single_satellite_has_no_anova() {
    let dir = TempDir::new().unwrap();
    let csv_path = dir.path().join("records.csv");
    write_records(&csv_path, &[("only", 60, 0.03, 0.001)]);
    let json_path = dir.path().join("summary.json");
    let out = run(&["report", s(&csv_path), s(&json_path)]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let summary: Value =
        serde_json::from_str(&std::fs::read_to_string(&json_path).unwrap()).unwrap();
    let ortho = &summary["products"][0];
    assert!(ortho["anova"].is_null());
    assert!(ortho["anova_error"]
        .as_str()
        .unwrap()
        .contains("≥2 groups required"));
    assert!(String::from_utf8_lossy(&out.stderr).contains("≥2 groups required"));
}

#[test]
fn report_small_satellites_fail() {
    let dir = TempDir::new().unwrap();
    let csv_path = dir.path().join("records.csv");
    write_records(
        &csv_path,
        &[("a", 10, 0.03, 0.001), ("b", 10, 0.031, 0.001)],
    );
    let out = run(&["report", s(&csv_path), s(&dir.path().join("summary.json"))]);
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("no satellite passing min_samples"));
}

#[test]
fn report_rejects_malformed_csv() {
    let dir = TempDir::new().unwrap();
    let csv_path = dir.path().join("records.csv");
    std::fs::write(
        &csv_path,
        "image_id,satellite_id,product,score,class,acquired\nx,s,ortho,abc,sharp,2018-01-01\n",
    )
    .unwrap();
    let out = run(&["report", s(&csv_path), s(&dir.path().join("summary.json"))]);
    assert_eq!(code(&out), 1);
}
