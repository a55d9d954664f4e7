use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_uhreval"));
    for (k, _) in std::env::vars() {
        if k.starts_with("UHREVAL_") {
            cmd.env_remove(k);
        }
    }
    cmd
}

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn ok(args: &[&str]) -> Output {
    let out = run(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn json_stdout(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

/// Rewrites the fixture images and the golden report.
/// Run with `cargo test -p uhreval-cli --test cli -- --ignored`.
#[test]
#[ignore]
fn regenerate_fixtures() {
    use uhreval::{io, synth};
    let dir = fixtures().join("images");
    fs::create_dir_all(&dir).unwrap();
    io::write_png(&dir.join("photo_a.png"), &synth::photo(256, 192, 101)).unwrap();
    io::write_png(&dir.join("photo_b.png"), &synth::photo(160, 224, 202)).unwrap();
    io::write_png(&dir.join("photo_small.png"), &synth::photo(100, 100, 303)).unwrap();
    let blurred = synth::gaussian_blur(&synth::photo(256, 192, 101), 2.5);
    io::write_png(&dir.join("photo_a_blurred.png"), &blurred).unwrap();
    let board = synth::gray_to_rgb(&synth::checkerboard(128, 128, 1, 0, 255));
    io::write_png(&dir.join("checkerboard.png"), &board).unwrap();
    io::write_png(
        &dir.join("flat.png"),
        &uhreval::RgbImage::filled(128, 64, [90, 140, 200]).unwrap(),
    )
    .unwrap();
    ok(&[
        "score",
        "--input",
        p(&dir),
        "--out",
        p(&fixtures().join("golden_report.json")),
    ]);
}

#[test]
fn score_matches_golden_report() {
    let out = ok(&["score", "--input", p(&fixtures().join("images"))]);
    let golden = fs::read(fixtures().join("golden_report.json")).unwrap();
    assert_eq!(
        String::from_utf8(out.stdout).unwrap(),
        String::from_utf8(golden).unwrap()
    );
}

#[test]
fn report_schema() {
    let text = fs::read_to_string(fixtures().join("golden_report.json")).unwrap();
    let v: Value = serde_json::from_str(&text).unwrap();
    let keys: Vec<_> = v.as_object().unwrap().keys().map(String::as_str).collect();
    assert_eq!(keys, ["settings", "per_image", "aggregate"]);
    assert_eq!(v["settings"]["patch_side"], 64);
    assert_eq!(v["settings"]["gray_levels"], 64);
    assert_eq!(v["settings"]["jpeg_quality"], 95);
    assert_eq!(v["settings"]["subsampling"], "4:4:4");
    let entries = v["per_image"].as_array().unwrap();
    assert_eq!(entries.len(), 6);
    for e in entries {
        let keys: Vec<_> = e.as_object().unwrap().keys().map(String::as_str).collect();
        assert_eq!(
            keys,
            [
                "path",
                "glcm_score",
                "compression_ratio",
                "patch_count",
                "width",
                "height"
            ]
        );
    }
    let report = uhreval::report::MetricReport::from_json(&text).unwrap();
    report.validate().unwrap();
    let by_name = |n: &str| report.per_image.iter().find(|e| e.path == n).unwrap();
    assert_eq!(by_name("flat.png").glcm_score, 0.0);
    assert_eq!(by_name("photo_small.png").patch_count, 1);
    assert!(by_name("photo_a.png").glcm_score > by_name("photo_a_blurred.png").glcm_score);
    assert!(by_name("photo_a.png").compression_ratio < by_name("photo_a_blurred.png").compression_ratio);
}

#[test]
fn output_independent_of_thread_count() {
    let images = fixtures().join("images");
    let one = ok(&["--threads", "1", "score", "--input", p(&images)]);
    let four = ok(&["score", "--input", p(&images), "--threads", "4"]);
    assert_eq!(one.stdout, four.stdout);
}

#[test]
fn csv_and_plot_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let (csv, plot, json) = (
        dir.path().join("r.csv"),
        dir.path().join("p.csv"),
        dir.path().join("r.json"),
    );
    ok(&[
        "score",
        "--input",
        p(&fixtures().join("images")),
        "--out",
        p(&json),
        "--csv",
        p(&csv),
        "--plot",
        p(&plot),
    ]);
    let csv = fs::read_to_string(csv).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next(),
        Some("path,glcm_score,compression_ratio,patch_count,width,height")
    );
    assert_eq!(lines.count(), 6);
    assert!(fs::read_to_string(plot)
        .unwrap()
        .starts_with("glcm_score,compression_ratio,path\n"));
}

#[test]
fn holistic_sidecar_is_embedded() {
    let dir = tempfile::tempdir().unwrap();
    let side = dir.path().join("h.json");
    fs::write(&side, r#"{"fid": 21.3, "clipscore": 0.3321234567}"#).unwrap();
    let out = ok(&[
        "score",
        "--input",
        p(&fixtures().join("images")),
        "--holistic",
        p(&side),
    ]);
    let v = json_stdout(&out);
    assert_eq!(v["holistic"]["fid"], 21.3);
    assert_eq!(v["holistic"]["clipscore"], 0.332123);
    assert!(v["holistic"].get("aesthetics").is_none());
}

#[test]
fn manifest_input_matches_directory_input() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = dir.path().join("m.jsonl");
    let images = fixtures().join("images");
    let mut lines = String::new();
    for name in ["photo_b.png", "flat.png"] {
        let full = images.join(name);
        lines.push_str(&format!("{{\"path\":{:?},\"width\":1,\"height\":1}}\n", p(&full)));
    }
    fs::write(&manifest, lines).unwrap();
    let v = json_stdout(&ok(&["score", "--input", p(&manifest)]));
    assert_eq!(v["aggregate"]["count"], 2);
    let golden: Value = serde_json::from_slice(&fs::read(fixtures().join("golden_report.json")).unwrap()).unwrap();
    let flat = golden["per_image"]
        .as_array()
        .unwrap()
        .iter()
        .find(|e| e["path"] == "flat.png")
        .unwrap();
    let got = v["per_image"]
        .as_array()
        .unwrap()
        .iter()
        .find(|e| e["path"].as_str().unwrap().ends_with("flat.png"))
        .unwrap();
    assert_eq!(got["compression_ratio"], flat["compression_ratio"]);
}

#[test]
fn compare_against_itself_is_half() {
    let golden = fixtures().join("golden_report.json");
    let v = json_stdout(&ok(&["compare", "--a", p(&golden), "--b", p(&golden)]));
    assert_eq!(v["count"], 6);
    assert_eq!(v["glcm_score"]["win_rate"], 0.5);
    assert_eq!(v["compression_ratio"]["win_rate"], 0.5);
}

#[test]
fn env_overrides_and_flag_precedence() {
    let images = fixtures().join("images");
    let from_env = bin()
        .env("UHREVAL_JPEG_QUALITY", "50")
        .args(["score", "--input", p(&images)])
        .output()
        .unwrap();
    assert!(from_env.status.success());
    assert_eq!(json_stdout(&from_env)["settings"]["jpeg_quality"], 50);
    let flag_wins = bin()
        .env("UHREVAL_JPEG_QUALITY", "50")
        .args(["score", "--input", p(&images), "--jpeg-quality", "75"])
        .output()
        .unwrap();
    assert_eq!(json_stdout(&flag_wins)["settings"]["jpeg_quality"], 75);
}

#[test]
fn exit_codes() {
    let unknown = run(&["score", "--bogus"]);
    assert_eq!(unknown.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&unknown.stderr).contains("Usage"));
    assert_eq!(run(&[]).status.code(), Some(1));
    assert_eq!(run(&["--help"]).status.code(), Some(0));

    let bad_levels = run(&["score", "--input", p(&fixtures().join("images")), "--gray-levels", "63"]);
    assert_eq!(bad_levels.status.code(), Some(1));

    let missing = run(&["score", "--input", "/nonexistent/dir"]);
    assert_eq!(missing.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&missing.stderr);
    assert_eq!(stderr.lines().count(), 1, "{stderr}");

    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    fs::write(&a, "x\n1\n2\n3\n").unwrap();
    fs::write(&b, "x,y\n1,0\n2,1\n3,3\n").unwrap();
    let fid_fail = run(&["fid", "--features-a", p(&a), "--features-b", p(&b)]);
    assert_eq!(
        fid_fail.status.code(),
        Some(3),
        "{}",
        String::from_utf8_lossy(&fid_fail.stderr)
    );
}

#[test]
fn wavelet_writes_four_bands() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("bands");
    let img = fixtures().join("images/photo_small.png");
    let v = json_stdout(&ok(&["wavelet", "--input", p(&img), "--out-dir", p(&out)]));
    assert_eq!((v["width"].as_u64(), v["height"].as_u64()), (Some(100), Some(100)));
    for band in ["ll", "lh", "hl", "hh"] {
        let decoded = uhreval::io::read_rgb(&out.join(format!("{band}.png"))).unwrap();
        assert_eq!((decoded.width(), decoded.height()), (50, 50));
    }
}

fn write_manifest(path: &Path, dims: &[(u32, u32)]) {
    let text: String = dims
        .iter()
        .enumerate()
        .map(|(i, (w, h))| {
            format!("{{\"path\":\"img/{i:05}.png\",\"width\":{w},\"height\":{h},\"source\":\"test\",\"score\":{i}}}\n")
        })
        .collect();
    fs::write(path, text).unwrap();
}

#[test]
fn curate_filter_and_stats() {
    let dir = tempfile::tempdir().unwrap();
    let m = dir.path().join("m.jsonl");
    write_manifest(&m, &[(5000, 4097), (4096, 6000), (8000, 4500), (100, 200)]);
    let out = dir.path().join("kept.jsonl");
    let run = ok(&[
        "curate",
        "filter",
        "--manifest",
        p(&m),
        "--min-short-side",
        "4096",
        "--out",
        p(&out),
    ]);
    assert!(String::from_utf8_lossy(&run.stderr).contains("kept 2 of 4"));
    let kept = fs::read_to_string(&out).unwrap();
    assert_eq!(kept.lines().count(), 2);
    assert!(kept.contains("\"score\":0") && kept.contains("\"score\":2"));

    let inclusive = ok(&[
        "curate",
        "filter",
        "--manifest",
        p(&m),
        "--min-short-side",
        "4096",
        "--rule",
        "at-least",
    ]);
    assert_eq!(String::from_utf8_lossy(&inclusive.stdout).lines().count(), 3);

    let v = json_stdout(&ok(&[
        "curate",
        "stats",
        "--manifest",
        p(&m),
        "--min-short-side",
        "4096",
    ]));
    assert_eq!(v["count"], 4);
    assert_eq!(v["median_height"], 4097);
    assert_eq!(v["passing"], 2);
    assert_eq!(v["proportion"], 0.5);
}

#[test]
fn curate_caption_and_approve() {
    let dir = tempfile::tempdir().unwrap();
    let m = dir.path().join("m.jsonl");
    write_manifest(&m, &[(10, 10), (20, 20)]);
    let captioned = dir.path().join("c.jsonl");
    ok(&["curate", "caption", "--manifest", p(&m), "--out", p(&captioned)]);
    let text = fs::read_to_string(&captioned).unwrap();
    assert!(text.contains("\"caption\":\"caption:img/00000.png\""));
    assert!(text.contains("\"caption\":\"caption:img/00001.png\""));

    ok(&[
        "curate",
        "approve",
        "--manifest",
        p(&captioned),
        "--path",
        "img/00001.png",
        "--reject",
    ]);
    let text = fs::read_to_string(&captioned).unwrap();
    assert!(text.lines().nth(1).unwrap().contains("\"approved\":false"));
    assert!(!text.lines().next().unwrap().contains("approved"));
    assert_eq!(
        run(&["curate", "approve", "--manifest", p(&captioned), "--path", "nope.png"])
            .status
            .code(),
        Some(1)
    );

    let no_endpoint = run(&["curate", "caption", "--manifest", p(&m), "--backend", "http"]);
    assert_eq!(no_endpoint.status.code(), Some(1));
}

#[test]
fn correlate_joins_by_basename() {
    let dir = tempfile::tempdir().unwrap();
    let ratings = dir.path().join("ratings.csv");
    let golden = fixtures().join("golden_report.json");
    let report = uhreval::report::MetricReport::read(&golden).unwrap();
    let mut csv = String::from("path,rating\n");
    for e in &report.per_image {
        csv.push_str(&format!("elsewhere/{},{}\n", e.path, e.glcm_score * 10.0));
    }
    fs::write(&ratings, csv).unwrap();
    let v = json_stdout(&ok(&["correlate", "--ratings", p(&ratings), "--report", p(&golden)]));
    assert_eq!(v["metric"], "glcm_score");
    assert_eq!(v["n"], 6);
    assert!((v["srcc"].as_f64().unwrap() - 1.0).abs() < 1e-12);
    assert!((v["plcc"].as_f64().unwrap() - 1.0).abs() < 1e-12);

    let v = json_stdout(&ok(&[
        "correlate",
        "--ratings",
        p(&ratings),
        "--report",
        p(&golden),
        "--metric",
        "compression_ratio",
    ]));
    assert!(v["srcc"].as_f64().unwrap() < 0.0);
}

#[test]
fn fid_from_feature_files() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.txt");
    fs::write(&a, "f0,f1\n0,0\n2,0\n0,2\n2,2\n").unwrap();
    // Same covariance, mean shifted by (3, 4).
    fs::write(&b, "2\n4 5\n1 0\n0 1\n").unwrap();
    let v = json_stdout(&ok(&["fid", "--features-a", p(&a), "--features-b", p(&b)]));
    let fid = v["fid"].as_f64().unwrap();
    let cov_a = 4.0 / 3.0;
    let expected = 25.0 + 2.0 * (cov_a + 1.0 - 2.0 * f64::sqrt(cov_a));
    assert!((fid - expected).abs() < 1e-8, "{fid} vs {expected}");
}
