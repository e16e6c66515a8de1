//! End-to-end tests of the binary: the synth → extract → evaluate pipeline,
//! determinism across runs and thread counts, resumability, and exit codes.

use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_hdrfunque"))
}

fn run_ok(args: &[&str], cwd: &Path) -> Output {
    let out = bin().args(args).current_dir(cwd).output().unwrap();
    assert!(
        out.status.success(),
        "command {:?} failed:\n{}",
        args,
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn synth_args(dir: &str) -> Vec<String> {
    [
        "synth",
        "--out-dir",
        dir,
        "--contents",
        "4",
        "--levels",
        "3",
        "--frames",
        "3",
        "--width",
        "64",
        "--height",
        "64",
        "--seed",
        "5",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect()
}

#[test]
fn synth_extract_evaluate_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();
    let args: Vec<String> = synth_args("ds");
    run_ok(&args.iter().map(|s| s.as_str()).collect::<Vec<_>>(), root);
    assert!(root.join("ds/manifest.csv").exists());

    // manifest loadable by extract without edits
    run_ok(
        &[
            "extract",
            "--manifest",
            "ds/manifest.csv",
            "--model",
            "Y-FUNQUE+",
            "--out",
            "features.csv",
            "--raw-width",
            "64",
            "--raw-height",
            "64",
        ],
        root,
    );
    let features = std::fs::read_to_string(root.join("features.csv")).unwrap();
    assert_eq!(features.lines().count(), 1 + 12); // header + 4 contents x 3 levels
    assert!(features.starts_with("video_id,Y-MS-ESSIM,Y-MAD-Ref,Y-DLM-S"));

    // rerun after completion: no recomputation, byte-identical output
    let before = std::fs::read(root.join("features.csv")).unwrap();
    let out = run_ok(
        &[
            "extract",
            "--manifest",
            "ds/manifest.csv",
            "--model",
            "Y-FUNQUE+",
            "--out",
            "features.csv",
            "--raw-width",
            "64",
            "--raw-height",
            "64",
        ],
        root,
    );
    let log = String::from_utf8_lossy(&out.stderr);
    assert!(log.contains("reused cached features"), "{log}");
    assert!(!log.contains(": extracted"), "{log}");
    assert_eq!(before, std::fs::read(root.join("features.csv")).unwrap());

    // interrupted run: drop rows from the CSV, rerun completes only those
    let full = std::fs::read_to_string(root.join("features.csv")).unwrap();
    let truncated: Vec<&str> = full.lines().take(1 + 5).collect();
    std::fs::write(root.join("features.csv"), truncated.join("\n") + "\n").unwrap();
    let out = run_ok(
        &[
            "extract",
            "--manifest",
            "ds/manifest.csv",
            "--model",
            "Y-FUNQUE+",
            "--out",
            "features.csv",
            "--raw-width",
            "64",
            "--raw-height",
            "64",
        ],
        root,
    );
    let log = String::from_utf8_lossy(&out.stderr);
    assert_eq!(log.matches(": extracted").count(), 7, "{log}");
    assert_eq!(log.matches("reused cached features").count(), 5, "{log}");
    assert_eq!(std::fs::read(root.join("features.csv")).unwrap(), before);

    // evaluate twice with the same seed: byte-identical reports
    for rep in ["rep_a", "rep_b"] {
        run_ok(
            &[
                "--seed",
                "7",
                "evaluate",
                "--manifest",
                "ds/manifest.csv",
                "--features",
                "features.csv",
                "--model",
                "Y-FUNQUE+",
                "--splits",
                "100",
                "--out-dir",
                rep,
            ],
            root,
        );
    }
    for file in ["report.json", "summary.csv"] {
        assert_eq!(
            std::fs::read(root.join("rep_a").join(file)).unwrap(),
            std::fs::read(root.join("rep_b").join(file)).unwrap(),
            "{file} differs between same-seed runs"
        );
    }

    // thread count must not change any emitted byte
    for (rep, threads) in [("rep_t1", "1"), ("rep_t4", "4")] {
        run_ok(
            &[
                "--seed",
                "7",
                "--threads",
                threads,
                "evaluate",
                "--manifest",
                "ds/manifest.csv",
                "--features",
                "features.csv",
                "--model",
                "Y-FUNQUE+",
                "--splits",
                "100",
                "--out-dir",
                rep,
            ],
            root,
        );
    }
    assert_eq!(
        std::fs::read(root.join("rep_t1/report.json")).unwrap(),
        std::fs::read(root.join("rep_t4/report.json")).unwrap()
    );

    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(root.join("rep_a/report.json")).unwrap())
            .unwrap();
    assert_eq!(report["n_splits"], 100);
    assert_eq!(report["seed"], 7);
    assert_eq!(report["splits"].as_array().unwrap().len(), 100);
}

#[test]
fn synth_is_deterministic_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();
    for name in ["a", "b"] {
        let args = synth_args(name);
        run_ok(&args.iter().map(|s| s.as_str()).collect::<Vec<_>>(), root);
    }
    assert_eq!(
        std::fs::read(root.join("a/manifest.csv")).unwrap(),
        std::fs::read(root.join("b/manifest.csv")).unwrap()
    );
    assert_eq!(
        std::fs::read(root.join("a/dist/c01_d2.yuv")).unwrap(),
        std::fs::read(root.join("b/dist/c01_d2.yuv")).unwrap()
    );
    // levels=1 would mean every test equals its reference; level 0 here
    assert_eq!(
        std::fs::read(root.join("a/refs/content_02.yuv")).unwrap(),
        std::fs::read(root.join("a/dist/c02_d0.yuv")).unwrap()
    );
}

#[test]
fn train_then_score_with_predictions() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();
    let args = synth_args("ds");
    run_ok(&args.iter().map(|s| s.as_str()).collect::<Vec<_>>(), root);
    run_ok(
        &[
            "extract",
            "--manifest",
            "ds/manifest.csv",
            "--model",
            "Y-FUNQUE+",
            "--out",
            "features.csv",
            "--raw-width",
            "64",
            "--raw-height",
            "64",
        ],
        root,
    );
    run_ok(
        &[
            "train",
            "--manifest",
            "ds/manifest.csv",
            "--features",
            "features.csv",
            "--model",
            "Y-FUNQUE+",
            "--condition",
            "dark",
            "--lambda",
            "0.01",
            "--out",
            "model.json",
        ],
        root,
    );
    let out = run_ok(
        &[
            "score",
            "--reference",
            "ds/refs/content_00.yuv",
            "--test",
            "ds/dist/c00_d2.yuv",
            "--model-file",
            "model.json",
            "--raw-width",
            "64",
            "--raw-height",
            "64",
            "--output",
            "frames.jsonl",
        ],
        root,
    );
    let summary: serde_json::Value =
        serde_json::from_slice(&out.stdout).expect("summary is one JSON line");
    assert_eq!(summary["video_id"], "c00_d2");
    assert_eq!(summary["frames"], 3);
    assert!(summary["predicted_mos"].is_f64());
    assert!(summary["mean_features"]["Y-MS-ESSIM"].as_f64().unwrap() < 1.0);

    let jsonl = std::fs::read_to_string(root.join("frames.jsonl")).unwrap();
    assert_eq!(jsonl.lines().count(), 3);
    let first: serde_json::Value = serde_json::from_str(jsonl.lines().next().unwrap()).unwrap();
    assert_eq!(first["frame_index"], 0);
    assert_eq!(first["features"].as_object().unwrap().len(), 3);
}

#[test]
fn score_identity_static_pair() {
    // ref == test on a static clip: similarity 1, temporal activity 0.
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();
    let frame: Vec<u8> = {
        // one gray 10-bit 4:2:0 frame, 16x16
        let mut data = b"YUV4MPEG2 W16 H16 F30:1 C420p10\n".to_vec();
        for _ in 0..2 {
            data.extend_from_slice(b"FRAME\n");
            for _ in 0..(16 * 16 + 2 * 8 * 8) {
                data.extend_from_slice(&512u16.to_le_bytes());
            }
        }
        data
    };
    std::fs::write(root.join("clip.y4m"), &frame).unwrap();
    let out = run_ok(
        &[
            "score",
            "--reference",
            "clip.y4m",
            "--test",
            "clip.y4m",
            "--model",
            "Y-FUNQUE+",
            "--output",
            "rows.jsonl",
        ],
        root,
    );
    let summary: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(summary["mean_features"]["Y-MS-ESSIM"], 1.0);
    assert_eq!(summary["mean_features"]["Y-DLM-S"], 1.0);
    assert_eq!(summary["mean_features"]["Y-MAD-Ref"], 0.0);
}

#[test]
fn hdrmax_models_emit_expected_column_counts() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();
    let args: Vec<String> = [
        "synth",
        "--out-dir",
        "ds",
        "--contents",
        "2",
        "--levels",
        "2",
        "--frames",
        "2",
        "--width",
        "64",
        "--height",
        "64",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    run_ok(&args.iter().map(|s| s.as_str()).collect::<Vec<_>>(), root);
    run_ok(
        &[
            "extract",
            "--manifest",
            "ds/manifest.csv",
            "--model",
            "3C-FUNQUE+",
            "--hdrmax2",
            "--out",
            "f17.csv",
            "--raw-width",
            "64",
            "--raw-height",
            "64",
        ],
        root,
    );
    let header = std::fs::read_to_string(root.join("f17.csv"))
        .unwrap()
        .lines()
        .next()
        .unwrap()
        .to_string();
    assert_eq!(header.split(',').count(), 1 + 17);
}

#[test]
fn exit_codes_and_machine_errors() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();

    // nonexistent input: exit 2, no partial output file
    let out = bin()
        .args([
            "score",
            "--reference",
            "missing.y4m",
            "--test",
            "missing.y4m",
            "--output",
            "should_not_exist.jsonl",
        ])
        .current_dir(root)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.starts_with("error[input]:"), "{err}");
    assert!(!root.join("should_not_exist.jsonl").exists());

    // unknown model: exit 2
    let args = synth_args("ds");
    run_ok(&args.iter().map(|s| s.as_str()).collect::<Vec<_>>(), root);
    let out = bin()
        .args([
            "score",
            "--reference",
            "ds/refs/content_00.yuv",
            "--test",
            "ds/dist/c00_d0.yuv",
            "--model",
            "NOPE",
            "--raw-width",
            "64",
            "--raw-height",
            "64",
        ])
        .current_dir(root)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));

    // mismatched video dimensions: exit 2
    let mut tiny = b"YUV4MPEG2 W16 H16 F30:1 C420p10\nFRAME\n".to_vec();
    for _ in 0..(16 * 16 + 2 * 8 * 8) {
        tiny.extend_from_slice(&0u16.to_le_bytes());
    }
    std::fs::write(root.join("tiny.y4m"), &tiny).unwrap();
    let out = bin()
        .args([
            "score",
            "--reference",
            "ds/refs/content_00.yuv",
            "--test",
            "tiny.y4m",
            "--raw-width",
            "64",
            "--raw-height",
            "64",
        ])
        .current_dir(root)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("dimensions differ"));

    // missing MOS column names the column
    std::fs::write(
        root.join("broken.csv"),
        "video_id,content_id,content_group,ref_path,test_path,mos_dark\nv,c,g,r,t,50\n",
    )
    .unwrap();
    let out = bin()
        .args([
            "evaluate",
            "--manifest",
            "broken.csv",
            "--features",
            "nope.csv",
            "--out-dir",
            "rep",
        ])
        .current_dir(root)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("mos_bright"));

    // constant MOS makes every correlation undefined: numeric failure, exit 3
    let mut constant =
        String::from("video_id,content_id,content_group,ref_path,test_path,mos_dark,mos_bright\n");
    let mut feats = String::from("video_id,Y-MS-ESSIM,Y-MAD-Ref,Y-DLM-S\n");
    for g in 0..6 {
        for v in 0..2 {
            constant.push_str(&format!("v{g}_{v},c{g},grp{g},r,t,50,50\n"));
            feats.push_str(&format!("v{g}_{v},0.{g}{v},0.0{v},0.{v}{g}\n"));
        }
    }
    std::fs::write(root.join("const_mos.csv"), constant).unwrap();
    std::fs::write(root.join("const_feats.csv"), feats).unwrap();
    let out = bin()
        .args([
            "evaluate",
            "--manifest",
            "const_mos.csv",
            "--features",
            "const_feats.csv",
            "--model",
            "Y-FUNQUE+",
            "--splits",
            "5",
            "--out-dir",
            "rep3",
        ])
        .current_dir(root)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(
        err.lines().any(|l| l.starts_with("error[numeric]:")),
        "{err}"
    );
}

#[test]
fn plot_nonlinearities_curves() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();
    run_ok(&["plot-nonlinearities", "--out-dir", "plots"], root);
    let csv = std::fs::read_to_string(root.join("plots/hdrmax_curves.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "x,hdrmax1,hdrmax2_pos,hdrmax2_neg");
    assert_eq!(lines.len(), 1 + 1001);
    assert_eq!(lines[1 + 500], "0,0,1,1");

    // hdrmax1 column odd-symmetric about the middle row
    let parse =
        |line: &str| -> Vec<f64> { line.split(',').map(|v| v.parse::<f64>().unwrap()).collect() };
    for i in 1..=1000 {
        let lo = parse(lines[i]);
        let hi = parse(lines[1 + 1001 - i]);
        assert_eq!(lo[1], -hi[1], "row {i}");
    }
    // hdrmax2_neg strictly decreasing
    let mut prev = f64::INFINITY;
    for line in &lines[1..] {
        let row = parse(line);
        assert!(row[3] < prev);
        prev = row[3];
    }

    assert!(root.join("plots/csf_weights.csv").exists());

    // unwritable destination: exit 2
    let out = bin()
        .args(["plot-nonlinearities", "--out-dir", "/proc/nope"])
        .current_dir(root)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn config_file_supplies_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();
    std::fs::write(root.join("conf.toml"), "seed = 9\n").unwrap();
    let args = synth_args("by_flag");
    run_ok(&args.iter().map(|s| s.as_str()).collect::<Vec<_>>(), root);

    // same seed through the config file instead of the flag
    let mut args: Vec<String> = synth_args("by_conf");
    args.retain(|a| a != "--seed" && a != "5");
    let mut full = vec!["--config".to_string(), "conf.toml".to_string()];
    full.extend(args);
    std::fs::write(root.join("conf.toml"), "seed = 5\n").unwrap();
    run_ok(&full.iter().map(|s| s.as_str()).collect::<Vec<_>>(), root);

    assert_eq!(
        std::fs::read(root.join("by_flag/manifest.csv")).unwrap(),
        std::fs::read(root.join("by_conf/manifest.csv")).unwrap()
    );
}

#[test]
fn extract_reports_row_failures_but_keeps_successes() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();
    let args = synth_args("ds");
    run_ok(&args.iter().map(|s| s.as_str()).collect::<Vec<_>>(), root);

    // Point one row at a missing file.
    let manifest = std::fs::read_to_string(root.join("ds/manifest.csv")).unwrap();
    let broken = manifest.replace("dist/c01_d1.yuv", "dist/gone.yuv");
    std::fs::write(root.join("ds/manifest.csv"), broken).unwrap();

    let out = bin()
        .args([
            "extract",
            "--manifest",
            "ds/manifest.csv",
            "--model",
            "Y-FUNQUE+",
            "--out",
            "features.csv",
            "--raw-width",
            "64",
            "--raw-height",
            "64",
        ])
        .current_dir(root)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("error[row]: video_id=c01_d1"), "{err}");
    assert!(err.contains("1 of 12 videos failed"), "{err}");

    // Successful rows were still written; the rerun reuses them.
    let csv = std::fs::read_to_string(root.join("features.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 11);
    let out = bin()
        .args([
            "extract",
            "--manifest",
            "ds/manifest.csv",
            "--model",
            "Y-FUNQUE+",
            "--out",
            "features.csv",
            "--raw-width",
            "64",
            "--raw-height",
            "64",
        ])
        .current_dir(root)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let log = String::from_utf8_lossy(&out.stderr);
    assert_eq!(log.matches("reused cached features").count(), 11, "{log}");
}
