use std::path::Path;
use std::process::{Command, Output};

use nrdk_cli::commands::Table1;
use nrdk_cli::report::EvalReport;
use nrdk_cli::{field, EXIT_CONFIG, EXIT_IO};
use nrdk_core::dataset::Dataset;
use nrdk_core::invariants::InvariantKind;
use nrdk_core::losses::Align;
use tempfile::TempDir;

fn nrdk(cwd: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nrdk"))
        .current_dir(cwd)
        .env_remove("NRDK_THREADS")
        .args(args)
        .output()
        .unwrap()
}

fn ok(cwd: &Path, args: &[&str]) -> Output {
    let out = nrdk(cwd, args);
    assert!(out.status.success(), "nrdk {args:?}: {}", String::from_utf8_lossy(&out.stderr));
    out
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

/// Generates `count` clips into `dir/data`.
fn dataset(count: usize) -> TempDir {
    let dir = tempfile::tempdir().unwrap();
    ok(dir.path(), &["generate", "--count", &count.to_string(), "--seed", "3", "--procedural", "--out", "data"]);
    dir
}

#[test]
fn generate_is_bit_identical() {
    let dir = tempfile::tempdir().unwrap();
    for out in ["a", "b"] {
        ok(dir.path(), &["generate", "--count", "3", "--seed", "42", "--out", out]);
    }
    for f in ["clips.nrsd", "clips.manifest.json"] {
        let a = std::fs::read(dir.path().join("a").join(f)).unwrap();
        let b = std::fs::read(dir.path().join("b").join(f)).unwrap();
        assert_eq!(a, b, "{f}");
    }
}

#[test]
fn different_seeds_differ() {
    let dir = tempfile::tempdir().unwrap();
    ok(dir.path(), &["generate", "--count", "1", "--seed", "1", "--out", "a"]);
    ok(dir.path(), &["generate", "--count", "1", "--seed", "2", "--out", "b"]);
    let read = |d: &str| std::fs::read(dir.path().join(d).join("clips.nrsd")).unwrap();
    assert_ne!(read("a"), read("b"));
}

#[test]
fn count_zero_is_an_empty_dataset() {
    let dir = tempfile::tempdir().unwrap();
    ok(dir.path(), &["generate", "--count", "0", "--out", "empty"]);
    let ds = Dataset::load(&dir.path().join("empty")).unwrap();
    assert_eq!(ds.len(), 0);
    assert_eq!(ds.manifest.count, 0);
    assert!(dir.path().join("empty/clips.manifest.json").exists());
}

#[test]
fn inverted_range_is_a_config_error_naming_the_key() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("bad.json"), r#"{"deformation": {"kappa": [3.0, 1.0]}}"#).unwrap();
    let out = nrdk(dir.path(), &["generate", "--config", "bad.json", "--count", "1", "--out", "x"]);
    assert_eq!(out.status.code(), Some(EXIT_CONFIG));
    assert!(stderr(&out).contains("deformation.kappa"), "{}", stderr(&out));
    assert!(!dir.path().join("x").exists());
}

#[test]
fn usage_errors_exit_with_config_code() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(nrdk(dir.path(), &["generate", "--out", "x"]).status.code(), Some(EXIT_CONFIG));
    assert_eq!(nrdk(dir.path(), &["frobnicate"]).status.code(), Some(EXIT_CONFIG));
    let out = nrdk(dir.path(), &["--threads", "0", "generate", "--count", "1", "--out", "x"]);
    assert_eq!(out.status.code(), Some(EXIT_CONFIG));
    assert!(stderr(&out).contains("threads"));
    assert!(nrdk(dir.path(), &["--help"]).status.success());
}

#[test]
fn threads_fall_back_to_the_environment() {
    let dir = tempfile::tempdir().unwrap();
    let run = |v: &str| {
        Command::new(env!("CARGO_BIN_EXE_nrdk"))
            .current_dir(dir.path())
            .env("NRDK_THREADS", v)
            .args(["generate", "--count", "1", "--out", "x"])
            .output()
            .unwrap()
    };
    assert_eq!(run("0").status.code(), Some(EXIT_CONFIG));
    assert!(run("1").status.success());
}

#[test]
fn missing_inputs_exit_with_io_code() {
    let dir = tempfile::tempdir().unwrap();
    let cases: [&[&str]; 4] = [
        &["evaluate", "--pred", "nope", "--truth", "nope"],
        &["invariants", "--in", "nope", "--out", "f.bin"],
        &["preview", "--in", "nope", "--out", "p"],
        &["train", "--data", "nope", "--tiny", "--out", "t"],
    ];
    for args in cases {
        let out = nrdk(dir.path(), args);
        assert_eq!(out.status.code(), Some(EXIT_IO), "{args:?}: {}", stderr(&out));
    }
}

#[test]
fn corrupt_container_exits_with_io_code() {
    let dir = dataset(1);
    let clips = dir.path().join("data/clips.nrsd");
    let bytes = std::fs::read(&clips).unwrap();
    std::fs::write(&clips, &bytes[..bytes.len() / 2]).unwrap();
    let out = nrdk(dir.path(), &["preview", "--in", "data", "--out", "p"]);
    assert_eq!(out.status.code(), Some(EXIT_IO), "{}", stderr(&out));
}

#[test]
fn evaluate_truth_against_itself_scores_zero() {
    let dir = dataset(2);
    ok(dir.path(), &["evaluate", "--pred", "data", "--truth", "data", "--json", "eval.json"]);
    let r = EvalReport::load(&dir.path().join("eval.json")).unwrap();
    assert_eq!(r.clips.len(), 2);
    assert!(r.mae_sn.mean.abs() <= 1e-9, "{}", r.mae_sn.mean);
    let baseline = r.baseline.unwrap();
    assert!(baseline.mean > 0.1);

    let out = ok(dir.path(), &["evaluate", "--pred", "data", "--truth", "data", "--align", "first", "--group", "trsc"]);
    let printed: EvalReport = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(printed.align, Align::First);
    assert!(printed.mae_sn.mean.abs() <= 1e-9);
}

#[test]
fn invariants_writes_one_field_per_clip() {
    let dir = dataset(2);
    for (kind, channels) in [("gbr", 3), ("trsc", 6)] {
        let out = format!("{kind}.bin");
        ok(dir.path(), &["invariants", "--in", "data", "--kind", kind, "--out", &out]);
        let (k, fields) = field::load(&dir.path().join(&out)).unwrap();
        assert_eq!(k, if kind == "gbr" { InvariantKind::Gbr } else { InvariantKind::TrSc });
        assert_eq!(fields.len(), 2);
        for f in &fields {
            assert_eq!((f.width, f.height, f.frames, f.channels), (64, 64, 16, channels));
        }
    }
}

#[test]
fn preview_writes_pngs_and_metadata() {
    let dir = dataset(2);
    ok(dir.path(), &["preview", "--in", "data", "--out", "p", "--clip", "1", "--what", "depth"]);
    let pngs: Vec<_> = std::fs::read_dir(dir.path().join("p"))
        .unwrap()
        .filter_map(|e| e.ok())
        .filter(|e| e.path().extension().is_some_and(|x| x == "png"))
        .collect();
    assert_eq!(pngs.len(), 16);
    let meta: serde_json::Value = serde_json::from_slice(&std::fs::read(dir.path().join("p/preview.json")).unwrap()).unwrap();
    assert_eq!(meta["images"].as_array().unwrap().len(), 16);
    assert!(meta["images"].as_array().unwrap().iter().all(|e| e["clip"] == 1));

    let out = nrdk(dir.path(), &["preview", "--in", "data", "--out", "q", "--clip", "5"]);
    assert_eq!(out.status.code(), Some(EXIT_CONFIG));
}

#[test]
fn train_reconstruct_evaluate_round_trip() {
    let dir = dataset(10);
    ok(dir.path(), &["train", "--data", "data", "--tiny", "--epochs", "1", "--loss", "trsc", "--out", "run"]);
    for f in ["best.nrck", "last.nrck", "train_log.jsonl", "split.json", "run.json"] {
        assert!(dir.path().join("run").join(f).exists(), "{f}");
    }
    ok(dir.path(), &["reconstruct", "--in", "data", "--ckpt", "run/best.nrck", "--out", "rec", "--png-preview", "rp"]);
    let rec = Dataset::load(&dir.path().join("rec")).unwrap();
    assert_eq!(rec.len(), 10);
    // 64 px inputs come back at the 32 px working resolution
    assert_eq!(rec.clips[0].depth.dims(), (32, 32, 16, 1));
    assert!(dir.path().join("rp/preview.json").exists());

    ok(dir.path(), &["evaluate", "--pred", "rec", "--truth", "data", "--json", "eval.json"]);
    let r = EvalReport::load(&dir.path().join("eval.json")).unwrap();
    assert!(r.mae_sn.mean.is_finite() && r.mae_sn.mean > 0.0);
}

#[test]
fn reconstruct_reads_a_directory_of_frames() {
    let dir = tempfile::tempdir().unwrap();
    let frames = dir.path().join("frames");
    std::fs::create_dir(&frames).unwrap();
    for t in 0..16u32 {
        let img = image::GrayImage::from_fn(64, 64, |x, y| image::Luma([((x * 3 + y * 2 + t * 5) % 256) as u8]));
        img.save(frames.join(format!("f{t:02}.png"))).unwrap();
    }
    let data = dataset(4);
    ok(data.path(), &["train", "--data", "data", "--tiny", "--epochs", "1", "--out", "run"]);
    let ckpt = data.path().join("run/best.nrck");
    ok(dir.path(), &["reconstruct", "--in", "frames", "--ckpt", ckpt.to_str().unwrap(), "--out", "rec"]);
    let rec = Dataset::load(&dir.path().join("rec")).unwrap();
    assert_eq!(rec.len(), 1);
    assert_eq!(rec.clips[0].depth.dims(), (32, 32, 16, 1));
}

#[test]
fn experiment1_oracle_scores_zero() {
    let dir = dataset(20);
    let out = ok(dir.path(), &["experiment1", "--data", "data", "--tiny", "--oracle", "--out", "exp1"]);
    let table: Table1 = serde_json::from_slice(&std::fs::read(dir.path().join("exp1/table.json")).unwrap()).unwrap();
    assert!(table.oracle);
    assert_eq!(table.rows.len(), 2);
    assert_eq!(table.cells.len(), 2);
    for row in &table.cells {
        assert_eq!(row.len(), 2);
        for c in row {
            assert!(c.mean.abs() <= 1e-9 && c.std.abs() <= 1e-9, "{c:?}");
        }
    }
    assert!(table.baseline.mean > 0.1);
    assert!(table.runs.is_empty());
    let csv = std::fs::read_to_string(dir.path().join("exp1/table.csv")).unwrap();
    assert_eq!(csv.lines().count(), 4);
    assert!(String::from_utf8_lossy(&out.stdout).contains("per-frame"));
}

#[test]
fn experiment1_needs_a_test_split() {
    let dir = dataset(0);
    let out = nrdk(dir.path(), &["experiment1", "--data", "data", "--tiny", "--oracle", "--out", "exp1"]);
    assert_eq!(out.status.code(), Some(EXIT_CONFIG), "{}", stderr(&out));
}
