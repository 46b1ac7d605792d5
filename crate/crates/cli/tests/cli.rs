use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tfmd_core::datagen::read_dataset;

const DESK: &str = "\
dataset.n_classes=4
dataset.n_samples=160
dataset.cir=4
dataset.n_drugs=8
dataset.embed_dims=4,4,4,4
model.hidden_dim=6
model.classifier_dims=8,8,8
optim.epochs=3
optim.batch_size=32
";

fn tfmd(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tfmd"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn write_config(dir: &Path) -> String {
    let path = dir.join("run.cfg");
    fs::write(&path, DESK).unwrap();
    path.display().to_string()
}

#[test]
fn gen_tiny_spec() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("tiny.tsv");
    let out = tfmd(&[
        "gen", "--classes", "3", "--samples", "70", "--cir", "4", "--dims", "2,2,2,2", "--out",
        file.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{out:?}");
    assert!(stdout(&out).contains("records=70"));
    let data = read_dataset(&file).unwrap();
    assert_eq!(data.class_stats().unwrap().counts(), &[40, 20, 10]);
}

#[test]
fn gen_preset_record_count() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("db110.tsv");
    let out = tfmd(&["gen", "--preset", "DDI-DB110", "--dims", "1,1,1,1", "--out", file.to_str().unwrap()]);
    assert!(out.status.success(), "{out:?}");
    let text = stdout(&out);
    assert!(text.contains("records=198631"), "{text}");
    assert!(text.contains("classes=110"), "{text}");
    let data = read_dataset(&file).unwrap();
    assert_eq!(data.len(), 198_631);
    assert_eq!(data.n_classes, 110);
}

#[test]
fn gen_rejects_bad_cir() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("x.tsv");
    let out = tfmd(&["gen", "--cir", "0", "--out", file.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&out.stderr).contains("dataset spec error"));
    assert!(!file.exists());
}

#[test]
fn analyze_prints_crossovers() {
    let dir = tempfile::tempdir().unwrap();
    let out = tfmd(&["analyze", "--loss", "fl", "--gamma", "2"]);
    assert!(out.status.success());
    assert!(stdout(&out).contains("crossover_p=0.60653"));
    let out = tfmd(&[
        "analyze", "--loss", "tfl", "--gamma", "2", "--beta", "1", "--out", dir.path().to_str().unwrap(),
    ]);
    assert!(stdout(&out).contains("crossover_p=1.00000"));
    for name in ["curve_ce.csv", "curve_fl_g2.csv", "curve_tfl_g2_b1.csv"] {
        let text = fs::read_to_string(dir.path().join(name)).unwrap();
        assert!(text.starts_with("p,loss,grad\n"), "{name}");
        assert_eq!(text.lines().count(), 513);
    }
    assert_eq!(tfmd(&["analyze", "--loss", "ce"]).status.code(), Some(4));
}

#[test]
fn train_twice_gives_identical_reports() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path());
    let run = |name: &str| {
        let out_dir = dir.path().join(name);
        let out = tfmd(&[
            "train", "--config", &cfg, "--seed", "3", "--loss", "tfl", "--beta", "2", "--ts", "0.9", "--out",
            out_dir.to_str().unwrap(),
        ]);
        assert!(out.status.success(), "{out:?}");
        (stdout(&out), out_dir)
    };
    let (a, dir_a) = run("a");
    let (b, dir_b) = run("b");
    assert_eq!(a, b);
    assert!(a.contains("macro_f1="));
    let strip = |p: &Path| {
        let text = fs::read_to_string(p.join("metrics.txt")).unwrap();
        text.lines().skip(1).collect::<Vec<_>>().join("\n")
    };
    assert_eq!(strip(&dir_a), strip(&dir_b));
    for name in ["per_class.csv", "trace.csv", "config.txt", "model.ckpt"] {
        assert_eq!(
            fs::read(dir_a.join(name)).unwrap(),
            fs::read(dir_b.join(name)).unwrap(),
            "{name}"
        );
    }
    let header = fs::read_to_string(dir_a.join("per_class.csv")).unwrap();
    assert!(header.starts_with("class,support,precision,recall,f1,auc,aupr\n"));

    // rerunning from the written effective config reproduces the report
    let out = tfmd(&["train", "--config", dir_a.join("config.txt").to_str().unwrap()]);
    assert_eq!(stdout(&out), a);
}

#[test]
fn compare_ablate_sweep_tables() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path());
    let out = tfmd(&["compare-losses", "--config", &cfg, "--set", "optim.epochs=1"]);
    assert!(out.status.success(), "{out:?}");
    let text = stdout(&out);
    let rows: Vec<&str> = text.lines().skip(1).map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(rows, ["ce", "wce", "fl", "cb", "bs", "ldam", "tfl"]);

    let out = tfmd(&["ablate", "--config", &cfg, "--variants", "G,GS,TFL-GSTE", "--set", "optim.epochs=1"]);
    assert!(out.status.success(), "{out:?}");
    assert_eq!(stdout(&out).lines().count(), 4);

    let sweep_dir = dir.path().join("sweep");
    let out = tfmd(&[
        "sweep", "--config", &cfg, "--param", "ts", "--grid", "0,0.5,0.9,1", "--repeats", "2", "--set",
        "optim.epochs=1", "--out", sweep_dir.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{out:?}");
    assert_eq!(stdout(&out).lines().count(), 5);
    assert!(sweep_dir.join("sweep.csv").exists());
}

#[test]
fn error_classes_have_distinct_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path());

    // usage
    assert_eq!(tfmd(&["ablate", "--variants", "GX"]).status.code(), Some(2));
    assert_eq!(tfmd(&["train", "--loss", "hinge"]).status.code(), Some(2));
    // config
    assert_eq!(tfmd(&["train", "--config", &cfg, "--set", "bogus=1"]).status.code(), Some(3));
    // parameter
    assert_eq!(tfmd(&["train", "--config", &cfg, "--ts", "2"]).status.code(), Some(4));
    // io
    let missing = dir.path().join("missing.tsv");
    assert_eq!(
        tfmd(&["train", "--data", missing.to_str().unwrap()]).status.code(),
        Some(5)
    );
    // parse
    let bad = dir.path().join("bad.tsv");
    fs::write(&bad, "tfmd-dataset v1 classes=2 g=1 s=1 t=1 e=1\nnot a record\n").unwrap();
    let out = tfmd(&["train", "--data", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(6));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 2"));
}
