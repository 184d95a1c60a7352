use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use hgpf::data::{load_splits, Dataset};
use hgpf::train::{run_hgpf, PhaseLog, TrainConfig};

fn hgpf(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hgpf")).args(args).output().expect("binary runs")
}

fn ok(args: &[&str]) {
    let o = hgpf(args);
    assert!(o.status.success(), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
}

const QUICK: &[&str] = &[
    "--seed", "3", "--epochs", "4", "--pretrain-epochs", "5", "--iterations", "2",
    "--train-per-class", "4", "--val-per-class", "4", "--local-hidden", "16", "--backbone-hidden", "8",
];

fn with(base: &[&str], data: &Path, out: &Path) -> Vec<String> {
    let mut v: Vec<String> = base.iter().map(|s| s.to_string()).collect();
    v.extend(["--dataset".into(), data.display().to_string(), "--out".into(), out.display().to_string()]);
    v.extend(QUICK.iter().map(|s| s.to_string()));
    v
}

/// Removes a flag and its value.
fn drop_flag(mut args: Vec<String>, flag: &str) -> Vec<String> {
    if let Some(i) = args.iter().position(|a| a == flag) {
        args.drain(i..i + 2);
    }
    args
}

fn run_pipeline(data: &Path, out: &Path) {
    for cmd in [&["pretrain"][..], &["posttrain"], &["eval"], &["diagnose"], &["eval", "--eval-target", "backbone"]] {
        let args = with(cmd, data, out);
        ok(&args.iter().map(String::as_str).collect::<Vec<_>>());
    }
}

fn snapshot(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap())
        })
        .collect()
}

#[test]
fn pipeline_reruns_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    let out = tmp.path().join("out");
    ok(&["gen-toy", "--kind", "tiny-acm", "--out", data.to_str().unwrap(), "--seed", "2"]);
    run_pipeline(&data, &out);
    let first = snapshot(&out);
    for f in [
        "backbone.ckpt", "backbone.posttrained.ckpt", "auxiliary.ckpt", "pretrain.log.jsonl",
        "posttrain.log.jsonl", "report.txt", "predictions.tsv", "diagnose.txt", "groups.tsv", "splits.tsv",
    ] {
        assert!(first.contains_key(f), "missing {f}: {:?}", first.keys());
    }
    run_pipeline(&data, &out);
    assert_eq!(snapshot(&out), first);

    // The split commands reproduce the library's end-to-end run.
    let ds = Dataset::load(&data).unwrap();
    let splits = load_splits(&out.join("splits.tsv"), ds.target_ids()).unwrap();
    let cfg = TrainConfig {
        seed: 3, epochs: 4, pretrain_epochs: 5, iterations: 2, local_hidden: 16, backbone_hidden: 8,
        ..TrainConfig::default()
    };
    let run = run_hgpf::<f64>(&ds.graph_inputs(None).unwrap(), &splits, &ds.labels, &cfg).unwrap();
    assert_eq!(String::from_utf8(first["posttrain.log.jsonl"].clone()).unwrap(), run.outcome.log.to_jsonl());
    assert_eq!(String::from_utf8(first["pretrain.log.jsonl"].clone()).unwrap(), run.pretrain_log.to_jsonl());

    let report = String::from_utf8(first["report.txt"].clone()).unwrap();
    assert!(report.contains("model = backbone"), "{report}");
    let diag = String::from_utf8(first["diagnose.txt"].clone()).unwrap();
    assert!(diag.contains("[comparison]") && diag.contains("far\t") && diag.contains("[gates]"), "{diag}");
}

#[test]
fn self_cotraining_keeps_registries_apart() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    let out = tmp.path().join("out");
    ok(&["gen-toy", "--kind", "tiny-dblp", "--out", data.to_str().unwrap()]);
    for cmd in [&["pretrain"][..], &["posttrain", "--variant", "self-cotrain"], &["eval"]] {
        let args = with(cmd, &data, &out);
        ok(&args.iter().map(String::as_str).collect::<Vec<_>>());
    }
    let log = PhaseLog::from_jsonl(&fs::read_to_string(out.join("posttrain.log.jsonl")).unwrap()).unwrap();
    let regs = log.registries();
    assert_eq!(regs.len(), 2);
    for name in regs[0].1 {
        assert!(!regs[1].1.contains(name), "{name} is shared");
    }
    assert!(fs::read_to_string(out.join("report.txt")).unwrap().contains("auxiliary-backbone:self-cotrain"));
}

#[test]
fn config_file_flags_and_echo() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    let out = tmp.path().join("out");
    ok(&["gen-toy", "--kind", "tiny-acm", "--out", data.to_str().unwrap()]);
    let conf = tmp.path().join("run.conf");
    fs::write(&conf, "# quick\nlambda = 0.7\nlayers = 5\nepochs = 2\n").unwrap();
    let args = with(&["pretrain", "--config", conf.to_str().unwrap(), "--layers", "6"], &data, &out);
    let args = drop_flag(args, "--epochs");
    ok(&args.iter().map(String::as_str).collect::<Vec<_>>());
    let echo = fs::read_to_string(out.join("pretrain.config.txt")).unwrap();
    for line in ["lambda = 0.7", "layers = 6", "epochs = 2", "seed = 3", "variant = full", "system-distance = sq-euclidean"] {
        assert!(echo.lines().any(|l| l == line), "missing {line:?} in\n{echo}");
    }
    assert_eq!(echo.lines().count(), hgpf_cli::config::KEYS.len());
}

#[test]
fn exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let missing = tmp.path().join("nowhere");
    let o = hgpf(&["pretrain", "--dataset", missing.to_str().unwrap(), "--out", tmp.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("nowhere"), "{err}");

    let o = hgpf(&["pretrain", "--dataset", "x", "--out", "y", "--lambda", "abc"]);
    assert_eq!(o.status.code(), Some(2));
    let o = hgpf(&["pretrain", "--out", "y"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("--dataset"));
    let conf = tmp.path().join("bad.conf");
    fs::write(&conf, "colour = blue\n").unwrap();
    let o = hgpf(&["pretrain", "--config", conf.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("bad.conf:1"));
    let o = hgpf(&["gen-toy", "--kind", "imdb", "--out", tmp.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn posttrain_rejects_a_non_backbone_checkpoint() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    let out = tmp.path().join("out");
    ok(&["gen-toy", "--kind", "tiny-acm", "--out", data.to_str().unwrap()]);
    for cmd in [&["pretrain"][..], &["posttrain"]] {
        let args = with(cmd, &data, &out);
        ok(&args.iter().map(String::as_str).collect::<Vec<_>>());
    }
    let aux = out.join("auxiliary.ckpt");
    let args = with(&["posttrain", "--checkpoint", aux.to_str().unwrap()], &data, &out);
    let o = hgpf(&args.iter().map(String::as_str).collect::<Vec<_>>());
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("incompatible checkpoint"));
}
