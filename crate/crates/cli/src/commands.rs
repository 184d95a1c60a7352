use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use hgpf::data::dataset::Dataset;
use hgpf::data::synth;
use hgpf::data::{load_splits, make_splits, save_splits, Checkpoint, SplitSet};
use hgpf::eval::{gate_report, hard_node_groups, prediction_lines, EvalReport, HardNodeGroups};
use hgpf::global::PropagationSeed;
use hgpf::hin::union_graph;
use hgpf::train::{new_backbone, post_train, pretrain, Auxiliary, PhaseLog, Supervision, TrainConfig, Variant};
use hgpf::{Error, GraphInputs, LabelMatrix, Result};

use crate::config::{EvalTarget, RunConfig};

pub const BACKBONE_CKPT: &str = "backbone.ckpt";
pub const POSTTRAINED_CKPT: &str = "backbone.posttrained.ckpt";
pub const AUXILIARY_CKPT: &str = "auxiliary.ckpt";
pub const SPLITS_FILE: &str = "splits.tsv";

fn write(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::Io { path: path.to_path_buf(), source: e })
}

fn out_dir(cfg: &RunConfig) -> Result<&Path> {
    let out = cfg.out()?;
    fs::create_dir_all(out).map_err(|e| Error::Io { path: out.to_path_buf(), source: e })?;
    Ok(out)
}

fn echo_config(cfg: &RunConfig, command: &str) -> Result<()> {
    write(&cfg.out()?.join(format!("{command}.config.txt")), cfg.to_text())
}

struct Loaded {
    dataset: Dataset,
    inputs: GraphInputs,
    splits: SplitSet,
}

/// Dataset, inputs and splits: `--splits`, else `<out>/splits.tsv` when
/// present, else sampled from the seed.
fn load(cfg: &RunConfig, metapaths: Option<&[String]>) -> Result<Loaded> {
    let dataset = Dataset::load(cfg.dataset()?)?;
    let inputs = dataset.graph_inputs(metapaths.or(cfg.metapath_filter()))?;
    let existing = cfg.out.as_ref().map(|o| o.join(SPLITS_FILE)).filter(|p| p.exists());
    let splits = match cfg.splits.clone().or(existing) {
        Some(path) => load_splits(&path, dataset.target_ids())?,
        None => make_splits(
            &dataset.labels,
            dataset.manifest.classes,
            cfg.train_per_class,
            cfg.val_per_class,
            cfg.train.seed,
        )?,
    };
    Ok(Loaded { dataset, inputs, splits })
}

fn metapath_meta(inputs: &GraphInputs) -> String {
    inputs.metapaths.iter().map(|m| m.name().to_string()).collect::<Vec<_>>().join(",")
}

fn backbone_meta(t: &TrainConfig, inputs: &GraphInputs) -> BTreeMap<String, String> {
    BTreeMap::from([
        ("component".to_string(), "backbone".to_string()),
        ("backbone-hidden".to_string(), t.backbone_hidden.to_string()),
        ("metapaths".to_string(), metapath_meta(inputs)),
    ])
}

fn auxiliary_meta(t: &TrainConfig, inputs: &GraphInputs) -> BTreeMap<String, String> {
    BTreeMap::from([
        ("component".to_string(), "auxiliary".to_string()),
        ("variant".to_string(), t.variant.name().to_string()),
        ("layers".to_string(), t.layers.to_string()),
        ("local-hidden".to_string(), t.local_hidden.to_string()),
        ("backbone-hidden".to_string(), t.backbone_hidden.to_string()),
        ("metapaths".to_string(), metapath_meta(inputs)),
    ])
}

/// Architecture settings recorded in a checkpoint override the run config.
fn train_config_from_meta(base: &TrainConfig, meta: &BTreeMap<String, String>, path: &Path) -> Result<TrainConfig> {
    let mut rc = RunConfig { train: base.clone(), ..RunConfig::default() };
    for key in ["variant", "layers", "local-hidden", "backbone-hidden"] {
        if let Some(v) = meta.get(key) {
            rc.set(key, v).map_err(|e| Error::Checkpoint { path: path.to_path_buf(), msg: e.to_string() })?;
        }
    }
    Ok(rc.train)
}

fn checkpoint_metapaths(meta: &BTreeMap<String, String>) -> Option<Vec<String>> {
    meta.get("metapaths").map(|s| s.split(',').filter(|x| !x.is_empty()).map(String::from).collect())
}

pub fn cmd_pretrain(cfg: &RunConfig) -> Result<()> {
    let out = out_dir(cfg)?;
    let ld = load(cfg, None)?;
    echo_config(cfg, "pretrain")?;
    let sup = Supervision::new(&ld.splits, &ld.dataset.labels)?;
    let mut backbone = new_backbone(&ld.inputs, &cfg.train);
    let mut log = PhaseLog::default();
    pretrain(&mut backbone, &ld.inputs, &sup, &cfg.train, &mut log)?;
    save_splits(&out.join(SPLITS_FILE), &ld.splits, ld.dataset.target_ids())?;
    write(&out.join("node_index.tsv"), node_index(&ld.dataset))?;
    Checkpoint::from_store(&backbone.params, backbone_meta(&cfg.train, &ld.inputs)).save(&out.join(BACKBONE_CKPT))?;
    write(&out.join("pretrain.log.jsonl"), log.to_jsonl())
}

fn node_index(ds: &Dataset) -> String {
    let mut s = String::new();
    for (t, ids) in ds.node_ids.iter().enumerate() {
        for (i, id) in ids.iter().enumerate() {
            let _ = writeln!(s, "{id}\t{}\t{i}", ds.manifest.types[t].name);
        }
    }
    s
}

pub fn cmd_posttrain(cfg: &RunConfig, checkpoint: Option<&Path>) -> Result<()> {
    let out = out_dir(cfg)?;
    let path = checkpoint.map_or_else(|| out.join(BACKBONE_CKPT), Path::to_path_buf);
    let ck = Checkpoint::<f64>::load(&path)?;
    if ck.meta.get("component").map(String::as_str) != Some("backbone") {
        return Err(Error::Checkpoint { path, msg: "incompatible checkpoint: not a backbone".into() });
    }
    let train = train_config_from_meta(&cfg.train, &ck.meta, &path)?;
    let ld = load(cfg, checkpoint_metapaths(&ck.meta).as_deref())?;
    echo_config(cfg, "posttrain")?;
    let mut backbone = new_backbone(&ld.inputs, &train);
    ck.apply(&mut backbone.params, &path)?;
    let outcome = post_train(backbone, &ld.inputs, &ld.splits, &ld.dataset.labels, &train)?;
    save_splits(&out.join(SPLITS_FILE), &ld.splits, ld.dataset.target_ids())?;
    Checkpoint::from_store(&outcome.backbone.params, backbone_meta(&train, &ld.inputs)).save(&out.join(POSTTRAINED_CKPT))?;
    Checkpoint::from_store(outcome.auxiliary.params(), auxiliary_meta(&train, &ld.inputs)).save(&out.join(AUXILIARY_CKPT))?;
    write(&out.join("posttrain.log.jsonl"), outcome.log.to_jsonl())
}

/// A trained model restored from a checkpoint.
enum Model {
    Backbone(hgpf::Backbone),
    Auxiliary(Auxiliary<f64>),
}

struct Scored {
    name: String,
    pred: LabelMatrix,
    gates: Option<hgpf::eval::GateReport>,
}

fn restore(cfg: &RunConfig, path: &Path) -> Result<(Checkpoint<f64>, Loaded)> {
    let ck = Checkpoint::<f64>::load(path)?;
    let ld = load(cfg, checkpoint_metapaths(&ck.meta).as_deref())?;
    Ok((ck, ld))
}

fn score(cfg: &RunConfig, ck: &Checkpoint<f64>, path: &Path, ld: &Loaded) -> Result<Scored> {
    let train = train_config_from_meta(&cfg.train, &ck.meta, path)?;
    let model = match ck.meta.get("component").map(String::as_str) {
        Some("backbone") => {
            let mut b = new_backbone(&ld.inputs, &train);
            ck.apply(&mut b.params, path)?;
            Model::Backbone(b)
        }
        Some("auxiliary") => {
            let mut a = Auxiliary::new(&ld.inputs, &train);
            ck.apply(a.params_mut(), path)?;
            Model::Auxiliary(a)
        }
        other => {
            return Err(Error::Checkpoint { path: path.to_path_buf(), msg: format!("unknown component {other:?}") })
        }
    };
    let sup = Supervision::new(&ld.splits, &ld.dataset.labels)?;
    let seed = PropagationSeed::new(&ld.inputs, &sup.labeled, &sup.train_labels)?;
    Ok(match model {
        Model::Backbone(b) => Scored { name: "backbone".into(), pred: b.predict(&ld.inputs)?, gates: None },
        Model::Auxiliary(a) => {
            let names: Vec<String> = ld.inputs.metapaths.iter().map(|m| m.name().to_string()).collect();
            let gates = a.system().map(|s| gate_report(s, &names));
            let name = if train.variant == Variant::SelfCotrain { "auxiliary-backbone" } else { "auxiliary" };
            Scored { name: format!("{name}:{}", train.variant.name()), pred: a.predict(&ld.inputs, &seed)?, gates }
        }
    })
}

/// Test nodes that carry a label, with labels densified (0 where absent).
fn labeled_test(ld: &Loaded) -> (SplitSet, Vec<usize>) {
    let labels: Vec<usize> = ld.dataset.labels.iter().map(|y| y.unwrap_or(0)).collect();
    let test = ld.splits.test.iter().copied().filter(|&v| ld.dataset.labels[v].is_some()).collect();
    (SplitSet { train: ld.splits.train.clone(), val: ld.splits.val.clone(), test }, labels)
}

fn groups(cfg: &RunConfig, ld: &Loaded) -> Result<(HardNodeGroups, Vec<usize>)> {
    let (splits, labels) = labeled_test(ld);
    let union = union_graph(&ld.inputs.adjacencies);
    let g = hard_node_groups(&union, &splits, &labels, ld.inputs.num_classes, cfg.receptive_hops)?;
    Ok((g, labels))
}

fn default_checkpoint(cfg: &RunConfig, checkpoint: Option<&Path>) -> Result<PathBuf> {
    Ok(match checkpoint {
        Some(p) => p.to_path_buf(),
        None => cfg.out()?.join(match cfg.eval_target {
            EvalTarget::Auxiliary => AUXILIARY_CKPT,
            EvalTarget::Backbone => POSTTRAINED_CKPT,
        }),
    })
}

pub fn cmd_eval(cfg: &RunConfig, checkpoint: Option<&Path>) -> Result<()> {
    let out = out_dir(cfg)?;
    let path = default_checkpoint(cfg, checkpoint)?;
    let (ck, ld) = restore(cfg, &path)?;
    echo_config(cfg, "eval")?;
    let scored = score(cfg, &ck, &path, &ld)?;
    let (g, labels) = groups(cfg, &ld)?;
    let report = EvalReport::build(&scored.name, &scored.pred, &labels, &g, scored.gates)?;
    write(&out.join("report.txt"), report.to_text())?;
    write(&out.join("predictions.tsv"), prediction_lines(&scored.pred, &labels, &g, ld.dataset.target_ids()))
}

pub fn cmd_diagnose(cfg: &RunConfig, checkpoint: Option<&Path>, baseline: Option<&Path>) -> Result<()> {
    let out = out_dir(cfg)?;
    let path = default_checkpoint(cfg, checkpoint)?;
    let base_path = baseline.map_or_else(|| out.join(BACKBONE_CKPT), Path::to_path_buf);
    let (ck, ld) = restore(cfg, &path)?;
    let base_ck = Checkpoint::<f64>::load(&base_path)?;
    echo_config(cfg, "diagnose")?;
    let scored = score(cfg, &ck, &path, &ld)?;
    let base = score(cfg, &base_ck, &base_path, &ld)?;
    let (g, labels) = groups(cfg, &ld)?;
    let report = EvalReport::build(&scored.name, &scored.pred, &labels, &g, scored.gates)?;
    let base_report = EvalReport::build(&base.name, &base.pred, &labels, &g, None)?;

    let mut s = String::new();
    let _ = writeln!(s, "[comparison]");
    let _ = writeln!(s, "model = {}", report.model);
    let _ = writeln!(s, "baseline = {}", base_report.model);
    let _ = writeln!(s, "micro_f1_gain = {:.6}", report.scores.micro - base_report.scores.micro);
    let _ = writeln!(s, "macro_f1_gain = {:.6}", report.scores.macro_ - base_report.scores.macro_);
    let _ = writeln!(s, "group\tmembers\tbaseline\tmodel\tgain");
    for (a, b) in report.groups.iter().zip(&base_report.groups) {
        let f = |x: Option<f64>| x.map_or("-".to_string(), |x| format!("{x:.6}"));
        let gain = a.accuracy.zip(b.accuracy).map(|(x, y)| x - y);
        let _ = writeln!(s, "{}\t{}\t{}\t{}\t{}", a.name, a.members, f(b.accuracy), f(a.accuracy), f(gain));
    }
    let _ = writeln!(s, "\n# model\n{}", report.to_text());
    let _ = writeln!(s, "# baseline\n{}", base_report.to_text());
    write(&out.join("diagnose.txt"), s)?;

    let ids = ld.dataset.target_ids();
    let mut t = String::from("node_id\tmean_distance\tgroup_A\tgroup_B\n");
    for (i, &v) in g.nodes.iter().enumerate() {
        let a = if g.far[i] { "far" } else { "close" };
        let b = if g.interfered[i] { "interfered" } else { "not_interfered" };
        let _ = writeln!(t, "{}\t{:.6}\t{a}\t{b}", ids[v], g.mean_distance[i]);
    }
    write(&out.join("groups.tsv"), t)
}

pub fn cmd_make_splits(cfg: &RunConfig) -> Result<()> {
    let out = out_dir(cfg)?;
    let ds = Dataset::load(cfg.dataset()?)?;
    echo_config(cfg, "make-splits")?;
    let splits = make_splits(&ds.labels, ds.manifest.classes, cfg.train_per_class, cfg.val_per_class, cfg.train.seed)?;
    save_splits(&out.join(SPLITS_FILE), &splits, ds.target_ids())
}

pub fn cmd_gen_toy(kind: &str, out: &Path, seed: u64) -> Result<()> {
    let ds = match kind {
        "acm" => synth::acm(&synth::AcmSpec::default(), seed)?,
        "dblp" => synth::dblp(&synth::DblpSpec::default(), seed)?,
        "tiny-acm" => synth::tiny_acm(seed)?,
        "tiny-dblp" => synth::tiny_dblp(seed)?,
        k => return Err(Error::Config(format!("unknown toy kind {k:?}; expected acm, dblp, tiny-acm or tiny-dblp"))),
    };
    ds.save(out)
}
