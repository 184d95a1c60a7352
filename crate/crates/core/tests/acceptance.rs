//! One PASS/FAIL line per acceptance criterion. Exits non-zero on any failure.

use std::collections::BTreeMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

use hgpf::data::checkpoint::Checkpoint;
use hgpf::data::synth::{acm, tiny_dblp, AcmSpec};
use hgpf::data::{make_splits, Dataset, SplitSet};
use hgpf::eval::{f1_scores, gate_report, group_accuracy, hard_node_groups, EvalReport};
use hgpf::global::PropagationSeed;
use hgpf::hin::union_graph;
use hgpf::train::{new_backbone, post_train, pretrain, run_hgpf, Auxiliary, PhaseLog, Supervision, TrainConfig, Variant};
use hgpf::{Backbone, GraphInputs, Tensor};

#[path = "gradients.rs"]
mod gradients;
#[path = "mclp_oracle.rs"]
mod mclp_oracle;
#[path = "simplex.rs"]
mod simplex;

const SEEDS: u64 = 5;
const DATA_SEED: u64 = 7;
const PER_CLASS: usize = 50;
const MIN_AUX_GAIN: f64 = 0.015;
const ABLATION_GUARD: f64 = -0.003;
const GLOBAL_LOWEST_MIN: usize = 4;
const K_VALUES: [usize; 3] = [6, 8, 10];
const K_SPREAD: f64 = 0.01;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: String) -> Verdict {
    Verdict { pass, detail }
}

/// Runs each check, catching panics, and enforces a wall-clock limit.
fn suite(checks: &[(&str, fn())], limit_secs: Option<f64>) -> Verdict {
    let start = Instant::now();
    let failed: Vec<&str> =
        checks.iter().filter(|(_, f)| catch_unwind(AssertUnwindSafe(f)).is_err()).map(|(n, _)| *n).collect();
    let secs = start.elapsed().as_secs_f64();
    let slow = limit_secs.is_some_and(|l| secs >= l);
    let mut detail = format!("{} checks in {secs:.1}s", checks.len());
    if let Some(l) = limit_secs {
        detail += &format!(" (limit {l}s)");
    }
    if !failed.is_empty() {
        detail += &format!("; failed: {}", failed.join(", "));
    }
    verdict(failed.is_empty() && !slow, detail)
}

struct Desk {
    ds: Dataset,
    inputs: GraphInputs,
    labels: Vec<usize>,
}

/// Everything one seed of the desk-scale protocol produces.
struct SeedRun {
    pre: f64,
    full: f64,
    global: f64,
    local: f64,
    k: Vec<(usize, f64)>,
    far_gain: Option<f64>,
    interfered_gain: Option<f64>,
    /// Observation only: the same gain with a 2-hop receptive field.
    interfered_gain_2hop: Option<f64>,
    minutes: f64,
}

fn seed_config(seed: u64) -> TrainConfig {
    TrainConfig { seed, layers: 8, ..TrainConfig::default() }
}

fn pretrained(desk: &Desk, splits: &SplitSet, cfg: &TrainConfig) -> (Backbone, PhaseLog) {
    let sup = Supervision::new(splits, &desk.ds.labels).unwrap();
    let mut bb = new_backbone(&desk.inputs, cfg);
    let mut log = PhaseLog::default();
    pretrain(&mut bb, &desk.inputs, &sup, cfg, &mut log).unwrap();
    (bb, log)
}

fn aux_prediction(desk: &Desk, splits: &SplitSet, aux: &Auxiliary<f64>) -> Tensor {
    let sup = Supervision::new(splits, &desk.ds.labels).unwrap();
    let seed = PropagationSeed::new(&desk.inputs, &sup.labeled, &sup.train_labels).unwrap();
    aux.predict(&desk.inputs, &seed).unwrap()
}

fn run_seed(desk: &Desk, seed: u64) -> SeedRun {
    let start = Instant::now();
    let splits = make_splits(&desk.ds.labels, desk.inputs.num_classes, PER_CLASS, PER_CLASS, seed).unwrap();
    let cfg = seed_config(seed);
    let (bb, _) = pretrained(desk, &splits, &cfg);
    let micro = |p: &Tensor| f1_scores(p, &desk.labels, &splits.test).unwrap().micro;
    let pre_pred = bb.predict(&desk.inputs).unwrap();
    let aux_micro = |c: TrainConfig| -> (f64, Tensor) {
        let out = post_train(bb.clone(), &desk.inputs, &splits, &desk.ds.labels, &c).unwrap();
        let pred = aux_prediction(desk, &splits, &out.auxiliary);
        (micro(&pred), pred)
    };
    let (full, full_pred) = aux_micro(cfg.clone());
    let (global, _) = aux_micro(TrainConfig { variant: Variant::GlobalOnly, ..cfg.clone() });
    let (local, _) = aux_micro(TrainConfig { variant: Variant::LocalOnly, ..cfg.clone() });
    let k = K_VALUES
        .iter()
        .map(|&k| (k, if k == cfg.layers { full } else { aux_micro(TrainConfig { layers: k, ..cfg.clone() }).0 }))
        .collect();

    let union = union_graph(&desk.inputs.adjacencies);
    let groups = |hops| hard_node_groups(&union, &splits, &desk.labels, desk.inputs.num_classes, hops).unwrap();
    let (g, g2) = (groups(1), groups(2));
    let gain = |flags: &[bool]| {
        let a = group_accuracy(&full_pred, &desk.labels, &g.nodes, flags, true)?;
        let b = group_accuracy(&pre_pred, &desk.labels, &g.nodes, flags, true)?;
        Some(a - b)
    };
    SeedRun {
        pre: micro(&pre_pred),
        full,
        global,
        local,
        k,
        far_gain: gain(&g.far),
        interfered_gain: gain(&g.interfered),
        interfered_gain_2hop: gain(&g2.interfered),
        minutes: start.elapsed().as_secs_f64() / 60.0,
    }
}

fn mean(xs: impl IntoIterator<Item = f64>) -> f64 {
    let v: Vec<f64> = xs.into_iter().collect();
    v.iter().sum::<f64>() / v.len() as f64
}

fn criterion_5(runs: &[SeedRun]) -> Verdict {
    let gain = mean(runs.iter().map(|r| r.full - r.pre));
    verdict(gain >= MIN_AUX_GAIN, format!("mean auxiliary - pretrained micro-F1 = {gain:+.4} (need >= {MIN_AUX_GAIN:+})"))
}

fn criterion_6(runs: &[SeedRun]) -> Verdict {
    let (full, global, local) =
        (mean(runs.iter().map(|r| r.full)), mean(runs.iter().map(|r| r.global)), mean(runs.iter().map(|r| r.local)));
    let margin = full - global.max(local);
    let lowest = runs.iter().filter(|r| r.global < r.local && r.global < r.full).count();
    verdict(
        margin >= ABLATION_GUARD && lowest >= GLOBAL_LOWEST_MIN,
        format!(
            "means full {full:.4} global-only {global:.4} local-only {local:.4}; full - max(ablation) = {margin:+.4} \
             (need >= {ABLATION_GUARD}); global-only lowest in {lowest}/{} seeds (need >= {GLOBAL_LOWEST_MIN})",
            runs.len()
        ),
    )
}

fn criterion_7(runs: &[SeedRun]) -> Verdict {
    let means: Vec<(usize, f64)> =
        K_VALUES.iter().enumerate().map(|(i, &k)| (k, mean(runs.iter().map(|r| r.k[i].1)))).collect();
    let hi = means.iter().map(|m| m.1).fold(f64::MIN, f64::max);
    let lo = means.iter().map(|m| m.1).fold(f64::MAX, f64::min);
    let shown: Vec<String> = means.iter().map(|(k, m)| format!("K={k} {m:.4}")).collect();
    verdict(hi - lo < K_SPREAD, format!("seed-mean micro-F1 {}; spread {:.4} (need < {K_SPREAD})", shown.join(", "), hi - lo))
}

fn criterion_8(runs: &[SeedRun]) -> Verdict {
    let avg = |f: fn(&SeedRun) -> Option<f64>| {
        let v: Vec<f64> = runs.iter().filter_map(f).collect();
        (!v.is_empty()).then(|| mean(v))
    };
    let far = avg(|r| r.far_gain);
    let interfered = avg(|r| r.interfered_gain);
    let show = |x: Option<f64>| x.map_or("empty".to_string(), |x| format!("{x:+.4}"));
    verdict(
        far.is_some_and(|x| x >= 0.0) && interfered.is_some_and(|x| x >= 0.0),
        format!("mean accuracy gain over pretrained: far {}, interfered {}", show(far), show(interfered)),
    )
}

/// Serialized artifacts of one seed-0 run: logs, checkpoints and the report.
fn artifacts(desk: &Desk) -> Vec<Vec<u8>> {
    let splits = make_splits(&desk.ds.labels, desk.inputs.num_classes, PER_CLASS, PER_CLASS, 0).unwrap();
    let cfg = seed_config(0);
    let (bb, pre_log) = pretrained(desk, &splits, &cfg);
    let pre_ck = Checkpoint::from_store(&bb.params, BTreeMap::new()).to_bytes();
    let out = post_train(bb, &desk.inputs, &splits, &desk.ds.labels, &cfg).unwrap();
    let pred = aux_prediction(desk, &splits, &out.auxiliary);
    let union = union_graph(&desk.inputs.adjacencies);
    let g = hard_node_groups(&union, &splits, &desk.labels, desk.inputs.num_classes, 1).unwrap();
    let names = desk.ds.manifest.metapath_names();
    let gates = out.auxiliary.system().map(|s| gate_report(s, &names));
    let report = EvalReport::build("auxiliary", &pred, &desk.labels, &g, gates).unwrap();
    vec![
        pre_log.to_jsonl().into_bytes(),
        pre_ck,
        out.log.to_jsonl().into_bytes(),
        Checkpoint::from_store(&out.backbone.params, BTreeMap::new()).to_bytes(),
        Checkpoint::from_store(out.auxiliary.params(), BTreeMap::new()).to_bytes(),
        report.to_text().into_bytes(),
    ]
}

fn criterion_9(desk: &Desk) -> Verdict {
    let a = artifacts(desk);
    let b = artifacts(desk);
    let same = a.iter().zip(&b).filter(|(x, y)| x == y).count();
    let bytes: usize = a.iter().map(Vec::len).sum();
    verdict(same == a.len(), format!("{same}/{} artifacts byte-identical on rerun ({bytes} bytes)", a.len()))
}

fn criterion_10() -> Verdict {
    let ds = tiny_dblp(0).unwrap();
    let inputs = ds.graph_inputs::<f64>(None).unwrap();
    let names = ds.manifest.metapath_names();
    let cfg = TrainConfig { epochs: 40, pretrain_epochs: 40, iterations: 2, ..TrainConfig::default() };
    let Auxiliary::System(fresh) = Auxiliary::new(&inputs, &cfg) else { unreachable!() };
    let r = gate_report(&fresh, &names);
    let uniform = 1.0 / names.len() as f64;
    let neutral = r.gamma.is_some_and(|g| g.mean == 0.5 && g.std == 0.0)
        && r.beta.is_some_and(|b| b.mean == 0.5 && b.std == 0.0)
        && r.alpha.len() == names.len()
        && r.alpha.iter().all(|(_, s)| s.mean == uniform && s.std == 0.0);

    let splits = make_splits(&ds.labels, ds.manifest.classes, 4, 4, 0).unwrap();
    let run = run_hgpf(&inputs, &splits, &ds.labels, &cfg).unwrap();
    let trained = gate_report(run.outcome.auxiliary.system().unwrap(), &names);
    let emitted = trained.alpha.len() == names.len()
        && trained.alpha.iter().all(|(_, s)| s.mean.is_finite() && s.std.is_finite() && s.std >= 0.0)
        && (trained.alpha.iter().map(|(_, s)| s.mean).sum::<f64>() - 1.0).abs() < 1e-9;
    let mut order = trained.alpha.clone();
    order.sort_by(|a, b| b.1.mean.total_cmp(&a.1.mean));
    let stats: Vec<String> = trained.alpha.iter().map(|(n, s)| format!("{n} {:.4}+-{:.4}", s.mean, s.std)).collect();
    let order: Vec<&str> = order.iter().map(|(n, _)| n.as_str()).collect();
    println!("  observation: trained DBLP-toy alpha {}; order {}", stats.join(", "), order.join(" > "));
    verdict(
        neutral && emitted,
        format!("fresh gates neutral: {neutral}; trained alpha emitted for {} meta-paths: {emitted}", trained.alpha.len()),
    )
}

fn main() {
    let mut results: Vec<(usize, &str, Verdict)> = Vec::new();
    let mut record = |id, name, v: Verdict| {
        println!("  criterion {id} done: {}", v.detail);
        results.push((id, name, v));
    };

    record(
        1,
        "propagation oracle",
        suite(
            &[
                ("dense reference", mclp_oracle::propagation_matches_dense_reference),
                ("clamping", mclp_oracle::labeled_rows_are_clamped),
                ("isolated", mclp_oracle::isolated_unlabeled_neighborhood_stays_uniform),
                ("masks", mclp_oracle::seed_masks_skip_labeled_and_isolated),
            ],
            Some(10.0),
        ),
    );
    record(
        2,
        "gradient suite",
        suite(
            &[
                ("dense", gradients::dense_primitives),
                ("sparse", gradients::sparse_primitives),
                ("losses", gradients::losses),
                ("omega", gradients::omega_objective_matches_finite_differences),
                ("theta", gradients::theta_objective_matches_finite_differences),
                ("shapes", gradients::shape_errors_name_the_operation),
            ],
            Some(60.0),
        ),
    );
    record(3, "simplex suite", suite(&[("row-stochastic", simplex::every_output_is_row_stochastic)], None));
    record(
        4,
        "locality suite",
        suite(
            &[
                ("propagation", locality::propagation_is_k_local),
                ("backbone", locality::backbone_is_one_hop_local),
                ("local module", locality::local_module_is_schema_local),
            ],
            None,
        ),
    );

    let ds = acm(&AcmSpec::default(), DATA_SEED).unwrap();
    let desk = Desk { inputs: ds.graph_inputs(None).unwrap(), labels: ds.dense_labels().unwrap(), ds };
    let mut runs = Vec::new();
    for seed in 0..SEEDS {
        let r = run_seed(&desk, seed);
        let ks: Vec<String> = r.k.iter().map(|(k, m)| format!("K{k} {m:.4}")).collect();
        let show = |x: Option<f64>| x.map_or("-".to_string(), |x| format!("{x:+.4}"));
        println!(
            "  seed {seed}: pretrained {:.4} full {:.4} global-only {:.4} local-only {:.4} {} far {} interfered {} (2-hop {}) ({:.1} min)",
            r.pre,
            r.full,
            r.global,
            r.local,
            ks.join(" "),
            show(r.far_gain),
            show(r.interfered_gain),
            show(r.interfered_gain_2hop),
            r.minutes
        );
        runs.push(r);
    }
    record(5, "framework effect", criterion_5(&runs));
    record(6, "ablation ordering", criterion_6(&runs));
    record(7, "K-stability", criterion_7(&runs));
    record(8, "hard-node gain", criterion_8(&runs));
    record(9, "determinism", criterion_9(&desk));
    record(10, "interpretability plumbing", criterion_10());

    println!();
    for (id, name, v) in &results {
        println!("{} criterion {id:>2} {name}: {}", if v.pass { "PASS" } else { "FAIL" }, v.detail);
    }
    let failed = results.iter().filter(|r| !r.2.pass).count();
    println!("\nacceptance: {} passed, {failed} failed", results.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
