//! Metrics, hard-node grouping and gate statistics.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::auxiliary::AuxSystem;
use crate::csr::Csr;
use crate::data::SplitSet;
use crate::diff::tape::{sigmoid, softmax_in_place};
use crate::diff::Tensor;
use crate::error::{Error, Result};
use crate::hin::{bfs_distances, diameter};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassScores {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct F1Scores {
    pub micro: f64,
    pub macro_: f64,
    pub per_class: Vec<ClassScores>,
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Micro and macro F1 of argmax predictions over `nodes`. `labels` is
/// indexed by node. Classes absent from both prediction and truth count as
/// F1 = 0 in the macro average.
pub fn f1_scores<S: Scalar>(pred: &Tensor<S>, labels: &[usize], nodes: &[usize]) -> Result<F1Scores> {
    if nodes.is_empty() {
        return Err(Error::Dataset("F1 over an empty node set".into()));
    }
    let c = pred.cols();
    let predicted = pred.argmax_rows();
    let (mut tp, mut fp, mut fneg) = (vec![0usize; c], vec![0usize; c], vec![0usize; c]);
    for &v in nodes {
        let (y, p) = (labels[v], predicted[v]);
        if y >= c {
            return Err(Error::Dataset(format!("node {v}: label {y} outside {c} classes")));
        }
        if y == p {
            tp[y] += 1;
        } else {
            fp[p] += 1;
            fneg[y] += 1;
        }
    }
    let per_class: Vec<ClassScores> = (0..c)
        .map(|k| {
            let precision = ratio(tp[k], tp[k] + fp[k]);
            let recall = ratio(tp[k], tp[k] + fneg[k]);
            let f1 = ratio(2 * tp[k], 2 * tp[k] + fp[k] + fneg[k]);
            ClassScores { precision, recall, f1, support: tp[k] + fneg[k] }
        })
        .collect();
    let total_tp: usize = tp.iter().sum();
    let micro = ratio(total_tp, nodes.len());
    let macro_ = per_class.iter().map(|s| s.f1).sum::<f64>() / c as f64;
    Ok(F1Scores { micro, macro_, per_class })
}

/// Hard-node flags of every test node, in `splits.test` order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HardNodeGroups {
    pub receptive_hops: usize,
    /// Distance charged for an unreachable same-class training node.
    pub unreachable_distance: usize,
    pub nodes: Vec<usize>,
    /// Mean hop distance to same-class training nodes.
    pub mean_distance: Vec<f64>,
    pub far: Vec<bool>,
    pub interfered: Vec<bool>,
}

/// FAR: mean hop distance to the same-class training nodes exceeds
/// `receptive_hops` (unreachable counts as diameter + 1). INTERFERED:
/// within `receptive_hops`, other-class training nodes strictly outnumber
/// same-class ones.
pub fn hard_node_groups(
    union: &Csr,
    splits: &SplitSet,
    labels: &[usize],
    num_classes: usize,
    receptive_hops: usize,
) -> Result<HardNodeGroups> {
    if receptive_hops == 0 {
        return Err(Error::Config("receptive_hops must be at least 1".into()));
    }
    let dists: Vec<Vec<Option<usize>>> = splits.train.iter().map(|&t| bfs_distances(union, &[t])).collect();
    let mut has_train = vec![false; num_classes];
    for &t in &splits.train {
        has_train[labels[t]] = true;
    }
    let needs_sentinel = splits.test.iter().any(|&v| {
        !has_train[labels[v]] || dists.iter().zip(&splits.train).any(|(d, &t)| labels[t] == labels[v] && d[v].is_none())
    });
    let unreachable_distance = if needs_sentinel { diameter(union) + 1 } else { 0 };
    let mut out = HardNodeGroups {
        receptive_hops,
        unreachable_distance,
        nodes: splits.test.clone(),
        mean_distance: Vec::with_capacity(splits.test.len()),
        far: Vec::with_capacity(splits.test.len()),
        interfered: Vec::with_capacity(splits.test.len()),
    };
    for &v in &splits.test {
        let y = labels[v];
        let (mut sum, mut count) = (0usize, 0usize);
        let mut in_range = vec![0usize; num_classes];
        for (d, &t) in dists.iter().zip(&splits.train) {
            let hop = d[v];
            if labels[t] == y {
                sum += hop.unwrap_or(unreachable_distance);
                count += 1;
            }
            if hop.is_some_and(|h| h <= receptive_hops) {
                in_range[labels[t]] += 1;
            }
        }
        let mean = if count == 0 { unreachable_distance as f64 } else { sum as f64 / count as f64 };
        let same = in_range[y];
        let other: usize = in_range.iter().sum::<usize>() - same;
        out.mean_distance.push(mean);
        out.far.push(mean > receptive_hops as f64);
        out.interfered.push(other > same);
    }
    Ok(out)
}

/// Accuracy over the nodes whose flag equals `want`; `None` for an empty group.
pub fn group_accuracy<S: Scalar>(
    pred: &Tensor<S>,
    labels: &[usize],
    nodes: &[usize],
    flags: &[bool],
    want: bool,
) -> Option<f64> {
    let predicted = pred.argmax_rows();
    let members: Vec<usize> = nodes.iter().zip(flags).filter(|(_, &f)| f == want).map(|(&v, _)| v).collect();
    if members.is_empty() {
        return None;
    }
    let hits = members.iter().filter(|&&v| predicted[v] == labels[v]).count();
    Some(hits as f64 / members.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stat {
    pub mean: f64,
    pub std: f64,
}

impl Stat {
    /// Population mean and standard deviation.
    pub fn of(values: &[f64]) -> Stat {
        if values.is_empty() {
            return Stat { mean: 0.0, std: 0.0 };
        }
        // Shifted by the first value: constant inputs give their exact value and zero spread.
        let n = values.len() as f64;
        let k = values[0];
        let d = values.iter().map(|x| x - k).sum::<f64>() / n;
        let var = values.iter().map(|x| (x - k - d) * (x - k - d)).sum::<f64>() / n;
        Stat { mean: k + d, std: var.sqrt() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GateReport {
    /// Global/local balance; absent unless both modules exist.
    pub gamma: Option<Stat>,
    /// Own/neighbor balance of the local module.
    pub beta: Option<Stat>,
    /// Channel weights per meta-path name.
    pub alpha: Vec<(String, Stat)>,
}

pub fn gate_report<S: Scalar>(aux: &AuxSystem<S>, metapath_names: &[String]) -> GateReport {
    let stat_sigmoid = |t: &Tensor<S>| Stat::of(&t.data().iter().map(|&x| sigmoid(x).to_f64().unwrap()).collect::<Vec<_>>());
    let gamma = aux.gate_logits.map(|id| stat_sigmoid(aux.params.get(id)));
    let beta = aux.local.as_ref().map(|l| stat_sigmoid(aux.params.get(l.gate_logits)));
    let mut alpha = Vec::new();
    if let Some(g) = &aux.global {
        let logits = aux.params.get(g.channel_logits);
        let p = logits.cols();
        let mut cols = vec![Vec::with_capacity(logits.rows()); p];
        for r in 0..logits.rows() {
            let mut row = logits.row(r).to_vec();
            softmax_in_place(&mut row);
            for (j, x) in row.into_iter().enumerate() {
                cols[j].push(x.to_f64().unwrap());
            }
        }
        alpha = metapath_names.iter().cloned().zip(cols.iter().map(|c| Stat::of(c))).collect();
    }
    GateReport { gamma, beta, alpha }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupAccuracy {
    pub name: String,
    pub members: usize,
    pub accuracy: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub model: String,
    pub nodes: usize,
    pub scores: F1Scores,
    pub receptive_hops: usize,
    pub unreachable_distance: usize,
    pub groups: Vec<GroupAccuracy>,
    pub gates: Option<GateReport>,
}

impl EvalReport {
    pub fn build<S: Scalar>(
        model: &str,
        pred: &Tensor<S>,
        labels: &[usize],
        groups: &HardNodeGroups,
        gates: Option<GateReport>,
    ) -> Result<Self> {
        let scores = f1_scores(pred, labels, &groups.nodes)?;
        let mut rows = Vec::new();
        for (name, flags, want) in [
            ("far", &groups.far, true),
            ("close", &groups.far, false),
            ("interfered", &groups.interfered, true),
            ("not_interfered", &groups.interfered, false),
        ] {
            let members = flags.iter().filter(|&&f| f == want).count();
            rows.push(GroupAccuracy {
                name: name.into(),
                members,
                accuracy: group_accuracy(pred, labels, &groups.nodes, flags, want),
            });
        }
        Ok(EvalReport {
            model: model.into(),
            nodes: groups.nodes.len(),
            scores,
            receptive_hops: groups.receptive_hops,
            unreachable_distance: groups.unreachable_distance,
            groups: rows,
            gates,
        })
    }

    pub fn group(&self, name: &str) -> Option<&GroupAccuracy> {
        self.groups.iter().find(|g| g.name == name)
    }

    /// Sectioned key-value text with per-class and per-group tables.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let opt = |x: Option<f64>| x.map_or("-".to_string(), |x| format!("{x:.6}"));
        let _ = writeln!(s, "[summary]");
        let _ = writeln!(s, "model = {}", self.model);
        let _ = writeln!(s, "test_nodes = {}", self.nodes);
        let _ = writeln!(s, "micro_f1 = {:.6}", self.scores.micro);
        let _ = writeln!(s, "macro_f1 = {:.6}", self.scores.macro_);
        let _ = writeln!(s, "\n[per_class]");
        let _ = writeln!(s, "class\tprecision\trecall\tf1\tsupport");
        for (k, c) in self.scores.per_class.iter().enumerate() {
            let _ = writeln!(s, "{k}\t{:.6}\t{:.6}\t{:.6}\t{}", c.precision, c.recall, c.f1, c.support);
        }
        let _ = writeln!(s, "\n[groups]");
        let _ = writeln!(s, "receptive_hops = {}", self.receptive_hops);
        let _ = writeln!(s, "unreachable_distance = {}", self.unreachable_distance);
        let _ = writeln!(s, "group\tmembers\taccuracy");
        for g in &self.groups {
            let _ = writeln!(s, "{}\t{}\t{}", g.name, g.members, opt(g.accuracy));
        }
        if let Some(gates) = &self.gates {
            let _ = writeln!(s, "\n[gates]");
            let _ = writeln!(s, "gate\tmean\tstd");
            for (name, st) in [("gamma", gates.gamma), ("beta", gates.beta)] {
                if let Some(st) = st {
                    let _ = writeln!(s, "{name}\t{:.6}\t{:.6}", st.mean, st.std);
                }
            }
            for (mp, st) in &gates.alpha {
                let _ = writeln!(s, "alpha.{mp}\t{:.6}\t{:.6}", st.mean, st.std);
            }
        }
        s
    }
}

/// `node_id<TAB>true<TAB>pred<TAB>group_A<TAB>group_B` per test node.
pub fn prediction_lines<S: Scalar>(pred: &Tensor<S>, labels: &[usize], groups: &HardNodeGroups, ids: &[String]) -> String {
    let predicted = pred.argmax_rows();
    let mut s = String::new();
    for (i, &v) in groups.nodes.iter().enumerate() {
        let a = if groups.far[i] { "far" } else { "close" };
        let b = if groups.interfered[i] { "interfered" } else { "not_interfered" };
        let _ = writeln!(s, "{}\t{}\t{}\t{a}\t{b}", ids[v], labels[v], predicted[v]);
    }
    s
}
