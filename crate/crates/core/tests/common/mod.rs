#![allow(dead_code)]

use hgpf::diff::random::rng;
use hgpf::hin::{Hin, MetaPath, NodeType, Relation};
use hgpf::inputs::FeatureStore;
use hgpf::{GraphInputs, Tensor};
use rand::Rng as _;

/// Raw edge lists of a random three-type graph: target `T`, attribute types
/// `A` and `B`, relations `TA` and `TB`.
#[derive(Debug, Clone)]
pub struct Toy {
    pub n: usize,
    pub n_a: usize,
    pub n_b: usize,
    pub ta: Vec<(usize, usize)>,
    pub tb: Vec<(usize, usize)>,
    /// `n x feat_dim` target features.
    pub features: Vec<Vec<f64>>,
    pub classes: usize,
}

pub fn random_toy(seed: u64, max_n: usize) -> Toy {
    let mut r = rng(seed);
    let n = r.random_range(3..=max_n);
    let n_a = r.random_range(1..=n);
    let n_b = r.random_range(1..=4);
    let mut ta = Vec::new();
    let mut tb = Vec::new();
    let p = r.random_range(0.05..0.5);
    for v in 0..n {
        for a in 0..n_a {
            if r.random_bool(p) {
                ta.push((v, a));
            }
        }
        if r.random_bool(0.8) {
            tb.push((v, r.random_range(0..n_b)));
        }
    }
    let features = (0..n).map(|_| (0..4).map(|_| r.random_range(-1.0..1.0)).collect()).collect();
    Toy { n, n_a, n_b, ta, tb, features, classes: 3 }
}

impl Toy {
    pub fn hin(&self) -> Hin {
        Hin::new(
            vec![
                NodeType { name: "T".into(), count: self.n },
                NodeType { name: "A".into(), count: self.n_a },
                NodeType { name: "B".into(), count: self.n_b },
            ],
            vec![
                Relation { name: "TA".into(), src_type: 0, dst_type: 1, edges: self.ta.clone() },
                Relation { name: "TB".into(), src_type: 0, dst_type: 2, edges: self.tb.clone() },
            ],
            "T",
        )
        .unwrap()
    }

    pub fn inputs(&self) -> GraphInputs {
        let hin = self.hin();
        let mps = vec![
            MetaPath::parse(&hin, "TAT", "TA TA^-1").unwrap(),
            MetaPath::parse(&hin, "TBT", "TB TB^-1").unwrap(),
        ];
        let x = Tensor::from_f64_rows(&self.features);
        let features = FeatureStore::with_one_hot_defaults(&hin, vec![(0, x)]).unwrap();
        GraphInputs::new(hin, mps, features, self.classes).unwrap()
    }

    /// Dense 0/1 adjacency of the `T-X-T` meta-path, diagonal cleared.
    pub fn dense_metapath(&self, edges: &[(usize, usize)]) -> Vec<Vec<bool>> {
        let mut m = vec![vec![false; self.n]; self.n];
        for &(v, x) in edges {
            for &(u, y) in edges {
                if x == y && u != v {
                    m[v][u] = true;
                }
            }
        }
        m
    }
}

pub fn labels_for(n: usize, classes: usize, seed: u64) -> Vec<usize> {
    let mut r = rng(seed);
    (0..n).map(|_| r.random_range(0..classes)).collect()
}

pub fn assert_row_stochastic(t: &Tensor, tol: f64, what: &str) {
    for r in 0..t.rows() {
        let row = t.row(r);
        assert!(row.iter().all(|&x| x >= 0.0 && x.is_finite()), "{what}: row {r} = {row:?}");
        let s: f64 = row.iter().sum();
        assert!((s - 1.0).abs() <= tol, "{what}: row {r} sums to {s}");
    }
}

/// Inputs of one label-propagation comparison.
pub struct MclpCase {
    pub toy: Toy,
    pub labeled: Vec<usize>,
    pub labels: Vec<usize>,
    /// Per channel, a dense `n x n` table of intensity logits.
    pub intensity: Vec<Vec<Vec<f64>>>,
    /// `n x channels` channel logits.
    pub channel_logits: Vec<Vec<f64>>,
    pub layers: usize,
}

pub fn random_mclp_case(seed: u64) -> MclpCase {
    let toy = random_toy(seed, 20);
    let mut r = rng(seed ^ 0x5eed);
    let n = toy.n;
    let labeled: Vec<usize> = (0..n).filter(|_| r.random_bool(0.3)).collect();
    let labels = labeled.iter().map(|_| r.random_range(0..toy.classes)).collect();
    let intensity = (0..2).map(|_| (0..n).map(|_| (0..n).map(|_| r.random_range(-2.0..2.0)).collect()).collect()).collect();
    let channel_logits = (0..n).map(|_| (0..2).map(|_| r.random_range(-2.0..2.0)).collect()).collect();
    let layers = r.random_range(1..=10);
    MclpCase { toy, labeled, labels, intensity, channel_logits, layers }
}

/// Dense masked-matrix propagation written directly from the update rule.
pub fn dense_mclp(case: &MclpCase) -> Vec<Vec<f64>> {
    let toy = &case.toy;
    let (n, c) = (toy.n, toy.classes);
    let mut is_labeled = vec![false; n];
    let mut init = vec![vec![1.0 / c as f64; c]; n];
    for (&v, &y) in case.labeled.iter().zip(&case.labels) {
        is_labeled[v] = true;
        init[v] = vec![0.0; c];
        init[v][y] = 1.0;
    }
    let mut channels = Vec::new();
    for (p, edges) in [&toy.ta, &toy.tb].into_iter().enumerate() {
        let m = toy.dense_metapath(edges);
        let s = &case.intensity[p];
        let mut w = vec![vec![0.0; n]; n];
        for v in 0..n {
            let z: f64 = (0..n).filter(|&u| m[v][u]).map(|u| s[v][u].exp()).sum();
            for u in 0..n {
                if m[v][u] {
                    w[v][u] = s[v][u].exp() / z;
                }
            }
        }
        let mask: Vec<bool> = (0..n).map(|v| !is_labeled[v] && m[v].iter().any(|&b| b)).collect();
        let mut l = init.clone();
        for _ in 0..case.layers {
            let mut next = l.clone();
            for v in 0..n {
                if mask[v] {
                    for k in 0..c {
                        next[v][k] = (0..n).map(|u| w[v][u] * l[u][k]).sum();
                    }
                }
            }
            l = next;
        }
        channels.push(l);
    }
    (0..n)
        .map(|v| {
            let a = &case.channel_logits[v];
            let z: f64 = a.iter().map(|x| x.exp()).sum();
            (0..c).map(|k| (0..2).map(|p| a[p].exp() / z * channels[p][v][k]).sum()).collect()
        })
        .collect()
}

/// The same computation through the library's sparse operators.
pub fn library_mclp(case: &MclpCase) -> Tensor {
    use hgpf::global::{combine_channels, propagate, propagation_weights, PropagationSeed};
    let inputs = case.toy.inputs();
    let seed = PropagationSeed::new(&inputs, &case.labeled, &case.labels).unwrap();
    let mut tape = hgpf::Tape::new();
    let init = tape.constant(seed.initial.clone());
    let mut channels = Vec::new();
    for (p, adj) in inputs.channels.iter().enumerate() {
        let mut logits = Vec::with_capacity(adj.nnz());
        for v in 0..adj.n_rows() {
            logits.extend(adj.row(v).iter().map(|&u| case.intensity[p][v][u]));
        }
        let s = tape.constant(Tensor::column(logits));
        let w = propagation_weights(&mut tape, s, adj).unwrap();
        channels.push(propagate(&mut tape, init, w, adj, case.layers, &seed.update_masks[p]).unwrap());
    }
    let a = tape.constant(Tensor::from_f64_rows(&case.channel_logits));
    let out = combine_channels(&mut tape, a, &channels).unwrap();
    tape.value(out).clone()
}
