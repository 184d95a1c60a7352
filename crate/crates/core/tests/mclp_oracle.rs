mod common;

use std::sync::Arc;

use common::*;
use hgpf::csr::Csr;
use hgpf::global::{init_labels, propagate, propagation_weights, PropagationSeed};
use hgpf::{Tape, Tensor};

pub fn propagation_matches_dense_reference() {
    for seed in 0..50 {
        let case = random_mclp_case(seed);
        let want = dense_mclp(&case);
        let got = library_mclp(&case);
        for (v, row) in want.iter().enumerate() {
            for (k, &x) in row.iter().enumerate() {
                assert!((got.get(v, k) - x).abs() <= 1e-12, "seed {seed} node {v} class {k}: {} vs {x}", got.get(v, k));
            }
        }
    }
}

pub fn labeled_rows_are_clamped() {
    for seed in 0..20 {
        let case = random_mclp_case(seed);
        let got = library_mclp(&case);
        for (&v, &y) in case.labeled.iter().zip(&case.labels) {
            let a = &case.channel_logits[v];
            // Every channel keeps the one-hot row, so any convex mix does too.
            assert!((got.get(v, y) - 1.0).abs() < 1e-15, "seed {seed} node {v}: {a:?}");
        }
    }
}

pub fn isolated_unlabeled_neighborhood_stays_uniform() {
    // 0 - 1 - 2 labeled nowhere within reach of 3 - 4.
    let adj = Arc::new(Csr::from_rows(vec![vec![1], vec![0, 2], vec![1], vec![4], vec![3]], 5));
    let mut tape = Tape::new();
    let l0 = tape.constant(init_labels(5, &[0], &[1], 3).unwrap());
    let s = tape.constant(Tensor::zeros(adj.nnz(), 1));
    let w = propagation_weights(&mut tape, s, &adj).unwrap();
    let mask = Arc::new(vec![false, true, true, true, true]);
    let out = propagate(&mut tape, l0, w, &adj, 8, &mask).unwrap();
    let out = tape.value(out);
    for v in [3, 4] {
        assert_eq!(out.row(v), &[1.0 / 3.0; 3]);
    }
    assert!(out.get(2, 1) > 1.0 / 3.0);
}

pub fn seed_masks_skip_labeled_and_isolated() {
    let toy = random_toy(3, 12);
    let inputs = toy.inputs();
    let seed = PropagationSeed::new(&inputs, &[0], &[2]).unwrap();
    for (mask, adj) in seed.update_masks.iter().zip(&inputs.channels) {
        assert!(!mask[0]);
        for v in 1..toy.n {
            assert_eq!(mask[v], adj.degree(v) > 0);
        }
    }
}

#[cfg(test)]
mod cases {
    #[test]
    fn propagation_matches_dense_reference() {
        super::propagation_matches_dense_reference()
    }
    #[test]
    fn labeled_rows_are_clamped() {
        super::labeled_rows_are_clamped()
    }
    #[test]
    fn isolated_unlabeled_neighborhood_stays_uniform() {
        super::isolated_unlabeled_neighborhood_stays_uniform()
    }
    #[test]
    fn seed_masks_skip_labeled_and_isolated() {
        super::seed_masks_skip_labeled_and_isolated()
    }
}
