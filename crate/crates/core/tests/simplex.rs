mod common;

use common::*;
use hgpf::diff::random::{rng, xavier_normal};
use hgpf::global::{propagate, propagation_weights, PropagationSeed};
use hgpf::train::{new_backbone, Auxiliary, TrainConfig};
use hgpf::{ParamStore, Tape};
use rand::Rng as _;

const TOL: f64 = 1e-9;

fn scramble(store: &mut ParamStore, seed: u64, scale: f64) {
    for (i, p) in store.iter_mut().enumerate() {
        let [r, c] = p.value.shape();
        p.value = xavier_normal::<f64>(&[r, c], &mut rng(seed * 1000 + i as u64)).map(|x| x * scale * 10.0);
    }
}

pub fn every_output_is_row_stochastic() {
    for setting in 0..1000u64 {
        let toy = random_toy(setting % 97, 12);
        let inputs = toy.inputs();
        let mut r = rng(setting);
        let scale = [0.1, 1.0, 5.0][(setting % 3) as usize];
        let labeled: Vec<usize> = (0..toy.n).filter(|_| r.random_bool(0.4)).collect();
        let labels: Vec<usize> = labeled.iter().map(|_| r.random_range(0..3)).collect();
        let seed = PropagationSeed::new(&inputs, &labeled, &labels).unwrap();
        let cfg = TrainConfig { local_hidden: 6, backbone_hidden: 5, layers: r.random_range(1..=6), seed: setting, ..TrainConfig::default() };

        let Auxiliary::System(mut aux) = Auxiliary::new(&inputs, &cfg) else { unreachable!() };
        scramble(&mut aux.params, setting, scale);
        let (g, l, combined) = aux.predict_all(&inputs, &seed).unwrap();
        assert_row_stochastic(&g.unwrap(), TOL, "global");
        assert_row_stochastic(&l.unwrap(), TOL, "local");
        assert_row_stochastic(&combined, TOL, "auxiliary");

        // Every intermediate layer of every channel.
        let global = aux.global.as_ref().unwrap();
        let mut tape = Tape::new();
        let bound = aux.params.bind(&mut tape, false);
        let init = tape.constant(seed.initial.clone());
        for (c, adj) in inputs.channels.iter().enumerate() {
            let w = propagation_weights(&mut tape, bound[global.intensity[c]], adj).unwrap();
            for k in 1..=cfg.layers {
                let out = propagate(&mut tape, init, w, adj, k, &seed.update_masks[c]).unwrap();
                assert_row_stochastic(tape.value(out), TOL, "channel layer");
            }
        }

        let mut bb = new_backbone(&inputs, &cfg);
        scramble(&mut bb.params, setting + 5000, scale);
        assert_row_stochastic(&bb.predict(&inputs).unwrap(), TOL, "backbone");
    }
}

#[cfg(test)]
mod cases {
    #[test]
    fn every_output_is_row_stochastic() {
        super::every_output_is_row_stochastic()
    }
}
