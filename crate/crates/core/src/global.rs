//! Global inference module: multi-channel label propagation.
//!
//! Each meta-path is an independent channel. Labels start as one-hot rows
//! for labeled nodes and uniform rows elsewhere, then diffuse for `K` layers
//! along the channel's adjacency with learned, per-destination softmax-normalized
//! edge intensities. Labeled rows never change. Channels are recombined per
//! node with softmax-normalized channel logits.

use std::sync::Arc;

use crate::csr::Csr;
use crate::diff::{Bound, ParamId, ParamStore, Tape, Tensor, Var};
use crate::error::{Error, Result};
use crate::inputs::GraphInputs;
use crate::scalar::Scalar;

/// Rows are label distributions over target nodes.
pub type LabelMatrix<S> = Tensor<S>;

pub const DEFAULT_LAYERS: usize = 8;

/// Initial label matrix: one-hot rows for `labeled`, uniform elsewhere.
/// `labels[i]` is the class of `labeled[i]`.
pub fn init_labels<S: Scalar>(
    n_nodes: usize,
    labeled: &[usize],
    labels: &[usize],
    num_classes: usize,
) -> Result<LabelMatrix<S>> {
    if labeled.len() != labels.len() {
        return Err(Error::Dataset(format!("{} labeled nodes with {} labels", labeled.len(), labels.len())));
    }
    let mut l = Tensor::filled(n_nodes, num_classes, S::one() / S::lit(num_classes as f64));
    for (&v, &y) in labeled.iter().zip(labels) {
        if y >= num_classes {
            return Err(Error::Dataset(format!("label {y} of node {v} is outside {num_classes} classes")));
        }
        let row = l.row_mut(v);
        row.fill(S::zero());
        row[y] = S::one();
    }
    Ok(l)
}

/// Fixed inputs of one propagation run, derived from the labeled set only.
#[derive(Debug, Clone)]
pub struct PropagationSeed<S> {
    pub initial: LabelMatrix<S>,
    /// Per channel: rows rewritten at every layer (unlabeled with a
    /// non-empty neighborhood).
    pub update_masks: Vec<Arc<Vec<bool>>>,
}

impl<S: Scalar> PropagationSeed<S> {
    /// `labels[i]` is the class of `labeled[i]`; no other label is read.
    pub fn new(inputs: &GraphInputs<S>, labeled: &[usize], labels: &[usize]) -> Result<Self> {
        let n = inputs.n_target();
        let initial = init_labels(n, labeled, labels, inputs.num_classes)?;
        let mut is_labeled = vec![false; n];
        for &v in labeled {
            is_labeled[v] = true;
        }
        let update_masks = inputs
            .channels
            .iter()
            .map(|csr| Arc::new((0..n).map(|v| !is_labeled[v] && csr.degree(v) > 0).collect()))
            .collect();
        Ok(PropagationSeed { initial, update_masks })
    }
}

/// Softmax of the intensity logits over each destination's neighbors.
pub fn propagation_weights<S: Scalar>(tape: &mut Tape<S>, logits: Var, adj: &Arc<Csr>) -> Result<Var> {
    tape.segment_softmax(logits, adj.clone())
}

/// `K` propagation layers. Rows outside `update_mask` keep their value.
pub fn propagate<S: Scalar>(
    tape: &mut Tape<S>,
    initial: Var,
    weights: Var,
    adj: &Arc<Csr>,
    layers: usize,
    update_mask: &Arc<Vec<bool>>,
) -> Result<Var> {
    if layers == 0 {
        return Err(Error::Config("propagation needs at least one layer".into()));
    }
    let mut cur = initial;
    for _ in 0..layers {
        let spread = tape.segment_weighted_sum(weights, cur, adj.clone())?;
        cur = tape.select_rows(spread, cur, update_mask.clone())?;
    }
    Ok(cur)
}

/// `sum_P alpha[v, P] * channel_P[v]` with `alpha = row_softmax(channel_logits)`.
pub fn combine_channels<S: Scalar>(tape: &mut Tape<S>, channel_logits: Var, channels: &[Var]) -> Result<Var> {
    let p = tape.value(channel_logits).cols();
    if p != channels.len() || channels.is_empty() {
        return Err(Error::shape("combine_channels", format!("{} channel logits for {} channels", p, channels.len())));
    }
    let alpha = tape.row_softmax(channel_logits);
    let mut out: Option<Var> = None;
    for (i, &c) in channels.iter().enumerate() {
        let a = tape.column(alpha, i)?;
        let term = tape.row_scale(c, a)?;
        out = Some(match out {
            None => term,
            Some(acc) => tape.add(acc, term)?,
        });
    }
    Ok(out.expect("non-empty"))
}

/// Parameter handles of the global module inside an auxiliary store.
#[derive(Debug, Clone)]
pub struct GlobalModule {
    /// One `nnz x 1` logit column per channel, aligned with the channel CSR.
    pub intensity: Vec<ParamId>,
    /// `n_target x channels` channel logits.
    pub channel_logits: ParamId,
    pub layers: usize,
}

pub struct GlobalOutput {
    pub channels: Vec<Var>,
    pub combined: Var,
}

impl GlobalModule {
    /// All logits start at zero: uniform propagation and uniform channels.
    pub fn register<S: Scalar>(store: &mut ParamStore<S>, inputs: &GraphInputs<S>, layers: usize) -> Self {
        let intensity = inputs
            .channels
            .iter()
            .zip(&inputs.metapaths)
            .map(|(csr, mp)| store.add(format!("global.intensity.{}", mp.name()), Tensor::zeros(csr.nnz(), 1), false))
            .collect();
        let channel_logits =
            store.add("global.channel_logits", Tensor::zeros(inputs.n_target(), inputs.num_channels()), false);
        GlobalModule { intensity, channel_logits, layers }
    }

    pub fn forward<S: Scalar>(
        &self,
        tape: &mut Tape<S>,
        bound: &Bound,
        inputs: &GraphInputs<S>,
        seed: &PropagationSeed<S>,
    ) -> Result<GlobalOutput> {
        let initial = tape.constant(seed.initial.clone());
        let mut channels = Vec::with_capacity(inputs.num_channels());
        for (c, adj) in inputs.channels.iter().enumerate() {
            let w = propagation_weights(tape, bound[self.intensity[c]], adj)?;
            channels.push(propagate(tape, initial, w, adj, self.layers, &seed.update_masks[c])?);
        }
        let combined = combine_channels(tape, bound[self.channel_logits], &channels)?;
        Ok(GlobalOutput { channels, combined })
    }
}
