//! Built-in heterogeneous graph network used as the black-box backbone.
//!
//! A single meta-path attention layer: target features are projected, each
//! meta-path channel aggregates neighbors with additive attention, channel
//! summaries are mixed per node by semantic attention, and a linear read-out
//! with row softmax gives label distributions. The receptive field is one
//! meta-path hop.

use std::sync::Arc;

use crate::diff::random::{dropout_mask, xavier_normal, Rng};
use crate::diff::{Bound, ParamId, ParamStore, Tape, Tensor, Var};
use crate::error::Result;
use crate::global::LabelMatrix;
use crate::inputs::GraphInputs;
use crate::scalar::Scalar;

pub const LEAKY_SLOPE: f64 = 0.05;
pub const DEFAULT_BACKBONE_HIDDEN: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BackboneConfig {
    pub hidden: usize,
    pub dropout: f64,
}

impl Default for BackboneConfig {
    fn default() -> Self {
        BackboneConfig { hidden: DEFAULT_BACKBONE_HIDDEN, dropout: 0.5 }
    }
}

#[derive(Clone)]
pub struct Backbone<S> {
    pub params: ParamStore<S>,
    pub config: BackboneConfig,
    pub projection: ParamId,
    pub att_src: Vec<ParamId>,
    pub att_dst: Vec<ParamId>,
    pub semantic: ParamId,
    pub out_w: ParamId,
    pub out_b: ParamId,
    nonempty: Vec<Arc<Vec<bool>>>,
}

impl<S: Scalar> Backbone<S> {
    /// Parameter names are prefixed with `prefix` so that two backbones have
    /// disjoint registries.
    pub fn new(inputs: &GraphInputs<S>, config: BackboneConfig, prefix: &str, rng: &mut Rng) -> Self {
        let mut params = ParamStore::new();
        let hin = &inputs.hin;
        let t = hin.target_type();
        let h = config.hidden;
        let projection =
            params.add(format!("{prefix}.projection.{}", hin.types()[t].name), xavier_normal(&[inputs.features.dim(t), h], rng), true);
        let mut att_src = Vec::new();
        let mut att_dst = Vec::new();
        for mp in &inputs.metapaths {
            att_src.push(params.add(format!("{prefix}.attention_src.{}", mp.name()), xavier_normal(&[h, 1], rng), true));
            att_dst.push(params.add(format!("{prefix}.attention_dst.{}", mp.name()), xavier_normal(&[h, 1], rng), true));
        }
        let semantic = params.add(format!("{prefix}.semantic"), xavier_normal(&[h, 1], rng), true);
        let out_w = params.add(format!("{prefix}.out.w"), xavier_normal(&[h, inputs.num_classes], rng), true);
        let out_b = params.add(format!("{prefix}.out.b"), Tensor::zeros(1, inputs.num_classes), true);
        let n = inputs.n_target();
        let nonempty = inputs.channels.iter().map(|c| Arc::new((0..n).map(|v| c.degree(v) > 0).collect())).collect();
        Backbone { params, config, projection, att_src, att_dst, semantic, out_w, out_b, nonempty }
    }

    /// Attention-weighted neighbor summary of one channel; isolated nodes
    /// fall back to their own hidden vector.
    pub fn channel_summary(
        &self,
        tape: &mut Tape<S>,
        bound: &Bound,
        inputs: &GraphInputs<S>,
        hidden: Var,
        channel: usize,
        mut dropout_rng: Option<&mut Rng>,
    ) -> Result<Var> {
        let adj = &inputs.channels[channel];
        let src = tape.matmul(hidden, bound[self.att_src[channel]])?;
        let dst = tape.matmul(hidden, bound[self.att_dst[channel]])?;
        let src_e = tape.gather_rows(src, Arc::new(adj.indices().to_vec()))?;
        let dst_e = tape.gather_rows(dst, Arc::new(adj.entry_rows()))?;
        let score = tape.add(src_e, dst_e)?;
        let score = tape.leaky_relu(score, S::lit(LEAKY_SLOPE));
        let mut att = tape.segment_softmax(score, adj.clone())?;
        if let Some(rng) = dropout_rng.as_deref_mut() {
            if self.config.dropout > 0.0 {
                att = tape.mul_const(att, Arc::new(dropout_mask(adj.nnz(), 1, self.config.dropout, rng)))?;
            }
        }
        let agg = tape.segment_weighted_sum(att, hidden, adj.clone())?;
        tape.select_rows(agg, hidden, self.nonempty[channel].clone())
    }

    pub fn forward(
        &self,
        tape: &mut Tape<S>,
        bound: &Bound,
        inputs: &GraphInputs<S>,
        mut dropout_rng: Option<&mut Rng>,
    ) -> Result<Var> {
        let features = inputs.features.of_type(inputs.hin.target_type()).clone();
        let mut hidden = tape.sparse_matmul(features, bound[self.projection])?;
        let rate = self.config.dropout;
        if let Some(rng) = dropout_rng.as_deref_mut() {
            if rate > 0.0 {
                let [r, c] = tape.value(hidden).shape();
                hidden = tape.mul_const(hidden, Arc::new(dropout_mask(r, c, rate, rng)))?;
            }
        }
        let mut summaries = Vec::with_capacity(inputs.num_channels());
        let mut scores = Vec::with_capacity(inputs.num_channels());
        for c in 0..inputs.num_channels() {
            let z = self.channel_summary(tape, bound, inputs, hidden, c, dropout_rng.as_deref_mut())?;
            scores.push(tape.matmul(z, bound[self.semantic])?);
            summaries.push(z);
        }
        let scores = tape.concat_cols(&scores)?;
        let mix = tape.row_softmax(scores);
        let mut acc = hidden;
        for (c, &z) in summaries.iter().enumerate() {
            let w = tape.column(mix, c)?;
            let term = tape.row_scale(z, w)?;
            acc = tape.add(acc, term)?;
        }
        let mut act = tape.relu(acc);
        if let Some(rng) = dropout_rng {
            if rate > 0.0 {
                let [r, c] = tape.value(act).shape();
                act = tape.mul_const(act, Arc::new(dropout_mask(r, c, rate, rng)))?;
            }
        }
        let logits = tape.matmul(act, bound[self.out_w])?;
        let logits = tape.add_row(logits, bound[self.out_b])?;
        Ok(tape.row_softmax(logits))
    }

    /// Evaluation-mode label distributions.
    pub fn predict(&self, inputs: &GraphInputs<S>) -> Result<LabelMatrix<S>> {
        let mut tape = Tape::new();
        let bound = self.params.bind(&mut tape, false);
        let out = self.forward(&mut tape, &bound, inputs, None)?;
        Ok(tape.value(out).clone())
    }
}
