//! Local inference module.
//!
//! Every node, of any type, is projected into a shared hidden space by a
//! type-specific matrix and then into the label space by a shared two-layer
//! perceptron. A target node's prediction mixes its own distribution with
//! the mean distribution of its schema neighbors through a per-node gate.

use std::sync::Arc;

use crate::diff::random::{dropout_mask, xavier_normal, Rng};
use crate::diff::{Bound, ParamId, ParamStore, Tape, Tensor, Var};
use crate::error::Result;
use crate::inputs::GraphInputs;
use crate::scalar::Scalar;

pub const DEFAULT_HIDDEN: usize = 128;

#[derive(Debug, Clone)]
pub struct LocalModule {
    /// `feature_dim x hidden` per node type.
    pub projections: Vec<ParamId>,
    pub w1: ParamId,
    pub b1: ParamId,
    pub w2: ParamId,
    pub b2: ParamId,
    /// `n_target x 1` gate logits; the gate is their sigmoid.
    pub gate_logits: ParamId,
    pub dropout: f64,
    schema_weights: Arc<Vec<f64>>,
    nonempty: Arc<Vec<bool>>,
}

pub struct LocalOutput {
    /// Label distribution of every node, global index order.
    pub projected: Var,
    pub combined: Var,
}

impl LocalModule {
    pub fn register<S: Scalar>(
        store: &mut ParamStore<S>,
        inputs: &GraphInputs<S>,
        hidden: usize,
        dropout: f64,
        rng: &mut Rng,
    ) -> Self {
        let hin = &inputs.hin;
        let projections = (0..hin.types().len())
            .map(|t| {
                let w = xavier_normal(&[inputs.features.dim(t), hidden], rng);
                store.add(format!("local.projection.{}", hin.types()[t].name), w, true)
            })
            .collect();
        let c = inputs.num_classes;
        let w1 = store.add("local.mlp.w1", xavier_normal(&[hidden, hidden], rng), true);
        let b1 = store.add("local.mlp.b1", Tensor::zeros(1, hidden), true);
        let w2 = store.add("local.mlp.w2", xavier_normal(&[hidden, c], rng), true);
        let b2 = store.add("local.mlp.b2", Tensor::zeros(1, c), true);
        let gate_logits = store.add("local.gate_logits", Tensor::zeros(inputs.n_target(), 1), false);
        let csr = &inputs.schema_csr;
        let mut weights = Vec::with_capacity(csr.nnz());
        for v in 0..csr.n_rows() {
            let d = csr.degree(v);
            weights.extend(std::iter::repeat_n(1.0 / d as f64, d));
        }
        let nonempty = Arc::new((0..csr.n_rows()).map(|v| csr.degree(v) > 0).collect());
        LocalModule {
            projections,
            w1,
            b1,
            w2,
            b2,
            gate_logits,
            dropout,
            schema_weights: Arc::new(weights),
            nonempty,
        }
    }

    /// Hidden vectors of all nodes, stacked in global index order.
    pub fn project_features<S: Scalar>(&self, tape: &mut Tape<S>, bound: &Bound, inputs: &GraphInputs<S>) -> Result<Var> {
        let parts = self
            .projections
            .iter()
            .enumerate()
            .map(|(t, &id)| tape.sparse_matmul(inputs.features.of_type(t).clone(), bound[id]))
            .collect::<Result<Vec<_>>>()?;
        tape.concat_rows(&parts)
    }

    /// `softmax(MLP(h))` row by row. Dropout on the perceptron's hidden layer
    /// when an rng is supplied.
    pub fn label_project<S: Scalar>(
        &self,
        tape: &mut Tape<S>,
        bound: &Bound,
        hidden: Var,
        dropout_rng: Option<&mut Rng>,
    ) -> Result<Var> {
        let z = tape.matmul(hidden, bound[self.w1])?;
        let z = tape.add_row(z, bound[self.b1])?;
        let mut z = tape.relu(z);
        if let Some(rng) = dropout_rng {
            if self.dropout > 0.0 {
                let [r, c] = tape.value(z).shape();
                z = tape.mul_const(z, Arc::new(dropout_mask(r, c, self.dropout, rng)))?;
            }
        }
        let logits = tape.matmul(z, bound[self.w2])?;
        let logits = tape.add_row(logits, bound[self.b2])?;
        Ok(tape.row_softmax(logits))
    }

    /// `beta_v p_v + (1 - beta_v) mean_{u in N_v} p_u`; `p_v` alone when `N_v` is empty.
    pub fn local_predict<S: Scalar>(
        &self,
        tape: &mut Tape<S>,
        bound: &Bound,
        inputs: &GraphInputs<S>,
        projected: Var,
    ) -> Result<Var> {
        let hin = &inputs.hin;
        let offset = hin.type_offset(hin.target_type());
        let own_rows = Arc::new((offset..offset + inputs.n_target()).collect::<Vec<_>>());
        let own = tape.gather_rows(projected, own_rows)?;
        let weights = tape.constant(Tensor::column(self.schema_weights.iter().map(|&w| S::lit(w)).collect()));
        let mean = tape.segment_weighted_sum(weights, projected, inputs.schema_csr.clone())?;
        let beta = tape.sigmoid(bound[self.gate_logits]);
        let mixed = tape.convex_combine(own, mean, beta)?;
        tape.select_rows(mixed, own, self.nonempty.clone())
    }

    pub fn forward<S: Scalar>(
        &self,
        tape: &mut Tape<S>,
        bound: &Bound,
        inputs: &GraphInputs<S>,
        dropout_rng: Option<&mut Rng>,
    ) -> Result<LocalOutput> {
        let hidden = self.project_features(tape, bound, inputs)?;
        let projected = self.label_project(tape, bound, hidden, dropout_rng)?;
        let combined = self.local_predict(tape, bound, inputs, projected)?;
        Ok(LocalOutput { projected, combined })
    }
}
