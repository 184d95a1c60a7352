//! The auxiliary predictor: global and local modules mixed per node by a
//! sigmoid gate.

use serde::{Deserialize, Serialize};

use crate::diff::random::Rng;
use crate::diff::{Bound, ParamId, ParamStore, Tape, Tensor, Var};
use crate::error::Result;
use crate::global::{GlobalModule, LabelMatrix, PropagationSeed};
use crate::inputs::GraphInputs;
use crate::local::LocalModule;
use crate::scalar::Scalar;

/// Which modules the auxiliary system contains.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AuxVariant {
    Full,
    GlobalOnly,
    LocalOnly,
}

impl AuxVariant {
    pub fn has_global(self) -> bool {
        matches!(self, AuxVariant::Full | AuxVariant::GlobalOnly)
    }

    pub fn has_local(self) -> bool {
        matches!(self, AuxVariant::Full | AuxVariant::LocalOnly)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AuxConfig {
    pub variant: AuxVariant,
    pub layers: usize,
    pub hidden: usize,
    pub dropout: f64,
}

#[derive(Clone)]
pub struct AuxSystem<S> {
    pub params: ParamStore<S>,
    pub config: AuxConfig,
    pub global: Option<GlobalModule>,
    pub local: Option<LocalModule>,
    /// `n_target x 1` logits of the global/local gate (full variant only).
    pub gate_logits: Option<ParamId>,
}

pub struct AuxOutput {
    pub global: Option<Var>,
    pub local: Option<Var>,
    pub combined: Var,
}

impl<S: Scalar> AuxSystem<S> {
    pub fn new(inputs: &GraphInputs<S>, config: AuxConfig, rng: &mut Rng) -> Self {
        let mut params = ParamStore::new();
        let global = config.variant.has_global().then(|| GlobalModule::register(&mut params, inputs, config.layers));
        let local = config
            .variant
            .has_local()
            .then(|| LocalModule::register(&mut params, inputs, config.hidden, config.dropout, rng));
        let gate_logits = (config.variant == AuxVariant::Full)
            .then(|| params.add("aux.gate_logits", Tensor::zeros(inputs.n_target(), 1), false));
        AuxSystem { params, config, global, local, gate_logits }
    }

    pub fn forward(
        &self,
        tape: &mut Tape<S>,
        bound: &Bound,
        inputs: &GraphInputs<S>,
        seed: &PropagationSeed<S>,
        dropout_rng: Option<&mut Rng>,
    ) -> Result<AuxOutput> {
        let global = match &self.global {
            Some(g) => Some(g.forward(tape, bound, inputs, seed)?.combined),
            None => None,
        };
        let local = match &self.local {
            Some(l) => Some(l.forward(tape, bound, inputs, dropout_rng)?.combined),
            None => None,
        };
        let combined = match (global, local, self.gate_logits) {
            (Some(g), Some(l), Some(gate)) => {
                let gamma = tape.sigmoid(bound[gate]);
                tape.convex_combine(g, l, gamma)?
            }
            (Some(g), None, _) => g,
            (None, Some(l), _) => l,
            _ => unreachable!("variant has at least one module"),
        };
        Ok(AuxOutput { global, local, combined })
    }

    /// Evaluation-mode output (no dropout).
    pub fn predict(&self, inputs: &GraphInputs<S>, seed: &PropagationSeed<S>) -> Result<LabelMatrix<S>> {
        let mut tape = Tape::new();
        let bound = self.params.bind(&mut tape, false);
        let out = self.forward(&mut tape, &bound, inputs, seed, None)?;
        Ok(tape.value(out.combined).clone())
    }

    /// Evaluation-mode outputs of `(global, local, combined)`.
    pub fn predict_all(
        &self,
        inputs: &GraphInputs<S>,
        seed: &PropagationSeed<S>,
    ) -> Result<(Option<LabelMatrix<S>>, Option<LabelMatrix<S>>, LabelMatrix<S>)> {
        let mut tape = Tape::new();
        let bound = self.params.bind(&mut tape, false);
        let out = self.forward(&mut tape, &bound, inputs, seed, None)?;
        let get = |v: Option<Var>| v.map(|v| tape.value(v).clone());
        Ok((get(out.global), get(out.local), tape.value(out.combined).clone()))
    }
}
