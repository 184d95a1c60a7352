//! Pretraining and the alternating post-training loop.
//!
//! Θ is the backbone, Ω the auxiliary system. After pretraining Θ on the
//! labeled nodes, each iteration trains Ω against the frozen backbone output
//! and then Θ against the frozen auxiliary output. Every phase keeps the
//! epoch with the best validation Micro-F1 and reloads it before the next.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::auxiliary::{AuxConfig, AuxOutput, AuxSystem, AuxVariant};
use crate::backbone::{Backbone, BackboneConfig, DEFAULT_BACKBONE_HIDDEN};
use crate::data::SplitSet;
use crate::diff::random::{substream, Rng};
use crate::diff::{AdamConfig, AdamState, Bound, ParamStore, Tape, Tensor, Var};
use crate::error::{Error, Result};
use crate::eval::f1_scores;
use crate::global::{LabelMatrix, PropagationSeed, DEFAULT_LAYERS};
use crate::inputs::GraphInputs;
use crate::local::DEFAULT_HIDDEN;
use crate::scalar::Scalar;

pub const BACKBONE_PREFIX: &str = "backbone";
pub const AUX_BACKBONE_PREFIX: &str = "aux_backbone";

/// Distance between two label-distribution matrices, averaged over rows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Distance {
    SqEuclidean,
    Kl,
}

impl Distance {
    pub fn apply<S: Scalar>(self, tape: &mut Tape<S>, p: Var, q: Var) -> Result<Var> {
        match self {
            Distance::SqEuclidean => tape.sq_euclidean(p, q),
            Distance::Kl => tape.kl_divergence(p, q),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Distance::SqEuclidean => "sq-euclidean",
            Distance::Kl => "kl",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "sq-euclidean" => Some(Distance::SqEuclidean),
            "kl" => Some(Distance::Kl),
            _ => None,
        }
    }
}

/// What stands in for the auxiliary system.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Variant {
    Full,
    GlobalOnly,
    LocalOnly,
    /// A second, independently initialized backbone.
    SelfCotrain,
}

impl Variant {
    pub fn name(self) -> &'static str {
        match self {
            Variant::Full => "full",
            Variant::GlobalOnly => "global-only",
            Variant::LocalOnly => "local-only",
            Variant::SelfCotrain => "self-cotrain",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        [Variant::Full, Variant::GlobalOnly, Variant::LocalOnly, Variant::SelfCotrain].into_iter().find(|v| v.name() == s)
    }

    fn aux_variant(self) -> Option<AuxVariant> {
        match self {
            Variant::Full => Some(AuxVariant::Full),
            Variant::GlobalOnly => Some(AuxVariant::GlobalOnly),
            Variant::LocalOnly => Some(AuxVariant::LocalOnly),
            Variant::SelfCotrain => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    /// Weight of the global/local consistency term.
    pub lambda: f64,
    pub iterations: usize,
    /// Epochs per post-training phase.
    pub epochs: usize,
    pub pretrain_epochs: usize,
    pub aux_lr: f64,
    pub aux_weight_decay: f64,
    pub backbone_lr: f64,
    pub backbone_weight_decay: f64,
    pub layers: usize,
    pub local_hidden: usize,
    pub local_dropout: f64,
    pub backbone_hidden: usize,
    pub backbone_dropout: f64,
    pub seed: u64,
    pub system_distance: Distance,
    pub module_distance: Distance,
    pub theta_distance: Distance,
    pub variant: Variant,
    /// Weight of the unlabeled term of the backbone objective; 0 leaves
    /// plain cross-entropy.
    pub unlabeled_weight: f64,
    /// Diagnostic: skip the backbone phases so Θ stays at its pretrained value.
    pub freeze_backbone: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            lambda: 0.3,
            iterations: 5,
            epochs: 150,
            pretrain_epochs: 150,
            aux_lr: 0.01,
            aux_weight_decay: 0.0005,
            backbone_lr: 0.005,
            backbone_weight_decay: 0.0005,
            layers: DEFAULT_LAYERS,
            local_hidden: DEFAULT_HIDDEN,
            local_dropout: 0.5,
            backbone_hidden: DEFAULT_BACKBONE_HIDDEN,
            backbone_dropout: 0.5,
            seed: 0,
            system_distance: Distance::SqEuclidean,
            module_distance: Distance::Kl,
            theta_distance: Distance::Kl,
            variant: Variant::Full,
            unlabeled_weight: 1.0,
            freeze_backbone: false,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return bad(format!("lambda must be a finite non-negative number, got {}", self.lambda));
        }
        if self.epochs == 0 || self.pretrain_epochs == 0 {
            return bad("epochs and pretrain_epochs must be at least 1".into());
        }
        if self.layers == 0 {
            return bad("layers must be at least 1".into());
        }
        if self.local_hidden == 0 || self.backbone_hidden == 0 {
            return bad("hidden sizes must be at least 1".into());
        }
        for (name, lr) in [("aux_lr", self.aux_lr), ("backbone_lr", self.backbone_lr)] {
            if !(lr > 0.0 && lr.is_finite()) {
                return bad(format!("{name} must be positive, got {lr}"));
            }
        }
        for (name, wd) in [("aux_weight_decay", self.aux_weight_decay), ("backbone_weight_decay", self.backbone_weight_decay)] {
            if !(wd >= 0.0 && wd.is_finite()) {
                return bad(format!("{name} must be non-negative, got {wd}"));
            }
        }
        for (name, p) in [("local_dropout", self.local_dropout), ("backbone_dropout", self.backbone_dropout)] {
            if !(0.0..1.0).contains(&p) {
                return bad(format!("{name} must be in [0, 1), got {p}"));
            }
        }
        if !(self.unlabeled_weight >= 0.0 && self.unlabeled_weight.is_finite()) {
            return bad(format!("unlabeled_weight must be non-negative, got {}", self.unlabeled_weight));
        }
        Ok(())
    }

    pub fn backbone_config(&self) -> BackboneConfig {
        BackboneConfig { hidden: self.backbone_hidden, dropout: self.backbone_dropout }
    }
}

/// The auxiliary system or, for self co-training, a second backbone.
#[derive(Clone)]
pub enum Auxiliary<S> {
    System(AuxSystem<S>),
    Backbone(Backbone<S>),
}

impl<S: Scalar> Auxiliary<S> {
    pub fn new(inputs: &GraphInputs<S>, cfg: &TrainConfig) -> Self {
        match cfg.variant.aux_variant() {
            Some(variant) => {
                let aux_cfg =
                    AuxConfig { variant, layers: cfg.layers, hidden: cfg.local_hidden, dropout: cfg.local_dropout };
                Auxiliary::System(AuxSystem::new(inputs, aux_cfg, &mut substream(cfg.seed, "aux.init")))
            }
            None => Auxiliary::Backbone(Backbone::new(
                inputs,
                cfg.backbone_config(),
                AUX_BACKBONE_PREFIX,
                &mut substream(cfg.seed, "aux_backbone.init"),
            )),
        }
    }

    pub fn params(&self) -> &ParamStore<S> {
        match self {
            Auxiliary::System(a) => &a.params,
            Auxiliary::Backbone(b) => &b.params,
        }
    }

    pub fn params_mut(&mut self) -> &mut ParamStore<S> {
        match self {
            Auxiliary::System(a) => &mut a.params,
            Auxiliary::Backbone(b) => &mut b.params,
        }
    }

    pub fn system(&self) -> Option<&AuxSystem<S>> {
        match self {
            Auxiliary::System(a) => Some(a),
            Auxiliary::Backbone(_) => None,
        }
    }

    pub fn forward(
        &self,
        tape: &mut Tape<S>,
        bound: &Bound,
        inputs: &GraphInputs<S>,
        seed: &PropagationSeed<S>,
        dropout_rng: Option<&mut Rng>,
    ) -> Result<AuxOutput> {
        match self {
            Auxiliary::System(a) => a.forward(tape, bound, inputs, seed, dropout_rng),
            Auxiliary::Backbone(b) => {
                let combined = b.forward(tape, bound, inputs, dropout_rng)?;
                Ok(AuxOutput { global: None, local: None, combined })
            }
        }
    }

    pub fn predict(&self, inputs: &GraphInputs<S>, seed: &PropagationSeed<S>) -> Result<LabelMatrix<S>> {
        match self {
            Auxiliary::System(a) => a.predict(inputs, seed),
            Auxiliary::Backbone(b) => b.predict(inputs),
        }
    }
}

/// Scalar objective and its named terms.
pub struct Objective {
    pub total: Var,
    pub terms: Vec<(&'static str, Var)>,
}

/// Ω objective: `D_sys(f, g)` over the unlabeled rows plus
/// `lambda * D_mod(g_global, g_local)` when both modules are present.
/// `f` is the full backbone output and is read as a constant.
#[allow(clippy::too_many_arguments)]
pub fn omega_objective<S: Scalar>(
    tape: &mut Tape<S>,
    f: &Tensor<S>,
    out: &AuxOutput,
    unlabeled: &Arc<Vec<usize>>,
    lambda: f64,
    system: Distance,
    module: Distance,
) -> Result<Objective> {
    if unlabeled.is_empty() {
        return Err(Error::Config("the unlabeled set is empty".into()));
    }
    let f_u = tape.constant(f.select_rows(unlabeled));
    let g_u = tape.gather_rows(out.combined, unlabeled.clone())?;
    let sys = system.apply(tape, f_u, g_u)?;
    let mut terms = vec![("system", sys)];
    let mut total = sys;
    if let (Some(gg), Some(gl)) = (out.global, out.local) {
        let gg_u = tape.gather_rows(gg, unlabeled.clone())?;
        let gl_u = tape.gather_rows(gl, unlabeled.clone())?;
        let m = module.apply(tape, gg_u, gl_u)?;
        terms.push(("module", m));
        let weighted = tape.scale(m, S::lit(lambda));
        total = tape.add(total, weighted)?;
    }
    Ok(Objective { total, terms })
}

/// Θ objective: `unlabeled_weight * D(f, g)` over the unlabeled rows plus
/// cross-entropy of `f` on the labeled rows. `g` is read as a constant;
/// `train_labels[i]` is the class of `labeled[i]`.
pub fn theta_objective<S: Scalar>(
    tape: &mut Tape<S>,
    f: Var,
    g: &Tensor<S>,
    labeled: &Arc<Vec<usize>>,
    train_labels: &Arc<Vec<usize>>,
    unlabeled: &Arc<Vec<usize>>,
    unlabeled_weight: f64,
    distance: Distance,
) -> Result<Objective> {
    if labeled.is_empty() {
        return Err(Error::Config("the labeled set is empty".into()));
    }
    let f_l = tape.gather_rows(f, labeled.clone())?;
    let ce = tape.cross_entropy(f_l, train_labels.clone())?;
    let mut terms = vec![("supervised", ce)];
    let mut total = ce;
    if !unlabeled.is_empty() {
        let f_u = tape.gather_rows(f, unlabeled.clone())?;
        let g_u = tape.constant(g.select_rows(unlabeled));
        let d = distance.apply(tape, f_u, g_u)?;
        terms.push(("consistency", d));
        let weighted = tape.scale(d, S::lit(unlabeled_weight));
        total = tape.add(weighted, total)?;
    }
    Ok(Objective { total, terms })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Pretrain,
    Omega,
    Theta,
}

/// One line of the training log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "record", rename_all = "snake_case")]
pub enum LogRecord {
    Registry {
        component: String,
        params: Vec<String>,
    },
    Epoch {
        iteration: usize,
        phase: Phase,
        epoch: usize,
        objective: f64,
        terms: BTreeMap<String, f64>,
        val_micro_f1: f64,
        val_macro_f1: f64,
    },
    Selection {
        iteration: usize,
        phase: Phase,
        epoch: usize,
        val_micro_f1: f64,
    },
    Final {
        phase: Phase,
        iteration: usize,
        val_micro_f1: f64,
    },
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PhaseLog {
    pub records: Vec<LogRecord>,
}

impl PhaseLog {
    pub fn push(&mut self, r: LogRecord) {
        self.records.push(r);
    }

    pub fn to_jsonl(&self) -> String {
        let mut s = String::new();
        for r in &self.records {
            s.push_str(&serde_json::to_string(r).expect("log records serialize"));
            s.push('\n');
        }
        s
    }

    pub fn from_jsonl(text: &str) -> Result<Self> {
        let records = text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty())
            .map(|(i, l)| serde_json::from_str(l).map_err(|e| Error::Dataset(format!("log line {}: {e}", i + 1))))
            .collect::<Result<_>>()?;
        Ok(PhaseLog { records })
    }

    /// Selected epochs of one phase, in iteration order.
    pub fn selections(&self, phase: Phase) -> Vec<(usize, usize, f64)> {
        self.records
            .iter()
            .filter_map(|r| match r {
                LogRecord::Selection { iteration, phase: p, epoch, val_micro_f1 } if *p == phase => {
                    Some((*iteration, *epoch, *val_micro_f1))
                }
                _ => None,
            })
            .collect()
    }

    /// Epoch records of one phase and iteration.
    pub fn epochs(&self, phase: Phase, iteration: usize) -> Vec<&LogRecord> {
        self.records
            .iter()
            .filter(|r| matches!(r, LogRecord::Epoch { phase: p, iteration: i, .. } if *p == phase && *i == iteration))
            .collect()
    }

    pub fn registries(&self) -> Vec<(&str, &[String])> {
        self.records
            .iter()
            .filter_map(|r| match r {
                LogRecord::Registry { component, params } => Some((component.as_str(), params.as_slice())),
                _ => None,
            })
            .collect()
    }
}

/// Labels the training loop may read: the labeled nodes and their classes.
/// Validation labels are used for model selection only.
pub struct Supervision {
    pub labeled: Arc<Vec<usize>>,
    pub train_labels: Arc<Vec<usize>>,
    pub unlabeled: Arc<Vec<usize>>,
    pub val: Vec<usize>,
    /// Indexed by node; only `val` entries are read.
    val_labels: Vec<usize>,
}

impl Supervision {
    /// `labels[v]` must be `Some` for every training and validation node.
    pub fn new(splits: &SplitSet, labels: &[Option<usize>]) -> Result<Self> {
        let need = |v: usize| labels[v].ok_or_else(|| Error::Dataset(format!("split node {v} has no label")));
        let train_labels = splits.train.iter().map(|&v| need(v)).collect::<Result<Vec<_>>>()?;
        let mut val_labels = vec![0; labels.len()];
        for &v in &splits.val {
            val_labels[v] = need(v)?;
        }
        Ok(Supervision {
            labeled: Arc::new(splits.train.clone()),
            train_labels: Arc::new(train_labels),
            unlabeled: Arc::new(splits.unlabeled()),
            val: splits.val.clone(),
            val_labels,
        })
    }

    pub fn validation_f1<S: Scalar>(&self, pred: &Tensor<S>) -> Result<(f64, f64)> {
        if self.val.is_empty() {
            return Ok((0.0, 0.0));
        }
        let s = f1_scores(pred, &self.val_labels, &self.val)?;
        Ok((s.micro, s.macro_))
    }
}

struct Best<S> {
    epoch: usize,
    micro: f64,
    snapshot: ParamStore<S>,
}

fn finite<S: Scalar>(x: S, what: &str) -> Result<f64> {
    let v = x.to_f64().unwrap_or(f64::NAN);
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Numeric(format!("{what} is {v}")))
    }
}

fn epoch_record<S: Scalar>(
    tape: &Tape<S>,
    obj: &Objective,
    iteration: usize,
    phase: Phase,
    epoch: usize,
    val: (f64, f64),
) -> Result<LogRecord> {
    let objective = finite(tape.value(obj.total).item(), "objective")?;
    let mut terms = BTreeMap::new();
    for (name, v) in &obj.terms {
        terms.insert(name.to_string(), finite(tape.value(*v).item(), name)?);
    }
    Ok(LogRecord::Epoch { iteration, phase, epoch, objective, terms, val_micro_f1: val.0, val_macro_f1: val.1 })
}

/// Runs `epochs` optimization steps, logs each, reloads the best epoch into
/// `params` and returns its validation Micro-F1.
#[allow(clippy::too_many_arguments)]
fn run_phase<S: Scalar>(
    params: &mut ParamStore<S>,
    adam: AdamConfig,
    epochs: usize,
    iteration: usize,
    phase: Phase,
    log: &mut PhaseLog,
    mut step: impl FnMut(&ParamStore<S>, &mut Tape<S>, &Bound) -> Result<Objective>,
    mut evaluate: impl FnMut(&ParamStore<S>) -> Result<(f64, f64)>,
) -> Result<(usize, f64)> {
    let mut opt = AdamState::new(adam, params);
    let mut best: Option<Best<S>> = None;
    for epoch in 0..epochs {
        let mut tape = Tape::new();
        let bound = params.bind(&mut tape, true);
        let obj = step(params, &mut tape, &bound)?;
        finite(tape.value(obj.total).item(), "objective")?;
        let mut grads = tape.backward(obj.total)?;
        params.store_grads(&mut grads, &bound);
        opt.step(params);
        params.clear_grads();
        let val = evaluate(params)?;
        log.push(epoch_record(&tape, &obj, iteration, phase, epoch, val)?);
        if best.as_ref().is_none_or(|b| val.0 > b.micro) {
            best = Some(Best { epoch, micro: val.0, snapshot: params.clone() });
        }
    }
    let best = best.expect("epochs >= 1");
    params.load_values(&best.snapshot);
    log.push(LogRecord::Selection { iteration, phase, epoch: best.epoch, val_micro_f1: best.micro });
    Ok((best.epoch, best.micro))
}

/// Supervised training of the backbone on the labeled nodes; keeps the
/// epoch with the best validation Micro-F1. Returns that F1.
pub fn pretrain<S: Scalar>(
    backbone: &mut Backbone<S>,
    inputs: &GraphInputs<S>,
    sup: &Supervision,
    cfg: &TrainConfig,
    log: &mut PhaseLog,
) -> Result<f64> {
    cfg.validate()?;
    if sup.labeled.is_empty() {
        return Err(Error::Config("the labeled set is empty".into()));
    }
    log.push(LogRecord::Registry { component: "backbone".into(), params: backbone.params.names() });
    let mut rng = substream(cfg.seed, "pretrain.dropout");
    let adam = AdamConfig::new(cfg.backbone_lr, cfg.backbone_weight_decay);
    let model = backbone.clone();
    let (_, micro) = run_phase(
        &mut backbone.params,
        adam,
        cfg.pretrain_epochs,
        0,
        Phase::Pretrain,
        log,
        |_, tape, bound| {
            let f = model.forward(tape, bound, inputs, Some(&mut rng))?;
            let f_l = tape.gather_rows(f, sup.labeled.clone())?;
            let ce = tape.cross_entropy(f_l, sup.train_labels.clone())?;
            Ok(Objective { total: ce, terms: vec![("supervised", ce)] })
        },
        |p| sup.validation_f1(&backbone_output(&model, p, inputs)?),
    )?;
    Ok(micro)
}

/// Evaluation-mode output of `model`'s architecture with the values in `params`.
fn backbone_output<S: Scalar>(model: &Backbone<S>, params: &ParamStore<S>, inputs: &GraphInputs<S>) -> Result<Tensor<S>> {
    let mut tape = Tape::new();
    let bound = params.bind(&mut tape, false);
    let out = model.forward(&mut tape, &bound, inputs, None)?;
    Ok(tape.value(out).clone())
}

/// Outcome of post-training.
pub struct HgpfOutcome<S> {
    /// Best-validation backbone over the post-training iterations (the
    /// pretrained backbone when no backbone phase ran).
    pub backbone: Backbone<S>,
    pub auxiliary: Auxiliary<S>,
    pub backbone_val_micro: f64,
    pub auxiliary_val_micro: f64,
    pub log: PhaseLog,
}

/// Alternating post-training starting from a pretrained backbone.
pub fn post_train<S: Scalar>(
    pretrained: Backbone<S>,
    inputs: &GraphInputs<S>,
    splits: &SplitSet,
    labels: &[Option<usize>],
    cfg: &TrainConfig,
) -> Result<HgpfOutcome<S>> {
    cfg.validate()?;
    let sup = Supervision::new(splits, labels)?;
    if sup.labeled.is_empty() {
        return Err(Error::Config("the labeled set is empty".into()));
    }
    if sup.unlabeled.is_empty() {
        return Err(Error::Config("the unlabeled set is empty".into()));
    }
    let seed = PropagationSeed::new(inputs, &sup.labeled, &sup.train_labels)?;
    let mut backbone = pretrained;
    let mut aux = Auxiliary::new(inputs, cfg);
    let mut log = PhaseLog::default();
    log.push(LogRecord::Registry { component: "backbone".into(), params: backbone.params.names() });
    log.push(LogRecord::Registry { component: "auxiliary".into(), params: aux.params().names() });

    let mut rng = substream(cfg.seed, "posttrain.dropout");
    let aux_adam = AdamConfig::new(cfg.aux_lr, cfg.aux_weight_decay);
    let bb_adam = AdamConfig::new(cfg.backbone_lr, cfg.backbone_weight_decay);
    let mut best_aux: Option<(usize, f64, ParamStore<S>)> = None;
    let mut best_bb: Option<(usize, f64, ParamStore<S>)> = None;
    let mut bb_val = sup.validation_f1(&backbone.predict(inputs)?)?.0;
    let mut aux_val = sup.validation_f1(&aux.predict(inputs, &seed)?)?.0;

    for it in 1..=cfg.iterations {
        // Omega phase against the frozen backbone.
        let f = backbone.predict(inputs)?;
        let model = aux.clone();
        let (_, micro) = run_phase(
            aux.params_mut(),
            aux_adam,
            cfg.epochs,
            it,
            Phase::Omega,
            &mut log,
            |_, tape, bound| {
                let out = model.forward(tape, bound, inputs, &seed, Some(&mut rng))?;
                omega_objective(tape, &f, &out, &sup.unlabeled, cfg.lambda, cfg.system_distance, cfg.module_distance)
            },
            |p| {
                let mut tape = Tape::new();
                let bound = p.bind(&mut tape, false);
                let out = model.forward(&mut tape, &bound, inputs, &seed, None)?;
                sup.validation_f1(tape.value(out.combined))
            },
        )?;
        if best_aux.as_ref().is_none_or(|b| micro > b.1) {
            best_aux = Some((it, micro, aux.params().clone()));
        }

        if cfg.freeze_backbone {
            continue;
        }
        // Theta phase against the frozen auxiliary output.
        let g = aux.predict(inputs, &seed)?;
        let model = backbone.clone();
        let (_, micro) = run_phase(
            &mut backbone.params,
            bb_adam,
            cfg.epochs,
            it,
            Phase::Theta,
            &mut log,
            |_, tape, bound| {
                let f = model.forward(tape, bound, inputs, Some(&mut rng))?;
                theta_objective(
                    tape,
                    f,
                    &g,
                    &sup.labeled,
                    &sup.train_labels,
                    &sup.unlabeled,
                    cfg.unlabeled_weight,
                    cfg.theta_distance,
                )
            },
            |p| sup.validation_f1(&backbone_output(&model, p, inputs)?),
        )?;
        if best_bb.as_ref().is_none_or(|b| micro > b.1) {
            best_bb = Some((it, micro, backbone.params.clone()));
        }
    }

    if let Some((it, micro, params)) = best_aux {
        aux.params_mut().load_values(&params);
        aux_val = micro;
        log.push(LogRecord::Final { phase: Phase::Omega, iteration: it, val_micro_f1: micro });
    }
    if let Some((it, micro, params)) = best_bb {
        backbone.params.load_values(&params);
        bb_val = micro;
        log.push(LogRecord::Final { phase: Phase::Theta, iteration: it, val_micro_f1: micro });
    }
    Ok(HgpfOutcome { backbone, auxiliary: aux, backbone_val_micro: bb_val, auxiliary_val_micro: aux_val, log })
}

/// Pretraining followed by post-training, one seed end to end.
pub struct HgpfRun<S> {
    pub pretrained: Backbone<S>,
    pub pretrain_log: PhaseLog,
    pub outcome: HgpfOutcome<S>,
}

pub fn run_hgpf<S: Scalar>(
    inputs: &GraphInputs<S>,
    splits: &SplitSet,
    labels: &[Option<usize>],
    cfg: &TrainConfig,
) -> Result<HgpfRun<S>> {
    cfg.validate()?;
    let sup = Supervision::new(splits, labels)?;
    let mut backbone = new_backbone(inputs, cfg);
    let mut pretrain_log = PhaseLog::default();
    pretrain(&mut backbone, inputs, &sup, cfg, &mut pretrain_log)?;
    let outcome = post_train(backbone.clone(), inputs, splits, labels, cfg)?;
    Ok(HgpfRun { pretrained: backbone, pretrain_log, outcome })
}

/// A freshly initialized backbone for `cfg.seed`.
pub fn new_backbone<S: Scalar>(inputs: &GraphInputs<S>, cfg: &TrainConfig) -> Backbone<S> {
    Backbone::new(inputs, cfg.backbone_config(), BACKBONE_PREFIX, &mut substream(cfg.seed, "backbone.init"))
}
