//! Run configuration: defaults, `key = value` files and flag overrides.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use hgpf::data::kv;
use hgpf::train::{Distance, TrainConfig, Variant};
use hgpf::{Error, Result};

/// Which trained system `eval` and `diagnose` score.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EvalTarget {
    Backbone,
    Auxiliary,
}

impl EvalTarget {
    pub fn name(self) -> &'static str {
        match self {
            EvalTarget::Backbone => "backbone",
            EvalTarget::Auxiliary => "auxiliary",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub dataset: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub train: TrainConfig,
    pub train_per_class: usize,
    pub val_per_class: usize,
    /// Split file to use instead of sampling one from the seed.
    pub splits: Option<PathBuf>,
    pub eval_target: EvalTarget,
    pub receptive_hops: usize,
    /// Meta-paths to use; all declared ones when empty.
    pub metapaths: Vec<String>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            dataset: None,
            out: None,
            train: TrainConfig::default(),
            train_per_class: 20,
            val_per_class: hgpf::data::DEFAULT_VAL_PER_CLASS,
            splits: None,
            eval_target: EvalTarget::Auxiliary,
            receptive_hops: 1,
            metapaths: Vec::new(),
        }
    }
}

/// Every configurable key, in the order of the resolved echo.
pub const KEYS: &[&str] = &[
    "dataset",
    "out",
    "seed",
    "lambda",
    "iterations",
    "epochs",
    "pretrain-epochs",
    "aux-lr",
    "aux-weight-decay",
    "backbone-lr",
    "backbone-weight-decay",
    "layers",
    "local-hidden",
    "local-dropout",
    "backbone-hidden",
    "backbone-dropout",
    "system-distance",
    "module-distance",
    "theta-distance",
    "variant",
    "unlabeled-weight",
    "freeze-backbone",
    "train-per-class",
    "val-per-class",
    "splits",
    "eval-target",
    "receptive-hops",
    "metapaths",
];

fn num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value.parse().map_err(|_| Error::Config(format!("{key}: cannot parse {value:?}")))
}

fn distance(key: &str, value: &str) -> Result<Distance> {
    Distance::parse(value).ok_or_else(|| Error::Config(format!("{key}: expected sq-euclidean or kl, got {value:?}")))
}

impl RunConfig {
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let t = &mut self.train;
        match key {
            "dataset" => self.dataset = Some(value.into()),
            "out" => self.out = Some(value.into()),
            "seed" => t.seed = num(key, value)?,
            "lambda" => t.lambda = num(key, value)?,
            "iterations" => t.iterations = num(key, value)?,
            "epochs" => t.epochs = num(key, value)?,
            "pretrain-epochs" => t.pretrain_epochs = num(key, value)?,
            "aux-lr" => t.aux_lr = num(key, value)?,
            "aux-weight-decay" => t.aux_weight_decay = num(key, value)?,
            "backbone-lr" => t.backbone_lr = num(key, value)?,
            "backbone-weight-decay" => t.backbone_weight_decay = num(key, value)?,
            "layers" => t.layers = num(key, value)?,
            "local-hidden" => t.local_hidden = num(key, value)?,
            "local-dropout" => t.local_dropout = num(key, value)?,
            "backbone-hidden" => t.backbone_hidden = num(key, value)?,
            "backbone-dropout" => t.backbone_dropout = num(key, value)?,
            "system-distance" => t.system_distance = distance(key, value)?,
            "module-distance" => t.module_distance = distance(key, value)?,
            "theta-distance" => t.theta_distance = distance(key, value)?,
            "variant" => {
                t.variant = Variant::parse(value).ok_or_else(|| {
                    Error::Config(format!("variant: expected full, global-only, local-only or self-cotrain, got {value:?}"))
                })?
            }
            "unlabeled-weight" => t.unlabeled_weight = num(key, value)?,
            "freeze-backbone" => t.freeze_backbone = num(key, value)?,
            "train-per-class" => self.train_per_class = num(key, value)?,
            "val-per-class" => self.val_per_class = num(key, value)?,
            "splits" => self.splits = Some(value.into()),
            "eval-target" => {
                self.eval_target = match value {
                    "backbone" => EvalTarget::Backbone,
                    "auxiliary" => EvalTarget::Auxiliary,
                    _ => return Err(Error::Config(format!("eval-target: expected backbone or auxiliary, got {value:?}"))),
                }
            }
            "receptive-hops" => self.receptive_hops = num(key, value)?,
            "metapaths" => self.metapaths = value.split(',').map(str::trim).filter(|s| !s.is_empty()).map(String::from).collect(),
            _ => return Err(Error::Config(format!("unknown configuration key {key:?}"))),
        }
        Ok(())
    }

    pub fn get(&self, key: &str) -> String {
        let t = &self.train;
        let path = |p: &Option<PathBuf>| p.as_ref().map_or(String::new(), |p| p.display().to_string());
        match key {
            "dataset" => path(&self.dataset),
            "out" => path(&self.out),
            "seed" => t.seed.to_string(),
            "lambda" => t.lambda.to_string(),
            "iterations" => t.iterations.to_string(),
            "epochs" => t.epochs.to_string(),
            "pretrain-epochs" => t.pretrain_epochs.to_string(),
            "aux-lr" => t.aux_lr.to_string(),
            "aux-weight-decay" => t.aux_weight_decay.to_string(),
            "backbone-lr" => t.backbone_lr.to_string(),
            "backbone-weight-decay" => t.backbone_weight_decay.to_string(),
            "layers" => t.layers.to_string(),
            "local-hidden" => t.local_hidden.to_string(),
            "local-dropout" => t.local_dropout.to_string(),
            "backbone-hidden" => t.backbone_hidden.to_string(),
            "backbone-dropout" => t.backbone_dropout.to_string(),
            "system-distance" => t.system_distance.name().into(),
            "module-distance" => t.module_distance.name().into(),
            "theta-distance" => t.theta_distance.name().into(),
            "variant" => t.variant.name().into(),
            "unlabeled-weight" => t.unlabeled_weight.to_string(),
            "freeze-backbone" => t.freeze_backbone.to_string(),
            "train-per-class" => self.train_per_class.to_string(),
            "val-per-class" => self.val_per_class.to_string(),
            "splits" => path(&self.splits),
            "eval-target" => self.eval_target.name().into(),
            "receptive-hops" => self.receptive_hops.to_string(),
            "metapaths" => self.metapaths.join(","),
            _ => unreachable!("unknown key {key}"),
        }
    }

    /// Defaults, then the file (if any), then the flags.
    pub fn resolve(file: Option<&Path>, flags: &[(&str, Option<String>)]) -> Result<Self> {
        let mut cfg = RunConfig::default();
        if let Some(path) = file {
            let text = fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
            let entries = kv::parse(&text, path).map_err(|e| Error::Config(e.to_string()))?;
            for e in entries {
                cfg.set(&e.key, &e.value).map_err(|err| Error::Config(format!("{}:{}: {err}", path.display(), e.line)))?;
            }
        }
        for (key, value) in flags {
            if let Some(v) = value {
                cfg.set(key, v)?;
            }
        }
        cfg.train.validate()?;
        if cfg.receptive_hops == 0 {
            return Err(Error::Config("receptive-hops must be at least 1".into()));
        }
        Ok(cfg)
    }

    /// The fully expanded configuration in the same `key = value` format.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for k in KEYS {
            let _ = writeln!(s, "{k} = {}", self.get(k));
        }
        s
    }

    pub fn dataset(&self) -> Result<&Path> {
        self.dataset.as_deref().ok_or_else(|| Error::Config("--dataset is required".into()))
    }

    pub fn out(&self) -> Result<&Path> {
        self.out.as_deref().ok_or_else(|| Error::Config("--out is required".into()))
    }

    pub fn metapath_filter(&self) -> Option<&[String]> {
        (!self.metapaths.is_empty()).then_some(self.metapaths.as_slice())
    }
}
