//! Command-line driver: pretraining, post-training, evaluation and
//! diagnostics over dataset directories.

pub mod commands;
pub mod config;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use hgpf::{ErrorKind, Result};

use crate::config::RunConfig;

#[derive(Debug, Parser)]
#[command(name = "hgpf", version, about = "Post-training of heterogeneous graph neural networks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train the backbone on the labeled nodes.
    Pretrain(ConfigArgs),
    /// Alternate auxiliary and backbone training from a pretrained backbone.
    Posttrain {
        #[command(flatten)]
        config: ConfigArgs,
        /// Pretrained backbone; defaults to <out>/backbone.ckpt.
        #[arg(long)]
        checkpoint: Option<PathBuf>,
    },
    /// Score a checkpoint on the test split.
    Eval {
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long)]
        checkpoint: Option<PathBuf>,
    },
    /// Compare a checkpoint with a baseline on the hard-node groups.
    Diagnose {
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        /// Defaults to the pretrained backbone <out>/backbone.ckpt.
        #[arg(long)]
        baseline: Option<PathBuf>,
    },
    /// Sample stratified train/validation/test splits.
    MakeSplits(ConfigArgs),
    /// Write a synthetic dataset directory.
    GenToy {
        /// acm, dblp, tiny-acm or tiny-dblp.
        #[arg(long, default_value = "tiny-acm")]
        kind: String,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

/// One flag per configuration key; unset flags fall back to the config
/// file, then to the defaults.
#[derive(Debug, Clone, Default, Args)]
pub struct ConfigArgs {
    /// `key = value` file with the same keys as the flags.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub dataset: Option<String>,
    #[arg(long)]
    pub out: Option<String>,
    #[arg(long)]
    pub seed: Option<String>,
    #[arg(long)]
    pub lambda: Option<String>,
    #[arg(long)]
    pub iterations: Option<String>,
    #[arg(long)]
    pub epochs: Option<String>,
    #[arg(long)]
    pub pretrain_epochs: Option<String>,
    #[arg(long)]
    pub aux_lr: Option<String>,
    #[arg(long)]
    pub aux_weight_decay: Option<String>,
    #[arg(long)]
    pub backbone_lr: Option<String>,
    #[arg(long)]
    pub backbone_weight_decay: Option<String>,
    #[arg(long)]
    pub layers: Option<String>,
    #[arg(long)]
    pub local_hidden: Option<String>,
    #[arg(long)]
    pub local_dropout: Option<String>,
    #[arg(long)]
    pub backbone_hidden: Option<String>,
    #[arg(long)]
    pub backbone_dropout: Option<String>,
    #[arg(long)]
    pub system_distance: Option<String>,
    #[arg(long)]
    pub module_distance: Option<String>,
    #[arg(long)]
    pub theta_distance: Option<String>,
    /// full, global-only, local-only or self-cotrain.
    #[arg(long)]
    pub variant: Option<String>,
    #[arg(long)]
    pub unlabeled_weight: Option<String>,
    #[arg(long)]
    pub freeze_backbone: Option<String>,
    #[arg(long)]
    pub train_per_class: Option<String>,
    #[arg(long)]
    pub val_per_class: Option<String>,
    #[arg(long)]
    pub splits: Option<String>,
    /// backbone or auxiliary.
    #[arg(long)]
    pub eval_target: Option<String>,
    #[arg(long)]
    pub receptive_hops: Option<String>,
    /// Comma-separated meta-path names.
    #[arg(long)]
    pub metapaths: Option<String>,
}

impl ConfigArgs {
    pub fn resolve(&self) -> Result<RunConfig> {
        let c = self.clone();
        let flags = [
            ("dataset", c.dataset),
            ("out", c.out),
            ("seed", c.seed),
            ("lambda", c.lambda),
            ("iterations", c.iterations),
            ("epochs", c.epochs),
            ("pretrain-epochs", c.pretrain_epochs),
            ("aux-lr", c.aux_lr),
            ("aux-weight-decay", c.aux_weight_decay),
            ("backbone-lr", c.backbone_lr),
            ("backbone-weight-decay", c.backbone_weight_decay),
            ("layers", c.layers),
            ("local-hidden", c.local_hidden),
            ("local-dropout", c.local_dropout),
            ("backbone-hidden", c.backbone_hidden),
            ("backbone-dropout", c.backbone_dropout),
            ("system-distance", c.system_distance),
            ("module-distance", c.module_distance),
            ("theta-distance", c.theta_distance),
            ("variant", c.variant),
            ("unlabeled-weight", c.unlabeled_weight),
            ("freeze-backbone", c.freeze_backbone),
            ("train-per-class", c.train_per_class),
            ("val-per-class", c.val_per_class),
            ("splits", c.splits),
            ("eval-target", c.eval_target),
            ("receptive-hops", c.receptive_hops),
            ("metapaths", c.metapaths),
        ];
        RunConfig::resolve(self.config.as_deref(), &flags)
    }
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Pretrain(c) => commands::cmd_pretrain(&c.resolve()?),
        Command::Posttrain { config, checkpoint } => commands::cmd_posttrain(&config.resolve()?, checkpoint.as_deref()),
        Command::Eval { config, checkpoint } => commands::cmd_eval(&config.resolve()?, checkpoint.as_deref()),
        Command::Diagnose { config, checkpoint, baseline } => {
            commands::cmd_diagnose(&config.resolve()?, checkpoint.as_deref(), baseline.as_deref())
        }
        Command::MakeSplits(c) => commands::cmd_make_splits(&c.resolve()?),
        Command::GenToy { kind, out, seed } => commands::cmd_gen_toy(&kind, &out, seed),
    }
}

/// 2 configuration, 3 data, 4 numeric failure.
pub fn exit_code(kind: ErrorKind) -> i32 {
    match kind {
        ErrorKind::Config => 2,
        ErrorKind::Data => 3,
        ErrorKind::Numeric => 4,
    }
}
