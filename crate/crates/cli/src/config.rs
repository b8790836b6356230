use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, ValueEnum};
use convtsetlin::Hyperparams;
use serde::Deserialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    Xor,
    Mnist,
    Kmnist,
    Fmnist,
}

impl Preset {
    pub fn params(self) -> Hyperparams {
        match self {
            Preset::Xor => Hyperparams::noisy_xor(),
            Preset::Mnist => Hyperparams::mnist(),
            Preset::Kmnist => Hyperparams::kuzushiji_mnist(),
            Preset::Fmnist => Hyperparams::fashion_mnist(),
        }
    }
}

/// Training settings shared by the command line and the TOML config file.
/// Every field is optional; flags win over the file, the file over the
/// preset.
#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct TrainSettings {
    /// Starting hyperparameters.
    #[arg(long, value_enum)]
    pub preset: Option<Preset>,
    /// Clauses per class. Without --threshold, T becomes round(1.25 * clauses).
    #[arg(long)]
    pub clauses: Option<usize>,
    #[arg(long)]
    pub threshold: Option<u32>,
    #[arg(long)]
    pub specificity: Option<f64>,
    /// States per action N.
    #[arg(long)]
    pub states: Option<u16>,
    /// Convolution filter side W.
    #[arg(long, conflicts_with = "classic")]
    pub filter: Option<usize>,
    #[arg(long)]
    pub stride: Option<usize>,
    /// Classic machine over the flattened image, no convolution.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub classic: Option<bool>,
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub weighting: Option<bool>,
    /// Deterministic Type Ia: always reinforce literals of value 1.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub boost: Option<bool>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Evaluation threads; defaults to the available parallelism.
    #[arg(long)]
    pub workers: Option<usize>,

    /// `xor` generates the 2D Noisy XOR problem from --seed.
    #[arg(long)]
    pub dataset: Option<String>,
    /// Binarized dataset file written by gen-xor or binarize.
    #[arg(long)]
    pub train_data: Option<PathBuf>,
    #[arg(long)]
    pub test_data: Option<PathBuf>,
    #[arg(long)]
    pub train_images: Option<PathBuf>,
    #[arg(long)]
    pub train_labels: Option<PathBuf>,
    #[arg(long)]
    pub test_images: Option<PathBuf>,
    #[arg(long)]
    pub test_labels: Option<PathBuf>,
    /// Use only the first N training examples.
    #[arg(long)]
    pub train_limit: Option<usize>,
    /// Binarization window for IDX input.
    #[arg(long)]
    pub window: Option<usize>,
    /// Binarization offset c for IDX input.
    #[arg(long, allow_hyphen_values = true)]
    pub offset: Option<i32>,

    /// Output model file.
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Per-epoch metrics CSV, appended to.
    #[arg(long)]
    pub metrics: Option<PathBuf>,
    /// Skip the training-set evaluation after each epoch.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub skip_train_acc: Option<bool>,
}

macro_rules! overlay {
    ($dst:ident, $src:ident, $($field:ident),*) => {
        $( if $src.$field.is_some() { $dst.$field = $src.$field.clone(); } )*
    };
}

impl TrainSettings {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }

    /// `self` with every field set in `over` replaced.
    pub fn overlaid(mut self, over: &TrainSettings) -> Self {
        overlay!(
            self,
            over,
            preset,
            clauses,
            threshold,
            specificity,
            states,
            filter,
            stride,
            classic,
            weighting,
            boost,
            epochs,
            seed,
            workers,
            dataset,
            train_data,
            test_data,
            train_images,
            train_labels,
            test_images,
            test_labels,
            train_limit,
            window,
            offset,
            model,
            metrics,
            skip_train_acc
        );
        if over.filter.is_some() {
            self.classic = Some(false);
        }
        if over.classic == Some(true) {
            self.filter = None;
        }
        self
    }

    pub fn hyperparams(&self) -> Result<Hyperparams> {
        let mut p = self.preset.unwrap_or(Preset::Xor).params();
        if let Some(c) = self.clauses {
            p = p.with_clause_budget(c);
        }
        if let Some(t) = self.threshold {
            p.threshold = t;
        }
        if let Some(s) = self.specificity {
            p.specificity = s;
        }
        if let Some(n) = self.states {
            p.states_per_action = n;
        }
        if let Some(f) = self.filter {
            p.filter_size = Some(f);
        }
        if self.classic == Some(true) {
            p.filter_size = None;
        }
        if let Some(d) = self.stride {
            p.stride = d;
        }
        if let Some(w) = self.weighting {
            p.weighting = w;
        }
        if let Some(b) = self.boost {
            p.boost_true_positive = b;
        }
        if let Some(e) = self.epochs {
            p.epochs = e;
        }
        if let Some(s) = self.seed {
            p.rng_seed = s;
        }
        p.validate()?;
        Ok(p)
    }
}

pub fn resolve(flags: &TrainSettings, config: Option<&Path>) -> Result<TrainSettings> {
    let base = match config {
        Some(path) => TrainSettings::from_file(path)?,
        None => TrainSettings::default(),
    };
    let merged = base.overlaid(flags);
    if merged.classic == Some(true) && merged.filter.is_some() {
        bail!("--classic and --filter are mutually exclusive");
    }
    Ok(merged)
}
