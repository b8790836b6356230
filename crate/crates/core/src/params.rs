use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default number of states per action; `2 * 128` states per automaton.
pub const DEFAULT_STATES_PER_ACTION: u16 = 128;

/// Training and architecture settings shared by every class of a model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hyperparams {
    /// Clauses per class, split evenly between the two polarities.
    pub clauses_per_class: usize,
    /// Vote-sum target `T`.
    pub threshold: u32,
    /// Specificity `s`; Type Ib fires with probability `1/s`.
    pub specificity: f64,
    /// `N`: each automaton has states `1..=2N`, include above `N`.
    pub states_per_action: u16,
    /// Convolution filter side `W`. `None` runs the classic machine on the
    /// whole image without position bits.
    pub filter_size: Option<usize>,
    pub stride: usize,
    /// Number of binary layers `Z` per pixel.
    pub layers: usize,
    /// Learn integer clause weights.
    pub weighting: bool,
    /// Type Ia increments every literal of value 1 in a firing clause
    /// instead of doing so with probability `(s - 1) / s`.
    #[serde(default)]
    pub boost_true_positive: bool,
    pub epochs: usize,
    pub rng_seed: u64,
}

impl Default for Hyperparams {
    fn default() -> Self {
        Self::noisy_xor()
    }
}

impl Hyperparams {
    /// 2D Noisy XOR configuration: 40 clauses, T = 60, s = 3.9, 2x2 filter.
    pub fn noisy_xor() -> Self {
        Self {
            clauses_per_class: 40,
            threshold: 60,
            specificity: 3.9,
            states_per_action: DEFAULT_STATES_PER_ACTION,
            filter_size: Some(2),
            stride: 1,
            layers: 1,
            weighting: false,
            boost_true_positive: false,
            epochs: 250,
            rng_seed: 0,
        }
    }

    /// MNIST configuration: 8000 clauses, T = 10000, s = 5.0, 10x10 filter,
    /// weighted clauses.
    pub fn mnist() -> Self {
        Self {
            clauses_per_class: 8000,
            threshold: 10_000,
            specificity: 5.0,
            filter_size: Some(10),
            weighting: true,
            ..Self::noisy_xor()
        }
    }

    /// Kuzushiji-MNIST: as MNIST but s = 10.0.
    pub fn kuzushiji_mnist() -> Self {
        Self {
            specificity: 10.0,
            ..Self::mnist()
        }
    }

    /// Fashion-MNIST: as MNIST but s = 10.0.
    pub fn fashion_mnist() -> Self {
        Self {
            specificity: 10.0,
            ..Self::mnist()
        }
    }

    /// Rescales the clause budget, deriving `T` with [`default_threshold`].
    pub fn with_clause_budget(mut self, clauses_per_class: usize) -> Self {
        self.clauses_per_class = clauses_per_class;
        self.threshold = default_threshold(clauses_per_class);
        self
    }

    pub fn clauses_per_polarity(&self) -> usize {
        self.clauses_per_class / 2
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.clauses_per_class == 0 || !self.clauses_per_class.is_multiple_of(2) {
            return bad(format!(
                "clauses per class must be even and positive, got {}",
                self.clauses_per_class
            ));
        }
        if self.threshold == 0 {
            return bad("threshold must be at least 1".into());
        }
        if !self.specificity.is_finite() || self.specificity < 1.0 {
            return bad(format!("specificity must be >= 1.0, got {}", self.specificity));
        }
        if self.states_per_action == 0 || self.states_per_action > u16::MAX / 2 {
            return bad(format!(
                "states per action must be in 1..={}, got {}",
                u16::MAX / 2,
                self.states_per_action
            ));
        }
        if self.filter_size == Some(0) {
            return bad("filter size must be positive".into());
        }
        if self.stride == 0 {
            return bad("stride must be at least 1".into());
        }
        if self.layers == 0 {
            return bad("layer count must be at least 1".into());
        }
        Ok(())
    }
}

/// `T = round(1.25 * clauses_per_class)`, the 8000 / 10000 ratio of the
/// MNIST configuration carried over to smaller clause budgets.
pub fn default_threshold(clauses_per_class: usize) -> u32 {
    ((clauses_per_class as f64) * 1.25).round().max(1.0) as u32
}
