//! Multiclass (convolutional) Tsetlin machine: per-class clause banks,
//! weighted voting, argmax prediction and online training.

use std::time::Instant;

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;

use crate::automata::{EvalMode, Polarity, TaBank};
use crate::binarize::BitImage;
use crate::convolution::{conv_clause_fires, matching_patches_into, select_update_patch, PatchLayout, PatchedImage};
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::feedback::{
    dispatch_feedback, select_prob, specificity_sampler, type_i_feedback, type_ii_feedback, ClauseWeights, FeedbackType,
};
use crate::params::Hyperparams;

/// Clause banks and weights voting for (positive) or against (negative) one
/// class.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassModel {
    positive: TaBank,
    negative: TaBank,
    positive_weights: ClauseWeights,
    negative_weights: ClauseWeights,
}

impl ClassModel {
    /// Fresh class model; the positive bank is initialised before the
    /// negative one.
    pub fn new<R: Rng + ?Sized>(params: &Hyperparams, variables: usize, rng: &mut R) -> Self {
        let half = params.clauses_per_polarity();
        let n = params.states_per_action;
        let positive = TaBank::new(Polarity::Positive, half, variables, n, rng);
        let negative = TaBank::new(Polarity::Negative, half, variables, n, rng);
        Self {
            positive,
            negative,
            positive_weights: ClauseWeights::new(half),
            negative_weights: ClauseWeights::new(half),
        }
    }

    /// Panics when bank and weight dimensions disagree.
    pub fn from_parts(
        positive: TaBank,
        negative: TaBank,
        positive_weights: ClauseWeights,
        negative_weights: ClauseWeights,
    ) -> Self {
        assert_eq!(positive.polarity(), Polarity::Positive);
        assert_eq!(negative.polarity(), Polarity::Negative);
        assert_eq!(positive.clauses(), positive_weights.len());
        assert_eq!(negative.clauses(), negative_weights.len());
        assert_eq!(positive.literals(), negative.literals());
        Self {
            positive,
            negative,
            positive_weights,
            negative_weights,
        }
    }

    pub fn bank(&self, polarity: Polarity) -> &TaBank {
        match polarity {
            Polarity::Positive => &self.positive,
            Polarity::Negative => &self.negative,
        }
    }

    pub fn weights(&self, polarity: Polarity) -> &ClauseWeights {
        match polarity {
            Polarity::Positive => &self.positive_weights,
            Polarity::Negative => &self.negative_weights,
        }
    }

    fn parts_mut(&mut self, polarity: Polarity) -> (&mut TaBank, &mut ClauseWeights) {
        match polarity {
            Polarity::Positive => (&mut self.positive, &mut self.positive_weights),
            Polarity::Negative => (&mut self.negative, &mut self.negative_weights),
        }
    }

    pub fn clause_output(&self, polarity: Polarity, clause: usize, input: &PatchedImage, mode: EvalMode) -> bool {
        conv_clause_fires(self.bank(polarity).include_mask(clause), input, mode)
    }

    pub fn clause_outputs(&self, polarity: Polarity, input: &PatchedImage, mode: EvalMode) -> Vec<bool> {
        let bank = self.bank(polarity);
        (0..bank.clauses())
            .map(|j| conv_clause_fires(bank.include_mask(j), input, mode))
            .collect()
    }

    fn weighted_sum(weights: &ClauseWeights, outputs: &[bool]) -> i64 {
        outputs
            .iter()
            .zip(weights.as_slice())
            .filter(|(&c, _)| c)
            .map(|(_, &w)| i64::from(w))
            .sum()
    }

    /// Weighted vote `sum w+ c+ - sum w- c-`.
    pub fn score(&self, input: &PatchedImage, mode: EvalMode) -> i64 {
        let pos = self.clause_outputs(Polarity::Positive, input, mode);
        let neg = self.clause_outputs(Polarity::Negative, input, mode);
        Self::weighted_sum(&self.positive_weights, &pos) - Self::weighted_sum(&self.negative_weights, &neg)
    }

    /// Binary decision `0 <= v`, ties going to 1.
    pub fn predict_binary(&self, input: &PatchedImage) -> bool {
        self.score(input, EvalMode::Inference) >= 0
    }

    /// One feedback round towards target `y` on `input`.
    ///
    /// The vote sum gating the round uses learning-mode clause outputs taken
    /// before any automaton moves. Each selected clause that fired is
    /// updated against one patch drawn uniformly from those it matched.
    pub fn update<R: Rng + ?Sized>(&mut self, input: &PatchedImage, y: bool, params: &Hyperparams, rng: &mut R) {
        let mode = EvalMode::Learning;
        let pos = self.clause_outputs(Polarity::Positive, input, mode);
        let neg = self.clause_outputs(Polarity::Negative, input, mode);
        let v = Self::weighted_sum(&self.positive_weights, &pos) - Self::weighted_sum(&self.negative_weights, &neg);
        let p = select_prob(v, params.threshold, y);
        let specificity = specificity_sampler(params.specificity);
        let mut matching = Vec::new();

        for (polarity, outputs) in [(Polarity::Positive, pos), (Polarity::Negative, neg)] {
            let kind = dispatch_feedback(polarity, y);
            let (bank, weights) = self.parts_mut(polarity);
            for (j, &fired) in outputs.iter().enumerate() {
                if !rng.gen_bool(p) {
                    continue;
                }
                let patch = if fired {
                    matching_patches_into(bank.include_mask(j), input, mode, &mut matching);
                    select_update_patch(&matching, rng)
                } else {
                    None
                };
                let literals = patch.map(|b| input.patch(b));
                match kind {
                    FeedbackType::TypeI => {
                        type_i_feedback(bank, j, fired, literals, &specificity, params.boost_true_positive, rng)
                    }
                    FeedbackType::TypeII => {
                        if let Some(lits) = literals {
                            type_ii_feedback(bank, j, fired, lits);
                        }
                    }
                }
                if params.weighting {
                    weights.update(j, fired, kind);
                }
            }
        }
    }

    pub fn memory_bytes(&self) -> usize {
        self.positive.memory_bytes()
            + self.negative.memory_bytes()
            + (self.positive_weights.len() + self.negative_weights.len()) * std::mem::size_of::<u32>()
    }
}

/// How class scores turn into a prediction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputHead {
    /// One class model per class, highest score wins (lowest index on ties).
    Argmax { classes: usize },
    /// A single class model; predicts 1 iff its score is `>= 0`.
    Threshold,
}

/// One class-level feedback round issued by [`MulticlassModel::train_example`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ClassUpdate {
    pub class: usize,
    pub target: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpochReport {
    /// 1-based epoch number.
    pub epoch: usize,
    pub train_accuracy: Option<f64>,
    pub test_accuracy: Option<f64>,
    /// Wall time of the training pass alone.
    pub seconds: f64,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct FitOptions<'a> {
    pub test: Option<&'a Dataset>,
    /// Evaluate on the training set after every epoch.
    pub track_train_accuracy: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub accuracy: f64,
    /// `confusion[true][predicted]`.
    pub confusion: Vec<Vec<usize>>,
}

impl Evaluation {
    pub fn total(&self) -> usize {
        self.confusion.iter().flatten().sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MulticlassModel {
    params: Hyperparams,
    layout: PatchLayout,
    head: OutputHead,
    classes: Vec<ClassModel>,
}

impl MulticlassModel {
    /// Argmax model over `classes` classes for images of the given size.
    pub fn new<R: Rng + ?Sized>(
        params: Hyperparams,
        classes: usize,
        dims: (usize, usize, usize),
        rng: &mut R,
    ) -> Result<Self> {
        if classes < 2 {
            return Err(Error::InvalidConfig(format!("need at least 2 classes, got {classes}")));
        }
        Self::build(params, OutputHead::Argmax { classes }, dims, rng)
    }

    /// Single-machine binary model with the `0 <= v` decision rule.
    pub fn binary<R: Rng + ?Sized>(params: Hyperparams, dims: (usize, usize, usize), rng: &mut R) -> Result<Self> {
        Self::build(params, OutputHead::Threshold, dims, rng)
    }

    fn build<R: Rng + ?Sized>(
        params: Hyperparams,
        head: OutputHead,
        dims: (usize, usize, usize),
        rng: &mut R,
    ) -> Result<Self> {
        params.validate()?;
        let layout = layout_for(&params, dims)?;
        let machines = match head {
            OutputHead::Argmax { classes } => classes,
            OutputHead::Threshold => 1,
        };
        let classes = (0..machines)
            .map(|_| ClassModel::new(&params, layout.variables(), rng))
            .collect();
        Ok(Self {
            params,
            layout,
            head,
            classes,
        })
    }

    /// Reassembles a model from stored parts.
    pub fn from_parts(
        params: Hyperparams,
        dims: (usize, usize, usize),
        head: OutputHead,
        classes: Vec<ClassModel>,
    ) -> Result<Self> {
        params.validate()?;
        let layout = layout_for(&params, dims)?;
        let expected = match head {
            OutputHead::Argmax { classes } => classes,
            OutputHead::Threshold => 1,
        };
        if classes.len() != expected {
            return Err(Error::InvalidConfig(format!(
                "{} class models for {expected} outputs",
                classes.len()
            )));
        }
        for c in &classes {
            for pol in [Polarity::Positive, Polarity::Negative] {
                let bank = c.bank(pol);
                if bank.literals() != layout.literals()
                    || bank.clauses() != params.clauses_per_polarity()
                    || bank.states_per_action() != params.states_per_action
                {
                    return Err(Error::InvalidConfig(
                        "class model does not match hyperparameters".into(),
                    ));
                }
            }
        }
        Ok(Self {
            params,
            layout,
            head,
            classes,
        })
    }

    pub fn params(&self) -> &Hyperparams {
        &self.params
    }

    pub fn layout(&self) -> &PatchLayout {
        &self.layout
    }

    pub fn head(&self) -> OutputHead {
        self.head
    }

    pub fn is_convolutional(&self) -> bool {
        self.layout.has_position_bits()
    }

    /// Number of distinct predictions.
    pub fn output_classes(&self) -> usize {
        match self.head {
            OutputHead::Argmax { classes } => classes,
            OutputHead::Threshold => 2,
        }
    }

    pub fn class_models(&self) -> &[ClassModel] {
        &self.classes
    }

    pub fn class_model(&self, class: usize) -> &ClassModel {
        &self.classes[class]
    }

    pub fn patch(&self, image: &BitImage) -> Result<PatchedImage> {
        PatchedImage::new(image, &self.layout)
    }

    /// Inference-mode score of every class model.
    pub fn class_scores(&self, image: &BitImage) -> Result<Vec<i64>> {
        let input = self.patch(image)?;
        Ok(self.scores_patched(&input))
    }

    fn scores_patched(&self, input: &PatchedImage) -> Vec<i64> {
        self.classes
            .iter()
            .map(|c| c.score(input, EvalMode::Inference))
            .collect()
    }

    pub fn predict(&self, image: &BitImage) -> Result<usize> {
        let input = self.patch(image)?;
        Ok(self.predict_patched(&input))
    }

    pub fn predict_patched(&self, input: &PatchedImage) -> usize {
        let scores = self.scores_patched(input);
        match self.head {
            OutputHead::Threshold => usize::from(scores[0] >= 0),
            OutputHead::Argmax { .. } => argmax(&scores),
        }
    }

    /// Online update on one example. Argmax models train the labelled class
    /// towards 1 and one uniformly drawn other class towards 0; threshold
    /// models train their single machine towards the label.
    pub fn train_example<R: Rng + ?Sized>(
        &mut self,
        image: &BitImage,
        label: usize,
        rng: &mut R,
    ) -> Result<Vec<ClassUpdate>> {
        let outputs = self.output_classes();
        if label >= outputs {
            return Err(Error::LabelOutOfRange {
                label,
                classes: outputs,
            });
        }
        let input = self.patch(image)?;
        let updates = match self.head {
            OutputHead::Threshold => vec![ClassUpdate {
                class: 0,
                target: label == 1,
            }],
            OutputHead::Argmax { classes } => {
                let other = rng.gen_range(0..classes - 1);
                let negative = if other >= label { other + 1 } else { other };
                vec![
                    ClassUpdate {
                        class: label,
                        target: true,
                    },
                    ClassUpdate {
                        class: negative,
                        target: false,
                    },
                ]
            }
        };
        for u in &updates {
            self.classes[u.class].update(&input, u.target, &self.params, rng);
        }
        Ok(updates)
    }

    /// Runs `epochs` passes over `train` in a freshly shuffled order each
    /// epoch, returning the training-set accuracy after each pass.
    pub fn fit<R: Rng + ?Sized>(&mut self, train: &Dataset, epochs: usize, rng: &mut R) -> Result<Vec<EpochReport>> {
        let options = FitOptions {
            test: None,
            track_train_accuracy: true,
        };
        self.fit_with(train, epochs, rng, options, |_| {})
    }

    pub fn fit_with<R: Rng + ?Sized>(
        &mut self,
        train: &Dataset,
        epochs: usize,
        rng: &mut R,
        options: FitOptions<'_>,
        mut on_epoch: impl FnMut(&EpochReport),
    ) -> Result<Vec<EpochReport>> {
        if train.is_empty() {
            return Err(Error::EmptyDataset);
        }
        self.check_dims(train)?;
        let mut reports = Vec::with_capacity(epochs);
        for epoch in 1..=epochs {
            let started = Instant::now();
            let mut order: Vec<usize> = (0..train.len()).collect();
            order.shuffle(rng);
            for i in order {
                self.train_example(&train.images()[i], train.labels()[i], rng)?;
            }
            let seconds = started.elapsed().as_secs_f64();
            let train_accuracy = if options.track_train_accuracy {
                Some(self.evaluate(train)?.accuracy)
            } else {
                None
            };
            let test_accuracy = options.test.map(|t| self.evaluate(t)).transpose()?.map(|e| e.accuracy);
            let report = EpochReport {
                epoch,
                train_accuracy,
                test_accuracy,
                seconds,
            };
            on_epoch(&report);
            reports.push(report);
        }
        Ok(reports)
    }

    fn check_dims(&self, data: &Dataset) -> Result<()> {
        if data.dims() != self.layout.dims() {
            return Err(Error::DimensionMismatch {
                expected: self.layout.dims(),
                found: data.dims(),
            });
        }
        Ok(())
    }

    /// Accuracy and confusion counts; examples are scored in parallel on the
    /// current rayon pool.
    pub fn evaluate(&self, data: &Dataset) -> Result<Evaluation> {
        if data.is_empty() {
            return Err(Error::EmptyDataset);
        }
        self.check_dims(data)?;
        let k = self.output_classes();
        if let Some(&label) = data.labels().iter().find(|&&l| l >= k) {
            return Err(Error::LabelOutOfRange { label, classes: k });
        }
        let predictions: Vec<usize> = data
            .images()
            .par_iter()
            .map(|img| self.predict(img))
            .collect::<Result<_>>()?;
        let mut confusion = vec![vec![0usize; k]; k];
        for (&truth, &pred) in data.labels().iter().zip(&predictions) {
            confusion[truth][pred] += 1;
        }
        let correct: usize = (0..k).map(|c| confusion[c][c]).sum();
        Ok(Evaluation {
            accuracy: correct as f64 / data.len() as f64,
            confusion,
        })
    }

    /// Bytes held by automaton states, include masks and weights.
    pub fn memory_bytes(&self) -> usize {
        self.classes.iter().map(ClassModel::memory_bytes).sum()
    }
}

fn layout_for(params: &Hyperparams, dims: (usize, usize, usize)) -> Result<PatchLayout> {
    let (w, h, z) = dims;
    if z != params.layers {
        return Err(Error::InvalidConfig(format!(
            "images have {z} layers but the model expects {}",
            params.layers
        )));
    }
    match params.filter_size {
        Some(f) => PatchLayout::convolutional(w, h, z, f, params.stride),
        None => PatchLayout::whole_image(w, h, z),
    }
}

/// Index of the largest score, lowest index on ties.
pub fn argmax(scores: &[i64]) -> usize {
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate() {
        if s > scores[best] {
            best = i;
        }
    }
    best
}
