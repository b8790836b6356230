//! Tsetlin machines over boolean images, classic and convolutional.
//!
//! Inputs are binarized images; each class owns two banks of conjunctive
//! clauses, voting for and against it. The convolutional variant slides a
//! `W x W` filter over the image, augments every patch with thermometer
//! coded position bits and lets a clause fire when any patch satisfies it.

pub mod automata;
pub mod binarize;
pub mod bits;
pub mod classifier;
pub mod convolution;
pub mod data_io;
pub mod dataset;
pub mod error;
pub mod feedback;
pub mod interpret;
pub mod params;
pub mod rng;

pub use automata::{Action, EvalMode, LiteralVector, Polarity, TaBank};
pub use binarize::{BitImage, GrayImage};
pub use classifier::{ClassModel, EpochReport, Evaluation, FitOptions, MulticlassModel, OutputHead};
pub use convolution::{PatchLayout, PatchedImage};
pub use dataset::Dataset;
pub use error::{Error, Result};
pub use params::Hyperparams;
pub use rng::{seeded_rng, TmRng};
