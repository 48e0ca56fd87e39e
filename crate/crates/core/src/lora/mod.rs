//! Desk-scale numerics for adapter merging and pair-wise fine-tuning.
//!
//! A style image and a regularization image share a description; only the
//! style prompt carries the identifier token. Training mixes a weighted
//! reconstruction term over both images with a consistency term comparing
//! re-denoised generations under the two prompts.

mod adapter;
mod denoiser;
mod encoder;
mod loss;
mod matrix;
mod noise;
mod train;

use thiserror::Error;

pub use adapter::{merge_lora, LoraAdapter, MergeSpec, WeightedAdapter};
pub use denoiser::{AffineDenoiser, Denoiser};
pub use encoder::{TextEncoder, DEFAULT_COND_DIM, IDENTIFIER_TOKEN};
pub use loss::{
    context_consistency_loss, loss_gradient, reconstruction_loss, total_loss, Draws, GradientFlow, LossWeights,
    TrainingPair,
};
pub use matrix::Matrix;
pub use noise::{add_noise, NoiseSchedule};
pub use train::{
    fine_tune, loss_curve_csv, smoothed_total, synthetic_dataset, LossRecord, Phase, TrainConfig, TrainingRun,
};

#[derive(Debug, Error, PartialEq)]
pub enum LoraError {
    #[error("matrix of {rows}x{cols} needs {expected} entries, got {actual}")]
    EntryCount {
        rows: usize,
        cols: usize,
        expected: usize,
        actual: usize,
    },
    #[error("matrix entries must be finite")]
    NonFinite,
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("adapter {index}: delta is {delta_rows}x{delta_cols}, base is {rows}x{cols}")]
    AdapterShape {
        index: usize,
        delta_rows: usize,
        delta_cols: usize,
        rows: usize,
        cols: usize,
    },
    #[error("invalid rank {rank} for a {rows}x{cols} update (need 1 <= r < min(n, m))")]
    Rank { rank: usize, rows: usize, cols: usize },
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("timestep {t} outside 1..={max}")]
    Timestep { t: usize, max: usize },
    #[error("invalid noise schedule: {0}")]
    Schedule(String),
    #[error("prompt has no tokens")]
    EmptyPrompt,
    #[error("style and regularization conditions are identical")]
    IdenticalConditions,
    #[error("analytic gradients are only available for the affine denoiser")]
    UnsupportedDenoiser,
    #[error("invalid training configuration: {0}")]
    Config(String),
    #[error("training diverged at iteration {iteration}: loss {loss}")]
    Diverged { iteration: usize, loss: f64 },
}
