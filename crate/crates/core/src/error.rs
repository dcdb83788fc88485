use thiserror::Error;

use crate::tenfile::FormatError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("label {value} at pixel {pixel} is out of range for {classes} classes")]
    LabelOutOfRange {
        pixel: usize,
        value: u16,
        classes: usize,
    },

    #[error("NaN probability at pixel {pixel}, class {class}")]
    NanProbability { pixel: usize, class: usize },

    #[error("negative probability {value} at pixel {pixel}, class {class}")]
    NegativeProbability {
        pixel: usize,
        class: usize,
        value: f32,
    },

    #[error("non-finite value {value} at index {index}")]
    NonFinite { index: usize, value: f64 },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("vicinity {height}x{width} must have odd, positive dimensions")]
    InvalidVicinity { height: usize, width: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("training diverged at iteration {iter} (loss = {loss})")]
    Diverged { iter: usize, loss: f64 },

    #[error(transparent)]
    Format(#[from] FormatError),
}
