//! Evaluation harness for next-object interaction anticipation from
//! egocentric video with vision-language models.
//!
//! The pipeline samples frames with a recency-weighted sampler, draws gaze
//! trails and segmentation marks onto them, builds a multiple-choice prompt,
//! queries a backend and scores the parsed answer.

pub mod backends;
pub mod cli;
pub mod dataset;
pub mod error;
pub mod evaluator;
pub mod frame;
pub mod masks;
pub mod prompting;
pub mod sampler;
pub mod trace;
pub mod visual;

pub use error::{Error, Result};
pub use frame::{Frame, Rgb};
