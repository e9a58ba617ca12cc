//! Action-conditioned next-frame prediction with hand-written gradients.
//!
//! A recurrent motion encoder consumes flow maps augmented with normalized
//! action maps; a feed-forward content encoder, fusion convolution and
//! decoder turn the current frame plus the motion state into the next frame.
//! Multi-step predictions feed predicted frames back in. Everything is
//! generic over `f32` (training) and `f64` (gradient checks).

pub mod adam;
pub mod checkpoint;
pub mod error;
pub mod gradcheck;
pub mod layers;
pub mod loss;
pub mod model;
pub mod scalar;
pub mod tensor;
pub mod train;

pub use error::{PredictorError, Result};
pub use model::{action_map, augment, blind_action_map, flow_map, Model};
pub use tensor::Tensor;
pub use train::{TrainConfig, Trainer};
