//! The two-drug multimodal fusion network, its trainer and checkpoints.

mod checkpoint;
mod config;
mod model;
mod train;

pub use checkpoint::{
    checkpoint_from_str, checkpoint_to_string, load_checkpoint, load_checkpoint_for, save_checkpoint,
};
pub use config::{Activation, ModelConfig};
pub use model::{modality_layers, ForwardCache, FusionModel, TensorInfo};
pub use train::{predict_proba, train, EpochStats, OptimConfig, TrainTrace};
