//! Long-tailed classification toolkit: the tailed focal loss and its
//! comparison losses, gradient-vanishing analysis, macro metrics, a synthetic
//! multi-modal dataset generator and a modality-enhancement fusion network.

pub mod error;
pub mod imbalance;
pub mod analysis;
pub mod losses;
pub mod metrics;
pub mod modality;
pub mod datagen;
pub mod fusion;
pub mod experiment;

pub use error::{Error, Result};
pub use imbalance::{ClassStats, TailPartition};
pub use datagen::{Dataset, DatasetSpec, Record};
pub use experiment::{RunConfig, SweepConfig};
pub use fusion::{FusionModel, ModelConfig, OptimConfig};
pub use losses::{LossEval, LossKind, LossParams, LossSpec};
pub use metrics::MetricsReport;
pub use modality::{Modality, ModalitySet};
