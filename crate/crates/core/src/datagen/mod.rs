//! Synthetic long-tailed multi-modal datasets: class-count schedules, the
//! set-similarity featurizer, the generator and the dataset file format.

mod counts;
mod generator;
mod io;
mod jaccard;
mod presets;

pub use counts::sample_class_counts;
pub use generator::{generate_dataset, Dataset, DatasetSpec, DrugFeatures, Record};
pub use io::{read_dataset, read_dataset_from, write_dataset, write_dataset_to};
pub use jaccard::{jaccard_similarity_profile, BitProfile, JaccardMode, DEFAULT_CAP};
pub use presets::{Preset, PRESETS};
