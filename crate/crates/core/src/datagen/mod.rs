//! Training data: random piecewise-constant inputs, Godunov targets, encoded samples.

mod conditions;
mod dataset;
mod sample;

pub use conditions::{count_max_runs, count_segments, sample_boundary_condition, sample_initial_condition};
pub use dataset::{
    dataset_dir, generate_dataset, generate_sample, load_split, DatasetManifest, DatasetSpec, ManifestEntry, SamplingParams,
    SplitSpec, MANIFEST_FILE, MANIFEST_VERSION,
};
pub use sample::{encode_sample, ComplexityClass, ProblemKind, ProblemSample, NULL_VALUE};
