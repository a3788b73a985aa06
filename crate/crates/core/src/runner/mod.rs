//! Experiment runner: instance specs, manifests and the four commands.

mod commands;
mod manifest;
mod spec;

pub use commands::{
    cmd_bench, cmd_gen, cmd_oudiag, cmd_sample, grid_search, BenchAlgo, BenchConfig, BenchRow, GridSearchResult,
    OudiagConfig, SampleConfig,
};
pub use manifest::{validate_manifest, RunManifest};
pub use spec::{load_spec, parse_spec, Instance, InstanceKind, InstanceSpec};
