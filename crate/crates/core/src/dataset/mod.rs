//! Run configuration, single-run driver, randomised batches and file export.

mod batch;
mod config;
mod export;
mod run;

pub use batch::{
    draw_item, item_config, plan, run_batch, BatchSpec, DatasetManifest, Draw, ItemRecord, PlannedItem, Split,
    RESAMPLED_SIZE,
};
pub use config::{load_config, parse_config, to_toml, RunConfig, Scenario};
pub use export::{
    encode_png, export_dtm, export_rtm, inspect, render, sha256_hex, verify_files, write_file, Artifact,
    ArtifactKind, FileFormat, FileRecord, Manifest, Sidecar, Writer, DB_FLOOR,
};
pub use run::{export_simulation, run_single, simulate, simulate_variants, ExportOptions, Simulation};
