//! Command-line companion to `relimp-core`: CSV and JSON file formats, the
//! end-to-end pipeline and its text report.

pub mod io;
pub mod pipeline;
pub mod report;
pub mod svg;

pub use io::{load_csv, load_model, save_csv, save_model, IoError};
pub use pipeline::{run_pipeline, PipelineConfig, PipelineError, RunManifest};
pub use report::emit_report;
