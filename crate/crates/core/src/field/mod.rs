//! Field-level driver: file formats, batch correction and comparison tools.

pub mod config;
pub mod io;
pub mod pipeline;
pub mod scatter;

pub use config::ConfigFile;
pub use io::{read_elastic_field, write_elastic_field};
pub use pipeline::{run_correction, run_on, Mode, RunConfig, RunSummary};
pub use scatter::{emit_scatter, relative_difference, ScatterSummary};

/// Round-trippable decimal form used in every output file.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}
