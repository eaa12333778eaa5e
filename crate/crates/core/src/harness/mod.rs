//! Scenario files, figure presets, IQ recordings and result tables.
//!
//! This is the layer the command-line tool sits on: a [`ScenarioFile`]
//! declares a pipeline (waveform, receiver, channel, acquisition, processing
//! and a sweep axis), [`run_scenario`] executes it deterministically for its
//! seed, and [`emit_results`] writes the resulting table as CSV or JSON.

mod error;
mod iq;
mod presets;
mod run;
mod scenario;
mod table;

pub use error::HarnessError;
pub use iq::{load_iq, load_iq_samples, sidecar_path, store_iq, IqMetadata, IQ_FORMAT_VERSION, IQ_MAGIC};
pub use presets::{preset, preset_names, Preset, PRESETS};
pub use run::{correlation_traces, run_scenario, simulate_capture};
pub use scenario::{
    AcquisitionConfig, AxisValues, ChannelConfig, OriginConfig, ProcessingConfig, ReceiverConfig, ScenarioFile,
    SweepAxis, SweepConfig, TapConfig, TracesConfig, WaveformConfig,
};
pub use table::{emit_results, Cell, ResultFormat, RunMetadata, SweepResultTable};

/// Environment variable naming the default output directory of the CLI.
pub const OUTPUT_DIR_ENV: &str = "CORRSOUNDER_OUTPUT_DIR";
