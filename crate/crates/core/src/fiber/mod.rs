//! Layered-media presets, scenario configuration, and end-to-end runs.

mod config;
mod presets;
mod scenario;

pub use config::{
    load_config, DomainConfig, EvaluateConfig, IntegralMode, PointSpec, ScenarioConfig,
    SolverConfig, SourceSpec, WolffConfig,
};
pub use presets::{preset, preset_cable, preset_fiber};
pub use scenario::{run_scenario, source_field, ScaleSolveSummary, ScenarioReport, ScenarioRun};
