//! Scenario files, the end-to-end pipeline and its reports.

mod catalog;
mod config;
mod report;
mod run;

pub use catalog::{
    render_catalog, template, CatalogEntry, Template, CONGRUENCE_CATALOG, KIND_CATALOG, METRIC_CATALOG, TEMPLATES,
};
pub use config::{
    Coef, ConfigError, CongruenceSpec, CurveSpec, InitialTransfer, MetricForm, MetricSpec, ScenarioConfig, SideSpec,
    Tolerances, CONGRUENCES, DEFAULT_STEP, METRICS, OUTPUT_FORMATS, SIDE_KINDS,
};
pub use report::{
    emit_report, GridSummary, Maxima, PassFlags, SampleRow, ScenarioReport, StateSummary, Summary, ToleranceSummary,
    CANONICAL_TOL, SAMPLES_FILE, SUMMARY_FILE,
};
pub use run::{run_scenario, CurveDrift};

#[cfg(test)]
mod tests;
