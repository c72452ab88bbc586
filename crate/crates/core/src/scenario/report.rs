use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::transfer::MappingCheck;

use super::config::ScenarioConfig;

/// Defect above which a transfer map is reported as non-canonical.
pub const CANONICAL_TOL: f64 = 1e-6;

/// One row of `samples.csv`.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleRow {
    pub tau: f64,
    /// `T` row-major.
    pub t: Vec<f64>,
    pub ode_residual: f64,
    /// Worst residual over all verification states.
    pub mapping_residual: f64,
    pub symplectic_defect: f64,
    pub norm_drift: f64,
    pub frame_drift: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridSummary {
    pub h: f64,
    pub tau_max: f64,
    pub samples: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Maxima {
    pub ode_residual: f64,
    pub mapping_residual: f64,
    pub symplectic_defect: f64,
    pub norm_drift: f64,
    pub frame_drift: f64,
    /// `max_τ ‖T_direct − S A R‖_F`.
    pub factorization: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ToleranceSummary {
    pub mapping: f64,
    pub ode: f64,
    pub factorization: f64,
    pub drift: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PassFlags {
    pub mapping: bool,
    pub ode: bool,
    pub factorization: bool,
    pub drift: bool,
    pub all: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StateSummary {
    pub state: Vec<f64>,
    pub max_mapping_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub scenario: String,
    pub n: usize,
    pub source: String,
    pub target: String,
    pub grid: GridSummary,
    pub max: Maxima,
    pub tolerance: ToleranceSummary,
    pub pass: PassFlags,
    /// `false` when the symplectic defect exceeds [`CANONICAL_TOL`]
    /// somewhere on the grid.
    pub canonical: bool,
    pub verification: Vec<StateSummary>,
    pub config: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioReport {
    pub n: usize,
    pub rows: Vec<SampleRow>,
    pub summary: Summary,
}

/// Column maximum; NaN propagates.
fn col_max(values: impl Iterator<Item = f64>) -> f64 {
    values.fold(0.0, |m, v| if m.is_nan() || v.is_nan() { f64::NAN } else { m.max(v) })
}

fn within(v: f64, tol: f64) -> bool {
    v <= tol
}

impl ScenarioReport {
    pub(crate) fn assemble(
        cfg: &ScenarioConfig,
        rows: Vec<SampleRow>,
        factorization: f64,
        checks: Vec<MappingCheck>,
    ) -> Self {
        let max = Maxima {
            ode_residual: col_max(rows.iter().map(|r| r.ode_residual)),
            mapping_residual: col_max(rows.iter().map(|r| r.mapping_residual)),
            symplectic_defect: col_max(rows.iter().map(|r| r.symplectic_defect)),
            norm_drift: col_max(rows.iter().map(|r| r.norm_drift)),
            frame_drift: col_max(rows.iter().map(|r| r.frame_drift)),
            factorization,
        };
        let tol = cfg.tolerances;
        let mapping = within(max.mapping_residual, tol.mapping);
        let ode = within(max.ode_residual, tol.ode);
        let fact = within(max.factorization, tol.factorization);
        let drift = within(max.norm_drift, tol.drift) && within(max.frame_drift, tol.drift);
        let summary = Summary {
            scenario: cfg.name.clone(),
            n: cfg.n,
            source: cfg.source.kind().to_string(),
            target: cfg.target.kind().to_string(),
            grid: GridSummary {
                h: cfg.h,
                tau_max: cfg.tau_max,
                samples: rows.len(),
            },
            canonical: within(max.symplectic_defect, CANONICAL_TOL),
            max,
            tolerance: ToleranceSummary {
                mapping: tol.mapping,
                ode: tol.ode,
                factorization: tol.factorization,
                drift: tol.drift,
            },
            pass: PassFlags {
                mapping,
                ode,
                factorization: fact,
                drift,
                all: mapping && ode && fact && drift,
            },
            verification: checks
                .into_iter()
                .map(|c| StateSummary {
                    max_mapping_residual: c.max_residual(),
                    state: c.xi0,
                })
                .collect(),
            config: cfg.to_text(),
        };
        ScenarioReport {
            n: cfg.n,
            rows,
            summary,
        }
    }

    pub fn passed(&self) -> bool {
        self.summary.pass.all
    }

    /// 0 when every tolerance holds, 2 otherwise.
    pub fn exit_code(&self) -> i32 {
        if self.passed() {
            0
        } else {
            2
        }
    }

    pub fn csv_header(&self) -> String {
        let k = 2 * self.n;
        let mut h = String::from("tau");
        for i in 0..k {
            for j in 0..k {
                let _ = write!(h, ",T_{i}_{j}");
            }
        }
        h.push_str(",ode_residual,mapping_residual,symplectic_defect,norm_drift,frame_drift");
        h
    }

    /// `samples.csv` contents: shortest round-trip floats, LF endings.
    pub fn to_csv(&self) -> String {
        let mut out = self.csv_header();
        out.push('\n');
        for r in &self.rows {
            let _ = write!(out, "{:?}", r.tau);
            for v in &r.t {
                let _ = write!(out, ",{v:?}");
            }
            let _ = writeln!(
                out,
                ",{:?},{:?},{:?},{:?},{:?}",
                r.ode_residual, r.mapping_residual, r.symplectic_defect, r.norm_drift, r.frame_drift
            );
        }
        out
    }

    /// Pretty-printed summary; keys in declaration order.
    pub fn summary_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.summary).expect("summary is serializable");
        s.push('\n');
        s
    }
}

pub const SAMPLES_FILE: &str = "samples.csv";
pub const SUMMARY_FILE: &str = "summary.json";

fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Writes the configured output files into `dir`, creating it if needed.
/// Returns the paths written.
pub fn emit_report(report: &ScenarioReport, cfg: &ScenarioConfig, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|source| Error::Io {
        path: dir.display().to_string(),
        source,
    })?;
    let mut written = Vec::new();
    if cfg.wants("csv") {
        let p = dir.join(SAMPLES_FILE);
        write_file(&p, &report.to_csv())?;
        written.push(p);
    }
    if cfg.wants("summary") {
        let p = dir.join(SUMMARY_FILE);
        write_file(&p, &report.summary_json())?;
        written.push(p);
    }
    Ok(written)
}
