//! Report types and their JSON / CSV emission.

use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::error::{HarnessError, Result};

pub const SCHEMA_VERSION: u32 = 1;

/// A computation that either produced a value or failed without stopping the run.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Captured<T> {
    Ok(T),
    Error(String),
}

impl<T> Captured<T> {
    pub fn ok(&self) -> Option<&T> {
        match self {
            Captured::Ok(v) => Some(v),
            Captured::Error(_) => None,
        }
    }
}

impl<T, E: std::fmt::Display> From<std::result::Result<T, E>> for Captured<T> {
    fn from(r: std::result::Result<T, E>) -> Self {
        match r {
            Ok(v) => Captured::Ok(v),
            Err(e) => Captured::Error(e.to_string()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FillSummary {
    pub lo: f64,
    pub hi: f64,
    pub max_gap: f64,
    pub hausdorff: f64,
    pub count_inside: usize,
}

impl From<projdiff_core::projections::FillMetrics> for FillSummary {
    fn from(m: projdiff_core::projections::FillMetrics) -> Self {
        FillSummary { lo: m.lo, hi: m.hi, max_gap: m.max_gap, hausdorff: m.hausdorff, count_inside: m.count_inside }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DifferenceSummary {
    pub spectrum_size: usize,
    pub middle_min: f64,
    pub middle_max: f64,
    pub dim_plus: usize,
    pub dim_minus: usize,
    pub pairing_defect: f64,
    /// `-trace D`.
    pub spectral_shift: f64,
    /// Fill of `[-a, a]` by the middle spectrum, with `a` from the smoothing ladder.
    pub fill: Option<FillSummary>,
    pub block_square_residual: f64,
    pub spectrum: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CornerSummary {
    pub count: usize,
    pub max: f64,
    pub slope_change: Option<f64>,
    pub eigenvalues: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LadderRowSummary {
    pub epsilon: f64,
    pub phases: Vec<f64>,
    pub a_from_norm: f64,
    pub a_from_s: f64,
    pub unitarity_defect: f64,
    /// `||(S~ - I)*(S~ - I)/4 - A|| / ||A||`.
    pub smoothed_unitarity_residual: f64,
    pub resolvent_identity_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScatteringSummary {
    /// Rungs used for the extrapolation.
    pub epsilons: Vec<f64>,
    pub rows: Vec<LadderRowSummary>,
    pub phases: Vec<f64>,
    pub a: f64,
    pub a_extrapolated: f64,
    pub edges: Vec<f64>,
    pub unitarity_monotone: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BirmanKreinSummary {
    pub xi: f64,
    pub det_s: [f64; 2],
    pub defect: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IdentitySummary {
    pub nodes: usize,
    pub direct: f64,
    pub oracle: f64,
    pub representation: f64,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleSummary {
    pub phases: [f64; 2],
    pub a: f64,
    pub flux_defect: f64,
}

/// Everything computed at one `(size, probe)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProbeReport {
    pub size: usize,
    pub probe: f64,
    pub dim: Captured<usize>,
    pub difference: Captured<DifferenceSummary>,
    pub corner: Captured<CornerSummary>,
    pub scattering: Captured<ScatteringSummary>,
    pub birman_krein: Captured<BirmanKreinSummary>,
    pub identity: Captured<IdentitySummary>,
    pub oracle: Option<Captured<OracleSummary>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub schema: u32,
    pub config: ExperimentConfig,
    pub probes: Vec<ProbeReport>,
}

impl Report {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// One value per row under the header `index,value`.
pub fn write_series(path: &Path, values: &[f64]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["index", "value"])?;
    for (i, v) in values.iter().enumerate() {
        w.write_record([i.to_string(), format!("{v:e}")])?;
    }
    w.flush().map_err(|source| HarnessError::Write { path: path.to_path_buf(), source })?;
    Ok(())
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|source| HarnessError::Write { path: path.to_path_buf(), source })
}

pub fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|source| HarnessError::Write { path: dir.to_path_buf(), source })
}

/// Writes `report.json` and one CSV per computed spectrum; returns the files written.
pub fn write_report(report: &Report, dir: &Path) -> Result<Vec<PathBuf>> {
    ensure_dir(dir)?;
    let mut written = Vec::new();
    let json = dir.join("report.json");
    write_text(&json, &report.to_json()?)?;
    written.push(json);
    let probes = report.config.probes.len().max(1);
    for (k, p) in report.probes.iter().enumerate() {
        // `p{i}` is the probe's position in the config
        let i = k % probes;
        if let Captured::Ok(d) = &p.difference {
            let path = dir.join(format!("d_spectrum_n{}_p{i}.csv", p.size));
            write_series(&path, &d.spectrum)?;
            written.push(path);
        }
        if let Captured::Ok(c) = &p.corner {
            let path = dir.join(format!("corner_n{}_p{i}.csv", p.size));
            write_series(&path, &c.eigenvalues)?;
            written.push(path);
        }
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_has_the_documented_header() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.csv");
        write_series(&path, &[0.5, -1.0]).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("index,value"));
        assert_eq!(lines.next(), Some("0,5e-1"));
        assert_eq!(lines.count(), 1);
    }

    #[test]
    fn captured_serializes_tagged() {
        let ok: Captured<u32> = Captured::Ok(3);
        let err: Captured<u32> = Captured::Error("boom".into());
        assert_eq!(serde_json::to_string(&ok).unwrap(), r#"{"ok":3}"#);
        assert_eq!(serde_json::to_string(&err).unwrap(), r#"{"error":"boom"}"#);
    }
}
