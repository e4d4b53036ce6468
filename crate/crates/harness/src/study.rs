//! `study`: metrics along one refinement axis, with first differences.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;

use projdiff_core::linalg::herm_eigenvalues;
use projdiff_core::models::{shift_analyzed, AnalyzedPair};
use projdiff_core::projections::projection_difference;
use projdiff_core::quadrature::{make_quadrature, QuadratureKind};
use projdiff_core::scattering::{epsilon_ladder, scattering_bundle};
use projdiff_core::zop::identity_check;

use crate::config::ExperimentConfig;
use crate::error::{HarnessError, Result};
use crate::experiment::{ladder_options, thread_pool};
use crate::report::{Captured, SCHEMA_VERSION};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    /// Model size, from `sizes`.
    N,
    /// Smoothing, from `epsilons`.
    Eps,
    /// Nodes of the semigroup t-rule, from `trule_sizes`.
    Trule,
}

impl FromStr for Axis {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "n" => Ok(Axis::N),
            "eps" => Ok(Axis::Eps),
            "trule" => Ok(Axis::Trule),
            _ => Err(format!("unknown axis `{s}`; expected n, eps or trule")),
        }
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Axis::N => "n",
            Axis::Eps => "eps",
            Axis::Trule => "trule",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Series {
    pub name: String,
    pub values: Vec<f64>,
    /// `values[i + 1] - values[i]`.
    pub differences: Vec<f64>,
    pub strictly_decreasing: bool,
    pub strictly_increasing: bool,
}

impl Series {
    pub fn new(name: &str, values: Vec<f64>) -> Self {
        let differences: Vec<f64> = values.windows(2).map(|w| w[1] - w[0]).collect();
        Series {
            name: name.to_string(),
            strictly_decreasing: differences.iter().all(|d| *d < 0.0),
            strictly_increasing: differences.iter().all(|d| *d > 0.0),
            values,
            differences,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StudyTable {
    pub schema: u32,
    pub axis: Axis,
    pub model: String,
    pub probe: f64,
    /// Axis values in order.
    pub points: Vec<f64>,
    /// Per point: `None` or the error that stopped it.
    pub errors: Vec<Option<String>>,
    pub metrics: Vec<Series>,
}

impl StudyTable {
    pub fn metric(&self, name: &str) -> Option<&Series> {
        self.metrics.iter().find(|s| s.name == name)
    }
}

type Row = Vec<(&'static str, f64)>;

pub fn convergence_study(config: &ExperimentConfig, axis: Axis, jobs: Option<usize>) -> Result<StudyTable> {
    let probe = *config
        .probes
        .first()
        .ok_or_else(|| HarnessError::invalid("probes", "a study needs one probe"))?;
    let points: Vec<f64> = match axis {
        Axis::N => config.sizes.iter().map(|&n| n as f64).collect(),
        Axis::Eps => config.epsilons.clone(),
        Axis::Trule => config.trule_sizes.iter().map(|&n| n as f64).collect(),
    };
    let field = match axis {
        Axis::N => "sizes",
        Axis::Eps => "epsilons",
        Axis::Trule => "trule_sizes",
    };
    if points.len() < 3 {
        return Err(HarnessError::invalid(field, format!("a study needs at least 3 points, got {}", points.len())));
    }
    let pool = thread_pool(jobs)?;
    let build = |size: usize| -> projdiff_core::Result<AnalyzedPair> {
        config.model.build(size, &config.parameters, &[probe], config.seed)?.analyze()
    };
    let rows: Vec<Captured<Row>> = pool.install(|| match axis {
        Axis::N => config.sizes.par_iter().map(|&n| size_row(config, build(n), probe).into()).collect(),
        Axis::Eps => {
            let base = build(config.sizes[0]);
            config
                .epsilons
                .par_iter()
                .map(|&eps| base.as_ref().map_err(|e| e.clone()).and_then(|p| eps_row(p, probe, eps)).into())
                .collect()
        }
        Axis::Trule => {
            let base = build(config.sizes[0]).map(|p| shift_analyzed(&p, probe));
            config
                .trule_sizes
                .par_iter()
                .map(|&m| base.as_ref().map_err(|e| e.clone()).and_then(|p| trule_row(p, m)).into())
                .collect()
        }
    });

    let names: Vec<&'static str> = rows
        .iter()
        .find_map(|r| r.ok().map(|row| row.iter().map(|(k, _)| *k).collect()))
        .unwrap_or_default();
    let metrics = names
        .iter()
        .map(|name| {
            let values = rows
                .iter()
                .map(|r| {
                    r.ok()
                        .and_then(|row| row.iter().find(|(k, _)| k == name).map(|(_, v)| *v))
                        .unwrap_or(f64::NAN)
                })
                .collect();
            Series::new(name, values)
        })
        .collect();
    let errors = rows
        .iter()
        .map(|r| match r {
            Captured::Ok(_) => None,
            Captured::Error(e) => Some(e.clone()),
        })
        .collect();
    Ok(StudyTable { schema: SCHEMA_VERSION, axis, model: config.model.to_string(), probe, points, errors, metrics })
}

fn size_row(
    config: &ExperimentConfig,
    pair: projdiff_core::Result<AnalyzedPair>,
    probe: f64,
) -> projdiff_core::Result<Row> {
    let pair = pair?;
    let d = projection_difference(&pair, probe)?;
    // fill target: the model's exact scattering phase if known, else the ladder's prediction
    let a = match pair.pair.info.known.scattering_phase {
        Some(theta) => (0.5 * theta).sin().abs(),
        None => epsilon_ladder(&pair.pair, probe, &ladder_options(config))?.predictions.a,
    };
    let (lo, hi) = d.middle_extremes();
    let window = d.fill_against(-0.95 * a, 0.95 * a);
    let full = d.fill_against(-a, a);
    Ok(vec![
        ("target_a", a),
        ("extreme", hi.max(-lo)),
        ("max_gap", window.max_gap),
        ("hausdorff", full.hausdorff),
        ("pairing_defect", d.pairing_defect),
        ("spectral_shift", -d.trace),
    ])
}

fn eps_row(pair: &AnalyzedPair, probe: f64, eps: f64) -> projdiff_core::Result<Row> {
    let b = scattering_bundle(&pair.pair, probe, eps)?;
    let density_top = herm_eigenvalues(&b.density.free)?.last().copied().unwrap_or(0.0);
    Ok(vec![
        ("density_top", density_top),
        ("a_from_s", b.a_from_s),
        ("a_from_norm", b.a_from_norm),
        ("unitarity_defect", b.unitarity_defect),
        ("smoothed_unitarity_residual", b.identity_residual),
    ])
}

fn trule_row(pair: &AnalyzedPair, nodes: usize) -> projdiff_core::Result<Row> {
    let (below, above) = pair.check_gap(0.0, "study")?;
    let rule = make_quadrature(QuadratureKind::ExpMapped { scale: 1.0 / below.min(above) }, nodes)?;
    let r = identity_check(pair, &rule)?;
    Ok(vec![("direct", r.direct), ("oracle", r.oracle), ("representation", r.representation)])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::parse_config;
    use std::f64::consts::PI;

    #[test]
    fn lorentzian_peak_is_exact() {
        let cfg = parse_config("model = \"finite:lorentzian\"\nepsilons = [0.1, 0.01, 0.001]\n")
            .unwrap()
            .resolve()
            .unwrap();
        let t = convergence_study(&cfg, Axis::Eps, Some(1)).unwrap();
        let peak = t.metric("density_top").unwrap();
        for (eps, v) in cfg.epsilons.iter().zip(&peak.values) {
            assert!((v - 1.0 / (PI * eps)).abs() <= 1e-12 / eps, "{v}");
        }
        assert!(peak.strictly_increasing);
    }

    #[test]
    fn trule_axis_falls_to_the_oracle_level() {
        let cfg = parse_config("model = \"finite:random(4)\"\ntrule_sizes = [4, 8, 16, 64]\n")
            .unwrap()
            .resolve()
            .unwrap();
        let t = convergence_study(&cfg, Axis::Trule, Some(2)).unwrap();
        let direct = &t.metric("direct").unwrap().values;
        assert!(direct[1] < direct[0] && direct[2] < direct[1], "{direct:?}");
        let oracle = &t.metric("oracle").unwrap().values;
        assert!(direct[3] <= oracle[3].max(1e-12) * 100.0, "{direct:?} {oracle:?}");
    }

    #[test]
    fn too_few_points_is_invalid_input() {
        let cfg = parse_config("epsilons = [0.1, 0.01]\n").unwrap().resolve().unwrap();
        let err = convergence_study(&cfg, Axis::Eps, Some(1)).unwrap_err();
        assert!(err.is_input());
    }
}
