//! `run`: every module evaluated at each `(size, probe)` of a config.

use std::sync::Arc;

use rayon::prelude::*;

use projdiff_core::models::{shift_analyzed, AnalyzedPair, PotentialSpec};
use projdiff_core::projections::{
    corner_spectrum, counting_slope_change, dsq_block_check, difference_report, projection_pair, Side,
};
use projdiff_core::scattering::{
    birman_krein_check, epsilon_ladder, transfer_matrix_smatrix, LadderOptions, LadderResult,
};
use projdiff_core::zop::{adaptive_identity_check, AdaptiveOptions};

use crate::config::ExperimentConfig;
use crate::error::{HarnessError, Result};
use crate::report::*;

/// Corner eigenvalues below this fraction of the largest are ignored when
/// locating the slope change of the counting function.
pub const SLOPE_FLOOR: f64 = 0.1;

pub fn thread_pool(jobs: Option<usize>) -> Result<rayon::ThreadPool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(j) = jobs {
        if j == 0 {
            return Err(HarnessError::invalid("--jobs", "must be at least 1"));
        }
        builder = builder.num_threads(j);
    }
    builder.build().map_err(|e| HarnessError::invalid("--jobs", e.to_string()))
}

pub fn ladder_options(config: &ExperimentConfig) -> LadderOptions {
    LadderOptions {
        epsilons: config.epsilons.clone(),
        extrapolation_points: config.extrapolation_points,
        ..Default::default()
    }
}

type SharedPair = std::result::Result<Arc<AnalyzedPair>, String>;

fn build(config: &ExperimentConfig, size: usize, probes: &[f64]) -> SharedPair {
    config
        .model
        .build(size, &config.parameters, probes, config.seed)
        .and_then(|p| p.analyze())
        .map(Arc::new)
        .map_err(|e| e.to_string())
}

pub fn run_experiment(config: &ExperimentConfig, jobs: Option<usize>) -> Result<Report> {
    let pool = thread_pool(jobs)?;
    let probes = pool.install(|| {
        config
            .sizes
            .par_iter()
            .flat_map_iter(|&size| {
                let shared = if config.model.probe_dependent() {
                    None
                } else {
                    Some(build(config, size, &config.probes))
                };
                config.probes.iter().map(move |&probe| (size, probe, shared.clone())).collect::<Vec<_>>()
            })
            .collect::<Vec<_>>()
            .into_par_iter()
            .map(|(size, probe, shared)| {
                let pair = shared.unwrap_or_else(|| build(config, size, &[probe]));
                probe_report(config, size, probe, pair)
            })
            .collect()
    });
    Ok(Report { schema: SCHEMA_VERSION, config: config.clone(), probes })
}

fn probe_report(config: &ExperimentConfig, size: usize, probe: f64, pair: SharedPair) -> ProbeReport {
    let potential = config.model.potential(&config.parameters);
    let oracle = potential.as_ref().map(|spec| oracle_summary(spec, probe));
    let pair = match pair {
        Ok(p) => p,
        Err(e) => {
            return ProbeReport {
                size,
                probe,
                dim: Captured::Error(e.clone()),
                difference: Captured::Error(e.clone()),
                corner: Captured::Error(e.clone()),
                scattering: Captured::Error(e.clone()),
                birman_krein: Captured::Error(e.clone()),
                identity: Captured::Error(e),
                oracle,
            };
        }
    };
    let ladder = epsilon_ladder(&pair.pair, probe, &ladder_options(config));
    let a = ladder.as_ref().ok().map(|l| l.predictions.a);
    ProbeReport {
        size,
        probe,
        dim: Captured::Ok(pair.dim()),
        difference: difference_summary(&pair, probe, a).into(),
        corner: corner_summary(&pair, probe).into(),
        birman_krein: ladder
            .as_ref()
            .map_err(|e| e.clone())
            .and_then(|l| birman_krein_check(&pair, probe, l))
            .map(|bk| BirmanKreinSummary { xi: bk.xi, det_s: [bk.det_s.re, bk.det_s.im], defect: bk.defect })
            .into(),
        scattering: ladder.map(|l| scattering_summary(&l, config.extrapolation_points)).into(),
        identity: identity_summary(&pair, probe).into(),
        oracle,
    }
}

pub fn difference_summary(
    pair: &AnalyzedPair,
    probe: f64,
    a: Option<f64>,
) -> projdiff_core::Result<DifferenceSummary> {
    let pp = projection_pair(pair, probe)?;
    let report = difference_report(&pp)?;
    let (middle_min, middle_max) = report.middle_extremes();
    let fill = a.filter(|a| *a > 0.0).map(|a| report.fill_against(-a, a).into());
    Ok(DifferenceSummary {
        spectrum_size: report.spectrum.len(),
        middle_min,
        middle_max,
        dim_plus: report.dim_plus,
        dim_minus: report.dim_minus,
        pairing_defect: report.pairing_defect,
        spectral_shift: -report.trace,
        fill,
        block_square_residual: dsq_block_check(&pp),
        spectrum: report.spectrum,
    })
}

fn corner_summary(pair: &AnalyzedPair, probe: f64) -> projdiff_core::Result<CornerSummary> {
    let c = corner_spectrum(pair, probe, Side::Plus)?;
    Ok(CornerSummary {
        count: c.eigenvalues.len(),
        max: c.max(),
        slope_change: counting_slope_change(&c.eigenvalues, SLOPE_FLOOR),
        eigenvalues: c.eigenvalues,
    })
}

pub fn scattering_summary(l: &LadderResult, extrapolation_points: usize) -> ScatteringSummary {
    let used = extrapolation_points.min(l.rows.len());
    ScatteringSummary {
        epsilons: l.rows[l.rows.len() - used..].iter().map(|r| r.epsilon).collect(),
        rows: l
            .rows
            .iter()
            .map(|r| LadderRowSummary {
                epsilon: r.epsilon,
                phases: r.phases.clone(),
                a_from_norm: r.a_from_norm,
                a_from_s: r.a_from_s,
                unitarity_defect: r.unitarity_defect,
                smoothed_unitarity_residual: r.identity_residual,
                resolvent_identity_residual: r.c1_residual,
            })
            .collect(),
        phases: l.phases.clone(),
        a: l.predictions.a,
        a_extrapolated: l.a_extrapolated,
        edges: l.predictions.edges.clone(),
        unitarity_monotone: l.unitarity_monotone,
    }
}

pub fn identity_summary(pair: &AnalyzedPair, probe: f64) -> projdiff_core::Result<IdentitySummary> {
    let centred = shift_analyzed(pair, probe);
    let r = adaptive_identity_check(&centred, &AdaptiveOptions::default())?;
    let best = r.best();
    Ok(IdentitySummary {
        nodes: best.nodes,
        direct: best.direct,
        oracle: best.oracle,
        representation: best.representation,
        converged: r.converged,
    })
}

fn oracle_summary(spec: &PotentialSpec, probe: f64) -> Captured<OracleSummary> {
    transfer_matrix_smatrix(spec, probe)
        .map(|t| OracleSummary {
            phases: t.eigenphases,
            a: t.eigenphases.iter().map(|th| (0.5 * th).sin().abs()).fold(0.0, f64::max),
            flux_defect: t.flux_defect,
        })
        .into()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{parse_config, ExperimentConfig};

    #[test]
    fn empty_probe_list_gives_empty_report() {
        let cfg = parse_config("model = \"finite:random(1)\"\nprobes = []\n").unwrap().resolve().unwrap();
        let report = run_experiment(&cfg, Some(1)).unwrap();
        assert!(report.probes.is_empty());
        assert!(report.to_json().unwrap().contains("\"schema\": 1"));
    }

    #[test]
    fn probe_errors_are_captured() {
        // the Lorentzian pair has its only eigenvalue at the probe
        let cfg = ExperimentConfig::preset("finite:lorentzian").unwrap();
        let report = run_experiment(&cfg, Some(1)).unwrap();
        let p = &report.probes[0];
        assert!(matches!(p.difference, Captured::Error(_)));
        assert!(matches!(p.scattering, Captured::Ok(_)));
    }

    #[test]
    fn random_pair_identities() {
        let cfg = ExperimentConfig::preset("finite:random(2)").unwrap();
        let report = run_experiment(&cfg, Some(2)).unwrap();
        let p = &report.probes[0];
        let d = p.difference.ok().unwrap();
        assert!(d.block_square_residual <= 1e-10 * 8.0);
        assert!(d.pairing_defect <= 1e-6);
        let id = p.identity.ok().unwrap();
        assert!(id.oracle <= 1e-8 * 8.0);
        let s = p.scattering.ok().unwrap();
        assert!(s.rows.iter().all(|r| r.resolvent_identity_residual <= 1e-9));
    }
}
