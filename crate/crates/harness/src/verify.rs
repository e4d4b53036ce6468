//! `verify-all`: the acceptance suite.

use std::collections::BTreeMap;
use std::f64::consts::{E, PI};
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use projdiff_core::hankel::{
    band_pair, build_hankel, carleman_norm, default_band_rule, default_trace_lambda_rule, kernel_bound_suite,
    laplace_factorizations, laplace_rules, trace_bound_check, HankelKernel, ScalarKernel, TraceBoundData,
    DEFAULT_MAX_KERNEL_DIM,
};
use projdiff_core::linalg::{c, frobenius, CMatrix};
use projdiff_core::models::{
    build_krein, build_schrodinger_momentum, random_pair, resolvent_transform,
    shift_analyzed, AnalyzedPair, KreinDiscretization, MomentumGrid, PotentialSpec, RandomPairOptions,
};
use projdiff_core::projections::{
    corner_spectrum, counting_slope_change, dsq_block_check, difference_report, projection_pair,
    spectral_shift_average, DifferenceReport, Side,
};
use projdiff_core::quadrature::{make_quadrature, QuadratureKind, QuadratureRule};
use projdiff_core::scattering::{
    birman_krein_check, epsilon_ladder, fiber_gram_eigenvalues, scattering_bundle, transfer_matrix_smatrix,
    LadderOptions,
};
use projdiff_core::zop::{adaptive_identity_check, model_comparison, AdaptiveOptions};

use crate::config::ExperimentConfig;
use crate::error::Result;
use crate::experiment::{run_experiment, thread_pool, SLOPE_FLOOR};
use crate::report::SCHEMA_VERSION;
use crate::thresholds::Thresholds;

type CoreResult<T> = projdiff_core::Result<T>;

/// Criteria that cannot pass for any finite model at the prescribed sizes; see README.
pub const KNOWN_RED: [u8; 2] = [2, 3];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Criterion {
    pub id: u8,
    pub title: &'static str,
    pub passed: bool,
    pub measured: BTreeMap<String, f64>,
    pub flags: BTreeMap<String, bool>,
    pub notes: Vec<String>,
}

impl Criterion {
    fn new(id: u8, title: &'static str) -> Self {
        Criterion { id, title, passed: true, measured: BTreeMap::new(), flags: BTreeMap::new(), notes: Vec::new() }
    }

    fn value(&mut self, key: impl Into<String>, v: f64) {
        self.measured.insert(key.into(), v);
    }

    /// Records `value <= limit` under `key`.
    fn at_most(&mut self, key: &str, value: f64, limit: f64) {
        self.value(key, value);
        self.require(key, value <= limit);
    }

    fn require(&mut self, key: &str, ok: bool) {
        self.flags.insert(key.to_string(), ok);
        self.passed &= ok;
    }

    fn fail(&mut self, why: String) {
        self.notes.push(why);
        self.passed = false;
    }

    /// One line: `criterion 4 PASS  title  key=value ...`.
    pub fn line(&self) -> String {
        let verdict = if self.passed { "PASS" } else { "FAIL" };
        let values: Vec<String> = self.measured.iter().map(|(k, v)| format!("{k}={v:.6e}")).collect();
        let failed: Vec<&str> = self.flags.iter().filter(|(_, ok)| !**ok).map(|(k, _)| k.as_str()).collect();
        let mut s = format!("criterion {} {verdict}  {}  {}", self.id, self.title, values.join(" "));
        if !failed.is_empty() {
            s.push_str(&format!("  failing: {}", failed.join(",")));
        }
        for n in &self.notes {
            s.push_str(&format!("  [{n}]"));
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Info {
    pub name: &'static str,
    pub values: BTreeMap<String, f64>,
    pub notes: Vec<String>,
}

impl Info {
    fn new(name: &'static str) -> Self {
        Info { name, values: BTreeMap::new(), notes: Vec::new() }
    }

    fn value(&mut self, key: impl Into<String>, v: f64) {
        self.values.insert(key.into(), v);
    }

    pub fn line(&self) -> String {
        let values: Vec<String> = self.values.iter().map(|(k, v)| format!("{k}={v:.6e}")).collect();
        let mut s = format!("info {}  {}", self.name, values.join(" "));
        for n in &self.notes {
            s.push_str(&format!("  [{n}]"));
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyReport {
    pub schema: u32,
    pub seed: u64,
    pub thresholds: BTreeMap<String, f64>,
    pub criteria: Vec<Criterion>,
    pub info: Vec<Info>,
}

impl VerifyReport {
    pub fn all_passed(&self) -> bool {
        self.criteria.iter().all(|c| c.passed)
    }

    pub fn criterion(&self, id: u8) -> Option<&Criterion> {
        self.criteria.iter().find(|c| c.id == id)
    }

    pub fn lines(&self) -> Vec<String> {
        self.criteria.iter().map(Criterion::line).chain(self.info.iter().map(Info::line)).collect()
    }
}

/// Wall-clock seconds per task, kept out of the report so that it stays reproducible.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Timings {
    pub total: f64,
    pub tasks: BTreeMap<String, f64>,
}

#[derive(Debug, Clone)]
pub struct VerifyOptions {
    pub thresholds: Thresholds,
    pub seed: u64,
    pub jobs: Option<usize>,
}

impl VerifyOptions {
    pub fn from_config(config: &ExperimentConfig, jobs: Option<usize>) -> Self {
        VerifyOptions { thresholds: config.thresholds(), seed: config.seed, jobs }
    }
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions { thresholds: Thresholds::builtin(), seed: 0, jobs: None }
    }
}

// ---------------------------------------------------------------------------
// tasks

const KREIN_LENGTH: f64 = 40.0;
const KREIN_PROBE: f64 = 0.5;
const KREIN_SIZES: [usize; 2] = [200, 400];
const KREIN_LADDER: [f64; 3] = [0.2, 0.1, 0.05];
const TRANSFORM_SHIFT: f64 = -1.0;
const RANDOM_PAIRS: u64 = 20;

enum Task {
    Identities,
    Krein(usize),
    FillIn,
    BandEdges,
    Hankel,
    GramComparison,
    Determinism,
}

enum Output {
    Identities(IdentityRun),
    Krein(Box<KreinRun>),
    FillIn(Box<FillRun>),
    BandEdges(Box<EdgeRun>),
    Hankel(HankelRun),
    Gram(Info),
    Determinism(bool),
}

impl Task {
    fn name(&self) -> String {
        match self {
            Task::Identities => "identities".into(),
            Task::Krein(n) => format!("krein_{n}"),
            Task::FillIn => "fill_in".into(),
            Task::BandEdges => "band_edges".into(),
            Task::Hankel => "hankel".into(),
            Task::GramComparison => "gram_comparison".into(),
            Task::Determinism => "determinism".into(),
        }
    }

    fn run(&self, opts: &VerifyOptions) -> std::result::Result<Output, String> {
        let s = |e: projdiff_core::Error| e.to_string();
        Ok(match self {
            Task::Identities => Output::Identities(identities(opts.seed)),
            Task::Krein(n) => Output::Krein(Box::new(krein_run(*n).map_err(s)?)),
            Task::FillIn => Output::FillIn(Box::new(fill_run().map_err(s)?)),
            Task::BandEdges => Output::BandEdges(Box::new(edge_run().map_err(s)?)),
            Task::Hankel => Output::Hankel(hankel_run().map_err(s)?),
            Task::GramComparison => Output::Gram(gram_run().map_err(s)?),
            Task::Determinism => Output::Determinism(determinism(opts.seed).map_err(|e| e.to_string())?),
        })
    }
}

struct IdentityRun {
    pairs: usize,
    worst_c1: f64,
    worst_block_per_dim: f64,
    worst_smoothed: f64,
    worst_sylvester_per_dim: f64,
    worst_direct: f64,
    worst_pairing: f64,
    failures: Vec<String>,
    seconds: f64,
}

fn identities(seed: u64) -> IdentityRun {
    let start = Instant::now();
    let mut run = IdentityRun {
        pairs: 0,
        worst_c1: 0.0,
        worst_block_per_dim: 0.0,
        worst_smoothed: 0.0,
        worst_sylvester_per_dim: 0.0,
        worst_direct: 0.0,
        worst_pairing: 0.0,
        failures: Vec::new(),
        seconds: 0.0,
    };
    let mut cases: Vec<(String, CoreResult<AnalyzedPair>, f64)> = (0..RANDOM_PAIRS)
        .map(|i| {
            let dim = 6 + 6 * (i as usize % 4);
            let options = RandomPairOptions { dim, rank: 1 + i as usize % 5, ..Default::default() };
            let pair = random_pair(seed + i, &options).and_then(|p| p.analyze());
            (format!("random({})", seed + i), pair, 0.0)
        })
        .collect();
    cases.push((
        "krein(200)".into(),
        build_krein(200, KREIN_LENGTH, KreinDiscretization::CellAverage).and_then(|p| p.analyze()),
        KREIN_PROBE,
    ));
    let results: Vec<(String, CoreResult<[f64; 6]>)> = cases
        .into_par_iter()
        .map(|(name, pair, probe)| (name, pair.and_then(|p| identity_case(&p, probe))))
        .collect();
    for (name, r) in results {
        match r {
            Ok([c1, block, smoothed, sylvester, direct, pairing]) => {
                run.pairs += 1;
                run.worst_c1 = run.worst_c1.max(c1);
                run.worst_block_per_dim = run.worst_block_per_dim.max(block);
                run.worst_smoothed = run.worst_smoothed.max(smoothed);
                run.worst_sylvester_per_dim = run.worst_sylvester_per_dim.max(sylvester);
                run.worst_direct = run.worst_direct.max(direct);
                run.worst_pairing = run.worst_pairing.max(pairing);
            }
            Err(e) => run.failures.push(format!("{name}: {e}")),
        }
    }
    run.seconds = start.elapsed().as_secs_f64();
    run
}

/// `[c1, block/dim, smoothed unitarity, sylvester/dim, direct, pairing]`.
fn identity_case(pair: &AnalyzedPair, probe: f64) -> CoreResult<[f64; 6]> {
    let dim = pair.dim() as f64;
    let (mut c1, mut smoothed) = (0.0f64, 0.0f64);
    for eps in [1e-1, 1e-2] {
        let b = scattering_bundle(&pair.pair, probe, eps)?;
        c1 = c1.max(b.density.sandwich.identity_residual);
        smoothed = smoothed.max(b.identity_residual);
    }
    let pp = projection_pair(pair, probe)?;
    let block = dsq_block_check(&pp) / dim;
    let pairing = difference_report(&pp)?.pairing_defect;
    let check = adaptive_identity_check(&shift_analyzed(pair, probe), &AdaptiveOptions::default())?;
    let best = check.best();
    Ok([c1, block, smoothed, best.oracle / dim, best.direct, pairing])
}

struct KreinRun {
    n: usize,
    difference: DifferenceReport,
    window_average: f64,
    phases: Vec<f64>,
    birman_krein_defect: f64,
    corner_max: f64,
    unitarity_monotone: bool,
    transform: Option<TransformRun>,
}

struct TransformRun {
    mu: f64,
    phases: Vec<f64>,
    projection_residual: f64,
    pairing: f64,
}

fn krein_run(n: usize) -> CoreResult<KreinRun> {
    let pair = build_krein(n, KREIN_LENGTH, KreinDiscretization::CellAverage)?.analyze()?;
    let difference = difference_report(&projection_pair(&pair, KREIN_PROBE)?)?;
    let ladder = epsilon_ladder(&pair.pair, KREIN_PROBE, &ladder(&KREIN_LADDER, 1.0))?;
    let bk = birman_krein_check(&pair, KREIN_PROBE, &ladder)?;
    let corner = corner_spectrum(&pair, KREIN_PROBE, Side::Plus)?;
    let transform = if n == KREIN_SIZES[0] { Some(transform_run(&pair)?) } else { None };
    Ok(KreinRun {
        n,
        window_average: spectral_shift_average(&pair, 0.4, 0.6),
        phases: ladder.phases.clone(),
        birman_krein_defect: bk.defect,
        corner_max: corner.max(),
        unitarity_monotone: ladder.unitarity_monotone,
        difference,
        transform,
    })
}

fn ladder(eps: &[f64], scale: f64) -> LadderOptions {
    LadderOptions { epsilons: eps.iter().map(|e| e * scale).collect(), ..Default::default() }
}

fn transform_run(pair: &AnalyzedPair) -> CoreResult<TransformRun> {
    let tr = resolvent_transform(pair, TRANSFORM_SHIFT)?;
    let mu = tr.map(KREIN_PROBE);
    // smoothing matched through |d mu / d lambda| = (lambda - a)^-2
    let scale = 1.0 / ((KREIN_PROBE - TRANSFORM_SHIFT) * (KREIN_PROBE - TRANSFORM_SHIFT));
    let transformed = tr.pair.clone().analyze()?;
    let ladder = epsilon_ladder(&transformed.pair, mu, &ladder(&KREIN_LADDER, scale))?;
    let original = projection_pair(pair, KREIN_PROBE)?.difference();
    let pp = projection_pair(&transformed, mu)?;
    let projection_residual = frobenius(&(&original + pp.difference()));
    let pairing = difference_report(&pp)?.pairing_defect;
    Ok(TransformRun { mu, phases: ladder.phases, projection_residual, pairing })
}

struct FillRun {
    a: f64,
    a_oracle: f64,
    middle: (f64, f64),
    hausdorff_coarse: f64,
    hausdorff_fine: f64,
    pairing: f64,
    unitarity_monotone: bool,
    fiber: [f64; 2],
    density_top: Vec<f64>,
}

const FILL_PROBE: f64 = 1.0;

fn fill_spec() -> PotentialSpec {
    PotentialSpec { half_width: 18.0, ..PotentialSpec::sech2(3.0) }
}

fn fill_run() -> CoreResult<FillRun> {
    let spec = fill_spec();
    let tm = transfer_matrix_smatrix(&spec, FILL_PROBE)?;
    let a_oracle = tm.eigenphases.iter().map(|t| (0.5 * t).sin().abs()).fold(0.0, f64::max);
    let grid = |m: usize, dmin: f64| MomentumGrid {
        nodes_per_segment: m,
        min_offset: dmin,
        cutoff: 14.0,
        position_nodes: 300,
        ..MomentumGrid::new(FILL_PROBE)
    };
    let fine = build_schrodinger_momentum(&spec, &grid(100, 1e-12))?.analyze()?;
    let ladder = epsilon_ladder(&fine.pair, FILL_PROBE, &LadderOptions::default())?;
    let a = ladder.predictions.a;
    let d_fine = difference_report(&projection_pair(&fine, FILL_PROBE)?)?;
    drop(fine);
    // doubling a graded grid doubles the node count and the resolved decades
    let coarse = build_schrodinger_momentum(&spec, &grid(50, 1e-6))?.analyze()?;
    let d_coarse = difference_report(&projection_pair(&coarse, FILL_PROBE)?)?;
    Ok(FillRun {
        a,
        a_oracle,
        middle: d_fine.middle_extremes(),
        hausdorff_coarse: d_coarse.fill_against(-a, a).hausdorff,
        hausdorff_fine: d_fine.fill_against(-a, a).hausdorff,
        pairing: d_fine.pairing_defect.max(d_coarse.pairing_defect),
        unitarity_monotone: ladder.unitarity_monotone,
        fiber: fiber_gram_eigenvalues(&spec, FILL_PROBE)?,
        density_top: ladder.density_top,
    })
}

struct EdgeRun {
    edges_sq: Vec<f64>,
    oracle_sq: Vec<f64>,
    corner_max: f64,
    slope_change: Option<f64>,
    pairing: f64,
}

const EDGE_PROBE: f64 = 0.2;

fn edge_run() -> CoreResult<EdgeRun> {
    let spec = PotentialSpec::sech2(1.0);
    let tm = transfer_matrix_smatrix(&spec, EDGE_PROBE)?;
    let mut oracle_sq: Vec<f64> = tm.eigenphases.iter().map(|t| (0.5 * t).sin().powi(2)).collect();
    oracle_sq.sort_by(|a, b| b.total_cmp(a));
    let grid = MomentumGrid { nodes_per_segment: 100, cutoff: 12.0, ..MomentumGrid::new(EDGE_PROBE) };
    let pair = build_schrodinger_momentum(&spec, &grid)?.analyze()?;
    let ladder = epsilon_ladder(&pair.pair, EDGE_PROBE, &LadderOptions::default())?;
    let corner = corner_spectrum(&pair, EDGE_PROBE, Side::Plus)?;
    let pairing = difference_report(&projection_pair(&pair, EDGE_PROBE)?)?.pairing_defect;
    Ok(EdgeRun {
        edges_sq: ladder.predictions.edges.iter().map(|e| e * e).collect(),
        oracle_sq,
        corner_max: corner.max(),
        slope_change: counting_slope_change(&corner.eigenvalues, SLOPE_FLOOR),
        pairing,
    })
}

struct HankelRun {
    top_low: f64,
    top_high: f64,
    within: bool,
    hausdorff: f64,
    additivity: f64,
    laplace_low: f64,
    laplace_high: f64,
    involution: f64,
    conjugation: f64,
    carleman: f64,
    worst_bound_margin: f64,
    bound_failures: Vec<String>,
    trace_c2: f64,
    trace_nuclear: f64,
}

/// Kernels with a declared `t ||K(t)|| <= C`, each on the rule it is checked on.
pub fn kernel_corpus() -> CoreResult<Vec<(String, HankelKernel, QuadratureRule, f64)>> {
    let band = default_band_rule(200)?;
    let exp = make_quadrature(QuadratureKind::ExpMapped { scale: 1.0 }, 80)?;
    Ok(vec![
        ("carleman".into(), HankelKernel::Scalar(ScalarKernel::Carleman), band.clone(), 1.0),
        ("laplace_high".into(), HankelKernel::Scalar(ScalarKernel::LaplaceHigh), band.clone(), 1.0),
        ("laplace_low".into(), HankelKernel::Scalar(ScalarKernel::LaplaceLow), band.clone(), 1.0),
        ("exp1".into(), HankelKernel::Scalar(ScalarKernel::Exponential { rate: 1.0 }), exp.clone(), 1.0 / E),
        ("exp2".into(), HankelKernel::Scalar(ScalarKernel::Exponential { rate: 2.0 }), exp.clone(), 0.5 / E),
        (
            "diagonal".into(),
            HankelKernel::Diagonal(vec![ScalarKernel::LaplaceHigh, ScalarKernel::Exponential { rate: 1.0 }]),
            exp,
            1.0,
        ),
        (
            "weighted".into(),
            HankelKernel::Weighted {
                profile: ScalarKernel::LaplaceLow,
                weight: CMatrix::from_row_slice(2, 2, &[c(0.6), c(0.2), c(0.2), c(0.3)]),
            },
            band,
            0.7,
        ),
    ])
}

fn hankel_run() -> CoreResult<HankelRun> {
    let rule = default_band_rule(300)?;
    let bands = band_pair(&rule)?;
    let t_rule = make_quadrature(QuadratureKind::LogMapped { lo: 1e-4, hi: 1e4 }, 60)?;
    let lap = laplace_factorizations(&t_rule, &laplace_rules(&t_rule, 200)?, 200)?;
    let carleman = carleman_norm(&rule)?;
    let mut worst_bound_margin = f64::INFINITY;
    let mut bound_failures = Vec::new();
    for (name, kernel, rule, declared) in kernel_corpus()? {
        let disc = build_hankel(&kernel, &rule, DEFAULT_MAX_KERNEL_DIM)?;
        match kernel_bound_suite(&disc, declared) {
            Ok(r) => {
                worst_bound_margin = worst_bound_margin.min(r.bound - r.operator_norm);
                if !r.holds() {
                    bound_failures.push(name);
                }
            }
            Err(e) => bound_failures.push(format!("{name}: {e}")),
        }
    }
    let data = TraceBoundData::new(1, default_trace_lambda_rule(200)?, |l| {
        CMatrix::from_element(1, 1, c(l * (-l).exp()))
    });
    let trace = trace_bound_check(&data, &make_quadrature(QuadratureKind::ExpMapped { scale: 1.0 }, 120)?)?;
    Ok(HankelRun {
        top_low: bands.top_low(),
        top_high: bands.top_high(),
        within: bands.within_bounds(),
        hausdorff: bands.hausdorff,
        additivity: bands.additivity_defect,
        laplace_low: lap.low_residual,
        laplace_high: lap.high_residual,
        involution: lap.involution_residual,
        conjugation: lap.conjugation_residual,
        carleman,
        worst_bound_margin,
        bound_failures,
        trace_c2: trace.c2,
        trace_nuclear: trace.nuclear_norm,
    })
}

fn gram_run() -> CoreResult<Info> {
    let pair = build_krein(300, KREIN_LENGTH, KreinDiscretization::CellAverage)?.analyze()?;
    let centred = shift_analyzed(&pair, KREIN_PROBE);
    let (below, above) = centred.check_gap(0.0, "gram comparison")?;
    let rule = make_quadrature(QuadratureKind::ExpMapped { scale: 1.0 / below.min(above) }, 120)?;
    let fine = model_comparison(&centred, &rule, &KREIN_LADDER)?;
    let coarse = model_comparison(&centred, &rule, &[0.4, 0.2, 0.1])?;
    let mut info = Info::new("gram_comparison");
    info.value("free_sigma1", fine.free.values[0]);
    info.value("free_sigma10_ratio", fine.free.ratio(10));
    info.value("free_strictly_decreasing", f64::from(u8::from(fine.free.strictly_decreasing(10))));
    info.value("perturbed_sigma1", fine.perturbed.values[0]);
    info.value("perturbed_sigma10_ratio", fine.perturbed.ratio(10));
    info.value("coarse_free_sigma1", coarse.free.values[0]);
    info.value("coarse_perturbed_sigma1", coarse.perturbed.values[0]);
    info.value("free_gram_norm", fine.free_gram_norm);
    info.value("decay_exponent", fine.free.exponent);
    info.notes.push("Krein n=300 at 0.5; densities extrapolated from eps {0.2,0.1,0.05} vs {0.4,0.2,0.1}".into());
    Ok(info)
}

fn determinism(seed: u64) -> Result<bool> {
    let config = ExperimentConfig::preset(&format!("finite:random({})", seed + 7))?;
    let a = run_experiment(&config, Some(1))?.to_json()?;
    let b = run_experiment(&config, Some(2))?.to_json()?;
    Ok(a == b)
}

// ---------------------------------------------------------------------------
// assembly

fn circular_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(2.0 * PI);
    d.min(2.0 * PI - d)
}

pub fn verify_all(opts: &VerifyOptions) -> Result<(VerifyReport, Timings)> {
    let start = Instant::now();
    let pool = thread_pool(opts.jobs)?;
    // longest first
    let tasks = [
        Task::Krein(KREIN_SIZES[1]),
        Task::FillIn,
        Task::Krein(KREIN_SIZES[0]),
        Task::Identities,
        Task::GramComparison,
        Task::BandEdges,
        Task::Hankel,
        Task::Determinism,
    ];
    let outputs: Vec<(String, std::result::Result<Output, String>, f64)> = pool.install(|| {
        tasks
            .par_iter()
            .map(|t| {
                let s = Instant::now();
                let out = t.run(opts);
                (t.name(), out, s.elapsed().as_secs_f64())
            })
            .collect()
    });

    let mut timings = Timings::default();
    let mut errors: BTreeMap<String, String> = BTreeMap::new();
    let mut identity = None;
    let mut krein: BTreeMap<usize, KreinRun> = BTreeMap::new();
    let (mut fill, mut edges, mut hankel, mut deterministic) = (None, None, None, None);
    let mut info = Vec::new();
    for (name, out, secs) in outputs {
        timings.tasks.insert(name.clone(), secs);
        match out {
            Ok(Output::Identities(r)) => identity = Some(r),
            Ok(Output::Krein(r)) => {
                krein.insert(r.n, *r);
            }
            Ok(Output::FillIn(r)) => fill = Some(*r),
            Ok(Output::BandEdges(r)) => edges = Some(*r),
            Ok(Output::Hankel(r)) => hankel = Some(r),
            Ok(Output::Gram(i)) => info.push(i),
            Ok(Output::Determinism(d)) => deterministic = Some(d),
            Err(e) => {
                errors.insert(name, e);
            }
        }
    }
    let t = &opts.thresholds;
    let missing = |c: &mut Criterion, task: &str| {
        let why = errors.get(task).cloned().unwrap_or_else(|| "not run".into());
        c.fail(format!("{task}: {why}"));
    };

    let mut criteria = Vec::new();

    // 1
    let mut c = Criterion::new(1, "exact identities on random pairs and Krein n=200");
    match &identity {
        Some(r) => {
            c.value("pairs", r.pairs as f64);
            c.require("all_pairs", r.failures.is_empty() && r.pairs == RANDOM_PAIRS as usize + 1);
            c.at_most("resolvent_identity", r.worst_c1, t.value("identity.c1"));
            c.at_most("block_square_per_dim", r.worst_block_per_dim, t.value("identity.block_square_per_dim"));
            c.at_most("smoothed_unitarity", r.worst_smoothed, t.value("identity.smoothed_unitarity"));
            c.at_most("sylvester_per_dim", r.worst_sylvester_per_dim, t.value("identity.sylvester_per_dim"));
            c.value("quadrature_route", r.worst_direct);
            c.require("runtime", r.seconds <= t.value("identity.runtime_seconds"));
            for f in &r.failures {
                c.notes.push(f.clone());
            }
        }
        None => missing(&mut c, "identities"),
    }
    criteria.push(c);

    // 2
    let mut c = Criterion::new(2, "Krein D-spectrum fills [-1, 1] at n=400");
    let window = t.value("krein_fill.window");
    match (krein.get(&KREIN_SIZES[0]), krein.get(&KREIN_SIZES[1])) {
        (Some(small), Some(large)) => {
            let metrics = |r: &KreinRun| {
                let (lo, hi) = r.difference.middle_extremes();
                ((1.0 - hi).max(1.0 + lo), r.difference.fill_against(-window, window).max_gap)
            };
            let (e_small, g_small) = metrics(small);
            let (e_large, g_large) = metrics(large);
            let (lo, hi) = large.difference.middle_extremes();
            c.value("extreme_low_400", lo);
            c.value("extreme_high_400", hi);
            c.value("extreme_distance_200", e_small);
            c.at_most("extreme_distance_400", e_large, t.value("krein_fill.extreme"));
            c.value("max_gap_200", g_small);
            c.at_most("max_gap_400", g_large, t.value("krein_fill.max_gap"));
            c.require("extremes_improve", e_large < e_small);
            c.require("max_gap_improves", g_large < g_small);
        }
        _ => {
            missing(&mut c, "krein_200");
            missing(&mut c, "krein_400");
        }
    }
    criteria.push(c);

    // 3
    let mut c = Criterion::new(3, "Krein spectral shift 1/2 and S = -1 at 0.5");
    match krein.get(&KREIN_SIZES[1]) {
        Some(r) => {
            let xi = -r.difference.trace;
            c.value("spectral_shift", xi);
            c.at_most("spectral_shift_error", (xi - 0.5).abs(), t.value("krein_scattering.spectral_shift"));
            let phase_err = r
                .phases
                .iter()
                .map(|th| ((th.cos() + 1.0).powi(2) + th.sin().powi(2)).sqrt())
                .fold(f64::INFINITY, f64::min);
            c.value("retained_phases", r.phases.len() as f64);
            c.at_most("phase_error", phase_err, t.value("krein_scattering.phase"));
            c.at_most("birman_krein_defect", r.birman_krein_defect, t.value("krein_scattering.birman_krein"));
        }
        None => missing(&mut c, "krein_400"),
    }
    criteria.push(c);

    // 4
    let mut c = Criterion::new(4, "sech^2 well at 1.0: D-spectrum support is [-a, a]");
    match &fill {
        Some(r) => {
            let (lo, hi) = r.middle;
            c.value("a", r.a);
            c.value("a_oracle", r.a_oracle);
            c.value("middle_low", lo);
            c.value("middle_high", hi);
            let support = (hi - r.a).abs().max((lo + r.a).abs());
            c.at_most("support_error", support, t.value("fill_in.support"));
            c.at_most("oracle_error", (r.a - r.a_oracle).abs(), t.value("fill_in.oracle"));
            c.value("hausdorff_coarse", r.hausdorff_coarse);
            c.value("hausdorff_fine", r.hausdorff_fine);
            c.require("hausdorff_decreases", r.hausdorff_fine < r.hausdorff_coarse);
        }
        None => missing(&mut c, "fill_in"),
    }
    criteria.push(c);

    // 5
    let mut c = Criterion::new(5, "two-phase well at 0.2: corner band edges sin^2(theta/2)");
    match &edges {
        Some(r) if r.edges_sq.len() >= 2 => {
            c.value("edge1_sq", r.edges_sq[0]);
            c.value("edge2_sq", r.edges_sq[1]);
            c.value("corner_max", r.corner_max);
            c.at_most("top_error", (r.corner_max - r.edges_sq[0]).abs(), t.value("band_edges.top"));
            match r.slope_change {
                Some(s) => {
                    c.value("slope_change", s);
                    c.at_most("slope_error", (s - r.edges_sq[1]).abs(), t.value("band_edges.slope"));
                }
                None => c.fail("no slope change found".into()),
            }
        }
        Some(r) => c.fail(format!("expected two retained phases, found {}", r.edges_sq.len())),
        None => missing(&mut c, "band_edges"),
    }
    criteria.push(c);

    // 6
    let mut c = Criterion::new(6, "Hankel operators, Laplace factorizations and kernel bounds");
    match &hankel {
        Some(r) => {
            c.require("spectra_in_range", r.within);
            c.at_most("low_top_gap", PI - r.top_low, t.value("hankel.top_gap"));
            c.at_most("high_top_gap", PI - r.top_high, t.value("hankel.top_gap"));
            c.at_most("hausdorff", r.hausdorff, t.value("hankel.hausdorff"));
            c.at_most("laplace_low", r.laplace_low, t.value("hankel.laplace"));
            c.at_most("laplace_high", r.laplace_high, t.value("hankel.laplace"));
            c.value("carleman_norm", r.carleman);
            c.require("carleman_range", r.carleman >= PI - t.value("hankel.carleman_gap") && r.carleman <= PI);
            c.value("bound_margin", r.worst_bound_margin);
            c.require("bounds_hold", r.bound_failures.is_empty());
            for f in &r.bound_failures {
                c.notes.push(f.clone());
            }
        }
        None => missing(&mut c, "hankel"),
    }
    criteria.push(c);

    // 7
    let mut c = Criterion::new(7, "middle spectrum of every D is symmetric");
    let mut worst = 0.0f64;
    let mut seen = 0;
    for r in krein.values() {
        worst = worst.max(r.difference.pairing_defect);
        seen += 1;
        if let Some(tr) = &r.transform {
            worst = worst.max(tr.pairing);
            seen += 1;
        }
    }
    for p in [fill.as_ref().map(|r| r.pairing), edges.as_ref().map(|r| r.pairing), identity.as_ref().map(|r| r.worst_pairing)]
        .into_iter()
        .flatten()
    {
        worst = worst.max(p);
        seen += 1;
    }
    c.value("spectra_checked", seen as f64);
    c.at_most("pairing_defect", worst, t.value("pairing.defect"));
    // Krein 200 and 400, the transformed pair, both wells and the identity suite
    c.require("all_sources", seen == 6);
    criteria.push(c);

    // 8
    let mut c = Criterion::new(8, "resolvent transform preserves phases and D");
    match krein.get(&KREIN_SIZES[0]).and_then(|r| r.transform.as_ref().map(|tr| (r, tr))) {
        Some((r, tr)) => {
            c.value("mu", tr.mu);
            // the transform reverses the energy axis, so its phases are conjugated
            let mismatch = if r.phases.len() == tr.phases.len() && !r.phases.is_empty() {
                r.phases
                    .iter()
                    .map(|p| {
                        tr.phases.iter().map(|q| circular_distance(*p, 2.0 * PI - q)).fold(f64::INFINITY, f64::min)
                    })
                    .fold(0.0, f64::max)
            } else {
                f64::INFINITY
            };
            c.at_most("phase_mismatch", mismatch, t.value("invariance.phase"));
            c.at_most("projection_residual", tr.projection_residual, t.value("invariance.projection"));
        }
        None => missing(&mut c, "krein_200"),
    }
    criteria.push(c);

    // 9
    let mut c = Criterion::new(9, "verify-all within budget and reproducible");
    timings.total = start.elapsed().as_secs_f64();
    c.require("within_budget", timings.total <= t.value("budget.verify_seconds"));
    match deterministic {
        Some(d) => c.require("byte_identical_reports", d),
        None => missing(&mut c, "determinism"),
    }
    criteria.push(c);

    // info
    for r in krein.values() {
        let mut i = Info::new("krein_spectral_shift");
        i.value("n", r.n as f64);
        i.value("trace_count", -r.difference.trace);
        i.value("window_average_0.4_0.6", r.window_average);
        i.value("corner_max", r.corner_max);
        i.value("unitarity_monotone", f64::from(u8::from(r.unitarity_monotone)));
        info.push(i);
    }
    if let Some(r) = &fill {
        let mut i = Info::new("fiber_density");
        i.value("fiber_top", r.fiber[0]);
        i.value("fiber_second", r.fiber[1]);
        for (k, v) in r.density_top.iter().enumerate() {
            i.value(format!("density_top_{k}"), *v);
        }
        i.value("unitarity_monotone", f64::from(u8::from(r.unitarity_monotone)));
        info.push(i);
    }
    if let Some(r) = &edges {
        let mut i = Info::new("band_edge_oracle");
        for (k, v) in r.oracle_sq.iter().enumerate() {
            i.value(format!("transfer_matrix_edge{}_sq", k + 1), *v);
        }
        info.push(i);
    }
    if let Some(r) = &hankel {
        let mut i = Info::new("hankel_extra");
        i.value("additivity", r.additivity);
        i.value("involution", r.involution);
        i.value("conjugation_central", r.conjugation);
        i.value("trace_c2", r.trace_c2);
        i.value("trace_nuclear", r.trace_nuclear);
        info.push(i);
    }
    for (task, e) in &errors {
        let mut i = Info::new("task_error");
        i.notes.push(format!("{task}: {e}"));
        info.push(i);
    }
    info.sort_by(|a, b| a.name.cmp(b.name).then_with(|| a.line().cmp(&b.line())));

    let report = VerifyReport {
        schema: SCHEMA_VERSION,
        seed: opts.seed,
        thresholds: t.iter().map(|(k, v)| (k.to_string(), v)).collect(),
        criteria,
        info,
    };
    Ok((report, timings))
}
