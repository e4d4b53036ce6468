//! Finite operator pairs `H = H0 + G* V0 G` and the models built on them.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::f64::consts::PI;
use core::fmt;

use nalgebra::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::linalg::{
    c, check_hermitian, check_shape, check_square, diag, frobenius, herm_eig, hermitian_part,
    CMatrix, Eigen,
};
use crate::quadrature::{gauss_legendre, make_quadrature, QuadratureKind};

/// Default half-width of the no-eigenvalue window around a probe.
pub const DEFAULT_GAP_TOLERANCE: f64 = 1e-8;

const FACTORIZATION_TOL: f64 = 1e-10;

/// Exact facts a model is known to satisfy, used as targets by the checks.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct KnownFacts {
    /// Common spectrum of `H0` and `H` when it is a single interval.
    pub spectrum: Option<(f64, f64)>,
    /// Constant value of the spectral shift function on `spectrum`.
    pub spectral_shift: Option<f64>,
    /// Scalar scattering matrix `e^{i theta}` on `spectrum`, as the angle.
    pub scattering_phase: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelInfo {
    pub name: String,
    pub parameters: Vec<(String, f64)>,
    pub known: KnownFacts,
    /// Required distance from a probe to the nearest eigenvalue of either operator.
    pub gap_tolerance: f64,
}

impl ModelInfo {
    pub fn named(name: impl Into<String>) -> Self {
        ModelInfo {
            name: name.into(),
            parameters: Vec::new(),
            known: KnownFacts::default(),
            gap_tolerance: DEFAULT_GAP_TOLERANCE,
        }
    }

    pub fn with(mut self, key: &str, value: f64) -> Self {
        self.parameters.push((key.to_string(), value));
        self
    }

    pub fn parameter(&self, key: &str) -> Option<f64> {
        self.parameters.iter().find(|(k, _)| k == key).map(|(_, v)| *v)
    }
}

/// `H0`, `H` on the same space and a factorization `H - H0 = G* V0 G` through an
/// auxiliary space of dimension `G.nrows()`.
#[derive(Debug, Clone)]
pub struct OperatorPair {
    pub h0: CMatrix,
    pub h: CMatrix,
    pub g: CMatrix,
    pub v0: CMatrix,
    pub info: ModelInfo,
}

impl OperatorPair {
    /// Validates shapes, Hermiticity and the factorization residual.
    pub fn new(h0: CMatrix, h: CMatrix, g: CMatrix, v0: CMatrix, info: ModelInfo) -> Result<Self> {
        check_hermitian(&h0, 1e-12, "H0")?;
        let n = h0.nrows();
        check_shape(&h, n, n, "H")?;
        check_hermitian(&h, 1e-12, "H")?;
        check_square(&v0, "V0")?;
        check_hermitian(&v0, 1e-12, "V0")?;
        check_shape(&g, v0.nrows(), n, "G")?;
        let pair = OperatorPair { h0, h, g, v0, info };
        let residual = pair.factorization_residual();
        let tolerance = FACTORIZATION_TOL * (frobenius(&pair.h) + frobenius(&pair.h0)).max(1.0);
        if residual > tolerance {
            return Err(Error::Inaccurate {
                context: "factorization H - H0 = G* V0 G",
                residual,
                tolerance,
            });
        }
        Ok(pair)
    }

    pub fn dim(&self) -> usize {
        self.h0.nrows()
    }

    pub fn aux_dim(&self) -> usize {
        self.v0.nrows()
    }

    /// `G* V0 G`.
    pub fn perturbation(&self) -> CMatrix {
        self.g.adjoint() * &self.v0 * &self.g
    }

    /// `||H - H0 - G* V0 G||`.
    pub fn factorization_residual(&self) -> f64 {
        frobenius(&(&self.h - &self.h0 - self.perturbation()))
    }

    /// Eigendecompositions of both operators.
    pub fn analyze(self) -> Result<AnalyzedPair> {
        let eig0 = herm_eig(&self.h0)?;
        let eig = herm_eig(&self.h)?;
        Ok(AnalyzedPair { pair: self, eig0, eig })
    }
}

/// A pair together with the eigendecompositions of `H0` and `H`.
#[derive(Debug, Clone)]
pub struct AnalyzedPair {
    pub pair: OperatorPair,
    pub eig0: Eigen,
    pub eig: Eigen,
}

impl AnalyzedPair {
    pub fn dim(&self) -> usize {
        self.pair.dim()
    }

    pub fn gap_tolerance(&self) -> f64 {
        self.pair.info.gap_tolerance
    }

    /// Errors if either operator has an eigenvalue within the model's gap
    /// tolerance of `probe`; returns the two distances otherwise.
    pub fn check_gap(&self, probe: f64, context: &'static str) -> Result<(f64, f64)> {
        let tolerance = self.gap_tolerance();
        let mut gaps = [f64::INFINITY; 2];
        for (slot, eig) in gaps.iter_mut().zip([&self.eig0, &self.eig]) {
            if let Some(near) = eig.nearest(probe) {
                let dist = libm::fabs(near - probe);
                if dist < tolerance {
                    return Err(Error::GapViolation { context, probe, eigenvalue: near, tolerance });
                }
                *slot = dist;
            }
        }
        Ok((gaps[0], gaps[1]))
    }
}

/// `H = H0 + G* V0 G` for given Hermitian `H0`, `V0`.
pub fn build_finite_pair(h0: CMatrix, g: CMatrix, v0: CMatrix) -> Result<OperatorPair> {
    check_hermitian(&h0, 1e-12, "H0")?;
    check_square(&v0, "V0")?;
    check_hermitian(&v0, 1e-12, "V0")?;
    check_shape(&g, v0.nrows(), h0.nrows(), "G")?;
    let h = hermitian_part(&(&h0 + g.adjoint() * &v0 * &g));
    OperatorPair::new(h0, h, g, v0, ModelInfo::named("finite"))
}

/// Factorization with auxiliary space equal to the state space:
/// `G = |V|^{1/2}`, `V0 = sign V`.
pub fn build_polar_pair(h0: CMatrix, v: &CMatrix) -> Result<OperatorPair> {
    let eig = herm_eig(v)?;
    let g = eig.apply_fn(|x| libm::sqrt(libm::fabs(x)));
    let v0 = eig.apply_fn(|x| if x > 0.0 { 1.0 } else if x < 0.0 { -1.0 } else { 0.0 });
    let mut pair = build_finite_pair(h0, g, v0)?;
    pair.info = ModelInfo::named("polar");
    Ok(pair)
}

/// `H0 - lambda0`, `H - lambda0`; `G` and `V0` unchanged.
pub fn shift_pair(pair: &OperatorPair, lambda0: f64) -> OperatorPair {
    let n = pair.dim();
    let shift = diag(&alloc::vec![lambda0; n]);
    let mut info = pair.info.clone();
    if lambda0 != 0.0 {
        info.name = format!("{} shifted by {lambda0}", info.name);
        info.known.spectrum = info.known.spectrum.map(|(a, b)| (a - lambda0, b - lambda0));
    }
    OperatorPair {
        h0: &pair.h0 - &shift,
        h: &pair.h - &shift,
        g: pair.g.clone(),
        v0: pair.v0.clone(),
        info,
    }
}

/// Shifts an analyzed pair without recomputing eigenvectors.
pub fn shift_analyzed(pair: &AnalyzedPair, lambda0: f64) -> AnalyzedPair {
    let mut eig0 = pair.eig0.clone();
    let mut eig = pair.eig.clone();
    eig0.values.iter_mut().for_each(|v| *v -= lambda0);
    eig.values.iter_mut().for_each(|v| *v -= lambda0);
    AnalyzedPair { pair: shift_pair(&pair.pair, lambda0), eig0, eig }
}

// ---------------------------------------------------------------------------
// Krein's pair on the half-line

/// `H0(x, y) = sinh(min) e^{-max}`.
pub fn krein_kernel_free(x: f64, y: f64) -> f64 {
    let (lo, hi) = if x <= y { (x, y) } else { (y, x) };
    libm::sinh(lo) * libm::exp(-hi)
}

/// `H(x, y) = H0(x, y) + e^{-x} e^{-y}`.
pub fn krein_kernel_perturbed(x: f64, y: f64) -> f64 {
    krein_kernel_free(x, y) + libm::exp(-x - y)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum KreinDiscretization {
    /// Galerkin on piecewise constants over Gauss-Legendre cells; an exact
    /// compression, so both spectra stay inside `[0, 1]`.
    #[default]
    CellAverage,
    /// `W^{1/2} K(x_i, x_j) W^{1/2}` at Gauss-Legendre nodes.
    Nystrom,
}

fn krein_facts() -> KnownFacts {
    KnownFacts {
        spectrum: Some((0.0, 1.0)),
        spectral_shift: Some(0.5),
        scattering_phase: Some(PI),
    }
}

/// Krein's rank-one pair on `[0, L]` with `n` cells or nodes.
pub fn build_krein(n: usize, length: f64, scheme: KreinDiscretization) -> Result<OperatorPair> {
    if n < 16 {
        return Err(Error::InvalidParameter { name: "n", reason: format!("need n >= 16, got {n}") });
    }
    if !(length >= 10.0) || !length.is_finite() {
        return Err(Error::InvalidParameter {
            name: "L",
            reason: format!("need 10 <= L < inf, got {length}"),
        });
    }
    let (x, w) = gauss_legendre(n);
    let nodes: Vec<f64> = x.iter().map(|s| 0.5 * length * (s + 1.0)).collect();
    let weights: Vec<f64> = w.iter().map(|v| 0.5 * length * v).collect();

    let (h0, phi) = match scheme {
        KreinDiscretization::Nystrom => {
            let sw: Vec<f64> = weights.iter().map(|v| libm::sqrt(*v)).collect();
            let h0 = CMatrix::from_fn(n, n, |i, j| c(sw[i] * krein_kernel_free(nodes[i], nodes[j]) * sw[j]));
            let phi: Vec<f64> = (0..n).map(|i| sw[i] * libm::exp(-nodes[i])).collect();
            (h0, phi)
        }
        KreinDiscretization::CellAverage => {
            let mut edges = Vec::with_capacity(n + 1);
            edges.push(0.0);
            let mut acc = 0.0;
            for v in &weights {
                acc += v;
                edges.push(acc);
            }
            edges[n] = length;
            let lo = &edges[..n];
            let hi = &edges[1..];
            let width: Vec<f64> = lo.iter().zip(hi).map(|(a, b)| b - a).collect();
            // integrals of sinh and e^{-y} over each cell
            let sinh_int: Vec<f64> = lo.iter().zip(hi).map(|(a, b)| libm::cosh(*b) - libm::cosh(*a)).collect();
            let exp_int: Vec<f64> = lo.iter().zip(hi).map(|(a, b)| libm::exp(-a) - libm::exp(-b)).collect();
            let h0 = CMatrix::from_fn(n, n, |i, j| {
                let value = if i == j {
                    let (a, h) = (lo[i], width[i]);
                    h + libm::expm1(-h) + libm::exp(-2.0 * a) * (-0.5 * libm::expm1(-2.0 * h) + libm::expm1(-h))
                } else if i < j {
                    sinh_int[i] * exp_int[j]
                } else {
                    sinh_int[j] * exp_int[i]
                };
                c(value / libm::sqrt(width[i] * width[j]))
            });
            let phi = (0..n).map(|i| exp_int[i] / libm::sqrt(width[i])).collect();
            (h0, phi)
        }
    };
    let g = CMatrix::from_fn(1, n, |_, j| c(phi[j]));
    let v0 = diag(&[1.0]);
    let h = hermitian_part(&(&h0 + g.adjoint() * &g));
    let name = match scheme {
        KreinDiscretization::CellAverage => "krein",
        KreinDiscretization::Nystrom => "krein:nystrom",
    };
    let info = ModelInfo {
        known: krein_facts(),
        ..ModelInfo::named(name).with("n", n as f64).with("L", length)
    };
    OperatorPair::new(h0, h, g, v0, info)
}

/// Krein's pair in the sine-transform representation of `H0`, on a momentum
/// grid graded logarithmically toward the level `k0 = sqrt(1/probe - 1)`.
///
/// `H0 = diag(1/(1+k^2))`, `G` the row `sqrt(2/pi) k/(1+k^2)` times root weights.
/// The closest levels sit at momentum distance `min_offset` from `k0`.
pub fn build_krein_spectral(
    nodes_per_side: usize,
    min_offset: f64,
    probe: f64,
) -> Result<OperatorPair> {
    if !(probe > 0.0 && probe < 1.0) {
        return Err(Error::InvalidParameter {
            name: "probe",
            reason: format!("must lie in (0, 1), got {probe}"),
        });
    }
    let k0 = libm::sqrt(1.0 / probe - 1.0);
    let grid = graded_two_sided(k0, nodes_per_side, min_offset, k0, 1e3)?;
    let (k, w) = (grid.0, grid.1);
    let n = k.len();
    let h0 = diag(&k.iter().map(|k| 1.0 / (1.0 + k * k)).collect::<Vec<_>>());
    let scale = libm::sqrt(2.0 / PI);
    let g = CMatrix::from_fn(1, n, |_, j| c(scale * k[j] / (1.0 + k[j] * k[j]) * libm::sqrt(w[j])));
    let v0 = diag(&[1.0]);
    let h = hermitian_part(&(&h0 + g.adjoint() * &g));
    // |d mu / dk| = 2 k mu^2 at the probe
    let level_gap = probe * probe * k0 * min_offset;
    let info = ModelInfo {
        known: krein_facts(),
        gap_tolerance: level_gap.min(DEFAULT_GAP_TOLERANCE),
        ..ModelInfo::named("krein:spectral")
            .with("nodes_per_side", nodes_per_side as f64)
            .with("min_offset", min_offset)
            .with("probe", probe)
    };
    OperatorPair::new(h0, h, g, v0, info)
}

/// Nodes `k0 - d` and `k0 + d` with `d` Gauss-Legendre in `ln d` on
/// `[dmin, below]` and `[dmin, above]`, ascending in `k`.
fn graded_two_sided(
    k0: f64,
    m: usize,
    dmin: f64,
    below: f64,
    above: f64,
) -> Result<(Vec<f64>, Vec<f64>)> {
    if !(dmin > 0.0 && dmin < below && dmin < above) {
        return Err(Error::InvalidParameter {
            name: "min_offset",
            reason: format!("offset {dmin} must be positive and below the segment lengths"),
        });
    }
    let left = make_quadrature(QuadratureKind::LogMapped { lo: dmin, hi: below }, m)?;
    let right = make_quadrature(QuadratureKind::LogMapped { lo: dmin, hi: above }, m)?;
    let mut k = Vec::with_capacity(2 * m);
    let mut w = Vec::with_capacity(2 * m);
    for i in (0..m).rev() {
        k.push(k0 - left.nodes[i]);
        w.push(left.weights[i]);
    }
    for i in 0..m {
        k.push(k0 + right.nodes[i]);
        w.push(right.weights[i]);
    }
    Ok((k, w))
}

// ---------------------------------------------------------------------------
// One-dimensional Schrodinger pairs

/// Potential profile.
#[derive(Clone)]
pub enum Potential {
    /// `-depth` on `|x| < half_width`, zero outside.
    SquareWell { depth: f64, half_width: f64 },
    /// `-amplitude * sech^2(x)`.
    Sech2 { amplitude: f64 },
    /// Arbitrary real function.
    Custom(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl fmt::Debug for Potential {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Potential::SquareWell { depth, half_width } => f
                .debug_struct("SquareWell")
                .field("depth", depth)
                .field("half_width", half_width)
                .finish(),
            Potential::Sech2 { amplitude } => f.debug_struct("Sech2").field("amplitude", amplitude).finish(),
            Potential::Custom(_) => f.write_str("Custom(..)"),
        }
    }
}

impl Potential {
    pub fn eval(&self, x: f64) -> f64 {
        match self {
            Potential::SquareWell { depth, half_width } => {
                if libm::fabs(x) < *half_width {
                    -depth
                } else {
                    0.0
                }
            }
            Potential::Sech2 { amplitude } => {
                let s = 1.0 / libm::cosh(x);
                -amplitude * s * s
            }
            Potential::Custom(f) => f(x),
        }
    }

    /// Points where the potential jumps.
    pub fn discontinuities(&self) -> Vec<f64> {
        match self {
            Potential::SquareWell { half_width, .. } => alloc::vec![-half_width, *half_width],
            _ => Vec::new(),
        }
    }
}

/// Potential with its declared decay bound `|V(x)| <= C (1+|x|)^-rho` and the
/// box `[-X, X]` discretized with `n` interior points.
#[derive(Debug, Clone)]
pub struct PotentialSpec {
    pub potential: Potential,
    pub decay_exponent: f64,
    pub decay_constant: f64,
    pub half_width: f64,
    pub grid_size: usize,
}

impl PotentialSpec {
    pub fn square_well(depth: f64, half_width: f64) -> Self {
        PotentialSpec {
            potential: Potential::SquareWell { depth, half_width },
            decay_exponent: 2.0,
            decay_constant: depth * (1.0 + half_width) * (1.0 + half_width),
            half_width: 20.0,
            grid_size: 400,
        }
    }

    /// `sech^2(x) <= 4 e^{-2|x|} <= 4 (1+|x|)^-2`.
    pub fn sech2(amplitude: f64) -> Self {
        PotentialSpec {
            potential: Potential::Sech2 { amplitude },
            decay_exponent: 2.0,
            decay_constant: 4.0 * libm::fabs(amplitude),
            half_width: 20.0,
            grid_size: 400,
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.potential.eval(x)
    }

    /// Checks the declared bound at the given sample points.
    pub fn check_decay(&self, samples: &[f64]) -> Result<()> {
        if !(self.decay_exponent > 1.0) {
            return Err(Error::InvalidParameter {
                name: "decay exponent",
                reason: format!("rho must exceed 1, got {}", self.decay_exponent),
            });
        }
        for &x in samples {
            let value = libm::fabs(self.eval(x));
            let bound = self.decay_constant * libm::pow(1.0 + libm::fabs(x), -self.decay_exponent);
            if !value.is_finite() || value > bound * (1.0 + 1e-12) {
                return Err(Error::DecayViolation { x, value, bound });
            }
        }
        Ok(())
    }

    fn validate_box(&self) -> Result<()> {
        if !(self.half_width > 0.0) || !self.half_width.is_finite() {
            return Err(Error::InvalidParameter {
                name: "half_width",
                reason: format!("must be positive, got {}", self.half_width),
            });
        }
        Ok(())
    }
}

// Auxiliary-space entries with |V| below this fraction of max |V| are dropped.
const SUPPORT_CUTOFF: f64 = 1e-14;

/// Keeps indices where `|V|` is non-negligible; returns them with the values.
fn support(values: &[f64]) -> Vec<(usize, f64)> {
    let peak = values.iter().fold(0.0f64, |m, v| m.max(libm::fabs(*v)));
    values
        .iter()
        .enumerate()
        .filter(|(_, v)| peak > 0.0 && libm::fabs(**v) > SUPPORT_CUTOFF * peak)
        .map(|(i, v)| (i, *v))
        .collect()
}

fn sign(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Central-difference Dirichlet Laplacian on `[-X, X]` plus `diag V`.
///
/// The auxiliary space is the set of grid points where `V` is non-negligible,
/// `G` picks those points with weight `|V|^{1/2}` and `V0 = diag(sign V)`.
pub fn build_schrodinger_1d(spec: &PotentialSpec) -> Result<OperatorPair> {
    spec.validate_box()?;
    let n = spec.grid_size;
    if n < 3 {
        return Err(Error::InvalidParameter { name: "grid_size", reason: format!("need n >= 3, got {n}") });
    }
    let step = 2.0 * spec.half_width / (n as f64 + 1.0);
    let xs: Vec<f64> = (1..=n).map(|i| -spec.half_width + i as f64 * step).collect();
    spec.check_decay(&xs)?;
    let values: Vec<f64> = xs.iter().map(|&x| spec.eval(x)).collect();

    let inv_h2 = 1.0 / (step * step);
    let h0 = CMatrix::from_fn(n, n, |i, j| {
        if i == j {
            c(2.0 * inv_h2)
        } else if i + 1 == j || j + 1 == i {
            c(-inv_h2)
        } else {
            c(0.0)
        }
    });
    let kept = support(&values);
    let (g, v0) = if kept.is_empty() {
        (CMatrix::zeros(1, n), diag(&[0.0]))
    } else {
        let mut g = CMatrix::zeros(kept.len(), n);
        for (row, &(i, v)) in kept.iter().enumerate() {
            g[(row, i)] = c(libm::sqrt(libm::fabs(v)));
        }
        (g, diag(&kept.iter().map(|(_, v)| sign(*v)).collect::<Vec<_>>()))
    };
    let h = &h0 + g.adjoint() * &v0 * &g;
    let info = ModelInfo::named("schrodinger:box")
        .with("n", n as f64)
        .with("X", spec.half_width);
    OperatorPair::new(h0, h, g, v0, info)
}

/// Momentum grid for [`build_schrodinger_momentum`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentumGrid {
    /// Energy the grid is graded toward; levels accumulate at `p = +-sqrt(probe)`.
    pub probe: f64,
    /// Gauss-Legendre nodes in each of the four log-graded segments.
    pub nodes_per_segment: usize,
    /// Smallest momentum offset `|p| - sqrt(probe)`.
    pub min_offset: f64,
    /// Momentum cutoff `P`.
    pub cutoff: f64,
    /// Gauss-Legendre nodes in position space on `[-X, X]`.
    pub position_nodes: usize,
}

impl MomentumGrid {
    pub fn new(probe: f64) -> Self {
        MomentumGrid {
            probe,
            nodes_per_segment: 100,
            min_offset: 1e-12,
            cutoff: 12.0,
            position_nodes: 300,
        }
    }
}

/// `H0 = p^2` on a momentum grid graded toward `+-sqrt(probe)`; the perturbation
/// acts through position-space quadrature nodes:
/// `G[m, j] = sqrt(w_m |V(x_m)|) e^{i p_j x_m} / sqrt(2 pi) * sqrt(W_j)`.
pub fn build_schrodinger_momentum(spec: &PotentialSpec, grid: &MomentumGrid) -> Result<OperatorPair> {
    spec.validate_box()?;
    if !(grid.probe > 0.0) {
        return Err(Error::NonPositiveEnergy(grid.probe));
    }
    let k0 = libm::sqrt(grid.probe);
    if !(grid.cutoff > 2.0 * k0) {
        return Err(Error::InvalidParameter {
            name: "cutoff",
            reason: format!("cutoff {} must exceed 2 sqrt(probe)", grid.cutoff),
        });
    }
    let (pos, pos_w) = graded_two_sided(k0, grid.nodes_per_segment, grid.min_offset, k0, grid.cutoff - k0)?;
    let mut p: Vec<f64> = pos.iter().rev().map(|v| -v).collect();
    let mut weights: Vec<f64> = pos_w.iter().rev().copied().collect();
    p.extend_from_slice(&pos);
    weights.extend_from_slice(&pos_w);
    let n = p.len();

    let xq = make_quadrature(
        QuadratureKind::Legendre { lo: -spec.half_width, hi: spec.half_width },
        grid.position_nodes,
    )?;
    spec.check_decay(&xq.nodes)?;
    let values: Vec<f64> = xq.nodes.iter().map(|&x| spec.eval(x)).collect();
    let kept = support(&values);
    if kept.is_empty() {
        return Err(Error::InvalidParameter { name: "potential", reason: "vanishes on the quadrature grid".into() });
    }
    let norm = 1.0 / libm::sqrt(2.0 * PI);
    let sqrt_w: Vec<f64> = weights.iter().map(|w| libm::sqrt(*w)).collect();
    let g = CMatrix::from_fn(kept.len(), n, |row, j| {
        let (m, v) = kept[row];
        let x = xq.nodes[m];
        let amp = libm::sqrt(xq.weights[m] * libm::fabs(v)) * norm * sqrt_w[j];
        let phase = p[j] * x;
        Complex::new(amp * libm::cos(phase), amp * libm::sin(phase))
    });
    let v0 = diag(&kept.iter().map(|(_, v)| sign(*v)).collect::<Vec<_>>());
    let h0 = diag(&p.iter().map(|p| p * p).collect::<Vec<_>>());
    let h = hermitian_part(&(&h0 + g.adjoint() * &v0 * &g));
    // nearest free level sits at (k0 + dmin)^2 - k0^2 ~ 2 k0 dmin
    let level_gap = k0 * grid.min_offset;
    let info = ModelInfo {
        gap_tolerance: level_gap.min(DEFAULT_GAP_TOLERANCE),
        ..ModelInfo::named("schrodinger:momentum")
            .with("probe", grid.probe)
            .with("nodes_per_segment", grid.nodes_per_segment as f64)
            .with("min_offset", grid.min_offset)
            .with("cutoff", grid.cutoff)
            .with("X", spec.half_width)
    };
    OperatorPair::new(h0, h, g, v0, info)
}

// ---------------------------------------------------------------------------
// Random pairs

#[derive(Debug, Clone, PartialEq)]
pub struct RandomPairOptions {
    pub dim: usize,
    pub rank: usize,
    /// Energies that must stay at least `min_gap` from both spectra.
    pub probes: Vec<f64>,
    pub min_gap: f64,
    /// Standard deviation of the entries of `G`.
    pub coupling: f64,
}

impl Default for RandomPairOptions {
    fn default() -> Self {
        RandomPairOptions { dim: 8, rank: 3, probes: alloc::vec![0.0], min_gap: 1e-2, coupling: 0.3 }
    }
}

const RANDOM_ATTEMPTS: usize = 1000;

/// `H0 = diag(uniform[-1, 1])`, complex Gaussian `G` of the given rank, random
/// `+-1` diagonal `V0`, resampled until every probe is gapped for both operators.
pub fn random_pair(seed: u64, options: &RandomPairOptions) -> Result<OperatorPair> {
    let RandomPairOptions { dim, rank, ref probes, min_gap, coupling } = *options;
    if dim == 0 || rank == 0 || rank > dim {
        return Err(Error::InvalidParameter {
            name: "random pair",
            reason: format!("need 1 <= rank <= dim, got rank {rank}, dim {dim}"),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let far = |x: f64| probes.iter().all(|p| libm::fabs(x - p) >= min_gap);
    for _ in 0..RANDOM_ATTEMPTS {
        let mut energies = Vec::with_capacity(dim);
        while energies.len() < dim {
            let e: f64 = rng.random_range(-1.0..1.0);
            if far(e) {
                energies.push(e);
            }
        }
        let scale = coupling * core::f64::consts::FRAC_1_SQRT_2;
        let g = CMatrix::from_fn(rank, dim, |_, _| {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            Complex::new(scale * re, scale * im)
        });
        let signs: Vec<f64> = (0..rank).map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 }).collect();
        let mut pair = build_finite_pair(diag(&energies), g, diag(&signs))?;
        let spectrum = crate::linalg::herm_eigenvalues(&pair.h)?;
        if spectrum.iter().all(|&e| far(e)) {
            pair.info = ModelInfo::named(format!("finite:random({seed})"))
                .with("dim", dim as f64)
                .with("rank", rank as f64);
            return Ok(pair);
        }
    }
    Err(Error::InvalidParameter {
        name: "random pair",
        reason: format!("no gapped sample in {RANDOM_ATTEMPTS} attempts"),
    })
}

// ---------------------------------------------------------------------------
// Resolvent transform

/// The pair `h0 = (H0 - a)^{-1}`, `h = (H - a)^{-1}` with
/// `h - h0 = g* v0 g`, `g = G h0`, `v0 = -V0 + V0 G h G* V0`.
#[derive(Debug, Clone)]
pub struct ResolventTransform {
    pub shift: f64,
    pub pair: OperatorPair,
}

impl ResolventTransform {
    /// `mu(lambda) = 1/(lambda - a)`, decreasing on `lambda > a`.
    pub fn map(&self, lambda: f64) -> f64 {
        1.0 / (lambda - self.shift)
    }
}

const TRANSFORM_MARGIN: f64 = 1e-6;

pub fn resolvent_transform(pair: &AnalyzedPair, shift: f64) -> Result<ResolventTransform> {
    let lowest = pair.eig0.values[0].min(pair.eig.values[0]);
    let highest = pair.eig0.values[pair.dim() - 1].max(pair.eig.values[pair.dim() - 1]);
    if !(shift < lowest - TRANSFORM_MARGIN) {
        return Err(Error::ShiftInSpectrum { shift, lowest });
    }
    let p = &pair.pair;
    let h0 = pair.eig0.apply_fn(|e| 1.0 / (e - shift));
    let h = pair.eig.apply_fn(|e| 1.0 / (e - shift));
    let g = &p.g * &h0;
    let v0 = hermitian_part(&(-&p.v0 + &p.v0 * &p.g * &h * p.g.adjoint() * &p.v0));
    let mut info = p.info.clone();
    info.name = format!("{} resolvent at {shift}", info.name);
    info.known.spectrum = info
        .known
        .spectrum
        .map(|(lo, hi)| (1.0 / (hi - shift), 1.0 / (lo - shift)));
    // level spacings shrink by at most |mu'| = (highest - a)^-2
    let contraction = (highest - shift).max(1.0);
    info.gap_tolerance = p.info.gap_tolerance / (contraction * contraction);
    let pair = OperatorPair::new(h0, h, g, v0, info)?;
    Ok(ResolventTransform { shift, pair })
}
