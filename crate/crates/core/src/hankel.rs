//! Hankel operators on the half-line, discretized on a quadrature rule as
//! `W^{1/2} K(t_i + t_j) W^{1/2}` (block-valued for matrix kernels).

use alloc::format;
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::f64::consts::PI;
use core::fmt;

use crate::error::{Error, Result};
use crate::linalg::{c, check_finite, herm_eigenvalues, identity, operator_norm, singular_values, CMatrix};
use crate::projections::{fill_metrics, hausdorff, FillMetrics};
use crate::quadrature::{gauss_legendre, make_quadrature, QuadratureKind, QuadratureRule, Support};

pub const DEFAULT_MAX_KERNEL_DIM: usize = 32;

/// Spectra of the Laplace-band pair are checked against `[0, pi]` up to this.
pub const SPECTRUM_SLACK: f64 = 1e-8;

/// Scalar kernel profiles `k(s)`, evaluated at `s = t + t'`.
#[derive(Clone)]
pub enum ScalarKernel {
    Zero,
    /// `1 / s`.
    Carleman,
    /// `(1 - e^{-s}) / s`, the Laplace band `lambda in (0, 1)`.
    LaplaceLow,
    /// `e^{-s} / s`, the Laplace band `lambda in (1, inf)`.
    LaplaceHigh,
    /// `e^{-rate s}`.
    Exponential { rate: f64 },
    Custom(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl fmt::Debug for ScalarKernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScalarKernel::Zero => f.write_str("Zero"),
            ScalarKernel::Carleman => f.write_str("Carleman"),
            ScalarKernel::LaplaceLow => f.write_str("LaplaceLow"),
            ScalarKernel::LaplaceHigh => f.write_str("LaplaceHigh"),
            ScalarKernel::Exponential { rate } => write!(f, "Exponential {{ rate: {rate} }}"),
            ScalarKernel::Custom(_) => f.write_str("Custom"),
        }
    }
}

impl ScalarKernel {
    pub fn eval(&self, s: f64) -> f64 {
        match self {
            ScalarKernel::Zero => 0.0,
            ScalarKernel::Carleman => 1.0 / s,
            ScalarKernel::LaplaceLow => -libm::expm1(-s) / s,
            ScalarKernel::LaplaceHigh => libm::exp(-s) / s,
            ScalarKernel::Exponential { rate } => libm::exp(-rate * s),
            ScalarKernel::Custom(f) => f(s),
        }
    }
}

/// Matrix-valued kernel `K(s)` acting on an auxiliary space of dimension `dim()`.
#[derive(Clone)]
pub enum HankelKernel {
    Scalar(ScalarKernel),
    Diagonal(Vec<ScalarKernel>),
    /// `profile(s) * weight` with a fixed Hermitian `weight`.
    Weighted { profile: ScalarKernel, weight: CMatrix },
    Matrix {
        dim: usize,
        eval: Arc<dyn Fn(f64) -> CMatrix + Send + Sync>,
    },
}

impl fmt::Debug for HankelKernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            HankelKernel::Scalar(k) => f.debug_tuple("Scalar").field(k).finish(),
            HankelKernel::Diagonal(ks) => f.debug_tuple("Diagonal").field(ks).finish(),
            HankelKernel::Weighted { profile, weight } => f
                .debug_struct("Weighted")
                .field("profile", profile)
                .field("dim", &weight.nrows())
                .finish(),
            HankelKernel::Matrix { dim, .. } => f.debug_struct("Matrix").field("dim", dim).finish(),
        }
    }
}

impl HankelKernel {
    pub fn dim(&self) -> usize {
        match self {
            HankelKernel::Scalar(_) => 1,
            HankelKernel::Diagonal(ks) => ks.len(),
            HankelKernel::Weighted { weight, .. } => weight.nrows(),
            HankelKernel::Matrix { dim, .. } => *dim,
        }
    }

    pub fn eval(&self, s: f64) -> CMatrix {
        match self {
            HankelKernel::Scalar(k) => CMatrix::from_element(1, 1, c(k.eval(s))),
            HankelKernel::Diagonal(ks) => {
                let d: Vec<f64> = ks.iter().map(|k| k.eval(s)).collect();
                crate::linalg::diag(&d)
            }
            HankelKernel::Weighted { profile, weight } => weight * c(profile.eval(s)),
            HankelKernel::Matrix { eval, .. } => eval(s),
        }
    }

    /// `||K(s)||` in operator norm.
    pub fn norm_at(&self, s: f64) -> Result<f64> {
        match self {
            HankelKernel::Scalar(k) => Ok(libm::fabs(k.eval(s))),
            HankelKernel::Diagonal(ks) => Ok(ks.iter().map(|k| libm::fabs(k.eval(s))).fold(0.0, f64::max)),
            _ => operator_norm(&self.eval(s)),
        }
    }
}

#[derive(Debug, Clone)]
pub struct HankelDiscretization {
    pub rule: QuadratureRule,
    pub kernel: HankelKernel,
    pub kernel_dim: usize,
    /// Node-major: row `i * kernel_dim + a`.
    pub matrix: CMatrix,
}

impl HankelDiscretization {
    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        herm_eigenvalues(&self.matrix)
    }

    pub fn norm(&self) -> Result<f64> {
        operator_norm(&self.matrix)
    }

    pub fn singular_values(&self) -> Result<Vec<f64>> {
        singular_values(&self.matrix)
    }
}

pub fn build_hankel(kernel: &HankelKernel, rule: &QuadratureRule, max_kernel_dim: usize) -> Result<HankelDiscretization> {
    let kdim = kernel.dim();
    if kdim == 0 || kdim > max_kernel_dim {
        return Err(Error::InvalidParameter {
            name: "kernel dimension",
            reason: format!("{kdim} is outside 1..={max_kernel_dim}"),
        });
    }
    if let HankelKernel::Weighted { weight, .. } = kernel {
        crate::linalg::check_square(weight, "kernel weight")?;
        crate::linalg::check_hermitian(weight, 1e-12, "kernel weight")?;
    }
    let n = rule.len();
    let t = &rule.nodes;
    let sw = rule.sqrt_weights();
    let mut matrix = CMatrix::zeros(n * kdim, n * kdim);
    for i in 0..n {
        for j in i..n {
            let s = t[i] + t[j];
            if !(s > 0.0) {
                return Err(Error::KernelSingular { t: s });
            }
            let scale = sw[i] * sw[j];
            if let HankelKernel::Scalar(k) = kernel {
                let v = k.eval(s);
                if !v.is_finite() {
                    return Err(Error::KernelSingular { t: s });
                }
                matrix[(i, j)] = c(scale * v);
                matrix[(j, i)] = c(scale * v);
                continue;
            }
            let block = kernel.eval(s);
            if block.nrows() != kdim || block.ncols() != kdim || check_finite(&block, "kernel").is_err() {
                return Err(Error::KernelSingular { t: s });
            }
            for a in 0..kdim {
                for b in 0..kdim {
                    let v = block[(a, b)] * scale;
                    matrix[(i * kdim + a, j * kdim + b)] = v;
                    if i != j {
                        matrix[(j * kdim + b, i * kdim + a)] = v.conj();
                    }
                }
            }
        }
    }
    Ok(HankelDiscretization {
        rule: rule.clone(),
        kernel: kernel.clone(),
        kernel_dim: kdim,
        matrix,
    })
}

fn build_scalar(kernel: ScalarKernel, rule: &QuadratureRule) -> Result<HankelDiscretization> {
    build_hankel(&HankelKernel::Scalar(kernel), rule, 1)
}

/// Rule used for the Laplace-band spectra: Gauss-Legendre in `ln t` on `[1e-60, 1e60]`.
pub fn default_band_rule(n: usize) -> Result<QuadratureRule> {
    make_quadrature(QuadratureKind::LogMapped { lo: 1e-60, hi: 1e60 }, n)
}

#[derive(Debug, Clone)]
pub struct BandPair {
    /// Ascending eigenvalues for the `(1 - e^{-s})/s` kernel.
    pub low: Vec<f64>,
    /// Ascending eigenvalues for the `e^{-s}/s` kernel.
    pub high: Vec<f64>,
    pub low_fill: FillMetrics,
    pub high_fill: FillMetrics,
    pub hausdorff: f64,
    /// Largest entry of `low + high - carleman`.
    pub additivity_defect: f64,
}

impl BandPair {
    pub fn within_bounds(&self) -> bool {
        let ok = |v: &[f64]| v.iter().all(|&x| x >= -SPECTRUM_SLACK && x <= PI + SPECTRUM_SLACK);
        ok(&self.low) && ok(&self.high)
    }

    pub fn top_low(&self) -> f64 {
        self.low.last().copied().unwrap_or(0.0)
    }

    pub fn top_high(&self) -> f64 {
        self.high.last().copied().unwrap_or(0.0)
    }
}

pub fn band_pair(rule: &QuadratureRule) -> Result<BandPair> {
    let low = build_scalar(ScalarKernel::LaplaceLow, rule)?;
    let high = build_scalar(ScalarKernel::LaplaceHigh, rule)?;
    let carleman = build_scalar(ScalarKernel::Carleman, rule)?;
    let defect = (&low.matrix + &high.matrix - &carleman.matrix)
        .iter()
        .map(|z| crate::linalg::cabs(*z))
        .fold(0.0, f64::max);
    let low_eigs = low.eigenvalues()?;
    let high_eigs = high.eigenvalues()?;
    Ok(BandPair {
        low_fill: fill_metrics(&low_eigs, 0.0, PI),
        high_fill: fill_metrics(&high_eigs, 0.0, PI),
        hausdorff: hausdorff(&low_eigs, &high_eigs),
        low: low_eigs,
        high: high_eigs,
        additivity_defect: defect,
    })
}

pub fn carleman_norm(rule: &QuadratureRule) -> Result<f64> {
    build_scalar(ScalarKernel::Carleman, rule)?.norm()
}

/// Split lambda-rules for the Laplace factorizations.
#[derive(Debug, Clone)]
pub struct LaplaceRules {
    /// Nodes in `(0, 1)`.
    pub below: QuadratureRule,
    /// Nodes in `(1, inf)`.
    pub above: QuadratureRule,
}

impl LaplaceRules {
    pub fn len(&self) -> usize {
        self.below.len() + self.above.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

const LAPLACE_CORNER_NODES: usize = 4;

/// Lambda-rules adapted to the range of `s = t + t'` on `t_rule`: a short
/// Gauss-Legendre panel on `[0, 1e-3/s_max]`, Gauss-Legendre in `ln lambda`
/// up to 1 and from 1 to `40/s_min`. Nodes are shared in proportion to the
/// logarithmic lengths.
pub fn laplace_rules(t_rule: &QuadratureRule, total: usize) -> Result<LaplaceRules> {
    if total < 2 * LAPLACE_CORNER_NODES + 4 {
        return Err(Error::InvalidParameter {
            name: "lambda nodes",
            reason: format!("need at least {}, got {total}", 2 * LAPLACE_CORNER_NODES + 4),
        });
    }
    let s_min = 2.0 * t_rule.nodes[0];
    let s_max = 2.0 * t_rule.nodes[t_rule.len() - 1];
    if !(s_min > 0.0) {
        return Err(Error::KernelSingular { t: s_min });
    }
    let corner = (1e-3 / s_max).min(1e-3);
    let top = (40.0 / s_min).max(40.0);
    let below_len = libm::log(1.0 / corner);
    let above_len = libm::log(top);
    let free = total - LAPLACE_CORNER_NODES;
    let n_below = ((free as f64) * below_len / (below_len + above_len)).round() as usize;
    let n_below = n_below.clamp(2, free - 2);
    let n_above = free - n_below;

    let (x, w) = gauss_legendre(LAPLACE_CORNER_NODES);
    let panel = QuadratureRule::from_parts(
        x.iter().map(|x| 0.5 * corner * (x + 1.0)).collect(),
        w.iter().map(|w| 0.5 * corner * w).collect(),
        Support::Interval { lo: 0.0, hi: corner },
    )?;
    let log_below = make_quadrature(QuadratureKind::LogMapped { lo: corner, hi: 1.0 }, n_below)?;
    let below = QuadratureRule::concat(&[panel, log_below], Support::Interval { lo: 0.0, hi: 1.0 })?;
    let above = make_quadrature(QuadratureKind::LogMapped { lo: 1.0, hi: top }, n_above)?;
    Ok(LaplaceRules { below, above })
}

#[derive(Debug, Clone, PartialEq)]
pub struct LaplaceReport {
    pub lambda_nodes: usize,
    /// `||low - N chi_(0,1) N|| / ||low||`.
    pub low_residual: f64,
    /// `||high - N chi_(1,inf) N|| / ||high||`.
    pub high_residual: f64,
    /// `||U^2 - I||` on the reciprocal grid.
    pub involution_residual: f64,
    /// `||U N^2 U - N^2|| / ||N^2||` on the reciprocal grid, restricted to the
    /// nodes with `|ln t| <= ln(t_max) / 2` where both `t` and `1/t` are resolved.
    pub conjugation_residual: f64,
}

/// `[sqrt(w_i) e^{-t_i lambda_k} sqrt(omega_k)]`.
fn laplace_matrix(t_rule: &QuadratureRule, lambda_rule: &QuadratureRule) -> CMatrix {
    let sw = t_rule.sqrt_weights();
    let sl = lambda_rule.sqrt_weights();
    CMatrix::from_fn(t_rule.len(), lambda_rule.len(), |i, k| {
        c(sw[i] * libm::exp(-t_rule.nodes[i] * lambda_rule.nodes[k]) * sl[k])
    })
}

pub fn laplace_factorizations(t_rule: &QuadratureRule, rules: &LaplaceRules, reciprocal_nodes: usize) -> Result<LaplaceReport> {
    let low = build_scalar(ScalarKernel::LaplaceLow, t_rule)?.matrix;
    let high = build_scalar(ScalarKernel::LaplaceHigh, t_rule)?.matrix;
    let nb = laplace_matrix(t_rule, &rules.below);
    let na = laplace_matrix(t_rule, &rules.above);
    let low_residual = operator_norm(&(&low - &nb * nb.adjoint()))? / operator_norm(&low)?;
    let high_residual = operator_norm(&(&high - &na * na.adjoint()))? / operator_norm(&high)?;
    let (involution_residual, conjugation_residual) = reciprocal_relations(reciprocal_nodes)?;
    Ok(LaplaceReport {
        lambda_nodes: rules.len(),
        low_residual,
        high_residual,
        involution_residual,
        conjugation_residual,
    })
}

/// Discrete `(Uf)(x) = f(1/x)/x` on a grid closed under `t -> 1/t`.
pub fn reciprocal_involution(rule: &QuadratureRule) -> Result<CMatrix> {
    let n = rule.len();
    let t = &rule.nodes;
    let sw = rule.sqrt_weights();
    let mut u = CMatrix::zeros(n, n);
    for i in 0..n {
        let r = n - 1 - i;
        if libm::fabs(t[i] * t[r] - 1.0) > 1e-10 {
            return Err(Error::InvalidParameter {
                name: "reciprocal grid",
                reason: format!("node {} has no reciprocal partner", t[i]),
            });
        }
        u[(i, r)] = c(sw[i] / (t[i] * sw[r]));
    }
    Ok(u)
}

fn reciprocal_relations(n: usize) -> Result<(f64, f64)> {
    let rule = make_quadrature(QuadratureKind::Reciprocal, n)?;
    let u = reciprocal_involution(&rule)?;
    let involution = operator_norm(&(&u * &u - identity(n)))?;
    let laplace = laplace_matrix(&rule, &rule);
    let square = &laplace * &laplace;
    let half = 0.5 * libm::log(rule.nodes[n - 1]);
    let inner: Vec<usize> = (0..n).filter(|&i| libm::fabs(libm::log(rule.nodes[i])) <= half).collect();
    let diff = &u * &square * &u - &square;
    let block = CMatrix::from_fn(inner.len(), inner.len(), |a, b| diff[(inner[a], inner[b])]);
    let conjugation = operator_norm(&block)? / operator_norm(&square)?;
    Ok((involution, conjugation))
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundReport {
    pub declared: f64,
    /// Largest sampled `s ||K(s)||`.
    pub sampled_sup: f64,
    pub operator_norm: f64,
    /// `pi * declared`.
    pub bound: f64,
    /// `s ||K(s)||` at the smallest and largest sample.
    pub edge_products: (f64, f64),
    /// Singular values of the discretization, descending.
    pub singular_values: Vec<f64>,
}

impl BoundReport {
    pub fn holds(&self) -> bool {
        self.operator_norm <= self.bound + 1e-6
    }
}

/// Checks `||K(s)|| <= declared / s` at the sums of neighbouring nodes, then
/// compares the discrete operator norm with `pi * declared`.
pub fn kernel_bound_suite(disc: &HankelDiscretization, declared: f64) -> Result<BoundReport> {
    if !(declared >= 0.0) || !declared.is_finite() {
        return Err(Error::InvalidParameter {
            name: "kernel bound",
            reason: format!("{declared} is not a finite non-negative number"),
        });
    }
    let t = &disc.rule.nodes;
    let mut samples: Vec<f64> = t.iter().map(|x| 2.0 * x).collect();
    samples.extend(t.windows(2).map(|w| w[0] + w[1]));
    samples.sort_by(f64::total_cmp);
    let mut sup = 0.0f64;
    for &s in &samples {
        let value = s * disc.kernel.norm_at(s)?;
        if value > declared * (1.0 + 1e-12) {
            return Err(Error::KernelBound { t: s, value, bound: declared });
        }
        sup = sup.max(value);
    }
    let first = samples[0];
    let last = samples[samples.len() - 1];
    let edge_products = (first * disc.kernel.norm_at(first)?, last * disc.kernel.norm_at(last)?);
    let singular_values = disc.singular_values()?;
    Ok(BoundReport {
        declared,
        sampled_sup: sup,
        operator_norm: singular_values.first().copied().unwrap_or(0.0),
        bound: PI * declared,
        edge_products,
        singular_values,
    })
}

/// Samples of a Hermitian `M(lambda) >= 0`-type family and the lambda-rule they live on.
#[derive(Clone)]
pub struct TraceBoundData {
    pub dim: usize,
    pub sampler: Arc<dyn Fn(f64) -> CMatrix + Send + Sync>,
    pub lambda_rule: QuadratureRule,
}

impl fmt::Debug for TraceBoundData {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TraceBoundData")
            .field("dim", &self.dim)
            .field("lambda_nodes", &self.lambda_rule.len())
            .finish()
    }
}

impl TraceBoundData {
    pub fn new(dim: usize, lambda_rule: QuadratureRule, sampler: impl Fn(f64) -> CMatrix + Send + Sync + 'static) -> Self {
        TraceBoundData { dim, sampler: Arc::new(sampler), lambda_rule }
    }
}

/// Gauss-Legendre in `ln lambda` on `[1e-12, 1e3]`.
pub fn default_trace_lambda_rule(n: usize) -> Result<QuadratureRule> {
    make_quadrature(QuadratureKind::LogMapped { lo: 1e-12, hi: 1e3 }, n)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceBound {
    /// `sum omega_k ||M(lambda_k)||_1 / lambda_k`.
    pub c2: f64,
    /// Sum of singular values of the assembled Hankel matrix.
    pub nuclear_norm: f64,
}

impl TraceBound {
    /// `nuclear <= (c2 / 2) * (1 + slack)`.
    pub fn holds(&self, slack: f64) -> bool {
        self.nuclear_norm <= 0.5 * self.c2 * (1.0 + slack)
    }
}

/// Relative weight of the outermost decade above which the discrete integral
/// is declared divergent.
const TAIL_FRACTION: f64 = 1e-6;

/// Assembles `K(s) = int e^{-lambda s} M(lambda) d lambda` on `t_rule` and
/// compares its nuclear norm with `C2 / 2`.
pub fn trace_bound_check(data: &TraceBoundData, t_rule: &QuadratureRule) -> Result<TraceBound> {
    let lam = &data.lambda_rule;
    let mut samples = Vec::with_capacity(lam.len());
    let mut contributions = Vec::with_capacity(lam.len());
    for (&l, &w) in lam.nodes.iter().zip(&lam.weights) {
        let m = (data.sampler)(l);
        crate::linalg::check_shape(&m, data.dim, data.dim, "trace bound sample")?;
        crate::linalg::check_hermitian(&m, 1e-12, "trace bound sample")?;
        let trace_norm: f64 = herm_eigenvalues(&m)?.iter().map(|v| libm::fabs(*v)).sum();
        contributions.push(w * trace_norm / l);
        samples.push(m * c(w));
    }
    let c2: f64 = contributions.iter().sum();
    if !c2.is_finite() {
        return Err(Error::DivergentTraceBound { lambda: lam.nodes[0] });
    }
    if c2 > 0.0 {
        let lo = lam.nodes[0];
        let hi = lam.nodes[lam.len() - 1];
        let low_tail: f64 = lam.nodes.iter().zip(&contributions).filter(|(l, _)| **l < 10.0 * lo).map(|(_, c)| c).sum();
        let high_tail: f64 = lam.nodes.iter().zip(&contributions).filter(|(l, _)| **l > 0.1 * hi).map(|(_, c)| c).sum();
        if low_tail > TAIL_FRACTION * c2 {
            return Err(Error::DivergentTraceBound { lambda: lo });
        }
        if high_tail > TAIL_FRACTION * c2 {
            return Err(Error::DivergentTraceBound { lambda: hi });
        }
    }
    let nodes = lam.nodes.clone();
    let dim = data.dim;
    let kernel = HankelKernel::Matrix {
        dim,
        eval: Arc::new(move |s| {
            let mut k = CMatrix::zeros(dim, dim);
            for (l, m) in nodes.iter().zip(&samples) {
                k += m * c(libm::exp(-l * s));
            }
            k
        }),
    };
    let disc = build_hankel(&kernel, t_rule, dim.max(DEFAULT_MAX_KERNEL_DIM))?;
    let nuclear_norm = disc.singular_values()?.iter().sum();
    Ok(TraceBound { c2, nuclear_norm })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn exp_rule(n: usize) -> QuadratureRule {
        make_quadrature(QuadratureKind::ExpMapped { scale: 1.0 }, n).unwrap()
    }

    #[test]
    fn zero_kernel_gives_zero_matrix() {
        let d = build_scalar(ScalarKernel::Zero, &exp_rule(10)).unwrap();
        assert!(d.matrix.iter().all(|z| *z == c(0.0)));
    }

    #[test]
    fn high_band_entry_at_unit_nodes() {
        let rule = QuadratureRule::from_parts(vec![0.5, 1.0], vec![0.25, 0.75], Support::HalfLine).unwrap();
        let d = build_scalar(ScalarKernel::LaplaceHigh, &rule).unwrap();
        let expected = 0.75 * libm::exp(-2.0) / 2.0;
        assert!((d.matrix[(1, 1)].re - expected).abs() < 1e-15);
    }

    #[test]
    fn diagonal_kernel_splits_into_scalar_builds() {
        let rule = exp_rule(12);
        let k1 = ScalarKernel::LaplaceHigh;
        let k2 = ScalarKernel::Exponential { rate: 2.0 };
        let block = build_hankel(&HankelKernel::Diagonal(vec![k1.clone(), k2.clone()]), &rule, 4).unwrap();
        let a = build_scalar(k1, &rule).unwrap().matrix;
        let b = build_scalar(k2, &rule).unwrap().matrix;
        for i in 0..12 {
            for j in 0..12 {
                assert_eq!(block.matrix[(2 * i, 2 * j)], a[(i, j)]);
                assert_eq!(block.matrix[(2 * i + 1, 2 * j + 1)], b[(i, j)]);
                assert_eq!(block.matrix[(2 * i, 2 * j + 1)], c(0.0));
            }
        }
    }

    #[test]
    fn kernel_dimension_cap() {
        let k = HankelKernel::Diagonal(vec![ScalarKernel::Zero; 5]);
        assert!(matches!(build_hankel(&k, &exp_rule(4), 4), Err(Error::InvalidParameter { .. })));
    }

    #[test]
    fn singular_sample_is_rejected() {
        let k = HankelKernel::Scalar(ScalarKernel::Custom(Arc::new(|s| 1.0 / (s - 2.0 * 0.5))));
        let rule = QuadratureRule::from_parts(vec![0.5, 1.0], vec![1.0, 1.0], Support::HalfLine).unwrap();
        assert!(matches!(build_hankel(&k, &rule, 1), Err(Error::KernelSingular { .. })));
    }

    #[test]
    fn reciprocal_involution_is_reversal() {
        let rule = make_quadrature(QuadratureKind::Reciprocal, 20).unwrap();
        let u = reciprocal_involution(&rule).unwrap();
        for i in 0..20 {
            assert!((u[(i, 19 - i)].re - 1.0).abs() < 1e-12);
        }
        assert!(operator_norm(&(&u * &u - identity(20))).unwrap() < 1e-12);
    }

    #[test]
    fn exponential_kernel_bound() {
        let d = build_scalar(ScalarKernel::Exponential { rate: 1.0 }, &exp_rule(60)).unwrap();
        let report = kernel_bound_suite(&d, 1.0 / core::f64::consts::E).unwrap();
        assert!(report.holds());
        assert!(report.sampled_sup <= 1.0 / core::f64::consts::E + 1e-15);
    }

    #[test]
    fn understated_bound_is_rejected() {
        let d = build_scalar(ScalarKernel::Exponential { rate: 1.0 }, &exp_rule(60)).unwrap();
        assert!(matches!(kernel_bound_suite(&d, 0.3), Err(Error::KernelBound { .. })));
    }

    #[test]
    fn zero_family_has_zero_trace_bound() {
        let data = TraceBoundData::new(1, default_trace_lambda_rule(100).unwrap(), |_| CMatrix::zeros(1, 1));
        let r = trace_bound_check(&data, &exp_rule(40)).unwrap();
        assert_eq!(r.c2, 0.0);
        assert!(r.nuclear_norm.abs() < 1e-14);
    }
}
