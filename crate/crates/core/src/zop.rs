//! Semigroup integrals over the half-line: the operators
//! `Z0 f = int e^{-t H0} E0(0, inf) G* f(t) dt` and
//! `Z f = int e^{t H} E(-inf, 0) G* f(t) dt`, the identity
//! `E(-inf, 0) E0(0, inf) = -Z V0 Z0*`, and the comparison of the Gram
//! operators with the model Hankel operators.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::hankel::{build_hankel, HankelKernel, ScalarKernel};
use crate::linalg::{c, frobenius, identity, operator_norm, singular_values, sylvester_solve, CMatrix, Eigen};
use crate::models::AnalyzedPair;
use crate::quadrature::{make_quadrature, QuadratureKind, QuadratureRule};
use crate::scattering::{extrapolate_to_zero, smoothed_density};

/// Discretized `Z0`, `Z` for a pair whose probe has been moved to 0.
/// Both are `dim x (nodes * aux_dim)`, column `i * aux_dim + a`.
#[derive(Debug, Clone)]
pub struct ZOperators {
    pub t_rule: QuadratureRule,
    pub free: CMatrix,
    pub perturbed: CMatrix,
    /// Distance from 0 to the nearest eigenvalue of either operator.
    pub gap: f64,
    pub aux_dim: usize,
}

impl ZOperators {
    /// Block `i` of a node-major matrix: columns `i * aux_dim ..`.
    fn block(m: &CMatrix, i: usize, aux: usize) -> nalgebra::DMatrixView<'_, crate::linalg::C64> {
        m.columns(i * aux, aux)
    }

    /// `Z (V0 (x) I) Z0* = sum_i Z_i V0 Z0_i*`.
    pub fn sandwich(&self, v0: &CMatrix) -> CMatrix {
        let n = self.free.nrows();
        let mut acc = CMatrix::zeros(n, n);
        for i in 0..self.t_rule.len() {
            let z = Self::block(&self.perturbed, i, self.aux_dim);
            let z0 = Self::block(&self.free, i, self.aux_dim);
            acc += z * v0 * z0.adjoint();
        }
        acc
    }

    pub fn norms(&self) -> Result<(f64, f64)> {
        Ok((operator_norm(&self.free)?, operator_norm(&self.perturbed)?))
    }
}

/// `[sqrt(w_i) sum_{keep} v e^{-t_i |mu|} v* G*]_i` over eigenvectors with `keep(mu)`.
fn decaying_columns(eig: &Eigen, keep: impl Fn(f64) -> bool, g: &CMatrix, rule: &QuadratureRule) -> CMatrix {
    let (vectors, values) = eig.select(keep);
    let coeffs = vectors.adjoint() * g.adjoint();
    let n = eig.dim();
    let aux = g.nrows();
    let sw = rule.sqrt_weights();
    let mut out = CMatrix::zeros(n, rule.len() * aux);
    let mut scaled = coeffs.clone();
    for (i, &t) in rule.nodes.iter().enumerate() {
        for (k, &mu) in values.iter().enumerate() {
            let factor = sw[i] * libm::exp(-t * libm::fabs(mu));
            scaled.row_mut(k).copy_from(&(coeffs.row(k) * c(factor)));
        }
        out.columns_mut(i * aux, aux).copy_from(&(&vectors * &scaled));
    }
    out
}

/// Builds `Z0` and `Z` on `t_rule`. Only eigenvectors of `H0` above 0 and
/// of `H` below 0 enter, so every semigroup factor is a decaying exponential.
pub fn build_z_ops(pair: &AnalyzedPair, t_rule: &QuadratureRule) -> Result<ZOperators> {
    let (gap0, gap) = pair.check_gap(0.0, "build_z_ops")?;
    let g = &pair.pair.g;
    Ok(ZOperators {
        t_rule: t_rule.clone(),
        free: decaying_columns(&pair.eig0, |x| x > 0.0, g, t_rule),
        perturbed: decaying_columns(&pair.eig, |x| x < 0.0, g, t_rule),
        gap: gap0.min(gap),
        aux_dim: pair.pair.aux_dim(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct IdentityResiduals {
    pub nodes: usize,
    /// `||E- E0+ + Z (V0 (x) I) Z0*||`.
    pub direct: f64,
    /// `||X + E- E0+||` with `X` from the Sylvester equation.
    pub oracle: f64,
    /// `||E0+ E- E0+ - Q* Q||` with `Q = Z (V0 (x) I) Z0*`.
    pub representation: f64,
}

/// Solves `H X - X H0 = -E- V E0+` restricted to the ranges of the projections.
///
/// `H` and `H0` share spectrum in general, so the solve uses
/// `A = H E- + alpha (I - E-)`, `B = H0 E0+ + beta (I - E0+)` with
/// `alpha < 0 < beta` outside both spectra.
pub fn sylvester_oracle(pair: &AnalyzedPair) -> Result<CMatrix> {
    let n = pair.dim();
    let minus = pair.eig.projection(|x| x < 0.0);
    let plus0 = pair.eig0.projection(|x| x > 0.0);
    let span = |e: &Eigen| e.values.iter().fold(0.0f64, |m, v| m.max(libm::fabs(*v)));
    let alpha = -(span(&pair.eig) + 1.0);
    let beta = span(&pair.eig0) + 1.0;
    let id = identity(n);
    let a = &pair.pair.h * &minus + (&id - &minus) * c(alpha);
    let b = &pair.pair.h0 * &plus0 + (&id - &plus0) * c(beta);
    let rhs = -(&minus * pair.pair.perturbation() * &plus0);
    sylvester_solve(&a, &b, &rhs)
}

/// Rule-independent pieces of the identity check.
struct IdentityTarget {
    plus0: CMatrix,
    product: CMatrix,
    compressed: CMatrix,
    oracle: f64,
}

impl IdentityTarget {
    fn new(pair: &AnalyzedPair) -> Result<Self> {
        let minus = pair.eig.projection(|x| x < 0.0);
        let plus0 = pair.eig0.projection(|x| x > 0.0);
        let product = &minus * &plus0;
        let x = sylvester_oracle(pair)?;
        Ok(IdentityTarget {
            compressed: &plus0 * &product,
            oracle: operator_norm(&(&x + &product))?,
            plus0,
            product,
        })
    }

    fn residuals(&self, pair: &AnalyzedPair, t_rule: &QuadratureRule) -> Result<IdentityResiduals> {
        let q = build_z_ops(pair, t_rule)?.sandwich(&pair.pair.v0);
        debug_assert_eq!(self.plus0.nrows(), q.nrows());
        Ok(IdentityResiduals {
            nodes: t_rule.len(),
            direct: operator_norm(&(&self.product + &q))?,
            oracle: self.oracle,
            representation: operator_norm(&(&self.compressed - q.adjoint() * &q))?,
        })
    }
}

/// Quadrature and Sylvester routes to `E- E0+ = -Z V0 Z0*` at probe 0.
pub fn identity_check(pair: &AnalyzedPair, t_rule: &QuadratureRule) -> Result<IdentityResiduals> {
    pair.check_gap(0.0, "identity_check")?;
    IdentityTarget::new(pair)?.residuals(pair, t_rule)
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdaptiveOptions {
    pub initial_nodes: usize,
    pub max_doublings: usize,
    /// Relative change of the direct residual accepted as stable.
    pub stability: f64,
    /// Direct residuals below this count as converged outright.
    pub floor: f64,
}

impl Default for AdaptiveOptions {
    fn default() -> Self {
        AdaptiveOptions { initial_nodes: 120, max_doublings: 3, stability: 0.1, floor: 1e-12 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdaptiveIdentity {
    /// One entry per rule tried, exponential map first.
    pub history: Vec<IdentityResiduals>,
    pub converged: bool,
    /// Whether the log-mapped fallback was needed.
    pub fallback: bool,
}

impl AdaptiveIdentity {
    pub fn best(&self) -> &IdentityResiduals {
        self.history
            .iter()
            .min_by(|a, b| a.direct.total_cmp(&b.direct))
            .expect("at least one rule is tried")
    }
}

fn stable(prev: &IdentityResiduals, next: &IdentityResiduals, opts: &AdaptiveOptions) -> bool {
    next.direct <= opts.floor || libm::fabs(next.direct - prev.direct) <= opts.stability * prev.direct
}

/// Exponential-map rule with scale `1/gap`, doubled until the direct residual
/// stabilizes; a log-mapped rule on `[1e-6 / ||H||, 50 / gap]` is tried next.
pub fn adaptive_identity_check(pair: &AnalyzedPair, opts: &AdaptiveOptions) -> Result<AdaptiveIdentity> {
    if opts.initial_nodes < 2 {
        return Err(Error::InvalidParameter {
            name: "initial nodes",
            reason: format!("need at least 2, got {}", opts.initial_nodes),
        });
    }
    let (gap0, gap1) = pair.check_gap(0.0, "adaptive_identity_check")?;
    let gap = gap0.min(gap1);
    let top = pair.eig0.values.iter().chain(&pair.eig.values).fold(0.0f64, |m, v| m.max(libm::fabs(*v)));
    let kinds = [
        QuadratureKind::ExpMapped { scale: 1.0 / gap },
        QuadratureKind::LogMapped { lo: 1e-6 / top.max(gap), hi: 50.0 / gap },
    ];
    let target = IdentityTarget::new(pair)?;
    let mut history = Vec::new();
    for (attempt, kind) in kinds.into_iter().enumerate() {
        let mut nodes = opts.initial_nodes;
        let mut prev: Option<IdentityResiduals> = None;
        for _ in 0..=opts.max_doublings {
            let rule = make_quadrature(kind, nodes)?;
            let r = target.residuals(pair, &rule)?;
            let done = prev.as_ref().is_some_and(|p| stable(p, &r, opts)) || r.direct <= opts.floor;
            history.push(r.clone());
            if done {
                return Ok(AdaptiveIdentity { history, converged: true, fallback: attempt > 0 });
            }
            prev = Some(r);
            nodes *= 2;
        }
    }
    Ok(AdaptiveIdentity { history, converged: false, fallback: true })
}

/// `F0'(0)` and `F'(0)` extrapolated entrywise from a smoothing ladder.
#[derive(Debug, Clone)]
pub struct ModelDensities {
    pub epsilons: Vec<f64>,
    pub free: CMatrix,
    pub perturbed: CMatrix,
}

/// Neville extrapolation of the smoothed densities at probe 0 through all given rungs.
pub fn extrapolated_densities(pair: &AnalyzedPair, epsilons: &[f64]) -> Result<ModelDensities> {
    if epsilons.is_empty() {
        return Err(Error::InvalidParameter { name: "epsilon ladder", reason: "empty".into() });
    }
    let samples = epsilons
        .iter()
        .map(|&e| smoothed_density(&pair.pair, 0.0, e))
        .collect::<Result<Vec<_>>>()?;
    let m = pair.pair.aux_dim();
    let extrapolate = |mats: Vec<&CMatrix>| {
        let entry = |a: usize, b: usize| {
            let re: Vec<f64> = mats.iter().map(|m| m[(a, b)].re).collect();
            let im: Vec<f64> = mats.iter().map(|m| m[(a, b)].im).collect();
            crate::linalg::C64::new(extrapolate_to_zero(epsilons, &re), extrapolate_to_zero(epsilons, &im))
        };
        crate::linalg::hermitian_part(&CMatrix::from_fn(m, m, entry))
    };
    let free = extrapolate(samples.iter().map(|s| &s.free).collect());
    let perturbed = extrapolate(samples.iter().map(|s| &s.perturbed).collect());
    Ok(ModelDensities { epsilons: epsilons.to_vec(), free, perturbed })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SingularDecay {
    /// Descending.
    pub values: Vec<f64>,
    /// Least-squares slope of `ln s_k` against `ln k` over values above `1e-12 s_1`.
    pub exponent: f64,
    pub partial_sums: Vec<f64>,
}

impl SingularDecay {
    fn from_values(values: Vec<f64>) -> Self {
        let top = values.first().copied().unwrap_or(0.0);
        let pts: Vec<(f64, f64)> = values
            .iter()
            .enumerate()
            .filter(|(_, s)| **s > 1e-12 * top && **s > 0.0)
            .map(|(k, s)| (libm::log((k + 1) as f64), libm::log(*s)))
            .collect();
        let exponent = if pts.len() < 2 {
            0.0
        } else {
            let n = pts.len() as f64;
            let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
            let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
            let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
            let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
            sxy / sxx
        };
        let partial_sums = values
            .iter()
            .scan(0.0, |acc, s| {
                *acc += s;
                Some(*acc)
            })
            .collect();
        SingularDecay { values, exponent, partial_sums }
    }

    /// `s_k / s_1` for 1-based `k`.
    pub fn ratio(&self, k: usize) -> f64 {
        match (self.values.first(), self.values.get(k - 1)) {
            (Some(&s1), Some(&sk)) if s1 > 0.0 => sk / s1,
            _ => 0.0,
        }
    }

    /// Whether the first `k` values strictly decrease.
    pub fn strictly_decreasing(&self, k: usize) -> bool {
        let k = k.min(self.values.len());
        self.values[..k].windows(2).all(|w| w[1] < w[0])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GramComparison {
    pub epsilons: Vec<f64>,
    /// `Z0* Z0 - low-band Hankel (x) F0'(0)`.
    pub free: SingularDecay,
    /// `Z* Z - low-band Hankel (x) F'(0)`.
    pub perturbed: SingularDecay,
    pub free_gram_norm: f64,
    pub perturbed_gram_norm: f64,
    /// Smallest eigenvalue of each Gram matrix relative to its norm.
    pub gram_psd_defect: f64,
}

pub fn gram_comparison(zops: &ZOperators, densities: &ModelDensities) -> Result<GramComparison> {
    let aux = zops.aux_dim;
    let max_dim = aux.max(crate::hankel::DEFAULT_MAX_KERNEL_DIM);
    let model = |weight: &CMatrix| {
        build_hankel(
            &HankelKernel::Weighted { profile: ScalarKernel::LaplaceLow, weight: weight.clone() },
            &zops.t_rule,
            max_dim,
        )
    };
    let free_gram = crate::linalg::hermitian_part(&(zops.free.adjoint() * &zops.free));
    let pert_gram = crate::linalg::hermitian_part(&(zops.perturbed.adjoint() * &zops.perturbed));
    let free_model = model(&densities.free)?.matrix;
    let pert_model = model(&densities.perturbed)?.matrix;
    let free_norm = operator_norm(&free_gram)?;
    let pert_norm = operator_norm(&pert_gram)?;
    let psd = |m: &CMatrix, norm: f64| -> Result<f64> {
        let low = crate::linalg::herm_eigenvalues(m)?.first().copied().unwrap_or(0.0);
        Ok((-low).max(0.0) / norm.max(f64::MIN_POSITIVE))
    };
    Ok(GramComparison {
        epsilons: densities.epsilons.clone(),
        free: SingularDecay::from_values(singular_values(&(&free_gram - free_model))?),
        perturbed: SingularDecay::from_values(singular_values(&(&pert_gram - pert_model))?),
        free_gram_norm: free_norm,
        perturbed_gram_norm: pert_norm,
        gram_psd_defect: psd(&free_gram, free_norm)?.max(psd(&pert_gram, pert_norm)?),
    })
}

/// Builds the operators and compares them with densities extrapolated from `epsilons`.
pub fn model_comparison(pair: &AnalyzedPair, t_rule: &QuadratureRule, epsilons: &[f64]) -> Result<GramComparison> {
    let zops = build_z_ops(pair, t_rule)?;
    let densities = extrapolated_densities(pair, epsilons)?;
    gram_comparison(&zops, &densities)
}

/// Relative Frobenius distance, for reports.
pub fn relative_difference(a: &CMatrix, b: &CMatrix) -> f64 {
    frobenius(&(a - b)) / frobenius(b).max(f64::MIN_POSITIVE)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::diag;
    use crate::models::{build_finite_pair, random_pair, RandomPairOptions};

    fn exp_rule(n: usize, scale: f64) -> QuadratureRule {
        make_quadrature(QuadratureKind::ExpMapped { scale }, n).unwrap()
    }

    #[test]
    fn zero_coupling_gives_zero_operators() {
        let pair = build_finite_pair(diag(&[1.0, -1.0]), CMatrix::zeros(1, 2), CMatrix::from_element(1, 1, c(1.0)))
            .unwrap()
            .analyze()
            .unwrap();
        let z = build_z_ops(&pair, &exp_rule(20, 1.0)).unwrap();
        assert!(frobenius(&z.free) == 0.0 && frobenius(&z.perturbed) == 0.0);
        let r = identity_check(&pair, &exp_rule(20, 1.0)).unwrap();
        assert!(r.direct < 1e-15 && r.oracle < 1e-15);
    }

    #[test]
    fn scalar_gram_entry() {
        let pair = build_finite_pair(diag(&[1.0]), diag(&[1.0]), diag(&[0.0]))
            .unwrap()
            .analyze()
            .unwrap();
        let z = build_z_ops(&pair, &exp_rule(60, 1.0)).unwrap();
        // int e^{-2t} dt
        let gram: crate::linalg::C64 = (z.free.adjoint() * &z.free).trace();
        assert!((gram.re - 0.5).abs() < 1e-8, "{}", gram.re);
    }

    #[test]
    fn random_pair_identity_routes() {
        let opts = RandomPairOptions { dim: 6, ..Default::default() };
        let pair = random_pair(3, &opts).unwrap().analyze().unwrap();
        let r = adaptive_identity_check(&pair, &AdaptiveOptions::default()).unwrap();
        let best = r.best();
        assert!(best.oracle <= 1e-9, "{best:?}");
        assert!(best.direct <= 1e-6, "{best:?}");
        assert!(best.representation <= 1e-6, "{best:?}");
    }

    #[test]
    fn decay_fit_of_power_law() {
        let vals: Vec<f64> = (1..=20).map(|k| 1.0 / ((k * k) as f64)).collect();
        let d = SingularDecay::from_values(vals);
        assert!((d.exponent + 2.0).abs() < 1e-12);
        assert!(d.strictly_decreasing(20));
        assert!((d.ratio(2) - 0.25).abs() < 1e-15);
    }
}
