//! Resolvent sandwiches, smoothed spectral densities, the smoothed scattering
//! matrix `S~` and the operator `A`, plus a transfer-matrix oracle for 1D wells.

use alloc::vec::Vec;
use core::f64::consts::PI;

use nalgebra::Complex;

use crate::error::{Error, Result};
use crate::linalg::{
    c, cabs, cexp_i, condition_number, csqrt, frobenius, herm_eigenvalues,
    identity, imaginary_part, operator_norm, phase_0_2pi, psd_sqrt, unitary_eigenvalues, CMatrix, C64, I,
};
use crate::models::{AnalyzedPair, OperatorPair, PotentialSpec};
use crate::projections::spectral_shift_count;
use crate::quadrature::composite_legendre;

/// Condition number of `I + V0 T0` above which the pair is treated as singular.
pub const MAX_CONDITION: f64 = 1e12;

// eigenvalues of F0' down to -CLIP * ||F0'|| are roundoff
const SQRT_CLIP: f64 = 1e-12;

/// `T0(z) = G (H0 - z)^{-1} G*` and `T(z) = G (H - z)^{-1} G*`.
#[derive(Debug, Clone)]
pub struct ResolventSandwich {
    pub z: C64,
    pub t0: CMatrix,
    pub t: CMatrix,
    /// `||T - T0 (I + V0 T0)^{-1}|| / max(||T||, 1)`.
    pub identity_residual: f64,
    /// Condition number of `I + V0 T0`.
    pub condition: f64,
}

impl ResolventSandwich {
    /// Smallest eigenvalue of `Im T0` and of `Im T` (both should be >= 0).
    pub fn im_lowest(&self) -> Result<(f64, f64)> {
        let lo0 = herm_eigenvalues(&imaginary_part(&self.t0))?[0];
        let lo = herm_eigenvalues(&imaginary_part(&self.t))?[0];
        Ok((lo0, lo))
    }
}

fn sandwich_one(g: &CMatrix, h: &CMatrix, z: C64) -> Result<CMatrix> {
    let n = h.nrows();
    let shifted = h - identity(n) * z;
    let rhs = g.adjoint();
    let x = shifted
        .lu()
        .solve(&rhs)
        .ok_or(Error::NoConvergence("resolvent solve"))?;
    Ok(g * x)
}

/// Both sandwiches by direct solves, with the check of
/// `T = T0 (I + V0 T0)^{-1}`.
pub fn resolvent_sandwich(pair: &OperatorPair, z: C64) -> Result<ResolventSandwich> {
    if !(z.im > 0.0) {
        return Err(Error::InvalidParameter {
            name: "z",
            reason: alloc::format!("need Im z > 0, got {z}"),
        });
    }
    let t0 = sandwich_one(&pair.g, &pair.h0, z)?;
    let t = sandwich_one(&pair.g, &pair.h, z)?;
    let k = pair.aux_dim();
    let m = identity(k) + &pair.v0 * &t0;
    let condition = condition_number(&m)?;
    if condition > MAX_CONDITION {
        return Err(Error::NearSingular { condition });
    }
    // T0 M^{-1} = (M^{-*} T0*)*
    let via = m
        .adjoint()
        .lu()
        .solve(&t0.adjoint())
        .ok_or(Error::NearSingular { condition })?
        .adjoint();
    let identity_residual = frobenius(&(&t - via)) / frobenius(&t).max(1.0);
    Ok(ResolventSandwich { z, t0, t, identity_residual, condition })
}

/// `F0'_eps = Im T0(lambda + i eps) / pi` and `F'_eps = Im T(lambda + i eps) / pi`.
#[derive(Debug, Clone)]
pub struct SmoothedDensity {
    pub lambda: f64,
    pub epsilon: f64,
    pub free: CMatrix,
    pub perturbed: CMatrix,
    pub sandwich: ResolventSandwich,
}

pub fn smoothed_density(pair: &OperatorPair, lambda: f64, epsilon: f64) -> Result<SmoothedDensity> {
    check_epsilon(epsilon)?;
    let sandwich = resolvent_sandwich(pair, Complex::new(lambda, epsilon))?;
    let free = imaginary_part(&sandwich.t0) * c(1.0 / PI);
    let perturbed = imaginary_part(&sandwich.t) * c(1.0 / PI);
    Ok(SmoothedDensity { lambda, epsilon, free, perturbed, sandwich })
}

fn check_epsilon(epsilon: f64) -> Result<()> {
    if epsilon > 0.0 && epsilon.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name: "epsilon",
            reason: alloc::format!("smoothing must be positive, got {epsilon}"),
        })
    }
}

/// Everything computed at one `(lambda, eps)`.
#[derive(Debug, Clone)]
pub struct ScatteringBundle {
    pub lambda: f64,
    pub epsilon: f64,
    pub density: SmoothedDensity,
    /// `I - 2 pi i F0'^{1/2} (V0 - V0 T V0) F0'^{1/2}`.
    pub s_tilde: CMatrix,
    pub eigenvalues: Vec<C64>,
    /// `||S~* S~ - I||`.
    pub unitarity_defect: f64,
    /// `pi^2 F0'^{1/2} V0 F' V0 F0'^{1/2}`.
    pub a: CMatrix,
    /// `||A||^{1/2}`.
    pub a_from_norm: f64,
    /// `||S~ - I|| / 2`.
    pub a_from_s: f64,
    /// `||(S~ - I)*(S~ - I)/4 - A|| / ||A||`.
    pub identity_residual: f64,
}

impl ScatteringBundle {
    /// Eigenphases in `(0, 2 pi)` of eigenvalues with `|e - 1| > threshold`,
    /// sorted by decreasing `|e - 1|`.
    pub fn phases_above(&self, threshold: f64) -> Vec<f64> {
        let mut kept: Vec<C64> = self
            .eigenvalues
            .iter()
            .copied()
            .filter(|e| cabs(e - c(1.0)) > threshold)
            .collect();
        kept.sort_by(|a, b| cabs(b - c(1.0)).total_cmp(&cabs(a - c(1.0))));
        kept.into_iter().map(phase_0_2pi).collect()
    }

    /// Default retention: ten times the unitarity defect.
    pub fn retained_phases(&self) -> Vec<f64> {
        self.phases_above(10.0 * self.unitarity_defect)
    }

    pub fn predictions(&self) -> Predictions {
        spectral_predictions(&self.retained_phases())
    }
}

/// Builds `S~_eps`, `A_eps` and the checks tying them together.
pub fn scattering_bundle(pair: &OperatorPair, lambda: f64, epsilon: f64) -> Result<ScatteringBundle> {
    let density = smoothed_density(pair, lambda, epsilon)?;
    let k = pair.aux_dim();
    let root = psd_sqrt(&density.free, SQRT_CLIP)?;
    let v0 = &pair.v0;
    let middle = v0 - v0 * &density.sandwich.t * v0;
    let s_tilde = identity(k) - &root * middle * &root * (I * c(2.0 * PI));
    let a = crate::linalg::hermitian_part(&(&root * v0 * &density.perturbed * v0 * &root * c(PI * PI)));

    let diff = &s_tilde - identity(k);
    let quarter = diff.adjoint() * &diff * c(0.25);
    let a_norm = frobenius(&a);
    let identity_residual = if a_norm > 0.0 {
        frobenius(&(&quarter - &a)) / a_norm
    } else {
        frobenius(&quarter)
    };
    let unitarity_defect = frobenius(&(s_tilde.adjoint() * &s_tilde - identity(k)));
    let top_a = herm_eigenvalues(&a)?.last().copied().unwrap_or(0.0).max(0.0);
    let a_from_s = 0.5 * operator_norm(&diff)?;
    let eigenvalues = unitary_eigenvalues(&s_tilde)?;
    Ok(ScatteringBundle {
        lambda,
        epsilon,
        density,
        s_tilde,
        eigenvalues,
        unitarity_defect,
        a,
        a_from_norm: libm::sqrt(top_a),
        a_from_s,
        identity_residual,
    })
}

/// Norm and band edges predicted from a set of eigenphases.
#[derive(Debug, Clone, PartialEq)]
pub struct Predictions {
    /// `max |e^{i theta} - 1| / 2`.
    pub a: f64,
    /// `sin(theta_n / 2)`, descending.
    pub edges: Vec<f64>,
}

pub fn spectral_predictions(phases: &[f64]) -> Predictions {
    let mut edges: Vec<f64> = phases.iter().map(|t| libm::fabs(libm::sin(0.5 * t))).collect();
    edges.sort_by(|a, b| b.total_cmp(a));
    let a = phases
        .iter()
        .map(|&t| 0.5 * cabs(cexp_i(t) - c(1.0)))
        .fold(0.0, f64::max);
    Predictions { a, edges }
}

/// The standard smoothing ladder.
pub const DEFAULT_LADDER: [f64; 5] = [1e-1, 3e-2, 1e-2, 3e-3, 1e-3];

#[derive(Debug, Clone, PartialEq)]
pub struct LadderOptions {
    /// Strictly decreasing smoothing parameters.
    pub epsilons: Vec<f64>,
    /// How many of the smallest rungs enter the polynomial extrapolation.
    pub extrapolation_points: usize,
    /// Extrapolated phases with `|e^{i theta} - 1|` at or below this are dropped.
    pub retention_floor: f64,
}

impl Default for LadderOptions {
    fn default() -> Self {
        LadderOptions {
            epsilons: DEFAULT_LADDER.to_vec(),
            extrapolation_points: 3,
            retention_floor: 1e-3,
        }
    }
}

impl LadderOptions {
    pub fn validate(&self) -> Result<()> {
        if self.epsilons.is_empty() || self.epsilons.iter().any(|e| !(*e > 0.0)) {
            return Err(Error::InvalidParameter {
                name: "epsilon ladder",
                reason: "needs at least one positive rung".into(),
            });
        }
        if self.epsilons.windows(2).any(|w| !(w[0] > w[1])) {
            return Err(Error::InvalidParameter {
                name: "epsilon ladder",
                reason: "rungs must be strictly decreasing".into(),
            });
        }
        if self.extrapolation_points == 0 {
            return Err(Error::InvalidParameter {
                name: "extrapolation points",
                reason: "must be at least 1".into(),
            });
        }
        Ok(())
    }
}

/// One rung of the ladder.
#[derive(Debug, Clone, PartialEq)]
pub struct LadderRow {
    pub epsilon: f64,
    /// All eigenphases away from 1 by more than ten times the unitarity defect.
    pub phases: Vec<f64>,
    pub a_from_norm: f64,
    pub a_from_s: f64,
    pub unitarity_defect: f64,
    pub identity_residual: f64,
    pub c1_residual: f64,
    /// Largest eigenvalues of `F0'_eps`, descending (at most two).
    pub density_top: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LadderResult {
    pub lambda: f64,
    pub rows: Vec<LadderRow>,
    /// Extrapolated eigenphases that survive the retention floor, in `(0, 2 pi)`.
    pub phases: Vec<f64>,
    /// Extrapolation of `||S~ - I|| / 2`.
    pub a_extrapolated: f64,
    pub predictions: Predictions,
    /// Extrapolated top eigenvalues of `F0'`.
    pub density_top: Vec<f64>,
    /// Whether the unitarity defect never increased down the ladder.
    pub unitarity_monotone: bool,
}

impl LadderResult {
    pub fn finest(&self) -> &LadderRow {
        self.rows.last().expect("ladder has at least one rung")
    }
}

/// Value at `x = 0` of the interpolating polynomial through `(xs, ys)` (Neville).
pub fn extrapolate_to_zero(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len().min(ys.len());
    let mut p: Vec<f64> = ys[..n].to_vec();
    for level in 1..n {
        for i in 0..n - level {
            let (xi, xj) = (xs[i], xs[i + level]);
            p[i] = (xj * p[i] - xi * p[i + 1]) / (xj - xi);
        }
    }
    p.first().copied().unwrap_or(0.0)
}

fn circular_distance(a: f64, b: f64) -> f64 {
    let d = libm::fmod(libm::fabs(a - b), 2.0 * PI);
    d.min(2.0 * PI - d)
}

/// Runs the smoothing ladder and extrapolates phases and `a` to `eps = 0`.
///
/// Phases are tracked from the finest rung outward by nearest match on the
/// circle, unwrapped, and extrapolated with a polynomial through the finest
/// `extrapolation_points` rungs.
pub fn epsilon_ladder(pair: &OperatorPair, lambda: f64, options: &LadderOptions) -> Result<LadderResult> {
    options.validate()?;
    let mut rows = Vec::with_capacity(options.epsilons.len());
    let mut all_phases: Vec<Vec<f64>> = Vec::with_capacity(options.epsilons.len());
    for &eps in &options.epsilons {
        let b = scattering_bundle(pair, lambda, eps)?;
        let mut top = herm_eigenvalues(&b.density.free)?;
        top.reverse();
        top.truncate(2);
        all_phases.push(b.eigenvalues.iter().map(|e| phase_0_2pi(*e)).collect());
        rows.push(LadderRow {
            epsilon: eps,
            phases: b.retained_phases(),
            a_from_norm: b.a_from_norm,
            a_from_s: b.a_from_s,
            unitarity_defect: b.unitarity_defect,
            identity_residual: b.identity_residual,
            c1_residual: b.density.sandwich.identity_residual,
            density_top: top,
        });
    }

    let used = options.extrapolation_points.min(rows.len());
    let window: Vec<usize> = (rows.len() - used..rows.len()).rev().collect();
    let xs: Vec<f64> = window.iter().map(|&i| rows[i].epsilon).collect();

    let finest = &rows[rows.len() - 1];
    let mut phases = Vec::new();
    for &start in &finest.phases {
        let mut track = alloc::vec![start];
        let mut prev = start;
        for &i in window.iter().skip(1) {
            let candidates = &all_phases[i];
            let next = candidates
                .iter()
                .copied()
                .min_by(|a, b| circular_distance(*a, prev).total_cmp(&circular_distance(*b, prev)))
                .unwrap_or(prev);
            // unwrap relative to the previous rung
            let mut unwrapped = next;
            while unwrapped - prev > PI {
                unwrapped -= 2.0 * PI;
            }
            while prev - unwrapped > PI {
                unwrapped += 2.0 * PI;
            }
            track.push(unwrapped);
            prev = unwrapped;
        }
        let theta = libm::fmod(extrapolate_to_zero(&xs, &track), 2.0 * PI);
        let theta = if theta < 0.0 { theta + 2.0 * PI } else { theta };
        if cabs(cexp_i(theta) - c(1.0)) > options.retention_floor {
            phases.push(theta);
        }
    }
    dedup_phases(&mut phases);

    let a_values: Vec<f64> = window.iter().map(|&i| rows[i].a_from_s).collect();
    let a_extrapolated = extrapolate_to_zero(&xs, &a_values);
    let density_top = (0..finest.density_top.len())
        .map(|j| {
            let ys: Vec<f64> = window
                .iter()
                .map(|&i| rows[i].density_top.get(j).copied().unwrap_or(0.0))
                .collect();
            extrapolate_to_zero(&xs, &ys)
        })
        .collect();
    let unitarity_monotone = rows
        .windows(2)
        .all(|w| w[1].unitarity_defect <= w[0].unitarity_defect * (1.0 + 1e-9) + 1e-15);
    let predictions = spectral_predictions(&phases);
    Ok(LadderResult {
        lambda,
        rows,
        phases,
        a_extrapolated,
        predictions,
        density_top,
        unitarity_monotone,
    })
}

// two tracks can lock onto the same eigenvalue at coarse rungs
fn dedup_phases(phases: &mut Vec<f64>) {
    let mut kept: Vec<f64> = Vec::with_capacity(phases.len());
    for &p in phases.iter() {
        if kept.iter().all(|q| circular_distance(*q, p) > 1e-9) {
            kept.push(p);
        }
    }
    *phases = kept;
}

// ---------------------------------------------------------------------------
// Birman-Krein

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BirmanKrein {
    /// `-trace D(lambda)`, an integer for finite matrices.
    pub xi: f64,
    /// Product of the retained `e^{i theta}`.
    pub det_s: C64,
    /// `|det S - e^{-2 pi i xi}|`.
    pub defect: f64,
}

/// Compares `det S` with `e^{-2 pi i xi}` for a given value of `xi`.
pub fn birman_krein_defect(phases: &[f64], xi: f64) -> BirmanKrein {
    let det_s = phases.iter().fold(c(1.0), |acc, t| acc * cexp_i(*t));
    let defect = cabs(det_s - cexp_i(-2.0 * PI * xi));
    BirmanKrein { xi, det_s, defect }
}

/// Birman-Krein check with `xi = -trace D(lambda)`.
pub fn birman_krein_check(pair: &AnalyzedPair, lambda: f64, ladder: &LadderResult) -> Result<BirmanKrein> {
    pair.check_gap(lambda, "birman_krein_check")?;
    let xi = spectral_shift_count(pair, lambda) as f64;
    Ok(birman_krein_defect(&ladder.phases, xi))
}

// ---------------------------------------------------------------------------
// Transfer matrix for -u'' + V u = lambda u

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransferMatrixResult {
    pub k: f64,
    /// Transmission amplitude (equal for both incidences).
    pub t: C64,
    /// Reflection amplitude for a wave incident from the left.
    pub r_left: C64,
    /// Reflection amplitude for a wave incident from the right.
    pub r_right: C64,
    /// `[[t, r_right], [r_left, t]]`, row-major.
    pub s: [[C64; 2]; 2],
    /// Eigenphases of `s` in `[0, 2 pi)`.
    pub eigenphases: [f64; 2],
    /// `| |r|^2 + |t|^2 - 1 |` for left incidence.
    pub flux_defect: f64,
    /// `||S* S - I||`.
    pub unitarity_defect: f64,
}

const EDGE_DECAY: f64 = 1e-8;

/// Scattering matrix of the 1D well by integrating the stationary equation
/// across `[-X, X]` with adaptive Dormand-Prince steps.
pub fn transfer_matrix_smatrix(spec: &PotentialSpec, lambda: f64) -> Result<TransferMatrixResult> {
    if !(lambda > 0.0) {
        return Err(Error::NonPositiveEnergy(lambda));
    }
    let x_edge = spec.half_width;
    for x in [-x_edge, x_edge] {
        let value = libm::fabs(spec.eval(x));
        if value > EDGE_DECAY {
            return Err(Error::NotDecayed { x, value });
        }
    }
    let k = libm::sqrt(lambda);
    let ik = Complex::new(0.0, k);
    let mut breaks: Vec<f64> = spec
        .potential
        .discontinuities()
        .into_iter()
        .filter(|b| libm::fabs(*b) < x_edge)
        .collect();
    breaks.sort_by(f64::total_cmp);

    // left incidence: pure e^{ikx} at +X, integrate down to -X
    let plane = |x: f64, sign: f64| -> [C64; 2] {
        let e = cexp_i(sign * k * x);
        [e, e * ik * c(sign)]
    };
    let mut points = alloc::vec![x_edge];
    points.extend(breaks.iter().rev());
    points.push(-x_edge);
    let u = integrate_piecewise(spec, lambda, &points, plane(x_edge, 1.0))?;
    let (a, b) = decompose(u, -x_edge, k);
    let t = c(1.0) / a;
    let r_left = b / a;

    // right incidence: pure e^{-ikx} at -X, integrate up to +X
    let mut points = alloc::vec![-x_edge];
    points.extend(breaks.iter());
    points.push(x_edge);
    let u = integrate_piecewise(spec, lambda, &points, plane(-x_edge, -1.0))?;
    let (reflected, incident) = decompose(u, x_edge, k);
    let t_right = c(1.0) / incident;
    let r_right = reflected / incident;

    let t_avg = (t + t_right) * c(0.5);
    let s = [[t_avg, r_right], [r_left, t_avg]];
    let flux_defect = libm::fabs(r_left.norm_sqr() + t.norm_sqr() - 1.0);
    let unitarity_defect = {
        let m = CMatrix::from_row_slice(2, 2, &[s[0][0], s[0][1], s[1][0], s[1][1]]);
        frobenius(&(m.adjoint() * &m - identity(2)))
    };
    // eigenvalues of [[p, q], [r, p]] are p +- sqrt(q r)
    let root = csqrt(r_right * r_left);
    let eigenphases = [phase_0_2pi(t_avg + root), phase_0_2pi(t_avg - root)];
    Ok(TransferMatrixResult {
        k,
        t: t_avg,
        r_left,
        r_right,
        s,
        eigenphases,
        flux_defect,
        unitarity_defect,
    })
}

/// Writes `u = A e^{ikx} + B e^{-ikx}` at `x`, returns `(A, B)`.
fn decompose(u: [C64; 2], x: f64, k: f64) -> (C64, C64) {
    let ik = Complex::new(0.0, k);
    let a = (u[0] + u[1] / ik) * c(0.5) * cexp_i(-k * x);
    let b = (u[0] - u[1] / ik) * c(0.5) * cexp_i(k * x);
    (a, b)
}

fn integrate_piecewise(spec: &PotentialSpec, lambda: f64, points: &[f64], start: [C64; 2]) -> Result<[C64; 2]> {
    let mut y = start;
    for w in points.windows(2) {
        y = dormand_prince(spec, lambda, w[0], w[1], y)?;
    }
    Ok(y)
}

fn rhs(spec: &PotentialSpec, lambda: f64, x: f64, y: &[C64; 2]) -> [C64; 2] {
    [y[1], y[0] * c(spec.eval(x) - lambda)]
}

const RTOL: f64 = 1e-11;
const ATOL: f64 = 1e-13;
const MAX_STEPS: usize = 1_000_000;

// Dormand-Prince 5(4) tableau
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

fn dormand_prince(spec: &PotentialSpec, lambda: f64, x0: f64, x1: f64, y0: [C64; 2]) -> Result<[C64; 2]> {
    let span = x1 - x0;
    if span == 0.0 {
        return Ok(y0);
    }
    let dir = if span > 0.0 { 1.0 } else { -1.0 };
    let mut h = dir * libm::fabs(span).min(0.01);
    let mut x = x0;
    let mut y = y0;
    let f = |x: f64, y: &[C64; 2]| rhs(spec, lambda, x, y);
    let comb = |y: &[C64; 2], terms: &[(f64, &[C64; 2])], h: f64| -> [C64; 2] {
        let mut out = *y;
        for (coef, k) in terms {
            out[0] += k[0] * c(h * coef);
            out[1] += k[1] * c(h * coef);
        }
        out
    };
    for _ in 0..MAX_STEPS {
        if (x1 - x) * dir <= 0.0 {
            return Ok(y);
        }
        if (x + h - x1) * dir > 0.0 {
            h = x1 - x;
        }
        let k1 = f(x, &y);
        let k2 = f(x + h / 5.0, &comb(&y, &[(A21, &k1)], h));
        let k3 = f(x + 3.0 * h / 10.0, &comb(&y, &[(A31, &k1), (A32, &k2)], h));
        let k4 = f(x + 4.0 * h / 5.0, &comb(&y, &[(A41, &k1), (A42, &k2), (A43, &k3)], h));
        let k5 = f(
            x + 8.0 * h / 9.0,
            &comb(&y, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)], h),
        );
        let k6 = f(
            x + h,
            &comb(&y, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)], h),
        );
        let y5 = comb(&y, &[(B1, &k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)], h);
        let k7 = f(x + h, &y5);
        let mut err: f64 = 0.0;
        for i in 0..2 {
            let e = (k1[i] * c(E1) + k3[i] * c(E3) + k4[i] * c(E4) + k5[i] * c(E5) + k6[i] * c(E6) + k7[i] * c(E7))
                * c(h);
            let scale = ATOL + RTOL * cabs(y[i]).max(cabs(y5[i]));
            err = err.max(cabs(e) / scale);
        }
        if err <= 1.0 {
            x += h;
            y = y5;
        }
        let factor = if err == 0.0 { 5.0 } else { (0.9 * libm::pow(err, -0.2)).clamp(0.2, 5.0) };
        h *= factor;
    }
    Err(Error::NoConvergence("transfer-matrix integration"))
}

/// The 2x2 matrix `F F*` of the plane-wave fiber map at energy `lambda`:
/// `(4 pi k)^{-1} [[int |V|, int |V| e^{-2ikx}], [int |V| e^{2ikx}, int |V|]]`.
/// Its eigenvalues are the nonzero eigenvalues of `F0'(lambda)`.
pub fn fiber_gram(spec: &PotentialSpec, lambda: f64) -> Result<[[C64; 2]; 2]> {
    if !(lambda > 0.0) {
        return Err(Error::NonPositiveEnergy(lambda));
    }
    let k = libm::sqrt(lambda);
    let x_edge = spec.half_width;
    let mut points = alloc::vec![-x_edge];
    let mut breaks: Vec<f64> = spec
        .potential
        .discontinuities()
        .into_iter()
        .filter(|b| libm::fabs(*b) < x_edge)
        .collect();
    breaks.sort_by(f64::total_cmp);
    points.extend(breaks);
    points.push(x_edge);
    let (mut mass, mut wave) = (0.0, c(0.0));
    for w in points.windows(2) {
        let rule = composite_legendre(w[0], w[1], 200, 8)?;
        for (&x, &wt) in rule.nodes.iter().zip(&rule.weights) {
            let v = libm::fabs(spec.eval(x));
            mass += wt * v;
            wave += cexp_i(-2.0 * k * x) * c(wt * v);
        }
    }
    let scale = 1.0 / (4.0 * PI * k);
    Ok([
        [c(mass * scale), wave * c(scale)],
        [wave.conj() * c(scale), c(mass * scale)],
    ])
}

/// Eigenvalues of [`fiber_gram`], descending.
pub fn fiber_gram_eigenvalues(spec: &PotentialSpec, lambda: f64) -> Result<[f64; 2]> {
    let m = fiber_gram(spec, lambda)?;
    let off = cabs(m[0][1]);
    Ok([m[0][0].re + off, m[0][0].re - off])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::diag;
    use crate::models::{build_finite_pair, Potential};

    #[test]
    fn scalar_free_sandwich() {
        // H0 = 0, G = 1: T0(i eps) = -1/(i eps)
        let pair = build_finite_pair(diag(&[0.0]), diag(&[1.0]), diag(&[0.0])).unwrap();
        let eps = 0.25;
        let s = resolvent_sandwich(&pair, Complex::new(0.0, eps)).unwrap();
        let expected = -c(1.0) / Complex::new(0.0, eps);
        assert!(cabs(s.t0[(0, 0)] - expected) < 1e-14);
        let d = smoothed_density(&pair, 0.0, eps).unwrap();
        assert!((d.free[(0, 0)].re - 1.0 / (PI * eps)).abs() < 1e-12);
    }

    #[test]
    fn zero_coupling_gives_identity_scattering() {
        let pair = build_finite_pair(diag(&[-0.5, 0.5]), CMatrix::from_element(1, 2, c(0.7)), diag(&[0.0])).unwrap();
        let b = scattering_bundle(&pair, 0.1, 0.05).unwrap();
        assert!(frobenius(&(&b.s_tilde - identity(1))) < 1e-14);
        assert!(b.retained_phases().is_empty());
        assert!(frobenius(&b.a) < 1e-14);
        assert_eq!(spectral_predictions(&b.retained_phases()).a, 0.0);
    }

    #[test]
    fn predictions_from_phases() {
        let p = spectral_predictions(&[PI / 2.0, PI / 3.0]);
        assert!((p.a - libm::sqrt(2.0) / 2.0).abs() < 1e-15);
        assert!((p.edges[0] - libm::sin(PI / 4.0)).abs() < 1e-15);
        assert!((p.edges[1] - libm::sin(PI / 6.0)).abs() < 1e-15);
        let q = spectral_predictions(&[PI]);
        assert!((q.a - 1.0).abs() < 1e-15 && (q.edges[0] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn neville_recovers_polynomial() {
        let xs = [0.3, 0.2, 0.1];
        let ys: Vec<f64> = xs.iter().map(|x| 2.0 + 3.0 * x - x * x).collect();
        assert!((extrapolate_to_zero(&xs, &ys) - 2.0).abs() < 1e-13);
    }

    #[test]
    fn free_line_transmits_fully() {
        let spec = PotentialSpec {
            potential: Potential::Custom(alloc::sync::Arc::new(|_| 0.0)),
            ..PotentialSpec::sech2(1.0)
        };
        let r = transfer_matrix_smatrix(&spec, 0.7).unwrap();
        assert!(cabs(r.t - c(1.0)) < 1e-9);
        assert!(cabs(r.r_left) < 1e-9);
    }

    #[test]
    fn square_well_closed_form() {
        let (v0, b, lambda) = (1.0, 1.0, 1.0);
        let spec = PotentialSpec::square_well(v0, b);
        let r = transfer_matrix_smatrix(&spec, lambda).unwrap();
        let k: f64 = 1.0;
        let kappa = libm::sqrt(lambda + v0);
        let denom = Complex::new(
            libm::cos(2.0 * kappa * b),
            -(k * k + kappa * kappa) / (2.0 * k * kappa) * libm::sin(2.0 * kappa * b),
        );
        let expected = cexp_i(-2.0 * k * b) / denom;
        assert!(cabs(r.t - expected) < 1e-6, "{} vs {}", r.t, expected);
        assert!(r.flux_defect < 1e-8);
        assert!(r.unitarity_defect < 1e-8);
    }

    #[test]
    fn sech2_is_reflectionless_at_amplitude_two() {
        let r = transfer_matrix_smatrix(&PotentialSpec::sech2(2.0), 0.8).unwrap();
        assert!(cabs(r.r_left) < 1e-8);
        assert!(r.flux_defect < 1e-8);
    }

    #[test]
    fn rejects_bad_energy_and_undecayed_potential() {
        assert!(transfer_matrix_smatrix(&PotentialSpec::sech2(1.0), 0.0).is_err());
        let spec = PotentialSpec {
            potential: Potential::Custom(alloc::sync::Arc::new(|_| -0.1)),
            ..PotentialSpec::sech2(1.0)
        };
        assert!(matches!(transfer_matrix_smatrix(&spec, 1.0), Err(Error::NotDecayed { .. })));
    }

    #[test]
    fn birman_krein_trivial_case() {
        let bk = birman_krein_defect(&[], 0.0);
        assert!(bk.defect < 1e-15);
        let krein_like = birman_krein_defect(&[PI], 0.5);
        assert!(krein_like.defect < 1e-14);
    }
}
