//! Spectral projections `E0(lambda)`, `E(lambda)`, their difference `D` and the
//! corner compressions.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg::{frobenius, herm_eigenvalues, hermitian_part, identity, CMatrix, Eigen};
use crate::models::AnalyzedPair;

/// Distance of an eigenvalue from `+-1` below which it counts toward the
/// `+-1` eigenspaces rather than the middle of the spectrum.
pub const CLUSTER_TOLERANCE: f64 = 1e-6;

/// `sum_{lambda_k < lambda} v_k v_k*`; errors if an eigenvalue lies within
/// `gap_tolerance` of `lambda`.
pub fn spectral_projection(eig: &Eigen, lambda: f64, gap_tolerance: f64) -> Result<CMatrix> {
    if let Some(near) = eig.nearest(lambda) {
        if libm::fabs(near - lambda) < gap_tolerance {
            return Err(Error::GapViolation {
                context: "spectral_projection",
                probe: lambda,
                eigenvalue: near,
                tolerance: gap_tolerance,
            });
        }
    }
    Ok(eig.projection(|v| v < lambda))
}

#[derive(Debug, Clone)]
pub struct ProjectionPair {
    pub e0: CMatrix,
    pub e: CMatrix,
    pub probe: f64,
    /// Distances from the probe to the nearest eigenvalue of `H0` and of `H`.
    pub gaps: (f64, f64),
}

impl ProjectionPair {
    pub fn difference(&self) -> CMatrix {
        hermitian_part(&(&self.e - &self.e0))
    }

    /// `max(||E0^2 - E0||, ||E^2 - E||)`.
    pub fn idempotency_defect(&self) -> f64 {
        let d0 = frobenius(&(&self.e0 * &self.e0 - &self.e0));
        let d = frobenius(&(&self.e * &self.e - &self.e));
        d0.max(d)
    }
}

pub fn projection_pair(pair: &AnalyzedPair, lambda: f64) -> Result<ProjectionPair> {
    let gaps = pair.check_gap(lambda, "projection_pair")?;
    Ok(ProjectionPair {
        e0: pair.eig0.projection(|v| v < lambda),
        e: pair.eig.projection(|v| v < lambda),
        probe: lambda,
        gaps,
    })
}

/// How densely a finite set covers an interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FillMetrics {
    pub lo: f64,
    pub hi: f64,
    /// Largest gap among the points inside `[lo, hi]` together with both ends.
    pub max_gap: f64,
    /// `sup_{x in [lo, hi]} dist(x, points)`.
    pub coverage: f64,
    /// `sup_{p in points} dist(p, [lo, hi])`.
    pub excess: f64,
    /// Two-sided Hausdorff distance, `max(coverage, excess)`.
    pub hausdorff: f64,
    pub count_inside: usize,
}

pub fn fill_metrics(points: &[f64], lo: f64, hi: f64) -> FillMetrics {
    let mut inside: Vec<f64> = points.iter().copied().filter(|p| *p >= lo && *p <= hi).collect();
    inside.sort_by(f64::total_cmp);
    let count_inside = inside.len();

    let mut chain = Vec::with_capacity(inside.len() + 2);
    chain.push(lo);
    chain.extend_from_slice(&inside);
    chain.push(hi);
    let max_gap = chain.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max);

    // coverage: all points count, not only those inside
    let mut all: Vec<f64> = points.to_vec();
    all.sort_by(f64::total_cmp);
    let coverage = if all.is_empty() {
        f64::INFINITY
    } else {
        // distance to the set is piecewise linear: maxima sit at the ends or at midpoints
        let mut worst = dist_to_sorted(&all, lo).max(dist_to_sorted(&all, hi));
        for w in all.windows(2) {
            let mid = 0.5 * (w[0] + w[1]);
            if mid >= lo && mid <= hi {
                worst = worst.max(0.5 * (w[1] - w[0]));
            }
        }
        worst
    };
    let excess = points
        .iter()
        .map(|&p| (lo - p).max(p - hi).max(0.0))
        .fold(0.0, f64::max);
    FillMetrics {
        lo,
        hi,
        max_gap,
        coverage,
        excess,
        hausdorff: coverage.max(excess),
        count_inside,
    }
}

fn dist_to_sorted(sorted: &[f64], x: f64) -> f64 {
    let idx = sorted.partition_point(|v| *v < x);
    let mut best = f64::INFINITY;
    if idx < sorted.len() {
        best = best.min(sorted[idx] - x);
    }
    if idx > 0 {
        best = best.min(x - sorted[idx - 1]);
    }
    best
}

/// Hausdorff distance between two finite sets (zero if both are empty).
pub fn hausdorff(a: &[f64], b: &[f64]) -> f64 {
    match (a.is_empty(), b.is_empty()) {
        (true, true) => return 0.0,
        (true, false) | (false, true) => return f64::INFINITY,
        _ => {}
    }
    let mut sa = a.to_vec();
    let mut sb = b.to_vec();
    sa.sort_by(f64::total_cmp);
    sb.sort_by(f64::total_cmp);
    let one = |from: &[f64], to: &[f64]| from.iter().map(|&x| dist_to_sorted(to, x)).fold(0.0, f64::max);
    one(&sa, &sb).max(one(&sb, &sa))
}

/// Spectrum of `D(lambda) = E(lambda) - E0(lambda)` and what it says.
#[derive(Debug, Clone)]
pub struct DifferenceReport {
    pub probe: f64,
    /// All eigenvalues, ascending.
    pub spectrum: Vec<f64>,
    pub dim_plus: usize,
    pub dim_minus: usize,
    /// Hausdorff distance between the middle eigenvalues and their negatives.
    pub pairing_defect: f64,
    /// Multiset matching distance between the positive and negated negative
    /// middle eigenvalues; `None` if the counts differ.
    pub pairing_matching: Option<f64>,
    /// `trace D`, which equals `#{H < lambda} - #{H0 < lambda}`.
    pub trace: f64,
    /// Fill of `[-1, 1]` by the middle eigenvalues.
    pub fill: FillMetrics,
}

impl DifferenceReport {
    /// Eigenvalues strictly between the `+-1` clusters.
    pub fn middle(&self) -> Vec<f64> {
        middle_part(&self.spectrum)
    }

    /// Smallest and largest middle eigenvalue (zero if there are none).
    pub fn middle_extremes(&self) -> (f64, f64) {
        let m = self.middle();
        (
            m.first().copied().unwrap_or(0.0).min(0.0),
            m.last().copied().unwrap_or(0.0).max(0.0),
        )
    }

    pub fn fill_against(&self, lo: f64, hi: f64) -> FillMetrics {
        fill_metrics(&self.middle(), lo, hi)
    }
}

fn middle_part(spectrum: &[f64]) -> Vec<f64> {
    spectrum
        .iter()
        .copied()
        .filter(|v| libm::fabs(*v) < 1.0 - CLUSTER_TOLERANCE)
        .collect()
}

/// Computes `D(lambda)` and analyses its spectrum.
pub fn projection_difference(pair: &AnalyzedPair, lambda: f64) -> Result<DifferenceReport> {
    let pp = projection_pair(pair, lambda)?;
    difference_report(&pp)
}

pub fn difference_report(pp: &ProjectionPair) -> Result<DifferenceReport> {
    let d = pp.difference();
    let trace: f64 = (0..d.nrows()).map(|i| d[(i, i)].re).sum();
    let spectrum = herm_eigenvalues(&d)?;
    let dim_plus = spectrum.iter().filter(|v| **v >= 1.0 - CLUSTER_TOLERANCE).count();
    let dim_minus = spectrum.iter().filter(|v| **v <= -1.0 + CLUSTER_TOLERANCE).count();

    let mid = middle_part(&spectrum);
    let paired: Vec<f64> = mid.iter().copied().filter(|v| libm::fabs(*v) > CLUSTER_TOLERANCE).collect();
    let negated: Vec<f64> = paired.iter().map(|v| -v).collect();
    let pairing_defect = hausdorff(&paired, &negated);

    let mut pos: Vec<f64> = paired.iter().copied().filter(|v| *v > 0.0).collect();
    let mut neg: Vec<f64> = paired.iter().filter(|v| **v < 0.0).map(|v| -v).collect();
    pos.sort_by(f64::total_cmp);
    neg.sort_by(f64::total_cmp);
    let pairing_matching = (pos.len() == neg.len()).then(|| {
        pos.iter().zip(&neg).map(|(a, b)| libm::fabs(a - b)).fold(0.0, f64::max)
    });

    let fill = fill_metrics(&mid, -1.0, 1.0);
    Ok(DifferenceReport {
        probe: pp.probe,
        spectrum,
        dim_plus,
        dim_minus,
        pairing_defect,
        pairing_matching,
        trace,
        fill,
    })
}

/// `||D^2 - (E0- E+ E0- + E0+ E- E0+)||` with `E-- = E(lambda)`, `E+ = I - E(lambda)`.
pub fn dsq_block_check(pp: &ProjectionPair) -> f64 {
    let n = pp.e0.nrows();
    let id = identity(n);
    let e0_minus = &pp.e0;
    let e0_plus = &id - &pp.e0;
    let e_minus = &pp.e;
    let e_plus = &id - &pp.e;
    let d = &pp.e - &pp.e0;
    let blocks = e0_minus * &e_plus * e0_minus + &e0_plus * e_minus * &e0_plus;
    frobenius(&(&d * &d - blocks))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    /// `E0(R+) E(R-) E0(R+)` on `Ran E0(R+)`.
    Plus,
    /// `E0(R-) E(R+) E0(R-)` on `Ran E0(R-)`.
    Minus,
}

#[derive(Debug, Clone)]
pub struct CornerSpectrum {
    pub side: Side,
    pub probe: f64,
    /// Eigenvalues of the compression, descending.
    pub eigenvalues: Vec<f64>,
}

impl CornerSpectrum {
    pub fn max(&self) -> f64 {
        self.eigenvalues.first().copied().unwrap_or(0.0)
    }

    pub fn fill_against(&self, top: f64) -> FillMetrics {
        fill_metrics(&self.eigenvalues, 0.0, top)
    }

    /// Eigenvalues above `floor`, descending.
    pub fn above(&self, floor: f64) -> Vec<f64> {
        self.eigenvalues.iter().copied().filter(|v| *v > floor).collect()
    }
}

/// Spectrum of the corner operator relative to the probe `lambda` (the half
/// lines are `(lambda, inf)` and `(-inf, lambda)`).
///
/// Computed as the squared singular values of the cross block between the
/// eigenvectors of `H0` on one side and those of `H` on the other.
pub fn corner_spectrum(pair: &AnalyzedPair, lambda: f64, side: Side) -> Result<CornerSpectrum> {
    pair.check_gap(lambda, "corner_spectrum")?;
    let (q, w) = match side {
        Side::Plus => (pair.eig0.select(|v| v > lambda).0, pair.eig.select(|v| v < lambda).0),
        Side::Minus => (pair.eig0.select(|v| v < lambda).0, pair.eig.select(|v| v > lambda).0),
    };
    if q.ncols() == 0 || w.ncols() == 0 {
        return Ok(CornerSpectrum {
            side,
            probe: lambda,
            eigenvalues: alloc::vec![0.0; q.ncols()],
        });
    }
    let cross = q.adjoint() * w;
    let gram = hermitian_part(&(&cross * cross.adjoint()));
    let mut eigenvalues = herm_eigenvalues(&gram)?;
    eigenvalues.reverse();
    Ok(CornerSpectrum { side, probe: lambda, eigenvalues })
}

/// Location where the counting function of a descending list of corner
/// eigenvalues changes slope: among values above `floor_fraction * max`, the
/// value `c_j` that maximises `gap_{j-1} / gap_j`.
pub fn counting_slope_change(descending: &[f64], floor_fraction: f64) -> Option<f64> {
    let top = *descending.first()?;
    let vals: Vec<f64> = descending.iter().copied().filter(|v| *v > floor_fraction * top).collect();
    if vals.len() < 3 {
        return None;
    }
    let gaps: Vec<f64> = vals.windows(2).map(|w| w[0] - w[1]).collect();
    let mut best = None;
    let mut best_ratio = 0.0;
    for j in 1..gaps.len() {
        if gaps[j] <= 0.0 {
            continue;
        }
        let ratio = gaps[j - 1] / gaps[j];
        if ratio > best_ratio {
            best_ratio = ratio;
            best = Some(vals[j]);
        }
    }
    best
}

/// `#{H0 < lambda} - #{H < lambda}`, which is `-trace D(lambda)`.
pub fn spectral_shift_count(pair: &AnalyzedPair, lambda: f64) -> i64 {
    let below = |e: &Eigen| e.values.iter().filter(|v| **v < lambda).count() as i64;
    below(&pair.eig0) - below(&pair.eig)
}

/// Average of the counting difference `#{H0 < s} - #{H < s}` over `s in [lo, hi]`,
/// computed exactly from the eigenvalues.
pub fn spectral_shift_average(pair: &AnalyzedPair, lo: f64, hi: f64) -> f64 {
    let integral = |e: &Eigen| -> f64 {
        e.values.iter().map(|&v| (hi - v.max(lo)).max(0.0)).sum()
    };
    (integral(&pair.eig0) - integral(&pair.eig)) / (hi - lo)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c, diag};
    use crate::models::{build_finite_pair, OperatorPair, ModelInfo};

    fn swapped() -> AnalyzedPair {
        let h0 = diag(&[-1.0, 1.0]);
        let h = diag(&[1.0, -1.0]);
        // G = I, V0 = H - H0
        let g = diag(&[1.0, 1.0]);
        let v0 = diag(&[2.0, -2.0]);
        OperatorPair::new(h0, h, g, v0, ModelInfo::named("swap")).unwrap().analyze().unwrap()
    }

    #[test]
    fn projection_limits_and_diagonal_case() {
        let e = crate::linalg::herm_eig(&diag(&[0.0, 1.0])).unwrap();
        assert_eq!(spectral_projection(&e, -5.0, 1e-8).unwrap(), CMatrix::zeros(2, 2));
        assert!(frobenius(&(spectral_projection(&e, 5.0, 1e-8).unwrap() - identity(2))) < 1e-15);
        assert!(frobenius(&(spectral_projection(&e, 0.5, 1e-8).unwrap() - diag(&[1.0, 0.0]))) < 1e-15);
        match spectral_projection(&e, 1.0 + 1e-10, 1e-8) {
            Err(Error::GapViolation { eigenvalue, .. }) => assert_eq!(eigenvalue, 1.0),
            other => panic!("expected gap violation, got {other:?}"),
        }
    }

    #[test]
    fn swapped_projections_give_plus_minus_one() {
        let r = projection_difference(&swapped(), 0.0).unwrap();
        assert_eq!((r.dim_plus, r.dim_minus), (1, 1));
        assert!((r.spectrum[0] + 1.0).abs() < 1e-14 && (r.spectrum[1] - 1.0).abs() < 1e-14);
        let corner = corner_spectrum(&swapped(), 0.0, Side::Plus).unwrap();
        assert!((corner.max() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn rotated_line_gives_plus_minus_sine() {
        // E0 projects on e1, E on (cos t, sin t)
        let t: f64 = 0.3;
        let (ct, st) = (t.cos(), t.sin());
        let u = CMatrix::from_row_slice(2, 2, &[c(ct), c(-st), c(st), c(ct)]);
        let h0 = diag(&[-1.0, 1.0]);
        let h = &u * &h0 * u.adjoint();
        let v = &h - &h0;
        let pair = crate::models::build_polar_pair(h0, &v).unwrap().analyze().unwrap();
        let r = projection_difference(&pair, 0.0).unwrap();
        assert!((r.spectrum[0] + st).abs() < 1e-12 && (r.spectrum[1] - st).abs() < 1e-12);
        assert!(r.pairing_defect < 1e-12);
    }

    #[test]
    fn zero_perturbation_gives_zero_difference() {
        let pair = build_finite_pair(diag(&[-0.5, 0.2, 0.9]), CMatrix::zeros(1, 3), diag(&[1.0]))
            .unwrap()
            .analyze()
            .unwrap();
        let r = projection_difference(&pair, 0.0).unwrap();
        assert!(r.spectrum.iter().all(|v| v.abs() < 1e-15));
        assert_eq!(r.pairing_defect, 0.0);
        let pp = projection_pair(&pair, 0.0).unwrap();
        assert_eq!(dsq_block_check(&pp), 0.0);
        let corner = corner_spectrum(&pair, 0.0, Side::Plus).unwrap();
        assert!(corner.eigenvalues.iter().all(|v| v.abs() < 1e-15));
    }

    #[test]
    fn fill_metrics_on_known_points() {
        let f = fill_metrics(&[-0.5, 0.0, 0.5], -1.0, 1.0);
        assert!((f.max_gap - 0.5).abs() < 1e-15);
        assert!((f.coverage - 0.5).abs() < 1e-15);
        assert_eq!(f.excess, 0.0);
        let g = fill_metrics(&[0.0, 2.0], -1.0, 1.0);
        assert!((g.excess - 1.0).abs() < 1e-15);
        assert!((g.coverage - 1.0).abs() < 1e-15);
    }

    #[test]
    fn slope_change_detects_density_jump() {
        // sparse above 0.5, dense below
        let mut v = alloc::vec![0.9, 0.75, 0.6];
        v.extend((0..20).map(|i| 0.5 - 0.02 * i as f64));
        let x = counting_slope_change(&v, 0.1).unwrap();
        assert!((x - 0.5).abs() < 1e-12, "{x}");
    }

    #[test]
    fn hausdorff_basic() {
        assert_eq!(hausdorff(&[0.0, 1.0], &[1.0, 0.0]), 0.0);
        assert!((hausdorff(&[0.0], &[0.0, 3.0]) - 3.0).abs() < 1e-15);
    }
}
