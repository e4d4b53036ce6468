use projdiff_core::linalg::{c, diag, operator_norm, CMatrix};
use projdiff_core::models::*;
use projdiff_core::quadrature::{make_quadrature, QuadratureKind, QuadratureRule};
use projdiff_core::zop::*;
use projdiff_core::Error;

fn exp_rule(n: usize, scale: f64) -> QuadratureRule {
    make_quadrature(QuadratureKind::ExpMapped { scale }, n).unwrap()
}

fn gap_at_zero(pair: &AnalyzedPair) -> f64 {
    let (a, b) = pair.check_gap(0.0, "test").unwrap();
    a.min(b)
}

fn krein_at_half(n: usize) -> AnalyzedPair {
    let pair = build_krein(n, 40.0, KreinDiscretization::CellAverage).unwrap().analyze().unwrap();
    shift_analyzed(&pair, 0.5)
}

#[test]
fn random_pairs_satisfy_identity_on_both_routes() {
    let opts = RandomPairOptions { dim: 6, ..Default::default() };
    for seed in 0..5 {
        let pair = random_pair(seed, &opts).unwrap().analyze().unwrap();
        let r = adaptive_identity_check(&pair, &AdaptiveOptions::default()).unwrap();
        assert!(r.converged, "seed {seed}: {r:?}");
        let best = r.best();
        assert!(best.oracle <= 1e-9, "seed {seed}: {best:?}");
        assert!(best.direct <= 1e-6, "seed {seed}: {best:?}");
    }
}

#[test]
fn oracle_is_within_dimension_budget_for_larger_pairs() {
    let opts = RandomPairOptions { dim: 24, rank: 5, ..Default::default() };
    for seed in 10..13 {
        let pair = random_pair(seed, &opts).unwrap().analyze().unwrap();
        let x = sylvester_oracle(&pair).unwrap();
        let minus = pair.eig.projection(|v| v < 0.0);
        let plus0 = pair.eig0.projection(|v| v > 0.0);
        let residual = operator_norm(&(x + minus * plus0)).unwrap();
        assert!(residual <= 1e-8 * 24.0, "seed {seed}: {residual:e}");
    }
}

#[test]
fn krein_identity_at_half() {
    let pair = krein_at_half(200);
    let r = identity_check(&pair, &exp_rule(120, 1.0 / gap_at_zero(&pair))).unwrap();
    assert!(r.oracle <= 1e-8, "{r:?}");
    assert!(r.direct <= 1e-6, "{r:?}");
    // E0+ E- E0+ = (Z V0 Z0*)* (Z V0 Z0*)
    assert!(r.representation <= 1e-6, "{r:?}");
}

#[test]
fn direct_residual_falls_then_plateaus() {
    let opts = RandomPairOptions { dim: 8, ..Default::default() };
    let pair = random_pair(4, &opts).unwrap().analyze().unwrap();
    let gap = gap_at_zero(&pair);
    let residuals: Vec<f64> = [4, 8, 16, 64]
        .iter()
        .map(|&n| identity_check(&pair, &exp_rule(n, 1.0 / gap)).unwrap().direct)
        .collect();
    assert!(residuals[1] < residuals[0] && residuals[2] < residuals[1], "{residuals:?}");
    assert!(residuals[3] <= 1e-10, "{residuals:?}");
}

#[test]
fn operator_norms_stable_under_doubling() {
    let pair = krein_at_half(200);
    let gap = gap_at_zero(&pair);
    let a = build_z_ops(&pair, &exp_rule(120, 1.0 / gap)).unwrap().norms().unwrap();
    let b = build_z_ops(&pair, &exp_rule(240, 1.0 / gap)).unwrap().norms().unwrap();
    for (x, y) in [(a.0, b.0), (a.1, b.1)] {
        assert!(x.is_finite() && x > 0.0);
        let ratio = y / x;
        assert!((0.9..=1.1).contains(&ratio), "{ratio}");
    }
}

#[test]
fn probe_on_eigenvalue_is_rejected() {
    let pair = build_finite_pair(diag(&[0.0, 1.0]), CMatrix::from_element(1, 2, c(0.5)), diag(&[1.0]))
        .unwrap()
        .analyze()
        .unwrap();
    assert!(matches!(build_z_ops(&pair, &exp_rule(10, 1.0)), Err(Error::GapViolation { .. })));
}

#[test]
fn gram_comparison_on_krein() {
    let pair = krein_at_half(300);
    let rule = exp_rule(120, 1.0 / gap_at_zero(&pair));
    let report = model_comparison(&pair, &rule, &[0.2, 0.1, 0.05]).unwrap();
    assert!(report.free.strictly_decreasing(10));
    assert!(report.free.ratio(10) <= 0.2, "{}", report.free.ratio(10));
    assert!(report.perturbed.ratio(10) <= 0.2, "{}", report.perturbed.ratio(10));
    assert!(report.gram_psd_defect <= 1e-12);
    assert!(report.free.exponent < 0.0);

    // a coarser smoothing ladder leaves a larger leading singular value
    let coarse = model_comparison(&pair, &rule, &[0.4, 0.2, 0.1]).unwrap();
    assert!(report.free.values[0] < coarse.free.values[0]);
    assert!(report.perturbed.values[0] < coarse.perturbed.values[0]);
}

#[test]
fn flat_density_without_coupling() {
    // H0 with levels spread evenly over [-1, 1] and uniform overlap with G: flat F0'
    let n = 120;
    let levels: Vec<f64> = (0..n).map(|j| -1.0 + (j as f64 + 0.5) * 2.0 / n as f64).collect();
    let g = CMatrix::from_element(1, n, c((1.0 / n as f64).sqrt()));
    let pair = build_finite_pair(diag(&levels), g, diag(&[0.0])).unwrap().analyze().unwrap();
    let rule = exp_rule(60, 10.0);
    let report = model_comparison(&pair, &rule, &[0.2, 0.1, 0.05]).unwrap();
    let ratio = report.free.values[0] / report.free_gram_norm;
    assert!(ratio.is_finite() && ratio < 1.0, "{ratio}");
}
