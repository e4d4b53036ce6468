use std::f64::consts::{E, PI};
use std::sync::Arc;

use projdiff_core::hankel::*;
use projdiff_core::linalg::{c, CMatrix};
use projdiff_core::quadrature::{make_quadrature, QuadratureKind, QuadratureRule};
use projdiff_core::Error;

fn exp_rule(n: usize) -> QuadratureRule {
    make_quadrature(QuadratureKind::ExpMapped { scale: 1.0 }, n).unwrap()
}

fn laplace_t_rule() -> QuadratureRule {
    make_quadrature(QuadratureKind::LogMapped { lo: 1e-4, hi: 1e4 }, 60).unwrap()
}

#[test]
fn band_spectra_at_300_nodes() {
    let rule = default_band_rule(300).unwrap();
    let bands = band_pair(&rule).unwrap();
    assert!(bands.within_bounds());
    assert!(bands.top_low() >= PI - 0.1, "{}", bands.top_low());
    assert!(bands.top_high() >= PI - 0.1, "{}", bands.top_high());
    assert!(bands.hausdorff <= 0.05, "{}", bands.hausdorff);
    // 1/s = (1 - e^{-s})/s + e^{-s}/s entrywise
    assert!(bands.additivity_defect <= 1e-15);
}

#[test]
fn band_spectra_stay_in_range_on_fine_grids() {
    for n in [200, 250, 400] {
        let bands = band_pair(&default_band_rule(n).unwrap()).unwrap();
        assert!(bands.within_bounds(), "n = {n}");
    }
    let bands = band_pair(&exp_rule(80)).unwrap();
    assert!(bands.within_bounds());
}

#[test]
fn coarse_log_grids_alias_above_pi() {
    // a step of several units in ln t lets the Riemann sum of 1/(2 cosh(x/2)) exceed its integral
    let bands = band_pair(&default_band_rule(40).unwrap()).unwrap();
    assert!(!bands.within_bounds());
    assert!(bands.low[0] >= -SPECTRUM_SLACK);
}

#[test]
fn carleman_norm_approaches_pi() {
    let norm = carleman_norm(&default_band_rule(300).unwrap()).unwrap();
    assert!(norm >= PI - 0.05 && norm <= PI + 1e-6, "{norm}");
    let coarse = carleman_norm(&default_band_rule(75).unwrap()).unwrap();
    assert!((coarse - PI).abs() > (norm - PI).abs());
}

#[test]
fn laplace_factorizations_converge() {
    let t_rule = laplace_t_rule();
    let reports: Vec<LaplaceReport> = [100, 200, 400]
        .iter()
        .map(|&n| laplace_factorizations(&t_rule, &laplace_rules(&t_rule, n).unwrap(), 100).unwrap())
        .collect();
    assert!(reports[1].low_residual <= 1e-6);
    assert!(reports[1].high_residual <= 1e-6);
    // once at roundoff, doubling cannot decrease further; treat 1e-13 as that floor
    let floor = 1e-13;
    for pair in reports.windows(2) {
        for (a, b) in [(pair[0].low_residual, pair[1].low_residual), (pair[0].high_residual, pair[1].high_residual)] {
            assert!(b < a || (a <= floor && b <= floor), "{a:e} -> {b:e}");
        }
    }
    assert!(reports[0].low_residual > floor, "the coarse rung should be visibly unconverged");
}

#[test]
fn lambda_rules_split_at_one() {
    let rules = laplace_rules(&laplace_t_rule(), 200).unwrap();
    assert_eq!(rules.len(), 200);
    assert!(rules.below.nodes.iter().all(|&l| l > 0.0 && l < 1.0));
    assert!(rules.above.nodes.iter().all(|&l| l > 1.0));
}

#[test]
fn reciprocal_relations() {
    let t_rule = laplace_t_rule();
    let coarse = laplace_factorizations(&t_rule, &laplace_rules(&t_rule, 100).unwrap(), 100).unwrap();
    let fine = laplace_factorizations(&t_rule, &laplace_rules(&t_rule, 100).unwrap(), 200).unwrap();
    assert!(coarse.involution_residual <= 1e-14);
    assert!(coarse.conjugation_residual <= 1e-6, "{}", coarse.conjugation_residual);
    assert!(fine.conjugation_residual < coarse.conjugation_residual);
}

#[test]
fn reciprocal_involution_needs_closed_grid() {
    assert!(matches!(reciprocal_involution(&exp_rule(10)), Err(Error::InvalidParameter { .. })));
}

#[test]
fn bound_suite_on_kernel_corpus() {
    let band = default_band_rule(200).unwrap();
    let e1 = exp_rule(80);
    let corpus: Vec<(HankelKernel, &QuadratureRule, f64)> = vec![
        (HankelKernel::Scalar(ScalarKernel::Carleman), &band, 1.0),
        (HankelKernel::Scalar(ScalarKernel::LaplaceHigh), &band, 1.0),
        (HankelKernel::Scalar(ScalarKernel::LaplaceLow), &band, 1.0),
        (HankelKernel::Scalar(ScalarKernel::Exponential { rate: 1.0 }), &e1, 1.0 / E),
        (HankelKernel::Scalar(ScalarKernel::Exponential { rate: 2.0 }), &e1, 0.5 / E),
        (HankelKernel::Diagonal(vec![ScalarKernel::LaplaceHigh, ScalarKernel::Exponential { rate: 1.0 }]), &e1, 1.0),
        (
            HankelKernel::Weighted {
                profile: ScalarKernel::LaplaceLow,
                weight: CMatrix::from_row_slice(2, 2, &[c(0.6), c(0.2), c(0.2), c(0.3)]),
            },
            &band,
            0.7,
        ),
    ];
    for (kernel, rule, declared) in corpus {
        let disc = build_hankel(&kernel, rule, DEFAULT_MAX_KERNEL_DIM).unwrap();
        let report = kernel_bound_suite(&disc, declared).unwrap();
        assert!(report.holds(), "{kernel:?}: {} > {}", report.operator_norm, report.bound);
        assert!(report.singular_values.windows(2).all(|w| w[0] >= w[1]));
    }
}

#[test]
fn exponential_kernel_norm_is_below_pi_over_e() {
    let disc = build_hankel(&HankelKernel::Scalar(ScalarKernel::Exponential { rate: 1.0 }), &exp_rule(80), 1).unwrap();
    let report = kernel_bound_suite(&disc, 1.0 / E).unwrap();
    assert!(report.operator_norm <= PI / E + 1e-6);
    // t e^{-t} -> 0 at both ends of the grid
    assert!(report.edge_products.0 < 0.05 && report.edge_products.1 < 1e-6, "{:?}", report.edge_products);
}

#[test]
fn carleman_product_does_not_decay() {
    let disc = build_hankel(&HankelKernel::Scalar(ScalarKernel::Carleman), &default_band_rule(50).unwrap(), 1).unwrap();
    let report = kernel_bound_suite(&disc, 1.0).unwrap();
    assert!((report.edge_products.0 - 1.0).abs() < 1e-12 && (report.edge_products.1 - 1.0).abs() < 1e-12);
}

#[test]
fn trace_bound_for_lambda_exp() {
    let data = TraceBoundData::new(1, default_trace_lambda_rule(200).unwrap(), |l| {
        CMatrix::from_element(1, 1, c(l * (-l).exp()))
    });
    let bound = trace_bound_check(&data, &exp_rule(120)).unwrap();
    assert!((bound.c2 - 1.0).abs() < 1e-9, "{}", bound.c2);
    assert!(bound.nuclear_norm <= 0.525, "{}", bound.nuclear_norm);
    assert!(bound.holds(0.05));
}

#[test]
fn trace_bound_rejects_divergent_family() {
    let data = TraceBoundData::new(1, default_trace_lambda_rule(200).unwrap(), |l| {
        CMatrix::from_element(1, 1, c((-l).exp()))
    });
    assert!(matches!(trace_bound_check(&data, &exp_rule(60)), Err(Error::DivergentTraceBound { .. })));
    let growing = TraceBoundData::new(1, default_trace_lambda_rule(200).unwrap(), |l| CMatrix::from_element(1, 1, c(l)));
    assert!(matches!(trace_bound_check(&growing, &exp_rule(60)), Err(Error::DivergentTraceBound { .. })));
}

#[test]
fn trace_bound_for_matrix_family() {
    let data = TraceBoundData::new(2, default_trace_lambda_rule(200).unwrap(), |l| {
        let s = l * (-l).exp();
        CMatrix::from_row_slice(2, 2, &[c(s), c(0.5 * s), c(0.5 * s), c(2.0 * s)])
    });
    let bound = trace_bound_check(&data, &exp_rule(60)).unwrap();
    assert!((bound.c2 - 3.0).abs() < 1e-8, "{}", bound.c2);
    assert!(bound.holds(0.05));
}

#[test]
fn matrix_kernel_must_match_declared_dimension() {
    let kernel = HankelKernel::Matrix { dim: 2, eval: Arc::new(|_| CMatrix::zeros(3, 3)) };
    assert!(matches!(build_hankel(&kernel, &exp_rule(4), 4), Err(Error::KernelSingular { .. })));
}
