use proptest::prelude::*;

use projdiff_core::models::{random_pair, AnalyzedPair, RandomPairOptions};
use projdiff_core::projections::*;

fn pair(seed: u64, dim: usize, rank: usize, probe: f64) -> AnalyzedPair {
    let opts = RandomPairOptions { dim, rank: rank.min(dim), probes: vec![probe], ..Default::default() };
    random_pair(seed, &opts).unwrap().analyze().unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn spectrum_lies_in_unit_interval_and_pairs(
        seed in 0u64..10_000, dim in 2usize..20, rank in 1usize..6, probe in -0.8f64..0.8,
    ) {
        let p = pair(seed, dim, rank, probe);
        let d = projection_difference(&p, probe).unwrap();
        prop_assert_eq!(d.spectrum.len(), dim);
        prop_assert!(d.spectrum.iter().all(|v| v.abs() <= 1.0 + 1e-12), "{:?}", d.spectrum);
        prop_assert!(d.pairing_defect <= 1e-8, "{}", d.pairing_defect);
    }

    #[test]
    fn trace_is_the_eigenvalue_count_difference(
        seed in 0u64..10_000, dim in 2usize..20, rank in 1usize..6, probe in -0.8f64..0.8,
    ) {
        let p = pair(seed, dim, rank, probe);
        let d = projection_difference(&p, probe).unwrap();
        let count = spectral_shift_count(&p, probe) as f64;
        prop_assert!((d.trace + count).abs() <= 1e-9, "trace {} count {}", d.trace, count);
        // the paired middle cancels, so only the +-1 clusters carry the trace
        prop_assert_eq!(d.dim_plus as f64 - d.dim_minus as f64, -count);
    }

    #[test]
    fn square_is_block_diagonal(seed in 0u64..10_000, dim in 2usize..20, rank in 1usize..6) {
        let p = pair(seed, dim, rank, 0.0);
        let pp = projection_pair(&p, 0.0).unwrap();
        prop_assert!(dsq_block_check(&pp) <= 1e-10 * dim as f64);
    }

    #[test]
    fn corners_match_the_squared_middle(seed in 0u64..10_000, dim in 4usize..16, rank in 1usize..5) {
        let p = pair(seed, dim, rank, 0.0);
        let d = projection_difference(&p, 0.0).unwrap();
        let corner = corner_spectrum(&p, 0.0, Side::Plus).unwrap();
        let mut squares: Vec<f64> = d.spectrum.iter().filter(|v| **v > 1e-7).map(|v| v * v).collect();
        squares.sort_by(|a, b| b.total_cmp(a));
        let nonzero = corner.above(1e-12);
        prop_assert!(nonzero.len() <= squares.len());
        for (c, s) in nonzero.iter().zip(&squares) {
            prop_assert!((c - s).abs() <= 1e-9, "{:?} vs {:?}", nonzero, squares);
        }
    }
}
