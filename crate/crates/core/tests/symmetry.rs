//! Relabeling spins, reordering samples and flipping every spin act on the
//! estimate exactly as the model's symmetries say they should.

use bmeb::{estimate, Dataset, EstimateResult, SufficientStats};
use proptest::prelude::*;

fn dataset() -> impl Strategy<Value = (Dataset, Vec<usize>, Vec<usize>)> {
    (3usize..24, 2usize..30, -0.8f64..0.8)
        .prop_flat_map(|(n, big_n, bias)| {
            let p = (1.0 + bias) / 2.0;
            (
                prop::collection::vec(prop::bool::weighted(p), n * big_n),
                Just(n),
                Just((0..n).collect::<Vec<_>>()).prop_shuffle(),
                Just((0..big_n).collect::<Vec<_>>()).prop_shuffle(),
            )
        })
        .prop_map(|(bits, n, perm, order)| {
            let spins = bits.into_iter().map(|b| if b { 1 } else { -1 }).collect();
            (Dataset::new(n, spins).unwrap(), perm, order)
        })
}

fn run(data: &Dataset) -> Result<EstimateResult, String> {
    estimate(&SufficientStats::from_dataset(data)).map_err(|e| e.to_string())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn relabeling_and_reordering_change_nothing((data, perm, order) in dataset()) {
        let base = run(&data);
        prop_assert_eq!(&base, &run(&data.permute_spins(&perm).unwrap()));
        prop_assert_eq!(&base, &run(&data.reorder_samples(&order).unwrap()));
    }

    #[test]
    fn flipping_negates_the_field((data, _perm, _order) in dataset()) {
        let (base, flip) = (run(&data), run(&data.flipped()));
        match (base, flip) {
            (Ok(a), Ok(b)) => {
                prop_assert_eq!(a.branch, b.branch);
                prop_assert_eq!(a.gamma_hat.to_bits(), b.gamma_hat.to_bits());
                prop_assert_eq!(a.j_hat.to_bits(), b.j_hat.to_bits());
                // Compared as values: a zero field flips to +0.0, not -0.0.
                prop_assert_eq!(a.h_hat.map(|h| -h), b.h_hat);
                prop_assert_eq!(a.diagnostics.magnetization, -b.diagnostics.magnetization);
            }
            (Err(a), Err(b)) => prop_assert_eq!(a, b),
            (a, b) => prop_assert!(false, "{:?} vs {:?}", a, b),
        }
    }
}
