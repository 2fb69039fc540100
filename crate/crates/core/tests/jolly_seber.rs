use std::collections::BTreeMap;

use popsight_core::jolly_seber::{jolly_seber_estimate, occasion_statistics, scale_statistics};
use popsight_core::{EncounterMatrix, JsVariant, OccasionStatistics};
use proptest::prelude::*;

fn matrix(rows: &[Vec<bool>]) -> EncounterMatrix {
    let t = rows.first().map_or(1, Vec::len);
    EncounterMatrix::from_histories(
        (0..t as i32).map(|o| 2000 + o).collect(),
        rows.iter()
            .enumerate()
            .map(|(i, r)| (format!("a{i}"), r.clone()))
            .collect(),
    )
    .unwrap()
}

/// Counts straight from the definitions, one cell at a time.
fn brute_force(rows: &[Vec<bool>]) -> [Vec<u64>; 5] {
    let t_len = rows[0].len();
    let mut out: [Vec<u64>; 5] = std::array::from_fn(|_| vec![0; t_len]);
    for row in rows.iter().filter(|r| r.iter().any(|&c| c)) {
        for t in 0..t_len {
            let before = row[..t].iter().any(|&c| c);
            let after = row[t + 1..].iter().any(|&c| c);
            if row[t] {
                out[0][t] += 1;
                out[2][t] += 1;
                out[1][t] += before as u64;
                out[3][t] += after as u64;
            } else if before && after {
                out[4][t] += 1;
            }
        }
    }
    out
}

fn histories() -> impl Strategy<Value = Vec<Vec<bool>>> {
    (2usize..7).prop_flat_map(|t| {
        prop::collection::vec(prop::collection::vec(any::<bool>(), t), 1..40)
            .prop_filter("at least one sighting", |rows| rows.iter().flatten().any(|&c| c))
    })
}

fn same_estimates(a: &OccasionStatistics, b: &OccasionStatistics) {
    for variant in [JsVariant::Classic, JsVariant::BiasCorrected] {
        assert_eq!(jolly_seber_estimate(a, variant), jolly_seber_estimate(b, variant));
    }
}

proptest! {
    #[test]
    fn statistics_match_definitions(rows in histories()) {
        let stats = occasion_statistics(&matrix(&rows)).unwrap();
        let [captured, m, released, r, z] = brute_force(&rows);
        prop_assert_eq!(stats.captured, captured);
        prop_assert_eq!(stats.marked_recaptured, m);
        prop_assert_eq!(stats.released, released);
        prop_assert_eq!(stats.later_recaught, r);
        prop_assert_eq!(stats.skipped, z);
    }

    #[test]
    fn estimates_ignore_row_order(rows in histories(), seed in any::<u64>()) {
        let mut shuffled = rows.clone();
        let mut rng = popsight_core::rng::rng_from_seed(seed);
        popsight_core::rng::shuffle(&mut rng, &mut shuffled);
        let a = occasion_statistics(&matrix(&rows)).unwrap();
        let b = occasion_statistics(&matrix(&shuffled)).unwrap();
        same_estimates(&a, &b);
    }

    #[test]
    fn unit_coefficients_change_nothing(rows in histories()) {
        let stats = occasion_statistics(&matrix(&rows)).unwrap();
        let ones: BTreeMap<_, _> = stats.occasions.iter().map(|&o| (o, 1.0)).collect();
        prop_assert_eq!(scale_statistics(&stats, &ones).unwrap(), stats);
    }

    #[test]
    fn larger_coefficients_never_shrink_abundance(rows in histories(), k in 1.0f64..5.0) {
        let stats = occasion_statistics(&matrix(&rows)).unwrap();
        let ks: BTreeMap<_, _> = stats.occasions.iter().map(|&o| (o, k)).collect();
        let scaled = scale_statistics(&stats, &ks).unwrap();
        let raw = jolly_seber_estimate(&stats, JsVariant::Classic);
        let big = jolly_seber_estimate(&scaled, JsVariant::Classic);
        for (a, b) in raw.occasions.iter().zip(&big.occasions) {
            if let (Some(a), Some(b)) = (a.abundance, b.abundance) {
                prop_assert!(b >= a - 1e-9, "{b} < {a}");
            }
        }
    }
}

#[test]
fn variants_converge_on_large_samples() {
    // Four occasions with every history pattern present, replicated so the
    // +1 terms become negligible.
    let base: Vec<Vec<bool>> = (1u32..16)
        .map(|bits| (0..4).map(|t| bits >> t & 1 == 1).collect())
        .collect();
    let rows: Vec<Vec<bool>> = (0..100).flat_map(|_| base.iter().cloned()).collect();
    let stats = occasion_statistics(&matrix(&rows)).unwrap();
    let classic = jolly_seber_estimate(&stats, JsVariant::Classic);
    let corrected = jolly_seber_estimate(&stats, JsVariant::BiasCorrected);
    let mut compared = 0;
    for (a, b) in classic.occasions.iter().zip(&corrected.occasions) {
        if let (Some(a), Some(b)) = (a.abundance, b.abundance) {
            assert!((a - b).abs() / a < 0.02, "classic {a} vs corrected {b}");
            compared += 1;
        }
    }
    assert_eq!(compared, 2);
}
