mod common;

use common::*;
use mtasa_core::alignment::{rotate_instance_into, rotation_coefficient_xcorr};
use mtasa_core::dissimilarity::{dtw_distance, euclidean_distance, normalize_and_weight};
use mtasa_core::engine::run_pipeline;
use mtasa_core::io::{format_real, parse_results, write_results_to};
use mtasa_core::model::{Filtering, InstanceView, SimilarityEntry, SimilarityIndexMatrix};
use mtasa_core::simindex::apply_filtering;
use mtasa_core::spectral::{dft_samples, idft, RealSignal};
use proptest::prelude::*;

fn signal(max_len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-100.0f64..100.0, 1..=max_len)
}

fn entry() -> impl Strategy<Value = SimilarityEntry> {
    prop_oneof![
        6 => (0.0f64..=1.0).prop_map(SimilarityEntry::Value),
        1 => Just(SimilarityEntry::Filtered),
        1 => Just(SimilarityEntry::Missing),
    ]
}

proptest! {
    #[test]
    fn parseval(x in signal(48)) {
        let n = x.len() as f64;
        let energy: f64 = x.iter().map(|v| v * v).sum();
        let spectral: f64 = dft_samples(&x).coefficients().iter().map(|c| c.norm_sqr()).sum::<f64>() / n;
        prop_assert!((energy - spectral).abs() <= 1e-9 * energy.max(1.0));
    }

    #[test]
    fn dft_is_linear(pair in (1usize..40).prop_flat_map(|n| (
        prop::collection::vec(-10.0f64..10.0, n),
        prop::collection::vec(-10.0f64..10.0, n),
        -3.0f64..3.0,
    ))) {
        let (x, y, a) = pair;
        let combo: Vec<f64> = x.iter().zip(&y).map(|(p, q)| a * p + q).collect();
        let (fx, fy, fc) = (dft_samples(&x), dft_samples(&y), dft_samples(&combo));
        for m in 0..x.len() {
            prop_assert!((fc[m] - (fx[m] * a + fy[m])).norm() < 1e-9);
        }
    }

    #[test]
    fn inverse_undoes_forward(x in signal(64)) {
        let back = idft(&dft_samples(&x));
        for (a, b) in back.samples().iter().zip(&x) {
            prop_assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn rotation_round_trips(x in signal(32), c in 0usize..64) {
        let n = x.len();
        let c = c % n;
        let mut once = vec![0.0; n];
        rotate_instance_into(InstanceView::new(&x, n, 1), c, &mut once);
        let mut back = vec![0.0; n];
        rotate_instance_into(InstanceView::new(&once, n, 1), (n - c) % n, &mut back);
        prop_assert_eq!(back, x);
    }

    #[test]
    fn xcorr_recovers_any_shift(x in prop::collection::vec(-1.0f64..1.0, 3..40), d in 0usize..40) {
        let n = x.len();
        let d = d % n;
        let shifted = shift_right(&x, n, 1, d);
        let c = rotation_coefficient_xcorr(&dft_samples(&x), &dft_samples(&shifted)).unwrap();
        let z = exhaustive_z(&x, &shifted);
        let best = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        prop_assert!(z[c.value] >= best - 1e-9 * best.abs().max(1.0));
    }

    #[test]
    fn dtw_metric_like_properties(a in signal(12), b in signal(12)) {
        let (sa, sb) = (RealSignal::new(a.clone()), RealSignal::new(b.clone()));
        let ab = dtw_distance(&sa, &sb);
        prop_assert_eq!(ab, dtw_distance(&sb, &sa));
        prop_assert_eq!(dtw_distance(&sa, &sa), 0.0);
        prop_assert!(ab >= (a[0] - b[0]).abs());
        if a.len() == b.len() {
            let lockstep: f64 = a.iter().zip(&b).map(|(x, y)| (x - y).abs()).sum();
            prop_assert!(ab <= lockstep + 1e-9);
        }
    }

    #[test]
    fn euclidean_triangle(v in (1usize..20).prop_flat_map(|n| prop::collection::vec(prop::collection::vec(-50.0f64..50.0, n), 3))) {
        let s: Vec<RealSignal> = v.into_iter().map(RealSignal::new).collect();
        let d = |i: usize, j: usize| euclidean_distance(&s[i], &s[j]).unwrap();
        prop_assert!(d(0, 2) <= d(0, 1) + d(1, 2) + 1e-9);
        prop_assert_eq!(d(0, 1), d(1, 0));
    }

    #[test]
    fn normalization_spans_zero_to_weight(
        raw in prop::collection::vec(prop::collection::vec(0.0f64..100.0, 3), 1..30),
        mask in prop::collection::vec(any::<bool>(), 30),
    ) {
        let k = raw.len();
        let valid: Vec<bool> = mask[..k].to_vec();
        let weights = [0.5, 0.3, 0.2];
        let d = normalize_and_weight(&raw.concat(), &valid, &weights);
        for var in 0..3 {
            let column: Vec<f64> = (0..k).filter_map(|i| d.get(i, var)).collect();
            prop_assert_eq!(column.len(), valid.iter().filter(|v| **v).count());
            prop_assert!(column.iter().all(|&x| (0.0..=weights[var]).contains(&x)));
            let distinct = (0..k).filter(|&i| valid[i]).map(|i| raw[i][var].to_bits()).collect::<std::collections::HashSet<_>>();
            if distinct.len() > 1 {
                prop_assert!(column.contains(&0.0));
                prop_assert!(column.iter().any(|&x| (x - weights[var]).abs() < 1e-15));
            } else {
                prop_assert!(column.iter().all(|&x| x == 0.0));
            }
        }
    }

    #[test]
    fn absolute_filter_keeps_exactly_values_at_or_above(sims in prop::collection::vec(entry(), 0..40), r in 0.0f64..=1.0) {
        let out = apply_filtering(&sims, Filtering::Absolute(r)).similarity;
        for (before, after) in sims.iter().zip(&out) {
            let expected = match *before {
                SimilarityEntry::Value(v) if v < r => SimilarityEntry::Filtered,
                other => other,
            };
            prop_assert_eq!(*after, expected);
        }
    }

    #[test]
    fn results_file_round_trips(sims in prop::collection::vec(entry(), 1..30), seed in any::<u64>()) {
        let k = sims.len();
        let rotation_array: Vec<Option<usize>> = sims
            .iter()
            .enumerate()
            .map(|(i, s)| (*s != SimilarityEntry::Missing).then_some((i + seed as usize) % 17))
            .collect();
        let raw: Vec<Option<f64>> = sims.iter().map(|s| s.value().map(|v| 1.0 - v)).collect();
        let matrix = SimilarityIndexMatrix {
            rotation_array,
            similarity_array: sims,
            instance_ids: names("id", k),
        };
        let mut bytes = Vec::new();
        write_results_to(&mut bytes, &matrix, &raw).unwrap();
        let (parsed, parsed_raw) = parse_results(&bytes[..], "mem").unwrap();
        prop_assert_eq!(&parsed.instance_ids, &matrix.instance_ids);
        prop_assert_eq!(&parsed.rotation_array, &matrix.rotation_array);
        for (a, b) in parsed.similarity_array.iter().zip(&matrix.similarity_array) {
            match (a, b) {
                (SimilarityEntry::Value(x), SimilarityEntry::Value(y)) => prop_assert_eq!(format_real(*x), format_real(*y)),
                _ => prop_assert_eq!(a, b),
            }
        }
        prop_assert_eq!(parsed_raw.iter().filter(|r| r.is_some()).count(), raw.iter().filter(|r| r.is_some()).count());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn pipeline_finds_planted_shift(
        n in 4usize..20,
        d in 0usize..20,
        seed in any::<u64>(),
    ) {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let m = 2;
        let d = d % n;
        let q = uniform_values(&mut rng, n * m);
        let other = uniform_values(&mut rng, n * m);
        let data = dataset(vec![other, shift_right(&q, n, m, d)], n, m);
        let result = run_pipeline(&data, &query(q, n, m), &full_config(n, vec![0.7, 0.3], vec![0, 1])).unwrap();
        prop_assert_eq!(result.index.rotation_array[1], Some(d));
        prop_assert_eq!(result.index.similarity_array[1], SimilarityEntry::Value(1.0));
        prop_assert!(result.index.satisfies_invariants(n));
    }
}
