use proptest::prelude::*;

use clustersift::blinding::{self as blinding, blind_conditional, blind_marginal, Location};
use clustersift::data::{DataMatrix, IndexSubset};
use clustersift::kmeans::{kmeans_fit, lloyd_restart, KMeansConfig};
use clustersift::objective::{efficiency, Evaluator, Threshold};
use clustersift::par;
use clustersift::search::{search_with, SearchConfig, SearchMode};

/// Mostly continuous draws, with small integers and signed zeros for ties.
fn value() -> impl Strategy<Value = f64> {
    prop_oneof![
        6 => -5.0f64..5.0,
        2 => (-3i32..=3).prop_map(f64::from),
        1 => Just(0.0),
        1 => Just(-0.0),
    ]
}

fn matrix(max_n: usize, max_p: usize) -> impl Strategy<Value = DataMatrix> {
    (3..=max_n, 1..=max_p).prop_flat_map(|(n, p)| {
        proptest::collection::vec(value(), n * p).prop_map(move |v| DataMatrix::from_row_major(n, p, v).unwrap())
    })
}

fn with_subset(max_n: usize, max_p: usize) -> impl Strategy<Value = (DataMatrix, IndexSubset)> {
    matrix(max_n, max_p).prop_flat_map(|d| {
        let p = d.p();
        proptest::collection::vec(any::<bool>(), p).prop_map(move |mask| {
            let s = IndexSubset::new(p, (0..p).filter(|&i| mask[i])).unwrap();
            (d.clone(), s)
        })
    })
}

fn location() -> impl Strategy<Value = Location> {
    prop_oneof![Just(Location::Mean), Just(Location::Median)]
}

fn strategy_for(n: usize) -> impl Strategy<Value = blinding::Strategy> {
    prop_oneof![
        location().prop_map(blinding::Strategy::marginal),
        (location(), 1..=n).prop_map(|(l, r)| blinding::Strategy::conditional(l, r)),
    ]
}

/// Data, fitted partition and a strategy valid for the sample size.
fn fitted(max_n: usize, max_p: usize) -> impl Strategy<Value = (DataMatrix, usize, u64, blinding::Strategy)> {
    matrix(max_n, max_p).prop_flat_map(|d| {
        let n = d.n();
        (Just(d), 1..=3usize.min(n), any::<u64>(), strategy_for(n))
    })
}

fn unique_nearest(model: &clustersift::kmeans::PartitionModel, data: &DataMatrix) -> bool {
    data.rows().all(|x| {
        let mut d: Vec<f64> = model
            .centers()
            .iter()
            .map(|c| c.iter().zip(x).map(|(a, b)| (a - b) * (a - b)).sum())
            .collect();
        d.sort_by(f64::total_cmp);
        d.len() < 2 || d[0] < d[1]
    })
}

fn bits(m: &DataMatrix) -> Vec<u64> {
    m.as_slice().iter().map(|v| v.to_bits()).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn full_subset_keeps_every_allocation((data, k, seed, strategy) in fitted(14, 4)) {
        let Ok((model, labels)) = kmeans_fit(&data, &KMeansConfig::new(k, seed).restarts(2)) else { return Ok(()) };
        let ev = Evaluator::new(&data, &model, &labels, strategy).unwrap();
        let eff = ev.evaluate(&IndexSubset::full(data.p()));
        prop_assert_eq!(eff.matches, data.n());
        prop_assert_eq!(eff.value(), 1.0);
    }

    #[test]
    fn efficiency_is_a_count_over_n((data, k, seed, strategy) in fitted(14, 4), mask in any::<u8>()) {
        let Ok((model, labels)) = kmeans_fit(&data, &KMeansConfig::new(k, seed).restarts(2)) else { return Ok(()) };
        let p = data.p();
        let subset = IndexSubset::new(p, (0..p).filter(|i| mask >> i & 1 == 1)).unwrap();
        let eff = Evaluator::new(&data, &model, &labels, strategy).unwrap().evaluate(&subset);
        prop_assert!(eff.matches <= data.n());
        prop_assert_eq!(eff.n, data.n());
        let scaled = eff.value() * data.n() as f64;
        prop_assert!((scaled - scaled.round()).abs() < 1e-9);
        prop_assert_eq!(scaled.round() as usize, eff.matches);
    }

    #[test]
    fn conditional_with_all_rows_equals_marginal((data, subset) in with_subset(14, 4), loc in location()) {
        let n = data.n();
        let marginal = blind_marginal(&data, &subset, loc).unwrap();
        let (conditional, _) = blind_conditional(&data, &subset, n, loc, n).unwrap();
        prop_assert_eq!(bits(&marginal.values), bits(&conditional.values));
    }

    #[test]
    fn single_neighbour_is_identity_for_distinct_rows((data, subset) in with_subset(14, 4), loc in location()) {
        prop_assume!(!subset.is_empty());
        let keys: Vec<Vec<u64>> = (0..data.n())
            .map(|j| subset.indices().iter().map(|&i| data.get(j, i).to_bits()).collect())
            .collect();
        let mut sorted = keys.clone();
        sorted.sort();
        sorted.dedup();
        prop_assume!(sorted.len() == keys.len());
        let (blinded, _) = blind_conditional(&data, &subset, 1, loc, data.n()).unwrap();
        prop_assert_eq!(bits(&blinded.values), bits(&data));
    }

    #[test]
    fn marginal_blinding_is_idempotent((data, subset) in with_subset(14, 5), loc in location()) {
        let once = blind_marginal(&data, &subset, loc).unwrap();
        let twice = blind_marginal(&once.values, &subset, loc).unwrap();
        prop_assert_eq!(bits(&once.values), bits(&twice.values));
    }

    #[test]
    fn retained_columns_are_untouched((data, subset) in with_subset(14, 5), loc in location(), r in 1usize..6) {
        let r = r.min(data.n());
        let marginal = blind_marginal(&data, &subset, loc).unwrap();
        let (conditional, _) = blind_conditional(&data, &subset, r, loc, data.n()).unwrap();
        for &i in subset.indices() {
            for j in 0..data.n() {
                prop_assert_eq!(marginal.values.get(j, i).to_bits(), data.get(j, i).to_bits());
                prop_assert_eq!(conditional.values.get(j, i).to_bits(), data.get(j, i).to_bits());
            }
        }
        for i in subset.complement() {
            let col = marginal.values.column(i);
            prop_assert!(col.iter().all(|v| v.to_bits() == col[0].to_bits()));
        }
    }

    #[test]
    fn lloyd_inertia_never_increases(data in matrix(20, 3), k in 1usize..4, seed in any::<u64>(), restart in 0usize..4) {
        let k = k.min(data.n());
        let Ok(run) = lloyd_restart(&data, &KMeansConfig::new(k, seed), restart) else { return Ok(()) };
        for w in run.inertia_history.windows(2) {
            prop_assert!(w[1] <= w[0] * (1.0 + 1e-12) + 1e-12, "{:?}", run.inertia_history);
        }
    }

    #[test]
    fn kmeans_ignores_row_order(data in matrix(16, 3), k in 1usize..4, seed in any::<u64>(), shuffle in any::<u64>()) {
        let k = k.min(data.n());
        let n = data.n();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut state = shuffle;
        for i in (1..n).rev() {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            perm.swap(i, (state >> 33) as usize % (i + 1));
        }
        let rows: Vec<f64> = perm.iter().flat_map(|&j| data.row(j).to_vec()).collect();
        let shuffled = DataMatrix::from_row_major(n, data.p(), rows).unwrap();
        let cfg = KMeansConfig::new(k, seed).restarts(3);
        let Ok((m1, l1)) = kmeans_fit(&data, &cfg) else { return Ok(()) };
        let (m2, l2) = kmeans_fit(&shuffled, &cfg).unwrap();
        prop_assert_eq!(m1.inertia().to_bits(), m2.inertia().to_bits());
        prop_assert_eq!(l1.cluster_sizes(), l2.cluster_sizes());
        for (pos, &j) in perm.iter().enumerate() {
            prop_assert_eq!(l1.labels()[j], l2.labels()[pos]);
        }
    }

    #[test]
    fn relabeling_clusters_does_not_change_efficiency(
        (data, k, seed, strategy) in fitted(14, 4),
        mask in any::<u8>(),
        rot in 0usize..3,
    ) {
        let Ok((model, labels)) = kmeans_fit(&data, &KMeansConfig::new(k, seed).restarts(2)) else { return Ok(()) };
        let mut perm: Vec<usize> = (0..k).collect();
        perm.rotate_left(rot % k);
        perm.reverse();
        let p = data.p();
        let subset = IndexSubset::new(p, (0..p).filter(|i| mask >> i & 1 == 1)).unwrap();
        // the lowest label wins exact ties, so relabeling only commutes without them
        let (blinded, _) = blinding::blind(&data, &subset, strategy, labels.smallest_cluster()).unwrap();
        prop_assume!(unique_nearest(&model, &data) && unique_nearest(&model, &blinded.values));
        let a = Evaluator::new(&data, &model, &labels, strategy).unwrap().evaluate(&subset);
        let pm = model.permuted(&perm);
        let pl = labels.permuted(&perm).unwrap();
        let b = Evaluator::new(&data, &pm, &pl, strategy).unwrap().evaluate(&subset);
        prop_assert_eq!(a, b);
    }

    #[test]
    fn subsets_are_canonical(p in 1usize..12, raw in proptest::collection::vec(0usize..12, 0..20)) {
        let raw: Vec<usize> = raw.into_iter().filter(|&i| i < p).collect();
        let s = IndexSubset::new(p, raw.iter().copied()).unwrap();
        let mut expect = raw.clone();
        expect.sort_unstable();
        expect.dedup();
        prop_assert_eq!(s.indices(), &expect[..]);
        let rev = IndexSubset::new(p, raw.iter().rev().copied()).unwrap();
        prop_assert_eq!(&s, &rev);
        prop_assert_eq!(s.one_based(), expect.iter().map(|i| i + 1).collect::<Vec<_>>());
    }

    #[test]
    fn blinded_efficiency_matches_evaluator((data, k, seed, strategy) in fitted(12, 3), mask in any::<u8>()) {
        let Ok((model, labels)) = kmeans_fit(&data, &KMeansConfig::new(k, seed).restarts(2)) else { return Ok(()) };
        let p = data.p();
        let subset = IndexSubset::new(p, (0..p).filter(|i| mask >> i & 1 == 1)).unwrap();
        let (blinded, _) = blinding::blind(&data, &subset, strategy, labels.smallest_cluster()).unwrap();
        let direct = efficiency(&model, &labels, &blinded).unwrap();
        let cached = Evaluator::new(&data, &model, &labels, strategy).unwrap().evaluate(&subset);
        prop_assert_eq!(direct, cached);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn search_solutions_are_valid_and_irreducible(
        (data, k, seed, strategy) in fitted(16, 5),
        t in prop_oneof![Just(0.8), Just(0.9), Just(1.0)],
        fba in any::<bool>(),
    ) {
        let Ok((model, labels)) = kmeans_fit(&data, &KMeansConfig::new(k, seed).restarts(2)) else { return Ok(()) };
        let ev = Evaluator::new(&data, &model, &labels, strategy).unwrap();
        let threshold = Threshold::new(t).unwrap();
        let cfg = if fba {
            SearchConfig::forward_backward(threshold, strategy, 8, seed)
        } else {
            SearchConfig::exhaustive(threshold, strategy)
        };
        let rep = search_with(&ev, &cfg).unwrap();
        let p = data.p();
        prop_assert!(!rep.solutions.is_empty());
        let mut sorted = rep.solutions.clone();
        sorted.sort_by(|a, b| a.subset.cmp(&b.subset));
        sorted.dedup_by(|a, b| a.subset == b.subset);
        prop_assert_eq!(sorted.len(), rep.solutions.len());
        for sol in &rep.solutions {
            prop_assert_eq!(sol.subset.len(), rep.minimal_cardinality);
            let fresh = clustersift::objective::evaluate_subset(&data, &model, &labels, &sol.subset, strategy).unwrap();
            prop_assert_eq!(fresh, sol.efficiency);
            prop_assert!(threshold.is_met(fresh));
            if sol.subset.len() >= 2 {
                for &v in sol.subset.indices() {
                    prop_assert!(!threshold.is_met(ev.evaluate(&sol.subset.without(v))));
                }
            }
        }
        // nothing smaller qualifies when the search is exhaustive
        for mask in 1u32..(1 << p) {
            let s = IndexSubset::new(p, (0..p).filter(|i| mask >> i & 1 == 1)).unwrap();
            if !fba && s.len() < rep.minimal_cardinality {
                prop_assert!(!threshold.is_met(ev.evaluate(&s)));
            }
        }
    }

    #[test]
    fn search_does_not_depend_on_threads((data, k, seed, strategy) in fitted(16, 5), fba in any::<bool>()) {
        let Ok((model, labels)) = kmeans_fit(&data, &KMeansConfig::new(k, seed).restarts(3)) else { return Ok(()) };
        let threshold = Threshold::new(0.9).unwrap();
        let cfg = SearchConfig {
            threshold,
            strategy,
            mode: if fba { SearchMode::ForwardBackward { permutations: 6 } } else { SearchMode::Exhaustive },
            seed,
            max_subset_size: None,
        };
        let go = || {
            let (m, l) = kmeans_fit(&data, &KMeansConfig::new(k, seed).restarts(3)).unwrap();
            let rep = search_with(&Evaluator::new(&data, &m, &l, strategy).unwrap(), &cfg).unwrap();
            (m, rep)
        };
        let sequential = par::sequential(go);
        let one = par::with_threads(Some(1), go);
        let four = par::with_threads(Some(4), go);
        prop_assert_eq!(&sequential, &one);
        prop_assert_eq!(&sequential, &four);
        prop_assert_eq!(&sequential.0, &model);
        let _ = labels;
    }
}
