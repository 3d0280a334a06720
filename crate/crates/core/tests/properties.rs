mod common;

use proptest::prelude::*;

use common::{brute_similarity, canonical, modularity_oracle};
use recsys_lens::data::{popularity_curve, split, Rating, RatingScale, RatingsDataset, Side};
use recsys_lens::embedding::takens_embed;
use recsys_lens::graph::{layout, louvain, modularity, LayoutConfig};
use recsys_lens::recommend::SeriesTrace;
use recsys_lens::recurrence::recurrence_plot;
use recsys_lens::similarity::{similarity_matrix, similarity_radius};

fn dataset_strategy(max_users: usize, max_items: usize) -> impl Strategy<Value = RatingsDataset> {
    (1..=max_users, 1..=max_items)
        .prop_flat_map(|(u, i)| {
            (
                Just(u),
                Just(i),
                prop::collection::vec(prop::option::weighted(0.4, 1u8..=5), u * i),
            )
        })
        .prop_filter_map("at least one rating", |(u, i, cells)| {
            let ratings: Vec<Rating> = cells
                .iter()
                .enumerate()
                .filter_map(|(k, v)| v.map(|v| Rating::new(k / i, k % i, v as f64)))
                .collect();
            if ratings.is_empty() {
                return None;
            }
            RatingsDataset::from_indexed(u, i, ratings, RatingScale::FIVE_STAR).ok()
        })
}

fn edges_strategy(max_n: usize) -> impl Strategy<Value = (usize, Vec<(usize, usize, f64)>)> {
    (1..=max_n).prop_flat_map(|n| {
        let pairs = n * (n - 1) / 2;
        (
            Just(n),
            prop::collection::vec(prop::option::weighted(0.5, 0.05f64..1.0), pairs),
        )
            .prop_map(|(n, ws)| {
                let mut edges = Vec::new();
                let mut k = 0;
                for a in 0..n {
                    for b in a + 1..n {
                        if let Some(w) = ws[k] {
                            edges.push((a, b, w));
                        }
                        k += 1;
                    }
                }
                (n, edges)
            })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn similarity_is_symmetric_bounded_and_matches_brute_force(ds in dataset_strategy(12, 12)) {
        for side in [Side::User, Side::Item] {
            let sim = similarity_matrix(&ds, side, 1).unwrap();
            let oracle = brute_similarity(&ds, side);
            let radii = similarity_radius(&sim);
            for a in 0..sim.size() {
                for b in 0..sim.size() {
                    let s = sim.get(a, b);
                    prop_assert!((0.0..=1.0).contains(&s));
                    prop_assert_eq!(s, sim.get(b, a));
                    prop_assert!((s - oracle[a][b]).abs() < 1e-12);
                }
                let recount = (0..sim.size()).filter(|&b| b != a && oracle[a][b] > 0.0).count();
                prop_assert_eq!(radii.radii[a], recount);
            }
        }
    }

    #[test]
    fn takens_length(len in 1usize..=200, dim in 1usize..=4, tau in 1usize..=5) {
        let ys: Vec<f64> = (0..len).map(|i| i as f64).collect();
        let trace = SeriesTrace::from_values("t", ys).unwrap();
        match takens_embed(&trace, dim, tau) {
            Ok(c) => {
                prop_assert_eq!(c.points.len(), len - (dim - 1) * tau);
                prop_assert!(c.points.iter().all(|p| p.len() == dim));
            }
            Err(_) => prop_assert!(len < (dim - 1) * tau + 1),
        }
    }

    #[test]
    fn recurrence_symmetric_diagonal_monotone(
        ys in prop::collection::vec(0.0f64..10.0, 1..=128),
        e1 in 0.01f64..5.0,
        grow in 0.0f64..5.0,
    ) {
        let trace = SeriesTrace::from_values("t", ys).unwrap();
        let small = recurrence_plot(&trace, e1).unwrap();
        let large = recurrence_plot(&trace, e1 + grow).unwrap();
        let n = small.n();
        for x in 0..n {
            prop_assert!(small.get(x, x));
            for y in 0..n {
                prop_assert_eq!(small.get(x, y), small.get(y, x));
                prop_assert!(!small.get(x, y) || large.get(x, y));
            }
        }
    }

    #[test]
    fn popularity_curve_non_increasing_and_complete(ds in dataset_strategy(15, 15)) {
        let curve = popularity_curve(&ds);
        prop_assert!(curve.windows(2).all(|w| w[0].1 >= w[1].1));
        prop_assert_eq!(curve.iter().map(|c| c.1).sum::<usize>(), ds.len());
        prop_assert!(curve.iter().enumerate().all(|(k, c)| c.0 == k + 1));
    }

    #[test]
    fn split_partitions_the_triplets(ds in dataset_strategy(10, 10), ratio in 0.05f64..0.95, seed in any::<u64>()) {
        let pair = split(&ds, ratio, seed).unwrap();
        prop_assert_eq!(pair.train.len() + pair.test.len(), ds.len());
        prop_assert_eq!(pair.train.len(), ((ratio * ds.len() as f64).ceil() as usize).min(ds.len()));
        let mut all: Vec<(usize, usize)> = pair.train.ratings().iter().chain(pair.test.ratings()).map(|r| (r.user, r.item)).collect();
        all.sort_unstable();
        let mut source: Vec<(usize, usize)> = ds.ratings().iter().map(|r| (r.user, r.item)).collect();
        source.sort_unstable();
        prop_assert_eq!(all, source);
    }

    #[test]
    fn louvain_modularity_consistent((n, edges) in edges_strategy(10), seed in any::<u64>()) {
        let graph = common::graph_from_edges(n, &edges);
        let result = louvain(&graph, seed);
        prop_assert_eq!(result.community.len(), n);
        prop_assert_eq!(canonical(&result.community), result.community.clone());
        prop_assert!((result.modularity - modularity_oracle(n, &edges, &result.community)).abs() < 1e-9);
        prop_assert!((result.modularity - modularity(&graph, &result.community)).abs() < 1e-9);
        prop_assert!(result.pass_modularity.windows(2).all(|w| w[1] >= w[0] - 1e-12));
        prop_assert_eq!(result.clone(), louvain(&graph, seed));
    }

    #[test]
    fn layout_is_deterministic_and_finite((n, edges) in edges_strategy(8), seed in any::<u64>()) {
        let graph = common::graph_from_edges(n, &edges);
        let cfg = LayoutConfig { seed, iterations: 30, ..LayoutConfig::default() };
        let a = layout(&graph, &cfg);
        let b = layout(&graph, &cfg);
        prop_assert_eq!(&a.positions, &b.positions);
        prop_assert!(a.positions.iter().flatten().all(|v| v.is_finite()));
    }
}
