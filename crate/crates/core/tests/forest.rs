use std::collections::BTreeSet;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rpforest::io::index::encode_index;
use rpforest::{Dataset32, Dataset64, Forest32, Forest64, ForestParams, PointId};

fn uniform(n: usize, dim: usize, seed: u64) -> Dataset32 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Dataset32::from_flat(dim, (0..n * dim).map(|_| rng.gen::<f32>()).collect()).unwrap()
}

/// Data with many exact duplicates and repeated coordinates.
fn lumpy(n: usize, dim: usize, seed: u64) -> Dataset32 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Dataset32::from_flat(dim, (0..n * dim).map(|_| rng.gen_range(0..3) as f32).collect()).unwrap()
}

fn configs() -> Vec<ForestParams> {
    vec![
        ForestParams::new(5),
        ForestParams::new(5).with_split_ratio(0.5).with_capacity(2),
        ForestParams::new(5)
            .with_split_ratio(0.05)
            .with_capacity(30)
            .with_proj_dims(3),
        ForestParams::new(3).with_capacity(7).with_proj_dims(8).with_seed(99),
    ]
}

#[test]
fn every_point_lands_in_exactly_one_leaf_within_capacity() {
    for (i, params) in configs().into_iter().enumerate() {
        for data in [uniform(1000, 8, i as u64), lumpy(600, 8, i as u64)] {
            let n = data.len();
            let forest = Forest32::build(data, params).unwrap();
            forest.check_invariants().unwrap();
            for tree in forest.trees() {
                let leaves = tree.leaves();
                let mut seen = vec![0u32; n];
                for leaf in &leaves {
                    assert!(!leaf.is_empty() && leaf.len() <= params.capacity);
                    for &id in *leaf {
                        seen[id as usize] += 1;
                    }
                }
                assert!(seen.iter().all(|&c| c == 1));
                let stats = tree.stats();
                assert_eq!(stats.points, n);
                assert_eq!(stats.leaves, leaves.len());
                assert_eq!(stats.internal + 1, stats.leaves);
            }
        }
    }
}

#[test]
fn points_route_to_their_own_leaf() {
    let data = uniform(2000, 6, 3);
    let forest = Forest32::build(data.clone(), ForestParams::new(4).with_proj_dims(2)).unwrap();
    for tree in forest.trees() {
        for (id, x) in data.points().enumerate() {
            assert!(tree.leaf_of_point(x, id as PointId).contains(&(id as PointId)));
            // Continuous data has no ties, so a plain query descends the same way.
            assert!(tree.retrieve_one(x).contains(&(id as PointId)));
        }
    }
}

#[test]
fn duplicate_points_are_still_routed_home() {
    let data = lumpy(500, 3, 8);
    let forest = Forest32::build(data.clone(), ForestParams::new(6).with_capacity(4)).unwrap();
    for tree in forest.trees() {
        for (id, x) in data.points().enumerate() {
            assert!(tree.leaf_of_point(x, id as PointId).contains(&(id as PointId)));
        }
    }
}

#[test]
fn same_seed_same_forest_regardless_of_scheduling() {
    let data = uniform(3000, 10, 4);
    let params = ForestParams::new(6).with_proj_dims(3).with_seed(17);
    let a = encode_index(&Forest32::build(data.clone(), params).unwrap());
    let b = encode_index(&Forest32::build(data.clone(), params).unwrap());
    let c = encode_index(&Forest32::build_serial(data.clone(), params).unwrap());
    assert_eq!(a, b);
    assert_eq!(a, c);
    let d = encode_index(&Forest32::build(data, params.with_seed(18)).unwrap());
    assert_ne!(a, d);
}

#[test]
fn trees_are_independent_of_forest_size() {
    let data = uniform(1500, 5, 6);
    let small = Forest32::build(data.clone(), ForestParams::new(3).with_seed(2)).unwrap();
    let large = Forest32::build(data.clone(), ForestParams::new(9).with_seed(2)).unwrap();
    let q = [0.5f32; 5];
    for (a, b) in small.trees().iter().zip(large.trees()) {
        assert_eq!(a.leaves(), b.leaves());
        assert_eq!(a.retrieve_one(&q), b.retrieve_one(&q));
    }
}

#[test]
fn candidate_sets_grow_with_tree_count() {
    let data = uniform(4000, 12, 7);
    let queries = uniform(50, 12, 70);
    let forest = Forest32::build(data, ForestParams::new(30)).unwrap();
    for q in queries.points() {
        let mut prev: BTreeSet<PointId> = BTreeSet::new();
        for l in 1..=30 {
            let cur: BTreeSet<PointId> = forest.prefix(l).retrieve(q).unwrap().into_iter().collect();
            assert!(prev.is_subset(&cur));
            assert!(cur.len() <= l * 12);
            prev = cur;
        }
        let all = forest.retrieve(q).unwrap();
        assert!(all.windows(2).all(|w| w[0] < w[1]), "ids must be sorted and unique");
    }
}

#[test]
fn one_tree_with_large_capacity_is_one_leaf() {
    let data = uniform(300, 4, 1);
    let forest = Forest32::build(data, ForestParams::new(1).with_capacity(300)).unwrap();
    let tree = &forest.trees()[0];
    assert_eq!(tree.stats().leaves, 1);
    assert_eq!(tree.split_count(), 0);
    assert_eq!(forest.retrieve(&[0.0; 4]).unwrap(), (0..300).collect::<Vec<PointId>>());
}

#[test]
fn incremental_inserts_keep_invariants() {
    let all = uniform(1200, 6, 12);
    let base = all.subset(&(0..200).collect::<Vec<_>>()).unwrap();
    let mut forest = Forest32::build(base, ForestParams::new(5).with_capacity(5)).unwrap();
    for id in 200..1200u32 {
        let got = forest.insert(all.point(id)).unwrap();
        assert_eq!(got, id);
    }
    forest.check_invariants().unwrap();
    assert_eq!(forest.dataset().len(), 1200);
    for (id, x) in all.points().enumerate() {
        assert!(forest.retrieve(x).unwrap().contains(&(id as PointId)));
    }
    let hit = rpforest::knn(&forest, all.point(1100), 1, rpforest::Metric::Euclidean).unwrap();
    assert_eq!(hit.neighbors[0].id, 1100);
    assert_eq!(hit.neighbors[0].distance, 0.0);
}

#[test]
fn inserts_replay_deterministically() {
    let all = uniform(600, 4, 13);
    let base = all.subset(&(0..100).collect::<Vec<_>>()).unwrap();
    let params = ForestParams::new(3).with_seed(5);
    let grow = || {
        let mut f = Forest32::build(base.clone(), params).unwrap();
        for id in 100..600u32 {
            f.insert(all.point(id)).unwrap();
        }
        encode_index(&f)
    };
    assert_eq!(grow(), grow());
}

#[test]
fn insert_rejects_wrong_dimension() {
    let mut forest = Forest32::build(uniform(50, 4, 1), ForestParams::new(2)).unwrap();
    assert!(forest.insert(&[1.0, 2.0]).is_err());
    assert!(forest.insert(&[1.0, f32::NAN, 0.0, 0.0]).is_err());
    forest.check_invariants().unwrap();
}

#[test]
fn depth_grows_logarithmically() {
    let params = ForestParams::new(1);
    let depth = |n: usize| {
        Forest32::build(uniform(n, 8, n as u64), params)
            .unwrap()
            .mean_leaf_depth()
    };
    let (d1, d16) = (depth(2_000), depth(32_000));
    // 16x the points adds log2(16) = 4 levels to a balanced tree.
    let added = d16 - d1;
    assert!((3.0..6.0).contains(&added), "depth {d1:.2} -> {d16:.2}");
}

#[test]
fn build_time_is_roughly_n_log_n() {
    let params = ForestParams::new(2);
    let time = |n: usize| {
        let data = uniform(n, 16, 1);
        let start = Instant::now();
        Forest32::build_serial(data, params).unwrap();
        start.elapsed().as_secs_f64()
    };
    time(10_000);
    let small = time(20_000);
    let large = time(80_000);
    let ratio = large / small;
    // n log n predicts about 4.6; quadratic behavior would give 16.
    assert!(ratio < 10.0, "4x points took {ratio:.1}x longer");
}

#[test]
fn f64_storage_works_the_same_way() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let data = Dataset64::from_flat(3, (0..900).map(|_| rng.gen::<f64>()).collect()).unwrap();
    let forest = Forest64::build(data.clone(), ForestParams::new(4)).unwrap();
    forest.check_invariants().unwrap();
    for (id, x) in data.points().enumerate() {
        assert!(forest.retrieve(x).unwrap().contains(&(id as PointId)));
    }
}

#[test]
fn parameter_validation() {
    let data = uniform(20, 3, 0);
    for bad in [
        ForestParams::new(0),
        ForestParams::new(1).with_split_ratio(0.0),
        ForestParams::new(1).with_split_ratio(0.6),
        ForestParams::new(1).with_split_ratio(f64::NAN),
        ForestParams::new(1).with_capacity(1),
        ForestParams::new(1).with_proj_dims(0),
        ForestParams::new(1).with_proj_dims(4),
    ] {
        assert!(Forest32::build(data.clone(), bad).is_err(), "{bad:?} accepted");
    }
    assert!(Forest32::build(data, ForestParams::new(1).with_proj_dims(3).with_split_ratio(0.5)).is_ok());
}
