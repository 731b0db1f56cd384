use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rpforest::{exact_knn, exact_knn_batch, knn, Dataset32, Forest32, ForestParams, Metric, Searcher};

fn uniform(n: usize, dim: usize, seed: u64) -> Dataset32 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Dataset32::from_flat(dim, (0..n * dim).map(|_| rng.gen::<f32>()).collect()).unwrap()
}

const METRICS: [Metric; 2] = [Metric::Euclidean, Metric::ChiSquare];

#[test]
fn approximate_never_beats_exact() {
    let data = uniform(3000, 16, 1);
    let queries = uniform(60, 16, 2);
    let forest = Forest32::build(data.clone(), ForestParams::new(8)).unwrap();
    for metric in METRICS {
        for q in queries.points() {
            let approx = knn(&forest, q, 10, metric).unwrap();
            let exact = exact_knn(&data, q, 10, metric).unwrap();
            assert_eq!(exact.candidates_examined, data.len());
            assert_eq!(approx.neighbors.len(), 10);
            for (a, e) in approx.neighbors.iter().zip(&exact.neighbors) {
                assert!(a.distance >= e.distance);
            }
            for nb in &approx.neighbors {
                let d = metric.distance(data.point(nb.id), q).unwrap();
                assert_eq!(d, nb.distance);
            }
        }
    }
}

#[test]
fn more_trees_never_hurt() {
    let data = uniform(5000, 10, 3);
    let queries = uniform(40, 10, 4);
    let forest = Forest32::build(data, ForestParams::new(25)).unwrap();
    for metric in METRICS {
        for q in queries.points() {
            let mut prev: Option<Vec<f64>> = None;
            for l in 1..=25 {
                let res = knn(forest.prefix(l), q, 5, metric).unwrap();
                let d: Vec<f64> = res.neighbors.iter().map(|n| n.distance).collect();
                if let Some(p) = &prev {
                    for (new, old) in d.iter().zip(p) {
                        assert!(new <= old);
                    }
                }
                prev = Some(d);
            }
        }
    }
}

#[test]
fn one_leaf_forest_is_exact_bit_for_bit() {
    for (n, dim) in [(50, 2), (200, 10), (400, 100)] {
        let data = uniform(n, dim, n as u64);
        let queries = uniform(10, dim, 1000 + n as u64);
        let forest = Forest32::build(data.clone(), ForestParams::new(1).with_capacity(n)).unwrap();
        for metric in METRICS {
            for k in [1, 5, n] {
                for q in queries.points() {
                    let a = knn(&forest, q, k, metric).unwrap();
                    let e = exact_knn(&data, q, k, metric).unwrap();
                    assert_eq!(a.neighbors, e.neighbors);
                }
            }
        }
    }
}

#[test]
fn searcher_matches_free_function() {
    let data = uniform(2000, 8, 5);
    let queries = uniform(30, 8, 6);
    let forest = Forest32::build(data, ForestParams::new(6)).unwrap();
    let mut s = Searcher::new(&forest, Metric::Euclidean).unwrap();
    for q in queries.points() {
        let a = s.knn(q, 4).unwrap();
        let b = knn(&forest, q, 4, Metric::Euclidean).unwrap();
        assert_eq!(a, b);
        assert_eq!(s.last_candidates(), forest.retrieve(q).unwrap().as_slice());
    }
}

#[test]
fn batch_oracle_matches_single_queries() {
    let data = uniform(700, 12, 8);
    let queries = uniform(37, 12, 9);
    for metric in METRICS {
        let batch = exact_knn_batch(&data, &queries, 3, metric).unwrap();
        for (q, b) in queries.points().zip(&batch) {
            assert_eq!(*b, exact_knn(&data, q, 3, metric).unwrap());
        }
    }
}

#[test]
fn scaling_by_a_power_of_two_preserves_everything() {
    let data = uniform(3000, 20, 10);
    let queries = uniform(50, 20, 11);
    let params = ForestParams::new(10).with_proj_dims(4).with_seed(3);
    let base = Forest32::build(data.clone(), params).unwrap();
    for factor in [0.25f32, 2.0, 1024.0] {
        let scaled = Forest32::build(data.scaled(factor).unwrap(), params).unwrap();
        let sq = queries.scaled(factor).unwrap();
        for metric in METRICS {
            for (q, qs) in queries.points().zip(sq.points()) {
                let a = knn(&base, q, 5, metric).unwrap();
                let b = knn(&scaled, qs, 5, metric).unwrap();
                assert_eq!(a.ids(), b.ids());
                assert_eq!(a.candidates_examined, b.candidates_examined);
                for (x, y) in a.neighbors.iter().zip(&b.neighbors) {
                    let expected = x.distance * factor as f64;
                    assert!((y.distance - expected).abs() <= 1e-9 * expected.max(1.0));
                }
            }
        }
    }
}

#[test]
fn query_validation() {
    let data = uniform(100, 3, 1);
    let forest = Forest32::build(data, ForestParams::new(2)).unwrap();
    assert!(knn(&forest, &[0.0, 0.0], 1, Metric::Euclidean).is_err());
    assert!(knn(&forest, &[0.0, f32::INFINITY, 0.0], 1, Metric::Euclidean).is_err());
    assert!(knn(&forest, &[0.0, -1.0, 0.0], 1, Metric::ChiSquare).is_err());
    assert!(knn(&forest, &[0.0, 0.0, 0.0], 0, Metric::Euclidean).is_err());
    let all = knn(&forest, &[0.5, 0.5, 0.5], 1000, Metric::Euclidean).unwrap();
    assert_eq!(all.neighbors.len(), all.candidates_examined);
}
