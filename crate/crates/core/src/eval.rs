//! Recall and cost measurement over repeated random trials.
//!
//! Each trial builds one forest with its own derived seed; sweeps over the
//! tree count reuse prefixes of a single forest of the largest size, which is
//! valid because trees are built independently. Ground truth is computed
//! once and can be cached on disk.

use std::fmt::Write as _;
use std::path::Path;
use std::sync::Arc;
use std::time::{Duration, Instant};

use rayon::prelude::*;

use crate::dataset::{Dataset, PointId};
use crate::error::{Error, Result};
use crate::forest::{Forest, ForestParams, PartitionTree};
use crate::io::hash::Fnv1a;
use crate::io::truth::{load_truth, save_truth};
use crate::metric::Metric;
use crate::rng;
use crate::scalar::Scalar;
use crate::search::{exact_knn_batch, Neighbor, Searcher};

pub const CSV_HEADER: &str = "L,r,C,K,trial,seed,recall_at_1,candidate_fraction,mean_query_us,build_ms";

const QUERY_CHUNK: usize = 128;

/// Exact neighbors of every query.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    key: u64,
    k: usize,
    rows: Vec<Vec<Neighbor>>,
}

impl GroundTruth {
    /// Identifies the (dataset, queries, metric, k) combination.
    pub fn cache_key<T: Scalar>(dataset: &Dataset<T>, queries: &Dataset<T>, metric: Metric, k: usize) -> u64 {
        let mut h = Fnv1a::new();
        h.write_u64(dataset.content_hash());
        h.write_u64(queries.content_hash());
        h.write(&[metric.tag()]);
        h.write_u64(k.min(dataset.len()) as u64);
        h.finish()
    }

    /// Exhaustive scan for every query, in parallel.
    pub fn compute<T: Scalar>(dataset: &Dataset<T>, queries: &Dataset<T>, metric: Metric, k: usize) -> Result<Self> {
        if queries.dim() != dataset.dim() {
            return Err(Error::DimensionMismatch {
                expected: dataset.dim(),
                found: queries.dim(),
            });
        }
        let rows = exact_knn_batch(dataset, queries, k, metric)?
            .into_iter()
            .map(|r| r.neighbors)
            .collect();
        Ok(GroundTruth {
            key: Self::cache_key(dataset, queries, metric, k),
            k: k.min(dataset.len()),
            rows,
        })
    }

    /// Loads `cache` if it matches, otherwise computes and writes it.
    pub fn load_or_compute<T: Scalar>(
        cache: &Path,
        dataset: &Dataset<T>,
        queries: &Dataset<T>,
        metric: Metric,
        k: usize,
    ) -> Result<Self> {
        let key = Self::cache_key(dataset, queries, metric, k);
        if cache.exists() {
            if let Ok(t) = load_truth(cache) {
                if t.key == key && t.rows.len() == queries.len() {
                    return Ok(t);
                }
            }
        }
        let t = Self::compute(dataset, queries, metric, k)?;
        save_truth(cache, &t)?;
        Ok(t)
    }

    pub(crate) fn from_rows(key: u64, k: usize, rows: Vec<Vec<Neighbor>>) -> Result<Self> {
        if k == 0 || rows.iter().any(|r| r.len() != k) {
            return Err(Error::Corrupt("ground-truth rows have inconsistent length".into()));
        }
        Ok(GroundTruth { key, k, rows })
    }

    pub fn key(&self) -> u64 {
        self.key
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn rows(&self) -> &[Vec<Neighbor>] {
        &self.rows
    }

    pub fn nearest(&self, query: usize) -> PointId {
        self.rows[query][0].id
    }
}

/// One (configuration, trial) measurement.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalRecord {
    pub params: ForestParams,
    pub trial: usize,
    pub recall_at_1: f64,
    pub mean_candidate_fraction: f64,
    pub mean_candidates: f64,
    pub mean_query_time: Duration,
    /// Summed single-thread build time of the trees in this configuration.
    pub build_time: Duration,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct EvalReport {
    pub records: Vec<EvalRecord>,
}

/// Averages over trials for one tree count.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalSummary {
    pub trees: usize,
    pub trials: usize,
    pub recall_at_1: f64,
    pub mean_candidate_fraction: f64,
    pub mean_candidates: f64,
    pub mean_query_time: Duration,
    pub build_time: Duration,
}

impl EvalReport {
    /// CSV with [`CSV_HEADER`]. Timing columns are left empty when
    /// `timings` is false, which makes the output a pure function of the
    /// inputs and seed.
    pub fn to_csv(&self, timings: bool) -> String {
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        for r in &self.records {
            let p = &r.params;
            let _ = write!(
                out,
                "{},{},{},{},{},{},{},{},",
                p.trees,
                p.split_ratio,
                p.capacity,
                p.proj_dims,
                r.trial,
                p.seed,
                r.recall_at_1,
                r.mean_candidate_fraction
            );
            if timings {
                let _ = write!(
                    out,
                    "{:.3},{:.3}",
                    r.mean_query_time.as_secs_f64() * 1e6,
                    r.build_time.as_secs_f64() * 1e3
                );
            } else {
                out.push(',');
            }
            out.push('\n');
        }
        out
    }

    /// Per tree count, in order of first appearance.
    pub fn summaries(&self) -> Vec<EvalSummary> {
        let mut order: Vec<usize> = Vec::new();
        for r in &self.records {
            if !order.contains(&r.params.trees) {
                order.push(r.params.trees);
            }
        }
        order
            .into_iter()
            .map(|trees| {
                let rs: Vec<&EvalRecord> = self.records.iter().filter(|r| r.params.trees == trees).collect();
                let n = rs.len() as f64;
                let mean = |f: &dyn Fn(&EvalRecord) -> f64| rs.iter().map(|r| f(r)).sum::<f64>() / n;
                EvalSummary {
                    trees,
                    trials: rs.len(),
                    recall_at_1: mean(&|r| r.recall_at_1),
                    mean_candidate_fraction: mean(&|r| r.mean_candidate_fraction),
                    mean_candidates: mean(&|r| r.mean_candidates),
                    mean_query_time: Duration::from_secs_f64(mean(&|r| r.mean_query_time.as_secs_f64())),
                    build_time: Duration::from_secs_f64(mean(&|r| r.build_time.as_secs_f64())),
                }
            })
            .collect()
    }

    pub fn summary_for(&self, trees: usize) -> Option<EvalSummary> {
        self.summaries().into_iter().find(|s| s.trees == trees)
    }
}

/// Dataset, queries, metric and their ground truth.
pub struct Evaluation<'a, T> {
    dataset: Arc<Dataset<T>>,
    queries: &'a Dataset<T>,
    metric: Metric,
    truth: GroundTruth,
}

impl<'a, T: Scalar> Evaluation<'a, T> {
    /// Computes ground truth by exhaustive scan.
    pub fn new(dataset: impl Into<Arc<Dataset<T>>>, queries: &'a Dataset<T>, metric: Metric) -> Result<Self> {
        let dataset = dataset.into();
        let truth = GroundTruth::compute(&dataset, queries, metric, 1)?;
        Self::with_truth(dataset, queries, metric, truth)
    }

    /// Uses a precomputed (for instance cached) ground truth.
    pub fn with_truth(
        dataset: impl Into<Arc<Dataset<T>>>,
        queries: &'a Dataset<T>,
        metric: Metric,
        truth: GroundTruth,
    ) -> Result<Self> {
        let dataset = dataset.into();
        if queries.dim() != dataset.dim() {
            return Err(Error::DimensionMismatch {
                expected: dataset.dim(),
                found: queries.dim(),
            });
        }
        if truth.key != GroundTruth::cache_key(&dataset, queries, metric, truth.k) {
            return Err(Error::Corrupt("ground truth belongs to different inputs".into()));
        }
        Ok(Evaluation {
            dataset,
            queries,
            metric,
            truth,
        })
    }

    pub fn truth(&self) -> &GroundTruth {
        &self.truth
    }

    pub fn dataset(&self) -> &Arc<Dataset<T>> {
        &self.dataset
    }

    /// `trials` independent forests of `params.trees` trees.
    pub fn evaluate(&self, params: ForestParams, trials: usize) -> Result<EvalReport> {
        self.sweep(params, &[params.trees], trials)
    }

    /// One record per (tree count, trial). `tree_counts` must be non-empty
    /// and strictly ascending.
    pub fn sweep(&self, base: ForestParams, tree_counts: &[usize], trials: usize) -> Result<EvalReport> {
        if tree_counts.is_empty() {
            return Err(Error::param("trees", "no tree counts given"));
        }
        if tree_counts.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::param("trees", "tree counts must be strictly ascending"));
        }
        if trials == 0 {
            return Err(Error::param("trials", "need at least one trial"));
        }
        let max_trees = *tree_counts.last().unwrap();
        base.with_trees(max_trees).validate_for_dim(self.dataset.dim())?;
        for &l in tree_counts {
            base.with_trees(l).validate()?;
        }

        let mut records = Vec::with_capacity(trials * tree_counts.len());
        for trial in 0..trials {
            let seed = rng::trial_seed(base.seed, trial);
            let params = base.with_trees(max_trees).with_seed(seed);
            let (forest, tree_times) = build_timed(self.dataset.clone(), params)?;
            for &l in tree_counts {
                let mut record = self.measure(&forest, l)?;
                record.params = params.with_trees(l);
                record.trial = trial;
                record.build_time = tree_times[..l].iter().sum();
                records.push(record);
            }
        }
        Ok(EvalReport { records })
    }

    fn measure(&self, forest: &Forest<T>, trees: usize) -> Result<EvalRecord> {
        let n = self.dataset.len() as f64;
        let q = self.queries.len();
        let view = forest.prefix(trees);
        let chunks: Vec<(usize, usize, Duration)> = (0..q)
            .collect::<Vec<_>>()
            .par_chunks(QUERY_CHUNK)
            .map(|chunk| {
                let mut searcher = Searcher::new(view, self.metric)?;
                let (mut hits, mut cands, mut time) = (0usize, 0usize, Duration::ZERO);
                for &i in chunk {
                    let start = Instant::now();
                    let r = searcher.knn(self.queries.point(i as PointId), 1)?;
                    time += start.elapsed();
                    if r.nearest().map(|nb| nb.id) == Some(self.truth.nearest(i)) {
                        hits += 1;
                    }
                    cands += r.candidates_examined;
                }
                Ok((hits, cands, time))
            })
            .collect::<Result<_>>()?;
        let hits: usize = chunks.iter().map(|c| c.0).sum();
        let cands: usize = chunks.iter().map(|c| c.1).sum();
        let time: Duration = chunks.iter().map(|c| c.2).sum();
        Ok(EvalRecord {
            params: *forest.params(),
            trial: 0,
            recall_at_1: hits as f64 / q as f64,
            mean_candidate_fraction: cands as f64 / q as f64 / n,
            mean_candidates: cands as f64 / q as f64,
            mean_query_time: time / q as u32,
            build_time: Duration::ZERO,
        })
    }
}

/// Builds a forest and reports each tree's build time.
pub fn build_timed<T: Scalar>(dataset: Arc<Dataset<T>>, params: ForestParams) -> Result<(Forest<T>, Vec<Duration>)> {
    params.validate_for_dim(dataset.dim())?;
    let (trees, times): (Vec<PartitionTree<T>>, Vec<Duration>) = (0..params.trees as u32)
        .into_par_iter()
        .map(|i| {
            let start = Instant::now();
            let t = PartitionTree::build(&dataset, &params, i);
            (t, start.elapsed())
        })
        .unzip();
    Ok((Forest::from_built(params, dataset, trees), times))
}

/// [`Evaluation::evaluate`] with ground truth computed on the fly.
pub fn evaluate<T: Scalar>(
    dataset: impl Into<Arc<Dataset<T>>>,
    queries: &Dataset<T>,
    params: ForestParams,
    metric: Metric,
    trials: usize,
) -> Result<EvalReport> {
    Evaluation::new(dataset, queries, metric)?.evaluate(params, trials)
}

/// [`Evaluation::sweep`] with ground truth computed on the fly.
pub fn sweep<T: Scalar>(
    dataset: impl Into<Arc<Dataset<T>>>,
    queries: &Dataset<T>,
    base: ForestParams,
    tree_counts: &[usize],
    metric: Metric,
    trials: usize,
) -> Result<EvalReport> {
    Evaluation::new(dataset, queries, metric)?.sweep(base, tree_counts, trials)
}
