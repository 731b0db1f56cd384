//! k-nearest-neighbor queries over forest candidates, the exhaustive oracle,
//! and the independence-based accuracy estimate.
//!
//! Both query paths rank by `(ranking distance, id)` and share one scoring
//! kernel, so whenever the candidate set is the whole dataset the two agree
//! bit for bit. Equidistant points are ordered by ascending id.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rayon::prelude::*;

use crate::dataset::{Dataset, PointId};
use crate::error::{Error, Result};
use crate::forest::{CandidateScratch, ForestView};
use crate::metric::Metric;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Neighbor {
    pub id: PointId,
    pub distance: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QueryResult {
    /// Ascending by distance, ties by id.
    pub neighbors: Vec<Neighbor>,
    /// Number of distinct points scored.
    pub candidates_examined: usize,
}

impl QueryResult {
    pub fn nearest(&self) -> Option<Neighbor> {
        self.neighbors.first().copied()
    }

    pub fn ids(&self) -> Vec<PointId> {
        self.neighbors.iter().map(|n| n.id).collect()
    }
}

#[derive(Debug, Clone, Copy)]
struct Ranked {
    key: f64,
    id: PointId,
}

impl PartialEq for Ranked {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Ranked {}

impl PartialOrd for Ranked {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Ranked {
    fn cmp(&self, other: &Self) -> Ordering {
        self.key.total_cmp(&other.key).then(self.id.cmp(&other.id))
    }
}

/// Keeps the `k` smallest entries seen so far.
struct TopK {
    k: usize,
    heap: BinaryHeap<Ranked>,
}

impl TopK {
    fn new(k: usize) -> Self {
        TopK {
            k,
            heap: BinaryHeap::with_capacity(k + 1),
        }
    }

    #[inline]
    fn offer(&mut self, entry: Ranked) {
        if self.heap.len() < self.k {
            self.heap.push(entry);
        } else if let Some(mut top) = self.heap.peek_mut() {
            if entry < *top {
                *top = entry;
            }
        }
    }

    fn finish(self, metric: Metric, examined: usize) -> QueryResult {
        QueryResult {
            neighbors: self
                .heap
                .into_sorted_vec()
                .into_iter()
                .map(|r| Neighbor {
                    id: r.id,
                    distance: metric.reported(r.key),
                })
                .collect(),
            candidates_examined: examined,
        }
    }
}

fn score<T: Scalar>(
    dataset: &Dataset<T>,
    ids: impl Iterator<Item = PointId>,
    q: &[T],
    k: usize,
    metric: Metric,
) -> QueryResult {
    let mut top = TopK::new(k);
    let mut examined = 0;
    for id in ids {
        examined += 1;
        top.offer(Ranked {
            key: metric.ranking_distance(dataset.point(id), q),
            id,
        });
    }
    top.finish(metric, examined)
}

fn check_inputs<T: Scalar>(dataset: &Dataset<T>, q: &[T], k: usize, metric: Metric) -> Result<()> {
    if k == 0 {
        return Err(Error::param("k", "must be at least 1"));
    }
    dataset.check_query(q)?;
    check_metric_domain(dataset, metric)?;
    metric.check_domain(q)
}

fn check_metric_domain<T: Scalar>(dataset: &Dataset<T>, metric: Metric) -> Result<()> {
    if metric == Metric::ChiSquare && !dataset.is_nonnegative() {
        // report the first offender
        for row in dataset.points() {
            metric.check_domain(row)?;
        }
    }
    Ok(())
}

/// Approximate k-NN: scores only the forest's candidates for `q`.
///
/// Returns `min(k, candidates)` neighbors.
pub fn knn<'a, T: Scalar>(
    forest: impl Into<ForestView<'a, T>>,
    q: &[T],
    k: usize,
    metric: Metric,
) -> Result<QueryResult> {
    let view = forest.into();
    check_inputs(view.dataset(), q, k, metric)?;
    let candidates = view.retrieve(q)?;
    Ok(score(view.dataset(), candidates.iter().copied(), q, k, metric))
}

/// Exact k-NN by linear scan.
pub fn exact_knn<T: Scalar>(dataset: &Dataset<T>, q: &[T], k: usize, metric: Metric) -> Result<QueryResult> {
    check_inputs(dataset, q, k, metric)?;
    Ok(score(dataset, 0..dataset.len() as PointId, q, k, metric))
}

/// Exact k-NN for every row of `queries`.
///
/// Equivalent to calling [`exact_knn`] per query; queries are processed in
/// blocks so each pass over the dataset serves a whole block, and blocks run
/// in parallel.
pub fn exact_knn_batch<T: Scalar>(
    dataset: &Dataset<T>,
    queries: &Dataset<T>,
    k: usize,
    metric: Metric,
) -> Result<Vec<QueryResult>> {
    const BLOCK: usize = 16;
    if queries.dim() != dataset.dim() {
        return Err(Error::DimensionMismatch {
            expected: dataset.dim(),
            found: queries.dim(),
        });
    }
    for q in queries.points() {
        check_inputs(dataset, q, k, metric)?;
    }
    let ids: Vec<PointId> = (0..queries.len() as PointId).collect();
    let blocks: Vec<Vec<QueryResult>> = ids
        .par_chunks(BLOCK)
        .map(|block| {
            let qs: Vec<&[T]> = block.iter().map(|&i| queries.point(i)).collect();
            let mut tops: Vec<TopK> = qs.iter().map(|_| TopK::new(k)).collect();
            for (id, row) in dataset.points().enumerate() {
                for (q, top) in qs.iter().zip(tops.iter_mut()) {
                    top.offer(Ranked {
                        key: metric.ranking_distance(row, q),
                        id: id as PointId,
                    });
                }
            }
            tops.into_iter().map(|t| t.finish(metric, dataset.len())).collect()
        })
        .collect();
    Ok(blocks.into_iter().flatten().collect())
}

/// `1 - (1 - p)^trees`: the hit rate of `trees` independent trees that each
/// succeed with probability `p`. Diagnostic only.
pub fn boost_estimate(p: f64, trees: u32) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::param("p", format!("{p} is not a probability")));
    }
    if trees == 0 {
        return Err(Error::param("trees", "need at least one tree"));
    }
    Ok(1.0 - (1.0 - p).powi(trees as i32))
}

/// Repeated queries against one forest view with reusable buffers.
///
/// Validates the metric domain once at construction; each query is still
/// checked for dimension and finiteness.
pub struct Searcher<'a, T> {
    view: ForestView<'a, T>,
    metric: Metric,
    scratch: CandidateScratch,
    candidates: Vec<PointId>,
}

impl<'a, T: Scalar> Searcher<'a, T> {
    pub fn new(view: impl Into<ForestView<'a, T>>, metric: Metric) -> Result<Self> {
        let view = view.into();
        check_metric_domain(view.dataset(), metric)?;
        Ok(Searcher {
            scratch: CandidateScratch::new(view.dataset().len()),
            view,
            metric,
            candidates: Vec::new(),
        })
    }

    /// Switches to another view over the same dataset.
    pub fn set_view(&mut self, view: ForestView<'a, T>) {
        assert!(std::ptr::eq(view.dataset(), self.view.dataset()));
        self.view = view;
    }

    pub fn knn(&mut self, q: &[T], k: usize) -> Result<QueryResult> {
        check_inputs_query(self.view.dataset(), q, k, self.metric)?;
        self.view.retrieve_into(q, &mut self.scratch, &mut self.candidates);
        Ok(score(
            self.view.dataset(),
            self.candidates.iter().copied(),
            q,
            k,
            self.metric,
        ))
    }

    /// Candidate ids of the last query.
    pub fn last_candidates(&self) -> &[PointId] {
        &self.candidates
    }
}

fn check_inputs_query<T: Scalar>(dataset: &Dataset<T>, q: &[T], k: usize, metric: Metric) -> Result<()> {
    if k == 0 {
        return Err(Error::param("k", "must be at least 1"));
    }
    dataset.check_query(q)?;
    metric.check_domain(q)
}
