//! Random binary partition forests.
//!
//! Each tree is grown by inserting points one at a time in a random order;
//! a leaf that overflows its capacity is replaced by a random hyperplane
//! test and two children. Queries descend every tree without backtracking
//! and collect the ids stored in the leaves they reach.
//!
//! A built forest is immutable apart from [`Forest::insert`], which needs
//! `&mut self`; queries and inserts therefore cannot overlap.

mod params;
mod split;
pub(crate) mod tree;

use std::sync::Arc;

use rayon::prelude::*;

pub use params::ForestParams;
pub use split::{make_split, min_child_size, Side, SplitTest};
pub use tree::{PartitionTree, TreeStats};

use crate::dataset::{Dataset, PointId};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone)]
pub struct Forest<T> {
    params: ForestParams,
    dataset: Arc<Dataset<T>>,
    trees: Vec<PartitionTree<T>>,
}

impl<T: Scalar> Forest<T> {
    /// Builds `params.trees` trees over `dataset`.
    ///
    /// Trees are built in parallel on the current rayon pool; tree `i` depends
    /// only on the data, the params and `i`, so the result is identical for
    /// any thread count.
    pub fn build(dataset: impl Into<Arc<Dataset<T>>>, params: ForestParams) -> Result<Self> {
        let dataset = dataset.into();
        params.validate_for_dim(dataset.dim())?;
        let trees = (0..params.trees as u32)
            .into_par_iter()
            .map(|i| PartitionTree::build(&dataset, &params, i))
            .collect();
        Ok(Forest { params, dataset, trees })
    }

    /// Same as [`build`](Self::build) but on the calling thread only.
    pub fn build_serial(dataset: impl Into<Arc<Dataset<T>>>, params: ForestParams) -> Result<Self> {
        let dataset = dataset.into();
        params.validate_for_dim(dataset.dim())?;
        let trees = (0..params.trees as u32)
            .map(|i| PartitionTree::build(&dataset, &params, i))
            .collect();
        Ok(Forest { params, dataset, trees })
    }

    pub(crate) fn from_built(params: ForestParams, dataset: Arc<Dataset<T>>, trees: Vec<PartitionTree<T>>) -> Self {
        Forest { params, dataset, trees }
    }

    /// Reassembles a forest from parts, checking every tree's invariants.
    pub fn from_parts(params: ForestParams, dataset: Arc<Dataset<T>>, trees: Vec<PartitionTree<T>>) -> Result<Self> {
        params.validate_for_dim(dataset.dim())?;
        if trees.len() != params.trees {
            return Err(Error::Corrupt(format!(
                "{} trees stored, params say {}",
                trees.len(),
                params.trees
            )));
        }
        for (i, t) in trees.iter().enumerate() {
            if t.proj_dims != params.proj_dims || t.index as usize != i {
                return Err(Error::Corrupt(format!("tree {i} header disagrees with params")));
            }
            if let Some(&bad) = t.test_indices.iter().find(|&&c| c as usize >= dataset.dim()) {
                return Err(Error::Corrupt(format!("tree {i} tests coordinate {bad}")));
            }
            let weights_ok = t.test_coefficients.iter().all(|c| *c >= T::zero() && *c <= T::one());
            if !weights_ok || t.thresholds.iter().any(|x| !x.is_finite()) {
                return Err(Error::Corrupt(format!("tree {i} has an invalid split test")));
            }
            t.check_invariants(dataset.len(), params.capacity)
                .map_err(|e| Error::Corrupt(format!("tree {i}: {e}")))?;
        }
        Ok(Forest { params, dataset, trees })
    }

    pub fn params(&self) -> &ForestParams {
        &self.params
    }

    pub fn dataset(&self) -> &Dataset<T> {
        &self.dataset
    }

    pub fn shared_dataset(&self) -> &Arc<Dataset<T>> {
        &self.dataset
    }

    pub fn trees(&self) -> &[PartitionTree<T>] {
        &self.trees
    }

    /// View over all trees.
    pub fn view(&self) -> ForestView<'_, T> {
        self.prefix(self.trees.len())
    }

    /// View over the first `trees` trees (clamped to the forest size).
    pub fn prefix(&self, trees: usize) -> ForestView<'_, T> {
        ForestView {
            trees: &self.trees[..trees.min(self.trees.len())],
            dataset: &self.dataset,
            capacity: self.params.capacity,
        }
    }

    /// Deduplicated, ascending ids of every leaf `q` reaches.
    pub fn retrieve(&self, q: &[T]) -> Result<Vec<PointId>> {
        self.view().retrieve(q)
    }

    /// Mean leaf depth over all leaves of all trees.
    pub fn mean_leaf_depth(&self) -> f64 {
        let (sum, count) = self.trees.iter().map(|t| t.stats()).fold((0.0, 0usize), |(s, c), st| {
            (s + st.mean_leaf_depth * st.leaves as f64, c + st.leaves)
        });
        sum / count as f64
    }

    /// Appends `v` to the dataset and inserts it into every tree.
    ///
    /// Splits triggered here draw from the same per-tree streams as the
    /// original build, so inserting the same points in the same order is
    /// reproducible. If the dataset is shared with other owners it is copied
    /// first.
    pub fn insert(&mut self, v: &[T]) -> Result<PointId> {
        let dataset = Arc::make_mut(&mut self.dataset);
        let id = dataset.push(v)?;
        let params = self.params;
        let dataset = &*self.dataset;
        self.trees
            .par_iter_mut()
            .for_each(|t| t.insert_point(id, dataset, &params));
        Ok(id)
    }

    /// Runs [`PartitionTree::check_invariants`] on every tree.
    pub fn check_invariants(&self) -> Result<(), String> {
        self.trees.iter().enumerate().try_for_each(|(i, t)| {
            t.check_invariants(self.dataset.len(), self.params.capacity)
                .map_err(|e| format!("tree {i}: {e}"))
        })
    }
}

/// Borrowed view of some trees of a forest together with their dataset.
#[derive(Debug, Clone, Copy)]
pub struct ForestView<'a, T> {
    trees: &'a [PartitionTree<T>],
    dataset: &'a Dataset<T>,
    capacity: usize,
}

impl<'a, T: Scalar> From<&'a Forest<T>> for ForestView<'a, T> {
    fn from(f: &'a Forest<T>) -> Self {
        f.view()
    }
}

impl<'a, T: Scalar> ForestView<'a, T> {
    pub fn trees(&self) -> &'a [PartitionTree<T>] {
        self.trees
    }

    pub fn dataset(&self) -> &'a Dataset<T> {
        self.dataset
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn retrieve(&self, q: &[T]) -> Result<Vec<PointId>> {
        self.dataset.check_query(q)?;
        let mut scratch = CandidateScratch::new(self.dataset.len());
        let mut out = Vec::new();
        self.retrieve_into(q, &mut scratch, &mut out);
        Ok(out)
    }

    /// Unchecked retrieval reusing caller buffers; `out` is overwritten with
    /// the ascending deduplicated candidate ids.
    pub fn retrieve_into(&self, q: &[T], scratch: &mut CandidateScratch, out: &mut Vec<PointId>) {
        out.clear();
        scratch.reset(self.dataset.len());
        for tree in self.trees {
            for &id in tree.retrieve_one(q) {
                if scratch.mark(id) {
                    out.push(id);
                }
            }
        }
        out.sort_unstable();
    }
}

/// Reusable visited set for deduplicating candidates across trees.
#[derive(Debug, Clone, Default)]
pub struct CandidateScratch {
    stamps: Vec<u32>,
    epoch: u32,
}

impl CandidateScratch {
    pub fn new(n: usize) -> Self {
        CandidateScratch {
            stamps: vec![0; n],
            epoch: 0,
        }
    }

    fn reset(&mut self, n: usize) {
        if self.stamps.len() < n {
            self.stamps.resize(n, 0);
        }
        self.epoch = self.epoch.wrapping_add(1);
        if self.epoch == 0 {
            self.stamps.iter_mut().for_each(|s| *s = 0);
            self.epoch = 1;
        }
    }

    #[inline]
    fn mark(&mut self, id: PointId) -> bool {
        let slot = &mut self.stamps[id as usize];
        if *slot == self.epoch {
            false
        } else {
            *slot = self.epoch;
            true
        }
    }
}
