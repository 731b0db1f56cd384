//! Random hyperplane tests.
//!
//! A test projects a point onto `K` randomly chosen coordinates with random
//! weights in `[0, 1)` and compares the projection against a threshold drawn
//! between two order statistics of the node's projections. Points whose
//! projection is `>= threshold` go left.

use rand::seq::index::sample;
use rand::Rng;

use crate::dataset::{Dataset, PointId};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// `PointId::MAX` marks a test without an id tie-break.
pub(crate) const NO_TIE: PointId = PointId::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Side {
    Left,
    Right,
}

/// One internal node's test.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitTest<T> {
    indices: Vec<u32>,
    coefficients: Vec<T>,
    threshold: T,
    tie: Option<PointId>,
}

impl<T: Scalar> SplitTest<T> {
    pub fn new(indices: Vec<u32>, coefficients: Vec<T>, threshold: T) -> Result<Self> {
        if indices.is_empty() || indices.len() != coefficients.len() {
            return Err(Error::param(
                "split test",
                "indices and coefficients must be non-empty and the same length",
            ));
        }
        let mut sorted = indices.clone();
        sorted.sort_unstable();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::param("split test", "indices must be distinct"));
        }
        if coefficients.iter().any(|c| !(*c >= T::zero() && *c <= T::one())) {
            return Err(Error::param("split test", "coefficients must lie in [0, 1]"));
        }
        if !threshold.is_finite() {
            return Err(Error::param("split test", "threshold must be finite"));
        }
        Ok(SplitTest {
            indices,
            coefficients,
            threshold,
            tie: None,
        })
    }

    pub(crate) fn from_parts(indices: Vec<u32>, coefficients: Vec<T>, threshold: T, tie: PointId) -> Self {
        SplitTest {
            indices,
            coefficients,
            threshold,
            tie: (tie != NO_TIE).then_some(tie),
        }
    }

    pub fn indices(&self) -> &[u32] {
        &self.indices
    }

    pub fn coefficients(&self) -> &[T] {
        &self.coefficients
    }

    pub fn threshold(&self) -> T {
        self.threshold
    }

    /// Id tie-break installed by the degenerate-split fallback. Stored points
    /// whose projection equals the threshold go left iff their id is `>=` this
    /// value; query vectors (which carry no id) always go left on equality.
    pub fn tie_break(&self) -> Option<PointId> {
        self.tie
    }

    pub fn projection(&self, x: &[T]) -> T {
        project(&self.indices, &self.coefficients, x)
    }

    /// Routes a query vector.
    pub fn route(&self, x: &[T]) -> Side {
        side(self.projection(x), None, self.threshold, self.tie_raw())
    }

    /// Routes a stored point, honoring the id tie-break.
    pub fn route_point(&self, x: &[T], id: PointId) -> Side {
        side(self.projection(x), Some(id), self.threshold, self.tie_raw())
    }

    pub(crate) fn tie_raw(&self) -> PointId {
        self.tie.unwrap_or(NO_TIE)
    }
}

#[inline]
pub(crate) fn project<T: Scalar>(indices: &[u32], coefficients: &[T], x: &[T]) -> T {
    indices
        .iter()
        .zip(coefficients)
        .fold(T::zero(), |acc, (&i, &c)| acc + x[i as usize] * c)
}

#[inline]
pub(crate) fn side<T: Scalar>(y: T, id: Option<PointId>, threshold: T, tie: PointId) -> Side {
    let left = if y > threshold {
        true
    } else if y < threshold {
        false
    } else {
        match id {
            Some(id) if tie != NO_TIE => id >= tie,
            _ => true,
        }
    };
    if left {
        Side::Left
    } else {
        Side::Right
    }
}

/// Minimum number of points each child receives when `n` points are split.
pub fn min_child_size(n: usize, split_ratio: f64) -> usize {
    ((split_ratio * n as f64).floor() as usize).max(1)
}

/// Draws a split test for the points `ids` (at least two).
///
/// With `m = max(1, floor(r n))` and projections sorted by `(value, id)` into
/// `y[0..n]`, the threshold is drawn uniformly from `[y[m], y[n - m])`
/// (`n - m` equals `min(n - 1, ceil((1 - r) n))`). When `m == n - m` that
/// interval is empty and the threshold is drawn from `(y[m - 1], y[m]]`
/// instead. A draw is accepted when each side receives at least `m` points.
/// Rejected draws resample the coordinates and weights, up to `d` times; after
/// that the sorted sequence is split at rank `n / 2` with an id tie-break, so
/// the call always succeeds.
pub fn make_split<T: Scalar, R: Rng + ?Sized>(
    ids: &[PointId],
    dataset: &Dataset<T>,
    split_ratio: f64,
    proj_dims: usize,
    rng: &mut R,
) -> SplitTest<T> {
    let n = ids.len();
    assert!(n >= 2, "a split needs at least two points");
    let dim = dataset.dim();
    assert!(proj_dims >= 1 && proj_dims <= dim);

    let m = min_child_size(n, split_ratio);
    let (lo, hi) = (m, n - m);
    let mut ranked: Vec<(T, PointId)> = Vec::with_capacity(n);
    let mut indices = Vec::new();
    let mut coefficients = Vec::new();

    for _ in 0..=dim {
        indices.clear();
        indices.extend(sample(rng, dim, proj_dims).into_iter().map(|i| i as u32));
        coefficients.clear();
        coefficients.extend((0..proj_dims).map(|_| T::from_f64_nearest(rng.gen::<f64>())));

        ranked.clear();
        ranked.extend(
            ids.iter()
                .map(|&id| (project(&indices, &coefficients, dataset.point(id)), id)),
        );
        ranked.sort_unstable_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));

        let u: f64 = rng.gen();
        let threshold = if lo < hi {
            let (a, b) = (ranked[lo].0.to_f64_lossless(), ranked[hi].0.to_f64_lossless());
            a + u * (b - a)
        } else {
            let (a, b) = (ranked[lo - 1].0.to_f64_lossless(), ranked[lo].0.to_f64_lossless());
            b - u * (b - a)
        };
        let threshold = T::from_f64_nearest(threshold);
        let right = ranked.partition_point(|(y, _)| *y < threshold);
        if right >= m && n - right >= m {
            return SplitTest {
                indices,
                coefficients,
                threshold,
                tie: None,
            };
        }
    }

    // Every draw was degenerate: split the (value, id) order in half.
    let mid = n / 2;
    SplitTest {
        indices,
        coefficients,
        threshold: ranked[mid].0,
        tie: Some(ranked[mid].1),
    }
}
