use crate::error::{Error, Result};

/// Forest shape and randomness.
///
/// Field names follow their role: `trees` is the forest size L,
/// `split_ratio` the minimum child fraction r, `capacity` the leaf capacity C
/// and `proj_dims` the number K of coordinates combined in each split.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ForestParams {
    pub trees: usize,
    pub split_ratio: f64,
    pub capacity: usize,
    pub proj_dims: usize,
    pub seed: u64,
}

impl ForestParams {
    pub const DEFAULT_SPLIT_RATIO: f64 = 0.3;
    pub const DEFAULT_CAPACITY: usize = 12;
    pub const DEFAULT_PROJ_DIMS: usize = 1;

    pub fn new(trees: usize) -> Self {
        ForestParams {
            trees,
            split_ratio: Self::DEFAULT_SPLIT_RATIO,
            capacity: Self::DEFAULT_CAPACITY,
            proj_dims: Self::DEFAULT_PROJ_DIMS,
            seed: 0,
        }
    }

    pub fn with_split_ratio(mut self, r: f64) -> Self {
        self.split_ratio = r;
        self
    }

    pub fn with_capacity(mut self, c: usize) -> Self {
        self.capacity = c;
        self
    }

    pub fn with_proj_dims(mut self, k: usize) -> Self {
        self.proj_dims = k;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_trees(mut self, trees: usize) -> Self {
        self.trees = trees;
        self
    }

    /// Checks everything that does not depend on the data.
    pub fn validate(&self) -> Result<()> {
        if self.trees == 0 {
            return Err(Error::param("trees", "need at least one tree"));
        }
        if self.trees > u32::MAX as usize {
            return Err(Error::param("trees", "too many trees"));
        }
        if !(self.split_ratio > 0.0 && self.split_ratio <= 0.5) {
            return Err(Error::param(
                "split_ratio",
                format!("{} is outside (0, 0.5]", self.split_ratio),
            ));
        }
        if self.capacity < 2 {
            return Err(Error::param("capacity", "must be at least 2"));
        }
        if self.capacity >= u32::MAX as usize {
            return Err(Error::param("capacity", "too large"));
        }
        if self.proj_dims == 0 {
            return Err(Error::param("proj_dims", "must be at least 1"));
        }
        Ok(())
    }

    /// [`validate`](Self::validate) plus `proj_dims <= dim`.
    pub fn validate_for_dim(&self, dim: usize) -> Result<()> {
        self.validate()?;
        if self.proj_dims > dim {
            return Err(Error::param(
                "proj_dims",
                format!("{} exceeds the data dimension {dim}", self.proj_dims),
            ));
        }
        Ok(())
    }

    /// Expected leaf depth for `n` points, `log2(2n / ((1 + r) C))`.
    pub fn expected_depth(&self, n: usize) -> f64 {
        (2.0 * n as f64 / ((1.0 + self.split_ratio) * self.capacity as f64)).log2()
    }
}
