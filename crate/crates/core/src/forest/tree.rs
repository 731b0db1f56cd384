use crate::dataset::{Dataset, PointId};
use crate::forest::split::{make_split, min_child_size, project, side, Side, SplitTest};
use crate::forest::ForestParams;
use crate::rng;
use crate::scalar::Scalar;

/// Node record. Leaves own the slot `ids[start..start + cap]`, of which the
/// first `len` entries are occupied.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Node {
    Leaf { start: u32, len: u32, cap: u32 },
    Split { test: u32, left: u32, right: u32 },
}

/// One random binary partition tree.
///
/// Nodes live in a flat array (the root is node 0) and split tests in
/// parallel flat tables indexed by test number; test `t` uses coordinates
/// `test_indices[t*K..(t+1)*K]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PartitionTree<T> {
    pub(crate) index: u32,
    pub(crate) seed: u64,
    pub(crate) proj_dims: usize,
    pub(crate) nodes: Vec<Node>,
    pub(crate) ids: Vec<PointId>,
    pub(crate) test_indices: Vec<u32>,
    pub(crate) test_coefficients: Vec<T>,
    pub(crate) thresholds: Vec<T>,
    pub(crate) ties: Vec<PointId>,
}

/// Summary of a tree's shape.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TreeStats {
    pub leaves: usize,
    pub internal: usize,
    pub mean_leaf_depth: f64,
    pub max_leaf_depth: usize,
    pub points: usize,
}

impl<T: Scalar> PartitionTree<T> {
    /// An empty tree: a single empty root leaf.
    pub fn new(index: u32, seed: u64, proj_dims: usize) -> Self {
        PartitionTree {
            index,
            seed,
            proj_dims,
            nodes: vec![Node::Leaf {
                start: 0,
                len: 0,
                cap: 0,
            }],
            ids: Vec::new(),
            test_indices: Vec::new(),
            test_coefficients: Vec::new(),
            thresholds: Vec::new(),
            ties: Vec::new(),
        }
    }

    /// Builds tree `index` over every point of `dataset`, inserting in a
    /// random permutation drawn from the tree's own stream.
    pub fn build(dataset: &Dataset<T>, params: &ForestParams, index: u32) -> Self {
        use rand::seq::SliceRandom;

        let mut order: Vec<PointId> = (0..dataset.len() as PointId).collect();
        order.shuffle(&mut rng::stream(params.seed, &[rng::PERMUTATION, u64::from(index)]));

        let mut tree = Self::new(index, params.seed, params.proj_dims);
        for id in order {
            tree.insert_point(id, dataset, params);
        }
        tree.compact();
        tree
    }

    pub fn index(&self) -> u32 {
        self.index
    }

    pub fn split_count(&self) -> usize {
        self.thresholds.len()
    }

    #[inline]
    fn test_side(&self, test: u32, x: &[T], id: Option<PointId>) -> Side {
        let t = test as usize;
        let k = self.proj_dims;
        let y = project(
            &self.test_indices[t * k..(t + 1) * k],
            &self.test_coefficients[t * k..(t + 1) * k],
            x,
        );
        side(y, id, self.thresholds[t], self.ties[t])
    }

    #[inline]
    fn descend(&self, x: &[T], id: Option<PointId>) -> (usize, usize) {
        let mut node = 0usize;
        let mut depth = 0;
        loop {
            match self.nodes[node] {
                Node::Leaf { .. } => return (node, depth),
                Node::Split { test, left, right } => {
                    node = match self.test_side(test, x, id) {
                        Side::Left => left as usize,
                        Side::Right => right as usize,
                    };
                    depth += 1;
                }
            }
        }
    }

    #[inline]
    fn leaf_slice(&self, node: usize) -> &[PointId] {
        match self.nodes[node] {
            Node::Leaf { start, len, .. } => &self.ids[start as usize..(start + len) as usize],
            Node::Split { .. } => unreachable!("not a leaf"),
        }
    }

    /// Ids stored in the leaf a query vector routes to.
    #[inline]
    pub fn retrieve_one(&self, q: &[T]) -> &[PointId] {
        self.leaf_slice(self.descend(q, None).0)
    }

    /// Ids in the leaf a stored point routes to, using its id for tie-breaks.
    pub fn leaf_of_point(&self, x: &[T], id: PointId) -> &[PointId] {
        self.leaf_slice(self.descend(x, Some(id)).0)
    }

    /// Depth of the leaf a query vector routes to.
    pub fn depth_of(&self, q: &[T]) -> usize {
        self.descend(q, None).1
    }

    /// Split test of internal node `node`, if it is one.
    pub fn split_test(&self, node: usize) -> Option<SplitTest<T>> {
        match self.nodes.get(node)? {
            Node::Split { test, .. } => {
                let (t, k) = (*test as usize, self.proj_dims);
                Some(SplitTest::from_parts(
                    self.test_indices[t * k..(t + 1) * k].to_vec(),
                    self.test_coefficients[t * k..(t + 1) * k].to_vec(),
                    self.thresholds[t],
                    self.ties[t],
                ))
            }
            Node::Leaf { .. } => None,
        }
    }

    /// Leaf contents in depth-first order (left child first).
    pub fn leaves(&self) -> Vec<&[PointId]> {
        self.leaves_with_depth().into_iter().map(|(l, _)| l).collect()
    }

    fn leaves_with_depth(&self) -> Vec<(&[PointId], usize)> {
        let mut out = Vec::new();
        let mut stack = vec![(0usize, 0usize)];
        while let Some((node, depth)) = stack.pop() {
            match self.nodes[node] {
                Node::Leaf { .. } => out.push((self.leaf_slice(node), depth)),
                Node::Split { left, right, .. } => {
                    stack.push((right as usize, depth + 1));
                    stack.push((left as usize, depth + 1));
                }
            }
        }
        out
    }

    pub fn stats(&self) -> TreeStats {
        let leaves = self.leaves_with_depth();
        let total: usize = leaves.iter().map(|(_, d)| d).sum();
        TreeStats {
            leaves: leaves.len(),
            internal: self.nodes.len() - leaves.len(),
            mean_leaf_depth: total as f64 / leaves.len() as f64,
            max_leaf_depth: leaves.iter().map(|(_, d)| *d).max().unwrap_or(0),
            points: leaves.iter().map(|(l, _)| l.len()).sum(),
        }
    }

    /// Adds point `id` of `dataset`: routes it to a leaf, stores it there, and
    /// splits the leaf once it holds more than `capacity` ids.
    ///
    /// `id` must not already be in the tree.
    pub fn insert_point(&mut self, id: PointId, dataset: &Dataset<T>, params: &ForestParams) {
        let x = dataset.point(id);
        let (leaf, _) = self.descend(x, Some(id));
        let Node::Leaf { start, len, cap } = self.nodes[leaf] else {
            unreachable!()
        };
        let capacity = params.capacity as u32;

        if len < cap {
            self.ids[(start + len) as usize] = id;
            self.nodes[leaf] = Node::Leaf {
                start,
                len: len + 1,
                cap,
            };
            return;
        }
        if len < capacity {
            // grow: move to a fresh full-capacity slot at the end
            let new_start = self.ids.len();
            self.ids.extend_from_within(start as usize..(start + len) as usize);
            self.ids.push(id);
            self.ids.resize(new_start + params.capacity, PointId::MAX);
            self.nodes[leaf] = Node::Leaf {
                start: new_start as u32,
                len: len + 1,
                cap: capacity,
            };
            return;
        }

        let mut members = self.ids[start as usize..(start + len) as usize].to_vec();
        members.push(id);
        self.split_leaf(leaf, start, cap, members, dataset, params);
    }

    fn split_leaf(
        &mut self,
        leaf: usize,
        start: u32,
        cap: u32,
        members: Vec<PointId>,
        dataset: &Dataset<T>,
        params: &ForestParams,
    ) {
        let counter = self.thresholds.len() as u64;
        let mut node_rng = rng::stream(self.seed, &[rng::SPLIT, u64::from(self.index), counter]);
        let test = make_split(&members, dataset, params.split_ratio, self.proj_dims, &mut node_rng);

        let test_no = self.thresholds.len() as u32;
        self.test_indices.extend_from_slice(test.indices());
        self.test_coefficients.extend_from_slice(test.coefficients());
        self.thresholds.push(test.threshold());
        self.ties.push(test.tie_raw());

        let (mut left, mut right) = (Vec::new(), Vec::new());
        for &m in &members {
            match self.test_side(test_no, dataset.point(m), Some(m)) {
                Side::Left => left.push(m),
                Side::Right => right.push(m),
            }
        }
        let floor = min_child_size(members.len(), params.split_ratio);
        debug_assert!(left.len() >= floor && right.len() >= floor);

        let capacity = params.capacity;
        // left child reuses the old slot, right child gets a new one
        let left_cap = cap.max(left.len() as u32);
        debug_assert!(left_cap as usize <= capacity.max(cap as usize));
        self.ids[start as usize..start as usize + left.len()].copy_from_slice(&left);
        let right_start = self.ids.len();
        self.ids.extend_from_slice(&right);
        self.ids.resize(right_start + capacity, PointId::MAX);

        let left_node = self.nodes.len() as u32;
        self.nodes.push(Node::Leaf {
            start,
            len: left.len() as u32,
            cap: left_cap,
        });
        self.nodes.push(Node::Leaf {
            start: right_start as u32,
            len: right.len() as u32,
            cap: capacity as u32,
        });
        self.nodes[leaf] = Node::Split {
            test: test_no,
            left: left_node,
            right: left_node + 1,
        };
    }

    /// Repacks leaf slots tightly in depth-first order.
    pub fn compact(&mut self) {
        let mut ids = Vec::with_capacity(self.ids.len());
        let mut stack = vec![0usize];
        while let Some(node) = stack.pop() {
            match self.nodes[node] {
                Node::Leaf { start, len, .. } => {
                    let new_start = ids.len() as u32;
                    ids.extend_from_slice(&self.ids[start as usize..(start + len) as usize]);
                    self.nodes[node] = Node::Leaf {
                        start: new_start,
                        len,
                        cap: len,
                    };
                }
                Node::Split { left, right, .. } => {
                    stack.push(right as usize);
                    stack.push(left as usize);
                }
            }
        }
        ids.shrink_to_fit();
        self.ids = ids;
    }

    /// Checks structure and the partition/occupancy invariants against `n`
    /// points and leaf capacity `capacity`.
    pub fn check_invariants(&self, n: usize, capacity: usize) -> Result<(), String> {
        let k = self.proj_dims;
        let tests = self.thresholds.len();
        if self.test_indices.len() != tests * k || self.test_coefficients.len() != tests * k || self.ties.len() != tests
        {
            return Err("split table lengths disagree".into());
        }
        let mut seen_node = vec![false; self.nodes.len()];
        let mut seen_id = vec![false; n];
        let mut stack = vec![0usize];
        let mut count = 0usize;
        while let Some(node) = stack.pop() {
            if node >= self.nodes.len() || std::mem::replace(&mut seen_node[node], true) {
                return Err(format!("node {node} missing or reached twice"));
            }
            match self.nodes[node] {
                Node::Leaf { start, len, cap } => {
                    if len > cap || (start as usize + cap as usize) > self.ids.len() {
                        return Err(format!("leaf {node} span out of range"));
                    }
                    if len == 0 && !(n == 0 && node == 0) {
                        return Err(format!("leaf {node} is empty"));
                    }
                    if len as usize > capacity {
                        return Err(format!("leaf {node} holds {len} > {capacity} ids"));
                    }
                    for &id in self.leaf_slice(node) {
                        let slot = seen_id
                            .get_mut(id as usize)
                            .ok_or_else(|| format!("id {id} out of range"))?;
                        if std::mem::replace(slot, true) {
                            return Err(format!("id {id} stored twice"));
                        }
                        count += 1;
                    }
                }
                Node::Split { test, left, right } => {
                    if test as usize >= tests {
                        return Err(format!("node {node} references missing test {test}"));
                    }
                    stack.push(left as usize);
                    stack.push(right as usize);
                }
            }
        }
        if seen_node.iter().any(|s| !s) {
            return Err("unreachable nodes".into());
        }
        if count != n {
            return Err(format!("{count} ids stored, expected {n}"));
        }
        Ok(())
    }
}
