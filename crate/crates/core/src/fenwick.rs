//! Binary indexed prefix-sum tree over nonnegative weights.
//!
//! Backs the squared-magnitude samplers: prefix queries and single-entry
//! updates in O(log n), plus a weighted search that turns a uniform draw in
//! [0, total) into an index.

#[derive(Clone, Debug)]
pub struct FenwickTree {
    // 1-indexed; tree[i] holds the sum of the block ending at i.
    tree: Vec<f64>,
    len: usize,
}

impl FenwickTree {
    /// Builds the tree in O(n) from raw weights.
    pub fn new(weights: &[f64]) -> Self {
        let len = weights.len();
        let mut tree = vec![0.0; len + 1];
        tree[1..].copy_from_slice(weights);
        for i in 1..=len {
            let parent = i + (i & i.wrapping_neg());
            if parent <= len {
                tree[parent] += tree[i];
            }
        }
        Self { tree, len }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Sum of the first `count` weights.
    pub fn prefix(&self, count: usize) -> f64 {
        debug_assert!(count <= self.len);
        let mut i = count;
        let mut sum = 0.0;
        while i > 0 {
            sum += self.tree[i];
            i -= i & i.wrapping_neg();
        }
        sum
    }

    pub fn total(&self) -> f64 {
        self.prefix(self.len)
    }

    /// Adds `delta` to the weight at `index`.
    pub fn update(&mut self, index: usize, delta: f64) {
        debug_assert!(index < self.len);
        let mut i = index + 1;
        while i <= self.len {
            self.tree[i] += delta;
            i += i & i.wrapping_neg();
        }
    }

    /// Index of the entry whose weight interval contains `target`, i.e. the
    /// number of leading entries with cumulative weight <= `target`. Entries
    /// of zero weight span empty intervals and are skipped. Returns `len`
    /// when `target` is at or beyond the total weight.
    pub fn search(&self, target: f64) -> usize {
        let mut pos = 0usize;
        let mut remaining = target;
        let mut step = self.len.next_power_of_two();
        while step > 0 {
            let next = pos + step;
            if next <= self.len && self.tree[next] <= remaining {
                remaining -= self.tree[next];
                pos = next;
            }
            step >>= 1;
        }
        pos
    }
}
