//! Prefix-sum index over the two separable majorant weights.

use rand::Rng;

/// Binary indexed tree over `f64` leaves with weighted search.
#[derive(Clone, Debug)]
pub struct Fenwick {
    tree: Vec<f64>,
    mask: usize,
}

impl Fenwick {
    pub fn from_leaves(leaves: &[f64]) -> Self {
        let n = leaves.len();
        let mut tree = leaves.to_vec();
        for i in 0..n {
            let parent = i | (i + 1);
            if parent < n {
                tree[parent] += tree[i];
            }
        }
        let mask = if n == 0 { 0 } else { 1usize << (usize::BITS - 1 - n.leading_zeros()) };
        Fenwick { tree, mask }
    }

    #[inline]
    pub fn add(&mut self, mut i: usize, delta: f64) {
        while i < self.tree.len() {
            self.tree[i] += delta;
            i |= i + 1;
        }
    }

    /// Sum of leaves `[0, i)`.
    pub fn prefix(&self, mut i: usize) -> f64 {
        let mut s = 0.0;
        while i > 0 {
            s += self.tree[i - 1];
            i &= i - 1;
        }
        s
    }

    /// Smallest index `i` with `prefix(i + 1) > target`, or `len` if none.
    pub fn search(&self, mut target: f64) -> usize {
        let n = self.tree.len();
        let mut pos = 0usize;
        let mut step = self.mask;
        while step > 0 {
            let next = pos + step;
            if next <= n && self.tree[next - 1] <= target {
                target -= self.tree[next - 1];
                pos = next;
            }
            step >>= 1;
        }
        pos
    }
}

/// Majorant weights `w- = v^-alpha`, `w+ = v^beta` for the live particles,
/// with running totals `W-`, `W+` and the diagonal sum `sum w-_i w+_i`.
///
/// Slots are kept aligned with the particle vector: removal swaps the last
/// slot into the hole. Totals are rebuilt from the leaves every
/// [`REBUILD_INTERVAL`](Self::REBUILD_INTERVAL) updates.
#[derive(Clone, Debug)]
pub struct SumTreeIndex {
    minus: Fenwick,
    plus: Fenwick,
    leaf_minus: Vec<f64>,
    leaf_plus: Vec<f64>,
    len: usize,
    total_minus: f64,
    total_plus: f64,
    diag: f64,
    updates: u64,
}

impl SumTreeIndex {
    pub const REBUILD_INTERVAL: u64 = 1 << 16;

    pub fn new(weights: impl IntoIterator<Item = (f64, f64)>) -> Self {
        let (leaf_minus, leaf_plus): (Vec<f64>, Vec<f64>) = weights.into_iter().unzip();
        let len = leaf_minus.len();
        let mut idx = SumTreeIndex {
            minus: Fenwick::from_leaves(&leaf_minus),
            plus: Fenwick::from_leaves(&leaf_plus),
            leaf_minus,
            leaf_plus,
            len,
            total_minus: 0.0,
            total_plus: 0.0,
            diag: 0.0,
            updates: 0,
        };
        idx.rebuild();
        idx
    }

    pub fn rebuild(&mut self) {
        for i in self.len..self.leaf_minus.len() {
            self.leaf_minus[i] = 0.0;
            self.leaf_plus[i] = 0.0;
        }
        self.minus = Fenwick::from_leaves(&self.leaf_minus);
        self.plus = Fenwick::from_leaves(&self.leaf_plus);
        let live = 0..self.len;
        self.total_minus = live.clone().map(|i| self.leaf_minus[i]).sum();
        self.total_plus = live.clone().map(|i| self.leaf_plus[i]).sum();
        self.diag = live.map(|i| self.leaf_minus[i] * self.leaf_plus[i]).sum();
        self.updates = 0;
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.len
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn totals(&self) -> (f64, f64) {
        (self.total_minus, self.total_plus)
    }

    pub fn diagonal(&self) -> f64 {
        self.diag
    }

    pub fn leaf(&self, i: usize) -> (f64, f64) {
        (self.leaf_minus[i], self.leaf_plus[i])
    }

    /// `sum_{i != j} w-_i w+_j`.
    pub fn off_diagonal(&self) -> f64 {
        if self.len < 2 {
            return 0.0;
        }
        (self.total_minus * self.total_plus - self.diag).max(0.0)
    }

    pub fn set(&mut self, i: usize, w: (f64, f64)) {
        assert!(i < self.len, "slot {i} out of range");
        let (om, op) = self.leaf(i);
        self.minus.add(i, w.0 - om);
        self.plus.add(i, w.1 - op);
        self.total_minus += w.0 - om;
        self.total_plus += w.1 - op;
        self.diag += w.0 * w.1 - om * op;
        self.leaf_minus[i] = w.0;
        self.leaf_plus[i] = w.1;
        self.bump();
    }

    /// Removes slot `i`, moving the last slot into it (mirrors `Vec::swap_remove`).
    pub fn swap_remove(&mut self, i: usize) {
        assert!(i < self.len, "slot {i} out of range");
        let last = self.len - 1;
        let moved = self.leaf(last);
        if i != last {
            self.set(i, moved);
        }
        let (om, op) = self.leaf(last);
        self.minus.add(last, -om);
        self.plus.add(last, -op);
        self.total_minus -= om;
        self.total_plus -= op;
        self.diag -= om * op;
        self.leaf_minus[last] = 0.0;
        self.leaf_plus[last] = 0.0;
        self.len = last;
        self.bump();
    }

    fn bump(&mut self) {
        self.updates += 1;
        if self.updates >= Self::REBUILD_INTERVAL {
            self.rebuild();
        }
    }

    pub fn sample_minus<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        Self::sample(&self.minus, &self.leaf_minus, self.len, rng)
    }

    pub fn sample_plus<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        Self::sample(&self.plus, &self.leaf_plus, self.len, rng)
    }

    fn sample<R: Rng + ?Sized>(tree: &Fenwick, leaves: &[f64], len: usize, rng: &mut R) -> usize {
        debug_assert!(len > 0);
        let total = tree.prefix(len);
        loop {
            let u = rng.gen::<f64>() * total;
            let i = tree.search(u);
            // round-off can land on a dead slot or a zero-weight leaf
            if i < len && leaves[i] > 0.0 {
                return i;
            }
        }
    }
}
