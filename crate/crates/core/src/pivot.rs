//! Bin axes and the fixed-pivot split shared by the sectional solvers.
//!
//! A value falling between two neighbouring pivots is split over them so that
//! both the count and the first moment in that coordinate are preserved.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    edges: Vec<f64>,
    pivots: Vec<f64>,
}

/// Where a value lands: `(index, weight)` pairs with weights summing to 1.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Split {
    Inside { lo: usize, w_lo: f64, hi: usize, w_hi: f64 },
    /// Past the last pivot.
    Above,
    /// Below the first pivot.
    Below,
}

impl Axis {
    pub fn new(edges: Vec<f64>, pivots: Vec<f64>) -> Result<Self> {
        if edges.len() < 2 || pivots.len() + 1 != edges.len() {
            return Err(Error::param("axis", "need n+1 edges for n pivots, n >= 1"));
        }
        if edges.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::param("axis", "edges must be strictly increasing"));
        }
        for (i, &p) in pivots.iter().enumerate() {
            if !(p >= edges[i] && p < edges[i + 1]) {
                return Err(Error::param("axis", format!("pivot {p} outside bin {i}")));
            }
        }
        Ok(Axis { edges, pivots })
    }

    /// `n` log-spaced bins over `[lo, hi]` with geometric-centre pivots.
    pub fn log_spaced(n: usize, lo: f64, hi: f64) -> Result<Self> {
        if n == 0 || !(lo > 0.0 && hi > lo) {
            return Err(Error::param("axis", format!("bad log axis: n = {n}, [{lo}, {hi}]")));
        }
        let ratio = (hi / lo).ln() / n as f64;
        let mut edges: Vec<f64> = (0..=n).map(|i| lo * (ratio * i as f64).exp()).collect();
        edges[0] = lo;
        edges[n] = hi;
        let pivots = edges.windows(2).map(|w| (w[0] * w[1]).sqrt()).collect();
        Self::new(edges, pivots)
    }

    /// Log-spaced bins up to `hi` whose first pivot is exactly `anchor`.
    pub fn log_anchored(n: usize, anchor: f64, hi: f64) -> Result<Self> {
        if n == 0 || !(anchor > 0.0 && hi > anchor) {
            return Err(Error::param("axis", format!("bad anchored axis: n = {n}, anchor = {anchor}, hi = {hi}")));
        }
        let nn = n as f64;
        let lo = ((2.0 * nn * anchor.ln() - hi.ln()) / (2.0 * nn - 1.0)).exp();
        let ax = Self::log_spaced(n, lo, hi)?;
        let mut pivots = ax.pivots;
        pivots[0] = anchor;
        Self::new(ax.edges, pivots)
    }

    /// First bin `[0, first)` with pivot 0, then `n - 1` log bins up to `hi`.
    pub fn with_zero_bin(n: usize, first: f64, hi: f64) -> Result<Self> {
        if n < 2 {
            return Err(Error::param("axis", "zero-bin axis needs at least 2 bins"));
        }
        let tail = Self::log_spaced(n - 1, first, hi)?;
        let mut edges = vec![0.0];
        edges.extend_from_slice(&tail.edges);
        let mut pivots = vec![0.0];
        pivots.extend_from_slice(&tail.pivots);
        Self::new(edges, pivots)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.pivots.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.pivots.is_empty()
    }

    pub fn edges(&self) -> &[f64] {
        &self.edges
    }

    pub fn pivots(&self) -> &[f64] {
        &self.pivots
    }

    pub fn bin(&self, i: usize) -> (f64, f64) {
        (self.edges[i], self.edges[i + 1])
    }

    /// Bin containing `x` (half-open bins), if any.
    pub fn locate(&self, x: f64) -> Option<usize> {
        if x < self.edges[0] || x >= self.edges[self.edges.len() - 1] {
            return None;
        }
        Some(self.edges.partition_point(|&e| e <= x) - 1)
    }

    pub fn split(&self, x: f64) -> Split {
        let n = self.pivots.len();
        if x < self.pivots[0] {
            return Split::Below;
        }
        if x > self.pivots[n - 1] {
            return Split::Above;
        }
        let hi = self.pivots.partition_point(|&p| p < x);
        if hi < n && self.pivots[hi] == x {
            return Split::Inside { lo: hi, w_lo: 1.0, hi, w_hi: 0.0 };
        }
        let lo = hi - 1;
        let w_hi = (x - self.pivots[lo]) / (self.pivots[hi] - self.pivots[lo]);
        Split::Inside { lo, w_lo: 1.0 - w_hi, hi, w_hi }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn log_axis_shape() {
        let ax = Axis::log_spaced(4, 1.0, 16.0).unwrap();
        assert_eq!(ax.len(), 4);
        assert_relative_eq!(ax.edges()[2], 4.0, max_relative = 1e-14);
        assert_relative_eq!(ax.pivots()[0], 2f64.sqrt(), max_relative = 1e-14);
        assert_eq!(ax.locate(0.5), None);
        assert_eq!(ax.locate(3.9), Some(1));
        assert_eq!(ax.locate(16.0), None);
    }

    #[test]
    fn anchored_axis_has_exact_first_pivot() {
        let ax = Axis::log_anchored(64, 1.0, 1e3).unwrap();
        assert_eq!(ax.pivots()[0], 1.0);
        assert_relative_eq!(ax.edges()[64], 1e3, max_relative = 1e-14);
        let r0 = ax.edges()[1] / ax.edges()[0];
        let r1 = ax.edges()[2] / ax.edges()[1];
        assert_relative_eq!(r0, r1, max_relative = 1e-12);
    }

    #[test]
    fn zero_bin_axis() {
        let ax = Axis::with_zero_bin(5, 0.01, 100.0).unwrap();
        assert_eq!(ax.edges()[0], 0.0);
        assert_eq!(ax.pivots()[0], 0.0);
        assert_eq!(ax.len(), 5);
        assert_eq!(ax.locate(0.0), Some(0));
        assert!(matches!(ax.split(0.0), Split::Inside { lo: 0, w_lo, .. } if w_lo == 1.0));
    }

    #[test]
    fn rejects_bad_edges() {
        assert!(Axis::new(vec![0.0, 1.0, 1.0], vec![0.5, 1.0]).is_err());
        assert!(Axis::log_spaced(0, 1.0, 2.0).is_err());
        assert!(Axis::log_spaced(3, 0.0, 2.0).is_err());
    }

    proptest! {
        #[test]
        fn split_preserves_count_and_position(x in 1.0f64..100.0) {
            let ax = Axis::log_spaced(17, 0.5, 200.0).unwrap();
            match ax.split(x) {
                Split::Inside { lo, w_lo, hi, w_hi } => {
                    prop_assert!((w_lo + w_hi - 1.0).abs() < 1e-15);
                    prop_assert!(w_lo >= 0.0 && w_hi >= 0.0);
                    let m = w_lo * ax.pivots()[lo] + w_hi * ax.pivots()[hi];
                    prop_assert!((m - x).abs() <= 1e-12 * x);
                }
                other => prop_assert!(false, "unexpected {:?}", other),
            }
        }
    }
}
