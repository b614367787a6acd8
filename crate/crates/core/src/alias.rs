//! Walker–Vose alias tables for O(1) sampling from a fixed discrete law.

use rand::Rng;

use crate::scalar::Scalar;

/// Alias table over `0..len` built from non-negative weights.
#[derive(Debug, Clone, PartialEq)]
pub struct AliasTable<T> {
    /// Probability of keeping column `i` rather than jumping to `alias[i]`.
    cut: Vec<T>,
    alias: Vec<u32>,
}

impl<T: Scalar> AliasTable<T> {
    /// Builds the table, or `None` when the weights are empty or sum to zero.
    pub fn new(weights: &[T]) -> Option<Self> {
        let n = weights.len();
        let total: f64 = weights.iter().map(|w| w.as_f64()).sum();
        if n == 0 || total <= 0.0 || !total.is_finite() {
            return None;
        }
        let scale = n as f64 / total;
        let mut prob: Vec<f64> = weights.iter().map(|w| w.as_f64() * scale).collect();
        let mut alias: Vec<u32> = (0..n as u32).collect();
        let mut small = Vec::with_capacity(n);
        let mut large = Vec::with_capacity(n);
        for (i, &p) in prob.iter().enumerate() {
            if p < 1.0 {
                small.push(i);
            } else {
                large.push(i);
            }
        }
        while let (Some(&s), Some(&l)) = (small.last(), large.last()) {
            small.pop();
            alias[s] = l as u32;
            prob[l] = (prob[l] + prob[s]) - 1.0;
            if prob[l] < 1.0 {
                large.pop();
                small.push(l);
            }
        }
        // Leftovers are 1 up to rounding.
        for i in small.into_iter().chain(large) {
            prob[i] = 1.0;
        }
        Some(AliasTable {
            cut: prob.into_iter().map(T::of).collect(),
            alias,
        })
    }

    pub fn len(&self) -> usize {
        self.cut.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cut.is_empty()
    }

    /// Draws an index with probability proportional to its weight.
    #[inline]
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let n = self.cut.len();
        let column = rng.random_range(0..n);
        let u: f64 = rng.random();
        if u < self.cut[column].as_f64() {
            column
        } else {
            self.alias[column] as usize
        }
    }

    /// Exact probability of drawing `i` implied by the table.
    pub fn probability(&self, i: usize) -> f64 {
        let n = self.cut.len() as f64;
        let mut p = self.cut[i].as_f64();
        for (j, &a) in self.alias.iter().enumerate() {
            if a as usize == i && j != i {
                p += 1.0 - self.cut[j].as_f64();
            }
        }
        p / n
    }
}
