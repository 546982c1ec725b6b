//! Weighted sampling without replacement (Efraimidis–Spirakis A-Res).
//!
//! Item `i` with weight `w_i` draws the key `u_i^(1/w_i)` with `u_i` uniform on
//! (0, 1]; the `n` largest keys form the sample. Keys are compared as
//! `ln(u_i) / w_i`, which preserves their order and stays finite for tiny
//! weights. A min-heap of size `n` keeps the running top `n`, so a pass over
//! `N` items costs O(N log n).

use alloc::collections::BinaryHeap;
use alloc::vec::Vec;
use core::cmp::{Ordering, Reverse};

use num_traits::Float;
use rand::Rng;

#[derive(Debug, Clone, Copy)]
struct Keyed {
    key: f64,
    index: usize,
}

impl PartialEq for Keyed {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Keyed {}

impl PartialOrd for Keyed {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Keyed {
    // lower index wins ties
    fn cmp(&self, other: &Self) -> Ordering {
        self.key
            .total_cmp(&other.key)
            .then_with(|| other.index.cmp(&self.index))
    }
}

/// Streaming A-Res reservoir holding at most `capacity` items.
#[derive(Debug, Clone)]
pub struct WeightedReservoir {
    capacity: usize,
    heap: BinaryHeap<Reverse<Keyed>>,
}

impl WeightedReservoir {
    pub fn new(capacity: usize) -> Self {
        Self {
            capacity,
            heap: BinaryHeap::with_capacity(capacity + 1),
        }
    }

    /// Offers item `index` with nonnegative `weight`. Zero weights are never
    /// retained over positive ones.
    pub fn offer<R: Rng + ?Sized>(&mut self, index: usize, weight: f64, rng: &mut R) {
        if self.capacity == 0 {
            return;
        }
        let u = 1.0 - rng.random::<f64>();
        let key = if weight > 0.0 { u.ln() / weight } else { f64::neg_infinity() };
        let item = Keyed { key, index };
        if self.heap.len() < self.capacity {
            self.heap.push(Reverse(item));
        } else if let Some(Reverse(min)) = self.heap.peek() {
            if item > *min {
                self.heap.pop();
                self.heap.push(Reverse(item));
            }
        }
    }

    pub fn len(&self) -> usize {
        self.heap.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heap.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    /// Retained indices, ascending.
    pub fn into_indices(self) -> Vec<usize> {
        let mut out: Vec<usize> = self.heap.into_iter().map(|Reverse(k)| k.index).collect();
        out.sort_unstable();
        out
    }
}

/// Draws `n` distinct indices without replacement with probability
/// proportional to `weights` at each successive draw. Returns ascending
/// indices; all indices if `n >= weights.len()`.
pub fn sample_without_replacement<R: Rng + ?Sized>(weights: &[f64], n: usize, rng: &mut R) -> Vec<usize> {
    if n >= weights.len() {
        return (0..weights.len()).collect();
    }
    let mut reservoir = WeightedReservoir::new(n);
    for (i, &w) in weights.iter().enumerate() {
        reservoir.offer(i, w, rng);
    }
    reservoir.into_indices()
}

/// Same as [`sample_without_replacement`] for log-weights. Only relative
/// weights matter, so they are rescaled by the largest before keying.
pub fn sample_without_replacement_ln<R: Rng + ?Sized>(ln_weights: &[f64], n: usize, rng: &mut R) -> Vec<usize> {
    let max = ln_weights.iter().copied().fold(f64::neg_infinity(), f64::max);
    let weights: Vec<f64> = ln_weights.iter().map(|lw| (lw - max).exp()).collect();
    sample_without_replacement(&weights, n, rng)
}
