//! Gradient-based heads: plain fine-tuning of a linear softmax layer, and
//! online iCaRL with a class-balanced replay buffer on top of the same head.

use std::collections::BTreeMap;

use super::{check_dim, ClassId, Learner, Prediction};
use crate::error::{Error, Result};
use crate::linalg::dot;
use crate::rng::RngStream;

/// Linear softmax layer trained by per-sample SGD on cross-entropy.
/// New classes get a zero-initialized row and bias.
#[derive(Debug, Clone)]
pub struct Ft {
    dim: usize,
    lr: f64,
    rows: BTreeMap<ClassId, (Vec<f64>, f64)>,
}

impl Ft {
    pub fn new(dim: usize, lr: f64) -> Self {
        Ft { dim, lr, rows: BTreeMap::new() }
    }

    fn ensure_class(&mut self, y: ClassId) {
        self.rows.entry(y).or_insert_with(|| (vec![0.0; self.dim], 0.0));
    }

    fn softmax(&self, z: &[f64]) -> Vec<(ClassId, f64)> {
        let logits: Vec<(ClassId, f64)> =
            self.rows.iter().map(|(&c, (w, b))| (c, dot(w, z) + b)).collect();
        let max = logits.iter().map(|&(_, v)| v).fold(f64::NEG_INFINITY, f64::max);
        let exps: Vec<f64> = logits.iter().map(|&(_, v)| (v - max).exp()).collect();
        let total: f64 = exps.iter().sum();
        logits
            .iter()
            .zip(&exps)
            .map(|(&(c, _), &e)| (c, e / total))
            .collect()
    }

    /// One SGD step on the averaged cross-entropy gradient of `batch`.
    fn sgd_step(&mut self, batch: &[(&[f64], ClassId)]) {
        let scale = self.lr / batch.len() as f64;
        let mut grads: BTreeMap<ClassId, (Vec<f64>, f64)> = BTreeMap::new();
        for &(z, y) in batch {
            for (c, p) in self.softmax(z) {
                let g = p - if c == y { 1.0 } else { 0.0 };
                let entry = grads.entry(c).or_insert_with(|| (vec![0.0; self.dim], 0.0));
                for (slot, &v) in entry.0.iter_mut().zip(z) {
                    *slot += g * v;
                }
                entry.1 += g;
            }
        }
        for (c, (gw, gb)) in grads {
            let (w, b) = self.rows.get_mut(&c).unwrap();
            for (slot, g) in w.iter_mut().zip(&gw) {
                *slot -= scale * g;
            }
            *b -= scale * gb;
        }
    }
}

impl Learner for Ft {
    fn observe(&mut self, z: &[f64], y: ClassId) -> Result<()> {
        check_dim(self.dim, z)?;
        self.ensure_class(y);
        self.sgd_step(&[(z, y)]);
        Ok(())
    }

    fn predict(&self, z: &[f64]) -> Result<Prediction> {
        check_dim(self.dim, z)?;
        if self.rows.is_empty() {
            return Err(Error::State("ft predict with no classes".into()));
        }
        let scores = self.rows.iter().map(|(&c, (w, b))| (c, dot(w, z) + b)).collect();
        Prediction::from_scores(scores)
    }

    fn num_classes(&self) -> usize {
        self.rows.len()
    }
}

/// Replay buffer capacity policy.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BufferPolicy {
    Fixed(usize),
    /// Capacity grows as `n · classes_seen`.
    PerClass(usize),
}

/// Online iCaRL: class-balanced replay buffer plus the FT head. Each
/// observation inserts the sample (evicting from the most represented class
/// at capacity) and takes one SGD step on the sample plus a random buffer
/// draw.
#[derive(Debug)]
pub struct Icarl {
    head: Ft,
    buffer: BTreeMap<ClassId, Vec<Vec<f64>>>,
    policy: BufferPolicy,
    replay_draw: usize,
    rng: RngStream,
}

impl Icarl {
    pub fn new(dim: usize, lr: f64, policy: BufferPolicy, rng: RngStream) -> Self {
        Icarl { head: Ft::new(dim, lr), buffer: BTreeMap::new(), policy, replay_draw: 16, rng }
    }

    pub fn buffer_len(&self) -> usize {
        self.buffer.values().map(Vec::len).sum()
    }

    pub fn class_counts(&self) -> BTreeMap<ClassId, usize> {
        self.buffer.iter().map(|(&c, v)| (c, v.len())).collect()
    }

    fn capacity(&self) -> usize {
        match self.policy {
            BufferPolicy::Fixed(n) => n,
            BufferPolicy::PerClass(n) => n * self.buffer.len().max(1),
        }
    }

    fn insert(&mut self, z: &[f64], y: ClassId) {
        self.buffer.entry(y).or_default();
        while self.buffer_len() >= self.capacity() {
            // evict a uniformly random sample from the most represented
            // class (ties -> lowest class id)
            let (victim_class, len) = self
                .buffer
                .iter()
                .map(|(&c, v)| (c, v.len()))
                .max_by(|a, b| a.1.cmp(&b.1).then(b.0.cmp(&a.0)))
                .unwrap();
            if len == 0 {
                break;
            }
            let idx = self.rng.index(len);
            self.buffer.get_mut(&victim_class).unwrap().swap_remove(idx);
        }
        self.buffer.get_mut(&y).unwrap().push(z.to_vec());
    }
}

impl Learner for Icarl {
    fn observe(&mut self, z: &[f64], y: ClassId) -> Result<()> {
        check_dim(self.head.dim, z)?;
        self.head.ensure_class(y);
        self.insert(z, y);
        // flatten buffer for uniform sampling; BTreeMap order keeps the
        // flattening deterministic
        let flat: Vec<(&[f64], ClassId)> = self
            .buffer
            .iter()
            .flat_map(|(&c, v)| v.iter().map(move |s| (s.as_slice(), c)))
            .collect();
        let mut batch: Vec<(&[f64], ClassId)> = vec![(z, y)];
        for _ in 0..self.replay_draw.min(flat.len()) {
            batch.push(flat[self.rng.index(flat.len())]);
        }
        self.head.sgd_step(&batch);
        Ok(())
    }

    fn predict(&self, z: &[f64]) -> Result<Prediction> {
        self.head.predict(z)
    }

    fn num_classes(&self) -> usize {
        self.head.num_classes()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ft_learns_separable_pair() {
        let mut ft = Ft::new(2, 0.1);
        for _ in 0..100 {
            ft.observe(&[1.0, 0.0], 0).unwrap();
            ft.observe(&[0.0, 1.0], 1).unwrap();
        }
        assert_eq!(ft.predict(&[1.0, 0.0]).unwrap().label, 0);
        assert_eq!(ft.predict(&[0.0, 1.0]).unwrap().label, 1);
    }

    #[test]
    fn ft_new_class_rows_are_zero_initialized() {
        let mut ft = Ft::new(2, 0.0); // lr 0: rows stay at init
        ft.observe(&[5.0, 5.0], 0).unwrap();
        let (w, b) = &ft.rows[&0];
        assert_eq!(w, &vec![0.0, 0.0]);
        assert_eq!(*b, 0.0);
    }

    #[test]
    fn icarl_evicts_from_most_represented_class() {
        let rng = RngStream::new(5, "icarl/test");
        let mut ic = Icarl::new(1, 0.01, BufferPolicy::Fixed(6), rng);
        for i in 0..10 {
            ic.observe(&[i as f64], 0).unwrap();
        }
        ic.observe(&[100.0], 1).unwrap();
        let counts = ic.class_counts();
        assert_eq!(ic.buffer_len(), 6);
        assert_eq!(counts[&1], 1); // class 0 was the eviction victim
        // balance invariant: max - min never grows from an eviction
        for i in 0..20 {
            let before = balance_gap(&ic);
            ic.observe(&[i as f64], (i % 3) as u32).unwrap();
            let after = balance_gap(&ic);
            assert!(after <= before.max(1) + 1);
        }
    }

    fn balance_gap(ic: &Icarl) -> usize {
        let counts = ic.class_counts();
        let max = counts.values().copied().max().unwrap_or(0);
        let min = counts.values().copied().min().unwrap_or(0);
        max - min
    }

    #[test]
    fn icarl_per_class_capacity_grows() {
        let rng = RngStream::new(6, "icarl/2pc");
        let mut ic = Icarl::new(1, 0.01, BufferPolicy::PerClass(2), rng);
        for c in 0..4u32 {
            for i in 0..5 {
                ic.observe(&[c as f64 * 10.0 + i as f64], c).unwrap();
            }
        }
        assert!(ic.buffer_len() <= 2 * 4);
    }

    #[test]
    fn icarl_is_deterministic_per_seed() {
        let run = || {
            let rng = RngStream::new(9, "icarl/det");
            let mut ic = Icarl::new(2, 0.05, BufferPolicy::Fixed(10), rng);
            for i in 0..50 {
                let y = (i % 2) as u32;
                ic.observe(&[i as f64 * 0.1, y as f64], y).unwrap();
            }
            ic.predict(&[1.0, 1.0]).unwrap().scores
        };
        assert_eq!(run(), run());
    }
}
