//! Mistake-driven online perceptron and the streaming one-vs-rest margin
//! learner.

use std::collections::BTreeMap;

use super::{check_dim, ClassId, Learner, Prediction};
use crate::error::{Error, Result};
use crate::linalg::dot;

/// One weight vector per class, initialized to the first sample of the
/// class and updated only on misclassification.
#[derive(Debug, Clone, Default)]
pub struct Prcpt {
    dim: usize,
    weights: BTreeMap<ClassId, Vec<f64>>,
}

impl Prcpt {
    pub fn new(dim: usize) -> Self {
        Prcpt { dim, weights: BTreeMap::new() }
    }

    pub fn weight(&self, c: ClassId) -> Option<&[f64]> {
        self.weights.get(&c).map(|w| w.as_slice())
    }
}

impl Learner for Prcpt {
    fn observe(&mut self, z: &[f64], y: ClassId) -> Result<()> {
        check_dim(self.dim, z)?;
        if !self.weights.contains_key(&y) {
            self.weights.insert(y, z.to_vec());
            return Ok(());
        }
        let predicted = self.predict(z)?.label;
        if predicted != y {
            let wy = self.weights.get_mut(&y).unwrap();
            for (w, &v) in wy.iter_mut().zip(z) {
                *w += v;
            }
            let wp = self.weights.get_mut(&predicted).unwrap();
            for (w, &v) in wp.iter_mut().zip(z) {
                *w -= v;
            }
        }
        Ok(())
    }

    fn predict(&self, z: &[f64]) -> Result<Prediction> {
        check_dim(self.dim, z)?;
        if self.weights.is_empty() {
            return Err(Error::State("prcpt predict with no classes".into()));
        }
        let scores = self.weights.iter().map(|(&c, w)| (c, dot(w, z))).collect();
        Prediction::from_scores(scores)
    }

    fn num_classes(&self) -> usize {
        self.weights.len()
    }
}

/// Streaming one-vs-rest: scores a query by z·(m_c − m_global), i.e.
/// closeness to the class mean relative to the mean of everything seen.
#[derive(Debug, Clone, Default)]
pub struct Sovr {
    dim: usize,
    class_sums: BTreeMap<ClassId, (Vec<f64>, u64)>,
    global_sum: Vec<f64>,
    global_count: u64,
}

impl Sovr {
    pub fn new(dim: usize) -> Self {
        Sovr { dim, class_sums: BTreeMap::new(), global_sum: vec![0.0; dim], global_count: 0 }
    }
}

impl Learner for Sovr {
    fn observe(&mut self, z: &[f64], y: ClassId) -> Result<()> {
        check_dim(self.dim, z)?;
        let entry = self
            .class_sums
            .entry(y)
            .or_insert_with(|| (vec![0.0; self.dim], 0));
        for (s, &v) in entry.0.iter_mut().zip(z) {
            *s += v;
        }
        entry.1 += 1;
        for (s, &v) in self.global_sum.iter_mut().zip(z) {
            *s += v;
        }
        self.global_count += 1;
        Ok(())
    }

    fn predict(&self, z: &[f64]) -> Result<Prediction> {
        check_dim(self.dim, z)?;
        if self.class_sums.is_empty() {
            return Err(Error::State("sovr predict with no classes".into()));
        }
        let gn = self.global_count as f64;
        let scores = self
            .class_sums
            .iter()
            .map(|(&c, (sum, count))| {
                let score: f64 = (0..self.dim)
                    .map(|j| z[j] * (sum[j] / *count as f64 - self.global_sum[j] / gn))
                    .sum();
                (c, score)
            })
            .collect();
        Prediction::from_scores(scores)
    }

    fn num_classes(&self) -> usize {
        self.class_sums.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn prcpt_initializes_to_first_sample() {
        let mut p = Prcpt::new(2);
        p.observe(&[0.5, -1.0], 3).unwrap();
        assert_eq!(p.weight(3).unwrap(), &[0.5, -1.0]);
    }

    #[test]
    fn prcpt_correct_prediction_leaves_state_unchanged() {
        let mut p = Prcpt::new(2);
        p.observe(&[1.0, 0.0], 0).unwrap();
        p.observe(&[0.0, 1.0], 1).unwrap();
        let before = (p.weight(0).unwrap().to_vec(), p.weight(1).unwrap().to_vec());
        // [2, 0] scores 2 for class 0 and 0 for class 1; already correct
        p.observe(&[2.0, 0.0], 0).unwrap();
        assert_eq!(p.weight(0).unwrap(), before.0.as_slice());
        assert_eq!(p.weight(1).unwrap(), before.1.as_slice());
    }

    #[test]
    fn prcpt_mistake_updates_both_rows() {
        let mut p = Prcpt::new(2);
        p.observe(&[1.0, 0.0], 0).unwrap();
        p.observe(&[2.0, 0.0], 1).unwrap(); // first sample of class 1
        // query [1, 0] scores: class 0 -> 1, class 1 -> 2; misclassified as 1
        p.observe(&[1.0, 0.0], 0).unwrap();
        assert_eq!(p.weight(0).unwrap(), &[2.0, 0.0]);
        assert_eq!(p.weight(1).unwrap(), &[1.0, 0.0]);
    }

    #[test]
    fn sovr_favors_nearby_class_mean() {
        let mut s = Sovr::new(2);
        for _ in 0..5 {
            s.observe(&[1.0, 0.0], 0).unwrap();
            s.observe(&[-1.0, 0.0], 1).unwrap();
        }
        assert_eq!(s.predict(&[0.8, 0.1]).unwrap().label, 0);
        assert_eq!(s.predict(&[-0.8, 0.1]).unwrap().label, 1);
    }

    #[test]
    fn empty_state_errors() {
        assert!(Prcpt::new(1).predict(&[0.0]).is_err());
        assert!(Sovr::new(1).predict(&[0.0]).is_err());
    }
}
