//! Centroid-based concept learning: multiple prototypes per class, created
//! or merged by a distance threshold, with a per-class prototype budget.

use std::collections::BTreeMap;

use super::{check_dim, ClassId, Learner, Prediction};
use crate::error::{Error, Result};
use crate::linalg::l2_dist_sq;

#[derive(Debug, Clone)]
pub struct Cbcl {
    dim: usize,
    threshold: f64,
    max_prototypes: usize,
    classes: BTreeMap<ClassId, CbclClass>,
}

#[derive(Debug, Clone, Default)]
struct CbclClass {
    prototypes: Vec<(Vec<f64>, u64)>,
    total_count: u64,
}

impl CbclClass {
    /// Count-weighted merge of prototypes `i` and `j` (i < j).
    fn merge(&mut self, i: usize, j: usize) {
        let (pj, cj) = self.prototypes.remove(j);
        let (pi, ci) = &mut self.prototypes[i];
        let total = (*ci + cj) as f64;
        for (a, b) in pi.iter_mut().zip(&pj) {
            *a = (*a * *ci as f64 + b * cj as f64) / total;
        }
        *ci += cj;
    }

    /// Indices of the two mutually closest prototypes.
    fn closest_pair(&self) -> (usize, usize) {
        let mut best = (0, 1);
        let mut best_d = f64::INFINITY;
        for i in 0..self.prototypes.len() {
            for j in (i + 1)..self.prototypes.len() {
                let d = l2_dist_sq(&self.prototypes[i].0, &self.prototypes[j].0);
                if d < best_d {
                    best_d = d;
                    best = (i, j);
                }
            }
        }
        best
    }
}

impl Cbcl {
    pub fn new(dim: usize, threshold: f64, max_prototypes: usize) -> Self {
        Cbcl { dim, threshold, max_prototypes, classes: BTreeMap::new() }
    }

    pub fn prototype_count(&self, c: ClassId) -> usize {
        self.classes.get(&c).map_or(0, |cls| cls.prototypes.len())
    }

    pub fn prototype_counts(&self) -> impl Iterator<Item = (ClassId, &Vec<(Vec<f64>, u64)>)> {
        self.classes.iter().map(|(&c, cls)| (c, &cls.prototypes))
    }
}

impl Learner for Cbcl {
    fn observe(&mut self, z: &[f64], y: ClassId) -> Result<()> {
        check_dim(self.dim, z)?;
        let cls = self.classes.entry(y).or_default();
        cls.total_count += 1;
        if cls.prototypes.is_empty() {
            cls.prototypes.push((z.to_vec(), 1));
            return Ok(());
        }
        let (nearest, dist) = cls
            .prototypes
            .iter()
            .enumerate()
            .map(|(i, (p, _))| (i, l2_dist_sq(p, z).sqrt()))
            .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
            .unwrap();
        if dist < self.threshold {
            let (p, count) = &mut cls.prototypes[nearest];
            let t = *count as f64;
            for (a, &b) in p.iter_mut().zip(z) {
                *a = (t * *a + b) / (t + 1.0);
            }
            *count += 1;
        } else {
            cls.prototypes.push((z.to_vec(), 1));
            if cls.prototypes.len() > self.max_prototypes {
                let (i, j) = cls.closest_pair();
                cls.merge(i, j);
            }
        }
        Ok(())
    }

    fn predict(&self, z: &[f64]) -> Result<Prediction> {
        check_dim(self.dim, z)?;
        if self.classes.is_empty() {
            return Err(Error::State("cbcl predict with no classes".into()));
        }
        // nearest prototype with the distance scaled inversely to the class
        // sample count; score is the negated scaled distance
        let scores = self
            .classes
            .iter()
            .map(|(&c, cls)| {
                let nearest = cls
                    .prototypes
                    .iter()
                    .map(|(p, _)| l2_dist_sq(p, z).sqrt())
                    .fold(f64::INFINITY, f64::min);
                (c, -nearest / cls.total_count as f64)
            })
            .collect();
        Prediction::from_scores(scores)
    }

    fn num_classes(&self) -> usize {
        self.classes.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngStream;

    #[test]
    fn near_samples_merge_into_one_prototype() {
        let mut c = Cbcl::new(1, 17.0, 44);
        c.observe(&[0.0], 0).unwrap();
        c.observe(&[2.0], 0).unwrap(); // within threshold, merges -> mean 1.0
        assert_eq!(c.prototype_count(0), 1);
        let protos = c.prototype_counts().next().unwrap().1;
        assert_eq!(protos[0], (vec![1.0], 2));
    }

    #[test]
    fn far_samples_spawn_prototypes() {
        let mut c = Cbcl::new(1, 1.0, 44);
        c.observe(&[0.0], 0).unwrap();
        c.observe(&[10.0], 0).unwrap();
        assert_eq!(c.prototype_count(0), 2);
    }

    #[test]
    fn budget_is_never_exceeded() {
        let mut rng = RngStream::new(17, "cbcl/budget");
        let mut c = Cbcl::new(2, 0.01, 5);
        for _ in 0..200 {
            let z: Vec<f64> = (0..2).map(|_| rng.gaussian() * 100.0).collect();
            c.observe(&z, 0).unwrap();
        }
        assert!(c.prototype_count(0) <= 5);
        for (_, protos) in c.prototype_counts() {
            assert!(protos.iter().all(|(_, count)| *count >= 1));
        }
    }

    #[test]
    fn prediction_weights_by_class_count() {
        let mut c = Cbcl::new(1, 0.5, 44);
        // class 0 seen 4 times at 0, class 1 once at 10
        for _ in 0..4 {
            c.observe(&[0.0], 0).unwrap();
        }
        c.observe(&[10.0], 1).unwrap();
        // query at 6: raw distances 6 vs 4, scaled 6/4 vs 4/1 -> class 0
        assert_eq!(c.predict(&[6.0]).unwrap().label, 0);
    }
}
