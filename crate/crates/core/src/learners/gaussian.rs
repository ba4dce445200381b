//! Gaussian discriminant learners: SQDA (per-class full covariance) and
//! streaming naive Bayes (per-class diagonal variance via Welford).

use std::collections::BTreeMap;

use super::slda::update_running_covariance;
use super::{check_dim, ClassId, Learner, Prediction};
use crate::error::{Error, Result};
use crate::linalg::{shrunk, SymMatrix};

/// Quadratic discriminant with one running covariance per class, shrunk
/// with the same ε as SLDA (raw per-class covariances are singular in the
/// few-shot regime).
#[derive(Debug)]
pub struct Sqda {
    dim: usize,
    epsilon: f64,
    classes: BTreeMap<ClassId, SqdaClass>,
}

#[derive(Debug, Clone)]
struct SqdaClass {
    mean: Vec<f64>,
    sigma: SymMatrix,
    count: u64,
}

impl Sqda {
    pub fn new(dim: usize, epsilon: f64) -> Self {
        Sqda { dim, epsilon, classes: BTreeMap::new() }
    }
}

impl Learner for Sqda {
    fn observe(&mut self, z: &[f64], y: ClassId) -> Result<()> {
        check_dim(self.dim, z)?;
        match self.classes.get_mut(&y) {
            None => {
                self.classes.insert(
                    y,
                    SqdaClass { mean: z.to_vec(), sigma: SymMatrix::zeros(self.dim), count: 1 },
                );
            }
            Some(cls) => {
                // per-class covariance first (pre-update mean), then the mean
                cls.sigma = update_running_covariance(&cls.sigma, cls.count, z, &cls.mean)?;
                let t = cls.count as f64;
                for (m, &v) in cls.mean.iter_mut().zip(z) {
                    *m = (t * *m + v) / (t + 1.0);
                }
                cls.count += 1;
            }
        }
        Ok(())
    }

    fn predict(&self, z: &[f64]) -> Result<Prediction> {
        check_dim(self.dim, z)?;
        if self.classes.is_empty() {
            return Err(Error::State("sqda predict with no classes".into()));
        }
        let mut scores = Vec::with_capacity(self.classes.len());
        for (&c, cls) in &self.classes {
            let shrunk_sigma = shrunk(&cls.sigma, self.epsilon)?;
            let chol = shrunk_sigma.cholesky()?;
            let mut diff: Vec<f64> = z.iter().zip(&cls.mean).map(|(a, b)| a - b).collect();
            let orig = diff.clone();
            chol.solve(&mut diff);
            let maha: f64 = orig.iter().zip(&diff).map(|(a, b)| a * b).sum();
            scores.push((c, -0.5 * chol.log_det() - 0.5 * maha));
        }
        Prediction::from_scores(scores)
    }

    fn num_classes(&self) -> usize {
        self.classes.len()
    }
}

/// Streaming Gaussian naive Bayes: per-class Welford mean/variance vectors.
#[derive(Debug, Clone)]
pub struct Snb {
    dim: usize,
    sigma_floor: f64,
    classes: BTreeMap<ClassId, WelfordVec>,
}

#[derive(Debug, Clone)]
struct WelfordVec {
    mean: Vec<f64>,
    m2: Vec<f64>,
    count: u64,
}

impl WelfordVec {
    fn observe(&mut self, z: &[f64]) {
        self.count += 1;
        let n = self.count as f64;
        for j in 0..z.len() {
            let delta = z[j] - self.mean[j];
            self.mean[j] += delta / n;
            self.m2[j] += delta * (z[j] - self.mean[j]);
        }
    }

    /// Population variance (divisor N).
    fn variance(&self, j: usize) -> f64 {
        self.m2[j] / self.count as f64
    }
}

impl Snb {
    pub fn new(dim: usize) -> Self {
        Snb { dim, sigma_floor: 1e-12, classes: BTreeMap::new() }
    }

    pub fn with_sigma_floor(mut self, sigma_floor: f64) -> Self {
        self.sigma_floor = sigma_floor;
        self
    }

    pub fn class_stats(&self, c: ClassId) -> Option<(&[f64], Vec<f64>, u64)> {
        self.classes.get(&c).map(|w| {
            let vars = (0..self.dim).map(|j| w.variance(j)).collect();
            (w.mean.as_slice(), vars, w.count)
        })
    }
}

impl Learner for Snb {
    fn observe(&mut self, z: &[f64], y: ClassId) -> Result<()> {
        check_dim(self.dim, z)?;
        self.classes
            .entry(y)
            .or_insert_with(|| WelfordVec {
                mean: vec![0.0; self.dim],
                m2: vec![0.0; self.dim],
                count: 0,
            })
            .observe(z);
        Ok(())
    }

    fn predict(&self, z: &[f64]) -> Result<Prediction> {
        check_dim(self.dim, z)?;
        if self.classes.is_empty() {
            return Err(Error::State("snb predict with no classes".into()));
        }
        let var_floor = self.sigma_floor * self.sigma_floor;
        let mut scores = Vec::with_capacity(self.classes.len());
        for (&c, w) in &self.classes {
            let mut score = 0.0;
            for j in 0..self.dim {
                let var = w.variance(j).max(var_floor);
                let diff = z[j] - w.mean[j];
                score += -0.5 * var.ln() - 0.5 * diff * diff / var;
            }
            scores.push((c, score));
        }
        Prediction::from_scores(scores)
    }

    fn num_classes(&self) -> usize {
        self.classes.len()
    }
}
