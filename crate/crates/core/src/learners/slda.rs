//! Streaming LDA: shared running covariance, shrunk inverse, linear scores.
//!
//! The covariance update uses the pre-update class prototype (an unseen
//! class contributes a deviation from the zero vector, matching the
//! streaming-LDA reference behavior), after which the prototype itself is
//! updated and the sample counter advances.

use std::sync::Mutex;

use super::ncm::{ncm_predict, PrototypeTable};
use super::{check_dim, ClassId, Learner, Prediction};
use crate::error::{Error, Result};
use crate::linalg::{dot, shrunk_inverse, SymMatrix};

/// Σ_{n+1} = (nΣ_n + δ_n)/(n+1) with δ_n = n(z−m_y)(z−m_y)ᵀ/(n+1).
pub fn update_running_covariance(
    sigma: &SymMatrix,
    n: u64,
    z: &[f64],
    m_y: &[f64],
) -> Result<SymMatrix> {
    let dim = sigma.dim();
    if z.len() != dim || m_y.len() != dim {
        return Err(Error::Contract(format!(
            "covariance dim {dim} vs z {} / m {}",
            z.len(),
            m_y.len()
        )));
    }
    let nf = n as f64;
    let diff: Vec<f64> = z.iter().zip(m_y).map(|(a, b)| a - b).collect();
    let mut out = sigma.clone();
    out.scale(nf / (nf + 1.0));
    // δ_n/(n+1) = n/(n+1)^2 · diff diffᵀ
    out.add_outer(&diff, nf / ((nf + 1.0) * (nf + 1.0)));
    Ok(out)
}

/// Materialized linear head: per-class weight rows and offsets.
#[derive(Debug, Clone)]
pub struct SldaWeights {
    pub classes: Vec<ClassId>,
    pub rows: Vec<Vec<f64>>,
    pub offsets: Vec<f64>,
}

impl SldaWeights {
    /// w_c = Λ m_c, b_c = −0.5 (m_c · w_c) with Λ = [(1−ε)Σ + εI]⁻¹.
    pub fn materialize(
        prototypes: &PrototypeTable,
        sigma: &SymMatrix,
        epsilon: f64,
    ) -> Result<Self> {
        if prototypes.is_empty() {
            return Err(Error::State("slda_weights with no classes".into()));
        }
        let lambda = shrunk_inverse(sigma, epsilon)?;
        let mut classes = Vec::new();
        let mut rows = Vec::new();
        let mut offsets = Vec::new();
        for (c, m, _) in prototypes.iter() {
            let w = lambda.mat_vec(m);
            offsets.push(-0.5 * dot(m, &w));
            rows.push(w);
            classes.push(c);
        }
        Ok(SldaWeights { classes, rows, offsets })
    }

    pub fn predict(&self, z: &[f64]) -> Result<Prediction> {
        let scores = self
            .classes
            .iter()
            .zip(self.rows.iter().zip(&self.offsets))
            .map(|(&c, (w, &b))| (c, dot(w, z) + b))
            .collect();
        Prediction::from_scores(scores)
    }
}

#[derive(Debug)]
pub struct Slda {
    dim: usize,
    epsilon: f64,
    prototypes: PrototypeTable,
    sigma: SymMatrix,
    n: u64,
    /// Weights are a pure function of (prototypes, sigma); recomputed lazily
    /// and invalidated on every observe.
    cache: Mutex<Option<SldaWeights>>,
    /// Test hook: predict as if Σ were the identity.
    identity_sigma: bool,
}

impl Slda {
    pub fn new(dim: usize, epsilon: f64) -> Self {
        Slda {
            dim,
            epsilon,
            prototypes: PrototypeTable::default(),
            sigma: SymMatrix::zeros(dim),
            n: 0,
            cache: Mutex::new(None),
            identity_sigma: false,
        }
    }

    /// Force Σ = I at prediction time (the NCM special case).
    pub fn with_identity_sigma(mut self) -> Self {
        self.identity_sigma = true;
        self
    }

    pub fn sigma(&self) -> &SymMatrix {
        &self.sigma
    }

    pub fn prototypes(&self) -> &PrototypeTable {
        &self.prototypes
    }

    pub fn samples_seen(&self) -> u64 {
        self.n
    }

    pub fn weights(&self) -> Result<SldaWeights> {
        let mut cache = self.cache.lock().unwrap();
        if let Some(w) = cache.as_ref() {
            return Ok(w.clone());
        }
        let sigma = if self.identity_sigma {
            SymMatrix::identity(self.dim)
        } else {
            self.sigma.clone()
        };
        let w = SldaWeights::materialize(&self.prototypes, &sigma, self.epsilon)?;
        *cache = Some(w.clone());
        Ok(w)
    }
}

impl Learner for Slda {
    fn observe(&mut self, z: &[f64], y: ClassId) -> Result<()> {
        check_dim(self.dim, z)?;
        let zero;
        let m_y: &[f64] = match self.prototypes.get(y) {
            Some((m, _)) => m,
            None => {
                zero = vec![0.0; self.dim];
                &zero
            }
        };
        self.sigma = update_running_covariance(&self.sigma, self.n, z, m_y)?;
        self.prototypes.update(y, z)?;
        self.n += 1;
        *self.cache.lock().unwrap() = None;
        Ok(())
    }

    fn predict(&self, z: &[f64]) -> Result<Prediction> {
        check_dim(self.dim, z)?;
        if self.identity_sigma {
            // same labels as the linear head with Σ = I, but exact
            return ncm_predict(&self.prototypes, z);
        }
        self.weights()?.predict(z)
    }

    fn num_classes(&self) -> usize {
        self.prototypes.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngStream;

    #[test]
    fn covariance_base_cases() {
        // n = 0 zeroes the update entirely
        let s = update_running_covariance(&SymMatrix::zeros(2), 0, &[3.0, 1.0], &[0.0, 0.0])
            .unwrap();
        assert!(s.data().iter().all(|&v| v == 0.0));
        // scalar arithmetic: delta = 1·4/2 = 2, sigma' = (0 + 2)/2 = 1
        let s = update_running_covariance(&SymMatrix::zeros(1), 1, &[2.0], &[0.0]).unwrap();
        assert!((s.get(0, 0) - 1.0).abs() < 1e-12);
        assert!(update_running_covariance(&SymMatrix::zeros(2), 1, &[1.0], &[0.0, 0.0]).is_err());
    }

    #[test]
    fn stream_matches_replay_oracle() {
        let mut rng = RngStream::new(500, "slda/replay");
        let dim = 4;
        let mut slda = Slda::new(dim, 1e-4);
        // independent replay: track means and covariance with direct sums
        let mut oracle_sigma = vec![0.0f64; dim * dim];
        let mut oracle_means: std::collections::BTreeMap<u32, (Vec<f64>, f64)> =
            Default::default();
        let mut n = 0.0f64;
        for i in 0..500 {
            let y = (i % 2) as u32;
            let z: Vec<f64> = (0..dim).map(|_| rng.gaussian() + y as f64 * 2.0).collect();
            let zero = vec![0.0; dim];
            let m = oracle_means.get(&y).map(|(m, _)| m.clone()).unwrap_or(zero);
            for a in 0..dim {
                for b in 0..dim {
                    let delta = n * (z[a] - m[a]) * (z[b] - m[b]) / (n + 1.0);
                    oracle_sigma[a * dim + b] =
                        (n * oracle_sigma[a * dim + b] + delta) / (n + 1.0);
                }
            }
            let e = oracle_means.entry(y).or_insert((vec![0.0; dim], 0.0));
            let t = e.1;
            for j in 0..dim {
                e.0[j] = (t * e.0[j] + z[j]) / (t + 1.0);
            }
            e.1 += 1.0;
            n += 1.0;
            slda.observe(&z, y).unwrap();
        }
        for a in 0..dim {
            for b in 0..dim {
                let got = slda.sigma().get(a, b);
                let want = oracle_sigma[a * dim + b];
                assert!(
                    (got - want).abs() <= 1e-6 * want.abs().max(1e-9),
                    "({a},{b}): {got} vs {want}"
                );
            }
        }
    }

    #[test]
    fn zero_sigma_closed_form_weights() {
        // Σ = 0 so the shrunk matrix is εI and Λ = I/ε
        let eps = 1e-4;
        let mut slda = Slda::new(2, eps);
        slda.observe(&[1.0, 0.0], 0).unwrap();
        // after one observation Σ is still 0 (n was 0)
        let w = slda.weights().unwrap();
        assert!((w.rows[0][0] - 1.0 / eps).abs() < 1e-6 / eps);
        assert!(w.rows[0][1].abs() < 1e-9);
        assert!((w.offsets[0] + 0.5 / eps).abs() < 1e-6 / eps);
    }

    #[test]
    fn identity_sigma_matches_ncm_labels() {
        let mut rng = RngStream::new(9, "slda/id");
        let dim = 3;
        let mut slda = Slda::new(dim, 1e-4).with_identity_sigma();
        let mut ncm = super::super::Ncm::new(dim);
        for i in 0..60 {
            let y = (i % 3) as u32;
            let z: Vec<f64> = (0..dim).map(|_| rng.gaussian() + y as f64).collect();
            slda.observe(&z, y).unwrap();
            ncm.observe(&z, y).unwrap();
        }
        // also check the materialized linear head agrees, not just the
        // exact ncm shortcut
        let weights = slda.weights().unwrap();
        for _ in 0..500 {
            let q: Vec<f64> = (0..dim).map(|_| rng.gaussian() * 2.0).collect();
            assert_eq!(slda.predict(&q).unwrap().label, ncm.predict(&q).unwrap().label);
            assert_eq!(weights.predict(&q).unwrap().label, ncm.predict(&q).unwrap().label);
        }
    }

    #[test]
    fn weights_match_dense_oracle() {
        let mut rng = RngStream::new(13, "slda/dense");
        let dim = 5;
        let mut slda = Slda::new(dim, 1e-4);
        for i in 0..200 {
            let y = (i % 5) as u32;
            let z: Vec<f64> = (0..dim).map(|j| rng.gaussian() + ((y as usize + j) % 5) as f64).collect();
            slda.observe(&z, y).unwrap();
        }
        let w = slda.weights().unwrap();
        // dense oracle: Λ m_c via Cholesky solve on the shrunk matrix
        let shrunk = crate::linalg::shrunk(slda.sigma(), 1e-4).unwrap();
        let chol = shrunk.cholesky().unwrap();
        for (i, (c, m, _)) in slda.prototypes().iter().enumerate() {
            assert_eq!(w.classes[i], c);
            let mut want = m.to_vec();
            chol.solve(&mut want);
            for j in 0..dim {
                assert!(
                    (w.rows[i][j] - want[j]).abs() <= 1e-5 * want[j].abs().max(1e-9),
                    "class {c} coord {j}"
                );
            }
        }
    }

    #[test]
    fn predict_without_classes_is_state_error() {
        let slda = Slda::new(2, 1e-4);
        assert!(matches!(slda.predict(&[0.0, 0.0]), Err(Error::State(_))));
    }
}
