//! Nearest-class-mean: one running prototype per class, ℓ2 prediction.

use std::collections::BTreeMap;

use super::{check_dim, ClassId, Learner, Prediction};
use crate::error::{Error, Result};
use crate::linalg::l2_dist_sq;

/// Per-class running mean and observation counter.
#[derive(Debug, Clone, Default)]
pub struct PrototypeTable {
    // BTreeMap keeps class iteration in ascending id order (tie rule).
    entries: BTreeMap<ClassId, (Vec<f64>, u64)>,
}

impl PrototypeTable {
    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn get(&self, c: ClassId) -> Option<(&[f64], u64)> {
        self.entries.get(&c).map(|(m, t)| (m.as_slice(), *t))
    }

    pub fn iter(&self) -> impl Iterator<Item = (ClassId, &[f64], u64)> {
        self.entries.iter().map(|(&c, (m, t))| (c, m.as_slice(), *t))
    }

    /// Fold one sample into class `y`'s running mean.
    pub fn update(&mut self, y: ClassId, z: &[f64]) -> Result<()> {
        if let Some((m, t)) = self.entries.get_mut(&y) {
            let (m2, t2) = update_running_mean(m, *t, z)?;
            *m = m2;
            *t = t2;
        } else {
            self.entries.insert(y, (z.to_vec(), 1));
        }
        Ok(())
    }
}

/// m' = (t·m + z)/(t+1); t = 0 means unseen and yields (z, 1).
pub fn update_running_mean(m: &[f64], t: u64, z: &[f64]) -> Result<(Vec<f64>, u64)> {
    if t == 0 {
        return Ok((z.to_vec(), 1));
    }
    if m.len() != z.len() {
        return Err(Error::Contract(format!(
            "running-mean dim mismatch: {} vs {}",
            m.len(),
            z.len()
        )));
    }
    let tf = t as f64;
    let m2 = m
        .iter()
        .zip(z)
        .map(|(mi, zi)| (tf * mi + zi) / (tf + 1.0))
        .collect();
    Ok((m2, t + 1))
}

/// Label of the nearest prototype by ℓ2 distance (scores are −distance).
pub fn ncm_predict(prototypes: &PrototypeTable, z: &[f64]) -> Result<Prediction> {
    if prototypes.is_empty() {
        return Err(Error::State("ncm_predict on empty prototype table".into()));
    }
    let scores = prototypes
        .iter()
        .map(|(c, m, _)| (c, -l2_dist_sq(m, z).sqrt()))
        .collect();
    Prediction::from_scores(scores)
}

#[derive(Debug, Clone, Default)]
pub struct Ncm {
    dim: usize,
    prototypes: PrototypeTable,
}

impl Ncm {
    pub fn new(dim: usize) -> Self {
        Ncm { dim, prototypes: PrototypeTable::default() }
    }

    pub fn prototypes(&self) -> &PrototypeTable {
        &self.prototypes
    }
}

impl Learner for Ncm {
    fn observe(&mut self, z: &[f64], y: ClassId) -> Result<()> {
        check_dim(self.dim, z)?;
        self.prototypes.update(y, z)
    }

    fn predict(&self, z: &[f64]) -> Result<Prediction> {
        check_dim(self.dim, z)?;
        ncm_predict(&self.prototypes, z)
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
    fn first_sample_initializes() {
        let mut ncm = Ncm::new(2);
        ncm.observe(&[1.0, 2.0], 7).unwrap();
        let (m, t) = ncm.prototypes().get(7).unwrap();
        assert_eq!(m, &[1.0, 2.0]);
        assert_eq!(t, 1);
    }

    #[test]
    fn two_sample_mean() {
        let (m, t) = update_running_mean(&[1.0], 1, &[3.0]).unwrap();
        assert_eq!(m, vec![2.0]);
        assert_eq!(t, 2);
    }

    #[test]
    fn dim_mismatch_is_contract_error() {
        assert!(update_running_mean(&[1.0], 1, &[1.0, 2.0]).is_err());
        let mut ncm = Ncm::new(2);
        assert!(ncm.observe(&[1.0], 0).is_err());
    }

    #[test]
    fn stream_matches_batch_mean() {
        let mut rng = RngStream::new(100, "ncm/batch");
        let samples: Vec<Vec<f64>> =
            (0..100).map(|_| (0..8).map(|_| rng.gaussian()).collect()).collect();
        let mut ncm = Ncm::new(8);
        for s in &samples {
            ncm.observe(s, 0).unwrap();
        }
        let (m, t) = ncm.prototypes().get(0).unwrap();
        assert_eq!(t, 100);
        for j in 0..8 {
            let batch: f64 = samples.iter().map(|s| s[j]).sum::<f64>() / 100.0;
            assert!((m[j] - batch).abs() <= 1e-6 * batch.abs().max(1e-12));
        }
    }

    #[test]
    fn nearest_prototype_and_tie_rule() {
        let mut t = PrototypeTable::default();
        t.update(0, &[0.0, 0.0]).unwrap();
        t.update(1, &[10.0, 0.0]).unwrap();
        assert_eq!(ncm_predict(&t, &[1.0, 0.0]).unwrap().label, 0);
        // equidistant -> lower class id
        assert_eq!(ncm_predict(&t, &[5.0, 0.0]).unwrap().label, 0);
        assert!(ncm_predict(&PrototypeTable::default(), &[0.0]).is_err());
    }

    #[test]
    fn matches_exhaustive_scan() {
        let mut rng = RngStream::new(55, "ncm/scan");
        let mut ncm = Ncm::new(6);
        let mut protos = Vec::new();
        for c in 0..20u32 {
            let m: Vec<f64> = (0..6).map(|_| rng.gaussian() * 3.0).collect();
            ncm.observe(&m, c).unwrap();
            protos.push((c, m));
        }
        for _ in 0..200 {
            let q: Vec<f64> = (0..6).map(|_| rng.gaussian() * 3.0).collect();
            let got = ncm.predict(&q).unwrap().label;
            let want = protos
                .iter()
                .min_by(|a, b| {
                    crate::linalg::l2_dist_sq(&a.1, &q)
                        .partial_cmp(&crate::linalg::l2_dist_sq(&b.1, &q))
                        .unwrap()
                })
                .unwrap()
                .0;
            assert_eq!(got, want);
        }
    }
}
