//! Streaming classifiers. Every learner consumes one embedding at a time
//! (`observe`) and predicts over all classes seen so far (`predict`); no
//! learner revisits past samples except the explicit replay buffer.

mod cbcl;
mod gaussian;
mod gradient;
mod ncm;
mod perceptron;
mod slda;

pub use cbcl::Cbcl;
pub use gaussian::{Snb, Sqda};
pub use gradient::{BufferPolicy, Ft, Icarl};
pub use ncm::{ncm_predict, update_running_mean, Ncm, PrototypeTable};
pub use perceptron::{Prcpt, Sovr};
pub use slda::{update_running_covariance, Slda, SldaWeights};

use crate::error::{Error, Result};
use crate::rng::RngStream;

pub type ClassId = u32;

/// Scores per known class plus the argmax label. Ties go to the lowest
/// class id.
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub scores: Vec<(ClassId, f64)>,
    pub label: ClassId,
}

impl Prediction {
    /// Build from per-class scores; classes must be listed in ascending id
    /// order so the tie rule is deterministic.
    pub fn from_scores(scores: Vec<(ClassId, f64)>) -> Result<Self> {
        if scores.is_empty() {
            return Err(Error::State("prediction over zero classes".into()));
        }
        debug_assert!(scores.windows(2).all(|w| w[0].0 < w[1].0));
        let mut best = scores[0];
        for &(c, s) in &scores[1..] {
            if s > best.1 {
                best = (c, s);
            }
        }
        Ok(Prediction { label: best.0, scores })
    }
}

/// One streaming sample in, one state transition out. `predict` is
/// read-only and may run concurrently with other predicts, never with
/// `observe`.
pub trait Learner: Send + Sync {
    fn observe(&mut self, z: &[f64], y: ClassId) -> Result<()>;
    fn predict(&self, z: &[f64]) -> Result<Prediction>;
    /// Number of classes seen so far.
    fn num_classes(&self) -> usize;
}

/// Selector plus hyperparameters for constructing a learner.
#[derive(Debug, Clone, PartialEq)]
pub struct LearnerSpec {
    pub kind: LearnerKind,
    /// Covariance shrinkage (SLDA/SQDA).
    pub epsilon: f64,
    /// SGD learning rate (FT/iCaRL).
    pub lr: f64,
    /// Replay buffer capacity (iCaRL fixed-size variant).
    pub buffer: usize,
    pub cbcl_threshold: f64,
    pub cbcl_max: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LearnerKind {
    Ncm,
    Slda,
    Sqda,
    Snb,
    Prcpt,
    Sovr,
    Cbcl,
    Ft,
    Icarl,
    Icarl2pc,
}

impl LearnerKind {
    pub fn parse(s: &str) -> Result<Self> {
        Ok(match s {
            "ncm" => LearnerKind::Ncm,
            "slda" => LearnerKind::Slda,
            "sqda" => LearnerKind::Sqda,
            "snb" => LearnerKind::Snb,
            "prcpt" => LearnerKind::Prcpt,
            "sovr" => LearnerKind::Sovr,
            "cbcl" => LearnerKind::Cbcl,
            "ft" => LearnerKind::Ft,
            "icarl" => LearnerKind::Icarl,
            "icarl2pc" => LearnerKind::Icarl2pc,
            other => return Err(Error::Contract(format!("unknown learner kind {other:?}"))),
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            LearnerKind::Ncm => "ncm",
            LearnerKind::Slda => "slda",
            LearnerKind::Sqda => "sqda",
            LearnerKind::Snb => "snb",
            LearnerKind::Prcpt => "prcpt",
            LearnerKind::Sovr => "sovr",
            LearnerKind::Cbcl => "cbcl",
            LearnerKind::Ft => "ft",
            LearnerKind::Icarl => "icarl",
            LearnerKind::Icarl2pc => "icarl2pc",
        }
    }
}

impl Default for LearnerSpec {
    fn default() -> Self {
        LearnerSpec {
            kind: LearnerKind::Ncm,
            epsilon: 1e-4,
            lr: 0.01,
            buffer: 1000,
            cbcl_threshold: 17.0,
            cbcl_max: 44,
        }
    }
}

impl LearnerSpec {
    /// Instantiate the learner for embeddings of dimension `dim`. The RNG
    /// is consumed only by the replay variants.
    pub fn build(&self, dim: usize, rng: &RngStream) -> Box<dyn Learner> {
        match self.kind {
            LearnerKind::Ncm => Box::new(Ncm::new(dim)),
            LearnerKind::Slda => Box::new(Slda::new(dim, self.epsilon)),
            LearnerKind::Sqda => Box::new(Sqda::new(dim, self.epsilon)),
            LearnerKind::Snb => Box::new(Snb::new(dim)),
            LearnerKind::Prcpt => Box::new(Prcpt::new(dim)),
            LearnerKind::Sovr => Box::new(Sovr::new(dim)),
            LearnerKind::Cbcl => Box::new(Cbcl::new(dim, self.cbcl_threshold, self.cbcl_max)),
            LearnerKind::Ft => Box::new(Ft::new(dim, self.lr)),
            LearnerKind::Icarl => Box::new(Icarl::new(
                dim,
                self.lr,
                BufferPolicy::Fixed(self.buffer),
                rng.substream("icarl"),
            )),
            LearnerKind::Icarl2pc => Box::new(Icarl::new(
                dim,
                self.lr,
                BufferPolicy::PerClass(2),
                rng.substream("icarl2pc"),
            )),
        }
    }
}

pub(crate) fn check_dim(expected: usize, z: &[f64]) -> Result<()> {
    if z.len() != expected {
        return Err(Error::Contract(format!(
            "embedding dim {} does not match learner dim {expected}",
            z.len()
        )));
    }
    Ok(())
}
