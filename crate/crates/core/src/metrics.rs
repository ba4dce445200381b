//! Continual-learning metrics over the per-task accuracy matrix: final
//! accuracy, room-aware relative gain, backward transfer, forgetting,
//! plasticity, plus timing pass-through.

use crate::error::{Error, Result};

/// K×K lower-triangular matrix of percent accuracies: entry [t][k] is the
/// accuracy on task k's test classes measured after training task t.
#[derive(Debug, Clone, PartialEq)]
pub struct AccuracyMatrix {
    rows: Vec<Vec<f64>>,
}

impl AccuracyMatrix {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        for (t, row) in rows.iter().enumerate() {
            if row.len() != t + 1 {
                return Err(Error::Contract(format!(
                    "row {t} has {} entries, expected {}",
                    row.len(),
                    t + 1
                )));
            }
            if let Some(bad) = row.iter().find(|v| !(0.0..=100.0).contains(*v)) {
                return Err(Error::Data(format!("accuracy {bad} outside [0,100]")));
            }
        }
        Ok(AccuracyMatrix { rows })
    }

    pub fn num_tasks(&self) -> usize {
        self.rows.len()
    }

    pub fn get(&self, t: usize, k: usize) -> f64 {
        self.rows[t][k]
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }
}

/// Room-aware relative gain: 100·(acc_new − acc_base)/(100 − acc_base).
pub fn rarg(acc_base: f64, acc_new: f64) -> Result<f64> {
    if acc_base >= 100.0 {
        return Err(Error::Undefined(format!(
            "rarg undefined for baseline accuracy {acc_base} (no room)"
        )));
    }
    Ok(100.0 * (acc_new - acc_base) / (100.0 - acc_base))
}

/// Backward transfer: mean over all but the last task of (final-row
/// accuracy − just-learned diagonal accuracy).
pub fn bwt(r: &AccuracyMatrix) -> Result<f64> {
    let k = r.num_tasks();
    if k < 2 {
        return Err(Error::Contract("bwt requires at least 2 tasks".into()));
    }
    let sum: f64 = (0..k - 1).map(|t| r.get(k - 1, t) - r.get(t, t)).sum();
    Ok(sum / (k - 1) as f64)
}

/// Forgetting: mean over all but the last task of (best previous accuracy −
/// final accuracy). Raw differences; a task that improved contributes a
/// negative term unless `clamp` is set.
pub fn forgetting(r: &AccuracyMatrix, clamp: bool) -> Result<f64> {
    let k = r.num_tasks();
    if k < 2 {
        return Err(Error::Contract("forgetting requires at least 2 tasks".into()));
    }
    let sum: f64 = (0..k - 1)
        .map(|task| {
            let best = (task..k - 1)
                .map(|t| r.get(t, task))
                .fold(f64::NEG_INFINITY, f64::max);
            let diff = best - r.get(k - 1, task);
            if clamp {
                diff.max(0.0)
            } else {
                diff
            }
        })
        .sum();
    Ok(sum / (k - 1) as f64)
}

/// Plasticity: mean diagonal (accuracy on each task right after learning it).
pub fn plasticity(r: &AccuracyMatrix) -> Result<f64> {
    let k = r.num_tasks();
    if k == 0 {
        return Err(Error::Contract("plasticity of an empty matrix".into()));
    }
    Ok((0..k).map(|t| r.get(t, t)).sum::<f64>() / k as f64)
}

/// Scalar report for one run.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    pub acc_final: f64,
    pub rarg_vs_baseline: Option<f64>,
    pub bwt: f64,
    pub forg: f64,
    pub pla: f64,
    /// Always 0: incremental steps contain disjoint classes.
    pub fwt: f64,
    pub ttime_min: f64,
    pub fps: f64,
}

/// Final sample-weighted accuracy from per-task (correct, total) counts at
/// the last step.
pub fn final_accuracy(per_task_counts: &[(u64, u64)]) -> Result<f64> {
    let total: u64 = per_task_counts.iter().map(|&(_, n)| n).sum();
    if total == 0 {
        return Err(Error::Data("final accuracy over an empty test set".into()));
    }
    let correct: u64 = per_task_counts.iter().map(|&(c, _)| c).sum();
    Ok(100.0 * correct as f64 / total as f64)
}
