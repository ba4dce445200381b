//! Class-IID stream protocol: one class per task, samples shuffled within
//! each class, no sample revisited. Drives observe/predict and records the
//! per-step accuracy matrix plus timings.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::learners::{ClassId, Learner, LearnerSpec};
use crate::metrics::{bwt, final_accuracy, forgetting, plasticity, AccuracyMatrix, MetricsReport};
use crate::rng::RngStream;

/// One (sample, label, task) observation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StreamEvent {
    /// Within-class index into the training split.
    pub sample_ref: usize,
    pub label: ClassId,
    pub task: usize,
    pub position: usize,
}

/// Deterministic task ordering: a permutation of the classes plus a shuffled
/// (and shot-truncated) sample list per class.
#[derive(Debug, Clone, PartialEq)]
pub struct TaskSchedule {
    pub ordering: Vec<ClassId>,
    pub per_class: Vec<Vec<usize>>,
    pub seed: u64,
    pub shots: Option<usize>,
}

impl TaskSchedule {
    pub fn num_tasks(&self) -> usize {
        self.ordering.len()
    }

    pub fn events(&self) -> impl Iterator<Item = StreamEvent> + '_ {
        self.ordering.iter().enumerate().flat_map(move |(task, &label)| {
            self.per_class[task]
                .iter()
                .enumerate()
                .map(move |(position, &sample_ref)| StreamEvent {
                    sample_ref,
                    label,
                    task,
                    position,
                })
        })
    }
}

/// Build the class-IID schedule: classes permuted by seed, samples shuffled
/// within each class and truncated to `shots`.
pub fn build_schedule(
    class_ids: &[ClassId],
    per_class_counts: &[usize],
    shots: Option<usize>,
    seed: u64,
) -> Result<TaskSchedule> {
    if class_ids.len() != per_class_counts.len() {
        return Err(Error::Contract("class_ids / counts length mismatch".into()));
    }
    if let Some((i, _)) = per_class_counts.iter().enumerate().find(|(_, &c)| c == 0) {
        return Err(Error::Data(format!("class {} has no training samples", class_ids[i])));
    }
    if shots == Some(0) {
        return Err(Error::Contract("shots must be >= 1 when present".into()));
    }
    let mut rng = RngStream::new(seed, "schedule");
    let mut order_idx: Vec<usize> = (0..class_ids.len()).collect();
    rng.shuffle(&mut order_idx);
    let ordering: Vec<ClassId> = order_idx.iter().map(|&i| class_ids[i]).collect();
    let per_class = order_idx
        .iter()
        .map(|&i| {
            let mut samples = rng
                .substream(&format!("class/{}", class_ids[i]))
                .permutation(per_class_counts[i]);
            if let Some(s) = shots {
                samples.truncate(s);
            }
            samples
        })
        .collect();
    Ok(TaskSchedule { ordering, per_class, seed, shots })
}

/// Anything that can hand out embeddings for schedule positions and test
/// samples. Implementations own their augmentation and pooling randomness
/// via per-sample substreams, so repeated calls are deterministic.
pub trait EmbeddingSource: Sync {
    fn dim(&self) -> usize;
    fn class_ids(&self) -> Vec<ClassId>;
    fn train_count(&self, class: ClassId) -> usize;
    fn train_embedding(&self, class: ClassId, sample_ref: usize) -> Result<Vec<f64>>;
    fn test_len(&self) -> usize;
    fn test_label(&self, index: usize) -> ClassId;
    fn test_embedding(&self, index: usize) -> Result<Vec<f64>>;
}

/// Wall-clock or deterministic virtual time for the timing columns.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Clock {
    Wall,
    /// Fixed cost per processed sample, in microseconds. Makes report files
    /// byte-identical across reruns.
    Fixed { tick_us: u64 },
}

impl Clock {
    fn measure<T>(&self, samples: usize, f: impl FnOnce() -> T) -> (T, f64) {
        match self {
            Clock::Wall => {
                let start = std::time::Instant::now();
                let out = f();
                (out, start.elapsed().as_secs_f64())
            }
            Clock::Fixed { tick_us } => {
                let out = f();
                (out, samples as f64 * *tick_us as f64 * 1e-6)
            }
        }
    }
}

/// Per-task row of the run log.
#[derive(Debug, Clone, PartialEq)]
pub struct StepLog {
    pub task_index: usize,
    pub class_id: ClassId,
    pub seen_classes: usize,
    /// Sample-weighted accuracy over all test samples of seen classes.
    pub acc_seen: f64,
    /// Cumulative training wall time in seconds.
    pub ttime_s: f64,
    /// Inference throughput of this evaluation batch.
    pub fps: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub matrix: AccuracyMatrix,
    pub steps: Vec<StepLog>,
    /// (correct, total) per task at the final step.
    pub final_counts: Vec<(u64, u64)>,
    /// Total training time, seconds.
    pub ttime_s: f64,
    /// Median over evaluation batches of samples per second.
    pub fps: f64,
}

impl RunOutput {
    pub fn metrics(&self) -> Result<MetricsReport> {
        let k = self.matrix.num_tasks();
        Ok(MetricsReport {
            acc_final: final_accuracy(&self.final_counts)?,
            rarg_vs_baseline: None,
            bwt: if k >= 2 { bwt(&self.matrix)? } else { 0.0 },
            forg: if k >= 2 { forgetting(&self.matrix, false)? } else { 0.0 },
            pla: plasticity(&self.matrix)?,
            fwt: 0.0,
            ttime_min: self.ttime_s / 60.0,
            fps: self.fps,
        })
    }
}

/// Feed the stream through the learner task by task, evaluating on all test
/// samples of the classes seen so far after each task.
pub fn run_stream(
    schedule: &TaskSchedule,
    learner: &mut dyn Learner,
    source: &dyn EmbeddingSource,
    clock: Clock,
) -> Result<RunOutput> {
    let k = schedule.num_tasks();
    // test indices grouped by task (position of the label in the ordering)
    let task_of_label: std::collections::HashMap<ClassId, usize> = schedule
        .ordering
        .iter()
        .enumerate()
        .map(|(t, &c)| (c, t))
        .collect();
    let mut test_by_task: Vec<Vec<usize>> = vec![Vec::new(); k];
    for i in 0..source.test_len() {
        let label = source.test_label(i);
        let task = *task_of_label.get(&label).ok_or_else(|| {
            Error::Contract(format!("test label {label} not in the schedule"))
        })?;
        test_by_task[task].push(i);
    }

    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(k);
    let mut steps = Vec::with_capacity(k);
    let mut final_counts = Vec::new();
    let mut ttime_s = 0.0f64;
    let mut fps_samples = Vec::with_capacity(k);

    for (task, &class) in schedule.ordering.iter().enumerate() {
        let refs = &schedule.per_class[task];
        let embeddings: Result<Vec<Vec<f64>>> = refs
            .iter()
            .map(|&r| source.train_embedding(class, r))
            .collect();
        let embeddings = embeddings?;
        let (observed, train_t) = clock.measure(refs.len(), || -> Result<()> {
            for z in &embeddings {
                learner.observe(z, class)?;
            }
            Ok(())
        });
        observed?;
        ttime_s += train_t;

        // evaluate on every test sample whose class has been seen
        let eval_indices: Vec<usize> = (0..=task)
            .flat_map(|t| test_by_task[t].iter().copied())
            .collect();
        let n_eval = eval_indices.len();
        let frozen: &dyn Learner = &*learner;
        let (results, eval_t) = clock.measure(n_eval, || {
            eval_indices
                .par_iter()
                .map(|&i| {
                    let z = source.test_embedding(i)?;
                    let pred = frozen.predict(&z)?;
                    let label = source.test_label(i);
                    Ok((task_of_label[&label], pred.label == label))
                })
                .collect::<Result<Vec<(usize, bool)>>>()
        });
        let results = results?;
        let mut counts = vec![(0u64, 0u64); task + 1];
        for (t, correct) in results {
            counts[t].1 += 1;
            if correct {
                counts[t].0 += 1;
            }
        }
        let mut row = Vec::with_capacity(task + 1);
        for (t, &(c, n)) in counts.iter().enumerate() {
            if n == 0 {
                return Err(Error::Data(format!(
                    "task {t} (class {}) has no test samples",
                    schedule.ordering[t]
                )));
            }
            row.push(100.0 * c as f64 / n as f64);
        }
        let seen_correct: u64 = counts.iter().map(|&(c, _)| c).sum();
        let seen_total: u64 = counts.iter().map(|&(_, n)| n).sum();
        let fps = if eval_t > 0.0 { n_eval as f64 / eval_t } else { 0.0 };
        fps_samples.push(fps);
        steps.push(StepLog {
            task_index: task,
            class_id: class,
            seen_classes: task + 1,
            acc_seen: 100.0 * seen_correct as f64 / seen_total as f64,
            ttime_s,
            fps,
        });
        rows.push(row);
        if task == k - 1 {
            final_counts = counts;
        }
    }

    let fps = median(&mut fps_samples);
    Ok(RunOutput {
        matrix: AccuracyMatrix::new(rows)?,
        steps,
        final_counts,
        ttime_s,
        fps,
    })
}

fn median(values: &mut [f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    values.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// Mean and standard deviation of each metric across orderings.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiRunReport {
    pub runs: Vec<(u64, RunOutput, MetricsReport)>,
    pub mean: MetricsReport,
    pub std: MetricsReport,
}

/// Run `n_orderings` class orderings with seeds base, base+1, ... and report
/// per-metric mean and standard deviation (population).
pub fn multi_ordering_run(
    source: &dyn EmbeddingSource,
    learner_spec: &LearnerSpec,
    shots: Option<usize>,
    base_seed: u64,
    n_orderings: usize,
    clock: Clock,
) -> Result<MultiRunReport> {
    if n_orderings < 1 {
        return Err(Error::Contract("n_orderings must be >= 1".into()));
    }
    let class_ids = source.class_ids();
    let counts: Vec<usize> = class_ids.iter().map(|&c| source.train_count(c)).collect();
    let mut runs = Vec::with_capacity(n_orderings);
    for i in 0..n_orderings {
        let seed = base_seed + i as u64;
        let schedule = build_schedule(&class_ids, &counts, shots, seed)?;
        let mut learner = learner_spec.build(source.dim(), &RngStream::new(seed, "learner"));
        let out = run_stream(&schedule, learner.as_mut(), source, clock)?;
        let metrics = out.metrics()?;
        runs.push((seed, out, metrics));
    }
    let fields: Vec<fn(&MetricsReport) -> f64> = vec![
        |m| m.acc_final,
        |m| m.bwt,
        |m| m.forg,
        |m| m.pla,
        |m| m.fwt,
        |m| m.ttime_min,
        |m| m.fps,
    ];
    let n = runs.len() as f64;
    let stats: Vec<(f64, f64)> = fields
        .iter()
        .map(|get| {
            let mean = runs.iter().map(|(_, _, m)| get(m)).sum::<f64>() / n;
            let var = runs
                .iter()
                .map(|(_, _, m)| (get(m) - mean) * (get(m) - mean))
                .sum::<f64>()
                / n;
            (mean, var.sqrt())
        })
        .collect();
    let pack = |idx: usize, which: fn(&(f64, f64)) -> f64| which(&stats[idx]);
    let mean = MetricsReport {
        acc_final: pack(0, |s| s.0),
        rarg_vs_baseline: None,
        bwt: pack(1, |s| s.0),
        forg: pack(2, |s| s.0),
        pla: pack(3, |s| s.0),
        fwt: pack(4, |s| s.0),
        ttime_min: pack(5, |s| s.0),
        fps: pack(6, |s| s.0),
    };
    let std = MetricsReport {
        acc_final: pack(0, |s| s.1),
        rarg_vs_baseline: None,
        bwt: pack(1, |s| s.1),
        forg: pack(2, |s| s.1),
        pla: pack(3, |s| s.1),
        fwt: pack(4, |s| s.1),
        ttime_min: pack(5, |s| s.1),
        fps: pack(6, |s| s.1),
    };
    Ok(MultiRunReport { runs, mean, std })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learners::{LearnerKind, Prediction};

    /// Vectors handed out directly; class c train sample i is a blob around
    /// a class-specific corner.
    struct BlobSource {
        dim: usize,
        train: Vec<(ClassId, Vec<Vec<f64>>)>,
        test: Vec<(ClassId, Vec<f64>)>,
    }

    impl BlobSource {
        fn separable(n_classes: usize, per_class: usize, test_per_class: usize) -> Self {
            let dim = n_classes;
            let mut rng = RngStream::new(404, "stream/blobs");
            let mut train = Vec::new();
            let mut test = Vec::new();
            for c in 0..n_classes {
                let mut samples = Vec::new();
                for _ in 0..per_class {
                    let mut v = vec![0.0; dim];
                    v[c] = 10.0 + rng.gaussian() * 0.1;
                    samples.push(v);
                }
                train.push((c as ClassId, samples));
                for _ in 0..test_per_class {
                    let mut v = vec![0.0; dim];
                    v[c] = 10.0 + rng.gaussian() * 0.1;
                    test.push((c as ClassId, v));
                }
            }
            BlobSource { dim, train, test }
        }
    }

    impl EmbeddingSource for BlobSource {
        fn dim(&self) -> usize {
            self.dim
        }
        fn class_ids(&self) -> Vec<ClassId> {
            self.train.iter().map(|(c, _)| *c).collect()
        }
        fn train_count(&self, class: ClassId) -> usize {
            self.train.iter().find(|(c, _)| *c == class).unwrap().1.len()
        }
        fn train_embedding(&self, class: ClassId, sample_ref: usize) -> Result<Vec<f64>> {
            Ok(self.train.iter().find(|(c, _)| *c == class).unwrap().1[sample_ref].clone())
        }
        fn test_len(&self) -> usize {
            self.test.len()
        }
        fn test_label(&self, index: usize) -> ClassId {
            self.test[index].0
        }
        fn test_embedding(&self, index: usize) -> Result<Vec<f64>> {
            Ok(self.test[index].1.clone())
        }
    }

    /// Learner that always answers class 0.
    struct Constant;
    impl Learner for Constant {
        fn observe(&mut self, _z: &[f64], _y: ClassId) -> Result<()> {
            Ok(())
        }
        fn predict(&self, _z: &[f64]) -> Result<Prediction> {
            Prediction::from_scores(vec![(0, 1.0)])
        }
        fn num_classes(&self) -> usize {
            1
        }
    }

    #[test]
    fn schedule_is_deterministic_and_truncates() {
        let s1 = build_schedule(&[0, 1, 2], &[4, 3, 4], Some(5), 9).unwrap();
        let s2 = build_schedule(&[0, 1, 2], &[4, 3, 4], Some(5), 9).unwrap();
        assert_eq!(s1, s2);
        // shots=5 with only 3 samples available -> 3 events for that class
        let task_of_1 = s1.ordering.iter().position(|&c| c == 1).unwrap();
        assert_eq!(s1.per_class[task_of_1].len(), 3);
        let mut sorted = s1.ordering.clone();
        sorted.sort_unstable();
        assert_eq!(sorted, vec![0, 1, 2]);
        assert!(build_schedule(&[0], &[0], None, 1).is_err());
    }

    #[test]
    fn different_seeds_give_different_orderings() {
        let orderings: Vec<Vec<ClassId>> = (0..5)
            .map(|s| build_schedule(&[0, 1, 2, 3, 4, 5, 6, 7], &[2; 8], None, s).unwrap().ordering)
            .collect();
        assert!(orderings.windows(2).any(|w| w[0] != w[1]));
    }

    #[test]
    fn events_never_repeat_samples() {
        let s = build_schedule(&[0, 1], &[5, 5], None, 3).unwrap();
        let mut seen = std::collections::HashSet::new();
        for e in s.events() {
            assert!(seen.insert((e.label, e.sample_ref)), "repeat {e:?}");
        }
        assert_eq!(seen.len(), 10);
    }

    #[test]
    fn separable_blobs_reach_perfect_accuracy() {
        let source = BlobSource::separable(2, 10, 5);
        let schedule = build_schedule(&[0, 1], &[10, 10], None, 1).unwrap();
        let spec = LearnerSpec { kind: LearnerKind::Ncm, ..Default::default() };
        let mut learner = spec.build(source.dim(), &RngStream::new(1, "learner"));
        let out = run_stream(&schedule, learner.as_mut(), &source, Clock::Wall).unwrap();
        assert_eq!(out.matrix.get(1, 0), 100.0);
        assert_eq!(out.matrix.get(1, 1), 100.0);
        assert_eq!(out.metrics().unwrap().acc_final, 100.0);
    }

    #[test]
    fn constant_predictor_accuracy_is_class_share() {
        let source = BlobSource::separable(4, 3, 5);
        let schedule = build_schedule(&[0, 1, 2, 3], &[3; 4], None, 7).unwrap();
        let mut learner = Constant;
        let out = run_stream(&schedule, &mut learner, &source, Clock::Wall).unwrap();
        let task_of_0 = schedule.ordering.iter().position(|&c| c == 0).unwrap();
        for (t, step) in out.steps.iter().enumerate() {
            let expect = if t >= task_of_0 {
                100.0 * 5.0 / (5.0 * (t + 1) as f64)
            } else {
                0.0
            };
            assert!((step.acc_seen - expect).abs() < 1e-9, "task {t}");
        }
    }

    #[test]
    fn rerun_is_bit_identical() {
        let source = BlobSource::separable(3, 6, 4);
        let spec = LearnerSpec { kind: LearnerKind::Slda, ..Default::default() };
        let clock = Clock::Fixed { tick_us: 100 };
        let run = || {
            multi_ordering_run(&source, &spec, None, 11, 2, clock).unwrap()
        };
        let a = run();
        let b = run();
        assert_eq!(a.runs.len(), b.runs.len());
        for ((_, ra, ma), (_, rb, mb)) in a.runs.iter().zip(&b.runs) {
            assert_eq!(ra, rb);
            assert_eq!(ma, mb);
        }
    }

    #[test]
    fn single_ordering_statistics() {
        let source = BlobSource::separable(2, 4, 3);
        let spec = LearnerSpec::default();
        let report =
            multi_ordering_run(&source, &spec, None, 5, 1, Clock::Fixed { tick_us: 10 }).unwrap();
        assert_eq!(report.runs.len(), 1);
        assert_eq!(report.mean.acc_final, report.runs[0].2.acc_final);
        assert_eq!(report.std.acc_final, 0.0);
    }

    #[test]
    fn ttime_is_monotone() {
        let source = BlobSource::separable(4, 5, 2);
        let schedule = build_schedule(&[0, 1, 2, 3], &[5; 4], None, 2).unwrap();
        let spec = LearnerSpec::default();
        let mut learner = spec.build(source.dim(), &RngStream::new(2, "learner"));
        let out = run_stream(&schedule, learner.as_mut(), &source, Clock::Wall).unwrap();
        for w in out.steps.windows(2) {
            assert!(w[1].ttime_s >= w[0].ttime_s);
        }
    }
}
