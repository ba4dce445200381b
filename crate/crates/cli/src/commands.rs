//! The five subcommands. Each returns Ok(()) on success; config problems
//! surface as ConfigError before we get here, runtime problems as core
//! errors.

use crate::config::ExperimentConfig;
use crate::report::{fmt4, markdown_table, parse_metrics_csv, write_metrics_csv, MetricsRow};
use crate::source::build_source;
use oclbench_core::error::{Error, Result};
use oclbench_core::io::{write_manifest, write_tensor_record, ManifestEntry, Split, Tensor};
use oclbench_core::metrics::rarg;
use oclbench_core::stream::{multi_ordering_run, Clock, MultiRunReport};
use oclbench_core::synth::{augment, AugmentationKind, ToyBackbone};
use oclbench_core::learners::LearnerSpec;
use oclbench_core::{PoolingSpec, RngStream};
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

fn clock(cfg: &ExperimentConfig) -> Clock {
    if cfg.fixed_clock {
        Clock::Fixed { tick_us: cfg.tick_us }
    } else {
        Clock::Wall
    }
}

fn run_learner(
    cfg: &ExperimentConfig,
    source: &dyn oclbench_core::EmbeddingSource,
    spec: &LearnerSpec,
) -> Result<MultiRunReport> {
    multi_ordering_run(source, spec, cfg.shots, cfg.seed, cfg.orderings, clock(cfg))
}

fn metrics_rows(method: &str, report: &MultiRunReport) -> Vec<MetricsRow> {
    report
        .runs
        .iter()
        .map(|(seed, _, m)| MetricsRow {
            method: method.to_string(),
            seed: *seed,
            acc: m.acc_final,
            bwt: m.bwt,
            forg: m.forg,
            pla: m.pla,
            fwt: m.fwt,
            ttime_min: m.ttime_min,
            fps: m.fps,
        })
        .collect()
}

pub fn cmd_run(cfg: &ExperimentConfig) -> Result<()> {
    let source = build_source(cfg, cfg.train_aug, cfg.test_aug)?;
    let mut matrix_csv = String::from("method,seed,row,col,acc\n");
    let mut step_csv = String::from("method,seed,step,class,seen_classes,acc_seen,ttime_s,fps\n");
    let mut rows: Vec<MetricsRow> = Vec::new();
    let mut summaries = Vec::new();
    for spec in &cfg.learners {
        let method = spec.kind.name();
        let report = run_learner(cfg, source.as_ref(), spec)?;
        for (seed, out, _) in &report.runs {
            for r in 0..out.matrix.num_tasks() {
                for c in 0..=r {
                    let _ = writeln!(
                        matrix_csv,
                        "{method},{seed},{r},{c},{}",
                        fmt4(out.matrix.get(r, c))
                    );
                }
            }
            for (step, log) in out.steps.iter().enumerate() {
                let _ = writeln!(
                    step_csv,
                    "{method},{seed},{step},{},{},{},{},{}",
                    log.class_id,
                    log.seen_classes,
                    fmt4(log.acc_seen),
                    fmt4(log.ttime_s),
                    fmt4(log.fps),
                );
            }
        }
        rows.extend(metrics_rows(method, &report));
        summaries.push((method.to_string(), report));
    }
    let metrics_csv = write_metrics_csv(&rows);

    let mut md = String::from("# Run report\n\n");
    let _ = writeln!(
        md,
        "Pooling: `{:?}`. Orderings: {} (seeds {}..{}). BwT/Forg follow the \
         final-row-minus-diagonal and best-previous-minus-final conventions.\n",
        cfg.pooling,
        cfg.orderings,
        cfg.seed,
        cfg.seed + cfg.orderings as u64 - 1,
    );
    md.push_str("## Per-ordering metrics\n\n");
    md.push_str(&markdown_table(
        &["method", "seed", "acc", "bwt", "forg", "pla", "fwt", "ttime_min", "fps"],
        &rows
            .iter()
            .map(|r| {
                vec![
                    r.method.clone(),
                    r.seed.to_string(),
                    fmt4(r.acc),
                    fmt4(r.bwt),
                    fmt4(r.forg),
                    fmt4(r.pla),
                    fmt4(r.fwt),
                    fmt4(r.ttime_min),
                    fmt4(r.fps),
                ]
            })
            .collect::<Vec<_>>(),
    ));
    md.push_str("\n## Mean ± std across orderings\n\n");
    md.push_str(&markdown_table(
        &["method", "acc", "bwt", "forg", "pla", "fwt", "ttime_min", "fps"],
        &summaries
            .iter()
            .map(|(method, rep)| {
                let pm = |m: f64, s: f64| format!("{} ± {}", fmt4(m), fmt4(s));
                vec![
                    method.clone(),
                    pm(rep.mean.acc_final, rep.std.acc_final),
                    pm(rep.mean.bwt, rep.std.bwt),
                    pm(rep.mean.forg, rep.std.forg),
                    pm(rep.mean.pla, rep.std.pla),
                    pm(rep.mean.fwt, rep.std.fwt),
                    pm(rep.mean.ttime_min, rep.std.ttime_min),
                    pm(rep.mean.fps, rep.std.fps),
                ]
            })
            .collect::<Vec<_>>(),
    ));

    fs::create_dir_all(&cfg.out)?;
    fs::write(cfg.out.join("accuracy_matrix.csv"), matrix_csv)?;
    fs::write(cfg.out.join("per_step.csv"), step_csv)?;
    fs::write(cfg.out.join("metrics.csv"), metrics_csv)?;
    fs::write(cfg.out.join("report.md"), md)?;
    Ok(())
}

/// Average over test augmentations different from the training one; None
/// when that set is empty.
fn avg_od(cells: &[(AugmentationKind, AugmentationKind, f64)], train: AugmentationKind) -> Option<f64> {
    let od: Vec<f64> = cells
        .iter()
        .filter(|(tr, te, _)| *tr == train && te != tr)
        .map(|(_, _, a)| *a)
        .collect();
    if od.is_empty() {
        None
    } else {
        Some(od.iter().sum::<f64>() / od.len() as f64)
    }
}

pub fn cmd_grid(cfg: &ExperimentConfig) -> Result<()> {
    let mut grid_csv = String::from("method,train,test,acc\n");
    let mut per_method: Vec<(String, Vec<(AugmentationKind, AugmentationKind, f64)>)> = Vec::new();
    for spec in &cfg.learners {
        let method = spec.kind.name().to_string();
        let mut cells = Vec::new();
        for &tr in &cfg.grid_train {
            for &te in &cfg.grid_test {
                let source = build_source(cfg, tr, te)?;
                let report = run_learner(cfg, source.as_ref(), spec)?;
                let acc = report.mean.acc_final;
                let _ = writeln!(grid_csv, "{method},{},{},{}", tr.name(), te.name(), fmt4(acc));
                cells.push((tr, te, acc));
            }
        }
        per_method.push((method, cells));
    }

    let mut summary_csv = String::from("method,train,avg_od\n");
    let mut md = String::from("# Augmentation grid\n\n");
    for (method, cells) in &per_method {
        let _ = writeln!(md, "## {method}\n");
        let mut header: Vec<&str> = vec!["train \\ test"];
        header.extend(cfg.grid_test.iter().map(|k| k.name()));
        header.push("Avg-OD");
        let baseline = &per_method[0];
        let mut rows = Vec::new();
        for &tr in &cfg.grid_train {
            let mut row = vec![tr.name().to_string()];
            for &te in &cfg.grid_test {
                let acc = cells.iter().find(|(a, b, _)| *a == tr && *b == te).unwrap().2;
                row.push(fmt4(acc));
            }
            let od = avg_od(cells, tr);
            let _ = writeln!(
                summary_csv,
                "{method},{},{}",
                tr.name(),
                od.map_or("NA".to_string(), fmt4)
            );
            row.push(od.map_or("NA".to_string(), fmt4));
            // room-aware gain of this method's Avg-OD over the first method's
            if method != &baseline.0 {
                let gain = match (avg_od(&baseline.1, tr), od) {
                    (Some(b), Some(m)) => match rarg(b, m) {
                        Ok(g) => if g >= 0.0 { format!("+{}", fmt4(g)) } else { fmt4(g) },
                        Err(_) => "NA(div0)".to_string(),
                    },
                    _ => "NA".to_string(),
                };
                row.push(gain);
            }
            rows.push(row);
        }
        let mut hdr = header;
        if method != &baseline.0 {
            hdr.push("RARG-OD");
        }
        md.push_str(&markdown_table(&hdr, &rows));
        md.push('\n');
    }

    fs::create_dir_all(&cfg.out)?;
    fs::write(cfg.out.join("grid.csv"), grid_csv)?;
    fs::write(cfg.out.join("grid_summary.csv"), summary_csv)?;
    fs::write(cfg.out.join("grid.md"), md)?;
    Ok(())
}

/// Per-method mean accuracy of one metrics.csv.
fn mean_acc_by_method(rows: &[MetricsRow]) -> Vec<(String, f64)> {
    let mut acc: std::collections::BTreeMap<String, (f64, usize)> = Default::default();
    for r in rows {
        let e = acc.entry(r.method.clone()).or_insert((0.0, 0));
        e.0 += r.acc;
        e.1 += 1;
    }
    acc.into_iter().map(|(m, (s, n))| (m, s / n as f64)).collect()
}

pub fn cmd_compare(files: &[std::path::PathBuf], out: Option<&Path>) -> Result<String> {
    if files.len() < 2 {
        return Err(Error::Contract("compare needs at least 2 metrics files".into()));
    }
    let mut tables = Vec::new();
    for f in files {
        let rows = parse_metrics_csv(&std::fs::read_to_string(f)?)
            .map_err(|e| Error::Format(e.to_string()))?;
        tables.push((f.display().to_string(), mean_acc_by_method(&rows)));
    }
    let shared: Vec<String> = tables[0]
        .1
        .iter()
        .map(|(m, _)| m.clone())
        .filter(|m| tables.iter().all(|(_, t)| t.iter().any(|(n, _)| n == m)))
        .collect();
    if shared.is_empty() {
        return Err(Error::Data("metrics files share no method".into()));
    }
    let mut header: Vec<&str> = vec!["method"];
    let names: Vec<String> = tables.iter().map(|(n, _)| n.clone()).collect();
    header.extend(names.iter().map(String::as_str));
    header.push("RARG(last vs first)");
    let mut rows = Vec::new();
    for m in &shared {
        let mut row = vec![m.clone()];
        let mut accs = Vec::new();
        for (_, t) in &tables {
            let a = t.iter().find(|(n, _)| n == m).unwrap().1;
            accs.push(a);
            row.push(fmt4(a));
        }
        let base = accs[0];
        let last = *accs.last().unwrap();
        row.push(match rarg(base, last) {
            Ok(g) => if g >= 0.0 { format!("+{}", fmt4(g)) } else { fmt4(g) },
            Err(_) => "NA(div0)".to_string(),
        });
        rows.push(row);
    }
    let md = format!("# Comparison\n\n{}", markdown_table(&header, &rows));
    if let Some(dir) = out {
        fs::create_dir_all(dir)?;
        fs::write(dir.join("compare.md"), &md)?;
    }
    Ok(md)
}

pub fn cmd_bench(cfg: &ExperimentConfig) -> Result<String> {
    let spec = &cfg.learners[0];
    let method = spec.kind.name();
    // moment pipeline as configured vs the R=1 / avg baseline, wall clock
    let mut wall = cfg.clone();
    wall.fixed_clock = false;
    let r_is_one = matches!(cfg.pooling, PoolingSpec::Avg | PoolingSpec::Moments { r: 1, .. });

    let run_with = |pooling: PoolingSpec| -> Result<(f64, f64)> {
        let mut c = wall.clone();
        c.pooling = pooling;
        let source = build_source(&c, c.train_aug, c.test_aug)?;
        let rep = run_learner(&c, source.as_ref(), spec)?;
        Ok((rep.mean.ttime_min, rep.mean.fps))
    };
    let (t_mom, fps_mom) = run_with(cfg.pooling.clone())?;
    let (t_avg, fps_avg, delta) = if r_is_one {
        (t_mom, fps_mom, 0.0)
    } else {
        let (t, f) = run_with(PoolingSpec::Avg)?;
        (t, f, 100.0 * (fps_mom - f) / f)
    };
    let mut md = String::from("# Overhead report\n\n");
    md.push_str(&markdown_table(
        &["method", "pooling", "ttime_min", "fps"],
        &[
            vec![method.into(), format!("{:?}", cfg.pooling), fmt4(t_mom), fmt4(fps_mom)],
            vec![method.into(), "Avg".into(), fmt4(t_avg), fmt4(fps_avg)],
        ],
    ));
    let _ = writeln!(md, "\nFPS delta vs avg pooling: {}%", fmt4(delta));
    if !delta.is_finite() {
        return Err(Error::Numeric { msg: "non-finite FPS delta".into(), pivot: 0 });
    }
    fs::create_dir_all(&cfg.out)?;
    fs::write(cfg.out.join("bench.md"), &md)?;
    Ok(md)
}

/// Export the configured dataset as OCLT records plus a manifest.
/// Synthetic images are pushed through augmentation and the toy backbone
/// so the exported records are rank-3 feature maps; the feature generator
/// exports rank-1 vectors.
pub fn cmd_gen(cfg: &ExperimentConfig) -> Result<()> {
    use crate::config::DatasetKind;
    fs::create_dir_all(cfg.out.join("records"))?;
    let mut entries = Vec::new();
    let mut write_record = |name: String, label: u32, split: Split, t: &Tensor| -> Result<()> {
        let bytes = write_tensor_record(t)?;
        let rel = format!("records/{name}.oclt");
        fs::write(cfg.out.join(&rel), bytes)?;
        entries.push(ManifestEntry { path: rel, label, split });
        Ok(())
    };
    match cfg.dataset_kind {
        DatasetKind::Features => {
            let ds = oclbench_core::synth::gen_feature_dataset(
                cfg.classes,
                cfg.dim,
                cfg.train_per_class,
                cfg.test_per_class,
                cfg.anisotropy,
                cfg.skew,
                cfg.mean_radius,
                cfg.dataset_seed,
            )?;
            for (c, samples) in &ds.train {
                for (i, v) in samples.iter().enumerate() {
                    write_record(format!("train_{c}_{i}"), *c, Split::Train, &Tensor::Vector(v.clone()))?;
                }
            }
            for (i, (c, v)) in ds.test.iter().enumerate() {
                write_record(format!("test_{i}"), *c, Split::Test, &Tensor::Vector(v.clone()))?;
            }
        }
        DatasetKind::Synthetic => {
            let specs = oclbench_core::synth::default_class_specs();
            let ds = oclbench_core::synth::gen_image_dataset(
                &specs[..cfg.classes],
                cfg.train_per_class,
                cfg.test_per_class,
                cfg.image_size,
                cfg.dataset_seed,
            )?;
            let bb = ToyBackbone::new(cfg.backbone_seed);
            let rng = RngStream::new(cfg.seed, "pipeline");
            for (c, imgs) in &ds.train {
                for (i, img) in imgs.iter().enumerate() {
                    let mut r = rng.substream(&format!("aug/train/{c}/{i}"));
                    let map = bb.forward(&augment(img, cfg.train_aug, &mut r)?)?;
                    write_record(format!("train_{c}_{i}"), *c, Split::Train, &Tensor::Map(map))?;
                }
            }
            for (i, (c, img)) in ds.test.iter().enumerate() {
                let mut r = rng.substream(&format!("aug/test/{i}"));
                let map = bb.forward(&augment(img, cfg.test_aug, &mut r)?)?;
                write_record(format!("test_{i}"), *c, Split::Test, &Tensor::Map(map))?;
            }
        }
        DatasetKind::Manifest => {
            return Err(Error::Contract("gen requires a synthetic or features dataset".into()));
        }
    }
    fs::write(cfg.out.join("manifest.csv"), write_manifest(&entries))?;
    Ok(())
}
