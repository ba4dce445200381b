//! Flat `key = value` configuration with dotted sections.
//!
//! Lines are `key = value`, `#` starts a comment, blank lines are ignored.
//! Unknown keys are rejected with the offending line number so typos fail
//! loudly instead of silently falling back to defaults.

use oclbench_core::synth::{default_class_specs, AugmentationKind};
use oclbench_core::{LearnerKind, PoolingSpec};
use oclbench_core::learners::LearnerSpec;
use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;

/// Configuration problem, carrying the line number when one applies.
#[derive(Debug)]
pub struct ConfigError {
    pub line: Option<usize>,
    pub msg: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(n) => write!(f, "config line {}: {}", n, self.msg),
            None => write!(f, "config: {}", self.msg),
        }
    }
}

impl std::error::Error for ConfigError {}

fn err(line: Option<usize>, msg: impl Into<String>) -> ConfigError {
    ConfigError { line, msg: msg.into() }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DatasetKind {
    Synthetic,
    Features,
    Manifest,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BackboneKind {
    Toy,
    Passthrough,
}

/// Everything one experiment needs, resolved and validated.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub dataset_kind: DatasetKind,
    pub classes: usize,
    pub train_per_class: usize,
    pub test_per_class: usize,
    pub image_size: usize,
    pub dataset_seed: u64,
    pub dim: usize,
    pub anisotropy: f64,
    pub skew: f64,
    pub mean_radius: f64,
    pub manifest: Option<PathBuf>,
    pub backbone_kind: BackboneKind,
    pub backbone_seed: u64,
    pub pooling: PoolingSpec,
    pub learners: Vec<LearnerSpec>,
    pub shots: Option<usize>,
    pub train_aug: AugmentationKind,
    pub test_aug: AugmentationKind,
    pub grid_train: Vec<AugmentationKind>,
    pub grid_test: Vec<AugmentationKind>,
    pub seed: u64,
    pub orderings: usize,
    pub out: PathBuf,
    pub fixed_clock: bool,
    pub tick_us: u64,
}

const KNOWN_KEYS: &[&str] = &[
    "dataset.kind",
    "dataset.classes",
    "dataset.train_per_class",
    "dataset.test_per_class",
    "dataset.image_size",
    "dataset.seed",
    "dataset.dim",
    "dataset.anisotropy",
    "dataset.skew",
    "dataset.mean_radius",
    "dataset.manifest",
    "backbone.kind",
    "backbone.seed",
    "pooling.kind",
    "pooling.R",
    "pooling.alpha",
    "pooling.p",
    "pooling.k_percent",
    "pooling.sigma_floor",
    "learner.kind",
    "learner.epsilon",
    "learner.lr",
    "learner.buffer",
    "learner.cbcl_threshold",
    "learner.cbcl_max",
    "shots",
    "augment.train",
    "augment.test",
    "grid.train",
    "grid.test",
    "seed",
    "orderings",
    "out",
    "report.fixed_clock",
    "report.tick_us",
];

/// Raw key/value table plus the line each key came from.
#[derive(Debug, Default)]
pub struct RawConfig {
    values: BTreeMap<String, (usize, String)>,
}

impl RawConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut values = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let lineno = i + 1;
            let line = match raw.find('#') {
                Some(p) => &raw[..p],
                None => raw,
            }
            .trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| err(Some(lineno), format!("expected `key = value`, got {line:?}")))?;
            let key = key.trim().to_string();
            let value = value.trim().to_string();
            if !KNOWN_KEYS.contains(&key.as_str()) {
                return Err(err(Some(lineno), format!("unknown key {key:?}")));
            }
            if values.insert(key.clone(), (lineno, value)).is_some() {
                return Err(err(Some(lineno), format!("duplicate key {key:?}")));
            }
        }
        Ok(RawConfig { values })
    }

    fn get(&self, key: &str) -> Option<&(usize, String)> {
        self.values.get(key)
    }

    fn str_or(&self, key: &str, default: &str) -> String {
        self.get(key).map_or_else(|| default.to_string(), |(_, v)| v.clone())
    }

    fn parse_num<T: std::str::FromStr>(&self, key: &str, default: T) -> Result<T, ConfigError> {
        match self.get(key) {
            None => Ok(default),
            Some((line, v)) => v
                .parse()
                .map_err(|_| err(Some(*line), format!("invalid value {v:?} for {key}"))),
        }
    }
}

fn parse_aug(value: &str, line: usize) -> Result<AugmentationKind, ConfigError> {
    AugmentationKind::parse(value)
        .ok_or_else(|| err(Some(line), format!("unknown augmentation kind {value:?}")))
}

fn parse_aug_list(raw: &RawConfig, key: &str, default: &str) -> Result<Vec<AugmentationKind>, ConfigError> {
    let (line, text) = match raw.get(key) {
        Some((l, v)) => (*l, v.clone()),
        None => (0, default.to_string()),
    };
    let mut kinds = Vec::new();
    for part in text.split(',') {
        let k = parse_aug(part.trim(), line)?;
        if kinds.contains(&k) {
            return Err(err(Some(line), format!("duplicate augmentation {:?} in {key}", k.name())));
        }
        kinds.push(k);
    }
    Ok(kinds)
}

impl ExperimentConfig {
    pub fn from_text(text: &str) -> Result<Self, ConfigError> {
        let raw = RawConfig::parse(text)?;

        let dataset_kind = match raw.str_or("dataset.kind", "synthetic").as_str() {
            "synthetic" => DatasetKind::Synthetic,
            "features" => DatasetKind::Features,
            "manifest" => DatasetKind::Manifest,
            other => {
                let line = raw.get("dataset.kind").map(|(l, _)| *l);
                return Err(err(line, format!("unknown dataset.kind {other:?}")));
            }
        };

        let backbone_kind = match raw.str_or("backbone.kind", "toy").as_str() {
            "toy" => BackboneKind::Toy,
            "passthrough" => BackboneKind::Passthrough,
            other => {
                let line = raw.get("backbone.kind").map(|(l, _)| *l);
                return Err(err(line, format!("unknown backbone.kind {other:?}")));
            }
        };

        let pooling = {
            let kind = raw.str_or("pooling.kind", "moments");
            let line = raw.get("pooling.kind").map(|(l, _)| *l);
            match kind.as_str() {
                "moments" => PoolingSpec::Moments {
                    r: raw.parse_num("pooling.R", 3usize)?,
                    sigma_floor: raw.parse_num("pooling.sigma_floor", oclbench_core::pooling::DEFAULT_SIGMA_FLOOR)?,
                },
                "avg" => PoolingSpec::Avg,
                "max" => PoolingSpec::Max,
                "avgmax" => PoolingSpec::AvgMax,
                "mix" => PoolingSpec::Mix { alpha: raw.parse_num("pooling.alpha", 0.5f64)? },
                "lp" => PoolingSpec::Lp { p: raw.parse_num("pooling.p", 2.0f64)? },
                "stochastic" => PoolingSpec::Stochastic,
                "rap" => PoolingSpec::Rap { k_percent: raw.parse_num("pooling.k_percent", 0.5f64)? },
                other => return Err(err(line, format!("unknown pooling.kind {other:?}"))),
            }
        };
        pooling
            .validate()
            .map_err(|e| err(raw.get("pooling.kind").map(|(l, _)| *l), e.to_string()))?;

        let learners = {
            let (line, text) = match raw.get("learner.kind") {
                Some((l, v)) => (Some(*l), v.clone()),
                None => (None, "slda".to_string()),
            };
            let base = LearnerSpec {
                kind: LearnerKind::Slda,
                epsilon: raw.parse_num("learner.epsilon", 1e-4f64)?,
                lr: raw.parse_num("learner.lr", 0.01f64)?,
                buffer: raw.parse_num("learner.buffer", 1000usize)?,
                cbcl_threshold: raw.parse_num("learner.cbcl_threshold", 17.0f64)?,
                cbcl_max: raw.parse_num("learner.cbcl_max", 44usize)?,
            };
            let mut specs = Vec::new();
            for part in text.split(',') {
                let kind = LearnerKind::parse(part.trim()).map_err(|e| err(line, e.to_string()))?;
                if specs.iter().any(|s: &LearnerSpec| s.kind == kind) {
                    return Err(err(line, format!("duplicate learner kind {:?}", kind.name())));
                }
                specs.push(LearnerSpec { kind, ..base.clone() });
            }
            specs
        };

        let shots = match raw.get("shots") {
            None => None,
            Some((line, v)) => Some(
                v.parse::<usize>()
                    .map_err(|_| err(Some(*line), format!("invalid value {v:?} for shots")))?,
            ),
        };

        let train_aug = match raw.get("augment.train") {
            Some((l, v)) => parse_aug(v, *l)?,
            None => AugmentationKind::Clean,
        };
        let test_aug = match raw.get("augment.test") {
            Some((l, v)) => parse_aug(v, *l)?,
            None => AugmentationKind::Clean,
        };

        let classes = raw.parse_num("dataset.classes", 5usize)?;
        if dataset_kind == DatasetKind::Synthetic && classes > default_class_specs().len() {
            let line = raw.get("dataset.classes").map(|(l, _)| *l);
            return Err(err(
                line,
                format!("synthetic benchmark defines at most {} classes", default_class_specs().len()),
            ));
        }

        let manifest = raw.get("dataset.manifest").map(|(_, v)| PathBuf::from(v));
        if dataset_kind == DatasetKind::Manifest && manifest.is_none() {
            return Err(err(None, "dataset.kind = manifest requires dataset.manifest"));
        }

        let fixed_clock = match raw.str_or("report.fixed_clock", "true").as_str() {
            "true" => true,
            "false" => false,
            other => {
                let line = raw.get("report.fixed_clock").map(|(l, _)| *l);
                return Err(err(line, format!("report.fixed_clock must be true or false, got {other:?}")));
            }
        };

        let cfg = ExperimentConfig {
            dataset_kind,
            classes,
            train_per_class: raw.parse_num("dataset.train_per_class", 20usize)?,
            test_per_class: raw.parse_num("dataset.test_per_class", 10usize)?,
            image_size: raw.parse_num("dataset.image_size", 32usize)?,
            dataset_seed: raw.parse_num("dataset.seed", 7u64)?,
            dim: raw.parse_num("dataset.dim", 16usize)?,
            anisotropy: raw.parse_num("dataset.anisotropy", 1.0f64)?,
            skew: raw.parse_num("dataset.skew", 0.0f64)?,
            mean_radius: raw.parse_num("dataset.mean_radius", 3.0f64)?,
            manifest,
            backbone_kind,
            backbone_seed: raw.parse_num("backbone.seed", 1u64)?,
            pooling,
            learners,
            shots,
            train_aug,
            test_aug,
            grid_train: parse_aug_list(&raw, "grid.train", "clean,illum,noise,geom")?,
            grid_test: parse_aug_list(&raw, "grid.test", "clean,illum,noise,geom")?,
            seed: raw.parse_num("seed", 100u64)?,
            orderings: raw.parse_num("orderings", 5usize)?,
            out: PathBuf::from(raw.str_or("out", "out")),
            fixed_clock,
            tick_us: raw.parse_num("report.tick_us", 10u64)?,
        };
        if cfg.orderings < 1 {
            return Err(err(raw.get("orderings").map(|(l, _)| *l), "orderings must be >= 1"));
        }
        Ok(cfg)
    }

    pub fn from_file(path: &std::path::Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| err(None, format!("cannot read {}: {e}", path.display())))?;
        Self::from_text(&text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_parse() {
        let cfg = ExperimentConfig::from_text("").unwrap();
        assert_eq!(cfg.dataset_kind, DatasetKind::Synthetic);
        assert_eq!(cfg.pooling, PoolingSpec::moments(3));
        assert_eq!(cfg.learners.len(), 1);
        assert_eq!(cfg.learners[0].kind, LearnerKind::Slda);
        assert_eq!(cfg.orderings, 5);
        assert!(cfg.fixed_clock);
    }

    #[test]
    fn unknown_key_names_line() {
        let e = ExperimentConfig::from_text("seed = 1\nlerner.kind = ncm\n").unwrap_err();
        assert_eq!(e.line, Some(2));
        assert!(e.to_string().contains("lerner.kind"), "{e}");
    }

    #[test]
    fn unknown_learner_kind_is_config_error() {
        let e = ExperimentConfig::from_text("learner.kind = sldaa\n").unwrap_err();
        assert!(e.to_string().contains("sldaa"), "{e}");
    }

    #[test]
    fn comments_and_lists() {
        let cfg = ExperimentConfig::from_text(
            "# comment\nlearner.kind = ncm, slda # trailing\ngrid.test = clean,geom\npooling.kind = rap\npooling.k_percent = 0.25\n",
        )
        .unwrap();
        assert_eq!(cfg.learners.len(), 2);
        assert_eq!(cfg.grid_test.len(), 2);
        assert_eq!(cfg.pooling, PoolingSpec::Rap { k_percent: 0.25 });
    }

    #[test]
    fn bad_pooling_value_rejected() {
        let e = ExperimentConfig::from_text("pooling.kind = mix\npooling.alpha = 1.5\n").unwrap_err();
        assert!(e.to_string().contains("alpha"), "{e}");
    }
}
