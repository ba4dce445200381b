//! Turn an ExperimentConfig into an EmbeddingSource.

use crate::config::{BackboneKind, DatasetKind, ExperimentConfig};
use oclbench_core::error::{Error, Result};
use oclbench_core::io::{parse_manifest, read_tensor_record, Split, Tensor};
use oclbench_core::learners::ClassId;
use oclbench_core::stream::EmbeddingSource;
use oclbench_core::synth::{
    default_class_specs, gen_feature_dataset, gen_image_dataset, AugmentationKind, FeatureSource,
    ImagePipelineSource, MapSource, ToyBackbone,
};
use oclbench_core::tensor::FeatureMap;
use std::collections::BTreeMap;
use std::path::Path;

/// Build the source for one (train-aug, test-aug) pair. The augmentation
/// seed is tied to the experiment base seed, not the ordering seed, so all
/// orderings and all methods see the same augmented samples.
pub fn build_source(
    cfg: &ExperimentConfig,
    train_aug: AugmentationKind,
    test_aug: AugmentationKind,
) -> Result<Box<dyn EmbeddingSource>> {
    match cfg.dataset_kind {
        DatasetKind::Features => {
            let ds = gen_feature_dataset(
                cfg.classes,
                cfg.dim,
                cfg.train_per_class,
                cfg.test_per_class,
                cfg.anisotropy,
                cfg.skew,
                cfg.mean_radius,
                cfg.dataset_seed,
            )?;
            Ok(Box::new(FeatureSource::from_dataset(&ds)))
        }
        DatasetKind::Synthetic => {
            if cfg.backbone_kind != BackboneKind::Toy {
                return Err(Error::Contract(
                    "synthetic image dataset requires backbone.kind = toy".into(),
                ));
            }
            let specs = default_class_specs();
            let ds = gen_image_dataset(
                &specs[..cfg.classes],
                cfg.train_per_class,
                cfg.test_per_class,
                cfg.image_size,
                cfg.dataset_seed,
            )?;
            let bb = ToyBackbone::new(cfg.backbone_seed);
            Ok(Box::new(ImagePipelineSource::new(
                ds,
                bb,
                cfg.pooling.clone(),
                train_aug,
                test_aug,
                cfg.seed,
            )?))
        }
        DatasetKind::Manifest => {
            let path = cfg.manifest.as_ref().expect("validated at parse time");
            load_manifest_source(path, cfg)
        }
    }
}

/// Read OCLT records referenced by a manifest. Rank-1 records become raw
/// feature vectors; rank-3 records are pooled with the configured scheme.
fn load_manifest_source(path: &Path, cfg: &ExperimentConfig) -> Result<Box<dyn EmbeddingSource>> {
    let text = std::fs::read_to_string(path)?;
    let entries = parse_manifest(&text)?;
    if entries.is_empty() {
        return Err(Error::Data(format!("manifest {} is empty", path.display())));
    }
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    let mut vec_train: BTreeMap<ClassId, Vec<Vec<f64>>> = BTreeMap::new();
    let mut vec_test: Vec<(ClassId, Vec<f64>)> = Vec::new();
    let mut map_train: BTreeMap<ClassId, Vec<FeatureMap>> = BTreeMap::new();
    let mut map_test: Vec<(ClassId, FeatureMap)> = Vec::new();
    for e in &entries {
        let bytes = std::fs::read(base.join(&e.path))?;
        let label = e.label as ClassId;
        match (read_tensor_record(&bytes)?, e.split) {
            (Tensor::Vector(v), Split::Train) => {
                vec_train.entry(label).or_default().push(v.to_f64());
            }
            (Tensor::Vector(v), Split::Test) => vec_test.push((label, v.to_f64())),
            (Tensor::Map(m), Split::Train) => map_train.entry(label).or_default().push(m),
            (Tensor::Map(m), Split::Test) => map_test.push((label, m)),
        }
    }
    let has_vecs = !vec_train.is_empty() || !vec_test.is_empty();
    let has_maps = !map_train.is_empty() || !map_test.is_empty();
    if has_vecs && has_maps {
        return Err(Error::Data("manifest mixes rank-1 and rank-3 records".into()));
    }
    if has_maps {
        let src = MapSource::new(
            cfg.pooling.clone(),
            map_train.into_iter().collect(),
            map_test,
            cfg.seed,
        )?;
        return Ok(Box::new(src));
    }
    let dim = vec_train
        .values()
        .flatten()
        .chain(vec_test.iter().map(|(_, v)| v))
        .next()
        .map(Vec::len)
        .ok_or_else(|| Error::Data("manifest has no records".into()))?;
    Ok(Box::new(FeatureSource::new(dim, vec_train.into_iter().collect(), vec_test)?))
}
