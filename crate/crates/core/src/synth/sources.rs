//! EmbeddingSource implementations: raw feature vectors, pre-extracted
//! feature maps (pooled), and the full image → augment → backbone → pool
//! pipeline.
//!
//! Augmentation parameters are drawn from per-sample substreams named after
//! the sample identity only, so every method under test sees identical
//! augmentations within one experiment.

use super::augment::{augment, AugmentationKind};
use super::backbone::ToyBackbone;
use super::dataset::{FeatureDataset, ImageDataset};
use crate::error::{Error, Result};
use crate::learners::ClassId;
use crate::pooling::{pool, PoolingSpec};
use crate::rng::RngStream;
use crate::stream::EmbeddingSource;
use crate::tensor::FeatureMap;

/// Vectors handed to the learner as-is (no backbone, no pooling).
#[derive(Debug, Clone)]
pub struct FeatureSource {
    dim: usize,
    train: Vec<(ClassId, Vec<Vec<f64>>)>,
    test: Vec<(ClassId, Vec<f64>)>,
}

impl FeatureSource {
    pub fn new(
        dim: usize,
        train: Vec<(ClassId, Vec<Vec<f64>>)>,
        test: Vec<(ClassId, Vec<f64>)>,
    ) -> Result<Self> {
        for (c, samples) in &train {
            if samples.iter().any(|s| s.len() != dim) {
                return Err(Error::Contract(format!("class {c} train sample dim != {dim}")));
            }
        }
        if test.iter().any(|(_, s)| s.len() != dim) {
            return Err(Error::Contract(format!("test sample dim != {dim}")));
        }
        Ok(FeatureSource { dim, train, test })
    }

    pub fn from_dataset(ds: &FeatureDataset) -> Self {
        FeatureSource {
            dim: ds.dim,
            train: ds
                .train
                .iter()
                .map(|(c, v)| (*c, v.iter().map(|s| s.to_f64()).collect()))
                .collect(),
            test: ds.test.iter().map(|(c, s)| (*c, s.to_f64())).collect(),
        }
    }
}

impl EmbeddingSource for FeatureSource {
    fn dim(&self) -> usize {
        self.dim
    }

    fn class_ids(&self) -> Vec<ClassId> {
        let mut ids: Vec<ClassId> = self.train.iter().map(|(c, _)| *c).collect();
        ids.sort_unstable();
        ids
    }

    fn train_count(&self, class: ClassId) -> usize {
        self.train
            .iter()
            .find(|(c, _)| *c == class)
            .map_or(0, |(_, v)| v.len())
    }

    fn train_embedding(&self, class: ClassId, sample_ref: usize) -> Result<Vec<f64>> {
        let (_, samples) = self
            .train
            .iter()
            .find(|(c, _)| *c == class)
            .ok_or_else(|| Error::Contract(format!("unknown class {class}")))?;
        Ok(samples[sample_ref].clone())
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

/// Pre-extracted feature maps pooled on the fly (the manifest ingestion
/// path for real backbones run offline).
pub struct MapSource {
    dim: usize,
    pooling: PoolingSpec,
    train: Vec<(ClassId, Vec<FeatureMap>)>,
    test: Vec<(ClassId, FeatureMap)>,
    rng_root: RngStream,
}

impl MapSource {
    pub fn new(
        pooling: PoolingSpec,
        train: Vec<(ClassId, Vec<FeatureMap>)>,
        test: Vec<(ClassId, FeatureMap)>,
        seed: u64,
    ) -> Result<Self> {
        pooling.validate()?;
        let probe = train
            .first()
            .and_then(|(_, v)| v.first())
            .or_else(|| test.first().map(|(_, m)| m))
            .ok_or_else(|| Error::Data("empty map dataset".into()))?;
        let dim = pooling.output_dim(probe.d(), probe.spatial_len());
        Ok(MapSource { dim, pooling, train, test, rng_root: RngStream::new(seed, "mapsource") })
    }

    fn pool_map(&self, map: &FeatureMap, tag: &str) -> Result<Vec<f64>> {
        let z = if matches!(self.pooling, PoolingSpec::Stochastic) {
            let mut rng = self.rng_root.substream(&format!("pool/{tag}"));
            pool(map, &self.pooling, Some(&mut rng))?
        } else {
            pool(map, &self.pooling, None)?
        };
        Ok(z.to_f64())
    }
}

impl EmbeddingSource for MapSource {
    fn dim(&self) -> usize {
        self.dim
    }

    fn class_ids(&self) -> Vec<ClassId> {
        let mut ids: Vec<ClassId> = self.train.iter().map(|(c, _)| *c).collect();
        ids.sort_unstable();
        ids
    }

    fn train_count(&self, class: ClassId) -> usize {
        self.train
            .iter()
            .find(|(c, _)| *c == class)
            .map_or(0, |(_, v)| v.len())
    }

    fn train_embedding(&self, class: ClassId, sample_ref: usize) -> Result<Vec<f64>> {
        let (_, maps) = self
            .train
            .iter()
            .find(|(c, _)| *c == class)
            .ok_or_else(|| Error::Contract(format!("unknown class {class}")))?;
        self.pool_map(&maps[sample_ref], &format!("train/{class}/{sample_ref}"))
    }

    fn test_len(&self) -> usize {
        self.test.len()
    }

    fn test_label(&self, index: usize) -> ClassId {
        self.test[index].0
    }

    fn test_embedding(&self, index: usize) -> Result<Vec<f64>> {
        self.pool_map(&self.test[index].1, &format!("test/{index}"))
    }
}

/// Full pipeline: image → augmentation → toy backbone → pooling.
pub struct ImagePipelineSource {
    dim: usize,
    dataset: ImageDataset,
    backbone: ToyBackbone,
    pooling: PoolingSpec,
    train_aug: AugmentationKind,
    test_aug: AugmentationKind,
    rng_root: RngStream,
}

impl ImagePipelineSource {
    pub fn new(
        dataset: ImageDataset,
        backbone: ToyBackbone,
        pooling: PoolingSpec,
        train_aug: AugmentationKind,
        test_aug: AugmentationKind,
        aug_seed: u64,
    ) -> Result<Self> {
        pooling.validate()?;
        let (h, w, d) = backbone.out_shape(dataset.image_size, dataset.image_size);
        if h == 0 || w == 0 {
            return Err(Error::Contract("image too small for the backbone".into()));
        }
        let dim = pooling.output_dim(d, h * w);
        Ok(ImagePipelineSource {
            dim,
            dataset,
            backbone,
            pooling,
            train_aug,
            test_aug,
            rng_root: RngStream::new(aug_seed, "pipeline"),
        })
    }

    fn embed(&self, img: &super::image::Image, kind: AugmentationKind, tag: &str) -> Result<Vec<f64>> {
        let mut aug_rng = self.rng_root.substream(&format!("aug/{tag}"));
        let augmented = augment(img, kind, &mut aug_rng)?;
        let map = self.backbone.forward(&augmented)?;
        let z = if matches!(self.pooling, PoolingSpec::Stochastic) {
            let mut rng = self.rng_root.substream(&format!("pool/{tag}"));
            pool(&map, &self.pooling, Some(&mut rng))?
        } else {
            pool(&map, &self.pooling, None)?
        };
        Ok(z.to_f64())
    }
}

impl EmbeddingSource for ImagePipelineSource {
    fn dim(&self) -> usize {
        self.dim
    }

    fn class_ids(&self) -> Vec<ClassId> {
        let mut ids: Vec<ClassId> = self.dataset.train.iter().map(|(c, _)| *c).collect();
        ids.sort_unstable();
        ids
    }

    fn train_count(&self, class: ClassId) -> usize {
        self.dataset
            .train
            .iter()
            .find(|(c, _)| *c == class)
            .map_or(0, |(_, v)| v.len())
    }

    fn train_embedding(&self, class: ClassId, sample_ref: usize) -> Result<Vec<f64>> {
        let (_, imgs) = self
            .dataset
            .train
            .iter()
            .find(|(c, _)| *c == class)
            .ok_or_else(|| Error::Contract(format!("unknown class {class}")))?;
        self.embed(&imgs[sample_ref], self.train_aug, &format!("train/{class}/{sample_ref}"))
    }

    fn test_len(&self) -> usize {
        self.dataset.test.len()
    }

    fn test_label(&self, index: usize) -> ClassId {
        self.dataset.test[index].0
    }

    fn test_embedding(&self, index: usize) -> Result<Vec<f64>> {
        self.embed(&self.dataset.test[index].1, self.test_aug, &format!("test/{index}"))
    }
}
