//! Deterministic synthetic benchmark: image rendering, augmentations, a
//! small fixed-weight backbone, and feature-space generators.

pub mod augment;
pub mod backbone;
pub mod dataset;
pub mod image;
pub mod sources;

pub use augment::{augment, AugmentationKind};
pub use backbone::ToyBackbone;
pub use dataset::{
    default_class_specs, gen_feature_dataset, gen_image_dataset, ClassShape, FeatureDataset,
    ImageDataset, SyntheticClassSpec,
};
pub use image::Image;
pub use sources::{FeatureSource, ImagePipelineSource, MapSource};
