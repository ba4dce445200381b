//! Desk-scale synthetic data: parametric class images and a direct
//! feature-space generator that isolates learners from the backbone.

use super::image::{hsv_to_rgb, Image};
use crate::error::{Error, Result};
use crate::learners::ClassId;
use crate::rng::RngStream;
use crate::tensor::Vector;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClassShape {
    Disk,
    Bar,
    Cross,
    Ring,
    Checker,
}

/// Parametric definition of one synthetic image class.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticClassSpec {
    pub id: ClassId,
    pub shape: ClassShape,
    /// Base hue in [0, 1) turns.
    pub hue: f32,
    /// Spatial texture frequency (radians per pixel).
    pub texture_freq: f32,
    /// Shape radius as a fraction of the half-extent.
    pub size_frac: f32,
}

/// Five visually distinct classes; the default desk-scale benchmark.
pub fn default_class_specs() -> Vec<SyntheticClassSpec> {
    vec![
        SyntheticClassSpec { id: 0, shape: ClassShape::Disk, hue: 0.0, texture_freq: 0.0, size_frac: 0.65 },
        SyntheticClassSpec { id: 1, shape: ClassShape::Bar, hue: 0.33, texture_freq: 0.5, size_frac: 0.75 },
        SyntheticClassSpec { id: 2, shape: ClassShape::Cross, hue: 0.6, texture_freq: 0.0, size_frac: 0.8 },
        SyntheticClassSpec { id: 3, shape: ClassShape::Ring, hue: 0.15, texture_freq: 0.9, size_frac: 0.7 },
        SyntheticClassSpec { id: 4, shape: ClassShape::Checker, hue: 0.82, texture_freq: 1.4, size_frac: 0.8 },
    ]
}

#[derive(Debug, Clone)]
pub struct ImageDataset {
    pub train: Vec<(ClassId, Vec<Image>)>,
    pub test: Vec<(ClassId, Image)>,
    pub image_size: usize,
}

/// Render one sample of a class with per-sample pose/hue jitter.
fn render_sample(spec: &SyntheticClassSpec, size: usize, rng: &mut RngStream) -> Result<Image> {
    let half = size as f64 / 2.0;
    let cx = half + rng.uniform(-2.0, 2.0)?;
    let cy = half + rng.uniform(-2.0, 2.0)?;
    let radius = spec.size_frac as f64 * half * rng.uniform(0.88, 1.12)?;
    let hue = spec.hue + rng.uniform(-0.03, 0.03)? as f32;
    let angle = rng.uniform(-0.35, 0.35)?;
    let (sin, cos) = angle.sin_cos();
    // black background so geometric fill (value 0) blends with it
    let bg = 0.0f32;
    let fg = hsv_to_rgb(hue, 0.85, 0.85);
    let mut img = Image::filled(size, size, [bg, bg, bg]);
    for y in 0..size {
        for x in 0..size {
            // rotate into the shape frame
            let dx0 = x as f64 - cx;
            let dy0 = y as f64 - cy;
            let dx = cos * dx0 + sin * dy0;
            let dy = -sin * dx0 + cos * dy0;
            let dist = (dx * dx + dy * dy).sqrt();
            let inside = match spec.shape {
                ClassShape::Disk => dist <= radius,
                ClassShape::Bar => dx.abs() <= radius && dy.abs() <= radius / 3.0,
                ClassShape::Cross => {
                    (dx.abs() <= radius / 3.0 && dy.abs() <= radius)
                        || (dy.abs() <= radius / 3.0 && dx.abs() <= radius)
                }
                ClassShape::Ring => dist <= radius && dist >= radius * 0.55,
                ClassShape::Checker => {
                    let cell = (radius / 2.0).max(1.0);
                    dx.abs() <= radius
                        && dy.abs() <= radius
                        && ((dx / cell).floor() as i64 + (dy / cell).floor() as i64) % 2 == 0
                }
            };
            if inside {
                let tex = if spec.texture_freq > 0.0 {
                    0.8 + 0.2 * ((spec.texture_freq as f64 * (dx + dy)).sin() as f32)
                } else {
                    1.0
                };
                img.set_pixel(y, x, [fg[0] * tex, fg[1] * tex, fg[2] * tex]);
            }
        }
    }
    img.clamp01();
    Ok(img)
}

/// Deterministic image dataset: `train_per_class` + `test_per_class`
/// disjoint samples per class, jittered within class.
pub fn gen_image_dataset(
    specs: &[SyntheticClassSpec],
    train_per_class: usize,
    test_per_class: usize,
    image_size: usize,
    seed: u64,
) -> Result<ImageDataset> {
    if specs.len() < 2 {
        return Err(Error::Contract("need at least 2 classes".into()));
    }
    let mut ids = std::collections::HashSet::new();
    for s in specs {
        if !ids.insert(s.id) {
            return Err(Error::Data(format!("duplicate class id {}", s.id)));
        }
    }
    let root = RngStream::new(seed, "imgdata");
    let mut train = Vec::new();
    let mut test = Vec::new();
    for spec in specs {
        let mut samples = Vec::with_capacity(train_per_class);
        for i in 0..train_per_class {
            let mut rng = root.substream(&format!("train/{}/{}", spec.id, i));
            samples.push(render_sample(spec, image_size, &mut rng)?);
        }
        train.push((spec.id, samples));
        for i in 0..test_per_class {
            let mut rng = root.substream(&format!("test/{}/{}", spec.id, i));
            test.push((spec.id, render_sample(spec, image_size, &mut rng)?));
        }
    }
    Ok(ImageDataset { train, test, image_size })
}

#[derive(Debug, Clone)]
pub struct FeatureDataset {
    pub dim: usize,
    pub train: Vec<(ClassId, Vec<Vector>)>,
    pub test: Vec<(ClassId, Vector)>,
}

/// Labeled Gaussian feature vectors: class means on a sphere, shared
/// covariance with the requested condition number, optional per-class
/// exponential skew component.
#[allow(clippy::too_many_arguments)]
pub fn gen_feature_dataset(
    n_classes: usize,
    dim: usize,
    train_per_class: usize,
    test_per_class: usize,
    anisotropy: f64,
    skew: f64,
    mean_radius: f64,
    seed: u64,
) -> Result<FeatureDataset> {
    if dim < 1 {
        return Err(Error::Contract("dim must be >= 1".into()));
    }
    if anisotropy < 1.0 {
        return Err(Error::Contract(format!("anisotropy {anisotropy} must be >= 1")));
    }
    let root = RngStream::new(seed, "featdata");
    let mut setup = root.substream("setup");
    // random orthogonal basis by Gram-Schmidt on a Gaussian matrix
    let q = random_orthogonal(dim, &mut setup);
    // eigenvalues geometric between sqrt(a) and 1/sqrt(a): condition = a
    let scales: Vec<f64> = (0..dim)
        .map(|j| {
            let t = if dim == 1 { 0.5 } else { j as f64 / (dim - 1) as f64 };
            anisotropy.powf(0.5 - t).sqrt() // sqrt of eigenvalue
        })
        .collect();
    let means: Vec<Vec<f64>> = (0..n_classes)
        .map(|_| {
            let v: Vec<f64> = (0..dim).map(|_| setup.gaussian()).collect();
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt().max(1e-12);
            v.iter().map(|x| x / norm * mean_radius).collect()
        })
        .collect();
    let skew_dirs: Vec<Vec<f64>> = (0..n_classes)
        .map(|_| {
            let v: Vec<f64> = (0..dim).map(|_| setup.gaussian()).collect();
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt().max(1e-12);
            v.iter().map(|x| x / norm).collect()
        })
        .collect();

    let draw = |class: usize, split: &str, i: usize| -> Result<Vector> {
        let mut rng = root.substream(&format!("{split}/{class}/{i}"));
        let u: Vec<f64> = (0..dim).map(|_| rng.gaussian()).collect();
        let mut z = means[class].clone();
        // Q diag(scales) u
        for row in 0..dim {
            let mut acc = 0.0;
            for k in 0..dim {
                acc += q[row * dim + k] * scales[k] * u[k];
            }
            z[row] += acc;
        }
        if skew != 0.0 {
            let e = -(1.0 - rng.uniform01()).ln(); // Exp(1)
            for (slot, d) in z.iter_mut().zip(&skew_dirs[class]) {
                *slot += skew * e * d;
            }
        }
        Vector::new(z.iter().map(|&v| v as f32).collect())
    };

    let mut train = Vec::new();
    let mut test = Vec::new();
    for c in 0..n_classes {
        let samples: Result<Vec<Vector>> =
            (0..train_per_class).map(|i| draw(c, "train", i)).collect();
        train.push((c as ClassId, samples?));
        for i in 0..test_per_class {
            test.push((c as ClassId, draw(c, "test", i)?));
        }
    }
    Ok(FeatureDataset { dim, train, test })
}

fn random_orthogonal(dim: usize, rng: &mut RngStream) -> Vec<f64> {
    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(dim);
    while rows.len() < dim {
        let mut v: Vec<f64> = (0..dim).map(|_| rng.gaussian()).collect();
        for r in &rows {
            let proj: f64 = r.iter().zip(&v).map(|(a, b)| a * b).sum();
            for (slot, a) in v.iter_mut().zip(r) {
                *slot -= proj * a;
            }
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-8 {
            for slot in &mut v {
                *slot /= norm;
            }
            rows.push(v);
        }
    }
    let mut q = vec![0.0; dim * dim];
    for (i, r) in rows.iter().enumerate() {
        for (j, &v) in r.iter().enumerate() {
            q[i * dim + j] = v;
        }
    }
    q
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn image_dataset_counts_and_determinism() {
        let specs = default_class_specs()[..2].to_vec();
        let a = gen_image_dataset(&specs, 5, 3, 32, 7).unwrap();
        let b = gen_image_dataset(&specs, 5, 3, 32, 7).unwrap();
        assert_eq!(a.train.len(), 2);
        assert!(a.train.iter().all(|(_, v)| v.len() == 5));
        assert_eq!(a.test.len(), 6);
        for ((ca, ia), (cb, ib)) in a.train.iter().zip(&b.train) {
            assert_eq!(ca, cb);
            assert_eq!(ia, ib);
        }
    }

    #[test]
    fn duplicate_class_ids_rejected() {
        let mut specs = default_class_specs()[..2].to_vec();
        specs[1].id = specs[0].id;
        assert!(gen_image_dataset(&specs, 2, 1, 32, 0).is_err());
    }

    #[test]
    fn feature_dataset_shapes_and_determinism() {
        let a = gen_feature_dataset(3, 8, 10, 4, 10.0, 0.5, 4.0, 11).unwrap();
        let b = gen_feature_dataset(3, 8, 10, 4, 10.0, 0.5, 4.0, 11).unwrap();
        assert_eq!(a.train.len(), 3);
        assert_eq!(a.test.len(), 12);
        assert_eq!(a.train[0].1, b.train[0].1);
        assert!(gen_feature_dataset(2, 4, 2, 2, 0.5, 0.0, 1.0, 0).is_err());
        assert!(gen_feature_dataset(2, 0, 2, 2, 1.0, 0.0, 1.0, 0).is_err());
    }

    #[test]
    fn one_shot_dataset_is_valid() {
        let d = gen_feature_dataset(3, 4, 1, 1, 1.0, 0.0, 5.0, 2).unwrap();
        assert!(d.train.iter().all(|(_, v)| v.len() == 1));
    }

    #[test]
    fn covariance_is_isotropic_at_anisotropy_one() {
        // anisotropy 1 means every eigenvalue is 1: sample variance per
        // coordinate should be about 1
        let d = gen_feature_dataset(1, 4, 4000, 0, 1.0, 0.0, 0.0, 3).unwrap();
        for j in 0..4 {
            let vals: Vec<f64> = d.train[0].1.iter().map(|v| v.data()[j] as f64).collect();
            let mean = vals.iter().sum::<f64>() / vals.len() as f64;
            let var =
                vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / vals.len() as f64;
            assert!((var - 1.0).abs() < 0.1, "coord {j} var {var}");
        }
    }
}
