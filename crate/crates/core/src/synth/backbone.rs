//! Fixed, seeded convolutional feature extractor standing in for a frozen
//! pretrained network. Two bias-free 3×3 conv banks with ReLU and 2×2
//! average pooling; the whole forward pass is positively homogeneous.

use super::image::Image;
use crate::error::{Error, Result};
use crate::rng::RngStream;
use crate::tensor::FeatureMap;

/// Defaults give (8, 8, 64) features for 32×32 inputs.
pub const DEFAULT_MID_CHANNELS: usize = 16;
pub const DEFAULT_OUT_CHANNELS: usize = 64;

#[derive(Debug, Clone)]
pub struct ToyBackbone {
    seed: u64,
    mid: usize,
    out: usize,
    // conv weights: [out][in][3][3] flattened
    w1: Vec<f32>,
    w2: Vec<f32>,
}

impl ToyBackbone {
    pub fn new(seed: u64) -> Self {
        Self::with_channels(seed, DEFAULT_MID_CHANNELS, DEFAULT_OUT_CHANNELS)
    }

    pub fn with_channels(seed: u64, mid: usize, out: usize) -> Self {
        let mut rng = RngStream::new(seed, "backbone/weights");
        // He-style scale keeps activations in a sane range
        let s1 = (2.0f64 / (3.0 * 9.0)).sqrt();
        let w1 = (0..mid * 3 * 9).map(|_| (rng.gaussian() * s1) as f32).collect();
        // extra gain brings typical activations to O(1), the scale the
        // classifier-side shrinkage constants assume
        let s2 = 16.0 * (2.0 / (mid as f64 * 9.0)).sqrt();
        let w2 = (0..out * mid * 9).map(|_| (rng.gaussian() * s2) as f32).collect();
        ToyBackbone { seed, mid, out, w1, w2 }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn out_channels(&self) -> usize {
        self.out
    }

    /// Output spatial shape for an input of (h, w): two 2× poolings.
    pub fn out_shape(&self, h: usize, w: usize) -> (usize, usize, usize) {
        (h / 4, w / 4, self.out)
    }

    pub fn forward(&self, img: &Image) -> Result<FeatureMap> {
        if img.h() < 8 || img.w() < 8 {
            return Err(Error::Contract(format!(
                "image {}x{} below the 8x8 receptive field",
                img.h(),
                img.w()
            )));
        }
        let x0 = FeatureMap::new(img.h(), img.w(), 3, img.data().to_vec())?;
        let x1 = avg_pool2(&relu(conv3x3(&x0, &self.w1, self.mid)));
        let x2 = avg_pool2(&relu(conv3x3(&x1, &self.w2, self.out)));
        Ok(x2)
    }
}

/// Zero-padded 3×3 convolution, bias-free. Weights are [out][in][ky][kx].
fn conv3x3(input: &FeatureMap, weights: &[f32], out_channels: usize) -> FeatureMap {
    let (h, w, cin) = (input.h(), input.w(), input.d());
    let mut out = FeatureMap::zeros(h, w, out_channels);
    for y in 0..h {
        for x in 0..w {
            for oc in 0..out_channels {
                let mut acc = 0.0f64;
                for ky in 0..3usize {
                    let sy = y as i64 + ky as i64 - 1;
                    if sy < 0 || sy >= h as i64 {
                        continue;
                    }
                    for kx in 0..3usize {
                        let sx = x as i64 + kx as i64 - 1;
                        if sx < 0 || sx >= w as i64 {
                            continue;
                        }
                        for ic in 0..cin {
                            let wv = weights[((oc * cin + ic) * 3 + ky) * 3 + kx];
                            acc += (wv * input.get(sy as usize, sx as usize, ic)) as f64;
                        }
                    }
                }
                out.set(y, x, oc, acc as f32);
            }
        }
    }
    out
}

fn relu(mut m: FeatureMap) -> FeatureMap {
    let (h, w, d) = (m.h(), m.w(), m.d());
    for y in 0..h {
        for x in 0..w {
            for c in 0..d {
                let v = m.get(y, x, c);
                if v < 0.0 {
                    m.set(y, x, c, 0.0);
                }
            }
        }
    }
    m
}

fn avg_pool2(m: &FeatureMap) -> FeatureMap {
    let (h, w, d) = (m.h() / 2, m.w() / 2, m.d());
    let mut out = FeatureMap::zeros(h, w, d);
    for y in 0..h {
        for x in 0..w {
            for c in 0..d {
                let v = (m.get(2 * y, 2 * x, c)
                    + m.get(2 * y, 2 * x + 1, c)
                    + m.get(2 * y + 1, 2 * x, c)
                    + m.get(2 * y + 1, 2 * x + 1, c))
                    / 4.0;
                out.set(y, x, c, v);
            }
        }
    }
    out
}
