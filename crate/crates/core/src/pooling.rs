//! Pooling schemes reducing a spatial feature map to an embedding vector.
//!
//! The central scheme concatenates, per channel, the first R statistical
//! moments of the spatial distribution: mean, population standard deviation,
//! and standardized central moments from order 3 up (skewness at R=3).
//! The competitor schemes (avg, max, their concatenation and mixture, Lp,
//! stochastic selection, top-k activation pooling) share one entry point.

use crate::error::{Error, Result};
use crate::rng::RngStream;
use crate::tensor::FeatureMap;

pub const DEFAULT_SIGMA_FLOOR: f64 = 1e-12;

/// Which pooling scheme to run, with its parameters.
#[derive(Debug, Clone, PartialEq)]
pub enum PoolingSpec {
    /// First `r` moments per channel; channels with σ ≤ sigma_floor get
    /// zero standardized moments.
    Moments { r: usize, sigma_floor: f64 },
    Avg,
    Max,
    AvgMax,
    /// α·avg + (1−α)·max, α ∈ [0, 1].
    Mix { alpha: f64 },
    /// (E[|g|^p])^(1/p), p ≥ 1.
    Lp { p: f64 },
    /// One spatial activation per channel, sampled proportionally to the
    /// min-shifted activations.
    Stochastic,
    /// Top ceil(k·h·w) spatial values per channel, descending.
    Rap { k_percent: f64 },
}

impl PoolingSpec {
    pub fn moments(r: usize) -> Self {
        PoolingSpec::Moments { r, sigma_floor: DEFAULT_SIGMA_FLOOR }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            PoolingSpec::Moments { r, sigma_floor } => {
                if r < 1 {
                    return Err(Error::Contract("moments pooling requires R >= 1".into()));
                }
                if sigma_floor < 0.0 {
                    return Err(Error::Contract("sigma_floor must be >= 0".into()));
                }
            }
            PoolingSpec::Mix { alpha } => {
                if !(0.0..=1.0).contains(&alpha) {
                    return Err(Error::Contract(format!("mix alpha {alpha} outside [0,1]")));
                }
            }
            PoolingSpec::Lp { p } => {
                if p < 1.0 {
                    return Err(Error::Contract(format!("lp order {p} must be >= 1")));
                }
            }
            PoolingSpec::Rap { k_percent } => {
                if !(k_percent > 0.0 && k_percent <= 1.0) {
                    return Err(Error::Contract(format!("rap k_percent {k_percent} outside (0,1]")));
                }
            }
            _ => {}
        }
        Ok(())
    }

    /// Output dimension for a map with `d` channels and `hw` spatial cells.
    pub fn output_dim(&self, d: usize, hw: usize) -> usize {
        match *self {
            PoolingSpec::Moments { r, .. } => r * d,
            PoolingSpec::AvgMax => 2 * d,
            PoolingSpec::Rap { k_percent } => d * rap_k(k_percent, hw),
            _ => d,
        }
    }
}

fn rap_k(k_percent: f64, hw: usize) -> usize {
    ((k_percent * hw as f64).ceil() as usize).clamp(1, hw)
}

/// Pooled embedding together with the spec that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct PooledVector {
    pub data: Vec<f32>,
    pub spec: PoolingSpec,
}

impl PooledVector {
    pub fn dim(&self) -> usize {
        self.data.len()
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.data.iter().map(|&v| v as f64).collect()
    }
}

/// Moment pooling: output[(r−1)·d + c] is the r-th moment of channel c.
pub fn pool_moments(g: &FeatureMap, r: usize, sigma_floor: f64) -> Result<PooledVector> {
    let spec = PoolingSpec::Moments { r, sigma_floor };
    spec.validate()?;
    let d = g.d();
    let n = g.spatial_len() as f64;
    let mut out = vec![0.0f32; r * d];
    for c in 0..d {
        let mean = g.channel(c).map(|v| v as f64).sum::<f64>() / n;
        out[c] = mean as f32;
        if r < 2 {
            continue;
        }
        let var = g.channel(c).map(|v| (v as f64 - mean).powi(2)).sum::<f64>() / n;
        let sigma = var.sqrt();
        out[d + c] = sigma as f32;
        if sigma <= sigma_floor {
            // standardized moments of a (near-)constant channel are 0
            continue;
        }
        for order in 3..=r {
            let m = g
                .channel(c)
                .map(|v| ((v as f64 - mean) / sigma).powi(order as i32))
                .sum::<f64>()
                / n;
            out[(order - 1) * d + c] = m as f32;
        }
    }
    Ok(PooledVector { data: out, spec })
}

/// Dispatch over every pooling kind. `rng` must be present exactly for the
/// stochastic kind.
pub fn pool(g: &FeatureMap, spec: &PoolingSpec, rng: Option<&mut RngStream>) -> Result<PooledVector> {
    spec.validate()?;
    match (spec, &rng) {
        (PoolingSpec::Stochastic, None) => {
            return Err(Error::Contract("stochastic pooling requires an RNG stream".into()))
        }
        (PoolingSpec::Stochastic, Some(_)) => {}
        (_, Some(_)) => {
            return Err(Error::Contract("only stochastic pooling takes an RNG stream".into()))
        }
        _ => {}
    }
    let d = g.d();
    let n = g.spatial_len() as f64;
    let data: Vec<f32> = match *spec {
        PoolingSpec::Moments { r, sigma_floor } => return pool_moments(g, r, sigma_floor),
        PoolingSpec::Avg => (0..d).map(|c| channel_mean(g, c, n)).collect(),
        PoolingSpec::Max => (0..d).map(|c| channel_max(g, c)).collect(),
        PoolingSpec::AvgMax => (0..d)
            .map(|c| channel_mean(g, c, n))
            .chain((0..d).map(|c| channel_max(g, c)))
            .collect(),
        PoolingSpec::Mix { alpha } => (0..d)
            .map(|c| {
                (alpha * channel_mean(g, c, n) as f64
                    + (1.0 - alpha) * channel_max(g, c) as f64) as f32
            })
            .collect(),
        PoolingSpec::Lp { p } => (0..d)
            .map(|c| {
                let m = g.channel(c).map(|v| (v as f64).abs().powf(p)).sum::<f64>() / n;
                m.powf(1.0 / p) as f32
            })
            .collect(),
        PoolingSpec::Stochastic => {
            let rng = rng.unwrap();
            (0..d).map(|c| sample_channel(g, c, rng)).collect()
        }
        PoolingSpec::Rap { k_percent } => {
            let k = rap_k(k_percent, g.spatial_len());
            let mut out = Vec::with_capacity(d * k);
            for c in 0..d {
                let mut vals: Vec<f32> = g.channel(c).collect();
                // descending by value, ties by row-major spatial index:
                // stable sort preserves the original index order within ties
                vals.sort_by(|a, b| b.partial_cmp(a).unwrap());
                out.extend_from_slice(&vals[..k]);
            }
            out
        }
    };
    Ok(PooledVector { data, spec: spec.clone() })
}

fn channel_mean(g: &FeatureMap, c: usize, n: f64) -> f32 {
    (g.channel(c).map(|v| v as f64).sum::<f64>() / n) as f32
}

fn channel_max(g: &FeatureMap, c: usize) -> f32 {
    g.channel(c).fold(f32::NEG_INFINITY, f32::max)
}

/// Sample one activation with probability proportional to the min-shifted
/// values; an all-equal channel samples uniformly.
fn sample_channel(g: &FeatureMap, c: usize, rng: &mut RngStream) -> f32 {
    let vals: Vec<f32> = g.channel(c).collect();
    let min = vals.iter().copied().fold(f32::INFINITY, f32::min);
    let weights: Vec<f64> = vals.iter().map(|&v| (v - min) as f64).collect();
    let total: f64 = weights.iter().sum();
    if total <= 0.0 {
        return vals[rng.index(vals.len())];
    }
    let mut target = rng.uniform01() * total;
    for (i, &w) in weights.iter().enumerate() {
        target -= w;
        if target < 0.0 {
            return vals[i];
        }
    }
    *vals.last().unwrap()
}

/// Wasserstein-1 distance between two 1-D empirical distributions
/// (equal-mass quantile coupling).
pub fn moment_drift(values_a: &[f64], values_b: &[f64]) -> Result<f64> {
    if values_a.is_empty() || values_b.is_empty() {
        return Err(Error::Contract("moment_drift requires non-empty samples".into()));
    }
    let mut a = values_a.to_vec();
    let mut b = values_b.to_vec();
    a.sort_by(|x, y| x.partial_cmp(y).unwrap());
    b.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let n = a.len();
    let m = b.len();
    if n == m {
        return Ok(a.iter().zip(&b).map(|(x, y)| (x - y).abs()).sum::<f64>() / n as f64);
    }
    // integrate |F_a^{-1}(q) − F_b^{-1}(q)| over q with breakpoints at i/n, j/m
    let mut total = 0.0;
    let (mut i, mut j) = (0usize, 0usize);
    let mut q = 0.0f64;
    while i < n && j < m {
        let qa = (i + 1) as f64 / n as f64;
        let qb = (j + 1) as f64 / m as f64;
        let q_next = qa.min(qb);
        total += (q_next - q) * (a[i] - b[j]).abs();
        q = q_next;
        if qa <= q_next {
            i += 1;
        }
        if qb <= q_next {
            j += 1;
        }
    }
    Ok(total)
}
