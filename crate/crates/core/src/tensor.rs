//! Dense tensor types: spatial feature maps and flat vectors.
//!
//! Feature maps are row-major with the channel innermost: the value at
//! spatial position (y, x), channel c lives at `(y * w + x) * d + c`.

use crate::error::{Error, Result};

/// h×w×d spatial activation tensor (32-bit float payload).
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMap {
    h: usize,
    w: usize,
    d: usize,
    data: Vec<f32>,
}

impl FeatureMap {
    pub fn new(h: usize, w: usize, d: usize, data: Vec<f32>) -> Result<Self> {
        if h == 0 || w == 0 || d == 0 {
            return Err(Error::Contract(format!(
                "feature map dims must be positive, got {h}x{w}x{d}"
            )));
        }
        if data.len() != h * w * d {
            return Err(Error::Contract(format!(
                "feature map payload length {} != {h}*{w}*{d}",
                data.len()
            )));
        }
        if !data.iter().all(|v| v.is_finite()) {
            return Err(Error::Data("non-finite value in feature map".into()));
        }
        Ok(FeatureMap { h, w, d, data })
    }

    pub fn zeros(h: usize, w: usize, d: usize) -> Self {
        FeatureMap { h, w, d, data: vec![0.0; h * w * d] }
    }

    pub fn h(&self) -> usize {
        self.h
    }

    pub fn w(&self) -> usize {
        self.w
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn spatial_len(&self) -> usize {
        self.h * self.w
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    #[inline]
    pub fn get(&self, y: usize, x: usize, c: usize) -> f32 {
        self.data[(y * self.w + x) * self.d + c]
    }

    #[inline]
    pub fn set(&mut self, y: usize, x: usize, c: usize, v: f32) {
        self.data[(y * self.w + x) * self.d + c] = v;
    }

    /// Iterate the h·w values of one channel in row-major spatial order.
    pub fn channel(&self, c: usize) -> impl Iterator<Item = f32> + '_ {
        self.data.iter().skip(c).step_by(self.d).copied()
    }
}

/// Flat real vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Vector {
    data: Vec<f32>,
}

impl Vector {
    pub fn new(data: Vec<f32>) -> Result<Self> {
        if !data.iter().all(|v| v.is_finite()) {
            return Err(Error::Data("non-finite value in vector".into()));
        }
        Ok(Vector { data })
    }

    pub fn dim(&self) -> usize {
        self.data.len()
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.data.iter().map(|&v| v as f64).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn channel_iteration_is_strided() {
        // 2x2 map, d=2: channel 0 holds 1,3,5,7 and channel 1 holds 2,4,6,8.
        let m = FeatureMap::new(2, 2, 2, vec![1., 2., 3., 4., 5., 6., 7., 8.]).unwrap();
        assert_eq!(m.channel(0).collect::<Vec<_>>(), vec![1., 3., 5., 7.]);
        assert_eq!(m.channel(1).collect::<Vec<_>>(), vec![2., 4., 6., 8.]);
        assert_eq!(m.get(1, 0, 1), 6.0);
    }

    #[test]
    fn rejects_bad_shapes_and_nan() {
        assert!(FeatureMap::new(0, 1, 1, vec![]).is_err());
        assert!(FeatureMap::new(1, 1, 2, vec![1.0]).is_err());
        assert!(FeatureMap::new(1, 1, 1, vec![f32::NAN]).is_err());
        assert!(Vector::new(vec![f32::INFINITY]).is_err());
    }
}
