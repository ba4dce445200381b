//! In-memory RGB image with values in [0, 1], row-major, channel innermost.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    h: usize,
    w: usize,
    data: Vec<f32>, // h*w*3, interleaved RGB
}

impl Image {
    pub fn new(h: usize, w: usize, data: Vec<f32>) -> Result<Self> {
        if data.len() != h * w * 3 {
            return Err(Error::Contract(format!(
                "image payload length {} != {h}*{w}*3",
                data.len()
            )));
        }
        if !data.iter().all(|v| v.is_finite()) {
            return Err(Error::Data("non-finite pixel".into()));
        }
        Ok(Image { h, w, data })
    }

    pub fn filled(h: usize, w: usize, rgb: [f32; 3]) -> Self {
        let mut data = Vec::with_capacity(h * w * 3);
        for _ in 0..h * w {
            data.extend_from_slice(&rgb);
        }
        Image { h, w, data }
    }

    pub fn h(&self) -> usize {
        self.h
    }

    pub fn w(&self) -> usize {
        self.w
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    #[inline]
    pub fn pixel(&self, y: usize, x: usize) -> [f32; 3] {
        let i = (y * self.w + x) * 3;
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    #[inline]
    pub fn set_pixel(&mut self, y: usize, x: usize, rgb: [f32; 3]) {
        let i = (y * self.w + x) * 3;
        self.data[i] = rgb[0];
        self.data[i + 1] = rgb[1];
        self.data[i + 2] = rgb[2];
    }

    /// Bilinear sample at continuous coordinates; zero outside the image.
    pub fn sample_bilinear(&self, y: f64, x: f64) -> [f32; 3] {
        // allow the half-pixel fringe so integer-grid identity is exact
        if y < -1.0 || x < -1.0 || y > self.h as f64 || x > self.w as f64 {
            return [0.0; 3];
        }
        let y0 = y.floor();
        let x0 = x.floor();
        let fy = (y - y0) as f32;
        let fx = (x - x0) as f32;
        let fetch = |yy: i64, xx: i64| -> [f32; 3] {
            if yy < 0 || xx < 0 || yy >= self.h as i64 || xx >= self.w as i64 {
                [0.0; 3]
            } else {
                self.pixel(yy as usize, xx as usize)
            }
        };
        let p00 = fetch(y0 as i64, x0 as i64);
        let p01 = fetch(y0 as i64, x0 as i64 + 1);
        let p10 = fetch(y0 as i64 + 1, x0 as i64);
        let p11 = fetch(y0 as i64 + 1, x0 as i64 + 1);
        let mut out = [0.0f32; 3];
        for c in 0..3 {
            let top = p00[c] * (1.0 - fx) + p01[c] * fx;
            let bot = p10[c] * (1.0 - fx) + p11[c] * fx;
            out[c] = top * (1.0 - fy) + bot * fy;
        }
        out
    }

    /// Clamp every value into [0, 1] in place.
    pub fn clamp01(&mut self) {
        for v in &mut self.data {
            *v = v.clamp(0.0, 1.0);
        }
    }

    pub fn mean_gray(&self) -> f32 {
        let mut total = 0.0f64;
        for px in self.data.chunks_exact(3) {
            total += gray(px) as f64;
        }
        (total / (self.h * self.w) as f64) as f32
    }
}

#[inline]
pub fn gray(rgb: &[f32]) -> f32 {
    0.299 * rgb[0] + 0.587 * rgb[1] + 0.114 * rgb[2]
}

/// RGB in [0,1] -> (h, s, v) with h in [0, 1) turns.
pub fn rgb_to_hsv(rgb: [f32; 3]) -> (f32, f32, f32) {
    let [r, g, b] = rgb;
    let max = r.max(g).max(b);
    let min = r.min(g).min(b);
    let delta = max - min;
    let h = if delta == 0.0 {
        0.0
    } else if max == r {
        (((g - b) / delta).rem_euclid(6.0)) / 6.0
    } else if max == g {
        ((b - r) / delta + 2.0) / 6.0
    } else {
        ((r - g) / delta + 4.0) / 6.0
    };
    let s = if max == 0.0 { 0.0 } else { delta / max };
    (h, s, max)
}

pub fn hsv_to_rgb(h: f32, s: f32, v: f32) -> [f32; 3] {
    let h6 = h.rem_euclid(1.0) * 6.0;
    let i = h6.floor() as i32 % 6;
    let f = h6 - h6.floor();
    let p = v * (1.0 - s);
    let q = v * (1.0 - s * f);
    let t = v * (1.0 - s * (1.0 - f));
    match i {
        0 => [v, t, p],
        1 => [q, v, p],
        2 => [p, v, t],
        3 => [p, q, v],
        4 => [t, p, v],
        _ => [v, p, q],
    }
}
