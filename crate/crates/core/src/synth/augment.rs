//! Deterministic image augmentations: color jitter, Gaussian blur, affine /
//! perspective / flip geometry, and their composition.
//!
//! All parameter draws come from the caller's RngStream in a fixed order, so
//! a given (seed, label) reproduces pixel-identical outputs. Outputs are
//! clamped into [0, 1].

use super::image::{gray, hsv_to_rgb, rgb_to_hsv, Image};
use crate::error::Result;
use crate::rng::RngStream;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AugmentationKind {
    Clean,
    /// Color jitter: brightness [0.5,1.5], contrast [0.5,1], saturation
    /// [0.5,1.5], hue [-0.1,0.1], applied in that order.
    Illum,
    /// Gaussian blur, 11×11 kernel, σ in [0.1,0.5], reflect borders.
    Noise,
    /// Affine about the center (rotation [-30,30]°, translation [-0.2,0.2],
    /// scale [0.8,1.2], shear [-0.1,0.1]), then perspective (p=0.2,
    /// distortion 0.2), then horizontal flip p=0.5, vertical flip p=0.3.
    Geom,
    /// Geometry first, then blur, then color jitter.
    All,
}

impl AugmentationKind {
    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "clean" => AugmentationKind::Clean,
            "illum" => AugmentationKind::Illum,
            "noise" => AugmentationKind::Noise,
            "geom" => AugmentationKind::Geom,
            "all" => AugmentationKind::All,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            AugmentationKind::Clean => "clean",
            AugmentationKind::Illum => "illum",
            AugmentationKind::Noise => "noise",
            AugmentationKind::Geom => "geom",
            AugmentationKind::All => "all",
        }
    }
}

pub fn augment(img: &Image, kind: AugmentationKind, rng: &mut RngStream) -> Result<Image> {
    let mut out = match kind {
        AugmentationKind::Clean => img.clone(),
        AugmentationKind::Illum => illum_jitter(img, rng)?,
        AugmentationKind::Noise => gaussian_blur(img, rng)?,
        AugmentationKind::Geom => geometric(img, rng)?,
        AugmentationKind::All => {
            let g = geometric(img, rng)?;
            let n = gaussian_blur(&g, rng)?;
            illum_jitter(&n, rng)?
        }
    };
    out.clamp01();
    Ok(out)
}

fn illum_jitter(img: &Image, rng: &mut RngStream) -> Result<Image> {
    let brightness = rng.uniform(0.5, 1.5)?;
    let contrast = rng.uniform(0.5, 1.0)?;
    let saturation = rng.uniform(0.5, 1.5)?;
    let hue = rng.uniform(-0.1, 0.1)?;
    let mut out = img.clone();
    apply_pointwise(&mut out, |px| {
        for v in px.iter_mut() {
            *v = (*v * brightness as f32).clamp(0.0, 1.0);
        }
    });
    let g = out.mean_gray();
    apply_pointwise(&mut out, |px| {
        for v in px.iter_mut() {
            *v = ((*v - g) * contrast as f32 + g).clamp(0.0, 1.0);
        }
    });
    apply_pointwise(&mut out, |px| {
        let py = gray(px);
        for v in px.iter_mut() {
            *v = (py + (*v - py) * saturation as f32).clamp(0.0, 1.0);
        }
    });
    apply_pointwise(&mut out, |px| {
        let (h, s, v) = rgb_to_hsv([px[0], px[1], px[2]]);
        let shifted = hsv_to_rgb(h + hue as f32, s, v);
        px.copy_from_slice(&shifted);
    });
    Ok(out)
}

fn apply_pointwise(img: &mut Image, mut f: impl FnMut(&mut [f32; 3])) {
    for y in 0..img.h() {
        for x in 0..img.w() {
            let mut px = img.pixel(y, x);
            f(&mut px);
            img.set_pixel(y, x, px);
        }
    }
}

const BLUR_TAPS: usize = 11;

fn gaussian_blur(img: &Image, rng: &mut RngStream) -> Result<Image> {
    let sigma = rng.uniform(0.1, 0.5)?;
    Ok(blur_with_sigma(img, sigma))
}

/// Separable 11-tap Gaussian blur with reflect padding.
pub fn blur_with_sigma(img: &Image, sigma: f64) -> Image {
    let half = (BLUR_TAPS / 2) as i64;
    let mut kernel = [0.0f64; BLUR_TAPS];
    let mut total = 0.0;
    for (i, k) in kernel.iter_mut().enumerate() {
        let x = i as f64 - half as f64;
        *k = (-x * x / (2.0 * sigma * sigma)).exp();
        total += *k;
    }
    for k in &mut kernel {
        *k /= total;
    }
    let (h, w) = (img.h(), img.w());
    let reflect = |idx: i64, n: i64| -> usize {
        let mut i = idx;
        if i < 0 {
            i = -i;
        }
        if i >= n {
            i = 2 * n - 2 - i;
        }
        i.clamp(0, n - 1) as usize
    };
    // horizontal pass
    let mut mid = Image::filled(h, w, [0.0; 3]);
    for y in 0..h {
        for x in 0..w {
            let mut acc = [0.0f64; 3];
            for (i, &k) in kernel.iter().enumerate() {
                let sx = reflect(x as i64 + i as i64 - half, w as i64);
                let px = img.pixel(y, sx);
                for c in 0..3 {
                    acc[c] += k * px[c] as f64;
                }
            }
            mid.set_pixel(y, x, [acc[0] as f32, acc[1] as f32, acc[2] as f32]);
        }
    }
    // vertical pass
    let mut out = Image::filled(h, w, [0.0; 3]);
    for y in 0..h {
        for x in 0..w {
            let mut acc = [0.0f64; 3];
            for (i, &k) in kernel.iter().enumerate() {
                let sy = reflect(y as i64 + i as i64 - half, h as i64);
                let px = mid.pixel(sy, x);
                for c in 0..3 {
                    acc[c] += k * px[c] as f64;
                }
            }
            out.set_pixel(y, x, [acc[0] as f32, acc[1] as f32, acc[2] as f32]);
        }
    }
    out
}

fn geometric(img: &Image, rng: &mut RngStream) -> Result<Image> {
    let rotation = rng.uniform(-30.0, 30.0)?;
    let tx = rng.uniform(-0.2, 0.2)?;
    let ty = rng.uniform(-0.2, 0.2)?;
    let scale = rng.uniform(0.8, 1.2)?;
    let shear = rng.uniform(-0.1, 0.1)?;
    let mut out = affine_transform(img, rotation, tx, ty, scale, shear);
    if rng.uniform01() < 0.2 {
        out = perspective(&out, 0.2, rng)?;
    }
    if rng.uniform01() < 0.5 {
        out = flip_horizontal(&out);
    }
    if rng.uniform01() < 0.3 {
        out = flip_vertical(&out);
    }
    Ok(out)
}

/// Affine warp about the image center: rotation (degrees), translation
/// (fractions of width/height), isotropic scale, x-shear. Bilinear sampling,
/// zero fill outside the source.
pub fn affine_transform(
    img: &Image,
    rotation_deg: f64,
    tx_frac: f64,
    ty_frac: f64,
    scale: f64,
    shear: f64,
) -> Image {
    let (h, w) = (img.h(), img.w());
    let theta = rotation_deg.to_radians();
    let (sin, cos) = theta.sin_cos();
    // forward 2x2 in (x, y): rotation · scale · x-shear
    let a = scale * cos;
    let b = scale * (cos * shear - sin);
    let c = scale * sin;
    let d = scale * (sin * shear + cos);
    // inverse of [[a, b], [c, d]]
    let det = a * d - b * c;
    let (ia, ib, ic, id) = (d / det, -b / det, -c / det, a / det);
    let cx = (w as f64 - 1.0) / 2.0;
    let cy = (h as f64 - 1.0) / 2.0;
    let tx = tx_frac * w as f64;
    let ty = ty_frac * h as f64;
    let mut out = Image::filled(h, w, [0.0; 3]);
    for y in 0..h {
        for x in 0..w {
            let dx = x as f64 - cx - tx;
            let dy = y as f64 - cy - ty;
            let sx = ia * dx + ib * dy + cx;
            let sy = ic * dx + id * dy + cy;
            out.set_pixel(y, x, img.sample_bilinear(sy, sx));
        }
    }
    out
}

pub fn flip_horizontal(img: &Image) -> Image {
    let (h, w) = (img.h(), img.w());
    let mut out = Image::filled(h, w, [0.0; 3]);
    for y in 0..h {
        for x in 0..w {
            out.set_pixel(y, x, img.pixel(y, w - 1 - x));
        }
    }
    out
}

pub fn flip_vertical(img: &Image) -> Image {
    let (h, w) = (img.h(), img.w());
    let mut out = Image::filled(h, w, [0.0; 3]);
    for y in 0..h {
        for x in 0..w {
            out.set_pixel(y, x, img.pixel(h - 1 - y, x));
        }
    }
    out
}

/// Random four-corner perspective warp with the given distortion fraction.
/// Each corner moves inward by up to distortion·(w/2, h/2).
fn perspective(img: &Image, distortion: f64, rng: &mut RngStream) -> Result<Image> {
    let (h, w) = (img.h() as f64, img.w() as f64);
    let dx = distortion * w / 2.0;
    let dy = distortion * h / 2.0;
    let src = [
        [0.0, 0.0],
        [w - 1.0, 0.0],
        [w - 1.0, h - 1.0],
        [0.0, h - 1.0],
    ];
    let mut dst = [[0.0f64; 2]; 4];
    for (i, corner) in src.iter().enumerate() {
        let ox = rng.uniform(0.0, dx)?;
        let oy = rng.uniform(0.0, dy)?;
        // displace inward toward the center
        let sx = if corner[0] == 0.0 { 1.0 } else { -1.0 };
        let sy = if corner[1] == 0.0 { 1.0 } else { -1.0 };
        dst[i] = [corner[0] + sx * ox, corner[1] + sy * oy];
    }
    // homography mapping dst -> src lets us inverse-warp output pixels
    let hmat = homography(&dst, &src)?;
    let (hh, ww) = (img.h(), img.w());
    let mut out = Image::filled(hh, ww, [0.0; 3]);
    for y in 0..hh {
        for x in 0..ww {
            let xf = x as f64;
            let yf = y as f64;
            let denom = hmat[6] * xf + hmat[7] * yf + 1.0;
            let sx = (hmat[0] * xf + hmat[1] * yf + hmat[2]) / denom;
            let sy = (hmat[3] * xf + hmat[4] * yf + hmat[5]) / denom;
            out.set_pixel(y, x, img.sample_bilinear(sy, sx));
        }
    }
    Ok(out)
}

/// 8-parameter homography from four point correspondences.
fn homography(from: &[[f64; 2]; 4], to: &[[f64; 2]; 4]) -> Result<[f64; 8]> {
    let mut a = [[0.0f64; 9]; 8]; // augmented 8x8 system
    for i in 0..4 {
        let [x, y] = from[i];
        let [u, v] = to[i];
        a[2 * i] = [x, y, 1.0, 0.0, 0.0, 0.0, -u * x, -u * y, u];
        a[2 * i + 1] = [0.0, 0.0, 0.0, x, y, 1.0, -v * x, -v * y, v];
    }
    // Gaussian elimination with partial pivoting
    for col in 0..8 {
        let pivot = (col..8)
            .max_by(|&i, &j| a[i][col].abs().partial_cmp(&a[j][col].abs()).unwrap())
            .unwrap();
        a.swap(col, pivot);
        let p = a[col][col];
        if p.abs() < 1e-12 {
            return Err(crate::error::Error::Numeric {
                msg: "degenerate perspective corners".into(),
                pivot: col,
            });
        }
        for k in col..9 {
            a[col][k] /= p;
        }
        for row in 0..8 {
            if row == col {
                continue;
            }
            let f = a[row][col];
            for k in col..9 {
                a[row][k] -= f * a[col][k];
            }
        }
    }
    let mut out = [0.0f64; 8];
    for i in 0..8 {
        out[i] = a[i][8];
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn test_image() -> Image {
        let mut img = Image::filled(16, 16, [0.1, 0.2, 0.3]);
        for y in 4..12 {
            for x in 4..12 {
                img.set_pixel(y, x, [0.9, 0.5, 0.2]);
            }
        }
        img
    }

    #[test]
    fn clean_is_identity() {
        let img = test_image();
        let mut rng = RngStream::new(1, "aug/clean");
        assert_eq!(augment(&img, AugmentationKind::Clean, &mut rng).unwrap(), img);
    }

    #[test]
    fn identity_affine_is_identity() {
        let img = test_image();
        let out = affine_transform(&img, 0.0, 0.0, 0.0, 1.0, 0.0);
        for (a, b) in img.data().iter().zip(out.data()) {
            assert!((a - b).abs() < 1e-6);
        }
    }

    #[test]
    fn blur_of_constant_is_constant() {
        let img = Image::filled(16, 16, [0.4, 0.4, 0.4]);
        let out = blur_with_sigma(&img, 0.5);
        for (a, b) in img.data().iter().zip(out.data()) {
            assert!((a - b).abs() < 1e-6);
        }
    }

    #[test]
    fn outputs_stay_in_unit_range() {
        let img = test_image();
        for kind in [
            AugmentationKind::Illum,
            AugmentationKind::Noise,
            AugmentationKind::Geom,
            AugmentationKind::All,
        ] {
            for s in 0..5 {
                let mut rng = RngStream::new(s, "aug/range");
                let out = augment(&img, kind, &mut rng).unwrap();
                assert!(out.data().iter().all(|v| (0.0..=1.0).contains(v)), "{kind:?}");
            }
        }
    }

    #[test]
    fn fixed_stream_reproduces_pixels() {
        let img = test_image();
        for kind in [AugmentationKind::Illum, AugmentationKind::Geom, AugmentationKind::All] {
            let a = augment(&img, kind, &mut RngStream::new(7, "aug/det")).unwrap();
            let b = augment(&img, kind, &mut RngStream::new(7, "aug/det")).unwrap();
            assert_eq!(a, b, "{kind:?}");
        }
    }

    #[test]
    fn flips_compose_to_identity() {
        let img = test_image();
        assert_eq!(flip_horizontal(&flip_horizontal(&img)), img);
        assert_eq!(flip_vertical(&flip_vertical(&img)), img);
    }

    #[test]
    fn identity_homography() {
        let pts = [[0.0, 0.0], [15.0, 0.0], [15.0, 15.0], [0.0, 15.0]];
        let h = homography(&pts, &pts).unwrap();
        let expect = [1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0];
        for (a, b) in h.iter().zip(&expect) {
            assert!((a - b).abs() < 1e-9);
        }
    }
}
