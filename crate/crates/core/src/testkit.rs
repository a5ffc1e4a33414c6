//! Synthetic frame helpers for tests and benchmarks. Not part of the
//! detection or simulation paths.

use image::RgbImage;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Uniform random RGB noise frame (seeded).
pub fn noise_frame(seed: u64, width: u32, height: u32) -> RgbImage {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    RgbImage::from_fn(width, height, |_, _| {
        image::Rgb([rng.random(), rng.random(), rng.random()])
    })
}

/// Bilinearly interpolated random grid: cheap low-frequency value noise.
pub fn value_noise(rng: &mut ChaCha8Rng, width: u32, height: u32, cell: u32) -> Vec<f64> {
    let gw = width / cell + 2;
    let gh = height / cell + 2;
    let grid: Vec<f64> = (0..gw * gh).map(|_| rng.random::<f64>()).collect();
    let mut field = Vec::with_capacity((width * height) as usize);
    for y in 0..height {
        let fy = y as f64 / cell as f64;
        let (y0, ty) = (fy.floor() as u32, fy.fract());
        for x in 0..width {
            let fx = x as f64 / cell as f64;
            let (x0, tx) = (fx.floor() as u32, fx.fract());
            let g = |gx: u32, gy: u32| grid[(gy * gw + gx) as usize];
            let top = g(x0, y0) * (1.0 - tx) + g(x0 + 1, y0) * tx;
            let bottom = g(x0, y0 + 1) * (1.0 - tx) + g(x0 + 1, y0 + 1) * tx;
            field.push(top * (1.0 - ty) + bottom * ty);
        }
    }
    field
}

/// Soil-like texture with a few saturated green discs; coarse patchiness
/// plus fine grain gives structure in every frequency band, which keeps
/// sharpness scores meaningful even under heavy blur.
pub fn textured_frame(seed: u64, width: u32, height: u32) -> RgbImage {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let coarse = value_noise(&mut rng, width, height, (height / 3).max(2));
    let mid = value_noise(&mut rng, width, height, (height / 12).max(2));
    let mut img = RgbImage::from_fn(width, height, |x, y| {
        let i = (y * width + x) as usize;
        let base = 90.0 + 40.0 * coarse[i] + 18.0 * mid[i] + rng.random_range(-5.0..5.0);
        image::Rgb([
            base.clamp(0.0, 255.0) as u8,
            (base * 0.75) as u8,
            (base * 0.5) as u8,
        ])
    });
    for _ in 0..5 {
        let cx = rng.random_range(0..width) as i64;
        let cy = rng.random_range(0..height) as i64;
        let r = rng.random_range(2..(height / 4).max(3)) as i64;
        draw_disc(&mut img, cx, cy, r, image::Rgb([40, 190, 50]));
    }
    img
}

/// Paint a filled disc, clipped to the frame.
pub fn draw_disc(img: &mut RgbImage, cx: i64, cy: i64, radius: i64, color: image::Rgb<u8>) {
    let (w, h) = (img.width() as i64, img.height() as i64);
    for y in (cy - radius).max(0)..=(cy + radius).min(h - 1) {
        for x in (cx - radius).max(0)..=(cx + radius).min(w - 1) {
            let (dx, dy) = (x - cx, y - cy);
            if dx * dx + dy * dy <= radius * radius {
                img.put_pixel(x as u32, y as u32, color);
            }
        }
    }
}

/// Separable Gaussian blur with edge replication; kernel radius 3σ.
pub fn gaussian_blur(img: &RgbImage, sigma: f64) -> RgbImage {
    assert!(sigma > 0.0);
    let radius = (3.0 * sigma).ceil() as i64;
    let kernel: Vec<f64> = (-radius..=radius)
        .map(|i| (-(i * i) as f64 / (2.0 * sigma * sigma)).exp())
        .collect();
    let norm: f64 = kernel.iter().sum();
    let kernel: Vec<f64> = kernel.iter().map(|k| k / norm).collect();

    let (w, h) = (img.width() as i64, img.height() as i64);
    let horizontal = RgbImage::from_fn(img.width(), img.height(), |x, y| {
        let mut acc = [0.0f64; 3];
        for (i, k) in kernel.iter().enumerate() {
            let sx = (x as i64 + i as i64 - radius).clamp(0, w - 1);
            let p = img.get_pixel(sx as u32, y);
            for c in 0..3 {
                acc[c] += k * p.0[c] as f64;
            }
        }
        image::Rgb([
            acc[0].round() as u8,
            acc[1].round() as u8,
            acc[2].round() as u8,
        ])
    });
    RgbImage::from_fn(img.width(), img.height(), |x, y| {
        let mut acc = [0.0f64; 3];
        for (i, k) in kernel.iter().enumerate() {
            let sy = (y as i64 + i as i64 - radius).clamp(0, h - 1);
            let p = horizontal.get_pixel(x, sy as u32);
            for c in 0..3 {
                acc[c] += k * p.0[c] as f64;
            }
        }
        image::Rgb([
            acc[0].round() as u8,
            acc[1].round() as u8,
            acc[2].round() as u8,
        ])
    })
}
