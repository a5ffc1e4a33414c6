//! Non-referenced sharpness scoring from the Fourier spectrum.
//!
//! Motion blur suppresses the fine detail (edges) that lives in the high
//! spatial frequencies of a frame, so the fraction of spectral energy above a
//! radial cutoff is a usable per-frame sharpness score: lower means blurrier.

use image::RgbImage;
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

/// Result of [`fft_blur_score`]: `score` is the high-frequency share of the
/// non-DC spectral energy, in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlurScore {
    pub score: f64,
    /// Fraction of the Nyquist radius used as the low/high split.
    pub cutoff_radius_frac: f64,
}

/// Default low/high spectral split, as a fraction of the Nyquist radius.
pub const DEFAULT_CUTOFF_RADIUS_FRAC: f64 = 0.25;

/// BT.601 luminance of an 8-bit RGB pixel.
fn luminance(r: u8, g: u8, b: u8) -> f64 {
    0.299 * r as f64 + 0.587 * g as f64 + 0.114 * b as f64
}

/// Score the sharpness of a frame as the proportion of non-DC spectral
/// energy above `cutoff_radius_frac` of the Nyquist radius.
///
/// The image is reduced to BT.601 luminance, transformed with a 2-D DFT, and
/// the squared magnitudes are split by centered radial frequency at
/// `cutoff_radius_frac × min(W, H) / 2`. A constant image has no non-DC
/// energy and scores 0 by convention.
pub fn fft_blur_score(image: &RgbImage, cutoff_radius_frac: f64) -> crate::Result<BlurScore> {
    let (w, h) = image.dimensions();
    if w < 8 || h < 8 {
        return Err(crate::Error::ImageTooSmall {
            width: w,
            height: h,
            min: 8,
        });
    }
    if !(cutoff_radius_frac > 0.0 && cutoff_radius_frac < 1.0) {
        return Err(crate::Error::InvalidParams(format!(
            "cutoff_radius_frac {cutoff_radius_frac} must lie in (0, 1)"
        )));
    }

    let (w, h) = (w as usize, h as usize);
    let luma: Vec<f64> = image
        .pixels()
        .map(|p| luminance(p.0[0], p.0[1], p.0[2]))
        .collect();

    // A flat image has zero non-DC energy in exact arithmetic; short-circuit
    // so FFT rounding noise cannot turn 0/0 into garbage.
    let first = luma[0];
    if luma.iter().all(|&v| v == first) {
        return Ok(BlurScore {
            score: 0.0,
            cutoff_radius_frac,
        });
    }

    let mut buf: Vec<Complex<f64>> = luma.into_iter().map(|v| Complex::new(v, 0.0)).collect();

    let mut planner = FftPlanner::new();
    let row_fft = planner.plan_fft_forward(w);
    for row in buf.chunks_exact_mut(w) {
        row_fft.process(row);
    }
    let col_fft = planner.plan_fft_forward(h);
    let mut col = vec![Complex::new(0.0, 0.0); h];
    for x in 0..w {
        for y in 0..h {
            col[y] = buf[y * w + x];
        }
        col_fft.process(&mut col);
        for y in 0..h {
            buf[y * w + x] = col[y];
        }
    }

    // Radial distance from DC in the centered spectrum equals the wrapped
    // frequency distance, so no explicit fftshift is needed.
    let cutoff = cutoff_radius_frac * (w.min(h) as f64 / 2.0);
    let mut total = 0.0f64;
    let mut high = 0.0f64;
    for v in 0..h {
        let fv = v.min(h - v) as f64;
        for u in 0..w {
            if u == 0 && v == 0 {
                continue; // DC
            }
            let fu = u.min(w - u) as f64;
            let energy = buf[v * w + u].norm_sqr();
            total += energy;
            if (fu * fu + fv * fv).sqrt() > cutoff {
                high += energy;
            }
        }
    }

    let score = if total > 0.0 { high / total } else { 0.0 };
    Ok(BlurScore {
        score,
        cutoff_radius_frac,
    })
}
