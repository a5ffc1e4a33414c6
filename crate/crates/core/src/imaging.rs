//! Green-on-brown detection for a single frame.
//!
//! The pipeline is: excess-green (ExG = 2G − R − B) index combined with HSV
//! thresholding into a binary plant mask, morphological opening to drop
//! speckle, then 8-connected component extraction into per-blob detections.
//! All operations are pure functions of their inputs and safe to run
//! concurrently on distinct frames.

use image::RgbImage;
use serde::{Deserialize, Serialize};

/// Per-pixel signed excess-green index map.
///
/// Values are `2G − R − B` over raw 8-bit channels, so they always lie in
/// `[-510, 510]` and any achromatic pixel scores 0.
#[derive(Debug, Clone)]
pub struct ExGMap {
    width: u32,
    height: u32,
    values: Vec<i16>,
}

impl ExGMap {
    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn values(&self) -> &[i16] {
        &self.values
    }

    pub fn get(&self, x: u32, y: u32) -> i16 {
        self.values[(y * self.width + x) as usize]
    }
}

/// Per-pixel plant/background mask with the same dimensions as its source.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryMask {
    width: u32,
    height: u32,
    bits: Vec<bool>,
}

impl BinaryMask {
    /// All-background mask of the given size.
    pub fn new(width: u32, height: u32) -> Self {
        Self {
            width,
            height,
            bits: vec![false; (width as usize) * (height as usize)],
        }
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn get(&self, x: u32, y: u32) -> bool {
        self.bits[(y * self.width + x) as usize]
    }

    pub fn set(&mut self, x: u32, y: u32, value: bool) {
        self.bits[(y * self.width + x) as usize] = value;
    }

    /// Number of plant pixels.
    pub fn count_ones(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn as_slice(&self) -> &[bool] {
        &self.bits
    }
}

/// Thresholds for the combined ExG + HSV segmentation and blob filtering.
///
/// Hue is in degrees `[0, 360)`; `wrap_hue` lets the accepted interval pass
/// through 0° (e.g. 350°–10°). Saturation and value are fractions in `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DetectionParams {
    pub exg_min: i16,
    pub exg_max: i16,
    pub hue_min: f32,
    pub hue_max: f32,
    pub wrap_hue: bool,
    pub sat_min: f32,
    pub sat_max: f32,
    pub val_min: f32,
    pub val_max: f32,
    /// Blobs below this pixel area are discarded.
    pub min_blob_area: u32,
    /// Disc radius of the morphological opening applied before labelling;
    /// 0 disables it.
    pub morph_open_radius: u32,
}

impl Default for DetectionParams {
    fn default() -> Self {
        Self {
            exg_min: 25,
            exg_max: 255,
            hue_min: 60.0,
            hue_max: 140.0,
            wrap_hue: false,
            sat_min: 0.24,
            sat_max: 1.0,
            val_min: 0.24,
            val_max: 0.98,
            min_blob_area: 10,
            morph_open_radius: 1,
        }
    }
}

impl DetectionParams {
    /// Check the internal ordering invariants.
    pub fn validate(&self) -> crate::Result<()> {
        if self.exg_min > self.exg_max {
            return Err(crate::Error::InvalidParams(format!(
                "exg_min {} > exg_max {}",
                self.exg_min, self.exg_max
            )));
        }
        if self.sat_min > self.sat_max {
            return Err(crate::Error::InvalidParams("sat_min > sat_max".into()));
        }
        if self.val_min > self.val_max {
            return Err(crate::Error::InvalidParams("val_min > val_max".into()));
        }
        if self.min_blob_area < 1 {
            return Err(crate::Error::InvalidParams("min_blob_area must be >= 1".into()));
        }
        Ok(())
    }
}

/// Axis-aligned bounding box in pixel coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BBox {
    pub x: u32,
    pub y: u32,
    pub w: u32,
    pub h: u32,
}

/// One extracted blob: tight bounding box, area-weighted centroid, pixel area.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    pub bbox: BBox,
    /// Mean of the blob's pixel coordinates.
    pub centroid: (f64, f64),
    pub area: u32,
}

/// Compute the excess-green index for every pixel.
pub fn compute_exg(image: &RgbImage) -> ExGMap {
    let (width, height) = image.dimensions();
    let values = image
        .pixels()
        .map(|p| {
            let [r, g, b] = p.0;
            2 * g as i16 - r as i16 - b as i16
        })
        .collect();
    ExGMap {
        width,
        height,
        values,
    }
}

/// Standard hexcone RGB → HSV conversion.
///
/// Returns (hue in degrees `[0, 360)`, saturation `[0, 1]`, value `[0, 1]`);
/// achromatic pixels report hue 0 and saturation 0.
pub fn rgb_to_hsv(r: u8, g: u8, b: u8) -> (f32, f32, f32) {
    let rf = r as f32 / 255.0;
    let gf = g as f32 / 255.0;
    let bf = b as f32 / 255.0;
    let max = rf.max(gf).max(bf);
    let min = rf.min(gf).min(bf);
    let delta = max - min;

    let hue = if delta == 0.0 {
        0.0
    } else if max == rf {
        60.0 * (((gf - bf) / delta).rem_euclid(6.0))
    } else if max == gf {
        60.0 * ((bf - rf) / delta + 2.0)
    } else {
        60.0 * ((rf - gf) / delta + 4.0)
    };
    let hue = if hue >= 360.0 { hue - 360.0 } else { hue };
    let sat = if max == 0.0 { 0.0 } else { delta / max };
    (hue, sat, max)
}

/// Inverse of [`rgb_to_hsv`]; rounds to the nearest 8-bit channel value.
pub fn hsv_to_rgb(hue: f32, sat: f32, val: f32) -> (u8, u8, u8) {
    let c = val * sat;
    let hp = hue.rem_euclid(360.0) / 60.0;
    let x = c * (1.0 - (hp.rem_euclid(2.0) - 1.0).abs());
    let (r1, g1, b1) = match hp as u32 {
        0 => (c, x, 0.0),
        1 => (x, c, 0.0),
        2 => (0.0, c, x),
        3 => (0.0, x, c),
        4 => (x, 0.0, c),
        _ => (c, 0.0, x),
    };
    let m = val - c;
    let to_u8 = |f: f32| ((f + m) * 255.0).round().clamp(0.0, 255.0) as u8;
    (to_u8(r1), to_u8(g1), to_u8(b1))
}

fn hue_in_range(hue: f32, params: &DetectionParams) -> bool {
    if params.wrap_hue {
        hue >= params.hue_min || hue <= params.hue_max
    } else {
        hue >= params.hue_min && hue <= params.hue_max
    }
}

/// Combined ExG + HSV threshold: a pixel is plant iff its ExG index and all
/// three HSV components fall inside the configured intervals.
pub fn segment(image: &RgbImage, params: &DetectionParams) -> BinaryMask {
    let (width, height) = image.dimensions();
    let mut mask = BinaryMask::new(width, height);
    for (i, p) in image.pixels().enumerate() {
        let [r, g, b] = p.0;
        let exg = 2 * g as i16 - r as i16 - b as i16;
        if exg < params.exg_min || exg > params.exg_max {
            continue;
        }
        let (hue, sat, val) = rgb_to_hsv(r, g, b);
        mask.bits[i] = hue_in_range(hue, params)
            && sat >= params.sat_min
            && sat <= params.sat_max
            && val >= params.val_min
            && val <= params.val_max;
    }
    mask
}

/// Offsets of a disc structuring element of the given radius (dx² + dy² ≤ r²).
fn disc_offsets(radius: u32) -> Vec<(i32, i32)> {
    let r = radius as i32;
    let r2 = r * r;
    let mut offs = Vec::new();
    for dy in -r..=r {
        for dx in -r..=r {
            if dx * dx + dy * dy <= r2 {
                offs.push((dx, dy));
            }
        }
    }
    offs
}

/// Morphological opening (erosion then dilation) with a disc structuring
/// element. Pixels beyond the frame border count as background, so blobs
/// touching the edge erode there. Radius 0 returns the mask unchanged.
pub fn morph_open(mask: &BinaryMask, radius: u32) -> BinaryMask {
    if radius == 0 {
        return mask.clone();
    }
    let offs = disc_offsets(radius);
    let (w, h) = (mask.width as i32, mask.height as i32);

    let mut eroded = BinaryMask::new(mask.width, mask.height);
    for y in 0..h {
        for x in 0..w {
            if !mask.bits[(y * w + x) as usize] {
                continue;
            }
            let keep = offs.iter().all(|&(dx, dy)| {
                let (nx, ny) = (x + dx, y + dy);
                nx >= 0 && nx < w && ny >= 0 && ny < h && mask.bits[(ny * w + nx) as usize]
            });
            eroded.bits[(y * w + x) as usize] = keep;
        }
    }

    let mut dilated = BinaryMask::new(mask.width, mask.height);
    for y in 0..h {
        for x in 0..w {
            if !eroded.bits[(y * w + x) as usize] {
                continue;
            }
            for &(dx, dy) in &offs {
                let (nx, ny) = (x + dx, y + dy);
                if nx >= 0 && nx < w && ny >= 0 && ny < h {
                    dilated.bits[(ny * w + nx) as usize] = true;
                }
            }
        }
    }
    dilated
}

/// Label 8-connected components of the (opened) mask and return one
/// [`Detection`] per blob with area ≥ `min_blob_area`, sorted by descending
/// area (ties broken by bounding-box position for determinism).
pub fn extract_detections(mask: &BinaryMask, params: &DetectionParams) -> Vec<Detection> {
    let opened = morph_open(mask, params.morph_open_radius);
    let (w, h) = (opened.width as usize, opened.height as usize);
    let mut visited = vec![false; w * h];
    let mut stack: Vec<usize> = Vec::new();
    let mut detections = Vec::new();

    for start in 0..w * h {
        if !opened.bits[start] || visited[start] {
            continue;
        }
        visited[start] = true;
        stack.push(start);
        let (mut min_x, mut min_y) = (usize::MAX, usize::MAX);
        let (mut max_x, mut max_y) = (0usize, 0usize);
        let (mut sum_x, mut sum_y) = (0u64, 0u64);
        let mut area = 0u32;

        while let Some(idx) = stack.pop() {
            let (x, y) = (idx % w, idx / w);
            area += 1;
            sum_x += x as u64;
            sum_y += y as u64;
            min_x = min_x.min(x);
            min_y = min_y.min(y);
            max_x = max_x.max(x);
            max_y = max_y.max(y);

            for dy in -1i64..=1 {
                for dx in -1i64..=1 {
                    if dx == 0 && dy == 0 {
                        continue;
                    }
                    let (nx, ny) = (x as i64 + dx, y as i64 + dy);
                    if nx < 0 || ny < 0 || nx >= w as i64 || ny >= h as i64 {
                        continue;
                    }
                    let nidx = ny as usize * w + nx as usize;
                    if opened.bits[nidx] && !visited[nidx] {
                        visited[nidx] = true;
                        stack.push(nidx);
                    }
                }
            }
        }

        if area >= params.min_blob_area {
            detections.push(Detection {
                bbox: BBox {
                    x: min_x as u32,
                    y: min_y as u32,
                    w: (max_x - min_x + 1) as u32,
                    h: (max_y - min_y + 1) as u32,
                },
                centroid: (sum_x as f64 / area as f64, sum_y as f64 / area as f64),
                area,
            });
        }
    }

    detections.sort_by(|a, b| {
        b.area
            .cmp(&a.area)
            .then(a.bbox.y.cmp(&b.bbox.y))
            .then(a.bbox.x.cmp(&b.bbox.x))
    });
    detections
}

/// Full single-frame detection: [`segment`] followed by
/// [`extract_detections`]. Deterministic.
pub fn detect(image: &RgbImage, params: &DetectionParams) -> Vec<Detection> {
    extract_detections(&segment(image, params), params)
}
