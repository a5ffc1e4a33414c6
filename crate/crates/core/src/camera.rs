//! Parametric camera model and video-pass rendering.
//!
//! A frame seen from a moving vehicle differs from the scene underneath it in
//! three ways this module simulates: exposure-time motion blur along the
//! travel axis, rolling-shutter row skew, and sensor resampling with
//! pixel-area-dependent Gaussian noise. The travel axis is the image x axis.

use image::RgbImage;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::scene::{GroundTruthPlant, SceneSpec};
use crate::{kmh_to_mps, Error, Result};

/// Sensor readout strategy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Shutter {
    Rolling,
    Global,
}

/// Hardware model of one camera/software combination.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CameraProfile {
    pub name: String,
    pub sensor_width: u32,
    pub sensor_height: u32,
    /// Photosite area in µm²; larger collects more photons.
    pub pixel_area_um2: f64,
    pub shutter: Shutter,
    pub exposure_time_s: f64,
    /// Per-row readout delay; 0 for a global shutter.
    pub row_readout_time_s: f64,
    pub brightness_gain: f64,
    /// Noise scale k in σ = k / √pixel_area.
    pub noise_coefficient: f64,
}

impl CameraProfile {
    pub fn validate(&self) -> Result<()> {
        if self.pixel_area_um2 <= 0.0 {
            return Err(Error::InvalidParams("pixel_area must be positive".into()));
        }
        if self.exposure_time_s <= 0.0 {
            return Err(Error::InvalidParams("exposure_time must be positive".into()));
        }
        if self.row_readout_time_s < 0.0 {
            return Err(Error::InvalidParams("row_readout_time must be >= 0".into()));
        }
        if self.shutter == Shutter::Global && self.row_readout_time_s != 0.0 {
            return Err(Error::InvalidParams(
                "a global shutter has no per-row readout delay".into(),
            ));
        }
        if self.sensor_width == 0 || self.sensor_height == 0 {
            return Err(Error::InvalidParams("sensor dimensions must be >= 1".into()));
        }
        Ok(())
    }

    /// Gaussian noise σ implied by the photosite area.
    pub fn noise_sigma(&self) -> f64 {
        self.noise_coefficient / self.pixel_area_um2.sqrt()
    }
}

/// The four built-in camera profiles.
///
/// Resolutions, pixel areas, and shutter types follow the hardware the
/// toolkit models; exposure times, row readout (30 µs/row rolling), gain,
/// and the noise coefficient are simulator assumptions. HQ1 models untuned
/// default software: a long, bright exposure.
pub fn builtin_profiles() -> Vec<CameraProfile> {
    vec![
        CameraProfile {
            name: "V2".into(),
            sensor_width: 416,
            sensor_height: 320,
            pixel_area_um2: 1.25,
            shutter: Shutter::Rolling,
            exposure_time_s: 0.004,
            row_readout_time_s: 30e-6,
            brightness_gain: 1.0,
            noise_coefficient: 12.0,
        },
        CameraProfile {
            name: "HQ1".into(),
            sensor_width: 640,
            sensor_height: 480,
            pixel_area_um2: 2.40,
            shutter: Shutter::Rolling,
            exposure_time_s: 0.012,
            row_readout_time_s: 30e-6,
            brightness_gain: 1.6,
            noise_coefficient: 12.0,
        },
        CameraProfile {
            name: "HQ2".into(),
            sensor_width: 416,
            sensor_height: 320,
            pixel_area_um2: 2.40,
            shutter: Shutter::Rolling,
            exposure_time_s: 0.004,
            row_readout_time_s: 30e-6,
            brightness_gain: 1.0,
            noise_coefficient: 12.0,
        },
        CameraProfile {
            name: "ARD".into(),
            sensor_width: 416,
            sensor_height: 320,
            pixel_area_um2: 9.00,
            shutter: Shutter::Global,
            exposure_time_s: 0.004,
            row_readout_time_s: 0.0,
            brightness_gain: 1.0,
            noise_coefficient: 12.0,
        },
    ]
}

/// Look up a built-in profile by name.
pub fn builtin_profile(name: &str) -> Option<CameraProfile> {
    builtin_profiles().into_iter().find(|p| p.name == name)
}

/// Length in pixels of the box kernel smeared over one exposure.
pub fn motion_blur_kernel_len(speed_kmh: f64, exposure_time_s: f64, ground_scale: f64) -> u32 {
    (kmh_to_mps(speed_kmh) * exposure_time_s * ground_scale).round() as u32
}

/// Smear each channel along the travel axis with a normalized box kernel of
/// `motion_blur_kernel_len` pixels (edge replication). Lengths ≤ 1 return
/// the input unchanged.
pub fn apply_motion_blur(
    image: &RgbImage,
    speed_kmh: f64,
    exposure_time_s: f64,
    ground_scale: f64,
) -> RgbImage {
    let len = motion_blur_kernel_len(speed_kmh, exposure_time_s, ground_scale);
    box_blur_x(image, len)
}

/// Horizontal box filter with the given kernel length.
pub fn box_blur_x(image: &RgbImage, len: u32) -> RgbImage {
    if len <= 1 {
        return image.clone();
    }
    let (w, h) = image.dimensions();
    let left = ((len - 1) / 2) as i64;
    let right = (len / 2) as i64;
    let raw = image.as_raw();
    let mut out = vec![0u8; raw.len()];
    let stride = (w * 3) as usize;

    for y in 0..h as usize {
        let row = &raw[y * stride..(y + 1) * stride];
        let out_row = &mut out[y * stride..(y + 1) * stride];
        for c in 0..3usize {
            // Running sum over a clamped window.
            let sample = |x: i64| -> u32 {
                let x = x.clamp(0, w as i64 - 1) as usize;
                row[x * 3 + c] as u32
            };
            let mut sum: u32 = 0;
            for x in -left..=right {
                sum += sample(x);
            }
            for x in 0..w as i64 {
                out_row[x as usize * 3 + c] = ((sum as f64 / len as f64) + 0.5) as u8;
                sum += sample(x + right + 1);
                sum -= sample(x - left);
            }
        }
    }
    RgbImage::from_raw(w, h, out).expect("buffer sized to image")
}

/// Horizontal shift applied to row `y` by a rolling shutter.
pub fn rolling_shift_px(speed_px_per_s: f64, y: u32, row_readout_time_s: f64) -> i64 {
    (speed_px_per_s * y as f64 * row_readout_time_s).round() as i64
}

/// Skew the image as a rolling shutter would: row `y` is translated along
/// the travel axis by `speed × y × row_readout_time` pixels with edge
/// replication. Global shutters (or zero readout time) are the identity.
pub fn apply_rolling_shutter(
    image: &RgbImage,
    speed_kmh: f64,
    profile: &CameraProfile,
    ground_scale: f64,
) -> RgbImage {
    apply_rolling_shutter_with_readout(image, speed_kmh, profile, ground_scale, profile.row_readout_time_s)
}

fn apply_rolling_shutter_with_readout(
    image: &RgbImage,
    speed_kmh: f64,
    profile: &CameraProfile,
    ground_scale: f64,
    row_readout_time_s: f64,
) -> RgbImage {
    if profile.shutter == Shutter::Global || row_readout_time_s == 0.0 {
        return image.clone();
    }
    let speed_px_per_s = kmh_to_mps(speed_kmh) * ground_scale;
    let (w, h) = image.dimensions();
    let mut out = RgbImage::new(w, h);
    for y in 0..h {
        let shift = rolling_shift_px(speed_px_per_s, y, row_readout_time_s);
        for x in 0..w {
            let sx = (x as i64 + shift).clamp(0, w as i64 - 1) as u32;
            out.put_pixel(x, y, *image.get_pixel(sx, y));
        }
    }
    out
}

/// Resample to the sensor resolution by area averaging, apply brightness
/// gain (clipped at 255), then add zero-mean Gaussian noise with
/// σ = k / √pixel_area (clipped to [0, 255]). Deterministic per seed.
pub fn apply_sensor_model(image: &RgbImage, profile: &CameraProfile, rng_seed: u64) -> RgbImage {
    let sigma = profile.noise_sigma();
    let same_size =
        image.width() == profile.sensor_width && image.height() == profile.sensor_height;
    if same_size && profile.brightness_gain == 1.0 && sigma == 0.0 {
        return image.clone();
    }

    let mut out = if same_size {
        image.clone()
    } else {
        resample_area_average(image, profile.sensor_width, profile.sensor_height)
    };

    if profile.brightness_gain != 1.0 {
        for p in out.pixels_mut() {
            for c in 0..3 {
                p.0[c] = (p.0[c] as f64 * profile.brightness_gain).min(255.0).round() as u8;
            }
        }
    }

    if sigma > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
        let normal = Normal::new(0.0, sigma).expect("positive sigma");
        for p in out.pixels_mut() {
            for c in 0..3 {
                let v = p.0[c] as f64 + normal.sample(&mut rng);
                p.0[c] = v.round().clamp(0.0, 255.0) as u8;
            }
        }
    }
    out
}

/// Exact area-average resampling between arbitrary resolutions.
pub fn resample_area_average(image: &RgbImage, out_w: u32, out_h: u32) -> RgbImage {
    let (in_w, in_h) = image.dimensions();
    if (in_w, in_h) == (out_w, out_h) {
        return image.clone();
    }
    let sx = in_w as f64 / out_w as f64;
    let sy = in_h as f64 / out_h as f64;
    let raw = image.as_raw();
    let stride = (in_w * 3) as usize;

    let mut out = RgbImage::new(out_w, out_h);
    for oy in 0..out_h {
        let y0 = oy as f64 * sy;
        let y1 = (oy + 1) as f64 * sy;
        for ox in 0..out_w {
            let x0 = ox as f64 * sx;
            let x1 = (ox + 1) as f64 * sx;
            let mut acc = [0.0f64; 3];
            let mut weight = 0.0f64;
            let iy0 = y0.floor() as u32;
            let iy1 = (y1.ceil() as u32).min(in_h);
            let ix0 = x0.floor() as u32;
            let ix1 = (x1.ceil() as u32).min(in_w);
            for iy in iy0..iy1 {
                let wy = (y1.min((iy + 1) as f64) - y0.max(iy as f64)).max(0.0);
                for ix in ix0..ix1 {
                    let wx = (x1.min((ix + 1) as f64) - x0.max(ix as f64)).max(0.0);
                    let wgt = wx * wy;
                    if wgt <= 0.0 {
                        continue;
                    }
                    let base = iy as usize * stride + ix as usize * 3;
                    acc[0] += wgt * raw[base] as f64;
                    acc[1] += wgt * raw[base + 1] as f64;
                    acc[2] += wgt * raw[base + 2] as f64;
                    weight += wgt;
                }
            }
            let px = [
                (acc[0] / weight).round() as u8,
                (acc[1] / weight).round() as u8,
                (acc[2] / weight).round() as u8,
            ];
            out.put_pixel(ox, oy, image::Rgb(px));
        }
    }
    out
}

/// A plant visible in one frame, with its projected sensor-pixel position.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VisiblePlant {
    pub id: u32,
    pub pixel: (f64, f64),
}

/// One simulated video pass over a transect.
#[derive(Debug, Clone)]
pub struct FrameSequence {
    pub frames: Vec<RgbImage>,
    /// Per frame: the plants whose centers fall inside the frame window.
    pub frame_truth: Vec<Vec<VisiblePlant>>,
    pub speed_kmh: f64,
    pub fps: f64,
    pub fov_length_m: f64,
    pub transect_width_m: f64,
    pub sensor_width: u32,
    pub sensor_height: u32,
}

impl FrameSequence {
    /// Ground spacing between consecutive frames, metres.
    pub fn frame_spacing_m(&self) -> f64 {
        kmh_to_mps(self.speed_kmh) / self.fps
    }

    /// Transect x coordinate of the leading edge of frame `k`, metres.
    pub fn frame_origin_m(&self, k: usize) -> f64 {
        k as f64 * self.frame_spacing_m()
    }
}

/// Render a camera pass over a synthesized scene at a set ground speed.
///
/// Frames are spaced `speed / fps` apart; each one crops an
/// `fov_length × transect_width` window from the scene (soil-padded past the
/// transect end), then runs motion blur → rolling shutter → sensor model.
/// Per-frame noise seeds derive from `rng_seed ^ frame_index`, so frames
/// render in parallel without losing determinism.
pub fn render_pass(
    scene: &RgbImage,
    plants: &[GroundTruthPlant],
    spec: &SceneSpec,
    profile: &CameraProfile,
    speed_kmh: f64,
    fps: f64,
    fov_length_m: f64,
    rng_seed: u64,
) -> Result<FrameSequence> {
    profile.validate()?;
    if fps <= 0.0 || fov_length_m <= 0.0 || speed_kmh <= 0.0 {
        return Err(Error::InvalidParams(
            "render_pass needs positive fps, fov and speed".into(),
        ));
    }
    if fov_length_m > spec.transect_length_m {
        return Err(Error::FovExceedsScene {
            fov_m: fov_length_m,
            scene_m: spec.transect_length_m,
        });
    }

    let scale = spec.ground_scale_px_per_m;
    let spacing_m = kmh_to_mps(speed_kmh) / fps;
    let frame_count = (spec.transect_length_m / spacing_m).floor() as usize + 1;
    let crop_w = (fov_length_m * scale).round().max(1.0) as u32;
    let crop_h = scene.height();
    let pad = spec.soil_mid_color();

    // Rolling skew is defined per sensor row; rescale the per-row delay so
    // the ground-space skew is independent of the render resolution.
    let readout_render = profile.row_readout_time_s * profile.sensor_height as f64 / crop_h as f64;

    let rendered: Vec<(RgbImage, Vec<VisiblePlant>)> = (0..frame_count)
        .into_par_iter()
        .map(|k| {
            let x0_m = k as f64 * spacing_m;
            let x0_px = (x0_m * scale).round() as i64;

            let mut crop = RgbImage::new(crop_w, crop_h);
            for y in 0..crop_h {
                for x in 0..crop_w {
                    let sx = x0_px + x as i64;
                    let px = if sx >= 0 && (sx as u32) < scene.width() {
                        *scene.get_pixel(sx as u32, y)
                    } else {
                        pad
                    };
                    crop.put_pixel(x, y, px);
                }
            }

            let blurred = apply_motion_blur(&crop, speed_kmh, profile.exposure_time_s, scale);
            let skewed = apply_rolling_shutter_with_readout(
                &blurred,
                speed_kmh,
                profile,
                scale,
                readout_render,
            );
            let frame = apply_sensor_model(&skewed, profile, rng_seed ^ k as u64);

            let truth: Vec<VisiblePlant> = plants
                .iter()
                .filter(|p| p.center_m.0 >= x0_m && p.center_m.0 < x0_m + fov_length_m)
                .map(|p| VisiblePlant {
                    id: p.id,
                    pixel: (
                        (p.center_m.0 - x0_m) / fov_length_m * profile.sensor_width as f64,
                        p.center_m.1 / spec.transect_width_m * profile.sensor_height as f64,
                    ),
                })
                .collect();
            (frame, truth)
        })
        .collect();

    let (frames, frame_truth): (Vec<_>, Vec<_>) = rendered.into_iter().unzip();
    Ok(FrameSequence {
        frames,
        frame_truth,
        speed_kmh,
        fps,
        fov_length_m,
        transect_width_m: spec.transect_width_m,
        sensor_width: profile.sensor_width,
        sensor_height: profile.sensor_height,
    })
}
