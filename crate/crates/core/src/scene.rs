//! Synthetic fallow transects with per-plant ground truth.
//!
//! A scene is a top-down soil raster with plants scattered over it at a
//! target density. Two morphotypes are modelled geometrically: broadleaf
//! plants as a cluster of overlapping elliptical lobes, grass plants as thin
//! strips radiating from a crown. Everything is drawn from a single seeded
//! RNG, so a spec renders bit-identically every time.

use image::RgbImage;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal, Poisson};
use serde::{Deserialize, Serialize};

use crate::imaging::hsv_to_rgb;

/// Gross growth-form class of a plant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Species {
    Broadleaf,
    Grass,
}

impl std::fmt::Display for Species {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Species::Broadleaf => write!(f, "broadleaf"),
            Species::Grass => write!(f, "grass"),
        }
    }
}

impl std::str::FromStr for Species {
    type Err = crate::Error;

    fn from_str(s: &str) -> crate::Result<Self> {
        match s {
            "broadleaf" => Ok(Species::Broadleaf),
            "grass" => Ok(Species::Grass),
            other => Err(crate::Error::Config(format!("unknown species '{other}'"))),
        }
    }
}

/// Lognormal plant-diameter model, parameterized by its real-space mean and
/// standard deviation in millimetres.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiameterModel {
    pub mean_mm: f64,
    pub sd_mm: f64,
}

impl DiameterModel {
    fn sampler(&self) -> LogNormal<f64> {
        let cv2 = (self.sd_mm / self.mean_mm).powi(2);
        let sigma2 = (1.0 + cv2).ln();
        let mu = self.mean_mm.ln() - sigma2 / 2.0;
        LogNormal::new(mu, sigma2.sqrt()).expect("finite lognormal parameters")
    }
}

/// Description of a synthetic transect.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SceneSpec {
    pub transect_length_m: f64,
    pub transect_width_m: f64,
    /// Render resolution of the scene raster, pixels per metre.
    pub ground_scale_px_per_m: f64,
    pub plant_density_per_m2: f64,
    /// Fraction of plants that are broadleaf; the rest are grass.
    pub species_mix_broadleaf: f64,
    pub broadleaf_diameter: DiameterModel,
    pub grass_diameter: DiameterModel,
    /// Soil colors interpolate between these two RGB endpoints.
    pub soil_rgb_min: [u8; 3],
    pub soil_rgb_max: [u8; 3],
    pub rng_seed: u64,
}

impl Default for SceneSpec {
    fn default() -> Self {
        Self {
            transect_length_m: 25.0,
            transect_width_m: 1.0,
            ground_scale_px_per_m: 640.0,
            plant_density_per_m2: 3.0,
            species_mix_broadleaf: 0.5,
            broadleaf_diameter: DiameterModel {
                mean_mm: 110.0,
                sd_mm: 40.0,
            },
            grass_diameter: DiameterModel {
                mean_mm: 130.0,
                sd_mm: 50.0,
            },
            soil_rgb_min: [100, 78, 52],
            soil_rgb_max: [165, 128, 90],
            rng_seed: 0,
        }
    }
}

impl SceneSpec {
    pub fn validate(&self) -> crate::Result<()> {
        if self.transect_length_m <= 0.0 || self.transect_width_m <= 0.0 {
            return Err(crate::Error::InvalidParams(
                "transect dimensions must be positive".into(),
            ));
        }
        if self.ground_scale_px_per_m <= 0.0 {
            return Err(crate::Error::InvalidParams(
                "ground scale must be positive".into(),
            ));
        }
        if self.plant_density_per_m2 < 0.0 {
            return Err(crate::Error::InvalidParams(
                "plant density must be non-negative".into(),
            ));
        }
        if !(0.0..=1.0).contains(&self.species_mix_broadleaf) {
            return Err(crate::Error::InvalidParams(
                "species mix must lie in [0, 1]".into(),
            ));
        }
        for d in [&self.broadleaf_diameter, &self.grass_diameter] {
            if d.mean_mm <= 0.0 || d.sd_mm <= 0.0 {
                return Err(crate::Error::InvalidParams(
                    "diameter mean and sd must be positive".into(),
                ));
            }
        }
        Ok(())
    }

    /// Soil tone halfway through the palette; used to pad crops that reach
    /// past the rendered transect.
    pub fn soil_mid_color(&self) -> image::Rgb<u8> {
        let mut px = [0u8; 3];
        for c in 0..3 {
            px[c] = ((self.soil_rgb_min[c] as u16 + self.soil_rgb_max[c] as u16) / 2) as u8;
        }
        image::Rgb(px)
    }
}

/// One manually-counted plant of the synthetic transect.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruthPlant {
    pub id: u32,
    pub species: Species,
    /// Center in transect coordinates, metres.
    pub center_m: (f64, f64),
    pub diameter_mm: f64,
}

impl GroundTruthPlant {
    pub fn radius_m(&self) -> f64 {
        self.diameter_mm / 2000.0
    }
}

/// Geometric primitives a plant rasterizes to.
enum Primitive {
    /// Rotated ellipse: center, semi-axes, orientation.
    Ellipse {
        cx: f64,
        cy: f64,
        a: f64,
        b: f64,
        theta: f64,
    },
    /// Strip from the plant crown outward: origin, direction, length, width.
    Strip {
        x0: f64,
        y0: f64,
        dir: (f64, f64),
        len: f64,
        width: f64,
    },
}

impl Primitive {
    fn contains(&self, px: f64, py: f64) -> bool {
        match *self {
            Primitive::Ellipse {
                cx,
                cy,
                a,
                b,
                theta,
            } => {
                let (dx, dy) = (px - cx, py - cy);
                let (cos, sin) = (theta.cos(), theta.sin());
                let u = dx * cos + dy * sin;
                let v = -dx * sin + dy * cos;
                (u / a).powi(2) + (v / b).powi(2) <= 1.0
            }
            Primitive::Strip {
                x0,
                y0,
                dir,
                len,
                width,
            } => {
                let (dx, dy) = (px - x0, py - y0);
                let along = dx * dir.0 + dy * dir.1;
                let across = -dx * dir.1 + dy * dir.0;
                along >= 0.0 && along <= len && across.abs() <= width / 2.0
            }
        }
    }

    fn bbox(&self) -> (f64, f64, f64, f64) {
        match *self {
            Primitive::Ellipse { cx, cy, a, b, .. } => {
                let r = a.max(b);
                (cx - r, cy - r, cx + r, cy + r)
            }
            Primitive::Strip {
                x0,
                y0,
                dir,
                len,
                width,
            } => {
                let (x1, y1) = (x0 + dir.0 * len, y0 + dir.1 * len);
                let pad = width;
                (
                    x0.min(x1) - pad,
                    y0.min(y1) - pad,
                    x0.max(x1) + pad,
                    y0.max(y1) + pad,
                )
            }
        }
    }
}

const PLACEMENT_ATTEMPT_CAP: u64 = 1_000_000;

/// Render a transect and its ground-truth plant list.
///
/// The plant count is Poisson-distributed around `density × area`; placement
/// rejects centers whose discs would sit almost entirely on top of an
/// existing plant. Deterministic for a fixed spec.
pub fn synthesize_scene(spec: &SceneSpec) -> crate::Result<(RgbImage, Vec<GroundTruthPlant>)> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.rng_seed);

    let scale = spec.ground_scale_px_per_m;
    let width_px = (spec.transect_length_m * scale).ceil().max(1.0) as u32;
    let height_px = (spec.transect_width_m * scale).ceil().max(1.0) as u32;

    // Soil: one brightness parameter per pixel keeps the channels correlated
    // so green never outruns red/blue, plus a little per-channel grain.
    let mut img = RgbImage::new(width_px, height_px);
    for p in img.pixels_mut() {
        let t: f64 = rng.random();
        let mut px = [0u8; 3];
        for c in 0..3 {
            let lo = spec.soil_rgb_min[c] as f64;
            let hi = spec.soil_rgb_max[c] as f64;
            let jitter: f64 = rng.random_range(-4.0..=4.0);
            px[c] = (lo + t * (hi - lo) + jitter).round().clamp(0.0, 255.0) as u8;
        }
        *p = image::Rgb(px);
    }

    // Plant list.
    let area_m2 = spec.transect_length_m * spec.transect_width_m;
    let mean_count = spec.plant_density_per_m2 * area_m2;
    let count = if mean_count > 0.0 {
        Poisson::new(mean_count)
            .map_err(|e| crate::Error::InvalidParams(format!("poisson: {e}")))?
            .sample(&mut rng) as usize
    } else {
        0
    };

    let broadleaf_diam = spec.broadleaf_diameter.sampler();
    let grass_diam = spec.grass_diameter.sampler();

    let mut plants: Vec<GroundTruthPlant> = Vec::with_capacity(count);
    let mut attempts: u64 = 0;
    for id in 0..count {
        let species = if rng.random::<f64>() < spec.species_mix_broadleaf {
            Species::Broadleaf
        } else {
            Species::Grass
        };
        let diameter_mm = match species {
            Species::Broadleaf => broadleaf_diam.sample(&mut rng),
            Species::Grass => grass_diam.sample(&mut rng),
        }
        .clamp(20.0, 400.0);
        let radius_m = diameter_mm / 2000.0;

        let center = loop {
            attempts += 1;
            if attempts > PLACEMENT_ATTEMPT_CAP {
                return Err(crate::Error::PlacementExhausted {
                    attempts,
                    placed: plants.len(),
                    requested: count,
                });
            }
            let x = rng.random_range(0.0..spec.transect_length_m);
            let y = rng.random_range(0.0..spec.transect_width_m);
            let crowded = plants.iter().any(|p| {
                let (dx, dy) = (p.center_m.0 - x, p.center_m.1 - y);
                let min_sep = 0.5 * (p.radius_m() + radius_m);
                dx * dx + dy * dy < min_sep * min_sep
            });
            if !crowded {
                break (x, y);
            }
        };

        plants.push(GroundTruthPlant {
            id: id as u32,
            species,
            center_m: center,
            diameter_mm,
        });
    }

    // Rasterize each plant over the soil.
    for plant in &plants {
        render_plant(&mut img, plant, scale, &mut rng);
    }

    Ok((img, plants))
}

/// Per-plant rasterization: sample a base color from the green band, build
/// the morphotype's primitives, and alpha-blend 2×2 supersampled coverage
/// over the soil.
fn render_plant(img: &mut RgbImage, plant: &GroundTruthPlant, scale: f64, rng: &mut ChaCha8Rng) {
    let hue = rng.random_range(70.0..120.0f32);
    let sat = rng.random_range(0.4..0.9f32);
    let val = rng.random_range(0.32..0.88f32);

    let cx = plant.center_m.0 * scale;
    let cy = plant.center_m.1 * scale;
    let radius_px = plant.radius_m() * scale;

    let prims: Vec<Primitive> = match plant.species {
        Species::Broadleaf => {
            let n_lobes = rng.random_range(4..=6u32);
            let phase = rng.random_range(0.0..std::f64::consts::TAU);
            (0..n_lobes)
                .map(|i| {
                    let theta = phase
                        + i as f64 * std::f64::consts::TAU / n_lobes as f64
                        + rng.random_range(-0.2..0.2);
                    let offset = radius_px * rng.random_range(0.30..0.45);
                    Primitive::Ellipse {
                        cx: cx + theta.cos() * offset,
                        cy: cy + theta.sin() * offset,
                        a: radius_px * rng.random_range(0.55..0.70),
                        b: radius_px * rng.random_range(0.30..0.42),
                        theta,
                    }
                })
                .collect()
        }
        Species::Grass => {
            let n_strips = rng.random_range(3..=6u32);
            let phase = rng.random_range(0.0..std::f64::consts::TAU);
            (0..n_strips)
                .map(|i| {
                    let theta = phase
                        + i as f64 * std::f64::consts::TAU / n_strips as f64
                        + rng.random_range(-0.4..0.4);
                    // Leaf width 2–4 mm on the ground.
                    let width_px = rng.random_range(0.002..0.004) * scale;
                    Primitive::Strip {
                        x0: cx,
                        y0: cy,
                        dir: (theta.cos(), theta.sin()),
                        len: radius_px,
                        width: width_px,
                    }
                })
                .collect()
        }
    };

    let (w, h) = (img.width() as i64, img.height() as i64);
    let (mut min_x, mut min_y) = (f64::INFINITY, f64::INFINITY);
    let (mut max_x, mut max_y) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
    for p in &prims {
        let (x0, y0, x1, y1) = p.bbox();
        min_x = min_x.min(x0);
        min_y = min_y.min(y0);
        max_x = max_x.max(x1);
        max_y = max_y.max(y1);
    }

    let x_lo = (min_x.floor() as i64).max(0);
    let y_lo = (min_y.floor() as i64).max(0);
    let x_hi = (max_x.ceil() as i64).min(w - 1);
    let y_hi = (max_y.ceil() as i64).min(h - 1);

    const SUB: [f64; 2] = [0.25, 0.75];
    for y in y_lo..=y_hi {
        for x in x_lo..=x_hi {
            let mut hits = 0u32;
            for sy in SUB {
                for sx in SUB {
                    let (px, py) = (x as f64 + sx, y as f64 + sy);
                    if prims.iter().any(|p| p.contains(px, py)) {
                        hits += 1;
                    }
                }
            }
            if hits == 0 {
                continue;
            }
            let coverage = hits as f64 / 4.0;
            let shade: f32 = rng.random_range(-0.04..0.04);
            let (pr, pg, pb) = hsv_to_rgb(hue, sat, (val + shade).clamp(0.05, 1.0));
            let soil = img.get_pixel(x as u32, y as u32).0;
            let blend = |plant_c: u8, soil_c: u8| {
                (plant_c as f64 * coverage + soil_c as f64 * (1.0 - coverage)).round() as u8
            };
            img.put_pixel(
                x as u32,
                y as u32,
                image::Rgb([blend(pr, soil[0]), blend(pg, soil[1]), blend(pb, soil[2])]),
            );
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quick_spec(seed: u64) -> SceneSpec {
        SceneSpec {
            transect_length_m: 4.0,
            transect_width_m: 1.0,
            ground_scale_px_per_m: 200.0,
            rng_seed: seed,
            ..SceneSpec::default()
        }
    }

    #[test]
    fn zero_density_gives_bare_soil() {
        let spec = SceneSpec {
            plant_density_per_m2: 0.0,
            ..quick_spec(5)
        };
        let (img, plants) = synthesize_scene(&spec).unwrap();
        assert!(plants.is_empty());
        assert_eq!(img.dimensions(), (800, 200));
        // No pixel should look like a plant.
        let mask = crate::imaging::segment(&img, &crate::imaging::DetectionParams::default());
        assert_eq!(mask.count_ones(), 0, "bare soil must not segment as plant");
    }

    #[test]
    fn identical_seeds_are_bit_identical() {
        let (img_a, plants_a) = synthesize_scene(&quick_spec(42)).unwrap();
        let (img_b, plants_b) = synthesize_scene(&quick_spec(42)).unwrap();
        assert_eq!(img_a.as_raw(), img_b.as_raw());
        assert_eq!(plants_a, plants_b);
        let (img_c, _) = synthesize_scene(&quick_spec(43)).unwrap();
        assert_ne!(img_a.as_raw(), img_c.as_raw(), "different seed, same image");
    }

    #[test]
    fn poisson_mean_plant_count() {
        // 25 m² at 3 plants/m² → mean 75; Monte-Carlo mean over 1000 seeds
        // must land within 75 ± 3. Rendering resolution does not affect the
        // draw, so keep the raster tiny.
        let mut total = 0usize;
        let n = 1000;
        for seed in 0..n {
            let spec = SceneSpec {
                ground_scale_px_per_m: 10.0,
                rng_seed: seed,
                ..SceneSpec::default()
            };
            let (_, plants) = synthesize_scene(&spec).unwrap();
            total += plants.len();
        }
        let mean = total as f64 / n as f64;
        assert!(
            (mean - 75.0).abs() <= 3.0,
            "Monte-Carlo mean {mean} strayed from Poisson mean 75"
        );
    }

    #[test]
    fn plants_stay_inside_bounds_with_positive_diameters() {
        for seed in 0..10 {
            let (_, plants) = synthesize_scene(&quick_spec(seed)).unwrap();
            for p in &plants {
                assert!(p.center_m.0 >= 0.0 && p.center_m.0 <= 4.0);
                assert!(p.center_m.1 >= 0.0 && p.center_m.1 <= 1.0);
                assert!(p.diameter_mm > 0.0);
            }
        }
    }

    #[test]
    fn absurd_density_exhausts_placement() {
        let spec = SceneSpec {
            plant_density_per_m2: 2.0e5,
            transect_length_m: 1.0,
            transect_width_m: 1.0,
            ground_scale_px_per_m: 50.0,
            ..SceneSpec::default()
        };
        match synthesize_scene(&spec) {
            Err(crate::Error::PlacementExhausted { .. }) => {}
            other => panic!("expected placement exhaustion, got {other:?}"),
        }
    }

    #[test]
    fn plants_segment_under_default_params() {
        // Sanity anchor for the detection defaults: a freshly rendered scene
        // must light up the mask near every plant center.
        let (img, plants) = synthesize_scene(&quick_spec(7)).unwrap();
        assert!(!plants.is_empty());
        let mask = crate::imaging::segment(&img, &crate::imaging::DetectionParams::default());
        for p in &plants {
            let cx = (p.center_m.0 * 200.0) as i64;
            let cy = (p.center_m.1 * 200.0) as i64;
            let mut lit = 0;
            for dy in -6..=6i64 {
                for dx in -6..=6i64 {
                    let (x, y) = (cx + dx, cy + dy);
                    if x >= 0 && y >= 0 && x < 800 && y < 200 && mask.get(x as u32, y as u32) {
                        lit += 1;
                    }
                }
            }
            assert!(
                lit > 0,
                "plant {} ({:?}) produced no mask pixels near its center",
                p.id,
                p.species
            );
        }
    }
}
