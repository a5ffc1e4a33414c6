//! File-backed configuration and tabular I/O.
//!
//! One TOML document configures every subsystem; missing keys fall back to
//! the built-in defaults, so an empty file is a valid config. Ground truth
//! and detections travel as plain CSV with fixed headers.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::camera::{builtin_profile, CameraProfile};
use crate::eval::MatchCriteria;
use crate::imaging::{BBox, Detection, DetectionParams};
use crate::scene::{GroundTruthPlant, SceneSpec, Species};
use crate::timeline::{EventBudget, SprayGeometry};
use crate::{Error, Result};

/// Camera × speed × replicate experiment grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SweepConfig {
    /// Camera profile names; built-ins are V2, HQ1, HQ2, ARD.
    pub profiles: Vec<String>,
    pub speeds_kmh: Vec<f64>,
    /// Transect replicates; each gets its own scene seed.
    pub replicates: u32,
    pub fps: f64,
    pub fov_length_m: f64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            profiles: vec!["V2".into(), "HQ1".into(), "HQ2".into(), "ARD".into()],
            speeds_kmh: vec![5.0, 10.0, 15.0, 20.0, 30.0],
            replicates: 6,
            fps: 30.0,
            fov_length_m: 1.3,
        }
    }
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        if self.profiles.is_empty() {
            return Err(Error::Config("sweep needs at least one profile".into()));
        }
        if self.speeds_kmh.is_empty() {
            return Err(Error::Config("sweep needs at least one speed".into()));
        }
        if self.replicates < 1 {
            return Err(Error::Config("sweep needs at least one replicate".into()));
        }
        if self.fps <= 0.0 || self.fov_length_m <= 0.0 {
            return Err(Error::Config("fps and fov_length must be positive".into()));
        }
        Ok(())
    }
}

/// Spectral sharpness scoring knobs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BlurConfig {
    pub cutoff_radius_frac: f64,
}

impl Default for BlurConfig {
    fn default() -> Self {
        Self {
            cutoff_radius_frac: crate::blur::DEFAULT_CUTOFF_RADIUS_FRAC,
        }
    }
}

/// Top-level configuration document.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Config {
    pub detection: DetectionParams,
    pub scene: SceneSpec,
    pub matching: MatchCriteria,
    pub sweep: SweepConfig,
    pub blur: BlurConfig,
    pub budget: EventBudget,
    pub geometry: SprayGeometry,
    /// Custom camera profiles; they shadow built-ins with the same name.
    pub cameras: Vec<CameraProfile>,
}

impl Config {
    pub fn load(path: &Path) -> Result<Config> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml(&text)
    }

    pub fn from_toml(text: &str) -> Result<Config> {
        let config: Config =
            toml::from_str(text).map_err(|e| Error::Config(format!("parse: {e}")))?;
        config.validate()?;
        Ok(config)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        self.detection.validate()?;
        self.scene.validate()?;
        self.sweep.validate()?;
        self.budget.validate()?;
        self.geometry.validate()?;
        for cam in &self.cameras {
            cam.validate()?;
        }
        Ok(())
    }

    /// Find a profile by name: custom profiles first, then built-ins.
    pub fn resolve_profile(&self, name: &str) -> Result<CameraProfile> {
        self.cameras
            .iter()
            .find(|c| c.name == name)
            .cloned()
            .or_else(|| builtin_profile(name))
            .ok_or_else(|| Error::Config(format!("unknown camera profile '{name}'")))
    }
}

pub const GROUND_TRUTH_HEADER: [&str; 5] = ["id", "species", "center_x_m", "center_y_m", "diameter_mm"];

/// Serialize plants to ground-truth CSV bytes.
pub fn ground_truth_csv(plants: &[GroundTruthPlant]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(GROUND_TRUTH_HEADER)?;
    for p in plants {
        w.write_record(&[
            p.id.to_string(),
            p.species.to_string(),
            format!("{:.6}", p.center_m.0),
            format!("{:.6}", p.center_m.1),
            format!("{:.3}", p.diameter_mm),
        ])?;
    }
    w.into_inner()
        .map_err(|e| Error::Config(format!("csv flush: {e}")))
}

/// Parse a ground-truth CSV produced by [`ground_truth_csv`].
pub fn read_ground_truth(path: &Path) -> Result<Vec<GroundTruthPlant>> {
    let mut reader = csv::Reader::from_path(path)?;
    let mut plants = Vec::new();
    for record in reader.records() {
        let record = record?;
        let field = |i: usize| -> Result<&str> {
            record
                .get(i)
                .ok_or_else(|| Error::Config(format!("ground truth row too short: {record:?}")))
        };
        let parse_f = |s: &str| -> Result<f64> {
            s.parse()
                .map_err(|_| Error::Config(format!("bad number '{s}' in ground truth")))
        };
        plants.push(GroundTruthPlant {
            id: field(0)?
                .parse()
                .map_err(|_| Error::Config("bad plant id".into()))?,
            species: field(1)?.parse::<Species>()?,
            center_m: (parse_f(field(2)?)?, parse_f(field(3)?)?),
            diameter_mm: parse_f(field(4)?)?,
        });
    }
    Ok(plants)
}

pub const DETECTIONS_HEADER: [&str; 8] = ["frame", "x", "y", "w", "h", "cx", "cy", "area"];

/// Serialize per-frame detections to CSV bytes.
pub fn detections_csv(per_frame: &[Vec<Detection>]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(DETECTIONS_HEADER)?;
    for (frame, dets) in per_frame.iter().enumerate() {
        for d in dets {
            w.write_record(&[
                frame.to_string(),
                d.bbox.x.to_string(),
                d.bbox.y.to_string(),
                d.bbox.w.to_string(),
                d.bbox.h.to_string(),
                format!("{:.3}", d.centroid.0),
                format!("{:.3}", d.centroid.1),
                d.area.to_string(),
            ])?;
        }
    }
    w.into_inner()
        .map_err(|e| Error::Config(format!("csv flush: {e}")))
}

/// Parse a detections CSV back into per-frame lists (frames without rows
/// come back empty; the vector is sized to the largest frame index + 1, or
/// `min_frames` if larger).
pub fn read_detections(path: &Path, min_frames: usize) -> Result<Vec<Vec<Detection>>> {
    let mut reader = csv::Reader::from_path(path)?;
    let mut rows: Vec<(usize, Detection)> = Vec::new();
    for record in reader.records() {
        let record = record?;
        let get = |i: usize| -> Result<&str> {
            record
                .get(i)
                .ok_or_else(|| Error::Config(format!("detections row too short: {record:?}")))
        };
        let frame: usize = get(0)?
            .parse()
            .map_err(|_| Error::Config("bad frame index".into()))?;
        let parse_u = |s: &str| -> Result<u32> {
            s.parse()
                .map_err(|_| Error::Config(format!("bad integer '{s}' in detections")))
        };
        let parse_f = |s: &str| -> Result<f64> {
            s.parse()
                .map_err(|_| Error::Config(format!("bad number '{s}' in detections")))
        };
        rows.push((
            frame,
            Detection {
                bbox: BBox {
                    x: parse_u(get(1)?)?,
                    y: parse_u(get(2)?)?,
                    w: parse_u(get(3)?)?,
                    h: parse_u(get(4)?)?,
                },
                centroid: (parse_f(get(5)?)?, parse_f(get(6)?)?),
                area: parse_u(get(7)?)?,
            },
        ));
    }
    let n = rows
        .iter()
        .map(|(f, _)| f + 1)
        .max()
        .unwrap_or(0)
        .max(min_frames);
    let mut per_frame = vec![Vec::new(); n];
    for (frame, det) in rows {
        per_frame[frame].push(det);
    }
    Ok(per_frame)
}
