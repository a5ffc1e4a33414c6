//! The camera × speed × replicate experiment.
//!
//! Each replicate is one transect: its scene is synthesized once from
//! `scene.rng_seed + replicate` and reused across every camera and speed,
//! mirroring a field layout where all passes drive the same plots. Cells run
//! in parallel; output rows are emitted in canonical (profile, speed,
//! replicate) order regardless of completion order, so repeated runs write
//! byte-identical CSVs.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::blur::fft_blur_score;
use crate::camera::{render_pass, CameraProfile};
use crate::config::Config;
use crate::eval::{fit_recall_vs_speed, match_detections, precision, recall, recall_by_species};
use crate::imaging::detect;
use crate::scene::{synthesize_scene, GroundTruthPlant, SceneSpec, Species};
use crate::{Error, Result};

/// One result row: a single camera × speed × replicate cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub camera: String,
    pub speed_kmh: f64,
    pub replicate: u32,
    pub precision: f64,
    pub recall: f64,
    pub recall_broadleaf: f64,
    pub recall_grass: f64,
    pub mean_blur: f64,
}

/// One fitted regression row: recall-% against speed for a camera × species.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionRow {
    pub camera: String,
    pub species: Species,
    pub intercept: f64,
    pub slope: f64,
    pub r_squared: f64,
}

/// Everything a sweep produces.
#[derive(Debug, Clone)]
pub struct SweepOutputs {
    pub rows: Vec<SweepRow>,
    pub fits: Vec<RegressionRow>,
    /// `camera,speed_kmh,replicate,precision,recall,recall_broadleaf,recall_grass,mean_blur`
    pub results_csv: Vec<u8>,
    /// `camera,species,intercept,slope,r_squared`
    pub regression_csv: Vec<u8>,
}

/// Deterministic seed mixing for per-cell RNG streams.
fn derive_seed(parts: &[u64]) -> u64 {
    let mut acc: u64 = 0x9E37_79B9_7F4A_7C15;
    for &p in parts {
        acc ^= p;
        // splitmix64 finalizer
        acc = acc.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = acc;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        acc = z ^ (z >> 31);
    }
    acc
}

/// Run the full sweep described by `config`.
pub fn run_sweep(config: &Config) -> Result<SweepOutputs> {
    config.validate()?;
    let sweep = &config.sweep;
    let profiles: Vec<CameraProfile> = sweep
        .profiles
        .iter()
        .map(|name| config.resolve_profile(name))
        .collect::<Result<_>>()?;

    // One scene per replicate, shared across profiles and speeds.
    let scenes: Vec<(image::RgbImage, Vec<GroundTruthPlant>)> = (0..sweep.replicates)
        .into_par_iter()
        .map(|rep| {
            let spec = SceneSpec {
                rng_seed: config.scene.rng_seed.wrapping_add(rep as u64),
                ..config.scene.clone()
            };
            synthesize_scene(&spec)
        })
        .collect::<Result<_>>()?;

    struct Cell {
        profile_idx: usize,
        speed_idx: usize,
        replicate: u32,
    }
    let mut cells = Vec::new();
    for profile_idx in 0..profiles.len() {
        for speed_idx in 0..sweep.speeds_kmh.len() {
            for replicate in 0..sweep.replicates {
                cells.push(Cell {
                    profile_idx,
                    speed_idx,
                    replicate,
                });
            }
        }
    }

    let rows: Vec<SweepRow> = cells
        .par_iter()
        .map(|cell| -> Result<SweepRow> {
            let profile = &profiles[cell.profile_idx];
            let speed = sweep.speeds_kmh[cell.speed_idx];
            let (scene_img, plants) = &scenes[cell.replicate as usize];
            let spec = SceneSpec {
                rng_seed: config.scene.rng_seed.wrapping_add(cell.replicate as u64),
                ..config.scene.clone()
            };
            let pass_seed = derive_seed(&[
                spec.rng_seed,
                cell.profile_idx as u64,
                cell.speed_idx as u64,
            ]);

            let seq = render_pass(
                scene_img,
                plants,
                &spec,
                profile,
                speed,
                sweep.fps,
                sweep.fov_length_m,
                pass_seed,
            )?;

            let detections: Vec<_> = seq
                .frames
                .par_iter()
                .map(|frame| detect(frame, &config.detection))
                .collect();

            let tally = match_detections(&seq, &detections, plants, &config.matching)?;
            let by_species = recall_by_species(&tally);

            let blur_sum: f64 = seq
                .frames
                .par_iter()
                .map(|frame| {
                    fft_blur_score(frame, config.blur.cutoff_radius_frac)
                        .map(|s| s.score)
                        .unwrap_or(0.0)
                })
                .sum();
            let mean_blur = blur_sum / seq.frames.len() as f64;

            Ok(SweepRow {
                camera: profile.name.clone(),
                speed_kmh: speed,
                replicate: cell.replicate,
                // No detections at all leaves zero false positives, so
                // precision is vacuously perfect.
                precision: precision(&tally).unwrap_or(1.0),
                recall: recall(&tally)?,
                recall_broadleaf: by_species
                    .get(&Species::Broadleaf)
                    .copied()
                    .unwrap_or(f64::NAN),
                recall_grass: by_species.get(&Species::Grass).copied().unwrap_or(f64::NAN),
                mean_blur,
            })
        })
        .collect::<Result<_>>()?;

    // Recall-% against speed, per camera × species, over replicate points.
    let mut fits = Vec::new();
    for profile in &profiles {
        for species in [Species::Broadleaf, Species::Grass] {
            let points: Vec<(f64, f64)> = rows
                .iter()
                .filter(|r| r.camera == profile.name)
                .filter_map(|r| {
                    let rec = match species {
                        Species::Broadleaf => r.recall_broadleaf,
                        Species::Grass => r.recall_grass,
                    };
                    rec.is_finite().then_some((r.speed_kmh, rec * 100.0))
                })
                .collect();
            if points.is_empty() {
                continue;
            }
            let fit = fit_recall_vs_speed(&points)?;
            fits.push(RegressionRow {
                camera: profile.name.clone(),
                species,
                intercept: fit.intercept,
                slope: fit.slope,
                r_squared: fit.r_squared,
            });
        }
    }

    let results_csv = results_csv(&rows)?;
    let regression_csv = regression_csv(&fits)?;
    Ok(SweepOutputs {
        rows,
        fits,
        results_csv,
        regression_csv,
    })
}

pub fn results_csv(rows: &[SweepRow]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "camera",
        "speed_kmh",
        "replicate",
        "precision",
        "recall",
        "recall_broadleaf",
        "recall_grass",
        "mean_blur",
    ])?;
    for r in rows {
        w.write_record(&[
            r.camera.clone(),
            format!("{}", r.speed_kmh),
            r.replicate.to_string(),
            format!("{:.6}", r.precision),
            format!("{:.6}", r.recall),
            format!("{:.6}", r.recall_broadleaf),
            format!("{:.6}", r.recall_grass),
            format!("{:.6}", r.mean_blur),
        ])?;
    }
    w.into_inner()
        .map_err(|e| Error::Config(format!("csv flush: {e}")))
}

pub fn regression_csv(fits: &[RegressionRow]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["camera", "species", "intercept", "slope", "r_squared"])?;
    for f in fits {
        w.write_record(&[
            f.camera.clone(),
            f.species.to_string(),
            format!("{:.4}", f.intercept),
            format!("{:.4}", f.slope),
            format!("{:.4}", f.r_squared),
        ])?;
    }
    w.into_inner()
        .map_err(|e| Error::Config(format!("csv flush: {e}")))
}

/// Mean recall per (camera, speed) over replicates, preserving sweep order.
pub fn mean_recall_by_speed(rows: &[SweepRow], camera: &str) -> Vec<(f64, f64)> {
    let mut out: Vec<(f64, f64, u32)> = Vec::new();
    for r in rows.iter().filter(|r| r.camera == camera) {
        match out.iter_mut().find(|(s, _, _)| *s == r.speed_kmh) {
            Some((_, sum, n)) => {
                *sum += r.recall;
                *n += 1;
            }
            None => out.push((r.speed_kmh, r.recall, 1)),
        }
    }
    out.into_iter()
        .map(|(s, sum, n)| (s, sum / n as f64))
        .collect()
}
