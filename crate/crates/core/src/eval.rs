//! Plant-level scoring of a detection pass.
//!
//! Recall uses the manual plant count as its denominator: a plant counts as
//! detected (one true positive) if any detection in any frame lands on it.
//! A detection landing on no plant is one false positive; extra detections
//! on an already-counted plant are neither. Precision is TP / (TP + FP),
//! recall is TP / total weeds.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::camera::FrameSequence;
use crate::imaging::Detection;
use crate::scene::{GroundTruthPlant, Species};
use crate::{Error, Result};

/// Geometric matching rule between detections and plants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MatchCriteria {
    /// A detection centroid must fall within plant radius + this tolerance
    /// (metres) of the plant center.
    pub center_tolerance_m: f64,
    /// Count a plant as detected if it is matched in any frame of the pass.
    pub one_hit_suffices: bool,
}

impl Default for MatchCriteria {
    fn default() -> Self {
        Self {
            center_tolerance_m: 0.05,
            one_hit_suffices: true,
        }
    }
}

/// Per-species detected/total counts.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpeciesCount {
    pub detected: u32,
    pub total: u32,
}

/// Plant-level confusion counts for one pass.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ConfusionTally {
    /// Distinct plants detected at least once.
    pub true_positives: u32,
    /// Detections that matched no plant.
    pub false_positives: u32,
    /// Manual plant count of the transect.
    pub total_weeds: u32,
    pub per_species: BTreeMap<Species, SpeciesCount>,
}

/// Evaluation summary for one camera × speed pass.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub camera: String,
    pub speed_kmh: f64,
    pub precision: f64,
    pub recall: f64,
    pub recall_by_species: BTreeMap<Species, f64>,
    pub tally: ConfusionTally,
}

/// Ordinary least-squares line fit of recall (%) against speed (km/h).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegressionFit {
    /// Δ recall-% per km/h.
    pub slope: f64,
    /// Recall-% at speed 0.
    pub intercept: f64,
    pub r_squared: f64,
}

/// Match per-frame detections against the pass ground truth.
///
/// Detection centroids are converted to transect coordinates through the
/// frame's window origin; each is assigned to the nearest plant whose disc
/// (radius + tolerance) contains it, independent of frame order. `plants` is
/// the full transect list and supplies the recall denominator.
pub fn match_detections(
    seq: &FrameSequence,
    detections_per_frame: &[Vec<Detection>],
    plants: &[GroundTruthPlant],
    criteria: &MatchCriteria,
) -> Result<ConfusionTally> {
    let px_per_m_x = seq.sensor_width as f64 / seq.fov_length_m;
    let px_per_m_y = seq.sensor_height as f64 / seq.transect_width_m;

    for (k, frame) in seq.frames.iter().enumerate() {
        if frame.dimensions() != (seq.sensor_width, seq.sensor_height) {
            return Err(Error::FrameGeometry {
                frame: k,
                got_w: frame.width(),
                got_h: frame.height(),
                want_w: seq.sensor_width,
                want_h: seq.sensor_height,
            });
        }
    }

    let mut hit: BTreeSet<u32> = BTreeSet::new();
    let mut hit_species: BTreeMap<Species, u32> = BTreeMap::new();
    let mut false_positives = 0u32;

    for (k, dets) in detections_per_frame.iter().enumerate() {
        let x0 = seq.frame_origin_m(k);
        for det in dets {
            let gx = x0 + (det.centroid.0 + 0.5) / px_per_m_x;
            let gy = (det.centroid.1 + 0.5) / px_per_m_y;

            let nearest = plants
                .iter()
                .filter_map(|p| {
                    let (dx, dy) = (p.center_m.0 - gx, p.center_m.1 - gy);
                    let dist = (dx * dx + dy * dy).sqrt();
                    let reach = p.radius_m() + criteria.center_tolerance_m;
                    (dist <= reach).then_some((dist, p))
                })
                .min_by(|a, b| a.0.total_cmp(&b.0));

            match nearest {
                Some((_, plant)) => {
                    if criteria.one_hit_suffices && hit.insert(plant.id) {
                        *hit_species.entry(plant.species).or_insert(0) += 1;
                    }
                }
                None => false_positives += 1,
            }
        }
    }

    let mut per_species: BTreeMap<Species, SpeciesCount> = BTreeMap::new();
    for p in plants {
        per_species.entry(p.species).or_default().total += 1;
    }
    for (species, detected) in hit_species {
        per_species.entry(species).or_default().detected = detected;
    }

    Ok(ConfusionTally {
        true_positives: hit.len() as u32,
        false_positives,
        total_weeds: plants.len() as u32,
        per_species,
    })
}

/// Precision = TP / (TP + FP); undefined when no detections were made.
pub fn precision(tally: &ConfusionTally) -> Result<f64> {
    let denom = tally.true_positives + tally.false_positives;
    if denom == 0 {
        return Err(Error::NoDetections);
    }
    Ok(tally.true_positives as f64 / denom as f64)
}

/// Recall = TP / total weeds; the denominator is the manual plant count,
/// not TP + FN per frame.
pub fn recall(tally: &ConfusionTally) -> Result<f64> {
    if tally.total_weeds == 0 {
        return Err(Error::NoPlants);
    }
    Ok(tally.true_positives as f64 / tally.total_weeds as f64)
}

/// Per-species recall; species with zero plants are omitted. Species-wise
/// precision is intentionally not computed (detections carry no class).
pub fn recall_by_species(tally: &ConfusionTally) -> BTreeMap<Species, f64> {
    tally
        .per_species
        .iter()
        .filter(|(_, c)| c.total > 0)
        .map(|(s, c)| (*s, c.detected as f64 / c.total as f64))
        .collect()
}

/// Build an [`EvalReport`] from a tally.
pub fn report(camera: &str, speed_kmh: f64, tally: ConfusionTally) -> Result<EvalReport> {
    Ok(EvalReport {
        camera: camera.to_string(),
        speed_kmh,
        precision: precision(&tally).unwrap_or(1.0),
        recall: recall(&tally)?,
        recall_by_species: recall_by_species(&tally),
        tally,
    })
}

/// Ordinary least squares of recall-% on speed; errors when fewer than two
/// distinct speeds are present. R² is defined as 0 when recall is constant.
pub fn fit_recall_vs_speed(points: &[(f64, f64)]) -> Result<RegressionFit> {
    let n = points.len() as f64;
    let distinct = {
        let mut xs: Vec<f64> = points.iter().map(|p| p.0).collect();
        xs.sort_by(f64::total_cmp);
        xs.dedup();
        xs.len()
    };
    if distinct < 2 {
        return Err(Error::DegenerateRegression);
    }

    let mean_x = points.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_y = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mean_x).powi(2)).sum();
    let sxy: f64 = points
        .iter()
        .map(|p| (p.0 - mean_x) * (p.1 - mean_y))
        .sum();
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;

    let ss_tot: f64 = points.iter().map(|p| (p.1 - mean_y).powi(2)).sum();
    let ss_res: f64 = points
        .iter()
        .map(|p| (p.1 - (intercept + slope * p.0)).powi(2))
        .sum();
    let r_squared = if ss_tot > 0.0 {
        (1.0 - ss_res / ss_tot).clamp(0.0, 1.0)
    } else {
        0.0
    };

    Ok(RegressionFit {
        slope,
        intercept,
        r_squared,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::imaging::BBox;
    use image::RgbImage;
    use proptest::prelude::*;

    fn fixture_sequence(n_frames: usize) -> FrameSequence {
        FrameSequence {
            frames: vec![RgbImage::new(100, 100); n_frames],
            frame_truth: vec![Vec::new(); n_frames],
            speed_kmh: 10.0,
            fps: 10.0, // spacing 0.2778 m
            fov_length_m: 1.0,
            transect_width_m: 1.0,
            sensor_width: 100,
            sensor_height: 100,
        }
    }

    fn plant(id: u32, species: Species, x: f64, y: f64, diameter_mm: f64) -> GroundTruthPlant {
        GroundTruthPlant {
            id,
            species,
            center_m: (x, y),
            diameter_mm,
        }
    }

    fn det_at(px: f64, py: f64) -> Detection {
        Detection {
            bbox: BBox {
                x: px as u32,
                y: py as u32,
                w: 2,
                h: 2,
            },
            centroid: (px, py),
            area: 4,
        }
    }

    #[test]
    fn no_detections_means_zero_tallies() {
        let seq = fixture_sequence(3);
        let plants: Vec<_> = (0..10)
            .map(|i| plant(i, Species::Broadleaf, 0.05 + i as f64 * 0.05, 0.5, 100.0))
            .collect();
        let dets = vec![Vec::new(); 3];
        let tally = match_detections(&seq, &dets, &plants, &MatchCriteria::default()).unwrap();
        assert_eq!(tally.true_positives, 0);
        assert_eq!(tally.false_positives, 0);
        assert_eq!(tally.total_weeds, 10);
        assert!(precision(&tally).is_err());
        assert_eq!(recall(&tally).unwrap(), 0.0);
    }

    #[test]
    fn dead_center_hits_count_every_plant() {
        let seq = fixture_sequence(1);
        let plants = vec![
            plant(0, Species::Broadleaf, 0.30, 0.50, 100.0),
            plant(1, Species::Grass, 0.70, 0.40, 100.0),
        ];
        // Frame 0 window is [0, 1] m at 100 px/m: centers map to px - 0.5.
        let dets = vec![vec![det_at(by_m(0.30), by_m(0.50)), det_at(by_m(0.70), by_m(0.40))]];
        let tally = match_detections(&seq, &dets, &plants, &MatchCriteria::default()).unwrap();
        assert_eq!(tally.true_positives, 2);
        assert_eq!(tally.false_positives, 0);
        assert_eq!(precision(&tally).unwrap(), 1.0);
        assert_eq!(recall(&tally).unwrap(), 1.0);
    }

    /// Map metres to the pixel centroid landing на that coordinate.
    fn by_m(m: f64) -> f64 {
        m * 100.0 - 0.5
    }

    /// Brute-force matcher: every detection tested against every plant disc;
    /// TP = distinct matched plants, FP = detections matching none.
    fn brute_force(
        seq: &FrameSequence,
        dets: &[Vec<Detection>],
        plants: &[GroundTruthPlant],
        tol: f64,
    ) -> (u32, u32) {
        let mut matched = std::collections::BTreeSet::new();
        let mut fp = 0;
        for (k, frame_dets) in dets.iter().enumerate() {
            for d in frame_dets {
                let gx = seq.frame_origin_m(k)
                    + (d.centroid.0 + 0.5) * seq.fov_length_m / seq.sensor_width as f64;
                let gy = (d.centroid.1 + 0.5) * seq.transect_width_m / seq.sensor_height as f64;
                let hits: Vec<&GroundTruthPlant> = plants
                    .iter()
                    .filter(|p| {
                        let dx = p.center_m.0 - gx;
                        let dy = p.center_m.1 - gy;
                        (dx * dx + dy * dy).sqrt() <= p.radius_m() + tol
                    })
                    .collect();
                if hits.is_empty() {
                    fp += 1;
                } else {
                    // nearest
                    let best = hits
                        .into_iter()
                        .min_by(|a, b| {
                            let da = (a.center_m.0 - gx).hypot(a.center_m.1 - gy);
                            let db = (b.center_m.0 - gx).hypot(b.center_m.1 - gy);
                            da.total_cmp(&db)
                        })
                        .unwrap();
                    matched.insert(best.id);
                }
            }
        }
        (matched.len() as u32, fp)
    }

    #[test]
    fn partial_hits_and_soil_detection() {
        let seq = fixture_sequence(1);
        let plants = vec![
            plant(0, Species::Broadleaf, 0.20, 0.50, 100.0),
            plant(1, Species::Grass, 0.50, 0.50, 100.0),
            plant(2, Species::Grass, 0.80, 0.50, 100.0),
        ];
        let dets = vec![vec![
            det_at(by_m(0.21), by_m(0.52)), // plant 0
            det_at(by_m(0.49), by_m(0.47)), // plant 1
            det_at(by_m(0.65), by_m(0.10)), // bare soil
        ]];
        let criteria = MatchCriteria::default();
        let tally = match_detections(&seq, &dets, &plants, &criteria).unwrap();
        assert_eq!(tally.true_positives, 2);
        assert_eq!(tally.false_positives, 1);
        assert!((recall(&tally).unwrap() - 2.0 / 3.0).abs() < 1e-12);
        assert!((precision(&tally).unwrap() - 2.0 / 3.0).abs() < 1e-12);

        let (tp_bf, fp_bf) = brute_force(&seq, &dets, &plants, criteria.center_tolerance_m);
        assert_eq!((tally.true_positives, tally.false_positives), (tp_bf, fp_bf));
    }

    #[test]
    fn duplicates_on_one_plant_are_ignored() {
        let seq = fixture_sequence(2);
        let plants = vec![plant(0, Species::Broadleaf, 0.30, 0.50, 120.0)];
        let dets = vec![
            vec![det_at(by_m(0.30), by_m(0.50)), det_at(by_m(0.32), by_m(0.49))],
            vec![det_at(by_m(0.31) - seq.frame_spacing_m() * 100.0, by_m(0.50))],
        ];
        let tally = match_detections(&seq, &dets, &plants, &MatchCriteria::default()).unwrap();
        assert_eq!(tally.true_positives, 1);
        assert_eq!(tally.false_positives, 0, "extras are neither TP nor FP");
    }

    #[test]
    fn matching_is_frame_order_invariant() {
        let seq = fixture_sequence(3);
        let plants = vec![
            plant(0, Species::Broadleaf, 0.25, 0.50, 100.0),
            plant(1, Species::Grass, 0.60, 0.30, 100.0),
        ];
        let frame_dets = vec![
            vec![det_at(by_m(0.25), by_m(0.50))],
            vec![det_at(by_m(0.90), by_m(0.90))],
            vec![],
        ];
        let t1 = match_detections(&seq, &frame_dets, &plants, &MatchCriteria::default()).unwrap();
        // Same detections re-attributed to different frame indices: ground
        // positions change, so instead permute EMPTY frames around them.
        let permuted = vec![frame_dets[2].clone(), frame_dets[1].clone(), frame_dets[0].clone()];
        let mut seq2 = fixture_sequence(3);
        seq2.speed_kmh = 0.0001; // near-zero spacing: frame index irrelevant
        let mut seq1 = fixture_sequence(3);
        seq1.speed_kmh = 0.0001;
        let a = match_detections(&seq1, &frame_dets, &plants, &MatchCriteria::default()).unwrap();
        let b = match_detections(&seq2, &permuted, &plants, &MatchCriteria::default()).unwrap();
        assert_eq!(a, b);
        assert_eq!(t1.total_weeds, 2);
    }

    #[test]
    fn frame_dimension_mismatch_is_an_error() {
        let mut seq = fixture_sequence(2);
        seq.frames[1] = RgbImage::new(64, 64);
        let plants = vec![plant(0, Species::Broadleaf, 0.5, 0.5, 100.0)];
        match match_detections(&seq, &[vec![], vec![]], &plants, &MatchCriteria::default()) {
            Err(Error::FrameGeometry { frame: 1, .. }) => {}
            other => panic!("expected FrameGeometry error, got {other:?}"),
        }
    }

    #[test]
    fn precision_recall_formulas() {
        let tally = ConfusionTally {
            true_positives: 9,
            false_positives: 1,
            total_weeds: 20,
            per_species: BTreeMap::new(),
        };
        assert!((precision(&tally).unwrap() - 0.9).abs() < 1e-15);
        let tally = ConfusionTally {
            true_positives: 43,
            false_positives: 0,
            total_weeds: 100,
            per_species: BTreeMap::new(),
        };
        assert_eq!(precision(&tally).unwrap(), 1.0);
        assert!((recall(&tally).unwrap() - 0.43).abs() < 1e-15);
        // The paper-shaped best case: 0.957 recall.
        let tally = ConfusionTally {
            true_positives: 957,
            false_positives: 0,
            total_weeds: 1000,
            per_species: BTreeMap::new(),
        };
        assert!((recall(&tally).unwrap() - 0.957).abs() < 1e-15);
    }

    #[test]
    fn species_recall_skips_absent_species() {
        let mut per_species = BTreeMap::new();
        per_species.insert(
            Species::Broadleaf,
            SpeciesCount {
                detected: 10,
                total: 10,
            },
        );
        per_species.insert(
            Species::Grass,
            SpeciesCount {
                detected: 5,
                total: 10,
            },
        );
        let tally = ConfusionTally {
            true_positives: 15,
            false_positives: 0,
            total_weeds: 20,
            per_species: per_species.clone(),
        };
        let by_species = recall_by_species(&tally);
        assert_eq!(by_species[&Species::Broadleaf], 1.0);
        assert_eq!(by_species[&Species::Grass], 0.5);

        per_species.insert(Species::Grass, SpeciesCount { detected: 0, total: 0 });
        let tally = ConfusionTally {
            per_species,
            ..tally
        };
        assert!(!recall_by_species(&tally).contains_key(&Species::Grass));
    }

    #[test]
    fn ols_recovers_noiseless_line() {
        let points: Vec<(f64, f64)> = [5.0, 10.0, 15.0, 20.0, 30.0]
            .iter()
            .map(|&v| (v, 76.60 - 1.12 * v))
            .collect();
        let fit = fit_recall_vs_speed(&points).unwrap();
        assert!((fit.slope - (-1.12)).abs() < 1e-9, "slope {}", fit.slope);
        assert!((fit.intercept - 76.60).abs() < 1e-9, "intercept {}", fit.intercept);
        assert!((fit.r_squared - 1.0).abs() < 1e-9, "r² {}", fit.r_squared);
    }

    #[test]
    fn ols_two_points_interpolate() {
        let fit = fit_recall_vs_speed(&[(5.0, 90.0), (30.0, 40.0)]).unwrap();
        assert!((fit.slope - (-2.0)).abs() < 1e-12);
        assert!((fit.intercept - 100.0).abs() < 1e-12);
        assert!((fit.r_squared - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ols_constant_recall() {
        let fit = fit_recall_vs_speed(&[(5.0, 50.0), (10.0, 50.0), (30.0, 50.0)]).unwrap();
        assert_eq!(fit.slope, 0.0);
        assert_eq!(fit.r_squared, 0.0);
    }

    #[test]
    fn ols_rejects_single_speed() {
        assert!(fit_recall_vs_speed(&[(5.0, 50.0), (5.0, 60.0)]).is_err());
        assert!(fit_recall_vs_speed(&[(5.0, 50.0)]).is_err());
    }

    proptest! {
        #[test]
        fn adding_a_spurious_detection_never_helps(
            tp in 0u32..50, fp in 0u32..50, extra_total in 1u32..50
        ) {
            let total = tp + extra_total;
            let tally = ConfusionTally {
                true_positives: tp,
                false_positives: fp,
                total_weeds: total,
                per_species: BTreeMap::new(),
            };
            let spoiled = ConfusionTally {
                false_positives: fp + 1,
                ..tally.clone()
            };
            let r0 = recall(&tally).unwrap();
            let r1 = recall(&spoiled).unwrap();
            prop_assert!(r1 <= r0);
            if tp + fp > 0 {
                let p0 = precision(&tally).unwrap();
                let p1 = precision(&spoiled).unwrap();
                prop_assert!(p1 <= p0);
            }
            prop_assert!((0.0..=1.0).contains(&r0));
        }

        #[test]
        fn ols_residuals_orthogonal_to_speed(
            seed in 0u64..500,
        ) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let points: Vec<(f64, f64)> = [5.0, 10.0, 15.0, 20.0, 30.0]
                .iter()
                .map(|&v| (v, rng.random_range(0.0..100.0)))
                .collect();
            let fit = fit_recall_vs_speed(&points).unwrap();
            let dot: f64 = points
                .iter()
                .map(|&(x, y)| (y - fit.intercept - fit.slope * x) * x)
                .sum();
            prop_assert!(dot.abs() < 1e-9, "residual·speed = {dot}");
        }

        #[test]
        fn ols_reproduces_collinear_inputs(slope in -5.0f64..5.0, intercept in 0.0f64..100.0) {
            let points: Vec<(f64, f64)> = [5.0, 10.0, 15.0, 20.0, 30.0]
                .iter()
                .map(|&v| (v, intercept + slope * v))
                .collect();
            let fit = fit_recall_vs_speed(&points).unwrap();
            for &(x, y) in &points {
                prop_assert!((fit.intercept + fit.slope * x - y).abs() < 1e-9);
            }
        }
    }
}
