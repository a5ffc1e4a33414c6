//! Detect→actuate→deliver latency budget.
//!
//! From the moment a weed enters the field of view, seven stages must finish
//! before herbicide lands on it: image capture, detection processing, the
//! actuation signal, relay switching, solenoid opening, herbicide flow to the
//! nozzle, and flight to the target. The ground distance between the leading
//! edge of the field of view and the spray impact point, divided by the total
//! stage time, bounds the feasible ground speed.

use serde::{Deserialize, Serialize};

use crate::{kmh_to_mps, mps_to_kmh, Error, Result};

/// Per-stage durations in seconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EventBudget {
    /// e1.1 image capture.
    pub capture_s: f64,
    /// e1.2 detection algorithm.
    pub processing_s: f64,
    /// e1.3 detection-to-actuation signal.
    pub signal_s: f64,
    /// e2.1 relay switching.
    pub relay_s: f64,
    /// e2.2 solenoid opening.
    pub solenoid_s: f64,
    /// e3.1 herbicide flow to the nozzle.
    pub flow_s: f64,
    /// e3.2 nozzle-to-target flight.
    pub flight_s: f64,
}

/// Illustrative example budget; none of these durations are measured values.
impl Default for EventBudget {
    fn default() -> Self {
        Self {
            capture_s: 0.033,
            processing_s: 0.025,
            signal_s: 0.001,
            relay_s: 0.005,
            solenoid_s: 0.020,
            flow_s: 0.015,
            flight_s: 0.020,
        }
    }
}

impl EventBudget {
    pub fn validate(&self) -> Result<()> {
        if self.as_array().iter().any(|&(_, d)| d < 0.0) {
            return Err(Error::InvalidParams("stage durations must be >= 0".into()));
        }
        Ok(())
    }

    /// (stage label, duration) pairs in timeline order.
    pub fn as_array(&self) -> [(&'static str, f64); 7] {
        [
            ("e1.1 capture", self.capture_s),
            ("e1.2 processing", self.processing_s),
            ("e1.3 signal", self.signal_s),
            ("e2.1 relay", self.relay_s),
            ("e2.2 solenoid", self.solenoid_s),
            ("e3.1 flow", self.flow_s),
            ("e3.2 flight", self.flight_s),
        ]
    }

    fn with_stage(&self, index: usize, duration: f64) -> Self {
        let mut out = *self;
        let slot = match index {
            0 => &mut out.capture_s,
            1 => &mut out.processing_s,
            2 => &mut out.signal_s,
            3 => &mut out.relay_s,
            4 => &mut out.solenoid_s,
            5 => &mut out.flow_s,
            _ => &mut out.flight_s,
        };
        *slot = duration;
        out
    }
}

/// Spatial layout of the camera/nozzle rig.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SprayGeometry {
    /// Ground distance from the leading FOV edge to the spray impact point.
    pub camera_to_nozzle_m: f64,
    pub fov_length_m: f64,
    pub fps: f64,
}

impl Default for SprayGeometry {
    fn default() -> Self {
        Self {
            camera_to_nozzle_m: 1.0,
            fov_length_m: 1.3,
            fps: 30.0,
        }
    }
}

impl SprayGeometry {
    pub fn validate(&self) -> Result<()> {
        if self.camera_to_nozzle_m <= 0.0 || self.fov_length_m <= 0.0 || self.fps <= 0.0 {
            return Err(Error::InvalidParams(
                "spray geometry values must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Sum of all seven stage durations, seconds.
pub fn total_latency(budget: &EventBudget) -> f64 {
    budget.as_array().iter().map(|&(_, d)| d).sum()
}

/// Maximum feasible ground speed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaxSpeed {
    pub mps: f64,
    pub kmh: f64,
}

/// The speed at which the weed reaches the spray point exactly when the
/// latency chain completes: distance / total latency.
pub fn max_ground_speed(budget: &EventBudget, geometry: &SprayGeometry) -> Result<MaxSpeed> {
    let latency = total_latency(budget);
    if latency <= 0.0 {
        return Err(Error::ZeroLatency);
    }
    let mps = geometry.camera_to_nozzle_m / latency;
    Ok(MaxSpeed {
        mps,
        kmh: mps_to_kmh(mps),
    })
}

/// Expected number of frames in which a weed appears while crossing the
/// field of view: fov × fps / speed.
pub fn frames_per_weed(geometry: &SprayGeometry, speed_kmh: f64) -> f64 {
    geometry.fov_length_m * geometry.fps / kmh_to_mps(speed_kmh)
}

/// Verdict of [`feasibility_report`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Feasibility {
    pub speed_kmh: f64,
    /// Time margin at this speed: distance/speed − total latency, seconds.
    pub slack_s: f64,
    pub frames_per_weed: f64,
    /// Weeds may cross the FOV without appearing in any frame.
    pub capture_gap_warning: bool,
    pub feasible: bool,
}

/// Check a speed against the budget: feasible iff the latency chain finishes
/// within the travel time (slack ≥ 0, boundary inclusive) and every weed is
/// expected in at least one frame.
pub fn feasibility_report(
    budget: &EventBudget,
    geometry: &SprayGeometry,
    speed_kmh: f64,
) -> Feasibility {
    let mps = kmh_to_mps(speed_kmh);
    let slack_s = geometry.camera_to_nozzle_m / mps - total_latency(budget);
    let frames = frames_per_weed(geometry, speed_kmh);
    let capture_gap_warning = frames < 1.0;
    Feasibility {
        speed_kmh,
        slack_s,
        frames_per_weed: frames,
        capture_gap_warning,
        feasible: slack_s >= 0.0 && !capture_gap_warning,
    }
}

/// Max-speed sensitivity of each stage to a ±`frac` duration change.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageSensitivity {
    pub stage: &'static str,
    pub duration_s: f64,
    pub max_speed_kmh_minus: f64,
    pub max_speed_kmh_plus: f64,
}

/// Recompute the max speed with each stage scaled down and up by `frac`
/// (default 0.2 in the CLI), leaving the other stages untouched.
pub fn stage_sensitivity(
    budget: &EventBudget,
    geometry: &SprayGeometry,
    frac: f64,
) -> Result<Vec<StageSensitivity>> {
    budget.validate()?;
    geometry.validate()?;
    let stages = budget.as_array();
    let mut rows = Vec::with_capacity(stages.len());
    for (i, &(stage, duration)) in stages.iter().enumerate() {
        let minus = max_ground_speed(&budget.with_stage(i, duration * (1.0 - frac)), geometry)?;
        let plus = max_ground_speed(&budget.with_stage(i, duration * (1.0 + frac)), geometry)?;
        rows.push(StageSensitivity {
            stage,
            duration_s: duration,
            max_speed_kmh_minus: minus.kmh,
            max_speed_kmh_plus: plus.kmh,
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn uniform_budget(each: f64) -> EventBudget {
        EventBudget {
            capture_s: each,
            processing_s: each,
            signal_s: each,
            relay_s: each,
            solenoid_s: each,
            flow_s: each,
            flight_s: each,
        }
    }

    #[test]
    fn latency_sums_stages() {
        assert_eq!(total_latency(&uniform_budget(0.0)), 0.0);
        let t = total_latency(&uniform_budget(0.01));
        assert!((t - 0.07).abs() < 1e-12, "got {t}");
    }

    #[test]
    fn latency_is_permutation_invariant() {
        let a = EventBudget {
            capture_s: 0.01,
            processing_s: 0.02,
            signal_s: 0.03,
            relay_s: 0.004,
            solenoid_s: 0.005,
            flow_s: 0.006,
            flight_s: 0.007,
        };
        let b = EventBudget {
            capture_s: 0.007,
            processing_s: 0.006,
            signal_s: 0.005,
            relay_s: 0.004,
            solenoid_s: 0.03,
            flow_s: 0.02,
            flight_s: 0.01,
        };
        assert!((total_latency(&a) - total_latency(&b)).abs() < 1e-15);
    }

    #[test]
    fn max_speed_examples() {
        // 1 m of travel available, 0.12 s of latency → 8.33 m/s = 30 km/h.
        let budget = EventBudget {
            capture_s: 0.04,
            processing_s: 0.03,
            signal_s: 0.01,
            relay_s: 0.01,
            solenoid_s: 0.01,
            flow_s: 0.01,
            flight_s: 0.01,
        };
        let geom = SprayGeometry {
            camera_to_nozzle_m: 1.0,
            ..SprayGeometry::default()
        };
        let v = max_ground_speed(&budget, &geom).unwrap();
        assert!((v.kmh - 30.0).abs() < 1e-9, "got {} km/h", v.kmh);

        let double = SprayGeometry {
            camera_to_nozzle_m: 2.0,
            ..geom
        };
        let v2 = max_ground_speed(&budget, &double).unwrap();
        assert!((v2.kmh - 60.0).abs() < 1e-9, "distance is linear");

        // 0.5 m over 0.36 s → 5.0 km/h.
        let slow = uniform_budget(0.36 / 7.0);
        let geom_half = SprayGeometry {
            camera_to_nozzle_m: 0.5,
            ..geom
        };
        let v3 = max_ground_speed(&slow, &geom_half).unwrap();
        assert!((v3.kmh - 5.0).abs() < 1e-9, "got {} km/h", v3.kmh);
    }

    #[test]
    fn zero_latency_is_unbounded() {
        match max_ground_speed(&uniform_budget(0.0), &SprayGeometry::default()) {
            Err(Error::ZeroLatency) => {}
            other => panic!("expected ZeroLatency, got {other:?}"),
        }
    }

    #[test]
    fn frames_per_weed_arithmetic() {
        let geom = SprayGeometry {
            camera_to_nozzle_m: 1.0,
            fov_length_m: 1.0,
            fps: 30.0,
        };
        let f = frames_per_weed(&geom, 30.0);
        assert!((f - 3.6).abs() < 1e-3, "got {f}");
        let geom_half = SprayGeometry { fps: 15.0, ..geom };
        assert!((frames_per_weed(&geom_half, 30.0) - f / 2.0).abs() < 1e-12);
    }

    #[test]
    fn boundary_speed_is_feasible() {
        let budget = EventBudget::default();
        let geom = SprayGeometry::default();
        let vmax = max_ground_speed(&budget, &geom).unwrap();
        let at_limit = feasibility_report(&budget, &geom, vmax.kmh);
        assert!(at_limit.feasible, "slack 0 must pass");
        assert!(at_limit.slack_s.abs() < 1e-12);

        let above = feasibility_report(&budget, &geom, vmax.kmh * 1.05);
        assert!(!above.feasible);
        assert!(above.slack_s < 0.0);
    }

    #[test]
    fn zero_budget_is_feasible_until_frames_run_out() {
        let geom = SprayGeometry {
            camera_to_nozzle_m: 1.0,
            fov_length_m: 1.0,
            fps: 120.0,
        };
        let r = feasibility_report(&uniform_budget(0.0), &geom, 100.0);
        assert!(r.feasible);
        assert!(!r.capture_gap_warning);

        let slow_cam = SprayGeometry { fps: 5.0, ..geom };
        let r = feasibility_report(&uniform_budget(0.0), &slow_cam, 100.0);
        assert!(r.capture_gap_warning, "27.8 m/s over 1 m FOV at 5 fps");
        assert!(!r.feasible);
    }

    #[test]
    fn every_stage_increase_lowers_max_speed() {
        let budget = EventBudget::default();
        let geom = SprayGeometry::default();
        let base = max_ground_speed(&budget, &geom).unwrap().kmh;
        for row in stage_sensitivity(&budget, &geom, 0.2).unwrap() {
            assert!(
                row.max_speed_kmh_plus < base && base < row.max_speed_kmh_minus,
                "{}: +20% must slow, -20% must speed up",
                row.stage
            );
        }
    }
}
