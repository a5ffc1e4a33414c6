use thiserror::Error;

/// Errors produced by the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParams(String),

    #[error("image {width}x{height} is below the {min}x{min} minimum for spectral scoring")]
    ImageTooSmall { width: u32, height: u32, min: u32 },

    #[error("plant placement gave up after {attempts} attempts ({placed} of {requested} placed)")]
    PlacementExhausted {
        attempts: u64,
        placed: usize,
        requested: usize,
    },

    #[error("field of view of {fov_m} m exceeds the {scene_m} m transect")]
    FovExceedsScene { fov_m: f64, scene_m: f64 },

    #[error("frame {frame}: dimensions {got_w}x{got_h} do not match the pass geometry {want_w}x{want_h}")]
    FrameGeometry {
        frame: usize,
        got_w: u32,
        got_h: u32,
        want_w: u32,
        want_h: u32,
    },

    #[error("no detections were made; precision is undefined")]
    NoDetections,

    #[error("ground truth contains no plants; recall is undefined")]
    NoPlants,

    #[error("regression needs at least two distinct speeds")]
    DegenerateRegression,

    #[error("total latency is zero; maximum ground speed is unbounded")]
    ZeroLatency,

    #[error("config error: {0}")]
    Config(String),

    #[error("failed to decode image {path}: {reason}")]
    ImageDecode { path: String, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
