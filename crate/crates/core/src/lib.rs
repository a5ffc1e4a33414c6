//! Fallow weed detection and speed-stress toolkit.
//!
//! Everything green in a fallow field is a weed, which makes detection a
//! color problem: an excess-green (ExG) index combined with HSV thresholding
//! separates plants from soil, and connected components turn the mask into
//! per-plant detections. This crate implements that pipeline together with
//! the machinery needed to stress it on the desk instead of in the paddock:
//!
//! 1. [`imaging`] — ExG + HSV segmentation and blob extraction on RGB frames.
//! 2. [`blur`] — non-referenced sharpness scoring from the high-frequency
//!    share of the 2-D Fourier spectrum.
//! 3. [`scene`] — synthetic fallow transects with per-plant ground truth
//!    (broadleaf and grass morphotypes).
//! 4. [`camera`] — a parametric camera model (exposure-driven motion blur,
//!    rolling-shutter skew, pixel-area-dependent sensor noise) that renders
//!    video passes over a scene at a chosen ground speed.
//! 5. [`eval`] — plant-level matching, precision/recall, and recall-vs-speed
//!    regression.
//! 6. [`timeline`] — the detect→actuate→deliver latency budget that converts
//!    stage durations into a maximum feasible ground speed.
//!
//! The [`sweep`] module wires 1–5 into a reproducible camera × speed ×
//! replicate experiment; [`config`] holds the file-backed configuration all
//! of it reads from.

pub mod blur;
pub mod camera;
pub mod config;
mod error;
pub mod eval;
pub mod imaging;
pub mod scene;
pub mod sweep;
pub mod testkit;
pub mod timeline;

pub use error::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// Kilometres per hour → metres per second.
pub fn kmh_to_mps(kmh: f64) -> f64 {
    kmh / 3.6
}

/// Metres per second → kilometres per hour.
pub fn mps_to_kmh(mps: f64) -> f64 {
    mps * 3.6
}
