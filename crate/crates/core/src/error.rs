use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("slip domain error: {0}")]
    SlipDomain(String),
    #[error("speed {v} m/s is at or below the {v_eps} m/s floor")]
    DegenerateSpeed { v: f64, v_eps: f64 },
    #[error("wheel lift: {axle} normal load {load:.1} N is negative")]
    WheelLift { axle: &'static str, load: f64 },
    #[error("state (beta={beta}, psidot={psidot}) is outside the linear validity box")]
    OutsideLinearBox { beta: f64, psidot: f64 },
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("point ({x:.3}, {y:.3}) is outside the track corridor")]
    OutOfCorridor { x: f64, y: f64 },
    #[error("track geometry: {0}")]
    Geometry(String),
    #[error("manifold build failed at radius {radius} m: {reason}")]
    ManifoldBuild { radius: f64, reason: String },
    #[error("manifold parameter hash mismatch: file has {found}, configuration gives {expected}")]
    HashMismatch { found: String, expected: String },
    #[error("manifold has no masked-in cells")]
    EmptyManifold,
    #[error("manifold file: {0}")]
    ManifoldFormat(String),
    #[error("planning failed: {0}")]
    Planning(String),
    #[error("trajectory reconstruction: {0}")]
    Reconstruction(String),
    #[error("lap time: {0}")]
    IncompleteLap(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}
