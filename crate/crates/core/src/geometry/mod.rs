//! Spatial preprocessing on the transmit side and participant placement on
//! the view side.

pub mod background;
pub mod floor;
pub mod placement;
pub mod registration;

use thiserror::Error;

pub use background::remove_background;
pub use floor::{depth_points, extract_floor, fit_floor_points, FloorSmoother, RansacParams, MIN_FLOOR_INLIERS};
pub use placement::{
    compose_calibration, floor_aligned_pose, format_calibration, leveling_rotation, match_floor, parse_calibration,
    set_interlocutor_distance, CalibrationEntry,
};
pub use registration::{register_depth_to_color, registered_intrinsics};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("background range [{near_mm}, {far_mm}] is empty")]
    InvalidRange { near_mm: u16, far_mm: u16 },
    #[error("invalid RANSAC parameters: {0}")]
    InvalidParams(&'static str),
    #[error("need at least 3 valid depth points, found {0}")]
    NotEnoughPoints(usize),
    #[error("no floor candidate reached the inlier minimum (best {best_inliers})")]
    NoFloorFound { best_inliers: usize },
    #[error("interlocutor distance {0} must be positive")]
    InvalidDistance(f64),
    #[error("anchor coincides horizontally with the viewer")]
    DegenerateDirection,
    #[error("first calibration entry must be the identity pose")]
    MissingFirstTransmitter,
    #[error("calibration line {line}: {message}")]
    CalibrationSyntax { line: usize, message: String },
}
