//! Where remote participants stand in the viewer's world: floor matching,
//! conversational distance and multi-transmitter calibration.

use super::GeometryError;
use crate::model::{euler_yxz_to_quat, quat_to_euler_yxz, EulerYxz, FloorPlane, Pose, UNIT_TOLERANCE};
use nalgebra::{UnitQuaternion, Vector3};
use std::fmt::Write as _;

/// Minimal rotation taking the floor normal onto +y.
pub fn leveling_rotation(floor: &FloorPlane) -> UnitQuaternion<f64> {
    UnitQuaternion::rotation_between(&floor.normal, &Vector3::y()).unwrap_or_else(|| {
        // Antiparallel normals cannot occur for a valid floor; keep a
        // deterministic answer anyway.
        UnitQuaternion::from_axis_angle(&Vector3::x_axis(), std::f64::consts::PI)
    })
}

/// Floor-matched placement.
///
/// The returned pose keeps the yaw of `current`, has zero pitch and roll,
/// keeps the horizontal translation and picks the height so that the floor,
/// once leveled by [`leveling_rotation`], lands on world `y = 0`.
pub fn match_floor(floor: &FloorPlane, current: &Pose) -> Pose {
    let yaw = quat_to_euler_yxz(&current.rotation).yaw;
    Pose {
        rotation: euler_yxz_to_quat(EulerYxz::new(yaw, 0.0, 0.0)),
        translation: Vector3::new(current.translation.x, -floor.distance, current.translation.z),
    }
}

/// Camera-to-world transform for a capture whose floor is `floor`: leveling
/// followed by the floor-matched placement.
pub fn floor_aligned_pose(floor: &FloorPlane, current: &Pose) -> Pose {
    let level = Pose::from_parts(leveling_rotation(floor), Vector3::zeros());
    match_floor(floor, current).compose(&level)
}

/// Moves the anchor along the horizontal ray from the viewer origin so its
/// horizontal distance becomes `distance_m`.
pub fn set_interlocutor_distance(placement: &Pose, distance_m: f64) -> Result<Pose, GeometryError> {
    if !distance_m.is_finite() || distance_m <= 0.0 {
        return Err(GeometryError::InvalidDistance(distance_m));
    }
    let t = placement.translation;
    let horizontal = t.x.hypot(t.z);
    if horizontal < 1e-12 {
        return Err(GeometryError::DegenerateDirection);
    }
    let s = distance_m / horizontal;
    Ok(Pose {
        rotation: placement.rotation,
        translation: Vector3::new(t.x * s, t.y, t.z * s),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CalibrationEntry {
    pub transmitter_id: u32,
    /// Pose of this transmitter relative to the first one.
    pub relative_pose: Pose,
}

fn is_identity(pose: &Pose) -> bool {
    pose.rotation.angle() <= UNIT_TOLERANCE && pose.translation.norm() <= UNIT_TOLERANCE
}

/// World pose for every transmitter: `first_placement ∘ relative_pose`.
pub fn compose_calibration(entries: &[CalibrationEntry], first_placement: &Pose) -> Result<Vec<(u32, Pose)>, GeometryError> {
    match entries.first() {
        Some(first) if is_identity(&first.relative_pose) => {}
        _ => return Err(GeometryError::MissingFirstTransmitter),
    }
    Ok(entries
        .iter()
        .map(|e| (e.transmitter_id, first_placement.compose(&e.relative_pose)))
        .collect())
}

/// Calibration file: one transmitter per line,
/// `id qw qx qy qz tx ty tz`, whitespace separated; `#` starts a comment.
pub fn parse_calibration(text: &str) -> Result<Vec<CalibrationEntry>, GeometryError> {
    let mut entries = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let bad = |why: &str| GeometryError::CalibrationSyntax {
            line: lineno + 1,
            message: why.to_string(),
        };
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 8 {
            return Err(bad(&format!("expected 8 fields, found {}", fields.len())));
        }
        let transmitter_id: u32 = fields[0].parse().map_err(|_| bad("transmitter id is not an integer"))?;
        let mut v = [0.0f64; 7];
        for (slot, field) in v.iter_mut().zip(&fields[1..]) {
            *slot = field.parse().map_err(|_| bad(&format!("not a number: {field}")))?;
        }
        let relative_pose =
            Pose::from_components(v[0], v[1], v[2], v[3], [v[4], v[5], v[6]]).map_err(|e| bad(&e.to_string()))?;
        entries.push(CalibrationEntry { transmitter_id, relative_pose });
    }
    Ok(entries)
}

pub fn format_calibration(entries: &[CalibrationEntry]) -> String {
    let mut out = String::from("# id qw qx qy qz tx ty tz\n");
    for e in entries {
        let [w, x, y, z] = e.relative_pose.quaternion_wxyz();
        let t = e.relative_pose.translation;
        let _ = writeln!(out, "{} {w:?} {x:?} {y:?} {z:?} {:?} {:?} {:?}", e.transmitter_id, t.x, t.y, t.z);
    }
    out
}
