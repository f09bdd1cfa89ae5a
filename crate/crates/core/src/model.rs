//! Shared domain types: images, pinhole intrinsics, rigid poses, floor planes
//! and the RGBD frame that enters the transmit pipeline.
//!
//! Coordinates are right-handed and y-up; cameras look down −z. Image rows
//! grow downward, so pixel `(u, v)` at depth `d` unprojects to
//! `((u − cx)·d/fx, −(v − cy)·d/fy, −d)`.

use nalgebra::{Matrix3, Matrix4, Quaternion, UnitQuaternion, Vector3};
use thiserror::Error;

/// Allowed deviation of a quaternion or plane normal from unit length.
pub const UNIT_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("invalid intrinsics: {0}")]
    InvalidIntrinsics(String),
    #[error("quaternion norm {0} is not unit")]
    NonUnitQuaternion(f64),
    #[error("invalid floor plane: {0}")]
    InvalidPlane(String),
    #[error("frame id {got} does not follow {last}")]
    NonMonotonicFrameId { last: u32, got: u32 },
}

/// Row-major 16-bit depth in millimeters; `0` marks a pixel without a measurement.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct DepthImage {
    pub width: u32,
    pub height: u32,
    pub data: Vec<u16>,
}

impl DepthImage {
    pub fn new(width: u32, height: u32, data: Vec<u16>) -> Result<Self, ModelError> {
        let image = DepthImage { width, height, data };
        image.validate()?;
        Ok(image)
    }

    pub fn zeros(width: u32, height: u32) -> Self {
        DepthImage {
            width,
            height,
            data: vec![0; width as usize * height as usize],
        }
    }

    pub fn pixel_count(&self) -> usize {
        self.width as usize * self.height as usize
    }

    pub fn get(&self, u: u32, v: u32) -> u16 {
        self.data[v as usize * self.width as usize + u as usize]
    }

    pub fn valid_count(&self) -> usize {
        self.data.iter().filter(|&&d| d != 0).count()
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if self.width == 0 || self.height == 0 {
            return Err(ModelError::DimensionMismatch(format!(
                "depth image {}x{} has a zero dimension",
                self.width, self.height
            )));
        }
        if self.data.len() != self.pixel_count() {
            return Err(ModelError::DimensionMismatch(format!(
                "depth image {}x{} carries {} values",
                self.width,
                self.height,
                self.data.len()
            )));
        }
        Ok(())
    }

    /// Little-endian bytes of the pixel buffer, used for hashing reconstructions.
    pub fn to_le_bytes(&self) -> Vec<u8> {
        self.data.iter().flat_map(|d| d.to_le_bytes()).collect()
    }
}

/// Row-major interleaved RGB, 8 bits per channel.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ColorImage {
    pub width: u32,
    pub height: u32,
    pub data: Vec<u8>,
}

impl ColorImage {
    pub fn new(width: u32, height: u32, data: Vec<u8>) -> Result<Self, ModelError> {
        let image = ColorImage { width, height, data };
        image.validate()?;
        Ok(image)
    }

    pub fn filled(width: u32, height: u32, rgb: [u8; 3]) -> Self {
        let n = width as usize * height as usize;
        let mut data = Vec::with_capacity(3 * n);
        for _ in 0..n {
            data.extend_from_slice(&rgb);
        }
        ColorImage { width, height, data }
    }

    pub fn pixel_count(&self) -> usize {
        self.width as usize * self.height as usize
    }

    pub fn get(&self, u: u32, v: u32) -> [u8; 3] {
        let i = 3 * (v as usize * self.width as usize + u as usize);
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    pub fn set(&mut self, u: u32, v: u32, rgb: [u8; 3]) {
        let i = 3 * (v as usize * self.width as usize + u as usize);
        self.data[i..i + 3].copy_from_slice(&rgb);
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if self.width == 0 || self.height == 0 {
            return Err(ModelError::DimensionMismatch(format!(
                "color image {}x{} has a zero dimension",
                self.width, self.height
            )));
        }
        if self.data.len() != 3 * self.pixel_count() {
            return Err(ModelError::DimensionMismatch(format!(
                "color image {}x{} carries {} bytes",
                self.width,
                self.height,
                self.data.len()
            )));
        }
        Ok(())
    }
}

/// Pinhole camera model without distortion.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct CameraIntrinsics {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: u32,
    pub height: u32,
}

impl CameraIntrinsics {
    /// Square-pixel camera with the principal point at the image center and
    /// the given horizontal field of view.
    pub fn from_horizontal_fov(width: u32, height: u32, hfov_radians: f64) -> Self {
        let f = (width as f64 / 2.0) / (hfov_radians / 2.0).tan();
        CameraIntrinsics {
            fx: f,
            fy: f,
            cx: width as f64 / 2.0,
            cy: height as f64 / 2.0,
            width,
            height,
        }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if !(self.fx > 0.0 && self.fy > 0.0) {
            return Err(ModelError::InvalidIntrinsics(format!(
                "focal lengths must be positive (fx={}, fy={})",
                self.fx, self.fy
            )));
        }
        if self.width == 0 || self.height == 0 {
            return Err(ModelError::InvalidIntrinsics("zero image dimension".into()));
        }
        if !(0.0..self.width as f64).contains(&self.cx) || !(0.0..self.height as f64).contains(&self.cy)
        {
            return Err(ModelError::InvalidIntrinsics(format!(
                "principal point ({}, {}) outside {}x{}",
                self.cx, self.cy, self.width, self.height
            )));
        }
        Ok(())
    }

    /// Same camera resampled to another resolution.
    pub fn scaled_to(&self, width: u32, height: u32) -> Self {
        let sx = width as f64 / self.width as f64;
        let sy = height as f64 / self.height as f64;
        CameraIntrinsics {
            fx: self.fx * sx,
            fy: self.fy * sy,
            cx: self.cx * sx,
            cy: self.cy * sy,
            width,
            height,
        }
    }

    /// Camera-frame point in meters for pixel `(u, v)` at `depth_mm`.
    pub fn unproject(&self, u: f64, v: f64, depth_mm: u16) -> Vector3<f64> {
        let d = depth_mm as f64 / 1000.0;
        Vector3::new((u - self.cx) * d / self.fx, -(v - self.cy) * d / self.fy, -d)
    }

    /// Continuous pixel coordinates and positive depth (meters) of a camera-frame
    /// point, or `None` when the point is not in front of the camera.
    pub fn project(&self, p: &Vector3<f64>) -> Option<(f64, f64, f64)> {
        let d = -p.z;
        if d <= 0.0 {
            return None;
        }
        Some((self.cx + self.fx * p.x / d, self.cy - self.fy * p.y / d, d))
    }
}

/// Rigid transform mapping points from a local frame into its parent frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose {
    pub rotation: UnitQuaternion<f64>,
    pub translation: Vector3<f64>,
}

impl Default for Pose {
    fn default() -> Self {
        Pose::identity()
    }
}

impl Pose {
    pub fn identity() -> Self {
        Pose {
            rotation: UnitQuaternion::identity(),
            translation: Vector3::zeros(),
        }
    }

    /// Builds a pose from raw quaternion components, rejecting non-unit input.
    pub fn from_components(w: f64, x: f64, y: f64, z: f64, translation: [f64; 3]) -> Result<Self, ModelError> {
        let q = Quaternion::new(w, x, y, z);
        let norm = q.norm();
        if (norm - 1.0).abs() > UNIT_TOLERANCE {
            return Err(ModelError::NonUnitQuaternion(norm));
        }
        Ok(Pose {
            rotation: UnitQuaternion::new_unchecked(q),
            translation: Vector3::from(translation),
        })
    }

    pub fn from_parts(rotation: UnitQuaternion<f64>, translation: Vector3<f64>) -> Self {
        Pose { rotation, translation }
    }

    pub fn from_euler_yxz(angles: EulerYxz, translation: Vector3<f64>) -> Self {
        Pose {
            rotation: euler_yxz_to_quat(angles),
            translation,
        }
    }

    /// `(w, x, y, z)`.
    pub fn quaternion_wxyz(&self) -> [f64; 4] {
        let q = self.rotation.quaternion();
        [q.w, q.i, q.j, q.k]
    }

    pub fn transform_point(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.rotation * p + self.translation
    }

    pub fn transform_vector(&self, v: &Vector3<f64>) -> Vector3<f64> {
        self.rotation * v
    }

    /// `self ∘ other`: apply `other` first, then `self`.
    pub fn compose(&self, other: &Pose) -> Pose {
        Pose {
            rotation: self.rotation * other.rotation,
            translation: self.rotation * other.translation + self.translation,
        }
    }

    pub fn inverse(&self) -> Pose {
        let rotation = self.rotation.inverse();
        Pose {
            rotation,
            translation: -(rotation * self.translation),
        }
    }

    pub fn to_homogeneous(&self) -> Matrix4<f64> {
        let mut m = Matrix4::identity();
        m.fixed_view_mut::<3, 3>(0, 0)
            .copy_from(self.rotation.to_rotation_matrix().matrix());
        m.fixed_view_mut::<3, 1>(0, 3).copy_from(&self.translation);
        m
    }
}

/// Yaw (about y), pitch (about x), roll (about z), composed as `Ry·Rx·Rz`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct EulerYxz {
    pub yaw: f64,
    pub pitch: f64,
    pub roll: f64,
}

impl EulerYxz {
    pub fn new(yaw: f64, pitch: f64, roll: f64) -> Self {
        EulerYxz { yaw, pitch, roll }
    }
}

pub fn euler_yxz_to_quat(angles: EulerYxz) -> UnitQuaternion<f64> {
    let yaw = UnitQuaternion::from_axis_angle(&Vector3::y_axis(), angles.yaw);
    let pitch = UnitQuaternion::from_axis_angle(&Vector3::x_axis(), angles.pitch);
    let roll = UnitQuaternion::from_axis_angle(&Vector3::z_axis(), angles.roll);
    yaw * pitch * roll
}

/// Decomposes a rotation into Y-X-Z angles. At pitch = ±π/2 roll is pinned to
/// zero and the whole in-plane angle is reported as yaw.
pub fn quat_to_euler_yxz(rotation: &UnitQuaternion<f64>) -> EulerYxz {
    let r: Matrix3<f64> = *rotation.to_rotation_matrix().matrix();
    // R = Ry·Rx·Rz:
    //   r01 = −cy·sr + sy·sp·cr   r02 = sy·cp
    //   r10 = cp·sr  r11 = cp·cr  r12 = −sp
    //   r22 = cy·cp
    let cos_pitch = r[(1, 0)].hypot(r[(1, 1)]);
    let pitch = (-r[(1, 2)]).atan2(cos_pitch);
    if cos_pitch > 1e-12 {
        EulerYxz {
            yaw: r[(0, 2)].atan2(r[(2, 2)]),
            pitch,
            roll: r[(1, 0)].atan2(r[(1, 1)]),
        }
    } else {
        // sp = ±1: row 0 becomes [cos(y ∓ r), sin(y ∓ r)·±1, 0]
        let yaw = if r[(1, 2)] < 0.0 {
            r[(0, 1)].atan2(r[(0, 0)])
        } else {
            (-r[(0, 1)]).atan2(r[(0, 0)])
        };
        EulerYxz { yaw, pitch, roll: 0.0 }
    }
}

/// Plane `normal · p = distance` with an upward-facing unit normal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FloorPlane {
    pub normal: Vector3<f64>,
    pub distance: f64,
}

impl FloorPlane {
    pub fn new(normal: Vector3<f64>, distance: f64) -> Result<Self, ModelError> {
        let plane = FloorPlane { normal, distance };
        plane.validate()?;
        Ok(plane)
    }

    /// World ground plane `y = 0`.
    pub fn ground() -> Self {
        FloorPlane {
            normal: Vector3::y(),
            distance: 0.0,
        }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if (self.normal.norm() - 1.0).abs() > UNIT_TOLERANCE {
            return Err(ModelError::InvalidPlane(format!(
                "normal length {}",
                self.normal.norm()
            )));
        }
        if self.normal.y <= 0.0 {
            return Err(ModelError::InvalidPlane("normal does not face up".into()));
        }
        Ok(())
    }

    pub fn signed_distance(&self, p: &Vector3<f64>) -> f64 {
        self.normal.dot(p) - self.distance
    }
}

/// One capture instant: a color/depth pair with the calibration needed to
/// relate them.
#[derive(Debug, Clone, PartialEq)]
pub struct RgbdFrame {
    pub frame_id: u32,
    pub timestamp_micros: u64,
    pub color: ColorImage,
    pub depth: DepthImage,
    pub depth_intrinsics: CameraIntrinsics,
    pub color_intrinsics: CameraIntrinsics,
    /// Maps depth-camera coordinates into color-camera coordinates.
    pub depth_to_color: Pose,
}

/// Checks every frame invariant and hands the frame back untouched.
pub fn validate_frame(frame: RgbdFrame) -> Result<RgbdFrame, ModelError> {
    frame.depth_intrinsics.validate()?;
    frame.color_intrinsics.validate()?;
    frame.depth.validate()?;
    frame.color.validate()?;
    let di = &frame.depth_intrinsics;
    if (frame.depth.width, frame.depth.height) != (di.width, di.height) {
        return Err(ModelError::DimensionMismatch(format!(
            "depth image {}x{} vs intrinsics {}x{}",
            frame.depth.width, frame.depth.height, di.width, di.height
        )));
    }
    let ci = &frame.color_intrinsics;
    if (frame.color.width, frame.color.height) != (ci.width, ci.height) {
        return Err(ModelError::DimensionMismatch(format!(
            "color image {}x{} vs intrinsics {}x{}",
            frame.color.width, frame.color.height, ci.width, ci.height
        )));
    }
    let norm = frame.depth_to_color.rotation.quaternion().norm();
    if (norm - 1.0).abs() > UNIT_TOLERANCE {
        return Err(ModelError::NonUnitQuaternion(norm));
    }
    Ok(frame)
}

/// Per-stream guard for the strictly increasing frame id invariant.
#[derive(Debug, Default, Clone)]
pub struct FrameSequence {
    last: Option<u32>,
}

impl FrameSequence {
    pub fn accept(&mut self, frame_id: u32) -> Result<(), ModelError> {
        if let Some(last) = self.last {
            if frame_id <= last {
                return Err(ModelError::NonMonotonicFrameId { last, got: frame_id });
            }
        }
        self.last = Some(frame_id);
        Ok(())
    }
}
