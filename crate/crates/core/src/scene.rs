//! Analytic synthetic scenes standing in for camera drivers.
//!
//! Scenes are lists of primitives (capsules, rectangles, the ground plane)
//! rendered by exact ray casting. The default scene is a capsule figure doing
//! squats on a checkered floor, watched by one or two depth+color rigs.

use crate::geometry::CalibrationEntry;
use crate::model::{CameraIntrinsics, ColorImage, DepthImage, EulerYxz, FloorPlane, Pose, RgbdFrame};
use crate::viewer::Mask;
use nalgebra::Vector3;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_PI_2, PI};

pub const FRAME_INTERVAL_MICROS: u64 = 33_333;
/// Rays travelling farther than this return nothing.
pub const MAX_RANGE_M: f64 = 6.0;
const HORIZONTAL_FOV: f64 = FRAC_PI_2;
pub const CAMERA_HEIGHT_M: f64 = 1.0;
/// Color camera sits this far to the right of the depth camera.
pub const COLOR_BASELINE_M: f64 = 0.025;
const SQUAT_PERIOD_FRAMES: f64 = 60.0;
const BACKGROUND: [u8; 3] = [30, 30, 40];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    /// Color 1280x720, depth 640x360.
    #[default]
    Default,
    /// Color 720x360, depth 320x180.
    Study,
}

impl Preset {
    pub fn color_size(self) -> (u32, u32) {
        match self {
            Preset::Default => (1280, 720),
            Preset::Study => (720, 360),
        }
    }

    pub fn depth_size(self) -> (u32, u32) {
        match self {
            Preset::Default => (640, 360),
            Preset::Study => (320, 180),
        }
    }

    pub fn color_intrinsics(self) -> CameraIntrinsics {
        let (w, h) = self.color_size();
        CameraIntrinsics::from_horizontal_fov(w, h, HORIZONTAL_FOV)
    }

    pub fn depth_intrinsics(self) -> CameraIntrinsics {
        let (w, h) = self.depth_size();
        CameraIntrinsics::from_horizontal_fov(w, h, HORIZONTAL_FOV)
    }
}

impl std::str::FromStr for Preset {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "default" => Ok(Preset::Default),
            "study" => Ok(Preset::Study),
            _ => Err(format!("unknown preset {s:?} (expected default or study)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ray {
    pub origin: Vector3<f64>,
    /// Unit length.
    pub direction: Vector3<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Shape {
    /// Segment `a`–`b` swept by a sphere of `radius`; `a == b` is a sphere.
    Capsule { a: Vector3<f64>, b: Vector3<f64>, radius: f64 },
    /// Bounded rectangle; `right` and `up` are orthogonal half-extent vectors.
    Rect { center: Vector3<f64>, right: Vector3<f64>, up: Vector3<f64> },
    /// The plane `y = 0`, seen from above only.
    Ground,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Material {
    Solid([u8; 3]),
    /// Two-tone checkerboard on the xz plane with the given square size.
    Checker { a: [u8; 3], b: [u8; 3], square: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Primitive {
    pub shape: Shape,
    pub material: Material,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hit {
    pub t: f64,
    pub point: Vector3<f64>,
    pub normal: Vector3<f64>,
    pub primitive: usize,
}

/// Distance along a unit ray to the first intersection with a capsule.
pub fn intersect_capsule(ray: &Ray, a: &Vector3<f64>, b: &Vector3<f64>, radius: f64) -> Option<f64> {
    let (ro, rd) = (ray.origin, ray.direction);
    let ba = b - a;
    let oa = ro - a;
    let baba = ba.dot(&ba);
    let r2 = radius * radius;
    let sphere = |center: Vector3<f64>| {
        let oc = ro - center;
        let bq = rd.dot(&oc);
        let c = oc.dot(&oc) - r2;
        let h = bq * bq - c;
        (h >= 0.0).then(|| -bq - h.sqrt()).filter(|t| *t > 0.0)
    };
    if baba < 1e-18 {
        return sphere(*a);
    }
    let bard = ba.dot(&rd);
    let baoa = ba.dot(&oa);
    let rdoa = rd.dot(&oa);
    let oaoa = oa.dot(&oa);
    let qa = baba - bard * bard;
    let qb = baba * rdoa - baoa * bard;
    let qc = baba * oaoa - baoa * baoa - r2 * baba;
    let mut axial = baoa;
    if qa > 1e-18 {
        let h = qb * qb - qa * qc;
        if h < 0.0 {
            return None;
        }
        let t = (-qb - h.sqrt()) / qa;
        axial = baoa + t * bard;
        if axial > 0.0 && axial < baba {
            return (t > 0.0).then_some(t);
        }
    }
    let cap = if axial <= 0.0 { *a } else { *b };
    sphere(cap)
}

fn closest_on_segment(p: &Vector3<f64>, a: &Vector3<f64>, b: &Vector3<f64>) -> Vector3<f64> {
    let ba = b - a;
    let len2 = ba.dot(&ba);
    if len2 < 1e-18 {
        return *a;
    }
    a + ba * ((p - a).dot(&ba) / len2).clamp(0.0, 1.0)
}

impl Shape {
    pub fn intersect(&self, ray: &Ray) -> Option<(f64, Vector3<f64>)> {
        match *self {
            Shape::Capsule { a, b, radius } => intersect_capsule(ray, &a, &b, radius).map(|t| {
                let p = ray.origin + ray.direction * t;
                (t, (p - closest_on_segment(&p, &a, &b)) / radius)
            }),
            Shape::Rect { center, right, up } => {
                let n = right.cross(&up).normalize();
                let denom = n.dot(&ray.direction);
                if denom.abs() < 1e-12 {
                    return None;
                }
                let t = n.dot(&(center - ray.origin)) / denom;
                if t <= 0.0 {
                    return None;
                }
                let local = ray.origin + ray.direction * t - center;
                let inside = local.dot(&right).abs() <= right.norm_squared() && local.dot(&up).abs() <= up.norm_squared();
                inside.then(|| (t, if denom < 0.0 { n } else { -n }))
            }
            Shape::Ground => {
                if ray.origin.y <= 0.0 || ray.direction.y >= 0.0 {
                    return None;
                }
                Some((-ray.origin.y / ray.direction.y, Vector3::y()))
            }
        }
    }
}

/// Sphere enclosing `primitives[first..]`; rays missing it skip them.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bound {
    pub center: Vector3<f64>,
    pub radius: f64,
    pub first: usize,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Scene {
    pub primitives: Vec<Primitive>,
    pub bound: Option<Bound>,
}

impl Scene {
    pub fn new(primitives: Vec<Primitive>) -> Self {
        Scene { primitives, bound: None }
    }

    pub fn trace(&self, ray: &Ray) -> Option<Hit> {
        let mut best: Option<Hit> = None;
        let end = match self.bound {
            Some(b) if intersect_capsule(ray, &b.center, &b.center, b.radius).is_none()
                && (ray.origin - b.center).norm() > b.radius =>
            {
                b.first
            }
            _ => self.primitives.len(),
        };
        for (i, prim) in self.primitives[..end].iter().enumerate() {
            if let Some((t, normal)) = prim.shape.intersect(ray) {
                if t <= MAX_RANGE_M && best.is_none_or(|b| t < b.t) {
                    best = Some(Hit { t, point: ray.origin + ray.direction * t, normal, primitive: i });
                }
            }
        }
        best
    }

    fn shade(&self, hit: &Hit) -> [u8; 3] {
        let base = match self.primitives[hit.primitive].material {
            Material::Solid(c) => c,
            Material::Checker { a, b, square } => {
                let i = (hit.point.x / square).floor() as i64 + (hit.point.z / square).floor() as i64;
                if i.rem_euclid(2) == 0 {
                    a
                } else {
                    b
                }
            }
        };
        let light = Vector3::new(0.3, 0.8, 0.5).normalize();
        let k = 0.35 + 0.65 * hit.normal.dot(&light).max(0.0);
        base.map(|c| (c as f64 * k).round() as u8)
    }

    fn each_pixel(&self, k: &CameraIntrinsics, pose: &Pose, mut f: impl FnMut(u32, u32, f64, Option<Hit>)) {
        for v in 0..k.height {
            for u in 0..k.width {
                let dir_cam = Vector3::new((u as f64 - k.cx) / k.fx, -(v as f64 - k.cy) / k.fy, -1.0);
                let ray = Ray { origin: pose.translation, direction: pose.transform_vector(&dir_cam).normalize() };
                // Depth along the optical axis per unit of ray length.
                let axial = 1.0 / dir_cam.norm();
                f(u, v, axial, self.trace(&ray));
            }
        }
    }

    /// Depth in millimeters along the optical axis; 0 where nothing is hit.
    pub fn render_depth(&self, k: &CameraIntrinsics, pose: &Pose) -> DepthImage {
        let mut img = DepthImage::zeros(k.width, k.height);
        self.each_pixel(k, pose, |u, v, axial, hit| {
            if let Some(h) = hit {
                let mm = (h.t * axial * 1000.0).round();
                if mm >= 1.0 && mm <= u16::MAX as f64 {
                    img.data[(v * k.width + u) as usize] = mm as u16;
                }
            }
        });
        img
    }

    pub fn render_color(&self, k: &CameraIntrinsics, pose: &Pose) -> ColorImage {
        let mut img = ColorImage::filled(k.width, k.height, BACKGROUND);
        self.each_pixel(k, pose, |u, v, _, hit| {
            if let Some(h) = hit {
                img.set(u, v, self.shade(&h));
            }
        });
        img
    }

    pub fn render_mask(&self, k: &CameraIntrinsics, pose: &Pose) -> Mask {
        let mut mask = Mask::empty(k.width, k.height);
        self.each_pixel(k, pose, |u, v, _, hit| {
            mask.data[(v * k.width + u) as usize] = hit.is_some();
        });
        mask
    }
}

/// Joint positions of the squatting figure standing at `base` facing +z.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FigurePose {
    /// Squat depth in [0, 1].
    pub squat: f64,
    pub base: Vector3<f64>,
}

impl FigurePose {
    pub fn at_frame(frame_index: u32, base: Vector3<f64>) -> Self {
        let phase = 2.0 * PI * frame_index as f64 / SQUAT_PERIOD_FRAMES;
        FigurePose { squat: (1.0 - phase.cos()) / 2.0, base }
    }

    pub fn primitives(&self) -> Vec<Primitive> {
        const SHIRT: [u8; 3] = [40, 90, 200];
        const PANTS: [u8; 3] = [55, 55, 70];
        const SKIN: [u8; 3] = [224, 172, 105];
        const SHOES: [u8; 3] = [200, 60, 40];
        let s = self.squat;
        let o = self.base;
        let at = |x: f64, y: f64, z: f64| o + Vector3::new(x, y, z);
        let hip_y = 0.95 - 0.3 * s;
        let hip_z = -0.15 * s;
        let chest = at(0.0, hip_y + 0.5, hip_z + 0.12 * s);
        let mut out = Vec::new();
        let mut capsule = |a: Vector3<f64>, b: Vector3<f64>, radius: f64, color: [u8; 3]| {
            out.push(Primitive { shape: Shape::Capsule { a, b, radius }, material: Material::Solid(color) });
        };
        capsule(at(0.0, hip_y, hip_z), chest, 0.16, SHIRT);
        capsule(chest + Vector3::new(0.0, 0.27, 0.0), chest + Vector3::new(0.0, 0.27, 0.0), 0.11, SKIN);
        for side in [-1.0, 1.0] {
            let ankle = at(0.12 * side, 0.09, 0.0);
            let hip = at(0.10 * side, hip_y, hip_z);
            let knee = knee_position(&ankle, &hip, 0.45, 0.45);
            capsule(hip, knee, 0.075, PANTS);
            capsule(knee, ankle, 0.06, PANTS);
            capsule(ankle, ankle + Vector3::new(0.0, -0.02, 0.17), 0.05, SHOES);
            let shoulder = chest + Vector3::new(0.22 * side, 0.0, 0.0);
            let raise = 0.3 + 1.2 * s;
            let hand = shoulder + Vector3::new(0.03 * side, -raise.cos(), raise.sin()) * 0.6;
            capsule(shoulder, hand, 0.05, SKIN);
        }
        out
    }
}

/// Knee in the sagittal plane, bending toward +z.
fn knee_position(ankle: &Vector3<f64>, hip: &Vector3<f64>, thigh: f64, shin: f64) -> Vector3<f64> {
    let axis = hip - ankle;
    let d = axis.norm().min(thigh + shin - 1e-9);
    let u = axis.normalize();
    let a = (shin * shin - thigh * thigh + d * d) / (2.0 * d);
    let h = (shin * shin - a * a).max(0.0).sqrt();
    let forward = Vector3::z() - u * u.z;
    let w = forward.try_normalize(1e-12).unwrap_or(Vector3::z());
    ankle + u * a + w * h
}

/// One depth+color rig. `pose` places the depth camera in the world.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rig {
    pub pose: Pose,
    pub depth_intrinsics: CameraIntrinsics,
    pub color_intrinsics: CameraIntrinsics,
    pub depth_to_color: Pose,
}

impl Rig {
    pub fn new(preset: Preset, pose: Pose) -> Self {
        Rig {
            pose,
            depth_intrinsics: preset.depth_intrinsics(),
            color_intrinsics: preset.color_intrinsics(),
            depth_to_color: Pose::from_parts(nalgebra::UnitQuaternion::identity(), Vector3::new(-COLOR_BASELINE_M, 0.0, 0.0)),
        }
    }

    pub fn color_pose(&self) -> Pose {
        self.pose.compose(&self.depth_to_color.inverse())
    }

    /// World floor `y = 0` expressed in color-camera coordinates.
    pub fn floor_in_color_frame(&self) -> FloorPlane {
        let inv = self.color_pose().inverse();
        let n = inv.transform_vector(&Vector3::y());
        FloorPlane { normal: n, distance: n.dot(&inv.translation) }
    }

    pub fn capture(&self, scene: &Scene, frame_id: u32) -> RgbdFrame {
        RgbdFrame {
            frame_id,
            timestamp_micros: frame_id as u64 * FRAME_INTERVAL_MICROS,
            color: scene.render_color(&self.color_intrinsics, &self.color_pose()),
            depth: scene.render_depth(&self.depth_intrinsics, &self.pose),
            depth_intrinsics: self.depth_intrinsics,
            color_intrinsics: self.color_intrinsics,
            depth_to_color: self.depth_to_color,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SceneConfig {
    pub preset: Preset,
    pub cameras: u8,
    /// Standard deviation of additive depth noise in millimeters.
    pub depth_noise_mm: f64,
    pub seed: u64,
}

impl Default for SceneConfig {
    fn default() -> Self {
        SceneConfig { preset: Preset::Default, cameras: 1, depth_noise_mm: 0.0, seed: 0 }
    }
}

/// Figure position in the world.
pub const FIGURE_BASE: Vector3<f64> = Vector3::new(0.0, 0.0, -2.5);
const SIDE_DISTANCE_M: f64 = 2.5;

/// The squat scene with its camera rigs. The first rig faces the figure; the
/// second stands to the figure's right, turned 90 degrees.
#[derive(Debug, Clone)]
pub struct SyntheticCapture {
    pub config: SceneConfig,
    pub rigs: Vec<Rig>,
}

impl SyntheticCapture {
    pub fn new(config: SceneConfig) -> Result<Self, String> {
        if !(1..=2).contains(&config.cameras) {
            return Err(format!("cameras must be 1 or 2, got {}", config.cameras));
        }
        if config.depth_noise_mm.is_nan() || config.depth_noise_mm < 0.0 {
            return Err("depth noise must be non-negative".into());
        }
        let front = Pose::from_parts(nalgebra::UnitQuaternion::identity(), Vector3::new(0.0, CAMERA_HEIGHT_M, 0.0));
        let mut rigs = vec![Rig::new(config.preset, front)];
        if config.cameras == 2 {
            // The figure faces +z, so its right hand side is -x.
            let side = Pose::from_euler_yxz(
                EulerYxz::new(-FRAC_PI_2, 0.0, 0.0),
                FIGURE_BASE + Vector3::new(-SIDE_DISTANCE_M, CAMERA_HEIGHT_M, 0.0),
            );
            rigs.push(Rig::new(config.preset, side));
        }
        Ok(SyntheticCapture { config, rigs })
    }

    pub fn scene_at(frame_index: u32) -> Scene {
        let mut primitives = vec![Primitive {
            shape: Shape::Ground,
            material: Material::Checker { a: [150, 150, 140], b: [105, 105, 100], square: 0.5 },
        }];
        primitives.extend(FigurePose::at_frame(frame_index, FIGURE_BASE).primitives());
        let bound = Bound { center: FIGURE_BASE + Vector3::new(0.0, 0.9, 0.1), radius: 1.2, first: 1 };
        Scene { primitives, bound: Some(bound) }
    }

    pub fn frame(&self, camera: usize, frame_index: u32) -> RgbdFrame {
        let mut frame = self.rigs[camera].capture(&Self::scene_at(frame_index), frame_index);
        if self.config.depth_noise_mm > 0.0 {
            let seed = self.config.seed ^ ((camera as u64) << 32 | frame_index as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let noise = Normal::new(0.0, self.config.depth_noise_mm).expect("validated");
            for d in frame.depth.data.iter_mut().filter(|d| **d != 0) {
                *d = (*d as f64 + noise.sample(&mut rng)).round().clamp(1.0, u16::MAX as f64) as u16;
            }
        }
        frame
    }

    /// Pose of every color camera relative to the first one.
    pub fn calibration(&self) -> Vec<CalibrationEntry> {
        let first = self.rigs[0].color_pose().inverse();
        self.rigs
            .iter()
            .enumerate()
            .map(|(i, rig)| CalibrationEntry {
                transmitter_id: i as u32 + 1,
                relative_pose: if i == 0 { Pose::identity() } else { first.compose(&rig.color_pose()) },
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{extract_floor, register_depth_to_color, registered_intrinsics, RansacParams};
    use crate::model::quat_to_euler_yxz;
    use rand::Rng;

    /// First parameter where the ray is within `radius` of the segment,
    /// found by marching then bisecting on the distance function.
    fn march_capsule(ray: &Ray, a: &Vector3<f64>, b: &Vector3<f64>, radius: f64) -> Option<f64> {
        let inside = |t: f64| {
            let p = ray.origin + ray.direction * t;
            (p - closest_on_segment(&p, a, b)).norm() <= radius
        };
        let step = 1e-3;
        let mut t = 0.0;
        while t < 20.0 {
            if inside(t + step) {
                let (mut lo, mut hi) = (t, t + step);
                for _ in 0..60 {
                    let mid = (lo + hi) / 2.0;
                    if inside(mid) {
                        hi = mid;
                    } else {
                        lo = mid;
                    }
                }
                return Some(hi);
            }
            t += step;
        }
        None
    }

    #[test]
    fn capsule_intersection_matches_marching_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let mut hits = 0;
        for _ in 0..400 {
            let a = Vector3::new(rng.random_range(-0.5..0.5), rng.random_range(-0.5..0.5), -3.0);
            let b = if rng.random_bool(0.2) { a } else { a + Vector3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)) };
            let radius = rng.random_range(0.05..0.4);
            let ray = Ray {
                origin: Vector3::zeros(),
                direction: Vector3::new(rng.random_range(-0.2..0.2), rng.random_range(-0.2..0.2), -1.0).normalize(),
            };
            let fast = intersect_capsule(&ray, &a, &b, radius);
            let slow = march_capsule(&ray, &a, &b, radius);
            match (fast, slow) {
                (Some(f), Some(s)) => {
                    assert!((f - s).abs() < 1e-6, "{f} vs {s}");
                    hits += 1;
                }
                (None, None) => {}
                // Grazing rays may disagree by the marching step.
                (f, s) => {
                    let t = f.or(s).unwrap();
                    let p = ray.origin + ray.direction * t;
                    assert!(((p - closest_on_segment(&p, &a, &b)).norm() - radius).abs() < 1e-3);
                }
            }
        }
        assert!(hits > 50, "{hits}");
    }

    #[test]
    fn rect_and_ground_hits() {
        let rect = Shape::Rect { center: Vector3::new(0.0, 0.0, -2.0), right: Vector3::new(0.5, 0.0, 0.0), up: Vector3::new(0.0, 0.25, 0.0) };
        let forward = Ray { origin: Vector3::zeros(), direction: -Vector3::z() };
        assert_eq!(rect.intersect(&forward).map(|h| h.0), Some(2.0));
        let miss = Ray { origin: Vector3::new(0.0, 0.3, 0.0), direction: -Vector3::z() };
        assert!(rect.intersect(&miss).is_none());
        let down = Ray { origin: Vector3::new(0.0, 2.0, 0.0), direction: Vector3::new(0.0, -1.0, -1.0).normalize() };
        let (t, n) = Shape::Ground.intersect(&down).unwrap();
        assert!((t - 2.0 * 2f64.sqrt()).abs() < 1e-12);
        assert_eq!(n, Vector3::y());
    }

    #[test]
    fn figure_is_visible_at_frame_zero() {
        let cap = SyntheticCapture::new(SceneConfig { preset: Preset::Study, ..Default::default() }).unwrap();
        let frame = cap.frame(0, 0);
        let k = frame.depth_intrinsics;
        // The torso crosses the optical axis at camera height.
        let d = frame.depth.get(k.cx as u32, k.cy as u32);
        assert!(d > 2000 && d < 2500, "{d}");
        assert!(frame.depth.valid_count() > 0);
        assert_eq!((frame.color.width, frame.color.height), (720, 360));
        assert_eq!(crate::model::validate_frame(frame.clone()).unwrap(), frame);
    }

    #[test]
    fn depth_matches_expected_floor_distance() {
        let cap = SyntheticCapture::new(SceneConfig { preset: Preset::Study, ..Default::default() }).unwrap();
        let frame = cap.frame(0, 0);
        let k = frame.depth_intrinsics;
        // Bottom-left corner ray hits the floor (the figure is central).
        let (u, v) = (0u32, k.height - 1);
        let dir = Vector3::new((u as f64 - k.cx) / k.fx, -(v as f64 - k.cy) / k.fy, -1.0);
        let expected = CAMERA_HEIGHT_M / -dir.y * 1000.0;
        assert!((frame.depth.get(u, v) as f64 - expected).abs() <= 0.5);
    }

    #[test]
    fn scene_floor_is_recovered() {
        for preset in [Preset::Study, Preset::Default] {
            let cap = SyntheticCapture::new(SceneConfig { preset, cameras: 2, ..Default::default() }).unwrap();
            for (i, rig) in cap.rigs.iter().enumerate() {
                let frame = cap.frame(i, 17);
                let registered = register_depth_to_color(&frame);
                let plane = extract_floor(&registered, &registered_intrinsics(&frame), &RansacParams::default()).unwrap();
                let truth = rig.floor_in_color_frame();
                assert!((plane.distance - truth.distance).abs() < 0.01, "{preset:?} {i}: {plane:?} vs {truth:?}");
                assert!(plane.normal.angle(&truth.normal) < 0.02);
            }
        }
    }

    #[test]
    fn two_cameras_calibrate_at_ninety_degrees() {
        let cap = SyntheticCapture::new(SceneConfig { cameras: 2, ..Default::default() }).unwrap();
        let cal = cap.calibration();
        assert_eq!(cal.len(), 2);
        assert_eq!(cal[0].relative_pose, Pose::identity());
        let e = quat_to_euler_yxz(&cal[1].relative_pose.rotation);
        assert!((e.yaw.abs() - FRAC_PI_2).abs() < 1e-12);
        assert!(e.pitch.abs() < 1e-12 && e.roll.abs() < 1e-12);
        // The side camera looks at the figure.
        let side = cap.rigs[1].pose;
        let forward = side.transform_vector(&-Vector3::z());
        let to_figure = (FIGURE_BASE + Vector3::new(0.0, CAMERA_HEIGHT_M, 0.0) - side.translation).normalize();
        assert!((forward - to_figure).norm() < 1e-12);
        assert!(SyntheticCapture::new(SceneConfig { cameras: 3, ..Default::default() }).is_err());
    }

    #[test]
    fn bound_does_not_change_images() {
        let cap = SyntheticCapture::new(SceneConfig { preset: Preset::Study, cameras: 2, ..Default::default() }).unwrap();
        for i in [0, 15, 30] {
            let bounded = SyntheticCapture::scene_at(i);
            let plain = Scene::new(bounded.primitives.clone());
            for rig in &cap.rigs {
                assert_eq!(bounded.render_depth(&rig.depth_intrinsics, &rig.pose), plain.render_depth(&rig.depth_intrinsics, &rig.pose));
                let cp = rig.color_pose();
                assert_eq!(bounded.render_color(&rig.color_intrinsics, &cp), plain.render_color(&rig.color_intrinsics, &cp));
            }
        }
    }

    #[test]
    fn animation_moves_and_repeats() {
        let cap = SyntheticCapture::new(SceneConfig { preset: Preset::Study, ..Default::default() }).unwrap();
        let a = cap.frame(0, 0).depth;
        let b = cap.frame(0, 30).depth;
        let c = cap.frame(0, 60).depth;
        assert_ne!(a, b);
        assert_eq!(a, c);
    }

    #[test]
    fn noise_is_seeded() {
        let cfg = SceneConfig { preset: Preset::Study, depth_noise_mm: 3.0, seed: 4, cameras: 1 };
        let a = SyntheticCapture::new(cfg).unwrap().frame(0, 2).depth;
        let b = SyntheticCapture::new(cfg).unwrap().frame(0, 2).depth;
        let clean = SyntheticCapture::new(SceneConfig { depth_noise_mm: 0.0, ..cfg }).unwrap().frame(0, 2).depth;
        assert_eq!(a, b);
        assert_ne!(a, clean);
    }
}
