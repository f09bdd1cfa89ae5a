//! One small rectangle per depth pixel.

use crate::model::{CameraIntrinsics, ColorImage, DepthImage, Pose};
use nalgebra::Vector3;

pub const DEFAULT_ENLARGEMENT: f64 = 1.2;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quad {
    pub center: Vector3<f64>,
    pub normal: Vector3<f64>,
    pub half_width: f64,
    pub half_height: f64,
    pub color: [u8; 3],
}

impl Quad {
    /// In-plane `(right, up)` unit axes. Up is world +y projected onto the
    /// quad plane, or world +z when the normal is vertical; right is
    /// `up × normal`.
    pub fn axes(&self) -> (Vector3<f64>, Vector3<f64>) {
        let n = self.normal;
        let project = |a: Vector3<f64>| a - n * n.dot(&a);
        let mut up = project(Vector3::y());
        if up.norm() < 1e-9 {
            up = project(Vector3::z());
        }
        let up = up.normalize();
        (up.cross(&n), up)
    }

    /// Corners in winding order: bottom-left, bottom-right, top-right, top-left.
    pub fn corners(&self) -> [Vector3<f64>; 4] {
        let (right, up) = self.axes();
        let r = right * self.half_width;
        let u = up * self.half_height;
        let c = self.center;
        [c - r - u, c + r - u, c + r + u, c - r + u]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuadCloud {
    pub quads: Vec<Quad>,
    /// Placement of the capturing camera in the world.
    pub source_pose: Pose,
}

/// Every valid pixel of a registered depth image becomes a quad whose
/// footprint matches the pixel at its depth, scaled by `enlargement`, facing
/// the capturing camera. `color` may have any resolution; it is sampled by
/// nearest neighbor at each depth pixel.
pub fn build_quads(
    depth: &DepthImage,
    color: &ColorImage,
    intrinsics: &CameraIntrinsics,
    source_pose: &Pose,
    enlargement: f64,
) -> QuadCloud {
    let origin = source_pose.translation;
    let sx = color.width as f64 / depth.width as f64;
    let sy = color.height as f64 / depth.height as f64;
    let mut quads = Vec::with_capacity(depth.valid_count());
    for v in 0..depth.height {
        for u in 0..depth.width {
            let d = depth.get(u, v);
            if d == 0 {
                continue;
            }
            let meters = d as f64 / 1000.0;
            let center = source_pose.transform_point(&intrinsics.unproject(u as f64, v as f64, d));
            let cu = (((u as f64 + 0.5) * sx) as u32).min(color.width - 1);
            let cv = (((v as f64 + 0.5) * sy) as u32).min(color.height - 1);
            quads.push(Quad {
                center,
                normal: (origin - center).normalize(),
                half_width: enlargement * meters / (2.0 * intrinsics.fx),
                half_height: enlargement * meters / (2.0 * intrinsics.fy),
                color: color.get(cu, cv),
            });
        }
    }
    QuadCloud { quads, source_pose: *source_pose }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Orientation {
    /// Normal points straight at the viewer.
    #[default]
    Billboard,
    /// Normal turns about world +y only, keeping its vertical component.
    YawOnly,
}

/// Rotates every quad toward `viewer`. Centers, sizes and colors are kept.
pub fn orient_quads(cloud: &QuadCloud, viewer: &Vector3<f64>) -> QuadCloud {
    orient_quads_with(cloud, viewer, Orientation::Billboard)
}

pub fn orient_quads_with(cloud: &QuadCloud, viewer: &Vector3<f64>, mode: Orientation) -> QuadCloud {
    let quads = cloud
        .quads
        .iter()
        .map(|q| {
            let to_viewer = viewer - q.center;
            let normal = match mode {
                Orientation::Billboard => to_viewer.try_normalize(0.0),
                Orientation::YawOnly => {
                    let horizontal = Vector3::new(to_viewer.x, 0.0, to_viewer.z);
                    let old_h = q.normal.x.hypot(q.normal.z);
                    horizontal
                        .try_normalize(0.0)
                        .map(|h| (h * old_h + Vector3::y() * q.normal.y).normalize())
                }
            };
            Quad { normal: normal.unwrap_or(q.normal), ..*q }
        })
        .collect();
    QuadCloud { quads, source_pose: cloud.source_pose }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::EulerYxz;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn angle(a: &Vector3<f64>, b: &Vector3<f64>) -> f64 {
        a.cross(b).norm().atan2(a.dot(b))
    }

    fn pinhole(fx: f64) -> CameraIntrinsics {
        CameraIntrinsics { fx, fy: fx, cx: 2.0, cy: 2.0, width: 5, height: 5 }
    }

    fn single(d: u16) -> DepthImage {
        let mut img = DepthImage::zeros(5, 5);
        img.data[12] = d;
        img
    }

    #[test]
    fn single_center_pixel() {
        let color = ColorImage::filled(5, 5, [9, 8, 7]);
        let cloud = build_quads(&single(1000), &color, &pinhole(500.0), &Pose::identity(), DEFAULT_ENLARGEMENT);
        assert_eq!(cloud.quads.len(), 1);
        let q = cloud.quads[0];
        assert_eq!(q.center, Vector3::new(0.0, 0.0, -1.0));
        assert!((q.half_width - 1.2 * 0.001).abs() < 1e-15);
        assert!((q.half_height - 1.2 * 0.001).abs() < 1e-15);
        assert_eq!(q.normal, Vector3::new(0.0, 0.0, 1.0));
        assert_eq!(q.color, [9, 8, 7]);
    }

    #[test]
    fn empty_depth_gives_empty_cloud() {
        let cloud = build_quads(
            &DepthImage::zeros(5, 5),
            &ColorImage::filled(5, 5, [0; 3]),
            &pinhole(500.0),
            &Pose::identity(),
            1.2,
        );
        assert!(cloud.quads.is_empty());
    }

    #[test]
    fn color_is_sampled_at_depth_resolution() {
        let mut color = ColorImage::filled(10, 10, [0; 3]);
        color.set(5, 5, [200, 100, 50]);
        let cloud = build_quads(&single(800), &color, &pinhole(500.0), &Pose::identity(), 1.0);
        assert_eq!(cloud.quads[0].color, [200, 100, 50]);
    }

    #[test]
    fn normals_face_source_camera() {
        let pose = Pose::from_euler_yxz(EulerYxz::new(0.8, -0.1, 0.0), Vector3::new(1.0, 1.5, 2.0));
        let depth = DepthImage::new(5, 5, (0..25).map(|i| 900 + 10 * i).collect()).unwrap();
        let cloud = build_quads(&depth, &ColorImage::filled(5, 5, [1; 3]), &pinhole(4.0), &pose, 1.2);
        assert_eq!(cloud.quads.len(), 25);
        for q in &cloud.quads {
            assert!((q.normal.norm() - 1.0).abs() < 1e-12);
            assert!(angle(&q.normal, &(pose.translation - q.center)) < 1e-9);
        }
    }

    #[test]
    fn axes_are_orthonormal_and_upright() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..500 {
            let n = Vector3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
                .normalize();
            let q = Quad { center: Vector3::zeros(), normal: n, half_width: 1.0, half_height: 1.0, color: [0; 3] };
            let (r, u) = q.axes();
            assert!((r.norm() - 1.0).abs() < 1e-12 && (u.norm() - 1.0).abs() < 1e-12);
            assert!(r.dot(&u).abs() < 1e-12 && r.dot(&n).abs() < 1e-12 && u.dot(&n).abs() < 1e-12);
            assert!(u.y >= -1e-12);
            assert!((r.cross(&u) - n).norm() < 1e-12);
        }
        let top = Quad { center: Vector3::zeros(), normal: Vector3::y(), half_width: 1.0, half_height: 1.0, color: [0; 3] };
        let (r, u) = top.axes();
        assert_eq!((r, u), (-Vector3::x(), Vector3::z()));
    }

    fn random_cloud(rng: &mut ChaCha8Rng) -> QuadCloud {
        let quads = (0..200)
            .map(|_| Quad {
                center: Vector3::new(rng.random_range(-2.0..2.0), rng.random_range(0.0..2.0), rng.random_range(-4.0..-1.0)),
                normal: Vector3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), 1.0).normalize(),
                half_width: rng.random_range(0.001..0.01),
                half_height: rng.random_range(0.001..0.01),
                color: [rng.random(), rng.random(), rng.random()],
            })
            .collect();
        QuadCloud { quads, source_pose: Pose::identity() }
    }

    #[test]
    fn orientation_matches_per_quad_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..20 {
            let cloud = random_cloud(&mut rng);
            let viewer = Vector3::new(rng.random_range(-5.0..5.0), rng.random_range(0.0..3.0), rng.random_range(0.0..5.0));
            let out = orient_quads(&cloud, &viewer);
            assert_eq!(out.quads.len(), cloud.quads.len());
            for (a, b) in cloud.quads.iter().zip(&out.quads) {
                assert_eq!((a.center, a.half_width, a.half_height, a.color), (b.center, b.half_width, b.half_height, b.color));
                assert!((b.normal.norm() - 1.0).abs() < 1e-12);
                assert!(angle(&b.normal, &(viewer - b.center)) < 1e-9);
            }
        }
    }

    #[test]
    fn viewer_at_source_keeps_normals() {
        let depth = DepthImage::new(5, 5, (0..25).map(|i| 1000 + i).collect()).unwrap();
        let pose = Pose::from_euler_yxz(EulerYxz::new(0.3, 0.0, 0.0), Vector3::new(0.5, 1.0, 0.0));
        let cloud = build_quads(&depth, &ColorImage::filled(5, 5, [0; 3]), &pinhole(4.0), &pose, 1.2);
        let out = orient_quads(&cloud, &pose.translation);
        for (a, b) in cloud.quads.iter().zip(&out.quads) {
            assert!((a.normal - b.normal).norm() < 1e-12);
        }
    }

    #[test]
    fn yaw_only_keeps_vertical_component() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let cloud = random_cloud(&mut rng);
        let viewer = Vector3::new(4.0, 1.0, -2.0);
        let out = orient_quads_with(&cloud, &viewer, Orientation::YawOnly);
        for (a, b) in cloud.quads.iter().zip(&out.quads) {
            assert!((a.normal.y - b.normal.y).abs() < 1e-12);
            let h = Vector3::new(b.normal.x, 0.0, b.normal.z);
            let to = viewer - b.center;
            assert!(angle(&h, &Vector3::new(to.x, 0.0, to.z)) < 1e-9);
        }
    }
}
