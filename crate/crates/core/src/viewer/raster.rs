//! Software splatting of quad clouds into a virtual camera, and the coverage
//! metric used to compare splat settings.

use super::quads::QuadCloud;
use super::ViewerError;
use crate::model::{CameraIntrinsics, ColorImage, DepthImage, Pose};
use nalgebra::Vector3;

/// Quads with any corner closer than this (meters) are skipped.
const NEAR_PLANE: f64 = 0.01;

/// Renders with a z-buffer. Each quad is filled at the constant depth of its
/// center; a pixel belongs to a quad when its center lies inside the
/// projected outline (left and top edges inclusive).
pub fn rasterize(clouds: &[QuadCloud], intrinsics: &CameraIntrinsics, camera_pose: &Pose) -> (ColorImage, DepthImage) {
    let (w, h) = (intrinsics.width, intrinsics.height);
    let mut color = ColorImage::filled(w, h, [0, 0, 0]);
    let mut depth = DepthImage::zeros(w, h);
    let world_to_camera = camera_pose.inverse();
    for cloud in clouds {
        for quad in &cloud.quads {
            let Some((_, _, center_depth)) = intrinsics.project(&world_to_camera.transform_point(&quad.center)) else {
                continue;
            };
            let mut outline = [(0.0, 0.0); 4];
            let mut visible = true;
            for (slot, corner) in outline.iter_mut().zip(quad.corners()) {
                let p = world_to_camera.transform_point(&corner);
                match intrinsics.project(&p) {
                    Some((x, y, d)) if d >= NEAR_PLANE => *slot = (x, y),
                    _ => visible = false,
                }
            }
            if !visible {
                continue;
            }
            let z = (center_depth * 1000.0).round().clamp(1.0, u16::MAX as f64) as u16;
            fill_convex(&outline, w, h, |u, v| {
                let i = (v * w + u) as usize;
                if depth.data[i] == 0 || z < depth.data[i] {
                    depth.data[i] = z;
                    color.set(u, v, quad.color);
                }
            });
        }
    }
    (color, depth)
}

fn fill_convex(outline: &[(f64, f64); 4], width: u32, height: u32, mut plot: impl FnMut(u32, u32)) {
    let ymin = outline.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
    let ymax = outline.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
    let v0 = ymin.ceil().max(0.0);
    let v1 = ymax.ceil().min(height as f64);
    let mut v = v0;
    while v < v1 {
        let mut xl = f64::INFINITY;
        let mut xr = f64::NEG_INFINITY;
        for i in 0..4 {
            let (ax, ay) = outline[i];
            let (bx, by) = outline[(i + 1) % 4];
            if (ay <= v && v < by) || (by <= v && v < ay) {
                let x = ax + (v - ay) * (bx - ax) / (by - ay);
                xl = xl.min(x);
                xr = xr.max(x);
            }
        }
        if xl < xr {
            let u0 = xl.ceil().max(0.0) as u32;
            let u1 = xr.ceil().min(width as f64).max(0.0) as u32;
            for u in u0..u1 {
                plot(u, v as u32);
            }
        }
        v += 1.0;
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mask {
    pub width: u32,
    pub height: u32,
    pub data: Vec<bool>,
}

impl Mask {
    pub fn empty(width: u32, height: u32) -> Self {
        Mask { width, height, data: vec![false; (width * height) as usize] }
    }

    /// Pixels with a valid depth sample.
    pub fn from_depth(depth: &DepthImage) -> Self {
        Mask { width: depth.width, height: depth.height, data: depth.data.iter().map(|&d| d != 0).collect() }
    }

    pub fn count(&self) -> usize {
        self.data.iter().filter(|&&b| b).count()
    }
}

/// Fraction of silhouette pixels that received a fragment. An empty
/// silhouette scores 0.
pub fn coverage_metric(rendered: &DepthImage, silhouette: &Mask) -> Result<f64, ViewerError> {
    if (rendered.width, rendered.height) != (silhouette.width, silhouette.height) {
        return Err(ViewerError::DimensionMismatch(format!(
            "render {}x{} vs silhouette {}x{}",
            rendered.width, rendered.height, silhouette.width, silhouette.height
        )));
    }
    let total = silhouette.count();
    if total == 0 {
        return Ok(0.0);
    }
    let hit = rendered
        .data
        .iter()
        .zip(&silhouette.data)
        .filter(|(&d, &s)| s && d != 0)
        .count();
    Ok(hit as f64 / total as f64)
}

/// Camera pose at `eye` looking at `target` with world +y as up.
pub fn look_at(eye: &Vector3<f64>, target: &Vector3<f64>) -> Pose {
    let back = (eye - target).normalize();
    let mut right = Vector3::y().cross(&back);
    if right.norm() < 1e-9 {
        right = Vector3::x();
    }
    let right = right.normalize();
    let up = back.cross(&right);
    let m = nalgebra::Matrix3::from_columns(&[right, up, back]);
    let rotation = nalgebra::UnitQuaternion::from_matrix(&m);
    Pose::from_parts(rotation, *eye)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::viewer::quads::{orient_quads, Quad};

    fn cam() -> CameraIntrinsics {
        CameraIntrinsics::from_horizontal_fov(64, 48, 1.2)
    }

    fn quad(center: Vector3<f64>, half: f64, color: [u8; 3]) -> Quad {
        Quad { center, normal: Vector3::z(), half_width: half, half_height: half, color }
    }

    fn cloud(quads: Vec<Quad>) -> QuadCloud {
        QuadCloud { quads, source_pose: Pose::identity() }
    }

    #[test]
    fn empty_cloud_is_black() {
        let (c, d) = rasterize(&[cloud(vec![])], &cam(), &Pose::identity());
        assert!(c.data.iter().all(|&b| b == 0));
        assert!(d.data.iter().all(|&z| z == 0));
    }

    #[test]
    fn large_frontal_quad_covers_everything() {
        let (c, d) = rasterize(&[cloud(vec![quad(Vector3::new(0.0, 0.0, -2.0), 10.0, [5, 6, 7])])], &cam(), &Pose::identity());
        assert!(d.data.iter().all(|&z| z == 2000));
        assert!(c.data.chunks(3).all(|p| p == [5, 6, 7]));
        let full = Mask::from_depth(&d);
        assert_eq!(coverage_metric(&d, &full).unwrap(), 1.0);
    }

    #[test]
    fn nearest_fragment_wins() {
        let far = quad(Vector3::new(0.0, 0.0, -3.0), 10.0, [1, 1, 1]);
        let near = quad(Vector3::new(0.0, 0.0, -1.0), 0.05, [9, 9, 9]);
        for order in [vec![far, near], vec![near, far]] {
            let (c, d) = rasterize(&[cloud(order)], &cam(), &Pose::identity());
            let k = cam();
            let (u, v) = (k.cx as u32, k.cy as u32);
            assert_eq!(d.get(u, v), 1000);
            assert_eq!(c.get(u, v), [9, 9, 9]);
            assert_eq!(d.get(0, 0), 3000);
        }
    }

    #[test]
    fn pixel_footprint_matches_projection() {
        // A fronto-parallel square of side 2h at depth z spans 2h*f/z pixels.
        let k = CameraIntrinsics { fx: 100.0, fy: 100.0, cx: 32.0, cy: 24.0, width: 64, height: 48 };
        let q = quad(Vector3::new(0.0, 0.0, -1.0), 0.1, [1, 2, 3]);
        let (_, d) = rasterize(&[cloud(vec![q])], &k, &Pose::identity());
        // outline spans [22, 42) x [14, 34)
        assert_eq!(Mask::from_depth(&d).count(), 400);
        assert_eq!(d.get(22, 14), 1000);
        assert_eq!(d.get(41, 33), 1000);
        assert_eq!(d.get(42, 33), 0);
    }

    #[test]
    fn behind_camera_is_skipped() {
        let q = quad(Vector3::new(0.0, 0.0, 2.0), 1.0, [1, 1, 1]);
        let (_, d) = rasterize(&[cloud(vec![q])], &cam(), &Pose::identity());
        assert!(d.data.iter().all(|&z| z == 0));
    }

    #[test]
    fn coverage_examples() {
        let mut sil = Mask::empty(4, 1);
        sil.data = vec![true, true, false, true];
        let render = DepthImage::new(4, 1, vec![5, 0, 7, 8]).unwrap();
        assert!((coverage_metric(&render, &sil).unwrap() - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(coverage_metric(&DepthImage::zeros(4, 1), &sil).unwrap(), 0.0);
        assert_eq!(coverage_metric(&render, &Mask::empty(4, 1)).unwrap(), 0.0);
        assert!(coverage_metric(&render, &Mask::empty(2, 2)).is_err());
    }

    #[test]
    fn look_at_points_down_negative_z() {
        let eye = Vector3::new(3.0, 1.0, -2.0);
        let target = Vector3::new(0.0, 1.0, -2.0);
        let pose = look_at(&eye, &target);
        let forward = pose.transform_vector(&-Vector3::z());
        assert!((forward - Vector3::new(-1.0, 0.0, 0.0)).norm() < 1e-12);
        assert!((pose.transform_vector(&Vector3::y()) - Vector3::y()).norm() < 1e-12);
    }

    #[test]
    fn side_view_of_edge_on_quads_improves_with_orientation() {
        // Quads facing +z seen from +x are edge-on.
        let quads: Vec<Quad> = (0..20)
            .flat_map(|i| (0..20).map(move |j| quad(Vector3::new(0.0, i as f64 * 0.02, -2.0 - j as f64 * 0.02), 0.012, [1; 3])))
            .collect();
        let c = cloud(quads);
        let eye = Vector3::new(2.0, 0.2, -2.2);
        let pose = look_at(&eye, &Vector3::new(0.0, 0.2, -2.2));
        let (_, off) = rasterize(std::slice::from_ref(&c), &cam(), &pose);
        let (_, on) = rasterize(&[orient_quads(&c, &eye)], &cam(), &pose);
        assert!(Mask::from_depth(&on).count() > Mask::from_depth(&off).count());
    }
}
