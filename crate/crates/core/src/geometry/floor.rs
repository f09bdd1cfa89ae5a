//! Floor extraction from depth pixels.
//!
//! RANSAC over unprojected points: three-point hypotheses are gated by the
//! angle between their normal and camera +y, scored by inlier count, and the
//! winner is refined by a least-squares (smallest-eigenvector) fit over its
//! inliers.

use super::GeometryError;
use crate::model::{CameraIntrinsics, DepthImage, FloorPlane};
use nalgebra::{Matrix3, SymmetricEigen, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::VecDeque;

/// A candidate plane must gather at least this many inliers.
pub const MIN_FLOOR_INLIERS: usize = 100;

/// Hypotheses are scored on at most this many evenly strided points; the
/// final inlier set always uses every point.
const SCORING_SAMPLE: usize = 8192;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RansacParams {
    pub iterations: u32,
    pub inlier_distance_m: f64,
    pub max_normal_angle_from_up: f64,
    pub seed: u64,
}

impl Default for RansacParams {
    fn default() -> Self {
        RansacParams {
            iterations: 200,
            inlier_distance_m: 0.02,
            max_normal_angle_from_up: 0.524,
            seed: 0,
        }
    }
}

impl RansacParams {
    fn validate(&self) -> Result<(), GeometryError> {
        if self.iterations == 0 {
            return Err(GeometryError::InvalidParams("iterations must be at least 1"));
        }
        if self.inlier_distance_m.is_nan() || self.inlier_distance_m <= 0.0 {
            return Err(GeometryError::InvalidParams("inlier distance must be positive"));
        }
        Ok(())
    }
}

pub fn depth_points(depth: &DepthImage, intrinsics: &CameraIntrinsics) -> Vec<Vector3<f64>> {
    let mut points = Vec::with_capacity(depth.valid_count());
    for v in 0..depth.height {
        for u in 0..depth.width {
            let d = depth.get(u, v);
            if d != 0 {
                points.push(intrinsics.unproject(u as f64, v as f64, d));
            }
        }
    }
    points
}

pub fn extract_floor(
    depth: &DepthImage,
    intrinsics: &CameraIntrinsics,
    params: &RansacParams,
) -> Result<FloorPlane, GeometryError> {
    fit_floor_points(&depth_points(depth, intrinsics), params)
}

fn plane_through(a: &Vector3<f64>, b: &Vector3<f64>, c: &Vector3<f64>) -> Option<(Vector3<f64>, f64)> {
    let n = (b - a).cross(&(c - a));
    let len = n.norm();
    if len < 1e-12 {
        return None;
    }
    let mut n = n / len;
    if n.y < 0.0 {
        n = -n;
    }
    Some((n, n.dot(a)))
}

fn least_squares_plane(points: &[Vector3<f64>], inliers: &[usize]) -> Option<(Vector3<f64>, f64)> {
    let count = inliers.len() as f64;
    let centroid = inliers.iter().map(|&i| points[i]).sum::<Vector3<f64>>() / count;
    let mut cov = Matrix3::zeros();
    for &i in inliers {
        let d = points[i] - centroid;
        cov += d * d.transpose();
    }
    let eig = SymmetricEigen::new(cov);
    let (smallest, _) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))?;
    let mut n: Vector3<f64> = eig.eigenvectors.column(smallest).into_owned();
    n.normalize_mut();
    if n.y < 0.0 {
        n = -n;
    }
    if n.y <= 0.0 {
        return None;
    }
    Some((n, n.dot(&centroid)))
}

fn inliers_of(points: &[Vector3<f64>], normal: &Vector3<f64>, distance: f64, threshold: f64) -> Vec<usize> {
    points
        .iter()
        .enumerate()
        .filter(|(_, p)| (normal.dot(p) - distance).abs() <= threshold)
        .map(|(i, _)| i)
        .collect()
}

/// RANSAC floor fit on camera-frame points.
pub fn fit_floor_points(points: &[Vector3<f64>], params: &RansacParams) -> Result<FloorPlane, GeometryError> {
    params.validate()?;
    if points.len() < 3 {
        return Err(GeometryError::NotEnoughPoints(points.len()));
    }
    let stride = points.len().div_ceil(SCORING_SAMPLE);
    let scoring: Vec<Vector3<f64>> = points.iter().step_by(stride).copied().collect();
    let cos_gate = params.max_normal_angle_from_up.cos();
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);

    let mut best: Option<(usize, Vector3<f64>, f64)> = None;
    for _ in 0..params.iterations {
        let a = rng.random_range(0..points.len());
        let b = rng.random_range(0..points.len());
        let c = rng.random_range(0..points.len());
        if a == b || b == c || a == c {
            continue;
        }
        let Some((n, d)) = plane_through(&points[a], &points[b], &points[c]) else {
            continue;
        };
        if n.y < cos_gate {
            continue;
        }
        let score = scoring
            .iter()
            .filter(|p| (n.dot(p) - d).abs() <= params.inlier_distance_m)
            .count();
        if best.is_none_or(|(s, _, _)| score > s) {
            best = Some((score, n, d));
        }
    }

    let Some((_, normal, distance)) = best else {
        return Err(GeometryError::NoFloorFound { best_inliers: 0 });
    };
    let mut inliers = inliers_of(points, &normal, distance, params.inlier_distance_m);
    if inliers.len() < MIN_FLOOR_INLIERS {
        return Err(GeometryError::NoFloorFound { best_inliers: inliers.len() });
    }
    let mut plane = (normal, distance);
    for _ in 0..2 {
        let Some(refined) = least_squares_plane(points, &inliers) else {
            break;
        };
        plane = refined;
        let next = inliers_of(points, &plane.0, plane.1, params.inlier_distance_m);
        if next.len() < MIN_FLOOR_INLIERS {
            break;
        }
        inliers = next;
    }
    Ok(FloorPlane {
        normal: plane.0,
        distance: plane.1,
    })
}

/// Median filter over recent floor estimates.
#[derive(Debug, Clone)]
pub struct FloorSmoother {
    window: usize,
    history: VecDeque<FloorPlane>,
}

impl Default for FloorSmoother {
    fn default() -> Self {
        FloorSmoother::new(30)
    }
}

impl FloorSmoother {
    pub fn new(window: usize) -> Self {
        FloorSmoother {
            window: window.max(1),
            history: VecDeque::with_capacity(window.max(1)),
        }
    }

    /// Adds an estimate and returns the component-wise median of the window,
    /// with the normal renormalized.
    pub fn push(&mut self, plane: FloorPlane) -> FloorPlane {
        if self.history.len() == self.window {
            self.history.pop_front();
        }
        self.history.push_back(plane);
        let median = |f: fn(&FloorPlane) -> f64| {
            let mut values: Vec<f64> = self.history.iter().map(f).collect();
            values.sort_by(f64::total_cmp);
            let m = values.len() / 2;
            if values.len() % 2 == 1 {
                values[m]
            } else {
                (values[m - 1] + values[m]) / 2.0
            }
        };
        let normal = Vector3::new(median(|p| p.normal.x), median(|p| p.normal.y), median(|p| p.normal.z));
        FloorPlane {
            normal: normal.normalize(),
            distance: median(|p| p.distance),
        }
    }
}
