use crate::model::{CameraIntrinsics, DepthImage, RgbdFrame};

/// Color intrinsics resampled onto the depth grid; the geometry of the
/// registered depth image.
pub fn registered_intrinsics(frame: &RgbdFrame) -> CameraIntrinsics {
    frame
        .color_intrinsics
        .scaled_to(frame.depth.width, frame.depth.height)
}

/// Re-expresses the depth image in the color camera's geometry, keeping the
/// depth resolution. Each valid pixel is unprojected, moved into the color
/// frame and splatted to its nearest cell; when several land on one cell the
/// nearest depth wins.
pub fn register_depth_to_color(frame: &RgbdFrame) -> DepthImage {
    let target = registered_intrinsics(frame);
    let (w, h) = (frame.depth.width, frame.depth.height);
    let mut out = DepthImage::zeros(w, h);
    let src = &frame.depth_intrinsics;
    for v in 0..h {
        for u in 0..w {
            let d = frame.depth.get(u, v);
            if d == 0 {
                continue;
            }
            let p = frame
                .depth_to_color
                .transform_point(&src.unproject(u as f64, v as f64, d));
            let Some((x, y, z)) = target.project(&p) else {
                continue;
            };
            let (cu, cv) = ((x + 0.5).floor(), (y + 0.5).floor());
            if cu < 0.0 || cv < 0.0 || cu >= w as f64 || cv >= h as f64 {
                continue;
            }
            let mm = (z * 1000.0).round().clamp(1.0, u16::MAX as f64) as u16;
            let cell = &mut out.data[cv as usize * w as usize + cu as usize];
            if *cell == 0 || mm < *cell {
                *cell = mm;
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{ColorImage, Pose};
    use nalgebra::{UnitQuaternion, Vector3};

    fn frame(depth: DepthImage, k: CameraIntrinsics, to_color: Pose) -> RgbdFrame {
        RgbdFrame {
            frame_id: 0,
            timestamp_micros: 0,
            color: ColorImage::filled(k.width, k.height, [0; 3]),
            depth,
            depth_intrinsics: k,
            color_intrinsics: k,
            depth_to_color: to_color,
        }
    }

    fn k() -> CameraIntrinsics {
        CameraIntrinsics { fx: 200.0, fy: 210.0, cx: 31.5, cy: 20.25, width: 64, height: 40 }
    }

    #[test]
    fn identity_is_a_no_op() {
        let data: Vec<u16> = (0..64 * 40).map(|i| if i % 7 == 0 { 0 } else { 500 + (i % 1000) as u16 }).collect();
        let depth = DepthImage::new(64, 40, data).unwrap();
        let f = frame(depth.clone(), k(), Pose::identity());
        assert_eq!(register_depth_to_color(&f), depth);
    }

    #[test]
    fn translation_shifts_by_closed_form_column() {
        let mut depth = DepthImage::zeros(64, 40);
        depth.data[20 * 64 + 10] = 2000;
        let shift = Pose::from_parts(UnitQuaternion::identity(), Vector3::new(0.10, 0.0, 0.0));
        let out = register_depth_to_color(&frame(depth, k(), shift));
        // x = (10 − 31.5)·2/200 = −0.215 m, moved to −0.115 m
        // u' = 31.5 + 200·(−0.115)/2 = 20
        let expected_col = (31.5 + 200.0 * (-0.215 + 0.10) / 2.0_f64 + 0.5).floor() as usize;
        assert_eq!(expected_col, 20);
        assert_eq!(out.data[20 * 64 + expected_col], 2000);
        assert_eq!(out.valid_count(), 1);
    }

    #[test]
    fn nearer_depth_wins_on_collision() {
        let mut depth = DepthImage::zeros(64, 40);
        depth.data[20 * 64 + 30] = 1000;
        depth.data[20 * 64 + 31] = 4000;
        let kk = CameraIntrinsics { fx: 100.0, fy: 100.0, cx: 32.0, cy: 20.0, width: 64, height: 40 };
        // Pixel 30 at 1 m: x = −0.02; pixel 31 at 4 m: x = −0.04. A +0.01 m
        // shift moves them to columns 31 and 31.25 → both round to 31.
        let shift = Pose::from_parts(UnitQuaternion::identity(), Vector3::new(0.01, 0.0, 0.0));
        let out = register_depth_to_color(&frame(depth, kk, shift));
        assert_eq!(out.data[20 * 64 + 31], 1000);
        assert_eq!(out.valid_count(), 1);
    }

    #[test]
    fn never_creates_pixels() {
        let data: Vec<u16> = (0..64 * 40).map(|i| 800 + (i * 37 % 3000) as u16).collect();
        let depth = DepthImage::new(64, 40, data).unwrap();
        let pose = Pose::from_parts(
            UnitQuaternion::from_euler_angles(0.05, -0.1, 0.02),
            Vector3::new(0.03, -0.01, 0.02),
        );
        let mut f = frame(depth, k(), pose);
        f.color_intrinsics = CameraIntrinsics { fx: 400.0, fy: 400.0, cx: 64.0, cy: 40.0, width: 128, height: 80 };
        f.color = ColorImage::filled(128, 80, [0; 3]);
        let out = register_depth_to_color(&f);
        assert!(out.valid_count() <= f.depth.valid_count());
        assert!(out.valid_count() > 0);
    }
}
