use super::GeometryError;
use crate::model::DepthImage;

/// Invalidates every pixel whose depth falls outside `[near_mm, far_mm]`.
pub fn remove_background(depth: &DepthImage, near_mm: u16, far_mm: u16) -> Result<DepthImage, GeometryError> {
    if near_mm >= far_mm {
        return Err(GeometryError::InvalidRange { near_mm, far_mm });
    }
    let data = depth
        .data
        .iter()
        .map(|&d| if (near_mm..=far_mm).contains(&d) { d } else { 0 })
        .collect();
    Ok(DepthImage {
        width: depth.width,
        height: depth.height,
        data,
    })
}
