//! Binary PPM (8-bit RGB) and PGM (16-bit big-endian gray) files.

use super::ViewerError;
use crate::model::{ColorImage, DepthImage};
use std::path::Path;

pub fn encode_ppm(image: &ColorImage) -> Vec<u8> {
    let mut out = format!("P6\n{} {}\n255\n", image.width, image.height).into_bytes();
    out.extend_from_slice(&image.data);
    out
}

pub fn encode_pgm16(image: &DepthImage) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n65535\n", image.width, image.height).into_bytes();
    for d in &image.data {
        out.extend_from_slice(&d.to_be_bytes());
    }
    out
}

/// Parses the `magic width height maxval` header and returns those values
/// with the offset of the first raster byte.
fn header(bytes: &[u8], magic: &[u8; 2]) -> Result<(u32, u32, u32, usize), ViewerError> {
    let bad = |why: &str| ViewerError::ImageFormat(why.to_string());
    if bytes.len() < 2 || &bytes[..2] != magic {
        return Err(bad("wrong magic"));
    }
    let mut pos = 2;
    let mut fields = [0u32; 3];
    for field in &mut fields {
        loop {
            match bytes.get(pos) {
                Some(b'#') => {
                    while bytes.get(pos).is_some_and(|&b| b != b'\n') {
                        pos += 1;
                    }
                }
                Some(b) if b.is_ascii_whitespace() => pos += 1,
                Some(_) => break,
                None => return Err(bad("truncated header")),
            }
        }
        let start = pos;
        while bytes.get(pos).is_some_and(u8::is_ascii_digit) {
            pos += 1;
        }
        *field = std::str::from_utf8(&bytes[start..pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| bad("bad header number"))?;
    }
    if !bytes.get(pos).is_some_and(u8::is_ascii_whitespace) {
        return Err(bad("missing separator after header"));
    }
    Ok((fields[0], fields[1], fields[2], pos + 1))
}

pub fn decode_ppm(bytes: &[u8]) -> Result<ColorImage, ViewerError> {
    let (w, h, max, start) = header(bytes, b"P6")?;
    if max != 255 {
        return Err(ViewerError::ImageFormat(format!("unsupported maxval {max}")));
    }
    let body = &bytes[start..];
    if body.len() != (w as usize) * (h as usize) * 3 {
        return Err(ViewerError::ImageFormat("raster size mismatch".into()));
    }
    ColorImage::new(w, h, body.to_vec()).map_err(|e| ViewerError::ImageFormat(e.to_string()))
}

pub fn decode_pgm16(bytes: &[u8]) -> Result<DepthImage, ViewerError> {
    let (w, h, max, start) = header(bytes, b"P5")?;
    if max != 65535 {
        return Err(ViewerError::ImageFormat(format!("unsupported maxval {max}")));
    }
    let body = &bytes[start..];
    if body.len() != (w as usize) * (h as usize) * 2 {
        return Err(ViewerError::ImageFormat("raster size mismatch".into()));
    }
    let data = body.chunks_exact(2).map(|c| u16::from_be_bytes([c[0], c[1]])).collect();
    DepthImage::new(w, h, data).map_err(|e| ViewerError::ImageFormat(e.to_string()))
}

pub fn write_ppm(image: &ColorImage, path: &Path) -> Result<(), ViewerError> {
    Ok(std::fs::write(path, encode_ppm(image))?)
}

pub fn read_ppm(path: &Path) -> Result<ColorImage, ViewerError> {
    decode_ppm(&std::fs::read(path)?)
}

pub fn write_pgm16(image: &DepthImage, path: &Path) -> Result<(), ViewerError> {
    Ok(std::fs::write(path, encode_pgm16(image))?)
}

pub fn read_pgm16(path: &Path) -> Result<DepthImage, ViewerError> {
    decode_pgm16(&std::fs::read(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ppm_layout_and_round_trip() {
        let img = ColorImage::new(2, 1, vec![1, 2, 3, 4, 5, 6]).unwrap();
        let bytes = encode_ppm(&img);
        assert_eq!(bytes, b"P6\n2 1\n255\n\x01\x02\x03\x04\x05\x06");
        assert_eq!(decode_ppm(&bytes).unwrap(), img);
    }

    #[test]
    fn pgm_is_big_endian() {
        let img = DepthImage::new(2, 1, vec![0x0102, 0xFFFE]).unwrap();
        let bytes = encode_pgm16(&img);
        assert_eq!(&bytes[bytes.len() - 4..], &[1, 2, 0xFF, 0xFE]);
        assert_eq!(decode_pgm16(&bytes).unwrap(), img);
    }

    #[test]
    fn header_comments_and_errors() {
        let bytes = b"P5 # depth\n1 1\n# max\n65535\n\x00\x07";
        assert_eq!(decode_pgm16(bytes).unwrap().data, vec![7]);
        assert!(decode_pgm16(b"P6\n1 1\n65535\n\x00\x07").is_err());
        assert!(decode_pgm16(b"P5\n1 1\n255\n\x07").is_err());
        assert!(decode_pgm16(b"P5\n2 1\n65535\n\x00\x07").is_err());
        assert!(decode_ppm(b"P6\n1").is_err());
    }
}
