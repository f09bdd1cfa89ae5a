//! ASCII PLY export: four vertices and one face per quad.

use super::quads::QuadCloud;
use std::io::{self, Write};
use std::path::Path;

pub fn write_ply<W: Write>(cloud: &QuadCloud, out: &mut W) -> io::Result<()> {
    let n = cloud.quads.len();
    writeln!(out, "ply")?;
    writeln!(out, "format ascii 1.0")?;
    writeln!(out, "element vertex {}", 4 * n)?;
    for p in ["x", "y", "z"] {
        writeln!(out, "property float {p}")?;
    }
    for p in ["red", "green", "blue"] {
        writeln!(out, "property uchar {p}")?;
    }
    writeln!(out, "element face {n}")?;
    writeln!(out, "property list uchar int vertex_indices")?;
    writeln!(out, "end_header")?;
    for q in &cloud.quads {
        let [r, g, b] = q.color;
        for c in q.corners() {
            writeln!(out, "{} {} {} {r} {g} {b}", c.x as f32, c.y as f32, c.z as f32)?;
        }
    }
    for i in 0..n {
        let b = 4 * i;
        writeln!(out, "4 {} {} {} {}", b, b + 1, b + 2, b + 3)?;
    }
    Ok(())
}

pub fn export_ply(cloud: &QuadCloud, path: &Path) -> io::Result<()> {
    let mut file = io::BufWriter::new(std::fs::File::create(path)?);
    write_ply(cloud, &mut file)?;
    file.flush()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Pose;
    use crate::viewer::quads::Quad;
    use nalgebra::Vector3;

    type Vertex = ([f32; 3], [u8; 3]);

    /// Minimal independent reader: header-driven, tolerant of property order.
    fn parse(text: &str) -> (Vec<Vertex>, Vec<Vec<usize>>) {
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("ply"));
        let mut counts = Vec::new();
        let mut vprops: Vec<String> = Vec::new();
        for line in lines.by_ref() {
            let words: Vec<&str> = line.split(' ').collect();
            match words[0] {
                "element" => counts.push((words[1].to_string(), words[2].parse::<usize>().unwrap())),
                "property" if counts.len() == 1 => vprops.push(words.last().unwrap().to_string()),
                "end_header" => break,
                _ => {}
            }
        }
        let idx = |name: &str| vprops.iter().position(|p| p == name).unwrap();
        let mut verts = Vec::new();
        for _ in 0..counts[0].1 {
            let f: Vec<&str> = lines.next().unwrap().split(' ').collect();
            let pos = [idx("x"), idx("y"), idx("z")].map(|i| f[i].parse::<f32>().unwrap());
            let col = [idx("red"), idx("green"), idx("blue")].map(|i| f[i].parse::<u8>().unwrap());
            verts.push((pos, col));
        }
        let mut faces = Vec::new();
        for _ in 0..counts[1].1 {
            let f: Vec<usize> = lines.next().unwrap().split(' ').map(|w| w.parse().unwrap()).collect();
            assert_eq!(f[0], f.len() - 1);
            faces.push(f[1..].to_vec());
        }
        assert!(lines.next().is_none());
        (verts, faces)
    }

    fn export(cloud: &QuadCloud) -> String {
        let mut buf = Vec::new();
        write_ply(cloud, &mut buf).unwrap();
        String::from_utf8(buf).unwrap()
    }

    #[test]
    fn empty_cloud() {
        let (v, f) = parse(&export(&QuadCloud { quads: vec![], source_pose: Pose::identity() }));
        assert!(v.is_empty() && f.is_empty());
    }

    #[test]
    fn geometry_survives_reparse() {
        let quads: Vec<Quad> = (0..5)
            .map(|i| Quad {
                center: Vector3::new(i as f64 * 0.1, 0.5, -1.0 - i as f64),
                normal: Vector3::new(0.3, 0.1, 1.0).normalize(),
                half_width: 0.002 * (i + 1) as f64,
                half_height: 0.003,
                color: [i as u8, 100, 255 - i as u8],
            })
            .collect();
        let cloud = QuadCloud { quads, source_pose: Pose::identity() };
        let (v, f) = parse(&export(&cloud));
        assert_eq!((v.len(), f.len()), (20, 5));
        for (qi, q) in cloud.quads.iter().enumerate() {
            assert_eq!(f[qi], vec![4 * qi, 4 * qi + 1, 4 * qi + 2, 4 * qi + 3]);
            for (ci, c) in q.corners().iter().enumerate() {
                let (pos, col) = v[4 * qi + ci];
                assert_eq!(pos, [c.x as f32, c.y as f32, c.z as f32]);
                assert_eq!(col, q.color);
            }
        }
    }

    #[test]
    fn writes_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.ply");
        let cloud = QuadCloud {
            quads: vec![Quad { center: Vector3::zeros(), normal: Vector3::z(), half_width: 1.0, half_height: 1.0, color: [1, 2, 3] }],
            source_pose: Pose::identity(),
        };
        export_ply(&cloud, &path).unwrap();
        let (v, f) = parse(&std::fs::read_to_string(&path).unwrap());
        assert_eq!((v.len(), f.len()), (4, 1));
        assert!(export_ply(&cloud, &dir.path().join("missing/c.ply")).is_err());
    }
}
