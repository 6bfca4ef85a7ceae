//! Field persistence: a flat little-endian binary of f64 node values behind a
//! fixed 32-byte header, a text sidecar with the same metadata, and a legacy
//! structured-points export for external visualization tools.
//!
//! Header layout (32 bytes):
//! ```text
//! 0..3   magic  b"FB1"
//! 3      dim    u8
//! 4..6   nx     u16 LE   (cells along x)
//! 6..8   ny     u16 LE   (cells along y, 0 for 1D)
//! 8..16  h      f64 LE
//! 16..24 origin_x f64 LE
//! 24..32 origin_y f64 LE
//! ```

use super::{Grid, ScalarField};
use crate::error::{CoreError, Result};
use std::fs;
use std::io::Write as _;
use std::path::Path;

const MAGIC: [u8; 3] = *b"FB1";

pub fn write_binary(field: &ScalarField, path: &Path) -> Result<()> {
    let g = field.grid();
    let [ncx, ncy] = g.n_cells();
    if ncx > u16::MAX as usize || ncy > u16::MAX as usize {
        return Err(CoreError::InvalidInput(
            "grid too large for the binary field format (max 65535 cells per axis)".into(),
        ));
    }
    let mut buf = Vec::with_capacity(32 + 8 * field.values().len());
    buf.extend_from_slice(&MAGIC);
    buf.push(g.dim() as u8);
    buf.extend_from_slice(&(ncx as u16).to_le_bytes());
    buf.extend_from_slice(&(ncy as u16).to_le_bytes());
    buf.extend_from_slice(&g.h().to_le_bytes());
    buf.extend_from_slice(&g.origin()[0].to_le_bytes());
    buf.extend_from_slice(&g.origin()[1].to_le_bytes());
    debug_assert_eq!(buf.len(), 32);
    for v in field.values() {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    fs::write(path, &buf)?;
    write_meta(field, &sidecar_path(path))?;
    Ok(())
}

fn sidecar_path(path: &Path) -> std::path::PathBuf {
    let mut os = path.as_os_str().to_owned();
    os.push(".meta");
    os.into()
}

fn write_meta(field: &ScalarField, path: &Path) -> Result<()> {
    let g = field.grid();
    let mut f = fs::File::create(path)?;
    writeln!(f, "format=fb-field-v1")?;
    writeln!(f, "dim={}", g.dim())?;
    writeln!(f, "n_cells={} {}", g.n_cells()[0], g.n_cells()[1])?;
    writeln!(f, "h={}", g.h())?;
    writeln!(f, "origin={} {}", g.origin()[0], g.origin()[1])?;
    writeln!(f, "nodes={}", field.values().len())?;
    Ok(())
}

pub fn read_binary(path: &Path) -> Result<ScalarField> {
    let buf = fs::read(path)?;
    if buf.len() < 32 || buf[0..3] != MAGIC {
        return Err(CoreError::Format(format!(
            "{}: not a field binary (bad magic or truncated header)",
            path.display()
        )));
    }
    let dim = buf[3] as usize;
    if dim != 1 && dim != 2 {
        return Err(CoreError::Format(format!("unsupported dim {dim}")));
    }
    let ncx = u16::from_le_bytes([buf[4], buf[5]]) as usize;
    let ncy = u16::from_le_bytes([buf[6], buf[7]]) as usize;
    let h = f64::from_le_bytes(buf[8..16].try_into().unwrap());
    let ox = f64::from_le_bytes(buf[16..24].try_into().unwrap());
    let oy = f64::from_le_bytes(buf[24..32].try_into().unwrap());
    let grid = if dim == 1 {
        Grid::new_1d(ox, ncx, h)?
    } else {
        Grid::new_2d([ox, oy], [ncx, ncy], h)?
    };
    let expect = grid.node_count();
    if buf.len() != 32 + 8 * expect {
        return Err(CoreError::Format(format!(
            "{}: payload holds {} bytes, expected {} node values",
            path.display(),
            buf.len() - 32,
            expect
        )));
    }
    let mut field = ScalarField::zeros(&grid);
    for (k, v) in field.values_mut().iter_mut().enumerate() {
        let off = 32 + 8 * k;
        *v = f64::from_le_bytes(buf[off..off + 8].try_into().unwrap());
    }
    Ok(field)
}

/// Legacy structured-points text export, one scalar per node, x fastest.
pub fn write_structured_points(field: &ScalarField, path: &Path, name: &str) -> Result<()> {
    let g = field.grid();
    let [nx, ny] = g.nodes();
    let mut out = String::new();
    out.push_str("# vtk DataFile Version 3.0\n");
    out.push_str(name);
    out.push('\n');
    out.push_str("ASCII\nDATASET STRUCTURED_POINTS\n");
    out.push_str(&format!("DIMENSIONS {} {} 1\n", nx, ny));
    out.push_str(&format!("ORIGIN {} {} 0\n", g.origin()[0], g.origin()[1]));
    out.push_str(&format!("SPACING {} {} 1\n", g.h(), g.h()));
    out.push_str(&format!("POINT_DATA {}\n", nx * ny));
    out.push_str(&format!("SCALARS {} double 1\nLOOKUP_TABLE default\n", name));
    for j in 0..ny {
        for i in 0..nx {
            out.push_str(&format!("{}\n", field.at(i, j)));
        }
    }
    fs::write(path, out)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{Grid, ScalarField};

    #[test]
    fn binary_roundtrip_is_exact() {
        let dir = std::env::temp_dir().join("onephase_io_test");
        std::fs::create_dir_all(&dir).unwrap();
        let g = Grid::new_2d([-1.0, 0.5], [16, 24], 0.125).unwrap();
        let f = ScalarField::from_fn(&g, |x| (x[0] * 37.1).sin() + x[1]);
        let path = dir.join("field.bin");
        write_binary(&f, &path).unwrap();
        let back = read_binary(&path).unwrap();
        assert_eq!(back.grid(), f.grid());
        assert_eq!(back.values(), f.values());
        assert!(path.with_extension("bin.meta").exists() || dir.join("field.bin.meta").exists());
    }

    #[test]
    fn binary_roundtrip_1d() {
        let dir = std::env::temp_dir().join("onephase_io_test");
        std::fs::create_dir_all(&dir).unwrap();
        let g = Grid::new_1d(-1.0, 64, 2.0 / 64.0).unwrap();
        let f = ScalarField::from_fn(&g, |x| x[0].max(0.0));
        let path = dir.join("field1d.bin");
        write_binary(&f, &path).unwrap();
        let back = read_binary(&path).unwrap();
        assert_eq!(back.grid(), f.grid());
        assert_eq!(back.values(), f.values());
    }

    #[test]
    fn rejects_bad_magic() {
        let dir = std::env::temp_dir().join("onephase_io_test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("junk.bin");
        std::fs::write(&path, b"XYZ0...............................").unwrap();
        assert!(matches!(read_binary(&path), Err(CoreError::Format(_))));
    }

    #[test]
    fn structured_points_layout() {
        let dir = std::env::temp_dir().join("onephase_io_test");
        std::fs::create_dir_all(&dir).unwrap();
        let g = Grid::new_2d([0.0, 0.0], [8, 8], 0.125).unwrap();
        let f = ScalarField::from_fn(&g, |x| x[0]);
        let path = dir.join("field.vtk");
        write_structured_points(&f, &path, "w").unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("# vtk DataFile Version 3.0"));
        assert!(text.contains("DATASET STRUCTURED_POINTS"));
        assert!(text.contains("DIMENSIONS 9 9 1"));
        assert!(text.contains("POINT_DATA 81"));
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 10 + 81);
    }
}
