//! File formats: binary field dumps, PGM rasters, and CSV tables.
//!
//! All writers are deterministic: identical data produces byte-identical
//! files.  Floating-point values in CSV files are printed with `{:e}`
//! (shortest round-trip scientific notation), which is stable for a given
//! bit pattern.

use crate::error::{Error, Result};
use crate::grid::{AxialProfile, Field, RadialProfile};
use crate::optics::Volume;
use crate::scalar::C64;
use ndarray::Array2;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

const MAGIC: &[u8; 4] = b"TFLD";
const VERSION: u32 = 1;

/// Write a field as a little-endian binary dump:
/// magic `"TFLD"`, `u32` version = 1, `u32` nx, `u32` ny, `f64` dx, `f64` dy,
/// then `nx·ny` interleaved `(re, im)` `f64` pairs in row-major order.
pub fn write_field(path: &Path, field: &Field<f64>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&(field.nx() as u32).to_le_bytes())?;
    w.write_all(&(field.ny() as u32).to_le_bytes())?;
    w.write_all(&field.dx().to_le_bytes())?;
    w.write_all(&field.dy().to_le_bytes())?;
    for a in field.data().iter() {
        w.write_all(&a.re.to_le_bytes())?;
        w.write_all(&a.im.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

/// Read a field written by [`write_field`].
pub fn read_field(path: &Path) -> Result<Field<f64>> {
    let mut r = BufReader::new(File::open(path)?);
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Config(format!(
            "{}: not a field dump (bad magic)",
            path.display()
        )));
    }
    let version = read_u32(&mut r)?;
    if version != VERSION {
        return Err(Error::Config(format!(
            "{}: unsupported field dump version {version}",
            path.display()
        )));
    }
    let nx = read_u32(&mut r)? as usize;
    let ny = read_u32(&mut r)? as usize;
    let dx = read_f64(&mut r)?;
    let dy = read_f64(&mut r)?;
    let mut data = Array2::from_elem((ny, nx), C64::new(0.0, 0.0));
    for a in data.iter_mut() {
        let re = read_f64(&mut r)?;
        let im = read_f64(&mut r)?;
        *a = C64::new(re, im);
    }
    Field::from_data(dx, dy, data)
}

fn read_u32(r: &mut impl Read) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_f64(r: &mut impl Read) -> Result<f64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(f64::from_le_bytes(b))
}

const VOLUME_MAGIC: &[u8; 4] = b"TVOL";

/// Write an intensity volume as a frame stack plus a JSON sidecar.
///
/// The binary file holds a little-endian header — magic `"TVOL"`, `u32`
/// version = 1, `u32` nx, `u32` ny, `u32` n_planes, `f64` dx, `f64` dy —
/// followed by the planes as row-major `f64` frames in scan order.  The
/// sidecar records the grid shape and the `z_values_m` list so the frames
/// can be interpreted without re-reading the header.
pub fn write_volume(bin_path: &Path, json_path: &Path, volume: &Volume<f64>) -> Result<()> {
    let (ny, nx) = volume
        .planes
        .first()
        .map(|p| p.dim())
        .ok_or_else(|| Error::InvalidArgument("volume has no planes".into()))?;
    let mut w = BufWriter::new(File::create(bin_path)?);
    w.write_all(VOLUME_MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&(nx as u32).to_le_bytes())?;
    w.write_all(&(ny as u32).to_le_bytes())?;
    w.write_all(&(volume.planes.len() as u32).to_le_bytes())?;
    w.write_all(&volume.dx.to_le_bytes())?;
    w.write_all(&volume.dy.to_le_bytes())?;
    for plane in &volume.planes {
        for v in plane.iter() {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    w.flush()?;

    let frames = bin_path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    let sidecar = serde_json::json!({
        "frames": frames,
        "nx": nx,
        "ny": ny,
        "dx_m": volume.dx,
        "dy_m": volume.dy,
        "z_values_m": volume.z_values,
    });
    let mut f = BufWriter::new(File::create(json_path)?);
    f.write_all(serde_json::to_string_pretty(&sidecar)?.as_bytes())?;
    f.write_all(b"\n")?;
    f.flush()?;
    Ok(())
}

/// Write an intensity grid as an 8-bit binary PGM (P5), max-normalized.
pub fn write_pgm(path: &Path, intensity: &Array2<f64>) -> Result<()> {
    let (ny, nx) = intensity.dim();
    let max = intensity.iter().cloned().fold(0.0f64, f64::max);
    let scale = if max > 0.0 { 255.0 / max } else { 0.0 };
    let mut w = BufWriter::new(File::create(path)?);
    write!(w, "P5\n{nx} {ny}\n255\n")?;
    let mut row = Vec::with_capacity(nx);
    for iy in 0..ny {
        row.clear();
        for ix in 0..nx {
            row.push((intensity[(iy, ix)] * scale).round().clamp(0.0, 255.0) as u8);
        }
        w.write_all(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Two-column CSV of a radial profile with header `# rho_m,intensity`.
pub fn write_radial_csv(path: &Path, profile: &RadialProfile) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "# rho_m,intensity")?;
    for (r, v) in profile.radii.iter().zip(&profile.values) {
        writeln!(w, "{:e},{:e}", r, v)?;
    }
    w.flush()?;
    Ok(())
}

/// Two-column CSV of an axial profile with header `# z_m,intensity`.
pub fn write_axial_csv(path: &Path, profile: &AxialProfile) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "# z_m,intensity")?;
    for (z, v) in profile.z_values.iter().zip(&profile.values) {
        writeln!(w, "{:e},{:e}", z, v)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::C64;
    use tempdir::tempdir;

    mod tempdir {
        use std::path::PathBuf;

        /// Minimal unique scratch dir under the target-adjacent temp root;
        /// removed on drop.
        pub struct TempDir(pub PathBuf);

        pub fn tempdir(tag: &str) -> TempDir {
            let mut p = std::env::temp_dir();
            p.push(format!("agtrap-test-{tag}-{}", std::process::id()));
            std::fs::create_dir_all(&p).unwrap();
            TempDir(p)
        }

        impl Drop for TempDir {
            fn drop(&mut self) {
                let _ = std::fs::remove_dir_all(&self.0);
            }
        }
    }

    #[test]
    fn field_round_trip_is_exact() {
        let dir = tempdir("tfld");
        let path = dir.0.join("f.tfld");
        let f = Field::<f64>::from_fn(8, 6, 1e-6, 2e-6, |x, y| {
            C64::new(x * 1e6, y * 1e6 - 0.25)
        })
        .unwrap();
        write_field(&path, &f).unwrap();
        let g = read_field(&path).unwrap();
        assert_eq!(f, g);
    }

    #[test]
    fn field_rejects_bad_magic() {
        let dir = tempdir("badmagic");
        let path = dir.0.join("junk.bin");
        std::fs::write(&path, b"NOPE0000000000000000000000000000").unwrap();
        assert!(read_field(&path).is_err());
    }

    #[test]
    fn pgm_has_correct_header_and_size() {
        let dir = tempdir("pgm");
        let path = dir.0.join("i.pgm");
        let mut i = Array2::<f64>::zeros((4, 6));
        i[(2, 3)] = 2.0;
        write_pgm(&path, &i).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        let header = b"P5\n6 4\n255\n";
        assert_eq!(&bytes[..header.len()], header);
        assert_eq!(bytes.len(), header.len() + 24);
        assert_eq!(bytes[header.len() + 2 * 6 + 3], 255);
    }

    #[test]
    fn volume_dump_has_expected_layout() {
        let dir = tempdir("tvol");
        let bin = dir.0.join("v.tvol");
        let json = dir.0.join("v.json");
        let planes = vec![Array2::<f64>::zeros((3, 4)), Array2::from_elem((3, 4), 2.5)];
        let vol = Volume::new(1e-6, 2e-6, vec![0.0, 1e-3], planes).unwrap();
        write_volume(&bin, &json, &vol).unwrap();
        let bytes = std::fs::read(&bin).unwrap();
        assert_eq!(&bytes[..4], b"TVOL");
        // header 4 + 4·4 + 8·2 = 36 bytes, then 2 planes × 12 f64.
        assert_eq!(bytes.len(), 36 + 2 * 12 * 8);
        assert_eq!(u32::from_le_bytes(bytes[8..12].try_into().unwrap()), 4); // nx
        assert_eq!(u32::from_le_bytes(bytes[12..16].try_into().unwrap()), 3); // ny
        assert_eq!(u32::from_le_bytes(bytes[16..20].try_into().unwrap()), 2); // planes
        let text = std::fs::read_to_string(&json).unwrap();
        assert!(text.contains("\"z_values_m\""));
        assert!(text.contains("v.tvol"));
    }

    #[test]
    fn csv_writers_are_deterministic() {
        let dir = tempdir("csv");
        let p1 = dir.0.join("a.csv");
        let p2 = dir.0.join("b.csv");
        let profile = RadialProfile {
            radii: vec![1e-6, 2e-6, 3e-6],
            values: vec![1.0, 0.5, 1.0 / 3.0],
            center: (0.0, 0.0),
        };
        write_radial_csv(&p1, &profile).unwrap();
        write_radial_csv(&p2, &profile).unwrap();
        assert_eq!(std::fs::read(&p1).unwrap(), std::fs::read(&p2).unwrap());
        let text = std::fs::read_to_string(&p1).unwrap();
        assert!(text.starts_with("# rho_m,intensity\n"));
    }
}
