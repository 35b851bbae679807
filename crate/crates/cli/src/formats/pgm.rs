//! Binary 8-bit PGM (P5) images; the only raster format the toolchain uses.

use std::fs;
use std::io::Write;
use std::path::Path;

use anyhow::{bail, Context, Result};
use hierdet_core::geometry::SilhouetteMask;
use hierdet_core::image::GrayImage;

pub fn write_gray(path: &Path, image: &GrayImage) -> Result<()> {
    let mut out = Vec::with_capacity(image.data().len() + 32);
    write!(out, "P5\n{} {}\n255\n", image.width(), image.height())?;
    out.extend(image.data().iter().map(|&v| (v.clamp(0.0, 1.0) * 255.0).round() as u8));
    fs::write(path, out).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

pub fn write_mask(path: &Path, mask: &SilhouetteMask) -> Result<()> {
    let mut out = Vec::with_capacity(mask.bits().len() + 32);
    write!(out, "P5\n{} {}\n255\n", mask.width(), mask.height())?;
    out.extend(mask.bits().iter().map(|&b| if b { 255u8 } else { 0u8 }));
    fs::write(path, out).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

fn parse_header(data: &[u8]) -> Result<(u32, u32, usize)> {
    if data.len() < 2 || &data[..2] != b"P5" {
        bail!("not a binary PGM (missing P5 magic)");
    }
    let mut fields = Vec::new();
    let mut pos = 2;
    while fields.len() < 3 {
        while pos < data.len() && (data[pos] as char).is_whitespace() {
            pos += 1;
        }
        if pos < data.len() && data[pos] == b'#' {
            while pos < data.len() && data[pos] != b'\n' {
                pos += 1;
            }
            continue;
        }
        let start = pos;
        while pos < data.len() && !(data[pos] as char).is_whitespace() {
            pos += 1;
        }
        if start == pos {
            bail!("truncated PGM header");
        }
        fields.push(std::str::from_utf8(&data[start..pos])?.parse::<u32>()?);
    }
    // Exactly one whitespace byte separates the header from the samples.
    pos += 1;
    let (w, h, maxval) = (fields[0], fields[1], fields[2]);
    if maxval != 255 {
        bail!("only 8-bit PGM supported (maxval {maxval})");
    }
    Ok((w, h, pos))
}

pub fn read_gray(path: &Path) -> Result<GrayImage> {
    let data = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    let (w, h, offset) = parse_header(&data)?;
    let need = (w * h) as usize;
    if data.len() < offset + need {
        bail!("PGM sample data truncated in {}", path.display());
    }
    let pixels = data[offset..offset + need].iter().map(|&b| b as f32 / 255.0).collect();
    Ok(GrayImage::from_data(w, h, pixels)?)
}

pub fn read_mask(path: &Path) -> Result<SilhouetteMask> {
    let data = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    let (w, h, offset) = parse_header(&data)?;
    let need = (w * h) as usize;
    if data.len() < offset + need {
        bail!("PGM sample data truncated in {}", path.display());
    }
    let bits = data[offset..offset + need].iter().map(|&b| b >= 128).collect();
    Ok(SilhouetteMask::from_bits(w, h, bits))
}

#[cfg(test)]
mod tests {
    use super::*;
    use tempfile::tempdir;

    #[test]
    fn gray_round_trip_is_exact_at_8_bits() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("t.pgm");
        let mut img = GrayImage::new(9, 5);
        for y in 0..5 {
            for x in 0..9 {
                img.set(x, y, ((x + 9 * y) as f32) / 44.0);
            }
        }
        write_gray(&path, &img).unwrap();
        let back = read_gray(&path).unwrap();
        let again = dir.path().join("t2.pgm");
        write_gray(&again, &back).unwrap();
        // Quantization is idempotent: bytes equal after one round trip.
        assert_eq!(fs::read(&path).unwrap(), fs::read(&again).unwrap());
    }

    #[test]
    fn mask_round_trip() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("m.pgm");
        let bits: Vec<bool> = (0..30).map(|i| i % 3 == 0).collect();
        let mask = SilhouetteMask::from_bits(6, 5, bits);
        write_mask(&path, &mask).unwrap();
        assert_eq!(read_mask(&path).unwrap(), mask);
    }

    #[test]
    fn rejects_non_pgm() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("x.pgm");
        fs::write(&path, b"P6\n1 1\n255\nxxx").unwrap();
        assert!(read_gray(&path).is_err());
    }
}
