//! Raw image file format: 16-byte header + little-endian f32 pixels.
//!
//! Layout:
//! ```text
//! offset  size  field
//! 0       4     magic "SEMF"
//! 4       2     width,  u16 LE
//! 6       2     height, u16 LE
//! 8       4     flags,  u32 LE — bits 0..2 encode the image kind
//! 12      4     reserved, u32 LE, must be 0
//! 16      4*w*h pixels, f32 LE, row-major
//! ```
//!
//! Pixels are stored as f32; reading back yields exactly the f32-rounded
//! values, and a write/read/write cycle is byte-identical. The dose is not
//! stored — the dataset manifest owns it — so [`read_semf`] returns images
//! with `dose = None` and callers reattach it from their metadata.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use ndarray::Array2;

use super::{ImageKind, SemImage};
use crate::error::{Error, Result};

const MAGIC: &[u8; 4] = b"SEMF";
const KIND_MASK: u32 = 0b111;

pub fn write_semf(path: &Path, img: &SemImage) -> Result<()> {
    let (h, w) = img.pixels.dim();
    if w > u16::MAX as usize || h > u16::MAX as usize {
        return Err(Error::format(path, format!("image {w}x{h} exceeds the u16 header range")));
    }
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    let mut write = |bytes: &[u8]| out.write_all(bytes).map_err(|e| Error::io(path, e));

    write(MAGIC)?;
    write(&(w as u16).to_le_bytes())?;
    write(&(h as u16).to_le_bytes())?;
    write(&img.kind.to_bits().to_le_bytes())?;
    write(&0u32.to_le_bytes())?;
    for &v in img.pixels.iter() {
        write(&(v as f32).to_le_bytes())?;
    }
    out.flush().map_err(|e| Error::io(path, e))
}

pub fn read_semf(path: &Path) -> Result<SemImage> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut input = BufReader::new(file);
    let mut header = [0u8; 16];
    input.read_exact(&mut header).map_err(|_| Error::format(path, "truncated header"))?;

    if &header[0..4] != MAGIC {
        return Err(Error::format(path, "bad magic; not a SEMF file"));
    }
    let w = u16::from_le_bytes([header[4], header[5]]) as usize;
    let h = u16::from_le_bytes([header[6], header[7]]) as usize;
    let flags = u32::from_le_bytes([header[8], header[9], header[10], header[11]]);
    let reserved = u32::from_le_bytes([header[12], header[13], header[14], header[15]]);
    if reserved != 0 {
        return Err(Error::format(path, format!("nonzero reserved field {reserved}")));
    }
    if flags & !KIND_MASK != 0 {
        return Err(Error::format(path, format!("unknown flag bits 0x{flags:08x}")));
    }
    let kind = ImageKind::from_bits(flags & KIND_MASK)
        .ok_or_else(|| Error::format(path, format!("invalid kind bits {}", flags & KIND_MASK)))?;
    if w == 0 || h == 0 {
        return Err(Error::format(path, format!("degenerate dimensions {w}x{h}")));
    }

    let mut payload = Vec::new();
    input.read_to_end(&mut payload).map_err(|e| Error::io(path, e))?;
    let expected = 4 * w * h;
    if payload.len() != expected {
        return Err(Error::format(
            path,
            format!("payload is {} bytes, expected {expected} for {w}x{h}", payload.len()),
        ));
    }

    let mut pixels = Array2::zeros((h, w));
    for (i, slot) in pixels.iter_mut().enumerate() {
        let b = &payload[4 * i..4 * i + 4];
        *slot = f32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64;
    }
    Ok(SemImage::new(pixels, kind, None))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;
    use rand::Rng;

    fn sample_image(kind: ImageKind) -> SemImage {
        let mut rng = rng_from_seed(5);
        let pixels = Array2::from_shape_fn((32, 16), |_| rng.random::<f64>());
        SemImage::new(pixels, kind, Some(10.0))
    }

    #[test]
    fn round_trip_is_bit_exact_at_file_level() {
        let dir = tempfile::tempdir().unwrap();
        let p1 = dir.path().join("a.semf");
        let p2 = dir.path().join("b.semf");
        let img = sample_image(ImageKind::Noisy);

        write_semf(&p1, &img).unwrap();
        let back = read_semf(&p1).unwrap();
        write_semf(&p2, &back).unwrap();
        assert_eq!(std::fs::read(&p1).unwrap(), std::fs::read(&p2).unwrap());

        // Values come back exactly f32-rounded, kind preserved, dose dropped.
        assert_eq!(back.kind, ImageKind::Noisy);
        assert_eq!(back.dose, None);
        for (a, b) in img.pixels.iter().zip(back.pixels.iter()) {
            assert_eq!(*a as f32 as f64, *b);
        }
    }

    #[test]
    fn all_kinds_survive_the_header() {
        let dir = tempfile::tempdir().unwrap();
        for kind in [ImageKind::Clean, ImageKind::Noisy, ImageKind::Denoised, ImageKind::Noise] {
            let p = dir.path().join("k.semf");
            write_semf(&p, &sample_image(kind)).unwrap();
            assert_eq!(read_semf(&p).unwrap().kind, kind);
        }
    }

    #[test]
    fn corrupt_files_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("x.semf");
        let img = sample_image(ImageKind::Clean);
        write_semf(&p, &img).unwrap();
        let good = std::fs::read(&p).unwrap();

        // Bad magic.
        let mut bad = good.clone();
        bad[0] = b'X';
        std::fs::write(&p, &bad).unwrap();
        assert!(read_semf(&p).is_err());

        // Truncated payload.
        std::fs::write(&p, &good[..good.len() - 5]).unwrap();
        assert!(read_semf(&p).is_err());

        // Trailing junk.
        let mut long = good.clone();
        long.extend_from_slice(&[0, 1, 2, 3]);
        std::fs::write(&p, &long).unwrap();
        assert!(read_semf(&p).is_err());

        // Unknown flag bits.
        let mut flags = good.clone();
        flags[9] = 0xff;
        std::fs::write(&p, &flags).unwrap();
        assert!(read_semf(&p).is_err());

        // Nonzero reserved word.
        let mut reserved = good;
        reserved[12] = 1;
        std::fs::write(&p, &reserved).unwrap();
        assert!(read_semf(&p).is_err());
    }

    #[test]
    fn missing_file_is_an_io_error() {
        let err = read_semf(Path::new("/nonexistent/nowhere.semf")).unwrap_err();
        assert!(matches!(err, Error::Io { .. }));
    }
}
