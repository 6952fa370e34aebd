//! IDX containers as used by the MNIST distribution.
//!
//! Images: magic `0x00000803`, then count, rows and cols as big-endian
//! `u32`, then `count * rows * cols` pixel bytes. Labels: magic
//! `0x00000801`, count, then `count` label bytes.

use std::path::Path;

use crate::error::{Error, Result};

pub const IMAGE_MAGIC: u32 = 0x0000_0803;
pub const LABEL_MAGIC: u32 = 0x0000_0801;
/// Largest label value accepted from an MNIST label file.
pub const MAX_LABEL: u8 = 9;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IdxImages {
    pub count: usize,
    pub rows: usize,
    pub cols: usize,
    /// Row-major pixels, image after image.
    pub pixels: Vec<u8>,
}

impl IdxImages {
    pub fn pixels_per_image(&self) -> usize {
        self.rows * self.cols
    }

    pub fn image(&self, index: usize) -> &[u8] {
        let n = self.pixels_per_image();
        &self.pixels[index * n..(index + 1) * n]
    }
}

fn header(bytes: &[u8], words: usize) -> Result<Vec<u32>> {
    let need = words * 4;
    if bytes.len() < need {
        return Err(Error::Length {
            expected: need,
            found: bytes.len(),
        });
    }
    Ok(bytes[..need]
        .chunks_exact(4)
        .map(|c| u32::from_be_bytes(c.try_into().expect("4 bytes")))
        .collect())
}

fn check_payload(bytes: &[u8], offset: usize, payload: usize) -> Result<()> {
    let expected = offset
        .checked_add(payload)
        .ok_or_else(|| Error::Format("declared size overflows".into()))?;
    if bytes.len() < expected {
        return Err(Error::Length {
            expected,
            found: bytes.len(),
        });
    }
    if bytes.len() > expected {
        return Err(Error::Format(format!(
            "{} trailing bytes after payload",
            bytes.len() - expected
        )));
    }
    Ok(())
}

pub fn parse_idx_images(bytes: &[u8]) -> Result<IdxImages> {
    let h = header(bytes, 4)?;
    if h[0] != IMAGE_MAGIC {
        return Err(Error::Format(format!(
            "image magic 0x{:08x}, expected 0x{IMAGE_MAGIC:08x}",
            h[0]
        )));
    }
    let (count, rows, cols) = (h[1] as usize, h[2] as usize, h[3] as usize);
    let payload = count
        .checked_mul(rows)
        .and_then(|v| v.checked_mul(cols))
        .ok_or_else(|| Error::Format("declared size overflows".into()))?;
    check_payload(bytes, 16, payload)?;
    Ok(IdxImages {
        count,
        rows,
        cols,
        pixels: bytes[16..].to_vec(),
    })
}

pub fn encode_idx_images(images: &IdxImages) -> Vec<u8> {
    let mut out = Vec::with_capacity(16 + images.pixels.len());
    for word in [
        IMAGE_MAGIC,
        images.count as u32,
        images.rows as u32,
        images.cols as u32,
    ] {
        out.extend_from_slice(&word.to_be_bytes());
    }
    out.extend_from_slice(&images.pixels);
    out
}

pub fn parse_idx_labels(bytes: &[u8]) -> Result<Vec<u8>> {
    let h = header(bytes, 2)?;
    if h[0] != LABEL_MAGIC {
        return Err(Error::Format(format!(
            "label magic 0x{:08x}, expected 0x{LABEL_MAGIC:08x}",
            h[0]
        )));
    }
    check_payload(bytes, 8, h[1] as usize)?;
    let labels = bytes[8..].to_vec();
    if let Some(row) = labels.iter().position(|l| *l > MAX_LABEL) {
        return Err(Error::LabelRange {
            row,
            label: labels[row] as usize,
            classes: MAX_LABEL as usize + 1,
        });
    }
    Ok(labels)
}

pub fn encode_idx_labels(labels: &[u8]) -> Vec<u8> {
    let mut out = Vec::with_capacity(8 + labels.len());
    out.extend_from_slice(&LABEL_MAGIC.to_be_bytes());
    out.extend_from_slice(&(labels.len() as u32).to_be_bytes());
    out.extend_from_slice(labels);
    out
}

pub fn load_idx_images(path: &Path) -> Result<IdxImages> {
    parse_idx_images(&std::fs::read(path)?)
}

pub fn load_idx_labels(path: &Path) -> Result<Vec<u8>> {
    parse_idx_labels(&std::fs::read(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn two_images() -> IdxImages {
        IdxImages {
            count: 2,
            rows: 2,
            cols: 3,
            pixels: vec![0, 255, 7, 8, 9, 10, 11, 12, 13, 14, 15, 16],
        }
    }

    #[test]
    fn image_fixture_round_trip() {
        let bytes = encode_idx_images(&two_images());
        assert_eq!(&bytes[..4], &[0, 0, 8, 3]);
        let parsed = parse_idx_images(&bytes).unwrap();
        assert_eq!(parsed, two_images());
        assert_eq!(parsed.image(1), &[11, 12, 13, 14, 15, 16]);
        assert_eq!(encode_idx_images(&parsed), bytes);
    }

    #[test]
    fn image_loader_rejects_label_magic() {
        let bytes = encode_idx_labels(&[1, 2, 3]);
        assert!(matches!(parse_idx_images(&bytes), Err(Error::Length { .. } | Error::Format(_))));
        let mut padded = bytes.clone();
        padded.extend_from_slice(&[0; 16]);
        assert!(matches!(parse_idx_images(&padded), Err(Error::Format(_))));
    }

    #[test]
    fn truncated_payload() {
        let bytes = encode_idx_images(&two_images());
        assert!(matches!(
            parse_idx_images(&bytes[..bytes.len() - 1]),
            Err(Error::Length { expected: 28, found: 27 })
        ));
        assert!(matches!(parse_idx_images(&bytes[..10]), Err(Error::Length { .. })));
    }

    #[test]
    fn labels_checked() {
        let bytes = encode_idx_labels(&[0, 9, 4]);
        assert_eq!(parse_idx_labels(&bytes).unwrap(), vec![0, 9, 4]);
        let bad = encode_idx_labels(&[1, 12]);
        assert!(matches!(parse_idx_labels(&bad), Err(Error::LabelRange { row: 1, label: 12, .. })));
        let mut wrong_magic = bytes;
        wrong_magic[3] = 3;
        assert!(matches!(parse_idx_labels(&wrong_magic), Err(Error::Format(_))));
    }

    #[test]
    fn files_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("images");
        std::fs::write(&path, encode_idx_images(&two_images())).unwrap();
        assert_eq!(load_idx_images(&path).unwrap(), two_images());
        let path = dir.path().join("labels");
        std::fs::write(&path, encode_idx_labels(&[3, 1])).unwrap();
        assert_eq!(load_idx_labels(&path).unwrap(), vec![3, 1]);
    }

    proptest! {
        #[test]
        fn reserialization_is_bit_exact(count in 0usize..5, rows in 1usize..4, cols in 1usize..4, seed in any::<u8>()) {
            let pixels = (0..count * rows * cols).map(|i| (i as u8).wrapping_mul(31).wrapping_add(seed)).collect();
            let bytes = encode_idx_images(&IdxImages { count, rows, cols, pixels });
            prop_assert_eq!(encode_idx_images(&parse_idx_images(&bytes).unwrap()), bytes);
        }
    }
}
