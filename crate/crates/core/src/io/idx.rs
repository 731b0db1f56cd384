//! MNIST idx files: a big-endian `u32` magic (`0x00000803` for `u8` images,
//! `0x00000801` for `u8` labels), one big-endian `u32` per dimension, then the
//! raw bytes.

use std::path::Path;

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::io::bytes::{read_file, Cursor};
use crate::scalar::Scalar;

pub const IMAGES_MAGIC: u32 = 0x0000_0803;
pub const LABELS_MAGIC: u32 = 0x0000_0801;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct IdxOptions {
    /// Scale each image to unit Euclidean norm after the 1/255 pixel scaling.
    pub normalize: bool,
}

/// Parsed image file: `count` images of `rows * cols` pixels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IdxImages {
    pub count: usize,
    pub rows: usize,
    pub cols: usize,
    pub pixels: Vec<u8>,
}

fn magic(cur: &mut Cursor<'_>, expected: u32, what: &'static str) -> Result<()> {
    let found = cur.u32_be("magic number")?;
    if found != expected {
        return Err(Error::BadMagic {
            what,
            expected: format!("{expected:#010x}"),
            found: format!("{found:#010x}"),
        });
    }
    Ok(())
}

pub fn parse_images(bytes: &[u8]) -> Result<IdxImages> {
    let mut cur = Cursor::new(bytes);
    magic(&mut cur, IMAGES_MAGIC, "idx image file")?;
    let count = cur.u32_be("image count")? as usize;
    let rows = cur.u32_be("row count")? as usize;
    let cols = cur.u32_be("column count")? as usize;
    let total = count
        .checked_mul(rows)
        .and_then(|v| v.checked_mul(cols))
        .ok_or_else(|| Error::Corrupt("image dimensions overflow".into()))?;
    let pixels = cur.take(total, "pixel data")?.to_vec();
    Ok(IdxImages {
        count,
        rows,
        cols,
        pixels,
    })
}

pub fn parse_labels(bytes: &[u8]) -> Result<Vec<u8>> {
    let mut cur = Cursor::new(bytes);
    magic(&mut cur, LABELS_MAGIC, "idx label file")?;
    let count = cur.u32_be("label count")? as usize;
    Ok(cur.take(count, "label data")?.to_vec())
}

impl IdxImages {
    /// Pixels scaled by 1/255, optionally normalized per image.
    pub fn into_dataset<T: Scalar>(self, opts: IdxOptions) -> Result<Dataset<T>> {
        let dim = self.rows * self.cols;
        let data = self
            .pixels
            .iter()
            .map(|&p| T::from_f64_nearest(f64::from(p) / 255.0))
            .collect();
        let ds = Dataset::from_flat(dim, data)?;
        if opts.normalize {
            ds.normalized()
        } else {
            Ok(ds)
        }
    }
}

/// Loads an idx image file and, optionally, its label file.
pub fn load_idx<T: Scalar>(images: impl AsRef<Path>, labels: Option<&Path>, opts: IdxOptions) -> Result<Dataset<T>> {
    let parsed = parse_images(&read_file(images.as_ref())?)?;
    let labels = match labels {
        Some(p) => {
            let l = parse_labels(&read_file(p)?)?;
            if l.len() != parsed.count {
                return Err(Error::CountMismatch {
                    images: parsed.count,
                    labels: l.len(),
                });
            }
            Some(l)
        }
        None => None,
    };
    let ds = parsed.into_dataset(opts)?;
    match labels {
        Some(l) => ds.with_labels(l),
        None => Ok(ds),
    }
}

/// Encodes images in idx layout.
pub fn encode_images(count: u32, rows: u32, cols: u32, pixels: &[u8]) -> Vec<u8> {
    let mut out = Vec::with_capacity(16 + pixels.len());
    for v in [IMAGES_MAGIC, count, rows, cols] {
        out.extend_from_slice(&v.to_be_bytes());
    }
    out.extend_from_slice(pixels);
    out
}

pub fn encode_labels(labels: &[u8]) -> Vec<u8> {
    let mut out = Vec::with_capacity(8 + labels.len());
    out.extend_from_slice(&LABELS_MAGIC.to_be_bytes());
    out.extend_from_slice(&(labels.len() as u32).to_be_bytes());
    out.extend_from_slice(labels);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_tiny_image_file() {
        let bytes = encode_images(2, 2, 2, &[0, 255, 51, 0, 1, 2, 3, 4]);
        assert_eq!(&bytes[..4], &[0, 0, 8, 3]);
        let img = parse_images(&bytes).unwrap();
        assert_eq!((img.count, img.rows, img.cols), (2, 2, 2));
        let ds: Dataset<f32> = img.clone().into_dataset(IdxOptions::default()).unwrap();
        assert_eq!(ds.len(), 2);
        assert_eq!(ds.dim(), 4);
        assert_eq!(ds.point(0), &[0.0, 1.0, 0.2, 0.0]);
        let n: Dataset<f64> = img.into_dataset(IdxOptions { normalize: true }).unwrap();
        let norm: f64 = n.point(1).iter().map(|x| x * x).sum();
        assert!((norm - 1.0).abs() < 1e-12);
    }

    #[test]
    fn error_paths() {
        let mut bad = encode_images(1, 1, 1, &[7]);
        bad[3] = 0x01;
        assert!(matches!(parse_images(&bad), Err(Error::BadMagic { .. })));

        let short = &encode_images(1, 28, 28, &[0; 784])[..10];
        match parse_images(short) {
            Err(Error::Truncated { field }) => assert_eq!(field, "row count"),
            other => panic!("{other:?}"),
        }
        let short = &encode_images(2, 2, 2, &[0; 8])[..20];
        assert!(matches!(parse_images(short), Err(Error::Truncated { field }) if field == "pixel data"));
        assert!(matches!(
            parse_labels(&encode_labels(&[1, 2])[..9]),
            Err(Error::Truncated { .. })
        ));
        assert!(matches!(
            parse_labels(&encode_images(1, 1, 1, &[0])),
            Err(Error::BadMagic { .. })
        ));
    }

    #[test]
    fn label_count_must_match() {
        let dir = tempfile::tempdir().unwrap();
        let img = dir.path().join("img");
        let lab = dir.path().join("lab");
        std::fs::write(&img, encode_images(3, 1, 2, &[1, 2, 3, 4, 5, 6])).unwrap();
        std::fs::write(&lab, encode_labels(&[1, 2])).unwrap();
        assert!(matches!(
            load_idx::<f32>(&img, Some(&lab), IdxOptions::default()),
            Err(Error::CountMismatch { images: 3, labels: 2 })
        ));
        std::fs::write(&lab, encode_labels(&[1, 2, 9])).unwrap();
        let ds = load_idx::<f32>(&img, Some(&lab), IdxOptions::default()).unwrap();
        assert_eq!(ds.labels(), Some(&[1, 2, 9][..]));
        assert!(matches!(
            load_idx::<f32>(dir.path().join("missing"), None, IdxOptions::default()),
            Err(Error::Io { .. })
        ));
    }
}
