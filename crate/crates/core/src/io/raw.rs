//! Raw dataset files.
//!
//! ```text
//! magic    8 bytes  "RPFDATA\0"
//! version  u32 LE   1
//! n        u32 LE   number of points
//! d        u32 LE   dimension
//! data     n*d f32 LE, row-major
//! ```

use std::path::Path;

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::io::bytes::{check_magic, put_u32, read_file, write_file, Cursor};
use crate::scalar::Scalar;

pub const RAW_MAGIC: &[u8; 8] = b"RPFDATA\0";
pub const RAW_VERSION: u32 = 1;

/// Encodes a dataset. Components are stored as `f32`; an `f64` dataset is
/// rounded to nearest.
pub fn encode_raw<T: Scalar>(dataset: &Dataset<T>) -> Result<Vec<u8>> {
    if dataset.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let n = u32::try_from(dataset.len()).map_err(|_| Error::param("dataset", "too many points"))?;
    let d = u32::try_from(dataset.dim()).map_err(|_| Error::param("dataset", "dimension too large"))?;
    let mut out = Vec::with_capacity(20 + 4 * dataset.as_flat().len());
    out.extend_from_slice(RAW_MAGIC);
    put_u32(&mut out, RAW_VERSION);
    put_u32(&mut out, n);
    put_u32(&mut out, d);
    for x in dataset.as_flat() {
        let v = x.to_f32().unwrap_or(f32::NAN);
        out.extend_from_slice(&v.to_le_bytes());
    }
    Ok(out)
}

/// Decodes a raw file, optionally requiring dimension `expected_dim`.
pub fn decode_raw<T: Scalar>(bytes: &[u8], expected_dim: Option<usize>) -> Result<Dataset<T>> {
    let mut cur = Cursor::new(bytes);
    check_magic(cur.take(8, "magic")?, RAW_MAGIC, "raw dataset")?;
    let version = cur.u32("version")?;
    if version != RAW_VERSION {
        return Err(Error::UnsupportedVersion {
            found: version,
            supported: RAW_VERSION,
        });
    }
    let n = cur.u32("point count")? as u64;
    let d = cur.u32("dimension")? as u64;
    if let Some(expected) = expected_dim {
        if expected as u64 != d {
            return Err(Error::DimensionMismatch {
                expected,
                found: d as usize,
            });
        }
    }
    if n == 0 || d == 0 {
        return Err(Error::EmptyDataset);
    }
    let payload = n * d * 4;
    if cur.remaining() as u64 != payload {
        return Err(Error::SizeMismatch {
            what: "raw payload bytes",
            expected: payload,
            found: cur.remaining() as u64,
        });
    }
    let body = cur.take(payload as usize, "components")?;
    let mut data = Vec::with_capacity((n * d) as usize);
    for (i, chunk) in body.chunks_exact(4).enumerate() {
        let v = f32::from_le_bytes(chunk.try_into().unwrap());
        if !v.is_finite() {
            return Err(Error::NonFinite {
                row: i / d as usize,
                col: i % d as usize,
            });
        }
        data.push(T::from_f64_nearest(f64::from(v)));
    }
    Dataset::from_flat(d as usize, data)
}

pub fn save_raw<T: Scalar>(path: impl AsRef<Path>, dataset: &Dataset<T>) -> Result<()> {
    write_file(path.as_ref(), &encode_raw(dataset)?)
}

pub fn load_raw<T: Scalar>(path: impl AsRef<Path>, expected_dim: Option<usize>) -> Result<Dataset<T>> {
    decode_raw(&read_file(path.as_ref())?, expected_dim)
}
