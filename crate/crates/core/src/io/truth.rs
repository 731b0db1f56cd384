//! Ground-truth tables: the exact neighbors of every query.
//!
//! ```text
//! magic    8 bytes "RPFTRUTH"
//! version  u32     1
//! key      u64     GroundTruth::cache_key of (dataset, queries, metric, k)
//! queries  u32
//! k        u32     neighbors per query
//! rows     queries x k x (id u32, distance f64)
//! ```

use std::path::Path;

use crate::error::{Error, Result};
use crate::eval::GroundTruth;
use crate::io::bytes::{check_magic, put_f64, put_u32, put_u64, read_file, write_file, Cursor};
use crate::search::Neighbor;

pub const TRUTH_MAGIC: &[u8; 8] = b"RPFTRUTH";
pub const TRUTH_VERSION: u32 = 1;

pub fn encode_truth(truth: &GroundTruth) -> Vec<u8> {
    let mut out = Vec::with_capacity(28 + truth.rows().len() * truth.k() * 12);
    out.extend_from_slice(TRUTH_MAGIC);
    put_u32(&mut out, TRUTH_VERSION);
    put_u64(&mut out, truth.key());
    put_u32(&mut out, truth.rows().len() as u32);
    put_u32(&mut out, truth.k() as u32);
    for row in truth.rows() {
        for n in row {
            put_u32(&mut out, n.id);
            put_f64(&mut out, n.distance);
        }
    }
    out
}

pub fn decode_truth(bytes: &[u8]) -> Result<GroundTruth> {
    let mut cur = Cursor::new(bytes);
    check_magic(cur.take(8, "magic")?, TRUTH_MAGIC, "ground-truth file")?;
    let version = cur.u32("version")?;
    if version != TRUTH_VERSION {
        return Err(Error::UnsupportedVersion {
            found: version,
            supported: TRUTH_VERSION,
        });
    }
    let key = cur.u64("cache key")?;
    let queries = cur.u32("query count")? as usize;
    let k = cur.u32("neighbors per query")? as usize;
    let expected = queries as u64 * k as u64 * 12;
    if cur.remaining() as u64 != expected {
        return Err(Error::SizeMismatch {
            what: "ground-truth rows",
            expected,
            found: cur.remaining() as u64,
        });
    }
    let mut rows = Vec::with_capacity(queries);
    for _ in 0..queries {
        let mut row = Vec::with_capacity(k);
        for _ in 0..k {
            row.push(Neighbor {
                id: cur.u32("neighbor id")?,
                distance: cur.f64("neighbor distance")?,
            });
        }
        rows.push(row);
    }
    GroundTruth::from_rows(key, k, rows)
}

pub fn save_truth(path: impl AsRef<Path>, truth: &GroundTruth) -> Result<()> {
    write_file(path.as_ref(), &encode_truth(truth))
}

pub fn load_truth(path: impl AsRef<Path>) -> Result<GroundTruth> {
    decode_truth(&read_file(path.as_ref())?)
}
