//! Forest index files. All integers little-endian.
//!
//! ```text
//! magic         8 bytes "RPFINDEX"
//! version       u32     1
//! scalar_bytes  u32     4 (f32) or 8 (f64)
//! trees         u32     L
//! split_ratio   f64     r
//! capacity      u32     C
//! proj_dims     u32     K
//! seed          u64
//! dataset_hash  u64     Dataset::content_hash of the indexed data
//! points        u64     N
//! dim           u32     d
//! per tree:
//!   index       u32
//!   node_count  u32
//!   test_count  u32
//!   id_count    u32
//!   nodes       node_count x (tag u8, a u32, b u32, c u32)
//!               tag 0 = leaf (start, len, cap); tag 1 = split (test, left, right)
//!   tests       test_count x (K x u32 coordinate, K x scalar weight,
//!                             scalar threshold, u32 tie id or 0xFFFFFFFF)
//!   ids         id_count x u32
//! checksum      u64     FNV-1a of every preceding byte
//! ```
//!
//! Only point ids are stored; vectors come from the dataset the index is
//! loaded against.

use std::path::Path;
use std::sync::Arc;

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::forest::tree::{Node, PartitionTree};
use crate::forest::{Forest, ForestParams};
use crate::io::bytes::{check_magic, put_f64, put_u32, put_u64, read_file, write_file, Cursor};
use crate::io::hash::fnv1a;
use crate::scalar::Scalar;

pub const INDEX_MAGIC: &[u8; 8] = b"RPFINDEX";
pub const INDEX_VERSION: u32 = 1;

/// Everything in an index file that can be read without the dataset.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IndexHeader {
    pub version: u32,
    pub scalar_bytes: usize,
    pub params: ForestParams,
    pub dataset_hash: u64,
    pub points: u64,
    pub dim: usize,
}

pub fn encode_index<T: Scalar>(forest: &Forest<T>) -> Vec<u8> {
    let p = forest.params();
    let ds = forest.dataset();
    let mut out = Vec::new();
    out.extend_from_slice(INDEX_MAGIC);
    put_u32(&mut out, INDEX_VERSION);
    put_u32(&mut out, T::BYTES as u32);
    put_u32(&mut out, p.trees as u32);
    put_f64(&mut out, p.split_ratio);
    put_u32(&mut out, p.capacity as u32);
    put_u32(&mut out, p.proj_dims as u32);
    put_u64(&mut out, p.seed);
    put_u64(&mut out, ds.content_hash());
    put_u64(&mut out, ds.len() as u64);
    put_u32(&mut out, ds.dim() as u32);

    for tree in forest.trees() {
        put_u32(&mut out, tree.index);
        put_u32(&mut out, tree.nodes.len() as u32);
        put_u32(&mut out, tree.thresholds.len() as u32);
        put_u32(&mut out, tree.ids.len() as u32);
        for node in &tree.nodes {
            let (tag, a, b, c) = match *node {
                Node::Leaf { start, len, cap } => (0u8, start, len, cap),
                Node::Split { test, left, right } => (1u8, test, left, right),
            };
            out.push(tag);
            for v in [a, b, c] {
                put_u32(&mut out, v);
            }
        }
        let k = tree.proj_dims;
        for t in 0..tree.thresholds.len() {
            for &i in &tree.test_indices[t * k..(t + 1) * k] {
                put_u32(&mut out, i);
            }
            for &c in &tree.test_coefficients[t * k..(t + 1) * k] {
                c.write_le(&mut out);
            }
            tree.thresholds[t].write_le(&mut out);
            put_u32(&mut out, tree.ties[t]);
        }
        for &id in &tree.ids {
            put_u32(&mut out, id);
        }
    }
    let sum = fnv1a(&out);
    put_u64(&mut out, sum);
    out
}

fn parse_header(cur: &mut Cursor<'_>) -> Result<IndexHeader> {
    check_magic(cur.take(8, "magic")?, INDEX_MAGIC, "index file")?;
    let version = cur.u32("version")?;
    if version != INDEX_VERSION {
        return Err(Error::UnsupportedVersion {
            found: version,
            supported: INDEX_VERSION,
        });
    }
    let scalar_bytes = cur.u32("scalar width")? as usize;
    let params = ForestParams {
        trees: cur.u32("tree count")? as usize,
        split_ratio: cur.f64("split ratio")?,
        capacity: cur.u32("capacity")? as usize,
        proj_dims: cur.u32("projection size")? as usize,
        seed: cur.u64("seed")?,
    };
    Ok(IndexHeader {
        version,
        scalar_bytes,
        params,
        dataset_hash: cur.u64("dataset hash")?,
        points: cur.u64("point count")?,
        dim: cur.u32("dimension")? as usize,
    })
}

/// Reads only the header.
pub fn read_index_header(path: impl AsRef<Path>) -> Result<IndexHeader> {
    let bytes = read_file(path.as_ref())?;
    parse_header(&mut Cursor::new(&bytes))
}

fn verify_checksum(bytes: &[u8]) -> Result<&[u8]> {
    if bytes.len() < 8 {
        return Err(Error::Truncated {
            field: "checksum".into(),
        });
    }
    let (body, tail) = bytes.split_at(bytes.len() - 8);
    let stored = u64::from_le_bytes(tail.try_into().unwrap());
    if fnv1a(body) != stored {
        return Err(Error::Corrupt("checksum mismatch".into()));
    }
    Ok(body)
}

fn read_count(cur: &mut Cursor<'_>, field: &str, unit: usize) -> Result<usize> {
    let n = cur.u32(field)? as usize;
    if n.saturating_mul(unit) > cur.remaining() {
        return Err(Error::Truncated {
            field: field.to_string(),
        });
    }
    Ok(n)
}

pub fn decode_index<T: Scalar>(bytes: &[u8], dataset: Arc<Dataset<T>>) -> Result<Forest<T>> {
    // header errors (magic, version) take precedence over the checksum
    let header = parse_header(&mut Cursor::new(bytes))?;
    let body = verify_checksum(bytes)?;
    let mut cur = Cursor::new(body);
    parse_header(&mut cur)?;

    if header.scalar_bytes != T::BYTES {
        return Err(Error::ScalarWidthMismatch {
            expected: T::BYTES,
            found: header.scalar_bytes,
        });
    }
    if header.dim != dataset.dim() {
        return Err(Error::DimensionMismatch {
            expected: header.dim,
            found: dataset.dim(),
        });
    }
    let found = dataset.content_hash();
    if header.dataset_hash != found || header.points != dataset.len() as u64 {
        return Err(Error::HashMismatch {
            expected: header.dataset_hash,
            found,
        });
    }
    let params = header.params;
    params
        .validate_for_dim(dataset.dim())
        .map_err(|e| Error::Corrupt(format!("stored params: {e}")))?;

    let k = params.proj_dims;
    let test_bytes = k * 4 + k * T::BYTES + T::BYTES + 4;
    let mut trees = Vec::with_capacity(params.trees);
    for _ in 0..params.trees {
        let index = cur.u32("tree index")?;
        let node_count = read_count(&mut cur, "node count", 13)?;
        let test_count = read_count(&mut cur, "test count", test_bytes)?;
        let id_count = read_count(&mut cur, "id count", 4)?;
        let mut tree = PartitionTree::<T>::new(index, params.seed, k);
        tree.nodes.clear();
        for _ in 0..node_count {
            let tag = cur.u8("node tag")?;
            let (a, b, c) = (cur.u32("node")?, cur.u32("node")?, cur.u32("node")?);
            tree.nodes.push(match tag {
                0 => Node::Leaf {
                    start: a,
                    len: b,
                    cap: c,
                },
                1 => {
                    if b as usize >= node_count || c as usize >= node_count {
                        return Err(Error::Corrupt(format!("child index out of range in tree {index}")));
                    }
                    Node::Split {
                        test: a,
                        left: b,
                        right: c,
                    }
                }
                t => return Err(Error::Corrupt(format!("unknown node tag {t}"))),
            });
        }
        if tree.nodes.is_empty() {
            return Err(Error::Corrupt(format!("tree {index} has no nodes")));
        }
        for _ in 0..test_count {
            for _ in 0..k {
                tree.test_indices.push(cur.u32("test coordinate")?);
            }
            for _ in 0..k {
                tree.test_coefficients.push(cur.scalar("test weight")?);
            }
            tree.thresholds.push(cur.scalar("test threshold")?);
            tree.ties.push(cur.u32("test tie id")?);
        }
        tree.ids.reserve_exact(id_count);
        for _ in 0..id_count {
            tree.ids.push(cur.u32("point id")?);
        }
        trees.push(tree);
    }
    if cur.remaining() != 0 {
        return Err(Error::Corrupt(format!("{} trailing bytes", cur.remaining())));
    }
    Forest::from_parts(params, dataset, trees)
}

pub fn save_index<T: Scalar>(path: impl AsRef<Path>, forest: &Forest<T>) -> Result<()> {
    write_file(path.as_ref(), &encode_index(forest))
}

/// Loads an index and binds it to `dataset`, which must be the data it was
/// built over (checked by content hash).
pub fn load_index<T: Scalar>(path: impl AsRef<Path>, dataset: impl Into<Arc<Dataset<T>>>) -> Result<Forest<T>> {
    decode_index(&read_file(path.as_ref())?, dataset.into())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use rand::Rng;

    fn forest(n: usize, seed: u64) -> Forest<f32> {
        let mut r = rng::stream(seed, &[]);
        let ds = Dataset::from_flat(5, (0..n * 5).map(|_| r.gen::<f32>()).collect()).unwrap();
        Forest::build(ds, ForestParams::new(4).with_proj_dims(2).with_seed(seed)).unwrap()
    }

    #[test]
    fn roundtrip_preserves_trees() {
        let f = forest(300, 1);
        let bytes = encode_index(&f);
        let g = decode_index(&bytes, f.shared_dataset().clone()).unwrap();
        assert_eq!(f.trees(), g.trees());
        assert_eq!(f.params(), g.params());
        assert_eq!(encode_index(&g), bytes);
    }

    #[test]
    fn distinct_errors() {
        let f = forest(200, 2);
        let ds = f.shared_dataset().clone();
        let bytes = encode_index(&f);

        let other = forest(200, 3).shared_dataset().clone();
        assert!(matches!(decode_index(&bytes, other), Err(Error::HashMismatch { .. })));

        let mut v = bytes.clone();
        v[8] = 9;
        assert!(matches!(
            decode_index(&v, ds.clone()),
            Err(Error::UnsupportedVersion { found: 9, .. })
        ));

        let mut flipped = bytes.clone();
        let mid = bytes.len() / 2;
        flipped[mid] ^= 0x40;
        assert!(matches!(decode_index(&flipped, ds.clone()), Err(Error::Corrupt(_))));

        assert!(matches!(
            decode_index(&bytes[..bytes.len() - 20], ds.clone()),
            Err(Error::Corrupt(_))
        ));

        let f64_ds =
            Arc::new(Dataset::<f64>::from_flat(5, ds.as_flat().iter().map(|&x| f64::from(x)).collect()).unwrap());
        assert!(matches!(
            decode_index(&bytes, f64_ds),
            Err(Error::ScalarWidthMismatch { expected: 8, found: 4 })
        ));
    }

    #[test]
    fn corrupt_structure_with_valid_checksum_is_rejected() {
        let f = forest(200, 4);
        let mut bytes = encode_index(&f);
        bytes.truncate(bytes.len() - 8);
        // overwrite the last stored point id with an out-of-range value
        let n = bytes.len();
        bytes[n - 4..].copy_from_slice(&u32::MAX.to_le_bytes());
        let sum = fnv1a(&bytes);
        bytes.extend_from_slice(&sum.to_le_bytes());
        assert!(matches!(
            decode_index(&bytes, f.shared_dataset().clone()),
            Err(Error::Corrupt(_))
        ));
    }

    #[test]
    fn header_is_self_describing() {
        let f = forest(100, 5);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("f.rpf");
        save_index(&path, &f).unwrap();
        let h = read_index_header(&path).unwrap();
        assert_eq!(h.params, *f.params());
        assert_eq!(h.points, 100);
        assert_eq!(h.dim, 5);
        assert_eq!(h.scalar_bytes, 4);
        assert_eq!(h.dataset_hash, f.dataset().content_hash());
    }
}
