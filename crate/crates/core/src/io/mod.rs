//! File formats: MNIST idx input, raw float datasets, forest indexes and
//! ground-truth tables. The idx reader is big-endian as the format requires;
//! every format defined here is little-endian and starts with an 8-byte magic
//! followed by a `u32` version.

mod bytes;
pub mod hash;
pub mod idx;
pub mod index;
pub mod raw;
pub mod truth;

pub use idx::{load_idx, IdxOptions};
pub use index::{load_index, read_index_header, save_index, IndexHeader};
pub use raw::{load_raw, save_raw};
pub use truth::{load_truth, save_truth};
