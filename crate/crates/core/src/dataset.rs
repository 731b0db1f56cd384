use std::ops::Deref;

use crate::error::{Error, Result};
use crate::metric::normalize_in_place;
use crate::scalar::Scalar;

/// Index of a point in its dataset. Ids are dense, `0..len`.
pub type PointId = u32;

/// A finite, non-empty feature vector.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector<T>(Vec<T>);

impl<T: Scalar> FeatureVector<T> {
    pub fn new(components: Vec<T>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::EmptyDataset);
        }
        check_finite(&components, 0)?;
        Ok(FeatureVector(components))
    }

    pub fn as_slice(&self) -> &[T] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<T> {
        self.0
    }
}

impl<T> Deref for FeatureVector<T> {
    type Target = [T];

    fn deref(&self) -> &[T] {
        &self.0
    }
}

impl<T> AsRef<[T]> for FeatureVector<T> {
    fn as_ref(&self) -> &[T] {
        &self.0
    }
}

fn check_finite<T: Scalar>(values: &[T], first_row: usize) -> Result<()> {
    check_finite_rows(values, values.len().max(1), first_row)
}

fn check_finite_rows<T: Scalar>(values: &[T], dim: usize, first_row: usize) -> Result<()> {
    match values.iter().position(|x| !x.is_finite()) {
        Some(i) => Err(Error::NonFinite {
            row: first_row + i / dim,
            col: i % dim,
        }),
        None => Ok(()),
    }
}

/// `N >= 1` points of a common dimension `d >= 1`, stored row-major.
///
/// Point ids are row indices and never change. The only way to grow a
/// dataset after construction is through [`crate::Forest::insert`].
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset<T> {
    data: Vec<T>,
    dim: usize,
    labels: Option<Vec<u8>>,
    nonnegative: bool,
}

impl<T: Scalar> Dataset<T> {
    /// Builds a dataset from a row-major buffer of `data.len() / dim` rows.
    pub fn from_flat(dim: usize, data: Vec<T>) -> Result<Self> {
        if dim == 0 || data.is_empty() {
            return Err(Error::EmptyDataset);
        }
        if data.len() % dim != 0 {
            return Err(Error::SizeMismatch {
                what: "row-major buffer",
                expected: (data.len() / dim * dim) as u64,
                found: data.len() as u64,
            });
        }
        if data.len() / dim > PointId::MAX as usize {
            return Err(Error::param("dataset", "more points than the id space holds"));
        }
        check_finite_rows(&data, dim, 0)?;
        let nonnegative = data.iter().all(|x| *x >= T::zero());
        Ok(Dataset {
            data,
            dim,
            labels: None,
            nonnegative,
        })
    }

    pub fn from_rows<I, V>(rows: I) -> Result<Self>
    where
        I: IntoIterator<Item = V>,
        V: AsRef<[T]>,
    {
        let mut data = Vec::new();
        let mut dim = None;
        for (i, row) in rows.into_iter().enumerate() {
            let row = row.as_ref();
            match dim {
                None => dim = Some(row.len()),
                Some(d) if d != row.len() => {
                    return Err(Error::DimensionMismatch {
                        expected: d,
                        found: row.len(),
                    })
                }
                Some(_) => {}
            }
            check_finite(row, i)?;
            data.extend_from_slice(row);
        }
        Self::from_flat(dim.unwrap_or(0), data)
    }

    /// Attaches one label per point.
    pub fn with_labels(mut self, labels: Vec<u8>) -> Result<Self> {
        if labels.len() != self.len() {
            return Err(Error::CountMismatch {
                images: self.len(),
                labels: labels.len(),
            });
        }
        self.labels = Some(labels);
        Ok(self)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.data.len() / self.dim
    }

    /// Always false: a dataset holds at least one point.
    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn point(&self, id: PointId) -> &[T] {
        let start = id as usize * self.dim;
        &self.data[start..start + self.dim]
    }

    pub fn points(&self) -> impl ExactSizeIterator<Item = &[T]> + '_ {
        self.data.chunks_exact(self.dim)
    }

    pub fn as_flat(&self) -> &[T] {
        &self.data
    }

    pub fn labels(&self) -> Option<&[u8]> {
        self.labels.as_deref()
    }

    /// True when every component is `>= 0` (the chi-square domain).
    pub fn is_nonnegative(&self) -> bool {
        self.nonnegative
    }

    pub fn check_query(&self, q: &[T]) -> Result<()> {
        if q.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: q.len(),
            });
        }
        check_finite(q, 0)
    }

    /// Copy with every row scaled to unit Euclidean norm.
    pub fn normalized(&self) -> Result<Self> {
        let mut out = self.clone();
        for row in out.data.chunks_exact_mut(self.dim) {
            normalize_in_place(row)?;
        }
        Ok(out)
    }

    /// Copy with every component multiplied by `factor`.
    pub fn scaled(&self, factor: T) -> Result<Self> {
        let data = self.data.iter().map(|x| *x * factor).collect();
        let mut out = Self::from_flat(self.dim, data)?;
        out.labels = self.labels.clone();
        Ok(out)
    }

    /// Copy of the rows with the given ids, in order.
    pub fn subset(&self, ids: &[PointId]) -> Result<Self> {
        let mut data = Vec::with_capacity(ids.len() * self.dim);
        for &id in ids {
            data.extend_from_slice(self.point(id));
        }
        let mut out = Self::from_flat(self.dim, data)?;
        if let Some(labels) = &self.labels {
            out.labels = Some(ids.iter().map(|&i| labels[i as usize]).collect());
        }
        Ok(out)
    }

    /// FNV-1a 64 over the little-endian component bytes, seeded with the
    /// shape and the scalar width.
    pub fn content_hash(&self) -> u64 {
        let mut h = crate::io::hash::Fnv1a::new();
        h.write_u64(self.len() as u64);
        h.write_u64(self.dim as u64);
        h.write_u64(T::BYTES as u64);
        let mut buf = Vec::with_capacity(T::BYTES);
        for x in &self.data {
            buf.clear();
            x.write_le(&mut buf);
            h.write(&buf);
        }
        h.finish()
    }

    pub(crate) fn push(&mut self, v: &[T]) -> Result<PointId> {
        self.check_query(v)?;
        if self.labels.is_some() {
            return Err(Error::param(
                "insert",
                "cannot append an unlabeled point to a labeled dataset",
            ));
        }
        let id = PointId::try_from(self.len()).map_err(|_| Error::param("dataset", "id space exhausted"))?;
        self.nonnegative &= v.iter().all(|x| *x >= T::zero());
        self.data.extend_from_slice(v);
        Ok(id)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn construction_validates() {
        assert!(matches!(Dataset::<f32>::from_flat(3, vec![]), Err(Error::EmptyDataset)));
        assert!(matches!(
            Dataset::<f32>::from_flat(0, vec![1.0]),
            Err(Error::EmptyDataset)
        ));
        assert!(matches!(
            Dataset::from_flat(2, vec![1.0f32, 2.0, 3.0]),
            Err(Error::SizeMismatch { .. })
        ));
        assert!(matches!(
            Dataset::from_flat(2, vec![1.0f32, 2.0, f32::NAN, 0.0]),
            Err(Error::NonFinite { row: 1, col: 0 })
        ));
        assert!(matches!(
            Dataset::from_rows([vec![1.0f64, 2.0], vec![1.0]]),
            Err(Error::DimensionMismatch { expected: 2, found: 1 })
        ));
        assert!(FeatureVector::new(vec![f64::INFINITY]).is_err());
    }

    #[test]
    fn accessors() {
        let ds = Dataset::from_rows([[1.0f32, 2.0], [3.0, -4.0]]).unwrap();
        assert_eq!(ds.len(), 2);
        assert_eq!(ds.dim(), 2);
        assert_eq!(ds.point(1), &[3.0, -4.0]);
        assert!(!ds.is_nonnegative());
        assert_eq!(ds.points().count(), 2);
        let sub = ds.subset(&[1]).unwrap();
        assert_eq!(sub.point(0), &[3.0, -4.0]);
    }

    #[test]
    fn labels_must_match_count() {
        let ds = Dataset::from_rows([[1.0f32], [2.0]]).unwrap();
        assert!(matches!(
            ds.clone().with_labels(vec![1]),
            Err(Error::CountMismatch { images: 2, labels: 1 })
        ));
        assert_eq!(ds.with_labels(vec![4, 5]).unwrap().labels(), Some(&[4u8, 5][..]));
    }

    #[test]
    fn hash_tracks_content() {
        let a = Dataset::from_rows([[1.0f32, 2.0], [3.0, 4.0]]).unwrap();
        let b = Dataset::from_rows([[1.0f32, 2.0], [3.0, 4.5]]).unwrap();
        let c = Dataset::from_rows([[1.0f32, 2.0, 3.0, 4.0]]).unwrap();
        assert_eq!(a.content_hash(), a.clone().content_hash());
        assert_ne!(a.content_hash(), b.content_hash());
        assert_ne!(a.content_hash(), c.content_hash());
    }

    #[test]
    fn normalized_rows_have_unit_norm() {
        let ds = Dataset::from_rows([[3.0f32, 4.0], [0.0, 2.0]]).unwrap();
        let n = ds.normalized().unwrap();
        assert!((n.point(0)[0] - 0.6).abs() < 1e-7);
        assert_eq!(n.point(1), &[0.0, 1.0]);
        let z = Dataset::from_rows([[0.0f32, 0.0]]).unwrap();
        assert!(matches!(z.normalized(), Err(Error::ZeroVector)));
    }
}
