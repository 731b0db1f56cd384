//! Distance metrics.
//!
//! Components are stored in the dataset's scalar type but every sum is
//! accumulated in `f64`. Kernels use eight interleaved accumulators combined
//! in a fixed order, so a given pair of vectors always produces the same bits
//! and both metrics are exactly symmetric.

use std::fmt;
use std::str::FromStr;

use crate::dataset::FeatureVector;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

const LANES: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Metric {
    #[default]
    Euclidean,
    /// `sum_k (a_k - b_k)^2 / (a_k + b_k)`, defined on non-negative vectors.
    /// Coordinates where `a_k + b_k == 0` contribute 0.
    ChiSquare,
}

impl Metric {
    /// Checked distance between two vectors.
    pub fn distance<T: Scalar>(self, a: &[T], b: &[T]) -> Result<f64> {
        if a.len() != b.len() {
            return Err(Error::DimensionMismatch {
                expected: a.len(),
                found: b.len(),
            });
        }
        self.check_domain(a)?;
        self.check_domain(b)?;
        Ok(self.reported(self.ranking_distance(a, b)))
    }

    /// Fails if `v` is outside the metric's domain.
    pub fn check_domain<T: Scalar>(self, v: &[T]) -> Result<()> {
        if self == Metric::ChiSquare {
            if let Some((col, x)) = v.iter().enumerate().find(|(_, x)| **x < T::zero()) {
                return Err(Error::NegativeComponent {
                    col,
                    value: x.to_f64_lossless(),
                });
            }
        }
        Ok(())
    }

    /// Monotone surrogate used for ranking: squared distance for Euclidean,
    /// the divergence itself for chi-square. No validation.
    #[inline]
    pub fn ranking_distance<T: Scalar>(self, a: &[T], b: &[T]) -> f64 {
        debug_assert_eq!(a.len(), b.len());
        match self {
            Metric::Euclidean => squared_euclidean(a, b),
            Metric::ChiSquare => chi_square(a, b),
        }
    }

    /// Maps a ranking distance to the reported distance.
    #[inline]
    pub fn reported(self, ranking: f64) -> f64 {
        match self {
            Metric::Euclidean => ranking.sqrt(),
            Metric::ChiSquare => ranking,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Metric::Euclidean => "euclidean",
            Metric::ChiSquare => "chi-square",
        }
    }

    pub(crate) fn tag(self) -> u8 {
        match self {
            Metric::Euclidean => 0,
            Metric::ChiSquare => 1,
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "euclidean" | "l2" => Ok(Metric::Euclidean),
            "chi-square" | "chisquare" | "chi2" => Ok(Metric::ChiSquare),
            other => Err(Error::param("metric", format!("unknown metric {other:?}"))),
        }
    }
}

#[inline]
fn fold_lanes(acc: [f64; LANES]) -> f64 {
    ((acc[0] + acc[1]) + (acc[2] + acc[3])) + ((acc[4] + acc[5]) + (acc[6] + acc[7]))
}

#[inline]
pub(crate) fn squared_euclidean<T: Scalar>(a: &[T], b: &[T]) -> f64 {
    let mut acc = [0.0f64; LANES];
    let chunks_a = a.chunks_exact(LANES);
    let chunks_b = b.chunks_exact(LANES);
    let (tail_a, tail_b) = (chunks_a.remainder(), chunks_b.remainder());
    for (ca, cb) in chunks_a.zip(chunks_b) {
        for i in 0..LANES {
            let d = ca[i].to_f64_lossless() - cb[i].to_f64_lossless();
            acc[i] += d * d;
        }
    }
    let mut sum = fold_lanes(acc);
    for (x, y) in tail_a.iter().zip(tail_b) {
        let d = x.to_f64_lossless() - y.to_f64_lossless();
        sum += d * d;
    }
    sum
}

#[inline]
fn chi_term(x: f64, y: f64) -> f64 {
    let s = x + y;
    if s > 0.0 {
        let d = x - y;
        d * d / s
    } else {
        0.0
    }
}

#[inline]
pub(crate) fn chi_square<T: Scalar>(a: &[T], b: &[T]) -> f64 {
    let mut acc = [0.0f64; LANES];
    let chunks_a = a.chunks_exact(LANES);
    let chunks_b = b.chunks_exact(LANES);
    let (tail_a, tail_b) = (chunks_a.remainder(), chunks_b.remainder());
    for (ca, cb) in chunks_a.zip(chunks_b) {
        for i in 0..LANES {
            acc[i] += chi_term(ca[i].to_f64_lossless(), cb[i].to_f64_lossless());
        }
    }
    let mut sum = fold_lanes(acc);
    for (x, y) in tail_a.iter().zip(tail_b) {
        sum += chi_term(x.to_f64_lossless(), y.to_f64_lossless());
    }
    sum
}

/// Scales `v` to unit Euclidean norm.
pub fn normalize_unit<T: Scalar>(v: &FeatureVector<T>) -> Result<FeatureVector<T>> {
    let mut out = v.as_slice().to_vec();
    normalize_in_place(&mut out)?;
    FeatureVector::new(out)
}

pub(crate) fn normalize_in_place<T: Scalar>(v: &mut [T]) -> Result<()> {
    let norm_sq: f64 = v
        .iter()
        .map(|x| {
            let x = x.to_f64_lossless();
            x * x
        })
        .sum();
    if norm_sq == 0.0 {
        return Err(Error::ZeroVector);
    }
    let norm = norm_sq.sqrt();
    for x in v.iter_mut() {
        *x = T::from_f64_nearest(x.to_f64_lossless() / norm);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn fv(v: &[f64]) -> FeatureVector<f64> {
        FeatureVector::new(v.to_vec()).unwrap()
    }

    #[test]
    fn chi_square_examples() {
        let m = Metric::ChiSquare;
        assert_eq!(m.distance(&[0.2f32, 0.7, 0.1], &[0.2, 0.7, 0.1]).unwrap(), 0.0);
        assert_eq!(m.distance(&[1.0f64, 0.0], &[0.0, 1.0]).unwrap(), 2.0);
        // zero-denominator coordinate contributes nothing
        assert_eq!(m.distance(&[0.0f64, 1.0], &[0.0, 1.0]).unwrap(), 0.0);
        assert_eq!(m.distance(&[0.0f64, 3.0], &[0.0, 1.0]).unwrap(), 1.0);
    }

    #[test]
    fn euclidean_three_four_five() {
        let m = Metric::Euclidean;
        assert_eq!(m.distance(&[3.0f64, 4.0], &[0.0, 0.0]).unwrap(), 5.0);
        assert_eq!(m.ranking_distance(&[3.0f64, 4.0], &[0.0, 0.0]), 25.0);
        assert_eq!(m.distance(&[3.0f32, 4.0], &[0.0, 0.0]).unwrap(), 5.0);
    }

    #[test]
    fn distance_errors() {
        assert!(matches!(
            Metric::Euclidean.distance(&[1.0f64, 2.0], &[1.0]),
            Err(Error::DimensionMismatch { expected: 2, found: 1 })
        ));
        assert!(matches!(
            Metric::ChiSquare.distance(&[1.0f64, -2.0], &[1.0, 1.0]),
            Err(Error::NegativeComponent { col: 1, .. })
        ));
        // Euclidean accepts negative components
        assert!(Metric::Euclidean.distance(&[1.0f64, -2.0], &[1.0, 1.0]).is_ok());
    }

    #[test]
    fn long_vectors_match_naive_sum() {
        // 19 = two full lane chunks plus a tail of 3
        let a: Vec<f64> = (0..19).map(|i| (i as f64 * 0.37).sin().abs()).collect();
        let b: Vec<f64> = (0..19).map(|i| (i as f64 * 0.11).cos().abs()).collect();
        let naive_l2: f64 = a.iter().zip(&b).map(|(x, y)| (x - y) * (x - y)).sum();
        let naive_chi: f64 = a.iter().zip(&b).map(|(x, y)| (x - y) * (x - y) / (x + y)).sum();
        assert!((Metric::Euclidean.ranking_distance(&a, &b) - naive_l2).abs() < 1e-12);
        assert!((Metric::ChiSquare.ranking_distance(&a, &b) - naive_chi).abs() < 1e-12);
    }

    #[test]
    fn normalize_examples() {
        let n = normalize_unit(&fv(&[3.0, 4.0])).unwrap();
        assert!((n[0] - 0.6).abs() < 1e-12 && (n[1] - 0.8).abs() < 1e-12);

        let unit = fv(&[0.6, 0.0, 0.8]);
        let n = normalize_unit(&unit).unwrap();
        for (x, y) in n.iter().zip(unit.iter()) {
            assert!((x - y).abs() < 1e-6);
        }

        let mut axis = vec![0.0; 9];
        axis[0] = 2.0;
        let n = normalize_unit(&fv(&axis)).unwrap();
        assert_eq!(n[0], 1.0);
        assert!(n.iter().skip(1).all(|x| *x == 0.0));

        assert!(matches!(normalize_unit(&fv(&[0.0, 0.0])), Err(Error::ZeroVector)));
    }

    #[test]
    fn metric_parsing() {
        assert_eq!("euclidean".parse::<Metric>().unwrap(), Metric::Euclidean);
        assert_eq!("chi-square".parse::<Metric>().unwrap(), Metric::ChiSquare);
        assert!("cosine".parse::<Metric>().is_err());
    }

    fn pair(max_dim: usize, lo: f32) -> impl Strategy<Value = (Vec<f32>, Vec<f32>)> {
        (1..max_dim).prop_flat_map(move |d| {
            (
                prop::collection::vec(lo..10.0f32, d),
                prop::collection::vec(lo..10.0f32, d),
            )
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(2_000))]

        #[test]
        fn euclidean_axioms((a, b) in pair(40, -10.0)) {
            let m = Metric::Euclidean;
            let ab = m.distance(&a, &b).unwrap();
            prop_assert_eq!(m.distance(&a, &a).unwrap(), 0.0);
            prop_assert!(ab >= 0.0);
            prop_assert_eq!(ab.to_bits(), m.distance(&b, &a).unwrap().to_bits());
        }

        #[test]
        fn chi_square_axioms((a, b) in pair(40, 0.0)) {
            let m = Metric::ChiSquare;
            let ab = m.distance(&a, &b).unwrap();
            prop_assert_eq!(m.distance(&a, &a).unwrap(), 0.0);
            prop_assert!(ab >= 0.0);
            prop_assert_eq!(ab.to_bits(), m.distance(&b, &a).unwrap().to_bits());
        }

        #[test]
        fn unit_vectors_are_within_two((a, b) in pair(40, -10.0)) {
            let (Ok(a), Ok(b)) = (
                normalize_unit(&FeatureVector::new(a).unwrap()),
                normalize_unit(&FeatureVector::new(b).unwrap()),
            ) else {
                return Ok(());
            };
            let norm: f64 = a.iter().map(|x| f64::from(*x) * f64::from(*x)).sum::<f64>().sqrt();
            prop_assert!((norm - 1.0).abs() < 1e-6);
            let d = Metric::Euclidean.distance(&a, &b).unwrap();
            prop_assert!((0.0..=2.0 + 1e-6).contains(&d));
        }
    }
}
