use std::fmt::{Debug, Display};

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Storage scalar for feature components, split coefficients and thresholds.
///
/// Distances are always accumulated in `f64` regardless of the storage type.
pub trait Scalar: Float + FromPrimitive + ToPrimitive + Debug + Display + Default + Send + Sync + 'static {
    /// Width in bytes of the little-endian encoding.
    const BYTES: usize;

    fn write_le(self, out: &mut Vec<u8>);

    /// Decodes from exactly `Self::BYTES` little-endian bytes.
    fn read_le(bytes: &[u8]) -> Self;

    #[inline]
    fn to_f64_lossless(self) -> f64 {
        // Both supported widths widen exactly into f64.
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// Nearest representable value (round-to-nearest for f32).
    #[inline]
    fn from_f64_nearest(v: f64) -> Self {
        Self::from_f64(v).unwrap_or_else(Self::nan)
    }
}

impl Scalar for f32 {
    const BYTES: usize = 4;

    #[inline]
    fn write_le(self, out: &mut Vec<u8>) {
        out.extend_from_slice(&self.to_le_bytes());
    }

    #[inline]
    fn read_le(bytes: &[u8]) -> Self {
        f32::from_le_bytes(bytes[..4].try_into().expect("4 bytes"))
    }

    #[inline]
    fn to_f64_lossless(self) -> f64 {
        f64::from(self)
    }

    #[inline]
    fn from_f64_nearest(v: f64) -> Self {
        v as f32
    }
}

impl Scalar for f64 {
    const BYTES: usize = 8;

    #[inline]
    fn write_le(self, out: &mut Vec<u8>) {
        out.extend_from_slice(&self.to_le_bytes());
    }

    #[inline]
    fn read_le(bytes: &[u8]) -> Self {
        f64::from_le_bytes(bytes[..8].try_into().expect("8 bytes"))
    }

    #[inline]
    fn to_f64_lossless(self) -> f64 {
        self
    }

    #[inline]
    fn from_f64_nearest(v: f64) -> Self {
        v
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn roundtrip<T: Scalar>(v: T) -> T {
        let mut buf = Vec::new();
        v.write_le(&mut buf);
        assert_eq!(buf.len(), T::BYTES);
        T::read_le(&buf)
    }

    #[test]
    fn le_roundtrip_is_bit_exact() {
        for v in [0.0f32, -0.0, 1.5, f32::MIN_POSITIVE, 3.4e38] {
            assert_eq!(roundtrip(v).to_bits(), v.to_bits());
        }
        for v in [0.0f64, -2.25, 1e-300, 1.7e308] {
            assert_eq!(roundtrip(v).to_bits(), v.to_bits());
        }
    }

    #[test]
    fn widening_is_exact() {
        let x = 0.1f32;
        assert_eq!(x.to_f64_lossless(), f64::from(x));
        assert_eq!(f32::from_f64_nearest(0.1), 0.1f32);
    }
}
