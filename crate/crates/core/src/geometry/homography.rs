use serde::{Deserialize, Serialize};

use super::Point2;
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Smallest admissible `|det|` of a normalized homography.
const MIN_DET: f64 = 1e-12;
/// Smallest admissible projective denominator.
const MIN_W: f64 = 1e-12;

/// Non-singular 3×3 projective map, stored row-major.
///
/// Always normalized to unit Frobenius norm with `h33 ≥ 0` (when `h33 == 0` the
/// first non-zero entry is made positive), so two homographies describing the
/// same map compare equal up to rounding.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[T; 9]", into = "[T; 9]")]
#[serde(bound(
    serialize = "T: Real + Serialize",
    deserialize = "T: Real + Deserialize<'de>"
))]
pub struct Homography<T> {
    h: [T; 9],
}

impl<T: Real> Homography<T> {
    /// Normalizes `h` and checks that it is invertible.
    pub fn new(h: [T; 9]) -> Result<Self> {
        if h.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("homography entries must be finite"));
        }
        let norm = frobenius(&h);
        if norm == T::zero() {
            return Err(Error::DegenerateConfiguration("zero homography".into()));
        }
        let mut n = h.map(|v| v / norm);
        let pivot = if n[8] != T::zero() {
            n[8]
        } else {
            n.iter().copied().find(|v| *v != T::zero()).unwrap_or(T::one())
        };
        if pivot < T::zero() {
            n = n.map(|v| -v);
        }
        Self::checked(n)
    }

    /// Accepts `h` verbatim if it is already normalized, otherwise normalizes it.
    ///
    /// Used when reading stored matrices so that a write/read cycle is bit-exact.
    pub fn from_row_major(h: [T; 9]) -> Result<Self> {
        if h.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("homography entries must be finite"));
        }
        let normalized = (frobenius(&h) - T::one()).abs() <= T::lit(1e-12)
            && (h[8] > T::zero()
                || (h[8] == T::zero()
                    && h.iter().copied().find(|v| *v != T::zero()) > Some(T::zero())));
        if normalized {
            Self::checked(h)
        } else {
            Self::new(h)
        }
    }

    fn checked(h: [T; 9]) -> Result<Self> {
        let out = Self { h };
        let det = out.det();
        if det.abs() <= T::lit(MIN_DET) {
            return Err(Error::DegenerateConfiguration(format!(
                "singular homography (det {det:e})"
            )));
        }
        Ok(out)
    }

    pub fn identity() -> Self {
        let (o, z) = (T::one(), T::zero());
        Self::new([o, z, z, z, o, z, z, z, o]).expect("identity is invertible")
    }

    /// Row-major entries `h11 … h33`.
    pub fn as_array(&self) -> &[T; 9] {
        &self.h
    }

    pub fn entry(&self, row: usize, col: usize) -> T {
        self.h[row * 3 + col]
    }

    pub fn det(&self) -> T {
        let h = &self.h;
        h[0] * (h[4] * h[8] - h[5] * h[7]) - h[1] * (h[3] * h[8] - h[5] * h[6])
            + h[2] * (h[3] * h[7] - h[4] * h[6])
    }

    /// Maps `p` through the homography, dividing by the projective coordinate.
    pub fn apply(&self, p: Point2<T>) -> Result<Point2<T>> {
        let h = &self.h;
        let (u, v) = (p.a, p.b);
        let w = h[6] * u + h[7] * v + h[8];
        if !w.is_finite() || w.abs() <= T::lit(MIN_W) {
            return Err(Error::ProjectiveDegeneracy(w.to_f64().unwrap_or(f64::NAN)));
        }
        Ok(Point2::new(
            (h[0] * u + h[1] * v + h[2]) / w,
            (h[3] * u + h[4] * v + h[5]) / w,
        ))
    }

    pub fn inverse(&self) -> Result<Self> {
        let h = &self.h;
        // adjugate; the scale is removed by normalization
        let adj = [
            h[4] * h[8] - h[5] * h[7],
            h[2] * h[7] - h[1] * h[8],
            h[1] * h[5] - h[2] * h[4],
            h[5] * h[6] - h[3] * h[8],
            h[0] * h[8] - h[2] * h[6],
            h[2] * h[3] - h[0] * h[5],
            h[3] * h[7] - h[4] * h[6],
            h[1] * h[6] - h[0] * h[7],
            h[0] * h[4] - h[1] * h[3],
        ];
        Self::new(adj)
    }

    /// Matrix product `self · rhs`, i.e. apply `rhs` first.
    pub fn compose(&self, rhs: &Self) -> Result<Self> {
        Self::new(mat3_mul(&self.h, &rhs.h))
    }

    /// Frobenius distance to `other`. Both are normalized, so this measures how
    /// far apart the underlying maps are.
    pub fn distance(&self, other: &Self) -> T {
        self.h
            .iter()
            .zip(other.h.iter())
            .map(|(a, b)| (*a - *b) * (*a - *b))
            .fold(T::zero(), |acc, v| acc + v)
            .sqrt()
    }
}

impl<T: Real> TryFrom<[T; 9]> for Homography<T> {
    type Error = Error;

    fn try_from(h: [T; 9]) -> Result<Self> {
        Self::from_row_major(h)
    }
}

impl<T: Real> From<Homography<T>> for [T; 9] {
    fn from(h: Homography<T>) -> Self {
        h.h
    }
}

fn frobenius<T: Real>(h: &[T; 9]) -> T {
    h.iter().fold(T::zero(), |acc, v| acc + *v * *v).sqrt()
}

pub(crate) fn mat3_mul<T: Real>(a: &[T; 9], b: &[T; 9]) -> [T; 9] {
    let mut out = [T::zero(); 9];
    for i in 0..3 {
        for j in 0..3 {
            out[i * 3 + j] = (0..3).fold(T::zero(), |acc, k| acc + a[i * 3 + k] * b[k * 3 + j]);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn apply_examples() {
        let id = Homography::<f64>::identity();
        assert!(id.apply(Point2::new(3.0, 7.0)).unwrap().distance(&Point2::new(3.0, 7.0)) < 1e-14);

        let scale = Homography::<f64>::new([2.0, 0.0, 0.0, 0.0, 2.0, 0.0, 0.0, 0.0, 1.0]).unwrap();
        let p = scale.apply(Point2::new(3.0, 7.0)).unwrap();
        assert!((p.a - 6.0).abs() < 1e-12 && (p.b - 14.0).abs() < 1e-12);

        let h = Homography::<f64>::new([1.0, 0.0, 1.0, 0.0, 1.0, 2.0, 0.0, 0.0, 2.0]).unwrap();
        let p = h.apply(Point2::new(4.0, 6.0)).unwrap();
        assert!((p.a - 2.5).abs() < 1e-12 && (p.b - 4.0).abs() < 1e-12);
    }

    #[test]
    fn vanishing_denominator() {
        // w = u - 1
        let h = Homography::new([1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 1.0, 0.0, -1.0]).unwrap();
        assert!(matches!(
            h.apply(Point2::new(1.0, 5.0)),
            Err(Error::ProjectiveDegeneracy(_))
        ));
    }

    #[test]
    fn normalization_convention() {
        let h = Homography::<f64>::new([0.0, 0.0, 2.0, 0.0, 2.0, 0.0, 2.0, 0.0, -2.0]).unwrap();
        let a = h.as_array();
        assert!(a[8] > 0.0);
        assert!((frobenius(a) - 1.0).abs() < 1e-15);
        let neg = Homography::new([-1.0, 0.0, 0.0, 0.0, -1.0, 0.0, 0.0, 0.0, -1.0]).unwrap();
        assert_eq!(neg, Homography::identity());
    }

    #[test]
    fn singular_rejected() {
        let r = Homography::new([1.0, 2.0, 3.0, 2.0, 4.0, 6.0, 0.0, 0.0, 1.0]);
        assert!(matches!(r, Err(Error::DegenerateConfiguration(_))));
        let r = Homography::new([1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0]);
        assert!(r.is_err());
    }

    #[test]
    fn from_row_major_keeps_normalized_bits() {
        let h = Homography::new([0.3, -1.7, 5.0, 0.01, 2.2, -3.0, 1e-3, 2e-3, 1.0]).unwrap();
        let again = Homography::from_row_major(*h.as_array()).unwrap();
        assert_eq!(h.as_array(), again.as_array());
    }

    #[test]
    fn inverse_round_trip() {
        let h = Homography::new([0.9, 0.1, 3.0, -0.2, 1.1, -2.0, 1e-3, -2e-3, 1.0]).unwrap();
        let inv = h.inverse().unwrap();
        let p = Point2::new(12.5, -4.0);
        let back = inv.apply(h.apply(p).unwrap()).unwrap();
        assert!(back.distance(&p) < 1e-9);
        let id = h.compose(&inv).unwrap();
        assert!(id.distance(&Homography::identity()) < 1e-12);
    }
}
