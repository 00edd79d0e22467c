//! Planar projective geometry.
//!
//! Points live in one of three planes depending on context: image pixels
//! `(u, v)`, ground-plane meters `(x, y)` with `y` along the radar boresight and
//! `x` to the right, or radar polar coordinates `(r, θ)` with `θ` in radians
//! measured from boresight towards `+x`.

mod dlt;
mod homography;
mod ransac;

pub use dlt::estimate_homography_dlt;
pub use homography::Homography;
pub use ransac::{estimate_homography_ransac, RansacConfig, RansacFit};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// A two-component point. The meaning of `a` and `b` depends on the plane.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point2<T> {
    pub a: T,
    pub b: T,
}

impl<T: Real> Point2<T> {
    pub fn new(a: T, b: T) -> Self {
        Self { a, b }
    }

    /// Polar point with range `r` and azimuth `theta`.
    pub fn polar(r: T, theta: T) -> Self {
        Self { a: r, b: theta }
    }

    pub fn is_finite(&self) -> bool {
        self.a.is_finite() && self.b.is_finite()
    }

    pub fn distance(&self, other: &Self) -> T {
        let da = self.a - other.a;
        let db = self.b - other.b;
        (da * da + db * db).sqrt()
    }

    pub fn r(&self) -> T {
        self.a
    }

    pub fn theta(&self) -> T {
        self.b
    }

    pub fn x(&self) -> T {
        self.a
    }

    pub fn y(&self) -> T {
        self.b
    }

    pub fn u(&self) -> T {
        self.a
    }

    pub fn v(&self) -> T {
        self.b
    }
}

/// Correspondence between an image pixel and a point in the destination plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PointPair<T> {
    pub src: Point2<T>,
    pub dst: Point2<T>,
}

impl<T: Real> PointPair<T> {
    pub fn new(src: Point2<T>, dst: Point2<T>) -> Self {
        Self { src, dst }
    }
}

/// Space in which residuals between a projected point and its target are measured.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResidualSpace {
    /// Euclidean distance in the destination coordinates as given.
    Planar,
    /// Destination points are polar `(r, θ)`; both are converted to ground
    /// Cartesian meters before taking the distance.
    #[default]
    PolarAsCartesian,
}

/// `(r, θ)` to ground `(x, y) = (r·sin θ, r·cos θ)`.
pub fn polar_to_cartesian<T: Real>(p: Point2<T>) -> Result<Point2<T>> {
    if !p.is_finite() {
        return Err(Error::invalid("polar point must be finite"));
    }
    if p.r() < T::zero() {
        return Err(Error::invalid(format!("negative range {}", p.r())));
    }
    Ok(polar_to_cartesian_unchecked(p))
}

#[inline]
pub(crate) fn polar_to_cartesian_unchecked<T: Real>(p: Point2<T>) -> Point2<T> {
    let (s, c) = p.theta().sin_cos();
    Point2::new(p.r() * s, p.r() * c)
}

/// Ground `(x, y)` to `(r, θ)` with `θ = atan2(x, y)`.
pub fn cartesian_to_polar<T: Real>(p: Point2<T>) -> Result<Point2<T>> {
    if !p.is_finite() {
        return Err(Error::invalid("cartesian point must be finite"));
    }
    if p.x() == T::zero() && p.y() == T::zero() {
        return Err(Error::invalid("azimuth undefined at the origin"));
    }
    Ok(Point2::polar(p.x().hypot(p.y()), p.x().atan2(p.y())))
}

#[inline]
pub(crate) fn residual<T: Real>(
    projected: Point2<T>,
    target: Point2<T>,
    space: ResidualSpace,
) -> T {
    match space {
        ResidualSpace::Planar => projected.distance(&target),
        ResidualSpace::PolarAsCartesian => polar_to_cartesian_unchecked(projected)
            .distance(&polar_to_cartesian_unchecked(target)),
    }
}

/// Root-mean-square distance between each `dst` and the projection of its `src`.
pub fn reprojection_error<T: Real>(
    pairs: &[PointPair<T>],
    h: &Homography<T>,
    space: ResidualSpace,
) -> Result<T> {
    if pairs.is_empty() {
        return Err(Error::invalid("reprojection error of an empty set"));
    }
    let mut sum = T::zero();
    for pair in pairs {
        let d = residual(h.apply(pair.src)?, pair.dst, space);
        sum = sum + d * d;
    }
    Ok((sum / T::count(pairs.len())).sqrt())
}

/// RMS error in the source plane when mapping each `dst` back through `H⁻¹`.
///
/// For image→radar homographies this is the radar-to-camera error in pixels.
pub fn inverse_reprojection_error<T: Real>(
    pairs: &[PointPair<T>],
    h: &Homography<T>,
) -> Result<T> {
    let inv = h.inverse()?;
    let swapped: Vec<_> = pairs
        .iter()
        .map(|p| PointPair::new(p.dst, p.src))
        .collect();
    reprojection_error(&swapped, &inv, ResidualSpace::Planar)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_6};

    #[test]
    fn polar_to_cartesian_cases() {
        let p = polar_to_cartesian(Point2::polar(10.0, 0.0)).unwrap();
        assert_eq!((p.x(), p.y()), (0.0, 10.0));
        let p = polar_to_cartesian(Point2::polar(5.0, FRAC_PI_2)).unwrap();
        assert!((p.x() - 5.0).abs() < 1e-15 && p.y().abs() < 1e-15);
        let p = polar_to_cartesian(Point2::polar(2.0, FRAC_PI_6)).unwrap();
        assert!((p.x() - 1.0).abs() < 1e-12);
        assert!((p.y() - 1.7320508).abs() < 1e-7);
    }

    #[test]
    fn polar_to_cartesian_rejects_non_finite() {
        assert!(polar_to_cartesian(Point2::polar(f64::NAN, 0.0)).is_err());
        assert!(polar_to_cartesian(Point2::polar(1.0, f64::INFINITY)).is_err());
    }

    #[test]
    fn cartesian_to_polar_cases() {
        let p = cartesian_to_polar(Point2::<f64>::new(0.0, 10.0)).unwrap();
        assert_eq!((p.r(), p.theta()), (10.0, 0.0));
        let p = cartesian_to_polar(Point2::<f64>::new(5.0, 0.0)).unwrap();
        assert_eq!(p.r(), 5.0);
        assert!((p.theta() - FRAC_PI_2).abs() < 1e-15);
        let p = cartesian_to_polar(Point2::<f64>::new(1.0, 1.7320508)).unwrap();
        assert!((p.r() - 2.0).abs() < 1e-7);
        assert!((p.theta() - FRAC_PI_6).abs() < 1e-7);
        let exact = cartesian_to_polar(Point2::<f64>::new(1.0, 3f64.sqrt())).unwrap();
        assert!((exact.r() - 2.0).abs() < 1e-9);
        assert!((exact.theta() - FRAC_PI_6).abs() < 1e-9);
    }

    #[test]
    fn cartesian_to_polar_rejects_origin() {
        assert!(matches!(
            cartesian_to_polar(Point2::new(0.0, 0.0)),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn reprojection_error_cases() {
        let id = Homography::<f64>::identity();
        let one = [PointPair::new(Point2::new(0.0, 0.0), Point2::new(3.0, 4.0))];
        assert_eq!(reprojection_error(&one, &id, ResidualSpace::Planar).unwrap(), 5.0);
        let two = [
            PointPair::new(Point2::new(1.0, 1.0), Point2::new(1.0, 1.0)),
            PointPair::new(Point2::new(0.0, 0.0), Point2::new(3.0, 4.0)),
        ];
        let e = reprojection_error(&two, &id, ResidualSpace::Planar).unwrap();
        assert!((e - 3.5355339).abs() < 1e-7);
        assert!(reprojection_error::<f64>(&[], &id, ResidualSpace::Planar).is_err());
    }

    #[test]
    fn works_in_single_precision() {
        let p = polar_to_cartesian(Point2::<f32>::polar(2.0, std::f32::consts::FRAC_PI_6)).unwrap();
        assert!((p.x() - 1.0).abs() < 1e-6);
        let back: Point2<f32> = cartesian_to_polar(p).unwrap();
        assert!((back.r() - 2.0).abs() < 1e-6);
    }

    proptest::proptest! {
        #[test]
        fn polar_round_trip(x in -50.0f64..50.0, y in 0.01f64..50.0) {
            let p = Point2::new(x, y);
            let back = polar_to_cartesian(cartesian_to_polar(p).unwrap()).unwrap();
            proptest::prop_assert!((back.x() - x).abs() < 1e-12);
            proptest::prop_assert!((back.y() - y).abs() < 1e-12);
        }
    }
}
