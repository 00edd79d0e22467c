use serde::{Deserialize, Serialize};

use crate::geometry::Point2;
use crate::scalar::Real;

pub type Mat4<T> = [[T; 4]; 4];

/// Constant-velocity state `(x, y, vx, vy)` with its covariance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KalmanState<T> {
    pub x: [T; 4],
    pub p: Mat4<T>,
}

impl<T: Real> KalmanState<T> {
    /// State at `position` with zero velocity and diagonal covariance.
    pub fn at_rest(position: Point2<T>, position_std: T, velocity_std: T) -> Self {
        let mut p = zeros();
        p[0][0] = position_std * position_std;
        p[1][1] = position_std * position_std;
        p[2][2] = velocity_std * velocity_std;
        p[3][3] = velocity_std * velocity_std;
        Self {
            x: [position.a, position.b, T::zero(), T::zero()],
            p,
        }
    }

    pub fn position(&self) -> Point2<T> {
        Point2::new(self.x[0], self.x[1])
    }

    pub fn velocity(&self) -> Point2<T> {
        Point2::new(self.x[2], self.x[3])
    }
}

/// Propagates the state `dt` seconds under constant velocity.
///
/// Process noise is white acceleration with standard deviation `accel_std`:
/// `Q = σ²·G·Gᵀ` with `G = (dt²/2, dt²/2, dt, dt)` per axis.
/// A non-positive `dt` leaves the state unchanged.
pub fn kf_predict<T: Real>(s: &KalmanState<T>, dt: T, accel_std: T) -> KalmanState<T> {
    if !(dt > T::zero()) {
        return *s;
    }
    let mut f = identity();
    f[0][2] = dt;
    f[1][3] = dt;
    let x = mat_vec(&f, &s.x);

    let q = accel_std * accel_std;
    let half = T::lit(0.5);
    let dt2 = dt * dt;
    let (qpp, qpv, qvv) = (q * dt2 * dt2 * half * half, q * dt2 * dt * half, q * dt2);
    let mut p = mat_mul(&mat_mul(&f, &s.p), &transpose(&f));
    for axis in 0..2 {
        p[axis][axis] = p[axis][axis] + qpp;
        p[axis][axis + 2] = p[axis][axis + 2] + qpv;
        p[axis + 2][axis] = p[axis + 2][axis] + qpv;
        p[axis + 2][axis + 2] = p[axis + 2][axis + 2] + qvv;
    }
    KalmanState {
        x,
        p: symmetrize(&p),
    }
}

/// Position-measurement update with isotropic noise `meas_std`, using the
/// Joseph form for the covariance.
pub fn kf_update<T: Real>(s: &KalmanState<T>, z: Point2<T>, meas_std: T) -> KalmanState<T> {
    let r = meas_std * meas_std;
    let s00 = s.p[0][0] + r;
    let s01 = s.p[0][1];
    let s10 = s.p[1][0];
    let s11 = s.p[1][1] + r;
    let det = s00 * s11 - s01 * s10;
    if !(det > T::zero()) || !det.is_finite() {
        return *s;
    }
    let inv = [[s11 / det, -s01 / det], [-s10 / det, s00 / det]];

    // K = P·Hᵀ·S⁻¹, 4×2
    let mut k = [[T::zero(); 2]; 4];
    for (i, row) in k.iter_mut().enumerate() {
        for (j, kij) in row.iter_mut().enumerate() {
            *kij = s.p[i][0] * inv[0][j] + s.p[i][1] * inv[1][j];
        }
    }
    let innov = [z.a - s.x[0], z.b - s.x[1]];
    let mut x = s.x;
    for i in 0..4 {
        x[i] = x[i] + k[i][0] * innov[0] + k[i][1] * innov[1];
    }

    // (I − K·H)
    let mut a = identity();
    for i in 0..4 {
        a[i][0] = a[i][0] - k[i][0];
        a[i][1] = a[i][1] - k[i][1];
    }
    let mut p = mat_mul(&mat_mul(&a, &s.p), &transpose(&a));
    for i in 0..4 {
        for j in 0..4 {
            p[i][j] = p[i][j] + r * (k[i][0] * k[j][0] + k[i][1] * k[j][1]);
        }
    }
    KalmanState {
        x,
        p: symmetrize(&p),
    }
}

fn zeros<T: Real>() -> Mat4<T> {
    [[T::zero(); 4]; 4]
}

fn identity<T: Real>() -> Mat4<T> {
    let mut m = zeros();
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = T::one();
    }
    m
}

fn transpose<T: Real>(m: &Mat4<T>) -> Mat4<T> {
    let mut t = zeros();
    for i in 0..4 {
        for j in 0..4 {
            t[j][i] = m[i][j];
        }
    }
    t
}

fn mat_mul<T: Real>(a: &Mat4<T>, b: &Mat4<T>) -> Mat4<T> {
    let mut out = zeros();
    for i in 0..4 {
        for j in 0..4 {
            out[i][j] = (0..4).fold(T::zero(), |acc, k| acc + a[i][k] * b[k][j]);
        }
    }
    out
}

fn mat_vec<T: Real>(a: &Mat4<T>, v: &[T; 4]) -> [T; 4] {
    let mut out = [T::zero(); 4];
    for (i, o) in out.iter_mut().enumerate() {
        *o = (0..4).fold(T::zero(), |acc, k| acc + a[i][k] * v[k]);
    }
    out
}

fn symmetrize<T: Real>(m: &Mat4<T>) -> Mat4<T> {
    let mut out = *m;
    let half = T::lit(0.5);
    for i in 0..4 {
        for j in i + 1..4 {
            let v = (m[i][j] + m[j][i]) * half;
            out[i][j] = v;
            out[j][i] = v;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{Matrix2, Matrix2x4, Matrix4, Vector2, Vector4};

    fn na(m: &Mat4<f64>) -> Matrix4<f64> {
        Matrix4::from_fn(|i, j| m[i][j])
    }

    fn state(x: [f64; 4], p: Mat4<f64>) -> KalmanState<f64> {
        KalmanState { x, p }
    }

    #[test]
    fn predict_integrates_velocity() {
        let s = state([0.0, 0.0, 1.0, 0.0], identity());
        assert_eq!(kf_predict(&s, 1.0, 0.0).x, [1.0, 0.0, 1.0, 0.0]);
        let s = state([2.0, 3.0, 0.0, 0.0], identity());
        assert_eq!(kf_predict(&s, 5.0, 0.0).x, [2.0, 3.0, 0.0, 0.0]);
    }

    #[test]
    fn predict_covariance_matches_matrix_product() {
        let s = state([0.0; 4], identity());
        let out = kf_predict(&s, 1.0, 1.0);
        // F·I·Fᵀ gives 1 + dt², Q adds dt⁴/4
        assert!((out.p[0][0] - 2.25).abs() < 1e-15);

        let dt = 0.7;
        let sigma = 1.3;
        let f = Matrix4::new(
            1.0, 0.0, dt, 0.0, //
            0.0, 1.0, 0.0, dt, //
            0.0, 0.0, 1.0, 0.0, //
            0.0, 0.0, 0.0, 1.0,
        );
        let g = Matrix4x2::from_fn(|i, j| match (i, j) {
            (0, 0) | (1, 1) => dt * dt / 2.0,
            (2, 0) | (3, 1) => dt,
            _ => 0.0,
        });
        let p0 = Matrix4::new(
            2.0, 0.1, 0.3, 0.0, //
            0.1, 1.5, 0.0, 0.2, //
            0.3, 0.0, 0.9, 0.05, //
            0.0, 0.2, 0.05, 0.7,
        );
        let expected = f * p0 * f.transpose() + g * g.transpose() * sigma * sigma;
        let mut p = zeros();
        for i in 0..4 {
            for j in 0..4 {
                p[i][j] = p0[(i, j)];
            }
        }
        let out = kf_predict(&state([0.0; 4], p), dt, sigma);
        assert!((na(&out.p) - expected).abs().max() < 1e-12);
    }

    type Matrix4x2 = nalgebra::Matrix4x2<f64>;

    #[test]
    fn update_examples() {
        let s = state([0.0; 4], identity());
        let exact = kf_update(&s, Point2::new(5.0, 5.0), 0.0);
        assert!((exact.x[0] - 5.0).abs() < 1e-9 && (exact.x[1] - 5.0).abs() < 1e-9);

        let prior = state([1.0, 2.0, 0.5, -0.5], identity());
        let vague = kf_update(&prior, Point2::new(50.0, -20.0), 1e9);
        for i in 0..4 {
            assert!((vague.x[i] - prior.x[i]).abs() <= 1e-6 * prior.x[i].abs().max(1.0));
        }

        let half = kf_update(&s, Point2::new(1.0, 1.0), 1.0);
        assert!((half.x[0] - 0.5).abs() < 1e-15 && (half.x[1] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn update_matches_textbook_form() {
        let mut p = identity();
        p[0][0] = 2.0;
        p[0][2] = 0.4;
        p[2][0] = 0.4;
        p[1][1] = 1.2;
        let s = state([1.0, -1.0, 0.2, 0.1], p);
        let out = kf_update(&s, Point2::new(1.7, -0.4), 0.6);

        let pm = na(&p);
        let h = Matrix2x4::new(1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0);
        let r = Matrix2::identity() * 0.36;
        let sm = h * pm * h.transpose() + r;
        let k = pm * h.transpose() * sm.try_inverse().unwrap();
        let x = Vector4::new(1.0, -1.0, 0.2, 0.1) + k * (Vector2::new(1.7, -0.4) - h * Vector4::new(1.0, -1.0, 0.2, 0.1));
        let p_simple = (Matrix4::identity() - k * h) * pm;
        for i in 0..4 {
            assert!((out.x[i] - x[i]).abs() < 1e-12);
        }
        assert!((na(&out.p) - p_simple).abs().max() < 1e-12);
    }

    #[test]
    fn non_positive_dt_is_noop() {
        let s = state([1.0, 2.0, 3.0, 4.0], identity());
        assert_eq!(kf_predict(&s, 0.0, 1.0), s);
    }
}
