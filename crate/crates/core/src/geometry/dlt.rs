use super::homography::mat3_mul;
use super::{Homography, Point2, PointPair};
use crate::error::{Error, Result};
use crate::scalar::Real;

const MAX_SWEEPS: usize = 64;

/// Least-squares homography from at least four correspondences.
///
/// Both point sets are conditioned first (centroid to the origin, mean distance
/// √2), the stacked `2N×9` system is solved for its smallest right singular
/// vector, and the result is mapped back to the original coordinates.
pub fn estimate_homography_dlt<T: Real>(pairs: &[PointPair<T>]) -> Result<Homography<T>> {
    if pairs.len() < 4 {
        return Err(Error::InsufficientData {
            needed: 4,
            got: pairs.len(),
        });
    }
    if pairs.iter().any(|p| !p.src.is_finite() || !p.dst.is_finite()) {
        return Err(Error::invalid("correspondences must be finite"));
    }

    let src = Conditioner::fit(pairs.iter().map(|p| p.src))?;
    let dst = Conditioner::fit(pairs.iter().map(|p| p.dst))?;

    let mut a = Vec::with_capacity(pairs.len() * 2 * 9);
    for pair in pairs {
        let s = src.apply(pair.src);
        let d = dst.apply(pair.dst);
        let (x, y) = (s.a, s.b);
        let (u, v) = (d.a, d.b);
        let (o, z) = (T::one(), T::zero());
        a.extend_from_slice(&[-x, -y, -o, z, z, z, u * x, u * y, u]);
        a.extend_from_slice(&[z, z, z, -x, -y, -o, v * x, v * y, v]);
    }

    let svd = right_singular_vectors(&mut a, 9);
    let mut order: Vec<usize> = (0..9).collect();
    order.sort_by(|&i, &j| svd.values[i].partial_cmp(&svd.values[j]).unwrap());
    let smallest = order[0];
    let second = order[1];
    let largest = order[8];
    let tol = T::epsilon().sqrt();
    if svd.values[second] <= tol * svd.values[largest] {
        return Err(Error::DegenerateConfiguration(
            "correspondences do not determine a unique homography (collinear points?)".into(),
        ));
    }

    let mut h = [T::zero(); 9];
    for (k, hk) in h.iter_mut().enumerate() {
        *hk = svd.vectors[k * 9 + smallest];
    }
    let h = mat3_mul(&dst.inverse_matrix(), &mat3_mul(&h, &src.matrix()));
    Homography::new(h)
}

/// Similarity transform moving a point set to zero mean and mean norm √2.
struct Conditioner<T> {
    cx: T,
    cy: T,
    scale: T,
}

impl<T: Real> Conditioner<T> {
    fn fit(points: impl Iterator<Item = Point2<T>> + Clone) -> Result<Self> {
        let n = T::count(points.clone().count());
        let (sx, sy) = points
            .clone()
            .fold((T::zero(), T::zero()), |(sx, sy), p| (sx + p.a, sy + p.b));
        let (cx, cy) = (sx / n, sy / n);
        let (mut sxx, mut syy, mut sxy, mut mean) = (T::zero(), T::zero(), T::zero(), T::zero());
        for p in points {
            let (dx, dy) = (p.a - cx, p.b - cy);
            sxx = sxx + dx * dx;
            syy = syy + dy * dy;
            sxy = sxy + dx * dy;
            mean = mean + (dx * dx + dy * dy).sqrt();
        }
        mean = mean / n;
        let span = cx.abs().max(cy.abs()).max(T::one());
        if mean <= T::epsilon() * span * T::lit(16.0) {
            return Err(Error::DegenerateConfiguration("coincident points".into()));
        }
        // smallest eigenvalue of the 2×2 scatter relative to its trace
        let tr = sxx + syy;
        let det = sxx * syy - sxy * sxy;
        let disc = ((tr * tr / T::lit(4.0)) - det).max(T::zero()).sqrt();
        let lmin = tr / T::lit(2.0) - disc;
        if lmin <= T::epsilon().sqrt() * tr {
            return Err(Error::DegenerateConfiguration("collinear points".into()));
        }
        Ok(Self {
            cx,
            cy,
            scale: T::SQRT_2() / mean,
        })
    }

    fn apply(&self, p: Point2<T>) -> Point2<T> {
        Point2::new((p.a - self.cx) * self.scale, (p.b - self.cy) * self.scale)
    }

    fn matrix(&self) -> [T; 9] {
        let (o, z, s) = (T::one(), T::zero(), self.scale);
        [s, z, -s * self.cx, z, s, -s * self.cy, z, z, o]
    }

    fn inverse_matrix(&self) -> [T; 9] {
        let (o, z, s) = (T::one(), T::zero(), T::one() / self.scale);
        [s, z, self.cx, z, s, self.cy, z, z, o]
    }
}

pub(crate) struct RightSingular<T> {
    /// Singular values, unsorted, one per column.
    pub values: Vec<T>,
    /// Row-major `n×n`; column `j` is the vector for `values[j]`.
    pub vectors: Vec<T>,
}

/// One-sided Jacobi (Hestenes) SVD of the row-major `m×n` matrix `a`.
///
/// `a` is overwritten with `U·Σ`. Returns the singular values and the right
/// singular vectors.
pub(crate) fn right_singular_vectors<T: Real>(a: &mut [T], n: usize) -> RightSingular<T> {
    let m = a.len() / n;
    let mut v = vec![T::zero(); n * n];
    for i in 0..n {
        v[i * n + i] = T::one();
    }
    let eps = T::epsilon();
    // columns below this squared norm are numerically zero
    let floor = a.iter().fold(T::zero(), |acc, &x| acc + x * x) * eps * eps;
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n - 1 {
            for q in p + 1..n {
                let (mut alpha, mut beta, mut gamma) = (T::zero(), T::zero(), T::zero());
                for i in 0..m {
                    let (ap, aq) = (a[i * n + p], a[i * n + q]);
                    alpha = alpha + ap * ap;
                    beta = beta + aq * aq;
                    gamma = gamma + ap * aq;
                }
                if gamma.abs() <= eps * (alpha * beta).sqrt() || alpha.min(beta) <= floor {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (T::lit(2.0) * gamma);
                let t = zeta.signum() / (zeta.abs() + (T::one() + zeta * zeta).sqrt());
                let c = T::one() / (T::one() + t * t).sqrt();
                let s = c * t;
                for i in 0..m {
                    let (ap, aq) = (a[i * n + p], a[i * n + q]);
                    a[i * n + p] = c * ap - s * aq;
                    a[i * n + q] = s * ap + c * aq;
                }
                for i in 0..n {
                    let (vp, vq) = (v[i * n + p], v[i * n + q]);
                    v[i * n + p] = c * vp - s * vq;
                    v[i * n + q] = s * vp + c * vq;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let values = (0..n)
        .map(|j| (0..m).fold(T::zero(), |acc, i| acc + a[i * n + j] * a[i * n + j]).sqrt())
        .collect();
    RightSingular { values, vectors: v }
}
