//! Eigen-decomposition of 3x3 symmetric matrices.
//!
//! Structure tensors and point covariances are small symmetric matrices that
//! get decomposed millions of times per map, so the solver is analytic: the
//! eigenvalues come from the trigonometric solution of the characteristic
//! polynomial and the eigenvectors from cross products of the shifted matrix,
//! following Eberly's robust construction. When the spectrum is numerically
//! degenerate (eigenvalue gap below `1e-12` relative to the largest
//! eigenvalue) the solver falls back to cyclic Jacobi rotations, which handle
//! repeated eigenvalues without cancellation.

use nalgebra::{Matrix3, Vector3};

/// Eigen-decomposition of a symmetric 3x3 matrix.
///
/// `values` are sorted descending and `vectors` holds the matching
/// eigenvectors as orthonormal columns, so `m ≈ V diag(values) Vᵀ`.
#[derive(Debug, Clone, Copy)]
pub struct SymEigen3 {
    pub values: Vector3<f64>,
    pub vectors: Matrix3<f64>,
}

impl SymEigen3 {
    /// Rebuilds the matrix from its eigen-pairs.
    pub fn reconstruct(&self) -> Matrix3<f64> {
        let mut m = Matrix3::zeros();
        for i in 0..3 {
            let e = self.vectors.column(i);
            m += self.values[i] * e * e.transpose();
        }
        m
    }
}

/// Relative eigenvalue gap below which the Jacobi fallback takes over.
const DEGENERATE_GAP: f64 = 1e-12;

/// Decomposes a symmetric 3x3 matrix into eigenvalues and eigenvectors.
///
/// The input is assumed symmetric; only symmetric reads are performed, so a
/// matrix that is symmetric up to rounding is handled as its symmetric part.
pub fn sym_eigen3(m: &Matrix3<f64>) -> SymEigen3 {
    let scale = m.abs().max();
    if scale == 0.0 {
        return SymEigen3 {
            values: Vector3::zeros(),
            vectors: Matrix3::identity(),
        };
    }
    let b = m / scale;
    let values = analytic_eigenvalues(&b);
    let gap = (values[0] - values[1]).min(values[1] - values[2]);
    let mut out = if gap < DEGENERATE_GAP * values[0].abs().max(1.0) {
        jacobi(&b)
    } else {
        SymEigen3 {
            values,
            vectors: analytic_eigenvectors(&b, &values),
        }
    };
    out.values *= scale;
    out
}

/// Trigonometric solution of the characteristic polynomial.
///
/// Returns the eigenvalues of `b` in descending order; `b` must be scaled to
/// unit magnitude by the caller.
fn analytic_eigenvalues(b: &Matrix3<f64>) -> Vector3<f64> {
    let p1 = b[(0, 1)].powi(2) + b[(0, 2)].powi(2) + b[(1, 2)].powi(2);
    let q = b.trace() / 3.0;
    let p2 = (b[(0, 0)] - q).powi(2) + (b[(1, 1)] - q).powi(2) + (b[(2, 2)] - q).powi(2) + 2.0 * p1;
    let p = (p2 / 6.0).sqrt();
    if p == 0.0 {
        // b is a multiple of the identity.
        return Vector3::new(q, q, q);
    }
    let c = (b - Matrix3::identity() * q) / p;
    let r = (c.determinant() / 2.0).clamp(-1.0, 1.0);
    let phi = r.acos() / 3.0;
    let l1 = q + 2.0 * p * phi.cos();
    let l3 = q + 2.0 * p * (phi + 2.0 * std::f64::consts::FRAC_PI_3 * 2.0).cos();
    let l2 = 3.0 * q - l1 - l3;
    Vector3::new(l1, l2, l3)
}

/// Unit vectors spanning the plane orthogonal to the unit vector `w`.
fn orthogonal_complement(w: &Vector3<f64>) -> (Vector3<f64>, Vector3<f64>) {
    let u = if w.x.abs() > w.y.abs() {
        Vector3::new(-w.z, 0.0, w.x) / (w.x * w.x + w.z * w.z).sqrt()
    } else {
        Vector3::new(0.0, w.z, -w.y) / (w.y * w.y + w.z * w.z).sqrt()
    };
    (u, w.cross(&u))
}

/// Eigenvector for an eigenvalue that is well separated from the other two.
///
/// `b - λI` has rank 2, so the cross product of its two most independent
/// rows spans the null space.
fn isolated_eigenvector(b: &Matrix3<f64>, lambda: f64) -> Vector3<f64> {
    let s = b - Matrix3::identity() * lambda;
    let r0 = Vector3::new(s[(0, 0)], s[(0, 1)], s[(0, 2)]);
    let r1 = Vector3::new(s[(1, 0)], s[(1, 1)], s[(1, 2)]);
    let r2 = Vector3::new(s[(2, 0)], s[(2, 1)], s[(2, 2)]);
    let c01 = r0.cross(&r1);
    let c02 = r0.cross(&r2);
    let c12 = r1.cross(&r2);
    let (n01, n02, n12) = (c01.norm_squared(), c02.norm_squared(), c12.norm_squared());
    let best = if n01 >= n02 && n01 >= n12 {
        c01
    } else if n02 >= n12 {
        c02
    } else {
        c12
    };
    best / best.norm()
}

/// Eigenvector for `lambda` constrained to the plane orthogonal to `evec0`.
fn complement_eigenvector(b: &Matrix3<f64>, evec0: &Vector3<f64>, lambda: f64) -> Vector3<f64> {
    let (u, v) = orthogonal_complement(evec0);
    let au = b * u;
    let av = b * v;
    let m00 = u.dot(&au) - lambda;
    let m01 = u.dot(&av);
    let m11 = v.dot(&av) - lambda;
    // Null vector of the singular 2x2 [[m00, m01], [m01, m11]].
    if m00.abs() >= m11.abs() {
        let norm = m00.hypot(m01);
        if norm > 0.0 {
            (m01 * u - m00 * v) / norm
        } else {
            u
        }
    } else {
        let norm = m11.hypot(m01);
        if norm > 0.0 {
            (m11 * u - m01 * v) / norm
        } else {
            u
        }
    }
}

fn analytic_eigenvectors(b: &Matrix3<f64>, values: &Vector3<f64>) -> Matrix3<f64> {
    // Resolve the best-separated extreme eigenvalue first; the second comes
    // from a 2x2 problem in its orthogonal complement and the third closes
    // the right-handed frame.
    if values[0] - values[1] >= values[1] - values[2] {
        let e0 = isolated_eigenvector(b, values[0]);
        let e1 = complement_eigenvector(b, &e0, values[1]);
        let e2 = e0.cross(&e1);
        Matrix3::from_columns(&[e0, e1, e2])
    } else {
        let e2 = isolated_eigenvector(b, values[2]);
        let e1 = complement_eigenvector(b, &e2, values[1]);
        let e0 = e1.cross(&e2);
        Matrix3::from_columns(&[e0, e1, e2])
    }
}

/// Cyclic Jacobi iteration; slow path for degenerate spectra.
fn jacobi(b: &Matrix3<f64>) -> SymEigen3 {
    let mut a = *b;
    let mut v = Matrix3::identity();
    for _ in 0..50 {
        let off = a[(0, 1)].powi(2) + a[(0, 2)].powi(2) + a[(1, 2)].powi(2);
        if off < 1e-60 {
            break;
        }
        for &(p, q) in &[(0usize, 1usize), (0, 2), (1, 2)] {
            let apq = a[(p, q)];
            if apq == 0.0 {
                continue;
            }
            let tau = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
            let t = tau.signum() / (tau.abs() + (1.0 + tau * tau).sqrt());
            let c = 1.0 / (1.0 + t * t).sqrt();
            let s = t * c;
            let mut rot = Matrix3::identity();
            rot[(p, p)] = c;
            rot[(q, q)] = c;
            rot[(p, q)] = s;
            rot[(q, p)] = -s;
            a = rot.transpose() * a * rot;
            a[(p, q)] = 0.0;
            a[(q, p)] = 0.0;
            v *= rot;
        }
    }
    // Sort descending, carrying eigenvector columns along.
    let mut pairs: [(f64, Vector3<f64>); 3] = [
        (a[(0, 0)], v.column(0).into_owned()),
        (a[(1, 1)], v.column(1).into_owned()),
        (a[(2, 2)], v.column(2).into_owned()),
    ];
    pairs.sort_by(|x, y| y.0.total_cmp(&x.0));
    SymEigen3 {
        values: Vector3::new(pairs[0].0, pairs[1].0, pairs[2].0),
        vectors: Matrix3::from_columns(&[pairs[0].1, pairs[1].1, pairs[2].1]),
    }
}
