//! Fixed-size 3×3 covariance helpers.

use crate::scalar::Real;

pub type Mat3<T> = [[T; 3]; 3];

pub fn identity<T: Real>() -> Mat3<T> {
    diag([T::one(); 3])
}

pub fn diag<T: Real>(d: [T; 3]) -> Mat3<T> {
    let z = T::zero();
    [[d[0], z, z], [z, d[1], z], [z, z, d[2]]]
}

pub fn trace<T: Real>(m: &Mat3<T>) -> T {
    m[0][0] + m[1][1] + m[2][2]
}

pub fn transpose<T: Real>(m: &Mat3<T>) -> Mat3<T> {
    let mut t = *m;
    for (i, row) in m.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            t[j][i] = *v;
        }
    }
    t
}

/// (P + Pᵀ) / 2
pub fn symmetrize<T: Real>(m: &Mat3<T>) -> Mat3<T> {
    let half = T::lit(0.5);
    let mut s = *m;
    for i in 0..3 {
        for j in (i + 1)..3 {
            let v = (m[i][j] + m[j][i]) * half;
            s[i][j] = v;
            s[j][i] = v;
        }
    }
    s
}

pub fn all_finite<T: Real>(m: &Mat3<T>) -> bool {
    m.iter().flatten().all(|v| v.is_finite())
}

/// Largest |Pᵢⱼ − Pⱼᵢ| relative to the largest entry magnitude (absolute
/// when the matrix is all zeros).
pub fn asymmetry<T: Real>(m: &Mat3<T>) -> T {
    let scale = m
        .iter()
        .flatten()
        .fold(T::zero(), |a, v| a.max(v.abs()))
        .max(T::one());
    let mut worst = T::zero();
    for i in 0..3 {
        for j in (i + 1)..3 {
            worst = worst.max((m[i][j] - m[j][i]).abs());
        }
    }
    worst / scale
}

/// Eigenvalues of a symmetric 3×3 matrix, ascending, by cyclic Jacobi
/// rotations. Only the upper triangle is read.
pub fn symmetric_eigenvalues<T: Real>(m: &Mat3<T>) -> [T; 3] {
    let mut a = symmetrize(m);
    let two = T::lit(2.0);
    for _sweep in 0..64 {
        let off = a[0][1].abs() + a[0][2].abs() + a[1][2].abs();
        if off == T::zero() {
            break;
        }
        for (p, q) in [(0usize, 1usize), (0, 2), (1, 2)] {
            if a[p][q] == T::zero() {
                continue;
            }
            let theta = (a[q][q] - a[p][p]) / (two * a[p][q]);
            let t = theta.signum() / (theta.abs() + (theta * theta + T::one()).sqrt());
            let c = T::one() / (t * t + T::one()).sqrt();
            let s = t * c;
            for k in 0..3 {
                let akp = a[k][p];
                let akq = a[k][q];
                a[k][p] = c * akp - s * akq;
                a[k][q] = s * akp + c * akq;
            }
            for k in 0..3 {
                let apk = a[p][k];
                let aqk = a[q][k];
                a[p][k] = c * apk - s * aqk;
                a[q][k] = s * apk + c * aqk;
            }
        }
    }
    let mut ev = [a[0][0], a[1][1], a[2][2]];
    ev.sort_by(|x, y| x.partial_cmp(y).unwrap_or(std::cmp::Ordering::Equal));
    ev
}

/// Symmetry and semidefiniteness figures for one covariance matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CovarianceHealth<T> {
    pub asymmetry: T,
    pub min_eigenvalue: T,
    pub trace: T,
}

impl<T: Real> CovarianceHealth<T> {
    pub fn of(m: &Mat3<T>) -> Self {
        CovarianceHealth {
            asymmetry: asymmetry(m),
            min_eigenvalue: symmetric_eigenvalues(m)[0],
            trace: trace(m),
        }
    }

    /// Symmetric to `sym_tol` and min eigenvalue ≥ −`psd_tol`·trace.
    pub fn is_healthy(&self, sym_tol: T, psd_tol: T) -> bool {
        self.asymmetry <= sym_tol && self.min_eigenvalue >= -psd_tol * self.trace.abs()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn eigenvalues_of_diagonal() {
        assert_eq!(symmetric_eigenvalues(&diag([3.0, -1.0, 2.0])), [-1.0, 2.0, 3.0]);
    }

    #[test]
    fn eigenvalues_known_matrix() {
        // [[2,1,0],[1,2,0],[0,0,5]] has eigenvalues 1, 3, 5.
        let m = [[2.0, 1.0, 0.0], [1.0, 2.0, 0.0], [0.0, 0.0, 5.0]];
        let ev = symmetric_eigenvalues(&m);
        assert_abs_diff_eq!(ev[0], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(ev[1], 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(ev[2], 5.0, epsilon = 1e-12);
    }

    #[test]
    fn health_flags_indefinite_matrix() {
        let m = [[1.0, 2.0, 0.0], [2.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
        let h = CovarianceHealth::of(&m);
        assert!(!h.is_healthy(1e-9, 1e-9));
        assert!(CovarianceHealth::of(&identity::<f64>()).is_healthy(1e-9, 1e-9));
    }

    proptest! {
        #[test]
        fn eigen_matches_nalgebra(v in proptest::collection::vec(-10.0..10.0f64, 6)) {
            let m = [[v[0], v[1], v[2]], [v[1], v[3], v[4]], [v[2], v[4], v[5]]];
            let ours = symmetric_eigenvalues(&m);
            let na = nalgebra::Matrix3::new(v[0], v[1], v[2], v[1], v[3], v[4], v[2], v[4], v[5]);
            let mut theirs: Vec<f64> = na.symmetric_eigenvalues().iter().copied().collect();
            theirs.sort_by(|a, b| a.partial_cmp(b).unwrap());
            for i in 0..3 {
                prop_assert!((ours[i] - theirs[i]).abs() < 1e-9);
            }
        }
    }
}
