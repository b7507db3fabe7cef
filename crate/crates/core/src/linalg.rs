//! Small dense linear algebra: row-major square matrices and a cyclic Jacobi
//! eigensolver for symmetric matrices. Sizes here never exceed a few dozen.

use crate::Scalar;

#[derive(Clone, Debug, PartialEq)]
pub struct Mat<T> {
    pub n: usize,
    pub data: Vec<T>,
}

impl<T: Scalar> Mat<T> {
    pub fn zeros(n: usize) -> Self {
        Mat { n, data: vec![T::zero(); n * n] }
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: T) {
        self.data[i * self.n + j] = v;
    }

    /// `AᵀA`.
    pub fn gram(&self) -> Self {
        let n = self.n;
        let mut g = Mat::zeros(n);
        for i in 0..n {
            for j in i..n {
                let mut s = T::zero();
                for k in 0..n {
                    s += self.get(k, i) * self.get(k, j);
                }
                g.set(i, j, s);
                g.set(j, i, s);
            }
        }
        g
    }

    pub fn mul_vec(&self, x: &[T]) -> Vec<T> {
        (0..self.n).map(|i| (0..self.n).map(|j| self.get(i, j) * x[j]).sum()).collect()
    }
}

/// Eigen-decomposition of a symmetric matrix by cyclic Jacobi rotations.
/// Returns eigenvalues (unsorted) and the eigenvectors as columns.
pub fn symmetric_eigen<T: Scalar>(a: &Mat<T>) -> (Vec<T>, Mat<T>) {
    let n = a.n;
    let mut m = a.clone();
    let mut v = Mat::zeros(n);
    for i in 0..n {
        v.set(i, i, T::one());
    }
    let tiny = T::epsilon() * T::epsilon();
    for _sweep in 0..64 {
        let mut off = T::zero();
        let mut diag = T::zero();
        for i in 0..n {
            diag += m.get(i, i) * m.get(i, i);
            for j in (i + 1)..n {
                off += m.get(i, j) * m.get(i, j);
            }
        }
        if off <= tiny * diag || off == T::zero() {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m.get(p, q);
                if apq == T::zero() {
                    continue;
                }
                let app = m.get(p, p);
                let aqq = m.get(q, q);
                let theta = (aqq - app) / (T::two() * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + T::one()).sqrt());
                let c = T::one() / (t * t + T::one()).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = m.get(k, p);
                    let akq = m.get(k, q);
                    m.set(k, p, c * akp - s * akq);
                    m.set(k, q, s * akp + c * akq);
                }
                for k in 0..n {
                    let apk = m.get(p, k);
                    let aqk = m.get(q, k);
                    m.set(p, k, c * apk - s * aqk);
                    m.set(q, k, s * apk + c * aqk);
                }
                for k in 0..n {
                    let vkp = v.get(k, p);
                    let vkq = v.get(k, q);
                    v.set(k, p, c * vkp - s * vkq);
                    v.set(k, q, s * vkp + c * vkq);
                }
            }
        }
    }
    ((0..n).map(|i| m.get(i, i)).collect(), v)
}

/// Largest eigenvalue of a symmetric matrix and a unit eigenvector for it.
pub fn top_eigenpair<T: Scalar>(a: &Mat<T>) -> (T, Vec<T>) {
    let (vals, vecs) = symmetric_eigen(a);
    let (k, &lambda) = vals
        .iter()
        .enumerate()
        .fold(None, |acc: Option<(usize, &T)>, (i, x)| match acc {
            Some((_, best)) if *best >= *x => acc,
            _ => Some((i, x)),
        })
        .expect("non-empty matrix");
    (lambda, (0..a.n).map(|i| vecs.get(i, k)).collect())
}

/// Largest singular value of a square matrix with its right singular vector.
pub fn top_singular<T: Scalar>(a: &Mat<T>) -> (T, Vec<T>) {
    let (lambda, v) = top_eigenpair(&a.gram());
    (lambda.max(T::zero()).sqrt(), v)
}
