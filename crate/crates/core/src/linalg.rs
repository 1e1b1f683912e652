//! Dense helpers for the d×d systems (d ≤ 3) that appear per time step.

use crate::error::{Error, Result};
use crate::real::Real;

/// Row-major square matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SmallMatrix<T> {
    n: usize,
    a: Vec<T>,
}

impl<T: Real> SmallMatrix<T> {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            a: vec![T::zero(); n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m[(i, i)] = T::one();
        }
        m
    }

    /// Builds the matrix whose j-th column is `cols[j]`.
    pub fn from_columns(cols: &[Vec<T>]) -> Self {
        let n = cols.len();
        let mut m = Self::zeros(n);
        for (j, c) in cols.iter().enumerate() {
            assert_eq!(c.len(), n, "column length");
            for i in 0..n {
                m[(i, j)] = c[i];
            }
        }
        m
    }

    pub fn from_rows(rows: &[Vec<T>]) -> Self {
        let n = rows.len();
        let mut m = Self::zeros(n);
        for (i, r) in rows.iter().enumerate() {
            assert_eq!(r.len(), n, "row length");
            for j in 0..n {
                m[(i, j)] = r[j];
            }
        }
        m
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.n);
        for i in 0..self.n {
            for j in 0..self.n {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn matmul(&self, other: &Self) -> Self {
        let n = self.n;
        let mut c = Self::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let aik = self[(i, k)];
                for j in 0..n {
                    c[(i, j)] = c[(i, j)] + aik * other[(k, j)];
                }
            }
        }
        c
    }

    pub fn matvec(&self, x: &[T]) -> Vec<T> {
        (0..self.n)
            .map(|i| (0..self.n).map(|j| self[(i, j)] * x[j]).sum())
            .collect()
    }

    /// Solves A x = b by Gaussian elimination with partial pivoting.
    pub fn solve(&self, b: &[T]) -> Result<Vec<T>> {
        let n = self.n;
        let mut a = self.a.clone();
        let mut x = b.to_vec();
        let scale = a.iter().fold(T::zero(), |m, v| m.max(v.abs()));
        for col in 0..n {
            let piv = (col..n)
                .max_by(|&i, &j| {
                    a[i * n + col]
                        .abs()
                        .partial_cmp(&a[j * n + col].abs())
                        .unwrap_or(std::cmp::Ordering::Equal)
                })
                .unwrap_or(col);
            if !(a[piv * n + col].abs() > scale * T::epsilon()) {
                return Err(Error::Singular {
                    context: "linear solve".into(),
                    condition: f64::INFINITY,
                });
            }
            if piv != col {
                for j in 0..n {
                    a.swap(col * n + j, piv * n + j);
                }
                x.swap(col, piv);
            }
            for i in col + 1..n {
                let f = a[i * n + col] / a[col * n + col];
                for j in col..n {
                    a[i * n + j] = a[i * n + j] - f * a[col * n + j];
                }
                x[i] = x[i] - f * x[col];
            }
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for j in i + 1..n {
                s = s - a[i * n + j] * x[j];
            }
            x[i] = s / a[i * n + i];
        }
        Ok(x)
    }

    /// Singular values, descending (eigenvalues of AᵀA by cyclic Jacobi).
    pub fn singular_values(&self) -> Vec<T> {
        let mut s: Vec<T> = symmetric_eigenvalues(&self.transpose().matmul(self))
            .into_iter()
            .map(|l| l.max(T::zero()).sqrt())
            .collect();
        s.sort_by(|a, b| b.partial_cmp(a).unwrap_or(std::cmp::Ordering::Equal));
        s
    }

    /// ‖A⁻¹‖₂ = 1/σ_min (infinite when singular).
    pub fn inverse_norm2(&self) -> T {
        let s = self.singular_values();
        let smin = s[s.len() - 1];
        if smin > T::zero() {
            T::one() / smin
        } else {
            T::infinity()
        }
    }

    /// 2-norm condition number σ_max/σ_min.
    pub fn cond2(&self) -> T {
        let s = self.singular_values();
        let smin = s[s.len() - 1];
        if smin > T::zero() {
            s[0] / smin
        } else {
            T::infinity()
        }
    }
}

impl<T> std::ops::Index<(usize, usize)> for SmallMatrix<T> {
    type Output = T;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.a[i * self.n + j]
    }
}

impl<T> std::ops::IndexMut<(usize, usize)> for SmallMatrix<T> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.a[i * self.n + j]
    }
}

fn symmetric_eigenvalues<T: Real>(m: &SmallMatrix<T>) -> Vec<T> {
    let n = m.dim();
    let mut a = m.clone();
    for _sweep in 0..64 {
        let off: T = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[(i, j)] * a[(i, j)])
            .sum();
        let diag: T = (0..n).map(|i| a[(i, i)] * a[(i, i)]).sum();
        if off <= T::epsilon() * T::epsilon() * diag || off == T::zero() {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[(p, q)];
                if apq == T::zero() {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (T::lit(2.0) * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + T::one()).sqrt());
                let c = T::one() / (t * t + T::one()).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
            }
        }
    }
    (0..n).map(|i| a[(i, i)]).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solve_small_system() {
        let a = SmallMatrix::from_rows(&[vec![0.0f64, 2.0, 1.0], vec![1.0, 1.0, 0.0], vec![3.0, 0.0, 1.0]]);
        let x = [1.0, -2.0, 0.5];
        let b = a.matvec(&x);
        let y = a.solve(&b).unwrap();
        for i in 0..3 {
            assert!((x[i] - y[i]).abs() < 1e-14);
        }
    }

    #[test]
    fn singular_values_of_diagonal_and_rotation() {
        let d = SmallMatrix::from_rows(&[vec![3.0f64, 0.0], vec![0.0, -0.5]]);
        let s = d.singular_values();
        assert!((s[0] - 3.0).abs() < 1e-14 && (s[1] - 0.5).abs() < 1e-14);
        assert!((d.inverse_norm2() - 2.0).abs() < 1e-13);
        let (c, sn) = (0.3f64.cos(), 0.3f64.sin());
        let r = SmallMatrix::from_rows(&[vec![c, -sn], vec![sn, c]]);
        assert!((r.cond2() - 1.0).abs() < 1e-13);
    }

    #[test]
    fn singular_matrix_is_reported() {
        let a = SmallMatrix::from_rows(&[vec![1.0f64, 2.0], vec![2.0, 4.0]]);
        assert!(a.solve(&[1.0, 1.0]).is_err());
        assert!(a.cond2() > 1e12);
    }
}
