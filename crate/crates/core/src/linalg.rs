//! Small dense linear algebra kernels used by the radial solvers.

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Row-major dense matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Matrix<T> {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<T>,
}

impl<T: Real> Matrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![T::zero(); rows * cols] }
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: T) {
        self.data[i * self.cols + j] = v;
    }

    #[inline]
    pub fn add_to(&mut self, i: usize, j: usize, v: T) {
        let k = i * self.cols + j;
        self.data[k] = self.data[k] + v;
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn mul_vec(&self, x: &[T]) -> Vec<T> {
        assert_eq!(x.len(), self.cols);
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(x).fold(T::zero(), |a, (&m, &v)| a + m * v))
            .collect()
    }

    pub fn mul_vec_transposed(&self, y: &[T]) -> Vec<T> {
        assert_eq!(y.len(), self.rows);
        let mut out = vec![T::zero(); self.cols];
        for (i, &yi) in y.iter().enumerate() {
            if yi == T::zero() {
                continue;
            }
            for (o, &m) in out.iter_mut().zip(self.row(i)) {
                *o = *o + m * yi;
            }
        }
        out
    }
}

/// LU factorization with row equilibration and partial pivoting,
/// `P D A = L U` with `D` scaling every row to unit max-norm.
#[derive(Clone, Debug)]
pub struct Lu<T> {
    n: usize,
    lu: Vec<T>,
    perm: Vec<usize>,
    row_scale: Vec<T>,
    min_pivot: T,
}

impl<T: Real> Lu<T> {
    /// Factor a square matrix. Fails with `SingularOperator` when the
    /// smallest pivot relative to the largest falls below `rel_tol`.
    pub fn factor(a: &Matrix<T>, rel_tol: T) -> Result<Self> {
        assert_eq!(a.rows, a.cols, "LU needs a square matrix");
        let n = a.rows;
        let mut lu = a.data.clone();
        let mut row_scale = vec![T::one(); n];
        for (i, d) in row_scale.iter_mut().enumerate() {
            let big = lu[i * n..(i + 1) * n].iter().fold(T::zero(), |m, x| m.max(x.abs()));
            if big == T::zero() {
                return Err(Error::SingularOperator { pivot: 0.0 });
            }
            *d = big.recip();
            lu[i * n..(i + 1) * n].iter_mut().for_each(|x| *x = *x * *d);
        }
        let mut perm: Vec<usize> = (0..n).collect();
        let mut max_pivot = T::zero();
        let mut min_pivot = T::infinity();
        for k in 0..n {
            let mut p = k;
            let mut best = lu[k * n + k].abs();
            for i in k + 1..n {
                let v = lu[i * n + k].abs();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if p != k {
                for j in 0..n {
                    lu.swap(k * n + j, p * n + j);
                }
                perm.swap(k, p);
            }
            let pivot = lu[k * n + k];
            max_pivot = max_pivot.max(pivot.abs());
            min_pivot = min_pivot.min(pivot.abs());
            if pivot == T::zero() {
                return Err(Error::SingularOperator { pivot: 0.0 });
            }
            for i in k + 1..n {
                let f = lu[i * n + k] / pivot;
                lu[i * n + k] = f;
                if f != T::zero() {
                    for j in k + 1..n {
                        lu[i * n + j] = lu[i * n + j] - f * lu[k * n + j];
                    }
                }
            }
        }
        let rel = if max_pivot > T::zero() { min_pivot / max_pivot } else { T::zero() };
        if rel < rel_tol {
            return Err(Error::SingularOperator { pivot: rel.to_f64_lossy() });
        }
        Ok(Self { n, lu, perm, row_scale, min_pivot })
    }

    pub fn min_pivot(&self) -> T {
        self.min_pivot
    }

    pub fn solve(&self, b: &[T]) -> Vec<T> {
        let n = self.n;
        let mut x: Vec<T> = self.perm.iter().map(|&p| b[p] * self.row_scale[p]).collect();
        for i in 0..n {
            let mut acc = x[i];
            for j in 0..i {
                acc = acc - self.lu[i * n + j] * x[j];
            }
            x[i] = acc;
        }
        for i in (0..n).rev() {
            let mut acc = x[i];
            for j in i + 1..n {
                acc = acc - self.lu[i * n + j] * x[j];
            }
            x[i] = acc / self.lu[i * n + i];
        }
        x
    }

    /// Solve `Aᵀ x = b`.
    pub fn solve_transposed(&self, b: &[T]) -> Vec<T> {
        let n = self.n;
        // Aᵀ = Uᵀ Lᵀ P
        let mut z = b.to_vec();
        for i in 0..n {
            let mut acc = z[i];
            for j in 0..i {
                acc = acc - self.lu[j * n + i] * z[j];
            }
            z[i] = acc / self.lu[i * n + i];
        }
        for i in (0..n).rev() {
            let mut acc = z[i];
            for j in i + 1..n {
                acc = acc - self.lu[j * n + i] * z[j];
            }
            z[i] = acc;
        }
        let mut x = vec![T::zero(); n];
        for (k, &p) in self.perm.iter().enumerate() {
            x[p] = z[k] * self.row_scale[p];
        }
        x
    }
}

pub fn norm2<T: Real>(v: &[T]) -> T {
    v.iter().fold(T::zero(), |a, &x| a + x * x).sqrt()
}

pub fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |s, (&x, &y)| s + x * y)
}

/// Largest singular value of a linear map given by its action and the
/// action of its transpose, by power iteration on `MᵀM`.
pub fn largest_singular_value<T: Real>(
    dim: usize,
    apply: impl Fn(&[T]) -> Vec<T>,
    apply_t: impl Fn(&[T]) -> Vec<T>,
    start: &[T],
    max_iter: usize,
    rel_tol: T,
) -> T {
    assert_eq!(start.len(), dim);
    let mut v = start.to_vec();
    let n0 = norm2(&v);
    v.iter_mut().for_each(|x| *x = *x / n0);
    let mut sigma = T::zero();
    for _ in 0..max_iter {
        let w = apply(&v);
        let s_new = norm2(&w);
        let mut u = apply_t(&w);
        let nu = norm2(&u);
        if nu == T::zero() {
            return s_new;
        }
        u.iter_mut().for_each(|x| *x = *x / nu);
        v = u;
        if (s_new - sigma).abs() <= rel_tol * s_new {
            return s_new.max(sigma);
        }
        sigma = s_new;
    }
    sigma
}

/// Finite-difference weights (Fornberg) for derivatives `0..=max_order`
/// at `x0` from nodes `xs`; returns `w[order][node]`.
pub fn fornberg_weights<T: Real>(x0: T, xs: &[T], max_order: usize) -> Vec<Vec<T>> {
    let n = xs.len();
    let mut c = vec![vec![T::zero(); n]; max_order + 1];
    let mut c1 = T::one();
    let mut c4 = xs[0] - x0;
    c[0][0] = T::one();
    for i in 1..n {
        let mn = i.min(max_order);
        let mut c2 = T::one();
        let c5 = c4;
        c4 = xs[i] - x0;
        for j in 0..i {
            let c3 = xs[i] - xs[j];
            c2 = c2 * c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[k][i] = c1
                        * (T::from_usize_lossy(k) * c[k - 1][i - 1] - c5 * c[k][i - 1])
                        / c2;
                }
                c[0][i] = -c1 * c5 * c[0][i - 1] / c2;
            }
            for k in (1..=mn).rev() {
                c[k][j] = (c4 * c[k][j] - T::from_usize_lossy(k) * c[k - 1][j]) / c3;
            }
            c[0][j] = c4 * c[0][j] / c3;
        }
        c1 = c2;
    }
    c
}

/// Weighted linear least squares via normal equations with column scaling.
/// Returns the coefficient vector and the scaled condition proxy.
pub fn weighted_least_squares<T: Real>(
    basis_rows: &[Vec<T>],
    y: &[T],
    w: &[T],
) -> Result<(Vec<T>, T)> {
    let p = basis_rows.first().map(|r| r.len()).unwrap_or(0);
    if basis_rows.len() < p || p == 0 {
        return Err(Error::FitIllConditioned(format!(
            "{} samples for {} unknowns",
            basis_rows.len(),
            p
        )));
    }
    let mut scale = vec![T::zero(); p];
    for row in basis_rows {
        for (s, &v) in scale.iter_mut().zip(row) {
            *s = s.max(v.abs());
        }
    }
    if scale.iter().any(|&s| s == T::zero()) {
        return Err(Error::FitIllConditioned("basis column vanishes on window".into()));
    }
    let mut a = Matrix::zeros(p, p);
    let mut rhs = vec![T::zero(); p];
    for ((row, &yi), &wi) in basis_rows.iter().zip(y).zip(w) {
        for i in 0..p {
            let ri = row[i] / scale[i];
            rhs[i] = rhs[i] + wi * ri * yi;
            for j in 0..p {
                a.add_to(i, j, wi * ri * row[j] / scale[j]);
            }
        }
    }
    let lu = Lu::factor(&a, T::lit(1e-14)).map_err(|e| Error::FitIllConditioned(e.to_string()))?;
    let cond = lu.min_pivot();
    let x = lu.solve(&rhs);
    Ok((x.iter().zip(&scale).map(|(&xi, &s)| xi / s).collect(), cond))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lu_solves_and_transposes() {
        let mut a = Matrix::<f64>::zeros(3, 3);
        let vals = [[2.0, 1.0, 0.5], [1.0, -3.0, 2.0], [0.0, 4.0, 1.0]];
        for i in 0..3 {
            for j in 0..3 {
                a.set(i, j, vals[i][j]);
            }
        }
        let lu = Lu::factor(&a, 1e-14).unwrap();
        let b = [1.0, 2.0, 3.0];
        let x = lu.solve(&b);
        let r = a.mul_vec(&x);
        for i in 0..3 {
            assert!((r[i] - b[i]).abs() < 1e-13);
        }
        let y = lu.solve_transposed(&b);
        let r = a.mul_vec_transposed(&y);
        for i in 0..3 {
            assert!((r[i] - b[i]).abs() < 1e-13);
        }
    }

    #[test]
    fn singular_matrix_is_rejected() {
        let mut a = Matrix::<f64>::zeros(2, 2);
        a.set(0, 0, 1.0);
        a.set(0, 1, 2.0);
        a.set(1, 0, 2.0);
        a.set(1, 1, 4.0);
        assert!(matches!(Lu::factor(&a, 1e-12), Err(Error::SingularOperator { .. })));
    }

    #[test]
    fn fornberg_central_second_derivative() {
        let xs = [-1.0f64, 0.0, 1.0];
        let w = fornberg_weights(0.0, &xs, 2);
        assert!((w[2][0] - 1.0).abs() < 1e-14);
        assert!((w[2][1] + 2.0).abs() < 1e-14);
        assert!((w[1][2] - 0.5).abs() < 1e-14);
    }

    #[test]
    fn power_iteration_finds_top_singular_value() {
        let mut a = Matrix::<f64>::zeros(2, 2);
        a.set(0, 0, 3.0);
        a.set(1, 1, 1.0);
        a.set(0, 1, 1.0);
        // singular values of [[3,1],[0,1]]: sqrt((11 ± sqrt(85))/2)
        let expect = ((11.0 + 85f64.sqrt()) / 2.0).sqrt();
        let s = largest_singular_value(
            2,
            |v| a.mul_vec(v),
            |v| a.mul_vec_transposed(v),
            &[1.0, 0.3],
            1000,
            1e-14,
        );
        assert!((s - expect).abs() < 1e-10);
    }
}
