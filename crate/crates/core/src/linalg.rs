//! Minimal dense linear algebra: row-major matrices, LU solves, and
//! Householder least squares. Problem sizes in this crate are tiny, so
//! everything is dense and allocation-heavy code paths are acceptable.

/// Dense row-major matrix of f64.
#[derive(Clone, Debug, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    /// rows x cols matrix filled with zeros.
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix { rows, cols, data: vec![0.0; rows * cols] }
    }

    /// Builds a matrix from row-major data.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), rows * cols, "row-major data length mismatch");
        Matrix { rows, cols, data }
    }

    /// Builds a matrix from equal-length rows.
    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let r = rows.len();
        let c = if r == 0 { 0 } else { rows[0].len() };
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            assert_eq!(row.len(), c, "ragged rows");
            data.extend_from_slice(row);
        }
        Matrix { rows: r, cols: c, data }
    }

    /// Number of rows.
    pub fn rows(&self) -> usize {
        self.rows
    }

    /// Number of columns.
    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Entry (i, j).
    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    /// Sets entry (i, j).
    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    /// Row i as a slice.
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    /// Column j as an owned vector.
    pub fn col(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    /// Row-major backing data.
    pub fn data(&self) -> &[f64] {
        &self.data
    }

    /// Matrix-vector product.
    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.cols, "matvec dimension mismatch");
        (0..self.rows).map(|i| dot(self.row(i), x)).collect()
    }

    /// Largest absolute entry (zero for an empty matrix).
    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()))
    }

    /// New matrix keeping only the listed columns, in the given order.
    pub fn select_columns(&self, cols: &[usize]) -> Matrix {
        let mut out = Matrix::zeros(self.rows, cols.len());
        for i in 0..self.rows {
            for (jj, &j) in cols.iter().enumerate() {
                out.set(i, jj, self.get(i, j));
            }
        }
        out
    }
}

/// Dot product of two equal-length slices.
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Squared Euclidean norm.
pub fn norm2_sq(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum()
}

/// Infinity norm.
pub fn norm_inf(v: &[f64]) -> f64 {
    v.iter().fold(0.0_f64, |acc, x| acc.max(x.abs()))
}

/// Solves the square system A x = b by LU with partial pivoting.
/// Returns None when a pivot falls below the singularity threshold.
pub fn lu_solve(a: &Matrix, b: &[f64]) -> Option<Vec<f64>> {
    assert_eq!(a.rows, a.cols, "lu_solve needs a square matrix");
    assert_eq!(b.len(), a.rows, "right-hand side length mismatch");
    let n = a.rows;
    let mut m = a.data.clone();
    let mut x = b.to_vec();
    let tol = 1e-12 * a.max_abs().max(1.0);
    for k in 0..n {
        let mut p = k;
        let mut best = m[k * n + k].abs();
        for i in k + 1..n {
            let v = m[i * n + k].abs();
            if v > best {
                best = v;
                p = i;
            }
        }
        if best <= tol {
            return None;
        }
        if p != k {
            for j in 0..n {
                m.swap(k * n + j, p * n + j);
            }
            x.swap(k, p);
        }
        let piv = m[k * n + k];
        for i in k + 1..n {
            let f = m[i * n + k] / piv;
            if f == 0.0 {
                continue;
            }
            m[i * n + k] = 0.0;
            for j in k + 1..n {
                m[i * n + j] -= f * m[k * n + j];
            }
            x[i] -= f * x[k];
        }
    }
    for i in (0..n).rev() {
        let mut s = x[i];
        for j in i + 1..n {
            s -= m[i * n + j] * x[j];
        }
        x[i] = s / m[i * n + i];
    }
    Some(x)
}

/// Least-squares solution of the tall system A x = b via Householder QR.
/// Returns None when A is numerically rank-deficient.
pub fn qr_least_squares(a: &Matrix, b: &[f64]) -> Option<Vec<f64>> {
    let m = a.rows;
    let n = a.cols;
    assert!(m >= n, "qr_least_squares needs rows >= cols");
    assert_eq!(b.len(), m, "right-hand side length mismatch");
    if n == 0 {
        return Some(Vec::new());
    }
    let mut r = a.data.clone();
    let mut y = b.to_vec();
    let tol = 1e-10 * a.max_abs().max(1.0);
    for k in 0..n {
        let mut sigma = 0.0;
        for i in k..m {
            sigma += r[i * n + k] * r[i * n + k];
        }
        sigma = sigma.sqrt();
        if sigma <= tol {
            return None;
        }
        let alpha = if r[k * n + k] >= 0.0 { -sigma } else { sigma };
        let mut v = vec![0.0; m - k];
        v[0] = r[k * n + k] - alpha;
        for i in k + 1..m {
            v[i - k] = r[i * n + k];
        }
        let vv = norm2_sq(&v);
        // Reflect the remaining columns and the right-hand side.
        for j in k..n {
            let mut s = 0.0;
            for i in k..m {
                s += v[i - k] * r[i * n + j];
            }
            let f = 2.0 * s / vv;
            for i in k..m {
                r[i * n + j] -= f * v[i - k];
            }
        }
        let mut s = 0.0;
        for i in k..m {
            s += v[i - k] * y[i];
        }
        let f = 2.0 * s / vv;
        for i in k..m {
            y[i] -= f * v[i - k];
        }
        r[k * n + k] = alpha;
        for i in k + 1..m {
            r[i * n + k] = 0.0;
        }
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let mut s = y[i];
        for j in i + 1..n {
            s -= r[i * n + j] * x[j];
        }
        x[i] = s / r[i * n + i];
    }
    Some(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lu_solves_a_known_system() {
        let a = Matrix::from_rows(&[vec![2.0, 1.0, -1.0], vec![-3.0, -1.0, 2.0], vec![-2.0, 1.0, 2.0]]);
        let x = lu_solve(&a, &[8.0, -11.0, -3.0]).unwrap();
        let expected = [2.0, 3.0, -1.0];
        for (xi, ei) in x.iter().zip(expected.iter()) {
            assert!((xi - ei).abs() < 1e-12, "{x:?}");
        }
    }

    #[test]
    fn lu_rejects_singular_matrices() {
        let a = Matrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 4.0]]);
        assert!(lu_solve(&a, &[1.0, 2.0]).is_none());
    }

    #[test]
    fn lu_handles_the_empty_system() {
        let a = Matrix::zeros(0, 0);
        assert_eq!(lu_solve(&a, &[]).unwrap(), Vec::<f64>::new());
    }

    #[test]
    fn lu_roundtrips_random_systems() {
        let mut state = 0x9e3779b97f4a7c15_u64;
        let mut next = move || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        };
        for n in 1..=8 {
            for _ in 0..50 {
                let mut a = Matrix::zeros(n, n);
                for i in 0..n {
                    for j in 0..n {
                        a.set(i, j, next() + if i == j { 4.0 } else { 0.0 });
                    }
                }
                let x: Vec<f64> = (0..n).map(|_| next()).collect();
                let b = a.matvec(&x);
                let got = lu_solve(&a, &b).unwrap();
                for (gi, xi) in got.iter().zip(x.iter()) {
                    assert!((gi - xi).abs() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn qr_matches_exact_solutions_on_square_systems() {
        let a = Matrix::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]);
        let x = qr_least_squares(&a, &[5.0, 11.0]).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-12);
        assert!((x[1] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn qr_minimizes_the_residual_on_tall_systems() {
        // Fit a line through three points; the normal equations give the answer.
        let a = Matrix::from_rows(&[vec![1.0, 0.0], vec![1.0, 1.0], vec![1.0, 2.0]]);
        let b = [1.0, 2.0, 2.0];
        let x = qr_least_squares(&a, &b).unwrap();
        // Normal equations: [3 3; 3 5] x = [5; 6] -> x = [7/6, 1/2].
        assert!((x[0] - 7.0 / 6.0).abs() < 1e-12);
        assert!((x[1] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn qr_rejects_dependent_columns() {
        let a = Matrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 4.0], vec![3.0, 6.0]]);
        assert!(qr_least_squares(&a, &[1.0, 2.0, 3.0]).is_none());
    }

    #[test]
    fn select_columns_reorders() {
        let a = Matrix::from_rows(&[vec![1.0, 2.0, 3.0], vec![4.0, 5.0, 6.0]]);
        let s = a.select_columns(&[2, 0]);
        assert_eq!(s.row(0), &[3.0, 1.0]);
        assert_eq!(s.row(1), &[6.0, 4.0]);
    }
}
