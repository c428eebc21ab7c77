//! Small dense real linear algebra used by the solvers: row-major matrices,
//! LU and Cholesky factorizations, and an orthonormal null-space basis.

use crate::error::{OtError, Result};

/// Dense row-major matrix of `f64`.
#[derive(Debug, Clone, PartialEq)]
pub struct Mat {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Mat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Mat::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let r = rows.len();
        let c = if r == 0 { 0 } else { rows[0].len() };
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            assert_eq!(row.len(), c, "ragged rows");
            data.extend_from_slice(row);
        }
        Mat {
            rows: r,
            cols: c,
            data,
        }
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn transpose(&self) -> Mat {
        let mut t = Mat::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.cols);
        let mut y = vec![0.0; self.rows];
        for i in 0..self.rows {
            let row = self.row(i);
            let mut acc = 0.0;
            for (a, b) in row.iter().zip(x) {
                acc += a * b;
            }
            y[i] = acc;
        }
        y
    }

    pub fn matmul(&self, other: &Mat) -> Mat {
        assert_eq!(self.cols, other.rows);
        let mut out = Mat::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    out[(i, j)] += a * other[(k, j)];
                }
            }
        }
        out
    }

    /// Max |a_ij - a_ji| over all pairs.
    pub fn asymmetry(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.rows {
            for j in (i + 1)..self.cols.min(self.rows) {
                worst = worst.max((self[(i, j)] - self[(j, i)]).abs());
            }
        }
        worst
    }
}

impl std::ops::Index<(usize, usize)> for Mat {
    type Output = f64;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for Mat {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

/// LU factorization with partial pivoting; solves `A x = b` for square `A`.
pub fn lu_solve(a: &Mat, b: &[f64]) -> Result<Vec<f64>> {
    assert_eq!(a.rows, a.cols, "lu_solve needs a square matrix");
    assert_eq!(b.len(), a.rows);
    let n = a.rows;
    let mut lu = a.data.clone();
    let mut perm: Vec<usize> = (0..n).collect();
    let mut scale = 0.0f64;
    for v in &lu {
        scale = scale.max(v.abs());
    }
    let tol = 1e-14 * (1.0 + scale);

    for k in 0..n {
        let mut piv = k;
        let mut best = lu[k * n + k].abs();
        for i in (k + 1)..n {
            let v = lu[i * n + k].abs();
            if v > best {
                best = v;
                piv = i;
            }
        }
        if best <= tol {
            return Err(OtError::SingularSystem(format!(
                "pivot {best:.3e} below tolerance at column {k}"
            )));
        }
        if piv != k {
            for j in 0..n {
                lu.swap(k * n + j, piv * n + j);
            }
            perm.swap(k, piv);
        }
        let d = lu[k * n + k];
        for i in (k + 1)..n {
            let f = lu[i * n + k] / d;
            lu[i * n + k] = f;
            if f != 0.0 {
                for j in (k + 1)..n {
                    lu[i * n + j] -= f * lu[k * n + j];
                }
            }
        }
    }

    let mut x = vec![0.0; n];
    for i in 0..n {
        x[i] = b[perm[i]];
    }
    for i in 0..n {
        let mut acc = x[i];
        for j in 0..i {
            acc -= lu[i * n + j] * x[j];
        }
        x[i] = acc;
    }
    for i in (0..n).rev() {
        let mut acc = x[i];
        for j in (i + 1)..n {
            acc -= lu[i * n + j] * x[j];
        }
        x[i] = acc / lu[i * n + i];
    }
    Ok(x)
}

/// Cholesky factor of a real symmetric matrix; `None` when a pivot falls at
/// or below `1e-12 * (1 + max diagonal)`.
pub fn cholesky(a: &Mat) -> Option<Mat> {
    assert_eq!(a.rows, a.cols);
    let n = a.rows;
    let mut max_diag = 0.0f64;
    for i in 0..n {
        max_diag = max_diag.max(a[(i, i)]);
    }
    let tol = 1e-12 * (1.0 + max_diag);
    let mut l = Mat::zeros(n, n);
    for j in 0..n {
        let mut d = a[(j, j)];
        for k in 0..j {
            d -= l[(j, k)] * l[(j, k)];
        }
        if d <= tol {
            return None;
        }
        let dj = d.sqrt();
        l[(j, j)] = dj;
        for i in (j + 1)..n {
            let mut v = a[(i, j)];
            for k in 0..j {
                v -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = v / dj;
        }
    }
    Some(l)
}

/// Solves `A x = b` given the Cholesky factor `L` (`A = L L^T`).
pub fn cholesky_solve(l: &Mat, b: &[f64]) -> Vec<f64> {
    let n = l.rows;
    let mut x = b.to_vec();
    for i in 0..n {
        let mut acc = x[i];
        for j in 0..i {
            acc -= l[(i, j)] * x[j];
        }
        x[i] = acc / l[(i, i)];
    }
    for i in (0..n).rev() {
        let mut acc = x[i];
        for j in (i + 1)..n {
            acc -= l[(j, i)] * x[j];
        }
        x[i] = acc / l[(i, i)];
    }
    x
}

/// Orthonormal basis of the null space of `a` (rows = constraints), found by
/// Householder QR of `a^T`. Returns an `n x (n - rank)` matrix whose columns
/// span `{x : a x = 0}`.
pub fn nullspace_basis(a: &Mat) -> Mat {
    let n = a.cols;
    let m = a.rows;
    if m == 0 {
        return Mat::identity(n);
    }
    // QR of a^T (n x m) via Householder reflectors applied to an identity.
    let mut r = a.transpose();
    let mut q = Mat::identity(n);
    let steps = m.min(n);
    for k in 0..steps {
        let mut norm = 0.0;
        for i in k..n {
            norm += r[(i, k)] * r[(i, k)];
        }
        let norm = norm.sqrt();
        if norm < 1e-14 {
            continue;
        }
        let alpha = if r[(k, k)] >= 0.0 { -norm } else { norm };
        let mut v = vec![0.0; n];
        for i in k..n {
            v[i] = r[(i, k)];
        }
        v[k] -= alpha;
        let vnorm2: f64 = v.iter().map(|x| x * x).sum();
        if vnorm2 < 1e-28 {
            continue;
        }
        // Apply H = I - 2vv^T/(v^T v) to r (left) and accumulate into q.
        for j in k..m {
            let mut dot = 0.0;
            for i in k..n {
                dot += v[i] * r[(i, j)];
            }
            let f = 2.0 * dot / vnorm2;
            for i in k..n {
                r[(i, j)] -= f * v[i];
            }
        }
        for j in 0..n {
            let mut dot = 0.0;
            for i in k..n {
                dot += v[i] * q[(i, j)];
            }
            let f = 2.0 * dot / vnorm2;
            for i in k..n {
                q[(i, j)] -= f * v[i];
            }
        }
    }
    // Rank = number of nonzero diagonal entries of R.
    let mut scale = 0.0f64;
    for v in &r.data {
        scale = scale.max(v.abs());
    }
    let tol = 1e-12 * (1.0 + scale);
    let mut rank = 0;
    for k in 0..steps {
        if r[(k, k)].abs() > tol {
            rank += 1;
        }
    }
    // Null space of a = last n - rank rows of Q (columns of Q^T beyond rank).
    let mut z = Mat::zeros(n, n - rank);
    for j in 0..(n - rank) {
        for i in 0..n {
            z[(i, j)] = q[(rank + j, i)];
        }
    }
    z
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn lu_solves_random_systems() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for n in [1usize, 3, 8, 15] {
            let mut a = Mat::zeros(n, n);
            for v in &mut a.data {
                *v = rng.gen_range(-1.0..1.0);
            }
            for i in 0..n {
                a[(i, i)] += 4.0; // diagonally dominant
            }
            let x_true: Vec<f64> = (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let b = a.matvec(&x_true);
            let x = lu_solve(&a, &b).unwrap();
            for (u, v) in x.iter().zip(&x_true) {
                assert!((u - v).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn lu_reports_singular() {
        let a = Mat::from_rows(&[vec![1.0, 2.0], vec![2.0, 4.0]]);
        assert!(lu_solve(&a, &[1.0, 1.0]).is_err());
    }

    #[test]
    fn cholesky_round_trip_and_rejection() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 6;
        let mut g = Mat::zeros(n, n);
        for v in &mut g.data {
            *v = rng.gen_range(-1.0..1.0);
        }
        let a = {
            let mut a = g.matmul(&g.transpose());
            for i in 0..n {
                a[(i, i)] += 1.0;
            }
            a
        };
        let l = cholesky(&a).expect("PD");
        let back = l.matmul(&l.transpose());
        for (u, v) in back.data.iter().zip(&a.data) {
            assert!((u - v).abs() < 1e-10);
        }
        let b: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let x = cholesky_solve(&l, &b);
        let r = a.matvec(&x);
        for (u, v) in r.iter().zip(&b) {
            assert!((u - v).abs() < 1e-9);
        }
        // Indefinite matrix is rejected.
        let mut bad = Mat::identity(3);
        bad[(2, 2)] = -1.0;
        assert!(cholesky(&bad).is_none());
    }

    #[test]
    fn nullspace_is_orthonormal_and_annihilated() {
        let a = Mat::from_rows(&[
            vec![1.0, 1.0, 0.0, 0.0, -1.0],
            vec![0.0, 1.0, 1.0, 1.0, 0.0],
        ]);
        let z = nullspace_basis(&a);
        assert_eq!(z.rows, 5);
        assert_eq!(z.cols, 3);
        let az = a.matmul(&z);
        for v in &az.data {
            assert!(v.abs() < 1e-12);
        }
        let ztz = z.transpose().matmul(&z);
        for i in 0..3 {
            for j in 0..3 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((ztz[(i, j)] - want).abs() < 1e-12);
            }
        }
    }
}
