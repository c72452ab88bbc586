//! Dense row-major matrices, 2n×2n block layout and the symplectic form.
//!
//! Dimensions in this crate stay small (n ≤ 16), so everything is plain
//! `Vec<f64>` storage with straightforward loops.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use crate::error::{Error, Result};

/// Dense real matrix in row-major order. Every entry is finite.
#[derive(Clone, PartialEq)]
pub struct Mat {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl fmt::Debug for Mat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Mat {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            if i > 0 {
                write!(f, "; ")?;
            }
            for j in 0..self.cols {
                if j > 0 {
                    write!(f, ", ")?;
                }
                write!(f, "{:?}", self[(i, j)])?;
            }
        }
        write!(f, "]")
    }
}

fn check_finite(rows: usize, cols: usize, data: &[f64]) -> Result<()> {
    match data.iter().position(|v| !v.is_finite()) {
        Some(k) => Err(Error::NonFinite {
            row: k / cols.max(1),
            col: k % cols.max(1),
        }),
        None => {
            debug_assert_eq!(data.len(), rows * cols);
            Ok(())
        }
    }
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
        Self::from_fn(n, n, |i, j| if i == j { 1.0 } else { 0.0 })
    }

    /// Builds a matrix from a row-major buffer, rejecting a wrong length or
    /// any non-finite entry.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                op: "from_vec",
                lhs: (rows, cols),
                rhs: (data.len(), 1),
            });
        }
        check_finite(rows, cols, &data)?;
        Ok(Mat { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().find(|row| row.len() != c) {
            return Err(Error::DimensionMismatch {
                op: "from_rows",
                lhs: (r, c),
                rhs: (1, bad.len()),
            });
        }
        Self::from_vec(r, c, rows.concat())
    }

    /// Fills a matrix from an index function. Non-finite values are the
    /// caller's responsibility; use [`Mat::ensure_finite`] when the function
    /// comes from outside the crate.
    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Mat { rows, cols, data }
    }

    pub fn diag(values: &[f64]) -> Self {
        let n = values.len();
        Self::from_fn(n, n, |i, j| if i == j { values[i] } else { 0.0 })
    }

    /// Column vector.
    pub fn column(values: &[f64]) -> Self {
        Mat {
            rows: values.len(),
            cols: 1,
            data: values.to_vec(),
        }
    }

    pub fn ensure_finite(self) -> Result<Self> {
        check_finite(self.rows, self.cols, &self.data)?;
        Ok(self)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn col(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn transpose(&self) -> Mat {
        Mat::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn scale(&self, s: f64) -> Mat {
        Mat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|v| v * s).collect(),
        }
    }

    pub fn try_add(&self, other: &Mat) -> Result<Mat> {
        self.zip_with(other, "add", |a, b| a + b)
    }

    pub fn try_sub(&self, other: &Mat) -> Result<Mat> {
        self.zip_with(other, "sub", |a, b| a - b)
    }

    fn zip_with(&self, other: &Mat, op: &'static str, f: impl Fn(f64, f64) -> f64) -> Result<Mat> {
        if self.shape() != other.shape() {
            return Err(Error::DimensionMismatch {
                op,
                lhs: self.shape(),
                rhs: other.shape(),
            });
        }
        Ok(Mat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| f(*a, *b)).collect(),
        })
    }

    /// `self · v` for a plain vector.
    pub fn mul_vec(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.cols {
            return Err(Error::DimensionMismatch {
                op: "mul_vec",
                lhs: self.shape(),
                rhs: (v.len(), 1),
            });
        }
        Ok((0..self.rows)
            .map(|i| self.row(i).iter().zip(v).map(|(a, b)| a * b).sum())
            .collect())
    }

    pub fn trace(&self) -> f64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    /// Frobenius norm.
    pub fn norm_fro(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Largest absolute row sum (induced ∞-norm).
    pub fn norm_inf(&self) -> f64 {
        (0..self.rows)
            .map(|i| self.row(i).iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// Max absolute asymmetry `max |A_ij − A_ji|`.
    pub fn asymmetry(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let mut m = 0.0f64;
        for i in 0..self.rows {
            for j in (i + 1)..self.cols {
                m = m.max((self[(i, j)] - self[(j, i)]).abs());
            }
        }
        m
    }

    /// `(A + Aᵀ) / 2`.
    pub fn symmetrized(&self) -> Mat {
        Mat::from_fn(self.rows, self.cols, |i, j| 0.5 * (self[(i, j)] + self[(j, i)]))
    }

    /// Copy of the `rows × cols` block whose top-left corner is `(r0, c0)`.
    pub fn submatrix(&self, r0: usize, c0: usize, rows: usize, cols: usize) -> Mat {
        Mat::from_fn(rows, cols, |i, j| self[(r0 + i, c0 + j)])
    }

    /// Determinant by partial-pivot LU. Returns 0 for exactly singular input.
    pub fn det(&self) -> Result<f64> {
        if !self.is_square() {
            return Err(Error::DimensionMismatch {
                op: "det",
                lhs: self.shape(),
                rhs: self.shape(),
            });
        }
        let n = self.rows;
        let mut a = self.data.clone();
        let mut det = 1.0;
        for k in 0..n {
            let p = (k..n)
                .max_by(|&x, &y| a[x * n + k].abs().total_cmp(&a[y * n + k].abs()))
                .unwrap_or(k);
            if a[p * n + k] == 0.0 {
                return Ok(0.0);
            }
            if p != k {
                for j in 0..n {
                    a.swap(k * n + j, p * n + j);
                }
                det = -det;
            }
            let pivot = a[k * n + k];
            det *= pivot;
            for i in (k + 1)..n {
                let f = a[i * n + k] / pivot;
                for j in k..n {
                    a[i * n + j] -= f * a[k * n + j];
                }
            }
        }
        Ok(det)
    }
}

impl std::ops::Index<(usize, usize)> for Mat {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        assert!(i < self.rows && j < self.cols, "index ({i}, {j}) out of range");
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for Mat {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        assert!(i < self.rows && j < self.cols, "index ({i}, {j}) out of range");
        &mut self.data[i * self.cols + j]
    }
}

/// Standard matrix product; rejects non-conformable shapes.
pub fn matmul(a: &Mat, b: &Mat) -> Result<Mat> {
    if a.cols != b.rows {
        return Err(Error::DimensionMismatch {
            op: "matmul",
            lhs: a.shape(),
            rhs: b.shape(),
        });
    }
    let mut out = Mat::zeros(a.rows, b.cols);
    for i in 0..a.rows {
        for k in 0..a.cols {
            let aik = a.data[i * a.cols + k];
            if aik == 0.0 {
                continue;
            }
            let brow = &b.data[k * b.cols..(k + 1) * b.cols];
            let orow = &mut out.data[i * b.cols..(i + 1) * b.cols];
            for (o, bkj) in orow.iter_mut().zip(brow) {
                *o += aik * bkj;
            }
        }
    }
    Ok(out)
}

// Operator impls panic on shape mismatch; fallible callers use `matmul`,
// `try_add` and `try_sub`.
impl Mul for &Mat {
    type Output = Mat;
    fn mul(self, rhs: &Mat) -> Mat {
        matmul(self, rhs).unwrap_or_else(|e| panic!("{e}"))
    }
}

impl Add for &Mat {
    type Output = Mat;
    fn add(self, rhs: &Mat) -> Mat {
        self.try_add(rhs).unwrap_or_else(|e| panic!("{e}"))
    }
}

impl Sub for &Mat {
    type Output = Mat;
    fn sub(self, rhs: &Mat) -> Mat {
        self.try_sub(rhs).unwrap_or_else(|e| panic!("{e}"))
    }
}

impl Neg for &Mat {
    type Output = Mat;
    fn neg(self) -> Mat {
        self.scale(-1.0)
    }
}

/// Half-dimension `n` of a 2n-row matrix, or an error naming the operation.
fn half_rows(op: &'static str, n: usize, a: &Mat) -> Result<()> {
    if a.rows != 2 * n {
        return Err(Error::DimensionMismatch {
            op,
            lhs: (2 * n, 2 * n),
            rhs: a.shape(),
        });
    }
    Ok(())
}

/// The symplectic form `J = [[0, I], [−I, 0]]` on a 2n-dimensional phase space.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SymplecticForm {
    pub n: usize,
}

impl SymplecticForm {
    pub fn new(n: usize) -> Self {
        SymplecticForm { n }
    }

    pub fn matrix(&self) -> Mat {
        let n = self.n;
        Mat::from_fn(2 * n, 2 * n, |i, j| {
            if i < n && j == i + n {
                1.0
            } else if i >= n && j + n == i {
                -1.0
            } else {
                0.0
            }
        })
    }

    /// `J·A` by row shuffling.
    pub fn apply(&self, a: &Mat) -> Result<Mat> {
        apply_j(self.n, a)
    }

    /// `J·v` for a phase-space vector.
    pub fn apply_vec(&self, v: &[f64]) -> Vec<f64> {
        let n = self.n;
        debug_assert_eq!(v.len(), 2 * n);
        let mut out = Vec::with_capacity(2 * n);
        out.extend_from_slice(&v[n..]);
        out.extend(v[..n].iter().map(|x| -x));
        out
    }
}

/// Returns `J·A`: the top half of the result is the bottom half of `A`, the
/// bottom half is the negated top half.
pub fn apply_j(n: usize, a: &Mat) -> Result<Mat> {
    half_rows("apply_J", n, a)?;
    let c = a.cols;
    let mut data = Vec::with_capacity(a.data.len());
    data.extend_from_slice(&a.data[n * c..]);
    data.extend(a.data[..n * c].iter().map(|v| -v));
    Ok(Mat {
        rows: a.rows,
        cols: c,
        data,
    })
}

/// Returns `A·J`: column analogue of [`apply_j`].
pub fn right_apply_j(n: usize, a: &Mat) -> Result<Mat> {
    if a.cols != 2 * n {
        return Err(Error::DimensionMismatch {
            op: "right_apply_J",
            lhs: a.shape(),
            rhs: (2 * n, 2 * n),
        });
    }
    // (A·J)_ij = −A_{i,j+n} for j < n, A_{i,j−n} for j ≥ n.
    Ok(Mat::from_fn(a.rows, a.cols, |i, j| {
        if j < n {
            -a[(i, j + n)]
        } else {
            a[(i, j - n)]
        }
    }))
}

/// Singularity threshold used by [`solve_linear`], relative to the largest
/// row norm of the matrix.
pub const SINGULAR_PIVOT_RTOL: f64 = 1e-12;

/// Solves `A·X = B` by Gaussian elimination with partial pivoting.
pub fn solve_linear(a: &Mat, b: &Mat) -> Result<Mat> {
    if !a.is_square() || a.rows != b.rows {
        return Err(Error::DimensionMismatch {
            op: "solve_linear",
            lhs: a.shape(),
            rhs: b.shape(),
        });
    }
    let n = a.rows;
    let m = b.cols;
    let scale = (0..n)
        .map(|i| a.row(i).iter().map(|v| v * v).sum::<f64>().sqrt())
        .fold(0.0, f64::max);
    let threshold = SINGULAR_PIVOT_RTOL * scale;
    let mut lu = a.data.clone();
    let mut x = b.data.clone();

    for k in 0..n {
        let p = (k..n)
            .max_by(|&r, &s| lu[r * n + k].abs().total_cmp(&lu[s * n + k].abs()))
            .unwrap_or(k);
        let pivot = lu[p * n + k];
        if !(pivot.abs() > threshold) {
            return Err(Error::SingularMatrix {
                pivot: pivot.abs(),
                threshold,
            });
        }
        if p != k {
            for j in 0..n {
                lu.swap(k * n + j, p * n + j);
            }
            for j in 0..m {
                x.swap(k * m + j, p * m + j);
            }
        }
        for i in (k + 1)..n {
            let f = lu[i * n + k] / pivot;
            if f == 0.0 {
                continue;
            }
            for j in k..n {
                lu[i * n + j] -= f * lu[k * n + j];
            }
            for j in 0..m {
                x[i * m + j] -= f * x[k * m + j];
            }
        }
    }
    for k in (0..n).rev() {
        let pivot = lu[k * n + k];
        for j in 0..m {
            let mut s = x[k * m + j];
            for i in (k + 1)..n {
                s -= lu[k * n + i] * x[i * m + j];
            }
            x[k * m + j] = s / pivot;
        }
    }
    Mat::from_vec(n, m, x)
}

pub fn inverse(a: &Mat) -> Result<Mat> {
    solve_linear(a, &Mat::identity(a.rows))
}

/// `‖Tᵀ J T − J‖_F`; zero exactly when `T` is symplectic.
pub fn symplectic_defect(n: usize, t: &Mat) -> Result<f64> {
    half_rows("symplectic_defect", n, t)?;
    if !t.is_square() {
        return Err(Error::DimensionMismatch {
            op: "symplectic_defect",
            lhs: (2 * n, 2 * n),
            rhs: t.shape(),
        });
    }
    let jt = apply_j(n, t)?;
    let form = matmul(&t.transpose(), &jt)?;
    Ok(form.try_sub(&SymplecticForm::new(n).matrix())?.norm_fro())
}

/// A 2n×2n matrix viewed as four n×n blocks
/// `[[b11, b12], [b21, b22]]`.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockMat2n {
    pub n: usize,
    pub b11: Mat,
    pub b12: Mat,
    pub b21: Mat,
    pub b22: Mat,
}

impl BlockMat2n {
    pub fn new(b11: Mat, b12: Mat, b21: Mat, b22: Mat) -> Result<Self> {
        let n = b11.rows;
        for b in [&b11, &b12, &b21, &b22] {
            if b.shape() != (n, n) {
                return Err(Error::DimensionMismatch {
                    op: "BlockMat2n::new",
                    lhs: (n, n),
                    rhs: b.shape(),
                });
            }
        }
        Ok(BlockMat2n { n, b11, b12, b21, b22 })
    }

    pub fn split(m: &Mat) -> Result<Self> {
        if !m.is_square() || m.rows % 2 != 0 {
            return Err(Error::DimensionMismatch {
                op: "BlockMat2n::split",
                lhs: (m.rows + m.rows % 2, m.rows + m.rows % 2),
                rhs: m.shape(),
            });
        }
        let n = m.rows / 2;
        Ok(BlockMat2n {
            n,
            b11: m.submatrix(0, 0, n, n),
            b12: m.submatrix(0, n, n, n),
            b21: m.submatrix(n, 0, n, n),
            b22: m.submatrix(n, n, n, n),
        })
    }

    pub fn flatten(&self) -> Mat {
        let n = self.n;
        Mat::from_fn(2 * n, 2 * n, |i, j| match (i < n, j < n) {
            (true, true) => self.b11[(i, j)],
            (true, false) => self.b12[(i, j - n)],
            (false, true) => self.b21[(i - n, j)],
            (false, false) => self.b22[(i - n, j - n)],
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(rows: &[&[f64]]) -> Mat {
        Mat::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn matmul_examples() {
        let a = m(&[&[1.0, 2.0, 3.0], &[4.0, 5.0, 6.0], &[7.0, 8.0, 10.0]]);
        assert_eq!(matmul(&Mat::identity(3), &a).unwrap(), a);

        let j = m(&[&[0.0, 1.0], &[-1.0, 0.0]]);
        assert_eq!(&j * &j, Mat::identity(2).scale(-1.0));

        let p = matmul(&m(&[&[1.0, 2.0], &[3.0, 4.0]]), &m(&[&[5.0, 6.0], &[7.0, 8.0]])).unwrap();
        assert_eq!(p, m(&[&[19.0, 22.0], &[43.0, 50.0]]));
    }

    #[test]
    fn matmul_rejects_bad_shapes_with_shapes_in_message() {
        let err = matmul(&Mat::zeros(2, 3), &Mat::zeros(2, 3)).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("(2, 3)"), "{msg}");
    }

    #[test]
    fn constructors_reject_non_finite() {
        assert!(Mat::from_vec(1, 2, vec![1.0, f64::NAN]).is_err());
        assert!(Mat::from_vec(1, 2, vec![f64::INFINITY, 0.0]).is_err());
        assert!(Mat::from_vec(2, 2, vec![1.0]).is_err());
        assert!(Mat::from_rows(&[vec![1.0], vec![1.0, 2.0]]).is_err());
    }

    #[test]
    fn apply_j_examples() {
        assert_eq!(apply_j(1, &Mat::identity(2)).unwrap(), m(&[&[0.0, 1.0], &[-1.0, 0.0]]));
        let col = Mat::column(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(apply_j(2, &col).unwrap(), Mat::column(&[3.0, 4.0, -1.0, -2.0]));
        let twice = apply_j(2, &apply_j(2, &col).unwrap()).unwrap();
        assert_eq!(twice, col.scale(-1.0));
        assert!(apply_j(2, &Mat::zeros(3, 1)).is_err());
    }

    #[test]
    fn symplectic_form_properties() {
        for n in 1..5 {
            let j = SymplecticForm::new(n).matrix();
            assert_eq!(&j * &j, Mat::identity(2 * n).scale(-1.0));
            assert_eq!(j.transpose(), j.scale(-1.0));
        }
    }

    #[test]
    fn right_apply_j_matches_product() {
        let a = Mat::from_fn(4, 4, |i, j| (i * 4 + j) as f64 - 3.5);
        let j = SymplecticForm::new(2).matrix();
        assert_eq!(right_apply_j(2, &a).unwrap(), &a * &j);
    }

    #[test]
    fn solve_linear_examples() {
        let b = Mat::from_fn(3, 2, |i, j| (i + 2 * j) as f64);
        assert_eq!(solve_linear(&Mat::identity(3), &b).unwrap(), b);
        let x = solve_linear(&Mat::diag(&[2.0, 4.0]), &Mat::identity(2)).unwrap();
        assert_eq!(x, Mat::diag(&[0.5, 0.25]));
    }

    #[test]
    fn solve_linear_rejects_singular() {
        let a = m(&[&[1.0, 2.0], &[2.0, 4.0]]);
        assert!(matches!(
            solve_linear(&a, &Mat::identity(2)),
            Err(Error::SingularMatrix { .. })
        ));
        assert!(solve_linear(&Mat::zeros(2, 2), &Mat::identity(2)).is_err());
    }

    #[test]
    fn symplectic_defect_examples() {
        assert_eq!(symplectic_defect(1, &Mat::identity(2)).unwrap(), 0.0);
        let d = symplectic_defect(1, &Mat::identity(2).scale(2.0)).unwrap();
        assert!((d - 3.0 * 2f64.sqrt()).abs() < 1e-14);
        let (s, c) = 0.7f64.sin_cos();
        let rot = m(&[&[c, s], &[-s, c]]);
        assert!(symplectic_defect(1, &rot).unwrap() < 1e-15);
    }

    #[test]
    fn block_split_flatten() {
        let a = Mat::from_fn(4, 4, |i, j| (i * 10 + j) as f64);
        let b = BlockMat2n::split(&a).unwrap();
        assert_eq!(b.b12, m(&[&[2.0, 3.0], &[12.0, 13.0]]));
        assert_eq!(b.b21, m(&[&[20.0, 21.0], &[30.0, 31.0]]));
        assert_eq!(b.flatten(), a);
        assert!(BlockMat2n::split(&Mat::zeros(3, 3)).is_err());
    }

    #[test]
    fn determinant() {
        assert!((m(&[&[1.0, 2.0], &[3.0, 4.0]]).det().unwrap() + 2.0).abs() < 1e-14);
        assert_eq!(Mat::identity(5).det().unwrap(), 1.0);
        assert_eq!(m(&[&[1.0, 2.0], &[2.0, 4.0]]).det().unwrap(), 0.0);
    }
}
