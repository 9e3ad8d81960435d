//! Dense complex matrices for the small (N ≲ 16) systems that appear in
//! coupled-channel scattering: solution matrices, Wronskians, S-matrices.

mod eigen;
mod orthogonal;

use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Neg, Sub};

use num_complex::Complex64;

use crate::error::{EppError, Result};

pub use eigen::{eigenphases_symmetric_unitary, symmetric_eigen};
pub use orthogonal::{
    all_planes, complex_orthogonal_2x2, complex_orthogonal_general, orthogonality_defect, ComplexOrthogonal, Sign,
};

/// Inversions with a reciprocal condition number below this are refused.
pub const MIN_RCOND: f64 = 1e-13;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Row-major dense complex matrix.
#[derive(Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl ComplexMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<Complex64>) -> Result<Self> {
        if rows == 0 || cols == 0 || data.len() != rows * cols {
            return Err(EppError::Shape {
                op: "ComplexMatrix::new",
                expected: format!("{} entries ({rows}x{cols}, nonempty)", rows * cols),
                found: format!("{} entries", data.len()),
            });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![ZERO; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_diagonal(&vec![ONE; n])
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn from_diagonal(diag: &[Complex64]) -> Self {
        let n = diag.len();
        let mut m = Self::zeros(n, n);
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = d;
        }
        m
    }

    pub fn from_real(rows: usize, cols: usize, data: &[f64]) -> Result<Self> {
        Self::new(rows, cols, data.iter().map(|&x| Complex64::new(x, 0.0)).collect())
    }

    /// Assembles a 2×2 block matrix `[[a, b], [c, d]]`.
    pub fn from_blocks(a: &Self, b: &Self, c: &Self, d: &Self) -> Result<Self> {
        if a.rows != b.rows || c.rows != d.rows || a.cols != c.cols || b.cols != d.cols {
            return Err(EppError::Shape {
                op: "from_blocks",
                expected: "conforming blocks".into(),
                found: format!(
                    "{}x{}, {}x{}, {}x{}, {}x{}",
                    a.rows, a.cols, b.rows, b.cols, c.rows, c.cols, d.rows, d.cols
                ),
            });
        }
        let (rows, cols) = (a.rows + c.rows, a.cols + b.cols);
        Ok(Self::from_fn(rows, cols, |i, j| match (i < a.rows, j < a.cols) {
            (true, true) => a[(i, j)],
            (true, false) => b[(i, j - a.cols)],
            (false, true) => c[(i - a.rows, j)],
            (false, false) => d[(i - a.rows, j - a.cols)],
        }))
    }

    /// Copies the `rows × cols` sub-block starting at `(row, col)`.
    pub fn block(&self, row: usize, col: usize, rows: usize, cols: usize) -> Self {
        assert!(row + rows <= self.rows && col + cols <= self.cols, "block out of range");
        Self::from_fn(rows, cols, |i, j| self[(row + i, col + j)])
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn diagonal(&self) -> Vec<Complex64> {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).collect()
    }

    pub fn column(&self, j: usize) -> Vec<Complex64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn conj(&self) -> Self {
        self.map(|z| z.conj())
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn map(&self, f: impl Fn(Complex64) -> Complex64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&z| f(z)).collect(),
        }
    }

    pub fn scale(&self, s: Complex64) -> Self {
        self.map(|z| z * s)
    }

    pub fn scale_real(&self, s: f64) -> Self {
        self.map(|z| z * s)
    }

    /// Real part as a complex matrix with zero imaginary entries.
    pub fn re(&self) -> Self {
        self.map(|z| Complex64::new(z.re, 0.0))
    }

    /// Real parts, row-major.
    pub fn real_entries(&self) -> Vec<f64> {
        self.data.iter().map(|z| z.re).collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, z| m.max(z.norm()))
    }

    pub fn max_abs_imag(&self) -> f64 {
        self.data.iter().fold(0.0, |m, z| m.max(z.im.abs()))
    }

    /// Maximum absolute column sum.
    pub fn norm1(&self) -> f64 {
        (0..self.cols)
            .map(|j| (0..self.rows).map(|i| self[(i, j)].norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// `max |A - B|` entrywise; panics on shape mismatch.
    pub fn max_diff(&self, other: &Self) -> f64 {
        (self - other).max_abs()
    }

    /// `max |A - Aᵀ|`.
    pub fn asymmetry(&self) -> f64 {
        self.max_diff(&self.transpose())
    }

    pub fn max_off_diagonal(&self) -> f64 {
        let mut m = 0.0_f64;
        for i in 0..self.rows {
            for j in 0..self.cols {
                if i != j {
                    m = m.max(self[(i, j)].norm());
                }
            }
        }
        m
    }

    pub fn lu(&self) -> Result<Lu> {
        Lu::new(self)
    }

    /// Inverse together with the reciprocal 1-norm condition number.
    /// Refuses when the reciprocal condition falls below `min_rcond`.
    pub fn inverse_with_rcond(&self, min_rcond: f64) -> Result<(Self, f64)> {
        let inv = self.lu()?.inverse();
        let rcond = 1.0 / (self.norm1() * inv.norm1());
        if !rcond.is_finite() || rcond < min_rcond {
            return Err(EppError::Singular {
                rcond: if rcond.is_finite() { rcond } else { 0.0 },
            });
        }
        Ok((inv, rcond))
    }

    pub fn inverse(&self) -> Result<Self> {
        self.inverse_with_rcond(MIN_RCOND).map(|(inv, _)| inv)
    }

    pub fn rcond(&self) -> f64 {
        match self.lu() {
            Ok(lu) => {
                let r = 1.0 / (self.norm1() * lu.inverse().norm1());
                if r.is_finite() {
                    r
                } else {
                    0.0
                }
            }
            Err(_) => 0.0,
        }
    }

    pub fn det(&self) -> Complex64 {
        match self.lu() {
            Ok(lu) => lu.det(),
            Err(_) => ZERO,
        }
    }

    /// Rank by Gaussian elimination with complete pivoting; pivots below
    /// `rel_tol · max|A|` count as zero.
    pub fn numerical_rank(&self, rel_tol: f64) -> usize {
        let mut a = self.clone();
        let threshold = rel_tol * self.max_abs();
        let (rows, cols) = (self.rows, self.cols);
        let mut rank = 0;
        while rank < rows.min(cols) {
            let mut best = (rank, rank, 0.0);
            for i in rank..rows {
                for j in rank..cols {
                    let v = a[(i, j)].norm();
                    if v > best.2 {
                        best = (i, j, v);
                    }
                }
            }
            if best.2 <= threshold {
                break;
            }
            let (p, q, _) = best;
            for j in 0..cols {
                a.data.swap(rank * cols + j, p * cols + j);
            }
            for i in 0..rows {
                a.data.swap(i * cols + rank, i * cols + q);
            }
            let pivot = a[(rank, rank)];
            for i in rank + 1..rows {
                let f = a[(i, rank)] / pivot;
                for j in rank..cols {
                    let v = a[(rank, j)];
                    a[(i, j)] -= f * v;
                }
            }
            rank += 1;
        }
        rank
    }

    fn assert_same_shape(&self, other: &Self, op: &str) {
        assert!(
            self.rows == other.rows && self.cols == other.cols,
            "{op}: shape mismatch {}x{} vs {}x{}",
            self.rows,
            self.cols,
            other.rows,
            other.cols
        );
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = Complex64;

    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        &mut self.data[i * self.cols + j]
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(
            self.cols, rhs.rows,
            "matrix product: {}x{} * {}x{}",
            self.rows, self.cols, rhs.rows, rhs.cols
        );
        let mut out = ComplexMatrix::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for l in 0..self.cols {
                let a = self[(i, l)];
                if a == ZERO {
                    continue;
                }
                let row = &rhs.data[l * rhs.cols..(l + 1) * rhs.cols];
                let dst = &mut out.data[i * rhs.cols..(i + 1) * rhs.cols];
                for (d, &b) in dst.iter_mut().zip(row) {
                    *d += a * b;
                }
            }
        }
        out
    }
}

impl Mul for ComplexMatrix {
    type Output = ComplexMatrix;

    fn mul(self, rhs: ComplexMatrix) -> ComplexMatrix {
        &self * &rhs
    }
}

impl Add for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn add(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        self.assert_same_shape(rhs, "add");
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Add for ComplexMatrix {
    type Output = ComplexMatrix;

    fn add(self, rhs: ComplexMatrix) -> ComplexMatrix {
        &self + &rhs
    }
}

impl Sub for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn sub(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        self.assert_same_shape(rhs, "sub");
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }
}

impl Sub for ComplexMatrix {
    type Output = ComplexMatrix;

    fn sub(self, rhs: ComplexMatrix) -> ComplexMatrix {
        &self - &rhs
    }
}

impl Neg for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn neg(self) -> ComplexMatrix {
        self.map(|z| -z)
    }
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            write!(f, "  ")?;
            for j in 0..self.cols {
                let z = self[(i, j)];
                write!(f, "{:+.6e}{:+.6e}i  ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

/// Partial-pivot LU factorization `P A = L U`.
#[derive(Clone, Debug)]
pub struct Lu {
    lu: ComplexMatrix,
    perm: Vec<usize>,
    swaps: usize,
}

impl Lu {
    fn new(a: &ComplexMatrix) -> Result<Self> {
        if !a.is_square() {
            return Err(EppError::Shape {
                op: "lu",
                expected: "square matrix".into(),
                found: format!("{}x{}", a.rows, a.cols),
            });
        }
        let n = a.rows;
        let mut lu = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut swaps = 0;
        for k in 0..n {
            let (p, pivot) = (k..n)
                .map(|i| (i, lu[(i, k)].norm()))
                .fold((k, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
            if pivot == 0.0 || !pivot.is_finite() {
                return Err(EppError::Singular { rcond: 0.0 });
            }
            if p != k {
                for j in 0..n {
                    lu.data.swap(k * n + j, p * n + j);
                }
                perm.swap(k, p);
                swaps += 1;
            }
            let inv_pivot = ONE / lu[(k, k)];
            for i in k + 1..n {
                let factor = lu[(i, k)] * inv_pivot;
                lu[(i, k)] = factor;
                if factor == ZERO {
                    continue;
                }
                for j in k + 1..n {
                    let u = lu[(k, j)];
                    lu[(i, j)] -= factor * u;
                }
            }
        }
        Ok(Self { lu, perm, swaps })
    }

    /// Solves `A X = B` for a right-hand side matrix.
    pub fn solve(&self, b: &ComplexMatrix) -> ComplexMatrix {
        let n = self.lu.rows;
        assert_eq!(b.rows, n, "lu solve: rhs has {} rows, expected {n}", b.rows);
        let mut x = ComplexMatrix::from_fn(n, b.cols, |i, j| b[(self.perm[i], j)]);
        for c in 0..b.cols {
            for i in 0..n {
                let mut s = x[(i, c)];
                for k in 0..i {
                    s -= self.lu[(i, k)] * x[(k, c)];
                }
                x[(i, c)] = s;
            }
            for i in (0..n).rev() {
                let mut s = x[(i, c)];
                for k in i + 1..n {
                    s -= self.lu[(i, k)] * x[(k, c)];
                }
                x[(i, c)] = s / self.lu[(i, i)];
            }
        }
        x
    }

    pub fn inverse(&self) -> ComplexMatrix {
        self.solve(&ComplexMatrix::identity(self.lu.rows))
    }

    pub fn det(&self) -> Complex64 {
        let d = self.lu.diagonal().into_iter().fold(ONE, |acc, z| acc * z);
        if self.swaps.is_multiple_of(2) {
            d
        } else {
            -d
        }
    }
}

/// Matrix Wronskian `W[u, v] = uᵀ v' − u'ᵀ v`.
pub fn wronskian(u: &ComplexMatrix, v: &ComplexMatrix, du: &ComplexMatrix, dv: &ComplexMatrix) -> Result<ComplexMatrix> {
    let n = u.rows;
    for (name, m) in [("u", u), ("v", v), ("du", du), ("dv", dv)] {
        if m.rows != n || m.cols != n {
            return Err(EppError::Shape {
                op: "wronskian",
                expected: format!("{n}x{n}"),
                found: format!("{name} is {}x{}", m.rows, m.cols),
            });
        }
    }
    Ok(&(&u.transpose() * dv) - &(&du.transpose() * v))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn free_jost_wronskian_is_2ik() {
        let (k, r, n) = (1.7, 0.9, 3);
        let e = |s: f64| ComplexMatrix::identity(n).scale((c(0.0, s * k * r)).exp());
        let de = |s: f64| e(s).scale(c(0.0, s * k));
        let w = wronskian(&e(-1.0), &e(1.0), &de(-1.0), &de(1.0)).unwrap();
        let expected = ComplexMatrix::identity(n).scale(c(0.0, 2.0 * k));
        assert!(w.max_diff(&expected) < 1e-14);
    }

    #[test]
    fn linear_wronskian_is_identity() {
        let r = 2.5;
        let n = 2;
        let id = ComplexMatrix::identity(n);
        let w = wronskian(&id, &id.scale_real(r), &ComplexMatrix::zeros(n, n), &id).unwrap();
        assert!(w.max_diff(&id) < 1e-15);
    }

    #[test]
    fn self_wronskian_of_symmetric_gauge_vanishes() {
        // u and u' with u^T u' symmetric
        let u = ComplexMatrix::new(2, 2, vec![c(1.0, 0.2), c(0.3, 0.0), c(-0.4, 1.0), c(2.0, 0.0)]).unwrap();
        let s = ComplexMatrix::new(2, 2, vec![c(0.5, 0.1), c(0.7, -0.2), c(0.7, -0.2), c(1.5, 0.0)]).unwrap();
        let du = &u.transpose().inverse().unwrap() * &s;
        let w = wronskian(&u, &u, &du, &du).unwrap();
        assert!(w.max_abs() < 1e-14);
    }

    #[test]
    fn wronskian_rejects_bad_shapes() {
        let a = ComplexMatrix::identity(2);
        let b = ComplexMatrix::identity(3);
        assert!(matches!(wronskian(&a, &b, &a, &a), Err(EppError::Shape { .. })));
    }

    #[test]
    fn lu_inverse_and_det() {
        let a = ComplexMatrix::new(
            3,
            3,
            vec![
                c(0.0, 0.0),
                c(2.0, 1.0),
                c(1.0, 0.0),
                c(1.0, -1.0),
                c(3.0, 0.0),
                c(0.0, 2.0),
                c(4.0, 0.0),
                c(0.5, 0.5),
                c(1.0, 1.0),
            ],
        )
        .unwrap();
        let inv = a.inverse().unwrap();
        assert!((&a * &inv).max_diff(&ComplexMatrix::identity(3)) < 1e-14);
        // cofactor expansion along the first row
        let m = |i: usize, j: usize| a[(i, j)];
        let det = m(0, 0) * (m(1, 1) * m(2, 2) - m(1, 2) * m(2, 1)) - m(0, 1) * (m(1, 0) * m(2, 2) - m(1, 2) * m(2, 0))
            + m(0, 2) * (m(1, 0) * m(2, 1) - m(1, 1) * m(2, 0));
        assert!((a.det() - det).norm() < 1e-13);
    }

    #[test]
    fn ill_conditioned_inverse_is_refused() {
        let a = ComplexMatrix::from_real(2, 2, &[1.0, 1.0, 1.0, 1.0 + 1e-15]).unwrap();
        assert!(matches!(a.inverse(), Err(EppError::Singular { .. })));
        let z = ComplexMatrix::zeros(2, 2);
        assert!(matches!(z.inverse(), Err(EppError::Singular { .. })));
    }

    #[test]
    fn blocks_round_trip() {
        let a = ComplexMatrix::from_fn(4, 4, |i, j| c(i as f64, j as f64));
        let rebuilt = ComplexMatrix::from_blocks(
            &a.block(0, 0, 2, 2),
            &a.block(0, 2, 2, 2),
            &a.block(2, 0, 2, 2),
            &a.block(2, 2, 2, 2),
        )
        .unwrap();
        assert_eq!(rebuilt, a);
    }

    #[test]
    fn new_rejects_wrong_length() {
        assert!(ComplexMatrix::new(2, 2, vec![ONE; 3]).is_err());
    }
}
