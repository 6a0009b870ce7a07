//! Exact integer matrices: Smith normal form, linear solving and kernels.
//!
//! Everything here is generic over [`Scalar`]; the rest of the crate uses the
//! arbitrary precision alias [`Int`].

use std::fmt;
use std::ops::Mul;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::Signed;
use thiserror::Error;

/// Integer types the matrix algebra works over.
pub trait Scalar: Integer + Signed + Clone + fmt::Debug + fmt::Display + From<i32> + Send + Sync {}

impl<T> Scalar for T where T: Integer + Signed + Clone + fmt::Debug + fmt::Display + From<i32> + Send + Sync {}

/// Arbitrary precision integer used throughout the crate.
pub type Int = BigInt;
/// Integer matrix over [`Int`].
pub type IntMatrix = Matrix<Int>;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LinalgError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("modulus must be at least 2, got {0}")]
    BadModulus(String),
    #[error("ragged rows: expected {expected} columns, row {row} has {found}")]
    Ragged { expected: usize, row: usize, found: usize },
}

/// Dense row-major matrix. Zero rows or zero columns are allowed.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: fmt::Debug> fmt::Debug for Matrix<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rows: Vec<&[T]> = (0..self.rows).map(|i| &self.data[i * self.cols..(i + 1) * self.cols]).collect();
        write!(f, "{}x{} {:?}", self.rows, self.cols, rows)
    }
}

impl<T: fmt::Display> fmt::Display for Matrix<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for i in 0..self.rows {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "[")?;
            for j in 0..self.cols {
                if j > 0 {
                    write!(f, ",")?;
                }
                write!(f, "{}", self.data[i * self.cols + j])?;
            }
            write!(f, "]")?;
        }
        write!(f, "]")
    }
}

impl<T: Scalar> Matrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix { rows, cols, data: vec![T::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = T::one();
        }
        m
    }

    pub fn diagonal(rows: usize, cols: usize, diag: &[T]) -> Self {
        let mut m = Self::zeros(rows, cols);
        for (i, d) in diag.iter().enumerate().take(rows.min(cols)) {
            m.set(i, i, d.clone());
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Matrix { rows, cols, data }
    }

    /// Builds a matrix from rows; `cols` fixes the width when `rows` is empty.
    pub fn from_rows(rows: Vec<Vec<T>>, cols: usize) -> Result<Self, LinalgError> {
        let n = rows.len();
        let mut data = Vec::with_capacity(n * cols);
        for (i, r) in rows.into_iter().enumerate() {
            if r.len() != cols {
                return Err(LinalgError::Ragged { expected: cols, row: i, found: r.len() });
            }
            data.extend(r);
        }
        Ok(Matrix { rows: n, cols, data })
    }

    /// Builds a matrix whose columns are the given vectors of length `rows`.
    pub fn from_columns(rows: usize, columns: &[Vec<T>]) -> Self {
        let cols = columns.len();
        let mut m = Self::zeros(rows, cols);
        for (j, c) in columns.iter().enumerate() {
            assert_eq!(c.len(), rows, "column length mismatch");
            for (i, x) in c.iter().enumerate() {
                m.data[i * cols + j] = x.clone();
            }
        }
        m
    }

    pub fn from_i64_rows(rows: &[&[i64]], cols: usize) -> Self
    where
        T: From<i64>,
    {
        let v = rows.iter().map(|r| r.iter().map(|&x| T::from(x)).collect()).collect();
        Self::from_rows(v, cols).expect("well-formed literal")
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> &T {
        &self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: T) {
        self.data[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<T> {
        (0..self.rows).map(|i| self.get(i, j).clone()).collect()
    }

    pub fn columns(&self) -> impl Iterator<Item = Vec<T>> + '_ {
        (0..self.cols).map(move |j| self.column(j))
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|x| x.is_zero())
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self.get(j, i).clone())
    }

    pub fn mul_vec(&self, v: &[T]) -> Vec<T> {
        assert_eq!(v.len(), self.cols, "mul_vec dimension mismatch");
        (0..self.rows)
            .map(|i| {
                let mut acc = T::zero();
                for (a, b) in self.row(i).iter().zip(v) {
                    if !a.is_zero() && !b.is_zero() {
                        acc = acc + a.clone() * b.clone();
                    }
                }
                acc
            })
            .collect()
    }

    pub fn scale(&self, c: &T) -> Self {
        Matrix { rows: self.rows, cols: self.cols, data: self.data.iter().map(|x| x.clone() * c.clone()).collect() }
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols), "add dimension mismatch");
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a.clone() + b.clone()).collect(),
        }
    }

    pub fn neg(&self) -> Self {
        self.scale(&(-T::one()))
    }

    /// Entries reduced into `0..m`.
    pub fn reduce_mod(&self, m: &T) -> Self {
        Matrix { rows: self.rows, cols: self.cols, data: self.data.iter().map(|x| x.mod_floor(m)).collect() }
    }

    /// Horizontal concatenation; all blocks need `rows` rows.
    pub fn hstack(rows: usize, blocks: &[&Self]) -> Self {
        let cols = blocks.iter().map(|b| b.cols).sum();
        let mut m = Self::zeros(rows, cols);
        let mut off = 0;
        for b in blocks {
            assert_eq!(b.rows, rows, "hstack row mismatch");
            for i in 0..rows {
                for j in 0..b.cols {
                    m.data[i * cols + off + j] = b.get(i, j).clone();
                }
            }
            off += b.cols;
        }
        m
    }

    /// Vertical concatenation; all blocks need `cols` columns.
    pub fn vstack(cols: usize, blocks: &[&Self]) -> Self {
        let mut data = Vec::new();
        let mut rows = 0;
        for b in blocks {
            assert_eq!(b.cols, cols, "vstack column mismatch");
            data.extend(b.data.iter().cloned());
            rows += b.rows;
        }
        Matrix { rows, cols, data }
    }

    /// Block diagonal matrix.
    pub fn block_diag(blocks: &[&Self]) -> Self {
        let rows = blocks.iter().map(|b| b.rows).sum();
        let cols = blocks.iter().map(|b| b.cols).sum();
        let mut m = Self::zeros(rows, cols);
        let (mut r0, mut c0) = (0, 0);
        for b in blocks {
            for i in 0..b.rows {
                for j in 0..b.cols {
                    m.set(r0 + i, c0 + j, b.get(i, j).clone());
                }
            }
            r0 += b.rows;
            c0 += b.cols;
        }
        m
    }

    /// Kronecker product: entry ((i,k),(j,l)) = a[i][j] * b[k][l].
    pub fn kron(a: &Self, b: &Self) -> Self {
        let rows = a.rows * b.rows;
        let cols = a.cols * b.cols;
        let mut m = Self::zeros(rows, cols);
        for i in 0..a.rows {
            for j in 0..a.cols {
                let x = a.get(i, j);
                if x.is_zero() {
                    continue;
                }
                for k in 0..b.rows {
                    for l in 0..b.cols {
                        let y = b.get(k, l);
                        if !y.is_zero() {
                            m.set(i * b.rows + k, j * b.cols + l, x.clone() * y.clone());
                        }
                    }
                }
            }
        }
        m
    }

    pub fn select_rows(&self, idx: &[usize]) -> Self {
        Self::from_fn(idx.len(), self.cols, |i, j| self.get(idx[i], j).clone())
    }

    pub fn select_cols(&self, idx: &[usize]) -> Self {
        Self::from_fn(self.rows, idx.len(), |i, j| self.get(i, idx[j]).clone())
    }

    /// Drops columns that are entirely zero.
    pub fn nonzero_columns(&self) -> Self {
        let keep: Vec<usize> = (0..self.cols).filter(|&j| (0..self.rows).any(|i| !self.get(i, j).is_zero())).collect();
        self.select_cols(&keep)
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a != b {
            for j in 0..self.cols {
                self.data.swap(a * self.cols + j, b * self.cols + j);
            }
        }
    }

    fn swap_cols(&mut self, a: usize, b: usize) {
        if a != b {
            for i in 0..self.rows {
                self.data.swap(i * self.cols + a, i * self.cols + b);
            }
        }
    }

    /// row[dst] += q * row[src]
    fn add_row(&mut self, dst: usize, src: usize, q: &T) {
        for j in 0..self.cols {
            let s = self.data[src * self.cols + j].clone();
            if !s.is_zero() {
                let d = &mut self.data[dst * self.cols + j];
                *d = d.clone() + q.clone() * s;
            }
        }
    }

    /// col[dst] += q * col[src]
    fn add_col(&mut self, dst: usize, src: usize, q: &T) {
        for i in 0..self.rows {
            let s = self.data[i * self.cols + src].clone();
            if !s.is_zero() {
                let d = &mut self.data[i * self.cols + dst];
                *d = d.clone() + q.clone() * s;
            }
        }
    }

    fn negate_row(&mut self, i: usize) {
        for j in 0..self.cols {
            let d = &mut self.data[i * self.cols + j];
            *d = -d.clone();
        }
    }

    fn negate_col(&mut self, j: usize) {
        for i in 0..self.rows {
            let d = &mut self.data[i * self.cols + j];
            *d = -d.clone();
        }
    }
}

impl<T: Scalar> Mul for &Matrix<T> {
    type Output = Matrix<T>;

    fn mul(self, rhs: &Matrix<T>) -> Matrix<T> {
        assert_eq!(self.cols, rhs.rows, "matrix product dimension mismatch");
        let mut m: Matrix<T> = Matrix::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a.is_zero() {
                    continue;
                }
                for j in 0..rhs.cols {
                    let b = rhs.get(k, j);
                    if !b.is_zero() {
                        let d = &mut m.data[i * rhs.cols + j];
                        *d = d.clone() + a.clone() * b.clone();
                    }
                }
            }
        }
        m
    }
}

/// `U * M * V = S` with `U`, `V` unimodular and `S` diagonal in divisibility order.
#[derive(Clone, Debug)]
pub struct SmithDecomposition<T> {
    pub u: Matrix<T>,
    /// Inverse of `u`, maintained alongside it.
    pub u_inv: Matrix<T>,
    pub s: Matrix<T>,
    pub v: Matrix<T>,
    rank: usize,
}

impl<T: Scalar> SmithDecomposition<T> {
    pub fn rank(&self) -> usize {
        self.rank
    }

    /// Diagonal entries `d_1 | d_2 | ...`, nonnegative, of length `min(rows, cols)`.
    pub fn invariant_factors(&self) -> Vec<T> {
        (0..self.s.rows.min(self.s.cols)).map(|i| self.s.get(i, i).clone()).collect()
    }

    /// Diagonal entry `i` for every row index, zero past the rank.
    pub fn row_factor(&self, i: usize) -> T {
        if i < self.rank {
            self.s.get(i, i).clone()
        } else {
            T::zero()
        }
    }
}

/// Quotient rounded to the nearest integer, so remainders stay small.
fn nearest_quotient<T: Scalar>(a: &T, b: &T) -> T {
    let (q, r) = a.div_mod_floor(b);
    let two = T::from(2);
    if (r * two).abs() > b.abs() {
        q + T::one()
    } else {
        q
    }
}

/// Smith normal form with transforms.
///
/// The pivot is always the entry of least absolute value in the active block,
/// and rows/columns are reduced with nearest-integer quotients.
pub fn smith_normal_form<T: Scalar>(m: &Matrix<T>) -> SmithDecomposition<T> {
    let (r, c) = (m.rows, m.cols);
    let mut a = m.clone();
    let mut u = Matrix::identity(r);
    let mut u_inv = Matrix::identity(r);
    let mut v = Matrix::identity(c);

    let row_add = |a: &mut Matrix<T>, u: &mut Matrix<T>, ui: &mut Matrix<T>, dst: usize, src: usize, q: &T| {
        a.add_row(dst, src, q);
        u.add_row(dst, src, q);
        ui.add_col(src, dst, &(-q.clone()));
    };
    let row_swap = |a: &mut Matrix<T>, u: &mut Matrix<T>, ui: &mut Matrix<T>, x: usize, y: usize| {
        a.swap_rows(x, y);
        u.swap_rows(x, y);
        ui.swap_cols(x, y);
    };

    let mut t = 0;
    while t < r.min(c) {
        let mut best: Option<(usize, usize)> = None;
        for i in t..r {
            for j in t..c {
                let x = a.get(i, j);
                if !x.is_zero() && best.is_none_or(|(bi, bj)| x.abs() < a.get(bi, bj).abs()) {
                    best = Some((i, j));
                }
            }
        }
        let Some((pi, pj)) = best else { break };
        row_swap(&mut a, &mut u, &mut u_inv, t, pi);
        a.swap_cols(t, pj);
        v.swap_cols(t, pj);

        loop {
            let p = a.get(t, t).clone();
            let mut residue = false;
            for i in t + 1..r {
                if !a.get(i, t).is_zero() {
                    let q = nearest_quotient(a.get(i, t), &p);
                    row_add(&mut a, &mut u, &mut u_inv, i, t, &(-q));
                    residue |= !a.get(i, t).is_zero();
                }
            }
            for j in t + 1..c {
                if !a.get(t, j).is_zero() {
                    let q = nearest_quotient(a.get(t, j), &p);
                    a.add_col(j, t, &(-q.clone()));
                    v.add_col(j, t, &(-q));
                    residue |= !a.get(t, j).is_zero();
                }
            }
            if residue {
                // a smaller remainder appeared in row or column t: make it the pivot
                let mut best = (t, t);
                for i in t + 1..r {
                    let x = a.get(i, t);
                    if !x.is_zero() && x.abs() < a.get(best.0, best.1).abs() {
                        best = (i, t);
                    }
                }
                for j in t + 1..c {
                    let x = a.get(t, j);
                    if !x.is_zero() && x.abs() < a.get(best.0, best.1).abs() {
                        best = (t, j);
                    }
                }
                if best.0 != t {
                    row_swap(&mut a, &mut u, &mut u_inv, t, best.0);
                }
                if best.1 != t {
                    a.swap_cols(t, best.1);
                    v.swap_cols(t, best.1);
                }
                continue;
            }
            // row and column clear; enforce divisibility of the remaining block
            let p = a.get(t, t).clone();
            let mut offender = None;
            'scan: for i in t + 1..r {
                for j in t + 1..c {
                    if !a.get(i, j).is_multiple_of(&p) {
                        offender = Some(i);
                        break 'scan;
                    }
                }
            }
            match offender {
                Some(i) => row_add(&mut a, &mut u, &mut u_inv, t, i, &T::one()),
                None => break,
            }
        }
        if a.get(t, t).is_negative() {
            a.negate_row(t);
            u.negate_row(t);
            u_inv.negate_col(t);
        }
        t += 1;
    }
    SmithDecomposition { u, u_inv, s: a, v, rank: t }
}

/// Reusable solver for `M x = b` over the integers.
#[derive(Clone, Debug)]
pub struct Solver<T> {
    smith: SmithDecomposition<T>,
    cols: usize,
}

impl<T: Scalar> Solver<T> {
    pub fn new(m: &Matrix<T>) -> Self {
        Solver { smith: smith_normal_form(m), cols: m.cols }
    }

    pub fn smith(&self) -> &SmithDecomposition<T> {
        &self.smith
    }

    /// Some integer solution of `M x = b`, or `None` when there is none.
    pub fn solve(&self, b: &[T]) -> Option<Vec<T>> {
        let s = &self.smith;
        if b.len() != s.u.cols {
            return None;
        }
        let ub = s.u.mul_vec(b);
        let mut y = vec![T::zero(); self.cols];
        for (i, x) in ub.iter().enumerate() {
            if i < s.rank {
                let d = s.s.get(i, i);
                if !x.is_multiple_of(d) {
                    return None;
                }
                y[i] = x.div_floor(d);
            } else if !x.is_zero() {
                return None;
            }
        }
        Some(s.v.mul_vec(&y))
    }

    /// Whether `b` lies in the column lattice of `M`.
    pub fn contains(&self, b: &[T]) -> bool {
        let s = &self.smith;
        let ub = s.u.mul_vec(b);
        ub.iter().enumerate().all(|(i, x)| if i < s.rank { x.is_multiple_of(s.s.get(i, i)) } else { x.is_zero() })
    }
}

fn check_modulus<T: Scalar>(m: &T) -> Result<(), LinalgError> {
    if *m < T::from(2) {
        Err(LinalgError::BadModulus(m.to_string()))
    } else {
        Ok(())
    }
}

/// `[M | m I]`, the relation lattice of `M` taken mod `m`.
fn with_modulus<T: Scalar>(m: &Matrix<T>, modulus: &T) -> Matrix<T> {
    let scaled = Matrix::identity(m.rows).scale(modulus);
    Matrix::hstack(m.rows, &[m, &scaled])
}

/// Solves `M x = b`, exactly or modulo `modulus`. `None` means no solution exists.
pub fn solve<T: Scalar>(m: &Matrix<T>, b: &[T], modulus: Option<&T>) -> Result<Option<Vec<T>>, LinalgError> {
    if b.len() != m.rows {
        return Err(LinalgError::Dimension(format!(
            "matrix has {} rows, right-hand side has length {}",
            m.rows,
            b.len()
        )));
    }
    match modulus {
        None => Ok(Solver::new(m).solve(b)),
        Some(q) => {
            check_modulus(q)?;
            let big = with_modulus(m, q);
            Ok(Solver::new(&big).solve(b).map(|x| x[..m.cols].iter().map(|v| v.mod_floor(q)).collect()))
        }
    }
}

/// Columns generate the kernel of `M` (mod `modulus` if given). Over the
/// integers they form a basis of the kernel lattice.
pub fn kernel_basis<T: Scalar>(m: &Matrix<T>, modulus: Option<&T>) -> Result<Matrix<T>, LinalgError> {
    match modulus {
        None => {
            let s = smith_normal_form(m);
            let idx: Vec<usize> = (s.rank..m.cols).collect();
            Ok(s.v.select_cols(&idx))
        }
        Some(q) => {
            check_modulus(q)?;
            let big = with_modulus(m, q);
            let s = smith_normal_form(&big);
            let idx: Vec<usize> = (s.rank..big.cols).collect();
            let top: Vec<usize> = (0..m.cols).collect();
            Ok(s.v.select_cols(&idx).select_rows(&top).reduce_mod(q).nonzero_columns())
        }
    }
}
