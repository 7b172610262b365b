//! Dense exact linear algebra over the rationals.

use std::ops::{Index, IndexMut};

use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rat::{self, JsonRat, Rat};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RatMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Rat>,
}

impl RatMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        RatMatrix { rows, cols, data: vec![Rat::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Rat::one();
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, f: impl Fn(usize, usize) -> Rat) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        RatMatrix { rows, cols, data }
    }

    pub fn from_rows(rows: Vec<Vec<Rat>>) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            if row.len() != c {
                return Err(Error::DimensionMismatch { expected: c, found: row.len() });
            }
            data.extend(row);
        }
        Ok(RatMatrix { rows: r, cols: c, data })
    }

    pub fn from_i64_rows(rows: &[Vec<i64>]) -> Result<Self> {
        Self::from_rows(rows.iter().map(|r| r.iter().map(|&v| rat::int(v)).collect()).collect())
    }

    pub fn diag(entries: &[Rat]) -> Self {
        let mut m = Self::zeros(entries.len(), entries.len());
        for (i, e) in entries.iter().enumerate() {
            m[(i, i)] = e.clone();
        }
        m
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

    pub fn row(&self, r: usize) -> &[Rat] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn to_rows(&self) -> Vec<Vec<Rat>> {
        (0..self.rows).map(|r| self.row(r).to_vec()).collect()
    }

    pub fn entries(&self) -> &[Rat] {
        &self.data
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |r, c| self[(c, r)].clone())
    }

    pub fn mul(&self, other: &RatMatrix) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch { expected: self.cols, found: other.rows });
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = &self[(i, k)];
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let b = &other[(k, j)];
                    if !b.is_zero() {
                        out[(i, j)] += a * b;
                    }
                }
            }
        }
        Ok(out)
    }

    pub fn mul_vec(&self, v: &[Rat]) -> Result<Vec<Rat>> {
        if v.len() != self.cols {
            return Err(Error::DimensionMismatch { expected: self.cols, found: v.len() });
        }
        Ok((0..self.rows)
            .map(|i| {
                let mut acc = Rat::zero();
                for (a, b) in self.row(i).iter().zip(v) {
                    if !a.is_zero() && !b.is_zero() {
                        acc += a * b;
                    }
                }
                acc
            })
            .collect())
    }

    pub fn add(&self, other: &RatMatrix) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        RatMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn sub(&self, other: &RatMatrix) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        RatMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect(),
        }
    }

    pub fn scale(&self, c: &Rat) -> Self {
        RatMatrix { rows: self.rows, cols: self.cols, data: self.data.iter().map(|a| a * c).collect() }
    }

    pub fn trace(&self) -> Rat {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)].clone()).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(Zero::is_zero)
    }

    pub fn is_symmetric(&self) -> bool {
        self.first_asymmetry().is_none()
    }

    pub fn first_asymmetry(&self) -> Option<(usize, usize)> {
        if !self.is_square() {
            return Some((0, 0));
        }
        for i in 0..self.rows {
            for j in i + 1..self.cols {
                if self[(i, j)] != self[(j, i)] {
                    return Some((i, j));
                }
            }
        }
        None
    }

    pub fn is_integral(&self) -> bool {
        self.data.iter().all(|a| a.is_integer())
    }

    pub fn block_diag(a: &RatMatrix, b: &RatMatrix) -> Self {
        let mut m = Self::zeros(a.rows + b.rows, a.cols + b.cols);
        for i in 0..a.rows {
            for j in 0..a.cols {
                m[(i, j)] = a[(i, j)].clone();
            }
        }
        for i in 0..b.rows {
            for j in 0..b.cols {
                m[(a.rows + i, a.cols + j)] = b[(i, j)].clone();
            }
        }
        m
    }

    /// Exact determinant by Gaussian elimination.
    pub fn determinant(&self) -> Rat {
        assert!(self.is_square());
        let n = self.rows;
        let mut m = self.clone();
        let mut det = Rat::one();
        for col in 0..n {
            let Some(p) = (col..n).find(|&r| !m[(r, col)].is_zero()) else {
                return Rat::zero();
            };
            if p != col {
                m.swap_rows(p, col);
                det = -det;
            }
            let pivot = m[(col, col)].clone();
            det *= &pivot;
            for r in col + 1..n {
                if m[(r, col)].is_zero() {
                    continue;
                }
                let f = &m[(r, col)] / &pivot;
                for c in col..n {
                    let v = &f * &m[(col, c)];
                    m[(r, c)] -= v;
                }
            }
        }
        det
    }

    /// Leading principal minors of orders 1..=n.
    pub fn leading_principal_minors(&self) -> Vec<Rat> {
        (1..=self.rows)
            .map(|k| Self::from_fn(k, k, |i, j| self[(i, j)].clone()).determinant())
            .collect()
    }

    pub fn inverse(&self) -> Result<Self> {
        if !self.is_square() {
            return Err(Error::DimensionMismatch { expected: self.rows, found: self.cols });
        }
        let n = self.rows;
        let mut aug = Self::zeros(n, 2 * n);
        for i in 0..n {
            for j in 0..n {
                aug[(i, j)] = self[(i, j)].clone();
            }
            aug[(i, n + i)] = Rat::one();
        }
        let (r, pivots) = aug.rref();
        if pivots.len() < n || pivots[n - 1] != n - 1 {
            return Err(Error::InvalidArgument("matrix is singular".into()));
        }
        Ok(Self::from_fn(n, n, |i, j| r[(i, n + j)].clone()))
    }

    pub fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for c in 0..self.cols {
            self.data.swap(a * self.cols + c, b * self.cols + c);
        }
    }

    /// Reduced row echelon form and pivot columns.
    pub fn rref(&self) -> (RatMatrix, Vec<usize>) {
        let mut m = self.clone();
        let mut pivots = Vec::new();
        let mut row = 0;
        for col in 0..m.cols {
            if row == m.rows {
                break;
            }
            let Some(p) = (row..m.rows).find(|&r| !m[(r, col)].is_zero()) else {
                continue;
            };
            m.swap_rows(p, row);
            let inv = m[(row, col)].recip();
            for c in col..m.cols {
                let v = &m[(row, c)] * &inv;
                m[(row, c)] = v;
            }
            for r in 0..m.rows {
                if r == row || m[(r, col)].is_zero() {
                    continue;
                }
                let f = m[(r, col)].clone();
                for c in col..m.cols {
                    if m[(row, c)].is_zero() {
                        continue;
                    }
                    let v = &f * &m[(row, c)];
                    m[(r, c)] -= v;
                }
            }
            pivots.push(col);
            row += 1;
        }
        (m, pivots)
    }

    pub fn rank(&self) -> usize {
        self.rref().1.len()
    }

    /// Basis of the right kernel {v : self * v = 0}, one vector per free column,
    /// normalized so the free coordinate equals 1.
    pub fn kernel(&self) -> Vec<Vec<Rat>> {
        let (r, pivots) = self.rref();
        kernel_from_rref(&r, &pivots, self.cols)
    }
}

pub(crate) fn kernel_from_rref(r: &RatMatrix, pivots: &[usize], cols: usize) -> Vec<Vec<Rat>> {
    let mut is_pivot = vec![false; cols];
    for &p in pivots {
        is_pivot[p] = true;
    }
    let mut basis = Vec::new();
    for free in (0..cols).filter(|&c| !is_pivot[c]) {
        let mut v = vec![Rat::zero(); cols];
        v[free] = Rat::one();
        for (i, &p) in pivots.iter().enumerate() {
            v[p] = -r[(i, free)].clone();
        }
        basis.push(v);
    }
    basis
}

impl Index<(usize, usize)> for RatMatrix {
    type Output = Rat;
    fn index(&self, (r, c): (usize, usize)) -> &Rat {
        &self.data[r * self.cols + c]
    }
}

impl IndexMut<(usize, usize)> for RatMatrix {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut Rat {
        &mut self.data[r * self.cols + c]
    }
}

impl Serialize for RatMatrix {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let rows: Vec<Vec<JsonRat>> = (0..self.rows).map(|r| rat::json_vec(self.row(r))).collect();
        rows.serialize(s)
    }
}

impl<'de> Deserialize<'de> for RatMatrix {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let rows: Vec<Vec<JsonRat>> = Vec::deserialize(d)?;
        RatMatrix::from_rows(rows.into_iter().map(|r| r.into_iter().map(|x| x.0).collect()).collect())
            .map_err(serde::de::Error::custom)
    }
}

/// Incrementally maintained reduced echelon basis of a subspace of Q^n.
#[derive(Clone, Debug, Default)]
pub struct EchelonBasis {
    dim: usize,
    rows: Vec<Vec<Rat>>,
    pivots: Vec<usize>,
}

impl EchelonBasis {
    pub fn new(dim: usize) -> Self {
        EchelonBasis { dim, rows: Vec::new(), pivots: Vec::new() }
    }

    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    pub fn ambient_dim(&self) -> usize {
        self.dim
    }

    /// Reduces `v` against the basis; returns the residual.
    pub fn reduce(&self, v: &[Rat]) -> Vec<Rat> {
        let mut v = v.to_vec();
        for (row, &p) in self.rows.iter().zip(&self.pivots) {
            if v[p].is_zero() {
                continue;
            }
            let f = v[p].clone();
            for (x, y) in v.iter_mut().zip(row) {
                if !y.is_zero() {
                    *x -= &f * y;
                }
            }
        }
        v
    }

    pub fn contains(&self, v: &[Rat]) -> bool {
        self.reduce(v).iter().all(Zero::is_zero)
    }

    /// Adds `v` if it is independent; returns whether the rank grew.
    pub fn insert(&mut self, v: &[Rat]) -> bool {
        assert_eq!(v.len(), self.dim);
        let mut r = self.reduce(v);
        let Some(p) = r.iter().position(|x| !x.is_zero()) else {
            return false;
        };
        let inv = r[p].recip();
        for x in r.iter_mut() {
            *x *= &inv;
        }
        for row in self.rows.iter_mut() {
            if row[p].is_zero() {
                continue;
            }
            let f = row[p].clone();
            for (x, y) in row.iter_mut().zip(&r) {
                if !y.is_zero() {
                    *x -= &f * y;
                }
            }
        }
        self.rows.push(r);
        self.pivots.push(p);
        true
    }

    pub fn basis(&self) -> &[Vec<Rat>] {
        &self.rows
    }
}

/// Rank of a list of rational vectors.
pub fn rank_of(vectors: &[Vec<Rat>]) -> usize {
    let Some(first) = vectors.first() else { return 0 };
    let mut e = EchelonBasis::new(first.len());
    for v in vectors {
        e.insert(v);
    }
    e.rank()
}

/// True when span(a) == span(b).
pub fn same_span(a: &[Vec<Rat>], b: &[Vec<Rat>]) -> bool {
    let dim = a.first().or(b.first()).map_or(0, Vec::len);
    let mut ea = EchelonBasis::new(dim);
    a.iter().for_each(|v| {
        ea.insert(v);
    });
    let mut eb = EchelonBasis::new(dim);
    b.iter().for_each(|v| {
        eb.insert(v);
    });
    b.iter().all(|v| ea.contains(v)) && a.iter().all(|v| eb.contains(v))
}

pub fn dot(a: &[Rat], b: &[Rat]) -> Rat {
    a.iter().zip(b).filter(|(x, y)| !x.is_zero() && !y.is_zero()).map(|(x, y)| x * y).sum()
}

pub fn is_positive(r: &Rat) -> bool {
    r.is_positive()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat::{frac, int};

    fn m(rows: &[&[i64]]) -> RatMatrix {
        RatMatrix::from_i64_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn determinant_and_inverse() {
        let a = m(&[&[2, 1], &[1, 2]]);
        assert_eq!(a.determinant(), int(3));
        let inv = a.inverse().unwrap();
        assert_eq!(inv[(0, 0)], frac(2, 3));
        assert_eq!(inv[(0, 1)], frac(-1, 3));
        assert_eq!(a.mul(&inv).unwrap(), RatMatrix::identity(2));
        assert!(m(&[&[1, 2], &[2, 4]]).inverse().is_err());
    }

    #[test]
    fn kernel_and_rank() {
        let a = m(&[&[1, 2, 3], &[2, 4, 6]]);
        assert_eq!(a.rank(), 1);
        let k = a.kernel();
        assert_eq!(k.len(), 2);
        for v in &k {
            assert!(a.mul_vec(v).unwrap().iter().all(Zero::is_zero));
        }
    }

    #[test]
    fn echelon_spans() {
        let a = vec![vec![int(1), int(0)], vec![int(1), int(1)]];
        let b = vec![vec![int(0), int(1)], vec![int(2), int(0)]];
        assert!(same_span(&a, &b));
        assert_eq!(rank_of(&[vec![int(1), int(2)], vec![int(2), int(4)]]), 1);
    }
}
