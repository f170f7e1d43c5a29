//! Dense matrices over a [`RingTower`]: morphisms of finite free modules.

use super::{Elem, RingTower};
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::fmt;

/// Minimal commutative-ring interface for algorithms (determinants) that
/// also run over rings outside [`RingTower`], such as finite free algebras.
pub trait CommRing {
    type El: Clone + PartialEq;
    fn zero(&self) -> Self::El;
    fn one(&self) -> Self::El;
    fn add(&self, a: &Self::El, b: &Self::El) -> Self::El;
    fn mul(&self, a: &Self::El, b: &Self::El) -> Self::El;
    fn neg(&self, a: &Self::El) -> Self::El;
}

impl CommRing for RingTower {
    type El = Elem;
    fn zero(&self) -> Elem {
        RingTower::zero(self)
    }
    fn one(&self) -> Elem {
        RingTower::one(self)
    }
    fn add(&self, a: &Elem, b: &Elem) -> Elem {
        RingTower::add(self, a, b)
    }
    fn mul(&self, a: &Elem, b: &Elem) -> Elem {
        RingTower::mul(self, a, b)
    }
    fn neg(&self, a: &Elem) -> Elem {
        RingTower::neg(self, a)
    }
}

/// Determinant by the Samuelson-Berkowitz recurrence. Division free, so it
/// is exact over every commutative ring, including ones with zero divisors.
pub fn det_division_free<R: CommRing>(ring: &R, a: &[Vec<R::El>]) -> R::El {
    let n = a.len();
    if n == 0 {
        return ring.one();
    }
    // coefficients of det(xI - A_r), highest degree first
    let mut v = vec![ring.one(), ring.neg(&a[0][0])];
    for r in 1..n {
        // A_{r+1} = [[M, C], [R, a_rr]] with M the leading r x r block
        let mut t = Vec::with_capacity(r + 2);
        t.push(ring.one());
        t.push(ring.neg(&a[r][r]));
        // w = M^k C for k = 0, 1, ...
        let mut w: Vec<R::El> = (0..r).map(|i| a[i][r].clone()).collect();
        for _ in 0..r {
            let rc = (0..r).fold(ring.zero(), |acc, j| ring.add(&acc, &ring.mul(&a[r][j], &w[j])));
            t.push(ring.neg(&rc));
            w = (0..r).map(|i| (0..r).fold(ring.zero(), |acc, j| ring.add(&acc, &ring.mul(&a[i][j], &w[j])))).collect();
        }
        let mut next = Vec::with_capacity(r + 2);
        for i in 0..r + 2 {
            let mut acc = ring.zero();
            for j in 0..v.len() {
                if i >= j {
                    acc = ring.add(&acc, &ring.mul(&t[i - j], &v[j]));
                }
            }
            next.push(acc);
        }
        v = next;
    }
    let last = v.pop().unwrap();
    if n % 2 == 1 {
        ring.neg(&last)
    } else {
        last
    }
}

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Matrix {
    ring: RingTower,
    rows: usize,
    cols: usize,
    data: Vec<Elem>,
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Matrix[{}; {}x{}](", self.ring, self.rows, self.cols)?;
        for i in 0..self.rows {
            let row: Vec<String> = (0..self.cols).map(|j| self.ring.format_elem(self.get(i, j))).collect();
            write!(f, "[{}]", row.join(", "))?;
        }
        write!(f, ")")
    }
}

impl Matrix {
    /// Build from row-major entries; entries must already be canonical.
    pub fn new(ring: &RingTower, rows: usize, cols: usize, data: Vec<Elem>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::usage(format!(
                "matrix {rows}x{cols} needs {} entries, got {}",
                rows * cols,
                data.len()
            )));
        }
        if let Some(bad) = data.iter().find(|e| !ring.is_canonical(e)) {
            return Err(Error::usage(format!("entry {bad:?} is not a canonical element of {ring}")));
        }
        Ok(Matrix { ring: ring.clone(), rows, cols, data })
    }

    pub fn from_fn(ring: &RingTower, rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Elem) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Matrix { ring: ring.clone(), rows, cols, data }
    }

    pub fn random<R: rand::Rng + ?Sized>(ring: &RingTower, rows: usize, cols: usize, rng: &mut R) -> Self {
        Matrix::from_fn(ring, rows, cols, |_, _| ring.random_elem(rng))
    }

    pub fn from_i64(ring: &RingTower, rows: &[&[i64]]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |x| x.len());
        Matrix::from_fn(ring, r, c, |i, j| ring.from_i64(rows[i][j]))
    }

    pub fn zero(ring: &RingTower, rows: usize, cols: usize) -> Self {
        Matrix { ring: ring.clone(), rows, cols, data: vec![ring.zero(); rows * cols] }
    }

    pub fn identity(ring: &RingTower, n: usize) -> Self {
        Matrix::from_fn(ring, n, n, |i, j| if i == j { ring.one() } else { ring.zero() })
    }

    pub fn scalar(ring: &RingTower, n: usize, c: &Elem) -> Self {
        Matrix::from_fn(ring, n, n, |i, j| if i == j { c.clone() } else { ring.zero() })
    }

    pub fn diagonal(ring: &RingTower, d: &[Elem]) -> Self {
        let n = d.len();
        Matrix::from_fn(ring, n, n, |i, j| if i == j { d[i].clone() } else { ring.zero() })
    }

    pub fn column(ring: &RingTower, v: &[Elem]) -> Self {
        Matrix::from_fn(ring, v.len(), 1, |i, _| v[i].clone())
    }

    pub fn ring(&self) -> &RingTower {
        &self.ring
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

    pub fn get(&self, i: usize, j: usize) -> &Elem {
        &self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: Elem) {
        self.data[i * self.cols + j] = v;
    }

    pub fn entries(&self) -> &[Elem] {
        &self.data
    }

    pub fn row_vec(&self, i: usize) -> Vec<Elem> {
        self.data[i * self.cols..(i + 1) * self.cols].to_vec()
    }

    pub fn col_vec(&self, j: usize) -> Vec<Elem> {
        (0..self.rows).map(|i| self.get(i, j).clone()).collect()
    }

    pub fn to_rows(&self) -> Vec<Vec<Elem>> {
        (0..self.rows).map(|i| self.row_vec(i)).collect()
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|e| self.ring.is_zero(e))
    }

    pub fn is_identity(&self) -> bool {
        self.is_square() && *self == Matrix::identity(&self.ring, self.rows)
    }

    fn same_ring(&self, other: &Matrix, what: &str) {
        assert!(self.ring == other.ring, "{what}: ring mismatch {} vs {}", self.ring, other.ring);
    }

    pub fn add(&self, other: &Matrix) -> Matrix {
        self.same_ring(other, "add");
        assert_eq!(self.shape(), other.shape(), "add: shape mismatch");
        let data = self.data.iter().zip(&other.data).map(|(a, b)| self.ring.add(a, b)).collect();
        Matrix { ring: self.ring.clone(), rows: self.rows, cols: self.cols, data }
    }

    pub fn sub(&self, other: &Matrix) -> Matrix {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Matrix {
        let data = self.data.iter().map(|a| self.ring.neg(a)).collect();
        Matrix { ring: self.ring.clone(), rows: self.rows, cols: self.cols, data }
    }

    pub fn scale(&self, c: &Elem) -> Matrix {
        let data = self.data.iter().map(|a| self.ring.mul(c, a)).collect();
        Matrix { ring: self.ring.clone(), rows: self.rows, cols: self.cols, data }
    }

    pub fn mul(&self, other: &Matrix) -> Matrix {
        self.same_ring(other, "mul");
        assert_eq!(self.cols, other.rows, "mul: {}x{} times {}x{}", self.rows, self.cols, other.rows, other.cols);
        let r = &self.ring;
        let mut data = Vec::with_capacity(self.rows * other.cols);
        for i in 0..self.rows {
            for j in 0..other.cols {
                let mut acc = r.zero();
                for k in 0..self.cols {
                    let a = self.get(i, k);
                    if r.is_zero(a) {
                        continue;
                    }
                    acc = r.add(&acc, &r.mul(a, other.get(k, j)));
                }
                data.push(acc);
            }
        }
        Matrix { ring: r.clone(), rows: self.rows, cols: other.cols, data }
    }

    pub fn transpose(&self) -> Matrix {
        Matrix::from_fn(&self.ring, self.cols, self.rows, |i, j| self.get(j, i).clone())
    }

    pub fn submatrix(&self, rows: &[usize], cols: &[usize]) -> Matrix {
        Matrix::from_fn(&self.ring, rows.len(), cols.len(), |i, j| self.get(rows[i], cols[j]).clone())
    }

    /// Rows `r0..r0+nr`, columns `c0..c0+nc`.
    pub fn block(&self, r0: usize, c0: usize, nr: usize, nc: usize) -> Matrix {
        Matrix::from_fn(&self.ring, nr, nc, |i, j| self.get(r0 + i, c0 + j).clone())
    }

    pub fn set_block(&mut self, r0: usize, c0: usize, b: &Matrix) {
        for i in 0..b.rows {
            for j in 0..b.cols {
                self.set(r0 + i, c0 + j, b.get(i, j).clone());
            }
        }
    }

    pub fn hstack(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.rows, other.rows, "hstack: row mismatch");
        Matrix::from_fn(&self.ring, self.rows, self.cols + other.cols, |i, j| {
            if j < self.cols {
                self.get(i, j).clone()
            } else {
                other.get(i, j - self.cols).clone()
            }
        })
    }

    pub fn vstack(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.cols, other.cols, "vstack: column mismatch");
        Matrix::from_fn(&self.ring, self.rows + other.rows, self.cols, |i, j| {
            if i < self.rows {
                self.get(i, j).clone()
            } else {
                other.get(i - self.rows, j).clone()
            }
        })
    }

    pub fn direct_sum(&self, other: &Matrix) -> Matrix {
        let mut m = Matrix::zero(&self.ring, self.rows + other.rows, self.cols + other.cols);
        m.set_block(0, 0, self);
        m.set_block(self.rows, self.cols, other);
        m
    }

    /// Assemble `[[a, b], [c, d]]` from blocks with compatible shapes.
    pub fn block2(a: &Matrix, b: &Matrix, c: &Matrix, d: &Matrix) -> Matrix {
        a.hstack(b).vstack(&c.hstack(d))
    }

    /// Apply an entrywise ring map into `target`.
    pub fn map_into(&self, target: &RingTower, f: impl Fn(&Elem) -> Elem) -> Matrix {
        Matrix { ring: target.clone(), rows: self.rows, cols: self.cols, data: self.data.iter().map(f).collect() }
    }

    pub fn det(&self) -> Result<Elem> {
        if !self.is_square() {
            return Err(Error::usage(format!("determinant of a non-square {}x{} matrix", self.rows, self.cols)));
        }
        Ok(det_division_free(&self.ring, &self.to_rows()))
    }

    /// Inverse, if the matrix is invertible. Gauss-Jordan with unit pivots
    /// first; rings where that can stall (non-local) fall back to the solver.
    pub fn inverse(&self) -> Option<Matrix> {
        if !self.is_square() {
            return None;
        }
        let n = self.rows;
        let r = &self.ring;
        if let Some(inv) = self.gauss_jordan_inverse() {
            return Some(inv);
        }
        if !r.is_unit(&self.det().ok()?) {
            return None;
        }
        let cols: Vec<Vec<Elem>> =
            (0..n).map(|j| (0..n).map(|i| if i == j { r.one() } else { r.zero() }).collect()).collect();
        let sol = super::linalg::solve_many(self, &cols).ok()?;
        let mut inv = Matrix::zero(r, n, n);
        for (j, x) in sol.into_iter().enumerate() {
            let x = x?;
            for i in 0..n {
                inv.set(i, j, x[i].clone());
            }
        }
        debug_assert!(self.mul(&inv).is_identity());
        Some(inv)
    }

    fn gauss_jordan_inverse(&self) -> Option<Matrix> {
        let n = self.rows;
        let r = &self.ring;
        let mut a = self.to_rows();
        let mut inv = Matrix::identity(r, n).to_rows();
        for c in 0..n {
            let piv = (c..n).find(|&i| r.is_unit(&a[i][c]))?;
            a.swap(c, piv);
            inv.swap(c, piv);
            let pinv = r.inv(&a[c][c]).unwrap();
            for j in 0..n {
                a[c][j] = r.mul(&pinv, &a[c][j]);
                inv[c][j] = r.mul(&pinv, &inv[c][j]);
            }
            for i in 0..n {
                if i == c || r.is_zero(&a[i][c]) {
                    continue;
                }
                let f = a[i][c].clone();
                for j in 0..n {
                    let x = r.mul(&f, &a[c][j]);
                    a[i][j] = r.sub(&a[i][j], &x);
                    let y = r.mul(&f, &inv[c][j]);
                    inv[i][j] = r.sub(&inv[i][j], &y);
                }
            }
        }
        Some(Matrix::from_fn(r, n, n, |i, j| inv[i][j].clone()))
    }
}

#[derive(Serialize, Deserialize)]
struct MatrixWire {
    ring: RingTower,
    rows: usize,
    cols: usize,
    entries: Vec<serde_json::Value>,
}

impl Serialize for Matrix {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        MatrixWire {
            ring: self.ring.clone(),
            rows: self.rows,
            cols: self.cols,
            entries: self.data.iter().map(|e| self.ring.elem_to_json(e)).collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Matrix {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let w = MatrixWire::deserialize(d)?;
        let data = w
            .entries
            .iter()
            .map(|v| w.ring.elem_from_json(v))
            .collect::<Result<Vec<_>>>()
            .map_err(serde::de::Error::custom)?;
        Matrix::new(&w.ring, w.rows, w.cols, data).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn cofactor_det(r: &RingTower, a: &[Vec<Elem>]) -> Elem {
        // Laplace expansion along the first row (test oracle)
        let n = a.len();
        if n == 0 {
            return r.one();
        }
        let mut acc = r.zero();
        for j in 0..n {
            let minor: Vec<Vec<Elem>> = a[1..]
                .iter()
                .map(|row| row.iter().enumerate().filter(|&(k, _)| k != j).map(|(_, e)| e.clone()).collect())
                .collect();
            let term = r.mul(&a[0][j], &cofactor_det(r, &minor));
            acc = if j % 2 == 0 { r.add(&acc, &term) } else { r.sub(&acc, &term) };
        }
        acc
    }

    #[test]
    fn unitriangular_det_is_one() {
        for spec in ["Z", "Z/12", "F2[t]/(t^2)", "F3[t]"] {
            let r = RingTower::parse(spec).unwrap();
            let m = Matrix::from_fn(&r, 2, 2, |i, j| match (i, j) {
                (0, 1) => r.from_i64(7),
                (i, j) if i == j => r.one(),
                _ => r.zero(),
            });
            assert!(r.is_one(&m.det().unwrap()));
        }
    }

    #[test]
    fn inverse_over_non_local_ring() {
        let r = RingTower::parse("Z/6").unwrap();
        // [[2, 3], [3, 2]] has det -5 = 1 mod 6 but no unit pivot in column 0
        let m = Matrix::from_i64(&r, &[&[2, 3], &[3, 2]]);
        let inv = m.inverse().expect("invertible");
        assert!(m.mul(&inv).is_identity());
        let sing = Matrix::from_i64(&r, &[&[2, 0], &[0, 1]]);
        assert!(sing.inverse().is_none());
    }

    proptest! {
        #[test]
        fn det_matches_cofactor_and_is_multiplicative(
            n in 1usize..5,
            seed_a in proptest::collection::vec(-20i64..20, 16),
            seed_b in proptest::collection::vec(-20i64..20, 16),
            which in 0usize..4,
        ) {
            let spec = ["Z", "Z/12", "F2[t]/(t^3)", "F3[t]"][which];
            let r = RingTower::parse(spec).unwrap();
            let mk = |s: &[i64]| Matrix::from_fn(&r, n, n, |i, j| {
                let v = s[i * 4 + j];
                match r.char_p() {
                    Some(p) if r.poly_modulus().is_some() || matches!(r.kind(), super::super::RingKind::PolyRing { .. }) => {
                        r.from_poly(super::super::FpPoly::from_signed(&[v, v / 3, v / 7], p))
                    }
                    _ => r.from_i64(v),
                }
            });
            let a = mk(&seed_a);
            let b = mk(&seed_b);
            let da = a.det().unwrap();
            prop_assert_eq!(&da, &cofactor_det(&r, &a.to_rows()));
            let dab = a.mul(&b).det().unwrap();
            prop_assert_eq!(dab, r.mul(&da, &b.det().unwrap()));
        }
    }
}
