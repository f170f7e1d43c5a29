//! Euclidean domains used as lifting covers (`Z` and `F_p[t]`) and a
//! Smith normal form over them that tracks both transforms and their inverses.

use super::poly::FpPoly;
use num_bigint::{BigInt, Sign};
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use std::fmt::Debug;

pub trait EuclideanDomain {
    type E: Clone + PartialEq + Debug;
    type Size: Ord;

    fn zero(&self) -> Self::E;
    fn one(&self) -> Self::E;
    fn is_zero(&self, a: &Self::E) -> bool;
    fn add(&self, a: &Self::E, b: &Self::E) -> Self::E;
    fn sub(&self, a: &Self::E, b: &Self::E) -> Self::E;
    fn mul(&self, a: &Self::E, b: &Self::E) -> Self::E;
    fn neg(&self, a: &Self::E) -> Self::E;
    fn div_rem(&self, a: &Self::E, b: &Self::E) -> (Self::E, Self::E);
    fn size(&self, a: &Self::E) -> Self::Size;
    /// Unit `u` and its inverse such that `u * a` is the canonical associate.
    fn normalizing_unit(&self, a: &Self::E) -> (Self::E, Self::E);

    fn is_unit(&self, a: &Self::E) -> bool {
        !self.is_zero(a) && {
            let (u, _) = self.normalizing_unit(a);
            self.mul(&u, a) == self.one()
        }
    }

    fn normalize(&self, a: &Self::E) -> Self::E {
        self.mul(&self.normalizing_unit(a).0, a)
    }

    fn divides(&self, d: &Self::E, a: &Self::E) -> bool {
        if self.is_zero(d) {
            return self.is_zero(a);
        }
        self.is_zero(&self.div_rem(a, d).1)
    }

    /// `(g, s, t)` with `s a + t b = g` and `g` normalized.
    fn ext_gcd(&self, a: &Self::E, b: &Self::E) -> (Self::E, Self::E, Self::E) {
        let (mut r0, mut r1) = (a.clone(), b.clone());
        let (mut s0, mut s1) = (self.one(), self.zero());
        let (mut t0, mut t1) = (self.zero(), self.one());
        while !self.is_zero(&r1) {
            let (q, r) = self.div_rem(&r0, &r1);
            r0 = std::mem::replace(&mut r1, r);
            let s2 = self.sub(&s0, &self.mul(&q, &s1));
            s0 = std::mem::replace(&mut s1, s2);
            let t2 = self.sub(&t0, &self.mul(&q, &t1));
            t0 = std::mem::replace(&mut t1, t2);
        }
        let (u, _) = self.normalizing_unit(&r0);
        (self.mul(&u, &r0), self.mul(&u, &s0), self.mul(&u, &t0))
    }

    fn gcd(&self, a: &Self::E, b: &Self::E) -> Self::E {
        self.ext_gcd(a, b).0
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct IntegerDomain;

impl EuclideanDomain for IntegerDomain {
    type E = BigInt;
    type Size = num_bigint::BigUint;

    fn zero(&self) -> BigInt {
        BigInt::zero()
    }
    fn one(&self) -> BigInt {
        BigInt::one()
    }
    fn is_zero(&self, a: &BigInt) -> bool {
        a.is_zero()
    }
    fn add(&self, a: &BigInt, b: &BigInt) -> BigInt {
        a + b
    }
    fn sub(&self, a: &BigInt, b: &BigInt) -> BigInt {
        a - b
    }
    fn mul(&self, a: &BigInt, b: &BigInt) -> BigInt {
        a * b
    }
    fn neg(&self, a: &BigInt) -> BigInt {
        -a
    }
    fn div_rem(&self, a: &BigInt, b: &BigInt) -> (BigInt, BigInt) {
        // nearest-integer quotient keeps remainders small
        let (q, r) = a.div_mod_floor(b);
        let twice: BigInt = &r * 2;
        if twice.abs() > b.abs() {
            (q + 1, r - b)
        } else {
            (q, r)
        }
    }
    fn size(&self, a: &BigInt) -> num_bigint::BigUint {
        a.magnitude().clone()
    }
    fn normalizing_unit(&self, a: &BigInt) -> (BigInt, BigInt) {
        if a.sign() == Sign::Minus {
            (BigInt::from(-1), BigInt::from(-1))
        } else {
            (BigInt::one(), BigInt::one())
        }
    }
}

/// `F_p[t]` as a Euclidean domain.
#[derive(Clone, Copy, Debug)]
pub struct PolyDomain {
    pub p: u64,
}

impl EuclideanDomain for PolyDomain {
    type E = FpPoly;
    type Size = isize;

    fn zero(&self) -> FpPoly {
        FpPoly::zero()
    }
    fn one(&self) -> FpPoly {
        FpPoly::one()
    }
    fn is_zero(&self, a: &FpPoly) -> bool {
        a.is_zero()
    }
    fn add(&self, a: &FpPoly, b: &FpPoly) -> FpPoly {
        a.add(b, self.p)
    }
    fn sub(&self, a: &FpPoly, b: &FpPoly) -> FpPoly {
        a.sub(b, self.p)
    }
    fn mul(&self, a: &FpPoly, b: &FpPoly) -> FpPoly {
        a.mul(b, self.p)
    }
    fn neg(&self, a: &FpPoly) -> FpPoly {
        a.neg(self.p)
    }
    fn div_rem(&self, a: &FpPoly, b: &FpPoly) -> (FpPoly, FpPoly) {
        a.divrem(b, self.p)
    }
    fn size(&self, a: &FpPoly) -> isize {
        a.deg_i()
    }
    fn normalizing_unit(&self, a: &FpPoly) -> (FpPoly, FpPoly) {
        if a.is_zero() {
            return (FpPoly::one(), FpPoly::one());
        }
        let inv = super::poly::inv_mod(a.lead(), self.p).unwrap();
        (FpPoly::constant(inv, self.p), FpPoly::constant(a.lead(), self.p))
    }
}

/// Dense row-major matrix over a Euclidean domain.
pub type DMat<E> = Vec<Vec<E>>;

pub fn identity<D: EuclideanDomain>(dom: &D, n: usize) -> DMat<D::E> {
    (0..n).map(|i| (0..n).map(|j| if i == j { dom.one() } else { dom.zero() }).collect()).collect()
}

pub fn mat_mul<D: EuclideanDomain>(dom: &D, a: &DMat<D::E>, b: &DMat<D::E>, inner: usize) -> DMat<D::E> {
    let cols = b.first().map_or(0, |r| r.len());
    a.iter()
        .map(|row| {
            (0..cols)
                .map(|j| (0..inner).fold(dom.zero(), |acc, k| dom.add(&acc, &dom.mul(&row[k], &b[k][j]))))
                .collect()
        })
        .collect()
}

/// Result of a Smith normal form computation: `u * m * v = d`.
#[derive(Clone, Debug)]
pub struct Snf<E> {
    pub u: DMat<E>,
    pub u_inv: DMat<E>,
    pub v: DMat<E>,
    pub v_inv: DMat<E>,
    pub d: DMat<E>,
    /// Normalized diagonal entries, `min(rows, cols)` of them.
    pub diagonal: Vec<E>,
    pub rank: usize,
}

struct SnfCalc<'a, D: EuclideanDomain> {
    dom: &'a D,
    a: DMat<D::E>,
    u: DMat<D::E>,
    u_inv: DMat<D::E>,
    v: DMat<D::E>,
    v_inv: DMat<D::E>,
    m: usize,
    n: usize,
}

impl<D: EuclideanDomain> SnfCalc<'_, D> {
    // row_i += c * row_t
    fn row_add(&mut self, i: usize, t: usize, c: &D::E) {
        let dom = self.dom;
        for j in 0..self.n {
            let x = dom.mul(c, &self.a[t][j]);
            self.a[i][j] = dom.add(&self.a[i][j], &x);
        }
        for j in 0..self.m {
            let x = dom.mul(c, &self.u[t][j]);
            self.u[i][j] = dom.add(&self.u[i][j], &x);
        }
        // inverse: col_t -= c * col_i on u_inv
        for r in 0..self.m {
            let x = dom.mul(c, &self.u_inv[r][i]);
            self.u_inv[r][t] = dom.sub(&self.u_inv[r][t], &x);
        }
    }

    // col_j += c * col_t
    fn col_add(&mut self, j: usize, t: usize, c: &D::E) {
        let dom = self.dom;
        for r in 0..self.m {
            let x = dom.mul(c, &self.a[r][t]);
            self.a[r][j] = dom.add(&self.a[r][j], &x);
        }
        for r in 0..self.n {
            let x = dom.mul(c, &self.v[r][t]);
            self.v[r][j] = dom.add(&self.v[r][j], &x);
        }
        for k in 0..self.n {
            let x = dom.mul(c, &self.v_inv[j][k]);
            self.v_inv[t][k] = dom.sub(&self.v_inv[t][k], &x);
        }
    }

    fn swap_rows(&mut self, i: usize, t: usize) {
        if i == t {
            return;
        }
        self.a.swap(i, t);
        self.u.swap(i, t);
        for row in self.u_inv.iter_mut() {
            row.swap(i, t);
        }
    }

    fn swap_cols(&mut self, j: usize, t: usize) {
        if j == t {
            return;
        }
        for row in self.a.iter_mut() {
            row.swap(j, t);
        }
        for row in self.v.iter_mut() {
            row.swap(j, t);
        }
        self.v_inv.swap(j, t);
    }

    fn scale_row(&mut self, t: usize, u: &D::E, u_inv: &D::E) {
        let dom = self.dom;
        for j in 0..self.n {
            self.a[t][j] = dom.mul(u, &self.a[t][j]);
        }
        for j in 0..self.m {
            self.u[t][j] = dom.mul(u, &self.u[t][j]);
        }
        for r in 0..self.m {
            self.u_inv[r][t] = dom.mul(&self.u_inv[r][t], u_inv);
        }
    }

    fn run(&mut self) {
        let dom = self.dom;
        let steps = self.m.min(self.n);
        for t in 0..steps {
            loop {
                // smallest nonzero entry of the trailing block becomes the pivot
                let mut best: Option<(usize, usize)> = None;
                for i in t..self.m {
                    for j in t..self.n {
                        if dom.is_zero(&self.a[i][j]) {
                            continue;
                        }
                        let better = match best {
                            None => true,
                            Some((bi, bj)) => dom.size(&self.a[i][j]) < dom.size(&self.a[bi][bj]),
                        };
                        if better {
                            best = Some((i, j));
                        }
                    }
                }
                let Some((pi, pj)) = best else { return };
                self.swap_rows(pi, t);
                self.swap_cols(pj, t);
                let pivot = self.a[t][t].clone();
                let mut clean = true;
                for i in t + 1..self.m {
                    if dom.is_zero(&self.a[i][t]) {
                        continue;
                    }
                    let (q, r) = dom.div_rem(&self.a[i][t], &pivot);
                    self.row_add(i, t, &dom.neg(&q));
                    if !dom.is_zero(&r) {
                        clean = false;
                    }
                }
                for j in t + 1..self.n {
                    if dom.is_zero(&self.a[t][j]) {
                        continue;
                    }
                    let (q, r) = dom.div_rem(&self.a[t][j], &pivot);
                    self.col_add(j, t, &dom.neg(&q));
                    if !dom.is_zero(&r) {
                        clean = false;
                    }
                }
                if !clean {
                    continue;
                }
                let offender = (t + 1..self.m).find(|&i| (t + 1..self.n).any(|j| !dom.divides(&pivot, &self.a[i][j])));
                match offender {
                    Some(i) => {
                        let one = dom.one();
                        self.row_add(t, i, &one);
                    }
                    None => break,
                }
            }
            let (u, u_inv) = dom.normalizing_unit(&self.a[t][t]);
            self.scale_row(t, &u, &u_inv);
        }
    }
}

/// Smith normal form of an `m x n` matrix.
pub fn smith<D: EuclideanDomain>(dom: &D, m_rows: usize, n_cols: usize, a: &DMat<D::E>) -> Snf<D::E> {
    let mut calc = SnfCalc {
        dom,
        a: a.clone(),
        u: identity(dom, m_rows),
        u_inv: identity(dom, m_rows),
        v: identity(dom, n_cols),
        v_inv: identity(dom, n_cols),
        m: m_rows,
        n: n_cols,
    };
    calc.run();
    let k = m_rows.min(n_cols);
    let diagonal: Vec<D::E> = (0..k).map(|i| calc.a[i][i].clone()).collect();
    let rank = diagonal.iter().take_while(|d| !dom.is_zero(d)).count();
    Snf { u: calc.u, u_inv: calc.u_inv, v: calc.v, v_inv: calc.v_inv, d: calc.a, diagonal, rank }
}

/// Solutions of `m x = b` modulo `modulus` (or exactly, when `modulus` is
/// `None`), computed through the Smith form of `m` over the cover domain.
pub struct CoverSolution<E> {
    pub solutions: Vec<Option<Vec<E>>>,
    pub kernel: Vec<Vec<E>>,
}

pub fn solve_in_cover<D: EuclideanDomain>(
    dom: &D,
    modulus: Option<&D::E>,
    rows: usize,
    cols: usize,
    m: &DMat<D::E>,
    rhs: &[Vec<D::E>],
) -> CoverSolution<D::E> {
    let snf = smith(dom, rows, cols, m);
    let reduce = |x: D::E| -> D::E {
        match modulus {
            Some(q) => dom.div_rem(&x, q).1,
            None => x,
        }
    };
    let k = rows.min(cols);
    let apply_v = |z: &[D::E]| -> Vec<D::E> {
        (0..cols)
            .map(|i| {
                let acc = (0..cols).fold(dom.zero(), |acc, j| dom.add(&acc, &dom.mul(&snf.v[i][j], &z[j])));
                reduce(acc)
            })
            .collect()
    };

    let solutions = rhs
        .iter()
        .map(|b| {
            let c: Vec<D::E> = (0..rows)
                .map(|i| (0..rows).fold(dom.zero(), |acc, j| dom.add(&acc, &dom.mul(&snf.u[i][j], &b[j]))))
                .collect();
            let mut z = vec![dom.zero(); cols];
            for i in 0..rows {
                let d = if i < k { snf.diagonal[i].clone() } else { dom.zero() };
                match modulus {
                    None => {
                        if dom.is_zero(&d) {
                            if !dom.is_zero(&c[i]) {
                                return None;
                            }
                        } else {
                            let (q, r) = dom.div_rem(&c[i], &d);
                            if !dom.is_zero(&r) {
                                return None;
                            }
                            z[i] = q;
                        }
                    }
                    Some(qm) => {
                        let g = dom.gcd(&d, qm);
                        if !dom.divides(&g, &c[i]) {
                            return None;
                        }
                        if i >= k || dom.is_zero(&d) {
                            continue;
                        }
                        let q_red = dom.div_rem(qm, &g).0;
                        if dom.is_unit(&q_red) {
                            continue;
                        }
                        let d_red = dom.div_rem(&d, &g).0;
                        let c_red = dom.div_rem(&c[i], &g).0;
                        let (_, s, _) = dom.ext_gcd(&d_red, &q_red);
                        z[i] = dom.div_rem(&dom.mul(&s, &c_red), &q_red).1;
                    }
                }
            }
            Some(apply_v(&z))
        })
        .collect();

    let mut kernel = Vec::new();
    for i in 0..cols {
        let mut z = vec![dom.zero(); cols];
        if i < k && !dom.is_zero(&snf.diagonal[i]) {
            match modulus {
                None => continue,
                Some(qm) => {
                    let g = dom.gcd(&snf.diagonal[i], qm);
                    let gen = dom.div_rem(qm, &g).0;
                    if dom.is_unit(&g) {
                        continue;
                    }
                    z[i] = gen;
                }
            }
        } else {
            z[i] = dom.one();
        }
        let x = apply_v(&z);
        if x.iter().any(|e| !dom.is_zero(e)) {
            kernel.push(x);
        }
    }
    CoverSolution { solutions, kernel }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn z(v: i64) -> BigInt {
        BigInt::from(v)
    }

    fn zmat(rows: &[&[i64]]) -> DMat<BigInt> {
        rows.iter().map(|r| r.iter().map(|&x| z(x)).collect()).collect()
    }

    fn check_snf<D: EuclideanDomain>(dom: &D, m: usize, n: usize, a: &DMat<D::E>) -> Snf<D::E> {
        let s = smith(dom, m, n, a);
        let uav = mat_mul(dom, &mat_mul(dom, &s.u, a, m), &s.v, n);
        assert_eq!(uav, s.d);
        assert_eq!(mat_mul(dom, &s.u, &s.u_inv, m), identity(dom, m));
        assert_eq!(mat_mul(dom, &s.v, &s.v_inv, n), identity(dom, n));
        for i in 0..m {
            for j in 0..n {
                if i != j {
                    assert!(dom.is_zero(&s.d[i][j]));
                }
            }
        }
        for w in s.diagonal.windows(2) {
            assert!(dom.divides(&w[0], &w[1]), "divisibility chain");
        }
        s
    }

    #[test]
    fn diag_2_3_becomes_1_6() {
        let s = check_snf(&IntegerDomain, 2, 2, &zmat(&[&[2, 0], &[0, 3]]));
        assert_eq!(s.diagonal, vec![z(1), z(6)]);
    }

    #[test]
    fn zero_matrix_is_fixed() {
        let s = check_snf(&IntegerDomain, 2, 3, &zmat(&[&[0, 0, 0], &[0, 0, 0]]));
        assert_eq!(s.rank, 0);
        assert_eq!(s.u, identity(&IntegerDomain, 2));
        assert_eq!(s.v, identity(&IntegerDomain, 3));
    }

    #[test]
    fn polynomial_example() {
        // [[t, t^2], [0, t]] over F_2[t] has invariant factors t, t
        let p = 2;
        let dom = PolyDomain { p };
        let t = FpPoly::x();
        let t2 = FpPoly::monomial(1, 2, p);
        let a = vec![vec![t.clone(), t2.clone()], vec![FpPoly::zero(), t.clone()]];
        let s = check_snf(&dom, 2, 2, &a);
        assert_eq!(s.diagonal, vec![t.clone(), t]);
    }

    #[test]
    fn modular_solve_and_kernel() {
        // [[2]] x = 0 mod 4: kernel generated by 2
        let sol =
            solve_in_cover(&IntegerDomain, Some(&z(4)), 1, 1, &zmat(&[&[2]]), &[vec![z(0)], vec![z(1)], vec![z(2)]]);
        assert_eq!(sol.kernel, vec![vec![z(2)]]);
        assert_eq!(sol.solutions[0], Some(vec![z(0)]));
        assert!(sol.solutions[1].is_none());
        let x = sol.solutions[2].clone().unwrap();
        assert_eq!((&x[0] * 2 - 2) % 4, z(0));
    }

    #[test]
    fn random_integer_matrices() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let m = rng.gen_range(1..5);
            let n = rng.gen_range(1..5);
            let a: DMat<BigInt> = (0..m).map(|_| (0..n).map(|_| z(rng.gen_range(-9..10))).collect()).collect();
            check_snf(&IntegerDomain, m, n, &a);
        }
    }
}
