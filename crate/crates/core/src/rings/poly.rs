//! Dense univariate polynomials over a prime field `F_p`.
//!
//! Coefficients are stored lowest degree first and always reduced into
//! `[0, p)` with trailing zeros stripped, so structural equality is
//! polynomial equality. The modulus `p` is not stored in the value; every
//! operation takes it explicitly.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::fmt;

pub(crate) fn mul_mod(a: u64, b: u64, n: u64) -> u64 {
    ((a as u128 * b as u128) % n as u128) as u64
}

#[cfg(test)]
pub(crate) fn pow_mod(mut base: u64, mut exp: u64, n: u64) -> u64 {
    let mut acc = 1 % n;
    base %= n;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mul_mod(acc, base, n);
        }
        base = mul_mod(base, base, n);
        exp >>= 1;
    }
    acc
}

/// Inverse of `a` modulo `n`, if `gcd(a, n) = 1`.
pub(crate) fn inv_mod(a: u64, n: u64) -> Option<u64> {
    let (mut r0, mut r1) = (n as i128, (a % n) as i128);
    let (mut s0, mut s1) = (0i128, 1i128);
    while r1 != 0 {
        let q = r0 / r1;
        (r0, r1) = (r1, r0 - q * r1);
        (s0, s1) = (s1, s0 - q * s1);
    }
    if r0 != 1 {
        return None;
    }
    Some(s0.rem_euclid(n as i128) as u64)
}

/// Deterministic primality check by trial division (desk-scale moduli only).
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2u64;
    while d.saturating_mul(d) <= n {
        if n % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

/// Prime factorization of a positive integer as `(prime, exponent)` pairs.
pub(crate) fn factor_u64(mut n: u64) -> Vec<(u64, u32)> {
    let mut out = Vec::new();
    let mut d = 2u64;
    while d.saturating_mul(d) <= n {
        if n % d == 0 {
            let mut e = 0;
            while n % d == 0 {
                n /= d;
                e += 1;
            }
            out.push((d, e));
        }
        d += 1;
    }
    if n > 1 {
        out.push((n, 1));
    }
    out
}

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct FpPoly {
    coeffs: Vec<u64>,
}

impl fmt::Debug for FpPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.display("t"))
    }
}

impl FpPoly {
    pub fn new(mut coeffs: Vec<u64>, p: u64) -> Self {
        for c in coeffs.iter_mut() {
            *c %= p;
        }
        while coeffs.last() == Some(&0) {
            coeffs.pop();
        }
        FpPoly { coeffs }
    }

    pub fn from_signed(coeffs: &[i64], p: u64) -> Self {
        let c = coeffs.iter().map(|&c| c.rem_euclid(p as i64) as u64).collect();
        FpPoly::new(c, p)
    }

    pub fn zero() -> Self {
        FpPoly { coeffs: Vec::new() }
    }

    pub fn one() -> Self {
        FpPoly { coeffs: vec![1] }
    }

    pub fn constant(c: u64, p: u64) -> Self {
        FpPoly::new(vec![c], p)
    }

    /// The polynomial `t`.
    pub fn x() -> Self {
        FpPoly { coeffs: vec![0, 1] }
    }

    pub fn monomial(c: u64, deg: usize, p: u64) -> Self {
        let mut v = vec![0; deg + 1];
        v[deg] = c;
        FpPoly::new(v, p)
    }

    pub fn coeffs(&self) -> &[u64] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn is_one(&self) -> bool {
        self.coeffs == [1]
    }

    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    /// Degree with the convention `deg 0 = -1`.
    pub fn deg_i(&self) -> isize {
        self.coeffs.len() as isize - 1
    }

    pub fn lead(&self) -> u64 {
        self.coeffs.last().copied().unwrap_or(0)
    }

    pub fn is_constant(&self) -> bool {
        self.coeffs.len() <= 1
    }

    pub fn is_monic(&self) -> bool {
        self.lead() == 1
    }

    pub fn coeff(&self, i: usize) -> u64 {
        self.coeffs.get(i).copied().unwrap_or(0)
    }

    pub fn add(&self, other: &Self, p: u64) -> Self {
        let n = self.coeffs.len().max(other.coeffs.len());
        let v = (0..n).map(|i| (self.coeff(i) + other.coeff(i)) % p).collect();
        FpPoly::new(v, p)
    }

    pub fn neg(&self, p: u64) -> Self {
        let v = self.coeffs.iter().map(|&c| (p - c) % p).collect();
        FpPoly::new(v, p)
    }

    pub fn sub(&self, other: &Self, p: u64) -> Self {
        self.add(&other.neg(p), p)
    }

    pub fn scale(&self, c: u64, p: u64) -> Self {
        let v = self.coeffs.iter().map(|&a| mul_mod(a, c, p)).collect();
        FpPoly::new(v, p)
    }

    pub fn mul(&self, other: &Self, p: u64) -> Self {
        if self.is_zero() || other.is_zero() {
            return FpPoly::zero();
        }
        let mut v = vec![0u64; self.coeffs.len() + other.coeffs.len() - 1];
        for (i, &a) in self.coeffs.iter().enumerate() {
            if a == 0 {
                continue;
            }
            for (j, &b) in other.coeffs.iter().enumerate() {
                v[i + j] = (v[i + j] + mul_mod(a, b, p)) % p;
            }
        }
        FpPoly::new(v, p)
    }

    pub fn pow(&self, mut e: u64, p: u64) -> Self {
        let mut acc = FpPoly::one();
        let mut base = self.clone();
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(&base, p);
            }
            base = base.mul(&base, p);
            e >>= 1;
        }
        acc
    }

    /// Quotient and remainder; panics on division by zero.
    pub fn divrem(&self, d: &Self, p: u64) -> (Self, Self) {
        assert!(!d.is_zero(), "polynomial division by zero");
        let dd = d.coeffs.len() - 1;
        let inv_lead = inv_mod(d.lead(), p).expect("leading coefficient invertible mod p");
        let mut r = self.coeffs.clone();
        if r.len() <= dd {
            return (FpPoly::zero(), self.clone());
        }
        let mut q = vec![0u64; r.len() - dd];
        for k in (0..q.len()).rev() {
            let c = mul_mod(r[k + dd], inv_lead, p);
            q[k] = c;
            if c != 0 {
                for (j, &b) in d.coeffs.iter().enumerate() {
                    r[k + j] = (r[k + j] + p - mul_mod(c, b, p)) % p;
                }
            }
        }
        r.truncate(dd);
        (FpPoly::new(q, p), FpPoly::new(r, p))
    }

    pub fn rem(&self, d: &Self, p: u64) -> Self {
        self.divrem(d, p).1
    }

    pub fn div_exact(&self, d: &Self, p: u64) -> Self {
        let (q, r) = self.divrem(d, p);
        debug_assert!(r.is_zero(), "inexact polynomial division");
        q
    }

    pub fn divides(&self, other: &Self, p: u64) -> bool {
        if self.is_zero() {
            return other.is_zero();
        }
        other.rem(self, p).is_zero()
    }

    /// Monic associate (zero stays zero).
    pub fn monic(&self, p: u64) -> Self {
        if self.is_zero() {
            return FpPoly::zero();
        }
        let inv = inv_mod(self.lead(), p).expect("nonzero lead is a unit");
        self.scale(inv, p)
    }

    /// Monic gcd.
    pub fn gcd(&self, other: &Self, p: u64) -> Self {
        let (mut a, mut b) = (self.clone(), other.clone());
        while !b.is_zero() {
            let r = a.rem(&b, p);
            a = b;
            b = r;
        }
        a.monic(p)
    }

    /// Returns `(g, s, t)` with `s*self + t*other = g`, `g` monic (or zero).
    pub fn ext_gcd(&self, other: &Self, p: u64) -> (Self, Self, Self) {
        let (mut r0, mut r1) = (self.clone(), other.clone());
        let (mut s0, mut s1) = (FpPoly::one(), FpPoly::zero());
        let (mut t0, mut t1) = (FpPoly::zero(), FpPoly::one());
        while !r1.is_zero() {
            let (q, r) = r0.divrem(&r1, p);
            r0 = r1;
            r1 = r;
            let s2 = s0.sub(&q.mul(&s1, p), p);
            s0 = s1;
            s1 = s2;
            let t2 = t0.sub(&q.mul(&t1, p), p);
            t0 = t1;
            t1 = t2;
        }
        if r0.is_zero() {
            return (r0, s0, t0);
        }
        let inv = inv_mod(r0.lead(), p).unwrap();
        (r0.scale(inv, p), s0.scale(inv, p), t0.scale(inv, p))
    }

    /// Inverse modulo `m`, if it exists.
    pub fn inv_mod(&self, m: &Self, p: u64) -> Option<Self> {
        let (g, s, _) = self.rem(m, p).ext_gcd(m, p);
        if g.is_one() {
            Some(s.rem(m, p))
        } else {
            None
        }
    }

    pub fn derivative(&self, p: u64) -> Self {
        let v = self.coeffs.iter().enumerate().skip(1).map(|(i, &c)| mul_mod(c, i as u64 % p, p)).collect();
        FpPoly::new(v, p)
    }

    pub fn eval(&self, x: u64, p: u64) -> u64 {
        self.coeffs.iter().rev().fold(0, |acc, &c| (mul_mod(acc, x, p) + c) % p)
    }

    pub fn mul_mod(&self, other: &Self, m: &Self, p: u64) -> Self {
        self.mul(other, p).rem(m, p)
    }

    pub fn pow_mod(&self, mut e: u128, m: &Self, p: u64) -> Self {
        let mut acc = FpPoly::one().rem(m, p);
        let mut base = self.rem(m, p);
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul_mod(&base, m, p);
            }
            base = base.mul_mod(&base, m, p);
            e >>= 1;
        }
        acc
    }

    /// `g` with `g^p = self`, assuming only exponents divisible by `p` occur.
    fn pth_root(&self, p: u64) -> Self {
        let v = self.coeffs.iter().step_by(p as usize).copied().collect();
        // a^p = a on F_p, so coefficients carry over unchanged
        FpPoly::new(v, p)
    }

    /// Order-of-vanishing of `self` at the irreducible `q` (self nonzero).
    pub fn valuation(&self, q: &Self, p: u64) -> u32 {
        assert!(!self.is_zero());
        let mut v = 0;
        let mut cur = self.clone();
        loop {
            let (quo, r) = cur.divrem(q, p);
            if !r.is_zero() {
                return v;
            }
            cur = quo;
            v += 1;
        }
    }

    pub fn display(&self, var: &str) -> String {
        if self.is_zero() {
            return "0".into();
        }
        let mut terms = Vec::new();
        for (i, &c) in self.coeffs.iter().enumerate().rev() {
            if c == 0 {
                continue;
            }
            let mono = match i {
                0 => String::new(),
                1 => var.to_string(),
                _ => format!("{var}^{i}"),
            };
            terms.push(match (c, i) {
                (_, 0) => c.to_string(),
                (1, _) => mono,
                _ => format!("{c}*{mono}"),
            });
        }
        terms.join("+")
    }

    /// All monic polynomials of exact degree `deg`, in counting order.
    pub fn monic_of_degree(deg: usize, p: u64) -> impl Iterator<Item = FpPoly> {
        let count = p.pow(deg as u32);
        (0..count).map(move |mut idx| {
            let mut v = Vec::with_capacity(deg + 1);
            for _ in 0..deg {
                v.push(idx % p);
                idx /= p;
            }
            v.push(1);
            FpPoly::new(v, p)
        })
    }

    /// All polynomials of degree `< n` (including zero).
    pub fn all_below_degree(n: usize, p: u64) -> impl Iterator<Item = FpPoly> {
        let count = p.pow(n as u32);
        (0..count).map(move |mut idx| {
            let mut v = Vec::with_capacity(n);
            for _ in 0..n {
                v.push(idx % p);
                idx /= p;
            }
            FpPoly::new(v, p)
        })
    }

    pub fn is_irreducible(&self, p: u64) -> bool {
        match self.degree() {
            None | Some(0) => false,
            Some(1) => true,
            Some(n) => {
                let f = self.monic(p);
                if !f.gcd(&f.derivative(p), p).is_one() {
                    return false;
                }
                let parts = distinct_degree(&f, p);
                parts.len() == 1 && parts[0].1 == n
            }
        }
    }

    /// Factorization of a nonzero polynomial into monic irreducibles with
    /// multiplicities, sorted; the leading coefficient is returned separately.
    pub fn factor(&self, p: u64) -> (u64, Vec<(FpPoly, u32)>) {
        assert!(!self.is_zero(), "cannot factor zero");
        let lead = self.lead();
        let f = self.monic(p);
        let mut out: Vec<(FpPoly, u32)> = Vec::new();
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed ^ p);
        for (sq, mult) in squarefree(&f, p) {
            for (part, d) in distinct_degree(&sq, p) {
                for g in equal_degree(&part, d, p, &mut rng) {
                    out.push((g, mult));
                }
            }
        }
        out.sort();
        (lead, out)
    }
}

/// Square-free decomposition of a monic polynomial: `f = prod g_i^{e_i}`
/// with the `g_i` square-free and pairwise coprime.
pub fn squarefree(f: &FpPoly, p: u64) -> Vec<(FpPoly, u32)> {
    let mut out = Vec::new();
    if f.is_constant() {
        return out;
    }
    let d = f.derivative(p);
    if d.is_zero() {
        for (g, e) in squarefree(&f.pth_root(p), p) {
            out.push((g, e * p as u32));
        }
        return out;
    }
    let mut c = f.gcd(&d, p);
    let mut w = f.div_exact(&c, p);
    let mut i = 1u32;
    while !w.is_one() {
        let y = w.gcd(&c, p);
        let fac = w.div_exact(&y, p);
        if !fac.is_one() {
            out.push((fac, i));
        }
        i += 1;
        w = y;
        c = c.div_exact(&w, p);
    }
    if !c.is_one() {
        for (g, e) in squarefree(&c.pth_root(p), p) {
            out.push((g, e * p as u32));
        }
    }
    out
}

/// Distinct-degree factorization of a monic square-free polynomial.
pub fn distinct_degree(f: &FpPoly, p: u64) -> Vec<(FpPoly, usize)> {
    let mut out = Vec::new();
    let mut rest = f.clone();
    let mut h = FpPoly::x().rem(&rest, p);
    let mut i = 1usize;
    while rest.degree().unwrap_or(0) >= 2 * i {
        h = h.pow_mod(p as u128, &rest, p);
        let g = h.sub(&FpPoly::x(), p).gcd(&rest, p);
        if !g.is_one() {
            out.push((g.clone(), i));
            rest = rest.div_exact(&g, p);
            h = h.rem(&rest, p);
        }
        i += 1;
    }
    if let Some(d) = rest.degree() {
        if d > 0 {
            out.push((rest, d));
        }
    }
    out
}

/// Cantor-Zassenhaus splitting of a product of distinct irreducibles of
/// common degree `d`.
fn equal_degree(f: &FpPoly, d: usize, p: u64, rng: &mut ChaCha8Rng) -> Vec<FpPoly> {
    let n = f.degree().unwrap_or(0);
    if n == d {
        return vec![f.clone()];
    }
    loop {
        let a = FpPoly::new((0..n).map(|_| rng.gen_range(0..p)).collect(), p);
        if a.is_constant() {
            continue;
        }
        let b = if p == 2 {
            // absolute trace a + a^2 + ... + a^{2^{d-1}}
            let mut acc = a.clone();
            let mut cur = a.clone();
            for _ in 1..d {
                cur = cur.mul_mod(&cur, f, p);
                acc = acc.add(&cur, p);
            }
            acc
        } else {
            let e = ((p as u128).pow(d as u32) - 1) / 2;
            a.pow_mod(e, f, p).sub(&FpPoly::one(), p)
        };
        let g = b.gcd(f, p);
        if !g.is_one() && g.degree() != f.degree() {
            let mut out = equal_degree(&g, d, p, rng);
            out.extend(equal_degree(&f.div_exact(&g, p), d, p, rng));
            return out;
        }
    }
}
