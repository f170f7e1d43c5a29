//! Exact arithmetic over the supported coefficient rings.
//!
//! A [`RingTower`] is a cheap-to-clone handle describing one ring; element
//! payloads ([`Elem`]) carry no ring pointer and are interpreted by the ring
//! that operates on them. [`RingElem`] pairs the two for the checked public
//! arithmetic entry point.

pub mod euclid;
pub mod linalg;
pub mod matrix;
pub mod poly;
pub mod units;

use crate::error::{Error, Result};
use euclid::PolyDomain;
use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
pub use poly::FpPoly;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::sync::Arc;

pub use matrix::Matrix;
pub use units::{Surjection, UnitClassGroup};

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum RingKind {
    Integers,
    IntegersMod(u64),
    PrimeField(u64),
    PolyRing { p: u64, var: String },
    PolyQuot { p: u64, var: String, modulus: FpPoly },
}

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct RingTower {
    kind: Arc<RingKind>,
}

/// Canonical element payload.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Elem {
    Int(BigInt),
    Res(u64),
    Poly(FpPoly),
}

impl Elem {
    pub fn as_poly(&self) -> &FpPoly {
        match self {
            Elem::Poly(f) => f,
            other => panic!("expected polynomial payload, found {other:?}"),
        }
    }

    pub fn as_int(&self) -> &BigInt {
        match self {
            Elem::Int(n) => n,
            other => panic!("expected integer payload, found {other:?}"),
        }
    }

    pub fn as_res(&self) -> u64 {
        match self {
            Elem::Res(r) => *r,
            other => panic!("expected residue payload, found {other:?}"),
        }
    }
}

/// Operations of [`ring_arith`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ArithOp {
    Add,
    Mul,
    Neg,
    InvOpt,
    DivMod,
}

/// An element together with the ring that owns it.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct RingElem {
    pub ring: RingTower,
    pub value: Elem,
}

/// Result of [`ring_arith`]: a single value, a quotient/remainder pair, or
/// nothing (a non-unit passed to `InvOpt`).
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ArithResult {
    Value(RingElem),
    QuotRem(RingElem, RingElem),
    Absent,
}

/// Checked arithmetic on owned elements; all operands must share one ring.
pub fn ring_arith(op: ArithOp, operands: &[RingElem]) -> Result<ArithResult> {
    let ring = match operands.first() {
        Some(e) => e.ring.clone(),
        None => return Err(Error::usage("ring_arith needs at least one operand")),
    };
    if operands.iter().any(|e| e.ring != ring) {
        return Err(Error::usage("ring_arith operands belong to different rings"));
    }
    let arity = match op {
        ArithOp::Neg | ArithOp::InvOpt => 1,
        _ => 2,
    };
    if operands.len() != arity {
        return Err(Error::usage(format!("{op:?} takes {arity} operand(s), got {}", operands.len())));
    }
    let wrap = |value: Elem| RingElem { ring: ring.clone(), value };
    let a = &operands[0].value;
    Ok(match op {
        ArithOp::Add => ArithResult::Value(wrap(ring.add(a, &operands[1].value))),
        ArithOp::Mul => ArithResult::Value(wrap(ring.mul(a, &operands[1].value))),
        ArithOp::Neg => ArithResult::Value(wrap(ring.neg(a))),
        ArithOp::InvOpt => match ring.inv(a) {
            Some(x) => ArithResult::Value(wrap(x)),
            None => ArithResult::Absent,
        },
        ArithOp::DivMod => {
            let (q, r) = ring.div_mod(a, &operands[1].value)?;
            ArithResult::QuotRem(wrap(q), wrap(r))
        }
    })
}

impl fmt::Debug for RingTower {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for RingTower {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &*self.kind {
            RingKind::Integers => write!(f, "Z"),
            RingKind::IntegersMod(n) => write!(f, "Z/{n}"),
            RingKind::PrimeField(p) => write!(f, "F{p}"),
            RingKind::PolyRing { p, var } => write!(f, "F{p}[{var}]"),
            RingKind::PolyQuot { p, var, modulus } => write!(f, "F{p}[{var}]/({})", modulus.display(var)),
        }
    }
}

/// The Euclidean domain a ring is a quotient of, with the modulus.
pub(crate) enum Cover {
    Int(Option<BigInt>),
    Poly(PolyDomain, Option<FpPoly>),
}

impl RingTower {
    pub fn new(kind: RingKind) -> Result<Self> {
        match &kind {
            RingKind::IntegersMod(n) if *n < 2 => {
                return Err(Error::usage(format!("Z/{n}: modulus must be at least 2")))
            }
            RingKind::PrimeField(p) if !poly::is_prime(*p) => {
                return Err(Error::usage(format!("F{p}: {p} is not prime")))
            }
            RingKind::PolyRing { p, .. } if !poly::is_prime(*p) => {
                return Err(Error::usage(format!("polynomial ring over F{p}: {p} is not prime")))
            }
            RingKind::PolyQuot { p, modulus, .. } => {
                if !poly::is_prime(*p) {
                    return Err(Error::usage(format!("quotient over F{p}: {p} is not prime")));
                }
                if !modulus.is_monic() || modulus.deg_i() < 1 {
                    return Err(Error::usage("quotient modulus must be monic of degree at least 1"));
                }
            }
            _ => {}
        }
        Ok(RingTower { kind: Arc::new(kind) })
    }

    pub fn integers() -> Self {
        RingTower { kind: Arc::new(RingKind::Integers) }
    }

    pub fn integers_mod(n: u64) -> Result<Self> {
        Self::new(RingKind::IntegersMod(n))
    }

    pub fn prime_field(p: u64) -> Result<Self> {
        Self::new(RingKind::PrimeField(p))
    }

    pub fn poly_ring(p: u64) -> Result<Self> {
        Self::new(RingKind::PolyRing { p, var: "t".into() })
    }

    pub fn poly_quot(p: u64, modulus: FpPoly) -> Result<Self> {
        Self::new(RingKind::PolyQuot { p, var: "t".into(), modulus })
    }

    pub fn with_var(&self, var: &str) -> Self {
        let kind = match &*self.kind {
            RingKind::PolyRing { p, .. } => RingKind::PolyRing { p: *p, var: var.into() },
            RingKind::PolyQuot { p, modulus, .. } => {
                RingKind::PolyQuot { p: *p, var: var.into(), modulus: modulus.clone() }
            }
            other => other.clone(),
        };
        RingTower { kind: Arc::new(kind) }
    }

    pub fn kind(&self) -> &RingKind {
        &self.kind
    }

    /// Characteristic of the prime field under a polynomial ring or quotient.
    pub fn char_p(&self) -> Option<u64> {
        match &*self.kind {
            RingKind::PolyRing { p, .. } | RingKind::PolyQuot { p, .. } => Some(*p),
            RingKind::PrimeField(p) => Some(*p),
            _ => None,
        }
    }

    pub fn var(&self) -> &str {
        match &*self.kind {
            RingKind::PolyRing { var, .. } | RingKind::PolyQuot { var, .. } => var,
            _ => "t",
        }
    }

    pub fn poly_modulus(&self) -> Option<&FpPoly> {
        match &*self.kind {
            RingKind::PolyQuot { modulus, .. } => Some(modulus),
            _ => None,
        }
    }

    /// Modulus `n` of `Z/n` or `F_p`.
    pub fn int_modulus(&self) -> Option<u64> {
        match &*self.kind {
            RingKind::IntegersMod(n) | RingKind::PrimeField(n) => Some(*n),
            _ => None,
        }
    }

    pub fn is_finite(&self) -> bool {
        !matches!(&*self.kind, RingKind::Integers | RingKind::PolyRing { .. })
    }

    /// Number of elements of a finite ring.
    pub fn cardinality(&self) -> Option<u128> {
        match &*self.kind {
            RingKind::IntegersMod(n) | RingKind::PrimeField(n) => Some(*n as u128),
            RingKind::PolyQuot { p, modulus, .. } => Some((*p as u128).pow(modulus.deg_i() as u32)),
            _ => None,
        }
    }

    pub fn is_field(&self) -> bool {
        match &*self.kind {
            RingKind::PrimeField(_) => true,
            RingKind::IntegersMod(n) => poly::is_prime(*n),
            RingKind::PolyQuot { p, modulus, .. } => modulus.is_irreducible(*p),
            _ => false,
        }
    }

    pub fn is_euclidean(&self) -> bool {
        match &*self.kind {
            RingKind::Integers | RingKind::PolyRing { .. } => true,
            _ => self.is_field(),
        }
    }

    pub fn is_local(&self) -> bool {
        match &*self.kind {
            RingKind::Integers | RingKind::PolyRing { .. } => false,
            RingKind::PrimeField(_) => true,
            RingKind::IntegersMod(n) => poly::factor_u64(*n).len() == 1,
            RingKind::PolyQuot { p, modulus, .. } => modulus.factor(*p).1.len() == 1,
        }
    }

    pub fn zero(&self) -> Elem {
        match &*self.kind {
            RingKind::Integers => Elem::Int(BigInt::zero()),
            RingKind::IntegersMod(_) | RingKind::PrimeField(_) => Elem::Res(0),
            _ => Elem::Poly(FpPoly::zero()),
        }
    }

    pub fn one(&self) -> Elem {
        self.from_i64(1)
    }

    pub fn from_i64(&self, v: i64) -> Elem {
        match &*self.kind {
            RingKind::Integers => Elem::Int(BigInt::from(v)),
            RingKind::IntegersMod(n) | RingKind::PrimeField(n) => Elem::Res(v.rem_euclid(*n as i64) as u64),
            RingKind::PolyRing { p, .. } => Elem::Poly(FpPoly::from_signed(&[v], *p)),
            RingKind::PolyQuot { p, modulus, .. } => Elem::Poly(FpPoly::from_signed(&[v], *p).rem(modulus, *p)),
        }
    }

    /// Canonical element from a polynomial (polynomial rings only).
    pub fn from_poly(&self, f: FpPoly) -> Elem {
        match &*self.kind {
            RingKind::PolyRing { .. } => Elem::Poly(f),
            RingKind::PolyQuot { p, modulus, .. } => Elem::Poly(f.rem(modulus, *p)),
            _ => panic!("{self} is not a polynomial ring"),
        }
    }

    /// The variable `t` of a polynomial ring or quotient.
    pub fn gen(&self) -> Elem {
        self.from_poly(FpPoly::x())
    }

    /// True when the payload is in this ring's canonical reduced form.
    pub fn is_canonical(&self, e: &Elem) -> bool {
        match (&*self.kind, e) {
            (RingKind::Integers, Elem::Int(_)) => true,
            (RingKind::IntegersMod(n) | RingKind::PrimeField(n), Elem::Res(r)) => r < n,
            (RingKind::PolyRing { p, .. }, Elem::Poly(f)) => {
                f.coeffs().iter().all(|c| c < p) && f.lead() != 0 || f.is_zero()
            }
            (RingKind::PolyQuot { p, modulus, .. }, Elem::Poly(f)) => {
                (f.is_zero() || (f.coeffs().iter().all(|c| c < p) && f.lead() != 0)) && f.deg_i() < modulus.deg_i()
            }
            _ => false,
        }
    }

    pub fn is_zero(&self, e: &Elem) -> bool {
        *e == self.zero()
    }

    pub fn is_one(&self, e: &Elem) -> bool {
        *e == self.one()
    }

    pub fn add(&self, a: &Elem, b: &Elem) -> Elem {
        match (&*self.kind, a, b) {
            (RingKind::Integers, Elem::Int(x), Elem::Int(y)) => Elem::Int(x + y),
            (RingKind::IntegersMod(n) | RingKind::PrimeField(n), Elem::Res(x), Elem::Res(y)) => {
                Elem::Res(((*x as u128 + *y as u128) % *n as u128) as u64)
            }
            (RingKind::PolyRing { p, .. } | RingKind::PolyQuot { p, .. }, Elem::Poly(x), Elem::Poly(y)) => {
                Elem::Poly(x.add(y, *p))
            }
            _ => panic!("payload mismatch for {self}: {a:?}, {b:?}"),
        }
    }

    pub fn neg(&self, a: &Elem) -> Elem {
        match (&*self.kind, a) {
            (RingKind::Integers, Elem::Int(x)) => Elem::Int(-x),
            (RingKind::IntegersMod(n) | RingKind::PrimeField(n), Elem::Res(x)) => Elem::Res((n - x) % n),
            (RingKind::PolyRing { p, .. } | RingKind::PolyQuot { p, .. }, Elem::Poly(x)) => Elem::Poly(x.neg(*p)),
            _ => panic!("payload mismatch for {self}: {a:?}"),
        }
    }

    pub fn sub(&self, a: &Elem, b: &Elem) -> Elem {
        self.add(a, &self.neg(b))
    }

    pub fn mul(&self, a: &Elem, b: &Elem) -> Elem {
        match (&*self.kind, a, b) {
            (RingKind::Integers, Elem::Int(x), Elem::Int(y)) => Elem::Int(x * y),
            (RingKind::IntegersMod(n) | RingKind::PrimeField(n), Elem::Res(x), Elem::Res(y)) => {
                Elem::Res(poly::mul_mod(*x, *y, *n))
            }
            (RingKind::PolyRing { p, .. }, Elem::Poly(x), Elem::Poly(y)) => Elem::Poly(x.mul(y, *p)),
            (RingKind::PolyQuot { p, modulus, .. }, Elem::Poly(x), Elem::Poly(y)) => {
                Elem::Poly(x.mul_mod(y, modulus, *p))
            }
            _ => panic!("payload mismatch for {self}: {a:?}, {b:?}"),
        }
    }

    pub fn pow(&self, a: &Elem, mut e: u64) -> Elem {
        let mut acc = self.one();
        let mut base = a.clone();
        while e > 0 {
            if e & 1 == 1 {
                acc = self.mul(&acc, &base);
            }
            base = self.mul(&base, &base);
            e >>= 1;
        }
        acc
    }

    /// Multiplicative inverse, absent exactly when `a` is not a unit.
    pub fn inv(&self, a: &Elem) -> Option<Elem> {
        match (&*self.kind, a) {
            (RingKind::Integers, Elem::Int(x)) => {
                if x.abs().is_one() {
                    Some(Elem::Int(x.clone()))
                } else {
                    None
                }
            }
            (RingKind::IntegersMod(n) | RingKind::PrimeField(n), Elem::Res(x)) => poly::inv_mod(*x, *n).map(Elem::Res),
            (RingKind::PolyRing { p, .. }, Elem::Poly(x)) => {
                if x.degree() == Some(0) {
                    Some(Elem::Poly(FpPoly::constant(poly::inv_mod(x.lead(), *p)?, *p)))
                } else {
                    None
                }
            }
            (RingKind::PolyQuot { p, modulus, .. }, Elem::Poly(x)) => x.inv_mod(modulus, *p).map(Elem::Poly),
            _ => panic!("payload mismatch for {self}: {a:?}"),
        }
    }

    pub fn is_unit(&self, a: &Elem) -> bool {
        self.inv(a).is_some()
    }

    /// Euclidean division; only defined on Euclidean rings.
    pub fn div_mod(&self, a: &Elem, b: &Elem) -> Result<(Elem, Elem)> {
        if !self.is_euclidean() {
            return Err(Error::usage(format!("divmod requires a Euclidean ring, {self} is not")));
        }
        if self.is_zero(b) {
            return Err(Error::usage("divmod by zero"));
        }
        Ok(match (&*self.kind, a, b) {
            (RingKind::Integers, Elem::Int(x), Elem::Int(y)) => {
                let (q, r) = x.div_mod_floor(y);
                (Elem::Int(q), Elem::Int(r))
            }
            (RingKind::PolyRing { p, .. }, Elem::Poly(x), Elem::Poly(y)) => {
                let (q, r) = x.divrem(y, *p);
                (Elem::Poly(q), Elem::Poly(r))
            }
            // fields: exact division
            _ => (self.mul(a, &self.inv(b).expect("nonzero element of a field")), self.zero()),
        })
    }

    pub(crate) fn cover(&self) -> Cover {
        match &*self.kind {
            RingKind::Integers => Cover::Int(None),
            RingKind::IntegersMod(n) | RingKind::PrimeField(n) => Cover::Int(Some(BigInt::from(*n))),
            RingKind::PolyRing { p, .. } => Cover::Poly(PolyDomain { p: *p }, None),
            RingKind::PolyQuot { p, modulus, .. } => Cover::Poly(PolyDomain { p: *p }, Some(modulus.clone())),
        }
    }

    pub(crate) fn lift_int(&self, e: &Elem) -> BigInt {
        match e {
            Elem::Int(x) => x.clone(),
            Elem::Res(r) => BigInt::from(*r),
            Elem::Poly(_) => panic!("{self}: polynomial payload has no integer lift"),
        }
    }

    pub(crate) fn from_int(&self, x: &BigInt) -> Elem {
        match &*self.kind {
            RingKind::Integers => Elem::Int(x.clone()),
            RingKind::IntegersMod(n) | RingKind::PrimeField(n) => {
                Elem::Res(x.mod_floor(&BigInt::from(*n)).to_u64().expect("residue fits"))
            }
            _ => panic!("{self}: integer payload for polynomial ring"),
        }
    }

    /// Every element of a finite ring, in canonical order of construction.
    pub fn elements(&self) -> Result<Vec<Elem>> {
        match &*self.kind {
            RingKind::IntegersMod(n) | RingKind::PrimeField(n) => Ok((0..*n).map(Elem::Res).collect()),
            RingKind::PolyQuot { p, modulus, .. } => {
                let d = modulus.degree().unwrap();
                Ok(FpPoly::all_below_degree(d, *p).map(Elem::Poly).collect())
            }
            _ => Err(Error::usage(format!("{self} is infinite; cannot enumerate"))),
        }
    }

    /// The unit group of a finite ring, sorted.
    pub fn units(&self) -> Result<Vec<Elem>> {
        let mut out: Vec<Elem> = self.elements()?.into_iter().filter(|e| self.is_unit(e)).collect();
        out.sort();
        Ok(out)
    }

    /// A random element; infinite rings draw from a small window
    /// (integers in `[-4, 4]`, polynomials of degree at most 2).
    pub fn random_elem<R: rand::Rng + ?Sized>(&self, rng: &mut R) -> Elem {
        match &*self.kind {
            RingKind::Integers => Elem::Int(BigInt::from(rng.gen_range(-4i64..=4))),
            RingKind::IntegersMod(n) | RingKind::PrimeField(n) => Elem::Res(rng.gen_range(0..*n)),
            RingKind::PolyRing { p, .. } => {
                let deg = rng.gen_range(0..3usize);
                Elem::Poly(FpPoly::new((0..=deg).map(|_| rng.gen_range(0..*p)).collect(), *p))
            }
            RingKind::PolyQuot { p, modulus, .. } => {
                let d = modulus.degree().unwrap();
                Elem::Poly(FpPoly::new((0..d).map(|_| rng.gen_range(0..*p)).collect(), *p))
            }
        }
    }

    pub fn random_unit<R: rand::Rng + ?Sized>(&self, rng: &mut R) -> Elem {
        match &*self.kind {
            RingKind::Integers => self.from_i64(if rng.gen_bool(0.5) { 1 } else { -1 }),
            RingKind::PolyRing { p, .. } => self.from_i64(rng.gen_range(1..*p as i64)),
            _ => loop {
                let e = self.random_elem(rng);
                if self.is_unit(&e) {
                    break e;
                }
            },
        }
    }

    pub fn format_elem(&self, e: &Elem) -> String {
        match e {
            Elem::Int(x) => x.to_string(),
            Elem::Res(r) => r.to_string(),
            Elem::Poly(f) => f.display(self.var()),
        }
    }

    /// Parse a ring from compact notation: `Z`, `Z/8`, `F5`, `F2[t]`,
    /// `F2[t]/(t^2)`, `F3[x]/(x^2+1)`.
    pub fn parse(spec: &str) -> Result<Self> {
        let s: String = spec.chars().filter(|c| !c.is_whitespace()).collect();
        if s == "Z" {
            return Ok(Self::integers());
        }
        if let Some(n) = s.strip_prefix("Z/") {
            let n: u64 = n.parse().map_err(|_| Error::parse(format!("bad modulus in ring `{spec}`")))?;
            return Self::integers_mod(n);
        }
        let rest = s.strip_prefix('F').ok_or_else(|| Error::parse(format!("unrecognized ring `{spec}`")))?;
        let digits: String = rest.chars().take_while(|c| c.is_ascii_digit()).collect();
        let p: u64 = digits.parse().map_err(|_| Error::parse(format!("missing characteristic in `{spec}`")))?;
        let rest = &rest[digits.len()..];
        if rest.is_empty() {
            return Self::prime_field(p);
        }
        let inner = rest.strip_prefix('[').ok_or_else(|| Error::parse(format!("unrecognized ring `{spec}`")))?;
        let close = inner.find(']').ok_or_else(|| Error::parse(format!("unclosed bracket in `{spec}`")))?;
        let var = &inner[..close];
        let tail = &inner[close + 1..];
        let base = Self::poly_ring(p)?.with_var(var);
        if tail.is_empty() {
            return Ok(base);
        }
        let modulus = tail
            .strip_prefix("/(")
            .and_then(|t| t.strip_suffix(')'))
            .ok_or_else(|| Error::parse(format!("expected `/(modulus)` in `{spec}`")))?;
        let f = parse_poly(modulus, var, p)?;
        Ok(Self::new(RingKind::PolyQuot { p, var: var.into(), modulus: f })?)
    }

    /// Wire form of an element: integer/residue as a JSON number (integers
    /// outside `i64` as strings), polynomials as coefficient lists lowest
    /// degree first.
    pub fn elem_to_json(&self, e: &Elem) -> serde_json::Value {
        match e {
            Elem::Int(x) => match x.to_i64() {
                Some(v) => serde_json::Value::from(v),
                None => serde_json::Value::from(x.to_string()),
            },
            Elem::Res(r) => serde_json::Value::from(*r),
            Elem::Poly(f) => serde_json::Value::from(f.coeffs().to_vec()),
        }
    }

    pub fn elem_from_json(&self, v: &serde_json::Value) -> Result<Elem> {
        let bad = || Error::parse(format!("value {v} is not an element of {self}"));
        match &*self.kind {
            RingKind::Integers => {
                let x = match v {
                    serde_json::Value::Number(n) => BigInt::from(n.as_i64().ok_or_else(bad)?),
                    serde_json::Value::String(s) => s.parse::<BigInt>().map_err(|_| bad())?,
                    _ => return Err(bad()),
                };
                Ok(Elem::Int(x))
            }
            RingKind::IntegersMod(n) | RingKind::PrimeField(n) => {
                let x = v.as_i64().ok_or_else(bad)?;
                Ok(Elem::Res(x.rem_euclid(*n as i64) as u64))
            }
            RingKind::PolyRing { p, .. } | RingKind::PolyQuot { p, .. } => {
                let coeffs = match v {
                    serde_json::Value::Array(a) => {
                        a.iter().map(|c| c.as_i64().ok_or_else(bad)).collect::<Result<Vec<_>>>()?
                    }
                    serde_json::Value::Number(n) => vec![n.as_i64().ok_or_else(bad)?],
                    _ => return Err(bad()),
                };
                Ok(self.from_poly(FpPoly::from_signed(&coeffs, *p)))
            }
        }
    }

    /// True when `self` is `Z` or a polynomial ring (where the unit group is
    /// `{±1}` or the constants).
    pub fn is_infinite_euclidean(&self) -> bool {
        matches!(&*self.kind, RingKind::Integers | RingKind::PolyRing { .. })
    }
}

/// Parse `t^2+t+1`-style polynomial notation (also `2*t^3`, `1+t`).
pub fn parse_poly(s: &str, var: &str, p: u64) -> Result<FpPoly> {
    let s: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    if s.is_empty() {
        return Err(Error::parse("empty polynomial"));
    }
    let mut acc = FpPoly::zero();
    let normalized = s.replace('-', "+-");
    for term in normalized.split('+').filter(|t| !t.is_empty()) {
        let (neg, term) = match term.strip_prefix('-') {
            Some(t) => (true, t),
            None => (false, term),
        };
        let (coef, mono) = match term.split_once('*') {
            Some((c, m)) => (c.parse::<u64>().map_err(|_| Error::parse(format!("bad coefficient in `{s}`")))?, m),
            None if term.starts_with(var) => (1, term),
            None => (term.parse::<u64>().map_err(|_| Error::parse(format!("bad term `{term}` in `{s}`")))?, ""),
        };
        let deg = if mono.is_empty() {
            0
        } else if mono == var {
            1
        } else if let Some(e) = mono.strip_prefix(var).and_then(|m| m.strip_prefix('^')) {
            e.parse::<usize>().map_err(|_| Error::parse(format!("bad exponent in `{s}`")))?
        } else {
            return Err(Error::parse(format!("bad monomial `{mono}` in `{s}` (variable `{var}`)")));
        };
        let mut t = FpPoly::monomial(coef % p, deg, p);
        if neg {
            t = t.neg(p);
        }
        acc = acc.add(&t, p);
    }
    Ok(acc)
}

/// JSON description of a ring.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RingSpec {
    Integers,
    IntegersMod {
        n: u64,
    },
    PrimeField {
        p: u64,
    },
    PolyRing {
        p: u64,
        #[serde(default = "default_var")]
        var: String,
    },
    PolyQuot {
        p: u64,
        #[serde(default = "default_var")]
        var: String,
        modulus: Vec<i64>,
    },
}

fn default_var() -> String {
    "t".into()
}

impl From<&RingTower> for RingSpec {
    fn from(r: &RingTower) -> Self {
        match r.kind() {
            RingKind::Integers => RingSpec::Integers,
            RingKind::IntegersMod(n) => RingSpec::IntegersMod { n: *n },
            RingKind::PrimeField(p) => RingSpec::PrimeField { p: *p },
            RingKind::PolyRing { p, var } => RingSpec::PolyRing { p: *p, var: var.clone() },
            RingKind::PolyQuot { p, var, modulus } => RingSpec::PolyQuot {
                p: *p,
                var: var.clone(),
                modulus: modulus.coeffs().iter().map(|&c| c as i64).collect(),
            },
        }
    }
}

impl TryFrom<RingSpec> for RingTower {
    type Error = Error;
    fn try_from(s: RingSpec) -> Result<Self> {
        RingTower::new(match s {
            RingSpec::Integers => RingKind::Integers,
            RingSpec::IntegersMod { n } => RingKind::IntegersMod(n),
            RingSpec::PrimeField { p } => RingKind::PrimeField(p),
            RingSpec::PolyRing { p, var } => RingKind::PolyRing { p, var },
            RingSpec::PolyQuot { p, var, modulus } => {
                RingKind::PolyQuot { p, var, modulus: FpPoly::from_signed(&modulus, p) }
            }
        })
    }
}

impl Serialize for RingTower {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        RingSpec::from(self).serialize(s)
    }
}

impl<'de> Deserialize<'de> for RingTower {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let spec = RingSpec::deserialize(d)?;
        RingTower::try_from(spec).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn re(ring: &RingTower, v: Elem) -> RingElem {
        RingElem { ring: ring.clone(), value: v }
    }

    #[test]
    fn inverse_examples() {
        let z5 = RingTower::integers_mod(5).unwrap();
        assert_eq!(
            ring_arith(ArithOp::InvOpt, &[re(&z5, Elem::Res(2))]).unwrap(),
            ArithResult::Value(re(&z5, Elem::Res(3)))
        );
        let z4 = RingTower::integers_mod(4).unwrap();
        assert_eq!(ring_arith(ArithOp::InvOpt, &[re(&z4, Elem::Res(2))]).unwrap(), ArithResult::Absent);
        // 1+t over F2[t]/(t^2): brute force over the two units
        let b = RingTower::parse("F2[t]/(t^2)").unwrap();
        let u = b.from_poly(FpPoly::new(vec![1, 1], 2));
        let units = b.units().unwrap();
        let inv: Vec<_> = units.iter().filter(|x| b.is_one(&b.mul(&u, x))).collect();
        assert_eq!(inv, vec![&u]);
        assert_eq!(b.inv(&u), Some(u.clone()));
    }

    #[test]
    fn mixed_ring_operands_rejected() {
        let z5 = RingTower::integers_mod(5).unwrap();
        let z7 = RingTower::integers_mod(7).unwrap();
        let err = ring_arith(ArithOp::Add, &[re(&z5, Elem::Res(1)), re(&z7, Elem::Res(1))]).unwrap_err();
        assert!(matches!(err, Error::Usage(_)));
        let err = ring_arith(ArithOp::DivMod, &[re(&z5, Elem::Res(1)), re(&z5, Elem::Res(2))]);
        assert!(err.is_ok(), "F5 viewed as Z/5 is a field");
        let z4 = RingTower::integers_mod(4).unwrap();
        assert!(ring_arith(ArithOp::DivMod, &[re(&z4, Elem::Res(1)), re(&z4, Elem::Res(1))]).is_err());
    }

    #[test]
    fn ring_properties_consistent() {
        for spec in ["Z", "Z/4", "Z/12", "F5", "F2[t]", "F2[t]/(t^2)", "F3[t]/(t^2+1)", "F2[t]/(t^2+t)"] {
            let r = RingTower::parse(spec).unwrap();
            if r.is_field() {
                assert!(r.is_local(), "{spec}");
                assert!(r.is_euclidean(), "{spec}");
            }
            assert_eq!(RingTower::parse(&r.to_string()).unwrap(), r);
        }
        assert!(RingTower::parse("F3[t]/(t^2+1)").unwrap().is_field());
        assert!(!RingTower::parse("F2[t]/(t^2+t)").unwrap().is_local());
        assert!(RingTower::parse("Z/9").unwrap().is_local());
        assert!(RingTower::integers_mod(1).is_err());
        assert!(RingTower::prime_field(6).is_err());
    }

    #[test]
    fn unit_counts() {
        assert_eq!(RingTower::parse("Z/5").unwrap().units().unwrap().len(), 4);
        assert_eq!(RingTower::parse("Z/12").unwrap().units().unwrap().len(), 4);
        let b = RingTower::parse("F2[t]/(t^2)").unwrap();
        let units = b.units().unwrap();
        assert_eq!(units, vec![b.one(), b.from_poly(FpPoly::new(vec![1, 1], 2))]);
        // (q-1) q^{d-1} for a prime power modulus, checked against the scan
        let b = RingTower::parse("F3[t]/(t^3)").unwrap();
        assert_eq!(b.units().unwrap().len(), 2 * 9);
    }

    #[test]
    fn polynomial_parsing() {
        let f = parse_poly("t^2+t+1", "t", 2).unwrap();
        assert_eq!(f, FpPoly::new(vec![1, 1, 1], 2));
        let g = parse_poly("2*x^3 - 1", "x", 3).unwrap();
        assert_eq!(g, FpPoly::new(vec![2, 0, 0, 2], 3));
        assert!(parse_poly("t^", "t", 2).is_err());
    }
}
