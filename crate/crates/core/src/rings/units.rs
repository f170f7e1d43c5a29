//! Ring surjections and the finite group `B^× / image(A^×)`.

use super::{Elem, FpPoly, RingKind, RingTower};
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;

/// A supported ring surjection `A ↠ B` with its canonical reduction map.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "SurjectionWire", into = "SurjectionWire")]
pub struct Surjection {
    source: RingTower,
    target: RingTower,
}

#[derive(Serialize, Deserialize)]
struct SurjectionWire {
    source: RingTower,
    target: RingTower,
}

impl TryFrom<SurjectionWire> for Surjection {
    type Error = Error;
    fn try_from(w: SurjectionWire) -> Result<Self> {
        Surjection::new(&w.source, &w.target)
    }
}

impl From<Surjection> for SurjectionWire {
    fn from(s: Surjection) -> Self {
        SurjectionWire { source: s.source, target: s.target }
    }
}

impl std::fmt::Display for Surjection {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}->{}", self.source, self.target)
    }
}

impl Surjection {
    pub fn new(source: &RingTower, target: &RingTower) -> Result<Self> {
        let ok = match (source.kind(), target.kind()) {
            (RingKind::Integers, RingKind::IntegersMod(_) | RingKind::PrimeField(_)) => true,
            (RingKind::Integers, RingKind::Integers) => true,
            (
                RingKind::IntegersMod(m) | RingKind::PrimeField(m),
                RingKind::IntegersMod(n) | RingKind::PrimeField(n),
            ) => m % n == 0,
            (RingKind::PolyRing { p, .. }, RingKind::PolyQuot { p: q, .. }) => p == q,
            (RingKind::PolyRing { p, .. }, RingKind::PolyRing { p: q, .. }) => p == q,
            (RingKind::PolyQuot { p, modulus: f, .. }, RingKind::PolyQuot { p: q, modulus: g, .. }) => {
                p == q && g.divides(f, *p)
            }
            _ => false,
        };
        if !ok {
            return Err(Error::usage(format!("no canonical surjection {source} -> {target}")));
        }
        Ok(Surjection { source: source.clone(), target: target.clone() })
    }

    /// Parse `A->B` in compact ring notation, e.g. `Z->Z/5`.
    pub fn parse(spec: &str) -> Result<Self> {
        let (a, b) =
            spec.split_once("->").ok_or_else(|| Error::parse(format!("expected `SOURCE->TARGET`, got `{spec}`")))?;
        Surjection::new(&RingTower::parse(a)?, &RingTower::parse(b)?)
    }

    pub fn source(&self) -> &RingTower {
        &self.source
    }

    pub fn target(&self) -> &RingTower {
        &self.target
    }

    pub fn reduce(&self, a: &Elem) -> Elem {
        let b = &self.target;
        match (self.source.kind(), a) {
            (RingKind::Integers, Elem::Int(x)) => b.from_int(x),
            (_, Elem::Res(r)) => b.from_i64(*r as i64),
            (_, Elem::Poly(f)) => match b.kind() {
                RingKind::PolyRing { .. } | RingKind::PolyQuot { .. } => b.from_poly(f.clone()),
                _ => unreachable!("validated at construction"),
            },
            _ => panic!("payload mismatch for {}: {a:?}", self.source),
        }
    }

    /// Canonical lift of a target element (least residue or least-degree
    /// representative).
    pub fn lift(&self, b: &Elem) -> Elem {
        let a = &self.source;
        match (a.kind(), b) {
            (RingKind::Integers, Elem::Res(r)) => Elem::Int((*r).into()),
            (RingKind::Integers, Elem::Int(x)) => Elem::Int(x.clone()),
            (_, Elem::Res(r)) => a.from_i64(*r as i64),
            (_, Elem::Poly(f)) => a.from_poly(f.clone()),
            _ => panic!("payload mismatch for {}: {b:?}", self.target),
        }
    }

    pub fn reduce_matrix(&self, m: &super::Matrix) -> super::Matrix {
        assert_eq!(m.ring(), &self.source, "reduce_matrix: matrix over {} not {}", m.ring(), self.source);
        m.map_into(&self.target, |e| self.reduce(e))
    }

    pub fn lift_matrix(&self, m: &super::Matrix) -> super::Matrix {
        assert_eq!(m.ring(), &self.target);
        m.map_into(&self.source, |e| self.lift(e))
    }

    /// Image of `A^×` in `B^×`.
    pub fn unit_image(&self) -> Result<Vec<Elem>> {
        let b = &self.target;
        if !b.is_finite() {
            return Err(Error::usage(format!("unit class group needs a finite target, {b} is infinite")));
        }
        let image: BTreeSet<Elem> = match self.source.kind() {
            RingKind::Integers => [b.one(), b.from_i64(-1)].into_iter().collect(),
            RingKind::PolyRing { p, .. } => (1..*p).map(|c| b.from_poly(FpPoly::constant(c, *p))).collect(),
            _ => self.source.units()?.iter().map(|u| self.reduce(u)).collect(),
        };
        Ok(image.into_iter().collect())
    }

    pub fn is_identity(&self) -> bool {
        self.source == self.target
    }
}

/// The element of `B^× / image(A^×)` represented by the least element of
/// its coset.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct K0Class {
    rep: Elem,
}

impl K0Class {
    pub fn rep(&self) -> &Elem {
        &self.rep
    }
}

/// `coker(A^× → B^×)` for a surjection with finite target.
#[derive(Clone, Debug)]
pub struct UnitClassGroup {
    surjection: Surjection,
    units: Vec<Elem>,
    image: Vec<Elem>,
    cosets: Vec<Elem>,
}

impl UnitClassGroup {
    pub fn new(surjection: &Surjection) -> Result<Self> {
        let b = surjection.target();
        let units = b.units()?;
        let image = surjection.unit_image()?;
        let mut seen = BTreeSet::new();
        let mut cosets = Vec::new();
        for u in &units {
            if seen.contains(u) {
                continue;
            }
            let coset: Vec<Elem> = image.iter().map(|h| b.mul(u, h)).collect();
            cosets.push(coset.iter().min().unwrap().clone());
            seen.extend(coset);
        }
        cosets.sort();
        Ok(UnitClassGroup { surjection: surjection.clone(), units, image, cosets })
    }

    pub fn surjection(&self) -> &Surjection {
        &self.surjection
    }

    pub fn target(&self) -> &RingTower {
        self.surjection.target()
    }

    pub fn order(&self) -> usize {
        self.cosets.len()
    }

    pub fn units(&self) -> &[Elem] {
        &self.units
    }

    pub fn image(&self) -> &[Elem] {
        &self.image
    }

    /// All classes, sorted by representative.
    pub fn elements(&self) -> Vec<K0Class> {
        self.cosets.iter().map(|r| K0Class { rep: r.clone() }).collect()
    }

    pub fn identity(&self) -> K0Class {
        self.project(&self.target().one()).unwrap()
    }

    pub fn is_identity(&self, c: &K0Class) -> bool {
        *c == self.identity()
    }

    /// Coset of a unit of `B`; errors on non-units.
    pub fn project(&self, u: &Elem) -> Result<K0Class> {
        let b = self.target();
        if !b.is_unit(u) {
            return Err(Error::usage(format!("{} is not a unit of {b}", b.format_elem(u))));
        }
        let rep = self.image.iter().map(|h| b.mul(u, h)).min().unwrap();
        Ok(K0Class { rep })
    }

    pub fn mul(&self, x: &K0Class, y: &K0Class) -> K0Class {
        self.project(&self.target().mul(&x.rep, &y.rep)).expect("product of units")
    }

    pub fn inv(&self, x: &K0Class) -> K0Class {
        self.project(&self.target().inv(&x.rep).expect("coset representative is a unit")).unwrap()
    }

    pub fn pow(&self, x: &K0Class, e: i64) -> K0Class {
        let base = if e < 0 { self.inv(x) } else { x.clone() };
        self.project(&self.target().pow(&base.rep, e.unsigned_abs())).unwrap()
    }

    pub fn product<'a>(&self, it: impl IntoIterator<Item = &'a K0Class>) -> K0Class {
        it.into_iter().fold(self.identity(), |acc, c| self.mul(&acc, c))
    }

    pub fn contains(&self, c: &K0Class) -> bool {
        self.cosets.binary_search(&c.rep).is_ok()
    }

    pub fn element_order(&self, x: &K0Class) -> usize {
        let id = self.identity();
        let mut cur = x.clone();
        let mut k = 1;
        while cur != id {
            cur = self.mul(&cur, x);
            k += 1;
        }
        k
    }

    /// Order of the subgroup generated by `gens`.
    pub fn subgroup_order(&self, gens: &[K0Class]) -> usize {
        let mut seen: BTreeSet<K0Class> = BTreeSet::new();
        let mut frontier = vec![self.identity()];
        seen.insert(self.identity());
        while let Some(x) = frontier.pop() {
            for g in gens {
                let y = self.mul(&x, g);
                if seen.insert(y.clone()) {
                    frontier.push(y);
                }
            }
        }
        seen.len()
    }

    /// Invariant factors `d_1 | d_2 | ...` (all > 1) of the group.
    pub fn invariant_factors(&self) -> Vec<u64> {
        let n = self.order() as u64;
        let elems = self.elements();
        let mut prime_parts: Vec<Vec<u64>> = Vec::new();
        for (p, _) in super::poly::factor_u64(n) {
            // s_k = log_p #{x : x^{p^k} = 1}
            let mut s = vec![0u32];
            let mut k = 1u32;
            loop {
                let e = p.pow(k) as i64;
                let count = elems.iter().filter(|x| self.is_identity(&self.pow(x, e))).count() as u64;
                let sk = (count as f64).log(p as f64).round() as u32;
                s.push(sk);
                if sk == *s.get(s.len() - 2).unwrap() {
                    break;
                }
                k += 1;
            }
            // cyclic factors of order >= p^k number s_k - s_{k-1}
            let mut exps = Vec::new();
            for k in 1..s.len() {
                let ge_k = s[k] - s[k - 1];
                let ge_k1 = if k + 1 < s.len() { s[k + 1] - s[k] } else { 0 };
                for _ in 0..(ge_k - ge_k1) {
                    exps.push(p.pow(k as u32));
                }
            }
            exps.sort_unstable_by(|a, b| b.cmp(a));
            prime_parts.push(exps);
        }
        let width = prime_parts.iter().map(|v| v.len()).max().unwrap_or(0);
        let mut out: Vec<u64> =
            (0..width).map(|i| prime_parts.iter().map(|v| v.get(i).copied().unwrap_or(1)).product()).collect();
        out.reverse();
        out
    }
}
