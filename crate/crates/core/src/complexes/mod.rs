//! Bounded chain complexes of finite free modules.
//!
//! Differentials lower degree: `d_n : C_n → C_{n-1}` is a
//! `rank(n-1) x rank(n)` matrix acting on column vectors. Sign conventions:
//! `C[k]_n = C_{n-k}` with differential `(-1)^k d`, and
//! `cone(f)_n = X_{n-1} ⊕ Y_n` with differential `[[-d_X, 0], [f, d_Y]]`.

pub mod halg;

use crate::error::{Error, Result};
use crate::modcat::{elementary_decompose, random_gl, ElementaryWitness};
use crate::rings::{linalg, Elem, Matrix, RingKind, RingTower, Surjection};
use rand::Rng;
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "ComplexWire", into = "ComplexWire")]
pub struct BoundedComplex {
    ring: RingTower,
    lo: i64,
    ranks: Vec<usize>,
    // diffs[k] = d_{lo+k+1}
    diffs: Vec<Matrix>,
}

#[derive(Serialize, Deserialize)]
struct ComplexWire {
    ring: RingTower,
    lo: i64,
    ranks: Vec<usize>,
    diffs: Vec<Matrix>,
}

impl TryFrom<ComplexWire> for BoundedComplex {
    type Error = Error;
    fn try_from(w: ComplexWire) -> Result<Self> {
        BoundedComplex::new(&w.ring, w.lo, w.ranks, w.diffs)
    }
}

impl From<BoundedComplex> for ComplexWire {
    fn from(c: BoundedComplex) -> Self {
        ComplexWire { ring: c.ring, lo: c.lo, ranks: c.ranks, diffs: c.diffs }
    }
}

impl BoundedComplex {
    /// `ranks[k]` is the rank in degree `lo + k`; `diffs[k]` is
    /// `d_{lo+k+1}`. Validates shapes and `d∘d = 0`, then trims zero ends.
    pub fn new(ring: &RingTower, lo: i64, ranks: Vec<usize>, diffs: Vec<Matrix>) -> Result<Self> {
        if diffs.len() != ranks.len().saturating_sub(1) {
            return Err(Error::usage(format!(
                "complex with {} degrees needs {} differentials, got {}",
                ranks.len(),
                ranks.len().saturating_sub(1),
                diffs.len()
            )));
        }
        for (k, d) in diffs.iter().enumerate() {
            let n = lo + k as i64 + 1;
            if d.ring() != ring {
                return Err(Error::usage(format!("d_{n} is over {}, complex is over {ring}", d.ring())));
            }
            if d.shape() != (ranks[k], ranks[k + 1]) {
                return Err(Error::usage(format!(
                    "d_{n} has shape {:?}, expected {:?}",
                    d.shape(),
                    (ranks[k], ranks[k + 1])
                )));
            }
        }
        for k in 1..diffs.len() {
            if !diffs[k - 1].mul(&diffs[k]).is_zero() {
                return Err(Error::usage(format!("d_{} ∘ d_{} is not zero", lo + k as i64, lo + k as i64 + 1)));
            }
        }
        Ok(Self::trimmed(ring, lo, ranks, diffs))
    }

    fn trimmed(ring: &RingTower, mut lo: i64, mut ranks: Vec<usize>, mut diffs: Vec<Matrix>) -> Self {
        while ranks.last() == Some(&0) {
            ranks.pop();
            diffs.pop();
        }
        while ranks.first() == Some(&0) {
            ranks.remove(0);
            if !diffs.is_empty() {
                diffs.remove(0);
            }
            lo += 1;
        }
        if ranks.is_empty() {
            lo = 0;
        }
        BoundedComplex { ring: ring.clone(), lo, ranks, diffs }
    }

    /// Build over `[lo, hi]` from rank and differential functions.
    pub fn build(
        ring: &RingTower,
        lo: i64,
        hi: i64,
        rank: impl Fn(i64) -> usize,
        d: impl Fn(i64) -> Matrix,
    ) -> Result<Self> {
        if hi < lo {
            return Ok(Self::zero(ring));
        }
        let ranks: Vec<usize> = (lo..=hi).map(&rank).collect();
        let diffs: Vec<Matrix> = (lo + 1..=hi).map(&d).collect();
        Self::new(ring, lo, ranks, diffs)
    }

    pub fn zero(ring: &RingTower) -> Self {
        BoundedComplex { ring: ring.clone(), lo: 0, ranks: vec![], diffs: vec![] }
    }

    /// `A^rank` placed in degree `n`.
    pub fn concentrated(ring: &RingTower, n: i64, rank: usize) -> Self {
        Self::trimmed(ring, n, vec![rank], vec![])
    }

    /// The two-term complex `A^cols →d A^rows` in degrees `n, n-1`.
    pub fn two_term(d: &Matrix, n: i64) -> Self {
        Self::new(d.ring(), n - 1, vec![d.rows(), d.cols()], vec![d.clone()]).expect("two-term complex")
    }

    pub fn ring(&self) -> &RingTower {
        &self.ring
    }

    pub fn is_zero(&self) -> bool {
        self.ranks.is_empty()
    }

    /// Lowest nonzero degree (0 for the zero complex).
    pub fn lo(&self) -> i64 {
        self.lo
    }

    /// Highest nonzero degree (`lo - 1` for the zero complex).
    pub fn hi(&self) -> i64 {
        self.lo + self.ranks.len() as i64 - 1
    }

    pub fn degrees(&self) -> std::ops::RangeInclusive<i64> {
        self.lo..=self.hi()
    }

    pub fn rank(&self, n: i64) -> usize {
        if n < self.lo || n > self.hi() {
            0
        } else {
            self.ranks[(n - self.lo) as usize]
        }
    }

    pub fn total_rank(&self) -> usize {
        self.ranks.iter().sum()
    }

    /// `d_n : C_n → C_{n-1}`, zero outside the stored range.
    pub fn d(&self, n: i64) -> Matrix {
        if n > self.lo && n <= self.hi() {
            self.diffs[(n - self.lo - 1) as usize].clone()
        } else {
            Matrix::zero(&self.ring, self.rank(n - 1), self.rank(n))
        }
    }

    pub fn shift(&self, k: i64) -> BoundedComplex {
        let sign = if k.rem_euclid(2) == 1 { self.ring.from_i64(-1) } else { self.ring.one() };
        BoundedComplex {
            ring: self.ring.clone(),
            lo: if self.is_zero() { 0 } else { self.lo + k },
            ranks: self.ranks.clone(),
            diffs: self.diffs.iter().map(|d| d.scale(&sign)).collect(),
        }
    }

    pub fn direct_sum(&self, other: &BoundedComplex) -> BoundedComplex {
        let (lo, hi) = span(&[self, other]);
        Self::build(&self.ring, lo, hi, |n| self.rank(n) + other.rank(n), |n| self.d(n).direct_sum(&other.d(n)))
            .expect("direct sum of complexes")
    }

    pub fn reduce(&self, s: &Surjection) -> BoundedComplex {
        BoundedComplex {
            ring: s.target().clone(),
            lo: self.lo,
            ranks: self.ranks.clone(),
            diffs: self.diffs.iter().map(|d| s.reduce_matrix(d)).collect(),
        }
    }

    /// Conjugate by degreewise automorphisms `g_n` (with inverses):
    /// `d'_n = g_{n-1} d_n g_n^{-1}`.
    pub fn conjugate(&self, g: &[(Matrix, Matrix)]) -> BoundedComplex {
        let at = |n: i64| &g[(n - self.lo) as usize];
        Self::build(&self.ring, self.lo, self.hi(), |n| self.rank(n), |n| at(n - 1).0.mul(&self.d(n)).mul(&at(n).1))
            .expect("conjugate of a complex")
    }

    /// Alternating rank `Σ (-1)^n rank C_n`.
    pub fn euler_rank(&self) -> i64 {
        self.degrees().map(|n| if n.rem_euclid(2) == 0 { 1 } else { -1 } * self.rank(n) as i64).sum()
    }
}

fn span(cs: &[&BoundedComplex]) -> (i64, i64) {
    let nonzero: Vec<_> = cs.iter().filter(|c| !c.is_zero()).collect();
    if nonzero.is_empty() {
        return (0, -1);
    }
    (nonzero.iter().map(|c| c.lo()).min().unwrap(), nonzero.iter().map(|c| c.hi()).max().unwrap())
}

/// Degree-indexed family of matrices `X_n → Y_{n+deg}` over a degree range.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
struct Graded {
    lo: i64,
    comps: Vec<Matrix>,
}

impl Graded {
    fn collect(lo: i64, hi: i64, f: impl Fn(i64) -> Matrix) -> Self {
        Graded { lo, comps: (lo..=hi).map(f).collect() }
    }

    fn get(&self, n: i64, ring: &RingTower, rows: usize, cols: usize) -> Matrix {
        let k = n - self.lo;
        if k >= 0 && (k as usize) < self.comps.len() {
            self.comps[k as usize].clone()
        } else {
            Matrix::zero(ring, rows, cols)
        }
    }
}

/// A chain map `X → Y`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "ChainMapWire", into = "ChainMapWire")]
pub struct ChainMap {
    source: BoundedComplex,
    target: BoundedComplex,
    comps: Graded,
}

#[derive(Serialize, Deserialize)]
struct ChainMapWire {
    source: BoundedComplex,
    target: BoundedComplex,
    lo: i64,
    components: Vec<Matrix>,
}

impl TryFrom<ChainMapWire> for ChainMap {
    type Error = Error;
    fn try_from(w: ChainMapWire) -> Result<Self> {
        let g = Graded { lo: w.lo, comps: w.components };
        ChainMap::new(&w.source, &w.target, |n| g.get(n, w.source.ring(), w.target.rank(n), w.source.rank(n)))
    }
}

impl From<ChainMap> for ChainMapWire {
    fn from(f: ChainMap) -> Self {
        ChainMapWire { source: f.source, target: f.target, lo: f.comps.lo, components: f.comps.comps }
    }
}

impl ChainMap {
    /// Components `f(n): X_n → Y_n` are read over the union of both ranges;
    /// shapes and commutation with the differentials are checked.
    pub fn new(source: &BoundedComplex, target: &BoundedComplex, f: impl Fn(i64) -> Matrix) -> Result<Self> {
        if source.ring() != target.ring() {
            return Err(Error::usage("chain map between complexes over different rings"));
        }
        let (lo, hi) = span(&[source, target]);
        let comps = Graded::collect(lo, hi, &f);
        for (k, m) in comps.comps.iter().enumerate() {
            let n = lo + k as i64;
            if m.shape() != (target.rank(n), source.rank(n)) {
                return Err(Error::usage(format!(
                    "chain map component {n} has shape {:?}, expected {:?}",
                    m.shape(),
                    (target.rank(n), source.rank(n))
                )));
            }
        }
        let map = ChainMap { source: source.clone(), target: target.clone(), comps };
        for n in lo..=hi + 1 {
            if target.d(n).mul(&map.at(n)) != map.at(n - 1).mul(&source.d(n)) {
                return Err(Error::usage(format!("chain map does not commute with the differential in degree {n}")));
            }
        }
        Ok(map)
    }

    pub fn source(&self) -> &BoundedComplex {
        &self.source
    }

    pub fn target(&self) -> &BoundedComplex {
        &self.target
    }

    pub fn ring(&self) -> &RingTower {
        self.source.ring()
    }

    pub fn at(&self, n: i64) -> Matrix {
        self.comps.get(n, self.ring(), self.target.rank(n), self.source.rank(n))
    }

    pub fn identity(c: &BoundedComplex) -> Self {
        ChainMap::new(c, c, |n| Matrix::identity(c.ring(), c.rank(n))).expect("identity")
    }

    pub fn zero(x: &BoundedComplex, y: &BoundedComplex) -> Self {
        ChainMap::new(x, y, |n| Matrix::zero(x.ring(), y.rank(n), x.rank(n))).expect("zero map")
    }

    /// `other ∘ self`.
    pub fn then(&self, other: &ChainMap) -> ChainMap {
        assert_eq!(self.target, other.source, "composing chain maps with mismatched complexes");
        ChainMap::new(&self.source, &other.target, |n| other.at(n).mul(&self.at(n))).expect("composite")
    }

    pub fn add(&self, other: &ChainMap) -> ChainMap {
        ChainMap::new(&self.source, &self.target, |n| self.at(n).add(&other.at(n))).expect("sum of chain maps")
    }

    pub fn sub(&self, other: &ChainMap) -> ChainMap {
        ChainMap::new(&self.source, &self.target, |n| self.at(n).sub(&other.at(n))).expect("difference")
    }

    pub fn neg(&self) -> ChainMap {
        ChainMap::new(&self.source, &self.target, |n| self.at(n).neg()).expect("negation")
    }

    pub fn scale(&self, c: &Elem) -> ChainMap {
        ChainMap::new(&self.source, &self.target, |n| self.at(n).scale(c)).expect("scalar multiple")
    }

    /// `f[k]_n = f_{n-k}`.
    pub fn shift(&self, k: i64) -> ChainMap {
        ChainMap::new(&self.source.shift(k), &self.target.shift(k), |n| self.at(n - k)).expect("shift")
    }

    pub fn direct_sum(&self, other: &ChainMap) -> ChainMap {
        ChainMap::new(&self.source.direct_sum(&other.source), &self.target.direct_sum(&other.target), |n| {
            self.at(n).direct_sum(&other.at(n))
        })
        .expect("direct sum of chain maps")
    }

    pub fn reduce(&self, s: &Surjection) -> ChainMap {
        let (x, y) = (self.source.reduce(s), self.target.reduce(s));
        ChainMap::new(&x, &y, |n| s.reduce_matrix(&self.at(n))).expect("reduction of a chain map")
    }

    /// Transport along degreewise isomorphisms: `g_Y f g_X^{-1}`.
    pub fn conjugate(&self, gx: &[(Matrix, Matrix)], gy: &[(Matrix, Matrix)]) -> ChainMap {
        let x = self.source.conjugate(gx);
        let y = self.target.conjugate(gy);
        let pick = |g: &[(Matrix, Matrix)], c: &BoundedComplex, n: i64, inv: bool| {
            if c.rank(n) == 0 {
                return Matrix::identity(c.ring(), 0);
            }
            let p = &g[(n - c.lo()) as usize];
            if inv {
                p.1.clone()
            } else {
                p.0.clone()
            }
        };
        ChainMap::new(&x, &y, |n| {
            pick(gy, &self.target, n, false).mul(&self.at(n)).mul(&pick(gx, &self.source, n, true))
        })
        .expect("conjugated chain map")
    }

    pub fn is_zero(&self) -> bool {
        self.source.degrees().all(|n| self.at(n).is_zero())
    }

    pub fn is_isomorphism(&self) -> bool {
        self.source.degrees().chain(self.target.degrees()).all(|n| self.at(n).inverse().is_some())
    }
}

/// A homotopy `s_n : X_n → Y_{n+1}` between chain maps `X → Y`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "HomotopyWire", into = "HomotopyWire")]
pub struct Homotopy {
    source: BoundedComplex,
    target: BoundedComplex,
    comps: Graded,
}

#[derive(Serialize, Deserialize)]
struct HomotopyWire {
    source: BoundedComplex,
    target: BoundedComplex,
    lo: i64,
    components: Vec<Matrix>,
}

impl TryFrom<HomotopyWire> for Homotopy {
    type Error = Error;
    fn try_from(w: HomotopyWire) -> Result<Self> {
        let g = Graded { lo: w.lo, comps: w.components };
        Homotopy::new(&w.source, &w.target, |n| g.get(n, w.source.ring(), w.target.rank(n + 1), w.source.rank(n)))
    }
}

impl From<Homotopy> for HomotopyWire {
    fn from(h: Homotopy) -> Self {
        HomotopyWire { source: h.source, target: h.target, lo: h.comps.lo, components: h.comps.comps }
    }
}

impl Homotopy {
    pub fn new(source: &BoundedComplex, target: &BoundedComplex, s: impl Fn(i64) -> Matrix) -> Result<Self> {
        let (lo, hi) = span(&[source, &target.shift(-1)]);
        let comps = Graded::collect(lo, hi, &s);
        for (k, m) in comps.comps.iter().enumerate() {
            let n = lo + k as i64;
            if m.shape() != (target.rank(n + 1), source.rank(n)) {
                return Err(Error::usage(format!("homotopy component {n} has shape {:?}", m.shape())));
            }
        }
        Ok(Homotopy { source: source.clone(), target: target.clone(), comps })
    }

    pub fn zero(x: &BoundedComplex, y: &BoundedComplex) -> Self {
        Homotopy::new(x, y, |n| Matrix::zero(x.ring(), y.rank(n + 1), x.rank(n))).unwrap()
    }

    pub fn source(&self) -> &BoundedComplex {
        &self.source
    }

    pub fn target(&self) -> &BoundedComplex {
        &self.target
    }

    pub fn at(&self, n: i64) -> Matrix {
        self.comps.get(n, self.source.ring(), self.target.rank(n + 1), self.source.rank(n))
    }

    /// The chain map `d s + s d`.
    pub fn boundary(&self) -> ChainMap {
        ChainMap::new(&self.source, &self.target, |n| {
            self.target.d(n + 1).mul(&self.at(n)).add(&self.at(n - 1).mul(&self.source.d(n)))
        })
        .expect("d s + s d is a chain map")
    }

    /// Whether `f - g = d s + s d`.
    pub fn connects(&self, f: &ChainMap, g: &ChainMap) -> bool {
        f.sub(g) == self.boundary()
    }

    pub fn add(&self, other: &Homotopy) -> Homotopy {
        Homotopy::new(&self.source, &self.target, |n| self.at(n).add(&other.at(n))).unwrap()
    }

    pub fn neg(&self) -> Homotopy {
        Homotopy::new(&self.source, &self.target, |n| self.at(n).neg()).unwrap()
    }

    /// `s[k]_n = (-1)^k s_{n-k}`.
    pub fn shift(&self, k: i64) -> Homotopy {
        let r = self.source.ring();
        let sign = if k.rem_euclid(2) == 1 { r.from_i64(-1) } else { r.one() };
        Homotopy::new(&self.source.shift(k), &self.target.shift(k), |n| self.at(n - k).scale(&sign)).unwrap()
    }

    /// `g ∘ s` for a chain map `g` out of the target.
    pub fn then_map(&self, g: &ChainMap) -> Homotopy {
        Homotopy::new(&self.source, g.target(), |n| g.at(n + 1).mul(&self.at(n))).unwrap()
    }

    /// `s ∘ f` for a chain map `f` into the source.
    pub fn after_map(&self, f: &ChainMap) -> Homotopy {
        Homotopy::new(f.source(), &self.target, |n| self.at(n).mul(&f.at(n))).unwrap()
    }

    pub fn direct_sum(&self, other: &Homotopy) -> Homotopy {
        Homotopy::new(&self.source.direct_sum(&other.source), &self.target.direct_sum(&other.target), |n| {
            self.at(n).direct_sum(&other.at(n))
        })
        .unwrap()
    }

    pub fn reduce(&self, s: &Surjection) -> Homotopy {
        Homotopy::new(&self.source.reduce(s), &self.target.reduce(s), |n| s.reduce_matrix(&self.at(n))).unwrap()
    }
}

/// `alpha: X → Y`, `beta: Y → X` with `beta alpha - 1 = d h + h d` and
/// `alpha beta - 1 = d k + k d`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HtpyEquivWitness {
    pub alpha: ChainMap,
    pub beta: ChainMap,
    pub h: Homotopy,
    pub k: Homotopy,
}

impl HtpyEquivWitness {
    pub fn identity(c: &BoundedComplex) -> Self {
        HtpyEquivWitness {
            alpha: ChainMap::identity(c),
            beta: ChainMap::identity(c),
            h: Homotopy::zero(c, c),
            k: Homotopy::zero(c, c),
        }
    }

    pub fn verify(&self) -> bool {
        let (x, y) = (self.alpha.source(), self.alpha.target());
        self.beta.source() == y
            && self.beta.target() == x
            && self.h.connects(&self.alpha.then(&self.beta), &ChainMap::identity(x))
            && self.k.connects(&self.beta.then(&self.alpha), &ChainMap::identity(y))
    }

    pub fn shift(&self, n: i64) -> Self {
        HtpyEquivWitness {
            alpha: self.alpha.shift(n),
            beta: self.beta.shift(n),
            h: self.h.shift(n),
            k: self.k.shift(n),
        }
    }

    pub fn direct_sum(&self, other: &Self) -> Self {
        HtpyEquivWitness {
            alpha: self.alpha.direct_sum(&other.alpha),
            beta: self.beta.direct_sum(&other.beta),
            h: self.h.direct_sum(&other.h),
            k: self.k.direct_sum(&other.k),
        }
    }

    /// Witness for `other.alpha ∘ self.alpha`.
    pub fn then(&self, other: &Self) -> Self {
        // b1 b2 a2 a1 - 1 = b1 (b2 a2 - 1) a1 + (b1 a1 - 1)
        let h = other.h.after_map(&self.alpha).then_map(&self.beta).add(&self.h);
        let k = self.k.after_map(&other.beta).then_map(&other.alpha).add(&other.k);
        HtpyEquivWitness { alpha: self.alpha.then(&other.alpha), beta: other.beta.then(&self.beta), h, k }
    }

    /// The same data read backwards.
    pub fn inverse(&self) -> Self {
        HtpyEquivWitness { alpha: self.beta.clone(), beta: self.alpha.clone(), h: self.k.clone(), k: self.h.clone() }
    }
}

pub fn shift(c: &BoundedComplex, n: i64) -> BoundedComplex {
    c.shift(n)
}

/// `cone(f)` with its inclusion `Y → cone` and projection `cone → X[1]`.
#[derive(Clone, Debug)]
pub struct Cone {
    pub complex: BoundedComplex,
    pub incl: ChainMap,
    pub proj: ChainMap,
}

pub fn cone(f: &ChainMap) -> Cone {
    let (x, y) = (f.source(), f.target());
    let r = f.ring();
    let x1 = x.shift(1);
    let (lo, hi) = span(&[&x1, y]);
    let complex = BoundedComplex::build(
        r,
        lo,
        hi,
        |n| x.rank(n - 1) + y.rank(n),
        |n| {
            let top = x.d(n - 1).neg().hstack(&Matrix::zero(r, x.rank(n - 2), y.rank(n)));
            let bottom = f.at(n - 1).hstack(&y.d(n));
            top.vstack(&bottom)
        },
    )
    .expect("cone differential squares to zero");
    let incl = ChainMap::new(y, &complex, |n| {
        Matrix::zero(r, x.rank(n - 1), y.rank(n)).vstack(&Matrix::identity(r, y.rank(n)))
    })
    .expect("inclusion into the cone");
    let proj = ChainMap::new(&complex, &x1, |n| {
        Matrix::identity(r, x.rank(n - 1)).hstack(&Matrix::zero(r, x.rank(n - 1), y.rank(n)))
    })
    .expect("projection from the cone");
    Cone { complex, incl, proj }
}

/// Mapping cylinder of `f: X → Y`: `Cyl_n = X_n ⊕ X_{n-1} ⊕ Y_n` with ends
/// `i0: X → Cyl`, `i1: Y → Cyl` and projection `p: Cyl → Y`, `p i0 = f`,
/// `p i1 = 1`.
#[derive(Clone, Debug)]
pub struct Cylinder {
    pub complex: BoundedComplex,
    pub i0: ChainMap,
    pub i1: ChainMap,
    pub p: ChainMap,
}

pub fn cylinder(f: &ChainMap) -> Cylinder {
    let (x, y) = (f.source(), f.target());
    let r = f.ring();
    let x1 = x.shift(1);
    let (lo, hi) = span(&[x, &x1, y]);
    let z = |a: usize, b: usize| Matrix::zero(r, a, b);
    let complex = BoundedComplex::build(
        r,
        lo,
        hi,
        |n| x.rank(n) + x.rank(n - 1) + y.rank(n),
        |n| {
            let (a0, a1, a2) = (x.rank(n), x.rank(n - 1), y.rank(n));
            let (b0, b1, b2) = (x.rank(n - 1), x.rank(n - 2), y.rank(n - 1));
            let minus_one = Matrix::identity(r, a1).neg();
            let row0 = x.d(n).hstack(&minus_one).hstack(&z(b0, a2));
            let row1 = z(b1, a0).hstack(&x.d(n - 1).neg()).hstack(&z(b1, a2));
            let row2 = z(b2, a0).hstack(&f.at(n - 1)).hstack(&y.d(n));
            row0.vstack(&row1).vstack(&row2)
        },
    )
    .expect("cylinder differential squares to zero");
    let i0 =
        ChainMap::new(x, &complex, |n| Matrix::identity(r, x.rank(n)).vstack(&z(x.rank(n - 1) + y.rank(n), x.rank(n))))
            .expect("i0");
    let i1 =
        ChainMap::new(y, &complex, |n| z(x.rank(n) + x.rank(n - 1), y.rank(n)).vstack(&Matrix::identity(r, y.rank(n))))
            .expect("i1");
    let p = ChainMap::new(&complex, y, |n| {
        f.at(n).hstack(&z(y.rank(n), x.rank(n - 1))).hstack(&Matrix::identity(r, y.rank(n)))
    })
    .expect("projection");
    Cylinder { complex, i0, i1, p }
}

/// Homology of one degree: `A^free_rank ⊕ ⊕ A/(e)` over the torsion
/// invariant factors `e` (units omitted).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HomologyGroup {
    pub degree: i64,
    pub free_rank: usize,
    pub torsion: Vec<Elem>,
}

impl HomologyGroup {
    pub fn is_zero(&self) -> bool {
        self.free_rank == 0 && self.torsion.is_empty()
    }

    pub fn is_free(&self) -> bool {
        self.torsion.is_empty()
    }

    /// Invariant factors with `0` standing for each free summand.
    pub fn factors(&self, ring: &RingTower) -> Vec<Elem> {
        let mut out = self.torsion.clone();
        out.extend(std::iter::repeat(ring.zero()).take(self.free_rank));
        out
    }
}

/// Homology in every degree, over a field, `Z` or `F_p[t]`.
pub fn homology(c: &BoundedComplex) -> Result<Vec<HomologyGroup>> {
    let r = c.ring();
    if r.is_field() {
        return Ok(c
            .degrees()
            .map(|n| {
                let ker = linalg::kernel_basis(&c.d(n)).len();
                let next = c.d(n + 1);
                let img = next.cols() - linalg::kernel_basis(&next).len();
                HomologyGroup { degree: n, free_rank: ker - img, torsion: vec![] }
            })
            .collect());
    }
    if !matches!(r.kind(), RingKind::Integers | RingKind::PolyRing { .. }) {
        return Err(Error::usage(format!(
            "homology with invariant factors needs a field, Z or F_p[t]; over {r} use contracting_homotopy to test acyclicity"
        )));
    }
    let mut out = Vec::new();
    for n in c.degrees() {
        let dn = c.d(n);
        let (_, d, v) = linalg::smith_normal_form(&dn)?;
        let rank = (0..d.rows().min(d.cols())).filter(|&i| !r.is_zero(d.get(i, i))).count();
        let v_inv = v.inverse().expect("Smith transform is invertible");
        let k = c.rank(n) - rank;
        let coords = v_inv.mul(&c.d(n + 1));
        let b = coords.block(rank, 0, k, coords.cols());
        let mut group = HomologyGroup { degree: n, free_rank: 0, torsion: vec![] };
        if k > 0 {
            let (_, e, _) = linalg::smith_normal_form(&b)?;
            for i in 0..k {
                let f = if i < e.cols() { e.get(i, i).clone() } else { r.zero() };
                if r.is_zero(&f) {
                    group.free_rank += 1;
                } else if !r.is_unit(&f) {
                    group.torsion.push(f);
                }
            }
        }
        out.push(group);
    }
    Ok(out)
}

/// A homotopy `h` with `d h + h d = 1`, solved degree by degree from the
/// bottom; `None` exactly when the complex is not contractible.
pub fn contracting_homotopy(c: &BoundedComplex) -> Option<Homotopy> {
    contraction_from_bottom(c, |_, h| h)
}

/// Like [`contracting_homotopy`], but each degree's particular solution is
/// moved by a random element of `ker d_{n+1}`, giving independent choices.
pub fn random_contracting_homotopy<R: Rng + ?Sized>(c: &BoundedComplex, rng: &mut R) -> Option<Homotopy> {
    let r = c.ring().clone();
    contraction_from_bottom(c, |d_next, h| {
        let ker = linalg::kernel_basis(d_next);
        if ker.is_empty() {
            return h;
        }
        let k = Matrix::from_fn(&r, d_next.cols(), ker.len(), |i, j| ker[j][i].clone());
        h.add(&k.mul(&Matrix::random(&r, ker.len(), h.cols(), rng)))
    })
}

// Solving d_{n+1} h_n = 1 - h_{n-1} d_n is always possible on an exact
// complex: the right side lands in Z_n = B_n.
fn contraction_from_bottom(c: &BoundedComplex, mut adjust: impl FnMut(&Matrix, Matrix) -> Matrix) -> Option<Homotopy> {
    let r = c.ring();
    let mut comps: Vec<Matrix> = Vec::new();
    let mut prev = Matrix::zero(r, c.rank(c.lo()), c.rank(c.lo() - 1));
    for n in c.degrees() {
        let rhs = Matrix::identity(r, c.rank(n)).sub(&prev.mul(&c.d(n)));
        let d_next = c.d(n + 1);
        let h = linalg::solve_matrix(&d_next, &rhs).expect("shapes agree")?;
        let h = adjust(&d_next, h);
        comps.push(h.clone());
        prev = h;
    }
    let lo = c.lo();
    let h = Homotopy::new(c, c, |n| {
        if n >= lo && ((n - lo) as usize) < comps.len() {
            comps[(n - lo) as usize].clone()
        } else {
            Matrix::zero(r, c.rank(n + 1), c.rank(n))
        }
    })
    .unwrap();
    debug_assert!(h.boundary() == ChainMap::identity(c));
    Some(h)
}

/// A homotopy inverse of `alpha` read off a contraction `H` of its cone.
/// With `H_n = [[a, b], [c, e]]` on `X_{n-1} ⊕ Y_n`, `b` is the inverse,
/// `a` contracts `βα - 1` and `-e` contracts `αβ - 1`. `None` when the
/// cone is not contractible.
pub fn equivalence_witness(alpha: &ChainMap) -> Option<HtpyEquivWitness> {
    let (x, y) = (alpha.source(), alpha.target());
    let c = cone(alpha).complex;
    let hc = contracting_homotopy(&c)?;
    let beta = ChainMap::new(y, x, |n| hc.at(n).block(0, x.rank(n - 1), x.rank(n), y.rank(n))).ok()?;
    let h = Homotopy::new(x, x, |n| hc.at(n + 1).block(0, 0, x.rank(n + 1), x.rank(n))).ok()?;
    let k = Homotopy::new(y, y, |n| hc.at(n).block(x.rank(n), x.rank(n - 1), y.rank(n + 1), y.rank(n)).neg()).ok()?;
    let w = HtpyEquivWitness { alpha: alpha.clone(), beta, h, k };
    debug_assert!(w.verify());
    Some(w)
}

/// Cycles representing a basis of a free homology module, with a left
/// inverse that reads homology coordinates off any cycle.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HomologyBasis {
    pub degree: i64,
    /// `rank(n) x h`, columns are cycles.
    pub basis: Matrix,
    /// `h x rank(n)`, kills boundaries, `proj * basis = 1`.
    pub proj: Matrix,
}

/// Homology bases over `Z` or `F_p[t]`; `Ok(None)` when some homology
/// module has torsion.
pub fn free_homology_bases(c: &BoundedComplex) -> Result<Option<Vec<HomologyBasis>>> {
    let r = c.ring();
    if !matches!(r.kind(), RingKind::Integers | RingKind::PolyRing { .. }) {
        return Err(Error::usage(format!("homology bases need Z or F_p[t], not {r}")));
    }
    let mut out = Vec::new();
    for n in c.degrees() {
        let (_, d, v) = linalg::smith_normal_form(&c.d(n))?;
        let rank = (0..d.rows().min(d.cols())).filter(|&i| !r.is_zero(d.get(i, i))).count();
        let v_inv = v.inverse().expect("Smith transform is invertible");
        let dim = c.rank(n);
        let k = dim - rank;
        let z_basis = v.block(0, rank, dim, k);
        let z_coords = v_inv.block(rank, 0, k, dim);
        let w = z_coords.mul(&c.d(n + 1));
        let (u2, e, _) = linalg::smith_normal_form(&w)?;
        let diag: Vec<Elem> =
            (0..e.rows().min(e.cols())).map(|i| e.get(i, i).clone()).filter(|x| !r.is_zero(x)).collect();
        if diag.iter().any(|x| !r.is_unit(x)) {
            return Ok(None);
        }
        let r2 = diag.len();
        let u2_inv = u2.inverse().expect("Smith transform is invertible");
        out.push(HomologyBasis {
            degree: n,
            basis: z_basis.mul(&u2_inv.block(0, r2, k, k - r2)),
            proj: u2.block(r2, 0, k - r2, k).mul(&z_coords),
        });
    }
    Ok(Some(out))
}

/// `s` with `s d + d s = 1` and `s s = 0`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StrictSplit {
    pub s: Homotopy,
}

impl StrictSplit {
    pub fn complex(&self) -> &BoundedComplex {
        self.s.source()
    }

    pub fn at(&self, n: i64) -> Matrix {
        self.s.at(n)
    }

    /// Both identities, degree by degree.
    pub fn verify(&self) -> bool {
        let c = self.complex();
        let r = c.ring();
        c.degrees().all(|n| {
            let sd_ds = self.at(n - 1).mul(&c.d(n)).add(&c.d(n + 1).mul(&self.at(n)));
            sd_ds == Matrix::identity(r, c.rank(n)) && self.at(n + 1).mul(&self.at(n)).is_zero()
        })
    }
}

/// `s = h d h`. With `p = d h` idempotent onto the cycles, `s` splits each
/// `0 → Z_n → C_n → Z_{n-1} → 0`, so both identities hold exactly.
pub fn strict_split(h: &Homotopy) -> Result<StrictSplit> {
    let c = h.source();
    if h.boundary() != ChainMap::identity(c) {
        return Err(Error::usage("strict_split: the homotopy does not contract the complex"));
    }
    let s = Homotopy::new(c, c, |n| h.at(n).mul(&c.d(n + 1)).mul(&h.at(n))).unwrap();
    let split = StrictSplit { s };
    if !split.verify() {
        return Err(Error::internal("strict split identities fail"));
    }
    Ok(split)
}

/// `Φ_{C,s}: ⊕ C_odd → ⊕ C_even` and its inverse, with degrees in
/// ascending order inside each side.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Phi {
    pub odd_degrees: Vec<i64>,
    pub even_degrees: Vec<i64>,
    pub matrix: Matrix,
    pub inverse: Matrix,
}

fn parity_blocks(c: &BoundedComplex, parity: i64) -> (Vec<i64>, Vec<usize>) {
    let degs: Vec<i64> = c.degrees().filter(|n| n.rem_euclid(2) == parity).collect();
    let mut offsets = Vec::new();
    let mut acc = 0;
    for &n in &degs {
        offsets.push(acc);
        acc += c.rank(n);
    }
    offsets.push(acc);
    (degs, offsets)
}

/// Assemble `d + s` restricted to one parity.
fn fan(c: &BoundedComplex, s: &StrictSplit, from_parity: i64) -> Matrix {
    let r = c.ring();
    let (src, so) = parity_blocks(c, from_parity);
    let (dst, dof) = parity_blocks(c, 1 - from_parity);
    let mut m = Matrix::zero(r, *dof.last().unwrap(), *so.last().unwrap());
    for (j, &n) in src.iter().enumerate() {
        for (i, &k) in dst.iter().enumerate() {
            let block = if k == n - 1 {
                c.d(n)
            } else if k == n + 1 {
                s.at(n)
            } else {
                continue;
            };
            m.set_block(dof[i], so[j], &block);
        }
    }
    m
}

pub fn phi(s: &StrictSplit) -> Phi {
    let c = s.complex();
    let matrix = fan(c, s, 1);
    let inverse = fan(c, s, 0);
    debug_assert!(matrix.mul(&inverse).is_identity() && inverse.mul(&matrix).is_identity());
    Phi { odd_degrees: parity_blocks(c, 1).0, even_degrees: parity_blocks(c, 0).0, matrix, inverse }
}

/// `γ = Φ_s Φ_{s'}^{-1}` for two strict splits of the same complex,
/// with its determinant and an elementary witness when one is found.
#[derive(Clone, Debug)]
pub struct SplitComparison {
    pub gamma: Matrix,
    pub det_gamma: Elem,
    pub witness: Option<ElementaryWitness>,
}

pub fn compare_splits(s: &StrictSplit, s2: &StrictSplit) -> Result<SplitComparison> {
    if s.complex() != s2.complex() {
        return Err(Error::usage("compare_splits: splits of different complexes"));
    }
    let gamma = phi(s).matrix.mul(&phi(s2).inverse);
    let det_gamma = gamma.det()?;
    let witness = if gamma.ring().is_one(&det_gamma) { elementary_decompose(&gamma)? } else { None };
    Ok(SplitComparison { gamma, det_gamma, witness })
}

/// A contractible complex: a sum of pieces `[A →1 A]` (at most two per
/// degree pair), conjugated by random automorphisms in every degree.
/// Degrees lie in `lo..lo + len`.
pub fn random_contractible<R: Rng + ?Sized>(ring: &RingTower, lo: i64, len: usize, rng: &mut R) -> BoundedComplex {
    let len = len.max(1);
    let pieces: Vec<usize> = (0..len - 1).map(|_| rng.gen_range(0..=2)).collect();
    let piece = |n: i64| -> usize {
        let k = n - lo - 1;
        if k >= 0 && (k as usize) < pieces.len() {
            pieces[k as usize]
        } else {
            0
        }
    };
    let hi = lo + len as i64 - 1;
    let r = ring;
    let base = BoundedComplex::build(
        r,
        lo,
        hi,
        |n| piece(n) + piece(n + 1),
        |n| {
            // C_n = (pieces reaching down from n) ⊕ (pieces reaching down from n+1)
            let (down_n, up_n) = (piece(n), piece(n + 1));
            let (down_m, up_m) = (piece(n - 1), piece(n));
            let mut d = Matrix::zero(r, down_m + up_m, down_n + up_n);
            d.set_block(down_m, 0, &Matrix::identity(r, down_n));
            d
        },
    )
    .expect("elementary contractible pieces");
    let gl: Vec<(Matrix, Matrix)> = base.degrees().map(|n| random_gl(r, base.rank(n), rng)).collect();
    base.conjugate(&gl)
}

/// Conjugation data drawn for each degree of `c`.
pub fn random_degreewise_gl<R: Rng + ?Sized>(c: &BoundedComplex, rng: &mut R) -> Vec<(Matrix, Matrix)> {
    c.degrees().map(|n| random_gl(c.ring(), c.rank(n), rng)).collect()
}
