//! Relative `K_0` of a ring surjection `A ↠ B`.
//!
//! Objects are triples `(P, α, Q)`: free modules (or bounded complexes of
//! them) over `A` and an isomorphism (or homotopy equivalence) between their
//! reductions over `B`. The Euler characteristic turns a complex-level
//! triple into a module-level one, and the determinant class in
//! `B^× / image(A^×)` is the invariant that every relation is checked
//! against.

mod generate;
mod relations;

pub use generate::{
    random_chain, random_degreewise, random_payload, random_rel_triple, ChainPiece, GenOptions, GeneratedChain,
};
pub use relations::{
    instance_seed, run_instances, run_suite, verify_relation, RelationCheck, RelationKind, RelationPayload,
    SplitExactMaps, SuiteInstance, SuiteReport,
};

use crate::complexes::{
    contracting_homotopy, equivalence_witness, phi, random_contracting_homotopy, strict_split, BoundedComplex,
    ChainMap, Homotopy, HtpyEquivWitness,
};
use crate::error::{Error, Result};
use crate::modcat::{elementary_decompose, random_gl, FreeModule};
pub use crate::rings::units::K0Class;
use crate::rings::{Matrix, Surjection, UnitClassGroup};
use rand::Rng;
use serde::{Deserialize, Serialize};

/// `(M, φ, N)`: free `A`-modules with `φ: M ⊗ B ≅ N ⊗ B`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "DegreewiseWire", into = "DegreewiseWire")]
pub struct DegreewiseTriple {
    surj: Surjection,
    source: FreeModule,
    target: FreeModule,
    phi: Matrix,
}

#[derive(Serialize, Deserialize)]
struct DegreewiseWire {
    surjection: Surjection,
    phi: Matrix,
}

impl TryFrom<DegreewiseWire> for DegreewiseTriple {
    type Error = Error;
    fn try_from(w: DegreewiseWire) -> Result<Self> {
        DegreewiseTriple::new(&w.surjection, &w.phi)
    }
}

impl From<DegreewiseTriple> for DegreewiseWire {
    fn from(t: DegreewiseTriple) -> Self {
        DegreewiseWire { surjection: t.surj, phi: t.phi }
    }
}

impl DegreewiseTriple {
    /// `phi` is over `B`; the ranks of `M` and `N` are its column and row
    /// counts.
    pub fn new(surj: &Surjection, phi: &Matrix) -> Result<Self> {
        if phi.ring() != surj.target() {
            return Err(Error::usage(format!("phi is over {}, expected {}", phi.ring(), surj.target())));
        }
        if phi.inverse().is_none() {
            return Err(Error::usage("phi is not invertible over the target ring"));
        }
        let a = surj.source();
        Ok(DegreewiseTriple {
            surj: surj.clone(),
            source: FreeModule::new(a, phi.cols()),
            target: FreeModule::new(a, phi.rows()),
            phi: phi.clone(),
        })
    }

    pub fn identity(surj: &Surjection, rank: usize) -> Self {
        Self::new(surj, &Matrix::identity(surj.target(), rank)).unwrap()
    }

    pub fn surjection(&self) -> &Surjection {
        &self.surj
    }

    pub fn source(&self) -> &FreeModule {
        &self.source
    }

    pub fn target(&self) -> &FreeModule {
        &self.target
    }

    pub fn phi(&self) -> &Matrix {
        &self.phi
    }

    /// `(M, ψφ, L)` for `other = (N, ψ, L)`.
    pub fn compose(&self, other: &DegreewiseTriple) -> Result<Self> {
        if self.target != other.source || self.surj != other.surj {
            return Err(Error::usage("composing triples with mismatched middle modules"));
        }
        Self::new(&self.surj, &other.phi.mul(&self.phi))
    }

    pub fn direct_sum(&self, other: &DegreewiseTriple) -> Self {
        Self::new(&self.surj, &self.phi.direct_sum(&other.phi)).unwrap()
    }

    /// `(N, φ^{-1}, M)`.
    pub fn inverse(&self) -> Self {
        Self::new(&self.surj, &self.phi.inverse().unwrap()).unwrap()
    }

    pub fn iota_rank(&self) -> i64 {
        self.source.rank as i64 - self.target.rank as i64
    }
}

/// `(P, α, Q)` for bounded complexes over `A` and a homotopy equivalence of
/// their reductions, carried with its witness.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RelTripleWire", into = "RelTripleWire")]
pub struct RelTriple {
    surj: Surjection,
    p: BoundedComplex,
    q: BoundedComplex,
    witness: HtpyEquivWitness,
}

#[derive(Serialize, Deserialize)]
struct RelTripleWire {
    surjection: Surjection,
    p: BoundedComplex,
    q: BoundedComplex,
    witness: HtpyEquivWitness,
}

impl TryFrom<RelTripleWire> for RelTriple {
    type Error = Error;
    fn try_from(w: RelTripleWire) -> Result<Self> {
        RelTriple::new(&w.surjection, &w.p, &w.q, &w.witness)
    }
}

impl From<RelTriple> for RelTripleWire {
    fn from(t: RelTriple) -> Self {
        RelTripleWire { surjection: t.surj, p: t.p, q: t.q, witness: t.witness }
    }
}

impl RelTriple {
    pub fn new(surj: &Surjection, p: &BoundedComplex, q: &BoundedComplex, witness: &HtpyEquivWitness) -> Result<Self> {
        for (name, c) in [("P", p), ("Q", q)] {
            if c.ring() != surj.source() {
                return Err(Error::usage(format!("{name} is over {}, expected {}", c.ring(), surj.source())));
            }
        }
        if *witness.alpha.source() != p.reduce(surj) || *witness.alpha.target() != q.reduce(surj) {
            return Err(Error::usage("the comparison map does not run between the reductions of P and Q"));
        }
        if !witness.verify() {
            return Err(Error::usage("the homotopy equivalence witness does not verify"));
        }
        Ok(RelTriple { surj: surj.clone(), p: p.clone(), q: q.clone(), witness: witness.clone() })
    }

    /// Find a witness for `alpha` by contracting its cone.
    pub fn from_map(surj: &Surjection, p: &BoundedComplex, q: &BoundedComplex, alpha: &ChainMap) -> Result<Self> {
        let w = equivalence_witness(alpha)
            .ok_or_else(|| Error::usage("the comparison map is not a homotopy equivalence"))?;
        Self::new(surj, p, q, &w)
    }

    pub fn identity(surj: &Surjection, p: &BoundedComplex) -> Self {
        Self::new(surj, p, p, &HtpyEquivWitness::identity(&p.reduce(surj))).unwrap()
    }

    pub fn surjection(&self) -> &Surjection {
        &self.surj
    }

    pub fn p(&self) -> &BoundedComplex {
        &self.p
    }

    pub fn q(&self) -> &BoundedComplex {
        &self.q
    }

    pub fn alpha(&self) -> &ChainMap {
        &self.witness.alpha
    }

    pub fn witness(&self) -> &HtpyEquivWitness {
        &self.witness
    }

    pub fn shift(&self, k: i64) -> Self {
        RelTriple { surj: self.surj.clone(), p: self.p.shift(k), q: self.q.shift(k), witness: self.witness.shift(k) }
    }

    pub fn direct_sum(&self, other: &RelTriple) -> Self {
        RelTriple {
            surj: self.surj.clone(),
            p: self.p.direct_sum(&other.p),
            q: self.q.direct_sum(&other.q),
            witness: self.witness.direct_sum(&other.witness),
        }
    }

    /// `(P, βα, R)` for `other = (Q, β, R)`.
    pub fn compose(&self, other: &RelTriple) -> Result<Self> {
        if self.q != other.p || self.surj != other.surj {
            return Err(Error::usage("composing triples with mismatched middle complexes"));
        }
        Ok(RelTriple {
            surj: self.surj.clone(),
            p: self.p.clone(),
            q: other.q.clone(),
            witness: self.witness.then(&other.witness),
        })
    }

    pub fn iota_rank(&self) -> i64 {
        self.p.euler_rank() - self.q.euler_rank()
    }
}

/// A signed word in degreewise triples, the free group the relations act on.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FormalRelWord {
    pub terms: Vec<(i64, DegreewiseTriple)>,
}

impl FormalRelWord {
    pub fn class_in(&self, group: &UnitClassGroup) -> Result<K0Class> {
        let mut acc = group.identity();
        for (e, t) in &self.terms {
            acc = group.mul(&acc, &group.pow(&t.class_in(group)?, *e));
        }
        Ok(acc)
    }
}

/// Anything carrying a determinant class.
pub trait ClassInvariant {
    fn class_in(&self, group: &UnitClassGroup) -> Result<K0Class>;
}

impl ClassInvariant for DegreewiseTriple {
    fn class_in(&self, group: &UnitClassGroup) -> Result<K0Class> {
        if group.surjection() != &self.surj {
            return Err(Error::usage("triple and class group belong to different surjections"));
        }
        if !self.phi.is_square() {
            return Err(Error::usage("phi is not square, so its determinant is undefined"));
        }
        group.project(&self.phi.det()?)
    }
}

impl ClassInvariant for RelTriple {
    fn class_in(&self, group: &UnitClassGroup) -> Result<K0Class> {
        chi(self)?.class_in(group)
    }
}

pub fn class_of(group: &UnitClassGroup, x: &impl ClassInvariant) -> Result<K0Class> {
    x.class_in(group)
}

/// `χ(P, α, Q) = (⊕ P_{2n} ⊕ Q_{2n+1}, Φ, ⊕ P_{2n-1} ⊕ Q_{2n})` with `Φ`
/// taken from the strict split `h d h` of the canonical contraction of
/// `cone(α)`.
pub fn chi(t: &RelTriple) -> Result<DegreewiseTriple> {
    chi_from(t, contracting_homotopy(&crate::complexes::cone(t.alpha()).complex))
}

/// [`chi`] with a randomly perturbed contraction, for independence checks.
pub fn chi_randomized<R: Rng + ?Sized>(t: &RelTriple, rng: &mut R) -> Result<DegreewiseTriple> {
    chi_from(t, random_contracting_homotopy(&crate::complexes::cone(t.alpha()).complex, rng))
}

fn chi_from(t: &RelTriple, h: Option<Homotopy>) -> Result<DegreewiseTriple> {
    let h = h.ok_or_else(|| Error::internal("cone of a witnessed homotopy equivalence is not contractible"))?;
    let s = strict_split(&h)?;
    let p = phi(&s);
    let c = s.complex();
    let odd: usize = p.odd_degrees.iter().map(|&n| c.rank(n)).sum();
    let even: usize = p.even_degrees.iter().map(|&n| c.rank(n)).sum();
    debug_assert_eq!((p.matrix.rows(), p.matrix.cols()), (even, odd));
    DegreewiseTriple::new(&t.surj, &p.matrix)
}

/// `D` placed in degree 0: `(M[0], φ, N[0])` with inverse `φ^{-1}`.
pub fn embed(d: &DegreewiseTriple) -> RelTriple {
    let surj = &d.surj;
    let (a, b) = (surj.source(), surj.target());
    let p = BoundedComplex::concentrated(a, 0, d.source.rank);
    let q = BoundedComplex::concentrated(a, 0, d.target.rank);
    let (pb, qb) = (p.reduce(surj), q.reduce(surj));
    let at = |m: &Matrix, x: &BoundedComplex, y: &BoundedComplex| {
        let m = m.clone();
        let (x, y) = (x.clone(), y.clone());
        move |n: i64| if n == 0 { m.clone() } else { Matrix::zero(b, y.rank(n), x.rank(n)) }
    };
    let alpha = ChainMap::new(&pb, &qb, at(&d.phi, &pb, &qb)).unwrap();
    let beta = ChainMap::new(&qb, &pb, at(&d.phi.inverse().unwrap(), &qb, &pb)).unwrap();
    let witness = HtpyEquivWitness { alpha, beta, h: Homotopy::zero(&pb, &pb), k: Homotopy::zero(&qb, &qb) };
    RelTriple::new(surj, &p, &q, &witness).expect("embedding of a degreewise triple")
}

/// `δ(g) = [(A^n, g, A^n)]`.
pub fn heller_delta(group: &UnitClassGroup, g: &Matrix) -> Result<K0Class> {
    DegreewiseTriple::new(group.surjection(), g)?.class_in(group)
}

/// `ι(P, α, Q) = Σ (-1)^i (rank P_i - rank Q_i)`.
pub fn iota_rank(t: &RelTriple) -> i64 {
    t.iota_rank()
}

/// Exactness of `K_1(A) → K_1(B) → K_0(F) → K_0(A) → K_0(B)` with `K_1`
/// represented by units and `K_0` by rank.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct HellerReport {
    pub surjection: Surjection,
    pub group_order: usize,
    pub invariant_factors: Vec<u64>,
    /// `δ` kills the image of `A^×`.
    pub k1_image_trivial: bool,
    /// `δ(b)` trivial only for `b` in that image.
    pub kernel_is_image: bool,
    /// Every class is `δ` of some unit.
    pub delta_surjective: bool,
    /// `δ(gh) = δ(g) δ(h)` on random invertible matrices.
    pub delta_multiplicative: bool,
    /// `ι` vanishes on random triples and `K_0(A) → K_0(B)` is injective.
    pub iota_trivial: bool,
    /// Random determinant-one matrices over `B` that decomposed into
    /// transvections, out of `sk1_trials`.
    pub sk1_decomposed: usize,
    pub sk1_trials: usize,
}

impl HellerReport {
    pub fn exact(&self) -> bool {
        self.k1_image_trivial
            && self.kernel_is_image
            && self.delta_surjective
            && self.delta_multiplicative
            && self.iota_trivial
            && self.sk1_decomposed == self.sk1_trials
    }
}

pub fn heller_sequence_check<R: Rng + ?Sized>(surj: &Surjection, rng: &mut R) -> Result<HellerReport> {
    let group = UnitClassGroup::new(surj).map_err(|e| Error::usage(format!("unsupported surjection {surj}: {e}")))?;
    let b = surj.target();
    let one_by_one = |u: &crate::rings::Elem| Matrix::from_fn(b, 1, 1, |_, _| u.clone());

    let mut k1_image_trivial = true;
    for u in group.image() {
        k1_image_trivial &= group.is_identity(&heller_delta(&group, &one_by_one(u))?);
    }
    let mut kernel_is_image = true;
    let mut hit = std::collections::BTreeSet::new();
    for u in group.units() {
        let c = heller_delta(&group, &one_by_one(u))?;
        kernel_is_image &= group.is_identity(&c) == group.image().contains(u);
        hit.insert(c);
    }
    let delta_surjective = hit.len() == group.order();

    let mut delta_multiplicative = true;
    for _ in 0..20 {
        let n = rng.gen_range(1..=3);
        let (g, _) = random_gl(b, n, rng);
        let (h, _) = random_gl(b, n, rng);
        let lhs = heller_delta(&group, &g.mul(&h))?;
        let rhs = group.mul(&heller_delta(&group, &g)?, &heller_delta(&group, &h)?);
        delta_multiplicative &= lhs == rhs;
    }

    let rank_map_injective = !b.is_one(&b.zero());
    let mut iota_trivial = rank_map_injective;
    for _ in 0..10 {
        let (t, _) = random_rel_triple(surj, &GenOptions::default(), rng)?;
        iota_trivial &= t.iota_rank() == 0;
    }

    let sk1_trials = 20;
    let mut sk1_decomposed = 0;
    for _ in 0..sk1_trials {
        let n = rng.gen_range(2..=4);
        let (g, _) = random_gl(b, n, rng);
        // scale the first column to make the determinant 1
        let d_inv = b.inv(&g.det()?).expect("unit determinant");
        let mut g1 = g.clone();
        for i in 0..n {
            g1.set(i, 0, b.mul(g.get(i, 0), &d_inv));
        }
        if elementary_decompose(&g1)?.is_some_and(|w| w.verify(&g1)) {
            sk1_decomposed += 1;
        }
    }

    Ok(HellerReport {
        surjection: surj.clone(),
        group_order: group.order(),
        invariant_factors: group.invariant_factors(),
        k1_image_trivial,
        kernel_is_image,
        delta_surjective,
        delta_multiplicative,
        iota_trivial,
        sk1_decomposed,
        sk1_trials,
    })
}
