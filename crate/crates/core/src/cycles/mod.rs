//! Zero-cycles with modulus on the affine line over `F_p` and their classes
//! in relative K₀ of `F_p[t] ↠ F_p[t]/(f)`.
//!
//! The line is `X = Spec F_p[t]` and the modulus is `D = V(f)`. A point is a
//! monic irreducible `g` coprime to `f`; its structure sheaf is resolved by
//! `[A →g A]` and pushed through χ to a unit class.

mod chow;
mod transfer;

pub use chow::{
    candidate_count, chow_presentation, chow_presentation_capped, cycle_map_check, cycle_map_check_capped,
    ChowPresentation, CycleMapReport, ModulusProbe, DEFAULT_MAX_CANDIDATES,
};
pub use transfer::{random_transfer_instance, transfer_finite, AlgMatrix, FiniteFreeAlgebra, TransferReport};

use crate::complexes::{BoundedComplex, ChainMap};
use crate::error::{Error, Result};
use crate::relk0::{chi, ClassInvariant, K0Class, RelTriple};
use crate::rings::linalg::{smith_normal_form, solve_matrix};
use crate::rings::poly::is_prime;
use crate::rings::{FpPoly, Matrix, RingTower, Surjection, UnitClassGroup};
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

/// Largest residue ring `F_p[t]/(f)` whose units are enumerated.
const MAX_RESIDUE_RING: u128 = 1 << 20;

/// The affine line over `F_p` with the effective divisor `V(f)`.
#[derive(Clone, Serialize, Deserialize)]
#[serde(try_from = "ModulusPairWire", into = "ModulusPairWire")]
pub struct ModulusPair {
    p: u64,
    f: FpPoly,
    surj: Surjection,
    group: Arc<UnitClassGroup>,
}

#[derive(Serialize, Deserialize)]
struct ModulusPairWire {
    field: u64,
    modulus: Vec<u64>,
}

impl TryFrom<ModulusPairWire> for ModulusPair {
    type Error = Error;
    fn try_from(w: ModulusPairWire) -> Result<Self> {
        ModulusPair::new(w.field, FpPoly::new(w.modulus, w.field.max(1)))
    }
}

impl From<ModulusPair> for ModulusPairWire {
    fn from(m: ModulusPair) -> Self {
        ModulusPairWire { field: m.p, modulus: m.f.coeffs().to_vec() }
    }
}

impl PartialEq for ModulusPair {
    fn eq(&self, other: &Self) -> bool {
        self.p == other.p && self.f == other.f
    }
}

impl Eq for ModulusPair {}

impl fmt::Debug for ModulusPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ModulusPair(F{}, {})", self.p, self.f.display("t"))
    }
}

impl fmt::Display for ModulusPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.surj)
    }
}

impl ModulusPair {
    pub fn new(p: u64, f: FpPoly) -> Result<Self> {
        if !is_prime(p) {
            return Err(Error::usage(format!("field size {p} is not a prime")));
        }
        if f.is_constant() || !f.is_monic() {
            return Err(Error::usage(format!("modulus {} must be monic of degree at least 1", f.display("t"))));
        }
        let size = (p as u128).checked_pow(f.degree().unwrap() as u32).unwrap_or(u128::MAX);
        if size > MAX_RESIDUE_RING {
            return Err(Error::guard(format!("residue ring of size {size} exceeds {MAX_RESIDUE_RING}")));
        }
        let surj = Surjection::new(&RingTower::poly_ring(p)?, &RingTower::poly_quot(p, f.clone())?)?;
        let group = Arc::new(UnitClassGroup::new(&surj)?);
        Ok(ModulusPair { p, f, surj, group })
    }

    /// `ModulusPair::parse(2, "t^2")`.
    pub fn parse(p: u64, modulus: &str) -> Result<Self> {
        if !is_prime(p) {
            return Err(Error::usage(format!("field size {p} is not a prime")));
        }
        Self::new(p, crate::rings::parse_poly(modulus, "t", p)?)
    }

    pub fn field(&self) -> u64 {
        self.p
    }

    pub fn modulus(&self) -> &FpPoly {
        &self.f
    }

    pub fn surjection(&self) -> &Surjection {
        &self.surj
    }

    pub fn group(&self) -> &UnitClassGroup {
        &self.group
    }

    /// The polynomial ring `F_p[t]`.
    pub fn ring(&self) -> &RingTower {
        self.surj.source()
    }

    pub fn coprime(&self, g: &FpPoly) -> bool {
        !g.is_zero() && g.gcd(&self.f, self.p).is_one()
    }

    /// Class of the unit `g mod f`.
    pub fn project(&self, g: &FpPoly) -> Result<K0Class> {
        let b = self.surj.reduce(&self.ring().from_poly(g.clone()));
        self.group.project(&b)
    }
}

/// A finitely supported integer combination of closed points avoiding `D`.
#[derive(Clone, Debug, PartialEq, Eq, Default, PartialOrd, Ord, Hash)]
pub struct ZeroCycle {
    terms: BTreeMap<FpPoly, i64>,
}

/// One term of a zero-cycle on the wire: a monic irreducible polynomial
/// (coefficients lowest degree first) and its multiplicity.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CycleTerm {
    pub point: Vec<u64>,
    pub multiplicity: i64,
}

impl ZeroCycle {
    pub fn zero() -> Self {
        Self::default()
    }

    /// Validates each point: monic, irreducible and coprime to the modulus.
    pub fn from_terms(pair: &ModulusPair, terms: impl IntoIterator<Item = (FpPoly, i64)>) -> Result<Self> {
        let mut c = ZeroCycle::zero();
        for (g, m) in terms {
            if !g.is_monic() || !g.is_irreducible(pair.p) {
                return Err(Error::usage(format!("{} is not a monic irreducible", g.display("t"))));
            }
            if !pair.coprime(&g) {
                return Err(Error::usage(format!("point {} meets the modulus", g.display("t"))));
            }
            c.bump(g, m);
        }
        Ok(c)
    }

    pub fn point(pair: &ModulusPair, g: &FpPoly) -> Result<Self> {
        Self::from_terms(pair, [(g.clone(), 1)])
    }

    /// `div(g)` for a nonzero `g` coprime to the modulus.
    pub fn divisor(pair: &ModulusPair, g: &FpPoly) -> Result<Self> {
        if !pair.coprime(g) {
            return Err(Error::usage(format!("div({}) meets the modulus", g.display("t"))));
        }
        let (_, factors) = g.factor(pair.p);
        Ok(ZeroCycle { terms: factors.into_iter().map(|(q, e)| (q, e as i64)).collect() })
    }

    pub fn from_wire(pair: &ModulusPair, terms: &[CycleTerm]) -> Result<Self> {
        Self::from_terms(pair, terms.iter().map(|t| (FpPoly::new(t.point.clone(), pair.p), t.multiplicity)))
    }

    pub fn to_wire(&self) -> Vec<CycleTerm> {
        self.terms.iter().map(|(g, &m)| CycleTerm { point: g.coeffs().to_vec(), multiplicity: m }).collect()
    }

    fn bump(&mut self, g: FpPoly, m: i64) {
        let e = self.terms.entry(g).or_insert(0);
        *e += m;
        if *e == 0 {
            self.terms.retain(|_, m| *m != 0);
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = (&FpPoly, i64)> {
        self.terms.iter().map(|(g, &m)| (g, m))
    }

    pub fn multiplicity(&self, g: &FpPoly) -> i64 {
        self.terms.get(g).copied().unwrap_or(0)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// `Σ m_g deg g`.
    pub fn degree(&self) -> i64 {
        self.terms.iter().map(|(g, m)| m * g.degree().unwrap() as i64).sum()
    }

    pub fn add(&self, other: &ZeroCycle) -> ZeroCycle {
        let mut out = self.clone();
        for (g, &m) in &other.terms {
            out.bump(g.clone(), m);
        }
        out
    }

    pub fn scale(&self, k: i64) -> ZeroCycle {
        if k == 0 {
            return ZeroCycle::zero();
        }
        ZeroCycle { terms: self.terms.iter().map(|(g, m)| (g.clone(), m * k)).collect() }
    }

    pub fn neg(&self) -> ZeroCycle {
        self.scale(-1)
    }

    pub fn sub(&self, other: &ZeroCycle) -> ZeroCycle {
        self.add(&other.neg())
    }
}

impl fmt::Display for ZeroCycle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (k, (g, &m)) in self.terms.iter().enumerate() {
            let sep = match (k, m < 0) {
                (0, false) => "",
                (0, true) => "-",
                (_, false) => " + ",
                (_, true) => " - ",
            };
            let coef = if m.abs() == 1 { String::new() } else { m.abs().to_string() };
            write!(f, "{sep}{coef}[{}]", g.display("t"))?;
        }
        Ok(())
    }
}

/// `g / h` cancelled to lowest terms, with `h` made monic when nonzero.
fn lowest_terms(g: &FpPoly, h: &FpPoly, p: u64) -> (FpPoly, FpPoly) {
    let e = g.gcd(h, p);
    if e.is_zero() {
        return (g.clone(), h.clone());
    }
    let (g, h) = (g.div_exact(&e, p), h.div_exact(&e, p));
    if h.is_zero() {
        return (g, h);
    }
    let c = crate::rings::poly::inv_mod(h.lead(), p).unwrap();
    (g.scale(c, p), h.scale(c, p))
}

/// The modulus condition for the graph of `g/h`: the pull-back of `D` is
/// bounded by the pole divisor, i.e. `ord_q(f) ≤ max(ord_q(h) - ord_q(g), 0)`
/// at every point once `g/h` is in lowest terms. With `g` and `h` coprime
/// this says `f` divides the denominator.
pub fn modulus_check(g: &FpPoly, h: &FpPoly, pair: &ModulusPair) -> bool {
    if g.is_zero() && h.is_zero() {
        return false;
    }
    let (_, h) = lowest_terms(g, h, pair.p);
    pair.f.divides(&h, pair.p)
}

/// The rational function `g/h` on the line, whose graph is a curve in
/// `X × P¹` giving the relation `[V₀] = [V₁]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GraphRelation {
    g: FpPoly,
    h: FpPoly,
}

impl GraphRelation {
    /// Checks dominance, the modulus condition and that both fibers avoid `D`.
    pub fn new(pair: &ModulusPair, g: &FpPoly, h: &FpPoly) -> Result<Self> {
        let (g0, h0) = lowest_terms(g, h, pair.p);
        if g0.is_zero() || h0.is_zero() || (g0.is_constant() && h0.is_constant()) {
            return Err(Error::usage(format!("{} / {} is constant", g.display("t"), h.display("t"))));
        }
        if !modulus_check(g, h, pair) {
            return Err(Error::usage(format!(
                "{} / {} fails the modulus condition for {}",
                g.display("t"),
                h.display("t"),
                pair.f.display("t")
            )));
        }
        fiber_cycles(g, h, pair)?;
        Ok(GraphRelation { g: g.clone(), h: h.clone() })
    }

    pub fn numerator(&self) -> &FpPoly {
        &self.g
    }

    pub fn denominator(&self) -> &FpPoly {
        &self.h
    }
}

/// Fibers of `g/h` over `0` and `1`: `div(g)` and `div(g - h)` after
/// cancelling common factors.
pub fn fiber_cycles(g: &FpPoly, h: &FpPoly, pair: &ModulusPair) -> Result<(ZeroCycle, ZeroCycle)> {
    let (g, h) = lowest_terms(g, h, pair.p);
    let gh = g.sub(&h, pair.p);
    if g.is_zero() || gh.is_zero() {
        return Err(Error::usage("a fiber of a constant map is the whole line"));
    }
    let v0 = ZeroCycle::divisor(pair, &g).map_err(|_| Error::usage("the fiber over 0 meets the modulus"))?;
    let v1 = ZeroCycle::divisor(pair, &gh).map_err(|_| Error::usage("the fiber over 1 meets the modulus"))?;
    Ok((v0, v1))
}

pub fn graph_relation_boundary(rel: &GraphRelation, pair: &ModulusPair) -> Result<(ZeroCycle, ZeroCycle)> {
    fiber_cycles(&rel.g, &rel.h, pair)
}

/// `(F, 0, 0)` for the module presented by `m`, through its free
/// resolution `0 → ker m → A^cols →m A^rows`.
pub fn resolution_triple(pair: &ModulusPair, m: &Matrix) -> Result<RelTriple> {
    let a = pair.ring();
    let (rows, cols) = m.shape();
    let (_, d, v) = smith_normal_form(m)?;
    let rank = (0..rows.min(cols)).filter(|&i| !a.is_zero(d.get(i, i))).count();
    if rank != rows {
        return Err(Error::usage("presented module is not torsion"));
    }
    let kernel = v.block(0, rank, cols, cols - rank);
    let p = BoundedComplex::new(a, 0, vec![rows, cols, cols - rank], vec![m.clone(), kernel])?;
    let q = BoundedComplex::zero(a);
    let s = pair.surjection();
    RelTriple::from_map(s, &p, &q, &ChainMap::zero(&p.reduce(s), &q.reduce(s)))
}

/// The triple `(A/g, 0, 0)` of a closed point.
pub fn point_triple(pair: &ModulusPair, g: &FpPoly) -> Result<RelTriple> {
    let a = pair.ring();
    resolution_triple(pair, &Matrix::from_fn(a, 1, 1, |_, _| a.from_poly(g.clone())))
}

/// `project(Π g^m)`: the unit the cycle cuts out, read off directly.
pub fn cyc_point_direct(c: &ZeroCycle, pair: &ModulusPair) -> Result<K0Class> {
    let group = pair.group();
    let mut acc = group.identity();
    for (g, m) in c.terms() {
        acc = group.mul(&acc, &group.pow(&pair.project(g)?, m));
    }
    Ok(acc)
}

/// Cycle class through resolutions and χ. Each point contributes the
/// inverse of its direct projection (the resolution sits in degrees 1, 0),
/// and this is asserted against [`cyc_point_direct`].
pub fn cyc_point(c: &ZeroCycle, pair: &ModulusPair) -> Result<K0Class> {
    let group = pair.group();
    let mut acc = group.identity();
    for (g, m) in c.terms() {
        let k = chi(&point_triple(pair, g)?)?.class_in(group)?;
        acc = group.mul(&acc, &group.pow(&k, m));
    }
    let direct = cyc_point_direct(c, pair)?;
    if acc != group.inv(&direct) {
        return Err(Error::internal(format!("χ of the resolutions of {c} disagrees with its direct projection")));
    }
    Ok(acc)
}

/// A finite `F_p[t]`-module `coker(A^cols →m A^rows)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FiniteModule {
    presentation: Matrix,
}

impl FiniteModule {
    pub fn new(presentation: &Matrix) -> Result<Self> {
        if !matches!(presentation.ring().kind(), crate::rings::RingKind::PolyRing { .. }) {
            return Err(Error::usage(format!("presentation over {}, expected F_p[t]", presentation.ring())));
        }
        let m = FiniteModule { presentation: presentation.clone() };
        if m.invariant_factors()?.iter().any(|d| d.is_zero()) || presentation.cols() < presentation.rows() {
            return Err(Error::usage("presented module is not finite"));
        }
        Ok(m)
    }

    pub fn presentation(&self) -> &Matrix {
        &self.presentation
    }

    /// Monic invariant factors, including units, one per row.
    pub fn invariant_factors(&self) -> Result<Vec<FpPoly>> {
        let (_, d, _) = smith_normal_form(&self.presentation)?;
        let p = self.presentation.ring().char_p().unwrap();
        Ok((0..self.presentation.rows())
            .map(|i| if i < d.cols() { d.get(i, i).as_poly().monic(p) } else { FpPoly::zero() })
            .collect())
    }

    /// Lengths of the stalks: `Σ_i ord_q(d_i)` at each point `q`.
    pub fn multiplicities(&self, pair: &ModulusPair) -> Result<ZeroCycle> {
        let mut c = ZeroCycle::zero();
        for d in self.invariant_factors()? {
            if !pair.coprime(&d) {
                return Err(Error::usage(format!("support of the module meets {}", pair.f.display("t"))));
            }
            c = c.add(&ZeroCycle::divisor(pair, &d)?);
        }
        Ok(c)
    }
}

#[derive(Clone, Debug)]
pub struct SheafClass {
    /// χ of the resolution.
    pub class: K0Class,
    /// `project(Π d_i)` from the invariant factors.
    pub direct: K0Class,
    pub multiplicities: ZeroCycle,
    /// [`cyc_point`] of the multiplicity cycle.
    pub cycle_class: K0Class,
}

impl SheafClass {
    pub fn agrees(&self) -> bool {
        self.class == self.cycle_class
    }
}

pub fn sheaf_class(m: &FiniteModule, pair: &ModulusPair) -> Result<SheafClass> {
    if m.presentation.ring() != pair.ring() {
        return Err(Error::usage(format!("module over {}, pair over {}", m.presentation.ring(), pair.ring())));
    }
    let multiplicities = m.multiplicities(pair)?;
    let group = pair.group();
    let class = chi(&resolution_triple(pair, &m.presentation)?)?.class_in(group)?;
    let mut direct = group.identity();
    for d in m.invariant_factors()? {
        direct = group.mul(&direct, &pair.project(&d)?);
    }
    if class != group.inv(&direct) {
        return Err(Error::internal("χ of the resolution disagrees with the invariant factors"));
    }
    let cycle_class = cyc_point(&multiplicities, pair)?;
    Ok(SheafClass { class, direct, multiplicities, cycle_class })
}

/// A random finite module `U diag(d_i) V` (padded with a zero column now
/// and then) whose support avoids the modulus, returned with the
/// multiplicity cycle it was built from.
pub fn random_finite_module<R: Rng + ?Sized>(pair: &ModulusPair, rng: &mut R) -> (FiniteModule, ZeroCycle) {
    let a = pair.ring();
    let p = pair.p;
    let rows = rng.gen_range(1..=3usize);
    let mut cycle = ZeroCycle::zero();
    let mut diag = Vec::with_capacity(rows);
    for _ in 0..rows {
        let mut d = FpPoly::one();
        for _ in 0..rng.gen_range(0..=2) {
            let g = loop {
                let deg = rng.gen_range(1..=2usize);
                let mut v: Vec<u64> = (0..deg).map(|_| rng.gen_range(0..p)).collect();
                v.push(1);
                let g = FpPoly::new(v, p);
                if g.is_irreducible(p) && pair.coprime(&g) {
                    break g;
                }
            };
            let e = rng.gen_range(1..=2u64);
            cycle.bump(g.clone(), e as i64);
            d = d.mul(&g.pow(e, p), p);
        }
        diag.push(a.from_poly(d));
    }
    let cols = rows + usize::from(rng.gen_bool(0.3));
    let mut core = Matrix::zero(a, rows, cols);
    for (i, d) in diag.into_iter().enumerate() {
        core.set(i, i, d);
    }
    let (u, _) = crate::modcat::random_gl(a, rows, rng);
    let (v, _) = crate::modcat::random_gl(a, cols, rng);
    let m = FiniteModule::new(&u.mul(&core).mul(&v)).expect("torsion by construction");
    (m, cycle)
}

/// Where a class is trivialized: the lifted `Φ̃` of `χ(T)` is invertible
/// away from the zeros of its determinant, so the class is supported on
/// finitely many closed points.
#[derive(Clone, Debug)]
pub struct TrivializingLocus {
    pub points: Vec<FpPoly>,
    pub lift: Matrix,
    pub lifted_det: FpPoly,
    /// `div(det Φ̃)`.
    pub cycle: ZeroCycle,
    pub class: K0Class,
}

impl TrivializingLocus {
    /// Recheck the certificate: `det Φ̃` is a constant times a product of
    /// the returned points, `Φ̃` has an inverse over `A[1/det Φ̃]`, and the
    /// class is cut out by `det Φ̃`.
    pub fn verify(&self, pair: &ModulusPair) -> Result<bool> {
        let a = pair.ring();
        let p = pair.p;
        let mut rest = self.lifted_det.monic(p);
        for q in &self.points {
            while q.divides(&rest, p) {
                rest = rest.div_exact(q, p);
            }
        }
        let n = self.lift.rows();
        let det = a.from_poly(self.lifted_det.clone());
        let adjugate = solve_matrix(&self.lift, &Matrix::scalar(a, n, &det))?;
        let cut_out = cyc_point_direct(&self.cycle, pair)? == self.class;
        Ok(rest.is_one() && adjugate.is_some() && pair.coprime(&self.lifted_det) && cut_out)
    }
}

fn locus_from_lift(pair: &ModulusPair, lift: Matrix, class: K0Class) -> Result<TrivializingLocus> {
    let lifted_det = lift.det()?.as_poly().clone();
    let cycle = ZeroCycle::divisor(pair, &lifted_det)?;
    let points = cycle.terms().map(|(g, _)| g.clone()).collect();
    Ok(TrivializingLocus { points, lift, lifted_det, cycle, class })
}

/// Locus of the entrywise least-degree lift of `Φ` in `χ(T)`.
pub fn trivializing_locus(t: &RelTriple, pair: &ModulusPair) -> Result<TrivializingLocus> {
    check_surjection(t, pair)?;
    let d = chi(t)?;
    let class = d.class_in(pair.group())?;
    locus_from_lift(pair, pair.surjection().lift_matrix(d.phi()), class)
}

/// Same certificate with the lift moved by a random multiple of `f`.
pub fn trivializing_locus_perturbed<R: Rng + ?Sized>(
    t: &RelTriple,
    pair: &ModulusPair,
    rng: &mut R,
) -> Result<TrivializingLocus> {
    check_surjection(t, pair)?;
    let d = chi(t)?;
    let class = d.class_in(pair.group())?;
    let a = pair.ring();
    let n = d.phi().rows();
    let f = a.from_poly(pair.f.clone());
    let lift = pair.surjection().lift_matrix(d.phi()).add(&Matrix::random(a, n, n, rng).scale(&f));
    locus_from_lift(pair, lift, class)
}

fn check_surjection(t: &RelTriple, pair: &ModulusPair) -> Result<()> {
    if t.surjection() != pair.surjection() {
        return Err(Error::usage(format!("triple over {}, pair is {}", t.surjection(), pair)));
    }
    Ok(())
}

#[cfg(test)]
mod tests;
