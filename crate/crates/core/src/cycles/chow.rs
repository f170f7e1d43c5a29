//! Brute-force Chow group with modulus in degree zero, cut by graph
//! relations of bounded degree, and the cycle class map out of it.

use super::{cyc_point, fiber_cycles, modulus_check, ModulusPair, ZeroCycle};
use crate::error::{Error, Result};
use crate::relk0::K0Class;
use crate::rings::linalg::smith_normal_form;
use crate::rings::{FpPoly, Matrix, RingTower};
use num_bigint::BigInt;
use num_traits::{ToPrimitive, Zero};
use rayon::prelude::*;
use serde::Serialize;
use std::collections::BTreeSet;

/// Default cap on enumerated `(g, h)` pairs.
pub const DEFAULT_MAX_CANDIDATES: u128 = 1 << 20;

/// Number of `(g, h)` pairs enumerated at a bound: `g` nonzero and `h`
/// monic, both of degree at most `bound`.
pub fn candidate_count(p: u64, bound: usize) -> u128 {
    let all = (p as u128).saturating_pow(bound as u32 + 1);
    let monic = (all - 1) / (p as u128 - 1);
    (all - 1).saturating_mul(monic)
}

/// `Z^generators / relations` in invariant-factor form.
#[derive(Clone, Debug, Serialize)]
pub struct ChowPresentation {
    pub pair: ModulusPair,
    pub bound: usize,
    #[serde(serialize_with = "ser_polys")]
    pub generators: Vec<FpPoly>,
    /// Distinct nonzero rows `V₀ - V₁` over the generators.
    pub relations: Vec<Vec<i64>>,
    /// Admissible graph relations enumerated, before deduplication.
    pub admissible_relations: usize,
    /// Nontrivial invariant factors; `0` stands for a copy of `Z`.
    pub invariant_factors: Vec<u64>,
    /// Coordinates of a generator in the quotient: `generators × components`.
    #[serde(skip)]
    projection: Matrix,
    /// A cycle mapping to each quotient component's generator.
    #[serde(skip)]
    component_lifts: Vec<ZeroCycle>,
}

fn ser_polys<S: serde::Serializer>(v: &[FpPoly], s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_seq(v.iter().map(|g| g.coeffs().to_vec()))
}

impl ChowPresentation {
    /// `None` when the quotient has a free part.
    pub fn order(&self) -> Option<u64> {
        self.invariant_factors.iter().try_fold(1u64, |acc, &d| if d == 0 { None } else { Some(acc * d) })
    }

    /// Image of a cycle supported on the generators, component by component.
    pub fn project(&self, c: &ZeroCycle) -> Result<Vec<i64>> {
        let mut x = vec![BigInt::zero(); self.generators.len()];
        for (g, m) in c.terms() {
            let i = self
                .generators
                .binary_search(g)
                .map_err(|_| Error::usage(format!("{} is not a generator at bound {}", g.display("t"), self.bound)))?;
            x[i] += m;
        }
        Ok(self
            .invariant_factors
            .iter()
            .enumerate()
            .map(|(k, &d)| {
                let y: BigInt = x.iter().enumerate().map(|(i, xi)| xi * self.projection.get(i, k).as_int()).sum();
                let y = if d == 0 { y } else { ((y % d) + d) % d };
                y.to_i64().expect("small coordinates")
            })
            .collect())
    }

    pub fn component_lifts(&self) -> &[ZeroCycle] {
        &self.component_lifts
    }
}

struct Candidate {
    g: FpPoly,
    h: FpPoly,
    v0: ZeroCycle,
    v1: ZeroCycle,
}

struct Enumeration {
    generators: Vec<FpPoly>,
    admissible: Vec<Candidate>,
    /// Pairs failing the modulus condition whose fibers still avoid `D`.
    inadmissible: Vec<Candidate>,
}

fn enumerate(pair: &ModulusPair, bound: usize, cap: u128) -> Result<Enumeration> {
    let p = pair.field();
    let count = candidate_count(p, bound);
    if count > cap {
        return Err(Error::guard(format!("{count} candidate pairs at bound {bound} exceed the cap of {cap}")));
    }
    let mut generators: Vec<FpPoly> = (1..=bound)
        .flat_map(|d| FpPoly::monic_of_degree(d, p))
        .filter(|g| g.is_irreducible(p) && pair.coprime(g))
        .collect();
    generators.sort();
    let numerators: Vec<FpPoly> = FpPoly::all_below_degree(bound + 1, p).filter(|g| !g.is_zero()).collect();
    let denominators: Vec<FpPoly> = (0..=bound).flat_map(|d| FpPoly::monic_of_degree(d, p)).collect();
    let results: Vec<(bool, Candidate)> = denominators
        .par_iter()
        .flat_map_iter(|h| {
            numerators.iter().filter_map(move |g| {
                // each rational function once, in lowest terms with monic denominator
                if !g.gcd(h, p).is_one() || (g.is_constant() && h.is_constant()) {
                    return None;
                }
                let (v0, v1) = fiber_cycles(g, h, pair).ok()?;
                Some((modulus_check(g, h, pair), Candidate { g: g.clone(), h: h.clone(), v0, v1 }))
            })
        })
        .collect();
    let (admissible, inadmissible): (Vec<_>, Vec<_>) = results.into_iter().partition(|(ok, _)| *ok);
    Ok(Enumeration {
        generators,
        admissible: admissible.into_iter().map(|(_, c)| c).collect(),
        inadmissible: inadmissible.into_iter().map(|(_, c)| c).collect(),
    })
}

fn coordinates(generators: &[FpPoly], c: &ZeroCycle) -> Vec<i64> {
    let mut row = vec![0; generators.len()];
    for (g, m) in c.terms() {
        let i = generators.binary_search(g).expect("fibers of bounded degree lie on the generators");
        row[i] += m;
    }
    row
}

fn present(pair: &ModulusPair, bound: usize, e: &Enumeration) -> Result<ChowPresentation> {
    let gens = &e.generators;
    let rows: BTreeSet<Vec<i64>> = e
        .admissible
        .iter()
        .map(|c| coordinates(gens, &c.v0.sub(&c.v1)))
        .filter(|r| r.iter().any(|&x| x != 0))
        .collect();
    let relations: Vec<Vec<i64>> = rows.into_iter().collect();
    let z = RingTower::integers();
    let n = gens.len();
    let r_mat = Matrix::from_fn(&z, relations.len(), n, |i, j| z.from_i64(relations[i][j]));
    // U R V = D; x ↦ x V carries the relation lattice onto the rows of D
    let (_, d, v) = smith_normal_form(&r_mat)?;
    let v_inv = v.inverse().ok_or_else(|| Error::internal("Smith transform is not unimodular"))?;
    let mut components = Vec::new();
    let mut invariant_factors = Vec::new();
    for k in 0..n {
        let dk = if k < d.rows() { d.get(k, k).as_int().clone() } else { BigInt::zero() };
        let dk = dk.magnitude().to_u64().ok_or_else(|| Error::internal("invariant factor overflow"))?;
        if dk != 1 {
            components.push(k);
            invariant_factors.push(dk);
        }
    }
    let projection = Matrix::from_fn(&z, n, components.len(), |i, k| v.get(i, components[k]).clone());
    let component_lifts = components
        .iter()
        .map(|&k| {
            let terms = (0..n).map(|j| (gens[j].clone(), v_inv.get(k, j).as_int().to_i64().expect("small lift")));
            ZeroCycle::from_terms(pair, terms)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ChowPresentation {
        pair: pair.clone(),
        bound,
        generators: gens.clone(),
        relations,
        admissible_relations: e.admissible.len(),
        invariant_factors,
        projection,
        component_lifts,
    })
}

pub fn chow_presentation(pair: &ModulusPair, bound: usize) -> Result<ChowPresentation> {
    chow_presentation_capped(pair, bound, DEFAULT_MAX_CANDIDATES)
}

pub fn chow_presentation_capped(pair: &ModulusPair, bound: usize, cap: u128) -> Result<ChowPresentation> {
    present(pair, bound, &enumerate(pair, bound, cap)?)
}

/// A graph curve failing the modulus condition whose fibers have
/// different classes.
#[derive(Clone, Debug, Serialize)]
pub struct ModulusProbe {
    pub numerator: Vec<u64>,
    pub denominator: Vec<u64>,
    pub fiber0: String,
    pub fiber1: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct CycleMapReport {
    pub pair: ModulusPair,
    pub bound: usize,
    pub generators: usize,
    pub admissible_relations: usize,
    /// Admissible relations whose fibers have different classes.
    pub violations: Vec<ModulusProbe>,
    pub chow_invariant_factors: Vec<u64>,
    pub chow_order: Option<u64>,
    pub unit_group_order: usize,
    /// Each quotient component's generator is killed by its invariant factor.
    pub well_defined: bool,
    pub surjective: bool,
    pub isomorphism: bool,
    pub inadmissible_checked: usize,
    pub probe: Option<ModulusProbe>,
}

impl CycleMapReport {
    /// The probe is only demanded when the unit class group is nontrivial;
    /// over a trivial group no pair can separate fibers.
    pub fn pass(&self) -> bool {
        self.violations.is_empty()
            && self.well_defined
            && self.surjective
            && (self.probe.is_some() || self.unit_group_order == 1)
    }
}

fn probe(c: &Candidate) -> ModulusProbe {
    ModulusProbe {
        numerator: c.g.coeffs().to_vec(),
        denominator: c.h.coeffs().to_vec(),
        fiber0: c.v0.to_string(),
        fiber1: c.v1.to_string(),
    }
}

pub fn cycle_map_check(pair: &ModulusPair, bound: usize) -> Result<CycleMapReport> {
    cycle_map_check_capped(pair, bound, DEFAULT_MAX_CANDIDATES)
}

pub fn cycle_map_check_capped(pair: &ModulusPair, bound: usize, cap: u128) -> Result<CycleMapReport> {
    let e = enumerate(pair, bound, cap)?;
    let chow = present(pair, bound, &e)?;
    let group = pair.group();
    let gen_classes: Vec<K0Class> =
        e.generators.iter().map(|g| cyc_point(&ZeroCycle::point(pair, g)?, pair)).collect::<Result<_>>()?;
    let class_of = |c: &ZeroCycle| -> K0Class {
        let row = coordinates(&e.generators, c);
        row.iter().zip(&gen_classes).fold(group.identity(), |acc, (&m, k)| group.mul(&acc, &group.pow(k, m)))
    };
    let violations: Vec<ModulusProbe> =
        e.admissible.iter().filter(|c| class_of(&c.v0) != class_of(&c.v1)).map(probe).collect();
    let lifts: Vec<K0Class> = chow.component_lifts.iter().map(class_of).collect();
    let well_defined =
        lifts.iter().zip(&chow.invariant_factors).all(|(k, &d)| d == 0 || group.is_identity(&group.pow(k, d as i64)));
    let surjective = group.subgroup_order(&lifts) == group.order();
    let chow_order = chow.order();
    let isomorphism = surjective && chow_order == Some(group.order() as u64);
    let found = e.inadmissible.iter().find(|c| class_of(&c.v0) != class_of(&c.v1)).map(probe);
    Ok(CycleMapReport {
        pair: pair.clone(),
        bound,
        generators: e.generators.len(),
        admissible_relations: e.admissible.len(),
        violations,
        chow_invariant_factors: chow.invariant_factors.clone(),
        chow_order,
        unit_group_order: group.order(),
        well_defined,
        surjective,
        isomorphism,
        inadmissible_checked: e.inadmissible.len(),
        probe: found,
    })
}
