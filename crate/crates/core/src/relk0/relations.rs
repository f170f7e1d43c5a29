//! Executable relations: each payload kind states an equality of classes
//! and `verify_relation` computes both sides.

use super::{chi, embed, generate::random_payload, ClassInvariant, DegreewiseTriple, K0Class, RelTriple};
use crate::complexes::{free_homology_bases, ChainMap, Homotopy, HtpyEquivWitness};
use crate::error::{Error, Result};
use crate::modcat::ElementaryWitness;
use crate::rings::{linalg, Matrix, Surjection, UnitClassGroup};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RelationKind {
    RelAExact,
    RelBCompose,
    Looparrow,
    GammaElementary,
    ChiShift,
    ChiExact,
    ChiHomology,
    ChiComposite,
    QuasiIsoInvariance,
    HomotopyInvariance,
    Roundtrip,
}

impl RelationKind {
    pub const ALL: [RelationKind; 11] = [
        RelationKind::RelAExact,
        RelationKind::RelBCompose,
        RelationKind::Looparrow,
        RelationKind::GammaElementary,
        RelationKind::ChiShift,
        RelationKind::ChiExact,
        RelationKind::ChiHomology,
        RelationKind::ChiComposite,
        RelationKind::QuasiIsoInvariance,
        RelationKind::HomotopyInvariance,
        RelationKind::Roundtrip,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            RelationKind::RelAExact => "rel_a_exact",
            RelationKind::RelBCompose => "rel_b_compose",
            RelationKind::Looparrow => "looparrow",
            RelationKind::GammaElementary => "gamma_elementary",
            RelationKind::ChiShift => "chi_shift",
            RelationKind::ChiExact => "chi_exact",
            RelationKind::ChiHomology => "chi_homology",
            RelationKind::ChiComposite => "chi_composite",
            RelationKind::QuasiIsoInvariance => "quasi_iso_invariance",
            RelationKind::HomotopyInvariance => "homotopy_invariance",
            RelationKind::Roundtrip => "roundtrip",
        }
    }

    /// The statement being checked, for reports.
    pub fn anchor(self) -> &'static str {
        match self {
            RelationKind::RelAExact => "[X] = [X'] + [X''] for an exact sequence X' >-> X ->> X''",
            RelationKind::RelBCompose => "[(P, βα, R)] = [(P, α, Q)] + [(Q, β, R)]",
            RelationKind::Looparrow => "X' ↬ X implies [X'] = [X]",
            RelationKind::GammaElementary => "[(P, α, Q)] = [(P, γα, Q)] for γ in E(F(Q))",
            RelationKind::ChiShift => "χ(P[n], α[n], Q[n]) = (-1)^n χ(P, α, Q)",
            RelationKind::ChiExact => "χ(P, α, Q) = χ(P', α', Q') + χ(P'', α'', Q'')",
            RelationKind::ChiHomology => "χ(P, α, Q) = Σ (-1)^i [(H_i P, H_i α, H_i Q)]",
            RelationKind::ChiComposite => "χ(P, βα, R) = χ(P, α, Q) + χ(Q, β, R)",
            RelationKind::QuasiIsoInvariance => "χ(P, α, Q) = χ(P', α', Q') along quasi-isomorphisms with α' f = g α",
            RelationKind::HomotopyInvariance => "χ(P, α, Q) = χ(P, β, Q) when α ≃ β",
            RelationKind::Roundtrip => "class(χ(embed D)) = class(D)",
        }
    }
}

impl fmt::Display for RelationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for RelationKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        RelationKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::usage(format!("unknown relation kind '{s}'")))
    }
}

/// Maps `M' → M → M''` (source side, over `A`) and `N' → N → N''`
/// (target side) of a degreewise exact sequence of triples.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitExactMaps {
    pub f_source: Matrix,
    pub g_source: Matrix,
    pub f_target: Matrix,
    pub g_target: Matrix,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RelationPayload {
    RelAExact {
        sub: DegreewiseTriple,
        mid: DegreewiseTriple,
        quot: DegreewiseTriple,
        maps: SplitExactMaps,
    },
    RelBCompose {
        first: DegreewiseTriple,
        second: DegreewiseTriple,
    },
    /// `sub ↬ triple` through `(P, γα, Q) ↠ (N, 1, N)` with `γ = [x, y]`.
    Looparrow {
        sub: DegreewiseTriple,
        triple: DegreewiseTriple,
        commutator: (Matrix, Matrix),
        maps: SplitExactMaps,
    },
    GammaElementary {
        triple: DegreewiseTriple,
        gamma: ElementaryWitness,
    },
    ChiShift {
        triple: RelTriple,
        shift: i64,
    },
    ChiExact {
        sub: RelTriple,
        mid: RelTriple,
        quot: RelTriple,
        f_p: ChainMap,
        g_p: ChainMap,
        f_q: ChainMap,
        g_q: ChainMap,
    },
    ChiHomology {
        triple: RelTriple,
    },
    ChiComposite {
        first: RelTriple,
        second: RelTriple,
    },
    QuasiIsoInvariance {
        triple: RelTriple,
        other: RelTriple,
        f: HtpyEquivWitness,
        g: HtpyEquivWitness,
    },
    HomotopyInvariance {
        triple: RelTriple,
        other: RelTriple,
        homotopy: Homotopy,
    },
    Roundtrip {
        triple: DegreewiseTriple,
    },
}

impl RelationPayload {
    pub fn kind(&self) -> RelationKind {
        match self {
            RelationPayload::RelAExact { .. } => RelationKind::RelAExact,
            RelationPayload::RelBCompose { .. } => RelationKind::RelBCompose,
            RelationPayload::Looparrow { .. } => RelationKind::Looparrow,
            RelationPayload::GammaElementary { .. } => RelationKind::GammaElementary,
            RelationPayload::ChiShift { .. } => RelationKind::ChiShift,
            RelationPayload::ChiExact { .. } => RelationKind::ChiExact,
            RelationPayload::ChiHomology { .. } => RelationKind::ChiHomology,
            RelationPayload::ChiComposite { .. } => RelationKind::ChiComposite,
            RelationPayload::QuasiIsoInvariance { .. } => RelationKind::QuasiIsoInvariance,
            RelationPayload::HomotopyInvariance { .. } => RelationKind::HomotopyInvariance,
            RelationPayload::Roundtrip { .. } => RelationKind::Roundtrip,
        }
    }

    /// The surjection every triple in the payload must share.
    pub fn surjection(&self) -> &Surjection {
        match self {
            RelationPayload::RelAExact { mid, .. } => mid.surjection(),
            RelationPayload::RelBCompose { first, .. } => first.surjection(),
            RelationPayload::Looparrow { triple, .. } => triple.surjection(),
            RelationPayload::GammaElementary { triple, .. } => triple.surjection(),
            RelationPayload::ChiShift { triple, .. } => triple.surjection(),
            RelationPayload::ChiExact { mid, .. } => mid.surjection(),
            RelationPayload::ChiHomology { triple } => triple.surjection(),
            RelationPayload::ChiComposite { first, .. } => first.surjection(),
            RelationPayload::QuasiIsoInvariance { triple, .. } => triple.surjection(),
            RelationPayload::HomotopyInvariance { triple, .. } => triple.surjection(),
            RelationPayload::Roundtrip { triple } => triple.surjection(),
        }
    }
}

/// Both sides of one relation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RelationCheck {
    pub kind: RelationKind,
    pub lhs: K0Class,
    pub rhs: K0Class,
}

impl RelationCheck {
    pub fn pass(&self) -> bool {
        self.lhs == self.rhs
    }
}

fn malformed(kind: RelationKind, what: impl fmt::Display) -> Error {
    Error::usage(format!("{kind} payload: {what}"))
}

/// `0 → A^a →f A^b →g A^c → 0` split exact: `g f = 0`, some `σ` has
/// `g σ = 1`, and `[f | σ]` is invertible.
fn split_exact(f: &Matrix, g: &Matrix) -> Result<bool> {
    if f.rows() != g.cols() || f.cols() + g.rows() != f.rows() || !g.mul(f).is_zero() {
        return Ok(false);
    }
    let Some(sigma) = linalg::solve_matrix(g, &Matrix::identity(g.ring(), g.rows()))? else {
        return Ok(false);
    };
    Ok(f.hstack(&sigma).inverse().is_some())
}

fn check_degreewise_sequence(
    kind: RelationKind,
    sub: &DegreewiseTriple,
    mid: &DegreewiseTriple,
    quot: &DegreewiseTriple,
    maps: &SplitExactMaps,
) -> Result<()> {
    let s = mid.surjection();
    if sub.surjection() != s || quot.surjection() != s {
        return Err(malformed(kind, "triples over different surjections"));
    }
    for m in [&maps.f_source, &maps.g_source, &maps.f_target, &maps.g_target] {
        if m.ring() != s.source() {
            return Err(malformed(kind, "sequence maps must be over the source ring"));
        }
    }
    if maps.f_source.shape() != (mid.phi().cols(), sub.phi().cols())
        || maps.g_source.shape() != (quot.phi().cols(), mid.phi().cols())
        || maps.f_target.shape() != (mid.phi().rows(), sub.phi().rows())
        || maps.g_target.shape() != (quot.phi().rows(), mid.phi().rows())
    {
        return Err(malformed(kind, "sequence maps have the wrong shapes"));
    }
    if !split_exact(&maps.f_source, &maps.g_source)? || !split_exact(&maps.f_target, &maps.g_target)? {
        return Err(malformed(kind, "sequence is not split exact"));
    }
    let r = |m: &Matrix| s.reduce_matrix(m);
    if mid.phi().mul(&r(&maps.f_source)) != r(&maps.f_target).mul(sub.phi())
        || quot.phi().mul(&r(&maps.g_source)) != r(&maps.g_target).mul(mid.phi())
    {
        return Err(malformed(kind, "maps do not commute with the isomorphisms"));
    }
    Ok(())
}

fn check_complex_sequence(
    kind: RelationKind,
    sub: &RelTriple,
    mid: &RelTriple,
    quot: &RelTriple,
    (f_p, g_p, f_q, g_q): (&ChainMap, &ChainMap, &ChainMap, &ChainMap),
) -> Result<()> {
    let s = mid.surjection();
    if sub.surjection() != s || quot.surjection() != s {
        return Err(malformed(kind, "triples over different surjections"));
    }
    let ends = [(f_p, sub.p(), mid.p()), (g_p, mid.p(), quot.p()), (f_q, sub.q(), mid.q()), (g_q, mid.q(), quot.q())];
    if ends.iter().any(|(m, x, y)| m.source() != *x || m.target() != *y) {
        return Err(malformed(kind, "sequence maps do not connect the complexes"));
    }
    for (f, g, c) in [(f_p, g_p, mid.p()), (f_q, g_q, mid.q())] {
        for n in c.degrees() {
            if !split_exact(&f.at(n), &g.at(n))? {
                return Err(malformed(kind, format!("sequence is not split exact in degree {n}")));
            }
        }
    }
    if f_p.reduce(s).then(mid.alpha()) != sub.alpha().then(&f_q.reduce(s))
        || g_p.reduce(s).then(quot.alpha()) != mid.alpha().then(&g_q.reduce(s))
    {
        return Err(malformed(kind, "maps do not commute with the comparison maps"));
    }
    Ok(())
}

/// `Σ (-1)^i [(H_i P, H_i α, H_i Q)]`, or a usage error when some homology
/// module is not free.
fn homology_class(group: &UnitClassGroup, t: &RelTriple) -> Result<K0Class> {
    let s = t.surjection();
    let (Some(hp), Some(hq)) = (free_homology_bases(t.p())?, free_homology_bases(t.q())?) else {
        return Err(malformed(RelationKind::ChiHomology, "homology is not free"));
    };
    let mut acc = group.identity();
    let degrees: std::collections::BTreeSet<i64> = hp.iter().chain(&hq).map(|h| h.degree).collect();
    for n in degrees {
        let b = s.target();
        let basis = hp
            .iter()
            .find(|h| h.degree == n)
            .map_or_else(|| Matrix::zero(b, t.p().rank(n), 0), |h| s.reduce_matrix(&h.basis));
        let proj = hq
            .iter()
            .find(|h| h.degree == n)
            .map_or_else(|| Matrix::zero(b, 0, t.q().rank(n)), |h| s.reduce_matrix(&h.proj));
        let h_alpha = proj.mul(&t.alpha().at(n)).mul(&basis);
        let d = DegreewiseTriple::new(s, &h_alpha)
            .map_err(|_| malformed(RelationKind::ChiHomology, format!("H_{n} α is not invertible")))?;
        let c = d.class_in(group)?;
        acc = group.mul(&acc, &group.pow(&c, if n.rem_euclid(2) == 0 { 1 } else { -1 }));
    }
    Ok(acc)
}

pub fn verify_relation(group: &UnitClassGroup, payload: &RelationPayload) -> Result<RelationCheck> {
    let kind = payload.kind();
    if payload.surjection() != group.surjection() {
        return Err(malformed(kind, "payload surjection differs from the class group's"));
    }
    let class = |x: &dyn ClassDyn| x.class_dyn(group);
    let (lhs, rhs) = match payload {
        RelationPayload::RelAExact { sub, mid, quot, maps } => {
            check_degreewise_sequence(kind, sub, mid, quot, maps)?;
            (class(mid)?, group.mul(&class(sub)?, &class(quot)?))
        }
        RelationPayload::RelBCompose { first, second } => {
            let composite = first.compose(second)?;
            (class(&composite)?, group.mul(&class(first)?, &class(second)?))
        }
        RelationPayload::Looparrow { sub, triple, commutator: (x, y), maps } => {
            let b = group.target();
            let n = triple.phi().rows();
            if x.ring() != b || y.ring() != b || x.shape() != (n, n) || y.shape() != (n, n) {
                return Err(malformed(kind, "commutator entries must be square over the target ring"));
            }
            let (Some(xi), Some(yi)) = (x.inverse(), y.inverse()) else {
                return Err(malformed(kind, "commutator entries must be invertible"));
            };
            let gamma = x.mul(y).mul(&xi).mul(&yi);
            let twisted = DegreewiseTriple::new(triple.surjection(), &gamma.mul(triple.phi()))?;
            let quot_rank = maps.g_source.rows();
            let quot = DegreewiseTriple::identity(triple.surjection(), quot_rank);
            check_degreewise_sequence(kind, sub, &twisted, &quot, maps)?;
            (class(sub)?, class(triple)?)
        }
        RelationPayload::GammaElementary { triple, gamma } => {
            let g = gamma.product();
            if gamma.ring != *group.target() || g.shape() != (triple.phi().rows(), triple.phi().rows()) {
                return Err(malformed(kind, "elementary witness has the wrong ring or size"));
            }
            if !gamma.verify(&g) {
                return Err(malformed(kind, "a factor is not elementary"));
            }
            let twisted = DegreewiseTriple::new(triple.surjection(), &g.mul(triple.phi()))?;
            (class(triple)?, class(&twisted)?)
        }
        RelationPayload::ChiShift { triple, shift } => {
            let sign = if shift.rem_euclid(2) == 0 { 1 } else { -1 };
            (class(&triple.shift(*shift))?, group.pow(&class(triple)?, sign))
        }
        RelationPayload::ChiExact { sub, mid, quot, f_p, g_p, f_q, g_q } => {
            check_complex_sequence(kind, sub, mid, quot, (f_p, g_p, f_q, g_q))?;
            (class(mid)?, group.mul(&class(sub)?, &class(quot)?))
        }
        RelationPayload::ChiHomology { triple } => (class(triple)?, homology_class(group, triple)?),
        RelationPayload::ChiComposite { first, second } => {
            let composite = first.compose(second)?;
            (class(&composite)?, group.mul(&class(first)?, &class(second)?))
        }
        RelationPayload::QuasiIsoInvariance { triple, other, f, g } => {
            let s = triple.surjection();
            let a = s.source();
            if f.alpha.ring() != a || g.alpha.ring() != a || !f.verify() || !g.verify() {
                return Err(malformed(kind, "f and g must be witnessed equivalences over the source ring"));
            }
            if f.alpha.source() != triple.p()
                || f.alpha.target() != other.p()
                || g.alpha.source() != triple.q()
                || g.alpha.target() != other.q()
            {
                return Err(malformed(kind, "f and g do not connect the triples"));
            }
            if f.alpha.reduce(s).then(other.alpha()) != triple.alpha().then(&g.alpha.reduce(s)) {
                return Err(malformed(kind, "α' f ≠ g α"));
            }
            (class(triple)?, class(other)?)
        }
        RelationPayload::HomotopyInvariance { triple, other, homotopy } => {
            if triple.p() != other.p() || triple.q() != other.q() || !homotopy.connects(triple.alpha(), other.alpha()) {
                return Err(malformed(kind, "the homotopy does not connect the two comparison maps"));
            }
            (class(triple)?, class(other)?)
        }
        RelationPayload::Roundtrip { triple } => {
            let once = chi(&embed(triple))?;
            let twice = chi(&embed(&once))?;
            let direct = class(triple)?;
            let via = class(&once)?;
            let again = class(&twice)?;
            // report the first disagreement, if any
            if via != direct {
                (via, direct)
            } else {
                (again, direct)
            }
        }
    };
    Ok(RelationCheck { kind, lhs, rhs })
}

// object-safe view of ClassInvariant for the closure above
trait ClassDyn {
    fn class_dyn(&self, group: &UnitClassGroup) -> Result<K0Class>;
}

impl<T: ClassInvariant> ClassDyn for T {
    fn class_dyn(&self, group: &UnitClassGroup) -> Result<K0Class> {
        self.class_in(group)
    }
}

/// One failing instance: the payload (re-loadable) and both sides.
#[derive(Clone, Debug)]
pub struct SuiteInstance {
    pub index: usize,
    pub payload: RelationPayload,
    pub outcome: std::result::Result<RelationCheck, String>,
}

impl SuiteInstance {
    pub fn pass(&self) -> bool {
        matches!(&self.outcome, Ok(c) if c.pass())
    }
}

#[derive(Clone, Debug)]
pub struct SuiteReport {
    pub kind: RelationKind,
    pub surjection: Surjection,
    pub seed: u64,
    pub count: usize,
    pub passed: usize,
    pub failures: Vec<SuiteInstance>,
}

/// Seed of instance `i` in a suite seeded by `seed`.
pub fn instance_seed(seed: u64, i: usize) -> u64 {
    seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(i as u64)
}

/// `count` generated instances of `kind`, checked in parallel and returned
/// in index order.
pub fn run_instances(
    group: &UnitClassGroup,
    kind: RelationKind,
    seed: u64,
    count: usize,
) -> Result<Vec<SuiteInstance>> {
    let surj = group.surjection();
    (0..count)
        .into_par_iter()
        .map(|index| {
            let mut rng = ChaCha8Rng::seed_from_u64(instance_seed(seed, index));
            let payload = random_payload(kind, surj, &mut rng)?;
            let outcome = verify_relation(group, &payload).map_err(|e| e.to_string());
            Ok(SuiteInstance { index, payload, outcome })
        })
        .collect()
}

pub fn run_suite(group: &UnitClassGroup, kind: RelationKind, seed: u64, count: usize) -> Result<SuiteReport> {
    let surj = group.surjection();
    let (passes, failures): (Vec<_>, Vec<_>) =
        run_instances(group, kind, seed, count)?.into_iter().partition(SuiteInstance::pass);
    let passed = passes.len();
    Ok(SuiteReport { kind, surjection: surj.clone(), seed, count, passed, failures })
}
