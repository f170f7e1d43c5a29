//! Seeded random instances: chains of complexes `P_0 → P_1 → …` with
//! comparison maps over `B`, built from small summands and then scrambled.

use super::relations::{RelationKind, RelationPayload, SplitExactMaps};
use super::{DegreewiseTriple, RelTriple};
use crate::complexes::{random_contractible, random_degreewise_gl, BoundedComplex, ChainMap, Homotopy};
use crate::error::{Error, Result};
use crate::modcat::{random_gl, ElementaryFactor, ElementaryWitness};
use crate::rings::{Matrix, RingKind, Surjection};
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

/// One summand of a generated chain, recorded so that tests can predict
/// classes without running the Euler characteristic.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub enum ChainPiece {
    /// `A^r` in `degree` in every complex; `units[j]` is the map from
    /// complex `j` to complex `j + 1`.
    Iso { degree: i64, units: Vec<Matrix> },
    /// `[A^r →g_j A^r]` in degrees `degree + 1, degree`; `diffs[j]` is the
    /// reduction of `g_j`, or `None` when complex `j` has no such summand.
    Contractible { degree: i64, diffs: Vec<Option<Matrix>> },
}

#[derive(Clone, Debug)]
pub struct GenOptions {
    pub max_pieces: usize,
    pub max_rank: usize,
    pub min_degree: i64,
    pub max_degree: i64,
    /// Use only differentials invertible over `A`, so all homology is free.
    pub free_homology: bool,
    /// Conjugate every complex by random automorphisms over `A`.
    pub scramble: bool,
    /// Add a random null-homotopic map to every comparison map.
    pub perturb: bool,
}

impl Default for GenOptions {
    fn default() -> Self {
        GenOptions {
            max_pieces: 3,
            max_rank: 2,
            min_degree: -1,
            max_degree: 2,
            free_homology: false,
            scramble: true,
            perturb: true,
        }
    }
}

#[derive(Clone, Debug)]
pub struct GeneratedChain {
    pub complexes: Vec<BoundedComplex>,
    /// `maps[j]` runs between the reductions of `complexes[j]` and `complexes[j + 1]`.
    pub maps: Vec<ChainMap>,
    pub pieces: Vec<ChainPiece>,
}

/// A chain of `len` complexes over `A` with `len - 1` comparison maps.
pub fn random_chain<R: Rng + ?Sized>(surj: &Surjection, len: usize, opts: &GenOptions, rng: &mut R) -> GeneratedChain {
    assert!(len >= 1);
    let (a, b) = (surj.source(), surj.target());
    let n_pieces = rng.gen_range(1..=opts.max_pieces.max(1));
    let mut complexes = vec![BoundedComplex::zero(a); len];
    let zb = BoundedComplex::zero(b);
    let mut maps = vec![ChainMap::zero(&zb, &zb); len - 1];
    let mut pieces = Vec::new();
    for _ in 0..n_pieces {
        let degree = rng.gen_range(opts.min_degree..=opts.max_degree);
        let r = rng.gen_range(1..=opts.max_rank.max(1));
        let (parts, links, piece) = if rng.gen_bool(0.5) {
            let c = BoundedComplex::concentrated(a, degree, r);
            let cb = c.reduce(surj);
            let units: Vec<Matrix> = (0..len - 1).map(|_| random_gl(b, r, rng).0).collect();
            let links = units
                .iter()
                .map(|u| {
                    ChainMap::new(&cb, &cb, |n| if n == degree { u.clone() } else { Matrix::zero(b, 0, 0) }).unwrap()
                })
                .collect::<Vec<_>>();
            (vec![c; len], links, ChainPiece::Iso { degree, units })
        } else {
            let gs: Vec<Option<Matrix>> = (0..len)
                .map(|_| {
                    if !rng.gen_bool(0.6) {
                        None
                    } else if opts.free_homology {
                        Some(random_gl(a, r, rng).0)
                    } else {
                        Some(surj.lift_matrix(&random_gl(b, r, rng).0))
                    }
                })
                .collect();
            let parts: Vec<BoundedComplex> = gs
                .iter()
                .map(|g| {
                    g.as_ref().map_or_else(|| BoundedComplex::zero(a), |g| BoundedComplex::two_term(g, degree + 1))
                })
                .collect();
            let reds: Vec<Option<Matrix>> = gs.iter().map(|g| g.as_ref().map(|g| surj.reduce_matrix(g))).collect();
            let links = (0..len - 1)
                .map(|j| {
                    let (x, y) = (parts[j].reduce(surj), parts[j + 1].reduce(surj));
                    match (&reds[j], &reds[j + 1]) {
                        (Some(g0), Some(g1)) => {
                            // a_{n+1} free, a_n = g1 a_{n+1} g0^{-1}
                            let top = Matrix::random(b, r, r, rng);
                            let bottom = g1.mul(&top).mul(&g0.inverse().unwrap());
                            ChainMap::new(&x, &y, |n| {
                                if n == degree + 1 {
                                    top.clone()
                                } else if n == degree {
                                    bottom.clone()
                                } else {
                                    Matrix::zero(b, y.rank(n), x.rank(n))
                                }
                            })
                            .unwrap()
                        }
                        _ => ChainMap::zero(&x, &y),
                    }
                })
                .collect();
            (parts, links, ChainPiece::Contractible { degree, diffs: reds })
        };
        for j in 0..len {
            complexes[j] = complexes[j].direct_sum(&parts[j]);
        }
        for j in 0..len - 1 {
            maps[j] = maps[j].direct_sum(&links[j]);
        }
        pieces.push(piece);
    }
    if opts.scramble {
        let gl: Vec<Vec<(Matrix, Matrix)>> = complexes.iter().map(|c| random_degreewise_gl(c, rng)).collect();
        let red: Vec<Vec<(Matrix, Matrix)>> = gl
            .iter()
            .map(|g| g.iter().map(|(x, y)| (surj.reduce_matrix(x), surj.reduce_matrix(y))).collect())
            .collect();
        for j in 0..len - 1 {
            maps[j] = maps[j].conjugate(&red[j], &red[j + 1]);
        }
        for (c, g) in complexes.iter_mut().zip(&gl) {
            *c = c.conjugate(g);
        }
    }
    if opts.perturb {
        for m in maps.iter_mut() {
            *m = m.add(&random_homotopy(m.source(), m.target(), rng).boundary());
        }
    }
    GeneratedChain { complexes, maps, pieces }
}

fn random_homotopy<R: Rng + ?Sized>(x: &BoundedComplex, y: &BoundedComplex, rng: &mut R) -> Homotopy {
    let r = x.ring();
    let lo = x.lo().min(y.lo() - 1);
    let hi = x.hi().max(y.hi() - 1);
    let comps: Vec<Matrix> = (lo..=hi).map(|n| Matrix::random(r, y.rank(n + 1), x.rank(n), rng)).collect();
    Homotopy::new(x, y, |n| {
        if (lo..=hi).contains(&n) {
            comps[(n - lo) as usize].clone()
        } else {
            Matrix::zero(r, y.rank(n + 1), x.rank(n))
        }
    })
    .unwrap()
}

/// A random triple with the summands it was built from.
pub fn random_rel_triple<R: Rng + ?Sized>(
    surj: &Surjection,
    opts: &GenOptions,
    rng: &mut R,
) -> Result<(RelTriple, Vec<ChainPiece>)> {
    let ch = random_chain(surj, 2, opts, rng);
    let t = RelTriple::from_map(surj, &ch.complexes[0], &ch.complexes[1], &ch.maps[0])?;
    Ok((t, ch.pieces))
}

pub fn random_degreewise<R: Rng + ?Sized>(surj: &Surjection, max_rank: usize, rng: &mut R) -> DegreewiseTriple {
    let r = rng.gen_range(1..=max_rank.max(1));
    DegreewiseTriple::new(surj, &random_gl(surj.target(), r, rng).0).unwrap()
}

fn incl(ring: &crate::rings::RingTower, first: usize, second: usize) -> Matrix {
    Matrix::identity(ring, first).vstack(&Matrix::zero(ring, second, first))
}

fn proj_second(ring: &crate::rings::RingTower, first: usize, second: usize) -> Matrix {
    Matrix::zero(ring, second, first).hstack(&Matrix::identity(ring, second))
}

/// Standard-position split exact maps `A^a → A^{a+c} → A^c` on both sides,
/// transported by random bases `ts` (source side) and `tt` (target side).
fn scrambled_maps(
    surj: &Surjection,
    (a_src, c_src): (usize, usize),
    (a_tgt, c_tgt): (usize, usize),
    ts: &(Matrix, Matrix),
    tt: &(Matrix, Matrix),
) -> SplitExactMaps {
    let a = surj.source();
    SplitExactMaps {
        f_source: ts.0.mul(&incl(a, a_src, c_src)),
        g_source: proj_second(a, a_src, c_src).mul(&ts.1),
        f_target: tt.0.mul(&incl(a, a_tgt, c_tgt)),
        g_target: proj_second(a, a_tgt, c_tgt).mul(&tt.1),
    }
}

fn random_elementary<R: Rng + ?Sized>(ring: &crate::rings::RingTower, size: usize, rng: &mut R) -> ElementaryFactor {
    let mut idx: Vec<usize> = (0..size).collect();
    idx.shuffle(rng);
    let cut = rng.gen_range(1..size);
    let (upper, lower) = idx.split_at(cut);
    let upper: Vec<usize> = upper.iter().copied().take(rng.gen_range(1..=upper.len())).collect();
    let lower: Vec<usize> = lower.iter().copied().take(rng.gen_range(1..=lower.len())).collect();
    let block = Matrix::random(ring, upper.len(), lower.len(), rng);
    ElementaryFactor { size, upper, lower, block }
}

/// A random payload for `kind`.
pub fn random_payload<R: Rng + ?Sized>(kind: RelationKind, surj: &Surjection, rng: &mut R) -> Result<RelationPayload> {
    let (a, b) = (surj.source(), surj.target());
    let opts = GenOptions::default();
    Ok(match kind {
        RelationKind::RelAExact => {
            let sub = random_degreewise(surj, 2, rng);
            let quot = random_degreewise(surj, 2, rng);
            let (r1, r2) = (sub.phi().cols(), quot.phi().cols());
            let x = Matrix::random(b, r1, r2, rng);
            let std = Matrix::block2(sub.phi(), &x, &Matrix::zero(b, r2, r1), quot.phi());
            let ts = random_gl(a, r1 + r2, rng);
            let tt = random_gl(a, r1 + r2, rng);
            let phi = surj.reduce_matrix(&tt.0).mul(&std).mul(&surj.reduce_matrix(&ts.1));
            let maps = scrambled_maps(surj, (r1, r2), (r1, r2), &ts, &tt);
            RelationPayload::RelAExact { sub, mid: DegreewiseTriple::new(surj, &phi)?, quot, maps }
        }
        RelationKind::RelBCompose => {
            let first = random_degreewise(surj, 3, rng);
            let r = first.phi().rows();
            let second = DegreewiseTriple::new(surj, &random_gl(b, r, rng).0)?;
            RelationPayload::RelBCompose { first, second }
        }
        RelationKind::Looparrow => {
            let sub = random_degreewise(surj, 2, rng);
            let r1 = sub.phi().cols();
            let r2 = rng.gen_range(1..=2);
            let y = Matrix::random(b, r1, r2, rng);
            let mu = Matrix::block2(sub.phi(), &y, &Matrix::zero(b, r2, r1), &Matrix::identity(b, r2));
            let (x1, x1_inv) = random_gl(b, r1 + r2, rng);
            let (y1, y1_inv) = random_gl(b, r1 + r2, rng);
            let gamma = x1.mul(&y1).mul(&x1_inv).mul(&y1_inv);
            let alpha_std = gamma.inverse().unwrap().mul(&mu);
            let ts = random_gl(a, r1 + r2, rng);
            let tt = random_gl(a, r1 + r2, rng);
            let (tb, tb_inv) = (surj.reduce_matrix(&tt.0), surj.reduce_matrix(&tt.1));
            let alpha = tb.mul(&alpha_std).mul(&surj.reduce_matrix(&ts.1));
            let commutator = (tb.mul(&x1).mul(&tb_inv), tb.mul(&y1).mul(&tb_inv));
            let maps = scrambled_maps(surj, (r1, r2), (r1, r2), &ts, &tt);
            RelationPayload::Looparrow { sub, triple: DegreewiseTriple::new(surj, &alpha)?, commutator, maps }
        }
        RelationKind::GammaElementary => {
            let triple = random_degreewise(surj, 3, rng);
            let size = triple.phi().rows();
            let factors = if size < 2 {
                vec![]
            } else {
                (0..rng.gen_range(1..=4)).map(|_| random_elementary(b, size, rng)).collect()
            };
            RelationPayload::GammaElementary { triple, gamma: ElementaryWitness { ring: b.clone(), size, factors } }
        }
        RelationKind::ChiShift => {
            let (triple, _) = random_rel_triple(surj, &opts, rng)?;
            RelationPayload::ChiShift { triple, shift: rng.gen_range(-2..=2) }
        }
        RelationKind::ChiExact => random_chi_exact(surj, &opts, rng)?,
        RelationKind::ChiHomology => {
            if !matches!(a.kind(), RingKind::Integers | RingKind::PolyRing { .. }) {
                return Err(Error::usage(format!("chi_homology needs a source ring Z or F_p[t], not {a}")));
            }
            let free = GenOptions { free_homology: true, ..opts };
            RelationPayload::ChiHomology { triple: random_rel_triple(surj, &free, rng)?.0 }
        }
        RelationKind::ChiComposite => {
            let ch = random_chain(surj, 3, &opts, rng);
            let first = RelTriple::from_map(surj, &ch.complexes[0], &ch.complexes[1], &ch.maps[0])?;
            let second = RelTriple::from_map(surj, &ch.complexes[1], &ch.complexes[2], &ch.maps[1])?;
            RelationPayload::ChiComposite { first, second }
        }
        RelationKind::QuasiIsoInvariance => random_quasi_iso(surj, &opts, rng)?,
        RelationKind::HomotopyInvariance => {
            let (triple, _) = random_rel_triple(surj, &opts, rng)?;
            let (pb, qb) = (triple.p().reduce(surj), triple.q().reduce(surj));
            let homotopy = random_homotopy(&pb, &qb, rng);
            let beta = triple.alpha().sub(&homotopy.boundary());
            let other = RelTriple::from_map(surj, triple.p(), triple.q(), &beta)?;
            RelationPayload::HomotopyInvariance { triple, other, homotopy }
        }
        RelationKind::Roundtrip => RelationPayload::Roundtrip { triple: random_degreewise(surj, 3, rng) },
    })
}

/// `T' → T → T''` with `T` the direct sum twisted by a null-homotopic
/// corner map, all transported by random bases over `A`.
fn random_chi_exact<R: Rng + ?Sized>(surj: &Surjection, opts: &GenOptions, rng: &mut R) -> Result<RelationPayload> {
    let (a, b) = (surj.source(), surj.target());
    let (sub, _) = random_rel_triple(surj, opts, rng)?;
    let (quot, _) = random_rel_triple(surj, opts, rng)?;
    let p = sub.p().direct_sum(quot.p());
    let q = sub.q().direct_sum(quot.q());
    let corner = random_homotopy(&quot.p().reduce(surj), &sub.q().reduce(surj), rng).boundary();
    let (pb, qb) = (p.reduce(surj), q.reduce(surj));
    let alpha = ChainMap::new(&pb, &qb, |n| {
        let zero = Matrix::zero(b, quot.q().rank(n), sub.p().rank(n));
        Matrix::block2(&sub.alpha().at(n), &corner.at(n), &zero, &quot.alpha().at(n))
    })?;
    let gp = random_degreewise_gl(&p, rng);
    let gq = random_degreewise_gl(&q, rng);
    let red = |g: &[(Matrix, Matrix)]| {
        g.iter().map(|(x, y)| (surj.reduce_matrix(x), surj.reduce_matrix(y))).collect::<Vec<_>>()
    };
    let alpha = alpha.conjugate(&red(&gp), &red(&gq));
    let (p2, q2) = (p.conjugate(&gp), q.conjugate(&gq));
    let mid = RelTriple::from_map(surj, &p2, &q2, &alpha)?;
    let at = |g: &[(Matrix, Matrix)], c: &BoundedComplex, n: i64| -> (Matrix, Matrix) {
        if c.rank(n) == 0 {
            (Matrix::identity(a, 0), Matrix::identity(a, 0))
        } else {
            g[(n - c.lo()) as usize].clone()
        }
    };
    let f_p = ChainMap::new(sub.p(), &p2, |n| at(&gp, &p, n).0.mul(&incl(a, sub.p().rank(n), quot.p().rank(n))))?;
    let g_p =
        ChainMap::new(&p2, quot.p(), |n| proj_second(a, sub.p().rank(n), quot.p().rank(n)).mul(&at(&gp, &p, n).1))?;
    let f_q = ChainMap::new(sub.q(), &q2, |n| at(&gq, &q, n).0.mul(&incl(a, sub.q().rank(n), quot.q().rank(n))))?;
    let g_q =
        ChainMap::new(&q2, quot.q(), |n| proj_second(a, sub.q().rank(n), quot.q().rank(n)).mul(&at(&gq, &q, n).1))?;
    Ok(RelationPayload::ChiExact { sub, mid, quot, f_p, g_p, f_q, g_q })
}

/// `f: P → P ⊕ E`, `g: Q → Q ⊕ E'` with contractible `E, E'`, transported
/// by random bases, and `α' = [g α, z]` for a null-homotopic `z`.
fn random_quasi_iso<R: Rng + ?Sized>(surj: &Surjection, opts: &GenOptions, rng: &mut R) -> Result<RelationPayload> {
    let a = surj.source();
    let (triple, _) = random_rel_triple(surj, opts, rng)?;
    let stabilize = |c: &BoundedComplex, rng: &mut R| -> Result<(BoundedComplex, ChainMap, ChainMap)> {
        let e = random_contractible(a, rng.gen_range(-1..=1), rng.gen_range(1..=3), rng);
        let big = c.direct_sum(&e);
        let gl = random_degreewise_gl(&big, rng);
        let target = big.conjugate(&gl);
        let at = |n: i64| {
            if big.rank(n) == 0 {
                (Matrix::identity(a, 0), Matrix::identity(a, 0))
            } else {
                gl[(n - big.lo()) as usize].clone()
            }
        };
        let f = ChainMap::new(c, &target, |n| at(n).0.mul(&incl(a, c.rank(n), e.rank(n))))?;
        let first = |n: i64| Matrix::identity(a, c.rank(n)).hstack(&Matrix::zero(a, c.rank(n), e.rank(n)));
        let retract = ChainMap::new(&target, c, |n| first(n).mul(&at(n).1))?;
        Ok((target, f, retract))
    };
    let (p2, f, f_retract) = stabilize(triple.p(), rng)?;
    let (q2, g, _) = stabilize(triple.q(), rng)?;
    let fw = crate::complexes::equivalence_witness(&f)
        .ok_or_else(|| Error::internal("stabilization is not an equivalence"))?;
    let gw = crate::complexes::equivalence_witness(&g)
        .ok_or_else(|| Error::internal("stabilization is not an equivalence"))?;
    let (p2b, q2b) = (p2.reduce(surj), q2.reduce(surj));
    // α' = g α r + z (1 - f r) with r f = 1, so α' f = g α on the nose
    let ga = triple.alpha().then(&g.reduce(surj));
    let r = f_retract.reduce(surj);
    let z = random_homotopy(&p2b, &q2b, rng).boundary();
    let one_minus = ChainMap::identity(&p2b).sub(&r.then(&f.reduce(surj)));
    let alpha2 = r.then(&ga).add(&one_minus.then(&z));
    let other = RelTriple::from_map(surj, &p2, &q2, &alpha2)?;
    Ok(RelationPayload::QuasiIsoInvariance { triple, other, f: fw, g: gw })
}
