use super::*;
use crate::relk0::{class_of, random_rel_triple, GenOptions};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn poly(s: &str, p: u64) -> FpPoly {
    crate::rings::parse_poly(s, "t", p).unwrap()
}

fn pair(p: u64, f: &str) -> ModulusPair {
    ModulusPair::parse(p, f).unwrap()
}

#[test]
fn modulus_condition_examples() {
    let m = pair(2, "t^2");
    assert!(modulus_check(&poly("1", 2), &poly("t^2", 2), &m));
    assert!(!modulus_check(&poly("1", 2), &poly("t", 2), &m));
    assert!(modulus_check(&poly("t+1", 2), &poly("t^2", 2), &m));
    // common factors cancel before reading off the poles
    assert!(!modulus_check(&poly("t^2+t", 2), &poly("t^2", 2), &m));
    assert!(modulus_check(&poly("t^3+t", 2), &poly("t^4+t^3", 2), &m));
    assert!(!modulus_check(&FpPoly::zero(), &FpPoly::zero(), &m));
}

#[test]
fn pair_validation() {
    assert!(ModulusPair::parse(4, "t").is_err());
    assert!(ModulusPair::parse(3, "2*t").is_err());
    assert!(ModulusPair::parse(3, "1").is_err());
    assert!(matches!(ModulusPair::parse(2, "t^30"), Err(Error::ResourceGuard(_))));
    let m = pair(3, "t^2+1");
    let back: ModulusPair = serde_json::from_str(&serde_json::to_string(&m).unwrap()).unwrap();
    assert_eq!(back, m);
    assert_eq!(m.group().order(), 4);
}

#[test]
fn fiber_examples() {
    let m = pair(2, "t^2");
    let rel = GraphRelation::new(&m, &poly("1", 2), &poly("t^2", 2)).unwrap();
    let (v0, v1) = graph_relation_boundary(&rel, &m).unwrap();
    assert!(v0.is_zero());
    assert_eq!(v1.terms().collect::<Vec<_>>(), vec![(&poly("t+1", 2), 2)]);
    let rel = GraphRelation::new(&m, &poly("t+1", 2), &poly("t^2", 2)).unwrap();
    let (v0, v1) = graph_relation_boundary(&rel, &m).unwrap();
    assert_eq!(v0, ZeroCycle::point(&m, &poly("t+1", 2)).unwrap());
    assert_eq!(v1, ZeroCycle::point(&m, &poly("t^2+t+1", 2)).unwrap());
    let m3 = pair(3, "t^2");
    let (v0, v1) = fiber_cycles(&poly("2", 3), &poly("1", 3), &m3).unwrap();
    assert!(v0.is_zero() && v1.is_zero());
    assert!(GraphRelation::new(&m, &poly("1", 2), &poly("t", 2)).is_err());
    assert!(GraphRelation::new(&m, &poly("t", 2), &poly("t", 2)).is_err());
    // the fiber over 0 of t/(t+1) is the origin, which lies on D
    assert!(fiber_cycles(&poly("t", 2), &poly("t+1", 2), &m).is_err());
}

#[test]
fn point_classes() {
    let m = pair(2, "t^2");
    let a = cyc_point(&ZeroCycle::point(&m, &poly("t+1", 2)).unwrap(), &m).unwrap();
    let b = cyc_point(&ZeroCycle::point(&m, &poly("t^2+t+1", 2)).unwrap(), &m).unwrap();
    assert!(!m.group().is_identity(&a));
    assert_eq!(a, b);
    assert_eq!(a, m.project(&poly("t+1", 2)).unwrap());
    let trivial = pair(2, "t");
    let c = ZeroCycle::from_terms(&trivial, [(poly("t+1", 2), 3), (poly("t^2+t+1", 2), -1)]).unwrap();
    assert!(trivial.group().is_identity(&cyc_point(&c, &trivial).unwrap()));
    assert!(ZeroCycle::point(&m, &poly("t", 2)).is_err());
    assert!(ZeroCycle::point(&m, &poly("t^2+1", 2)).is_err());
}

#[test]
fn resolution_class_is_inverse_of_the_projection() {
    // over F3 with f = t^2 the class group has order 3, so inversion shows
    let m = pair(3, "t^2");
    let g = poly("t+1", 3);
    let c = ZeroCycle::point(&m, &g).unwrap();
    let k = cyc_point(&c, &m).unwrap();
    assert_eq!(k, m.group().inv(&m.project(&g).unwrap()));
    assert_ne!(k, m.project(&g).unwrap());
}

fn random_cycle<R: Rng>(m: &ModulusPair, rng: &mut R) -> ZeroCycle {
    let p = m.field();
    let points: Vec<FpPoly> =
        (1..=3).flat_map(|d| FpPoly::monic_of_degree(d, p)).filter(|g| g.is_irreducible(p) && m.coprime(g)).collect();
    let terms =
        (0..rng.gen_range(0..4)).map(|_| (points[rng.gen_range(0..points.len())].clone(), rng.gen_range(-3..=3)));
    ZeroCycle::from_terms(m, terms).unwrap()
}

#[test]
fn cycle_class_is_additive() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for (p, f) in [(2, "t^2"), (3, "t^2"), (3, "t^2+1"), (5, "t")] {
        let m = pair(p, f);
        let g = m.group();
        for _ in 0..15 {
            let (x, y) = (random_cycle(&m, &mut rng), random_cycle(&m, &mut rng));
            let lhs = cyc_point(&x.add(&y), &m).unwrap();
            assert_eq!(lhs, g.mul(&cyc_point(&x, &m).unwrap(), &cyc_point(&y, &m).unwrap()));
            assert_eq!(cyc_point(&x.neg(), &m).unwrap(), g.inv(&cyc_point(&x, &m).unwrap()));
        }
        assert!(g.is_identity(&cyc_point(&ZeroCycle::zero(), &m).unwrap()));
    }
}

/// Order of `Z^n / rows` by integer row echelon form, `None` if infinite.
fn lattice_index(mut rows: Vec<Vec<i64>>, n: usize) -> Option<u64> {
    let mut order = 1u64;
    let mut r0 = 0;
    for col in 0..n {
        loop {
            let nz: Vec<usize> = (r0..rows.len()).filter(|&i| rows[i][col] != 0).collect();
            if nz.len() <= 1 {
                break;
            }
            let piv = *nz.iter().min_by_key(|&&i| rows[i][col].abs()).unwrap();
            for &i in &nz {
                if i != piv {
                    let q = rows[i][col] / rows[piv][col];
                    for k in 0..n {
                        rows[i][k] -= q * rows[piv][k];
                    }
                }
            }
        }
        match (r0..rows.len()).find(|&i| rows[i][col] != 0) {
            Some(i) => {
                rows.swap(i, r0);
                order *= rows[r0][col].unsigned_abs();
                r0 += 1;
            }
            None => return None,
        }
    }
    Some(order)
}

/// Straight enumeration of every `(g, h)` with `deg ≤ bound`, no
/// normalization, keeping the admissible ones.
fn oracle_chow_order(p: u64, f: &str, bound: usize) -> Option<u64> {
    let m = pair(p, f);
    let f = m.modulus().clone();
    let points: Vec<FpPoly> = (1..=bound)
        .flat_map(|d| FpPoly::monic_of_degree(d, p))
        .filter(|g| g.is_irreducible(p) && g.gcd(&f, p).is_one())
        .collect();
    let all: Vec<FpPoly> = FpPoly::all_below_degree(bound + 1, p).collect();
    let mult = |x: &FpPoly, q: &FpPoly| {
        let mut k = 0;
        let mut x = x.clone();
        while q.divides(&x, p) {
            x = x.div_exact(q, p);
            k += 1;
        }
        k
    };
    let mut rows = Vec::new();
    for g in &all {
        for h in &all {
            if g.is_zero() || h.is_zero() || (g.is_constant() && h.is_constant()) {
                continue;
            }
            let e = g.gcd(h, p);
            let (g1, h1) = (g.div_exact(&e, p), h.div_exact(&e, p));
            let d = g1.sub(&h1, p);
            if d.is_zero() || !f.divides(&h1, p) {
                continue;
            }
            rows.push(points.iter().map(|q| mult(&g1, q) - mult(&d, q)).collect::<Vec<i64>>());
        }
    }
    lattice_index(rows, points.len())
}

#[test]
fn chow_groups_match_direct_enumeration() {
    for (p, f, bound, order) in [(2, "t^2", 3, Some(2)), (2, "t", 3, Some(1)), (3, "t^2", 2, None)] {
        let m = pair(p, f);
        let c = chow_presentation(&m, bound).unwrap();
        let oracle = oracle_chow_order(p, f, bound);
        assert_eq!(c.order(), oracle, "F{p} {f} bound {bound}");
        if let Some(o) = order {
            assert_eq!(c.order(), Some(o));
        }
    }
    let m = pair(2, "t^2");
    let c = chow_presentation(&m, 3).unwrap();
    let t1 = ZeroCycle::point(&m, &poly("t+1", 2)).unwrap();
    assert_eq!(c.project(&t1).unwrap(), vec![1]);
    assert_eq!(c.project(&t1.scale(2)).unwrap(), vec![0]);
    let empty = chow_presentation(&m, 0).unwrap();
    assert!(empty.generators.is_empty() && empty.order() == Some(1));
}

#[test]
fn chow_guard_trips() {
    let m = pair(3, "t");
    assert!(matches!(chow_presentation_capped(&m, 3, 100), Err(Error::ResourceGuard(_))));
    assert_eq!(candidate_count(2, 3), 15 * 15);
}

#[test]
fn cycle_map_reports() {
    let m = pair(2, "t^2");
    let r = cycle_map_check(&m, 3).unwrap();
    assert!(r.pass(), "{r:?}");
    assert!(r.isomorphism);
    assert_eq!((r.chow_order, r.unit_group_order), (Some(2), 2));
    assert!(r.probe.is_some());
    let r = cycle_map_check(&pair(3, "t^2"), 2).unwrap();
    assert!(r.pass(), "{r:?}");
    assert!(r.admissible_relations > 0);
    let r = cycle_map_check(&pair(2, "t"), 3).unwrap();
    assert!(r.pass() && r.isomorphism && r.unit_group_order == 1);
}

#[test]
fn sheaf_class_examples() {
    let m = pair(2, "t^2");
    let a = m.ring();
    let sq = FiniteModule::new(&Matrix::from_fn(a, 1, 1, |_, _| a.from_poly(poly("t^2+1", 2)))).unwrap();
    let s = sheaf_class(&sq, &m).unwrap();
    assert!(m.group().is_identity(&s.class));
    assert_eq!(s.multiplicities, ZeroCycle::from_terms(&m, [(poly("t+1", 2), 2)]).unwrap());
    assert!(s.agrees());
    let g = poly("t^2+t+1", 2);
    let gg = a.from_poly(g.clone());
    let diag = FiniteModule::new(&Matrix::diagonal(a, &[gg.clone(), gg])).unwrap();
    let s = sheaf_class(&diag, &m).unwrap();
    assert_eq!(s.multiplicities, ZeroCycle::from_terms(&m, [(g.clone(), 2)]).unwrap());
    assert_eq!(s.direct, m.project(&g.mul(&g, 2)).unwrap());
    let bad = FiniteModule::new(&Matrix::from_fn(a, 1, 1, |_, _| a.from_poly(poly("t^2+t", 2)))).unwrap();
    assert!(matches!(sheaf_class(&bad, &m), Err(Error::Usage(_))));
    assert!(FiniteModule::new(&Matrix::zero(a, 1, 1)).is_err());
}

#[test]
fn random_modules_follow_their_multiplicities() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for (p, f) in [(2, "t^2"), (3, "t^2"), (3, "t^2+1")] {
        let m = pair(p, f);
        for _ in 0..10 {
            let (module, cycle) = random_finite_module(&m, &mut rng);
            let s = sheaf_class(&module, &m).unwrap();
            assert_eq!(s.multiplicities, cycle);
            assert!(s.agrees());
        }
    }
}

#[test]
fn trivializing_loci() {
    let m = pair(2, "t^2");
    let s = m.surjection();
    let id = crate::relk0::RelTriple::identity(s, &point_triple(&m, &poly("t+1", 2)).unwrap().p().clone());
    let loc = trivializing_locus(&id, &m).unwrap();
    assert!(loc.points.is_empty() && loc.verify(&m).unwrap());
    // (1 + t)^{-1} = 1 + t mod t^2 over F2, so the lift is t + 1 itself
    let pt = point_triple(&m, &poly("t+1", 2)).unwrap();
    let loc = trivializing_locus(&pt, &m).unwrap();
    assert_eq!(loc.points, vec![poly("t+1", 2)]);
    assert!(loc.verify(&m).unwrap());
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for (p, f) in [(2, "t^2"), (3, "t^2")] {
        let m = pair(p, f);
        for _ in 0..10 {
            let (t, _) = random_rel_triple(m.surjection(), &GenOptions::default(), &mut rng).unwrap();
            let loc = trivializing_locus(&t, &m).unwrap();
            assert!(loc.verify(&m).unwrap());
            assert!(loc.points.iter().all(|q| m.coprime(q)));
            let other = trivializing_locus_perturbed(&t, &m, &mut rng).unwrap();
            assert!(other.verify(&m).unwrap());
            assert_eq!(other.class, class_of(m.group(), &t).unwrap());
            assert_eq!(other.class, loc.class);
        }
    }
}

/// `N(a + b y) = a² - a b c₁ + b² c₀` in `A[y]/(y² + c₁ y + c₀)`.
fn quadratic_norm(alg: &FiniteFreeAlgebra, u: &[FpPoly], m: &ModulusPair) -> FpPoly {
    let p = alg.field();
    let w = serde_json::to_value(alg).unwrap();
    let rel: Vec<FpPoly> = serde_json::from_value::<Vec<Vec<u64>>>(w["relation"].clone())
        .unwrap()
        .into_iter()
        .map(|c| FpPoly::new(c, p))
        .collect();
    let (a, b) = (&u[0], &u[1]);
    a.mul(a, p).sub(&a.mul(b, p).mul(&rel[1], p), p).add(&b.mul(b, p).mul(&rel[0], p), p).rem(m.modulus(), p)
}

#[test]
fn transfer_examples() {
    let m = pair(2, "t^2");
    let b = m.surjection().target();
    let triv = FiniteFreeAlgebra::trivial(2).unwrap();
    let u = AlgMatrix { entries: vec![vec![vec![vec![1, 1]]]] };
    let r = transfer_finite(&triv, &u, &m).unwrap();
    assert_eq!(r.triple.phi(), &Matrix::from_fn(b, 1, 1, |_, _| b.from_poly(poly("t+1", 2))));
    assert!(r.norm_compatible());
    let alg = FiniteFreeAlgebra::new(2, vec![poly("1", 2), poly("1", 2), poly("1", 2)]).unwrap();
    // u = t + y
    let u = AlgMatrix { entries: vec![vec![vec![vec![0, 1], vec![1]]]] };
    let r = transfer_finite(&alg, &u, &m).unwrap();
    assert_eq!(r.triple.phi().shape(), (2, 2));
    assert_eq!(r.transfer_det, b.from_poly(quadratic_norm(&alg, &[poly("t", 2), poly("1", 2)], &m)));
    assert!(r.norm_compatible());
    let one = AlgMatrix { entries: vec![vec![vec![vec![1]]]] };
    let r = transfer_finite(&alg, &one, &m).unwrap();
    assert!(m.group().is_identity(&r.class) && r.triple.phi().is_identity());
    let zero = AlgMatrix { entries: vec![vec![vec![]]] };
    assert!(transfer_finite(&alg, &zero, &m).is_err());
    assert!(FiniteFreeAlgebra::new(2, vec![poly("1", 2), poly("t", 2)]).is_err());
}

#[test]
fn random_transfers_are_norm_compatible() {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    for (p, f) in [(2, "t^2"), (3, "t^2"), (5, "t")] {
        let m = pair(p, f);
        for _ in 0..10 {
            let (alg, t) = random_transfer_instance(&m, &mut rng);
            let r = transfer_finite(&alg, &t, &m).unwrap();
            assert!(r.norm_compatible());
            assert_eq!(r.triple.phi().rows(), 2 * t.size());
            if t.size() == 1 {
                let u: Vec<FpPoly> = t.entries[0][0].iter().map(|c| FpPoly::new(c.clone(), p)).collect();
                assert_eq!(r.transfer_det, m.surjection().target().from_poly(quadratic_norm(&alg, &u, &m)));
            }
        }
    }
}
