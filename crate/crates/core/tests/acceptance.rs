//! Acceptance run: one line per criterion, exit status 1 if any fails.
//! Arithmetic is exact everywhere, so the only pinned tolerances are the
//! instance counts and wall-clock limits below.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use relk::complexes::{compare_splits, phi, random_contractible, random_contracting_homotopy, strict_split};
use relk::cycles::{
    cycle_map_check, random_finite_module, random_transfer_instance, sheaf_class, transfer_finite, AlgMatrix,
    FiniteFreeAlgebra, ModulusPair,
};
use relk::relk0::{
    chi, class_of, embed, heller_sequence_check, random_chain, random_degreewise, run_suite, ChainPiece, GenOptions,
    K0Class, RelTriple, RelationKind,
};
use relk::rings::{FpPoly, Matrix, RingTower, Surjection, UnitClassGroup};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

const SPLIT_RINGS: [&str; 8] = ["F2", "F3", "F5", "Z/4", "Z/8", "Z/9", "F2[t]/(t^2)", "F3[t]/(t^2+1)"];
const SPLITS_PER_RING: usize = 200;
const SPLIT_LIMIT: Duration = Duration::from_secs(60);
const MAX_LENGTH: usize = 6;
const MAX_RANK: usize = 4;

const INDEPENDENT_SPLITS: usize = 100;

const SURJECTIONS: [&str; 5] = ["Z->Z/5", "Z->Z/8", "Z/9->Z/3", "F2[x]/(x^3)->F2[x]/(x)", "F2[t]->F2[t]/(t^2)"];
const CHI_KINDS: [RelationKind; 5] = [
    RelationKind::ChiShift,
    RelationKind::ChiExact,
    RelationKind::ChiComposite,
    RelationKind::QuasiIsoInvariance,
    RelationKind::HomotopyInvariance,
];
const CHI_INSTANCES: usize = 100;

const ROUNDTRIPS: usize = 200;

const CYCLE_LIMIT: Duration = Duration::from_secs(120);

const MODULES: usize = 100;
const TRANSFERS: usize = 50;

type Outcome = Result<String, String>;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn setup(spec: &str) -> (Surjection, UnitClassGroup) {
    let s = Surjection::parse(spec).unwrap();
    let g = UnitClassGroup::new(&s).unwrap();
    (s, g)
}

fn strict_splits() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut complexes = 0;
    for spec in SPLIT_RINGS {
        let r = RingTower::parse(spec).unwrap();
        for i in 0..SPLITS_PER_RING {
            let len = rng.gen_range(1..=MAX_LENGTH);
            let c = random_contractible(&r, rng.gen_range(-2..=2), len, &mut rng);
            ensure(c.degrees().all(|n| c.rank(n) <= MAX_RANK), || format!("{spec} #{i}: rank above {MAX_RANK}"))?;
            let h = random_contracting_homotopy(&c, &mut rng).ok_or_else(|| format!("{spec} #{i}: no contraction"))?;
            let s = strict_split(&h).map_err(|e| format!("{spec} #{i}: {e}"))?;
            for n in c.degrees() {
                let sd_ds = s.at(n - 1).mul(&c.d(n)).add(&c.d(n + 1).mul(&s.at(n)));
                ensure(sd_ds == Matrix::identity(&r, c.rank(n)), || format!("{spec} #{i}: sd + ds ≠ 1 in degree {n}"))?;
                ensure(s.at(n + 1).mul(&s.at(n)).is_zero(), || format!("{spec} #{i}: ss ≠ 0 in degree {n}"))?;
            }
            complexes += 1;
        }
    }
    let t = start.elapsed();
    ensure(t < SPLIT_LIMIT, || format!("took {t:.1?}, limit {SPLIT_LIMIT:?}"))?;
    Ok(format!("{complexes} complexes over {} rings in {t:.1?}", SPLIT_RINGS.len()))
}

/// Each factor is a block transvection: `(E - 1)^2 = 0`.
fn split_independence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(102);
    for i in 0..INDEPENDENT_SPLITS {
        let spec = SPLIT_RINGS[i % SPLIT_RINGS.len()];
        let r = RingTower::parse(spec).unwrap();
        let c = random_contractible(&r, 0, rng.gen_range(2..=MAX_LENGTH), &mut rng);
        let s1 = strict_split(&random_contracting_homotopy(&c, &mut rng).unwrap()).unwrap();
        let s2 = strict_split(&random_contracting_homotopy(&c, &mut rng).unwrap()).unwrap();
        let (p1, p2) = (phi(&s1).matrix, phi(&s2).matrix);
        ensure(p1.det().unwrap() == p2.det().unwrap(), || format!("{spec} #{i}: det Φ_s ≠ det Φ_s'"))?;
        let cmp = compare_splits(&s1, &s2).unwrap();
        ensure(cmp.gamma.mul(&p2) == p1, || format!("{spec} #{i}: γ Φ_s' ≠ Φ_s"))?;
        let w = cmp.witness.ok_or_else(|| format!("{spec} #{i}: no elementary witness"))?;
        let n = cmp.gamma.rows();
        let mut prod = Matrix::identity(&r, n);
        for f in &w.factors {
            let e = f.matrix();
            let nil = e.sub(&Matrix::identity(&r, n));
            ensure(nil.mul(&nil).is_zero(), || format!("{spec} #{i}: factor is not a transvection"))?;
            prod = prod.mul(&e);
        }
        ensure(prod == cmp.gamma && w.verify(&cmp.gamma), || format!("{spec} #{i}: witness product ≠ γ"))?;
    }
    Ok(format!("{INDEPENDENT_SPLITS} pairs of splits, every γ a verified product of transvections"))
}

fn sign(n: i64) -> i64 {
    if n.rem_euclid(2) == 0 {
        1
    } else {
        -1
    }
}

/// The class read off the summands of a generated chain: an isomorphism
/// `u` in degree `n` gives `det(u)^{(-1)^n}`, a contractible `[g]` in
/// degrees `n+1, n` gives `det(g_target)^{(-1)^n} det(g_source)^{-(-1)^n}`.
fn predicted(group: &UnitClassGroup, pieces: &[ChainPiece], j: usize) -> K0Class {
    let det = |m: &Matrix| group.project(&m.det().unwrap()).unwrap();
    let mut acc = group.identity();
    for p in pieces {
        match p {
            ChainPiece::Iso { degree, units } => acc = group.mul(&acc, &group.pow(&det(&units[j]), sign(*degree))),
            ChainPiece::Contractible { degree, diffs } => {
                if let Some(g) = &diffs[j + 1] {
                    acc = group.mul(&acc, &group.pow(&det(g), sign(*degree)));
                }
                if let Some(g) = &diffs[j] {
                    acc = group.mul(&acc, &group.pow(&det(g), -sign(*degree)));
                }
            }
        }
    }
    acc
}

fn chi_suite() -> Outcome {
    let mut total = 0;
    for spec in SURJECTIONS {
        let (s, g) = setup(spec);
        for kind in CHI_KINDS {
            let r = run_suite(&g, kind, 103, CHI_INSTANCES).map_err(|e| format!("{kind} on {spec}: {e}"))?;
            ensure(r.passed == CHI_INSTANCES, || {
                let first = r.failures.first().map(|f| format!("{:?}", f.outcome)).unwrap_or_default();
                format!("{kind} on {spec}: {}/{CHI_INSTANCES} passed, first failure {first}", r.passed)
            })?;
            total += r.passed;
        }
        let mut rng = ChaCha8Rng::seed_from_u64(104);
        for i in 0..CHI_INSTANCES {
            let ch = random_chain(&s, 2, &GenOptions::default(), &mut rng);
            let t = RelTriple::from_map(&s, &ch.complexes[0], &ch.complexes[1], &ch.maps[0]).unwrap();
            ensure(class_of(&g, &t).unwrap() == predicted(&g, &ch.pieces, 0), || {
                format!("{spec} #{i}: χ differs from the summand prediction")
            })?;
        }
    }
    Ok(format!(
        "{total} relation instances over {} kinds and {} surjections, plus {} summand predictions",
        CHI_KINDS.len(),
        SURJECTIONS.len(),
        CHI_INSTANCES * SURJECTIONS.len()
    ))
}

fn roundtrip() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(105);
    for i in 0..ROUNDTRIPS {
        let (s, g) = setup(SURJECTIONS[i % SURJECTIONS.len()]);
        let d = random_degreewise(&s, 3, &mut rng);
        let back = chi(&embed(&d)).map_err(|e| format!("#{i}: {e}"))?;
        ensure(class_of(&g, &back).unwrap() == class_of(&g, &d).unwrap(), || format!("#{i}: class changed"))?;
        ensure(back == d, || format!("#{i}: χ(embed(d)) ≠ d"))?;
    }
    Ok(format!("{ROUNDTRIPS} degreewise triples"))
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// `|B^×| / |image of A^×|`, counted by hand.
fn unit_cokernel_order(spec: &str) -> usize {
    let units_mod = |n: u64| (1..n).filter(|&k| gcd(k, n) == 1).collect::<Vec<u64>>();
    match spec {
        // A^× = {±1}
        "Z->Z/5" | "Z->Z/8" => {
            let n: u64 = spec[5..].parse().unwrap();
            let image = if n == 2 { 1 } else { 2 };
            units_mod(n).len() / image
        }
        "Z/9->Z/3" => {
            let image: std::collections::BTreeSet<u64> = units_mod(9).iter().map(|k| k % 3).collect();
            units_mod(3).len() / image.len()
        }
        // B = F2 has one unit
        "F2[x]/(x^3)->F2[x]/(x)" => 1,
        // B^× = {1, 1 + t}, A^× = {1}
        "F2[t]->F2[t]/(t^2)" => {
            let f = FpPoly::new(vec![0, 0, 1], 2);
            FpPoly::all_below_degree(2, 2).filter(|g| !g.is_zero() && g.gcd(&f, 2).is_one()).count()
        }
        _ => unreachable!(),
    }
}

fn heller() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(106);
    let mut orders = Vec::new();
    for (spec, expected) in SURJECTIONS.iter().zip([2, 2, 1, 1, 2]) {
        let oracle = unit_cokernel_order(spec);
        ensure(oracle == expected, || format!("{spec}: hand count {oracle}, expected {expected}"))?;
        let r =
            heller_sequence_check(&Surjection::parse(spec).unwrap(), &mut rng).map_err(|e| format!("{spec}: {e}"))?;
        ensure(r.exact(), || format!("{spec}: not exact: {r:?}"))?;
        ensure(r.group_order == expected, || format!("{spec}: order {}, expected {expected}", r.group_order))?;
        orders.push(r.group_order);
    }
    Ok(format!("exact with orders {orders:?}"))
}

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

/// Index of the admissible relations in the free group on the closed
/// points of degree ≤ bound; `None` when it is infinite. Every `(g, h)` pair
/// is taken as is, without normalization.
fn oracle_chow_order(p: u64, f: &FpPoly, bound: usize) -> Option<u64> {
    let points: Vec<FpPoly> = (1..=bound)
        .flat_map(|d| FpPoly::monic_of_degree(d, p))
        .filter(|g| g.is_irreducible(p) && g.gcd(f, p).is_one())
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

/// `|(F_p[t]/f)^×| / |F_p^×|`.
fn oracle_unit_class_order(p: u64, f: &FpPoly) -> usize {
    let n = f.degree().unwrap();
    let units = FpPoly::all_below_degree(n, p).filter(|g| !g.is_zero() && g.gcd(f, p).is_one()).count();
    units / (p as usize - 1)
}

fn cycle_map() -> Outcome {
    let start = Instant::now();
    let mut lines = Vec::new();
    for (p, f, bound, iso) in [(2u64, "t^2", 3usize, true), (3, "t^2", 2, false)] {
        let pair = ModulusPair::parse(p, f).unwrap();
        let r = cycle_map_check(&pair, bound).map_err(|e| format!("F{p}, {f}: {e}"))?;
        let tag = format!("(F{p}, {f}, bound {bound})");
        ensure(r.violations.is_empty(), || format!("{tag}: {} admissible relations split", r.violations.len()))?;
        ensure(r.well_defined && r.surjective, || {
            format!("{tag}: well defined {}, surjective {}", r.well_defined, r.surjective)
        })?;
        ensure(r.probe.is_some(), || format!("{tag}: no non-admissible pair separates its fibers"))?;
        let units = oracle_unit_class_order(p, pair.modulus());
        ensure(r.unit_group_order == units, || format!("{tag}: unit class group {} ≠ {units}", r.unit_group_order))?;
        let chow = oracle_chow_order(p, pair.modulus(), bound);
        ensure(r.chow_order == chow, || format!("{tag}: Chow order {:?} ≠ oracle {chow:?}", r.chow_order))?;
        if iso {
            ensure(chow == Some(2) && units == 2 && r.isomorphism, || format!("{tag}: not an isomorphism of order 2"))?;
        }
        let order = chow.map_or("infinite".to_string(), |o| o.to_string());
        lines.push(format!("{tag}: Chow {order} onto {units}"));
    }
    let t = start.elapsed();
    ensure(t < CYCLE_LIMIT, || format!("took {t:.1?}, limit {CYCLE_LIMIT:?}"))?;
    Ok(format!("{} in {t:.1?}", lines.join("; ")))
}

fn multiplicity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(107);
    let pairs = [(2u64, "t^2"), (3, "t^2"), (3, "t^2+1"), (5, "t")];
    for i in 0..MODULES {
        let (p, f) = pairs[i % pairs.len()];
        let pair = ModulusPair::parse(p, f).unwrap();
        let group = pair.group();
        let b = pair.surjection().target();
        let (m, expected) = random_finite_module(&pair, &mut rng);
        let sc = sheaf_class(&m, &pair).map_err(|e| format!("#{i}: {e}"))?;
        ensure(sc.multiplicities == expected, || format!("#{i}: multiplicities {} ≠ {expected}", sc.multiplicities))?;
        ensure(sc.class == sc.cycle_class, || format!("#{i}: sheaf class ≠ cycle class"))?;
        // each point [g] has class project(g)^{-1}
        let mut oracle = group.identity();
        for (g, k) in expected.terms() {
            let pg = group.project(&b.from_poly(g.rem(pair.modulus(), p))).unwrap();
            oracle = group.mul(&oracle, &group.pow(&pg, -k));
        }
        ensure(sc.class == oracle, || format!("#{i}: class ≠ product over the points"))?;
    }
    Ok(format!("{MODULES} modules over {} modulus pairs", pairs.len()))
}

fn relation(alg: &FiniteFreeAlgebra) -> Vec<FpPoly> {
    let p = alg.field();
    let w = serde_json::to_value(alg).unwrap();
    serde_json::from_value::<Vec<Vec<u64>>>(w["relation"].clone())
        .unwrap()
        .into_iter()
        .map(|c| FpPoly::new(c, p))
        .collect()
}

/// `a + b y` with `y^2 = -c1 y - c0`, all reduced mod `f`.
type Quad = (FpPoly, FpPoly);

fn quad_mul(x: &Quad, y: &Quad, c: &[FpPoly], f: &FpPoly, p: u64) -> Quad {
    let (a, b) = x;
    let (u, v) = y;
    let bv = b.mul(v, p);
    let re = a.mul(u, p).sub(&bv.mul(&c[0], p), p);
    let im = a.mul(v, p).add(&b.mul(u, p), p).sub(&bv.mul(&c[1], p), p);
    (re.rem(f, p), im.rem(f, p))
}

fn quad_norm(x: &Quad, c: &[FpPoly], f: &FpPoly, p: u64) -> FpPoly {
    let (a, b) = x;
    a.mul(a, p).sub(&a.mul(b, p).mul(&c[1], p), p).add(&b.mul(b, p).mul(&c[0], p), p).rem(f, p)
}

fn decode(m: &AlgMatrix, p: u64) -> Vec<Vec<Quad>> {
    let coord = |e: &Vec<Vec<u64>>, k: usize| e.get(k).map_or(FpPoly::zero(), |c| FpPoly::new(c.clone(), p));
    m.entries.iter().map(|row| row.iter().map(|e| (coord(e, 0), coord(e, 1))).collect()).collect()
}

fn transfer() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(108);
    let pairs = [(2u64, "t^2"), (3, "t^2"), (5, "t"), (3, "t^3+t+1")];
    let mut sizes = [0usize; 3];
    for i in 0..TRANSFERS {
        let (p, f) = pairs[i % pairs.len()];
        let pair = ModulusPair::parse(p, f).unwrap();
        let fm = pair.modulus();
        let b = pair.surjection().target();
        let (alg, m) = random_transfer_instance(&pair, &mut rng);
        ensure(alg.rank() == 2, || format!("#{i}: algebra of rank {}", alg.rank()))?;
        let c = relation(&alg);
        let q = decode(&m, p);
        let det = match q.len() {
            1 => q[0][0].clone(),
            2 => {
                let (x, y) = (quad_mul(&q[0][0], &q[1][1], &c, fm, p), quad_mul(&q[0][1], &q[1][0], &c, fm, p));
                (x.0.sub(&y.0, p).rem(fm, p), x.1.sub(&y.1, p).rem(fm, p))
            }
            n => return Err(format!("#{i}: size {n}")),
        };
        sizes[q.len()] += 1;
        let norm = b.from_poly(quad_norm(&det, &c, fm, p));
        let r = transfer_finite(&alg, &m, &pair).map_err(|e| format!("#{i}: {e}"))?;
        ensure(r.transfer_det == norm, || format!("#{i}: det of the restriction ≠ norm of det"))?;
        ensure(r.norm_compatible(), || format!("#{i}: classes differ"))?;
    }
    Ok(format!("{TRANSFERS} quadratic instances ({} of size 1, {} of size 2)", sizes[1], sizes[2]))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 8] = [
        ("strict split identities", strict_splits),
        ("independent splits", split_independence),
        ("chi relation suites", chi_suite),
        ("comparison round trip", roundtrip),
        ("heller exactness", heller),
        ("cycle class map", cycle_map),
        ("multiplicity lemma", multiplicity),
        ("transfer norm compatibility", transfer),
    ];
    let mut failed = 0;
    for (name, run) in criteria {
        let outcome = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|e| {
            let msg = e.downcast_ref::<String>().cloned().or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()));
            Err(format!("panicked: {}", msg.unwrap_or_default()))
        });
        match outcome {
            Ok(detail) => println!("PASS  {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL  {name}: {detail}");
            }
        }
    }
    println!("acceptance: {}/{} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
