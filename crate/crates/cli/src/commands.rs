use crate::fail::Failure;
use crate::instance::{self, Resolved, Triple};
use crate::report::{digest, Builder, Check, Report};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use relk::cycles::{self, AlgMatrix, FiniteFreeAlgebra, ModulusPair};
use relk::relk0::{
    class_of, embed, heller_sequence_check, instance_seed, random_rel_triple, run_instances, verify_relation,
    GenOptions, K0Class, RelTriple, RelationKind, RelationPayload,
};
use relk::rings::{Surjection, UnitClassGroup};
use serde_json::{json, Value};
use std::path::Path;

/// Surjections exercised when none are named.
pub const DEFAULT_SURJECTIONS: [&str; 5] =
    ["Z->Z/5", "Z->Z/8", "Z/9->Z/3", "F2[x]/(x^3)->F2[x]/(x)", "F2[t]->F2[t]/(t^2)"];

pub const ENV_MAX_CANDIDATES: &str = "RELK_MAX_CANDIDATES";

fn fmt_class(group: &UnitClassGroup, k: &K0Class) -> String {
    group.target().format_elem(k.rep())
}

fn surjection(spec: &str) -> Result<Surjection, Failure> {
    Surjection::parse(spec).map_err(|e| Failure::from_lib(e).prefixed("--surjection"))
}

fn group(s: &Surjection) -> Result<UnitClassGroup, Failure> {
    Ok(UnitClassGroup::new(s)?)
}

/// Flag, then environment, then the library default.
pub fn max_candidates(flag: Option<u64>) -> Result<u128, Failure> {
    if let Some(v) = flag {
        return Ok(v as u128);
    }
    match std::env::var(ENV_MAX_CANDIDATES) {
        Ok(v) => v
            .trim()
            .parse::<u128>()
            .map_err(|_| Failure::invalid(format!("{ENV_MAX_CANDIDATES}: `{v}` is not a nonnegative integer"))),
        Err(_) => Ok(cycles::DEFAULT_MAX_CANDIDATES),
    }
}

fn modulus_pair(field: u64, modulus: &str) -> Result<ModulusPair, Failure> {
    ModulusPair::parse(field, modulus).map_err(|e| Failure::from_lib(e).prefixed("--modulus"))
}

pub fn class(path: &Path, names: &[String]) -> Result<Report, Failure> {
    let inst = instance::load(path)?;
    let surj = inst.surjection.clone().ok_or_else(|| Failure::invalid("surjection: required by `class`"))?;
    let g = group(&surj)?;
    let selected: Vec<&String> = if names.is_empty() { inst.triples.keys().collect() } else { names.iter().collect() };
    if selected.is_empty() {
        return Err(Failure::invalid("triples: the instance defines none"));
    }
    let mut b = Builder::new("class");
    for name in selected {
        let t = inst.triples.get(name).ok_or_else(|| Failure::invalid(format!("--triple: unknown triple `{name}`")))?;
        let (k, iota, kind, instance) = b.timed(name, || -> relk::Result<_> {
            Ok(match t {
                Triple::Degreewise(d) => (class_of(&g, d)?, d.iota_rank(), "degreewise", digest(d)),
                Triple::Complex(r) => (class_of(&g, r)?, r.iota_rank(), "complex", digest(r)),
            })
        })?;
        b.push(Check {
            id: format!("class:{name}"),
            anchor: "[(P, α, Q)] in K_0(F) = coker(A^× → B^×)".into(),
            instance,
            pass: iota == 0,
            witness: None,
            detail: json!({ "kind": kind, "class": fmt_class(&g, &k), "iota_rank": iota, "group_order": g.order() }),
        });
    }
    Ok(b.finish())
}

pub fn heller(specs: &[String], seed: u64) -> Result<Report, Failure> {
    let mut b = Builder::new("heller");
    for spec in specs {
        let s = surjection(spec)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let r = b.timed(&s.to_string(), || heller_sequence_check(&s, &mut rng))?;
        let pass = r.exact();
        b.push(Check {
            id: format!("heller:{s}"),
            anchor: "K_1(A) → K_1(B) → K_0(F) → K_0(A) → K_0(B) is exact".into(),
            instance: digest(&json!({ "surjection": s, "seed": seed })),
            pass,
            witness: (!pass).then(|| json!({ "surjection": spec, "seed": seed })),
            detail: serde_json::to_value(&r).expect("serializable"),
        });
    }
    Ok(b.finish())
}

fn relation_check(
    id: String,
    kind: RelationKind,
    payload: &RelationPayload,
    outcome: Result<relk::relk0::RelationCheck, String>,
    g: &UnitClassGroup,
) -> Check {
    let pass = matches!(&outcome, Ok(c) if c.pass());
    let detail = match &outcome {
        Ok(c) => json!({ "lhs": fmt_class(g, &c.lhs), "rhs": fmt_class(g, &c.rhs) }),
        Err(e) => json!({ "error": e }),
    };
    Check {
        id,
        anchor: kind.anchor().into(),
        instance: digest(payload),
        pass,
        witness: (!pass).then(|| json!({ "payload": payload, "outcome": detail })),
        detail,
    }
}

pub fn verify(suite: &str, specs: &[String], seed: u64, count: usize) -> Result<Report, Failure> {
    let kinds: Vec<RelationKind> = if suite == "all" {
        RelationKind::ALL.to_vec()
    } else {
        vec![suite.parse().map_err(|e: relk::Error| Failure::from_lib(e).prefixed("--suite"))?]
    };
    let specs: Vec<String> =
        if specs.is_empty() { DEFAULT_SURJECTIONS.iter().map(|s| s.to_string()).collect() } else { specs.to_vec() };
    let surjs = specs.iter().map(|s| surjection(s)).collect::<Result<Vec<_>, _>>()?;
    let mut b = Builder::new("verify");
    for s in &surjs {
        let g = group(s)?;
        for &kind in &kinds {
            if kind == RelationKind::ChiHomology && !s.source().is_infinite_euclidean() {
                // homology of complexes over A must be free, which needs A = Z or F_p[t]
                continue;
            }
            let section = format!("{kind}:{s}");
            let instances = b.timed(&section, || run_instances(&g, kind, seed, count))?;
            for inst in instances {
                let id = format!("{kind}:{s}:{:05}", inst.index);
                b.push(relation_check(id, kind, &inst.payload, inst.outcome, &g));
            }
        }
    }
    Ok(b.finish())
}

/// Rerun the witnesses of a report's failing checks, or a single payload.
pub fn replay(path: &Path) -> Result<Report, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure::invalid(format!("{}: {e}", path.display())))?;
    let value: Value = serde_json::from_str(&text).map_err(|e| Failure::invalid(format!("{}: {e}", path.display())))?;
    let mut cases: Vec<(String, Value)> = Vec::new();
    if let Ok(r) = serde_json::from_value::<Report>(value.clone()) {
        for c in r.body.checks {
            if let Some(w) = c.witness {
                let payload = w.get("payload").cloned().ok_or_else(|| {
                    Failure::invalid(format!("{}: witness of `{}` carries no relation payload", path.display(), c.id))
                })?;
                cases.push((c.id, payload));
            }
        }
    } else {
        let payload = value.get("payload").cloned().unwrap_or(value);
        cases.push(("replay".into(), payload));
    }
    let mut b = Builder::new("verify");
    for (id, v) in cases {
        let payload: RelationPayload = serde_json::from_value(v).map_err(|e| Failure::invalid(format!("{id}: {e}")))?;
        let g = group(payload.surjection())?;
        let outcome = b.timed(&id, || verify_relation(&g, &payload)).map_err(|e| e.to_string());
        b.push(relation_check(id, payload.kind(), &payload, outcome, &g));
    }
    Ok(b.finish())
}

pub fn chow(field: u64, modulus: &str, bound: usize, cap: u128) -> Result<Report, Failure> {
    let pair = modulus_pair(field, modulus)?;
    let mut b = Builder::new("chow");
    let c = b.timed("chow", || cycles::chow_presentation_capped(&pair, bound, cap))?;
    let mut detail = serde_json::to_value(&c).expect("serializable");
    detail["order"] = json!(c.order());
    b.push(Check {
        id: format!("chow:{pair}:bound{bound}"),
        anchor: "CH_0(X|D) = Z_0(X|D) / ([V_0] - [V_1]) over graph curves of bounded degree".into(),
        instance: digest(&json!({ "pair": pair, "bound": bound })),
        pass: true,
        witness: None,
        detail,
    });
    Ok(b.finish())
}

pub fn cycmap(field: u64, modulus: &str, bound: usize, cap: u128) -> Result<Report, Failure> {
    let pair = modulus_pair(field, modulus)?;
    let mut b = Builder::new("cycmap");
    let r = b.timed("cycmap", || cycles::cycle_map_check_capped(&pair, bound, cap))?;
    let pass = r.pass();
    b.push(Check {
        id: format!("cycmap:{pair}:bound{bound}"),
        anchor: "cyc: CH_0(X|D) ↠ K_0(X, D) is well defined and surjective".into(),
        instance: digest(&json!({ "pair": pair, "bound": bound })),
        pass,
        witness: (!pass).then(|| json!({ "field": field, "modulus": modulus, "bound": bound })),
        detail: serde_json::to_value(&r).expect("serializable"),
    });
    Ok(b.finish())
}

fn transfer_check(id: String, pair: &ModulusPair, alg: &FiniteFreeAlgebra, m: &AlgMatrix) -> Result<Check, Failure> {
    let r = cycles::transfer_finite(alg, m, pair)?;
    let g = pair.group();
    let b = pair.surjection().target();
    let pass = r.norm_compatible();
    let inst = json!({ "pair": pair, "algebra": alg, "matrix": m });
    Ok(Check {
        id,
        anchor: "det(restriction of T) = N_{S/A}(det T)".into(),
        instance: digest(&inst),
        pass,
        witness: (!pass).then(|| inst.clone()),
        detail: json!({
            "rank": r.triple.phi().rows(),
            "det": r.det.iter().map(|c| c.coeffs().to_vec()).collect::<Vec<_>>(),
            "norm": b.format_elem(&r.norm),
            "transfer_det": b.format_elem(&r.transfer_det),
            "class": fmt_class(g, &r.class),
        }),
    })
}

pub struct RandomArgs<'a> {
    pub field: Option<u64>,
    pub modulus: Option<&'a str>,
    pub seed: u64,
    pub count: usize,
}

fn pair_from(inst: Option<&Resolved>, args: &RandomArgs) -> Result<ModulusPair, Failure> {
    match (args.field, args.modulus) {
        (Some(f), Some(m)) => modulus_pair(f, m),
        (None, None) => inst
            .and_then(|i| i.modulus.clone())
            .ok_or_else(|| Failure::invalid("modulus: give --field and --modulus or an instance with `modulus`")),
        _ => Err(Failure::invalid("--field and --modulus go together")),
    }
}

pub fn transfer(path: Option<&Path>, args: &RandomArgs) -> Result<Report, Failure> {
    let inst = path.map(instance::load).transpose()?;
    let pair = pair_from(inst.as_ref(), args)?;
    let mut b = Builder::new("transfer");
    match inst.as_ref().filter(|i| !i.algebra_matrices.is_empty()) {
        Some(i) => {
            let alg = i.algebra.as_ref().expect("validated with the instance");
            for (name, m) in &i.algebra_matrices {
                let c = b.timed(name, || transfer_check(format!("transfer:{name}"), &pair, alg, m))?;
                b.push(c);
            }
        }
        None => {
            let seed = inst.as_ref().and_then(|i| i.seed).unwrap_or(args.seed);
            let checks = b.timed("transfer", || {
                (0..args.count)
                    .map(|i| {
                        let mut rng = ChaCha8Rng::seed_from_u64(instance_seed(seed, i));
                        let (alg, m) = cycles::random_transfer_instance(&pair, &mut rng);
                        transfer_check(format!("transfer:{i:05}"), &pair, &alg, &m)
                    })
                    .collect::<Result<Vec<_>, _>>()
            })?;
            checks.into_iter().for_each(|c| b.push(c));
        }
    }
    Ok(b.finish())
}

fn locus_check(id: String, pair: &ModulusPair, t: &RelTriple) -> Result<Check, Failure> {
    let loc = cycles::trivializing_locus(t, pair)?;
    let pass = loc.verify(pair)?;
    Ok(Check {
        id,
        anchor: "the class is trivialized off finitely many closed points".into(),
        instance: digest(t),
        pass,
        witness: (!pass).then(|| json!({ "triple": t })),
        detail: json!({
            "points": loc.points.iter().map(|g| g.display("t")).collect::<Vec<_>>(),
            "lifted_det": loc.lifted_det.display("t"),
            "cycle": loc.cycle.to_string(),
            "class": fmt_class(pair.group(), &loc.class),
        }),
    })
}

pub fn locus(path: Option<&Path>, args: &RandomArgs) -> Result<Report, Failure> {
    let inst = path.map(instance::load).transpose()?;
    let pair = pair_from(inst.as_ref(), args)?;
    let mut b = Builder::new("locus");
    match inst.as_ref().filter(|i| !i.triples.is_empty()) {
        Some(i) => {
            if i.surjection.as_ref() != Some(pair.surjection()) {
                return Err(Failure::invalid(format!("surjection: triples must be over {pair}")));
            }
            for (name, t) in &i.triples {
                let t = match t {
                    Triple::Complex(r) => r.clone(),
                    Triple::Degreewise(d) => embed(d),
                };
                let c = b.timed(name, || locus_check(format!("locus:{name}"), &pair, &t))?;
                b.push(c);
            }
        }
        None => {
            let seed = inst.as_ref().and_then(|i| i.seed).unwrap_or(args.seed);
            let checks = b.timed("locus", || {
                (0..args.count)
                    .map(|i| {
                        let mut rng = ChaCha8Rng::seed_from_u64(instance_seed(seed, i));
                        let (t, _) = random_rel_triple(pair.surjection(), &GenOptions::default(), &mut rng)?;
                        locus_check(format!("locus:{i:05}"), &pair, &t)
                    })
                    .collect::<Result<Vec<_>, Failure>>()
            })?;
            checks.into_iter().for_each(|c| b.push(c));
        }
    }
    Ok(b.finish())
}
