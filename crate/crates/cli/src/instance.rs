//! Instance files: named matrices, complexes and triples over one
//! surjection, plus an optional modulus pair and finite free algebra.
//! Everything is resolved and validated before any computation runs.

use crate::fail::Failure;
use relk::complexes::{BoundedComplex, ChainMap};
use relk::cycles::{AlgMatrix, FiniteFreeAlgebra, ModulusPair};
use relk::relk0::{DegreewiseTriple, RelTriple};
use relk::rings::{Matrix, RingTower, Surjection};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::Path;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceFile {
    pub schema_version: u32,
    #[serde(default)]
    pub surjection: Option<String>,
    #[serde(default)]
    pub matrices: BTreeMap<String, MatrixDef>,
    #[serde(default)]
    pub complexes: BTreeMap<String, ComplexDef>,
    #[serde(default)]
    pub triples: BTreeMap<String, TripleDef>,
    #[serde(default)]
    pub modulus: Option<ModulusDef>,
    #[serde(default)]
    pub algebra: Option<AlgebraDef>,
    #[serde(default)]
    pub algebra_matrices: BTreeMap<String, AlgMatrix>,
    #[serde(default)]
    pub seed: Option<u64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Source,
    Target,
}

/// Row-major entries over the source or target ring of the surjection.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixDef {
    pub over: Side,
    pub rows: Vec<Vec<serde_json::Value>>,
    /// Needed only when there are no rows.
    #[serde(default)]
    pub cols: Option<usize>,
}

/// A complex over the source ring; `diffs[k]` names `d_{lo+k+1}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComplexDef {
    pub lo: i64,
    pub ranks: Vec<usize>,
    #[serde(default)]
    pub diffs: Vec<String>,
}

/// A chain map over the target ring; `components[k]` names `α_{lo+k}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapDef {
    pub lo: i64,
    pub components: Vec<String>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum TripleDef {
    Degreewise { phi: String },
    Complex { p: String, q: String, alpha: MapDef },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModulusDef {
    pub field: u64,
    pub modulus: Vec<u64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlgebraDef {
    pub field: u64,
    pub relation: Vec<Vec<u64>>,
}

#[derive(Clone, Debug)]
pub enum Triple {
    Degreewise(DegreewiseTriple),
    Complex(RelTriple),
}

/// A fully validated instance.
#[derive(Clone, Debug)]
pub struct Resolved {
    pub surjection: Option<Surjection>,
    pub triples: BTreeMap<String, Triple>,
    pub modulus: Option<ModulusPair>,
    pub algebra: Option<FiniteFreeAlgebra>,
    pub algebra_matrices: BTreeMap<String, AlgMatrix>,
    pub seed: Option<u64>,
}

pub fn load(path: &Path) -> Result<Resolved, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure::invalid(format!("{}: {e}", path.display())))?;
    let file: InstanceFile =
        serde_json::from_str(&text).map_err(|e| Failure::invalid(format!("{}: {e}", path.display())))?;
    resolve(&file).map_err(|f| f.prefixed(&path.display().to_string()))
}

fn at<T>(loc: &str, r: relk::Result<T>) -> Result<T, Failure> {
    r.map_err(|e| Failure::from_lib(e).prefixed(loc))
}

fn lookup<'a, T>(map: &'a BTreeMap<String, T>, what: &str, name: &str, loc: &str) -> Result<&'a T, Failure> {
    map.get(name).ok_or_else(|| Failure::invalid(format!("{loc}: unknown {what} `{name}`")))
}

pub fn resolve(file: &InstanceFile) -> Result<Resolved, Failure> {
    if file.schema_version != SCHEMA_VERSION {
        return Err(Failure::invalid(format!(
            "schema_version: expected {SCHEMA_VERSION}, found {}",
            file.schema_version
        )));
    }
    let surjection = match &file.surjection {
        Some(s) => Some(at("surjection", Surjection::parse(s))?),
        None => None,
    };
    let needs_surjection = !file.matrices.is_empty() || !file.complexes.is_empty() || !file.triples.is_empty();
    let surj = match (&surjection, needs_surjection) {
        (Some(s), _) => Some(s),
        (None, true) => return Err(Failure::invalid("surjection: required by matrices, complexes and triples")),
        (None, false) => None,
    };
    let mut matrices = BTreeMap::new();
    if let Some(s) = surj {
        for (name, def) in &file.matrices {
            let loc = format!("matrices.{name}");
            let ring = match def.over {
                Side::Source => s.source(),
                Side::Target => s.target(),
            };
            matrices.insert(name.clone(), matrix(ring, def, &loc)?);
        }
    }
    let mut complexes = BTreeMap::new();
    if let Some(s) = surj {
        for (name, def) in &file.complexes {
            let loc = format!("complexes.{name}");
            let diffs = def
                .diffs
                .iter()
                .enumerate()
                .map(|(k, d)| {
                    let m: &Matrix = lookup(&matrices, "matrix", d, &format!("{loc}.diffs[{k}]"))?;
                    if m.ring() != s.source() {
                        return Err(Failure::invalid(format!("{loc}.diffs[{k}]: `{d}` is not over the source ring")));
                    }
                    Ok(m.clone())
                })
                .collect::<Result<Vec<_>, _>>()?;
            complexes
                .insert(name.clone(), at(&loc, BoundedComplex::new(s.source(), def.lo, def.ranks.clone(), diffs))?);
        }
    }
    let mut triples = BTreeMap::new();
    if let Some(s) = surj {
        for (name, def) in &file.triples {
            let loc = format!("triples.{name}");
            let t = match def {
                TripleDef::Degreewise { phi } => {
                    let m = lookup(&matrices, "matrix", phi, &format!("{loc}.degreewise.phi"))?;
                    Triple::Degreewise(at(&loc, DegreewiseTriple::new(s, m))?)
                }
                TripleDef::Complex { p, q, alpha } => {
                    let p = lookup(&complexes, "complex", p, &format!("{loc}.complex.p"))?;
                    let q = lookup(&complexes, "complex", q, &format!("{loc}.complex.q"))?;
                    let comps = alpha
                        .components
                        .iter()
                        .enumerate()
                        .map(|(k, c)| {
                            lookup(&matrices, "matrix", c, &format!("{loc}.complex.alpha.components[{k}]")).cloned()
                        })
                        .collect::<Result<Vec<_>, _>>()?;
                    let (pb, qb) = (p.reduce(s), q.reduce(s));
                    let lo = alpha.lo;
                    let b = s.target().clone();
                    let a = at(
                        &format!("{loc}.complex.alpha"),
                        ChainMap::new(&pb, &qb, |n| {
                            let k = n - lo;
                            if k >= 0 && (k as usize) < comps.len() {
                                comps[k as usize].clone()
                            } else {
                                Matrix::zero(&b, qb.rank(n), pb.rank(n))
                            }
                        }),
                    )?;
                    Triple::Complex(at(&loc, RelTriple::from_map(s, p, q, &a))?)
                }
            };
            triples.insert(name.clone(), t);
        }
    }
    let modulus = match &file.modulus {
        Some(m) => {
            let f = relk::rings::FpPoly::new(m.modulus.clone(), m.field.max(2));
            Some(at("modulus", ModulusPair::new(m.field, f))?)
        }
        None => None,
    };
    let algebra = match &file.algebra {
        Some(a) => {
            let rel = a.relation.iter().map(|c| relk::rings::FpPoly::new(c.clone(), a.field.max(2))).collect();
            Some(at("algebra", FiniteFreeAlgebra::new(a.field, rel))?)
        }
        None => None,
    };
    if !file.algebra_matrices.is_empty() && (algebra.is_none() || modulus.is_none()) {
        return Err(Failure::invalid("algebra_matrices: need both `algebra` and `modulus`"));
    }
    Ok(Resolved {
        surjection,
        triples,
        modulus,
        algebra,
        algebra_matrices: file.algebra_matrices.clone(),
        seed: file.seed,
    })
}

fn matrix(ring: &RingTower, def: &MatrixDef, loc: &str) -> Result<Matrix, Failure> {
    let rows = def.rows.len();
    let cols = def.rows.first().map(Vec::len).or(def.cols).unwrap_or(0);
    let mut data = Vec::with_capacity(rows * cols);
    for (i, row) in def.rows.iter().enumerate() {
        if row.len() != cols {
            return Err(Failure::invalid(format!("{loc}.rows[{i}]: expected {cols} entries, found {}", row.len())));
        }
        for (j, v) in row.iter().enumerate() {
            data.push(at(&format!("{loc}.rows[{i}][{j}]"), ring.elem_from_json(v))?);
        }
    }
    at(loc, Matrix::new(ring, rows, cols, data))
}
