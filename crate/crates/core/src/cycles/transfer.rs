//! Transfer along a finite free algebra `A → S = A[y]/(m)`: restriction of
//! scalars turns an automorphism of `(S/fS)^n` into one of `(A/f)^{n·rank}`.

use super::ModulusPair;
use crate::error::{Error, Result};
use crate::relk0::{ClassInvariant, DegreewiseTriple, K0Class};
use crate::rings::matrix::{det_division_free, CommRing};
use crate::rings::{Elem, FpPoly, Matrix};
use rand::Rng;
use serde::{Deserialize, Serialize};

/// `S = F_p[t][y]/(m)` with `m` monic in `y`, free over `F_p[t]` on
/// `1, y, …, y^{r-1}`. `relation` lists the coefficients of `m` in `y`,
/// lowest first, each a polynomial in `t`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "AlgebraWire", into = "AlgebraWire")]
pub struct FiniteFreeAlgebra {
    p: u64,
    relation: Vec<FpPoly>,
}

#[derive(Serialize, Deserialize)]
struct AlgebraWire {
    field: u64,
    relation: Vec<Vec<u64>>,
}

impl TryFrom<AlgebraWire> for FiniteFreeAlgebra {
    type Error = Error;
    fn try_from(w: AlgebraWire) -> Result<Self> {
        let p = w.field.max(2);
        FiniteFreeAlgebra::new(w.field, w.relation.into_iter().map(|c| FpPoly::new(c, p)).collect())
    }
}

impl From<FiniteFreeAlgebra> for AlgebraWire {
    fn from(a: FiniteFreeAlgebra) -> Self {
        AlgebraWire { field: a.p, relation: a.relation.iter().map(|c| c.coeffs().to_vec()).collect() }
    }
}

impl FiniteFreeAlgebra {
    pub fn new(p: u64, relation: Vec<FpPoly>) -> Result<Self> {
        if !crate::rings::poly::is_prime(p) {
            return Err(Error::usage(format!("field size {p} is not a prime")));
        }
        if relation.len() < 2 || !relation.last().unwrap().is_one() {
            return Err(Error::usage("the defining equation must be monic of degree at least 1 in y"));
        }
        Ok(FiniteFreeAlgebra { p, relation })
    }

    /// `F_p[t]` itself, as `A[y]/(y)`.
    pub fn trivial(p: u64) -> Result<Self> {
        Self::new(p, vec![FpPoly::zero(), FpPoly::one()])
    }

    pub fn rank(&self) -> usize {
        self.relation.len() - 1
    }

    pub fn field(&self) -> u64 {
        self.p
    }

    /// The generator `y` (or `-m(0)` when the rank is one).
    pub fn gen(&self) -> Vec<FpPoly> {
        self.reduce(&[FpPoly::zero(), FpPoly::one()], None)
    }

    /// Reduce a polynomial in `y` (coefficients in `t`) modulo `m` and,
    /// when given, each coefficient modulo `f`.
    pub fn reduce(&self, x: &[FpPoly], f: Option<&FpPoly>) -> Vec<FpPoly> {
        let p = self.p;
        let r = self.rank();
        let mut v: Vec<FpPoly> = x.to_vec();
        while v.len() > r {
            let top = v.pop().unwrap();
            let shift = v.len() - r;
            for (k, c) in self.relation[..r].iter().enumerate() {
                v[shift + k] = v[shift + k].sub(&top.mul(c, p), p);
            }
        }
        v.resize(r, FpPoly::zero());
        if let Some(f) = f {
            for c in v.iter_mut() {
                *c = c.rem(f, p);
            }
        }
        v
    }

    fn mul(&self, a: &[FpPoly], b: &[FpPoly], f: &FpPoly) -> Vec<FpPoly> {
        let p = self.p;
        let mut prod = vec![FpPoly::zero(); a.len() + b.len()];
        for (i, x) in a.iter().enumerate() {
            for (j, y) in b.iter().enumerate() {
                prod[i + j] = prod[i + j].add(&x.mul(y, p), p);
            }
        }
        self.reduce(&prod, Some(f))
    }

    /// Matrix over `A/f` of multiplication by `a` on `S/fS`.
    pub fn mult_matrix(&self, a: &[FpPoly], pair: &ModulusPair) -> Matrix {
        let b = pair.surjection().target();
        let r = self.rank();
        let f = pair.modulus();
        let mut col = self.reduce(a, Some(f));
        let mut m = Matrix::zero(b, r, r);
        for j in 0..r {
            for (i, c) in col.iter().enumerate() {
                m.set(i, j, b.from_poly(c.clone()));
            }
            col = self.mul(&col, &[FpPoly::zero(), FpPoly::one()], f);
        }
        m
    }

    /// `N(a) = det(multiplication by a)` in `A/f`.
    pub fn norm(&self, a: &[FpPoly], pair: &ModulusPair) -> Result<Elem> {
        self.mult_matrix(a, pair).det()
    }

    pub fn is_unit(&self, a: &[FpPoly], pair: &ModulusPair) -> Result<bool> {
        Ok(pair.surjection().target().is_unit(&self.norm(a, pair)?))
    }
}

/// `S/fS` as a ring for the division-free determinant.
struct Residue<'a> {
    alg: &'a FiniteFreeAlgebra,
    f: &'a FpPoly,
}

impl CommRing for Residue<'_> {
    type El = Vec<FpPoly>;
    fn zero(&self) -> Self::El {
        vec![FpPoly::zero(); self.alg.rank()]
    }
    fn one(&self) -> Self::El {
        self.alg.reduce(&[FpPoly::one()], Some(self.f))
    }
    fn add(&self, a: &Self::El, b: &Self::El) -> Self::El {
        a.iter().zip(b).map(|(x, y)| x.add(y, self.alg.p).rem(self.f, self.alg.p)).collect()
    }
    fn mul(&self, a: &Self::El, b: &Self::El) -> Self::El {
        self.alg.mul(a, b, self.f)
    }
    fn neg(&self, a: &Self::El) -> Self::El {
        a.iter().map(|x| x.neg(self.alg.p)).collect()
    }
}

/// A square matrix over `S/fS`; each entry lists its coordinates on
/// `1, y, …`, each a coefficient list in `t`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AlgMatrix {
    pub entries: Vec<Vec<Vec<Vec<u64>>>>,
}

impl AlgMatrix {
    pub fn size(&self) -> usize {
        self.entries.len()
    }

    fn decode(&self, alg: &FiniteFreeAlgebra, f: &FpPoly) -> Result<Vec<Vec<Vec<FpPoly>>>> {
        let n = self.entries.len();
        self.entries
            .iter()
            .map(|row| {
                if row.len() != n {
                    return Err(Error::usage("matrix over the algebra is not square"));
                }
                Ok(row
                    .iter()
                    .map(|e| {
                        let coords: Vec<FpPoly> = e.iter().map(|c| FpPoly::new(c.clone(), alg.p)).collect();
                        alg.reduce(&coords, Some(f))
                    })
                    .collect())
            })
            .collect()
    }

    fn encode(m: &[Vec<Vec<FpPoly>>]) -> Self {
        AlgMatrix {
            entries: m
                .iter()
                .map(|row| row.iter().map(|e| e.iter().map(|c| c.coeffs().to_vec()).collect()).collect())
                .collect(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct TransferReport {
    pub triple: DegreewiseTriple,
    /// `det T` in `S/fS`.
    pub det: Vec<FpPoly>,
    /// Norm of `det T` down to `A/f`.
    pub norm: Elem,
    /// `det` of the restricted matrix.
    pub transfer_det: Elem,
    pub class: K0Class,
    pub norm_class: K0Class,
}

impl TransferReport {
    pub fn norm_compatible(&self) -> bool {
        self.norm == self.transfer_det && self.class == self.norm_class
    }
}

/// Restriction of scalars of `(S^n, T, S^n)` to `(A^{n·r}, T_A, A^{n·r})`.
pub fn transfer_finite(alg: &FiniteFreeAlgebra, t: &AlgMatrix, pair: &ModulusPair) -> Result<TransferReport> {
    if alg.p != pair.field() {
        return Err(Error::usage(format!("algebra over F{}, modulus over F{}", alg.p, pair.field())));
    }
    let f = pair.modulus();
    let m = t.decode(alg, f)?;
    let n = m.len();
    let r = alg.rank();
    let det = det_division_free(&Residue { alg, f }, &m);
    if !alg.is_unit(&det, pair)? {
        return Err(Error::usage("matrix over the algebra is not invertible modulo f"));
    }
    let b = pair.surjection().target();
    let mut big = Matrix::zero(b, n * r, n * r);
    for (i, row) in m.iter().enumerate() {
        for (j, e) in row.iter().enumerate() {
            big.set_block(i * r, j * r, &alg.mult_matrix(e, pair));
        }
    }
    let triple = DegreewiseTriple::new(pair.surjection(), &big)?;
    let group = pair.group();
    let norm = alg.norm(&det, pair)?;
    let transfer_det = big.det()?;
    let class = triple.class_in(group)?;
    let norm_class = group.project(&norm)?;
    Ok(TransferReport { triple, det, norm, transfer_det, class, norm_class })
}

fn random_residue<R: Rng + ?Sized>(alg: &FiniteFreeAlgebra, pair: &ModulusPair, rng: &mut R) -> Vec<FpPoly> {
    let deg = pair.modulus().degree().unwrap();
    (0..alg.rank()).map(|_| FpPoly::new((0..deg).map(|_| rng.gen_range(0..alg.p)).collect(), alg.p)).collect()
}

/// A random quadratic algebra `A[y]/(y² + a y + b)` and a random invertible
/// matrix over `S/fS` of size one or two: a diagonal of units times a few
/// transvections.
pub fn random_transfer_instance<R: Rng + ?Sized>(pair: &ModulusPair, rng: &mut R) -> (FiniteFreeAlgebra, AlgMatrix) {
    let p = pair.field();
    let a = pair.ring();
    let coef = |rng: &mut R| a.random_elem(rng).as_poly().clone();
    let alg = FiniteFreeAlgebra::new(p, vec![coef(rng), coef(rng), FpPoly::one()]).expect("monic quadratic");
    let f = pair.modulus();
    let ring = Residue { alg: &alg, f };
    let n = rng.gen_range(1..=2usize);
    let mut m: Vec<Vec<Vec<FpPoly>>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    if i != j {
                        return ring.zero();
                    }
                    loop {
                        let u = random_residue(&alg, pair, rng);
                        if alg.is_unit(&u, pair).unwrap() {
                            break u;
                        }
                    }
                })
                .collect()
        })
        .collect();
    if n == 2 {
        for _ in 0..3 {
            // row i += c · row j
            let (i, j) = if rng.gen_bool(0.5) { (0, 1) } else { (1, 0) };
            let c = random_residue(&alg, pair, rng);
            let add: Vec<Vec<FpPoly>> = m[j].iter().map(|e| ring.mul(&c, e)).collect();
            for (k, e) in add.into_iter().enumerate() {
                m[i][k] = ring.add(&m[i][k], &e);
            }
        }
    }
    (alg, AlgMatrix::encode(&m))
}
