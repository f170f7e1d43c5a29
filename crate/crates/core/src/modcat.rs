//! The split exact category of finite free modules: kernels of split
//! surjections, elementary automorphisms and their commutator witnesses.

use crate::error::{Error, Result};
use crate::rings::{Elem, Matrix, RingTower};
use rand::Rng;
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FreeModule {
    pub ring: RingTower,
    pub rank: usize,
}

impl FreeModule {
    pub fn new(ring: &RingTower, rank: usize) -> Self {
        FreeModule { ring: ring.clone(), rank }
    }

    pub fn direct_sum(&self, other: &FreeModule) -> FreeModule {
        assert_eq!(self.ring, other.ring);
        FreeModule::new(&self.ring, self.rank + other.rank)
    }

    pub fn identity(&self) -> Matrix {
        Matrix::identity(&self.ring, self.rank)
    }
}

/// `I + a e_{ij}` of size `n`.
pub fn transvection(ring: &RingTower, n: usize, i: usize, j: usize, a: &Elem) -> Matrix {
    assert_ne!(i, j, "transvection needs distinct indices");
    let mut m = Matrix::identity(ring, n);
    m.set(i, j, a.clone());
    m
}

/// A random invertible matrix together with its inverse.
pub fn random_gl<R: Rng + ?Sized>(ring: &RingTower, n: usize, rng: &mut R) -> (Matrix, Matrix) {
    let mut g = Matrix::identity(ring, n);
    let mut g_inv = Matrix::identity(ring, n);
    if n == 0 {
        return (g, g_inv);
    }
    let diag: Vec<Elem> = (0..n).map(|_| ring.random_unit(rng)).collect();
    let diag_inv: Vec<Elem> = diag.iter().map(|u| ring.inv(u).unwrap()).collect();
    g = Matrix::diagonal(ring, &diag);
    g_inv = Matrix::diagonal(ring, &diag_inv).mul(&g_inv);
    if n > 1 {
        for _ in 0..2 * n {
            let i = rng.gen_range(0..n);
            let mut j = rng.gen_range(0..n - 1);
            if j >= i {
                j += 1;
            }
            let a = ring.random_elem(rng);
            g = g.mul(&transvection(ring, n, i, j, &a));
            g_inv = transvection(ring, n, i, j, &ring.neg(&a)).mul(&g_inv);
        }
    }
    (g, g_inv)
}

#[derive(Clone, Debug)]
enum RowOp {
    // row_i += c * row_j
    Add(usize, usize, Elem),
    // row_i *= u
    Scale(usize, Elem),
}

/// Row reduction that logs every operation so the transform and its inverse
/// can be rebuilt.
struct RowReducer {
    ring: RingTower,
    w: Matrix,
    ops: Vec<RowOp>,
}

fn euclid_size(e: &Elem) -> (usize, num_bigint::BigUint) {
    match e {
        Elem::Int(x) => (0, x.magnitude().clone()),
        Elem::Poly(f) => (f.coeffs().len(), Default::default()),
        Elem::Res(r) => (0, (*r).into()),
    }
}

impl RowReducer {
    fn new(w: Matrix) -> Self {
        RowReducer { ring: w.ring().clone(), w, ops: Vec::new() }
    }

    fn apply(m: &mut Matrix, op: &RowOp) {
        let r = m.ring().clone();
        match op {
            RowOp::Add(i, j, c) => {
                for col in 0..m.cols() {
                    let v = r.add(m.get(*i, col), &r.mul(c, m.get(*j, col)));
                    m.set(*i, col, v);
                }
            }
            RowOp::Scale(i, u) => {
                for col in 0..m.cols() {
                    let v = r.mul(u, m.get(*i, col));
                    m.set(*i, col, v);
                }
            }
        }
    }

    fn op(&mut self, op: RowOp) {
        if let RowOp::Add(_, _, c) = &op {
            if self.ring.is_zero(c) {
                return;
            }
        }
        Self::apply(&mut self.w, &op);
        self.ops.push(op);
    }

    fn add(&mut self, i: usize, j: usize, c: Elem) {
        self.op(RowOp::Add(i, j, c));
    }

    // moves row i to row k and -row k to row i, using transvections only
    fn swap(&mut self, k: usize, i: usize) {
        let (one, m1) = (self.ring.one(), self.ring.from_i64(-1));
        self.add(k, i, one.clone());
        self.add(i, k, m1);
        self.add(k, i, one);
    }

    fn at(&self, i: usize, j: usize) -> &Elem {
        self.w.get(i, j)
    }

    /// Make `w[k][k]` a unit using rows `k..`; false when no strategy applies.
    fn unit_pivot(&mut self, k: usize) -> bool {
        let r = self.ring.clone();
        if r.is_unit(self.at(k, k)) {
            return true;
        }
        let rows = self.w.rows();
        if let Some(i) = (k + 1..rows).find(|&i| r.is_unit(self.at(i, k))) {
            if r.is_unit(&r.add(self.at(k, k), self.at(i, k))) {
                self.add(k, i, r.one());
            } else {
                self.swap(k, i);
            }
            return true;
        }
        if r.is_infinite_euclidean() {
            loop {
                let nonzero: Vec<usize> = (k..rows).filter(|&i| !r.is_zero(self.at(i, k))).collect();
                let Some(&best) = nonzero.iter().min_by_key(|&&i| euclid_size(self.at(i, k))) else {
                    return false;
                };
                if best != k {
                    self.swap(k, best);
                }
                if nonzero.len() == 1 {
                    break;
                }
                for i in k + 1..rows {
                    if r.is_zero(self.at(i, k)) {
                        continue;
                    }
                    let (q, _) = r.div_mod(self.at(i, k), self.at(k, k)).expect("euclidean");
                    self.add(i, k, r.neg(&q));
                }
            }
            return r.is_unit(self.at(k, k));
        }
        if let Ok(els) = r.elements() {
            for i in k + 1..rows {
                for c in &els {
                    if r.is_unit(&r.add(self.at(k, k), &r.mul(c, self.at(i, k)))) {
                        self.add(k, i, c.clone());
                        return true;
                    }
                }
            }
        }
        false
    }

    /// Clear column `k` outside the pivot row.
    fn clear_column(&mut self, k: usize) {
        let r = self.ring.clone();
        let piv_inv = r.inv(self.at(k, k)).expect("unit pivot");
        for i in 0..self.w.rows() {
            if i != k && !r.is_zero(self.at(i, k)) {
                let c = r.neg(&r.mul(self.at(i, k), &piv_inv));
                self.add(i, k, c);
            }
        }
    }

    /// `L` with `L * original = w`.
    fn transform(&self) -> Matrix {
        let mut m = Matrix::identity(&self.ring, self.w.rows());
        for op in &self.ops {
            Self::apply(&mut m, op);
        }
        m
    }

    /// `L^{-1}`, built by applying inverse column operations in order.
    fn transform_inv(&self) -> Matrix {
        let r = &self.ring;
        let mut m = Matrix::identity(r, self.w.rows());
        for op in &self.ops {
            match op {
                RowOp::Add(i, j, c) => {
                    for row in 0..m.rows() {
                        let v = r.sub(m.get(row, *j), &r.mul(c, m.get(row, *i)));
                        m.set(row, *j, v);
                    }
                }
                RowOp::Scale(i, u) => {
                    let ui = r.inv(u).unwrap();
                    for row in 0..m.rows() {
                        let v = r.mul(m.get(row, *i), &ui);
                        m.set(row, *i, v);
                    }
                }
            }
        }
        m
    }
}

/// Output of [`kernel_of_surjection`]: the source splits as `K ⊕ target`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct KernelSplit {
    pub kernel: FreeModule,
    /// `K → source`
    pub incl: Matrix,
    /// `source → K`
    pub proj: Matrix,
    /// `target → source` with `g * section = 1`
    pub section: Matrix,
}

impl KernelSplit {
    /// `section g + incl proj = 1`, `g incl = 0`, `proj incl = 1`, `g section = 1`.
    pub fn verify(&self, g: &Matrix) -> bool {
        let n = g.cols();
        let r = g.ring();
        g.mul(&self.incl).is_zero()
            && g.mul(&self.section).is_identity()
            && self.proj.mul(&self.incl).is_identity()
            && self.section.mul(g).add(&self.incl.mul(&self.proj)) == Matrix::identity(r, n)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum NotSplit {
    /// A vector of the target outside the image.
    NotSurjective { missing: Vec<Elem> },
    /// Surjective, but elimination found no unit pivot in this row.
    Stalled { row: usize },
}

impl std::fmt::Display for NotSplit {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            NotSplit::NotSurjective { missing } => write!(f, "not surjective: {missing:?} is not in the image"),
            NotSplit::Stalled { row } => write!(f, "no unit pivot found in row {row}"),
        }
    }
}

/// Kernel and section of a surjection `g: A^n → A^m` (an `m x n` matrix).
pub fn kernel_of_surjection(g: &Matrix) -> std::result::Result<KernelSplit, NotSplit> {
    let ring = g.ring().clone();
    let (m, n) = g.shape();
    let not_surjective = || {
        for i in 0..m {
            let e: Vec<Elem> = (0..m).map(|k| if k == i { ring.one() } else { ring.zero() }).collect();
            if crate::rings::linalg::solve_linear(g, &e).expect("shapes agree").is_none() {
                return NotSplit::NotSurjective { missing: e };
            }
        }
        unreachable!("surjective matrix reported as non-surjective")
    };
    if n < m {
        return Err(not_surjective());
    }
    // column operations on g are row operations on its transpose
    let mut red = RowReducer::new(g.transpose());
    for k in 0..m {
        if !red.unit_pivot(k) {
            let surjective =
                crate::rings::linalg::solve_matrix(g, &Matrix::identity(&ring, m)).expect("shapes agree").is_some();
            return Err(if surjective { NotSplit::Stalled { row: k } } else { not_surjective() });
        }
        red.clear_column(k);
        let u = ring.inv(red.at(k, k)).unwrap();
        red.op(RowOp::Scale(k, u));
    }
    // L g^T = [I; 0], so g C = [I 0] with C = L^T
    let c = red.transform().transpose();
    let c_inv = red.transform_inv().transpose();
    let split = KernelSplit {
        kernel: FreeModule::new(&ring, n - m),
        incl: c.block(0, m, n, n - m),
        proj: c_inv.block(m, 0, n - m, n),
        section: c.block(0, 0, n, m),
    };
    debug_assert!(split.verify(g));
    Ok(split)
}

/// `I + E` where `E` is `block` placed at rows `upper`, columns `lower`
/// (disjoint index sets), an elementary automorphism of `A^size`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ElementaryFactor {
    pub size: usize,
    pub upper: Vec<usize>,
    pub lower: Vec<usize>,
    pub block: Matrix,
}

impl ElementaryFactor {
    pub fn transvection(ring: &RingTower, size: usize, i: usize, j: usize, a: Elem) -> Self {
        ElementaryFactor { size, upper: vec![i], lower: vec![j], block: Matrix::from_fn(ring, 1, 1, |_, _| a.clone()) }
    }

    pub fn is_well_formed(&self) -> bool {
        self.block.shape() == (self.upper.len(), self.lower.len())
            && self.upper.iter().all(|i| *i < self.size && !self.lower.contains(i))
            && self.lower.iter().all(|j| *j < self.size)
    }

    pub fn matrix(&self) -> Matrix {
        let r = self.block.ring();
        let mut m = Matrix::identity(r, self.size);
        for (a, &i) in self.upper.iter().enumerate() {
            for (b, &j) in self.lower.iter().enumerate() {
                m.set(i, j, r.add(m.get(i, j), self.block.get(a, b)));
            }
        }
        m
    }

    pub fn inverse(&self) -> ElementaryFactor {
        ElementaryFactor { block: self.block.neg(), ..self.clone() }
    }
}

/// A product of elementary factors, read left to right.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ElementaryWitness {
    pub ring: RingTower,
    pub size: usize,
    pub factors: Vec<ElementaryFactor>,
}

impl ElementaryWitness {
    pub fn product(&self) -> Matrix {
        self.factors.iter().fold(Matrix::identity(&self.ring, self.size), |acc, f| acc.mul(&f.matrix()))
    }

    /// Every factor is well formed with determinant 1, and the product is `alpha`.
    pub fn verify(&self, alpha: &Matrix) -> bool {
        self.factors.iter().all(|f| f.is_well_formed() && f.matrix().det().is_ok_and(|d| self.ring.is_one(&d)))
            && self.product() == *alpha
    }

    fn merge_adjacent(&mut self) {
        let mut out: Vec<ElementaryFactor> = Vec::new();
        for f in self.factors.drain(..) {
            match out.last_mut() {
                Some(last) if last.upper == f.upper && last.lower == f.lower => {
                    last.block = last.block.add(&f.block);
                    if last.block.is_zero() {
                        out.pop();
                    }
                }
                _ => out.push(f),
            }
        }
        self.factors = out;
    }
}

/// Write a determinant-one matrix as a product of transvections: elimination
/// with unit pivots, then four-step reduction of the diagonal. `Ok(None)`
/// when no unit pivot can be produced.
pub fn elementary_decompose(alpha: &Matrix) -> Result<Option<ElementaryWitness>> {
    let ring = alpha.ring().clone();
    if !alpha.is_square() {
        return Err(Error::usage("elementary_decompose: matrix is not square"));
    }
    let det = alpha.det()?;
    if !ring.is_one(&det) {
        return Err(Error::usage(format!("elementary_decompose: determinant is {}, not 1", ring.format_elem(&det))));
    }
    let n = alpha.rows();
    let mut red = RowReducer::new(alpha.clone());
    for k in 0..n {
        if !red.unit_pivot(k) {
            return Ok(None);
        }
        red.clear_column(k);
    }
    for k in 0..n.saturating_sub(1) {
        let u = red.at(k, k).clone();
        if ring.is_one(&u) {
            continue;
        }
        let v = red.at(k + 1, k + 1).clone();
        let u_inv = ring.inv(&u).unwrap();
        let one = ring.one();
        red.add(k + 1, k, one.clone());
        red.add(k, k + 1, ring.mul(&ring.sub(&one, &u), &u_inv));
        red.add(k + 1, k, ring.neg(&u));
        let x = red.at(k, k + 1).clone();
        let uv_inv = ring.inv(&ring.mul(&u, &v)).unwrap();
        red.add(k, k + 1, ring.neg(&ring.mul(&x, &uv_inv)));
    }
    debug_assert!(red.w.is_identity());
    let factors = red
        .ops
        .iter()
        .map(|op| match op {
            RowOp::Add(i, j, c) => ElementaryFactor::transvection(&ring, n, *i, *j, ring.neg(c)),
            RowOp::Scale(..) => unreachable!("no scaling in the determinant-one path"),
        })
        .collect();
    let mut w = ElementaryWitness { ring, size: n, factors };
    w.merge_adjacent();
    Ok(Some(w))
}

/// Pairs `(U, V)` of automorphisms of `P ⊕ P`; the product of the
/// commutators `U V U^{-1} V^{-1}` equals `alpha ⊕ 1`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CommutatorWitness {
    pub size: usize,
    pub pairs: Vec<(Matrix, Matrix)>,
}

impl CommutatorWitness {
    pub fn product(&self, ring: &RingTower) -> Matrix {
        self.pairs.iter().fold(Matrix::identity(ring, 2 * self.size), |acc, (u, v)| {
            let u_inv = u.inverse().expect("unipotent");
            let v_inv = v.inverse().expect("unipotent");
            acc.mul(&u.mul(v).mul(&u_inv).mul(&v_inv))
        })
    }

    pub fn verify(&self, alpha: &Matrix) -> bool {
        let ring = alpha.ring();
        self.product(ring) == alpha.direct_sum(&Matrix::identity(ring, self.size))
    }
}

/// For each factor `1 + a (P2 → P1)`: `U = 1 + a (P2' → P1)` and
/// `V = 1 + (P2 → P2')`, where primes denote the second copy of `P`.
pub fn commutator_witness(w: &ElementaryWitness) -> CommutatorWitness {
    let n = w.size;
    let r = &w.ring;
    let mut pairs = Vec::new();
    for f in &w.factors {
        let mut u = Matrix::identity(r, 2 * n);
        let mut v = Matrix::identity(r, 2 * n);
        for (a, &i) in f.upper.iter().enumerate() {
            for (b, &j) in f.lower.iter().enumerate() {
                u.set(i, n + j, f.block.get(a, b).clone());
            }
        }
        for &j in &f.lower {
            v.set(n + j, j, r.one());
        }
        pairs.push((u, v));
    }
    if pairs.is_empty() {
        pairs.push((Matrix::identity(r, 2 * n), Matrix::identity(r, 2 * n)));
    }
    CommutatorWitness { size: n, pairs }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn ring(s: &str) -> RingTower {
        RingTower::parse(s).unwrap()
    }

    #[test]
    fn kernel_examples() {
        let f3 = ring("F3");
        let g = Matrix::from_i64(&f3, &[&[1, 0]]);
        let k = kernel_of_surjection(&g).unwrap();
        assert_eq!(k.kernel.rank, 1);
        assert_eq!(k.incl, Matrix::from_i64(&f3, &[&[0], &[1]]));
        assert!(k.verify(&g));

        let z4 = ring("Z/4");
        let err = kernel_of_surjection(&Matrix::from_i64(&z4, &[&[2]])).unwrap_err();
        assert_eq!(err, NotSplit::NotSurjective { missing: vec![z4.one()] });

        let b = ring("F2[t]/(t^2)");
        let g = Matrix::from_fn(&b, 1, 2, |_, j| if j == 0 { b.one() } else { b.gen() });
        let k = kernel_of_surjection(&g).unwrap();
        assert_eq!(k.kernel.rank, 1);
        assert!(k.verify(&g));
        // oracle: the kernel of g has exactly |B| = 4 elements
        let els = b.elements().unwrap();
        let mut kernel_count = 0;
        for x in &els {
            for y in &els {
                if b.is_zero(&b.add(x, &b.mul(&b.gen(), y))) {
                    kernel_count += 1;
                }
            }
        }
        assert_eq!(kernel_count, 4);
    }

    #[test]
    fn kernel_over_euclidean_rings() {
        let z = ring("Z");
        let g = Matrix::from_i64(&z, &[&[6, 10, 15]]);
        let k = kernel_of_surjection(&g).unwrap();
        assert_eq!(k.kernel.rank, 2);
        assert!(k.verify(&g));
        assert!(matches!(kernel_of_surjection(&Matrix::from_i64(&z, &[&[2, 4]])), Err(NotSplit::NotSurjective { .. })));
    }

    #[test]
    fn decompose_examples() {
        let f5 = ring("F5");
        let w = elementary_decompose(&Matrix::identity(&f5, 3)).unwrap().unwrap();
        assert!(w.factors.is_empty());

        let t = Matrix::from_i64(&f5, &[&[1, 3], &[0, 1]]);
        let w = elementary_decompose(&t).unwrap().unwrap();
        assert_eq!(w.factors.len(), 1);
        assert!(w.verify(&t));

        let rot = Matrix::from_i64(&f5, &[&[0, 1], &[-1, 0]]);
        let w = elementary_decompose(&rot).unwrap().unwrap();
        assert!(w.verify(&rot));
        assert!(w.factors.iter().all(|f| f.block.shape() == (1, 1)));

        assert!(elementary_decompose(&Matrix::from_i64(&f5, &[&[2]])).is_err());
    }

    #[test]
    fn decompose_over_z_and_nonlocal_rings() {
        let z = ring("Z");
        let m = Matrix::from_i64(&z, &[&[5, 7], &[2, 3]]);
        let w = elementary_decompose(&m).unwrap().unwrap();
        assert!(w.verify(&m));
        let z6 = ring("Z/6");
        let m = Matrix::from_i64(&z6, &[&[2, 3], &[3, 2]]);
        assert!(z6.is_one(&m.det().unwrap()));
        let w = elementary_decompose(&m).unwrap().unwrap();
        assert!(w.verify(&m));
    }

    #[test]
    fn random_det_one_matrices_decompose() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for spec in ["F2", "F7", "Z/8", "Z/9", "F2[t]/(t^2)", "F3[t]/(t^2+1)", "Z/12", "Z"] {
            let r = ring(spec);
            for n in 1..5 {
                let (g, _) = random_gl(&r, n, &mut rng);
                let d = g.det().unwrap();
                // rescale one column so the determinant is 1
                let fix = Matrix::diagonal(
                    &r,
                    &(0..n).map(|i| if i == 0 { r.inv(&d).unwrap() } else { r.one() }).collect::<Vec<_>>(),
                );
                let a = g.mul(&fix);
                let w = elementary_decompose(&a).unwrap().expect("decomposition");
                assert!(w.verify(&a), "{spec} n={n}");
            }
        }
    }

    #[test]
    fn commutator_of_block_matrices() {
        let z9 = ring("Z/9");
        let a = z9.from_i64(4);
        // P = P1 ⊕ P2, alpha = [[1, a], [0, 1]]
        let w = ElementaryWitness {
            ring: z9.clone(),
            size: 2,
            factors: vec![ElementaryFactor::transvection(&z9, 2, 0, 1, a.clone())],
        };
        let c = commutator_witness(&w);
        let (u, v) = &c.pairs[0];
        // in the order (P1, P2, P1', P2') the blocks are the 3x3 pattern
        // [[1,0,a],[0,1,0],[0,0,1]] and [[1,0,0],[0,1,0],[0,1,1]] on (P1, P2, P2')
        let perm = [0usize, 1, 3];
        let u3 = u.submatrix(&perm, &perm);
        let v3 = v.submatrix(&perm, &perm);
        assert_eq!(
            u3,
            Matrix::from_fn(&z9, 3, 3, |i, j| if i == j {
                z9.one()
            } else if (i, j) == (0, 2) {
                a.clone()
            } else {
                z9.zero()
            })
        );
        assert_eq!(v3, Matrix::from_i64(&z9, &[&[1, 0, 0], &[0, 1, 0], &[0, 1, 1]]));
        assert!(c.verify(&w.product()));

        let id = ElementaryWitness { ring: z9.clone(), size: 2, factors: vec![] };
        let c = commutator_witness(&id);
        assert!(c.pairs.iter().all(|(u, v)| u.is_identity() && v.is_identity()));
        assert!(c.verify(&Matrix::identity(&z9, 2)));
    }

    #[test]
    fn commutators_of_random_decompositions() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for spec in ["Z/9", "F3", "F2[t]/(t^2)"] {
            let r = ring(spec);
            for _ in 0..10 {
                let n = rng.gen_range(1..4);
                let (g, g_inv) = random_gl(&r, n, &mut rng);
                assert!(g.mul(&g_inv).is_identity());
                let t = transvection(&r, n.max(2), 0, 1, &r.random_elem(&mut rng));
                let w = elementary_decompose(&t).unwrap().unwrap();
                assert!(commutator_witness(&w).verify(&t));
            }
        }
    }
}
