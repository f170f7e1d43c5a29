//! Lifting splittings across a morphism of split short exact sequences.
//!
//! Given rows `A' →f1 A →g1 A''` and `B' →f2 B →g2 B''` with split
//! epimorphisms `d', d, d''` between them, splits `s'`, `s''` of `d'`, `d''`,
//! a section `a` of `g1` and a retraction `b` of `f2`, the map
//! `s̃ = f1 s' b + a s'' g2` satisfies `s̃ f2 = f1 s'`, `g1 s̃ = s'' g2`, and
//! `γ = d s̃` is block unitriangular for `B = f2(B') ⊕ B''`.

use crate::error::Result;
use crate::modcat::{elementary_decompose, random_gl, ElementaryFactor, ElementaryWitness};
use crate::rings::{linalg, Matrix, RingTower};
use rand::Rng;
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SplitDiagram {
    pub f1: Matrix,
    pub g1: Matrix,
    pub f2: Matrix,
    pub g2: Matrix,
    pub d_prime: Matrix,
    pub d: Matrix,
    pub d_second: Matrix,
    pub s_prime: Matrix,
    pub s_second: Matrix,
    pub a: Matrix,
    pub b: Matrix,
}

impl SplitDiagram {
    /// Commutativity, exactness data and the given splits.
    pub fn is_valid(&self) -> bool {
        self.d.mul(&self.f1) == self.f2.mul(&self.d_prime)
            && self.d_second.mul(&self.g1) == self.g2.mul(&self.d)
            && self.g1.mul(&self.f1).is_zero()
            && self.g2.mul(&self.f2).is_zero()
            && self.g1.mul(&self.a).is_identity()
            && self.b.mul(&self.f2).is_identity()
            && self.d_prime.mul(&self.s_prime).is_identity()
            && self.d_second.mul(&self.s_second).is_identity()
    }
}

#[derive(Clone, Debug)]
pub struct HalgOutcome {
    pub s_tilde: Matrix,
    pub gamma: Matrix,
    /// `s̃ f2 = f1 s'`
    pub restricts: bool,
    /// `g1 s̃ = s'' g2`
    pub descends: bool,
    /// `T^{-1} γ T = [[1, x], [0, 1]]` for `T = [f2 | c]`.
    pub block_unitriangular: bool,
    /// `γ` as one block elementary factor in the adapted basis.
    pub block_factor: Option<ElementaryFactor>,
    /// `γ` as a product of transvections in the given basis, when found.
    pub witness: Option<ElementaryWitness>,
    /// `d (s̃ γ^{-1}) = 1`
    pub splits_d: bool,
}

impl HalgOutcome {
    pub fn holds(&self) -> bool {
        self.restricts && self.descends && self.block_unitriangular && self.splits_d
    }
}

pub fn halg_construct(dg: &SplitDiagram) -> Result<HalgOutcome> {
    let s_tilde = dg.f1.mul(&dg.s_prime).mul(&dg.b).add(&dg.a.mul(&dg.s_second).mul(&dg.g2));
    let gamma = dg.d.mul(&s_tilde);
    let restricts = s_tilde.mul(&dg.f2) == dg.f1.mul(&dg.s_prime);
    let descends = dg.g1.mul(&s_tilde) == dg.s_second.mul(&dg.g2);

    // c = (1 - f2 b) σ for any section σ of g2, so that b c = 0
    let ring = dg.d.ring();
    let (nb1, nb2) = (dg.f2.cols(), dg.g2.rows());
    let n = dg.f2.rows();
    let mut block_unitriangular = false;
    let mut block_factor = None;
    if let Some(sigma) = linalg::solve_matrix(&dg.g2, &Matrix::identity(ring, nb2))? {
        let c = Matrix::identity(ring, n).sub(&dg.f2.mul(&dg.b)).mul(&sigma);
        let t = dg.f2.hstack(&c);
        let t_inv = dg.b.vstack(&dg.g2);
        if t.mul(&t_inv).is_identity() {
            let adapted = t_inv.mul(&gamma).mul(&t);
            let top_left = adapted.block(0, 0, nb1, nb1);
            let bottom_left = adapted.block(nb1, 0, nb2, nb1);
            let bottom_right = adapted.block(nb1, nb1, nb2, nb2);
            block_unitriangular = top_left.is_identity() && bottom_left.is_zero() && bottom_right.is_identity();
            if block_unitriangular {
                block_factor = Some(ElementaryFactor {
                    size: n,
                    upper: (0..nb1).collect(),
                    lower: (nb1..n).collect(),
                    block: adapted.block(0, nb1, nb1, nb2),
                });
            }
        }
    }
    let witness = match gamma.det() {
        Ok(det) if ring.is_one(&det) => elementary_decompose(&gamma)?,
        _ => None,
    };
    let splits_d = gamma.inverse().is_some_and(|gi| dg.d.mul(&s_tilde).mul(&gi).is_identity());
    Ok(HalgOutcome { s_tilde, gamma, restricts, descends, block_unitriangular, block_factor, witness, splits_d })
}

/// A random split epimorphism `A^m → A^n` (`n ≤ m`) with a split.
fn random_split_epi<R: Rng + ?Sized>(ring: &RingTower, n: usize, m: usize, rng: &mut R) -> (Matrix, Matrix) {
    let (gb, gb_inv) = random_gl(ring, n, rng);
    let (ga, ga_inv) = random_gl(ring, m, rng);
    let proj = Matrix::identity(ring, n).hstack(&Matrix::zero(ring, n, m - n));
    let incl = proj.transpose();
    (gb.mul(&proj).mul(&ga_inv), ga.mul(&incl).mul(&gb_inv))
}

/// A random diagram in standard position, transported by random bases of
/// `A` and `B`.
pub fn random_split_diagram<R: Rng + ?Sized>(ring: &RingTower, max_rank: usize, rng: &mut R) -> SplitDiagram {
    let a1 = rng.gen_range(0..=max_rank);
    let a2 = rng.gen_range(0..=max_rank);
    let b1 = rng.gen_range(0..=a1);
    let b2 = rng.gen_range(0..=a2);
    let (dp, sp) = random_split_epi(ring, b1, a1, rng);
    let (ds, ss) = random_split_epi(ring, b2, a2, rng);
    let x = Matrix::random(ring, b1, a2, rng);
    let d_std = Matrix::block2(&dp, &x, &Matrix::zero(ring, b2, a1), &ds);
    let (ta, ta_inv) = random_gl(ring, a1 + a2, rng);
    let (tb, tb_inv) = random_gl(ring, b1 + b2, rng);
    let incl = |p: usize, q: usize| Matrix::identity(ring, p).vstack(&Matrix::zero(ring, q, p));
    let incl2 = |p: usize, q: usize| Matrix::zero(ring, p, q).vstack(&Matrix::identity(ring, q));
    SplitDiagram {
        f1: ta.mul(&incl(a1, a2)),
        g1: incl2(a1, a2).transpose().mul(&ta_inv),
        f2: tb.mul(&incl(b1, b2)),
        g2: incl2(b1, b2).transpose().mul(&tb_inv),
        d_prime: dp,
        d: tb.mul(&d_std).mul(&ta_inv),
        d_second: ds,
        s_prime: sp,
        s_second: ss,
        a: ta.mul(&incl2(a1, a2)),
        b: incl(b1, b2).transpose().mul(&tb_inv),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn random_diagrams_satisfy_all_three_identities() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for spec in ["F3", "Z/8", "F2[t]/(t^2)", "Z", "F3[t]/(t^2+1)"] {
            let r = RingTower::parse(spec).unwrap();
            for _ in 0..15 {
                let dg = random_split_diagram(&r, 3, &mut rng);
                assert!(dg.is_valid(), "{spec}");
                let out = halg_construct(&dg).unwrap();
                assert!(out.holds(), "{spec}: {out:?}");
                let f = out.block_factor.as_ref().unwrap();
                assert!(f.is_well_formed());
                let w = out.witness.as_ref().expect("elementary over these rings");
                assert!(w.verify(&out.gamma));
            }
        }
    }
}
