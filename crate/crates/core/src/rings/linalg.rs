//! Linear systems, kernels and Smith normal forms over any supported ring.
//!
//! Every ring here is a quotient of `Z` or `F_p[t]` (possibly by zero). A
//! system over the quotient is lifted to the cover, solved through the Smith
//! form there, and reduced back, which handles zero divisors uniformly.

use super::euclid::{self, CoverSolution, IntegerDomain};
use super::{Cover, Elem, Matrix, RingKind};
use crate::error::{Error, Result};

fn lift_int_mat(m: &Matrix) -> Vec<Vec<num_bigint::BigInt>> {
    (0..m.rows()).map(|i| (0..m.cols()).map(|j| m.ring().lift_int(m.get(i, j))).collect()).collect()
}

fn lift_poly_mat(m: &Matrix) -> Vec<Vec<super::FpPoly>> {
    (0..m.rows()).map(|i| (0..m.cols()).map(|j| m.get(i, j).as_poly().clone()).collect()).collect()
}

/// Solve `m x = b` for each right-hand side column; also returns kernel
/// generators of `m`.
pub(crate) fn solve_full(m: &Matrix, rhs: &[Vec<Elem>]) -> Result<(Vec<Option<Vec<Elem>>>, Vec<Vec<Elem>>)> {
    for b in rhs {
        if b.len() != m.rows() {
            return Err(Error::usage(format!(
                "right-hand side of length {} for a {}x{} system",
                b.len(),
                m.rows(),
                m.cols()
            )));
        }
    }
    let ring = m.ring().clone();
    let (rows, cols) = m.shape();
    match ring.cover() {
        Cover::Int(modulus) => {
            let lifted_rhs: Vec<Vec<_>> = rhs.iter().map(|b| b.iter().map(|e| ring.lift_int(e)).collect()).collect();
            let CoverSolution { solutions, kernel } =
                euclid::solve_in_cover(&IntegerDomain, modulus.as_ref(), rows, cols, &lift_int_mat(m), &lifted_rhs);
            let back = |v: Vec<num_bigint::BigInt>| v.iter().map(|x| ring.from_int(x)).collect::<Vec<_>>();
            Ok((solutions.into_iter().map(|s| s.map(back)).collect(), kernel.into_iter().map(back).collect()))
        }
        Cover::Poly(dom, modulus) => {
            let lifted_rhs: Vec<Vec<_>> = rhs.iter().map(|b| b.iter().map(|e| e.as_poly().clone()).collect()).collect();
            let CoverSolution { solutions, kernel } =
                euclid::solve_in_cover(&dom, modulus.as_ref(), rows, cols, &lift_poly_mat(m), &lifted_rhs);
            let back = |v: Vec<super::FpPoly>| v.into_iter().map(|x| ring.from_poly(x)).collect::<Vec<_>>();
            Ok((solutions.into_iter().map(|s| s.map(back)).collect(), kernel.into_iter().map(back).collect()))
        }
    }
}

/// One solution of `m x = b`, or `None` when the system is inconsistent.
pub fn solve_linear(m: &Matrix, b: &[Elem]) -> Result<Option<Vec<Elem>>> {
    let (mut sols, _) = solve_full(m, &[b.to_vec()])?;
    let x = sols.pop().unwrap();
    if let Some(x) = &x {
        debug_assert_eq!(m.mul(&Matrix::column(m.ring(), x)).col_vec(0), b);
    }
    Ok(x)
}

pub fn solve_many(m: &Matrix, rhs: &[Vec<Elem>]) -> Result<Vec<Option<Vec<Elem>>>> {
    Ok(solve_full(m, rhs)?.0)
}

/// Solve `m X = b` for a matrix right-hand side.
pub fn solve_matrix(m: &Matrix, b: &Matrix) -> Result<Option<Matrix>> {
    if b.rows() != m.rows() {
        return Err(Error::usage("solve_matrix: row mismatch"));
    }
    let cols: Vec<Vec<Elem>> = (0..b.cols()).map(|j| b.col_vec(j)).collect();
    let sols = solve_many(m, &cols)?;
    let mut x = Matrix::zero(m.ring(), m.cols(), b.cols());
    for (j, s) in sols.into_iter().enumerate() {
        let Some(s) = s else { return Ok(None) };
        for (i, e) in s.into_iter().enumerate() {
            x.set(i, j, e);
        }
    }
    Ok(Some(x))
}

/// Generators of the kernel of `m`. Over fields and Euclidean domains these
/// form a basis; over `Z/n` and `F_p[t]/(f)` they generate the kernel module.
pub fn kernel_basis(m: &Matrix) -> Vec<Vec<Elem>> {
    solve_full(m, &[]).expect("empty right-hand side").1
}

/// Smith normal form `(U, D, V)` with `U M V = D` over `Z` or `F_p[t]`.
pub fn smith_normal_form(m: &Matrix) -> Result<(Matrix, Matrix, Matrix)> {
    let ring = m.ring();
    let (rows, cols) = m.shape();
    match ring.kind() {
        RingKind::Integers => {
            let s = euclid::smith(&IntegerDomain, rows, cols, &lift_int_mat(m));
            let conv = |a: &Vec<Vec<num_bigint::BigInt>>, r: usize, c: usize| {
                Matrix::from_fn(ring, r, c, |i, j| Elem::Int(a[i][j].clone()))
            };
            Ok((conv(&s.u, rows, rows), conv(&s.d, rows, cols), conv(&s.v, cols, cols)))
        }
        RingKind::PolyRing { p, .. } => {
            let dom = euclid::PolyDomain { p: *p };
            let s = euclid::smith(&dom, rows, cols, &lift_poly_mat(m));
            let conv = |a: &Vec<Vec<super::FpPoly>>, r: usize, c: usize| {
                Matrix::from_fn(ring, r, c, |i, j| Elem::Poly(a[i][j].clone()))
            };
            Ok((conv(&s.u, rows, rows), conv(&s.d, rows, cols), conv(&s.v, cols, cols)))
        }
        _ => {
            Err(Error::usage(format!("Smith normal form needs Z or a polynomial ring over a prime field, got {ring}")))
        }
    }
}

/// Invariant factors of `m` over `Z` or `F_p[t]` (normalized, with zeros
/// for missing pivots up to `min(rows, cols)`).
pub fn invariant_factors(m: &Matrix) -> Result<Vec<Elem>> {
    let (_, d, _) = smith_normal_form(m)?;
    Ok((0..d.rows().min(d.cols())).map(|i| d.get(i, i).clone()).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rings::{FpPoly, RingTower};
    use proptest::prelude::*;

    #[test]
    fn z4_example() {
        let r = RingTower::parse("Z/4").unwrap();
        let m = Matrix::from_i64(&r, &[&[2]]);
        let x = solve_linear(&m, &[r.zero()]).unwrap().unwrap();
        assert!(x == vec![r.zero()] || x == vec![r.from_i64(2)]);
        assert_eq!(kernel_basis(&m), vec![vec![r.from_i64(2)]]);
        assert!(solve_linear(&m, &[r.one()]).unwrap().is_none());
    }

    #[test]
    fn identity_over_f7() {
        let r = RingTower::parse("F7").unwrap();
        let m = Matrix::identity(&r, 3);
        let b = vec![r.from_i64(3), r.from_i64(6), r.from_i64(1)];
        assert_eq!(solve_linear(&m, &b).unwrap().unwrap(), b);
        assert!(kernel_basis(&m).is_empty());
    }

    #[test]
    fn poly_quotient_system_against_exhaustive_search() {
        let r = RingTower::parse("F2[t]/(t^2)").unwrap();
        let t = r.gen();
        let m = Matrix::from_fn(&r, 2, 2, |i, j| match (i, j) {
            (0, 0) | (1, 1) => t.clone(),
            (0, 1) => r.one(),
            _ => r.zero(),
        });
        // oracle: enumerate all candidate vectors for every right-hand side
        let els = r.elements().unwrap();
        let image: Vec<Vec<Elem>> = els
            .iter()
            .flat_map(|a| els.iter().map(move |c| vec![a.clone(), c.clone()]))
            .map(|v| m.mul(&Matrix::column(&r, &v)).col_vec(0))
            .collect();
        for b0 in &els {
            for b1 in &els {
                let b = vec![b0.clone(), b1.clone()];
                let x = solve_linear(&m, &b).unwrap();
                assert_eq!(x.is_some(), image.contains(&b));
                if let Some(x) = x {
                    assert_eq!(m.mul(&Matrix::column(&r, &x)).col_vec(0), b);
                }
            }
        }
        // kernel generators span the exhaustive kernel: t*(1,0) ... checked by size
        let ker = kernel_basis(&m);
        for k in &ker {
            assert!(m.mul(&Matrix::column(&r, k)).is_zero());
        }
        assert!(!ker.is_empty());
    }

    #[test]
    fn snf_examples() {
        let z = RingTower::integers();
        let (_, d, _) = smith_normal_form(&Matrix::from_i64(&z, &[&[2, 0], &[0, 3]])).unwrap();
        assert_eq!(d, Matrix::from_i64(&z, &[&[1, 0], &[0, 6]]));

        let (u, d, v) = smith_normal_form(&Matrix::zero(&z, 2, 2)).unwrap();
        assert!(d.is_zero() && u.is_identity() && v.is_identity());

        let r = RingTower::parse("F2[t]").unwrap();
        let t = r.gen();
        let t2 = r.from_poly(FpPoly::monomial(1, 2, 2));
        let m = Matrix::from_fn(&r, 2, 2, |i, j| match (i, j) {
            (0, 0) | (1, 1) => t.clone(),
            (0, 1) => t2.clone(),
            _ => r.zero(),
        });
        let (u, d, v) = smith_normal_form(&m).unwrap();
        assert_eq!(u.mul(&m).mul(&v), d);
        assert_eq!(d, Matrix::diagonal(&r, &[t.clone(), t]));

        let f5 = RingTower::parse("F5").unwrap();
        assert!(smith_normal_form(&Matrix::identity(&f5, 1)).is_err());
    }

    fn arb_case() -> impl Strategy<Value = (usize, usize, usize, Vec<i64>, Vec<i64>)> {
        (
            0usize..6,
            1usize..4,
            1usize..4,
            proptest::collection::vec(-9i64..10, 9),
            proptest::collection::vec(-9i64..10, 3),
        )
    }

    proptest! {
        #[test]
        fn solutions_substitute_and_kernel_is_annihilated((which, rows, cols, vals, rhs) in arb_case()) {
            let spec = ["Z", "Z/12", "Z/8", "F2[t]/(t^3)", "F3[t]", "F3[t]/(t^2+1)"][which];
            let r = RingTower::parse(spec).unwrap();
            let mk = |v: i64| match r.char_p() {
                Some(p) if !matches!(r.kind(), RingKind::PrimeField(_)) => r.from_poly(FpPoly::from_signed(&[v, v / 2, v / 5], p)),
                _ => r.from_i64(v),
            };
            let m = Matrix::from_fn(&r, rows, cols, |i, j| mk(vals[i * 3 + j]));
            // a consistent right-hand side: image of a known vector
            let x0: Vec<Elem> = (0..cols).map(|j| mk(rhs[j])).collect();
            let b = m.mul(&Matrix::column(&r, &x0)).col_vec(0);
            let x = solve_linear(&m, &b).unwrap();
            prop_assert!(x.is_some());
            let x = x.unwrap();
            prop_assert_eq!(m.mul(&Matrix::column(&r, &x)).col_vec(0), b);
            for k in kernel_basis(&m) {
                prop_assert!(m.mul(&Matrix::column(&r, &k)).is_zero());
            }
        }

        #[test]
        fn snf_identity_and_divisibility(rows in 1usize..4, cols in 1usize..4, vals in proptest::collection::vec(-30i64..30, 9)) {
            let z = RingTower::integers();
            let m = Matrix::from_fn(&z, rows, cols, |i, j| z.from_i64(vals[i * 3 + j]));
            let (u, d, v) = smith_normal_form(&m).unwrap();
            prop_assert_eq!(u.mul(&m).mul(&v), d.clone());
            let diag: Vec<_> = (0..rows.min(cols)).map(|i| d.get(i, i).as_int().clone()).collect();
            for w in diag.windows(2) {
                if w[0] == num_bigint::BigInt::from(0) {
                    prop_assert_eq!(&w[1], &num_bigint::BigInt::from(0));
                } else {
                    prop_assert_eq!(&w[1] % &w[0], num_bigint::BigInt::from(0));
                }
            }
            let du = u.det().unwrap();
            let dv = v.det().unwrap();
            prop_assert!(z.is_unit(&du) && z.is_unit(&dv));
        }
    }
}
