//! The partition-indexed operator
//!
//! ```text
//! Λ_K(h) = Σ_{α ∈ Π_K} μ_α ∏_{J ∈ α} h ∘ ψ_{J,K}
//! ```
//!
//! where `ψ_{J,K}` zeroes the coordinates of `K ∖ J`. For `h(0) = 1`,
//! `Λ_K(h)` vanishes on every coordinate hyperplane, which keeps
//! `Λ_K(h)(t) / ∏ t_k` bounded near the origin. For `|K| = 2` it is
//! `h(s₁,s₂) − h(s₁,0) h(0,s₂)`.
//!
//! Vectors passed to the operator are indexed by position in `K`, not by the
//! coordinate labels themselves.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Add, Mul, Neg, Sub};

use num_traits::{FromPrimitive, One, Zero};

use crate::partition::{enumerate_partitions, mobius_coefficient, SetPartition};
use crate::{Complex, Error, Result};

/// Default lower bound on `|t_k|` accepted by [`LambdaOperator::quotient`].
pub const DEFAULT_FLOOR: f64 = 1e-12;

/// Scalars the operator can be evaluated over: exact rationals, floats and
/// complex numbers all qualify.
pub trait Scalar:
    Clone
    + Zero
    + One
    + FromPrimitive
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Neg<Output = Self>
{
}

impl<T> Scalar for T where
    T: Clone
        + Zero
        + One
        + FromPrimitive
        + Add<Output = T>
        + Sub<Output = T>
        + Mul<Output = T>
        + Neg<Output = T>
{
}

/// A deterministic function of a vector indexed by the positions of `K`.
pub trait EvaluableFunction<S> {
    fn eval(&self, t: &[S]) -> Result<S>;
}

impl<S, F> EvaluableFunction<S> for F
where
    F: Fn(&[S]) -> S,
{
    fn eval(&self, t: &[S]) -> Result<S> {
        Ok(self(t))
    }
}

/// Adapter for closures that can fail.
pub struct Fallible<F>(pub F);

impl<S, F> EvaluableFunction<S> for Fallible<F>
where
    F: Fn(&[S]) -> Result<S>,
{
    fn eval(&self, t: &[S]) -> Result<S> {
        (self.0)(t)
    }
}

/// One summand `μ_α ∏_{J∈α} h∘ψ_{J,K}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LambdaTerm {
    pub partition: SetPartition,
    pub coefficient: i64,
    /// Blocks as masks over positions in `K` (bit `i` is the `i`-th element).
    pub position_masks: Vec<u32>,
}

/// `Λ_K` for a fixed index set, with its partition list computed once.
#[derive(Debug, Clone)]
pub struct LambdaOperator {
    set: Vec<usize>,
    terms: Vec<LambdaTerm>,
}

impl LambdaOperator {
    pub fn new(set: &[usize]) -> Result<Self> {
        let partitions = enumerate_partitions(set)?;
        let terms = partitions
            .into_iter()
            .map(|partition| {
                let coefficient = i64::try_from(mobius_coefficient(&partition))
                    .expect("Möbius coefficient fits i64 below the enumeration cap");
                let position_masks = partition
                    .blocks()
                    .iter()
                    .map(|block| {
                        block.iter().fold(0u32, |m, e| {
                            let pos = set.binary_search(e).expect("block element in set");
                            m | (1 << pos)
                        })
                    })
                    .collect();
                LambdaTerm {
                    partition,
                    coefficient,
                    position_masks,
                }
            })
            .collect();
        Ok(Self {
            set: set.to_vec(),
            terms,
        })
    }

    /// `Λ_L` for `L = {0, …, m−1}`.
    pub fn full(m: usize) -> Result<Self> {
        let set: Vec<usize> = (0..m).collect();
        Self::new(&set)
    }

    pub fn index_set(&self) -> &[usize] {
        &self.set
    }

    pub fn terms(&self) -> &[LambdaTerm] {
        &self.terms
    }

    /// `Σ_α μ_α ∏_{J∈α} value(J)` where `value` is looked up by position
    /// mask. This is the shared combination step; callers supply the block
    /// values however they are best computed.
    pub fn combine<S: Scalar>(&self, mut value: impl FnMut(u32) -> S) -> S {
        let mut total = S::zero();
        for term in &self.terms {
            let mut prod = S::from_i64(term.coefficient).expect("integer scalar");
            for &mask in &term.position_masks {
                prod = prod * value(mask);
            }
            total = total + prod;
        }
        total
    }

    /// `Λ_K(h)(t)`.
    pub fn eval<S: Scalar, H: EvaluableFunction<S> + ?Sized>(&self, h: &H, t: &[S]) -> Result<S> {
        let k = self.set.len();
        if t.len() != k {
            return Err(Error::DimensionMismatch {
                expected: k,
                got: t.len(),
            });
        }
        // Each nonempty block mask appears in many partitions; evaluate h on
        // each projection once.
        let mut cache: Vec<Option<S>> = vec![None; 1 << k];
        let mut scratch: Vec<S> = vec![S::zero(); k];
        for term in &self.terms {
            for &mask in &term.position_masks {
                let slot = &mut cache[mask as usize];
                if slot.is_none() {
                    for (i, s) in scratch.iter_mut().enumerate() {
                        *s = if mask & (1 << i) != 0 {
                            t[i].clone()
                        } else {
                            S::zero()
                        };
                    }
                    *slot = Some(h.eval(&scratch)?);
                }
            }
        }
        Ok(self.combine(|mask| cache[mask as usize].clone().expect("cached")))
    }

    /// `Λ_K(h)(t) / ∏_k t_k`, defined only away from the coordinate
    /// hyperplanes.
    pub fn quotient<H: EvaluableFunction<Complex> + ?Sized>(
        &self,
        h: &H,
        t: &[Complex],
        floor: f64,
    ) -> Result<Complex> {
        for (i, ti) in t.iter().enumerate() {
            let modulus = ti.norm();
            if modulus < floor {
                return Err(Error::HyperplaneProximity {
                    index: self.set.get(i).copied().unwrap_or(i),
                    modulus,
                    floor,
                });
            }
        }
        let num = self.eval(h, t)?;
        let den = t.iter().fold(Complex::new(1.0, 0.0), |acc, ti| acc * ti);
        Ok(num / den)
    }
}

fn check_subset(sub: &[usize], set: &[usize]) -> Result<()> {
    for &j in sub {
        if set.binary_search(&j).is_err() {
            return Err(Error::NotSubset { index: j });
        }
    }
    Ok(())
}

/// `ψ_{J,K}`: keeps the coordinates of `J`, zeroes the rest. `t` is indexed
/// by the positions of `set` (which must be sorted).
pub fn project<S: Clone + Zero>(t: &[S], set: &[usize], sub: &[usize]) -> Result<Vec<S>> {
    if t.len() != set.len() {
        return Err(Error::DimensionMismatch {
            expected: set.len(),
            got: t.len(),
        });
    }
    check_subset(sub, set)?;
    Ok(set
        .iter()
        .zip(t)
        .map(|(k, tk)| {
            if sub.contains(k) {
                tk.clone()
            } else {
                S::zero()
            }
        })
        .collect())
}

/// `χ_{J,K}`: embeds a vector indexed by `sub` into one indexed by `set`,
/// zero outside `sub`.
pub fn embed<S: Clone + Zero>(t_sub: &[S], sub: &[usize], set: &[usize]) -> Result<Vec<S>> {
    if t_sub.len() != sub.len() {
        return Err(Error::DimensionMismatch {
            expected: sub.len(),
            got: t_sub.len(),
        });
    }
    check_subset(sub, set)?;
    Ok(set
        .iter()
        .map(|k| match sub.iter().position(|j| j == k) {
            Some(p) => t_sub[p].clone(),
            None => S::zero(),
        })
        .collect())
}

/// One-shot `Λ_K(h)(t)`; prefer a reused [`LambdaOperator`] in loops.
pub fn lambda_eval<S: Scalar, H: EvaluableFunction<S> + ?Sized>(
    h: &H,
    set: &[usize],
    t: &[S],
) -> Result<S> {
    LambdaOperator::new(set)?.eval(h, t)
}

/// One-shot `Λ_K(h)(t) / ∏ t_k`.
pub fn lambda_quotient<H: EvaluableFunction<Complex> + ?Sized>(
    h: &H,
    set: &[usize],
    t: &[Complex],
    floor: f64,
) -> Result<Complex> {
    LambdaOperator::new(set)?.quotient(h, t, floor)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::BigInt;
    use num_rational::BigRational;

    fn c(re: f64, im: f64) -> Complex {
        Complex::new(re, im)
    }

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    #[test]
    fn project_and_embed() {
        let t = [3.0, 5.0];
        assert_eq!(project(&t, &[0, 1], &[0]).unwrap(), vec![3.0, 0.0]);
        let abc = [c(1.0, 0.0), c(2.0, 1.0), c(0.0, 3.0)];
        assert_eq!(project(&abc, &[0, 1, 2], &[0, 1, 2]).unwrap(), abc.to_vec());
        assert_eq!(
            project(&abc, &[0, 1, 2], &[]).unwrap(),
            vec![Complex::zero(); 3]
        );
        assert!(matches!(
            project(&abc, &[0, 1, 2], &[5]),
            Err(Error::NotSubset { index: 5 })
        ));

        assert_eq!(embed(&[7.0], &[0], &[0, 1]).unwrap(), vec![7.0, 0.0]);
        assert_eq!(
            embed(&[1.0, 2.0], &[0, 1], &[0, 1]).unwrap(),
            vec![1.0, 2.0]
        );
        assert_eq!(
            embed(&[c(0.0, 1.0)], &[1], &[0, 1, 2]).unwrap(),
            vec![Complex::zero(), c(0.0, 1.0), Complex::zero()]
        );
        assert!(embed(&[1.0], &[3], &[0, 1]).is_err());

        // project(embed(t_J)) restricted to J recovers t_J
        let e = embed(&[4.0, 9.0], &[0, 2], &[0, 1, 2]).unwrap();
        let p = project(&e, &[0, 1, 2], &[0, 2]).unwrap();
        assert_eq!((p[0], p[2]), (4.0, 9.0));
    }

    #[test]
    fn single_index_is_identity() {
        let op = LambdaOperator::new(&[2]).unwrap();
        let h = |t: &[Complex]| (t[0] * c(0.3, 1.0)).exp() + c(2.0, 0.0);
        let t = [c(0.7, -0.2)];
        assert_eq!(op.eval(&h, &t).unwrap(), h(&t));
    }

    #[test]
    fn two_dimensional_closed_form() {
        let op = LambdaOperator::full(2).unwrap();
        let h = |t: &[BigRational]| {
            q(1, 1) + q(3, 7) * t[0].clone() * t[1].clone() - q(2, 5) * t[0].clone()
                + q(1, 9) * t[1].clone() * t[1].clone()
        };
        let (s1, s2) = (q(2, 3), q(-5, 4));
        let expected =
            h(&[s1.clone(), s2.clone()]) - h(&[s1.clone(), q(0, 1)]) * h(&[q(0, 1), s2.clone()]);
        assert_eq!(op.eval(&h, &[s1, s2]).unwrap(), expected);
    }

    #[test]
    fn vanishes_on_hyperplanes() {
        // A polynomial with h(0) = 1 evaluated exactly enough in f64.
        let h = |t: &[Complex]| {
            let mut v = c(1.0, 0.0);
            for (i, ti) in t.iter().enumerate() {
                v += ti * c(0.5 + i as f64, -0.25) + ti * ti * c(0.1, 0.2);
            }
            v + t.iter().fold(c(0.3, 0.0), |a, x| a * x)
        };
        for m in 2..=5 {
            let op = LambdaOperator::full(m).unwrap();
            for zero_at in 0..m {
                let t: Vec<Complex> = (0..m)
                    .map(|i| {
                        if i == zero_at {
                            Complex::zero()
                        } else {
                            c(0.3 * i as f64 - 0.4, 0.2)
                        }
                    })
                    .collect();
                assert!(op.eval(&h, &t).unwrap().norm() < 1e-12, "m={m}");
            }
        }
    }

    #[test]
    fn independent_product_annihilated() {
        for m in 2..=5 {
            let op = LambdaOperator::full(m).unwrap();
            let h = |t: &[Complex]| {
                t.iter().enumerate().fold(c(1.0, 0.0), |a, (i, x)| {
                    a * (x * c(0.0, 1.0 + i as f64)).exp()
                })
            };
            let t: Vec<Complex> = (0..m).map(|i| c(0.9 - 0.35 * i as f64, 0.0)).collect();
            assert!(op.eval(&h, &t).unwrap().norm() < 1e-12);
        }
    }

    #[test]
    fn quotient_of_point_mass_and_product() {
        // m = 1: Λ is the identity.
        let a = 1.7;
        let h = move |t: &[Complex]| (c(0.0, a) * t[0]).exp();
        let t = c(0.4, 0.0);
        let got = lambda_quotient(&h, &[0], &[t], DEFAULT_FLOOR).unwrap();
        assert!((got - (c(0.0, a) * t).exp() / t).norm() < 1e-14);

        let prod = |t: &[Complex]| (c(0.0, 1.0) * t[0]).exp() * (c(0.0, -2.0) * t[1]).exp();
        let got = lambda_quotient(&prod, &[0, 1], &[c(0.3, 0.0), c(-0.6, 0.0)], 1e-12).unwrap();
        assert!(got.norm() < 1e-14);
    }

    #[test]
    fn quotient_near_origin_tends_to_one() {
        // h(s) = e^{s₁ s₂}: Λ(h)(s) = e^{s₁s₂} − 1, so the quotient → 1.
        let h = |t: &[Complex]| (t[0] * t[1]).exp();
        let op = LambdaOperator::full(2).unwrap();
        for &eps in &[1e-1, 1e-2] {
            let t = [c(eps, 0.0), c(-eps * 0.5, 0.0)];
            let v = op.quotient(&h, &t, DEFAULT_FLOOR).unwrap();
            // series: 1 + x/2 + x²/6 with x = s₁s₂
            let x = -0.5 * eps * eps;
            assert!((v - c(1.0 + x / 2.0 + x * x / 6.0, 0.0)).norm() < 1e-8);
        }
        // Closer in, cancellation costs digits but the quotient stays bounded.
        for &eps in &[1e-4, 1e-6] {
            let t = [c(eps, 0.0), c(-eps * 0.5, 0.0)];
            let v = op.quotient(&h, &t, DEFAULT_FLOOR).unwrap();
            assert!((v - c(1.0, 0.0)).norm() < 1e-2);
        }
    }

    #[test]
    fn quotient_rejects_hyperplane() {
        let h = |t: &[Complex]| t[0] + t[1];
        let err = lambda_quotient(&h, &[0, 1], &[c(1e-14, 0.0), c(1.0, 0.0)], DEFAULT_FLOOR);
        assert!(matches!(
            err,
            Err(Error::HyperplaneProximity { index: 0, .. })
        ));
    }

    #[test]
    fn fallible_functions_propagate() {
        let h = Fallible(|_: &[f64]| -> Result<f64> { Err(Error::InvalidArgument("boom".into())) });
        assert!(lambda_eval(&h, &[0, 1], &[1.0, 2.0]).is_err());
        assert!(lambda_eval(&|t: &[f64]| t[0], &[0, 1], &[1.0]).is_err());
    }

    #[test]
    fn nonlinear() {
        // Λ(s₁+s₂) ≠ Λ(s₁) + Λ(s₂)
        let op = LambdaOperator::full(2).unwrap();
        let t = [2.0, 3.0];
        let sum = op.eval(&|t: &[f64]| t[0] + t[1], &t).unwrap();
        let a = op.eval(&|t: &[f64]| t[0], &t).unwrap();
        let b = op.eval(&|t: &[f64]| t[1], &t).unwrap();
        assert!((sum - (a + b)).abs() > 1.0);
    }
}
