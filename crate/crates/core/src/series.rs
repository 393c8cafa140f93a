//! Truncated multivariate power series over pluggable coefficient rings.
//!
//! A [`MultiSeries`] stores only nonzero coefficients, keyed by exponent
//! vector. Coefficients of exponents admitted by its [`Truncation`] are
//! exact; everything beyond is unknown and never stored.
//!
//! Three coefficient rings are provided: `f64` for bulk numerics,
//! [`BigRational`] for exact work, and [`RationalPoly`] (polynomials in an
//! auxiliary variable `X`) for the moment polynomials
//! `p_k(X) = [s^k] exp(u(s) X + v(s))`.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt::Debug;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::{Error, Result};

/// Operations a coefficient ring must provide. All rings here contain the
/// rationals, so dividing by a nonzero integer is always possible.
pub trait Coefficient: Clone + PartialEq + Debug {
    /// Exact rings use the factorial power sum for `exp`; inexact rings use
    /// Newton iteration.
    const EXACT: bool;

    fn zero_elem() -> Self;
    fn one_elem() -> Self;
    fn is_zero_elem(&self) -> bool;
    fn add_ref(&self, other: &Self) -> Self;
    fn sub_ref(&self, other: &Self) -> Self;
    fn mul_ref(&self, other: &Self) -> Self;
    fn neg_ref(&self) -> Self;
    fn from_integer(n: i64) -> Self;
    fn div_integer(&self, n: i64) -> Self;
    /// `e^c` for a constant term, when the ring can represent it.
    fn exp_scalar(&self) -> Option<Self> {
        if self.is_zero_elem() {
            Some(Self::one_elem())
        } else {
            None
        }
    }
}

impl Coefficient for f64 {
    const EXACT: bool = false;

    fn zero_elem() -> Self {
        0.0
    }
    fn one_elem() -> Self {
        1.0
    }
    fn is_zero_elem(&self) -> bool {
        *self == 0.0
    }
    fn add_ref(&self, other: &Self) -> Self {
        self + other
    }
    fn sub_ref(&self, other: &Self) -> Self {
        self - other
    }
    fn mul_ref(&self, other: &Self) -> Self {
        self * other
    }
    fn neg_ref(&self) -> Self {
        -self
    }
    fn from_integer(n: i64) -> Self {
        n as f64
    }
    fn div_integer(&self, n: i64) -> Self {
        self / n as f64
    }
    fn exp_scalar(&self) -> Option<Self> {
        Some(libm::exp(*self))
    }
}

impl Coefficient for BigRational {
    const EXACT: bool = true;

    fn zero_elem() -> Self {
        Zero::zero()
    }
    fn one_elem() -> Self {
        One::one()
    }
    fn is_zero_elem(&self) -> bool {
        Zero::is_zero(self)
    }
    fn add_ref(&self, other: &Self) -> Self {
        self + other
    }
    fn sub_ref(&self, other: &Self) -> Self {
        self - other
    }
    fn mul_ref(&self, other: &Self) -> Self {
        self * other
    }
    fn neg_ref(&self) -> Self {
        -self
    }
    fn from_integer(n: i64) -> Self {
        BigRational::from_integer(BigInt::from(n))
    }
    fn div_integer(&self, n: i64) -> Self {
        self / BigRational::from_integer(BigInt::from(n))
    }
}

/// Univariate polynomial in `X` with rational coefficients, lowest degree
/// first, with no trailing zeros.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct RationalPoly {
    coeffs: Vec<BigRational>,
}

impl RationalPoly {
    pub fn new(mut coeffs: Vec<BigRational>) -> Self {
        while coeffs.last().is_some_and(Zero::is_zero) {
            coeffs.pop();
        }
        Self { coeffs }
    }

    pub fn constant(c: BigRational) -> Self {
        Self::new(vec![c])
    }

    /// The polynomial `c·X`.
    pub fn linear(c: BigRational) -> Self {
        Self::new(vec![BigRational::zero(), c])
    }

    pub fn coeffs(&self) -> &[BigRational] {
        &self.coeffs
    }

    /// Degree, with the zero polynomial reported as `None`.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn eval(&self, x: &BigRational) -> BigRational {
        self.coeffs
            .iter()
            .rev()
            .fold(BigRational::zero(), |acc, c| acc * x + c)
    }
}

impl Coefficient for RationalPoly {
    const EXACT: bool = true;

    fn zero_elem() -> Self {
        Self::default()
    }
    fn one_elem() -> Self {
        Self::constant(BigRational::one())
    }
    fn is_zero_elem(&self) -> bool {
        self.coeffs.is_empty()
    }
    fn add_ref(&self, other: &Self) -> Self {
        let n = self.coeffs.len().max(other.coeffs.len());
        let z = BigRational::zero();
        Self::new(
            (0..n)
                .map(|i| self.coeffs.get(i).unwrap_or(&z) + other.coeffs.get(i).unwrap_or(&z))
                .collect(),
        )
    }
    fn sub_ref(&self, other: &Self) -> Self {
        self.add_ref(&other.neg_ref())
    }
    fn mul_ref(&self, other: &Self) -> Self {
        if self.is_zero_elem() || other.is_zero_elem() {
            return Self::zero_elem();
        }
        let mut out = vec![BigRational::zero(); self.coeffs.len() + other.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in other.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Self::new(out)
    }
    fn neg_ref(&self) -> Self {
        Self::new(self.coeffs.iter().map(|c| -c).collect())
    }
    fn from_integer(n: i64) -> Self {
        Self::constant(BigRational::from_integer(BigInt::from(n)))
    }
    fn div_integer(&self, n: i64) -> Self {
        let d = BigRational::from_integer(BigInt::from(n));
        Self::new(self.coeffs.iter().map(|c| c / &d).collect())
    }
}

/// Which exponents a series keeps.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Truncation {
    /// Exponent `e` is kept when `e[i] <= bound[i]` for every variable.
    PerVariable(Vec<u32>),
    /// Exponent `e` is kept when `Σ e[i] <= bound`.
    TotalDegree(u32),
}

impl Truncation {
    pub fn admits(&self, exp: &[u32]) -> bool {
        match self {
            Truncation::PerVariable(b) => exp.iter().zip(b).all(|(e, b)| e <= b),
            Truncation::TotalDegree(d) => exp.iter().map(|&e| e as u64).sum::<u64>() <= *d as u64,
        }
    }

    /// Largest total degree any kept exponent can have.
    pub fn max_total_degree(&self) -> u64 {
        match self {
            Truncation::PerVariable(b) => b.iter().map(|&x| x as u64).sum(),
            Truncation::TotalDegree(d) => *d as u64,
        }
    }

    fn meet(&self, other: &Self) -> Result<Self> {
        match (self, other) {
            (Truncation::PerVariable(a), Truncation::PerVariable(b)) => Ok(
                Truncation::PerVariable(a.iter().zip(b).map(|(x, y)| *x.min(y)).collect()),
            ),
            (Truncation::TotalDegree(a), Truncation::TotalDegree(b)) => {
                Ok(Truncation::TotalDegree(*a.min(b)))
            }
            _ => Err(Error::Series(
                "cannot combine per-variable and total-degree truncations".into(),
            )),
        }
    }
}

fn total_degree(exp: &[u32]) -> u64 {
    exp.iter().map(|&e| e as u64).sum()
}

/// A truncated power series in `num_vars` variables.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiSeries<C: Coefficient> {
    num_vars: usize,
    truncation: Truncation,
    coeffs: BTreeMap<Vec<u32>, C>,
}

impl<C: Coefficient> MultiSeries<C> {
    pub fn zero(num_vars: usize, truncation: Truncation) -> Self {
        if let Truncation::PerVariable(b) = &truncation {
            assert_eq!(b.len(), num_vars, "one bound per variable");
        }
        Self {
            num_vars,
            truncation,
            coeffs: BTreeMap::new(),
        }
    }

    pub fn constant(num_vars: usize, truncation: Truncation, c: C) -> Self {
        let mut s = Self::zero(num_vars, truncation);
        s.set(vec![0; num_vars], c);
        s
    }

    pub fn one(num_vars: usize, truncation: Truncation) -> Self {
        Self::constant(num_vars, truncation, C::one_elem())
    }

    /// The series `s_i`.
    pub fn variable(num_vars: usize, truncation: Truncation, i: usize) -> Self {
        let mut e = vec![0; num_vars];
        e[i] = 1;
        Self::monomial(num_vars, truncation, e, C::one_elem())
    }

    pub fn monomial(num_vars: usize, truncation: Truncation, exp: Vec<u32>, c: C) -> Self {
        let mut s = Self::zero(num_vars, truncation);
        s.set(exp, c);
        s
    }

    /// Builds a series from `(exponent, coefficient)` pairs, summing repeats
    /// and dropping what the truncation does not admit.
    pub fn from_terms(
        num_vars: usize,
        truncation: Truncation,
        terms: impl IntoIterator<Item = (Vec<u32>, C)>,
    ) -> Self {
        let mut s = Self::zero(num_vars, truncation);
        for (e, c) in terms {
            assert_eq!(e.len(), num_vars, "exponent length");
            s.add_to(e, &c);
        }
        s
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn truncation(&self) -> &Truncation {
        &self.truncation
    }

    /// Number of stored (nonzero) coefficients.
    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Vec<u32>, &C)> {
        self.coeffs.iter()
    }

    /// Coefficient of `s^exp`. Zero when not stored.
    ///
    /// # Panics
    /// If `exp` lies beyond the truncation, where the coefficient is unknown.
    pub fn coeff(&self, exp: &[u32]) -> C {
        assert!(
            self.truncation.admits(exp),
            "coefficient {exp:?} is beyond the truncation {:?}",
            self.truncation
        );
        self.coeffs.get(exp).cloned().unwrap_or_else(C::zero_elem)
    }

    pub fn constant_term(&self) -> C {
        self.coeffs
            .get(&vec![0; self.num_vars])
            .cloned()
            .unwrap_or_else(C::zero_elem)
    }

    pub fn set(&mut self, exp: Vec<u32>, c: C) {
        if !self.truncation.admits(&exp) {
            return;
        }
        if c.is_zero_elem() {
            self.coeffs.remove(&exp);
        } else {
            self.coeffs.insert(exp, c);
        }
    }

    fn add_to(&mut self, exp: Vec<u32>, c: &C) {
        if c.is_zero_elem() || !self.truncation.admits(&exp) {
            return;
        }
        match self.coeffs.get_mut(&exp) {
            Some(v) => {
                let sum = v.add_ref(c);
                if sum.is_zero_elem() {
                    self.coeffs.remove(&exp);
                } else {
                    *v = sum;
                }
            }
            None => {
                self.coeffs.insert(exp, c.clone());
            }
        }
    }

    fn check_compatible(&self, other: &Self) -> Result<Truncation> {
        if self.num_vars != other.num_vars {
            return Err(Error::DimensionMismatch {
                expected: self.num_vars,
                got: other.num_vars,
            });
        }
        self.truncation.meet(&other.truncation)
    }

    /// Restricts to a (not larger) truncation.
    pub fn truncate(&self, truncation: Truncation) -> Self {
        Self::from_terms(
            self.num_vars,
            truncation,
            self.coeffs.iter().map(|(e, c)| (e.clone(), c.clone())),
        )
    }

    /// Keeps only terms of total degree `<= d`, within the current truncation.
    fn cap_total_degree(&self, d: u64) -> Self {
        let mut out = Self::zero(self.num_vars, self.truncation.clone());
        for (e, c) in &self.coeffs {
            if total_degree(e) <= d {
                out.coeffs.insert(e.clone(), c.clone());
            }
        }
        out
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        let t = self.check_compatible(other)?;
        let mut out = self.truncate(t);
        for (e, c) in &other.coeffs {
            out.add_to(e.clone(), c);
        }
        Ok(out)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Self {
        self.map(|c| c.neg_ref())
    }

    pub fn scale(&self, k: &C) -> Self {
        let mut out = Self::zero(self.num_vars, self.truncation.clone());
        for (e, c) in &self.coeffs {
            out.set(e.clone(), c.mul_ref(k));
        }
        out
    }

    /// Applies `f` to every coefficient, dropping results that are zero.
    pub fn map(&self, mut f: impl FnMut(&C) -> C) -> Self {
        let mut out = Self::zero(self.num_vars, self.truncation.clone());
        for (e, c) in &self.coeffs {
            out.set(e.clone(), f(c));
        }
        out
    }

    /// Changes the coefficient ring.
    pub fn map_ring<D: Coefficient>(&self, mut f: impl FnMut(&C) -> D) -> MultiSeries<D> {
        let mut out = MultiSeries::zero(self.num_vars, self.truncation.clone());
        for (e, c) in &self.coeffs {
            out.set(e.clone(), f(c));
        }
        out
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        let t = self.check_compatible(other)?;
        let mut out = Self::zero(self.num_vars, t);
        let mut e = vec![0u32; self.num_vars];
        for (ea, ca) in &self.coeffs {
            for (eb, cb) in &other.coeffs {
                for i in 0..self.num_vars {
                    e[i] = ea[i] + eb[i];
                }
                if out.truncation.admits(&e) {
                    out.add_to(e.clone(), &ca.mul_ref(cb));
                }
            }
        }
        Ok(out)
    }

    pub fn pow(&self, k: u32) -> Result<Self> {
        let mut result = Self::one(self.num_vars, self.truncation.clone());
        let mut base = self.clone();
        let mut k = k;
        while k > 0 {
            if k & 1 == 1 {
                result = result.mul(&base)?;
            }
            k >>= 1;
            if k > 0 {
                base = base.mul(&base)?;
            }
        }
        Ok(result)
    }

    fn without_constant(&self) -> Self {
        let mut out = self.clone();
        out.coeffs.remove(&vec![0; self.num_vars]);
        out
    }

    /// `exp(a)`, truncated.
    ///
    /// Exact rings use `Σ aⁿ/n!`, which terminates because `aⁿ` vanishes
    /// once `n` exceeds the largest admitted total degree. Floats use Newton
    /// iteration `g ← g (1 + a − log g)`, doubling the correct total degree
    /// each step.
    pub fn exp(&self) -> Result<Self> {
        let c0 = self.constant_term();
        let scale = c0.exp_scalar().ok_or_else(|| {
            Error::Series("exp of a series with nonzero constant term in this ring".into())
        })?;
        let a = self.without_constant();
        let e = if C::EXACT {
            a.exp_power_sum()?
        } else {
            a.exp_newton()?
        };
        Ok(if c0.is_zero_elem() {
            e
        } else {
            e.scale(&scale)
        })
    }

    /// `Σ aⁿ/n!` for `a` without constant term.
    pub fn exp_power_sum(&self) -> Result<Self> {
        debug_assert!(self.constant_term().is_zero_elem());
        let mut result = Self::one(self.num_vars, self.truncation.clone());
        let mut term = result.clone();
        let mut n = 1i64;
        loop {
            term = term.mul(self)?.map(|c| c.div_integer(n));
            if term.is_empty() {
                return Ok(result);
            }
            result = result.add(&term)?;
            n += 1;
        }
    }

    fn exp_newton(&self) -> Result<Self> {
        let max_deg = self.truncation.max_total_degree();
        let mut g = Self::one(self.num_vars, self.truncation.clone());
        let mut prec = 0u64;
        let one = g.clone();
        while prec < max_deg {
            prec = (2 * prec + 1).min(max_deg);
            let a = self.cap_total_degree(prec);
            let correction = one.add(&a)?.sub(&g.log()?)?;
            g = g.mul(&correction)?.cap_total_degree(prec);
        }
        Ok(g)
    }

    /// `log(a)` for `a` with constant term one, via
    /// `log(1+b) = Σ (−1)^{n+1} bⁿ/n`.
    pub fn log(&self) -> Result<Self> {
        if self.constant_term() != C::one_elem() {
            return Err(Error::Series("log needs constant term 1".into()));
        }
        let b = self.without_constant();
        let mut result = Self::zero(self.num_vars, self.truncation.clone());
        let mut power = b.clone();
        let mut n = 1i64;
        while !power.is_empty() {
            let term = power.map(|c| c.div_integer(n));
            result = if n % 2 == 1 {
                result.add(&term)?
            } else {
                result.sub(&term)?
            };
            power = power.mul(&b)?;
            n += 1;
        }
        Ok(result)
    }
}

/// `p_k(X) = [s^k] exp(u(s) X + v(s))` together with its exponent.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MomentPolynomial {
    pub k: Vec<u32>,
    pub poly: RationalPoly,
}

impl MomentPolynomial {
    pub fn eval(&self, x: &BigRational) -> BigRational {
        self.poly.eval(x)
    }
}

/// Moment polynomial of exponent `k` for the quasi-power data `u`, `v`.
pub fn moment_polynomial(
    u: &MultiSeries<BigRational>,
    v: &MultiSeries<BigRational>,
    k: &[u32],
) -> Result<MomentPolynomial> {
    let m = u.num_vars();
    if v.num_vars() != m || k.len() != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            got: if v.num_vars() != m {
                v.num_vars()
            } else {
                k.len()
            },
        });
    }
    if !u.constant_term().is_zero() || !v.constant_term().is_zero() {
        return Err(Error::Series("u(0) and v(0) must vanish".into()));
    }
    for s in [u, v] {
        if !s.truncation().admits(k) {
            let have = match s.truncation() {
                Truncation::PerVariable(b) => b.iter().map(|&x| x as usize).min().unwrap_or(0),
                Truncation::TotalDegree(d) => *d as usize,
            };
            return Err(Error::InsufficientOrder {
                needed: k.iter().map(|&x| x as usize).max().unwrap_or(0),
                have,
            });
        }
    }
    // Only exponents <= k componentwise can contribute to [s^k].
    let t = Truncation::PerVariable(k.to_vec());
    let ux = u
        .truncate(t.clone())
        .map_ring(|c| RationalPoly::linear(c.clone()));
    let vx = v
        .truncate(t)
        .map_ring(|c| RationalPoly::constant(c.clone()));
    let e = ux.add(&vx)?.exp()?;
    Ok(MomentPolynomial {
        k: k.to_vec(),
        poly: e.coeff(k),
    })
}

/// `n!` as a rational.
pub fn factorial(n: u32) -> BigRational {
    (1..=n as i64).fold(BigRational::one(), |acc, i| {
        acc * BigRational::from_integer(i.into())
    })
}

/// Largest absolute coefficient difference between two float series; used
/// for tolerance comparisons.
pub fn max_abs_diff(a: &MultiSeries<f64>, b: &MultiSeries<f64>) -> f64 {
    let mut keys: Vec<&Vec<u32>> = a.coeffs.keys().chain(b.coeffs.keys()).collect();
    keys.sort();
    keys.dedup();
    keys.into_iter()
        .map(|e| {
            let x = a.coeffs.get(e).copied().unwrap_or(0.0);
            let y = b.coeffs.get(e).copied().unwrap_or(0.0);
            (x - y).abs()
        })
        .fold(0.0, f64::max)
}

/// Exact rational from a small fraction; convenience for tests and callers.
pub fn ratio(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}
