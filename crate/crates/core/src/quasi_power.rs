//! Quasi-power families: sequences of exact distributions indexed by `n`,
//! their standardization, convergence studies against the normal limit,
//! cross-moment checks and the degenerate counterexample.

use alloc::boxed::Box;
use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::distribution::{
    kolmogorov_distance, kolmogorov_distance_lattice, sqrt_rational, to_f64, GaussianSpec,
    LatticeDistribution,
};
use crate::series::{factorial, moment_polynomial, MultiSeries};
use crate::{Error, Result};

/// Distribution of `X + Y` for independent `X ~ a`, `Y ~ b`.
pub fn convolve(a: &LatticeDistribution, b: &LatticeDistribution) -> Result<LatticeDistribution> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            got: b.dim(),
        });
    }
    let mut acc: BTreeMap<Vec<BigRational>, BigUint> = BTreeMap::new();
    for x in a.atoms() {
        for y in b.atoms() {
            let p: Vec<BigRational> = x.point.iter().zip(&y.point).map(|(u, v)| u + v).collect();
            *acc.entry(p).or_default() += &x.weight * &y.weight;
        }
    }
    LatticeDistribution::from_weights(a.dim(), acc)
}

/// `n`-fold convolution of `base` with itself; `n = 0` gives the point mass
/// at the origin.
///
/// Convolves with the base repeatedly: with a small base this costs
/// `n·|base|·|support|`, below the `|support|²` of a squaring step.
pub fn convolution_power(base: &LatticeDistribution, n: usize) -> Result<LatticeDistribution> {
    let mut acc = LatticeDistribution::point_mass(vec![BigRational::zero(); base.dim()])?;
    for _ in 0..n {
        acc = convolve(&acc, base)?;
    }
    Ok(acc)
}

/// Series data `u`, `v` of `M_n(s) = e^{u(s)φ_n + v(s)}` and the derivatives
/// of `u`, `v` at the origin.
#[derive(Debug, Clone, PartialEq)]
pub struct AnalyticData {
    pub u: MultiSeries<BigRational>,
    pub v: MultiSeries<BigRational>,
    pub grad_u0: Vec<BigRational>,
    pub hess_u0: Vec<Vec<BigRational>>,
    pub grad_v0: Vec<BigRational>,
    pub hess_v0: Vec<Vec<BigRational>>,
}

impl AnalyticData {
    pub fn new(u: MultiSeries<BigRational>, v: MultiSeries<BigRational>) -> Result<Self> {
        if u.num_vars() != v.num_vars() {
            return Err(Error::DimensionMismatch {
                expected: u.num_vars(),
                got: v.num_vars(),
            });
        }
        if !u.constant_term().is_zero() || !v.constant_term().is_zero() {
            return Err(Error::InvalidArgument("u(0) and v(0) must vanish".into()));
        }
        if u.truncation().max_total_degree() < 2 {
            return Err(Error::InsufficientOrder { needed: 2, have: 1 });
        }
        let (grad_u0, hess_u0) = derivatives(&u);
        let (grad_v0, hess_v0) = derivatives(&v);
        Ok(Self {
            u,
            v,
            grad_u0,
            hess_u0,
            grad_v0,
            hess_v0,
        })
    }
}

fn derivatives(f: &MultiSeries<BigRational>) -> (Vec<BigRational>, Vec<Vec<BigRational>>) {
    let m = f.num_vars();
    let admits = |e: &[u32]| f.truncation().admits(e);
    let get = |e: Vec<u32>| {
        if admits(&e) {
            f.coeff(&e)
        } else {
            BigRational::zero()
        }
    };
    let grad = (0..m)
        .map(|j| {
            let mut e = vec![0; m];
            e[j] = 1;
            get(e)
        })
        .collect();
    let hess = (0..m)
        .map(|i| {
            (0..m)
                .map(|j| {
                    let mut e = vec![0; m];
                    e[i] += 1;
                    e[j] += 1;
                    let c = get(e);
                    if i == j {
                        c * BigRational::from_integer(2.into())
                    } else {
                        c
                    }
                })
                .collect()
        })
        .collect();
    (grad, hess)
}

type Generator = Box<dyn Fn(usize) -> Result<LatticeDistribution>>;

/// A sequence `n ↦ Ω_n` of exact distributions with scale `φ_n = n`.
///
/// All families built here are computed exactly, so `κ_n = ∞`.
pub struct QuasiPowerFamily {
    name: String,
    dim: usize,
    generator: Generator,
    analytic: Option<AnalyticData>,
}

impl core::fmt::Debug for QuasiPowerFamily {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("QuasiPowerFamily")
            .field("name", &self.name)
            .field("dim", &self.dim)
            .field("analytic", &self.analytic.is_some())
            .finish()
    }
}

impl QuasiPowerFamily {
    pub fn new(
        name: impl Into<String>,
        dim: usize,
        generator: impl Fn(usize) -> Result<LatticeDistribution> + 'static,
    ) -> Self {
        Self {
            name: name.into(),
            dim,
            generator: Box::new(generator),
            analytic: None,
        }
    }

    pub fn with_analytic(mut self, data: AnalyticData) -> Result<Self> {
        if data.u.num_vars() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: data.u.num_vars(),
            });
        }
        self.analytic = Some(data);
        Ok(self)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn analytic(&self) -> Option<&AnalyticData> {
        self.analytic.as_ref()
    }

    pub fn phi(&self, n: usize) -> BigRational {
        BigRational::from_integer(n.into())
    }

    pub fn kappa(&self, _n: usize) -> f64 {
        f64::INFINITY
    }

    pub fn generate(&self, n: usize) -> Result<LatticeDistribution> {
        let d = (self.generator)(n)?;
        if d.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: d.dim(),
            });
        }
        Ok(d)
    }
}

/// Sums of `n` independent copies of `base`: `u = log E e^{⟨X,s⟩}`, `v = 0`,
/// with series truncated at `order` in each variable.
pub fn iid_sum_family(
    name: impl Into<String>,
    base: LatticeDistribution,
    order: u32,
) -> Result<QuasiPowerFamily> {
    let m = base.dim();
    let u = base.mgf_series(order).log()?;
    let v = MultiSeries::zero(m, u.truncation().clone());
    let data = AnalyticData::new(u, v)?;
    QuasiPowerFamily::new(name, m, move |n| convolution_power(&base, n)).with_analytic(data)
}

/// How `Ω_n` is centred and which covariance the reference normal gets.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Mode {
    /// Centre at the exact mean; reference covariance = exact covariance / φ_n.
    Exact,
    /// Centre at `∇u(0)φ_n`; reference covariance `H_u(0)`.
    Analytic,
}

/// A standardized `Ω_n` with its reference normal.
#[derive(Debug, Clone, PartialEq)]
pub struct Standardized {
    pub distribution: LatticeDistribution,
    pub gaussian: GaussianSpec,
    pub center: Vec<BigRational>,
    pub scale: BigRational,
    /// Coordinates kept when the exact covariance is singular: the law lives
    /// on an affine subspace and these axes parametrize it.
    pub kept_axes: Option<Vec<usize>>,
}

/// `(Ω_n − center)/√φ_n` with its reference normal.
pub fn standardized_distribution(
    fam: &QuasiPowerFamily,
    n: usize,
    mode: Mode,
) -> Result<Standardized> {
    let d = fam.generate(n)?;
    let phi = fam.phi(n);
    let scale = sqrt_rational(&phi)?;
    match mode {
        Mode::Analytic => {
            let a = fam.analytic.as_ref().ok_or_else(|| {
                Error::InvalidArgument(alloc::format!("family {} has no analytic data", fam.name))
            })?;
            if det_rational(&a.hess_u0).is_zero() {
                return Err(Error::Degenerate(
                    "H_u(0) is singular; use the degenerate demo".into(),
                ));
            }
            let center: Vec<BigRational> = a.grad_u0.iter().map(|g| g * &phi).collect();
            let cov = to_f64_matrix(&a.hess_u0);
            Ok(Standardized {
                distribution: d.standardize(&center, &scale)?,
                gaussian: GaussianSpec::centered(cov)?,
                center,
                scale,
                kept_axes: None,
            })
        }
        Mode::Exact => {
            let center = d.mean();
            let cov: Vec<Vec<BigRational>> = d
                .covariance()
                .into_iter()
                .map(|row| row.into_iter().map(|c| c / &phi).collect())
                .collect();
            let kept = full_rank_axes(&cov);
            if kept.is_empty() {
                return Err(Error::Degenerate(alloc::format!("Ω_{n} is a point mass")));
            }
            let z = d.standardize(&center, &scale)?;
            if kept.len() == d.dim() {
                return Ok(Standardized {
                    distribution: z,
                    gaussian: GaussianSpec::centered(to_f64_matrix(&cov))?,
                    center,
                    scale,
                    kept_axes: None,
                });
            }
            let sub: Vec<Vec<BigRational>> = kept
                .iter()
                .map(|&i| kept.iter().map(|&j| cov[i][j].clone()).collect())
                .collect();
            Ok(Standardized {
                distribution: z.marginal(&kept)?,
                gaussian: GaussianSpec::centered(to_f64_matrix(&sub))?,
                center,
                scale,
                kept_axes: Some(kept),
            })
        }
    }
}

fn to_f64_matrix(m: &[Vec<BigRational>]) -> Vec<Vec<f64>> {
    m.iter().map(|r| r.iter().map(to_f64).collect()).collect()
}

/// Exact determinant by Gaussian elimination over the rationals.
pub fn det_rational(m: &[Vec<BigRational>]) -> BigRational {
    let n = m.len();
    let mut a: Vec<Vec<BigRational>> = m.to_vec();
    let mut det = BigRational::one();
    for col in 0..n {
        let Some(p) = (col..n).find(|&r| !a[r][col].is_zero()) else {
            return BigRational::zero();
        };
        if p != col {
            a.swap(p, col);
            det = -det;
        }
        let pivot = a[col][col].clone();
        det *= &pivot;
        for r in col + 1..n {
            if a[r][col].is_zero() {
                continue;
            }
            let f = &a[r][col] / &pivot;
            for c in col..n {
                let v = &f * &a[col][c];
                a[r][c] -= v;
            }
        }
    }
    det
}

/// Greedy lexicographic choice of axes whose principal covariance submatrix
/// is non-singular, maximal for inclusion.
pub fn full_rank_axes(cov: &[Vec<BigRational>]) -> Vec<usize> {
    let mut kept: Vec<usize> = Vec::new();
    for j in 0..cov.len() {
        let mut trial = kept.clone();
        trial.push(j);
        let sub: Vec<Vec<BigRational>> = trial
            .iter()
            .map(|&a| trial.iter().map(|&b| cov[a][b].clone()).collect())
            .collect();
        if !det_rational(&sub).is_zero() {
            kept = trial;
        }
    }
    kept
}

/// One row of a convergence study.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ConvergenceRow {
    pub n: usize,
    pub phi_n: f64,
    pub d_n: f64,
    /// `d_n·√φ_n`.
    pub normalized: f64,
}

/// Kolmogorov distance of the standardized `Ω_n` to its normal reference
/// for each `n`, sorted by `n`.
pub fn convergence_study(
    fam: &QuasiPowerFamily,
    ns: &[usize],
    mode: Mode,
    tol: f64,
) -> Result<Vec<ConvergenceRow>> {
    let mut ns = ns.to_vec();
    ns.sort_unstable();
    ns.dedup();
    let mut rows = Vec::with_capacity(ns.len());
    for n in ns {
        let s = standardized_distribution(fam, n, mode)?;
        let d_n = kolmogorov_distance(&s.distribution, &s.gaussian, tol)?;
        let phi_n = to_f64(&fam.phi(n));
        rows.push(ConvergenceRow {
            n,
            phi_n,
            d_n,
            normalized: d_n * libm::sqrt(phi_n),
        });
    }
    Ok(rows)
}

/// `max/min` of `d_n·√φ_n` over a study; infinite if some entry is zero.
pub fn normalized_spread(rows: &[ConvergenceRow]) -> f64 {
    let max = rows
        .iter()
        .map(|r| r.normalized)
        .fold(f64::NEG_INFINITY, f64::max);
    let min = rows
        .iter()
        .map(|r| r.normalized)
        .fold(f64::INFINITY, f64::min);
    if min > 0.0 {
        max / min
    } else {
        f64::INFINITY
    }
}

/// One row of [`moment_check`].
#[derive(Debug, Clone, PartialEq)]
pub struct MomentRow {
    pub n: usize,
    /// `E ∏ Ω_{n,ℓ}^{k_ℓ} / ∏ k_ℓ!`.
    pub exact: BigRational,
    /// `p_k(φ_n)`.
    pub predicted: BigRational,
    pub abs_error: BigRational,
}

/// Compares exact scaled cross-moments with the moment polynomial.
pub fn moment_check(fam: &QuasiPowerFamily, k: &[u32], ns: &[usize]) -> Result<Vec<MomentRow>> {
    let a = fam
        .analytic
        .as_ref()
        .ok_or_else(|| Error::InvalidArgument("moment check needs analytic data".into()))?;
    if k.len() != fam.dim {
        return Err(Error::DimensionMismatch {
            expected: fam.dim,
            got: k.len(),
        });
    }
    let p = moment_polynomial(&a.u, &a.v, k)?;
    let kfact = k
        .iter()
        .fold(BigRational::one(), |acc, &e| acc * factorial(e));
    ns.iter()
        .map(|&n| {
            let d = fam.generate(n)?;
            let exact = d.moment(k)? / &kfact;
            let predicted = p.eval(&fam.phi(n));
            let abs_error = num_traits::Signed::abs(&(&exact - &predicted));
            Ok(MomentRow {
                n,
                exact,
                predicted,
                abs_error,
            })
        })
        .collect()
}

/// Exact mean and covariance of `Ω_n` next to `∇u(0)φ_n + ∇v(0)` and
/// `H_u(0)φ_n + H_v(0)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FirstMoments {
    pub mean: Vec<BigRational>,
    pub predicted_mean: Vec<BigRational>,
    pub cov: Vec<Vec<BigRational>>,
    pub predicted_cov: Vec<Vec<BigRational>>,
}

pub fn first_moments(fam: &QuasiPowerFamily, n: usize) -> Result<FirstMoments> {
    let a = fam
        .analytic
        .as_ref()
        .ok_or_else(|| Error::InvalidArgument("needs analytic data".into()))?;
    let d = fam.generate(n)?;
    let phi = fam.phi(n);
    let predicted_mean = a
        .grad_u0
        .iter()
        .zip(&a.grad_v0)
        .map(|(u, v)| u * &phi + v)
        .collect();
    let predicted_cov = a
        .hess_u0
        .iter()
        .zip(&a.hess_v0)
        .map(|(ru, rv)| ru.iter().zip(rv).map(|(u, v)| u * &phi + v).collect())
        .collect();
    Ok(FirstMoments {
        mean: d.mean(),
        predicted_mean,
        cov: d.covariance(),
        predicted_cov,
    })
}

/// One row of [`degenerate_demo`].
#[derive(Debug, Clone, PartialEq)]
pub struct DegenerateRow {
    pub n: usize,
    /// Exact sup distance of `Ω_n/√n` to the point mass at 0.
    pub sup_to_limit: BigRational,
    /// Distance of `Ω_n/√n` to `N(0, 1/n)`.
    pub sup_to_shrinking_normal: f64,
}

/// `Ω_n = ±1` with probability ½ each, scaled by `1/√n`: the distribution
/// converges to the point mass at 0, but not uniformly.
pub fn degenerate_demo(ns: &[usize], tol: f64) -> Result<Vec<DegenerateRow>> {
    let coin = LatticeDistribution::from_weights(
        1,
        [
            (
                vec![BigRational::from_integer(BigInt::from(-1))],
                BigUint::one(),
            ),
            (
                vec![BigRational::from_integer(BigInt::from(1))],
                BigUint::one(),
            ),
        ],
    )?;
    let limit = LatticeDistribution::point_mass(vec![BigRational::zero()])?;
    ns.iter()
        .map(|&n| {
            if n == 0 {
                return Err(Error::InvalidArgument("n must be positive".into()));
            }
            let scale = sqrt_rational(&BigRational::from_integer(n.into()))?;
            let x = coin.standardize(&[BigRational::zero()], &scale)?;
            let g = GaussianSpec::centered(vec![vec![1.0 / n as f64]])?;
            Ok(DegenerateRow {
                n,
                sup_to_limit: kolmogorov_distance_lattice(&x, &limit)?,
                sup_to_shrinking_normal: kolmogorov_distance(&x, &g, tol)?,
            })
        })
        .collect()
}
