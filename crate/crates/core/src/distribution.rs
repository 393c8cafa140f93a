//! Finite lattice distributions with exact weights, Gaussian references, and
//! the Kolmogorov (sup-CDF) distance between them.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::DMatrix;
use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::quadrature::Adaptive1d;
use crate::series::{MultiSeries, Truncation};
use crate::{Complex, Error, Result};

/// Largest dimension for Gaussian CDFs and Kolmogorov distances.
pub const MAX_CDF_DIM: usize = 3;

/// A support point with its (unnormalized) weight.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Atom {
    pub point: Vec<BigRational>,
    pub weight: BigUint,
}

/// A finite distribution on `Q^m`: distinct support points with positive
/// integer weights. Probabilities are `weight / total`.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeDistribution {
    dim: usize,
    atoms: Vec<Atom>,
    total: BigUint,
    points_f64: Vec<f64>,
    probs_f64: Vec<f64>,
}

impl LatticeDistribution {
    /// Validates and sorts `atoms`. Duplicated points are an error; use
    /// [`LatticeDistribution::from_weights`] to aggregate instead.
    pub fn new(dim: usize, mut atoms: Vec<Atom>) -> Result<Self> {
        check_atoms(dim, atoms.iter().map(|a| (&a.point, &a.weight)))?;
        atoms.sort_by(|a, b| a.point.cmp(&b.point));
        if atoms.windows(2).any(|w| w[0].point == w[1].point) {
            return Err(Error::InvalidArgument("duplicate support point".into()));
        }
        Ok(Self::build(dim, atoms))
    }

    /// Sums the weights of repeated points and drops zero weights.
    pub fn from_weights(
        dim: usize,
        atoms: impl IntoIterator<Item = (Vec<BigRational>, BigUint)>,
    ) -> Result<Self> {
        let mut acc: BTreeMap<Vec<BigRational>, BigUint> = BTreeMap::new();
        for (p, w) in atoms {
            if p.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: p.len(),
                });
            }
            if w.is_zero() {
                continue;
            }
            *acc.entry(p).or_default() += w;
        }
        let atoms: Vec<Atom> = acc
            .into_iter()
            .map(|(point, weight)| Atom { point, weight })
            .collect();
        check_atoms(dim, atoms.iter().map(|a| (&a.point, &a.weight)))?;
        Ok(Self::build(dim, atoms))
    }

    /// Convenience constructor for integer support points.
    pub fn from_integer_points(dim: usize, atoms: &[(Vec<i64>, u64)]) -> Result<Self> {
        Self::from_weights(
            dim,
            atoms.iter().map(|(p, w)| {
                (
                    p.iter()
                        .map(|&x| BigRational::from_integer(x.into()))
                        .collect(),
                    BigUint::from(*w),
                )
            }),
        )
    }

    pub fn point_mass(point: Vec<BigRational>) -> Result<Self> {
        let dim = point.len();
        Self::new(
            dim,
            vec![Atom {
                point,
                weight: BigUint::one(),
            }],
        )
    }

    fn build(dim: usize, atoms: Vec<Atom>) -> Self {
        let total = atoms.iter().map(|a| &a.weight).sum::<BigUint>();
        let total_int = BigInt::from(total.clone());
        let points_f64 = atoms
            .iter()
            .flat_map(|a| a.point.iter().map(to_f64))
            .collect();
        let probs_f64 = atoms
            .iter()
            .map(|a| {
                to_f64(&BigRational::new(
                    a.weight.clone().into(),
                    total_int.clone(),
                ))
            })
            .collect();
        Self {
            dim,
            atoms,
            total,
            points_f64,
            probs_f64,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Atoms in lexicographic order of their points.
    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn total(&self) -> &BigUint {
        &self.total
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    /// Always false: a distribution has at least one atom.
    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn point_f64(&self, i: usize) -> &[f64] {
        &self.points_f64[i * self.dim..(i + 1) * self.dim]
    }

    pub fn probability_f64(&self, i: usize) -> f64 {
        self.probs_f64[i]
    }

    pub fn probability(&self, i: usize) -> BigRational {
        BigRational::new(
            self.atoms[i].weight.clone().into(),
            self.total.clone().into(),
        )
    }

    /// Same law: equal supports and proportional weights.
    pub fn same_law(&self, other: &Self) -> bool {
        self.dim == other.dim
            && self.len() == other.len()
            && self.atoms.iter().zip(&other.atoms).all(|(a, b)| {
                a.point == b.point && &a.weight * &other.total == &b.weight * &self.total
            })
    }

    fn check_dim(&self, got: usize) -> Result<()> {
        if got != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got,
            });
        }
        Ok(())
    }

    /// `P(X ≤ z)` componentwise, exactly.
    pub fn cdf(&self, z: &[BigRational]) -> Result<BigRational> {
        self.check_dim(z.len())?;
        let mass: BigUint = self
            .atoms
            .iter()
            .filter(|a| a.point.iter().zip(z).all(|(x, z)| x <= z))
            .map(|a| &a.weight)
            .sum();
        Ok(BigRational::new(mass.into(), self.total.clone().into()))
    }

    /// [`cdf`](Self::cdf) at a floating-point argument; `±∞` coordinates are
    /// allowed and compared exactly.
    pub fn cdf_f64(&self, z: &[f64]) -> Result<BigRational> {
        self.check_dim(z.len())?;
        let mut bounds = Vec::with_capacity(z.len());
        for &v in z {
            bounds.push(if v.is_nan() {
                return Err(Error::InvalidArgument("NaN CDF argument".into()));
            } else if v == f64::INFINITY {
                None
            } else if v == f64::NEG_INFINITY {
                return Ok(BigRational::zero());
            } else {
                BigRational::from_float(v)
            });
        }
        let mass: BigUint = self
            .atoms
            .iter()
            .filter(|a| {
                a.point
                    .iter()
                    .zip(&bounds)
                    .all(|(x, b)| b.as_ref().is_none_or(|b| x <= b))
            })
            .map(|a| &a.weight)
            .sum();
        Ok(BigRational::new(mass.into(), self.total.clone().into()))
    }

    /// `E e^{i⟨X,t⟩}`.
    pub fn char_fn(&self, t: &[f64]) -> Result<Complex> {
        self.check_dim(t.len())?;
        let mut acc = Complex::new(0.0, 0.0);
        for i in 0..self.len() {
            let phase: f64 = self.point_f64(i).iter().zip(t).map(|(x, t)| x * t).sum();
            acc += Complex::new(libm::cos(phase), libm::sin(phase)) * self.probs_f64[i];
        }
        Ok(acc)
    }

    /// `E ∏ X_ℓ^{k_ℓ}`, exactly.
    pub fn moment(&self, k: &[u32]) -> Result<BigRational> {
        self.check_dim(k.len())?;
        let mut acc = BigRational::zero();
        for a in &self.atoms {
            let mut term = BigRational::from_integer(a.weight.clone().into());
            for (x, &e) in a.point.iter().zip(k) {
                if e > 0 {
                    term *= num_traits::pow(x.clone(), e as usize);
                }
            }
            acc += term;
        }
        Ok(acc / BigRational::from_integer(self.total.clone().into()))
    }

    pub fn mean(&self) -> Vec<BigRational> {
        (0..self.dim)
            .map(|j| {
                self.moment(&unit(self.dim, j, 1))
                    .expect("dimension matches")
            })
            .collect()
    }

    /// Exact covariance matrix.
    pub fn covariance(&self) -> Vec<Vec<BigRational>> {
        let mean = self.mean();
        let m = self.dim;
        let mut cov = vec![vec![BigRational::zero(); m]; m];
        for i in 0..m {
            for j in i..m {
                let mut e = vec![0u32; m];
                e[i] += 1;
                e[j] += 1;
                let c = self.moment(&e).expect("dimension matches") - &mean[i] * &mean[j];
                cov[i][j] = c.clone();
                cov[j][i] = c;
            }
        }
        cov
    }

    /// Pushes the distribution forward through `f`, merging collisions.
    pub fn map_support(
        &self,
        new_dim: usize,
        mut f: impl FnMut(&[BigRational]) -> Vec<BigRational>,
    ) -> Result<Self> {
        Self::from_weights(
            new_dim,
            self.atoms.iter().map(|a| (f(&a.point), a.weight.clone())),
        )
    }

    /// `x ↦ (x − center) / scale`.
    pub fn standardize(&self, center: &[BigRational], scale: &BigRational) -> Result<Self> {
        self.check_dim(center.len())?;
        if !scale.is_positive() {
            return Err(Error::InvalidArgument("scale must be positive".into()));
        }
        self.map_support(self.dim, |x| {
            x.iter().zip(center).map(|(x, c)| (x - c) / scale).collect()
        })
    }

    pub fn translate(&self, shift: &[BigRational]) -> Result<Self> {
        self.check_dim(shift.len())?;
        self.map_support(self.dim, |x| {
            x.iter().zip(shift).map(|(x, s)| x + s).collect()
        })
    }

    /// Distribution of the coordinates in `axes` (0-based, strictly increasing).
    pub fn marginal(&self, axes: &[usize]) -> Result<Self> {
        check_axes(axes, self.dim)?;
        self.map_support(axes.len(), |x| axes.iter().map(|&j| x[j].clone()).collect())
    }

    /// Moment generating function `Σ_k E[X^k]/k! s^k`, truncated at degree
    /// `order` in each variable.
    pub fn mgf_series(&self, order: u32) -> MultiSeries<BigRational> {
        let m = self.dim;
        let trunc = Truncation::PerVariable(vec![order; m]);
        let mut series = MultiSeries::zero(m, trunc);
        let total = BigRational::from_integer(self.total.clone().into());
        let mut exp = vec![0u32; m];
        loop {
            let mut coeff = BigRational::zero();
            for a in &self.atoms {
                let mut term = BigRational::from_integer(a.weight.clone().into());
                for (x, &e) in a.point.iter().zip(&exp) {
                    term *= num_traits::pow(x.clone(), e as usize);
                    term /= crate::series::factorial(e);
                }
                coeff += term;
            }
            series.set(exp.clone(), coeff / &total);
            if !next_in_box(&mut exp, order) {
                return series;
            }
        }
    }
}

fn check_atoms<'a>(
    dim: usize,
    atoms: impl Iterator<Item = (&'a Vec<BigRational>, &'a BigUint)>,
) -> Result<()> {
    if dim == 0 {
        return Err(Error::InvalidArgument("dimension must be positive".into()));
    }
    let mut any = false;
    for (p, w) in atoms {
        any = true;
        if p.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: p.len(),
            });
        }
        if w.is_zero() {
            return Err(Error::InvalidArgument(
                "atom weights must be positive".into(),
            ));
        }
    }
    if !any {
        return Err(Error::InvalidArgument(
            "a distribution needs at least one atom".into(),
        ));
    }
    Ok(())
}

fn check_axes(axes: &[usize], dim: usize) -> Result<()> {
    if axes.is_empty() {
        return Err(Error::InvalidArgument("empty axis subset".into()));
    }
    if axes.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidArgument(
            "axes must be strictly increasing".into(),
        ));
    }
    if let Some(&bad) = axes.iter().find(|&&j| j >= dim) {
        return Err(Error::NotSubset { index: bad });
    }
    Ok(())
}

fn next_in_box(exp: &mut [u32], order: u32) -> bool {
    for e in exp.iter_mut() {
        if *e < order {
            *e += 1;
            return true;
        }
        *e = 0;
    }
    false
}

fn unit(m: usize, j: usize, e: u32) -> Vec<u32> {
    let mut v = vec![0; m];
    v[j] = e;
    v
}

/// Nearest-ish `f64`; saturates to `±∞` for huge values.
pub fn to_f64(q: &BigRational) -> f64 {
    q.to_f64().unwrap_or(if q.is_negative() {
        f64::NEG_INFINITY
    } else {
        f64::INFINITY
    })
}

/// `√q`: exact when numerator and denominator are perfect squares, otherwise
/// the exact value of the rounded `f64` square root.
pub fn sqrt_rational(q: &BigRational) -> Result<BigRational> {
    if q.is_negative() {
        return Err(Error::InvalidArgument(
            "square root of a negative number".into(),
        ));
    }
    let (n, d) = (q.numer(), q.denom());
    let (rn, rd) = (n.sqrt(), d.sqrt());
    if &(&rn * &rn) == n && &(&rd * &rd) == d {
        return Ok(BigRational::new(rn, rd));
    }
    BigRational::from_float(libm::sqrt(to_f64(q)))
        .ok_or_else(|| Error::InvalidArgument("square root out of range".into()))
}

/// A normal distribution `N(μ, Σ)` with `Σ` symmetric positive semidefinite.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianSpec {
    mean: Vec<f64>,
    cov: Vec<Vec<f64>>,
    eigenvalues: Vec<f64>,
    /// Row-major lower Cholesky factor; `None` when degenerate.
    chol: Option<Vec<f64>>,
}

const SYMMETRY_TOL: f64 = 1e-12;
const PSD_TOL: f64 = 1e-10;
const DEGENERACY_TOL: f64 = 1e-12;

impl GaussianSpec {
    pub fn new(mean: Vec<f64>, cov: Vec<Vec<f64>>) -> Result<Self> {
        let m = mean.len();
        if m == 0 {
            return Err(Error::InvalidArgument("dimension must be positive".into()));
        }
        if cov.len() != m {
            return Err(Error::DimensionMismatch {
                expected: m,
                got: cov.len(),
            });
        }
        for row in &cov {
            if row.len() != m {
                return Err(Error::DimensionMismatch {
                    expected: m,
                    got: row.len(),
                });
            }
        }
        if mean
            .iter()
            .chain(cov.iter().flatten())
            .any(|x| !x.is_finite())
        {
            return Err(Error::InvalidArgument(
                "non-finite mean or covariance".into(),
            ));
        }
        let scale = cov.iter().flatten().fold(0.0f64, |a, x| a.max(x.abs()));
        for i in 0..m {
            for j in 0..i {
                if (cov[i][j] - cov[j][i]).abs() > SYMMETRY_TOL * scale.max(1.0) {
                    return Err(Error::InvalidArgument("covariance is not symmetric".into()));
                }
            }
        }
        let a = DMatrix::from_fn(m, m, |i, j| 0.5 * (cov[i][j] + cov[j][i]));
        let mut eigenvalues: Vec<f64> = a.clone().symmetric_eigenvalues().iter().copied().collect();
        eigenvalues.sort_by(f64::total_cmp);
        let (lo, hi) = (eigenvalues[0], eigenvalues[m - 1]);
        if lo < -PSD_TOL * scale.max(1.0) {
            return Err(Error::InvalidArgument(format!(
                "covariance is not positive semidefinite (eigenvalue {lo:e})"
            )));
        }
        let chol = if hi > 0.0 && lo > DEGENERACY_TOL * hi {
            a.cholesky().map(|c| {
                let l = c.l();
                (0..m * m).map(|k| l[(k / m, k % m)]).collect()
            })
        } else {
            None
        };
        Ok(Self {
            mean,
            cov,
            eigenvalues,
            chol,
        })
    }

    /// `N(0, Σ)`.
    pub fn centered(cov: Vec<Vec<f64>>) -> Result<Self> {
        Self::new(vec![0.0; cov.len()], cov)
    }

    /// `N(0, I_m)`.
    pub fn standard(m: usize) -> Self {
        let cov = (0..m)
            .map(|i| (0..m).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
            .collect();
        Self::centered(cov).expect("identity is a valid covariance")
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn cov(&self) -> &[Vec<f64>] {
        &self.cov
    }

    /// Ascending eigenvalues of `Σ`.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn is_degenerate(&self) -> bool {
        self.chol.is_none()
    }

    pub fn marginal(&self, axes: &[usize]) -> Result<Self> {
        check_axes(axes, self.dim())?;
        Self::new(
            axes.iter().map(|&i| self.mean[i]).collect(),
            axes.iter()
                .map(|&i| axes.iter().map(|&j| self.cov[i][j]).collect())
                .collect(),
        )
    }

    pub fn shifted(&self, shift: &[f64]) -> Result<Self> {
        if shift.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: shift.len(),
            });
        }
        let mut g = self.clone();
        for (m, s) in g.mean.iter_mut().zip(shift) {
            *m += s;
        }
        Ok(g)
    }

    /// `e^{i⟨μ,t⟩ − ½ tᵀΣt}`; defined for degenerate `Σ` too.
    pub fn char_fn(&self, t: &[f64]) -> Result<Complex> {
        if t.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: t.len(),
            });
        }
        let phase: f64 = self.mean.iter().zip(t).map(|(m, t)| m * t).sum();
        let mut q = 0.0;
        for (i, ti) in t.iter().enumerate() {
            for (j, tj) in t.iter().enumerate() {
                q += ti * self.cov[i][j] * tj;
            }
        }
        Ok(Complex::from_polar(libm::exp(-0.5 * q), phase))
    }

    /// `P(Y ≤ z)` within `tol`.
    ///
    /// Writing `Y = μ + L W` with `L` the Cholesky factor, the innermost
    /// coordinate is integrated in closed form and the outer ones with
    /// adaptive Gauss–Legendre over `[−R, b]`, where `R` is chosen so the
    /// mass outside `[−R, R]^m` is below `tol/10`.
    pub fn cdf(&self, z: &[f64], tol: f64) -> Result<f64> {
        let m = self.dim();
        if z.len() != m {
            return Err(Error::DimensionMismatch {
                expected: m,
                got: z.len(),
            });
        }
        if m > MAX_CDF_DIM {
            return Err(Error::Capacity {
                what: "Gaussian CDF dimension",
                got: m,
                limit: MAX_CDF_DIM,
            });
        }
        if !(tol > 0.0) {
            return Err(Error::InvalidArgument("tolerance must be positive".into()));
        }
        if z.iter().any(|v| v.is_nan()) {
            return Err(Error::InvalidArgument("NaN CDF argument".into()));
        }
        let Some(chol) = &self.chol else {
            return Err(Error::Degenerate(format!(
                "smallest eigenvalue {:e}",
                self.eigenvalues[0]
            )));
        };
        let cx = CdfContext {
            m,
            mean: &self.mean,
            chol,
            z,
            radius: tail_radius(tol / (10.0 * m as f64)),
            tol: 0.4 * tol,
            rule: Adaptive1d::default(),
        };
        let mut w = [0.0; MAX_CDF_DIM];
        Ok(cx.level(0, &mut w).clamp(0.0, 1.0))
    }
}

struct CdfContext<'a> {
    m: usize,
    mean: &'a [f64],
    chol: &'a [f64],
    z: &'a [f64],
    radius: f64,
    tol: f64,
    rule: Adaptive1d,
}

impl CdfContext<'_> {
    fn level(&self, k: usize, w: &mut [f64; MAX_CDF_DIM]) -> f64 {
        let mut s = self.z[k] - self.mean[k];
        for j in 0..k {
            s -= self.chol[k * self.m + j] * w[j];
        }
        let b = s / self.chol[k * self.m + k];
        if k + 1 == self.m {
            return std_normal_cdf(b);
        }
        if b <= -self.radius {
            return 0.0;
        }
        let hi = b.min(self.radius);
        let mut f = |x: f64| {
            w[k] = x;
            std_normal_pdf(x) * self.level(k + 1, w)
        };
        self.rule.integrate(&mut f, -self.radius, hi, self.tol)
    }
}

/// Standard normal distribution function.
pub fn std_normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / core::f64::consts::SQRT_2)
}

pub fn std_normal_pdf(x: f64) -> f64 {
    libm::exp(-0.5 * x * x) / libm::sqrt(2.0 * core::f64::consts::PI)
}

/// Smallest `R` (to bisection accuracy) with `P(|N(0,1)| > R) ≤ eps`.
fn tail_radius(eps: f64) -> f64 {
    let (mut lo, mut hi) = (0.0f64, 40.0f64);
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if libm::erfc(mid / core::f64::consts::SQRT_2) > eps {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi
}

/// Distinct coordinates along each axis with each atom's rank.
struct AxisRanks {
    values: Vec<Vec<BigRational>>,
    strides: Vec<usize>,
    cells: usize,
}

impl AxisRanks {
    fn new(sources: &[&LatticeDistribution]) -> Self {
        let m = sources[0].dim;
        let values: Vec<Vec<BigRational>> = (0..m)
            .map(|k| {
                let mut v: Vec<BigRational> = sources
                    .iter()
                    .flat_map(|d| d.atoms.iter().map(move |a| a.point[k].clone()))
                    .collect();
                v.sort();
                v.dedup();
                v
            })
            .collect();
        let mut strides = vec![0; m];
        let mut cells = 1;
        for k in (0..m).rev() {
            strides[k] = cells;
            cells *= values[k].len() + 1;
        }
        Self {
            values,
            strides,
            cells,
        }
    }

    /// `cum[idx] = weight of atoms whose rank on axis k is < idx_k for all k`.
    fn cumulative(&self, d: &LatticeDistribution) -> Vec<BigUint> {
        let m = self.values.len();
        let mut cum = vec![BigUint::zero(); self.cells];
        for a in &d.atoms {
            let mut at = 0;
            for k in 0..m {
                let r = self.values[k]
                    .binary_search(&a.point[k])
                    .expect("value present");
                at += (r + 1) * self.strides[k];
            }
            cum[at] += &a.weight;
        }
        for k in 0..m {
            let len = self.values[k].len() + 1;
            let stride = self.strides[k];
            for at in 0..self.cells {
                if !(at / stride).is_multiple_of(len) {
                    let prev = cum[at - stride].clone();
                    cum[at] += prev;
                }
            }
        }
        cum
    }
}

/// `sup_z |F_d(z) − Φ_g(z)|`.
///
/// The sup is taken over the corners built from every support coordinate
/// `v`, its left limit `v − ε` (`ε = 10⁻⁹` times the axis range) and `+∞`
/// on each axis. `F_d` is exact on that grid and Gaussian values are accurate
/// to `tol`, so the result is within `tol` plus the `ε` slack of the true sup.
pub fn kolmogorov_distance(d: &LatticeDistribution, g: &GaussianSpec, tol: f64) -> Result<f64> {
    let m = d.dim;
    if g.dim() != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            got: g.dim(),
        });
    }
    if m > MAX_CDF_DIM {
        return Err(Error::Capacity {
            what: "Kolmogorov distance dimension",
            got: m,
            limit: MAX_CDF_DIM,
        });
    }
    if g.is_degenerate() {
        return Err(Error::Degenerate(
            "Kolmogorov distance needs a non-degenerate reference".into(),
        ));
    }
    let ranks = AxisRanks::new(&[d]);
    let total = BigInt::from(d.total.clone());
    let cum: Vec<f64> = ranks
        .cumulative(d)
        .into_iter()
        .map(|c| to_f64(&BigRational::new(c.into(), total.clone())))
        .collect();

    // Per-axis candidates: (coordinate, cumulative index).
    let candidates: Vec<Vec<(f64, usize)>> = ranks
        .values
        .iter()
        .map(|vals| {
            let v: Vec<f64> = vals.iter().map(to_f64).collect();
            let range = v[v.len() - 1] - v[0];
            let eps = if range > 0.0 {
                1e-9 * range
            } else {
                1e-9 * v[0].abs().max(1.0)
            };
            let mut c = Vec::with_capacity(2 * v.len() + 1);
            for (i, &x) in v.iter().enumerate() {
                c.push((x - eps, i));
                c.push((x, i + 1));
            }
            c.push((f64::INFINITY, v.len()));
            c
        })
        .collect();

    let mut pick = vec![0usize; m];
    let mut z = vec![0.0; m];
    let mut best = 0.0f64;
    loop {
        let mut at = 0;
        for k in 0..m {
            let (x, idx) = candidates[k][pick[k]];
            z[k] = x;
            at += idx * ranks.strides[k];
        }
        let diff = (cum[at] - g.cdf(&z, tol)?).abs();
        best = best.max(diff);
        if !advance(&mut pick, &candidates) {
            return Ok(best.min(1.0));
        }
    }
}

fn advance<T>(pick: &mut [usize], lists: &[Vec<T>]) -> bool {
    for k in (0..pick.len()).rev() {
        pick[k] += 1;
        if pick[k] < lists[k].len() {
            return true;
        }
        pick[k] = 0;
    }
    false
}

/// Exact `sup_z |F_a(z) − F_b(z)|` for two lattice distributions.
///
/// Both CDFs are constant on the cells of the merged coordinate grid, so the
/// sup is a maximum over its corners (including `+∞` on each axis). No
/// dimension limit applies beyond memory.
pub fn kolmogorov_distance_lattice(
    a: &LatticeDistribution,
    b: &LatticeDistribution,
) -> Result<BigRational> {
    if a.dim != b.dim {
        return Err(Error::DimensionMismatch {
            expected: a.dim,
            got: b.dim,
        });
    }
    let ranks = AxisRanks::new(&[a, b]);
    let ca = ranks.cumulative(a);
    let cb = ranks.cumulative(b);
    let (ta, tb) = (BigInt::from(a.total.clone()), BigInt::from(b.total.clone()));
    let mut best = BigInt::zero();
    for (x, y) in ca.into_iter().zip(cb) {
        let diff = (BigInt::from(x) * &tb - BigInt::from(y) * &ta).abs();
        if diff > best {
            best = diff;
        }
    }
    Ok(BigRational::new(best, ta * tb))
}
