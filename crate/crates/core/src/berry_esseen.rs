//! The right-hand side of the multivariate Berry–Esseen inequality, itemized
//! into its integral, marginal and smoothing parts, and its fully recursive
//! variant.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_rational::BigRational;
use num_traits::ToPrimitive;

use crate::distribution::{
    kolmogorov_distance, to_f64, GaussianSpec, LatticeDistribution, MAX_CDF_DIM,
};
use crate::lambda::LambdaOperator;
use crate::partition::{fubini, indices_of, smoothing_constants};
use crate::quadrature::{refine_with, QuadratureGrid, RefineConfig};
use crate::{Complex, Error, Result};

/// Numerical settings for the bound.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BoundConfig {
    /// Relative tolerance of the integral term.
    pub quad_rel_tol: f64,
    pub max_level: u32,
    pub nodes_per_panel: usize,
    pub panels_per_sign: usize,
    /// Absolute tolerance of Gaussian CDF values in sup distances.
    pub cdf_tol: f64,
}

impl Default for BoundConfig {
    fn default() -> Self {
        let q = RefineConfig::default();
        Self {
            quad_rel_tol: q.rel_tol,
            max_level: q.max_level,
            nodes_per_panel: q.nodes_per_panel,
            panels_per_sign: q.panels_per_sign,
            cdf_tol: 1e-6,
        }
    }
}

impl BoundConfig {
    fn refine(&self) -> RefineConfig {
        RefineConfig {
            rel_tol: self.quad_rel_tol,
            max_level: self.max_level,
            nodes_per_panel: self.nodes_per_panel,
            panels_per_sign: self.panels_per_sign,
            ..RefineConfig::default()
        }
    }
}

/// Sup distance of one proper marginal and its Fubini weight.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SubsetSup {
    /// 0-based axes.
    pub axes: Vec<usize>,
    pub weight: u64,
    pub sup: f64,
}

/// One subset's contribution to the recursive bound: `multiplier · (integral + smoothing)`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Multiplier {
    pub axes: Vec<usize>,
    pub multiplier: u64,
    pub integral: f64,
    pub smoothing: f64,
}

/// Itemized right-hand side. `rhs_total` is the sum of the three terms.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BoundReport {
    pub dim: usize,
    #[cfg_attr(feature = "serde", serde(rename = "T"))]
    pub t: f64,
    pub integral_term: f64,
    pub marginal_term: f64,
    pub smoothing_term: f64,
    pub rhs_total: f64,
    pub lhs_sup: Option<f64>,
    pub marginal_sups: Vec<SubsetSup>,
    /// Error estimate of `integral_term` (last refinement delta, summed over
    /// subsets in the recursive form).
    pub quadrature_error: f64,
    pub converged: bool,
    pub recursive: bool,
    pub multipliers: Vec<Multiplier>,
}

/// `A_j`: the maximum of the `j`-th marginal density, `1/√(2π Σ_jj)`.
pub fn gaussian_partial_sup(g: &GaussianSpec, j: usize) -> Result<f64> {
    if j >= g.dim() {
        return Err(Error::NotSubset { index: j });
    }
    if g.is_degenerate() {
        return Err(Error::Degenerate(
            "A_j needs a non-degenerate reference".into(),
        ));
    }
    Ok(1.0 / libm::sqrt(2.0 * PI * g.cov()[j][j]))
}

/// `2 Σ A_j / T · (C₁ + C₂)` with the constants for dimension `m = dim g`.
pub fn smoothing_term(g: &GaussianSpec, t: f64) -> Result<f64> {
    let c = smoothing_constants(g.dim())?;
    let mut sum_a = 0.0;
    for j in 0..g.dim() {
        sum_a += gaussian_partial_sup(g, j)?;
    }
    Ok(2.0 * sum_a * (c.c1 + c.c2) / t)
}

fn check_inputs(x: &LatticeDistribution, g: &GaussianSpec, t: f64) -> Result<()> {
    if x.dim() != g.dim() {
        return Err(Error::DimensionMismatch {
            expected: x.dim(),
            got: g.dim(),
        });
    }
    if x.dim() > MAX_CDF_DIM {
        return Err(Error::Capacity {
            what: "Berry–Esseen dimension",
            got: x.dim(),
            limit: MAX_CDF_DIM,
        });
    }
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "T must be positive and finite, got {t}"
        )));
    }
    if g.is_degenerate() {
        return Err(Error::Degenerate(
            "Berry–Esseen reference must be non-degenerate".into(),
        ));
    }
    Ok(())
}

/// Integrand `|Λ(φ_X)(t) − Λ(φ_Y)(t)| / |∏ t_ℓ|` at one point, evaluated
/// directly from the characteristic functions.
pub fn integrand(x: &LatticeDistribution, g: &GaussianSpec, t: &[f64]) -> Result<f64> {
    let m = x.dim();
    let op = LambdaOperator::full(m)?;
    if t.len() != m || g.dim() != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            got: if t.len() != m { t.len() } else { g.dim() },
        });
    }
    let lx = op.combine(|mask| {
        x.char_fn(&project_mask(t, mask))
            .expect("dimension checked")
    });
    let ly = op.combine(|mask| {
        g.char_fn(&project_mask(t, mask))
            .expect("dimension checked")
    });
    let prod: f64 = t.iter().product();
    if prod == 0.0 {
        return Err(Error::HyperplaneProximity {
            index: t.iter().position(|&v| v == 0.0).unwrap_or(0),
            modulus: 0.0,
            floor: 0.0,
        });
    }
    Ok((lx - ly).norm() / prod.abs())
}

fn project_mask(t: &[f64], mask: u32) -> Vec<f64> {
    t.iter()
        .enumerate()
        .map(|(i, &v)| if mask >> i & 1 == 1 { v } else { 0.0 })
        .collect()
}

/// Dense probability array over the distinct coordinates of each axis.
struct DenseLattice {
    values: Vec<Vec<f64>>,
    probs: Vec<f64>,
}

impl DenseLattice {
    fn new(x: &LatticeDistribution) -> Self {
        let m = x.dim();
        let exact: Vec<Vec<BigRational>> = (0..m)
            .map(|k| {
                let mut v: Vec<BigRational> =
                    x.atoms().iter().map(|a| a.point[k].clone()).collect();
                v.sort();
                v.dedup();
                v
            })
            .collect();
        let mut strides = vec![1usize; m];
        for k in (0..m.saturating_sub(1)).rev() {
            strides[k] = strides[k + 1] * exact[k + 1].len();
        }
        let size = strides[0] * exact[0].len();
        let mut probs = vec![0.0; size];
        for (i, a) in x.atoms().iter().enumerate() {
            let at: usize = (0..m)
                .map(|k| exact[k].binary_search(&a.point[k]).expect("present") * strides[k])
                .sum();
            probs[at] += x.probability_f64(i);
        }
        Self {
            values: exact
                .iter()
                .map(|v| v.iter().map(to_f64).collect())
                .collect(),
            probs,
        }
    }

    /// Characteristic function on a tensor grid, all axes but the first
    /// transformed: shape `[k₀, N₁, …, N_{m−1}]`.
    fn partial_transform(&self, nodes: &[&[f64]]) -> Vec<Complex> {
        let m = self.values.len();
        let mut shape: Vec<usize> = self.values.iter().map(Vec::len).collect();
        let mut data: Vec<Complex> = self.probs.iter().map(|&p| Complex::new(p, 0.0)).collect();
        for axis in (1..m).rev() {
            let table = phase_table(&self.values[axis], nodes[axis]);
            data = contract(&data, &shape, axis, &table, nodes[axis].len());
            shape[axis] = nodes[axis].len();
        }
        data
    }

    /// Characteristic function on the full tensor grid, row-major.
    fn transform(&self, nodes: &[&[f64]]) -> Vec<Complex> {
        let mut shape: Vec<usize> = self.values.iter().map(Vec::len).collect();
        let data = self.partial_transform(nodes);
        for (k, n) in nodes.iter().enumerate().skip(1) {
            shape[k] = n.len();
        }
        let table = phase_table(&self.values[0], nodes[0]);
        contract(&data, &shape, 0, &table, nodes[0].len())
    }
}

/// `table[x·N + n] = e^{i v_x t_n}`.
fn phase_table(values: &[f64], nodes: &[f64]) -> Vec<Complex> {
    let mut table = Vec::with_capacity(values.len() * nodes.len());
    for &v in values {
        for &t in nodes {
            let p = v * t;
            table.push(Complex::new(libm::cos(p), libm::sin(p)));
        }
    }
    table
}

/// Replaces axis `axis` (length `k`) by `n` nodes: `out[o][j][i] = Σ_x table[x][j]·data[o][x][i]`.
fn contract(
    data: &[Complex],
    shape: &[usize],
    axis: usize,
    table: &[Complex],
    n: usize,
) -> Vec<Complex> {
    let k = shape[axis];
    let inner: usize = shape[axis + 1..].iter().product();
    let outer: usize = shape[..axis].iter().product();
    let mut out = vec![Complex::new(0.0, 0.0); outer * n * inner];
    for o in 0..outer {
        for x in 0..k {
            let src = &data[(o * k + x) * inner..(o * k + x + 1) * inner];
            for j in 0..n {
                let e = table[x * n + j];
                let dst = &mut out[(o * n + j) * inner..(o * n + j + 1) * inner];
                for (d, s) in dst.iter_mut().zip(src) {
                    *d += e * s;
                }
            }
        }
    }
    out
}

/// Quadrature estimate of `∫_{[−T,T]^m} |Λ(φ_X) − Λ(φ_Y)| / |∏t| dt` on
/// one grid, without the `2/(2π)^m` factor.
fn lambda_integral_on_grid(
    x: &LatticeDistribution,
    dense: &DenseLattice,
    marginals: &[Option<DenseLattice>],
    g: &GaussianSpec,
    op: &LambdaOperator,
    grid: &QuadratureGrid,
) -> Complex {
    let m = x.dim();
    let full = (1u32 << m) - 1;
    let nodes: Vec<&[f64]> = grid.axes().iter().map(|a| a.nodes.as_slice()).collect();
    let weights: Vec<&[f64]> = grid.axes().iter().map(|a| a.weights.as_slice()).collect();
    let lens: Vec<usize> = nodes.iter().map(|n| n.len()).collect();

    // Characteristic functions of proper marginals on their sub-grids.
    let tables: Vec<Vec<Complex>> = (0..=full)
        .map(|mask| match &marginals[mask as usize] {
            Some(d) => {
                let sub: Vec<&[f64]> = indices_of(mask as u64).iter().map(|&k| nodes[k]).collect();
                d.transform(&sub)
            }
            None => Vec::new(),
        })
        .collect();

    let partial = dense.partial_transform(&nodes);
    let k0 = dense.values[0].len();
    let rest: usize = lens[1..].iter().product();
    let mut slice = vec![Complex::new(0.0, 0.0); rest];
    let mut idx = vec![0usize; m];
    let mut t = vec![0.0; m];
    let mut vx = vec![Complex::new(0.0, 0.0); 1 << m];
    let mut vy = vec![Complex::new(0.0, 0.0); 1 << m];
    let cov = g.cov();
    let mean = g.mean();
    let mut total = 0.0;

    for i0 in 0..lens[0] {
        let t0 = nodes[0][i0];
        slice.iter_mut().for_each(|s| *s = Complex::new(0.0, 0.0));
        for (x0, &v0) in dense.values[0].iter().enumerate() {
            let p = v0 * t0;
            let e = Complex::new(libm::cos(p), libm::sin(p));
            let src = &partial[x0 * rest..(x0 + 1) * rest];
            for (d, s) in slice.iter_mut().zip(src) {
                *d += e * s;
            }
        }
        debug_assert_eq!(k0 * rest, partial.len());
        idx[0] = i0;
        t[0] = t0;
        for (r, &joint) in slice.iter().enumerate() {
            let mut rem = r;
            let mut w = weights[0][i0];
            for k in (1..m).rev() {
                idx[k] = rem % lens[k];
                rem /= lens[k];
                t[k] = nodes[k][idx[k]];
                w *= weights[k][idx[k]];
            }
            for mask in 1..=full {
                vx[mask as usize] = if mask == full {
                    joint
                } else {
                    let mut at = 0;
                    for k in indices_of(mask as u64) {
                        at = at * lens[k] + idx[k];
                    }
                    tables[mask as usize][at]
                };
                let mut phase = 0.0;
                let mut quad = 0.0;
                for i in 0..m {
                    if mask >> i & 1 == 0 {
                        continue;
                    }
                    phase += mean[i] * t[i];
                    for j in 0..m {
                        if mask >> j & 1 == 1 {
                            quad += t[i] * cov[i][j] * t[j];
                        }
                    }
                }
                vy[mask as usize] = Complex::from_polar(libm::exp(-0.5 * quad), phase);
            }
            let lx = op.combine(|mask| vx[mask as usize]);
            let ly = op.combine(|mask| vy[mask as usize]);
            let prod: f64 = t.iter().product();
            total += w * (lx - ly).norm() / prod.abs();
        }
    }
    Complex::new(total, 0.0)
}

/// Integral term `2/(2π)^m ∫ |Λ(φ_X) − Λ(φ_Y)| / |∏t|` with its refinement
/// outcome: `(value, error estimate, converged)`.
pub fn integral_term(
    x: &LatticeDistribution,
    g: &GaussianSpec,
    t: f64,
    config: &BoundConfig,
) -> Result<(f64, f64, bool)> {
    check_inputs(x, g, t)?;
    let m = x.dim();
    let full = (1u32 << m) - 1;
    let op = LambdaOperator::full(m)?;
    let dense = DenseLattice::new(x);
    let mut marginals = Vec::with_capacity(1 << m);
    for mask in 0..=full {
        marginals.push(if mask == 0 || mask == full {
            None
        } else {
            Some(DenseLattice::new(&x.marginal(&indices_of(mask as u64))?))
        });
    }
    let bounds = vec![(-t, t); m];
    let refined = refine_with(
        |grid| Ok(lambda_integral_on_grid(x, &dense, &marginals, g, &op, grid)),
        &bounds,
        &config.refine(),
    )?;
    let scale = 2.0 / libm::pow(2.0 * PI, m as f64);
    Ok((
        scale * refined.value.re,
        scale * refined.error_estimate,
        refined.converged,
    ))
}

/// Proper nonempty subsets of `{0..m}` as sorted axis lists, by mask order.
fn proper_subsets(m: usize) -> Vec<Vec<usize>> {
    (1..(1u64 << m) - 1).map(indices_of).collect()
}

/// The right-hand side with marginal sups computed exactly (up to the
/// Gaussian CDF tolerance) rather than bounded recursively.
pub fn be_rhs(
    x: &LatticeDistribution,
    g: &GaussianSpec,
    t: f64,
    config: &BoundConfig,
) -> Result<BoundReport> {
    check_inputs(x, g, t)?;
    let m = x.dim();
    let (integral, err, converged) = integral_term(x, g, t, config)?;
    let mut marginal_sups = Vec::new();
    let mut marginal = 0.0;
    for axes in proper_subsets(m) {
        let weight = fubini(m - axes.len())
            .to_u64()
            .expect("small Fubini number");
        let sup = kolmogorov_distance(&x.marginal(&axes)?, &g.marginal(&axes)?, config.cdf_tol)?;
        marginal += 2.0 * weight as f64 * sup;
        marginal_sups.push(SubsetSup { axes, weight, sup });
    }
    let smoothing = smoothing_term(g, t)?;
    Ok(BoundReport {
        dim: m,
        t,
        integral_term: integral,
        marginal_term: marginal,
        smoothing_term: smoothing,
        rhs_total: integral + marginal + smoothing,
        lhs_sup: None,
        marginal_sups,
        quadrature_error: err,
        converged,
        recursive: false,
        multipliers: Vec::new(),
    })
}

/// Multipliers of the fully expanded bound.
///
/// Substituting the inequality for `K` into the marginal terms of every
/// larger set gives `c_L = 1` and `c_K = Σ_{K ⊊ J ⊆ L} 2 B_{|J|−|K|} c_J`.
/// Returned in the same order as [`proper_subsets`] followed by `L`.
pub fn recursive_multipliers(m: usize) -> Vec<(Vec<usize>, u64)> {
    let full = (1u64 << m) - 1;
    let mut c = vec![0u64; 1 << m];
    c[full as usize] = 1;
    // Visit supersets before subsets: decreasing popcount.
    let mut masks: Vec<u64> = (1..=full).collect();
    masks.sort_by_key(|mk| core::cmp::Reverse(mk.count_ones()));
    for &k in &masks {
        if k == full {
            continue;
        }
        let mut sum = 0u64;
        for j in 1..=full {
            if j != k && j & k == k {
                let b = fubini((j.count_ones() - k.count_ones()) as usize)
                    .to_u64()
                    .expect("small Fubini number");
                sum += 2 * b * c[j as usize];
            }
        }
        c[k as usize] = sum;
    }
    (1..=full)
        .map(|mk| (indices_of(mk), c[mk as usize]))
        .collect()
}

/// The fully expanded bound: every marginal sup replaced by its own bound,
/// down to single coordinates. Only integral and smoothing terms remain.
pub fn be_rhs_recursive(
    x: &LatticeDistribution,
    g: &GaussianSpec,
    t: f64,
    config: &BoundConfig,
) -> Result<BoundReport> {
    check_inputs(x, g, t)?;
    let m = x.dim();
    let mut integral = 0.0;
    let mut smoothing = 0.0;
    let mut err = 0.0;
    let mut converged = true;
    let mut multipliers = Vec::new();
    for (axes, c) in recursive_multipliers(m) {
        let (xk, gk) = if axes.len() == m {
            (x.clone(), g.clone())
        } else {
            (x.marginal(&axes)?, g.marginal(&axes)?)
        };
        let (i, e, ok) = integral_term(&xk, &gk, t, config)?;
        let s = smoothing_term(&gk, t)?;
        integral += c as f64 * i;
        smoothing += c as f64 * s;
        err += c as f64 * e;
        converged &= ok;
        multipliers.push(Multiplier {
            axes,
            multiplier: c,
            integral: i,
            smoothing: s,
        });
    }
    Ok(BoundReport {
        dim: m,
        t,
        integral_term: integral,
        marginal_term: 0.0,
        smoothing_term: smoothing,
        rhs_total: integral + smoothing,
        lhs_sup: None,
        marginal_sups: Vec::new(),
        quadrature_error: err,
        converged,
        recursive: true,
        multipliers,
    })
}

/// One row of [`verify_inequality`].
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Verification {
    #[cfg_attr(feature = "serde", serde(rename = "T"))]
    pub t: f64,
    pub lhs: f64,
    pub rhs: f64,
    /// Numerical slack allowed: CDF tolerance plus quadrature error estimate.
    pub slack: f64,
    pub holds: bool,
    pub report: BoundReport,
}

/// Checks `sup|F_X − F_Y| ≤ rhs(T)` for each `T`.
pub fn verify_inequality(
    x: &LatticeDistribution,
    g: &GaussianSpec,
    ts: &[f64],
    config: &BoundConfig,
) -> Result<Vec<Verification>> {
    if let Some(&t) = ts.first() {
        check_inputs(x, g, t)?;
    }
    let lhs = kolmogorov_distance(x, g, config.cdf_tol)?;
    let mut rows = Vec::with_capacity(ts.len());
    for &t in ts {
        let mut report = be_rhs(x, g, t, config)?;
        report.lhs_sup = Some(lhs);
        // Each marginal sup carries up to cdf_tol error as well.
        let slack = config.cdf_tol
            * (1.0
                + report
                    .marginal_sups
                    .iter()
                    .map(|s| 2.0 * s.weight as f64)
                    .sum::<f64>())
            + report.quadrature_error;
        rows.push(Verification {
            t,
            lhs,
            rhs: report.rhs_total,
            slack,
            holds: lhs <= report.rhs_total + slack,
            report,
        });
    }
    Ok(rows)
}
