//! Dissections of a labelled convex polygon into smaller polygons whose
//! sizes come from given classes.
//!
//! With `a_n(r)` the number of dissections of an `n`-gon into `r_i` pieces
//! with size in class `i`, the series `f = Σ a_n(r) x^r z^(n-1)` satisfies
//! `f = z + Σ_i x_i Σ_{k ∈ S_i} f^(k-1)`. The equation is solved by exact
//! fixed-point iteration.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{Signed, Zero};

use crate::distribution::LatticeDistribution;
use crate::quasi_power::QuasiPowerFamily;
use crate::series::{MultiSeries, Truncation};
use crate::{Error, Result};

/// Allowed piece sizes, one class per coordinate. Sizes not listed are
/// forbidden.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DissectionSpec {
    classes: Vec<Vec<u32>>,
}

impl DissectionSpec {
    pub fn new(classes: Vec<Vec<u32>>) -> Result<Self> {
        if classes.is_empty() {
            return Err(Error::InvalidArgument(
                "at least one size class is required".into(),
            ));
        }
        let mut seen = Vec::new();
        let mut out = Vec::with_capacity(classes.len());
        for (i, class) in classes.into_iter().enumerate() {
            let mut class = class;
            class.sort_unstable();
            class.dedup();
            if class.is_empty() {
                return Err(Error::InvalidArgument(format!("size class {i} is empty")));
            }
            for &k in &class {
                if k < 3 {
                    return Err(Error::InvalidArgument(format!(
                        "polygon size {k} in class {i} is below 3"
                    )));
                }
                if seen.contains(&k) {
                    return Err(Error::InvalidArgument(format!(
                        "polygon size {k} appears in more than one class"
                    )));
                }
                seen.push(k);
            }
            out.push(class);
        }
        Ok(Self { classes: out })
    }

    /// Triangulations: the single class `{3}`.
    pub fn triangulations() -> Self {
        Self {
            classes: vec![vec![3]],
        }
    }

    pub fn classes(&self) -> &[Vec<u32>] {
        &self.classes
    }

    /// Number of tracked classes, the lattice dimension.
    pub fn dim(&self) -> usize {
        self.classes.len()
    }
}

/// Solution of the functional equation up to a given `z`-order.
#[derive(Debug, Clone)]
pub struct DissectionSeries {
    /// Variables `(z, x_1, ..., x_t)`.
    pub series: MultiSeries<BigRational>,
    pub order: usize,
    pub iterations: usize,
}

fn truncation(dim: usize, order: usize) -> Truncation {
    // A piece adds at least one to the z-degree, so x-degrees stay below it.
    Truncation::PerVariable(vec![order as u32; dim + 1])
}

/// One application of `f ↦ z + Σ x_i Σ f^(k-1)`.
fn apply(
    spec: &DissectionSpec,
    f: &MultiSeries<BigRational>,
    order: usize,
) -> Result<MultiSeries<BigRational>> {
    let nv = spec.dim() + 1;
    let t = truncation(spec.dim(), order);
    let max_k = spec
        .classes
        .iter()
        .flatten()
        .copied()
        .filter(|&k| k as usize <= order + 1)
        .max()
        .unwrap_or(0);
    // f^j for j = 0..max_k-1
    let mut powers = vec![MultiSeries::one(nv, t.clone())];
    for j in 1..max_k.max(1) as usize {
        let next = powers[j - 1].mul(f)?;
        powers.push(next);
    }
    let mut out = MultiSeries::variable(nv, t.clone(), 0);
    for (i, class) in spec.classes.iter().enumerate() {
        let mut inner = MultiSeries::zero(nv, t.clone());
        for &k in class.iter().filter(|&&k| k as usize <= order + 1) {
            inner = inner.add(&powers[k as usize - 1])?;
        }
        out = out.add(&inner.mul(&MultiSeries::variable(nv, t.clone(), i + 1))?)?;
    }
    Ok(out)
}

/// Solves for `f` through `z`-order `order` by iterating from `f = 0` until
/// an iteration changes nothing.
pub fn solve_dissection_series(spec: &DissectionSpec, order: usize) -> Result<DissectionSeries> {
    if order == 0 {
        return Err(Error::InvalidArgument("z-order must be at least 1".into()));
    }
    let mut f = MultiSeries::zero(spec.dim() + 1, truncation(spec.dim(), order));
    let mut iterations = 0;
    loop {
        let next = apply(spec, &f, order)?;
        iterations += 1;
        if next == f {
            // the last pass only confirmed the fixed point
            return Ok(DissectionSeries {
                series: f,
                order,
                iterations: iterations - 1,
            });
        }
        f = next;
    }
}

/// Counts by class vector `r`.
pub type Counts = BTreeMap<Vec<u32>, BigUint>;

/// Extracts `a_n(r)` from a solved series.
pub fn counts_from_series(solved: &DissectionSeries, n: usize) -> Result<Counts> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!(
            "polygon size {n} is below 2"
        )));
    }
    if solved.order < n - 1 {
        return Err(Error::InsufficientOrder {
            needed: n - 1,
            have: solved.order,
        });
    }
    let mut out = Counts::new();
    for (e, c) in solved.series.terms() {
        if e[0] as usize == n - 1 {
            if !c.is_integer() || c.is_negative() {
                return Err(Error::Series(format!("non-integral count {c}")));
            }
            let v = c.to_integer().to_biguint().expect("non-negative");
            if !v.is_zero() {
                out.insert(e[1..].to_vec(), v);
            }
        }
    }
    Ok(out)
}

/// `a_n(r)` for all `r`.
pub fn dissection_counts(spec: &DissectionSpec, n: usize) -> Result<Counts> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!(
            "polygon size {n} is below 2"
        )));
    }
    let solved = solve_dissection_series(spec, n - 1)?;
    counts_from_series(&solved, n)
}

/// Uniform distribution over dissections of the `n`-gon, as class counts.
pub fn dissection_distribution(spec: &DissectionSpec, n: usize) -> Result<LatticeDistribution> {
    counts_distribution(&dissection_counts(spec, n)?, spec.dim(), n)
}

pub fn counts_distribution(counts: &Counts, dim: usize, n: usize) -> Result<LatticeDistribution> {
    if counts.is_empty() {
        return Err(Error::Empty {
            what: "the polygon has no dissection with the allowed piece sizes",
            n,
        });
    }
    LatticeDistribution::from_weights(
        dim,
        counts.iter().map(|(r, c)| {
            (
                r.iter()
                    .map(|&x| BigRational::from_integer(BigInt::from(x)))
                    .collect(),
                c.clone(),
            )
        }),
    )
}

/// Polygon-size family `n ↦ Ω_n` (`φ_n = n`).
pub fn dissection_family(spec: DissectionSpec) -> QuasiPowerFamily {
    let dim = spec.dim();
    QuasiPowerFamily::new("dissection", dim, move |n| {
        dissection_distribution(&spec, n)
    })
}

/// Coefficients of `f - (z + Σ x_i Σ f^(k-1))` through the solved order;
/// all zero for an exact solution.
pub fn fixed_point_residual(
    spec: &DissectionSpec,
    solved: &DissectionSeries,
) -> Result<MultiSeries<BigRational>> {
    apply(spec, &solved.series, solved.order)?.sub(&solved.series)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::One;

    fn catalan(k: u64) -> BigUint {
        // C_k = binom(2k, k) / (k + 1)
        let mut c = BigUint::one();
        for i in 0..k {
            c = c * BigUint::from(2 * (2 * i + 1)) / BigUint::from(i + 2);
        }
        c
    }

    /// Sizes of the faces cut out of polygon `verts` by non-crossing
    /// `diagonals`.
    fn faces(verts: &[usize], diagonals: &[(usize, usize)], out: &mut Vec<usize>) {
        let m = verts.len();
        for &(a, b) in diagonals {
            let (Some(i), Some(j)) = (
                verts.iter().position(|&v| v == a),
                verts.iter().position(|&v| v == b),
            ) else {
                continue;
            };
            let (i, j) = (i.min(j), i.max(j));
            if j - i == 1 || (i == 0 && j == m - 1) {
                continue;
            }
            faces(&verts[i..=j], diagonals, out);
            let mut rest = verts[..=i].to_vec();
            rest.extend_from_slice(&verts[j..]);
            faces(&rest, diagonals, out);
            return;
        }
        out.push(m);
    }

    fn crosses(a: (usize, usize), b: (usize, usize)) -> bool {
        let inside = |x: usize| a.0 < x && x < a.1;
        let shared = a.0 == b.0 || a.0 == b.1 || a.1 == b.0 || a.1 == b.1;
        !shared && inside(b.0) != inside(b.1)
    }

    /// Counts over every non-crossing diagonal set of the `n`-gon.
    fn brute_force(spec: &DissectionSpec, n: usize) -> Counts {
        let mut diags = Vec::new();
        for a in 0..n {
            for b in a + 2..n {
                if !(a == 0 && b == n - 1) {
                    diags.push((a, b));
                }
            }
        }
        let verts: Vec<usize> = (0..n).collect();
        let mut counts = Counts::new();
        let mut chosen = Vec::new();
        fn rec(
            spec: &DissectionSpec,
            diags: &[(usize, usize)],
            idx: usize,
            chosen: &mut Vec<(usize, usize)>,
            verts: &[usize],
            counts: &mut Counts,
        ) {
            if idx == diags.len() {
                let mut fs = Vec::new();
                faces(verts, chosen, &mut fs);
                let mut r = vec![0u32; spec.dim()];
                for f in fs {
                    match spec.classes().iter().position(|c| c.contains(&(f as u32))) {
                        Some(i) => r[i] += 1,
                        None => return,
                    }
                }
                *counts.entry(r).or_default() += 1u32;
                return;
            }
            rec(spec, diags, idx + 1, chosen, verts, counts);
            let d = diags[idx];
            if chosen.iter().all(|&c| !crosses(c, d)) {
                chosen.push(d);
                rec(spec, diags, idx + 1, chosen, verts, counts);
                chosen.pop();
            }
        }
        rec(spec, &diags, 0, &mut chosen, &verts, &mut counts);
        counts
    }

    fn tri_quad() -> DissectionSpec {
        DissectionSpec::new(vec![vec![3], vec![4]]).unwrap()
    }

    fn r(v: &[u32]) -> Vec<u32> {
        v.to_vec()
    }

    #[test]
    fn triangulation_series_low_order() {
        let s = solve_dissection_series(&DissectionSpec::triangulations(), 6).unwrap();
        for k in 0..6u32 {
            let c = s.series.coeff(&[k + 1, k]);
            assert_eq!(
                c,
                BigRational::from_integer(catalan(k as u64).into()),
                "k={k}"
            );
        }
        assert_eq!(s.series.coeff(&[1, 0]), BigRational::one());
        assert!(s.iterations <= 6);
    }

    #[test]
    fn catalan_through_fifteen() {
        let spec = DissectionSpec::triangulations();
        let solved = solve_dissection_series(&spec, 14).unwrap();
        assert!(solved.iterations <= 14);
        for n in 3..=15 {
            let c = counts_from_series(&solved, n).unwrap();
            assert_eq!(c.len(), 1, "point mass at n-2");
            assert_eq!(c[&r(&[n as u32 - 2])], catalan(n as u64 - 2), "n={n}");
        }
    }

    #[test]
    fn two_gon_seed() {
        let c = dissection_counts(&tri_quad(), 2).unwrap();
        assert_eq!(c.len(), 1);
        assert_eq!(c[&r(&[0, 0])], BigUint::one());
    }

    #[test]
    fn pentagon_table() {
        let c = dissection_counts(&tri_quad(), 5).unwrap();
        let mut want = Counts::new();
        want.insert(r(&[3, 0]), 5u32.into());
        want.insert(r(&[1, 1]), 5u32.into());
        assert_eq!(c, want);
        assert_eq!(brute_force(&tri_quad(), 5), want);
    }

    #[test]
    fn brute_force_agrees_up_to_eight() {
        let spec = tri_quad();
        let solved = solve_dissection_series(&spec, 7).unwrap();
        for n in 3..=8 {
            assert_eq!(
                counts_from_series(&solved, n).unwrap(),
                brute_force(&spec, n),
                "n={n}"
            );
        }
        let hex = counts_from_series(&solved, 6).unwrap();
        for key in [r(&[4, 0]), r(&[2, 1]), r(&[0, 2])] {
            assert!(hex.contains_key(&key));
        }
        let other = DissectionSpec::new(vec![vec![3, 5], vec![4]]).unwrap();
        for n in 3..=8 {
            assert_eq!(
                dissection_counts(&other, n).unwrap(),
                brute_force(&other, n),
                "n={n}"
            );
        }
    }

    #[test]
    fn fixed_point_residual_vanishes() {
        let spec = tri_quad();
        let solved = solve_dissection_series(&spec, 12).unwrap();
        assert!(fixed_point_residual(&spec, &solved).unwrap().is_empty());
    }

    #[test]
    fn class_relabelling() {
        let a = tri_quad();
        let b = DissectionSpec::new(vec![vec![4], vec![3]]).unwrap();
        for n in 3..=12 {
            let ca = dissection_counts(&a, n).unwrap();
            let cb = dissection_counts(&b, n).unwrap();
            let swapped: Counts = cb.into_iter().map(|(v, c)| (vec![v[1], v[0]], c)).collect();
            assert_eq!(ca, swapped);
        }
    }

    #[test]
    fn insufficient_order_is_reported() {
        let solved = solve_dissection_series(&tri_quad(), 5).unwrap();
        assert_eq!(
            counts_from_series(&solved, 8),
            Err(Error::InsufficientOrder { needed: 7, have: 5 })
        );
    }

    #[test]
    fn empty_and_invalid() {
        let quads = DissectionSpec::new(vec![vec![4]]).unwrap();
        assert!(matches!(
            dissection_distribution(&quads, 5),
            Err(Error::Empty { n: 5, .. })
        ));
        assert_eq!(dissection_distribution(&quads, 6).unwrap().len(), 1);
        assert!(DissectionSpec::new(vec![vec![2]]).is_err());
        assert!(DissectionSpec::new(vec![vec![3], vec![3, 4]]).is_err());
        assert!(DissectionSpec::new(vec![]).is_err());
        assert!(DissectionSpec::new(vec![vec![]]).is_err());
        assert!(dissection_counts(&quads, 1).is_err());
    }

    #[test]
    fn triangulation_is_a_point_mass() {
        for n in [3, 7, 11] {
            let d = dissection_distribution(&DissectionSpec::triangulations(), n).unwrap();
            assert_eq!(d.len(), 1);
            assert_eq!(
                d.atoms()[0].point,
                vec![BigRational::from_integer((n as i64 - 2).into())]
            );
        }
    }

    #[test]
    fn mean_is_affine_in_n() {
        let spec = tri_quad();
        let solved = solve_dissection_series(&spec, 29).unwrap();
        let ns: Vec<f64> = (10..=30).map(|n| n as f64).collect();
        for axis in 0..2 {
            let ys: Vec<f64> = (10..=30)
                .map(|n| {
                    let c = counts_from_series(&solved, n).unwrap();
                    let d = counts_distribution(&c, 2, n).unwrap();
                    crate::distribution::to_f64(&d.mean()[axis])
                })
                .collect();
            let k = ns.len() as f64;
            let mx = ns.iter().sum::<f64>() / k;
            let my = ys.iter().sum::<f64>() / k;
            let sxy: f64 = ns.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
            let sxx: f64 = ns.iter().map(|x| (x - mx) * (x - mx)).sum();
            let slope = sxy / sxx;
            for (x, y) in ns.iter().zip(&ys) {
                let fit = my + slope * (x - mx);
                assert!(
                    (y - fit).abs() < 1e-2 * y.abs(),
                    "axis {axis} n={x}: {y} vs {fit}"
                );
            }
        }
    }
}
