//! Discrete p-energies, gradients on the skeleton and energy limits.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, Zero};
use rayon::prelude::*;
use serde::Serialize;

use crate::affine::AffineFunction;
use crate::error::{Error, Result};
use crate::geometry::{Hierarchy, VicsekLevel};
use crate::num::{abs_pow, ordered_sum, par_sum, par_sum_big, Exponent, NodeValues, Scalar};

/// Relative slack used whenever a float-mode comparison stands in for an exact one.
pub const FLOAT_TOLERANCE: f64 = 1e-12;

/// A union of cells of one level.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Region {
    level: usize,
    cells: Vec<usize>,
}

impl Region {
    #[must_use]
    pub fn new(level: usize, mut cells: Vec<usize>) -> Self {
        cells.sort_unstable();
        cells.dedup();
        Self { level, cells }
    }

    #[must_use]
    pub fn level(&self) -> usize {
        self.level
    }

    #[must_use]
    pub fn cells(&self) -> &[usize] {
        &self.cells
    }
}

/// `|u(head) - u(tail)|^p` per edge, exact when the values are exact and p is an integer.
/// The exact form stores numerators; the common denominator is `den^p`.
pub(crate) enum EdgeTerms {
    Exact { num: Vec<BigInt>, den: BigInt },
    Float(Vec<f64>),
}

pub(crate) fn edge_terms(level: &VicsekLevel, values: &NodeValues, p: &Exponent) -> Result<EdgeTerms> {
    if values.len() != level.vertex_count() {
        return Err(Error::arg(format!(
            "{} values given for {} vertices",
            values.len(),
            level.vertex_count()
        )));
    }
    let edges = level.edges();
    Ok(match (values, p.integer()) {
        (NodeValues::Exact { num, den }, Some(k)) => EdgeTerms::Exact {
            num: edges
                .par_iter()
                .map(|e| (&num[e.head as usize] - &num[e.tail as usize]).abs().pow(k))
                .collect(),
            den: den.pow(k),
        },
        _ => {
            let vals = values.to_f64_vec();
            let pv = p.value();
            EdgeTerms::Float(
                edges
                    .par_iter()
                    .map(|e| abs_pow(vals[e.head as usize] - vals[e.tail as usize], pv))
                    .collect(),
            )
        }
    })
}

/// `L_n^{p-1}`, exact for integer p.
pub(crate) fn energy_weight(level: &VicsekLevel, p: &Exponent) -> Scalar {
    match p.integer_minus_one() {
        Some(k) => Scalar::Exact(BigRational::from_integer(BigInt::from(level.scale()).pow(k))),
        None => Scalar::Float((level.scale() as f64).powf(p.value() - 1.0)),
    }
}

impl EdgeTerms {
    fn total(&self, keep: impl Fn(usize) -> bool + Sync) -> Scalar {
        match self {
            EdgeTerms::Exact { num, den } => {
                let s = par_sum_big(num.len(), |e| if keep(e) { num[e].clone() } else { BigInt::zero() });
                Scalar::Exact(BigRational::new(s, den.clone()))
            }
            EdgeTerms::Float(t) => Scalar::Float(par_sum(t.len(), |e| if keep(e) { t[e] } else { 0.0 })),
        }
    }

    /// Sums grouped by `group(e)` into `groups` bins.
    fn grouped(&self, groups: usize, group: impl Fn(usize) -> usize) -> Vec<Scalar> {
        match self {
            EdgeTerms::Exact { num, den } => {
                let mut acc = vec![BigInt::zero(); groups];
                for (e, t) in num.iter().enumerate() {
                    acc[group(e)] += t;
                }
                acc.into_iter()
                    .map(|s| Scalar::Exact(BigRational::new(s, den.clone())))
                    .collect()
            }
            EdgeTerms::Float(t) => {
                let mut acc = vec![crate::num::Compensated::default(); groups];
                for (e, x) in t.iter().enumerate() {
                    acc[group(e)].add(*x);
                }
                acc.into_iter().map(|a| Scalar::Float(a.value())).collect()
            }
        }
    }
}

/// `E_{p,n;A}(u) = L_n^{p-1} * sum over level-n edges inside A of |du|^p`
/// (half the sum over ordered adjacent pairs, times `prod l_j^{p-1}`).
pub fn discrete_energy(
    level: &VicsekLevel,
    values: &NodeValues,
    p: &Exponent,
    region: Option<&Region>,
) -> Result<Scalar> {
    let terms = edge_terms(level, values, p)?;
    let weight = energy_weight(level, p);
    let sum = match region {
        None => terms.total(|_| true),
        Some(r) => {
            if r.level > level.level() {
                return Err(Error::Region(format!(
                    "region words of level {} are deeper than the graph level {}",
                    r.level,
                    level.level()
                )));
            }
            let count = level.cells_per_prefix(0) / level.cells_per_prefix(r.level);
            if let Some(&bad) = r.cells.iter().find(|&&w| w >= count) {
                return Err(Error::Region(format!("cell {bad} does not exist at level {}", r.level)));
            }
            let mut mask = vec![false; count];
            for &w in &r.cells {
                mask[w] = true;
            }
            let per = level.cells_per_prefix(r.level);
            let edges = level.edges();
            terms.total(|e| mask[edges[e].cell as usize / per])
        }
    };
    Ok(&weight * &sum)
}

/// `E_{p,n;K_w}(u)` for every word `w` of level `k <= n`.
pub fn discrete_energy_by_cell(level: &VicsekLevel, values: &NodeValues, p: &Exponent, k: usize) -> Result<Vec<Scalar>> {
    if k > level.level() {
        return Err(Error::Region(format!(
            "cells of level {k} are deeper than the graph level {}",
            level.level()
        )));
    }
    let terms = edge_terms(level, values, p)?;
    let weight = energy_weight(level, p);
    let per = level.cells_per_prefix(k);
    let groups = level.cell_count() / per;
    let edges = level.edges();
    Ok(terms
        .grouped(groups, |e| edges[e].cell as usize / per)
        .iter()
        .map(|s| &weight * s)
        .collect())
}

/// Constant slope per oriented edge of level `n`.
#[derive(Clone, Debug, PartialEq)]
pub struct GradientField {
    level: usize,
    scale: i64,
    slopes: NodeValues,
}

impl GradientField {
    /// Slopes `(u(head) - u(tail)) / (1/L_n)` from vertex values at level `n`.
    pub fn from_values(level: &VicsekLevel, values: &NodeValues) -> Result<Self> {
        if values.len() != level.vertex_count() {
            return Err(Error::arg("value count does not match the vertex count"));
        }
        let edges = level.edges();
        let l = level.scale();
        let slopes = match values {
            NodeValues::Exact { num, den } => NodeValues::Exact {
                num: edges
                    .par_iter()
                    .map(|e| (&num[e.head as usize] - &num[e.tail as usize]) * l)
                    .collect(),
                den: den.clone(),
            },
            NodeValues::Float(v) => NodeValues::Float(
                edges
                    .par_iter()
                    .map(|e| (v[e.head as usize] - v[e.tail as usize]) * l as f64)
                    .collect(),
            ),
        };
        Ok(Self {
            level: level.level(),
            scale: l,
            slopes,
        })
    }

    #[must_use]
    pub fn level(&self) -> usize {
        self.level
    }

    /// One slope per edge, in the edge order of the level.
    #[must_use]
    pub fn slopes(&self) -> &NodeValues {
        &self.slopes
    }

    /// Edge length `1 / L_n`.
    #[must_use]
    pub fn edge_length(&self) -> BigRational {
        BigRational::new(BigInt::from(1), BigInt::from(self.scale))
    }

    /// `|slope|^p * length` per edge.
    pub(crate) fn edge_masses(&self, p: &Exponent) -> EdgeTerms {
        match (&self.slopes, p.integer()) {
            (NodeValues::Exact { num, den }, Some(k)) => EdgeTerms::Exact {
                num: num.par_iter().map(|s| s.abs().pow(k)).collect(),
                den: den.pow(k) * self.scale,
            },
            _ => {
                let inv = 1.0 / self.scale as f64;
                let pv = p.value();
                EdgeTerms::Float(
                    self.slopes
                        .to_f64_vec()
                        .par_iter()
                        .map(|s| abs_pow(*s, pv) * inv)
                        .collect(),
                )
            }
        }
    }

    /// Masses grouped by the level-`k` cell holding each edge.
    pub(crate) fn cell_masses(&self, level: &VicsekLevel, p: &Exponent, k: usize) -> Vec<Scalar> {
        let per = level.cells_per_prefix(k);
        let groups = level.cell_count() / per;
        let edges = level.edges();
        self.edge_masses(p).grouped(groups, |e| edges[e].cell as usize / per)
    }
}

/// Gradient of an affine function at level `n >= n0`.
pub fn gradient_field(u: &AffineFunction, h: &Hierarchy, n: usize) -> Result<GradientField> {
    let values = u.evaluate_all(h, n)?;
    GradientField::from_values(h.level(n)?, &values)
}

/// `sum over edges of |slope|^p * length`.
#[must_use]
pub fn energy_of_gradient(g: &GradientField, p: &Exponent) -> Scalar {
    g.edge_masses(p).total(|_| true)
}

/// Per-level energies of an affine function.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EnergyReport {
    pub p: f64,
    pub base_level: usize,
    pub energies: Vec<Scalar>,
    /// First level from which all later energies agree.
    pub plateau: Option<usize>,
    pub limit: Scalar,
    pub monotone: bool,
    pub exact: bool,
}

/// `E_{p,n}(u)` for `n = 0..=max_level`; exact when `exact` is set and p is an integer.
pub fn energy_limit(u: &AffineFunction, h: &Hierarchy, p: &Exponent, max_level: usize, exact: bool) -> Result<EnergyReport> {
    let u = u.in_mode(exact);
    let energies = (0..=max_level)
        .map(|n| discrete_energy(h.level(n)?, &u.sample(h, n)?, p, None))
        .collect::<Result<Vec<_>>>()?;
    let agree = |a: &Scalar, b: &Scalar| a == b || a.relative_gap(b) <= FLOAT_TOLERANCE && !(a.is_exact() && b.is_exact());
    let last = energies.last().cloned().unwrap_or_else(Scalar::zero);
    let mut plateau = Some(max_level);
    for n in (0..max_level).rev() {
        if agree(&energies[n], &last) {
            plateau = Some(n);
        } else {
            break;
        }
    }
    let monotone = energies.windows(2).all(|w| not_above(&w[0], &w[1]));
    let exact_all = energies.iter().all(Scalar::is_exact);
    Ok(EnergyReport {
        p: p.value(),
        base_level: u.base_level(),
        energies,
        plateau,
        limit: last,
        monotone,
        exact: exact_all,
    })
}

/// `a <= b`, exactly for exact scalars and with relative slack otherwise.
#[must_use]
pub fn not_above(a: &Scalar, b: &Scalar) -> bool {
    match (a, b) {
        (Scalar::Exact(x), Scalar::Exact(y)) => x <= y,
        _ => {
            let (x, y) = (a.to_f64(), b.to_f64());
            x <= y + FLOAT_TOLERANCE * x.abs().max(y.abs())
        }
    }
}

/// `E_p(u)`: the energy at the base level, which every finer level reproduces.
pub fn energy(u: &AffineFunction, h: &Hierarchy, p: &Exponent) -> Result<Scalar> {
    discrete_energy(h.level(u.base_level())?, u.values(), p, None)
}

/// Compensated float sum helper re-exported for downstream reductions.
#[must_use]
pub fn float_total(values: &[f64]) -> f64 {
    ordered_sum(values.iter().copied())
}
