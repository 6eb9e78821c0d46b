//! Energy measures on cells: the gradient measure `|du|^p dnu`, the word-space
//! measure built from cell-restricted energies, and experiments with them.

use num_rational::BigRational;
use serde::Serialize;

use crate::affine::AffineFunction;
use crate::checks::scalar_pow;
use crate::energy::{discrete_energy_by_cell, gradient_field, FLOAT_TOLERANCE};
use crate::error::{Error, Result};
use crate::geometry::Hierarchy;
use crate::num::{abs_pow, ordered_sum, Exponent, NodeValues, Scalar};

/// One mass per word of `W_level`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CellMeasure {
    pub level: usize,
    pub masses: Vec<Scalar>,
    pub total: Scalar,
}

impl CellMeasure {
    fn new(level: usize, masses: Vec<Scalar>) -> Self {
        let total = sum(&masses);
        Self { level, masses, total }
    }

    /// Masses of the level-`k` ancestors, `k <= level`.
    pub fn coarsen(&self, h: &Hierarchy, k: usize) -> Result<CellMeasure> {
        if k > self.level {
            return Err(Error::ScaleOrder { fine: self.level, coarse: k });
        }
        let group = h.level(self.level)?.cells_per_prefix(k);
        let masses = self.masses.chunks(group).map(sum).collect();
        Ok(CellMeasure::new(k, masses))
    }

    /// Largest `|self(w) - other(w)| / total` over the words of the common level.
    pub fn max_relative_gap(&self, other: &CellMeasure) -> Result<f64> {
        if self.level != other.level {
            return Err(Error::ScaleMismatch { left: self.level, right: other.level });
        }
        let total = self.total.to_f64().abs().max(other.total.to_f64().abs());
        if total == 0.0 {
            return Ok(self.masses.iter().chain(&other.masses).map(|m| m.to_f64().abs()).fold(0.0, f64::max));
        }
        Ok(self
            .masses
            .iter()
            .zip(&other.masses)
            .map(|(a, b)| (a - b).abs().to_f64() / total)
            .fold(0.0, f64::max))
    }
}

fn sum(items: &[Scalar]) -> Scalar {
    if items.iter().all(Scalar::is_exact) {
        items.iter().fold(Scalar::zero(), |acc, x| &acc + x)
    } else {
        Scalar::Float(ordered_sum(items.iter().map(Scalar::to_f64)))
    }
}

/// `Gamma_p<u>(K_w)` for every `w` in `W_m`: `|slope|^p * length` over the edges
/// of level `max(m, n0)` whose interior lies in `K_w`.
pub fn gamma_cells(u: &AffineFunction, h: &Hierarchy, p: &Exponent, m: usize) -> Result<CellMeasure> {
    let edge_level = m.max(u.base_level());
    let g = gradient_field(u, h, edge_level)?;
    Ok(CellMeasure::new(m, g.cell_masses(h.level(edge_level)?, p, m)))
}

/// Word-space measure: `E_{p;K_w}(u)` per word of `W_n`, read off the first
/// level at which the cell-restricted energies are settled.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WordMeasure {
    pub measure: CellMeasure,
    /// The energies at the next level agree word by word (when that level is available).
    pub plateau_verified: Option<bool>,
}

pub fn word_energy_measure(u: &AffineFunction, h: &Hierarchy, p: &Exponent, n: usize) -> Result<WordMeasure> {
    let level = n.max(u.base_level());
    let at = |k: usize| -> Result<Vec<Scalar>> {
        discrete_energy_by_cell(h.level(k)?, &u.evaluate_all(h, k)?, p, n)
    };
    let masses = at(level)?;
    let plateau_verified = if level < h.depth() {
        let next = at(level + 1)?;
        Some(masses.iter().zip(&next).all(|(a, b)| match (a, b) {
            (Scalar::Exact(x), Scalar::Exact(y)) => x == y,
            _ => a.relative_gap(b) <= FLOAT_TOLERANCE,
        }))
    } else {
        None
    };
    Ok(WordMeasure {
        measure: CellMeasure::new(n, masses),
        plateau_verified,
    })
}

/// Largest relative discrepancy between the two measures over all words of levels `0..=depth`.
pub fn coincidence_check(u: &AffineFunction, h: &Hierarchy, p: &Exponent, depth: usize) -> Result<f64> {
    let mut worst = 0.0f64;
    for k in 0..=depth {
        let gamma = gamma_cells(u, h, p, k)?;
        let word = word_energy_measure(u, h, p, k)?.measure;
        worst = worst.max(gamma.max_relative_gap(&word)?);
    }
    Ok(worst)
}

/// A scalar function with its derivative, for the chain rule.
pub trait ScalarMap: Sync {
    fn value(&self, t: f64) -> f64;
    fn derivative(&self, t: f64) -> f64;
    /// Exact image of a rational, when the map keeps rationals rational.
    fn exact(&self, _t: &BigRational) -> Option<BigRational> {
        None
    }
    fn name(&self) -> String;
}

pub struct Identity;

impl ScalarMap for Identity {
    fn value(&self, t: f64) -> f64 {
        t
    }
    fn derivative(&self, _t: f64) -> f64 {
        1.0
    }
    fn exact(&self, t: &BigRational) -> Option<BigRational> {
        Some(t.clone())
    }
    fn name(&self) -> String {
        "t".into()
    }
}

/// `t -> a t + b`.
pub struct Linear {
    pub a: BigRational,
    pub b: BigRational,
}

impl ScalarMap for Linear {
    fn value(&self, t: f64) -> f64 {
        crate::num::ratio_to_f64(&self.a) * t + crate::num::ratio_to_f64(&self.b)
    }
    fn derivative(&self, _t: f64) -> f64 {
        crate::num::ratio_to_f64(&self.a)
    }
    fn exact(&self, t: &BigRational) -> Option<BigRational> {
        Some(&self.a * t + &self.b)
    }
    fn name(&self) -> String {
        format!("{} t + {}", self.a, self.b)
    }
}

pub struct Square;

impl ScalarMap for Square {
    fn value(&self, t: f64) -> f64 {
        t * t
    }
    fn derivative(&self, t: f64) -> f64 {
        2.0 * t
    }
    fn exact(&self, t: &BigRational) -> Option<BigRational> {
        Some(t * t)
    }
    fn name(&self) -> String {
        "t^2".into()
    }
}

fn compose(f: &dyn ScalarMap, values: &NodeValues) -> NodeValues {
    if let NodeValues::Exact { .. } = values {
        let exact: Option<Vec<BigRational>> = (0..values.len())
            .map(|i| values.get(i).exact().and_then(|t| f.exact(t)))
            .collect();
        if let Some(v) = exact {
            return NodeValues::from_rationals(&v);
        }
    }
    NodeValues::Float(values.to_f64_vec().iter().map(|&t| f.value(t)).collect())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ChainRuleReport {
    pub map: String,
    pub level: usize,
    pub cell_level: usize,
    pub nodes: usize,
    /// Discrete energies of `f(u)` at `level`, per cell.
    pub discrete: Vec<Scalar>,
    /// Midpoint quadrature of `|f'(u)|^p |du|^p` per cell.
    pub quadrature: Vec<f64>,
    pub discrete_total: Scalar,
    pub quadrature_total: f64,
    pub max_cell_deviation: f64,
    pub total_deviation: f64,
}

/// Compares `Gamma_p<f(u)>` on level-`cell_level` cells, estimated by the level-`n`
/// energies of `f(u)`, with `int |f'(u)|^p dGamma_p<u>` by `nodes`-point midpoint
/// quadrature on each edge.
pub fn chain_rule_check(
    u: &AffineFunction,
    f: &dyn ScalarMap,
    h: &Hierarchy,
    p: &Exponent,
    n: usize,
    cell_level: usize,
    nodes: usize,
) -> Result<ChainRuleReport> {
    if n < u.base_level() {
        return Err(Error::ScaleOrder { fine: n, coarse: u.base_level() });
    }
    if cell_level > n {
        return Err(Error::ScaleOrder { fine: n, coarse: cell_level });
    }
    if nodes == 0 {
        return Err(Error::arg("the quadrature needs at least one node"));
    }
    let fine = h.level(n)?;
    let composed = compose(f, &u.evaluate_all(h, n)?);
    let discrete = discrete_energy_by_cell(fine, &composed, p, cell_level)?;

    let edge_level = cell_level.max(u.base_level());
    let level = h.level(edge_level)?;
    let vals = u.evaluate_all(h, edge_level)?.to_f64_vec();
    let len = 1.0 / level.scale() as f64;
    let pv = p.value();
    let per = level.cells_per_prefix(cell_level);
    let mut cells = vec![crate::num::Compensated::default(); discrete.len()];
    for e in level.edges() {
        let (a, b) = (vals[e.tail as usize], vals[e.head as usize]);
        let slope = (b - a) / len;
        let weights = ordered_sum((0..nodes).map(|i| {
            let t = a + (b - a) * (i as f64 + 0.5) / nodes as f64;
            abs_pow(f.derivative(t), pv)
        })) / nodes as f64;
        cells[e.cell as usize / per].add(abs_pow(slope, pv) * len * weights);
    }
    let quadrature: Vec<f64> = cells.iter().map(|c| c.value()).collect();
    let discrete_total = sum(&discrete);
    let quadrature_total = ordered_sum(quadrature.iter().copied());
    let rel = |d: f64, q: f64| {
        if q == 0.0 {
            d.abs()
        } else {
            (d - q).abs() / q.abs()
        }
    };
    let max_cell_deviation = discrete
        .iter()
        .zip(&quadrature)
        .map(|(d, q)| (d.to_f64() - q).abs() / quadrature_total.abs().max(f64::MIN_POSITIVE))
        .fold(0.0, f64::max);
    Ok(ChainRuleReport {
        map: f.name(),
        level: n,
        cell_level,
        nodes,
        total_deviation: rel(discrete_total.to_f64(), quadrature_total),
        discrete,
        quadrature,
        discrete_total,
        quadrature_total,
        max_cell_deviation,
    })
}

/// `Gamma<a u + b> = |a|^p Gamma<u>` on every level-`m` cell, compared exactly
/// when the values are exact.
pub fn linear_chain_rule(u: &AffineFunction, h: &Hierarchy, p: &Exponent, a: &BigRational, b: &BigRational, m: usize) -> Result<bool> {
    let mapped = u.affine_map(&Scalar::Exact(a.clone()), &Scalar::Exact(b.clone()));
    let lhs = gamma_cells(&mapped, h, p, m)?;
    let base = gamma_cells(u, h, p, m)?;
    let factor = scalar_pow(&Scalar::Exact(a.clone()), p);
    Ok(lhs.masses.iter().zip(&base.masses).all(|(l, g)| {
        let r = &factor * g;
        match (l, &r) {
            (Scalar::Exact(x), Scalar::Exact(y)) => x == y,
            _ => l.relative_gap(&r) <= FLOAT_TOLERANCE,
        }
    }))
}

/// Largest `|d(uv) - (u d v + v d u)|` over level-`n` edges, with `u` and `v`
/// taken at the tail of each edge; it shrinks like `1 / L_n`.
pub fn leibniz_deviation(u: &AffineFunction, v: &AffineFunction, h: &Hierarchy, n: usize) -> Result<f64> {
    let level = h.level(n)?;
    let a = u.evaluate_all(h, n)?.to_f64_vec();
    let b = v.evaluate_all(h, n)?.to_f64_vec();
    let l = level.scale() as f64;
    Ok(level
        .edges()
        .iter()
        .map(|e| {
            let (t, s) = (e.tail as usize, e.head as usize);
            let product = (a[s] * b[s] - a[t] * b[t]) * l;
            let rule = a[t] * (b[s] - b[t]) * l + b[t] * (a[s] - a[t]) * l;
            (product - rule).abs()
        })
        .fold(0.0, f64::max))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TriangleReport {
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

/// `(int g dGamma<u1+u2>)^{1/p} <= (int g dGamma<u1>)^{1/p} + (int g dGamma<u2>)^{1/p}`
/// for weights `g >= 0` constant on the cells of level `m`.
pub fn triangle_check(
    u1: &AffineFunction,
    u2: &AffineFunction,
    weights: &[f64],
    h: &Hierarchy,
    p: &Exponent,
    m: usize,
) -> Result<TriangleReport> {
    if let Some(w) = weights.iter().find(|w| !(**w >= 0.0 && w.is_finite())) {
        return Err(Error::arg(format!("cell weights must be finite and >= 0, got {w}")));
    }
    let count = h.level(m)?.cell_count();
    if weights.len() != count {
        return Err(Error::arg(format!("{} weights given for {count} cells", weights.len())));
    }
    let weighted = |u: &AffineFunction| -> Result<f64> {
        let g = gamma_cells(u, h, p, m)?;
        Ok(ordered_sum(g.masses.iter().zip(weights).map(|(x, w)| x.to_f64() * w)))
    };
    let inv = 1.0 / p.value();
    let lhs = weighted(&u1.combine(h, u2, false)?)?.powf(inv);
    let rhs = weighted(u1)?.powf(inv) + weighted(u2)?.powf(inv);
    Ok(TriangleReport {
        lhs,
        rhs,
        holds: lhs <= rhs * (1.0 + FLOAT_TOLERANCE),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Bin {
    pub left: f64,
    pub right: f64,
    pub mass: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Pushforward {
    pub bins: Vec<Bin>,
    pub total: f64,
    /// Edges with positive mass on which `u` is constant.
    pub flat_edges_with_mass: usize,
}

/// Histogram of the image of `Gamma_p<u>` under `u`: each edge spreads its mass
/// uniformly over the interval `u` sweeps along it.
pub fn pushforward_profile(u: &AffineFunction, h: &Hierarchy, p: &Exponent, bins: usize) -> Result<Pushforward> {
    if bins == 0 {
        return Err(Error::arg("at least one bin is needed"));
    }
    let (lo, hi) = u.values().min_max();
    let (lo, hi) = (lo.to_f64(), hi.to_f64());
    if lo >= hi {
        return Err(Error::Degenerate("u is constant, so its range is a single point".into()));
    }
    let n = u.base_level();
    let level = h.level(n)?;
    let vals = u.values().to_f64_vec();
    let len = 1.0 / level.scale() as f64;
    let width = (hi - lo) / bins as f64;
    let mut acc = vec![crate::num::Compensated::default(); bins];
    let mut flat = 0usize;
    let bin_of = |t: f64| (((t - lo) / width) as usize).min(bins - 1);
    for e in level.edges() {
        let (a, b) = (vals[e.tail as usize], vals[e.head as usize]);
        let mass = abs_pow((b - a) / len, p.value()) * len;
        if a == b {
            if mass > 0.0 {
                flat += 1;
                acc[bin_of(a)].add(mass);
            }
            continue;
        }
        let (x0, x1) = (a.min(b), a.max(b));
        for (i, slot) in acc.iter_mut().enumerate().take(bin_of(x1) + 1).skip(bin_of(x0)) {
            let left = lo + width * i as f64;
            let right = if i + 1 == bins { hi } else { left + width };
            let overlap = x1.min(right) - x0.max(left);
            if overlap > 0.0 {
                slot.add(mass * overlap / (x1 - x0));
            }
        }
    }
    let bins: Vec<Bin> = acc
        .iter()
        .enumerate()
        .map(|(i, m)| Bin {
            left: lo + width * i as f64,
            right: if i + 1 == bins { hi } else { lo + width * (i + 1) as f64 },
            mass: m.value(),
        })
        .collect();
    Ok(Pushforward {
        total: ordered_sum(bins.iter().map(|b| b.mass)),
        bins,
        flat_edges_with_mass: flat,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::num::rational;
    use crate::ratios::RatioSequence;

    fn setup(depth: usize) -> Hierarchy {
        Hierarchy::build(&RatioSequence::constant(3).unwrap(), depth).unwrap()
    }

    #[test]
    fn ramp_on_level_one_cells() {
        let h = setup(3);
        let p = Exponent::new(2.0).unwrap();
        let u = AffineFunction::diagonal_ramp();
        let g = gamma_cells(&u, &h, &p, 1).unwrap();
        let sixth = Scalar::Exact(rational(1, 6));
        let z = Scalar::zero();
        // Level-1 cells: centre, then the q_1, q_2, q_3, q_4 arms.
        let want = [&sixth, &sixth, &z, &sixth, &z];
        for (m, w) in g.masses.iter().zip(want) {
            assert_eq!(m.to_f64(), w.to_f64());
        }
        assert_eq!(g.total, Scalar::Exact(rational(1, 2)));
        let w = word_energy_measure(&u, &h, &p, 1).unwrap();
        assert_eq!(w.measure, g);
        assert_eq!(w.plateau_verified, Some(true));
    }

    #[test]
    fn ramp_pushforward_is_flat() {
        let h = setup(1);
        let p = Exponent::new(2.0).unwrap();
        let hist = pushforward_profile(&AffineFunction::diagonal_ramp(), &h, &p, 4).unwrap();
        for b in &hist.bins {
            assert!((b.mass - 0.125).abs() < 1e-15);
        }
        assert!(pushforward_profile(&AffineFunction::constant(&h, 0, rational(1, 1)).unwrap(), &h, &p, 4).is_err());
    }
}
