//! Finite-level checks of the structural properties of the p-energy: product
//! rule, Lipschitz contraction, spectral gap, Morrey and Poincaré constants,
//! strong locality and the Clarkson inequalities.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::affine::AffineFunction;
use crate::energy::{discrete_energy, discrete_energy_by_cell, not_above, FLOAT_TOLERANCE};
use crate::error::{Error, Result};
use crate::geometry::{Hierarchy, VicsekLevel};
use crate::measure::pow;
use crate::num::{abs_pow, ordered_sum, Exponent, NodeValues, Scalar};

/// A 1-Lipschitz map of the real line.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Lipschitz {
    Abs,
    PositivePart,
    /// `t -> min(max(t, lo), hi)` with rational bounds `[num, den]`.
    Clamp { lo: [i64; 2], hi: [i64; 2] },
}

impl Lipschitz {
    pub fn validate(&self) -> Result<()> {
        if let Lipschitz::Clamp { lo, hi } = self {
            if lo[1] <= 0 || hi[1] <= 0 {
                return Err(Error::arg("clamp bounds need positive denominators"));
            }
            if BigRational::new(lo[0].into(), lo[1].into()) > BigRational::new(hi[0].into(), hi[1].into()) {
                return Err(Error::arg("clamp needs lo <= hi"));
            }
        }
        Ok(())
    }

    #[must_use]
    pub fn name(&self) -> String {
        match self {
            Lipschitz::Abs => "abs".into(),
            Lipschitz::PositivePart => "positive_part".into(),
            Lipschitz::Clamp { lo, hi } => format!("clamp[{}/{},{}/{}]", lo[0], lo[1], hi[0], hi[1]),
        }
    }

    #[must_use]
    pub fn apply(&self, values: &NodeValues) -> NodeValues {
        match (self, values) {
            (Lipschitz::Abs, NodeValues::Exact { num, den }) => NodeValues::Exact {
                num: num.iter().map(Signed::abs).collect(),
                den: den.clone(),
            },
            (Lipschitz::PositivePart, NodeValues::Exact { num, den }) => NodeValues::Exact {
                num: num.iter().map(|x| x.clone().max(BigInt::zero())).collect(),
                den: den.clone(),
            },
            (Lipschitz::Clamp { lo, hi }, NodeValues::Exact { num, den }) => {
                let lo = BigRational::new(lo[0].into(), lo[1].into());
                let hi = BigRational::new(hi[0].into(), hi[1].into());
                let vals: Vec<BigRational> = num
                    .iter()
                    .map(|x| BigRational::new(x.clone(), den.clone()).max(lo.clone()).min(hi.clone()))
                    .collect();
                NodeValues::from_rationals(&vals)
            }
            (_, NodeValues::Float(v)) => NodeValues::Float(v.iter().map(|&t| self.apply_f64(t)).collect()),
        }
    }

    fn apply_f64(&self, t: f64) -> f64 {
        match self {
            Lipschitz::Abs => t.abs(),
            Lipschitz::PositivePart => t.max(0.0),
            Lipschitz::Clamp { lo, hi } => t.max(lo[0] as f64 / lo[1] as f64).min(hi[0] as f64 / hi[1] as f64),
        }
    }
}

/// `s^p`, exact for an exact `s` and integer `p`.
#[must_use]
pub fn scalar_pow(s: &Scalar, p: &Exponent) -> Scalar {
    match (s, p.integer()) {
        (Scalar::Exact(r), Some(k)) => Scalar::Exact(pow(&r.abs(), k)),
        _ => Scalar::Float(abs_pow(s.to_f64(), p.value())),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Comparison {
    pub lhs: Scalar,
    pub rhs: Scalar,
    pub holds: bool,
}

impl Comparison {
    fn at_most(lhs: Scalar, rhs: Scalar) -> Self {
        let holds = not_above(&lhs, &rhs);
        Self { lhs, rhs, holds }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Contraction {
    pub map: String,
    pub check: Comparison,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Locality {
    pub offset: Scalar,
    /// Closed supports of `u` and `v - offset` are disjoint.
    pub separated: bool,
    pub additive: bool,
    pub holds: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Clarkson {
    /// `E(f+g) + E(f-g) - 2 (E(f)^{1/(p-1)} + E(g)^{1/(p-1)})^{p-1}`.
    pub residual: f64,
    pub holds: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MorreyReport {
    /// `max |u(x) - u(y)|^p / (d(x,y)^{p-1} E_p(u))` over vertex pairs.
    pub constant: f64,
    pub pair: Option<(u32, u32)>,
    /// Cell pairs taken off the queue.
    pub visited: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StructureReport {
    pub level: usize,
    pub p: f64,
    pub energy_u: Scalar,
    pub energy_v: Scalar,
    pub product: Comparison,
    pub contraction: Vec<Contraction>,
    pub spectral_gap: f64,
    pub morrey: MorreyReport,
    pub poincare: f64,
    pub locality: Locality,
    pub clarkson: Clarkson,
}

impl StructureReport {
    /// Every boolean check passed.
    #[must_use]
    pub fn all_hold(&self) -> bool {
        self.product.holds
            && self.contraction.iter().all(|c| c.check.holds)
            && self.locality.holds
            && self.clarkson.holds
    }
}

/// Runs every check at level `n` on `u` and `v` (and `f = u`, `g = v` for Clarkson).
pub fn structure_checks(
    h: &Hierarchy,
    u: &AffineFunction,
    v: &AffineFunction,
    p: &Exponent,
    n: usize,
    maps: &[Lipschitz],
    offset: &Scalar,
) -> Result<StructureReport> {
    let level = h.level(n)?;
    let uv = u.evaluate_all(h, n)?;
    let vv = v.evaluate_all(h, n)?;
    let eu = discrete_energy(level, &uv, p, None)?;
    let ev = discrete_energy(level, &vv, p, None)?;

    let scale = match p.integer_minus_one() {
        Some(k) => Scalar::Exact(BigRational::from_integer(BigInt::from(2).pow(k))),
        None => Scalar::Float(2f64.powf(p.value() - 1.0)),
    };
    let prod = uv.product(&vv)?;
    let product = Comparison::at_most(
        discrete_energy(level, &prod, p, None)?,
        &scale * &(&(&scalar_pow(&u.sup_norm(), p) * &ev) + &(&scalar_pow(&v.sup_norm(), p) * &eu)),
    );

    let contraction = maps
        .iter()
        .map(|m| {
            m.validate()?;
            Ok(Contraction {
                map: m.name(),
                check: Comparison::at_most(discrete_energy(level, &m.apply(&uv), p, None)?, eu.clone()),
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let uf = uv.to_f64_vec();
    let euf = eu.to_f64();
    let spectral_gap = if euf > 0.0 {
        let mean = ordered_sum(uf.iter().copied()) / uf.len() as f64;
        let spread = ordered_sum(uf.iter().map(|x| abs_pow(x - mean, p.value()))) / uf.len() as f64;
        spread / (2f64.powf(p.value() - 1.0) * euf)
    } else {
        0.0
    };
    let morrey = morrey_constant(level, &uf, p.value(), euf);
    let poincare = poincare_constant(level, &uv, p)?;

    let shifted = vv.affine_map(&Scalar::Exact(BigRational::from_integer(1.into())), &(&Scalar::zero() - offset));
    let separated = supports_disjoint(level, &uv, &shifted);
    let sum = uv.combine(&vv, false)?;
    let esum = discrete_energy(level, &sum, p, None)?;
    let parts = &eu + &ev;
    let additive = match (&esum, &parts) {
        (Scalar::Exact(a), Scalar::Exact(b)) => a == b,
        _ => esum.relative_gap(&parts) <= FLOAT_TOLERANCE,
    };
    let locality = Locality {
        offset: offset.clone(),
        separated,
        additive,
        holds: !separated || additive,
    };

    let diff = uv.combine(&vv, true)?;
    let ediff = discrete_energy(level, &diff, p, None)?;
    let clarkson = clarkson(esum.to_f64(), ediff.to_f64(), euf, ev.to_f64(), p.value());

    Ok(StructureReport {
        level: n,
        p: p.value(),
        energy_u: eu,
        energy_v: ev,
        product,
        contraction,
        spectral_gap,
        morrey,
        poincare,
        locality,
        clarkson,
    })
}

/// Clarkson residual with the direction chosen by `p`; at `p = 2` both directions apply.
#[must_use]
pub fn clarkson(e_sum: f64, e_diff: f64, e_f: f64, e_g: f64, p: f64) -> Clarkson {
    let q = 1.0 / (p - 1.0);
    let rhs = 2.0 * (e_f.powf(q) + e_g.powf(q)).powf(p - 1.0);
    let lhs = e_sum + e_diff;
    let residual = lhs - rhs;
    let slack = FLOAT_TOLERANCE * lhs.abs().max(rhs.abs()).max(f64::MIN_POSITIVE);
    let holds = (p > 2.0 || residual >= -slack) && (p < 2.0 || residual <= slack);
    Clarkson { residual, holds }
}

/// Vertices touched by an edge that carries a nonzero value at either end.
fn closed_support(level: &VicsekLevel, values: &NodeValues) -> Vec<bool> {
    let nonzero: Vec<bool> = (0..values.len()).map(|i| !values.get(i).is_zero()).collect();
    let mut inside = nonzero.clone();
    for e in level.edges() {
        let (a, b) = (e.tail as usize, e.head as usize);
        if nonzero[a] || nonzero[b] {
            inside[a] = true;
            inside[b] = true;
        }
    }
    inside
}

fn supports_disjoint(level: &VicsekLevel, u: &NodeValues, w: &NodeValues) -> bool {
    let su = closed_support(level, u);
    let sw = closed_support(level, w);
    !su.iter().zip(&sw).any(|(a, b)| *a && *b)
}

/// Largest `mean_A |u - mean_A u|^p / (diam(A)^{p-1} E_{p;A}(u))` over level-1 cells `A`,
/// with means over the level-`n` vertices of `A`.
pub fn poincare_constant(level: &VicsekLevel, values: &NodeValues, p: &Exponent) -> Result<f64> {
    if level.level() == 0 {
        return Err(Error::arg("the Poincaré check needs level >= 1"));
    }
    let energies = discrete_energy_by_cell(level, values, p, 1)?;
    let per = level.cells_per_prefix(1);
    let vals = values.to_f64_vec();
    let mut members: Vec<Vec<f64>> = vec![Vec::new(); energies.len()];
    for v in 0..level.vertex_count() as u32 {
        let mut owners: Vec<usize> = level.cells_of_vertex(v).map(|c| c / per).collect();
        owners.dedup();
        for w in owners {
            members[w].push(vals[v as usize]);
        }
    }
    let diam = 2.0 / f64::from(level.ratios()[0]);
    let pv = p.value();
    let mut worst = 0.0f64;
    for (w, e) in energies.iter().enumerate() {
        let e = e.to_f64();
        if e <= 0.0 {
            continue;
        }
        let xs = &members[w];
        let mean = ordered_sum(xs.iter().copied()) / xs.len() as f64;
        let spread = ordered_sum(xs.iter().map(|x| abs_pow(x - mean, pv))) / xs.len() as f64;
        worst = worst.max(spread / (diam.powf(pv - 1.0) * e));
    }
    Ok(worst)
}

#[derive(Clone, Copy)]
struct CellBox {
    lo: f64,
    hi: f64,
    x: [i64; 2],
    y: [i64; 2],
}

impl CellBox {
    fn merge(self, o: CellBox) -> CellBox {
        CellBox {
            lo: self.lo.min(o.lo),
            hi: self.hi.max(o.hi),
            x: [self.x[0].min(o.x[0]), self.x[1].max(o.x[1])],
            y: [self.y[0].min(o.y[0]), self.y[1].max(o.y[1])],
        }
    }

    fn gap2(&self, o: &CellBox) -> i64 {
        let dx = (o.x[0] - self.x[1]).max(self.x[0] - o.x[1]).max(0);
        let dy = (o.y[0] - self.y[1]).max(self.y[0] - o.y[1]).max(0);
        dx * dx + dy * dy
    }
}

struct Candidate {
    bound: f64,
    depth: usize,
    a: u32,
    b: u32,
}

impl PartialEq for Candidate {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Candidate {}
impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Candidate {
    fn cmp(&self, other: &Self) -> Ordering {
        self.bound
            .total_cmp(&other.bound)
            .then(other.depth.cmp(&self.depth))
            .then(other.a.cmp(&self.a))
            .then(other.b.cmp(&self.b))
    }
}

/// Best-first branch and bound over pairs of cells: a pair of cells is
/// discarded once `(value spread)^p / gap^{p-1}` cannot beat the best vertex pair.
#[must_use]
pub fn morrey_constant(level: &VicsekLevel, values: &[f64], p: f64, energy: f64) -> MorreyReport {
    if energy <= 0.0 {
        return MorreyReport {
            constant: 0.0,
            pair: None,
            visited: 0,
        };
    }
    let n = level.level();
    let unit = std::f64::consts::SQRT_2 * level.scale() as f64;
    let coords = level.coords();
    let mut boxes: Vec<Vec<CellBox>> = vec![Vec::new(); n + 1];
    boxes[n] = level
        .cells()
        .iter()
        .map(|ids| {
            let mut b = CellBox {
                lo: f64::INFINITY,
                hi: f64::NEG_INFINITY,
                x: [i64::MAX, i64::MIN],
                y: [i64::MAX, i64::MIN],
            };
            for &v in ids {
                let [x, y] = coords[v as usize];
                let t = values[v as usize];
                b = b.merge(CellBox { lo: t, hi: t, x: [x, x], y: [y, y] });
            }
            b
        })
        .collect();
    for k in (0..n).rev() {
        let m = (2 * level.ratios()[k] - 1) as usize;
        boxes[k] = boxes[k + 1]
            .chunks(m)
            .map(|c| c.iter().copied().reduce(CellBox::merge).expect("nonempty"))
            .collect();
    }
    let bound = |k: usize, a: usize, b: usize| -> f64 {
        let (ba, bb) = (&boxes[k][a], &boxes[k][b]);
        let spread = (ba.hi - bb.lo).max(bb.hi - ba.lo);
        if spread <= 0.0 {
            return 0.0;
        }
        let g = ba.gap2(bb);
        if g == 0 {
            f64::INFINITY
        } else {
            spread.powf(p) / ((g as f64).sqrt() / unit).powf(p - 1.0)
        }
    };
    let mut best = 0.0f64;
    let mut pair = None;
    let mut visited = 0usize;
    let mut heap = BinaryHeap::new();
    heap.push(Candidate {
        bound: f64::INFINITY,
        depth: 0,
        a: 0,
        b: 0,
    });
    while let Some(c) = heap.pop() {
        if c.bound <= best {
            break;
        }
        visited += 1;
        if c.depth == n {
            let (ca, cb) = (level.cell(c.a as usize), level.cell(c.b as usize));
            for &x in &ca {
                for &y in &cb {
                    if x >= y && c.a == c.b || x == y {
                        continue;
                    }
                    let [ax, ay] = coords[x as usize];
                    let [bx, by] = coords[y as usize];
                    let d = (((ax - bx).pow(2) + (ay - by).pow(2)) as f64).sqrt() / unit;
                    let r = abs_pow(values[x as usize] - values[y as usize], p) / d.powf(p - 1.0);
                    if r > best {
                        best = r;
                        pair = Some((x.min(y), x.max(y)));
                    }
                }
            }
            continue;
        }
        let m = (2 * level.ratios()[c.depth] - 1) as u32;
        let k = c.depth + 1;
        for i in c.a * m..(c.a + 1) * m {
            let start = if c.a == c.b { i } else { c.b * m };
            for j in start..(c.b + 1) * m {
                let bnd = bound(k, i as usize, j as usize);
                if bnd > best {
                    heap.push(Candidate { bound: bnd, depth: k, a: i, b: j });
                }
            }
        }
    }
    MorreyReport {
        constant: best / energy,
        pair,
        visited,
    }
}

/// Plain maximum over all vertex pairs, for small levels.
#[must_use]
pub fn morrey_bruteforce(level: &VicsekLevel, values: &[f64], p: f64, energy: f64) -> f64 {
    if energy <= 0.0 {
        return 0.0;
    }
    let unit = std::f64::consts::SQRT_2 * level.scale() as f64;
    let coords = level.coords();
    let mut best = 0.0f64;
    for x in 0..coords.len() {
        for y in x + 1..coords.len() {
            let [ax, ay] = coords[x];
            let [bx, by] = coords[y];
            let d = (((ax - bx).pow(2) + (ay - by).pow(2)) as f64).sqrt() / unit;
            best = best.max(abs_pow(values[x] - values[y], p) / d.powf(p - 1.0));
        }
    }
    best / energy
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::num::rational;
    use crate::ratios::RatioSequence;

    #[test]
    fn ramp_checks() {
        let seq = RatioSequence::constant(3).unwrap();
        let h = Hierarchy::build(&seq, 3).unwrap();
        let u = AffineFunction::diagonal_ramp();
        let c = AffineFunction::constant(&h, 0, rational(1, 3)).unwrap();
        let p = Exponent::new(2.0).unwrap();
        let maps = [Lipschitz::Abs, Lipschitz::PositivePart, Lipschitz::Clamp { lo: [1, 4], hi: [3, 4] }];
        let rep = structure_checks(&h, &u, &c, &p, 3, &maps, &Scalar::zero()).unwrap();
        assert!(rep.all_hold());
        assert_eq!(rep.energy_u, Scalar::Exact(rational(1, 2)));
        assert!(rep.energy_v.is_zero());
        // q_1 against q_3: |1 - 0|^2 / (2 * 1/2) = 1.
        assert!((rep.morrey.constant - 1.0).abs() < 1e-12);
    }

    #[test]
    fn branch_and_bound_matches_bruteforce() {
        let seq = RatioSequence::list(&[3, 5]).unwrap();
        let h = Hierarchy::build(&seq, 2).unwrap();
        let base = [rational(1, 3), rational(-1, 2), rational(1, 1), rational(0, 1), rational(3, 4)];
        let u = AffineFunction::on_base(base);
        for q in [1.5, 2.0, 3.0] {
            let level = h.level(2).unwrap();
            let vals = u.evaluate_all(&h, 2).unwrap().to_f64_vec();
            let e = discrete_energy(level, &NodeValues::Float(vals.clone()), &Exponent::new(q).unwrap(), None)
                .unwrap()
                .to_f64();
            let fast = morrey_constant(level, &vals, q, e).constant;
            let slow = morrey_bruteforce(level, &vals, q, e);
            assert_eq!(fast, slow);
        }
    }

    #[test]
    fn clarkson_directions() {
        assert!(clarkson(4.0, 0.0, 1.0, 1.0, 2.0).holds);
        assert!(clarkson(5.0, 0.0, 1.0, 1.0, 3.0).holds);
        assert!(!clarkson(9.0, 0.0, 1.0, 1.0, 3.0).holds);
        assert!(clarkson(3.0, 0.0, 1.0, 1.0, 1.5).holds);
        assert!(!clarkson(2.0, 0.0, 1.0, 1.0, 1.5).holds);
    }
}
