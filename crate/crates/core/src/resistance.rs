//! p-resistance between vertices: the closed form on the tree and an
//! independent variational solver.

use num_bigint::BigInt;
use num_rational::BigRational;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::VicsekLevel;
use crate::measure::pow;
use crate::num::{ordered_sum, ratio_to_f64, Exponent, Scalar};

/// `R_p(a, b) = d(a, b)^{p-1}` with `d` the geodesic distance; zero when `a = b`.
pub fn resistance(level: &VicsekLevel, a: usize, b: usize, p: &Exponent) -> Result<Scalar> {
    let d = level.geodesic_distance(a, b)?;
    if a == b {
        return Ok(Scalar::zero());
    }
    Ok(match p.integer_minus_one() {
        Some(k) => Scalar::Exact(pow(&d, k)),
        None => Scalar::Float(ratio_to_f64(&d).powf(p.value() - 1.0)),
    })
}

/// Smoothing levels for the variational solver, coarse to fine.
const SMOOTHING: [f64; 4] = [1e-3, 1e-6, 1e-9, 1e-12];
/// Stop a stage once the squared Newton decrement is this small relative to the energy.
const DECREMENT: f64 = 1e-18;

/// `1 / min E_{p,n}(u)` over `u(a) = 1`, `u(b) = 0`, found by damped Newton
/// descent on `sum (du^2 + eps^2)^{p/2}` with shrinking `eps`. The solver never
/// looks at geodesics; it only uses the edge list.
pub fn resistance_oracle(level: &VicsekLevel, a: usize, b: usize, p: &Exponent, iterations: usize) -> Result<f64> {
    let n = level.vertex_count();
    if a >= n {
        return Err(Error::UnknownVertex(a));
    }
    if b >= n {
        return Err(Error::UnknownVertex(b));
    }
    if a == b {
        return Err(Error::arg("resistance needs two distinct vertices"));
    }
    let pv = p.value();
    if pv > 8.0 {
        return Err(Error::arg(format!("the variational solver covers 1 < p <= 8, got {pv}")));
    }
    let tree = Tree::rooted(level, a as u32);
    let mut u = vec![0.5; n];
    u[a] = 1.0;
    u[b] = 0.0;
    let fixed = |v: usize| v == a || v == b;
    let mut used = 0usize;
    let mut residual = f64::INFINITY;
    for &eps in &SMOOTHING {
        loop {
            let (grad, hess) = tree.derivatives(&u, pv, eps);
            let step = tree.newton_step(&grad, &hess, &fixed);
            let slope: f64 = ordered_sum(grad.iter().zip(&step).map(|(g, s)| g * s));
            let f0 = tree.smoothed(&u, pv, eps);
            residual = -slope;
            if residual <= DECREMENT * f0.max(f64::MIN_POSITIVE) || residual <= 0.0 {
                break;
            }
            if used == iterations {
                return Err(Error::Convergence { residual, iterations });
            }
            used += 1;
            let mut t = 1.0;
            let mut trial = u.clone();
            for _ in 0..80 {
                for (x, (v, s)) in trial.iter_mut().zip(u.iter().zip(&step)) {
                    *x = v + t * s;
                }
                if tree.smoothed(&trial, pv, eps) <= f0 + 1e-4 * t * slope {
                    break;
                }
                t *= 0.5;
            }
            if trial == u {
                break;
            }
            u = trial;
        }
    }
    let energy = (level.scale() as f64).powf(pv - 1.0)
        * ordered_sum(level.edges().iter().map(|e| (u[e.head as usize] - u[e.tail as usize]).abs().powf(pv)));
    if !(energy > 0.0 && energy.is_finite()) {
        return Err(Error::Convergence { residual, iterations: used });
    }
    Ok(1.0 / energy)
}

/// The graph as a tree hanging from one root, with vertices in BFS order.
struct Tree {
    order: Vec<u32>,
    parent: Vec<u32>,
}

impl Tree {
    fn rooted(level: &VicsekLevel, root: u32) -> Self {
        let n = level.vertex_count();
        let mut parent = vec![u32::MAX; n];
        let mut order = Vec::with_capacity(n);
        parent[root as usize] = root;
        order.push(root);
        let mut head = 0;
        while head < order.len() {
            let v = order[head];
            head += 1;
            for &w in level.neighbors(v) {
                if parent[w as usize] == u32::MAX {
                    parent[w as usize] = v;
                    order.push(w);
                }
            }
        }
        Self { order, parent }
    }

    fn child_edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.order[1..].iter().map(|&v| (v as usize, self.parent[v as usize] as usize))
    }

    fn smoothed(&self, u: &[f64], p: f64, eps: f64) -> f64 {
        ordered_sum(self.child_edges().map(|(v, w)| {
            let d = u[v] - u[w];
            (d * d + eps * eps).powf(p / 2.0)
        }))
    }

    /// Vertex gradient and per-edge second derivative (indexed by the child vertex).
    fn derivatives(&self, u: &[f64], p: f64, eps: f64) -> (Vec<f64>, Vec<f64>) {
        let mut grad = vec![0.0; u.len()];
        let mut hess = vec![0.0; u.len()];
        for (v, w) in self.child_edges() {
            let d = u[v] - u[w];
            let s = d * d + eps * eps;
            let g = p * d * s.powf(p / 2.0 - 1.0);
            grad[v] += g;
            grad[w] -= g;
            hess[v] = p * s.powf(p / 2.0 - 2.0) * ((p - 1.0) * d * d + eps * eps);
        }
        (grad, hess)
    }

    /// Solves `H step = -grad` with the fixed vertices held at zero, by
    /// eliminating leaves towards the root and substituting back.
    fn newton_step(&self, grad: &[f64], hess: &[f64], fixed: &dyn Fn(usize) -> bool) -> Vec<f64> {
        let n = grad.len();
        let mut diag = vec![0.0; n];
        for (v, w) in self.child_edges() {
            diag[v] += hess[v];
            diag[w] += hess[v];
        }
        let mut rhs: Vec<f64> = grad.iter().map(|g| -g).collect();
        for (v, w) in self.child_edges().collect::<Vec<_>>().into_iter().rev() {
            if fixed(v) || fixed(w) {
                continue;
            }
            let h = hess[v];
            diag[w] -= h * h / diag[v];
            rhs[w] += h * rhs[v] / diag[v];
        }
        let mut step = vec![0.0; n];
        for (v, w) in self.child_edges() {
            if fixed(v) {
                continue;
            }
            let up = if fixed(w) { 0.0 } else { step[w] };
            step[v] = (rhs[v] + hess[v] * up) / diag[v];
        }
        step
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ResistanceRow {
    pub a: usize,
    pub b: usize,
    pub geodesic: Scalar,
    pub euclidean: f64,
    pub resistance: Scalar,
    pub oracle: Option<f64>,
}

/// Two-sided comparison `c d^{p-1} <= R_p <= C d^{p-1}` with Euclidean `d`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ResistanceTable {
    pub level: usize,
    pub p: f64,
    pub rows: Vec<ResistanceRow>,
    pub lower_constant: f64,
    pub upper_constant: f64,
    /// Largest `|oracle - R| / R` when the oracle was run.
    pub oracle_gap: Option<f64>,
}

/// Every unordered vertex pair of the level, optionally checked against the solver.
pub fn resistance_table(level: &VicsekLevel, p: &Exponent, with_oracle: bool, iterations: usize) -> Result<ResistanceTable> {
    let n = level.vertex_count();
    let root2l = std::f64::consts::SQRT_2 * level.scale() as f64;
    let mut rows = Vec::with_capacity(n * (n - 1) / 2);
    let (mut lo, mut hi, mut gap) = (f64::INFINITY, 0.0f64, 0.0f64);
    for a in 0..n {
        for b in a + 1..n {
            let r = resistance(level, a, b, p)?;
            let [ax, ay] = level.coords()[a];
            let [bx, by] = level.coords()[b];
            let euclidean = (((ax - bx) * (ax - bx) + (ay - by) * (ay - by)) as f64).sqrt() / root2l;
            let ratio = r.to_f64() / euclidean.powf(p.value() - 1.0);
            lo = lo.min(ratio);
            hi = hi.max(ratio);
            let oracle = if with_oracle {
                let o = resistance_oracle(level, a, b, p, iterations)?;
                gap = gap.max((o - r.to_f64()).abs() / r.to_f64());
                Some(o)
            } else {
                None
            };
            rows.push(ResistanceRow {
                a,
                b,
                geodesic: Scalar::Exact(level.geodesic_distance(a, b)?),
                euclidean,
                resistance: r,
                oracle,
            });
        }
    }
    Ok(ResistanceTable {
        level: level.level(),
        p: p.value(),
        rows,
        lower_constant: lo,
        upper_constant: hi,
        oracle_gap: with_oracle.then_some(gap),
    })
}

/// Series resistance of a path of `hops` edges at scale `L` for p = 2.
#[must_use]
pub fn series_resistance(hops: u64, scale: i64) -> BigRational {
    BigRational::new(BigInt::from(hops), BigInt::from(scale))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::num::rational;
    use crate::ratios::RatioSequence;

    #[test]
    fn closed_form_values() {
        let seq = RatioSequence::constant(3).unwrap();
        let l0 = VicsekLevel::build(&seq, 0).unwrap();
        for q in [1.5, 2.0, 3.0] {
            let p = Exponent::new(q).unwrap();
            assert_eq!(resistance(&l0, 0, 1, &p).unwrap().to_f64(), 1.0);
        }
        let p2 = Exponent::new(2.0).unwrap();
        let p3 = Exponent::new(3.0).unwrap();
        assert_eq!(resistance(&l0, 1, 3, &p2).unwrap(), Scalar::Exact(rational(2, 1)));
        assert_eq!(resistance(&l0, 1, 3, &p3).unwrap(), Scalar::Exact(rational(4, 1)));
        assert!(resistance(&l0, 2, 2, &p2).unwrap().is_zero());
    }

    #[test]
    fn solver_matches_closed_form() {
        let seq = RatioSequence::constant(3).unwrap();
        let l1 = VicsekLevel::build(&seq, 1).unwrap();
        let q1 = l1.vertex_id([3, 3]).unwrap() as usize;
        let p = Exponent::new(2.0).unwrap();
        let r = resistance_oracle(&l1, 0, q1, &p, 200).unwrap();
        assert!((r - 1.0).abs() < 1e-6, "{r}");
        for q in [1.5, 3.0, 8.0] {
            let p = Exponent::new(q).unwrap();
            let r = resistance_oracle(&l1, 0, q1, &p, 500).unwrap();
            assert!((r - 1.0).abs() < 1e-6, "p = {q}: {r}");
        }
    }
}
