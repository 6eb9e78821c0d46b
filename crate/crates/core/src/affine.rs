//! Piecewise-affine functions: values on `V_{n0}` extended linearly along the
//! level-`n0` edges and constantly on everything hanging off them.

use std::collections::VecDeque;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;

use crate::error::{Error, Result};
use crate::geometry::{Hierarchy, SkeletonPosition};
use crate::num::{rational, NodeValues, Scalar};

#[derive(Clone, Debug, PartialEq)]
pub struct AffineFunction {
    base_level: usize,
    values: NodeValues,
}

impl AffineFunction {
    /// Wraps values on `V_{base_level}`; the length is checked against `h`.
    pub fn new(h: &Hierarchy, base_level: usize, values: NodeValues) -> Result<Self> {
        let level = h.level(base_level)?;
        if values.len() != level.vertex_count() {
            return Err(Error::arg(format!(
                "{} values given for {} vertices",
                values.len(),
                level.vertex_count()
            )));
        }
        Ok(Self { base_level, values })
    }

    /// Values on `V_0` (centre, then `q_1..q_4`), valid for every ratio sequence.
    #[must_use]
    pub fn on_base(values: [BigRational; 5]) -> Self {
        Self {
            base_level: 0,
            values: NodeValues::from_rationals(&values),
        }
    }

    pub fn constant(h: &Hierarchy, base_level: usize, c: BigRational) -> Result<Self> {
        let n = h.level(base_level)?.vertex_count();
        Self::new(h, base_level, NodeValues::from_rationals(&vec![c; n]))
    }

    /// The ramp along the `q_3 -> q_1` diagonal: 0 at `q_3`, 1 at `q_1`, 1/2 elsewhere on `V_0`.
    #[must_use]
    pub fn diagonal_ramp() -> Self {
        let half = rational(1, 2);
        Self::on_base([half.clone(), rational(1, 1), half.clone(), rational(0, 1), half])
    }

    /// 1 at `q_1`, 0 at the other points of `V_0`.
    #[must_use]
    pub fn corner_indicator() -> Self {
        let z = rational(0, 1);
        Self::on_base([z.clone(), rational(1, 1), z.clone(), z.clone(), z])
    }

    #[must_use]
    pub fn base_level(&self) -> usize {
        self.base_level
    }

    #[must_use]
    pub fn values(&self) -> &NodeValues {
        &self.values
    }

    /// Same function with float values unless `exact` is requested.
    #[must_use]
    pub fn in_mode(&self, exact: bool) -> Self {
        Self {
            base_level: self.base_level,
            values: self.values.in_mode(exact),
        }
    }

    /// `sup |u|`, attained on `V_{n0}`.
    #[must_use]
    pub fn sup_norm(&self) -> Scalar {
        self.values.max_abs()
    }

    /// `c u + d`.
    #[must_use]
    pub fn affine_map(&self, c: &Scalar, d: &Scalar) -> Self {
        Self {
            base_level: self.base_level,
            values: self.values.affine_map(c, d),
        }
    }

    /// The same function described with base level `n >= n0`.
    pub fn lift(&self, h: &Hierarchy, n: usize) -> Result<Self> {
        Ok(Self {
            base_level: n,
            values: self.evaluate_all(h, n)?,
        })
    }

    /// `self + other` (or `self - other`), on the finer of the two base levels.
    pub fn combine(&self, h: &Hierarchy, other: &AffineFunction, subtract: bool) -> Result<Self> {
        let n = self.base_level.max(other.base_level);
        let a = self.evaluate_all(h, n)?;
        let b = other.evaluate_all(h, n)?;
        Ok(Self {
            base_level: n,
            values: a.combine(&b, subtract)?,
        })
    }

    /// Value at one vertex of level `n >= n0`.
    pub fn evaluate(&self, h: &Hierarchy, n: usize, v: u32) -> Result<Scalar> {
        let level = h.level(n)?;
        if v as usize >= level.vertex_count() {
            return Err(Error::UnknownVertex(v as usize));
        }
        Ok(self.evaluate_all(h, n)?.get(v as usize))
    }

    /// Values on all of `V_n`, `n >= n0`.
    pub fn evaluate_all(&self, h: &Hierarchy, n: usize) -> Result<NodeValues> {
        if n < self.base_level {
            return Err(Error::ScaleOrder {
                fine: n,
                coarse: self.base_level,
            });
        }
        if n == self.base_level {
            return Ok(self.values.clone());
        }
        let coarse = h.level(self.base_level)?;
        let fine = h.level(n)?;
        let count = fine.vertex_count();
        let positions = (0..count as u32)
            .map(|v| h.skeleton_position(self.base_level, n, v))
            .collect::<Result<Vec<_>>>()?;
        let mut known = vec![false; count];
        let values = match &self.values {
            NodeValues::Exact { num, den } => {
                let hh = fine.scale() / coarse.scale();
                let mut out = vec![BigInt::zero(); count];
                for (v, pos) in positions.iter().enumerate() {
                    match *pos {
                        SkeletonPosition::Vertex(c) => {
                            out[v] = &num[c as usize] * hh;
                            known[v] = true;
                        }
                        SkeletonPosition::Edge { cell, dir, t, h } => {
                            let ids = coarse.cell(cell);
                            let a = &num[ids[0] as usize];
                            let b = &num[ids[usize::from(dir)] as usize];
                            out[v] = a * (h - t) + b * t;
                            known[v] = true;
                        }
                        SkeletonPosition::Hanging => {}
                    }
                }
                spread(fine, &mut out, &mut known);
                NodeValues::Exact {
                    num: out,
                    den: den * hh,
                }
            }
            NodeValues::Float(vals) => {
                let mut out = vec![0.0; count];
                for (v, pos) in positions.iter().enumerate() {
                    match *pos {
                        SkeletonPosition::Vertex(c) => {
                            out[v] = vals[c as usize];
                            known[v] = true;
                        }
                        SkeletonPosition::Edge { cell, dir, t, h } => {
                            let ids = coarse.cell(cell);
                            let a = vals[ids[0] as usize];
                            let b = vals[ids[usize::from(dir)] as usize];
                            out[v] = (a * (h - t) as f64 + b * t as f64) / h as f64;
                            known[v] = true;
                        }
                        SkeletonPosition::Hanging => {}
                    }
                }
                spread(fine, &mut out, &mut known);
                NodeValues::Float(out)
            }
        };
        Ok(values)
    }

    /// Values on `V_n` for any `n`: restriction below the base level, extension above.
    pub fn sample(&self, h: &Hierarchy, n: usize) -> Result<NodeValues> {
        if n >= self.base_level {
            return self.evaluate_all(h, n);
        }
        let coarse = h.level(n)?;
        let ids = (0..coarse.vertex_count() as u32)
            .map(|v| h.embed(n, v, self.base_level))
            .collect::<Result<Vec<_>>>()?;
        Ok(match &self.values {
            NodeValues::Exact { num, den } => NodeValues::Exact {
                num: ids.iter().map(|&i| num[i as usize].clone()).collect(),
                den: den.clone(),
            },
            NodeValues::Float(vals) => NodeValues::Float(ids.iter().map(|&i| vals[i as usize]).collect()),
        })
    }
}

/// Copies each known value into the branches hanging off it.
fn spread<T: Clone>(level: &crate::geometry::VicsekLevel, out: &mut [T], known: &mut [bool]) {
    let mut queue: VecDeque<u32> = (0..out.len() as u32).filter(|&v| known[v as usize]).collect();
    while let Some(v) = queue.pop_front() {
        for &u in level.neighbors(v) {
            if !known[u as usize] {
                known[u as usize] = true;
                out[u as usize] = out[v as usize].clone();
                queue.push_back(u);
            }
        }
    }
}
