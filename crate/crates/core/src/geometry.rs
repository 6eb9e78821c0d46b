//! Exact level-n graphs of the fractal.
//!
//! Points are stored at scale `n` as integers: the true point times `sqrt(2) * L_n`.
//! In these units every cell is an axis-parallel square of half-side 1 centred on
//! an even lattice point, and every edge is a `(±1, ±1)` step.

use std::collections::{HashMap, VecDeque};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::ratios::{enumerate_letters, RatioSequence, Word, DIRECTIONS};

/// Largest `#W_n` a level may have before construction is refused.
pub const DEFAULT_CELL_BUDGET: u64 = 2_000_000;

const NONE: u32 = u32::MAX;

/// An exact point at scale `scale`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct LatticePoint {
    pub x: BigInt,
    pub y: BigInt,
    pub scale: usize,
}

impl LatticePoint {
    #[must_use]
    pub fn new(x: impl Into<BigInt>, y: impl Into<BigInt>, scale: usize) -> Self {
        Self {
            x: x.into(),
            y: y.into(),
            scale,
        }
    }

    /// The same point expressed at another scale.
    pub fn rescaled(&self, ratios: &RatioSequence, target: usize) -> Result<LatticePoint> {
        if target >= self.scale {
            let f = ratios.scale(target)? / ratios.scale(self.scale)?;
            Ok(LatticePoint::new(&self.x * &f, &self.y * &f, target))
        } else {
            let f = ratios.scale(self.scale)? / ratios.scale(target)?;
            if !(&self.x % &f).is_zero() || !(&self.y % &f).is_zero() {
                return Err(Error::arg(format!(
                    "point is not representable at scale {target}"
                )));
            }
            Ok(LatticePoint::new(&self.x / &f, &self.y / &f, target))
        }
    }

    /// Exact squared Euclidean distance, `(dx^2 + dy^2) / (2 L_n^2)`.
    pub fn squared_distance(&self, other: &LatticePoint, ratios: &RatioSequence) -> Result<BigRational> {
        if self.scale != other.scale {
            return Err(Error::ScaleMismatch {
                left: self.scale,
                right: other.scale,
            });
        }
        let dx = &self.x - &other.x;
        let dy = &self.y - &other.y;
        let l = ratios.scale(self.scale)?;
        Ok(BigRational::new(dx.clone() * dx + dy.clone() * dy, BigInt::from(2) * &l * &l))
    }
}

/// Which of the five reference points of a cell.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Corner {
    Center,
    /// `q_j`, `j = 1..=4`.
    Vertex(u8),
}

impl Corner {
    /// 0 is the centre, 1..=4 the corners.
    pub fn from_index(i: usize) -> Result<Corner> {
        match i {
            0 => Ok(Corner::Center),
            1..=4 => Ok(Corner::Vertex(i as u8)),
            _ => Err(Error::arg(format!("corner index {i} is not in 0..=4"))),
        }
    }

    #[must_use]
    pub fn offset(&self) -> (i64, i64) {
        match *self {
            Corner::Center => (0, 0),
            Corner::Vertex(j) => DIRECTIONS[usize::from(j - 1)],
        }
    }
}

/// `sqrt(2) L_n F_w(q)` for the chosen reference point `q` of the cell of `word`.
pub fn point_of_word(ratios: &RatioSequence, word: &Word, corner: Corner) -> Result<LatticePoint> {
    if let Corner::Vertex(j) = corner {
        if !(1..=4).contains(&j) {
            return Err(Error::arg(format!("corner index {j} is not in 1..=4")));
        }
    }
    word.validate(ratios)?;
    let n = word.level();
    let mut x = BigInt::zero();
    let mut y = BigInt::zero();
    for (k, letter) in word.letters().iter().enumerate() {
        let l = ratios.ratio(k + 1)?;
        let (ox, oy) = letter.offset();
        x = x * l + ox;
        y = y * l + oy;
    }
    let (cx, cy) = corner.offset();
    Ok(LatticePoint::new(x + cx, y + cy, n))
}

/// Whether `d(a, b) < rho_{n_scale}`, decided in exact integers.
pub fn within_open_ball(
    ratios: &RatioSequence,
    a: &LatticePoint,
    b: &LatticePoint,
    n_scale: usize,
) -> Result<bool> {
    if a.scale != b.scale {
        return Err(Error::ScaleMismatch {
            left: a.scale,
            right: b.scale,
        });
    }
    if n_scale > a.scale {
        return Err(Error::ScaleOrder {
            fine: a.scale,
            coarse: n_scale,
        });
    }
    let dx = &a.x - &b.x;
    let dy = &a.y - &b.y;
    let ln = ratios.scale(n_scale)?;
    let lm = ratios.scale(a.scale)?;
    Ok((dx.clone() * dx + dy.clone() * dy) * &ln * &ln < BigInt::from(8) * &lm * &lm)
}

/// Integer form of [`within_open_ball`] for coordinates already at scale `m`.
#[inline]
#[must_use]
pub fn in_open_ball(a: [i64; 2], b: [i64; 2], ln: i64, lm: i64) -> bool {
    let dx = i128::from(a[0] - b[0]);
    let dy = i128::from(a[1] - b[1]);
    let ln = i128::from(ln);
    let lm = i128::from(lm);
    (dx * dx + dy * dy) * ln * ln < 8 * lm * lm
}

/// An oriented edge, `tail` closer to the origin than `head` along the tree.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Edge {
    pub tail: u32,
    pub head: u32,
    /// Index of the cell (word) that contains the edge.
    pub cell: u32,
}

/// The exact level-n graph.
#[derive(Clone, Debug)]
pub struct VicsekLevel {
    level: usize,
    prefix: Vec<u32>,
    scale: i64,
    coords: Vec<[i64; 2]>,
    cells: Vec<[u32; 5]>,
    edges: Vec<Edge>,
    hops: Vec<u32>,
    parent: Vec<u32>,
    producers: Vec<[u32; 2]>,
    multiplicity: Vec<u8>,
    adjacency_start: Vec<u32>,
    adjacency: Vec<u32>,
    lookup: HashMap<[i64; 2], u32>,
}

/// Outcome of [`VicsekLevel::check_invariants`].
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct LevelInvariants {
    pub vertex_count_ok: bool,
    pub edge_count_ok: bool,
    pub connected: bool,
    pub edge_lengths_ok: bool,
    pub orientation_ok: bool,
    pub max_multiplicity: u8,
}

impl LevelInvariants {
    #[must_use]
    pub fn all_hold(&self) -> bool {
        self.vertex_count_ok
            && self.edge_count_ok
            && self.connected
            && self.edge_lengths_ok
            && self.orientation_ok
            && self.max_multiplicity <= 2
    }
}

#[derive(Serialize)]
struct LevelJson<'a> {
    level: usize,
    ratios: &'a [u32],
    scale: i64,
    vertices: &'a [[i64; 2]],
    edges: Vec<[u32; 3]>,
}

impl VicsekLevel {
    pub fn build(ratios: &RatioSequence, n: usize) -> Result<Self> {
        Self::build_with_budget(ratios, n, DEFAULT_CELL_BUDGET)
    }

    pub fn build_with_budget(ratios: &RatioSequence, n: usize, budget: u64) -> Result<Self> {
        let cells_needed = ratios.cell_count(n)?;
        if cells_needed > BigInt::from(budget) {
            return Err(Error::Budget {
                level: n,
                cells: cells_needed.to_string(),
                budget,
            });
        }
        let cell_total = cells_needed.to_usize().expect("within budget");
        let prefix = ratios.prefix(n)?;
        let scale = prefix.iter().map(|&l| i64::from(l)).product::<i64>();

        let mut centers: Vec<[i64; 2]> = vec![[0, 0]];
        for &l in &prefix {
            let letters = enumerate_letters(u64::from(l))?;
            let mut next = Vec::with_capacity(centers.len() * letters.len());
            let l = i64::from(l);
            for c in &centers {
                for a in &letters {
                    let (ox, oy) = a.offset();
                    next.push([c[0] * l + ox, c[1] * l + oy]);
                }
            }
            centers = next;
        }
        debug_assert_eq!(centers.len(), cell_total);

        let vertex_total = 4 * cell_total + 1;
        let mut lookup: HashMap<[i64; 2], u32> = HashMap::with_capacity(vertex_total);
        let mut coords = Vec::with_capacity(vertex_total);
        let mut producers: Vec<[u32; 2]> = Vec::with_capacity(vertex_total);
        let mut multiplicity: Vec<u8> = Vec::with_capacity(vertex_total);
        let mut cells = Vec::with_capacity(cell_total);
        for (w, c) in centers.iter().enumerate() {
            let mut ids = [0u32; 5];
            for slot in 0..5 {
                let (ox, oy) = if slot == 0 { (0, 0) } else { DIRECTIONS[slot - 1] };
                let pt = [c[0] + ox, c[1] + oy];
                let tag = (w * 5 + slot) as u32;
                let id = *lookup.entry(pt).or_insert_with(|| {
                    coords.push(pt);
                    producers.push([NONE, NONE]);
                    multiplicity.push(0);
                    (coords.len() - 1) as u32
                });
                let i = id as usize;
                if multiplicity[i] < 2 {
                    producers[i][usize::from(multiplicity[i])] = tag;
                }
                multiplicity[i] = multiplicity[i].saturating_add(1);
                ids[slot] = id;
            }
            cells.push(ids);
        }

        let vcount = coords.len();
        let mut degree = vec![0u32; vcount + 1];
        for ids in &cells {
            degree[ids[0] as usize] += 4;
            for &k in &ids[1..] {
                degree[k as usize] += 1;
            }
        }
        let mut adjacency_start = vec![0u32; vcount + 1];
        for v in 0..vcount {
            adjacency_start[v + 1] = adjacency_start[v] + degree[v];
        }
        let mut fill = adjacency_start.clone();
        let mut adjacency = vec![0u32; adjacency_start[vcount] as usize];
        for ids in &cells {
            for &k in &ids[1..] {
                let (a, b) = (ids[0] as usize, k as usize);
                adjacency[fill[a] as usize] = k;
                fill[a] += 1;
                adjacency[fill[b] as usize] = ids[0];
                fill[b] += 1;
            }
        }

        let mut hops = vec![u32::MAX; vcount];
        let mut parent = vec![NONE; vcount];
        let mut queue = VecDeque::new();
        hops[0] = 0;
        parent[0] = 0;
        queue.push_back(0u32);
        while let Some(v) = queue.pop_front() {
            let v = v as usize;
            for &u in &adjacency[adjacency_start[v] as usize..adjacency_start[v + 1] as usize] {
                if hops[u as usize] == u32::MAX {
                    hops[u as usize] = hops[v] + 1;
                    parent[u as usize] = v as u32;
                    queue.push_back(u);
                }
            }
        }

        let mut edges = Vec::with_capacity(4 * cell_total);
        for (w, ids) in cells.iter().enumerate() {
            for &k in &ids[1..] {
                let (a, b) = (ids[0], k);
                let (tail, head) = if hops[a as usize] <= hops[b as usize] { (a, b) } else { (b, a) };
                edges.push(Edge {
                    tail,
                    head,
                    cell: w as u32,
                });
            }
        }

        Ok(Self {
            level: n,
            prefix,
            scale,
            coords,
            cells,
            edges,
            hops,
            parent,
            producers,
            multiplicity,
            adjacency_start,
            adjacency,
            lookup,
        })
    }

    #[must_use]
    pub fn level(&self) -> usize {
        self.level
    }

    /// `[l_1, ..., l_n]`.
    #[must_use]
    pub fn ratios(&self) -> &[u32] {
        &self.prefix
    }

    /// `L_n`.
    #[must_use]
    pub fn scale(&self) -> i64 {
        self.scale
    }

    #[must_use]
    pub fn vertex_count(&self) -> usize {
        self.coords.len()
    }

    #[must_use]
    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    #[must_use]
    pub fn cell_count(&self) -> usize {
        self.cells.len()
    }

    #[must_use]
    pub fn coords(&self) -> &[[i64; 2]] {
        &self.coords
    }

    #[must_use]
    pub fn point(&self, v: u32) -> LatticePoint {
        let [x, y] = self.coords[v as usize];
        LatticePoint::new(x, y, self.level)
    }

    /// Vertex ids of a cell: centre, then corners `q_1..q_4`.
    #[must_use]
    pub fn cell(&self, w: usize) -> [u32; 5] {
        self.cells[w]
    }

    #[must_use]
    pub fn cells(&self) -> &[[u32; 5]] {
        &self.cells
    }

    #[must_use]
    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    #[must_use]
    pub fn neighbors(&self, v: u32) -> &[u32] {
        let v = v as usize;
        &self.adjacency[self.adjacency_start[v] as usize..self.adjacency_start[v + 1] as usize]
    }

    #[must_use]
    pub fn vertex_id(&self, pt: [i64; 2]) -> Option<u32> {
        self.lookup.get(&pt).copied()
    }

    /// Number of edges on the tree path from the origin.
    #[must_use]
    pub fn hops_from_origin(&self, v: u32) -> u32 {
        self.hops[v as usize]
    }

    /// Exact geodesic distance from the origin.
    #[must_use]
    pub fn geodesic_from_origin(&self, v: u32) -> BigRational {
        BigRational::new(BigInt::from(self.hops[v as usize]), BigInt::from(self.scale))
    }

    /// How many `(cell, slot)` pairs produced the vertex.
    #[must_use]
    pub fn multiplicity(&self, v: u32) -> u8 {
        self.multiplicity[v as usize]
    }

    /// The cells containing `v` (one or two).
    pub fn cells_of_vertex(&self, v: u32) -> impl Iterator<Item = usize> + '_ {
        self.producers[v as usize]
            .iter()
            .filter(|&&t| t != NONE)
            .map(|&t| t as usize / 5)
    }

    /// The first cell that produced `v`.
    #[must_use]
    pub fn home_cell(&self, v: u32) -> usize {
        self.producers[v as usize][0] as usize / 5
    }

    fn check_vertex(&self, v: usize) -> Result<()> {
        if v < self.coords.len() {
            Ok(())
        } else {
            Err(Error::UnknownVertex(v))
        }
    }

    /// Number of edges on the tree path between two vertices.
    pub fn geodesic_hops(&self, a: usize, b: usize) -> Result<u64> {
        self.check_vertex(a)?;
        self.check_vertex(b)?;
        let (mut a, mut b) = (a, b);
        let mut count = 0u64;
        while self.hops[a] > self.hops[b] {
            a = self.parent[a] as usize;
            count += 1;
        }
        while self.hops[b] > self.hops[a] {
            b = self.parent[b] as usize;
            count += 1;
        }
        while a != b {
            a = self.parent[a] as usize;
            b = self.parent[b] as usize;
            count += 2;
        }
        Ok(count)
    }

    /// Exact tree distance, `hops / L_n`.
    pub fn geodesic_distance(&self, a: usize, b: usize) -> Result<BigRational> {
        let h = self.geodesic_hops(a, b)?;
        Ok(BigRational::new(BigInt::from(h), BigInt::from(self.scale)))
    }

    /// Vertices on the tree path from `a` to `b`, both included.
    pub fn geodesic_path(&self, a: usize, b: usize) -> Result<Vec<u32>> {
        self.check_vertex(a)?;
        self.check_vertex(b)?;
        let (mut a, mut b) = (a, b);
        let mut front = vec![a as u32];
        let mut back = vec![b as u32];
        while self.hops[a] > self.hops[b] {
            a = self.parent[a] as usize;
            front.push(a as u32);
        }
        while self.hops[b] > self.hops[a] {
            b = self.parent[b] as usize;
            back.push(b as u32);
        }
        while a != b {
            a = self.parent[a] as usize;
            b = self.parent[b] as usize;
            front.push(a as u32);
            back.push(b as u32);
        }
        back.pop();
        front.extend(back.into_iter().rev());
        Ok(front)
    }

    /// `#W_n / #W_k`: how many level-n cells share one level-k prefix.
    #[must_use]
    pub fn cells_per_prefix(&self, k: usize) -> usize {
        self.prefix[k..]
            .iter()
            .map(|&l| (2 * l - 1) as usize)
            .product()
    }

    /// Index of `[w]_k` for the level-n cell `w`.
    #[must_use]
    pub fn prefix_cell(&self, w: usize, k: usize) -> usize {
        w / self.cells_per_prefix(k)
    }

    pub fn check_invariants(&self) -> LevelInvariants {
        let cells = self.cells.len();
        let edge_lengths_ok = self.edges.iter().all(|e| {
            let a = self.coords[e.tail as usize];
            let b = self.coords[e.head as usize];
            let (dx, dy) = (a[0] - b[0], a[1] - b[1]);
            dx * dx + dy * dy == 2
        });
        let orientation_ok = self
            .edges
            .iter()
            .all(|e| self.hops[e.head as usize] == self.hops[e.tail as usize] + 1);
        LevelInvariants {
            vertex_count_ok: self.coords.len() == 4 * cells + 1,
            edge_count_ok: self.edges.len() == 4 * cells && self.edges.len() + 1 == self.coords.len(),
            connected: self.hops.iter().all(|&h| h != u32::MAX),
            edge_lengths_ok,
            orientation_ok,
            max_multiplicity: self.multiplicity.iter().copied().max().unwrap_or(0),
        }
    }

    /// JSON document: vertices as integer pairs, edges as `[tail, head, cell]`.
    pub fn to_json(&self) -> Result<String> {
        let doc = LevelJson {
            level: self.level,
            ratios: &self.prefix,
            scale: self.scale,
            vertices: &self.coords,
            edges: self.edges.iter().map(|e| [e.tail, e.head, e.cell]).collect(),
        };
        Ok(serde_json::to_string(&doc)?)
    }
}

/// `build_level` under the default cell budget.
pub fn build_level(ratios: &RatioSequence, n: usize) -> Result<VicsekLevel> {
    VicsekLevel::build(ratios, n)
}

/// Where a fine vertex sits relative to a coarser skeleton.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SkeletonPosition {
    /// It is a coarse vertex.
    Vertex(u32),
    /// Interior point of the coarse edge from the centre of `cell` towards corner `dir`,
    /// at `t / h` of the way.
    Edge { cell: usize, dir: u8, t: i64, h: i64 },
    /// In a branch hanging off the coarse skeleton.
    Hanging,
}

/// Levels `0..=depth` of one ratio sequence.
#[derive(Clone, Debug)]
pub struct Hierarchy {
    ratios: RatioSequence,
    levels: Vec<VicsekLevel>,
}

impl Hierarchy {
    pub fn build(ratios: &RatioSequence, depth: usize) -> Result<Self> {
        Self::build_with_budget(ratios, depth, DEFAULT_CELL_BUDGET)
    }

    pub fn build_with_budget(ratios: &RatioSequence, depth: usize, budget: u64) -> Result<Self> {
        // Refuse before allocating anything.
        let cells = ratios.cell_count(depth)?;
        if cells > BigInt::from(budget) {
            return Err(Error::Budget {
                level: depth,
                cells: cells.to_string(),
                budget,
            });
        }
        let levels = (0..=depth)
            .map(|n| VicsekLevel::build_with_budget(ratios, n, budget))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            ratios: ratios.clone(),
            levels,
        })
    }

    #[must_use]
    pub fn ratios(&self) -> &RatioSequence {
        &self.ratios
    }

    #[must_use]
    pub fn depth(&self) -> usize {
        self.levels.len() - 1
    }

    pub fn level(&self, n: usize) -> Result<&VicsekLevel> {
        self.levels.get(n).ok_or(Error::Depth {
            requested: n,
            available: self.depth(),
        })
    }

    /// The id at level `n` of vertex `v` of level `k <= n`.
    pub fn embed(&self, k: usize, v: u32, n: usize) -> Result<u32> {
        let coarse = self.level(k)?;
        let fine = self.level(n)?;
        if k > n {
            return Err(Error::ScaleOrder { fine: n, coarse: k });
        }
        coarse.check_vertex(v as usize)?;
        let f = fine.scale / coarse.scale;
        let [x, y] = coarse.coords[v as usize];
        fine.vertex_id([x * f, y * f])
            .ok_or_else(|| Error::arg("vertex missing after refinement"))
    }

    /// Locates fine vertex `v` (level `n`) against the skeleton of level `k <= n`.
    pub fn skeleton_position(&self, k: usize, n: usize, v: u32) -> Result<SkeletonPosition> {
        if k > n {
            return Err(Error::ScaleOrder { fine: n, coarse: k });
        }
        let coarse = self.level(k)?;
        let fine = self.level(n)?;
        fine.check_vertex(v as usize)?;
        let h = fine.scale / coarse.scale;
        let wc = fine.prefix_cell(fine.home_cell(v), k);
        let ids = coarse.cells[wc];
        let c = coarse.coords[ids[0] as usize];
        let p = fine.coords[v as usize];
        let (dx, dy) = (p[0] - c[0] * h, p[1] - c[1] * h);
        if dx.abs() != dy.abs() {
            return Ok(SkeletonPosition::Hanging);
        }
        if dx == 0 {
            return Ok(SkeletonPosition::Vertex(ids[0]));
        }
        let dir = DIRECTIONS
            .iter()
            .position(|&(sx, sy)| sx == dx.signum() && sy == dy.signum())
            .expect("nonzero diagonal offset") as u8
            + 1;
        let t = dx.abs();
        if t == h {
            return Ok(SkeletonPosition::Vertex(ids[usize::from(dir)]));
        }
        Ok(SkeletonPosition::Edge { cell: wc, dir, t, h })
    }

    /// The coarse edge (level `k`) whose segment contains fine edge `e` (level `n`), if any.
    pub fn coarse_edge_of(&self, k: usize, n: usize, e: usize) -> Result<Option<usize>> {
        let fine = self.level(n)?;
        let edge = fine
            .edges
            .get(e)
            .ok_or_else(|| Error::arg(format!("unknown edge {e}")))?;
        let coarse = self.level(k)?;
        let h = fine.scale / coarse.scale;
        let wc = fine.prefix_cell(edge.cell as usize, k);
        let c = coarse.coords[coarse.cells[wc][0] as usize];
        let mut dir = None;
        for v in [edge.tail, edge.head] {
            let p = fine.coords[v as usize];
            let (dx, dy) = (p[0] - c[0] * h, p[1] - c[1] * h);
            if dx.abs() != dy.abs() {
                return Ok(None);
            }
            if dx != 0 {
                let d = DIRECTIONS
                    .iter()
                    .position(|&(sx, sy)| sx == dx.signum() && sy == dy.signum())
                    .expect("nonzero diagonal offset");
                if dir.is_some_and(|prev| prev != d) {
                    return Ok(None);
                }
                dir = Some(d);
            }
        }
        Ok(dir.map(|d| 4 * wc + d))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ratios::Letter;

    #[test]
    fn small_levels() {
        let seq = RatioSequence::constant(3).unwrap();
        let l0 = build_level(&seq, 0).unwrap();
        assert_eq!((l0.vertex_count(), l0.edge_count()), (5, 4));
        assert_eq!(l0.coords()[0], [0, 0]);
        assert_eq!(&l0.coords()[1..], &[[1, 1], [-1, 1], [-1, -1], [1, -1]]);
        let l1 = build_level(&seq, 1).unwrap();
        assert_eq!((l1.vertex_count(), l1.edge_count()), (21, 20));
        let seq35 = RatioSequence::list(&[3, 5]).unwrap();
        let l2 = build_level(&seq35, 2).unwrap();
        assert_eq!((l2.vertex_count(), l2.edge_count()), (181, 180));
        assert!(l2.check_invariants().all_hold());
    }

    #[test]
    fn word_points() {
        let seq = RatioSequence::constant(3).unwrap();
        let p = point_of_word(&seq, &Word::root(), Corner::Center).unwrap();
        assert_eq!(p, LatticePoint::new(0, 0, 0));
        let w = Word::new(vec![Letter::Arm { dir: 1, step: 1 }]);
        assert_eq!(point_of_word(&seq, &w, Corner::Center).unwrap(), LatticePoint::new(2, 2, 1));
        let q1 = point_of_word(&seq, &Word::root(), Corner::Vertex(1)).unwrap();
        assert_eq!(q1, LatticePoint::new(1, 1, 0));
        assert!(Corner::from_index(5).is_err());
        assert!(point_of_word(&seq, &Word::root(), Corner::Vertex(7)).is_err());
    }

    #[test]
    fn open_ball_boundary() {
        let seq = RatioSequence::constant(3).unwrap();
        let a = LatticePoint::new(0, 0, 1);
        let b = LatticePoint::new(2, 2, 1);
        assert!(within_open_ball(&seq, &a, &a, 1).unwrap());
        assert!(!within_open_ball(&seq, &a, &b, 1).unwrap());
        assert!(within_open_ball(&seq, &a, &b, 0).unwrap());
        let c = LatticePoint::new(0, 0, 0);
        assert!(matches!(
            within_open_ball(&seq, &a, &c, 0),
            Err(Error::ScaleMismatch { .. })
        ));
        assert!(in_open_ball([0, 0], [2, 2], 1, 3));
        assert!(!in_open_ball([0, 0], [2, 2], 3, 3));
    }

    #[test]
    fn geodesics_at_level_zero() {
        let seq = RatioSequence::constant(3).unwrap();
        let l0 = build_level(&seq, 0).unwrap();
        assert!(l0.geodesic_distance(2, 2).unwrap().is_zero());
        assert_eq!(l0.geodesic_distance(0, 1).unwrap(), BigRational::from_integer(1.into()));
        assert_eq!(l0.geodesic_distance(1, 2).unwrap(), BigRational::from_integer(2.into()));
        assert_eq!(l0.geodesic_path(1, 3).unwrap(), vec![1, 0, 3]);
        assert!(matches!(l0.geodesic_distance(0, 9), Err(Error::UnknownVertex(9))));
    }

    #[test]
    fn budget_guard_names_cell_count() {
        let seq = RatioSequence::alternating(3, 5).unwrap();
        let err = Hierarchy::build(&seq, 12).unwrap_err();
        match err {
            Error::Budget { level, cells, .. } => {
                assert_eq!(level, 12);
                assert_eq!(cells, "8303765625");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn skeleton_positions() {
        let seq = RatioSequence::constant(3).unwrap();
        let h = Hierarchy::build(&seq, 1).unwrap();
        let l1 = h.level(1).unwrap();
        let v = l1.vertex_id([2, 2]).unwrap();
        assert_eq!(
            h.skeleton_position(0, 1, v).unwrap(),
            SkeletonPosition::Edge { cell: 0, dir: 1, t: 2, h: 3 }
        );
        let hanging = l1.vertex_id([1, 3]).unwrap();
        assert_eq!(h.skeleton_position(0, 1, hanging).unwrap(), SkeletonPosition::Hanging);
        let corner = l1.vertex_id([3, 3]).unwrap();
        assert_eq!(h.skeleton_position(0, 1, corner).unwrap(), SkeletonPosition::Vertex(1));
        assert_eq!(h.embed(0, 1, 1).unwrap(), corner);
    }
}
