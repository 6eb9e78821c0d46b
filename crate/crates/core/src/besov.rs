//! Ball-difference functionals, Besov-type seminorms, the scaled discrete
//! energies `E_n^beta`, their sums, and the BBM limit experiment.

use std::collections::{BTreeMap, HashMap};

use num_bigint::BigInt;
use num_rational::BigRational;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::affine::AffineFunction;
use crate::energy::discrete_energy;
use crate::error::{Error, Result};
use crate::geometry::{in_open_ball, Hierarchy, VicsekLevel};
use crate::measure::{derived_constants, scale_values};
use crate::num::{abs_pow, ordered_sum, par_sum, Compensated, NodeValues, Scalar};
use crate::ratios::RatioSequence;

/// `1 / #V_m` for each vertex of the level.
#[must_use]
pub fn vertex_measure_weights(level: &VicsekLevel) -> Vec<BigRational> {
    let n = level.vertex_count();
    vec![BigRational::new(BigInt::from(1), BigInt::from(n)); n]
}

/// Per-vertex sums over an open ball.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BallSums {
    pub vertex_level: usize,
    pub scale_index: usize,
    /// `I_{m,n}(u) = #V_m^{-2} sum_x sum_{d(x,y) < rho_n} |u(x) - u(y)|^p`.
    pub ball_energy: f64,
    /// `#V_m^{-1} sum_x (sum_{y in B(x)} |u(x) - u(y)|^p) / #B(x)`.
    pub mean_energy: f64,
    /// Smallest and largest `#B(x) / (#V_m psi(rho_n))`.
    pub ball_mass_range: (f64, f64),
    pub pairs: u64,
}

/// Centre offsets, in level-n units, of every level-n cell that can hold a point
/// closer than `rho_n` to a point of a given cell.
const NEAR_OFFSETS: [[i64; 2]; 21] = {
    let mut out = [[0i64; 2]; 21];
    let mut k = 0;
    let mut i = 0;
    while i < 5 {
        let mut j = 0;
        while j < 5 {
            let (dx, dy) = (2 * i as i64 - 4, 2 * j as i64 - 4);
            if !(dx.abs() == 4 && dy.abs() == 4) {
                out[k] = [dx, dy];
                k += 1;
            }
            j += 1;
        }
        i += 1;
    }
    out
};

fn check_levels(m: usize, n: usize) -> Result<()> {
    if m < n {
        Err(Error::ScaleOrder { fine: m, coarse: n })
    } else {
        Ok(())
    }
}

struct PerVertex {
    sum: f64,
    count: u64,
}

fn finish(h: &Hierarchy, m: usize, n: usize, rows: &[PerVertex]) -> Result<BallSums> {
    let v = rows.len() as f64;
    let total = par_sum(rows.len(), |i| rows[i].sum);
    let mean = par_sum(rows.len(), |i| rows[i].sum / rows[i].count as f64);
    let psi = scale_values(h.ratios(), n)?.psi.value.to_f64();
    let (lo, hi) = rows.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), r| {
        let q = r.count as f64 / (v * psi);
        (lo.min(q), hi.max(q))
    });
    Ok(BallSums {
        vertex_level: m,
        scale_index: n,
        ball_energy: total / (v * v),
        mean_energy: mean / v,
        ball_mass_range: (lo, hi),
        pairs: rows.iter().map(|r| r.count).sum(),
    })
}

/// Open-ball pair sums with candidates drawn from the 21 nearby level-n cells.
/// Every `x` sums its `y`s in increasing id order, as the plain double loop does.
pub fn ball_energy(h: &Hierarchy, m: usize, n: usize, values: &NodeValues) -> Result<BallSums> {
    check_levels(m, n)?;
    let fine = h.level(m)?;
    let coarse = h.level(n)?;
    if values.len() != fine.vertex_count() {
        return Err(Error::arg("value count does not match the vertex level"));
    }
    let p = h.ratios().p().value();
    let vals = values.to_f64_vec();
    let coords = fine.coords();
    let (ln, lm) = (coarse.scale(), fine.scale());

    let centre_of = |w: usize| coarse.coords()[coarse.cell(w)[0] as usize];
    let index: HashMap<[i64; 2], usize> = (0..coarse.cell_count()).map(|w| (centre_of(w), w)).collect();
    let home: Vec<usize> = (0..fine.vertex_count() as u32)
        .map(|v| fine.prefix_cell(fine.home_cell(v), n))
        .collect();
    let mut start = vec![0usize; coarse.cell_count() + 1];
    for &c in &home {
        start[c + 1] += 1;
    }
    for i in 0..coarse.cell_count() {
        start[i + 1] += start[i];
    }
    let mut bucket = vec![0u32; home.len()];
    let mut fill = start.clone();
    for (v, &c) in home.iter().enumerate() {
        bucket[fill[c]] = v as u32;
        fill[c] += 1;
    }

    let rows: Vec<PerVertex> = (0..fine.vertex_count())
        .into_par_iter()
        .map_init(Vec::new, |near: &mut Vec<u32>, x| {
            near.clear();
            let [cx, cy] = centre_of(home[x]);
            for [dx, dy] in NEAR_OFFSETS {
                if let Some(&w) = index.get(&[cx + dx, cy + dy]) {
                    for &y in &bucket[start[w]..start[w + 1]] {
                        if in_open_ball(coords[x], coords[y as usize], ln, lm) {
                            near.push(y);
                        }
                    }
                }
            }
            near.sort_unstable();
            let mut acc = Compensated::default();
            for &y in near.iter() {
                acc.add(abs_pow(vals[x] - vals[y as usize], p));
            }
            PerVertex {
                sum: acc.value(),
                count: near.len() as u64,
            }
        })
        .collect();
    finish(h, m, n, &rows)
}

/// The plain `O(#V_m^2)` double loop.
pub fn ball_energy_bruteforce(h: &Hierarchy, m: usize, n: usize, values: &NodeValues) -> Result<BallSums> {
    check_levels(m, n)?;
    let fine = h.level(m)?;
    let coarse = h.level(n)?;
    if values.len() != fine.vertex_count() {
        return Err(Error::arg("value count does not match the vertex level"));
    }
    let p = h.ratios().p().value();
    let vals = values.to_f64_vec();
    let coords = fine.coords();
    let (ln, lm) = (coarse.scale(), fine.scale());
    let rows: Vec<PerVertex> = (0..fine.vertex_count())
        .into_par_iter()
        .map(|x| {
            let mut acc = Compensated::default();
            let mut count = 0u64;
            for y in 0..coords.len() {
                if in_open_ball(coords[x], coords[y], ln, lm) {
                    acc.add(abs_pow(vals[x] - vals[y], p));
                    count += 1;
                }
            }
            PerVertex { sum: acc.value(), count }
        })
        .collect();
    finish(h, m, n, &rows)
}

/// Vertex level used for scale `n`: `min(m, n + (m - big_n))`, so every scale
/// keeps the same number of refinements below it.
#[must_use]
pub fn vertex_level_for(n: usize, m: usize, big_n: usize) -> usize {
    m.min(n + (m - big_n))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ProfileRow {
    pub n: usize,
    pub vertex_level: usize,
    pub ln_phi: f64,
    pub psi: f64,
    pub ball_energy: f64,
    /// `phi(rho_n)^{-beta/beta*} psi(rho_n)^{-1} I_{m,n}(u)`.
    pub proxy: f64,
    /// The same with each ball average taken over the counted ball.
    pub mean: f64,
    pub ball_mass_range: (f64, f64),
    /// `E_n^beta`.
    pub energy: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BesovProfile {
    pub p: f64,
    pub beta: f64,
    pub beta_star: f64,
    pub vertex_level: usize,
    pub depth: usize,
    pub rows: Vec<ProfileRow>,
}

/// `phi(rho_n)^{1 - beta/beta*}`, from the logarithm so that the factor is 1 at `beta = beta*`.
#[must_use]
pub fn energy_factor(ln_phi: f64, beta: f64, beta_star: f64) -> f64 {
    ((1.0 - beta / beta_star) * ln_phi).exp()
}

fn check_beta(beta: f64) -> Result<()> {
    if beta.is_finite() && beta > 0.0 {
        Ok(())
    } else {
        Err(Error::arg(format!("beta must be positive, got {beta}")))
    }
}

/// Ball functional estimators and `E_n^beta` for `n = 0..=big_n`, with vertices
/// of level `vertex_level_for(n, m, big_n)` at scale `n`.
pub fn phi_profile(u: &AffineFunction, h: &Hierarchy, beta: f64, m: usize, big_n: usize) -> Result<BesovProfile> {
    check_beta(beta)?;
    check_levels(m, big_n)?;
    let ratios = h.ratios();
    let beta_star = ratios.beta_star();
    let p = ratios.p();
    let mut rows = Vec::with_capacity(big_n + 1);
    for n in 0..=big_n {
        let vl = vertex_level_for(n, m, big_n);
        let vals = u.sample(h, vl)?;
        let sums = ball_energy(h, vl, n, &vals)?;
        let scale = scale_values(ratios, n)?;
        let psi = scale.psi.value.to_f64();
        let weight = (-beta / beta_star * scale.phi.ln).exp();
        let e = discrete_energy(h.level(n)?, &u.sample(h, n)?, p, None)?.to_f64();
        rows.push(ProfileRow {
            n,
            vertex_level: vl,
            ln_phi: scale.phi.ln,
            psi,
            ball_energy: sums.ball_energy,
            proxy: weight * sums.ball_energy / psi,
            mean: weight * sums.mean_energy,
            ball_mass_range: sums.ball_mass_range,
            energy: energy_factor(scale.phi.ln, beta, beta_star) * e,
        });
    }
    Ok(BesovProfile {
        p: p.value(),
        beta,
        beta_star,
        vertex_level: m,
        depth: big_n,
        rows,
    })
}

/// Exponent `q` of a Besov seminorm.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Summability {
    Finite(f64),
    Infinity,
}

/// `(sum_n proxy_n^{q/p} ln l_{n+1})^{1/q}`, or `max_n proxy_n^{1/p}` for `q = inf`.
pub fn besov_seminorm(profile: &BesovProfile, ratios: &RatioSequence, q: Summability) -> Result<f64> {
    let p = profile.p;
    match q {
        Summability::Infinity => Ok(profile.rows.iter().map(|r| r.proxy.powf(1.0 / p)).fold(0.0, f64::max)),
        Summability::Finite(q) => {
            if !(q > 1.0 && q.is_finite()) {
                return Err(Error::arg(format!("q must be > 1, got {q}")));
            }
            let terms = profile
                .rows
                .iter()
                .map(|r| Ok(r.proxy.powf(q / p) * f64::from(ratios.ratio(r.n + 1)?).ln()))
                .collect::<Result<Vec<_>>>()?;
            Ok(ordered_sum(terms).powf(1.0 / q))
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Tail {
    Plateau,
    None,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DiscreteProfiles {
    pub beta: f64,
    /// `E_n^beta`, `n = 0..=N`.
    pub energies: Vec<f64>,
    /// The same at `beta*`, i.e. `E_{p,n}`.
    pub base: Vec<Scalar>,
    pub sup: f64,
    pub partial_sum: f64,
    pub tail: Option<f64>,
    /// `E_{p,p}^beta`: partial sum plus tail.
    pub sum: f64,
}

/// Terms of `sum_{n > N} phi(rho_n)^delta`, stopping once they no longer move the sum.
pub fn plateau_tail(ratios: &RatioSequence, big_n: usize, delta: f64, cap: usize) -> Result<f64> {
    if delta <= 0.0 {
        return Err(Error::arg("the tail only converges for beta < beta*"));
    }
    let p = ratios.p().value();
    let mut ln_phi = scale_values(ratios, big_n)?.phi.ln;
    let mut acc = Compensated::default();
    for k in big_n + 1..=big_n + cap {
        let l = f64::from(ratios.ratio(k)?);
        ln_phi -= (p - 1.0) * l.ln() + (2.0 * l - 1.0).ln();
        let term = (delta * ln_phi).exp();
        let before = acc.value();
        acc.add(term);
        if acc.value() == before {
            return Ok(acc.value());
        }
    }
    Err(Error::Convergence {
        residual: (delta * ln_phi).exp(),
        iterations: cap,
    })
}

const TAIL_CAP: usize = 100_000_000;

/// `E_n^beta` for `n <= N`, their sup and sum; with `Tail::Plateau` the sum runs to
/// infinity using `E_n^{beta*} = E_p(u)` for `n > N`.
pub fn discrete_profiles(u: &AffineFunction, h: &Hierarchy, beta: f64, big_n: usize, tail: Tail) -> Result<DiscreteProfiles> {
    check_beta(beta)?;
    let ratios = h.ratios();
    let beta_star = ratios.beta_star();
    let p = ratios.p();
    let mut energies = Vec::with_capacity(big_n + 1);
    let mut base = Vec::with_capacity(big_n + 1);
    for n in 0..=big_n {
        let e = discrete_energy(h.level(n)?, &u.sample(h, n)?, p, None)?;
        let ln_phi = scale_values(ratios, n)?.phi.ln;
        energies.push(energy_factor(ln_phi, beta, beta_star) * e.to_f64());
        base.push(e);
    }
    let partial_sum = ordered_sum(energies.iter().copied());
    let tail = match tail {
        Tail::None => None,
        Tail::Plateau => {
            if big_n < u.base_level() {
                return Err(Error::arg("the plateau tail needs N >= the base level"));
            }
            let plateau = base[big_n].to_f64();
            if plateau == 0.0 {
                Some(0.0)
            } else {
                Some(plateau * plateau_tail(ratios, big_n, 1.0 - beta / beta_star, TAIL_CAP)?)
            }
        }
    };
    Ok(DiscreteProfiles {
        beta,
        sup: energies.iter().copied().fold(0.0, f64::max),
        sum: partial_sum + tail.unwrap_or(0.0),
        partial_sum,
        tail,
        energies,
        base,
    })
}

/// `sum_{n<=N} sum_{x ~_n y} phi(rho_n)^{1-beta/beta*} L_n^{p-1} |u(x) - u(y)|^p`
/// as one weighted sum over vertex pairs of `V_N`.
pub fn jump_kernel_energy(u: &AffineFunction, h: &Hierarchy, beta: f64, big_n: usize) -> Result<Scalar> {
    check_beta(beta)?;
    let ratios = h.ratios();
    let beta_star = ratios.beta_star();
    let p = ratios.p();
    let exact = beta == beta_star && p.integer().is_some();
    let mut kernel: BTreeMap<(u32, u32), Scalar> = BTreeMap::new();
    for n in 0..=big_n {
        let level = h.level(n)?;
        let w = if exact {
            Scalar::Exact(BigRational::from_integer(BigInt::from(level.scale()).pow(p.integer().unwrap() - 1)))
        } else {
            let ln_phi = scale_values(ratios, n)?.phi.ln;
            Scalar::Float(energy_factor(ln_phi, beta, beta_star) * (level.scale() as f64).powf(p.value() - 1.0))
        };
        for e in level.edges() {
            let a = h.embed(n, e.tail, big_n)?;
            let b = h.embed(n, e.head, big_n)?;
            let key = (a.min(b), a.max(b));
            let entry = kernel.entry(key).or_insert_with(Scalar::zero);
            *entry = &*entry + &w;
        }
    }
    let vals = u.sample(h, big_n)?;
    let vals = if exact { vals } else { vals.to_float() };
    let k = p.integer();
    let mut exact_sum = Scalar::zero();
    let mut float_sum = Compensated::default();
    for ((a, b), w) in &kernel {
        let d = &vals.get(*a as usize) - &vals.get(*b as usize);
        match (&d, k, exact) {
            (Scalar::Exact(r), Some(k), true) => {
                exact_sum = &exact_sum + &(w * &Scalar::Exact(crate::measure::pow(&num_traits::Signed::abs(r), k)));
            }
            _ => float_sum.add(w.to_f64() * abs_pow(d.to_f64(), p.value())),
        }
    }
    Ok(if exact { exact_sum } else { Scalar::Float(float_sum.value()) })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BbmRow {
    pub epsilon: f64,
    pub beta: f64,
    /// `(beta* - beta) E_{p,p}^beta`.
    pub value: f64,
    /// Bounds at this `epsilon` from the geometric tail of `phi`.
    pub finite_bracket: (f64, f64),
    pub inside: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BbmCurve {
    pub energy: f64,
    /// `[E beta*/log sup t, E beta*/log inf t]`.
    pub limit_bracket: (f64, f64),
    pub rows: Vec<BbmRow>,
    pub monotone: bool,
}

/// `(beta* - beta) E_{p,p}^beta` at `beta = beta* - epsilon` with the limit bracket.
pub fn bbm_curve(u: &AffineFunction, h: &Hierarchy, epsilons: &[f64], big_n: usize, tail: Tail) -> Result<BbmCurve> {
    let ratios = h.ratios();
    let beta_star = ratios.beta_star();
    let consts = derived_constants(ratios)?;
    let energy = discrete_energy(h.level(big_n)?, &u.sample(h, big_n)?, ratios.p(), None)?.to_f64();
    let limit_bracket = (energy * beta_star / consts.sup_t.ln(), energy * beta_star / consts.inf_t.ln());
    let n0 = u.base_level();
    let mut rows = Vec::with_capacity(epsilons.len());
    for &eps in epsilons {
        if !(eps > 0.0 && eps < beta_star) {
            return Err(Error::arg(format!("epsilon must lie in (0, beta*), got {eps}")));
        }
        if tail == Tail::None && eps * big_n as f64 <= 1.0 {
            return Err(Error::arg(format!(
                "epsilon = {eps} needs the plateau tail at N = {big_n}: the truncation dominates"
            )));
        }
        let beta = beta_star - eps;
        let prof = discrete_profiles(u, h, beta, big_n.max(n0), tail)?;
        let value = eps * prof.sum;
        let delta = eps / beta_star;
        let head = ordered_sum(prof.energies[..n0].iter().copied());
        let phi0 = energy_factor(scale_values(ratios, n0)?.phi.ln, beta, beta_star);
        let lo = eps * (head + energy * phi0 / (1.0 - consts.sup_t.powf(-delta)));
        let hi = eps * (head + energy * phi0 / (1.0 - consts.inf_t.powf(-delta)));
        let slack = 1e-9 * hi;
        rows.push(BbmRow {
            epsilon: eps,
            beta,
            value,
            finite_bracket: (lo, hi),
            inside: tail == Tail::None || (value >= lo - slack && value <= hi + slack),
        });
    }
    let mut by_eps: Vec<&BbmRow> = rows.iter().collect();
    by_eps.sort_by(|a, b| a.epsilon.total_cmp(&b.epsilon));
    let monotone = by_eps.windows(2).all(|w| w[0].value <= w[1].value);
    Ok(BbmCurve {
        energy,
        limit_bracket,
        rows,
        monotone,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Trend {
    Divergent,
    Plateau,
    Vanishing,
    Mixed,
    Zero,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    pub beta: f64,
    pub energies: Vec<f64>,
    /// `E_{n+1}^beta / E_n^beta` for `n >= n0`.
    pub growth: Vec<f64>,
    pub trend: Trend,
}

/// `E_n^beta` trends over a grid of `beta`.
pub fn critical_sweep(u: &AffineFunction, h: &Hierarchy, betas: &[f64], big_n: usize) -> Result<Vec<SweepRow>> {
    let n0 = u.base_level();
    betas
        .iter()
        .map(|&beta| {
            let prof = discrete_profiles(u, h, beta, big_n, Tail::None)?;
            let e = &prof.energies;
            let growth: Vec<f64> = (n0..big_n).map(|n| e[n + 1] / e[n]).collect();
            let trend = if e.iter().all(|&x| x == 0.0) {
                Trend::Zero
            } else if growth.iter().all(|&g| g > 1.0) {
                Trend::Divergent
            } else if growth.iter().all(|&g| g == 1.0) {
                Trend::Plateau
            } else if growth.iter().all(|&g| g < 1.0) {
                Trend::Vanishing
            } else {
                Trend::Mixed
            };
            Ok(SweepRow {
                beta,
                energies: prof.energies,
                growth,
                trend,
            })
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WeakMonotonicity {
    pub sup: f64,
    pub window_min: f64,
    /// `sup_n proxy / min_window proxy`; `None` when the function is constant.
    pub ratio: Option<f64>,
}

/// `sup_{n<=N} proxy(rho_n) / min_{n in window} proxy(rho_n)` at `beta = beta*`.
pub fn weak_monotonicity_report(
    u: &AffineFunction,
    h: &Hierarchy,
    m: usize,
    big_n: usize,
    window: (usize, usize),
) -> Result<WeakMonotonicity> {
    let (lo, hi) = window;
    if lo > hi || lo < 1 || hi > big_n {
        return Err(Error::arg(format!("window [{lo}, {hi}] must lie inside [1, {big_n}]")));
    }
    let prof = phi_profile(u, h, h.ratios().beta_star(), m, big_n)?;
    let sup = prof.rows.iter().map(|r| r.proxy).fold(0.0, f64::max);
    let window_min = prof.rows[lo..=hi].iter().map(|r| r.proxy).fold(f64::INFINITY, f64::min);
    Ok(WeakMonotonicity {
        sup,
        window_min,
        ratio: (window_min > 0.0).then(|| sup / window_min),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BandRow {
    pub n: usize,
    /// `proxy_n / sup_{n<=k<=N} E_k^beta`.
    pub proxy_over_energy: f64,
    /// `E_n^beta / sup_{n<=k<=N} proxy_k`.
    pub energy_over_proxy: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EquivalenceBands {
    pub beta: f64,
    pub rows: Vec<BandRow>,
    pub proxy_band: (f64, f64),
    pub energy_band: (f64, f64),
}

/// The two comparison ratios for `n` in `[1, N-2]`.
#[must_use]
pub fn equivalence_bands(profile: &BesovProfile) -> EquivalenceBands {
    let rows_in = &profile.rows;
    let big_n = profile.depth;
    let mut rows = Vec::new();
    for n in 1..big_n.saturating_sub(1) {
        let sup_e = rows_in[n..].iter().map(|r| r.energy).fold(0.0, f64::max);
        let sup_p = rows_in[n..].iter().map(|r| r.proxy).fold(0.0, f64::max);
        rows.push(BandRow {
            n,
            proxy_over_energy: rows_in[n].proxy / sup_e,
            energy_over_proxy: rows_in[n].energy / sup_p,
        });
    }
    let band = |f: fn(&BandRow) -> f64| {
        rows.iter()
            .map(f)
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| (lo.min(x), hi.max(x)))
    };
    EquivalenceBands {
        beta: profile.beta,
        proxy_band: band(|r| r.proxy_over_energy),
        energy_band: band(|r| r.energy_over_proxy),
        rows,
    }
}

/// The grid `{beta*, 1.05 eps_p beta*, 0.9 beta*, 1.1 beta*}` restricted to `(eps_p beta*, inf)`.
pub fn equivalence_betas(ratios: &RatioSequence) -> Result<Vec<f64>> {
    let b = ratios.beta_star();
    let eps = derived_constants(ratios)?.epsilon_p;
    Ok([b, 1.05 * eps * b, 0.9 * b, 1.1 * b]
        .into_iter()
        .filter(|&x| x > eps * b)
        .collect())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TailBracket {
    pub n: usize,
    pub delta: f64,
    pub partial: f64,
    pub lower: f64,
    pub upper: f64,
    /// Upper bound on the terms past `N`.
    pub remainder: f64,
    pub holds: bool,
}

/// `sum_{k=n}^{N} phi(rho_k)^delta` against
/// `[phi(rho_n)^delta / (1 - sup t^{-delta}), phi(rho_n)^delta / (1 - inf t^{-delta})]`.
pub fn tail_bracket(ratios: &RatioSequence, n: usize, big_n: usize, delta: f64) -> Result<TailBracket> {
    if delta <= 0.0 {
        return Err(Error::arg("delta must be positive"));
    }
    if n > big_n {
        return Err(Error::ScaleOrder { fine: big_n, coarse: n });
    }
    let consts = derived_constants(ratios)?;
    let ln = |k: usize| scale_values(ratios, k).map(|r| r.phi.ln);
    let partial = ordered_sum((n..=big_n).map(|k| ln(k).map(|x| (delta * x).exp())).collect::<Result<Vec<_>>>()?);
    let head = (delta * ln(n)?).exp();
    let lower = head / (1.0 - consts.sup_t.powf(-delta));
    let upper = head / (1.0 - consts.inf_t.powf(-delta));
    let remainder = (delta * ln(big_n + 1)?).exp() / (1.0 - consts.inf_t.powf(-delta));
    let slack = 1e-12 * upper;
    Ok(TailBracket {
        n,
        delta,
        partial,
        lower,
        upper,
        remainder,
        holds: partial <= upper + slack && partial + remainder >= lower - slack,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::num::rational;

    fn h3(depth: usize) -> Hierarchy {
        Hierarchy::build(&RatioSequence::constant(3).unwrap(), depth).unwrap()
    }

    #[test]
    fn weights() {
        let h = h3(1);
        assert_eq!(vertex_measure_weights(h.level(0).unwrap())[0], rational(1, 5));
        let w = vertex_measure_weights(h.level(1).unwrap());
        assert_eq!(w.len(), 21);
        assert_eq!(w.iter().fold(rational(0, 1), |a, b| a + b), rational(1, 1));
    }

    #[test]
    fn offsets_are_the_near_cells() {
        assert_eq!(NEAR_OFFSETS.len(), 21);
        assert!(NEAR_OFFSETS.contains(&[4, 2]) && !NEAR_OFFSETS.contains(&[4, 4]));
    }

    #[test]
    fn indexed_equals_bruteforce() {
        let h = h3(3);
        let u = AffineFunction::diagonal_ramp();
        for m in 0..=3 {
            let vals = u.evaluate_all(&h, m).unwrap();
            for n in 0..=m {
                let a = ball_energy(&h, m, n, &vals).unwrap();
                let b = ball_energy_bruteforce(&h, m, n, &vals).unwrap();
                assert_eq!(a, b, "m = {m}, n = {n}");
            }
        }
    }

    #[test]
    fn bbm_closed_form() {
        let h = h3(2);
        let u = AffineFunction::diagonal_ramp();
        let curve = bbm_curve(&u, &h, &[0.01], 2, Tail::Plateau).unwrap();
        let e: f64 = 0.01;
        let closed = e * 2f64.powf(e - 1.0) / (1.0 - 15f64.powf(-e));
        assert!((curve.rows[0].value - closed).abs() < 1e-9);
        assert!(curve.rows[0].inside);
    }

    #[test]
    fn kernel_matches_partial_sum() {
        let h = h3(4);
        let u = AffineFunction::diagonal_ramp();
        assert_eq!(jump_kernel_energy(&u, &h, 1.0, 4).unwrap(), Scalar::Exact(rational(5, 2)));
    }
}
