//! The canonical measure, the scale functions and ball-measure brackets.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::LatticePoint;
use crate::num::{ratio_to_f64, Scalar};
use crate::ratios::{enumerate_letters, RatioSequence, Word};

/// A scale quantity with its natural logarithm (useful once the value underflows).
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScaleValue {
    pub value: Scalar,
    pub ln: f64,
}

/// `(rho_n, psi(rho_n), phi(rho_n))`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScaleRow {
    pub n: usize,
    pub rho: ScaleValue,
    pub psi: ScaleValue,
    pub phi: ScaleValue,
}

/// `rho_n = 2 / L_n`, `psi(rho_n) = 1 / #W_n` and `phi(rho_n) = rho_n^{p-1} psi(rho_n)`.
pub fn scale_values(ratios: &RatioSequence, n: usize) -> Result<ScaleRow> {
    let prefix = ratios.prefix(n)?;
    let ln_rho = std::f64::consts::LN_2 - prefix.iter().map(|&l| f64::from(l).ln()).sum::<f64>();
    let ln_psi = -prefix.iter().map(|&l| f64::from(2 * l - 1).ln()).sum::<f64>();
    let rho = BigRational::new(BigInt::from(2), ratios.scale(n)?);
    let psi = BigRational::new(BigInt::one(), ratios.cell_count(n)?);
    let p = ratios.p();
    let ln_phi = (p.value() - 1.0) * ln_rho + ln_psi;
    let phi = match p.integer_minus_one() {
        Some(k) => Scalar::Exact(pow(&rho, k) * &psi),
        None => Scalar::Float(ln_phi.exp()),
    };
    Ok(ScaleRow {
        n,
        rho: ScaleValue {
            value: Scalar::Exact(rho),
            ln: ln_rho,
        },
        psi: ScaleValue {
            value: Scalar::Exact(psi),
            ln: ln_psi,
        },
        phi: ScaleValue {
            value: phi,
            ln: ln_phi,
        },
    })
}

/// Rows `0..=n` of [`scale_values`].
pub fn scale_table(ratios: &RatioSequence, n: usize) -> Result<Vec<ScaleRow>> {
    (0..=n).map(|k| scale_values(ratios, k)).collect()
}

pub(crate) fn pow(r: &BigRational, k: u32) -> BigRational {
    let mut out = BigRational::one();
    for _ in 0..k {
        out *= r;
    }
    out
}

/// `mu(K_w) = 1 / #W_m` for a word of level `m`.
pub fn mu_cell(ratios: &RatioSequence, word: &Word) -> Result<BigRational> {
    word.validate(ratios)?;
    Ok(BigRational::new(BigInt::one(), ratios.cell_count(word.level())?))
}

/// The level `n` with `rho_{n+1} < r <= rho_n`, or `None` when `r >= 2`.
pub fn scale_band(ratios: &RatioSequence, r: &BigRational) -> Result<Option<usize>> {
    if !r.is_positive() {
        return Err(Error::InvalidRadius);
    }
    let two = BigRational::from_integer(BigInt::from(2));
    if *r >= two {
        return Ok(None);
    }
    let mut n = 0usize;
    let mut scale = BigInt::one();
    loop {
        let next = &scale * ratios.ratio(n + 1)?;
        // r <= rho_{n+1}  <=>  r * L_{n+1} <= 2
        if r * BigRational::from_integer(next.clone()) <= two {
            n += 1;
            scale = next;
        } else {
            return Ok(Some(n));
        }
    }
}

/// `psi(r)`: `1` for `r >= 2`, otherwise `psi(rho_n)` on `(rho_{n+1}, rho_n]`.
pub fn psi(ratios: &RatioSequence, r: &BigRational) -> Result<BigRational> {
    Ok(match scale_band(ratios, r)? {
        None => BigRational::one(),
        Some(n) => BigRational::new(BigInt::one(), ratios.cell_count(n)?),
    })
}

/// `(psi~(r), phi~(r))`, the piecewise-linear increasing versions of the scale functions.
pub fn regularized_scales(ratios: &RatioSequence, r: &BigRational) -> Result<(Scalar, Scalar)> {
    let psi_tilde = match scale_band(ratios, r)? {
        None => r / BigRational::from_integer(BigInt::from(2)),
        Some(n) => {
            let hi = scale_values(ratios, n)?;
            let lo = scale_values(ratios, n + 1)?;
            let (rho_hi, psi_hi) = (hi.rho.value.exact().unwrap().clone(), hi.psi.value.exact().unwrap().clone());
            let (rho_lo, psi_lo) = (lo.rho.value.exact().unwrap().clone(), lo.psi.value.exact().unwrap().clone());
            &psi_lo + (&psi_hi - &psi_lo) * (r - &rho_lo) / (rho_hi - &rho_lo)
        }
    };
    let p = ratios.p();
    let phi_tilde = match p.integer_minus_one() {
        Some(k) => Scalar::Exact(pow(r, k) * &psi_tilde),
        None => Scalar::Float(ratio_to_f64(r).powf(p.value() - 1.0) * ratio_to_f64(&psi_tilde)),
    };
    Ok((Scalar::Exact(psi_tilde), phi_tilde))
}

/// Bracket of `mu(B(center, r))`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BallBounds {
    pub lower: Scalar,
    pub upper: Scalar,
    /// Cells of the finest level still crossing the sphere.
    pub straddling: u64,
}

/// Brackets `mu(B(center, r))` by classifying cells down to level `depth` as
/// inside, outside or straddling; only straddling cells are refined.
pub fn mu_ball_bounds(
    ratios: &RatioSequence,
    center: &LatticePoint,
    r: &BigRational,
    depth: usize,
) -> Result<BallBounds> {
    if !r.is_positive() {
        return Err(Error::InvalidRadius);
    }
    let s = depth.max(center.scale);
    let center = center.rescaled(ratios, s)?;
    let ls = ratios.scale(s)?;
    // d^2 < r^2  <=>  Q * den^2 < 2 L_s^2 num^2, with Q the scaled squared distance.
    let threshold = BigInt::from(2) * &ls * &ls * r.numer() * r.numer();
    let den2 = r.denom() * r.denom();
    let prefix = ratios.prefix(depth)?;
    let alphabets = prefix
        .iter()
        .map(|&l| enumerate_letters(u64::from(l)))
        .collect::<Result<Vec<_>>>()?;
    let masses = (0..=depth)
        .map(|k| ratios.cell_count(k).map(|c| BigRational::new(BigInt::one(), c)))
        .collect::<Result<Vec<_>>>()?;

    struct Walk<'a> {
        px: BigInt,
        py: BigInt,
        threshold: BigInt,
        den2: BigInt,
        ls: BigInt,
        ratios: &'a RatioSequence,
        alphabets: Vec<Vec<crate::ratios::Letter>>,
        masses: Vec<BigRational>,
        depth: usize,
        inside: BigRational,
        straddle: BigRational,
        straddling: u64,
    }

    impl Walk<'_> {
        fn visit(&mut self, k: usize, cx: &BigInt, cy: &BigInt, lk: &BigInt) -> Result<()> {
            let half = &self.ls / lk;
            let (x, y) = (cx * &half, cy * &half);
            let dx = (&x - &self.px).abs();
            let dy = (&y - &self.py).abs();
            let gx = (&dx - &half).max(BigInt::zero());
            let gy = (&dy - &half).max(BigInt::zero());
            let near = (&gx * &gx + &gy * &gy) * &self.den2;
            if near >= self.threshold {
                return Ok(());
            }
            let fx = &dx + &half;
            let fy = &dy + &half;
            let far = (&fx * &fx + &fy * &fy) * &self.den2;
            if far < self.threshold {
                self.inside += &self.masses[k];
                return Ok(());
            }
            if k == self.depth {
                self.straddle += &self.masses[k];
                self.straddling += 1;
                return Ok(());
            }
            let l = self.ratios.ratio(k + 1)?;
            let next_l = lk * l;
            let letters = self.alphabets[k].clone();
            for a in letters {
                let (ox, oy) = a.offset();
                self.visit(k + 1, &(cx * l + ox), &(cy * l + oy), &next_l)?;
            }
            Ok(())
        }
    }

    let mut walk = Walk {
        px: center.x.clone(),
        py: center.y.clone(),
        threshold,
        den2,
        ls,
        ratios,
        alphabets,
        masses,
        depth,
        inside: BigRational::zero(),
        straddle: BigRational::zero(),
        straddling: 0,
    };
    walk.visit(0, &BigInt::zero(), &BigInt::zero(), &BigInt::one())?;
    let upper = &walk.inside + &walk.straddle;
    Ok(BallBounds {
        lower: Scalar::Exact(walk.inside),
        upper: Scalar::Exact(upper),
        straddling: walk.straddling,
    })
}

/// Number of cell positions (centre offsets on the even lattice) whose squares come
/// closer than one cell diameter to a given cell square. Any ball of radius at most
/// `rho_m` around a point of a level-m cell is covered by these cells.
pub const NEAR_CELL_OFFSETS: u32 = 21;

/// One sampled doubling comparison.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DoublingSample {
    pub r: f64,
    pub band: usize,
    pub ball: BallBounds,
    pub double_ball: BallBounds,
    /// `upper(2r) / lower(r)`, an upper bound of the true doubling ratio.
    pub ratio_bound: f64,
    /// `21 (2 l_m - 1)(2 l_{m+1} - 1)(2 l_{m+2} - 1)`.
    pub theoretical: f64,
    /// `upper(r) >= psi(rho_{m+2})`: the ball holds a level-(m+2) cell.
    pub contains_small_cell: bool,
    /// `lower(r) <= 21 psi(rho_m)`: the near-cell cover bounds the ball.
    pub covered: bool,
    /// `upper(r) / psi(rho_m)`, for reporting.
    pub cover_ratio: f64,
}

impl DoublingSample {
    #[must_use]
    pub fn holds(&self) -> bool {
        self.ratio_bound <= self.theoretical && self.contains_small_cell && self.covered
    }
}

/// Doubling diagnostics for `B(x, r)` against `B(x, 2r)`, with `0 < r <= 1`.
pub fn doubling_sample(ratios: &RatioSequence, x: &LatticePoint, r: &BigRational) -> Result<DoublingSample> {
    let band = scale_band(ratios, r)?.ok_or(Error::InvalidRadius)?;
    let depth = band + 3;
    let ball = mu_ball_bounds(ratios, x, r, depth)?;
    let double_ball = mu_ball_bounds(ratios, x, &(r * BigRational::from_integer(BigInt::from(2))), depth)?;
    let factor = |k: usize| -> Result<f64> { Ok(f64::from(2 * ratios.ratio(k)? - 1)) };
    let theoretical = f64::from(NEAR_CELL_OFFSETS) * factor(band)? * factor(band + 1)? * factor(band + 2)?;
    let psi_m = BigRational::new(BigInt::one(), ratios.cell_count(band)?);
    let psi_m2 = BigRational::new(BigInt::one(), ratios.cell_count(band + 2)?);
    let lower = ball.lower.exact().unwrap().clone();
    let upper = ball.upper.exact().unwrap().clone();
    let ratio_bound = if lower.is_zero() {
        f64::INFINITY
    } else {
        ratio_to_f64(&(double_ball.upper.exact().unwrap() / &lower))
    };
    Ok(DoublingSample {
        r: ratio_to_f64(r),
        band,
        contains_small_cell: upper >= psi_m2,
        covered: lower <= psi_m.clone() * BigRational::from_integer(BigInt::from(NEAR_CELL_OFFSETS)),
        cover_ratio: ratio_to_f64(&(upper / psi_m)),
        ball,
        double_ball,
        ratio_bound,
        theoretical,
    })
}

/// Per-ratio constants.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LetterConstants {
    pub l: u32,
    /// `log(2l-1) / log l`.
    pub alpha: f64,
    /// `p - 1 + alpha`.
    pub beta: f64,
    /// `(2l-1) l^{p-1}`.
    pub t: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DerivedConstants {
    pub p: f64,
    pub letters: Vec<LetterConstants>,
    pub inf_alpha: f64,
    pub sup_alpha: f64,
    pub inf_t: f64,
    pub sup_t: f64,
    /// `(1 + (p-1)/sup alpha)^{-1}`.
    pub epsilon_p: f64,
}

#[must_use]
pub fn alpha_of(l: u32) -> f64 {
    f64::from(2 * l - 1).ln() / f64::from(l).ln()
}

pub fn derived_constants(ratios: &RatioSequence) -> Result<DerivedConstants> {
    let p = ratios.p().value();
    let letters: Vec<LetterConstants> = ratios
        .alphabet()
        .into_iter()
        .map(|l| {
            let alpha = alpha_of(l);
            LetterConstants {
                l,
                alpha,
                beta: p - 1.0 + alpha,
                t: f64::from(2 * l - 1) * f64::from(l).powf(p - 1.0),
            }
        })
        .collect();
    if letters.is_empty() {
        return Err(Error::arg("the ratio alphabet is empty"));
    }
    let fold = |f: fn(&LetterConstants) -> f64, min: bool| {
        letters
            .iter()
            .map(f)
            .fold(if min { f64::INFINITY } else { f64::NEG_INFINITY }, |a, b| {
                if min {
                    a.min(b)
                } else {
                    a.max(b)
                }
            })
    };
    let sup_alpha = fold(|c| c.alpha, false);
    Ok(DerivedConstants {
        p,
        inf_alpha: fold(|c| c.alpha, true),
        sup_alpha,
        inf_t: fold(|c| c.t, true),
        sup_t: fold(|c| c.t, false),
        epsilon_p: 1.0 / (1.0 + (p - 1.0) / sup_alpha),
        letters,
    })
}

/// The constants of the volume scaling law `c1 (R/r)^{inf alpha} <= psi(R)/psi(r) <= c2 (R/r)^{sup alpha}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ScalingLaw {
    pub c1: f64,
    pub c2: f64,
    pub inf_alpha: f64,
    pub sup_alpha: f64,
}

pub fn scaling_law(ratios: &RatioSequence) -> Result<ScalingLaw> {
    let consts = derived_constants(ratios)?;
    let sup_l = f64::from(ratios.sup_ratio());
    Ok(ScalingLaw {
        c1: sup_l.powf(-consts.inf_alpha),
        c2: sup_l.powf(consts.sup_alpha),
        inf_alpha: consts.inf_alpha,
        sup_alpha: consts.sup_alpha,
    })
}

impl ScalingLaw {
    /// Whether `psi(big)/psi(small)` obeys the law (relative slack 1e-12).
    pub fn check(&self, ratios: &RatioSequence, small: &BigRational, big: &BigRational) -> Result<bool> {
        let q = ratio_to_f64(&(psi(ratios, big)? / psi(ratios, small)?));
        let x = ratio_to_f64(&(big / small));
        let lo = self.c1 * x.powf(self.inf_alpha);
        let hi = self.c2 * x.powf(self.sup_alpha);
        Ok(q >= lo * (1.0 - 1e-12) && q <= hi * (1.0 + 1e-12))
    }
}
