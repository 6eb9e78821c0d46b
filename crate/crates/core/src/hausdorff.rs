//! Dimension, deviation sequences and the Hausdorff-measure / regularity
//! classification for sequences built from two ratios.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measure::alpha_of;

/// Asymptotic value of a real sequence, supplied by the caller.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Limit {
    MinusInfinity,
    Finite,
    PlusInfinity,
}

/// `liminf` and `limsup` of the deviation sequence `eta_n`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Regime {
    pub liminf: Limit,
    pub limsup: Limit,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MeasureClass {
    Zero,
    PositiveFinite,
    Infinite,
}

/// Per-level diagnostics over the supplied prefix.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DiagnosticRow {
    pub n: usize,
    pub ratio: u32,
    /// `[n]_a / [n]_b`, infinite while no `b` has appeared.
    pub theta: f64,
    /// `n (theta_n - theta)`.
    pub eta: f64,
    /// `ln(rho_n^alpha / psi(rho_n))`.
    pub ln_xi: f64,
    pub ln_rho: f64,
    pub ln_psi: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HausdorffDiagnostics {
    pub a: u32,
    pub b: u32,
    pub theta: f64,
    pub alpha: f64,
    pub rows: Vec<DiagnosticRow>,
    pub regime: Regime,
    pub measure: MeasureClass,
    pub ahlfors_regular: bool,
    /// `Some(true)` when one of the sufficient conditions for non-self-similarity
    /// holds; `None` when `a > b`, where those conditions are not available.
    pub not_self_similar: Option<bool>,
    /// Trends over a finite prefix say nothing about limits.
    pub note: &'static str,
}

/// `(theta log(2a-1) + log(2b-1)) / (theta log a + log b)`.
#[must_use]
pub fn dimension(a: u32, b: u32, theta: f64) -> f64 {
    let (a, b) = (f64::from(a), f64::from(b));
    (theta * (2.0 * a - 1.0).ln() + (2.0 * b - 1.0).ln()) / (theta * a.ln() + b.ln())
}

fn check_pair(a: u32, b: u32) -> Result<()> {
    for l in [a, b] {
        if l < 3 || l % 2 == 0 {
            return Err(Error::InvalidRatio(u64::from(l)));
        }
    }
    if a == b {
        return Err(Error::Degenerate(format!(
            "a = b = {a}: a single ratio gives a self-similar set with dimension {}",
            alpha_of(a)
        )));
    }
    Ok(())
}

/// Maps a regime to the measure class, regularity and self-similarity verdicts.
pub fn classify(a: u32, b: u32, regime: Regime) -> Result<(MeasureClass, bool, Option<bool>)> {
    check_pair(a, b)?;
    let measure = if a < b {
        match regime.liminf {
            Limit::Finite => MeasureClass::PositiveFinite,
            Limit::MinusInfinity => MeasureClass::Zero,
            Limit::PlusInfinity => MeasureClass::Infinite,
        }
    } else {
        match regime.limsup {
            Limit::Finite => MeasureClass::PositiveFinite,
            Limit::PlusInfinity => MeasureClass::Zero,
            Limit::MinusInfinity => MeasureClass::Infinite,
        }
    };
    let bounded = regime.liminf == Limit::Finite && regime.limsup == Limit::Finite;
    let not_self_similar = (a < b).then(|| {
        regime.liminf == Limit::PlusInfinity
            || (regime.liminf == Limit::Finite && regime.limsup == Limit::PlusInfinity)
    });
    Ok((measure, bounded, not_self_similar))
}

/// Diagnostics for a prefix made of the ratios `a` and `b`.
pub fn hausdorff_report(a: u32, b: u32, prefix: &[u32], theta: f64, regime: Regime) -> Result<HausdorffDiagnostics> {
    let (measure, ahlfors_regular, not_self_similar) = classify(a, b, regime)?;
    if prefix.is_empty() {
        return Err(Error::arg("the prefix is empty"));
    }
    if !(theta.is_finite() && theta >= 0.0) {
        return Err(Error::arg(format!("theta must be finite and >= 0, got {theta}")));
    }
    let alpha = dimension(a, b, theta);
    let (ln_a, ln_b) = (f64::from(a).ln(), f64::from(b).ln());
    let (ln_2a, ln_2b) = (f64::from(2 * a - 1).ln(), f64::from(2 * b - 1).ln());
    let (mut count_a, mut count_b) = (0u64, 0u64);
    let mut rows = Vec::with_capacity(prefix.len());
    for (i, &l) in prefix.iter().enumerate() {
        if l == a {
            count_a += 1;
        } else if l == b {
            count_b += 1;
        } else {
            return Err(Error::arg(format!("prefix entry {l} is neither {a} nor {b}")));
        }
        let n = i + 1;
        let (ca, cb) = (count_a as f64, count_b as f64);
        let theta_n = if count_b == 0 { f64::INFINITY } else { ca / cb };
        let eta = if count_b == 0 {
            f64::INFINITY
        } else {
            n as f64 * (ca - theta * cb) / cb
        };
        let ln_rho = std::f64::consts::LN_2 - ca * ln_a - cb * ln_b;
        let ln_psi = -(ca * ln_2a + cb * ln_2b);
        rows.push(DiagnosticRow {
            n,
            ratio: l,
            theta: theta_n,
            eta,
            ln_xi: alpha * ln_rho - ln_psi,
            ln_rho,
            ln_psi,
        });
    }
    Ok(HausdorffDiagnostics {
        a,
        b,
        theta,
        alpha,
        rows,
        regime,
        measure,
        ahlfors_regular,
        not_self_similar,
        note: "diagnostic, not a limit",
    })
}

/// First `n` in the prefix where `eta_n < (2/3) sqrt(n)` for `theta = 1`, decided
/// in integers: with counts `A`, `B > 0` the bound reads `A >= B` and
/// `9 n (A - B)^2 >= 4 B^2`. Levels with `B = 0` have `eta_n = +inf`.
#[must_use]
pub fn first_balanced_eta_violation(prefix: &[u32], a: u32) -> Option<usize> {
    let (mut ca, mut cb) = (0u128, 0u128);
    for (i, &l) in prefix.iter().enumerate() {
        if l == a {
            ca += 1;
        } else {
            cb += 1;
        }
        let n = (i + 1) as u128;
        if cb == 0 {
            continue;
        }
        if ca < cb || 9 * n * (ca - cb) * (ca - cb) < 4 * cb * cb {
            return Some(i + 1);
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dimension_values() {
        assert!((dimension(3, 5, 1.0) - 45f64.ln() / 15f64.ln()).abs() < 1e-12);
        assert!((dimension(3, 5, 1.0) - 1.4056838710822128).abs() < 1e-15);
        assert!((dimension(3, 5, 0.0) - 9f64.ln() / 5f64.ln()).abs() < 1e-12);
        assert!((dimension(3, 5, 0.0) - 1.365212).abs() < 1e-6);
    }

    #[test]
    fn classification_table() {
        let r = |liminf, limsup| Regime { liminf, limsup };
        use Limit::*;
        assert_eq!(classify(3, 5, r(Finite, Finite)).unwrap(), (MeasureClass::PositiveFinite, true, Some(false)));
        assert_eq!(classify(3, 5, r(MinusInfinity, Finite)).unwrap().0, MeasureClass::Zero);
        assert_eq!(classify(3, 5, r(PlusInfinity, PlusInfinity)).unwrap(), (MeasureClass::Infinite, false, Some(true)));
        assert_eq!(classify(3, 5, r(Finite, PlusInfinity)).unwrap().2, Some(true));
        assert_eq!(classify(5, 3, r(Finite, PlusInfinity)).unwrap(), (MeasureClass::Zero, false, None));
        assert!(matches!(classify(3, 3, r(Finite, Finite)), Err(Error::Degenerate(_))));
        assert!(matches!(classify(4, 3, r(Finite, Finite)), Err(Error::InvalidRatio(4))));
    }

    #[test]
    fn eta_is_infinite_before_first_b() {
        let regime = Regime { liminf: Limit::PlusInfinity, limsup: Limit::PlusInfinity };
        let rep = hausdorff_report(3, 5, &[3, 3, 5], 1.0, regime).unwrap();
        assert!(rep.rows[0].eta.is_infinite() && rep.rows[1].eta.is_infinite());
        assert_eq!(rep.rows[2].theta, 2.0);
        assert_eq!(rep.rows[2].eta, 3.0);
        assert!(hausdorff_report(3, 5, &[], 1.0, regime).is_err());
        assert!(hausdorff_report(3, 5, &[7], 1.0, regime).is_err());
    }
}
