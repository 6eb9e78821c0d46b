//! Contraction-ratio sequences, letters and words.

use std::collections::BTreeSet;
use std::fmt;

use num_bigint::BigInt;
use num_traits::{One, ToPrimitive};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::num::Exponent;

/// The four diagonal directions, i.e. `sqrt(2) * q_j` for `j = 1..4`.
pub const DIRECTIONS: [(i64, i64); 4] = [(1, 1), (-1, 1), (-1, -1), (1, -1)];

/// How the ratios `l_1, l_2, ...` are produced.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum RatioRule {
    /// A finite explicit list.
    List(Vec<u32>),
    /// `l, l, l, ...`
    Constant(u32),
    /// `a, b, a, b, ...`
    Alternating(u32, u32),
    /// Blocks `a^(k+1) b^k` for `k = 1, 2, ...`: `a a b a a a b b ...`
    ExampleSequence(u32, u32),
}

impl RatioRule {
    fn letters(&self) -> Vec<u32> {
        match self {
            RatioRule::List(v) => v.clone(),
            RatioRule::Constant(l) => vec![*l],
            RatioRule::Alternating(a, b) | RatioRule::ExampleSequence(a, b) => vec![*a, *b],
        }
    }

    fn ratio(&self, k: usize) -> Option<u32> {
        debug_assert!(k >= 1);
        match self {
            RatioRule::List(v) => v.get(k - 1).copied(),
            RatioRule::Constant(l) => Some(*l),
            RatioRule::Alternating(a, b) => Some(if k % 2 == 1 { *a } else { *b }),
            RatioRule::ExampleSequence(a, b) => {
                // Blocks 1..=j cover j^2 + 2j positions.
                let covered = |j: usize| j * j + 2 * j;
                let mut j = ((k as f64).sqrt() as usize).max(1);
                while covered(j) < k {
                    j += 1;
                }
                while j > 1 && covered(j - 1) >= k {
                    j -= 1;
                }
                let offset = k - covered(j - 1);
                Some(if offset <= j + 1 { *a } else { *b })
            }
        }
    }
}

/// Ratio data plus the energy exponent `p` and the critical exponent `beta_star`.
#[derive(Clone, Debug, PartialEq)]
pub struct RatioSequence {
    rule: RatioRule,
    p: Exponent,
    beta_star: f64,
}

impl RatioSequence {
    pub fn new(rule: RatioRule, p: Exponent, beta_star: f64) -> Result<Self> {
        for l in rule.letters() {
            check_ratio(u64::from(l))?;
        }
        if !(beta_star.is_finite() && beta_star > 0.0) {
            return Err(Error::arg(format!("beta_star must be positive, got {beta_star}")));
        }
        Ok(Self { rule, p, beta_star })
    }

    /// Constant ratio `l` with p = 2 and beta_star = 1.
    pub fn constant(l: u32) -> Result<Self> {
        Self::new(RatioRule::Constant(l), Exponent::new(2.0)?, 1.0)
    }

    pub fn list(ratios: &[u32]) -> Result<Self> {
        Self::new(RatioRule::List(ratios.to_vec()), Exponent::new(2.0)?, 1.0)
    }

    pub fn alternating(a: u32, b: u32) -> Result<Self> {
        Self::new(RatioRule::Alternating(a, b), Exponent::new(2.0)?, 1.0)
    }

    #[must_use]
    pub fn with_p(mut self, p: Exponent) -> Self {
        self.p = p;
        self
    }

    pub fn with_beta_star(mut self, beta_star: f64) -> Result<Self> {
        if !(beta_star.is_finite() && beta_star > 0.0) {
            return Err(Error::arg(format!("beta_star must be positive, got {beta_star}")));
        }
        self.beta_star = beta_star;
        Ok(self)
    }

    #[must_use]
    pub fn rule(&self) -> &RatioRule {
        &self.rule
    }

    #[must_use]
    pub fn p(&self) -> &Exponent {
        &self.p
    }

    #[must_use]
    pub fn beta_star(&self) -> f64 {
        self.beta_star
    }

    /// Number of ratios available, `None` for unbounded generators.
    #[must_use]
    pub fn max_depth(&self) -> Option<usize> {
        match &self.rule {
            RatioRule::List(v) => Some(v.len()),
            _ => None,
        }
    }

    /// `l_k`, with `l_0 = 1`.
    pub fn ratio(&self, k: usize) -> Result<u32> {
        if k == 0 {
            return Ok(1);
        }
        self.rule.ratio(k).ok_or(Error::Depth {
            requested: k,
            available: self.max_depth().unwrap_or(usize::MAX),
        })
    }

    /// `[l_1, ..., l_n]`.
    pub fn prefix(&self, n: usize) -> Result<Vec<u32>> {
        (1..=n).map(|k| self.ratio(k)).collect()
    }

    /// `L_n = l_1 ... l_n`.
    pub fn scale(&self, n: usize) -> Result<BigInt> {
        self.prefix(n)?
            .into_iter()
            .try_fold(BigInt::one(), |acc, l| Ok(acc * l))
    }

    /// `#W_n = (2 l_1 - 1) ... (2 l_n - 1)`.
    pub fn cell_count(&self, n: usize) -> Result<BigInt> {
        self.prefix(n)?
            .into_iter()
            .try_fold(BigInt::one(), |acc, l| Ok(acc * (2 * l - 1)))
    }

    /// The distinct ratio values the rule can produce.
    #[must_use]
    pub fn alphabet(&self) -> BTreeSet<u32> {
        self.rule.letters().into_iter().collect()
    }

    #[must_use]
    pub fn sup_ratio(&self) -> u32 {
        self.alphabet().into_iter().max().unwrap_or(1)
    }

    #[must_use]
    pub fn inf_ratio(&self) -> u32 {
        self.alphabet().into_iter().min().unwrap_or(1)
    }
}

fn check_ratio(l: u64) -> Result<()> {
    if l < 3 || l % 2 == 0 {
        Err(Error::InvalidRatio(l))
    } else {
        Ok(())
    }
}

/// One letter of the alphabet for ratio `l`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Letter {
    Center,
    /// Step `step` along direction `dir` (1..=4).
    Arm { dir: u8, step: u32 },
}

impl Letter {
    /// Translation of the child cell centre, in units of the child scale.
    #[must_use]
    pub fn offset(&self) -> (i64, i64) {
        match *self {
            Letter::Center => (0, 0),
            Letter::Arm { dir, step } => {
                let (sx, sy) = DIRECTIONS[usize::from(dir - 1)];
                let s = 2 * i64::from(step);
                (s * sx, s * sy)
            }
        }
    }

    /// Position in the alphabet order produced by [`enumerate_letters`].
    #[must_use]
    pub fn index(&self, l: u32) -> usize {
        match *self {
            Letter::Center => 0,
            Letter::Arm { dir, step } => {
                let half = ((l - 1) / 2) as usize;
                1 + usize::from(dir - 1) * half + (step as usize - 1)
            }
        }
    }

    #[must_use]
    pub fn from_index(l: u32, i: usize) -> Letter {
        if i == 0 {
            return Letter::Center;
        }
        let half = ((l - 1) / 2) as usize;
        Letter::Arm {
            dir: ((i - 1) / half + 1) as u8,
            step: ((i - 1) % half + 1) as u32,
        }
    }

    fn fits(&self, l: u32) -> bool {
        match *self {
            Letter::Center => true,
            Letter::Arm { dir, step } => (1..=4).contains(&dir) && step >= 1 && step <= (l - 1) / 2,
        }
    }
}

impl fmt::Display for Letter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Letter::Center => write!(f, "c"),
            Letter::Arm { dir, step } => write!(f, "a{dir}s{step}"),
        }
    }
}

/// All `2l - 1` letters for ratio `l`: the centre first, then the arms by direction and step.
pub fn enumerate_letters(l: u64) -> Result<Vec<Letter>> {
    check_ratio(l)?;
    let l = u32::try_from(l).map_err(|_| Error::InvalidRatio(l))?;
    Ok((0..(2 * l - 1) as usize)
        .map(|i| Letter::from_index(l, i))
        .collect())
}

/// A finite word `w_1 ... w_n`.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Word {
    letters: Vec<Letter>,
}

impl Word {
    #[must_use]
    pub fn root() -> Self {
        Self::default()
    }

    #[must_use]
    pub fn new(letters: Vec<Letter>) -> Self {
        Self { letters }
    }

    #[must_use]
    pub fn level(&self) -> usize {
        self.letters.len()
    }

    #[must_use]
    pub fn letters(&self) -> &[Letter] {
        &self.letters
    }

    #[must_use]
    pub fn extended(&self, letter: Letter) -> Word {
        let mut letters = self.letters.clone();
        letters.push(letter);
        Word { letters }
    }

    /// `[w]_k`, the first `k` letters.
    #[must_use]
    pub fn truncated(&self, k: usize) -> Word {
        Word {
            letters: self.letters[..k.min(self.letters.len())].to_vec(),
        }
    }

    /// Checks every letter against the alphabet of its level.
    pub fn validate(&self, ratios: &RatioSequence) -> Result<()> {
        for (k, letter) in self.letters.iter().enumerate() {
            let l = ratios.ratio(k + 1)?;
            if !letter.fits(l) {
                return Err(Error::arg(format!(
                    "letter {letter} at position {} is not in the alphabet of l = {l}",
                    k + 1
                )));
            }
        }
        Ok(())
    }

    /// Mixed-radix index among the words of the same level (first letter most significant).
    pub fn index(&self, ratios: &RatioSequence) -> Result<usize> {
        self.validate(ratios)?;
        let mut idx: u128 = 0;
        for (k, letter) in self.letters.iter().enumerate() {
            let l = ratios.ratio(k + 1)?;
            idx = idx * u128::from(2 * l - 1) + letter.index(l) as u128;
        }
        idx.to_usize()
            .ok_or_else(|| Error::arg("word index does not fit in usize"))
    }

    pub fn from_index(ratios: &RatioSequence, level: usize, mut idx: usize) -> Result<Word> {
        let prefix = ratios.prefix(level)?;
        let mut letters = vec![Letter::Center; level];
        for k in (0..level).rev() {
            let radix = (2 * prefix[k] - 1) as usize;
            letters[k] = Letter::from_index(prefix[k], idx % radix);
            idx /= radix;
        }
        if idx != 0 {
            return Err(Error::arg("word index out of range"));
        }
        Ok(Word { letters })
    }

    /// The `2 l_{n+1} - 1` one-letter extensions, in alphabet order.
    pub fn children(&self, ratios: &RatioSequence, depth: usize) -> Result<Vec<Word>> {
        if self.level() >= depth {
            return Err(Error::Depth {
                requested: self.level() + 1,
                available: depth,
            });
        }
        let l = ratios.ratio(self.level() + 1)?;
        Ok(enumerate_letters(u64::from(l))?
            .into_iter()
            .map(|a| self.extended(a))
            .collect())
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.letters.is_empty() {
            return write!(f, "root");
        }
        for (i, a) in self.letters.iter().enumerate() {
            if i > 0 {
                write!(f, ".")?;
            }
            write!(f, "{a}")?;
        }
        Ok(())
    }
}
