//! Games, the p-Born and max-Born value rules, and subjective probabilities.
//!
//! A game is a list of rows, each pairing a branch coefficient with a
//! reward. Coefficients are stored as `|alpha|^p` (a nonnegative rational)
//! plus a phase measured in turns, so every valuation below is exact.
//! Under the max rule the stored magnitude is `|alpha|` itself; only its
//! ordering matters there.

mod axioms;

pub use axioms::{check_axiom, random_game, Axiom, AxiomReport, Counterexample, GameSampler};

use std::fmt;

use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fraction::{format_fraction, parse_fraction, reduce_turn, Rational};

pub type Reward = Rational;

/// The norm exponent a game lives under.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Exponent {
    Finite(Rational),
    Max,
}

impl Exponent {
    pub fn finite(p: Rational) -> Result<Self> {
        if p < Rational::one() {
            return Err(Error::InvalidExponent(format_fraction(&p)));
        }
        Ok(Exponent::Finite(p))
    }

    pub fn parse(text: &str) -> Result<Self> {
        let t = text.trim();
        if t.eq_ignore_ascii_case("max") || t.eq_ignore_ascii_case("inf") {
            return Ok(Exponent::Max);
        }
        let p = parse_fraction(t).map_err(|_| Error::Parse(format!("bad exponent {t:?}")))?;
        Exponent::finite(p)
    }

    pub fn is_max(&self) -> bool {
        matches!(self, Exponent::Max)
    }
}

impl fmt::Display for Exponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Exponent::Finite(p) => write!(f, "{}", format_fraction(p)),
            Exponent::Max => f.write_str("max"),
        }
    }
}

/// A branch coefficient: `mag_p = |alpha|^p` and `phase = theta / 2pi`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ExactCoefficient {
    mag_p: Rational,
    phase: Rational,
}

impl ExactCoefficient {
    /// Builds a coefficient, reducing the phase into `[0, 1)`.
    /// A zero magnitude is allowed here (it marks an absent branch) but
    /// never inside a [`Game`].
    pub fn new(mag_p: Rational, phase: Rational) -> Result<Self> {
        if mag_p.is_negative() {
            return Err(Error::NonpositiveMagnitude(format_fraction(&mag_p)));
        }
        Ok(Self {
            mag_p,
            phase: reduce_turn(&phase),
        })
    }

    pub fn real(mag_p: Rational) -> Result<Self> {
        Self::new(mag_p, Rational::zero())
    }

    pub fn mag_p(&self) -> &Rational {
        &self.mag_p
    }

    pub fn phase(&self) -> &Rational {
        &self.phase
    }

    pub fn is_zero(&self) -> bool {
        self.mag_p.is_zero()
    }

    /// Product of two coefficients: magnitudes multiply, phases add.
    pub fn compose(&self, other: &ExactCoefficient) -> ExactCoefficient {
        ExactCoefficient {
            mag_p: &self.mag_p * &other.mag_p,
            phase: reduce_turn(&(&self.phase + &other.phase)),
        }
    }

    pub fn with_phase(&self, phase: Rational) -> ExactCoefficient {
        ExactCoefficient {
            mag_p: self.mag_p.clone(),
            phase: reduce_turn(&phase),
        }
    }

    pub(crate) fn scaled(&self, factor: &Rational) -> ExactCoefficient {
        ExactCoefficient {
            mag_p: &self.mag_p * factor,
            phase: self.phase.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Row {
    pub coeff: ExactCoefficient,
    pub reward: Reward,
}

impl Row {
    pub fn new(coeff: ExactCoefficient, reward: Reward) -> Self {
        Self { coeff, reward }
    }
}

/// The game matrix: an ordered, nonempty list of (coefficient, reward) rows.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Game {
    rows: Vec<Row>,
    exponent: Exponent,
}

impl Game {
    pub fn new(exponent: Exponent, rows: Vec<Row>) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::EmptyGame);
        }
        if let Some(row) = rows.iter().find(|r| !r.coeff.mag_p.is_positive()) {
            return Err(Error::NonpositiveMagnitude(format_fraction(&row.coeff.mag_p)));
        }
        Ok(Self { rows, exponent })
    }

    /// Convenience constructor from `(mag_p, reward)` pairs with zero phases.
    pub fn from_pairs(exponent: Exponent, pairs: &[(Rational, Reward)]) -> Result<Self> {
        let rows = pairs
            .iter()
            .map(|(m, r)| Ok(Row::new(ExactCoefficient::real(m.clone())?, r.clone())))
            .collect::<Result<Vec<_>>>()?;
        Self::new(exponent, rows)
    }

    pub fn rows(&self) -> &[Row] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn exponent(&self) -> &Exponent {
        &self.exponent
    }

    pub fn magnitudes(&self) -> impl Iterator<Item = &Rational> {
        self.rows.iter().map(|r| &r.coeff.mag_p)
    }

    pub fn rewards(&self) -> impl Iterator<Item = &Reward> {
        self.rows.iter().map(|r| &r.reward)
    }

    /// `||alpha||_p^p`, the sum of stored magnitudes.
    pub fn total_measure(&self) -> Rational {
        self.magnitudes().sum()
    }

    /// Same coefficients, new reward vector.
    pub fn with_rewards(&self, rewards: &[Reward]) -> Result<Game> {
        if rewards.len() != self.rows.len() {
            return Err(Error::InvalidArgument(format!(
                "expected {} rewards, got {}",
                self.rows.len(),
                rewards.len()
            )));
        }
        let rows = self
            .rows
            .iter()
            .zip(rewards)
            .map(|(row, r)| Row::new(row.coeff.clone(), r.clone()))
            .collect();
        Ok(Game {
            rows,
            exponent: self.exponent.clone(),
        })
    }

    pub fn with_exponent(&self, exponent: Exponent) -> Game {
        Game {
            rows: self.rows.clone(),
            exponent,
        }
    }

    /// Rows reordered so that output row `i` is input row `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Game> {
        let mut seen = vec![false; self.rows.len()];
        if perm.len() != self.rows.len() {
            return Err(Error::InvalidArgument("permutation length mismatch".into()));
        }
        for &i in perm {
            if i >= seen.len() || std::mem::replace(&mut seen[i], true) {
                return Err(Error::InvalidArgument(format!("not a permutation: {perm:?}")));
            }
        }
        Ok(Game {
            rows: perm.iter().map(|&i| self.rows[i].clone()).collect(),
            exponent: self.exponent.clone(),
        })
    }

    pub fn is_symmetric(&self) -> bool {
        let first = &self.rows[0].coeff.mag_p;
        self.magnitudes().all(|m| m == first)
    }
}

/// `V(G) = sum_i |alpha_i|^p r_i / ||alpha||_p^p`. Phases never enter.
pub fn value_p_born(game: &Game) -> Result<Reward> {
    if game.exponent.is_max() {
        return Err(Error::MaxNormUnsupported);
    }
    p_born_sum(game)
}

fn p_born_sum(game: &Game) -> Result<Reward> {
    if game.rows.is_empty() {
        return Err(Error::EmptyGame);
    }
    let total = game.total_measure();
    if total.is_zero() {
        return Err(Error::ZeroTotalMeasure);
    }
    let weighted: Rational = game
        .rows
        .iter()
        .map(|row| &row.coeff.mag_p * &row.reward)
        .sum();
    Ok(weighted / total)
}

/// Uniform average of the rewards on the rows of maximal magnitude.
/// Ties are exact rational equality.
pub fn value_max_born(game: &Game) -> Result<Reward> {
    if !game.exponent.is_max() {
        return Err(Error::NotMaxMode);
    }
    let top = game
        .magnitudes()
        .max()
        .ok_or(Error::EmptyGame)?
        .clone();
    let (sum, count) = game
        .rows
        .iter()
        .filter(|row| row.coeff.mag_p == top)
        .fold((Rational::zero(), 0i64), |(s, n), row| (s + &row.reward, n + 1));
    Ok(sum / Rational::from_integer(count.into()))
}

/// Values a game with the rule its exponent selects.
pub fn value(game: &Game) -> Result<Reward> {
    match game.exponent {
        Exponent::Finite(_) => value_p_born(game),
        Exponent::Max => value_max_born(game),
    }
}

/// Arithmetic mean of the rewards of a game whose coefficients all share
/// one magnitude.
pub fn value_symmetric(game: &Game) -> Result<Reward> {
    if !game.is_symmetric() {
        return Err(Error::InvalidArgument("game is not symmetric".into()));
    }
    let n = Rational::from_integer((game.len() as i64).into());
    Ok(crate::fine_graining::run_length_sum(game.rewards()) / n)
}

/// Binary floating-point p-Born value; the approximate-mode companion of
/// [`value_p_born`].
pub fn value_p_born_f64(mags: &[f64], rewards: &[f64]) -> f64 {
    let total: f64 = mags.iter().sum();
    mags.iter().zip(rewards).map(|(m, r)| m * r).sum::<f64>() / total
}

/// Nonnegative rationals summing to exactly one.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProbabilityVector {
    #[serde(with = "prob_entries")]
    entries: Vec<Rational>,
}

mod prob_entries {
    use super::Rational;
    use crate::fraction::{format_fraction, parse_fraction};
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &[Rational], s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(v.iter().map(format_fraction))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Rational>, D::Error> {
        Vec::<String>::deserialize(d)?
            .iter()
            .map(|s| parse_fraction(s).map_err(serde::de::Error::custom))
            .collect()
    }
}

impl ProbabilityVector {
    pub fn new(entries: Vec<Rational>) -> Result<Self> {
        if entries.iter().any(|e| e.is_negative()) {
            return Err(Error::InvalidArgument("negative probability".into()));
        }
        let total: Rational = entries.iter().sum();
        if !total.is_one() {
            return Err(Error::InvalidArgument(format!(
                "probabilities sum to {}",
                format_fraction(&total)
            )));
        }
        Ok(Self { entries })
    }

    pub fn entries(&self) -> &[Rational] {
        &self.entries
    }

    pub fn expectation(&self, rewards: &[Reward]) -> Reward {
        self.entries.iter().zip(rewards).map(|(p, r)| p * r).sum()
    }
}

/// `p_i = V(c, e_i)`: the value of the elementary game paying 1 on row `i`.
pub fn subjective_probabilities(game: &Game) -> Result<ProbabilityVector> {
    let n = game.len();
    if n == 0 {
        return Err(Error::EmptyGame);
    }
    let entries = (0..n)
        .map(|i| {
            let unit: Vec<Reward> = (0..n)
                .map(|j| if i == j { Rational::one() } else { Rational::zero() })
                .collect();
            value(&game.with_rewards(&unit)?)
        })
        .collect::<Result<Vec<_>>>()?;
    ProbabilityVector::new(entries)
}

/// Multiplies every stored magnitude by `factor > 0`.
pub fn scale_coefficients(game: &Game, factor: &Rational) -> Result<Game> {
    if !factor.is_positive() {
        return Err(Error::NonpositiveFactor(format_fraction(factor)));
    }
    let rows = game
        .rows
        .iter()
        .map(|row| Row::new(row.coeff.scaled(factor), row.reward.clone()))
        .collect();
    Game::new(game.exponent.clone(), rows)
}
