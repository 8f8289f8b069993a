//! Multi-stage games and their reduction to simple games.
//!
//! A row of a [`SequentialGame`] either pays a reward or starts a nested
//! game in the worlds where it occurs. How such a game flattens depends on
//! the universe:
//!
//! * Kent: a subgame row `(c, (d_j, s_j))` becomes rows `(c d_j, s_j)`;
//!   terminal rows are untouched, since branching creates new worlds only
//!   where the subgame is played.
//! * Reverse Kent: the pool of worlds is fixed, so every other row is
//!   multiplied by the subgame's total `sum_j d_j`.
//! * p-norm: each other row `alpha_k` is expanded against the subgame's
//!   coefficient vector into rows `alpha_k beta_j`. The coarse form keeps
//!   one row with magnitude `|alpha_k|^p sum_j |beta_j|^p` instead; both
//!   have the same p-Born value.
//!
//! Subgames are flattened innermost first, then left to right.

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fraction::{format_fraction, frac, int, is_integer, serde_fraction, Rational};
use crate::fine_graining::DEFAULT_MAX_ROWS;
use crate::game::{value_p_born, ExactCoefficient, Exponent, Game, ProbabilityVector, Reward, Row};
use crate::sampling;
use crate::world_tree::UniverseKind;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Branch {
    Terminal(Reward),
    Subgame(SequentialGame),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SequentialRow {
    pub coeff: ExactCoefficient,
    pub branch: Branch,
}

impl SequentialRow {
    pub fn terminal(coeff: ExactCoefficient, reward: Reward) -> Self {
        Self {
            coeff,
            branch: Branch::Terminal(reward),
        }
    }

    pub fn subgame(coeff: ExactCoefficient, game: SequentialGame) -> Self {
        Self {
            coeff,
            branch: Branch::Subgame(game),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SequentialGame {
    rows: Vec<SequentialRow>,
}

impl SequentialGame {
    pub fn new(rows: Vec<SequentialRow>) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::EmptyGame);
        }
        if let Some(row) = rows.iter().find(|r| !r.coeff.mag_p().is_positive()) {
            return Err(Error::NonpositiveMagnitude(format_fraction(row.coeff.mag_p())));
        }
        Ok(Self { rows })
    }

    /// A one-stage game with the rows of `game`.
    pub fn from_game(game: &Game) -> Self {
        Self {
            rows: game
                .rows()
                .iter()
                .map(|r| SequentialRow::terminal(r.coeff.clone(), r.reward.clone()))
                .collect(),
        }
    }

    pub fn rows(&self) -> &[SequentialRow] {
        &self.rows
    }

    pub fn depth(&self) -> usize {
        1 + self
            .rows
            .iter()
            .map(|r| match &r.branch {
                Branch::Terminal(_) => 0,
                Branch::Subgame(g) => g.depth(),
            })
            .max()
            .unwrap_or(0)
    }

    fn coefficients(&self) -> impl Iterator<Item = &ExactCoefficient> {
        self.rows.iter().map(|r| &r.coeff).chain(self.rows.iter().flat_map(|r| {
            let nested: Box<dyn Iterator<Item = &ExactCoefficient>> = match &r.branch {
                Branch::Terminal(_) => Box::new(std::iter::empty()),
                Branch::Subgame(g) => Box::new(g.coefficients()),
            };
            nested
        }))
    }
}

/// Which simple game a p-norm reduction produces.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ReductionForm {
    /// Every row expanded against every subgame's coefficients.
    #[default]
    Expanded,
    /// Non-subgame rows scaled by the subgame's total measure.
    Coarse,
}

fn universe_exponent(universe: &UniverseKind) -> Exponent {
    match universe {
        UniverseKind::Kent | UniverseKind::ReverseKent => Exponent::Finite(Rational::one()),
        UniverseKind::PNorm(p) => Exponent::Finite(p.clone()),
    }
}

fn check_universe(g: &SequentialGame, universe: &UniverseKind) -> Result<()> {
    if universe.counts_worlds() {
        if let Some(c) = g.coefficients().find(|c| !is_integer(c.mag_p())) {
            return Err(Error::UniverseMismatch(format!(
                "{} needs integer world counts, got {}",
                universe.name(),
                format_fraction(c.mag_p())
            )));
        }
    }
    Ok(())
}

#[derive(Debug, Clone)]
enum Payload {
    Terminal(Reward),
    Pending(Game),
}

/// Flattens `g` into a simple game under `universe`. The form only matters
/// for p-norm universes; the Kent variants have a single reduction.
///
/// The expanded form multiplies every other row by each subgame row, so its
/// size is the product of the subgame sizes; it fails with `SizeOverflow`
/// beyond [`DEFAULT_MAX_ROWS`] rows.
pub fn reduce_sequential(g: &SequentialGame, universe: &UniverseKind, form: ReductionForm) -> Result<Game> {
    check_universe(g, universe)?;
    reduce_checked(g, universe, form)
}

fn reduce_checked(g: &SequentialGame, universe: &UniverseKind, form: ReductionForm) -> Result<Game> {
    // items carry the index of the original row they descend from, so that
    // all copies of one subgame are expanded together
    let mut items: Vec<(ExactCoefficient, Payload, usize)> = g
        .rows
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let payload = match &row.branch {
                Branch::Terminal(r) => Payload::Terminal(r.clone()),
                Branch::Subgame(sub) => Payload::Pending(reduce_checked(sub, universe, form)?),
            };
            Ok((row.coeff.clone(), payload, i))
        })
        .collect::<Result<Vec<_>>>()?;

    for origin in 0..g.rows.len() {
        let Some(sub) = items.iter().find_map(|(_, p, o)| match p {
            Payload::Pending(sub) if *o == origin => Some(sub.clone()),
            _ => None,
        }) else {
            continue;
        };
        let total = sub.total_measure();
        let expanded = matches!((universe, form), (UniverseKind::PNorm(_), ReductionForm::Expanded));
        if expanded {
            let size = BigInt::from(items.len()) * BigInt::from(sub.len());
            if size > BigInt::from(DEFAULT_MAX_ROWS) {
                return Err(Error::SizeOverflow {
                    requested: size.to_string(),
                    bound: DEFAULT_MAX_ROWS,
                });
            }
        }
        let mut next = Vec::with_capacity(items.len() + sub.len());
        for (c, p, o) in items {
            if o == origin {
                next.extend(
                    sub.rows()
                        .iter()
                        .map(|r| (c.compose(&r.coeff), Payload::Terminal(r.reward.clone()), o)),
                );
                continue;
            }
            match universe {
                UniverseKind::Kent => next.push((c, p, o)),
                _ if expanded => next.extend(sub.rows().iter().map(|r| (c.compose(&r.coeff), p.clone(), o))),
                _ => next.push((c.scaled(&total), p, o)),
            }
        }
        items = next;
    }

    let rows = items
        .into_iter()
        .map(|(c, p, _)| match p {
            Payload::Terminal(r) => Row::new(c, r),
            Payload::Pending(_) => unreachable!("all subgames flattened"),
        })
        .collect();
    Game::new(universe_exponent(universe), rows)
}

/// Value of a simple game under the universe's rule: p = 1 Born on world
/// counts for both Kent variants, p-Born otherwise.
pub fn universe_value(game: &Game, universe: &UniverseKind) -> Result<Reward> {
    value_p_born(&game.with_exponent(universe_exponent(universe)))
}

/// Value of the flattened game. Uses the coarse form, which has the same
/// value as the expanded one.
pub fn sequential_value(g: &SequentialGame, universe: &UniverseKind) -> Result<Reward> {
    universe_value(&reduce_sequential(g, universe, ReductionForm::Coarse)?, universe)
}

/// Replaces every subgame by a terminal row paying its standalone value.
pub fn substitute(g: &SequentialGame, universe: &UniverseKind) -> Result<Game> {
    check_universe(g, universe)?;
    let rows = g
        .rows
        .iter()
        .map(|row| {
            let reward = match &row.branch {
                Branch::Terminal(r) => r.clone(),
                Branch::Subgame(sub) => sequential_value(sub, universe)?,
            };
            Ok(Row::new(row.coeff.clone(), reward))
        })
        .collect::<Result<Vec<_>>>()?;
    Game::new(universe_exponent(universe), rows)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SubstitutionReport {
    pub universe: String,
    pub holds: bool,
    #[serde(with = "serde_fraction")]
    pub reduced_value: Rational,
    #[serde(with = "serde_fraction")]
    pub substituted_value: Rational,
    pub witness: Option<String>,
}

/// Compares the value of the flattened game with the value obtained by
/// substituting each subgame's own value for it.
pub fn check_substitution(g: &SequentialGame, universe: &UniverseKind) -> Result<SubstitutionReport> {
    let reduced_value = sequential_value(g, universe)?;
    let substituted_value = universe_value(&substitute(g, universe)?, universe)?;
    let holds = reduced_value == substituted_value;
    let witness = (!holds).then(|| {
        format!(
            "flattened game is worth {} but substituting subgame values gives {}",
            format_fraction(&reduced_value),
            format_fraction(&substituted_value)
        )
    });
    Ok(SubstitutionReport {
        universe: universe.name(),
        holds,
        reduced_value,
        substituted_value,
        witness,
    })
}

/// Random sequential games of bounded depth. Integer magnitudes keep the
/// samples valid in the Kent universes.
#[derive(Debug, Clone)]
pub struct SequentialSampler {
    pub max_depth: usize,
    pub max_rows: usize,
    pub integer_magnitudes: bool,
}

impl SequentialSampler {
    pub fn sample(&self, rng: &mut ChaCha8Rng) -> SequentialGame {
        self.sample_at(rng, self.max_depth.max(1))
    }

    fn sample_at(&self, rng: &mut ChaCha8Rng, depth: usize) -> SequentialGame {
        let n = rng.random_range(1..=self.max_rows);
        let rows = (0..n)
            .map(|_| {
                let mag = if self.integer_magnitudes {
                    int(rng.random_range(1..=5))
                } else {
                    frac(rng.random_range(1..=12), rng.random_range(1..=6))
                };
                let coeff = ExactCoefficient::new(mag, frac(rng.random_range(0..8), 8)).expect("positive");
                if depth > 1 && rng.random_bool(0.45) {
                    SequentialRow::subgame(coeff, self.sample_at(rng, depth - 1))
                } else {
                    SequentialRow::terminal(coeff, int(rng.random_range(-20..=20)))
                }
            })
            .collect();
        SequentialGame::new(rows).expect("sampled rows are valid")
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubstitutionSweep {
    pub trials: u64,
    pub holds: u64,
    pub first_failure: Option<(u64, SubstitutionReport)>,
}

pub fn substitution_sweep(
    universe: &UniverseKind,
    sampler: &SequentialSampler,
    trials: u64,
    seed: u64,
) -> Result<SubstitutionSweep> {
    let reports = (0..trials)
        .into_par_iter()
        .map(|t| {
            let g = sampler.sample(&mut sampling::stream(seed, t));
            check_substitution(&g, universe).map(|r| (t, r))
        })
        .collect::<Result<Vec<_>>>()?;
    let holds = reports.iter().filter(|(_, r)| r.holds).count() as u64;
    let first_failure = reports.into_iter().find(|(_, r)| !r.holds);
    Ok(SubstitutionSweep {
        trials,
        holds,
        first_failure,
    })
}

/// The Once-or-Twice game: measure once; if the outcome is 2, measure again.
pub fn once_or_twice_game(c1: &ExactCoefficient, c2: &ExactCoefficient) -> Result<SequentialGame> {
    let second = SequentialGame::new(vec![
        SequentialRow::terminal(c1.clone(), Rational::zero()),
        SequentialRow::terminal(c2.clone(), Rational::zero()),
    ])?;
    SequentialGame::new(vec![
        SequentialRow::terminal(c1.clone(), Rational::zero()),
        SequentialRow::subgame(c2.clone(), second),
    ])
}

fn once_or_twice_weights(c1: &Rational, c2: &Rational, universe: &UniverseKind) -> Result<[Rational; 3]> {
    for c in [c1, c2] {
        if c.is_negative() {
            return Err(Error::NegativeMultiplicity(format_fraction(c)));
        }
    }
    match universe {
        UniverseKind::Kent | UniverseKind::ReverseKent => {
            if let Some(c) = [c1, c2].into_iter().find(|c| !is_integer(c)) {
                return Err(Error::NonIntegerMultiplicity(format_fraction(c)));
            }
            if c1.is_zero() && c2.is_zero() {
                return Err(Error::ZeroTotal);
            }
        }
        UniverseKind::PNorm(_) => {
            if let Some(c) = [c1, c2].into_iter().find(|c| c.is_zero()) {
                return Err(Error::NonpositiveMagnitude(format_fraction(c)));
            }
        }
    }
    Ok(match universe {
        UniverseKind::Kent => [c1.clone(), c2 * c1, c2 * c2],
        UniverseKind::ReverseKent | UniverseKind::PNorm(_) => [c1 * (c1 + c2), c2 * c1, c2 * c2],
    })
}

/// Proportions of the world classes `(1)`, `(2,1)`, `(2,2)`. For the Kent
/// variants `c1`, `c2` are world counts; for p-norm universes they are the
/// magnitudes `|c|^p`.
pub fn once_or_twice(c1: &Rational, c2: &Rational, universe: &UniverseKind) -> Result<ProbabilityVector> {
    let w = once_or_twice_weights(c1, c2, universe)?;
    let total: Rational = w.iter().sum();
    ProbabilityVector::new(w.iter().map(|x| x / &total).collect())
}

/// Absolute world counts in the Kent variants. Reverse Kent starts from the
/// minimal pool of `(c1 + c2)^2` worlds.
pub fn once_or_twice_counts(c1: &Rational, c2: &Rational, universe: &UniverseKind) -> Result<[BigInt; 3]> {
    if !universe.counts_worlds() {
        return Err(Error::UniverseMismatch("world counts exist only in the Kent universes".into()));
    }
    let w = once_or_twice_weights(c1, c2, universe)?;
    Ok(w.map(|x| x.to_integer()))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LedgerRow {
    pub world_class: String,
    #[serde(with = "serde_fraction")]
    pub measure: Rational,
    #[serde(with = "serde_fraction")]
    pub payoff: Rational,
}

/// World-by-world accounting of a set of bets.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct OutcomeLedger {
    pub rows: Vec<LedgerRow>,
    /// Expected value of each bet under the probabilities the agent held
    /// when accepting it.
    #[serde(serialize_with = "serialize_fractions")]
    pub bet_values: Vec<Rational>,
}

fn serialize_fractions<S: serde::Serializer>(v: &[Rational], s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_seq(v.iter().map(format_fraction))
}

impl OutcomeLedger {
    pub fn uniform_payoff(&self) -> Option<&Rational> {
        let first = &self.rows.first()?.payoff;
        self.rows.iter().all(|r| &r.payoff == first).then_some(first)
    }
}

struct Bet {
    pays: Vec<Rational>,
    believed: Vec<Rational>,
}

fn settle(classes: &[(&str, Rational)], bets: &[Bet]) -> OutcomeLedger {
    let rows = classes
        .iter()
        .enumerate()
        .map(|(i, (label, measure))| LedgerRow {
            world_class: (*label).to_string(),
            measure: measure.clone(),
            payoff: bets.iter().map(|b| &b.pays[i]).sum(),
        })
        .collect();
    let bet_values = bets
        .iter()
        .map(|b| b.pays.iter().zip(&b.believed).map(|(x, p)| x * p).sum())
        .collect();
    OutcomeLedger { rows, bet_values }
}

/// The Once-or-Twice Dutch book in Kent's universe. After the first
/// measurement the agent takes +3/-3 on outcome 1/2; after the second,
/// -4 on the single-outcome world and +2 on each of `(2,1)` and `(2,2)`.
/// All amounts are multiplied by `stake`.
pub fn dutch_book_demo(c1: &Rational, c2: &Rational, stake: &Rational) -> Result<OutcomeLedger> {
    if c1 != c2 {
        return Err(Error::AsymmetricInput(format_fraction(c1), format_fraction(c2)));
    }
    let counts = once_or_twice_counts(c1, c2, &UniverseKind::Kent)?;
    let measures: Vec<Rational> = counts.iter().cloned().map(Rational::from_integer).collect();
    let classes = [
        ("(1)", measures[0].clone()),
        ("(2,1)", measures[1].clone()),
        ("(2,2)", measures[2].clone()),
    ];
    let s = |x: i64| int(x) * stake;
    let first_stage = c1 / (c1 + c2);
    let second_stage = once_or_twice(c1, c2, &UniverseKind::Kent)?;
    let bets = [
        Bet {
            pays: vec![s(3), s(-3), s(-3)],
            // before the second branching the two (2, .) classes are one world
            believed: vec![first_stage.clone(), Rational::one() - &first_stage, Rational::zero()],
        },
        Bet {
            pays: vec![s(-4), s(2), s(2)],
            believed: second_stage.entries().to_vec(),
        },
    ];
    Ok(settle(&classes, &bets))
}

/// The single-world analogue: a coin first believed fair, then believed to
/// land tails with probability 2/3.
pub fn coin_dutch_book(stake: &Rational) -> OutcomeLedger {
    let s = |x: i64| int(x) * stake;
    let classes = [("heads", frac(1, 2)), ("tails", frac(1, 2))];
    let bets = [
        Bet {
            pays: vec![s(3), s(-3)],
            believed: vec![frac(1, 2), frac(1, 2)],
        },
        Bet {
            pays: vec![s(-4), s(2)],
            believed: vec![frac(1, 3), frac(2, 3)],
        },
    ];
    settle(&classes, &bets)
}
