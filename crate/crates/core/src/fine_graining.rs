//! Fine-graining of game rows and reduction of rational games to symmetric
//! games.
//!
//! A fine-graining step replaces one row by several rows carrying the same
//! reward, with magnitudes that add up (in `|alpha|^p`) to the replaced one.
//! Any game with rational magnitudes `a_i / b_i` becomes symmetric after
//! splitting row `i` into `a'_i = d a_i / b_i` parts of magnitude `1 / d`,
//! where `d` is the least common denominator.

use std::collections::{BTreeMap, BTreeSet};

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::fraction::{format_fraction, int, is_integer, lcm_of_denominators, Rational};
use crate::game::{value_symmetric, ExactCoefficient, Exponent, Game, Reward, Row};

pub const DEFAULT_MAX_ROWS: u64 = 1_000_000;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FineGrainStep {
    pub row: usize,
    pub parts: Vec<ExactCoefficient>,
}

impl FineGrainStep {
    pub fn new(row: usize, parts: Vec<ExactCoefficient>) -> Self {
        Self { row, parts }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SymmetrizationTrace {
    pub steps: Vec<FineGrainStep>,
    pub common_denominator: BigInt,
    pub multiplicities: Vec<BigInt>,
}

/// Splits `step.row` into `step.parts`, in place. Zero parts are dropped;
/// the remaining magnitudes must sum exactly to the row's magnitude.
pub fn apply_fine_grain(game: &Game, step: &FineGrainStep) -> Result<Game> {
    let mut rows = game.rows().to_vec();
    split_row(&mut rows, step)?;
    Game::new(game.exponent().clone(), rows)
}

fn split_row(rows: &mut Vec<Row>, step: &FineGrainStep) -> Result<()> {
    let len = rows.len();
    let target = rows.get(step.row).ok_or(Error::IndexOutOfRange { index: step.row, len })?;
    let parts: Vec<&ExactCoefficient> = step.parts.iter().filter(|c| !c.is_zero()).collect();
    if parts.is_empty() {
        return Err(Error::EmptySplit);
    }
    let sum = run_length_sum(parts.iter().map(|c| c.mag_p()));
    if &sum != target.coeff.mag_p() {
        return Err(Error::ConstraintViolated {
            row: format_fraction(target.coeff.mag_p()),
            parts: format_fraction(&sum),
        });
    }
    let reward = target.reward.clone();
    let replacement: Vec<Row> = parts.into_iter().map(|c| Row::new(c.clone(), reward.clone())).collect();
    rows.splice(step.row..=step.row, replacement);
    Ok(())
}

/// Sums a sequence, multiplying out runs of equal terms.
pub(crate) fn run_length_sum<'a>(terms: impl Iterator<Item = &'a Rational>) -> Rational {
    let mut total = Rational::zero();
    let mut run: Option<(&Rational, u64)> = None;
    for t in terms {
        run = match run {
            Some((r, n)) if r == t => Some((r, n + 1)),
            Some((r, n)) => {
                total += r * Rational::from_integer(n.into());
                Some((t, 1))
            }
            None => Some((t, 1)),
        };
    }
    if let Some((r, n)) = run {
        total += r * Rational::from_integer(n.into());
    }
    total
}

/// Kent-universe split: integer world counts on a `p = 1` game.
pub fn apply_kent_split(game: &Game, row: usize, counts: &[u64]) -> Result<Game> {
    if game.exponent() != &Exponent::Finite(Rational::one()) {
        return Err(Error::UniverseMismatch("Kent splits need p = 1".into()));
    }
    let target = game.rows().get(row).ok_or(Error::IndexOutOfRange {
        index: row,
        len: game.len(),
    })?;
    if !is_integer(target.coeff.mag_p()) {
        return Err(Error::NonIntegerMultiplicity(format_fraction(target.coeff.mag_p())));
    }
    let parts = counts
        .iter()
        .map(|&c| ExactCoefficient::new(Rational::from_integer(c.into()), target.coeff.phase().clone()))
        .collect::<Result<Vec<_>>>()?;
    apply_fine_grain(game, &FineGrainStep::new(row, parts))
}

pub fn replay(game: &Game, steps: &[FineGrainStep]) -> Result<Game> {
    let mut rows = game.rows().to_vec();
    for step in steps {
        split_row(&mut rows, step)?;
    }
    Game::new(game.exponent().clone(), rows)
}

/// A symmetric game stored run-length encoded: every row has magnitude
/// `unit`, and reward class `i` occupies `classes[i].1` consecutive rows.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SymmetricGame {
    pub unit: Rational,
    pub classes: Vec<(Reward, BigInt)>,
}

impl SymmetricGame {
    pub fn row_count(&self) -> BigInt {
        self.classes.iter().map(|(_, n)| n).sum()
    }

    /// Mean reward over all rows.
    pub fn mean(&self) -> Reward {
        let weighted: Rational = self
            .classes
            .iter()
            .map(|(r, n)| r * Rational::from_integer(n.clone()))
            .sum();
        weighted / Rational::from_integer(self.row_count())
    }

    pub fn expand(&self, exponent: Exponent, max_rows: u64) -> Result<Game> {
        let total = self.row_count();
        if total > BigInt::from(max_rows) {
            return Err(Error::SizeOverflow {
                requested: total.to_string(),
                bound: max_rows,
            });
        }
        let unit = ExactCoefficient::real(self.unit.clone())?;
        let mut rows = Vec::with_capacity(total.to_usize().unwrap_or(0));
        for (reward, n) in &self.classes {
            let n = n.to_usize().expect("bounded by max_rows");
            rows.extend(std::iter::repeat_n(Row::new(unit.clone(), reward.clone()), n));
        }
        Game::new(exponent, rows)
    }
}

/// Computes `d` and the multiplicities `a'_i` without materializing rows.
pub fn symmetric_form(game: &Game) -> Result<SymmetricGame> {
    if game.exponent().is_max() {
        return Err(Error::MaxNormUnsupported);
    }
    let d = lcm_of_denominators(game.magnitudes());
    let unit = Rational::new(BigInt::one(), d.clone());
    let dr = Rational::from_integer(d);
    let classes = game
        .rows()
        .iter()
        .map(|row| {
            let count = row.coeff.mag_p() * &dr;
            debug_assert!(is_integer(&count));
            // a'_i copies of 1/d must rebuild the row's magnitude
            if &(&count * &unit) != row.coeff.mag_p() {
                return Err(Error::ConstraintViolated {
                    row: format_fraction(row.coeff.mag_p()),
                    parts: format_fraction(&(&count * &unit)),
                });
            }
            Ok((row.reward.clone(), count.to_integer()))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SymmetricGame { unit, classes })
}

/// Fine-grains `game` into a symmetric game and records the steps taken.
/// Rows are split in order; each row's parts replace it in place and carry
/// phase zero.
pub fn symmetrize(game: &Game, max_rows: u64) -> Result<(Game, SymmetrizationTrace)> {
    let form = symmetric_form(game)?;
    let total = form.row_count();
    if total > BigInt::from(max_rows) {
        return Err(Error::SizeOverflow {
            requested: total.to_string(),
            bound: max_rows,
        });
    }
    let unit = ExactCoefficient::real(form.unit.clone())?;
    let mut steps = Vec::new();
    let mut offset = 0usize;
    for (row, (_, count)) in game.rows().iter().zip(&form.classes) {
        let n = count.to_usize().expect("bounded by max_rows");
        if n > 1 || row.coeff != unit {
            steps.push(FineGrainStep::new(offset, vec![unit.clone(); n]));
        }
        offset += n;
    }
    let output = replay(game, &steps)?;
    debug_assert!(output.is_symmetric());
    let trace = SymmetrizationTrace {
        steps,
        common_denominator: form.unit.denom().clone(),
        multiplicities: form.classes.into_iter().map(|(_, n)| n).collect(),
    };
    Ok((output, trace))
}

/// Values a game by reducing it to a symmetric game and averaging.
///
/// Small games are materialized row by row through [`symmetrize`]; once the
/// symmetric game would exceed `max_rows` rows the mean is taken over the
/// run-length form instead.
pub fn value_via_symmetrization(game: &Game, max_rows: u64) -> Result<Reward> {
    let form = symmetric_form(game)?;
    if form.row_count() <= BigInt::from(max_rows) {
        let (sym, _) = symmetrize(game, max_rows)?;
        return value_symmetric(&sym);
    }
    Ok(form.mean())
}

/// Outcome of the exhaustive search for a symmetric max-norm refinement.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ObstructionWitness {
    pub depth: usize,
    pub states_explored: usize,
    pub symmetric_found: usize,
    /// Largest magnitude attached to each original row's reward, which no
    /// max-norm-preserving split can change.
    pub class_maxima: Vec<Rational>,
    pub invariant_held: bool,
}

impl ObstructionWitness {
    pub fn confirmed(&self) -> bool {
        self.symmetric_found == 0 && self.invariant_held
    }
}

type State = Vec<(Rational, usize)>;

/// Explores every refinement reachable in at most `depth` two-part splits
/// that preserve the max norm of the split block: a row of magnitude `m`
/// becomes `m` plus one extra part of magnitude at most `m`. Extra parts are
/// drawn from the game's own magnitudes and their halves.
pub fn max_norm_obstruction(game: &Game, depth: usize) -> Result<ObstructionWitness> {
    if !game.exponent().is_max() {
        return Err(Error::NotMaxMode);
    }
    if game.is_symmetric() {
        return Err(Error::SymmetricInput);
    }
    let palette: BTreeSet<Rational> = game
        .magnitudes()
        .flat_map(|m| [m.clone(), m / int(2)])
        .collect();
    let start: State = canonical(
        game.magnitudes()
            .cloned()
            .enumerate()
            .map(|(class, m)| (m, class))
            .collect(),
    );
    let class_maxima = maxima(&start, game.len());

    let mut seen: BTreeSet<State> = BTreeSet::new();
    seen.insert(start.clone());
    let mut frontier = vec![start];
    for _ in 0..depth {
        let mut next = Vec::new();
        for state in &frontier {
            for (j, (m, class)) in state.iter().enumerate() {
                for part in palette.iter().filter(|q| *q <= m && q.is_positive()) {
                    let mut child = state.clone();
                    child[j] = (m.clone(), *class);
                    child.push((part.clone(), *class));
                    let child = canonical(child);
                    if seen.insert(child.clone()) {
                        next.push(child);
                    }
                }
            }
        }
        frontier = next;
    }
    let symmetric_found = seen
        .iter()
        .filter(|s| s.iter().all(|(m, _)| m == &s[0].0))
        .count();
    let invariant_held = seen.iter().all(|s| maxima(s, game.len()) == class_maxima);
    Ok(ObstructionWitness {
        depth,
        states_explored: seen.len(),
        symmetric_found,
        class_maxima,
        invariant_held,
    })
}

fn canonical(mut state: State) -> State {
    state.sort_by(|a, b| a.1.cmp(&b.1).then_with(|| a.0.cmp(&b.0)));
    state
}

fn maxima(state: &State, classes: usize) -> Vec<Rational> {
    let mut best: BTreeMap<usize, Rational> = BTreeMap::new();
    for (m, c) in state {
        let slot = best.entry(*c).or_insert_with(Rational::zero);
        if m > slot {
            *slot = m.clone();
        }
    }
    (0..classes).map(|c| best.remove(&c).unwrap_or_default()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fraction::frac;
    use crate::game::value_p_born;

    fn game(p: Exponent, pairs: &[(Rational, i64)]) -> Game {
        let pairs: Vec<_> = pairs.iter().map(|(m, r)| (m.clone(), int(*r))).collect();
        Game::from_pairs(p, &pairs).unwrap()
    }

    fn coeff(m: Rational) -> ExactCoefficient {
        ExactCoefficient::real(m).unwrap()
    }

    #[test]
    fn kent_split_three_worlds() {
        let g = game(Exponent::Finite(int(1)), &[(int(1), 10), (int(2), 40)]);
        let split = apply_kent_split(&g, 1, &[1, 1]).unwrap();
        let rewards: Vec<_> = split.rewards().cloned().collect();
        assert_eq!(rewards, vec![int(10), int(40), int(40)]);
        assert!(split.is_symmetric());
        assert_eq!(value_p_born(&split), value_p_born(&g));
        assert!(matches!(
            apply_kent_split(&game(Exponent::Finite(int(1)), &[(frac(1, 2), 0)]), 0, &[1]),
            Err(Error::NonIntegerMultiplicity(_))
        ));
        assert!(matches!(
            apply_kent_split(&game(Exponent::Finite(int(2)), &[(int(2), 0)]), 0, &[1, 1]),
            Err(Error::UniverseMismatch(_))
        ));
    }

    #[test]
    fn two_norm_split_of_four() {
        let g = game(Exponent::Finite(int(2)), &[(int(4), 7)]);
        let step = FineGrainStep::new(0, vec![coeff(int(2)), coeff(int(2))]);
        let out = apply_fine_grain(&g, &step).unwrap();
        assert_eq!(out.len(), 2);
        assert!(out.magnitudes().all(|m| m == &int(2)));
        assert_eq!(value_p_born(&out), value_p_born(&g));
    }

    #[test]
    fn degenerate_and_invalid_steps() {
        let g = game(Exponent::Finite(int(2)), &[(int(1), 1), (int(4), 2)]);
        let zero_part = FineGrainStep::new(1, vec![coeff(int(4)), coeff(int(0))]);
        assert_eq!(apply_fine_grain(&g, &zero_part).unwrap(), g);
        let all_zero = FineGrainStep::new(1, vec![coeff(int(0))]);
        assert_eq!(apply_fine_grain(&g, &all_zero), Err(Error::EmptySplit));
        let bad = FineGrainStep::new(1, vec![coeff(int(1)), coeff(int(2))]);
        assert!(matches!(apply_fine_grain(&g, &bad), Err(Error::ConstraintViolated { .. })));
        let oob = FineGrainStep::new(5, vec![coeff(int(1))]);
        assert_eq!(
            apply_fine_grain(&g, &oob),
            Err(Error::IndexOutOfRange { index: 5, len: 2 })
        );
    }

    #[test]
    fn symmetrize_quantum_example() {
        let g = game(Exponent::Finite(int(2)), &[(int(1), 5), (int(4), 10)]);
        let (sym, trace) = symmetrize(&g, DEFAULT_MAX_ROWS).unwrap();
        assert_eq!(sym.len(), 5);
        assert!(sym.magnitudes().all(|m| m == &int(1)));
        let rewards: Vec<_> = sym.rewards().cloned().collect();
        assert_eq!(rewards, vec![int(5), int(10), int(10), int(10), int(10)]);
        assert_eq!(trace.common_denominator, BigInt::from(1));
        assert_eq!(trace.multiplicities, vec![BigInt::from(1), BigInt::from(4)]);
        assert_eq!(replay(&g, &trace.steps).unwrap(), sym);
        assert_eq!(value_via_symmetrization(&g, DEFAULT_MAX_ROWS).unwrap(), int(9));
    }

    #[test]
    fn symmetrize_three_four_five() {
        let g = game(Exponent::Finite(int(2)), &[(frac(9, 25), 1), (frac(16, 25), 0)]);
        let (sym, trace) = symmetrize(&g, DEFAULT_MAX_ROWS).unwrap();
        assert_eq!(trace.common_denominator, BigInt::from(25));
        assert_eq!(trace.multiplicities, vec![BigInt::from(9), BigInt::from(16)]);
        assert_eq!(sym.len(), 25);
        assert_eq!(value_via_symmetrization(&g, DEFAULT_MAX_ROWS).unwrap(), frac(9, 25));
    }

    #[test]
    fn phase_only_step_for_unit_rows() {
        let row = Row::new(ExactCoefficient::new(int(1), frac(1, 3)).unwrap(), int(2));
        let g = Game::new(Exponent::Finite(int(2)), vec![row]).unwrap();
        let (sym, trace) = symmetrize(&g, DEFAULT_MAX_ROWS).unwrap();
        assert_eq!(trace.steps.len(), 1);
        assert_eq!(sym.rows()[0].coeff.phase(), &int(0));
    }

    #[test]
    fn size_bound_and_max_mode() {
        let g = game(Exponent::Finite(int(2)), &[(int(1), 5), (int(4), 10)]);
        assert!(matches!(symmetrize(&g, 4), Err(Error::SizeOverflow { .. })));
        // the run-length path still values it
        assert_eq!(value_via_symmetrization(&g, 4).unwrap(), int(9));
        let m = g.with_exponent(Exponent::Max);
        assert_eq!(symmetrize(&m, 10).unwrap_err(), Error::MaxNormUnsupported);
    }

    #[test]
    fn compact_form_expands_to_symmetrized_game() {
        let g = game(Exponent::Finite(frac(3, 2)), &[(frac(1, 6), 3), (frac(3, 4), -1), (int(2), 8)]);
        let form = symmetric_form(&g).unwrap();
        let (sym, _) = symmetrize(&g, DEFAULT_MAX_ROWS).unwrap();
        assert_eq!(form.expand(g.exponent().clone(), DEFAULT_MAX_ROWS).unwrap(), sym);
        assert_eq!(form.mean(), value_p_born(&g).unwrap());
    }

    #[test]
    fn obstruction_one_two() {
        let g = game(Exponent::Max, &[(int(1), 1), (int(2), 2)]);
        let w = max_norm_obstruction(&g, 3).unwrap();
        assert!(w.confirmed());
        assert_eq!(w.symmetric_found, 0);
        assert_eq!(w.class_maxima, vec![int(1), int(2)]);
        assert!(w.states_explored > 10);
    }

    #[test]
    fn obstruction_one_three_three() {
        let g = game(Exponent::Max, &[(int(1), 1), (int(3), 2), (int(3), 3)]);
        assert!(max_norm_obstruction(&g, 2).unwrap().confirmed());
    }

    #[test]
    fn obstruction_errors() {
        let sym = game(Exponent::Max, &[(int(2), 1), (int(2), 2)]);
        assert_eq!(max_norm_obstruction(&sym, 2), Err(Error::SymmetricInput));
        let finite = game(Exponent::Finite(int(2)), &[(int(1), 1), (int(2), 2)]);
        assert_eq!(max_norm_obstruction(&finite, 2), Err(Error::NotMaxMode));
    }
}
