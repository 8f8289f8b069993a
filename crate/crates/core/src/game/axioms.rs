//! Executable checks of the rationality axioms against a value rule.

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::{value, ExactCoefficient, Exponent, Game, Reward, Row};
use crate::error::Result;
use crate::fraction::{format_fraction, frac, int, Rational};
use crate::sampling;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Axiom {
    Constancy,
    Dominance,
    Additivity,
    Indifference,
    Homogeneity,
    /// Finite stand-in for Continuity: the games `[(1, r1), (1 + 1/k, r2)]`
    /// converge to `[(1, r1), (1, r2)]`, so their values must approach the
    /// limit game's value.
    ContinuitySurrogate,
}

impl Axiom {
    pub const ALL: [Axiom; 6] = [
        Axiom::Constancy,
        Axiom::Dominance,
        Axiom::Additivity,
        Axiom::Indifference,
        Axiom::Homogeneity,
        Axiom::ContinuitySurrogate,
    ];
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Counterexample {
    pub trial: u64,
    pub detail: String,
    #[serde(skip)]
    pub games: Vec<Game>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AxiomReport {
    pub axiom: Axiom,
    pub rule: String,
    pub trials: u64,
    pub passed: bool,
    pub counterexample: Option<Counterexample>,
}

/// Random games with small exact entries.
#[derive(Debug, Clone)]
pub struct GameSampler {
    pub exponent: Exponent,
    pub max_rows: usize,
    pub max_numerator: i64,
    pub max_denominator: i64,
}

impl GameSampler {
    pub fn new(exponent: Exponent) -> Self {
        Self {
            exponent,
            max_rows: 5,
            max_numerator: 20,
            max_denominator: 20,
        }
    }

    pub fn magnitude(&self, rng: &mut ChaCha8Rng) -> Rational {
        if self.exponent.is_max() && rng.random_bool(0.5) {
            // small palette so that ties at the maximum actually occur
            let palette = [frac(1, 2), int(1), int(2), int(3)];
            return palette[rng.random_range(0..palette.len())].clone();
        }
        let n = rng.random_range(1..=self.max_numerator);
        let d = rng.random_range(1..=self.max_denominator);
        frac(n, d)
    }

    pub fn reward(&self, rng: &mut ChaCha8Rng) -> Reward {
        frac(rng.random_range(-50..=50), rng.random_range(1..=10))
    }

    pub fn phase(&self, rng: &mut ChaCha8Rng) -> Rational {
        frac(rng.random_range(0..12), 12)
    }

    pub fn rewards(&self, rng: &mut ChaCha8Rng, n: usize) -> Vec<Reward> {
        (0..n).map(|_| self.reward(rng)).collect()
    }
}

pub fn random_game(rng: &mut ChaCha8Rng, sampler: &GameSampler) -> Game {
    let n = rng.random_range(1..=sampler.max_rows);
    let rows = (0..n)
        .map(|_| {
            let mag = sampler.magnitude(rng);
            let phase = sampler.phase(rng);
            let coeff = ExactCoefficient::new(mag, phase).expect("sampled magnitude is positive");
            Row::new(coeff, sampler.reward(rng))
        })
        .collect();
    Game::new(sampler.exponent.clone(), rows).expect("sampled game is valid")
}

/// Evaluates one axiom on `trials` seeded instances. Trial `i` draws from
/// its own stream, so the report does not depend on evaluation order.
pub fn check_axiom(axiom: Axiom, exponent: &Exponent, trials: u64, seed: u64) -> AxiomReport {
    let sampler = GameSampler::new(exponent.clone());
    let first_failure = (0..trials)
        .into_par_iter()
        .filter_map(|trial| {
            let mut rng = sampling::stream(seed, trial);
            check_instance(axiom, &sampler, &mut rng)
                .err()
                .map(|(detail, games)| Counterexample { trial, detail, games })
        })
        .min_by_key(|c| c.trial);
    AxiomReport {
        axiom,
        rule: rule_name(exponent),
        trials,
        passed: first_failure.is_none(),
        counterexample: first_failure,
    }
}

fn rule_name(exponent: &Exponent) -> String {
    match exponent {
        Exponent::Finite(p) => format!("p_born({})", format_fraction(p)),
        Exponent::Max => "max_born".into(),
    }
}

type Failure = (String, Vec<Game>);

fn eval(game: &Game) -> std::result::Result<Reward, Failure> {
    value(game).map_err(|e| (format!("valuation failed: {e}"), vec![game.clone()]))
}

fn build(r: Result<Game>) -> Game {
    r.expect("derived game has the sampled coefficients")
}

fn check_instance(
    axiom: Axiom,
    sampler: &GameSampler,
    rng: &mut ChaCha8Rng,
) -> std::result::Result<(), Failure> {
    let base = random_game(rng, sampler);
    let n = base.len();
    match axiom {
        Axiom::Constancy => {
            let r = sampler.reward(rng);
            let g = build(base.with_rewards(&vec![r.clone(); n]));
            let v = eval(&g)?;
            if v != r {
                return Err((format!("constant reward {r} valued at {v}"), vec![g]));
            }
        }
        Axiom::Dominance => {
            let high: Vec<Reward> = base.rewards().cloned().collect();
            let low: Vec<Reward> = high
                .iter()
                .map(|r| r - frac(rng.random_range(0..=20), rng.random_range(1..=5)))
                .collect();
            let g_low = build(base.with_rewards(&low));
            let (vh, vl) = (eval(&base)?, eval(&g_low)?);
            if vh < vl {
                return Err((format!("dominating rewards valued {vh} < {vl}"), vec![base, g_low]));
            }
        }
        Axiom::Additivity => {
            let other = sampler.rewards(rng, n);
            let sum: Vec<Reward> = base.rewards().zip(&other).map(|(a, b)| a + b).collect();
            let g2 = build(base.with_rewards(&other));
            let g_sum = build(base.with_rewards(&sum));
            let (a, b, c) = (eval(&base)?, eval(&g2)?, eval(&g_sum)?);
            if &a + &b != c {
                return Err((format!("V(r)+V(r') = {} but V(r+r') = {c}", a + b), vec![base, g2, g_sum]));
            }
        }
        Axiom::Indifference => {
            let mut perm: Vec<usize> = (0..n).collect();
            for i in (1..n).rev() {
                perm.swap(i, rng.random_range(0..=i));
            }
            let g = build(base.permuted(&perm));
            let (a, b) = (eval(&base)?, eval(&g)?);
            if a != b {
                return Err((format!("permutation {perm:?} changed value {a} -> {b}"), vec![base, g]));
            }
        }
        Axiom::Homogeneity => {
            let mu = frac(rng.random_range(-30..=30), rng.random_range(1..=7));
            let i = rng.random_range(0..n);
            let unit: Vec<Reward> = (0..n).map(|j| if i == j { Rational::one() } else { Rational::zero() }).collect();
            let scaled: Vec<Reward> = unit.iter().map(|u| u * &mu).collect();
            let g1 = build(base.with_rewards(&unit));
            let g2 = build(base.with_rewards(&scaled));
            let (a, b) = (eval(&g1)?, eval(&g2)?);
            if &a * &mu != b {
                return Err((format!("V(mu e_{i}) = {b} but mu V(e_{i}) = {}", a * mu), vec![g1, g2]));
            }
        }
        Axiom::ContinuitySurrogate => {
            let r1 = sampler.reward(rng);
            let mut r2 = sampler.reward(rng);
            if r2 == r1 {
                r2 += Rational::one();
            }
            continuity_surrogate(&sampler.exponent, &r1, &r2)?;
        }
    }
    Ok(())
}

/// Largest k of the witness sequence; k runs over powers of ten up to it.
const CONTINUITY_KMAX_EXP: u32 = 6;

pub(crate) fn witness_game(exponent: &Exponent, k: &BigInt, r1: &Reward, r2: &Reward) -> Game {
    let bump = Rational::one() + Rational::new(BigInt::one(), k.clone());
    Game::from_pairs(exponent.clone(), &[(int(1), r1.clone()), (bump, r2.clone())])
        .expect("witness magnitudes are positive")
}

/// Passes when `|V(G_k) - V(G)|` is non-increasing along `k = 10^j` and at
/// the last step has fallen to at most `|r1 - r2| / k`.
fn continuity_surrogate(exponent: &Exponent, r1: &Reward, r2: &Reward) -> std::result::Result<(), Failure> {
    let limit = Game::from_pairs(exponent.clone(), &[(int(1), r1.clone()), (int(1), r2.clone())])
        .expect("limit magnitudes are positive");
    let v_limit = eval(&limit)?;
    let mut previous: Option<Rational> = None;
    let mut last_k = BigInt::one();
    let mut last_game = limit.clone();
    let mut distance = Rational::zero();
    for j in 0..=CONTINUITY_KMAX_EXP {
        let k = num_traits::pow(BigInt::from(10), j as usize);
        let g = witness_game(exponent, &k, r1, r2);
        distance = (eval(&g)? - &v_limit).abs();
        if let Some(prev) = &previous {
            if distance > *prev {
                return Err((format!("distance grew at k = {k}"), vec![g, limit]));
            }
        }
        previous = Some(distance.clone());
        last_k = k;
        last_game = g;
    }
    let allowed = (r1 - r2).abs() / Rational::from_integer(last_k.clone());
    if distance > allowed {
        let v_last = eval(&last_game)?;
        return Err((
            format!(
                "V(G_k) = {} at k = {last_k} but the limit game has value {}",
                format_fraction(&v_last),
                format_fraction(&v_limit)
            ),
            vec![last_game, limit],
        ));
    }
    Ok(())
}
