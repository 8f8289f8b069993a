//! JSON literal formats for games, traces, sequential games and branch
//! specs. Every number is a string holding an exact fraction.
//!
//! ```json
//! {"p": "2", "rows": [{"magp": "1", "phase": "0", "reward": "3"},
//!                     {"magp": "4", "phase": "1/4", "reward": "-1/2"}]}
//! ```
//!
//! In approximate mode any number may be a decimal float, and a row may
//! give the amplitude modulus `"amp"` instead of `"magp"`; values are then
//! rounded to the nearest fraction with a bounded denominator.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fine_graining::{FineGrainStep, SymmetrizationTrace};
use crate::fraction::{approximate, format_fraction, parse_fraction, Rational};
use crate::game::{ExactCoefficient, Exponent, Game, Row};
use crate::sequential::{Branch, SequentialGame, SequentialRow};
use crate::world_tree::{BranchSpec, UniverseKind};

/// Exact parsing, or float parsing rounded to `max_denominator`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NumberMode {
    Exact,
    Approximate { max_denominator: u64 },
}

impl NumberMode {
    pub fn parse(&self, text: &str) -> Result<Rational> {
        match self {
            NumberMode::Exact => parse_fraction(text),
            NumberMode::Approximate { max_denominator } => {
                if let Ok(r) = parse_fraction(text) {
                    if r.denom() <= &(*max_denominator).into() {
                        return Ok(r);
                    }
                }
                let x: f64 = text
                    .trim()
                    .parse()
                    .map_err(|_| Error::Parse(format!("bad number {text:?}")))?;
                approximate(x, *max_denominator)
            }
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CoeffLiteral {
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub magp: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub amp: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub phase: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RowLiteral {
    #[serde(flatten)]
    pub coeff: CoeffLiteral,
    pub reward: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GameLiteral {
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub p: Option<String>,
    pub rows: Vec<RowLiteral>,
}

fn parse_json<T: for<'de> Deserialize<'de>>(text: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
}

fn coefficient(lit: &CoeffLiteral, exponent: &Exponent, mode: NumberMode) -> Result<ExactCoefficient> {
    let phase = match &lit.phase {
        Some(t) => mode.parse(t)?,
        None => Rational::from_integer(0.into()),
    };
    let mag = match (&lit.magp, &lit.amp) {
        (Some(m), None) => mode.parse(m)?,
        (None, Some(a)) => amplitude_to_magnitude(a, exponent, mode)?,
        (Some(_), Some(_)) => return Err(Error::Parse("give either magp or amp, not both".into())),
        (None, None) => return Err(Error::Parse("row needs magp or amp".into())),
    };
    ExactCoefficient::new(mag, phase).map_err(|e| Error::Parse(e.to_string()))
}

/// `|amp|^p`: exact for integer `p` (and for the max rule, which stores
/// `|amp|`), otherwise only in approximate mode, which rounds `|amp|^p`.
fn amplitude_to_magnitude(text: &str, exponent: &Exponent, mode: NumberMode) -> Result<Rational> {
    let p = match exponent {
        Exponent::Max => return mode.parse(text).map(|a| num_traits::Signed::abs(&a)),
        Exponent::Finite(p) => p,
    };
    // in approximate mode a long decimal amplitude is rounded after raising
    // it to p, since |amp|^p is what the value depends on
    let exact_amp = match mode {
        NumberMode::Exact => parse_fraction(text).ok(),
        NumberMode::Approximate { max_denominator } => {
            parse_fraction(text).ok().filter(|a| a.denom() <= &max_denominator.into())
        }
    };
    if p.is_integer() {
        if let Some(a) = exact_amp {
            let k = p.to_integer().try_into().map_err(|_| Error::Parse("exponent too large".into()))?;
            return Ok(num_traits::pow(num_traits::Signed::abs(&a), k));
        }
    }
    match mode {
        NumberMode::Exact => Err(Error::Parse(format!(
            "amplitude {text:?} with p = {} is irrational; use approximate mode",
            format_fraction(p)
        ))),
        NumberMode::Approximate { max_denominator } => {
            let a: f64 = text
                .trim()
                .parse()
                .map_err(|_| Error::Parse(format!("bad amplitude {text:?}")))?;
            approximate(a.abs().powf(crate::fraction::to_f64(p)), max_denominator)
        }
    }
}

/// Parses a game literal. `exponent` overrides the literal's `"p"`; one of
/// the two must be present.
pub fn parse_game(text: &str, exponent: Option<&Exponent>, mode: NumberMode) -> Result<Game> {
    let lit: GameLiteral = parse_json(text)?;
    let exponent = match (exponent, &lit.p) {
        (Some(e), _) => e.clone(),
        (None, Some(p)) => Exponent::parse(p)?,
        (None, None) => return Err(Error::Parse("game literal has no \"p\" and none was given".into())),
    };
    let rows = lit
        .rows
        .iter()
        .map(|r| Ok(Row::new(coefficient(&r.coeff, &exponent, mode)?, mode.parse(&r.reward)?)))
        .collect::<Result<Vec<_>>>()?;
    Game::new(exponent, rows)
}

fn coeff_literal(c: &ExactCoefficient) -> CoeffLiteral {
    CoeffLiteral {
        magp: Some(format_fraction(c.mag_p())),
        amp: None,
        phase: Some(format_fraction(c.phase())),
    }
}

pub fn game_literal(game: &Game) -> GameLiteral {
    GameLiteral {
        p: Some(game.exponent().to_string()),
        rows: game
            .rows()
            .iter()
            .map(|r| RowLiteral {
                coeff: coeff_literal(&r.coeff),
                reward: format_fraction(&r.reward),
            })
            .collect(),
    }
}

pub fn game_to_json(game: &Game) -> String {
    serde_json::to_string(&game_literal(game)).expect("literal serializes")
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StepLiteral {
    pub row: usize,
    pub parts: Vec<CoeffLiteral>,
}

pub fn trace_literal(steps: &[FineGrainStep]) -> Vec<StepLiteral> {
    steps
        .iter()
        .map(|s| StepLiteral {
            row: s.row,
            parts: s.parts.iter().map(coeff_literal).collect(),
        })
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct TraceReport {
    pub common_denominator: String,
    pub multiplicities: Vec<String>,
    pub steps: Vec<StepLiteral>,
}

pub fn trace_report(trace: &SymmetrizationTrace) -> TraceReport {
    TraceReport {
        common_denominator: trace.common_denominator.to_string(),
        multiplicities: trace.multiplicities.iter().map(|m| m.to_string()).collect(),
        steps: trace_literal(&trace.steps),
    }
}

/// Parses a trace: a JSON list of `{"row": i, "parts": [...]}` with 0-based
/// row indices into the game as it stands before each step.
pub fn parse_trace(text: &str, exponent: &Exponent) -> Result<Vec<FineGrainStep>> {
    let steps: Vec<StepLiteral> = parse_json(text)?;
    steps
        .iter()
        .map(|s| {
            let parts = s
                .parts
                .iter()
                .map(|c| coefficient(c, exponent, NumberMode::Exact))
                .collect::<Result<Vec<_>>>()?;
            Ok(FineGrainStep::new(s.row, parts))
        })
        .collect()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SequentialRowLiteral {
    pub coeff: CoeffLiteral,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub terminal: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub subgame: Option<SequentialLiteral>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SequentialLiteral {
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub p: Option<String>,
    pub rows: Vec<SequentialRowLiteral>,
}

fn build_sequential(lit: &SequentialLiteral, mode: NumberMode) -> Result<SequentialGame> {
    // magnitudes here are always given as magp (or exact amplitudes at p = 1)
    let exponent = Exponent::Finite(Rational::from_integer(1.into()));
    let rows = lit
        .rows
        .iter()
        .map(|r| {
            let coeff = coefficient(&r.coeff, &exponent, mode)?;
            match (&r.terminal, &r.subgame) {
                (Some(t), None) => Ok(SequentialRow::terminal(coeff, mode.parse(t)?)),
                (None, Some(g)) => Ok(SequentialRow::subgame(coeff, build_sequential(g, mode)?)),
                _ => Err(Error::Parse("row needs exactly one of terminal or subgame".into())),
            }
        })
        .collect::<Result<Vec<_>>>()?;
    SequentialGame::new(rows).map_err(|e| Error::Parse(e.to_string()))
}

pub fn parse_sequential(text: &str, mode: NumberMode) -> Result<SequentialGame> {
    build_sequential(&parse_json(text)?, mode)
}

pub fn sequential_literal(g: &SequentialGame) -> SequentialLiteral {
    SequentialLiteral {
        p: None,
        rows: g
            .rows()
            .iter()
            .map(|r| match &r.branch {
                Branch::Terminal(t) => SequentialRowLiteral {
                    coeff: coeff_literal(&r.coeff),
                    terminal: Some(format_fraction(t)),
                    subgame: None,
                },
                Branch::Subgame(s) => SequentialRowLiteral {
                    coeff: coeff_literal(&r.coeff),
                    terminal: None,
                    subgame: Some(sequential_literal(s)),
                },
            })
            .collect(),
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BranchSpecLiteral {
    #[serde(default = "default_universe")]
    pub universe: String,
    pub measures: Vec<String>,
    #[serde(rename = "N")]
    pub repetitions: usize,
}

fn default_universe() -> String {
    "pnorm:2".into()
}

pub fn parse_branch_spec(text: &str) -> Result<BranchSpec> {
    let lit: BranchSpecLiteral = parse_json(text)?;
    let universe = UniverseKind::parse(&lit.universe)?;
    let measures = lit
        .measures
        .iter()
        .map(|m| parse_fraction(m))
        .collect::<Result<Vec<_>>>()?;
    BranchSpec::new(universe, measures, lit.repetitions)
}
