//! Batch command-line front end.
//!
//! Exit codes: 0 success, 2 parse error, 3 domain error, 4 resource bound.
//! Failures print a JSON object on stderr. Fractions are always printed as
//! `"a/b"` strings, with floats only as companion fields.

use std::path::Path;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use crate::error::{Error, ErrorClass, Result};
use crate::fine_graining::{self, DEFAULT_MAX_ROWS};
use crate::fraction::{format_fraction, parse_fraction, to_f64, Rational};
use crate::game::{self, check_axiom, Axiom, Exponent};
use crate::literal::{self, NumberMode};
use crate::norm_consistency::{norm_by_name, norm_report};
use crate::sequential::{self, ReductionForm};
use crate::world_tree::{self, BranchSpec, UniverseKind, DEFAULT_ENUMERATION_BOUND};

pub const BOUND_ENV: &str = "BRANCHWORLDS_BOUND";

#[derive(Debug, Parser)]
#[command(name = "branchworlds", version, about = "Exact valuation of branching-world games")]
pub struct Cli {
    /// Output format; each command has its own default.
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Seed for every sampled quantity.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Maximum number of sequences to enumerate (overrides BRANCHWORLDS_BOUND).
    #[arg(long, global = true)]
    bound: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Value a game and print its subjective probabilities.
    Value {
        #[command(flatten)]
        game: GameInput,
        /// Also print the symmetrization trace.
        #[arg(long)]
        trace: bool,
    },
    /// Fine-grain a game into a symmetric game, or replay a trace.
    Symmetrize {
        #[command(flatten)]
        game: GameInput,
        #[arg(long, default_value_t = DEFAULT_MAX_ROWS)]
        max_rows: u64,
        /// Replay this trace (JSON literal or file) instead of computing one.
        #[arg(long)]
        replay: Option<String>,
    },
    /// Repeated branchings: enumeration, frequency law, Hoeffding, sampling.
    Worlds {
        #[command(subcommand)]
        action: WorldsAction,
    },
    /// Once-or-Twice world proportions.
    Oncetwice {
        c1: String,
        c2: String,
        #[arg(long, default_value = "kent")]
        universe: String,
    },
    /// Flatten a sequential game.
    Reduce {
        input: String,
        #[arg(long)]
        universe: String,
        /// Use the coarse-grained form for p-norm universes.
        #[arg(long)]
        coarse: bool,
    },
    /// Check Substitution on a sequential game.
    Substitution {
        input: String,
        #[arg(long)]
        universe: String,
    },
    /// The Once-or-Twice Dutch book ledger.
    Dutchbook {
        #[arg(default_value = "1")]
        c1: String,
        #[arg(default_value = "1")]
        c2: String,
        #[arg(long, default_value = "1")]
        stake: String,
        /// The single-world coin version instead.
        #[arg(long)]
        coin: bool,
    },
    /// Test a registered norm for consistent fine-graining.
    Normcheck {
        #[arg(long)]
        norm: String,
    },
    /// Check the rationality axioms against a value rule.
    Axioms {
        #[arg(long)]
        p: String,
        #[arg(long, default_value_t = 100)]
        trials: u64,
    },
    /// Search for a symmetric max-norm refinement of a game.
    Obstruct {
        input: String,
        #[arg(long, default_value_t = 3)]
        depth: usize,
    },
}

#[derive(Debug, Args)]
struct GameInput {
    /// Game literal (JSON) or a path to one.
    input: String,
    /// Exponent p, or "max"; overrides the literal's "p".
    #[arg(long)]
    p: Option<String>,
    /// Accept decimal floats and amplitudes, rounding to fractions.
    #[arg(long)]
    approx: bool,
    /// Denominator bound for approximate mode.
    #[arg(long, default_value_t = 1_000_000)]
    max_den: u64,
}

#[derive(Debug, Subcommand)]
enum WorldsAction {
    /// Every outcome sequence with its measure and proportion.
    Enumerate(SpecInput),
    /// Exact distribution of the count of one outcome.
    Freq(SpecInput),
    /// Exact deviation tail against the Hoeffding bound.
    Hoeffding {
        #[command(flatten)]
        spec: SpecInput,
        #[arg(long)]
        epsilon: String,
    },
    /// Monte Carlo histogram of the frequency of one outcome.
    Sample {
        #[command(flatten)]
        spec: SpecInput,
        #[arg(long, default_value_t = 10_000)]
        runs: u64,
    },
}

#[derive(Debug, Args)]
struct SpecInput {
    /// Branch spec literal (JSON) or a path to one.
    #[arg(long)]
    spec: Option<String>,
    /// Per-trial measures, comma separated (alternative to --spec).
    #[arg(long, value_delimiter = ',')]
    measures: Vec<String>,
    /// Number of repetitions N (with --measures).
    #[arg(short = 'n', long = "trials")]
    repetitions: Option<usize>,
    #[arg(long, default_value = "pnorm:2")]
    universe: String,
    /// Outcome to track, 1-based.
    #[arg(long, default_value_t = 1)]
    outcome: usize,
}

/// What a run produced; `main` prints it and exits with `code`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CliOutput {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

pub fn run<I, T>(args: I) -> CliOutput
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            return if code == 0 {
                CliOutput { code, stdout: text, stderr: String::new() }
            } else {
                CliOutput { code, stdout: String::new(), stderr: text }
            };
        }
    };
    match execute(&cli) {
        Ok(stdout) => CliOutput {
            code: 0,
            stdout,
            stderr: String::new(),
        },
        Err(e) => {
            let (code, kind) = match e.class() {
                ErrorClass::Parse => (2, "parse"),
                ErrorClass::Domain => (3, "domain"),
                ErrorClass::Resource => (4, "resource"),
            };
            let body = json!({"error": e.to_string(), "kind": kind, "exit_code": code});
            CliOutput {
                code,
                stdout: String::new(),
                stderr: format!("{body}\n"),
            }
        }
    }
}

fn enumeration_bound(cli: &Cli) -> Result<u64> {
    if let Some(b) = cli.bound {
        return Ok(b);
    }
    match std::env::var(BOUND_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| Error::Parse(format!("{BOUND_ENV}={v:?} is not a positive integer"))),
        Err(_) => Ok(DEFAULT_ENUMERATION_BOUND),
    }
}

/// Inline JSON when it looks like JSON, otherwise a file path.
fn read_input(input: &str) -> Result<String> {
    let t = input.trim_start();
    if t.starts_with('{') || t.starts_with('[') {
        return Ok(input.to_string());
    }
    std::fs::read_to_string(Path::new(input)).map_err(|e| Error::Parse(format!("cannot read {input:?}: {e}")))
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report serializes");
    s.push('\n');
    s
}

fn csv_string(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for row in rows {
        w.write_record(&row).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("flush")).expect("utf8")
}

fn fractions(v: &[Rational]) -> Vec<String> {
    v.iter().map(format_fraction).collect()
}

fn load_game(input: &GameInput) -> Result<game::Game> {
    let exponent = input.p.as_deref().map(Exponent::parse).transpose()?;
    let mode = if input.approx {
        NumberMode::Approximate {
            max_denominator: input.max_den,
        }
    } else {
        NumberMode::Exact
    };
    literal::parse_game(&read_input(&input.input)?, exponent.as_ref(), mode)
}

fn load_spec(input: &SpecInput) -> Result<BranchSpec> {
    if let Some(spec) = &input.spec {
        return literal::parse_branch_spec(&read_input(spec)?);
    }
    let n = input
        .repetitions
        .ok_or_else(|| Error::Parse("give --spec or --measures with -n".into()))?;
    if input.measures.is_empty() {
        return Err(Error::Parse("give --spec or --measures with -n".into()));
    }
    let measures = input
        .measures
        .iter()
        .map(|m| parse_fraction(m))
        .collect::<Result<Vec<_>>>()?;
    BranchSpec::new(UniverseKind::parse(&input.universe)?, measures, n)
}

fn outcome_index(input: &SpecInput, spec: &BranchSpec) -> Result<usize> {
    if input.outcome == 0 || input.outcome > spec.outcomes() {
        return Err(Error::OutcomeOutOfRange {
            index: input.outcome,
            len: spec.outcomes(),
        });
    }
    Ok(input.outcome - 1)
}

fn sequence_label(s: &[usize]) -> String {
    let labels: Vec<String> = s.iter().map(|i| (i + 1).to_string()).collect();
    format!("({})", labels.join(","))
}

fn execute(cli: &Cli) -> Result<String> {
    match &cli.command {
        Command::Value { game, trace } => cmd_value(load_game(game)?, *trace),
        Command::Symmetrize { game, max_rows, replay } => cmd_symmetrize(load_game(game)?, *max_rows, replay.as_deref()),
        Command::Worlds { action } => cmd_worlds(cli, action),
        Command::Oncetwice { c1, c2, universe } => {
            let universe = UniverseKind::parse(universe)?;
            let probs = sequential::once_or_twice(&parse_fraction(c1)?, &parse_fraction(c2)?, &universe)?;
            let classes = ["(1)", "(2,1)", "(2,2)"];
            match cli.format.unwrap_or(Format::Json) {
                Format::Json => Ok(to_json(&json!({
                    "universe": universe.name(),
                    "classes": classes,
                    "proportions": fractions(probs.entries()),
                }))),
                Format::Csv => Ok(csv_string(
                    &["world_class", "proportion", "proportion_float"],
                    classes.iter().zip(probs.entries()).map(|(c, p)| {
                        vec![c.to_string(), format_fraction(p), to_f64(p).to_string()]
                    }),
                )),
            }
        }
        Command::Reduce { input, universe, coarse } => {
            let universe = UniverseKind::parse(universe)?;
            let g = literal::parse_sequential(&read_input(input)?, NumberMode::Exact)?;
            let form = if *coarse { ReductionForm::Coarse } else { ReductionForm::Expanded };
            let flat = sequential::reduce_sequential(&g, &universe, form)?;
            let v = sequential::universe_value(&flat, &universe)?;
            Ok(to_json(&json!({
                "universe": universe.name(),
                "game": literal::game_literal(&flat),
                "value": format_fraction(&v),
                "value_float": to_f64(&v),
            })))
        }
        Command::Substitution { input, universe } => {
            let universe = UniverseKind::parse(universe)?;
            let g = literal::parse_sequential(&read_input(input)?, NumberMode::Exact)?;
            Ok(to_json(&sequential::check_substitution(&g, &universe)?))
        }
        Command::Dutchbook { c1, c2, stake, coin } => {
            let stake = parse_fraction(stake)?;
            let ledger = if *coin {
                sequential::coin_dutch_book(&stake)
            } else {
                sequential::dutch_book_demo(&parse_fraction(c1)?, &parse_fraction(c2)?, &stake)?
            };
            match cli.format.unwrap_or(Format::Csv) {
                Format::Json => Ok(to_json(&ledger)),
                Format::Csv => Ok(csv_string(
                    &["world_class", "measure", "payoff"],
                    ledger.rows.iter().map(|r| {
                        vec![r.world_class.clone(), format_fraction(&r.measure), format_fraction(&r.payoff)]
                    }),
                )),
            }
        }
        Command::Normcheck { norm } => Ok(to_json(&norm_report(norm_by_name(norm)?.as_ref()))),
        Command::Axioms { p, trials } => {
            let exponent = Exponent::parse(p)?;
            let reports: Vec<_> = Axiom::ALL
                .iter()
                .map(|&a| check_axiom(a, &exponent, *trials, cli.seed))
                .collect();
            Ok(to_json(&reports))
        }
        Command::Obstruct { input, depth } => {
            let g = literal::parse_game(&read_input(input)?, Some(&Exponent::Max), NumberMode::Exact)?;
            let w = fine_graining::max_norm_obstruction(&g, *depth)?;
            Ok(to_json(&json!({
                "depth": w.depth,
                "states_explored": w.states_explored,
                "symmetric_found": w.symmetric_found,
                "class_maxima": fractions(&w.class_maxima),
                "invariant_held": w.invariant_held,
                "obstruction_confirmed": w.confirmed(),
            })))
        }
    }
}

fn cmd_value(g: game::Game, want_trace: bool) -> Result<String> {
    let v = game::value(&g)?;
    let probs = game::subjective_probabilities(&g)?;
    let mut report = json!({
        "p": g.exponent().to_string(),
        "value": format_fraction(&v),
        "value_float": to_f64(&v),
        "probabilities": fractions(probs.entries()),
    });
    if want_trace {
        let (_, trace) = fine_graining::symmetrize(&g, DEFAULT_MAX_ROWS)?;
        report["trace"] = serde_json::to_value(literal::trace_report(&trace)).expect("serializes");
    }
    Ok(to_json(&report))
}

fn cmd_symmetrize(g: game::Game, max_rows: u64, replay: Option<&str>) -> Result<String> {
    if let Some(trace) = replay {
        let steps = literal::parse_trace(&read_input(trace)?, g.exponent())?;
        let out = fine_graining::replay(&g, &steps)?;
        return Ok(to_json(&json!({
            "game": literal::game_literal(&out),
            "symmetric": out.is_symmetric(),
            "value": format_fraction(&game::value(&out)?),
        })));
    }
    let (sym, trace) = fine_graining::symmetrize(&g, max_rows)?;
    let v = game::value_symmetric(&sym)?;
    Ok(to_json(&json!({
        "game": literal::game_literal(&sym),
        "trace": literal::trace_report(&trace),
        "value": format_fraction(&v),
        "value_float": to_f64(&v),
    })))
}

fn cmd_worlds(cli: &Cli, action: &WorldsAction) -> Result<String> {
    let bound = enumeration_bound(cli)?;
    match action {
        WorldsAction::Enumerate(input) => {
            let spec = load_spec(input)?;
            let seqs = world_tree::enumerate(&spec, bound)?;
            let total = num_traits::pow(spec.trial_total(), spec.repetitions());
            let rows: Vec<(String, Rational, Rational)> = seqs
                .iter()
                .map(|s| (sequence_label(&s.sequence), s.measure.clone(), &s.measure / &total))
                .collect();
            match cli.format.unwrap_or(Format::Csv) {
                Format::Csv => Ok(csv_string(
                    &["sequence", "measure", "proportion", "proportion_float"],
                    rows.iter().map(|(s, m, p)| {
                        vec![s.clone(), format_fraction(m), format_fraction(p), to_f64(p).to_string()]
                    }),
                )),
                Format::Json => Ok(to_json(&json!({
                    "N": spec.repetitions(),
                    "sequences": rows.iter().map(|(s, m, p)| json!({
                        "sequence": s, "measure": format_fraction(m), "proportion": format_fraction(p)
                    })).collect::<Vec<_>>(),
                }))),
            }
        }
        WorldsAction::Freq(input) => {
            let spec = load_spec(input)?;
            let outcome = outcome_index(input, &spec)?;
            let d = world_tree::frequency_distribution(&spec, outcome, bound)?;
            let n = Rational::from_integer(d.repetitions.into());
            match cli.format.unwrap_or(Format::Csv) {
                Format::Csv => Ok(csv_string(
                    &["k", "k_over_N", "mass_exact", "mass_float"],
                    d.masses.iter().enumerate().map(|(k, m)| {
                        let kn = Rational::from_integer(k.into()) / &n;
                        vec![k.to_string(), format_fraction(&kn), format_fraction(m), to_f64(m).to_string()]
                    }),
                )),
                Format::Json => Ok(to_json(&json!({
                    "N": d.repetitions,
                    "outcome": outcome + 1,
                    "share": format_fraction(&d.share),
                    "masses": fractions(&d.masses),
                    "enumeration_verified": d.enumeration_verified,
                }))),
            }
        }
        WorldsAction::Hoeffding { spec: input, epsilon } => {
            let spec = load_spec(input)?;
            let outcome = outcome_index(input, &spec)?;
            let report = world_tree::hoeffding_check(&spec, outcome, &parse_fraction(epsilon)?)?;
            Ok(to_json(&report))
        }
        WorldsAction::Sample { spec: input, runs } => {
            let spec = load_spec(input)?;
            let outcome = outcome_index(input, &spec)?;
            let h = world_tree::sample_frequencies(&spec, outcome, *runs, cli.seed)?;
            let n = Rational::from_integer(h.repetitions.into());
            match cli.format.unwrap_or(Format::Csv) {
                Format::Csv => Ok(csv_string(
                    &["k", "k_over_N", "count", "fraction"],
                    h.counts.iter().enumerate().map(|(k, c)| {
                        let kn = Rational::from_integer(k.into()) / &n;
                        vec![
                            k.to_string(),
                            format_fraction(&kn),
                            c.to_string(),
                            (*c as f64 / h.runs as f64).to_string(),
                        ]
                    }),
                )),
                Format::Json => Ok(to_json(&json!({
                    "N": h.repetitions,
                    "runs": h.runs,
                    "seed": cli.seed,
                    "counts": h.counts,
                    "mean_frequency": h.mean_frequency(),
                }))),
            }
        }
    }
}
