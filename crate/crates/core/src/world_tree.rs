//! Repeated branchings: world counts, product measures, frequency laws.
//!
//! A [`BranchSpec`] fixes a per-trial measure `Lambda_i` over `n` outcomes
//! and a repetition count `N`. An outcome sequence `s` then carries measure
//! `Lambda_s = prod_t Lambda_{s_t}`, and its share of the total is
//! `lambda_s = Lambda_s / (sum_i Lambda_i)^N`. Outcome indices are 0-based.

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fraction::{format_fraction, is_integer, lcm_of_denominators, serde_fraction, to_f64, Rational};
use crate::sampling;

pub const DEFAULT_ENUMERATION_BOUND: u64 = 10_000_000;

/// How branching creates worlds.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum UniverseKind {
    /// Branching multiplies worlds; measures are literal world counts.
    Kent,
    /// A fixed pool of worlds is partitioned at each branching.
    ReverseKent,
    /// Many-worlds with a conserved p-norm; measures are `|alpha|^p`.
    PNorm(Rational),
}

impl UniverseKind {
    pub fn parse(text: &str) -> Result<Self> {
        let t = text.trim().to_ascii_lowercase();
        match t.as_str() {
            "kent" => Ok(UniverseKind::Kent),
            "reverse-kent" | "reversekent" | "reverse_kent" => Ok(UniverseKind::ReverseKent),
            "mw" | "many-worlds" => Ok(UniverseKind::PNorm(Rational::from_integer(2.into()))),
            _ => {
                let p = t
                    .strip_prefix("pnorm:")
                    .or_else(|| t.strip_prefix("p:"))
                    .or_else(|| t.strip_prefix("pnorm"))
                    .ok_or_else(|| Error::Parse(format!("unknown universe {text:?}")))?;
                let p = crate::fraction::parse_fraction(p)?;
                if p < Rational::one() {
                    return Err(Error::InvalidExponent(format_fraction(&p)));
                }
                Ok(UniverseKind::PNorm(p))
            }
        }
    }

    pub fn name(&self) -> String {
        match self {
            UniverseKind::Kent => "kent".into(),
            UniverseKind::ReverseKent => "reverse-kent".into(),
            UniverseKind::PNorm(p) => format!("pnorm:{}", format_fraction(p)),
        }
    }

    pub fn counts_worlds(&self) -> bool {
        matches!(self, UniverseKind::Kent | UniverseKind::ReverseKent)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BranchSpec {
    universe: UniverseKind,
    measures: Vec<Rational>,
    repetitions: usize,
}

impl BranchSpec {
    pub fn new(universe: UniverseKind, measures: Vec<Rational>, repetitions: usize) -> Result<Self> {
        if let Some(m) = measures.iter().find(|m| m.is_negative()) {
            return Err(Error::NegativeMultiplicity(format_fraction(m)));
        }
        if !measures.iter().any(|m| m.is_positive()) {
            return Err(Error::ZeroTotal);
        }
        if repetitions == 0 {
            return Err(Error::ZeroRepetitions);
        }
        if universe.counts_worlds() {
            if let Some(m) = measures.iter().find(|m| !is_integer(m)) {
                return Err(Error::NonIntegerMultiplicity(format_fraction(m)));
            }
        }
        Ok(Self {
            universe,
            measures,
            repetitions,
        })
    }

    pub fn universe(&self) -> &UniverseKind {
        &self.universe
    }

    pub fn measures(&self) -> &[Rational] {
        &self.measures
    }

    pub fn outcomes(&self) -> usize {
        self.measures.len()
    }

    pub fn repetitions(&self) -> usize {
        self.repetitions
    }

    pub fn with_repetitions(&self, repetitions: usize) -> Result<Self> {
        Self::new(self.universe.clone(), self.measures.clone(), repetitions)
    }

    pub fn trial_total(&self) -> Rational {
        self.measures.iter().sum()
    }

    /// Single-trial share of `outcome`.
    pub fn single_trial_share(&self, outcome: usize) -> Result<Rational> {
        self.check_outcome(outcome)?;
        Ok(&self.measures[outcome] / self.trial_total())
    }

    /// `n^N`, the number of outcome sequences.
    pub fn sequence_count(&self) -> BigInt {
        num_traits::pow(BigInt::from(self.outcomes()), self.repetitions)
    }

    fn check_outcome(&self, outcome: usize) -> Result<()> {
        if outcome >= self.outcomes() {
            return Err(Error::OutcomeOutOfRange {
                index: outcome,
                len: self.outcomes(),
            });
        }
        Ok(())
    }

    fn check_sequence(&self, s: &[usize]) -> Result<()> {
        if s.len() != self.repetitions {
            return Err(Error::InvalidSequence(format!(
                "length {} but N = {}",
                s.len(),
                self.repetitions
            )));
        }
        if let Some(bad) = s.iter().find(|&&i| i >= self.outcomes()) {
            return Err(Error::InvalidSequence(format!("outcome {bad} out of range")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SequenceMeasure {
    pub sequence: Vec<usize>,
    #[serde(with = "serde_fraction")]
    pub measure: Rational,
}

/// Number of Kent worlds with outcome sequence `s`: `prod_t m_{s_t}`.
pub fn world_count(spec: &BranchSpec, s: &[usize]) -> Result<BigInt> {
    if spec.universe != UniverseKind::Kent {
        return Err(Error::WrongUniverse);
    }
    spec.check_sequence(s)?;
    Ok(s.iter().map(|&i| spec.measures[i].to_integer()).product())
}

pub fn total_world_count(spec: &BranchSpec) -> Result<BigInt> {
    if spec.universe != UniverseKind::Kent {
        return Err(Error::WrongUniverse);
    }
    Ok(num_traits::pow(spec.trial_total().to_integer(), spec.repetitions))
}

/// `Lambda_s`, the product of per-trial measures.
pub fn sequence_measure(spec: &BranchSpec, s: &[usize]) -> Result<Rational> {
    spec.check_sequence(s)?;
    Ok(s.iter().map(|&i| spec.measures[i].clone()).product())
}

/// `lambda_s` in closed form, using `sum_s' Lambda_s' = (sum_i Lambda_i)^N`.
pub fn proportion(spec: &BranchSpec, s: &[usize]) -> Result<Rational> {
    let m = sequence_measure(spec, s)?;
    Ok(m / num_traits::pow(spec.trial_total(), spec.repetitions))
}

/// Kent proportion as a ratio of world counts.
pub fn proportion_by_count(spec: &BranchSpec, s: &[usize]) -> Result<Rational> {
    Ok(Rational::new(world_count(spec, s)?, total_world_count(spec)?))
}

fn check_bound(spec: &BranchSpec, bound: u64) -> Result<()> {
    let count = spec.sequence_count();
    if count > BigInt::from(bound) {
        return Err(Error::EnumerationTooLarge {
            requested: count.to_string(),
            bound,
        });
    }
    Ok(())
}

/// Visits every sequence in lexicographic order with its measure, built up
/// trial by trial from cached prefix products.
pub fn for_each_sequence(
    spec: &BranchSpec,
    bound: u64,
    mut visit: impl FnMut(&[usize], &Rational),
) -> Result<()> {
    check_bound(spec, bound)?;
    let n = spec.outcomes();
    let len = spec.repetitions;
    let mut seq = vec![0usize; len];
    // prefix[t] = product of the first t measures
    let mut prefix: Vec<Rational> = Vec::with_capacity(len + 1);
    prefix.push(Rational::one());
    for t in 0..len {
        let next = &prefix[t] * &spec.measures[seq[t]];
        prefix.push(next);
    }
    loop {
        visit(&seq, &prefix[len]);
        let Some(pos) = (0..len).rev().find(|&t| seq[t] + 1 < n) else {
            return Ok(());
        };
        seq[pos] += 1;
        seq[pos + 1..].fill(0);
        for t in pos..len {
            prefix[t + 1] = &prefix[t] * &spec.measures[seq[t]];
        }
    }
}

pub fn enumerate(spec: &BranchSpec, bound: u64) -> Result<Vec<SequenceMeasure>> {
    let mut out = Vec::new();
    for_each_sequence(spec, bound, |s, m| {
        out.push(SequenceMeasure {
            sequence: s.to_vec(),
            measure: m.clone(),
        })
    })?;
    Ok(out)
}

/// `lambda_s` by summing the measure of every sequence explicitly.
pub fn proportion_by_enumeration(spec: &BranchSpec, s: &[usize], bound: u64) -> Result<Rational> {
    spec.check_sequence(s)?;
    let mut total = Rational::zero();
    let mut own = Rational::zero();
    for_each_sequence(spec, bound, |seq, m| {
        total += m;
        if seq == s {
            own = m.clone();
        }
    })?;
    Ok(own / total)
}

/// Proportions of sequences grouped by how often `outcome` occurs,
/// by explicit enumeration.
///
/// Measures are scaled to integers by their common denominator; the walk
/// runs in `u128` when every partial sum fits and in `BigInt` otherwise.
pub fn grouped_enumeration(spec: &BranchSpec, outcome: usize, bound: u64) -> Result<Vec<Rational>> {
    spec.check_outcome(outcome)?;
    check_bound(spec, bound)?;
    let d = Rational::from_integer(lcm_of_denominators(spec.measures.iter()));
    let scaled: Vec<BigInt> = spec.measures.iter().map(|m| (m * &d).to_integer()).collect();
    let largest = scaled.iter().max().cloned().unwrap_or_default();
    let worst = num_traits::pow(largest, spec.repetitions) * spec.sequence_count();
    let groups: Vec<BigInt> = if worst <= BigInt::from(u128::MAX) {
        let small: Vec<u128> = scaled.iter().map(|m| m.to_u128().expect("fits")).collect();
        grouped_walk(&small, spec.repetitions, outcome, 1u128, |a, b| a * b)
            .into_iter()
            .map(BigInt::from)
            .collect()
    } else {
        grouped_walk(&scaled, spec.repetitions, outcome, BigInt::one(), |a, b| a * b)
    };
    let total: BigInt = groups.iter().sum();
    Ok(groups.into_iter().map(|g| Rational::new(g, total.clone())).collect())
}

/// Odometer walk over all sequences with cached prefix products, summing
/// sequence weights by the number of occurrences of `outcome`.
fn grouped_walk<T>(weights: &[T], len: usize, outcome: usize, one: T, mul: impl Fn(&T, &T) -> T) -> Vec<T>
where
    T: Clone + Zero + for<'a> std::ops::AddAssign<&'a T>,
{
    let n = weights.len();
    let mut groups = vec![T::zero(); len + 1];
    let mut seq = vec![0usize; len];
    let mut prefix = vec![one; len + 1];
    for t in 0..len {
        prefix[t + 1] = mul(&prefix[t], &weights[0]);
    }
    let mut hits = if outcome == 0 { len } else { 0 };
    loop {
        groups[hits] += &prefix[len];
        let Some(pos) = (0..len).rev().find(|&t| seq[t] + 1 < n) else {
            return groups;
        };
        hits -= seq[pos..].iter().filter(|&&i| i == outcome).count();
        seq[pos] += 1;
        seq[pos + 1..].fill(0);
        for t in pos..len {
            if seq[t] == outcome {
                hits += 1;
            }
            prefix[t + 1] = mul(&prefix[t], &weights[seq[t]]);
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FrequencyDistribution {
    pub repetitions: usize,
    pub outcome: usize,
    pub share: Rational,
    pub masses: Vec<Rational>,
    /// `Some(true)` when the masses were re-derived by enumeration and
    /// matched; `None` when enumeration was beyond the bound.
    pub enumeration_verified: Option<bool>,
}

pub fn binomial(n: usize, k: usize) -> BigInt {
    let k = k.min(n - k);
    (0..k).fold(BigInt::one(), |acc, i| acc * BigInt::from(n - i) / BigInt::from(i + 1))
}

/// `C(N, k) lambda^k (1 - lambda)^(N - k)` for `k = 0..=N`.
pub fn binomial_masses(share: &Rational, repetitions: usize) -> Vec<Rational> {
    let rest = Rational::one() - share;
    (0..=repetitions)
        .map(|k| {
            Rational::from_integer(binomial(repetitions, k))
                * num_traits::pow(share.clone(), k)
                * num_traits::pow(rest.clone(), repetitions - k)
        })
        .collect()
}

/// Exact distribution of the number of times `outcome` occurs in `N`
/// trials, cross-checked by enumeration when `n^N <= bound`.
pub fn frequency_distribution(spec: &BranchSpec, outcome: usize, bound: u64) -> Result<FrequencyDistribution> {
    let share = spec.single_trial_share(outcome)?;
    let masses = binomial_masses(&share, spec.repetitions);
    let enumeration_verified = match grouped_enumeration(spec, outcome, bound) {
        Ok(groups) => Some(groups == masses),
        Err(Error::EnumerationTooLarge { .. }) => None,
        Err(e) => return Err(e),
    };
    Ok(FrequencyDistribution {
        repetitions: spec.repetitions,
        outcome,
        share,
        masses,
        enumeration_verified,
    })
}

/// Slack added to the floating-point bound when comparing it with the
/// exact tail mass.
pub const HOEFFDING_SLACK: f64 = 1e-15;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HoeffdingReport {
    #[serde(rename = "N")]
    pub repetitions: usize,
    #[serde(with = "serde_fraction")]
    pub epsilon: Rational,
    #[serde(with = "serde_fraction")]
    pub tail_mass: Rational,
    pub bound: f64,
    pub holds: bool,
}

/// Exact mass of `|k/N - lambda| >= epsilon` against `2 exp(-2 N eps^2)`.
pub fn hoeffding_check(spec: &BranchSpec, outcome: usize, epsilon: &Rational) -> Result<HoeffdingReport> {
    if !epsilon.is_positive() {
        return Err(Error::NonpositiveEpsilon(format_fraction(epsilon)));
    }
    let share = spec.single_trial_share(outcome)?;
    let n = spec.repetitions;
    let nr = Rational::from_integer(n.into());
    let tail_mass: Rational = binomial_masses(&share, n)
        .into_iter()
        .enumerate()
        .filter(|(k, _)| (Rational::from_integer((*k).into()) / &nr - &share).abs() >= *epsilon)
        .map(|(_, m)| m)
        .sum();
    let eps = to_f64(epsilon);
    let bound = 2.0 * (-2.0 * n as f64 * eps * eps).exp();
    let holds = to_f64(&tail_mass) <= bound + HOEFFDING_SLACK;
    Ok(HoeffdingReport {
        repetitions: n,
        epsilon: epsilon.clone(),
        tail_mass,
        bound,
        holds,
    })
}

/// Histogram of how often `outcome` occurred across `runs` simulated
/// sequences of `N` trials.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FrequencySample {
    pub repetitions: usize,
    pub runs: u64,
    pub counts: Vec<u64>,
}

impl FrequencySample {
    pub fn mean_frequency(&self) -> f64 {
        let n = self.repetitions as f64;
        let total: f64 = self
            .counts
            .iter()
            .enumerate()
            .map(|(k, &c)| k as f64 / n * c as f64)
            .sum();
        total / self.runs as f64
    }

    /// Fraction of runs with `|k/N - target| >= epsilon`.
    pub fn deviation_fraction(&self, target: f64, epsilon: f64) -> f64 {
        let n = self.repetitions as f64;
        let hits: u64 = self
            .counts
            .iter()
            .enumerate()
            .filter(|(k, _)| (*k as f64 / n - target).abs() >= epsilon)
            .map(|(_, &c)| c)
            .sum();
        hits as f64 / self.runs as f64
    }
}

enum Sampler {
    Integer { cumulative: Vec<u64>, total: u64 },
    Float { cumulative: Vec<f64> },
}

impl Sampler {
    fn new(measures: &[Rational]) -> Self {
        let lcm = Rational::from_integer(lcm_of_denominators(measures));
        let weights: Option<Vec<u64>> = measures.iter().map(|m| (m * &lcm).to_integer().to_u64()).collect();
        if let Some(weights) = weights {
            let mut acc = 0u64;
            let cumulative: Option<Vec<u64>> = weights
                .iter()
                .map(|w| {
                    acc = acc.checked_add(*w)?;
                    Some(acc)
                })
                .collect();
            if let Some(cumulative) = cumulative {
                return Sampler::Integer { total: acc, cumulative };
            }
        }
        let total: f64 = measures.iter().map(to_f64).sum();
        let mut acc = 0.0;
        let cumulative = measures
            .iter()
            .map(|m| {
                acc += to_f64(m) / total;
                acc
            })
            .collect();
        Sampler::Float { cumulative }
    }

    fn draw(&self, rng: &mut impl Rng) -> usize {
        match self {
            Sampler::Integer { cumulative, total } => {
                let x = rng.random_range(0..*total);
                cumulative.partition_point(|&c| c <= x)
            }
            Sampler::Float { cumulative } => {
                let x: f64 = rng.random();
                cumulative.partition_point(|&c| c <= x).min(cumulative.len() - 1)
            }
        }
    }
}

/// Simulates `runs` independent sequences. Run `i` uses stream `i` of the
/// seed, so the histogram is independent of scheduling. Outcomes are drawn
/// with probability `Lambda_i / sum Lambda`, exactly when the integer
/// weights fit in 64 bits.
pub fn sample_frequencies(spec: &BranchSpec, outcome: usize, runs: u64, seed: u64) -> Result<FrequencySample> {
    spec.check_outcome(outcome)?;
    if runs == 0 {
        return Err(Error::InvalidArgument("runs must be at least 1".into()));
    }
    let sampler = Sampler::new(&spec.measures);
    let n = spec.repetitions;
    let counts = (0..runs)
        .into_par_iter()
        .map(|run| {
            let mut rng = sampling::stream(seed, run);
            let hits = (0..n).filter(|_| sampler.draw(&mut rng) == outcome).count();
            let mut hist = vec![0u64; n + 1];
            hist[hits] += 1;
            hist
        })
        .reduce(
            || vec![0u64; n + 1],
            |mut a, b| {
                a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                a
            },
        );
    Ok(FrequencySample {
        repetitions: n,
        runs,
        counts,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fraction::{frac, int};

    fn spec(u: UniverseKind, m: &[i64], n: usize) -> BranchSpec {
        BranchSpec::new(u, m.iter().map(|&x| int(x)).collect(), n).unwrap()
    }

    fn p2() -> UniverseKind {
        UniverseKind::PNorm(int(2))
    }

    #[test]
    fn construction_errors() {
        assert_eq!(BranchSpec::new(p2(), vec![int(0), int(0)], 2), Err(Error::ZeroTotal));
        assert_eq!(BranchSpec::new(p2(), vec![int(1)], 0), Err(Error::ZeroRepetitions));
        assert!(matches!(
            BranchSpec::new(p2(), vec![int(-1), int(2)], 1),
            Err(Error::NegativeMultiplicity(_))
        ));
        assert!(matches!(
            BranchSpec::new(UniverseKind::Kent, vec![frac(1, 2)], 1),
            Err(Error::NonIntegerMultiplicity(_))
        ));
    }

    #[test]
    fn world_counts() {
        let s = spec(UniverseKind::Kent, &[1, 2], 3);
        assert_eq!(world_count(&s, &[1, 1, 0]).unwrap(), BigInt::from(4));
        let s = spec(UniverseKind::Kent, &[3, 3], 5);
        assert_eq!(world_count(&s, &[0, 1, 1, 0, 1]).unwrap(), BigInt::from(243));
        let s = spec(UniverseKind::Kent, &[1, 2, 3], 4);
        assert_eq!(world_count(&s, &[2, 2, 1, 0]).unwrap(), BigInt::from(18));
        assert_eq!(world_count(&spec(p2(), &[1, 2], 1), &[0]), Err(Error::WrongUniverse));
        assert!(matches!(world_count(&s, &[0]), Err(Error::InvalidSequence(_))));
        assert!(matches!(world_count(&s, &[0, 0, 0, 3]), Err(Error::InvalidSequence(_))));
    }

    #[test]
    fn proportions() {
        let s = spec(p2(), &[1, 2], 2);
        assert_eq!(proportion(&s, &[1, 0]).unwrap(), frac(2, 9));
        assert_eq!(proportion_by_enumeration(&s, &[1, 0], 100).unwrap(), frac(2, 9));
        let fair = spec(p2(), &[1, 1], 6);
        assert_eq!(proportion(&fair, &[0, 1, 0, 1, 1, 1]).unwrap(), frac(1, 64));
        let kent = spec(UniverseKind::Kent, &[1, 2], 1);
        assert_eq!(proportion_by_count(&kent, &[1]).unwrap(), frac(2, 3));
    }

    #[test]
    fn enumeration_bound() {
        let s = spec(p2(), &[1, 1], 10);
        assert!(matches!(enumerate(&s, 1000), Err(Error::EnumerationTooLarge { .. })));
        assert_eq!(enumerate(&s, 1024).unwrap().len(), 1024);
    }

    #[test]
    fn distributions() {
        let d = frequency_distribution(&spec(p2(), &[1, 1], 2), 0, 100).unwrap();
        assert_eq!(d.masses, vec![frac(1, 4), frac(1, 2), frac(1, 4)]);
        let d = frequency_distribution(&spec(p2(), &[1, 2], 3), 0, 100).unwrap();
        assert_eq!(d.masses, vec![frac(8, 27), frac(12, 27), frac(6, 27), frac(1, 27)]);
        assert_eq!(d.enumeration_verified, Some(true));
        let d = frequency_distribution(&spec(UniverseKind::Kent, &[1, 2], 2), 0, 100).unwrap();
        assert_eq!(d.masses, vec![frac(4, 9), frac(4, 9), frac(1, 9)]);
        let big = frequency_distribution(&spec(p2(), &[1, 2], 40), 0, 1000).unwrap();
        assert_eq!(big.enumeration_verified, None);
        assert_eq!(big.masses.iter().sum::<Rational>(), int(1));
    }

    #[test]
    fn hoeffding_examples() {
        let s = spec(p2(), &[1, 1], 10);
        let r = hoeffding_check(&s, 0, &frac(1, 2)).unwrap();
        assert_eq!(r.tail_mass, frac(1, 512));
        assert!(r.holds);
        let r = hoeffding_check(&s, 0, &frac(3, 2)).unwrap();
        assert_eq!(r.tail_mass, int(0));
        assert!(r.holds);
        assert!(matches!(hoeffding_check(&s, 0, &int(0)), Err(Error::NonpositiveEpsilon(_))));
    }

    #[test]
    fn hoeffding_report_json_shape() {
        let s = spec(p2(), &[1, 1], 10);
        let json = serde_json::to_value(hoeffding_check(&s, 0, &frac(1, 2)).unwrap()).unwrap();
        assert_eq!(json["N"], 10);
        assert_eq!(json["epsilon"], "1/2");
        assert_eq!(json["tail_mass"], "1/512");
        assert_eq!(json["holds"], true);
    }

    #[test]
    fn single_run_sample() {
        let s = spec(p2(), &[1, 3], 7);
        let h = sample_frequencies(&s, 1, 1, 0).unwrap();
        assert_eq!(h.counts.iter().sum::<u64>(), 1);
        assert_eq!(h.counts.len(), 8);
        assert_eq!(sample_frequencies(&s, 1, 5, 3), sample_frequencies(&s, 1, 5, 3));
    }

    #[test]
    fn float_sampler_path() {
        // weights too large for u64 switch to the float sampler
        let huge = Rational::from_integer(num_traits::pow(BigInt::from(10), 30));
        let s = BranchSpec::new(p2(), vec![huge.clone(), huge], 20).unwrap();
        let h = sample_frequencies(&s, 0, 2000, 1).unwrap();
        assert!((h.mean_frequency() - 0.5).abs() < 0.02);
    }

    #[test]
    fn universe_names_parse_back() {
        for u in [UniverseKind::Kent, UniverseKind::ReverseKent, UniverseKind::PNorm(frac(3, 2))] {
            assert_eq!(UniverseKind::parse(&u.name()).unwrap(), u);
        }
        assert!(UniverseKind::parse("pnorm:1/2").is_err());
        assert!(UniverseKind::parse("bohm").is_err());
    }
}
