use branchworlds::fraction::{frac, int, to_f64, Rational};
use branchworlds::sequential::{once_or_twice, once_or_twice_counts};
use branchworlds::world_tree::{
    enumerate, frequency_distribution, grouped_enumeration, hoeffding_check, proportion, proportion_by_count,
    sample_frequencies, BranchSpec, UniverseKind,
};
use branchworlds::Error;
use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};

fn choose(n: usize, k: usize) -> BigInt {
    (0..k).fold(BigInt::one(), |acc, i| acc * BigInt::from(n - i) / BigInt::from(i + 1))
}

/// Masses of Binomial(n, q), computed term by term.
fn binomial(q: &Rational, n: usize) -> Vec<Rational> {
    let r = Rational::one() - q;
    (0..=n)
        .map(|k| Rational::from_integer(choose(n, k)) * num_traits::pow(q.clone(), k) * num_traits::pow(r.clone(), n - k))
        .collect()
}

fn tail(q: &Rational, n: usize, eps: &Rational) -> Rational {
    let nr = Rational::from_integer(n.into());
    binomial(q, n)
        .into_iter()
        .enumerate()
        .filter(|(k, _)| (Rational::from_integer((*k).into()) / &nr - q).abs() >= *eps)
        .map(|(_, m)| m)
        .sum()
}

fn spec(universe: UniverseKind, measures: &[i64], n: usize) -> BranchSpec {
    BranchSpec::new(universe, measures.iter().map(|&m| int(m)).collect(), n).unwrap()
}

fn mw() -> UniverseKind {
    UniverseKind::PNorm(int(2))
}

#[test]
fn binomial_tail_for_three_seven() {
    let s = spec(mw(), &[3, 7], 20);
    let eps = frac(1, 5);
    let report = hoeffding_check(&s, 0, &eps).unwrap();
    assert_eq!(report.tail_mass, tail(&frac(3, 10), 20, &eps));
    assert!(report.holds);
    let d = frequency_distribution(&s, 0, 1 << 12).unwrap();
    assert_eq!(d.enumeration_verified, None);
    assert_eq!(d.masses, binomial(&frac(3, 10), 20));
    assert_eq!(d.masses.iter().sum::<Rational>(), Rational::one());
}

#[test]
fn small_hoeffding_example() {
    let r = hoeffding_check(&spec(mw(), &[1, 1], 10), 0, &frac(1, 2)).unwrap();
    assert_eq!(r.tail_mass, frac(1, 512));
}

#[test]
fn hoeffding_holds_on_every_n_up_to_sixty() {
    for measures in [[1, 1], [1, 2], [3, 7], [1, 9]] {
        for n in 1..=60 {
            for eps in [frac(1, 20), frac(1, 10), frac(1, 5), frac(1, 3), frac(1, 2)] {
                let r = hoeffding_check(&spec(mw(), &measures, n), 0, &eps).unwrap();
                let e = to_f64(&eps);
                assert!(to_f64(&r.tail_mass) <= 2.0 * (-2.0 * n as f64 * e * e).exp() + 1e-15);
                assert!(r.holds, "{measures:?} N={n} eps={eps}");
            }
        }
    }
}

#[test]
fn tail_mass_shrinks_as_n_quadruples() {
    for measures in [[1, 1], [1, 2], [3, 7]] {
        for eps in [frac(1, 10), frac(1, 5)] {
            for n in [5, 10, 15] {
                let small = hoeffding_check(&spec(mw(), &measures, n), 0, &eps).unwrap().tail_mass;
                let large = hoeffding_check(&spec(mw(), &measures, 4 * n), 0, &eps).unwrap().tail_mass;
                assert!(large <= small, "{measures:?} eps={eps}: N={n} -> {}", 4 * n);
            }
        }
    }
}

#[test]
fn grouped_enumeration_matches_closed_form() {
    for measures in [[1, 2], [2, 3], [5, 1]] {
        for n in 1..=10 {
            let s = spec(mw(), &measures, n);
            let q = frac(measures[0], measures[0] + measures[1]);
            assert_eq!(grouped_enumeration(&s, 0, 1 << 20).unwrap(), binomial(&q, n));
        }
    }
}

#[test]
fn three_outcome_enumeration_sums_to_one() {
    let s = spec(UniverseKind::Kent, &[1, 2, 3], 4);
    let seqs = enumerate(&s, 1000).unwrap();
    assert_eq!(seqs.len(), 81);
    let total: Rational = seqs.iter().map(|q| q.measure.clone()).sum();
    assert_eq!(total, num_traits::pow(int(6), 4));
    for q in &seqs {
        assert_eq!(proportion(&s, &q.sequence).unwrap(), proportion_by_count(&s, &q.sequence).unwrap());
    }
}

#[test]
fn enumeration_bound_is_enforced() {
    let s = spec(mw(), &[1, 1], 10);
    assert!(matches!(enumerate(&s, 1000), Err(Error::EnumerationTooLarge { .. })));
    assert_eq!(enumerate(&s, 1024).unwrap().len(), 1024);
}

/// Lists every world after the two stages, one entry per world.
fn world_list(c1: u64, c2: u64) -> Vec<Vec<u8>> {
    let mut worlds = Vec::new();
    for _ in 0..c1 {
        worlds.push(vec![1]);
    }
    for _ in 0..c2 {
        for _ in 0..c1 {
            worlds.push(vec![2, 1]);
        }
        for _ in 0..c2 {
            worlds.push(vec![2, 2]);
        }
    }
    worlds
}

#[test]
fn once_or_twice_kent_matches_world_list() {
    for (c1, c2) in [(1, 1), (1, 2), (2, 1), (3, 5), (4, 4)] {
        let worlds = world_list(c1, c2);
        let total = Rational::from_integer(worlds.len().into());
        let share = |class: &[u8]| Rational::from_integer(worlds.iter().filter(|w| w.as_slice() == class).count().into()) / &total;
        let expected = vec![share(&[1]), share(&[2, 1]), share(&[2, 2])];
        let got = once_or_twice(&int(c1 as i64), &int(c2 as i64), &UniverseKind::Kent).unwrap();
        assert_eq!(got.entries(), expected.as_slice(), "({c1},{c2})");
        let counts = once_or_twice_counts(&int(c1 as i64), &int(c2 as i64), &UniverseKind::Kent).unwrap();
        let listed = [1, 2, 3].map(|i| match i {
            1 => worlds.iter().filter(|w| w.len() == 1).count(),
            2 => worlds.iter().filter(|w| w == &&vec![2, 1]).count(),
            _ => worlds.iter().filter(|w| w == &&vec![2, 2]).count(),
        });
        assert_eq!(counts, listed.map(BigInt::from));
    }
}

#[test]
fn once_or_twice_measure_universes() {
    for u in [UniverseKind::PNorm(int(2)), UniverseKind::ReverseKent, UniverseKind::PNorm(int(1))] {
        let got = once_or_twice(&int(1), &int(2), &u).unwrap();
        assert_eq!(got.entries(), [frac(1, 3), frac(2, 9), frac(4, 9)], "{}", u.name());
    }
}

#[test]
fn fair_coin_sample_mean() {
    let h = sample_frequencies(&spec(mw(), &[1, 1], 100), 0, 10_000, 42).unwrap();
    assert_eq!(h.counts.iter().sum::<u64>(), 10_000);
    assert!((h.mean_frequency() - 0.5).abs() < 0.02, "{}", h.mean_frequency());
}

#[test]
fn biased_sample_deviations_are_rare() {
    let h = sample_frequencies(&spec(mw(), &[1, 2], 50), 0, 10_000, 7).unwrap();
    let bound = 2.0 * (-4.0f64).exp();
    let frac_dev = h.deviation_fraction(1.0 / 3.0, 0.2);
    assert!(frac_dev < bound, "{frac_dev} >= {bound}");
}

#[test]
fn sampling_is_reproducible_and_rational_measures_work() {
    let s = BranchSpec::new(mw(), vec![frac(1, 3), frac(1, 7)], 30).unwrap();
    let a = sample_frequencies(&s, 1, 2000, 9).unwrap();
    let b = sample_frequencies(&s, 1, 2000, 9).unwrap();
    assert_eq!(a.counts, b.counts);
    assert!((a.mean_frequency() - 0.3).abs() < 0.02);
}

#[test]
fn zero_measure_outcome_never_occurs() {
    let s = BranchSpec::new(mw(), vec![int(0), int(1)], 8).unwrap();
    let d = frequency_distribution(&s, 0, 1 << 10).unwrap();
    assert_eq!(d.masses[0], Rational::one());
    assert!(d.masses[1..].iter().all(Zero::is_zero));
}
