use branchworlds::fine_graining::{apply_fine_grain, symmetrize, value_via_symmetrization, FineGrainStep};
use branchworlds::fraction::{frac, int, Rational};
use branchworlds::game::{
    scale_coefficients, subjective_probabilities, value, value_p_born, ExactCoefficient, Exponent, Game, Row,
};
use branchworlds::sequential::{
    check_substitution, reduce_sequential, sequential_value, ReductionForm, SequentialGame, SequentialRow,
};
use branchworlds::world_tree::{proportion, BranchSpec, UniverseKind};
use num_traits::{One, Signed};
use proptest::prelude::*;

fn rational() -> impl Strategy<Value = Rational> {
    (-60i64..=60, 1i64..=12).prop_map(|(n, d)| frac(n, d))
}

fn magnitude() -> impl Strategy<Value = Rational> {
    (1i64..=20, 1i64..=12).prop_map(|(n, d)| frac(n, d))
}

fn phase() -> impl Strategy<Value = Rational> {
    (0i64..12).prop_map(|k| frac(k, 12))
}

fn exponent() -> impl Strategy<Value = Exponent> {
    prop_oneof![Just(int(1)), Just(frac(3, 2)), Just(int(2)), Just(int(3)), Just(frac(7, 3))]
        .prop_map(|p| Exponent::finite(p).unwrap())
}

fn game() -> impl Strategy<Value = Game> {
    (exponent(), prop::collection::vec((magnitude(), phase(), rational()), 1..=5)).prop_map(|(p, rows)| {
        let rows = rows
            .into_iter()
            .map(|(m, ph, r)| Row::new(ExactCoefficient::new(m, ph).unwrap(), r))
            .collect();
        Game::new(p, rows).unwrap()
    })
}

/// A game plus a split of one of its rows into parts with the given weights.
fn game_and_split() -> impl Strategy<Value = (Game, FineGrainStep)> {
    (game(), any::<prop::sample::Index>(), prop::collection::vec((1i64..=9, phase()), 1..=4)).prop_map(
        |(g, idx, weights)| {
            let row = idx.index(g.len());
            let mag = g.rows()[row].coeff.mag_p().clone();
            let total: i64 = weights.iter().map(|(w, _)| w).sum();
            let parts = weights
                .into_iter()
                .map(|(w, ph)| ExactCoefficient::new(&mag * frac(w, total), ph).unwrap())
                .collect();
            (g, FineGrainStep::new(row, parts))
        },
    )
}

fn rewards(g: &Game) -> Vec<Rational> {
    g.rewards().cloned().collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn fine_graining_preserves_value((g, step) in game_and_split()) {
        let finer = apply_fine_grain(&g, &step).unwrap();
        prop_assert_eq!(value(&finer).unwrap(), value(&g).unwrap());
    }

    #[test]
    fn symmetrization_agrees_with_born(g in game()) {
        prop_assert_eq!(value_via_symmetrization(&g, 200_000).unwrap(), value_p_born(&g).unwrap());
        if let Ok((sym, trace)) = symmetrize(&g, 20_000) {
            prop_assert!(sym.is_symmetric());
            let rows: usize = trace.multiplicities.iter().map(|m| usize::try_from(m).unwrap()).sum();
            prop_assert_eq!(rows, sym.len());
        }
    }

    #[test]
    fn probabilities_normalize_and_reconstruct(g in game()) {
        let probs = subjective_probabilities(&g).unwrap();
        prop_assert!(probs.entries().iter().all(|p| !p.is_negative()));
        prop_assert_eq!(probs.entries().iter().sum::<Rational>(), Rational::one());
        prop_assert_eq!(probs.expectation(&rewards(&g)), value(&g).unwrap());
    }

    #[test]
    fn value_is_affine_in_rewards(g in game(), shift in rational(), scale in rational()) {
        let moved: Vec<Rational> = rewards(&g).iter().map(|r| r * &scale + &shift).collect();
        let h = g.with_rewards(&moved).unwrap();
        prop_assert_eq!(value(&h).unwrap(), value(&g).unwrap() * &scale + &shift);
    }

    #[test]
    fn value_is_additive(g in game(), extra in prop::collection::vec(rational(), 5)) {
        let other: Vec<Rational> = extra[..g.len()].to_vec();
        let sum: Vec<Rational> = rewards(&g).iter().zip(&other).map(|(a, b)| a + b).collect();
        let lhs = value(&g.with_rewards(&sum).unwrap()).unwrap();
        let rhs = value(&g).unwrap() + value(&g.with_rewards(&other).unwrap()).unwrap();
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn value_lies_between_extreme_rewards(g in game()) {
        let v = value(&g).unwrap();
        let r = rewards(&g);
        prop_assert!(r.iter().min().unwrap() <= &v && &v <= r.iter().max().unwrap());
    }

    #[test]
    fn value_ignores_order_and_scale(g in game(), factor in magnitude(), seed in any::<u64>()) {
        let mut perm: Vec<usize> = (0..g.len()).collect();
        let n = perm.len();
        for i in (1..n).rev() {
            perm.swap(i, (seed as usize).wrapping_mul(i + 7) % (i + 1));
        }
        prop_assert_eq!(value(&g.permuted(&perm).unwrap()).unwrap(), value(&g).unwrap());
        prop_assert_eq!(value(&scale_coefficients(&g, &factor).unwrap()).unwrap(), value(&g).unwrap());
    }

    #[test]
    fn max_rule_is_mean_over_largest(rows in prop::collection::vec((1i64..=4, rational()), 1..=5)) {
        let pairs: Vec<(Rational, Rational)> = rows.iter().map(|(m, r)| (int(*m), r.clone())).collect();
        let g = Game::from_pairs(Exponent::Max, &pairs).unwrap();
        let top = rows.iter().map(|(m, _)| *m).max().unwrap();
        let best: Vec<&Rational> = rows.iter().filter(|(m, _)| *m == top).map(|(_, r)| r).collect();
        let mean = best.iter().copied().sum::<Rational>() / int(best.len() as i64);
        prop_assert_eq!(value(&g).unwrap(), mean);
    }

    #[test]
    fn sequence_proportions_sum_to_one(measures in prop::collection::vec(magnitude(), 2..=3), n in 1usize..=5) {
        let spec = BranchSpec::new(UniverseKind::PNorm(int(2)), measures.clone(), n).unwrap();
        let k = measures.len();
        let mut total = Rational::from_integer(0.into());
        for code in 0..k.pow(n as u32) {
            let seq: Vec<usize> = (0..n).map(|t| code / k.pow(t as u32) % k).collect();
            total += proportion(&spec, &seq).unwrap();
        }
        prop_assert_eq!(total, Rational::one());
    }
}

fn sequential_game(depth: u32) -> BoxedStrategy<SequentialGame> {
    let terminal = (magnitude(), phase(), rational())
        .prop_map(|(m, ph, r)| SequentialRow::terminal(ExactCoefficient::new(m, ph).unwrap(), r));
    if depth == 0 {
        return prop::collection::vec(terminal, 1..=3)
            .prop_map(|rows| SequentialGame::new(rows).unwrap())
            .boxed();
    }
    let sub = (magnitude(), phase(), sequential_game(depth - 1))
        .prop_map(|(m, ph, g)| SequentialRow::subgame(ExactCoefficient::new(m, ph).unwrap(), g));
    prop::collection::vec(prop_oneof![2 => terminal, 1 => sub], 1..=3)
        .prop_map(|rows| SequentialGame::new(rows).unwrap())
        .boxed()
}

fn reversed(g: &SequentialGame) -> SequentialGame {
    SequentialGame::new(g.rows().iter().rev().cloned().collect()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn substitution_holds_in_p_norm_universes(g in sequential_game(2), p in prop_oneof![Just(int(1)), Just(int(2)), Just(int(3))]) {
        let universe = UniverseKind::PNorm(p);
        let report = check_substitution(&g, &universe).unwrap();
        prop_assert!(report.holds, "{:?}", report.witness);
    }

    #[test]
    fn reduction_forms_share_a_value(g in sequential_game(2)) {
        let universe = UniverseKind::PNorm(int(2));
        let coarse = reduce_sequential(&g, &universe, ReductionForm::Coarse).unwrap();
        let expanded = reduce_sequential(&g, &universe, ReductionForm::Expanded).unwrap();
        prop_assert_eq!(value_p_born(&coarse).unwrap(), value_p_born(&expanded).unwrap());
    }

    #[test]
    fn sequential_value_ignores_row_order(g in sequential_game(2)) {
        for universe in [UniverseKind::PNorm(int(2)), UniverseKind::PNorm(frac(3, 2))] {
            prop_assert_eq!(sequential_value(&g, &universe).unwrap(), sequential_value(&reversed(&g), &universe).unwrap());
        }
    }
}
