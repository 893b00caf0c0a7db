//! Cross-cutting properties tying the observation model, the coverage
//! objective, and the solvers together on randomized instances.

use blds_core::bitset::all_subsets;
use blds_core::harness::{gen_instance, GenConfig, GenMode};
use blds_core::model::{
    equivalence_partition, indist_set, kl_divergence, realize_likelihoods, validate_instance,
    BldsInstance, Source, StateSpace, ValidatedInstance,
};
use blds_core::objective::Evaluator;
use blds_core::rational::{rat, Rat};
use blds_core::solvers::{fast_greedy_solve, greedy_solve, FastGreedyConfig};
use blds_core::BitSet;
use num::Zero;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeSet;

fn random_config(n: usize, m: usize, r: u32, seed: u64, mode: GenMode) -> GenConfig {
    GenConfig {
        n,
        m,
        r,
        cost_max: 10,
        count: 1,
        seed,
        mode,
        include_prob: rat(1, 2),
    }
}

fn random_instance(n: usize, m: usize, r: u32, seed: u64, mode: GenMode) -> ValidatedInstance {
    validate_instance(gen_instance(&random_config(n, m, r, seed, mode), 0)).unwrap()
}

/// Random likelihood instance with 3-signal rows drawn from a small
/// rational grid, so coincidences between rows actually happen.
fn random_likelihood_instance(n: usize, m: usize, seed: u64) -> ValidatedInstance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sources = (0..n)
        .map(|_| {
            let rows = (0..m)
                .map(|_| {
                    let a = rng.gen_range(1..=3i128);
                    let b = rng.gen_range(1..=3i128);
                    let c = rng.gen_range(1..=3i128);
                    let s = a + b + c;
                    vec![Rat::new(a, s), Rat::new(b, s), Rat::new(c, s)]
                })
                .collect();
            Source::with_likelihood(rat(1, 1), rows)
        })
        .collect();
    validate_instance(BldsInstance {
        states: StateSpace::indexed(m),
        sources,
        prior: vec![rat(1, m as i128); m],
        budgets: vec![rat(1, 2); m],
    })
    .unwrap()
}

#[test]
fn equivalent_states_have_zero_kl() {
    for seed in 0..20 {
        let inst = random_likelihood_instance(3, 5, seed);
        for i in 0..inst.num_sources() {
            let source = inst.source(i);
            let rows = source.likelihood_rows().unwrap();
            for p in 0..inst.num_states() {
                let f_p = indist_set(source, p);
                for q in 0..inst.num_states() {
                    let kl = kl_divergence(&rows[p], &rows[q]).unwrap();
                    if f_p.contains(q) {
                        assert_eq!(rows[p], rows[q]);
                        assert!(kl.abs() < 1e-12);
                    } else {
                        assert!(kl > 1e-12, "distinct rows must diverge");
                    }
                }
            }
        }
    }
}

#[test]
fn joint_signal_distribution_matches_per_source_intersection() {
    for seed in 0..30 {
        let inst = random_likelihood_instance(3, 5, 100 + seed);
        let m = inst.num_states();
        let n = inst.num_sources();
        for selected in all_subsets(n) {
            // Joint likelihood of a signal tuple is the product of marginals;
            // states are confusable iff all joint probabilities agree.
            let joint: Vec<Vec<Rat>> = (0..m)
                .map(|state| {
                    let mut probs = vec![rat(1, 1)];
                    for i in selected.iter() {
                        let row = &inst.source(i).likelihood_rows().unwrap()[state];
                        probs = probs
                            .iter()
                            .flat_map(|p| row.iter().map(move |x| p.clone() * x.clone()))
                            .collect();
                    }
                    probs
                })
                .collect();
            for p in 0..m {
                let brute: BitSet = (0..m).filter(|&q| joint[q] == joint[p]).collect();
                assert_eq!(brute, inst.dmap().intersection(selected, p));
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn realized_likelihoods_recover_their_partition(
        labels in prop::collection::vec(0usize..4, 2..8)
    ) {
        let m = labels.len();
        let mut blocks = vec![BitSet::empty(); 4];
        for (state, &b) in labels.iter().enumerate() {
            blocks[b] = blocks[b].insert(state);
        }
        blocks.retain(|b| !b.is_empty());
        let sources = realize_likelihoods(&[blocks.clone()], &[rat(1, 1)]);
        let recovered = equivalence_partition(&sources[0]);
        let want: BTreeSet<u64> = blocks.iter().map(|b| b.bits()).collect();
        let got: BTreeSet<u64> = recovered.iter().map(|b| b.bits()).collect();
        prop_assert_eq!(want, got);
        let _ = m;
    }
}

#[test]
fn coverage_is_monotone_and_submodular_in_both_forms() {
    for seed in 0..10 {
        let mode = if seed % 2 == 0 { GenMode::Raw } else { GenMode::Realizable };
        let inst = random_instance(5, 6, 2, seed, mode);
        let eval = Evaluator::new(&inst);
        let n = inst.num_sources();
        let z: Vec<i128> = all_subsets(n).map(|s| eval.z_scaled(s)).collect();
        let at = |s: BitSet| z[s.bits() as usize];
        for a in all_subsets(n) {
            for i in 0..n {
                if !a.contains(i) {
                    assert!(at(a.insert(i)) >= at(a), "monotonicity");
                }
            }
            for b in all_subsets(n) {
                // Lattice form.
                assert!(at(a) + at(b) >= at(a.union(b)) + at(a.intersect(b)));
                // Diminishing-gains form.
                if a.is_subset_of(b) {
                    for i in 0..n {
                        if !b.contains(i) {
                            assert!(at(a.insert(i)) - at(a) >= at(b.insert(i)) - at(b));
                        }
                    }
                }
            }
        }
    }
}

#[test]
fn coverage_equality_matches_per_state_constraints() {
    for seed in 0..20 {
        let inst = random_instance(5, 6, 2, 1000 + seed, GenMode::Raw);
        let eval = Evaluator::new(&inst);
        let z_full = eval.z_scaled(BitSet::full(5));
        for s in all_subsets(5) {
            assert_eq!(eval.z_scaled(s) == z_full, eval.is_feasible_direct(s));
            assert_eq!(eval.is_feasible(s), eval.is_feasible_direct(s));
        }
    }
}

#[test]
fn uniform_prior_error_counts_confusable_states() {
    for seed in 0..10 {
        let inst = random_instance(4, 6, 2, 2000 + seed, GenMode::Raw);
        let eval = Evaluator::new(&inst);
        for s in all_subsets(4) {
            for p in 0..inst.num_states() {
                let f_len = inst.dmap().intersection(s, p).len() as i128;
                assert_eq!(eval.steady_state_error(s, p), rat(1, 1) - Rat::new(1, f_len));
            }
        }
    }
}

#[test]
fn fast_greedy_meets_its_coverage_guarantee_exactly() {
    let epsilons = [rat(1, 10), rat(1, 4), rat(1, 2), rat(9, 10)];
    for seed in 0..25 {
        let inst = random_instance(6, 7, 3, 3000 + seed, GenMode::Raw);
        let eval = Evaluator::new(&inst);
        if eval.check_solvable().is_err() {
            continue;
        }
        let z_full = eval.z_full();
        for eps in &epsilons {
            let cfg = FastGreedyConfig::new(eps.clone()).unwrap();
            let (sol, trace) = fast_greedy_solve(&inst, &cfg).unwrap();
            assert!(sol.achieved_z >= (rat(1, 1) - eps.clone()) * z_full.clone());
            assert_eq!(sol.achieved_z, eval.z(sol.selected));
            assert_eq!(trace.epsilon.as_ref(), Some(eps));
        }
    }
}

#[test]
fn greedy_reaches_full_coverage_when_solvable() {
    for seed in 0..25 {
        let inst = random_instance(6, 7, 3, 4000 + seed, GenMode::Realizable);
        let eval = Evaluator::new(&inst);
        match greedy_solve(&inst) {
            Ok((sol, trace)) => {
                assert!(sol.feasible);
                assert_eq!(sol.achieved_z, eval.z_full());
                assert!(sol.cost > Rat::zero() || trace.t() == 0);
                // Gains are positive and the picks partition the gain sum.
                let total: Rat = trace.picks.iter().map(|p| p.gain.clone()).sum();
                assert_eq!(total, sol.achieved_z);
            }
            Err(_) => assert!(eval.check_solvable().is_err()),
        }
    }
}

#[test]
fn solving_is_deterministic() {
    let inst = random_instance(6, 8, 3, 99, GenMode::Raw);
    if Evaluator::new(&inst).check_solvable().is_err() {
        return;
    }
    let (a, ta) = greedy_solve(&inst).unwrap();
    let (b, tb) = greedy_solve(&inst).unwrap();
    assert_eq!(a, b);
    assert_eq!(ta, tb);
    let cfg = FastGreedyConfig::new(rat(1, 10)).unwrap();
    let (fa, _) = fast_greedy_solve(&inst, &cfg).unwrap();
    let (fb, _) = fast_greedy_solve(&inst, &cfg).unwrap();
    assert_eq!(fa, fb);
}
