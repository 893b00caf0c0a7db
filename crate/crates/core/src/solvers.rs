//! Solvers for the covering form of the selection problem: the standard
//! greedy, the threshold ("fast") greedy, a brute-force oracle, and the
//! constructive set-cover reduction.
//!
//! Both greedy variants are deterministic: the standard greedy breaks
//! argmax ties toward the smallest source index, and the fast greedy scans
//! sources in index order at every threshold level. The threshold schedule
//! is evaluated in exact big-rational arithmetic so the loop-exit
//! comparison never depends on floating-point rounding.

use crate::bitset::BitSet;
use crate::model::{BldsInstance, Source, StateSpace, ValidatedInstance};
use crate::objective::{Evaluator, Infeasible};
use crate::rational::{format_rat, rat, Rat};
use num::{BigInt, BigRational, One, Zero};
use serde_json::json;
use std::cell::Cell;
use thiserror::Error;

/// Hard cap for the brute-force oracle.
pub const EXACT_SOLVE_MAX_SOURCES: usize = 20;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SolveError {
    #[error(transparent)]
    Infeasible(#[from] Infeasible),
    #[error("instance has {0} sources; brute force is capped at {EXACT_SOLVE_MAX_SOURCES}")]
    TooLarge(usize),
}

/// One greedy pick.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Pick {
    pub iteration: usize,
    pub source: usize,
    pub gain: Rat,
    pub z_after: Rat,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Algo {
    Greedy,
    FastGreedy,
    Exact,
}

/// Record of a greedy run: the ordered picks and the number of coverage
/// evaluations ("oracle calls") the run needed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SolveTrace {
    pub algo: Algo,
    pub picks: Vec<Pick>,
    pub oracle_calls: u64,
    pub epsilon: Option<Rat>,
}

impl SolveTrace {
    /// Number of picks `T`.
    pub fn t(&self) -> usize {
        self.picks.len()
    }

    /// The selection after the first `t` picks.
    pub fn selected_after(&self, t: usize) -> BitSet {
        self.picks[..t].iter().map(|p| p.source).collect()
    }
}

/// A solver result. `feasible` reports whether full coverage was reached;
/// the fast greedy may legitimately stop short of it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Solution {
    pub selected: BitSet,
    pub cost: Rat,
    pub achieved_z: Rat,
    pub feasible: bool,
}

/// Threshold-greedy parameters; `epsilon` must lie strictly in `(0, 1)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FastGreedyConfig {
    epsilon: Rat,
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("epsilon must be in (0, 1), got {0}")]
pub struct BadEpsilon(String);

impl FastGreedyConfig {
    pub fn new(epsilon: Rat) -> Result<Self, BadEpsilon> {
        if epsilon > Rat::zero() && epsilon < Rat::one() {
            Ok(FastGreedyConfig { epsilon })
        } else {
            Err(BadEpsilon(format_rat(&epsilon)))
        }
    }

    pub fn epsilon(&self) -> &Rat {
        &self.epsilon
    }
}

impl Default for FastGreedyConfig {
    fn default() -> Self {
        FastGreedyConfig { epsilon: rat(1, 10) }
    }
}

/// A set cover instance over universe `{0, .., universe_size-1}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SetCoverInstance {
    pub universe_size: usize,
    pub subsets: Vec<BitSet>,
}

/// Coverage evaluator that counts every `z` query it serves.
pub struct CountingOracle<'a, 'b> {
    eval: &'b Evaluator<'a>,
    calls: Cell<u64>,
}

impl<'a, 'b> CountingOracle<'a, 'b> {
    pub fn new(eval: &'b Evaluator<'a>) -> Self {
        CountingOracle {
            eval,
            calls: Cell::new(0),
        }
    }

    pub fn z_scaled(&self, selected: BitSet) -> i128 {
        self.calls.set(self.calls.get() + 1);
        self.eval.z_scaled(selected)
    }

    pub fn z(&self, selected: BitSet) -> Rat {
        Rat::new(self.z_scaled(selected), self.eval.scale())
    }

    pub fn calls(&self) -> u64 {
        self.calls.get()
    }
}

fn rat_to_big(r: &Rat) -> BigRational {
    BigRational::new(BigInt::from(*r.numer()), BigInt::from(*r.denom()))
}

/// Standard greedy: repeatedly add the source with the best cost-normalized
/// marginal coverage gain until coverage is complete.
pub fn greedy_solve(inst: &ValidatedInstance) -> Result<(Solution, SolveTrace), SolveError> {
    let eval = Evaluator::new(inst);
    eval.check_solvable()?;
    let n = inst.num_sources();
    let oracle = CountingOracle::new(&eval);

    let z_full = oracle.z_scaled(BitSet::full(n));
    let mut selected = BitSet::empty();
    let mut z_cur = 0i128;
    let mut picks = Vec::new();

    while z_cur < z_full {
        let mut best: Option<(usize, i128, Rat)> = None;
        for i in 0..n {
            if selected.contains(i) {
                continue;
            }
            let gain = oracle.z_scaled(selected.insert(i)) - z_cur;
            let ratio = Rat::new(gain, eval.scale()) / inst.cost(i).clone();
            // Ties go to the smallest index, so strict improvement only.
            if best.as_ref().map_or(true, |(_, _, br)| ratio > *br) {
                best = Some((i, gain, ratio));
            }
        }
        let (j, gain, _) = best.expect("solvable instance always has a positive marginal");
        selected = selected.insert(j);
        z_cur += gain;
        picks.push(Pick {
            iteration: picks.len(),
            source: j,
            gain: Rat::new(gain, eval.scale()),
            z_after: Rat::new(z_cur, eval.scale()),
        });
    }

    let trace = SolveTrace {
        algo: Algo::Greedy,
        picks,
        oracle_calls: oracle.calls(),
        epsilon: None,
    };
    let solution = Solution {
        selected,
        cost: inst.selection_cost(selected),
        achieved_z: Rat::new(z_cur, eval.scale()),
        feasible: true,
    };
    Ok((solution, trace))
}

/// Threshold greedy: sweep a geometrically decreasing threshold from the
/// best singleton density down to `(eps*h_min)/(n*h_max)` of it, adding any
/// source whose cost-normalized marginal gain clears the current threshold.
/// Guarantees `z(I_f) >= (1 - eps) z([n])`; returns early on full coverage.
pub fn fast_greedy_solve(
    inst: &ValidatedInstance,
    cfg: &FastGreedyConfig,
) -> Result<(Solution, SolveTrace), SolveError> {
    let eval = Evaluator::new(inst);
    eval.check_solvable()?;
    let n = inst.num_sources();
    let oracle = CountingOracle::new(&eval);
    let eps = rat_to_big(cfg.epsilon());

    let z_full = oracle.z_scaled(BitSet::full(n));
    let mut selected = BitSet::empty();
    let mut z_cur = 0i128;
    let mut picks = Vec::new();

    let finish = |selected: BitSet, z_cur: i128, picks: Vec<Pick>, calls: u64| {
        let trace = SolveTrace {
            algo: Algo::FastGreedy,
            picks,
            oracle_calls: calls,
            epsilon: Some(cfg.epsilon().clone()),
        };
        let solution = Solution {
            selected,
            cost: inst.selection_cost(selected),
            achieved_z: Rat::new(z_cur, eval.scale()),
            feasible: z_cur == z_full,
        };
        (solution, trace)
    };

    if z_cur == z_full {
        return Ok(finish(selected, z_cur, picks, oracle.calls()));
    }

    // Densest singleton defines the starting threshold d.
    let mut d = BigRational::zero();
    for i in 0..n {
        let density =
            rat_to_big(&Rat::new(oracle.z_scaled(BitSet::singleton(i)), eval.scale()))
                / rat_to_big(inst.cost(i));
        if density > d {
            d = density;
        }
    }
    let h_max = (0..n).map(|i| inst.cost(i)).max().unwrap().clone();
    let h_min = (0..n).map(|i| inst.cost(i)).min().unwrap().clone();
    let floor = &eps * rat_to_big(&h_min) / (BigRational::from(BigInt::from(n as i64)) * rat_to_big(&h_max)) * &d;
    let decay = BigRational::one() - &eps;

    let mut tau = d;
    while tau >= floor {
        for j in 0..n {
            if selected.contains(j) {
                // A selected source has zero marginal gain and tau > 0.
                continue;
            }
            let gain = oracle.z_scaled(selected.insert(j)) - z_cur;
            let density = rat_to_big(&Rat::new(gain, eval.scale())) / rat_to_big(inst.cost(j));
            if density >= tau {
                selected = selected.insert(j);
                z_cur += gain;
                picks.push(Pick {
                    iteration: picks.len(),
                    source: j,
                    gain: Rat::new(gain, eval.scale()),
                    z_after: Rat::new(z_cur, eval.scale()),
                });
                if z_cur == z_full {
                    return Ok(finish(selected, z_cur, picks, oracle.calls()));
                }
            }
        }
        tau *= decay.clone();
    }

    Ok(finish(selected, z_cur, picks, oracle.calls()))
}

/// Brute-force oracle: enumerates every subset and returns the minimum-cost
/// feasible one, ties broken toward the smallest bitset word.
pub fn exact_solve(inst: &ValidatedInstance) -> Result<Solution, SolveError> {
    let n = inst.num_sources();
    if n > EXACT_SOLVE_MAX_SOURCES {
        return Err(SolveError::TooLarge(n));
    }
    let eval = Evaluator::new(inst);
    eval.check_solvable()?;

    let mut best: Option<(Rat, BitSet)> = None;
    for mask in 0u64..(1u64 << n) {
        let subset = BitSet::from_bits(mask);
        let cost = inst.selection_cost(subset);
        if let Some((best_cost, _)) = &best {
            if cost >= *best_cost {
                continue;
            }
        }
        if eval.is_feasible_direct(subset) {
            best = Some((cost, subset));
        }
    }
    let (cost, selected) = best.expect("check_solvable guarantees the full set is feasible");
    Ok(Solution {
        achieved_z: eval.z(selected),
        selected,
        cost,
        feasible: true,
    })
}

/// Constructive reduction from set cover: universe element `u_q` becomes
/// state `q+1`, subset `C_i` becomes a unit-cost binary source that
/// distinguishes exactly `{q+1 : u_q in C_i}` from state 0, the prior is
/// uniform, and only state 0 carries a binding (zero) budget.
pub fn reduce_set_cover(sc: &SetCoverInstance) -> BldsInstance {
    let d = sc.universe_size;
    let m = d + 1;
    let sources = sc
        .subsets
        .iter()
        .map(|subset| {
            let mut rows = vec![vec![rat(1, 2), rat(1, 2)]; m];
            for q in subset.iter() {
                assert!(q < d, "subset element out of universe range");
                rows[q + 1] = vec![rat(1, 3), rat(2, 3)];
            }
            Source::with_likelihood(rat(1, 1), rows)
        })
        .collect();
    let mut budgets = vec![rat(1, 1); m];
    budgets[0] = rat(0, 1);
    BldsInstance {
        states: StateSpace::indexed(m),
        sources,
        prior: vec![rat(1, m as i128); m],
        budgets,
    }
}

/// JSON view of a solution and its trace (selected indices in pick order).
pub fn solve_report_json(solution: &Solution, trace: Option<&SolveTrace>) -> serde_json::Value {
    let mut v = json!({
        "selected": solution.selected.iter().collect::<Vec<_>>(),
        "cost": format_rat(&solution.cost),
        "achieved_z": format_rat(&solution.achieved_z),
        "feasible": solution.feasible,
    });
    if let Some(trace) = trace {
        v["picks"] = trace
            .picks
            .iter()
            .map(|p| {
                json!({
                    "iteration": p.iteration,
                    "source": p.source,
                    "gain": format_rat(&p.gain),
                    "z_after": format_rat(&p.z_after),
                })
            })
            .collect();
        v["oracle_calls"] = json!(trace.oracle_calls);
        if let Some(eps) = &trace.epsilon {
            v["epsilon"] = json!(format_rat(eps));
        }
    }
    v
}
