//! The learning-error metric and the coverage function `z` that turns the
//! selection problem into submodular set covering.
//!
//! For a selection `I` and hypothesis `theta_p`, the steady-state error is
//! `e(I, p) = 1 - mu0(p) / sum_{theta in F_p(I)} mu0(theta)`. A state is
//! *active* when its budget constraint is not vacuous, i.e.
//! `R_p < 1 - mu0(p)`; each active state contributes the truncated
//! distinguishable-mass function `f'_p(I) = min(f_p(I), r_p)` with
//! `f_p(I) = sum of prior mass over F^c_p(I)` and requirement
//! `r_p = 1 - mu0(p) / (1 - R_p)`. Their sum `z(I)` is monotone and
//! submodular, and `I` is feasible iff `z(I) = z([n])` exactly.
//!
//! [`Evaluator`] precomputes integer numerators over a common denominator so
//! that the hot path (`z` on thousands of subsets) runs on plain `i128`.

use crate::bitset::BitSet;
use crate::model::ValidatedInstance;
use crate::rational::{denominator_lcm, lcm_i128, Rat};
use num::One;
use thiserror::Error;

/// The states whose error budgets actually constrain the selection,
/// together with their coverage requirements `r_p` in `(0, 1)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ActiveStateSet {
    pub states: BitSet,
    /// `(state index, r_p)` pairs, ordered by state index.
    pub requirements: Vec<(usize, Rat)>,
}

struct ActiveState {
    idx: usize,
    /// `r_p` as an integer over the evaluator scale.
    r_scaled: i128,
    /// Feasibility threshold: the constraint for this state reads
    /// `mass(F_p(I)) * feas_a <= prior_num[p] * feas_b` where
    /// `1 - R_p = feas_a / feas_b` in lowest terms.
    feas_a: i128,
    feas_b: i128,
}

/// Precomputed exact-arithmetic evaluator for one instance.
///
/// Internally `z` is kept as an integer over `scale()`, the least common
/// multiple of the prior common denominator and the requirement
/// denominators. That same integer is the scaled objective `z'` used by the
/// integrality-based performance bound.
pub struct Evaluator<'a> {
    inst: &'a ValidatedInstance,
    /// Prior numerators over `prior_den`.
    prior_num: Vec<i128>,
    prior_den: i128,
    /// `scale / prior_den`.
    f_factor: i128,
    scale: i128,
    active: Vec<ActiveState>,
    /// `indist[source][state]` as raw bit words for the hot loop.
    fbits: Vec<Vec<u64>>,
    full_states: u64,
    z_full: i128,
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("no feasible selection exists: even selecting every source violates the budget for states {states:?}")]
pub struct Infeasible {
    pub states: Vec<usize>,
}

impl<'a> Evaluator<'a> {
    pub fn new(inst: &'a ValidatedInstance) -> Self {
        let m = inst.num_states();
        let n = inst.num_sources();
        let prior_den = denominator_lcm(inst.prior().iter());
        let prior_num: Vec<i128> = inst
            .prior()
            .iter()
            .map(|p| p.numer() * (prior_den / p.denom()))
            .collect();

        let mut requirements: Vec<(usize, Rat)> = Vec::new();
        for p in 0..m {
            let budget = &inst.budgets()[p];
            if *budget < Rat::one() - inst.prior()[p].clone() {
                let r = Rat::one() - inst.prior()[p].clone() / (Rat::one() - budget.clone());
                requirements.push((p, r));
            }
        }
        let scale = requirements
            .iter()
            .fold(prior_den, |acc, (_, r)| lcm_i128(acc, *r.denom()));
        let f_factor = scale / prior_den;
        let active = requirements
            .iter()
            .map(|(p, r)| {
                let one_minus_budget = Rat::one() - inst.budgets()[*p].clone();
                ActiveState {
                    idx: *p,
                    r_scaled: r.numer() * (scale / r.denom()),
                    feas_a: *one_minus_budget.numer(),
                    feas_b: *one_minus_budget.denom(),
                }
            })
            .collect();

        let fbits = (0..n)
            .map(|i| (0..m).map(|p| inst.dmap().indist(i, p).bits()).collect())
            .collect();

        let mut eval = Evaluator {
            inst,
            prior_num,
            prior_den,
            f_factor,
            scale,
            active,
            fbits,
            full_states: BitSet::full(m).bits(),
            z_full: 0,
        };
        eval.z_full = eval.z_scaled(BitSet::full(n));
        eval
    }

    pub fn instance(&self) -> &'a ValidatedInstance {
        self.inst
    }

    /// Denominator that makes the scaled objective integer-valued.
    pub fn scale(&self) -> i128 {
        self.scale
    }

    pub fn active_states(&self) -> ActiveStateSet {
        ActiveStateSet {
            states: self.active.iter().map(|a| a.idx).collect(),
            requirements: self
                .active
                .iter()
                .map(|a| (a.idx, Rat::new(a.r_scaled, self.scale)))
                .collect(),
        }
    }

    fn f_mask(&self, selected: BitSet, state: usize) -> u64 {
        let mut f = self.full_states;
        for i in selected.iter() {
            f &= self.fbits[i][state];
        }
        f
    }

    /// Prior numerator mass over the states in `mask`.
    fn mass(&self, mut mask: u64) -> i128 {
        let mut sum = 0i128;
        while mask != 0 {
            let p = mask.trailing_zeros() as usize;
            mask &= mask - 1;
            sum += self.prior_num[p];
        }
        sum
    }

    /// Steady-state error `e(I, p)` as an exact rational in `[0, 1)`.
    pub fn steady_state_error(&self, selected: BitSet, state: usize) -> Rat {
        let mass = self.mass(self.f_mask(selected, state));
        Rat::one() - Rat::new(self.prior_num[state], mass)
    }

    /// Distinguishable prior mass `f_p(I)`.
    pub fn f_value(&self, state: usize, selected: BitSet) -> Rat {
        let mass = self.mass(self.f_mask(selected, state));
        Rat::new(self.prior_den - mass, self.prior_den)
    }

    /// Truncated coverage `f'_p(I) = min(f_p(I), r_p)`; `state` must be active.
    pub fn f_truncated(&self, state: usize, selected: BitSet) -> Rat {
        let a = self
            .active
            .iter()
            .find(|a| a.idx == state)
            .expect("f_truncated requires an active state");
        let mass = self.mass(self.f_mask(selected, state));
        let f_scaled = (self.prior_den - mass) * self.f_factor;
        Rat::new(f_scaled.min(a.r_scaled), self.scale)
    }

    /// Scaled objective `z'(I) = scale() * z(I)`, always a nonnegative integer.
    pub fn z_scaled(&self, selected: BitSet) -> i128 {
        let mut total = 0i128;
        for a in &self.active {
            let mass = self.mass(self.f_mask(selected, a.idx));
            let f_scaled = (self.prior_den - mass) * self.f_factor;
            total += f_scaled.min(a.r_scaled);
        }
        total
    }

    /// Coverage value `z(I)` as an exact rational.
    pub fn z(&self, selected: BitSet) -> Rat {
        Rat::new(self.z_scaled(selected), self.scale)
    }

    pub fn z_full_scaled(&self) -> i128 {
        self.z_full
    }

    pub fn z_full(&self) -> Rat {
        Rat::new(self.z_full, self.scale)
    }

    /// Feasibility via the coverage identity: `z(I) = z([n])` exactly.
    pub fn is_feasible(&self, selected: BitSet) -> bool {
        self.z_scaled(selected) == self.z_full
    }

    /// Integer-only per-state feasibility test, equivalent to
    /// [`Evaluator::is_feasible`] but cheaper on the brute-force path.
    pub fn is_feasible_direct(&self, selected: BitSet) -> bool {
        self.active.iter().all(|a| {
            let mass = self.mass(self.f_mask(selected, a.idx));
            mass * a.feas_a <= self.prior_num[a.idx] * a.feas_b
        })
    }

    /// Errors unless selecting every source satisfies all budgets.
    pub fn check_solvable(&self) -> Result<(), Infeasible> {
        let full = BitSet::full(self.inst.num_sources());
        let violated: Vec<usize> = self
            .active
            .iter()
            .filter(|a| {
                let mass = self.mass(self.f_mask(full, a.idx));
                mass * a.feas_a > self.prior_num[a.idx] * a.feas_b
            })
            .map(|a| a.idx)
            .collect();
        if violated.is_empty() {
            Ok(())
        } else {
            Err(Infeasible { states: violated })
        }
    }
}

// Convenience wrappers; each builds a fresh evaluator, so prefer holding an
// `Evaluator` when querying many subsets of the same instance.

pub fn steady_state_error(inst: &ValidatedInstance, selected: BitSet, state: usize) -> Rat {
    Evaluator::new(inst).steady_state_error(selected, state)
}

pub fn active_states(inst: &ValidatedInstance) -> ActiveStateSet {
    Evaluator::new(inst).active_states()
}

pub fn f_value(inst: &ValidatedInstance, state: usize, selected: BitSet) -> Rat {
    Evaluator::new(inst).f_value(state, selected)
}

pub fn f_truncated(inst: &ValidatedInstance, state: usize, selected: BitSet) -> Rat {
    Evaluator::new(inst).f_truncated(state, selected)
}

pub fn z_value(inst: &ValidatedInstance, selected: BitSet) -> Rat {
    Evaluator::new(inst).z(selected)
}

/// `z'(I)` together with the scale that makes it integral.
pub fn z_integer_scaled(inst: &ValidatedInstance, selected: BitSet) -> (i128, i128) {
    let eval = Evaluator::new(inst);
    (eval.z_scaled(selected), eval.scale())
}

pub fn is_feasible(inst: &ValidatedInstance, selected: BitSet) -> bool {
    Evaluator::new(inst).is_feasible(selected)
}

pub fn check_solvable(inst: &ValidatedInstance) -> Result<(), Infeasible> {
    Evaluator::new(inst).check_solvable()
}
