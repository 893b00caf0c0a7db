//! Belief-update simulation: the centralized Bayesian recursion and the
//! distributed geometric-pooling rule over an agent network.
//!
//! Single steps are exposed in exact rationals where the arithmetic permits
//! it (the centralized rule). Long runs keep log-space float beliefs, since
//! products of thousands of likelihoods underflow any fixed-precision
//! representation and exact rationals grow without bound. Observations are
//! always sampled by inverse-CDF over the exact likelihood row, so the
//! sampled signal sequence is reproducible bit-for-bit from the seed.

use crate::bitset::BitSet;
use crate::model::{indist_set, Source, ValidatedInstance};
use crate::rational::{rat_to_f64, Rat};
use num::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SimError {
    #[error("source {0} has no likelihood rows; simulation needs an observation model")]
    NoLikelihoods(usize),
    #[error("state index {0} out of range")]
    BadState(usize),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StationaryError {
    #[error("weight matrix is not row-stochastic with positive diagonal: {0}")]
    BadMatrix(String),
    #[error("power iteration did not reach residual {target} (got {residual})")]
    NotConverged { residual: f64, target: f64 },
}

/// Time-indexed belief vectors from one simulated run. `beliefs[0]` is the
/// prior; each vector sums to 1 within 1e-12.
#[derive(Debug, Clone)]
pub struct BeliefTrajectory {
    pub beliefs: Vec<Vec<f64>>,
    pub true_state: usize,
    pub selected: BitSet,
    pub seed: u64,
}

impl BeliefTrajectory {
    pub fn len(&self) -> usize {
        self.beliefs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.beliefs.is_empty()
    }

    pub fn final_belief(&self) -> &[f64] {
        self.beliefs.last().expect("trajectory is nonempty")
    }
}

pub fn l1_distance(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum()
}

/// One exact Bayesian update: multiply the belief by the joint likelihood of
/// `observation` (one signal per selected source, in ascending source order)
/// and renormalize. An empty selection leaves the belief unchanged.
pub fn bayes_step(
    belief: &[Rat],
    inst: &ValidatedInstance,
    selected: BitSet,
    observation: &[usize],
) -> Vec<Rat> {
    assert_eq!(belief.len(), inst.num_states());
    assert_eq!(observation.len(), selected.len());
    let mut weights: Vec<Rat> = belief.to_vec();
    for (pos, source) in selected.iter().enumerate() {
        let rows = inst
            .source(source)
            .likelihood_rows()
            .expect("bayes_step needs likelihood rows");
        let signal = observation[pos];
        for (theta, w) in weights.iter_mut().enumerate() {
            *w *= rows[theta][signal].clone();
        }
    }
    let total: Rat = weights.iter().cloned().sum();
    assert!(total > Rat::zero(), "belief has positive mass somewhere");
    weights.into_iter().map(|w| w / total.clone()).collect()
}

/// Samples a signal index from an exact likelihood row by inverse CDF. The
/// uniform draw is a 64-bit integer compared against exact partial sums, so
/// equal seeds give equal signals on every platform.
fn sample_signal(row: &[Rat], rng: &mut ChaCha8Rng) -> usize {
    let u = Rat::new_raw(rng.gen::<u64>() as i128, 1i128 << 64);
    let mut cum = Rat::zero();
    for (s, p) in row.iter().enumerate() {
        cum += p.clone();
        if u < cum {
            return s;
        }
    }
    row.len() - 1
}

fn normalize_log_weights(lw: &[f64]) -> Vec<f64> {
    let max = lw.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = lw.iter().map(|w| (w - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}

/// Runs the centralized Bayesian recursion for `steps` observations drawn
/// i.i.d. from the selected sources under `true_state`. Beliefs accumulate
/// in log space to survive long horizons.
pub fn run_bayes(
    inst: &ValidatedInstance,
    selected: BitSet,
    true_state: usize,
    steps: usize,
    seed: u64,
) -> Result<BeliefTrajectory, SimError> {
    let m = inst.num_states();
    if true_state >= m {
        return Err(SimError::BadState(true_state));
    }
    let mut source_rows = Vec::new();
    for i in selected.iter() {
        let rows = inst
            .source(i)
            .likelihood_rows()
            .ok_or(SimError::NoLikelihoods(i))?;
        source_rows.push(rows);
    }
    let log_rows: Vec<Vec<Vec<f64>>> = source_rows
        .iter()
        .map(|rows| {
            rows.iter()
                .map(|row| row.iter().map(|p| rat_to_f64(p).ln()).collect())
                .collect()
        })
        .collect();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut lw: Vec<f64> = inst.prior().iter().map(|p| rat_to_f64(p).ln()).collect();
    let mut beliefs = Vec::with_capacity(steps + 1);
    beliefs.push(normalize_log_weights(&lw));
    for _ in 0..steps {
        for (k, rows) in source_rows.iter().enumerate() {
            let signal = sample_signal(&rows[true_state], &mut rng);
            for theta in 0..m {
                lw[theta] += log_rows[k][theta][signal];
            }
        }
        beliefs.push(normalize_log_weights(&lw));
    }
    Ok(BeliefTrajectory {
        beliefs,
        true_state,
        selected,
        seed,
    })
}

/// The almost-sure limit of the centralized recursion: prior mass restricted
/// to the states the selection cannot distinguish from `true_state`,
/// renormalized.
pub fn limit_belief(inst: &ValidatedInstance, selected: BitSet, true_state: usize) -> Vec<Rat> {
    let f_set = inst.dmap().intersection(selected, true_state);
    let mass: Rat = f_set.iter().map(|t| inst.prior()[t].clone()).sum();
    (0..inst.num_states())
        .map(|t| {
            if f_set.contains(t) {
                inst.prior()[t].clone() / mass.clone()
            } else {
                Rat::zero()
            }
        })
        .collect()
}

/// Total-variation distance between the final belief and the point mass on
/// `true_state`: `(1/2) * L1`.
pub fn empirical_error(traj: &BeliefTrajectory, true_state: usize) -> f64 {
    let last = traj.final_belief();
    let mut indicator = vec![0.0; last.len()];
    indicator[true_state] = 1.0;
    0.5 * l1_distance(last, &indicator)
}

/// A fixed, strongly connected network of agents with row-stochastic mixing
/// weights, one observation source per agent, and per-agent priors.
#[derive(Debug, Clone)]
pub struct AgentNetwork {
    weights: Vec<Vec<Rat>>,
    sources: Vec<Source>,
    priors: Vec<Vec<Rat>>,
    num_states: usize,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NetworkError {
    #[error("weight matrix: {0}")]
    BadWeights(String),
    #[error("agent {0}: {1}")]
    BadAgent(usize, String),
}

fn check_weights(weights: &[Vec<Rat>]) -> Result<(), String> {
    let n = weights.len();
    if n == 0 {
        return Err("empty matrix".into());
    }
    for (i, row) in weights.iter().enumerate() {
        if row.len() != n {
            return Err(format!("row {i} has length {} in an {n}-agent network", row.len()));
        }
        if row.iter().any(|a| *a < Rat::zero()) {
            return Err(format!("row {i} has a negative weight"));
        }
        if row[i] <= Rat::zero() {
            return Err(format!("agent {i} has no self-loop"));
        }
        if row.iter().cloned().sum::<Rat>() != Rat::one() {
            return Err(format!("row {i} does not sum to 1"));
        }
    }
    // Strong connectivity of the positive-entry digraph: every node reaches
    // node 0 and is reachable from it.
    for transpose in [false, true] {
        let mut seen = vec![false; n];
        let mut stack = vec![0usize];
        seen[0] = true;
        while let Some(i) = stack.pop() {
            for j in 0..n {
                let w = if transpose { &weights[j][i] } else { &weights[i][j] };
                if *w > Rat::zero() && !seen[j] {
                    seen[j] = true;
                    stack.push(j);
                }
            }
        }
        if seen.iter().any(|s| !s) {
            return Err("positive-entry digraph is not strongly connected".into());
        }
    }
    Ok(())
}

impl AgentNetwork {
    pub fn new(
        weights: Vec<Vec<Rat>>,
        sources: Vec<Source>,
        priors: Vec<Vec<Rat>>,
    ) -> Result<Self, NetworkError> {
        check_weights(&weights).map_err(NetworkError::BadWeights)?;
        let n = weights.len();
        if sources.len() != n || priors.len() != n {
            return Err(NetworkError::BadWeights(format!(
                "{n} agents but {} sources and {} priors",
                sources.len(),
                priors.len()
            )));
        }
        let num_states = priors[0].len();
        for (i, prior) in priors.iter().enumerate() {
            if prior.len() != num_states {
                return Err(NetworkError::BadAgent(i, "prior length mismatch".into()));
            }
            if prior.iter().any(|p| *p <= Rat::zero()) {
                return Err(NetworkError::BadAgent(i, "prior must be positive".into()));
            }
            if prior.iter().cloned().sum::<Rat>() != Rat::one() {
                return Err(NetworkError::BadAgent(i, "prior does not sum to 1".into()));
            }
        }
        for (i, source) in sources.iter().enumerate() {
            let rows = source
                .likelihood_rows()
                .ok_or_else(|| NetworkError::BadAgent(i, "source has no likelihood rows".into()))?;
            if rows.len() != num_states {
                return Err(NetworkError::BadAgent(i, "row count mismatch".into()));
            }
        }
        Ok(AgentNetwork {
            weights,
            sources,
            priors,
            num_states,
        })
    }

    pub fn num_agents(&self) -> usize {
        self.weights.len()
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn weights(&self) -> &[Vec<Rat>] {
        &self.weights
    }

    pub fn sources(&self) -> &[Source] {
        &self.sources
    }

    pub fn priors(&self) -> &[Vec<Rat>] {
        &self.priors
    }
}

/// Left Perron vector of the weight matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct StationaryDistribution {
    pub pi: Vec<f64>,
}

/// Computes the stationary distribution `pi' A = pi'` by power iteration on
/// the transpose, to residual 1e-14 (reported threshold 1e-12).
pub fn stationary_distribution(
    weights: &[Vec<Rat>],
) -> Result<StationaryDistribution, StationaryError> {
    check_weights(weights).map_err(StationaryError::BadMatrix)?;
    let n = weights.len();
    let a: Vec<Vec<f64>> = weights
        .iter()
        .map(|row| row.iter().map(rat_to_f64).collect())
        .collect();
    let mut pi = vec![1.0 / n as f64; n];
    let target = 1e-14;
    let mut residual = f64::INFINITY;
    for _ in 0..200_000 {
        let mut next = vec![0.0; n];
        for i in 0..n {
            for j in 0..n {
                next[j] += pi[i] * a[i][j];
            }
        }
        let total: f64 = next.iter().sum();
        for x in next.iter_mut() {
            *x /= total;
        }
        residual = pi.iter().zip(&next).map(|(x, y)| (x - y).abs()).sum();
        pi = next;
        if residual <= target {
            return Ok(StationaryDistribution { pi });
        }
    }
    Err(StationaryError::NotConverged { residual, target })
}

fn effective_log_rows(net: &AgentNetwork, selected: BitSet) -> Vec<Vec<Vec<f64>>> {
    net.sources
        .iter()
        .enumerate()
        .map(|(i, source)| {
            let rows = source.likelihood_rows().expect("validated at construction");
            let signal_count = rows[0].len();
            if selected.contains(i) {
                rows.iter()
                    .map(|row| row.iter().map(|p| rat_to_f64(p).ln()).collect())
                    .collect()
            } else {
                // Unselected agents observe through a flat likelihood, so
                // their signals carry no information about the state.
                let flat = vec![-(signal_count as f64).ln(); signal_count];
                vec![flat; net.num_states]
            }
        })
        .collect()
}

/// One step of the distributed rule: each agent takes the weighted geometric
/// mean of its neighbors' beliefs, multiplies by its own (flattened if
/// unselected) likelihood of `observations[agent]`, and renormalizes.
pub fn nonbayes_step(
    net: &AgentNetwork,
    selected: BitSet,
    beliefs: &[Vec<f64>],
    observations: &[usize],
) -> Vec<Vec<f64>> {
    let n = net.num_agents();
    let m = net.num_states;
    assert_eq!(beliefs.len(), n);
    assert_eq!(observations.len(), n);
    let log_rows = effective_log_rows(net, selected);
    let log_beliefs: Vec<Vec<f64>> = beliefs
        .iter()
        .map(|row| row.iter().map(|b| b.ln()).collect())
        .collect();
    (0..n)
        .map(|i| {
            let mut lw = vec![0.0; m];
            for (theta, w) in lw.iter_mut().enumerate() {
                for j in 0..n {
                    *w += rat_to_f64(&net.weights[i][j]) * log_beliefs[j][theta];
                }
                *w += log_rows[i][theta][observations[i]];
            }
            normalize_log_weights(&lw)
        })
        .collect()
}

/// Runs the distributed rule for `steps` rounds; every agent samples its own
/// signal from its true-state row each round. Returns one trajectory per
/// agent, all driven by the same seed.
pub fn run_nonbayes(
    net: &AgentNetwork,
    selected: BitSet,
    true_state: usize,
    steps: usize,
    seed: u64,
) -> Result<Vec<BeliefTrajectory>, SimError> {
    let n = net.num_agents();
    let m = net.num_states;
    if true_state >= m {
        return Err(SimError::BadState(true_state));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let true_rows: Vec<Vec<Rat>> = net
        .sources
        .iter()
        .map(|s| s.likelihood_rows().expect("validated")[true_state].clone())
        .collect();
    let mut beliefs: Vec<Vec<f64>> = net
        .priors
        .iter()
        .map(|p| p.iter().map(rat_to_f64).collect())
        .collect();
    let mut per_agent: Vec<Vec<Vec<f64>>> = (0..n).map(|i| vec![beliefs[i].clone()]).collect();
    for _ in 0..steps {
        let observations: Vec<usize> = (0..n)
            .map(|i| sample_signal(&true_rows[i], &mut rng))
            .collect();
        beliefs = nonbayes_step(net, selected, &beliefs, &observations);
        for i in 0..n {
            per_agent[i].push(beliefs[i].clone());
        }
    }
    Ok(per_agent
        .into_iter()
        .map(|b| BeliefTrajectory {
            beliefs: b,
            true_state,
            selected,
            seed,
        })
        .collect())
}

fn pooled_prior(net: &AgentNetwork, pi: &[f64]) -> Vec<f64> {
    (0..net.num_states)
        .map(|theta| {
            net.priors
                .iter()
                .zip(pi)
                .map(|(prior, w)| rat_to_f64(&prior[theta]).powf(*w))
                .product()
        })
        .collect()
}

fn consensus_set(net: &AgentNetwork, selected: BitSet, state: usize) -> BitSet {
    let mut f_set = BitSet::full(net.num_states);
    for i in selected.iter() {
        f_set = f_set.intersect(indist_set(&net.sources[i], state));
    }
    f_set
}

/// The common limit belief of all agents: the stationary-weighted geometric
/// mean of the priors, restricted to the states the selected agents cannot
/// distinguish from `true_state`, renormalized.
pub fn nonbayes_limit(
    net: &AgentNetwork,
    selected: BitSet,
    true_state: usize,
) -> Result<Vec<f64>, StationaryError> {
    let pi = stationary_distribution(&net.weights)?.pi;
    let pooled = pooled_prior(net, &pi);
    let f_set = consensus_set(net, selected, true_state);
    let mass: f64 = f_set.iter().map(|t| pooled[t]).sum();
    Ok((0..net.num_states)
        .map(|t| if f_set.contains(t) { pooled[t] / mass } else { 0.0 })
        .collect())
}

/// Network-wide steady-state error for target state `state`:
/// `n * (1 - pooled(state) / pooled-mass-of-confusable-states)`.
pub fn nonbayes_error(
    net: &AgentNetwork,
    selected: BitSet,
    state: usize,
) -> Result<f64, StationaryError> {
    let limit = nonbayes_limit(net, selected, state)?;
    Ok(net.num_agents() as f64 * (1.0 - limit[state]))
}

/// The pooled prior normalized over all states. Ratios over subsets are
/// unchanged by the normalization, so single-network error budgets can be
/// posed as a standard selection instance with this prior.
pub fn surrogate_prior(net: &AgentNetwork) -> Result<Vec<f64>, StationaryError> {
    let pi = stationary_distribution(&net.weights)?.pi;
    let pooled = pooled_prior(net, &pi);
    let total: f64 = pooled.iter().sum();
    Ok(pooled.into_iter().map(|p| p / total).collect())
}
