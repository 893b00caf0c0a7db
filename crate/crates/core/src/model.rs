//! Instance definition, validation, and observational-equivalence structure.
//!
//! A source either carries an explicit likelihood table (one row of signal
//! probabilities per state) or, for benchmark-style instances, just the sets
//! of states it can distinguish from each state. Validation checks the type
//! invariants and precomputes the per-source indistinguishability sets
//! `F_theta(i)`: the states whose likelihood rows coincide exactly with
//! `theta`'s row. For a source set `I`, `F_theta(I)` is the intersection of
//! the per-source sets, with `F_theta(empty) = Theta`.

use crate::bitset::{BitSet, MAX_BITS};
use crate::rational::{format_rat, is_probability, parse_rat, rat_to_f64, Rat};
use num::{One, Signed, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Ordered, labelled state space.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StateSpace {
    labels: Vec<String>,
}

impl StateSpace {
    pub fn new(labels: Vec<String>) -> Self {
        StateSpace { labels }
    }

    /// `m` states with default labels `theta_1 .. theta_m`.
    pub fn indexed(m: usize) -> Self {
        StateSpace {
            labels: (1..=m).map(|i| format!("theta_{i}")).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }
}

/// Signal structure of a source: either a full likelihood table or the raw
/// distinguishability sets `F^c_theta(i)` (one per state).
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SourceModel {
    /// `rows[theta][signal]` = probability of observing `signal` under `theta`.
    Likelihood {
        signal_count: usize,
        rows: Vec<Vec<Rat>>,
    },
    /// `fc[theta]` = set of states distinguishable from `theta` by this source.
    FcSets(Vec<BitSet>),
}

/// A candidate data source with its selection cost.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Source {
    pub cost: Rat,
    pub model: SourceModel,
}

impl Source {
    pub fn with_likelihood(cost: Rat, rows: Vec<Vec<Rat>>) -> Self {
        let signal_count = rows.first().map_or(0, Vec::len);
        Source {
            cost,
            model: SourceModel::Likelihood { signal_count, rows },
        }
    }

    pub fn with_fc_sets(cost: Rat, fc: Vec<BitSet>) -> Self {
        Source {
            cost,
            model: SourceModel::FcSets(fc),
        }
    }

    pub fn likelihood_rows(&self) -> Option<&[Vec<Rat>]> {
        match &self.model {
            SourceModel::Likelihood { rows, .. } => Some(rows),
            SourceModel::FcSets(_) => None,
        }
    }
}

/// An unvalidated problem instance.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BldsInstance {
    pub states: StateSpace,
    pub sources: Vec<Source>,
    /// Prior belief, one entry per state; positive, sums to exactly 1.
    pub prior: Vec<Rat>,
    /// Per-state error budgets in `[0, 1]`.
    pub budgets: Vec<Rat>,
}

/// Per-source, per-state indistinguishability sets `F_theta(i)` over the
/// state space.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DistinguishabilityMap {
    /// `indist[source][state]` = `F_state(source)`.
    indist: Vec<Vec<BitSet>>,
    m: usize,
}

impl DistinguishabilityMap {
    pub fn indist(&self, src: usize, state: usize) -> BitSet {
        self.indist[src][state]
    }

    pub fn num_states(&self) -> usize {
        self.m
    }

    /// `F_theta(I)`: intersection over the selected sources, with the empty
    /// selection mapped to the full state space.
    pub fn intersection(&self, selected: BitSet, state: usize) -> BitSet {
        let mut f = BitSet::full(self.m);
        for i in selected.iter() {
            f = f.intersect(self.indist[i][state]);
        }
        f
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ValidationError {
    #[error("too many states: {0} (max {MAX_BITS})")]
    TooManyStates(usize),
    #[error("too many sources: {0} (max {MAX_BITS})")]
    TooManySources(usize),
    #[error("state space is empty")]
    NoStates,
    #[error("duplicate state label `{0}`")]
    DuplicateLabel(String),
    #[error("source {src}: likelihood of signal {signal} under state {state} is not positive")]
    ZeroLikelihood {
        src: usize,
        state: usize,
        signal: usize,
    },
    #[error("source {src}: likelihood row for state {state} does not sum to 1")]
    RowNotNormalized { src: usize, state: usize },
    #[error("source {src}: expected {expected} likelihood rows, found {found}")]
    BadRowCount {
        src: usize,
        expected: usize,
        found: usize,
    },
    #[error("source {src}: empty signal space")]
    EmptySignalSpace { src: usize },
    #[error("prior is invalid at state {state}: entries must be positive and sum to exactly 1")]
    BadPrior { state: usize },
    #[error("budget for state {state} is outside [0, 1]")]
    BadBudget { state: usize },
    #[error("source {src}: cost must be positive")]
    NonpositiveCost { src: usize },
    #[error("source {src}: distinguishability set for state {state} is malformed")]
    BadFcSet { src: usize, state: usize },
    #[error("prior/budget length does not match the state count")]
    LengthMismatch,
}

/// A validated instance together with its distinguishability structure.
/// Immutable after construction; safe to share across threads.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ValidatedInstance {
    inst: BldsInstance,
    dmap: DistinguishabilityMap,
}

impl ValidatedInstance {
    pub fn num_states(&self) -> usize {
        self.inst.states.len()
    }

    pub fn num_sources(&self) -> usize {
        self.inst.sources.len()
    }

    pub fn instance(&self) -> &BldsInstance {
        &self.inst
    }

    pub fn prior(&self) -> &[Rat] {
        &self.inst.prior
    }

    pub fn budgets(&self) -> &[Rat] {
        &self.inst.budgets
    }

    pub fn cost(&self, src: usize) -> &Rat {
        &self.inst.sources[src].cost
    }

    pub fn source(&self, src: usize) -> &Source {
        &self.inst.sources[src]
    }

    pub fn dmap(&self) -> &DistinguishabilityMap {
        &self.dmap
    }

    /// True when every source carries a full likelihood table (required for
    /// simulation; benchmark-style `fc_sets` instances have none).
    pub fn has_likelihoods(&self) -> bool {
        self.inst
            .sources
            .iter()
            .all(|s| matches!(s.model, SourceModel::Likelihood { .. }))
    }

    /// Total cost of a selection.
    pub fn selection_cost(&self, selected: BitSet) -> Rat {
        selected
            .iter()
            .map(|i| self.inst.sources[i].cost.clone())
            .fold(Rat::zero(), |a, b| a + b)
    }
}

/// Checks every type invariant and computes the distinguishability map.
pub fn validate_instance(raw: BldsInstance) -> Result<ValidatedInstance, ValidationError> {
    let m = raw.states.len();
    let n = raw.sources.len();
    if m == 0 {
        return Err(ValidationError::NoStates);
    }
    if m > MAX_BITS {
        return Err(ValidationError::TooManyStates(m));
    }
    if n > MAX_BITS {
        return Err(ValidationError::TooManySources(n));
    }
    for (i, l) in raw.states.labels().iter().enumerate() {
        if raw.states.labels()[..i].contains(l) {
            return Err(ValidationError::DuplicateLabel(l.clone()));
        }
    }
    if raw.prior.len() != m || raw.budgets.len() != m {
        return Err(ValidationError::LengthMismatch);
    }
    let mut prior_sum = Rat::zero();
    for (p, entry) in raw.prior.iter().enumerate() {
        if !entry.is_positive() {
            return Err(ValidationError::BadPrior { state: p });
        }
        prior_sum += entry.clone();
    }
    if !prior_sum.is_one() {
        return Err(ValidationError::BadPrior { state: m - 1 });
    }
    for (p, r) in raw.budgets.iter().enumerate() {
        if !is_probability(r) {
            return Err(ValidationError::BadBudget { state: p });
        }
    }

    let mut indist = Vec::with_capacity(n);
    for (i, src) in raw.sources.iter().enumerate() {
        if !src.cost.is_positive() {
            return Err(ValidationError::NonpositiveCost { src: i });
        }
        match &src.model {
            SourceModel::Likelihood { signal_count, rows } => {
                if *signal_count == 0 {
                    return Err(ValidationError::EmptySignalSpace { src: i });
                }
                if rows.len() != m {
                    return Err(ValidationError::BadRowCount {
                        src: i,
                        expected: m,
                        found: rows.len(),
                    });
                }
                for (p, row) in rows.iter().enumerate() {
                    if row.len() != *signal_count {
                        return Err(ValidationError::BadRowCount {
                            src: i,
                            expected: m,
                            found: rows.len(),
                        });
                    }
                    let mut sum = Rat::zero();
                    for (s, v) in row.iter().enumerate() {
                        if !v.is_positive() {
                            return Err(ValidationError::ZeroLikelihood {
                                src: i,
                                state: p,
                                signal: s,
                            });
                        }
                        sum += v.clone();
                    }
                    if !sum.is_one() {
                        return Err(ValidationError::RowNotNormalized { src: i, state: p });
                    }
                }
                let per_state = (0..m).map(|p| indist_set_rows(rows, p)).collect();
                indist.push(per_state);
            }
            SourceModel::FcSets(fc) => {
                if fc.len() != m {
                    return Err(ValidationError::BadFcSet { src: i, state: 0 });
                }
                let full = BitSet::full(m);
                for (p, set) in fc.iter().enumerate() {
                    // theta itself is never distinguishable from itself, and
                    // membership must stay within the state space and be
                    // symmetric.
                    if set.contains(p) || !set.is_subset_of(full) {
                        return Err(ValidationError::BadFcSet { src: i, state: p });
                    }
                    for q in set.iter() {
                        if !fc[q].contains(p) {
                            return Err(ValidationError::BadFcSet { src: i, state: p });
                        }
                    }
                }
                let per_state = (0..m).map(|p| fc[p].complement(m)).collect();
                indist.push(per_state);
            }
        }
    }

    Ok(ValidatedInstance {
        inst: raw,
        dmap: DistinguishabilityMap { indist, m },
    })
}

/// States whose likelihood rows equal `state`'s row entrywise: the
/// equivalence class of `state` under exact row equality.
pub fn indist_set(source: &Source, state: usize) -> BitSet {
    match &source.model {
        SourceModel::Likelihood { rows, .. } => indist_set_rows(rows, state),
        SourceModel::FcSets(fc) => fc[state].complement(fc.len()),
    }
}

fn indist_set_rows(rows: &[Vec<Rat>], state: usize) -> BitSet {
    rows.iter()
        .enumerate()
        .filter(|(_, row)| *row == &rows[state])
        .map(|(q, _)| q)
        .collect()
}

/// Convenience wrapper over [`DistinguishabilityMap::intersection`].
pub fn indist_intersection(map: &DistinguishabilityMap, selected: BitSet, state: usize) -> BitSet {
    map.intersection(selected, state)
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum KlError {
    #[error("distributions have different lengths ({0} vs {1})")]
    DimensionMismatch(usize, usize),
}

/// Kullback-Leibler divergence `sum p ln(p/q)` in floating point.
///
/// Diagnostic only: it cross-checks that the argmin-KL and the exact
/// row-equality definitions of observational equivalence agree.
pub fn kl_divergence(p: &[Rat], q: &[Rat]) -> Result<f64, KlError> {
    if p.len() != q.len() {
        return Err(KlError::DimensionMismatch(p.len(), q.len()));
    }
    let mut d = 0.0;
    for (a, b) in p.iter().zip(q) {
        let pa = rat_to_f64(a);
        let qb = rat_to_f64(b);
        d += pa * (pa / qb).ln();
    }
    Ok(d)
}

/// The partition of the state space induced by a source's row equality,
/// blocks ordered by their smallest member.
pub fn equivalence_partition(source: &Source) -> Vec<BitSet> {
    let m = match &source.model {
        SourceModel::Likelihood { rows, .. } => rows.len(),
        SourceModel::FcSets(fc) => fc.len(),
    };
    let mut seen = BitSet::empty();
    let mut blocks = Vec::new();
    for p in 0..m {
        if seen.contains(p) {
            continue;
        }
        let block = indist_set(source, p);
        seen = seen.union(block);
        blocks.push(block);
    }
    blocks
}

/// Builds binary-signal sources whose equivalence structure matches the
/// given partitions: block `j` of a partition gets the likelihood row
/// `(1/(j+2), (j+1)/(j+2))`, so distinct blocks get distinct rows and the
/// round trip through [`equivalence_partition`] is the identity.
pub fn realize_likelihoods(partitions: &[Vec<BitSet>], costs: &[Rat]) -> Vec<Source> {
    assert_eq!(partitions.len(), costs.len());
    partitions
        .iter()
        .zip(costs)
        .map(|(blocks, cost)| {
            let m: usize = blocks.iter().map(|b| b.len()).sum();
            let mut rows = vec![Vec::new(); m];
            for (j, block) in blocks.iter().enumerate() {
                let d = (j + 2) as i128;
                for p in block.iter() {
                    rows[p] = vec![Rat::new(1, d), Rat::new(d - 1, d)];
                }
            }
            Source::with_likelihood(cost.clone(), rows)
        })
        .collect()
}

// ---------------------------------------------------------------------------
// JSON wire format
// ---------------------------------------------------------------------------

/// Instance JSON schema. Rationals are `"p/q"` or `"p"` strings; a source
/// carries either `signals` + `rows` or `fc_sets` (state indices, 0-based).
#[derive(Debug, Serialize, Deserialize)]
pub struct InstanceJson {
    pub m: usize,
    pub n: usize,
    pub prior: Vec<String>,
    pub budgets: Vec<String>,
    pub sources: Vec<SourceJson>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct SourceJson {
    pub cost: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub signals: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rows: Option<Vec<Vec<String>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fc_sets: Option<Vec<Vec<usize>>>,
}

#[derive(Debug, Error)]
pub enum JsonError {
    #[error("malformed JSON: {0}")]
    Syntax(#[from] serde_json::Error),
    #[error("bad rational: {0}")]
    Rational(#[from] crate::rational::ParseRatError),
    #[error("source {0}: needs either `rows` or `fc_sets`")]
    MissingModel(usize),
    #[error("source {src}: fc_sets state index {index} out of range")]
    IndexOutOfRange { src: usize, index: usize },
    #[error(transparent)]
    Validation(#[from] ValidationError),
}

pub fn instance_from_json(text: &str) -> Result<ValidatedInstance, JsonError> {
    let wire: InstanceJson = serde_json::from_str(text)?;
    let mut sources = Vec::with_capacity(wire.sources.len());
    for (i, s) in wire.sources.iter().enumerate() {
        let cost = parse_rat(&s.cost)?;
        let model = if let Some(rows) = &s.rows {
            let rows: Vec<Vec<Rat>> = rows
                .iter()
                .map(|row| row.iter().map(|v| parse_rat(v)).collect())
                .collect::<Result<_, _>>()?;
            let signal_count = s.signals.unwrap_or_else(|| rows.first().map_or(0, Vec::len));
            SourceModel::Likelihood { signal_count, rows }
        } else if let Some(fc) = &s.fc_sets {
            let mut sets = Vec::with_capacity(fc.len());
            for states in fc {
                let mut b = BitSet::empty();
                for &q in states {
                    if q >= wire.m {
                        return Err(JsonError::IndexOutOfRange { src: i, index: q });
                    }
                    b = b.insert(q);
                }
                sets.push(b);
            }
            SourceModel::FcSets(sets)
        } else {
            return Err(JsonError::MissingModel(i));
        };
        sources.push(Source { cost, model });
    }
    let prior = wire
        .prior
        .iter()
        .map(|v| parse_rat(v))
        .collect::<Result<_, _>>()?;
    let budgets = wire
        .budgets
        .iter()
        .map(|v| parse_rat(v))
        .collect::<Result<_, _>>()?;
    let inst = BldsInstance {
        states: StateSpace::indexed(wire.m),
        sources,
        prior,
        budgets,
    };
    Ok(validate_instance(inst)?)
}

pub fn instance_to_json(inst: &ValidatedInstance) -> String {
    let raw = inst.instance();
    let wire = InstanceJson {
        m: inst.num_states(),
        n: inst.num_sources(),
        prior: raw.prior.iter().map(format_rat).collect(),
        budgets: raw.budgets.iter().map(format_rat).collect(),
        sources: raw
            .sources
            .iter()
            .map(|s| match &s.model {
                SourceModel::Likelihood { signal_count, rows } => SourceJson {
                    cost: format_rat(&s.cost),
                    signals: Some(*signal_count),
                    rows: Some(
                        rows.iter()
                            .map(|row| row.iter().map(format_rat).collect())
                            .collect(),
                    ),
                    fc_sets: None,
                },
                SourceModel::FcSets(fc) => SourceJson {
                    cost: format_rat(&s.cost),
                    signals: None,
                    rows: None,
                    fc_sets: Some(fc.iter().map(|b| b.iter().collect()).collect()),
                },
            })
            .collect(),
    };
    serde_json::to_string_pretty(&wire).expect("instance serialization cannot fail")
}


#[cfg(test)]
mod tests {
    use super::fixtures::{tiny, tiny_validated};
    use super::*;
    use crate::rational::rat;

    #[test]
    fn tiny_is_accepted() {
        let v = tiny_validated();
        assert_eq!(v.num_states(), 3);
        assert_eq!(v.num_sources(), 2);
        assert!(v.has_likelihoods());
    }

    #[test]
    fn zero_likelihood_is_rejected() {
        let mut raw = tiny();
        if let SourceModel::Likelihood { rows, .. } = &mut raw.sources[0].model {
            rows[1][0] = rat(0, 1);
            rows[1][1] = rat(1, 1);
        }
        assert_eq!(
            validate_instance(raw),
            Err(ValidationError::ZeroLikelihood {
                src: 0,
                state: 1,
                signal: 0
            })
        );
    }

    #[test]
    fn unnormalized_row_is_rejected() {
        let mut raw = tiny();
        if let SourceModel::Likelihood { rows, .. } = &mut raw.sources[0].model {
            rows[2][1] = rat(1, 3);
        }
        assert!(matches!(
            validate_instance(raw),
            Err(ValidationError::RowNotNormalized { src: 0, state: 2 })
        ));
    }

    #[test]
    fn bad_prior_is_rejected() {
        let mut raw = tiny();
        raw.prior = vec![rat(1, 2); 3];
        assert!(matches!(
            validate_instance(raw),
            Err(ValidationError::BadPrior { .. })
        ));
    }

    #[test]
    fn bad_budget_and_cost_are_rejected() {
        let mut raw = tiny();
        raw.budgets[1] = rat(3, 2);
        assert_eq!(
            validate_instance(raw),
            Err(ValidationError::BadBudget { state: 1 })
        );
        let mut raw = tiny();
        raw.sources[1].cost = rat(0, 1);
        assert_eq!(
            validate_instance(raw),
            Err(ValidationError::NonpositiveCost { src: 1 })
        );
    }

    #[test]
    fn indist_sets_match_hand_computation() {
        let raw = tiny();
        assert_eq!(indist_set(&raw.sources[0], 0), [0, 2].into_iter().collect());
        assert_eq!(indist_set(&raw.sources[1], 2), BitSet::singleton(2));
        // Uninformative source: every state in one class.
        let flat = Source::with_likelihood(
            rat(1, 1),
            vec![vec![rat(1, 2), rat(1, 2)]; 3],
        );
        assert_eq!(indist_set(&flat, 1), BitSet::full(3));
    }

    #[test]
    fn intersection_examples() {
        let v = tiny_validated();
        let both = BitSet::full(2);
        assert_eq!(v.dmap().intersection(both, 0), BitSet::singleton(0));
        assert_eq!(v.dmap().intersection(BitSet::empty(), 1), BitSet::full(3));
        assert_eq!(
            v.dmap().intersection(BitSet::singleton(1), 0),
            [0, 1].into_iter().collect()
        );
    }

    #[test]
    fn kl_examples() {
        let half = vec![rat(1, 2), rat(1, 2)];
        let third = vec![rat(1, 3), rat(2, 3)];
        assert_eq!(kl_divergence(&half, &half).unwrap(), 0.0);
        let d = kl_divergence(&half, &third).unwrap();
        assert!((d - 0.5 * (9.0f64 / 8.0).ln()).abs() < 1e-12);
        assert!(kl_divergence(&third, &half).unwrap() > 0.0);
        assert!(matches!(
            kl_divergence(&half, &[rat(1, 1)]),
            Err(KlError::DimensionMismatch(2, 1))
        ));
    }

    #[test]
    fn partitions_and_realization_round_trip() {
        let raw = tiny();
        let p1 = equivalence_partition(&raw.sources[0]);
        assert_eq!(p1, vec![[0, 2].into_iter().collect(), BitSet::singleton(1)]);
        let p2 = equivalence_partition(&raw.sources[1]);
        assert_eq!(p2, vec![[0, 1].into_iter().collect(), BitSet::singleton(2)]);

        let realized = realize_likelihoods(&[p1.clone(), p2.clone()], &[rat(2, 1), rat(1, 1)]);
        assert_eq!(equivalence_partition(&realized[0]), p1);
        assert_eq!(equivalence_partition(&realized[1]), p2);
        // Construction rule: block j maps to row (1/(j+2), (j+1)/(j+2)).
        let rows = realized[0].likelihood_rows().unwrap();
        assert_eq!(rows[0], vec![rat(1, 2), rat(1, 2)]);
        assert_eq!(rows[1], vec![rat(1, 3), rat(2, 3)]);

        let single = realize_likelihoods(&[vec![BitSet::full(3)]], &[rat(1, 1)]);
        assert!(single[0]
            .likelihood_rows()
            .unwrap()
            .iter()
            .all(|r| *r == vec![rat(1, 2), rat(1, 2)]));
    }

    #[test]
    fn realized_tiny_matches_tiny_dmap() {
        let v = tiny_validated();
        let parts: Vec<_> = v
            .instance()
            .sources
            .iter()
            .map(equivalence_partition)
            .collect();
        let sources = realize_likelihoods(&parts, &[rat(2, 1), rat(1, 1)]);
        let rebuilt = validate_instance(BldsInstance {
            states: StateSpace::indexed(3),
            sources,
            prior: v.prior().to_vec(),
            budgets: v.budgets().to_vec(),
        })
        .unwrap();
        assert_eq!(rebuilt.dmap(), v.dmap());
    }

    #[test]
    fn json_round_trip_likelihood_and_fc() {
        let v = tiny_validated();
        let text = instance_to_json(&v);
        let back = instance_from_json(&text).unwrap();
        assert_eq!(back.instance(), v.instance());

        let fc_src = Source::with_fc_sets(
            rat(1, 1),
            vec![
                BitSet::singleton(1),
                BitSet::singleton(0),
                BitSet::empty(),
            ],
        );
        let inst = validate_instance(BldsInstance {
            states: StateSpace::indexed(3),
            sources: vec![fc_src],
            prior: vec![rat(1, 3); 3],
            budgets: vec![rat(1, 2); 3],
        })
        .unwrap();
        let back = instance_from_json(&instance_to_json(&inst)).unwrap();
        assert_eq!(back.instance(), inst.instance());
    }

    #[test]
    fn asymmetric_fc_sets_are_rejected() {
        let fc_src = Source::with_fc_sets(
            rat(1, 1),
            vec![BitSet::singleton(1), BitSet::empty(), BitSet::empty()],
        );
        let res = validate_instance(BldsInstance {
            states: StateSpace::indexed(3),
            sources: vec![fc_src],
            prior: vec![rat(1, 3); 3],
            budgets: vec![rat(1, 2); 3],
        });
        assert!(matches!(res, Err(ValidationError::BadFcSet { .. })));
    }
}
