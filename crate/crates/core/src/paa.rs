//! Probabilistic arithmetic automata and their exact-distribution engines.
//!
//! A [`Paa`] couples a Markov chain over states with per-state emission
//! distributions and per-state binary operations on an accumulated value.
//! Two engines compute the joint state-value distribution after `n` steps:
//! the basic push recurrence (linear in `n`) and the doubling technique
//! (logarithmic in `n`, via the 2t-step conditional kernel). On top of the
//! engines sit waiting-time distributions for value sets and state sets and
//! the stationary distribution of the state chain.

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::dist::{Distribution, StateValueDistribution, Value, ValueDomain};
use crate::error::{Error, Result};

/// Tolerance for stochastic-row checks.
pub const ROW_TOL: f64 = 1e-12;

// ---------------------------------------------------------------------------
// Operations
// ---------------------------------------------------------------------------

type OpFn = Arc<dyn Fn(Value, Value) -> Value + Send + Sync>;

/// A per-state binary operation `V × E → V` with a stable tag.
///
/// The tag makes automata comparable and printable in tests; two operations
/// with the same tag are assumed to compute the same function.
#[derive(Clone)]
pub struct Operation {
    tag: String,
    func: OpFn,
    trunc_add_cap: Option<i64>,
}

impl Operation {
    /// Arbitrary operation under a caller-chosen tag.
    pub fn new(
        tag: impl Into<String>,
        f: impl Fn(Value, Value) -> Value + Send + Sync + 'static,
    ) -> Self {
        Operation {
            tag: tag.into(),
            func: Arc::new(f),
            trunc_add_cap: None,
        }
    }

    /// Integer addition clamped at `cap`; declares itself for the doubling shortcut.
    pub fn trunc_add(cap: i64) -> Self {
        Operation {
            tag: format!("trunc-add({cap})"),
            func: Arc::new(move |v, e| match (v, e) {
                (Value::Int(a), Value::Int(b)) => Value::Int((a + b).min(cap)),
                _ => v,
            }),
            trunc_add_cap: Some(cap),
        }
    }

    /// Plain integer addition.
    pub fn add() -> Self {
        Operation::new("add", |v, e| match (v, e) {
            (Value::Int(a), Value::Int(b)) => Value::Int(a + b),
            _ => v,
        })
    }

    /// Integer maximum.
    pub fn max() -> Self {
        Operation::new("max", |v, e| match (v, e) {
            (Value::Int(a), Value::Int(b)) => Value::Int(a.max(b)),
            _ => v,
        })
    }

    /// Stable operation tag.
    pub fn tag(&self) -> &str {
        &self.tag
    }

    /// Apply the operation.
    pub fn apply(&self, v: Value, e: Value) -> Value {
        (self.func)(v, e)
    }
}

impl std::fmt::Debug for Operation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Operation({})", self.tag)
    }
}

// ---------------------------------------------------------------------------
// The automaton
// ---------------------------------------------------------------------------

/// Which engine computes the state-value distribution.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    /// Step-by-step push recurrence.
    Basic,
    /// Chapman-Kolmogorov doubling of the conditional kernel.
    Doubling,
}

/// A probabilistic arithmetic automaton.
///
/// Immutable after construction; all engines take `&self` and own their
/// working tables, so shared automata may be queried concurrently.
#[derive(Debug, Clone)]
pub struct Paa {
    states: Vec<String>,
    start: usize,
    transitions: Vec<Vec<(usize, f64)>>,
    value_domain: ValueDomain,
    start_value: Value,
    emissions: Vec<Vec<(Value, f64)>>,
    ops: Vec<Operation>,
}

impl Paa {
    /// Build and validate an automaton.
    ///
    /// Checks stochastic rows (transitions and emissions, tolerance `1e-12`),
    /// membership of the start value in the value domain, and, for small
    /// enumerable domains, totality of every operation on domain × emissions.
    pub fn new(
        states: Vec<String>,
        start: usize,
        transitions: Vec<Vec<(usize, f64)>>,
        value_domain: ValueDomain,
        start_value: Value,
        emissions: Vec<Vec<(Value, f64)>>,
        ops: Vec<Operation>,
    ) -> Result<Self> {
        let n = states.len();
        if n == 0 {
            return Err(Error::invalid("PAA needs at least one state"));
        }
        if start >= n {
            return Err(Error::invalid(format!("start state {start} out of range")));
        }
        if transitions.len() != n || emissions.len() != n || ops.len() != n {
            return Err(Error::invalid(
                "transitions, emissions and operations must match the state count",
            ));
        }
        for (q, row) in transitions.iter().enumerate() {
            let mut sum = 0.0;
            for &(q2, p) in row {
                if q2 >= n {
                    return Err(Error::invalid(format!(
                        "transition target {q2} out of range"
                    )));
                }
                if !(0.0..=1.0 + ROW_TOL).contains(&p) || p.is_nan() {
                    return Err(Error::InvalidProbability {
                        what: format!("transition from state {}", states[q]),
                        value: p,
                    });
                }
                sum += p;
            }
            if (sum - 1.0).abs() > ROW_TOL {
                return Err(Error::NotStochastic {
                    what: format!("transition row of state {}", states[q]),
                    sum,
                    tol: ROW_TOL,
                });
            }
        }
        for (q, row) in emissions.iter().enumerate() {
            let mut sum = 0.0;
            for &(_, p) in row {
                if !(0.0..=1.0 + ROW_TOL).contains(&p) || p.is_nan() {
                    return Err(Error::InvalidProbability {
                        what: format!("emission of state {}", states[q]),
                        value: p,
                    });
                }
                sum += p;
            }
            if (sum - 1.0).abs() > ROW_TOL {
                return Err(Error::NotStochastic {
                    what: format!("emission row of state {}", states[q]),
                    sum,
                    tol: ROW_TOL,
                });
            }
        }
        if !value_domain.contains(&start_value) {
            return Err(Error::invalid(format!(
                "start value {start_value} outside the value domain"
            )));
        }
        let paa = Paa {
            states,
            start,
            transitions,
            value_domain,
            start_value,
            emissions,
            ops,
        };
        paa.check_op_totality()?;
        Ok(paa)
    }

    fn check_op_totality(&self) -> Result<()> {
        let Some(len) = self.value_domain.enumerable_len() else {
            return Ok(());
        };
        if len * self.states.len() > (1 << 20) {
            return Ok(());
        }
        let values = self.value_domain.iter();
        for (q, op) in self.ops.iter().enumerate() {
            for v in &values {
                for &(e, _) in &self.emissions[q] {
                    let out = op.apply(*v, e);
                    if !self.value_domain.contains(&out) {
                        return Err(Error::DomainOverflow {
                            op: op.tag.clone(),
                            state: self.states[q].clone(),
                            value: out.to_string(),
                        });
                    }
                }
            }
        }
        Ok(())
    }

    /// Number of states.
    pub fn n_states(&self) -> usize {
        self.states.len()
    }

    /// Start state index.
    pub fn start_state(&self) -> usize {
        self.start
    }

    /// Start value.
    pub fn start_value(&self) -> Value {
        self.start_value
    }

    /// State label (used in diagnostics).
    pub fn state_label(&self, q: usize) -> &str {
        &self.states[q]
    }

    /// Sparse transition row of a state.
    pub fn transition_row(&self, q: usize) -> &[(usize, f64)] {
        &self.transitions[q]
    }

    /// Emission distribution of a state.
    pub fn emission_row(&self, q: usize) -> &[(Value, f64)] {
        &self.emissions[q]
    }

    /// Operation of a state.
    pub fn operation(&self, q: usize) -> &Operation {
        &self.ops[q]
    }

    /// Value domain descriptor.
    pub fn value_domain(&self) -> &ValueDomain {
        &self.value_domain
    }

    /// A copy of this automaton with replaced transition rows, revalidated.
    pub fn with_transitions(&self, transitions: Vec<Vec<(usize, f64)>>) -> Result<Paa> {
        Paa::new(
            self.states.clone(),
            self.start,
            transitions,
            self.value_domain.clone(),
            self.start_value,
            self.emissions.clone(),
            self.ops.clone(),
        )
    }

    /// A copy of this automaton with replaced emission rows, revalidated.
    pub fn with_emissions(&self, emissions: Vec<Vec<(Value, f64)>>) -> Result<Paa> {
        Paa::new(
            self.states.clone(),
            self.start,
            transitions_clone(&self.transitions),
            self.value_domain.clone(),
            self.start_value,
            emissions,
            self.ops.clone(),
        )
    }

    /// The underlying Markov chain over states.
    pub fn chain(&self) -> MarkovChain {
        MarkovChain {
            rows: transitions_clone(&self.transitions),
        }
    }

    // -- engines ------------------------------------------------------------

    /// Joint distribution of `(Q_n, V_n)`.
    ///
    /// `f_0` is the Dirac distribution at the start state and start value;
    /// both methods produce identical results up to float rounding.
    pub fn state_value_distribution(
        &self,
        n: usize,
        method: Method,
    ) -> Result<StateValueDistribution> {
        let table = match method {
            Method::Basic => self.basic_table(n)?,
            Method::Doubling => self.doubling_table(n)?,
        };
        Ok(StateValueDistribution::from_map(table))
    }

    /// Distribution of `V_n`, the marginal of [`Self::state_value_distribution`].
    pub fn value_distribution(&self, n: usize, method: Method) -> Result<Distribution> {
        Ok(self.state_value_distribution(n, method)?.value_marginal())
    }

    fn apply_checked(&self, q: usize, v: Value, e: Value) -> Result<Value> {
        let out = self.ops[q].apply(v, e);
        if !self.value_domain.contains(&out) {
            return Err(Error::DomainOverflow {
                op: self.ops[q].tag.clone(),
                state: self.states[q].clone(),
                value: out.to_string(),
            });
        }
        Ok(out)
    }

    /// The table `f_0`: all mass on the start state and start value.
    pub fn initial_table(&self) -> BTreeMap<(usize, Value), f64> {
        let mut t = BTreeMap::new();
        t.insert((self.start, self.start_value), 1.0);
        t
    }

    /// One push step of the state-value recurrence: every table entry spreads
    /// over the outgoing transitions, the entered state emits, and its
    /// operation folds the emission into the value.
    pub fn step_table(
        &self,
        table: &BTreeMap<(usize, Value), f64>,
    ) -> Result<BTreeMap<(usize, Value), f64>> {
        let mut next: BTreeMap<(usize, Value), f64> = BTreeMap::new();
        for (&(q, v), &p) in table {
            for &(q2, tp) in &self.transitions[q] {
                for &(e, ep) in &self.emissions[q2] {
                    let v2 = self.apply_checked(q2, v, e)?;
                    *next.entry((q2, v2)).or_insert(0.0) += p * tp * ep;
                }
            }
        }
        Ok(next)
    }

    fn basic_table(&self, n: usize) -> Result<BTreeMap<(usize, Value), f64>> {
        let mut cur = self.initial_table();
        for _ in 0..n {
            cur = self.step_table(&cur)?;
        }
        Ok(cur)
    }

    /// Distribution of the waiting time `W_T = min {t : V_t ∈ targets}`.
    ///
    /// Returns probabilities for `t ∈ 0..=tmax`; `tail` is `P(W_T > tmax)`.
    /// Implements the value-rewrite construction: target values collapse into
    /// an absorbing "just arrived" mark whose one-step-later mass is dropped,
    /// realized here by harvesting the mass that enters `targets` each step.
    pub fn waiting_time_values(
        &self,
        targets: &std::collections::BTreeSet<Value>,
        tmax: usize,
    ) -> Result<Distribution> {
        if targets.is_empty() {
            return Err(Error::invalid("waiting time needs a nonempty target set"));
        }
        for t in targets {
            if !self.value_domain.contains(t) {
                return Err(Error::invalid(format!(
                    "target value {t} outside the value domain"
                )));
            }
        }
        if targets.contains(&self.start_value) {
            return Distribution::new([(Value::Int(0), 1.0)], 0.0);
        }
        let mut live: BTreeMap<(usize, Value), f64> = BTreeMap::new();
        live.insert((self.start, self.start_value), 1.0);
        let mut probs: BTreeMap<Value, f64> = BTreeMap::new();
        for t in 1..=tmax {
            let mut next: BTreeMap<(usize, Value), f64> = BTreeMap::new();
            let mut hit = 0.0;
            for (&(q, v), &p) in &live {
                for &(q2, tp) in &self.transitions[q] {
                    for &(e, ep) in &self.emissions[q2] {
                        let v2 = self.apply_checked(q2, v, e)?;
                        let mass = p * tp * ep;
                        if targets.contains(&v2) {
                            hit += mass;
                        } else {
                            *next.entry((q2, v2)).or_insert(0.0) += mass;
                        }
                    }
                }
            }
            if hit > 0.0 {
                probs.insert(Value::Int(t as i64), hit);
            }
            live = next;
            if live.is_empty() {
                break;
            }
        }
        let tail: f64 = live.values().sum();
        Distribution::new(probs, tail.clamp(0.0, 1.0))
    }

    // -- doubling -----------------------------------------------------------

    fn doubling_table(&self, n: usize) -> Result<BTreeMap<(usize, Value), f64>> {
        if n == 0 {
            let mut t = BTreeMap::new();
            t.insert((self.start, self.start_value), 1.0);
            return Ok(t);
        }
        if let Some(cap) = self.additive_cap() {
            return self.doubling_table_additive(n, cap);
        }
        let kernel = DoublingKernel::one_step(self)?;
        // Apply kernel powers to the start row only; full squaring builds the
        // 2^b-step kernels, the final combination stays a vector product.
        let mut powers = vec![kernel];
        let mut b = 1usize;
        while (1usize << b) <= n {
            let next = powers[b - 1].compose(&powers[b - 1]);
            powers.push(next);
            b += 1;
        }
        let mut row: BTreeMap<(usize, Value), f64> = BTreeMap::new();
        row.insert((self.start, self.start_value), 1.0);
        let mut remaining = n;
        let mut bit = powers.len() - 1;
        loop {
            let step = 1usize << bit;
            if step <= remaining {
                row = powers[bit].apply(&row);
                remaining -= step;
            }
            if bit == 0 {
                break;
            }
            bit -= 1;
        }
        debug_assert_eq!(remaining, 0);
        Ok(row)
    }

    fn additive_cap(&self) -> Option<i64> {
        if self.start_value != Value::Int(0) {
            return None;
        }
        let cap = self.ops[0].trunc_add_cap?;
        for op in &self.ops {
            if op.trunc_add_cap != Some(cap) {
                return None;
            }
        }
        for row in &self.emissions {
            for &(e, _) in row {
                match e {
                    Value::Int(x) if x >= 0 => {}
                    _ => return None,
                }
            }
        }
        Some(cap)
    }

    /// Doubling with the additivity shortcut: the kernel is shift-invariant in
    /// the value component, so only increments `0..=cap` are tracked (`cap`
    /// doubles as the "at least cap" bucket created by truncation).
    fn doubling_table_additive(&self, n: usize, cap: i64) -> Result<BTreeMap<(usize, Value), f64>> {
        let nq = self.states.len();
        let one: Vec<BTreeMap<(usize, i64), f64>> = (0..nq)
            .map(|q1| {
                let mut row = BTreeMap::new();
                for &(q2, tp) in &self.transitions[q1] {
                    for &(e, ep) in &self.emissions[q2] {
                        let delta = match e {
                            Value::Int(x) => x.min(cap),
                            Value::Pair(..) => unreachable!("checked in additive_cap"),
                        };
                        *row.entry((q2, delta)).or_insert(0.0) += tp * ep;
                    }
                }
                row
            })
            .collect();

        let compose = |a: &[BTreeMap<(usize, i64), f64>], b: &[BTreeMap<(usize, i64), f64>]| {
            // Suffix sums of b rows: bge[q][ (q3, k) ] = sum over delta >= k.
            let mut out: Vec<BTreeMap<(usize, i64), f64>> = vec![BTreeMap::new(); nq];
            for q1 in 0..nq {
                let row = &mut out[q1];
                for (&(q2, d1), &p1) in &a[q1] {
                    if d1 >= cap {
                        for (&(q3, _), &p2) in &b[q2] {
                            *row.entry((q3, cap)).or_insert(0.0) += p1 * p2;
                        }
                    } else {
                        for (&(q3, d2), &p2) in &b[q2] {
                            let d = (d1 + d2).min(cap);
                            *row.entry((q3, d)).or_insert(0.0) += p1 * p2;
                        }
                    }
                }
            }
            out
        };

        let mut powers = vec![one];
        let mut b = 1usize;
        while (1usize << b) <= n {
            let next = compose(&powers[b - 1], &powers[b - 1]);
            powers.push(next);
            b += 1;
        }
        // Start row: (start, 0) with probability 1.
        let mut row: BTreeMap<(usize, i64), f64> = BTreeMap::new();
        row.insert((self.start, 0), 1.0);
        let mut remaining = n;
        let mut bit = powers.len() - 1;
        loop {
            let step = 1usize << bit;
            if step <= remaining {
                let kernel = &powers[bit];
                let mut next: BTreeMap<(usize, i64), f64> = BTreeMap::new();
                for (&(q, d0), &p) in &row {
                    for (&(q2, d1), &p2) in &kernel[q] {
                        let d = (d0 + d1).min(cap);
                        *next.entry((q2, d)).or_insert(0.0) += p * p2;
                    }
                }
                row = next;
                remaining -= step;
            }
            if bit == 0 {
                break;
            }
            bit -= 1;
        }
        Ok(row
            .into_iter()
            .map(|((q, d), p)| ((q, Value::Int(d)), p))
            .collect())
    }
}

fn transitions_clone(rows: &[Vec<(usize, f64)>]) -> Vec<Vec<(usize, f64)>> {
    rows.to_vec()
}

// ---------------------------------------------------------------------------
// Doubling kernel
// ---------------------------------------------------------------------------

/// The t-step conditional state-value kernel `U^(t)`.
///
/// Rows are restricted to (state, value) pairs reachable from the start
/// within the queried horizon; restricted entries never contribute to the
/// start-row product.
#[derive(Debug, Clone)]
pub struct DoublingKernel {
    table: BTreeMap<(usize, Value), BTreeMap<(usize, Value), f64>>,
}

impl DoublingKernel {
    /// One-step kernel over all pairs reachable from the start.
    pub fn one_step(paa: &Paa) -> Result<DoublingKernel> {
        // Forward sweep for the reachable (state, value) set.
        let mut reach: std::collections::BTreeSet<(usize, Value)> =
            std::collections::BTreeSet::new();
        let mut frontier: Vec<(usize, Value)> = vec![(paa.start, paa.start_value)];
        reach.insert((paa.start, paa.start_value));
        while let Some((q, v)) = frontier.pop() {
            for &(q2, tp) in &paa.transitions[q] {
                if tp <= 0.0 {
                    continue;
                }
                for &(e, ep) in &paa.emissions[q2] {
                    if ep <= 0.0 {
                        continue;
                    }
                    let v2 = paa.apply_checked(q2, v, e)?;
                    if reach.insert((q2, v2)) {
                        frontier.push((q2, v2));
                    }
                }
            }
        }
        let mut table = BTreeMap::new();
        for &(q1, v1) in &reach {
            let mut row: BTreeMap<(usize, Value), f64> = BTreeMap::new();
            for &(q2, tp) in &paa.transitions[q1] {
                for &(e, ep) in &paa.emissions[q2] {
                    let v2 = paa.apply_checked(q2, v1, e)?;
                    *row.entry((q2, v2)).or_insert(0.0) += tp * ep;
                }
            }
            table.insert((q1, v1), row);
        }
        Ok(DoublingKernel { table })
    }

    /// Chapman-Kolmogorov composition: `U^(t1+t2)` from `U^(t1)` and `U^(t2)`.
    pub fn compose(&self, other: &DoublingKernel) -> DoublingKernel {
        let mut table = BTreeMap::new();
        for (key, row) in &self.table {
            let mut out: BTreeMap<(usize, Value), f64> = BTreeMap::new();
            for (mid, p1) in row {
                if let Some(row2) = other.table.get(mid) {
                    for (dst, p2) in row2 {
                        *out.entry(*dst).or_insert(0.0) += p1 * p2;
                    }
                }
            }
            table.insert(*key, out);
        }
        DoublingKernel { table }
    }

    /// Apply the kernel to a (state, value) row vector.
    pub fn apply(&self, row: &BTreeMap<(usize, Value), f64>) -> BTreeMap<(usize, Value), f64> {
        let mut out: BTreeMap<(usize, Value), f64> = BTreeMap::new();
        for (key, p) in row {
            if let Some(krow) = self.table.get(key) {
                for (dst, p2) in krow {
                    *out.entry(*dst).or_insert(0.0) += p * p2;
                }
            }
        }
        out
    }

    /// Conditional probability `U^(t)(q1, q2, v1, v2)`.
    pub fn probability(&self, q1: usize, v1: Value, q2: usize, v2: Value) -> f64 {
        self.table
            .get(&(q1, v1))
            .and_then(|row| row.get(&(q2, v2)))
            .copied()
            .unwrap_or(0.0)
    }

    /// Row sums, for the per-row normalization invariant.
    pub fn row_sums(&self) -> impl Iterator<Item = ((usize, Value), f64)> + '_ {
        self.table.iter().map(|(k, row)| (*k, row.values().sum()))
    }
}

// ---------------------------------------------------------------------------
// State chain: waiting times and the stationary distribution
// ---------------------------------------------------------------------------

/// A finite Markov chain with sparse stochastic rows.
#[derive(Debug, Clone)]
pub struct MarkovChain {
    rows: Vec<Vec<(usize, f64)>>,
}

impl MarkovChain {
    /// Build from sparse rows, checking stochasticity.
    pub fn new(rows: Vec<Vec<(usize, f64)>>) -> Result<Self> {
        let n = rows.len();
        for (q, row) in rows.iter().enumerate() {
            let mut sum = 0.0;
            for &(q2, p) in row {
                if q2 >= n {
                    return Err(Error::invalid(format!(
                        "transition target {q2} out of range"
                    )));
                }
                if !(0.0..=1.0 + ROW_TOL).contains(&p) || p.is_nan() {
                    return Err(Error::InvalidProbability {
                        what: format!("transition from state {q}"),
                        value: p,
                    });
                }
                sum += p;
            }
            if (sum - 1.0).abs() > ROW_TOL {
                return Err(Error::NotStochastic {
                    what: format!("transition row of state {q}"),
                    sum,
                    tol: ROW_TOL,
                });
            }
        }
        Ok(MarkovChain { rows })
    }

    /// Number of states.
    pub fn n_states(&self) -> usize {
        self.rows.len()
    }

    /// Sparse transition row.
    pub fn row(&self, q: usize) -> &[(usize, f64)] {
        &self.rows[q]
    }

    /// One step of the chain on a distribution vector.
    pub fn step(&self, dist: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.rows.len()];
        for (q, &p) in dist.iter().enumerate() {
            if p == 0.0 {
                continue;
            }
            for &(q2, tp) in &self.rows[q] {
                out[q2] += p * tp;
            }
        }
        out
    }

    /// Waiting time `W_S = min {t ≥ 0 : Q_t ∈ targets}` with start distribution `alpha`.
    ///
    /// Aggregation-state construction: target mass is harvested into the
    /// result at the step it first arrives and removed from the live vector.
    /// With `alpha` Dirac at the start state this is the first-passage time.
    pub fn waiting_time_states(
        &self,
        alpha: &[f64],
        targets: &std::collections::BTreeSet<usize>,
        tmax: usize,
    ) -> Result<Distribution> {
        let n = self.rows.len();
        if alpha.len() != n {
            return Err(Error::invalid("start distribution length mismatch"));
        }
        if targets.is_empty() {
            return Err(Error::invalid("waiting time needs a nonempty target set"));
        }
        if let Some(&bad) = targets.iter().find(|&&s| s >= n) {
            return Err(Error::invalid(format!("target state {bad} out of range")));
        }
        let sum: f64 = alpha.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::NotStochastic {
                what: "start distribution".into(),
                sum,
                tol: 1e-9,
            });
        }
        let mut probs: BTreeMap<Value, f64> = BTreeMap::new();
        let hit0: f64 = targets.iter().map(|&s| alpha[s]).sum();
        if hit0 > 0.0 {
            probs.insert(Value::Int(0), hit0);
        }
        let mut live: Vec<f64> = alpha.to_vec();
        for &s in targets {
            live[s] = 0.0;
        }
        for t in 1..=tmax {
            let mut next = vec![0.0; n];
            let mut hit = 0.0;
            for (q, &p) in live.iter().enumerate() {
                if p == 0.0 {
                    continue;
                }
                for &(q2, tp) in &self.rows[q] {
                    if targets.contains(&q2) {
                        hit += p * tp;
                    } else {
                        next[q2] += p * tp;
                    }
                }
            }
            if hit > 0.0 {
                probs.insert(Value::Int(t as i64), hit);
            }
            live = next;
            if live.iter().all(|&p| p == 0.0) {
                break;
            }
        }
        let tail: f64 = live.iter().sum();
        Distribution::new(probs, tail.clamp(0.0, 1.0))
    }

    /// Limiting return-time distribution `lim_t P(W^t_S = t' | Q_t ∈ S)`.
    ///
    /// Starts from the long-run distribution restricted to `targets`, takes
    /// one chain step, and counts first arrivals from step one on.
    pub fn return_time_states(
        &self,
        targets: &std::collections::BTreeSet<usize>,
        tmax: usize,
        tol: f64,
    ) -> Result<Distribution> {
        if tmax == 0 {
            return Err(Error::invalid("return time needs tmax >= 1"));
        }
        let pi = self.limiting_distribution(tol)?;
        let mass: f64 = targets.iter().map(|&s| pi[s]).sum();
        if mass <= 0.0 {
            return Err(Error::invalid("target set has zero stationary mass"));
        }
        let mut alpha = vec![0.0; self.rows.len()];
        for &s in targets {
            alpha[s] = pi[s] / mass;
        }
        let pushed = self.step(&alpha);
        // Shift by one: P(R = t) = P(first arrival of the pushed walk at t-1).
        let inner = self.waiting_time_states(&pushed, targets, tmax - 1)?;
        let shifted: Vec<(Value, f64)> = inner
            .iter()
            .map(|(v, p)| match v {
                Value::Int(t) => (Value::Int(t + 1), *p),
                other => (*other, *p),
            })
            .collect();
        Distribution::new(shifted, inner.tail())
    }

    /// Stationary distribution by power iteration.
    ///
    /// Requires an irreducible, aperiodic chain; each failed property is
    /// reported by name. Iteration stops when the L∞ change drops below
    /// `tol`, with a hard cap of 10^6 iterations.
    pub fn stationary_distribution(&self, tol: f64) -> Result<Vec<f64>> {
        if self.rows.is_empty() {
            return Err(Error::invalid("empty chain"));
        }
        self.check_irreducible()?;
        self.check_aperiodic()?;
        self.power_iteration(tol)
    }

    /// Long-run state distribution for chains with transient states.
    ///
    /// Chains built on top of text models often have start contexts that are
    /// never revisited; the limit distribution then lives on the unique
    /// closed communicating class and is zero elsewhere. Fails when several
    /// closed classes exist (no unique limit) or the class is periodic.
    pub fn limiting_distribution(&self, tol: f64) -> Result<Vec<f64>> {
        let n = self.rows.len();
        if n == 0 {
            return Err(Error::invalid("empty chain"));
        }
        let comp = self.components();
        let n_comp = comp.iter().max().map(|&c| c + 1).unwrap_or(0);
        let mut closed = vec![true; n_comp];
        for (q, row) in self.rows.iter().enumerate() {
            for &(q2, p) in row {
                if p > 0.0 && comp[q2] != comp[q] {
                    closed[comp[q]] = false;
                }
            }
        }
        let closed_ids: Vec<usize> = (0..n_comp).filter(|&c| closed[c]).collect();
        if closed_ids.len() != 1 {
            return Err(Error::ChainStructure {
                property: "irreducible".into(),
                detail: format!(
                    "{} closed communicating classes, the limit distribution is not unique",
                    closed_ids.len()
                ),
            });
        }
        let class = closed_ids[0];
        let members: Vec<usize> = (0..n).filter(|&q| comp[q] == class).collect();
        let mut remap = vec![usize::MAX; n];
        for (i, &q) in members.iter().enumerate() {
            remap[q] = i;
        }
        let rows = members
            .iter()
            .map(|&q| self.rows[q].iter().map(|&(q2, p)| (remap[q2], p)).collect())
            .collect();
        let sub = MarkovChain::new(rows)?;
        sub.check_aperiodic()?;
        let sub_pi = sub.power_iteration(tol)?;
        let mut pi = vec![0.0; n];
        for (i, &q) in members.iter().enumerate() {
            pi[q] = sub_pi[i];
        }
        Ok(pi)
    }

    fn power_iteration(&self, tol: f64) -> Result<Vec<f64>> {
        let n = self.rows.len();
        let mut pi = vec![1.0 / n as f64; n];
        const MAX_ITERS: usize = 1_000_000;
        for _ in 0..MAX_ITERS {
            let next = self.step(&pi);
            let diff = pi
                .iter()
                .zip(&next)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0f64, f64::max);
            pi = next;
            if diff < tol {
                return Ok(pi);
            }
        }
        Err(Error::NonConvergence {
            what: "power iteration for the stationary distribution".into(),
            iterations: MAX_ITERS,
            residual: tol,
        })
    }

    /// Strongly connected component id per state (iterative Tarjan).
    fn components(&self) -> Vec<usize> {
        let n = self.rows.len();
        let adj = self.positive_edges();
        let mut index = vec![usize::MAX; n];
        let mut low = vec![0usize; n];
        let mut on_stack = vec![false; n];
        let mut stack: Vec<usize> = Vec::new();
        let mut comp = vec![usize::MAX; n];
        let mut next_index = 0usize;
        let mut n_comp = 0usize;
        for root in 0..n {
            if index[root] != usize::MAX {
                continue;
            }
            // Explicit DFS stack of (node, next child position).
            let mut dfs: Vec<(usize, usize)> = vec![(root, 0)];
            index[root] = next_index;
            low[root] = next_index;
            next_index += 1;
            stack.push(root);
            on_stack[root] = true;
            while let Some(&mut (v, ref mut child)) = dfs.last_mut() {
                if *child < adj[v].len() {
                    let w = adj[v][*child];
                    *child += 1;
                    if index[w] == usize::MAX {
                        index[w] = next_index;
                        low[w] = next_index;
                        next_index += 1;
                        stack.push(w);
                        on_stack[w] = true;
                        dfs.push((w, 0));
                    } else if on_stack[w] {
                        low[v] = low[v].min(index[w]);
                    }
                } else {
                    dfs.pop();
                    if let Some(&mut (parent, _)) = dfs.last_mut() {
                        low[parent] = low[parent].min(low[v]);
                    }
                    if low[v] == index[v] {
                        loop {
                            let w = stack.pop().expect("component stack");
                            on_stack[w] = false;
                            comp[w] = n_comp;
                            if w == v {
                                break;
                            }
                        }
                        n_comp += 1;
                    }
                }
            }
        }
        comp
    }

    /// Check that the chain is irreducible and aperiodic.
    pub fn ensure_ergodic(&self) -> Result<()> {
        self.check_irreducible()?;
        self.check_aperiodic()
    }

    fn positive_edges(&self) -> Vec<Vec<usize>> {
        self.rows
            .iter()
            .map(|row| {
                row.iter()
                    .filter(|&&(_, p)| p > 0.0)
                    .map(|&(q, _)| q)
                    .collect()
            })
            .collect()
    }

    fn check_irreducible(&self) -> Result<()> {
        let n = self.rows.len();
        let fwd = self.positive_edges();
        let mut rev = vec![Vec::new(); n];
        for (q, row) in fwd.iter().enumerate() {
            for &q2 in row {
                rev[q2].push(q);
            }
        }
        let reach = |adj: &[Vec<usize>]| {
            let mut seen = vec![false; n];
            let mut stack = vec![0usize];
            seen[0] = true;
            while let Some(q) = stack.pop() {
                for &q2 in &adj[q] {
                    if !seen[q2] {
                        seen[q2] = true;
                        stack.push(q2);
                    }
                }
            }
            seen
        };
        if reach(&fwd).iter().any(|&s| !s) || reach(&rev).iter().any(|&s| !s) {
            return Err(Error::ChainStructure {
                property: "irreducible".into(),
                detail: "state graph is not strongly connected".into(),
            });
        }
        Ok(())
    }

    fn check_aperiodic(&self) -> Result<()> {
        // BFS levels; the period of a strongly connected graph is the gcd of
        // level[u] + 1 - level[v] over all edges (u, v).
        let n = self.rows.len();
        let adj = self.positive_edges();
        let mut level = vec![usize::MAX; n];
        let mut queue = std::collections::VecDeque::new();
        level[0] = 0;
        queue.push_back(0usize);
        while let Some(q) = queue.pop_front() {
            for &q2 in &adj[q] {
                if level[q2] == usize::MAX {
                    level[q2] = level[q] + 1;
                    queue.push_back(q2);
                }
            }
        }
        let mut g: i64 = 0;
        for (u, row) in adj.iter().enumerate() {
            for &v in row {
                let d = level[u] as i64 + 1 - level[v] as i64;
                g = gcd(g, d.abs());
            }
        }
        if g != 1 {
            return Err(Error::ChainStructure {
                property: "aperiodic".into(),
                detail: format!("cycle lengths share period {g}"),
            });
        }
        Ok(())
    }
}

fn gcd(a: i64, b: i64) -> i64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}
