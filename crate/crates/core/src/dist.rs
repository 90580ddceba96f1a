//! Values, value domains and finite probability distributions.
//!
//! Everything a PAA computes is a [`Value`]: a plain integer (counts, masses,
//! flows, waiting times) or an integer pair (text position and cost, clump
//! size and gap counter). [`Distribution`] is a finite map from values to
//! probabilities plus an explicitly tracked `tail`: mass that was truncated
//! away (e.g. waiting times beyond `tmax`) rather than silently lost.

use std::collections::BTreeMap;
use std::fmt;

use crate::error::{Error, Result};

/// A value computed by an arithmetic automaton.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Value {
    /// Scalar integer value.
    Int(i64),
    /// Pair value, ordered lexicographically.
    Pair(i64, i64),
}

impl Value {
    /// The scalar payload, or an error for pair values.
    pub fn as_int(&self) -> Result<i64> {
        match self {
            Value::Int(v) => Ok(*v),
            Value::Pair(..) => Err(Error::invalid("expected scalar value, found pair")),
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Int(v) => write!(f, "{v}"),
            Value::Pair(a, b) => write!(f, "{a},{b}"),
        }
    }
}

/// Descriptor of the value set a PAA operates on.
#[derive(Debug, Clone)]
pub enum ValueDomain {
    /// Contiguous integers `lo..=hi`.
    IntRange { lo: i64, hi: i64 },
    /// Pairs with both components in contiguous ranges.
    PairRange {
        lo0: i64,
        hi0: i64,
        lo1: i64,
        hi1: i64,
    },
    /// An explicit finite set, including any sentinel encodings.
    Enumerated(std::collections::BTreeSet<Value>),
}

impl ValueDomain {
    /// Integers `0..=hi`.
    pub fn counts(hi: i64) -> Self {
        ValueDomain::IntRange { lo: 0, hi }
    }

    /// Whether `v` belongs to the domain.
    pub fn contains(&self, v: &Value) -> bool {
        match (self, v) {
            (ValueDomain::IntRange { lo, hi }, Value::Int(x)) => lo <= x && x <= hi,
            (ValueDomain::PairRange { lo0, hi0, lo1, hi1 }, Value::Pair(a, b)) => {
                lo0 <= a && a <= hi0 && lo1 <= b && b <= hi1
            }
            (ValueDomain::Enumerated(set), v) => set.contains(v),
            _ => false,
        }
    }

    /// Number of elements if small enough to enumerate, else `None`.
    pub fn enumerable_len(&self) -> Option<usize> {
        const CAP: u128 = 4096;
        match self {
            ValueDomain::IntRange { lo, hi } => {
                let n = (*hi as i128 - *lo as i128 + 1).max(0) as u128;
                (n <= CAP).then_some(n as usize)
            }
            ValueDomain::PairRange { lo0, hi0, lo1, hi1 } => {
                let n0 = (*hi0 as i128 - *lo0 as i128 + 1).max(0) as u128;
                let n1 = (*hi1 as i128 - *lo1 as i128 + 1).max(0) as u128;
                let n = n0.saturating_mul(n1);
                (n <= CAP).then_some(n as usize)
            }
            ValueDomain::Enumerated(set) => Some(set.len()),
        }
    }

    /// Iterate all elements of an enumerable domain.
    pub fn iter(&self) -> Vec<Value> {
        match self {
            ValueDomain::IntRange { lo, hi } => (*lo..=*hi).map(Value::Int).collect(),
            ValueDomain::PairRange { lo0, hi0, lo1, hi1 } => {
                let mut out = Vec::new();
                for a in *lo0..=*hi0 {
                    for b in *lo1..=*hi1 {
                        out.push(Value::Pair(a, b));
                    }
                }
                out
            }
            ValueDomain::Enumerated(set) => set.iter().copied().collect(),
        }
    }
}

/// Tolerance used when checking that distributions are normalized.
pub const NORMALIZATION_TOL: f64 = 1e-9;

/// A finite distribution over [`Value`]s with tracked residual tail mass.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Distribution {
    support: BTreeMap<Value, f64>,
    tail: f64,
}

impl Distribution {
    /// Point mass on a single value.
    pub fn dirac(v: Value) -> Self {
        let mut support = BTreeMap::new();
        support.insert(v, 1.0);
        Distribution { support, tail: 0.0 }
    }

    /// Build from entries and tail, dropping zero entries and validating ranges.
    pub fn new(entries: impl IntoIterator<Item = (Value, f64)>, tail: f64) -> Result<Self> {
        let mut support = BTreeMap::new();
        for (v, p) in entries {
            if !(0.0..=1.0 + NORMALIZATION_TOL).contains(&p) || p.is_nan() {
                return Err(Error::InvalidProbability {
                    what: format!("distribution entry {v}"),
                    value: p,
                });
            }
            if p > 0.0 {
                *support.entry(v).or_insert(0.0) += p;
            }
        }
        if !(0.0..=1.0 + NORMALIZATION_TOL).contains(&tail) || tail.is_nan() {
            return Err(Error::InvalidProbability {
                what: "distribution tail".into(),
                value: tail,
            });
        }
        Ok(Distribution { support, tail })
    }

    /// Probability of a value (zero if absent from the support).
    pub fn p(&self, v: &Value) -> f64 {
        self.support.get(v).copied().unwrap_or(0.0)
    }

    /// Probability of a scalar value.
    pub fn p_int(&self, v: i64) -> f64 {
        self.p(&Value::Int(v))
    }

    /// Mass not represented in the support (truncated or beyond a bound).
    pub fn tail(&self) -> f64 {
        self.tail
    }

    /// Sum of support probabilities plus tail.
    pub fn total(&self) -> f64 {
        self.support.values().sum::<f64>() + self.tail
    }

    /// Support iterator in value order.
    pub fn iter(&self) -> impl Iterator<Item = (&Value, &f64)> {
        self.support.iter()
    }

    /// Number of support entries.
    pub fn len(&self) -> usize {
        self.support.len()
    }

    /// Whether the support is empty.
    pub fn is_empty(&self) -> bool {
        self.support.is_empty()
    }

    /// Expectation of a scalar-valued distribution; the tail contributes nothing.
    pub fn expectation(&self) -> Result<f64> {
        let mut e = 0.0;
        for (v, p) in &self.support {
            e += v.as_int()? as f64 * p;
        }
        Ok(e)
    }

    /// `P(X >= k)` for a scalar-valued distribution, tail counted as above any bound.
    pub fn p_at_least(&self, k: i64) -> f64 {
        self.support
            .iter()
            .filter(|(v, _)| matches!(v, Value::Int(x) if *x >= k))
            .map(|(_, p)| p)
            .sum::<f64>()
            + self.tail
    }

    /// Largest absolute difference over the union of both supports (tails compared too).
    pub fn max_abs_diff(&self, other: &Distribution) -> f64 {
        let mut d: f64 = (self.tail - other.tail).abs();
        for v in self.support.keys().chain(other.support.keys()) {
            d = d.max((self.p(v) - other.p(v)).abs());
        }
        d
    }

    /// Check the normalization invariant `sum(support) + tail = 1 ± tol`.
    pub fn check_normalized(&self, tol: f64) -> Result<()> {
        let total = self.total();
        if (total - 1.0).abs() > tol {
            return Err(Error::NotStochastic {
                what: "distribution".into(),
                sum: total,
                tol,
            });
        }
        Ok(())
    }

    /// Marginalize a pair-valued distribution to its first component.
    pub fn marginal_first(&self) -> Result<Distribution> {
        let mut out: BTreeMap<Value, f64> = BTreeMap::new();
        for (v, p) in &self.support {
            match v {
                Value::Pair(a, _) => *out.entry(Value::Int(*a)).or_insert(0.0) += p,
                Value::Int(_) => return Err(Error::invalid("marginal of a scalar distribution")),
            }
        }
        Distribution::new(out, self.tail)
    }

    /// Marginalize a pair-valued distribution to its second component.
    pub fn marginal_second(&self) -> Result<Distribution> {
        let mut out: BTreeMap<Value, f64> = BTreeMap::new();
        for (v, p) in &self.support {
            match v {
                Value::Pair(_, b) => *out.entry(Value::Int(*b)).or_insert(0.0) += p,
                Value::Int(_) => return Err(Error::invalid("marginal of a scalar distribution")),
            }
        }
        Distribution::new(out, self.tail)
    }
}

/// Joint distribution over (state, value) pairs, the table `f_t` of the engines.
#[derive(Debug, Clone, Default)]
pub struct StateValueDistribution {
    entries: BTreeMap<(usize, Value), f64>,
}

impl StateValueDistribution {
    pub(crate) fn from_map(entries: BTreeMap<(usize, Value), f64>) -> Self {
        StateValueDistribution { entries }
    }

    /// Probability of a (state, value) pair.
    pub fn p(&self, state: usize, v: Value) -> f64 {
        self.entries.get(&(state, v)).copied().unwrap_or(0.0)
    }

    /// Iterator over ((state, value), probability) entries.
    pub fn iter(&self) -> impl Iterator<Item = (&(usize, Value), &f64)> {
        self.entries.iter()
    }

    /// Total probability mass.
    pub fn total(&self) -> f64 {
        self.entries.values().sum()
    }

    /// Marginal distribution of the value process.
    pub fn value_marginal(&self) -> Distribution {
        let mut out: BTreeMap<Value, f64> = BTreeMap::new();
        for ((_, v), p) in &self.entries {
            *out.entry(*v).or_insert(0.0) += p;
        }
        Distribution::new(out, 0.0).expect("marginal of valid table")
    }

    /// Marginal distribution of the state process.
    pub fn state_marginal(&self, n_states: usize) -> Vec<f64> {
        let mut out = vec![0.0; n_states];
        for ((q, _), p) in &self.entries {
            out[*q] += p;
        }
        out
    }

    /// Largest absolute difference over the union of both supports.
    pub fn max_abs_diff(&self, other: &StateValueDistribution) -> f64 {
        let mut d: f64 = 0.0;
        for (k, p) in &self.entries {
            d = d.max((p - other.entries.get(k).copied().unwrap_or(0.0)).abs());
        }
        for (k, p) in &other.entries {
            d = d.max((p - self.entries.get(k).copied().unwrap_or(0.0)).abs());
        }
        d
    }
}
