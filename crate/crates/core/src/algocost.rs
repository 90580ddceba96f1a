//! Exact cost distributions of window-based pattern matching algorithms.
//!
//! A window algorithm is characterized by its window size, a per-window cost
//! (character accesses) and a per-window shift. The automaton simulates the
//! algorithm on a random text: the value `(t, ξ)` tracks the end position of
//! the current window and the cost so far, and collapses `t` to the text
//! length once the next window would not fit, freezing the total cost.
//!
//! Windows are regenerated one character per step through intermediate
//! buffer states rather than one window per step; this keeps the state
//! fan-out at the alphabet size instead of `|Σ|^shift` and computes the same
//! distribution.

use std::collections::{BTreeMap, HashMap, VecDeque};

use crate::dist::{Distribution, Value, ValueDomain};
use crate::error::{max_states, Error, Result};
use crate::paa::{Operation, Paa};
use crate::textmodel::TextModel;

/// Which window-based algorithm a spec describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WindowAlgorithm {
    Horspool,
    Sunday,
}

/// Window size, cost function and shift function of a window algorithm.
#[derive(Debug, Clone)]
pub struct AlgorithmSpec {
    pattern: Vec<char>,
    algorithm: WindowAlgorithm,
}

impl AlgorithmSpec {
    /// Pattern under search.
    pub fn pattern(&self) -> &[char] {
        &self.pattern
    }

    /// The window size `z`.
    pub fn window_size(&self) -> usize {
        match self.algorithm {
            WindowAlgorithm::Horspool => self.pattern.len(),
            WindowAlgorithm::Sunday => self.pattern.len() + 1,
        }
    }

    /// Largest possible shift.
    pub fn max_shift(&self) -> usize {
        match self.algorithm {
            WindowAlgorithm::Horspool => self.pattern.len(),
            WindowAlgorithm::Sunday => self.pattern.len() + 1,
        }
    }

    /// Largest possible window cost.
    pub fn max_window_cost(&self) -> usize {
        match self.algorithm {
            WindowAlgorithm::Horspool => self.pattern.len(),
            WindowAlgorithm::Sunday => self.pattern.len() + 1,
        }
    }

    /// Character accesses caused by a window.
    ///
    /// Both algorithms compare the pattern right to left until the first
    /// mismatch; Sunday additionally reads the character after the pattern
    /// part to look up its shift, which costs one access.
    pub fn window_cost(&self, window: &[char]) -> usize {
        let m = self.pattern.len();
        debug_assert_eq!(window.len(), self.window_size());
        let mut cost = 0;
        for i in 0..m {
            cost += 1;
            if window[m - 1 - i] != self.pattern[m - 1 - i] {
                break;
            }
        }
        match self.algorithm {
            WindowAlgorithm::Horspool => cost,
            WindowAlgorithm::Sunday => cost + 1,
        }
    }

    /// Number of positions the window advances.
    pub fn window_shift(&self, window: &[char]) -> usize {
        let m = self.pattern.len();
        match self.algorithm {
            WindowAlgorithm::Horspool => {
                let last = window[m - 1];
                let right = self.pattern[..m - 1]
                    .iter()
                    .rposition(|&c| c == last)
                    .map(|i| i as i64)
                    .unwrap_or(-1);
                ((m as i64 - 1) - right) as usize
            }
            WindowAlgorithm::Sunday => {
                let next = window[m];
                match self.pattern.iter().rposition(|&c| c == next) {
                    Some(i) => m - i,
                    None => m + 1,
                }
            }
        }
    }
}

/// Horspool's algorithm: window size `m`, right-to-left comparisons, shift by
/// the rightmost occurrence of the last window character in the pattern.
pub fn horspool_spec(pattern: &str) -> Result<AlgorithmSpec> {
    let pattern: Vec<char> = pattern.chars().collect();
    if pattern.is_empty() {
        return Err(Error::invalid("empty pattern"));
    }
    Ok(AlgorithmSpec {
        pattern,
        algorithm: WindowAlgorithm::Horspool,
    })
}

/// Sunday's variant: window size `m + 1`, the extra character drives the
/// shift (distance from its last occurrence in the pattern, `m + 1` when
/// absent) and is charged as one access per window.
pub fn sunday_spec(pattern: &str) -> Result<AlgorithmSpec> {
    let pattern: Vec<char> = pattern.chars().collect();
    if pattern.is_empty() {
        return Err(Error::invalid("empty pattern"));
    }
    Ok(AlgorithmSpec {
        pattern,
        algorithm: WindowAlgorithm::Sunday,
    })
}

// ---------------------------------------------------------------------------
// Cost distribution
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
enum WinState {
    /// Partially regenerated window; transitions emit one text character.
    Buffer(Vec<u8>),
    /// Complete window; moves to its exit state without consuming input.
    Window(Vec<u8>),
    /// Window just processed: entered with emission (shift, cost), holding
    /// the carried-over window suffix.
    Exit(u16, u16, Vec<u8>),
}

/// Exact distribution of the total cost of processing a random text of
/// length `n`, marginalized over the final automaton state.
pub fn cost_distribution(
    spec: &AlgorithmSpec,
    model: &TextModel,
    n: usize,
) -> Result<Distribution> {
    let z = spec.window_size();
    if n < z {
        return Err(Error::invalid(format!(
            "text length {n} is shorter than the window size {z}"
        )));
    }
    let alphabet = model.alphabet();
    let window_count = (alphabet.len() as u128).checked_pow(z as u32);
    let limit = max_states();
    if window_count.is_none_or(|c| c > limit as u128) {
        return Err(Error::ResourceLimit {
            what: format!("window state space |Σ|^{z}"),
            needed: usize::MAX,
            limit,
        });
    }
    let paa = build_cost_paa(spec, model, n)?;
    let sentinel = n as i64;
    let mut table = paa.initial_table();
    let cap = 2 * n + z + 8;
    let mut steps = 0usize;
    while table
        .keys()
        .any(|&(_, v)| !matches!(v, Value::Pair(t, _) if t == sentinel))
    {
        table = paa.step_table(&table)?;
        steps += 1;
        if steps > cap {
            return Err(Error::NonConvergence {
                what: "window cost absorption".into(),
                iterations: cap,
                residual: f64::NAN,
            });
        }
    }
    let mut acc: BTreeMap<Value, f64> = BTreeMap::new();
    for (&(_, v), &p) in &table {
        if let Value::Pair(_, cost) = v {
            *acc.entry(Value::Int(cost)).or_insert(0.0) += p;
        }
    }
    Distribution::new(acc, 0.0)
}

fn build_cost_paa(spec: &AlgorithmSpec, model: &TextModel, n: usize) -> Result<Paa> {
    let z = spec.window_size();
    let limit = max_states();
    let n_i = n as i64;
    // At most n-z+1 windows get processed, so total cost never exceeds this;
    // the clamp below only serves totality of the operation on the domain.
    let cost_cap = ((n - z + 1) * spec.max_window_cost()) as i64;
    let advance = Operation::new(format!("window-advance({n})"), move |v, e| {
        let (Value::Pair(t, cost), Value::Pair(shift, extra)) = (v, e) else {
            return v;
        };
        if t == n_i {
            Value::Pair(n_i, cost)
        } else if t + shift >= n_i {
            Value::Pair(n_i, (cost + extra).min(cost_cap))
        } else {
            Value::Pair(t + shift, (cost + extra).min(cost_cap))
        }
    });

    let mut index: HashMap<(WinState, usize), usize> = HashMap::new();
    let mut keys: Vec<(WinState, usize)> = Vec::new();
    let mut labels: Vec<String> = Vec::new();
    let mut emissions: Vec<Vec<(Value, f64)>> = Vec::new();
    let mut rows: Vec<Vec<(usize, f64)>> = Vec::new();
    let mut queue: VecDeque<usize> = VecDeque::new();

    let describe = |state: &WinState, c: usize, model: &TextModel| -> String {
        let word = |chars: &[u8]| -> String {
            chars
                .iter()
                .map(|&k| model.alphabet()[k as usize])
                .collect()
        };
        match state {
            WinState::Buffer(r) => format!("buf:{}/{}", word(r), model.contexts()[c]),
            WinState::Window(w) => format!("win:{}/{}", word(w), model.contexts()[c]),
            WinState::Exit(s, x, r) => {
                format!("exit({s},{x}):{}/{}", word(r), model.contexts()[c])
            }
        }
    };

    let intern = |state: WinState,
                  c: usize,
                  index: &mut HashMap<(WinState, usize), usize>,
                  keys: &mut Vec<(WinState, usize)>,
                  labels: &mut Vec<String>,
                  emissions: &mut Vec<Vec<(Value, f64)>>,
                  queue: &mut VecDeque<usize>|
     -> Result<usize> {
        let key = (state, c);
        if let Some(&id) = index.get(&key) {
            return Ok(id);
        }
        let id = keys.len();
        if id >= limit {
            return Err(Error::ResourceLimit {
                what: "window cost automaton".into(),
                needed: id + 1,
                limit,
            });
        }
        labels.push(describe(&key.0, c, model));
        emissions.push(match key.0 {
            WinState::Exit(shift, cost, _) => {
                vec![(Value::Pair(shift as i64, cost as i64), 1.0)]
            }
            _ => vec![(Value::Pair(0, 0), 1.0)],
        });
        index.insert(key.clone(), id);
        keys.push(key);
        queue.push_back(id);
        Ok(id)
    };

    let start = intern(
        WinState::Buffer(Vec::new()),
        model.start_context(),
        &mut index,
        &mut keys,
        &mut labels,
        &mut emissions,
        &mut queue,
    )?;
    debug_assert_eq!(start, 0);

    while let Some(id) = queue.pop_front() {
        let (state, c) = keys[id].clone();
        let mut row: BTreeMap<usize, f64> = BTreeMap::new();
        match state {
            WinState::Window(w) => {
                let chars: Vec<char> = w.iter().map(|&k| model.alphabet()[k as usize]).collect();
                let shift = spec.window_shift(&chars);
                let cost = spec.window_cost(&chars);
                let suffix = w[shift.min(z)..].to_vec();
                let next = intern(
                    WinState::Exit(shift as u16, cost as u16, suffix),
                    c,
                    &mut index,
                    &mut keys,
                    &mut labels,
                    &mut emissions,
                    &mut queue,
                )?;
                row.insert(next, 1.0);
            }
            WinState::Buffer(r) | WinState::Exit(_, _, r) => {
                for &(k, c2, p) in model.kernel_row(c) {
                    let mut extended = r.clone();
                    extended.push(k as u8);
                    let next_state = if extended.len() == z {
                        WinState::Window(extended)
                    } else {
                        WinState::Buffer(extended)
                    };
                    let next = intern(
                        next_state,
                        c2,
                        &mut index,
                        &mut keys,
                        &mut labels,
                        &mut emissions,
                        &mut queue,
                    )?;
                    *row.entry(next).or_insert(0.0) += p;
                }
            }
        }
        rows.push(row.into_iter().collect());
    }

    let n_states = keys.len();
    Paa::new(
        labels,
        0,
        rows,
        ValueDomain::PairRange {
            lo0: z as i64 - 1,
            hi0: n as i64,
            lo1: 0,
            hi1: cost_cap,
        },
        Value::Pair(z as i64 - 1, 0),
        emissions,
        vec![advance; n_states],
    )
}
