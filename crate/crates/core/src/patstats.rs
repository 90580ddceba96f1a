//! Pattern occurrence statistics on random texts.
//!
//! Builds the pattern automaton (Aho-Corasick or the generalized-string
//! pipeline), rewrites it for the counting scheme, couples it with a text
//! model and queries the PAA engines: occurrence-count distributions,
//! waiting times for the first and for subsequent occurrences, and the clump
//! size and clump start distributions.

use std::collections::{BTreeMap, BTreeSet};

use crate::daa::{
    apply_scheme, counting_daa, minimize, paa_from_daa, ComposedPaa, CountScheme, CountingDfa,
    PatternSpec,
};
use crate::dist::{Distribution, Value, ValueDomain};
use crate::error::{Error, Result};
use crate::paa::{Method, Operation, Paa};
use crate::textmodel::TextModel;

/// Which occurrence the waiting time refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WaitingMode {
    /// Distance from the text start to the first occurrence.
    First,
    /// Limiting distance between consecutive occurrences: the chain starts
    /// from the stationary distribution restricted to the match states.
    Subsequent,
}

/// Pattern automaton coupled with a text model.
#[derive(Debug, Clone)]
pub struct PatternAutomaton {
    pub composed: ComposedPaa,
    pub dfa: CountingDfa,
}

impl PatternAutomaton {
    /// Build for a pattern, model and counting scheme, minimized after the
    /// scheme rewrite and truncated at `m_trunc`.
    pub fn new(
        pattern: &PatternSpec,
        model: &TextModel,
        m_trunc: i64,
        scheme: CountScheme,
    ) -> Result<Self> {
        let base = pattern.counting_dfa(model.alphabet())?;
        let dfa = minimize(&apply_scheme(&base, scheme)?);
        let daa = counting_daa(&dfa, m_trunc)?;
        let composed = paa_from_daa(&daa, model)?;
        Ok(PatternAutomaton { composed, dfa })
    }

    /// PAA states whose automaton component emits a match.
    pub fn match_states(&self) -> BTreeSet<usize> {
        self.composed.states_where(|d| self.dfa.emission(d) > 0)
    }

    /// Match-count emission of a PAA state.
    pub fn emission_of(&self, paa_state: usize) -> u32 {
        self.dfa.emission(self.composed.parts[paa_state].0)
    }
}

/// Distribution of the truncated occurrence count `min(M, count)` in a
/// random text of length `n`.
pub fn occurrence_distribution(
    pattern: &PatternSpec,
    model: &TextModel,
    n: usize,
    m_trunc: i64,
    scheme: CountScheme,
    method: Method,
) -> Result<Distribution> {
    let automaton = PatternAutomaton::new(pattern, model, m_trunc, scheme)?;
    automaton.composed.paa.value_distribution(n, method)
}

/// Waiting-time distribution for pattern occurrences up to `tmax`.
///
/// An occurrence event is the chain entering a state that emits a match, so
/// the computation runs on the match-position automaton; the scheme does not
/// change which states emit.
pub fn pattern_waiting_time(
    pattern: &PatternSpec,
    model: &TextModel,
    tmax: usize,
    mode: WaitingMode,
) -> Result<Distribution> {
    let automaton = PatternAutomaton::new(pattern, model, 1, CountScheme::MatchPosition)?;
    let chain = automaton.composed.paa.chain();
    let targets = automaton.match_states();
    match mode {
        WaitingMode::First => {
            let mut alpha = vec![0.0; chain.n_states()];
            alpha[automaton.composed.paa.start_state()] = 1.0;
            chain.waiting_time_states(&alpha, &targets, tmax)
        }
        WaitingMode::Subsequent => chain.return_time_states(&targets, tmax, 1e-12),
    }
}

// ---------------------------------------------------------------------------
// Clumps
// ---------------------------------------------------------------------------

/// Clump size distribution plus the mass not yet accounted at termination.
#[derive(Debug, Clone)]
pub struct ClumpResult {
    /// `Ψ(h)` for `h = 1..=M`; the `M` bucket stands for "at least M".
    pub psi: Distribution,
    /// `1 − Σ_h Ψ(h)` when the iteration stopped.
    pub residual: f64,
}

fn clump_pattern_length(pattern: &PatternSpec) -> Result<usize> {
    let lengths = pattern.instance_lengths()?;
    if lengths.len() != 1 {
        return Err(Error::Unsupported(
            "clump statistics need all pattern instances to share one length".into(),
        ));
    }
    let m = *lengths.iter().next().unwrap();
    if m < 2 {
        return Err(Error::invalid(
            "clump statistics need pattern length at least 2",
        ));
    }
    Ok(m)
}

fn clump_base(pattern: &PatternSpec, model: &TextModel) -> Result<(PatternAutomaton, usize)> {
    let m = clump_pattern_length(pattern)?;
    if pattern.starts_with_wildcard(model.alphabet())? {
        return Err(Error::Unsupported(
            "clump statistics are undefined for patterns starting with a wildcard position".into(),
        ));
    }
    // Truncation plays no role here; the automaton only supplies match
    // emissions and the state chain.
    let automaton = PatternAutomaton::new(pattern, model, 1, CountScheme::Overlapping)?;
    automaton.composed.paa.chain().ensure_ergodic()?;
    Ok((automaton, m))
}

/// Limiting distribution of PAA states at clump starts.
///
/// Iterates the joint law of (state, steps since the last match, capped at
/// the pattern length) and conditions on "a match is emitted now, the
/// previous one is at least a pattern length away" until the conditional
/// stabilizes within `tol`.
pub fn clump_start_distribution(
    pattern: &PatternSpec,
    model: &TextModel,
    tol: f64,
) -> Result<(PatternAutomaton, Vec<f64>)> {
    let (automaton, m) = clump_base(pattern, model)?;
    let (gamma, _) = clump_start_gamma(&automaton, m, tol)?;
    Ok((automaton, gamma))
}

/// Returns the normalized clump start distribution and the limiting rate of
/// clump starts per position.
fn clump_start_gamma(automaton: &PatternAutomaton, m: usize, tol: f64) -> Result<(Vec<f64>, f64)> {
    if tol <= 0.0 {
        return Err(Error::invalid("tolerance must be positive"));
    }
    let paa = &automaton.composed.paa;
    let nq = paa.n_states();
    let emits: Vec<bool> = (0..nq).map(|q| automaton.emission_of(q) > 0).collect();
    // Joint table over (state, gap) where gap = min(steps since last match, m);
    // gap = m covers "no match yet", which vanishes in the limit.
    let gap_levels = m + 1; // gaps 0..=m; only 1..=m occur after the start
    let idx = |q: usize, gap: usize| q * gap_levels + gap;
    let mut joint = vec![0.0; nq * gap_levels];
    joint[idx(paa.start_state(), m)] = 1.0;
    let mut prev_gamma: Option<Vec<f64>> = None;
    const MAX_ITERS: usize = 100_000;
    for _ in 0..MAX_ITERS {
        // One chain step; the gap resets after a match and saturates at m.
        let mut next = vec![0.0; nq * gap_levels];
        for q in 0..nq {
            for gap in 0..gap_levels {
                let p = joint[idx(q, gap)];
                if p == 0.0 {
                    continue;
                }
                let gap2 = if emits[q] { 1 } else { (gap + 1).min(m) };
                for &(q2, tp) in paa.transition_row(q) {
                    next[idx(q2, gap2)] += p * tp;
                }
            }
        }
        joint = next;
        let mut gamma: Vec<f64> = (0..nq)
            .map(|q| if emits[q] { joint[idx(q, m)] } else { 0.0 })
            .collect();
        let total: f64 = gamma.iter().sum();
        if total > 0.0 {
            for g in &mut gamma {
                *g /= total;
            }
            if let Some(prev) = &prev_gamma {
                let diff = gamma
                    .iter()
                    .zip(prev)
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0f64, f64::max);
                if diff < tol {
                    return Ok((gamma, total));
                }
            }
            prev_gamma = Some(gamma);
        }
    }
    Err(Error::NonConvergence {
        what: "clump start distribution".into(),
        iterations: MAX_ITERS,
        residual: tol,
    })
}

/// The PAA whose value process tracks (matches in the current clump,
/// steps since the last match); the start row is the clump start
/// distribution.
fn clump_paa(automaton: &PatternAutomaton, gamma: &[f64], m: usize, m_trunc: i64) -> Result<Paa> {
    let paa = &automaton.composed.paa;
    let nq = paa.n_states();
    let gap_mark = m as i64; // second component m encodes "clump over"
    let mut labels: Vec<String> = (0..nq).map(|q| paa.state_label(q).to_string()).collect();
    labels.push("clump-start".into());
    let mut transitions: Vec<Vec<(usize, f64)>> =
        (0..nq).map(|q| paa.transition_row(q).to_vec()).collect();
    transitions.push(
        gamma
            .iter()
            .enumerate()
            .filter(|&(_, &g)| g > 0.0)
            .map(|(q, &g)| (q, g))
            .collect(),
    );
    let mut emissions: Vec<Vec<(Value, f64)>> = (0..nq)
        .map(|q| vec![(Value::Int(automaton.emission_of(q) as i64), 1.0)])
        .collect();
    emissions.push(vec![(Value::Int(0), 1.0)]);
    let op = Operation::new(format!("clump-track(m={m},cap={m_trunc})"), move |v, e| {
        let (Value::Pair(h, gap), Value::Int(e)) = (v, e) else {
            return v;
        };
        if gap >= gap_mark - 1 {
            Value::Pair(h, gap_mark)
        } else if e > 0 {
            Value::Pair((h + e).min(m_trunc), 0)
        } else {
            Value::Pair(h, gap + 1)
        }
    });
    let ops = vec![op; nq + 1];
    Paa::new(
        labels,
        nq,
        transitions,
        ValueDomain::PairRange {
            lo0: 0,
            hi0: m_trunc,
            lo1: 0,
            hi1: gap_mark,
        },
        Value::Pair(0, 0),
        emissions,
        ops,
    )
}

/// Clump size distribution `Ψ`, truncated at `m_trunc`.
///
/// Iterates the clump PAA, harvesting the mass whose gap counter reaches the
/// pattern length (the clump just ended) until the unaccounted mass drops
/// below `epsilon`; the iteration cap is ten times the `M·m` bound on clump
/// length.
pub fn clump_size_distribution(
    pattern: &PatternSpec,
    model: &TextModel,
    m_trunc: i64,
    epsilon: f64,
) -> Result<ClumpResult> {
    if m_trunc < 1 {
        return Err(Error::invalid("clump truncation must be at least 1"));
    }
    if epsilon <= 0.0 {
        return Err(Error::invalid("epsilon must be positive"));
    }
    let (automaton, m) = clump_base(pattern, model)?;
    let (gamma, _) = clump_start_gamma(&automaton, m, 1e-13)?;
    let paa = clump_paa(&automaton, &gamma, m, m_trunc)?;
    let ended = m as i64;
    let mut table = paa.initial_table();
    let mut psi: BTreeMap<Value, f64> = BTreeMap::new();
    let cap = 10 * (m_trunc as usize) * m;
    let mut residual = 1.0;
    for _ in 0..cap {
        table = paa.step_table(&table)?;
        // Harvest the mass whose gap counter just reached m-1 (the clump is
        // known to be over) and drop it from the table; what remains are
        // clumps still in progress.
        table.retain(|&(_, v), p| match v {
            Value::Pair(h, gap) if gap >= ended - 1 => {
                if gap == ended - 1 {
                    *psi.entry(Value::Int(h)).or_insert(0.0) += *p;
                }
                false
            }
            _ => true,
        });
        residual = 1.0 - psi.values().sum::<f64>();
        if residual < epsilon {
            return Ok(ClumpResult {
                psi: Distribution::new(psi, 0.0)?,
                residual: residual.max(0.0),
            });
        }
    }
    Err(Error::NonConvergence {
        what: "clump size distribution".into(),
        iterations: cap,
        residual,
    })
}
