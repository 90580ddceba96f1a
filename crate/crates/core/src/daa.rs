//! Deterministic arithmetic automata and the pattern-automaton pipeline.
//!
//! A [`Daa`] is a DFA whose states carry a fixed emission and a value
//! operation: reading a string deterministically computes a value.
//! [`paa_from_daa`] couples a DAA with a random text model into a [`Paa`]
//! whose value distribution after `t` steps equals the distribution of the
//! DAA value over random length-`t` texts.
//!
//! The pattern side builds counting DFAs from finite string sets
//! (Aho-Corasick), generalized strings (NFA plus subset construction) and
//! Prosite patterns (expansion into generalized strings), minimizes them with
//! Hopcroft's algorithm seeded by the emission partition, and rewrites them
//! for the three counting schemes.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet, VecDeque};

use crate::dist::{Value, ValueDomain};
use crate::error::{max_states, Error, Result};
use crate::paa::{Operation, Paa};
use crate::textmodel::TextModel;

/// The 20-letter amino acid alphabet used by Prosite patterns.
pub const AMINO_ACIDS: [char; 20] = [
    'A', 'C', 'D', 'E', 'F', 'G', 'H', 'I', 'K', 'L', 'M', 'N', 'P', 'Q', 'R', 'S', 'T', 'V', 'W',
    'Y',
];

// ---------------------------------------------------------------------------
// Deterministic arithmetic automata
// ---------------------------------------------------------------------------

/// A deterministic arithmetic automaton.
#[derive(Debug, Clone)]
pub struct Daa {
    labels: Vec<String>,
    start: usize,
    alphabet: Vec<char>,
    /// Total transition table, `delta[state][char_id]`.
    delta: Vec<Vec<usize>>,
    value_domain: ValueDomain,
    start_value: Value,
    emissions: Vec<Value>,
    ops: Vec<Operation>,
}

impl Daa {
    /// Build and validate a DAA; `delta` must be total.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        labels: Vec<String>,
        start: usize,
        alphabet: Vec<char>,
        delta: Vec<Vec<usize>>,
        value_domain: ValueDomain,
        start_value: Value,
        emissions: Vec<Value>,
        ops: Vec<Operation>,
    ) -> Result<Self> {
        let n = labels.len();
        if n == 0 || start >= n {
            return Err(Error::invalid("invalid DAA state space"));
        }
        if delta.len() != n || emissions.len() != n || ops.len() != n {
            return Err(Error::invalid("DAA tables must match the state count"));
        }
        for row in &delta {
            if row.len() != alphabet.len() {
                return Err(Error::invalid("DAA transition table is not total"));
            }
            if let Some(&bad) = row.iter().find(|&&q| q >= n) {
                return Err(Error::invalid(format!(
                    "DAA transition target {bad} out of range"
                )));
            }
        }
        if !value_domain.contains(&start_value) {
            return Err(Error::invalid("DAA start value outside the value domain"));
        }
        Ok(Daa {
            labels,
            start,
            alphabet,
            delta,
            value_domain,
            start_value,
            emissions,
            ops,
        })
    }

    /// State labels.
    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    /// The DAA alphabet.
    pub fn alphabet(&self) -> &[char] {
        &self.alphabet
    }

    /// Number of states.
    pub fn n_states(&self) -> usize {
        self.labels.len()
    }

    /// Emission of a state.
    pub fn emission(&self, q: usize) -> Value {
        self.emissions[q]
    }

    /// The value computed for an input string, via the joint transition.
    pub fn value(&self, s: &str) -> Result<Value> {
        Ok(self.run(s)?.1)
    }

    /// Final (state, value) pair after reading `s`.
    pub fn run(&self, s: &str) -> Result<(usize, Value)> {
        let mut q = self.start;
        let mut v = self.start_value;
        for ch in s.chars() {
            let k = self.alphabet.iter().position(|&a| a == ch).ok_or_else(|| {
                Error::UnknownCharacter {
                    ch,
                    alphabet: self.alphabet.iter().collect(),
                }
            })?;
            q = self.delta[q][k];
            v = self.ops[q].apply(v, self.emissions[q]);
            if !self.value_domain.contains(&v) {
                return Err(Error::DomainOverflow {
                    op: self.ops[q].tag().into(),
                    state: self.labels[q].clone(),
                    value: v.to_string(),
                });
            }
        }
        Ok((q, v))
    }
}

/// A PAA built from a DAA and a text model, with the provenance of each
/// PAA state: which DAA state and which model context it combines.
#[derive(Debug, Clone)]
pub struct ComposedPaa {
    pub paa: Paa,
    /// For PAA state `i`: `(DAA state, model context)`.
    pub parts: Vec<(usize, usize)>,
}

impl ComposedPaa {
    /// PAA states whose DAA component satisfies the predicate.
    pub fn states_where(&self, mut pred: impl FnMut(usize) -> bool) -> BTreeSet<usize> {
        self.parts
            .iter()
            .enumerate()
            .filter(|(_, &(d, _))| pred(d))
            .map(|(i, _)| i)
            .collect()
    }
}

/// Couple a DAA with a text model into a PAA on the reachable part of
/// `DAA states × contexts`, with Dirac emissions.
pub fn paa_from_daa(daa: &Daa, model: &TextModel) -> Result<ComposedPaa> {
    // The model may order its alphabet differently; align by character.
    let mut char_map = Vec::with_capacity(model.alphabet().len());
    for &ch in model.alphabet() {
        let k =
            daa.alphabet
                .iter()
                .position(|&a| a == ch)
                .ok_or_else(|| Error::AlphabetMismatch {
                    left: daa.alphabet.iter().collect(),
                    right: model.alphabet().iter().collect(),
                })?;
        char_map.push(k);
    }
    let mut index: HashMap<(usize, usize), usize> = HashMap::new();
    let mut parts: Vec<(usize, usize)> = Vec::new();
    let mut queue = VecDeque::new();
    let start = (daa.start, model.start_context());
    index.insert(start, 0);
    parts.push(start);
    queue.push_back(start);
    let mut rows: Vec<Vec<(usize, f64)>> = Vec::new();
    while let Some((q, c)) = queue.pop_front() {
        let mut row: BTreeMap<(usize, usize), f64> = BTreeMap::new();
        for &(k_model, c2, p) in model.kernel_row(c) {
            let q2 = daa.delta[q][char_map[k_model]];
            *row.entry((q2, c2)).or_insert(0.0) += p;
        }
        let mut out = Vec::with_capacity(row.len());
        for (key, p) in row {
            let id = *index.entry(key).or_insert_with(|| {
                parts.push(key);
                queue.push_back(key);
                parts.len() - 1
            });
            out.push((id, p));
        }
        rows.push(out);
        if parts.len() > max_states() {
            return Err(Error::ResourceLimit {
                what: "PAA state space".into(),
                needed: parts.len(),
                limit: max_states(),
            });
        }
    }
    //`rows` grew in discovery order, which matches `parts` indices.
    let labels = parts
        .iter()
        .map(|&(q, c)| format!("{}/{}", daa.labels[q], model.contexts()[c]))
        .collect();
    let emissions = parts
        .iter()
        .map(|&(q, _)| vec![(daa.emissions[q], 1.0)])
        .collect();
    let ops = parts.iter().map(|&(q, _)| daa.ops[q].clone()).collect();
    let paa = Paa::new(
        labels,
        0,
        rows,
        daa.value_domain.clone(),
        daa.start_value,
        emissions,
        ops,
    )?;
    Ok(ComposedPaa { paa, parts })
}

// ---------------------------------------------------------------------------
// Counting DFAs
// ---------------------------------------------------------------------------

/// Whether counting-DFA emissions carry match multiplicities or only
/// a match-position indicator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EmissionKind {
    /// Emissions give the number of pattern occurrences ending in a state.
    Multiplicity,
    /// Emissions only flag states where at least one occurrence ends.
    Indicator,
}

/// How pattern occurrences are tallied while scanning.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CountScheme {
    /// Count text positions where at least one occurrence ends.
    MatchPosition,
    /// Count every occurrence, overlaps included.
    Overlapping,
    /// Count a maximal set of non-overlapping occurrences (greedy by end).
    NonOverlapping,
}

/// A DFA whose states emit match counts.
#[derive(Debug, Clone)]
pub struct CountingDfa {
    labels: Vec<String>,
    start: usize,
    alphabet: Vec<char>,
    delta: Vec<Vec<usize>>,
    emissions: Vec<u32>,
    kind: EmissionKind,
}

impl CountingDfa {
    /// Number of states.
    pub fn n_states(&self) -> usize {
        self.labels.len()
    }

    /// State labels.
    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    /// The automaton alphabet.
    pub fn alphabet(&self) -> &[char] {
        &self.alphabet
    }

    /// Match-count emission of a state.
    pub fn emission(&self, q: usize) -> u32 {
        self.emissions[q]
    }

    /// Emission kind (multiplicities or indicator).
    pub fn kind(&self) -> EmissionKind {
        self.kind
    }

    /// Cumulative emitted count over an input string.
    pub fn count(&self, s: &str) -> Result<u64> {
        let mut q = self.start;
        let mut total = 0u64;
        for ch in s.chars() {
            let k = self.alphabet.iter().position(|&a| a == ch).ok_or_else(|| {
                Error::UnknownCharacter {
                    ch,
                    alphabet: self.alphabet.iter().collect(),
                }
            })?;
            q = self.delta[q][k];
            total += self.emissions[q] as u64;
        }
        Ok(total)
    }

    fn prune_unreachable(&self) -> CountingDfa {
        let n = self.labels.len();
        let mut keep = vec![false; n];
        let mut queue = VecDeque::from([self.start]);
        keep[self.start] = true;
        while let Some(q) = queue.pop_front() {
            for &q2 in &self.delta[q] {
                if !keep[q2] {
                    keep[q2] = true;
                    queue.push_back(q2);
                }
            }
        }
        let mut remap = vec![usize::MAX; n];
        let mut labels = Vec::new();
        let mut emissions = Vec::new();
        for q in 0..n {
            if keep[q] {
                remap[q] = labels.len();
                labels.push(self.labels[q].clone());
                emissions.push(self.emissions[q]);
            }
        }
        let delta = (0..n)
            .filter(|&q| keep[q])
            .map(|q| self.delta[q].iter().map(|&t| remap[t]).collect())
            .collect();
        CountingDfa {
            labels,
            start: remap[self.start],
            alphabet: self.alphabet.clone(),
            delta,
            emissions,
            kind: self.kind,
        }
    }
}

/// Aho-Corasick automaton of a finite string set, flattened to a total DFA.
///
/// States are the distinct pattern prefixes; emissions count the patterns
/// ending in a state (suffix matches included, read off the output function).
pub fn aho_corasick(patterns: &[String], alphabet: &[char]) -> Result<CountingDfa> {
    if patterns.is_empty() {
        return Err(Error::invalid("empty pattern set"));
    }
    let mut unique: Vec<&String> = patterns.iter().collect();
    unique.sort();
    unique.dedup();
    let char_id = |ch: char| -> Result<usize> {
        alphabet
            .iter()
            .position(|&a| a == ch)
            .ok_or_else(|| Error::UnknownCharacter {
                ch,
                alphabet: alphabet.iter().collect(),
            })
    };
    // Trie of pattern prefixes.
    let mut children: Vec<BTreeMap<usize, usize>> = vec![BTreeMap::new()];
    let mut labels: Vec<String> = vec![String::new()];
    let mut out: Vec<u32> = vec![0];
    for p in unique {
        if p.is_empty() {
            return Err(Error::invalid("empty pattern string"));
        }
        let mut q = 0usize;
        for ch in p.chars() {
            let k = char_id(ch)?;
            q = match children[q].get(&k) {
                Some(&c) => c,
                None => {
                    children.push(BTreeMap::new());
                    labels.push(format!("{}{}", labels[q], ch));
                    out.push(0);
                    let id = children.len() - 1;
                    children[q].insert(k, id);
                    id
                }
            };
        }
        out[q] += 1;
    }
    // Failure links in BFS order, flattening goto plus failure into delta.
    let n = children.len();
    let a_len = alphabet.len();
    let mut fail = vec![0usize; n];
    let mut delta = vec![vec![0usize; a_len]; n];
    let mut queue = VecDeque::new();
    for k in 0..a_len {
        if let Some(&c) = children[0].get(&k) {
            delta[0][k] = c;
            fail[c] = 0;
            queue.push_back(c);
        } else {
            delta[0][k] = 0;
        }
    }
    while let Some(q) = queue.pop_front() {
        out[q] += out[fail[q]];
        for k in 0..a_len {
            if let Some(&c) = children[q].get(&k) {
                delta[q][k] = c;
                fail[c] = delta[fail[q]][k];
                queue.push_back(c);
            } else {
                delta[q][k] = delta[fail[q]][k];
            }
        }
    }
    Ok(CountingDfa {
        labels,
        start: 0,
        alphabet: alphabet.to_vec(),
        delta,
        emissions: out,
        kind: EmissionKind::Multiplicity,
    })
}

// ---------------------------------------------------------------------------
// Generalized strings: NFA and subset construction
// ---------------------------------------------------------------------------

/// A position of a generalized string: the set of characters it admits.
pub type CharClass = BTreeSet<char>;

/// A generalized string, one character class per position.
pub type GeneralizedString = Vec<CharClass>;

/// Convert a plain string to a generalized string of singleton classes.
pub fn generalized_from_string(s: &str) -> GeneralizedString {
    s.chars().map(|c| BTreeSet::from([c])).collect()
}

/// An NFA recognizing all strings that end with an instance of one of the
/// generalized strings: one linear chain per pattern behind a shared,
/// self-looping start state.
#[derive(Debug, Clone)]
pub struct Nfa {
    alphabet: Vec<char>,
    /// `transitions[state][char_id]` lists successor states.
    transitions: Vec<Vec<Vec<usize>>>,
    start: usize,
    /// Match multiplicity of each state (positive for chain ends).
    accept_mult: Vec<u32>,
}

impl Nfa {
    /// Number of states.
    pub fn n_states(&self) -> usize {
        self.transitions.len()
    }

    /// Match multiplicities.
    pub fn accept_mult(&self) -> &[u32] {
        &self.accept_mult
    }
}

/// Build the shared-start chain NFA for a set of generalized strings.
///
/// Duplicate patterns collapse: the input is a set, so an instance matching
/// several distinct generalized strings counts once per distinct string.
pub fn nfa_from_generalized(patterns: &[GeneralizedString], alphabet: &[char]) -> Result<Nfa> {
    if patterns.is_empty() {
        return Err(Error::invalid("empty pattern set"));
    }
    let patterns: Vec<&GeneralizedString> = {
        let mut seen = BTreeSet::new();
        patterns.iter().filter(|p| seen.insert(*p)).collect()
    };
    let a_len = alphabet.len();
    let char_id = |ch: char| -> Result<usize> {
        alphabet
            .iter()
            .position(|&a| a == ch)
            .ok_or_else(|| Error::UnknownCharacter {
                ch,
                alphabet: alphabet.iter().collect(),
            })
    };
    let mut transitions: Vec<Vec<Vec<usize>>> = vec![vec![Vec::new(); a_len]];
    let mut accept_mult: Vec<u32> = vec![0];
    // Start state loops on the whole alphabet.
    for k in 0..a_len {
        transitions[0][k].push(0);
    }
    for pattern in patterns {
        if pattern.is_empty() {
            return Err(Error::invalid("empty generalized string"));
        }
        let mut prev = 0usize;
        for class in pattern {
            if class.is_empty() {
                return Err(Error::invalid("empty character class"));
            }
            transitions.push(vec![Vec::new(); a_len]);
            accept_mult.push(0);
            let id = transitions.len() - 1;
            for &ch in class {
                let k = char_id(ch)?;
                transitions[prev][k].push(id);
            }
            prev = id;
        }
        accept_mult[prev] += 1;
    }
    Ok(Nfa {
        alphabet: alphabet.to_vec(),
        transitions,
        start: 0,
        accept_mult,
    })
}

/// Classical subset construction over the reachable subsets.
///
/// The emission of a DFA state is the total match multiplicity of the NFA
/// states in its subset.
pub fn subset_construction(nfa: &Nfa) -> Result<CountingDfa> {
    let a_len = nfa.alphabet.len();
    let limit = max_states();
    let start_set = vec![nfa.start];
    let mut index: HashMap<Vec<usize>, usize> = HashMap::new();
    index.insert(start_set.clone(), 0);
    let mut subsets = vec![start_set];
    let mut delta: Vec<Vec<usize>> = Vec::new();
    let mut queue = VecDeque::from([0usize]);
    while let Some(id) = queue.pop_front() {
        let subset = subsets[id].clone();
        let mut row = Vec::with_capacity(a_len);
        for k in 0..a_len {
            let mut next: Vec<usize> = subset
                .iter()
                .flat_map(|&q| nfa.transitions[q][k].iter().copied())
                .collect();
            next.sort_unstable();
            next.dedup();
            let next_id = match index.get(&next) {
                Some(&i) => i,
                None => {
                    let i = subsets.len();
                    if i >= limit {
                        return Err(Error::ResourceLimit {
                            what: "subset construction".into(),
                            needed: i + 1,
                            limit,
                        });
                    }
                    index.insert(next.clone(), i);
                    subsets.push(next);
                    queue.push_back(i);
                    i
                }
            };
            row.push(next_id);
        }
        delta.push(row);
        while delta.len() < subsets.len() {
            // rows for newly discovered subsets are appended when dequeued
            break;
        }
    }
    // delta rows were pushed in dequeue order, which equals discovery order.
    let emissions: Vec<u32> = subsets
        .iter()
        .map(|subset| subset.iter().map(|&q| nfa.accept_mult[q]).sum())
        .collect();
    let labels = subsets
        .iter()
        .map(|subset| {
            let ids: Vec<String> = subset.iter().map(|q| q.to_string()).collect();
            format!("{{{}}}", ids.join(","))
        })
        .collect();
    Ok(CountingDfa {
        labels,
        start: 0,
        alphabet: nfa.alphabet.clone(),
        delta,
        emissions,
        kind: EmissionKind::Multiplicity,
    })
}

// ---------------------------------------------------------------------------
// Prosite patterns
// ---------------------------------------------------------------------------

/// Expand a Prosite pattern into generalized strings over the amino acid
/// alphabet, one per combination of multiplicity choices.
///
/// Supported grammar: single-letter literals, `x` wildcards, `[...]` classes
/// and `(i)` / `(i,j)` multiplicities, separated by `-`. Negated `{...}`
/// classes and the `<` / `>` anchors are rejected as unsupported.
pub fn expand_prosite(pattern: &str) -> Result<Vec<GeneralizedString>> {
    let chars: Vec<char> = pattern.trim_end_matches('.').chars().collect();
    let full: CharClass = AMINO_ACIDS.iter().copied().collect();
    let mut elements: Vec<(CharClass, usize, usize)> = Vec::new();
    let mut i = 0usize;
    while i < chars.len() {
        let class: CharClass = match chars[i] {
            '<' | '>' => {
                return Err(Error::Unsupported(format!(
                    "Prosite anchor {:?} at position {i}",
                    chars[i]
                )))
            }
            '{' => {
                return Err(Error::Unsupported(format!(
                    "negated Prosite class at position {i}"
                )))
            }
            '[' => {
                let close = chars[i..]
                    .iter()
                    .position(|&c| c == ']')
                    .ok_or(Error::Parse {
                        position: i,
                        detail: "unterminated class".into(),
                    })?
                    + i;
                let mut class = BTreeSet::new();
                for &c in &chars[i + 1..close] {
                    if !AMINO_ACIDS.contains(&c) {
                        return Err(Error::Parse {
                            position: i,
                            detail: format!("{c:?} is not an amino acid"),
                        });
                    }
                    class.insert(c);
                }
                if class.is_empty() {
                    return Err(Error::Parse {
                        position: i,
                        detail: "empty class".into(),
                    });
                }
                i = close + 1;
                class
            }
            'x' => {
                i += 1;
                full.clone()
            }
            c if AMINO_ACIDS.contains(&c) => {
                i += 1;
                BTreeSet::from([c])
            }
            c => {
                return Err(Error::Parse {
                    position: i,
                    detail: format!("unexpected character {c:?}"),
                })
            }
        };
        // Optional multiplicity (i) or (i,j).
        let (lo, hi) = if i < chars.len() && chars[i] == '(' {
            let close = chars[i..]
                .iter()
                .position(|&c| c == ')')
                .ok_or(Error::Parse {
                    position: i,
                    detail: "unterminated multiplicity".into(),
                })?
                + i;
            let body: String = chars[i + 1..close].iter().collect();
            let parts: Vec<&str> = body.split(',').collect();
            let parse = |s: &str| -> Result<usize> {
                s.trim().parse().map_err(|_| Error::Parse {
                    position: i,
                    detail: format!("bad multiplicity {s:?}"),
                })
            };
            let bounds = match parts.as_slice() {
                [a] => {
                    let v = parse(a)?;
                    (v, v)
                }
                [a, b] => (parse(a)?, parse(b)?),
                _ => {
                    return Err(Error::Parse {
                        position: i,
                        detail: "multiplicity needs one or two numbers".into(),
                    })
                }
            };
            i = close + 1;
            bounds
        } else {
            (1, 1)
        };
        if lo > hi || hi == 0 {
            return Err(Error::Parse {
                position: i,
                detail: format!("bad multiplicity range ({lo},{hi})"),
            });
        }
        elements.push((class, lo, hi));
        if i < chars.len() {
            if chars[i] != '-' {
                return Err(Error::Parse {
                    position: i,
                    detail: format!("expected '-', found {:?}", chars[i]),
                });
            }
            i += 1;
        }
    }
    if elements.is_empty() {
        return Err(Error::Parse {
            position: 0,
            detail: "empty pattern".into(),
        });
    }
    let combos: usize = elements
        .iter()
        .map(|&(_, lo, hi)| hi - lo + 1)
        .try_fold(1usize, |acc, n| acc.checked_mul(n))
        .unwrap_or(usize::MAX);
    if combos > max_states() {
        return Err(Error::ResourceLimit {
            what: "Prosite expansion".into(),
            needed: combos,
            limit: max_states(),
        });
    }
    let mut out: BTreeSet<GeneralizedString> = BTreeSet::new();
    let mut stack: Vec<(usize, GeneralizedString)> = vec![(0, Vec::new())];
    while let Some((idx, prefix)) = stack.pop() {
        if idx == elements.len() {
            out.insert(prefix);
            continue;
        }
        let (class, lo, hi) = &elements[idx];
        for count in *lo..=*hi {
            let mut next = prefix.clone();
            for _ in 0..count {
                next.push(class.clone());
            }
            stack.push((idx + 1, next));
        }
    }
    Ok(out.into_iter().collect())
}

// ---------------------------------------------------------------------------
// Minimization and counting schemes
// ---------------------------------------------------------------------------

/// Hopcroft minimization of a counting DFA.
///
/// The initial partition groups states by emission, so the minimal automaton
/// emits the same cumulative count as the input on every string.
pub fn minimize(cdfa: &CountingDfa) -> CountingDfa {
    let cdfa = cdfa.prune_unreachable();
    let n = cdfa.labels.len();
    let a_len = cdfa.alphabet.len();
    // Inverse transitions per character.
    let mut inv: Vec<Vec<Vec<usize>>> = vec![vec![Vec::new(); n]; a_len];
    for (q, row) in cdfa.delta.iter().enumerate() {
        for (k, &q2) in row.iter().enumerate() {
            inv[k][q2].push(q);
        }
    }
    // Initial partition by emission value.
    let mut block_of = vec![0usize; n];
    let mut blocks: Vec<Vec<usize>> = Vec::new();
    {
        let mut by_emission: BTreeMap<u32, usize> = BTreeMap::new();
        for q in 0..n {
            let b = *by_emission.entry(cdfa.emissions[q]).or_insert_with(|| {
                blocks.push(Vec::new());
                blocks.len() - 1
            });
            block_of[q] = b;
            blocks[b].push(q);
        }
    }
    let mut pending: VecDeque<(usize, usize)> = VecDeque::new();
    let mut in_pending: HashSet<(usize, usize)> = HashSet::new();
    for b in 0..blocks.len() {
        for k in 0..a_len {
            pending.push_back((b, k));
            in_pending.insert((b, k));
        }
    }
    while let Some((b, k)) = pending.pop_front() {
        in_pending.remove(&(b, k));
        // Preimage of block b under character k, grouped by current block.
        let mut touched: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for &q in &blocks[b] {
            for &p in &inv[k][q] {
                touched.entry(block_of[p]).or_default().push(p);
            }
        }
        for (y, hits) in touched {
            if hits.len() == blocks[y].len() {
                continue;
            }
            // Split block y into hits and the rest.
            let hit_set: HashSet<usize> = hits.iter().copied().collect();
            let rest: Vec<usize> = blocks[y]
                .iter()
                .copied()
                .filter(|q| !hit_set.contains(q))
                .collect();
            let new_id = blocks.len();
            for &q in &hits {
                block_of[q] = new_id;
            }
            blocks[y] = rest;
            blocks.push(hits);
            for c in 0..a_len {
                if in_pending.contains(&(y, c)) {
                    pending.push_back((new_id, c));
                    in_pending.insert((new_id, c));
                } else {
                    let smaller = if blocks[y].len() <= blocks[new_id].len() {
                        y
                    } else {
                        new_id
                    };
                    pending.push_back((smaller, c));
                    in_pending.insert((smaller, c));
                }
            }
        }
    }
    // Quotient automaton, blocks ordered by their smallest member.
    let mut order: Vec<usize> = (0..blocks.len())
        .filter(|&b| !blocks[b].is_empty())
        .collect();
    order.sort_by_key(|&b| *blocks[b].iter().min().unwrap());
    let mut new_id = vec![usize::MAX; blocks.len()];
    for (i, &b) in order.iter().enumerate() {
        new_id[b] = i;
    }
    let labels = order
        .iter()
        .map(|&b| {
            let repr = *blocks[b].iter().min().unwrap();
            cdfa.labels[repr].clone()
        })
        .collect();
    let delta = order
        .iter()
        .map(|&b| {
            let repr = *blocks[b].iter().min().unwrap();
            (0..a_len)
                .map(|k| new_id[block_of[cdfa.delta[repr][k]]])
                .collect()
        })
        .collect();
    let emissions = order
        .iter()
        .map(|&b| cdfa.emissions[*blocks[b].iter().min().unwrap()])
        .collect();
    CountingDfa {
        labels,
        start: new_id[block_of[cdfa.start]],
        alphabet: cdfa.alphabet.clone(),
        delta,
        emissions,
        kind: cdfa.kind,
    }
}

/// Rewrite a counting DFA for a counting scheme.
///
/// `MatchPosition` clamps emissions to at most one; `Overlapping` keeps the
/// multiplicities (and requires them); `NonOverlapping` additionally redirects
/// transitions out of accepting states to act as if they left the start state.
pub fn apply_scheme(cdfa: &CountingDfa, scheme: CountScheme) -> Result<CountingDfa> {
    match scheme {
        CountScheme::Overlapping => {
            if cdfa.kind != EmissionKind::Multiplicity {
                return Err(Error::invalid(
                    "overlapping counts need multiplicity emissions, this automaton only flags match positions",
                ));
            }
            Ok(cdfa.clone())
        }
        CountScheme::MatchPosition => {
            let mut out = cdfa.clone();
            for e in &mut out.emissions {
                *e = (*e).min(1);
            }
            out.kind = EmissionKind::Indicator;
            Ok(out)
        }
        CountScheme::NonOverlapping => {
            let mut out = cdfa.clone();
            for e in &mut out.emissions {
                *e = (*e).min(1);
            }
            let start_row = out.delta[out.start].clone();
            for q in 0..out.labels.len() {
                if out.emissions[q] > 0 {
                    out.delta[q] = start_row.clone();
                }
            }
            out.kind = EmissionKind::Indicator;
            Ok(out.prune_unreachable())
        }
    }
}

/// Turn a counting DFA into a DAA accumulating counts truncated at `m_trunc`.
pub fn counting_daa(cdfa: &CountingDfa, m_trunc: i64) -> Result<Daa> {
    if m_trunc < 1 {
        return Err(Error::invalid("truncation bound must be at least 1"));
    }
    let n = cdfa.labels.len();
    Daa::new(
        cdfa.labels.clone(),
        cdfa.start,
        cdfa.alphabet.clone(),
        cdfa.delta.clone(),
        ValueDomain::counts(m_trunc),
        Value::Int(0),
        cdfa.emissions
            .iter()
            .map(|&e| Value::Int(e as i64))
            .collect(),
        vec![Operation::trunc_add(m_trunc); n],
    )
}

// ---------------------------------------------------------------------------
// Pattern specifications
// ---------------------------------------------------------------------------

/// A pattern in one of the supported notations.
#[derive(Debug, Clone)]
pub enum PatternSpec {
    /// A finite set of plain strings.
    Strings(Vec<String>),
    /// A finite set of generalized strings.
    Generalized(Vec<GeneralizedString>),
    /// A Prosite pattern over the amino acid alphabet.
    Prosite(String),
}

impl PatternSpec {
    /// The pattern as a deduplicated set of generalized strings (expansion
    /// for Prosite).
    pub fn to_generalized(&self) -> Result<Vec<GeneralizedString>> {
        let out: BTreeSet<GeneralizedString> = match self {
            PatternSpec::Strings(strings) => {
                if strings.is_empty() {
                    return Err(Error::invalid("empty pattern set"));
                }
                if strings.iter().any(|s| s.is_empty()) {
                    return Err(Error::invalid("empty pattern string"));
                }
                strings.iter().map(|s| generalized_from_string(s)).collect()
            }
            PatternSpec::Generalized(gen) => {
                if gen.is_empty() {
                    return Err(Error::invalid("empty pattern set"));
                }
                gen.iter().cloned().collect()
            }
            PatternSpec::Prosite(p) => return expand_prosite(p),
        };
        Ok(out.into_iter().collect())
    }

    /// Counting DFA with multiplicity emissions over the given alphabet.
    ///
    /// Plain string sets go through Aho-Corasick; generalized strings and
    /// Prosite expansions go through the NFA and subset construction followed
    /// by minimization.
    pub fn counting_dfa(&self, alphabet: &[char]) -> Result<CountingDfa> {
        match self {
            PatternSpec::Strings(strings) => aho_corasick(strings, alphabet),
            _ => {
                let gen = self.to_generalized()?;
                let nfa = nfa_from_generalized(&gen, alphabet)?;
                Ok(minimize(&subset_construction(&nfa)?))
            }
        }
    }

    /// Lengths of the pattern instances.
    pub fn instance_lengths(&self) -> Result<BTreeSet<usize>> {
        Ok(self.to_generalized()?.iter().map(|g| g.len()).collect())
    }

    /// Whether some pattern starts with a full-alphabet wildcard position.
    pub fn starts_with_wildcard(&self, alphabet: &[char]) -> Result<bool> {
        let full: BTreeSet<char> = alphabet.iter().copied().collect();
        Ok(self
            .to_generalized()?
            .iter()
            .any(|g| g.first().is_some_and(|class| class == &full)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::textmodel::{all_strings, iid_model, uniform_model};

    #[test]
    fn aho_corasick_101_111() {
        let cdfa = aho_corasick(&["101".into(), "111".into()], &['0', '1']).unwrap();
        assert_eq!(cdfa.n_states(), 6);
        let mut labels: Vec<&str> = cdfa.labels().iter().map(|s| s.as_str()).collect();
        labels.sort_unstable();
        assert_eq!(labels, ["", "1", "10", "101", "11", "111"]);
        for q in 0..cdfa.n_states() {
            let label = &cdfa.labels()[q];
            let expect = u32::from(label == "101" || label == "111");
            assert_eq!(cdfa.emission(q), expect, "state {label}");
        }
    }

    #[test]
    fn aho_corasick_single_short_pattern() {
        let cdfa = aho_corasick(&["ab".into()], &['a', 'b']).unwrap();
        assert_eq!(cdfa.n_states(), 3);
        assert_eq!(cdfa.count("ab").unwrap(), 1);
        assert_eq!(cdfa.count("abab").unwrap(), 2);
    }

    #[test]
    fn aho_corasick_suffix_output_accumulates() {
        // aa matches at positions 1 and 2, aaa at position 2.
        let cdfa = aho_corasick(&["aa".into(), "aaa".into()], &['a', 'b']).unwrap();
        assert_eq!(cdfa.count("aaa").unwrap(), 3);
    }

    #[test]
    fn aho_corasick_rejects_empty_pattern() {
        assert!(aho_corasick(&["".into()], &['a', 'b']).is_err());
    }

    #[test]
    fn counting_daa_traces() {
        let cdfa = aho_corasick(&["101".into(), "111".into()], &['0', '1']).unwrap();
        let daa = counting_daa(&cdfa, 10).unwrap();
        assert_eq!(daa.value("").unwrap(), Value::Int(0));
        assert_eq!(daa.value("10101").unwrap(), Value::Int(2));
        let clamp = counting_daa(&aho_corasick(&["11".into()], &['0', '1']).unwrap(), 3).unwrap();
        assert_eq!(clamp.value("1111111").unwrap(), Value::Int(3));
    }

    #[test]
    fn generalized_chain_shape() {
        // [abc][ac][ab] over {a,b,c}: one 3-state chain plus the start.
        let gen: GeneralizedString = vec![
            BTreeSet::from(['a', 'b', 'c']),
            BTreeSet::from(['a', 'c']),
            BTreeSet::from(['a', 'b']),
        ];
        let nfa = nfa_from_generalized(&[gen], &['a', 'b', 'c']).unwrap();
        assert_eq!(nfa.n_states(), 4);
        let two = nfa_from_generalized(
            &[generalized_from_string("ab"), generalized_from_string("ba")],
            &['a', 'b'],
        )
        .unwrap();
        assert_eq!(two.n_states(), 5); // shared start only
    }

    #[test]
    fn subset_construction_is_deterministic_and_counts() {
        let gen: Vec<GeneralizedString> =
            vec![vec![BTreeSet::from(['a', 'b']), BTreeSet::from(['a', 'b'])]];
        let nfa = nfa_from_generalized(&gen, &['a', 'b']).unwrap();
        let dfa = subset_construction(&nfa).unwrap();
        // Every window of length 2 matches.
        assert_eq!(dfa.count("abab").unwrap(), 3);
        assert_eq!(dfa.count("a").unwrap(), 0);
    }

    #[test]
    fn pipeline_matches_aho_corasick_counts() {
        let alphabet = ['a', 'b'];
        let sets: Vec<Vec<String>> = vec![
            vec!["a".into()],
            vec!["ab".into(), "ba".into()],
            vec!["aa".into(), "aaa".into()],
            vec!["aba".into(), "bab".into(), "bb".into()],
        ];
        for patterns in sets {
            let ac = aho_corasick(&patterns, &alphabet).unwrap();
            let gen: Vec<GeneralizedString> = patterns
                .iter()
                .map(|s| generalized_from_string(s))
                .collect();
            let piped = minimize(
                &subset_construction(&nfa_from_generalized(&gen, &alphabet).unwrap()).unwrap(),
            );
            for s in all_strings(&alphabet, 8) {
                assert_eq!(
                    ac.count(&s).unwrap(),
                    piped.count(&s).unwrap(),
                    "patterns {patterns:?} on {s}"
                );
            }
        }
    }

    #[test]
    fn minimize_merges_equivalent_states() {
        // Two chains for the same pattern produce duplicated structure that
        // minimization must fold back together.
        let gen = vec![generalized_from_string("ab"), generalized_from_string("ab")];
        let nfa = nfa_from_generalized(&gen, &['a', 'b']).unwrap();
        let dfa = subset_construction(&nfa).unwrap();
        let min = minimize(&dfa);
        assert!(min.n_states() <= dfa.n_states());
        for s in all_strings(&['a', 'b'], 6) {
            assert_eq!(dfa.count(&s).unwrap(), min.count(&s).unwrap());
        }
        //

        let again = minimize(&min);
        assert_eq!(again.n_states(), min.n_states());
    }

    #[test]
    fn prosite_expansion_examples() {
        let out = expand_prosite("A-x(2,3)-C").unwrap();
        assert_eq!(out.len(), 2);
        let lengths: BTreeSet<usize> = out.iter().map(|g| g.len()).collect();
        assert_eq!(lengths, BTreeSet::from([4, 5]));
        assert_eq!(expand_prosite("A-C").unwrap().len(), 1);
        let xx = expand_prosite("x(2)").unwrap();
        assert_eq!(xx.len(), 1);
        assert_eq!(xx[0].len(), 2);
        assert_eq!(xx[0][0].len(), 20);
    }

    #[test]
    fn prosite_rejects_unsupported_features() {
        assert!(matches!(
            expand_prosite("<A-C").unwrap_err(),
            Error::Unsupported(_)
        ));
        assert!(matches!(
            expand_prosite("A-{CG}-T").unwrap_err(),
            Error::Unsupported(_)
        ));
        assert!(matches!(
            expand_prosite("A-x(3,2)-C").unwrap_err(),
            Error::Parse { .. }
        ));
        assert!(matches!(
            expand_prosite("A-B-C").unwrap_err(),
            Error::Parse { .. }
        ));
    }

    #[test]
    fn scheme_rewrites() {
        let alphabet = ['0', '1'];
        let cdfa = aho_corasick(&["11".into()], &alphabet).unwrap();
        let over = apply_scheme(&cdfa, CountScheme::Overlapping).unwrap();
        assert_eq!(over.count("111").unwrap(), 2);
        let non = apply_scheme(&cdfa, CountScheme::NonOverlapping).unwrap();
        assert_eq!(non.count("111").unwrap(), 1);
        assert_eq!(non.count("1111").unwrap(), 2);
        let pos = apply_scheme(&cdfa, CountScheme::MatchPosition).unwrap();
        assert_eq!(pos.count("111").unwrap(), 2);
        // Overlapping after match-position clamping is rejected.
        assert!(apply_scheme(&pos, CountScheme::Overlapping).is_err());
    }

    #[test]
    fn match_position_equals_overlapping_for_disjoint_ends() {
        // {101, 111} never end two patterns at the same position with
        // multiplicity above one, so the schemes agree.
        let cdfa = aho_corasick(&["101".into(), "111".into()], &['0', '1']).unwrap();
        let over = apply_scheme(&cdfa, CountScheme::Overlapping).unwrap();
        let pos = apply_scheme(&cdfa, CountScheme::MatchPosition).unwrap();
        for s in all_strings(&['0', '1'], 8) {
            assert_eq!(over.count(&s).unwrap(), pos.count(&s).unwrap());
        }
    }

    #[test]
    fn paa_from_daa_dirac_at_zero_steps() {
        let cdfa = aho_corasick(&["11".into()], &['0', '1']).unwrap();
        let daa = counting_daa(&cdfa, 5).unwrap();
        let model = uniform_model(&['0', '1']).unwrap();
        let composed = paa_from_daa(&daa, &model).unwrap();
        let dist = composed
            .paa
            .value_distribution(0, crate::paa::Method::Basic)
            .unwrap();
        assert_eq!(dist.p_int(0), 1.0);
    }

    #[test]
    fn paa_from_daa_fig2_semantics() {
        // {101, 111} under i.i.d. p: P(count=1 at n=3) = p^2.
        let p = 0.3;
        let cdfa = aho_corasick(&["101".into(), "111".into()], &['0', '1']).unwrap();
        let daa = counting_daa(&cdfa, 5).unwrap();
        let model = iid_model(&[('0', 1.0 - p), ('1', p)]).unwrap();
        let composed = paa_from_daa(&daa, &model).unwrap();
        let dist = composed
            .paa
            .value_distribution(3, crate::paa::Method::Basic)
            .unwrap();
        assert!((dist.p_int(1) - p * p).abs() < 1e-12);
        dist.check_normalized(1e-9).unwrap();
    }

    #[test]
    fn paa_from_daa_alphabet_mismatch() {
        let cdfa = aho_corasick(&["11".into()], &['0', '1']).unwrap();
        let daa = counting_daa(&cdfa, 5).unwrap();
        let model = uniform_model(&['a', 'b']).unwrap();
        assert!(matches!(
            paa_from_daa(&daa, &model).unwrap_err(),
            Error::AlphabetMismatch { .. }
        ));
    }

    #[test]
    fn pattern_spec_wildcard_detection() {
        let spec = PatternSpec::Generalized(vec![vec![
            BTreeSet::from(['0', '1']),
            BTreeSet::from(['1']),
        ]]);
        assert!(spec.starts_with_wildcard(&['0', '1']).unwrap());
        let spec = PatternSpec::Strings(vec!["01".into()]);
        assert!(!spec.starts_with_wildcard(&['0', '1']).unwrap());
    }
}
