//! Finite-memory random text models.
//!
//! A model walks a finite context space and emits one character per
//! transition: `kernel(c, σ, c')` is the probability of moving from context
//! `c` to `c'` while generating `σ`. This covers i.i.d. models, Markov models
//! of any fixed order and character-emitting HMMs; [`from_hmm`]/[`to_hmm`]
//! convert between the two representations while preserving all string
//! probabilities.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::paa::ROW_TOL;

/// A finite-memory random text model `(contexts, start, alphabet, kernel)`.
///
/// Immutable after construction and freely shareable across threads.
#[derive(Debug, Clone)]
pub struct TextModel {
    alphabet: Vec<char>,
    contexts: Vec<String>,
    start: usize,
    /// Per-context sparse rows of (character id, next context, probability).
    kernel: Vec<Vec<(usize, usize, f64)>>,
}

impl TextModel {
    /// Build and validate a model; every kernel row must sum to one.
    pub fn new(
        alphabet: Vec<char>,
        contexts: Vec<String>,
        start: usize,
        kernel: Vec<Vec<(usize, usize, f64)>>,
    ) -> Result<Self> {
        if alphabet.is_empty() {
            return Err(Error::invalid("empty alphabet"));
        }
        let mut seen = std::collections::BTreeSet::new();
        for &ch in &alphabet {
            if !seen.insert(ch) {
                return Err(Error::invalid(format!(
                    "duplicate alphabet character {ch:?}"
                )));
            }
        }
        if contexts.is_empty() || start >= contexts.len() || kernel.len() != contexts.len() {
            return Err(Error::invalid("inconsistent context space"));
        }
        for (c, row) in kernel.iter().enumerate() {
            let mut sum = 0.0;
            for &(ch, c2, p) in row {
                if ch >= alphabet.len() || c2 >= contexts.len() {
                    return Err(Error::invalid("kernel entry out of range"));
                }
                if !(0.0..=1.0 + ROW_TOL).contains(&p) || p.is_nan() {
                    return Err(Error::InvalidProbability {
                        what: format!("kernel entry of context {}", contexts[c]),
                        value: p,
                    });
                }
                sum += p;
            }
            if (sum - 1.0).abs() > ROW_TOL {
                return Err(Error::NotStochastic {
                    what: format!("kernel row of context {}", contexts[c]),
                    sum,
                    tol: ROW_TOL,
                });
            }
        }
        Ok(TextModel {
            alphabet,
            contexts,
            start,
            kernel,
        })
    }

    /// The model alphabet.
    pub fn alphabet(&self) -> &[char] {
        &self.alphabet
    }

    /// Context labels.
    pub fn contexts(&self) -> &[String] {
        &self.contexts
    }

    /// Start context index.
    pub fn start_context(&self) -> usize {
        self.start
    }

    /// Sparse kernel row of a context.
    pub fn kernel_row(&self, c: usize) -> &[(usize, usize, f64)] {
        &self.kernel[c]
    }

    /// Index of a character in the alphabet.
    pub fn char_id(&self, ch: char) -> Result<usize> {
        self.alphabet
            .iter()
            .position(|&a| a == ch)
            .ok_or_else(|| Error::UnknownCharacter {
                ch,
                alphabet: self.alphabet.iter().collect(),
            })
    }

    /// Whether each `(context, character)` has at most one positive successor.
    ///
    /// Markov-style kernels have this property; it shaves a factor `|C|` off
    /// the PAA construction bounds.
    pub fn has_deterministic_successors(&self) -> bool {
        for row in &self.kernel {
            let mut seen: BTreeMap<usize, usize> = BTreeMap::new();
            for &(ch, c2, p) in row {
                if p > 0.0 {
                    if let Some(&prev) = seen.get(&ch) {
                        if prev != c2 {
                            return false;
                        }
                    }
                    seen.insert(ch, c2);
                }
            }
        }
        true
    }

    /// One forward step: spread `cur` (a sub-distribution over contexts)
    /// through the kernel restricted to character `ch`.
    pub fn step_char(&self, cur: &[f64], ch: usize) -> Vec<f64> {
        let mut next = vec![0.0; self.contexts.len()];
        for (c, &p) in cur.iter().enumerate() {
            if p == 0.0 {
                continue;
            }
            for &(k, c2, kp) in &self.kernel[c] {
                if k == ch {
                    next[c2] += p * kp;
                }
            }
        }
        next
    }

    /// Exact probability of the model emitting `s` as its first characters.
    ///
    /// Forward decomposition over context sequences; the empty string has
    /// probability one.
    pub fn sequence_probability(&self, s: &str) -> Result<f64> {
        let mut cur = vec![0.0; self.contexts.len()];
        cur[self.start] = 1.0;
        for ch in s.chars() {
            let k = self.char_id(ch)?;
            cur = self.step_char(&cur, k);
        }
        Ok(cur.iter().sum())
    }
}

/// I.i.d. model: a single empty context emitting characters independently.
pub fn iid_model(char_probs: &[(char, f64)]) -> Result<TextModel> {
    let alphabet: Vec<char> = char_probs.iter().map(|&(c, _)| c).collect();
    let mut row = Vec::new();
    for (k, &(_, p)) in char_probs.iter().enumerate() {
        if !(0.0..=1.0 + ROW_TOL).contains(&p) || p.is_nan() {
            return Err(Error::InvalidProbability {
                what: format!("character probability of {:?}", char_probs[k].0),
                value: p,
            });
        }
        if p > 0.0 {
            row.push((k, 0, p));
        }
    }
    TextModel::new(alphabet, vec![String::new()], 0, vec![row])
}

/// Uniform i.i.d. model over an alphabet.
pub fn uniform_model(alphabet: &[char]) -> Result<TextModel> {
    let p = 1.0 / alphabet.len() as f64;
    iid_model(&alphabet.iter().map(|&c| (c, p)).collect::<Vec<_>>())
}

/// Markov model of order `r`.
///
/// Contexts are the character histories `∪_{i<=r} Σ^i` reachable from the
/// empty start context; `conditionals[h][σ]` is the probability of `σ` after
/// history `h`. Rows are required for every reachable history, including the
/// short ones at the beginning of the text (the empty history doubles as the
/// start distribution).
pub fn markov_model(
    alphabet: &[char],
    order: usize,
    conditionals: &BTreeMap<String, BTreeMap<char, f64>>,
) -> Result<TextModel> {
    let alphabet: Vec<char> = alphabet.to_vec();
    let mut contexts: Vec<String> = vec![String::new()];
    let mut index: BTreeMap<String, usize> = BTreeMap::new();
    index.insert(String::new(), 0);
    let mut kernel: Vec<Vec<(usize, usize, f64)>> = vec![Vec::new()];
    let mut queue = std::collections::VecDeque::from([0usize]);
    while let Some(c) = queue.pop_front() {
        let history = contexts[c].clone();
        let row = conditionals.get(&history).ok_or_else(|| {
            Error::invalid(format!(
                "missing conditional row for reachable history {history:?}"
            ))
        })?;
        let mut sum = 0.0;
        let mut out = Vec::new();
        for (&ch, &p) in row {
            let k = alphabet
                .iter()
                .position(|&a| a == ch)
                .ok_or(Error::UnknownCharacter {
                    ch,
                    alphabet: alphabet.iter().collect(),
                })?;
            if !(0.0..=1.0 + ROW_TOL).contains(&p) || p.is_nan() {
                return Err(Error::InvalidProbability {
                    what: format!("conditional of {ch:?} after {history:?}"),
                    value: p,
                });
            }
            sum += p;
            if p == 0.0 {
                continue;
            }
            let next_history = {
                let mut h = format!("{history}{ch}");
                let drop = h.chars().count().saturating_sub(order);
                if drop > 0 {
                    h = h.chars().skip(drop).collect();
                }
                h
            };
            let c2 = *index.entry(next_history.clone()).or_insert_with(|| {
                contexts.push(next_history);
                kernel.push(Vec::new());
                queue.push_back(contexts.len() - 1);
                contexts.len() - 1
            });
            out.push((k, c2, p));
        }
        if (sum - 1.0).abs() > ROW_TOL {
            return Err(Error::NotStochastic {
                what: format!("conditional row for history {history:?}"),
                sum,
                tol: ROW_TOL,
            });
        }
        kernel[c] = out;
    }
    TextModel::new(alphabet, contexts, 0, kernel)
}

/// Deterministic model emitting `text` cyclically forever.
pub fn dirac_model(text: &str) -> Result<TextModel> {
    if text.is_empty() {
        return Err(Error::invalid("dirac model needs a nonempty text"));
    }
    let chars: Vec<char> = text.chars().collect();
    let mut alphabet: Vec<char> = chars.clone();
    alphabet.sort_unstable();
    alphabet.dedup();
    let n = chars.len();
    let contexts: Vec<String> = (0..n).map(|i| format!("pos{i}")).collect();
    let mut kernel = Vec::with_capacity(n);
    for (i, &ch) in chars.iter().enumerate() {
        let k = alphabet.iter().position(|&a| a == ch).unwrap();
        kernel.push(vec![(k, (i + 1) % n, 1.0)]);
    }
    TextModel::new(alphabet, contexts, 0, kernel)
}

// ---------------------------------------------------------------------------
// Character-emitting HMMs
// ---------------------------------------------------------------------------

/// A character-emitting hidden Markov model.
///
/// The start state emits nothing; each transition emits one character from
/// the distribution of the state being entered.
#[derive(Debug, Clone)]
pub struct Hmm {
    states: Vec<String>,
    start: usize,
    alphabet: Vec<char>,
    transitions: Vec<Vec<f64>>,
    emissions: Vec<BTreeMap<char, f64>>,
}

impl Hmm {
    /// Build and validate; transition and emission rows must be stochastic.
    pub fn new(
        states: Vec<String>,
        start: usize,
        alphabet: Vec<char>,
        transitions: Vec<Vec<f64>>,
        emissions: Vec<BTreeMap<char, f64>>,
    ) -> Result<Self> {
        let n = states.len();
        if n == 0 || start >= n || transitions.len() != n || emissions.len() != n {
            return Err(Error::invalid("inconsistent HMM dimensions"));
        }
        for (q, row) in transitions.iter().enumerate() {
            if row.len() != n {
                return Err(Error::invalid("transition matrix is not square"));
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > ROW_TOL {
                return Err(Error::NotStochastic {
                    what: format!("HMM transition row {}", states[q]),
                    sum,
                    tol: ROW_TOL,
                });
            }
        }
        for (q, row) in emissions.iter().enumerate() {
            let sum: f64 = row.values().sum();
            if (sum - 1.0).abs() > ROW_TOL {
                return Err(Error::NotStochastic {
                    what: format!("HMM emission row {}", states[q]),
                    sum,
                    tol: ROW_TOL,
                });
            }
            for (&ch, &p) in row {
                if !alphabet.contains(&ch) {
                    return Err(Error::UnknownCharacter {
                        ch,
                        alphabet: alphabet.iter().collect(),
                    });
                }
                if !(0.0..=1.0 + ROW_TOL).contains(&p) || p.is_nan() {
                    return Err(Error::InvalidProbability {
                        what: format!("emission of {ch:?} in state {}", states[q]),
                        value: p,
                    });
                }
            }
        }
        Ok(Hmm {
            states,
            start,
            alphabet,
            transitions,
            emissions,
        })
    }

    /// State labels.
    pub fn states(&self) -> &[String] {
        &self.states
    }

    /// The HMM alphabet.
    pub fn alphabet(&self) -> &[char] {
        &self.alphabet
    }

    /// Probability of emitting `s` as the first characters, by the forward
    /// algorithm over state sequences.
    pub fn string_probability(&self, s: &str) -> Result<f64> {
        let n = self.states.len();
        let mut cur = vec![0.0; n];
        cur[self.start] = 1.0;
        for ch in s.chars() {
            if !self.alphabet.contains(&ch) {
                return Err(Error::UnknownCharacter {
                    ch,
                    alphabet: self.alphabet.iter().collect(),
                });
            }
            let mut next = vec![0.0; n];
            for (q, &p) in cur.iter().enumerate() {
                if p == 0.0 {
                    continue;
                }
                for (q2, &tp) in self.transitions[q].iter().enumerate() {
                    if tp == 0.0 {
                        continue;
                    }
                    let ep = self.emissions[q2].get(&ch).copied().unwrap_or(0.0);
                    if ep > 0.0 {
                        next[q2] += p * tp * ep;
                    }
                }
            }
            cur = next;
        }
        Ok(cur.iter().sum())
    }
}

/// Equivalent text model of an HMM: same state space, kernel
/// `φ(c, σ, c') = T(c, c') · μ_{c'}(σ)`.
pub fn from_hmm(hmm: &Hmm) -> Result<TextModel> {
    let n = hmm.states.len();
    let mut kernel = Vec::with_capacity(n);
    for c in 0..n {
        let mut row = Vec::new();
        for c2 in 0..n {
            let tp = hmm.transitions[c][c2];
            if tp == 0.0 {
                continue;
            }
            for (&ch, &ep) in &hmm.emissions[c2] {
                if ep == 0.0 {
                    continue;
                }
                let k = hmm.alphabet.iter().position(|&a| a == ch).unwrap();
                row.push((k, c2, tp * ep));
            }
        }
        kernel.push(row);
    }
    TextModel::new(hmm.alphabet.clone(), hmm.states.clone(), hmm.start, kernel)
}

/// Equivalent HMM of a text model, on the state space `contexts²`.
///
/// State `(c1, c2)` means "the model just moved from `c1` to `c2`"; its
/// emission distribution is the kernel row `φ(c1, ·, c2)` normalized by the
/// move probability, and transitions carry that move probability. States for
/// impossible moves keep a uniform placeholder emission and are unreachable.
pub fn to_hmm(model: &TextModel) -> Result<Hmm> {
    let nc = model.contexts.len();
    let na = model.alphabet.len();
    // Move weights w(c, c') = sum_sigma kernel(c, sigma, c').
    let mut weight = vec![vec![0.0; nc]; nc];
    let mut by_char = vec![vec![vec![0.0; na]; nc]; nc];
    for c in 0..nc {
        for &(k, c2, p) in &model.kernel[c] {
            weight[c][c2] += p;
            by_char[c][c2][k] += p;
        }
    }
    let idx = |c1: usize, c2: usize| c1 * nc + c2;
    let mut states = Vec::with_capacity(nc * nc);
    let mut transitions = vec![vec![0.0; nc * nc]; nc * nc];
    let mut emissions = Vec::with_capacity(nc * nc);
    for c1 in 0..nc {
        for c2 in 0..nc {
            states.push(format!("{}|{}", model.contexts[c1], model.contexts[c2]));
            let mut emi = BTreeMap::new();
            if weight[c1][c2] > 0.0 {
                for (k, &p) in by_char[c1][c2].iter().enumerate() {
                    if p > 0.0 {
                        emi.insert(model.alphabet[k], p / weight[c1][c2]);
                    }
                }
            } else {
                for &ch in &model.alphabet {
                    emi.insert(ch, 1.0 / na as f64);
                }
            }
            emissions.push(emi);
            for c3 in 0..nc {
                transitions[idx(c1, c2)][idx(c2, c3)] = weight[c2][c3];
            }
        }
    }
    Hmm::new(
        states,
        idx(model.start, model.start),
        model.alphabet.clone(),
        transitions,
        emissions,
    )
}

/// Every string over the alphabet with the given length, in lexicographic order.
pub fn all_strings(alphabet: &[char], len: usize) -> Vec<String> {
    let mut out = vec![String::new()];
    for _ in 0..len {
        let mut next = Vec::with_capacity(out.len() * alphabet.len());
        for s in &out {
            for &ch in alphabet {
                let mut t = s.clone();
                t.push(ch);
                next.push(t);
            }
        }
        out = next;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn uniform_dna() -> TextModel {
        uniform_model(&['A', 'C', 'G', 'T']).unwrap()
    }

    #[test]
    fn iid_sequence_probability() {
        let m = uniform_dna();
        assert!((m.sequence_probability("ACG").unwrap() - 1.0 / 64.0).abs() < 1e-15);
        assert_eq!(m.sequence_probability("").unwrap(), 1.0);
        let binary = iid_model(&[('0', 0.3), ('1', 0.7)]).unwrap();
        assert!((binary.sequence_probability("11").unwrap() - 0.49).abs() < 1e-15);
    }

    #[test]
    fn iid_rejects_unnormalized() {
        assert!(iid_model(&[('0', 0.5), ('1', 0.6)]).is_err());
        assert!(iid_model(&[('0', -0.1), ('1', 1.1)]).is_err());
    }

    #[test]
    fn unknown_character_is_an_error() {
        let m = uniform_dna();
        assert!(m.sequence_probability("ACX").is_err());
    }

    fn binary_markov1() -> TextModel {
        // P(1|0)=0.2, P(1|1)=0.9, start distribution (0.5, 0.5).
        let mut cond = BTreeMap::new();
        cond.insert(String::new(), BTreeMap::from([('0', 0.5), ('1', 0.5)]));
        cond.insert("0".into(), BTreeMap::from([('0', 0.8), ('1', 0.2)]));
        cond.insert("1".into(), BTreeMap::from([('0', 0.1), ('1', 0.9)]));
        markov_model(&['0', '1'], 1, &cond).unwrap()
    }

    #[test]
    fn markov_hand_product() {
        let m = binary_markov1();
        // P(011) = p0(0) * P(1|0) * P(1|1).
        let expect = 0.5 * 0.2 * 0.9;
        assert!((m.sequence_probability("011").unwrap() - expect).abs() < 1e-15);
        assert!(m.has_deterministic_successors());
        assert_eq!(m.contexts().len(), 3);
    }

    #[test]
    fn markov_order_zero_is_iid() {
        let mut cond = BTreeMap::new();
        cond.insert(String::new(), BTreeMap::from([('a', 0.25), ('b', 0.75)]));
        let m = markov_model(&['a', 'b'], 0, &cond).unwrap();
        let iid = iid_model(&[('a', 0.25), ('b', 0.75)]).unwrap();
        for s in all_strings(&['a', 'b'], 4) {
            assert!(
                (m.sequence_probability(&s).unwrap() - iid.sequence_probability(&s).unwrap()).abs()
                    < 1e-15
            );
        }
    }

    #[test]
    fn markov_missing_row_is_an_error() {
        let mut cond = BTreeMap::new();
        cond.insert(String::new(), BTreeMap::from([('0', 0.5), ('1', 0.5)]));
        cond.insert("0".into(), BTreeMap::from([('0', 0.8), ('1', 0.2)]));
        let err = markov_model(&['0', '1'], 1, &cond).unwrap_err();
        assert!(err.to_string().contains("missing conditional row"), "{err}");
    }

    #[test]
    fn model_probabilities_sum_to_one() {
        for model in [uniform_dna(), binary_markov1()] {
            for n in 0..=5 {
                let total: f64 = all_strings(model.alphabet(), n)
                    .iter()
                    .map(|s| model.sequence_probability(s).unwrap())
                    .sum();
                assert!((total - 1.0).abs() < 1e-9, "n={n}");
            }
        }
    }

    fn cpg_hmm() -> Hmm {
        // Two-state CpG-island style model over DNA.
        Hmm::new(
            vec!["island".into(), "sea".into()],
            0,
            vec!['A', 'C', 'G', 'T'],
            vec![vec![0.9, 0.1], vec![0.05, 0.95]],
            vec![
                BTreeMap::from([('A', 0.1), ('C', 0.4), ('G', 0.4), ('T', 0.1)]),
                BTreeMap::from([('A', 0.3), ('C', 0.2), ('G', 0.2), ('T', 0.3)]),
            ],
        )
        .unwrap()
    }

    #[test]
    fn from_hmm_matches_forward_probabilities() {
        let hmm = cpg_hmm();
        let model = from_hmm(&hmm).unwrap();
        for s in all_strings(&['A', 'C', 'G', 'T'], 3) {
            let a = hmm.string_probability(&s).unwrap();
            let b = model.sequence_probability(&s).unwrap();
            assert!((a - b).abs() < 1e-14, "{s}: {a} vs {b}");
        }
    }

    #[test]
    fn one_state_hmm_is_iid() {
        let hmm = Hmm::new(
            vec!["s".into()],
            0,
            vec!['0', '1'],
            vec![vec![1.0]],
            vec![BTreeMap::from([('0', 0.25), ('1', 0.75)])],
        )
        .unwrap();
        let model = from_hmm(&hmm).unwrap();
        assert_eq!(model.contexts().len(), 1);
        assert!((model.sequence_probability("11").unwrap() - 0.5625).abs() < 1e-15);
    }

    #[test]
    fn to_hmm_round_trip_preserves_probabilities() {
        for model in [uniform_dna(), binary_markov1()] {
            let hmm = to_hmm(&model).unwrap();
            let back = from_hmm(&hmm).unwrap();
            for n in 0..=4 {
                for s in all_strings(model.alphabet(), n) {
                    let direct = model.sequence_probability(&s).unwrap();
                    let via_hmm = hmm.string_probability(&s).unwrap();
                    let round = back.sequence_probability(&s).unwrap();
                    assert!((direct - via_hmm).abs() < 1e-12, "{s}");
                    assert!((direct - round).abs() < 1e-12, "{s}");
                }
            }
        }
    }

    #[test]
    fn to_hmm_state_count_is_squared() {
        let m = binary_markov1();
        assert_eq!(m.contexts().len(), 3); // 1 + |Σ| for order 1
        let hmm = to_hmm(&m).unwrap();
        assert_eq!(hmm.states().len(), 9);
        let iid = iid_model(&[('0', 0.5), ('1', 0.5)]).unwrap();
        assert_eq!(to_hmm(&iid).unwrap().states().len(), 1);
    }

    #[test]
    fn dirac_model_emits_the_text_cyclically() {
        let m = dirac_model("GTC").unwrap();
        assert_eq!(m.sequence_probability("GTC").unwrap(), 1.0);
        assert_eq!(m.sequence_probability("GTCGT").unwrap(), 1.0);
        assert_eq!(m.sequence_probability("GG").unwrap(), 0.0);
    }
}
