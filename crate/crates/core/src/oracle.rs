//! Brute-force verification oracles.
//!
//! Everything here is deliberately naive and shares no automaton code with
//! the modules it checks: exhaustive enumeration of all texts weighted by the
//! model, position-by-position pattern scanning, verbatim execution of the
//! window matchers and direct flow simulation. Statistical comparisons use a
//! seeded counter-based generator (ChaCha) so test runs are reproducible.

use std::collections::BTreeMap;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

use crate::daa::{CountScheme, GeneralizedString, PatternSpec};
use crate::dist::{Distribution, Value};
use crate::error::{Error, Result};
use crate::textmodel::TextModel;

/// Outcome of an oracle run: a distribution (exact or empirical) and, when a
/// reference is supplied, per-bucket deviations and z-scores.
#[derive(Debug, Clone)]
pub struct OracleReport {
    pub distribution: Distribution,
    pub samples: Option<u64>,
    pub seed: Option<u64>,
    pub max_abs_deviation: Option<f64>,
    pub z_scores: Option<BTreeMap<Value, f64>>,
}

/// Exact distribution of `evaluator` over all length-`n` strings weighted by
/// the model. Guarded at 10^7 strings.
pub fn enumerate_exact(
    mut evaluator: impl FnMut(&str) -> Result<Value>,
    model: &TextModel,
    n: usize,
) -> Result<Distribution> {
    let a = model.alphabet().len() as u128;
    let total = a.checked_pow(n as u32).unwrap_or(u128::MAX);
    if total > 10_000_000 {
        return Err(Error::ResourceLimit {
            what: "exhaustive enumeration".into(),
            needed: usize::MAX,
            limit: 10_000_000,
        });
    }
    let mut acc: BTreeMap<Value, f64> = BTreeMap::new();
    let alphabet: Vec<char> = model.alphabet().to_vec();
    let mut indices = vec![0usize; n];
    let mut buf: String = indices.iter().map(|&i| alphabet[i]).collect();
    loop {
        let p = model.sequence_probability(&buf)?;
        if p > 0.0 {
            *acc.entry(evaluator(&buf)?).or_insert(0.0) += p;
        }
        // Next string in lexicographic order.
        let mut pos = n;
        loop {
            if pos == 0 {
                return Distribution::new(acc, 0.0);
            }
            pos -= 1;
            indices[pos] += 1;
            if indices[pos] < alphabet.len() {
                break;
            }
            indices[pos] = 0;
        }
        buf = indices.iter().map(|&i| alphabet[i]).collect();
    }
}

/// Sample one text of length `n` from the model; deterministic given the seed.
pub fn sample_text(model: &TextModel, n: usize, rng_seed: u64) -> String {
    let mut rng = ChaCha12Rng::seed_from_u64(rng_seed);
    sample_text_with(model, n, &mut rng)
}

/// Sample one text using a caller-managed generator.
pub fn sample_text_with(model: &TextModel, n: usize, rng: &mut impl Rng) -> String {
    let mut out = String::with_capacity(n);
    let mut c = model.start_context();
    for _ in 0..n {
        let mut u: f64 = rng.random();
        let row = model.kernel_row(c);
        let mut chosen = row.last().copied();
        for &(k, c2, p) in row {
            if u < p {
                chosen = Some((k, c2, p));
                break;
            }
            u -= p;
        }
        let (k, c2, _) = chosen.expect("kernel rows are nonempty");
        out.push(model.alphabet()[k]);
        c = c2;
    }
    out
}

// ---------------------------------------------------------------------------
// Naive pattern scanning
// ---------------------------------------------------------------------------

fn class_match(g: &GeneralizedString, text: &[char], end: usize) -> bool {
    let len = g.len();
    if end + 1 < len {
        return false;
    }
    let start = end + 1 - len;
    g.iter()
        .enumerate()
        .all(|(i, class)| class.contains(&text[start + i]))
}

/// All occurrences of the pattern as `(start, end, multiplicity)` triples in
/// end order, by direct scanning.
pub fn scan_occurrences(pattern: &PatternSpec, text: &str) -> Result<Vec<(usize, usize, u32)>> {
    let gen = pattern.to_generalized()?;
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    for end in 0..chars.len() {
        for g in &gen {
            if class_match(g, &chars, end) {
                out.push((end + 1 - g.len(), end, 1));
            }
        }
    }
    out.sort_by_key(|&(s, e, _)| (e, s));
    Ok(out)
}

/// Pattern count of a text under a counting scheme, by direct scanning.
pub fn naive_count(pattern: &PatternSpec, text: &str, scheme: CountScheme) -> Result<u64> {
    let occurrences = scan_occurrences(pattern, text)?;
    Ok(match scheme {
        CountScheme::Overlapping => occurrences.len() as u64,
        CountScheme::MatchPosition => {
            let ends: std::collections::BTreeSet<usize> =
                occurrences.iter().map(|&(_, e, _)| e).collect();
            ends.len() as u64
        }
        CountScheme::NonOverlapping => {
            // Greedy by end position: a match counts only when it lies fully
            // after the previously counted one, mirroring the automaton that
            // restarts at the start state after each counted match.
            let mut count = 0u64;
            let mut last_end: Option<usize> = None;
            let mut by_end: BTreeMap<usize, usize> = BTreeMap::new();
            for &(s, e, _) in &occurrences {
                let best = by_end.entry(e).or_insert(s);
                *best = (*best).max(s);
            }
            for (&e, &max_start) in &by_end {
                if last_end.is_none_or(|le| max_start > le) {
                    count += 1;
                    last_end = Some(e);
                }
            }
            count
        }
    })
}

/// Clump sizes (number of occurrences per maximal overlapping group), left
/// to right.
pub fn extract_clumps(pattern: &PatternSpec, text: &str) -> Result<Vec<u32>> {
    let occurrences = scan_occurrences(pattern, text)?;
    let mut sorted = occurrences;
    sorted.sort_by_key(|&(s, e, _)| (s, e));
    let mut clumps = Vec::new();
    let mut current: Option<(usize, u32)> = None; // (max end, size)
    for &(s, e, _) in &sorted {
        match current {
            Some((max_end, size)) if s <= max_end => {
                current = Some((max_end.max(e), size + 1));
            }
            Some((_, size)) => {
                clumps.push(size);
                current = Some((e, 1));
            }
            None => current = Some((e, 1)),
        }
    }
    if let Some((_, size)) = current {
        clumps.push(size);
    }
    Ok(clumps)
}

// ---------------------------------------------------------------------------
// Window matcher execution
// ---------------------------------------------------------------------------

/// Which window matcher to execute.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatcherAlgo {
    Horspool,
    Sunday,
}

/// Run a window matcher over a text, returning `(occurrences, cost)` where
/// cost counts character accesses.
///
/// Horspool follows the textbook right-to-left loop with the shift read from
/// the last window character. The Sunday variant compares the same way but
/// shifts by the character just after the window; that lookahead access is
/// charged one cost unit, and windows are processed only while a lookahead
/// character exists.
pub fn run_matcher(algorithm: MatcherAlgo, pattern: &str, text: &str) -> Result<(u64, u64)> {
    let p: Vec<char> = pattern.chars().collect();
    let s: Vec<char> = text.chars().collect();
    let m = p.len();
    if m == 0 {
        return Err(Error::invalid("empty pattern"));
    }
    if s.len() < m {
        return Err(Error::invalid("text shorter than the pattern"));
    }
    let mut occ = 0u64;
    let mut cost = 0u64;
    match algorithm {
        MatcherAlgo::Horspool => {
            let shift = |ch: char| -> usize {
                let right = p[..m - 1]
                    .iter()
                    .rposition(|&c| c == ch)
                    .map(|i| i as i64)
                    .unwrap_or(-1);
                ((m as i64 - 1) - right) as usize
            };
            let mut t = m - 1;
            while t < s.len() {
                let mut i = 0;
                while i < m {
                    cost += 1;
                    if s[t - i] != p[m - 1 - i] {
                        break;
                    }
                    i += 1;
                }
                if i == m {
                    occ += 1;
                }
                t += shift(s[t]);
            }
        }
        MatcherAlgo::Sunday => {
            let shift = |ch: char| -> usize {
                match p.iter().rposition(|&c| c == ch) {
                    Some(i) => m - i,
                    None => m + 1,
                }
            };
            let mut t = m; // index of the lookahead character
            while t < s.len() {
                let mut i = 0;
                while i < m {
                    cost += 1;
                    if s[t - 1 - i] != p[m - 1 - i] {
                        break;
                    }
                    i += 1;
                }
                if i == m {
                    occ += 1;
                }
                cost += 1; // lookahead access
                t += shift(s[t]);
            }
        }
    }
    Ok((occ, cost))
}

// ---------------------------------------------------------------------------
// Flow sequencing simulation
// ---------------------------------------------------------------------------

/// Number of nucleotides of `text` sequenced within `flows` flows of the
/// dispensation order `order`, by direct simulation.
///
/// A nucleotide equal to the currently dispensed one extends the homopolymer
/// run at no flow cost; anything else waits for its next flow in the cyclic
/// order. Reading stops at the first nucleotide whose flow exceeds the budget.
pub fn simulate_flow_read(order: &[char], flows: u64, text: &str) -> usize {
    let len = order.len();
    let mut read = 0usize;
    let mut used = 0u64;
    let mut pos: Option<usize> = None;
    for ch in text.chars() {
        match pos {
            None => {
                let j = order
                    .iter()
                    .position(|&c| c == ch)
                    .expect("nucleotide occurs in the dispensation order");
                used += (j + 1) as u64;
                pos = Some(j);
            }
            Some(p) if order[p] == ch => {}
            Some(p) => {
                let mut i = 1usize;
                while order[(p + i) % len] != ch {
                    i += 1;
                }
                used += i as u64;
                pos = Some((p + i) % len);
            }
        }
        if used > flows {
            break;
        }
        read += 1;
    }
    read
}

// ---------------------------------------------------------------------------
// Statistical comparison
// ---------------------------------------------------------------------------

/// Empirical distribution from integer sample counts.
pub fn empirical_distribution(counts: &BTreeMap<Value, u64>, samples: u64) -> Distribution {
    let entries = counts.iter().map(|(&v, &c)| (v, c as f64 / samples as f64));
    Distribution::new(entries, 0.0).expect("empirical frequencies are valid")
}

/// Compare empirical counts against an exact reference distribution.
pub fn compare_empirical(
    counts: &BTreeMap<Value, u64>,
    samples: u64,
    reference: &Distribution,
    seed: u64,
) -> OracleReport {
    let empirical = empirical_distribution(counts, samples);
    let mut z_scores = BTreeMap::new();
    let mut max_dev: f64 = 0.0;
    let keys: std::collections::BTreeSet<Value> = counts
        .keys()
        .copied()
        .chain(reference.iter().map(|(v, _)| *v))
        .collect();
    for v in keys {
        let p = reference.p(&v);
        let observed = counts.get(&v).copied().unwrap_or(0) as f64;
        let expected = p * samples as f64;
        let sd = (samples as f64 * p * (1.0 - p)).sqrt();
        let z = if sd > 0.0 {
            (observed - expected) / sd
        } else if observed == expected {
            0.0
        } else {
            f64::INFINITY
        };
        z_scores.insert(v, z);
        max_dev = max_dev.max((empirical.p(&v) - p).abs());
    }
    OracleReport {
        distribution: empirical,
        samples: Some(samples),
        seed: Some(seed),
        max_abs_deviation: Some(max_dev),
        z_scores: Some(z_scores),
    }
}

/// Standard normal upper-tail probability, via the Abramowitz-Stegun
/// rational approximation of the error function (|error| < 1.5e-7).
fn normal_tail(z: f64) -> f64 {
    let x = z / std::f64::consts::SQRT_2;
    let t = 1.0 / (1.0 + 0.3275911 * x.abs());
    let poly = t
        * (0.254829592
            + t * (-0.284496736 + t * (1.421413741 + t * (-1.453152027 + t * 1.061405429))));
    let erfc = poly * (-x * x).exp();
    if x >= 0.0 {
        0.5 * erfc
    } else {
        1.0 - 0.5 * erfc
    }
}

/// Acceptance threshold for |z|: plain 3 for up to ten buckets, Bonferroni
/// widened beyond that so the familywise rate stays at the 3-sigma level.
pub fn z_threshold(buckets: usize) -> f64 {
    if buckets <= 10 {
        return 3.0;
    }
    let target = normal_tail(3.0) / buckets as f64;
    let (mut lo, mut hi) = (3.0f64, 8.0f64);
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if normal_tail(mid) > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Whether every bucket's z-score passes the (Bonferroni-adjusted) bound.
pub fn passes_z_test(report: &OracleReport) -> bool {
    match &report.z_scores {
        None => true,
        Some(scores) => {
            let bound = z_threshold(scores.len());
            scores.values().all(|z| z.abs() <= bound)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::textmodel::{iid_model, uniform_model};

    #[test]
    fn enumerate_exact_trivial_cases() {
        let model = uniform_model(&['0', '1']).unwrap();
        let d = enumerate_exact(|_| Ok(Value::Int(7)), &model, 0).unwrap();
        assert_eq!(d.p_int(7), 1.0);
        // Count of '1' characters over length 2 is Binomial(2, 1/2).
        let d = enumerate_exact(
            |s| Ok(Value::Int(s.chars().filter(|&c| c == '1').count() as i64)),
            &model,
            2,
        )
        .unwrap();
        assert_eq!(d.p_int(0), 0.25);
        assert_eq!(d.p_int(1), 0.5);
        assert_eq!(d.p_int(2), 0.25);
    }

    #[test]
    fn enumerate_exact_totals_one() {
        let model = iid_model(&[('0', 0.2), ('1', 0.8)]).unwrap();
        for n in 0..=6 {
            let d = enumerate_exact(|s| Ok(Value::Int(s.len() as i64)), &model, n).unwrap();
            assert!((d.total() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn enumerate_pattern_count_example() {
        // {101, 111} overlapping at n=3 under the uniform binary model.
        let model = uniform_model(&['0', '1']).unwrap();
        let pattern = PatternSpec::Strings(vec!["101".into(), "111".into()]);
        let d = enumerate_exact(
            |s| {
                Ok(Value::Int(
                    naive_count(&pattern, s, CountScheme::Overlapping)? as i64,
                ))
            },
            &model,
            3,
        )
        .unwrap();
        assert_eq!(d.p_int(1), 0.25);
        assert_eq!(d.p_int(0), 0.75);
    }

    #[test]
    fn sampling_is_deterministic_and_respects_support() {
        let model = iid_model(&[('0', 0.0), ('1', 1.0)]).unwrap();
        assert_eq!(sample_text(&model, 5, 42), "11111");
        let model = uniform_model(&['a', 'b']).unwrap();
        assert_eq!(sample_text(&model, 20, 7), sample_text(&model, 20, 7));
        assert_ne!(sample_text(&model, 20, 7), sample_text(&model, 20, 8));
    }

    #[test]
    fn sampled_character_frequencies_are_plausible() {
        let p = 0.7;
        let model = iid_model(&[('0', 1.0 - p), ('1', p)]).unwrap();
        let n = 100_000;
        let text = sample_text(&model, n, 1234);
        let ones = text.chars().filter(|&c| c == '1').count() as f64;
        let sd = (n as f64 * p * (1.0 - p)).sqrt();
        assert!((ones - p * n as f64).abs() < 3.0 * sd);
    }

    #[test]
    fn clump_extraction_paper_example() {
        let pattern = PatternSpec::Strings(vec!["ACA".into()]);
        let clumps = extract_clumps(&pattern, "GACACATTACAAA").unwrap();
        assert_eq!(clumps, vec![2, 1]);
        assert!(extract_clumps(&pattern, "GGGG").unwrap().is_empty());
    }

    #[test]
    fn naive_counts_by_scheme() {
        let pattern = PatternSpec::Strings(vec!["11".into()]);
        assert_eq!(
            naive_count(&pattern, "111", CountScheme::Overlapping).unwrap(),
            2
        );
        assert_eq!(
            naive_count(&pattern, "111", CountScheme::NonOverlapping).unwrap(),
            1
        );
        assert_eq!(
            naive_count(&pattern, "1111", CountScheme::NonOverlapping).unwrap(),
            2
        );
        let two = PatternSpec::Strings(vec!["aa".into(), "aaa".into()]);
        assert_eq!(
            naive_count(&two, "aaa", CountScheme::Overlapping).unwrap(),
            3
        );
        assert_eq!(
            naive_count(&two, "aaa", CountScheme::MatchPosition).unwrap(),
            2
        );
    }

    #[test]
    fn matcher_trivial_cases() {
        let (occ, cost) = run_matcher(MatcherAlgo::Horspool, "abc", "abc").unwrap();
        assert_eq!((occ, cost), (1, 3));
        // Pattern absent, distinct characters: one comparison per window.
        let (occ, cost) = run_matcher(MatcherAlgo::Horspool, "aa", "bbbb").unwrap();
        assert_eq!(occ, 0);
        assert_eq!(cost, 2); // windows at t=1 and t=3, shift 2 each
    }

    #[test]
    fn sunday_shift_conventions() {
        // Lookahead not in the pattern: shift m+1; equal to the last pattern
        // character: shift 1.
        let (occ, _) = run_matcher(MatcherAlgo::Sunday, "ab", "abab").unwrap();
        assert_eq!(occ, 1); // windows need a lookahead, the final ab is not scanned
    }

    #[test]
    fn flow_simulation_matches_table() {
        assert_eq!(
            simulate_flow_read(&['T', 'A', 'C', 'G'], 12, "GTCGTATCCC"),
            6
        );
        assert_eq!(
            simulate_flow_read(&['G', 'T', 'C', 'A'], 12, "GTCGTATCCC"),
            10
        );
    }

    #[test]
    fn z_threshold_grows_with_buckets() {
        assert_eq!(z_threshold(5), 3.0);
        let z20 = z_threshold(20);
        assert!(z20 > 3.0 && z20 < 5.0, "{z20}");
    }
}
