//! Alignment seed hit statistics and sensitivity.
//!
//! Seeds over `{1, *, ?}` describe required matches, don't-care positions
//! and optional indel columns of an alignment. A seed expands into a finite
//! pattern set over the alignment alphabet; hit counts in random alignments
//! then reduce to pattern occurrence statistics under a homology model
//! (i.i.d. match/mismatch for ungapped alignments, a first-order Markov
//! chain over `{0,1,2,3}` for gapped ones).

use std::collections::{BTreeMap, BTreeSet};

use crate::daa::{CountScheme, PatternSpec};
use crate::dist::Distribution;
use crate::error::{Error, Result};
use crate::paa::Method;
use crate::patstats::occurrence_distribution;
use crate::textmodel::{iid_model, markov_model, TextModel};

/// Alignment alphabet: mismatch, match, insertion, deletion.
pub const ALIGNMENT_ALPHABET: [char; 4] = ['0', '1', '2', '3'];

/// One seed position.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeedSymbol {
    /// `1`: the alignment column must be a match.
    Match,
    /// `*`: match or mismatch.
    DontCare,
    /// `?`: zero or one alignment character.
    Indel,
}

/// A seed over `{1, *, ?}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Seed {
    symbols: Vec<SeedSymbol>,
}

impl Seed {
    /// Parse a seed string; seeds must start and end with `1`.
    pub fn parse(s: &str) -> Result<Seed> {
        let mut symbols = Vec::with_capacity(s.len());
        for (i, ch) in s.chars().enumerate() {
            symbols.push(match ch {
                '1' => SeedSymbol::Match,
                '*' => SeedSymbol::DontCare,
                '?' => SeedSymbol::Indel,
                _ => {
                    return Err(Error::Parse {
                        position: i,
                        detail: format!("seed character {ch:?}, expected 1, * or ?"),
                    })
                }
            });
        }
        if symbols.first() != Some(&SeedSymbol::Match) || symbols.last() != Some(&SeedSymbol::Match)
        {
            return Err(Error::invalid(
                "seeds must start and end with a match position",
            ));
        }
        Ok(Seed { symbols })
    }

    /// Seed length `L`.
    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    /// Whether the seed has no symbols (never true for parsed seeds).
    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    /// Seed weight: the number of match positions.
    pub fn weight(&self) -> usize {
        self.symbols
            .iter()
            .filter(|&&s| s == SeedSymbol::Match)
            .count()
    }
}

impl std::fmt::Display for Seed {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for s in &self.symbols {
            f.write_str(match s {
                SeedSymbol::Match => "1",
                SeedSymbol::DontCare => "*",
                SeedSymbol::Indel => "?",
            })?;
        }
        Ok(())
    }
}

/// All instances of the seed over the alignment alphabet.
///
/// `1` expands to `1`, `*` to `0` or `1`, `?` to nothing or one alignment
/// character. Adjacent `?` positions never produce the pairs `23` or `32`
/// (two consecutive opposite indels are excluded at the pair level).
pub fn seed_pattern_set(seed: &Seed) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    // Track the character produced by the previous position when that
    // position was an indel, for the adjacent-pair exclusion.
    let mut stack: Vec<(usize, String, Option<char>)> = vec![(0, String::new(), None)];
    while let Some((i, prefix, prev_indel)) = stack.pop() {
        if i == seed.symbols.len() {
            out.insert(prefix);
            continue;
        }
        match seed.symbols[i] {
            SeedSymbol::Match => {
                let mut next = prefix.clone();
                next.push('1');
                stack.push((i + 1, next, None));
            }
            SeedSymbol::DontCare => {
                for ch in ['0', '1'] {
                    let mut next = prefix.clone();
                    next.push(ch);
                    stack.push((i + 1, next, None));
                }
            }
            SeedSymbol::Indel => {
                // Skipping the position keeps the previous indel character
                // visible to a following `?`.
                stack.push((i + 1, prefix.clone(), prev_indel));
                for ch in ALIGNMENT_ALPHABET {
                    let excluded = matches!((prev_indel, ch), (Some('2'), '3') | (Some('3'), '2'));
                    if excluded {
                        continue;
                    }
                    let mut next = prefix.clone();
                    next.push(ch);
                    stack.push((i + 1, next, Some(ch)));
                }
            }
        }
    }
    out
}

/// A set of seeds used simultaneously.
#[derive(Debug, Clone)]
pub struct MultipleSeed {
    seeds: Vec<Seed>,
}

impl MultipleSeed {
    /// Build from one or more seeds.
    pub fn new(seeds: Vec<Seed>) -> Result<Self> {
        if seeds.is_empty() {
            return Err(Error::invalid("a multiple seed needs at least one seed"));
        }
        Ok(MultipleSeed { seeds })
    }

    /// Component seeds.
    pub fn seeds(&self) -> &[Seed] {
        &self.seeds
    }

    /// Union of the component pattern sets, deduplicated.
    pub fn pattern_set(&self) -> BTreeSet<String> {
        self.seeds.iter().flat_map(seed_pattern_set).collect()
    }
}

// ---------------------------------------------------------------------------
// Homology models
// ---------------------------------------------------------------------------

/// Random alignment model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum HomologyModel {
    /// Ungapped alignments: i.i.d. match probability `p` over `{0,1}`.
    Ungapped { p: f64 },
    /// Gapped alignments: first-order Markov chain over `{0,1,2,3}` with
    /// mismatch, match and gap probabilities (`p0 + p1 + 2 pg = 1`).
    Gapped { p0: f64, p1: f64, pg: f64 },
}

/// The text model induced by a homology model.
pub fn homology_model(kind: HomologyModel) -> Result<TextModel> {
    match kind {
        HomologyModel::Ungapped { p } => {
            if !(0.0..=1.0).contains(&p) || p.is_nan() {
                return Err(Error::InvalidProbability {
                    what: "match probability".into(),
                    value: p,
                });
            }
            iid_model(&[('0', 1.0 - p), ('1', p)])
        }
        HomologyModel::Gapped { p0, p1, pg } => {
            for (name, v) in [("p0", p0), ("p1", p1), ("pg", pg)] {
                if !(0.0..=1.0).contains(&v) || v.is_nan() {
                    return Err(Error::InvalidProbability {
                        what: format!("homology parameter {name}"),
                        value: v,
                    });
                }
            }
            let sum = p0 + p1 + 2.0 * pg;
            if (sum - 1.0).abs() > 1e-9 {
                return Err(Error::NotStochastic {
                    what: "homology parameters p0 + p1 + 2 pg".into(),
                    sum,
                    tol: 1e-9,
                });
            }
            if p0 + p1 <= 0.0 {
                return Err(Error::invalid("p0 + p1 must be positive"));
            }
            // Rows 2 and 3 redistribute the impossible opposite-indel mass
            // onto match and mismatch.
            let scale = 1.0 + pg / (p0 + p1);
            let p0s = p0 * scale;
            let p1s = p1 * scale;
            let normalize = |row: [f64; 4]| -> BTreeMap<char, f64> {
                let total: f64 = row.iter().sum();
                ALIGNMENT_ALPHABET
                    .iter()
                    .zip(row)
                    .filter(|&(_, p)| p > 0.0)
                    .map(|(&c, p)| (c, p / total))
                    .collect()
            };
            let mut conditionals = BTreeMap::new();
            conditionals.insert(String::new(), normalize([p0, p1, pg, pg]));
            conditionals.insert("0".into(), normalize([p0, p1, pg, pg]));
            conditionals.insert("1".into(), normalize([p0, p1, pg, pg]));
            if pg > 0.0 {
                conditionals.insert("2".into(), normalize([p0s, p1s, pg, 0.0]));
                conditionals.insert("3".into(), normalize([p0s, p1s, 0.0, pg]));
            }
            markov_model(&ALIGNMENT_ALPHABET, 1, &conditionals)
        }
    }
}

// ---------------------------------------------------------------------------
// Hit statistics
// ---------------------------------------------------------------------------

fn pattern_spec(seeds: &MultipleSeed) -> PatternSpec {
    PatternSpec::Strings(seeds.pattern_set().into_iter().collect())
}

/// Distribution of the number of seed hits (truncated at `k_max`) in a
/// random alignment of length `n`.
pub fn seed_hit_distribution(
    seeds: &MultipleSeed,
    model: &TextModel,
    n: usize,
    k_max: i64,
    scheme: CountScheme,
) -> Result<Distribution> {
    occurrence_distribution(&pattern_spec(seeds), model, n, k_max, scheme, Method::Basic)
}

/// Probability of at least one hit in a random alignment of length `n`.
///
/// Runs with the value set reduced to hit/no-hit (truncation at one).
pub fn seed_sensitivity(seeds: &MultipleSeed, model: &TextModel, n: usize) -> Result<f64> {
    let d = occurrence_distribution(
        &pattern_spec(seeds),
        model,
        n,
        1,
        CountScheme::MatchPosition,
        Method::Basic,
    )?;
    Ok(1.0 - d.p_int(0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::scan_occurrences;

    fn single(seed: &str) -> MultipleSeed {
        MultipleSeed::new(vec![Seed::parse(seed).unwrap()]).unwrap()
    }

    #[test]
    fn indel_seed_pattern_set_matches_example() {
        let set = seed_pattern_set(&Seed::parse("1*1?1").unwrap());
        let expect: BTreeSet<String> = [
            "1011", "1111", "10101", "10111", "10121", "10131", "11101", "11111", "11121", "11131",
        ]
        .into_iter()
        .map(String::from)
        .collect();
        assert_eq!(set, expect);
    }

    #[test]
    fn contiguous_and_spaced_seeds() {
        assert_eq!(
            seed_pattern_set(&Seed::parse("111").unwrap()),
            BTreeSet::from(["111".to_string()])
        );
        assert_eq!(
            seed_pattern_set(&Seed::parse("1*1").unwrap()),
            BTreeSet::from(["101".to_string(), "111".to_string()])
        );
    }

    #[test]
    fn adjacent_indels_exclude_opposite_pairs() {
        let set = seed_pattern_set(&Seed::parse("1??1").unwrap());
        assert!(!set.contains("1231"));
        assert!(!set.contains("1321"));
        assert!(set.contains("1221"));
        assert!(set.contains("1331"));
        // Length range: both indels may vanish.
        assert!(set.contains("11"));
    }

    #[test]
    fn seed_validation() {
        assert!(Seed::parse("*11").is_err());
        assert!(Seed::parse("11?").is_err());
        assert!(Seed::parse("1a1").is_err());
        let seed = Seed::parse("111*1**1*1**11*111").unwrap();
        assert_eq!(seed.len(), 18);
        assert_eq!(seed.weight(), 11);
    }

    #[test]
    fn hit_positions_in_fixed_alignment() {
        // Scanning oracle over the paper's example string.
        let seed = Seed::parse("1*1?1").unwrap();
        let patterns: Vec<String> = seed_pattern_set(&seed).into_iter().collect();
        let spec = PatternSpec::Strings(patterns);
        let occurrences = scan_occurrences(&spec, "1011011110").unwrap();
        let ends: BTreeSet<usize> = occurrences.iter().map(|&(_, e, _)| e).collect();
        assert_eq!(ends, BTreeSet::from([3, 6, 7, 8]));
    }

    #[test]
    fn ungapped_model_probabilities() {
        let model = homology_model(HomologyModel::Ungapped { p: 0.95 }).unwrap();
        assert!((model.sequence_probability("11").unwrap() - 0.9025).abs() < 1e-12);
    }

    #[test]
    fn gapped_model_structure() {
        let model = homology_model(HomologyModel::Gapped {
            p0: 0.2,
            p1: 0.7,
            pg: 0.05,
        })
        .unwrap();
        // 23 and 32 are impossible.
        assert_eq!(model.sequence_probability("23").unwrap(), 0.0);
        assert_eq!(model.sequence_probability("32").unwrap(), 0.0);
        assert!(model.sequence_probability("22").unwrap() > 0.0);
        // Degenerate gap probability reduces to the ungapped model.
        let degenerate = homology_model(HomologyModel::Gapped {
            p0: 0.3,
            p1: 0.7,
            pg: 0.0,
        })
        .unwrap();
        let ungapped = homology_model(HomologyModel::Ungapped { p: 0.7 }).unwrap();
        for s in ["0", "1", "01", "11", "0110"] {
            assert!(
                (degenerate.sequence_probability(s).unwrap()
                    - ungapped.sequence_probability(s).unwrap())
                .abs()
                    < 1e-12
            );
        }
        assert!(homology_model(HomologyModel::Gapped {
            p0: 0.5,
            p1: 0.5,
            pg: 0.2,
        })
        .is_err());
    }

    #[test]
    fn sensitivity_fast_path_equals_hit_distribution() {
        // Indel seeds expand over the gapped alignment alphabet, so they run
        // against the gapped homology model; match/don't-care seeds work
        // under both.
        let gapped = homology_model(HomologyModel::Gapped {
            p0: 0.15,
            p1: 0.75,
            pg: 0.05,
        })
        .unwrap();
        for seed in ["111", "1*1", "1*1?1"] {
            let seeds = single(seed);
            let sens = seed_sensitivity(&seeds, &gapped, 12).unwrap();
            let hits =
                seed_hit_distribution(&seeds, &gapped, 12, 3, CountScheme::Overlapping).unwrap();
            assert!((sens - (1.0 - hits.p_int(0))).abs() < 1e-12);
        }
        let ungapped = homology_model(HomologyModel::Ungapped { p: 0.8 }).unwrap();
        let seeds = single("1*1");
        let sens = seed_sensitivity(&seeds, &ungapped, 12).unwrap();
        let hits =
            seed_hit_distribution(&seeds, &ungapped, 12, 3, CountScheme::Overlapping).unwrap();
        assert!((sens - (1.0 - hits.p_int(0))).abs() < 1e-12);
    }

    #[test]
    fn sensitivity_zero_below_weight() {
        let model = homology_model(HomologyModel::Ungapped { p: 0.9 }).unwrap();
        let seeds = single("11111");
        assert_eq!(seed_sensitivity(&seeds, &model, 4).unwrap(), 0.0);
    }

    #[test]
    fn sensitivity_monotone_in_length_and_p() {
        let seeds = single("1*11");
        let mut last = 0.0;
        for n in 4..=12 {
            let model = homology_model(HomologyModel::Ungapped { p: 0.6 }).unwrap();
            let s = seed_sensitivity(&seeds, &model, n).unwrap();
            assert!(s >= last - 1e-12, "n={n}");
            last = s;
        }
        let mut last = 0.0;
        for p in [0.1, 0.3, 0.5, 0.7, 0.9] {
            let model = homology_model(HomologyModel::Ungapped { p }).unwrap();
            let s = seed_sensitivity(&seeds, &model, 10).unwrap();
            assert!(s >= last - 1e-12, "p={p}");
            last = s;
        }
    }

    #[test]
    fn multiple_seed_dominates_components() {
        let model = homology_model(HomologyModel::Ungapped { p: 0.55 }).unwrap();
        let a = Seed::parse("111").unwrap();
        let b = Seed::parse("1*11").unwrap();
        let both = MultipleSeed::new(vec![a.clone(), b.clone()]).unwrap();
        let n = 10;
        let sens_a = seed_sensitivity(&MultipleSeed::new(vec![a]).unwrap(), &model, n).unwrap();
        let sens_b = seed_sensitivity(&MultipleSeed::new(vec![b]).unwrap(), &model, n).unwrap();
        let sens_both = seed_sensitivity(&both, &model, n).unwrap();
        assert!(sens_both >= sens_a.max(sens_b) - 1e-12);
    }
}
