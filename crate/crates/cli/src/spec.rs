//! JSON wire formats for models, patterns, homology parameters and cleavage
//! rules, plus loaders that accept inline JSON or file paths.

use std::collections::BTreeMap;
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use serde::Deserialize;

use paa_core::daa::PatternSpec;
use paa_core::massstat::{CleavageRule, MassTable};
use paa_core::seedstat::HomologyModel;
use paa_core::textmodel::{dirac_model, from_hmm, iid_model, markov_model, Hmm, TextModel};

/// Inline JSON (starting with `{`) or the contents of the named file.
pub fn load_spec_text(arg: &str) -> Result<String> {
    if arg.trim_start().starts_with('{') {
        Ok(arg.to_string())
    } else {
        std::fs::read_to_string(arg).with_context(|| format!("reading spec file {arg}"))
    }
}

fn single_char(s: &str, what: &str) -> Result<char> {
    let mut chars = s.chars();
    match (chars.next(), chars.next()) {
        (Some(c), None) => Ok(c),
        _ => bail!("{what} must be a single character, got {s:?}"),
    }
}

// ---------------------------------------------------------------------------
// Text models
// ---------------------------------------------------------------------------

#[derive(Debug, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
pub enum ModelSpec {
    Iid {
        probs: BTreeMap<String, f64>,
    },
    Markov {
        order: usize,
        conditionals: BTreeMap<String, BTreeMap<String, f64>>,
        #[serde(default)]
        alphabet: Option<Vec<String>>,
    },
    Hmm {
        states: Vec<String>,
        start: String,
        transitions: BTreeMap<String, BTreeMap<String, f64>>,
        emissions: BTreeMap<String, BTreeMap<String, f64>>,
    },
    Dirac {
        text: String,
    },
}

impl ModelSpec {
    pub fn build(&self) -> Result<TextModel> {
        match self {
            ModelSpec::Iid { probs } => {
                let entries: Vec<(char, f64)> = probs
                    .iter()
                    .map(|(k, &p)| Ok((single_char(k, "alphabet character")?, p)))
                    .collect::<Result<_>>()?;
                Ok(iid_model(&entries)?)
            }
            ModelSpec::Markov {
                order,
                conditionals,
                alphabet,
            } => {
                let alphabet: Vec<char> = match alphabet {
                    Some(list) => list
                        .iter()
                        .map(|s| single_char(s, "alphabet character"))
                        .collect::<Result<_>>()?,
                    None => {
                        let mut set = std::collections::BTreeSet::new();
                        for row in conditionals.values() {
                            for k in row.keys() {
                                set.insert(single_char(k, "alphabet character")?);
                            }
                        }
                        set.into_iter().collect()
                    }
                };
                let mut rows = BTreeMap::new();
                for (history, row) in conditionals {
                    let mut out = BTreeMap::new();
                    for (k, &p) in row {
                        out.insert(single_char(k, "alphabet character")?, p);
                    }
                    rows.insert(history.clone(), out);
                }
                Ok(markov_model(&alphabet, *order, &rows)?)
            }
            ModelSpec::Hmm {
                states,
                start,
                transitions,
                emissions,
            } => {
                let start_id = states
                    .iter()
                    .position(|s| s == start)
                    .ok_or_else(|| anyhow!("start state {start:?} not in states"))?;
                let mut alphabet = std::collections::BTreeSet::new();
                for row in emissions.values() {
                    for k in row.keys() {
                        alphabet.insert(single_char(k, "alphabet character")?);
                    }
                }
                let alphabet: Vec<char> = alphabet.into_iter().collect();
                let n = states.len();
                let mut trans = vec![vec![0.0; n]; n];
                for (from, row) in transitions {
                    let f = states
                        .iter()
                        .position(|s| s == from)
                        .ok_or_else(|| anyhow!("unknown state {from:?} in transitions"))?;
                    for (to, &p) in row {
                        let t = states
                            .iter()
                            .position(|s| s == to)
                            .ok_or_else(|| anyhow!("unknown state {to:?} in transitions"))?;
                        trans[f][t] = p;
                    }
                }
                let mut emis = vec![BTreeMap::new(); n];
                for (state, row) in emissions {
                    let q = states
                        .iter()
                        .position(|s| s == state)
                        .ok_or_else(|| anyhow!("unknown state {state:?} in emissions"))?;
                    for (k, &p) in row {
                        emis[q].insert(single_char(k, "alphabet character")?, p);
                    }
                }
                let hmm = Hmm::new(states.clone(), start_id, alphabet, trans, emis)?;
                Ok(from_hmm(&hmm)?)
            }
            ModelSpec::Dirac { text } => Ok(dirac_model(text)?),
        }
    }
}

pub fn load_model(arg: &str) -> Result<TextModel> {
    let text = load_spec_text(arg)?;
    let spec: ModelSpec =
        serde_json::from_str(&text).with_context(|| "parsing text-model spec JSON")?;
    spec.build()
}

// ---------------------------------------------------------------------------
// Patterns
// ---------------------------------------------------------------------------

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PatternFile {
    #[serde(default)]
    pub strings: Option<Vec<String>>,
    #[serde(default)]
    pub generalized: Option<Vec<Vec<String>>>,
    #[serde(default)]
    pub prosite: Option<String>,
    /// Optional defaults carried in the spec file; CLI flags take precedence.
    #[serde(default)]
    pub scheme: Option<String>,
    #[serde(default)]
    pub m: Option<i64>,
}

impl PatternFile {
    pub fn to_pattern(&self) -> Result<PatternSpec> {
        match (&self.strings, &self.generalized, &self.prosite) {
            (Some(strings), None, None) => Ok(PatternSpec::Strings(strings.clone())),
            (None, Some(gen), None) => {
                let patterns = gen
                    .iter()
                    .map(|positions| {
                        positions
                            .iter()
                            .map(|class| {
                                if class.is_empty() {
                                    bail!("empty character class");
                                }
                                Ok(class.chars().collect())
                            })
                            .collect::<Result<Vec<_>>>()
                    })
                    .collect::<Result<Vec<_>>>()?;
                Ok(PatternSpec::Generalized(patterns))
            }
            (None, None, Some(prosite)) => Ok(PatternSpec::Prosite(prosite.clone())),
            _ => bail!("pattern spec needs exactly one of: strings, generalized, prosite"),
        }
    }
}

pub fn load_pattern(arg: &str) -> Result<(PatternSpec, PatternFile)> {
    let text = load_spec_text(arg)?;
    let file: PatternFile =
        serde_json::from_str(&text).with_context(|| "parsing pattern spec JSON")?;
    Ok((file.to_pattern()?, file))
}

// ---------------------------------------------------------------------------
// Homology parameters
// ---------------------------------------------------------------------------

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
enum HomologyJson {
    Ungapped { p: f64 },
    Gapped { p0: f64, p1: f64, pg: f64 },
}

/// Parse `ungapped:P`, `gapped:P0,P1,PG` or the JSON form.
pub fn parse_homology(arg: &str) -> Result<HomologyModel> {
    if arg.trim_start().starts_with('{') {
        let spec: HomologyJson =
            serde_json::from_str(arg).with_context(|| "parsing homology JSON")?;
        return Ok(match spec {
            HomologyJson::Ungapped { p } => HomologyModel::Ungapped { p },
            HomologyJson::Gapped { p0, p1, pg } => HomologyModel::Gapped { p0, p1, pg },
        });
    }
    let (kind, params) = arg
        .split_once(':')
        .ok_or_else(|| anyhow!("expected ungapped:P or gapped:P0,P1,PG, got {arg:?}"))?;
    match kind {
        "ungapped" => Ok(HomologyModel::Ungapped {
            p: params
                .parse()
                .with_context(|| "parsing match probability")?,
        }),
        "gapped" => {
            let parts: Vec<&str> = params.split(',').collect();
            if parts.len() != 3 {
                bail!("gapped homology needs three parameters p0,p1,pg");
            }
            Ok(HomologyModel::Gapped {
                p0: parts[0].trim().parse()?,
                p1: parts[1].trim().parse()?,
                pg: parts[2].trim().parse()?,
            })
        }
        other => bail!("unknown homology kind {other:?}"),
    }
}

// ---------------------------------------------------------------------------
// Cleavage rules and mass tables
// ---------------------------------------------------------------------------

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RuleJson {
    gamma: Vec<String>,
    #[serde(default)]
    pi: Vec<String>,
}

pub fn load_rule(arg: &str) -> Result<CleavageRule> {
    let text = load_spec_text(arg)?;
    let spec: RuleJson =
        serde_json::from_str(&text).with_context(|| "parsing cleavage rule JSON")?;
    let gamma = spec
        .gamma
        .iter()
        .map(|s| single_char(s, "cleavage character"))
        .collect::<Result<Vec<_>>>()?;
    let pi = spec
        .pi
        .iter()
        .map(|s| single_char(s, "prohibition character"))
        .collect::<Result<Vec<_>>>()?;
    Ok(CleavageRule::new(gamma, pi))
}

/// Mass table TSV: `residue<TAB>mass-in-Dalton` per line.
pub fn load_mass_table(path: Option<&Path>, lambda: u32) -> Result<MassTable> {
    match path {
        None => Ok(MassTable::monoisotopic(lambda)),
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("reading mass table {}", path.display()))?;
            let mut entries = Vec::new();
            for (i, line) in text.lines().enumerate() {
                let line = line.trim();
                if line.is_empty() || line.starts_with('#') {
                    continue;
                }
                let (residue, mass) = line
                    .split_once('\t')
                    .or_else(|| line.split_once(' '))
                    .ok_or_else(|| anyhow!("line {}: expected residue<TAB>mass", i + 1))?;
                entries.push((
                    single_char(residue.trim(), "residue")?,
                    mass.trim()
                        .parse::<f64>()
                        .with_context(|| format!("line {}: bad mass", i + 1))?,
                ));
            }
            Ok(MassTable::from_da(&entries, lambda)?)
        }
    }
}
