//! Length and mass statistics of proteolytic fragments.
//!
//! A cleavage rule `Γ Π̄` ends a fragment after a character in `Γ` that is
//! not followed by a character in `Π` (trypsin: after K or R unless P
//! follows). The cleavage automaton sums residue masses until the fragment
//! ends; coupled with a protein model it yields the joint length-mass
//! distribution of the first or any following fragment, the probability that
//! a random protein contains a fragment in a mass window, and hooks for
//! missed cleavages and post-translational modifications.
//!
//! Masses are scaled by `λ` (integer units per Dalton) and rounded per
//! residue before summation; fragment mass is the plain residue sum.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};

use crate::daa::Daa;
use crate::dist::{Distribution, Value, ValueDomain};
use crate::error::{Error, Result};
use crate::paa::{Operation, Paa};
use crate::textmodel::TextModel;

/// Cleavage characters and prohibition characters of an enzyme.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CleavageRule {
    pub gamma: BTreeSet<char>,
    pub pi: BTreeSet<char>,
}

impl CleavageRule {
    /// Build a rule from cleavage and prohibition characters.
    pub fn new(gamma: impl IntoIterator<Item = char>, pi: impl IntoIterator<Item = char>) -> Self {
        CleavageRule {
            gamma: gamma.into_iter().collect(),
            pi: pi.into_iter().collect(),
        }
    }

    /// Trypsin: cleaves after K or R unless followed by P.
    pub fn trypsin() -> Self {
        CleavageRule::new(['K', 'R'], ['P'])
    }
}

// ---------------------------------------------------------------------------
// Mass tables
// ---------------------------------------------------------------------------

/// Per-residue integer mass distributions at a fixed scaling factor.
///
/// Entries are Dirac by default (one mass per residue); isotopic spreads or
/// modification mixtures widen them.
#[derive(Debug, Clone)]
pub struct MassTable {
    lambda: u32,
    masses: BTreeMap<char, Vec<(i64, f64)>>,
}

/// Round half away from zero, applied per residue after scaling.
fn scale_mass(da: f64, lambda: u32) -> i64 {
    (da * lambda as f64).round() as i64
}

impl MassTable {
    /// Dirac mass table from Dalton values.
    pub fn from_da(entries: &[(char, f64)], lambda: u32) -> Result<MassTable> {
        if lambda == 0 {
            return Err(Error::invalid("scaling factor must be at least 1"));
        }
        let mut masses = BTreeMap::new();
        for &(residue, da) in entries {
            let scaled = scale_mass(da, lambda);
            if scaled < 0 {
                return Err(Error::invalid(format!(
                    "negative mass for residue {residue:?}"
                )));
            }
            if masses.insert(residue, vec![(scaled, 1.0)]).is_some() {
                return Err(Error::invalid(format!("duplicate residue {residue:?}")));
            }
        }
        if masses.is_empty() {
            return Err(Error::invalid("empty mass table"));
        }
        Ok(MassTable { lambda, masses })
    }

    /// The shipped standard monoisotopic residue masses.
    pub fn monoisotopic(lambda: u32) -> MassTable {
        let raw = include_str!("../data/monoisotopic_masses.tsv");
        let entries: Vec<(char, f64)> = raw
            .lines()
            .filter(|l| !l.trim().is_empty())
            .map(|l| {
                let mut parts = l.split('\t');
                let residue = parts.next().unwrap().chars().next().unwrap();
                let da: f64 = parts.next().unwrap().trim().parse().unwrap();
                (residue, da)
            })
            .collect();
        MassTable::from_da(&entries, lambda).expect("shipped table is valid")
    }

    /// Uniform zero-mass table over an alphabet (for length-only queries).
    pub fn zero(alphabet: &[char]) -> MassTable {
        let entries: Vec<(char, f64)> = alphabet.iter().map(|&c| (c, 0.0)).collect();
        MassTable::from_da(&entries, 1).expect("zero table is valid")
    }

    /// Replace one residue's mass by a distribution over Dalton values
    /// (isotopic spread hook).
    pub fn with_distribution(mut self, residue: char, dist_da: &[(f64, f64)]) -> Result<MassTable> {
        if !self.masses.contains_key(&residue) {
            return Err(Error::invalid(format!("unknown residue {residue:?}")));
        }
        let mut row: BTreeMap<i64, f64> = BTreeMap::new();
        let mut total = 0.0;
        for &(da, p) in dist_da {
            if !(0.0..=1.0).contains(&p) || p.is_nan() {
                return Err(Error::InvalidProbability {
                    what: format!("mass entry of residue {residue:?}"),
                    value: p,
                });
            }
            let scaled = scale_mass(da, self.lambda);
            if scaled < 0 {
                return Err(Error::invalid(format!(
                    "negative mass for residue {residue:?}"
                )));
            }
            *row.entry(scaled).or_insert(0.0) += p;
            total += p;
        }
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::NotStochastic {
                what: format!("mass distribution of residue {residue:?}"),
                sum: total,
                tol: 1e-9,
            });
        }
        self.masses
            .insert(residue, row.into_iter().filter(|&(_, p)| p > 0.0).collect());
        Ok(self)
    }

    /// Scaling factor λ (integer units per Dalton).
    pub fn lambda(&self) -> u32 {
        self.lambda
    }

    /// Residues covered by the table, in order.
    pub fn residues(&self) -> Vec<char> {
        self.masses.keys().copied().collect()
    }

    /// Scaled mass distribution of a residue.
    pub fn distribution(&self, residue: char) -> Result<&[(i64, f64)]> {
        self.masses
            .get(&residue)
            .map(|v| v.as_slice())
            .ok_or_else(|| Error::UnknownCharacter {
                ch: residue,
                alphabet: self.residues().iter().collect(),
            })
    }

    /// Whether every residue has a single deterministic mass.
    pub fn is_dirac(&self) -> bool {
        self.masses.values().all(|v| v.len() == 1)
    }

    fn dirac_mass(&self, residue: char) -> Result<i64> {
        let d = self.distribution(residue)?;
        if d.len() != 1 {
            return Err(Error::invalid(format!(
                "residue {residue:?} carries a mass distribution, not a single mass"
            )));
        }
        Ok(d[0].0)
    }
}

/// Mix a mass shift into one residue: with the given probability the residue
/// carries the modification, otherwise its original mass.
pub fn apply_ptm(
    table: &MassTable,
    residue: char,
    shift_da: f64,
    probability: f64,
) -> Result<MassTable> {
    if !(0.0..=1.0).contains(&probability) || probability.is_nan() {
        return Err(Error::InvalidProbability {
            what: "modification probability".into(),
            value: probability,
        });
    }
    let original = table.distribution(residue)?.to_vec();
    let shift = scale_mass(shift_da, table.lambda);
    let mut mixed: BTreeMap<i64, f64> = BTreeMap::new();
    for &(m, p) in &original {
        if p * (1.0 - probability) > 0.0 {
            *mixed.entry(m).or_insert(0.0) += p * (1.0 - probability);
        }
        if probability > 0.0 {
            let shifted = m + shift;
            if shifted < 0 {
                return Err(Error::invalid(format!(
                    "modification drives residue {residue:?} to a negative mass"
                )));
            }
            *mixed.entry(shifted).or_insert(0.0) += p * probability;
        }
    }
    let mut out = table.clone();
    out.masses.insert(residue, mixed.into_iter().collect());
    Ok(out)
}

// ---------------------------------------------------------------------------
// Cleavage DAA
// ---------------------------------------------------------------------------

/// The mass-summing cleavage DAA over the residues of the mass table.
///
/// States are the residues plus start, fragment-end and drain; reading a
/// protein accumulates the first fragment's mass and enters the end state
/// right after the first character of the second fragment. Requires a Dirac
/// mass table (DAA emissions are deterministic).
pub fn cleavage_daa(rule: &CleavageRule, masses: &MassTable) -> Result<Daa> {
    let alphabet = masses.residues();
    for set in [&rule.gamma, &rule.pi] {
        for &ch in set {
            if !alphabet.contains(&ch) {
                return Err(Error::UnknownCharacter {
                    ch,
                    alphabet: alphabet.iter().collect(),
                });
            }
        }
    }
    let n_res = alphabet.len();
    // States: residues, then start, fragment end, drain.
    let start = n_res;
    let end = n_res + 1;
    let drain = n_res + 2;
    let mut labels: Vec<String> = alphabet.iter().map(|c| c.to_string()).collect();
    labels.extend(["start".into(), "end".into(), "drain".into()]);
    let mut emissions = Vec::with_capacity(n_res + 3);
    for &res in &alphabet {
        emissions.push(Value::Int(masses.dirac_mass(res)?));
    }
    emissions.extend([Value::Int(0), Value::Int(0), Value::Int(0)]);
    let mut delta = Vec::with_capacity(n_res + 3);
    for q in 0..n_res + 3 {
        let row: Vec<usize> = (0..n_res)
            .map(|k| {
                let is_cleaver = q < n_res && rule.gamma.contains(&alphabet[q]);
                if q == end || q == drain {
                    drain
                } else if is_cleaver && !rule.pi.contains(&alphabet[k]) {
                    end
                } else {
                    k
                }
            })
            .collect();
        delta.push(row);
    }
    Daa::new(
        labels,
        start,
        alphabet,
        delta,
        ValueDomain::IntRange {
            lo: 0,
            hi: i64::MAX,
        },
        Value::Int(0),
        emissions,
        vec![Operation::add(); n_res + 3],
    )
}

// ---------------------------------------------------------------------------
// Cleavage PAAs
// ---------------------------------------------------------------------------

/// Which fragment the statistics describe.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WhichFragment {
    /// The fragment at the start of the protein.
    First,
    /// The k-th fragment, k >= 2; its start reflects the text-model state at
    /// the end of fragment k-1 and never begins with a prohibition character.
    Following(u32),
}

/// Role of a PAA state in the cleavage automaton.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum StateRole {
    Start,
    Residue(char),
    /// Fragment ended; the payload is the first character of the next one.
    FragmentEnd(char),
    Drain,
}

/// What the cleavage PAA computes.
#[derive(Debug, Clone, PartialEq)]
enum CleavageKind {
    /// Track one fragment, freeze after it ends.
    Fragment,
    /// Keep cleaving forever, absorbing the value once a completed fragment
    /// mass falls into the window.
    Occurrence { lo: i64, hi: i64 },
}

/// A cleavage automaton coupled with a protein model, with per-state roles.
#[derive(Debug, Clone)]
pub struct CleavagePaa {
    pub paa: Paa,
    pub roles: Vec<StateRole>,
    contexts: Vec<usize>,
    kind: CleavageKind,
    model: TextModel,
    rule: CleavageRule,
    masses: MassTable,
    which: WhichFragment,
    p_miss: f64,
}

/// Sentinel value marking "a fragment in the window has been seen".
pub const MASS_SEEN: Value = Value::Int(-1);

impl CleavagePaa {
    /// Which fragment this automaton tracks.
    pub fn which(&self) -> WhichFragment {
        self.which
    }

    /// Probability of reading through a cleavage site.
    pub fn p_miss(&self) -> f64 {
        self.p_miss
    }
}

struct Builder<'a> {
    model: &'a TextModel,
    rule: &'a CleavageRule,
    masses: &'a MassTable,
    kind: CleavageKind,
    p_miss: f64,
}

impl Builder<'_> {
    /// Compose cleavage structure and text model over reachable pairs.
    ///
    /// `start_row`: explicit start transitions as ((role char, context),
    /// probability); `None` uses the model's own start context (first
    /// fragment).
    fn build(&self, start_row: Option<&BTreeMap<(char, usize), f64>>) -> Result<CleavagePaa> {
        // The model's alphabet drives the automaton; the mass table must
        // cover it but may know more residues.
        let alphabet = self.model.alphabet().to_vec();
        for &ch in &alphabet {
            self.masses.distribution(ch)?;
        }
        for set in [&self.rule.gamma, &self.rule.pi] {
            for &ch in set {
                if !alphabet.contains(&ch) {
                    return Err(Error::UnknownCharacter {
                        ch,
                        alphabet: alphabet.iter().collect(),
                    });
                }
            }
        }
        let occurrence = matches!(self.kind, CleavageKind::Occurrence { .. });

        // Discover reachable (role, context) pairs.
        let mut index: HashMap<(u8, char, usize), usize> = HashMap::new();
        let mut states: Vec<(StateRole, usize)> = Vec::new();
        let mut rows: Vec<Vec<(usize, f64)>> = Vec::new();
        let mut queue: VecDeque<usize> = VecDeque::new();

        let key_of = |role: StateRole, c: usize| -> (u8, char, usize) {
            match role {
                StateRole::Start => (0, '\0', c),
                StateRole::Residue(ch) => (1, ch, c),
                StateRole::FragmentEnd(ch) => (2, ch, c),
                StateRole::Drain => (3, '\0', c),
            }
        };
        let intern = |role: StateRole,
                      c: usize,
                      index: &mut HashMap<(u8, char, usize), usize>,
                      states: &mut Vec<(StateRole, usize)>,
                      queue: &mut VecDeque<usize>|
         -> usize {
            *index.entry(key_of(role, c)).or_insert_with(|| {
                states.push((role, c));
                queue.push_back(states.len() - 1);
                states.len() - 1
            })
        };

        let start_ctx = self.model.start_context();
        let start_id = intern(
            StateRole::Start,
            start_ctx,
            &mut index,
            &mut states,
            &mut queue,
        );
        debug_assert_eq!(start_id, 0);

        while let Some(id) = queue.pop_front() {
            let (role, c) = states[id];
            let mut row: BTreeMap<(StateRole, usize), f64> = BTreeMap::new();
            let add = |role: StateRole,
                       c2: usize,
                       p: f64,
                       row: &mut BTreeMap<(StateRole, usize), f64>| {
                if p > 0.0 {
                    *row.entry((role, c2)).or_insert(0.0) += p;
                }
            };
            match role {
                StateRole::Start => {
                    if let Some(custom) = start_row {
                        for (&(ch, c2), &p) in custom {
                            add(StateRole::Residue(ch), c2, p, &mut row);
                        }
                    } else {
                        for &(k, c2, p) in self.model.kernel_row(c) {
                            add(StateRole::Residue(alphabet[k]), c2, p, &mut row);
                        }
                    }
                }
                StateRole::Residue(res) | StateRole::FragmentEnd(res) => {
                    let ends_here = matches!(role, StateRole::FragmentEnd(_));
                    if ends_here && !occurrence {
                        add(StateRole::Drain, c, 1.0, &mut row);
                    } else {
                        // FragmentEnd states in occurrence mode behave like
                        // their residue.
                        let cleaver = self.rule.gamma.contains(&res);
                        for &(k, c2, p) in self.model.kernel_row(c) {
                            let ch = alphabet[k];
                            if cleaver && !self.rule.pi.contains(&ch) {
                                add(
                                    StateRole::FragmentEnd(ch),
                                    c2,
                                    p * (1.0 - self.p_miss),
                                    &mut row,
                                );
                                add(StateRole::Residue(ch), c2, p * self.p_miss, &mut row);
                            } else {
                                add(StateRole::Residue(ch), c2, p, &mut row);
                            }
                        }
                    }
                }
                StateRole::Drain => {
                    add(StateRole::Drain, c, 1.0, &mut row);
                }
            }
            let mut out = Vec::with_capacity(row.len());
            for ((role2, c2), p) in row {
                let target = intern(role2, c2, &mut index, &mut states, &mut queue);
                out.push((target, p));
            }
            rows.push(out);
        }

        let labels: Vec<String> = states
            .iter()
            .map(|&(role, c)| {
                let ctx = &self.model.contexts()[c];
                match role {
                    StateRole::Start => format!("start/{ctx}"),
                    StateRole::Residue(ch) => format!("{ch}/{ctx}"),
                    StateRole::FragmentEnd(ch) => format!("end({ch})/{ctx}"),
                    StateRole::Drain => format!("drain/{ctx}"),
                }
            })
            .collect();
        let emissions: Vec<Vec<(Value, f64)>> = states
            .iter()
            .map(|&(role, _)| match role {
                StateRole::Start | StateRole::Drain => vec![(Value::Int(0), 1.0)],
                StateRole::Residue(ch) => self
                    .masses
                    .distribution(ch)
                    .expect("alphabet checked")
                    .iter()
                    .map(|&(m, p)| (Value::Int(m), p))
                    .collect(),
                StateRole::FragmentEnd(ch) => {
                    if occurrence {
                        self.masses
                            .distribution(ch)
                            .expect("alphabet checked")
                            .iter()
                            .map(|&(m, p)| (Value::Int(m), p))
                            .collect()
                    } else {
                        vec![(Value::Int(0), 1.0)]
                    }
                }
            })
            .collect();
        let ops: Vec<Operation> = match self.kind {
            CleavageKind::Fragment => vec![Operation::add(); states.len()],
            CleavageKind::Occurrence { lo, hi } => {
                let absorbing_add = Operation::new("mass-add-absorbing", |v, e| match (v, e) {
                    (Value::Int(-1), _) => MASS_SEEN,
                    (Value::Int(a), Value::Int(b)) => Value::Int(a + b),
                    _ => v,
                });
                let window_check =
                    Operation::new(format!("mass-window({lo},{hi})"), move |v, e| {
                        match (v, e) {
                            (Value::Int(-1), _) => MASS_SEEN,
                            (Value::Int(mass), Value::Int(next)) => {
                                if mass >= lo && mass <= hi {
                                    MASS_SEEN
                                } else {
                                    Value::Int(next)
                                }
                            }
                            _ => v,
                        }
                    });
                states
                    .iter()
                    .map(|&(role, _)| match role {
                        StateRole::FragmentEnd(_) => window_check.clone(),
                        _ => absorbing_add.clone(),
                    })
                    .collect()
            }
        };
        let domain = match self.kind {
            CleavageKind::Fragment => ValueDomain::IntRange {
                lo: 0,
                hi: i64::MAX,
            },
            CleavageKind::Occurrence { .. } => ValueDomain::IntRange {
                lo: -1,
                hi: i64::MAX,
            },
        };
        let paa = Paa::new(labels, 0, rows, domain, Value::Int(0), emissions, ops)?;
        Ok(CleavagePaa {
            paa,
            roles: states.iter().map(|&(r, _)| r).collect(),
            contexts: states.iter().map(|&(_, c)| c).collect(),
            kind: self.kind.clone(),
            model: self.model.clone(),
            rule: self.rule.clone(),
            masses: self.masses.clone(),
            which: WhichFragment::First,
            p_miss: self.p_miss,
        })
    }

    /// Start row for the next fragment: the distribution of (first character,
    /// context) at the end of the current fragment, iterated until the
    /// current fragment has ended with high probability.
    fn next_start_row(&self, current: &CleavagePaa) -> Result<BTreeMap<(char, usize), f64>> {
        let paa = &current.paa;
        let n = paa.n_states();
        let mut live = vec![0.0; n];
        live[paa.start_state()] = 1.0;
        let mut arrivals: BTreeMap<(char, usize), f64> = BTreeMap::new();
        const MAX_ITERS: usize = 100_000;
        const EPS: f64 = 1e-13;
        for _ in 0..MAX_ITERS {
            let mut next = vec![0.0; n];
            for (q, &p) in live.iter().enumerate() {
                if p == 0.0 {
                    continue;
                }
                for &(q2, tp) in paa.transition_row(q) {
                    match current.roles[q2] {
                        StateRole::FragmentEnd(ch) => {
                            *arrivals.entry((ch, current.contexts[q2])).or_insert(0.0) += p * tp;
                        }
                        _ => next[q2] += p * tp,
                    }
                }
            }
            live = next;
            let remaining: f64 = live.iter().sum();
            if remaining < EPS {
                let total: f64 = arrivals.values().sum();
                if total <= 0.0 {
                    return Err(Error::invalid(
                        "fragments never end under this model and rule",
                    ));
                }
                for v in arrivals.values_mut() {
                    *v /= total;
                }
                return Ok(arrivals);
            }
        }
        Err(Error::NonConvergence {
            what: "distribution of text-model states at the fragment end".into(),
            iterations: MAX_ITERS,
            residual: live.iter().sum(),
        })
    }
}

fn build_with(
    model: &TextModel,
    rule: &CleavageRule,
    masses: &MassTable,
    which: WhichFragment,
    kind: CleavageKind,
    p_miss: f64,
) -> Result<CleavagePaa> {
    if !(0.0..1.0).contains(&p_miss) {
        return Err(Error::invalid(
            "missed-cleavage probability must lie in [0, 1)",
        ));
    }
    let builder = Builder {
        model,
        rule,
        masses,
        kind,
        p_miss,
    };
    let mut paa = builder.build(None)?;
    if let WhichFragment::Following(k) = which {
        if k < 2 {
            return Err(Error::invalid("following fragments start at k = 2"));
        }
        for _ in 2..=k {
            let row = builder.next_start_row(&paa)?;
            paa = builder.build(Some(&row))?;
        }
    }
    Ok(CleavagePaa { which, ..paa })
}

/// Fragment-tracking PAA for the chosen fragment.
pub fn cleavage_paa(
    model: &TextModel,
    rule: &CleavageRule,
    masses: &MassTable,
    which: WhichFragment,
) -> Result<CleavagePaa> {
    build_with(model, rule, masses, which, CleavageKind::Fragment, 0.0)
}

/// PAA for the mass occurrence probability over a scaled-integer window.
pub fn mass_occurrence_paa(
    model: &TextModel,
    rule: &CleavageRule,
    masses: &MassTable,
    window: MassWindow,
) -> Result<CleavagePaa> {
    build_with(
        model,
        rule,
        masses,
        WhichFragment::First,
        CleavageKind::Occurrence {
            lo: window.lo,
            hi: window.hi,
        },
        0.0,
    )
}

/// Rebuild a cleavage PAA with missed cleavages: transitions from cleavage
/// characters into fragment ends keep probability `1 - p_miss`, the rest
/// continues the fragment. Rows stay stochastic.
pub fn apply_missed_cleavage(cp: &CleavagePaa, p_miss: f64) -> Result<CleavagePaa> {
    build_with(
        &cp.model,
        &cp.rule,
        &cp.masses,
        cp.which,
        cp.kind.clone(),
        p_miss,
    )
}

// ---------------------------------------------------------------------------
// Distributions
// ---------------------------------------------------------------------------

/// Joint length-mass distribution of a fragment.
#[derive(Debug, Clone)]
pub struct FragmentDistribution {
    /// Support over `(length, mass)` pairs; the tail holds fragments longer
    /// than the queried bound.
    pub joint: Distribution,
    pub which: WhichFragment,
}

impl FragmentDistribution {
    /// Marginal length distribution.
    pub fn length_marginal(&self) -> Result<Distribution> {
        self.joint.marginal_first()
    }

    /// Marginal mass distribution.
    pub fn mass_marginal(&self) -> Result<Distribution> {
        self.joint.marginal_second()
    }
}

/// Run a fragment PAA and harvest `ν(ℓ, m)` for lengths up to `nmax`.
pub fn fragment_stats(cp: &CleavagePaa, nmax: usize) -> Result<FragmentDistribution> {
    if nmax < 1 {
        return Err(Error::invalid("nmax must be at least 1"));
    }
    if cp.kind != CleavageKind::Fragment {
        return Err(Error::invalid(
            "fragment statistics need a fragment-tracking PAA",
        ));
    }
    let mut table = cp.paa.initial_table();
    let mut joint: BTreeMap<Value, f64> = BTreeMap::new();
    for t in 1..=nmax + 1 {
        table = cp.paa.step_table(&table)?;
        // A fragment of length t-1 has just ended; harvest and drop.
        table.retain(|&(q, v), p| match cp.roles[q] {
            StateRole::FragmentEnd(_) => {
                if let Value::Int(mass) = v {
                    *joint.entry(Value::Pair(t as i64 - 1, mass)).or_insert(0.0) += *p;
                }
                false
            }
            StateRole::Drain => false,
            _ => true,
        });
    }
    let tail: f64 = table.values().sum();
    Ok(FragmentDistribution {
        joint: Distribution::new(joint, tail.clamp(0.0, 1.0))?,
        which: cp.which,
    })
}

/// Joint length-mass distribution of the chosen fragment.
pub fn fragment_length_mass(
    model: &TextModel,
    rule: &CleavageRule,
    masses: &MassTable,
    which: WhichFragment,
    nmax: usize,
) -> Result<FragmentDistribution> {
    let cp = cleavage_paa(model, rule, masses, which)?;
    fragment_stats(&cp, nmax)
}

/// Fragment length distribution, via the waiting time for the fragment-end
/// states minus one.
pub fn fragment_length_dist(
    model: &TextModel,
    rule: &CleavageRule,
    which: WhichFragment,
    nmax: usize,
) -> Result<Distribution> {
    let masses = MassTable::zero(model.alphabet());
    let cp = cleavage_paa(model, rule, &masses, which)?;
    let chain = cp.paa.chain();
    let targets: BTreeSet<usize> = (0..cp.paa.n_states())
        .filter(|&q| matches!(cp.roles[q], StateRole::FragmentEnd(_)))
        .collect();
    let mut alpha = vec![0.0; chain.n_states()];
    alpha[cp.paa.start_state()] = 1.0;
    let wait = chain.waiting_time_states(&alpha, &targets, nmax + 1)?;
    let shifted: Vec<(Value, f64)> = wait
        .iter()
        .map(|(v, p)| match v {
            Value::Int(t) => (Value::Int(t - 1), *p),
            other => (*other, *p),
        })
        .collect();
    Distribution::new(shifted, wait.tail())
}

/// A closed scaled-integer mass window.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MassWindow {
    pub lo: i64,
    pub hi: i64,
}

impl MassWindow {
    /// Window `[center - delta, center + delta]` in Dalton, scaled by λ.
    pub fn da(center: f64, delta: f64, lambda: u32) -> Result<MassWindow> {
        if delta < 0.0 {
            return Err(Error::invalid("delta must be nonnegative"));
        }
        Ok(MassWindow {
            lo: scale_mass(center - delta, lambda),
            hi: scale_mass(center + delta, lambda),
        })
    }
}

/// Probability that cleaving a random protein of length `n` yields at least
/// one fragment with mass inside the window (the unfinished last fragment
/// counts when its mass qualifies).
pub fn mass_occurrence_probability(
    model: &TextModel,
    rule: &CleavageRule,
    masses: &MassTable,
    n: usize,
    window: MassWindow,
) -> Result<f64> {
    if n < 1 {
        return Err(Error::invalid("protein length must be at least 1"));
    }
    let cp = mass_occurrence_paa(model, rule, masses, window)?;
    let dist = cp.paa.value_distribution(n, crate::paa::Method::Basic)?;
    let mut prob = dist.p(&MASS_SEEN);
    for (v, p) in dist.iter() {
        if let Value::Int(mass) = v {
            if *mass >= window.lo && *mass <= window.hi {
                prob += p;
            }
        }
    }
    Ok(prob)
}
