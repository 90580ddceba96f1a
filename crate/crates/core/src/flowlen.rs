//! Read-length distributions for flow-based sequencing.
//!
//! A dispensation order flows nucleotides cyclically over the templates; a
//! homopolymer run is sequenced by a single flow. The flow DAA counts flows
//! consumed per sequenced nucleotide (truncating at one past the budget);
//! the read length is one less than the waiting time for the value to
//! overflow the budget.

use std::collections::BTreeSet;

use crate::daa::{paa_from_daa, Daa};
use crate::dist::{Distribution, Value, ValueDomain};
use crate::error::{Error, Result};
use crate::paa::Operation;
use crate::textmodel::TextModel;

/// DNA nucleotides in fixed order.
pub const NUCLEOTIDES: [char; 4] = ['A', 'C', 'G', 'T'];

/// A dispensation order plus the flow budget.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dispensation {
    order: Vec<char>,
    flows: u32,
}

impl Dispensation {
    /// Validate an order: every nucleotide occurs, no nucleotide is flowed
    /// twice in a row (cyclically), and the budget is at least one flow.
    pub fn new(order: &str, flows: u32) -> Result<Dispensation> {
        let order: Vec<char> = order.chars().collect();
        if flows == 0 {
            return Err(Error::invalid("flow budget must be at least 1"));
        }
        if order.len() < NUCLEOTIDES.len() {
            return Err(Error::invalid(
                "dispensation order must cover all four nucleotides",
            ));
        }
        for &ch in &order {
            if !NUCLEOTIDES.contains(&ch) {
                return Err(Error::UnknownCharacter {
                    ch,
                    alphabet: NUCLEOTIDES.iter().collect(),
                });
            }
        }
        for &nt in &NUCLEOTIDES {
            if !order.contains(&nt) {
                return Err(Error::invalid(format!(
                    "nucleotide {nt} missing from the order"
                )));
            }
        }
        for i in 0..order.len() {
            if order[i] == order[(i + 1) % order.len()] {
                return Err(Error::invalid(
                    "no nucleotide may be flowed twice consecutively (cyclically)",
                ));
            }
        }
        Ok(Dispensation { order, flows })
    }

    /// The order characters.
    pub fn order(&self) -> &[char] {
        &self.order
    }

    /// The flow budget.
    pub fn flows(&self) -> u32 {
        self.flows
    }
}

/// The flow-counting DAA of a dispensation order.
///
/// State `(i, j)` records the flow positions of the last two sequenced
/// nucleotides; its emission is the cyclic forward distance between them
/// (zero inside a homopolymer run, where both sit on the same flow).
/// Initial states cover the first nucleotide, emitting `j + 1` flows.
/// Values are flow counts truncated at one past the budget.
///
/// For orders in which every nucleotide occurs once, the previous flow
/// position is equivalent to the previous nucleotide; orders that repeat a
/// nucleotide need the position to keep the flow count exact.
pub fn flow_daa(d: &Dispensation) -> Daa {
    let len = d.order.len();
    let cap = d.flows as i64 + 1;
    let forward = |from: usize, target: char| -> usize {
        (0..len)
            .find(|i| d.order[(from + i) % len] == target)
            .expect("every nucleotide occurs in the order")
    };
    // States: start, (epsilon, j), then (i, j) pairs row-major.
    let mut labels = vec!["start".to_string()];
    let mut emissions = vec![Value::Int(0)];
    for j in 0..len {
        labels.push(format!("first:{}@{j}", d.order[j]));
        emissions.push(Value::Int(j as i64 + 1));
    }
    for i in 0..len {
        for j in 0..len {
            labels.push(format!("{}@{i}->{}@{j}", d.order[i], d.order[j]));
            emissions.push(Value::Int(((j + len - i) % len) as i64));
        }
    }
    let first_id = |j: usize| 1 + j;
    let pair_id = |i: usize, j: usize| 1 + len + i * len + j;
    let n_states = 1 + len + len * len;
    let mut delta = Vec::with_capacity(n_states);
    // Start: the first nucleotide lands at its first flow.
    delta.push(
        NUCLEOTIDES
            .iter()
            .map(|&ch| first_id(forward(0, ch)))
            .collect::<Vec<_>>(),
    );
    // From (epsilon, j) and from (i, j) alike, the next nucleotide is found
    // cyclically forward from j (staying at j for a homopolymer).
    for j in 0..len {
        delta.push(
            NUCLEOTIDES
                .iter()
                .map(|&ch| pair_id(j, (j + forward(j, ch)) % len))
                .collect(),
        );
    }
    for _i in 0..len {
        for j in 0..len {
            delta.push(
                NUCLEOTIDES
                    .iter()
                    .map(|&ch| pair_id(j, (j + forward(j, ch)) % len))
                    .collect(),
            );
        }
    }
    Daa::new(
        labels,
        0,
        NUCLEOTIDES.to_vec(),
        delta,
        ValueDomain::IntRange { lo: 0, hi: cap },
        Value::Int(0),
        emissions,
        vec![Operation::trunc_add(cap); n_states],
    )
    .expect("flow DAA construction is internally consistent")
}

/// Distribution of the read length after the flow budget, up to `nmax`
/// nucleotides; the tail holds reads longer than `nmax`.
pub fn read_length_distribution(
    model: &TextModel,
    d: &Dispensation,
    nmax: usize,
) -> Result<Distribution> {
    if nmax < 1 {
        return Err(Error::invalid("nmax must be at least 1"));
    }
    let daa = flow_daa(d);
    let composed = paa_from_daa(&daa, model)?;
    let overflow: BTreeSet<Value> = [Value::Int(d.flows as i64 + 1)].into();
    let wait = composed.paa.waiting_time_values(&overflow, nmax + 1)?;
    // Read length = waiting time for the overflow value, minus one.
    let shifted: Vec<(Value, f64)> = wait
        .iter()
        .map(|(v, p)| match v {
            Value::Int(t) => (Value::Int(t - 1), *p),
            other => (*other, *p),
        })
        .collect();
    Distribution::new(shifted, wait.tail())
}

/// Expected read length; requires the distribution tail at `nmax` to be
/// negligible so the expectation is exact.
pub fn expected_read_length(model: &TextModel, d: &Dispensation, nmax: usize) -> Result<f64> {
    let dist = read_length_distribution(model, d, nmax)?;
    if dist.tail() > 1e-9 {
        return Err(Error::invalid(format!(
            "read-length tail {:.3e} at nmax={nmax} is above 1e-9; increase nmax",
            dist.tail()
        )));
    }
    dist.expectation()
}

/// All valid dispensation orders with lengths in `min_len..=max_len`
/// (every nucleotide present, no cyclic immediate repeat).
pub fn all_dispensation_orders(min_len: usize, max_len: usize) -> Result<Vec<String>> {
    if min_len < 4 || max_len < min_len {
        return Err(Error::invalid("order lengths must satisfy 4 <= min <= max"));
    }
    if max_len > 12 {
        return Err(Error::invalid(
            "order sweeps above length 12 are not supported",
        ));
    }
    let mut out = Vec::new();
    let mut buf: Vec<char> = Vec::new();
    fn recurse(buf: &mut Vec<char>, len: usize, out: &mut Vec<String>) {
        if buf.len() == len {
            let ok = NUCLEOTIDES.iter().all(|nt| buf.contains(nt)) && buf[0] != buf[len - 1];
            if ok {
                out.push(buf.iter().collect());
            }
            return;
        }
        for nt in NUCLEOTIDES {
            if buf.last() == Some(&nt) {
                continue;
            }
            buf.push(nt);
            recurse(buf, len, out);
            buf.pop();
        }
    }
    for len in min_len..=max_len {
        recurse(&mut buf, len, &mut out);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::Value;
    use crate::oracle::simulate_flow_read;
    use crate::textmodel::{dirac_model, uniform_model};

    #[test]
    fn dispensation_validation() {
        assert!(Dispensation::new("TACG", 12).is_ok());
        assert!(Dispensation::new("TCGACG", 8).is_ok());
        assert!(Dispensation::new("TAC", 8).is_err()); // missing G
        assert!(Dispensation::new("TACGG", 8).is_err()); // repeat
        assert!(Dispensation::new("GACG", 8).is_err()); // cyclic repeat
        assert!(Dispensation::new("TACG", 0).is_err());
    }

    #[test]
    fn flow_counts_match_the_paper_table() {
        // GTCGTA under TACG needs 10 flows; the full GTCGTATCCC under GTCA
        // needs 11 (the three Cs share one flow).
        let tacg = flow_daa(&Dispensation::new("TACG", 12).unwrap());
        assert_eq!(tacg.value("GTCGTA").unwrap(), Value::Int(10));
        let gtca = flow_daa(&Dispensation::new("GTCA", 12).unwrap());
        assert_eq!(gtca.value("GTCGTATCCC").unwrap(), Value::Int(11));
    }

    #[test]
    fn homopolymer_costs_nothing() {
        let daa = flow_daa(&Dispensation::new("TACG", 12).unwrap());
        let single = daa.value("GTC").unwrap().as_int().unwrap();
        let run = daa.value("GTCCCC").unwrap().as_int().unwrap();
        assert_eq!(single, run);
    }

    #[test]
    fn emission_example_from_the_text() {
        // d = TCGACG, previous G at flow 5, current d[1] = C: two flows,
        // skipping T. The other G copy (flow 2) reaches the C at flow 4,
        // also two flows.
        let d = Dispensation::new("TCGACG", 8).unwrap();
        let daa = flow_daa(&d);
        for label in ["G@5->C@1", "G@2->C@4"] {
            let q = daa
                .labels()
                .iter()
                .position(|l| l == label)
                .expect("state exists");
            assert_eq!(daa.emission(q), Value::Int(2), "{label}");
        }
    }

    #[test]
    fn repeated_order_counts_wrapped_flows() {
        // Under TCGACG, a C sequenced at flow 4 followed by an A costs five
        // flows (G T C G A); the flow-position states keep this exact even
        // though another C sits at flow 1.
        let d = Dispensation::new("TCGACG", 12).unwrap();
        let daa = flow_daa(&d);
        // AAAAC: A at flow 3 (4 flows), C at flow 4 (1 flow); then A again.
        assert_eq!(daa.value("AAAAC").unwrap(), Value::Int(5));
        assert_eq!(daa.value("AAAACA").unwrap(), Value::Int(10));
    }

    #[test]
    fn deterministic_read_lengths() {
        let model = dirac_model("GTCGTATCCC").unwrap();
        let tacg = Dispensation::new("TACG", 12).unwrap();
        let d1 = read_length_distribution(&model, &tacg, 40).unwrap();
        assert!((d1.p_int(6) - 1.0).abs() < 1e-12);
        let gtca = Dispensation::new("GTCA", 12).unwrap();
        let d2 = read_length_distribution(&model, &gtca, 40).unwrap();
        assert!((d2.p_int(10) - 1.0).abs() < 1e-12);
        assert!((expected_read_length(&model, &tacg, 40).unwrap() - 6.0).abs() < 1e-12);
        assert!((expected_read_length(&model, &gtca, 40).unwrap() - 10.0).abs() < 1e-12);
    }

    #[test]
    fn read_length_matches_flow_simulation_exhaustively() {
        // All texts of length 5, flows 8, a couple of orders: the PAA under a
        // Dirac model must equal the direct simulation.
        let texts = crate::textmodel::all_strings(&NUCLEOTIDES, 5);
        for order in ["TACG", "GTCA", "TCGACG"] {
            let d = Dispensation::new(order, 8).unwrap();
            for text in &texts {
                let model = dirac_model(text).unwrap();
                let dist = read_length_distribution(&model, &d, 30).unwrap();
                // The Dirac model pads the text cyclically, so simulate on a
                // long repetition.
                let padded = text.repeat(8);
                let expect = simulate_flow_read(d.order(), 8, &padded);
                if expect >= 30 {
                    assert!(dist.tail() > 0.99, "{order} {text}");
                } else {
                    assert!(
                        (dist.p_int(expect as i64) - 1.0).abs() < 1e-12,
                        "{order} {text}: expected length {expect}"
                    );
                }
            }
        }
    }

    #[test]
    fn expectation_monotone_in_flow_budget() {
        let model = uniform_model(&NUCLEOTIDES).unwrap();
        let mut last = 0.0;
        for flows in [4, 8, 12, 16] {
            let d = Dispensation::new("TACG", flows).unwrap();
            let e = expected_read_length(&model, &d, 80).unwrap();
            assert!(e >= last - 1e-12, "flows={flows}");
            last = e;
        }
    }

    #[test]
    fn expectation_matches_monte_carlo() {
        use rand::SeedableRng;
        let model = uniform_model(&NUCLEOTIDES).unwrap();
        let d = Dispensation::new("TACG", 12).unwrap();
        let exact = expected_read_length(&model, &d, 60).unwrap();
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(99);
        let samples = 20_000;
        let mut sum = 0.0;
        let mut sumsq = 0.0;
        for _ in 0..samples {
            let text = crate::oracle::sample_text_with(&model, 60, &mut rng);
            let len = simulate_flow_read(d.order(), 12, &text) as f64;
            sum += len;
            sumsq += len * len;
        }
        let mean = sum / samples as f64;
        let sd = ((sumsq / samples as f64 - mean * mean) / samples as f64).sqrt();
        assert!(
            (exact - mean).abs() < 3.0 * sd,
            "{exact} vs {mean} (sd {sd})"
        );
    }

    #[test]
    fn support_bounded_by_flows_without_homopolymers() {
        // Homopolymer runs are the only way to sequence more nucleotides
        // than flows; a text without repeats stays within the budget.
        let model = dirac_model("ACGT").unwrap();
        let d = Dispensation::new("TACG", 8).unwrap();
        let dist = read_length_distribution(&model, &d, 40).unwrap();
        for (v, p) in dist.iter() {
            if *p > 0.0 {
                assert!(v.as_int().unwrap() <= 8);
            }
        }
        // Under a uniform model, beating the budget needs homopolymers and
        // is rare but possible.
        let model = uniform_model(&NUCLEOTIDES).unwrap();
        let dist = read_length_distribution(&model, &d, 60).unwrap();
        assert!(dist.p_at_least(9) > 0.0);
        assert!(dist.p_at_least(9) < 0.05);
    }

    #[test]
    fn order_enumeration() {
        let orders = all_dispensation_orders(4, 4).unwrap();
        assert_eq!(orders.len(), 24); // all permutations of ACGT are valid
        assert!(orders.contains(&"TACG".to_string()));
        let five = all_dispensation_orders(4, 5).unwrap();
        assert!(five.len() > 24);
        for o in &five {
            assert!(Dispensation::new(o, 4).is_ok());
        }
        assert!(all_dispensation_orders(3, 4).is_err());
    }
}
