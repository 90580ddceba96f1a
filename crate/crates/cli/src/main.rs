//! `paa`: exact distributions for pattern statistics, window-matcher costs,
//! seed sensitivity, fragment masses and flow-sequencing read lengths.

mod output;
mod spec;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use output::{write_distribution, write_rows, write_scalar, OutputFormat};
use paa_core::daa::CountScheme;
use paa_core::dist::{Distribution, Value};
use paa_core::error::Error as CoreError;
use paa_core::flowlen::{
    all_dispensation_orders, expected_read_length, read_length_distribution, Dispensation,
};
use paa_core::massstat::{
    apply_missed_cleavage, apply_ptm, cleavage_paa, fragment_stats, mass_occurrence_probability,
    MassWindow, WhichFragment,
};
use paa_core::oracle;
use paa_core::patstats::{
    clump_size_distribution, occurrence_distribution, pattern_waiting_time, WaitingMode,
};
use paa_core::seedstat::{
    homology_model, seed_hit_distribution, seed_sensitivity, MultipleSeed, Seed,
};
use paa_core::Method;

#[derive(Parser)]
#[command(
    name = "paa",
    version,
    about = "Exact distributions of probabilistic arithmetic automata over random text models"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Output format for distributions and reports.
    #[arg(long, global = true, value_enum, default_value = "tsv")]
    format: OutputFormat,
    /// Write output to a file instead of standard output.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads for parameter sweeps (defaults to the core count).
    #[arg(long, global = true)]
    jobs: Option<usize>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum SchemeArg {
    Overlapping,
    Nonoverlapping,
    MatchPosition,
}

impl From<SchemeArg> for CountScheme {
    fn from(s: SchemeArg) -> Self {
        match s {
            SchemeArg::Overlapping => CountScheme::Overlapping,
            SchemeArg::Nonoverlapping => CountScheme::NonOverlapping,
            SchemeArg::MatchPosition => CountScheme::MatchPosition,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum MethodArg {
    Basic,
    Doubling,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Basic => Method::Basic,
            MethodArg::Doubling => Method::Doubling,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum MatcherArg {
    Horspool,
    Sunday,
}

#[derive(Subcommand)]
enum Command {
    /// Distribution of pattern occurrence counts in a random text.
    Occur {
        /// Pattern spec: inline JSON or a file path.
        #[arg(long)]
        patterns: String,
        /// Text model spec: inline JSON or a file path.
        #[arg(long)]
        model: String,
        /// Text length.
        #[arg(long)]
        n: usize,
        /// Truncation bound for the count (falls back to the pattern file's
        /// `m` field, then 50).
        #[arg(long)]
        m: Option<i64>,
        #[arg(long, value_enum)]
        scheme: Option<SchemeArg>,
        #[arg(long, value_enum, default_value = "basic")]
        method: MethodArg,
    },
    /// Waiting time for the first or a subsequent pattern occurrence.
    Wait {
        #[arg(long)]
        patterns: String,
        #[arg(long)]
        model: String,
        /// Largest waiting time reported; the rest goes into the tail.
        #[arg(long)]
        tmax: usize,
        #[arg(long, value_enum, default_value = "first")]
        mode: WaitArg,
    },
    /// Clump size distribution of a pattern.
    Clump {
        #[arg(long)]
        patterns: String,
        #[arg(long)]
        model: String,
        /// Truncation: the last bucket counts clumps of at least this size.
        #[arg(long = "max-size", default_value_t = 50)]
        max_size: i64,
        /// Stop once the unaccounted mass drops below this threshold.
        #[arg(long, default_value_t = 1e-9)]
        epsilon: f64,
    },
    /// Exact cost distribution of a window-based matcher.
    Algcost {
        #[arg(long, value_enum)]
        algorithm: MatcherArg,
        #[arg(long)]
        pattern: String,
        #[arg(long)]
        model: String,
        #[arg(long)]
        n: usize,
    },
    /// Seed hit distribution or sensitivity under a homology model.
    Seed {
        /// Seed over {1,*,?}; repeat for a multiple seed.
        #[arg(long = "seed", required = true)]
        seeds: Vec<String>,
        /// `ungapped:P`, `gapped:P0,P1,PG`, or JSON.
        #[arg(long)]
        homology: String,
        /// Alignment length.
        #[arg(long)]
        n: usize,
        /// Largest exact hit count reported.
        #[arg(long, default_value_t = 3)]
        k: i64,
        #[arg(long, value_enum, default_value = "overlapping")]
        scheme: SchemeArg,
        /// Print only the probability of at least one hit.
        #[arg(long)]
        sensitivity: bool,
    },
    /// Proteolytic fragment statistics.
    Mass {
        #[arg(long)]
        model: String,
        /// Cleavage rule JSON {"gamma":[...],"pi":[...]}; defaults to trypsin.
        #[arg(long)]
        rule: Option<String>,
        /// Mass table TSV (residue<TAB>Dalton); defaults to the shipped
        /// monoisotopic table.
        #[arg(long)]
        masses: Option<PathBuf>,
        /// Integer mass units per Dalton.
        #[arg(long, default_value_t = 10)]
        lambda: u32,
        /// `first` or `following:K` (K >= 2).
        #[arg(long, default_value = "first")]
        which: String,
        /// Longest fragment tracked for the joint distribution.
        #[arg(long, default_value_t = 50)]
        nmax: usize,
        /// Print the fragment length marginal instead of the joint table.
        #[arg(long)]
        lengths_only: bool,
        /// Compute the mass occurrence probability for a window instead.
        #[arg(long)]
        occurrence: bool,
        /// Protein length for --occurrence.
        #[arg(long)]
        n: Option<usize>,
        /// Window center in Dalton for --occurrence.
        #[arg(long)]
        mass: Option<f64>,
        /// Window half width in Dalton for --occurrence.
        #[arg(long, default_value_t = 0.0)]
        delta: f64,
        /// Missed cleavage probability.
        #[arg(long, default_value_t = 0.0)]
        p_miss: f64,
        /// Post-translational modification `RESIDUE:SHIFT_DA:PROB`; repeatable.
        #[arg(long = "ptm")]
        ptms: Vec<String>,
    },
    /// Read length distribution of flow sequencing.
    Flowlen {
        /// Dispensation order, e.g. TACG.
        #[arg(long)]
        order: String,
        /// Flow budget.
        #[arg(long)]
        flows: u32,
        /// Text model spec; mutually exclusive with --text.
        #[arg(long)]
        model: Option<String>,
        /// Deterministic template (cycled); prints the read length.
        #[arg(long)]
        text: Option<String>,
        #[arg(long, default_value_t = 600)]
        nmax: usize,
        /// Print only the expected read length.
        #[arg(long)]
        expected: bool,
        /// Sweep all valid orders of lengths MIN..=MAX, sorted by expectation.
        #[arg(long, value_name = "MIN,MAX")]
        sweep: Option<String>,
    },
    /// Brute-force oracles (enumeration, sampling, matcher runs, clumps).
    Oracle {
        #[command(subcommand)]
        what: OracleCommand,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum WaitArg {
    First,
    Subsequent,
}

#[derive(Subcommand)]
enum OracleCommand {
    /// Exact occurrence-count distribution by exhaustive enumeration.
    Enumerate {
        #[arg(long)]
        patterns: String,
        #[arg(long)]
        model: String,
        #[arg(long)]
        n: usize,
        #[arg(long, value_enum, default_value = "overlapping")]
        scheme: SchemeArg,
        #[arg(long)]
        m: Option<i64>,
    },
    /// Sample a text from a model (deterministic for a fixed seed).
    Sample {
        #[arg(long)]
        model: String,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        seed: u64,
    },
    /// Run a window matcher and report occurrences and cost.
    Matcher {
        #[arg(long, value_enum)]
        algorithm: MatcherArg,
        #[arg(long)]
        pattern: String,
        #[arg(long)]
        text: String,
    },
    /// Extract clump sizes from a text.
    Clumps {
        #[arg(long)]
        patterns: String,
        #[arg(long)]
        text: String,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut buffer: Vec<u8> = Vec::new();
    match run(&cli, &mut buffer) {
        Ok(()) => {
            let result = match &cli.out {
                Some(path) => std::fs::write(path, &buffer)
                    .with_context(|| format!("writing {}", path.display())),
                None => std::io::stdout()
                    .write_all(&buffer)
                    .map_err(anyhow::Error::from),
            };
            if let Err(err) = result {
                eprintln!("paa: error[io]: {err:#}");
                return ExitCode::from(3);
            }
            ExitCode::SUCCESS
        }
        Err(err) => {
            let resource = err.chain().any(|e| {
                matches!(
                    e.downcast_ref::<CoreError>(),
                    Some(CoreError::ResourceLimit { .. })
                )
            });
            if resource {
                eprintln!("paa: error[resource]: {err:#}");
                ExitCode::from(4)
            } else {
                eprintln!("paa: error[validation]: {err:#}");
                ExitCode::from(3)
            }
        }
    }
}

fn parse_which(arg: &str) -> Result<WhichFragment> {
    if arg == "first" {
        return Ok(WhichFragment::First);
    }
    if let Some(k) = arg.strip_prefix("following:") {
        return Ok(WhichFragment::Following(
            k.parse().with_context(|| "parsing fragment index")?,
        ));
    }
    bail!("--which must be first or following:K, got {arg:?}")
}

fn run(cli: &Cli, out: &mut Vec<u8>) -> Result<()> {
    match &cli.command {
        Command::Occur {
            patterns,
            model,
            n,
            m,
            scheme,
            method,
        } => {
            let (pattern, file) = spec::load_pattern(patterns)?;
            let model = spec::load_model(model)?;
            // CLI flags win over defaults carried in the pattern file.
            let scheme: CountScheme = match (scheme, &file.scheme) {
                (Some(s), _) => (*s).into(),
                (None, Some(s)) => parse_scheme(s)?,
                (None, None) => CountScheme::Overlapping,
            };
            let m = m.or(file.m).unwrap_or(50);
            let dist = occurrence_distribution(&pattern, &model, *n, m, scheme, (*method).into())?;
            write_distribution(
                out,
                cli.format,
                "occur",
                &[
                    ("patterns", patterns.clone()),
                    ("n", n.to_string()),
                    ("m", m.to_string()),
                    ("scheme", format!("{scheme:?}").to_lowercase()),
                    ("method", format!("{method:?}").to_lowercase()),
                ],
                &dist,
            )
        }
        Command::Wait {
            patterns,
            model,
            tmax,
            mode,
        } => {
            let (pattern, _) = spec::load_pattern(patterns)?;
            let model = spec::load_model(model)?;
            let mode_core = match mode {
                WaitArg::First => WaitingMode::First,
                WaitArg::Subsequent => WaitingMode::Subsequent,
            };
            let dist = pattern_waiting_time(&pattern, &model, *tmax, mode_core)?;
            write_distribution(
                out,
                cli.format,
                "wait",
                &[
                    ("patterns", patterns.clone()),
                    ("tmax", tmax.to_string()),
                    ("mode", format!("{mode:?}").to_lowercase()),
                ],
                &dist,
            )
        }
        Command::Clump {
            patterns,
            model,
            max_size,
            epsilon,
        } => {
            let (pattern, _) = spec::load_pattern(patterns)?;
            let model = spec::load_model(model)?;
            let result = clump_size_distribution(&pattern, &model, *max_size, *epsilon)?;
            write_distribution(
                out,
                cli.format,
                "clump",
                &[
                    ("patterns", patterns.clone()),
                    ("max_size", max_size.to_string()),
                    ("epsilon", epsilon.to_string()),
                    ("residual", result.residual.to_string()),
                ],
                &result.psi,
            )
        }
        Command::Algcost {
            algorithm,
            pattern,
            model,
            n,
        } => {
            let model = spec::load_model(model)?;
            let spec = match algorithm {
                MatcherArg::Horspool => paa_core::algocost::horspool_spec(pattern)?,
                MatcherArg::Sunday => paa_core::algocost::sunday_spec(pattern)?,
            };
            let dist = paa_core::algocost::cost_distribution(&spec, &model, *n)?;
            write_distribution(
                out,
                cli.format,
                "algcost",
                &[
                    ("algorithm", format!("{algorithm:?}").to_lowercase()),
                    ("pattern", pattern.clone()),
                    ("n", n.to_string()),
                ],
                &dist,
            )
        }
        Command::Seed {
            seeds,
            homology,
            n,
            k,
            scheme,
            sensitivity,
        } => {
            let parsed: Vec<Seed> = seeds
                .iter()
                .map(|s| Seed::parse(s).map_err(anyhow::Error::from))
                .collect::<Result<_>>()?;
            let multiple = MultipleSeed::new(parsed)?;
            let model = homology_model(spec::parse_homology(homology)?)?;
            let params = [
                ("seeds", seeds.join(",")),
                ("homology", homology.clone()),
                ("n", n.to_string()),
            ];
            if *sensitivity {
                let s = seed_sensitivity(&multiple, &model, *n)?;
                return write_scalar(out, cli.format, "seed", &params, "sensitivity", s);
            }
            // Truncate one past k so every reported bucket is an exact count;
            // the "at least k+1" remainder goes into the tail.
            let dist = seed_hit_distribution(&multiple, &model, *n, *k + 1, (*scheme).into())?;
            let mut exact: Vec<(Value, f64)> = Vec::new();
            let mut overflow = 0.0;
            for (v, p) in dist.iter() {
                if v.as_int()? <= *k {
                    exact.push((*v, *p));
                } else {
                    overflow += p;
                }
            }
            let trimmed = Distribution::new(exact, overflow)?;
            write_distribution(out, cli.format, "seed", &params, &trimmed)
        }
        Command::Mass {
            model,
            rule,
            masses,
            lambda,
            which,
            nmax,
            lengths_only,
            occurrence,
            n,
            mass,
            delta,
            p_miss,
            ptms,
        } => {
            let model = spec::load_model(model)?;
            let rule = match rule {
                Some(arg) => spec::load_rule(arg)?,
                None => paa_core::massstat::CleavageRule::trypsin(),
            };
            let mut table = spec::load_mass_table(masses.as_deref(), *lambda)?;
            for ptm in ptms {
                let parts: Vec<&str> = ptm.split(':').collect();
                if parts.len() != 3 {
                    bail!("--ptm needs RESIDUE:SHIFT_DA:PROB, got {ptm:?}");
                }
                let residue = parts[0]
                    .chars()
                    .next()
                    .filter(|_| parts[0].chars().count() == 1)
                    .ok_or_else(|| anyhow!("bad PTM residue {:?}", parts[0]))?;
                table = apply_ptm(&table, residue, parts[1].parse()?, parts[2].parse()?)?;
            }
            let which = parse_which(which)?;
            let params = [
                ("which", format!("{which:?}").to_lowercase()),
                ("lambda", lambda.to_string()),
                ("p_miss", p_miss.to_string()),
            ];
            if *occurrence {
                let n = n.ok_or_else(|| anyhow!("--occurrence needs --n"))?;
                let center = mass.ok_or_else(|| anyhow!("--occurrence needs --mass"))?;
                let window = MassWindow::da(center, *delta, *lambda)?;
                let prob = if *p_miss > 0.0 {
                    let cp =
                        paa_core::massstat::mass_occurrence_paa(&model, &rule, &table, window)?;
                    let cp = apply_missed_cleavage(&cp, *p_miss)?;
                    let dist = cp.paa.value_distribution(n, Method::Basic)?;
                    let mut prob = dist.p(&paa_core::massstat::MASS_SEEN);
                    for (v, p) in dist.iter() {
                        if let Value::Int(m) = v {
                            if *m >= window.lo && *m <= window.hi {
                                prob += p;
                            }
                        }
                    }
                    prob
                } else {
                    mass_occurrence_probability(&model, &rule, &table, n, window)?
                };
                return write_scalar(
                    out,
                    cli.format,
                    "mass",
                    &params,
                    "occurrence_probability",
                    prob,
                );
            }
            let mut cp = cleavage_paa(&model, &rule, &table, which)?;
            if *p_miss > 0.0 {
                cp = apply_missed_cleavage(&cp, *p_miss)?;
            }
            let stats = fragment_stats(&cp, *nmax)?;
            let dist = if *lengths_only {
                stats.length_marginal()?
            } else {
                stats.joint.clone()
            };
            write_distribution(out, cli.format, "mass", &params, &dist)
        }
        Command::Flowlen {
            order,
            flows,
            model,
            text,
            nmax,
            expected,
            sweep,
        } => {
            if let Some(range) = sweep {
                return flow_sweep(cli, out, range, *flows, model.as_deref(), *nmax);
            }
            let d = Dispensation::new(order, *flows)?;
            let model = match (model, text) {
                (Some(spec), None) => spec::load_model(spec)?,
                (None, Some(text)) => paa_core::textmodel::dirac_model(text)?,
                _ => bail!("flowlen needs exactly one of --model or --text"),
            };
            let params = [
                ("order", order.clone()),
                ("flows", flows.to_string()),
                ("nmax", nmax.to_string()),
            ];
            if text.is_some() {
                // Deterministic template: the distribution is a point mass.
                let dist = read_length_distribution(&model, &d, *nmax)?;
                let (len, p) = dist
                    .iter()
                    .max_by(|a, b| a.1.total_cmp(b.1))
                    .map(|(v, p)| (*v, *p))
                    .ok_or_else(|| anyhow!("read length exceeds nmax"))?;
                if (p - 1.0).abs() > 1e-9 {
                    bail!("read length is not deterministic (mass {p})");
                }
                writeln!(out, "{len}")?;
                return Ok(());
            }
            if *expected {
                let e = expected_read_length(&model, &d, *nmax)?;
                return write_scalar(out, cli.format, "flowlen", &params, "expected_length", e);
            }
            let dist = read_length_distribution(&model, &d, *nmax)?;
            write_distribution(out, cli.format, "flowlen", &params, &dist)
        }
        Command::Oracle { what } => run_oracle(cli, out, what),
    }
}

fn parse_scheme(s: &str) -> Result<CountScheme> {
    match s {
        "overlapping" => Ok(CountScheme::Overlapping),
        "nonoverlapping" => Ok(CountScheme::NonOverlapping),
        "match-position" | "match_position" => Ok(CountScheme::MatchPosition),
        other => bail!("unknown counting scheme {other:?}"),
    }
}

fn flow_sweep(
    cli: &Cli,
    out: &mut Vec<u8>,
    range: &str,
    flows: u32,
    model: Option<&str>,
    nmax: usize,
) -> Result<()> {
    let (lo, hi) = range
        .split_once(',')
        .ok_or_else(|| anyhow!("--sweep needs MIN,MAX"))?;
    let (lo, hi): (usize, usize) = (lo.trim().parse()?, hi.trim().parse()?);
    let model = spec::load_model(model.ok_or_else(|| anyhow!("--sweep needs --model"))?)?;
    let orders = all_dispensation_orders(lo, hi)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.jobs.unwrap_or(0))
        .build()?;
    let results: Vec<Result<(String, f64), CoreError>> = pool.install(|| {
        use rayon::prelude::*;
        orders
            .par_iter()
            .map(|order| {
                let d = Dispensation::new(order, flows)?;
                Ok((order.clone(), expected_read_length(&model, &d, nmax)?))
            })
            .collect()
    });
    let mut rows: Vec<(String, f64)> = results.into_iter().collect::<Result<_, _>>()?;
    rows.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    write_rows(
        out,
        cli.format,
        "flowlen-sweep",
        &[
            ("flows", flows.to_string()),
            ("lengths", format!("{lo}..={hi}")),
            ("nmax", nmax.to_string()),
        ],
        ("order", "expected_length"),
        &rows,
    )
}

fn run_oracle(_cli: &Cli, out: &mut Vec<u8>, what: &OracleCommand) -> Result<()> {
    match what {
        OracleCommand::Enumerate {
            patterns,
            model,
            n,
            scheme,
            m,
        } => {
            let (pattern, _) = spec::load_pattern(patterns)?;
            let model = spec::load_model(model)?;
            let scheme: CountScheme = (*scheme).into();
            let cap = m.unwrap_or(i64::MAX) as u64;
            let dist = oracle::enumerate_exact(
                |s| {
                    Ok(Value::Int(
                        oracle::naive_count(&pattern, s, scheme)?.min(cap) as i64,
                    ))
                },
                &model,
                *n,
            )?;
            let report = paa_core::oracle::OracleReport {
                distribution: dist,
                samples: None,
                seed: None,
                max_abs_deviation: None,
                z_scores: None,
            };
            writeln!(
                out,
                "{}",
                serde_json::to_string_pretty(&output::oracle_report_json(&report))?
            )?;
            Ok(())
        }
        OracleCommand::Sample { model, n, seed } => {
            let model = spec::load_model(model)?;
            writeln!(out, "{}", oracle::sample_text(&model, *n, *seed))?;
            Ok(())
        }
        OracleCommand::Matcher {
            algorithm,
            pattern,
            text,
        } => {
            let algo = match algorithm {
                MatcherArg::Horspool => oracle::MatcherAlgo::Horspool,
                MatcherArg::Sunday => oracle::MatcherAlgo::Sunday,
            };
            let (occurrences, cost) = oracle::run_matcher(algo, pattern, text)?;
            writeln!(
                out,
                "{}",
                serde_json::json!({"occurrences": occurrences, "cost": cost})
            )?;
            Ok(())
        }
        OracleCommand::Clumps { patterns, text } => {
            let (pattern, _) = spec::load_pattern(patterns)?;
            let clumps = oracle::extract_clumps(&pattern, text)?;
            writeln!(out, "{}", serde_json::json!({"clumps": clumps}))?;
            Ok(())
        }
    }
}
