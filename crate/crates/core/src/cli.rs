//! The `popstab` command line.
//!
//! Exit codes: 0 success, 1 characterization or verification failure,
//! 2 usage or parse error, 3 resource budget exceeded.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::engine::{
    initial_configuration, random_configuration, simulate, Protocol, SimulateOptions,
};
use crate::error::{Error, Result};
use crate::format::{parse_protocol, parse_spec, render_protocol, SpecFile};
use crate::funcspec::{
    brute_force_count, check_subset_closed, count_functions, image_bound_check, spec_root_set,
    Characterization, FunctionSpec,
};
use crate::multiset::{parse_multiset, Multiset};
use crate::rootset::{dickson_root_set, is_strong_downwards_antichain, max_multiplicity};
use crate::synthesizer::synthesize;
use crate::verifier::{lemmas, refute_protocol, verify_self_stabilizing, DEFAULT_NODE_BUDGET};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_RESOURCE: i32 = 3;

#[derive(Parser, Debug)]
#[command(
    name = "popstab",
    version,
    about = "Synthesize and verify self-stabilizing population protocols"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Decide whether the function is subset-closed.
    Check { spec: PathBuf },
    /// Print the minimal root set, M, and the antichain report.
    Rootset { spec: PathBuf },
    /// Count the functions sharing the domain's root structure.
    Count {
        spec: PathBuf,
        /// Also enumerate every mapping (guarded).
        #[arg(long)]
        brute_force: bool,
    },
    /// Build the self-stabilizing protocol and write it as a protocol file.
    Synthesize {
        spec: PathBuf,
        /// Output file; standard output if omitted.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Model-check self-stabilization on domain members.
    Verify {
        spec: PathBuf,
        /// Verify only this input.
        #[arg(long)]
        input: Option<String>,
        /// Node budget per configuration graph.
        #[arg(long)]
        budget: Option<u64>,
        /// Protocol file to verify instead of the synthesized protocol.
        #[arg(long)]
        protocol: Option<PathBuf>,
        /// Also run the correctness-lemma queries on the synthesized protocol.
        #[arg(long)]
        lemmas: bool,
    },
    /// Run the random scheduler and print the trace.
    Simulate {
        spec: PathBuf,
        #[arg(long)]
        input: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 100)]
        steps: u64,
        /// Start from uniformly random agent states instead of I(σ).
        #[arg(long)]
        random_init: bool,
        #[arg(long)]
        protocol: Option<PathBuf>,
    },
    /// Show that a protocol fails on one side of a subset-closure violation.
    Refute {
        spec: PathBuf,
        #[arg(long)]
        protocol: PathBuf,
        /// The pair as `A|B`, for example `a|a a`.
        #[arg(long)]
        pair: String,
        #[arg(long)]
        budget: Option<u64>,
    },
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::NotSubsetClosed { .. } | Error::Internal(_) => EXIT_FAILURE,
        Error::Resource(_) => EXIT_RESOURCE,
        _ => EXIT_USAGE,
    }
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::Input(format!("{}: {e}", path.display())))
}

fn located(path: &Path, e: Error) -> Error {
    match e {
        Error::Syntax { .. } => Error::Input(format!("{}: {e}", path.display())),
        other => other,
    }
}

fn load_spec(path: &Path) -> Result<SpecFile> {
    parse_spec(&read(path)?).map_err(|e| located(path, e))
}

fn load_protocol(path: &Path, spec: &FunctionSpec) -> Result<Arc<dyn Protocol>> {
    let p = parse_protocol(&read(path)?).map_err(|e| located(path, e))?;
    if p.alphabet() != spec.alphabet() || p.outputs() != spec.outputs() {
        return Err(Error::AlphabetMismatch(format!(
            "{} does not use the specification's alphabet and outputs",
            path.display()
        )));
    }
    Ok(Arc::new(p))
}

fn protocol_for(spec: &FunctionSpec, path: Option<&Path>) -> Result<Arc<dyn Protocol>> {
    match path {
        Some(p) => load_protocol(p, spec),
        None => Ok(Arc::new(synthesize(spec)?)),
    }
}

fn input_arg(text: &str, spec: &FunctionSpec) -> Result<Multiset> {
    parse_multiset(text, spec.alphabet()).map_err(|e| Error::Input(format!("`{text}`: {e}")))
}

/// Parses `argv` (including the program name) and runs one subcommand.
pub fn run<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if code == EXIT_OK {
                out.write_all(text.as_bytes())
            } else {
                err.write_all(text.as_bytes())
            };
            return code;
        }
    };
    match execute(cli.command, out) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            exit_code(&e)
        }
    }
}

fn execute(command: Command, out: &mut dyn Write) -> Result<i32> {
    match command {
        Command::Check { spec } => check(&load_spec(&spec)?.spec, out),
        Command::Rootset { spec } => rootset(&load_spec(&spec)?.spec, out),
        Command::Count { spec, brute_force } => count(&load_spec(&spec)?.spec, brute_force, out),
        Command::Synthesize { spec, output } => {
            let spec = load_spec(&spec)?.spec;
            let p = synthesize(&spec)?;
            let text = render_protocol(&p);
            match output {
                Some(path) => {
                    std::fs::write(&path, text)?;
                    writeln!(
                        out,
                        "states={} roots={} M={} table_bits={}",
                        p.num_states(),
                        p.roots().len(),
                        p.modulus(),
                        p.more_table().total_bits()
                    )?;
                    writeln!(out, "wrote {}", path.display())?;
                }
                None => out.write_all(text.as_bytes())?,
            }
            Ok(EXIT_OK)
        }
        Command::Verify {
            spec,
            input,
            budget,
            protocol,
            lemmas: with_lemmas,
        } => {
            let file = load_spec(&spec)?;
            let budget = budget.or(file.budget).unwrap_or(DEFAULT_NODE_BUDGET);
            verify(
                &file.spec,
                input.as_deref(),
                budget,
                protocol.as_deref(),
                with_lemmas,
                out,
            )
        }
        Command::Simulate {
            spec,
            input,
            seed,
            steps,
            random_init,
            protocol,
        } => {
            let spec = load_spec(&spec)?.spec;
            let p = protocol_for(&spec, protocol.as_deref())?;
            let a = input_arg(&input, &spec)?;
            let start = if random_init {
                random_configuration(p.as_ref(), &a, &mut ChaCha8Rng::seed_from_u64(seed))?
            } else {
                initial_configuration(p.as_ref(), &a)?
            };
            let trace = simulate(
                p.as_ref(),
                &start,
                SimulateOptions {
                    seed,
                    max_steps: steps,
                    detect_convergence: Some(100_000),
                },
            );
            out.write_all(trace.render(p.as_ref()).as_bytes())?;
            writeln!(out, "status={}", trace.status)?;
            Ok(EXIT_OK)
        }
        Command::Refute {
            spec,
            protocol,
            pair,
            budget,
        } => {
            let file = load_spec(&spec)?;
            let budget = budget.or(file.budget).unwrap_or(DEFAULT_NODE_BUDGET);
            let p = load_protocol(&protocol, &file.spec)?;
            let (a, b) = pair
                .split_once('|')
                .ok_or_else(|| Error::Input(format!("pair `{pair}` must have the form `A|B`")))?;
            let (a, b) = (input_arg(a, &file.spec)?, input_arg(b, &file.spec)?);
            let r = refute_protocol(p.as_ref(), &file.spec, &a, &b, budget)?;
            out.write_all(r.smaller.render(p.as_ref()).as_bytes())?;
            writeln!(out)?;
            out.write_all(r.larger.render(p.as_ref()).as_bytes())?;
            writeln!(out)?;
            match r.failing() {
                Some(v) => {
                    writeln!(
                        out,
                        "refuted: the protocol is not self-stabilizing on {{{}}}",
                        v.input
                    )?;
                    Ok(EXIT_OK)
                }
                None => {
                    writeln!(out, "not refuted: the protocol passed both inputs")?;
                    Ok(EXIT_FAILURE)
                }
            }
        }
    }
}

fn check(spec: &FunctionSpec, out: &mut dyn Write) -> Result<i32> {
    match check_subset_closed(spec) {
        Characterization::SubsetClosed => {
            let rs = spec_root_set(spec)?;
            writeln!(out, "subset-closed; |R|={}", rs.len())?;
            Ok(EXIT_OK)
        }
        failed => {
            let e = failed.into_result(spec).expect_err("failed check");
            let text = e.to_string();
            writeln!(out, "{}", text.trim_start_matches("function is "))?;
            Ok(EXIT_FAILURE)
        }
    }
}

fn rootset(spec: &FunctionSpec, out: &mut dyn Write) -> Result<i32> {
    let domain = spec.domain();
    let rs = crate::rootset::minimal_root_set(&domain)?;
    for (i, r) in rs.roots().iter().enumerate() {
        match spec.output_of(r) {
            Some(y) => writeln!(out, "R_{i} = {{{r}}} -> {}", spec.outputs().name(y))?,
            None => writeln!(out, "R_{i} = {{{r}}}")?,
        }
    }
    writeln!(out, "|R|={}", rs.len())?;
    writeln!(out, "M={}", max_multiplicity(&rs))?;
    let yes = |b: bool| if b { "yes" } else { "no" };
    writeln!(
        out,
        "strong downwards antichain: {}",
        yes(is_strong_downwards_antichain(&rs))
    )?;
    let dickson = dickson_root_set(&domain)?;
    writeln!(
        out,
        "recursive construction agrees: {}",
        yes(dickson.roots() == rs.roots())
    )?;
    Ok(EXIT_OK)
}

fn count(spec: &FunctionSpec, brute_force: bool, out: &mut dyn Write) -> Result<i32> {
    let domain = spec.domain();
    let c = count_functions(&domain, spec.outputs())?;
    writeln!(out, "roots={}", c.root_count)?;
    writeln!(out, "root_classes={}", c.root_classes)?;
    writeln!(out, "upper_bound={}", c.upper_bound)?;
    writeln!(out, "exact={}", c.exact_count)?;
    writeln!(out, "unique_roots={}", c.unique_roots)?;
    if brute_force {
        let b = brute_force_count(&domain, spec.outputs())?;
        writeln!(out, "brute_force={b}")?;
        if b as u128 != c.exact_count {
            return Err(Error::Internal(format!(
                "brute force found {b} functions, expected {}",
                c.exact_count
            )));
        }
    }
    if check_subset_closed(spec).is_subset_closed() {
        let ib = image_bound_check(spec)?;
        writeln!(
            out,
            "image={} <= roots={}: {}",
            ib.image_size,
            ib.root_count,
            ib.holds()
        )?;
    }
    Ok(EXIT_OK)
}

fn verify(
    spec: &FunctionSpec,
    input: Option<&str>,
    budget: u64,
    protocol: Option<&Path>,
    with_lemmas: bool,
    out: &mut dyn Write,
) -> Result<i32> {
    if with_lemmas && protocol.is_some() {
        return Err(Error::Input(
            "--lemmas applies to the synthesized protocol only".into(),
        ));
    }
    let inputs = match input {
        Some(t) => vec![input_arg(t, spec)?],
        None => spec.verification_inputs(),
    };
    let synthesized = if protocol.is_none() {
        Some(synthesize(spec)?)
    } else {
        None
    };
    let p: Arc<dyn Protocol> = match (&synthesized, protocol) {
        (Some(s), _) => Arc::new(s.clone()),
        (None, Some(path)) => load_protocol(path, spec)?,
        (None, None) => unreachable!(),
    };
    let mut failed = 0;
    for (i, a) in inputs.iter().enumerate() {
        if i > 0 {
            writeln!(out)?;
        }
        let v = verify_self_stabilizing(p.as_ref(), spec, a, budget)?;
        if !v.is_self_stabilizing() {
            failed += 1;
        }
        out.write_all(v.render(p.as_ref()).as_bytes())?;
        if let (true, Some(s)) = (with_lemmas, &synthesized) {
            for r in lemmas::check_all(s, spec, a, budget)? {
                writeln!(out, "lemma {}", r.render())?;
                if !r.holds {
                    failed += 1;
                }
            }
        }
    }
    writeln!(out)?;
    writeln!(
        out,
        "verified {} inputs; {} self-stabilizing",
        inputs.len(),
        inputs.len() - failed.min(inputs.len())
    )?;
    Ok(if failed == 0 { EXIT_OK } else { EXIT_FAILURE })
}
