//! Acceptance run: one PASS/FAIL line per criterion.
//!
//! Every random instance is drawn from a fixed ChaCha8 seed, and each check
//! compares the library against an oracle written here from the definitions.

use std::collections::BTreeSet;
use std::time::{Duration, Instant};

use popstab::engine::{Agent, Protocol, TableProtocol};
use popstab::funcspec::{
    brute_force_count, check_subset_closed, count_functions, image_bound_check, Characterization,
    FunctionSpec, OutputAlphabet,
};
use popstab::multiset::{parse_multiset, Alphabet, Domain, Multiset};
use popstab::rootset::{dickson_root_set, minimal_root_set};
use popstab::synthesizer::{synthesize, synthesize_with, Rules};
use popstab::verifier::{
    build_config_graph, lemmas, refute_protocol, statistical_check, verify_self_stabilizing,
    DEFAULT_NODE_BUDGET,
};
use popstab::Error;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SYMBOLS: [&str; 6] = ["a", "b", "c", "d", "e", "f"];

struct Outcome {
    pass: bool,
    detail: String,
}

type Criterion = (&'static str, Duration, fn() -> Outcome);

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn alphabet(n: usize) -> Alphabet {
    Alphabet::new(SYMBOLS[..n].iter().copied()).unwrap()
}

fn binary() -> OutputAlphabet {
    OutputAlphabet::new(["0", "1"]).unwrap()
}

fn ms(alpha: &Alphabet, text: &str) -> Multiset {
    parse_multiset(text, alpha).unwrap()
}

fn subset(a: &Multiset, b: &Multiset) -> bool {
    a.counts().iter().zip(b.counts()).all(|(x, y)| x <= y)
}

fn random_multiset(rng: &mut ChaCha8Rng, alpha: &Alphabet, max_mult: u32) -> Multiset {
    loop {
        let counts: Vec<u32> = (0..alpha.len())
            .map(|_| rng.gen_range(0..=max_mult))
            .collect();
        if counts.iter().any(|&c| c > 0) {
            return Multiset::from_counts(alpha, counts).unwrap();
        }
    }
}

fn random_members(
    rng: &mut ChaCha8Rng,
    alpha: &Alphabet,
    max_members: usize,
    max_mult: u32,
) -> Vec<Multiset> {
    let n = rng.gen_range(1..=max_members);
    let set: BTreeSet<Multiset> = (0..n)
        .map(|_| random_multiset(rng, alpha, max_mult))
        .collect();
    set.into_iter().collect()
}

/// Members with no other member strictly below them.
fn oracle_minimal(members: &[Multiset]) -> BTreeSet<Multiset> {
    members
        .iter()
        .filter(|a| !members.iter().any(|b| b != *a && subset(b, a)))
        .cloned()
        .collect()
}

fn oracle_covers(candidate: &[&Multiset], members: &[Multiset]) -> bool {
    members
        .iter()
        .all(|a| candidate.iter().any(|r| subset(r, a)))
}

fn oracle_closed(members: &[Multiset], outs: &[usize]) -> bool {
    (0..members.len()).all(|i| {
        (0..members.len()).all(|j| !subset(&members[i], &members[j]) || outs[i] == outs[j])
    })
}

fn fixture() -> FunctionSpec {
    let alpha = alphabet(4);
    let entries = [("a a b", 1), ("a a a b", 1), ("d", 0), ("d d", 0)];
    FunctionSpec::explicit(
        &alpha,
        &binary(),
        entries.iter().map(|(t, y)| (ms(&alpha, t), *y)),
    )
    .unwrap()
}

fn root_set_reproduction() -> Outcome {
    let alpha = alphabet(6);
    let members: Vec<Multiset> = ["a a b", "a a b b c", "e e e f f f b d", "d"]
        .iter()
        .map(|t| ms(&alpha, t))
        .collect();
    let domain = Domain::new(&alpha, members).unwrap();
    let rs = minimal_root_set(&domain).unwrap();
    let dickson = dickson_root_set(&domain).unwrap();
    let expected = vec![ms(&alpha, "a a b"), ms(&alpha, "d")];
    let got: Vec<String> = rs.roots().iter().map(|r| format!("{{{r}}}")).collect();
    outcome(
        rs.roots() == expected.as_slice() && dickson.roots() == expected.as_slice(),
        format!("R = {}", got.join(", ")),
    )
}

fn root_set_oracles() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut uniqueness_checked = 0;
    for case in 0..200 {
        let alpha = alphabet(rng.gen_range(1..=4));
        let members = random_members(&mut rng, &alpha, 15, 4);
        let domain = Domain::new(&alpha, members.clone()).unwrap();
        let filter = oracle_minimal(&members);
        let fast: BTreeSet<Multiset> = minimal_root_set(&domain)
            .unwrap()
            .roots()
            .iter()
            .cloned()
            .collect();
        let dickson: BTreeSet<Multiset> = dickson_root_set(&domain)
            .unwrap()
            .roots()
            .iter()
            .cloned()
            .collect();
        if fast != filter || dickson != filter {
            return outcome(false, format!("case {case}: root sets disagree"));
        }
        if members.len() <= 8 {
            uniqueness_checked += 1;
            let k = filter.len();
            for mask in 0u32..(1 << members.len()) {
                let size = mask.count_ones() as usize;
                if size > k {
                    continue;
                }
                let chosen: Vec<&Multiset> = (0..members.len())
                    .filter(|i| mask >> i & 1 == 1)
                    .map(|i| &members[i])
                    .collect();
                if !oracle_covers(&chosen, &members) {
                    continue;
                }
                let same = size == k && chosen.iter().all(|r| filter.contains(*r));
                if !same {
                    return outcome(
                        false,
                        format!("case {case}: another root set of size {size} exists"),
                    );
                }
            }
        }
    }
    outcome(
        true,
        format!("200 domains; uniqueness searched on {uniqueness_checked}"),
    )
}

fn characterization() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut closed = 0;
    for case in 0..500 {
        let alpha = alphabet(rng.gen_range(1..=3));
        let members = random_members(&mut rng, &alpha, 8, 3);
        let ny = rng.gen_range(1..=3);
        let outputs = OutputAlphabet::new(["0", "1", "2"][..ny].iter().copied()).unwrap();
        let outs: Vec<usize> = if rng.gen_bool(0.5) {
            // Labels induced by the minimal members, which are often consistent.
            let minimal: Vec<Multiset> = oracle_minimal(&members).into_iter().collect();
            let labels: Vec<usize> = minimal.iter().map(|_| rng.gen_range(0..ny)).collect();
            members
                .iter()
                .map(|m| labels[minimal.iter().position(|r| subset(r, m)).unwrap()])
                .collect()
        } else {
            members.iter().map(|_| rng.gen_range(0..ny)).collect()
        };
        let spec = FunctionSpec::explicit(
            &alpha,
            &outputs,
            members.iter().cloned().zip(outs.iter().copied()),
        )
        .unwrap();
        let expected = oracle_closed(&members, &outs);
        let got = check_subset_closed(&spec);
        if got.is_subset_closed() != expected {
            return outcome(
                false,
                format!("case {case}: decision disagrees with all-pairs oracle"),
            );
        }
        if let Characterization::Violation(v) = &got {
            if !(subset(&v.smaller, &v.larger)
                && spec.output_of(&v.smaller) == Some(v.smaller_output)
                && spec.output_of(&v.larger) == Some(v.larger_output)
                && v.smaller_output != v.larger_output)
            {
                return outcome(
                    false,
                    format!("case {case}: reported pair is not a violation"),
                );
            }
        }
        closed += expected as usize;
    }
    for n in 2..=4 {
        let alpha = alphabet(n);
        let union = Multiset::from_counts(&alpha, vec![1; n]).unwrap();
        for mask in 0u32..(1 << (n + 1)) {
            let mut entries: Vec<(Multiset, usize)> = (0..n)
                .map(|s| {
                    (
                        Multiset::from_indices(&alpha, [s]),
                        (mask >> s & 1) as usize,
                    )
                })
                .collect();
            entries.push((union.clone(), (mask >> n & 1) as usize));
            let constant = mask == 0 || mask == (1 << (n + 1)) - 1;
            let spec = FunctionSpec::explicit(&alpha, &binary(), entries).unwrap();
            let res = check_subset_closed(&spec);
            if res.is_subset_closed() != constant
                || (!constant && !matches!(res, Characterization::Violation(_)))
            {
                return outcome(
                    false,
                    format!("singletons plus union over {n} symbols, mask {mask:b}"),
                );
            }
        }
    }
    outcome(
        true,
        format!("500 specs ({closed} subset-closed); singleton-union cases rejected"),
    )
}

/// A subset-closed spec whose members all have 2 to 4 agents.
fn random_closed_spec(rng: &mut ChaCha8Rng) -> FunctionSpec {
    loop {
        let alpha = alphabet(rng.gen_range(2..=3));
        let k = rng.gen_range(1..=3);
        let mut roots: Vec<Multiset> = Vec::new();
        for _ in 0..20 {
            let size = rng.gen_range(2..=3);
            let r =
                Multiset::from_indices(&alpha, (0..size).map(|_| rng.gen_range(0..alpha.len())));
            if roots.iter().all(|x| !subset(x, &r) && !subset(&r, x)) {
                roots.push(r);
            }
            if roots.len() == k {
                break;
            }
        }
        let labels: Vec<usize> = roots.iter().map(|_| rng.gen_range(0..2)).collect();
        let mut members: BTreeSet<Multiset> = roots.iter().cloned().collect();
        for _ in 0..rng.gen_range(0..=3) {
            let base = &roots[rng.gen_range(0..roots.len())];
            let mut counts = base.counts().to_vec();
            counts[rng.gen_range(0..alpha.len())] += 1;
            if counts.iter().sum::<u32>() <= 4 {
                members.insert(Multiset::from_counts(&alpha, counts).unwrap());
            }
        }
        let mut entries = Vec::new();
        let mut consistent = true;
        for m in &members {
            let ys: BTreeSet<usize> = (0..roots.len())
                .filter(|&i| subset(&roots[i], m))
                .map(|i| labels[i])
                .collect();
            consistent &= ys.len() == 1;
            entries.push((m.clone(), *ys.iter().next().unwrap()));
        }
        if !consistent {
            continue;
        }
        let spec = FunctionSpec::explicit(&alpha, &binary(), entries).unwrap();
        if let Ok(p) = synthesize(&spec) {
            if p.more_table().total_bits() <= 6 {
                return spec;
            }
        }
    }
}

fn constructive() -> Outcome {
    let mut failures = Vec::new();
    let mut verified = 0;
    let check =
        |spec: &FunctionSpec, name: &str, failures: &mut Vec<String>, verified: &mut usize| {
            let p = synthesize(spec).unwrap();
            for a in spec.verification_inputs() {
                let v = verify_self_stabilizing(&p, spec, &a, DEFAULT_NODE_BUDGET)?;
                *verified += 1;
                if !v.is_self_stabilizing() {
                    failures.push(format!("{name} {{{a}}}"));
                }
            }
            Ok::<(), Error>(())
        };
    check(&fixture(), "fixture", &mut failures, &mut verified).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let (mut accepted, mut over_budget) = (0, 0);
    while accepted < 6 {
        let spec = random_closed_spec(&mut rng);
        let p = synthesize(&spec).unwrap();
        let fits = spec
            .verification_inputs()
            .iter()
            .all(|a| build_config_graph(&p, a, DEFAULT_NODE_BUDGET).is_ok());
        if !fits {
            over_budget += 1;
            continue;
        }
        accepted += 1;
        check(
            &spec,
            &format!("random#{accepted}"),
            &mut failures,
            &mut verified,
        )
        .unwrap();
    }
    let detail = format!(
        "{verified} inputs over the fixture and {accepted} random specs ({over_budget} drawn specs exceeded the budget); violated: {}",
        if failures.is_empty() { "none".to_string() } else { failures.join(", ") }
    );
    outcome(failures.is_empty(), detail)
}

fn lemma_suite() -> Outcome {
    let spec = fixture();
    let p = synthesize(&spec).unwrap();
    let mut failures = Vec::new();
    for a in spec.verification_inputs() {
        for r in lemmas::check_all(&p, &spec, &a, DEFAULT_NODE_BUDGET).unwrap() {
            if !r.holds {
                failures.push(format!("{} on {{{a}}}", r.name));
            }
        }
    }
    let detail = if failures.is_empty() {
        "all four lemmas hold on every fixture member".to_string()
    } else {
        format!("fails: {}", failures.join(", "))
    };
    outcome(failures.is_empty(), detail)
}

fn random_table_protocol(
    rng: &mut ChaCha8Rng,
    alpha: &Alphabet,
    outputs: &OutputAlphabet,
) -> TableProtocol {
    let n = rng.gen_range(1..=4u32);
    let names = (0..n).map(|q| format!("q{q}")).collect();
    let state_outputs = (0..n).map(|_| rng.gen_range(0..outputs.len())).collect();
    let input_states = (0..alpha.len()).map(|_| rng.gen_range(0..n)).collect();
    let mut p = TableProtocol::new(alpha, outputs, names, state_outputs, input_states).unwrap();
    for qu in 0..n {
        for qv in 0..n {
            for su in 0..alpha.len() {
                for sv in 0..alpha.len() {
                    let r = (rng.gen_range(0..n), rng.gen_range(0..n));
                    p.set_transition(Agent::new(qu, su), Agent::new(qv, sv), r)
                        .unwrap();
                }
            }
        }
    }
    p
}

fn impossibility() -> Outcome {
    let alpha = alphabet(1);
    let y = binary();
    let spec =
        FunctionSpec::explicit(&alpha, &y, [(ms(&alpha, "a"), 0), (ms(&alpha, "a a"), 1)]).unwrap();
    let (a, b) = (ms(&alpha, "a"), ms(&alpha, "a a"));
    let mut battery: Vec<(String, Box<dyn Protocol>)> = Vec::new();
    for out in 0..2 {
        battery.push((
            format!("always-{out}"),
            Box::new(TableProtocol::constant(&alpha, &y, out).unwrap()),
        ));
    }
    let wrong_specs: [&[(&str, usize)]; 4] = [
        &[("a a", 1), ("a a a", 1)],
        &[("a", 0), ("a a", 0)],
        &[("a", 1)],
        &[("a a", 0)],
    ];
    for entries in wrong_specs {
        let s =
            FunctionSpec::explicit(&alpha, &y, entries.iter().map(|(t, o)| (ms(&alpha, t), *o)))
                .unwrap();
        let p = synthesize(&s).unwrap();
        battery.push((
            format!("synthesized {entries:?}"),
            Box::new(TableProtocol::tabulate(&p).unwrap()),
        ));
        battery.push((format!("synthesized {entries:?} (direct)"), Box::new(p)));
    }
    let mut copy = TableProtocol::new(
        &alpha,
        &y,
        vec!["zero".into(), "one".into()],
        vec![0, 1],
        vec![0],
    )
    .unwrap();
    copy.set_transition(Agent::new(0, 0), Agent::new(1, 0), (0, 0))
        .unwrap();
    copy.set_transition(Agent::new(1, 0), Agent::new(0, 0), (1, 1))
        .unwrap();
    battery.push(("copy-initiator".into(), Box::new(copy)));
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for i in 0..200 {
        battery.push((
            format!("random#{i}"),
            Box::new(random_table_protocol(&mut rng, &alpha, &y)),
        ));
    }
    let total = battery.len();
    for (name, p) in &battery {
        let r = refute_protocol(p.as_ref(), &spec, &a, &b, DEFAULT_NODE_BUDGET).unwrap();
        if r.failing().is_none() {
            return outcome(false, format!("{name} survives both inputs"));
        }
    }
    outcome(
        true,
        format!("{total} candidate protocols refuted on {{a}} ⊆ {{a a}}"),
    )
}

/// Counts every map `domain → Y` that is constant on comparable members.
fn oracle_count(members: &[Multiset], ny: usize) -> u64 {
    let n = members.len();
    let mut outs = vec![0usize; n];
    let mut total = 0;
    loop {
        total += oracle_closed(members, &outs) as u64;
        let mut i = 0;
        loop {
            if i == n {
                return total;
            }
            outs[i] += 1;
            if outs[i] < ny {
                break;
            }
            outs[i] = 0;
            i += 1;
        }
    }
}

fn counting() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for case in 0..100 {
        let alpha = alphabet(rng.gen_range(1..=3));
        let members = random_members(&mut rng, &alpha, 8, 3);
        let ny = rng.gen_range(1..=3);
        let outputs = OutputAlphabet::new(["0", "1", "2"][..ny].iter().copied()).unwrap();
        let domain = Domain::new(&alpha, members.clone()).unwrap();
        let c = count_functions(&domain, &outputs).unwrap();
        let brute = brute_force_count(&domain, &outputs).unwrap();
        let oracle = oracle_count(&members, ny);
        let roots = oracle_minimal(&members).len();
        if c.exact_count != brute as u128
            || brute != oracle
            || c.upper_bound != (ny as u128).pow(roots as u32)
        {
            return outcome(
                false,
                format!(
                    "case {case}: exact {} brute {brute} oracle {oracle}",
                    c.exact_count
                ),
            );
        }
        for _ in 0..5 {
            let outs: Vec<usize> = members.iter().map(|_| rng.gen_range(0..ny)).collect();
            let spec = FunctionSpec::explicit(
                &alpha,
                &outputs,
                members.iter().cloned().zip(outs.iter().copied()),
            )
            .unwrap();
            if !check_subset_closed(&spec).is_subset_closed() {
                continue;
            }
            let ib = image_bound_check(&spec).unwrap();
            let image: BTreeSet<usize> = outs.iter().copied().collect();
            if !ib.holds() || ib.image_size != image.len() || image.len() > roots {
                return outcome(false, format!("case {case}: image bound fails"));
            }
        }
    }
    let fx = count_functions(&fixture().domain(), &binary()).unwrap();
    if (fx.upper_bound, fx.exact_count, fx.unique_roots) != (4, 4, true) {
        return outcome(
            false,
            format!("fixture: bound {} exact {}", fx.upper_bound, fx.exact_count),
        );
    }
    let alpha = alphabet(2);
    let d = Domain::new(&alpha, ["a", "b", "a b"].iter().map(|t| ms(&alpha, t))).unwrap();
    let ab = count_functions(&d, &binary()).unwrap();
    if (ab.upper_bound, ab.exact_count, ab.unique_roots) != (4, 2, false) {
        return outcome(
            false,
            format!(
                "{{a}},{{b}},{{a b}}: bound {} exact {}",
                ab.upper_bound, ab.exact_count
            ),
        );
    }
    outcome(
        true,
        "100 random pairs match; fixture 4 = 4 unique; {a},{b},{a b} 2 < 4 shared",
    )
}

fn mutation_necessity() -> Outcome {
    let spec = fixture();
    let multi: Vec<Multiset> = spec
        .verification_inputs()
        .into_iter()
        .filter(|a| a.size() >= 2)
        .collect();
    let violated = |rules: Rules| -> Vec<String> {
        let p = synthesize_with(&spec, rules).unwrap();
        multi
            .iter()
            .filter(|a| {
                !verify_self_stabilizing(&p, &spec, a, DEFAULT_NODE_BUDGET)
                    .unwrap()
                    .is_self_stabilizing()
            })
            .map(|a| format!("{{{a}}}"))
            .collect()
    };
    let full = violated(Rules::FULL);
    let mutants = [
        (
            "reset",
            Rules {
                reset: false,
                ..Rules::FULL
            },
        ),
        (
            "indicator",
            Rules {
                indicator: false,
                ..Rules::FULL
            },
        ),
        (
            "non-empty guard",
            Rules {
                nonempty_guard: false,
                ..Rules::FULL
            },
        ),
    ];
    let mut parts = vec![format!("full: {} violated", full.len())];
    let mut pass = full.is_empty();
    for (name, rules) in mutants {
        let v = violated(rules);
        pass &= !v.is_empty();
        parts.push(format!(
            "no {name}: {}",
            if v.is_empty() {
                "none".into()
            } else {
                v.join(" ")
            }
        ));
    }
    outcome(pass, parts.join("; "))
}

fn statistical() -> Outcome {
    let spec = fixture();
    let p = synthesize(&spec).unwrap();
    let a = ms(spec.alphabet(), "a a a b");
    let first = statistical_check(&p, &spec, &a, 100, 1_000_000, 9).unwrap();
    let second = statistical_check(&p, &spec, &a, 100, 1_000_000, 9).unwrap();
    let identical = first == second && first.render(&p) == second.render(&p);
    outcome(
        first.all_converged() && identical,
        format!(
            "{}/{} converged; reruns identical: {identical}",
            first.converged, first.trials
        ),
    )
}

fn main() {
    let criteria: [Criterion; 9] = [
        (
            "root-set reproduction",
            Duration::from_secs(1),
            root_set_reproduction,
        ),
        (
            "root-set oracle equivalence",
            Duration::from_secs(30),
            root_set_oracles,
        ),
        (
            "characterization decision",
            Duration::from_secs(10),
            characterization,
        ),
        (
            "constructive direction",
            Duration::from_secs(600),
            constructive,
        ),
        ("lemma suite", Duration::from_secs(120), lemma_suite),
        (
            "impossibility direction",
            Duration::from_secs(60),
            impossibility,
        ),
        ("counting", Duration::from_secs(30), counting),
        (
            "mutation necessity",
            Duration::from_secs(300),
            mutation_necessity,
        ),
        (
            "statistical surrogate",
            Duration::from_secs(120),
            statistical,
        ),
    ];
    let mut failed = 0;
    for (i, (name, limit, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let o = run();
        let elapsed = start.elapsed();
        let pass = o.pass && elapsed <= *limit;
        failed += !pass as usize;
        println!(
            "criterion {} {name}: {} ({:.2}s of {}s) {}",
            i + 1,
            if pass { "PASS" } else { "FAIL" },
            elapsed.as_secs_f64(),
            limit.as_secs(),
            o.detail
        );
    }
    if failed > 0 {
        println!("{failed} of {} criteria failed", criteria.len());
        std::process::exit(1);
    }
}
