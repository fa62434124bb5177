//! Exhaustive and statistical checks of self-stabilization.
//!
//! A protocol self-stabilizes to `f(A)` on input `A` exactly when every
//! bottom strongly connected component of the full configuration graph
//! (every assignment of states to the agents of `A`) consists of
//! configurations whose agents all output `f(A)`.

pub mod graph;
pub mod lemmas;
pub mod space;

use std::collections::VecDeque;
use std::fmt::Write as _;
use std::time::{Duration, Instant};

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::engine::{
    apply_interaction, config_output, initial_configuration, random_configuration, Agent,
    Configuration, Protocol, Simulator, StateId,
};
use crate::error::{Error, Result};
use crate::funcspec::FunctionSpec;
use crate::multiset::Multiset;

pub use graph::{Components, ConfigGraph};
pub use space::{ConfigSpace, Slot};

pub const DEFAULT_NODE_BUDGET: u64 = 5_000_000;

/// Builds the full configuration graph of `protocol` on input `a`.
pub fn build_config_graph(
    protocol: &dyn Protocol,
    a: &Multiset,
    budget: u64,
) -> Result<ConfigGraph> {
    protocol.alphabet().check_same(a.alphabet())?;
    if a.is_empty() {
        return Err(Error::Input("input multiset is empty".into()));
    }
    let space = ConfigSpace::for_input(protocol.num_states(), a, budget)?;
    ConfigGraph::build(protocol, space)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    SelfStabilizing,
    Violated,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::SelfStabilizing => "self-stabilizing",
            Status::Violated => "violated",
        }
    }
}

/// A bottom-SCC configuration with the wrong output and a path to it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Witness {
    pub start: Configuration,
    pub moves: Vec<(Agent, Agent)>,
    pub bad: Configuration,
}

impl Witness {
    /// Replays the moves from `start` through the engine.
    pub fn replay(&self, protocol: &dyn Protocol) -> Result<Configuration> {
        let mut c = self.start.clone();
        for &(u, v) in &self.moves {
            c = apply_interaction(protocol, &c, u, v)?;
        }
        Ok(c)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct GraphStats {
    pub nodes: usize,
    pub edges: usize,
    pub sccs: usize,
    pub bottom_sccs: usize,
    pub elapsed: Duration,
}

#[derive(Clone, Debug)]
pub struct Verdict {
    pub input: Multiset,
    pub expected: usize,
    pub status: Status,
    pub witness: Option<Witness>,
    pub stats: GraphStats,
}

impl Verdict {
    pub fn is_self_stabilizing(&self) -> bool {
        self.status == Status::SelfStabilizing
    }

    /// Human-readable line followed by the `key=value` block. Wall time is
    /// left out so that output is reproducible.
    pub fn render(&self, protocol: &dyn Protocol) -> String {
        let y = protocol.outputs().name(self.expected);
        let mut s = format!(
            "input {{{}}}: {} (expected output {y})\n",
            self.input,
            self.status.as_str()
        );
        let _ = writeln!(s, "status={}", self.status.as_str());
        let _ = writeln!(s, "input={}", self.input);
        let _ = writeln!(s, "expected={y}");
        match &self.witness {
            None => s.push_str("witness=none\n"),
            Some(w) => {
                let out =
                    config_output(protocol, &w.bad).map_or("mixed", |o| protocol.outputs().name(o));
                let _ = writeln!(s, "witness={}", w.bad.render(protocol));
                let _ = writeln!(s, "witness_output={out}");
                let _ = writeln!(s, "witness_start={}", w.start.render(protocol));
                let _ = writeln!(s, "witness_moves={}", w.moves.len());
                for (u, v) in &w.moves {
                    let _ = writeln!(
                        s,
                        "move=({},{}) ({},{})",
                        protocol.state_name(u.state),
                        protocol.alphabet().symbol(u.input()),
                        protocol.state_name(v.state),
                        protocol.alphabet().symbol(v.input())
                    );
                }
            }
        }
        let _ = writeln!(s, "nodes={}", self.stats.nodes);
        let _ = writeln!(s, "edges={}", self.stats.edges);
        let _ = writeln!(s, "sccs={}", self.stats.sccs);
        let _ = writeln!(s, "bottom_sccs={}", self.stats.bottom_sccs);
        s
    }
}

/// Checks `protocol` on `a` against the expected output `expected`.
pub fn verify_output(
    protocol: &dyn Protocol,
    a: &Multiset,
    expected: usize,
    budget: u64,
) -> Result<Verdict> {
    let started = Instant::now();
    let graph = build_config_graph(protocol, a, budget)?;
    let comps = graph.sccs();
    let n = graph.nodes();
    let good: Vec<bool> = (0..n as u64)
        .into_par_iter()
        .map_init(Vec::new, |buf, id| {
            graph.space.decode(id, buf);
            buf.iter().all(|&q| protocol.output(q) == expected)
        })
        .collect();
    let bad = |u: u32| comps.is_bottom_node(u) && !good[u as usize];
    let witness = if let Some(first_bad) = (0..n as u32).find(|&u| bad(u)) {
        Some(find_witness(protocol, &graph, a, first_bad, &bad)?)
    } else {
        None
    };
    Ok(Verdict {
        input: a.clone(),
        expected,
        status: if witness.is_some() {
            Status::Violated
        } else {
            Status::SelfStabilizing
        },
        witness,
        stats: GraphStats {
            nodes: n,
            edges: graph.edges(),
            sccs: comps.count(),
            bottom_sccs: comps.bottom_count(),
            elapsed: started.elapsed(),
        },
    })
}

/// Shortest path from the input-mapped initial configuration to a bad node,
/// or the bad node itself when none is reachable from there.
fn find_witness(
    protocol: &dyn Protocol,
    graph: &ConfigGraph,
    a: &Multiset,
    fallback: u32,
    bad: &dyn Fn(u32) -> bool,
) -> Result<Witness> {
    let space = &graph.space;
    let mut buf: Vec<StateId> = Vec::new();
    let decode = |id: u32, buf: &mut Vec<StateId>| {
        space.decode(id as u64, buf);
        space.configuration(buf)
    };
    let init = initial_configuration(protocol, a)?;
    let start = space
        .index_of(&init)
        .ok_or_else(|| Error::Internal("initial configuration outside the graph".into()))?
        as u32;
    let mut parent = vec![u32::MAX; graph.nodes()];
    parent[start as usize] = start;
    let mut queue = VecDeque::from([start]);
    let mut target = None;
    while let Some(u) = queue.pop_front() {
        if bad(u) {
            target = Some(u);
            break;
        }
        for &w in graph.successors(u) {
            if parent[w as usize] == u32::MAX {
                parent[w as usize] = u;
                queue.push_back(w);
            }
        }
    }
    let Some(target) = target else {
        return Ok(Witness {
            start: decode(fallback, &mut buf),
            moves: Vec::new(),
            bad: decode(fallback, &mut buf),
        });
    };
    let mut path = vec![target];
    while *path.last().unwrap() != start {
        path.push(parent[*path.last().unwrap() as usize]);
    }
    path.reverse();
    let mut moves = Vec::with_capacity(path.len() - 1);
    let mut scratch = Vec::new();
    for pair in path.windows(2) {
        space.decode(pair[0] as u64, &mut buf);
        let mut found = None;
        space.for_each_successor(protocol, &buf, &mut scratch, |t, u, v| {
            if found.is_none() && t == pair[1] as u64 {
                found = Some((u, v));
            }
        });
        moves.push(found.ok_or_else(|| Error::Internal("witness edge has no interaction".into()))?);
    }
    Ok(Witness {
        start: init,
        moves,
        bad: decode(target, &mut buf),
    })
}

fn expected_output(spec: &FunctionSpec, a: &Multiset) -> Result<usize> {
    spec.alphabet().check_same(a.alphabet())?;
    if !spec.domain().contains(a) {
        return Err(Error::Input(format!(
            "{{{a}}} is not a domain member or test input"
        )));
    }
    spec.output_of(a)
        .ok_or_else(|| Error::Input(format!("f is undefined on {{{a}}}")))
}

/// Checks that `protocol` self-stabilizes to `f(a)` from every configuration.
pub fn verify_self_stabilizing(
    protocol: &dyn Protocol,
    spec: &FunctionSpec,
    a: &Multiset,
    budget: u64,
) -> Result<Verdict> {
    protocol.outputs().check_same(spec.outputs())?;
    let expected = expected_output(spec, a)?;
    verify_output(protocol, a, expected, budget)
}

/// Verdicts on both sides of a subset-closure violation.
#[derive(Clone, Debug)]
pub struct Refutation {
    pub smaller: Verdict,
    pub larger: Verdict,
}

impl Refutation {
    /// The first failing verdict, smaller input first.
    pub fn failing(&self) -> Option<&Verdict> {
        [&self.smaller, &self.larger]
            .into_iter()
            .find(|v| !v.is_self_stabilizing())
    }
}

/// Verifies `protocol` on both `a ⊆ b`, where `f(a) ≠ f(b)`.
pub fn refute_protocol(
    protocol: &dyn Protocol,
    spec: &FunctionSpec,
    a: &Multiset,
    b: &Multiset,
    budget: u64,
) -> Result<Refutation> {
    protocol.outputs().check_same(spec.outputs())?;
    let fa = expected_output(spec, a)?;
    let fb = expected_output(spec, b)?;
    if !a.is_subset(b)? {
        return Err(Error::Input(format!("{{{a}}} is not contained in {{{b}}}")));
    }
    if fa == fb {
        return Err(Error::Input(format!(
            "f({{{a}}}) = f({{{b}}}) = {}; the pair is not a violation",
            spec.outputs().name(fa)
        )));
    }
    Ok(Refutation {
        smaller: verify_output(protocol, a, fa, budget)?,
        larger: verify_output(protocol, b, fb, budget)?,
    })
}

/// A trial that did not settle on the expected output.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StuckTrial {
    pub seed: u64,
    pub start: Configuration,
    pub last: Configuration,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StatisticalReport {
    pub input: Multiset,
    pub expected: usize,
    pub trials: usize,
    pub converged: usize,
    pub step_cap: u64,
    pub window: u64,
    /// The first failing trial, in trial order.
    pub stuck: Option<StuckTrial>,
}

impl StatisticalReport {
    pub fn all_converged(&self) -> bool {
        self.converged == self.trials
    }

    pub fn render(&self, protocol: &dyn Protocol) -> String {
        let mut s = format!(
            "input {{{}}}: {}/{} trials held output {} for {} steps within {} steps\n",
            self.input,
            self.converged,
            self.trials,
            protocol.outputs().name(self.expected),
            self.window,
            self.step_cap
        );
        let _ = writeln!(
            s,
            "result={}",
            if self.all_converged() {
                "converged"
            } else {
                "inconclusive"
            }
        );
        if let Some(t) = &self.stuck {
            let _ = writeln!(s, "stuck_seed={}", t.seed);
            let _ = writeln!(s, "stuck_start={}", t.start.render(protocol));
            let _ = writeln!(s, "stuck_last={}", t.last.render(protocol));
        }
        s
    }
}

/// Seed-driven trials from uniformly random configurations. A trial
/// converges once every agent outputs `f(a)` for `n²` consecutive steps.
pub fn statistical_check(
    protocol: &dyn Protocol,
    spec: &FunctionSpec,
    a: &Multiset,
    trials: usize,
    step_cap: u64,
    seed: u64,
) -> Result<StatisticalReport> {
    if trials == 0 {
        return Err(Error::Input("at least one trial is required".into()));
    }
    protocol.outputs().check_same(spec.outputs())?;
    let expected = expected_output(spec, a)?;
    let n = a.size() as u64;
    let window = n * n;
    let mut master = ChaCha8Rng::seed_from_u64(seed);
    let seeds: Vec<u64> = (0..trials).map(|_| master.next_u64()).collect();
    let results: Vec<Result<Option<StuckTrial>>> = seeds
        .par_iter()
        .map(|&trial_seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(trial_seed);
            let start = random_configuration(protocol, a, &mut rng)?;
            let mut sim = Simulator::new(protocol, &start, rng.next_u64());
            let ok = if n < 2 {
                sim.output() == Some(expected)
            } else {
                let mut held = 0;
                loop {
                    if sim.output() == Some(expected) {
                        held += 1;
                        if held >= window {
                            break true;
                        }
                    } else {
                        held = 0;
                    }
                    if sim.steps() >= step_cap {
                        break false;
                    }
                    sim.step();
                }
            };
            Ok((!ok).then(|| StuckTrial {
                seed: trial_seed,
                start,
                last: sim.configuration(),
            }))
        })
        .collect();
    let mut converged = 0;
    let mut stuck = None;
    for r in results {
        match r? {
            None => converged += 1,
            Some(t) => {
                stuck.get_or_insert(t);
            }
        }
    }
    Ok(StatisticalReport {
        input: a.clone(),
        expected,
        trials,
        converged,
        step_cap,
        window,
        stuck,
    })
}
