//! Population-protocol semantics on the complete interaction graph.
//!
//! Configurations are anonymous: a sorted multiset of `(state, input)`
//! agents. Interactions are ordered (initiator, responder) and may be
//! asymmetric. The random scheduler draws ordered pairs of distinct agents
//! uniformly from a ChaCha8 stream seeded with a 64-bit value.

use std::collections::{BTreeSet, HashSet, VecDeque};
use std::fmt::{self, Write as _};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::funcspec::OutputAlphabet;
use crate::multiset::{Alphabet, Multiset};

pub type StateId = u32;

/// One agent: its current state and its fixed input symbol index.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Agent {
    pub state: StateId,
    pub input: u16,
}

impl Agent {
    pub fn new(state: StateId, input: usize) -> Self {
        Self {
            state,
            input: input as u16,
        }
    }

    pub fn input(&self) -> usize {
        self.input as usize
    }
}

/// An executable population protocol `(Q, Σ, Y, I, O, δ)`.
///
/// States are `0..num_states()`; outputs index into [`Protocol::outputs`].
pub trait Protocol: Send + Sync {
    fn alphabet(&self) -> &Alphabet;
    fn outputs(&self) -> &OutputAlphabet;
    fn num_states(&self) -> u32;
    fn state_name(&self, state: StateId) -> String;
    /// `I(σ)`.
    fn input_state(&self, symbol: usize) -> StateId;
    /// `O(q)`.
    fn output(&self, state: StateId) -> usize;
    /// `δ((q_u, σ_u), (q_v, σ_v))`, returning the new states of initiator
    /// and responder.
    fn delta(&self, initiator: Agent, responder: Agent) -> (StateId, StateId);
}

/// An anonymous configuration: agents sorted by `(state, input)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Configuration {
    agents: Vec<Agent>,
}

impl Configuration {
    pub fn new(mut agents: Vec<Agent>) -> Self {
        agents.sort_unstable();
        Self { agents }
    }

    pub fn agents(&self) -> &[Agent] {
        &self.agents
    }

    pub fn size(&self) -> usize {
        self.agents.len()
    }

    pub fn count(&self, agent: Agent) -> usize {
        let lo = self.agents.partition_point(|a| *a < agent);
        let hi = self.agents.partition_point(|a| *a <= agent);
        hi - lo
    }

    /// Distinct agents with multiplicities, in canonical order.
    pub fn groups(&self) -> Vec<(Agent, usize)> {
        let mut out: Vec<(Agent, usize)> = Vec::new();
        for &a in &self.agents {
            match out.last_mut() {
                Some((b, n)) if *b == a => *n += 1,
                _ => out.push((a, 1)),
            }
        }
        out
    }

    /// Projection onto input symbols.
    pub fn input_multiset(&self, alphabet: &Alphabet) -> Multiset {
        Multiset::from_indices(alphabet, self.agents.iter().map(Agent::input))
    }

    /// Renders as `<count>x(<state>,<input>) …`.
    pub fn render(&self, protocol: &dyn Protocol) -> String {
        let mut s = String::new();
        for (i, (a, n)) in self.groups().into_iter().enumerate() {
            if i > 0 {
                s.push(' ');
            }
            let _ = write!(
                s,
                "{n}x({},{})",
                protocol.state_name(a.state),
                protocol.alphabet().symbol(a.input())
            );
        }
        s
    }
}

fn check_alphabet(protocol: &dyn Protocol, a: &Multiset) -> Result<()> {
    if protocol.alphabet() != a.alphabet() {
        return Err(Error::AlphabetMismatch(format!(
            "protocol alphabet {{{}}} vs input alphabet {{{}}}",
            protocol.alphabet(),
            a.alphabet()
        )));
    }
    Ok(())
}

/// Every input occurrence `σ` becomes an agent in state `I(σ)`.
pub fn initial_configuration(protocol: &dyn Protocol, a: &Multiset) -> Result<Configuration> {
    check_alphabet(protocol, a)?;
    if a.is_empty() {
        return Err(Error::Input("input multiset is empty".into()));
    }
    Ok(Configuration::new(
        a.indices()
            .map(|s| Agent::new(protocol.input_state(s), s))
            .collect(),
    ))
}

/// Replaces one occurrence of each interacting agent with its successor.
pub fn apply_interaction(
    protocol: &dyn Protocol,
    c: &Configuration,
    initiator: Agent,
    responder: Agent,
) -> Result<Configuration> {
    let needed = if initiator == responder { 2 } else { 1 };
    if c.count(initiator) < needed || c.count(responder) < 1 {
        return Err(Error::Input(format!(
            "interaction ({}, {}) is not available in configuration {}",
            protocol.state_name(initiator.state),
            protocol.state_name(responder.state),
            c.render(protocol)
        )));
    }
    Ok(interact_unchecked(protocol, c, initiator, responder))
}

fn interact_unchecked(
    protocol: &dyn Protocol,
    c: &Configuration,
    u: Agent,
    v: Agent,
) -> Configuration {
    let (qu, qv) = protocol.delta(u, v);
    let mut agents = c.agents.clone();
    let iu = agents
        .iter()
        .position(|a| *a == u)
        .expect("initiator present");
    agents[iu].state = qu;
    let iv = agents
        .iter()
        .enumerate()
        .position(|(i, a)| i != iu && *a == v)
        .expect("responder present");
    agents[iv].state = qv;
    Configuration::new(agents)
}

/// Ordered pairs of distinct agents, collapsed by anonymity.
pub fn interactions(c: &Configuration) -> Vec<(Agent, Agent)> {
    let groups = c.groups();
    let mut out = Vec::new();
    for &(u, nu) in &groups {
        for &(v, _) in &groups {
            if u != v || nu >= 2 {
                out.push((u, v));
            }
        }
    }
    out
}

/// Configurations reachable by one interaction.
pub fn successors(protocol: &dyn Protocol, c: &Configuration) -> BTreeSet<Configuration> {
    interactions(c)
        .into_iter()
        .map(|(u, v)| interact_unchecked(protocol, c, u, v))
        .collect()
}

/// The common output of all agents, if they agree.
pub fn config_output(protocol: &dyn Protocol, c: &Configuration) -> Option<usize> {
    let mut outputs = c.agents.iter().map(|a| protocol.output(a.state));
    let first = outputs.next()?;
    outputs.all(|y| y == first).then_some(first)
}

/// True if every configuration reachable from `c` (including `c`) has the
/// same uniform output. `None` when more than `budget` configurations would
/// have to be explored.
pub fn is_stably_converged(
    protocol: &dyn Protocol,
    c: &Configuration,
    budget: usize,
) -> Option<bool> {
    let Some(y) = config_output(protocol, c) else {
        return Some(false);
    };
    let mut seen: HashSet<Configuration> = HashSet::from([c.clone()]);
    let mut queue = VecDeque::from([c.clone()]);
    while let Some(x) = queue.pop_front() {
        for s in successors(protocol, &x) {
            if seen.contains(&s) {
                continue;
            }
            if config_output(protocol, &s) != Some(y) {
                return Some(false);
            }
            if seen.len() >= budget {
                return None;
            }
            seen.insert(s.clone());
            queue.push_back(s);
        }
    }
    Some(true)
}

/// A configuration drawn uniformly over `Q` for every agent of `a`.
pub fn random_configuration(
    protocol: &dyn Protocol,
    a: &Multiset,
    rng: &mut ChaCha8Rng,
) -> Result<Configuration> {
    check_alphabet(protocol, a)?;
    let q = protocol.num_states();
    Ok(Configuration::new(
        a.indices()
            .map(|s| Agent::new(rng.gen_range(0..q), s))
            .collect(),
    ))
}

/// Agent-indexed execution driven by the uniform random scheduler.
pub struct Simulator<'p> {
    protocol: &'p dyn Protocol,
    agents: Vec<Agent>,
    rng: ChaCha8Rng,
    steps: u64,
}

impl<'p> Simulator<'p> {
    pub fn new(protocol: &'p dyn Protocol, start: &Configuration, seed: u64) -> Self {
        Self {
            protocol,
            agents: start.agents().to_vec(),
            rng: ChaCha8Rng::seed_from_u64(seed),
            steps: 0,
        }
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    pub fn configuration(&self) -> Configuration {
        Configuration::new(self.agents.clone())
    }

    /// The uniform output of the current agents, if any.
    pub fn output(&self) -> Option<usize> {
        let mut it = self.agents.iter().map(|a| self.protocol.output(a.state));
        let first = it.next()?;
        it.all(|y| y == first).then_some(first)
    }

    /// Performs one interaction. Returns `None` when fewer than two agents
    /// exist.
    pub fn step(&mut self) -> Option<(Agent, Agent)> {
        let n = self.agents.len();
        if n < 2 {
            return None;
        }
        let i = self.rng.gen_range(0..n);
        let mut j = self.rng.gen_range(0..n - 1);
        if j >= i {
            j += 1;
        }
        let (u, v) = (self.agents[i], self.agents[j]);
        let (qu, qv) = self.protocol.delta(u, v);
        self.agents[i].state = qu;
        self.agents[j].state = qv;
        self.steps += 1;
        Some((u, v))
    }
}

/// How a trace ended.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TraceStatus {
    /// Exhaustive search from the configuration at `step` found only
    /// configurations with the same uniform output.
    ConvergedDetected { step: u64 },
    /// The step cap was reached.
    StepCap,
    /// No interaction is possible (fewer than two agents).
    NoInteractions,
}

impl fmt::Display for TraceStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TraceStatus::ConvergedDetected { step } => {
                write!(f, "converged-detected at step {step}")
            }
            TraceStatus::StepCap => f.write_str("step-cap"),
            TraceStatus::NoInteractions => f.write_str("no-interactions"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TraceStep {
    pub initiator: Agent,
    pub responder: Agent,
    pub configuration: Configuration,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Trace {
    pub initial: Configuration,
    pub steps: Vec<TraceStep>,
    pub status: TraceStatus,
}

impl Trace {
    /// One line per configuration: `step=<k> | <count>x(<state>,<input>) …`.
    pub fn render(&self, protocol: &dyn Protocol) -> String {
        let mut s = format!("step=0 | {}\n", self.initial.render(protocol));
        for (k, st) in self.steps.iter().enumerate() {
            let _ = writeln!(s, "step={} | {}", k + 1, st.configuration.render(protocol));
        }
        s
    }

    pub fn last(&self) -> &Configuration {
        self.steps
            .last()
            .map_or(&self.initial, |s| &s.configuration)
    }
}

#[derive(Clone, Copy, Debug)]
pub struct SimulateOptions {
    pub seed: u64,
    pub max_steps: u64,
    /// Configuration budget for the convergence check; `None` disables it.
    pub detect_convergence: Option<usize>,
}

/// Runs up to `max_steps` random interactions and records every
/// configuration. With convergence detection on, the run stops at the first
/// configuration whose whole reachable set has one uniform output; the check
/// runs whenever the output becomes uniform.
pub fn simulate(protocol: &dyn Protocol, start: &Configuration, opts: SimulateOptions) -> Trace {
    let mut sim = Simulator::new(protocol, start, opts.seed);
    let mut steps = Vec::new();
    let converged_here = |c: &Configuration| {
        opts.detect_convergence
            .is_some_and(|budget| is_stably_converged(protocol, c, budget) == Some(true))
    };
    if converged_here(start) {
        return Trace {
            initial: start.clone(),
            steps,
            status: TraceStatus::ConvergedDetected { step: 0 },
        };
    }
    if start.size() < 2 {
        return Trace {
            initial: start.clone(),
            steps,
            status: TraceStatus::NoInteractions,
        };
    }
    let mut was_uniform = sim.output().is_some();
    let mut status = TraceStatus::StepCap;
    while sim.steps() < opts.max_steps {
        let (u, v) = sim.step().expect("at least two agents");
        let configuration = sim.configuration();
        let uniform = sim.output().is_some();
        let check = uniform && !was_uniform && converged_here(&configuration);
        was_uniform = uniform;
        steps.push(TraceStep {
            initiator: u,
            responder: v,
            configuration,
        });
        if check {
            status = TraceStatus::ConvergedDetected { step: sim.steps() };
            break;
        }
    }
    Trace {
        initial: start.clone(),
        steps,
        status,
    }
}

/// A protocol given by explicit tables. Transitions absent from the table
/// leave both agents unchanged.
#[derive(Clone, Debug)]
pub struct TableProtocol {
    alphabet: Alphabet,
    outputs: OutputAlphabet,
    names: Vec<String>,
    state_outputs: Vec<usize>,
    input_states: Vec<StateId>,
    transitions: std::collections::BTreeMap<(Agent, Agent), (StateId, StateId)>,
}

impl TableProtocol {
    pub fn new(
        alphabet: &Alphabet,
        outputs: &OutputAlphabet,
        names: Vec<String>,
        state_outputs: Vec<usize>,
        input_states: Vec<StateId>,
    ) -> Result<Self> {
        if names.is_empty() {
            return Err(Error::Input("protocol has no states".into()));
        }
        if state_outputs.len() != names.len() {
            return Err(Error::Input("every state needs exactly one output".into()));
        }
        if let Some(&y) = state_outputs.iter().find(|&&y| y >= outputs.len()) {
            return Err(Error::Input(format!("output index {y} out of range")));
        }
        if input_states.len() != alphabet.len() {
            return Err(Error::Input("input map must cover every symbol".into()));
        }
        if let Some(&q) = input_states.iter().find(|&&q| q as usize >= names.len()) {
            return Err(Error::Input(format!("input state {q} out of range")));
        }
        let mut sorted = names.clone();
        sorted.sort();
        if let Some(w) = sorted.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::Input(format!("duplicate state name `{}`", w[0])));
        }
        Ok(Self {
            alphabet: alphabet.clone(),
            outputs: outputs.clone(),
            names,
            state_outputs,
            input_states,
            transitions: Default::default(),
        })
    }

    /// Single-state protocol that always outputs `output`.
    pub fn constant(alphabet: &Alphabet, outputs: &OutputAlphabet, output: usize) -> Result<Self> {
        Self::new(
            alphabet,
            outputs,
            vec!["q".into()],
            vec![output],
            vec![0; alphabet.len()],
        )
    }

    pub fn set_transition(
        &mut self,
        initiator: Agent,
        responder: Agent,
        result: (StateId, StateId),
    ) -> Result<()> {
        let n = self.names.len() as u32;
        let inputs = self.alphabet.len();
        for a in [initiator, responder] {
            if a.state >= n || a.input() >= inputs {
                return Err(Error::Input(format!("agent {a:?} out of range")));
            }
        }
        if result.0 >= n || result.1 >= n {
            return Err(Error::Input(format!(
                "transition result {result:?} out of range"
            )));
        }
        if result == (initiator.state, responder.state) {
            self.transitions.remove(&(initiator, responder));
        } else {
            self.transitions.insert((initiator, responder), result);
        }
        Ok(())
    }

    /// Tabulates any protocol.
    pub fn tabulate(protocol: &dyn Protocol) -> Result<Self> {
        let n = protocol.num_states();
        let names = (0..n).map(|q| protocol.state_name(q)).collect();
        let state_outputs = (0..n).map(|q| protocol.output(q)).collect();
        let input_states = (0..protocol.alphabet().len())
            .map(|s| protocol.input_state(s))
            .collect();
        let mut t = Self::new(
            protocol.alphabet(),
            protocol.outputs(),
            names,
            state_outputs,
            input_states,
        )?;
        let inputs = protocol.alphabet().len();
        for qu in 0..n {
            for su in 0..inputs {
                for qv in 0..n {
                    for sv in 0..inputs {
                        let (u, v) = (Agent::new(qu, su), Agent::new(qv, sv));
                        let r = protocol.delta(u, v);
                        if r != (qu, qv) {
                            t.transitions.insert((u, v), r);
                        }
                    }
                }
            }
        }
        Ok(t)
    }

    /// Non-identity transitions in canonical order.
    pub fn transitions(&self) -> impl Iterator<Item = (Agent, Agent, StateId, StateId)> + '_ {
        self.transitions
            .iter()
            .map(|(&(u, v), &(a, b))| (u, v, a, b))
    }

    pub fn state_index(&self, name: &str) -> Option<StateId> {
        self.names
            .iter()
            .position(|n| n == name)
            .map(|i| i as StateId)
    }
}

impl Protocol for TableProtocol {
    fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    fn outputs(&self) -> &OutputAlphabet {
        &self.outputs
    }

    fn num_states(&self) -> u32 {
        self.names.len() as u32
    }

    fn state_name(&self, state: StateId) -> String {
        self.names[state as usize].clone()
    }

    fn input_state(&self, symbol: usize) -> StateId {
        self.input_states[symbol]
    }

    fn output(&self, state: StateId) -> usize {
        self.state_outputs[state as usize]
    }

    fn delta(&self, initiator: Agent, responder: Agent) -> (StateId, StateId) {
        self.transitions
            .get(&(initiator, responder))
            .copied()
            .unwrap_or((initiator.state, responder.state))
    }
}
