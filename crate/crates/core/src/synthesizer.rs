//! The self-stabilizing protocol built from a root set.
//!
//! Each agent carries three components:
//!
//! * `count ∈ {0, …, M−1}`: when two agents with the same input and the
//!   same count meet, the responder increments its count modulo `M`, the
//!   largest multiplicity of any symbol in any root.
//! * `has_more`: one bit string per ordered root pair `(i, j)`, with one bit
//!   per symbol of `MORE_{i,j}` (the symbols strictly more frequent in `R_j`
//!   than in `R_i`, defined only when `f(R_i) ≠ f(R_j)`). Interacting agents
//!   OR their tables, and each ORs in its own indicator: the bit for `σ` in
//!   `(i, j)` is raised when the agent has input `σ` and
//!   `count ≥ m_{R_j}(σ) − 1`.
//! * `root`: the index of the root whose output the agent reports. It
//!   advances (mod `|R|`) as soon as some non-empty row `(root, j)` of the
//!   agent's table is all ones, and the advancing agent is reset to
//!   `count = 0` with a table holding only its own indicator for
//!   `count = 0`.
//!
//! Within one interaction the indicator sees the post-increment counts and
//! the root rule sees the post-OR tables.

use std::fmt::Write as _;

use crate::engine::{Agent, Protocol, StateId};
use crate::error::{Error, Result};
use crate::funcspec::{
    check_subset_closed, induced_outputs, spec_root_set, FunctionSpec, OutputAlphabet,
};
use crate::multiset::Alphabet;
use crate::rootset::{max_multiplicity, RootSet};

/// Largest supported total number of `has_more` bits.
pub const MAX_TABLE_BITS: u32 = 32;

/// `MORE_{i,j}` for every ordered root pair, with a bit layout for the
/// `has_more` table.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MoreTable {
    roots: usize,
    entries: Vec<Vec<usize>>,
    offsets: Vec<u32>,
    total_bits: u32,
}

impl MoreTable {
    pub fn root_count(&self) -> usize {
        self.roots
    }

    /// Symbol indices of `MORE_{i,j}` in alphabet order.
    pub fn entry(&self, i: usize, j: usize) -> &[usize] {
        &self.entries[i * self.roots + j]
    }

    pub fn total_bits(&self) -> u32 {
        self.total_bits
    }

    /// Bit position of the `k`-th symbol of `MORE_{i,j}`.
    pub fn bit(&self, i: usize, j: usize, k: usize) -> u32 {
        self.offsets[i * self.roots + j] + k as u32
    }

    /// Mask covering all bits of entry `(i, j)`.
    pub fn entry_mask(&self, i: usize, j: usize) -> u64 {
        let len = self.entry(i, j).len() as u32;
        ((1u64 << len) - 1) << self.offsets[i * self.roots + j]
    }

    /// The bits of entry `(i, j)` as a `0`/`1` string, `k = 0` first.
    pub fn entry_bits(&self, table: u64, i: usize, j: usize) -> String {
        (0..self.entry(i, j).len())
            .map(|k| {
                if table >> self.bit(i, j, k) & 1 == 1 {
                    '1'
                } else {
                    '0'
                }
            })
            .collect()
    }

    /// Non-empty entries in row-major order, joined by `.`; `-` when the
    /// table has no bits.
    pub fn render(&self, table: u64) -> String {
        let parts: Vec<String> = (0..self.roots)
            .flat_map(|i| (0..self.roots).map(move |j| (i, j)))
            .filter(|&(i, j)| !self.entry(i, j).is_empty())
            .map(|(i, j)| self.entry_bits(table, i, j))
            .collect();
        if parts.is_empty() {
            "-".into()
        } else {
            parts.join(".")
        }
    }
}

/// Builds `MORE_{i,j}` from the root outputs.
pub fn build_more_table(root_outputs: &[usize], rs: &RootSet) -> Result<MoreTable> {
    let k = rs.len();
    if root_outputs.len() != k {
        return Err(Error::Input(format!(
            "{} root outputs for {} roots",
            root_outputs.len(),
            k
        )));
    }
    let symbols = rs.domain().alphabet().len();
    let mut entries = Vec::with_capacity(k * k);
    let mut offsets = Vec::with_capacity(k * k);
    let mut total_bits = 0u32;
    for i in 0..k {
        for j in 0..k {
            let entry: Vec<usize> = if root_outputs[i] != root_outputs[j] {
                (0..symbols)
                    .filter(|&s| rs.root(i).count_at(s) < rs.root(j).count_at(s))
                    .collect()
            } else {
                Vec::new()
            };
            if root_outputs[i] != root_outputs[j] && entry.is_empty() {
                return Err(Error::Internal(format!(
                    "MORE({i},{j}) is empty although the outputs differ; {{{}}} ⊆ {{{}}} so the root set is not minimal",
                    rs.root(j),
                    rs.root(i)
                )));
            }
            offsets.push(total_bits);
            total_bits += entry.len() as u32;
            entries.push(entry);
        }
    }
    if total_bits > MAX_TABLE_BITS {
        return Err(Error::Resource(format!(
            "has_more table needs {total_bits} bits; at most {MAX_TABLE_BITS} are supported"
        )));
    }
    Ok(MoreTable {
        roots: k,
        entries,
        offsets,
        total_bits,
    })
}

/// Indicator table for an agent with the given count and input: bit
/// `(i, j, k)` is set iff `sigma` is the `k`-th symbol of `MORE_{i,j}` and
/// `count ≥ m_{R_j}(sigma) − 1`.
pub fn indicator(mt: &MoreTable, rs: &RootSet, count: u32, sigma: usize) -> u64 {
    let mut table = 0u64;
    for i in 0..mt.roots {
        for j in 0..mt.roots {
            for (k, &s) in mt.entry(i, j).iter().enumerate() {
                if s == sigma && count + 1 >= rs.root(j).count_at(s) {
                    table |= 1 << mt.bit(i, j, k);
                }
            }
        }
    }
    table
}

/// Same input and same count: the responder increments modulo `m`.
pub fn symbol_count_step(
    count1: u32,
    count2: u32,
    sigma1: usize,
    sigma2: usize,
    m: u32,
) -> (u32, u32) {
    if sigma1 == sigma2 && count1 == count2 {
        (count1, (count2 + 1) % m)
    } else {
        (count1, count2)
    }
}

/// Both agents take the OR of the two tables, each also ORing its own
/// indicator for the given (post-increment) count and input.
pub fn wrong_output_step(
    mt: &MoreTable,
    rs: &RootSet,
    tables: (u64, u64),
    counts: (u32, u32),
    sigmas: (usize, usize),
) -> Result<(u64, u64)> {
    let limit = if mt.total_bits == 64 {
        u64::MAX
    } else {
        (1u64 << mt.total_bits) - 1
    };
    if tables.0 & !limit != 0 || tables.1 & !limit != 0 {
        return Err(Error::Internal(
            "has_more table does not match the MORE layout".into(),
        ));
    }
    let joined = tables.0 | tables.1;
    Ok((
        joined | indicator(mt, rs, counts.0, sigmas.0),
        joined | indicator(mt, rs, counts.1, sigmas.1),
    ))
}

/// Advances `root` (mod `k`) if some non-empty entry `(root, j)` of `table`
/// is all ones.
pub fn root_output_step(mt: &MoreTable, root: usize, table: u64, k: usize) -> usize {
    if row_triggers(mt, root, table, true) {
        (root + 1) % k
    } else {
        root
    }
}

fn row_triggers(mt: &MoreTable, root: usize, table: u64, require_nonempty: bool) -> bool {
    (0..mt.roots).any(|j| {
        let mask = mt.entry_mask(root, j);
        if mt.entry(root, j).is_empty() {
            !require_nonempty
        } else {
            table & mask == mask
        }
    })
}

/// Which parts of the construction are active. Everything is on in the
/// real protocol; the switches exist to show each part is needed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Rules {
    pub reset: bool,
    pub indicator: bool,
    pub nonempty_guard: bool,
    /// A reset agent ORs in its own indicator for `count = 0` instead of
    /// keeping an all-zero table.
    pub indicator_after_reset: bool,
}

impl Rules {
    pub const FULL: Rules = Rules {
        reset: true,
        indicator: true,
        nonempty_guard: true,
        indicator_after_reset: true,
    };

    /// Reset leaves an all-zero table. This variant is not self-stabilizing
    /// in general.
    pub const ZERO_RESET: Rules = Rules {
        indicator_after_reset: false,
        ..Rules::FULL
    };
}

impl Default for Rules {
    fn default() -> Self {
        Self::FULL
    }
}

/// Decoded agent state.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct SsState {
    pub count: u32,
    pub has_more: u64,
    pub root: usize,
}

/// The synthesized protocol.
#[derive(Clone, Debug)]
pub struct SsProtocol {
    alphabet: Alphabet,
    outputs: OutputAlphabet,
    roots: RootSet,
    root_outputs: Vec<usize>,
    more: MoreTable,
    modulus: u32,
    rules: Rules,
    /// `indicator(count, σ)` for every count and symbol.
    indicators: Vec<u64>,
}

impl SsProtocol {
    /// Builds the protocol from a root set and its outputs.
    pub fn from_roots(
        outputs: &OutputAlphabet,
        roots: &RootSet,
        root_outputs: Vec<usize>,
        rules: Rules,
    ) -> Result<Self> {
        if roots.is_empty() {
            return Err(Error::Input("root set is empty".into()));
        }
        let more = build_more_table(&root_outputs, roots)?;
        let modulus = max_multiplicity(roots).max(1);
        let states = (modulus as u64) << more.total_bits;
        let states = states
            .checked_mul(roots.len() as u64)
            .filter(|&n| n <= u32::MAX as u64);
        if states.is_none() {
            return Err(Error::Resource(
                "synthesized state space exceeds 2^32 states".into(),
            ));
        }
        let symbols = roots.domain().alphabet().len();
        let indicators = (0..modulus)
            .flat_map(|c| (0..symbols).map(move |s| (c, s)))
            .map(|(c, s)| indicator(&more, roots, c, s))
            .collect();
        Ok(Self {
            alphabet: roots.domain().alphabet().clone(),
            outputs: outputs.clone(),
            roots: roots.clone(),
            root_outputs,
            more,
            modulus,
            rules,
            indicators,
        })
    }

    pub fn roots(&self) -> &RootSet {
        &self.roots
    }

    pub fn root_outputs(&self) -> &[usize] {
        &self.root_outputs
    }

    pub fn more_table(&self) -> &MoreTable {
        &self.more
    }

    /// `M`, the count modulus.
    pub fn modulus(&self) -> u32 {
        self.modulus
    }

    pub fn rules(&self) -> Rules {
        self.rules
    }

    /// Same protocol with different rules.
    pub fn with_rules(&self, rules: Rules) -> Self {
        Self {
            rules,
            ..self.clone()
        }
    }

    pub fn encode(&self, s: SsState) -> StateId {
        let per_root = (self.modulus as u64) << self.more.total_bits;
        (s.root as u64 * per_root + s.has_more * self.modulus as u64 + s.count as u64) as StateId
    }

    pub fn decode(&self, q: StateId) -> SsState {
        let q = q as u64;
        let m = self.modulus as u64;
        let per_root = m << self.more.total_bits;
        SsState {
            root: (q / per_root) as usize,
            has_more: (q % per_root) / m,
            count: (q % m) as u32,
        }
    }

    fn indicator_of(&self, count: u32, sigma: usize) -> u64 {
        if self.rules.indicator {
            self.indicators[count as usize * self.alphabet.len() + sigma]
        } else {
            0
        }
    }

    fn reset_table(&self, sigma: usize) -> u64 {
        if self.rules.indicator_after_reset {
            self.indicator_of(0, sigma)
        } else {
            0
        }
    }

    /// True for `count = 0` with a table holding at most the bits a reset
    /// agent with input `sigma` starts with.
    pub fn is_reset(&self, state: SsState, sigma: usize) -> bool {
        state.count == 0 && state.has_more & !self.reset_table(sigma) == 0
    }

    fn advances(&self, root: usize, table: u64) -> bool {
        row_triggers(&self.more, root, table, self.rules.nonempty_guard)
    }
}

impl Protocol for SsProtocol {
    fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    fn outputs(&self) -> &OutputAlphabet {
        &self.outputs
    }

    fn num_states(&self) -> u32 {
        ((self.modulus as u64) << self.more.total_bits) as u32 * self.roots.len() as u32
    }

    fn state_name(&self, state: StateId) -> String {
        let s = self.decode(state);
        let mut name = String::new();
        let _ = write!(
            name,
            "count={};hm={};root={}",
            s.count,
            self.more.render(s.has_more),
            s.root
        );
        name
    }

    fn input_state(&self, _symbol: usize) -> StateId {
        0
    }

    fn output(&self, state: StateId) -> usize {
        self.root_outputs[self.decode(state).root]
    }

    fn delta(&self, initiator: Agent, responder: Agent) -> (StateId, StateId) {
        let (u, v) = (self.decode(initiator.state), self.decode(responder.state));
        let (su, sv) = (initiator.input(), responder.input());
        let (cu, cv) = symbol_count_step(u.count, v.count, su, sv, self.modulus);
        let joined = u.has_more | v.has_more;
        let hu = joined | self.indicator_of(cu, su);
        let hv = joined | self.indicator_of(cv, sv);
        let k = self.roots.len();
        let step = |root: usize, count: u32, table: u64, sigma: usize| {
            if !self.advances(root, table) {
                SsState {
                    count,
                    has_more: table,
                    root,
                }
            } else if self.rules.reset {
                SsState {
                    count: 0,
                    has_more: self.reset_table(sigma),
                    root: (root + 1) % k,
                }
            } else {
                SsState {
                    count,
                    has_more: table,
                    root: (root + 1) % k,
                }
            }
        };
        (
            self.encode(step(u.root, cu, hu, su)),
            self.encode(step(v.root, cv, hv, sv)),
        )
    }
}

/// Builds the protocol for a subset-closed specification. Specifications
/// that fail the characterization are rejected with their witness pair.
pub fn synthesize(spec: &FunctionSpec) -> Result<SsProtocol> {
    synthesize_with(spec, Rules::FULL)
}

pub fn synthesize_with(spec: &FunctionSpec, rules: Rules) -> Result<SsProtocol> {
    check_subset_closed(spec).into_result(spec)?;
    let rs = spec_root_set(spec)?;
    let outputs = induced_outputs(spec, &rs)?;
    SsProtocol::from_roots(spec.outputs(), &rs, outputs, rules)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{apply_interaction, config_output, Configuration};
    use crate::multiset::parse_multiset;
    use proptest::prelude::*;

    fn abd() -> Alphabet {
        Alphabet::new(["a", "b", "d"]).unwrap()
    }

    fn fixture() -> FunctionSpec {
        let a = abd();
        let outs = OutputAlphabet::new(["0", "1"]).unwrap();
        FunctionSpec::explicit(
            &a,
            &outs,
            [("a a b", 1), ("a a a b", 1), ("d", 0), ("d d", 0)]
                .map(|(t, y)| (parse_multiset(t, &a).unwrap(), y)),
        )
        .unwrap()
    }

    fn fixture_more() -> (MoreTable, RootSet) {
        let rs = spec_root_set(&fixture()).unwrap();
        (build_more_table(&[1, 0], &rs).unwrap(), rs)
    }

    const A: usize = 0;
    const D: usize = 2;

    #[test]
    fn more_table_examples() {
        let (mt, rs) = fixture_more();
        assert_eq!(mt.entry(0, 1), &[D]);
        assert_eq!(mt.entry(1, 0), &[A, 1]);
        assert!(mt.entry(0, 0).is_empty() && mt.entry(1, 1).is_empty());
        assert_eq!(mt.total_bits(), 3);
        let constant = build_more_table(&[1, 1], &rs).unwrap();
        assert_eq!(constant.total_bits(), 0);
    }

    #[test]
    fn more_table_rejects_non_minimal_roots() {
        let a = abd();
        let d = crate::multiset::Domain::new(
            &a,
            [
                parse_multiset("a", &a).unwrap(),
                parse_multiset("a a", &a).unwrap(),
            ],
        )
        .unwrap();
        let rs = RootSet::from_candidate(d.members().to_vec(), &d).unwrap();
        assert!(matches!(
            build_more_table(&[0, 1], &rs),
            Err(Error::Internal(_))
        ));
    }

    #[test]
    fn indicator_examples() {
        let (mt, rs) = fixture_more();
        let t = indicator(&mt, &rs, 0, D);
        assert_eq!(t, 1 << mt.bit(0, 1, 0));
        assert_eq!(indicator(&mt, &rs, 0, A) >> mt.bit(1, 0, 0) & 1, 0);
        assert_eq!(indicator(&mt, &rs, 1, A) >> mt.bit(1, 0, 0) & 1, 1);
        let constant = build_more_table(&[1, 1], &rs).unwrap();
        assert_eq!(indicator(&constant, &rs, 1, D), 0);
    }

    #[test]
    fn symbol_count_examples() {
        assert_eq!(symbol_count_step(0, 0, A, A, 2), (0, 1));
        assert_eq!(symbol_count_step(1, 1, A, A, 2), (1, 0));
        assert_eq!(symbol_count_step(0, 0, A, 1, 2), (0, 0));
        assert_eq!(symbol_count_step(0, 1, A, A, 2), (0, 1));
    }

    #[test]
    fn wrong_output_examples() {
        let (mt, rs) = fixture_more();
        assert_eq!(
            wrong_output_step(&mt, &rs, (0, 0), (0, 0), (A, A)).unwrap(),
            (0, 0)
        );
        let bit = 1u64 << mt.bit(0, 1, 0);
        assert_eq!(
            wrong_output_step(&mt, &rs, (bit, 0), (0, 0), (A, A)).unwrap(),
            (bit, bit)
        );
        let (hu, hv) = wrong_output_step(&mt, &rs, (0, 0), (0, 0), (D, A)).unwrap();
        assert_eq!((hu, hv), (bit, 0));
        assert!(wrong_output_step(&mt, &rs, (1 << 40, 0), (0, 0), (A, A)).is_err());
    }

    #[test]
    fn root_output_examples() {
        let (mt, _) = fixture_more();
        let bit = 1u64 << mt.bit(0, 1, 0);
        assert_eq!(mt.entry_bits(bit, 0, 1), "1");
        assert_eq!(root_output_step(&mt, 0, bit, 2), 1);
        assert_eq!(root_output_step(&mt, 0, 0, 2), 0);
        assert_eq!(root_output_step(&mt, 1, mt.entry_mask(1, 0), 2), 0);
        assert_eq!(root_output_step(&mt, 1, 1 << mt.bit(1, 0, 0), 2), 1);
    }

    #[test]
    fn synthesized_state_count() {
        let p = synthesize(&fixture()).unwrap();
        assert_eq!(p.num_states(), 2 * 8 * 2);
        assert_eq!(p.modulus(), 2);
        assert_eq!(p.state_name(0), "count=0;hm=0.00;root=0");
        let last = p.num_states() - 1;
        assert_eq!(p.state_name(last), "count=1;hm=1.11;root=1");
    }

    #[test]
    fn constant_function_is_already_converged() {
        let a = abd();
        let outs = OutputAlphabet::new(["0", "1"]).unwrap();
        let spec = FunctionSpec::explicit(
            &a,
            &outs,
            [("a", 1), ("b d", 1)].map(|(t, y)| (parse_multiset(t, &a).unwrap(), y)),
        )
        .unwrap();
        let p = synthesize(&spec).unwrap();
        assert_eq!(p.more_table().total_bits(), 0);
        for q in 0..p.num_states() {
            for r in 0..p.num_states() {
                let (x, y) = p.delta(Agent::new(q, 0), Agent::new(r, 2));
                assert_eq!(p.decode(x).root, p.decode(q).root);
                assert_eq!(p.decode(y).root, p.decode(r).root);
            }
        }
    }

    #[test]
    fn non_subset_closed_is_rejected() {
        let a = abd();
        let outs = OutputAlphabet::new(["0", "1"]).unwrap();
        let spec = FunctionSpec::explicit(
            &a,
            &outs,
            [("a", 0), ("a a", 1)].map(|(t, y)| (parse_multiset(t, &a).unwrap(), y)),
        )
        .unwrap();
        let err = synthesize(&spec).unwrap_err();
        assert!(matches!(err, Error::NotSubsetClosed { .. }));
        assert!(err.to_string().contains("{a} ⊆ {a a}"));
    }

    #[test]
    fn two_counting_agents() {
        let p = synthesize(&fixture()).unwrap();
        let zero = SsState {
            count: 0,
            has_more: 0,
            root: 1,
        };
        let c = Configuration::new(vec![Agent::new(p.encode(zero), A); 2]);
        let next = apply_interaction(
            &p,
            &c,
            Agent::new(p.encode(zero), A),
            Agent::new(p.encode(zero), A),
        )
        .unwrap();
        let counts: Vec<u32> = next
            .agents()
            .iter()
            .map(|a| p.decode(a.state).count)
            .collect();
        assert_eq!(counts, [0, 1]);
        // Only the incremented responder meets the `a` threshold of MORE(1,0).
        let mt = p.more_table();
        let bits: Vec<u64> = next
            .agents()
            .iter()
            .map(|a| p.decode(a.state).has_more >> mt.bit(1, 0, 0) & 1)
            .collect();
        assert_eq!(bits, [0, 1]);
        assert_eq!(config_output(&p, &next), Some(0));
    }

    #[test]
    fn reset_on_advance() {
        let p = synthesize(&fixture()).unwrap();
        let wrong = SsState {
            count: 1,
            has_more: 0,
            root: 0,
        };
        let (u, v) = p.delta(
            Agent::new(p.encode(wrong), D),
            Agent::new(p.encode(wrong), A),
        );
        let mt = p.more_table();
        // The reset table keeps the `d` agent's own indicator.
        assert_eq!(
            p.decode(u),
            SsState {
                count: 0,
                has_more: 1 << mt.bit(0, 1, 0),
                root: 1
            }
        );
        assert!(p.is_reset(p.decode(u), D));
        // The OR uses the tables from before the interaction, so the
        // responder only gains its own indicator bit and keeps its root.
        assert_eq!(
            p.decode(v),
            SsState {
                count: 1,
                has_more: 1 << mt.bit(1, 0, 0),
                root: 0
            }
        );

        let mutant = p.with_rules(Rules {
            reset: false,
            ..Rules::FULL
        });
        let (u, _) = mutant.delta(
            Agent::new(p.encode(wrong), D),
            Agent::new(p.encode(wrong), A),
        );
        let u = mutant.decode(u);
        assert_eq!(u.root, 1);
        assert_ne!(u.has_more, 0);

        let zero = p.with_rules(Rules::ZERO_RESET);
        let (u, _) = zero.delta(
            Agent::new(p.encode(wrong), D),
            Agent::new(p.encode(wrong), A),
        );
        assert_eq!(
            zero.decode(u),
            SsState {
                count: 0,
                has_more: 0,
                root: 1
            }
        );
    }

    proptest! {
        #[test]
        fn encode_decode_round_trip(q in 0u32..32) {
            let p = synthesize(&fixture()).unwrap();
            prop_assert_eq!(p.encode(p.decode(q)), q);
        }

        #[test]
        fn tables_only_grow_without_advance(q in 0u32..32, r in 0u32..32, su in 0usize..3, sv in 0usize..3) {
            let p = synthesize(&fixture()).unwrap();
            let (x, y) = p.delta(Agent::new(q, su), Agent::new(r, sv));
            for (before, after, sigma) in [(q, x, su), (r, y, sv)] {
                let (b, a) = (p.decode(before), p.decode(after));
                if a.root == b.root {
                    prop_assert_eq!(a.has_more & (p.decode(q).has_more | p.decode(r).has_more), p.decode(q).has_more | p.decode(r).has_more);
                } else {
                    prop_assert!(p.is_reset(a, sigma));
                    prop_assert_eq!(a.root, (b.root + 1) % 2);
                }
            }
        }
    }
}
