//! Correctness properties of the synthesized protocol, checked as
//! reachability and invariant queries on explicit configuration graphs.

use std::collections::VecDeque;

use crate::engine::{Protocol, StateId};
use crate::error::{Error, Result};
use crate::funcspec::FunctionSpec;
use crate::multiset::Multiset;
use crate::synthesizer::SsProtocol;

use super::graph::ConfigGraph;
use super::space::{ConfigSpace, Slot};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LemmaReport {
    pub name: &'static str,
    pub holds: bool,
    /// Configurations examined.
    pub checked: usize,
    pub counterexample: Option<String>,
}

impl LemmaReport {
    pub fn render(&self) -> String {
        let mut s = format!(
            "{}: {} ({} configurations)",
            self.name,
            if self.holds { "holds" } else { "fails" },
            self.checked
        );
        if let Some(c) = &self.counterexample {
            s.push_str("; counterexample ");
            s.push_str(c);
        }
        s
    }
}

fn full_graph(p: &SsProtocol, a: &Multiset, budget: u64) -> Result<ConfigGraph> {
    super::build_config_graph(p, a, budget)
}

fn backward_closure(g: &ConfigGraph, seeds: impl Iterator<Item = u32>) -> Vec<bool> {
    let (offsets, sources) = g.reversed();
    let mut seen = vec![false; g.nodes()];
    let mut todo: Vec<u32> = Vec::new();
    for s in seeds {
        if !seen[s as usize] {
            seen[s as usize] = true;
            todo.push(s);
        }
    }
    while let Some(u) = todo.pop() {
        for &w in &sources[offsets[u as usize] as usize..offsets[u as usize + 1] as usize] {
            if !seen[w as usize] {
                seen[w as usize] = true;
                todo.push(w);
            }
        }
    }
    seen
}

fn forward_closure(g: &ConfigGraph, seeds: impl Iterator<Item = u32>) -> Vec<bool> {
    let mut seen = vec![false; g.nodes()];
    let mut todo: VecDeque<u32> = VecDeque::new();
    for s in seeds {
        if !seen[s as usize] {
            seen[s as usize] = true;
            todo.push_back(s);
        }
    }
    while let Some(u) = todo.pop_front() {
        for &w in g.successors(u) {
            if !seen[w as usize] {
                seen[w as usize] = true;
                todo.push_back(w);
            }
        }
    }
    seen
}

fn nodes_where(g: &ConfigGraph, mut pred: impl FnMut(&[StateId]) -> bool) -> Vec<u32> {
    let mut buf = Vec::new();
    (0..g.nodes() as u32)
        .filter(|&u| {
            g.space.decode(u as u64, &mut buf);
            pred(&buf)
        })
        .collect()
}

fn render_node(p: &SsProtocol, g: &ConfigGraph, u: u32) -> String {
    let mut buf = Vec::new();
    g.space.decode(u as u64, &mut buf);
    g.space.configuration(&buf).render(p)
}

/// For every symbol `σ` with `1 ≤ n_σ ≤ M` agents, every configuration can
/// reach one where some `σ`-agent has `count ≥ n_σ − 1`.
pub fn count_bound(p: &SsProtocol, a: &Multiset, budget: u64) -> Result<LemmaReport> {
    let g = full_graph(p, a, budget)?;
    let slots = g.space.slots().to_vec();
    let mut checked = 0;
    for (si, slot) in slots.iter().enumerate() {
        let n = slot.size as u32;
        if n > p.modulus() {
            continue;
        }
        let start: usize = slots[..si].iter().map(|s| s.size).sum();
        let targets = nodes_where(&g, |states| {
            states[start..start + slot.size]
                .iter()
                .any(|&q| p.decode(q).count + 1 >= n)
        });
        let closure = backward_closure(&g, targets.into_iter());
        checked += g.nodes();
        if let Some(u) = closure.iter().position(|&c| !c) {
            return Ok(LemmaReport {
                name: "count bound",
                holds: false,
                checked,
                counterexample: Some(format!(
                    "{} cannot reach count ≥ {} for `{}`",
                    render_node(p, &g, u as u32),
                    n - 1,
                    p.alphabet().symbol(slot.symbol)
                )),
            });
        }
    }
    Ok(LemmaReport {
        name: "count bound",
        holds: true,
        checked,
        counterexample: None,
    })
}

/// An agent whose root has the wrong output can always reach the next root,
/// and arrives there in the reset state.
///
/// One agent of each input symbol is tracked separately: it occupies its own
/// single-agent slot, so its state can be read off every configuration.
pub fn root_iteration(
    p: &SsProtocol,
    a: &Multiset,
    expected: usize,
    budget: u64,
) -> Result<LemmaReport> {
    let q = p.num_states();
    let k = p.roots().len();
    let mut checked = 0;
    for (symbol, &count) in a.counts().iter().enumerate() {
        if count == 0 {
            continue;
        }
        let mut slots = vec![Slot { symbol, size: 1 }];
        for (s, &c) in a.counts().iter().enumerate() {
            let c = if s == symbol { c - 1 } else { c };
            if c > 0 {
                slots.push(Slot {
                    symbol: s,
                    size: c as usize,
                });
            }
        }
        let g = ConfigGraph::build(p, ConfigSpace::new(q, slots, budget)?)?;
        checked += g.nodes();
        // The tracked agent is slot 0, whose rank is its state.
        let tracked = |u: u32| p.decode((u as u64 % q as u64) as StateId);
        let mut advancing = Vec::new();
        for u in 0..g.nodes() as u32 {
            let before = tracked(u);
            let mut advances = false;
            for &w in g.successors(u) {
                let after = tracked(w);
                if after.root == before.root {
                    continue;
                }
                if after.root != (before.root + 1) % k || !p.is_reset(after, symbol) {
                    return Ok(LemmaReport {
                        name: "root iteration",
                        holds: false,
                        checked,
                        counterexample: Some(format!(
                            "tracked `{}` agent moves from {} to {} without reset",
                            p.alphabet().symbol(symbol),
                            p.state_name(p.encode(before)),
                            p.state_name(p.encode(after))
                        )),
                    });
                }
                advances = true;
            }
            if advances {
                advancing.push(u);
            }
        }
        let closure = backward_closure(&g, advancing.into_iter());
        let stuck = (0..g.nodes() as u32)
            .find(|&u| p.root_outputs()[tracked(u).root] != expected && !closure[u as usize]);
        if let Some(u) = stuck {
            return Ok(LemmaReport {
                name: "root iteration",
                holds: false,
                checked,
                counterexample: Some(format!(
                    "tracked `{}` agent in {} never leaves root {}",
                    p.alphabet().symbol(symbol),
                    render_node(p, &g, u),
                    tracked(u).root
                )),
            });
        }
    }
    Ok(LemmaReport {
        name: "root iteration",
        holds: true,
        checked,
        counterexample: None,
    })
}

fn reset_starts(p: &SsProtocol, g: &ConfigGraph) -> Vec<u32> {
    let mut buf = Vec::new();
    (0..g.nodes() as u32)
        .filter(|&u| {
            g.space.decode(u as u64, &mut buf);
            (0..buf.len()).all(|pos| {
                let agent = g.space.agent_at(&buf, pos);
                p.is_reset(p.decode(agent.state), agent.input())
            })
        })
        .collect()
}

/// From all-reset configurations, an agent with input `σ` and count `c`
/// implies at least `c + 1` agents with input `σ`.
pub fn count_lower_bound(p: &SsProtocol, a: &Multiset, budget: u64) -> Result<LemmaReport> {
    let g = full_graph(p, a, budget)?;
    let reach = forward_closure(&g, reset_starts(p, &g).into_iter());
    let mut buf = Vec::new();
    let mut checked = 0;
    for u in 0..g.nodes() as u32 {
        if !reach[u as usize] {
            continue;
        }
        checked += 1;
        g.space.decode(u as u64, &mut buf);
        for pos in 0..buf.len() {
            let agent = g.space.agent_at(&buf, pos);
            let c = p.decode(agent.state).count;
            if a.count_at(agent.input()) < c + 1 {
                return Ok(LemmaReport {
                    name: "count lower bound",
                    holds: false,
                    checked,
                    counterexample: Some(format!(
                        "{} is reachable from a reset configuration",
                        g.space.configuration(&buf).render(p)
                    )),
                });
            }
        }
    }
    Ok(LemmaReport {
        name: "count lower bound",
        holds: true,
        checked,
        counterexample: None,
    })
}

/// Every bottom SCC reachable from an all-reset configuration outputs
/// `expected` everywhere.
pub fn convergence_from_reset(
    p: &SsProtocol,
    a: &Multiset,
    expected: usize,
    budget: u64,
) -> Result<LemmaReport> {
    let g = full_graph(p, a, budget)?;
    let comps = g.sccs();
    let reach = forward_closure(&g, reset_starts(p, &g).into_iter());
    let mut buf = Vec::new();
    let mut checked = 0;
    for u in 0..g.nodes() as u32 {
        if !reach[u as usize] {
            continue;
        }
        checked += 1;
        if !comps.is_bottom_node(u) {
            continue;
        }
        g.space.decode(u as u64, &mut buf);
        if buf.iter().any(|&s| p.output(s) != expected) {
            return Ok(LemmaReport {
                name: "convergence from reset",
                holds: false,
                checked,
                counterexample: Some(format!(
                    "{} lies in a reachable bottom SCC",
                    g.space.configuration(&buf).render(p)
                )),
            });
        }
    }
    Ok(LemmaReport {
        name: "convergence from reset",
        holds: true,
        checked,
        counterexample: None,
    })
}

/// All four properties on one input of `spec`.
pub fn check_all(
    p: &SsProtocol,
    spec: &FunctionSpec,
    a: &Multiset,
    budget: u64,
) -> Result<Vec<LemmaReport>> {
    let expected = super::expected_output(spec, a)?;
    if p.outputs() != spec.outputs() {
        return Err(Error::AlphabetMismatch(
            "protocol and spec outputs differ".into(),
        ));
    }
    Ok(vec![
        count_bound(p, a, budget)?,
        root_iteration(p, a, expected, budget)?,
        count_lower_bound(p, a, budget)?,
        convergence_from_reset(p, a, expected, budget)?,
    ])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::funcspec::OutputAlphabet;
    use crate::multiset::{parse_multiset, Alphabet};
    use crate::synthesizer::{synthesize, synthesize_with, Rules};

    fn fixture() -> FunctionSpec {
        let a = Alphabet::new(["a", "b", "d"]).unwrap();
        let y = OutputAlphabet::new(["0", "1"]).unwrap();
        let p = |t| parse_multiset(t, &a).unwrap();
        FunctionSpec::explicit(
            &a,
            &y,
            vec![
                (p("a a b"), 1),
                (p("a a a b"), 1),
                (p("d"), 0),
                (p("d d"), 0),
            ],
        )
        .unwrap()
    }

    #[test]
    fn lemmas_hold_on_multi_agent_members() {
        let spec = fixture();
        let p = synthesize(&spec).unwrap();
        for t in ["a a b", "d d"] {
            let a = parse_multiset(t, spec.alphabet()).unwrap();
            for r in check_all(&p, &spec, &a, 5_000_000).unwrap() {
                assert!(r.holds, "{t}: {}", r.render());
            }
        }
    }

    #[test]
    fn lone_agent_cannot_iterate_roots() {
        let spec = fixture();
        let p = synthesize(&spec).unwrap();
        let a = parse_multiset("d", spec.alphabet()).unwrap();
        let r = check_all(&p, &spec, &a, 1000).unwrap();
        let holds: Vec<bool> = r.iter().map(|r| r.holds).collect();
        assert_eq!(holds, [true, false, true, false]);
    }

    #[test]
    fn reset_mutant_breaks_root_iteration() {
        let spec = fixture();
        let p = synthesize_with(
            &spec,
            Rules {
                reset: false,
                ..Rules::FULL
            },
        )
        .unwrap();
        let a = parse_multiset("a a b", spec.alphabet()).unwrap();
        let r = root_iteration(&p, &a, 1, 5_000_000).unwrap();
        assert!(!r.holds);
    }
}
