//! Dense numbering of anonymous configurations.
//!
//! Agents are grouped into slots; every agent in a slot has the same input
//! and agents within a slot are interchangeable. The states of one slot form
//! a multiset of size `k` over `q` states, numbered with the combinatorial
//! number system: the sorted states `s_0 ≤ … ≤ s_{k−1}` map to the strictly
//! increasing `c_i = s_i + i` and to rank `Σ C(c_i, i + 1)`. A configuration
//! id is the mixed-radix combination of its slot ranks.

use crate::engine::{Agent, Configuration, Protocol, StateId};
use crate::error::{Error, Result};
use crate::multiset::Multiset;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Slot {
    pub symbol: usize,
    pub size: usize,
}

/// All configurations of a fixed slot layout over `q` states.
#[derive(Clone, Debug)]
pub struct ConfigSpace {
    states: u32,
    slots: Vec<Slot>,
    starts: Vec<usize>,
    strides: Vec<u64>,
    total: u64,
    /// `binom[i][c] = C(c, i + 1)` for `c < states + max_size`.
    binom: Vec<Vec<u64>>,
    agents: usize,
}

fn multiset_count(states: u128, size: u128) -> Option<u128> {
    // C(states + size − 1, size), computed incrementally.
    let mut acc: u128 = 1;
    for i in 0..size {
        acc = acc.checked_mul(states + i)? / (i + 1);
    }
    Some(acc)
}

impl ConfigSpace {
    /// Lays out a space, refusing if it has more than `budget` nodes.
    pub fn new(states: u32, slots: Vec<Slot>, budget: u64) -> Result<Self> {
        if states == 0 {
            return Err(Error::Input("protocol has no states".into()));
        }
        let mut total: Option<u128> = Some(1);
        for s in &slots {
            total =
                total.and_then(|t| t.checked_mul(multiset_count(states as u128, s.size as u128)?));
        }
        let budget = budget.min(u32::MAX as u64);
        match total {
            Some(t) if t <= budget as u128 => {}
            Some(t) => {
                return Err(Error::Resource(format!(
                    "configuration graph would have {t} nodes; the budget is {budget}"
                )))
            }
            None => {
                return Err(Error::Resource(format!(
                    "configuration graph would have more than 2^128 nodes; the budget is {budget}"
                )))
            }
        }
        let max_size = slots.iter().map(|s| s.size).max().unwrap_or(0);
        let width = states as usize + max_size;
        let mut binom = vec![vec![0u64; width]; max_size];
        for (i, row) in binom.iter_mut().enumerate() {
            let r = i as u128 + 1;
            for (c, cell) in row.iter_mut().enumerate() {
                let c = c as u128;
                if c >= r {
                    // Only entries reachable by ranks are bounded by the
                    // budget; saturate the rest.
                    *cell = multiset_count(c - r + 1, r)
                        .map_or(u64::MAX, |v| v.min(u64::MAX as u128) as u64);
                }
            }
        }
        let mut strides = Vec::with_capacity(slots.len());
        let mut starts = Vec::with_capacity(slots.len());
        let mut stride = 1u64;
        let mut start = 0;
        for s in &slots {
            strides.push(stride);
            starts.push(start);
            start += s.size;
            stride *= multiset_count(states as u128, s.size as u128).expect("checked") as u64;
        }
        Ok(Self {
            states,
            agents: start,
            slots,
            starts,
            strides,
            total: stride,
            binom,
        })
    }

    /// One slot per input symbol occurring in `a`.
    pub fn for_input(states: u32, a: &Multiset, budget: u64) -> Result<Self> {
        let slots = a
            .counts()
            .iter()
            .enumerate()
            .filter(|(_, &c)| c > 0)
            .map(|(symbol, &c)| Slot {
                symbol,
                size: c as usize,
            })
            .collect();
        Self::new(states, slots, budget)
    }

    pub fn len(&self) -> u64 {
        self.total
    }

    pub fn is_empty(&self) -> bool {
        self.total == 0
    }

    pub fn agents(&self) -> usize {
        self.agents
    }

    pub fn slots(&self) -> &[Slot] {
        &self.slots
    }

    pub fn states(&self) -> u32 {
        self.states
    }

    /// Writes the states of configuration `id`, slot by slot, each slot
    /// sorted ascending.
    pub fn decode(&self, id: u64, out: &mut Vec<StateId>) {
        out.clear();
        out.resize(self.agents, 0);
        let mut rest = id;
        for (si, slot) in self.slots.iter().enumerate() {
            let radix = if si + 1 < self.slots.len() {
                self.strides[si + 1] / self.strides[si]
            } else {
                self.total / self.strides[si]
            };
            let mut r = rest % radix;
            rest /= radix;
            let base = self.starts[si];
            for i in (0..slot.size).rev() {
                let row = &self.binom[i];
                // Largest c in [i, i + states) with C(c, i + 1) ≤ r.
                let (mut lo, mut hi) = (i, i + self.states as usize - 1);
                while lo < hi {
                    let mid = (lo + hi).div_ceil(2);
                    if row[mid] <= r {
                        lo = mid;
                    } else {
                        hi = mid - 1;
                    }
                }
                r -= row[lo];
                out[base + i] = (lo - i) as StateId;
            }
        }
    }

    /// Inverse of [`ConfigSpace::decode`]; each slot of `states` must be
    /// sorted.
    pub fn encode(&self, states: &[StateId]) -> u64 {
        let mut id = 0;
        for (si, slot) in self.slots.iter().enumerate() {
            let base = self.starts[si];
            let rank: u64 = (0..slot.size)
                .map(|i| self.binom[i][states[base + i] as usize + i])
                .sum();
            id += rank * self.strides[si];
        }
        id
    }

    pub fn slot_of(&self, position: usize) -> usize {
        self.starts.partition_point(|&s| s <= position) - 1
    }

    pub fn agent_at(&self, states: &[StateId], position: usize) -> Agent {
        Agent::new(states[position], self.slots[self.slot_of(position)].symbol)
    }

    pub fn configuration(&self, states: &[StateId]) -> Configuration {
        Configuration::new((0..self.agents).map(|p| self.agent_at(states, p)).collect())
    }

    /// Id of an anonymous configuration in a space with one slot per symbol.
    pub fn index_of(&self, c: &Configuration) -> Option<u64> {
        let mut states = vec![0; self.agents];
        let mut fill = self.starts.clone();
        for a in c.agents() {
            let si = self.slots.iter().position(|s| s.symbol == a.input())?;
            if fill[si] >= self.starts[si] + self.slots[si].size || a.state >= self.states {
                return None;
            }
            states[fill[si]] = a.state;
            fill[si] += 1;
        }
        if fill
            .iter()
            .zip(&self.starts)
            .zip(&self.slots)
            .any(|((f, s), sl)| f - s != sl.size)
        {
            return None;
        }
        Some(self.encode(&states))
    }

    /// Calls `f(target, initiator, responder)` for every ordered pair of
    /// distinct agents, collapsing interchangeable agents.
    pub fn for_each_successor(
        &self,
        protocol: &dyn Protocol,
        states: &[StateId],
        scratch: &mut Vec<StateId>,
        mut f: impl FnMut(u64, Agent, Agent),
    ) {
        let n = self.agents;
        // First position of each run of equal states within a slot.
        let leaders: Vec<usize> = (0..n)
            .filter(|&p| {
                p == 0 || self.slot_of(p) != self.slot_of(p - 1) || states[p] != states[p - 1]
            })
            .collect();
        for &pu in &leaders {
            for &pv in &leaders {
                let pv = if pu == pv {
                    let next = pu + 1;
                    if next < n
                        && self.slot_of(next) == self.slot_of(pu)
                        && states[next] == states[pu]
                    {
                        next
                    } else {
                        continue;
                    }
                } else {
                    pv
                };
                let (u, v) = (self.agent_at(states, pu), self.agent_at(states, pv));
                let (qu, qv) = protocol.delta(u, v);
                scratch.clear();
                scratch.extend_from_slice(states);
                scratch[pu] = qu;
                scratch[pv] = qv;
                for p in [pu, pv] {
                    let si = self.slot_of(p);
                    let range = self.starts[si]..self.starts[si] + self.slots[si].size;
                    scratch[range].sort_unstable();
                }
                f(self.encode(scratch), u, v);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Every sorted state vector for the slot layout, by recursion.
    fn enumerate(states: u32, sizes: &[usize]) -> Vec<Vec<StateId>> {
        fn slot(states: u32, size: usize, min: u32) -> Vec<Vec<StateId>> {
            if size == 0 {
                return vec![vec![]];
            }
            (min..states)
                .flat_map(|s| {
                    slot(states, size - 1, s).into_iter().map(move |mut rest| {
                        rest.insert(0, s);
                        rest
                    })
                })
                .collect()
        }
        sizes.iter().fold(vec![vec![]], |acc, &size| {
            acc.into_iter()
                .flat_map(|prefix| {
                    slot(states, size, 0).into_iter().map(move |s| {
                        let mut v = prefix.clone();
                        v.extend(s);
                        v
                    })
                })
                .collect()
        })
    }

    #[test]
    fn ranks_are_a_bijection() {
        for (states, sizes) in [
            (3u32, vec![2usize]),
            (4, vec![3, 1]),
            (5, vec![1, 2, 2]),
            (1, vec![3]),
        ] {
            let slots = sizes
                .iter()
                .enumerate()
                .map(|(symbol, &size)| Slot { symbol, size })
                .collect();
            let space = ConfigSpace::new(states, slots, 1 << 20).unwrap();
            let all = enumerate(states, &sizes);
            assert_eq!(space.len(), all.len() as u64);
            let mut seen = vec![false; all.len()];
            let mut buf = Vec::new();
            for v in &all {
                let id = space.encode(v);
                assert!(!seen[id as usize]);
                seen[id as usize] = true;
                space.decode(id, &mut buf);
                assert_eq!(&buf, v);
            }
        }
    }

    #[test]
    fn stars_and_bars_counts() {
        let space = ConfigSpace::new(
            32,
            vec![Slot { symbol: 0, size: 2 }, Slot { symbol: 1, size: 1 }],
            u64::MAX,
        )
        .unwrap();
        // C(33, 2) · 32
        assert_eq!(space.len(), 528 * 32);
        assert!(matches!(
            ConfigSpace::new(1000, vec![Slot { symbol: 0, size: 4 }], 1_000_000),
            Err(Error::Resource(_))
        ));
    }
}
