//! Explicit configuration graphs in compressed sparse row form.

use rayon::prelude::*;

use crate::engine::{Protocol, StateId};
use crate::error::Result;

use super::space::ConfigSpace;

const CHUNK: u64 = 1 << 12;

/// Every configuration of a [`ConfigSpace`] with its distinct successors.
pub struct ConfigGraph {
    pub space: ConfigSpace,
    offsets: Vec<u64>,
    targets: Vec<u32>,
}

impl ConfigGraph {
    pub fn build(protocol: &dyn Protocol, space: ConfigSpace) -> Result<Self> {
        let n = space.len();
        let chunks: Vec<(Vec<u32>, Vec<u32>)> = (0..n.div_ceil(CHUNK))
            .into_par_iter()
            .map(|c| {
                let mut degrees = Vec::new();
                let mut targets = Vec::new();
                let mut states: Vec<StateId> = Vec::new();
                let mut scratch = Vec::new();
                let mut succ = Vec::new();
                for id in c * CHUNK..((c + 1) * CHUNK).min(n) {
                    space.decode(id, &mut states);
                    succ.clear();
                    space.for_each_successor(protocol, &states, &mut scratch, |t, _, _| {
                        succ.push(t as u32)
                    });
                    succ.sort_unstable();
                    succ.dedup();
                    degrees.push(succ.len() as u32);
                    targets.extend_from_slice(&succ);
                }
                (degrees, targets)
            })
            .collect();
        let mut offsets = Vec::with_capacity(n as usize + 1);
        let mut targets = Vec::with_capacity(chunks.iter().map(|c| c.1.len()).sum());
        offsets.push(0);
        for (degrees, t) in chunks {
            for d in degrees {
                offsets.push(offsets.last().unwrap() + d as u64);
            }
            targets.extend(t);
        }
        Ok(Self {
            space,
            offsets,
            targets,
        })
    }

    pub fn nodes(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn edges(&self) -> usize {
        self.targets.len()
    }

    pub fn successors(&self, node: u32) -> &[u32] {
        let i = node as usize;
        &self.targets[self.offsets[i] as usize..self.offsets[i + 1] as usize]
    }

    /// Predecessor lists in the same layout.
    pub fn reversed(&self) -> (Vec<u64>, Vec<u32>) {
        let n = self.nodes();
        let mut indeg = vec![0u64; n + 1];
        for &t in &self.targets {
            indeg[t as usize + 1] += 1;
        }
        for i in 0..n {
            indeg[i + 1] += indeg[i];
        }
        let mut fill = indeg.clone();
        let mut sources = vec![0u32; self.targets.len()];
        for u in 0..n {
            for &t in self.successors(u as u32) {
                sources[fill[t as usize] as usize] = u as u32;
                fill[t as usize] += 1;
            }
        }
        (indeg, sources)
    }

    /// Strongly connected components by an iterative Tarjan search.
    pub fn sccs(&self) -> Components {
        const NONE: u32 = u32::MAX;
        let n = self.nodes();
        let mut index = vec![NONE; n];
        let mut low = vec![0u32; n];
        let mut on_stack = vec![false; n];
        let mut stack: Vec<u32> = Vec::new();
        let mut comp = vec![NONE; n];
        let mut count = 0u32;
        let mut next = 0u32;
        let mut calls: Vec<(u32, usize)> = Vec::new();
        for root in 0..n as u32 {
            if index[root as usize] != NONE {
                continue;
            }
            calls.push((root, 0));
            index[root as usize] = next;
            low[root as usize] = next;
            next += 1;
            stack.push(root);
            on_stack[root as usize] = true;
            while let Some(&mut (v, ref mut pos)) = calls.last_mut() {
                let succ = self.successors(v);
                if let Some(&w) = succ.get(*pos) {
                    *pos += 1;
                    let wi = w as usize;
                    if index[wi] == NONE {
                        index[wi] = next;
                        low[wi] = next;
                        next += 1;
                        stack.push(w);
                        on_stack[wi] = true;
                        calls.push((w, 0));
                    } else if on_stack[wi] {
                        low[v as usize] = low[v as usize].min(index[wi]);
                    }
                    continue;
                }
                calls.pop();
                if let Some(&(parent, _)) = calls.last() {
                    low[parent as usize] = low[parent as usize].min(low[v as usize]);
                }
                if low[v as usize] == index[v as usize] {
                    loop {
                        let w = stack.pop().expect("component on stack");
                        on_stack[w as usize] = false;
                        comp[w as usize] = count;
                        if w == v {
                            break;
                        }
                    }
                    count += 1;
                }
            }
        }
        let mut bottom = vec![true; count as usize];
        for u in 0..n as u32 {
            let cu = comp[u as usize];
            if self.successors(u).iter().any(|&w| comp[w as usize] != cu) {
                bottom[cu as usize] = false;
            }
        }
        Components { comp, bottom }
    }
}

pub struct Components {
    /// Component of each node; components are numbered in reverse
    /// topological order.
    pub comp: Vec<u32>,
    pub bottom: Vec<bool>,
}

impl Components {
    pub fn count(&self) -> usize {
        self.bottom.len()
    }

    pub fn bottom_count(&self) -> usize {
        self.bottom.iter().filter(|&&b| b).count()
    }

    pub fn is_bottom_node(&self, node: u32) -> bool {
        self.bottom[self.comp[node as usize] as usize]
    }
}
