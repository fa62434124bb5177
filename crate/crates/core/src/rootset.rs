//! Root sets: subsets of a domain that lie below every member.
//!
//! The minimal root set is exactly the set of inclusion-minimal members.
//! [`minimal_root_set`] computes it by direct filtering. [`dickson_root_set`]
//! builds a (generally larger) root set by recursing on the dimension of the
//! multiplicity vectors and then reduces it to its minimal elements; it
//! exists to cross-check the filter.

use crate::error::{Error, Result};
use crate::multiset::{Domain, Multiset};

/// An indexed antichain `R_0 … R_{k-1}` covering a domain.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RootSet {
    roots: Vec<Multiset>,
    domain: Domain,
}

impl RootSet {
    /// Wraps an arbitrary candidate subset of `domain` without checking
    /// coverage or incomparability. Used to test candidate root sets.
    pub fn from_candidate(roots: Vec<Multiset>, domain: &Domain) -> Result<Self> {
        for r in &roots {
            if !domain.contains(r) {
                return Err(Error::Input(format!(
                    "candidate root {{{r}}} is not a domain member"
                )));
            }
        }
        let mut roots = roots;
        roots.sort();
        roots.dedup();
        Ok(Self {
            roots,
            domain: domain.clone(),
        })
    }

    pub fn roots(&self) -> &[Multiset] {
        &self.roots
    }

    pub fn root(&self, index: usize) -> &Multiset {
        &self.roots[index]
    }

    pub fn len(&self) -> usize {
        self.roots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.roots.is_empty()
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn position(&self, root: &Multiset) -> Option<usize> {
        self.roots.iter().position(|r| r == root)
    }
}

fn nonempty(domain: &Domain) -> Result<()> {
    if domain.is_empty() {
        Err(Error::Input("domain is empty".into()))
    } else {
        Ok(())
    }
}

/// The inclusion-minimal members of `domain`, in canonical order.
pub fn minimal_root_set(domain: &Domain) -> Result<RootSet> {
    nonempty(domain)?;
    let members = domain.members();
    let roots = members
        .iter()
        .enumerate()
        .filter(|(i, a)| {
            !members
                .iter()
                .enumerate()
                .any(|(j, b)| j != *i && b.is_subset_unchecked(a))
        })
        .map(|(_, a)| a.clone())
        .collect();
    Ok(RootSet {
        roots,
        domain: domain.clone(),
    })
}

/// Root set built by recursion on the vector dimension, reduced to its
/// minimal elements.
pub fn dickson_root_set(domain: &Domain) -> Result<RootSet> {
    nonempty(domain)?;
    let vectors: Vec<Vec<u32>> = domain
        .members()
        .iter()
        .map(|m| m.counts().to_vec())
        .collect();
    let mut raw = dickson_vectors(&vectors);
    raw.sort();
    raw.dedup();
    let minimal: Vec<Vec<u32>> = raw
        .iter()
        .filter(|v| !raw.iter().any(|u| u != *v && dominated_by(u, v)))
        .cloned()
        .collect();
    let mut roots = Vec::with_capacity(minimal.len());
    for v in minimal {
        let ms = Multiset::from_counts(domain.alphabet(), v)?;
        if !domain.contains(&ms) {
            return Err(Error::Internal(format!(
                "recursive construction produced non-member {{{ms}}}"
            )));
        }
        roots.push(ms);
    }
    roots.sort();
    Ok(RootSet {
        roots,
        domain: domain.clone(),
    })
}

/// `u ≤ v` pointwise.
fn dominated_by(u: &[u32], v: &[u32]) -> bool {
    u.iter().zip(v).all(|(a, b)| a <= b)
}

/// A vector root set of `vectors` (not necessarily minimal).
///
/// Fix the first vector `v`. Every vector that does not dominate `v` has some
/// coordinate `i` with value `m < v_i`; those with `u_i = m` form a slice whose
/// remaining coordinates are handled one dimension lower, and the fixed
/// coordinate is reinserted into each slice root.
fn dickson_vectors(vectors: &[Vec<u32>]) -> Vec<Vec<u32>> {
    let Some(v) = vectors.first() else {
        return Vec::new();
    };
    let dim = v.len();
    if dim <= 1 {
        let min = vectors.iter().min().cloned().expect("non-empty");
        return vec![min];
    }
    let mut out = vec![v.clone()];
    for i in 0..dim {
        for m in 0..v[i] {
            let slice: Vec<Vec<u32>> = vectors
                .iter()
                .filter(|u| u[i] == m)
                .map(|u| {
                    let mut w = u.clone();
                    w.remove(i);
                    w
                })
                .collect();
            for mut r in dickson_vectors(&slice) {
                r.insert(i, m);
                out.push(r);
            }
        }
    }
    out
}

/// True iff every domain member has a candidate below it.
pub fn is_root_set(candidate: &[Multiset], domain: &Domain) -> Result<bool> {
    for c in candidate {
        if !domain.contains(c) {
            return Err(Error::Input(format!(
                "candidate root {{{c}}} is not a domain member"
            )));
        }
    }
    Ok(domain
        .members()
        .iter()
        .all(|a| candidate.iter().any(|r| r.is_subset_unchecked(a))))
}

/// Pairwise incomparable, and no domain member lies below two distinct roots.
pub fn is_strong_downwards_antichain(rs: &RootSet) -> bool {
    let roots = rs.roots();
    for (i, ri) in roots.iter().enumerate() {
        for rj in &roots[i + 1..] {
            if ri.is_subset_unchecked(rj) || rj.is_subset_unchecked(ri) {
                return false;
            }
            if rs
                .domain()
                .members()
                .iter()
                .any(|x| x.is_subset_unchecked(ri) && x.is_subset_unchecked(rj))
            {
                return false;
            }
        }
    }
    true
}

/// Indices of the roots contained in `a`.
pub fn roots_of(a: &Multiset, rs: &RootSet) -> Result<Vec<usize>> {
    rs.domain().alphabet().check_same(a.alphabet())?;
    Ok(rs
        .roots()
        .iter()
        .enumerate()
        .filter(|(_, r)| r.is_subset_unchecked(a))
        .map(|(i, _)| i)
        .collect())
}

/// Largest multiplicity of any symbol in any root.
pub fn max_multiplicity(rs: &RootSet) -> u32 {
    rs.roots()
        .iter()
        .flat_map(|r| r.counts().iter().copied())
        .max()
        .unwrap_or(0)
}
