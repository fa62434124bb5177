//! Finite multisets over an ordered alphabet and the inclusion order on them.
//!
//! A [`Multiset`] is stored as a vector of multiplicities, one per alphabet
//! symbol. Inclusion is the pointwise order on those vectors. The canonical
//! total order used for sorting domains and indexing roots compares the
//! multisets as words: each multiset is written as its symbols in alphabet
//! order (`{b, a, a}` becomes `a a b`) and the words are compared
//! lexicographically.

use std::cmp::Ordering;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

/// Upper bound on alphabet size.
pub const MAX_SYMBOLS: usize = 26;

/// Returns true if `name` may be used as a symbol or output name.
pub(crate) fn is_valid_name(name: &str) -> bool {
    !name.is_empty()
        && name
            .chars()
            .all(|c| c.is_alphanumeric() || c == '_' || c == '\'')
}

/// An ordered, non-empty set of distinct input symbols.
///
/// Symbols are sorted by name on construction, so two alphabets built from
/// the same names in any order are equal.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Alphabet {
    symbols: Arc<[String]>,
}

impl Alphabet {
    pub fn new<I, S>(names: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut symbols: Vec<String> = names.into_iter().map(Into::into).collect();
        if symbols.is_empty() {
            return Err(Error::Input("alphabet must not be empty".into()));
        }
        if let Some(bad) = symbols.iter().find(|s| !is_valid_name(s)) {
            return Err(Error::Input(format!("invalid symbol name `{bad}`")));
        }
        symbols.sort();
        if let Some(w) = symbols.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::Input(format!("duplicate symbol `{}`", w[0])));
        }
        if symbols.len() > MAX_SYMBOLS {
            return Err(Error::Input(format!(
                "alphabet has {} symbols; at most {MAX_SYMBOLS} are supported",
                symbols.len()
            )));
        }
        Ok(Self {
            symbols: symbols.into(),
        })
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.symbols.binary_search_by(|s| s.as_str().cmp(name)).ok()
    }

    pub fn symbol(&self, index: usize) -> &str {
        &self.symbols[index]
    }

    pub fn symbols(&self) -> impl Iterator<Item = &str> {
        self.symbols.iter().map(String::as_str)
    }

    pub(crate) fn check_same(&self, other: &Alphabet) -> Result<()> {
        if Arc::ptr_eq(&self.symbols, &other.symbols) || self == other {
            Ok(())
        } else {
            Err(Error::AlphabetMismatch(format!(
                "{{{self}}} vs {{{other}}}"
            )))
        }
    }
}

impl fmt::Display for Alphabet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.symbols.join(" "))
    }
}

impl fmt::Debug for Alphabet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Alphabet({self})")
    }
}

/// A finite multiset over an [`Alphabet`], stored as a multiplicity vector.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Multiset {
    alphabet: Alphabet,
    counts: Vec<u32>,
}

impl Multiset {
    pub fn from_counts(alphabet: &Alphabet, counts: Vec<u32>) -> Result<Self> {
        if counts.len() != alphabet.len() {
            return Err(Error::Input(format!(
                "count vector has length {} but the alphabet has {} symbols",
                counts.len(),
                alphabet.len()
            )));
        }
        Ok(Self {
            alphabet: alphabet.clone(),
            counts,
        })
    }

    pub fn empty(alphabet: &Alphabet) -> Self {
        Self {
            alphabet: alphabet.clone(),
            counts: vec![0; alphabet.len()],
        }
    }

    /// Builds a multiset from symbol indices, one per occurrence.
    pub fn from_indices(alphabet: &Alphabet, indices: impl IntoIterator<Item = usize>) -> Self {
        let mut ms = Self::empty(alphabet);
        for i in indices {
            ms.counts[i] += 1;
        }
        ms
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn counts(&self) -> &[u32] {
        &self.counts
    }

    /// Total number of elements.
    pub fn size(&self) -> usize {
        self.counts.iter().map(|&c| c as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.iter().all(|&c| c == 0)
    }

    pub fn count_at(&self, index: usize) -> u32 {
        self.counts[index]
    }

    /// Multiplicity of the named symbol.
    pub fn multiplicity(&self, symbol: &str) -> Result<u32> {
        self.alphabet
            .index_of(symbol)
            .map(|i| self.counts[i])
            .ok_or_else(|| Error::UnknownSymbol {
                symbol: symbol.to_owned(),
                position: None,
            })
    }

    /// Multiset inclusion; errors if the alphabets differ.
    pub fn is_subset(&self, other: &Multiset) -> Result<bool> {
        self.alphabet.check_same(&other.alphabet)?;
        Ok(self.is_subset_unchecked(other))
    }

    /// Inclusion for multisets already known to share an alphabet.
    pub(crate) fn is_subset_unchecked(&self, other: &Multiset) -> bool {
        self.counts.iter().zip(&other.counts).all(|(a, b)| a <= b)
    }

    /// Symbol indices with repetition, in alphabet order.
    pub fn indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.counts
            .iter()
            .enumerate()
            .flat_map(|(i, &c)| std::iter::repeat_n(i, c as usize))
    }

    /// Canonical word order (see the module docs).
    pub fn canonical_cmp(&self, other: &Multiset) -> Ordering {
        self.indices().cmp(other.indices())
    }

    pub fn without_one(&self, index: usize) -> Option<Multiset> {
        let mut ms = self.clone();
        ms.counts[index] = ms.counts[index].checked_sub(1)?;
        Some(ms)
    }
}

impl PartialOrd for Multiset {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Multiset {
    fn cmp(&self, other: &Self) -> Ordering {
        self.canonical_cmp(other)
            .then_with(|| self.alphabet.symbols.cmp(&other.alphabet.symbols))
    }
}

impl fmt::Display for Multiset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_empty() {
            return f.write_str("{}");
        }
        let mut first = true;
        for i in self.indices() {
            if !first {
                f.write_str(" ")?;
            }
            first = false;
            f.write_str(self.alphabet.symbol(i))?;
        }
        Ok(())
    }
}

impl fmt::Debug for Multiset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{{self}}}")
    }
}

/// Parses whitespace-separated symbol names into a non-empty multiset.
pub fn parse_multiset(text: &str, alphabet: &Alphabet) -> Result<Multiset> {
    let mut ms = Multiset::empty(alphabet);
    for (position, token) in text.split_whitespace().enumerate() {
        let i = alphabet
            .index_of(token)
            .ok_or_else(|| Error::UnknownSymbol {
                symbol: token.to_owned(),
                position: Some(position + 1),
            })?;
        ms.counts[i] += 1;
    }
    if ms.is_empty() {
        return Err(Error::Input("empty multiset".into()));
    }
    Ok(ms)
}

/// A finite set of distinct multisets over one alphabet, kept in canonical
/// order.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Domain {
    alphabet: Alphabet,
    members: Vec<Multiset>,
}

impl Domain {
    /// Builds a domain, sorting and deduplicating the members.
    pub fn new(alphabet: &Alphabet, members: impl IntoIterator<Item = Multiset>) -> Result<Self> {
        let mut members: Vec<Multiset> = members.into_iter().collect();
        for m in &members {
            alphabet.check_same(m.alphabet())?;
        }
        members.sort();
        members.dedup();
        Ok(Self {
            alphabet: alphabet.clone(),
            members,
        })
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn members(&self) -> &[Multiset] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, ms: &Multiset) -> bool {
        self.position(ms).is_some()
    }

    pub fn position(&self, ms: &Multiset) -> Option<usize> {
        self.members.binary_search(ms).ok()
    }
}
