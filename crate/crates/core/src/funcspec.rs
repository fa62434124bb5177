//! Target functions `f: X → Y`, the subset-closure test that decides whether
//! a self-stabilizing protocol exists, and the function-counting results.

use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::multiset::{is_valid_name, Alphabet, Domain, Multiset};
use crate::rootset::{minimal_root_set, RootSet};

/// Mappings enumerated by [`brute_force_count`] are capped at this many.
pub const BRUTE_FORCE_LIMIT: u64 = 1_000_000;

/// The output symbols `Y`, in declaration order.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct OutputAlphabet {
    symbols: Arc<[String]>,
}

impl OutputAlphabet {
    pub fn new<I, S>(names: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let symbols: Vec<String> = names.into_iter().map(Into::into).collect();
        if symbols.is_empty() {
            return Err(Error::Input("output alphabet must not be empty".into()));
        }
        for (i, s) in symbols.iter().enumerate() {
            if !is_valid_name(s) {
                return Err(Error::Input(format!("invalid output name `{s}`")));
            }
            if symbols[..i].contains(s) {
                return Err(Error::Input(format!("duplicate output `{s}`")));
            }
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
        self.symbols.iter().position(|s| s == name)
    }

    pub fn name(&self, index: usize) -> &str {
        &self.symbols[index]
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.symbols.iter().map(String::as_str)
    }

    pub(crate) fn check_same(&self, other: &OutputAlphabet) -> Result<()> {
        if Arc::ptr_eq(&self.symbols, &other.symbols) || self == other {
            Ok(())
        } else {
            Err(Error::AlphabetMismatch(format!(
                "outputs {{{self}}} vs {{{other}}}"
            )))
        }
    }
}

impl fmt::Display for OutputAlphabet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.symbols.join(" "))
    }
}

impl fmt::Debug for OutputAlphabet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "OutputAlphabet({self})")
    }
}

/// How a function is given.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SpecKind {
    /// Every domain member with its output. `outputs[i]` belongs to
    /// `domain.members()[i]`.
    Explicit { domain: Domain, outputs: Vec<usize> },
    /// Only the roots and their outputs; the function on any other input is
    /// the output of a root it contains. `tests` are inputs to verify on.
    Roots {
        roots: Vec<Multiset>,
        root_outputs: Vec<usize>,
        tests: Vec<Multiset>,
    },
}

/// A function from multisets to outputs.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FunctionSpec {
    alphabet: Alphabet,
    outputs: OutputAlphabet,
    kind: SpecKind,
}

fn check_output(outputs: &OutputAlphabet, y: usize) -> Result<()> {
    if y < outputs.len() {
        Ok(())
    } else {
        Err(Error::Input(format!("output index {y} out of range")))
    }
}

impl FunctionSpec {
    /// A function listed member by member. Duplicate members are rejected.
    pub fn explicit(
        alphabet: &Alphabet,
        outputs: &OutputAlphabet,
        entries: impl IntoIterator<Item = (Multiset, usize)>,
    ) -> Result<Self> {
        let mut entries: Vec<(Multiset, usize)> = entries.into_iter().collect();
        if entries.is_empty() {
            return Err(Error::Input("explicit specification has no inputs".into()));
        }
        for (m, y) in &entries {
            alphabet.check_same(m.alphabet())?;
            check_output(outputs, *y)?;
            if m.is_empty() {
                return Err(Error::Input("domain members must be non-empty".into()));
            }
        }
        entries.sort_by(|a, b| a.0.cmp(&b.0));
        if let Some(w) = entries.windows(2).find(|w| w[0].0 == w[1].0) {
            return Err(Error::Input(format!("duplicate member {{{}}}", w[0].0)));
        }
        let (members, outs): (Vec<Multiset>, Vec<usize>) = entries.into_iter().unzip();
        Ok(Self {
            alphabet: alphabet.clone(),
            outputs: outputs.clone(),
            kind: SpecKind::Explicit {
                domain: Domain::new(alphabet, members)?,
                outputs: outs,
            },
        })
    }

    /// A function given by its roots. The roots must be pairwise
    /// incomparable and every test input must contain a root.
    pub fn roots_only(
        alphabet: &Alphabet,
        outputs: &OutputAlphabet,
        roots: impl IntoIterator<Item = (Multiset, usize)>,
        tests: impl IntoIterator<Item = Multiset>,
    ) -> Result<Self> {
        let mut roots: Vec<(Multiset, usize)> = roots.into_iter().collect();
        if roots.is_empty() {
            return Err(Error::Input("roots specification has no roots".into()));
        }
        for (m, y) in &roots {
            alphabet.check_same(m.alphabet())?;
            check_output(outputs, *y)?;
            if m.is_empty() {
                return Err(Error::Input("roots must be non-empty".into()));
            }
        }
        roots.sort_by(|a, b| a.0.cmp(&b.0));
        if let Some(w) = roots.windows(2).find(|w| w[0].0 == w[1].0) {
            return Err(Error::Input(format!("duplicate root {{{}}}", w[0].0)));
        }
        for (i, (a, _)) in roots.iter().enumerate() {
            for (b, _) in &roots[i + 1..] {
                if a.is_subset_unchecked(b) || b.is_subset_unchecked(a) {
                    return Err(Error::Input(format!(
                        "roots must form an antichain: {{{a}}} and {{{b}}} are comparable"
                    )));
                }
            }
        }
        let mut tests: Vec<Multiset> = tests.into_iter().collect();
        for t in &tests {
            alphabet.check_same(t.alphabet())?;
            if !roots.iter().any(|(r, _)| r.is_subset_unchecked(t)) {
                return Err(Error::Input(format!("test input {{{t}}} contains no root")));
            }
        }
        tests.sort();
        tests.dedup();
        let (roots, root_outputs) = roots.into_iter().unzip();
        Ok(Self {
            alphabet: alphabet.clone(),
            outputs: outputs.clone(),
            kind: SpecKind::Roots {
                roots,
                root_outputs,
                tests,
            },
        })
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn outputs(&self) -> &OutputAlphabet {
        &self.outputs
    }

    pub fn kind(&self) -> &SpecKind {
        &self.kind
    }

    pub fn is_explicit(&self) -> bool {
        matches!(self.kind, SpecKind::Explicit { .. })
    }

    /// The explicit domain, or the roots together with the test inputs.
    pub fn domain(&self) -> Domain {
        match &self.kind {
            SpecKind::Explicit { domain, .. } => domain.clone(),
            SpecKind::Roots { roots, tests, .. } => {
                Domain::new(&self.alphabet, roots.iter().chain(tests).cloned())
                    .expect("members share the spec alphabet")
            }
        }
    }

    /// Inputs a protocol is verified on: the domain, or the roots and tests.
    pub fn verification_inputs(&self) -> Vec<Multiset> {
        self.domain().members().to_vec()
    }

    /// `f(a)`, if defined. In roots mode this is the output of the first
    /// contained root.
    pub fn output_of(&self, a: &Multiset) -> Option<usize> {
        match &self.kind {
            SpecKind::Explicit { domain, outputs } => domain.position(a).map(|i| outputs[i]),
            SpecKind::Roots {
                roots,
                root_outputs,
                ..
            } => roots
                .iter()
                .position(|r| r.is_subset_unchecked(a))
                .map(|i| root_outputs[i]),
        }
    }

    fn output_name(&self, y: usize) -> String {
        self.outputs.name(y).to_owned()
    }
}

/// A witness against subset-closure.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Violation {
    pub smaller: Multiset,
    pub larger: Multiset,
    pub smaller_output: usize,
    pub larger_output: usize,
}

/// Outcome of [`check_subset_closed`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Characterization {
    SubsetClosed,
    /// Explicit mode: `smaller ⊆ larger` with different outputs.
    Violation(Violation),
    /// Roots mode: two roots with different outputs both lie below `witness`.
    InconsistentRoots {
        first: Multiset,
        second: Multiset,
        witness: Multiset,
    },
}

impl Characterization {
    pub fn is_subset_closed(&self) -> bool {
        matches!(self, Characterization::SubsetClosed)
    }

    /// Converts a failed check into the error used to reject synthesis.
    pub fn into_result(self, spec: &FunctionSpec) -> Result<()> {
        match self {
            Characterization::SubsetClosed => Ok(()),
            Characterization::Violation(v) => Err(Error::NotSubsetClosed {
                smaller: format!("{{{}}}", v.smaller),
                larger: format!("{{{}}}", v.larger),
                smaller_output: spec.output_name(v.smaller_output),
                larger_output: spec.output_name(v.larger_output),
            }),
            Characterization::InconsistentRoots {
                first,
                second,
                witness,
            } => {
                let fy = spec
                    .output_of(&first)
                    .map(|y| spec.output_name(y))
                    .unwrap_or_default();
                let sy = spec
                    .output_of(&second)
                    .map(|y| spec.output_name(y))
                    .unwrap_or_default();
                Err(Error::NotSubsetClosed {
                    smaller: format!("{{{second}}}"),
                    larger: format!("{{{witness}}}"),
                    smaller_output: sy,
                    larger_output: format!("{fy} (via root {{{first}}})"),
                })
            }
        }
    }
}

/// Decides `A ⊆ B ⟹ f(A) = f(B)` over the domain. The reported violation is
/// the first pair in canonical order.
pub fn check_subset_closed(spec: &FunctionSpec) -> Characterization {
    match &spec.kind {
        SpecKind::Explicit { domain, outputs } => {
            let members = domain.members();
            for (i, a) in members.iter().enumerate() {
                for (j, b) in members.iter().enumerate() {
                    if i != j && outputs[i] != outputs[j] && a.is_subset_unchecked(b) {
                        return Characterization::Violation(Violation {
                            smaller: a.clone(),
                            larger: b.clone(),
                            smaller_output: outputs[i],
                            larger_output: outputs[j],
                        });
                    }
                }
            }
            Characterization::SubsetClosed
        }
        SpecKind::Roots {
            roots,
            root_outputs,
            tests,
        } => {
            for t in tests {
                let below: Vec<usize> = (0..roots.len())
                    .filter(|&i| roots[i].is_subset_unchecked(t))
                    .collect();
                if let Some(&j) = below
                    .iter()
                    .find(|&&j| root_outputs[j] != root_outputs[below[0]])
                {
                    return Characterization::InconsistentRoots {
                        first: roots[below[0]].clone(),
                        second: roots[j].clone(),
                        witness: t.clone(),
                    };
                }
            }
            Characterization::SubsetClosed
        }
    }
}

/// The output of each root, read off the function.
pub fn induced_outputs(spec: &FunctionSpec, rs: &RootSet) -> Result<Vec<usize>> {
    match &spec.kind {
        SpecKind::Explicit { domain, outputs } => {
            let mut out = Vec::with_capacity(rs.len());
            for r in rs.roots() {
                let i = domain.position(r).ok_or_else(|| {
                    Error::Internal(format!("root {{{r}}} is not a domain member"))
                })?;
                let y = outputs[i];
                for (m, &my) in domain.members().iter().zip(outputs) {
                    if my != y && r.is_subset_unchecked(m) {
                        return Err(Error::Internal(format!(
                            "root {{{r}}} maps to {} but member {{{m}}} above it maps to {}",
                            spec.output_name(y),
                            spec.output_name(my)
                        )));
                    }
                }
                out.push(y);
            }
            Ok(out)
        }
        SpecKind::Roots {
            roots,
            root_outputs,
            ..
        } => rs
            .roots()
            .iter()
            .map(|r| {
                roots
                    .iter()
                    .position(|x| x == r)
                    .map(|i| root_outputs[i])
                    .ok_or_else(|| Error::Internal(format!("{{{r}}} is not a declared root")))
            })
            .collect(),
    }
}

/// The root set a protocol for `spec` is built on: the minimal root set of
/// the domain, which in roots mode is the declared roots.
pub fn spec_root_set(spec: &FunctionSpec) -> Result<RootSet> {
    let rs = minimal_root_set(&spec.domain())?;
    if let SpecKind::Roots { roots, .. } = &spec.kind {
        if rs.roots() != roots.as_slice() {
            return Err(Error::Internal(
                "declared roots are not the minimal root set".into(),
            ));
        }
    }
    Ok(rs)
}

/// `|im(f)|` against `|R|`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ImageBound {
    pub image_size: usize,
    pub root_count: usize,
}

impl ImageBound {
    pub fn holds(&self) -> bool {
        self.image_size <= self.root_count
    }
}

/// Counts distinct outputs and roots. Requires a subset-closed spec.
pub fn image_bound_check(spec: &FunctionSpec) -> Result<ImageBound> {
    check_subset_closed(spec).into_result(spec)?;
    let rs = spec_root_set(spec)?;
    let mut image: Vec<usize> = spec
        .domain()
        .members()
        .iter()
        .filter_map(|m| spec.output_of(m))
        .collect();
    image.sort_unstable();
    image.dedup();
    let report = ImageBound {
        image_size: image.len(),
        root_count: rs.len(),
    };
    if !report.holds() {
        return Err(Error::Internal(format!(
            "image has {} outputs but only {} roots",
            report.image_size, report.root_count
        )));
    }
    Ok(report)
}

/// Number of subset-closed functions on a domain.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FunctionCount {
    /// `|Y|^|R|`.
    pub upper_bound: u128,
    /// `|Y|^c` with `c` the number of co-occurrence classes of roots.
    pub exact_count: u128,
    pub root_count: usize,
    pub root_classes: usize,
    /// Every member has exactly one root.
    pub unique_roots: bool,
}

fn checked_pow(base: usize, exp: usize) -> Result<u128> {
    let exp = u32::try_from(exp).map_err(|_| Error::Resource("exponent too large".into()))?;
    (base as u128)
        .checked_pow(exp)
        .ok_or_else(|| Error::Resource(format!("{base}^{exp} overflows 128 bits")))
}

/// Counts subset-closed functions `domain → outputs` through root
/// co-occurrence classes: roots that lie below a common member must share an
/// output, and distinct classes are independent.
pub fn count_functions(domain: &Domain, outputs: &OutputAlphabet) -> Result<FunctionCount> {
    let rs = minimal_root_set(domain)?;
    let k = rs.len();
    let mut parent: Vec<usize> = (0..k).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    let mut unique_roots = true;
    for m in domain.members() {
        let below: Vec<usize> = (0..k)
            .filter(|&i| rs.root(i).is_subset_unchecked(m))
            .collect();
        if below.len() != 1 {
            unique_roots = false;
        }
        for &i in &below[1..] {
            let (a, b) = (find(&mut parent, below[0]), find(&mut parent, i));
            parent[a] = b;
        }
    }
    let root_classes = (0..k).filter(|&i| find(&mut parent, i) == i).count();
    Ok(FunctionCount {
        upper_bound: checked_pow(outputs.len(), k)?,
        exact_count: checked_pow(outputs.len(), root_classes)?,
        root_count: k,
        root_classes,
        unique_roots,
    })
}

/// Enumerates every mapping `domain → outputs` and counts the subset-closed
/// ones. Refuses when there are more than [`BRUTE_FORCE_LIMIT`] mappings.
pub fn brute_force_count(domain: &Domain, outputs: &OutputAlphabet) -> Result<u64> {
    if domain.is_empty() {
        return Err(Error::Input("domain is empty".into()));
    }
    let base = outputs.len() as u64;
    let total = (0..domain.len())
        .try_fold(1u64, |acc, _| acc.checked_mul(base).filter(|&t| t <= BRUTE_FORCE_LIMIT))
        .ok_or_else(|| {
            Error::Resource(format!(
                "{}^{} mappings exceed the brute-force limit of {BRUTE_FORCE_LIMIT}; use count_functions",
                base,
                domain.len()
            ))
        })?;
    let members = domain.members();
    let comparable: Vec<(usize, usize)> = (0..members.len())
        .flat_map(|i| (0..members.len()).map(move |j| (i, j)))
        .filter(|&(i, j)| i != j && members[i].is_subset_unchecked(&members[j]))
        .collect();
    let n = members.len();
    let count = (0..total)
        .into_par_iter()
        .filter(|&code| {
            let mut digits = vec![0u64; n];
            let mut c = code;
            for d in digits.iter_mut() {
                *d = c % base;
                c /= base;
            }
            comparable.iter().all(|&(i, j)| digits[i] == digits[j])
        })
        .count();
    Ok(count as u64)
}
