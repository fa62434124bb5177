//! Line-oriented text formats for specifications and protocols.
//!
//! Specification files:
//!
//! ```text
//! alphabet: a b c d
//! outputs: 0 1
//! mode: explicit            # or: roots
//! input: a a b -> 1         # explicit mode, one per domain member
//! root: d -> 0              # roots mode
//! test: a a b d             # roots mode, extra verification inputs
//! budget: 5000000           # optional node budget for verification
//! ```
//!
//! Protocol files list every state with its output, the input map, and the
//! transitions that change at least one agent:
//!
//! ```text
//! alphabet: a b
//! outputs: 0 1
//! states: 2
//! state: 0 q0 -> 0
//! state: 1 q1 -> 1
//! input: a -> 0
//! input: b -> 1
//! delta: 0 a 1 b -> 1 1
//! ```
//!
//! `#` starts a comment. Rendering produces canonical files, and parsing a
//! canonical file and rendering it again reproduces it byte for byte.

use std::fmt::Write as _;

use crate::engine::{Agent, Protocol, StateId, TableProtocol};
use crate::error::{Error, Result};
use crate::funcspec::{FunctionSpec, OutputAlphabet, SpecKind};
use crate::multiset::{parse_multiset, Alphabet, Multiset};

/// A parsed specification with its optional verification budget.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SpecFile {
    pub spec: FunctionSpec,
    pub budget: Option<u64>,
}

struct Line<'a> {
    number: usize,
    key: &'a str,
    value: &'a str,
}

fn syntax(line: usize, message: impl Into<String>) -> Error {
    Error::Syntax {
        line,
        message: message.into(),
    }
}

fn lines(text: &str) -> Result<Vec<Line<'_>>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (key, value) = content
            .split_once(':')
            .ok_or_else(|| syntax(i + 1, format!("expected `key: value`, found `{content}`")))?;
        out.push(Line {
            number: i + 1,
            key: key.trim(),
            value: value.trim(),
        });
    }
    Ok(out)
}

fn at_line<T>(line: usize, r: Result<T>) -> Result<T> {
    r.map_err(|e| match e {
        Error::Syntax { .. } => e,
        other => syntax(line, message_of(&other)),
    })
}

fn message_of(e: &Error) -> String {
    match e {
        Error::Input(m) => m.clone(),
        other => other.to_string(),
    }
}

/// Reads one header that must appear exactly once.
fn header<'a>(all: &[Line<'a>], key: &str) -> Result<Option<(usize, &'a str)>> {
    let mut found = None;
    for l in all.iter().filter(|l| l.key == key) {
        if found.is_some() {
            return Err(syntax(l.number, format!("`{key}` given twice")));
        }
        found = Some((l.number, l.value));
    }
    Ok(found)
}

fn required<'a>(all: &[Line<'a>], key: &str) -> Result<(usize, &'a str)> {
    header(all, key)?.ok_or_else(|| {
        syntax(
            all.last().map_or(1, |l| l.number),
            format!("missing `{key}:` line"),
        )
    })
}

fn parse_alphabet(all: &[Line<'_>]) -> Result<Alphabet> {
    let (n, v) = required(all, "alphabet")?;
    at_line(n, Alphabet::new(v.split_whitespace()))
}

fn parse_outputs(all: &[Line<'_>]) -> Result<OutputAlphabet> {
    let (n, v) = required(all, "outputs")?;
    at_line(n, OutputAlphabet::new(v.split_whitespace()))
}

fn parse_ms(line: usize, text: &str, alphabet: &Alphabet) -> Result<Multiset> {
    at_line(line, parse_multiset(text, alphabet))
}

/// `a a b -> 1`
fn parse_mapping(
    line: usize,
    text: &str,
    alphabet: &Alphabet,
    outputs: &OutputAlphabet,
) -> Result<(Multiset, usize)> {
    let (lhs, rhs) = text
        .split_once("->")
        .ok_or_else(|| syntax(line, "missing `-> output`"))?;
    let ms = parse_ms(line, lhs, alphabet)?;
    let rhs = rhs.trim();
    let y = outputs
        .index_of(rhs)
        .ok_or_else(|| syntax(line, format!("unknown output `{rhs}`")))?;
    Ok((ms, y))
}

/// Parses a specification file.
pub fn parse_spec(text: &str) -> Result<SpecFile> {
    let all = lines(text)?;
    for l in &all {
        if !matches!(
            l.key,
            "alphabet" | "outputs" | "mode" | "input" | "root" | "test" | "budget"
        ) {
            return Err(syntax(l.number, format!("unknown key `{}`", l.key)));
        }
    }
    let alphabet = parse_alphabet(&all)?;
    let outputs = parse_outputs(&all)?;
    let roots_mode = match header(&all, "mode")? {
        None => false,
        Some((_, "explicit")) => false,
        Some((_, "roots")) => true,
        Some((n, other)) => {
            return Err(syntax(
                n,
                format!("mode must be `explicit` or `roots`, found `{other}`"),
            ))
        }
    };
    let budget =
        match header(&all, "budget")? {
            None => None,
            Some((n, v)) => Some(v.parse::<u64>().ok().filter(|&b| b > 0).ok_or_else(|| {
                syntax(n, format!("budget must be a positive integer, found `{v}`"))
            })?),
        };
    let (entry_key, other_keys): (&str, &[&str]) = if roots_mode {
        ("root", &["input"])
    } else {
        ("input", &["root", "test"])
    };
    if let Some(l) = all.iter().find(|l| other_keys.contains(&l.key)) {
        return Err(syntax(
            l.number,
            format!(
                "`{}` lines are not allowed in {} mode",
                l.key,
                if roots_mode { "roots" } else { "explicit" }
            ),
        ));
    }
    let mut entries: Vec<(usize, Multiset, usize)> = Vec::new();
    for l in all.iter().filter(|l| l.key == entry_key) {
        let (ms, y) = parse_mapping(l.number, l.value, &alphabet, &outputs)?;
        if let Some((first, _, _)) = entries.iter().find(|(_, m, _)| *m == ms) {
            let what = if roots_mode { "root" } else { "member" };
            return Err(syntax(
                l.number,
                format!("duplicate {what} {{{ms}}} (first on line {first})"),
            ));
        }
        if roots_mode {
            if let Some((first, m, _)) = entries.iter().find(|(_, m, _)| {
                m.is_subset(&ms).unwrap_or(false) || ms.is_subset(m).unwrap_or(false)
            }) {
                return Err(syntax(
                    l.number,
                    format!("roots must form an antichain: {{{m}}} (line {first}) and {{{ms}}} are comparable"),
                ));
            }
        }
        entries.push((l.number, ms, y));
    }
    let last = all.last().map_or(1, |l| l.number);
    let spec = if roots_mode {
        let mut tests = Vec::new();
        for l in all.iter().filter(|l| l.key == "test") {
            let t = parse_ms(l.number, l.value, &alphabet)?;
            if !entries
                .iter()
                .any(|(_, r, _)| r.is_subset(&t).unwrap_or(false))
            {
                return Err(syntax(
                    l.number,
                    format!("test input {{{t}}} contains no root"),
                ));
            }
            tests.push(t);
        }
        at_line(
            last,
            FunctionSpec::roots_only(
                &alphabet,
                &outputs,
                entries.into_iter().map(|(_, m, y)| (m, y)),
                tests,
            ),
        )?
    } else {
        at_line(
            last,
            FunctionSpec::explicit(
                &alphabet,
                &outputs,
                entries.into_iter().map(|(_, m, y)| (m, y)),
            ),
        )?
    };
    Ok(SpecFile { spec, budget })
}

/// Canonical text of a specification.
pub fn render_spec(file: &SpecFile) -> String {
    let spec = &file.spec;
    let y = spec.outputs();
    let mut s = String::new();
    let _ = writeln!(s, "alphabet: {}", spec.alphabet());
    let _ = writeln!(s, "outputs: {y}");
    match spec.kind() {
        SpecKind::Explicit { domain, outputs } => {
            s.push_str("mode: explicit\n");
            for (m, &o) in domain.members().iter().zip(outputs) {
                let _ = writeln!(s, "input: {m} -> {}", y.name(o));
            }
        }
        SpecKind::Roots {
            roots,
            root_outputs,
            tests,
        } => {
            s.push_str("mode: roots\n");
            for (m, &o) in roots.iter().zip(root_outputs) {
                let _ = writeln!(s, "root: {m} -> {}", y.name(o));
            }
            for t in tests {
                let _ = writeln!(s, "test: {t}");
            }
        }
    }
    if let Some(b) = file.budget {
        let _ = writeln!(s, "budget: {b}");
    }
    s
}

/// Canonical text of any protocol.
pub fn render_protocol(protocol: &dyn Protocol) -> String {
    let alphabet = protocol.alphabet();
    let outputs = protocol.outputs();
    let n = protocol.num_states();
    let mut s = String::new();
    let _ = writeln!(s, "alphabet: {alphabet}");
    let _ = writeln!(s, "outputs: {outputs}");
    let _ = writeln!(s, "states: {n}");
    for q in 0..n {
        let _ = writeln!(
            s,
            "state: {q} {} -> {}",
            protocol.state_name(q),
            outputs.name(protocol.output(q))
        );
    }
    for (i, sym) in alphabet.symbols().enumerate() {
        let _ = writeln!(s, "input: {sym} -> {}", protocol.input_state(i));
    }
    let symbols = alphabet.len();
    for qu in 0..n {
        for su in 0..symbols {
            for qv in 0..n {
                for sv in 0..symbols {
                    let (a, b) = protocol.delta(Agent::new(qu, su), Agent::new(qv, sv));
                    if (a, b) != (qu, qv) {
                        let _ = writeln!(
                            s,
                            "delta: {qu} {} {qv} {} -> {a} {b}",
                            alphabet.symbol(su),
                            alphabet.symbol(sv)
                        );
                    }
                }
            }
        }
    }
    s
}

fn parse_state(line: usize, text: &str, n: u32) -> Result<StateId> {
    text.parse::<StateId>()
        .ok()
        .filter(|&q| q < n)
        .ok_or_else(|| syntax(line, format!("state index `{text}` out of range 0..{n}")))
}

fn parse_symbol(line: usize, text: &str, alphabet: &Alphabet) -> Result<usize> {
    alphabet
        .index_of(text)
        .ok_or_else(|| syntax(line, format!("unknown symbol `{text}`")))
}

/// Parses a protocol file into a table protocol.
pub fn parse_protocol(text: &str) -> Result<TableProtocol> {
    let all = lines(text)?;
    for l in &all {
        if !matches!(
            l.key,
            "alphabet" | "outputs" | "states" | "state" | "input" | "delta"
        ) {
            return Err(syntax(l.number, format!("unknown key `{}`", l.key)));
        }
    }
    let alphabet = parse_alphabet(&all)?;
    let outputs = parse_outputs(&all)?;
    let (sn, sv) = required(&all, "states")?;
    let n: u32 = sv.parse().ok().filter(|&n| n > 0).ok_or_else(|| {
        syntax(
            sn,
            format!("`states` must be a positive integer, found `{sv}`"),
        )
    })?;
    let mut names: Vec<Option<String>> = vec![None; n as usize];
    let mut state_outputs = vec![0; n as usize];
    for l in all.iter().filter(|l| l.key == "state") {
        let (lhs, rhs) = l
            .value
            .split_once("->")
            .ok_or_else(|| syntax(l.number, "missing `-> output`"))?;
        let mut parts = lhs.split_whitespace();
        let (Some(idx), Some(name), None) = (parts.next(), parts.next(), parts.next()) else {
            return Err(syntax(
                l.number,
                "expected `state: <index> <name> -> <output>`",
            ));
        };
        let q = parse_state(l.number, idx, n)?;
        if names[q as usize].is_some() {
            return Err(syntax(l.number, format!("state {q} defined twice")));
        }
        let rhs = rhs.trim();
        state_outputs[q as usize] = outputs
            .index_of(rhs)
            .ok_or_else(|| syntax(l.number, format!("unknown output `{rhs}`")))?;
        names[q as usize] = Some(name.to_owned());
    }
    let last = all.last().map_or(1, |l| l.number);
    let names: Vec<String> = names
        .into_iter()
        .enumerate()
        .map(|(q, name)| name.ok_or_else(|| syntax(last, format!("state {q} is not defined"))))
        .collect::<Result<_>>()?;
    let mut input_states: Vec<Option<StateId>> = vec![None; alphabet.len()];
    for l in all.iter().filter(|l| l.key == "input") {
        let (sym, q) = l
            .value
            .split_once("->")
            .ok_or_else(|| syntax(l.number, "expected `input: <symbol> -> <state>`"))?;
        let s = parse_symbol(l.number, sym.trim(), &alphabet)?;
        if input_states[s].is_some() {
            return Err(syntax(
                l.number,
                format!("input state for `{}` given twice", sym.trim()),
            ));
        }
        input_states[s] = Some(parse_state(l.number, q.trim(), n)?);
    }
    let input_states: Vec<StateId> = input_states
        .into_iter()
        .enumerate()
        .map(|(s, q)| {
            q.ok_or_else(|| syntax(last, format!("no input state for `{}`", alphabet.symbol(s))))
        })
        .collect::<Result<_>>()?;
    let mut protocol = at_line(
        last,
        TableProtocol::new(&alphabet, &outputs, names, state_outputs, input_states),
    )?;
    let mut seen = std::collections::BTreeSet::new();
    for l in all.iter().filter(|l| l.key == "delta") {
        let (lhs, rhs) = l
            .value
            .split_once("->")
            .ok_or_else(|| syntax(l.number, "expected `delta: q σ q σ -> q q`"))?;
        let lhs: Vec<&str> = lhs.split_whitespace().collect();
        let rhs: Vec<&str> = rhs.split_whitespace().collect();
        if lhs.len() != 4 || rhs.len() != 2 {
            return Err(syntax(l.number, "expected `delta: q σ q σ -> q q`"));
        }
        let u = Agent::new(
            parse_state(l.number, lhs[0], n)?,
            parse_symbol(l.number, lhs[1], &alphabet)?,
        );
        let v = Agent::new(
            parse_state(l.number, lhs[2], n)?,
            parse_symbol(l.number, lhs[3], &alphabet)?,
        );
        let result = (
            parse_state(l.number, rhs[0], n)?,
            parse_state(l.number, rhs[1], n)?,
        );
        if !seen.insert((u, v)) {
            return Err(syntax(l.number, "transition given twice"));
        }
        at_line(l.number, protocol.set_transition(u, v, result))?;
    }
    Ok(protocol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synthesizer::synthesize;

    const FIXTURE: &str = "\
alphabet: a b c d
outputs: 0 1
mode: explicit
input: a a b -> 1
input: a a a b -> 1
input: d -> 0
input: d d -> 0
";

    #[test]
    fn explicit_round_trip() {
        let f = parse_spec(FIXTURE).unwrap();
        assert!(f.spec.is_explicit());
        let text = render_spec(&f);
        assert_eq!(parse_spec(&text).unwrap(), f);
        assert_eq!(render_spec(&parse_spec(&text).unwrap()), text);
    }

    #[test]
    fn comments_blank_lines_and_default_mode() {
        let f = parse_spec(
            "# header\n\nalphabet: b a  # two symbols\noutputs: no yes\ninput: a -> yes\n",
        )
        .unwrap();
        assert_eq!(
            render_spec(&f),
            "alphabet: a b\noutputs: no yes\nmode: explicit\ninput: a -> yes\n"
        );
    }

    #[test]
    fn roots_mode() {
        let text = "alphabet: a b c d\noutputs: 0 1\nmode: roots\nroot: a a b -> 1\nroot: d -> 0\ntest: a a b b\nbudget: 1000\n";
        let f = parse_spec(text).unwrap();
        assert_eq!(f.budget, Some(1000));
        assert_eq!(render_spec(&f), text);
    }

    fn err_line(text: &str) -> (usize, String) {
        match parse_spec(text) {
            Err(Error::Syntax { line, message }) => (line, message),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn errors_carry_line_numbers() {
        let (line, msg) = err_line("alphabet: a\noutputs: 0 1\ninput: a a b -> 1\n");
        assert_eq!(line, 3);
        assert!(msg.contains("unknown symbol `b`"), "{msg}");
        let (line, msg) =
            err_line("alphabet: a b\noutputs: 0 1\nmode: roots\nroot: a -> 0\nroot: a b -> 1\n");
        assert_eq!(line, 5);
        assert!(msg.contains("roots must form an antichain"), "{msg}");
        let (line, msg) = err_line("alphabet: a\noutputs: 0 1\ninput: a -> 0\ninput: a -> 1\n");
        assert_eq!(line, 4);
        assert!(msg.contains("duplicate member"), "{msg}");
        let (line, msg) = err_line("alphabet: a\noutputs: 0 1\ninput: a\n");
        assert_eq!(line, 3);
        assert!(msg.contains("missing `-> output`"));
        let (line, _) = err_line("alphabet: a\noutputs: 0 1\ninput: a -> 2\n");
        assert_eq!(line, 3);
        let (line, _) = err_line("alphabet: a\nbogus line\n");
        assert_eq!(line, 2);
        let (_, msg) = err_line("outputs: 0 1\ninput: a -> 0\n");
        assert!(msg.contains("missing `alphabet:`"));
        let (line, _) = err_line("alphabet: a\noutputs: 0 1\ninput: a -> 0\ntest: a\n");
        assert_eq!(line, 4);
    }

    #[test]
    fn protocol_round_trip() {
        let p = synthesize(&parse_spec(FIXTURE).unwrap().spec).unwrap();
        let text = render_protocol(&p);
        assert!(text.starts_with(
            "alphabet: a b c d\noutputs: 0 1\nstates: 32\nstate: 0 count=0;hm=0.00;root=0 -> 1\n"
        ));
        let t = parse_protocol(&text).unwrap();
        assert_eq!(render_protocol(&t), text);
        for q in 0..32 {
            for r in 0..32 {
                for (su, sv) in [(0, 1), (3, 0), (0, 0)] {
                    let (u, v) = (Agent::new(q, su), Agent::new(r, sv));
                    assert_eq!(t.delta(u, v), p.delta(u, v));
                }
            }
        }
    }

    #[test]
    fn protocol_errors() {
        let base = "alphabet: a\noutputs: 0 1\nstates: 2\nstate: 0 x -> 0\nstate: 1 y -> 1\ninput: a -> 0\n";
        assert!(parse_protocol(base).is_ok());
        let e = parse_protocol(&format!("{base}delta: 0 a 2 a -> 1 1\n")).unwrap_err();
        assert!(matches!(e, Error::Syntax { line: 7, .. }), "{e}");
        let e =
            parse_protocol("alphabet: a\noutputs: 0\nstates: 2\nstate: 0 x -> 0\ninput: a -> 0\n")
                .unwrap_err();
        assert!(e.to_string().contains("state 1 is not defined"), "{e}");
    }
}
