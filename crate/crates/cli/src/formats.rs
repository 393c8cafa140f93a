//! Input and output file formats.
//!
//! - Grammar files: `terminals:`, `nonterminals:`, `start:` and `track:`
//!   header lines, then one rule per line as `S -> a S b S` (alternatives may
//!   be separated by `|`). `#` starts a comment.
//! - Lattice distributions as JSON: `{"dim": 2, "atoms": [{"x": [0, 1],
//!   "w": "3"}]}`. Coordinates are JSON integers or `"p/q"` strings, weights
//!   decimal strings.
//! - Dissection specs as JSON: `{"classes": [[3], [4]]}`.

use std::str::FromStr;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use quasipower_core::dissection::DissectionSpec;
use quasipower_core::distribution::{Atom, LatticeDistribution};
use quasipower_core::grammar::{Grammar, GrammarSpec, RuleSpec};
use serde::{Deserialize, Serialize};
use serde_json::Value;

#[derive(Debug, thiserror::Error)]
pub enum FormatError {
    #[error("line {line}: {message}")]
    Line { line: usize, message: String },
    #[error("{0}")]
    Invalid(String),
    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Core(#[from] quasipower_core::Error),
}

fn line_err(line: usize, message: impl Into<String>) -> FormatError {
    FormatError::Line {
        line,
        message: message.into(),
    }
}

/// Parses a grammar file and validates it. Duplicate rules are dropped and
/// reported through [`Grammar::warnings`].
pub fn parse_grammar(text: &str) -> Result<Grammar, FormatError> {
    let mut spec = GrammarSpec::default();
    let mut seen = [false; 4];
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        if let Some((lhs, rhs)) = content.split_once("->") {
            let lhs = lhs.trim();
            if lhs.is_empty() || lhs.split_whitespace().count() != 1 {
                return Err(line_err(line, "a rule needs exactly one left-hand symbol"));
            }
            for alt in rhs.split('|') {
                let symbols: Vec<String> = alt.split_whitespace().map(String::from).collect();
                if symbols.is_empty() {
                    return Err(line_err(line, "empty right-hand side"));
                }
                spec.rules.push(RuleSpec {
                    lhs: lhs.to_string(),
                    rhs: symbols,
                    line,
                });
            }
            continue;
        }
        let Some((key, value)) = content.split_once(':') else {
            return Err(line_err(
                line,
                format!("expected `key: value` or a rule, found `{content}`"),
            ));
        };
        let words: Vec<String> = value.split_whitespace().map(String::from).collect();
        let slot = match key.trim() {
            "terminals" => 0,
            "nonterminals" => 1,
            "start" => 2,
            "track" => 3,
            other => return Err(line_err(line, format!("unknown header `{other}`"))),
        };
        if seen[slot] {
            return Err(line_err(
                line,
                format!("header `{}` given twice", key.trim()),
            ));
        }
        seen[slot] = true;
        if words.is_empty() {
            return Err(line_err(
                line,
                format!("header `{}` has no symbols", key.trim()),
            ));
        }
        match slot {
            0 => spec.terminals = words,
            1 => spec.nonterminals = words,
            2 => {
                if words.len() != 1 {
                    return Err(line_err(line, "exactly one start symbol expected"));
                }
                spec.start = words[0].clone();
            }
            _ => spec.tracked = words,
        }
    }
    for (slot, name) in ["terminals", "nonterminals", "start", "track"]
        .iter()
        .enumerate()
    {
        if !seen[slot] {
            return Err(FormatError::Invalid(format!("missing `{name}:` header")));
        }
    }
    spec.build().map_err(|e| match e {
        quasipower_core::Error::Grammar(m) => {
            match m.strip_prefix("line ").and_then(|r| r.split_once(": ")) {
                Some((n, msg)) if n.parse::<usize>().is_ok() => line_err(n.parse().unwrap(), msg),
                _ => FormatError::Invalid(m),
            }
        }
        other => other.into(),
    })
}

/// Writes a grammar in the file format; `parse_grammar` inverts it.
pub fn render_grammar(g: &Grammar) -> String {
    let spec = g.to_spec();
    let mut out = String::new();
    out.push_str(&format!("terminals: {}\n", spec.terminals.join(" ")));
    out.push_str(&format!("nonterminals: {}\n", spec.nonterminals.join(" ")));
    out.push_str(&format!("start: {}\n", spec.start));
    out.push_str(&format!("track: {}\n", spec.tracked.join(" ")));
    for r in &spec.rules {
        out.push_str(&format!("{} -> {}\n", r.lhs, r.rhs.join(" ")));
    }
    out
}

#[derive(Debug, Serialize, Deserialize)]
struct AtomJson {
    x: Vec<Value>,
    w: String,
}

#[derive(Debug, Serialize, Deserialize)]
struct DistributionJson {
    dim: usize,
    atoms: Vec<AtomJson>,
}

fn coordinate_to_json(q: &BigRational) -> Value {
    if q.is_integer() {
        if let Ok(v) = i64::try_from(q.numer()) {
            return Value::from(v);
        }
    }
    Value::from(q.to_string())
}

fn coordinate_from_json(v: &Value) -> Result<BigRational, FormatError> {
    match v {
        Value::Number(n) => {
            if let Some(i) = n.as_i64() {
                Ok(BigRational::from_integer(i.into()))
            } else if let Some(u) = n.as_u64() {
                Ok(BigRational::from_integer(u.into()))
            } else {
                Err(FormatError::Invalid(format!(
                    "coordinate {n} is not an integer; write fractions as \"p/q\""
                )))
            }
        }
        Value::String(s) => parse_rational(s),
        other => Err(FormatError::Invalid(format!(
            "coordinate {other} is neither a number nor a string"
        ))),
    }
}

/// Parses `p` or `p/q`.
pub fn parse_rational(s: &str) -> Result<BigRational, FormatError> {
    let bad = || FormatError::Invalid(format!("`{s}` is not a rational number"));
    let (p, q) = match s.trim().split_once('/') {
        Some((p, q)) => (p.trim(), q.trim()),
        None => (s.trim(), "1"),
    };
    let p = BigInt::from_str(p).map_err(|_| bad())?;
    let q = BigInt::from_str(q).map_err(|_| bad())?;
    if q == BigInt::from(0) {
        return Err(bad());
    }
    Ok(BigRational::new(p, q))
}

pub fn distribution_to_value(d: &LatticeDistribution) -> Value {
    let doc = DistributionJson {
        dim: d.dim(),
        atoms: d
            .atoms()
            .iter()
            .map(|a| AtomJson {
                x: a.point.iter().map(coordinate_to_json).collect(),
                w: a.weight.to_string(),
            })
            .collect(),
    };
    serde_json::to_value(doc).expect("plain data serializes")
}

pub fn distribution_to_json(d: &LatticeDistribution) -> String {
    serde_json::to_string_pretty(&distribution_to_value(d)).expect("plain data serializes")
}

/// Reads a distribution document. Unknown top-level keys (such as a
/// `meta` block written by this tool) are ignored. Repeated points are
/// rejected.
pub fn distribution_from_json(text: &str) -> Result<LatticeDistribution, FormatError> {
    let doc: DistributionJson = serde_json::from_str(text)?;
    let mut atoms = Vec::with_capacity(doc.atoms.len());
    for (i, a) in doc.atoms.iter().enumerate() {
        if a.x.len() != doc.dim {
            return Err(FormatError::Invalid(format!(
                "atom {i} has {} coordinates, expected {}",
                a.x.len(),
                doc.dim
            )));
        }
        let point =
            a.x.iter()
                .map(coordinate_from_json)
                .collect::<Result<Vec<_>, _>>()?;
        let weight = BigUint::from_str(a.w.trim()).map_err(|_| {
            FormatError::Invalid(format!(
                "atom {i}: weight `{}` is not a decimal integer",
                a.w
            ))
        })?;
        atoms.push(Atom { point, weight });
    }
    Ok(LatticeDistribution::new(doc.dim, atoms)?)
}

#[derive(Debug, Serialize, Deserialize)]
struct DissectionJson {
    classes: Vec<Vec<u32>>,
}

pub fn dissection_from_json(text: &str) -> Result<DissectionSpec, FormatError> {
    let doc: DissectionJson = serde_json::from_str(text)?;
    Ok(DissectionSpec::new(doc.classes)?)
}

pub fn dissection_to_json(spec: &DissectionSpec) -> String {
    serde_json::to_string(&DissectionJson {
        classes: spec.classes().to_vec(),
    })
    .expect("plain data serializes")
}

#[cfg(test)]
mod tests {
    use super::*;

    const EXAMPLE: &str = "\
# the running example
terminals: a b c
nonterminals: S T
start: S
track: a b
S -> a S b S
S -> b T
T -> b S
T -> c T   # loops on c
T -> a
";

    #[test]
    fn parses_example() {
        let g = parse_grammar(EXAMPLE).unwrap();
        assert_eq!(g.nonterminals().len(), 2);
        assert_eq!(g.terminals().len(), 3);
        assert_eq!(g.rules().len(), 5);
        assert_eq!(g, Grammar::example());
        assert_eq!(parse_grammar(&render_grammar(&g)).unwrap(), g);
    }

    #[test]
    fn alternatives_expand() {
        let text = "terminals: a b c\nnonterminals: S T\nstart: S\ntrack: a b\nS -> a S b S | b T\nT -> b S | c T | a\n";
        assert_eq!(parse_grammar(text).unwrap(), Grammar::example());
    }

    #[test]
    fn errors_carry_lines() {
        let no_terminal = format!("{EXAMPLE}S -> S S\n");
        match parse_grammar(&no_terminal).unwrap_err() {
            FormatError::Line { line, message } => {
                assert_eq!(line, 11);
                assert!(message.contains("no terminal"));
            }
            e => panic!("{e}"),
        }
        let undeclared = EXAMPLE.replace("T -> a", "T -> d");
        match parse_grammar(&undeclared).unwrap_err() {
            FormatError::Line { line, message } => {
                assert_eq!(line, 10);
                assert!(message.contains("`d`"));
            }
            e => panic!("{e}"),
        }
        assert!(matches!(
            parse_grammar(&EXAMPLE.replace("S -> b T", "S ->")).unwrap_err(),
            FormatError::Line { line: 7, .. }
        ));
        assert!(matches!(
            parse_grammar(&EXAMPLE.replace("start: S\n", "")).unwrap_err(),
            FormatError::Invalid(_)
        ));
        assert!(matches!(
            parse_grammar(&format!("{EXAMPLE}colour: red\n")).unwrap_err(),
            FormatError::Line { line: 11, .. }
        ));
        let dup = format!("{EXAMPLE}T -> a\n");
        assert_eq!(parse_grammar(&dup).unwrap().warnings().len(), 1);
    }

    #[test]
    fn distribution_round_trip() {
        let d = LatticeDistribution::from_weights(
            2,
            [
                (
                    vec![
                        BigRational::new(1.into(), 3.into()),
                        BigRational::from_integer((-2).into()),
                    ],
                    BigUint::from(7u32),
                ),
                (
                    vec![
                        BigRational::from_integer(0.into()),
                        BigRational::from_integer(5.into()),
                    ],
                    BigUint::from(10u32).pow(30),
                ),
            ],
        )
        .unwrap();
        let text = distribution_to_json(&d);
        assert!(text.contains("\"1/3\""));
        assert!(text.contains("1000000000000000000000000000000"));
        assert_eq!(distribution_from_json(&text).unwrap(), d);
    }

    #[test]
    fn distribution_rejects_bad_input() {
        assert!(distribution_from_json(r#"{"dim":1,"atoms":[{"x":[0,1],"w":"1"}]}"#).is_err());
        assert!(distribution_from_json(r#"{"dim":1,"atoms":[{"x":[0.5],"w":"1"}]}"#).is_err());
        assert!(distribution_from_json(r#"{"dim":1,"atoms":[{"x":[0],"w":"-1"}]}"#).is_err());
        assert!(distribution_from_json(
            r#"{"dim":1,"atoms":[{"x":[0],"w":"1"},{"x":[0],"w":"2"}]}"#
        )
        .is_err());
        assert!(distribution_from_json(r#"{"dim":1,"atoms":[{"x":["1/0"],"w":"1"}]}"#).is_err());
        let ok = distribution_from_json(r#"{"meta":{},"dim":1,"atoms":[{"x":["-3/6"],"w":"2"}]}"#)
            .unwrap();
        assert_eq!(
            ok.atoms()[0].point[0],
            BigRational::new((-1).into(), 2.into())
        );
    }

    #[test]
    fn dissection_spec_json() {
        let s = dissection_from_json(r#"{"classes": [[3], [4]]}"#).unwrap();
        assert_eq!(s.classes(), &[vec![3], vec![4]]);
        assert_eq!(dissection_from_json(&dissection_to_json(&s)).unwrap(), s);
        assert!(dissection_from_json(r#"{"classes": [[2]]}"#).is_err());
        assert!(dissection_from_json(r#"{"classes": [[3], [3]]}"#).is_err());
    }
}
