//! Exact counts of the words of a context-free language by length and by
//! the number of occurrences of tracked terminal symbols.
//!
//! The dynamic program counts derivations, which equals word counts for an
//! unambiguous grammar.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::Zero;

use crate::distribution::LatticeDistribution;
use crate::quasi_power::QuasiPowerFamily;
use crate::{Error, Result};

/// Default maximal word length.
pub const DEFAULT_LENGTH_CAP: usize = 40;

/// A grammar symbol, by index into the terminal or nonterminal list.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Symbol {
    Terminal(usize),
    Nonterminal(usize),
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Rule {
    pub lhs: usize,
    pub rhs: Vec<Symbol>,
}

/// Unvalidated grammar description by symbol names.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct GrammarSpec {
    pub terminals: Vec<String>,
    pub nonterminals: Vec<String>,
    pub start: String,
    pub rules: Vec<RuleSpec>,
    pub tracked: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RuleSpec {
    pub lhs: String,
    pub rhs: Vec<String>,
    /// Source line for diagnostics; 0 if unknown.
    pub line: usize,
}

impl RuleSpec {
    pub fn new(lhs: &str, rhs: &[&str]) -> Self {
        Self {
            lhs: lhs.to_string(),
            rhs: rhs.iter().map(|s| s.to_string()).collect(),
            line: 0,
        }
    }
}

fn at_line(line: usize) -> String {
    if line == 0 {
        String::new()
    } else {
        format!("line {line}: ")
    }
}

impl GrammarSpec {
    pub fn build(&self) -> Result<Grammar> {
        let mut seen = BTreeSet::new();
        for s in self.terminals.iter().chain(&self.nonterminals) {
            if !seen.insert(s.as_str()) {
                return Err(Error::Grammar(format!("symbol `{s}` declared twice")));
            }
        }
        let lookup = |name: &str, line: usize| -> Result<Symbol> {
            if let Some(i) = self.terminals.iter().position(|t| t == name) {
                Ok(Symbol::Terminal(i))
            } else if let Some(i) = self.nonterminals.iter().position(|t| t == name) {
                Ok(Symbol::Nonterminal(i))
            } else {
                Err(Error::Grammar(format!(
                    "{}undeclared symbol `{name}`",
                    at_line(line)
                )))
            }
        };
        let start = match lookup(&self.start, 0) {
            Ok(Symbol::Nonterminal(i)) => i,
            Ok(Symbol::Terminal(_)) => {
                return Err(Error::Grammar(format!(
                    "start symbol `{}` is a terminal",
                    self.start
                )))
            }
            Err(_) => {
                return Err(Error::Grammar(format!(
                    "undeclared start symbol `{}`",
                    self.start
                )))
            }
        };
        let mut rules = Vec::new();
        let mut warnings = Vec::new();
        for r in &self.rules {
            let lhs = match lookup(&r.lhs, r.line)? {
                Symbol::Nonterminal(i) => i,
                Symbol::Terminal(_) => {
                    return Err(Error::Grammar(format!(
                        "{}left-hand side `{}` is a terminal",
                        at_line(r.line),
                        r.lhs
                    )))
                }
            };
            if r.rhs.is_empty() {
                return Err(Error::Grammar(format!(
                    "{}empty right-hand side",
                    at_line(r.line)
                )));
            }
            let rhs = r
                .rhs
                .iter()
                .map(|s| lookup(s, r.line))
                .collect::<Result<Vec<_>>>()?;
            if !rhs.iter().any(|s| matches!(s, Symbol::Terminal(_))) {
                return Err(Error::Grammar(format!(
                    "{}rule `{} -> {}` has no terminal symbol",
                    at_line(r.line),
                    r.lhs,
                    r.rhs.join(" ")
                )));
            }
            let rule = Rule { lhs, rhs };
            if rules.contains(&rule) {
                warnings.push(format!(
                    "{}duplicate rule `{} -> {}` ignored",
                    at_line(r.line),
                    r.lhs,
                    r.rhs.join(" ")
                ));
                continue;
            }
            rules.push(rule);
        }
        if !rules.iter().any(|r| r.lhs == start) {
            return Err(Error::Grammar(format!(
                "start symbol `{}` has no rule",
                self.start
            )));
        }
        let mut tracked = Vec::new();
        for t in &self.tracked {
            match lookup(t, 0) {
                Ok(Symbol::Terminal(i)) if !tracked.contains(&i) => tracked.push(i),
                Ok(Symbol::Terminal(_)) => {
                    return Err(Error::Grammar(format!("terminal `{t}` tracked twice")))
                }
                _ => {
                    return Err(Error::Grammar(format!(
                        "tracked symbol `{t}` is not a terminal"
                    )))
                }
            }
        }
        if tracked.is_empty() {
            return Err(Error::Grammar("no tracked terminal".into()));
        }
        Ok(Grammar {
            terminals: self.terminals.clone(),
            nonterminals: self.nonterminals.clone(),
            start,
            rules,
            tracked,
            warnings,
        })
    }
}

/// A validated grammar: every rule has a terminal on its right-hand side,
/// so derived words strictly grow and the dynamic program terminates.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Grammar {
    terminals: Vec<String>,
    nonterminals: Vec<String>,
    start: usize,
    rules: Vec<Rule>,
    tracked: Vec<usize>,
    warnings: Vec<String>,
}

impl Grammar {
    /// `S → aSbS | bT`, `T → bS | cT | a`, tracking `a` and `b`.
    pub fn example() -> Self {
        GrammarSpec {
            terminals: ["a", "b", "c"].map(String::from).to_vec(),
            nonterminals: ["S", "T"].map(String::from).to_vec(),
            start: "S".into(),
            rules: vec![
                RuleSpec::new("S", &["a", "S", "b", "S"]),
                RuleSpec::new("S", &["b", "T"]),
                RuleSpec::new("T", &["b", "S"]),
                RuleSpec::new("T", &["c", "T"]),
                RuleSpec::new("T", &["a"]),
            ],
            tracked: ["a", "b"].map(String::from).to_vec(),
        }
        .build()
        .expect("example grammar is valid")
    }

    pub fn terminals(&self) -> &[String] {
        &self.terminals
    }

    pub fn nonterminals(&self) -> &[String] {
        &self.nonterminals
    }

    pub fn start(&self) -> usize {
        self.start
    }

    pub fn rules(&self) -> &[Rule] {
        &self.rules
    }

    /// Terminal indices of the coordinate axes.
    pub fn tracked(&self) -> &[usize] {
        &self.tracked
    }

    /// Problems that did not prevent construction (duplicate rules).
    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    /// Same language with a different tracked set.
    pub fn with_tracked(&self, tracked: &[&str]) -> Result<Self> {
        let mut spec = self.to_spec();
        spec.tracked = tracked.iter().map(|s| s.to_string()).collect();
        spec.build()
    }

    pub fn to_spec(&self) -> GrammarSpec {
        let name = |s: &Symbol| match *s {
            Symbol::Terminal(i) => self.terminals[i].clone(),
            Symbol::Nonterminal(i) => self.nonterminals[i].clone(),
        };
        GrammarSpec {
            terminals: self.terminals.clone(),
            nonterminals: self.nonterminals.clone(),
            start: self.nonterminals[self.start].clone(),
            rules: self
                .rules
                .iter()
                .map(|r| RuleSpec {
                    lhs: self.nonterminals[r.lhs].clone(),
                    rhs: r.rhs.iter().map(name).collect(),
                    line: 0,
                })
                .collect(),
            tracked: self
                .tracked
                .iter()
                .map(|&i| self.terminals[i].clone())
                .collect(),
        }
    }
}

/// Counts indexed by tracked-count vector.
pub type Slice = BTreeMap<Vec<u32>, BigUint>;

fn convolve_into(out: &mut Slice, a: &Slice, b: &Slice) {
    for (va, ca) in a {
        for (vb, cb) in b {
            let v: Vec<u32> = va.iter().zip(vb).map(|(x, y)| x + y).collect();
            *out.entry(v).or_default() += ca * cb;
        }
    }
}

/// Derivation counts of every nonterminal for lengths `0..=max_len`.
#[derive(Debug, Clone)]
pub struct CountTable {
    max_len: usize,
    axes: usize,
    start: usize,
    /// `counts[nonterminal][len]`.
    counts: Vec<Vec<Slice>>,
}

impl CountTable {
    pub fn compute(g: &Grammar, max_len: usize) -> Self {
        let axes = g.tracked.len();
        let zero = vec![0u32; axes];
        let terminal_slice = |t: usize| {
            let mut v = zero.clone();
            if let Some(k) = g.tracked.iter().position(|&x| x == t) {
                v[k] = 1;
            }
            let mut s = Slice::new();
            s.insert(v, BigUint::from(1u32));
            s
        };
        let nt = g.nonterminals.len();
        let mut counts: Vec<Vec<Slice>> = vec![vec![Slice::new(); max_len + 1]; nt];
        // prefix[r][i][len]: derivations of the first i symbols of rule r.
        let mut prefix: Vec<Vec<Vec<Slice>>> = g
            .rules
            .iter()
            .map(|r| {
                let mut p = vec![vec![Slice::new(); max_len + 1]; r.rhs.len() + 1];
                p[0][0].insert(zero.clone(), BigUint::from(1u32));
                p
            })
            .collect();
        let terminals: Vec<Slice> = (0..g.terminals.len()).map(terminal_slice).collect();

        let step = |prefix: &Vec<Vec<Slice>>,
                    counts: &Vec<Vec<Slice>>,
                    sym: Symbol,
                    i: usize,
                    n: usize| {
            let mut out = Slice::new();
            match sym {
                Symbol::Terminal(t) => {
                    if n >= 1 {
                        convolve_into(&mut out, &prefix[i - 1][n - 1], &terminals[t]);
                    }
                }
                Symbol::Nonterminal(a) => {
                    for l in 1..=n {
                        let p = &prefix[i - 1][n - l];
                        if !p.is_empty() && !counts[a][l].is_empty() {
                            convolve_into(&mut out, p, &counts[a][l]);
                        }
                    }
                }
            }
            out
        };

        for n in 1..=max_len {
            // Full rules first: they need nonterminal counts below n only.
            for (r, rule) in g.rules.iter().enumerate() {
                let k = rule.rhs.len();
                let s = step(&prefix[r], &counts, rule.rhs[k - 1], k, n);
                for (v, c) in &s {
                    *counts[rule.lhs][n].entry(v.clone()).or_default() += c;
                }
                prefix[r][k][n] = s;
            }
            for (r, rule) in g.rules.iter().enumerate() {
                for i in 1..rule.rhs.len() {
                    prefix[r][i][n] = step(&prefix[r], &counts, rule.rhs[i - 1], i, n);
                }
            }
        }
        Self {
            max_len,
            axes,
            start: g.start,
            counts,
        }
    }

    pub fn max_len(&self) -> usize {
        self.max_len
    }

    pub fn axes(&self) -> usize {
        self.axes
    }

    /// Counts for words of length `n` derived from the start symbol.
    pub fn start_slice(&self, n: usize) -> &Slice {
        &self.counts[self.start][n]
    }

    pub fn slice(&self, nonterminal: usize, n: usize) -> &Slice {
        &self.counts[nonterminal][n]
    }

    /// Number of words of length `n` from the start symbol.
    pub fn total(&self, n: usize) -> BigUint {
        self.start_slice(n).values().sum()
    }
}

/// Counts of length-`n` words by tracked counts, with the default cap.
pub fn count_words(g: &Grammar, n: usize) -> Result<Slice> {
    count_words_with_cap(g, n, DEFAULT_LENGTH_CAP)
}

pub fn count_words_with_cap(g: &Grammar, n: usize, cap: usize) -> Result<Slice> {
    check_length(n, cap)?;
    Ok(CountTable::compute(g, n).start_slice(n).clone())
}

fn check_length(n: usize, cap: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::InvalidArgument(
            "word length must be positive".into(),
        ));
    }
    if n > cap {
        return Err(Error::Capacity {
            what: "word length",
            got: n,
            limit: cap,
        });
    }
    Ok(())
}

/// Uniform distribution over words of length `n`, as tracked counts.
pub fn grammar_distribution(g: &Grammar, n: usize) -> Result<LatticeDistribution> {
    grammar_distribution_with_cap(g, n, DEFAULT_LENGTH_CAP)
}

pub fn grammar_distribution_with_cap(
    g: &Grammar,
    n: usize,
    cap: usize,
) -> Result<LatticeDistribution> {
    let slice = count_words_with_cap(g, n, cap)?;
    slice_distribution(&slice, g.tracked.len(), n)
}

fn slice_distribution(slice: &Slice, axes: usize, n: usize) -> Result<LatticeDistribution> {
    if slice.values().all(Zero::is_zero) {
        return Err(Error::Empty {
            what: "the language has no word of this length",
            n,
        });
    }
    LatticeDistribution::from_weights(
        axes,
        slice.iter().map(|(v, c)| {
            (
                v.iter()
                    .map(|&x| BigRational::from_integer(x.into()))
                    .collect(),
                c.clone(),
            )
        }),
    )
}

/// Word-length family `n ↦ Ω_n` of a grammar (`φ_n = n`).
pub fn grammar_family(g: Grammar, cap: usize) -> QuasiPowerFamily {
    let dim = g.tracked.len();
    QuasiPowerFamily::new("grammar", dim, move |n| {
        grammar_distribution_with_cap(&g, n, cap)
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Every word of length ≤ `max` derivable from the start symbol, found by
    /// breadth-first expansion of the leftmost nonterminal.
    fn enumerate_words(g: &Grammar, max: usize) -> BTreeSet<Vec<usize>> {
        let mut words = BTreeSet::new();
        let mut frontier = vec![vec![Symbol::Nonterminal(g.start())]];
        while let Some(form) = frontier.pop() {
            // each nonterminal yields at least one terminal
            if form.len() > max {
                continue;
            }
            match form
                .iter()
                .position(|s| matches!(s, Symbol::Nonterminal(_)))
            {
                None => {
                    words.insert(
                        form.iter()
                            .map(|s| match s {
                                Symbol::Terminal(t) => *t,
                                Symbol::Nonterminal(_) => unreachable!(),
                            })
                            .collect(),
                    );
                }
                Some(i) => {
                    let Symbol::Nonterminal(a) = form[i] else {
                        unreachable!()
                    };
                    for r in g.rules().iter().filter(|r| r.lhs == a) {
                        let mut next = form[..i].to_vec();
                        next.extend_from_slice(&r.rhs);
                        next.extend_from_slice(&form[i + 1..]);
                        frontier.push(next);
                    }
                }
            }
        }
        words
    }

    fn word_slices(g: &Grammar, max: usize) -> Vec<Slice> {
        let mut out = vec![Slice::new(); max + 1];
        for w in enumerate_words(g, max) {
            let v: Vec<u32> = g
                .tracked()
                .iter()
                .map(|t| w.iter().filter(|&&x| x == *t).count() as u32)
                .collect();
            *out[w.len()].entry(v).or_default() += 1u32;
        }
        out
    }

    fn word(g: &Grammar, s: &str) -> Vec<usize> {
        s.chars()
            .map(|c| {
                g.terminals()
                    .iter()
                    .position(|t| t.as_str() == c.to_string())
                    .unwrap()
            })
            .collect()
    }

    #[test]
    fn example_shape() {
        let g = Grammar::example();
        assert_eq!(g.nonterminals().len(), 2);
        assert_eq!(g.terminals().len(), 3);
        assert_eq!(g.rules().len(), 5);
        assert!(g.warnings().is_empty());
    }

    #[test]
    fn dp_matches_enumeration_up_to_twelve() {
        let g = Grammar::example();
        let table = CountTable::compute(&g, 12);
        let oracle = word_slices(&g, 12);
        for n in 1..=12 {
            assert_eq!(table.start_slice(n), &oracle[n], "n={n}");
        }
    }

    #[test]
    fn paper_word_is_in_the_language() {
        let g = Grammar::example();
        let words = enumerate_words(&g, 11);
        assert!(words.contains(&word(&g, "abcabababba")));
        let c = count_words(&g, 11).unwrap();
        assert!(c[&vec![5, 5]] >= BigUint::from(1u32));
    }

    #[test]
    fn length_two_is_ba() {
        let g = Grammar::example();
        let c = count_words(&g, 2).unwrap();
        assert_eq!(c.len(), 1);
        assert_eq!(c[&vec![1, 1]], BigUint::from(1u32));
        let d = grammar_distribution(&g, 2).unwrap();
        assert_eq!(d.len(), 1);
        assert!(count_words(&g, 1).unwrap().is_empty());
        assert!(matches!(
            grammar_distribution(&g, 1),
            Err(Error::Empty { n: 1, .. })
        ));
    }

    #[test]
    fn caps_and_bounds() {
        let g = Grammar::example();
        assert!(matches!(count_words(&g, 41), Err(Error::Capacity { .. })));
        assert!(count_words(&g, 0).is_err());
        assert!(count_words_with_cap(&g, 41, 41).is_ok());
        for (v, _) in count_words(&g, 9).unwrap() {
            assert!(v.iter().sum::<u32>() <= 9);
        }
    }

    #[test]
    fn rule_order_does_not_matter() {
        let g = Grammar::example();
        let mut spec = g.to_spec();
        spec.rules.reverse();
        spec.rules.swap(0, 2);
        let h = spec.build().unwrap();
        let a = CountTable::compute(&g, 18);
        let b = CountTable::compute(&h, 18);
        for n in 1..=18 {
            assert_eq!(a.start_slice(n), b.start_slice(n));
        }
    }

    #[test]
    fn tracking_c_conserves_length() {
        let g = Grammar::example().with_tracked(&["a", "b", "c"]).unwrap();
        let two = CountTable::compute(&Grammar::example(), 16);
        let three = CountTable::compute(&g, 16);
        for n in 1..=16 {
            let mut folded = Slice::new();
            for (v, c) in three.start_slice(n) {
                assert_eq!(v.iter().sum::<u32>() as usize, n);
                *folded.entry(v[..2].to_vec()).or_default() += c;
            }
            assert_eq!(&folded, two.start_slice(n));
        }
    }

    #[test]
    fn marginal_matches_one_axis_rerun() {
        let g = Grammar::example();
        let d = grammar_distribution(&g, 8).unwrap();
        let only_a = grammar_distribution(&g.with_tracked(&["a"]).unwrap(), 8).unwrap();
        assert!(d.marginal(&[0]).unwrap().same_law(&only_a));
        assert_eq!(d.total(), only_a.total());
    }

    #[test]
    fn growth_ratios_settle() {
        let g = Grammar::example();
        let t = CountTable::compute(&g, 40);
        let ratios: Vec<f64> = (20..40)
            .map(|n| {
                crate::distribution::to_f64(&BigRational::new(
                    t.total(n + 1).into(),
                    t.total(n).into(),
                ))
            })
            .collect();
        // successive changes shrink: the ratios approach a limit
        let early = (ratios[1] - ratios[0]).abs();
        let late = (ratios[19] - ratios[18]).abs();
        assert!(late < early, "{ratios:?}");
        assert!(ratios.iter().all(|r| *r > 1.0));
    }

    #[test]
    fn mean_is_affine_in_length() {
        let g = Grammar::example();
        let t = CountTable::compute(&g, 40);
        let ns: Vec<f64> = (20..=40).map(|n| n as f64).collect();
        for axis in 0..2 {
            let ys: Vec<f64> = (20..=40)
                .map(|n| {
                    let d = slice_distribution(t.start_slice(n), 2, n).unwrap();
                    crate::distribution::to_f64(&d.mean()[axis])
                })
                .collect();
            let k = ns.len() as f64;
            let mx = ns.iter().sum::<f64>() / k;
            let my = ys.iter().sum::<f64>() / k;
            let sxy: f64 = ns.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
            let sxx: f64 = ns.iter().map(|x| (x - mx) * (x - mx)).sum();
            let slope = sxy / sxx;
            for (x, y) in ns.iter().zip(&ys) {
                let fit = my + slope * (x - mx);
                assert!((y - fit).abs() < 1e-3 * y.abs(), "axis {axis} n={x}");
            }
        }
    }

    #[test]
    fn validation_errors() {
        let mut spec = Grammar::example().to_spec();
        spec.rules.push(RuleSpec::new("S", &["S", "S"]));
        let e = spec.build().unwrap_err();
        assert!(matches!(&e, Error::Grammar(m) if m.contains("no terminal")));

        let mut spec = Grammar::example().to_spec();
        spec.rules.push(RuleSpec {
            lhs: "S".into(),
            rhs: vec!["a".into(), "X".into()],
            line: 7,
        });
        let e = spec.build().unwrap_err();
        assert!(matches!(&e, Error::Grammar(m) if m.contains("`X`") && m.contains("line 7")));

        let mut spec = Grammar::example().to_spec();
        spec.rules.push(RuleSpec::new("T", &["a"]));
        let g = spec.build().unwrap();
        assert_eq!(g.rules().len(), 5);
        assert_eq!(g.warnings().len(), 1);

        let mut spec = Grammar::example().to_spec();
        spec.start = "a".into();
        assert!(spec.build().is_err());
        let mut spec = Grammar::example().to_spec();
        spec.tracked = vec!["S".into()];
        assert!(spec.build().is_err());
        let mut spec = Grammar::example().to_spec();
        spec.rules.push(RuleSpec::new("a", &["b"]));
        assert!(spec.build().is_err());
        let mut spec = Grammar::example().to_spec();
        spec.rules.push(RuleSpec::new("S", &[]));
        assert!(spec.build().is_err());
        let mut spec = Grammar::example().to_spec();
        spec.rules.retain(|r| r.lhs != "S");
        assert!(spec.build().is_err());
        let mut spec = Grammar::example().to_spec();
        spec.nonterminals.push("a".into());
        assert!(spec.build().is_err());
    }

    #[test]
    fn family_dimension() {
        let fam = grammar_family(Grammar::example(), 40);
        assert_eq!(fam.dim(), 2);
        assert_eq!(fam.generate(2).unwrap().len(), 1);
    }
}
