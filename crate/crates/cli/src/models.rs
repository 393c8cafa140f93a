//! Model selection shared by the study commands.

use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use quasipower_core::dissection::{dissection_family, DissectionSpec};
use quasipower_core::distribution::LatticeDistribution;
use quasipower_core::grammar::{grammar_family, Grammar, DEFAULT_LENGTH_CAP};
use quasipower_core::quasi_power::{iid_sum_family, Mode, QuasiPowerFamily};

use crate::error::CliError;
use crate::formats::{dissection_from_json, distribution_from_json, parse_grammar, FormatError};
use crate::output::Metadata;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelKind {
    /// Sums of independent copies of a base distribution.
    Iid,
    /// Tracked terminal counts of words of a context-free language.
    Grammar,
    /// Piece counts of polygon dissections.
    Dissection,
}

/// Built-in base distributions for `--model iid`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Base {
    /// ±1 with probability 1/2.
    Coin,
    /// Two independent ±1 coins.
    Coin2,
    /// Uniform on {0,1}²; sums are pairs of independent binomials.
    Bernoulli2,
    /// Uniform on {0,1}³.
    Bernoulli3,
    /// A ±1 coin next to an independent coin with P(1) = 1/4.
    CoinAsym,
}

impl Base {
    pub fn distribution(self) -> LatticeDistribution {
        let atoms: Vec<(Vec<i64>, u64)> = match self {
            Base::Coin => vec![(vec![-1], 1), (vec![1], 1)],
            Base::Coin2 => vec![
                (vec![-1, -1], 1),
                (vec![-1, 1], 1),
                (vec![1, -1], 1),
                (vec![1, 1], 1),
            ],
            Base::Bernoulli2 => vec![
                (vec![0, 0], 1),
                (vec![0, 1], 1),
                (vec![1, 0], 1),
                (vec![1, 1], 1),
            ],
            Base::Bernoulli3 => (0..8)
                .map(|b| (vec![b & 1, (b >> 1) & 1, (b >> 2) & 1], 1))
                .collect(),
            Base::CoinAsym => vec![
                (vec![-1, 0], 3),
                (vec![-1, 1], 1),
                (vec![1, 0], 3),
                (vec![1, 1], 1),
            ],
        };
        let dim = atoms[0].0.len();
        LatticeDistribution::from_integer_points(dim, &atoms).expect("built-in bases are valid")
    }

    fn name(self) -> &'static str {
        match self {
            Base::Coin => "coin",
            Base::Coin2 => "coin2",
            Base::Bernoulli2 => "bernoulli2",
            Base::Bernoulli3 => "bernoulli3",
            Base::CoinAsym => "coin-asym",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Exact,
    Analytic,
}

impl ModeArg {
    pub fn mode(self) -> Mode {
        match self {
            ModeArg::Exact => Mode::Exact,
            ModeArg::Analytic => Mode::Analytic,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ModeArg::Exact => "exact",
            ModeArg::Analytic => "analytic",
        }
    }

    pub fn assumption(self) -> &'static str {
        match self {
            ModeArg::Exact => "standardization: centred at the exact mean, scaled by sqrt(n), reference covariance = exact covariance / n",
            ModeArg::Analytic => "standardization: centred at grad u(0) n, scaled by sqrt(n), reference covariance = Hessian of u at 0",
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct ModelArgs {
    #[arg(long, value_enum, default_value = "iid")]
    pub model: ModelKind,
    /// Built-in base distribution for the iid model.
    #[arg(long, value_enum, default_value = "coin2")]
    pub base: Base,
    /// Base distribution from a JSON file (overrides --base).
    #[arg(long)]
    pub base_file: Option<PathBuf>,
    /// Series order of the cumulant function for the iid model.
    #[arg(long, default_value_t = 6)]
    pub order: u32,
    /// Grammar file; the built-in example grammar if absent.
    #[arg(long)]
    pub grammar_file: Option<PathBuf>,
    /// Maximal word length for the grammar model.
    #[arg(long, default_value_t = DEFAULT_LENGTH_CAP)]
    pub cap: usize,
    /// Dissection size classes: inline JSON (`[[3],[4]]` or
    /// `{"classes": [[3],[4]]}`) or a path to such a file.
    #[arg(long, default_value = "[[3],[4]]")]
    pub classes: String,
}

pub fn read_file(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn in_file<T>(path: &Path, r: Result<T, FormatError>) -> Result<T, CliError> {
    r.map_err(|source| CliError::Input {
        path: path.to_path_buf(),
        source,
    })
}

pub fn load_grammar(path: Option<&Path>) -> Result<Grammar, CliError> {
    match path {
        None => Ok(Grammar::example()),
        Some(p) => in_file(p, parse_grammar(&read_file(p)?)),
    }
}

pub fn load_classes(arg: &str) -> Result<DissectionSpec, CliError> {
    let t = arg.trim();
    if t.starts_with('[') {
        Ok(dissection_from_json(&format!("{{\"classes\": {t}}}"))?)
    } else if t.starts_with('{') {
        Ok(dissection_from_json(t)?)
    } else {
        let p = Path::new(t);
        in_file(p, dissection_from_json(&read_file(p)?))
    }
}

pub fn load_distribution(path: &Path) -> Result<LatticeDistribution, CliError> {
    in_file(path, distribution_from_json(&read_file(path)?))
}

/// A family plus what the output metadata should say about it.
pub struct LoadedModel {
    pub family: QuasiPowerFamily,
    pub kind: ModelKind,
    pub grammar: Option<Grammar>,
    pub dissection: Option<DissectionSpec>,
    pub params: Vec<(String, String)>,
    pub assumptions: Vec<String>,
    pub warnings: Vec<String>,
}

impl LoadedModel {
    /// Adds model parameters and assumptions to `meta`.
    pub fn describe(&self, mut meta: Metadata) -> Metadata {
        for (k, v) in &self.params {
            meta = meta.param(k, v);
        }
        for a in &self.assumptions {
            meta = meta.assume(a.clone());
        }
        meta
    }

    /// Axis labels of the lattice.
    pub fn axis_names(&self) -> Vec<String> {
        if let Some(g) = &self.grammar {
            g.tracked()
                .iter()
                .map(|&t| format!("x_{}", g.terminals()[t]))
                .collect()
        } else {
            (1..=self.family.dim()).map(|i| format!("r{i}")).collect()
        }
    }
}

pub fn load_model(args: &ModelArgs) -> Result<LoadedModel, CliError> {
    let mut params = vec![(
        "model".to_string(),
        format!("{:?}", args.model).to_lowercase(),
    )];
    match args.model {
        ModelKind::Iid => {
            let (base, name) = match &args.base_file {
                Some(p) => (load_distribution(p)?, p.display().to_string()),
                None => (args.base.distribution(), args.base.name().to_string()),
            };
            params.push(("base".into(), name.clone()));
            params.push(("order".into(), args.order.to_string()));
            let family = iid_sum_family(name, base, args.order)?;
            Ok(LoadedModel {
                family,
                kind: args.model,
                grammar: None,
                dissection: None,
                params,
                assumptions: vec!["Omega_n is the sum of n independent copies of the base distribution; phi_n = n".into()],
                warnings: Vec::new(),
            })
        }
        ModelKind::Grammar => {
            let g = load_grammar(args.grammar_file.as_deref())?;
            params.push((
                "grammar".into(),
                args.grammar_file
                    .as_ref()
                    .map(|p| p.display().to_string())
                    .unwrap_or_else(|| "built-in example".into()),
            ));
            params.push(("cap".into(), args.cap.to_string()));
            let warnings = g.warnings().to_vec();
            Ok(LoadedModel {
                family: grammar_family(g.clone(), args.cap),
                kind: args.model,
                grammar: Some(g),
                dissection: None,
                params,
                assumptions: vec![
                    "uniform distribution over the words of length n; phi_n = n".into(),
                    "counts are leftmost derivations, equal to word counts for an unambiguous grammar (the example is checked by enumeration up to length 12)".into(),
                ],
                warnings,
            })
        }
        ModelKind::Dissection => {
            let spec = load_classes(&args.classes)?;
            params.push(("classes".into(), crate::formats::dissection_to_json(&spec)));
            Ok(LoadedModel {
                family: dissection_family(spec.clone()),
                kind: args.model,
                grammar: None,
                dissection: Some(spec),
                params,
                assumptions: vec!["uniform distribution over the dissections of a labelled convex n-gon; phi_n = n".into()],
                warnings: Vec::new(),
            })
        }
    }
}
