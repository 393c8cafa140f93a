//! Command-line definitions and command implementations.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use num_rational::BigRational;
use quasipower_core::berry_esseen::{
    be_rhs_recursive, verify_inequality, BoundConfig, Verification,
};
use quasipower_core::dissection::{counts_from_series, solve_dissection_series};
use quasipower_core::distribution::{
    kolmogorov_distance, to_f64, GaussianSpec, LatticeDistribution,
};
use quasipower_core::grammar::CountTable;
use quasipower_core::partition::{enumerate_partitions, MAX_PARTITION_SET};
use quasipower_core::quadrature::RefineConfig;
use quasipower_core::quasi_power::{
    convergence_study, degenerate_demo, first_moments, moment_check, normalized_spread,
    standardized_distribution,
};
use serde_json::{Map, Value};

use crate::error::{usage, CliError};
use crate::formats::distribution_to_value;
use crate::models::{load_distribution, load_model, ModeArg, ModelArgs, ModelKind};
use crate::output::{Format, Metadata, Report};

#[derive(Debug, Parser)]
#[command(
    name = "quasipower",
    version,
    about = "Exact quasi-power families and multivariate Berry-Esseen bounds"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Write the result here instead of standard output.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Output format; CSV by default, JSON for `distribution`.
    #[arg(long, value_enum, global = true)]
    pub format: Option<Format>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// List the set partitions of {1..m} with their Möbius coefficients.
    Partitions {
        #[arg(long)]
        m: usize,
    },
    /// Evaluate the Berry-Esseen right-hand side over a sweep of T and compare
    /// it with the Kolmogorov distance.
    BeBound(BeBoundArgs),
    /// Kolmogorov distance of standardized Omega_n to its normal limit.
    CltStudy(StudyArgs),
    /// Exact cross-moments against the moment polynomial.
    Moments(MomentArgs),
    /// Exact counts a_n(x) of a grammar or dissection model.
    Counts(CountArgs),
    /// The distribution of Omega_n as JSON (or CSV).
    Distribution(DistributionArgs),
}

#[derive(Debug, Args)]
pub struct BeBoundArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Use this distribution as-is against the normal law with its exact
    /// mean and covariance, instead of a model.
    #[arg(long)]
    pub dist_file: Option<PathBuf>,
    /// Index n of Omega_n.
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long, value_enum, default_value = "exact")]
    pub mode: ModeArg,
    /// Truncation levels T of the integral.
    #[arg(long = "T", value_delimiter = ',', default_values_t = [2.0, 5.0, 10.0])]
    pub t: Vec<f64>,
    /// Absolute tolerance of Gaussian CDF values.
    #[arg(long, default_value_t = 1e-4)]
    pub tol: f64,
    /// Relative tolerance of the integral term.
    #[arg(long, default_value_t = 1e-6)]
    pub quad_tol: f64,
    /// Number of node doublings allowed.
    #[arg(long, default_value_t = RefineConfig::default().max_level)]
    pub max_level: u32,
    /// Replace marginal sups by their own bounds, recursively.
    #[arg(long)]
    pub recursive: bool,
}

#[derive(Debug, Args)]
pub struct StudyArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, value_delimiter = ',')]
    pub n: Vec<usize>,
    #[arg(long, value_enum, default_value = "exact")]
    pub mode: ModeArg,
    /// Absolute tolerance of Gaussian CDF values.
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
    /// Run the ±1/sqrt(n) example whose limit is a point mass instead.
    #[arg(long)]
    pub degenerate: bool,
}

#[derive(Debug, Args)]
pub struct MomentArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Exponent vector k; omit for the mean and covariance table.
    #[arg(long, value_delimiter = ',')]
    pub k: Vec<u32>,
    #[arg(long, value_delimiter = ',', required = true)]
    pub n: Vec<usize>,
}

#[derive(Debug, Args)]
pub struct CountArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, value_delimiter = ',', required = true)]
    pub n: Vec<usize>,
}

#[derive(Debug, Args)]
pub struct DistributionArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long)]
    pub n: usize,
    /// Write the standardized distribution instead.
    #[arg(long, value_enum)]
    pub standardize: Option<ModeArg>,
}

/// Rendered output plus flags for the exit status.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub text: String,
    pub non_converged: bool,
    pub warnings: Vec<String>,
}

pub fn run(cli: &Cli) -> Result<Outcome, CliError> {
    let (report, non_converged, warnings) = match &cli.command {
        Command::Partitions { m } => (partitions(*m)?, false, Vec::new()),
        Command::BeBound(a) => be_bound(a)?,
        Command::CltStudy(a) => clt_study(a)?,
        Command::Moments(a) => moments(a)?,
        Command::Counts(a) => counts(a)?,
        Command::Distribution(a) => distribution(a)?,
    };
    let default = match cli.command {
        Command::Distribution(_) => Format::Json,
        _ => Format::Csv,
    };
    let text = report
        .render(cli.format.unwrap_or(default))
        .map_err(CliError::Usage)?;
    Ok(Outcome {
        text,
        non_converged,
        warnings,
    })
}

type Ran = (Report, bool, Vec<String>);

fn rat(q: &BigRational) -> String {
    q.to_string()
}

fn num(x: f64) -> String {
    format!("{x}")
}

fn join<T: ToString>(v: &[T]) -> String {
    v.iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

pub fn partitions(m: usize) -> Result<Report, CliError> {
    if m == 0 {
        return Err(usage("m must be at least 1"));
    }
    let set: Vec<usize> = (1..=m).collect();
    let parts = enumerate_partitions(&set)?;
    let rows = parts
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let blocks: String = p
                .blocks()
                .iter()
                .map(|b| format!("{{{}}}", join(b)))
                .collect();
            vec![
                (i + 1).to_string(),
                blocks,
                p.len().to_string(),
                p.mobius().to_string(),
            ]
        })
        .collect();
    let meta = Metadata::new("partitions")
        .param("m", m)
        .assume(format!("m is at most {MAX_PARTITION_SET}"));
    Ok(Report::table(
        meta,
        &["index", "blocks", "num_blocks", "mu"],
        rows,
    ))
}

fn bound_config(a: &BeBoundArgs) -> Result<BoundConfig, CliError> {
    if a.t.is_empty() {
        return Err(usage("--T needs at least one value"));
    }
    if let Some(t) = a.t.iter().find(|t| !(t.is_finite() && **t > 0.0)) {
        return Err(usage(format!("T must be positive and finite, got {t}")));
    }
    if !(a.tol > 0.0) || !(a.quad_tol > 0.0) {
        return Err(usage("tolerances must be positive"));
    }
    Ok(BoundConfig {
        quad_rel_tol: a.quad_tol,
        max_level: a.max_level,
        cdf_tol: a.tol,
        ..BoundConfig::default()
    })
}

fn be_bound(a: &BeBoundArgs) -> Result<Ran, CliError> {
    let config = bound_config(a)?;
    let mut meta = Metadata::new("be-bound");
    let mut warnings = Vec::new();
    let (x, g) = match &a.dist_file {
        Some(p) => {
            let d = load_distribution(p)?;
            meta = meta
                .param("dist_file", p.display())
                .assume("reference normal has the exact mean and covariance of the distribution");
            let mean = d.mean().iter().map(to_f64).collect();
            let cov = d
                .covariance()
                .iter()
                .map(|r| r.iter().map(to_f64).collect())
                .collect();
            let g = GaussianSpec::new(mean, cov)?;
            (d, g)
        }
        None => {
            let n =
                a.n.ok_or_else(|| usage("--n is required unless --dist-file is given"))?;
            let model = load_model(&a.model)?;
            warnings.extend(model.warnings.iter().cloned());
            meta = model
                .describe(meta)
                .param("n", n)
                .param("mode", a.mode.name())
                .assume(a.mode.assumption());
            let s = standardized_distribution(&model.family, n, a.mode.mode())?;
            if let Some(k) = &s.kept_axes {
                meta = meta.assume(format!(
                    "covariance is singular; the law is supported on an affine subspace parametrized by axes {}",
                    join(k)
                ));
            }
            (s.distribution, s.gaussian)
        }
    };
    meta = meta
        .param("T", join(&a.t))
        .param("tol", a.tol)
        .param("quad_tol", a.quad_tol)
        .param("max_level", a.max_level)
        .param("recursive", a.recursive)
        .assume(
            "Kolmogorov sup evaluated at the atoms, their left limits and +infinity on each axis",
        );
    let rows: Vec<Verification> = if a.recursive {
        let lhs = kolmogorov_distance(&x, &g, config.cdf_tol)?;
        a.t.iter()
            .map(|&t| {
                let mut report = be_rhs_recursive(&x, &g, t, &config)?;
                report.lhs_sup = Some(lhs);
                let slack = config.cdf_tol + report.quadrature_error;
                Ok(Verification {
                    t,
                    lhs,
                    rhs: report.rhs_total,
                    slack,
                    holds: lhs <= report.rhs_total + slack,
                    report,
                })
            })
            .collect::<Result<_, CliError>>()?
    } else {
        verify_inequality(&x, &g, &a.t, &config)?
    };
    let non_converged = rows.iter().any(|r| !r.report.converged);
    if non_converged {
        warnings
            .push("integral refinement did not reach the requested tolerance for some T".into());
    }
    meta.summarize("all_hold", rows.iter().all(|r| r.holds));
    meta.summarize("all_converged", !non_converged);
    let table = rows
        .iter()
        .map(|r| {
            vec![
                num(r.t),
                num(r.report.integral_term),
                num(r.report.marginal_term),
                num(r.report.smoothing_term),
                num(r.rhs),
                num(r.lhs),
                num(r.slack),
                r.holds.to_string(),
                num(r.report.quadrature_error),
                r.report.converged.to_string(),
            ]
        })
        .collect();
    let mut json = Map::new();
    json.insert(
        "rows".into(),
        serde_json::to_value(&rows).expect("plain data serializes"),
    );
    let report = Report::table(
        meta,
        &[
            "T",
            "integral",
            "marginal",
            "smoothing",
            "rhs",
            "lhs",
            "slack",
            "holds",
            "quad_error",
            "converged",
        ],
        table,
    )
    .with_json(json);
    Ok((report, non_converged, warnings))
}

fn clt_study(a: &StudyArgs) -> Result<Ran, CliError> {
    if !(a.tol > 0.0) {
        return Err(usage("--tol must be positive"));
    }
    if a.degenerate {
        let ns = if a.n.is_empty() {
            vec![1, 10, 100, 10000]
        } else {
            a.n.clone()
        };
        let rows = degenerate_demo(&ns, a.tol)?;
        let meta = Metadata::new("clt-study")
            .param("degenerate", true)
            .param("n", join(&ns))
            .param("tol", a.tol)
            .assume("Omega_n = +-1 with probability 1/2, scaled by 1/sqrt(n); limit is the point mass at 0");
        let table = rows
            .iter()
            .map(|r| {
                vec![
                    r.n.to_string(),
                    rat(&r.sup_to_limit),
                    num(r.sup_to_shrinking_normal),
                ]
            })
            .collect();
        return Ok((
            Report::table(
                meta,
                &["n", "sup_to_limit", "sup_to_normal_var_1_over_n"],
                table,
            ),
            false,
            Vec::new(),
        ));
    }
    if a.n.is_empty() {
        return Err(usage("--n needs at least one value"));
    }
    let model = load_model(&a.model)?;
    let mut meta = model
        .describe(Metadata::new("clt-study"))
        .param("n", join(&a.n))
        .param("mode", a.mode.name())
        .param("tol", a.tol)
        .assume(a.mode.assumption());
    let rows = convergence_study(&model.family, &a.n, a.mode.mode(), a.tol)?;
    meta.summarize("max_over_min_d_n_sqrt_phi", num(normalized_spread(&rows)));
    meta.summarize(
        "d_n_decreasing",
        rows.windows(2).all(|w| w[1].d_n < w[0].d_n),
    );
    let table = rows
        .iter()
        .map(|r| {
            vec![
                r.n.to_string(),
                num(r.phi_n),
                num(r.d_n),
                num(r.normalized),
                a.mode.name().to_string(),
            ]
        })
        .collect();
    Ok((
        Report::table(meta, &["n", "phi_n", "d_n", "d_n_sqrt_phi", "mode"], table),
        false,
        model.warnings.clone(),
    ))
}

fn moments(a: &MomentArgs) -> Result<Ran, CliError> {
    let model = load_model(&a.model)?;
    if model.family.analytic().is_none() {
        return Err(usage(
            "moment checks need the iid model, whose cumulant function is known",
        ));
    }
    let meta = model
        .describe(Metadata::new("moments"))
        .param("n", join(&a.n));
    if a.k.is_empty() {
        let meta =
            meta.assume("first moments against grad u(0) n + grad v(0) and H_u(0) n + H_v(0)");
        let mut table = Vec::new();
        for &n in &a.n {
            let f = first_moments(&model.family, n)?;
            for (i, (e, p)) in f.mean.iter().zip(&f.predicted_mean).enumerate() {
                table.push(vec![
                    n.to_string(),
                    format!("mean[{i}]"),
                    rat(e),
                    rat(p),
                    rat(&(e - p)),
                ]);
            }
            for (i, (re, rp)) in f.cov.iter().zip(&f.predicted_cov).enumerate() {
                for (j, (e, p)) in re.iter().zip(rp).enumerate() {
                    table.push(vec![
                        n.to_string(),
                        format!("cov[{i}][{j}]"),
                        rat(e),
                        rat(p),
                        rat(&(e - p)),
                    ]);
                }
            }
        }
        return Ok((
            Report::table(
                meta,
                &["n", "quantity", "exact", "predicted", "difference"],
                table,
            ),
            false,
            Vec::new(),
        ));
    }
    let meta = meta
        .param("k", join(&a.k))
        .assume("exact: E prod Omega_n^k / prod k!, predicted: moment polynomial p_k(n)");
    let rows = moment_check(&model.family, &a.k, &a.n)?;
    let k = join(&a.k);
    let table = rows
        .iter()
        .map(|r| {
            vec![
                r.n.to_string(),
                k.clone(),
                rat(&r.exact),
                rat(&r.predicted),
                rat(&r.abs_error),
            ]
        })
        .collect();
    Ok((
        Report::table(meta, &["n", "k", "exact", "predicted", "abs_error"], table),
        false,
        Vec::new(),
    ))
}

fn counts(a: &CountArgs) -> Result<Ran, CliError> {
    let model = load_model(&a.model)?;
    let max = *a.n.iter().max().expect("required");
    let meta = model
        .describe(Metadata::new("counts"))
        .param("n", join(&a.n));
    let mut ns = a.n.clone();
    ns.sort_unstable();
    ns.dedup();
    let mut table = Vec::new();
    let mut push = |n: usize, x: &[u32], c: String| {
        let mut row = vec![n.to_string()];
        row.extend(x.iter().map(|v| v.to_string()));
        row.push(c);
        table.push(row);
    };
    match model.kind {
        ModelKind::Grammar => {
            let g = model.grammar.as_ref().expect("grammar model");
            if ns[0] == 0 {
                return Err(usage("word lengths must be positive"));
            }
            if max > a.model.cap {
                return Err(quasipower_core::Error::Capacity {
                    what: "word length",
                    got: max,
                    limit: a.model.cap,
                }
                .into());
            }
            let t = CountTable::compute(g, max);
            for &n in &ns {
                for (x, c) in t.start_slice(n) {
                    push(n, x, c.to_string());
                }
            }
        }
        ModelKind::Dissection => {
            let spec = model.dissection.as_ref().expect("dissection model");
            if ns[0] < 2 {
                return Err(usage("polygon sizes must be at least 2"));
            }
            let solved = solve_dissection_series(spec, max - 1)?;
            for &n in &ns {
                for (x, c) in counts_from_series(&solved, n)? {
                    push(n, &x, c.to_string());
                }
            }
        }
        ModelKind::Iid => {
            for &n in &ns {
                let d = model.family.generate(n)?;
                for atom in d.atoms() {
                    let x: Vec<String> = atom.point.iter().map(rat).collect();
                    let mut row = vec![n.to_string()];
                    row.extend(x);
                    row.push(atom.weight.to_string());
                    table.push(row);
                }
            }
        }
    }
    let mut header = vec!["n".to_string()];
    header.extend(model.axis_names());
    header.push("count".into());
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    Ok((
        Report::table(meta, &header, table),
        false,
        model.warnings.clone(),
    ))
}

fn distribution(a: &DistributionArgs) -> Result<Ran, CliError> {
    let model = load_model(&a.model)?;
    let mut meta = model
        .describe(Metadata::new("distribution"))
        .param("n", a.n);
    let d: LatticeDistribution = match a.standardize {
        None => model.family.generate(a.n)?,
        Some(mode) => {
            meta = meta
                .param("standardize", mode.name())
                .assume(mode.assumption());
            let s = standardized_distribution(&model.family, a.n, mode.mode())?;
            if let Some(k) = &s.kept_axes {
                meta = meta.assume(format!(
                    "covariance is singular; only axes {} are kept",
                    join(k)
                ));
            }
            s.distribution
        }
    };
    let mut header: Vec<String> = model.axis_names();
    if a.standardize.is_some() || header.len() != d.dim() {
        header = (1..=d.dim()).map(|i| format!("x{i}")).collect();
    }
    header.push("weight".into());
    let rows = d
        .atoms()
        .iter()
        .map(|atom| {
            let mut r: Vec<String> = atom.point.iter().map(rat).collect();
            r.push(atom.weight.to_string());
            r
        })
        .collect();
    let Value::Object(fields) = distribution_to_value(&d) else {
        unreachable!("distributions serialize to objects")
    };
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    Ok((
        Report::table(meta, &header, rows).with_json(fields),
        false,
        model.warnings.clone(),
    ))
}
