use std::path::Path;
use std::process::{Command, Output};

use quasipower_core::grammar::Grammar;

fn bin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_quasipower"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

/// Data rows of a CSV output (after the comment header and column names).
fn data_rows(text: &str) -> Vec<Vec<String>> {
    let body: String = text
        .lines()
        .filter(|l| !l.starts_with('#'))
        .map(|l| format!("{l}\n"))
        .collect();
    csv::Reader::from_reader(body.as_bytes())
        .records()
        .map(|r| r.unwrap().iter().map(String::from).collect())
        .collect()
}

#[test]
fn partitions_listing() {
    let o = bin(&["partitions", "--m", "3"]);
    assert!(o.status.success());
    let rows = data_rows(&stdout(&o));
    assert_eq!(rows.len(), 5);
    let mut mu: Vec<i64> = rows.iter().map(|r| r[3].parse().unwrap()).collect();
    mu.sort();
    assert_eq!(mu, vec![-1, -1, -1, 1, 2]);

    let o = bin(&["partitions", "--m", "1"]);
    assert_eq!(data_rows(&stdout(&o)), vec![vec!["1", "{1}", "1", "1"]]);

    let o = bin(&["partitions", "--m", "13"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("capacity"));
}

#[test]
fn be_bound_binomial_pair_holds() {
    let o = bin(&[
        "be-bound",
        "--model",
        "iid",
        "--base",
        "bernoulli2",
        "--n",
        "100",
        "--T",
        "2,5,10",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let rows = data_rows(&stdout(&o));
    assert_eq!(rows.len(), 3);
    for r in &rows {
        assert_eq!(r[7], "true");
        let rhs: f64 = r[4].parse().unwrap();
        let lhs: f64 = r[5].parse().unwrap();
        assert!(lhs < rhs);
    }
}

#[test]
fn be_bound_usage_and_non_convergence() {
    let o = bin(&["be-bound", "--n", "10", "--T", "0"]);
    assert_eq!(o.status.code(), Some(1));
    let o = bin(&["be-bound", "--T", "2"]);
    assert_eq!(o.status.code(), Some(1));
    // no refinement at all: the estimate cannot be certified
    let o = bin(&[
        "be-bound",
        "--model",
        "grammar",
        "--n",
        "12",
        "--T",
        "5",
        "--max-level",
        "0",
    ]);
    assert_eq!(o.status.code(), Some(3));
    assert_eq!(data_rows(&stdout(&o)).len(), 1);
}

#[test]
fn be_bound_json_schema() {
    let o = bin(&[
        "be-bound", "--model", "grammar", "--n", "16", "--T", "2,5", "--format", "json",
    ]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["meta"]["command"], "be-bound");
    let rows = v["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 2);
    for r in rows {
        let rep = &r["report"];
        let sum = rep["integral_term"].as_f64().unwrap()
            + rep["marginal_term"].as_f64().unwrap()
            + rep["smoothing_term"].as_f64().unwrap();
        assert!((sum - rep["rhs_total"].as_f64().unwrap()).abs() < 1e-12);
        assert_eq!(r["T"], rep["T"]);
        assert_eq!(rep["marginal_sups"].as_array().unwrap().len(), 2);
        assert_eq!(r["holds"], true);
    }
}

#[test]
fn recursive_bound_is_larger() {
    let args = ["be-bound", "--model", "grammar", "--n", "16", "--T", "5"];
    let direct = data_rows(&stdout(&bin(&args)));
    let mut rec_args = args.to_vec();
    rec_args.push("--recursive");
    let rec = data_rows(&stdout(&bin(&rec_args)));
    let d: f64 = direct[0][4].parse().unwrap();
    let r: f64 = rec[0][4].parse().unwrap();
    assert!(r >= d, "{r} < {d}");
    assert_eq!(rec[0][7], "true");
}

#[test]
fn outputs_are_deterministic() {
    for args in [
        vec!["clt-study", "--model", "grammar", "--n", "16,24"],
        vec!["be-bound", "--model", "dissection", "--n", "12", "--T", "3"],
        vec!["counts", "--model", "dissection", "--n", "5,6,7"],
    ] {
        let a = bin(&args);
        let b = bin(&args);
        assert!(a.status.success());
        assert_eq!(a.stdout, b.stdout);
    }
}

#[test]
fn study_rows_and_degenerate_demo() {
    let o = bin(&["clt-study", "--model", "grammar", "--n", "16,24,32,40"]);
    let text = stdout(&o);
    let rows = data_rows(&text);
    assert_eq!(rows.len(), 4);
    let norm: Vec<f64> = rows.iter().map(|r| r[3].parse().unwrap()).collect();
    let max = norm.iter().cloned().fold(0.0, f64::max);
    let min = norm.iter().cloned().fold(f64::INFINITY, f64::min);
    assert!(max / min < 6.0);
    assert!(text.contains("# summary d_n_decreasing: true"));

    let o = bin(&["clt-study", "--degenerate"]);
    let rows = data_rows(&stdout(&o));
    assert_eq!(rows.len(), 4);
    assert!(rows.iter().all(|r| r[1] == "1/2"));
}

#[test]
fn moments_need_analytic_data() {
    let o = bin(&["moments", "--model", "grammar", "--n", "4", "--k", "1,0"]);
    assert_eq!(o.status.code(), Some(1));
    let o = bin(&[
        "moments",
        "--base",
        "coin-asym",
        "--n",
        "4,8,16",
        "--k",
        "1,2",
    ]);
    assert!(o.status.success());
    assert!(data_rows(&stdout(&o)).iter().all(|r| r[4] == "0"));
}

#[test]
fn grammar_file_and_errors() {
    let dir = tempfile::tempdir().unwrap();
    let good = dir.path().join("g.txt");
    std::fs::write(
        &good,
        quasipower::formats::render_grammar(&Grammar::example()),
    )
    .unwrap();
    let from_file = bin(&[
        "counts",
        "--model",
        "grammar",
        "--grammar-file",
        good.to_str().unwrap(),
        "--n",
        "9",
    ]);
    let builtin = bin(&["counts", "--model", "grammar", "--n", "9"]);
    assert_eq!(data_rows(&stdout(&from_file)), data_rows(&stdout(&builtin)));

    let bad = dir.path().join("bad.txt");
    std::fs::write(
        &bad,
        "terminals: a\nnonterminals: S\nstart: S\ntrack: a\nS -> S S\n",
    )
    .unwrap();
    let o = bin(&[
        "counts",
        "--model",
        "grammar",
        "--grammar-file",
        bad.to_str().unwrap(),
        "--n",
        "3",
    ]);
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("line 5"), "{err}");

    let o = bin(&["counts", "--model", "grammar", "--n", "41"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn distribution_round_trips_into_be_bound() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("d.json");
    let o = bin(&[
        "distribution",
        "--model",
        "grammar",
        "--n",
        "14",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    assert!(o.stdout.is_empty());
    let d = quasipower::formats::distribution_from_json(&std::fs::read_to_string(&path).unwrap())
        .unwrap();
    let direct = quasipower_core::grammar::grammar_distribution(&Grammar::example(), 14).unwrap();
    assert_eq!(d, direct);

    let o = bin(&[
        "be-bound",
        "--dist-file",
        path.to_str().unwrap(),
        "--T",
        "3",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(data_rows(&stdout(&o))[0][7], "true");

    let missing = bin(&[
        "be-bound",
        "--dist-file",
        Path::new("/nonexistent.json").to_str().unwrap(),
    ]);
    assert_eq!(missing.status.code(), Some(1));
}

#[test]
fn csv_distribution_output() {
    let o = bin(&[
        "distribution",
        "--model",
        "dissection",
        "--n",
        "6",
        "--format",
        "csv",
    ]);
    let rows = data_rows(&stdout(&o));
    assert_eq!(rows.len(), 3);
    let total: u64 = rows.iter().map(|r| r[2].parse::<u64>().unwrap()).sum();
    assert_eq!(total, 38);
}
