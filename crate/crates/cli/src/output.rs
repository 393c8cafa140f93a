//! Rendering of command results as CSV or JSON with a metadata header.

use serde_json::{Map, Value};

/// Output format selected with `--format`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

/// Provenance of an output: command, parameters, tool version and the
/// modelling assumptions in force. Nothing time- or host-dependent goes in
/// here, so reruns are byte-identical.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Metadata {
    pub command: String,
    pub params: Vec<(String, String)>,
    pub assumptions: Vec<String>,
    pub summary: Vec<(String, String)>,
}

impl Metadata {
    pub fn new(command: &str) -> Self {
        Self {
            command: command.into(),
            ..Self::default()
        }
    }

    pub fn param(mut self, key: &str, value: impl ToString) -> Self {
        self.params.push((key.into(), value.to_string()));
        self
    }

    pub fn assume(mut self, text: impl Into<String>) -> Self {
        self.assumptions.push(text.into());
        self
    }

    pub fn summarize(&mut self, key: &str, value: impl ToString) {
        self.summary.push((key.into(), value.to_string()));
    }

    fn to_json(&self) -> Value {
        let pairs = |v: &[(String, String)]| {
            Value::Object(
                v.iter()
                    .map(|(k, x)| (k.clone(), Value::from(x.clone())))
                    .collect(),
            )
        };
        let mut m = Map::new();
        m.insert("command".into(), self.command.clone().into());
        m.insert("version".into(), env!("CARGO_PKG_VERSION").into());
        m.insert("params".into(), pairs(&self.params));
        m.insert("assumptions".into(), self.assumptions.clone().into());
        if !self.summary.is_empty() {
            m.insert("summary".into(), pairs(&self.summary));
        }
        Value::Object(m)
    }

    fn to_comment_lines(&self) -> String {
        let mut s = format!(
            "# command: {}\n# version: {}\n",
            self.command,
            env!("CARGO_PKG_VERSION")
        );
        for (k, v) in &self.params {
            s.push_str(&format!("# param {k}: {v}\n"));
        }
        for a in &self.assumptions {
            s.push_str(&format!("# assumption: {a}\n"));
        }
        for (k, v) in &self.summary {
            s.push_str(&format!("# summary {k}: {v}\n"));
        }
        s
    }
}

/// A finished result: a table for CSV and a document for JSON.
#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub meta: Metadata,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
    /// Top-level JSON fields besides `meta`; defaults to `rows` as objects.
    pub json: Option<Map<String, Value>>,
    pub csv_allowed: bool,
}

impl Report {
    pub fn table(meta: Metadata, header: &[&str], rows: Vec<Vec<String>>) -> Self {
        Self {
            meta,
            header: header.iter().map(|s| s.to_string()).collect(),
            rows,
            json: None,
            csv_allowed: true,
        }
    }

    pub fn with_json(mut self, fields: Map<String, Value>) -> Self {
        self.json = Some(fields);
        self
    }

    pub fn render(&self, format: Format) -> Result<String, String> {
        match format {
            Format::Csv if self.csv_allowed => Ok(self.render_csv()),
            Format::Csv => Err(format!("`{}` only writes JSON", self.meta.command)),
            Format::Json => Ok(self.render_json()),
        }
    }

    fn render_csv(&self) -> String {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        w.write_record(&self.header).expect("in-memory write");
        for r in &self.rows {
            w.write_record(r).expect("in-memory write");
        }
        let body =
            String::from_utf8(w.into_inner().expect("in-memory write")).expect("utf-8 fields");
        self.meta.to_comment_lines() + &body
    }

    fn render_json(&self) -> String {
        let mut doc = Map::new();
        doc.insert("meta".into(), self.meta.to_json());
        match &self.json {
            Some(fields) => doc.extend(fields.clone()),
            None => {
                let rows = self
                    .rows
                    .iter()
                    .map(|r| {
                        Value::Object(
                            self.header
                                .iter()
                                .zip(r)
                                .map(|(h, v)| (h.clone(), Value::from(v.clone())))
                                .collect(),
                        )
                    })
                    .collect();
                doc.insert("rows".into(), Value::Array(rows));
            }
        }
        let mut s =
            serde_json::to_string_pretty(&Value::Object(doc)).expect("plain data serializes");
        s.push('\n');
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Report {
        let meta = Metadata::new("demo").param("n", 3).assume("uniform");
        Report::table(meta, &["a", "b"], vec![vec!["1".into(), "{1,2}".into()]])
    }

    #[test]
    fn csv_has_header_and_quotes() {
        let s = sample().render(Format::Csv).unwrap();
        assert!(s.starts_with("# command: demo\n# version: "));
        assert!(s.contains("# param n: 3\n# assumption: uniform\n"));
        assert!(s.ends_with("a,b\n1,\"{1,2}\"\n"));
    }

    #[test]
    fn json_wraps_rows() {
        let v: Value = serde_json::from_str(&sample().render(Format::Json).unwrap()).unwrap();
        assert_eq!(v["meta"]["command"], "demo");
        assert_eq!(v["meta"]["params"]["n"], "3");
        assert_eq!(v["rows"][0]["b"], "{1,2}");
    }
}
