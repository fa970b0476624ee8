//! Versioned report envelope and JSON/CSV emission.

use serde::Serialize;
use serde_json::Value;

use grsk::{Error, Result};

pub const SCHEMA: &str = "grsk-report/1";

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

/// A plot-ready table.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Table { header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        self.rows.push(row);
    }

    /// `path,value` rows for every scalar leaf of a JSON value.
    pub fn flatten(v: &Value) -> Self {
        let mut t = Table::new(&["key", "value"]);
        fn walk(prefix: &str, v: &Value, t: &mut Table) {
            match v {
                Value::Object(m) => {
                    for (k, x) in m {
                        let p = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                        walk(&p, x, t);
                    }
                }
                Value::Array(a) => {
                    for (i, x) in a.iter().enumerate() {
                        walk(&format!("{prefix}[{i}]"), x, t);
                    }
                }
                Value::String(s) => t.push(vec![prefix.to_string(), s.clone()]),
                other => t.push(vec![prefix.to_string(), other.to_string()]),
            }
        }
        walk("", v, &mut t);
        t
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let io = |e: csv::Error| Error::Parse(e.to_string());
        w.write_record(&self.header).map_err(io)?;
        for r in &self.rows {
            w.write_record(r).map_err(io)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Parse(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| Error::Parse(e.to_string()))
    }
}

/// What a command produced. `ok = false` makes the process exit with 1.
#[derive(Clone, Debug)]
pub struct Output {
    pub result: Value,
    pub table: Option<Table>,
    pub ok: bool,
}

impl Output {
    pub fn new(result: impl Serialize) -> Result<Self> {
        Ok(Output { result: to_value(result)?, table: None, ok: true })
    }

    pub fn with_table(mut self, t: Table) -> Self {
        self.table = Some(t);
        self
    }

    pub fn with_ok(mut self, ok: bool) -> Self {
        self.ok = ok;
        self
    }
}

pub fn to_value(v: impl Serialize) -> Result<Value> {
    serde_json::to_value(v).map_err(|e| Error::Parse(format!("serialization: {e}")))
}

#[derive(Serialize)]
struct Envelope<'a> {
    schema: &'static str,
    command: &'a str,
    seed: u64,
    result: &'a Value,
}

/// The report text in the requested format. The envelope carries no
/// timing or thread information, so equal inputs give equal bytes.
pub fn render(command: &str, seed: u64, out: &Output, format: Format) -> Result<String> {
    match format {
        Format::Json => {
            let env = Envelope { schema: SCHEMA, command, seed, result: &out.result };
            let mut s = serde_json::to_string_pretty(&env).map_err(|e| Error::Parse(e.to_string()))?;
            s.push('\n');
            Ok(s)
        }
        Format::Csv => match &out.table {
            Some(t) => t.to_csv(),
            None => Table::flatten(&out.result).to_csv(),
        },
    }
}

/// JSON diagnostics for a failed command.
pub fn error_json(command: &str, e: &Error) -> String {
    let kind = match e {
        Error::Domain(_) => "domain",
        Error::Contract(_) => "contract",
        Error::Size(_) => "size",
        Error::Pole { .. } => "pole",
        Error::Convergence(_) => "convergence",
        Error::Parse(_) => "parse",
    };
    let v = serde_json::json!({
        "schema": SCHEMA,
        "command": command,
        "error": { "kind": kind, "message": e.to_string() },
    });
    format!("{}\n", serde_json::to_string_pretty(&v).unwrap_or_default())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flatten_and_csv() {
        let v = serde_json::json!({"a": {"b": 1.5, "c": [true, "x"]}});
        let t = Table::flatten(&v);
        assert_eq!(t.rows, vec![vec!["a.b", "1.5"], vec!["a.c[0]", "true"], vec!["a.c[1]", "x"]]);
        assert_eq!(t.to_csv().unwrap(), "key,value\na.b,1.5\na.c[0],true\na.c[1],x\n");
    }

    #[test]
    fn envelope_is_versioned() {
        let out = Output::new(serde_json::json!({"x": 1})).unwrap();
        let s = render("demo", 7, &out, Format::Json).unwrap();
        let v: Value = serde_json::from_str(&s).unwrap();
        assert_eq!(v["schema"], SCHEMA);
        assert_eq!(v["seed"], 7);
        assert!(error_json("demo", &Error::Size("big".into())).contains("\"size\""));
    }
}
