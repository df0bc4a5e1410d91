//! CSV and JSON emitters. Floats go through the same 12-significant-digit
//! formatter in both, so the two documents carry identical numbers.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use cascade_core::table::{format_sig, Table, Value, SIG_DIGITS};
use serde_json::{Map, Number, Value as Json};

use crate::args::{Format, OutputArgs};
use crate::error::CliError;

/// Ordered key/value metadata echoed into JSON output.
#[derive(Default, Debug, Clone)]
pub struct Meta(Map<String, Json>);

impl Meta {
    pub fn new(command: &str) -> Self {
        let mut m = Map::new();
        m.insert("command".into(), command.into());
        m.insert("version".into(), env!("CARGO_PKG_VERSION").into());
        Self(m)
    }

    pub fn set(&mut self, key: &str, value: impl Into<MetaValue>) -> &mut Self {
        self.0.insert(key.into(), value.into().0);
        self
    }
}

pub struct MetaValue(Json);

impl From<f64> for MetaValue {
    fn from(x: f64) -> Self {
        MetaValue(float(x))
    }
}

impl From<usize> for MetaValue {
    fn from(x: usize) -> Self {
        MetaValue(Json::from(x))
    }
}

impl From<bool> for MetaValue {
    fn from(x: bool) -> Self {
        MetaValue(Json::Bool(x))
    }
}

impl From<&str> for MetaValue {
    fn from(x: &str) -> Self {
        MetaValue(Json::from(x))
    }
}

impl From<&[f64]> for MetaValue {
    fn from(xs: &[f64]) -> Self {
        MetaValue(Json::Array(xs.iter().map(|&x| float(x)).collect()))
    }
}

impl From<Option<f64>> for MetaValue {
    fn from(x: Option<f64>) -> Self {
        MetaValue(x.map_or(Json::Null, float))
    }
}

impl From<Meta> for MetaValue {
    fn from(m: Meta) -> Self {
        MetaValue(Json::Object(m.0))
    }
}

/// Nested object without the command/version header.
pub fn object() -> Meta {
    Meta::default()
}

fn float(x: f64) -> Json {
    if !x.is_finite() {
        return Json::Null;
    }
    // Keeps the formatted digits verbatim (arbitrary_precision).
    format_sig(x, SIG_DIGITS).parse::<Number>().map_or(Json::Null, Json::Number)
}

fn json_value(v: &Value) -> Json {
    match v {
        Value::Int(i) => Json::from(*i),
        Value::Float(x) => float(*x),
        Value::Bool(b) => Json::Bool(*b),
        Value::Text(s) => Json::String(s.clone()),
        Value::Missing => Json::Null,
    }
}

pub fn write_csv<W: Write>(table: &Table, out: W) -> Result<(), CliError> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    w.write_record(table.columns())?;
    for row in table.rows() {
        w.write_record(row.iter().map(Value::render))?;
    }
    w.flush()?;
    Ok(())
}

pub fn to_json(table: &Table, meta: Meta) -> Json {
    let mut meta = meta.0;
    meta.insert("columns".into(), Json::Array(table.columns().iter().map(|c| Json::from(c.as_str())).collect()));
    let rows = table
        .rows()
        .iter()
        .map(|row| {
            let obj: Map<String, Json> =
                table.columns().iter().zip(row).map(|(c, v)| (c.clone(), json_value(v))).collect();
            Json::Object(obj)
        })
        .collect();
    let mut doc = Map::new();
    doc.insert("meta".into(), Json::Object(meta));
    doc.insert("rows".into(), Json::Array(rows));
    Json::Object(doc)
}

pub fn write_json<W: Write>(table: &Table, meta: Meta, mut out: W) -> Result<(), CliError> {
    serde_json::to_writer_pretty(&mut out, &to_json(table, meta)).map_err(io::Error::from)?;
    out.write_all(b"\n")?;
    out.flush()?;
    Ok(())
}

fn write_to<W: Write>(table: &Table, meta: Meta, format: Format, out: W) -> Result<(), CliError> {
    match format {
        Format::Csv => write_csv(table, out),
        Format::Json => write_json(table, meta, out),
    }
}

pub fn emit(table: &Table, meta: Meta, args: &OutputArgs) -> Result<(), CliError> {
    match &args.output {
        Some(path) => {
            let file = File::create(path).map_err(|e| io_at(path, e))?;
            write_to(table, meta, args.format, BufWriter::new(file)).map_err(|e| match e {
                CliError::Io(msg) => CliError::Io(format!("{}: {msg}", path.display())),
                other => other,
            })
        }
        None => write_to(table, meta, args.format, io::stdout().lock()),
    }
}

fn io_at(path: &Path, e: io::Error) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}
