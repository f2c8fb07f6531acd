use guessworks::numeric::format_sig10;
use serde_json::{Map, Number, Value};

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Table,
    Json,
    Csv,
}

/// What a subcommand produced, before formatting.
pub enum Output {
    Scalar(f64),
    /// A `{symbol: value}` map or another labelled structure.
    Map(Value),
    /// A flat report object.
    Record(Value),
    /// Row-oriented report with its own CSV rendering.
    Rows { json: Value, csv: String },
}

/// Rounds every non-integer number to 10 significant digits.
pub fn round_numbers(v: Value) -> Value {
    match v {
        Value::Number(n) if n.is_f64() => number(n.as_f64().unwrap_or(f64::NAN)),
        Value::Array(items) => Value::Array(items.into_iter().map(round_numbers).collect()),
        Value::Object(map) => Value::Object(map.into_iter().map(|(k, v)| (k, round_numbers(v))).collect()),
        other => other,
    }
}

pub fn number(x: f64) -> Value {
    if !x.is_finite() {
        return Value::Null;
    }
    format_sig10(x)
        .parse::<Number>()
        .map(Value::Number)
        .unwrap_or(Value::Null)
}

fn cell(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

fn csv_field(s: String) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s
    }
}

fn record_table(map: &Map<String, Value>) -> String {
    let width = map.keys().map(|k| k.chars().count()).max().unwrap_or(0);
    map.iter()
        .map(|(k, v)| format!("{k:<width$}  {}\n", cell(v)))
        .collect()
}

fn csv_table(csv: &str) -> String {
    let rows: Vec<Vec<&str>> = csv.lines().map(|l| l.split(',').collect()).collect();
    let cols = rows.iter().map(Vec::len).max().unwrap_or(0);
    let widths: Vec<usize> = (0..cols)
        .map(|c| rows.iter().filter_map(|r| r.get(c)).map(|s| s.len()).max().unwrap_or(0))
        .collect();
    rows.iter()
        .map(|r| {
            let line: Vec<String> = r
                .iter()
                .enumerate()
                .map(|(c, s)| format!("{s:>w$}", w = widths[c]))
                .collect();
            format!("{}\n", line.join("  ").trim_end())
        })
        .collect()
}

pub fn render(out: Output, format: Format) -> String {
    match out {
        Output::Scalar(x) => match format {
            Format::Table => format!("{}\n", format_sig10(x)),
            Format::Json => format!("{}\n", serde_json::json!({ "value": number(x) })),
            Format::Csv => format!("value\n{}\n", format_sig10(x)),
        },
        Output::Map(v) => {
            let v = round_numbers(v);
            match (format, &v) {
                (Format::Csv, Value::Object(map)) => {
                    let mut s = String::from("symbol,value\n");
                    for (k, val) in map {
                        s.push_str(&format!("{},{}\n", csv_field(k.clone()), csv_field(cell(val))));
                    }
                    s
                }
                _ => format!("{v}\n"),
            }
        }
        Output::Record(v) => {
            let v = round_numbers(v);
            match (format, &v) {
                (Format::Table, Value::Object(map)) => record_table(map),
                (Format::Csv, Value::Object(map)) => {
                    let header: Vec<String> = map.keys().map(|k| csv_field(k.clone())).collect();
                    let row: Vec<String> = map.values().map(|v| csv_field(cell(v))).collect();
                    format!("{}\n{}\n", header.join(","), row.join(","))
                }
                _ => format!("{v}\n"),
            }
        }
        Output::Rows { json, csv } => match format {
            Format::Table => csv_table(&csv),
            Format::Json => format!("{}\n", round_numbers(json)),
            Format::Csv => csv,
        },
    }
}
