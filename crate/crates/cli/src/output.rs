use serde_json::{Map, Number, Value};

use crate::args::Format;

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(u64),
    Bool(bool),
    Text(String),
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Num(x) => format_g17(*x),
            Cell::Int(i) => i.to_string(),
            Cell::Bool(b) => b.to_string(),
            Cell::Text(s) => s.clone(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Num(x) => Number::from_f64(*x).map_or(Value::Null, Value::Number),
            Cell::Int(i) => Value::from(*i),
            Cell::Bool(b) => Value::Bool(*b),
            Cell::Text(s) => Value::String(s.clone()),
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Num(x)
    }
}

impl From<usize> for Cell {
    fn from(i: usize) -> Self {
        Cell::Int(i as u64)
    }
}

impl From<u64> for Cell {
    fn from(i: u64) -> Self {
        Cell::Int(i)
    }
}

impl From<bool> for Cell {
    fn from(b: bool) -> Self {
        Cell::Bool(b)
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Text(s.to_owned())
    }
}

/// Output of one subcommand.
///
/// In CSV the scalars become leading columns repeated on every row (or a
/// single row when there are no columns). In JSON everything is one flat
/// object: scalars as plain keys, columns as arrays. `extras` appear in JSON
/// only.
#[derive(Debug, Default)]
pub struct Table {
    scalars: Vec<(String, Cell)>,
    columns: Vec<(String, Vec<Cell>)>,
    extras: Vec<(String, Cell)>,
}

impl Table {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn scalar(mut self, name: &str, value: impl Into<Cell>) -> Self {
        self.scalars.push((name.to_owned(), value.into()));
        self
    }

    pub fn extra(mut self, name: &str, value: impl Into<Cell>) -> Self {
        self.extras.push((name.to_owned(), value.into()));
        self
    }

    pub fn column<T: Into<Cell>>(
        mut self,
        name: &str,
        values: impl IntoIterator<Item = T>,
    ) -> Self {
        let values: Vec<Cell> = values.into_iter().map(Into::into).collect();
        if let Some((_, first)) = self.columns.first() {
            assert_eq!(first.len(), values.len(), "column `{name}` length");
        }
        self.columns.push((name.to_owned(), values));
        self
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Csv => self.to_csv(),
            Format::Json => self.to_json(),
        }
    }

    fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        let header = self
            .scalars
            .iter()
            .map(|(n, _)| n.as_str())
            .chain(self.columns.iter().map(|(n, _)| n.as_str()));
        w.write_record(header).expect("in-memory write");
        let leading: Vec<String> = self.scalars.iter().map(|(_, c)| c.csv()).collect();
        let rows = self.columns.first().map_or(1, |(_, c)| c.len());
        for i in 0..rows {
            let record = leading
                .iter()
                .cloned()
                .chain(self.columns.iter().map(|(_, c)| c[i].csv()));
            w.write_record(record).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 cells")
    }

    fn to_json(&self) -> String {
        let mut obj = Map::new();
        for (name, cell) in self.scalars.iter().chain(&self.extras) {
            obj.insert(name.clone(), cell.json());
        }
        for (name, cells) in &self.columns {
            obj.insert(
                name.clone(),
                Value::Array(cells.iter().map(Cell::json).collect()),
            );
        }
        let mut s = serde_json::to_string_pretty(&Value::Object(obj)).expect("serializable");
        s.push('\n');
        s
    }
}

/// `printf("%.17g")`: 17 significant digits with trailing zeros removed,
/// scientific notation when the decimal exponent is below −4 or above 16.
pub fn format_g17(x: f64) -> String {
    if x.is_nan() {
        return "NaN".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return if x.is_sign_negative() {
            "-0".into()
        } else {
            "0".into()
        };
    }
    let sci = format!("{x:.16e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..17).contains(&exp) {
        let mantissa = trim_fraction(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{mantissa}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (16 - exp) as usize;
        trim_fraction(&format!("{x:.decimals$}")).to_owned()
    }
}

fn trim_fraction(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}
