//! Output model shared by every subcommand: an ordered meta block plus a
//! rectangular table of typed cells, rendered as CSV (meta as `# key=value`
//! comment lines) or as a mirroring JSON object.
//!
//! Exact rationals always serialize as `"num/den"` strings so that
//! re-parsing reproduces them bit-for-bit; floats carry 12 significant
//! digits.

use orbitkit::Rational;
use serde_json::{json, Value};

#[derive(Debug, Clone)]
pub enum Cell {
    U64(u64),
    I64(i64),
    Big(String),
    Rat(Rational),
    F64(f64),
    Text(String),
    Bool(bool),
    OptU64(Option<u64>),
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::U64(v) => v.to_string(),
            Cell::I64(v) => v.to_string(),
            Cell::Big(v) => v.clone(),
            Cell::Rat(r) => fmt_rational(r),
            Cell::F64(x) => fmt_f64(*x),
            Cell::Text(s) => csv_quote(s),
            Cell::Bool(b) => b.to_string(),
            Cell::OptU64(v) => v.map(|x| x.to_string()).unwrap_or_default(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::U64(v) => json!(v),
            Cell::I64(v) => json!(v),
            Cell::Big(v) => json!(v),
            Cell::Rat(r) => json!(fmt_rational(r)),
            Cell::F64(x) => serde_json::Number::from_f64(*x)
                .map(Value::Number)
                .unwrap_or(Value::Null),
            Cell::Text(s) => json!(s),
            Cell::Bool(b) => json!(b),
            Cell::OptU64(v) => v.map(|x| json!(x)).unwrap_or(Value::Null),
        }
    }
}

pub fn fmt_rational(r: &Rational) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

/// 12 significant digits, plain decimal in the mid-range, otherwise
/// exponent notation. Deterministic for a given value.
pub fn fmt_f64(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let exp = x.abs().log10().floor() as i32;
    if (-4..12).contains(&exp) {
        let decimals = (11 - exp).max(0) as usize;
        format!("{x:.decimals$}")
    } else {
        format!("{x:.11e}")
    }
}

fn csv_quote(s: &str) -> String {
    if s.contains(',') || s.contains('"') || s.contains('\n') {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Default)]
pub struct Document {
    pub meta: Vec<(String, Cell)>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Document {
    pub fn new(columns: &[&str]) -> Self {
        Document {
            meta: Vec::new(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn meta(&mut self, key: &str, value: Cell) {
        self.meta.push((key.to_string(), value));
    }

    pub fn row(&mut self, cells: Vec<Cell>) {
        debug_assert_eq!(cells.len(), self.columns.len());
        self.rows.push(cells);
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Csv => self.render_csv(),
            Format::Json => self.render_json(),
        }
    }

    fn render_csv(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.meta {
            out.push_str(&format!("# {}={}\n", k, v.csv()));
        }
        out.push_str(&self.columns.join(","));
        out.push('\n');
        for row in &self.rows {
            let line: Vec<String> = row.iter().map(Cell::csv).collect();
            out.push_str(&line.join(","));
            out.push('\n');
        }
        out
    }

    fn render_json(&self) -> String {
        let meta: serde_json::Map<String, Value> = self
            .meta
            .iter()
            .map(|(k, v)| (k.clone(), v.json()))
            .collect();
        let rows: Vec<Value> = self
            .rows
            .iter()
            .map(|row| {
                let obj: serde_json::Map<String, Value> = self
                    .columns
                    .iter()
                    .zip(row)
                    .map(|(c, cell)| (c.clone(), cell.json()))
                    .collect();
                Value::Object(obj)
            })
            .collect();
        let doc = json!({
            "meta": Value::Object(meta),
            "columns": self.columns,
            "rows": rows,
        });
        let mut s = serde_json::to_string_pretty(&doc).expect("serializable");
        s.push('\n');
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_table_renders_header_only() {
        let doc = Document::new(&["n", "F"]);
        assert_eq!(doc.render(Format::Csv), "n,F\n");
    }

    #[test]
    fn csv_quotes_embedded_commas() {
        let mut doc = Document::new(&["S", "k"]);
        doc.row(vec![
            Cell::Text("{3,5}".to_string()),
            Cell::Rat(orbitkit::arith::rational(55, 96)),
        ]);
        assert_eq!(doc.render(Format::Csv), "S,k\n\"{3,5}\",55/96\n");
    }

    #[test]
    fn float_formatting() {
        assert_eq!(fmt_f64(0.625), "0.625000000000");
        assert_eq!(fmt_f64(0.0), "0");
        assert_eq!(fmt_f64(1.5285373), "1.52853730000");
        assert!(fmt_f64(3.2e-9).contains('e'));
    }
}
