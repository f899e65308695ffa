//! Output records shared by the experiment runners.
//!
//! Every CSV starts with a `# schema: <name> v<version>` line followed by the
//! column header. JSON output is an array of [`Record`]s.

use std::io::{self, Write};

use serde::{Deserialize, Serialize};

/// One summary value with its confidence interval.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub metric: String,
    pub config: String,
    pub value: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub n: usize,
}

impl Record {
    /// A value without an interval; the bounds equal the value.
    pub fn point(metric: &str, config: &str, value: f64, n: usize) -> Self {
        Record {
            metric: metric.into(),
            config: config.into(),
            value,
            ci_low: value,
            ci_high: value,
            n,
        }
    }
}

pub fn write_records_json<W: Write>(out: &mut W, records: &[Record]) -> io::Result<()> {
    serde_json::to_writer_pretty(&mut *out, records)?;
    writeln!(out)
}

/// A versioned CSV table.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub schema: &'static str,
    pub version: u32,
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(schema: &'static str, version: u32, columns: &[&'static str]) -> Self {
        Table {
            schema,
            version,
            columns: columns.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        assert_eq!(row.len(), self.columns.len(), "row width");
        self.rows.push(row);
    }

    pub fn schema_line(&self) -> String {
        format!("# schema: {} v{}", self.schema, self.version)
    }

    pub fn write_csv<W: Write>(&self, out: &mut W) -> io::Result<()> {
        writeln!(out, "{}", self.schema_line())?;
        writeln!(out, "{}", self.columns.join(","))?;
        for row in &self.rows {
            writeln!(out, "{}", row.join(","))?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("ascii output")
    }
}

/// Fixed-precision float formatting for CSV cells.
pub fn fmt_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.6}")
    } else if x.is_nan() {
        "nan".into()
    } else if x > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_layout() {
        let mut t = Table::new("demo", 2, &["a", "b"]);
        t.push(vec!["1".into(), fmt_f64(0.5)]);
        assert_eq!(t.to_csv_string(), "# schema: demo v2\na,b\n1,0.500000\n");
    }

    #[test]
    fn json_fields() {
        let mut buf = Vec::new();
        write_records_json(&mut buf, &[Record::point("t", "X", 1.0, 3)]).unwrap();
        let v: serde_json::Value = serde_json::from_slice(&buf).unwrap();
        for k in ["metric", "config", "value", "ci_low", "ci_high", "n"] {
            assert!(v[0].get(k).is_some(), "{k}");
        }
    }

    #[test]
    fn non_finite_cells() {
        assert_eq!(fmt_f64(f64::INFINITY), "inf");
        assert_eq!(fmt_f64(f64::NEG_INFINITY), "-inf");
        assert_eq!(fmt_f64(f64::NAN), "nan");
    }
}
