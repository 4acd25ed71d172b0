//! Check reports shared by the lemma, kernel and Hölder checks, with their
//! CSV and JSON renderings.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rug::Float;
use serde::Serialize;
use serde_json::{json, Value};

/// Renders a number with 20 significant digits.
pub fn fmt_sig(x: &Float) -> String {
    if x.is_nan() {
        return "NaN".into();
    }
    if x.is_infinite() {
        return if x.is_sign_negative() { "-inf".into() } else { "inf".into() };
    }
    // rug counts significant digits here, unlike f64 which counts decimals
    format!("{:.20e}", x)
}

pub fn fmt_sig_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{:.19e}", x)
    } else {
        format!("{x}")
    }
}

/// One evaluated grid point of a check.
#[derive(Clone, Debug)]
pub struct CheckRow {
    pub n: u64,
    pub j_or_s: Option<i64>,
    /// Real abscissa for checks on continuous grids (kernel radii, etc.).
    pub abscissa: Option<f64>,
    pub ratio: Float,
    pub pass: bool,
}

#[derive(Clone, Debug)]
pub struct LemmaCheckReport {
    pub lemma_id: String,
    pub n_grid: Vec<u64>,
    pub rows: Vec<CheckRow>,
    pub worst_ratio: Float,
    pub violations: Vec<(u64, i64)>,
    pub empirical_threshold: Option<u64>,
    pub params: BTreeMap<String, String>,
    pub notes: Vec<String>,
    pub precision: u32,
}

impl LemmaCheckReport {
    pub fn new(lemma_id: impl Into<String>, precision: u32) -> Self {
        LemmaCheckReport {
            lemma_id: lemma_id.into(),
            n_grid: Vec::new(),
            rows: Vec::new(),
            worst_ratio: Float::with_val(precision, rug::float::Special::NegInfinity),
            violations: Vec::new(),
            empirical_threshold: None,
            params: BTreeMap::new(),
            notes: Vec::new(),
            precision,
        }
    }

    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn with_param(mut self, key: &str, value: impl ToString) -> Self {
        self.params.insert(key.to_string(), value.to_string());
        self
    }

    /// Records a row, updating the worst ratio and violation list.
    pub fn push(&mut self, row: CheckRow) {
        if row.ratio > self.worst_ratio || self.worst_ratio.is_nan() {
            self.worst_ratio = Float::with_val(self.precision, &row.ratio);
        }
        if !row.pass {
            self.violations.push((row.n, row.j_or_s.unwrap_or(-1)));
        }
        self.rows.push(row);
    }

    /// Sorts rows by `(n, j_or_s)` so output does not depend on evaluation order.
    pub fn canonicalize(&mut self) {
        self.rows.sort_by(|a, b| {
            (a.n, a.j_or_s)
                .cmp(&(b.n, b.j_or_s))
                .then(a.abscissa.partial_cmp(&b.abscissa).unwrap_or(std::cmp::Ordering::Equal))
        });
        self.violations.sort();
        self.n_grid.sort();
        self.n_grid.dedup();
    }

    /// Smallest and largest ratio among the rows.
    pub fn ratio_range(&self) -> Option<(Float, Float)> {
        let mut it = self.rows.iter();
        let first = it.next()?;
        let (mut lo, mut hi) = (first.ratio.clone(), first.ratio.clone());
        for r in it {
            if r.ratio < lo {
                lo = r.ratio.clone();
            }
            if r.ratio > hi {
                hi = r.ratio.clone();
            }
        }
        Some((lo, hi))
    }

    pub const CSV_HEADER: &'static str = "lemma_id,n,j_or_s,ratio,pass";

    /// Rows as CSV lines (no header).
    pub fn csv_rows(&self) -> String {
        let mut out = String::new();
        for r in &self.rows {
            let j = r.j_or_s.map(|v| v.to_string()).unwrap_or_default();
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                self.lemma_id,
                r.n,
                j,
                fmt_sig(&r.ratio),
                r.pass
            );
        }
        out
    }

    pub fn to_csv(&self) -> String {
        format!("{}\n{}", Self::CSV_HEADER, self.csv_rows())
    }

    pub fn to_json(&self) -> Value {
        let rows: Vec<Value> = self
            .rows
            .iter()
            .map(|r| {
                json!({
                    "n": r.n,
                    "j_or_s": r.j_or_s,
                    "abscissa": r.abscissa,
                    "ratio": fmt_sig(&r.ratio),
                    "pass": r.pass,
                })
            })
            .collect();
        json!({
            "lemma_id": self.lemma_id,
            "passed": self.passed(),
            "precision_bits": self.precision,
            "params": self.params,
            "n_grid": self.n_grid,
            "worst_ratio": fmt_sig(&self.worst_ratio),
            "violations": self.violations,
            "empirical_threshold": self.empirical_threshold,
            "notes": self.notes,
            "rows": rows,
        })
    }
}

/// Serializable summary used by the CLI for a batch of reports.
#[derive(Debug, Serialize)]
pub struct ReportBundle {
    pub command: String,
    pub precision_bits: u32,
    pub passed: bool,
    pub reports: Vec<Value>,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn worst_ratio_and_violations_track_rows() {
        let mut r = LemmaCheckReport::new("demo", 64);
        r.push(CheckRow { n: 3, j_or_s: Some(1), abscissa: None, ratio: Float::with_val(64, 0.5), pass: true });
        r.push(CheckRow { n: 2, j_or_s: None, abscissa: None, ratio: Float::with_val(64, 2), pass: false });
        assert_eq!(r.worst_ratio, 2);
        assert!(!r.passed());
        assert_eq!(r.violations, vec![(2, -1)]);
        r.canonicalize();
        assert_eq!(r.rows[0].n, 2);
        let csv = r.to_csv();
        assert!(csv.starts_with("lemma_id,n,j_or_s,ratio,pass\n"));
        assert!(csv.contains("demo,2,,2.0000000000000000000e0,false"));
    }

    #[test]
    fn sig_formatting_is_fixed_width() {
        assert_eq!(fmt_sig(&Float::with_val(256, 1)), "1.0000000000000000000e0");
        assert_eq!(fmt_sig_f64(0.25), "2.5000000000000000000e-1");
    }
}
