//! CSV curves and JSON summaries.
//!
//! CSV numbers use 17 significant digits in scientific notation, which is
//! enough to recover every `f64` exactly. Rows are LF-terminated and written
//! in input order.

use std::io::{self, Write};

use bellsim_core::{EnsembleResult, Settings};
use serde::{Deserialize, Serialize};

use crate::manifest::RunManifest;

pub const CSV_HEADER: &str = "alpha,beta,phase_sum,p_joint,std_err,p_marg_III,p_marg_IV,p_either,n";

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurveRow {
    pub alpha: f64,
    pub beta: f64,
    pub phase_sum: f64,
    pub p_joint: f64,
    pub std_err: f64,
    pub p_marg_iii: f64,
    pub p_marg_iv: f64,
    pub p_either: f64,
    pub n: u64,
}

impl CurveRow {
    /// Row for a pooled ensemble. `phase_sum` is passed separately so sweep
    /// grids can keep unreduced abscissae such as 2π.
    pub fn from_result(r: &EnsembleResult, phase_sum: f64) -> Self {
        Self::from_parts(r.settings, phase_sum, r)
    }

    pub fn from_parts(settings: Settings, phase_sum: f64, r: &EnsembleResult) -> Self {
        let p = &r.pooled;
        Self {
            alpha: settings.alpha(),
            beta: settings.beta(),
            phase_sum,
            p_joint: p.p_joint,
            std_err: p.std_err_joint,
            p_marg_iii: p.p_marginal_iii,
            p_marg_iv: p.p_marginal_iv,
            p_either: p.p_either,
            n: p.n,
        }
    }
}

/// 17 significant digits.
pub fn fmt17(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        // Rust spells these "NaN", "inf", "-inf", which every CSV reader we
        // care about accepts.
        format!("{x}")
    }
}

pub fn write_csv<W: Write>(rows: &[CurveRow], mut w: W) -> io::Result<()> {
    let mut out = String::with_capacity(64 * (rows.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for r in rows {
        let fields = [
            r.alpha,
            r.beta,
            r.phase_sum,
            r.p_joint,
            r.std_err,
            r.p_marg_iii,
            r.p_marg_iv,
            r.p_either,
        ];
        for f in fields {
            out.push_str(&fmt17(f));
            out.push(',');
        }
        out.push_str(&r.n.to_string());
        out.push('\n');
    }
    w.write_all(out.as_bytes())?;
    w.flush()
}

#[derive(Debug, thiserror::Error)]
pub enum CsvParseError {
    #[error("missing or unexpected header")]
    Header,
    #[error("line {line}: {msg}")]
    Row { line: usize, msg: String },
}

/// Inverse of [`write_csv`].
pub fn parse_csv(text: &str) -> Result<Vec<CurveRow>, CsvParseError> {
    let mut lines = text.split('\n');
    if lines.next() != Some(CSV_HEADER) {
        return Err(CsvParseError::Header);
    }
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let err = |msg: String| CsvParseError::Row { line: i + 2, msg };
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 9 {
            return Err(err(format!("expected 9 columns, got {}", cols.len())));
        }
        let f = |k: usize| cols[k].parse::<f64>().map_err(|e| err(format!("column {k}: {e}")));
        rows.push(CurveRow {
            alpha: f(0)?,
            beta: f(1)?,
            phase_sum: f(2)?,
            p_joint: f(3)?,
            std_err: f(4)?,
            p_marg_iii: f(5)?,
            p_marg_iv: f(6)?,
            p_either: f(7)?,
            n: cols[8].parse().map_err(|e| err(format!("column 8: {e}")))?,
        });
    }
    Ok(rows)
}

/// A JSON result file: the manifest followed by the command's result.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary<T> {
    pub manifest: RunManifest,
    pub result: T,
}

pub fn write_json<T: Serialize, W: Write>(value: &T, mut w: W) -> io::Result<()> {
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn row(x: f64, n: u64) -> CurveRow {
        CurveRow {
            alpha: 0.0,
            beta: x,
            phase_sum: x,
            p_joint: 0.1 * x,
            std_err: 1e-4,
            p_marg_iii: 0.2,
            p_marg_iv: 0.2,
            p_either: 0.3,
            n,
        }
    }

    #[test]
    fn empty_is_header_only() {
        let mut buf = Vec::new();
        write_csv(&[], &mut buf).unwrap();
        assert_eq!(buf, format!("{CSV_HEADER}\n").into_bytes());
    }

    #[test]
    fn single_row_is_two_lines() {
        let mut buf = Vec::new();
        write_csv(&[row(1.0, 10)], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 2);
        assert!(!text.contains('\r'));
        assert!(text.ends_with(",10\n"));
    }

    #[test]
    fn seventeen_significant_digits() {
        assert_eq!(fmt17(0.1), "1.0000000000000001e-1");
        assert_eq!(fmt17(0.0), "0.0000000000000000e0");
        assert_eq!(fmt17(-2.5), "-2.5000000000000000e0");
    }

    proptest! {
        #[test]
        fn csv_round_trips_exactly(xs in proptest::collection::vec(-1e6..1e6f64, 0..20), n in any::<u64>()) {
            let rows: Vec<CurveRow> = xs.iter().map(|&x| row(x, n)).collect();
            let mut buf = Vec::new();
            write_csv(&rows, &mut buf).unwrap();
            let back = parse_csv(std::str::from_utf8(&buf).unwrap()).unwrap();
            prop_assert_eq!(back, rows);
        }

        #[test]
        fn fmt17_parses_back(x in any::<f64>().prop_filter("finite", |x| x.is_finite())) {
            prop_assert_eq!(fmt17(x).parse::<f64>().unwrap(), x);
        }
    }
}
