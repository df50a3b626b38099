//! Trace files: CSV with a fixed header, or JSON rows.
//!
//! Floats are written with 17 significant digits so a parse gives back the
//! exact bits.

use adageo::optimizers::TraceRow;
use serde::{Deserialize, Serialize};

use crate::config::Format;
use crate::BenchError;

pub const HEADER: [&str; 6] = ["t", "loss", "grad_l1", "grad_l2", "grad_dual", "step_chnorm"];
pub const XBAR_COLUMN: &str = "xbar_loss";

/// Serializable mirror of [`TraceRow`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Row {
    pub t: u64,
    pub loss: f64,
    pub grad_l1: f64,
    pub grad_l2: f64,
    pub grad_dual: f64,
    pub step_chnorm: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub xbar_loss: Option<f64>,
}

impl From<&TraceRow> for Row {
    fn from(r: &TraceRow) -> Self {
        Row {
            t: r.t,
            loss: r.loss,
            grad_l1: r.grad_l1,
            grad_l2: r.grad_l2,
            grad_dual: r.grad_dual,
            step_chnorm: r.step_chnorm,
            xbar_loss: r.xbar_loss,
        }
    }
}

pub fn rows_of(rows: &[TraceRow]) -> Vec<Row> {
    rows.iter().map(Row::from).collect()
}

fn fmt(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn to_csv(rows: &[Row]) -> Result<String, BenchError> {
    let with_xbar = rows.first().is_some_and(|r| r.xbar_loss.is_some());
    if rows.iter().any(|r| r.xbar_loss.is_some() != with_xbar) {
        return Err(BenchError::Config("xbar_loss must be present on every row or none".into()));
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header: Vec<&str> = HEADER.to_vec();
    if with_xbar {
        header.push(XBAR_COLUMN);
    }
    w.write_record(&header)?;
    for r in rows {
        let mut rec = vec![r.t.to_string(), fmt(r.loss), fmt(r.grad_l1), fmt(r.grad_l2), fmt(r.grad_dual), fmt(r.step_chnorm)];
        if let Some(x) = r.xbar_loss {
            rec.push(fmt(x));
        }
        w.write_record(&rec)?;
    }
    let bytes = w.into_inner().map_err(|e| BenchError::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is ASCII"))
}

pub fn parse_csv(text: &str) -> Result<Vec<Row>, BenchError> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let header: Vec<String> = r.headers()?.iter().map(str::to_owned).collect();
    let with_xbar = match header.len() {
        6 => false,
        7 if header[6] == XBAR_COLUMN => true,
        _ => return Err(BenchError::Config(format!("unexpected trace header {header:?}"))),
    };
    if header[..6] != HEADER {
        return Err(BenchError::Config(format!("unexpected trace header {header:?}")));
    }
    let num = |s: &str| s.parse::<f64>().map_err(|e| BenchError::Config(format!("bad number {s:?}: {e}")));
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let t = rec[0].parse::<u64>().map_err(|e| BenchError::Config(format!("bad step {:?}: {e}", &rec[0])))?;
        rows.push(Row {
            t,
            loss: num(&rec[1])?,
            grad_l1: num(&rec[2])?,
            grad_l2: num(&rec[3])?,
            grad_dual: num(&rec[4])?,
            step_chnorm: num(&rec[5])?,
            xbar_loss: if with_xbar { Some(num(&rec[6])?) } else { None },
        });
    }
    Ok(rows)
}

pub fn to_json(rows: &[Row]) -> String {
    serde_json::to_string(rows).expect("rows serialize")
}

pub fn parse_json(text: &str) -> Result<Vec<Row>, BenchError> {
    Ok(serde_json::from_str(text)?)
}

pub fn render(rows: &[Row], format: Format) -> Result<String, BenchError> {
    match format {
        Format::Csv => to_csv(rows),
        Format::Json => Ok(to_json(rows)),
    }
}

pub fn parse(text: &str, format: Format) -> Result<Vec<Row>, BenchError> {
    match format {
        Format::Csv => parse_csv(text),
        Format::Json => parse_json(text),
    }
}

pub fn file_name(seed: u64, format: Format) -> String {
    match format {
        Format::Csv => format!("trace_seed{seed}.csv"),
        Format::Json => format!("trace_seed{seed}.json"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(t: u64, xbar: Option<f64>) -> Row {
        Row { t, loss: 0.1, grad_l1: 1.0 / 3.0, grad_l2: 2e-300, grad_dual: 7.0, step_chnorm: 0.0, xbar_loss: xbar }
    }

    #[test]
    fn header_is_fixed() {
        let s = to_csv(&[row(0, None)]).unwrap();
        assert_eq!(s.lines().next().unwrap(), "t,loss,grad_l1,grad_l2,grad_dual,step_chnorm");
        let s = to_csv(&[row(0, Some(1.0))]).unwrap();
        assert_eq!(s.lines().next().unwrap(), "t,loss,grad_l1,grad_l2,grad_dual,step_chnorm,xbar_loss");
    }

    #[test]
    fn seventeen_digits() {
        let s = to_csv(&[row(3, None)]).unwrap();
        let line = s.lines().nth(1).unwrap();
        assert_eq!(line.split(',').nth(2).unwrap(), "3.3333333333333331e-1");
    }

    #[test]
    fn mixed_xbar_rejected() {
        assert!(to_csv(&[row(0, None), row(1, Some(1.0))]).is_err());
    }

    #[test]
    fn bad_header_rejected() {
        assert!(parse_csv("t,loss\n0,1\n").is_err());
        assert!(parse_csv("t,loss,grad_l1,grad_l2,grad_dual,step,xbar_loss\n").is_err());
    }
}
