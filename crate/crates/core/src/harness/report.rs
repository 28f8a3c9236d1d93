//! Run reports and their CSV form.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::config::Scheme;
use crate::error::{Error, Result};

pub const CSV_COLUMNS: [&str; 13] = [
    "problem",
    "scheme",
    "I",
    "J",
    "epsilon",
    "l2_error",
    "order_vs_prev_grid",
    "cond_estimate",
    "residual_inf",
    "assemble_ms",
    "factor_ms",
    "solve_ms",
    "status",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub problem: String,
    pub scheme: Scheme,
    pub ni: usize,
    pub nj: usize,
    pub epsilon: f64,
    pub l2_error: f64,
    pub order_vs_prev_grid: Option<f64>,
    /// Condition estimate of the row-equilibrated matrix.
    pub cond_estimate: f64,
    pub residual_inf: f64,
    pub assemble_ms: f64,
    pub factor_ms: f64,
    pub solve_ms: f64,
    /// `None` for a successful run, else the error tag.
    pub failure: Option<String>,
}

impl RunReport {
    pub fn failed(problem: &str, scheme: Scheme, ni: usize, nj: usize, epsilon: f64, tag: &str) -> Self {
        Self {
            problem: problem.into(),
            scheme,
            ni,
            nj,
            epsilon,
            l2_error: f64::NAN,
            order_vs_prev_grid: None,
            cond_estimate: f64::NAN,
            residual_inf: f64::NAN,
            assemble_ms: 0.0,
            factor_ms: 0.0,
            solve_ms: 0.0,
            failure: Some(tag.into()),
        }
    }

    pub fn is_ok(&self) -> bool {
        self.failure.is_none()
    }
}

fn num(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        String::new()
    }
}

fn parse_num(s: &str) -> Result<f64> {
    if s.is_empty() {
        return Ok(f64::NAN);
    }
    s.parse()
        .map_err(|_| Error::Config(format!("bad number '{s}' in CSV")))
}

pub fn write_csv<W: Write>(out: W, reports: &[RunReport]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_COLUMNS)?;
    for r in reports {
        w.write_record([
            r.problem.clone(),
            r.scheme.name().to_string(),
            r.ni.to_string(),
            r.nj.to_string(),
            num(r.epsilon),
            num(r.l2_error),
            r.order_vs_prev_grid.map(num).unwrap_or_default(),
            num(r.cond_estimate),
            num(r.residual_inf),
            num(r.assemble_ms),
            num(r.factor_ms),
            num(r.solve_ms),
            r.failure.clone().unwrap_or_else(|| "ok".into()),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn csv_string(reports: &[RunReport]) -> Result<String> {
    let mut buf = Vec::new();
    write_csv(&mut buf, reports)?;
    String::from_utf8(buf).map_err(|e| Error::Config(e.to_string()))
}

pub fn read_csv<R: Read>(input: R) -> Result<Vec<RunReport>> {
    let mut rd = csv::Reader::from_reader(input);
    let header: Vec<String> = rd.headers()?.iter().map(str::to_string).collect();
    if header != CSV_COLUMNS {
        return Err(Error::Config(format!("unexpected CSV header {header:?}")));
    }
    let mut out = Vec::new();
    for rec in rd.records() {
        let rec = rec?;
        let f = |k: usize| parse_num(&rec[k]);
        let int = |k: usize| {
            rec[k]
                .parse::<usize>()
                .map_err(|_| Error::Config(format!("bad integer '{}' in CSV", &rec[k])))
        };
        out.push(RunReport {
            problem: rec[0].to_string(),
            scheme: Scheme::parse(&rec[1])?,
            ni: int(2)?,
            nj: int(3)?,
            epsilon: f(4)?,
            l2_error: f(5)?,
            order_vs_prev_grid: if rec[6].is_empty() { None } else { Some(f(6)?) },
            cond_estimate: f(7)?,
            residual_inf: f(8)?,
            assemble_ms: f(9)?,
            factor_ms: f(10)?,
            solve_ms: f(11)?,
            failure: (&rec[12] != "ok").then(|| rec[12].to_string()),
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn report(l2: f64, cond: f64, order: Option<f64>) -> RunReport {
        RunReport {
            problem: "example1".into(),
            scheme: Scheme::Aligned5,
            ni: 64,
            nj: 32,
            epsilon: 1e-12,
            l2_error: l2,
            order_vs_prev_grid: order,
            cond_estimate: cond,
            residual_inf: 1.234e-17,
            assemble_ms: 0.5,
            factor_ms: 12.25,
            solve_ms: 1.0 / 3.0,
            failure: None,
        }
    }

    #[test]
    fn header_and_empty_order() {
        let text = csv_string(&[report(1e-3, 10.0, None)]).unwrap();
        let first = text.lines().next().unwrap();
        assert!(first.starts_with("problem,scheme,I,J,epsilon,l2_error,order_vs_prev_grid,cond_estimate"));
        let row: Vec<&str> = text.lines().nth(1).unwrap().split(',').collect();
        assert_eq!(row[6], "");
        assert_eq!(row[12], "ok");
        assert_eq!(row[5], "1.0000000000000000e-3");
    }

    #[test]
    fn failed_rows_round_trip() {
        let r = RunReport::failed("example4", Scheme::Naive9, 64, 64, 1e-8, "singular");
        let back = read_csv(csv_string(&[r.clone()]).unwrap().as_bytes()).unwrap();
        assert_eq!(back[0].failure.as_deref(), Some("singular"));
        assert!(back[0].l2_error.is_nan());
    }

    proptest! {
        #[test]
        fn csv_round_trip_is_exact(l2 in 1e-300f64..1e3, cond in 1.0f64..1e20, order in proptest::option::of(-5.0f64..5.0)) {
            let r = report(l2, cond, order);
            let back = read_csv(csv_string(&[r.clone()]).unwrap().as_bytes()).unwrap();
            prop_assert_eq!(&back[0], &r);
        }
    }
}
