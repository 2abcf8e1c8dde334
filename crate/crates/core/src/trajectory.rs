//! Per-iteration records and their CSV form.

use std::fmt::Write as _;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::Result;

pub const CSV_HEADER: &str = "t,phase,phi,grad_norm,lambda_min,v_norm,eps_spent";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRow {
    pub t: usize,
    pub phase: String,
    pub phi: Option<f64>,
    pub grad_norm: Option<f64>,
    pub lambda_min: Option<f64>,
    pub v_norm: Option<f64>,
    pub eps_spent: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub rows: Vec<TrajectoryRow>,
}

fn field(out: &mut String, v: Option<f64>) {
    out.push(',');
    if let Some(v) = v {
        // `{:e}` prints the shortest round-tripping representation.
        write!(out, "{v:e}").expect("write to string");
    }
}

impl Trajectory {
    pub fn push(&mut self, row: TrajectoryRow) {
        self.rows.push(row);
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn last(&self) -> Option<&TrajectoryRow> {
        self.rows.last()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            write!(out, "{},{}", r.t, r.phase).expect("write to string");
            for v in [r.phi, r.grad_norm, r.lambda_min, r.v_norm, r.eps_spent] {
                field(&mut out, v);
            }
            out.push('\n');
        }
        out
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(self.to_csv().as_bytes())?;
        Ok(())
    }

    /// Parses the CSV produced by [`Trajectory::to_csv`].
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        match lines.next() {
            Some(h) if h == CSV_HEADER => {}
            other => {
                return Err(crate::Error::Config(format!("unexpected trajectory header {other:?}")));
            }
        }
        let parse = |s: &str| -> Result<Option<f64>> {
            if s.is_empty() {
                Ok(None)
            } else {
                s.parse()
                    .map(Some)
                    .map_err(|_| crate::Error::Config(format!("bad number {s:?} in trajectory")))
            }
        };
        let mut rows = Vec::new();
        for line in lines.filter(|l| !l.is_empty()) {
            let cols: Vec<&str> = line.split(',').collect();
            if cols.len() != 7 {
                return Err(crate::Error::Config(format!("trajectory row has {} fields", cols.len())));
            }
            rows.push(TrajectoryRow {
                t: cols[0]
                    .parse()
                    .map_err(|_| crate::Error::Config(format!("bad iteration {:?}", cols[0])))?,
                phase: cols[1].to_string(),
                phi: parse(cols[2])?,
                grad_norm: parse(cols[3])?,
                lambda_min: parse(cols[4])?,
                v_norm: parse(cols[5])?,
                eps_spent: parse(cols[6])?,
            });
        }
        Ok(Self { rows })
    }
}
