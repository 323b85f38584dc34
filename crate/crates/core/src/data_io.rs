//! CSV reading and writing for samples, posteriors and loss reports.
//!
//! Parameter columns are named `theta_0, theta_1, ...` and data columns
//! `x_0, x_1, ...`. Numbers are written with shortest round-trip formatting.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::likelihood::{LikelihoodLossReport, Posterior, ThetaGrid};
use crate::ratio::RatioLossReport;
use crate::sample::{JointSample, SampleSet};

pub const THETA_PREFIX: &str = "theta_";
pub const X_PREFIX: &str = "x_";

/// A numeric CSV table with its header.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub headers: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn read<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_reader(reader);
        let headers: Vec<String> = rdr.headers()?.iter().map(str::to_owned).collect();
        if headers.is_empty() || headers.iter().any(String::is_empty) {
            return Err(Error::Data {
                row: 1,
                column: String::new(),
                message: "missing or empty header".into(),
            });
        }
        let mut rows = Vec::new();
        for (i, rec) in rdr.records().enumerate() {
            // header is file row 1
            let row = i + 2;
            let rec = rec.map_err(|e| Error::Data {
                row,
                column: String::new(),
                message: e.to_string(),
            })?;
            if rec.len() != headers.len() {
                return Err(Error::Data {
                    row,
                    column: String::new(),
                    message: format!("expected {} fields, found {}", headers.len(), rec.len()),
                });
            }
            let vals = rec
                .iter()
                .zip(&headers)
                .map(|(cell, h)| match cell.parse::<f64>() {
                    Ok(v) if v.is_finite() => Ok(v),
                    _ => Err(Error::Data {
                        row,
                        column: h.clone(),
                        message: format!("'{cell}' is not a finite number"),
                    }),
                })
                .collect::<Result<Vec<f64>>>()?;
            rows.push(vals);
        }
        if rows.is_empty() {
            return Err(Error::Data {
                row: 2,
                column: String::new(),
                message: "no data rows".into(),
            });
        }
        Ok(Table { headers, rows })
    }

    pub fn read_path(path: &Path) -> Result<Self> {
        let file =
            File::open(path).map_err(|e| Error::Input(format!("{}: {e}", path.display())))?;
        Self::read(file)
    }

    fn prefixed(&self, prefix: &str) -> Vec<usize> {
        self.headers
            .iter()
            .enumerate()
            .filter(|(_, h)| h.starts_with(prefix))
            .map(|(i, _)| i)
            .collect()
    }

    fn columns(&self, idx: &[usize]) -> Result<SampleSet> {
        let data: Vec<f64> = self
            .rows
            .iter()
            .flat_map(|r| idx.iter().map(move |&c| r[c]))
            .collect();
        SampleSet::new(Array2::from_shape_vec((self.rows.len(), idx.len()), data).expect("shape"))
    }

    /// `x_*` columns, or every column when none is so named.
    pub fn x_samples(&self) -> Result<SampleSet> {
        let mut idx = self.prefixed(X_PREFIX);
        if idx.is_empty() {
            idx = (0..self.headers.len())
                .filter(|&i| !self.headers[i].starts_with(THETA_PREFIX))
                .collect();
        }
        if idx.is_empty() {
            return Err(Error::Data {
                row: 1,
                column: String::new(),
                message: "no data columns".into(),
            });
        }
        self.columns(&idx)
    }

    /// Header names of the data columns selected by [`Table::x_samples`].
    pub fn x_headers(&self) -> Vec<&str> {
        let idx = self.prefixed(X_PREFIX);
        let idx: Vec<usize> = if idx.is_empty() {
            (0..self.headers.len())
                .filter(|&i| !self.headers[i].starts_with(THETA_PREFIX))
                .collect()
        } else {
            idx
        };
        idx.iter().map(|&i| self.headers[i].as_str()).collect()
    }

    /// `theta_*` and `x_*` columns as a joint sample.
    pub fn joint(&self) -> Result<JointSample> {
        let t = self.prefixed(THETA_PREFIX);
        if t.is_empty() {
            return Err(Error::Data {
                row: 1,
                column: String::new(),
                message: format!("joint sample needs '{THETA_PREFIX}' columns"),
            });
        }
        let x = self.prefixed(X_PREFIX);
        if x.is_empty() {
            return Err(Error::Data {
                row: 1,
                column: String::new(),
                message: format!("joint sample needs '{X_PREFIX}' columns"),
            });
        }
        JointSample::new(self.columns(&t)?, self.columns(&x)?)
    }
}

/// Data columns of a CSV file.
pub fn read_samples(path: &Path) -> Result<SampleSet> {
    Table::read_path(path)?.x_samples()
}

/// Reads two sample files whose data headers must agree.
pub fn read_sample_pair(f: &Path, g: &Path) -> Result<(SampleSet, SampleSet)> {
    let (tf, tg) = (Table::read_path(f)?, Table::read_path(g)?);
    if tf.x_headers() != tg.x_headers() {
        return Err(Error::Data {
            row: 1,
            column: String::new(),
            message: format!(
                "header mismatch: {:?} vs {:?}",
                tf.x_headers(),
                tg.x_headers()
            ),
        });
    }
    Ok((tf.x_samples()?, tg.x_samples()?))
}

pub fn read_joint(path: &Path) -> Result<JointSample> {
    Table::read_path(path)?.joint()
}

fn header(prefix: &str, n: usize) -> impl Iterator<Item = String> + '_ {
    (0..n).map(move |i| format!("{prefix}{i}"))
}

/// Writes `theta_*` (when given) then `x_*` columns.
pub fn write_samples<W: Write>(w: W, theta: Option<&SampleSet>, x: &SampleSet) -> Result<()> {
    if let Some(t) = theta {
        if t.n() != x.n() {
            return Err(Error::DimensionMismatch {
                expected: x.n(),
                got: t.n(),
            });
        }
    }
    let mut out = csv::Writer::from_writer(w);
    let p = theta.map_or(0, SampleSet::dim);
    out.write_record(header(THETA_PREFIX, p).chain(header(X_PREFIX, x.dim())))?;
    for k in 0..x.n() {
        let t = theta.map(|t| t.row(k).to_vec()).unwrap_or_default();
        out.write_record(t.iter().chain(x.row(k).iter()).map(f64::to_string))?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_joint<W: Write>(w: W, joint: &JointSample) -> Result<()> {
    write_samples(w, Some(joint.theta()), joint.x())
}

/// `theta_*, density` rows in grid order.
pub fn write_posterior<W: Write>(w: W, grid: &ThetaGrid, posterior: &Posterior) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    let p = grid.param_box().dim();
    out.write_record(header(THETA_PREFIX, p).chain(std::iter::once("density".to_string())))?;
    for (g, d) in posterior.density.iter().enumerate() {
        out.write_record(
            grid.points()
                .row(g)
                .iter()
                .chain(std::iter::once(d))
                .map(f64::to_string),
        )?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_ratio_report<W: Write>(w: W, report: &RatioLossReport) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["eps", "j", "loss"])?;
    for e in &report.entries {
        out.write_record([e.eps.to_string(), e.j.to_string(), e.loss.to_string()])?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_likelihood_report<W: Write>(w: W, report: &LikelihoodLossReport) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["eps_x", "eps_theta", "i", "j", "loss"])?;
    for e in &report.entries {
        out.write_record([
            e.eps_x.to_string(),
            e.eps_theta.to_string(),
            e.i.to_string(),
            e.j.to_string(),
            e.loss.to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}
