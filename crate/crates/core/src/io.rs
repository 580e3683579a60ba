//! Distribution specs (JSON) and CSV tables.

use std::fs::File;
use std::io::{BufReader, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::increments::{IncrementModel, Model1D};
use crate::Vec2;

/// An increment law as written in a `--dist` file.
///
/// ```json
/// {"type":"graph1d","mu1":1,"y":{"type":"atoms1d","points":[1,-1],"probs":[0.5,0.5]},"eps":0}
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum DistSpec {
    Gaussian {
        mean: [f64; 2],
        cov: [[f64; 2]; 2],
        #[serde(default)]
        eps: f64,
    },
    Atoms {
        points: Vec<[f64; 2]>,
        probs: Vec<f64>,
        #[serde(default)]
        eps: f64,
    },
    Graph1d {
        mu1: f64,
        y: YSpec,
        #[serde(default)]
        eps: f64,
    },
}

/// Law of the free coordinate of a `graph1d` walk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum YSpec {
    Atoms1d { points: Vec<f64>, probs: Vec<f64> },
    Gaussian1d { mean: f64, var: f64 },
}

impl DistSpec {
    pub fn eps(&self) -> f64 {
        match self {
            DistSpec::Gaussian { eps, .. } | DistSpec::Atoms { eps, .. } | DistSpec::Graph1d { eps, .. } => *eps,
        }
    }

    pub fn to_model(&self) -> Result<IncrementModel> {
        let v = |p: &[f64; 2]| Vec2::new(p[0], p[1]);
        let base = match self {
            DistSpec::Gaussian { mean, cov, .. } => {
                IncrementModel::gaussian(v(mean), crate::Mat2::new(cov[0][0], cov[0][1], cov[1][0], cov[1][1]))?
            }
            DistSpec::Atoms { points, probs, .. } => IncrementModel::atoms(points.iter().map(v).collect(), probs.clone())?,
            DistSpec::Graph1d { mu1, y, .. } => {
                let y = match y {
                    YSpec::Atoms1d { points, probs } => Model1D::atoms(points.clone(), probs.clone())?,
                    YSpec::Gaussian1d { mean, var } => Model1D::gaussian(*mean, *var)?,
                };
                IncrementModel::graph1d(*mu1, y)?
            }
        };
        match self.eps() {
            0.0 => Ok(base),
            e => base.regularize(e),
        }
    }
}

pub fn parse_dist(text: &str) -> Result<DistSpec> {
    serde_json::from_str(text).map_err(|e| Error::InvalidModel(format!("distribution spec: {e}")))
}

/// Read a distribution spec from `path`.
pub fn read_dist(path: &Path) -> std::io::Result<std::result::Result<DistSpec, Error>> {
    let mut text = String::new();
    File::open(path)?.read_to_string(&mut text)?;
    Ok(parse_dist(&text))
}

/// 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// Write a CSV table with a header row.
pub fn write_csv<W: Write>(out: W, header: &[&str], rows: impl IntoIterator<Item = Vec<f64>>) -> std::io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header)?;
    for row in rows {
        w.write_record(row.iter().map(|x| fmt_f64(*x)))?;
    }
    w.flush()
}

pub fn write_points<W: Write>(out: W, points: &[Vec2]) -> std::io::Result<()> {
    write_csv(out, &["x", "y"], points.iter().map(|p| vec![p.x, p.y]))
}

/// Read `x,y` rows. A non-numeric first row is taken as a header.
pub fn read_points<R: Read>(input: R) -> std::result::Result<Vec<Vec2>, String> {
    let mut r = csv::ReaderBuilder::new().has_headers(false).trim(csv::Trim::All).from_reader(BufReader::new(input));
    let mut pts = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| e.to_string())?;
        if rec.len() != 2 {
            return Err(format!("row {}: expected 2 columns, got {}", i + 1, rec.len()));
        }
        let parsed: std::result::Result<Vec<f64>, _> = rec.iter().map(str::parse::<f64>).collect();
        match parsed {
            Ok(xy) => pts.push(Vec2::new(xy[0], xy[1])),
            Err(_) if i == 0 => continue,
            Err(e) => return Err(format!("row {}: {e}", i + 1)),
        }
    }
    Ok(pts)
}
