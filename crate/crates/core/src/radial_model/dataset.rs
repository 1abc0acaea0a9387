//! Data simulation and serialisation for the regression model.

use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::{Path, PathBuf};

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::wfun::{GSpec, WParams};
use crate::error::{check_dim, Error, Result};
use crate::linalg::norm;
use crate::rng::{rng_from, streams};

/// `N` observations `Y_i = sqrt(w(|θ0|)) g(X_i) + ε_i` with `X_i` uniform on `[0,1]^d`.
#[derive(Clone, Debug, PartialEq)]
pub struct RegressionDataset {
    /// Sample count `N`.
    pub n: usize,
    /// Parameter dimension `D`.
    pub dim: usize,
    /// Design dimension `d`.
    pub design_dim: usize,
    /// Row-major `N x d` design.
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub eps: Vec<f64>,
    pub seed: u64,
}

impl RegressionDataset {
    pub fn design_point(&self, i: usize) -> &[f64] {
        &self.x[i * self.design_dim..(i + 1) * self.design_dim]
    }

    /// `g(X_i)` for every observation.
    pub fn g_values(&self, g: GSpec) -> Vec<f64> {
        (0..self.n).map(|i| g.eval(self.design_point(i))).collect()
    }
}

/// Draw a dataset. The design and noise come from one stream derived from `seed`.
pub fn simulate_dataset(
    n: usize,
    dim: usize,
    design_dim: usize,
    g: GSpec,
    theta0: &[f64],
    w: &WParams,
    seed: u64,
) -> Result<RegressionDataset> {
    if n == 0 || dim == 0 || design_dim == 0 {
        return Err(Error::Domain("N, D and d must all be positive".into()));
    }
    check_dim(dim, theta0.len())?;
    let amp = w.value(norm(theta0)).sqrt();
    let mut rng = rng_from(seed, streams::DATASET, 0);
    let x: Vec<f64> = (0..n * design_dim).map(|_| rng.random::<f64>()).collect();
    let eps: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
    let y = if amp == 0.0 {
        eps.clone()
    } else {
        (0..n).map(|i| amp * g.eval(&x[i * design_dim..(i + 1) * design_dim]) + eps[i]).collect()
    };
    Ok(RegressionDataset { n, dim, design_dim, x, y, eps, seed })
}

/// Sidecar written next to a dataset CSV.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct DatasetMeta {
    pub n: usize,
    pub dim: usize,
    pub design_dim: usize,
    pub seed: u64,
    pub w: WParams,
    pub g: GSpec,
}

pub fn sidecar_path(csv_path: &Path) -> PathBuf {
    csv_path.with_extension("json")
}

/// Write `i,x1..xd,y,eps` rows plus a JSON sidecar (same stem, `.json`).
pub fn write_dataset(csv_path: &Path, data: &RegressionDataset, w: &WParams, g: GSpec) -> Result<()> {
    let mut wr = csv::Writer::from_writer(BufWriter::new(File::create(csv_path)?));
    let mut header = vec!["i".to_string()];
    header.extend((1..=data.design_dim).map(|j| format!("x{j}")));
    header.push("y".into());
    header.push("eps".into());
    wr.write_record(&header)?;
    for i in 0..data.n {
        let mut row = vec![i.to_string()];
        row.extend(data.design_point(i).iter().map(|v| format!("{v:e}")));
        row.push(format!("{:e}", data.y[i]));
        row.push(format!("{:e}", data.eps[i]));
        wr.write_record(&row)?;
    }
    wr.flush()?;
    let meta = DatasetMeta { n: data.n, dim: data.dim, design_dim: data.design_dim, seed: data.seed, w: *w, g };
    serde_json::to_writer_pretty(BufWriter::new(File::create(sidecar_path(csv_path))?), &meta)?;
    Ok(())
}

pub fn read_dataset(csv_path: &Path) -> Result<(RegressionDataset, DatasetMeta)> {
    let meta: DatasetMeta = serde_json::from_reader(BufReader::new(File::open(sidecar_path(csv_path))?))?;
    let mut rd = csv::Reader::from_reader(BufReader::new(File::open(csv_path)?));
    let width = meta.design_dim + 3;
    let (mut x, mut y, mut eps) = (Vec::new(), Vec::new(), Vec::new());
    for rec in rd.records() {
        let rec = rec?;
        if rec.len() != width {
            return Err(Error::Format(format!("dataset row has {} fields, expected {width}", rec.len())));
        }
        let num = |k: usize| -> Result<f64> {
            rec[k].trim().parse::<f64>().map_err(|e| Error::Format(format!("bad number '{}': {e}", &rec[k])))
        };
        for k in 1..=meta.design_dim {
            x.push(num(k)?);
        }
        y.push(num(meta.design_dim + 1)?);
        eps.push(num(meta.design_dim + 2)?);
    }
    check_dim(meta.n, y.len())?;
    let data = RegressionDataset { n: meta.n, dim: meta.dim, design_dim: meta.design_dim, x, y, eps, seed: meta.seed };
    Ok((data, meta))
}
