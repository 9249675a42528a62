use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::IspcConfig;
use crate::error::{Error, Result};

/// Recorded input/output samples, stored flat (sample-major).
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct IoLog {
    pub n_u: usize,
    pub n_y: usize,
    u: Vec<f64>,
    y: Vec<f64>,
}

impl IoLog {
    pub fn new(n_u: usize, n_y: usize) -> Self {
        Self {
            n_u,
            n_y,
            u: Vec::new(),
            y: Vec::new(),
        }
    }

    pub fn with_capacity(n_u: usize, n_y: usize, samples: usize) -> Self {
        Self {
            n_u,
            n_y,
            u: Vec::with_capacity(samples * n_u),
            y: Vec::with_capacity(samples * n_y),
        }
    }

    /// Appends one `(u(k), y(k))` pair. Panics on a dimension mismatch.
    pub fn push(&mut self, u: &[f64], y: &[f64]) {
        assert_eq!(u.len(), self.n_u, "input dimension");
        assert_eq!(y.len(), self.n_y, "output dimension");
        self.u.extend_from_slice(u);
        self.y.extend_from_slice(y);
    }

    pub fn len(&self) -> usize {
        self.u.len() / self.n_u.max(1)
    }

    pub fn is_empty(&self) -> bool {
        self.u.is_empty()
    }

    pub fn u(&self, k: usize) -> &[f64] {
        &self.u[k * self.n_u..(k + 1) * self.n_u]
    }

    pub fn y(&self, k: usize) -> &[f64] {
        &self.y[k * self.n_y..(k + 1) * self.n_y]
    }

    pub fn inputs(&self) -> &[f64] {
        &self.u
    }

    /// Keeps only the last `n` samples.
    pub fn tail(&self, n: usize) -> IoLog {
        let start = self.len().saturating_sub(n);
        IoLog {
            n_u: self.n_u,
            n_y: self.n_y,
            u: self.u[start * self.n_u..].to_vec(),
            y: self.y[start * self.n_y..].to_vec(),
        }
    }
}

/// First differences of a flat sequence of `dim`-vectors.
pub fn increments(samples: &[f64], dim: usize) -> Result<Vec<f64>> {
    if dim == 0 || samples.len() % dim != 0 {
        return Err(Error::InvalidInput(format!(
            "sequence length {} is not a multiple of dimension {dim}",
            samples.len()
        )));
    }
    let n = samples.len() / dim;
    if n < 2 {
        return Err(Error::InsufficientData {
            required: 2,
            available: n,
        });
    }
    Ok((dim..samples.len()).map(|i| samples[i] - samples[i - dim]).collect())
}

/// The four data matrices `dUp`, `Yp`, `dUf`, `Yf`.
#[derive(Debug, Clone, PartialEq)]
pub struct HankelSet {
    pub du_p: DMatrix<f64>,
    pub y_p: DMatrix<f64>,
    pub du_f: DMatrix<f64>,
    pub y_f: DMatrix<f64>,
}

impl HankelSet {
    pub fn columns(&self) -> usize {
        self.y_f.ncols()
    }

    /// `[dUp; Yp; dUf]`.
    pub fn regressor(&self) -> DMatrix<f64> {
        let rows = self.du_p.nrows() + self.y_p.nrows() + self.du_f.nrows();
        let mut z = DMatrix::zeros(rows, self.columns());
        let mut r0 = 0;
        for block in [&self.du_p, &self.y_p, &self.du_f] {
            z.rows_mut(r0, block.nrows()).copy_from(block);
            r0 += block.nrows();
        }
        z
    }
}

/// Builds the Hankel matrices from the first `cfg.required_samples()` log entries.
///
/// The first raw input only provides `u(-1)`; with `du(s) = u_raw(s+1) - u_raw(s)`
/// and `y(s) = y_raw(s+1)`, column `j` (`k = t_ini + j`) holds
/// `du(k-t_ini..k-1)`, `y(k-t_ini+1..k)`, `du(k..k+N-1)` and `y(k+1..k+N)`.
pub fn build_hankel(log: &IoLog, cfg: &IspcConfig) -> Result<HankelSet> {
    if log.n_u != cfg.n_u || log.n_y != cfg.n_y {
        return Err(Error::InvalidInput(format!(
            "log dimensions ({}, {}) do not match configuration ({}, {})",
            log.n_u, log.n_y, cfg.n_u, cfg.n_y
        )));
    }
    let required = cfg.required_samples();
    if log.len() < required {
        return Err(Error::InsufficientData {
            required,
            available: log.len(),
        });
    }
    let (n_u, n_y) = (cfg.n_u, cfg.n_y);
    let (t_ini, horizon, cols) = (cfg.t_ini, cfg.horizon, cfg.t_cols);
    let du = increments(&log.inputs()[..required * n_u], n_u)?;
    let du_at = |s: usize, c: usize| du[s * n_u + c];
    let y_at = |s: usize, c: usize| log.y(s + 1)[c];

    let du_p = DMatrix::from_fn(t_ini * n_u, cols, |r, j| du_at(j + r / n_u, r % n_u));
    let y_p = DMatrix::from_fn(t_ini * n_y, cols, |r, j| y_at(j + 1 + r / n_y, r % n_y));
    let du_f = DMatrix::from_fn(horizon * n_u, cols, |r, j| du_at(j + t_ini + r / n_u, r % n_u));
    let y_f = DMatrix::from_fn(horizon * n_y, cols, |r, j| y_at(j + t_ini + 1 + r / n_y, r % n_y));
    Ok(HankelSet { du_p, y_p, du_f, y_f })
}
