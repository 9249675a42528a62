//! Integral subspace predictive control.
//!
//! Identification builds block-Hankel matrices from recorded input increments
//! and outputs, fits the multi-step predictor `[P1 P2 Gamma]` by least squares
//! and condenses the unconstrained quadratic cost into a linear gain. Online, a
//! control step is three matrix-vector products on the past window.

mod artifact;
mod excitation;
mod gains;
mod hankel;
mod identify;
mod runtime;

pub use artifact::{IspcArtifact, MatrixRecord};
pub use excitation::Exciter;
pub use gains::{block_weights, compute_gains, full_gain, optimal_increments, ControllerGains};
pub use hankel::{build_hankel, increments, HankelSet, IoLog};
pub use identify::{
    check_persistency, check_persistency_with, estimate_predictor, estimate_predictor_with, pinv_tolerance, Predictor,
    RankReport,
};
pub use runtime::IspcRuntime;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Horizons, sample time and weights of the controller.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IspcConfig {
    /// Controller sample time, s.
    pub ts: f64,
    /// Number of Hankel columns.
    pub t_cols: usize,
    /// Length of the past window.
    pub t_ini: usize,
    /// Prediction horizon.
    pub horizon: usize,
    pub n_u: usize,
    pub n_y: usize,
    /// Stage output weight.
    #[serde(with = "matrix_rows")]
    pub q: DMatrix<f64>,
    /// Terminal output weight.
    #[serde(with = "matrix_rows")]
    pub p: DMatrix<f64>,
    /// Input-increment weight.
    #[serde(with = "matrix_rows")]
    pub r: DMatrix<f64>,
    /// Relative singular-value cutoff for the pseudo-inverse; `None` uses
    /// `max(rows, cols) * eps`.
    pub pinv_rtol: Option<f64>,
}

impl Default for IspcConfig {
    fn default() -> Self {
        let q = DMatrix::from_diagonal(&nalgebra::dvector![8.5 * 0.85, 8.5 * 1.30]);
        Self {
            ts: 1e-3,
            t_cols: 10_000,
            t_ini: 25,
            horizon: 50,
            n_u: 2,
            n_y: 2,
            p: q.clone(),
            q,
            r: DMatrix::from_diagonal(&nalgebra::dvector![120.0 * 1.2, 120.0]),
            pinv_rtol: None,
        }
    }
}

impl IspcConfig {
    /// Settings for the fault-triggered variant (750 columns).
    pub fn fault_triggered() -> Self {
        Self {
            t_cols: 750,
            ..Self::default()
        }
    }

    /// Rows of the stacked regressor `[dUp; Yp; dUf]`.
    pub fn regressor_rows(&self) -> usize {
        self.t_ini * (self.n_u + self.n_y) + self.horizon * self.n_u
    }

    /// Raw samples needed to build `t_cols` Hankel columns.
    pub fn required_samples(&self) -> usize {
        self.t_cols + self.t_ini + self.horizon + 1
    }

    /// Smallest column count suggested by the rule of thumb `(T_ini + N) n_u + n_u + n_y`.
    pub fn min_columns(&self) -> usize {
        (self.t_ini + self.horizon) * self.n_u + self.n_u + self.n_y
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.ts > 0.0 && self.ts.is_finite()) {
            return Err(Error::config("ispc.ts", "must be positive"));
        }
        if self.n_u == 0 || self.n_y == 0 {
            return Err(Error::config("ispc.n_u", "input and output dimensions must be positive"));
        }
        if self.t_ini < self.n_u + self.n_y {
            return Err(Error::config("ispc.t_ini", "must be at least n_u + n_y"));
        }
        if self.horizon < self.t_ini {
            return Err(Error::config("ispc.horizon", "must be at least t_ini"));
        }
        if self.t_cols < self.min_columns() {
            return Err(Error::config(
                "ispc.t_cols",
                format!("must be at least (t_ini + horizon) * n_u + n_u + n_y = {}", self.min_columns()),
            ));
        }
        check_weight("ispc.q", &self.q, self.n_y, false)?;
        check_weight("ispc.p", &self.p, self.n_y, false)?;
        check_weight("ispc.r", &self.r, self.n_u, true)?;
        if let Some(tol) = self.pinv_rtol {
            if !(tol > 0.0 && tol < 1.0) {
                return Err(Error::config("ispc.pinv_rtol", "must lie in (0, 1)"));
            }
        }
        Ok(())
    }
}

fn check_weight(field: &str, m: &DMatrix<f64>, dim: usize, definite: bool) -> Result<()> {
    if m.nrows() != dim || m.ncols() != dim {
        return Err(Error::config(field, format!("must be {dim}x{dim}")));
    }
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::config(field, "entries must be finite"));
    }
    let sym_err = (m - m.transpose()).amax();
    if sym_err > 1e-12 * m.amax().max(1.0) {
        return Err(Error::config(field, "must be symmetric"));
    }
    let eig = m.clone().symmetric_eigen();
    let min = eig.eigenvalues.min();
    let scale = eig.eigenvalues.amax().max(1.0);
    if definite && min <= 1e-12 * scale {
        return Err(Error::config(field, "must be positive definite"));
    }
    if !definite && min < -1e-12 * scale {
        return Err(Error::config(field, "must be positive semi-definite"));
    }
    Ok(())
}

/// Serde adapter storing a matrix as a list of rows.
pub mod matrix_rows {
    use nalgebra::DMatrix;
    use serde::{de::Error as _, Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(m: &DMatrix<f64>, s: S) -> Result<S::Ok, S::Error> {
        let rows: Vec<Vec<f64>> = m.row_iter().map(|r| r.iter().copied().collect()).collect();
        rows.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<DMatrix<f64>, D::Error> {
        let rows = Vec::<Vec<f64>>::deserialize(d)?;
        let n = rows.len();
        let m = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != m) {
            return Err(D::Error::custom("matrix rows have unequal lengths"));
        }
        Ok(DMatrix::from_fn(n, m, |i, j| rows[i][j]))
    }
}
