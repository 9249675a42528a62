use nalgebra::{DMatrix, SVD};
use serde::{Deserialize, Serialize};

use super::HankelSet;
use crate::error::{Error, Result};

/// Numerical rank diagnostics of the stacked regressor `[dUp; Yp; dUf]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankReport {
    pub rows: usize,
    pub cols: usize,
    /// Rank of `[dUp; Yp; dUf]`.
    pub rank: usize,
    pub full_row_rank: bool,
    /// Rows of `[dUp; dUf]` and their rank.
    pub input_rows: usize,
    pub input_rank: usize,
    /// The input increments span every past/future window direction.
    pub persistently_exciting: bool,
    pub sigma_max: f64,
    /// Smallest singular value of the stacked regressor.
    pub sigma_min: f64,
    /// Relative cutoff used for the rank decision.
    pub rtol: f64,
}

/// Default relative cutoff `max(m, n) * eps`.
pub fn pinv_tolerance(rows: usize, cols: usize) -> f64 {
    rows.max(cols) as f64 * f64::EPSILON
}

fn numerical_rank(singular_values: &[f64], rtol: f64) -> usize {
    let smax = singular_values.iter().copied().fold(0.0, f64::max);
    if smax == 0.0 {
        return 0;
    }
    singular_values.iter().filter(|&&s| s > rtol * smax).count()
}

fn singular_values(m: &DMatrix<f64>) -> Vec<f64> {
    if m.is_empty() {
        return Vec::new();
    }
    m.singular_values().iter().copied().collect()
}

fn input_block(h: &HankelSet) -> DMatrix<f64> {
    let rows = h.du_p.nrows() + h.du_f.nrows();
    let mut m = DMatrix::zeros(rows, h.columns());
    m.rows_mut(0, h.du_p.nrows()).copy_from(&h.du_p);
    m.rows_mut(h.du_p.nrows(), h.du_f.nrows()).copy_from(&h.du_f);
    m
}

fn build_report(h: &HankelSet, sv: &[f64], rtol: Option<f64>) -> RankReport {
    let rows = h.du_p.nrows() + h.y_p.nrows() + h.du_f.nrows();
    let cols = h.columns();
    let rtol = rtol.unwrap_or_else(|| pinv_tolerance(rows, cols));
    let rank = numerical_rank(sv, rtol);
    let input_rows = h.du_p.nrows() + h.du_f.nrows();
    let input_rank = numerical_rank(&singular_values(&input_block(h)), rtol);
    let sigma_max = sv.iter().copied().fold(0.0, f64::max);
    let sigma_min = if sv.len() < rows {
        0.0
    } else {
        sv.iter().copied().fold(f64::INFINITY, f64::min)
    };
    RankReport {
        rows,
        cols,
        rank,
        full_row_rank: rank == rows,
        input_rows,
        input_rank,
        persistently_exciting: input_rank == input_rows && rank > input_rank,
        sigma_max,
        sigma_min,
        rtol,
    }
}

/// Rank report of the regressor with the default cutoff.
pub fn check_persistency(h: &HankelSet) -> RankReport {
    check_persistency_with(h, None)
}

pub fn check_persistency_with(h: &HankelSet, rtol: Option<f64>) -> RankReport {
    let sv = singular_values(&h.regressor());
    build_report(h, &sv, rtol)
}

/// The identified multi-step predictor `y = P1 du_ini + P2 y_ini + Gamma du`.
#[derive(Debug, Clone, PartialEq)]
pub struct Predictor {
    pub p1: DMatrix<f64>,
    pub p2: DMatrix<f64>,
    pub gamma: DMatrix<f64>,
    /// `||Yf - Theta Z||_F / ||Yf||_F` on the training data.
    pub training_residual: f64,
    pub rank: RankReport,
}

impl Predictor {
    /// Stacked prediction for the given past window and future increments.
    pub fn predict(&self, du_ini: &[f64], y_ini: &[f64], du_future: &[f64]) -> Vec<f64> {
        let a = nalgebra::DVectorView::from_slice(du_ini, du_ini.len());
        let b = nalgebra::DVectorView::from_slice(y_ini, y_ini.len());
        let c = nalgebra::DVectorView::from_slice(du_future, du_future.len());
        let y = &self.p1 * a + &self.p2 * b + &self.gamma * c;
        y.iter().copied().collect()
    }

    pub fn is_finite(&self) -> bool {
        self.p1.iter().chain(self.p2.iter()).chain(self.gamma.iter()).all(|v| v.is_finite())
    }
}

/// Minimum-norm least-squares fit `Theta = Yf [dUp; Yp; dUf]^+` through a thin SVD.
pub fn estimate_predictor(h: &HankelSet) -> Result<Predictor> {
    estimate_predictor_with(h, None)
}

pub fn estimate_predictor_with(h: &HankelSet, rtol: Option<f64>) -> Result<Predictor> {
    let z = h.regressor();
    if z.iter().chain(h.y_f.iter()).any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("Hankel data contains non-finite entries".into()));
    }
    let rows = z.nrows();
    let svd = SVD::new(z.clone(), true, true);
    let sv: Vec<f64> = svd.singular_values.iter().copied().collect();
    let report = build_report(h, &sv, rtol);
    let u = svd.u.as_ref().expect("left singular vectors requested");
    let v_t = svd.v_t.as_ref().expect("right singular vectors requested");

    let cutoff = report.rtol * report.sigma_max;
    let k = sv.len();
    // Theta = Yf V S^+ U^T, restricted to the retained singular triplets
    let yv = &h.y_f * v_t.transpose();
    let mut scaled = DMatrix::zeros(h.y_f.nrows(), k);
    for (i, &s) in sv.iter().enumerate() {
        if s > cutoff && s > 0.0 {
            scaled.set_column(i, &(yv.column(i) / s));
        }
    }
    let theta = scaled * u.transpose();
    debug_assert_eq!(theta.shape(), (h.y_f.nrows(), rows));

    let residual = &h.y_f - &theta * &z;
    let yf_norm = h.y_f.norm();
    let training_residual = if yf_norm > 0.0 { residual.norm() / yf_norm } else { 0.0 };

    let n1 = h.du_p.nrows();
    let n2 = h.y_p.nrows();
    let n3 = h.du_f.nrows();
    Ok(Predictor {
        p1: theta.columns(0, n1).into_owned(),
        p2: theta.columns(n1, n2).into_owned(),
        gamma: theta.columns(n1 + n2, n3).into_owned(),
        training_residual,
        rank: report,
    })
}
