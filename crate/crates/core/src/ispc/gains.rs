use nalgebra::{DMatrix, DVector};

use super::{IspcConfig, Predictor};
use crate::error::{Error, Result};

/// First-increment rows of the analytic control law.
///
/// `du0 = k1 du_ini + k2 y_ini - kr r_stacked`.
#[derive(Debug, Clone, PartialEq)]
pub struct ControllerGains {
    pub n_u: usize,
    pub n_y: usize,
    pub t_ini: usize,
    pub horizon: usize,
    pub k1: DMatrix<f64>,
    pub k2: DMatrix<f64>,
    pub kr: DMatrix<f64>,
}

impl ControllerGains {
    pub fn zeros(n_u: usize, n_y: usize, t_ini: usize, horizon: usize) -> Self {
        Self {
            n_u,
            n_y,
            t_ini,
            horizon,
            k1: DMatrix::zeros(n_u, t_ini * n_u),
            k2: DMatrix::zeros(n_u, t_ini * n_y),
            kr: DMatrix::zeros(n_u, horizon * n_y),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.k1.iter().chain(self.k2.iter()).chain(self.kr.iter()).all(|v| v.is_finite())
    }

    /// Largest absolute entry over all three blocks.
    pub fn amax(&self) -> f64 {
        self.k1.amax().max(self.k2.amax()).max(self.kr.amax())
    }

    /// `kr` applied to `r_y` repeated over the horizon.
    pub fn reference_term(&self, r_y: &[f64]) -> DVector<f64> {
        let mut out = DVector::zeros(self.n_u);
        for stage in 0..self.horizon {
            for (c, &r) in r_y.iter().enumerate() {
                out += self.kr.column(stage * self.n_y + c) * r;
            }
        }
        out
    }
}

/// `Omega = diag(Q, ..., Q, P)` and `Psi = diag(R, ..., R)`.
pub fn block_weights(cfg: &IspcConfig) -> (DMatrix<f64>, DMatrix<f64>) {
    let (n_u, n_y, n) = (cfg.n_u, cfg.n_y, cfg.horizon);
    let mut omega = DMatrix::zeros(n * n_y, n * n_y);
    let mut psi = DMatrix::zeros(n * n_u, n * n_u);
    for i in 0..n {
        let w = if i + 1 == n { &cfg.p } else { &cfg.q };
        omega.view_mut((i * n_y, i * n_y), (n_y, n_y)).copy_from(w);
        psi.view_mut((i * n_u, i * n_u), (n_u, n_u)).copy_from(&cfg.r);
    }
    (omega, psi)
}

/// Full condensed gain `K = -(Psi + Gamma' Omega Gamma)^-1 Gamma' Omega`.
pub fn full_gain(pred: &Predictor, cfg: &IspcConfig) -> Result<DMatrix<f64>> {
    let (omega, psi) = block_weights(cfg);
    let g = &pred.gamma;
    if g.nrows() != omega.nrows() || g.ncols() != psi.nrows() {
        return Err(Error::InvalidInput(format!(
            "predictor Gamma is {}x{}, configuration expects {}x{}",
            g.nrows(),
            g.ncols(),
            omega.nrows(),
            psi.nrows()
        )));
    }
    let gt_omega = g.transpose() * &omega;
    let hessian = &psi + &gt_omega * g;
    let chol = hessian
        .cholesky()
        .ok_or(Error::NotPositiveDefinite("Psi + Gamma' Omega Gamma"))?;
    Ok(-chol.solve(&gt_omega))
}

/// Precomputes the first-increment gains of the analytic law.
pub fn compute_gains(pred: &Predictor, cfg: &IspcConfig) -> Result<ControllerGains> {
    let k = full_gain(pred, cfg)?;
    let first = k.rows(0, cfg.n_u).into_owned();
    Ok(ControllerGains {
        n_u: cfg.n_u,
        n_y: cfg.n_y,
        t_ini: cfg.t_ini,
        horizon: cfg.horizon,
        k1: &first * &pred.p1,
        k2: &first * &pred.p2,
        kr: first,
    })
}

/// Complete optimal increment sequence for one past window and a constant reference.
pub fn optimal_increments(
    pred: &Predictor,
    cfg: &IspcConfig,
    du_ini: &[f64],
    y_ini: &[f64],
    r_y: &[f64],
) -> Result<DVector<f64>> {
    let k = full_gain(pred, cfg)?;
    let free = &pred.p1 * DVector::from_column_slice(du_ini) + &pred.p2 * DVector::from_column_slice(y_ini);
    let r = DVector::from_fn(cfg.horizon * cfg.n_y, |i, _| r_y[i % cfg.n_y]);
    Ok(k * (free - r))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ispc::RankReport;

    fn toy_predictor(cfg: &IspcConfig, gamma_scale: f64) -> Predictor {
        let ny = cfg.horizon * cfg.n_y;
        let nu = cfg.horizon * cfg.n_u;
        let gamma = DMatrix::from_fn(ny, nu, |i, j| {
            let (si, sj) = (i / cfg.n_y, j / cfg.n_u);
            if sj <= si {
                gamma_scale * (0.7f64).powi((si - sj) as i32) * (1.0 + 0.1 * ((i + j) % 3) as f64)
            } else {
                0.0
            }
        });
        Predictor {
            p1: DMatrix::from_fn(ny, cfg.t_ini * cfg.n_u, |i, j| 0.01 * ((i * 7 + j * 3) % 5) as f64),
            p2: DMatrix::from_fn(ny, cfg.t_ini * cfg.n_y, |i, j| if j == cfg.t_ini * cfg.n_y - cfg.n_y + i % cfg.n_y { 1.0 } else { 0.0 }),
            gamma,
            training_residual: 0.0,
            rank: RankReport {
                rows: 0,
                cols: 0,
                rank: 0,
                full_row_rank: false,
                input_rows: 0,
                input_rank: 0,
                persistently_exciting: false,
                sigma_max: 0.0,
                sigma_min: 0.0,
                rtol: 0.0,
            },
        }
    }

    fn small_cfg() -> IspcConfig {
        IspcConfig {
            t_cols: 100,
            t_ini: 4,
            horizon: 8,
            ..IspcConfig::default()
        }
    }

    #[test]
    fn zero_gamma_gives_zero_gains() {
        let cfg = small_cfg();
        let g = compute_gains(&toy_predictor(&cfg, 0.0), &cfg).unwrap();
        assert_eq!(g.amax(), 0.0);
        assert_eq!(g.k1.shape(), (2, 8));
        assert_eq!(g.k2.shape(), (2, 8));
        assert_eq!(g.kr.shape(), (2, 16));
    }

    #[test]
    fn block_weight_layout() {
        let cfg = IspcConfig {
            p: DMatrix::identity(2, 2) * 3.0,
            ..small_cfg()
        };
        let (omega, psi) = block_weights(&cfg);
        assert_eq!(omega.shape(), (16, 16));
        assert_eq!(psi.shape(), (16, 16));
        assert!((omega[(0, 0)] - 7.225).abs() < 1e-12);
        assert_eq!(omega[(14, 14)], 3.0);
        assert_eq!(omega[(0, 1)], 0.0);
        assert!((psi[(2, 2)] - 144.0).abs() < 1e-12);
    }

    #[test]
    fn heavy_input_penalty_shrinks_gain() {
        let cfg = small_cfg();
        let pred = toy_predictor(&cfg, 1.0);
        let base = full_gain(&pred, &cfg).unwrap().norm();
        let heavy = IspcConfig {
            r: &cfg.r * 1e6,
            ..cfg.clone()
        };
        let shrunk = full_gain(&pred, &heavy).unwrap().norm();
        assert!(shrunk * 1e3 <= base, "{base} vs {shrunk}");
    }

    #[test]
    fn indefinite_hessian_is_an_error() {
        let cfg = IspcConfig {
            r: -DMatrix::identity(2, 2),
            ..small_cfg()
        };
        let pred = toy_predictor(&cfg, 0.0);
        assert!(matches!(full_gain(&pred, &cfg), Err(Error::NotPositiveDefinite(_))));
    }

    #[test]
    fn first_rows_match_full_sequence() {
        let cfg = small_cfg();
        let pred = toy_predictor(&cfg, 1.0);
        let g = compute_gains(&pred, &cfg).unwrap();
        let du_ini: Vec<f64> = (0..8).map(|i| 0.01 * i as f64).collect();
        let y_ini: Vec<f64> = (0..8).map(|i| 1.0 - 0.02 * i as f64).collect();
        let r = [1.0, 1.0];
        let full = optimal_increments(&pred, &cfg, &du_ini, &y_ini, &r).unwrap();
        let du0 = &g.k1 * DVector::from_column_slice(&du_ini) + &g.k2 * DVector::from_column_slice(&y_ini)
            - g.reference_term(&r);
        assert!((du0[0] - full[0]).abs() < 1e-12);
        assert!((du0[1] - full[1]).abs() < 1e-12);
    }
}
