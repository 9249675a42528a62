use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{ControllerGains, IspcConfig, Predictor, RankReport};
use crate::error::{Error, Result};

pub const ARTIFACT_FORMAT: &str = "gcpc-ispc/1";

/// Dimensions plus row-major entries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixRecord {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl MatrixRecord {
    pub fn from_matrix(m: &DMatrix<f64>) -> Self {
        Self {
            rows: m.nrows(),
            cols: m.ncols(),
            data: m.transpose().as_slice().to_vec(),
        }
    }

    pub fn to_matrix(&self) -> Result<DMatrix<f64>> {
        if self.data.len() != self.rows * self.cols {
            return Err(Error::InvalidInput(format!(
                "matrix record declares {}x{} but holds {} entries",
                self.rows,
                self.cols,
                self.data.len()
            )));
        }
        Ok(DMatrix::from_row_slice(self.rows, self.cols, &self.data))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictorRecord {
    pub p1: MatrixRecord,
    pub p2: MatrixRecord,
    pub gamma: MatrixRecord,
    pub training_residual: f64,
    pub rank: RankReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GainsRecord {
    pub k1: MatrixRecord,
    pub k2: MatrixRecord,
    pub kr: MatrixRecord,
}

/// Identification result that can be stored and reloaded for control.
///
/// The operating point `(u_op, y_op)` is where the data was recorded; the
/// harness uses it to seed the controller at rest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IspcArtifact {
    pub format: String,
    pub config: IspcConfig,
    pub predictor: PredictorRecord,
    pub gains: GainsRecord,
    pub u_op: Vec<f64>,
    pub y_op: Vec<f64>,
}

impl IspcArtifact {
    pub fn new(config: &IspcConfig, predictor: &Predictor, gains: &ControllerGains, u_op: Vec<f64>, y_op: Vec<f64>) -> Self {
        Self {
            format: ARTIFACT_FORMAT.to_string(),
            config: config.clone(),
            predictor: PredictorRecord {
                p1: MatrixRecord::from_matrix(&predictor.p1),
                p2: MatrixRecord::from_matrix(&predictor.p2),
                gamma: MatrixRecord::from_matrix(&predictor.gamma),
                training_residual: predictor.training_residual,
                rank: predictor.rank.clone(),
            },
            gains: GainsRecord {
                k1: MatrixRecord::from_matrix(&gains.k1),
                k2: MatrixRecord::from_matrix(&gains.k2),
                kr: MatrixRecord::from_matrix(&gains.kr),
            },
            u_op,
            y_op,
        }
    }

    pub fn predictor(&self) -> Result<Predictor> {
        Ok(Predictor {
            p1: self.predictor.p1.to_matrix()?,
            p2: self.predictor.p2.to_matrix()?,
            gamma: self.predictor.gamma.to_matrix()?,
            training_residual: self.predictor.training_residual,
            rank: self.predictor.rank.clone(),
        })
    }

    pub fn gains(&self) -> Result<ControllerGains> {
        let c = &self.config;
        let g = ControllerGains {
            n_u: c.n_u,
            n_y: c.n_y,
            t_ini: c.t_ini,
            horizon: c.horizon,
            k1: self.gains.k1.to_matrix()?,
            k2: self.gains.k2.to_matrix()?,
            kr: self.gains.kr.to_matrix()?,
        };
        let expect = [
            (c.n_u, c.t_ini * c.n_u),
            (c.n_u, c.t_ini * c.n_y),
            (c.n_u, c.horizon * c.n_y),
        ];
        let got = [g.k1.shape(), g.k2.shape(), g.kr.shape()];
        if expect != got {
            return Err(Error::InvalidInput(format!("gain shapes {got:?} do not match configuration {expect:?}")));
        }
        Ok(g)
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::InvalidInput(e.to_string()))
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let a: Self = serde_json::from_str(s).map_err(|e| Error::InvalidInput(e.to_string()))?;
        if a.format != ARTIFACT_FORMAT {
            return Err(Error::InvalidInput(format!("unsupported artifact format {:?}", a.format)));
        }
        Ok(a)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matrix_record_is_row_major() {
        let m = DMatrix::from_row_slice(2, 3, &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        let r = MatrixRecord::from_matrix(&m);
        assert_eq!(r.data, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        assert_eq!(r.to_matrix().unwrap(), m);
    }

    #[test]
    fn malformed_record_rejected() {
        let r = MatrixRecord {
            rows: 2,
            cols: 2,
            data: vec![1.0],
        };
        assert!(r.to_matrix().is_err());
    }
}
