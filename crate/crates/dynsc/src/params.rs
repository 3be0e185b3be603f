//! JSON form of the model parameters:
//! `{"k": 2, "pi": [..], "b_stack": [[[..], [..]], ..], "psi": null}`.

use dynsc_core::{DenseMatrix, ModelError, ModelParams};
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelParamsJson {
    pub k: usize,
    pub pi: Vec<f64>,
    pub b_stack: Vec<Vec<Vec<f64>>>,
    #[serde(default)]
    pub psi: Option<Vec<f64>>,
}

impl ModelParamsJson {
    /// Converts and validates.
    pub fn to_params(&self) -> Result<ModelParams, ModelError> {
        let params = self.to_params_unchecked()?;
        params.validate()?;
        Ok(params)
    }

    /// Converts, checking only the matrix shapes.
    pub fn to_params_unchecked(&self) -> Result<ModelParams, ModelError> {
        let mut b_stack = Vec::with_capacity(self.b_stack.len());
        for (layer, rows) in self.b_stack.iter().enumerate() {
            if rows.len() != self.k || rows.iter().any(|r| r.len() != self.k) {
                return Err(ModelError::InvalidConnectivity {
                    layer,
                    reason: "shape is not k x k",
                });
            }
            b_stack.push(DenseMatrix::from_rows(rows));
        }
        Ok(ModelParams {
            k: self.k,
            pi: self.pi.clone(),
            b_stack,
            psi: self.psi.clone(),
        })
    }
}

impl From<&ModelParams> for ModelParamsJson {
    fn from(p: &ModelParams) -> Self {
        Self {
            k: p.k,
            pi: p.pi.clone(),
            b_stack: p
                .b_stack
                .iter()
                .map(|b| (0..b.rows()).map(|i| b.row(i).to_vec()).collect())
                .collect(),
            psi: p.psi.clone(),
        }
    }
}
