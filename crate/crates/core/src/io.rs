//! JSON sample files: `{"m1": .., "m2": .., "n": .., "matrices": [[[..]]]}`
//! where `matrices[i][r][c]` is entry `(r, c)` of the `i`-th observation.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{KronError, Result};
use crate::model::DataSample;
use crate::scalar::Real;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SampleFile {
    pub m1: usize,
    pub m2: usize,
    pub n: usize,
    pub matrices: Vec<Vec<Vec<f64>>>,
}

impl SampleFile {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text)
            .map_err(|e| KronError::InvalidSample(format!("malformed sample file: {e}")))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("sample files always serialize")
    }

    pub fn to_sample<T: Real>(&self) -> Result<DataSample<T>> {
        if self.matrices.len() != self.n {
            return Err(KronError::InvalidSample(format!(
                "declared n = {} but found {} matrices",
                self.n,
                self.matrices.len()
            )));
        }
        let mut out = Vec::with_capacity(self.n);
        for (i, rows) in self.matrices.iter().enumerate() {
            if rows.len() != self.m1 || rows.iter().any(|r| r.len() != self.m2) {
                return Err(KronError::InvalidSample(format!(
                    "matrix {i} is not {}x{}",
                    self.m1, self.m2
                )));
            }
            if rows.iter().flatten().any(|x| !x.is_finite()) {
                return Err(KronError::InvalidSample(format!(
                    "matrix {i} has a non-finite entry"
                )));
            }
            out.push(DMatrix::from_fn(self.m1, self.m2, |r, c| {
                T::lit(rows[r][c])
            }));
        }
        DataSample::with_dims(self.m1, self.m2, out)
    }

    pub fn from_sample<T: Real>(sample: &DataSample<T>) -> Self {
        SampleFile {
            m1: sample.m1(),
            m2: sample.m2(),
            n: sample.n(),
            matrices: sample
                .matrices()
                .iter()
                .map(crate::spd::matrix_rows)
                .collect(),
        }
    }
}
