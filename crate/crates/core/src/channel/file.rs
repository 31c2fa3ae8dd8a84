//! JSON channel files.
//!
//! Matrices are flat row-major lists of `[re, im]` pairs:
//!
//! ```json
//! {"d": 2, "d_env": 2, "U": [[1,0], [0,0], ...], "beta": [[1,0], [0,0], [0,0], [0,0]]}
//! {"d": 2, "operators": [[[0.7071,0], ...], [[0.7071,0], ...]]}
//! ```

use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{DensityMatrix, KrausChannel, StinespringChannel};
use crate::error::Result;
use crate::mat::ComplexMatrix;
use crate::tolerance::ToleranceConfig;

type Entries = Vec<[f64; 2]>;

#[derive(Debug, Clone, Serialize, Deserialize)]
struct StinespringJson {
    d: usize,
    d_env: usize,
    #[serde(rename = "U")]
    u: Entries,
    beta: Entries,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct KrausJson {
    d: usize,
    operators: Vec<Entries>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
enum AnyJson {
    Stinespring(StinespringJson),
    Kraus(KrausJson),
}

/// A channel loaded from (or destined for) a JSON file.
#[derive(Debug, Clone, PartialEq)]
pub enum ChannelFile {
    Stinespring(StinespringChannel),
    Kraus(KrausChannel),
}

fn to_entries(m: &ComplexMatrix) -> Entries {
    m.as_slice().iter().map(|z| [z.re, z.im]).collect()
}

fn from_entries(n: usize, e: &Entries) -> Result<ComplexMatrix> {
    ComplexMatrix::from_vec(n, n, e.iter().map(|&[re, im]| Complex64::new(re, im)).collect())
}

impl ChannelFile {
    pub fn from_json(text: &str, tol: &ToleranceConfig) -> Result<Self> {
        match serde_json::from_str::<AnyJson>(text)? {
            AnyJson::Stinespring(s) => {
                let u = from_entries(s.d * s.d_env, &s.u)?;
                let beta = DensityMatrix::new(from_entries(s.d_env, &s.beta)?, tol)?;
                Ok(Self::Stinespring(StinespringChannel::new(s.d, u, beta, tol)?))
            }
            AnyJson::Kraus(k) => {
                let ops = k.operators.iter().map(|e| from_entries(k.d, e)).collect::<Result<Vec<_>>>()?;
                Ok(Self::Kraus(KrausChannel::new(ops, tol)?))
            }
        }
    }

    pub fn load(path: &Path, tol: &ToleranceConfig) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?, tol)
    }

    pub fn to_json(&self) -> Result<String> {
        let any = match self {
            Self::Stinespring(s) => AnyJson::Stinespring(StinespringJson {
                d: s.d(),
                d_env: s.d_env(),
                u: to_entries(s.unitary()),
                beta: to_entries(s.beta().matrix()),
            }),
            Self::Kraus(k) => {
                AnyJson::Kraus(KrausJson { d: k.d(), operators: k.operators().iter().map(to_entries).collect() })
            }
        };
        Ok(serde_json::to_string(&any)?)
    }

    pub fn into_kraus(self, tol: &ToleranceConfig) -> Result<KrausChannel> {
        match self {
            Self::Stinespring(s) => s.to_kraus(tol),
            Self::Kraus(k) => Ok(k),
        }
    }

    pub fn d(&self) -> usize {
        match self {
            Self::Stinespring(s) => s.d(),
            Self::Kraus(k) => k.d(),
        }
    }
}
