//! Eigenvalue batches for the induced and asymptotic induced ensembles.
//!
//! Sample `i` of a batch always draws from stream `(seed, i)`, so the rows do
//! not depend on how many worker threads produced them.

use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sampling::{induced_density, sample_asymptotic, EnsembleSpec, RngStream};
use crate::spectral::InvariantStateConfig;
use crate::tolerance::ToleranceConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "ensemble", rename_all = "snake_case")]
pub enum Ensemble {
    /// Invariant states of `Φ^{U, diag(b)}`.
    Asymptotic { d: usize, b: Vec<f64> },
    /// Partial traces of uniform pure states on `C^d ⊗ C^{d'}`.
    Induced { d: usize, d_prime: usize },
}

impl Ensemble {
    pub fn d(&self) -> usize {
        match self {
            Ensemble::Asymptotic { d, .. } | Ensemble::Induced { d, .. } => *d,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Ensemble::Asymptotic { d, b } => EnsembleSpec::new(*d, b.clone()).map(|_| ()),
            Ensemble::Induced { d, d_prime } if *d == 0 || *d_prime == 0 => {
                Err(Error::InvalidParameter("dimensions must be positive".into()))
            }
            Ensemble::Induced { .. } => Ok(()),
        }
    }

    /// Short file-name friendly label, e.g. `asymptotic_d2_b0.75-0.25`.
    pub fn label(&self) -> String {
        match self {
            Ensemble::Asymptotic { d, b } => {
                let b: Vec<String> = b.iter().map(|x| format!("{}", (x * 1e6).round() / 1e6)).collect();
                format!("asymptotic_d{d}_b{}", b.join("-"))
            }
            Ensemble::Induced { d, d_prime } => format!("induced_d{d}_dp{d_prime}"),
        }
    }
}

/// The six asymptotic and three induced parameter sets of the reference spectra plots.
pub fn figure_parameter_sets() -> Vec<Ensemble> {
    let a = |d, b: &[f64]| Ensemble::Asymptotic { d, b: b.to_vec() };
    vec![
        a(2, &[1.0, 0.0]),
        a(2, &[0.75, 0.25]),
        a(2, &[1.0, 0.0, 0.0, 0.0]),
        a(3, &[1.0, 0.0, 0.0]),
        a(3, &[0.75, 0.125, 0.125]),
        a(3, &[1.0, 0.0, 0.0, 0.0, 0.0]),
        Ensemble::Induced { d: 2, d_prime: 2 },
        Ensemble::Induced { d: 3, d_prime: 3 },
        Ensemble::Induced { d: 3, d_prime: 5 },
    ]
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampleBatch {
    /// Ascending eigenvalues, one row per sample in stream order.
    pub rows: Vec<Vec<f64>>,
    /// Total unitaries discarded by the asymptotic sampler.
    pub retry_count: usize,
}

fn sample_one(ensemble: &Ensemble, stream: RngStream, tol: &ToleranceConfig) -> Result<(Vec<f64>, usize)> {
    let mut rng = stream.rng();
    let (state, retries) = match ensemble {
        Ensemble::Asymptotic { d, b } => {
            let spec = EnsembleSpec::new(*d, b.clone())?;
            let s = sample_asymptotic(&spec, &mut rng, &InvariantStateConfig::default(), tol)?;
            (s.state, s.retries)
        }
        Ensemble::Induced { d, d_prime } => (induced_density(*d, *d_prime, &mut rng)?, 0),
    };
    let ev = state.eigenvalues()?.into_iter().map(|l| l.max(0.0)).collect();
    Ok((ev, retries))
}

/// Draws `count` samples on `jobs` worker threads (`0` = rayon default).
pub fn sample_batch(
    ensemble: &Ensemble,
    seed: u64,
    count: usize,
    jobs: usize,
    tol: &ToleranceConfig,
) -> Result<SampleBatch> {
    ensemble.validate()?;
    if count == 0 {
        return Err(Error::InvalidParameter("sample count must be at least 1".into()));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))?;
    let results: Vec<(Vec<f64>, usize)> = pool.install(|| {
        (0..count as u64)
            .into_par_iter()
            .map(|i| sample_one(ensemble, RngStream::new(seed, i), tol))
            .collect::<Result<Vec<_>>>()
    })?;
    let retry_count = results.iter().map(|r| r.1).sum();
    Ok(SampleBatch { rows: results.into_iter().map(|r| r.0).collect(), retry_count })
}

/// Headerless CSV, one row per sample, `.` decimal point, `\n` line ends.
pub fn write_eigenvalue_csv<W: Write>(rows: &[Vec<f64>], mut out: W) -> Result<()> {
    for row in rows {
        let line: Vec<String> = row.iter().map(|x| format!("{x:e}")).collect();
        writeln!(out, "{}", line.join(","))?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_eigenvalue_csv(text: &str) -> Result<Vec<Vec<f64>>> {
    text.lines()
        .filter(|l| !l.is_empty())
        .map(|l| {
            l.split(',')
                .map(|x| x.trim().parse::<f64>().map_err(|e| Error::InvalidParameter(format!("bad value {x:?}: {e}"))))
                .collect()
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleManifest {
    pub spec: Ensemble,
    pub seed: u64,
    pub count: usize,
    pub retry_count: usize,
    /// Meaning of the CSV columns.
    pub columns: Vec<String>,
    pub tolerances: ToleranceConfig,
}

impl SampleManifest {
    pub fn new(spec: &Ensemble, seed: u64, batch: &SampleBatch, tol: &ToleranceConfig) -> Self {
        Self {
            spec: spec.clone(),
            seed,
            count: batch.rows.len(),
            retry_count: batch.retry_count,
            columns: (1..=spec.d()).map(|k| format!("lambda_{k}")).collect(),
            tolerances: *tol,
        }
    }
}

/// Writes `<stem>.csv` and `<stem>.manifest.json` and returns both paths.
pub fn write_batch(
    dir: &Path,
    stem: &str,
    spec: &Ensemble,
    seed: u64,
    batch: &SampleBatch,
    tol: &ToleranceConfig,
) -> Result<(PathBuf, PathBuf)> {
    std::fs::create_dir_all(dir)?;
    let csv_path = dir.join(format!("{stem}.csv"));
    let manifest_path = dir.join(format!("{stem}.manifest.json"));
    write_eigenvalue_csv(&batch.rows, std::io::BufWriter::new(std::fs::File::create(&csv_path)?))?;
    let manifest = SampleManifest::new(spec, seed, batch, tol);
    std::fs::write(&manifest_path, serde_json::to_string_pretty(&manifest)? + "\n")?;
    Ok((csv_path, manifest_path))
}
