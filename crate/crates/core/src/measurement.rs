//! Single-shot binary measurements: the quantized-noise simulation model and
//! replay from a recorded data bank.

use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{NmqaError, Result};
use crate::lattice::TrueField;

/// Truncation half-width of the measurement noise; fixed by the model.
pub const NOISE_HALF_WIDTH: f64 = 0.5;

/// Where a binary outcome came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Origin {
    /// A projective measurement on the physical site.
    Physical,
    /// A data message synthesized from posterior state.
    Message,
}

/// One binary outcome at a site.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MeasurementOutcome {
    pub site: usize,
    pub bit: u8,
    pub origin: Origin,
}

impl MeasurementOutcome {
    pub fn physical(site: usize, bit: u8) -> Self {
        MeasurementOutcome {
            site,
            bit,
            origin: Origin::Physical,
        }
    }

    pub fn message(site: usize, bit: u8) -> Self {
        MeasurementOutcome {
            site,
            bit,
            origin: Origin::Message,
        }
    }
}

/// Noise parameters of the measurement and map-approximation error models.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseParams {
    /// Variance of the truncated measurement noise (probability units).
    pub sigma_v: f64,
    /// Mean of the map-approximation error (radians).
    pub mu_f: f64,
    /// Variance of the map-approximation error (radians^2).
    pub sigma_f: f64,
}

impl Default for NoiseParams {
    fn default() -> Self {
        NoiseParams {
            sigma_v: 1e-4,
            mu_f: 0.0,
            sigma_f: 1e-6,
        }
    }
}

impl NoiseParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.sigma_v > 0.0) || self.sigma_v >= 1.0 {
            return Err(NmqaError::InvalidArgument(format!(
                "sigma_v must be in (0, 1), got {}",
                self.sigma_v
            )));
        }
        if !(self.sigma_f > 0.0) {
            return Err(NmqaError::InvalidArgument(format!(
                "sigma_f must be positive, got {}",
                self.sigma_f
            )));
        }
        if !self.mu_f.is_finite() {
            return Err(NmqaError::InvalidArgument(format!(
                "mu_f must be finite, got {}",
                self.mu_f
            )));
        }
        Ok(())
    }
}

/// Draw measurement noise: zero-mean Gaussian of variance `sigma_v`
/// truncated to `[-1/2, 1/2]`, sampled by rejection.
pub fn sample_truncated_noise<R: Rng + ?Sized>(sigma_v: f64, rng: &mut R) -> Result<f64> {
    if !(sigma_v > 0.0) {
        return Err(NmqaError::InvalidArgument(format!(
            "sigma_v must be positive, got {sigma_v}"
        )));
    }
    let normal = Normal::new(0.0, sigma_v.sqrt())
        .map_err(|e| NmqaError::InvalidArgument(e.to_string()))?;
    loop {
        let v = normal.sample(rng);
        if v.abs() <= NOISE_HALF_WIDTH {
            return Ok(v);
        }
    }
}

/// One simulated shot at a site with phase `f`: a Bernoulli draw with
/// parameter `clamp(cos(f)/2 + v + 1/2, 0, 1)` and fresh noise `v`.
pub fn simulate_measurement<R: Rng + ?Sized>(f: f64, sigma_v: f64, rng: &mut R) -> Result<u8> {
    if !(0.0..=std::f64::consts::PI).contains(&f) {
        return Err(NmqaError::InvalidArgument(format!(
            "phase must lie in [0, pi], got {f}"
        )));
    }
    let v = sample_truncated_noise(sigma_v, rng)?;
    let p = (0.5 * f.cos() + v + 0.5).clamp(0.0, 1.0);
    Ok(u8::from(rng.random::<f64>() < p))
}

/// A d x N matrix of recorded binary shots, one row per site.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DataBank {
    shots: Vec<Vec<u8>>,
    reps: usize,
}

impl DataBank {
    pub fn new(shots: Vec<Vec<u8>>) -> Result<Self> {
        if shots.is_empty() || shots[0].is_empty() {
            return Err(NmqaError::InvalidArgument("empty data bank".into()));
        }
        let reps = shots[0].len();
        for (i, row) in shots.iter().enumerate() {
            if row.len() != reps {
                return Err(NmqaError::InvalidArgument(format!(
                    "ragged bank: row {} has {} entries, expected {reps}",
                    i + 1,
                    row.len()
                )));
            }
            if let Some(c) = row.iter().position(|&b| b > 1) {
                return Err(NmqaError::InvalidArgument(format!(
                    "non-binary entry at row {} column {}",
                    i + 1,
                    c + 1
                )));
            }
        }
        Ok(DataBank { shots, reps })
    }

    /// Simulate a bank of `reps` shots per site from a true field.
    pub fn simulate_from_field<R: Rng + ?Sized>(
        field: &TrueField,
        reps: usize,
        sigma_v: f64,
        rng: &mut R,
    ) -> Result<Self> {
        if reps == 0 {
            return Err(NmqaError::InvalidArgument("reps must be positive".into()));
        }
        let shots = field
            .values()
            .iter()
            .map(|&f| (0..reps).map(|_| simulate_measurement(f, sigma_v, rng)).collect())
            .collect::<Result<Vec<Vec<u8>>>>()?;
        DataBank::new(shots)
    }

    /// Site count.
    pub fn d(&self) -> usize {
        self.shots.len()
    }

    /// Repetitions per site.
    pub fn reps(&self) -> usize {
        self.reps
    }

    pub fn row(&self, site: usize) -> &[u8] {
        &self.shots[site]
    }

    /// Write as CSV of 0/1 tokens, one row per site, no header.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
        for row in &self.shots {
            let line: Vec<&str> = row.iter().map(|&b| if b == 1 { "1" } else { "0" }).collect();
            writeln!(out, "{}", line.join(","))?;
        }
        Ok(())
    }
}

/// Parse a data-bank CSV: one line per site, comma-separated 0/1, no header.
pub fn ingest_databank(path: &Path) -> Result<DataBank> {
    let file = std::fs::File::open(path)?;
    let display = path.display().to_string();
    let mut shots: Vec<Vec<u8>> = Vec::new();
    let mut reps = 0usize;
    for (row_idx, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let mut row = Vec::with_capacity(reps.max(16));
        for (col_idx, tok) in trimmed.split(',').enumerate() {
            match tok.trim() {
                "0" => row.push(0),
                "1" => row.push(1),
                other => {
                    return Err(NmqaError::Format {
                        path: display,
                        row: row_idx + 1,
                        column: col_idx + 1,
                        message: format!("expected 0 or 1, found {other:?}"),
                    })
                }
            }
        }
        if shots.is_empty() {
            reps = row.len();
        } else if row.len() != reps {
            return Err(NmqaError::Format {
                path: display,
                row: row_idx + 1,
                column: row.len(),
                message: format!("ragged row: {} entries, expected {reps}", row.len()),
            });
        }
        shots.push(row);
    }
    if shots.is_empty() {
        return Err(NmqaError::Format {
            path: display,
            row: 0,
            column: 0,
            message: "empty file".into(),
        });
    }
    DataBank::new(shots)
}

/// Replay one shot: a uniform draw (with replacement) from the site's row.
pub fn replay_measurement<R: Rng + ?Sized>(
    bank: &DataBank,
    site: usize,
    rng: &mut R,
) -> Result<u8> {
    if site >= bank.d() {
        return Err(NmqaError::InvalidArgument(format!(
            "site {site} out of range for {}-site bank",
            bank.d()
        )));
    }
    let col = rng.random_range(0..bank.reps());
    Ok(bank.shots[site][col])
}

/// The per-site field implied by averaging every repetition in the bank:
/// `arccos(2 * mean - 1)` with the mean clipped to `[0, 1]`.
pub fn empirical_truth(bank: &DataBank) -> TrueField {
    let values = bank
        .shots
        .iter()
        .map(|row| {
            let mean = row.iter().map(|&b| b as f64).sum::<f64>() / row.len() as f64;
            (2.0 * mean.clamp(0.0, 1.0) - 1.0).clamp(-1.0, 1.0).acos()
        })
        .collect();
    TrueField::external(values).expect("arccos output is always in [0, pi]")
}
