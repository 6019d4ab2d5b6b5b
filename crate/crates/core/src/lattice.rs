//! Qubit array geometry and synthetic true fields.
//!
//! Sites live on regular 1D/2D grids with coordinates in units of the
//! inter-qubit spacing. Site labels are 0-based internally and rendered
//! 1-based in reports.

use serde::{Deserialize, Serialize};

use crate::error::{NmqaError, Result};

/// A regular grid of qubit sites with cached pairwise distances.
#[derive(Debug, Clone)]
pub struct QubitArray {
    rows: usize,
    cols: usize,
    spacing: f64,
    sites: Vec<[f64; 2]>,
    /// Row-major d*d distance matrix.
    dist: Vec<f64>,
    /// Per site: all other sites ordered by increasing distance (ties by label).
    by_distance: Vec<Vec<(usize, f64)>>,
}

impl QubitArray {
    /// Number of sites.
    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    /// Site coordinates in row-major order.
    pub fn sites(&self) -> &[[f64; 2]] {
        &self.sites
    }

    /// Euclidean distance between two sites.
    pub fn distance(&self, i: usize, j: usize) -> Result<f64> {
        let d = self.len();
        if i >= d || j >= d {
            return Err(NmqaError::InvalidArgument(format!(
                "site label out of range: ({i}, {j}) on {d} sites"
            )));
        }
        Ok(self.dist[i * d + j])
    }

    /// All sites other than `center`, nearest first.
    pub fn neighbors_by_distance(&self, center: usize) -> &[(usize, f64)] {
        &self.by_distance[center]
    }

    /// Largest pairwise separation; 0 for a single site.
    pub fn diameter(&self) -> f64 {
        self.dist.iter().cloned().fold(0.0, f64::max)
    }
}

/// Build a `rows x cols` grid with the given spacing, row-major site order.
pub fn build_grid(rows: usize, cols: usize, spacing: f64) -> Result<QubitArray> {
    if rows == 0 || cols == 0 {
        return Err(NmqaError::InvalidArgument(format!(
            "grid dimensions must be positive, got {rows}x{cols}"
        )));
    }
    if !(spacing > 0.0) {
        return Err(NmqaError::InvalidArgument(format!(
            "spacing must be positive, got {spacing}"
        )));
    }
    let mut sites = Vec::with_capacity(rows * cols);
    for r in 0..rows {
        for c in 0..cols {
            sites.push([c as f64 * spacing, r as f64 * spacing]);
        }
    }
    let d = sites.len();
    let mut dist = vec![0.0; d * d];
    for i in 0..d {
        for j in 0..d {
            let dx = sites[i][0] - sites[j][0];
            let dy = sites[i][1] - sites[j][1];
            dist[i * d + j] = (dx * dx + dy * dy).sqrt();
        }
    }
    let by_distance = (0..d)
        .map(|i| {
            let mut others: Vec<(usize, f64)> = (0..d)
                .filter(|&j| j != i)
                .map(|j| (j, dist[i * d + j]))
                .collect();
            others.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap().then(a.0.cmp(&b.0)));
            others
        })
        .collect();
    Ok(QubitArray {
        rows,
        cols,
        spacing,
        sites,
        dist,
        by_distance,
    })
}

/// Axis-aligned block of grid sites, bounds inclusive and 0-based.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub row_lo: usize,
    pub row_hi: usize,
    pub col_lo: usize,
    pub col_hi: usize,
}

impl Region {
    pub fn contains(&self, row: usize, col: usize) -> bool {
        row >= self.row_lo && row <= self.row_hi && col >= self.col_lo && col <= self.col_hi
    }
}

/// Shape of a synthetic field; `low`/`high` levels are supplied separately.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FieldSpec {
    /// Sites inside `region` sit at `high`, the rest at `low`.
    Square2d { region: Region },
    /// Sites with column index below `split` sit at `low`, the rest at `high`.
    Step1d { split: usize },
    /// `low + (high - low) * exp(-|r - center|^2 / (2 sigma^2))`, clipped.
    Gaussian2d { center: [f64; 2], sigma: f64 },
    /// Values supplied verbatim, one per site.
    External { values: Vec<f64> },
}

/// Ground-truth phase map over an array, radians in `[0, pi]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrueField {
    values: Vec<f64>,
    kind: String,
}

impl TrueField {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn kind(&self) -> &str {
        &self.kind
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Wrap externally-obtained per-site values (e.g. a data-bank average).
    pub fn external(values: Vec<f64>) -> Result<Self> {
        check_range("external value", &values)?;
        Ok(TrueField {
            values,
            kind: "external".into(),
        })
    }
}

fn check_range(what: &str, values: &[f64]) -> Result<()> {
    for (i, &v) in values.iter().enumerate() {
        if !(0.0..=std::f64::consts::PI).contains(&v) {
            return Err(NmqaError::InvalidArgument(format!(
                "{what} at site {} is {v}, outside [0, pi]",
                i + 1
            )));
        }
    }
    Ok(())
}

/// Sample a synthetic field over the array.
pub fn make_field(array: &QubitArray, spec: &FieldSpec, low: f64, high: f64) -> Result<TrueField> {
    if !(0.0 <= low && low <= high && high <= std::f64::consts::PI) {
        return Err(NmqaError::InvalidArgument(format!(
            "field levels must satisfy 0 <= low <= high <= pi, got low={low} high={high}"
        )));
    }
    let d = array.len();
    let (values, kind) = match spec {
        FieldSpec::Square2d { region } => {
            if region.row_hi >= array.rows() || region.col_hi >= array.cols() {
                return Err(NmqaError::InvalidArgument(format!(
                    "region {region:?} exceeds {}x{} grid",
                    array.rows(),
                    array.cols()
                )));
            }
            let mut v = Vec::with_capacity(d);
            for r in 0..array.rows() {
                for c in 0..array.cols() {
                    v.push(if region.contains(r, c) { high } else { low });
                }
            }
            (v, "square2d")
        }
        FieldSpec::Step1d { split } => {
            let mut v = Vec::with_capacity(d);
            for r in 0..array.rows() {
                for c in 0..array.cols() {
                    let _ = r;
                    v.push(if c < *split { low } else { high });
                }
            }
            (v, "step1d")
        }
        FieldSpec::Gaussian2d { center, sigma } => {
            if !(sigma > &0.0) {
                return Err(NmqaError::InvalidArgument(format!(
                    "gaussian sigma must be positive, got {sigma}"
                )));
            }
            let v = array
                .sites()
                .iter()
                .map(|s| {
                    let dx = s[0] - center[0];
                    let dy = s[1] - center[1];
                    let g = low + (high - low) * (-(dx * dx + dy * dy) / (2.0 * sigma * sigma)).exp();
                    g.clamp(low, high)
                })
                .collect();
            (v, "gaussian2d")
        }
        FieldSpec::External { values } => {
            if values.len() != d {
                return Err(NmqaError::InvalidArgument(format!(
                    "external field has {} values for {d} sites",
                    values.len()
                )));
            }
            (values.clone(), "external")
        }
    };
    check_range("field value", &values)?;
    Ok(TrueField {
        values,
        kind: kind.into(),
    })
}
