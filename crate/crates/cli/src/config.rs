//! Declarative experiment manifests: a TOML file plus `--set`/flag overrides
//! fully determines every run, and the effective manifest is embedded in all
//! output files.

use std::f64::consts::PI;
use std::fmt;
use std::path::{Path, PathBuf};

use nmqa::lattice::{FieldSpec, Region};
use serde::{Deserialize, Serialize};

/// All configuration problems found in one validation pass, each tagged
/// with the offending key.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError {
    pub problems: Vec<String>,
}

impl ConfigError {
    pub fn new(problem: impl Into<String>) -> Self {
        ConfigError { problems: vec![problem.into()] }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "invalid configuration:")?;
        for p in &self.problems {
            writeln!(f, "  - {p}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ConfigError {}

/// Rectangular qubit array geometry.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    pub rows: usize,
    pub cols: usize,
    pub spacing: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig { rows: 5, cols: 5, spacing: 1.0 }
    }
}

/// Synthetic true-field shape plus its two phase levels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FieldConfig {
    /// One of `square2d`, `step1d`, `gaussian2d`, `external`.
    pub kind: String,
    pub low: f64,
    pub high: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub region: Option<Region>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub split: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub center: Option<[f64; 2]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<f64>>,
}

impl Default for FieldConfig {
    fn default() -> Self {
        FieldConfig {
            kind: "square2d".into(),
            low: 0.25 * PI,
            high: 0.75 * PI,
            region: Some(Region { row_lo: 1, row_hi: 3, col_lo: 1, col_hi: 3 }),
            split: None,
            center: None,
            sigma: None,
            values: None,
        }
    }
}

impl FieldConfig {
    /// Assemble the field shape, reporting missing kind-specific keys.
    pub fn spec(&self) -> Result<FieldSpec, ConfigError> {
        match self.kind.as_str() {
            "square2d" => self
                .region
                .map(|region| FieldSpec::Square2d { region })
                .ok_or_else(|| ConfigError::new("field.region: required for kind = square2d")),
            "step1d" => self
                .split
                .map(|split| FieldSpec::Step1d { split })
                .ok_or_else(|| ConfigError::new("field.split: required for kind = step1d")),
            "gaussian2d" => match (self.center, self.sigma) {
                (Some(center), Some(sigma)) => Ok(FieldSpec::Gaussian2d { center, sigma }),
                _ => Err(ConfigError::new(
                    "field.center and field.sigma: required for kind = gaussian2d",
                )),
            },
            "external" => self
                .values
                .clone()
                .map(|values| FieldSpec::External { values })
                .ok_or_else(|| ConfigError::new("field.values: required for kind = external")),
            other => Err(ConfigError::new(format!(
                "field.kind: unknown kind {other:?} (expected square2d, step1d, gaussian2d, or external)"
            ))),
        }
    }
}

/// One experiment manifest. Scalar keys come first so the TOML snapshot
/// serializes cleanly; `grid` and `field` are sub-tables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Measurement budgets to sweep.
    pub t_list: Vec<usize>,
    pub trials: usize,
    pub n_alpha: usize,
    pub n_beta: usize,
    pub lambda1: f64,
    pub lambda2: f64,
    /// Variance of the measurement noise on the Bernoulli parameter.
    pub sigma_v: f64,
    /// Mean of the map-approximation error (radians).
    pub mu_f: f64,
    /// Variance of the map-approximation error (radians^2).
    pub sigma_f: f64,
    /// Neighborhood radius multiplier.
    pub k0: f64,
    /// Length-scale prior lower bound; defaults to the grid spacing.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r_min: Option<f64>,
    /// Length-scale prior upper bound; defaults to the grid diameter.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r_max: Option<f64>,
    pub master_seed: u64,
    pub output_dir: PathBuf,
    /// Recorded-shot CSV consumed by `replay` instead of a synthetic field.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub databank: Option<PathBuf>,
    pub grid: GridConfig,
    pub field: FieldConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            t_list: vec![5, 10, 15, 20, 25, 50, 75, 100, 125, 250],
            trials: 50,
            n_alpha: 100,
            n_beta: 25,
            lambda1: 0.89,
            lambda2: 0.97,
            sigma_v: 1e-4,
            mu_f: 0.0,
            sigma_f: 1e-6,
            k0: 1.0,
            r_min: None,
            r_max: None,
            master_seed: 7,
            output_dir: PathBuf::from("out"),
            databank: None,
            grid: GridConfig::default(),
            field: FieldConfig::default(),
        }
    }
}

impl RunConfig {
    /// Parse a manifest file; unknown keys and type mismatches are config
    /// errors, a missing file is an I/O error.
    pub fn from_file(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| nmqa::NmqaError::Io(std::io::Error::new(
                e.kind(),
                format!("reading config {}: {e}", path.display()),
            )))?;
        let cfg: RunConfig = toml::from_str(&text)
            .map_err(|e| ConfigError::new(format!("config parse ({}): {e}", path.display())))?;
        Ok(cfg)
    }

    /// Set one scalar key from its string form, as given to `--set KEY=VALUE`.
    pub fn apply_override(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, ConfigError>
        where
            T::Err: fmt::Display,
        {
            value
                .parse()
                .map_err(|e| ConfigError::new(format!("{key}: cannot parse {value:?}: {e}")))
        }
        fn parse_opt(key: &str, value: &str) -> Result<Option<f64>, ConfigError> {
            if value == "auto" {
                Ok(None)
            } else {
                parse::<f64>(key, value).map(Some)
            }
        }
        match key {
            "t_list" => {
                self.t_list = value
                    .split(',')
                    .map(|tok| parse::<usize>(key, tok.trim()))
                    .collect::<Result<_, _>>()?;
            }
            "trials" => self.trials = parse(key, value)?,
            "n_alpha" => self.n_alpha = parse(key, value)?,
            "n_beta" => self.n_beta = parse(key, value)?,
            "lambda1" => self.lambda1 = parse(key, value)?,
            "lambda2" => self.lambda2 = parse(key, value)?,
            "sigma_v" => self.sigma_v = parse(key, value)?,
            "mu_f" => self.mu_f = parse(key, value)?,
            "sigma_f" => self.sigma_f = parse(key, value)?,
            "k0" => self.k0 = parse(key, value)?,
            "r_min" => self.r_min = parse_opt(key, value)?,
            "r_max" => self.r_max = parse_opt(key, value)?,
            "master_seed" => self.master_seed = parse(key, value)?,
            "output_dir" => self.output_dir = PathBuf::from(value),
            "databank" => self.databank = Some(PathBuf::from(value)),
            "grid.rows" => self.grid.rows = parse(key, value)?,
            "grid.cols" => self.grid.cols = parse(key, value)?,
            "grid.spacing" => self.grid.spacing = parse(key, value)?,
            "field.kind" => self.field.kind = value.to_string(),
            "field.low" => self.field.low = parse(key, value)?,
            "field.high" => self.field.high = parse(key, value)?,
            "field.split" => self.field.split = Some(parse(key, value)?),
            other => {
                return Err(ConfigError::new(format!(
                    "{other}: unknown override key (field shapes beyond kind/low/high/split \
                     must be set in the config file)"
                )))
            }
        }
        Ok(())
    }

    /// Check every key, collecting all problems rather than stopping at the
    /// first.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let mut problems = Vec::new();
        if self.grid.rows == 0 {
            problems.push("grid.rows: must be at least 1".into());
        }
        if self.grid.cols == 0 {
            problems.push("grid.cols: must be at least 1".into());
        }
        if !(self.grid.spacing > 0.0 && self.grid.spacing.is_finite()) {
            problems.push(format!(
                "grid.spacing: must be positive and finite, got {}",
                self.grid.spacing
            ));
        }
        if self.t_list.is_empty() {
            problems.push("t_list: must contain at least one budget".into());
        }
        if self.t_list.iter().any(|&t| t == 0) {
            problems.push("t_list: every budget must be at least 1".into());
        }
        if self.trials == 0 {
            problems.push("trials: must be at least 1".into());
        }
        if self.n_alpha == 0 {
            problems.push("n_alpha: must be at least 1".into());
        }
        if self.n_beta == 0 {
            problems.push("n_beta: must be at least 1".into());
        }
        for (key, l) in [("lambda1", self.lambda1), ("lambda2", self.lambda2)] {
            if !(0.0..=1.0).contains(&l) {
                problems.push(format!("{key}: {l} outside [0, 1]"));
            }
        }
        if !(self.sigma_v > 0.0 && self.sigma_v < 1.0) {
            problems.push(format!("sigma_v: must lie in (0, 1), got {}", self.sigma_v));
        }
        if !self.mu_f.is_finite() {
            problems.push(format!("mu_f: must be finite, got {}", self.mu_f));
        }
        if !(self.sigma_f > 0.0 && self.sigma_f.is_finite()) {
            problems.push(format!("sigma_f: must be positive and finite, got {}", self.sigma_f));
        }
        if !(self.k0 >= 1.0 && self.k0.is_finite()) {
            problems.push(format!("k0: must be at least 1, got {}", self.k0));
        }
        if let Some(r) = self.r_min {
            if !(r > 0.0 && r.is_finite()) {
                problems.push(format!("r_min: must be positive and finite, got {r}"));
            }
        }
        if let (Some(lo), Some(hi)) = (self.r_min, self.r_max) {
            if hi < lo {
                problems.push(format!("r_max: {hi} smaller than r_min = {lo}"));
            }
        }
        if let Some(r) = self.r_max {
            if !(r > 0.0 && r.is_finite()) {
                problems.push(format!("r_max: must be positive and finite, got {r}"));
            }
        }
        if !(0.0 <= self.field.low && self.field.low <= self.field.high && self.field.high <= PI) {
            problems.push(format!(
                "field.low/field.high: need 0 <= low <= high <= pi, got low={} high={}",
                self.field.low, self.field.high
            ));
        }
        match self.field.spec() {
            Err(e) => problems.extend(e.problems),
            Ok(FieldSpec::Square2d { region }) => {
                if region.row_hi >= self.grid.rows || region.col_hi >= self.grid.cols {
                    problems.push(format!(
                        "field.region: {region:?} exceeds the {}x{} grid",
                        self.grid.rows, self.grid.cols
                    ));
                }
            }
            Ok(FieldSpec::External { values }) => {
                if values.len() != self.grid.rows * self.grid.cols {
                    problems.push(format!(
                        "field.values: {} values for a {}-site grid",
                        values.len(),
                        self.grid.rows * self.grid.cols
                    ));
                }
            }
            Ok(_) => {}
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(ConfigError { problems })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate_and_roundtrip_through_toml() {
        let cfg = RunConfig::default();
        cfg.validate().unwrap();
        let text = toml::to_string_pretty(&cfg).unwrap();
        let back: RunConfig = toml::from_str(&text).unwrap();
        assert_eq!(cfg, back);
    }

    #[test]
    fn empty_manifest_means_all_defaults() {
        let cfg: RunConfig = toml::from_str("").unwrap();
        assert_eq!(cfg, RunConfig::default());
    }

    #[test]
    fn partial_manifest_keeps_remaining_defaults() {
        let cfg: RunConfig = toml::from_str(
            "trials = 3\nt_list = [2, 4]\n[grid]\nrows = 2\ncols = 3\n",
        )
        .unwrap();
        assert_eq!(cfg.trials, 3);
        assert_eq!(cfg.t_list, vec![2, 4]);
        assert_eq!(cfg.grid.rows, 2);
        assert_eq!(cfg.grid.cols, 3);
        assert_eq!(cfg.grid.spacing, 1.0);
        assert_eq!(cfg.lambda1, 0.89);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = toml::from_str::<RunConfig>("lambda3 = 0.5\n").unwrap_err();
        assert!(err.to_string().contains("lambda3"), "{err}");
    }

    #[test]
    fn overrides_parse_and_win() {
        let mut cfg = RunConfig::default();
        cfg.apply_override("lambda1", "0.5").unwrap();
        cfg.apply_override("t_list", "3, 6,9").unwrap();
        cfg.apply_override("grid.rows", "2").unwrap();
        cfg.apply_override("r_max", "auto").unwrap();
        cfg.apply_override("field.kind", "step1d").unwrap();
        cfg.apply_override("field.split", "1").unwrap();
        assert_eq!(cfg.lambda1, 0.5);
        assert_eq!(cfg.t_list, vec![3, 6, 9]);
        assert_eq!(cfg.grid.rows, 2);
        assert_eq!(cfg.r_max, None);
        assert!(matches!(cfg.field.spec().unwrap(), FieldSpec::Step1d { split: 1 }));
    }

    #[test]
    fn bad_overrides_name_the_key() {
        let mut cfg = RunConfig::default();
        let e = cfg.apply_override("lambda1", "huge").unwrap_err();
        assert!(e.problems[0].starts_with("lambda1:"), "{e}");
        let e = cfg.apply_override("nonsense", "3").unwrap_err();
        assert!(e.problems[0].starts_with("nonsense:"), "{e}");
    }

    #[test]
    fn validation_collects_every_problem_with_its_key() {
        let mut cfg = RunConfig::default();
        cfg.trials = 0;
        cfg.lambda2 = 2.0;
        cfg.sigma_v = 0.0;
        cfg.grid.spacing = -1.0;
        let err = cfg.validate().unwrap_err();
        let text = err.to_string();
        for key in ["trials:", "lambda2:", "sigma_v:", "grid.spacing:"] {
            assert!(text.contains(key), "missing {key} in {text}");
        }
        assert_eq!(err.problems.len(), 4);
    }

    #[test]
    fn field_kind_mismatches_are_reported() {
        let mut cfg = RunConfig::default();
        cfg.field.kind = "step1d".into();
        let err = cfg.validate().unwrap_err();
        assert!(err.to_string().contains("field.split"), "{err}");
        cfg.field.kind = "blob".into();
        let err = cfg.validate().unwrap_err();
        assert!(err.to_string().contains("field.kind"), "{err}");
    }

    #[test]
    fn oversized_region_is_rejected() {
        let mut cfg = RunConfig::default();
        cfg.grid.rows = 3;
        let err = cfg.validate().unwrap_err();
        assert!(err.to_string().contains("field.region"), "{err}");
    }
}
