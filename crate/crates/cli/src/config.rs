//! Study configuration file and its command-line overrides.

use std::path::{Path, PathBuf};

use clap::Args;
use serde::{Deserialize, Serialize};

use resilpce::design::{DesignMethod, DEFAULT_CANDIDATES};
use resilpce::grid::{parse_case, FragilityCurve, NetworkCase, WeatherEvent, CASE39};
use resilpce::harness::{GridStudy, Model, ModelSpec, StabilityStudyConfig};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StabilitySettings {
    pub methods: Vec<DesignMethod>,
    pub sample_sizes: Vec<usize>,
    pub replicates: usize,
    pub oracle_samples: usize,
}

impl Default for StabilitySettings {
    fn default() -> Self {
        let d = StabilityStudyConfig::new(ModelSpec::Grid);
        StabilitySettings { methods: d.methods, sample_sizes: d.sample_sizes, replicates: d.replicates, oracle_samples: d.oracle_samples }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StudyConfig {
    /// MATPOWER case file; the bundled 39-bus case when absent.
    pub case: Option<PathBuf>,
    pub fragility: Option<PathBuf>,
    pub weather: Option<PathBuf>,
    pub model: ModelSpec,
    /// Total degree; the model's default when absent.
    pub p: Option<usize>,
    pub q: f64,
    pub method: DesignMethod,
    /// Experiment size; ten per input when absent.
    pub n_samples: Option<usize>,
    pub n_candidates: usize,
    pub seed: u64,
    /// Apply the normal-consistency factor to the median absolute deviation.
    pub mad_scale: bool,
    pub output_dir: PathBuf,
    pub workers: Option<usize>,
    pub stability: StabilitySettings,
}

impl Default for StudyConfig {
    fn default() -> Self {
        StudyConfig {
            case: None,
            fragility: None,
            weather: None,
            model: ModelSpec::Grid,
            p: None,
            q: 1.0,
            method: DesignMethod::Mmlhs,
            n_samples: None,
            n_candidates: DEFAULT_CANDIDATES,
            seed: 0,
            mad_scale: true,
            output_dir: PathBuf::from("."),
            workers: None,
            stability: StabilitySettings::default(),
        }
    }
}

/// Flags shared by every command; each overrides the config file.
#[derive(Debug, Clone, Default, Args)]
pub struct Overrides {
    /// Study configuration JSON.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// MATPOWER case file.
    #[arg(long, global = true)]
    pub case: Option<PathBuf>,
    /// Fragility curve JSON.
    #[arg(long, global = true)]
    pub fragility: Option<PathBuf>,
    /// Weather event JSON.
    #[arg(long, global = true)]
    pub weather: Option<PathBuf>,
    /// Model: grid, ishigami, sparse_polynomial, or constant:<value>.
    #[arg(long, global = true, value_parser = parse_model)]
    pub model: Option<ModelSpec>,
    /// Total polynomial degree.
    #[arg(long, global = true, value_parser = clap::value_parser!(u64).range(0..=30))]
    pub p: Option<u64>,
    /// q-norm of the truncation, in (0, 1].
    #[arg(long, global = true)]
    pub q: Option<f64>,
    /// Master random seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Number of maximin candidates.
    #[arg(long, global = true, value_parser = clap::value_parser!(u64).range(1..))]
    pub n_candidates: Option<u64>,
    /// Directory for default output files.
    #[arg(long, global = true)]
    pub output_dir: Option<PathBuf>,
    /// Worker threads.
    #[arg(long, global = true, value_parser = clap::value_parser!(u64).range(1..))]
    pub workers: Option<u64>,
    /// Report the raw median absolute deviation without the normal-consistency factor.
    #[arg(long, global = true)]
    pub no_mad_scale: bool,
}

fn parse_model(s: &str) -> Result<ModelSpec, String> {
    match s {
        "grid" => Ok(ModelSpec::Grid),
        "ishigami" => Ok(ModelSpec::Ishigami { a: 7.0, b: 0.1 }),
        "sparse_polynomial" | "polynomial" => Ok(ModelSpec::SparsePolynomial),
        other => match other.strip_prefix("constant:").map(str::parse::<f64>) {
            Some(Ok(value)) if value.is_finite() => Ok(ModelSpec::Constant { value, dim: 2 }),
            _ => Err(format!("unknown model `{other}`")),
        },
    }
}

impl StudyConfig {
    /// Reads the config file (if any), resolves its relative paths against the
    /// file's directory, applies overrides and validates.
    pub fn load(o: &Overrides) -> CliResult<Self> {
        let mut cfg = match &o.config {
            Some(path) => {
                let text =
                    std::fs::read_to_string(path).map_err(|e| CliError::input(format!("cannot read config {}: {e}", path.display())))?;
                let mut cfg: StudyConfig =
                    serde_json::from_str(&text).map_err(|e| CliError::usage(format!("invalid config {}: {e}", path.display())))?;
                let base = path.parent().unwrap_or(Path::new(""));
                for p in [&mut cfg.case, &mut cfg.fragility, &mut cfg.weather].into_iter().flatten() {
                    if p.is_relative() {
                        *p = base.join(&*p);
                    }
                }
                if cfg.output_dir.is_relative() {
                    cfg.output_dir = base.join(&cfg.output_dir);
                }
                cfg
            }
            None => StudyConfig::default(),
        };
        if o.case.is_some() {
            cfg.case.clone_from(&o.case);
        }
        if o.fragility.is_some() {
            cfg.fragility.clone_from(&o.fragility);
        }
        if o.weather.is_some() {
            cfg.weather.clone_from(&o.weather);
        }
        if let Some(m) = &o.model {
            cfg.model = m.clone();
        }
        if let Some(p) = o.p {
            cfg.p = Some(p as usize);
        }
        if let Some(q) = o.q {
            cfg.q = q;
        }
        if let Some(s) = o.seed {
            cfg.seed = s;
        }
        if let Some(nc) = o.n_candidates {
            cfg.n_candidates = nc as usize;
        }
        if let Some(d) = &o.output_dir {
            cfg.output_dir.clone_from(d);
        }
        if let Some(w) = o.workers {
            cfg.workers = Some(w as usize);
        }
        if o.no_mad_scale {
            cfg.mad_scale = false;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> CliResult<()> {
        if !(self.q > 0.0 && self.q <= 1.0) {
            return Err(CliError::usage(format!("q must lie in (0, 1], got {}", self.q)));
        }
        if self.n_candidates == 0 {
            return Err(CliError::usage("n_candidates must be positive"));
        }
        if self.n_samples == Some(0) {
            return Err(CliError::usage("n_samples must be positive"));
        }
        if self.workers == Some(0) {
            return Err(CliError::usage("workers must be positive"));
        }
        for path in [&self.case, &self.fragility, &self.weather].into_iter().flatten() {
            if !path.is_file() {
                return Err(CliError::input(format!("file not found: {}", path.display())));
            }
        }
        Ok(())
    }

    pub fn degree(&self) -> usize {
        self.p.unwrap_or_else(|| self.model.default_degree())
    }

    pub fn network(&self) -> CliResult<NetworkCase> {
        match &self.case {
            Some(path) => {
                let text =
                    std::fs::read_to_string(path).map_err(|e| CliError::input(format!("cannot read case {}: {e}", path.display())))?;
                parse_case(&text).map_err(|e| CliError::from(e).context(path.display()))
            }
            None => Ok(parse_case(CASE39)?),
        }
    }

    pub fn grid_study(&self) -> CliResult<GridStudy> {
        let case = self.network()?;
        let fragility = match &self.fragility {
            Some(path) => read_json::<FragilityCurve>(path)?,
            None => FragilityCurve::default_windstorm(),
        };
        let weather = match &self.weather {
            Some(path) => read_json::<WeatherEvent>(path)?,
            None => WeatherEvent::default_windstorm(&case),
        };
        Ok(GridStudy::new(case, fragility, weather)?)
    }

    pub fn build_model(&self) -> CliResult<Box<dyn Model>> {
        match &self.model {
            ModelSpec::Grid => Ok(Box::new(self.grid_study()?)),
            other => Ok(other.build(|| unreachable!("grid handled above"))?),
        }
    }

    pub fn stability_config(&self) -> StabilityStudyConfig {
        StabilityStudyConfig {
            methods: self.stability.methods.clone(),
            sample_sizes: self.stability.sample_sizes.clone(),
            replicates: self.stability.replicates,
            model: self.model.clone(),
            seed: self.seed,
            p: Some(self.degree()),
            q: self.q,
            n_candidates: self.n_candidates,
            oracle_samples: self.stability.oracle_samples,
        }
    }
}

pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> CliResult<T> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::input(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::input(format!("{}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn model_flag() {
        assert_eq!(parse_model("grid").unwrap(), ModelSpec::Grid);
        assert_eq!(parse_model("constant:5").unwrap(), ModelSpec::Constant { value: 5.0, dim: 2 });
        assert!(parse_model("constant:x").is_err());
        assert!(parse_model("banana").is_err());
    }

    #[test]
    fn defaults_round_trip() {
        let cfg = StudyConfig::default();
        let text = serde_json::to_string(&cfg).unwrap();
        let back: StudyConfig = serde_json::from_str(&text).unwrap();
        assert_eq!(back, cfg);
        let partial: StudyConfig = serde_json::from_str(r#"{"model": {"kind": "ishigami"}, "p": 4}"#).unwrap();
        assert_eq!(partial.degree(), 4);
        assert!(serde_json::from_str::<StudyConfig>(r#"{"bogus": 1}"#).is_err());
    }
}
