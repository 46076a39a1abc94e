//! Run configuration read from a sectioned TOML file.
//!
//! ```toml
//! [io]
//! out = "results"
//! data = "visits.csv"       # or a [simulation] section, never both
//! truth = "truth.csv"
//!
//! [model]
//! k = 2
//! covariance_design = "regression"
//! schema = "simulation"     # or "aids", or explicit column roles below
//!
//! [sampler]
//! iterations = 5000
//! burn_in = 2000
//! ```

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use jlcm_core::mcmc::{PriorConfig, RelabelPolicy, SamplerConfig};
use jlcm_core::parallel::Execution;
use jlcm_core::schema::SchemaConfig;
use jlcm_core::simulate::{scenario_defaults, Censoring, SimulationScenario};
use serde::Deserialize;

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum CovarianceDesignKind {
    Regression,
    InterceptOnly,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IoSection {
    pub out: Option<PathBuf>,
    pub data: Option<PathBuf>,
    pub truth: Option<PathBuf>,
    /// Directory holding a fitted model, used by `predict`.
    pub fit: Option<PathBuf>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimulationSection {
    pub subjects: usize,
    pub max_visits: usize,
    pub spacing: f64,
    pub first_visit: f64,
    /// End of study; zero or negative disables it.
    pub administrative_censoring: f64,
    /// Bounds of uniform censoring; equal zeros disable it.
    pub uniform_censoring: [f64; 2],
    /// 1-based class forced at every visit.
    pub fixed_class: Option<usize>,
    pub seed: u64,
    /// Independent datasets generated by `evaluate`.
    pub replicates: usize,
}

impl Default for SimulationSection {
    fn default() -> Self {
        let d = scenario_defaults();
        Self {
            subjects: d.subjects,
            max_visits: d.max_visits,
            spacing: d.spacing,
            first_visit: d.first_visit,
            administrative_censoring: d.censoring.administrative.unwrap_or(0.0),
            uniform_censoring: d.censoring.uniform.map_or([0.0, 0.0], |(a, b)| [a, b]),
            fixed_class: None,
            seed: d.seed,
            replicates: 1,
        }
    }
}

impl SimulationSection {
    pub fn scenario(&self, replicate: usize) -> CliResult<SimulationScenario> {
        let fixed_class = match self.fixed_class {
            Some(0) => return Err(CliError::Config("simulation.fixed_class is 1-based".into())),
            Some(k) => Some(k - 1),
            None => None,
        };
        let [lo, hi] = self.uniform_censoring;
        let s = SimulationScenario {
            subjects: self.subjects,
            max_visits: self.max_visits,
            spacing: self.spacing,
            first_visit: self.first_visit,
            censoring: Censoring {
                administrative: (self.administrative_censoring > 0.0).then_some(self.administrative_censoring),
                uniform: (lo != 0.0 || hi != 0.0).then_some((lo, hi)),
            },
            fixed_class,
            seed: self.seed.wrapping_add(replicate as u64),
            ..scenario_defaults()
        };
        s.validate()?;
        Ok(s)
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelSection {
    pub k: usize,
    pub k_min: usize,
    pub k_max: usize,
    pub covariance_design: CovarianceDesignKind,
    /// Named column layout: `"simulation"` or `"aids"`.
    pub schema: Option<String>,
    pub id: Option<String>,
    pub time: Option<String>,
    pub event: Option<String>,
    pub response: Option<String>,
    pub obstime: Option<String>,
    pub membership: Option<Vec<String>>,
    pub fixed: Option<Vec<String>>,
    pub random: Option<Vec<String>>,
    pub hazard: Option<Vec<String>>,
    pub covariance: Option<Vec<String>>,
    pub covariance_b: Option<Vec<String>>,
}

impl Default for ModelSection {
    fn default() -> Self {
        Self {
            k: 2,
            k_min: 1,
            k_max: 3,
            covariance_design: CovarianceDesignKind::Regression,
            schema: None,
            id: None,
            time: None,
            event: None,
            response: None,
            obstime: None,
            membership: None,
            fixed: None,
            random: None,
            hazard: None,
            covariance: None,
            covariance_b: None,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PriorSection {
    pub beta_mean: Option<Vec<f64>>,
    pub beta_variance: f64,
    pub lambda_shape: f64,
    pub lambda_rate: f64,
    pub tau_shape: f64,
    pub tau_rate: f64,
    pub theta_variance: f64,
}

impl Default for PriorSection {
    fn default() -> Self {
        let p = PriorConfig::default();
        Self {
            beta_mean: p.beta_mean,
            beta_variance: p.beta_variance,
            lambda_shape: p.lambda_shape,
            lambda_rate: p.lambda_rate,
            tau_shape: p.tau_shape,
            tau_rate: p.tau_rate,
            theta_variance: p.theta_variance,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RelabelKind {
    None,
    FirstFixedEffect,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExecutionKind {
    Parallel,
    Sequential,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SamplerSection {
    pub iterations: usize,
    pub burn_in: usize,
    pub thin: usize,
    pub seed: u64,
    pub adaptive_scale: f64,
    pub safety_weight: f64,
    pub initial_scale: f64,
    pub init_restarts: usize,
    pub relabel: RelabelKind,
    pub execution: ExecutionKind,
}

impl Default for SamplerSection {
    fn default() -> Self {
        let s = SamplerConfig::default();
        Self {
            iterations: s.iterations,
            burn_in: s.burn_in,
            thin: s.thin,
            seed: s.seed,
            adaptive_scale: s.adaptive_scale,
            safety_weight: s.safety_weight,
            initial_scale: s.initial_scale,
            init_restarts: s.init_restarts,
            relabel: RelabelKind::FirstFixedEffect,
            execution: ExecutionKind::Parallel,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PredictionSection {
    pub landmark: f64,
    pub horizons: Vec<f64>,
    /// Prediction window scored by `evaluate`.
    pub horizon: f64,
    /// Points on the time grid of `plot_data.csv`.
    pub grid_points: usize,
}

impl Default for PredictionSection {
    fn default() -> Self {
        Self {
            landmark: 0.5,
            horizons: vec![0.0, 0.1, 0.2, 0.3, 0.4, 0.5],
            horizon: 0.3,
            grid_points: 25,
        }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub io: IoSection,
    pub simulation: Option<SimulationSection>,
    #[serde(default)]
    pub model: ModelSection,
    #[serde(default)]
    pub factors: BTreeMap<String, Vec<String>>,
    #[serde(default)]
    pub priors: PriorSection,
    #[serde(default)]
    pub sampler: SamplerSection,
    #[serde(default)]
    pub prediction: PredictionSection,
}

/// Where the data of a run come from.
pub enum DataSource<'a> {
    File(&'a Path),
    Simulated(&'a SimulationSection),
}

impl RunConfig {
    pub fn from_toml(text: &str) -> CliResult<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| CliError::Config(e.message().to_string()))?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    /// The default scenario, used when no file is given.
    pub fn simulated_default() -> Self {
        Self {
            simulation: Some(SimulationSection::default()),
            ..Self::default()
        }
    }

    pub fn source(&self) -> CliResult<DataSource<'_>> {
        match (&self.io.data, &self.simulation) {
            (Some(p), None) => Ok(DataSource::File(p)),
            (None, Some(s)) => Ok(DataSource::Simulated(s)),
            (Some(_), Some(_)) => Err(CliError::Config(
                "give either io.data or a [simulation] section, not both".into(),
            )),
            (None, None) => Err(CliError::Config("no data source: set io.data or add a [simulation] section".into())),
        }
    }

    pub fn out_dir(&self) -> PathBuf {
        self.io.out.clone().unwrap_or_else(|| PathBuf::from("jlcm-out"))
    }

    pub fn schema(&self) -> CliResult<SchemaConfig> {
        let m = &self.model;
        let mut schema = match m.schema.as_deref() {
            None | Some("simulation") => SchemaConfig::simulation(),
            Some("aids") => SchemaConfig::aids(),
            Some(other) => return Err(CliError::Config(format!("unknown schema `{other}`"))),
        };
        let set = |slot: &mut String, v: &Option<String>| {
            if let Some(v) = v {
                slot.clone_from(v);
            }
        };
        set(&mut schema.id, &m.id);
        set(&mut schema.time, &m.time);
        set(&mut schema.event, &m.event);
        set(&mut schema.response, &m.response);
        set(&mut schema.obstime, &m.obstime);
        let set_list = |slot: &mut Vec<String>, v: &Option<Vec<String>>| {
            if let Some(v) = v {
                slot.clone_from(v);
            }
        };
        set_list(&mut schema.membership, &m.membership);
        set_list(&mut schema.fixed, &m.fixed);
        set_list(&mut schema.random, &m.random);
        set_list(&mut schema.hazard, &m.hazard);
        set_list(&mut schema.covariance, &m.covariance);
        if m.covariance_b.is_some() {
            schema.covariance_b.clone_from(&m.covariance_b);
        }
        schema.factors.extend(self.factors.clone());
        Ok(schema)
    }

    pub fn priors(&self) -> CliResult<PriorConfig> {
        let p = &self.priors;
        let priors = PriorConfig {
            beta_mean: p.beta_mean.clone(),
            beta_covariance: None,
            beta_variance: p.beta_variance,
            lambda_shape: p.lambda_shape,
            lambda_rate: p.lambda_rate,
            tau_shape: p.tau_shape,
            tau_rate: p.tau_rate,
            theta_variance: p.theta_variance,
        };
        priors.validate()?;
        Ok(priors)
    }

    pub fn sampler(&self) -> CliResult<SamplerConfig> {
        let s = &self.sampler;
        let config = SamplerConfig {
            iterations: s.iterations,
            burn_in: s.burn_in,
            thin: s.thin,
            seed: s.seed,
            adaptive_scale: s.adaptive_scale,
            safety_weight: s.safety_weight,
            initial_scale: s.initial_scale,
            init_restarts: s.init_restarts,
            relabel: match s.relabel {
                RelabelKind::None => RelabelPolicy::None,
                RelabelKind::FirstFixedEffect => RelabelPolicy::FirstFixedEffect,
            },
            execution: match s.execution {
                ExecutionKind::Parallel => Execution::Parallel,
                ExecutionKind::Sequential => Execution::Sequential,
            },
            ..SamplerConfig::default()
        };
        config.validate()?;
        Ok(config)
    }

    pub fn k_range(&self) -> CliResult<Vec<usize>> {
        let (a, b) = (self.model.k_min, self.model.k_max);
        if a == 0 || b < a {
            return Err(CliError::Config(format!("class range {a}..{b} is empty or starts at 0")));
        }
        Ok((a..=b).collect())
    }
}
