use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::filter::{FilterConfig, FilterVariant, GainMode, LossParams, UtParams};
use crate::graph::TopologyModel;
use crate::noise::NoiseSpec;

/// Trial count used by `--paper-scale`.
pub const PAPER_SCALE_TRIALS: usize = 1000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GraphConfig {
    #[serde(flatten)]
    pub model: TopologyModel,
    pub seed: u64,
}

impl Default for GraphConfig {
    fn default() -> Self {
        Self {
            model: TopologyModel::default(),
            seed: 1,
        }
    }
}

/// A Monte Carlo scenario. Serialised as TOML; every field has a default.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// State dimension (graph vertices).
    pub n: usize,
    /// Horizon `D`.
    pub steps: usize,
    /// Monte Carlo trials `M`.
    pub trials: usize,
    pub seed: u64,
    /// Scalar of the benchmark measurement nonlinearity.
    pub phi: f64,
    /// Measurement-noise preset name.
    pub scenario: String,
    /// Overrides the preset when set.
    pub measurement_noise: Option<NoiseSpec>,
    pub filters: Vec<FilterVariant>,
    /// Variance of the Gaussian process noise, `Q = q·I`.
    pub process_variance: f64,
    /// Nominal measurement variance assumed by the filters, `R = r·I`.
    pub nominal_r: f64,
    /// Variance of the initial-estimate perturbation; also the initial covariance.
    pub init_variance: f64,
    /// Worker threads; 0 uses every available core.
    pub workers: usize,
    pub output: String,
    pub graph: GraphConfig,
    pub losses: LossParams,
    pub filter: FilterSettings,
}

/// Settings shared by every variant; graph, square-root and loss switches
/// come from the variant presets.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FilterSettings {
    pub gain_mode: GainMode,
    pub irls_threshold: f64,
    pub irls_max_iters: usize,
    pub ut: UtParams,
}

impl Default for FilterSettings {
    fn default() -> Self {
        let base = FilterConfig::default();
        Self {
            gain_mode: base.gain_mode,
            irls_threshold: base.irls_threshold,
            irls_max_iters: base.irls_max_iters,
            ut: base.ut,
        }
    }
}

impl FilterSettings {
    pub fn base(&self) -> FilterConfig {
        FilterConfig {
            gain_mode: self.gain_mode,
            irls_threshold: self.irls_threshold,
            irls_max_iters: self.irls_max_iters,
            ut: self.ut,
            ..FilterConfig::default()
        }
    }
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            n: 10,
            steps: 100,
            trials: 100,
            seed: 1,
            phi: 1.0,
            scenario: "caseB1".into(),
            measurement_noise: None,
            filters: FilterVariant::ALL.to_vec(),
            process_variance: 0.01,
            nominal_r: 10.0,
            init_variance: 4.0,
            workers: 0,
            output: "out".into(),
            graph: GraphConfig::default(),
            losses: LossParams::default(),
            filter: FilterSettings::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn measurement_noise(&self) -> Result<NoiseSpec> {
        match &self.measurement_noise {
            Some(spec) => Ok(spec.clone()),
            None => NoiseSpec::preset(&self.scenario),
        }
    }

    /// Resolved configuration of one variant.
    pub fn filter_config(&self, variant: FilterVariant) -> FilterConfig {
        variant.config(&self.filter.base(), &self.losses)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 || self.steps == 0 || self.trials == 0 {
            return Err(Error::Config(format!(
                "n >= 2, steps >= 1 and trials >= 1 required (got {}, {}, {})",
                self.n, self.steps, self.trials
            )));
        }
        if self.filters.is_empty() {
            return Err(Error::Config("no filters selected".into()));
        }
        if !(self.process_variance >= 0.0) || !(self.nominal_r > 0.0) || !(self.init_variance > 0.0)
        {
            return Err(Error::Config("variances must be positive".into()));
        }
        if !self.phi.is_finite() {
            return Err(Error::Config(format!(
                "phi must be finite, got {}",
                self.phi
            )));
        }
        self.measurement_noise()?.validate()?;
        for v in &self.filters {
            self.filter_config(*v).validate()?;
        }
        Ok(())
    }
}
