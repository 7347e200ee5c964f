//! TOML run configuration and its conversion into core types.

use crate::CliError;
use num_complex::Complex64;
use rwrs_core::lab::{ExperimentConfig, Normalization};
use rwrs_core::scenery::{IidLaw, IntMatrix, MovingAverage, SceneryModel, ToralAction, ToralModel, TrigPolynomial, DEFAULT_MODULUS};
use rwrs_core::{Site, StepDistribution};
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    #[serde(default)]
    pub seed: Option<u64>,
    pub walk: WalkConfig,
    #[serde(default)]
    pub scenery: Option<SceneryConfig>,
    #[serde(default)]
    pub lln: Option<LlnConfig>,
    #[serde(default)]
    pub fclt: Option<FcltConfig>,
    #[serde(default)]
    pub variance: Option<VarianceConfig>,
    #[serde(default)]
    pub cumulants: Option<CumulantsConfig>,
    #[serde(default)]
    pub maximal: Option<MaximalConfig>,
    #[serde(default)]
    pub toral_verify: Option<ToralVerifyConfig>,
    #[serde(default)]
    pub estimate_c0: Option<EstimateC0Config>,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WalkConfig {
    /// Step vectors as [x, y].
    pub steps: Vec<[i32; 2]>,
    /// Exact probabilities "num/den", one per step; uniform if omitted.
    #[serde(default)]
    pub probabilities: Option<Vec<String>>,
    /// Overrides the closed-form C0; required for walks that are not
    /// strongly aperiodic (e.g. the simple symmetric walk, C0 = 2/pi).
    #[serde(default)]
    pub c0: Option<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneryConfig {
    pub kind: SceneryKind,
    /// rademacher | uniform | gaussian | two_point (iid and moving_average).
    #[serde(default)]
    pub law: Option<String>,
    #[serde(default)]
    pub variance: Option<f64>,
    /// Mass of the positive atom for `two_point`.
    #[serde(default)]
    pub p: Option<f64>,
    #[serde(default)]
    pub coefficients: Option<Vec<Coefficient>>,
    #[serde(default)]
    pub a1: Option<Vec<Vec<i64>>>,
    #[serde(default)]
    pub a2: Option<Vec<Vec<i64>>>,
    #[serde(default)]
    pub modulus: Option<u64>,
    #[serde(default)]
    pub terms: Option<Vec<FourierTerm>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SceneryKind {
    Iid,
    MovingAverage,
    Toral,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Coefficient {
    pub site: [i32; 2],
    pub a: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FourierTerm {
    pub k: Vec<i64>,
    pub re: f64,
    #[serde(default)]
    pub im: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LlnConfig {
    pub n_grid: Vec<usize>,
    pub paths: usize,
    #[serde(default = "half")]
    pub epsilon: f64,
    /// Kernel Fourier ratios V(p)/V(0) reported at the last n.
    #[serde(default)]
    pub kernel_lags: Vec<[i32; 2]>,
}

fn half() -> f64 {
    0.5
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FcltConfig {
    pub n: usize,
    pub grid: Vec<f64>,
    pub replicates: usize,
    pub omega_replicates: usize,
    #[serde(default)]
    pub normalization: NormalizationConfig,
    /// Split point A in (0,1) for the cross-term diagnostic.
    #[serde(default)]
    pub cross_term_a: Option<f64>,
    #[serde(default)]
    pub cross_term_max: Option<f64>,
}

#[derive(Clone, Copy, Debug, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormalizationConfig {
    #[default]
    Asymptotic,
    Exact,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VarianceConfig {
    pub n: usize,
    pub replicates: usize,
    pub omega_replicates: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CumulantsConfig {
    pub n_grid: Vec<usize>,
    pub paths: usize,
    #[serde(default = "four")]
    pub order: usize,
}

fn four() -> usize {
    4
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaximalConfig {
    pub n: usize,
    pub replicates: usize,
    pub omega_replicates: usize,
    #[serde(default = "three")]
    pub lambda: f64,
    /// [b, k]: the Moricz check runs on [b, b + k); whole path if omitted.
    #[serde(default)]
    pub interval: Option<[usize; 2]>,
}

fn three() -> f64 {
    3.0
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToralVerifyConfig {
    #[serde(default = "twelve")]
    pub window: u32,
    #[serde(default = "five")]
    pub correlation_radius: u32,
    #[serde(default = "samples")]
    pub samples: usize,
}

fn twelve() -> u32 {
    12
}
fn five() -> u32 {
    5
}
fn samples() -> usize {
    20_000
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimateC0Config {
    pub n_grid: Vec<usize>,
    pub paths_per_n: usize,
}

fn invalid(msg: impl Into<String>) -> CliError {
    CliError::Validation(msg.into())
}

impl Config {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| invalid(format!("config: {e}")))
    }

    pub fn walk(&self) -> Result<StepDistribution, CliError> {
        let w = &self.walk;
        if w.steps.is_empty() {
            return Err(invalid("walk.steps is empty"));
        }
        let steps: Vec<Site> = w.steps.iter().map(|&[x, y]| Site::new(x, y)).collect();
        match &w.probabilities {
            None => Ok(StepDistribution::uniform(&steps)),
            Some(p) if p.len() != steps.len() => Err(invalid(format!(
                "walk.probabilities has {} entries for {} steps",
                p.len(),
                steps.len()
            ))),
            Some(p) => {
                let atoms: Vec<(Site, &str)> = steps.iter().copied().zip(p.iter().map(String::as_str)).collect();
                Ok(StepDistribution::parse(&atoms)?)
            }
        }
    }

    pub fn scenery(&self) -> Result<SceneryModel, CliError> {
        let s = self.scenery.as_ref().ok_or_else(|| invalid("missing [scenery] table"))?;
        Ok(match s.kind {
            SceneryKind::Iid => SceneryModel::Iid(s.law()?),
            SceneryKind::MovingAverage => {
                let coeffs = s
                    .coefficients
                    .as_ref()
                    .ok_or_else(|| invalid("moving_average scenery needs coefficients"))?;
                SceneryModel::MovingAverage(MovingAverage::new(
                    coeffs.iter().map(|c| (Site::new(c.site[0], c.site[1]), c.a)),
                    s.law()?,
                )?)
            }
            SceneryKind::Toral => {
                let action = s.action()?;
                let terms = s.terms.as_ref().ok_or_else(|| invalid("toral scenery needs terms"))?;
                let f = TrigPolynomial::new(
                    action.rho(),
                    terms.iter().map(|t| (t.k.clone(), Complex64::new(t.re, t.im))),
                )?;
                SceneryModel::Toral(ToralModel::new(action, f, s.modulus.unwrap_or(DEFAULT_MODULUS))?)
            }
        })
    }

    pub fn matrices(&self) -> Result<(IntMatrix, IntMatrix), CliError> {
        match &self.scenery {
            Some(s) if s.kind == SceneryKind::Toral => s.matrices(),
            _ => Err(invalid("toral-verify needs a toral [scenery]")),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }

    /// Experiment settings shared by the Monte Carlo subcommands.
    pub fn experiment(&self, n: usize, replicates: usize, omega_replicates: usize) -> Result<ExperimentConfig, CliError> {
        let mut cfg = ExperimentConfig::new(self.walk()?, self.scenery()?, n);
        cfg.replicates = replicates;
        cfg.omega_replicates = omega_replicates;
        cfg.master_seed = self.seed();
        cfg.c0 = self.walk.c0;
        Ok(cfg)
    }
}

impl SceneryConfig {
    fn law(&self) -> Result<IidLaw, CliError> {
        let variance = self.variance.unwrap_or(1.0);
        let name = self.law.as_deref().ok_or_else(|| invalid("scenery needs a law"))?;
        let law = match name {
            "rademacher" => IidLaw::Rademacher { variance },
            "uniform" => IidLaw::Uniform { variance },
            "gaussian" => IidLaw::Gaussian { variance },
            "two_point" => IidLaw::TwoPoint {
                p: self.p.ok_or_else(|| invalid("two_point law needs p"))?,
                variance,
            },
            other => return Err(invalid(format!("unknown law {other:?}"))),
        };
        law.validate()?;
        Ok(law)
    }

    fn matrices(&self) -> Result<(IntMatrix, IntMatrix), CliError> {
        match (&self.a1, &self.a2) {
            (Some(a1), Some(a2)) => Ok((IntMatrix::from_rows(a1)?, IntMatrix::from_rows(a2)?)),
            _ => Err(invalid("toral scenery needs a1 and a2")),
        }
    }

    fn action(&self) -> Result<ToralAction, CliError> {
        let (a1, a2) = self.matrices()?;
        Ok(ToralAction::new(a1, a2)?)
    }
}

impl From<NormalizationConfig> for Normalization {
    fn from(n: NormalizationConfig) -> Self {
        match n {
            NormalizationConfig::Asymptotic => Normalization::Asymptotic,
            NormalizationConfig::Exact => Normalization::Exact,
        }
    }
}
