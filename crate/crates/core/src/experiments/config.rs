use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::euler::SolverConfig;
use crate::initial_data::{BubbleLadder, FrameOptions, LadderConfig, ModelParams};
use crate::nls::NlsConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
#[clap(rename_all = "snake_case")]
pub enum ExperimentKind {
    ModulatedScaling,
    NormInflation,
    ZeroSpeed,
    BubbleNorms,
    BesovVsFourier,
    CommutatorSweep,
    Theorem0Preset,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::ModulatedScaling => "modulated_scaling",
            Self::NormInflation => "norm_inflation",
            Self::ZeroSpeed => "zero_speed",
            Self::BubbleNorms => "bubble_norms",
            Self::BesovVsFourier => "besov_vs_fourier",
            Self::CommutatorSweep => "commutator_sweep",
            Self::Theorem0Preset => "theorem0_preset",
        }
    }

    pub fn all() -> [ExperimentKind; 7] {
        [
            Self::ModulatedScaling,
            Self::NormInflation,
            Self::ZeroSpeed,
            Self::BubbleNorms,
            Self::BesovVsFourier,
            Self::CommutatorSweep,
            Self::Theorem0Preset,
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FromLadder {
    Ladder,
}

/// Either explicit values or the keyword `"ladder"`, which takes `ε_k` along the rungs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum EpsilonList {
    Explicit(Vec<f64>),
    Derived(FromLadder),
}

impl Default for EpsilonList {
    fn default() -> Self {
        EpsilonList::Explicit(vec![0.2, 0.1, 0.05, 0.025])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    /// Points per axis; chosen from the smallest ε when absent.
    #[serde(default)]
    pub n: Option<usize>,
    pub length: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ZeroSpeedSpec {
    /// Support threshold on `|A|` and `|V|`.
    #[serde(default = "zs_threshold")]
    pub threshold: f64,
    /// Allowed support growth in grid cells.
    #[serde(default = "zs_cells")]
    pub max_growth_cells: f64,
    /// Distance between the two copies of the superposition check.
    #[serde(default = "zs_separation")]
    pub separation: f64,
    /// Amplitude of the second copy relative to the first.
    #[serde(default = "zs_ratio")]
    pub second_amplitude: f64,
    #[serde(default = "zs_defect")]
    pub max_defect: f64,
}

fn zs_threshold() -> f64 {
    1e-8
}
fn zs_cells() -> f64 {
    2.0
}
fn zs_separation() -> f64 {
    6.0
}
fn zs_ratio() -> f64 {
    1.2
}
fn zs_defect() -> f64 {
    1e-6
}

impl Default for ZeroSpeedSpec {
    fn default() -> Self {
        Self {
            threshold: zs_threshold(),
            max_growth_cells: zs_cells(),
            separation: zs_separation(),
            second_amplitude: zs_ratio(),
            max_defect: zs_defect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BubbleNormSpec {
    /// Frames in which every rung is measured; all rungs when empty.
    #[serde(default)]
    pub frames: Vec<usize>,
    /// `s′ − s` for the low modes.
    #[serde(default = "half")]
    pub low_offset: f64,
    /// `s′` for the high modes.
    #[serde(default = "one")]
    pub high_s_prime: f64,
    #[serde(default = "bn_max_n")]
    pub max_n: usize,
    #[serde(default = "tenth")]
    pub tolerance: f64,
}

fn half() -> f64 {
    0.5
}
fn one() -> f64 {
    1.0
}
fn tenth() -> f64 {
    0.1
}
fn bn_max_n() -> usize {
    1 << 16
}

impl Default for BubbleNormSpec {
    fn default() -> Self {
        Self { frames: Vec::new(), low_offset: half(), high_s_prime: one(), max_n: bn_max_n(), tolerance: tenth() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BesovSpec {
    #[serde(default = "besov_n")]
    pub n: usize,
    #[serde(default = "besov_length")]
    pub length: f64,
    /// Largest mode index of the random fields; `n/8` when absent.
    #[serde(default)]
    pub max_index: Option<i64>,
    /// Cut `δ` of the difference integral; `length/8` when absent.
    #[serde(default)]
    pub delta: Option<f64>,
    #[serde(default = "besov_sigmas")]
    pub sigmas: Vec<f64>,
    #[serde(default = "besov_samples")]
    pub samples: usize,
    #[serde(default = "besov_tol")]
    pub tolerance: f64,
}

fn besov_n() -> usize {
    128
}
fn besov_length() -> f64 {
    8.0
}
fn besov_sigmas() -> Vec<f64> {
    vec![0.3, 0.7, 1.0, 1.5]
}
fn besov_samples() -> usize {
    4
}
fn besov_tol() -> f64 {
    0.05
}

impl Default for BesovSpec {
    fn default() -> Self {
        Self {
            n: besov_n(),
            length: besov_length(),
            max_index: None,
            delta: None,
            sigmas: besov_sigmas(),
            samples: besov_samples(),
            tolerance: besov_tol(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CommutatorSpec {
    #[serde(default = "comm_n")]
    pub n: usize,
    #[serde(default = "comm_length")]
    pub length: f64,
    #[serde(default = "comm_index")]
    pub max_index: i64,
    #[serde(default = "comm_radii")]
    pub radii: Vec<f64>,
    #[serde(default = "comm_alphas")]
    pub alphas: Vec<f64>,
    /// Allowed ratio of the largest normalized commutator to the median.
    #[serde(default = "comm_spread")]
    pub max_spread: f64,
}

fn comm_n() -> usize {
    2048
}
fn comm_length() -> f64 {
    64.0
}
fn comm_index() -> i64 {
    64
}
fn comm_radii() -> Vec<f64> {
    vec![1.0, 2.0, 4.0, 8.0]
}
fn comm_alphas() -> Vec<f64> {
    vec![0.3, 0.7]
}
fn comm_spread() -> f64 {
    4.0
}

impl Default for CommutatorSpec {
    fn default() -> Self {
        Self {
            n: comm_n(),
            length: comm_length(),
            max_index: comm_index(),
            radii: comm_radii(),
            alphas: comm_alphas(),
            max_spread: comm_spread(),
        }
    }
}

/// A full experiment description, read from TOML.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_output")]
    pub output_dir: PathBuf,
    pub model: ModelParams,
    #[serde(default)]
    pub ladder: Option<LadderConfig>,
    /// Active rung; the top rung when absent.
    #[serde(default)]
    pub frame_k: Option<usize>,
    #[serde(default)]
    pub frame: FrameOptions,
    pub grid: GridSpec,
    #[serde(default)]
    pub epsilon_list: EpsilonList,
    /// Extra observation times as fractions of the detected lifespan, within `[0, 1/2]`.
    #[serde(default)]
    pub t_grid: Vec<f64>,
    #[serde(default = "default_sigmas")]
    pub sigma_list: Vec<f64>,
    #[serde(default)]
    pub hydro: SolverConfig,
    #[serde(default)]
    pub nls: NlsConfig,
    /// Search horizon for the hydrodynamic lifespan.
    #[serde(default = "default_horizon")]
    pub lifespan_horizon: f64,
    /// Floor of `select_tau`, as a multiple of `‖a(0)‖₂ · max_t ‖V‖_∞`.
    #[serde(default = "tenth")]
    pub tau_floor: f64,
    #[serde(default)]
    pub zero_speed: ZeroSpeedSpec,
    #[serde(default)]
    pub bubble_norms: BubbleNormSpec,
    #[serde(default)]
    pub besov: BesovSpec,
    #[serde(default)]
    pub commutator: CommutatorSpec,
}

fn default_output() -> PathBuf {
    PathBuf::from("results")
}
fn default_sigmas() -> Vec<f64> {
    vec![0.5, 1.0]
}
fn default_horizon() -> f64 {
    100.0
}

/// Fewest points per axis that put 8 samples on a wavelength `2πε`.
pub fn required_points(length: f64, epsilon: f64) -> usize {
    (8.0 * length / (2.0 * std::f64::consts::PI * epsilon)).ceil() as usize
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        if let EpsilonList::Explicit(eps) = &self.epsilon_list {
            check_epsilons(eps)?;
            let fitted = matches!(self.experiment, ExperimentKind::ModulatedScaling | ExperimentKind::NormInflation);
            if fitted && eps.len() < 3 {
                return Err(Error::Config(format!("a slope needs at least three epsilons, got {}", eps.len())));
            }
        }
        if let Some(s) = self.sigma_list.iter().find(|s| !(**s > 0.0 && **s <= 2.0)) {
            return Err(Error::Config(format!("sigma {s} outside (0, 2]")));
        }
        if let Some(t) = self.t_grid.iter().find(|t| !(**t >= 0.0 && **t <= 0.5)) {
            return Err(Error::Config(format!("t_grid fraction {t} outside [0, 1/2]")));
        }
        if !(self.grid.length > 0.0) {
            return Err(Error::Config("grid length must be positive".into()));
        }
        if !(self.tau_floor >= 0.0) {
            return Err(Error::Config("tau_floor must be nonnegative".into()));
        }
        let needs_ladder = matches!(
            self.experiment,
            ExperimentKind::ModulatedScaling
                | ExperimentKind::NormInflation
                | ExperimentKind::ZeroSpeed
                | ExperimentKind::BubbleNorms
                | ExperimentKind::Theorem0Preset
        );
        if needs_ladder && self.ladder.is_none() {
            return Err(Error::Config(format!("experiment {} needs a [ladder] table", self.experiment.name())));
        }
        if self.experiment == ExperimentKind::Theorem0Preset
            && self.ladder.as_ref().is_some_and(|l| l.background.is_none())
        {
            return Err(Error::Config("theorem0_preset needs a ladder background".into()));
        }
        if let Some(l) = &self.ladder {
            BubbleLadder::new(self.model, l.clone())?;
        }
        self.hydro.validate()?;
        Ok(())
    }

    pub fn build_ladder(&self) -> Result<BubbleLadder> {
        let l = self.ladder.clone().ok_or_else(|| Error::Config("missing [ladder] table".into()))?;
        BubbleLadder::new(self.model, l)
    }

    pub fn active_rung(&self, ladder: &BubbleLadder) -> usize {
        self.frame_k.unwrap_or(ladder.rungs())
    }

    pub fn epsilons(&self) -> Result<Vec<f64>> {
        match &self.epsilon_list {
            EpsilonList::Explicit(v) => Ok(v.clone()),
            EpsilonList::Derived(FromLadder::Ladder) => {
                let ladder = self.build_ladder()?;
                let eps = (1..=ladder.rungs()).map(|k| ladder.epsilon(k)).collect::<Result<Vec<_>>>()?;
                check_epsilons(&eps)?;
                Ok(eps)
            }
        }
    }

    /// Points per axis for the NLS stage: the configured value, checked against every ε.
    pub fn resolved_points(&self, epsilons: &[f64]) -> Result<usize> {
        let need = epsilons.iter().map(|e| (required_points(self.grid.length, *e), *e)).max_by_key(|p| p.0);
        match (self.grid.n, need) {
            (Some(n), Some((req, eps))) if n < req => Err(Error::Resolution(format!(
                "epsilon = {eps} needs N >= {req} on L = {}, grid has {n}",
                self.grid.length
            ))),
            (Some(n), _) => Ok(n),
            (None, Some((req, _))) => Ok(req.next_power_of_two().max(8)),
            (None, None) => Err(Error::Config("grid.n is required when no epsilon is used".into())),
        }
    }

    pub fn grid_points(&self) -> Result<usize> {
        self.grid.n.ok_or_else(|| Error::Config("grid.n is required for this experiment".into()))
    }
}

fn check_epsilons(eps: &[f64]) -> Result<()> {
    if let Some(e) = eps.iter().find(|e| !(**e > 0.0)) {
        return Err(Error::Config(format!("epsilon {e} must be positive")));
    }
    if eps.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::Config(format!("epsilon list {eps:?} must be strictly decreasing")));
    }
    Ok(())
}
