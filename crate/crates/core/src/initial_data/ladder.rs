use serde::{Deserialize, Serialize};

use super::params::ModelParams;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", deny_unknown_fields)]
pub enum LadderKind {
    /// `h_k = h0 · γ^k`.
    Geometric { h0: f64, gamma: f64 },
    /// `h_k = exp(−M^k)`.
    DoubleExponential { big_m: f64 },
}

impl Default for LadderKind {
    fn default() -> Self {
        LadderKind::Geometric { h0: 1.0, gamma: 0.25 }
    }
}

/// Optional smooth background `φ₀`, a bump away from every bubble.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Background {
    pub amplitude: f64,
    pub radius: f64,
    pub center: Vec<f64>,
}

/// Text form of a ladder, as read from a config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LadderConfig {
    #[serde(default)]
    pub ladder: LadderKind,
    /// Rungs are numbered `1..=rungs`.
    pub rungs: usize,
    /// Explicit centers `x_k`; placed automatically along the first axis when absent.
    #[serde(default)]
    pub centers: Option<Vec<Vec<f64>>>,
    #[serde(default = "one")]
    pub r1: f64,
    #[serde(default = "yes")]
    pub log_factor: bool,
    /// Multiplies the raw bump (whose sup is `e^{-1}`).
    #[serde(default = "one")]
    pub amplitude: f64,
    /// Width of `ȷ` in the rescaled frame.
    #[serde(default = "default_mollifier")]
    pub mollifier_scale: f64,
    /// Automatic placement uses `|x_{ℓ+1} − x_ℓ| = gap_factor · r1 · h_ℓ`.
    #[serde(default = "default_gap")]
    pub gap_factor: f64,
    #[serde(default)]
    pub background: Option<Background>,
}

fn one() -> f64 {
    1.0
}
fn yes() -> bool {
    true
}
fn default_mollifier() -> f64 {
    0.1
}
fn default_gap() -> f64 {
    4.4
}

impl LadderConfig {
    pub fn geometric(rungs: usize, h0: f64, gamma: f64) -> Self {
        Self {
            ladder: LadderKind::Geometric { h0, gamma },
            rungs,
            centers: None,
            r1: 1.0,
            log_factor: true,
            amplitude: 1.0,
            mollifier_scale: default_mollifier(),
            gap_factor: default_gap(),
            background: None,
        }
    }
}

/// Validated ladder: scales, centers and profile data.
#[derive(Debug, Clone, PartialEq)]
pub struct BubbleLadder {
    params: ModelParams,
    config: LadderConfig,
    scales: Vec<f64>,
    centers: Vec<[f64; 3]>,
}

/// `max(|ln h|, 1)`, or 1 when the factor is disabled.
pub fn log_weight(h: f64, enabled: bool) -> f64 {
    if enabled {
        h.ln().abs().max(1.0)
    } else {
        1.0
    }
}

impl BubbleLadder {
    pub fn new(params: ModelParams, config: LadderConfig) -> Result<Self> {
        params.validate()?;
        if config.rungs == 0 && config.centers.as_ref().is_some_and(|c| !c.is_empty()) {
            return Err(Error::Config("centers given for an empty ladder".into()));
        }
        if !(config.r1 > 0.0) || !(config.amplitude > 0.0) || !(config.mollifier_scale > 0.0) {
            return Err(Error::Domain("r1, amplitude and mollifier_scale must be positive".into()));
        }
        let scales: Vec<f64> = (1..=config.rungs)
            .map(|k| match config.ladder {
                LadderKind::Geometric { h0, gamma } => h0 * gamma.powi(k as i32),
                LadderKind::DoubleExponential { big_m } => (-big_m.powi(k as i32)).exp(),
            })
            .collect();
        match config.ladder {
            LadderKind::Geometric { h0, gamma } => {
                if !(h0 > 0.0 && h0 <= 1.0 && gamma > 0.0 && gamma < 1.0) {
                    return Err(Error::Domain(format!(
                        "geometric ladder needs 0 < h0 <= 1 and 0 < gamma < 1, got ({h0}, {gamma})"
                    )));
                }
            }
            LadderKind::DoubleExponential { big_m } => {
                if !(big_m > 1.0) {
                    return Err(Error::Domain(format!("double-exponential ladder needs M > 1, got {big_m}")));
                }
            }
        }
        if let Some(k) = scales.iter().position(|h| !(*h > 0.0)) {
            return Err(Error::Resolution(format!("scale h_{} underflows to zero", k + 1)));
        }
        let dim = params.dim;
        let centers = match &config.centers {
            Some(c) => {
                if c.len() != config.rungs {
                    return Err(Error::Config(format!("{} centers for {} rungs", c.len(), config.rungs)));
                }
                c.iter()
                    .map(|v| {
                        if v.len() != dim {
                            return Err(Error::Config(format!("center {v:?} is not {dim}-dimensional")));
                        }
                        let mut x = [0.0; 3];
                        x[..dim].copy_from_slice(v);
                        Ok(x)
                    })
                    .collect::<Result<Vec<_>>>()?
            }
            None => {
                let mut x = 0.0;
                let mut out = Vec::with_capacity(config.rungs);
                for i in 0..scales.len() {
                    if i > 0 {
                        x += config.gap_factor * config.r1 * scales[i - 1];
                    }
                    out.push([x, 0.0, 0.0]);
                }
                out
            }
        };
        let ladder = Self { params, config, scales, centers };
        ladder.check_disjoint()?;
        Ok(ladder)
    }

    fn check_disjoint(&self) -> Result<()> {
        for l in 1..self.scales.len() {
            let d = dist(&self.centers[l - 1], &self.centers[l]);
            if !(d > 4.0 * self.config.r1 * self.scales[l - 1]) {
                return Err(Error::Domain(format!(
                    "bubbles {} and {} overlap: |x_l - x_(l+1)| = {d} <= 4 r1 h_l",
                    l,
                    l + 1
                )));
            }
        }
        Ok(())
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn config(&self) -> &LadderConfig {
        &self.config
    }

    pub fn rungs(&self) -> usize {
        self.scales.len()
    }

    fn check_index(&self, k: usize) -> Result<usize> {
        if k == 0 || k > self.scales.len() {
            Err(Error::Domain(format!("rung {k} outside 1..={}", self.scales.len())))
        } else {
            Ok(k - 1)
        }
    }

    /// `h_k`, `k ≥ 1`.
    pub fn h(&self, k: usize) -> Result<f64> {
        Ok(self.scales[self.check_index(k)?])
    }

    pub fn scales(&self) -> &[f64] {
        &self.scales
    }

    pub fn center(&self, k: usize) -> Result<[f64; 3]> {
        Ok(self.centers[self.check_index(k)?])
    }

    pub fn log_weight(&self, k: usize) -> Result<f64> {
        Ok(log_weight(self.h(k)?, self.config.log_factor))
    }

    /// `ε_k = h_k^{m(s_c−s)} |log h_k|^m`.
    pub fn epsilon(&self, k: usize) -> Result<f64> {
        let h = self.h(k)?;
        Ok(h.powf(self.params.eps_exponent()) * self.log_weight(k)?.powi(self.params.m as i32))
    }

    /// Sup of `φ_{ℓ,k}`'s profile factor `(|log h_k|/|log h_ℓ|)(h_k/h_ℓ)^{d/2−s}`.
    pub fn frame_amplitude(&self, l: usize, k: usize) -> Result<f64> {
        let d = self.params.dim as f64;
        Ok(self.log_weight(k)? / self.log_weight(l)? * (self.h(k)? / self.h(l)?).powf(d / 2.0 - self.params.s))
    }

    /// Support radius of `φ_{ℓ,k}` in the `k` frame.
    pub fn frame_radius(&self, l: usize, k: usize) -> Result<f64> {
        Ok(self.config.r1 * self.h(l)? / self.h(k)?)
    }

    /// Value of `φ_ℓ` in the original variables.
    pub fn bubble_value(&self, l: usize, x: &[f64]) -> Result<f64> {
        let h = self.h(l)?;
        let c = self.center(l)?;
        let d = self.params.dim as f64;
        let r = dist_slice(x, &c) / (self.config.r1 * h);
        Ok(self.config.amplitude / self.log_weight(l)? * h.powf(self.params.s - d / 2.0) * super::profile::bump(r))
    }
}

fn dist(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
}

fn dist_slice(x: &[f64], c: &[f64; 3]) -> f64 {
    x.iter().enumerate().map(|(a, v)| (v - c[a]).powi(2)).sum::<f64>().sqrt()
}
