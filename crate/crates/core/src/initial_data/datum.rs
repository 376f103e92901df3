use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::ladder::{log_weight, BubbleLadder};
use super::profile::{bump, make_cutoff, make_mollifier};
use crate::error::{Error, Result};
use crate::spectral::{convolve_compact, sobolev_norm, Field, Grid};

/// Sums `φ_ℓ` for `ℓ = 1..=k_max` (plus the background if any) in the original variables.
pub fn build_f0(ladder: &BubbleLadder, grid: &Arc<Grid>, k_max: usize) -> Result<Field> {
    if k_max > ladder.rungs() {
        return Err(Error::Domain(format!("k_max = {k_max} exceeds {} rungs", ladder.rungs())));
    }
    let cfg = ladder.config();
    for l in 1..=k_max {
        let width = 2.0 * cfg.r1 * ladder.h(l)?;
        if width < 8.0 * grid.dx() {
            return Err(Error::Resolution(format!("bubble {l} spans {:.2} grid points, need 8", width / grid.dx())));
        }
        if cfg.r1 * ladder.h(l)? >= grid.length() / 2.0 {
            return Err(Error::Domain(format!("bubble {l} does not fit the torus")));
        }
    }
    let d = ladder.params().dim as f64;
    let s = ladder.params().s;
    let mut values = vec![0.0; grid.total_points()];
    for l in 1..=k_max {
        let h = ladder.h(l)?;
        let c = ladder.center(l)?;
        let amp = cfg.amplitude / ladder.log_weight(l)? * h.powf(s - d / 2.0);
        for (i, v) in values.iter_mut().enumerate() {
            let r = grid.distance_to(i, &c) / (cfg.r1 * h);
            if r < 1.0 {
                *v += amp * bump(r);
            }
        }
    }
    if let Some(bg) = &cfg.background {
        for (i, v) in values.iter_mut().enumerate() {
            let r = grid.distance_to(i, &bg.center) / bg.radius;
            *v += bg.amplitude * bump(r);
        }
    }
    Field::from_real(grid, values)
}

/// Which rungs enter the rescaled datum and how the cutoffs are sized.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrameOptions {
    /// Lowest rung kept, `k₀`.
    #[serde(default = "first_rung")]
    pub k0: usize,
    /// Highest rung kept; defaults to the active rung.
    #[serde(default)]
    pub k_max: Option<usize>,
    /// Plateau radius of `χ_k`; defaults to the support radius of `ȷ∗α`.
    #[serde(default)]
    pub cutoff_radius: Option<f64>,
    /// Collar `δ` of the enlarged cutoff; chosen from the free gap when absent.
    #[serde(default)]
    pub chi1_delta: Option<f64>,
}

fn first_rung() -> usize {
    1
}

impl Default for FrameOptions {
    fn default() -> Self {
        Self { k0: 1, k_max: None, cutoff_radius: None, chi1_delta: None }
    }
}

/// The rescaled datum `u_{0,k}` with its bookkeeping.
#[derive(Debug, Clone)]
pub struct SemiclassicalDatum {
    pub k: usize,
    pub epsilon: f64,
    pub u0: Field,
    /// `Σ_{ℓ<k} ȷ∗φ_{ℓ,k}` (plus the rescaled background).
    pub low_mode_phi: Field,
    pub chi_k: Field,
    pub chi1_k: Field,
    pub r_k: f64,
    pub delta: f64,
    /// `(ℓ, ȷ∗φ_{ℓ,k})` for every kept rung.
    pub components: Vec<(usize, Field)>,
    /// `(ℓ, x_ℓ/h_k)` after centering the window on the torus.
    pub frame_centers: Vec<(usize, [f64; 3])>,
    pub background: Option<Field>,
}

impl SemiclassicalDatum {
    pub fn component(&self, l: usize) -> Option<&Field> {
        self.components.iter().find(|(i, _)| *i == l).map(|(_, f)| f)
    }

    pub fn center(&self, l: usize) -> Option<[f64; 3]> {
        self.frame_centers.iter().find(|(i, _)| *i == l).map(|(_, c)| *c)
    }
}

fn periodic_dist(grid: &Grid, a: &[f64; 3], b: &[f64; 3]) -> f64 {
    (0..grid.dim()).map(|i| grid.periodic_delta(a[i], b[i]).powi(2)).sum::<f64>().sqrt()
}

/// `ȷ∗φ_{ℓ,k}` centered at `center` on `grid`.
pub fn frame_component(
    ladder: &BubbleLadder,
    grid: &Arc<Grid>,
    l: usize,
    k: usize,
    center: &[f64; 3],
) -> Result<Field> {
    let rho = ladder.frame_radius(l, k)?;
    if 2.0 * rho < 8.0 * grid.dx() {
        return Err(Error::Resolution(format!(
            "bubble {l} in frame {k} spans {:.2} grid points, need 8",
            2.0 * rho / grid.dx()
        )));
    }
    let amp = ladder.config().amplitude * ladder.frame_amplitude(l, k)?;
    let raw = Field::from_real_fn(grid, |x| {
        let r2: f64 = x.iter().enumerate().map(|(a, v)| grid.periodic_delta(*v, center[a]).powi(2)).sum();
        amp * bump(r2.sqrt() / rho)
    });
    let j = make_mollifier(grid, ladder.config().mollifier_scale)?;
    Ok(convolve_compact(&raw, &j)?.real_part())
}

/// Builds `u_{0,k} = ȷ ∗ (φ_{0,k} + Σ_ℓ φ_{ℓ,k})` directly in the `k` frame.
pub fn rescale_to_semiclassical(
    ladder: &BubbleLadder,
    grid: &Arc<Grid>,
    k: usize,
    opts: &FrameOptions,
) -> Result<SemiclassicalDatum> {
    let dim = ladder.params().dim;
    if grid.dim() != dim {
        return Err(Error::Structural(format!("{}-d grid for a {dim}-d ladder", grid.dim())));
    }
    let k_max = opts.k_max.unwrap_or(k);
    if opts.k0 == 0 || opts.k0 > k || k_max < k || k_max > ladder.rungs() {
        return Err(Error::Domain(format!(
            "rungs {}..={k_max} must contain k = {k} within 1..={}",
            opts.k0,
            ladder.rungs()
        )));
    }
    let h_k = ladder.h(k)?;
    let x_k = ladder.center(k)?;
    let j = ladder.config().mollifier_scale;
    let kept: Vec<usize> = (opts.k0..=k_max).collect();

    // rescaled centers relative to bubble k, then shifted so the window is centered
    let mut rel = Vec::with_capacity(kept.len());
    let (mut lo, mut hi) = ([f64::INFINITY; 3], [f64::NEG_INFINITY; 3]);
    for &l in &kept {
        let c = ladder.center(l)?;
        let rho = ladder.frame_radius(l, k)? + j;
        let mut x = [0.0; 3];
        for a in 0..dim {
            x[a] = (c[a] - x_k[a]) / h_k;
            lo[a] = lo[a].min(x[a] - rho);
            hi[a] = hi[a].max(x[a] + rho);
        }
        rel.push(x);
    }
    let mut offset = [0.0; 3];
    for a in 0..dim {
        if hi[a] - lo[a] >= grid.length() {
            return Err(Error::Domain(format!(
                "rescaled window of width {:.3} overflows the torus of side {}",
                hi[a] - lo[a],
                grid.length()
            )));
        }
        offset[a] = -0.5 * (lo[a] + hi[a]);
    }
    let frame_centers: Vec<(usize, [f64; 3])> = kept
        .iter()
        .zip(&rel)
        .map(|(&l, x)| {
            let mut c = *x;
            for a in 0..dim {
                c[a] += offset[a];
            }
            (l, c)
        })
        .collect();

    let components = frame_centers
        .iter()
        .map(|(l, c)| Ok((*l, frame_component(ladder, grid, *l, k, c)?)))
        .collect::<Result<Vec<_>>>()?;

    let background = match &ladder.config().background {
        None => None,
        Some(bg) => {
            let d = dim as f64;
            let s = ladder.params().s;
            let scale = log_weight(h_k, ladder.config().log_factor) * h_k.powf(d / 2.0 - s);
            let raw = Field::from_real_fn(grid, |x| {
                let mut r2 = 0.0;
                for a in 0..dim {
                    let orig = x_k[a] + h_k * (x[a] - offset[a]);
                    r2 += (orig - bg.center.get(a).copied().unwrap_or(0.0)).powi(2);
                }
                scale * bg.amplitude * bump(r2.sqrt() / bg.radius)
            });
            Some(convolve_compact(&raw, &make_mollifier(grid, j)?)?.real_part())
        }
    };

    let mut u0 = Field::zeros(grid);
    let mut low = Field::zeros(grid);
    for (l, c) in &components {
        u0 = u0.add(c)?;
        if *l < k {
            low = low.add(c)?;
        }
    }
    if let Some(b) = &background {
        u0 = u0.add(b)?;
        low = low.add(b)?;
    }

    let center_k = frame_centers.iter().find(|(l, _)| *l == k).expect("k kept").1;
    let r_k = opts.cutoff_radius.unwrap_or(ladder.config().r1 + j);
    let mut gap = f64::INFINITY;
    for (l, c) in &frame_centers {
        if *l == k {
            continue;
        }
        let free = periodic_dist(grid, c, &center_k) - ladder.frame_radius(*l, k)? - j - 2.0 * r_k;
        if free <= 0.0 {
            return Err(Error::Domain(format!("cutoff of radius {r_k} around bubble {k} reaches bubble {l}")));
        }
        gap = gap.min(free);
    }
    if !gap.is_finite() {
        gap = grid.length() / 2.0 - 2.0 * r_k;
        if gap <= 0.0 {
            return Err(Error::Domain(format!("cutoff of radius {r_k} does not fit the torus")));
        }
    }
    let delta = match opts.chi1_delta {
        Some(d) => {
            if !(d > 0.0 && 3.0 * d < gap) {
                return Err(Error::Domain(format!("collar {d} leaves no room (free gap {gap})")));
            }
            d
        }
        None => (0.3 * gap).min(1.0),
    };
    let chi_k = make_cutoff(grid, &center_k, r_k, 1.0, 2.0);
    let chi1_k = make_cutoff(grid, &center_k, 1.0, 2.0 * r_k + delta, 2.0 * r_k + 3.0 * delta);

    Ok(SemiclassicalDatum {
        k,
        epsilon: ladder.epsilon(k)?,
        u0,
        low_mode_phi: low,
        chi_k,
        chi1_k,
        r_k,
        delta,
        components,
        frame_centers,
        background,
    })
}

/// Lower bound on the cutoff radius `R_k` for measuring `Ḣ^σ` at rung `k`.
///
/// `R^σ ≥ C′ h_k^{−s} ε_k^σ` for `σ < 1`, and
/// `R^{σ−1} ≥ C′ h_k^{1−s} ε_k^σ h_{k−1}^{(m+1)(s_sob−s)}` for `1 < σ < 2`.
pub fn cutoff_radius_bound(ladder: &BubbleLadder, k: usize, sigma: f64, c_prime: f64) -> Result<f64> {
    let p = ladder.params();
    let h = ladder.h(k)?;
    let eps = ladder.epsilon(k)?;
    if sigma > 0.0 && sigma < 1.0 {
        Ok((c_prime * h.powf(-p.s) * eps.powf(sigma)).powf(1.0 / sigma))
    } else if sigma > 1.0 && sigma < 2.0 {
        let h_prev = if k > 1 { ladder.h(k - 1)? } else { 1.0 };
        let m = p.m as f64;
        let rhs = c_prime * h.powf(1.0 - p.s) * eps.powf(sigma) * h_prev.powf((m + 1.0) * (p.s_sob() - p.s));
        Ok(rhs.powf(1.0 / (sigma - 1.0)))
    } else {
        Err(Error::Domain(format!("cutoff sizing needs sigma in (0,1) or (1,2), got {sigma}")))
    }
}

/// `h_k R_k ≤ h_k^δ`: the cutoff, mapped back to the original variables, still shrinks.
pub fn cutoff_fits(h_k: f64, r_k: f64, delta_exp: f64) -> bool {
    h_k * r_k <= h_k.powf(delta_exp)
}

/// One line of the bubble-norm table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BubbleNormRow {
    pub l: usize,
    pub k: usize,
    pub s_prime: f64,
    /// `h_k / h_ℓ`.
    pub scale_ratio: f64,
    /// `|log h_k| / |log h_ℓ|`.
    pub log_ratio: f64,
    pub measured: f64,
    /// Power law of the bound with unit constant.
    pub predicted: f64,
}

/// Grid on which `ȷ∗φ_{ℓ,k}` alone is resolved with room around it.
pub fn component_grid(ladder: &BubbleLadder, l: usize, k: usize, max_n: usize) -> Result<Arc<Grid>> {
    let dim = ladder.params().dim;
    let j = ladder.config().mollifier_scale;
    let rho = ladder.frame_radius(l, k)?;
    let length = 16.0 * (rho + j).max(ladder.config().r1 + j);
    let dx = (j / 5.0).min(2.0 * rho / 16.0);
    let n = ((length / dx).ceil() as usize).next_power_of_two().max(16);
    if n > max_n {
        return Err(Error::Resolution(format!("component {l} in frame {k} needs N = {n} > {max_n} per axis")));
    }
    Grid::new(dim, n, length)
}

/// Measures `‖ȷ∗φ_{ℓ,k}‖_{Ḣ^{s'}}` for every rung against the power laws of the bound.
pub fn verify_bubble_norms(ladder: &BubbleLadder, k: usize, s_prime: f64, max_n: usize) -> Result<Vec<BubbleNormRow>> {
    let s = ladder.params().s;
    (1..=ladder.rungs())
        .map(|l| {
            let grid = component_grid(ladder, l, k, max_n)?;
            let comp = frame_component(ladder, &grid, l, k, &[0.0; 3])?;
            let measured = sobolev_norm(&comp, s_prime, true)?;
            let ratio = ladder.h(k)? / ladder.h(l)?;
            let log_ratio = ladder.log_weight(k)? / ladder.log_weight(l)?;
            let predicted = if l < k {
                log_ratio * ratio.powf(s_prime - s)
            } else if l > k {
                log_ratio * ratio.powf(-s)
            } else {
                1.0
            };
            Ok(BubbleNormRow { l, k, s_prime, scale_ratio: ratio, log_ratio, measured, predicted })
        })
        .collect()
}
