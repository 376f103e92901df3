//! Modulated energies, localized norms and the commutator law.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::euler::HydroState;
use crate::nls::{energy, mass, NlsRun};
use crate::spectral::ops::{apply_multiplier, fractional_derivative, gradient, partial, sobolev_norm};
use crate::spectral::{Field, Grid};

/// `K = ½ Σ_j ‖ε∂_j u − iV_j u‖²`.
pub fn kinetic(u: &Field, v: &[Field], epsilon: f64) -> Result<f64> {
    Ok(0.5 * modulated_gradient(u, v, epsilon, None)?.iter().map(|g| g.l2_norm().powi(2)).sum::<f64>())
}

/// `K̃ = ½ ‖(ε∇ − iV)u − ε∇φ_low‖²`.
pub fn kinetic_renormalized(u: &Field, v: &[Field], epsilon: f64, phi_low: &Field) -> Result<f64> {
    let g = modulated_gradient(u, v, epsilon, Some(phi_low))?;
    Ok(0.5 * g.iter().map(|g| g.l2_norm().powi(2)).sum::<f64>())
}

fn modulated_gradient(u: &Field, v: &[Field], epsilon: f64, phi_low: Option<&Field>) -> Result<Vec<Field>> {
    let dim = u.grid().dim();
    if v.len() != dim {
        return Err(Error::Structural(format!("{} velocity components on a {dim}-d grid", v.len())));
    }
    let u = u.to_physical();
    let low = match phi_low {
        Some(p) => {
            u.ensure_same_grid(p)?;
            if p.to_physical().values().iter().any(|z| z.im != 0.0) {
                return Err(Error::Domain("the low-mode phase must be real".into()));
            }
            Some(gradient(&p.to_physical()))
        }
        None => None,
    };
    let grads = gradient(&u);
    let mut out = Vec::with_capacity(dim);
    for j in 0..dim {
        u.ensure_same_grid(&v[j])?;
        let vj = v[j].to_physical();
        let mut vals = Vec::with_capacity(u.values().len());
        for p in 0..u.values().len() {
            let mut z = epsilon * grads[j].values()[p] - Complex64::i() * vj.values()[p].re * u.values()[p];
            if let Some(l) = &low {
                z -= epsilon * l[j].values()[p].re;
            }
            vals.push(z);
        }
        out.push(Field::new(u.grid().clone(), vals, crate::spectral::Domain::Physical)?);
    }
    Ok(out)
}

/// `F(y) − F(r) − (y − r) f(r)` with `F(y) = y^{m+1}/(m+1)`.
pub fn taylor_remainder(y: f64, r: f64, m: u32) -> f64 {
    let mi = m as i32;
    let mp1 = m as f64 + 1.0;
    (y.powi(mi + 1) - r.powi(mi + 1)) / mp1 - (y - r) * r.powi(mi)
}

fn check_rho(rho_tilde: &Field) -> Result<Vec<f64>> {
    let r = rho_tilde.to_physical();
    let mut out = Vec::with_capacity(r.values().len());
    for v in r.values() {
        if v.re < -1e-12 {
            return Err(Error::Domain(format!("reference density {} is negative", v.re)));
        }
        out.push(v.re.max(0.0));
    }
    Ok(out)
}

/// `P = ∫ F(|u|²) − F(ρ̃) − (|u|² − ρ̃) f(ρ̃)`.
pub fn potential(u: &Field, rho_tilde: &Field, m: u32) -> Result<f64> {
    u.ensure_same_grid(rho_tilde)?;
    let r = check_rho(rho_tilde)?;
    let u = u.to_physical();
    let p = u.values().iter().zip(&r).map(|(z, &r)| taylor_remainder(z.norm_sqr(), r, m)).sum::<f64>()
        * u.grid().cell_volume();
    if p < -1e-12 {
        return Err(Error::Breakdown(format!("potential part came out negative: {p}")));
    }
    Ok(p)
}

/// `∫ (|u|² − ρ̃)(|u|^{2m} − ρ̃^m)`, dominated by `(m+1) P`.
pub fn potential_lower_functional(u: &Field, rho_tilde: &Field, m: u32) -> Result<f64> {
    u.ensure_same_grid(rho_tilde)?;
    let r = check_rho(rho_tilde)?;
    let u = u.to_physical();
    let mi = m as i32;
    Ok(u.values()
        .iter()
        .zip(&r)
        .map(|(z, &r)| {
            let y = z.norm_sqr();
            (y - r) * (y.powi(mi) - r.powi(mi))
        })
        .sum::<f64>()
        * u.grid().cell_volume())
}

/// `c` in `P ≥ c ∫ (|u|² − ρ̃)(|u|^{2m} − ρ̃^m)`.
pub fn potential_lower_constant(m: u32) -> f64 {
    1.0 / (m as f64 + 1.0)
}

/// `∫ ||u|² − ρ̃| (|u|^{2m} + ρ̃^m)`, the variant without a uniform lower bound.
pub fn potential_literal_functional(u: &Field, rho_tilde: &Field, m: u32) -> Result<f64> {
    u.ensure_same_grid(rho_tilde)?;
    let r = check_rho(rho_tilde)?;
    let u = u.to_physical();
    let mi = m as i32;
    Ok(u.values()
        .iter()
        .zip(&r)
        .map(|(z, &r)| {
            let y = z.norm_sqr();
            (y - r).abs() * (y.powi(mi) + r.powi(mi))
        })
        .sum::<f64>()
        * u.grid().cell_volume())
}

/// `M = ‖χ u‖²`.
pub fn localized_mass(u: &Field, chi: &Field) -> Result<f64> {
    Ok(u.to_physical().mul(&chi.to_physical())?.l2_norm().powi(2))
}

/// `‖ε∇(χu)‖₂`.
pub fn local_h1(u: &Field, chi: &Field, epsilon: f64) -> Result<f64> {
    let cu = u.to_physical().mul(&chi.to_physical())?;
    Ok(epsilon * gradient(&cu).iter().map(|g| g.l2_norm().powi(2)).sum::<f64>().sqrt())
}

/// `max_x |(1 − χ) |∇|^n V_j|` over components.
pub fn vloc_smallness(hydro: &HydroState, chi: &Field, n: u32) -> Result<f64> {
    let chi = chi.to_physical();
    let mut worst = 0.0f64;
    for vj in &hydro.v {
        let d = fractional_derivative(vj, n as f64)?.into_physical();
        for (a, c) in d.values().iter().zip(chi.values()) {
            worst = worst.max(((1.0 - c.re) * a.re).abs());
        }
    }
    Ok(worst)
}

/// Frozen constant of the lower bound. [`calibrate_acma_constant`] with seed [`ACMA_SEED`]
/// and 64 samples needs at most −0.014, so the value only adds margin.
pub const ACMA_K: f64 = 0.5;
pub const ACMA_SEED: u64 = 20_240_601;

/// `(‖|v|^σ u‖₂, ‖|εD|^σ u‖₂ + ‖(ε∇ − iv)u‖₂^σ ‖u‖₂^{1−σ} + ε^{σ/2} K (1 + ‖∇v‖_∞) ‖u‖₂)`.
///
/// `|εD|^σ` takes the value 1 on the zero mode when σ = 0.
pub fn acma_lower_bound(u: &Field, v: &[Field], epsilon: f64, sigma: f64) -> Result<(f64, f64)> {
    let [lhs, a, b, c] = acma_terms(u, v, epsilon, sigma)?;
    Ok((lhs, a + b + c * ACMA_K))
}

/// `[lhs, ‖|εD|^σ u‖, ‖(ε∇−iv)u‖^σ‖u‖^{1−σ}, ε^{σ/2}(1 + ‖∇v‖_∞)‖u‖]`.
pub fn acma_terms(u: &Field, v: &[Field], epsilon: f64, sigma: f64) -> Result<[f64; 4]> {
    if !(0.0..=1.0).contains(&sigma) {
        return Err(Error::Domain(format!("sigma must lie in [0,1], got {sigma}")));
    }
    let u = u.to_physical();
    let dim = u.grid().dim();
    let speed: Vec<f64> =
        (0..u.values().len()).map(|p| v.iter().map(|c| c.values()[p].re.powi(2)).sum::<f64>().sqrt()).collect();
    let weighted: Vec<Complex64> = u.values().iter().zip(&speed).map(|(z, s)| z * pow0(*s, sigma)).collect();
    let lhs = Field::new(u.grid().clone(), weighted, crate::spectral::Domain::Physical)?.l2_norm();
    let first = apply_multiplier(&u, |k| {
        let r = (k[0] * k[0] + k[1] * k[1] + k[2] * k[2]).sqrt();
        Complex64::new(pow0(epsilon * r, sigma), 0.0)
    })
    .l2_norm();
    let mg = modulated_gradient(&u, v, epsilon, None)?;
    let mg_norm = mg.iter().map(|g| g.l2_norm().powi(2)).sum::<f64>().sqrt();
    let un = u.l2_norm();
    let second = pow0(mg_norm, sigma) * pow0(un, 1.0 - sigma);
    let mut grad_v = 0.0f64;
    for c in v {
        for j in 0..dim {
            grad_v = grad_v.max(partial(c, j)?.into_physical().max_abs());
        }
    }
    let third = epsilon.powf(sigma / 2.0) * (1.0 + grad_v) * un;
    Ok([lhs, first, second, third])
}

fn pow0(x: f64, p: f64) -> f64 {
    if p == 0.0 {
        1.0
    } else {
        x.powf(p)
    }
}

/// Largest `(lhs − first − second)/third` over a seeded family: WKB states
/// `a e^{iφ/ε}` with random smooth `a`, `φ`, `ε ∈ [0.02, 0.3]`, `σ ∈ [0, 1]`, paired
/// half of the time with `v = ∇φ` and otherwise with an unrelated smooth field.
pub fn calibrate_acma_constant(seed: u64, samples: usize) -> Result<f64> {
    let grid = Grid::new(1, 1024, 2.0 * std::f64::consts::PI)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut k_needed = f64::NEG_INFINITY;
    for i in 0..samples {
        let modes: Vec<(f64, f64, f64)> =
            (1..=4).map(|j| (j as f64, rng.gen_range(-1.0..1.0) / j as f64, rng.gen_range(0.0..6.3))).collect();
        let other: Vec<(f64, f64, f64)> =
            (1..=3).map(|j| (j as f64, rng.gen_range(-1.5..1.5), rng.gen_range(0.0..6.3))).collect();
        let amp: Vec<(f64, f64, f64)> =
            (1..=3).map(|j| (j as f64, rng.gen_range(-0.3..0.3), rng.gen_range(0.0..6.3))).collect();
        let eps = rng.gen_range(0.02..0.3);
        let sigma = rng.gen_range(0.0..=1.0);
        let phi = |x: f64| modes.iter().map(|(k, c, p)| c * (k * x + p).sin()).sum::<f64>();
        let dphi = |x: f64| modes.iter().map(|(k, c, p)| c * k * (k * x + p).cos()).sum::<f64>();
        let vel = |x: f64| other.iter().map(|(k, c, p)| c * (k * x + p).cos()).sum::<f64>();
        let a = |x: f64| 1.0 + amp.iter().map(|(k, c, p)| c * (k * x + p).cos()).sum::<f64>();
        let u = Field::from_fn(&grid, |x| a(x[0]) * Complex64::cis(phi(x[0]) / eps));
        let v = if i % 2 == 0 {
            vec![Field::from_real_fn(&grid, |x| dphi(x[0]))]
        } else {
            vec![Field::from_real_fn(&grid, |x| vel(x[0]))]
        };
        let [lhs, first, second, third] = acma_terms(&u, &v, eps, sigma)?;
        k_needed = k_needed.max((lhs - first - second) / third);
    }
    Ok(k_needed)
}

/// `‖[|∇|^α, χ] f‖₂ R^α / (‖χ‖_{W^{1,∞}} ‖f‖₂)`.
pub fn commutator_check(f: &Field, chi: &Field, radius: f64, alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Domain(format!("alpha must lie in (0,1), got {alpha}")));
    }
    f.ensure_same_grid(chi)?;
    let f = f.to_physical();
    let chi = chi.to_physical();
    let fnorm = f.l2_norm();
    if fnorm == 0.0 {
        return Ok(0.0);
    }
    let left = fractional_derivative(&chi.mul(&f)?, alpha)?.into_physical();
    let right = chi.mul(&fractional_derivative(&f, alpha)?.into_physical())?;
    let comm = left.sub(&right)?.l2_norm();
    let w1 = chi.max_abs() + gradient(&chi).iter().map(|g| g.max_abs()).fold(0.0, f64::max);
    Ok(comm * radius.powf(alpha) / (w1 * fnorm))
}

/// One timestamped diagnostics record.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnergyReport {
    pub t: f64,
    pub mass: f64,
    pub energy: f64,
    pub k: f64,
    pub p: f64,
    pub h: f64,
    pub k_renorm: f64,
    pub h_renorm: f64,
    pub m_loc: f64,
    pub local_h1: f64,
    /// `(σ, ‖u‖_{Ḣ^σ})`, multiplied by `ε^σ` when requested.
    pub sobolev: Vec<(f64, f64)>,
}

impl EnergyReport {
    pub fn header(sigmas: &[f64]) -> Vec<String> {
        let mut h: Vec<String> = ["t", "mass", "energy", "K", "P", "H", "K_renorm", "H_renorm", "M_loc", "local_H1"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        h.extend(sigmas.iter().map(|s| format!("sobolev_{s}")));
        h
    }

    pub fn record(&self) -> Vec<String> {
        let mut r: Vec<String> = [
            self.t,
            self.mass,
            self.energy,
            self.k,
            self.p,
            self.h,
            self.k_renorm,
            self.h_renorm,
            self.m_loc,
            self.local_h1,
        ]
        .iter()
        .map(|v| format!("{v:e}"))
        .collect();
        r.extend(self.sobolev.iter().map(|(_, v)| format!("{v:e}")));
        r
    }
}

/// Inputs shared by every report of one run.
#[derive(Debug, Clone)]
pub struct ReportContext<'a> {
    pub phi_low: &'a Field,
    pub chi: &'a Field,
    pub sigmas: &'a [f64],
    pub scale_by_epsilon: bool,
}

/// Builds the report of `run` against the hydrodynamic state at the same time.
pub fn energy_report(run: &NlsRun, hydro: &HydroState, ctx: &ReportContext) -> Result<EnergyReport> {
    if (run.t - hydro.t).abs() > 1e-9 * run.t.abs().max(1.0) {
        return Err(Error::Structural(format!("NLS time {} differs from hydro time {}", run.t, hydro.t)));
    }
    let eps = run.epsilon;
    let rho = hydro.amplitude().abs_sqr();
    let k = kinetic(&run.u, &hydro.v, eps)?;
    let kr = kinetic_renormalized(&run.u, &hydro.v, eps, ctx.phi_low)?;
    let p = potential(&run.u, &rho, run.m)?;
    let sobolev = ctx
        .sigmas
        .iter()
        .map(|&s| {
            let n = sobolev_norm(&run.u, s, true)?;
            Ok((s, if ctx.scale_by_epsilon { n * eps.powf(s) } else { n }))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(EnergyReport {
        t: run.t,
        mass: mass(&run.u),
        energy: energy(&run.u, eps, run.m, run.config.delta_n),
        k,
        p,
        h: k + p,
        k_renorm: kr,
        h_renorm: kr + p,
        m_loc: localized_mass(&run.u, ctx.chi)?,
        local_h1: local_h1(&run.u, ctx.chi, eps)?,
        sobolev,
    })
}
