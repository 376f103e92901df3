//! Semiclassical NLS `iε∂_t u + (ε²/2)Δu = f(|u|²)u` by Strang splitting.

use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::ops::gradient;
use crate::spectral::{Field, Grid};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NlsConfig {
    /// Fixed step; `min(c·ε·Δx², 10⁻³ε)` when absent.
    #[serde(default)]
    pub dt: Option<f64>,
    /// The `c` above.
    #[serde(default = "one")]
    pub dt_factor: f64,
    /// Observer period in steps.
    #[serde(default = "ten")]
    pub n_obs: usize,
    /// Spectral tail (outer third, relative to the peak) that triggers the under-resolution flag.
    #[serde(default = "tail_tol")]
    pub tail_tol: f64,
    /// `δ_n` of `f_n(y) = y^m/(1+(δ_n y)^m)`; zero gives the pure power.
    #[serde(default)]
    pub delta_n: f64,
    /// Disable the nonlinearity (free Schrödinger flow).
    #[serde(default)]
    pub linear: bool,
}

fn one() -> f64 {
    1.0
}
fn ten() -> usize {
    10
}
fn tail_tol() -> f64 {
    1e-8
}

impl Default for NlsConfig {
    fn default() -> Self {
        Self { dt: None, dt_factor: 1.0, n_obs: 10, tail_tol: 1e-8, delta_n: 0.0, linear: false }
    }
}

/// `f(y)` for `y = |u|²`.
pub fn nonlinearity(y: f64, m: u32, delta_n: f64) -> f64 {
    let p = y.powi(m as i32);
    if delta_n == 0.0 {
        p
    } else {
        p / (1.0 + (delta_n * y).powi(m as i32))
    }
}

/// `F(y) = ∫₀^y f`.
pub fn potential_density(y: f64, m: u32, delta_n: f64) -> f64 {
    if delta_n == 0.0 || y == 0.0 {
        return y.powi(m as i32 + 1) / (m as f64 + 1.0);
    }
    quadrature::double_exponential::integrate(|z| nonlinearity(z, m, delta_n), 0.0, y, 1e-13).integral
}

/// Mass `∫|u|²`.
pub fn mass(u: &Field) -> f64 {
    u.l2_norm().powi(2)
}

/// `(ε²/2)‖∇u‖² + ∫F(|u|²)`.
pub fn energy(u: &Field, epsilon: f64, m: u32, delta_n: f64) -> f64 {
    let kin: f64 = gradient(u).iter().map(|g| g.l2_norm().powi(2)).sum();
    let u = u.to_physical();
    let pot: f64 =
        u.values().iter().map(|v| potential_density(v.norm_sqr(), m, delta_n)).sum::<f64>() * u.grid().cell_volume();
    0.5 * epsilon * epsilon * kin + pot
}

/// One NLS integration.
#[derive(Debug, Clone)]
pub struct NlsRun {
    pub epsilon: f64,
    pub m: u32,
    pub u: Field,
    pub t: f64,
    pub dt: f64,
    pub mass0: f64,
    pub energy0: f64,
    pub steps: usize,
    pub config: NlsConfig,
    /// First time the tail exceeded `tail_tol`.
    pub under_resolved_at: Option<f64>,
    /// Time at which non-finite values appeared.
    pub failed_at: Option<f64>,
    free: Vec<Complex64>,
    free_dt: f64,
}

impl NlsRun {
    pub fn new(u0: &Field, epsilon: f64, m: u32, config: NlsConfig) -> Result<Self> {
        if !(epsilon > 0.0) {
            return Err(Error::Domain(format!("epsilon must be positive, got {epsilon}")));
        }
        if m == 0 {
            return Err(Error::Domain("m must be a positive integer".into()));
        }
        if config.n_obs == 0 {
            return Err(Error::Config("n_obs must be at least 1".into()));
        }
        let grid = u0.grid();
        let dt = match config.dt {
            Some(dt) if dt > 0.0 => dt,
            Some(dt) => return Err(Error::Config(format!("dt must be positive, got {dt}"))),
            None => default_dt(grid, epsilon, config.dt_factor),
        };
        let u = u0.to_physical();
        let mut run = Self {
            epsilon,
            m,
            mass0: mass(&u),
            energy0: energy(&u, epsilon, m, config.delta_n),
            u,
            t: 0.0,
            dt,
            steps: 0,
            config,
            under_resolved_at: None,
            failed_at: None,
            free: Vec::new(),
            free_dt: f64::NAN,
        };
        if tail_of(&run.u.to_spectral()) > config.tail_tol {
            run.under_resolved_at = Some(0.0);
        }
        Ok(run)
    }

    pub fn grid(&self) -> &Arc<Grid> {
        self.u.grid()
    }

    pub fn mass(&self) -> f64 {
        mass(&self.u)
    }

    pub fn energy(&self) -> f64 {
        energy(&self.u, self.epsilon, self.m, self.config.delta_n)
    }

    fn gauge(&mut self, tau: f64) {
        if self.config.linear {
            return;
        }
        let (m, dn, eps) = (self.m, self.config.delta_n, self.epsilon);
        for v in self.u.values_mut() {
            let f = nonlinearity(v.norm_sqr(), m, dn);
            *v *= Complex64::cis(-tau * f / eps);
        }
    }

    fn free_multiplier(&mut self, dt: f64) {
        if self.free_dt == dt {
            return;
        }
        let grid = Arc::clone(self.grid());
        let eps = self.epsilon;
        self.free = (0..grid.total_points())
            .map(|i| {
                let k = grid.wave_vector(i);
                Complex64::cis(-0.5 * eps * dt * (k[0] * k[0] + k[1] * k[1] + k[2] * k[2]))
            })
            .collect();
        self.free_dt = dt;
    }

    /// Gauge half-kick, exact free flow, gauge half-kick.
    pub fn strang_step(&mut self, dt: f64) -> Result<()> {
        if !(dt > 0.0) {
            return Err(Error::Domain(format!("time step must be positive, got {dt}")));
        }
        if let Some(t) = self.failed_at {
            return Err(Error::Breakdown(format!("run already failed at t = {t}")));
        }
        self.gauge(0.5 * dt);
        self.free_multiplier(dt);
        let grid = Arc::clone(self.grid());
        let mut s = std::mem::replace(&mut self.u, Field::zeros(&grid)).into_spectral();
        for (v, w) in s.values_mut().iter_mut().zip(&self.free) {
            *v *= w;
        }
        if self.under_resolved_at.is_none() && tail_of(&s) > self.config.tail_tol {
            self.under_resolved_at = Some(self.t + dt);
        }
        self.u = s.into_physical();
        self.gauge(0.5 * dt);
        self.t += dt;
        self.steps += 1;
        if self.u.has_non_finite() {
            self.failed_at = Some(self.t);
            return Err(Error::Breakdown(format!("non-finite values at t = {:.6}", self.t)));
        }
        Ok(())
    }

    /// Steps with `self.dt` (the last one shortened) until `t_final`.
    ///
    /// The observer sees the run at the start, every `n_obs` steps and at the end.
    pub fn evolve(&mut self, t_final: f64, mut observer: impl FnMut(&NlsRun) -> Result<()>) -> Result<()> {
        if t_final < self.t {
            return Err(Error::Domain(format!("cannot evolve backwards from {} to {t_final}", self.t)));
        }
        let tol = 1e-12 * t_final.abs().max(1.0);
        if t_final - self.t <= tol {
            return Ok(());
        }
        observer(self)?;
        let mut since = 0;
        while t_final - self.t > tol {
            let dt = self.dt.min(t_final - self.t);
            self.strang_step(dt)?;
            since += 1;
            let done = t_final - self.t <= tol;
            if since == self.config.n_obs || done {
                observer(self)?;
                since = 0;
            }
        }
        Ok(())
    }

    /// Advances by `t` forward, conjugates, advances by `t` again and conjugates back.
    pub fn time_reversal_defect(u0: &Field, epsilon: f64, m: u32, config: NlsConfig, t: f64) -> Result<f64> {
        let mut run = NlsRun::new(u0, epsilon, m, config)?;
        run.evolve(t, |_| Ok(()))?;
        let mut back = NlsRun::new(&run.u.conj(), epsilon, m, NlsConfig { dt: Some(run.dt), ..config })?;
        back.evolve(t, |_| Ok(()))?;
        let u0 = u0.to_physical();
        Ok(back.u.conj().sub(&u0)?.l2_norm() / u0.l2_norm())
    }

    /// `(ρ, J) = (|u|², Im(ε ū ∇u))`.
    pub fn madelung(&self) -> (Field, Vec<Field>) {
        madelung(&self.u, self.epsilon)
    }
}

/// `(ρ, J) = (|u|², Im(ε ū ∇u))`.
pub fn madelung(u: &Field, epsilon: f64) -> (Field, Vec<Field>) {
    let u = u.to_physical();
    let rho = u.abs_sqr();
    let re = u.real_part();
    let im = u.map(|v| Complex64::new(v.im, 0.0));
    // Im(ū∇u) = Re u ∇Im u − Im u ∇Re u; exactly zero for real u
    let j = gradient(&re)
        .into_iter()
        .zip(gradient(&im))
        .map(|(gr, gi)| {
            let a = re.zip_with(&gi, |p, q| Complex64::new(p.re * q.re, 0.0)).expect("same grid");
            let b = im.zip_with(&gr, |p, q| Complex64::new(p.re * q.re, 0.0)).expect("same grid");
            a.zip_with(&b, |p, q| (p - q) * epsilon).expect("same grid")
        })
        .collect();
    (rho, j)
}

/// `min(c·ε·Δx², 10⁻³ε)`.
pub fn default_dt(grid: &Grid, epsilon: f64, c: f64) -> f64 {
    (c * epsilon * grid.dx() * grid.dx()).min(1e-3 * epsilon)
}

fn tail_of(spectral: &Field) -> f64 {
    let grid = spectral.grid();
    let cutoff = (grid.n() / 3) as i64;
    let mut peak = 0.0f64;
    let mut tail = 0.0f64;
    for (i, v) in spectral.values().iter().enumerate() {
        let a = v.norm_sqr();
        peak = peak.max(a);
        let idx = grid.unflatten(i);
        if (0..grid.dim()).any(|ax| grid.mode_index(idx[ax]).abs() > cutoff) {
            tail = tail.max(a);
        }
    }
    if peak == 0.0 {
        0.0
    } else {
        (tail / peak).sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::initial_data::profile::bump;
    use std::f64::consts::PI;

    fn smooth(g: &Arc<Grid>) -> Field {
        Field::from_fn(g, |x| {
            let r = (x.iter().map(|v| v * v).sum::<f64>()).sqrt();
            Complex64::new(1.5 * bump(r / 2.0), 0.3 * bump(r / 1.5))
        })
    }

    #[test]
    fn plane_wave_free_flow_is_exact() {
        let g = Grid::new(1, 64, 2.0 * PI).unwrap();
        let kk = 5.0;
        let u0 = Field::from_fn(&g, |x| Complex64::cis(kk * x[0]));
        let eps = 0.3;
        let cfg = NlsConfig { linear: true, dt: Some(0.01), ..Default::default() };
        let mut run = NlsRun::new(&u0, eps, 3, cfg).unwrap();
        run.evolve(0.73, |_| Ok(())).unwrap();
        let phase = Complex64::cis(-eps * kk * kk * 0.73 / 2.0);
        let err = run.u.sub(&u0.scale_complex(phase)).unwrap().max_abs();
        assert!(err < 1e-12, "err {err}");
    }

    #[test]
    fn gauge_flow_keeps_modulus() {
        let g = Grid::new(1, 128, 10.0).unwrap();
        let u0 = smooth(&g);
        let mut run = NlsRun::new(&u0, 0.1, 3, NlsConfig::default()).unwrap();
        run.gauge(0.37);
        for (a, b) in run.u.values().iter().zip(u0.values()) {
            assert!((a.norm() - b.norm()).abs() < 1e-14);
        }
    }

    #[test]
    fn mass_is_conserved_over_a_thousand_steps() {
        let g = Grid::new(1, 256, 10.0).unwrap();
        let mut run = NlsRun::new(&smooth(&g), 0.1, 3, NlsConfig::default()).unwrap();
        for _ in 0..1000 {
            let dt = run.dt;
            run.strang_step(dt).unwrap();
        }
        assert!((run.mass() - run.mass0).abs() / run.mass0 < 1e-10);
    }

    #[test]
    fn energy_is_nearly_conserved() {
        let g = Grid::new(1, 256, 10.0).unwrap();
        let mut run = NlsRun::new(&smooth(&g), 0.1, 3, NlsConfig::default()).unwrap();
        run.evolve(0.2, |_| Ok(())).unwrap();
        assert!((run.energy() - run.energy0).abs() / run.energy0 < 1e-4);
    }

    #[test]
    fn energy_error_is_second_order() {
        let g = Grid::new(1, 256, 10.0).unwrap();
        let u0 = smooth(&g);
        let drift = |dt: f64| {
            let mut run = NlsRun::new(&u0, 0.2, 2, NlsConfig { dt: Some(dt), ..Default::default() }).unwrap();
            run.evolve(0.5, |_| Ok(())).unwrap();
            (run.energy() - run.energy0).abs()
        };
        let ratio = drift(0.01) / drift(0.005);
        assert!((3.0..5.0).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn strang_is_second_order() {
        let g = Grid::new(1, 256, 10.0).unwrap();
        let u0 = smooth(&g);
        let at = |dt: f64| {
            let mut run = NlsRun::new(&u0, 0.05, 2, NlsConfig { dt: Some(dt), ..Default::default() }).unwrap();
            run.evolve(0.5, |_| Ok(())).unwrap();
            run.u
        };
        let r = at(0.01 / 8.0);
        let e1 = at(0.01).sub(&r).unwrap().l2_norm();
        let e2 = at(0.005).sub(&r).unwrap().l2_norm();
        let ratio = e1 / e2;
        assert!((4.0 * 0.88..=4.0 * 1.12).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn time_reversal_recovers_data() {
        let g = Grid::new(1, 256, 10.0).unwrap();
        let d = NlsRun::time_reversal_defect(&smooth(&g), 0.1, 3, NlsConfig::default(), 0.2).unwrap();
        assert!(d < 1e-6, "defect {d}");
    }

    #[test]
    fn gauge_invariance() {
        let g = Grid::new(1, 128, 10.0).unwrap();
        let u0 = smooth(&g);
        let c = Complex64::cis(0.9);
        let mut a = NlsRun::new(&u0, 0.1, 3, NlsConfig::default()).unwrap();
        let mut b = NlsRun::new(&u0.scale_complex(c), 0.1, 3, NlsConfig::default()).unwrap();
        a.evolve(0.05, |_| Ok(())).unwrap();
        b.evolve(0.05, |_| Ok(())).unwrap();
        let d = a.u.scale_complex(c).sub(&b.u).unwrap().l2_norm() / a.u.l2_norm();
        assert!(d < 1e-12, "defect {d}");
    }

    #[test]
    fn madelung_of_real_and_wkb_states() {
        let g = Grid::new(1, 512, 10.0).unwrap();
        let eps = 0.1;
        let a = |x: f64| bump(x / 3.0);
        let phi = |x: f64| 0.3 * (2.0 * PI * x / 10.0).sin();
        let real = Field::from_real_fn(&g, |x| a(x[0]));
        let (rho, j) = madelung(&real, eps);
        assert_eq!(j[0].max_abs(), 0.0);
        assert!((rho.integral().re - mass(&real)).abs() < 1e-12);
        let wkb = Field::from_fn(&g, |x| a(x[0]) * Complex64::cis(phi(x[0]) / eps));
        let (rho, j) = madelung(&wkb, eps);
        let mut worst = 0.0f64;
        for i in 0..g.total_points() {
            let x = g.position(i)[0];
            let dphi = 0.3 * 2.0 * PI / 10.0 * (2.0 * PI * x / 10.0).cos();
            worst = worst.max((j[0].values()[i].re - rho.values()[i].re * dphi).abs());
        }
        assert!(worst < 1e-8, "worst {worst}");
    }

    #[test]
    fn evolve_to_now_is_a_no_op() {
        let g = Grid::new(1, 64, 10.0).unwrap();
        let mut run = NlsRun::new(&smooth(&g), 0.1, 3, NlsConfig::default()).unwrap();
        let mut calls = 0;
        run.evolve(0.0, |_| {
            calls += 1;
            Ok(())
        })
        .unwrap();
        assert_eq!((calls, run.steps), (0, 0));
        assert!(run.evolve(-1.0, |_| Ok(())).is_err());
    }

    #[test]
    fn regularized_nonlinearity() {
        assert_eq!(nonlinearity(2.0, 3, 0.0), 8.0);
        assert!((nonlinearity(2.0, 3, 0.5) - 4.0).abs() < 1e-15);
        let y: f64 = 1.7;
        let closed = y.powi(4) / 4.0;
        assert!((potential_density(y, 3, 0.0) - closed).abs() < 1e-15);
        assert!(potential_density(y, 3, 0.5) < closed);
        // δ → 0 recovers the power law
        assert!((potential_density(y, 3, 1e-6) - closed).abs() < 1e-9);
    }

    #[test]
    fn observer_period() {
        let g = Grid::new(1, 64, 10.0).unwrap();
        let cfg = NlsConfig { dt: Some(0.01), n_obs: 5, ..Default::default() };
        let mut run = NlsRun::new(&smooth(&g), 0.1, 3, cfg).unwrap();
        let mut times = Vec::new();
        run.evolve(0.1, |r| {
            times.push(r.t);
            Ok(())
        })
        .unwrap();
        assert_eq!(times.len(), 3);
        assert!((times[2] - 0.1).abs() < 1e-12);
    }
}
