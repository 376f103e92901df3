use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::ops::{dealias, partial};
use crate::spectral::{Dealias, Field, Grid};

/// Numerical knobs of the hydrodynamic solver.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    /// CFL factor in `(0, 1]`.
    #[serde(default = "default_safety")]
    pub dt_safety: f64,
    #[serde(default)]
    pub dealias: Dealias,
    /// Blow-up is declared once `‖∇U‖_∞` exceeds this multiple of its initial value.
    #[serde(default = "default_threshold")]
    pub blowup_threshold: f64,
    /// Also declare the end of the smooth window once the top of the retained
    /// spectrum of `A` or `V` exceeds this fraction of its peak.
    #[serde(default = "default_resolution_tol")]
    pub resolution_tol: Option<f64>,
    /// Upper bound on the time step.
    #[serde(default)]
    pub max_dt: Option<f64>,
}

fn default_safety() -> f64 {
    0.5
}
fn default_threshold() -> f64 {
    1e3
}
fn default_resolution_tol() -> Option<f64> {
    Some(1e-3)
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            dt_safety: default_safety(),
            dealias: Dealias::TwoThirds,
            blowup_threshold: default_threshold(),
            resolution_tol: default_resolution_tol(),
            max_dt: None,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt_safety > 0.0 && self.dt_safety <= 1.0) {
            return Err(Error::Config(format!("dt_safety must lie in (0,1], got {}", self.dt_safety)));
        }
        if !(self.blowup_threshold > 1.0) {
            return Err(Error::Config(format!("blowup_threshold must exceed 1, got {}", self.blowup_threshold)));
        }
        Ok(())
    }
}

/// Why a run stopped being trusted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum LifespanCause {
    GradientGrowth,
    NonFinite,
    Resolution,
}

/// `(V, A, φ)` at time `t`; `A = a^m`, `V = ∇φ`.
#[derive(Debug, Clone)]
pub struct HydroState {
    pub t: f64,
    pub v: Vec<Field>,
    pub big_a: Field,
    pub phi: Field,
    pub m: u32,
    pub alive: bool,
    pub t_detected: Option<f64>,
    pub cause: Option<LifespanCause>,
    /// `‖∇U(0)‖_∞`.
    pub grad0: f64,
    /// `max |A(0)|`.
    pub amp0: f64,
}

impl HydroState {
    /// `V = 0`, `φ = 0`, `A = a_init^m`.
    pub fn from_amplitude(a_init: &Field, m: u32) -> Result<Self> {
        let grid = a_init.grid();
        let a = a_init.to_physical();
        if a.values().iter().any(|v| v.re < -1e-14 || v.im.abs() > 1e-12) {
            return Err(Error::Domain("initial amplitude must be real and nonnegative".into()));
        }
        let big_a = a.map(|v| Complex64::new(v.re.max(0.0).powi(m as i32), 0.0));
        let zero = Field::zeros(grid);
        let mut s = Self {
            t: 0.0,
            v: vec![zero.clone(); grid.dim()],
            big_a,
            phi: zero,
            m,
            alive: true,
            t_detected: None,
            cause: None,
            grad0: 0.0,
            amp0: 0.0,
        };
        s.grad0 = s.gradient_sup();
        s.amp0 = s.big_a.max_abs();
        Ok(s)
    }

    pub fn grid(&self) -> &Arc<Grid> {
        self.big_a.grid()
    }

    /// `a = A^{1/m}` on `A ≥ 0`, zero where ringing made `A` negative.
    pub fn amplitude(&self) -> Field {
        let inv = 1.0 / self.m as f64;
        self.big_a.map(|v| Complex64::new(if v.re > 0.0 { v.re.powf(inv) } else { 0.0 }, 0.0))
    }

    /// `‖∇U‖_∞` over all components of `V` and `A`.
    pub fn gradient_sup(&self) -> f64 {
        let dim = self.grid().dim();
        let mut g = 0.0f64;
        for f in self.v.iter().chain(std::iter::once(&self.big_a)) {
            let s = f.to_spectral();
            for a in 0..dim {
                let d = partial(&s, a).expect("axis in range").into_physical();
                g = g.max(d.max_abs());
            }
        }
        g
    }

    /// Largest characteristic speed `max|V| + 2 max|A|`.
    pub fn max_speed(&self) -> f64 {
        let n = self.big_a.values().len();
        let vmax =
            (0..n).map(|i| self.v.iter().map(|c| c.values()[i].re.powi(2)).sum::<f64>().sqrt()).fold(0.0, f64::max);
        vmax + 2.0 * self.big_a.max_abs()
    }

    fn has_non_finite(&self) -> bool {
        self.big_a.has_non_finite() || self.phi.has_non_finite() || self.v.iter().any(|c| c.has_non_finite())
    }
}

/// Time derivatives of `(V, A, φ)`.
#[derive(Debug, Clone)]
pub struct HydroRhs {
    pub dv: Vec<Field>,
    pub da: Field,
    pub dphi: Field,
}

fn real(f: Field) -> Field {
    f.real_part()
}

/// `∂_tV = −V·∇V − ∇(A²)`, `∂_tA = −V·∇A − (m/2) A div V`, `∂_tφ = −(½|V|² + A²)`.
pub fn hydro_rhs(v: &[Field], big_a: &Field, m: u32, rule: Dealias) -> Result<HydroRhs> {
    let grid = Arc::clone(big_a.grid());
    let dim = grid.dim();
    if v.len() != dim {
        return Err(Error::Structural(format!("{} velocity components on a {dim}-d grid", v.len())));
    }
    let n = grid.total_points();
    let a_s = big_a.to_spectral();
    let grad_a: Vec<Field> = (0..dim).map(|j| partial(&a_s, j).map(Field::into_physical)).collect::<Result<_>>()?;
    let v_s: Vec<Field> = v.iter().map(Field::to_spectral).collect();
    // dv[i][j] = ∂_j V_i
    let dv: Vec<Vec<Field>> = v_s
        .iter()
        .map(|vi| (0..dim).map(|j| partial(vi, j).map(Field::into_physical)).collect::<Result<Vec<_>>>())
        .collect::<Result<_>>()?;
    let a2 = big_a.map(|x| Complex64::new(x.re * x.re, 0.0));
    let a2_s = a2.to_spectral();
    let grad_a2: Vec<Field> = (0..dim).map(|j| partial(&a2_s, j).map(Field::into_physical)).collect::<Result<_>>()?;

    let av = big_a.values();
    let mut out_v = Vec::with_capacity(dim);
    for i in 0..dim {
        let mut vals = vec![Complex64::new(0.0, 0.0); n];
        for (p, slot) in vals.iter_mut().enumerate() {
            let mut adv = 0.0;
            for j in 0..dim {
                adv += v[j].values()[p].re * dv[i][j].values()[p].re;
            }
            *slot = Complex64::new(-adv - grad_a2[i].values()[p].re, 0.0);
        }
        out_v.push(real(dealias(&Field::new(Arc::clone(&grid), vals, crate::spectral::Domain::Physical)?, rule)));
    }
    let mut da = vec![Complex64::new(0.0, 0.0); n];
    let mut dphi = vec![Complex64::new(0.0, 0.0); n];
    let half_m = m as f64 / 2.0;
    for p in 0..n {
        let mut adv = 0.0;
        let mut div = 0.0;
        let mut v2 = 0.0;
        for j in 0..dim {
            let vj = v[j].values()[p].re;
            adv += vj * grad_a[j].values()[p].re;
            div += dv[j][j].values()[p].re;
            v2 += vj * vj;
        }
        let a = av[p].re;
        da[p] = Complex64::new(-adv - half_m * a * div, 0.0);
        dphi[p] = Complex64::new(-(0.5 * v2 + a * a), 0.0);
    }
    let phys = crate::spectral::Domain::Physical;
    Ok(HydroRhs {
        dv: out_v,
        da: real(dealias(&Field::new(Arc::clone(&grid), da, phys)?, rule)),
        dphi: real(dealias(&Field::new(grid, dphi, phys)?, rule)),
    })
}

fn axpy(x: &Field, a: f64, y: &Field) -> Field {
    // x + a y, same grid by construction
    x.zip_with(y, |p, q| p + q * a).expect("same grid")
}

/// CFL time step, optionally capped.
pub fn cfl_dt(state: &HydroState, cfg: &SolverConfig) -> f64 {
    let speed = state.max_speed().max(1e-12);
    let mut dt = cfg.dt_safety * state.grid().dx() / speed;
    // the nonlinear time scale 1/‖∇U‖ also limits accuracy
    let g = state.gradient_sup();
    if g > 0.0 {
        dt = dt.min(cfg.dt_safety * 0.25 / g);
    }
    if let Some(cap) = cfg.max_dt {
        dt = dt.min(cap);
    }
    dt
}

/// Relative size of the top sixth of the retained spectrum.
pub fn retained_tail(f: &Field, rule: Dealias) -> f64 {
    let s = f.to_spectral();
    let grid = s.grid();
    let n = grid.n() as i64;
    let top = match rule {
        Dealias::TwoThirds => n / 3,
        _ => n / 2,
    };
    let lo = top - top / 6;
    let mut peak = 0.0f64;
    let mut tail = 0.0f64;
    for (i, v) in s.values().iter().enumerate() {
        let idx = grid.unflatten(i);
        let kmax = (0..grid.dim()).map(|a| grid.mode_index(idx[a]).abs()).max().unwrap_or(0);
        let a = v.norm();
        peak = peak.max(a);
        if kmax > lo && kmax <= top {
            tail = tail.max(a);
        }
    }
    if peak == 0.0 {
        0.0
    } else {
        tail / peak
    }
}

/// One classical RK4 step; flags the end of the lifespan instead of failing.
pub fn step(state: &HydroState, dt: f64, cfg: &SolverConfig) -> Result<HydroState> {
    if !state.alive {
        return Err(Error::Lifespan(format!("state left its lifespan at t = {:?}", state.t_detected)));
    }
    if !(dt > 0.0) {
        return Err(Error::Domain(format!("time step must be positive, got {dt}")));
    }
    let m = state.m;
    let rule = cfg.dealias;
    let stage = |v: &[Field], a: &Field| hydro_rhs(v, a, m, rule);
    let shift = |s: &HydroState, k: &HydroRhs, c: f64| -> (Vec<Field>, Field) {
        (s.v.iter().zip(&k.dv).map(|(x, y)| axpy(x, c, y)).collect(), axpy(&s.big_a, c, &k.da))
    };
    let k1 = stage(&state.v, &state.big_a)?;
    let (v2, a2) = shift(state, &k1, 0.5 * dt);
    let k2 = stage(&v2, &a2)?;
    let (v3, a3) = shift(state, &k2, 0.5 * dt);
    let k3 = stage(&v3, &a3)?;
    let (v4, a4) = shift(state, &k3, dt);
    let k4 = stage(&v4, &a4)?;
    let combine = |x: &Field, a: &Field, b: &Field, c: &Field, d: &Field| -> Field {
        let n = x.values().len();
        let mut vals = Vec::with_capacity(n);
        for p in 0..n {
            let inc = a.values()[p] + 2.0 * b.values()[p] + 2.0 * c.values()[p] + d.values()[p];
            vals.push(Complex64::new((x.values()[p] + inc * (dt / 6.0)).re, 0.0));
        }
        Field::new(Arc::clone(x.grid()), vals, crate::spectral::Domain::Physical).expect("same grid")
    };
    let mut next = state.clone();
    next.v = (0..state.v.len()).map(|i| combine(&state.v[i], &k1.dv[i], &k2.dv[i], &k3.dv[i], &k4.dv[i])).collect();
    next.big_a = combine(&state.big_a, &k1.da, &k2.da, &k3.da, &k4.da);
    next.phi = combine(&state.phi, &k1.dphi, &k2.dphi, &k3.dphi, &k4.dphi);
    next.t = state.t + dt;

    let cause = if next.has_non_finite() {
        Some(LifespanCause::NonFinite)
    } else if state.grad0 > 0.0 && next.gradient_sup() > cfg.blowup_threshold * state.grad0 {
        Some(LifespanCause::GradientGrowth)
    } else if let Some(tol) = cfg.resolution_tol {
        let tail =
            std::iter::once(&next.big_a).chain(next.v.iter()).map(|f| retained_tail(f, rule)).fold(0.0, f64::max);
        (tail > tol).then_some(LifespanCause::Resolution)
    } else {
        None
    };
    if let Some(c) = cause {
        next.alive = false;
        next.t_detected = Some(next.t);
        next.cause = Some(c);
    }
    Ok(next)
}

/// Advances to `t_final` (the last step is shortened to land on it).
///
/// Stops early, without error, if the lifespan ends; check `alive` afterwards.
pub fn evolve(
    state: &HydroState,
    t_final: f64,
    cfg: &SolverConfig,
    mut observer: impl FnMut(&HydroState),
) -> Result<HydroState> {
    cfg.validate()?;
    let mut s = state.clone();
    observer(&s);
    while s.alive && s.t < t_final - 1e-14 * t_final.max(1.0) {
        let dt = cfl_dt(&s, cfg).min(t_final - s.t);
        s = step(&s, dt, cfg)?;
        observer(&s);
    }
    Ok(s)
}

/// Runs until the lifespan ends and returns `T_detected`.
pub fn detect_lifespan(state: &HydroState, cfg: &SolverConfig, t_max: f64) -> Result<(f64, LifespanCause)> {
    let end = evolve(state, t_max, cfg, |_| {})?;
    match (end.t_detected, end.cause) {
        (Some(t), Some(c)) => Ok((t, c)),
        _ => Err(Error::Lifespan(format!("no loss of smoothness detected before t = {t_max}"))),
    }
}

/// Same as [`evolve`] but fails if the lifespan ends before `t_final`.
pub fn evolve_within_lifespan(state: &HydroState, t_final: f64, cfg: &SolverConfig) -> Result<HydroState> {
    let end = evolve(state, t_final, cfg, |_| {})?;
    if !end.alive {
        return Err(Error::Lifespan(format!(
            "lifespan ended at t = {:.6} before the requested t = {t_final:.6}",
            end.t_detected.unwrap_or(end.t)
        )));
    }
    Ok(end)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::initial_data::{make_profile, ProfileKind};

    fn bump_state(dim: usize, n: usize, length: f64, amp: f64, m: u32) -> HydroState {
        let g = Grid::new(dim, n, length).unwrap();
        let a = make_profile(&g, ProfileKind::Bump, 1.0, &vec![0.0; dim]).unwrap().scale(amp);
        HydroState::from_amplitude(&a, m).unwrap()
    }

    fn fixed_steps(s: &HydroState, dt: f64, n: usize, cfg: &SolverConfig) -> HydroState {
        let mut s = s.clone();
        for _ in 0..n {
            s = step(&s, dt, cfg).unwrap();
        }
        s
    }

    fn quiet() -> SolverConfig {
        SolverConfig { resolution_tol: None, blowup_threshold: 1e12, ..Default::default() }
    }

    #[test]
    fn zero_data_stays_zero() {
        let g = Grid::new(2, 16, 6.0).unwrap();
        let s = HydroState::from_amplitude(&Field::zeros(&g), 3).unwrap();
        let end = fixed_steps(&s, 0.1, 20, &SolverConfig::default());
        assert!(end.alive);
        assert_eq!(end.big_a.max_abs(), 0.0);
        assert!(end.v.iter().all(|v| v.max_abs() == 0.0));
        assert_eq!(end.phi.max_abs(), 0.0);
    }

    #[test]
    fn constant_state_is_stationary() {
        let g = Grid::new(1, 32, 4.0).unwrap();
        let a = Field::constant(&g, Complex64::new(0.7, 0.0));
        let s = HydroState::from_amplitude(&a, 2).unwrap();
        let rhs = hydro_rhs(&s.v, &s.big_a, 2, Dealias::TwoThirds).unwrap();
        assert!(rhs.dv[0].max_abs() < 1e-14);
        assert!(rhs.da.max_abs() < 1e-14);
    }

    #[test]
    fn rhs_at_rest_is_pressure_gradient() {
        let s = bump_state(1, 256, 8.0, 2.0, 3);
        let rhs = hydro_rhs(&s.v, &s.big_a, 3, Dealias::None).unwrap();
        assert!(rhs.da.max_abs() < 1e-14);
        // −∂_x(A²) from the closed form of the bump
        let g = s.grid();
        let mut worst = 0.0f64;
        for i in 0..g.total_points() {
            let x = g.position(i)[0];
            let exact = if x.abs() < 1.0 {
                let q = 1.0 - x * x;
                let a2 = (2.0f64 * (-1.0 / q).exp()).powi(6);
                -a2 * 6.0 * (-2.0 * x / (q * q))
            } else {
                0.0
            };
            worst = worst.max((rhs.dv[0].values()[i].re - exact).abs());
        }
        assert!(worst < 1e-6 * s.amp0 * s.amp0, "worst {worst}");
    }

    #[test]
    fn from_amplitude_raises_to_m() {
        let g = Grid::new(1, 16, 4.0).unwrap();
        let a = Field::from_real_fn(&g, |x| 1.0 + 0.5 * (x[0] * std::f64::consts::PI / 2.0).cos());
        let s = HydroState::from_amplitude(&a, 3).unwrap();
        for (p, q) in a.values().iter().zip(s.big_a.values()) {
            assert!((p.re.powi(3) - q.re).abs() < 1e-14);
        }
        let back = s.amplitude();
        for (p, q) in a.values().iter().zip(back.values()) {
            assert!((p.re - q.re).abs() < 1e-14);
        }
        let neg = a.scale(-1.0);
        assert!(matches!(HydroState::from_amplitude(&neg, 3), Err(Error::Domain(_))));
    }

    #[test]
    fn rk4_is_fourth_order() {
        let s = bump_state(1, 128, 8.0, 2.0, 2);
        let cfg = quiet();
        let t = 0.4;
        let run = |n: usize| fixed_steps(&s, t / n as f64, n, &cfg);
        let (c, f, r) = (run(8), run(16), run(32));
        let e1 = c.big_a.sub(&r.big_a).unwrap().l2_norm();
        let e2 = f.big_a.sub(&r.big_a).unwrap().l2_norm();
        let ratio = e1 / e2;
        assert!((12.0..=20.0).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn velocity_stays_a_gradient_of_phi() {
        let s = bump_state(1, 256, 8.0, 1.0, 3);
        let cfg = SolverConfig::default();
        let mut st = s.clone();
        for _ in 0..100 {
            st = step(&st, 0.02, &cfg).unwrap();
        }
        assert!(st.alive);
        assert!(st.v[0].max_abs() > 0.0);
        let defect = crate::euler::gradient_consistency(&st).unwrap();
        assert!(defect < 1e-6, "defect {defect}");
    }

    #[test]
    fn default_bump_has_finite_lifespan() {
        let s = bump_state(1, 256, 8.0, 1.0, 3);
        let (t, cause) = detect_lifespan(&s, &SolverConfig::default(), 100.0).unwrap();
        assert!(t.is_finite() && t > 0.0);
        assert_eq!(cause, LifespanCause::Resolution);
    }

    #[test]
    fn lifespan_is_stable_under_refinement() {
        let cfg = SolverConfig::default();
        let t1 = detect_lifespan(&bump_state(1, 1024, 8.0, 1.0, 3), &cfg, 100.0).unwrap().0;
        let t2 = detect_lifespan(&bump_state(1, 2048, 8.0, 1.0, 3), &cfg, 100.0).unwrap().0;
        assert!((t1 - t2).abs() / t2 < 0.1, "{t1} vs {t2}");
    }

    #[test]
    fn dead_state_refuses_to_step() {
        let mut s = bump_state(1, 64, 8.0, 1.0, 3);
        s.alive = false;
        assert!(matches!(step(&s, 0.1, &SolverConfig::default()), Err(Error::Lifespan(_))));
        assert!(matches!(step(&bump_state(1, 64, 8.0, 1.0, 3), -1.0, &SolverConfig::default()), Err(Error::Domain(_))));
    }

    #[test]
    fn evolve_lands_on_final_time() {
        let s = bump_state(1, 128, 8.0, 1.0, 3);
        let mut count = 0;
        let end = evolve(&s, 0.37, &SolverConfig::default(), |_| count += 1).unwrap();
        assert!((end.t - 0.37).abs() < 1e-12);
        assert!(count >= 2);
        let same = evolve(&s, 0.0, &SolverConfig::default(), |_| {}).unwrap();
        assert_eq!(same.t, 0.0);
    }
}
