use std::sync::Arc;

use super::solver::{detect_lifespan, evolve, HydroState, SolverConfig};
use crate::error::{Error, Result};
use crate::initial_data::profile::bump;
use crate::initial_data::BubbleLadder;
use crate::spectral::ops::{fractional_derivative, interpolate_at, partial};
use crate::spectral::{Field, Grid};

/// Radius of the smallest ball around `center` holding every sample where `|A|` or `|V|`
/// exceeds `threshold · max|A(0)|`.
pub fn support_radius(state: &HydroState, threshold: f64, center: &[f64]) -> f64 {
    let grid = state.grid();
    let cut = threshold * state.amp0;
    let mut r = 0.0f64;
    for i in 0..grid.total_points() {
        let a = state.big_a.values()[i].norm();
        let v = state.v.iter().map(|c| c.values()[i].norm_sqr()).sum::<f64>().sqrt();
        if a > cut || v > cut {
            r = r.max(grid.distance_to(i, center));
        }
    }
    r
}

/// `‖|∇|^σ V‖₂ + ‖|∇|^σ A‖₂`.
pub fn tame_energy_monitor(state: &HydroState, sigma: u32) -> Result<f64> {
    let s = sigma as f64;
    let v2: f64 =
        state.v.iter().map(|c| fractional_derivative(c, s).map(|f| f.l2_norm().powi(2))).sum::<Result<f64>>()?;
    Ok(v2.sqrt() + fractional_derivative(&state.big_a, s)?.l2_norm())
}

/// `‖curl V‖₂ / (1 + ‖∇V‖₂)`; zero in one dimension.
pub fn curl_defect(state: &HydroState) -> Result<f64> {
    let dim = state.grid().dim();
    if dim == 1 {
        return Ok(0.0);
    }
    let d: Vec<Vec<Field>> =
        state.v.iter().map(|c| (0..dim).map(|j| partial(c, j)).collect::<Result<Vec<_>>>()).collect::<Result<_>>()?;
    let mut curl2 = 0.0;
    let mut grad2 = 0.0;
    for i in 0..dim {
        for j in 0..dim {
            grad2 += d[i][j].l2_norm().powi(2);
            if i < j {
                curl2 += d[i][j].sub(&d[j][i])?.l2_norm().powi(2);
            }
        }
    }
    Ok(curl2.sqrt() / (1.0 + grad2.sqrt()))
}

/// `‖V − ∇φ‖₂ / ‖V‖₂`.
pub fn gradient_consistency(state: &HydroState) -> Result<f64> {
    let mut num = 0.0;
    let mut den = 0.0;
    for (j, vj) in state.v.iter().enumerate() {
        num += vj.sub(&partial(&state.phi, j)?)?.l2_norm().powi(2);
        den += vj.l2_norm().powi(2);
    }
    Ok(if den == 0.0 { 0.0 } else { (num / den).sqrt() })
}

/// Symbol `M(ξ)` acting on `U = (Re A, Im A, V)`.
pub fn symbol_matrix(re_a: f64, im_a: f64, v: &[f64], xi: &[f64], m: u32) -> Vec<Vec<f64>> {
    let d = v.len();
    let n = d + 2;
    let vx: f64 = v.iter().zip(xi).map(|(a, b)| a * b).sum();
    let half_m = m as f64 / 2.0;
    let mut mat = vec![vec![0.0; n]; n];
    mat[0][0] = vx;
    mat[1][1] = vx;
    for j in 0..d {
        mat[0][2 + j] = half_m * re_a * xi[j];
        mat[1][2 + j] = half_m * im_a * xi[j];
        mat[2 + j][0] = 2.0 * re_a * xi[j];
        mat[2 + j][1] = 2.0 * im_a * xi[j];
        mat[2 + j][2 + j] = vx;
    }
    mat
}

/// Largest entry of `S M − (S M)ᵀ` with `S = diag(w_A, w_A, w_V I_d)`.
pub fn symmetrizer_defect(re_a: f64, im_a: f64, v: &[f64], xi: &[f64], m: u32, w_a: f64, w_v: f64) -> f64 {
    let mat = symbol_matrix(re_a, im_a, v, xi, m);
    let n = mat.len();
    let w = |i: usize| if i < 2 { w_a } else { w_v };
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            let sm = w(i) * mat[i][j];
            let smt = w(j) * mat[j][i];
            let scale = sm.abs().max(smt.abs()).max(1.0);
            worst = worst.max((sm - smt).abs() / scale);
        }
    }
    worst
}

/// Discrete energy flux `⟨S U, ∂_t U⟩` and the bound `‖∇U‖_∞ ⟨S U, U⟩`.
pub fn energy_flux(state: &HydroState, w_a: f64, w_v: f64) -> Result<(f64, f64)> {
    let rhs = super::solver::hydro_rhs(&state.v, &state.big_a, state.m, crate::spectral::Dealias::None)?;
    let dx = state.grid().cell_volume();
    let mut flux = 0.0;
    let mut mass = 0.0;
    for p in 0..state.big_a.values().len() {
        let a = state.big_a.values()[p].re;
        flux += w_a * a * rhs.da.values()[p].re;
        mass += w_a * a * a;
        for (vj, dvj) in state.v.iter().zip(&rhs.dv) {
            flux += w_v * vj.values()[p].re * dvj.values()[p].re;
            mass += w_v * vj.values()[p].re.powi(2);
        }
    }
    Ok((flux * dx, state.gradient_sup() * mass * dx))
}

/// Relative defect `‖U_joint − Σ U_single‖₂ / ‖U_joint‖₂` at time `t`.
pub fn superposition_defect(amplitudes: &[Field], m: u32, t: f64, cfg: &SolverConfig) -> Result<f64> {
    let first = amplitudes.first().ok_or_else(|| Error::Domain("superposition needs at least one bubble".into()))?;
    let mut joint_a = Field::zeros(first.grid());
    for a in amplitudes {
        joint_a = joint_a.add(a)?;
    }
    let run = |a: &Field| -> Result<HydroState> {
        let s = HydroState::from_amplitude(a, m)?;
        let end = evolve(&s, t, cfg, |_| {})?;
        if !end.alive {
            return Err(Error::Lifespan(format!(
                "run ended at t = {:.6} before t = {t:.6}",
                end.t_detected.unwrap_or(end.t)
            )));
        }
        Ok(end)
    };
    let joint = run(&joint_a)?;
    if amplitudes.len() == 1 {
        return Ok(0.0);
    }
    let singles = amplitudes.iter().map(run).collect::<Result<Vec<_>>>()?;
    let mut sum_a = Field::zeros(first.grid());
    let mut sum_v = vec![Field::zeros(first.grid()); joint.v.len()];
    for s in &singles {
        sum_a = sum_a.add(&s.big_a)?;
        for (acc, v) in sum_v.iter_mut().zip(&s.v) {
            *acc = acc.add(v)?;
        }
    }
    let mut num = joint.big_a.sub(&sum_a)?.l2_norm().powi(2);
    let mut den = joint.big_a.l2_norm().powi(2);
    for (jv, sv) in joint.v.iter().zip(&sum_v) {
        num += jv.sub(sv)?.l2_norm().powi(2);
        den += jv.l2_norm().powi(2);
    }
    Ok((num / den).sqrt())
}

/// Outcome of comparing a direct solve with a rescaled reference solve.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct ScalingReport {
    pub defect_phi: f64,
    pub defect_a: f64,
    /// Predicted `λ = ε_k h_k² / (ε_ℓ h_ℓ²)`.
    pub time_dilation: f64,
    /// Detected `T_ref / T_direct`, when lifespans were measured.
    pub lifespan_ratio: Option<f64>,
}

/// Checks `φ̆_{ℓ,k}(t,x) = γ φ̆_ℓ(λt, μx)` and `ă_{ℓ,k}(t,x) = β ă_ℓ(λt, μx)`.
///
/// `a_ref` is the profile at unit scale on `ref_grid`; the direct datum `β a_ref(μ·)` is
/// synthesized on `direct_grid` from `profile`. With `β^m = γμ` and `λ = γμ²`.
#[allow(clippy::too_many_arguments)]
pub fn scaling_relation(
    profile: impl Fn(&[f64]) -> f64,
    ref_grid: &Arc<Grid>,
    direct_grid: &Arc<Grid>,
    m: u32,
    beta: f64,
    mu: f64,
    t: f64,
    cfg: &SolverConfig,
    lifespans: Option<f64>,
) -> Result<ScalingReport> {
    let gamma = beta.powi(m as i32) / mu;
    let lambda = gamma * mu * mu;
    let a_ref = Field::from_real_fn(ref_grid, &profile);
    let a_dir = Field::from_real_fn(direct_grid, |x| {
        let y: Vec<f64> = x.iter().map(|v| mu * v).collect();
        beta * profile(&y)
    });
    let s_ref = HydroState::from_amplitude(&a_ref, m)?;
    let s_dir = HydroState::from_amplitude(&a_dir, m)?;
    let end_ref = evolve(&s_ref, lambda * t, cfg, |_| {})?;
    let end_dir = evolve(&s_dir, t, cfg, |_| {})?;
    if !end_ref.alive || !end_dir.alive {
        return Err(Error::Lifespan("scaling comparison time lies beyond a lifespan".into()));
    }
    let pts: Vec<[f64; 3]> = (0..direct_grid.total_points())
        .map(|i| {
            let x = direct_grid.position(i);
            [mu * x[0], mu * x[1], mu * x[2]]
        })
        .collect();
    let rel = |direct: &Field, reference: &Field, scale: f64| -> f64 {
        let interp = interpolate_at(reference, &pts);
        let mut num = 0.0;
        let mut den = 0.0;
        for (d, r) in direct.values().iter().zip(&interp) {
            num += (d - r * scale).norm_sqr();
            den += d.norm_sqr();
        }
        if den == 0.0 {
            num.sqrt()
        } else {
            (num / den).sqrt()
        }
    };
    let defect_phi = rel(&end_dir.phi, &end_ref.phi, gamma);
    let defect_a = rel(&end_dir.amplitude(), &end_ref.amplitude(), beta);
    let lifespan_ratio = match lifespans {
        None => None,
        Some(t_max) => {
            let (t_ref, _) = detect_lifespan(&s_ref, cfg, t_max)?;
            let (t_dir, _) = detect_lifespan(&s_dir, cfg, t_max / lambda)?;
            Some(t_ref / t_dir)
        }
    };
    Ok(ScalingReport { defect_phi, defect_a, time_dilation: lambda, lifespan_ratio })
}

/// [`scaling_relation`] for the unconvolved bubble `ℓ` seen in the frames `ℓ` and `k`.
///
/// The reference grid has `n` points over `ref_length`; the direct grid keeps `n` and
/// stretches the side by `h_ℓ/h_k`, so both discretizations are exactly covariant.
pub fn scaling_relation_check(
    ladder: &BubbleLadder,
    l: usize,
    k: usize,
    t: f64,
    n: usize,
    ref_length: f64,
    cfg: &SolverConfig,
    lifespan_horizon: Option<f64>,
) -> Result<ScalingReport> {
    let dim = ladder.params().dim;
    let mu = ladder.h(k)? / ladder.h(l)?;
    let beta = ladder.frame_amplitude(l, k)?;
    let amp = ladder.config().amplitude;
    let r1 = ladder.config().r1;
    let ref_grid = Grid::new(dim, n, ref_length)?;
    let direct_grid = Grid::new(dim, n, ref_length / mu)?;
    let profile = |x: &[f64]| amp * bump(x.iter().map(|v| v * v).sum::<f64>().sqrt() / r1);
    scaling_relation(profile, &ref_grid, &direct_grid, ladder.params().m, beta, mu, t, cfg, lifespan_horizon)
}

/// One row of the hydrodynamic snapshot dump.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct HydroSnapshot {
    pub t: f64,
    pub a_l2: f64,
    pub v_l2: f64,
    pub grad_sup: f64,
    pub support_radius: f64,
    /// `‖|∇|^σ(V, A)(t)‖ / ‖|∇|^σ A(0)‖` for σ = 0, 1, 2.
    pub tame_ratio: [f64; 3],
}

/// Records a snapshot; `tame0` holds the monitor values at `t = 0`.
pub fn snapshot(state: &HydroState, center: &[f64], threshold: f64, tame0: &[f64; 3]) -> Result<HydroSnapshot> {
    let mut tame_ratio = [0.0; 3];
    for (sigma, slot) in tame_ratio.iter_mut().enumerate() {
        let v = tame_energy_monitor(state, sigma as u32)?;
        *slot = if tame0[sigma] > 0.0 { v / tame0[sigma] } else { 0.0 };
    }
    Ok(HydroSnapshot {
        t: state.t,
        a_l2: state.big_a.l2_norm(),
        v_l2: state.v.iter().map(|c| c.l2_norm().powi(2)).sum::<f64>().sqrt(),
        grad_sup: state.gradient_sup(),
        support_radius: support_radius(state, threshold, center),
        tame_ratio,
    })
}

/// Monitor values `‖|∇|^σ A(0)‖₂`, σ = 0, 1, 2.
pub fn tame_reference(state: &HydroState) -> Result<[f64; 3]> {
    Ok([tame_energy_monitor(state, 0)?, tame_energy_monitor(state, 1)?, tame_energy_monitor(state, 2)?])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::euler::solver::cfl_dt;
    use crate::spectral::Dealias;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn filtered() -> SolverConfig {
        SolverConfig { dealias: Dealias::ExponentialFilter { order: 36, strength: 36.0 }, ..Default::default() }
    }

    fn bump_at(g: &Arc<Grid>, c: f64, amp: f64) -> Field {
        Field::from_real_fn(g, |x| amp * bump(x[0] - c))
    }

    #[test]
    fn symmetrizer_makes_symbols_symmetric() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..1000 {
            let d = rng.gen_range(1..=3);
            let m = rng.gen_range(1..=5);
            let v: Vec<f64> = (0..d).map(|_| rng.gen_range(-3.0..3.0)).collect();
            let xi: Vec<f64> = (0..d).map(|_| rng.gen_range(-3.0..3.0)).collect();
            let (ra, ia) = (rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
            assert!(symmetrizer_defect(ra, ia, &v, &xi, m, 4.0, m as f64) < 1e-15);
        }
        // the reversed block ordering is not a symmetrizer
        assert!(symmetrizer_defect(1.0, 0.5, &[0.3], &[1.0], 3, 3.0, 4.0) > 0.1);
    }

    #[test]
    fn support_radius_basics() {
        let g = Grid::new(1, 256, 8.0).unwrap();
        let s = HydroState::from_amplitude(&bump_at(&g, 0.0, 1.0), 3).unwrap();
        let r0 = support_radius(&s, 1e-8, &[0.0]);
        assert!(r0 < 1.0 && r0 > 0.85);
        let z = HydroState::from_amplitude(&Field::zeros(&g), 3).unwrap();
        assert_eq!(support_radius(&z, 1e-8, &[0.0]), 0.0);
    }

    #[test]
    fn zero_speed_of_propagation() {
        let g = Grid::new(1, 256, 8.0).unwrap();
        let s = HydroState::from_amplitude(&bump_at(&g, 0.0, 1.0), 3).unwrap();
        let cfg = filtered();
        let (t, _) = detect_lifespan(&s, &cfg, 100.0).unwrap();
        let r0 = support_radius(&s, 1e-8, &[0.0]);
        let mut rmax = r0;
        let end = evolve(&s, t / 2.0, &cfg, |st| rmax = rmax.max(support_radius(st, 1e-8, &[0.0]))).unwrap();
        assert!(end.alive);
        assert!(end.v[0].max_abs() > 1e-3);
        assert!(rmax - r0 <= 2.0 * g.dx(), "grew by {}", rmax - r0);
    }

    #[test]
    fn tame_monitor_at_rest_is_amplitude_norm() {
        let g = Grid::new(1, 128, 8.0).unwrap();
        let s = HydroState::from_amplitude(&bump_at(&g, 0.0, 1.5), 2).unwrap();
        for sigma in 0..3 {
            let expect = fractional_derivative(&s.big_a, sigma as f64).unwrap().l2_norm();
            assert!((tame_energy_monitor(&s, sigma).unwrap() - expect).abs() < 1e-14);
        }
    }

    #[test]
    fn superposition_single_disjoint_overlapping() {
        let g = Grid::new(1, 256, 16.0).unwrap();
        let cfg = filtered();
        let one = bump_at(&g, -3.0, 1.0);
        assert_eq!(superposition_defect(std::slice::from_ref(&one), 3, 0.5, &cfg).unwrap(), 0.0);
        let two = bump_at(&g, 3.0, 1.2);
        let joint = HydroState::from_amplitude(&one.add(&two).unwrap(), 3).unwrap();
        let (t, _) = detect_lifespan(&joint, &cfg, 100.0).unwrap();
        let d = superposition_defect(&[one.clone(), two], 3, t / 2.0, &cfg).unwrap();
        assert!(d < 1e-6, "disjoint defect {d}");
        let near = bump_at(&g, -2.5, 1.2);
        let d = superposition_defect(&[one, near], 3, 0.2, &cfg).unwrap();
        assert!(d > 1e-3, "overlapping defect {d}");
    }

    #[test]
    fn scaling_relation_identity_and_rescaled() {
        let profile = |x: &[f64]| 1.5 * bump(x[0]);
        let cfg = SolverConfig::default();
        let g = Grid::new(1, 256, 8.0).unwrap();
        let id = scaling_relation(profile, &g, &g, 3, 1.0, 1.0, 0.5, &cfg, None).unwrap();
        assert!(id.defect_a < 1e-14 && id.defect_phi < 1e-14);
        // covariant grids: direct grid is the reference grid shrunk by μ
        let mu = 4.0;
        let beta = 0.6;
        let gd = Grid::new(1, 256, 8.0 / mu).unwrap();
        let rep = scaling_relation(profile, &g, &gd, 3, beta, mu, 0.5, &cfg, Some(100.0)).unwrap();
        assert!(rep.defect_a < 1e-4 && rep.defect_phi < 1e-4, "{rep:?}");
        let want = 1.0 / rep.time_dilation;
        let got = rep.lifespan_ratio.unwrap();
        // T_ref / T_direct = λ
        assert!((got * want - 1.0).abs() < 0.1, "{got} vs {}", rep.time_dilation);
    }

    #[test]
    fn ladder_scaling_check_adjacent_rungs() {
        use crate::initial_data::{BubbleLadder, LadderConfig, ModelParams};
        let params = ModelParams::new(1, 3, 0.1, 1.0).unwrap();
        let lc = LadderConfig::geometric(3, 1.0, 0.25);
        let ladder = BubbleLadder::new(params, lc).unwrap();
        let cfg = SolverConfig::default();
        let same = scaling_relation_check(&ladder, 2, 2, 0.1, 256, 8.0, &cfg, None).unwrap();
        assert!(same.defect_a < 1e-14 && same.defect_phi < 1e-14);
        let rep = scaling_relation_check(&ladder, 1, 2, 0.5, 256, 8.0, &cfg, None).unwrap();
        assert!(rep.defect_a < 1e-4 && rep.defect_phi < 1e-4, "{rep:?}");
        let want = ladder.epsilon(2).unwrap() * ladder.h(2).unwrap().powi(2)
            / (ladder.epsilon(1).unwrap() * ladder.h(1).unwrap().powi(2));
        assert!((rep.time_dilation / want - 1.0).abs() < 1e-12);
    }

    #[test]
    fn curl_free_in_two_dimensions() {
        let g = Grid::new(2, 64, 8.0).unwrap();
        let a = Field::from_real_fn(&g, |x| 1.5 * bump((x[0] * x[0] + 2.0 * x[1] * x[1]).sqrt()));
        let mut s = HydroState::from_amplitude(&a, 2).unwrap();
        let cfg = SolverConfig { resolution_tol: None, ..Default::default() };
        for _ in 0..20 {
            s = crate::euler::step(&s, cfl_dt(&s, &cfg), &cfg).unwrap();
            assert!(curl_defect(&s).unwrap() < 1e-6);
        }
        assert!(s.v[0].max_abs() > 0.0);
    }

    #[test]
    fn energy_flux_is_tamed_by_gradient() {
        let g = Grid::new(1, 256, 8.0).unwrap();
        let mut s = HydroState::from_amplitude(&bump_at(&g, 0.0, 1.5), 3).unwrap();
        let cfg = SolverConfig::default();
        for _ in 0..10 {
            s = crate::euler::step(&s, cfl_dt(&s, &cfg), &cfg).unwrap();
        }
        let (flux, bound) = energy_flux(&s, 4.0, 3.0).unwrap();
        assert!(flux.abs() <= bound, "{flux} vs {bound}");
    }
}
