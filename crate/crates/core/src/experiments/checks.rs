use rayon::prelude::*;

use super::config::{ExperimentConfig, ExperimentKind};
use super::fit::log_log_fit;
use super::report::{Criterion, ExperimentOutput, FitRecord, Params, Summary, Table};
use crate::diagnostics::commutator_check;
use crate::error::{Error, Result};
use crate::euler::{
    detect_lifespan, evolve, snapshot, superposition_defect, tame_reference, HydroSnapshot, HydroState,
};
use crate::initial_data::datum::component_grid;
use crate::initial_data::profile::bump;
use crate::initial_data::{make_cutoff, verify_bubble_norms, BubbleNormRow};
use crate::spectral::besov::random_band_limited;
use crate::spectral::{besov_norm_2nd_diff, sobolev_norm, Field, Grid};

fn base_params(cfg: &ExperimentConfig, n: usize) -> Params {
    Params { d: cfg.model.dim, m: cfg.model.m, s: cfg.model.s, n, ..Default::default() }
}

fn median(v: &[f64]) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(|a, b| a.total_cmp(b));
    let n = s.len();
    if n % 2 == 1 {
        s[n / 2]
    } else {
        0.5 * (s[n / 2 - 1] + s[n / 2])
    }
}

/// Support trace of a single bubble and the two-bubble superposition defect.
pub fn run_zero_speed(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    let ladder = cfg.build_ladder()?;
    let spec = &cfg.zero_speed;
    let n = cfg.grid_points()?;
    let mut table =
        Table::new(&["t", "support_radius", "growth_cells", "a_l2", "v_l2", "grad_sup", "tame_0", "tame_1", "tame_2"]);
    let mut summary = Summary::new(ExperimentKind::ZeroSpeed.name());
    if ladder.rungs() == 0 {
        summary.notes.push("empty ladder: nothing propagates".into());
        return Ok(ExperimentOutput { table, summary });
    }
    let grid = Grid::new(cfg.model.dim, n, cfg.grid.length)?;
    let dim = cfg.model.dim;
    let (amp, r1) = (ladder.config().amplitude, ladder.config().r1);
    let bubble_at = |c: f64, a: f64| {
        Field::from_real_fn(&grid, |x| {
            let mut r2 = grid.periodic_delta(x[0], c).powi(2);
            r2 += x[1..dim].iter().map(|v| v * v).sum::<f64>();
            a * bump(r2.sqrt() / r1)
        })
    };
    let m = cfg.model.m;
    let center = [0.0; 3];

    let h0 = HydroState::from_amplitude(&bubble_at(0.0, amp), m)?;
    let (t_single, _) = detect_lifespan(&h0, &cfg.hydro, cfg.lifespan_horizon)?;
    let tame0 = tame_reference(&h0)?;
    // the observer also sees the initial state
    let mut snaps: Vec<Result<HydroSnapshot>> = Vec::new();
    let end = evolve(&h0, t_single / 2.0, &cfg.hydro, |st| {
        snaps.push(snapshot(st, &center[..dim], spec.threshold, &tame0));
    })?;
    if !end.alive {
        return Err(Error::Lifespan(format!("single bubble died at t = {:.6}", end.t)));
    }
    let snaps = snaps.into_iter().collect::<Result<Vec<_>>>()?;
    let dx = grid.dx();
    let r0 = snaps[0].support_radius;
    let mut prev_t = 0.0;
    let h_k = ladder.h(cfg.active_rung(&ladder))?;
    for s in &snaps {
        let p = Params { h_k: Some(h_k), dt: Some(s.t - prev_t), ..base_params(cfg, n) };
        prev_t = s.t;
        table.push(
            &p,
            &[
                s.t,
                s.support_radius,
                (s.support_radius - r0) / dx,
                s.a_l2,
                s.v_l2,
                s.grad_sup,
                s.tame_ratio[0],
                s.tame_ratio[1],
                s.tame_ratio[2],
            ],
        );
    }
    let growth = snaps.iter().map(|s| s.support_radius).fold(r0, f64::max) - r0;
    summary.values.insert("t_detected_single".into(), t_single);
    summary.push(Criterion::at_most("support_growth_cells", growth / dx, spec.max_growth_cells));
    let tame = snaps.iter().flat_map(|s| s.tame_ratio).fold(0.0, f64::max);
    summary.push(Criterion::at_most("tame_ratio_single", tame, 10.0).informational());

    let a = bubble_at(-0.5 * spec.separation, amp);
    let b = bubble_at(0.5 * spec.separation, spec.second_amplitude * amp);
    let joint = HydroState::from_amplitude(&a.add(&b)?, m)?;
    let (t_joint, _) = detect_lifespan(&joint, &cfg.hydro, cfg.lifespan_horizon)?;
    let defect = superposition_defect(&[a, b], m, t_joint / 2.0, &cfg.hydro)?;
    summary.values.insert("t_detected_pair".into(), t_joint);
    summary.push(Criterion::at_most("superposition_defect", defect, spec.max_defect));
    Ok(ExperimentOutput { table, summary })
}

/// Splits the bubble-norm table into the low-mode, high-mode and same-scale laws.
pub fn bubble_norm_rows(cfg: &ExperimentConfig) -> Result<Vec<BubbleNormRow>> {
    let ladder = cfg.build_ladder()?;
    let spec = &cfg.bubble_norms;
    let frames: Vec<usize> = if spec.frames.is_empty() { (1..=ladder.rungs()).collect() } else { spec.frames.clone() };
    let s = cfg.model.s;
    let jobs: Vec<(usize, f64, bool)> =
        frames.iter().flat_map(|&k| [(k, s + spec.low_offset, true), (k, spec.high_s_prime, false)]).collect();
    let tables = jobs
        .par_iter()
        .map(|&(k, sp, low)| {
            let rows = verify_bubble_norms(&ladder, k, sp, spec.max_n)?;
            Ok(rows.into_iter().filter(|r| if low { r.l <= r.k } else { r.l > r.k }).collect::<Vec<_>>())
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(tables.into_iter().flatten().collect())
}

/// Low modes (`ℓ < k`): exponent of `h_k/h_ℓ`. High modes (`ℓ > k`): exponent of `h_ℓ/h_k`.
pub fn run_bubble_norms(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    let rows = bubble_norm_rows(cfg)?;
    let spec = &cfg.bubble_norms;
    let mut table = Table::new(&[
        "l",
        "k",
        "s_prime",
        "scale_ratio",
        "log_ratio",
        "measured",
        "predicted",
        "branch",
        "law_x",
        "law_y",
    ]);
    let mut summary = Summary::new(ExperimentKind::BubbleNorms.name());
    if rows.is_empty() {
        return Ok(ExperimentOutput { table, summary });
    }
    let ladder = cfg.build_ladder()?;
    // every norm is divided by its log ratio, leaving a pure power of the scale ratio
    let law = |r: &BubbleNormRow| {
        let x = if r.l > r.k { 1.0 / r.scale_ratio } else { r.scale_ratio };
        (x, r.measured / r.log_ratio)
    };
    for r in &rows {
        let n = component_grid(&ladder, r.l, r.k, spec.max_n)?.n();
        let p = Params { sigma: Some(r.s_prime), h_k: Some(ladder.h(r.k)?), ..base_params(cfg, n) };
        let (x, y) = law(r);
        let cells =
            [r.l as f64, r.k as f64, r.s_prime, r.scale_ratio, r.log_ratio, r.measured, r.predicted, branch(r), x, y];
        table.push(&p, &cells);
    }
    let s = cfg.model.s;
    let mut fit_of = |name: &str, side: f64, target: f64| -> Result<()> {
        let (x, y): (Vec<f64>, Vec<f64>) = rows.iter().filter(|r| branch(r) == side).map(law).unzip();
        if x.len() < 3 {
            summary.notes.push(format!("{name}: only {} points, no fit", x.len()));
            return Ok(());
        }
        let fit = log_log_fit(&x, &y)?;
        summary.push(Criterion::within(name, fit.exponent, target, spec.tolerance));
        summary.fits.push(FitRecord {
            name: name.into(),
            x_column: "law_x".into(),
            y_column: "law_y".into(),
            filter: [("branch".to_string(), side)].into_iter().collect(),
            fit,
            target: Some(target),
            tolerance: Some(spec.tolerance),
        });
        Ok(())
    };
    fit_of("low_mode_exponent", -1.0, spec.low_offset)?;
    fit_of("high_mode_exponent", 1.0, s)?;
    let same: Vec<f64> = rows.iter().filter(|r| r.l == r.k).map(|r| r.measured).collect();
    if !same.is_empty() {
        let spread = same.iter().copied().fold(0.0, f64::max) / same.iter().copied().fold(f64::INFINITY, f64::min);
        summary.push(Criterion::at_most("same_scale_spread", spread, 1.1));
    }
    Ok(ExperimentOutput { table, summary })
}

/// −1 below the active rung, 0 at it, +1 above.
fn branch(r: &BubbleNormRow) -> f64 {
    match r.l.cmp(&r.k) {
        std::cmp::Ordering::Less => -1.0,
        std::cmp::Ordering::Equal => 0.0,
        std::cmp::Ordering::Greater => 1.0,
    }
}

/// Second-difference norm against the Fourier norm on random band-limited fields.
pub fn run_besov_vs_fourier(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    let spec = &cfg.besov;
    let mut table = Table::new(&["sample", "delta", "besov", "fourier", "rel_diff"]);
    let mut summary = Summary::new(ExperimentKind::BesovVsFourier.name());
    if spec.sigmas.is_empty() || spec.samples == 0 {
        return Ok(ExperimentOutput { table, summary });
    }
    let grid = Grid::new(cfg.model.dim, spec.n, spec.length)?;
    let max_index = spec.max_index.unwrap_or(spec.n as i64 / 8);
    let delta = spec.delta.unwrap_or(spec.length / 8.0);
    let fields: Vec<Field> =
        (0..spec.samples).map(|i| random_band_limited(&grid, max_index, cfg.seed.wrapping_add(i as u64))).collect();
    let jobs: Vec<(usize, f64)> = (0..spec.samples).flat_map(|i| spec.sigmas.iter().map(move |s| (i, *s))).collect();
    let results = jobs
        .par_iter()
        .map(|&(i, sigma)| {
            let b = besov_norm_2nd_diff(&fields[i], sigma, delta)?;
            let h = sobolev_norm(&fields[i], sigma, true)?;
            Ok((b, h))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut worst: f64 = 0.0;
    for (&(i, sigma), (b, h)) in jobs.iter().zip(&results) {
        let rel = (b - h).abs() / h;
        worst = worst.max(rel);
        let p = Params { sigma: Some(sigma), ..base_params(cfg, spec.n) };
        table.push(&p, &[i as f64, delta, *b, *h, rel]);
    }
    summary.push(Criterion::at_most("max_relative_difference", worst, spec.tolerance));
    Ok(ExperimentOutput { table, summary })
}

/// Normalized commutator `‖[|∇|^α, χ_R] f‖ R^α / (‖χ_R‖_{W^{1,∞}} ‖f‖)` over the radius sweep.
pub fn run_commutator_sweep(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    let spec = &cfg.commutator;
    let mut table = Table::new(&["alpha", "radius", "ratio"]);
    let mut summary = Summary::new(ExperimentKind::CommutatorSweep.name());
    if spec.radii.is_empty() || spec.alphas.is_empty() {
        return Ok(ExperimentOutput { table, summary });
    }
    let grid = Grid::new(cfg.model.dim, spec.n, spec.length)?;
    if let Some(r) = spec.radii.iter().find(|r| 4.0 * **r >= spec.length) {
        return Err(Error::Domain(format!("cutoff of radius {r} does not fit a torus of side {}", spec.length)));
    }
    let f = random_band_limited(&grid, spec.max_index, cfg.seed);
    let origin = vec![0.0; cfg.model.dim];
    let jobs: Vec<(f64, f64)> = spec.alphas.iter().flat_map(|a| spec.radii.iter().map(move |r| (*a, *r))).collect();
    let ratios = jobs
        .par_iter()
        .map(|&(alpha, r)| commutator_check(&f, &make_cutoff(&grid, &origin, r, 1.0, 2.0), r, alpha))
        .collect::<Result<Vec<_>>>()?;
    for (&(alpha, r), q) in jobs.iter().zip(&ratios) {
        table.push(&base_params(cfg, spec.n), &[alpha, r, *q]);
    }
    for &alpha in &spec.alphas {
        let vals: Vec<f64> = jobs.iter().zip(&ratios).filter(|(j, _)| j.0 == alpha).map(|(_, q)| *q).collect();
        let spread = vals.iter().copied().fold(0.0, f64::max) / median(&vals);
        summary.push(Criterion::at_most(format!("spread_alpha_{alpha}"), spread, spec.max_spread));
        if vals.len() >= 3 {
            let fit = log_log_fit(&spec.radii, &vals)?;
            summary.push(
                Criterion::at_most(format!("radius_trend_alpha_{alpha}"), fit.exponent, 0.0)
                    .informational()
                    .with_detail("exponent of R; positive means growth"),
            );
        }
    }
    Ok(ExperimentOutput { table, summary })
}
