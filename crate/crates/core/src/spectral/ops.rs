use std::sync::Arc;

use num_complex::Complex64;

use super::field::{Domain, Field};
use super::grid::Grid;
use crate::error::{Error, Result};

/// Dealiasing applied to quadratic products in the pseudo-spectral solvers.
#[derive(Debug, Clone, Copy, Default, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", deny_unknown_fields)]
pub enum Dealias {
    None,
    #[default]
    TwoThirds,
    /// `exp(-strength (|k|/k_max)^order)` per axis.
    ExponentialFilter {
        order: u32,
        strength: f64,
    },
}

/// Multiplies the spectral coefficients by `m(ξ)` and returns a field in the input's domain.
pub fn apply_multiplier(f: &Field, m: impl Fn(&[f64; 3]) -> Complex64) -> Field {
    let domain = f.domain();
    let mut s = f.to_spectral();
    let grid = Arc::clone(s.grid());
    for (i, v) in s.values_mut().iter_mut().enumerate() {
        *v *= m(&grid.wave_vector(i));
    }
    match domain {
        Domain::Physical => s.into_physical(),
        Domain::Spectral => s,
    }
}

fn norm3(k: &[f64; 3]) -> f64 {
    (k[0] * k[0] + k[1] * k[1] + k[2] * k[2]).sqrt()
}

/// `|∇|^σ f`, with the zero mode sent to zero.
pub fn fractional_derivative(f: &Field, sigma: f64) -> Result<Field> {
    if !(sigma >= 0.0) {
        return Err(Error::Domain(format!("fractional order must be >= 0, got {sigma}")));
    }
    Ok(apply_multiplier(f, |k| {
        let r = norm3(k);
        if r == 0.0 {
            Complex64::new(0.0, 0.0)
        } else {
            Complex64::new(r.powf(sigma), 0.0)
        }
    }))
}

/// `∂_axis f`. The Nyquist mode is dropped so that real fields stay real.
pub fn partial(f: &Field, axis: usize) -> Result<Field> {
    let grid = Arc::clone(f.grid());
    if axis >= grid.dim() {
        return Err(Error::Structural(format!("axis {axis} on a {}-d grid", grid.dim())));
    }
    let nyq = grid.max_wavenumber();
    Ok(apply_multiplier(f, |k| if k[axis] == nyq { Complex64::new(0.0, 0.0) } else { Complex64::new(0.0, k[axis]) }))
}

pub fn gradient(f: &Field) -> Vec<Field> {
    let s = f.to_spectral();
    (0..f.grid().dim())
        .map(|a| {
            let d = partial(&s, a).expect("axis in range");
            if f.is_physical() {
                d.into_physical()
            } else {
                d
            }
        })
        .collect()
}

pub fn divergence(v: &[Field]) -> Result<Field> {
    let first = v.first().ok_or_else(|| Error::Structural("divergence of an empty vector field".into()))?;
    if v.len() != first.grid().dim() {
        return Err(Error::Structural(format!("{} components on a {}-d grid", v.len(), first.grid().dim())));
    }
    let mut acc = partial(&v[0].to_spectral(), 0)?;
    for (a, comp) in v.iter().enumerate().skip(1) {
        comp.ensure_same_grid(first)?;
        acc = acc.add(&partial(&comp.to_spectral(), a)?)?;
    }
    Ok(if first.is_physical() { acc.into_physical() } else { acc })
}

pub fn laplacian(f: &Field) -> Field {
    apply_multiplier(f, |k| Complex64::new(-(k[0] * k[0] + k[1] * k[1] + k[2] * k[2]), 0.0))
}

/// `(Σ w(ξ)^{2σ} |f̂(ξ)|²)^{1/2}` with the quadrature weight, `w = |ξ|` or `⟨ξ⟩`.
///
/// At σ = 0 both variants are the full L² norm.
pub fn sobolev_norm(f: &Field, sigma: f64, homogeneous: bool) -> Result<f64> {
    if !(sigma >= 0.0) {
        return Err(Error::Domain(format!("Sobolev index must be >= 0, got {sigma}")));
    }
    let s = f.to_spectral();
    let grid = s.grid();
    let sum: f64 = s
        .values()
        .iter()
        .enumerate()
        .map(|(i, v)| {
            let k = grid.wave_vector(i);
            let r2 = k[0] * k[0] + k[1] * k[1] + k[2] * k[2];
            let w = if homogeneous {
                if r2 == 0.0 && sigma > 0.0 {
                    0.0
                } else {
                    r2.powf(sigma)
                }
            } else {
                (1.0 + r2).powf(sigma)
            };
            w * v.norm_sqr()
        })
        .sum();
    Ok((sum * grid.cell_volume()).sqrt())
}

/// Periodic convolution `∫ f(x−y) g(y) dy`.
pub fn convolve(f: &Field, g: &Field) -> Result<Field> {
    f.ensure_same_grid(g)?;
    if !f.is_physical() || !g.is_physical() {
        return Err(Error::Structural("convolve expects physical fields".into()));
    }
    let grid = f.grid();
    let factor = (grid.total_points() as f64).sqrt() * grid.cell_volume();
    let mut prod = f.to_spectral().mul(&g.to_spectral())?.scale(factor);
    // sample 0 sits at −L/2, so the kernel index is shifted by N/2 per axis
    let g2 = Arc::clone(grid);
    for (i, v) in prod.values_mut().iter_mut().enumerate() {
        let idx = g2.unflatten(i);
        let parity: i64 = (0..g2.dim()).map(|a| g2.mode_index(idx[a])).sum();
        if parity.rem_euclid(2) == 1 {
            *v = -*v;
        }
    }
    Ok(prod.into_physical())
}

/// Same as [`convolve`] but summed directly over the nonzero kernel samples.
///
/// Supports stay exactly compact, which the spectral product cannot guarantee.
pub fn convolve_compact(f: &Field, kernel: &Field) -> Result<Field> {
    f.ensure_same_grid(kernel)?;
    if !f.is_physical() || !kernel.is_physical() {
        return Err(Error::Structural("convolve expects physical fields".into()));
    }
    let grid = Arc::clone(f.grid());
    let dim = grid.dim();
    let n = grid.n() as i64;
    let half = n / 2;
    let w = grid.cell_volume();
    // kernel sample at index i sits at offset i − N/2 per axis
    let taps: Vec<([i64; 3], Complex64)> = kernel
        .values()
        .iter()
        .enumerate()
        .filter(|(_, v)| v.norm_sqr() > 0.0)
        .map(|(i, v)| {
            let idx = grid.unflatten(i);
            let mut o = [0i64; 3];
            for a in 0..dim {
                o[a] = idx[a] as i64 - half;
            }
            (o, *v * w)
        })
        .collect();
    let src = f.values();
    let mut out = vec![Complex64::new(0.0, 0.0); grid.total_points()];
    for (i, v) in src.iter().enumerate() {
        if v.norm_sqr() == 0.0 {
            continue;
        }
        let idx = grid.unflatten(i);
        for (o, k) in &taps {
            let mut t = [0usize; 3];
            for a in 0..dim {
                t[a] = (idx[a] as i64 + o[a]).rem_euclid(n) as usize;
            }
            out[grid.flatten(&t)] += *v * *k;
        }
    }
    Field::new(grid, out, Domain::Physical)
}

/// Applies a dealiasing filter; returns a field in the input's domain.
pub fn dealias(f: &Field, rule: Dealias) -> Field {
    let grid = Arc::clone(f.grid());
    let n = grid.n();
    let kmax = grid.max_wavenumber();
    match rule {
        Dealias::None => f.clone(),
        Dealias::TwoThirds => {
            let cutoff = (n / 3) as i64;
            let domain = f.domain();
            let mut s = f.to_spectral();
            for (i, v) in s.values_mut().iter_mut().enumerate() {
                let idx = grid.unflatten(i);
                if (0..grid.dim()).any(|a| grid.mode_index(idx[a]).abs() > cutoff) {
                    *v = Complex64::new(0.0, 0.0);
                }
            }
            if domain == Domain::Physical {
                s.into_physical()
            } else {
                s
            }
        }
        Dealias::ExponentialFilter { order, strength } => apply_multiplier(f, |k| {
            let e: f64 = k.iter().take(grid.dim()).map(|ki| (ki.abs() / kmax).powi(order as i32)).sum();
            Complex64::new((-strength * e).exp(), 0.0)
        }),
    }
}

/// Largest spectral magnitude among modes with some index above `N/3`, relative to the peak.
pub fn spectral_tail_ratio(f: &Field) -> f64 {
    let s = f.to_spectral();
    let grid = s.grid();
    let cutoff = (grid.n() / 3) as i64;
    let mut peak = 0.0f64;
    let mut tail = 0.0f64;
    for (i, v) in s.values().iter().enumerate() {
        let a = v.norm();
        peak = peak.max(a);
        let idx = grid.unflatten(i);
        if (0..grid.dim()).any(|ax| grid.mode_index(idx[ax]).abs() > cutoff) {
            tail = tail.max(a);
        }
    }
    if peak == 0.0 {
        0.0
    } else {
        tail / peak
    }
}

/// Trigonometric interpolation onto a grid with the same torus and a different `N`.
///
/// Coarsening drops the modes that do not fit; the Nyquist mode is split evenly
/// between `±N/2` when refining.
pub fn resample(f: &Field, target: &Arc<Grid>) -> Result<Field> {
    let src = f.grid();
    if src.dim() != target.dim() || src.length() != target.length() {
        return Err(Error::Structural("resample needs the same torus".into()));
    }
    let s = f.to_spectral();
    let (n0, n1) = (src.n() as i64, target.n() as i64);
    let dim = src.dim();
    let scale = (target.total_points() as f64 / src.total_points() as f64).sqrt();
    let mut out = vec![Complex64::new(0.0, 0.0); target.total_points()];
    for (i, v) in s.values().iter().enumerate() {
        let idx = src.unflatten(i);
        // each source mode maps to 1 or 2 target slots per axis
        let mut targets: Vec<(usize, f64)> = vec![(0, 1.0)];
        let mut dropped = false;
        for a in 0..dim {
            let j = src.mode_index(idx[a]);
            let mut opts: Vec<(i64, f64)> = Vec::with_capacity(2);
            if j == n0 / 2 && n1 > n0 {
                opts.push((j, 0.5));
                opts.push((-j, 0.5));
            } else if j.abs() < n1 / 2 || (j == n1 / 2 && n1 == n0) {
                opts.push((j, 1.0));
            } else if j.abs() == n1 / 2 {
                // coarsening onto a Nyquist slot keeps the symmetric part
                opts.push((n1 / 2, 0.5));
            } else {
                dropped = true;
                break;
            }
            let mut next = Vec::with_capacity(targets.len() * opts.len());
            for &(flat, w) in &targets {
                for &(jj, ww) in &opts {
                    let slot = jj.rem_euclid(n1) as usize;
                    next.push((flat * n1 as usize + slot, w * ww));
                }
            }
            targets = next;
        }
        if dropped {
            continue;
        }
        for (flat, w) in targets {
            out[flat] += *v * (w * scale);
        }
    }
    Ok(Field::new(Arc::clone(target), out, Domain::Spectral)?.into_physical())
}

/// Evaluates the trigonometric interpolant of `f` at arbitrary points (1-d only in the fast path).
pub fn interpolate_at(f: &Field, points: &[[f64; 3]]) -> Vec<Complex64> {
    let s = f.to_spectral();
    let grid = s.grid();
    let dim = grid.dim();
    let half = grid.length() / 2.0;
    let norm = 1.0 / (grid.total_points() as f64).sqrt();
    let nyq = grid.max_wavenumber();
    points
        .iter()
        .map(|p| {
            let mut acc = Complex64::new(0.0, 0.0);
            for (i, v) in s.values().iter().enumerate() {
                if v.norm_sqr() == 0.0 {
                    continue;
                }
                let k = grid.wave_vector(i);
                let mut phase = 0.0;
                let mut weight = 1.0;
                for a in 0..dim {
                    // samples start at -L/2
                    if k[a] == nyq {
                        weight *= (k[a] * (p[a] + half)).cos();
                    } else {
                        phase += k[a] * (p[a] + half);
                    }
                }
                acc += *v * Complex64::from_polar(weight, phase);
            }
            acc * norm
        })
        .collect()
}

/// `σ₀ = d/2 − 1` for even `d`, `⌊d/2⌋` for odd `d`.
pub fn embedding_sigma0(dim: usize) -> f64 {
    if dim.is_multiple_of(2) {
        dim as f64 / 2.0 - 1.0
    } else {
        (dim / 2) as f64
    }
}

/// `(‖f‖_∞, ‖D^{σ₀} f‖_{H^{K−σ₀}})`.
pub fn linfty_embedding_check(f: &Field, k: f64) -> Result<(f64, f64)> {
    let d = f.grid().dim() as f64;
    if !(k > d / 2.0) {
        return Err(Error::Domain(format!("embedding index K = {k} must exceed d/2 = {}", d / 2.0)));
    }
    let sigma0 = embedding_sigma0(f.grid().dim());
    let lhs = f.to_physical().max_abs();
    let rhs = sobolev_norm(&fractional_derivative(f, sigma0)?, k - sigma0, false)?;
    Ok((lhs, rhs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn band_limited(grid: &Arc<Grid>, max_index: i64, seed: u64) -> Field {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut s = Field::zeros(grid).to_spectral();
        for i in 0..grid.total_points() {
            let idx = grid.unflatten(i);
            if (0..grid.dim()).all(|a| grid.mode_index(idx[a]).abs() <= max_index) {
                s.values_mut()[i] = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            }
        }
        s.into_physical()
    }

    #[test]
    fn single_mode_fractional_derivative() {
        let g = Grid::new(1, 32, 2.0 * PI).unwrap();
        let f = Field::from_fn(&g, |x| Complex64::new(0.0, 5.0 * x[0]).exp());
        let d = fractional_derivative(&f, 0.5).unwrap();
        let expected = f.scale(5f64.sqrt());
        assert!(d.sub(&expected).unwrap().l2_norm() < 1e-12 * expected.l2_norm());
        let c = fractional_derivative(&Field::constant(&g, Complex64::new(3.0, 0.0)), 0.7).unwrap();
        assert!(c.max_abs() < 1e-14);
        assert!(matches!(fractional_derivative(&f, -0.1), Err(Error::Domain(_))));
    }

    #[test]
    fn sigma_two_is_minus_laplacian() {
        for dim in 1..=3 {
            let g = Grid::new(dim, 16, 3.0).unwrap();
            let f = band_limited(&g, 5, 11);
            let a = fractional_derivative(&f, 2.0).unwrap();
            let b = laplacian(&f).scale(-1.0);
            assert!(a.sub(&b).unwrap().l2_norm() <= 1e-10 * b.l2_norm());
        }
    }

    #[test]
    fn sobolev_examples() {
        let g = Grid::new(1, 32, 2.0 * PI).unwrap();
        let c = Field::constant(&g, Complex64::new(1.0, 0.0));
        assert_eq!(sobolev_norm(&c, 1.0, true).unwrap(), 0.0);
        let f = Field::from_fn(&g, |x| Complex64::new(0.0, 4.0 * x[0]).exp());
        let r = sobolev_norm(&f, 0.5, true).unwrap() / f.l2_norm();
        assert!((r - 2.0).abs() < 1e-12);
        let rnd = band_limited(&g, 10, 3);
        assert!((sobolev_norm(&rnd, 0.0, false).unwrap() - rnd.l2_norm()).abs() < 1e-12 * rnd.l2_norm());
    }

    #[test]
    fn gradient_of_sine() {
        let g = Grid::new(2, 32, 2.0 * PI).unwrap();
        let f = Field::from_real_fn(&g, |x| (2.0 * x[0]).sin() * x[1].cos());
        let gr = gradient(&f);
        let ex = Field::from_real_fn(&g, |x| 2.0 * (2.0 * x[0]).cos() * x[1].cos());
        let ey = Field::from_real_fn(&g, |x| -(2.0 * x[0]).sin() * x[1].sin());
        assert!(gr[0].sub(&ex).unwrap().max_abs() < 1e-12);
        assert!(gr[1].sub(&ey).unwrap().max_abs() < 1e-12);
        let div = divergence(&gr).unwrap();
        assert!(div.sub(&laplacian(&f)).unwrap().max_abs() < 1e-11);
    }

    #[test]
    fn convolution_examples() {
        let g = Grid::new(1, 64, 4.0).unwrap();
        let f = band_limited(&g, 20, 5);
        let mut delta = vec![0.0; 64];
        delta[32] = 1.0 / g.dx(); // x = 0
        let delta = Field::from_real(&g, delta).unwrap();
        let c = convolve(&f, &delta).unwrap();
        assert!(c.sub(&f).unwrap().l2_norm() < 1e-12 * f.l2_norm());

        let kernel = Field::from_real_fn(&g, |x| (-x[0] * x[0] * 8.0).exp());
        let mass = kernel.integral().re;
        let kernel = kernel.scale(1.0 / mass);
        let cst = Field::constant(&g, Complex64::new(2.5, 0.0));
        let cc = convolve(&cst, &kernel).unwrap();
        assert!(cc.values().iter().all(|v| (v - 2.5).norm() < 1e-12));
        let conv = convolve(&f, &kernel).unwrap();
        let direct = convolve_compact(&f, &kernel).unwrap();
        assert!(conv.sub(&direct).unwrap().l2_norm() < 1e-12 * conv.l2_norm());
        let l1 = kernel.lp_norm_pow(1.0);
        assert!(conv.l2_norm() <= l1 * f.l2_norm() * (1.0 + 1e-12));
    }

    #[test]
    fn two_thirds_rule_zeroes_upper_band() {
        let g = Grid::new(1, 24usize.next_power_of_two(), 2.0 * PI).unwrap();
        let f = Field::from_real_fn(&g, |x| (x[0]).cos() + (12.0 * x[0]).cos());
        let d = dealias(&f, Dealias::TwoThirds);
        let e = Field::from_real_fn(&g, |x| x[0].cos());
        assert!(d.sub(&e).unwrap().max_abs() < 1e-12);
        assert!(spectral_tail_ratio(&e) < 1e-14);
        assert!(spectral_tail_ratio(&f) > 0.5);
    }

    #[test]
    fn resample_is_exact_for_band_limited() {
        let g = Grid::new(2, 16, 3.0).unwrap();
        let fine = Grid::new(2, 64, 3.0).unwrap();
        let f = band_limited(&g, 6, 9);
        let up = resample(&f, &fine).unwrap();
        let down = resample(&up, &g).unwrap();
        assert!(down.sub(&f).unwrap().l2_norm() < 1e-12 * f.l2_norm());
        assert!((up.l2_norm() - f.l2_norm()).abs() < 1e-12 * f.l2_norm());
        let pts: Vec<[f64; 3]> = (0..5).map(|i| [0.1 + 0.3 * i as f64, -0.2 * i as f64, 0.0]).collect();
        let vals = interpolate_at(&f, &pts);
        let vals_fine = interpolate_at(&up, &pts);
        for (a, b) in vals.iter().zip(&vals_fine) {
            assert!((a - b).norm() < 1e-12);
        }
        // interpolant reproduces samples
        let on_grid = interpolate_at(&f, &[f.grid().position(37)]);
        assert!((on_grid[0] - f.values()[37]).norm() < 1e-12);
    }

    #[test]
    fn embedding_examples() {
        let g = Grid::new(1, 32, 2.0 * PI).unwrap();
        assert_eq!(linfty_embedding_check(&Field::zeros(&g), 1.0).unwrap(), (0.0, 0.0));
        let f = Field::from_fn(&g, |x| Complex64::new(0.0, 3.0 * x[0]).exp());
        let (l, r) = linfty_embedding_check(&f, 1.0).unwrap();
        assert!((l - 1.0).abs() < 1e-12 && r > 0.0);
        assert!(matches!(linfty_embedding_check(&f, 0.5), Err(Error::Domain(_))));
        assert_eq!(embedding_sigma0(1), 0.0);
        assert_eq!(embedding_sigma0(2), 0.0);
        assert_eq!(embedding_sigma0(3), 1.0);
    }
}
