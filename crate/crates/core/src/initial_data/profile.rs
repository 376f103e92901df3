use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::{Field, Grid};

/// `exp(−1/(1−r²))` for `r < 1`, zero otherwise.
pub fn bump(r: f64) -> f64 {
    if r.abs() < 1.0 {
        (-1.0 / (1.0 - r * r)).exp()
    } else {
        0.0
    }
}

fn smooth_step(t: f64) -> f64 {
    if t > 0.0 {
        (-1.0 / t).exp()
    } else {
        0.0
    }
}

/// C∞ plateau: 1 for `r ≤ inner`, 0 for `r ≥ outer`.
pub fn plateau(r: f64, inner: f64, outer: f64) -> f64 {
    let t = (r - inner) / (outer - inner);
    let a = smooth_step(1.0 - t);
    let b = smooth_step(t);
    if a + b == 0.0 {
        0.0
    } else {
        a / (a + b)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProfileKind {
    /// Centered at the origin.
    Bump,
    /// Centered at the given point.
    ShiftedBump,
}

/// Bump of support radius `radius`, value `e^{-1}` at its center.
pub fn make_profile(grid: &Arc<Grid>, kind: ProfileKind, radius: f64, center: &[f64]) -> Result<Field> {
    if !(radius > 0.0) || radius >= grid.length() / 2.0 {
        return Err(Error::Domain(format!("profile radius {radius} must lie in (0, L/2) with L = {}", grid.length())));
    }
    let origin = [0.0; 3];
    let c = match kind {
        ProfileKind::Bump => &origin[..],
        ProfileKind::ShiftedBump => center,
    };
    Ok(Field::from_real_fn(grid, |x| {
        let r2: f64 = x
            .iter()
            .enumerate()
            .map(|(a, xi)| {
                let d = grid.periodic_delta(*xi, c.get(a).copied().unwrap_or(0.0));
                d * d
            })
            .sum();
        bump(r2.sqrt() / radius)
    }))
}

/// `h^{-d} ι(x/h)` with `ι` the unit bump, renormalized to discrete integral one.
pub fn make_mollifier(grid: &Arc<Grid>, h: f64) -> Result<Field> {
    if !(h > 0.0) {
        return Err(Error::Domain(format!("mollifier scale must be positive, got {h}")));
    }
    if h < 4.0 * grid.dx() {
        return Err(Error::Resolution(format!("mollifier scale {h} below four grid spacings ({})", 4.0 * grid.dx())));
    }
    if h >= grid.length() / 2.0 {
        return Err(Error::Domain(format!("mollifier scale {h} does not fit the torus")));
    }
    let f = make_profile(grid, ProfileKind::Bump, h, &[])?;
    let mass = f.integral().re;
    Ok(f.scale(1.0 / mass))
}

/// `χ((x−c)/R)` with the plateau profile: one on `|x−c| ≤ inner·R`, zero beyond `outer·R`.
pub fn make_cutoff(grid: &Arc<Grid>, center: &[f64], radius: f64, inner: f64, outer: f64) -> Field {
    Field::from_fn(grid, |x| {
        let r2: f64 = x
            .iter()
            .enumerate()
            .map(|(a, xi)| {
                let d = grid.periodic_delta(*xi, center.get(a).copied().unwrap_or(0.0));
                d * d
            })
            .sum();
        Complex64::new(plateau(r2.sqrt() / radius, inner, outer), 0.0)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::convolve;

    #[test]
    fn bump_values() {
        let g = Grid::new(1, 64, 8.0).unwrap();
        let p = make_profile(&g, ProfileKind::ShiftedBump, 1.0, &[0.5]).unwrap();
        // x = 0.5 is sample 36
        assert!((p.values()[36].re - (-1f64).exp()).abs() < 1e-15);
        assert_eq!(p.values()[52].re, 0.0); // x = 2.5
        assert!(make_profile(&g, ProfileKind::Bump, 4.0, &[]).is_err());
    }

    #[test]
    fn profile_integral_converges() {
        let mut prev: Option<f64> = None;
        for n in [256, 512] {
            let g = Grid::new(1, n, 8.0).unwrap();
            let v = make_profile(&g, ProfileKind::Bump, 1.0, &[]).unwrap().integral().re;
            assert!(v > 0.0);
            if let Some(p) = prev {
                assert!(((v - p) / v).abs() < 1e-6);
            }
            prev = Some(v);
        }
    }

    #[test]
    fn mollifier_examples() {
        let g = Grid::new(1, 256, 8.0).unwrap();
        let j = make_mollifier(&g, 0.25).unwrap();
        assert!((j.integral().re - 1.0).abs() < 1e-14);
        let c = Field::constant(&g, Complex64::new(1.5, 0.0));
        assert!(convolve(&c, &j).unwrap().values().iter().all(|v| (v.re - 1.5).abs() < 1e-12));
        assert!(matches!(make_mollifier(&g, 0.1), Err(Error::Resolution(_))));

        let f = Field::from_real_fn(&g, |x| (-(x[0] * x[0])).exp() * (3.0 * x[0]).cos());
        let errs: Vec<f64> = [0.5, 0.25, 0.125]
            .iter()
            .map(|&h| {
                let j = make_mollifier(&g, h).unwrap();
                convolve(&f, &j).unwrap().sub(&f).unwrap().l2_norm()
            })
            .collect();
        assert!(errs[0] > errs[1] && errs[1] > errs[2]);
    }

    #[test]
    fn plateau_shape() {
        assert_eq!(plateau(0.5, 1.0, 2.0), 1.0);
        assert_eq!(plateau(1.0, 1.0, 2.0), 1.0);
        assert_eq!(plateau(2.0, 1.0, 2.0), 0.0);
        assert!((plateau(1.5, 1.0, 2.0) - 0.5).abs() < 1e-15);
        let mut last = 1.0;
        for i in 0..=100 {
            let v = plateau(1.0 + i as f64 / 100.0, 1.0, 2.0);
            assert!(v <= last);
            last = v;
        }
    }
}
