use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

/// Periodic `dim`-dimensional torus `[-L/2, L/2)^dim` sampled with `n` points per axis.
///
/// The grid owns its FFT plans, so it is built once and shared behind an [`Arc`].
pub struct Grid {
    dim: usize,
    n: usize,
    length: f64,
    wavenumbers: Vec<f64>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid").field("dim", &self.dim).field("n", &self.n).field("length", &self.length).finish()
    }
}

impl Grid {
    pub fn new(dim: usize, n: usize, length: f64) -> Result<Arc<Self>> {
        if !(1..=3).contains(&dim) {
            return Err(Error::Domain(format!("dimension {dim} not in 1..=3")));
        }
        if n < 8 || !n.is_power_of_two() {
            return Err(Error::Domain(format!("points per axis must be a power of two >= 8, got {n}")));
        }
        if !(length > 0.0 && length.is_finite()) {
            return Err(Error::Domain(format!("torus length must be positive, got {length}")));
        }
        let scale = 2.0 * PI / length;
        let wavenumbers = (0..n)
            .map(|i| {
                let k = if i <= n / 2 { i as f64 } else { i as f64 - n as f64 };
                // the Nyquist mode is stored as +N/2
                k * scale
            })
            .collect();
        let mut planner = FftPlanner::new();
        Ok(Arc::new(Self {
            dim,
            n,
            length,
            wavenumbers,
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
        }))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn total_points(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    /// Grid spacing `L/N`.
    pub fn dx(&self) -> f64 {
        self.length / self.n as f64
    }

    /// Quadrature weight of one sample, `(L/N)^d`.
    pub fn cell_volume(&self) -> f64 {
        self.dx().powi(self.dim as i32)
    }

    /// Signed angular wavenumbers of one axis, in FFT order.
    pub fn wavenumbers(&self) -> &[f64] {
        &self.wavenumbers
    }

    pub fn max_wavenumber(&self) -> f64 {
        (self.n / 2) as f64 * 2.0 * PI / self.length
    }

    /// Signed integer frequency index of FFT slot `i`.
    pub fn mode_index(&self, i: usize) -> i64 {
        if i <= self.n / 2 {
            i as i64
        } else {
            i as i64 - self.n as i64
        }
    }

    /// Coordinate of sample `i` along one axis.
    pub fn coordinate(&self, i: usize) -> f64 {
        -0.5 * self.length + i as f64 * self.dx()
    }

    /// Multi-index of a flat row-major index.
    pub fn unflatten(&self, mut flat: usize) -> [usize; 3] {
        let mut idx = [0usize; 3];
        for axis in (0..self.dim).rev() {
            idx[axis] = flat % self.n;
            flat /= self.n;
        }
        idx
    }

    pub fn flatten(&self, idx: &[usize]) -> usize {
        idx.iter().take(self.dim).fold(0, |acc, &i| acc * self.n + i)
    }

    /// Physical position of a flat index.
    pub fn position(&self, flat: usize) -> [f64; 3] {
        let idx = self.unflatten(flat);
        let mut x = [0.0; 3];
        for axis in 0..self.dim {
            x[axis] = self.coordinate(idx[axis]);
        }
        x
    }

    /// Wave vector of a flat spectral index.
    pub fn wave_vector(&self, flat: usize) -> [f64; 3] {
        let idx = self.unflatten(flat);
        let mut k = [0.0; 3];
        for axis in 0..self.dim {
            k[axis] = self.wavenumbers[idx[axis]];
        }
        k
    }

    /// `|ξ|` for every flat spectral index.
    pub fn wavenumber_magnitudes(&self) -> Vec<f64> {
        (0..self.total_points())
            .map(|i| {
                let k = self.wave_vector(i);
                k.iter().map(|v| v * v).sum::<f64>().sqrt()
            })
            .collect()
    }

    /// Shortest periodic displacement between two coordinates.
    pub fn periodic_delta(&self, a: f64, b: f64) -> f64 {
        let l = self.length;
        let mut d = (a - b) % l;
        if d > 0.5 * l {
            d -= l;
        } else if d < -0.5 * l {
            d += l;
        }
        d
    }

    /// Periodic distance between a grid point and an arbitrary center.
    pub fn distance_to(&self, flat: usize, center: &[f64]) -> f64 {
        let x = self.position(flat);
        (0..self.dim)
            .map(|a| {
                let d = self.periodic_delta(x[a], center.get(a).copied().unwrap_or(0.0));
                d * d
            })
            .sum::<f64>()
            .sqrt()
    }

    pub(crate) fn plans(&self) -> (&Arc<dyn Fft<f64>>, &Arc<dyn Fft<f64>>) {
        (&self.forward, &self.inverse)
    }

    pub fn same_as(&self, other: &Grid) -> bool {
        self.dim == other.dim && self.n == other.n && self.length == other.length
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wavenumber_axis() {
        let g = Grid::new(1, 16, 2.0 * PI).unwrap();
        let k = g.wavenumbers();
        assert_eq!(k.iter().filter(|&&v| v == 0.0).count(), 1);
        let kmax = k.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!((kmax - 8.0).abs() < 1e-14);
        assert!((g.max_wavenumber() - 8.0).abs() < 1e-14);
    }

    #[test]
    fn rejects_bad_sizes() {
        assert!(Grid::new(1, 12, 1.0).is_err());
        assert!(Grid::new(1, 4, 1.0).is_err());
        assert!(Grid::new(4, 8, 1.0).is_err());
        assert!(Grid::new(2, 8, -1.0).is_err());
    }

    #[test]
    fn flatten_roundtrip() {
        let g = Grid::new(3, 8, 1.0).unwrap();
        for flat in [0, 7, 63, 100, 511] {
            assert_eq!(g.flatten(&g.unflatten(flat)), flat);
        }
    }
}
