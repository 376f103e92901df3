use std::sync::Arc;

use num_complex::Complex64;

use super::grid::Grid;
use crate::error::{Error, Result};

/// Which representation a [`Field`] currently holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Domain {
    Physical,
    Spectral,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Inverse,
}

/// Samples of a complex function on a [`Grid`], row-major with the last axis contiguous.
///
/// Spectral coefficients use the unitary DFT normalization, so the discrete
/// Plancherel identity holds without extra factors.
#[derive(Debug, Clone)]
pub struct Field {
    grid: Arc<Grid>,
    values: Vec<Complex64>,
    domain: Domain,
}

impl Field {
    pub fn new(grid: Arc<Grid>, values: Vec<Complex64>, domain: Domain) -> Result<Self> {
        if values.len() != grid.total_points() {
            return Err(Error::Structural(format!(
                "{} samples for a grid of {} points",
                values.len(),
                grid.total_points()
            )));
        }
        Ok(Self { grid, values, domain })
    }

    pub fn zeros(grid: &Arc<Grid>) -> Self {
        Self {
            values: vec![Complex64::new(0.0, 0.0); grid.total_points()],
            grid: Arc::clone(grid),
            domain: Domain::Physical,
        }
    }

    pub fn constant(grid: &Arc<Grid>, c: Complex64) -> Self {
        Self { values: vec![c; grid.total_points()], grid: Arc::clone(grid), domain: Domain::Physical }
    }

    /// Samples `f(x)` at every grid point.
    pub fn from_fn(grid: &Arc<Grid>, f: impl Fn(&[f64]) -> Complex64) -> Self {
        let d = grid.dim();
        let values = (0..grid.total_points()).map(|i| f(&grid.position(i)[..d])).collect();
        Self { grid: Arc::clone(grid), values, domain: Domain::Physical }
    }

    pub fn from_real_fn(grid: &Arc<Grid>, f: impl Fn(&[f64]) -> f64) -> Self {
        Self::from_fn(grid, |x| Complex64::new(f(x), 0.0))
    }

    pub fn from_real(grid: &Arc<Grid>, values: Vec<f64>) -> Result<Self> {
        Self::new(Arc::clone(grid), values.into_iter().map(|v| Complex64::new(v, 0.0)).collect(), Domain::Physical)
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn is_physical(&self) -> bool {
        self.domain == Domain::Physical
    }

    /// Unitary DFT in the requested direction; the direction must match the current domain.
    pub fn transform(&self, direction: Direction) -> Result<Field> {
        let expected = match direction {
            Direction::Forward => Domain::Physical,
            Direction::Inverse => Domain::Spectral,
        };
        if self.domain != expected {
            return Err(Error::Structural(format!("{direction:?} transform requested on a {:?} field", self.domain)));
        }
        let mut out = self.clone();
        fft_nd(&self.grid, &mut out.values, direction);
        out.domain = match direction {
            Direction::Forward => Domain::Spectral,
            Direction::Inverse => Domain::Physical,
        };
        Ok(out)
    }

    /// Spectral copy of the field (no-op clone if already spectral).
    pub fn to_spectral(&self) -> Field {
        match self.domain {
            Domain::Spectral => self.clone(),
            Domain::Physical => self.transform(Direction::Forward).expect("domain checked"),
        }
    }

    pub fn to_physical(&self) -> Field {
        match self.domain {
            Domain::Physical => self.clone(),
            Domain::Spectral => self.transform(Direction::Inverse).expect("domain checked"),
        }
    }

    pub fn into_spectral(mut self) -> Field {
        if self.domain == Domain::Physical {
            fft_nd(&self.grid.clone(), &mut self.values, Direction::Forward);
            self.domain = Domain::Spectral;
        }
        self
    }

    pub fn into_physical(mut self) -> Field {
        if self.domain == Domain::Spectral {
            fft_nd(&self.grid.clone(), &mut self.values, Direction::Inverse);
            self.domain = Domain::Physical;
        }
        self
    }

    /// Discrete L² norm with quadrature weight; identical in both domains.
    pub fn l2_norm(&self) -> f64 {
        (self.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * self.grid.cell_volume()).sqrt()
    }

    /// `Σ |f|^p dx` over the physical samples.
    pub fn lp_norm_pow(&self, p: f64) -> f64 {
        let f = self.to_physical();
        f.values.iter().map(|v| v.norm().powf(p)).sum::<f64>() * self.grid.cell_volume()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.norm()))
    }

    pub fn integral(&self) -> Complex64 {
        let f = self.to_physical();
        f.values.iter().sum::<Complex64>() * self.grid.cell_volume()
    }

    pub fn ensure_same_grid(&self, other: &Field) -> Result<()> {
        if Arc::ptr_eq(&self.grid, &other.grid) || self.grid.same_as(&other.grid) {
            Ok(())
        } else {
            Err(Error::Structural(format!("grid mismatch: {:?} vs {:?}", self.grid, other.grid)))
        }
    }

    pub fn map(&self, f: impl Fn(Complex64) -> Complex64) -> Field {
        Field { grid: Arc::clone(&self.grid), values: self.values.iter().map(|&v| f(v)).collect(), domain: self.domain }
    }

    /// Pointwise combination of two physical fields on the same grid.
    pub fn zip_with(&self, other: &Field, f: impl Fn(Complex64, Complex64) -> Complex64) -> Result<Field> {
        self.ensure_same_grid(other)?;
        if self.domain != other.domain {
            return Err(Error::Structural("fields live in different domains".into()));
        }
        Ok(Field {
            grid: Arc::clone(&self.grid),
            values: self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect(),
            domain: self.domain,
        })
    }

    pub fn add(&self, other: &Field) -> Result<Field> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Field) -> Result<Field> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn mul(&self, other: &Field) -> Result<Field> {
        self.zip_with(other, |a, b| a * b)
    }

    pub fn scale(&self, c: f64) -> Field {
        self.map(|v| v * c)
    }

    pub fn scale_complex(&self, c: Complex64) -> Field {
        self.map(|v| v * c)
    }

    /// Real part as a new complex field with zero imaginary part.
    pub fn real_part(&self) -> Field {
        self.map(|v| Complex64::new(v.re, 0.0))
    }

    pub fn conj(&self) -> Field {
        self.map(|v| v.conj())
    }

    pub fn re_values(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.re).collect()
    }

    pub fn abs_sqr(&self) -> Field {
        self.map(|v| Complex64::new(v.norm_sqr(), 0.0))
    }

    pub fn has_non_finite(&self) -> bool {
        self.values.iter().any(|v| !v.re.is_finite() || !v.im.is_finite())
    }
}

/// In-place unitary DFT along every axis.
pub(crate) fn fft_nd(grid: &Grid, data: &mut [Complex64], direction: Direction) {
    let n = grid.n();
    let dim = grid.dim();
    let (fwd, inv) = grid.plans();
    let plan = match direction {
        Direction::Forward => fwd,
        Direction::Inverse => inv,
    };
    let total = data.len();
    if dim == 1 {
        plan.process(data);
    } else {
        let mut line = vec![Complex64::new(0.0, 0.0); n];
        let mut scratch = vec![Complex64::new(0.0, 0.0); plan.get_inplace_scratch_len()];
        for axis in 0..dim {
            let stride = n.pow((dim - 1 - axis) as u32);
            // every line start: indices whose component along `axis` is zero
            for start in 0..total {
                if !(start / stride).is_multiple_of(n) {
                    continue;
                }
                if stride == 1 {
                    plan.process_with_scratch(&mut data[start..start + n], &mut scratch);
                    continue;
                }
                for (j, slot) in line.iter_mut().enumerate() {
                    *slot = data[start + j * stride];
                }
                plan.process_with_scratch(&mut line, &mut scratch);
                for (j, v) in line.iter().enumerate() {
                    data[start + j * stride] = *v;
                }
            }
        }
    }
    let norm = 1.0 / (total as f64).sqrt();
    data.iter_mut().for_each(|v| *v *= norm);
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_field(grid: &Arc<Grid>, seed: u64) -> Field {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let vals = (0..grid.total_points())
            .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        Field::new(Arc::clone(grid), vals, Domain::Physical).unwrap()
    }

    #[test]
    fn constant_goes_to_zero_mode() {
        for dim in 1..=3 {
            let g = Grid::new(dim, 8, 3.0).unwrap();
            let c = Complex64::new(2.5, -1.0);
            let s = Field::constant(&g, c).transform(Direction::Forward).unwrap();
            let expected = c * (g.total_points() as f64).sqrt();
            assert!((s.values()[0] - expected).norm() < 1e-12);
            assert!(s.values()[1..].iter().all(|v| v.norm() < 1e-12));
        }
    }

    #[test]
    fn roundtrip_and_plancherel() {
        for dim in 1..=3 {
            let g = Grid::new(dim, 16, 5.0).unwrap();
            let f = random_field(&g, dim as u64);
            let s = f.transform(Direction::Forward).unwrap();
            let back = s.transform(Direction::Inverse).unwrap();
            let err = back.sub(&f).unwrap().l2_norm() / f.l2_norm();
            assert!(err < 1e-12, "roundtrip {err}");
            // direct sums on both sides
            let phys: f64 = f.values().iter().map(|v| v.norm_sqr()).sum();
            let spec: f64 = s.values().iter().map(|v| v.norm_sqr()).sum();
            assert!((phys - spec).abs() / phys < 1e-12);
        }
    }

    #[test]
    fn wrong_direction_is_structural_error() {
        let g = Grid::new(1, 8, 1.0).unwrap();
        let f = Field::zeros(&g);
        assert!(matches!(f.transform(Direction::Inverse), Err(Error::Structural(_))));
        let bad = Field::new(Arc::clone(&g), vec![Complex64::new(0.0, 0.0); 7], Domain::Physical);
        assert!(matches!(bad, Err(Error::Structural(_))));
    }

    #[test]
    fn single_mode_lands_in_one_slot_2d() {
        let g = Grid::new(2, 16, 2.0 * std::f64::consts::PI).unwrap();
        let f = Field::from_fn(&g, |x| Complex64::new(0.0, 3.0 * x[0] + 2.0 * x[1]).exp());
        let s = f.to_spectral();
        let (imax, _) =
            s.values().iter().enumerate().max_by(|a, b| a.1.norm().partial_cmp(&b.1.norm()).unwrap()).unwrap();
        let k = g.wave_vector(imax);
        assert!((k[0] - 3.0).abs() < 1e-12 && (k[1] - 2.0).abs() < 1e-12);
    }
}
