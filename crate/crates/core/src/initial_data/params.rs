use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Exponents of the problem: dimension `d`, power `m` of `|u|^{2m}u`, data regularity `s`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelParams {
    pub dim: usize,
    pub m: u32,
    pub s: f64,
    /// Sobolev index at which inflation is measured.
    #[serde(default = "default_sigma_target")]
    pub sigma_target: f64,
}

fn default_sigma_target() -> f64 {
    1.0
}

impl ModelParams {
    pub fn new(dim: usize, m: u32, s: f64, sigma_target: f64) -> Result<Self> {
        let p = Self { dim, m, s, sigma_target };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(1..=3).contains(&self.dim) {
            return Err(Error::Domain(format!("dimension {} not in 1..=3", self.dim)));
        }
        if self.m < 1 {
            return Err(Error::Domain("nonlinearity power m must be >= 1".into()));
        }
        let sc = self.s_c();
        if !(sc > 0.0) {
            return Err(Error::Domain(format!("s_c = {sc} <= 0: the nonlinearity is not L2-supercritical")));
        }
        if !(self.s > 0.0 && self.s < sc && self.s <= 2.0) {
            return Err(Error::Domain(format!("need 0 < s < s_c = {sc:.6} and s <= 2, got s = {}", self.s)));
        }
        if !(self.sigma_target >= 0.0) {
            return Err(Error::Domain("sigma_target must be >= 0".into()));
        }
        Ok(())
    }

    /// `d/2 − 1/m`.
    pub fn s_c(&self) -> f64 {
        self.dim as f64 / 2.0 - 1.0 / self.m as f64
    }

    /// `dm/(2m+2)`.
    pub fn s_sob(&self) -> f64 {
        let m = self.m as f64;
        self.dim as f64 * m / (2.0 * m + 2.0)
    }

    /// `s/(1 + m(s_c − s))`.
    pub fn i_of_s(&self) -> f64 {
        self.s / (1.0 + self.m as f64 * (self.s_c() - self.s))
    }

    /// `m(s_c − s)`, the exponent linking `ε` to `h`.
    pub fn eps_exponent(&self) -> f64 {
        self.m as f64 * (self.s_c() - self.s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn critical_exponents() {
        let p = ModelParams::new(1, 3, 0.1, 1.0).unwrap();
        assert!((p.s_c() - 1.0 / 6.0).abs() < 1e-15);
        assert!((p.s_sob() - 3.0 / 8.0).abs() < 1e-15);
        let m = p.m as f64;
        assert!((m * p.s_c() + 1.0 - (m + 1.0) * p.s_sob()).abs() < 1e-12);
        assert!((p.i_of_s() - 0.1 / (1.0 + 3.0 * (1.0 / 6.0 - 0.1))).abs() < 1e-15);
    }

    #[test]
    fn rejects_out_of_range() {
        assert!(ModelParams::new(1, 3, 0.2, 1.0).is_err());
        assert!(ModelParams::new(1, 1, 0.1, 1.0).is_err()); // s_c < 0
        assert!(ModelParams::new(2, 1, 0.1, 1.0).is_err()); // s_c = 0
        assert!(ModelParams::new(3, 3, 1.15, 1.0).is_ok());
    }
}
