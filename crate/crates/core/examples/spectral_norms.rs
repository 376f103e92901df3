//! Sobolev norms of a Gaussian three ways: closed form, Fourier multiplier, second differences.

use bubblelab::spectral::{besov_norm_2nd_diff, sobolev_norm, Field, Grid};
use statrs::function::gamma::gamma;

fn main() -> bubblelab::Result<()> {
    let grid = Grid::new(1, 1024, 80.0)?;
    let f = Field::from_real_fn(&grid, |x| (-x[0] * x[0] / 2.0).exp());

    println!("{:>6} {:>14} {:>14} {:>14}", "sigma", "exact", "fourier", "2nd diff");
    for sigma in [0.3, 0.7, 1.0, 1.5] {
        // line value; the torus sum differs by O((2π/L)^{1+2σ}) from the modes near ξ = 0
        // (2π)⁻¹ ∫ |ξ|^{2σ} |f̂|² dξ with f̂(ξ) = √(2π) e^{−ξ²/2}
        let exact = gamma(sigma + 0.5).sqrt();
        let fourier = sobolev_norm(&f, sigma, true)?;
        let besov = besov_norm_2nd_diff(&f, sigma, 2.5)?;
        println!("{sigma:>6} {exact:>14.10} {fourier:>14.10} {besov:>14.10}");
    }
    Ok(())
}
