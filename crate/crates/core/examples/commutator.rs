//! Fractional commutator `[|∇|^α, χ_R]` on random band-limited data, rescaled by `R^α`.

use bubblelab::diagnostics::commutator_check;
use bubblelab::initial_data::make_cutoff;
use bubblelab::spectral::besov::random_band_limited;
use bubblelab::spectral::Grid;

fn main() -> bubblelab::Result<()> {
    let grid = Grid::new(1, 2048, 64.0)?;
    let f = random_band_limited(&grid, 64, 7);
    for alpha in [0.3, 0.7] {
        for radius in [1.0, 2.0, 4.0, 8.0] {
            let chi = make_cutoff(&grid, &[0.0], radius, 1.0, 2.0);
            let c = commutator_check(&f, &chi, radius, alpha)?;
            println!("alpha={alpha} R={radius:<4} scaled commutator={c:.6}");
        }
    }
    Ok(())
}
