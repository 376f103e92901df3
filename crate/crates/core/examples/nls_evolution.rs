//! Semiclassical NLS from bubble data: mass, energy, and the Madelung fields.

use bubblelab::initial_data::{rescale_to_semiclassical, BubbleLadder, FrameOptions, LadderConfig, ModelParams};
use bubblelab::nls::{NlsConfig, NlsRun};
use bubblelab::spectral::Grid;

fn main() -> bubblelab::Result<()> {
    let ladder = BubbleLadder::new(
        ModelParams::new(1, 3, 0.1, 1.0)?,
        LadderConfig { amplitude: 2.0 * std::f64::consts::E, ..LadderConfig::geometric(1, 1.0, 0.5) },
    )?;
    let grid = Grid::new(1, 1024, 16.0)?;
    let u0 = rescale_to_semiclassical(&ladder, &grid, 1, &FrameOptions::default())?.u0;

    let eps = 0.05;
    let mut run = NlsRun::new(&u0, eps, 3, NlsConfig::default())?;
    println!("dt = {:.3e}, mass0 = {:.10}, energy0 = {:.10}", run.dt, run.mass0, run.energy());
    let mut calls = 0;
    run.evolve(0.1, |r| {
        calls += 1;
        if calls % 50 != 1 {
            return Ok(());
        }
        let (rho, v) = r.madelung();
        println!(
            "t={:.4} mass drift={:+.2e} energy={:.8} max rho={:.4} max|v|={:.4}",
            r.t,
            (r.mass() - r.mass0) / r.mass0,
            r.energy(),
            rho.max_abs(),
            v[0].max_abs()
        );
        Ok(())
    })?;
    Ok(())
}
