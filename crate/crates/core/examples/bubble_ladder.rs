//! A geometric bubble ladder: scales, semiclassical parameters, and the datum seen from each rung.

use bubblelab::initial_data::{rescale_to_semiclassical, BubbleLadder, FrameOptions, LadderConfig, ModelParams};
use bubblelab::spectral::{sobolev_norm, Grid};

fn main() -> bubblelab::Result<()> {
    let params = ModelParams::new(1, 3, 0.1, 1.0)?;
    println!("s_c = {:.4}, s_sob = {:.4}", params.s_c(), params.s_sob());

    let ladder = BubbleLadder::new(params, LadderConfig::geometric(3, 1.0, 0.25))?;
    let grid = Grid::new(1, 16384, 128.0)?;
    for k in 1..=ladder.rungs() {
        let datum = rescale_to_semiclassical(&ladder, &grid, k, &FrameOptions::default())?;
        println!(
            "k={k} h_k={:.6} eps_k={:.6e} |u0|_inf={:.4} |u0|_2={:.4} |u0|_H1={:.4} components={}",
            ladder.h(k)?,
            datum.epsilon,
            datum.u0.max_abs(),
            datum.u0.l2_norm(),
            sobolev_norm(&datum.u0, 1.0, true)?,
            datum.components.len(),
        );
    }
    Ok(())
}
