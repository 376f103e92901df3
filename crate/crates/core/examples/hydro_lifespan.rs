//! Hydrodynamic flow of one bubble: lifespan, and the support that stays put while it lasts.

use bubblelab::euler::{detect_lifespan, evolve, support_radius, HydroState, SolverConfig};
use bubblelab::initial_data::profile::bump;
use bubblelab::spectral::{Dealias, Field, Grid};

fn main() -> bubblelab::Result<()> {
    let grid = Grid::new(1, 256, 8.0)?;
    let a0 = Field::from_real_fn(&grid, |x| 2.0 * std::f64::consts::E * bump(x[0].abs()));
    let h0 = HydroState::from_amplitude(&a0, 3)?;
    let cfg = SolverConfig { dealias: Dealias::ExponentialFilter { order: 36, strength: 36.0 }, ..Default::default() };

    let (t_end, cause) = detect_lifespan(&h0, &cfg, 100.0)?;
    println!("lifespan T = {t_end:.6} ({cause:?})");

    let mut last = 0.0;
    evolve(&h0, t_end / 2.0, &cfg, |st| {
        if st.t >= last {
            println!(
                "t={:.5} support={:.4} max|V|={:.4} max|grad|={:.4}",
                st.t,
                support_radius(st, 1e-8, &[0.0]),
                st.max_speed(),
                st.gradient_sup()
            );
            last += t_end / 20.0;
        }
    })?;
    Ok(())
}
