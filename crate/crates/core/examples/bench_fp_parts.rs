//! Micro-timing of the pieces inside one Fokker-Planck collision step.

use dvkin::chapman::channel_gas;
use dvkin::fp::{fp_step, invariant_moments};
use dvkin::state::{equilibrium_of, equilibrium_state, local_moments};
use dvkin::vgrid::VelocityGrid;

fn main() {
    let gas = channel_gas();
    let grid = VelocityGrid::build([0.0; 3], 1.05, 1.0, 32, 6.0).unwrap();
    let mut cell = equilibrium_state(1.0, [0.0, 0.05, 0.0], 1.0, &grid, &gas).unwrap();
    let reps = 200;

    let t0 = std::time::Instant::now();
    let mut local = None;
    for _ in 0..reps {
        local = Some(local_moments(&cell, &grid, &gas).unwrap());
    }
    println!("local_moments: {:.3} ms", 1e3 * t0.elapsed().as_secs_f64() / reps as f64);
    let local = local.unwrap();

    let t0 = std::time::Instant::now();
    for _ in 0..reps {
        std::hint::black_box(equilibrium_of(&local, &grid, &gas).unwrap());
    }
    println!("equilibrium_of: {:.3} ms", 1e3 * t0.elapsed().as_secs_f64() / reps as f64);

    let t0 = std::time::Instant::now();
    for _ in 0..reps {
        std::hint::black_box(invariant_moments(&cell.f, &cell.g, &grid));
    }
    println!("invariant_moments: {:.3} ms", 1e3 * t0.elapsed().as_secs_f64() / reps as f64);

    let t0 = std::time::Instant::now();
    for _ in 0..reps {
        fp_step(&mut cell, &local, &grid, &gas, 1e-3, 0.05).unwrap();
    }
    println!("fp_step total: {:.3} ms", 1e3 * t0.elapsed().as_secs_f64() / reps as f64);
}
