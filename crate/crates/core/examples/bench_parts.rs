//! Separate timing of advection and collision at desk scale.

use dvkin::bgk::{bgk_step_exact, tau_eff, TauLaw};
use dvkin::chapman::channel_gas;
use dvkin::fp::fp_step;
use dvkin::state::local_moments;
use dvkin::transport::{
    advect, equilibrium_field, Boundary, Reconstruction, SpatialMesh, TransportWs, Wall,
};
use dvkin::vgrid::VelocityGrid;
use rayon::prelude::*;

fn main() {
    let gas = channel_gas();
    let grid = VelocityGrid::build([0.0; 3], 1.05, 1.0, 32, 6.0).unwrap();
    let mesh = SpatialMesh::new(
        100,
        0.0,
        1.0,
        Boundary::DiffuseWalls {
            left: Wall {
                t_w: 1.0,
                u_w: [0.0, -0.05, 0.0],
            },
            right: Wall {
                t_w: 1.0,
                u_w: [0.0, 0.05, 0.0],
            },
        },
    )
    .unwrap();
    let mut cells = equilibrium_field(&mesh, &grid, &gas, |x| {
        (1.0, [0.0, 0.1 * (x - 0.5), 0.0], 1.0)
    })
    .unwrap();
    let mut ws = TransportWs::new(&cells, &grid, &mesh, &gas);
    let dt = 0.65 * mesh.dx() / grid.max_speed(0);

    let reps = 50;
    let t0 = std::time::Instant::now();
    for _ in 0..reps {
        advect(&mut cells, &mut ws, &mesh, &grid, &gas, dt, Reconstruction::MusclMinmod).unwrap();
    }
    println!("advect (heun):   {:.1} ms", 1e3 * t0.elapsed().as_secs_f64() / reps as f64);

    let law = TauLaw::Constant { tau: 1.0 };
    let t0 = std::time::Instant::now();
    for _ in 0..reps {
        cells
            .par_iter_mut()
            .try_for_each(|cell| -> dvkin::Result<()> {
                let local = local_moments(cell, &grid, &gas)?;
                let tau = tau_eff(&law, 0.005, &local, &gas);
                bgk_step_exact(cell, &local, &grid, &gas, dt, tau)
            })
            .unwrap();
    }
    println!("bgk collide:     {:.1} ms", 1e3 * t0.elapsed().as_secs_f64() / reps as f64);

    let t0 = std::time::Instant::now();
    for _ in 0..reps {
        cells
            .par_iter_mut()
            .try_for_each(|cell| -> dvkin::Result<()> {
                let local = local_moments(cell, &grid, &gas)?;
                let tau = tau_eff(&law, 0.005, &local, &gas);
                fp_step(cell, &local, &grid, &gas, dt, tau)
            })
            .unwrap();
    }
    println!("fp collide:      {:.1} ms", 1e3 * t0.elapsed().as_secs_f64() / reps as f64);
}
