//! Rough per-step timing of the desk-scale channel configuration.

use dvkin::bgk::TauLaw;
use dvkin::chapman::channel_gas;
use dvkin::transport::{
    equilibrium_field, run, Boundary, ModelKind, RunSetup, SpatialMesh, Wall,
};
use dvkin::vgrid::VelocityGrid;

fn main() {
    let gas = channel_gas();
    let grid = VelocityGrid::build([0.0; 3], 1.05, 1.0, 32, 6.0).unwrap();
    let wall = Wall {
        t_w: 1.0,
        u_w: [0.0, 0.05, 0.0],
    };
    let mesh = SpatialMesh::new(
        100,
        0.0,
        1.0,
        Boundary::DiffuseWalls {
            left: Wall {
                t_w: 1.0,
                u_w: [0.0, -0.05, 0.0],
            },
            right: wall,
        },
    )
    .unwrap();

    for model in [ModelKind::Bgk, ModelKind::Fp] {
        let mut setup = RunSetup::new(gas.clone(), grid.clone(), mesh.clone(), model, 0.005);
        setup.tau_law = TauLaw::Constant { tau: 1.0 };
        setup.max_steps = 200;
        let init = equilibrium_field(&setup.mesh, &setup.grid, &gas, |x| {
            (1.0, [0.0, 0.1 * (x - 0.5), 0.0], 1.0)
        })
        .unwrap();
        let t0 = std::time::Instant::now();
        let out = run(&setup, init).unwrap();
        let dt = t0.elapsed().as_secs_f64();
        println!(
            "{:?}: {} steps in {:.2}s -> {:.1} ms/step (sim dt per step: {:.2e})",
            model,
            out.steps,
            dt,
            1e3 * dt / out.steps as f64,
            out.time / out.steps as f64
        );
    }
}
