//! Coupled transport/collision integration tests: global conservation,
//! entropy decay with transport, splitting order, and relaxation to the
//! unique equilibrium.

use dvkin::bgk::TauLaw;
use dvkin::fp::fp_step;
use dvkin::state::{local_moments, maxwellian, CellState};
use dvkin::thermo::{EnergyMode, GasModel};
use dvkin::transport::{
    equilibrium_field, run, Boundary, ModelKind, Reconstruction, RunSetup, SpatialMesh, Splitting,
};
use dvkin::vgrid::VelocityGrid;

fn gas() -> GasModel {
    GasModel::new(
        1.0,
        vec![EnergyMode::rotational(1.0).with_range(1e-3, 1e3).unwrap()],
    )
    .unwrap()
    .with_range(1e-3, 1e3)
    .unwrap()
}

fn smooth_init(mesh: &SpatialMesh, grid: &VelocityGrid, gas: &GasModel) -> Vec<CellState> {
    equilibrium_field(mesh, grid, gas, |x| {
        let s = (2.0 * std::f64::consts::PI * x).sin();
        (1.0 + 0.2 * s, [0.1 * s, 0.0, 0.0], 1.0 + 0.1 * s)
    })
    .unwrap()
}

#[test]
fn global_conservation_on_periodic_mesh() {
    let gas = gas();
    let grid = VelocityGrid::build([0.0; 3], 1.2, 1.0, 16, 6.0).unwrap();
    let mesh = SpatialMesh::new(32, 0.0, 1.0, Boundary::Periodic).unwrap();
    let mut setup = RunSetup::new(gas.clone(), grid.clone(), mesh.clone(), ModelKind::Bgk, 0.05);
    setup.tau_law = TauLaw::Constant { tau: 1.0 };
    setup.max_steps = 1000;
    setup.diag_every = 1000;

    let init = smooth_init(&mesh, &grid, &gas);
    let out = run(&setup, init).unwrap();
    assert_eq!(out.steps, 1000);
    let d0 = &out.diagnostics[0];
    let dn = out.diagnostics.last().unwrap();
    assert!(
        ((dn.mass - d0.mass) / d0.mass).abs() < 1e-11,
        "mass drift {}",
        (dn.mass - d0.mass) / d0.mass
    );
    assert!(
        ((dn.energy - d0.energy) / d0.energy).abs() < 1e-11,
        "energy drift {}",
        (dn.energy - d0.energy) / d0.energy
    );
    let mom_scale = d0.mass * (2.0f64).sqrt(); // rho * thermal speed scale
    for d in 0..3 {
        assert!(
            ((dn.momentum[d] - d0.momentum[d]) / mom_scale).abs() < 1e-11,
            "momentum[{d}] drift {}",
            dn.momentum[d] - d0.momentum[d]
        );
    }
}

#[test]
fn total_entropy_decays_with_transport() {
    let gas = gas();
    let grid = VelocityGrid::build([0.0; 3], 1.2, 1.0, 16, 6.0).unwrap();
    let mesh = SpatialMesh::new(24, 0.0, 1.0, Boundary::Periodic).unwrap();

    for (recon, slack) in [
        (Reconstruction::FirstOrder, 1e-12),
        (Reconstruction::MusclMinmod, 1e-9),
    ] {
        let mut setup = RunSetup::new(gas.clone(), grid.clone(), mesh.clone(), ModelKind::Bgk, 0.05);
        setup.tau_law = TauLaw::Constant { tau: 1.0 };
        setup.recon = recon;
        setup.cfl = 0.45;
        setup.max_steps = 200;
        setup.diag_every = 5;
        setup.entropy_diag = true;

        let init = smooth_init(&mesh, &grid, &gas);
        let out = run(&setup, init).unwrap();
        for w in out.diagnostics.windows(2) {
            let (a, b) = (w[0].h_total.unwrap(), w[1].h_total.unwrap());
            assert!(
                b <= a + slack * a.abs(),
                "{recon:?}: entropy rose from {a} to {b}"
            );
        }
    }
}

#[test]
fn strang_splitting_is_second_order_in_dt() {
    let gas = gas();
    let grid = VelocityGrid::build([0.0; 3], 1.2, 1.0, 8, 6.0).unwrap();
    let mesh = SpatialMesh::new(16, 0.0, 1.0, Boundary::Periodic).unwrap();
    let t_final = 0.16;

    let run_with_dt = |dt: f64| {
        let mut setup = RunSetup::new(gas.clone(), grid.clone(), mesh.clone(), ModelKind::Bgk, 0.05);
        setup.tau_law = TauLaw::Constant { tau: 1.0 };
        setup.splitting = Splitting::Strang;
        setup.cfl = 1.0;
        setup.dt_max = dt;
        setup.t_final = Some(t_final);
        let init = smooth_init(&mesh, &grid, &gas);
        run(&setup, init).unwrap()
    };

    let reference = run_with_dt(0.00025);
    let err = |out: &dvkin::transport::RunOutput| -> f64 {
        let mut e = 0.0;
        for (a, b) in out.final_moments.iter().zip(&reference.final_moments) {
            e += (a.rho - b.rho).powi(2) + (a.u[0] - b.u[0]).powi(2) + (a.t - b.t).powi(2);
        }
        e.sqrt()
    };

    let e1 = err(&run_with_dt(0.004));
    let e2 = err(&run_with_dt(0.002));
    let e3 = err(&run_with_dt(0.001));
    let p12 = (e1 / e2).log2();
    let p23 = (e2 / e3).log2();
    assert!(
        p12 > 1.8 && p23 > 1.8,
        "orders {p12:.2}, {p23:.2} (errors {e1:.3e}, {e2:.3e}, {e3:.3e})"
    );
}

#[test]
fn fp_relaxes_to_the_unique_equilibrium() {
    let gas = gas();
    let grid = VelocityGrid::build([0.0; 3], 1.0, 1.0, 24, 6.0).unwrap();

    // Strongly bimodal, anisotropic positive data.
    let mut f = maxwellian(0.7, [1.1, 0.4, 0.0], 0.6, 1.0, &grid);
    for (a, b) in f
        .iter_mut()
        .zip(maxwellian(0.5, [-0.8, -0.3, 0.5], 1.5, 1.0, &grid))
    {
        *a += b;
    }
    let g: Vec<f64> = f.iter().map(|&fv| 0.7 * fv).collect();
    let mut state = CellState { f, g: vec![g] };

    let tau = 0.5;
    let dt = 0.05;
    for _ in 0..300 {
        // t = 15 = 30 tau
        let local = local_moments(&state, &grid, &gas).unwrap();
        fp_step(&mut state, &local, &grid, &gas, dt, tau).unwrap();
    }

    let local = local_moments(&state, &grid, &gas).unwrap();
    let eq = dvkin::state::equilibrium_of(&local, &grid, &gas).unwrap();
    let l1: f64 = grid.integrate(
        &state
            .f
            .iter()
            .zip(&eq.m)
            .map(|(&a, &b)| (a - b).abs())
            .collect::<Vec<_>>(),
    );
    assert!(l1 / local.rho < 1e-8, "||F - M||_1 / rho = {}", l1 / local.rho);

    let l1g: f64 = grid.integrate(
        &state.g[0]
            .iter()
            .zip(&eq.m)
            .map(|(&a, &b)| (a - eq.e_int_eq[0] * b).abs())
            .collect::<Vec<_>>(),
    );
    assert!(l1g / local.rho < 1e-7, "||G - eM||_1 / rho = {}", l1g / local.rho);
}

#[test]
fn collisionless_transport_preserves_velocity_averages() {
    // At infinite Knudsen number the collision term vanishes; periodic free
    // transport conserves every velocity-space average of F over the domain.
    let gas = gas();
    let grid = VelocityGrid::build([0.0; 3], 1.0, 1.0, 12, 6.0).unwrap();
    let mesh = SpatialMesh::new(16, 0.0, 1.0, Boundary::Periodic).unwrap();
    let mut setup = RunSetup::new(gas.clone(), grid.clone(), mesh.clone(), ModelKind::Bgk, 1e12);
    setup.tau_law = TauLaw::Constant { tau: 1.0 };
    setup.max_steps = 100;

    let init = smooth_init(&mesh, &grid, &gas);
    let sum_over_cells = |cells: &[CellState], psi: &dyn Fn([f64; 3]) -> f64| -> f64 {
        cells
            .iter()
            .map(|c| grid.integrate_with(&c.f, |v| psi(v)))
            .sum()
    };
    let m0_before = sum_over_cells(&init, &|_| 1.0);
    let m3_before = sum_over_cells(&init, &|v| v[0] * v[0] * v[2] * v[2]);

    let out = run(&setup, init).unwrap();
    let m0_after = sum_over_cells(&out.final_state, &|_| 1.0);
    let m3_after = sum_over_cells(&out.final_state, &|v| v[0] * v[0] * v[2] * v[2]);
    assert!(((m0_after - m0_before) / m0_before).abs() < 1e-12);
    assert!(((m3_after - m3_before) / m3_before).abs() < 1e-12);
}

#[test]
fn lie_and_strang_agree_at_first_order() {
    let gas = gas();
    let grid = VelocityGrid::build([0.0; 3], 1.2, 1.0, 8, 6.0).unwrap();
    let mesh = SpatialMesh::new(12, 0.0, 1.0, Boundary::Periodic).unwrap();
    let mut outputs = Vec::new();
    for splitting in [Splitting::Lie, Splitting::Strang] {
        let mut setup = RunSetup::new(gas.clone(), grid.clone(), mesh.clone(), ModelKind::Bgk, 0.1);
        setup.tau_law = TauLaw::Constant { tau: 1.0 };
        setup.splitting = splitting;
        setup.t_final = Some(0.05);
        setup.dt_max = 0.005;
        setup.cfl = 1.0;
        let init = smooth_init(&mesh, &grid, &gas);
        outputs.push(run(&setup, init).unwrap());
    }
    // Same problem, O(dt) apart.
    for (a, b) in outputs[0].final_moments.iter().zip(&outputs[1].final_moments) {
        assert!((a.rho - b.rho).abs() < 5e-3 * b.rho);
    }
}
