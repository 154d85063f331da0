//! Hydrodynamic-limit predictions and the numerical experiments that verify
//! them against the solver.
//!
//! The small-Knudsen closure of both collision models yields Navier-Stokes
//! fluxes with
//!
//!   BGK:            mu = tau p,        kappa = mu c_p,        Pr = 1
//!   Fokker-Planck:  mu = tau p / 2,    kappa = (2/3) mu c_p,  Pr = 3/2
//!
//! and volume-viscosity coefficient alpha = c_p/c_v - 1 for both. This
//! module provides those predictions, the first-order perturbation fields
//! A, B and their internal-energy counterparts, eigen-tests of the
//! linearised Fokker-Planck operators, and steady Couette/Fourier and Sod
//! experiments that extract the coefficients from full solver runs.

use crate::bgk::TauLaw;
use crate::error::{CoreError, Result};
use crate::fp::ScaledLinearOps;
use crate::riemann::{self, PrimState};
use crate::state::{LocalMoments, Moments};
use crate::thermo::{EnergyMode, GasModel};
use crate::transport::{
    equilibrium_field, run, Boundary, ModelKind, RunOutput, RunSetup, SpatialMesh, SteadyDetector,
    SteadyQuantity, Wall,
};
use crate::vgrid::VelocityGrid;
use serde::Serialize;

/// First-order closure coefficients of the Fokker-Planck model: the
/// perturbation a A . grad T / sqrt(T) + b B : grad u solves the linearised
/// balance because L_F(A) = -3A and L_F(B) = -2B force a = -tau/3 and
/// b = -tau/2 (with tau = 1 in scaled variables). The magnitudes 1/3 and
/// 1/2 are what produce kappa = (2/3) mu c_p and mu = tau p / 2.
pub const FP_CLOSURE_A: f64 = -1.0 / 3.0;
pub const FP_CLOSURE_B: f64 = -0.5;

/// Navier-Stokes transport coefficients predicted for one model.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct TransportPrediction {
    pub model: ModelKind,
    pub mu: f64,
    pub kappa: f64,
    pub alpha: f64,
    pub pr: f64,
}

/// Closed-form coefficient prediction at the given state.
pub fn predict(
    model: ModelKind,
    tau_eff: f64,
    local: &LocalMoments,
    gas: &GasModel,
) -> Result<TransportPrediction> {
    let p = local.pressure(gas);
    if !(p > 0.0) {
        return Err(CoreError::DegenerateState(format!(
            "prediction needs positive pressure (got {p})"
        )));
    }
    let c_p = gas.c_p(local.t)?;
    let c_v = gas.c_v(local.t)?;
    let (mu, kappa) = match model {
        ModelKind::Bgk => {
            let mu = tau_eff * p;
            (mu, mu * c_p)
        }
        ModelKind::Fp => {
            let mu = 0.5 * tau_eff * p;
            (mu, 2.0 / 3.0 * mu * c_p)
        }
    };
    Ok(TransportPrediction {
        model,
        mu,
        kappa,
        alpha: c_p / c_v - 1.0,
        pr: mu * c_p / kappa,
    })
}

/// The four perturbation fields in the scaled variable V = (v - u)/sqrt(RT),
/// stored per tensor component over the grid nodes.
pub struct AbFields {
    pub a: [Vec<f64>; 3],
    pub b: [[Vec<f64>; 3]; 3],
    pub a_tilde: [Vec<f64>; 3],
    pub b_tilde: [[Vec<f64>; 3]; 3],
}

/// Evaluates A, B and their internal-energy counterparts at every node.
///
/// A_i     = (|V|^2/2 - 5/2) V_i
/// B_ij    = V_i V_j - ((R/c_v) |V|^2/2 + e'/c_v) d_ij
/// A~_i    = A_i + (T e' / e_int) V_i
/// B~_ij   = B_ij - (R T e' / (c_v e_int)) d_ij
///
/// with c_v the total specific heat and e' = d e_int/dT at T. The tilde
/// fields need e_int > 0 and are absent for a monatomic gas.
pub fn ab_fields(grid: &VelocityGrid, u: [f64; 3], t: f64, gas: &GasModel) -> Result<AbFields> {
    let r = gas.r();
    let c_v = gas.c_v(t)?;
    let e_prime = gas.c_v_int(t)?;
    let e_int = gas.e_int_of_t(t)?;
    let have_tilde = e_int > 0.0;
    let sqrt_rt = (r * t).sqrt();

    let scaled = |v: [f64; 3]| -> [f64; 3] {
        [
            (v[0] - u[0]) / sqrt_rt,
            (v[1] - u[1]) / sqrt_rt,
            (v[2] - u[2]) / sqrt_rt,
        ]
    };

    let a: [Vec<f64>; 3] = std::array::from_fn(|i| {
        grid.fill(|v| {
            let vv = scaled(v);
            let v2 = vv[0] * vv[0] + vv[1] * vv[1] + vv[2] * vv[2];
            (0.5 * v2 - 2.5) * vv[i]
        })
    });

    let iso = move |v2: f64| (r / c_v) * 0.5 * v2 + e_prime / c_v;
    let b: [[Vec<f64>; 3]; 3] = std::array::from_fn(|i| {
        std::array::from_fn(|j| {
            grid.fill(|v| {
                let vv = scaled(v);
                let v2 = vv[0] * vv[0] + vv[1] * vv[1] + vv[2] * vv[2];
                let d = if i == j { 1.0 } else { 0.0 };
                vv[i] * vv[j] - iso(v2) * d
            })
        })
    });

    let (a_tilde, b_tilde) = if have_tilde {
        let ta = t * e_prime / e_int;
        let tb = r * t * e_prime / (c_v * e_int);
        let at: [Vec<f64>; 3] = std::array::from_fn(|i| {
            a[i].iter()
                .zip(grid.fill(|v| scaled(v)[i]))
                .map(|(&ai, vi)| ai + ta * vi)
                .collect()
        });
        let bt: [[Vec<f64>; 3]; 3] = std::array::from_fn(|i| {
            std::array::from_fn(|j| {
                if i == j {
                    b[i][j].iter().map(|&x| x - tb).collect()
                } else {
                    b[i][j].clone()
                }
            })
        });
        (at, bt)
    } else {
        (
            std::array::from_fn(|_| Vec::new()),
            std::array::from_fn(|_| std::array::from_fn(|_| Vec::new())),
        )
    };

    Ok(AbFields {
        a,
        b,
        a_tilde,
        b_tilde,
    })
}

/// One relative residual of the linearised-operator identities, measured in
/// the Maxwellian-weighted L2 norm.
#[derive(Debug, Clone, Serialize)]
pub struct EigenResiduals {
    pub n: usize,
    pub dv: f64,
    /// || L_F(A) + 3A || / ||A||
    pub a: f64,
    /// || L_F(B) + 2B || / ||B||
    pub b: f64,
    /// || L_G(A, A~) + 3A~ || / ||A~||
    pub a_tilde: f64,
    /// || L_G(B, B~) + 2B~ || / ||B~||
    pub b_tilde: f64,
    /// Closure residual of the F balance with a = -1/3, b = -1/2.
    pub closure_f: f64,
    /// Closure residual of the G balance.
    pub closure_g: f64,
}

/// Evaluates all eigenrelation and closure residuals on an n^3 scaled grid.
pub fn fp_eigen_residuals(n: usize, span: f64, gas: &GasModel, t: f64) -> Result<EigenResiduals> {
    if (gas.r() - 1.0).abs() > 1e-12 {
        return Err(CoreError::Config(
            "eigen-tests run in scaled variables; use a gas with R = 1".into(),
        ));
    }
    let grid = VelocityGrid::build([0.0; 3], 1.0, 1.0, n, span)?;
    let ops = ScaledLinearOps::new(&grid);
    let fields = ab_fields(&grid, [0.0; 3], t, gas)?;

    let norm_pair = |resids: &[Vec<f64>], bases: &[Vec<f64>]| -> f64 {
        let num: f64 = resids.iter().map(|r| ops.m_norm(r).powi(2)).sum();
        let den: f64 = bases.iter().map(|b| ops.m_norm(b).powi(2)).sum();
        (num / den).sqrt()
    };

    // L_F(A) + 3A
    let ra: Vec<Vec<f64>> = (0..3)
        .map(|i| {
            let l = ops.l_f(&fields.a[i]);
            l.iter()
                .zip(&fields.a[i])
                .map(|(&x, &y)| x + 3.0 * y)
                .collect()
        })
        .collect();
    let r_a = norm_pair(&ra, &fields.a);

    // L_F(B) + 2B
    let mut rb = Vec::new();
    let mut bb = Vec::new();
    for i in 0..3 {
        for j in 0..3 {
            let l = ops.l_f(&fields.b[i][j]);
            rb.push(
                l.iter()
                    .zip(&fields.b[i][j])
                    .map(|(&x, &y)| x + 2.0 * y)
                    .collect::<Vec<f64>>(),
            );
            bb.push(fields.b[i][j].clone());
        }
    }
    let r_b = norm_pair(&rb, &bb);

    // L_G(A, A~) + 3A~
    let rat: Vec<Vec<f64>> = (0..3)
        .map(|i| {
            let l = ops.l_g(&fields.a[i], &fields.a_tilde[i]);
            l.iter()
                .zip(&fields.a_tilde[i])
                .map(|(&x, &y)| x + 3.0 * y)
                .collect()
        })
        .collect();
    let r_a_tilde = norm_pair(&rat, &fields.a_tilde);

    // L_G(B, B~) + 2B~
    let mut rbt = Vec::new();
    let mut bbt = Vec::new();
    for i in 0..3 {
        for j in 0..3 {
            let l = ops.l_g(&fields.b[i][j], &fields.b_tilde[i][j]);
            rbt.push(
                l.iter()
                    .zip(&fields.b_tilde[i][j])
                    .map(|(&x, &y)| x + 2.0 * y)
                    .collect::<Vec<f64>>(),
            );
            bbt.push(fields.b_tilde[i][j].clone());
        }
    }
    let r_b_tilde = norm_pair(&rbt, &bbt);

    // Closure: with manufactured gradients g = grad T / sqrt(T) and S = grad
    // u, the ansatz F1 = a A.g + b B:S must satisfy L_F(F1) = A.g + B:S, and
    // G1 = a A~.g + b B~:S must satisfy L_G(F1, G1) = A~.g + B~:S.
    let g_vec = [0.7, -0.4, 0.2];
    let s_ten = [[0.3, 1.1, -0.2], [0.5, -0.9, 0.4], [-0.6, 0.8, 0.6]];
    let combine = |va: &[Vec<f64>; 3], vb: &[[Vec<f64>; 3]; 3], ca: f64, cb: f64| -> Vec<f64> {
        let mut out = vec![0.0; grid.len()];
        for i in 0..3 {
            for (o, &x) in out.iter_mut().zip(&va[i]) {
                *o += ca * g_vec[i] * x;
            }
            for j in 0..3 {
                // B : grad u contracts B_ij with d u_i / d x_j.
                for (o, &x) in out.iter_mut().zip(&vb[i][j]) {
                    *o += cb * s_ten[i][j] * x;
                }
            }
        }
        out
    };
    let f1 = combine(&fields.a, &fields.b, FP_CLOSURE_A, FP_CLOSURE_B);
    let g1 = combine(&fields.a_tilde, &fields.b_tilde, FP_CLOSURE_A, FP_CLOSURE_B);
    let rhs_f = combine(&fields.a, &fields.b, 1.0, 1.0);
    let rhs_g = combine(&fields.a_tilde, &fields.b_tilde, 1.0, 1.0);

    let lf = ops.l_f(&f1);
    let res_f: Vec<f64> = lf.iter().zip(&rhs_f).map(|(&x, &y)| x - y).collect();
    let closure_f = ops.m_norm(&res_f) / ops.m_norm(&rhs_f);

    let lg = ops.l_g(&f1, &g1);
    let res_g: Vec<f64> = lg.iter().zip(&rhs_g).map(|(&x, &y)| x - y).collect();
    let closure_g = ops.m_norm(&res_g) / ops.m_norm(&rhs_g);

    Ok(EigenResiduals {
        n,
        dv: grid.dv()[0],
        a: r_a,
        b: r_b,
        a_tilde: r_a_tilde,
        b_tilde: r_b_tilde,
        closure_f,
        closure_g,
    })
}

/// Least-squares linear fit y = a + b x; returns (a, b).
fn linfit(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let sx: f64 = xs.iter().sum();
    let sy: f64 = ys.iter().sum();
    let sxx: f64 = xs.iter().map(|x| x * x).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| x * y).sum();
    let b = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    let a = (sy - b * sx) / n;
    (a, b)
}

/// Gradient fit over the core 60% of the channel.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct CoreFit {
    /// Fitted gradient of the driving field (u_y or T).
    pub gradient: f64,
    /// Core-averaged transported flux (sigma_xy or q_x).
    pub mean_flux: f64,
    /// Extracted coefficient: -flux / gradient.
    pub coefficient: f64,
    pub p_core: f64,
    pub t_core: f64,
}

fn core_fit(
    cells: &[Moments],
    mesh: &SpatialMesh,
    field: impl Fn(&Moments) -> f64,
    flux: impl Fn(&Moments) -> f64,
) -> CoreFit {
    let core = crate::transport::core_cells(mesh.n_cells);
    let xs: Vec<f64> = core.clone().map(|i| mesh.cell_center(i)).collect();
    let ys: Vec<f64> = core.clone().map(|i| field(&cells[i])).collect();
    let (_, gradient) = linfit(&xs, &ys);
    let n = core.len() as f64;
    let mean_flux = core.clone().map(|i| flux(&cells[i])).sum::<f64>() / n;
    let p_core = core.clone().map(|i| cells[i].p).sum::<f64>() / n;
    let t_core = core.clone().map(|i| cells[i].t).sum::<f64>() / n;
    CoreFit {
        gradient,
        mean_flux,
        coefficient: -mean_flux / gradient,
        p_core,
        t_core,
    }
}

/// Effective viscosity -sigma_xy / (d u_y/dx) from a steady Couette run.
pub fn couette_viscosity(out: &RunOutput, mesh: &SpatialMesh) -> Result<CoreFit> {
    if !out.steady {
        return Err(CoreError::NotSteady(format!(
            "Couette run stopped after {} steps without meeting the steadiness criterion",
            out.steps
        )));
    }
    Ok(core_fit(
        &out.final_moments,
        mesh,
        |m| m.u[1],
        |m| m.sigma[0][1],
    ))
}

/// Effective conductivity -q_x / (dT/dx) from a steady Fourier run.
pub fn fourier_conductivity(out: &RunOutput, mesh: &SpatialMesh) -> Result<CoreFit> {
    if !out.steady {
        return Err(CoreError::NotSteady(format!(
            "Fourier run stopped after {} steps without meeting the steadiness criterion",
            out.steps
        )));
    }
    Ok(core_fit(&out.final_moments, mesh, |m| m.t, |m| m.q[0]))
}

/// Nondimensional working gas of the channel experiments: R = 1 with one
/// fully excited linear internal mode (c_v = 5/2, c_p = 7/2, gamma = 7/5).
pub fn channel_gas() -> GasModel {
    GasModel::new(
        1.0,
        vec![EnergyMode::rotational(1.0)
            .with_range(1e-3, 1e3)
            .expect("valid range")],
    )
    .expect("valid gas")
    .with_range(1e-3, 1e3)
    .expect("valid range")
}

/// Configuration of one steady channel experiment (nondimensional: channel
/// length 1, base density and temperature 1, constant tau).
#[derive(Debug, Clone)]
pub struct ChannelSpec {
    pub model: ModelKind,
    pub kn: f64,
    pub n_cells: usize,
    pub n_v: usize,
    pub span: f64,
    pub tau: f64,
    /// Couette: each wall moves at +/- u_wall in y.
    pub u_wall: f64,
    /// Fourier: wall temperatures 1 -/+ delta_t/2.
    pub delta_t: f64,
    pub cfl: f64,
    pub max_steps: usize,
    pub t_min_steady: f64,
}

impl ChannelSpec {
    /// Desk-scale defaults: 100 cells, 32^3 velocities. The relaxation time
    /// is chosen so the momentum/heat diffusion time across the channel is
    /// short enough for a minutes-scale approach to steady state; only the
    /// ratio of measured to predicted coefficient matters.
    pub fn desk(model: ModelKind, kn: f64) -> Self {
        let tau = match model {
            ModelKind::Bgk => 10.0,
            ModelKind::Fp => 20.0,
        };
        Self {
            model,
            kn,
            n_cells: 100,
            n_v: 32,
            span: 6.0,
            tau,
            u_wall: 0.05,
            delta_t: 0.05,
            cfl: 0.85,
            max_steps: 100_000,
            t_min_steady: 2.0,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ChannelOutcome {
    pub model: ModelKind,
    pub kn: f64,
    pub fit: CoreFit,
    pub predicted: f64,
    pub ratio: f64,
    pub c_p_core: f64,
    pub steps: usize,
    pub time: f64,
    pub wall_seconds: f64,
}

/// Tuned velocity-slip / temperature-jump scale for the near-steady initial
/// profiles; only affects how fast the run settles, not the extracted
/// coefficients.
fn slip_length(model: ModelKind, tau_eff: f64) -> f64 {
    match model {
        ModelKind::Bgk => 1.15 * tau_eff,
        ModelKind::Fp => 0.75 * tau_eff,
    }
}

fn channel_setup(spec: &ChannelSpec, boundary: Boundary, quantity: SteadyQuantity) -> Result<(RunSetup, f64)> {
    let gas = channel_gas();
    let t_ref = 1.0 + spec.delta_t;
    let grid = VelocityGrid::build([0.0; 3], t_ref, 1.0, spec.n_v, spec.span)?;
    let mesh = SpatialMesh::new(spec.n_cells, 0.0, 1.0, boundary)?;
    let tau_eff = spec.kn * spec.tau;
    let mut setup = RunSetup::new(gas, grid, mesh, spec.model, spec.kn);
    setup.tau_law = TauLaw::Constant { tau: spec.tau };
    setup.cfl = spec.cfl;
    setup.max_steps = spec.max_steps;
    setup.steady = Some(SteadyDetector {
        quantity,
        window: 100,
        rel_tol: 1e-6,
        t_min: spec.t_min_steady,
    });
    Ok((setup, tau_eff))
}

/// Steady planar Couette flow; extracts the effective viscosity.
pub fn couette_experiment(spec: &ChannelSpec) -> Result<ChannelOutcome> {
    let wall_t = 1.0;
    let boundary = Boundary::DiffuseWalls {
        left: Wall {
            t_w: wall_t,
            u_w: [0.0, -spec.u_wall, 0.0],
        },
        right: Wall {
            t_w: wall_t,
            u_w: [0.0, spec.u_wall, 0.0],
        },
    };
    let (setup, tau_eff) = channel_setup(spec, boundary, SteadyQuantity::ShearStressXy)?;
    let gas = &setup.gas;

    // Near-steady initial condition: slip-corrected linear shear profile,
    // the weak viscous-heating temperature bump, and the first-order
    // anisotropy of the distribution so only small transients remain.
    let ls = slip_length(spec.model, tau_eff);
    let du_eff = 2.0 * spec.u_wall / (1.0 + 2.0 * ls);
    let slope = du_eff;
    let base = LocalMoments {
        rho: 1.0,
        u: [0.0; 3],
        e_tr: 1.5 * wall_t,
        e_int_modes: vec![wall_t],
        e: 2.5 * wall_t,
        t: wall_t,
    };
    let pred = predict(spec.model, tau_eff, &base, gas)?;
    let heat_coeff = pred.mu * slope * slope / (2.0 * pred.kappa);
    let shear_fac = match spec.model {
        ModelKind::Bgk => 1.0,
        ModelKind::Fp => 0.5,
    };

    let mut cells = equilibrium_field(&setup.mesh, &setup.grid, gas, |x| {
        let t = wall_t + heat_coeff * x * (1.0 - x);
        let rho = 1.0 / t; // uniform pressure p = rho R T = 1
        (rho, [0.0, slope * (x - 0.5), 0.0], t)
    })?;
    for (i, cell) in cells.iter_mut().enumerate() {
        let x = setup.mesh.cell_center(i);
        let uy = slope * (x - 0.5);
        let rt = wall_t; // correction factor at the base temperature
        let corr: Vec<f64> = setup
            .grid
            .fill(|v| -shear_fac * tau_eff * v[0] * (v[1] - uy) * slope / rt);
        for (f, c) in cell.f.iter_mut().zip(&corr) {
            *f *= 1.0 + c;
        }
        for g in cell.g.iter_mut() {
            for (gv, c) in g.iter_mut().zip(&corr) {
                *gv *= 1.0 + c;
            }
        }
    }

    let out = run(&setup, cells)?;
    let fit = couette_viscosity(&out, &setup.mesh)?;
    let core_local = LocalMoments {
        rho: fit.p_core / fit.t_core,
        u: [0.0; 3],
        e_tr: 1.5 * fit.t_core,
        e_int_modes: vec![fit.t_core],
        e: 2.5 * fit.t_core,
        t: fit.t_core,
    };
    let predicted = predict(spec.model, tau_eff, &core_local, gas)?;
    Ok(ChannelOutcome {
        model: spec.model,
        kn: spec.kn,
        fit,
        predicted: predicted.mu,
        ratio: fit.coefficient / predicted.mu,
        c_p_core: gas.c_p(fit.t_core)?,
        steps: out.steps,
        time: out.time,
        wall_seconds: out.wall_seconds,
    })
}

/// Steady heat conduction between walls at different temperatures; extracts
/// the effective conductivity.
pub fn fourier_experiment(spec: &ChannelSpec) -> Result<ChannelOutcome> {
    let t_cold = 1.0 - 0.5 * spec.delta_t;
    let t_hot = 1.0 + 0.5 * spec.delta_t;
    let boundary = Boundary::DiffuseWalls {
        left: Wall {
            t_w: t_cold,
            u_w: [0.0; 3],
        },
        right: Wall {
            t_w: t_hot,
            u_w: [0.0; 3],
        },
    };
    let (setup, tau_eff) = channel_setup(spec, boundary, SteadyQuantity::HeatFluxX)?;
    let gas = &setup.gas;

    let lj = 1.65 * slip_length(spec.model, tau_eff);
    let dt_eff = spec.delta_t / (1.0 + 2.0 * lj);
    let slope = dt_eff;
    let thermal_fac = match spec.model {
        ModelKind::Bgk => 1.0,
        ModelKind::Fp => 1.0 / 3.0,
    };

    let mut cells = equilibrium_field(&setup.mesh, &setup.grid, gas, |x| {
        let t = 1.0 + slope * (x - 0.5);
        (1.0 / t, [0.0; 3], t)
    })?;
    let e_prime = 1.0; // linear internal mode, R = 1
    for (i, cell) in cells.iter_mut().enumerate() {
        let x = setup.mesh.cell_center(i);
        let t = 1.0 + slope * (x - 0.5);
        let e_int = t;
        let corr_a: Vec<f64> = setup.grid.fill(|v| {
            let c2 = v[0] * v[0] + v[1] * v[1] + v[2] * v[2];
            -thermal_fac * tau_eff * v[0] * (slope / t) * (0.5 * c2 / t - 2.5)
        });
        let corr_at: Vec<f64> = setup.grid.fill(|v| {
            let c2 = v[0] * v[0] + v[1] * v[1] + v[2] * v[2];
            -thermal_fac
                * tau_eff
                * v[0]
                * (slope / t)
                * (0.5 * c2 / t - 2.5 + t * e_prime / e_int)
        });
        for (f, c) in cell.f.iter_mut().zip(&corr_a) {
            *f *= 1.0 + c;
        }
        for g in cell.g.iter_mut() {
            for (gv, c) in g.iter_mut().zip(&corr_at) {
                *gv *= 1.0 + c;
            }
        }
    }

    let out = run(&setup, cells)?;
    let fit = fourier_conductivity(&out, &setup.mesh)?;
    let core_local = LocalMoments {
        rho: fit.p_core / fit.t_core,
        u: [0.0; 3],
        e_tr: 1.5 * fit.t_core,
        e_int_modes: vec![fit.t_core],
        e: 2.5 * fit.t_core,
        t: fit.t_core,
    };
    let predicted = predict(spec.model, tau_eff, &core_local, gas)?;
    Ok(ChannelOutcome {
        model: spec.model,
        kn: spec.kn,
        fit,
        predicted: predicted.kappa,
        ratio: fit.coefficient / predicted.kappa,
        c_p_core: gas.c_p(fit.t_core)?,
        steps: out.steps,
        time: out.time,
        wall_seconds: out.wall_seconds,
    })
}

/// Sod shock-tube configuration for the small-Knudsen (Euler) limit.
#[derive(Debug, Clone)]
pub struct SodSpec {
    pub model: ModelKind,
    pub kn_values: Vec<f64>,
    pub n_cells: usize,
    pub n_v: usize,
    pub t_final: f64,
    pub cfl: f64,
}

impl Default for SodSpec {
    fn default() -> Self {
        Self {
            model: ModelKind::Bgk,
            kn_values: vec![0.05, 0.01, 0.002],
            n_cells: 100,
            n_v: 32,
            t_final: 0.2,
            cfl: 0.5,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SodOutcome {
    pub kn_values: Vec<f64>,
    pub l1_rho: Vec<f64>,
    pub l1_u: Vec<f64>,
    pub l1_t: Vec<f64>,
    /// Star pressure of the oracle (bisection on the pressure function).
    pub p_star: f64,
    pub gamma: f64,
}

/// Runs the Sod problem at each Knudsen number and measures L1 errors of
/// (rho, u, T) against the exact Riemann solution.
pub fn sod_experiment(spec: &SodSpec) -> Result<SodOutcome> {
    let gas = channel_gas(); // e_int = R T, gamma = 7/5
    let t_probe = 1.0;
    let gamma = gas.c_p(t_probe)? / gas.c_v(t_probe)?;
    let left = PrimState::new(1.0, 0.0, 1.0);
    let right = PrimState::new(0.125, 0.0, 0.1);
    let oracle = riemann::solve(left, right, gamma)?;

    // Velocity bounds from the oracle's own extremes.
    let mut u_min = f64::INFINITY;
    let mut u_max = f64::NEG_INFINITY;
    let mut t_max: f64 = 0.0;
    for k in 0..=400 {
        let xi = -3.0 + 6.0 * k as f64 / 400.0;
        let s = oracle.sample(xi);
        u_min = u_min.min(s.u);
        u_max = u_max.max(s.u);
        t_max = t_max.max(s.p / (s.rho * gas.r()));
    }
    let half = 6.0 * (gas.r() * t_max).sqrt();
    let grid = VelocityGrid::from_bounds(
        [spec.n_v; 3],
        [u_min - half, -half, -half],
        [u_max + half, half, half],
    )?;

    let mesh = SpatialMesh::new(spec.n_cells, 0.0, 1.0, Boundary::InflowOutflow)?;
    let t_left = left.p / (left.rho * gas.r());
    let t_right = right.p / (right.rho * gas.r());

    let mut l1_rho = Vec::new();
    let mut l1_u = Vec::new();
    let mut l1_t = Vec::new();
    for &kn in &spec.kn_values {
        let mut setup = RunSetup::new(gas.clone(), grid.clone(), mesh.clone(), spec.model, kn);
        setup.tau_law = TauLaw::Constant { tau: 1.0 };
        setup.cfl = spec.cfl;
        setup.t_final = Some(spec.t_final);
        setup.max_steps = 2_000_000;

        let init = equilibrium_field(&setup.mesh, &setup.grid, &gas, |x| {
            if x < 0.5 {
                (left.rho, [left.u, 0.0, 0.0], t_left)
            } else {
                (right.rho, [right.u, 0.0, 0.0], t_right)
            }
        })?;
        let out = run(&setup, init)?;

        let dx = mesh.dx();
        let (mut er, mut eu, mut et) = (0.0, 0.0, 0.0);
        for (i, m) in out.final_moments.iter().enumerate() {
            let xi = (mesh.cell_center(i) - 0.5) / spec.t_final;
            let exact = oracle.sample(xi);
            let t_exact = exact.p / (exact.rho * gas.r());
            er += (m.rho - exact.rho).abs() * dx;
            eu += (m.u[0] - exact.u).abs() * dx;
            et += (m.t - t_exact).abs() * dx;
        }
        l1_rho.push(er);
        l1_u.push(eu);
        l1_t.push(et);
    }

    Ok(SodOutcome {
        kn_values: spec.kn_values.clone(),
        l1_rho,
        l1_u,
        l1_t,
        p_star: oracle.p_star,
        gamma,
    })
}
