//! 1D-in-space advection of (F, G^1..G^n), boundary conditions, and the
//! coupled transport/collision time loop.
//!
//! Space is discretised by a finite-volume mesh along x; every velocity node
//! advects independently at its own speed v_x with a minmod-limited
//! second-order upwind reconstruction and Heun (SSP-RK2) time stepping.
//! Collisions are cell-local and dispatched to the BGK or Fokker-Planck
//! steps. The default composition is Strang splitting with the half
//! transport steps of adjacent time steps fused between event boundaries.

use crate::bgk::{self, TauLaw};
use crate::entropy;
use crate::error::{CoreError, Result};
use crate::fp;
use crate::state::{equilibrium_state, local_moments, maxwellian, moments, CellState, Moments};
use crate::thermo::GasModel;
use crate::vgrid::VelocityGrid;
use rayon::prelude::*;
use serde::Serialize;

/// Diffuse-wall description: tangential velocity only.
#[derive(Debug, Clone, Copy)]
pub struct Wall {
    pub t_w: f64,
    pub u_w: [f64; 3],
}

#[derive(Debug, Clone)]
pub enum Boundary {
    Periodic,
    DiffuseWalls { left: Wall, right: Wall },
    /// Ghost states frozen at the initial boundary cells.
    InflowOutflow,
}

#[derive(Debug, Clone)]
pub struct SpatialMesh {
    pub n_cells: usize,
    pub x_min: f64,
    pub x_max: f64,
    pub boundary: Boundary,
}

impl SpatialMesh {
    pub fn new(n_cells: usize, x_min: f64, x_max: f64, boundary: Boundary) -> Result<Self> {
        if n_cells == 0 || !(x_max > x_min) {
            return Err(CoreError::Config(format!(
                "invalid mesh: {n_cells} cells on [{x_min}, {x_max}]"
            )));
        }
        if let Boundary::DiffuseWalls { left, right } = &boundary {
            for w in [left, right] {
                if w.u_w[0] != 0.0 {
                    return Err(CoreError::Config(
                        "wall velocity must be tangential (zero x component)".into(),
                    ));
                }
                if !(w.t_w > 0.0) {
                    return Err(CoreError::Config(format!(
                        "wall temperature {} must be positive",
                        w.t_w
                    )));
                }
            }
        }
        Ok(Self {
            n_cells,
            x_min,
            x_max,
            boundary,
        })
    }

    pub fn dx(&self) -> f64 {
        (self.x_max - self.x_min) / self.n_cells as f64
    }

    pub fn cell_center(&self, i: usize) -> f64 {
        self.x_min + (i as f64 + 0.5) * self.dx()
    }

    pub fn length(&self) -> f64 {
        self.x_max - self.x_min
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Reconstruction {
    FirstOrder,
    MusclMinmod,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Splitting {
    Lie,
    Strang,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ModelKind {
    Bgk,
    Fp,
}

impl ModelKind {
    pub fn tag(&self) -> &'static str {
        match self {
            ModelKind::Bgk => "bgk",
            ModelKind::Fp => "fp",
        }
    }
}

/// Ghost values for a diffuse wall: outgoing particles are absorbed and the
/// incoming half space is repopulated by a wall Maxwellian at (T_w, u_w)
/// whose density enforces zero net mass flux against the adjacent cell.
pub fn diffuse_wall_ghost(
    adjacent: &CellState,
    left_wall: bool,
    wall: &Wall,
    grid: &VelocityGrid,
    gas: &GasModel,
) -> Result<CellState> {
    let m_unit = maxwellian(1.0, wall.u_w, wall.t_w, gas.r(), grid);
    let [nx, ny, nz] = grid.n();
    let ax = grid.axis(0);
    let plane = ny * nz;

    // Signed mass fluxes: incoming for a unit-density wall Maxwellian, and
    // outgoing from the adjacent cell (first-order evaluation at the wall).
    let mut influx_unit = 0.0;
    let mut outflux = 0.0;
    for ix in 0..nx {
        let v = ax[ix];
        let incoming = if left_wall { v > 0.0 } else { v < 0.0 };
        let block = &adjacent.f[ix * plane..(ix + 1) * plane];
        let m_block = &m_unit[ix * plane..(ix + 1) * plane];
        if incoming {
            let s: f64 = m_block.iter().sum();
            influx_unit += v * s;
        } else {
            let s: f64 = block.iter().sum();
            outflux += v * s;
        }
    }
    if influx_unit == 0.0 {
        return Err(CoreError::Numerical(
            "wall Maxwellian carries no incoming flux on this grid".into(),
        ));
    }
    let rho_w = -outflux / influx_unit;
    let e_modes = gas.e_int_modes_of_t(wall.t_w)?;
    let f: Vec<f64> = m_unit.iter().map(|&m| rho_w * m).collect();
    let g = e_modes
        .iter()
        .map(|&e| f.iter().map(|&fv| e * fv).collect())
        .collect();
    Ok(CellState { f, g })
}

/// Per-field scratch for one advection sweep.
struct FieldBufs {
    slope_a: Vec<f64>,
    slope_b: Vec<f64>,
    flux_prev: Vec<f64>,
    flux_cur: Vec<f64>,
}

/// Scratch buffers for the advection sweeps. Field-major staging arrays let
/// the sweeps parallelise over (F, G^1..G^n) with disjoint writes, which
/// keeps results bit-reproducible.
pub struct TransportWs {
    /// [field][cell][node]
    stage: Vec<Vec<Vec<f64>>>,
    spare: Vec<Vec<Vec<f64>>>,
    bufs: Vec<FieldBufs>,
    /// Frozen inflow/outflow ghosts, [side][field][node].
    frozen: Option<[Vec<Vec<f64>>; 2]>,
    /// Unit-density wall Maxwellians per side.
    wall_cache: Option<[Vec<f64>; 2]>,
    pub negative_clips: u64,
}

fn cell_fields(cell: &CellState) -> Vec<Vec<f64>> {
    let mut v = Vec::with_capacity(1 + cell.n_modes());
    v.push(cell.f.clone());
    for g in &cell.g {
        v.push(g.clone());
    }
    v
}

impl TransportWs {
    pub fn new(states: &[CellState], grid: &VelocityGrid, mesh: &SpatialMesh, gas: &GasModel) -> Self {
        let len = grid.len();
        let n_fields = 1 + states[0].n_modes();
        let frozen = match mesh.boundary {
            Boundary::InflowOutflow => Some([
                cell_fields(&states[0]),
                cell_fields(&states[states.len() - 1]),
            ]),
            _ => None,
        };
        let wall_cache = match &mesh.boundary {
            Boundary::DiffuseWalls { left, right } => {
                Some([left, right].map(|w| maxwellian(1.0, w.u_w, w.t_w, gas.r(), grid)))
            }
            _ => None,
        };
        Self {
            stage: vec![vec![vec![0.0; len]; states.len()]; n_fields],
            spare: vec![vec![vec![0.0; len]; states.len()]; n_fields],
            bufs: (0..n_fields)
                .map(|_| FieldBufs {
                    slope_a: vec![0.0; len],
                    slope_b: vec![0.0; len],
                    flux_prev: vec![0.0; len],
                    flux_cur: vec![0.0; len],
                })
                .collect(),
            frozen,
            wall_cache,
            negative_clips: 0,
        }
    }
}

fn field_of(cell: &CellState, k: usize) -> &[f64] {
    if k == 0 {
        &cell.f
    } else {
        &cell.g[k - 1]
    }
}

#[inline]
fn minmod(a: f64, b: f64) -> f64 {
    if a * b <= 0.0 {
        0.0
    } else if a.abs() < b.abs() {
        a
    } else {
        b
    }
}

/// Read-only view of either cell-major or field-major field data.
#[derive(Clone, Copy)]
enum FieldView<'a> {
    Cells(&'a [CellState]),
    Flat(&'a [Vec<Vec<f64>>]),
}

impl<'a> FieldView<'a> {
    #[inline]
    fn get(&self, cell: usize, k: usize) -> &'a [f64] {
        match self {
            FieldView::Cells(c) => field_of(&c[cell], k),
            FieldView::Flat(f) => &f[k][cell],
        }
    }
}

/// Ghost field values for both sides, [side][field][node].
fn ghost_fields(
    src: FieldView<'_>,
    ws: &TransportWs,
    mesh: &SpatialMesh,
    grid: &VelocityGrid,
    gas: &GasModel,
    n_fields: usize,
) -> Result<Option<[Vec<Vec<f64>>; 2]>> {
    match &mesh.boundary {
        Boundary::Periodic => Ok(None),
        Boundary::InflowOutflow => Ok(Some(ws.frozen.clone().expect("frozen ghosts"))),
        Boundary::DiffuseWalls { left, right } => {
            let cache = ws.wall_cache.as_ref().expect("wall cache");
            let [nx, ny, nz] = grid.n();
            let ax = grid.axis(0);
            let plane = ny * nz;
            let mut out: [Vec<Vec<f64>>; 2] = [Vec::new(), Vec::new()];
            for (side, wall) in [(0usize, left), (1, right)] {
                let adjacent = src.get(if side == 0 { 0 } else { mesh.n_cells - 1 }, 0);
                let m_unit = &cache[side];
                let mut influx_unit = 0.0;
                let mut outflux = 0.0;
                for ix in 0..nx {
                    let v = ax[ix];
                    let incoming = if side == 0 { v > 0.0 } else { v < 0.0 };
                    let lo = ix * plane;
                    let hi = lo + plane;
                    if incoming {
                        let s: f64 = m_unit[lo..hi].iter().sum();
                        influx_unit += v * s;
                    } else {
                        let s: f64 = adjacent[lo..hi].iter().sum();
                        outflux += v * s;
                    }
                }
                let rho_w = -outflux / influx_unit;
                let e_modes = gas.e_int_modes_of_t(wall.t_w)?;
                let f: Vec<f64> = m_unit.iter().map(|&m| rho_w * m).collect();
                let mut fields = Vec::with_capacity(n_fields);
                for k in 0..n_fields {
                    if k == 0 {
                        fields.push(f.clone());
                    } else {
                        fields.push(f.iter().map(|&fv| e_modes[k - 1] * fv).collect());
                    }
                }
                out[side] = fields;
            }
            Ok(Some(out))
        }
    }
}

/// One upwind sweep over all interfaces, fused with the stage combination:
///
///   out[c] = wa * aux[c] + wb * (src[c] + (dt/dx)(flux_c - flux_{c+1}))
///
/// Negative results are clipped to zero and counted. Parallel over fields
/// with disjoint writes, so results are bit-reproducible.
#[allow(clippy::too_many_arguments)]
fn advect_sweep(
    src: FieldView<'_>,
    aux: FieldView<'_>,
    wa: f64,
    wb: f64,
    out: &mut [Vec<Vec<f64>>],
    bufs: &mut [FieldBufs],
    ghosts: &Option<[Vec<Vec<f64>>; 2]>,
    mesh: &SpatialMesh,
    grid: &VelocityGrid,
    dt: f64,
    recon: Reconstruction,
) -> u64 {
    let n = mesh.n_cells;
    let lam = dt / mesh.dx();
    let [nx, ny, nz] = grid.n();
    let plane = ny * nz;
    let ax = grid.axis(0);
    let walls = matches!(mesh.boundary, Boundary::DiffuseWalls { .. });
    let periodic = matches!(mesh.boundary, Boundary::Periodic);

    out.par_iter_mut()
        .zip(bufs.par_iter_mut())
        .enumerate()
        .map(|(k, (out_k, buf))| {
            let at = |i: isize| -> &[f64] {
                if i >= 0 && (i as usize) < n {
                    src.get(i as usize, k)
                } else if periodic {
                    src.get(i.rem_euclid(n as isize) as usize, k)
                } else if i < 0 {
                    &ghosts.as_ref().unwrap()[0][k]
                } else {
                    &ghosts.as_ref().unwrap()[1][k]
                }
            };

            let slope_into = |c: isize, out: &mut [f64]| {
                if recon == Reconstruction::FirstOrder {
                    out.fill(0.0);
                    return;
                }
                let um = at(c - 1);
                let u0 = at(c);
                let up = at(c + 1);
                for (((o, &a), &b), &c) in out.iter_mut().zip(um).zip(u0).zip(up) {
                    *o = minmod(b - a, c - b);
                }
            };
            slope_into(-1, &mut buf.slope_a);
            slope_into(0, &mut buf.slope_b);

            let mut clips = 0u64;
            for j in 0..=n {
                let um = at(j as isize - 1);
                let up = at(j as isize);
                let first_order_here =
                    recon == Reconstruction::FirstOrder || (walls && (j == 0 || j == n));
                for ix in 0..nx {
                    let v = ax[ix];
                    let lo = ix * plane;
                    let hi = lo + plane;
                    let flux = &mut buf.flux_cur[lo..hi];
                    if first_order_here {
                        let car = if v > 0.0 { &um[lo..hi] } else { &up[lo..hi] };
                        for (f, &c) in flux.iter_mut().zip(car.iter()) {
                            *f = v * c;
                        }
                    } else if v > 0.0 {
                        for ((f, &c), &s) in flux
                            .iter_mut()
                            .zip(um[lo..hi].iter())
                            .zip(buf.slope_a[lo..hi].iter())
                        {
                            *f = v * (c + 0.5 * s);
                        }
                    } else {
                        for ((f, &c), &s) in flux
                            .iter_mut()
                            .zip(up[lo..hi].iter())
                            .zip(buf.slope_b[lo..hi].iter())
                        {
                            *f = v * (c - 0.5 * s);
                        }
                    }
                }
                if j > 0 {
                    let c = j - 1;
                    let src_c = src.get(c, k);
                    let dst = &mut out_k[c];
                    if wa == 0.0 {
                        for (((d, &s), &fp), &fc) in dst
                            .iter_mut()
                            .zip(src_c)
                            .zip(buf.flux_prev.iter())
                            .zip(buf.flux_cur.iter())
                        {
                            let v = wb * (s + lam * (fp - fc));
                            if v < 0.0 {
                                *d = 0.0;
                                clips += 1;
                            } else {
                                *d = v;
                            }
                        }
                    } else {
                        let aux_c = aux.get(c, k);
                        for ((((d, &s), &a), &fp), &fc) in dst
                            .iter_mut()
                            .zip(src_c)
                            .zip(aux_c)
                            .zip(buf.flux_prev.iter())
                            .zip(buf.flux_cur.iter())
                        {
                            let v = wa * a + wb * (s + lam * (fp - fc));
                            if v < 0.0 {
                                *d = 0.0;
                                clips += 1;
                            } else {
                                *d = v;
                            }
                        }
                    }
                }
                std::mem::swap(&mut buf.flux_prev, &mut buf.flux_cur);
                if j < n {
                    std::mem::swap(&mut buf.slope_a, &mut buf.slope_b);
                    slope_into(j as isize + 1, &mut buf.slope_b);
                }
            }
            clips
        })
        .sum()
}

fn field_vec_mut(cell: &mut CellState, k: usize) -> &mut Vec<f64> {
    if k == 0 {
        &mut cell.f
    } else {
        &mut cell.g[k - 1]
    }
}

/// Swaps the staged field-major buffers back into the cell states (pointer
/// swaps, no copies).
fn swap_into_cells(cells: &mut [CellState], flat: &mut [Vec<Vec<f64>>]) {
    for (k, flat_k) in flat.iter_mut().enumerate() {
        for (cell, new) in cells.iter_mut().zip(flat_k.iter_mut()) {
            std::mem::swap(field_vec_mut(cell, k), new);
        }
    }
}

/// Advances advection by one time step of size dt: Heun (SSP-RK2) for the
/// limited reconstruction, forward Euler for plain first-order upwinding.
pub fn advect(
    cells: &mut [CellState],
    ws: &mut TransportWs,
    mesh: &SpatialMesh,
    grid: &VelocityGrid,
    gas: &GasModel,
    dt: f64,
    recon: Reconstruction,
) -> Result<()> {
    let cfl = grid.max_speed(0) * dt / mesh.dx();
    if cfl > 1.0 + 1e-12 {
        return Err(CoreError::StepSize(format!(
            "advection CFL {cfl:.3} exceeds 1"
        )));
    }
    let n_fields = 1 + cells[0].n_modes();

    if recon == Reconstruction::FirstOrder {
        // Monotone under the CFL limit and an exact shift at integer CFL.
        let ghosts = ghost_fields(FieldView::Cells(cells), ws, mesh, grid, gas, n_fields)?;
        let mut out = std::mem::take(&mut ws.stage);
        let clips = advect_sweep(
            FieldView::Cells(cells),
            FieldView::Cells(cells),
            0.0,
            1.0,
            &mut out,
            &mut ws.bufs,
            &ghosts,
            mesh,
            grid,
            dt,
            recon,
        );
        swap_into_cells(cells, &mut out);
        ws.stage = out;
        ws.negative_clips += clips;
        return Ok(());
    }

    // Heun stage 1: stage = src + dt L(src).
    let ghosts = ghost_fields(FieldView::Cells(cells), ws, mesh, grid, gas, n_fields)?;
    let mut stage = std::mem::take(&mut ws.stage);
    let clips1 = advect_sweep(
        FieldView::Cells(cells),
        FieldView::Cells(cells),
        0.0,
        1.0,
        &mut stage,
        &mut ws.bufs,
        &ghosts,
        mesh,
        grid,
        dt,
        recon,
    );

    // Heun stage 2: out = (cells + stage + dt L(stage)) / 2, written into the
    // spare buffer and pointer-swapped into the cells (which then become the
    // spare for the next call).
    let ghosts = ghost_fields(FieldView::Flat(&stage), ws, mesh, grid, gas, n_fields)?;
    let mut out = std::mem::take(&mut ws.spare);
    let clips2 = advect_sweep(
        FieldView::Flat(&stage),
        FieldView::Cells(cells),
        0.5,
        0.5,
        &mut out,
        &mut ws.bufs,
        &ghosts,
        mesh,
        grid,
        dt,
        recon,
    );
    swap_into_cells(cells, &mut out);
    ws.spare = out;
    ws.stage = stage;
    ws.negative_clips += clips1 + clips2;
    Ok(())
}

/// Monitored quantity for steady-state detection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SteadyQuantity {
    /// Core-averaged shear stress sigma_xy.
    ShearStressXy,
    /// Core-averaged heat flux q_x.
    HeatFluxX,
}

/// Windowed relative-change criterion on an extracted flux.
#[derive(Debug, Clone, Copy)]
pub struct SteadyDetector {
    pub quantity: SteadyQuantity,
    /// Steps between checks.
    pub window: usize,
    /// Relative change per window below which the run is steady.
    pub rel_tol: f64,
    /// Do not declare steadiness before this time.
    pub t_min: f64,
}

impl SteadyDetector {
    pub fn couette() -> Self {
        Self {
            quantity: SteadyQuantity::ShearStressXy,
            window: 100,
            rel_tol: 1e-6,
            t_min: 2.0,
        }
    }

    pub fn fourier() -> Self {
        Self {
            quantity: SteadyQuantity::HeatFluxX,
            window: 100,
            rel_tol: 1e-6,
            t_min: 2.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunSetup {
    pub gas: GasModel,
    pub grid: VelocityGrid,
    pub mesh: SpatialMesh,
    pub model: ModelKind,
    pub kn: f64,
    pub tau_law: TauLaw,
    pub splitting: Splitting,
    pub recon: Reconstruction,
    pub cfl: f64,
    pub dt_max: f64,
    pub t_final: Option<f64>,
    pub max_steps: usize,
    pub snapshots: usize,
    /// Steps between conservation/entropy diagnostics (0 disables).
    pub diag_every: usize,
    pub entropy_diag: bool,
    pub steady: Option<SteadyDetector>,
}

impl RunSetup {
    pub fn new(
        gas: GasModel,
        grid: VelocityGrid,
        mesh: SpatialMesh,
        model: ModelKind,
        kn: f64,
    ) -> Self {
        Self {
            gas,
            grid,
            mesh,
            model,
            kn,
            tau_law: TauLaw::Constant { tau: 1.0 },
            splitting: Splitting::Strang,
            recon: Reconstruction::MusclMinmod,
            cfl: 0.65,
            dt_max: f64::INFINITY,
            t_final: None,
            max_steps: usize::MAX,
            snapshots: 0,
            diag_every: 0,
            entropy_diag: false,
            steady: None,
        }
    }
}

/// Global conservation/entropy record at one diagnostic event.
#[derive(Debug, Clone, Serialize)]
pub struct DiagRecord {
    pub step: usize,
    pub time: f64,
    /// Domain integrals of (rho, rho u, E) (cell sums times dx).
    pub mass: f64,
    pub momentum: [f64; 3],
    pub energy: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub h_total: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub h_flux: Option<[f64; 3]>,
}

/// Cell moments at one output time.
#[derive(Debug, Clone)]
pub struct Snapshot {
    pub step: usize,
    pub time: f64,
    pub cells: Vec<Moments>,
    /// Per-cell entropy H_total, aligned with `cells`.
    pub h_cells: Vec<f64>,
}

#[derive(Debug)]
pub struct RunOutput {
    pub snapshots: Vec<Snapshot>,
    pub diagnostics: Vec<DiagRecord>,
    pub steady_history: Vec<(usize, f64)>,
    pub final_state: Vec<CellState>,
    pub final_moments: Vec<Moments>,
    pub steps: usize,
    pub time: f64,
    pub steady: bool,
    pub negative_clips: u64,
    pub wall_seconds: f64,
}

fn collide(
    cells: &mut [CellState],
    setup: &RunSetup,
    dt: f64,
) -> Result<()> {
    let gas = &setup.gas;
    let grid = &setup.grid;
    cells.par_iter_mut().try_for_each(|cell| -> Result<()> {
        let local = local_moments(cell, grid, gas)?;
        let tau = bgk::tau_eff(&setup.tau_law, setup.kn, &local, gas);
        match setup.model {
            ModelKind::Bgk => bgk::bgk_step_exact(cell, &local, grid, gas, dt, tau),
            ModelKind::Fp => fp::fp_step(cell, &local, grid, gas, dt, tau),
        }
    })
}

fn diagnostics_record(
    cells: &[CellState],
    setup: &RunSetup,
    step: usize,
    time: f64,
) -> Result<DiagRecord> {
    let dx = setup.mesh.dx();
    let mut mass = 0.0;
    let mut momentum = [0.0; 3];
    let mut energy = 0.0;
    let mut h = 0.0;
    let mut h_flux = [0.0; 3];
    for cell in cells {
        let inv = fp::invariant_moments(&cell.f, &cell.g, &setup.grid);
        mass += inv[0];
        for d in 0..3 {
            momentum[d] += inv[1 + d];
        }
        energy += inv[4];
        if setup.entropy_diag {
            let (hc, hf) = entropy::h_total(cell, &setup.grid, setup.gas.modes())?;
            h += hc;
            for d in 0..3 {
                h_flux[d] += hf[d];
            }
        }
    }
    Ok(DiagRecord {
        step,
        time,
        mass: mass * dx,
        momentum: [momentum[0] * dx, momentum[1] * dx, momentum[2] * dx],
        energy: energy * dx,
        h_total: setup.entropy_diag.then_some(h * dx),
        h_flux: setup
            .entropy_diag
            .then_some([h_flux[0] * dx, h_flux[1] * dx, h_flux[2] * dx]),
    })
}

/// Core region used for steady monitoring and transport-coefficient fits:
/// the middle 60% of the channel, clear of the Knudsen layers.
pub fn core_cells(n_cells: usize) -> std::ops::Range<usize> {
    let lo = (n_cells as f64 * 0.2).round() as usize;
    let hi = (n_cells as f64 * 0.8).round() as usize;
    lo..hi.max(lo + 1)
}

fn steady_quantity(
    cells: &[CellState],
    setup: &RunSetup,
    what: SteadyQuantity,
) -> Result<f64> {
    let core = core_cells(setup.mesh.n_cells);
    let mut acc = 0.0;
    for i in core.clone() {
        let m = moments(&cells[i], &setup.grid, &setup.gas)?;
        acc += match what {
            SteadyQuantity::ShearStressXy => m.sigma[0][1],
            SteadyQuantity::HeatFluxX => m.q[0],
        };
    }
    Ok(acc / core.len() as f64)
}

fn snapshot_of(cells: &[CellState], setup: &RunSetup, step: usize, time: f64) -> Result<Snapshot> {
    let mut out = Vec::with_capacity(cells.len());
    let mut h_cells = Vec::with_capacity(cells.len());
    for cell in cells {
        out.push(moments(cell, &setup.grid, &setup.gas)?);
        let (h, _) = entropy::h_total(cell, &setup.grid, setup.gas.modes())?;
        h_cells.push(h);
    }
    Ok(Snapshot {
        step,
        time,
        cells: out,
        h_cells,
    })
}

/// Runs the coupled transport/collision loop from the given initial states.
pub fn run(setup: &RunSetup, init: Vec<CellState>) -> Result<RunOutput> {
    let t_start = std::time::Instant::now();
    if init.len() != setup.mesh.n_cells {
        return Err(CoreError::Config(format!(
            "initial data has {} cells, mesh has {}",
            init.len(),
            setup.mesh.n_cells
        )));
    }
    let mut cells = init;
    let mut ws = TransportWs::new(&cells, &setup.grid, &setup.mesh, &setup.gas);

    let pure_relax =
        setup.mesh.n_cells == 1 && matches!(setup.mesh.boundary, Boundary::Periodic);
    let dt_cfl = if pure_relax {
        f64::INFINITY
    } else {
        setup.cfl * setup.mesh.dx() / setup.grid.max_speed(0)
    };
    let dt_base = dt_cfl.min(setup.dt_max);
    if !dt_base.is_finite() || !(dt_base > 0.0) {
        return Err(CoreError::StepSize(format!(
            "cannot choose a time step (dt = {dt_base}); set dt_max for homogeneous runs"
        )));
    }

    // Snapshot schedule in time.
    let mut snap_times: Vec<f64> = Vec::new();
    if setup.snapshots > 0 {
        if let Some(tf) = setup.t_final {
            for k in 1..=setup.snapshots {
                snap_times.push(tf * k as f64 / setup.snapshots as f64);
            }
        }
    }
    let mut next_snap = 0usize;

    let mut diagnostics = Vec::new();
    let mut snapshots = Vec::new();
    let mut steady_history = Vec::new();
    if setup.diag_every > 0 {
        diagnostics.push(diagnostics_record(&cells, setup, 0, 0.0)?);
    }
    let mut prev_quantity: Option<f64> = None;

    let mut time = 0.0;
    let mut step = 0usize;
    let mut steady = false;
    // Strang chains transport half-steps between event boundaries; the chain
    // is open when the trailing half transport of the previous step has been
    // merged into the leading half of the next.
    let mut chain_open = false;

    'outer: while step < setup.max_steps {
        if let Some(tf) = setup.t_final {
            if time >= tf - 1e-12 * tf.max(1.0) {
                break;
            }
        }
        // Step size: clip to the next event time.
        let mut dt = dt_base;
        let mut closes_chain = false;
        if let Some(tf) = setup.t_final {
            if time + dt >= tf - 1e-12 * tf.max(1.0) {
                dt = tf - time;
                closes_chain = true;
            }
        }
        if next_snap < snap_times.len() {
            let ts = snap_times[next_snap];
            if time + dt >= ts - 1e-12 * ts.max(1.0) {
                dt = ts - time;
                closes_chain = true;
            }
        }
        let diag_due = setup.diag_every > 0 && (step + 1) % setup.diag_every == 0;
        let steady_due = setup
            .steady
            .map(|s| (step + 1) % s.window == 0)
            .unwrap_or(false);
        if diag_due || steady_due || step + 1 == setup.max_steps {
            closes_chain = true;
        }
        if !(dt > 0.0) {
            break;
        }

        match (setup.splitting, pure_relax) {
            (_, true) => collide(&mut cells, setup, dt)?,
            (Splitting::Lie, false) => {
                advect(&mut cells, &mut ws, &setup.mesh, &setup.grid, &setup.gas, dt, setup.recon)?;
                collide(&mut cells, setup, dt)?;
            }
            (Splitting::Strang, false) => {
                if !chain_open {
                    advect(
                        &mut cells,
                        &mut ws,
                        &setup.mesh,
                        &setup.grid,
                        &setup.gas,
                        0.5 * dt,
                        setup.recon,
                    )?;
                }
                collide(&mut cells, setup, dt)?;
                let tail = if closes_chain { 0.5 * dt } else { dt };
                advect(
                    &mut cells,
                    &mut ws,
                    &setup.mesh,
                    &setup.grid,
                    &setup.gas,
                    tail,
                    setup.recon,
                )?;
                chain_open = !closes_chain;
            }
        }

        step += 1;
        time += dt;

        if diag_due {
            diagnostics.push(diagnostics_record(&cells, setup, step, time)?);
        }
        if next_snap < snap_times.len()
            && time >= snap_times[next_snap] - 1e-12 * snap_times[next_snap].max(1.0)
        {
            snapshots.push(snapshot_of(&cells, setup, step, time)?);
            next_snap += 1;
        }
        if steady_due {
            let det = setup.steady.unwrap();
            let q = steady_quantity(&cells, setup, det.quantity)?;
            steady_history.push((step, q));
            if let Some(prev) = prev_quantity {
                let denom = q.abs().max(1e-300);
                if (q - prev).abs() / denom < det.rel_tol && time >= det.t_min {
                    steady = true;
                    break 'outer;
                }
            }
            prev_quantity = Some(q);
        }
    }

    if chain_open {
        // A break out of the loop (steady stop or max_steps) can leave the
        // chain mid-way; the state then sits a half transport step behind.
        advect(
            &mut cells,
            &mut ws,
            &setup.mesh,
            &setup.grid,
            &setup.gas,
            0.5 * dt_base,
            setup.recon,
        )
        .ok();
    }

    let final_moments = cells
        .iter()
        .map(|c| moments(c, &setup.grid, &setup.gas))
        .collect::<Result<Vec<_>>>()?;
    if setup.snapshots > 0 && setup.t_final.is_none() {
        snapshots.push(snapshot_of(&cells, setup, step, time)?);
    }

    Ok(RunOutput {
        snapshots,
        diagnostics,
        steady_history,
        final_state: cells,
        final_moments,
        steps: step,
        time,
        steady,
        negative_clips: ws.negative_clips,
        wall_seconds: t_start.elapsed().as_secs_f64(),
    })
}

/// Equilibrium initial data from a profile of (rho, u, T) over x.
pub fn equilibrium_field(
    mesh: &SpatialMesh,
    grid: &VelocityGrid,
    gas: &GasModel,
    profile: impl Fn(f64) -> (f64, [f64; 3], f64),
) -> Result<Vec<CellState>> {
    (0..mesh.n_cells)
        .map(|i| {
            let (rho, u, t) = profile(mesh.cell_center(i));
            equilibrium_state(rho, u, t, grid, gas)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::thermo::EnergyMode;
    use approx::assert_relative_eq;

    fn gas() -> GasModel {
        GasModel::new(
            1.0,
            vec![EnergyMode::rotational(1.0).with_range(1e-3, 1e3).unwrap()],
        )
        .unwrap()
        .with_range(1e-3, 1e3)
        .unwrap()
    }

    fn grid(n: usize) -> VelocityGrid {
        VelocityGrid::build([0.0; 3], 1.0, 1.0, n, 6.0).unwrap()
    }

    #[test]
    fn uniform_state_is_unchanged() {
        let gas = gas();
        let grid = grid(8);
        let mesh = SpatialMesh::new(16, 0.0, 1.0, Boundary::Periodic).unwrap();
        let cells = equilibrium_field(&mesh, &grid, &gas, |_| (1.0, [0.0; 3], 1.0)).unwrap();
        let mut advanced = cells.clone();
        let mut ws = TransportWs::new(&advanced, &grid, &mesh, &gas);
        let dt = 0.4 * mesh.dx() / grid.max_speed(0);
        for _ in 0..10 {
            advect(&mut advanced, &mut ws, &mesh, &grid, &gas, dt, Reconstruction::MusclMinmod)
                .unwrap();
        }
        for (a, b) in advanced.iter().zip(&cells) {
            for (x, y) in a.f.iter().zip(&b.f) {
                assert!((x - y).abs() <= 1e-14 * y.abs().max(1e-30));
            }
        }
    }

    #[test]
    fn cfl_violation_is_an_error() {
        let gas = gas();
        let grid = grid(8);
        let mesh = SpatialMesh::new(8, 0.0, 1.0, Boundary::Periodic).unwrap();
        let mut cells = equilibrium_field(&mesh, &grid, &gas, |_| (1.0, [0.0; 3], 1.0)).unwrap();
        let mut ws = TransportWs::new(&cells, &grid, &mesh, &gas);
        let dt = 2.0 * mesh.dx() / grid.max_speed(0);
        assert!(matches!(
            advect(&mut cells, &mut ws, &mesh, &grid, &gas, dt, Reconstruction::MusclMinmod),
            Err(CoreError::StepSize(_))
        ));
    }

    #[test]
    fn square_pulse_total_variation_does_not_grow() {
        let gas = gas();
        let grid = grid(8);
        let n = 40;
        let mesh = SpatialMesh::new(n, 0.0, 1.0, Boundary::Periodic).unwrap();
        let mut cells = equilibrium_field(&mesh, &grid, &gas, |x| {
            let rho = if (0.3..0.5).contains(&x) { 2.0 } else { 1.0 };
            (rho, [0.0; 3], 1.0)
        })
        .unwrap();
        let mut ws = TransportWs::new(&cells, &grid, &mesh, &gas);

        let tv = |cells: &[CellState], idx: usize| -> f64 {
            let mut t = 0.0;
            for i in 0..n {
                let a = cells[i].f[idx];
                let b = cells[(i + 1) % n].f[idx];
                t += (b - a).abs();
            }
            t
        };
        // Track a node with positive, nonzero speed.
        let probe = grid.index(6, 4, 4);
        let tv0 = tv(&cells, probe);

        let dt = 0.45 * mesh.dx() / grid.max_speed(0);
        let steps = (1.0 / (grid.axis(0)[6] * dt)).ceil() as usize;
        for _ in 0..steps {
            advect(&mut cells, &mut ws, &mesh, &grid, &gas, dt, Reconstruction::MusclMinmod)
                .unwrap();
        }
        let tv1 = tv(&cells, probe);
        assert!(
            tv1 <= tv0 * (1.0 + 1e-12),
            "TV grew: {tv0} -> {tv1}"
        );
    }

    #[test]
    fn first_order_integer_cfl_is_exact_shift() {
        let gas = gas();
        let grid = grid(8);
        let n = 16;
        let mesh = SpatialMesh::new(n, 0.0, 1.0, Boundary::Periodic).unwrap();
        let cells0 = equilibrium_field(&mesh, &grid, &gas, |x| {
            (1.0 + 0.5 * (2.0 * std::f64::consts::PI * x).sin(), [0.0; 3], 1.0)
        })
        .unwrap();
        let mut cells = cells0.clone();
        let mut ws = TransportWs::new(&cells, &grid, &mesh, &gas);

        // Choose the node whose speed gives CFL exactly 1.
        let ix = 7; // fastest positive speed
        let v = grid.axis(0)[ix];
        let dt = mesh.dx() / v;
        advect(&mut cells, &mut ws, &mesh, &grid, &gas, dt, Reconstruction::FirstOrder).unwrap();

        let probe = grid.index(ix, 3, 3);
        for i in 0..n {
            let from = (i + n - 1) % n;
            assert_relative_eq!(
                cells[i].f[probe],
                cells0[from].f[probe],
                max_relative = 1e-12
            );
        }
    }

    #[test]
    fn wall_in_equilibrium_exchanges_nothing() {
        let gas = gas();
        let grid = grid(24);
        let wall = Wall {
            t_w: 1.0,
            u_w: [0.0, 0.3, 0.0],
        };
        let mesh = SpatialMesh::new(
            4,
            0.0,
            1.0,
            Boundary::DiffuseWalls {
                left: wall,
                right: wall,
            },
        )
        .unwrap();
        let cells =
            equilibrium_field(&mesh, &grid, &gas, |_| (1.0, wall.u_w, wall.t_w)).unwrap();
        let ghost = diffuse_wall_ghost(&cells[0], true, &wall, &grid, &gas).unwrap();

        // Net wall fluxes with first-order upwinding at the interface.
        let ax = grid.axis(0);
        let [nx, ny, nz] = grid.n();
        let mut mass = 0.0;
        let mut mom_y = 0.0;
        let mut energy = 0.0;
        let mut idx = 0;
        for ix in 0..nx {
            let v = ax[ix];
            for iy in 0..ny {
                let vy = grid.axis(1)[iy];
                for iz in 0..nz {
                    let vz = grid.axis(2)[iz];
                    let carrier = if v > 0.0 { ghost.f[idx] } else { cells[0].f[idx] };
                    let gcar = if v > 0.0 {
                        ghost.g[0][idx]
                    } else {
                        cells[0].g[0][idx]
                    };
                    mass += v * carrier;
                    mom_y += v * vy * carrier;
                    energy += v * (0.5 * (v * v + vy * vy + vz * vz) * carrier + gcar);
                    idx += 1;
                }
            }
        }
        let w = grid.weight();
        assert!((mass * w).abs() < 1e-12, "mass flux {}", mass * w);
        assert!((mom_y * w).abs() < 1e-7, "tangential momentum flux {}", mom_y * w);
        assert!((energy * w).abs() < 1e-6, "energy flux {}", energy * w);
    }

    #[test]
    fn hot_gas_heats_the_wall() {
        let gas = gas();
        let grid = grid(24);
        let wall = Wall {
            t_w: 1.0,
            u_w: [0.0; 3],
        };
        let mesh = SpatialMesh::new(
            4,
            0.0,
            1.0,
            Boundary::DiffuseWalls {
                left: wall,
                right: wall,
            },
        )
        .unwrap();
        // Gas hotter than the wall.
        let cells = equilibrium_field(&mesh, &grid, &gas, |_| (1.0, [0.0; 3], 1.5)).unwrap();
        let ghost = diffuse_wall_ghost(&cells[0], true, &wall, &grid, &gas).unwrap();

        let ax = grid.axis(0);
        let [nx, ny, nz] = grid.n();
        let mut mass = 0.0;
        let mut energy = 0.0;
        let mut idx = 0;
        for ix in 0..nx {
            let v = ax[ix];
            for iy in 0..ny {
                let vy = grid.axis(1)[iy];
                for iz in 0..nz {
                    let vz = grid.axis(2)[iz];
                    let carrier = if v > 0.0 { ghost.f[idx] } else { cells[0].f[idx] };
                    let gcar = if v > 0.0 {
                        ghost.g[0][idx]
                    } else {
                        cells[0].g[0][idx]
                    };
                    mass += v * carrier;
                    energy += v * (0.5 * (v * v + vy * vy + vz * vz) * carrier + gcar);
                    idx += 1;
                }
            }
        }
        let w = grid.weight();
        // Zero mass flux by construction; energy flows out of the gas at the
        // left wall (negative x flux).
        assert!((mass * w).abs() < 1e-12);
        assert!(energy * w < -1e-3, "energy flux {}", energy * w);
    }

    #[test]
    fn zero_d_run_is_homogeneous_relaxation() {
        let gas = gas();
        let grid = grid(16);
        let mesh = SpatialMesh::new(1, 0.0, 1.0, Boundary::Periodic).unwrap();
        let mut setup = RunSetup::new(gas.clone(), grid.clone(), mesh, ModelKind::Bgk, 1.0);
        setup.dt_max = 0.1;
        setup.t_final = Some(1.0);
        setup.diag_every = 1;
        setup.entropy_diag = true;

        let mut f = maxwellian(0.6, [0.7, 0.0, 0.0], 0.9, 1.0, &grid);
        for (a, b) in f
            .iter_mut()
            .zip(maxwellian(0.4, [-0.8, 0.0, 0.0], 1.2, 1.0, &grid))
        {
            *a += b;
        }
        let g: Vec<f64> = f.iter().map(|&fv| 1.05 * fv).collect();
        let init = vec![CellState { f, g: vec![g] }];

        let out = run(&setup, init).unwrap();
        assert_eq!(out.steps, 10);
        // conservation across the whole run
        let d0 = &out.diagnostics[0];
        let dn = out.diagnostics.last().unwrap();
        assert_relative_eq!(d0.mass, dn.mass, max_relative = 1e-12);
        assert_relative_eq!(d0.energy, dn.energy, max_relative = 1e-12);
        // entropy decays monotonically
        for w in out.diagnostics.windows(2) {
            let (a, b) = (w[0].h_total.unwrap(), w[1].h_total.unwrap());
            assert!(b <= a + 1e-12 * a.abs());
        }
    }
}
