//! The reduced entropy functional
//!
//!   H(F, G^1..G^n) = F ln F - sum_i F s_int^i(G^i/F) / R
//!
//! integrated over velocity, together with its first and second derivatives,
//! the algebraic identities they satisfy, and minimization diagnostics. The
//! collision operators dissipate the velocity integral of H; its minimum over
//! states with fixed (rho, rho u, rho e) is attained at the equilibrium pair.

use crate::error::{CoreError, Result};
use crate::state::{equilibrium_of, local_moments, CellState};
use crate::thermo::{EnergyMode, GasModel};
use crate::vgrid::{pairwise_sum, VelocityGrid};
use serde::Serialize;

/// Below this mass density a node contributes nothing: F ln F -> 0 by
/// continuity and the s_int terms vanish with F.
pub const F_FLOOR: f64 = 1e-300;

/// Entropy density at one velocity node.
pub fn h_density(f: f64, g: &[f64], modes: &[EnergyMode]) -> Result<f64> {
    debug_assert_eq!(g.len(), modes.len());
    if f < F_FLOOR {
        if f < 0.0 {
            return Err(CoreError::Domain(format!(
                "entropy undefined for negative F = {f}"
            )));
        }
        return Ok(0.0);
    }
    let mut h = f * f.ln();
    for (gi, mode) in g.iter().zip(modes) {
        let e = gi / f;
        h -= f * mode.s_int(e)? / mode.gas_constant();
    }
    Ok(h)
}

/// Partial derivatives (D_F H, D_G H) for a single mode.
pub fn dh(f: f64, g: f64, mode: &EnergyMode) -> Result<(f64, f64)> {
    if f < F_FLOOR {
        return Err(CoreError::Domain(format!(
            "entropy derivatives undefined at F = {f}"
        )));
    }
    let r = mode.gas_constant();
    let e = g / f;
    let t_int = mode.t_int(e)?;
    let d1 = 1.0 + f.ln() + g / (r * t_int * f) - mode.s_int(e)? / r;
    let d2 = -1.0 / (r * t_int);
    Ok((d1, d2))
}

/// Gradient (D_F, D_{G^1}, .., D_{G^n}) for any number of modes.
pub fn grad(f: f64, g: &[f64], modes: &[EnergyMode]) -> Result<Vec<f64>> {
    if f < F_FLOOR {
        return Err(CoreError::Domain(format!(
            "entropy derivatives undefined at F = {f}"
        )));
    }
    let mut out = Vec::with_capacity(1 + modes.len());
    let mut d_f = 1.0 + f.ln();
    let mut d_g = Vec::with_capacity(modes.len());
    for (gi, mode) in g.iter().zip(modes) {
        let r = mode.gas_constant();
        let e = gi / f;
        let t_int = mode.t_int(e)?;
        d_f += gi / (r * t_int * f) - mode.s_int(e)? / r;
        d_g.push(-1.0 / (r * t_int));
    }
    out.push(d_f);
    out.extend(d_g);
    Ok(out)
}

/// Hessian of H in (F, G^1, .., G^n), returned row-major, (n+1)^2 entries.
///
/// Per-mode blocks are diagonal: D_{G^a G^b} = 0 for a != b.
pub fn hessian(f: f64, g: &[f64], modes: &[EnergyMode]) -> Result<Vec<f64>> {
    if f < F_FLOOR {
        return Err(CoreError::Domain(format!(
            "entropy Hessian undefined at F = {f}"
        )));
    }
    let n = modes.len();
    let dim = n + 1;
    let mut h = vec![0.0; dim * dim];
    let mut d_ff = 1.0 / f;
    for (i, (gi, mode)) in g.iter().zip(modes).enumerate() {
        let r = mode.gas_constant();
        let e = gi / f;
        let t_int = mode.t_int(e)?;
        let c_v = mode.c_v_int_at_e(e)?;
        let denom = c_v * r * t_int * t_int;
        d_ff += gi * gi / (f * f * f * denom);
        let d_fg = -gi / (f * f * denom);
        let d_gg = 1.0 / (f * denom);
        h[i + 1] = d_fg;
        h[(i + 1) * dim] = d_fg;
        h[(i + 1) * dim + (i + 1)] = d_gg;
    }
    h[0] = d_ff;
    Ok(h)
}

/// Entropy diagnostics of one state or one collision step.
#[derive(Debug, Clone, Serialize)]
pub struct EntropyReport {
    pub h_total: f64,
    pub h_flux: [f64; 3],
    /// Change of H_total across the step this report closes, when known.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dissipation: Option<f64>,
    /// Minimum Hessian determinant over the sampled nodes, when requested.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hessian_min_det: Option<f64>,
}

/// Velocity integrals of H and v H over the grid.
pub fn h_total(
    state: &CellState,
    grid: &VelocityGrid,
    modes: &[EnergyMode],
) -> Result<(f64, [f64; 3])> {
    let [nx, ny, nz] = grid.n();
    let (ax, ay, az) = (grid.axis(0), grid.axis(1), grid.axis(2));
    let w = grid.weight();
    let n_rows = nx * ny;
    let mut rows_h = Vec::with_capacity(n_rows);
    let mut rows_fx = Vec::with_capacity(n_rows);
    let mut rows_fy = Vec::with_capacity(n_rows);
    let mut rows_fz = Vec::with_capacity(n_rows);

    let mut gi_buf = vec![0.0; modes.len()];
    let mut idx = 0;
    for &vx in &ax[..nx] {
        for &vy in &ay[..ny] {
            let (mut h_row, mut fx, mut fy, mut fz) = (0.0, 0.0, 0.0, 0.0);
            for &vz in &az[..nz] {
                let f = state.f[idx];
                for (buf, garr) in gi_buf.iter_mut().zip(&state.g) {
                    *buf = garr[idx];
                }
                let h = h_density(f, &gi_buf, modes).map_err(|e| {
                    CoreError::Domain(format!("at node ({vx}, {vy}, {vz}): {e}"))
                })?;
                h_row += h;
                fx += vx * h;
                fy += vy * h;
                fz += vz * h;
                idx += 1;
            }
            rows_h.push(h_row);
            rows_fx.push(fx);
            rows_fy.push(fy);
            rows_fz.push(fz);
        }
    }
    Ok((
        pairwise_sum(&rows_h) * w,
        [
            pairwise_sum(&rows_fx) * w,
            pairwise_sum(&rows_fy) * w,
            pairwise_sum(&rows_fz) * w,
        ],
    ))
}

/// H_total(state) minus H_total of the equilibrium sharing its conserved
/// moments; nonnegative up to quadrature and projection tolerances.
pub fn minimization_check(
    state: &CellState,
    grid: &VelocityGrid,
    gas: &GasModel,
) -> Result<f64> {
    let local = local_moments(state, grid, gas)?;
    let eq = equilibrium_of(&local, grid, gas)?.state();
    let (h_state, _) = h_total(state, grid, gas.modes())?;
    let (h_eq, _) = h_total(&eq, grid, gas.modes())?;
    Ok(h_state - h_eq)
}
