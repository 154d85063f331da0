//! Reduced distribution storage, moment evaluation, and moment-exact
//! discrete Maxwellian construction.
//!
//! A cell holds the pair (F, G^1..G^n): F is the mass density over velocity
//! nodes, each G^i the internal-energy density of one mode. Collision
//! operators relax toward a discrete Maxwellian of exponential form
//! exp(alpha + beta.v - gamma |v|^2) whose *lattice* moments match the target
//! (rho, rho u, rho e_tr) exactly, so conservation holds to machine
//! precision independently of quadrature truncation.

use crate::error::{CoreError, Result};
use crate::thermo::GasModel;
use crate::vgrid::{pairwise_sum, VelocityGrid};

/// Reduced distributions of one spatial cell.
#[derive(Debug, Clone)]
pub struct CellState {
    /// Mass density per velocity node.
    pub f: Vec<f64>,
    /// One internal-energy density array per mode, same layout as `f`.
    pub g: Vec<Vec<f64>>,
}

impl CellState {
    pub fn zeros(grid: &VelocityGrid, n_modes: usize) -> Self {
        Self {
            f: vec![0.0; grid.len()],
            g: vec![vec![0.0; grid.len()]; n_modes],
        }
    }

    pub fn n_modes(&self) -> usize {
        self.g.len()
    }
}

/// Conserved-level moments: everything the collision operators need.
#[derive(Debug, Clone)]
pub struct LocalMoments {
    pub rho: f64,
    pub u: [f64; 3],
    /// Translational specific energy <|v-u|^2/2 F> / rho.
    pub e_tr: f64,
    /// Per-mode specific internal energy <G^i> / rho.
    pub e_int_modes: Vec<f64>,
    /// Total specific energy e_tr + sum e_int.
    pub e: f64,
    /// Equilibrium temperature T(e).
    pub t: f64,
}

impl LocalMoments {
    pub fn pressure(&self, gas: &GasModel) -> f64 {
        self.rho * gas.r() * self.t
    }

    /// Total energy density E = rho (|u|^2/2 + e).
    pub fn total_energy(&self) -> f64 {
        let u2 = self.u[0] * self.u[0] + self.u[1] * self.u[1] + self.u[2] * self.u[2];
        self.rho * (0.5 * u2 + self.e)
    }
}

/// Full moment set, including the stress tensor and heat flux.
#[derive(Debug, Clone)]
pub struct Moments {
    pub rho: f64,
    pub u: [f64; 3],
    pub e_tr: f64,
    pub e_int_modes: Vec<f64>,
    pub e: f64,
    pub t: f64,
    pub t_int_modes: Vec<f64>,
    pub p: f64,
    pub sigma: [[f64; 3]; 3],
    pub q: [f64; 3],
}

/// Sums rows of length nz deterministically, then pairwise over rows.
struct RowReducer {
    rows: Vec<f64>,
}

impl RowReducer {
    fn new(capacity: usize) -> Self {
        Self {
            rows: Vec::with_capacity(capacity),
        }
    }

    fn push(&mut self, row_sum: f64) {
        self.rows.push(row_sum);
    }

    fn total(&self) -> f64 {
        pairwise_sum(&self.rows)
    }
}

/// Conserved-level moments of a cell.
pub fn local_moments(
    state: &CellState,
    grid: &VelocityGrid,
    gas: &GasModel,
) -> Result<LocalMoments> {
    let [nx, ny, nz] = grid.n();
    let (ax, ay, az) = (grid.axis(0), grid.axis(1), grid.axis(2));
    let w = grid.weight();
    let n_rows = nx * ny;

    let mut sm = RowReducer::new(n_rows);
    let mut smx = RowReducer::new(n_rows);
    let mut smy = RowReducer::new(n_rows);
    let mut smz = RowReducer::new(n_rows);
    let mut se = RowReducer::new(n_rows);

    let mut idx = 0;
    for &vx in &ax[..nx] {
        for &vy in &ay[..ny] {
            let (mut m, mut mx, mut my, mut mz, mut e2) = (0.0, 0.0, 0.0, 0.0, 0.0);
            for &vz in &az[..nz] {
                let f = state.f[idx];
                m += f;
                mx += vx * f;
                my += vy * f;
                mz += vz * f;
                e2 += 0.5 * (vx * vx + vy * vy + vz * vz) * f;
                idx += 1;
            }
            sm.push(m);
            smx.push(mx);
            smy.push(my);
            smz.push(mz);
            se.push(e2);
        }
    }

    let rho = sm.total() * w;
    if !(rho > 0.0) || !rho.is_finite() {
        return Err(CoreError::DegenerateState(format!(
            "non-positive density rho = {rho}"
        )));
    }
    let u = [
        smx.total() * w / rho,
        smy.total() * w / rho,
        smz.total() * w / rho,
    ];
    let u2 = u[0] * u[0] + u[1] * u[1] + u[2] * u[2];
    let e_tr = se.total() * w / rho - 0.5 * u2;

    let mut e_int_modes = Vec::with_capacity(state.g.len());
    for g in &state.g {
        e_int_modes.push(grid.integrate(g) / rho);
    }
    let e = e_tr + e_int_modes.iter().sum::<f64>();
    let t = gas.t_of_e(e)?;

    Ok(LocalMoments {
        rho,
        u,
        e_tr,
        e_int_modes,
        e,
        t,
    })
}

/// Full moments of a cell (stress tensor, heat flux, per-mode internal
/// temperatures).
pub fn moments(state: &CellState, grid: &VelocityGrid, gas: &GasModel) -> Result<Moments> {
    let local = local_moments(state, grid, gas)?;
    let [nx, ny, nz] = grid.n();
    let (ax, ay, az) = (grid.axis(0), grid.axis(1), grid.axis(2));
    let w = grid.weight();
    let u = local.u;
    let n_rows = nx * ny;

    // Six independent stress components and three heat-flux components.
    let mut acc: Vec<RowReducer> = (0..9).map(|_| RowReducer::new(n_rows)).collect();

    let mut idx = 0;
    for &vx in &ax[..nx] {
        let cx = vx - u[0];
        for &vy in &ay[..ny] {
            let cy = vy - u[1];
            let mut row = [0.0f64; 9];
            for &vz in &az[..nz] {
                let cz = vz - u[2];
                let f = state.f[idx];
                let mut half_c2_f_plus_g = 0.5 * (cx * cx + cy * cy + cz * cz) * f;
                for g in &state.g {
                    half_c2_f_plus_g += g[idx];
                }
                row[0] += cx * cx * f;
                row[1] += cy * cy * f;
                row[2] += cz * cz * f;
                row[3] += cx * cy * f;
                row[4] += cx * cz * f;
                row[5] += cy * cz * f;
                row[6] += half_c2_f_plus_g * cx;
                row[7] += half_c2_f_plus_g * cy;
                row[8] += half_c2_f_plus_g * cz;
                idx += 1;
            }
            for (a, r) in acc.iter_mut().zip(row) {
                a.push(r);
            }
        }
    }

    let s: Vec<f64> = acc.iter().map(|a| a.total() * w).collect();
    let sigma = [
        [s[0], s[3], s[4]],
        [s[3], s[1], s[5]],
        [s[4], s[5], s[2]],
    ];
    let q = [s[6], s[7], s[8]];

    let mut t_int_modes = Vec::with_capacity(gas.n_modes());
    for (mode, &e_i) in gas.modes().iter().zip(&local.e_int_modes) {
        t_int_modes.push(mode.t_int(e_i)?);
    }

    Ok(Moments {
        p: local.rho * gas.r() * local.t,
        rho: local.rho,
        u: local.u,
        e_tr: local.e_tr,
        e_int_modes: local.e_int_modes,
        e: local.e,
        t: local.t,
        t_int_modes,
        sigma,
        q,
    })
}

/// Pointwise analytic Maxwellian rho (2 pi R T)^{-3/2} exp(-|v-u|^2 / 2RT).
pub fn maxwellian(rho: f64, u: [f64; 3], t: f64, r: f64, grid: &VelocityGrid) -> Vec<f64> {
    let rt = r * t;
    let norm = rho / (2.0 * std::f64::consts::PI * rt).powf(1.5);
    grid.fill(|v| {
        let c2 = (v[0] - u[0]).powi(2) + (v[1] - u[1]).powi(2) + (v[2] - u[2]).powi(2);
        norm * (-0.5 * c2 / rt).exp()
    })
}

/// Parameters of an exponential-family density exp(alpha + beta.v - gamma|v|^2).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpFamily {
    pub alpha: f64,
    pub beta: [f64; 3],
    pub gamma: f64,
}

impl ExpFamily {
    /// Parameters of the continuum Maxwellian with the given moments.
    pub fn analytic(rho: f64, u: [f64; 3], t: f64, r: f64) -> Self {
        let rt = r * t;
        let u2 = u[0] * u[0] + u[1] * u[1] + u[2] * u[2];
        Self {
            alpha: (rho / (2.0 * std::f64::consts::PI * rt).powf(1.5)).ln() - 0.5 * u2 / rt,
            beta: [u[0] / rt, u[1] / rt, u[2] / rt],
            gamma: 0.5 / rt,
        }
    }

    #[inline]
    pub fn eval(&self, v: [f64; 3]) -> f64 {
        let bv = self.beta[0] * v[0] + self.beta[1] * v[1] + self.beta[2] * v[2];
        let v2 = v[0] * v[0] + v[1] * v[1] + v[2] * v[2];
        (self.alpha + bv - self.gamma * v2).exp()
    }

    /// Separable per-axis factor exp(beta_d v - gamma v^2).
    #[inline]
    pub fn axis_factor(&self, d: usize, v: f64) -> f64 {
        (self.beta[d] * v - self.gamma * v * v).exp()
    }

    /// Evaluates the density at every grid node through the separable form.
    pub fn nodes(&self, grid: &VelocityGrid) -> Vec<f64> {
        let [nx, ny, nz] = grid.n();
        let p = self.alpha.exp();
        let fx: Vec<f64> = grid.axis(0).iter().map(|&v| p * self.axis_factor(0, v)).collect();
        let fy: Vec<f64> = grid.axis(1).iter().map(|&v| self.axis_factor(1, v)).collect();
        let fz: Vec<f64> = grid.axis(2).iter().map(|&v| self.axis_factor(2, v)).collect();
        let mut out = Vec::with_capacity(grid.len());
        for ix in 0..nx {
            for iy in 0..ny {
                let pxy = fx[ix] * fy[iy];
                for iz in 0..nz {
                    out.push(pxy * fz[iz]);
                }
            }
        }
        out
    }
}

/// Per-axis weighted power sums S_{d,m} = dv_d * sum_k v_k^m exp(beta_d v_k -
/// gamma v_k^2), m = 0..4. Everything the moment solver needs factorises
/// through these.
fn axis_sums(params: &ExpFamily, grid: &VelocityGrid) -> [[f64; 5]; 3] {
    let mut s = [[0.0; 5]; 3];
    for d in 0..3 {
        let dv = grid.dv()[d];
        for &v in grid.axis(d) {
            let a = params.axis_factor(d, v);
            let mut p = a;
            s[d][0] += p;
            for m in 1..5 {
                p *= v;
                s[d][m] += p;
            }
        }
        for m in 0..5 {
            s[d][m] *= dv;
        }
    }
    s
}

/// Raw lattice moments (<M>, <v M>, <|v|^2/2 M>) of an exponential-family
/// density, via the separable sums.
fn raw_moments(params: &ExpFamily, s: &[[f64; 5]; 3]) -> [f64; 5] {
    let p = params.alpha.exp();
    let m0 = p * s[0][0] * s[1][0] * s[2][0];
    let mx = p * s[0][1] * s[1][0] * s[2][0];
    let my = p * s[0][0] * s[1][1] * s[2][0];
    let mz = p * s[0][0] * s[1][0] * s[2][1];
    let e2 = 0.5
        * p
        * (s[0][2] * s[1][0] * s[2][0] + s[0][0] * s[1][2] * s[2][0] + s[0][0] * s[1][0] * s[2][2]);
    [m0, mx, my, mz, e2]
}

/// 5x5 Gram matrix <psi psi^T M> with psi = (1, v_x, v_y, v_z, |v|^2/2).
pub fn moment_matrix(params: &ExpFamily, grid: &VelocityGrid) -> [[f64; 5]; 5] {
    let s = axis_sums(params, grid);
    gram(params, &s)
}

fn gram(params: &ExpFamily, s: &[[f64; 5]; 3]) -> [[f64; 5]; 5] {
    let p = params.alpha.exp();
    // <v_x^a v_y^b v_z^c M>
    let m = |a: usize, b: usize, c: usize| p * s[0][a] * s[1][b] * s[2][c];

    let m2 = [m(2, 0, 0), m(0, 2, 0), m(0, 0, 2)];
    let v2 = m2[0] + m2[1] + m2[2];
    // <v_d |v|^2 M>
    let v2d = [
        m(3, 0, 0) + m(1, 2, 0) + m(1, 0, 2),
        m(0, 3, 0) + m(2, 1, 0) + m(0, 1, 2),
        m(0, 0, 3) + m(2, 0, 1) + m(0, 2, 1),
    ];
    // <|v|^4 M>
    let v4 = m(4, 0, 0)
        + m(0, 4, 0)
        + m(0, 0, 4)
        + 2.0 * (m(2, 2, 0) + m(2, 0, 2) + m(0, 2, 2));

    let mut g = [[0.0; 5]; 5];
    g[0][0] = m(0, 0, 0);
    g[0][1] = m(1, 0, 0);
    g[0][2] = m(0, 1, 0);
    g[0][3] = m(0, 0, 1);
    g[0][4] = 0.5 * v2;
    g[1][1] = m2[0];
    g[1][2] = m(1, 1, 0);
    g[1][3] = m(1, 0, 1);
    g[1][4] = 0.5 * v2d[0];
    g[2][2] = m2[1];
    g[2][3] = m(0, 1, 1);
    g[2][4] = 0.5 * v2d[1];
    g[3][3] = m2[2];
    g[3][4] = 0.5 * v2d[2];
    g[4][4] = 0.25 * v4;
    for i in 0..5 {
        for j in 0..i {
            g[i][j] = g[j][i];
        }
    }
    g
}

/// Gaussian elimination with partial pivoting for the 5x5 Newton systems.
fn solve5(mut a: [[f64; 5]; 5], mut b: [f64; 5]) -> Result<[f64; 5]> {
    for col in 0..5 {
        let mut piv = col;
        for row in col + 1..5 {
            if a[row][col].abs() > a[piv][col].abs() {
                piv = row;
            }
        }
        if a[piv][col].abs() < 1e-300 {
            return Err(CoreError::Numerical("singular moment matrix".into()));
        }
        a.swap(col, piv);
        b.swap(col, piv);
        let inv = 1.0 / a[col][col];
        for row in col + 1..5 {
            let f = a[row][col] * inv;
            if f == 0.0 {
                continue;
            }
            for k in col..5 {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = [0.0; 5];
    for col in (0..5).rev() {
        let mut v = b[col];
        for k in col + 1..5 {
            v -= a[col][k] * x[k];
        }
        x[col] = v / a[col][col];
    }
    Ok(x)
}

/// Result of the discrete moment projection.
#[derive(Debug, Clone)]
pub struct Projection {
    pub values: Vec<f64>,
    pub params: ExpFamily,
}

const PROJECTION_TOL: f64 = 5e-14;
const PROJECTION_MAX_ITER: usize = 60;

/// Discrete Maxwellian whose *lattice* moments equal (rho, rho u, rho e_tr)
/// exactly: Newton on the exponential-family parameters.
pub fn projected_maxwellian(
    rho: f64,
    u: [f64; 3],
    e_tr: f64,
    grid: &VelocityGrid,
) -> Result<Projection> {
    if !(rho > 0.0 && e_tr > 0.0) {
        return Err(CoreError::DegenerateState(format!(
            "projection target needs rho > 0 and e_tr > 0 (got {rho}, {e_tr})"
        )));
    }
    let u2 = u[0] * u[0] + u[1] * u[1] + u[2] * u[2];
    let target = [
        rho,
        rho * u[0],
        rho * u[1],
        rho * u[2],
        rho * (0.5 * u2 + e_tr),
    ];
    // Scales for the convergence test.
    let c = (2.0 * e_tr / 3.0).sqrt();
    let umag = u2.sqrt();
    let scale = [
        rho,
        rho * (c + umag),
        rho * (c + umag),
        rho * (c + umag),
        target[4],
    ];

    // Zero-momentum targets on symmetric axes keep beta = 0 exactly by
    // parity; pin those components so roundoff in the odd sums cannot leak in.
    let (lo, hi) = grid.bounds();
    let mut pinned = [false; 3];
    for d in 0..3 {
        let symmetric = (lo[d] + hi[d]).abs() <= 1e-14 * (hi[d] - lo[d]);
        pinned[d] = symmetric && u[d] == 0.0;
    }

    // Continuum parameters as the initial guess (RT ~ 2 e_tr / 3).
    let rt = 2.0 * e_tr / 3.0;
    let mut params = ExpFamily {
        alpha: (rho / (2.0 * std::f64::consts::PI * rt).powf(1.5)).ln() - 0.5 * u2 / rt,
        beta: [u[0] / rt, u[1] / rt, u[2] / rt],
        gamma: 0.5 / rt,
    };

    let mut best_norm = f64::INFINITY;
    for _ in 0..PROJECTION_MAX_ITER {
        let s = axis_sums(&params, grid);
        let m = raw_moments(&params, &s);
        let mut r = [0.0; 5];
        for i in 0..5 {
            r[i] = m[i] - target[i];
        }
        for d in 0..3 {
            if pinned[d] {
                // Residual there is pure roundoff of an odd sum.
                r[1 + d] = 0.0;
            }
        }
        let mut norm = 0.0f64;
        for i in 0..5 {
            norm = norm.max(r[i].abs() / scale[i]);
        }
        if !norm.is_finite() {
            return Err(CoreError::Projection(
                "non-finite residual during moment matching".into(),
            ));
        }
        if norm <= PROJECTION_TOL {
            return Ok(Projection {
                values: params.nodes(grid),
                params,
            });
        }
        best_norm = best_norm.min(norm);

        let g = gram(&params, &s);
        // d m / d(alpha, beta, gamma): gamma enters with -|v|^2, i.e. -2 times
        // the energy column of the Gram matrix.
        let mut jac = [[0.0; 5]; 5];
        for i in 0..5 {
            for j in 0..4 {
                jac[i][j] = g[i][j];
            }
            jac[i][4] = -2.0 * g[i][4];
        }
        for d in 0..3 {
            if pinned[d] {
                for k in 0..5 {
                    jac[1 + d][k] = 0.0;
                    jac[k][1 + d] = 0.0;
                }
                jac[1 + d][1 + d] = 1.0;
            }
        }
        let delta = solve5(jac, [-r[0], -r[1], -r[2], -r[3], -r[4]])?;

        // Keep gamma positive (integrability of the continuum form; the
        // discrete solve stays in this region for resolvable targets).
        let mut step = 1.0;
        while params.gamma + step * delta[4] <= 0.0 {
            step *= 0.5;
            if step < 1e-8 {
                return Err(CoreError::Projection(
                    "gamma collapsed toward zero; target moments not resolvable on this grid"
                        .into(),
                ));
            }
        }
        params.alpha += step * delta[0];
        for d in 0..3 {
            params.beta[d] += step * delta[1 + d];
        }
        params.gamma += step * delta[4];
    }

    Err(CoreError::Projection(format!(
        "moment matching stalled at residual {best_norm:.3e}"
    )))
}

/// Local equilibrium of a moment set: the projected Maxwellian plus the
/// per-mode targets e_int^i(T).
#[derive(Debug, Clone)]
pub struct Equilibrium {
    /// Discrete Maxwellian node values (lattice mass exactly rho).
    pub m: Vec<f64>,
    pub params: ExpFamily,
    /// Equilibrium internal energy of each mode at T.
    pub e_int_eq: Vec<f64>,
    pub t: f64,
    pub rho: f64,
}

impl Equilibrium {
    /// The equilibrium pair (M, e_int^i(T) M) as a cell state.
    pub fn state(&self) -> CellState {
        CellState {
            f: self.m.clone(),
            g: self
                .e_int_eq
                .iter()
                .map(|&e| self.m.iter().map(|&m| e * m).collect())
                .collect(),
        }
    }
}

/// Builds the discrete equilibrium for the given conserved moments.
///
/// The translational target is the exact complement e - sum_i e_int^i(T), so
/// the discrete total energy of the pair equals rho e bit-for-bit and the
/// collision operators conserve energy to machine precision.
pub fn equilibrium_of(
    local: &LocalMoments,
    grid: &VelocityGrid,
    gas: &GasModel,
) -> Result<Equilibrium> {
    let e_int_eq = gas.e_int_modes_of_t(local.t)?;
    let e_tr_eq = local.e - e_int_eq.iter().sum::<f64>();
    let proj = projected_maxwellian(local.rho, local.u, e_tr_eq, grid)?;
    Ok(Equilibrium {
        m: proj.values,
        params: proj.params,
        e_int_eq,
        t: local.t,
        rho: local.rho,
    })
}

/// Equilibrium cell state at prescribed (rho, u, T).
pub fn equilibrium_state(
    rho: f64,
    u: [f64; 3],
    t: f64,
    grid: &VelocityGrid,
    gas: &GasModel,
) -> Result<CellState> {
    let e_int_modes = gas.e_int_modes_of_t(t)?;
    let e = gas.e_of_t(t)?;
    let local = LocalMoments {
        rho,
        u,
        e_tr: e - e_int_modes.iter().sum::<f64>(),
        e_int_modes,
        e,
        t,
    };
    Ok(equilibrium_of(&local, grid, gas)?.state())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::thermo::EnergyMode;
    use approx::assert_relative_eq;

    fn nondim_gas_rot() -> GasModel {
        GasModel::new(1.0, vec![EnergyMode::rotational(1.0).with_range(1e-3, 1e3).unwrap()])
            .unwrap()
            .with_range(1e-3, 1e3)
            .unwrap()
    }

    fn grid_unit(n: usize) -> VelocityGrid {
        VelocityGrid::build([0.0; 3], 1.0, 1.0, n, 6.0).unwrap()
    }

    #[test]
    fn maxwellian_peak_and_mass() {
        let grid = grid_unit(32);
        let m = maxwellian(2.0, [0.0; 3], 1.0, 1.0, &grid);
        // mass (tail truncation at 6 thermal widths is ~1e-8)
        assert!((grid.integrate(&m) - 2.0).abs() < 1e-7);
        // translational energy <|v|^2/2 M> = 3/2 rho R T
        let e2 = grid.integrate_with(&m, |v| 0.5 * (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]));
        assert!((e2 - 3.0).abs() < 2e-6);
        // peak value at v = u (u = 0 not a node on even midpoint grids; check analytically)
        let peak = 2.0 / (2.0 * std::f64::consts::PI).powf(1.5);
        let params = ExpFamily::analytic(2.0, [0.0; 3], 1.0, 1.0);
        assert_relative_eq!(params.eval([0.0; 3]), peak, max_relative = 1e-13);
    }

    #[test]
    fn moments_of_equilibrium_state() {
        let gas = nondim_gas_rot();
        let grid = grid_unit(32);
        let state = equilibrium_state(1.0, [0.0; 3], 1.0, &grid, &gas).unwrap();
        let m = moments(&state, &grid, &gas).unwrap();
        assert_relative_eq!(m.rho, 1.0, max_relative = 1e-12);
        assert!(m.u.iter().all(|&ui| ui.abs() < 1e-13));
        assert_relative_eq!(m.t, 1.0, max_relative = 1e-11);
        // sigma = p I
        for i in 0..3 {
            for j in 0..3 {
                let expect = if i == j { m.p } else { 0.0 };
                assert!(
                    (m.sigma[i][j] - expect).abs() < 1e-10 * m.p,
                    "sigma[{i}][{j}] = {}",
                    m.sigma[i][j]
                );
            }
        }
        // heat flux of the equilibrium pair vanishes
        assert!(m.q.iter().all(|&qi| qi.abs() < 1e-12));
    }

    #[test]
    fn shifted_bulk_velocity_recovered() {
        let r = 287.0;
        let gas = GasModel::new(r, vec![EnergyMode::rotational(r)]).unwrap();
        let grid = VelocityGrid::build([50.0, 0.0, 0.0], 300.0, r, 32, 6.0).unwrap();
        let state = equilibrium_state(1.2, [50.0, 0.0, 0.0], 300.0, &grid, &gas).unwrap();
        let m = local_moments(&state, &grid, &gas).unwrap();
        assert_relative_eq!(m.u[0], 50.0, max_relative = 1e-10);
        assert!(m.u[1].abs() < 1e-9 && m.u[2].abs() < 1e-9);
    }

    #[test]
    fn two_mode_energies_recovered() {
        let r = 287.0;
        let t0 = 3000.0;
        let gas = GasModel::new(
            r,
            vec![
                EnergyMode::rotational(r),
                EnergyMode::vibrational(r, t0).unwrap(),
            ],
        )
        .unwrap();
        let grid = VelocityGrid::build([0.0; 3], 600.0, r, 32, 6.0).unwrap();
        let t = 600.0;
        let state = equilibrium_state(0.8, [0.0; 3], t, &grid, &gas).unwrap();
        let m = local_moments(&state, &grid, &gas).unwrap();
        let e_modes = gas.e_int_modes_of_t(t).unwrap();
        assert_relative_eq!(m.e_int_modes[0], e_modes[0], max_relative = 1e-11);
        assert_relative_eq!(m.e_int_modes[1], e_modes[1], max_relative = 1e-11);
        assert_relative_eq!(m.t, t, max_relative = 1e-11);
    }

    #[test]
    fn projection_matches_analytic_on_resolved_grid() {
        let grid = grid_unit(32);
        let proj = projected_maxwellian(1.0, [0.3, 0.0, 0.0], 1.5, &grid).unwrap();
        let analytic = ExpFamily::analytic(1.0, [0.3, 0.0, 0.0], 1.0, 1.0);
        assert!((proj.params.alpha - analytic.alpha).abs() < 1e-6);
        assert!((proj.params.beta[0] - analytic.beta[0]).abs() < 1e-6);
        assert!((proj.params.gamma - analytic.gamma).abs() < 1e-6);
    }

    #[test]
    fn projection_exact_on_coarse_grid() {
        // Even an 8^3 grid reproduces the lattice moments exactly, though the
        // shape differs from the analytic Maxwellian.
        let grid = VelocityGrid::build([0.0; 3], 1.0, 1.0, 8, 3.5).unwrap();
        let (rho, u, e_tr) = (2.0, [0.4, -0.2, 0.1], 1.2);
        let proj = projected_maxwellian(rho, u, e_tr, &grid).unwrap();
        let m0 = grid.integrate(&proj.values);
        assert_relative_eq!(m0, rho, max_relative = 1e-13);
        for d in 0..3 {
            let md = grid.integrate_with(&proj.values, |v| v[d]);
            assert_relative_eq!(md, rho * u[d], max_relative = 1e-12);
        }
        let e2 = grid.integrate_with(&proj.values, |v| {
            0.5 * (v[0] * v[0] + v[1] * v[1] + v[2] * v[2])
        });
        let u2 = u[0] * u[0] + u[1] * u[1] + u[2] * u[2];
        assert_relative_eq!(e2, rho * (0.5 * u2 + e_tr), max_relative = 1e-13);
    }

    #[test]
    fn projection_beta_zero_for_symmetric_target() {
        let grid = grid_unit(32);
        let proj = projected_maxwellian(1.0, [0.0; 3], 1.5, &grid).unwrap();
        assert_eq!(proj.params.beta, [0.0; 3]);
    }

    #[test]
    fn moment_round_trip_is_identity() {
        let gas = nondim_gas_rot();
        let grid = grid_unit(24);
        // A visibly non-equilibrium state: two shifted Maxwellians.
        let mut state = CellState {
            f: maxwellian(0.6, [1.0, 0.0, 0.0], 0.9, 1.0, &grid),
            g: vec![],
        };
        let other = maxwellian(0.5, [-1.2, 0.3, 0.0], 1.3, 1.0, &grid);
        for (a, b) in state.f.iter_mut().zip(&other) {
            *a += b;
        }
        state.g = vec![state.f.iter().map(|&f| 1.1 * f).collect()];

        let m = local_moments(&state, &grid, &gas).unwrap();
        let proj = projected_maxwellian(m.rho, m.u, m.e_tr, &grid).unwrap();
        let back = CellState {
            f: proj.values,
            g: vec![state.g[0].clone()],
        };
        let m2 = local_moments(&back, &grid, &gas).unwrap();
        assert_relative_eq!(m2.rho, m.rho, max_relative = 1e-12);
        for d in 0..3 {
            assert!((m2.u[d] - m.u[d]).abs() < 1e-12 * (1.0 + m.u[d].abs()));
        }
        assert_relative_eq!(m2.e_tr, m.e_tr, max_relative = 1e-12);
    }

    #[test]
    fn degenerate_density_is_an_error() {
        let gas = nondim_gas_rot();
        let grid = grid_unit(8);
        let state = CellState::zeros(&grid, 1);
        assert!(matches!(
            local_moments(&state, &grid, &gas),
            Err(CoreError::DegenerateState(_))
        ));
    }
}
