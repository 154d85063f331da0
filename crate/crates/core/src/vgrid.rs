//! Bounded uniform Cartesian velocity lattice with midpoint quadrature.
//!
//! Nodes sit at cell midpoints, so a symmetric grid contains no zero-speed
//! node for even counts and odd moments of symmetric integrands vanish by
//! construction. For Maxwellian-weighted integrands the midpoint rule is
//! spectrally accurate once the span covers the Gaussian tails.

use crate::error::{CoreError, Result};

#[derive(Debug, Clone)]
pub struct VelocityGrid {
    n: [usize; 3],
    v_min: [f64; 3],
    v_max: [f64; 3],
    dv: [f64; 3],
    axes: [Vec<f64>; 3],
    weight: f64,
}

impl VelocityGrid {
    /// Cubic grid with per-axis bounds `u_ref_i +/- span * sqrt(R T_ref)` and
    /// `n` midpoint nodes per axis.
    pub fn build(u_ref: [f64; 3], t_ref: f64, r: f64, n: usize, span: f64) -> Result<Self> {
        if !(t_ref > 0.0 && r > 0.0) {
            return Err(CoreError::Config(format!(
                "grid reference state needs T_ref > 0 and R > 0 (got {t_ref}, {r})"
            )));
        }
        if span < 3.0 {
            return Err(CoreError::Config(format!(
                "velocity span {span} below minimum 3 thermal widths"
            )));
        }
        let half = span * (r * t_ref).sqrt();
        let v_min = [u_ref[0] - half, u_ref[1] - half, u_ref[2] - half];
        let v_max = [u_ref[0] + half, u_ref[1] + half, u_ref[2] + half];
        Self::from_bounds([n; 3], v_min, v_max)
    }

    /// Grid with explicit per-axis bounds.
    pub fn from_bounds(n: [usize; 3], v_min: [f64; 3], v_max: [f64; 3]) -> Result<Self> {
        for d in 0..3 {
            if n[d] < 8 {
                return Err(CoreError::Config(format!(
                    "velocity grid needs at least 8 nodes per axis (axis {d}: {})",
                    n[d]
                )));
            }
            if !(v_max[d] > v_min[d]) {
                return Err(CoreError::Config(format!(
                    "velocity bounds on axis {d} are empty: [{}, {}]",
                    v_min[d], v_max[d]
                )));
            }
        }
        let mut dv = [0.0; 3];
        let mut axes: [Vec<f64>; 3] = [Vec::new(), Vec::new(), Vec::new()];
        for d in 0..3 {
            dv[d] = (v_max[d] - v_min[d]) / n[d] as f64;
            axes[d] = (0..n[d])
                .map(|k| v_min[d] + (k as f64 + 0.5) * dv[d])
                .collect();
        }
        let weight = dv[0] * dv[1] * dv[2];
        Ok(Self {
            n,
            v_min,
            v_max,
            dv,
            axes,
            weight,
        })
    }

    pub fn n(&self) -> [usize; 3] {
        self.n
    }

    pub fn len(&self) -> usize {
        self.n[0] * self.n[1] * self.n[2]
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn dv(&self) -> [f64; 3] {
        self.dv
    }

    pub fn bounds(&self) -> ([f64; 3], [f64; 3]) {
        (self.v_min, self.v_max)
    }

    /// Quadrature weight of every node (midpoint rule: dv^3).
    pub fn weight(&self) -> f64 {
        self.weight
    }

    /// Node coordinates along one axis.
    pub fn axis(&self, d: usize) -> &[f64] {
        &self.axes[d]
    }

    /// Largest node speed along an axis (used for CFL limits).
    pub fn max_speed(&self, d: usize) -> f64 {
        self.axes[d]
            .iter()
            .fold(0.0f64, |acc, v| acc.max(v.abs()))
    }

    #[inline]
    pub fn index(&self, ix: usize, iy: usize, iz: usize) -> usize {
        (ix * self.n[1] + iy) * self.n[2] + iz
    }

    #[inline]
    pub fn decompose(&self, idx: usize) -> [usize; 3] {
        let iz = idx % self.n[2];
        let rest = idx / self.n[2];
        let iy = rest % self.n[1];
        let ix = rest / self.n[1];
        [ix, iy, iz]
    }

    #[inline]
    pub fn node(&self, idx: usize) -> [f64; 3] {
        let [ix, iy, iz] = self.decompose(idx);
        [self.axes[0][ix], self.axes[1][iy], self.axes[2][iz]]
    }

    /// Evaluates a function of velocity at every node.
    pub fn fill(&self, f: impl Fn([f64; 3]) -> f64) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.len());
        for &vx in &self.axes[0] {
            for &vy in &self.axes[1] {
                for &vz in &self.axes[2] {
                    out.push(f([vx, vy, vz]));
                }
            }
        }
        out
    }

    /// Midpoint-rule integral of node values, summed in a fixed pairwise
    /// tree so results are bit-reproducible per configuration.
    pub fn integrate(&self, psi: &[f64]) -> f64 {
        debug_assert_eq!(psi.len(), self.len());
        pairwise_sum(psi) * self.weight
    }

    /// Integral of psi(v) * field(v) without materialising the product.
    pub fn integrate_with(&self, field: &[f64], psi: impl Fn([f64; 3]) -> f64) -> f64 {
        debug_assert_eq!(field.len(), self.len());
        let mut blocks = Vec::with_capacity(field.len() / BLOCK + 2);
        let mut acc = 0.0;
        let mut count = 0usize;
        let mut idx = 0usize;
        for &vx in &self.axes[0] {
            for &vy in &self.axes[1] {
                for &vz in &self.axes[2] {
                    acc += field[idx] * psi([vx, vy, vz]);
                    idx += 1;
                    count += 1;
                    if count == BLOCK {
                        blocks.push(acc);
                        acc = 0.0;
                        count = 0;
                    }
                }
            }
        }
        if count > 0 {
            blocks.push(acc);
        }
        pairwise_sum(&blocks) * self.weight
    }
}

const BLOCK: usize = 64;

/// Deterministic fixed-tree pairwise summation.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= BLOCK {
        return xs.iter().sum();
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

/// The absolute Maxwellian M0(V) = (2 pi)^{-3/2} exp(-|V|^2 / 2) sampled on
/// the grid nodes (the grid is interpreted directly as V-space).
pub fn standard_m0(grid: &VelocityGrid) -> Vec<f64> {
    let c = (2.0 * std::f64::consts::PI).powf(-1.5);
    grid.fill(|v| c * (-0.5 * (v[0] * v[0] + v[1] * v[1] + v[2] * v[2])).exp())
}

/// One verified Gaussian-moment identity.
#[derive(Debug, Clone, serde::Serialize)]
pub struct IdentityCheck {
    pub name: String,
    pub expected: f64,
    pub measured: f64,
    pub error: f64,
}

impl IdentityCheck {
    fn new(name: impl Into<String>, expected: f64, measured: f64) -> Self {
        Self {
            name: name.into(),
            expected,
            measured,
            error: (measured - expected).abs(),
        }
    }
}

/// Evaluates the standard Gaussian moment identities on the grid and reports
/// the measured error of each: normalisation, second through sixth moments,
/// and the contraction identity
/// `<V_i V_j C_kl V_k V_l M0> = C_ij + C_ji + tr(C) delta_ij`
/// for the supplied 3x3 matrix C.
pub fn appendix_a_suite(grid: &VelocityGrid, c: &[[f64; 3]; 3]) -> Vec<IdentityCheck> {
    let m0 = standard_m0(grid);
    let d = |i: usize, j: usize| if i == j { 1.0 } else { 0.0 };
    let mut checks = Vec::new();

    checks.push(IdentityCheck::new(
        "<M0> = 1",
        1.0,
        grid.integrate(&m0),
    ));

    for i in 0..3 {
        for j in i..3 {
            let m = grid.integrate_with(&m0, |v| v[i] * v[j]);
            checks.push(IdentityCheck::new(
                format!("<V_{i} V_{j} M0> = {}", d(i, j)),
                d(i, j),
                m,
            ));
        }
    }

    let sq = |v: [f64; 3]| v[0] * v[0] + v[1] * v[1] + v[2] * v[2];
    checks.push(IdentityCheck::new(
        "<|V|^2 M0> = 3",
        3.0,
        grid.integrate_with(&m0, sq),
    ));

    for i in 0..3 {
        for j in 0..3 {
            let m = grid.integrate_with(&m0, |v| v[i] * v[i] * v[j] * v[j]);
            checks.push(IdentityCheck::new(
                format!("<V_{i}^2 V_{j}^2 M0> = {}", 1.0 + 2.0 * d(i, j)),
                1.0 + 2.0 * d(i, j),
                m,
            ));
        }
    }

    for i in 0..3 {
        for j in i..3 {
            let m = grid.integrate_with(&m0, |v| v[i] * v[j] * sq(v));
            checks.push(IdentityCheck::new(
                format!("<V_{i} V_{j} |V|^2 M0> = {}", 5.0 * d(i, j)),
                5.0 * d(i, j),
                m,
            ));
        }
    }

    checks.push(IdentityCheck::new(
        "<|V|^4 M0> = 15",
        15.0,
        grid.integrate_with(&m0, |v| sq(v) * sq(v)),
    ));

    for i in 0..3 {
        for j in i..3 {
            let m = grid.integrate_with(&m0, |v| v[i] * v[j] * sq(v) * sq(v));
            checks.push(IdentityCheck::new(
                format!("<V_{i} V_{j} |V|^4 M0> = {}", 35.0 * d(i, j)),
                35.0 * d(i, j),
                m,
            ));
        }
    }

    checks.push(IdentityCheck::new(
        "<|V|^6 M0> = 105",
        105.0,
        grid.integrate_with(&m0, |v| {
            let s = sq(v);
            s * s * s
        }),
    ));

    let tr = c[0][0] + c[1][1] + c[2][2];
    for i in 0..3 {
        for j in 0..3 {
            let m = grid.integrate_with(&m0, |v| {
                let mut q = 0.0;
                for k in 0..3 {
                    for l in 0..3 {
                        q += c[k][l] * v[k] * v[l];
                    }
                }
                v[i] * v[j] * q
            });
            let expect = c[i][j] + c[j][i] + tr * d(i, j);
            checks.push(IdentityCheck::new(
                format!("<V_{i} V_{j} (C:VV) M0> = C_{i}{j} + C_{j}{i} + tr(C) d_{i}{j}"),
                expect,
                m,
            ));
        }
    }

    checks
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn unit_grid(n: usize, span: f64) -> VelocityGrid {
        VelocityGrid::build([0.0; 3], 1.0, 1.0, n, span).unwrap()
    }

    #[test]
    fn build_bounds() {
        let g = unit_grid(32, 6.0);
        let (lo, hi) = g.bounds();
        assert_eq!(lo, [-6.0; 3]);
        assert_eq!(hi, [6.0; 3]);

        let g = VelocityGrid::build([100.0, 0.0, 0.0], 300.0, 287.0, 32, 6.0).unwrap();
        let (lo, hi) = g.bounds();
        let half = 6.0 * (287.0 * 300.0f64).sqrt();
        assert_relative_eq!(lo[0], 100.0 - half, max_relative = 1e-14);
        assert_relative_eq!(hi[0], 100.0 + half, max_relative = 1e-14);
    }

    #[test]
    fn minimal_grid_is_valid() {
        let g = unit_grid(8, 3.0);
        assert_eq!(g.len(), 512);
    }

    #[test]
    fn rejects_small_grid_and_span() {
        assert!(VelocityGrid::build([0.0; 3], 1.0, 1.0, 7, 6.0).is_err());
        assert!(VelocityGrid::build([0.0; 3], 1.0, 1.0, 32, 2.0).is_err());
    }

    #[test]
    fn constant_integrates_to_volume() {
        let g = unit_grid(32, 6.0);
        let ones = vec![1.0; g.len()];
        assert_relative_eq!(g.integrate(&ones), 12.0f64.powi(3), max_relative = 1e-13);
    }

    #[test]
    fn maxwellian_mass() {
        let g = unit_grid(32, 6.0);
        let m0 = standard_m0(&g);
        assert!((g.integrate(&m0) - 1.0).abs() < 1e-8);
    }

    #[test]
    fn odd_moment_vanishes_on_symmetric_grid() {
        let g = unit_grid(32, 6.0);
        let m0 = standard_m0(&g);
        let m = g.integrate_with(&m0, |v| v[0]);
        assert!(m.abs() < 1e-12);
    }

    #[test]
    fn gaussian_identities_once_the_span_contains_the_tails() {
        // The sixth-moment integrand |V|^6 M0 carries ~3e-4 of its weight
        // beyond +/-6, so tight tolerances need a wider span: 7.5 thermal
        // widths reach 1e-6, 8.25 reach 1e-9.
        let c = [[0.3, -1.2, 0.7], [2.0, 0.1, -0.4], [0.9, 1.5, -2.2]];
        for (n, span, tol) in [(32usize, 7.5, 1e-6), (48, 8.25, 1e-9)] {
            let g = unit_grid(n, span);
            for check in appendix_a_suite(&g, &c) {
                assert!(
                    check.error < tol,
                    "n={n} span={span}: {} error {}",
                    check.name,
                    check.error
                );
            }
        }
    }

    #[test]
    fn span_six_is_truncation_limited_on_high_moments() {
        // At +/-6 thermal widths the low moments are essentially exact while
        // <|V|^6 M0> is dominated by the tail outside the box; the floor does
        // not move with resolution.
        let c = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
        for n in [32usize, 48] {
            let checks = appendix_a_suite(&unit_grid(n, 6.0), &c);
            let mass = checks.iter().find(|c| c.name.starts_with("<M0>")).unwrap();
            assert!(mass.error < 1e-8, "mass error {}", mass.error);
            let v6 = checks
                .iter()
                .find(|c| c.name.starts_with("<|V|^6"))
                .unwrap();
            assert!(
                (1e-5..1e-3).contains(&v6.error),
                "n={n}: sixth-moment error {} not at the expected truncation floor",
                v6.error
            );
        }
    }

    #[test]
    fn identity_matrix_reduces_to_fourth_moment() {
        // C = I collapses the contraction identity onto <V_i V_j |V|^2 M0>.
        let g = unit_grid(32, 6.0);
        let eye = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
        let checks = appendix_a_suite(&g, &eye);
        let m0 = standard_m0(&g);
        for i in 0..3 {
            let via_c = checks
                .iter()
                .find(|c| c.name.starts_with(&format!("<V_{i} V_{i} (C:VV)")))
                .unwrap();
            let direct =
                g.integrate_with(&m0, |v| v[i] * v[i] * (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]));
            assert_relative_eq!(via_c.measured, direct, max_relative = 1e-12);
        }
    }

    #[test]
    fn pairwise_matches_naive_on_uniform_data() {
        let xs: Vec<f64> = (0..1000).map(|i| (i as f64).sin()).collect();
        let naive: f64 = xs.iter().sum();
        assert_relative_eq!(pairwise_sum(&xs), naive, max_relative = 1e-12);
    }
}
