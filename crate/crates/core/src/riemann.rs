//! Exact Riemann solver for the 1D Euler equations of an ideal gas.
//!
//! Serves as the independent oracle for the small-Knudsen limit of the
//! kinetic solver: the star-region pressure is found by bisection on the
//! monotone pressure function, and the full similarity solution is sampled
//! at x/t.

use crate::error::{CoreError, Result};

/// Primitive state (density, normal velocity, pressure).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrimState {
    pub rho: f64,
    pub u: f64,
    pub p: f64,
}

impl PrimState {
    pub fn new(rho: f64, u: f64, p: f64) -> Self {
        Self { rho, u, p }
    }

    pub fn sound_speed(&self, gamma: f64) -> f64 {
        (gamma * self.p / self.rho).sqrt()
    }
}

/// Pressure function of one side: the velocity change across the wave
/// connecting the side state to pressure p (shock for p > p_k, rarefaction
/// otherwise).
fn pressure_fn(p: f64, s: &PrimState, gamma: f64) -> f64 {
    if p > s.p {
        let a = 2.0 / ((gamma + 1.0) * s.rho);
        let b = (gamma - 1.0) / (gamma + 1.0) * s.p;
        (p - s.p) * (a / (p + b)).sqrt()
    } else {
        let c = s.sound_speed(gamma);
        2.0 * c / (gamma - 1.0) * ((p / s.p).powf((gamma - 1.0) / (2.0 * gamma)) - 1.0)
    }
}

#[derive(Debug, Clone)]
pub struct RiemannSolution {
    pub left: PrimState,
    pub right: PrimState,
    pub gamma: f64,
    pub p_star: f64,
    pub u_star: f64,
}

/// Solves the Riemann problem by bisection on f(p) = f_L + f_R + (u_R - u_L).
pub fn solve(left: PrimState, right: PrimState, gamma: f64) -> Result<RiemannSolution> {
    for s in [&left, &right] {
        if !(s.rho > 0.0 && s.p > 0.0) {
            return Err(CoreError::DegenerateState(format!(
                "Riemann states need positive density and pressure: {s:?}"
            )));
        }
    }
    let du = right.u - left.u;
    let f = |p: f64| pressure_fn(p, &left, gamma) + pressure_fn(p, &right, gamma) + du;

    // Vacuum check: even p -> 0 cannot open the gap.
    let c_l = left.sound_speed(gamma);
    let c_r = right.sound_speed(gamma);
    if 2.0 * (c_l + c_r) / (gamma - 1.0) <= du {
        return Err(CoreError::DegenerateState(
            "pressure positivity violated (vacuum-generating data)".into(),
        ));
    }

    // Bracket the root: f is increasing in p.
    let mut lo = 1e-14 * left.p.min(right.p);
    let mut hi = left.p.max(right.p);
    while f(hi) < 0.0 {
        hi *= 2.0;
        if !hi.is_finite() {
            return Err(CoreError::Numerical("pressure bracket diverged".into()));
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
        if (hi - lo) <= 1e-14 * hi {
            break;
        }
    }
    let p_star = 0.5 * (lo + hi);
    let u_star =
        0.5 * (left.u + right.u) + 0.5 * (pressure_fn(p_star, &right, gamma) - pressure_fn(p_star, &left, gamma));
    Ok(RiemannSolution {
        left,
        right,
        gamma,
        p_star,
        u_star,
    })
}

impl RiemannSolution {
    /// Samples the similarity solution at xi = x/t.
    pub fn sample(&self, xi: f64) -> PrimState {
        let g = self.gamma;
        let gm1 = g - 1.0;
        let gp1 = g + 1.0;
        if xi <= self.u_star {
            // Left of the contact.
            let s = &self.left;
            let c = s.sound_speed(g);
            if self.p_star > s.p {
                // Left shock.
                let pr = self.p_star / s.p;
                let speed = s.u - c * (gp1 / (2.0 * g) * pr + gm1 / (2.0 * g)).sqrt();
                if xi <= speed {
                    *s
                } else {
                    let rho = s.rho * ((pr + gm1 / gp1) / (gm1 / gp1 * pr + 1.0));
                    PrimState::new(rho, self.u_star, self.p_star)
                }
            } else {
                // Left rarefaction.
                let head = s.u - c;
                let c_star = c * (self.p_star / s.p).powf(gm1 / (2.0 * g));
                let tail = self.u_star - c_star;
                if xi <= head {
                    *s
                } else if xi >= tail {
                    let rho = s.rho * (self.p_star / s.p).powf(1.0 / g);
                    PrimState::new(rho, self.u_star, self.p_star)
                } else {
                    let factor = 2.0 / gp1 + gm1 / (gp1 * c) * (s.u - xi);
                    PrimState::new(
                        s.rho * factor.powf(2.0 / gm1),
                        2.0 / gp1 * (c + gm1 / 2.0 * s.u + xi),
                        s.p * factor.powf(2.0 * g / gm1),
                    )
                }
            }
        } else {
            // Right of the contact.
            let s = &self.right;
            let c = s.sound_speed(g);
            if self.p_star > s.p {
                // Right shock.
                let pr = self.p_star / s.p;
                let speed = s.u + c * (gp1 / (2.0 * g) * pr + gm1 / (2.0 * g)).sqrt();
                if xi >= speed {
                    *s
                } else {
                    let rho = s.rho * ((pr + gm1 / gp1) / (gm1 / gp1 * pr + 1.0));
                    PrimState::new(rho, self.u_star, self.p_star)
                }
            } else {
                // Right rarefaction.
                let head = s.u + c;
                let c_star = c * (self.p_star / s.p).powf(gm1 / (2.0 * g));
                let tail = self.u_star + c_star;
                if xi >= head {
                    *s
                } else if xi <= tail {
                    let rho = s.rho * (self.p_star / s.p).powf(1.0 / g);
                    PrimState::new(rho, self.u_star, self.p_star)
                } else {
                    let factor = 2.0 / gp1 - gm1 / (gp1 * c) * (s.u - xi);
                    PrimState::new(
                        s.rho * factor.powf(2.0 / gm1),
                        2.0 / gp1 * (-c + gm1 / 2.0 * s.u + xi),
                        s.p * factor.powf(2.0 * g / gm1),
                    )
                }
            }
        }
    }

    /// Classical Sod tube initial data (rho, u, p) = (1,0,1) | (1/8, 0, 1/10).
    pub fn sod(gamma: f64) -> Result<Self> {
        solve(
            PrimState::new(1.0, 0.0, 1.0),
            PrimState::new(0.125, 0.0, 0.1),
            gamma,
        )
    }
}
