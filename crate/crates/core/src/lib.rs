//! Deterministic discrete-velocity solver for reduced BGK and Fokker-Planck
//! kinetic models of thermally perfect gases.
//!
//! The gas is described by a pair of reduced distributions per spatial cell:
//! `F` carries mass/momentum/translational energy over a 3D velocity lattice,
//! and one array `G^i` per internal-energy mode carries the internal-energy
//! density. Collisions relax the pair toward `(M, e_int^i(T) M)` where `M` is
//! a discrete Maxwellian whose lattice moments match the state exactly.
//!
//! Modules:
//! - [`thermo`]: temperature/energy/entropy relations of the gas.
//! - [`vgrid`]: velocity lattice, quadrature, Gaussian-integral self tests.
//! - [`state`]: reduced distributions, moments, moment-exact Maxwellians.
//! - [`entropy`]: the reduced entropy functional and its derivatives.
//! - [`bgk`], [`fp`]: collision operators with conservative, entropic steps.
//! - [`transport`]: 1D finite-volume advection, boundaries, time loop.
//! - [`chapman`]: closed-form transport-coefficient predictions and the
//!   numerical experiments that verify them.
//! - [`riemann`]: exact Riemann solver used as the Euler-limit oracle.

pub mod bgk;
pub mod chapman;
pub mod entropy;
pub mod error;
pub mod fp;
pub mod riemann;
pub mod state;
pub mod thermo;
pub mod transport;
pub mod vgrid;

pub use error::{CoreError, Result};
