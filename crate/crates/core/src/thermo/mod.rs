//! Temperature-energy-entropy relations of a thermally perfect gas.
//!
//! The gas satisfies p = rho R T while the internal energy e_int(T) is an
//! arbitrary strictly increasing function of temperature, split into one or
//! more independent modes (rotation, vibration, polynomial or tabulated
//! laws). Each mode exposes its energy law, its inverse, the associated
//! specific heat c_v_int = de_int/dT > 0, and the mode entropy s_int defined
//! by ds_int = de_int / T_int(e_int), fixed up to an additive constant s_ref.

mod interp;

pub use interp::MonotoneCubic;

use crate::error::{CoreError, Result};
use std::path::Path;

/// Default validity range when a model does not declare its own.
pub const DEFAULT_T_MIN: f64 = 10.0;
pub const DEFAULT_T_MAX: f64 = 20000.0;

const MAX_NEWTON_ITER: usize = 100;
const NEWTON_TOL_REL: f64 = 1e-12;

/// Internal-energy law of a single mode.
#[derive(Debug, Clone)]
pub enum EnergyLaw {
    /// e_int = R T (fully excited linear mode, e.g. rotation of a diatomic).
    RotationalLinear,
    /// e_int = R T0 / (exp(T0/T) - 1), harmonic oscillator at characteristic
    /// temperature T0.
    HarmonicVibrational { t0: f64 },
    /// e_int = sum_k a_k T^k with validated positive derivative.
    Polynomial { coeffs: Vec<f64> },
    /// Monotone cubic through (T, e_int) knots.
    Tabulated { spline: MonotoneCubic },
}

/// One internal-energy mode of the gas.
#[derive(Debug, Clone)]
pub struct EnergyMode {
    law: EnergyLaw,
    r: f64,
    s_ref: f64,
    t_min: f64,
    t_max: f64,
    /// Cumulative entropy at tabulated knots, anchored to zero at the first
    /// knot (tabulated law only).
    knot_entropy: Vec<f64>,
}

impl EnergyMode {
    pub fn rotational(r: f64) -> Self {
        Self {
            law: EnergyLaw::RotationalLinear,
            r,
            s_ref: 0.0,
            t_min: DEFAULT_T_MIN,
            t_max: DEFAULT_T_MAX,
            knot_entropy: Vec::new(),
        }
    }

    pub fn vibrational(r: f64, t0: f64) -> Result<Self> {
        if !(t0 > 0.0) {
            return Err(CoreError::InvalidModel(format!(
                "vibrational temperature T0 = {t0} must be positive"
            )));
        }
        Ok(Self {
            law: EnergyLaw::HarmonicVibrational { t0 },
            r,
            s_ref: 0.0,
            t_min: DEFAULT_T_MIN,
            t_max: DEFAULT_T_MAX,
            knot_entropy: Vec::new(),
        })
    }

    pub fn polynomial(r: f64, coeffs: Vec<f64>, t_min: f64, t_max: f64) -> Result<Self> {
        let mode = Self {
            law: EnergyLaw::Polynomial { coeffs },
            r,
            s_ref: 0.0,
            t_min,
            t_max,
            knot_entropy: Vec::new(),
        };
        mode.validate()?;
        Ok(mode)
    }

    pub fn tabulated(r: f64, knots: &[(f64, f64)]) -> Result<Self> {
        let (t, e): (Vec<f64>, Vec<f64>) = knots.iter().copied().unzip();
        let spline = MonotoneCubic::new(t, e)?;
        let t_min = spline.x_min();
        let t_max = spline.x_max();
        let knot_entropy = knot_entropies(&spline);
        let mode = Self {
            law: EnergyLaw::Tabulated { spline },
            r,
            s_ref: 0.0,
            t_min,
            t_max,
            knot_entropy,
        };
        mode.validate()?;
        Ok(mode)
    }

    /// Loads a tabulated law from a two-column text file (T, e_int), one pair
    /// per line, SI units, '#' comments allowed. T must be strictly
    /// increasing.
    pub fn tabulated_from_path(r: f64, path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut knots = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = match raw.find('#') {
                Some(p) => &raw[..p],
                None => raw,
            }
            .trim();
            if line.is_empty() {
                continue;
            }
            let mut cols = line.split_whitespace();
            let parse = |tok: Option<&str>| -> Result<f64> {
                tok.and_then(|s| s.parse::<f64>().ok()).ok_or_else(|| {
                    CoreError::InvalidModel(format!(
                        "line {}: expected two numeric columns (T, e_int)",
                        lineno + 1
                    ))
                })
            };
            let t = parse(cols.next())?;
            let e = parse(cols.next())?;
            if cols.next().is_some() {
                return Err(CoreError::InvalidModel(format!(
                    "line {}: more than two columns",
                    lineno + 1
                )));
            }
            knots.push((t, e));
        }
        Self::tabulated(r, &knots)
    }

    pub fn with_s_ref(mut self, s_ref: f64) -> Self {
        self.s_ref = s_ref;
        self
    }

    /// Restricts the validity range (closed-form laws default to
    /// [DEFAULT_T_MIN, DEFAULT_T_MAX]).
    pub fn with_range(mut self, t_min: f64, t_max: f64) -> Result<Self> {
        if !(t_min > 0.0 && t_max > t_min) {
            return Err(CoreError::InvalidModel(format!(
                "invalid temperature range [{t_min}, {t_max}]"
            )));
        }
        if let EnergyLaw::Tabulated { spline } = &self.law {
            if t_min < spline.x_min() || t_max > spline.x_max() {
                return Err(CoreError::InvalidModel(
                    "requested range exceeds the tabulated knot span".into(),
                ));
            }
        }
        self.t_min = t_min;
        self.t_max = t_max;
        self.validate()?;
        Ok(self)
    }

    pub fn gas_constant(&self) -> f64 {
        self.r
    }

    pub fn s_ref(&self) -> f64 {
        self.s_ref
    }

    pub fn t_range(&self) -> (f64, f64) {
        (self.t_min, self.t_max)
    }

    /// c_v_int > 0 must hold over the declared range; checked on a dense
    /// sample at construction.
    fn validate(&self) -> Result<()> {
        if !(self.r > 0.0) {
            return Err(CoreError::InvalidModel(format!(
                "gas constant R = {} must be positive",
                self.r
            )));
        }
        let n = 257;
        for i in 0..n {
            let t = self.t_min + (self.t_max - self.t_min) * (i as f64) / ((n - 1) as f64);
            let cv = self.c_v_int_unchecked(t);
            if !(cv > 0.0) {
                return Err(CoreError::InvalidModel(format!(
                    "c_v_int({t}) = {cv} is not positive; the energy law must be strictly increasing"
                )));
            }
        }
        Ok(())
    }

    fn check_t(&self, t: f64) -> Result<()> {
        if t < self.t_min || t > self.t_max || !t.is_finite() {
            Err(CoreError::TemperatureRange {
                t,
                t_min: self.t_min,
                t_max: self.t_max,
            })
        } else {
            Ok(())
        }
    }

    /// Internal energy at temperature T.
    pub fn e_int(&self, t: f64) -> Result<f64> {
        self.check_t(t)?;
        Ok(self.e_int_unchecked(t))
    }

    fn e_int_unchecked(&self, t: f64) -> f64 {
        match &self.law {
            EnergyLaw::RotationalLinear => self.r * t,
            EnergyLaw::HarmonicVibrational { t0 } => self.r * t0 / (t0 / t).exp_m1(),
            EnergyLaw::Polynomial { coeffs } => {
                let mut acc = 0.0;
                for &a in coeffs.iter().rev() {
                    acc = acc * t + a;
                }
                acc
            }
            EnergyLaw::Tabulated { spline } => spline.eval(t),
        }
    }

    /// Specific heat c_v_int = d e_int / dT (analytic where a closed form
    /// exists, interpolant derivative for tables).
    pub fn c_v_int(&self, t: f64) -> Result<f64> {
        self.check_t(t)?;
        Ok(self.c_v_int_unchecked(t))
    }

    fn c_v_int_unchecked(&self, t: f64) -> f64 {
        match &self.law {
            EnergyLaw::RotationalLinear => self.r,
            EnergyLaw::HarmonicVibrational { t0 } => {
                // R (T0/T)^2 exp(-T0/T) / (1 - exp(-T0/T))^2, written to stay
                // finite for large T0/T.
                let x = t0 / t;
                let em = (-x).exp();
                self.r * x * x * em / ((1.0 - em) * (1.0 - em))
            }
            EnergyLaw::Polynomial { coeffs } => coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, &a)| k as f64 * a * t.powi(k as i32 - 1))
                .sum(),
            EnergyLaw::Tabulated { spline } => spline.deriv(t),
        }
    }

    /// Attainable internal-energy range over the declared temperature range.
    pub fn e_int_range(&self) -> (f64, f64) {
        (self.e_int_unchecked(self.t_min), self.e_int_unchecked(self.t_max))
    }

    /// Inverse of the energy law: T_int such that e_int(T_int) = e.
    ///
    /// Closed-form laws invert on their natural domain e > 0; polynomial and
    /// tabulated laws invert within the declared range by safeguarded Newton.
    pub fn t_int(&self, e: f64) -> Result<f64> {
        match &self.law {
            EnergyLaw::RotationalLinear => {
                if !(e > 0.0) {
                    return Err(CoreError::Domain(format!(
                        "rotational mode requires e_int > 0 (got {e})"
                    )));
                }
                Ok(e / self.r)
            }
            EnergyLaw::HarmonicVibrational { t0 } => {
                if !(e > 0.0) {
                    return Err(CoreError::Domain(format!(
                        "vibrational mode requires e_int > 0 (got {e})"
                    )));
                }
                Ok(t0 / (self.r * t0 / e).ln_1p())
            }
            EnergyLaw::Polynomial { .. } => {
                let (e_lo, e_hi) = self.e_int_range();
                invert_increasing(
                    |t| self.e_int_unchecked(t),
                    |t| self.c_v_int_unchecked(t),
                    e,
                    self.t_min,
                    self.t_max,
                    e_lo,
                    e_hi,
                    self.newton_tol(e),
                )
            }
            EnergyLaw::Tabulated { spline } => spline.invert(e),
        }
    }

    /// Mode entropy s_int(e_int) with ds_int = de_int / T_int, plus s_ref.
    ///
    /// Rotation and vibration use the closed forms; polynomial and tabulated
    /// laws integrate c_v_int(T)/T segment-exactly from the reference energy
    /// e_int(t_min).
    pub fn s_int(&self, e: f64) -> Result<f64> {
        match &self.law {
            EnergyLaw::RotationalLinear => {
                if !(e > 0.0) {
                    return Err(CoreError::Domain(format!(
                        "rotational entropy needs e_int > 0 (got {e})"
                    )));
                }
                Ok(self.r * e.ln() + self.s_ref)
            }
            EnergyLaw::HarmonicVibrational { t0 } => {
                if !(e > 0.0) {
                    return Err(CoreError::Domain(format!(
                        "vibrational entropy needs e_int > 0 (got {e})"
                    )));
                }
                let rt0 = self.r * t0;
                let s = (e / t0 + self.r) * (e / rt0).ln_1p() - (e / t0) * (e / rt0).ln();
                Ok(s + self.s_ref)
            }
            EnergyLaw::Polynomial { coeffs } => {
                let t = self.t_int(e)?;
                Ok(poly_entropy(coeffs, t) - poly_entropy(coeffs, self.t_min) + self.s_ref)
            }
            EnergyLaw::Tabulated { spline } => {
                let t = spline.invert(e)?;
                let j = (0..spline.n_segments())
                    .rev()
                    .find(|&j| spline.segment_x(j).0 <= t)
                    .unwrap_or(0);
                let (t_lo, _) = spline.segment_x(j);
                let partial = segment_entropy_integral(spline.segment_coeffs(j), t_lo, t);
                Ok(self.knot_entropy[j] + partial + self.s_ref)
            }
        }
    }

    /// c_v_int evaluated at the inverse temperature of the given energy;
    /// shared by the entropy Hessian.
    pub fn c_v_int_at_e(&self, e: f64) -> Result<f64> {
        let t = self.t_int(e)?;
        Ok(self.c_v_int_unchecked(t))
    }

    fn newton_tol(&self, target: f64) -> f64 {
        NEWTON_TOL_REL * (target.abs() + self.r * self.t_max)
    }
}

/// Closed-form of integral c_v(T)/T dT for a polynomial energy law.
fn poly_entropy(coeffs: &[f64], t: f64) -> f64 {
    let mut s = 0.0;
    for (k, &a) in coeffs.iter().enumerate().skip(1) {
        if k == 1 {
            s += a * t.ln();
        } else {
            let kf = k as f64;
            s += kf / (kf - 1.0) * a * t.powi(k as i32 - 1);
        }
    }
    s
}

/// Exact integral of c_v(T)/T over [t_lo, t] for one cubic segment of the
/// tabulated law, with c_v the (quadratic) derivative of the segment cubic.
fn segment_entropy_integral(coeffs: [f64; 4], t_lo: f64, t: f64) -> f64 {
    let [_, c1, c2, c3] = coeffs;
    // c_v(T) = c1 + 2 c2 (T - t_lo) + 3 c3 (T - t_lo)^2, expanded in powers
    // of T so that c_v/T integrates in closed form.
    let a = c1 - 2.0 * c2 * t_lo + 3.0 * c3 * t_lo * t_lo;
    let b = 2.0 * c2 - 6.0 * c3 * t_lo;
    let c = 3.0 * c3;
    a * (t / t_lo).ln() + b * (t - t_lo) + 0.5 * c * (t * t - t_lo * t_lo)
}

fn knot_entropies(spline: &MonotoneCubic) -> Vec<f64> {
    let mut s = vec![0.0; spline.n_segments() + 1];
    for j in 0..spline.n_segments() {
        let (t_lo, t_hi) = spline.segment_x(j);
        s[j + 1] = s[j] + segment_entropy_integral(spline.segment_coeffs(j), t_lo, t_hi);
    }
    s
}

/// Safeguarded Newton for a strictly increasing function on [lo, hi];
/// monotonicity guarantees a unique root of f(t) = target.
#[allow(clippy::too_many_arguments)]
fn invert_increasing(
    f: impl Fn(f64) -> f64,
    df: impl Fn(f64) -> f64,
    target: f64,
    lo: f64,
    hi: f64,
    f_lo: f64,
    f_hi: f64,
    tol: f64,
) -> Result<f64> {
    if target < f_lo - tol || target > f_hi + tol {
        return Err(CoreError::EnergyRange {
            e: target,
            e_min: f_lo,
            e_max: f_hi,
        });
    }
    let (mut lo, mut hi) = (lo, hi);
    // Linear initial guess.
    let mut t = if f_hi > f_lo {
        lo + (hi - lo) * ((target - f_lo) / (f_hi - f_lo)).clamp(0.0, 1.0)
    } else {
        0.5 * (lo + hi)
    };
    for _ in 0..MAX_NEWTON_ITER {
        let r = f(t) - target;
        if r.abs() <= tol {
            return Ok(t);
        }
        if r > 0.0 {
            hi = t;
        } else {
            lo = t;
        }
        let d = df(t);
        let mut step = if d > 0.0 { -r / d } else { f64::NAN };
        if !step.is_finite() || t + step <= lo || t + step >= hi {
            step = 0.5 * (lo + hi) - t;
        }
        t += step;
        if step.abs() <= 1e-15 * t.abs() {
            return Ok(t);
        }
    }
    Err(CoreError::NoConvergence {
        target,
        iterations: MAX_NEWTON_ITER,
    })
}

/// Full thermodynamic description at one temperature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThermoPoint {
    pub t: f64,
    pub e_tr: f64,
    pub e_int: f64,
    pub e: f64,
    pub c_v: f64,
    pub c_p: f64,
}

/// A thermally perfect gas: gas constant plus zero or more internal-energy
/// modes. Zero modes is the monatomic limit (e_int = 0).
#[derive(Debug, Clone)]
pub struct GasModel {
    r: f64,
    modes: Vec<EnergyMode>,
    t_min: f64,
    t_max: f64,
}

impl GasModel {
    pub fn new(r: f64, modes: Vec<EnergyMode>) -> Result<Self> {
        if !(r > 0.0) {
            return Err(CoreError::InvalidModel(format!(
                "gas constant R = {r} must be positive"
            )));
        }
        let mut t_min = DEFAULT_T_MIN;
        let mut t_max = DEFAULT_T_MAX;
        for m in &modes {
            t_min = t_min.max(m.t_min);
            t_max = t_max.min(m.t_max);
        }
        if !(t_max > t_min) {
            return Err(CoreError::InvalidModel(
                "energy-mode validity ranges do not overlap".into(),
            ));
        }
        Ok(Self {
            r,
            modes,
            t_min,
            t_max,
        })
    }

    pub fn monatomic(r: f64) -> Self {
        Self::new(r, Vec::new()).expect("positive R")
    }

    /// Overrides the temperature validity range (must lie inside every
    /// mode's own range).
    pub fn with_range(mut self, t_min: f64, t_max: f64) -> Result<Self> {
        for m in &self.modes {
            if t_min < m.t_min || t_max > m.t_max {
                return Err(CoreError::InvalidModel(
                    "requested gas range exceeds a mode's validity range".into(),
                ));
            }
        }
        if !(t_min > 0.0 && t_max > t_min) {
            return Err(CoreError::InvalidModel(format!(
                "invalid temperature range [{t_min}, {t_max}]"
            )));
        }
        self.t_min = t_min;
        self.t_max = t_max;
        Ok(self)
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn modes(&self) -> &[EnergyMode] {
        &self.modes
    }

    pub fn n_modes(&self) -> usize {
        self.modes.len()
    }

    pub fn t_range(&self) -> (f64, f64) {
        (self.t_min, self.t_max)
    }

    fn check_t(&self, t: f64) -> Result<()> {
        if t < self.t_min || t > self.t_max || !t.is_finite() {
            Err(CoreError::TemperatureRange {
                t,
                t_min: self.t_min,
                t_max: self.t_max,
            })
        } else {
            Ok(())
        }
    }

    pub fn e_tr_of_t(&self, t: f64) -> f64 {
        1.5 * self.r * t
    }

    /// Total internal energy, summed over modes.
    pub fn e_int_of_t(&self, t: f64) -> Result<f64> {
        self.check_t(t)?;
        Ok(self.modes.iter().map(|m| m.e_int_unchecked(t)).sum())
    }

    /// Per-mode internal energies.
    pub fn e_int_modes_of_t(&self, t: f64) -> Result<Vec<f64>> {
        self.check_t(t)?;
        Ok(self.modes.iter().map(|m| m.e_int_unchecked(t)).collect())
    }

    /// Total specific energy e(T) = (3/2) R T + e_int(T).
    pub fn e_of_t(&self, t: f64) -> Result<f64> {
        Ok(self.e_tr_of_t(t) + self.e_int_of_t(t)?)
    }

    pub fn c_v_int(&self, t: f64) -> Result<f64> {
        self.check_t(t)?;
        Ok(self.modes.iter().map(|m| m.c_v_int_unchecked(t)).sum())
    }

    pub fn c_v(&self, t: f64) -> Result<f64> {
        Ok(1.5 * self.r + self.c_v_int(t)?)
    }

    pub fn c_p(&self, t: f64) -> Result<f64> {
        Ok(self.c_v(t)? + self.r)
    }

    /// Inverse of e(T): the unique T with (3/2) R T + e_int(T) = e.
    pub fn t_of_e(&self, e: f64) -> Result<f64> {
        let f = |t: f64| {
            1.5 * self.r * t + self.modes.iter().map(|m| m.e_int_unchecked(t)).sum::<f64>()
        };
        let df = |t: f64| {
            1.5 * self.r + self.modes.iter().map(|m| m.c_v_int_unchecked(t)).sum::<f64>()
        };
        let tol = NEWTON_TOL_REL * (e.abs() + self.r * self.t_max);
        invert_increasing(f, df, e, self.t_min, self.t_max, f(self.t_min), f(self.t_max), tol)
    }

    pub fn point(&self, t: f64) -> Result<ThermoPoint> {
        self.check_t(t)?;
        let e_int: f64 = self.modes.iter().map(|m| m.e_int_unchecked(t)).sum();
        let e_tr = self.e_tr_of_t(t);
        let c_v = 1.5 * self.r
            + self
                .modes
                .iter()
                .map(|m| m.c_v_int_unchecked(t))
                .sum::<f64>();
        Ok(ThermoPoint {
            t,
            e_tr,
            e_int,
            e: e_tr + e_int,
            c_v,
            c_p: c_v + self.r,
        })
    }
}
