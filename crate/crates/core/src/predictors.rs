//! Continuum predictor hierarchy and the Sinclair comparison series.
//!
//! All predictors are built from the complex square-root map
//! `omega(x) = sqrt(r) (cos(theta/2), sin(theta/2))` with
//! `theta = atan2(x2, x1)` in `(-pi, pi)`, so the branch cut lies exactly on
//! the crack line and the fields jump across it as the physics requires:
//!
//! - order 0: `u_hat0 = K omega_2`, the linear-elastic K-field;
//! - order 1 adds `u_hat1`, the anharmonic log corrector with exact prefactor
//!   `-(K^3 / 64) phi''''(0)`;
//! - order 2 adds `u_hat2 = C2 omega_2(x) / |x|`, the multipole term whose
//!   amplitude `C2` comes from calibration.
//!
//! The Sinclair series `sum_j c_j r^(1/2 - j) sin((1 - 2j) theta / 2)` spans
//! the separable half-integer harmonics; it is kept for the incompleteness
//! experiment, which probes what that family cannot represent (the log term).

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::lattice::{LatticeDomain, ScalarField};
use crate::math;

/// Predictor selection: stress intensity, multipole amplitude, anharmonic
/// strength, and how many correction orders to stack.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PredictorSpec {
    /// Rescaled stress intensity factor `K >= 0`; the loading parameter.
    pub k: f64,
    /// Amplitude of the multipole term, active at order 2. Zero until
    /// calibrated or supplied.
    pub c2: f64,
    /// Fourth derivative of the pair potential at zero; feeds `u_hat1`.
    pub phi4_at_0: f64,
    /// Expansion order: 0, 1 or 2.
    pub order: u8,
}

impl Default for PredictorSpec {
    fn default() -> Self {
        Self {
            k: 0.4,
            c2: 0.0,
            phi4_at_0: -18.0,
            order: 0,
        }
    }
}

impl PredictorSpec {
    /// Spec with a given loading and order, default potential anharmonicity.
    pub fn new(k: f64, order: u8) -> Self {
        Self {
            k,
            order,
            ..Self::default()
        }
    }

    /// Same spec with the multipole amplitude set.
    pub fn with_c2(self, c2: f64) -> Self {
        Self { c2, ..self }
    }

    /// The `u_hat1` prefactor, `-(K^3 / 64) phi''''(0)`, exact by
    /// construction.
    pub fn u_hat1_prefactor(&self) -> f64 {
        -(self.k * self.k * self.k / 64.0) * self.phi4_at_0
    }

    /// Predictor value at a physical point: the sum of the first
    /// `order + 1` terms of the hierarchy.
    pub fn eval(&self, x: [f64; 2]) -> f64 {
        let mut v = u_hat0(x, self.k);
        if self.order >= 1 {
            v += u_hat1(x, self.k, self.phi4_at_0);
        }
        if self.order >= 2 {
            v += u_hat2(x, self.c2);
        }
        v
    }
}

/// The square-root conformal map `omega(x)`, branch cut on the crack line.
#[inline]
pub fn omega(x: [f64; 2]) -> [f64; 2] {
    let r = math::hypot(x[0], x[1]);
    let th = math::atan2(x[1], x[0]);
    let s = math::sqrt(r);
    [s * math::cos(0.5 * th), s * math::sin(0.5 * th)]
}

/// Continuum K-field, `K sqrt(r) sin(theta/2)`.
#[inline]
pub fn u_hat0(x: [f64; 2], k: f64) -> f64 {
    k * omega(x)[1]
}

/// Anharmonic log corrector:
/// `-(K^3/64) phi''''(0) r^{-1/2} (log(r) sin(theta/2) + sin(5 theta/2)/6)`.
///
/// Evaluated as written for every `r > 0`; the small-`r` blowup is physical
/// and absorbed by the corrector, not regularized here.
#[inline]
pub fn u_hat1(x: [f64; 2], k: f64, phi4_at_0: f64) -> f64 {
    let r = math::hypot(x[0], x[1]);
    let th = math::atan2(x[1], x[0]);
    let pref = -(k * k * k / 64.0) * phi4_at_0;
    pref / math::sqrt(r) * (math::ln(r) * math::sin(0.5 * th) + math::sin(2.5 * th) / 6.0)
}

/// Multipole term `C2 omega_2(x) / |x| = C2 r^{-1/2} sin(theta/2)`.
#[inline]
pub fn u_hat2(x: [f64; 2], c2: f64) -> f64 {
    let r = math::hypot(x[0], x[1]);
    c2 * omega(x)[1] / r
}

/// Truncated Sinclair series: coefficients `c_j` for
/// `sum_j c_j r^{1/2 - j} sin((1 - 2j) theta / 2)`, `j = 0..=N`.
#[derive(Debug, Clone, PartialEq)]
pub struct SinclairSeries {
    pub coefficients: Vec<f64>,
}

impl SinclairSeries {
    pub fn new(coefficients: Vec<f64>) -> Self {
        Self { coefficients }
    }

    /// Series truncation order `N` (index of the last coefficient).
    pub fn order(&self) -> usize {
        self.coefficients.len().saturating_sub(1)
    }
}

/// Evaluates the truncated Sinclair series at a physical point.
/// Fails at the origin where the half powers are singular.
pub fn sinclair_eval(x: [f64; 2], series: &SinclairSeries) -> Result<f64> {
    let r = math::hypot(x[0], x[1]);
    if r == 0.0 {
        return Err(Error::OriginSingular);
    }
    let th = math::atan2(x[1], x[0]);
    let mut v = 0.0;
    for (j, &c) in series.coefficients.iter().enumerate() {
        let j = j as f64;
        v += c * math::powf(r, 0.5 - j) * math::sin((1.0 - 2.0 * j) * 0.5 * th);
    }
    Ok(v)
}

/// Predictor values over a whole domain.
pub fn predictor_field(spec: &PredictorSpec, dom: &LatticeDomain) -> ScalarField {
    dom.sites().iter().map(|m| spec.eval(m.x())).collect()
}
