//! Asymptotic transmon formulas: charge dispersion and anharmonicity.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Josephson and charging energies in the same (angular frequency) units.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TransmonParams {
    pub ej: f64,
    pub ec: f64,
}

impl TransmonParams {
    pub fn new(ej: f64, ec: f64) -> Result<Self> {
        if !(ej > 0.0 && ec > 0.0 && ej.is_finite() && ec.is_finite()) {
            return Err(Error::InvalidArgument(format!("E_J = {ej}, E_C = {ec} must be positive")));
        }
        Ok(Self { ej, ec })
    }

    pub fn from_ratio(ratio: f64, ec: f64) -> Result<Self> {
        Self::new(ratio * ec, ec)
    }

    pub fn ratio(&self) -> f64 {
        self.ej / self.ec
    }
}

/// `ε_m ≈ (-1)^m E_C 2^{4m+5}/m! √(2/π) (E_J/2E_C)^{m/2+3/4} e^{-√(8E_J/E_C)}`.
pub fn charge_dispersion(m: u32, p: &TransmonParams) -> f64 {
    let sign = if m.is_multiple_of(2) { 1.0 } else { -1.0 };
    let fact: f64 = (1..=m).map(f64::from).product();
    let x = p.ej / (2.0 * p.ec);
    sign * p.ec * 2f64.powi(4 * m as i32 + 5) / fact
        * (2.0 / PI).sqrt()
        * x.powf(m as f64 / 2.0 + 0.75)
        * (-(8.0 * p.ratio()).sqrt()).exp()
}

/// `α_r ≈ -(8 E_J/E_C)^{-1/2}`.
pub fn relative_anharmonicity(p: &TransmonParams) -> f64 {
    -1.0 / (8.0 * p.ratio()).sqrt()
}
