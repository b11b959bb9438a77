//! Linear drive-line crosstalk at one frequency and its inversion.

use crate::error::{Error, Result};
use crate::qudit::{CMatrix, CVector};

/// Largest condition number accepted by [`CrosstalkMatrix::compensate`].
pub const MAX_CONDITION: f64 = 1e8;

/// `C(ω)` maps drive-line inputs to on-chip fields at the frequency `ω`.
#[derive(Clone, Debug, PartialEq)]
pub struct CrosstalkMatrix {
    /// rad/s
    pub omega: f64,
    c: CMatrix,
}

impl CrosstalkMatrix {
    pub fn new(omega: f64, c: CMatrix) -> Result<Self> {
        if !c.is_square() {
            return Err(Error::Dimension(format!("crosstalk matrix is {}x{}", c.nrows(), c.ncols())));
        }
        Ok(Self { omega, c })
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.c
    }

    pub fn condition_number(&self) -> f64 {
        let sv = self.c.singular_values();
        let (max, min) = (sv.max(), sv.min());
        if min == 0.0 {
            f64::INFINITY
        } else {
            max / min
        }
    }

    /// Drive-line inputs `C⁻¹·desired` producing the `desired` fields.
    pub fn compensate(&self, desired: &CVector) -> Result<CVector> {
        if desired.len() != self.c.nrows() {
            return Err(Error::Dimension(format!("{} fields for {} lines", desired.len(), self.c.nrows())));
        }
        let condition = self.condition_number();
        if !(condition <= MAX_CONDITION) {
            return Err(Error::Singular { condition });
        }
        self.c.clone().lu().solve(desired).ok_or(Error::Singular { condition })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qudit::C64;

    #[test]
    fn identity_passes_through() {
        let x = CrosstalkMatrix::new(1.0, CMatrix::identity(5, 5)).unwrap();
        let v = CVector::from_fn(5, |r, _| C64::new(r as f64, 1.0));
        assert_eq!(x.compensate(&v).unwrap(), v);
    }

    #[test]
    fn unit_field_gives_inverse_column() {
        let c = CMatrix::from_fn(5, 5, |r, k| if r == k { C64::new(1.0, 0.0) } else { C64::new(0.05 * (r + 2 * k) as f64, -0.02) });
        let x = CrosstalkMatrix::new(2.0, c.clone()).unwrap();
        let inv = c.try_inverse().unwrap();
        let mut e = CVector::zeros(5);
        e[3] = C64::new(1.0, 0.0);
        let i = x.compensate(&e).unwrap();
        assert!((i - inv.column(3)).norm() < 1e-12);
    }

    #[test]
    fn rejects_ill_conditioned() {
        let mut c = CMatrix::identity(5, 5);
        c[(4, 4)] = C64::new(1e-9, 0.0);
        let x = CrosstalkMatrix::new(0.0, c).unwrap();
        assert!(matches!(x.compensate(&CVector::zeros(5)), Err(Error::Singular { .. })));
    }
}
