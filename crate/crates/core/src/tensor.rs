//! Symmetric second-order tensors in three dimensions.
//!
//! Each shear component is stored once; the double contraction counts the
//! off-diagonal terms twice, so `A:B` is the full `A_ij B_ij` sum.

use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative tolerance on the trace for a tensor to be treated as deviatoric.
pub const DEVIATORIC_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SymTensor3 {
    pub xx: f64,
    pub yy: f64,
    pub zz: f64,
    pub xy: f64,
    pub xz: f64,
    pub yz: f64,
}

impl SymTensor3 {
    pub const ZERO: SymTensor3 = SymTensor3::new(0.0, 0.0, 0.0, 0.0, 0.0, 0.0);
    pub const IDENTITY: SymTensor3 = SymTensor3::new(1.0, 1.0, 1.0, 0.0, 0.0, 0.0);

    pub const fn new(xx: f64, yy: f64, zz: f64, xy: f64, xz: f64, yz: f64) -> Self {
        SymTensor3 { xx, yy, zz, xy, xz, yz }
    }

    /// Components in `(xx, yy, zz, xy, xz, yz)` order.
    pub fn components(&self) -> [f64; 6] {
        [self.xx, self.yy, self.zz, self.xy, self.xz, self.yz]
    }

    pub fn from_components(c: [f64; 6]) -> Self {
        SymTensor3::new(c[0], c[1], c[2], c[3], c[4], c[5])
    }

    pub fn trace(&self) -> f64 {
        self.xx + self.yy + self.zz
    }

    /// Double contraction `A:B`.
    pub fn ddot(&self, other: &SymTensor3) -> f64 {
        self.xx * other.xx
            + self.yy * other.yy
            + self.zz * other.zz
            + 2.0 * (self.xy * other.xy + self.xz * other.xz + self.yz * other.yz)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.ddot(self).sqrt()
    }

    pub fn deviatoric(&self) -> SymTensor3 {
        let m = self.trace() / 3.0;
        SymTensor3::new(self.xx - m, self.yy - m, self.zz - m, self.xy, self.xz, self.yz)
    }

    pub fn is_deviatoric(&self) -> bool {
        self.trace().abs() <= DEVIATORIC_TOLERANCE * self.frobenius_norm()
    }

    /// `sqrt(3/2 T:T)` without checking that `T` is deviatoric.
    pub fn equivalent_norm(&self) -> f64 {
        (1.5 * self.ddot(self)).sqrt()
    }
}

/// Von Mises equivalent of a deviatoric tensor.
pub fn von_mises(dev: &SymTensor3) -> Result<f64> {
    if !dev.is_deviatoric() {
        return Err(Error::Precondition(format!(
            "tensor is not deviatoric: trace {:e} vs norm {:e}",
            dev.trace(),
            dev.frobenius_norm()
        )));
    }
    Ok(dev.equivalent_norm())
}

impl Add for SymTensor3 {
    type Output = SymTensor3;
    fn add(self, o: SymTensor3) -> SymTensor3 {
        SymTensor3::new(
            self.xx + o.xx,
            self.yy + o.yy,
            self.zz + o.zz,
            self.xy + o.xy,
            self.xz + o.xz,
            self.yz + o.yz,
        )
    }
}

impl AddAssign for SymTensor3 {
    fn add_assign(&mut self, o: SymTensor3) {
        *self = *self + o;
    }
}

impl Sub for SymTensor3 {
    type Output = SymTensor3;
    fn sub(self, o: SymTensor3) -> SymTensor3 {
        SymTensor3::new(
            self.xx - o.xx,
            self.yy - o.yy,
            self.zz - o.zz,
            self.xy - o.xy,
            self.xz - o.xz,
            self.yz - o.yz,
        )
    }
}

impl Neg for SymTensor3 {
    type Output = SymTensor3;
    fn neg(self) -> SymTensor3 {
        self * -1.0
    }
}

impl Mul<f64> for SymTensor3 {
    type Output = SymTensor3;
    fn mul(self, a: f64) -> SymTensor3 {
        SymTensor3::new(
            a * self.xx,
            a * self.yy,
            a * self.zz,
            a * self.xy,
            a * self.xz,
            a * self.yz,
        )
    }
}

impl Mul<SymTensor3> for f64 {
    type Output = SymTensor3;
    fn mul(self, t: SymTensor3) -> SymTensor3 {
        t * self
    }
}
