use std::ops::{Add, Div, Mul, Neg, Sub};

use num_complex::Complex64;

/// A complex value together with its derivative with respect to `κ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DualComplex {
    pub value: Complex64,
    pub d_kappa: Complex64,
}

impl DualComplex {
    pub fn new(value: Complex64, d_kappa: Complex64) -> Self {
        Self { value, d_kappa }
    }

    /// A quantity that does not depend on `κ`.
    pub fn constant(value: Complex64) -> Self {
        Self { value, d_kappa: Complex64::new(0.0, 0.0) }
    }

    /// `κ` itself.
    pub fn variable(value: Complex64) -> Self {
        Self { value, d_kappa: Complex64::new(1.0, 0.0) }
    }

    pub fn ln(self) -> Self {
        Self { value: self.value.ln(), d_kappa: self.d_kappa / self.value }
    }

    pub fn exp(self) -> Self {
        let e = self.value.exp();
        Self { value: e, d_kappa: self.d_kappa * e }
    }
}

impl Add for DualComplex {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Self { value: self.value + rhs.value, d_kappa: self.d_kappa + rhs.d_kappa }
    }
}

impl Sub for DualComplex {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        Self { value: self.value - rhs.value, d_kappa: self.d_kappa - rhs.d_kappa }
    }
}

impl Mul for DualComplex {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        Self {
            value: self.value * rhs.value,
            d_kappa: self.d_kappa * rhs.value + self.value * rhs.d_kappa,
        }
    }
}

impl Div for DualComplex {
    type Output = Self;
    fn div(self, rhs: Self) -> Self {
        let q = self.value / rhs.value;
        Self { value: q, d_kappa: (self.d_kappa - q * rhs.d_kappa) / rhs.value }
    }
}

impl Neg for DualComplex {
    type Output = Self;
    fn neg(self) -> Self {
        Self { value: -self.value, d_kappa: -self.d_kappa }
    }
}
