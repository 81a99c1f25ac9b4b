//! Complex floating-point images of tower elements with a running error bound.

use num_complex::Complex64;
use num_traits::{ToPrimitive, Zero};

use super::{Field, FieldElement, FieldError};

/// `value` is within `error` of the exact complex image.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Embedded {
    pub value: Complex64,
    pub error: f64,
}

const U: f64 = f64::EPSILON;

impl std::ops::Add for Embedded {
    type Output = Embedded;

    fn add(self, rhs: Embedded) -> Embedded {
        let value = self.value + rhs.value;
        Embedded { value, error: self.error + rhs.error + U * value.norm() }
    }
}

impl std::ops::Mul for Embedded {
    type Output = Embedded;

    fn mul(self, rhs: Embedded) -> Embedded {
        let value = self.value * rhs.value;
        let error = self.value.norm() * rhs.error
            + rhs.value.norm() * self.error
            + self.error * rhs.error
            + 4.0 * U * value.norm();
        Embedded { value, error }
    }
}

impl Embedded {
    pub fn exact(value: Complex64) -> Self {
        Embedded { value, error: 0.0 }
    }

    /// Number of correct bits after the binary point the bound guarantees.
    pub fn bits(&self) -> f64 {
        if self.error == 0.0 {
            f64::INFINITY
        } else {
            -self.error.log2()
        }
    }
}

/// Embed without a precision check.
pub fn embed_unchecked(a: &FieldElement) -> Embedded {
    match a {
        FieldElement::Rational(r) => {
            let v = r.to_f64().unwrap_or(f64::NAN);
            Embedded { value: Complex64::new(v, 0.0), error: U * v.abs() }
        }
        FieldElement::Algebraic(e) => {
            let root = e.level().embedding();
            let x = Embedded { value: root.value, error: root.error };
            let mut acc = Embedded::exact(Complex64::zero());
            for c in e.coeffs().iter().rev() {
                acc = acc * x + embed_unchecked(c);
            }
            acc
        }
    }
}

/// Complex image of `a` under the tower's chosen embeddings, guaranteed to
/// `precision` bits of absolute accuracy.
pub fn embed_complex(a: &FieldElement, precision: u32) -> Result<Embedded, FieldError> {
    let e = embed_unchecked(a);
    if !e.value.norm().is_finite() || e.bits() < precision as f64 {
        return Err(FieldError::PrecisionExhausted { requested: precision, achieved: e.bits() });
    }
    Ok(e)
}

/// Floating-point complex numbers as a [`Field`], for plotting and
/// finite-difference checks. Zero tests are exact, so callers decide their
/// own tolerances.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Approx(pub Complex64);

impl Approx {
    pub fn of(a: &FieldElement) -> Approx {
        Approx(embed_unchecked(a).value)
    }
}

impl Field for Approx {
    fn zero_like(&self) -> Self {
        Approx(Complex64::zero())
    }
    fn one_like(&self) -> Self {
        Approx(Complex64::new(1.0, 0.0))
    }
    fn int_like(&self, n: i64) -> Self {
        Approx(Complex64::new(n as f64, 0.0))
    }
    fn is_zero(&self) -> bool {
        self.0.is_zero()
    }
    fn add(&self, rhs: &Self) -> Self {
        Approx(self.0 + rhs.0)
    }
    fn sub(&self, rhs: &Self) -> Self {
        Approx(self.0 - rhs.0)
    }
    fn mul(&self, rhs: &Self) -> Self {
        Approx(self.0 * rhs.0)
    }
    fn neg(&self) -> Self {
        Approx(-self.0)
    }
    fn inv(&self) -> Result<Self, FieldError> {
        if self.0.is_zero() {
            Err(FieldError::DivisionByZero)
        } else {
            Ok(Approx(self.0.inv()))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exactfield::NumberFieldTower;

    #[test]
    fn zeta_embeds_to_primitive_root() {
        let t = NumberFieldTower::cyclotomic7();
        let z = embed_complex(&t.generator(1), 40).unwrap();
        assert!((z.value - Complex64::new(0.623_489_801_858_733_5, 0.781_831_482_468_029_8)).norm() < 1e-15);
    }

    #[test]
    fn zero_embeds_exactly() {
        let z = embed_complex(&FieldElement::zero(), 50).unwrap();
        assert_eq!(z.value, Complex64::zero());
    }

    #[test]
    fn asking_for_too_many_bits_fails() {
        let t = NumberFieldTower::cyclotomic7();
        assert!(matches!(
            embed_complex(&t.generator(1), 200),
            Err(FieldError::PrecisionExhausted { requested: 200, .. })
        ));
    }
}
