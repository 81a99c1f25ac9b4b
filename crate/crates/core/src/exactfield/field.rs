use std::fmt;

use super::FieldError;

/// The arithmetic the geometry layers need from a coefficient field.
///
/// Constants are produced from an existing element (`zero_like`, `one_like`)
/// because some implementations carry runtime context, e.g. the prime of a
/// residue field.
pub trait Field: Clone + PartialEq + fmt::Debug + Send + Sync {
    fn zero_like(&self) -> Self;
    fn one_like(&self) -> Self;
    fn int_like(&self, n: i64) -> Self;
    fn is_zero(&self) -> bool;
    fn add(&self, rhs: &Self) -> Self;
    fn sub(&self, rhs: &Self) -> Self;
    fn mul(&self, rhs: &Self) -> Self;
    fn neg(&self) -> Self;
    fn inv(&self) -> Result<Self, FieldError>;

    fn div(&self, rhs: &Self) -> Result<Self, FieldError> {
        Ok(self.mul(&rhs.inv()?))
    }

    fn square(&self) -> Self {
        self.mul(self)
    }

    fn pow(&self, mut e: u64) -> Self {
        let mut base = self.clone();
        let mut acc = self.one_like();
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(&base);
            }
            e >>= 1;
            if e > 0 {
                base = base.square();
            }
        }
        acc
    }
}

/// Whether two coordinate vectors span the same line (all 2x2 minors vanish).
///
/// Zero vectors are proportional only to each other.
pub fn proportional<F: Field>(a: &[F], b: &[F]) -> bool {
    assert_eq!(a.len(), b.len(), "proportionality of vectors of different length");
    let az = a.iter().all(Field::is_zero);
    let bz = b.iter().all(Field::is_zero);
    if az || bz {
        return az && bz;
    }
    // Compare everything against a pivot where both are nonzero; fall back to
    // the full minor check when the supports differ.
    let Some(k) = a.iter().position(|x| !x.is_zero()) else {
        return false;
    };
    if b[k].is_zero() {
        return false;
    }
    (0..a.len()).all(|i| a[i].mul(&b[k]) == b[i].mul(&a[k]))
}

/// The scalar `s` with `b = s * a`, if the vectors are proportional and nonzero.
pub fn proportionality_scalar<F: Field>(a: &[F], b: &[F]) -> Option<F> {
    if !proportional(a, b) {
        return None;
    }
    let k = a.iter().position(|x| !x.is_zero())?;
    b[k].div(&a[k]).ok()
}
