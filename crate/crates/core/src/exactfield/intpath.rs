//! Integer fast path for multiplication in towers whose moduli all have
//! integer coefficients.
//!
//! Operands are flattened to one common denominator and an integer vector
//! indexed by the monomials `ζ^i α^j …`; the product is formed and reduced
//! over `Z`, first with checked `i128` arithmetic and, on overflow, with
//! `BigInt`. Only the final rebuild touches rationals.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};

use super::{FieldElement, Rational};

/// Flat integer form of a level's modulus and of every level below it.
#[derive(Debug)]
pub(crate) struct IntModuli {
    /// Degrees of levels `1..=depth`.
    degrees: Vec<usize>,
    /// `lows_big[k][i]`: coefficient `i` of the modulus of level `k + 1`,
    /// flattened over level `k`.
    lows_big: Vec<Vec<Vec<BigInt>>>,
    lows_small: Vec<Vec<Vec<i128>>>,
}

impl IntModuli {
    /// `parent` describes the levels below; `low` are the non-leading modulus
    /// coefficients. Returns `None` when some coefficient is not integral.
    pub(crate) fn extend(parent: Option<&IntModuli>, low: &[FieldElement]) -> Option<IntModuli> {
        let (mut degrees, mut lows_big) = match parent {
            Some(p) => (p.degrees.clone(), p.lows_big.clone()),
            None => (Vec::new(), Vec::new()),
        };
        let inner = degrees.iter().product::<usize>();
        let mut flat = Vec::with_capacity(low.len());
        for c in low {
            let (nums, den) = flatten(c, &degrees, inner);
            if !den.is_one() {
                return None;
            }
            flat.push(nums);
        }
        degrees.push(low.len());
        lows_big.push(flat);
        let lows_small = lows_big
            .iter()
            .map(|lvl| {
                lvl.iter()
                    .map(|v| v.iter().map(|x| x.to_i128()).collect::<Option<Vec<_>>>())
                    .collect::<Option<Vec<_>>>()
            })
            .collect::<Option<Vec<_>>>()
            .unwrap_or_default();
        Some(IntModuli { degrees, lows_big, lows_small })
    }

    fn size(&self) -> usize {
        self.degrees.iter().product()
    }

    /// Product of two elements of the top level as flat numerators over a
    /// common denominator.
    pub(crate) fn mul(&self, a: &FieldElement, b: &FieldElement) -> (Vec<BigInt>, BigInt) {
        let n = self.size();
        let (an, ad) = flatten(a, &self.degrees, n);
        let (bn, bd) = flatten(b, &self.degrees, n);
        let den = ad * bd;
        let depth = self.degrees.len();
        if !self.lows_small.is_empty() {
            if let (Some(x), Some(y)) = (to_small(&an), to_small(&bn)) {
                if let Some(p) = mul_reduce(&self.degrees, &self.lows_small, depth, &x, &y) {
                    return (p.into_iter().map(BigInt::from).collect(), den);
                }
            }
        }
        let p = mul_reduce(&self.degrees, &self.lows_big, depth, &an, &bn).expect("bigint arithmetic cannot overflow");
        (p, den)
    }

}

fn to_small(v: &[BigInt]) -> Option<Vec<i128>> {
    v.iter().map(ToPrimitive::to_i128).collect()
}

/// Flatten `e` into `size` integer numerators over a common denominator.
/// `degrees` are the level degrees the flat index runs over.
pub(crate) fn flatten(e: &FieldElement, degrees: &[usize], size: usize) -> (Vec<BigInt>, BigInt) {
    let mut slots: Vec<Option<&Rational>> = vec![None; size];
    place(e, degrees, 0, &mut slots);
    let mut den = BigInt::one();
    for r in slots.iter().flatten() {
        if !r.denom().is_one() {
            den = den.lcm(r.denom());
        }
    }
    let nums = slots
        .iter()
        .map(|s| match s {
            None => <BigInt as Zero>::zero(),
            Some(r) if r.denom().is_one() => r.numer() * &den,
            Some(r) => r.numer() * (&den / r.denom()),
        })
        .collect();
    (nums, den)
}

fn place<'a>(e: &'a FieldElement, degrees: &[usize], offset: usize, slots: &mut [Option<&'a Rational>]) {
    match e {
        FieldElement::Rational(r) => {
            if !r.is_zero() {
                slots[offset] = Some(r);
            }
        }
        FieldElement::Algebraic(a) => {
            // The element's own level fixes how many inner levels it spans.
            let depth = a.level().depth();
            let stride: usize = degrees[..depth - 1].iter().product();
            for (i, c) in a.coeffs().iter().enumerate() {
                place(c, degrees, offset + i * stride, slots);
            }
        }
    }
}

trait Ring: Clone + Sized {
    fn zero() -> Self;
    fn is_zero(&self) -> bool;
    /// `acc += a * b`
    fn add_mul(acc: &mut Self, a: &Self, b: &Self) -> Option<()>;
    /// `acc -= a * b`
    fn sub_mul(acc: &mut Self, a: &Self, b: &Self) -> Option<()>;
    fn add_to(acc: &mut Self, a: &Self) -> Option<()>;
    fn sub_from(acc: &mut Self, a: &Self) -> Option<()>;
}

impl Ring for i128 {
    fn zero() -> Self {
        0
    }
    fn is_zero(&self) -> bool {
        *self == 0
    }
    fn add_mul(acc: &mut Self, a: &Self, b: &Self) -> Option<()> {
        *acc = acc.checked_add(a.checked_mul(*b)?)?;
        Some(())
    }
    fn sub_mul(acc: &mut Self, a: &Self, b: &Self) -> Option<()> {
        *acc = acc.checked_sub(a.checked_mul(*b)?)?;
        Some(())
    }
    fn add_to(acc: &mut Self, a: &Self) -> Option<()> {
        *acc = acc.checked_add(*a)?;
        Some(())
    }
    fn sub_from(acc: &mut Self, a: &Self) -> Option<()> {
        *acc = acc.checked_sub(*a)?;
        Some(())
    }
}

impl Ring for BigInt {
    fn zero() -> Self {
        Zero::zero()
    }
    fn is_zero(&self) -> bool {
        Zero::is_zero(self)
    }
    fn add_mul(acc: &mut Self, a: &Self, b: &Self) -> Option<()> {
        *acc += a * b;
        Some(())
    }
    fn sub_mul(acc: &mut Self, a: &Self, b: &Self) -> Option<()> {
        *acc -= a * b;
        Some(())
    }
    fn add_to(acc: &mut Self, a: &Self) -> Option<()> {
        *acc += a;
        Some(())
    }
    fn sub_from(acc: &mut Self, a: &Self) -> Option<()> {
        *acc -= a;
        Some(())
    }
}

/// Reduced product of flat vectors at `depth` (`1..=degrees.len()`).
fn mul_reduce<T: Ring>(degrees: &[usize], lows: &[Vec<Vec<T>>], depth: usize, a: &[T], b: &[T]) -> Option<Vec<T>> {
    if depth == 0 {
        let mut acc = T::zero();
        T::add_mul(&mut acc, &a[0], &b[0])?;
        return Some(vec![acc]);
    }
    let d = degrees[depth - 1];
    let s: usize = degrees[..depth - 1].iter().product();
    let mut rows = vec![T::zero(); (2 * d - 1) * s];
    let chunk_zero = |v: &[T]| v.iter().all(Ring::is_zero);
    for i in 0..d {
        let ai = &a[i * s..(i + 1) * s];
        if chunk_zero(ai) {
            continue;
        }
        for j in 0..d {
            let bj = &b[j * s..(j + 1) * s];
            if chunk_zero(bj) {
                continue;
            }
            let row = &mut rows[(i + j) * s..(i + j + 1) * s];
            if s == 1 {
                T::add_mul(&mut row[0], &ai[0], &bj[0])?;
            } else {
                let p = mul_reduce(degrees, lows, depth - 1, ai, bj)?;
                for (r, x) in row.iter_mut().zip(&p) {
                    T::add_to(r, x)?;
                }
            }
        }
    }
    // t^d = -(m_0 + … + m_{d-1} t^{d-1})
    let m = &lows[depth - 1];
    for k in (d..2 * d - 1).rev() {
        let top: Vec<T> = rows[k * s..(k + 1) * s].to_vec();
        if chunk_zero(&top) {
            continue;
        }
        for (i, mi) in m.iter().enumerate() {
            if chunk_zero(mi) {
                continue;
            }
            let dst = &mut rows[(k - d + i) * s..(k - d + i + 1) * s];
            if s == 1 {
                T::sub_mul(&mut dst[0], &top[0], &mi[0])?;
            } else {
                let p = mul_reduce(degrees, lows, depth - 1, &top, mi)?;
                for (r, x) in dst.iter_mut().zip(&p) {
                    T::sub_from(r, x)?;
                }
            }
        }
    }
    rows.truncate(d * s);
    Some(rows)
}
