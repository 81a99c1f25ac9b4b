//! Specialization of tower elements to a prime field `F_p`.
//!
//! A [`PrimeSpec`] fixes a prime `p` and a root of every level modulus in
//! `F_p`; together they define a ring homomorphism from the tower to `F_p`.
//! Rank can only drop under such a map, so a full-rank image certifies full
//! rank over the tower.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::ToPrimitive;

use super::{DensePolynomial, Field, FieldElement, FieldError, NumberFieldTower};

/// Element of `Z/pZ`, `p` an odd prime below 2^63.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct Fp {
    value: u64,
    p: u64,
}

impl Fp {
    pub fn new(value: i128, p: u64) -> Self {
        Fp { value: value.rem_euclid(p as i128) as u64, p }
    }

    pub fn value(&self) -> u64 {
        self.value
    }

    pub fn prime(&self) -> u64 {
        self.p
    }

    fn from_bigint(n: &BigInt, p: u64) -> Self {
        let r = n.mod_floor(&BigInt::from(p));
        Fp { value: r.to_u64().expect("residue fits in u64"), p }
    }
}

impl std::fmt::Debug for Fp {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} (mod {})", self.value, self.p)
    }
}

impl Field for Fp {
    fn zero_like(&self) -> Self {
        Fp { value: 0, p: self.p }
    }
    fn one_like(&self) -> Self {
        Fp { value: 1, p: self.p }
    }
    fn int_like(&self, n: i64) -> Self {
        Fp::new(n as i128, self.p)
    }
    fn is_zero(&self) -> bool {
        self.value == 0
    }
    fn add(&self, rhs: &Self) -> Self {
        debug_assert_eq!(self.p, rhs.p);
        let s = self.value as u128 + rhs.value as u128;
        Fp { value: (s % self.p as u128) as u64, p: self.p }
    }
    fn sub(&self, rhs: &Self) -> Self {
        debug_assert_eq!(self.p, rhs.p);
        let s = self.value as u128 + self.p as u128 - rhs.value as u128;
        Fp { value: (s % self.p as u128) as u64, p: self.p }
    }
    fn mul(&self, rhs: &Self) -> Self {
        debug_assert_eq!(self.p, rhs.p);
        let s = self.value as u128 * rhs.value as u128;
        Fp { value: (s % self.p as u128) as u64, p: self.p }
    }
    fn neg(&self) -> Self {
        Fp { value: (self.p - self.value) % self.p, p: self.p }
    }
    fn inv(&self) -> Result<Self, FieldError> {
        if self.value == 0 {
            return Err(FieldError::DivisionByZero);
        }
        Ok(self.pow(self.p - 2))
    }
}

/// A prime together with the images chosen for each tower generator.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PrimeSpec {
    pub p: u64,
    /// `roots[k]` is the image of the generator of level `k + 1`.
    pub roots: Vec<u64>,
}

pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for q in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        if n.is_multiple_of(q) {
            return n == q;
        }
    }
    // Deterministic Miller-Rabin for 64-bit inputs.
    let (mut d, mut s) = (n - 1, 0);
    while d % 2 == 0 {
        d /= 2;
        s += 1;
    }
    let mulmod = |a: u64, b: u64| (a as u128 * b as u128 % n as u128) as u64;
    let powmod = |mut a: u64, mut e: u64| {
        let mut r = 1u64;
        while e > 0 {
            if e & 1 == 1 {
                r = mulmod(r, a);
            }
            a = mulmod(a, a);
            e >>= 1;
        }
        r
    };
    'witness: for a in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        let mut x = powmod(a, d);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mulmod(x, x);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

impl PrimeSpec {
    /// Use exactly `p`; fails with `BadPrime` if `p` is unusable.
    pub fn for_prime(tower: &NumberFieldTower, p: u64) -> Result<Self, FieldError> {
        if !(3..1 << 62).contains(&p) || !is_prime(p) {
            return Err(FieldError::BadPrime { p, reason: "not an odd prime below 2^62".into() });
        }
        let mut spec = PrimeSpec { p, roots: Vec::new() };
        for level in tower.levels() {
            let coeffs = level
                .modulus()
                .coeffs()
                .iter()
                .map(|c| spec.reduce(c))
                .collect::<Result<Vec<_>, _>>()?;
            let roots = roots_mod_p(&DensePolynomial::new(coeffs.clone()), p)?;
            if roots.is_empty() {
                return Err(FieldError::BadPrime {
                    p,
                    reason: format!("modulus of level {} has no root mod p", level.depth()),
                });
            }
            // a repeated root means p ramifies and the reduction collapses
            let Some(&r) = roots.iter().find(|&&r| !derivative_at(&coeffs, r, p).is_zero()) else {
                return Err(FieldError::BadPrime {
                    p,
                    reason: format!("modulus of level {} has only repeated roots mod p", level.depth()),
                });
            };
            spec.roots.push(r);
        }
        Ok(spec)
    }

    /// First usable prime `>= start`.
    pub fn search(tower: &NumberFieldTower, start: u64) -> Result<Self, FieldError> {
        let mut p = start.max(3);
        loop {
            if p >= 1 << 62 {
                return Err(FieldError::BadPrime { p, reason: "search exhausted".into() });
            }
            if is_prime(p) {
                if let Ok(spec) = Self::for_prime(tower, p) {
                    return Ok(spec);
                }
            }
            p += 1;
        }
    }

    pub fn reduce(&self, a: &FieldElement) -> Result<Fp, FieldError> {
        match a {
            FieldElement::Rational(r) => {
                let den = Fp::from_bigint(r.denom(), self.p);
                if den.is_zero() {
                    return Err(FieldError::BadPrime { p: self.p, reason: format!("denominator {} vanishes", r.denom()) });
                }
                Ok(Fp::from_bigint(r.numer(), self.p).mul(&den.inv()?))
            }
            FieldElement::Algebraic(e) => {
                let depth = e.level().depth();
                let root = *self.roots.get(depth - 1).ok_or_else(|| FieldError::BadPrime {
                    p: self.p,
                    reason: format!("no root chosen for level {depth}"),
                })?;
                let x = Fp { value: root, p: self.p };
                let mut acc = x.zero_like();
                for c in e.coeffs().iter().rev() {
                    acc = acc.mul(&x).add(&self.reduce(c)?);
                }
                Ok(acc)
            }
        }
    }
}

/// All roots of `f` in `F_p`, ascending. Uses `gcd(f, t^p - t)` and
/// equal-degree splitting with deterministic shifts.
fn derivative_at(coeffs: &[Fp], r: u64, p: u64) -> Fp {
    let x = Fp::new(r as i128, p);
    let mut acc = Fp::new(0, p);
    for (k, c) in coeffs.iter().enumerate().skip(1).rev() {
        acc = acc.mul(&x).add(&Fp::new(k as i128, p).mul(c));
    }
    acc
}

pub fn roots_mod_p(f: &DensePolynomial<Fp>, p: u64) -> Result<Vec<u64>, FieldError> {
    if f.is_zero() {
        return Err(FieldError::BadPrime { p, reason: "modulus vanishes mod p".into() });
    }
    let one = Fp { value: 1, p };
    let t = DensePolynomial::new(vec![one.zero_like(), one]);
    let f = f.monic()?;
    let tp = t.pow_mod(p as u128, &f)?;
    let g = f.gcd(&tp.sub(&t))?;
    let mut roots = Vec::new();
    split(&g, p, 1, &mut roots)?;
    roots.sort_unstable();
    roots.dedup();
    Ok(roots)
}

fn split(g: &DensePolynomial<Fp>, p: u64, mut shift: u64, out: &mut Vec<u64>) -> Result<(), FieldError> {
    match g.degree() {
        None | Some(0) => return Ok(()),
        Some(1) => {
            let c = g.coeffs();
            let r = c[0].neg().mul(&c[1].inv()?);
            out.push(r.value);
            return Ok(());
        }
        _ => {}
    }
    let one = Fp { value: 1, p };
    loop {
        // gcd(g, (t + shift)^((p-1)/2) - 1) splits g with probability about 1/2.
        let base = DensePolynomial::new(vec![Fp::new(shift as i128, p), one]);
        let h = base.pow_mod(((p - 1) / 2) as u128, g)?.sub(&DensePolynomial::constant(one));
        let d = g.gcd(&h)?;
        shift += 1;
        let dd = d.degree().unwrap_or(0);
        if dd > 0 && dd < g.degree().unwrap() {
            let (q, _) = g.div_rem(&d)?;
            split(&d, p, shift, out)?;
            split(&q, p, shift, out)?;
            return Ok(());
        }
        if shift > 10_000 + p.min(10_000) {
            return Err(FieldError::BadPrime { p, reason: "root splitting did not terminate".into() });
        }
    }
}

/// Fp zero/one helpers for callers that need constants before any element exists.
pub fn fp(value: i64, p: u64) -> Fp {
    Fp::new(value as i128, p)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ramified_prime_rejected() {
        let t = NumberFieldTower::cyclotomic7();
        assert!(matches!(PrimeSpec::for_prime(&t, 7), Err(FieldError::BadPrime { .. })));
        assert!(PrimeSpec::for_prime(&t, 29).is_ok());
        assert!(PrimeSpec::for_prime(&t, 11).is_err());
    }

    #[test]
    fn small_primes() {
        let primes: Vec<u64> = (0..60).filter(|&n| is_prime(n)).collect();
        assert_eq!(primes, vec![2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59]);
        assert!(is_prime(1_000_000_007));
        assert!(!is_prime(1_000_000_007 * 3));
    }

    #[test]
    fn roots_of_quadratic() {
        let p = 101;
        // (t - 3)(t - 10)
        let f = DensePolynomial::new(vec![fp(30, p), fp(-13, p), fp(1, p)]);
        assert_eq!(roots_mod_p(&f, p).unwrap(), vec![3, 10]);
        // t² + 1 has no roots mod 103 (103 ≡ 3 mod 4)
        let g = DensePolynomial::new(vec![fp(1, 103), fp(0, 103), fp(1, 103)]);
        assert!(roots_mod_p(&g, 103).unwrap().is_empty());
    }

    #[test]
    fn cyclotomic_needs_p_congruent_one_mod_seven() {
        let t = NumberFieldTower::cyclotomic7();
        assert!(matches!(PrimeSpec::for_prime(&t, 31), Err(FieldError::BadPrime { .. })));
        let spec = PrimeSpec::for_prime(&t, 29).unwrap();
        let z = spec.reduce(&t.generator(1)).unwrap();
        assert!(z.pow(7).value() == 1 && z.value() != 1);
        assert_eq!(PrimeSpec::search(&t, 30).unwrap().p, 43);
    }

    #[test]
    fn reducing_one_gives_one() {
        let t = NumberFieldTower::cyclotomic7();
        let spec = PrimeSpec::search(&t, 1000).unwrap();
        assert_eq!(spec.reduce(&FieldElement::one()).unwrap().value(), 1);
    }
}
