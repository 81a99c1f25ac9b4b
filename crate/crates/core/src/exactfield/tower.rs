//! Number-field towers `Q ⊂ Q(ζ₇) ⊂ Q(ζ₇)(α) ⊂ …` and their elements.
//!
//! An element of level `k` is a coefficient vector of length `deg m_k` whose
//! entries live at level `k - 1`. Elements are kept in the lowest level that
//! holds them ("demoted"), so two elements are equal exactly when their
//! representations are identical.

use std::fmt;
use std::hash::{Hash, Hasher};
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use num_complex::Complex64;
use num_traits::{One, Zero};
use serde_json::Value;

use num_bigint::BigInt;

use super::embed::{embed_unchecked, Embedded};
use super::intpath::IntModuli;
use super::{format_rational, parse_rational, rat, DensePolynomial, Field, FieldError, Rational};

static NEXT_LEVEL_ID: AtomicU64 = AtomicU64::new(1);

/// One simple extension `K_{k-1}[t] / (m_k(t))` in a tower.
pub struct TowerLevel {
    id: u64,
    depth: usize,
    name: String,
    /// Monic, lowest degree first, `degree + 1` entries.
    modulus: Vec<FieldElement>,
    parent: Option<Arc<TowerLevel>>,
    embedding: RootEmbedding,
    /// Present when every modulus up to here has integer coefficients.
    int: Option<IntModuli>,
}

/// The complex value assigned to a level's generator.
#[derive(Clone, Debug, PartialEq)]
pub struct RootEmbedding {
    pub value: Complex64,
    /// Bound on `|value - true root|`.
    pub error: f64,
    /// Human-readable record of how the root was selected.
    pub note: String,
}

impl TowerLevel {
    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn degree(&self) -> usize {
        self.modulus.len() - 1
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn modulus(&self) -> DensePolynomial<FieldElement> {
        DensePolynomial::new(self.modulus.clone())
    }

    pub fn embedding(&self) -> &RootEmbedding {
        &self.embedding
    }

    pub fn parent(&self) -> Option<&Arc<TowerLevel>> {
        self.parent.as_ref()
    }

    fn same(&self, other: &TowerLevel) -> bool {
        self.id == other.id
    }

    /// Whether `other` is a proper subfield of `self`.
    fn is_over(&self, other: &TowerLevel) -> bool {
        let mut cur = self.parent.as_deref();
        while let Some(l) = cur {
            if l.same(other) {
                return true;
            }
            cur = l.parent.as_deref();
        }
        false
    }
}

impl fmt::Debug for TowerLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TowerLevel")
            .field("depth", &self.depth)
            .field("name", &self.name)
            .field("degree", &self.degree())
            .finish()
    }
}

/// How to pick the complex root that a new level's generator embeds to.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum RootChoice {
    /// Newton refinement from `|m₀|^{1/d} · exp(i(arg(-m₀) + 2πk)/d)`.
    Branch(usize),
    /// Newton refinement from the given starting point.
    Nearest(Complex64),
    /// The branch root with the smallest imaginary part in absolute value
    /// (ties broken towards the larger real part).
    MostReal,
}

/// An ordered chain of simple extensions starting at `Q(ζ₇)`.
#[derive(Clone, Debug)]
pub struct NumberFieldTower {
    levels: Vec<Arc<TowerLevel>>,
}

impl NumberFieldTower {
    /// `Q(ζ)` with `ζ` a root of `Φ₇ = t⁶ + t⁵ + … + 1`, embedded as `exp(2πi/7)`.
    pub fn cyclotomic7() -> Self {
        let modulus = vec![FieldElement::one(); 7];
        let int = IntModuli::extend(None, &modulus[..6]);
        let angle = 2.0 * std::f64::consts::PI / 7.0;
        let level = TowerLevel {
            id: NEXT_LEVEL_ID.fetch_add(1, Ordering::Relaxed),
            depth: 1,
            name: "ζ".into(),
            modulus,
            parent: None,
            embedding: RootEmbedding {
                value: Complex64::from_polar(1.0, angle),
                error: 4.0 * f64::EPSILON,
                note: "ζ ↦ exp(2πi/7)".into(),
            },
            int,
        };
        NumberFieldTower { levels: vec![Arc::new(level)] }
    }

    /// Adjoin a root of `modulus`, whose coefficients must lie in the current top level.
    pub fn extend(
        &self,
        modulus: &DensePolynomial<FieldElement>,
        name: &str,
        choice: RootChoice,
    ) -> Result<Self, FieldError> {
        let top = self.top();
        let d = modulus.degree().unwrap_or(0);
        if d < 2 {
            return Err(FieldError::InvalidModulus(format!("degree {d} < 2")));
        }
        if !modulus.is_monic() {
            return Err(FieldError::InvalidModulus("modulus is not monic".into()));
        }
        for c in modulus.coeffs() {
            if !self.contains(c) {
                return Err(FieldError::TowerMismatch);
            }
        }
        let embedding = select_root(modulus, choice)?;
        let int = top.int.as_ref().and_then(|p| IntModuli::extend(Some(p), &modulus.coeffs()[..d]));
        let level = TowerLevel {
            id: NEXT_LEVEL_ID.fetch_add(1, Ordering::Relaxed),
            depth: top.depth + 1,
            name: name.into(),
            modulus: modulus.coeffs().to_vec(),
            parent: Some(top.clone()),
            embedding,
            int,
        };
        let mut levels = self.levels.clone();
        levels.push(Arc::new(level));
        Ok(NumberFieldTower { levels })
    }

    /// Rebuild a tower from serialized moduli (level 1 must be `Φ₇`).
    pub fn from_moduli(moduli: &[Value], names: &[&str], choice: RootChoice) -> Result<Self, FieldError> {
        let mut tower = Self::cyclotomic7();
        let first = moduli.first().ok_or_else(|| FieldError::Parse("empty tower".into()))?;
        let phi = parse_poly(first, &tower, 0)?;
        if phi.coeffs() != tower.levels[0].modulus.as_slice() {
            return Err(FieldError::InvalidModulus("level 1 modulus must be Φ₇".into()));
        }
        for (i, m) in moduli.iter().enumerate().skip(1) {
            let poly = parse_poly(m, &tower, tower.depth())?;
            let name = names.get(i).copied().unwrap_or("θ");
            tower = tower.extend(&poly, name, choice)?;
        }
        Ok(tower)
    }

    /// Moduli serialized lowest level first; coefficients of level `k`'s
    /// modulus are written at depth `k - 1`.
    pub fn moduli_json(&self) -> Vec<Value> {
        self.levels
            .iter()
            .map(|l| Value::Array(l.modulus.iter().map(|c| c.to_json(self, l.depth - 1)).collect()))
            .collect()
    }

    pub fn depth(&self) -> usize {
        self.levels.len()
    }

    pub fn top(&self) -> &Arc<TowerLevel> {
        self.levels.last().expect("tower has at least one level")
    }

    /// Level by depth, `1..=depth()`.
    pub fn level(&self, depth: usize) -> &Arc<TowerLevel> {
        &self.levels[depth - 1]
    }

    pub fn levels(&self) -> &[Arc<TowerLevel>] {
        &self.levels
    }

    pub fn generator(&self, depth: usize) -> FieldElement {
        let level = self.level(depth);
        let mut coeffs = vec![FieldElement::zero(); level.degree()];
        coeffs[1] = FieldElement::one();
        FieldElement::Algebraic(AlgebraicElement { level: level.clone(), coeffs })
    }

    /// Element `Σ coeffs[i] · g^i` of level `depth`, reduced modulo its modulus.
    pub fn element(&self, depth: usize, coeffs: Vec<FieldElement>) -> Result<FieldElement, FieldError> {
        if depth == 0 {
            return match coeffs.as_slice() {
                [] => Ok(FieldElement::zero()),
                [c @ FieldElement::Rational(_)] => Ok(c.clone()),
                _ => Err(FieldError::TowerMismatch),
            };
        }
        let level = self.level(depth);
        let g = self.generator(depth);
        let mut acc = FieldElement::zero();
        for c in coeffs.iter().rev() {
            if !c.sits_below(level) {
                return Err(FieldError::TowerMismatch);
            }
            acc = acc.try_mul(&g)?.try_add(c)?;
        }
        Ok(acc)
    }

    /// Whether `a` belongs to this tower.
    pub fn contains(&self, a: &FieldElement) -> bool {
        match a {
            FieldElement::Rational(_) => true,
            FieldElement::Algebraic(e) => self.levels.iter().any(|l| l.same(&e.level)),
        }
    }
}

fn parse_poly(v: &Value, tower: &NumberFieldTower, depth: usize) -> Result<DensePolynomial<FieldElement>, FieldError> {
    let arr = v.as_array().ok_or_else(|| FieldError::Parse("modulus must be an array".into()))?;
    let coeffs = arr
        .iter()
        .map(|c| FieldElement::from_json(c, tower, depth))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(DensePolynomial::new(coeffs))
}

fn select_root(modulus: &DensePolynomial<FieldElement>, choice: RootChoice) -> Result<RootEmbedding, FieldError> {
    let emb: Vec<Embedded> = modulus.coeffs().iter().map(embed_unchecked).collect();
    let d = emb.len() - 1;
    let eval = |z: Complex64| -> (Complex64, Complex64) {
        let mut p = Complex64::zero();
        let mut dp = Complex64::zero();
        for c in emb.iter().rev() {
            dp = dp * z + p;
            p = p * z + c.value;
        }
        (p, dp)
    };
    let newton = |mut z: Complex64| -> Complex64 {
        for _ in 0..200 {
            let (p, dp) = eval(z);
            if dp.norm() == 0.0 {
                break;
            }
            let step = p / dp;
            z -= step;
            if step.norm() <= 1e-17 * z.norm().max(1e-300) {
                break;
            }
        }
        z
    };
    let m0 = emb[0].value;
    let radius = m0.norm().powf(1.0 / d as f64);
    let start = |k: usize| {
        let arg = ((-m0).arg() + 2.0 * std::f64::consts::PI * k as f64) / d as f64;
        Complex64::from_polar(radius.max(1e-3), arg)
    };
    let (root, note) = match choice {
        RootChoice::Branch(k) => (newton(start(k % d)), format!("Newton from branch {} of |m0|^(1/{d})", k % d)),
        RootChoice::Nearest(z0) => (newton(z0), format!("Newton from {z0}")),
        RootChoice::MostReal => {
            let (k, z) = (0..d)
                .map(|k| (k, newton(start(k))))
                .min_by(|(_, a), (_, b)| {
                    a.im.abs()
                        .partial_cmp(&b.im.abs())
                        .unwrap()
                        .then(b.re.partial_cmp(&a.re).unwrap())
                })
                .unwrap();
            (z, format!("most nearly real root, Newton from branch {k} of |m0|^(1/{d})"))
        }
    };
    let (p, dp) = eval(root);
    if !p.norm().is_finite() || dp.norm() == 0.0 {
        return Err(FieldError::PrecisionExhausted { requested: 0, achieved: 0.0 });
    }
    // First-order bound: residual plus the perturbation of p from coefficient
    // errors, divided by |p'|, with a safety factor of two.
    let coeff_err: f64 = emb
        .iter()
        .enumerate()
        .map(|(i, c)| c.error * root.norm().powi(i as i32))
        .sum();
    let rounding = 8.0 * f64::EPSILON * emb.iter().enumerate().map(|(i, c)| c.value.norm() * root.norm().powi(i as i32)).sum::<f64>();
    let error = 2.0 * (p.norm() + coeff_err + rounding) / dp.norm();
    Ok(RootEmbedding { value: root, error, note: format!("{note}: {root}") })
}

/// An element of a [`NumberFieldTower`] level, or of `Q` itself.
#[derive(Clone)]
pub enum FieldElement {
    Rational(Rational),
    Algebraic(AlgebraicElement),
}

/// Element of level `k >= 1` that does not lie in level `k - 1`.
#[derive(Clone)]
pub struct AlgebraicElement {
    level: Arc<TowerLevel>,
    coeffs: Vec<FieldElement>,
}

impl AlgebraicElement {
    pub fn level(&self) -> &Arc<TowerLevel> {
        &self.level
    }

    pub fn coeffs(&self) -> &[FieldElement] {
        &self.coeffs
    }
}

impl FieldElement {
    pub fn zero() -> Self {
        FieldElement::Rational(Rational::zero())
    }

    pub fn one() -> Self {
        FieldElement::Rational(Rational::one())
    }

    pub fn int(n: i64) -> Self {
        FieldElement::Rational(rat(n))
    }

    /// Tower depth of the smallest level holding this element (0 for rationals).
    pub fn level(&self) -> usize {
        match self {
            FieldElement::Rational(_) => 0,
            FieldElement::Algebraic(e) => e.level.depth,
        }
    }

    pub fn as_rational(&self) -> Option<&Rational> {
        match self {
            FieldElement::Rational(r) => Some(r),
            FieldElement::Algebraic(_) => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, FieldElement::Rational(r) if r.is_zero())
    }

    pub fn is_one(&self) -> bool {
        matches!(self, FieldElement::Rational(r) if r.is_one())
    }

    /// Coefficient vector with respect to the generator of `depth`, lifting if needed.
    /// Returns `None` if the element lives above that level.
    pub fn coeffs_at(&self, level: &TowerLevel) -> Option<Vec<FieldElement>> {
        match self {
            FieldElement::Algebraic(e) if e.level.same(level) => Some(e.coeffs.clone()),
            _ if self.sits_below(level) => {
                let mut v = vec![FieldElement::zero(); level.degree()];
                v[0] = self.clone();
                Some(v)
            }
            _ => None,
        }
    }

    /// Strictly below `level`, i.e. usable as a coefficient there.
    fn sits_below(&self, level: &TowerLevel) -> bool {
        match self {
            FieldElement::Rational(_) => true,
            FieldElement::Algebraic(e) => level.is_over(&e.level),
        }
    }

    fn demote(level: &Arc<TowerLevel>, mut coeffs: Vec<FieldElement>) -> FieldElement {
        if coeffs[1..].iter().all(FieldElement::is_zero) {
            coeffs.swap_remove(0)
        } else {
            FieldElement::Algebraic(AlgebraicElement { level: level.clone(), coeffs })
        }
    }

    pub fn try_add(&self, rhs: &Self) -> Result<Self, FieldError> {
        use FieldElement::*;
        match (self, rhs) {
            (Rational(a), Rational(b)) => Ok(Rational(a + b)),
            (Algebraic(a), Rational(_)) => a.add_scalar(rhs),
            (Rational(_), Algebraic(b)) => b.add_scalar(self),
            (Algebraic(a), Algebraic(b)) => {
                if a.level.same(&b.level) {
                    let coeffs = a
                        .coeffs
                        .iter()
                        .zip(&b.coeffs)
                        .map(|(x, y)| x.try_add(y))
                        .collect::<Result<Vec<_>, _>>()?;
                    Ok(Self::demote(&a.level, coeffs))
                } else if a.level.is_over(&b.level) {
                    a.add_scalar(rhs)
                } else if b.level.is_over(&a.level) {
                    b.add_scalar(self)
                } else {
                    Err(FieldError::TowerMismatch)
                }
            }
        }
    }

    pub fn try_neg(&self) -> Self {
        match self {
            FieldElement::Rational(a) => FieldElement::Rational(-a),
            FieldElement::Algebraic(a) => FieldElement::Algebraic(AlgebraicElement {
                level: a.level.clone(),
                coeffs: a.coeffs.iter().map(FieldElement::try_neg).collect(),
            }),
        }
    }

    pub fn try_sub(&self, rhs: &Self) -> Result<Self, FieldError> {
        self.try_add(&rhs.try_neg())
    }

    pub fn try_mul(&self, rhs: &Self) -> Result<Self, FieldError> {
        use FieldElement::*;
        match (self, rhs) {
            (Rational(a), Rational(b)) => Ok(Rational(a * b)),
            (Algebraic(a), Rational(_)) => a.mul_scalar(rhs),
            (Rational(_), Algebraic(b)) => b.mul_scalar(self),
            (Algebraic(a), Algebraic(b)) => {
                if a.level.same(&b.level) {
                    a.mul_same(b)
                } else if a.level.is_over(&b.level) {
                    a.mul_scalar(rhs)
                } else if b.level.is_over(&a.level) {
                    b.mul_scalar(self)
                } else {
                    Err(FieldError::TowerMismatch)
                }
            }
        }
    }

    /// Inverse by the extended Euclidean algorithm against the level modulus.
    pub fn try_inv(&self) -> Result<Self, FieldError> {
        match self {
            FieldElement::Rational(r) => {
                if r.is_zero() {
                    Err(FieldError::DivisionByZero)
                } else {
                    Ok(FieldElement::Rational(r.recip()))
                }
            }
            FieldElement::Algebraic(a) => {
                if let Some(conj) = a.conjugates() {
                    // x · ∏ σ_k(x) is the relative norm, which lies one level down.
                    let cofactor = conj.iter().skip(1).try_fold(conj[0].clone(), |acc, c| acc.try_mul(c))?;
                    let norm = self.try_mul(&cofactor)?;
                    if !norm.is_zero() {
                        debug_assert!(norm.level() < a.level.depth);
                        return cofactor.try_mul(&norm.try_inv()?);
                    }
                }
                let level = &a.level;
                let poly = DensePolynomial::new(a.coeffs.clone());
                let modulus = level.modulus();
                let (g, s) = poly.half_ext_gcd(&modulus)?;
                if g.degree() != Some(0) {
                    return Err(FieldError::ZeroDivisor {
                        level: level.depth,
                        factor_degree: g.degree().unwrap_or(0),
                    });
                }
                let s = s.scale(&g.coeffs()[0].try_inv()?).rem(&modulus)?;
                let mut coeffs = s.into_coeffs();
                coeffs.resize(level.degree(), FieldElement::zero());
                Ok(Self::demote(level, coeffs))
            }
        }
    }

    /// Nested-array serialization at tower depth `depth` (lower elements are
    /// lifted); innermost entries are rational strings.
    pub fn to_json(&self, tower: &NumberFieldTower, depth: usize) -> Value {
        if depth == 0 {
            return match self {
                FieldElement::Rational(r) => Value::String(format_rational(r)),
                FieldElement::Algebraic(_) => panic!("algebraic element serialized at depth 0"),
            };
        }
        let level = tower.level(depth);
        let coeffs = self.coeffs_at(level).expect("element does not belong to the requested level");
        Value::Array(coeffs.iter().map(|c| c.to_json(tower, depth - 1)).collect())
    }

    pub fn from_json(v: &Value, tower: &NumberFieldTower, depth: usize) -> Result<Self, FieldError> {
        if depth == 0 {
            // Integers may also be written as bare JSON numbers.
            if let Some(n) = v.as_i64() {
                return Ok(FieldElement::int(n));
            }
            let s = v
                .as_str()
                .ok_or_else(|| FieldError::Parse(format!("expected rational string, got {v}")))?;
            return Ok(FieldElement::Rational(parse_rational(s)?));
        }
        let arr = v
            .as_array()
            .ok_or_else(|| FieldError::Parse(format!("expected array at depth {depth}")))?;
        let level = tower.level(depth);
        if arr.len() != level.degree() {
            return Err(FieldError::Parse(format!(
                "expected {} coefficients at depth {depth}, got {}",
                level.degree(),
                arr.len()
            )));
        }
        let coeffs = arr
            .iter()
            .map(|c| Self::from_json(c, tower, depth - 1))
            .collect::<Result<Vec<_>, _>>()?;
        tower.element(depth, coeffs)
    }
}

impl AlgebraicElement {
    fn add_scalar(&self, s: &FieldElement) -> Result<FieldElement, FieldError> {
        let mut coeffs = self.coeffs.clone();
        coeffs[0] = coeffs[0].try_add(s)?;
        Ok(FieldElement::demote(&self.level, coeffs))
    }

    fn mul_scalar(&self, s: &FieldElement) -> Result<FieldElement, FieldError> {
        if s.is_zero() {
            return Ok(FieldElement::zero());
        }
        let coeffs = self
            .coeffs
            .iter()
            .map(|c| if c.is_zero() { Ok(FieldElement::zero()) } else { c.try_mul(s) })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(FieldElement::demote(&self.level, coeffs))
    }

    /// The images `σ_k(x)`, `k = 2..=6` (level 1) or `k = 1..=6` (a level
    /// `t⁷ + c`), under the automorphisms fixing the level below, when the
    /// level is one of those two shapes.
    fn conjugates(&self) -> Option<Vec<FieldElement>> {
        let level = &self.level;
        let d = level.degree();
        match &level.parent {
            None => {
                // ζ ↦ ζ^k permutes the basis 1, ζ, …, ζ⁶ of Q[t]/(t⁷ - 1).
                Some(
                    (2..7)
                        .map(|k| {
                            let mut v = vec![FieldElement::zero(); 7];
                            for (i, c) in self.coeffs.iter().enumerate() {
                                v[(k * i) % 7] = c.clone();
                            }
                            let top = v.pop().unwrap();
                            let coeffs = v.iter().map(|c| c.try_sub(&top)).collect::<Result<Vec<_>, _>>();
                            coeffs.map(|c| FieldElement::demote(level, c))
                        })
                        .collect::<Result<Vec<_>, _>>()
                        .ok()?,
                )
            }
            Some(_) if d == 7 && level.modulus[1..d].iter().all(FieldElement::is_zero) => {
                let zeta = self.zeta();
                let powers: Vec<FieldElement> = std::iter::successors(Some(FieldElement::one()), |z| z.try_mul(&zeta).ok())
                    .take(7)
                    .collect();
                (1..7)
                    .map(|k| {
                        let coeffs = self
                            .coeffs
                            .iter()
                            .enumerate()
                            .map(|(i, c)| c.try_mul(&powers[(k * i) % 7]))
                            .collect::<Result<Vec<_>, _>>()
                            .ok()?;
                        Some(FieldElement::demote(level, coeffs))
                    })
                    .collect()
            }
            _ => None,
        }
    }

    /// Generator of the bottom level of this element's tower.
    fn zeta(&self) -> FieldElement {
        let mut l = &self.level;
        while let Some(p) = &l.parent {
            l = p;
        }
        let mut coeffs = vec![FieldElement::zero(); l.degree()];
        coeffs[1] = FieldElement::one();
        FieldElement::Algebraic(AlgebraicElement { level: l.clone(), coeffs })
    }

    fn mul_same(&self, rhs: &AlgebraicElement) -> Result<FieldElement, FieldError> {
        if let Some(int) = &self.level.int {
            let (nums, den) = int.mul(&FieldElement::Algebraic(self.clone()), &FieldElement::Algebraic(rhs.clone()));
            return Ok(unflatten(&self.level, &nums, &den));
        }
        self.mul_nested(rhs)
    }

    /// Schoolbook product over the level below, then reduction by the modulus.
    fn mul_nested(&self, rhs: &AlgebraicElement) -> Result<FieldElement, FieldError> {
        let d = self.level.degree();
        let mut prod = vec![FieldElement::zero(); 2 * d - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in rhs.coeffs.iter().enumerate() {
                if b.is_zero() {
                    continue;
                }
                prod[i + j] = prod[i + j].try_add(&a.try_mul(b)?)?;
            }
        }
        let m = &self.level.modulus;
        for k in (d..2 * d - 1).rev() {
            let c = std::mem::replace(&mut prod[k], FieldElement::zero());
            if c.is_zero() {
                continue;
            }
            // t^d = -(m_0 + m_1 t + … + m_{d-1} t^{d-1})
            for (i, mi) in m[..d].iter().enumerate() {
                if mi.is_zero() {
                    continue;
                }
                let term = if mi.is_one() { c.clone() } else { c.try_mul(mi)? };
                prod[k - d + i] = prod[k - d + i].try_sub(&term)?;
            }
        }
        prod.truncate(d);
        Ok(FieldElement::demote(&self.level, prod))
    }
}

/// Inverse of the flattening done by the integer path.
fn unflatten(level: &Arc<TowerLevel>, nums: &[BigInt], den: &BigInt) -> FieldElement {
    let d = level.degree();
    let s = nums.len() / d;
    let coeffs = (0..d)
        .map(|i| match &level.parent {
            Some(p) => unflatten(p, &nums[i * s..(i + 1) * s], den),
            None if nums[i].is_zero() => FieldElement::zero(),
            None if den.is_one() => FieldElement::Rational(Rational::from_integer(nums[i].clone())),
            None => FieldElement::Rational(Rational::new(nums[i].clone(), den.clone())),
        })
        .collect();
    FieldElement::demote(level, coeffs)
}

impl PartialEq for FieldElement {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (FieldElement::Rational(a), FieldElement::Rational(b)) => a == b,
            (FieldElement::Algebraic(a), FieldElement::Algebraic(b)) => {
                a.level.same(&b.level) && a.coeffs == b.coeffs
            }
            _ => false,
        }
    }
}

impl Eq for FieldElement {}

impl Hash for FieldElement {
    fn hash<H: Hasher>(&self, state: &mut H) {
        match self {
            FieldElement::Rational(r) => {
                0u8.hash(state);
                r.hash(state);
            }
            FieldElement::Algebraic(a) => {
                a.level.id.hash(state);
                a.coeffs.hash(state);
            }
        }
    }
}

impl fmt::Debug for FieldElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Display for FieldElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FieldElement::Rational(r) => write!(f, "{}", format_rational(r)),
            FieldElement::Algebraic(a) => {
                let mut first = true;
                for (i, c) in a.coeffs.iter().enumerate() {
                    if c.is_zero() {
                        continue;
                    }
                    if !first {
                        write!(f, " + ")?;
                    }
                    first = false;
                    let nested = matches!(c, FieldElement::Algebraic(_));
                    match (i, nested) {
                        (0, _) => write!(f, "{c}")?,
                        (_, true) => write!(f, "({c})")?,
                        (_, false) if c.is_one() => {}
                        (_, false) => write!(f, "{c}*")?,
                    }
                    match i {
                        0 => {}
                        1 if nested => write!(f, "*{}", a.level.name)?,
                        1 => write!(f, "{}", a.level.name)?,
                        _ if nested => write!(f, "*{}^{i}", a.level.name)?,
                        _ => write!(f, "{}^{i}", a.level.name)?,
                    }
                }
                Ok(())
            }
        }
    }
}

impl From<Rational> for FieldElement {
    fn from(r: Rational) -> Self {
        FieldElement::Rational(r)
    }
}

impl From<i64> for FieldElement {
    fn from(n: i64) -> Self {
        FieldElement::int(n)
    }
}

// Operator sugar; these panic on tower mismatch. Use the `try_*` methods to
// handle that case.
macro_rules! forward_binop {
    ($tr:ident, $method:ident, $try:ident) => {
        impl $tr<&FieldElement> for &FieldElement {
            type Output = FieldElement;
            fn $method(self, rhs: &FieldElement) -> FieldElement {
                self.$try(rhs).expect("field elements from different towers")
            }
        }
        impl $tr<FieldElement> for FieldElement {
            type Output = FieldElement;
            fn $method(self, rhs: FieldElement) -> FieldElement {
                self.$try(&rhs).expect("field elements from different towers")
            }
        }
        impl $tr<&FieldElement> for FieldElement {
            type Output = FieldElement;
            fn $method(self, rhs: &FieldElement) -> FieldElement {
                self.$try(rhs).expect("field elements from different towers")
            }
        }
    };
}

forward_binop!(Add, add, try_add);
forward_binop!(Sub, sub, try_sub);
forward_binop!(Mul, mul, try_mul);

impl Neg for &FieldElement {
    type Output = FieldElement;
    fn neg(self) -> FieldElement {
        self.try_neg()
    }
}

impl Neg for FieldElement {
    type Output = FieldElement;
    fn neg(self) -> FieldElement {
        self.try_neg()
    }
}

impl Field for FieldElement {
    fn zero_like(&self) -> Self {
        FieldElement::zero()
    }
    fn one_like(&self) -> Self {
        FieldElement::one()
    }
    fn int_like(&self, n: i64) -> Self {
        FieldElement::int(n)
    }
    fn is_zero(&self) -> bool {
        FieldElement::is_zero(self)
    }
    fn add(&self, rhs: &Self) -> Self {
        self + rhs
    }
    fn sub(&self, rhs: &Self) -> Self {
        self - rhs
    }
    fn mul(&self, rhs: &Self) -> Self {
        self * rhs
    }
    fn neg(&self) -> Self {
        self.try_neg()
    }
    fn inv(&self) -> Result<Self, FieldError> {
        self.try_inv()
    }
}
