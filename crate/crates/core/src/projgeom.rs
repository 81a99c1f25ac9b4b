//! Points, lines, collineations and ternary quartics in the projective plane
//! over any [`Field`].
//!
//! Quartic coefficients are stored in descending lexicographic order of the
//! exponent triple `(i, j, k)` of `x^i y^j z^k`:
//!
//! ```text
//! x⁴, x³y, x³z, x²y², x²yz, x²z², xy³, xy²z, xyz², xz³, y⁴, y³z, y²z², yz³, z⁴
//! ```

use std::fmt;

use serde_json::Value;
use thiserror::Error;

use crate::exactfield::{proportional, proportionality_scalar, Field, FieldElement, FieldError, NumberFieldTower};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeomError {
    #[error("all coordinates are zero")]
    ZeroVector,
    #[error("the two lines are identical")]
    IdenticalLines,
    #[error("the two points are identical")]
    IdenticalPoints,
    #[error("transformation is singular")]
    SingularTransform,
    #[error("malformed geometry JSON: {0}")]
    Json(String),
    #[error(transparent)]
    Field(#[from] FieldError),
}

pub fn cross<F: Field>(a: &[F; 3], b: &[F; 3]) -> [F; 3] {
    [
        a[1].mul(&b[2]).sub(&a[2].mul(&b[1])),
        a[2].mul(&b[0]).sub(&a[0].mul(&b[2])),
        a[0].mul(&b[1]).sub(&a[1].mul(&b[0])),
    ]
}

pub fn dot<F: Field>(a: &[F; 3], b: &[F; 3]) -> F {
    a[0].mul(&b[0]).add(&a[1].mul(&b[1])).add(&a[2].mul(&b[2]))
}

/// `det(a | b | c)` with the vectors as columns.
pub fn det3<F: Field>(a: &[F; 3], b: &[F; 3], c: &[F; 3]) -> F {
    dot(a, &cross(b, c))
}

fn nonzero<F: Field>(v: &[F; 3]) -> bool {
    v.iter().any(|x| !x.is_zero())
}

fn normalize<F: Field>(v: &[F; 3]) -> Result<[F; 3], FieldError> {
    let k = v.iter().position(|x| !x.is_zero()).ok_or(FieldError::DivisionByZero)?;
    let s = v[k].inv()?;
    Ok([v[0].mul(&s), v[1].mul(&s), v[2].mul(&s)])
}

macro_rules! homogeneous {
    ($name:ident, $field:ident, $what:literal) => {
        #[doc = concat!("A ", $what, " of the projective plane; equality is proportionality.")]
        #[derive(Clone, Debug)]
        pub struct $name<F> {
            $field: [F; 3],
        }

        impl<F: Field> $name<F> {
            pub fn new($field: [F; 3]) -> Result<Self, GeomError> {
                if nonzero(&$field) {
                    Ok($name { $field })
                } else {
                    Err(GeomError::ZeroVector)
                }
            }

            /// Representative coordinates, exactly as stored.
            pub fn $field(&self) -> &[F; 3] {
                &self.$field
            }

            /// Scale so the first nonzero entry is one.
            pub fn normalized(&self) -> Result<Self, FieldError> {
                Ok($name { $field: normalize(&self.$field)? })
            }

            /// `self = s · other` as vectors.
            pub fn scalar_to(&self, other: &Self) -> Option<F> {
                proportionality_scalar(&other.$field, &self.$field)
            }

            pub fn scaled(&self, s: &F) -> Result<Self, GeomError> {
                Self::new([self.$field[0].mul(s), self.$field[1].mul(s), self.$field[2].mul(s)])
            }

            pub fn map<G: Field>(&self, f: impl Fn(&F) -> G) -> Result<$name<G>, GeomError> {
                $name::new([f(&self.$field[0]), f(&self.$field[1]), f(&self.$field[2])])
            }
        }

        impl<F: Field> PartialEq for $name<F> {
            fn eq(&self, other: &Self) -> bool {
                proportional(&self.$field, &other.$field)
            }
        }

        impl $name<FieldElement> {
            pub fn to_json(&self, tower: &NumberFieldTower, depth: usize) -> Value {
                Value::Array(self.$field.iter().map(|c| c.to_json(tower, depth)).collect())
            }

            pub fn from_json(v: &Value, tower: &NumberFieldTower, depth: usize) -> Result<Self, GeomError> {
                let arr = v.as_array().filter(|a| a.len() == 3).ok_or_else(|| {
                    GeomError::Json(format!("expected an array of 3 coordinates, got {v}"))
                })?;
                let c = arr
                    .iter()
                    .map(|x| FieldElement::from_json(x, tower, depth))
                    .collect::<Result<Vec<_>, _>>()?;
                let [a, b, c]: [FieldElement; 3] = c.try_into().expect("length checked");
                Self::new([a, b, c])
            }
        }

        impl fmt::Display for $name<FieldElement> {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                let [a, b, c] = &self.$field;
                write!(f, "[{a} : {b} : {c}]")
            }
        }
    };
}

homogeneous!(ProjPoint, coords, "point");
homogeneous!(ProjLine, coeffs, "line");

impl<F: Field> ProjLine<F> {
    pub fn contains(&self, p: &ProjPoint<F>) -> bool {
        dot(&self.coeffs, &p.coords).is_zero()
    }
}

/// Intersection point of two distinct lines.
pub fn meet<F: Field>(l1: &ProjLine<F>, l2: &ProjLine<F>) -> Result<ProjPoint<F>, GeomError> {
    ProjPoint::new(cross(&l1.coeffs, &l2.coeffs)).map_err(|_| GeomError::IdenticalLines)
}

/// Line through two distinct points.
pub fn join<F: Field>(p1: &ProjPoint<F>, p2: &ProjPoint<F>) -> Result<ProjLine<F>, GeomError> {
    ProjLine::new(cross(&p1.coords, &p2.coords)).map_err(|_| GeomError::IdenticalPoints)
}

pub fn concurrent<F: Field>(l1: &ProjLine<F>, l2: &ProjLine<F>, l3: &ProjLine<F>) -> bool {
    det3(&l1.coeffs, &l2.coeffs, &l3.coeffs).is_zero()
}

pub fn collinear<F: Field>(p1: &ProjPoint<F>, p2: &ProjPoint<F>, p3: &ProjPoint<F>) -> bool {
    det3(&p1.coords, &p2.coords, &p3.coords).is_zero()
}

/// An invertible 3×3 matrix acting on column vectors.
#[derive(Clone, Debug, PartialEq)]
pub struct ProjTransform<F> {
    m: [[F; 3]; 3],
}

impl<F: Field> ProjTransform<F> {
    pub fn new(m: [[F; 3]; 3]) -> Result<Self, GeomError> {
        let t = ProjTransform { m };
        if t.determinant().is_zero() {
            Err(GeomError::SingularTransform)
        } else {
            Ok(t)
        }
    }

    pub fn identity(sample: &F) -> Self {
        let (o, z) = (sample.one_like(), sample.zero_like());
        ProjTransform { m: [[o.clone(), z.clone(), z.clone()], [z.clone(), o.clone(), z.clone()], [z.clone(), z, o]] }
    }

    pub fn diagonal(d: [F; 3]) -> Result<Self, GeomError> {
        let z = d[0].zero_like();
        let [a, b, c] = d;
        Self::new([[a, z.clone(), z.clone()], [z.clone(), b, z.clone()], [z.clone(), z, c]])
    }

    pub fn matrix(&self) -> &[[F; 3]; 3] {
        &self.m
    }

    pub fn determinant(&self) -> F {
        let m = &self.m;
        let col = |j: usize| [m[0][j].clone(), m[1][j].clone(), m[2][j].clone()];
        det3(&col(0), &col(1), &col(2))
    }

    /// `self ∘ rhs`, i.e. the matrix product `self · rhs`.
    pub fn compose(&self, rhs: &Self) -> Self {
        let z = self.m[0][0].zero_like();
        let mut out: [[F; 3]; 3] = std::array::from_fn(|_| std::array::from_fn(|_| z.clone()));
        for (i, row) in out.iter_mut().enumerate() {
            for (j, e) in row.iter_mut().enumerate() {
                for k in 0..3 {
                    if !self.m[i][k].is_zero() && !rhs.m[k][j].is_zero() {
                        *e = e.add(&self.m[i][k].mul(&rhs.m[k][j]));
                    }
                }
            }
        }
        ProjTransform { m: out }
    }

    /// Cofactor matrix; proportional to the inverse transpose.
    pub fn cofactor(&self) -> [[F; 3]; 3] {
        let m = &self.m;
        std::array::from_fn(|i| {
            std::array::from_fn(|j| {
                let (r0, r1) = ((i + 1) % 3, (i + 2) % 3);
                let (c0, c1) = ((j + 1) % 3, (j + 2) % 3);
                m[r0][c0].mul(&m[r1][c1]).sub(&m[r0][c1].mul(&m[r1][c0]))
            })
        })
    }

    /// Adjugate; proportional to the inverse.
    pub fn adjugate(&self) -> Self {
        let c = self.cofactor();
        ProjTransform { m: std::array::from_fn(|i| std::array::from_fn(|j| c[j][i].clone())) }
    }

    /// Projective normalization: scale so the first nonzero entry (row-major) is one.
    pub fn normalized(&self) -> Result<Self, FieldError> {
        let s = self.m.iter().flatten().find(|x| !x.is_zero()).ok_or(FieldError::DivisionByZero)?.inv()?;
        Ok(ProjTransform { m: std::array::from_fn(|i| std::array::from_fn(|j| self.m[i][j].mul(&s))) })
    }

    /// Whether `self = s · other` for some scalar `s`.
    pub fn proportional_to(&self, other: &Self) -> bool {
        let a: Vec<F> = self.m.iter().flatten().cloned().collect();
        let b: Vec<F> = other.m.iter().flatten().cloned().collect();
        proportional(&a, &b)
    }

    pub fn apply(&self, v: &[F; 3]) -> [F; 3] {
        std::array::from_fn(|i| {
            (0..3).fold(v[0].zero_like(), |acc, k| {
                if self.m[i][k].is_zero() || v[k].is_zero() {
                    acc
                } else {
                    acc.add(&self.m[i][k].mul(&v[k]))
                }
            })
        })
    }

    pub fn map<G: Field>(&self, f: impl Fn(&F) -> G) -> ProjTransform<G> {
        ProjTransform { m: std::array::from_fn(|i| std::array::from_fn(|j| f(&self.m[i][j]))) }
    }
}

pub fn act_point<F: Field>(t: &ProjTransform<F>, p: &ProjPoint<F>) -> ProjPoint<F> {
    ProjPoint { coords: t.apply(&p.coords) }
}

/// Image of a line, via the cofactor matrix so no inversion is needed.
pub fn act_line<F: Field>(t: &ProjTransform<F>, l: &ProjLine<F>) -> ProjLine<F> {
    ProjLine { coeffs: ProjTransform { m: t.cofactor() }.apply(&l.coeffs) }
}

/// `Q ∘ T⁻¹` up to the scalar `det(T)⁴`, so that `T` maps the zero set of `Q`
/// onto the zero set of the result.
pub fn act_quartic<F: Field>(t: &ProjTransform<F>, q: &QuarticForm<F>) -> QuarticForm<F> {
    let adj = t.adjugate();
    let forms: Vec<Form<F>> = adj.m.iter().map(|row| Form::linear(row.clone())).collect();
    q.substitute(&forms)
}

/// Exponent triples of degree `d` in descending lexicographic order.
pub fn monomials(d: usize) -> Vec<[usize; 3]> {
    (0..=d).rev().flat_map(|i| (0..=d - i).rev().map(move |j| [i, j, d - i - j])).collect()
}

/// Position of `x^i y^j z^k` in [`monomials`]`(i + j + k)`.
pub fn monomial_index(e: [usize; 3]) -> usize {
    let d = e[0] + e[1] + e[2];
    let a = d - e[0];
    a * (a + 1) / 2 + (a - e[1])
}

/// A ternary form of any degree; the workhorse behind quartic products and
/// substitutions.
#[derive(Clone, Debug, PartialEq)]
pub struct Form<F> {
    degree: usize,
    coeffs: Vec<F>,
}

impl<F: Field> Form<F> {
    pub fn constant(c: F) -> Self {
        Form { degree: 0, coeffs: vec![c] }
    }

    pub fn linear(l: [F; 3]) -> Self {
        Form { degree: 1, coeffs: l.to_vec() }
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn coeffs(&self) -> &[F] {
        &self.coeffs
    }

    pub fn mul(&self, rhs: &Self) -> Self {
        let d = self.degree + rhs.degree;
        let zero = self.coeffs[0].zero_like();
        let mut out = vec![zero; (d + 1) * (d + 2) / 2];
        let (ma, mb) = (monomials(self.degree), monomials(rhs.degree));
        for (a, ea) in self.coeffs.iter().zip(&ma) {
            if a.is_zero() {
                continue;
            }
            for (b, eb) in rhs.coeffs.iter().zip(&mb) {
                if b.is_zero() {
                    continue;
                }
                let k = monomial_index([ea[0] + eb[0], ea[1] + eb[1], ea[2] + eb[2]]);
                out[k] = out[k].add(&a.mul(b));
            }
        }
        Form { degree: d, coeffs: out }
    }

    pub fn add(&self, rhs: &Self) -> Self {
        assert_eq!(self.degree, rhs.degree, "adding forms of different degree");
        Form { degree: self.degree, coeffs: self.coeffs.iter().zip(&rhs.coeffs).map(|(a, b)| a.add(b)).collect() }
    }

    pub fn scale(&self, s: &F) -> Self {
        Form { degree: self.degree, coeffs: self.coeffs.iter().map(|a| a.mul(s)).collect() }
    }

    pub fn eval(&self, v: &[F; 3]) -> F {
        let pw: Vec<Vec<F>> = v.iter().map(|x| powers(x, self.degree)).collect();
        self.coeffs.iter().zip(monomials(self.degree)).fold(v[0].zero_like(), |acc, (c, e)| {
            if c.is_zero() {
                acc
            } else {
                acc.add(&c.mul(&pw[0][e[0]]).mul(&pw[1][e[1]]).mul(&pw[2][e[2]]))
            }
        })
    }
}

fn powers<F: Field>(x: &F, d: usize) -> Vec<F> {
    let mut out = vec![x.one_like()];
    for k in 1..=d {
        out.push(out[k - 1].mul(x));
    }
    out
}

/// Ternary quartic with 15 coefficients in the module's monomial order.
#[derive(Clone, Debug, PartialEq)]
pub struct QuarticForm<F> {
    coeffs: [F; 15],
}

impl<F: Field> QuarticForm<F> {
    pub fn new(coeffs: [F; 15]) -> Self {
        QuarticForm { coeffs }
    }

    pub fn from_vec(v: Vec<F>) -> Self {
        QuarticForm { coeffs: v.try_into().unwrap_or_else(|v: Vec<F>| panic!("quartic needs 15 coefficients, got {}", v.len())) }
    }

    pub fn from_form(f: Form<F>) -> Self {
        assert_eq!(f.degree, 4, "not a quartic");
        Self::from_vec(f.coeffs)
    }

    pub fn into_form(self) -> Form<F> {
        Form { degree: 4, coeffs: self.coeffs.to_vec() }
    }

    /// Sum of `c · x^i y^j z^k` over the given terms.
    pub fn from_terms(sample: &F, terms: &[([usize; 3], F)]) -> Self {
        let mut coeffs: [F; 15] = std::array::from_fn(|_| sample.zero_like());
        for (e, c) in terms {
            assert_eq!(e[0] + e[1] + e[2], 4, "monomial {e:?} is not quartic");
            let k = monomial_index(*e);
            coeffs[k] = coeffs[k].add(c);
        }
        QuarticForm { coeffs }
    }

    /// The Klein quartic `x³y + y³z + z³x`.
    pub fn klein(sample: &F) -> Self {
        let o = sample.one_like();
        Self::from_terms(sample, &[([3, 1, 0], o.clone()), ([0, 3, 1], o.clone()), ([1, 0, 3], o)])
    }

    pub fn coeffs(&self) -> &[F; 15] {
        &self.coeffs
    }

    pub fn coeff(&self, e: [usize; 3]) -> &F {
        &self.coeffs[monomial_index(e)]
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(Field::is_zero)
    }

    pub fn eval(&self, p: &ProjPoint<F>) -> F {
        self.eval_vec(p.coords())
    }

    pub fn eval_vec(&self, v: &[F; 3]) -> F {
        Form { degree: 4, coeffs: self.coeffs.to_vec() }.eval(v)
    }

    pub fn proportional_to(&self, other: &Self) -> bool {
        proportional(&self.coeffs, &other.coeffs)
    }

    /// `self = s · other`.
    pub fn scalar_to(&self, other: &Self) -> Option<F> {
        proportionality_scalar(&other.coeffs, &self.coeffs)
    }

    pub fn map<G: Field>(&self, f: impl Fn(&F) -> G) -> QuarticForm<G> {
        QuarticForm { coeffs: std::array::from_fn(|i| f(&self.coeffs[i])) }
    }

    /// `Q(l₀, l₁, l₂)` for linear forms `l`.
    pub fn substitute(&self, l: &[Form<F>]) -> Self {
        assert!(l.len() == 3 && l.iter().all(|f| f.degree == 1));
        let one = Form::constant(self.coeffs[0].one_like());
        let pw: Vec<Vec<Form<F>>> = l
            .iter()
            .map(|f| {
                let mut v = vec![one.clone()];
                for k in 1..=4 {
                    v.push(v[k - 1].mul(f));
                }
                v
            })
            .collect();
        let mut acc = Form { degree: 4, coeffs: vec![self.coeffs[0].zero_like(); 15] };
        for (c, e) in self.coeffs.iter().zip(monomials(4)) {
            if c.is_zero() {
                continue;
            }
            let term = pw[0][e[0]].mul(&pw[1][e[1]]).mul(&pw[2][e[2]]).scale(c);
            acc = acc.add(&term);
        }
        Self::from_form(acc)
    }
}

impl QuarticForm<FieldElement> {
    pub fn to_json(&self, tower: &NumberFieldTower, depth: usize) -> Value {
        Value::Array(self.coeffs.iter().map(|c| c.to_json(tower, depth)).collect())
    }
}

impl fmt::Display for QuarticForm<FieldElement> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (c, e) in self.coeffs.iter().zip(monomials(4)) {
            if c.is_zero() {
                continue;
            }
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            let vars: String = ["x", "y", "z"]
                .iter()
                .zip(e)
                .filter(|(_, k)| *k > 0)
                .map(|(v, k)| if k == 1 { v.to_string() } else { format!("{v}^{k}") })
                .collect();
            if c.as_rational().is_some() {
                write!(f, "{c}*{vars}")?;
            } else {
                write!(f, "({c})*{vars}")?;
            }
        }
        if first {
            write!(f, "0")?;
        }
        Ok(())
    }
}
