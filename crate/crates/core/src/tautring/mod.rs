//! The ring of cycles on `Cⁿ` generated by point classes `xᵢ` and diagonals
//! `Δᵢⱼ`, modulo numerical equivalence, for a curve `C` of genus `g`.
//!
//! Products are reduced eagerly with
//!
//! * `xᵢ² = 0`
//! * `xᵢ · Δᵢⱼ = xᵢ · xⱼ`
//! * `Δᵢⱼ² = -(2g - 2) · xᵢ · xⱼ`
//!
//! and top-degree monomials are evaluated through the connected components of
//! the graph their diagonals span.

mod parse;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_traits::{One, Zero};
use serde::Serialize;
use thiserror::Error;

use crate::exactfield::{format_rational, rat, Rational};

pub use parse::{parse_ring_expr, ParseError, RingExpr};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TautError {
    #[error("classes live on different rings (C^{0}, g={1}) and (C^{2}, g={3})")]
    AmbientMismatch(usize, u32, usize, u32),
    #[error("monomial {0} is not a top-degree class covering every factor")]
    DimensionMismatch(String),
    #[error("index {index} outside 1..={n}")]
    IndexOutOfRange { index: usize, n: usize },
    #[error("diagonal needs two distinct indices, got ({0},{1})")]
    InvalidPair(usize, usize),
    #[error(transparent)]
    Parse(#[from] ParseError),
}

/// Square-free monomial `∏ xᵢ · ∏ Δᵢⱼ` with no edge touching a point.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct TautMonomial {
    points: BTreeSet<usize>,
    edges: BTreeSet<(usize, usize)>,
}

/// Fewer diagonals first, then points and edges lexicographically.
impl Ord for TautMonomial {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        (self.edges.len(), &self.points, &self.edges).cmp(&(other.edges.len(), &other.points, &other.edges))
    }
}

impl PartialOrd for TautMonomial {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl TautMonomial {
    pub fn points(&self) -> &BTreeSet<usize> {
        &self.points
    }

    pub fn edges(&self) -> &BTreeSet<(usize, usize)> {
        &self.edges
    }

    pub fn codimension(&self) -> usize {
        self.points.len() + self.edges.len()
    }
}

impl fmt::Display for TautMonomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .points
            .iter()
            .map(|i| format!("x{i}"))
            .chain(self.edges.iter().map(|(i, j)| format!("D({i},{j})")))
            .collect();
        if parts.is_empty() {
            write!(f, "1")
        } else {
            write!(f, "{}", parts.join("*"))
        }
    }
}

/// A not-yet-reduced product of generators.
#[derive(Clone, Debug, Default)]
struct RawMonomial {
    points: Vec<usize>,
    edges: Vec<(usize, usize)>,
}

/// Reduce a raw product to `coefficient · monomial`, or `None` if it vanishes.
fn reduce(raw: RawMonomial, g: u32) -> Option<(Rational, TautMonomial)> {
    let self_int = rat(2 - 2 * g as i64);
    let mut coeff = Rational::one();
    let mut points = BTreeSet::new();
    for p in raw.points {
        if !points.insert(p) {
            return None;
        }
    }
    let mut pending = raw.edges;
    let mut edges: BTreeSet<(usize, usize)> = BTreeSet::new();
    // Each pass either retires an edge into `edges` or turns it into points,
    // and new points can release earlier edges; loop until stable.
    loop {
        let mut changed = false;
        let mut next = Vec::new();
        for (i, j) in pending.drain(..) {
            let (hi, hj) = (points.contains(&i), points.contains(&j));
            if hi && hj {
                return None;
            } else if hi || hj {
                points.insert(if hi { j } else { i });
                changed = true;
            } else if edges.remove(&(i, j)) {
                coeff *= &self_int;
                points.insert(i);
                points.insert(j);
                changed = true;
            } else {
                edges.insert((i, j));
            }
        }
        if changed {
            // Re-examine settled edges against the enlarged point set.
            next.extend(std::mem::take(&mut edges));
            pending = next;
        } else {
            break;
        }
    }
    Some((coeff, TautMonomial { points, edges }))
}

/// Reduce `∏ x_p · ∏ Δ_e` to `coefficient · monomial`, or `None` if it vanishes.
/// Edges are ordered pairs `(i, j)` with `i < j`.
pub fn reduce_product(points: &[usize], edges: &[(usize, usize)], g: u32) -> Option<(Rational, TautMonomial)> {
    assert!(edges.iter().all(|(i, j)| i < j), "edges must be ordered pairs");
    reduce(RawMonomial { points: points.to_vec(), edges: edges.to_vec() }, g)
}

/// Ambient data shared by all classes of one ring: `Cⁿ`, genus `g`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct TautRing {
    pub n: usize,
    pub g: u32,
}

impl TautRing {
    pub fn new(n: usize, g: u32) -> Self {
        assert!(n >= 1, "ambient power must be positive");
        TautRing { n, g }
    }

    fn check(&self, i: usize) -> Result<(), TautError> {
        if (1..=self.n).contains(&i) {
            Ok(())
        } else {
            Err(TautError::IndexOutOfRange { index: i, n: self.n })
        }
    }

    pub fn zero(&self) -> TautClass {
        TautClass { ring: *self, terms: BTreeMap::new() }
    }

    pub fn constant(&self, c: Rational) -> TautClass {
        let mut t = self.zero();
        if !c.is_zero() {
            t.terms.insert(TautMonomial::default(), c);
        }
        t
    }

    pub fn point(&self, i: usize) -> Result<TautClass, TautError> {
        self.check(i)?;
        Ok(self.raw(RawMonomial { points: vec![i], edges: vec![] }))
    }

    pub fn diagonal(&self, i: usize, j: usize) -> Result<TautClass, TautError> {
        self.check(i)?;
        self.check(j)?;
        if i == j {
            return Err(TautError::InvalidPair(i, j));
        }
        Ok(self.raw(RawMonomial { points: vec![], edges: vec![(i.min(j), i.max(j))] }))
    }

    /// `2xᵢ + 2xⱼ + Δᵢⱼ`.
    pub fn scorza(&self, i: usize, j: usize) -> Result<TautClass, TautError> {
        let d = self.diagonal(i, j)?;
        let two = self.constant(rat(2));
        two.mul(&self.point(i)?)?.add(&two.mul(&self.point(j)?)?)?.add(&d)
    }

    fn raw(&self, m: RawMonomial) -> TautClass {
        let mut t = self.zero();
        if let Some((c, mono)) = reduce(m, self.g) {
            t.terms.insert(mono, c);
        }
        t
    }
}

/// Rational combination of reduced monomials.
#[derive(Clone, Debug, PartialEq)]
pub struct TautClass {
    ring: TautRing,
    terms: BTreeMap<TautMonomial, Rational>,
}

impl TautClass {
    pub fn ring(&self) -> TautRing {
        self.ring
    }

    pub fn terms(&self) -> &BTreeMap<TautMonomial, Rational> {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    fn same_ring(&self, other: &Self) -> Result<(), TautError> {
        if self.ring == other.ring {
            Ok(())
        } else {
            Err(TautError::AmbientMismatch(self.ring.n, self.ring.g, other.ring.n, other.ring.g))
        }
    }

    fn accumulate(terms: &mut BTreeMap<TautMonomial, Rational>, m: TautMonomial, c: Rational) {
        use std::collections::btree_map::Entry;
        match terms.entry(m) {
            Entry::Vacant(v) => {
                if !c.is_zero() {
                    v.insert(c);
                }
            }
            Entry::Occupied(mut o) => {
                *o.get_mut() += c;
                if o.get().is_zero() {
                    o.remove();
                }
            }
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self, TautError> {
        self.same_ring(other)?;
        let mut terms = self.terms.clone();
        for (m, c) in &other.terms {
            Self::accumulate(&mut terms, m.clone(), c.clone());
        }
        Ok(TautClass { ring: self.ring, terms })
    }

    pub fn neg(&self) -> Self {
        TautClass { ring: self.ring, terms: self.terms.iter().map(|(m, c)| (m.clone(), -c)).collect() }
    }

    pub fn sub(&self, other: &Self) -> Result<Self, TautError> {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &Self) -> Result<Self, TautError> {
        self.same_ring(other)?;
        let mut terms = BTreeMap::new();
        for (ma, ca) in &self.terms {
            for (mb, cb) in &other.terms {
                let raw = RawMonomial {
                    points: ma.points.iter().chain(&mb.points).copied().collect(),
                    edges: ma.edges.iter().chain(&mb.edges).copied().collect(),
                };
                if let Some((c, m)) = reduce(raw, self.ring.g) {
                    Self::accumulate(&mut terms, m, c * ca * cb);
                }
            }
        }
        Ok(TautClass { ring: self.ring, terms })
    }

    pub fn pow(&self, k: u32) -> Result<Self, TautError> {
        (0..k).try_fold(self.ring.constant(Rational::one()), |acc, _| acc.mul(self))
    }

    /// Degree of the top-degree part; every monomial must have codimension `n`
    /// and involve every index.
    pub fn degree(&self) -> Result<Rational, TautError> {
        let mut total = Rational::zero();
        for (m, c) in &self.terms {
            total += c * monomial_degree(m, self.ring)?;
        }
        Ok(total)
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::Value::Array(
            self.terms
                .iter()
                .map(|(m, c)| {
                    serde_json::json!({
                        "points": m.points,
                        "edges": m.edges.iter().map(|&(i, j)| [i, j]).collect::<Vec<_>>(),
                        "coeff": format_rational(c),
                    })
                })
                .collect(),
        )
    }
}

impl fmt::Display for TautClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (k, (m, c)) in self.terms.iter().enumerate() {
            let neg = c < &Rational::zero();
            let abs = if neg { -c } else { c.clone() };
            match (k, neg) {
                (0, true) => write!(f, "-")?,
                (0, false) => {}
                (_, true) => write!(f, " - ")?,
                (_, false) => write!(f, " + ")?,
            }
            let mono = m.to_string();
            if abs.is_one() {
                write!(f, "{mono}")?;
            } else if mono == "1" {
                write!(f, "{}", format_rational(&abs))?;
            } else {
                write!(f, "{}*{mono}", format_rational(&abs))?;
            }
        }
        Ok(())
    }
}

fn monomial_degree(m: &TautMonomial, ring: TautRing) -> Result<Rational, TautError> {
    let mut covered: BTreeSet<usize> = m.points.clone();
    for &(i, j) in &m.edges {
        covered.insert(i);
        covered.insert(j);
    }
    if m.codimension() != ring.n || covered.len() != ring.n {
        return Err(TautError::DimensionMismatch(m.to_string()));
    }
    if m.edges.is_empty() {
        return Ok(Rational::one());
    }
    // Union-find over edge endpoints, tracking vertex and edge counts.
    let mut parent: Vec<usize> = (0..=ring.n).collect();
    fn find(p: &mut [usize], x: usize) -> usize {
        let mut r = x;
        while p[r] != r {
            r = p[r];
        }
        let mut y = x;
        while p[y] != r {
            let next = p[y];
            p[y] = r;
            y = next;
        }
        r
    }
    for &(i, j) in &m.edges {
        let (a, b) = (find(&mut parent, i), find(&mut parent, j));
        if a != b {
            parent[a] = b;
        }
    }
    let mut counts: BTreeMap<usize, (usize, usize)> = BTreeMap::new();
    let vertices: BTreeSet<usize> = m.edges.iter().flat_map(|&(i, j)| [i, j]).collect();
    for v in vertices {
        counts.entry(find(&mut parent, v)).or_default().0 += 1;
    }
    for &(i, _) in &m.edges {
        counts.entry(find(&mut parent, i)).or_default().1 += 1;
    }
    let self_int = rat(2 - 2 * ring.g as i64);
    let mut value = Rational::one();
    for (v, e) in counts.values() {
        if e != v {
            return Ok(Rational::zero());
        }
        value *= &self_int;
    }
    Ok(value)
}

/// Evaluate a parsed expression in the given ring.
pub fn eval_ring_expr(expr: &RingExpr, ring: TautRing) -> Result<TautClass, TautError> {
    Ok(match expr {
        RingExpr::Point(i) => ring.point(*i)?,
        RingExpr::Diagonal(i, j) => ring.diagonal(*i, *j)?,
        RingExpr::Scorza(i, j) => ring.scorza(*i, *j)?,
        RingExpr::Number(q) => ring.constant(q.clone()),
        RingExpr::Add(a, b) => eval_ring_expr(a, ring)?.add(&eval_ring_expr(b, ring)?)?,
        RingExpr::Sub(a, b) => eval_ring_expr(a, ring)?.sub(&eval_ring_expr(b, ring)?)?,
        RingExpr::Mul(a, b) => eval_ring_expr(a, ring)?.mul(&eval_ring_expr(b, ring)?)?,
    })
}

/// `scorza_class(i, j, n, g)`.
pub fn scorza_class(i: usize, j: usize, n: usize, g: u32) -> Result<TautClass, TautError> {
    if i >= j {
        return Err(TautError::InvalidPair(i, j));
    }
    TautRing::new(n, g).scorza(i, j)
}

/// Degree of `S₁₂ · S₂₃ · … · S₍ₙ₋₁₎ₙ · S₁ₙ`, computed by expansion.
pub fn scorza_cycle_product(n: usize, g: u32) -> Result<Rational, TautError> {
    assert!(n >= 2, "the cycle needs at least two factors");
    let ring = TautRing::new(n, g);
    let mut acc = ring.constant(Rational::one());
    for i in 1..n {
        acc = acc.mul(&ring.scorza(i, i + 1)?)?;
    }
    if n > 2 {
        acc = acc.mul(&ring.scorza(1, n)?)?;
    } else {
        // For n = 2 the "cycle" closes on the same pair.
        acc = acc.mul(&ring.scorza(1, 2)?)?;
    }
    acc.degree()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ring(n: usize) -> TautRing {
        TautRing::new(n, 3)
    }

    #[test]
    fn rewrite_relations() {
        let r = ring(2);
        let x1 = r.point(1).unwrap();
        let d = r.diagonal(1, 2).unwrap();
        let x1x2 = x1.mul(&r.point(2).unwrap()).unwrap();
        assert_eq!(x1.mul(&d).unwrap(), x1x2);
        assert_eq!(d.mul(&d).unwrap(), x1x2.mul(&r.constant(rat(-4))).unwrap());
        assert!(x1.mul(&x1).unwrap().is_zero());
    }

    #[test]
    fn degree_examples() {
        let r = ring(3);
        let p = r.point(1).unwrap().mul(&r.point(2).unwrap()).unwrap().mul(&r.point(3).unwrap()).unwrap();
        assert_eq!(p.degree().unwrap(), rat(1));
        let t = r
            .diagonal(1, 2)
            .unwrap()
            .mul(&r.diagonal(2, 3).unwrap())
            .unwrap()
            .mul(&r.diagonal(1, 3).unwrap())
            .unwrap();
        assert_eq!(t.degree().unwrap(), rat(-4));
        let r4 = ring(4);
        let q = r4.diagonal(1, 2).unwrap().mul(&r4.diagonal(3, 4).unwrap()).unwrap();
        assert!(matches!(q.degree(), Err(TautError::DimensionMismatch(_))));
    }

    #[test]
    fn scorza_examples() {
        let s = scorza_class(1, 2, 2, 3).unwrap();
        assert_eq!(s.to_string(), "2*x1 + 2*x2 + D(1,2)");
        assert_eq!(s.mul(&s).unwrap().degree().unwrap(), rat(12));
        assert!(scorza_class(1, 1, 2, 3).is_err());
        assert_eq!(scorza_cycle_product(2, 3).unwrap(), rat(12));
        assert_eq!(scorza_cycle_product(3, 3).unwrap(), rat(48));
        assert_eq!(scorza_cycle_product(7, 3).unwrap(), rat(4368));
    }

    #[test]
    fn index_checks() {
        let r = ring(3);
        assert_eq!(r.point(4).unwrap_err(), TautError::IndexOutOfRange { index: 4, n: 3 });
        assert_eq!(r.diagonal(2, 2).unwrap_err(), TautError::InvalidPair(2, 2));
        let other = TautRing::new(3, 2);
        assert!(matches!(r.point(1).unwrap().mul(&other.point(1).unwrap()), Err(TautError::AmbientMismatch(..))));
    }

    #[test]
    fn cascade_through_a_path() {
        // x₁ · Δ₁₂ · Δ₂₃ = x₁x₂x₃
        let r = ring(3);
        let a = r.diagonal(2, 3).unwrap().mul(&r.diagonal(1, 2).unwrap()).unwrap().mul(&r.point(1).unwrap()).unwrap();
        assert_eq!(a.to_string(), "x1*x2*x3");
    }

    #[test]
    fn json_shape() {
        let s = scorza_class(1, 2, 2, 3).unwrap();
        let v = s.to_json();
        assert_eq!(v[0]["coeff"], "2");
        assert_eq!(v[2]["edges"], serde_json::json!([[1, 2]]));
    }
}
