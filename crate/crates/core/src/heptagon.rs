//! Heptagons (seven labeled lines, no three concurrent), their residual
//! points, and the adjoint quartic through those points.
//!
//! Labels are 1-based in every public interface. Lines `i` and `j` are
//! consecutive when they differ by one mod 7; the 14 non-consecutive pairs
//! meet in the residual points, split into 7 inner points (labels two apart)
//! and 7 outer points (three apart).

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};
use thiserror::Error;

use crate::exactfield::{Field, FieldElement, FieldError, Fp, NumberFieldTower, PrimeSpec, RootChoice};
use crate::linalg::Matrix;
use crate::projgeom::{collinear, concurrent, det3, join, meet, monomials, Form, GeomError, ProjLine, ProjPoint, QuarticForm};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum HeptagonError {
    #[error("expected 7 lines, got {0}")]
    WrongCount(usize),
    #[error("lines {0} and {1} coincide")]
    DuplicateLines(usize, usize),
    #[error("lines {0}, {1}, {2} meet in a point")]
    ConcurrentTriple(usize, usize, usize),
    #[error("adjoint is not unique: kernel dimension {0}")]
    DegenerateHeptagon(usize),
    #[error("points {0} and {1} of the tuple coincide")]
    IdenticalPoints(usize, usize),
    #[error("malformed heptagon JSON: {0}")]
    Json(String),
    #[error(transparent)]
    Geom(#[from] GeomError),
    #[error(transparent)]
    Field(#[from] FieldError),
}

/// Seven labeled lines, pairwise distinct, no three concurrent.
#[derive(Clone, Debug)]
pub struct Heptagon<F> {
    lines: [ProjLine<F>; 7],
}

/// Same labeled lines, each up to scaling.
impl<F: Field> PartialEq for Heptagon<F> {
    fn eq(&self, other: &Self) -> bool {
        self.lines == other.lines
    }
}

/// Cyclic distance between labels `i` and `j` (1-based).
pub fn label_distance(i: usize, j: usize) -> usize {
    let d = (i + 7 - j) % 7;
    d.min(7 - d)
}

/// Inner residual pairs in the order used by the inner-point map.
pub const INNER_ORDER: [(usize, usize); 7] = [(1, 3), (4, 6), (2, 7), (3, 5), (1, 6), (2, 4), (5, 7)];

/// Joins `(a, b)` of inner-tuple positions that recover lines `1..=7`.
pub const JOIN_ORDER: [(usize, usize); 7] = [(1, 5), (3, 6), (1, 4), (2, 6), (4, 7), (2, 5), (3, 7)];

/// The 14 relabelings preserving cyclic adjacency, as maps `new label -> old label`.
pub fn dihedral_relabelings() -> Vec<[usize; 7]> {
    let rotate = |k: usize| std::array::from_fn(|i| (i + k) % 7 + 1);
    let mut out: Vec<[usize; 7]> = (0..7).map(rotate).collect();
    // (2 7)(3 6)(4 5) fixes 1 and reverses the cycle
    let reflect: [usize; 7] = [1, 7, 6, 5, 4, 3, 2];
    for k in 0..7 {
        let r: [usize; 7] = rotate(k);
        out.push(std::array::from_fn(|i| r[reflect[i] - 1]));
    }
    out
}

pub fn validate<F: Field>(lines: Vec<ProjLine<F>>) -> Result<Heptagon<F>, HeptagonError> {
    let lines: [ProjLine<F>; 7] = lines.try_into().map_err(|v: Vec<_>| HeptagonError::WrongCount(v.len()))?;
    for i in 0..7 {
        for j in i + 1..7 {
            if lines[i] == lines[j] {
                return Err(HeptagonError::DuplicateLines(i + 1, j + 1));
            }
        }
    }
    for i in 0..7 {
        for j in i + 1..7 {
            for k in j + 1..7 {
                if concurrent(&lines[i], &lines[j], &lines[k]) {
                    return Err(HeptagonError::ConcurrentTriple(i + 1, j + 1, k + 1));
                }
            }
        }
    }
    Ok(Heptagon { lines })
}

impl<F: Field> Heptagon<F> {
    pub fn lines(&self) -> &[ProjLine<F>; 7] {
        &self.lines
    }

    /// Line with 1-based label `i`.
    pub fn line(&self, i: usize) -> &ProjLine<F> {
        &self.lines[i - 1]
    }

    /// `new[i] = old[perm[i]]` with 1-based labels. Relabeling preserves validity.
    pub fn relabel(&self, perm: &[usize; 7]) -> Self {
        Heptagon { lines: std::array::from_fn(|i| self.lines[perm[i] - 1].clone()) }
    }

    /// Lines in the order `L₇, …, L₁`.
    pub fn reversed(&self) -> Self {
        self.relabel(&[7, 6, 5, 4, 3, 2, 1])
    }

    /// Replace each line by a transformed one without re-validating; callers
    /// use this for maps known to preserve validity (collineations, scalings).
    pub fn map_lines(&self, f: impl Fn(&ProjLine<F>) -> ProjLine<F>) -> Self {
        Heptagon { lines: std::array::from_fn(|i| f(&self.lines[i])) }
    }

    pub fn map_field<G: Field>(&self, f: impl Fn(&F) -> G) -> Result<Heptagon<G>, HeptagonError> {
        let lines = self.lines.iter().map(|l| l.map(&f)).collect::<Result<Vec<_>, _>>()?;
        validate(lines)
    }

    pub fn meet(&self, i: usize, j: usize) -> ProjPoint<F> {
        meet(self.line(i), self.line(j)).expect("lines of a heptagon are distinct")
    }
}

/// The 14 points where non-consecutive lines meet.
#[derive(Clone, Debug)]
pub struct ResidualArrangement<F> {
    points: BTreeMap<(usize, usize), ProjPoint<F>>,
}

impl<F: Field> ResidualArrangement<F> {
    pub fn points(&self) -> &BTreeMap<(usize, usize), ProjPoint<F>> {
        &self.points
    }

    pub fn get(&self, i: usize, j: usize) -> Option<&ProjPoint<F>> {
        self.points.get(&(i.min(j), i.max(j)))
    }

    pub fn inner(&self) -> impl Iterator<Item = (&(usize, usize), &ProjPoint<F>)> {
        self.points.iter().filter(|((i, j), _)| label_distance(*i, *j) == 2)
    }

    pub fn outer(&self) -> impl Iterator<Item = (&(usize, usize), &ProjPoint<F>)> {
        self.points.iter().filter(|((i, j), _)| label_distance(*i, *j) == 3)
    }
}

pub fn residual<F: Field>(h: &Heptagon<F>) -> ResidualArrangement<F> {
    let mut points = BTreeMap::new();
    for i in 1..=7 {
        for j in i + 1..=7 {
            if label_distance(i, j) > 1 {
                points.insert((i, j), h.meet(i, j));
            }
        }
    }
    ResidualArrangement { points }
}

/// `Σ_{i=2}^{6} det(L₁|Lᵢ|Lᵢ₊₁) · ∏_{j ∉ {1,i,i+1}} Lⱼ` on raw coefficient
/// vectors. Multilinear in the seven vectors; no validity is assumed.
pub fn adjoint_formula_raw<F: Field>(l: &[[F; 3]; 7]) -> QuarticForm<F> {
    let term = |i: usize| {
        let rest: Vec<Form<F>> =
            (1..7).filter(|&j| j != i && j != i + 1).map(|j| Form::linear(l[j].clone())).collect();
        let prod = rest[0].mul(&rest[1]).mul(&rest[2]).mul(&rest[3]);
        prod.scale(&det3(&l[0], &l[i], &l[i + 1]))
    };
    let sum = (2..6).fold(term(1), |acc, i| acc.add(&term(i)));
    QuarticForm::from_form(sum)
}

pub fn adjoint_formula<F: Field>(h: &Heptagon<F>) -> QuarticForm<F> {
    adjoint_formula_raw(&std::array::from_fn(|i| h.lines[i].coeffs().clone()))
}

/// The 14×15 matrix of quartic monomials evaluated at the residual points.
pub fn residual_matrix<F: Field>(h: &Heptagon<F>) -> Matrix<F> {
    let res = residual(h);
    let rows = res
        .points()
        .values()
        .map(|p| {
            monomials(4)
                .into_iter()
                .map(|e| {
                    let c = p.coords();
                    c[0].pow(e[0] as u64).mul(&c[1].pow(e[1] as u64)).mul(&c[2].pow(e[2] as u64))
                })
                .collect()
        })
        .collect();
    Matrix::from_rows(rows)
}

/// Adjoint by exact elimination, normalized so its first nonzero coefficient is one.
#[derive(Clone, Debug)]
pub struct NullspaceAdjoint<F> {
    pub form: QuarticForm<F>,
    pub kernel_dim: usize,
}

pub fn adjoint_nullspace<F: Field>(h: &Heptagon<F>) -> Result<NullspaceAdjoint<F>, HeptagonError> {
    let kernel = residual_matrix(h).kernel()?;
    if kernel.len() != 1 {
        return Err(HeptagonError::DegenerateHeptagon(kernel.len()));
    }
    let v = kernel.into_iter().next().expect("one kernel vector");
    let k = v.iter().position(|x| !x.is_zero()).expect("kernel vector is nonzero");
    let s = v[k].inv()?;
    let form = QuarticForm::from_vec(v.iter().map(|x| x.mul(&s)).collect());
    Ok(NullspaceAdjoint { form, kernel_dim: 1 })
}

/// Non-collinearity of `p₃₅, p₃₆, p₄₆` plus `p₂₇` differing from all three.
#[derive(Clone, Debug)]
pub struct ThetaWitness<F> {
    pub p35: ProjPoint<F>,
    pub p36: ProjPoint<F>,
    pub p46: ProjPoint<F>,
    pub p27: ProjPoint<F>,
    pub noncollinear: bool,
    pub distinct: bool,
}

impl<F> ThetaWitness<F> {
    pub fn valid(&self) -> bool {
        self.noncollinear && self.distinct
    }
}

pub fn theta_witness<F: Field>(h: &Heptagon<F>) -> ThetaWitness<F> {
    let (p35, p36, p46, p27) = (h.meet(3, 5), h.meet(3, 6), h.meet(4, 6), h.meet(2, 7));
    let noncollinear = !collinear(&p35, &p36, &p46);
    let distinct = p27 != p35 && p27 != p36 && p27 != p46;
    ThetaWitness { p35, p36, p46, p27, noncollinear, distinct }
}

/// `(p₁₃, p₄₆, p₂₇, p₃₅, p₁₆, p₂₄, p₅₇)`.
#[derive(Clone, Debug)]
pub struct InnerTuple<F> {
    pub points: [ProjPoint<F>; 7],
}

impl<F: Field> PartialEq for InnerTuple<F> {
    fn eq(&self, other: &Self) -> bool {
        self.points == other.points
    }
}

pub fn inner_map<F: Field>(h: &Heptagon<F>) -> InnerTuple<F> {
    InnerTuple { points: std::array::from_fn(|k| h.meet(INNER_ORDER[k].0, INNER_ORDER[k].1)) }
}

/// Lines `(ℓ₁₅, ℓ₃₆, ℓ₁₄, ℓ₂₆, ℓ₄₇, ℓ₂₅, ℓ₃₇)` through the tuple's points.
pub fn heptagon_from_inner<F: Field>(t: &InnerTuple<F>) -> Result<Heptagon<F>, HeptagonError> {
    let lines = JOIN_ORDER
        .iter()
        .map(|&(a, b)| join(&t.points[a - 1], &t.points[b - 1]).map_err(|_| HeptagonError::IdenticalPoints(a, b)))
        .collect::<Result<Vec<_>, _>>()?;
    validate(lines)
}

/// `∂(adjoint coefficients) / ∂(line coefficients)`: 15 rows in monomial
/// order, column `3(k-1) + c` for coordinate `c` of line `k`. By
/// multilinearity each column is the adjoint with that line replaced by a
/// unit vector.
pub fn adjoint_jacobian<F: Field>(h: &Heptagon<F>) -> Matrix<F> {
    adjoint_jacobian_raw(&std::array::from_fn(|i| h.lines[i].coeffs().clone()))
}

/// [`adjoint_jacobian`] on bare coefficient vectors, which need not form a
/// valid heptagon (e.g. after reduction modulo a prime).
pub fn adjoint_jacobian_raw<F: Field>(base: &[[F; 3]; 7]) -> Matrix<F> {
    let zero = base[0][0].zero_like();
    let one = base[0][0].one_like();
    let mut columns = Vec::with_capacity(21);
    for k in 0..7 {
        for c in 0..3 {
            let mut l = base.clone();
            l[k] = std::array::from_fn(|m| if m == c { one.clone() } else { zero.clone() });
            columns.push(adjoint_formula_raw(&l));
        }
    }
    Matrix::from_rows((0..15).map(|r| columns.iter().map(|q| q.coeffs()[r].clone()).collect()).collect())
}

/// How to certify a rank.
#[derive(Clone, Debug)]
pub enum RankMode {
    Exact,
    /// Rank of the image under a specialization to `F_p`; a lower bound for
    /// the exact rank, equal to it when full.
    Modular(PrimeSpec),
}

pub fn jacobian_rank(m: &Matrix<FieldElement>, mode: &RankMode) -> Result<usize, HeptagonError> {
    Ok(match mode {
        RankMode::Exact => m.rank()?,
        RankMode::Modular(spec) => m.try_map(|x| spec.reduce(x))?.rank()?,
    })
}

/// Reduce a matrix modulo the prime of `spec`.
pub fn reduce_matrix(m: &Matrix<FieldElement>, spec: &PrimeSpec) -> Result<Matrix<Fp>, FieldError> {
    m.try_map(|x| spec.reduce(x))
}

/// 1-based column indices of the distinguished 15×15 Jacobian minor.
pub const MINOR_COLUMNS: [usize; 15] = [1, 2, 3, 4, 5, 7, 8, 10, 11, 13, 14, 16, 17, 19, 20];

pub fn minor_columns_zero_based() -> Vec<usize> {
    MINOR_COLUMNS.iter().map(|c| c - 1).collect()
}

/// A valid heptagon with random integer line coefficients in `-bound..=bound`;
/// invalid draws are resampled.
pub fn random_rational_heptagon(seed: u64, bound: i64) -> Heptagon<FieldElement> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        let lines: Result<Vec<_>, _> = (0..7)
            .map(|_| ProjLine::new(std::array::from_fn(|_| FieldElement::int(rng.gen_range(-bound..=bound)))))
            .collect();
        if let Ok(h) = lines.map_err(HeptagonError::from).and_then(validate) {
            return h;
        }
    }
}

/// The coordinate field a heptagon file is written over.
#[derive(Clone, Debug)]
pub struct HeptagonFile {
    pub tower: NumberFieldTower,
    /// 0 for rational input, the tower depth otherwise.
    pub depth: usize,
    pub heptagon: Heptagon<FieldElement>,
}

impl HeptagonFile {
    pub fn from_json(v: &Value) -> Result<Self, HeptagonError> {
        let field = v.get("field").and_then(Value::as_str).unwrap_or("rational");
        let (tower, depth) = match field {
            "rational" => (NumberFieldTower::cyclotomic7(), 0),
            "klein-tower" => {
                let moduli = v
                    .get("moduli")
                    .and_then(Value::as_array)
                    .ok_or_else(|| HeptagonError::Json("klein-tower input needs \"moduli\"".into()))?;
                let names: Vec<String> = match v.get("generators").and_then(Value::as_array) {
                    Some(a) => a.iter().map(|x| x.as_str().unwrap_or("t").to_string()).collect(),
                    None => (0..moduli.len()).map(|k| ["ζ", "α"].get(k).unwrap_or(&"t").to_string()).collect(),
                };
                let names: Vec<&str> = names.iter().map(String::as_str).collect();
                let tower = NumberFieldTower::from_moduli(moduli, &names, RootChoice::MostReal)?;
                let depth = tower.depth();
                (tower, depth)
            }
            other => return Err(HeptagonError::Json(format!("unknown field {other:?}"))),
        };
        let lines = v
            .get("lines")
            .and_then(Value::as_array)
            .ok_or_else(|| HeptagonError::Json("missing \"lines\" array".into()))?;
        let lines = lines
            .iter()
            .map(|l| ProjLine::from_json(l, &tower, depth))
            .collect::<Result<Vec<_>, _>>()?;
        let heptagon = validate(lines)?;
        Ok(HeptagonFile { tower, depth, heptagon })
    }

    pub fn to_json(&self) -> Value {
        let lines: Vec<Value> = self.heptagon.lines().iter().map(|l| l.to_json(&self.tower, self.depth)).collect();
        if self.depth == 0 {
            json!({ "field": "rational", "lines": lines })
        } else {
            let names: Vec<&str> = self.tower.levels().iter().map(|l| l.name()).collect();
            json!({
                "field": "klein-tower",
                "moduli": self.tower.moduli_json(),
                "generators": names,
                "lines": lines,
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vandermonde() -> Heptagon<FieldElement> {
        let rows = [[1, 0, 0], [0, 1, 0], [0, 0, 1], [1, 1, 1], [1, 2, 4], [1, 3, 9], [1, 5, 25]];
        validate(rows.iter().map(|r| ProjLine::new(r.map(FieldElement::int)).unwrap()).collect()).unwrap()
    }

    #[test]
    fn validation_errors() {
        let ln = |a: i64, b: i64, c: i64| ProjLine::new([a, b, c].map(FieldElement::int)).unwrap();
        let mut v: Vec<_> = vandermonde().lines().to_vec();
        v[3] = ln(1, 1, 0);
        assert_eq!(validate(v.clone()), Err(HeptagonError::ConcurrentTriple(1, 2, 4)));
        v[3] = ln(2, 0, 0);
        assert_eq!(validate(v), Err(HeptagonError::DuplicateLines(1, 4)));
    }

    #[test]
    fn residual_points_and_classes() {
        let h = vandermonde();
        let r = residual(&h);
        assert_eq!(r.points().len(), 14);
        assert!(r.get(1, 2).is_none());
        let inner: Vec<_> = r.inner().map(|(k, _)| *k).collect();
        assert_eq!(inner, vec![(1, 3), (1, 6), (2, 4), (2, 7), (3, 5), (4, 6), (5, 7)]);
        assert_eq!(r.outer().count(), 7);
        let pts: Vec<_> = r.points().values().collect();
        for i in 0..14 {
            for j in i + 1..14 {
                assert!(pts[i] != pts[j]);
            }
        }
    }

    #[test]
    fn formula_and_nullspace_agree() {
        let h = vandermonde();
        let q = adjoint_formula(&h);
        for p in residual(&h).points().values() {
            assert!(q.eval(p).is_zero());
        }
        let n = adjoint_nullspace(&h).unwrap();
        assert_eq!(n.kernel_dim, 1);
        assert!(n.form.proportional_to(&q));
        assert!(theta_witness(&h).valid());
    }

    #[test]
    fn round_trip_through_inner_points() {
        let h = vandermonde();
        let t = inner_map(&h);
        assert_eq!(heptagon_from_inner(&t).unwrap(), h);
        let mut bad = t.clone();
        bad.points[4] = bad.points[0].clone();
        assert_eq!(heptagon_from_inner(&bad), Err(HeptagonError::IdenticalPoints(1, 5)));
    }

    #[test]
    fn dihedral_group_has_fourteen_elements() {
        let d = dihedral_relabelings();
        assert_eq!(d.len(), 14);
        let set: std::collections::BTreeSet<_> = d.iter().collect();
        assert_eq!(set.len(), 14);
        assert!(d.contains(&[1, 7, 6, 5, 4, 3, 2]));
        assert!(d.contains(&[2, 3, 4, 5, 6, 7, 1]));
    }

    #[test]
    fn jacobian_shape_and_rank() {
        let h = vandermonde();
        let j = adjoint_jacobian(&h);
        assert_eq!((j.rows(), j.cols()), (15, 21));
        assert_eq!(jacobian_rank(&j, &RankMode::Exact).unwrap(), 15);
    }

    #[test]
    fn json_round_trip() {
        let f = HeptagonFile { tower: NumberFieldTower::cyclotomic7(), depth: 0, heptagon: vandermonde() };
        let v = f.to_json();
        assert_eq!(v["lines"][4], json!(["1", "2", "4"]));
        let back = HeptagonFile::from_json(&v).unwrap();
        assert_eq!(back.heptagon, f.heptagon);
        let ints = json!({"field": "rational", "lines": [[1,0,0],[0,1,0],[0,0,1],[1,1,1],[1,2,4],[1,3,9],[1,5,25]]});
        assert_eq!(HeptagonFile::from_json(&ints).unwrap().heptagon, f.heptagon);
    }
}
