//! The Klein quartic `f = x³y + y³z + z³x`: its automorphism group of order
//! 168, an explicit heptagon whose adjoint is `f`, and the fiber of 336
//! labeled heptagons obtained by moving that heptagon (and its reversal)
//! around with the group.
//!
//! Everything is exact over the tower `Q ⊂ Q(ζ) ⊂ Q(ζ)(α)`, where
//! `α⁷ = −(b+1)/b³` and `b = (a₁−a₂)/(a₃−a₁)` comes from the coefficients of
//! `g = f∘ψ = a₁x³y + a₂y³z + a₃z³x`. Modular reduction is used only for
//! rank certificates and as a fingerprint when deduplicating; equality
//! decisions are always confirmed exactly.
//!
//! Verification steps produce [`Certificate`]s. Steps the rest of the
//! pipeline depends on abort with [`KleinError::Certificate`] when they fail;
//! the others are recorded and reported.

use std::collections::{BTreeMap, HashMap};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};
use thiserror::Error;

use crate::exactfield::{
    embed_unchecked, Approx, DensePolynomial, Field, FieldElement, FieldError, Fp, NumberFieldTower, PrimeSpec,
    RootChoice,
};
use crate::heptagon::{
    adjoint_formula, adjoint_formula_raw, adjoint_jacobian, adjoint_jacobian_raw, minor_columns_zero_based,
    residual, theta_witness, validate, Heptagon, HeptagonError, HeptagonFile,
};
use crate::linalg::Matrix;
use crate::projgeom::{join, Form, GeomError, ProjLine, ProjPoint, ProjTransform, QuarticForm};

/// Where the modular prime search starts unless told otherwise.
pub const DEFAULT_PRIME_SEED: u64 = 1_000_000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum KleinError {
    #[error("certificate {name} failed: {detail}")]
    Certificate { name: String, detail: String },
    #[error("thread pool: {0}")]
    ThreadPool(String),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Geom(#[from] GeomError),
    #[error(transparent)]
    Heptagon(#[from] HeptagonError),
}

/// One named check with its outcome.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Certificate {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Clone, Debug, Default)]
struct Ledger(Vec<Certificate>);

impl Ledger {
    fn record(&mut self, name: &str, passed: bool, detail: impl Into<String>) -> bool {
        self.0.push(Certificate { name: name.into(), passed, detail: detail.into() });
        passed
    }

    fn require(&mut self, name: &str, passed: bool, detail: impl Into<String>) -> Result<(), KleinError> {
        let detail = detail.into();
        if self.record(name, passed, detail.clone()) {
            Ok(())
        } else {
            Err(KleinError::Certificate { name: name.into(), detail })
        }
    }
}

/// The quartic, its symmetries and the tower they live in.
#[derive(Clone, Debug)]
pub struct KleinContext {
    pub tower: NumberFieldTower,
    pub zeta: FieldElement,
    pub b: FieldElement,
    pub alpha: FieldElement,
    pub f: QuarticForm<FieldElement>,
    /// `f∘ψ`.
    pub g: QuarticForm<FieldElement>,
    pub phi: ProjTransform<FieldElement>,
    pub rho: ProjTransform<FieldElement>,
    pub sigma: ProjTransform<FieldElement>,
    pub psi: ProjTransform<FieldElement>,
    pub a1: FieldElement,
    pub a2: FieldElement,
    pub a3: FieldElement,
    pub e1: ProjPoint<FieldElement>,
    pub e2: ProjPoint<FieldElement>,
    pub e3: ProjPoint<FieldElement>,
    pub root_choice: RootChoice,
    pub certificates: Vec<Certificate>,
}

/// `Σ c_k ζ^k`.
fn zeta_poly(tower: &NumberFieldTower, c: &[i64]) -> FieldElement {
    tower.element(1, c.iter().map(|&n| FieldElement::int(n)).collect()).expect("rational coefficients")
}

fn zeta_pow(tower: &NumberFieldTower, k: usize) -> FieldElement {
    let mut c = vec![0; k + 1];
    c[k] = 1;
    zeta_poly(tower, &c)
}

/// The reference closed forms for `a₁, a₂, a₃`, evaluated in `Q(ζ)`.
pub fn reference_coefficients(tower: &NumberFieldTower) -> [FieldElement; 3] {
    let one_plus_zeta = zeta_poly(tower, &[1, 1]);
    let term = |s: i64, c: &[i64]| FieldElement::int(s).mul(&one_plus_zeta).mul(&zeta_poly(tower, c));
    [
        term(-7, &[2, -11, 6, -1, -4, 9]),
        term(7, &[-2, -3, 8, 1, -10, 5]),
        term(7, &[-2, -3, -6, 1, 4, 5]),
    ]
}

/// The diagonal entries of `ψ`.
pub fn psi_diagonal(tower: &NumberFieldTower) -> [FieldElement; 3] {
    [
        zeta_poly(tower, &[0, -2, 2, 0, 1, 0, -1]),
        zeta_poly(tower, &[0, 2, 1, -1, -2]),
        zeta_poly(tower, &[0, 1, -2, 0, 2, -1]),
    ]
}

fn linear_forms(t: &ProjTransform<FieldElement>) -> Vec<Form<FieldElement>> {
    t.matrix().iter().map(|row| Form::linear(row.clone())).collect()
}

/// `q∘T`, the pullback along `T`.
pub fn pullback(q: &QuarticForm<FieldElement>, t: &ProjTransform<FieldElement>) -> QuarticForm<FieldElement> {
    q.substitute(&linear_forms(t))
}

fn describe(x: &FieldElement) -> String {
    let v = embed_unchecked(x).value;
    format!("{x} ≈ {:.6}{:+.6}i", v.re, v.im)
}

fn unit_point(k: usize) -> ProjPoint<FieldElement> {
    ProjPoint::new(std::array::from_fn(|i| FieldElement::int((i == k) as i64))).expect("nonzero")
}

/// Build ζ, ψ, the coefficients of `f∘ψ`, `b`, and the extension by `α`.
pub fn build_context(root_choice: RootChoice) -> Result<KleinContext, KleinError> {
    let mut ledger = Ledger::default();
    let base = NumberFieldTower::cyclotomic7();
    let zeta = base.generator(1);
    let z = |k: usize| zeta_pow(&base, k);
    let (zero, one) = (FieldElement::zero(), FieldElement::one());
    let f = QuarticForm::klein(&zero);

    let phi = ProjTransform::diagonal([z(4), z(2), z(1)])?;
    let rho = ProjTransform::new([
        [zero.clone(), zero.clone(), one.clone()],
        [one.clone(), zero.clone(), zero.clone()],
        [zero.clone(), one.clone(), zero.clone()],
    ])?;
    let s = [z(1).sub(&z(6)), z(2).sub(&z(5)), z(4).sub(&z(3))];
    let sigma = ProjTransform::new([
        [s[0].clone(), s[1].clone(), s[2].clone()],
        [s[1].clone(), s[2].clone(), s[0].clone()],
        [s[2].clone(), s[0].clone(), s[1].clone()],
    ])?;
    let psi = ProjTransform::diagonal(psi_diagonal(&base))?;

    ledger.record("phi_preserves_f", pullback(&f, &phi) == f, "f∘φ = f");
    ledger.record("rho_preserves_f", pullback(&f, &rho) == f, "f∘ρ = f");
    ledger.record("sigma_preserves_f", pullback(&f, &sigma).proportional_to(&f), "f∘σ ∝ f");
    let sq = sigma.compose(&sigma);
    ledger.record("sigma_is_involution", sq.proportional_to(&ProjTransform::identity(&zero)), "σ² is scalar");

    let g = pullback(&f, &psi);
    let (ea1, ea2, ea3) = ([3, 1, 0], [0, 3, 1], [1, 0, 3]);
    let support: Vec<String> = crate::projgeom::monomials(4)
        .into_iter()
        .filter(|e| !g.coeff(*e).is_zero())
        .map(|e| format!("x^{}y^{}z^{}", e[0], e[1], e[2]))
        .collect();
    let three = [ea1, ea2, ea3].iter().all(|e| !g.coeff(*e).is_zero()) && support.len() == 3;
    ledger.require("g_three_monomials", three, format!("support of f∘ψ: {}", support.join(", ")))?;
    let (a1, a2, a3) = (g.coeff(ea1).clone(), g.coeff(ea2).clone(), g.coeff(ea3).clone());

    let reference = reference_coefficients(&base);
    let computed = [&a1, &a2, &a3];
    let mut detail = Vec::new();
    for k in 0..3 {
        let verdict = if *computed[k] == reference[k] { "equal" } else { "differ" };
        detail.push(format!(
            "a{}: computed {} vs reference {} ({verdict})",
            k + 1,
            describe(computed[k]),
            describe(&reference[k])
        ));
    }
    ledger.record("a_closed_forms", (0..3).all(|k| *computed[k] == reference[k]), detail.join("; "));

    let b = a1.sub(&a2).div(&a3.sub(&a1))?;
    let cubic = b.pow(3).add(&b.square()).sub(&b.add(&b)).sub(&one);
    ledger.require("b_cubic", cubic.is_zero(), format!("b = {}; b³+b²−2b−1 = {cubic}", describe(&b)))?;

    // t⁷ + (b+1)/b³
    let c = b.add(&one).div(&b.pow(3))?;
    let mut coeffs = vec![zero.clone(); 8];
    coeffs[0] = c;
    coeffs[7] = one.clone();
    let tower = base.extend(&DensePolynomial::new(coeffs), "α", root_choice)?;
    let alpha = tower.generator(2);
    let alpha7 = alpha.pow(7);
    let expected = b.add(&one).neg().div(&b.pow(3))?;
    ledger.require("alpha_power", alpha7 == expected, "α⁷ = −(b+1)/b³")?;

    let (e1, e2, e3) = (unit_point(0), unit_point(1), unit_point(2));
    let on_both = [&e1, &e2, &e3].iter().all(|e| f.eval(e).is_zero() && g.eval(e).is_zero());
    ledger.record("coordinate_points_on_f_and_g", on_both, "e₁, e₂, e₃ lie on f and g");

    Ok(KleinContext {
        tower,
        zeta,
        b,
        alpha,
        f,
        g,
        phi,
        rho,
        sigma,
        psi,
        a1,
        a2,
        a3,
        e1,
        e2,
        e3,
        root_choice,
        certificates: ledger.0,
    })
}

/// `R(α) = [bα³ : α : 1]`.
fn r_point(ctx: &KleinContext, a: &FieldElement) -> Result<ProjPoint<FieldElement>, GeomError> {
    ProjPoint::new([ctx.b.mul(&a.pow(3)), a.clone(), FieldElement::one()])
}

/// `R₁, …, R₇` with `R₁ = R(α)` and `R_{i+1} = φ(R_i)`; all on `f` and `g`.
pub fn base_points(ctx: &KleinContext) -> Result<(Vec<ProjPoint<FieldElement>>, Vec<Certificate>), KleinError> {
    let mut ledger = Ledger::default();
    let mut pts = vec![r_point(ctx, &ctx.alpha)?];
    for i in 1..7 {
        pts.push(crate::projgeom::act_point(&ctx.phi, &pts[i - 1]));
    }
    let shift = (0..7).try_fold(true, |ok, i| -> Result<bool, KleinError> {
        let rotated = r_point(ctx, &ctx.zeta.pow(i as u64).mul(&ctx.alpha))?;
        Ok(ok && rotated == pts[i])
    })?;
    ledger.require("phi_rotates_alpha", shift, "φ(R(α)) = R(ζα)")?;
    let on_f: Vec<bool> = pts.iter().map(|p| ctx.f.eval(p).is_zero()).collect();
    let on_g: Vec<bool> = pts.iter().map(|p| ctx.g.eval(p).is_zero()).collect();
    ledger.require("base_points_on_f", on_f.iter().all(|&x| x), format!("f(R_i) = 0: {on_f:?}"))?;
    ledger.require("base_points_on_g", on_g.iter().all(|&x| x), format!("g(R_i) = 0: {on_g:?}"))?;
    Ok((pts, ledger.0))
}

/// Whether the heptagon form of `R_i` with an extra `ζ³` factor lies on `f`.
pub fn zeta_cubed_point_on_f(ctx: &KleinContext) -> Result<bool, KleinError> {
    let z3 = ctx.zeta.pow(3);
    let p = ProjPoint::new([ctx.b.mul(&z3).mul(&ctx.alpha.pow(3)), ctx.alpha.clone(), FieldElement::one()])?;
    Ok(ctx.f.eval(&p).is_zero())
}

/// How a fiber heptagon arose from the base heptagon.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Orientation {
    /// `(L₁, …, L₇)`
    Forward,
    /// `(L₇, …, L₁)`
    Reversed,
}

#[derive(Clone, Debug)]
pub struct FiberHeptagon {
    pub heptagon: Heptagon<FieldElement>,
    /// Index into [`KleinGroup::elements`].
    pub element: usize,
    pub orientation: Orientation,
}

/// `L_i = R_{i−2} R_i` (indices mod 7), validated and checked against `f`.
pub fn base_heptagon(
    ctx: &KleinContext,
    points: &[ProjPoint<FieldElement>],
) -> Result<(FiberHeptagon, Vec<Certificate>), KleinError> {
    let mut ledger = Ledger::default();
    let r = |i: usize| &points[(i + 6) % 7];
    let lines = (1..=7).map(|i| join(r(i + 5), r(i))).collect::<Result<Vec<_>, _>>()?;
    let h = validate(lines)?;
    let res = residual(&h);
    let off: Vec<String> =
        res.points().iter().filter(|(_, p)| !ctx.f.eval(p).is_zero()).map(|(k, _)| format!("p{}{}", k.0, k.1)).collect();
    ledger.require("base_residual_on_f", off.is_empty(), format!("residual points off f: {off:?}"))?;
    let inner: Vec<_> = res.inner().map(|(_, p)| p.clone()).collect();
    let same = inner.iter().all(|p| points.contains(p)) && points.iter().all(|p| inner.contains(p));
    ledger.record("base_inner_points_are_r", same, "inner residual points = {R₁, …, R₇}");
    let on_g: Vec<ProjPoint<FieldElement>> =
        res.points().values().filter(|p| ctx.g.eval(p).is_zero()).cloned().collect();
    let common = on_g.len() == 7 && on_g.iter().all(|p| points.contains(p));
    ledger.record("common_zeros", common, "residual points on g are exactly R₁, …, R₇");
    let outer_psi = res.outer().all(|(_, q)| points.iter().any(|p| crate::projgeom::act_point(&ctx.psi, p) == *q));
    ledger.record("outer_points_are_psi_images", outer_psi, "outer residual points = ψ(R_i)");
    let adj = adjoint_formula(&h);
    ledger.require("base_adjoint_is_f", adj.proportional_to(&ctx.f), "adjoint(L₁, …, L₇) ∝ x³y + y³z + z³x")?;
    let w = theta_witness(&h);
    ledger.record("base_theta_witness", w.valid(), "p35, p36, p46 non-collinear; p27 distinct from them");
    Ok((FiberHeptagon { heptagon: h, element: 0, orientation: Orientation::Forward }, ledger.0))
}

/// The projective group generated by `φ`, `ρ`, `σ`, elements normalized so
/// the first nonzero entry is one. Element 0 is the identity.
#[derive(Clone, Debug)]
pub struct KleinGroup {
    pub elements: Vec<ProjTransform<FieldElement>>,
    /// Projective order of each element.
    pub orders: Vec<u32>,
}

impl KleinGroup {
    pub fn order(&self) -> usize {
        self.elements.len()
    }

    /// Element orders with their multiplicities.
    pub fn order_statistics(&self) -> BTreeMap<u32, usize> {
        let mut out = BTreeMap::new();
        for &o in &self.orders {
            *out.entry(o).or_insert(0) += 1;
        }
        out
    }

    /// Each subgroup of order 7 contains 6 elements of order 7.
    pub fn sylow7_count(&self) -> usize {
        self.orders.iter().filter(|&&o| o == 7).count() / 6
    }

    /// Index of the element proportional to `t`.
    pub fn index_of(&self, t: &ProjTransform<FieldElement>) -> Option<usize> {
        let n = t.normalized().ok()?;
        self.elements.iter().position(|e| *e == n)
    }
}

fn key(t: &ProjTransform<FieldElement>) -> Vec<FieldElement> {
    t.matrix().iter().flatten().cloned().collect()
}

fn projective_order(t: &ProjTransform<FieldElement>, limit: u32) -> Option<u32> {
    let id = ProjTransform::identity(&FieldElement::zero());
    let mut p = t.clone();
    for k in 1..=limit {
        if p.proportional_to(&id) {
            return Some(k);
        }
        p = p.compose(t).normalized().ok()?;
    }
    None
}

/// Closure of `⟨φ, ρ, σ⟩`; aborts past `limit` elements.
pub fn generate_group(ctx: &KleinContext, limit: usize) -> Result<(KleinGroup, Vec<Certificate>), KleinError> {
    let mut ledger = Ledger::default();
    let gens = [ctx.phi.normalized()?, ctx.rho.normalized()?, ctx.sigma.normalized()?];
    let id = ProjTransform::identity(&FieldElement::zero());
    let mut elements = vec![id.clone()];
    let mut seen: HashMap<Vec<FieldElement>, usize> = HashMap::from([(key(&id), 0)]);
    let mut next = 0;
    while next < elements.len() {
        for s in &gens {
            let t = s.compose(&elements[next]).normalized()?;
            let k = key(&t);
            if let std::collections::hash_map::Entry::Vacant(e) = seen.entry(k) {
                e.insert(elements.len());
                elements.push(t);
                if elements.len() > limit {
                    return Err(KleinError::Certificate {
                        name: "group_order".into(),
                        detail: format!("closure exceeded {limit} elements"),
                    });
                }
            }
        }
        next += 1;
    }
    let orders = elements
        .par_iter()
        .map(|t| projective_order(t, 168).unwrap_or(0))
        .collect::<Vec<_>>();
    let group = KleinGroup { elements, orders };
    let n = group.order();
    ledger.require("group_order", n == 168, format!("|⟨φ, ρ, σ⟩| = {n}"))?;
    let gen_orders: Vec<u32> = gens.iter().map(|t| projective_order(t, 168).unwrap_or(0)).collect();
    ledger.record("generator_orders", gen_orders == [7, 3, 2], format!("orders of φ, ρ, σ: {gen_orders:?}"));
    let bad: Vec<usize> =
        (0..n).into_par_iter().filter(|&i| !pullback(&ctx.f, &group.elements[i]).proportional_to(&ctx.f)).collect();
    ledger.require("group_preserves_f", bad.is_empty(), format!("elements not preserving f: {bad:?}"))?;
    let stats = group.order_statistics();
    ledger.record("sylow7_count", group.sylow7_count() == 8, format!("{} subgroups of order 7; element orders {stats:?}", group.sylow7_count()));
    Ok((group, ledger.0))
}

/// Normalized line coordinates modulo `p`; `None` if some line reduces to zero.
type Fingerprint = Option<[[u64; 3]; 7]>;

fn reduce_lines(h: &Heptagon<FieldElement>, spec: &PrimeSpec) -> Result<[[Fp; 3]; 7], FieldError> {
    let mut out = [[Fp::new(0, spec.p); 3]; 7];
    for (row, l) in out.iter_mut().zip(h.lines()) {
        for (x, c) in row.iter_mut().zip(l.coeffs()) {
            *x = spec.reduce(c)?;
        }
    }
    Ok(out)
}

fn fingerprint(h: &Heptagon<FieldElement>, spec: &PrimeSpec) -> Result<Fingerprint, FieldError> {
    let lines = reduce_lines(h, spec)?;
    let mut out = [[0u64; 3]; 7];
    for (i, l) in lines.iter().enumerate() {
        let Some(pivot) = l.iter().find(|x| !x.is_zero()) else {
            return Ok(None);
        };
        let s = pivot.inv()?;
        for c in 0..3 {
            out[i][c] = l[c].mul(&s).value();
        }
    }
    Ok(Some(out))
}

/// Exact equality classes, bucketed by fingerprint.
struct Dedup {
    buckets: HashMap<Fingerprint, Vec<usize>>,
    /// Representative index for each input.
    class: Vec<usize>,
}

impl Dedup {
    fn new(hs: &[&Heptagon<FieldElement>], prints: &[Fingerprint]) -> Self {
        let mut buckets: HashMap<Fingerprint, Vec<usize>> = HashMap::new();
        let mut class = Vec::with_capacity(hs.len());
        for (i, fp) in prints.iter().enumerate() {
            let b = buckets.entry(*fp).or_default();
            let rep = b.iter().copied().find(|&j| hs[j] == hs[i]);
            class.push(rep.unwrap_or(i));
            if rep.is_none() {
                b.push(i);
            }
        }
        Dedup { buckets, class }
    }

    fn distinct(&self) -> usize {
        self.buckets.values().map(Vec::len).sum()
    }

    fn find(&self, hs: &[&Heptagon<FieldElement>], h: &Heptagon<FieldElement>, fp: &Fingerprint) -> Option<usize> {
        self.buckets.get(fp)?.iter().copied().find(|&j| hs[j] == h)
    }
}

/// Counts gathered while enumerating the fiber.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FiberStats {
    pub orbit_sizes: [usize; 2],
    pub distinct_labeled: usize,
    pub cyclic_classes: [usize; 2],
    pub free: bool,
    pub orbits_disjoint: bool,
    pub adjoint_failures: Vec<usize>,
    pub residual_failures: Vec<usize>,
}

fn find_root(parent: &mut [usize], mut i: usize) -> usize {
    while parent[i] != i {
        parent[i] = parent[parent[i]];
        i = parent[i];
    }
    i
}

/// The images of the base heptagon and of its reversal under every group
/// element, forward orbit first.
pub fn enumerate_fiber(
    ctx: &KleinContext,
    group: &KleinGroup,
    base: &FiberHeptagon,
    spec: &PrimeSpec,
) -> Result<(Vec<FiberHeptagon>, FiberStats, Vec<Certificate>), KleinError> {
    let mut ledger = Ledger::default();
    let n = group.order();
    let sources = [(Orientation::Forward, base.heptagon.clone()), (Orientation::Reversed, base.heptagon.reversed())];
    let fiber: Vec<FiberHeptagon> = sources
        .iter()
        .flat_map(|(o, h)| (0..n).map(move |e| (*o, h, e)))
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|(orientation, h, element)| {
            let t = &group.elements[element];
            let heptagon = h.map_lines(|l| crate::projgeom::act_line(t, l));
            FiberHeptagon { heptagon, element, orientation }
        })
        .collect();
    let hs: Vec<&Heptagon<FieldElement>> = fiber.iter().map(|f| &f.heptagon).collect();
    let prints = hs.par_iter().map(|h| fingerprint(h, spec)).collect::<Result<Vec<_>, _>>()?;

    let mut orbit_sizes = [0; 2];
    let mut cyclic_classes = [0; 2];
    for o in 0..2 {
        let range = o * n..(o + 1) * n;
        let sub: Vec<&Heptagon<FieldElement>> = hs[range.clone()].to_vec();
        let dedup = Dedup::new(&sub, &prints[range.clone()]);
        orbit_sizes[o] = dedup.distinct();
        let mut parent: Vec<usize> = (0..n).collect();
        let rot = [2, 3, 4, 5, 6, 7, 1];
        let mut closed = true;
        for i in 0..n {
            let r = sub[i].relabel(&rot);
            match dedup.find(&sub, &r, &fingerprint(&r, spec)?) {
                Some(j) => {
                    let (a, b) = (find_root(&mut parent, dedup.class[i]), find_root(&mut parent, j));
                    parent[a] = b;
                }
                None => closed = false,
            }
        }
        ledger.record(
            &format!("rotation_preserves_orbit_{}", o + 1),
            closed,
            "cyclic relabeling maps the orbit to itself",
        );
        let reps: std::collections::BTreeSet<usize> =
            (0..n).map(|i| dedup.class[i]).collect::<Vec<_>>().into_iter().map(|c| find_root(&mut parent, c)).collect();
        cyclic_classes[o] = reps.len();
    }
    let all = Dedup::new(&hs, &prints);
    let distinct_labeled = all.distinct();
    let free = orbit_sizes == [n, n];
    let orbits_disjoint = distinct_labeled == orbit_sizes[0] + orbit_sizes[1];

    let checks: Vec<(bool, bool)> = fiber
        .par_iter()
        .map(|fh| {
            let adj = adjoint_formula(&fh.heptagon).proportional_to(&ctx.f);
            let res = residual(&fh.heptagon).points().values().all(|p| ctx.f.eval(p).is_zero());
            (adj, res)
        })
        .collect();
    let adjoint_failures: Vec<usize> = (0..fiber.len()).filter(|&i| !checks[i].0).collect();
    let residual_failures: Vec<usize> = (0..fiber.len()).filter(|&i| !checks[i].1).collect();

    ledger.record("free_action", free, format!("orbit sizes {orbit_sizes:?} for a group of order {n}"));
    ledger.record("orbits_disjoint", orbits_disjoint, "no heptagon lies in both orbits");
    ledger.record("fiber_size", distinct_labeled == 336, format!("{distinct_labeled} distinct labeled heptagons"));
    ledger.record(
        "cyclic_classes",
        cyclic_classes == [24, 24],
        format!("classes modulo cyclic relabeling per orbit: {cyclic_classes:?}"),
    );
    ledger.record("fiber_adjoints", adjoint_failures.is_empty(), format!("adjoint not ∝ f at {adjoint_failures:?}"));
    ledger.record(
        "fiber_residual_on_f",
        residual_failures.is_empty(),
        format!("residual points off f at {residual_failures:?}"),
    );
    let stats =
        FiberStats { orbit_sizes, distinct_labeled, cyclic_classes, free, orbits_disjoint, adjoint_failures, residual_failures };
    Ok((fiber, stats, ledger.0))
}

/// Rank certificates for the adjoint Jacobian.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct JacobianReport {
    pub prime: u64,
    pub base_rank_modular: usize,
    pub base_minor_nonzero_modular: bool,
    pub base_rank_exact: Option<usize>,
    pub base_minor_nonzero_exact: Option<bool>,
    /// Number of fiber heptagons certified at rank 15, when the full fiber was checked.
    pub full_rank_count: Option<usize>,
    pub rank_deficient: Vec<usize>,
}

/// Rank of the Jacobian of `h` reduced modulo `spec`, computed from the
/// reduced line coordinates.
pub fn modular_jacobian(h: &Heptagon<FieldElement>, spec: &PrimeSpec) -> Result<Matrix<Fp>, FieldError> {
    Ok(adjoint_jacobian_raw(&reduce_lines(h, spec)?))
}

/// Modular rank and minor for the base heptagon, optionally the exact ones,
/// and optionally modular ranks for every fiber heptagon.
pub fn certify_jacobian(
    base: &FiberHeptagon,
    fiber: Option<&[FiberHeptagon]>,
    spec: &PrimeSpec,
    exact: bool,
) -> Result<(JacobianReport, Vec<Certificate>), KleinError> {
    let mut ledger = Ledger::default();
    let cols = minor_columns_zero_based();
    let jm = modular_jacobian(&base.heptagon, spec)?;
    let base_rank_modular = jm.rank()?;
    let base_minor_nonzero_modular = !jm.select_columns(&cols).determinant()?.is_zero();
    ledger.record("base_rank_modular", base_rank_modular == 15, format!("rank {base_rank_modular} mod {}", spec.p));
    ledger.record("base_minor_modular", base_minor_nonzero_modular, format!("listed 15×15 minor mod {}", spec.p));
    let (mut base_rank_exact, mut base_minor_nonzero_exact) = (None, None);
    if exact {
        let j = adjoint_jacobian(&base.heptagon);
        let r = j.rank()?;
        let m = !j.select_columns(&cols).determinant()?.is_zero();
        ledger.record("base_rank_exact", r == 15, format!("exact rank {r}"));
        ledger.record("base_minor_exact", m, "listed 15×15 minor, exact");
        base_rank_exact = Some(r);
        base_minor_nonzero_exact = Some(m);
    }
    let (mut full_rank_count, mut rank_deficient) = (None, Vec::new());
    if let Some(fiber) = fiber {
        let ranks = fiber
            .par_iter()
            .map(|fh| modular_jacobian(&fh.heptagon, spec).and_then(|m| m.rank()))
            .collect::<Result<Vec<_>, _>>()?;
        rank_deficient = (0..ranks.len()).filter(|&i| ranks[i] != 15).collect();
        let count = ranks.len() - rank_deficient.len();
        ledger.record(
            "fiber_rank_modular",
            rank_deficient.is_empty(),
            format!("{count} of {} fiber heptagons at rank 15 mod {}", ranks.len(), spec.p),
        );
        full_rank_count = Some(count);
    }
    let report = JacobianReport {
        prime: spec.p,
        base_rank_modular,
        base_minor_nonzero_modular,
        base_rank_exact,
        base_minor_nonzero_exact,
        full_rank_count,
        rank_deficient,
    };
    Ok((report, ledger.0))
}

/// Largest relative deviation between the exact Jacobian (embedded in ℂ) and
/// central finite differences of the adjoint map, at step `h`.
pub fn jacobian_finite_difference_error(heptagon: &Heptagon<FieldElement>, step: f64) -> f64 {
    let exact = adjoint_jacobian(heptagon).map(Approx::of);
    let lines: [[Approx; 3]; 7] = std::array::from_fn(|i| std::array::from_fn(|c| Approx::of(&heptagon.lines()[i].coeffs()[c])));
    let scale = (0..15)
        .flat_map(|r| (0..21).map(move |c| (r, c)))
        .map(|(r, c)| exact.get(r, c).0.norm())
        .fold(0.0, f64::max);
    let mut worst: f64 = 0.0;
    for k in 0..7 {
        for c in 0..3 {
            let shifted = |s: f64| {
                let mut l = lines;
                l[k][c] = Approx(l[k][c].0 + Complex64::new(s, 0.0));
                adjoint_formula_raw(&l)
            };
            let (plus, minus) = (shifted(step), shifted(-step));
            for r in 0..15 {
                let fd = (plus.coeffs()[r].0 - minus.coeffs()[r].0) / (2.0 * step);
                let err = (fd - exact.get(r, 3 * k + c).0).norm() / scale;
                worst = worst.max(err);
            }
        }
    }
    worst
}

/// How to pick the modular prime: an explicit prime (replaced by the next
/// usable one if it is bad) or a search start.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PrimeRequest {
    Exact(u64),
    SearchFrom(u64),
}

pub fn choose_prime(tower: &NumberFieldTower, req: PrimeRequest) -> Result<(PrimeSpec, Vec<String>), FieldError> {
    match req {
        PrimeRequest::SearchFrom(start) => Ok((PrimeSpec::search(tower, start)?, Vec::new())),
        PrimeRequest::Exact(p) => match PrimeSpec::for_prime(tower, p) {
            Ok(spec) => Ok((spec, Vec::new())),
            Err(e) => {
                let spec = PrimeSpec::search(tower, p.saturating_add(1))?;
                Ok((spec.clone(), vec![format!("{e}; retried with {}", spec.p)]))
            }
        },
    }
}

#[derive(Clone, Debug)]
pub struct KleinOptions {
    pub root: RootChoice,
    pub prime: PrimeRequest,
    /// Modular Jacobian ranks for all 336 heptagons.
    pub full_fiber: bool,
    /// Exact rank and minor for the base heptagon.
    pub exact_jacobian: bool,
    /// Worker threads; `None` uses the global pool.
    pub jobs: Option<usize>,
}

impl Default for KleinOptions {
    fn default() -> Self {
        KleinOptions {
            root: RootChoice::MostReal,
            prime: PrimeRequest::SearchFrom(DEFAULT_PRIME_SEED),
            full_fiber: false,
            exact_jacobian: false,
            jobs: None,
        }
    }
}

/// Serializable summary of a full run.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FiberReport {
    pub root_choice: String,
    pub alpha_embedding: [f64; 2],
    pub b_embedding: [f64; 2],
    pub prime: u64,
    pub group_order: usize,
    pub element_orders: BTreeMap<String, usize>,
    pub sylow7_subgroups: usize,
    pub orbit_sizes: [usize; 2],
    pub fiber_size: usize,
    pub cyclic_classes: usize,
    pub cyclic_classes_per_orbit: [usize; 2],
    pub free_action: bool,
    pub base_rank: usize,
    pub jacobian: JacobianReport,
    pub witness_valid: bool,
    pub notes: Vec<String>,
    pub certificates: Vec<Certificate>,
    pub all_passed: bool,
}

impl FiberReport {
    pub fn failed(&self) -> Vec<&Certificate> {
        self.certificates.iter().filter(|c| !c.passed).collect()
    }
}

/// Everything a run produces.
#[derive(Clone, Debug)]
pub struct KleinRun {
    pub context: KleinContext,
    pub points: Vec<ProjPoint<FieldElement>>,
    pub group: KleinGroup,
    pub base: FiberHeptagon,
    pub fiber: Vec<FiberHeptagon>,
    pub report: FiberReport,
}

fn pair(z: Complex64) -> [f64; 2] {
    [z.re, z.im]
}

/// The whole pipeline, on a dedicated thread pool when `jobs` is set.
pub fn run(opts: &KleinOptions) -> Result<KleinRun, KleinError> {
    match opts.jobs {
        Some(j) => rayon::ThreadPoolBuilder::new()
            .num_threads(j)
            .build()
            .map_err(|e| KleinError::ThreadPool(e.to_string()))?
            .install(|| run_inner(opts)),
        None => run_inner(opts),
    }
}

fn run_inner(opts: &KleinOptions) -> Result<KleinRun, KleinError> {
    let context = build_context(opts.root)?;
    let mut certificates = context.certificates.clone();
    let mut notes = vec![
        "R_i = [b·α_i³ : α_i : 1]; the variant with an extra ζ³ factor in the first coordinate does not lie on f"
            .to_string(),
        format!("α_i = ζ^(i−1)·α; α embeds via {}", context.tower.top().embedding().note),
    ];
    if zeta_cubed_point_on_f(&context)? {
        notes.push("the ζ³ variant of R₁ also lies on f".into());
    }
    let (points, c) = base_points(&context)?;
    certificates.extend(c);
    let (base, c) = base_heptagon(&context, &points)?;
    certificates.extend(c);
    let (group, c) = generate_group(&context, 2000)?;
    certificates.extend(c);
    let (spec, prime_notes) = choose_prime(&context.tower, opts.prime)?;
    notes.extend(prime_notes);
    let (fiber, stats, c) = enumerate_fiber(&context, &group, &base, &spec)?;
    certificates.extend(c);
    let (jacobian, c) = certify_jacobian(&base, opts.full_fiber.then_some(fiber.as_slice()), &spec, opts.exact_jacobian)?;
    certificates.extend(c);
    let witness_valid = theta_witness(&base.heptagon).valid();
    let all_passed = certificates.iter().all(|c| c.passed);
    let report = FiberReport {
        root_choice: format!("{:?}", opts.root),
        alpha_embedding: pair(embed_unchecked(&context.alpha).value),
        b_embedding: pair(embed_unchecked(&context.b).value),
        prime: spec.p,
        group_order: group.order(),
        element_orders: group.order_statistics().into_iter().map(|(k, v)| (k.to_string(), v)).collect(),
        sylow7_subgroups: group.sylow7_count(),
        orbit_sizes: stats.orbit_sizes,
        fiber_size: stats.distinct_labeled,
        cyclic_classes: stats.cyclic_classes.iter().sum(),
        cyclic_classes_per_orbit: stats.cyclic_classes,
        free_action: stats.free,
        base_rank: jacobian.base_rank_exact.unwrap_or(jacobian.base_rank_modular),
        jacobian,
        witness_valid,
        notes,
        certificates,
        all_passed,
    };
    Ok(KleinRun { context, points, group, base, fiber, report })
}

/// Line with its first nonzero coordinate scaled to one.
fn normalized_line(l: &ProjLine<FieldElement>) -> Result<ProjLine<FieldElement>, FieldError> {
    l.normalized()
}

/// The fiber as heptagon JSON documents over the tower, with provenance.
pub fn fiber_export(ctx: &KleinContext, fiber: &[FiberHeptagon]) -> Result<Value, KleinError> {
    let docs = fiber
        .par_iter()
        .map(|fh| -> Result<Value, KleinError> {
            let lines = fh.heptagon.lines().iter().map(normalized_line).collect::<Result<Vec<_>, _>>()?;
            let file = HeptagonFile { tower: ctx.tower.clone(), depth: ctx.tower.depth(), heptagon: validate(lines)? };
            let mut v = file.to_json();
            v["element"] = json!(fh.element);
            v["orientation"] = json!(fh.orientation);
            Ok(v)
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Value::Array(docs))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ctx() -> KleinContext {
        build_context(RootChoice::MostReal).unwrap()
    }

    #[test]
    fn klein_quartic_values() {
        let f = QuarticForm::klein(&FieldElement::zero());
        let p = |v: [i64; 3]| ProjPoint::new(v.map(FieldElement::int)).unwrap();
        assert!(f.eval(&p([1, 0, 0])).is_zero());
        assert_eq!(f.eval(&p([1, 1, 1])), FieldElement::int(3));
    }

    #[test]
    fn context_invariants() {
        let c = ctx();
        let passed = |n: &str| c.certificates.iter().find(|x| x.name == n).unwrap().passed;
        for n in ["phi_preserves_f", "rho_preserves_f", "sigma_preserves_f", "sigma_is_involution", "g_three_monomials", "b_cubic"] {
            assert!(passed(n), "{n}");
        }
        // b = ζ³ + ζ⁴ = 2cos(6π/7)
        let z = |k| c.zeta.pow(k);
        assert_eq!(c.b, z(3).add(&z(4)));
        let v = embed_unchecked(&c.b).value;
        assert!((v.re - 2.0 * (6.0 * std::f64::consts::PI / 7.0).cos()).abs() < 1e-12 && v.im.abs() < 1e-12);
    }

    #[test]
    fn coefficients_from_psi() {
        let c = ctx();
        // a₁ = 49 + 98(ζ² + ζ³ + ζ⁴ + ζ⁵), by expanding d₁³d₂ independently below
        let d = psi_diagonal(&c.tower);
        assert_eq!(c.a1, d[0].pow(3).mul(&d[1]));
        assert_eq!(c.a2, d[1].pow(3).mul(&d[2]));
        assert_eq!(c.a3, d[2].pow(3).mul(&d[0]));
        let z = |k| c.zeta.pow(k);
        let s = z(2).add(&z(3)).add(&z(4)).add(&z(5));
        assert_eq!(c.a1, FieldElement::int(49).add(&FieldElement::int(98).mul(&s)));
    }

    #[test]
    fn reference_forms_differ_from_computed() {
        let c = ctx();
        let reference = reference_coefficients(&c.tower);
        assert_ne!(reference[0], c.a1);
        assert!(!c.certificates.iter().find(|x| x.name == "a_closed_forms").unwrap().passed);
    }

    #[test]
    fn base_points_and_heptagon() {
        let c = ctx();
        let (pts, certs) = base_points(&c).unwrap();
        assert!(certs.iter().all(|x| x.passed));
        assert!(!zeta_cubed_point_on_f(&c).unwrap());
        let (base, certs) = base_heptagon(&c, &pts).unwrap();
        for x in &certs {
            assert!(x.passed, "{}: {}", x.name, x.detail);
        }
        // φ acts on the base heptagon by cyclic relabeling
        let moved = base.heptagon.map_lines(|l| crate::projgeom::act_line(&c.phi, l));
        assert_eq!(moved, base.heptagon.relabel(&[2, 3, 4, 5, 6, 7, 1]));
    }

    #[test]
    fn group_structure() {
        let c = ctx();
        let (g, certs) = generate_group(&c, 2000).unwrap();
        assert!(certs.iter().all(|x| x.passed), "{certs:?}");
        assert_eq!(g.order(), 168);
        let stats = g.order_statistics();
        assert_eq!(stats, BTreeMap::from([(1, 1), (2, 21), (3, 56), (4, 42), (7, 48)]));
        assert_eq!(g.sylow7_count(), 8);
        assert!(g.index_of(&c.phi.compose(&c.sigma)).is_some());
    }

    #[test]
    fn base_jacobian_and_finite_differences() {
        let c = ctx();
        let (pts, _) = base_points(&c).unwrap();
        let (base, _) = base_heptagon(&c, &pts).unwrap();
        let (spec, _) = choose_prime(&c.tower, PrimeRequest::SearchFrom(DEFAULT_PRIME_SEED)).unwrap();
        let (rep, certs) = certify_jacobian(&base, None, &spec, false).unwrap();
        assert!(certs.iter().all(|x| x.passed), "{certs:?}");
        assert_eq!(rep.base_rank_modular, 15);
        assert!(jacobian_finite_difference_error(&base.heptagon, 1e-3) < 1e-6);
    }

    #[test]
    fn bad_prime_is_replaced() {
        let c = ctx();
        let (spec, notes) = choose_prime(&c.tower, PrimeRequest::Exact(13)).unwrap();
        assert!(spec.p > 13);
        assert_eq!(notes.len(), 1);
    }
}
